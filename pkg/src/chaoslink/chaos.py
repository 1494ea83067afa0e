"""Chaotic reference generation and the DCSK modulator/correlator.

References come from the second-order Chebyshev map ``x -> 1 - 2 x^2`` on
[-1, 1].  Each reference is rescaled to unit mean power so that the per-bit
energy of a ``2M``-chip frame is exactly ``2M``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .errors import ConfigError, DegenerateSeed

# Seeds whose orbits land on a fixed point (0.5 or -1) within two steps.
_DEGENERATE = (-1.0, -1 / math.sqrt(2), -0.5, 0.0, 0.5, 1 / math.sqrt(2), 1.0)
_FIXED_POINTS = (-1.0, 0.5)
_SEED_ATOL = 1e-12


def chebyshev_map(x):
    return 1.0 - 2.0 * x * x


def _check_seed(seed: float):
    if not (-1.0 <= seed <= 1.0) or not math.isfinite(seed):
        raise DegenerateSeed(f"seed {seed!r} outside the map's interval [-1, 1]")
    for bad in _DEGENERATE:
        if abs(seed - bad) <= _SEED_ATOL:
            raise DegenerateSeed(f"seed {seed!r} collapses onto a fixed point")


def chebyshev_orbit(seed: float, length: int) -> np.ndarray:
    """Raw orbit ``f(seed), f(f(seed)), ...`` of ``length`` points (seed excluded)."""
    _check_seed(seed)
    out = np.empty(length)
    x = float(seed)
    for k in range(length):
        x = 1.0 - 2.0 * x * x
        for fp in _FIXED_POINTS:
            if abs(x - fp) <= _SEED_ATOL:
                raise DegenerateSeed(f"orbit of {seed!r} reached fixed point {fp}")
        out[k] = x
    return out


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ChaoticSequence:
    """One power-normalized chaotic reference.

    ``generator_state`` is the last raw orbit value, used to continue the orbit
    into the next frame.
    """

    samples: np.ndarray
    generator_state: float

    def __post_init__(self):
        object.__setattr__(self, "samples", _readonly(self.samples))

    def __len__(self):
        return self.samples.size

    @property
    def power(self) -> float:
        return float(np.mean(self.samples ** 2))


@dataclass(frozen=True)
class ChaoticFrame:
    reference: ChaoticSequence
    data_bit: int
    chips: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "chips", _readonly(self.chips))


@dataclass(frozen=True)
class ReceivedFrame:
    chips: np.ndarray

    def __post_init__(self):
        chips = _readonly(self.chips)
        if chips.ndim != 1 or chips.size < 2 or chips.size % 2:
            raise ConfigError(f"received frame needs an even length >= 2, got {chips.size}")
        object.__setattr__(self, "chips", chips)


def normalize_power(raw: np.ndarray) -> np.ndarray:
    """Scale the last axis to unit mean square."""
    rms = np.sqrt(np.mean(raw * raw, axis=-1, keepdims=True))
    return raw / rms


def generate_chaotic(seed_state: float, length: int) -> ChaoticSequence:
    """Deterministic unit-power chaotic reference of ``length`` samples."""
    if int(length) != length or length < 1:
        raise ConfigError(f"length must be a positive integer, got {length!r}")
    raw = chebyshev_orbit(float(seed_state), int(length))
    if not np.any(raw):
        raise DegenerateSeed(f"orbit of {seed_state!r} has zero power")
    return ChaoticSequence(normalize_power(raw), float(raw[-1]))


def chaotic_stream(seed_state: float, length: int) -> Iterator[ChaoticSequence]:
    """Successive references continuing one map orbit across frames."""
    state = seed_state
    while True:
        seq = generate_chaotic(state, length)
        state = seq.generator_state
        yield seq


def chaotic_batch(seeds: np.ndarray, length: int) -> np.ndarray:
    """Unit-power references for many seeds at once, shape ``(len(seeds), length)``.

    Seeds are expected to be generic draws from (-1, 1); the measure-zero
    degenerate seeds are not screened here.
    """
    x = np.asarray(seeds, dtype=float).copy()
    raw = np.empty((x.size, length))
    for k in range(length):
        x = 1.0 - 2.0 * x * x
        raw[:, k] = x
    return normalize_power(raw)


def modulate(bit: int, reference: ChaoticSequence) -> ChaoticFrame:
    """DCSK frame: the reference followed by ``bit`` times the reference."""
    if bit not in (1, -1):
        raise ConfigError(f"data bit must be +1 or -1, got {bit!r}")
    if len(reference) < 1:
        raise ConfigError("reference must hold at least one sample")
    x = reference.samples
    return ChaoticFrame(reference, int(bit), np.concatenate([x, bit * x]))


def receive(frame: ChaoticFrame, phi: float = 1.0, noise=None) -> ReceivedFrame:
    """Apply a flat fading gain and optional additive noise to a frame."""
    chips = phi * frame.chips
    if noise is not None:
        chips = chips + np.asarray(noise, dtype=float)
    return ReceivedFrame(chips)


def correlate_detect(rx) -> tuple[int, float]:
    """Correlate the two frame halves and threshold at zero (ties decide +1)."""
    chips = rx.chips if isinstance(rx, ReceivedFrame) else ReceivedFrame(rx).chips
    M = chips.size // 2
    stat = float(np.dot(chips[:M], chips[M:]))
    return (1 if stat >= 0 else -1), stat


def correlate_batch(rx: np.ndarray) -> np.ndarray:
    """Correlator statistics for a ``(frames, 2M)`` array of received chips."""
    M = rx.shape[-1] // 2
    return np.einsum("ij,ij->i", rx[:, :M], rx[:, M:])
