"""Link SNR distributions, fading and noise samplers, and the scenario model."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ConfigError
from .special import lambda0

EF = "EF"
DF = "DF"
PROTOCOLS = (EF, DF)


@dataclass(frozen=True)
class GammaDist:
    """Gamma law with density ``x^(shape-1) exp(-x/scale) / (scale^shape Gamma(shape))``."""

    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0 and math.isfinite(self.shape)):
            raise ConfigError(f"gamma shape must be positive, got {self.shape}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ConfigError(f"gamma scale must be positive, got {self.scale}")

    @property
    def mean(self) -> float:
        return self.shape * self.scale

    @property
    def var(self) -> float:
        return self.shape * self.scale ** 2

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            logf = ((self.shape - 1.0) * np.log(x) - x / self.scale
                    - math.lgamma(self.shape) - self.shape * math.log(self.scale))
        return np.exp(logf)


@dataclass(frozen=True)
class NoiseModel:
    """Additive white generalized Gaussian noise with exponent ``shape_a``."""

    shape_a: float = 2.0
    lambda0: float = field(init=False)

    def __post_init__(self):
        if not (self.shape_a > 0 and math.isfinite(self.shape_a)):
            raise ConfigError(f"noise shape a must be positive, got {self.shape_a}")
        object.__setattr__(self, "lambda0", lambda0(self.shape_a))


@dataclass(frozen=True)
class LinkSet:
    sr: GammaDist
    sd: GammaDist
    rd: GammaDist


@dataclass(frozen=True)
class Scenario:
    """Complete description of one relay network configuration and SNR sweep.

    Defaults follow the common test setup: unit distances, ``M = 32`` and a
    single relay antenna.
    """

    spreading_half_M: int = 32
    relay_antennas: int = 1
    dest_antennas: int = 1
    users_n: int = 1
    paths_L: int = 1
    fading_m: float = 1.0
    d_sr: float = 1.0
    d_sd: float = 1.0
    d_rd: float = 1.0
    noise: NoiseModel = field(default_factory=NoiseModel)
    protocol: str = EF
    snr_grid_db: tuple = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "snr_grid_db",
                           tuple(float(v) for v in self.snr_grid_db))
        self.validate()

    def validate(self):
        for label in ("spreading_half_M", "relay_antennas", "dest_antennas",
                      "users_n", "paths_L"):
            v = getattr(self, label)
            if isinstance(v, bool) or int(v) != v or v < 1:
                raise ConfigError(f"{label} must be an integer >= 1, got {v!r}")
        if not self.fading_m >= 0.5:
            raise ConfigError(f"Nakagami m must be >= 0.5, got {self.fading_m}")
        for label in ("d_sr", "d_sd", "d_rd"):
            v = getattr(self, label)
            if not (v > 0 and math.isfinite(v)):
                raise ConfigError(f"{label} must be positive, got {v}")
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"protocol must be one of {PROTOCOLS}, got {self.protocol!r}")
        grid = np.asarray(self.snr_grid_db)
        if not np.all(np.isfinite(grid)):
            raise ConfigError("snr grid must be finite")
        if grid.size > 1 and np.any(np.diff(grid) <= 0):
            raise ConfigError("snr grid must be strictly ascending")

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def build_links(sc: Scenario, mean_snr_linear: float) -> LinkSet:
    """Gamma laws of the S-R, S-D and R-D combined link SNRs at mean SNR ``mean_snr_linear``."""
    if not (mean_snr_linear > 0 and math.isfinite(mean_snr_linear)):
        raise ConfigError(f"mean SNR must be positive, got {mean_snr_linear}")
    sc.validate()
    g = float(mean_snr_linear)
    m, n, L = sc.fading_m, sc.users_n, sc.paths_L
    MR, MD = sc.relay_antennas, sc.dest_antennas
    return LinkSet(
        sr=GammaDist(MR * m * L, g / (2 * MR * sc.d_sr ** 2 * m * n * L)),
        sd=GammaDist(MD * m * L, g / (2 * MD * sc.d_sd ** 2 * m * n * L)),
        rd=GammaDist(MR * MD * m * L, g / (2 * MR * MD * sc.d_rd ** 2 * m * n * L)),
    )


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator fully determined by ``(seed, stream)``."""
    ss = np.random.SeedSequence(entropy=int(seed) & (2 ** 64 - 1), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))


def sample_gamma(dist: GammaDist, rng: np.random.Generator, size=None):
    """Draw from ``dist`` (Marsaglia-Tsang squeeze with shape boosting, via numpy)."""
    return rng.gamma(dist.shape, dist.scale, size=size)


def sample_nakagami_envelope(m: float, omega: float, rng: np.random.Generator, size=None):
    """Nakagami-m envelope: square root of a gamma(m, omega/m) power draw."""
    if not m >= 0.5:
        raise ConfigError(f"Nakagami m must be >= 0.5, got {m}")
    if not omega > 0:
        raise ConfigError(f"omega must be positive, got {omega}")
    return np.sqrt(rng.gamma(m, omega / m, size=size))


def sample_ggn(noise: NoiseModel, sigma: float, rng: np.random.Generator, size=None):
    """Zero-mean generalized Gaussian noise with standard deviation ``sigma``.

    ``|X| = G^(1/a) / lambda0`` with ``G ~ gamma(1/a, 1)`` has unit variance;
    a random sign makes it symmetric.
    """
    if not sigma > 0:
        raise ConfigError(f"sigma must be positive, got {sigma}")
    a = noise.shape_a
    mag = rng.standard_gamma(1.0 / a, size=size) ** (1.0 / a) / noise.lambda0
    sign = np.where(rng.random(size=size) < 0.5, -1.0, 1.0)
    return sigma * sign * mag


def sample_ggn_fast(noise: NoiseModel, sigma: float, rng: np.random.Generator, size=None):
    """Like :func:`sample_ggn` but uses the direct normal/Laplace samplers for a = 2 and a = 1."""
    if noise.shape_a == 2.0:
        return rng.normal(0.0, sigma, size=size)
    if noise.shape_a == 1.0:
        return rng.laplace(0.0, sigma / math.sqrt(2.0), size=size)
    return sample_ggn(noise, sigma, rng, size=size)
