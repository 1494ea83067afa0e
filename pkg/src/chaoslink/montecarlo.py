"""Monte Carlo oracles.

Two simulators live here:

* a waveform simulator that pushes DCSK frames through generalized Gaussian
  noise and counts hard-decision errors of the correlator;
* a semi-analytic system simulator that draws link SNRs from their gamma
  laws and averages conditional error probabilities of the EF and DF relay.

Trials are split into fixed-size chunks.  Chunk ``i`` always draws from the
counter-based stream ``(seed, i)`` and chunk results are merged in index
order, so estimates do not depend on the number of worker threads.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy import special as sp

from .analytic import MONTE_CARLO, AberCurve
from .channel import DF, EF, NoiseModel, Scenario, build_links, db_to_linear, make_rng, sample_ggn_fast
from .chaos import chaotic_batch, correlate_batch
from .errors import ConfigError
from .fit import ExpSumApprox, expsum_eval

DEFAULT_CHUNK = 1 << 18
WAVEFORM_CHUNK = 1 << 15
DEFAULT_TRIALS = 10 ** 6
EXACT = "exact"


@dataclass(frozen=True)
class McEstimate:
    """Mean of per-trial error probabilities with its standard error.

    ``std_err`` is the population standard deviation of the per-trial values
    over ``sqrt(trials)``.  For hard decisions (values 0 or 1) this is exactly
    ``sqrt(p (1 - p) / trials)``; for conditional probabilities it is smaller.
    """

    ber_hat: float
    std_err: float
    trials: int
    errors_observed: int
    master_seed: int


class _Moments:
    """Count, sum and centred sum of squares, merged with Chan's update."""

    __slots__ = ("n", "total", "m2")

    def __init__(self, n=0, total=0.0, m2=0.0):
        self.n, self.total, self.m2 = n, total, m2

    @classmethod
    def of(cls, values: np.ndarray) -> "_Moments":
        n = values.size
        total = math.fsum(values)
        dev = values - total / n
        return cls(n, total, float(np.dot(dev, dev)))

    def merge(self, other: "_Moments") -> "_Moments":
        if self.n == 0:
            return other
        n = self.n + other.n
        delta = other.total / other.n - self.total / self.n
        m2 = self.m2 + other.m2 + delta * delta * self.n * other.n / n
        return _Moments(n, math.fsum((self.total, other.total)), m2)

    def estimate(self, seed: int) -> McEstimate:
        mean = self.total / self.n
        se = math.sqrt(max(self.m2, 0.0) / self.n) / math.sqrt(self.n)
        return McEstimate(mean, se, self.n, int(round(mean * self.n)), int(seed))


def _chunks(trials: int, chunk: int):
    full, rest = divmod(int(trials), int(chunk))
    sizes = [chunk] * full + ([rest] if rest else [])
    return list(enumerate(sizes))


def _map(fn, items, threads: int):
    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def resolve_seed(seed) -> int:
    if seed is None:
        raise ConfigError("a master seed is required for Monte Carlo runs")
    return int(seed) & (2 ** 64 - 1)


# -- kernels ---------------------------------------------------------------

def reference_kernel(a: float, M: int) -> Callable[[np.ndarray], np.ndarray]:
    """Exact conditional BER evaluated through scipy / elementary closed forms.

    Independent of :mod:`chaoslink.special` so that the simulator checks the
    analytic path rather than sharing code with it.
    """
    if a == 2.0:
        def tail(x):
            return 0.5 * sp.erfc(x / math.sqrt(2.0))
    elif a == 1.0:
        def tail(x):
            return 0.5 * np.exp(-math.sqrt(2.0) * x)
    else:
        lam = math.sqrt(sp.gamma(3.0 / a) / sp.gamma(1.0 / a))

        def tail(x):
            return 0.5 * sp.gammaincc(1.0 / a, (lam * x) ** a)

    def kernel(g):
        return tail(np.sqrt(g * g / (2.0 * g + M)))
    return kernel


def _kernel_fn(sc: Scenario, kernel) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(kernel, ExpSumApprox):
        return lambda g: expsum_eval(kernel, g)
    if kernel == EXACT:
        return reference_kernel(sc.noise.shape_a, sc.spreading_half_M)
    if callable(kernel):
        return kernel
    raise ConfigError(f"unknown kernel {kernel!r}")


# -- waveform simulator ----------------------------------------------------

def chip_noise_sigma(M: int, snr_linear: float, ref_power: float = 1.0) -> float:
    """Per-chip noise standard deviation for per-bit SNR ``snr_linear``.

    With bit energy ``2 M P`` and two-sided noise density ``N0/2 = sigma^2``,
    ``E_b / N0 = M P / sigma^2``.
    """
    return math.sqrt(ref_power * M / snr_linear)


def _waveform_chunk(M, sigma, noise, seed, phi=1.0):
    def run(item):
        idx, n = item
        rng = make_rng(seed, idx)
        ref = chaotic_batch(rng.uniform(-1.0, 1.0, n), M)
        bits = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        tx = np.concatenate([ref, bits[:, None] * ref], axis=1)
        rx = phi * tx + sample_ggn_fast(noise, sigma, rng, size=tx.shape)
        decided = np.where(correlate_batch(rx) >= 0.0, 1.0, -1.0)
        return int(np.count_nonzero(decided != bits)), n
    return run


def sim_waveform_ber(M: int, snr_db: float, noise: NoiseModel, trials: int, seed,
                     threads: int = 1, chunk: int = WAVEFORM_CHUNK) -> McEstimate:
    """Hard-decision BER of the DCSK correlator at per-bit SNR ``snr_db``."""
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    if M < 1:
        raise ConfigError("M must be >= 1")
    seed = resolve_seed(seed)
    sigma = chip_noise_sigma(M, float(db_to_linear(snr_db)))
    results = _map(_waveform_chunk(int(M), sigma, noise, seed), _chunks(trials, chunk), threads)
    errors = sum(e for e, _ in results)
    p = errors / trials
    return McEstimate(p, math.sqrt(p * (1.0 - p) / trials), int(trials), errors, seed)


# -- semi-analytic system simulator ----------------------------------------

def _system_chunk(sc, grid_db, kern, seed):
    unit = build_links(sc, 1.0)
    gains = db_to_linear(grid_db)

    def run(item):
        idx, n = item
        rng = make_rng(seed, idx)
        # standard draws shared by every grid point and both protocols
        g_sr = rng.standard_gamma(unit.sr.shape, n)
        g_sd = rng.standard_gamma(unit.sd.shape, n)
        g_rd = rng.standard_gamma(unit.rd.shape, n)
        out = []
        for gain in gains:
            sr = g_sr * (unit.sr.scale * gain)
            sd = g_sd * (unit.sd.scale * gain)
            rd = g_rd * (unit.rd.scale * gain)
            p_d = kern(sd + rd)
            p_sr = kern(sr)
            p_df = p_sr * kern(sd) + (1.0 - p_sr) * p_d
            out.append((_Moments.of(p_d), _Moments.of(p_df)))
        return out
    return run


def sim_system_grid(sc: Scenario, grid_db, trials: int, seed, kernel=EXACT,
                    threads: int = 1, chunk: int = DEFAULT_CHUNK) -> dict:
    """Semi-analytic EF and DF estimates at every point of ``grid_db``.

    Returns ``{"EF": [McEstimate, ...], "DF": [...]}`` in grid order.
    """
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    seed = resolve_seed(seed)
    grid = np.asarray(grid_db, dtype=float)
    kern = _kernel_fn(sc, kernel)
    results = _map(_system_chunk(sc, grid, kern, seed), _chunks(trials, chunk), threads)
    ef = [_Moments() for _ in grid]
    df = [_Moments() for _ in grid]
    for per_chunk in results:
        for j, (m_ef, m_df) in enumerate(per_chunk):
            ef[j] = ef[j].merge(m_ef)
            df[j] = df[j].merge(m_df)
    return {EF: [m.estimate(seed) for m in ef], DF: [m.estimate(seed) for m in df]}


def sim_system_ber(sc: Scenario, mean_snr_db: float, trials: int, seed, kernel=EXACT,
                   threads: int = 1, chunk: int = DEFAULT_CHUNK) -> dict:
    """Semi-analytic EF and DF estimates at one mean SNR: ``{"EF": est, "DF": est}``."""
    res = sim_system_grid(sc, [mean_snr_db], trials, seed, kernel, threads, chunk)
    return {k: v[0] for k, v in res.items()}


def sweep(sc: Scenario, trials_per_point: int = DEFAULT_TRIALS, seed=0, kernel=EXACT,
          threads: int = 1, chunk: int = DEFAULT_CHUNK) -> AberCurve:
    """Monte Carlo curve over ``sc.snr_grid_db`` for ``sc.protocol``, with std errors."""
    grid = np.asarray(sc.snr_grid_db, dtype=float)
    if grid.size == 0:
        return AberCurve(grid, grid.copy(), sc.protocol, MONTE_CARLO, std_err=grid.copy())
    ests = sim_system_grid(sc, grid, trials_per_point, seed, kernel, threads, chunk)[sc.protocol]
    return AberCurve(grid, np.array([e.ber_hat for e in ests]), sc.protocol, MONTE_CARLO,
                     std_err=np.array([e.std_err for e in ests]))
