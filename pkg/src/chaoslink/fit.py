"""Exponential-sum approximation of the DCSK conditional BER kernel.

The kernel ``Q_a(sqrt(g^2 / (2g + M)))`` is approximated by
``sum_r delta_r exp(-mu_r g)`` so that averaging over gamma-distributed SNRs
reduces to gamma moment generating functions.  Parameters are fitted with a
Levenberg-Marquardt loop on relative residuals, restarted from several
random seeds.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, FitError
from .special import dcsk_conditional_ber

DEFAULT_DOMAIN_DB = (0.0, 25.0)
DEFAULT_GRID_POINTS = 200
DEFAULT_RESTARTS = 16
DEFAULT_FIT_SEED = 20160101

_LOG_MU_BOUNDS = (math.log(1e-7), math.log(50.0))


@dataclass(frozen=True)
class ExpSumApprox:
    """Fitted ``{delta_r, mu_r}`` set for one (noise exponent, M) pair."""

    noise_a: float
    spreading_M: int
    terms: tuple
    fit_domain_db: tuple = DEFAULT_DOMAIN_DB
    max_rel_error: float = float("nan")
    source: str = "fit"

    def __post_init__(self):
        terms = tuple((float(d), float(m)) for d, m in self.terms)
        if not terms:
            raise ConfigError("approximation needs at least one term")
        if any(not (m > 0 and math.isfinite(m)) for _, m in terms):
            raise ConfigError("every decay rate mu must be positive")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "fit_domain_db", tuple(float(v) for v in self.fit_domain_db))

    @property
    def deltas(self) -> np.ndarray:
        return np.array([d for d, _ in self.terms])

    @property
    def mus(self) -> np.ndarray:
        return np.array([m for _, m in self.terms])

    def __call__(self, gamma):
        return expsum_eval(self, gamma)

    def to_dict(self) -> dict:
        return {
            "a": self.noise_a,
            "M": self.spreading_M,
            "terms": [{"delta": d, "mu": m} for d, m in self.terms],
            "max_rel_error": self.max_rel_error,
            "domain_db": list(self.fit_domain_db),
        }

    def to_json(self) -> str:
        # repr-exact floats; NaN is allowed for unmeasured errors
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "ExpSumApprox":
        try:
            return cls(
                noise_a=float(doc["a"]),
                spreading_M=int(doc["M"]),
                terms=tuple((t["delta"], t["mu"]) for t in doc["terms"]),
                fit_domain_db=tuple(doc.get("domain_db", DEFAULT_DOMAIN_DB)),
                max_rel_error=float(doc.get("max_rel_error", float("nan"))),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed approximation document: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "ExpSumApprox":
        return cls.from_dict(json.loads(text))


def expsum_eval(approx: ExpSumApprox, gamma):
    """``sum_r delta_r exp(-mu_r gamma)``, vectorized over ``gamma``."""
    g = np.asarray(gamma, dtype=float)
    out = np.zeros_like(g)
    for d, m in approx.terms:
        out = out + d * np.exp(-m * g)
    return out if out.ndim else float(out)


_TABLE2 = {
    1.0: ((0.1078, 0.4294, -0.009, 0.1788), (0.5424, 0.2477, 0.7834, 0.1044)),
    1.5: ((0.4140, 0.0955, 0.0928, -0.127), (0.2113, 0.6214, 0.1321, 0.6197)),
    2.0: ((0.2520, 0.3976, -0.611, 0.4621), (0.5162, 0.2243, 0.4096, 0.2243)),
    2.5: ((0.6083, -1.1060, 0.2360, 0.8107), (0.2541, 0.3982, 0.6922, 0.2534)),
}


def load_table2() -> list[ExpSumApprox]:
    """Published M = 32 parameter sets, verbatim and unverified.

    Some rows do not reproduce the kernel (e.g. the a = 1 deltas sum to 0.707
    instead of 0.5), so these are reference data only; use
    :func:`fit_expsum` for anything downstream.
    """
    out = []
    for a, (deltas, mus) in _TABLE2.items():
        out.append(ExpSumApprox(a, 32, tuple(zip(deltas, mus)), (float("nan"), float("nan")),
                                source="published"))
    return out


def db_grid(lo: float, hi: float, n: int) -> np.ndarray:
    return 10.0 ** (np.linspace(lo, hi, n) / 10.0)


@dataclass
class _Run:
    cost: float
    params: np.ndarray
    converged: bool
    iterations: int


def _model(params, gamma, R):
    delta = params[:R]
    mu = np.exp(params[R:])
    E = np.exp(-np.outer(gamma, mu))
    return E, delta, mu


def _residual(params, gamma, target, R):
    E, delta, _ = _model(params, gamma, R)
    return E @ delta / target - 1.0


def _jacobian(params, gamma, target, R):
    E, delta, mu = _model(params, gamma, R)
    inv = (1.0 / target)[:, None]
    # d/d(delta_r) = e^{-mu_r g};  d/d(log mu_r) = -delta_r mu_r g e^{-mu_r g}
    return np.hstack([E * inv, -(E * (delta * mu)) * gamma[:, None] * inv])


def _linear_deltas(mu, gamma, target):
    E = np.exp(-np.outer(gamma, mu)) / target[:, None]
    # column equilibration: the columns span tens of decades
    scale = np.linalg.norm(E, axis=0)
    scale[scale == 0] = 1.0
    x, *_ = np.linalg.lstsq(E / scale, np.ones_like(target), rcond=None)
    return x / scale


def levenberg_marquardt(params0, gamma, target, R, max_iter=1000,
                        ftol=1e-12, xtol=1e-12, gtol=1e-12) -> _Run:
    """Damped Gauss-Newton on relative residuals with Marquardt diagonal scaling.

    Convergence follows the MINPACK tests: both the actual and the predicted
    relative cost reductions below ``ftol``, a relative step below ``xtol``,
    or a scaled gradient below ``gtol``.
    """
    p = np.array(params0, dtype=float)
    r = _residual(p, gamma, target, R)
    cost = float(r @ r)
    lam = 1e-3
    n = p.size
    for it in range(1, max_iter + 1):
        J = _jacobian(p, gamma, target, R)
        D = np.sqrt(np.sum(J * J, axis=0))
        D[D == 0] = 1.0
        g = J.T @ r
        if cost == 0.0 or np.max(np.abs(g) / D) <= gtol * math.sqrt(cost):
            return _Run(cost, p, True, it)
        Js = J / D
        while True:
            # solve in D-scaled variables so the damping is scale-invariant
            A = np.vstack([Js, math.sqrt(lam) * np.eye(n)])
            b = np.concatenate([-r, np.zeros(n)])
            scaled, *_ = np.linalg.lstsq(A, b, rcond=None)
            trial = p + scaled / D
            trial[R:] = np.clip(trial[R:], *_LOG_MU_BOUNDS)
            rt = _residual(trial, gamma, target, R)
            ct = float(rt @ rt)
            lin = r + J @ (trial - p)
            predicted = (cost - float(lin @ lin)) / cost
            actual = (cost - ct) / cost if np.isfinite(ct) else -np.inf
            if actual > 0:
                step_size = np.linalg.norm(D * (trial - p))
                p_size = np.linalg.norm(D * p)
                p, r, cost = trial, rt, ct
                lam = max(lam / 3.0, 1e-15)
                if (actual <= ftol and predicted <= ftol) or step_size <= xtol * p_size:
                    return _Run(cost, p, True, it)
                break
            lam *= 4.0
            if lam > 1e20:
                # no descent direction left at working precision
                return _Run(cost, p, True, it)
    return _Run(cost, p, False, max_iter)


def _canonical(params, R):
    terms = sorted(zip(params[:R], np.exp(params[R:])), key=lambda t: (t[1], t[0]))
    return tuple((float(d), float(m)) for d, m in terms)


def fit_exponential_sum(gamma, target, R: int, restarts: int = DEFAULT_RESTARTS,
                        seed: int = DEFAULT_FIT_SEED, init: Optional[Sequence] = None,
                        threads: int = 1, max_iter: int = 1000):
    """Fit ``sum_r delta_r exp(-mu_r gamma)`` to ``target`` in relative least squares.

    Returns ``(terms, cost)`` with terms sorted by ascending mu.  ``init`` is an
    optional sequence of ``(delta, mu)`` pairs tried in addition to the
    random starts.
    """
    gamma = np.asarray(gamma, dtype=float)
    target = np.asarray(target, dtype=float)
    if R < 1:
        raise ConfigError(f"number of terms must be >= 1, got {R}")
    if np.any(target <= 0):
        raise ConfigError("fit target must be positive for relative weighting")
    rng = np.random.default_rng(seed)
    starts = []
    if init is not None:
        init = list(init)
        if len(init) != R:
            raise ConfigError(f"init has {len(init)} terms, expected {R}")
        d0 = np.array([t[0] for t in init], dtype=float)
        m0 = np.array([t[1] for t in init], dtype=float)
        starts.append(np.concatenate([d0, np.log(m0)]))
    for _ in range(restarts):
        mu = np.exp(rng.uniform(math.log(1e-3), math.log(2.0), R))
        starts.append(np.concatenate([_linear_deltas(mu, gamma, target), np.log(mu)]))

    def run(p0):
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            return levenberg_marquardt(p0, gamma, target, R, max_iter=max_iter)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            runs = list(pool.map(run, starts))
    else:
        runs = [run(p0) for p0 in starts]
    finite = [rn for rn in runs if np.isfinite(rn.cost)]
    if not finite:
        raise FitError("every restart diverged")
    best = min(finite, key=lambda rn: (rn.cost, _canonical(rn.params, R)))
    terms = _canonical(best.params, R)
    if not any(rn.converged for rn in finite):
        raise FitError("no restart converged within the iteration cap", best=(terms, best.cost))
    return terms, best.cost


def relative_error(approx: ExpSumApprox, lo_db: float, hi_db: float, n: int) -> float:
    """Max |approx/kernel - 1| over ``n`` points uniform in dB."""
    g = db_grid(lo_db, hi_db, n)
    exact = dcsk_conditional_ber(g, approx.spreading_M, approx.noise_a)
    return float(np.max(np.abs(expsum_eval(approx, g) / exact - 1.0)))


def fit_expsum(a: float, M: int, R: int = 4, grid_db=None,
               init: Optional[Sequence] = None, restarts: int = DEFAULT_RESTARTS,
               seed: int = DEFAULT_FIT_SEED, threads: int = 1) -> ExpSumApprox:
    """Fit an ``R``-term approximation of the kernel for noise exponent ``a`` and ``M``.

    ``grid_db`` is ``(lo, hi, n)``; the default is 200 points over [0, 25] dB.
    The reported ``max_rel_error`` is measured on a grid ten times denser.
    """
    if not a > 0:
        raise ConfigError(f"noise exponent must be positive, got {a}")
    if int(M) != M or M < 1:
        raise ConfigError(f"M must be a positive integer, got {M}")
    if int(R) != R or R < 1:
        raise ConfigError(f"number of terms must be >= 1, got {R}")
    lo, hi, n = grid_db if grid_db is not None else (*DEFAULT_DOMAIN_DB, DEFAULT_GRID_POINTS)
    n = int(n)
    if n < 4 * R:
        raise ConfigError(f"fit grid needs at least {4 * R} points, got {n}")
    if lo > 0.0 or hi < 25.0:
        raise ConfigError(f"fit grid must span at least [0, 25] dB, got [{lo}, {hi}]")
    g = db_grid(lo, hi, n)
    target = dcsk_conditional_ber(g, M, a)
    try:
        terms, _ = fit_exponential_sum(g, target, R, restarts=restarts, seed=seed,
                                       init=init, threads=threads)
    except FitError as exc:
        if exc.best is not None:
            best = ExpSumApprox(a, int(M), exc.best[0], (lo, hi))
            exc.best = best
        raise
    approx = ExpSumApprox(a, int(M), terms, (lo, hi))
    err = relative_error(approx, lo, hi, 10 * n)
    return ExpSumApprox(a, int(M), terms, (lo, hi), err)
