"""Special functions: incomplete gamma, generalized Q-function, the DCSK
conditional BER kernel, and the Moschopoulos density of a gamma sum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, DomainError, TruncationError

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 500


def _series_lower(s, x, log_gamma_s1):
    """Regularized lower incomplete gamma P(s, x) by its power series (x < s + 1)."""
    total = np.full(x.shape, 1.0 / s)
    term = total.copy()
    active = np.arange(x.size)
    ap = s
    for _ in range(_MAX_ITER):
        ap += 1.0
        xa = x[active]
        term[active] *= xa / ap
        total[active] += term[active]
        done = np.abs(term[active]) < np.abs(total[active]) * _EPS
        active = active[~done]
        if active.size == 0:
            break
    else:
        raise TruncationError("incomplete gamma series did not converge")
    # total * x^s e^-x / Gamma(s) with Gamma(s) = Gamma(s + 1) / s
    with np.errstate(divide="ignore"):
        logpre = s * np.log(x) - x - log_gamma_s1 + math.log(s)
    return total * np.exp(logpre)


def _cf_upper(s, x, log_gamma_s):
    """Regularized upper incomplete gamma Q(s, x) by modified Lentz (x >= s + 1)."""
    b = x + 1.0 - s
    c = np.full(x.shape, 1.0 / _TINY)
    d = 1.0 / b
    h = d.copy()
    active = np.arange(x.size)
    for i in range(1, _MAX_ITER + 1):
        an = -i * (i - s)
        b[active] += 2.0
        dd = an * d[active] + b[active]
        dd = np.where(np.abs(dd) < _TINY, _TINY, dd)
        cc = b[active] + an / c[active]
        cc = np.where(np.abs(cc) < _TINY, _TINY, cc)
        dd = 1.0 / dd
        delta = dd * cc
        d[active] = dd
        c[active] = cc
        h[active] *= delta
        done = np.abs(delta - 1.0) < 4 * _EPS
        active = active[~done]
        if active.size == 0:
            break
    else:
        raise TruncationError("incomplete gamma continued fraction did not converge")
    return np.exp(s * np.log(x) - x - log_gamma_s) * h


def gammainc_pair(s: float, x):
    """Return the regularized lower and upper incomplete gamma ``(P, Q)``.

    The power series is used below ``x = s + 1`` and the continued fraction
    above it; whichever of P, Q is computed directly is accurate to full
    relative precision and the other is its complement.
    """
    if not s > 0:
        raise DomainError(f"incomplete gamma needs shape > 0, got {s}")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise DomainError("incomplete gamma needs x >= 0")
    flat = x.ravel()
    lower = np.empty_like(flat)
    upper = np.empty_like(flat)
    use_series = flat < s + 1.0
    zero = flat == 0.0
    lower[zero] = 0.0
    upper[zero] = 1.0

    idx = np.flatnonzero(use_series & ~zero)
    if idx.size:
        p = _series_lower(s, flat[idx], math.lgamma(s + 1.0))
        lower[idx] = p
        upper[idx] = 1.0 - p
    # far tail: Gamma(s, x) / Gamma(s) < 1e-320, below double range
    with np.errstate(invalid="ignore"):
        log_lead = s * np.log(np.maximum(flat, 1.0)) - flat - math.lgamma(s)
    far = ~use_series & (log_lead < -740.0)
    lower[far] = 1.0
    upper[far] = 0.0
    idx = np.flatnonzero(~use_series & ~far & np.isfinite(flat))
    if idx.size:
        q = _cf_upper(s, flat[idx], math.lgamma(s))
        upper[idx] = q
        lower[idx] = 1.0 - q
    inf = np.isinf(flat)
    lower[inf] = 1.0
    upper[inf] = 0.0
    return lower.reshape(x.shape), upper.reshape(x.shape)


def gammaincc(s: float, x):
    """Regularized upper incomplete gamma ``Gamma(s, x) / Gamma(s)``."""
    q = gammainc_pair(s, x)[1]
    return q if q.ndim else float(q)


def gammainc(s: float, x):
    """Regularized lower incomplete gamma ``gamma(s, x) / Gamma(s)``."""
    p = gammainc_pair(s, x)[0]
    return p if p.ndim else float(p)


def lambda0(a: float) -> float:
    """Scale constant making the generalized Gaussian density unit-variance."""
    if not a > 0:
        raise DomainError(f"noise shape must be positive, got {a}")
    return math.exp(0.5 * (math.lgamma(3.0 / a) - math.lgamma(1.0 / a)))


def ggn_density(a: float, u):
    """Unit-variance zero-mean generalized Gaussian density with exponent ``a``."""
    lam = lambda0(a)
    norm = a * lam / (2.0 * math.gamma(1.0 / a))
    return norm * np.exp(-((lam * np.abs(u)) ** a))


def q_generalized(a: float, x):
    """Tail probability Q_a(x) of the unit-variance generalized Gaussian.

    ``Q_a(x) = Gamma(1/a, (L0 |x|)^a) / (2 Gamma(1/a))`` for ``x >= 0`` and
    ``1 - Q_a(-x)`` otherwise.  ``a = 2`` gives the Gaussian Q-function and
    ``a = 1`` the Laplacian tail.
    """
    if not a > 0:
        raise DomainError(f"Q_a needs a > 0, got {a}")
    x = np.asarray(x, dtype=float)
    lam = lambda0(a)
    tail = 0.5 * gammainc_pair(1.0 / a, (lam * np.abs(x)) ** a)[1]
    out = np.where(x >= 0, tail, 1.0 - tail)
    return out if out.ndim else float(out)


def dcsk_conditional_ber(gamma, M: int, a: float = 2.0):
    """DCSK bit error probability at per-bit SNR ``gamma`` with ``2M`` chips per bit.

    Evaluates ``Q_a(sqrt(gamma^2 / (2 gamma + M)))``.
    """
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise DomainError("SNR must be nonnegative")
    if M < 1:
        raise DomainError(f"M must be a positive integer, got {M}")
    return q_generalized(a, np.sqrt(g * g / (2.0 * g + M)))


@dataclass(frozen=True)
class GammaSumSeries:
    """Density of a sum of independent gamma variables as a gamma mixture.

    ``f(x) = sum_i c * eta_i * g(x; rho + i, b0)`` where ``g(.; k, b)`` is the
    gamma density with shape ``k`` and scale ``b``.  The mixture weights
    ``c * eta_i`` are nonnegative and sum to one, so ``tail_bound`` (the weight
    dropped by truncation) is the exact probability mass not represented.
    """

    rho: float
    b0: float
    c: float
    eta: tuple
    truncation_index: int
    tail_bound: float

    @property
    def weights(self) -> np.ndarray:
        return self.c * np.asarray(self.eta)

    @property
    def shapes(self) -> np.ndarray:
        return self.rho + np.arange(len(self.eta))

    @property
    def is_single_gamma(self) -> bool:
        return len(self.eta) == 1

    def mean(self) -> float:
        w = self.weights
        return float(np.sum(w * self.shapes) * self.b0 / np.sum(w))


def gamma_sum_pdf(components: Sequence, tolerance: float = 1e-12,
                  max_terms: int = 512) -> GammaSumSeries:
    """Build the Moschopoulos series for the sum of independent gamma variables.

    ``components`` are objects with ``shape`` and ``scale`` attributes.  When
    every scale is equal the result is the exact single gamma with summed shape.
    Terms are added until the dropped mixture weight falls below ``tolerance``.
    """
    if len(components) == 0:
        raise ConfigError("gamma sum needs at least one component")
    if not tolerance > 0:
        raise ConfigError("tolerance must be positive")
    shapes = np.array([float(d.shape) for d in components])
    scales = np.array([float(d.scale) for d in components])
    if np.any(shapes <= 0) or np.any(scales <= 0):
        raise ConfigError("gamma components need positive shape and scale")

    b0 = float(scales.min())
    rho = float(shapes.sum())
    ratio = b0 / scales
    log_c = float(np.sum(shapes * np.log(ratio)))
    c = math.exp(log_c)
    ratio = np.where(np.abs(1.0 - ratio) <= 1e-12, 1.0, ratio)
    one_minus = 1.0 - ratio
    if not np.any(one_minus > 0):
        return GammaSumSeries(rho, b0, 1.0, (1.0,), 0, 0.0)
    if c == 0.0:
        raise TruncationError("mixture normalizer underflows; components too disparate")

    eta = [1.0]
    z = [0.0]  # z[0] unused
    acc = math.fsum([c])
    remaining = 1.0 - acc
    for i in range(max_terms - 1):
        j = i + 1
        z.append(float(np.sum(shapes * one_minus ** j)) / j)
        nxt = math.fsum(t * z[t] * eta[j - t] for t in range(1, j + 1)) / j
        if not math.isfinite(nxt):
            raise TruncationError("Moschopoulos coefficients overflowed")
        eta.append(nxt)
        acc += c * nxt
        remaining = max(1.0 - acc, 0.0)
        if remaining < tolerance:
            return GammaSumSeries(rho, b0, c, tuple(eta), len(eta) - 1, remaining)
    raise TruncationError(
        f"gamma-sum series kept {remaining:.3g} of its mass outside "
        f"{max_terms} terms (tolerance {tolerance:.3g})")


def _log_gamma_terms(series: GammaSumSeries):
    k = series.shapes
    lg = np.array([math.lgamma(v) for v in k])
    with np.errstate(divide="ignore"):
        logw = np.log(series.weights)
    return k, lg, logw


def gamma_sum_eval(series: GammaSumSeries, x):
    """Evaluate the series density at ``x >= 0`` with log-domain terms."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("gamma-sum density is defined for x >= 0")
    k, lg, logw = _log_gamma_terms(series)
    xb = x.reshape(-1, 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        logt = (logw - lg - k * math.log(series.b0)
                + (k - 1.0) * np.log(xb) - xb / series.b0)
        terms = np.exp(logt)
    # x = 0: only shape-1 terms are finite and nonzero
    zero = xb[:, 0] == 0.0
    if np.any(zero):
        at0 = np.where(k < 1.0, np.inf,
                       np.where(k == 1.0, np.exp(logw - math.log(series.b0)), 0.0))
        terms[zero] = at0
    out = terms.sum(axis=1).reshape(x.shape)
    return out if out.ndim else float(out)


def gamma_sum_cdf(series: GammaSumSeries, x):
    """Distribution function of the series, ``sum_i w_i P(rho + i, x / b0)``."""
    x = np.asarray(x, dtype=float)
    flat = x.ravel() / series.b0
    total = np.zeros_like(flat)
    for w, k in zip(series.weights, series.shapes):
        total += w * gammainc_pair(float(k), flat)[0]
    out = total.reshape(x.shape)
    return out if out.ndim else float(out)
