"""Closed-form average BER for the error-free (EF) and decode-and-forward (DF) relay.

Every average reduces to gamma moment generating functions:
``E[exp(-mu X)] = (1 + mu b)^(-k)`` for ``X ~ gamma(k, b)``.  The destination
SNR (S-D plus R-D) is a gamma mixture, so its average is a weighted sum of
such terms.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .channel import DF, EF, GammaDist, LinkSet, Scenario, build_links, db_to_linear
from .errors import ChaosLinkError
from .fit import ExpSumApprox
from .special import GammaSumSeries, gamma_sum_pdf

BER_FLOOR = 1e-300
EQUAL_SCALE_RTOL = 1e-12

EQUAL_SCALE = "analytic-equal-scale"
SERIES = "analytic-series"
MONTE_CARLO = "monte-carlo"


@dataclass
class AberCurve:
    snr_db: np.ndarray
    ber: np.ndarray
    protocol: str
    provenance: str
    std_err: Optional[np.ndarray] = None
    valid: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.snr_db = np.asarray(self.snr_db, dtype=float)
        self.ber = np.asarray(self.ber, dtype=float)
        if self.snr_db.shape != self.ber.shape:
            raise ValueError("snr_db and ber must have equal lengths")
        if self.std_err is not None:
            self.std_err = np.asarray(self.std_err, dtype=float)
        if self.valid is None:
            self.valid = np.isfinite(self.ber)

    def __len__(self):
        return self.snr_db.size

    def rows(self):
        for i in range(len(self)):
            row = [fmt_float(self.snr_db[i]), fmt_ber(self.ber[i]), self.protocol, self.provenance]
            if self.std_err is not None:
                row.append(fmt_float(self.std_err[i]))
            yield row

    def header(self):
        cols = ["snr_db", "ber", "protocol", "provenance"]
        if self.std_err is not None:
            cols.append("std_err")
        return cols

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.header()) + "\n")
        for row in self.rows():
            buf.write(",".join(row) + "\n")
        return buf.getvalue()


def fmt_float(v: float) -> str:
    return format(float(v), ".17g")


def fmt_ber(v: float) -> str:
    if not math.isfinite(v):
        return "nan"
    return fmt_float(max(float(v), BER_FLOOR))


def _equal_scales(b1: float, b2: float) -> bool:
    return abs(b1 - b2) <= EQUAL_SCALE_RTOL * max(b1, b2)


def destination_pdf(links: LinkSet, tolerance: float = 1e-12,
                    published_sqrt2: bool = False) -> GammaSumSeries:
    """Density of the combined S-D plus R-D SNR at the destination.

    Equal scales give a single gamma with summed shape; unequal scales give the
    Moschopoulos mixture.  ``published_sqrt2`` reproduces the published equal-scale
    rate ``sqrt(2) / beta_SD`` instead of the gamma-sum rate ``1 / beta_SD``;
    it exists for comparison only and does not match the simulated model.
    """
    sd, rd = links.sd, links.rd
    if _equal_scales(sd.scale, rd.scale):
        scale = sd.scale / math.sqrt(2.0) if published_sqrt2 else sd.scale
        return GammaSumSeries(sd.shape + rd.shape, scale, 1.0, (1.0,), 0, 0.0)
    return gamma_sum_pdf([sd, rd], tolerance)


def aber_series(series: GammaSumSeries, approx: ExpSumApprox) -> float:
    """Average of the exponential-sum kernel over a gamma mixture density."""
    w = series.weights
    k = series.shapes
    total = 0.0
    for d, mu in approx.terms:
        total += d * float(np.sum(w * np.exp(-k * math.log1p(mu * series.b0))))
    return total


def aber_single_link(dist: GammaDist, approx: ExpSumApprox) -> float:
    """Average kernel over one gamma link: ``sum_r delta_r (1 + mu_r beta)^(-alpha)``."""
    return math.fsum(d * math.exp(-dist.shape * math.log1p(mu * dist.scale))
                     for d, mu in approx.terms)


def clamp_ber(p: float) -> float:
    return min(max(p, BER_FLOOR), 0.5)


def df_compose(ber_sr: float, ber_sd: float, ber_d: float) -> float:
    """DF end-to-end error: relay wrong and S-D wrong, or relay right and destination wrong."""
    return ber_sr * ber_sd + (1.0 - ber_sr) * ber_d


def _links_at(sc: Scenario, mean_snr_db: float) -> LinkSet:
    return build_links(sc, float(db_to_linear(mean_snr_db)))


def aber_ef(sc: Scenario, approx: ExpSumApprox, mean_snr_db: float,
            tolerance: float = 1e-12, published_sqrt2: bool = False, clamp: bool = True) -> float:
    """EF average BER at mean SNR ``mean_snr_db`` (dB)."""
    series = destination_pdf(_links_at(sc, mean_snr_db), tolerance, published_sqrt2)
    p = aber_series(series, approx)
    return clamp_ber(p) if clamp else p


def aber_df(sc: Scenario, approx: ExpSumApprox, mean_snr_db: float,
            tolerance: float = 1e-12, published_sqrt2: bool = False, clamp: bool = True) -> float:
    """DF average BER at mean SNR ``mean_snr_db`` (dB)."""
    links = _links_at(sc, mean_snr_db)
    p_sr = aber_single_link(links.sr, approx)
    p_sd = aber_single_link(links.sd, approx)
    p_d = aber_series(destination_pdf(links, tolerance, published_sqrt2), approx)
    p = df_compose(p_sr, p_sd, p_d)
    return clamp_ber(p) if clamp else p


def _psi_tilde_gamma(log_psi: float, shape: float, rate: float, approx: ExpSumApprox):
    """Per-term ``psi * delta_r * Gamma(shape) / (rate + mu_r)^shape`` of the EF sums."""
    return [d * math.exp(log_psi + math.lgamma(shape) - shape * math.log(rate + mu))
            for d, mu in approx.terms]


def aber_df_expanded(sc: Scenario, approx: ExpSumApprox, mean_snr_db: float,
                     tolerance: float = 1e-12) -> float:
    """DF average BER as the expanded triple sum, term by term.

    Uses the ``psi Gamma(m) / (beta + mu)^m`` parameterization with rates
    rather than the MGF form; kept as an independent check on :func:`aber_df`.
    """
    links = _links_at(sc, mean_snr_db)

    def link_terms(dist):
        rate = 1.0 / dist.scale
        log_psi = dist.shape * math.log(rate) - math.lgamma(dist.shape)
        return _psi_tilde_gamma(log_psi, dist.shape, rate, approx)

    sr = link_terms(links.sr)
    sd = link_terms(links.sd)
    series = destination_pdf(links, tolerance)
    rate = 1.0 / series.b0
    d_terms = []
    for w, k in zip(series.weights, series.shapes):
        if w == 0.0:
            continue
        log_psi = math.log(w) - math.lgamma(k) + k * math.log(rate)
        d_terms.extend(_psi_tilde_gamma(log_psi, k, rate, approx))
    first = math.fsum(a * b for a in sr for b in sd)
    second = math.fsum(d_terms)
    third = math.fsum(a * b for a in d_terms for b in sr)
    return first + second - third


def curve(sc: Scenario, approx: ExpSumApprox, tolerance: float = 1e-12,
          published_sqrt2: bool = False) -> AberCurve:
    """Analytic ABER over ``sc.snr_grid_db`` for ``sc.protocol``.

    A point whose series cannot be evaluated is recorded as NaN and marked
    invalid; the sweep continues.
    """
    fn = aber_ef if sc.protocol == EF else aber_df
    grid = np.asarray(sc.snr_grid_db, dtype=float)
    ber = np.full(grid.shape, np.nan)
    provenance = EQUAL_SCALE
    for i, s in enumerate(grid):
        links = _links_at(sc, s)
        if not _equal_scales(links.sd.scale, links.rd.scale):
            provenance = SERIES
        try:
            ber[i] = fn(sc, approx, s, tolerance, published_sqrt2)
        except (ChaosLinkError, ArithmeticError):
            pass
    if grid.size == 0:
        probe = build_links(sc, 1.0)
        if not _equal_scales(probe.sd.scale, probe.rd.scale):
            provenance = SERIES
    return AberCurve(grid, ber, sc.protocol, provenance)
