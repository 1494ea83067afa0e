"""Acceptance harness: each criterion is a function returning a :class:`CriterionResult`.

Used by ``chaoslink validate`` and by the test suite.  ``trials`` overrides
shrink the Monte Carlo criteria for quick smoke runs; the defaults are the
full acceptance sizes.
"""
from __future__ import annotations

import functools
import json
import math
import os
import tempfile
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .analytic import aber_df, aber_df_expanded, aber_ef, df_compose
from .channel import DF, EF, GammaDist, NoiseModel, Scenario, db_to_linear
from .fit import db_grid, expsum_eval, fit_expsum, load_table2
from .montecarlo import sim_system_grid, sim_waveform_ber
from .scenarios import builtin_scenarios
from .special import (dcsk_conditional_ber, gamma_sum_cdf, gamma_sum_eval, gamma_sum_pdf,
                      ggn_density, q_generalized)

SYSTEM_SEED = 12345
GAMMA_SUM_SEED = 3
WAVEFORM_SEED = 7
DF_SEED = 8
FULL_TRIALS = 10 ** 7


@dataclass
class CriterionResult:
    id: int
    name: str
    passed: bool
    measured: dict
    threshold: dict
    runtime_s: float = 0.0
    budget_s: Optional[float] = None
    notes: list = field(default_factory=list)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        shown = ", ".join(f"{k}={_short(v)}" for k, v in self.measured.items()
                          if not isinstance(v, (list, dict)))
        return f"[{status}] C{self.id} {self.name}: {shown} ({self.runtime_s:.1f}s)"


def _short(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def _timed(budget_s):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            t0 = time.perf_counter()
            res = fn(*args, **kwargs)
            res.runtime_s = time.perf_counter() - t0
            res.budget_s = budget_s
            if budget_s is not None and res.runtime_s > budget_s:
                res.passed = False
                res.notes.append(f"runtime {res.runtime_s:.1f}s exceeds budget {budget_s}s")
            return res
        return wrapper
    return deco


@functools.lru_cache(maxsize=None)
def fitted(a: float, M: int = 32, R: int = 4):
    return fit_expsum(a, M, R)


def gauss_q(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def tail_by_quadrature(a: float, x: float) -> float:
    f = lambda u: float(ggn_density(a, u))
    if x >= 0:
        return integrate.quad(f, x, np.inf, epsabs=1e-14, epsrel=1e-13, limit=500)[0]
    return 0.5 + integrate.quad(f, x, 0.0, epsabs=1e-14, epsrel=1e-13, limit=500)[0]


@_timed(1.0)
def criterion_1() -> CriterionResult:
    x = np.linspace(-8.0, 8.0, 1000)
    ref = np.array([gauss_q(v) for v in x])
    err = float(np.max(np.abs(q_generalized(2.0, x) - ref)))
    return CriterionResult(1, "Q_2 equals the Gaussian Q-function", err <= 1e-10,
                           {"max_abs_error": err}, {"max_abs_error": 1e-10})


@_timed(10.0)
def criterion_2() -> CriterionResult:
    x = np.linspace(-4.0, 4.0, 100)
    worst = {}
    for a in (0.5, 1.0, 1.5, 2.0, 2.5, 20.0):
        ref = np.array([tail_by_quadrature(a, v) for v in x])
        worst[str(a)] = float(np.max(np.abs(q_generalized(a, x) - ref)))
    err = max(worst.values())
    return CriterionResult(2, "Q_a matches quadrature of its density", err <= 1e-9,
                           {"max_abs_error": err, "per_a": worst}, {"max_abs_error": 1e-9})


def random_component_sets(seed=GAMMA_SUM_SEED, count=5):
    rng = np.random.default_rng(seed)
    sets = []
    for _ in range(count):
        k = int(rng.integers(2, 5))
        shapes = rng.uniform(0.5, 5.0, k)
        scales = rng.uniform(0.2, 3.0, k)
        sets.append([GammaDist(float(a), float(b)) for a, b in zip(shapes, scales)])
    return sets


@_timed(60.0)
def criterion_3(trials: int = FULL_TRIALS, sets=None) -> CriterionResult:
    sets = sets if sets is not None else random_component_sets()
    rng = np.random.default_rng(GAMMA_SUM_SEED)
    probs = (np.arange(20) + 0.5) / 20
    mass_err, worst_z = 0.0, 0.0
    for comps in sets:
        series = gamma_sum_pdf(comps, tolerance=1e-12)
        hi = sum(c.mean for c in comps) + 40 * math.sqrt(sum(c.var for c in comps))
        mass = integrate.quad(lambda v: gamma_sum_eval(series, v), 0, hi, limit=500)[0]
        mass_err = max(mass_err, abs(mass - 1.0))
        draws = np.zeros(trials)
        for c in comps:
            draws += rng.gamma(c.shape, c.scale, trials)
        draws.sort()
        xq = draws[(probs * trials).astype(int)]
        emp = np.searchsorted(draws, xq, side="right") / trials
        se = np.sqrt(emp * (1 - emp) / trials)
        z = np.abs(gamma_sum_cdf(series, xq) - emp) / se
        worst_z = max(worst_z, float(z.max()))
    ok = mass_err <= 1e-6 and worst_z <= 3.0
    return CriterionResult(3, "Moschopoulos series vs quadrature and sampling", ok,
                           {"max_mass_error": mass_err, "max_cdf_z": worst_z, "sets": len(sets)},
                           {"max_mass_error": 1e-6, "max_cdf_z": 3.0})


def criterion_4(a_values=(1.0, 1.5, 2.0, 2.5)) -> CriterionResult:
    t0 = time.perf_counter()
    per_a, slow = {}, []
    for a in a_values:
        t = time.perf_counter()
        approx = fit_expsum(a, 32, 4)
        g = db_grid(0.0, 25.0, 2000)
        err = float(np.max(np.abs(expsum_eval(approx, g) / dcsk_conditional_ber(g, 32, a) - 1)))
        elapsed = time.perf_counter() - t
        per_a[str(a)] = {"max_rel_error": err, "runtime_s": elapsed}
        if elapsed > 30.0:
            slow.append(a)
    failing = [a for a, v in per_a.items() if not v["max_rel_error"] <= 0.05]
    res = CriterionResult(
        4, "4-term fit relative error over [0, 25] dB", not failing and not slow,
        {"worst_max_rel_error": max(v["max_rel_error"] for v in per_a.values()),
         "failing_a": ",".join(failing) or "none", "per_a": per_a},
        {"max_rel_error": 0.05, "budget_s_per_a": 30.0})
    res.runtime_s = time.perf_counter() - t0
    res.budget_s = 30.0 * len(a_values)
    if slow:
        res.notes.append(f"fits over 30s for a in {slow}")
    return res


def _system_comparisons(trials, threads, kernel_of):
    """Analytic EF/DF vs semi-analytic MC for every built-in configuration."""
    rows = []
    for sc in builtin_scenarios(protocols=(EF,)):
        approx = fitted(sc.noise.shape_a, sc.spreading_half_M)
        ests = sim_system_grid(sc, sc.snr_grid_db, trials, SYSTEM_SEED,
                               kernel_of(sc, approx), threads=threads)
        for i, snr in enumerate(sc.snr_grid_db):
            for proto, fn in ((EF, aber_ef), (DF, aber_df)):
                est = ests[proto][i]
                rows.append({"scenario": sc.name.rsplit("-", 1)[0], "snr_db": snr,
                             "protocol": proto, "analytic": fn(sc, approx, snr),
                             "mc": est.ber_hat, "std_err": est.std_err})
    return rows


@_timed(300.0)
def criterion_5(trials: int = FULL_TRIALS, threads: int = 1) -> CriterionResult:
    rows = _system_comparisons(trials, threads, lambda sc, approx: approx)
    for r in rows:
        r["z"] = abs(r["analytic"] - r["mc"]) / r["std_err"]
    worst = max(r["z"] for r in rows)
    return CriterionResult(5, "closed forms vs Monte Carlo of the same approximation",
                           worst <= 3.0, {"max_z": worst, "points": len(rows), "rows": rows},
                           {"max_z": 3.0})


@_timed(300.0)
def criterion_6(trials: int = FULL_TRIALS, threads: int = 1) -> CriterionResult:
    rows = _system_comparisons(trials, threads, lambda sc, approx: "exact")
    checked = [r for r in rows if r["mc"] >= 1e-5]
    for r in checked:
        r["rel_error"] = abs(r["analytic"] / r["mc"] - 1.0)
    worst = max(r["rel_error"] for r in checked)
    return CriterionResult(6, "closed forms vs Monte Carlo of the exact kernel",
                           worst <= 0.10,
                           {"max_rel_error": worst, "points_checked": len(checked), "rows": rows},
                           {"max_rel_error": 0.10, "ber_floor": 1e-5})


@_timed(120.0)
def criterion_7(trials: int = FULL_TRIALS, threads: int = 1) -> CriterionResult:
    per = {}
    for g in (5.0, 10.0, 20.0):
        est = sim_waveform_ber(32, 10 * math.log10(g), NoiseModel(2.0), trials,
                               WAVEFORM_SEED, threads=threads)
        kernel = float(dcsk_conditional_ber(g, 32, 2.0))
        per[str(g)] = {"simulated": est.ber_hat, "std_err": est.std_err, "kernel": kernel,
                       "rel_error": abs(est.ber_hat / kernel - 1.0)}
    worst = max(v["rel_error"] for v in per.values())
    return CriterionResult(7, "waveform DCSK vs conditional BER kernel", worst <= 0.10,
                           {"max_rel_error": worst, "per_gamma": per}, {"max_rel_error": 0.10})


def random_parameterizations(count=100, seed=DF_SEED, table=None):
    rng = np.random.default_rng(seed)
    table = list(table) if table is not None else load_table2()
    out = []
    for _ in range(count):
        sc = Scenario(
            spreading_half_M=32, relay_antennas=int(rng.integers(1, 3)),
            dest_antennas=int(rng.integers(1, 5)), users_n=int(rng.integers(1, 4)),
            paths_L=int(rng.integers(1, 4)), fading_m=float(rng.uniform(0.5, 4.0)),
            d_sr=float(rng.uniform(0.5, 2.0)), d_sd=float(rng.uniform(0.8, 1.25)),
            d_rd=float(rng.uniform(0.8, 1.25)), protocol=DF)
        out.append((sc, table[int(rng.integers(0, len(table)))], float(rng.uniform(0, 20))))
    return out


# Absolute kernel error over [0, 25] dB measured for each verbatim published row,
# rounded up.  The rows are not accurate fits (see load_table2), but any edit
# to a constant moves these errors far past their bounds.
TABLE2_ABS_ERROR_BOUNDS = {1.0: 0.17, 1.5: 0.022, 2.0: 4e-4, 2.5: 0.04}


def table_fixture_errors(table) -> dict:
    g = db_grid(0.0, 25.0, 2000)
    out = {}
    for row in table:
        kernel = dcsk_conditional_ber(g, row.spreading_M, row.noise_a)
        out[row.noise_a] = float(np.max(np.abs(expsum_eval(row, g) - kernel)))
    return out


@_timed(1.0)
def criterion_8(table=None) -> CriterionResult:
    table = list(table) if table is not None else load_table2()
    # relay link made error-free: composition collapses to EF exactly
    collapse = 0.0
    for p_sd, p_d in ((0.3, 0.1), (1e-3, 1e-6), (0.5, 0.5)):
        collapse = max(collapse, abs(df_compose(0.0, p_sd, p_d) - p_d))
    approx = table[2]
    sc = Scenario(dest_antennas=3, users_n=2, paths_L=2, d_sr=1e-4)
    near = max(abs(aber_df(sc, approx, s) / aber_ef(sc, approx, s) - 1) for s in (0, 10, 20))
    worst = 0.0
    for sc, approx, snr in random_parameterizations(table=table):
        composed = aber_df(sc, approx, snr, clamp=False)
        expanded = aber_df_expanded(sc, approx, snr)
        worst = max(worst, abs(composed - expanded) / abs(expanded))
    fixture = table_fixture_errors(table)
    fixture_ok = all(fixture[a] <= TABLE2_ABS_ERROR_BOUNDS.get(a, 0.0) for a in fixture)
    ok = collapse == 0.0 and near <= 1e-9 and worst <= 1e-12 and fixture_ok
    return CriterionResult(8, "DF limits and expanded-sum equivalence", ok,
                           {"collapse_abs_error": collapse, "near_error_free_relay_rel": near,
                            "max_expansion_rel_error": worst, "table_fixture_ok": fixture_ok,
                            "table_fixture_abs_error": {str(a): v for a, v in fixture.items()}},
                           {"collapse_abs_error": 0.0, "near_error_free_relay_rel": 1e-9,
                            "max_expansion_rel_error": 1e-12,
                            "table_fixture_abs_error": {str(a): v for a, v in
                                                        TABLE2_ABS_ERROR_BOUNDS.items()}})


def determinism_scenario(path: str):
    doc = {"name": "scenario1-case1", "M": 32, "M_R": 1, "M_D": 3, "n": 2, "L": 2, "m": 1,
           "noise_a": 2, "protocol": "DF", "snr_db": [0, 5, 10, 15, 20]}
    with open(path, "w") as fh:
        json.dump(doc, fh)


def criterion_9(trials: int = 200_000) -> CriterionResult:
    from .cli import main

    t0 = time.perf_counter()
    outputs = {}
    with tempfile.TemporaryDirectory() as tmp:
        scen = os.path.join(tmp, "scenario.json")
        determinism_scenario(scen)
        for label, threads in (("run1", 1), ("run2", 1), ("threads4", 4)):
            out = os.path.join(tmp, f"{label}.csv")
            code = main(["curve", "--scenario", scen, "--mode", "both", "--seed", "2016",
                         "--trials", str(trials), "--threads", str(threads),
                         "--chunk", "32768", "--out", out])
            if code != 0:
                outputs[label] = None
                continue
            with open(out, "rb") as fh:
                outputs[label] = fh.read()
    ok = (outputs.get("run1") is not None
          and outputs["run1"] == outputs["run2"] == outputs["threads4"])
    res = CriterionResult(9, "curve CSV byte-stable across runs and thread counts", ok,
                          {"identical": ok, "bytes": len(outputs.get("run1") or b"")},
                          {"identical": True})
    res.runtime_s = time.perf_counter() - t0
    return res


CRITERIA: dict[int, Callable[..., CriterionResult]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9,
}
_TAKES_TRIALS = {3, 5, 6, 7, 9}
_TAKES_THREADS = {5, 6, 7}
_TAKES_TABLE = {8}


def run_criteria(ids=None, trials: Optional[int] = None, threads: int = 1,
                 echo: Optional[Callable[[str], None]] = None, table=None) -> dict:
    ids = sorted(ids) if ids else sorted(CRITERIA)
    results = []
    for cid in ids:
        kwargs = {}
        if trials is not None and cid in _TAKES_TRIALS:
            kwargs["trials"] = trials
        if cid in _TAKES_THREADS:
            kwargs["threads"] = threads
        if table is not None and cid in _TAKES_TABLE:
            kwargs["table"] = table
        res = CRITERIA[cid](**kwargs)
        if echo:
            echo(res.line())
        results.append(res)
    return {
        "all_passed": all(r.passed for r in results),
        "trials_override": trials,
        "criteria": [asdict(r) for r in results],
    }
