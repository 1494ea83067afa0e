"""Full-scale acceptance criteria, one test per criterion.

Each test records a one-line PASS/FAIL summary that is printed at the end of
the pytest run (see conftest.py).  Sizes and tolerances are the acceptance
values; nothing is scaled down here.
"""
import pytest

from chaoslink import validate

RESULTS = []


def _check(result):
    RESULTS.append(result.line())
    print(result.line())
    for note in result.notes:
        print("   ", note)
    assert result.passed, result.line()


def test_criterion_1_gaussian_q():
    _check(validate.criterion_1())


def test_criterion_2_q_quadrature():
    _check(validate.criterion_2())


def test_criterion_3_gamma_sum():
    _check(validate.criterion_3())


def test_criterion_4_fit_quality():
    _check(validate.criterion_4())


def test_criterion_5_same_kernel_monte_carlo():
    _check(validate.criterion_5())


def test_criterion_6_exact_kernel_monte_carlo():
    _check(validate.criterion_6())


def test_criterion_7_waveform():
    _check(validate.criterion_7())


def test_criterion_8_df_limits():
    _check(validate.criterion_8())


def test_criterion_9_determinism():
    _check(validate.criterion_9())
