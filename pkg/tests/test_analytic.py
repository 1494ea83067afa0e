import math

import numpy as np
import pytest
from scipy import integrate, stats

from chaoslink.analytic import (
    BER_FLOOR,
    EQUAL_SCALE,
    SERIES,
    AberCurve,
    aber_df,
    aber_df_expanded,
    aber_ef,
    aber_single_link,
    curve,
    destination_pdf,
    df_compose,
)
from chaoslink.channel import DF, EF, GammaDist, NoiseModel, Scenario, build_links, db_to_linear
from chaoslink.fit import ExpSumApprox, load_table2

APPROX = ExpSumApprox(2.0, 32, ((0.25, 0.52), (0.40, 0.22), (-0.15, 0.41)))
SC = Scenario(dest_antennas=3, users_n=2, paths_L=2)


def mgf_oracle(dists, approx):
    """E[sum_r delta_r exp(-mu_r (X_1 + ... + X_k))] as a product of gamma MGFs."""
    return sum(d * math.prod((1 + mu * g.scale) ** -g.shape for g in dists)
               for d, mu in approx.terms)


def quad_oracle(dist, approx):
    pdf = stats.gamma(dist.shape, scale=dist.scale).pdf
    f = lambda x: pdf(x) * sum(d * math.exp(-mu * x) for d, mu in approx.terms)
    return integrate.quad(f, 0, np.inf, epsabs=0, epsrel=1e-12, limit=400)[0]


@pytest.mark.parametrize("snr", [0.0, 7.5, 20.0])
def test_single_link_quadrature(snr):
    links = build_links(SC, float(db_to_linear(snr)))
    assert aber_single_link(links.sr, APPROX) == pytest.approx(quad_oracle(links.sr, APPROX), rel=1e-9)


@pytest.mark.parametrize("snr", [0.0, 10.0, 25.0])
def test_ef_equal_scale_matches_mgf(snr):
    links = build_links(SC, float(db_to_linear(snr)))
    assert links.sd.scale == links.rd.scale
    assert aber_ef(SC, APPROX, snr) == pytest.approx(mgf_oracle([links.sd, links.rd], APPROX), rel=1e-12)


@pytest.mark.parametrize("changes", [{"relay_antennas": 2}, {"d_rd": 0.8}, {"d_sd": 1.3, "fading_m": 2.5}])
def test_ef_series_matches_mgf(changes):
    sc = SC.with_(**changes)
    for snr in (0.0, 12.0, 25.0):
        links = build_links(sc, float(db_to_linear(snr)))
        assert links.sd.scale != links.rd.scale
        assert aber_ef(sc, APPROX, snr, tolerance=1e-14) == pytest.approx(
            mgf_oracle([links.sd, links.rd], APPROX), rel=1e-9)


def test_df_matches_independent_composition():
    sc = SC.with_(d_sr=1.4, relay_antennas=2)
    for snr in (0.0, 10.0, 20.0):
        links = build_links(sc, float(db_to_linear(snr)))
        p_sr = quad_oracle(links.sr, APPROX)
        p_sd = quad_oracle(links.sd, APPROX)
        p_d = mgf_oracle([links.sd, links.rd], APPROX)
        expect = p_sr * p_sd + (1 - p_sr) * p_d
        assert aber_df(sc, APPROX, snr) == pytest.approx(expect, rel=1e-9)


def test_df_compose_limits():
    assert df_compose(0.0, 0.3, 0.1) == 0.1
    assert df_compose(1.0, 0.3, 0.1) == 0.3
    assert df_compose(0.5, 0.2, 0.2) == pytest.approx(0.2)


def test_df_approaches_ef_when_relay_is_close():
    sc = SC.with_(d_sr=1e-4)
    for snr in (0.0, 10.0, 20.0):
        assert aber_df(sc, APPROX, snr) == pytest.approx(aber_ef(sc, APPROX, snr), rel=1e-9)


def test_ef_is_a_lower_bound_for_df():
    table = load_table2()
    for snr in (0.0, 5.0, 10.0, 20.0):
        assert aber_ef(SC, table[2], snr) <= aber_df(SC, table[2], snr)


@pytest.mark.parametrize("changes", [{}, {"relay_antennas": 2}, {"d_rd": 0.7, "fading_m": 3.0}])
def test_expanded_form_equals_composition(changes):
    sc = SC.with_(protocol=DF, **changes)
    for snr in (0.0, 8.0, 16.0, 24.0):
        c = aber_df(sc, APPROX, snr, clamp=False)
        assert aber_df_expanded(sc, APPROX, snr) == pytest.approx(c, rel=1e-12)


def test_ber_decreases_with_snr_and_diversity():
    grid = np.arange(0.0, 26.0, 5.0)
    table = load_table2()
    ber = [aber_ef(SC, table[2], s) for s in grid]
    assert all(x > y for x, y in zip(ber, ber[1:]))
    # stronger fading parameter helps at high SNR
    assert aber_ef(SC.with_(fading_m=4.0), table[2], 20.0) < aber_ef(SC, table[2], 20.0)


def test_published_sqrt2_flag_rescales():
    links = build_links(SC, 10.0)
    plain = destination_pdf(links)
    scaled = destination_pdf(links, published_sqrt2=True)
    assert scaled.b0 == pytest.approx(plain.b0 / math.sqrt(2))
    assert aber_ef(SC, APPROX, 10.0, published_sqrt2=True) != aber_ef(SC, APPROX, 10.0)


def test_destination_pdf_shapes():
    links = build_links(SC, 1.0)
    s = destination_pdf(links)
    assert s.is_single_gamma and s.rho == 12 and s.b0 == links.sd.scale
    unequal = destination_pdf(build_links(SC.with_(relay_antennas=2), 1.0))
    assert not unequal.is_single_gamma
    assert unequal.mean() == pytest.approx(
        GammaDist(6, links.sd.scale).mean + build_links(SC.with_(relay_antennas=2), 1.0).rd.mean)


def test_clamping():
    tiny = ExpSumApprox(2.0, 32, ((1e-320, 1.0),))
    assert aber_ef(SC, tiny, 0.0) == BER_FLOOR
    big = ExpSumApprox(2.0, 32, ((3.0, 1e-7),))
    assert aber_ef(SC, big, 0.0) == 0.5
    assert aber_ef(SC, big, 0.0, clamp=False) > 0.5


def test_curve_provenance_and_nan():
    sc = SC.with_(snr_grid_db=(0.0, 10.0))
    c = curve(sc, APPROX)
    assert c.provenance == EQUAL_SCALE and np.all(c.valid)
    # a 400x scale ratio needs far more than the 512-term cap
    s = curve(sc.with_(dest_antennas=2, paths_L=1, d_sd=0.05), APPROX)
    assert s.provenance == SERIES
    assert np.all(np.isnan(s.ber)) and not np.any(s.valid)
    assert curve(sc.with_(snr_grid_db=()), APPROX).ber.size == 0


def test_curve_csv_format():
    c = AberCurve([0.0, 5.0], [0.1, 0.0], EF, EQUAL_SCALE)
    assert c.to_csv() == ("snr_db,ber,protocol,provenance\n"
                          "0,0.10000000000000001,EF,analytic-equal-scale\n"
                          "5,1e-300,EF,analytic-equal-scale\n")
    nan = AberCurve([1.0], [float("nan")], DF, SERIES, std_err=[0.5])
    assert nan.to_csv().splitlines()[1] == "1,nan,DF,analytic-series,0.5"
    with pytest.raises(ValueError):
        AberCurve([0.0], [0.1, 0.2], EF, EQUAL_SCALE)


def test_laplacian_kernel_scenario():
    sc = SC.with_(noise=NoiseModel(1.0))
    table = load_table2()
    assert 0 < aber_ef(sc, table[0], 10.0) < 0.5
