import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, optimize, stats

from chaoslink.channel import (
    GammaDist,
    NoiseModel,
    Scenario,
    build_links,
    make_rng,
    sample_gamma,
    sample_ggn,
    sample_ggn_fast,
    sample_nakagami_envelope,
)
from chaoslink.errors import ConfigError
from chaoslink.special import ggn_density

N = 10 ** 6


def test_build_links_reference_scenario():
    sc = Scenario(relay_antennas=1, dest_antennas=3, fading_m=1, paths_L=2, users_n=2)
    links = build_links(sc, 10.0)
    assert links.sd.shape == 6
    assert links.sd.scale == pytest.approx(5 / 12, rel=1e-15)
    assert links.sr.shape == 2 and links.sr.scale == pytest.approx(10 / 8)
    # M_R = 1: R-D law equals the S-D law
    assert links.rd.shape == 6 and links.rd.scale == pytest.approx(links.sd.scale)


def test_build_links_unit():
    links = build_links(Scenario(), 1.0)
    for d in (links.sr, links.sd, links.rd):
        assert (d.shape, d.scale) == (1, 0.5)


@settings(deadline=None)
@given(g=st.floats(1e-3, 1e4), MR=st.integers(1, 4), MD=st.integers(1, 4),
       m=st.floats(0.5, 6), d=st.floats(0.2, 5))
def test_build_links_scaling(g, MR, MD, m, d):
    sc = Scenario(relay_antennas=MR, dest_antennas=MD, fading_m=m, d_sr=d, d_sd=d, d_rd=d)
    base, doubled = build_links(sc, g), build_links(sc, 2 * g)
    far = build_links(sc.with_(d_sr=2 * d, d_sd=2 * d, d_rd=2 * d), g)
    for x, y, z in zip((base.sr, base.sd, base.rd), (doubled.sr, doubled.sd, doubled.rd),
                       (far.sr, far.sd, far.rd)):
        assert y.shape == x.shape == z.shape
        assert y.scale == pytest.approx(2 * x.scale)
        assert z.scale == pytest.approx(x.scale / 4)


def test_build_links_rejects():
    with pytest.raises(ConfigError):
        build_links(Scenario(), 0.0)
    with pytest.raises(ConfigError):
        Scenario(fading_m=0.4)
    with pytest.raises(ConfigError):
        Scenario(users_n=0)
    with pytest.raises(ConfigError):
        Scenario(snr_grid_db=(0, 5, 5))
    with pytest.raises(ConfigError):
        Scenario(protocol="AF")


def test_gamma_dist_validation():
    with pytest.raises(ConfigError):
        GammaDist(1.0, 0.0)
    with pytest.raises(ConfigError):
        GammaDist(-1.0, 1.0)
    assert GammaDist(3, 2).mean == 6


def test_rng_streams_deterministic():
    a = make_rng(99, 3).random(5)
    assert np.array_equal(a, make_rng(99, 3).random(5))
    assert not np.array_equal(a, make_rng(99, 4).random(5))


def test_gamma_exponential_special_case():
    x = sample_gamma(GammaDist(1, 2.5), make_rng(1), N)
    assert x.mean() == pytest.approx(2.5, rel=0.01)


def test_gamma_integer_shape_matches_exponential_sum():
    rng = make_rng(2)
    x = sample_gamma(GammaDist(3, 0.7), rng, 200_000)
    y = rng.exponential(0.7, (3, 200_000)).sum(axis=0)
    assert stats.ks_2samp(x, y).pvalue > 0.01


def test_gamma_fractional_shape_ks():
    x = sample_gamma(GammaDist(0.3, 2.0), make_rng(3), 200_000)
    assert stats.kstest(x, stats.gamma(0.3, scale=2.0).cdf).pvalue > 0.01


def test_nakagami_rayleigh_case():
    r = sample_nakagami_envelope(1.0, 2.0, make_rng(4), 200_000)
    assert stats.kstest(r, lambda v: 1 - np.exp(-v * v / 2.0)).pvalue > 0.01
    assert np.mean(r * r) == pytest.approx(2.0, rel=0.01)


def test_nakagami_power_variance():
    p = sample_nakagami_envelope(4.0, 1.0, make_rng(5), N) ** 2
    assert p.mean() == pytest.approx(1.0, rel=0.01)
    assert p.var() == pytest.approx(0.25, rel=0.02)


def test_nakagami_rejects():
    with pytest.raises(ConfigError):
        sample_nakagami_envelope(0.4, 1.0, make_rng(0))
    with pytest.raises(ConfigError):
        sample_nakagami_envelope(1.0, 0.0, make_rng(0))


def test_noise_model_lambda0():
    assert NoiseModel(2.0).lambda0 == pytest.approx(math.sqrt(0.5), rel=1e-12)
    with pytest.raises(ConfigError):
        NoiseModel(0.0)


def test_ggn_gaussian_variance():
    x = sample_ggn(NoiseModel(2.0), 1.7, make_rng(6), N)
    assert x.var() == pytest.approx(1.7 ** 2, rel=0.01)
    assert stats.kstest(x, stats.norm(scale=1.7).cdf).pvalue > 0.01


def test_ggn_laplacian_kurtosis():
    x = sample_ggn(NoiseModel(1.0), 1.0, make_rng(7), N)
    assert stats.kurtosis(x) == pytest.approx(3.0, rel=0.05)


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0, 4.0])
def test_ggn_symmetric(a):
    x = sample_ggn(NoiseModel(a), 2.0, make_rng(8), N)
    assert abs(x.mean()) < 3 * x.std() / math.sqrt(N)


def _ggn_quantile(a, p):
    cdf = lambda q: 0.5 + math.copysign(integrate.quad(lambda u: ggn_density(a, u), 0, abs(q))[0], q)
    return optimize.brentq(lambda q: cdf(q) - p, -50, 50, xtol=1e-12)


@pytest.mark.parametrize("a", [0.5, 1.0, 1.5, 2.5, 6.0])
def test_ggn_quantiles_and_variance(a):
    n = 400_000
    x = sample_ggn(NoiseModel(a), 1.0, make_rng(9), n)
    assert x.var() == pytest.approx(1.0, rel=0.03 if a < 1 else 0.01)
    for p in (0.05, 0.2, 0.4, 0.6, 0.8, 0.95):
        q = _ggn_quantile(a, p)
        se = math.sqrt(p * (1 - p) / n) / float(ggn_density(a, q))
        assert abs(np.quantile(x, p) - q) < 4 * se


@pytest.mark.parametrize("a", [1.0, 2.0])
def test_fast_sampler_same_law(a):
    x = sample_ggn_fast(NoiseModel(a), 0.8, make_rng(10), 200_000)
    y = sample_ggn(NoiseModel(a), 0.8, make_rng(11), 200_000)
    assert stats.ks_2samp(x, y).pvalue > 0.01
