import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chaoslink.chaos import (
    ChaoticSequence,
    ReceivedFrame,
    chaotic_batch,
    chaotic_stream,
    chebyshev_orbit,
    correlate_batch,
    correlate_detect,
    generate_chaotic,
    modulate,
    receive,
)
from chaoslink.errors import ConfigError, DegenerateSeed

seeds = st.floats(0.01, 0.99).filter(
    lambda s: all(abs(s - b) > 1e-6 for b in (0.5, 1 / math.sqrt(2))))


def test_orbit_by_hand():
    # 1 - 2 * 0.49 = 0.02;  1 - 2 * 0.0004 = 0.9992;  1 - 2 * 0.99840064 = -0.99680128
    raw = chebyshev_orbit(0.7, 3)
    assert raw == pytest.approx([0.02, 0.9992, -0.99680128], abs=1e-15)


def test_generate_normalizes_the_orbit():
    seq = generate_chaotic(0.7, 4)
    raw = np.array([0.02, 0.9992, -0.99680128, 1 - 2 * 0.99680128 ** 2])
    assert seq.samples == pytest.approx(raw / math.sqrt(np.mean(raw ** 2)), rel=1e-12)
    assert seq.generator_state == pytest.approx(raw[-1], rel=1e-12)


def test_length_one_is_unit_magnitude():
    seq = generate_chaotic(0.3, 1)
    f = 1 - 2 * 0.3 ** 2
    assert seq.samples[0] == pytest.approx(f / abs(f))


def test_determinism():
    a, b = generate_chaotic(0.123, 64), generate_chaotic(0.123, 64)
    assert np.array_equal(a.samples, b.samples)


@pytest.mark.parametrize("bad", [0.0, 1.0, 0.5, -0.5, 1 / math.sqrt(2), -1.0, 1.5])
def test_degenerate_seeds(bad):
    with pytest.raises(DegenerateSeed):
        generate_chaotic(bad, 8)


def test_bad_length():
    with pytest.raises(ConfigError):
        generate_chaotic(0.3, 0)


@given(seed=seeds, n=st.integers(1, 200))
def test_sequence_invariants(seed, n):
    raw = chebyshev_orbit(seed, n)
    assert np.all(np.isfinite(raw)) and np.all(np.abs(raw) <= 1.0)
    seq = generate_chaotic(seed, n)
    assert seq.power == pytest.approx(1.0, abs=1e-6)


def test_stream_continues_orbit():
    stream = chaotic_stream(0.3, 8)
    first, second = next(stream), next(stream)
    assert second.generator_state == pytest.approx(chebyshev_orbit(0.3, 16)[-1])
    whole = chebyshev_orbit(0.3, 16)
    assert second.samples == pytest.approx(whole[8:] / math.sqrt(np.mean(whole[8:] ** 2)))
    assert first.generator_state == whole[7]


def test_batch_matches_scalar_generator():
    seeds_ = np.array([0.11, 0.37, -0.83])
    batch = chaotic_batch(seeds_, 16)
    for row, s in zip(batch, seeds_):
        assert row == pytest.approx(generate_chaotic(s, 16).samples, rel=1e-12)


def test_modulate_halves():
    ref = generate_chaotic(0.42, 10)
    plus, minus = modulate(1, ref), modulate(-1, ref)
    assert np.array_equal(plus.chips[:10], ref.samples)
    assert np.array_equal(plus.chips[10:], ref.samples)
    assert np.array_equal(minus.chips[10:], -ref.samples)
    assert plus.chips.size == 20


def test_modulate_m1():
    ref = ChaoticSequence(np.array([1.0]), 0.3)
    assert list(modulate(-1, ref).chips) == [1.0, -1.0]
    with pytest.raises(ConfigError):
        modulate(0, ref)


def test_detect_examples():
    ref = generate_chaotic(0.42, 16)
    d, stat = correlate_detect(receive(modulate(1, ref), phi=0.5))
    assert d == 1
    assert stat == pytest.approx(16 * ref.power * 0.25)
    assert correlate_detect(np.zeros(8)) == (1, 0.0)
    assert correlate_detect(receive(modulate(-1, ref)))[0] == -1


def test_received_frame_length():
    with pytest.raises(ConfigError):
        ReceivedFrame(np.ones(5))


@given(seed=seeds, bit=st.sampled_from([1, -1]), n=st.integers(1, 64))
def test_round_trip(seed, bit, n):
    assert correlate_detect(receive(modulate(bit, generate_chaotic(seed, n))))[0] == bit


@given(st.lists(st.floats(-10, 10), min_size=2, max_size=40).filter(lambda v: len(v) % 2 == 0),
       st.floats(0.01, 100))
def test_sign_and_scale_equivariance(chips, c):
    rx = np.array(chips)
    d, s = correlate_detect(rx)
    assert correlate_detect(-rx)[1] == pytest.approx(s)
    d2, s2 = correlate_detect(c * rx)
    assert s2 == pytest.approx(c * c * s, rel=1e-9, abs=1e-12)
    if abs(s) > 1e-12:
        assert d2 == d


def test_correlate_batch():
    rng = np.random.default_rng(0)
    rx = rng.normal(size=(5, 12))
    assert correlate_batch(rx) == pytest.approx([correlate_detect(r)[1] for r in rx])
