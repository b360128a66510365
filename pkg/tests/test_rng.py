import numpy as np
from hypothesis import given, strategies as st

from dtasep import rng


def test_uniform_scalar_matches_vectorized():
    key = rng.derive(987654321, rng.STREAM_CLOCK, -5)
    counters = np.array([0, 1, 2, 17, 2**40, 2**63, (-9) & rng.MASK64],
                        dtype=np.uint64)
    vec = rng.uniform_array(key, counters)
    for c, v in zip(counters, vec):
        assert rng.uniform(key, int(c)) == v


def test_derive_scalar_matches_vectorized():
    key = 424242
    tokens = np.array([0, 3, -1, 2**50], dtype=np.int64)
    vec = rng.derive_array(key, tokens)
    for t, v in zip(tokens, vec):
        assert rng.derive(key, int(t)) == int(v)


@given(st.integers(min_value=0, max_value=2**64 - 1),
       st.integers(min_value=0, max_value=2**64 - 1))
def test_uniform_in_half_open_unit_interval(key, counter):
    u = rng.uniform(key, counter)
    assert 0.0 < u <= 1.0


def test_repeat_calls_identical():
    assert rng.uniform(5, 7) == rng.uniform(5, 7)
    assert rng.derive(5, 7, -3) == rng.derive(5, 7, -3)


def test_streams_differ_across_keys_and_counters():
    a = rng.uniform_array(rng.derive(1, 2), np.arange(1000))
    b = rng.uniform_array(rng.derive(1, 3), np.arange(1000))
    assert not np.array_equal(a, b)
    assert len(np.unique(a)) == 1000


def test_negative_labels_distinct():
    key = rng.derive(77, rng.STREAM_RATES)
    labels = np.arange(-500, 500, dtype=np.int64)
    u = rng.uniform_array(key, labels)
    assert len(np.unique(u)) == len(labels)


def test_uniformity_gross():
    u = rng.uniform_array(rng.derive(12, 13), np.arange(200_000))
    assert abs(u.mean() - 0.5) < 0.005
    assert abs((u < 0.25).mean() - 0.25) < 0.01
