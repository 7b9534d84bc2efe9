import numpy as np
from pytest import raises

from unida.core.rng import RngStream


def test__RngStream__equal_keys_reproduce_draws():
    a = RngStream(42, 7).standard_normal(10**6)
    b = RngStream(42, 7).standard_normal(10**6)
    assert np.array_equal(a, b)


def test__RngStream__distinct_streams_are_uncorrelated():
    a = RngStream(42, 0).standard_normal(100_000)
    b = RngStream(42, 1).standard_normal(100_000)
    assert not np.array_equal(a, b)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.02


def test__spawn__is_deterministic_and_distinct_per_child():
    parent = RngStream(5, 3)
    assert parent.spawn(0) == parent.spawn(0)
    assert parent.spawn(0) != parent.spawn(1)
    assert parent.spawn(0).master_seed == 5
    assert np.array_equal(parent.spawn(2).uniform(size=5), parent.spawn(2).uniform(size=5))


def test__RngStream__rejects_out_of_range_keys():
    with raises(ValueError):
        RngStream(-1)
    with raises(ValueError):
        RngStream(0, 2**64)
