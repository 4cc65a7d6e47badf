import numpy as np

from sketchridge.utils.seeds import derive_seed, replication_seed, stream


def test_streams_are_reproducible_and_independent():
    assert np.array_equal(stream(5, 1).standard_normal(4), stream(5, 1).standard_normal(4))
    assert not np.array_equal(stream(5, 1).standard_normal(4), stream(5, 2).standard_normal(4))


def test_negative_seeds_are_accepted():
    assert stream(-1).standard_normal(2).shape == (2,)


def test_derived_seeds_fit_in_63_bits():
    seeds = {derive_seed(0, k) for k in range(100)}
    assert len(seeds) == 100
    assert all(0 <= s < 2**63 for s in seeds)


def test_replication_seeds_are_distinct_per_point_and_replication():
    seeds = {replication_seed(3, i, r) for i in range(5) for r in range(20)}
    assert len(seeds) == 100
    assert replication_seed(3, 2, 7) == replication_seed(3, 2, 7)
