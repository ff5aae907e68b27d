import numpy as np
import pytest

from ncc_minimax.errors import ArgumentError
from ncc_minimax.streams import rng_stream


def test_same_seed_and_run_id_reproduce_draws():
    a, b = rng_stream(7, "pvr/seed0"), rng_stream(7, "pvr/seed0")
    assert np.array_equal(a.uniform(10), b.uniform(10))
    assert np.array_equal(a.sample_batch(50, 5), b.sample_batch(50, 5))


def test_distinct_run_ids_are_independent_streams():
    assert not np.array_equal(rng_stream(7, "pvr/seed0").uniform(10), rng_stream(7, "pvr/seed1").uniform(10))
    assert not np.array_equal(rng_stream(7, "pvr/seed0").uniform(10), rng_stream(8, "pvr/seed0").uniform(10))


def test_sample_batch_draws_distinct_indices():
    stream = rng_stream(0, "batches")
    for _ in range(100):
        batch = stream.sample_batch(30, 7)
        assert batch.size == 7
        assert len(set(batch.tolist())) == 7
        assert batch.min() >= 0 and batch.max() < 30
    assert sorted(stream.sample_batch(12, 12).tolist()) == list(range(12))


def test_sample_batch_rejects_bad_sizes():
    stream = rng_stream(0, "batches")
    with pytest.raises(ArgumentError):
        stream.sample_batch(5, 6)
    with pytest.raises(ArgumentError):
        stream.sample_batch(5, 0)


def test_bernoulli_edges():
    stream = rng_stream(0, "coins")
    assert all(stream.bernoulli(1.0) for _ in range(200))
    assert not any(stream.bernoulli(0.0) for _ in range(200))
    with pytest.raises(ArgumentError):
        stream.bernoulli(1.5)


def test_spawn_is_deterministic():
    parent = rng_stream(3, "run")
    assert parent.spawn("child").run_id == "run/child"
    assert np.array_equal(parent.spawn("child").uniform(4), rng_stream(3, "run/child").uniform(4))
