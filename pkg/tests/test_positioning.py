import math

import numpy as np
import pytest

from daepos import (
    ApRegistry,
    ContractError,
    DatasetError,
    Position2D,
    RadioMap,
    localize,
    rssi_distance,
)


def make_map(vectors, references):
    vectors = np.asarray(vectors, dtype=float)
    registry = ApRegistry(
        aps=tuple(f"ap{i}" for i in range(vectors.shape[1])),
        availability=tuple(len(vectors) for _ in range(vectors.shape[1])),
    )
    return RadioMap(
        registry=registry,
        vectors=vectors,
        references=np.asarray(references, dtype=float),
        point_ids=tuple(f"p{i}" for i in range(len(vectors))),
    )


def brute_force_neighbors(vectors, query, k):
    """Full sort on per-entry distances with explicit index tie-breaking."""
    dists = [math.sqrt(sum((v - q) ** 2 for v, q in zip(row, query))) for row in vectors]
    order = sorted(range(len(dists)), key=lambda i: (dists[i], i))
    return tuple(order[:k])


def test_distance_zero_iff_identical():
    assert rssi_distance([-50.0, -60.0], [-50.0, -60.0]) == 0.0
    assert rssi_distance([-50.0], [-51.0]) > 0.0


def test_distance_hand_computed_345():
    assert rssi_distance([-50.0, -60.0], [-53.0, -56.0]) == pytest.approx(5.0)


def test_distance_symmetry():
    rng = np.random.default_rng(1)
    for _ in range(50):
        a = rng.uniform(-110, -30, size=6)
        b = rng.uniform(-110, -30, size=6)
        assert rssi_distance(a, b) == rssi_distance(b, a)


def test_distance_width_mismatch_is_contract_error():
    with pytest.raises(ContractError):
        rssi_distance([-50.0, -60.0], [-50.0])


def test_localize_exact_match_k1():
    radio_map = make_map([[-50.0, -60.0], [-70.0, -80.0]], [[1.0, 2.0], [5.0, 6.0]])
    est = localize([-70.0, -80.0], radio_map, k=1)
    assert est.position == Position2D(5.0, 6.0)
    assert est.neighbor_distances == (0.0,)
    assert est.neighbor_indices == (1,)


def test_localize_unit_square_centroid():
    # four corners, query equidistant from all in RSSI space
    vectors = [[-50.0, -50.0], [-50.0, -70.0], [-70.0, -50.0], [-70.0, -70.0]]
    refs = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]
    est = localize([-60.0, -60.0], make_map(vectors, refs), k=4)
    assert est.position == Position2D(0.5, 0.5)


def test_localize_matches_brute_force_oracle():
    rng = np.random.default_rng(9)
    for _ in range(300):
        n = int(rng.integers(4, 30))
        d = int(rng.integers(2, 10))
        vectors = rng.uniform(-110, -30, size=(n, d))
        refs = rng.uniform(0, 25, size=(n, 2))
        query = rng.uniform(-110, -30, size=d)
        k = int(rng.integers(1, n + 1))
        est = localize(query, make_map(vectors, refs), k=k)
        assert est.neighbor_indices == brute_force_neighbors(vectors, query, k)
        assert np.allclose(
            [est.position.x, est.position.y], refs[list(est.neighbor_indices)].mean(axis=0), atol=0
        )


def test_localize_distances_sorted_ascending():
    rng = np.random.default_rng(3)
    vectors = rng.uniform(-110, -30, size=(12, 5))
    refs = rng.uniform(0, 10, size=(12, 2))
    est = localize(rng.uniform(-110, -30, size=5), make_map(vectors, refs), k=6)
    assert list(est.neighbor_distances) == sorted(est.neighbor_distances)


def test_localize_translation_invariance():
    rng = np.random.default_rng(17)
    for _ in range(20):
        vectors = rng.uniform(-110, -30, size=(15, 6))
        refs = rng.uniform(0, 10, size=(15, 2))
        query = rng.uniform(-110, -30, size=6)
        base = localize(query, make_map(vectors, refs), k=4)
        col = int(rng.integers(0, 6))
        offset = float(rng.uniform(-5, 5))
        shifted_vectors = vectors.copy()
        shifted_vectors[:, col] += offset
        shifted_query = query.copy()
        shifted_query[col] += offset
        shifted = localize(shifted_query, make_map(shifted_vectors, refs), k=4)
        assert shifted.neighbor_indices == base.neighbor_indices


def test_localize_position_inside_neighbor_bounding_box():
    rng = np.random.default_rng(23)
    vectors = rng.uniform(-110, -30, size=(20, 4))
    refs = rng.uniform(0, 30, size=(20, 2))
    est = localize(rng.uniform(-110, -30, size=4), make_map(vectors, refs), k=5)
    hood = refs[list(est.neighbor_indices)]
    assert hood[:, 0].min() <= est.position.x <= hood[:, 0].max()
    assert hood[:, 1].min() <= est.position.y <= hood[:, 1].max()


def test_localize_tie_break_prefers_lower_index():
    # two identical entries at different references: index 0 must win at k=1
    vectors = [[-50.0, -50.0], [-50.0, -50.0], [-80.0, -80.0]]
    refs = [[0.0, 0.0], [9.0, 9.0], [5.0, 5.0]]
    est = localize([-50.0, -50.0], make_map(vectors, refs), k=1)
    assert est.neighbor_indices == (0,)
    assert est.position == Position2D(0.0, 0.0)


def test_localize_deterministic_under_storage_permutation():
    rng = np.random.default_rng(31)
    vectors = rng.uniform(-110, -30, size=(12, 4))
    refs = rng.uniform(0, 10, size=(12, 2))
    query = rng.uniform(-110, -30, size=4)
    baseline = localize(query, make_map(vectors, refs), k=3)
    for _ in range(10):
        perm = rng.permutation(12)
        est = localize(query, make_map(vectors[perm], refs[perm]), k=3)
        # same physical entries selected, same position up to summation order
        assert {int(perm[i]) for i in est.neighbor_indices} == set(baseline.neighbor_indices)
        assert est.position.x == pytest.approx(baseline.position.x, abs=1e-12)
        assert est.position.y == pytest.approx(baseline.position.y, abs=1e-12)


def test_localize_map_smaller_than_k_is_dataset_error():
    radio_map = make_map([[-50.0, -60.0]], [[0.0, 0.0]])
    with pytest.raises(DatasetError):
        localize([-50.0, -60.0], radio_map, k=2)


def test_localize_width_mismatch_is_contract_error():
    radio_map = make_map([[-50.0, -60.0]], [[0.0, 0.0]])
    with pytest.raises(ContractError):
        localize([-50.0], radio_map, k=1)


def test_localize_weighted_favors_closer_neighbor():
    vectors = [[-50.0], [-58.0]]
    refs = [[0.0, 0.0], [10.0, 0.0]]
    est = localize([-52.0], make_map(vectors, refs), k=2, weighted=True)
    # distances 2 and 6: weights 1/2 and 1/6 -> x = (5 + 10/6) / (1/2 + 1/6) / 10
    expected_x = (0.0 * (1 / 2) + 10.0 * (1 / 6)) / (1 / 2 + 1 / 6)
    assert est.position.x == pytest.approx(expected_x)
    assert est.position.x < 5.0
