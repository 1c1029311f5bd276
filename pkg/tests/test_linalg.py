import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from isonmf.linalg import (
    as_data_matrix,
    center_gram,
    gram,
    pairwise_sq_distance,
    svd,
    top_eigenvectors,
    truncated_svd_error,
)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def test_as_data_matrix_rejects_bad_input():
    with pytest.raises(ValueError):
        as_data_matrix(np.zeros((0, 3)))
    with pytest.raises(ValueError):
        as_data_matrix([[1.0, np.nan]])
    with pytest.raises(ValueError, match="negative"):
        as_data_matrix([[1.0, -1.0]], nonnegative=True)
    assert as_data_matrix([1.0, 2.0]).shape == (1, 2)


def test_svd_identity():
    res = svd(np.eye(3), 3)
    np.testing.assert_allclose(res.s, 1.0)
    np.testing.assert_allclose(res.reconstruct(), np.eye(3), atol=1e-15)


def test_svd_rank_one_outer_product_is_nonnegative():
    u = np.array([1.0, 2.0, 3.0])
    v = np.array([4.0, 5.0])
    res = svd(np.outer(u, v), 1)
    assert res.s[0] == pytest.approx(np.linalg.norm(u) * np.linalg.norm(v))
    assert np.all(res.u >= 0) and np.all(res.vt >= 0)


def test_svd_rank_bounds():
    with pytest.raises(ValueError):
        svd(np.ones((3, 2)), 3)
    with pytest.raises(ValueError):
        svd(np.ones((3, 2)), 0)


@settings(max_examples=40, deadline=None)
@given(arrays(float, st.tuples(st.integers(2, 6), st.integers(2, 6)), elements=finite),
       st.integers(1, 6))
def test_truncated_svd_is_optimal_and_consistent(a, rank):
    rank = min(rank, min(a.shape))
    res = svd(a, rank)
    err = np.linalg.norm(a - res.reconstruct())
    assert err == pytest.approx(truncated_svd_error(a, rank), abs=1e-9)
    assert np.all(np.diff(res.s) <= 1e-12)
    # Any other rank-r product (here: random) cannot do better.
    rng = np.random.default_rng(0)
    other = rng.standard_normal((a.shape[0], rank)) @ rng.standard_normal((rank, a.shape[1]))
    assert err <= np.linalg.norm(a - other) + 1e-9


@settings(max_examples=40, deadline=None)
@given(arrays(float, st.tuples(st.integers(2, 7), st.integers(1, 4)), elements=finite))
def test_gram_distances_match_coordinates(x):
    g = gram(x)
    assert np.array_equal(g, g.T)
    for i in range(x.shape[0]):
        for j in range(x.shape[0]):
            expected = float(np.sum((x[i] - x[j]) ** 2))
            assert pairwise_sq_distance(g, i, j) == pytest.approx(expected, abs=1e-8 * (1 + expected))


def test_pairwise_sq_distance_index_check():
    with pytest.raises(IndexError):
        pairwise_sq_distance(np.eye(2), 0, 2)


def test_center_gram_is_gram_of_centred_points(rng):
    x = rng.standard_normal((6, 3)) + 5.0
    np.testing.assert_allclose(center_gram(gram(x)), gram(x - x.mean(axis=0)), atol=1e-10)


def test_top_eigenvectors_recover_points_up_to_rotation(rng):
    x = rng.standard_normal((10, 2))
    x -= x.mean(axis=0)
    coords, vals = top_eigenvectors(gram(x), 2, center=True)
    np.testing.assert_allclose(gram(coords), gram(x), atol=1e-10)
    assert vals[0] >= vals[1] >= 0


def test_top_eigenvectors_clamps_non_psd(caplog):
    g = np.diag([1.0, -0.5])
    coords, vals = top_eigenvectors(g, 2)
    assert np.all(vals >= 0)
    assert "not PSD" in caplog.text
