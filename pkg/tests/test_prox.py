import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import seeds
from pdom.prox import (
    L0,
    L1,
    BlockSum,
    RankIndicator,
    Zero,
    prox_block_sum,
    prox_l0,
    prox_l1,
    prox_rank_indicator,
    prox_zero,
    truncated_svd,
)


def scalar_objective(h, x, y, t):
    return h(x) + (x - y) ** 2 / (2 * t)


def brute_force(h, y, t, step=1e-4):
    grid = np.arange(min(y, 0) - 1, max(y, 0) + 1, step)
    grid = np.concatenate([grid, [0.0, y]])
    vals = scalar_objective(h, grid, y, t)
    return float(vals.min())


def test_l0_examples():
    np.testing.assert_array_equal(prox_l0(np.array([2.0, 0.5, -1.0]), 0.5, 1.0), [2.0, 0.0, 0.0])
    np.testing.assert_array_equal(prox_l0(np.zeros(3), 1.0, 1.0), 0)
    y = np.array([1e-3, -2.0, 5e-100])
    np.testing.assert_array_equal(prox_l0(y, 1.0, 1e-300), y)


def test_l1_examples():
    np.testing.assert_allclose(prox_l1(np.array([2.0, -0.3]), 0.5, 1.0), [1.5, 0.0])
    np.testing.assert_array_equal(prox_l1(np.zeros(2), 1.0, 1.0), 0)
    y = np.array([0.7, -1.2])
    np.testing.assert_allclose(prox_l1(y, 1e-300, 1.0), y)


def test_zero_examples():
    for t in (1e-3, 1.0, 10.0):
        np.testing.assert_array_equal(prox_zero(np.array([1.0, 2.0]), t), [1.0, 2.0])
    np.testing.assert_array_equal(prox_zero(np.zeros(2)), 0)


@pytest.mark.parametrize("fn", [lambda y: prox_l0(y, 0.0, 1.0), lambda y: prox_l1(y, 1.0, -1.0)])
def test_nonpositive_parameters_rejected(fn):
    with pytest.raises(ValueError):
        fn(np.ones(2))


@settings(max_examples=300, deadline=None)
@given(
    y=st.floats(-5, 5),
    t=st.floats(0.01, 3),
    lam=st.floats(0.01, 3),
)
def test_scalar_prox_beats_grid(y, t, lam):
    for prox, h in [
        (prox_l0, lambda x: lam * (np.asarray(x) != 0)),
        (prox_l1, lambda x: lam * np.abs(x)),
    ]:
        x = float(prox(np.array([y]), t, lam)[0])
        assert scalar_objective(h, x, y, t) <= brute_force(h, y, t) + 1e-6


def test_rank_examples():
    np.testing.assert_allclose(prox_rank_indicator(np.diag([3.0, 2.0, 1.0]), 2), np.diag([3.0, 2.0, 0.0]), atol=1e-14)
    rng = np.random.default_rng(0)
    Y = rng.standard_normal((5, 2)) @ rng.standard_normal((2, 4))
    np.testing.assert_allclose(prox_rank_indicator(Y, 2), Y, atol=1e-12)
    uv = np.outer(rng.standard_normal(3), rng.standard_normal(3))
    np.testing.assert_allclose(prox_rank_indicator(uv, 1), uv, atol=1e-12)


@pytest.mark.parametrize("r", [0, 4])
def test_rank_out_of_range(r):
    with pytest.raises(ValueError):
        prox_rank_indicator(np.eye(3), r)


@settings(max_examples=30, deadline=None)
@given(seed=seeds, m=st.integers(2, 8), n=st.integers(2, 8), data=st.data())
def test_rank_prox_beats_random_competitors(seed, m, n, data):
    r = data.draw(st.integers(1, min(m, n)))
    rng = np.random.default_rng(seed)
    Y = rng.standard_normal((m, n))
    X = prox_rank_indicator(Y, r)
    assert np.linalg.matrix_rank(X, tol=1e-10) <= r
    best = np.linalg.norm(X - Y)
    for _ in range(100):
        C = rng.standard_normal((m, r)) @ rng.standard_normal((r, n))
        assert best <= np.linalg.norm(C - Y) + 1e-8


def test_truncated_svd_sign_convention():
    Y = np.random.default_rng(3).standard_normal((6, 4))
    U, s, Vt = truncated_svd(Y, 3)
    idx = np.argmax(np.abs(U), axis=0)
    assert np.all(U[idx, np.arange(3)] > 0)
    U2, _, _ = truncated_svd(-(-Y), 3)
    np.testing.assert_array_equal(U, U2)
    np.testing.assert_allclose(s, np.linalg.svd(Y, compute_uv=False)[:3])


def test_regularizer_values():
    x = np.array([0.0, -2.0, 3.0])
    assert Zero().value(x) == 0.0
    assert L0(0.5).value(x) == 1.0
    assert L1(0.5).value(x) == 2.5
    ri = RankIndicator((2, 2), 1)
    assert ri.value(np.array([1.0, 2.0, 2.0, 4.0])) == 0.0
    assert ri.value(np.array([1.0, 0.0, 0.0, 1.0])) == np.inf


def test_block_sum_single_block():
    y = np.array([2.0, 0.5, -1.0])
    np.testing.assert_array_equal(prox_block_sum([(L0(1.0), (0, 3))], y, 0.5), prox_l0(y, 0.5, 1.0))


def test_block_sum_rank_and_l0_blockwise_oracle():
    rng = np.random.default_rng(7)
    y = rng.standard_normal(8)
    h = BlockSum([(RankIndicator((2, 2), 1), (0, 4)), (L0(0.3), (4, 8))], dim=8)
    out = h.prox(y, 0.7)
    np.testing.assert_allclose(out[:4], prox_rank_indicator(y[:4].reshape(2, 2), 1).ravel())
    np.testing.assert_array_equal(out[4:], prox_l0(y[4:], 0.7, 0.3))
    assert h.value(out) == pytest.approx(0.3 * np.count_nonzero(out[4:]))


def test_block_sum_all_zero():
    y = np.arange(5.0)
    h = BlockSum([(Zero(), (0, 2)), (Zero(), slice(2, 5))])
    np.testing.assert_array_equal(h.prox(y, 3.0), y)


@pytest.mark.parametrize(
    "blocks, dim",
    [
        ([(Zero(), (0, 2)), (Zero(), (3, 5))], None),  # gap
        ([(Zero(), (0, 3)), (Zero(), (2, 5))], None),  # overlap
        ([(Zero(), (0, 2))], 3),  # short
        ([], None),
    ],
)
def test_block_sum_rejects_bad_partitions(blocks, dim):
    with pytest.raises(ValueError):
        BlockSum(blocks, dim=dim)


def test_describe_and_repr():
    assert L0(0.5).describe() == {"name": "l0", "lam": 0.5}
    assert repr(L1(2.0)) == "L1(lam=2.0)"
    h = BlockSum([(RankIndicator((2, 2), 1), (0, 4)), (L0(0.3), (4, 8))])
    assert h.describe()["blocks"][1] == {"name": "l0", "lam": 0.3, "range": [4, 8]}
