import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from actn.tensor import DimensionError, Tensor, TruncationSpec, contract, fuse, svd_split, truncated_svd, unfuse


def rand(rng, *shape):
    return rng.uniform(-1, 1, size=shape)


def test_identity_times_vector():
    out = contract(Tensor("ij", np.eye(2)), Tensor("j", [3.0, 4.0]))
    assert out.legs == ("i",)
    np.testing.assert_array_equal(out.data, [3, 4])


def test_outer_product():
    out = contract(Tensor("i", [1.0, 2.0]), Tensor("j", [3.0, 4.0]))
    np.testing.assert_array_equal(out.data, [[3, 4], [6, 8]])


def test_matmul_matches_triple_loop():
    rng = np.random.default_rng(1)
    a, b = rand(rng, 3, 4), rand(rng, 4, 2)
    ref = np.zeros((3, 2))
    for i in range(3):
        for j in range(2):
            for k in range(4):
                ref[i, j] += a[i, k] * b[k, j]
    out = contract(Tensor("ik", a), Tensor("kj", b))
    assert np.max(np.abs(out.data - ref)) <= 1e-14


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        contract(Tensor("ij", np.ones((2, 3))), Tensor("j", np.ones(2)))


def test_tensor_rejects_bad_legs():
    with pytest.raises(ValueError):
        Tensor("ii", np.ones((2, 2)))
    with pytest.raises(ValueError):
        Tensor("i", np.ones((2, 2)))


def test_tensor_does_not_freeze_caller_array():
    arr = np.ones(3)
    Tensor("i", arr)
    arr[0] = 5.0
    with pytest.raises(ValueError):
        Tensor("i", arr).data[0] = 1.0


def test_fuse_roundtrip_and_single_group():
    t = Tensor("ab", np.arange(6.0).reshape(2, 3))
    f = fuse(t, [["a", "b"]], names=["ab"])
    assert f.data.shape == (6,)
    back = unfuse(f, "ab", [("a", 2), ("b", 3)])
    np.testing.assert_array_equal(back.data, t.data)
    same = fuse(t, [["a"], ["b"]])
    np.testing.assert_array_equal(same.data, t.data)


def test_fuse_unknown_leg():
    with pytest.raises(KeyError):
        fuse(Tensor("ab", np.ones((2, 2))), [["a", "z"]])


def test_fused_contraction_matches_unfused():
    rng = np.random.default_rng(2)
    x, y = Tensor("abc", rand(rng, 2, 2, 2)), Tensor("abd", rand(rng, 2, 2, 2))
    direct = contract(x, y).transpose(["c", "d"])
    fx = fuse(x, [["a", "b"], ["c"]], names=["ab", "c"])
    fy = fuse(y, [["a", "b"], ["d"]], names=["ab", "d"])
    np.testing.assert_allclose(contract(fx, fy).data, direct.data, rtol=1e-14)


def test_svd_rank_one_exact():
    t = Tensor("ij", np.outer([1.0, 2.0], [3.0, 4.0]))
    left, right, w = svd_split(t, ["i"], TruncationSpec(1))
    assert w <= 1e-15
    np.testing.assert_allclose(contract(left, right).data, t.data, rtol=1e-14)


def test_svd_identity_truncation():
    t = Tensor("ij", np.eye(4))
    _, _, w4 = svd_split(t, ["i"], TruncationSpec(4))
    _, _, w2 = svd_split(t, ["i"], TruncationSpec(2))
    assert w4 == 0.0
    assert w2 == pytest.approx(np.sqrt(2) / 2, rel=1e-14)


def test_svd_tail_matches_full_svd():
    rng = np.random.default_rng(3)
    m = rand(rng, 6, 6)
    left, right, w = svd_split(Tensor("ij", m), ["i"], TruncationSpec(3))
    s = np.linalg.svd(m, compute_uv=False)
    err = np.linalg.norm(contract(left, right).data - m)
    assert err == pytest.approx(np.sqrt(np.sum(s[3:] ** 2)), rel=1e-12)
    assert w == pytest.approx(err / np.linalg.norm(m), rel=1e-12)


def test_svd_zero_tensor():
    left, right, w = svd_split(Tensor("ijk", np.zeros((2, 3, 2))), ["i"], TruncationSpec(5))
    assert left.dim("bond") == 1 and w == 0.0
    assert not np.any(contract(left, right).data)


def test_svd_split_rejects_improper_subset():
    t = Tensor("ij", np.eye(2))
    with pytest.raises(ValueError):
        svd_split(t, [], TruncationSpec(1))
    with pytest.raises(ValueError):
        svd_split(t, ["i", "j"], TruncationSpec(1))


def test_truncation_spec_validation():
    with pytest.raises(ValueError):
        TruncationSpec(0)
    with pytest.raises(ValueError):
        TruncationSpec(2, cutoff=1.0)


def test_cutoff_and_chi_both_apply():
    m = np.diag([1.0, 0.5, 1e-3, 1e-6])
    _, s, _, _ = truncated_svd(m, TruncationSpec(4, cutoff=1e-2))
    assert len(s) == 2
    _, s, _, _ = truncated_svd(m, TruncationSpec(1, cutoff=1e-9))
    assert len(s) == 1


def test_degenerate_values_keep_exactly_chi():
    _, s, _, _ = truncated_svd(np.eye(5), TruncationSpec(3))
    assert len(s) == 3


shapes = st.tuples(st.integers(1, 4), st.integers(1, 4), st.integers(1, 4))


@settings(max_examples=40, deadline=None)
@given(shapes, st.integers(0, 2**31))
def test_contract_commutes(shape, seed):
    rng = np.random.default_rng(seed)
    i, j, k = shape
    a, b = Tensor("ij", rand(rng, i, j)), Tensor("jk", rand(rng, j, k))
    ab = contract(a, b)
    ba = contract(b, a).transpose(ab.legs)
    np.testing.assert_allclose(ab.data, ba.data, rtol=1e-15, atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.tuples(*(st.integers(1, 4),) * 4), st.integers(0, 2**31))
def test_contract_associative(shape, seed):
    rng = np.random.default_rng(seed)
    p, q, r, s = shape
    a, b, c = Tensor("pq", rand(rng, p, q)), Tensor("qr", rand(rng, q, r)), Tensor("rs", rand(rng, r, s))
    left = contract(contract(a, b), c)
    right = contract(a, contract(b, c)).transpose(left.legs)
    scale = max(1.0, np.max(np.abs(left.data)))
    assert np.max(np.abs(left.data - right.data)) <= 1e-13 * scale


@settings(max_examples=40, deadline=None)
@given(shapes, st.integers(0, 2**31))
def test_full_rank_split_reconstructs(shape, seed):
    rng = np.random.default_rng(seed)
    t = Tensor("abc", rand(rng, *shape))
    left, right, w = svd_split(t, ["a", "c"], TruncationSpec(64))
    rec = contract(left, right).transpose(t.legs)
    assert np.linalg.norm(rec.data - t.data) <= 1e-12 * np.linalg.norm(t.data)
    assert w <= 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 7), st.integers(0, 2**31))
def test_discarded_weight_monotone_in_chi(n, seed):
    t = Tensor("ij", np.random.default_rng(seed).uniform(-1, 1, (n, n)))
    weights = [svd_split(t, ["i"], TruncationSpec(chi))[2] for chi in range(1, n + 1)]
    assert all(b <= a + 1e-15 for a, b in zip(weights, weights[1:]))
