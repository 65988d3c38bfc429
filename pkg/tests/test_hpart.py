import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from rectsv.hpart import (IntervalUnion, build_subspace_basis, generator_matrix, split_matrix,
                          truncate, truncate_complement)

H2 = IntervalUnion.of((1, 2), (4, 6))
finite = st.floats(-1e6, 1e6, allow_nan=False)


@st.composite
def unions(draw, k_max=3):
    pts = sorted(set(draw(st.lists(st.floats(-100, 100), min_size=2, max_size=2 * k_max))))
    pairs = [(pts[i], pts[i + 1]) for i in range(0, len(pts) - 1, 2)]
    return IntervalUnion(tuple(pairs))


def test_truncate_examples():
    assert truncate(5.0, H2) == 5.0
    assert truncate(3.0, H2) == 0.0
    H = IntervalUnion.of((-8, -6))
    assert truncate(-7.0, H) == -7.0 and truncate_complement(-7.0, H) == 0.0


def test_interval_union_validation_and_format():
    with pytest.raises(ValueError):
        IntervalUnion(((0, 2), (1, 3)))
    with pytest.raises(ValueError):
        IntervalUnion(((2, 1),))
    H = IntervalUnion.parse("4:6, 1:2")
    assert H == H2 and IntervalUnion.parse(H.format()) == H
    assert 4.0 in H and 3.0 not in H and H.sup_abs() == 6 and H.gap() == 2
    assert H.shifted(1) == IntervalUnion.of((2, 3), (5, 7))


@given(finite, unions())
def test_scalar_partition_is_exact(x, H):
    a, b = truncate(x, H), truncate_complement(x, H)
    assert a + b == x and (a == 0 or b == 0)
    assert truncate(truncate(x, H), H) == truncate(x, H)


def test_split_examples():
    A = np.array([[2.0, 5.0], [0.0, -3.0]])
    s = split_matrix(A, np.zeros((2, 2)), 0.0, IntervalUnion.of((4, 6)))
    assert np.array_equal(s.regular, [[0, 5], [0, 0]]) and np.array_equal(s.irregular, [[2, 0], [0, -3]])
    rng = np.random.default_rng(0)
    A, B = rng.standard_normal((5, 3)), rng.standard_normal((5, 3))
    s = split_matrix(A, B, 0.0, IntervalUnion.of((-1e9, 1e9)))
    assert np.array_equal(s.regular, A) and np.allclose(s.irregular, B)
    s = split_matrix([[2, 5], [0, -3]], np.ones((2, 2)), 1.0, IntervalUnion.of((3, 5)))
    assert np.array_equal(s.regular, [[0, 4], [0, 0]])
    assert np.array_equal(s.irregular, [[3, 2], [1, -2]])
    assert np.array_equal(s.regular + s.irregular, s.total)
    with pytest.raises(ValueError):
        split_matrix(np.zeros((2, 2)), np.zeros((2, 3)), 0, H2)


@given(arrays(float, (4, 3), elements=st.floats(-50, 50)), st.floats(-5, 5), unions())
def test_split_invariants(A, lam, H):
    s = split_matrix(A, np.zeros_like(A), lam, H)
    nz = s.regular != 0
    assert H.contains(s.regular[nz]).all()
    shifted = A - lam
    assert np.all(~H.contains(shifted[~nz]) | (shifted[~nz] == 0))
    assert np.abs(s.regular).max() <= H.sup_abs()
    with pytest.raises(ValueError):
        s.regular[0, 0] = 1.0


@given(arrays(float, (4, 3), elements=st.integers(-8, 8).map(float)),
       arrays(float, (4, 3), elements=st.integers(-8, 8).map(float)),
       st.integers(-3, 3).map(float))
def test_split_sum_exact_on_dyadic_inputs(A, B, lam):
    # integer data keep every sum exact, so the identity must hold bit for bit
    s = split_matrix(A, B, lam, IntervalUnion.of((-4, -1), (2, 5)))
    assert np.array_equal(s.regular + s.irregular, A + B)


def test_subspace_basis_examples():
    M = np.array([[2.0, 5.0], [0.0, -3.0], [1.0, 1.0]])
    G = build_subspace_basis(M, np.zeros_like(M), IntervalUnion.of((4, 6)), [1])
    assert np.array_equal(G, [[2, 0], [0, -3], [1, 1]])
    Mp = np.arange(6.0).reshape(3, 2)
    assert np.array_equal(build_subspace_basis(M, Mp, H2, []), M + Mp)
    inside = np.full((3, 2), 5.0)
    assert not build_subspace_basis(inside, np.zeros_like(inside), H2, [0, 1]).any()
    with pytest.raises(ValueError):
        build_subspace_basis(M, M, H2, [2])


@given(arrays(float, (5, 4), elements=st.integers(-6, 6).map(float)), st.sets(st.integers(0, 3)))
def test_generator_matrix_matches_subspace_basis(A, J):
    H = IntervalUnion.of((-3, -1), (2, 4))
    B = np.ones_like(A)
    s = split_matrix(A, B, 0.0, H)
    G = generator_matrix(s, sorted(J))
    ref = build_subspace_basis(A, B, H, J)
    assert np.allclose(G, ref)
    zero_cols = sum(1 for j in J if not ref[:, j].any())
    assert np.linalg.matrix_rank(G) <= 4 - zero_cols
