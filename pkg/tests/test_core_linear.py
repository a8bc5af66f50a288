from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from freesum.core_linear import (
    Ambient, Basis, Echelon, Field, StructuralError, echelonize, full_subspace, is_subspace,
    left_kernel, matrix_rows, membership_coords, solve_in_span, subspace_intersect, subspace_sum,
    zero_subspace,
)

from oracle import rank


class Box(Ambient):
    """Graded ambient with fixed dimensions, enough for the linear algebra tests."""

    def __init__(self, dims, field=None):
        self.field = field or Field()
        self.cap = len(dims) - 1
        self._dims = dims

    def dim(self, d):
        return self._dims[d] if 0 <= d <= self.cap else 0


small = st.integers(-3, 3)


def rows_strategy(ncols, max_rows=5):
    return st.lists(st.lists(small, min_size=ncols, max_size=ncols), min_size=0, max_size=max_rows)


def test_field_conversions():
    Q = Field()
    assert Q("3/4") == Q(Fraction(3, 4))
    assert Q.to_fraction(Q("-2/6")) == Fraction(-1, 3)
    F7 = Field(7)
    assert int(F7("1/2")) == 4
    assert F7.to_spec() == {"type": "GF", "p": 7}
    with pytest.raises(ValueError):
        Field(6)
    with pytest.raises(ZeroDivisionError):
        F7("1/7")


def test_field_from_spec():
    assert Field.from_spec(None) == Field()
    assert Field.from_spec({"type": "GF", "p": 5}) == Field(5)
    with pytest.raises(ValueError):
        Field.from_spec({"type": "R"})


def test_echelon_is_reduced():
    Q = Field()
    e = Echelon.from_rows(Q, 3, [[2, 4, 6], [1, 2, 4], [3, 6, 10]])
    assert e.rank == 2
    assert e.pivots == [0, 2]
    assert e.rows() == [[1, 2, 0], [0, 0, 1]]


def test_mixed_ambients_are_rejected():
    a, b = Box([1, 2]), Box([1, 2])
    with pytest.raises(StructuralError):
        subspace_sum(zero_subspace(a), zero_subspace(b))


def test_row_length_checked():
    with pytest.raises(StructuralError):
        echelonize(Box([1, 2]), {1: [[1, 2, 3]]})


@settings(max_examples=60, deadline=None)
@given(rows_strategy(4), rows_strategy(4))
def test_sum_and_intersection_dimensions(ra, rb):
    box = Box([0, 4])
    A = echelonize(box, {1: ra})
    B = echelonize(box, {1: rb})
    S = subspace_sum(A, B)
    I = subspace_intersect(A, B)
    da, db = rank(ra) if ra else 0, rank(rb) if rb else 0
    ds = rank(ra + rb) if ra + rb else 0
    assert A.dim(1) == da and B.dim(1) == db and S.dim(1) == ds
    assert I.dim(1) == da + db - ds
    assert is_subspace(I, A) and is_subspace(I, B)
    assert is_subspace(A, S) and is_subspace(B, S)


@settings(max_examples=60, deadline=None)
@given(rows_strategy(5, 4), st.lists(small, min_size=4, max_size=4))
def test_membership_and_solve(rows, coefs):
    Q = Field()
    box = Box([0, 5])
    if not rows:
        return
    coefs = coefs[:len(rows)]
    target = [sum(c * r[i] for c, r in zip(coefs, rows)) for i in range(5)]
    space = echelonize(box, {1: rows})
    assert membership_coords({1: [Q(x) for x in target]}, space) is not None
    mat = Q.matrix(len(rows), 5, [x for r in rows for x in r])
    sol = solve_in_span(Q, mat, [Q(x) for x in target])
    assert sol is not None
    assert [sum(s * r[i] for s, r in zip(sol, rows)) for i in range(5)] == target


@settings(max_examples=60, deadline=None)
@given(rows_strategy(4, 6))
def test_left_kernel(rows):
    Q = Field()
    if not rows:
        return
    mat = Q.matrix(len(rows), 4, [x for r in rows for x in r])
    ker = left_kernel(Q, mat)
    assert ker.nrows() == len(rows) - rank(rows)
    if ker.nrows():
        assert all(x == 0 for x in (ker * mat).entries())


def test_vector_outside_span():
    box = Box([0, 3])
    space = echelonize(box, {1: [[1, 0, 0], [0, 1, 0]]})
    assert membership_coords({1: [0, 0, 1]}, space) is None
    assert membership_coords({1: [2, 3, 0]}, space) == {1: [2, 3]}


def test_basis_coordinates():
    Q = Field()
    b = Basis(Q, Q.matrix(2, 3, [1, 1, 0, 0, 1, 1]))
    assert b.coords([1, 3, 2]) == [1, 2]
    assert b.coords([1, 0, 1]) is None
    with pytest.raises(ValueError):
        Basis(Q, Q.matrix(2, 2, [1, 1, 2, 2]))


def test_prime_field_ranks_differ():
    # [[1,1],[1,-1]] has determinant -2: singular mod 2 only
    for p, expected in ((None, 2), (2, 1), (3, 2)):
        box = Box([0, 2], Field(p))
        assert echelonize(box, {1: [[1, 1], [1, -1]]}).dim(1) == expected


def test_full_and_zero():
    box = Box([1, 2, 3])
    full = full_subspace(box)
    assert full.dims() == [1, 2, 3]
    assert zero_subspace(box).is_zero()
    assert is_subspace(zero_subspace(box), full)
    assert matrix_rows(full.part(1).mat) == [[1, 0], [0, 1]]
