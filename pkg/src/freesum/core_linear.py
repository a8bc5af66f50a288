"""Exact scalar fields and degreewise linear algebra.

Everything is stored per degree as a reduced row echelon matrix whose columns
are indexed by the ambient monomials of that degree.  The heavy lifting
(row reduction, products, inverses) is delegated to FLINT through
``python-flint``; this module only arranges rows and columns.
"""
from __future__ import annotations

from fractions import Fraction

from flint import fmpq, fmpq_mat, nmod, nmod_mat


class StructuralError(ValueError):
    """Raised when objects living in different ambient spaces are combined."""


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    f = 2
    while f * f <= p:
        if p % f == 0:
            return False
        f += 1
    return True


class Field:
    """The rationals (``p=None``) or the prime field with ``p`` elements."""

    def __init__(self, p: int | None = None):
        if p is not None:
            p = int(p)
            if not _is_prime(p):
                raise ValueError(f"field characteristic {p} is not prime")
        self.p = p
        self.zero = self(0)
        self.one = self(1)

    @classmethod
    def from_spec(cls, spec: dict | None) -> "Field":
        if not spec or spec.get("type", "Q") == "Q":
            return cls()
        if spec.get("type") == "GF":
            if "p" not in spec:
                raise ValueError("prime field requires 'p'")
            return cls(spec["p"])
        raise ValueError(f"unknown field type {spec.get('type')!r}")

    def to_spec(self) -> dict:
        return {"type": "Q"} if self.p is None else {"type": "GF", "p": self.p}

    def __call__(self, value):
        if self.p is None:
            if isinstance(value, fmpq):
                return value
            if isinstance(value, int):
                return fmpq(value)
            if isinstance(value, Fraction):
                return fmpq(value.numerator, value.denominator)
            if isinstance(value, str):
                f = Fraction(value.strip())
                return fmpq(f.numerator, f.denominator)
            if isinstance(value, nmod):
                raise TypeError("prime-field scalar used over the rationals")
            f = Fraction(value)
            return fmpq(f.numerator, f.denominator)
        if isinstance(value, nmod):
            if value.modulus() != self.p:
                raise TypeError("scalar from a different prime field")
            return value
        if isinstance(value, int):
            return nmod(value, self.p)
        if isinstance(value, (str, Fraction, fmpq)):
            f = Fraction(str(value).strip())
            if f.denominator % self.p == 0:
                raise ZeroDivisionError(f"{value} has no image in GF({self.p})")
            return nmod(f.numerator, self.p) / nmod(f.denominator, self.p)
        raise TypeError(f"cannot convert {value!r} to a field element")

    def matrix(self, nrows: int, ncols: int, entries=None):
        if entries is None:
            entries = [0] * (nrows * ncols)
        if self.p is None:
            return fmpq_mat(nrows, ncols, entries)
        return nmod_mat(nrows, ncols, [int(x) for x in entries], self.p)

    def to_text(self, c) -> str:
        if self.p is None:
            return str(c)
        return str(int(c))

    def to_fraction(self, c) -> Fraction:
        if self.p is None:
            return Fraction(int(c.p), int(c.q))
        return Fraction(int(c))

    def __eq__(self, other):
        return isinstance(other, Field) and other.p == self.p

    def __hash__(self):
        return hash(("Field", self.p))

    def __repr__(self):
        return "Field(Q)" if self.p is None else f"Field(GF({self.p}))"


def matrix_rows(mat) -> list[list]:
    """Dense rows of a flint matrix as Python lists."""
    if mat.nrows() == 0:
        return []
    return [list(r) for r in mat.tolist()] if mat.ncols() else [[] for _ in range(mat.nrows())]


def _rref_trimmed(field: Field, mat):
    """Reduced echelon form with zero rows dropped, plus the pivot columns."""
    if mat.nrows() == 0 or mat.ncols() == 0:
        return field.matrix(0, mat.ncols()), []
    red, rank = mat.rref()
    if rank == 0:
        return field.matrix(0, mat.ncols()), []
    ncols = mat.ncols()
    flat = red.entries()[: rank * ncols]
    keep = red if rank == mat.nrows() else None
    pivots = []
    col = 0
    for r in range(rank):
        base = r * ncols
        while flat[base + col] == 0:
            col += 1
        pivots.append(col)
        col += 1
    if keep is None:
        keep = field.matrix(rank, ncols, flat)
    return keep, pivots


def select_columns(field: Field, mat, cols: list[int]):
    """Submatrix made of the given columns (in the given order)."""
    n = mat.ncols()
    flat = mat.entries()
    rows = mat.nrows()
    out = [flat[r * n + c] for r in range(rows) for c in cols]
    return field.matrix(rows, len(cols), out)


def stack(field: Field, ncols: int, mats) -> object:
    """Vertical concatenation of matrices with ``ncols`` columns."""
    flat = []
    nrows = 0
    for m in mats:
        if m is None or m.nrows() == 0:
            continue
        if m.ncols() != ncols:
            raise StructuralError("column mismatch while stacking")
        flat.extend(m.entries())
        nrows += m.nrows()
    return field.matrix(nrows, ncols, flat)


def hconcat(field: Field, left, right):
    """Horizontal concatenation ``[left | right]``."""
    if left.nrows() != right.nrows():
        raise StructuralError("row mismatch while concatenating")
    a, b = left.ncols(), right.ncols()
    fl, fr = left.entries(), right.entries()
    out = []
    for r in range(left.nrows()):
        out.extend(fl[r * a:(r + 1) * a])
        out.extend(fr[r * b:(r + 1) * b])
    return field.matrix(left.nrows(), a + b, out)


def split_columns(field: Field, mat, at: int):
    """Inverse of :func:`hconcat`."""
    n = mat.ncols()
    flat = mat.entries()
    left, right = [], []
    for r in range(mat.nrows()):
        left.extend(flat[r * n:r * n + at])
        right.extend(flat[r * n + at:(r + 1) * n])
    return field.matrix(mat.nrows(), at, left), field.matrix(mat.nrows(), n - at, right)


def identity(field: Field, n: int):
    flat = [0] * (n * n)
    for i in range(n):
        flat[i * n + i] = 1
    return field.matrix(n, n, flat)


def is_zero_matrix(mat) -> bool:
    return all(x == 0 for x in mat.entries())


def row_is_zero(mat, r: int) -> bool:
    n = mat.ncols()
    flat = mat.entries()
    return all(x == 0 for x in flat[r * n:(r + 1) * n])


class Echelon:
    """One degree of a graded subspace: a reduced row echelon matrix.

    ``mat`` has exactly ``rank`` rows, ``pivots`` are strictly increasing.
    """

    __slots__ = ("field", "ncols", "mat", "pivots")

    def __init__(self, field: Field, ncols: int, mat=None, pivots=None):
        self.field = field
        self.ncols = ncols
        self.mat = mat if mat is not None else field.matrix(0, ncols)
        self.pivots = pivots or []

    @classmethod
    def from_matrix(cls, field: Field, mat) -> "Echelon":
        red, piv = _rref_trimmed(field, mat)
        return cls(field, mat.ncols(), red, piv)

    @classmethod
    def from_rows(cls, field: Field, ncols: int, rows) -> "Echelon":
        rows = list(rows)
        flat = [x for r in rows for x in r]
        return cls.from_matrix(field, field.matrix(len(rows), ncols, flat))

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def rows(self) -> list[list]:
        return matrix_rows(self.mat)

    def coords_and_residues(self, vecs):
        """For a matrix of row vectors return (coordinates, residues)."""
        if self.rank == 0:
            return self.field.matrix(vecs.nrows(), 0), vecs
        coords = select_columns(self.field, vecs, self.pivots)
        return coords, vecs - coords * self.mat

    def residues(self, vecs):
        return self.coords_and_residues(vecs)[1]

    def contains_matrix(self, vecs) -> bool:
        if vecs.nrows() == 0:
            return True
        return is_zero_matrix(self.residues(vecs))

    def __eq__(self, other):
        return (isinstance(other, Echelon) and self.ncols == other.ncols
                and self.pivots == other.pivots and self.mat == other.mat)

    def __hash__(self):
        return hash((self.ncols, tuple(self.pivots)))


class Ambient:
    """Interface of a graded ambient space with indexed monomials per degree.

    Subclasses provide ``field``, ``cap`` and ``dim(d)``.
    """

    field: Field
    cap: int

    def dim(self, d: int) -> int:  # pragma: no cover - interface
        raise NotImplementedError


class GradedSubspace:
    """Degreewise reduced echelon bases inside a graded ambient space.

    Degree 0 is allowed (the constants of an enveloping algebra) so that
    non-proper ideals can be represented faithfully.
    """

    __slots__ = ("ambient", "parts", "__weakref__")

    def __init__(self, ambient, parts: dict[int, Echelon] | None = None):
        self.ambient = ambient
        self.parts = {d: e for d, e in (parts or {}).items() if e.rank > 0}

    @property
    def field(self) -> Field:
        return self.ambient.field

    @property
    def cap(self) -> int:
        return self.ambient.cap

    def part(self, d: int) -> Echelon:
        e = self.parts.get(d)
        if e is None:
            return Echelon(self.field, self.ambient.dim(d))
        return e

    def dim(self, d: int) -> int:
        e = self.parts.get(d)
        return 0 if e is None else e.rank

    def dims(self) -> list[int]:
        """Dimensions in degrees 0..cap."""
        return [self.dim(d) for d in range(self.cap + 1)]

    def degrees(self) -> list[int]:
        return sorted(self.parts)

    def is_zero(self) -> bool:
        return not self.parts

    def _check(self, other: "GradedSubspace"):
        if other.ambient is not self.ambient:
            raise StructuralError("subspaces live in different ambient spaces")

    def __eq__(self, other):
        if not isinstance(other, GradedSubspace):
            return NotImplemented
        self._check(other)
        if set(self.parts) != set(other.parts):
            return False
        return all(self.parts[d] == other.parts[d] for d in self.parts)

    __hash__ = object.__hash__

    def __le__(self, other: "GradedSubspace") -> bool:
        return is_subspace(self, other)

    def __repr__(self):
        return f"GradedSubspace(dims={self.dims()})"


def echelonize(ambient, rows_by_degree: dict[int, list[list]]) -> GradedSubspace:
    """Span of dense row vectors given per degree."""
    parts = {}
    for d, rows in rows_by_degree.items():
        if not rows:
            continue
        if any(len(r) != ambient.dim(d) for r in rows):
            raise StructuralError(f"row length does not match ambient degree {d}")
        parts[d] = Echelon.from_rows(ambient.field, ambient.dim(d), rows)
    return GradedSubspace(ambient, parts)


def from_matrices(ambient, mats: dict[int, object]) -> GradedSubspace:
    parts = {}
    for d, m in mats.items():
        if m is None or m.nrows() == 0:
            continue
        parts[d] = Echelon.from_matrix(ambient.field, m)
    return GradedSubspace(ambient, parts)


def zero_subspace(ambient) -> GradedSubspace:
    return GradedSubspace(ambient)


def full_subspace(ambient, degrees=None) -> GradedSubspace:
    degrees = range(ambient.cap + 1) if degrees is None else degrees
    parts = {}
    for d in degrees:
        n = ambient.dim(d)
        if n:
            parts[d] = Echelon(ambient.field, n, identity(ambient.field, n), list(range(n)))
    return GradedSubspace(ambient, parts)


def subspace_sum(a: GradedSubspace, b: GradedSubspace) -> GradedSubspace:
    a._check(b)
    parts = dict(a.parts)
    for d, e in b.parts.items():
        if d not in parts:
            parts[d] = e
        else:
            f = parts[d]
            if f.rank == f.ncols or f.contains_matrix(e.mat):
                continue
            if e.contains_matrix(f.mat):
                parts[d] = e
                continue
            parts[d] = Echelon.from_matrix(a.field, stack(a.field, e.ncols, [f.mat, e.mat]))
    return GradedSubspace(a.ambient, parts)


def sum_all(ambient, spaces) -> GradedSubspace:
    out = zero_subspace(ambient)
    for s in spaces:
        out = subspace_sum(out, s)
    return out


def intersect_echelons(field: Field, e: Echelon, f: Echelon) -> Echelon:
    """Combinations of the smaller basis whose residues modulo the larger one vanish."""
    n = e.ncols
    if e.rank == 0 or f.rank == 0:
        return Echelon(field, n)
    if e.rank == n:
        return f
    if f.rank == n:
        return e
    small, big = (e, f) if e.rank <= f.rank else (f, e)
    res = big.residues(small.mat)
    if is_zero_matrix(res):
        return small
    ker = left_kernel(field, res)
    if ker.nrows() == 0:
        return Echelon(field, n)
    return Echelon.from_matrix(field, ker * small.mat)


def subspace_intersect(a: GradedSubspace, b: GradedSubspace) -> GradedSubspace:
    a._check(b)
    parts = {}
    for d in set(a.parts) & set(b.parts):
        parts[d] = intersect_echelons(a.field, a.parts[d], b.parts[d])
    return GradedSubspace(a.ambient, parts)


def is_subspace(a: GradedSubspace, b: GradedSubspace) -> bool:
    a._check(b)
    for d, e in a.parts.items():
        f = b.parts.get(d)
        if f is None or e.rank > f.rank or not f.contains_matrix(e.mat):
            return False
    return True


def first_difference(a: GradedSubspace, b: GradedSubspace):
    """Lowest degree where a has a vector outside b, with that vector (dense)."""
    a._check(b)
    for d in sorted(a.parts):
        e = a.parts[d]
        f = b.parts.get(d) or Echelon(a.field, e.ncols)
        res = f.residues(e.mat)
        for i, row in enumerate(matrix_rows(res)):
            if any(x != 0 for x in row):
                return d, matrix_rows(e.mat)[i]
    return None


def membership_coords(vec: dict[int, list], space: GradedSubspace):
    """Coordinates of a graded vector (degree -> dense list) in the echelon basis.

    Returns a dict degree -> coordinate list, or None if the vector is not in
    the subspace.
    """
    out = {}
    field = space.field
    for d, v in vec.items():
        if all(x == 0 for x in v):
            continue
        e = space.part(d)
        m = field.matrix(1, e.ncols, v)
        coords, res = e.coords_and_residues(m)
        if not is_zero_matrix(res):
            return None
        out[d] = list(coords.entries())
    return out


def complement_rows(field: Field, inner: Echelon, outer: Echelon) -> list[list]:
    """Rows of ``outer`` (in order) that extend a basis of ``inner`` to one of ``outer``.

    Lowest pivot first: the chosen rows are the first rows of ``outer``'s echelon
    basis that are independent modulo ``inner``.
    """
    if outer.rank == 0:
        return []
    res = inner.residues(outer.mat)
    picked = independent_subset(field, res)
    rows = matrix_rows(outer.mat)
    return [rows[i] for i in picked]


def independent_subset(field: Field, mat) -> list[int]:
    """Indices of the greedy (first come) maximal independent subset of rows."""
    if mat.nrows() == 0:
        return []
    _, piv = _rref_trimmed(field, mat.transpose())
    return piv


class Basis:
    """An arbitrary (not echelon) basis of one degree with coordinate solving.

    ``rows`` must be linearly independent.
    """

    def __init__(self, field: Field, mat):
        self.field = field
        self.mat = mat
        self.size = mat.nrows()
        if self.size:
            _, self.cols = _rref_trimmed(field, mat)
            if len(self.cols) != self.size:
                raise ValueError("basis rows are linearly dependent")
            self.inv = select_columns(field, mat, self.cols).inv()
        else:
            self.cols = []
            self.inv = None

    def coords_matrix(self, vecs):
        """Coordinates for the rows of ``vecs``; raises if some row is outside the span."""
        if self.size == 0:
            if not is_zero_matrix(vecs):
                return None
            return self.field.matrix(vecs.nrows(), 0)
        x = select_columns(self.field, vecs, self.cols) * self.inv
        if x * self.mat != vecs:
            return None
        return x

    def coords(self, vec: list):
        x = self.coords_matrix(self.field.matrix(1, len(vec), vec))
        return None if x is None else list(x.entries())


def solve_in_span(field: Field, vectors, target: list):
    """Coefficients c with sum c_i vectors_i = target (vectors may be dependent), or None."""
    if vectors.nrows() == 0:
        return [] if all(x == 0 for x in target) else None
    picked = independent_subset(field, vectors)
    rows = matrix_rows(vectors)
    sub = field.matrix(len(picked), vectors.ncols(), [x for i in picked for x in rows[i]])
    c = Basis(field, sub).coords(target)
    if c is None:
        return None
    out = [field.zero] * vectors.nrows()
    for i, x in zip(picked, c):
        out[i] = x
    return out


def left_kernel(field: Field, mat):
    """Basis of {x : x * mat = 0} as a matrix in reduced echelon form."""
    n = mat.nrows()
    if n == 0:
        return field.matrix(0, 0)
    aug = hconcat(field, mat, identity(field, n))
    red, piv = _rref_trimmed(field, aug)
    start = sum(1 for p in piv if p < mat.ncols())
    _, right = split_columns(field, red, mat.ncols())
    flat = right.entries()[start * n:]
    return field.matrix(len(piv) - start, n, flat)
