"""Matrices over truncated quotients of U(F), elementary transformations and
valuation-aware triangularization.

Rows are right modules: scaling multiplies a row on the right, and adding
row i to row j adds row_i * q.  Every operation is recorded so that the
result can be replayed from the original matrix.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from itertools import product as iproduct

from .core_linear import GradedSubspace, hconcat, left_kernel, matrix_rows
from .enveloping import UEAElement
from .subspace_calculus import DeltaFiltration, uea_ideal, valuation_psi


class OreExhausted(RuntimeError):
    """No Ore pair exists within the degree bound (a truncation artifact, not a proof of absence)."""

    def __init__(self, message, position=None):
        super().__init__(message)
        self.position = position


class TriangularizationError(RuntimeError):
    """A post-condition of the triangularization could not be certified."""


class QuotientContext:
    """U(F) (truncated at the cap) modulo a two-sided ideal, with an optional coarser quotient."""

    def __init__(self, algebra, modulus: GradedSubspace, coarse: GradedSubspace | None = None,
                 filtration: DeltaFiltration | None = None, name: str = ""):
        self.algebra = algebra
        self.modulus = modulus
        self.coarse = coarse
        self.filtration = filtration
        self.name = name
        if modulus.part(0).rank:
            raise ValueError("modulus contains 1; the quotient is trivial")
        self._psi = {}

    def reduce(self, u: UEAElement) -> UEAElement:
        return self.algebra.residue(self.modulus, u)

    def is_zero(self, u: UEAElement) -> bool:
        return self.algebra.contains(self.modulus, u)

    def mul(self, a: UEAElement, b: UEAElement) -> UEAElement:
        return self.reduce(self.algebra.multiply(a, b))

    def psi(self, u: UEAElement):
        key = frozenset(self.reduce(u).terms.items())
        if key not in self._psi:
            self._psi[key] = valuation_psi(u, self.filtration, self)
        return self._psi[key]

    def verify_ideal(self) -> bool:
        """Check the modulus is closed under multiplication by letters on both sides."""
        return uea_ideal(self.algebra, self.modulus) == self.modulus

    def to_dict(self):
        return {"name": self.name, "modulus_dims": self.modulus.dims(),
                "coarse_dims": self.coarse.dims() if self.coarse is not None else None}


def quotient_map(u: UEAElement, ctx: QuotientContext) -> UEAElement:
    return ctx.reduce(u)


def max_degree(u: UEAElement) -> int:
    d = u.degree()
    return 0 if d is None or d < 0 else d


# ---------------------------------------------------------------------------
# Ore pairs


def _quotient_words(ctx: QuotientContext, top: int):
    """Words of degree <= top that are not pivots of the modulus (a basis of the quotient)."""
    alg = ctx.algebra
    out = []
    for d in range(0, min(top, alg.cap) + 1):
        piv = set(ctx.modulus.part(d).pivots)
        ws = alg.words(d)
        out.extend(ws[i] for i in range(len(ws)) if i not in piv)
    return out


def _residue_row_blocks(ctx, elements):
    """Matrix whose rows are the residues of ``elements`` in all degrees, concatenated."""
    alg = ctx.algebra
    field = alg.field
    total = None
    for d in range(0, alg.cap + 1):
        n = alg.dim(d)
        if n == 0:
            continue
        flat = []
        for u in elements:
            flat.extend(u.vectors().get(d, [field.zero] * n))
        block = field.matrix(len(elements), n, flat)
        if ctx.modulus.part(d).rank:
            block = ctx.modulus.part(d).residues(block)
        total = block if total is None else hconcat(field, total, block)
    return total


def _certify_pair(ctx, a, b, c, d) -> bool:
    if ctx.is_zero(c) or ctx.is_zero(d):
        return False
    return ctx.is_zero(ctx.algebra.multiply(a, c) - ctx.algebra.multiply(b, d))


def ore_pair(a: UEAElement, b: UEAElement, ctx: QuotientContext, degree_bound: int | None = None):
    """Nonzero (c, d) with a*c = b*d in the quotient, certified by membership."""
    alg = ctx.algebra
    a, b = ctx.reduce(a), ctx.reduce(b)
    if ctx.is_zero(a) or ctx.is_zero(b):
        raise ValueError("Ore pairs need nonzero elements")
    one = alg.one()
    if a == b:
        return one, one
    if a.degree() == 0:
        return ctx.reduce(b.scale(1 / alg.field(a.constant))), one
    if b.degree() == 0:
        return one, ctx.reduce(a.scale(1 / alg.field(b.constant)))
    if ctx.is_zero(alg.multiply(a, b) - alg.multiply(b, a)):
        return b, a
    da, db = max_degree(a), max_degree(b)
    if degree_bound is None:
        degree_bound = alg.cap - max(da, db)
    for top in range(1, max(degree_bound, 0) + 1):
        wc = [w for w in _quotient_words(ctx, min(top, alg.cap - da))]
        wd = [w for w in _quotient_words(ctx, min(top, alg.cap - db))]
        if not wc or not wd:
            continue
        rows = [alg.multiply(a, UEAElement(alg, {w: alg.field.one})) for w in wc]
        rows += [alg.multiply(b, UEAElement(alg, {w: alg.field.one})).scale(-1) for w in wd]
        mat = _residue_row_blocks(ctx, rows)
        ker = left_kernel(alg.field, mat)
        if ker.nrows() == 0:
            continue
        found = _pick_pair(ctx, a, b, wc, wd, matrix_rows(ker))
        if found is not None:
            return found
    raise OreExhausted(f"Ore search exhausted up to degree {degree_bound}")


def _pick_pair(ctx, a, b, wc, wd, kernel_rows):
    alg = ctx.algebra
    nc = len(wc)

    def split(vec):
        c = UEAElement(alg, {w: x for w, x in zip(wc, vec[:nc]) if x != 0})
        d = UEAElement(alg, {w: x for w, x in zip(wd, vec[nc:]) if x != 0})
        return c, d

    candidates = list(kernel_rows)
    if len(kernel_rows) > 1:
        candidates.append([sum(col) for col in zip(*kernel_rows)])
        for weights in iproduct((1, 2, -1), repeat=min(len(kernel_rows), 3)):
            combo = [sum(w * x for w, x in zip(weights, col)) for col in zip(*kernel_rows[:len(weights)])]
            candidates.append(combo)
    fallback = None
    for vec in candidates:
        if not any(x != 0 for x in vec[:nc]) or not any(x != 0 for x in vec[nc:]):
            continue
        c, d = split(vec)
        if not _certify_pair(ctx, a, b, c, d):
            continue
        if not ctx.is_zero(alg.multiply(a, c)):
            return c, d
        if fallback is None:
            fallback = (c, d)
    return fallback


# ---------------------------------------------------------------------------
# elementary operations and matrices


@dataclass(frozen=True)
class ElementaryOp:
    kind: str          # col_swap | row_swap | row_scale | row_addmul
    i: int
    j: int | None = None
    q: UEAElement | None = None

    def to_dict(self, alg=None):
        out = {"kind": self.kind, "i": self.i}
        if self.j is not None:
            out["j"] = self.j
        if self.q is not None:
            out["q"] = alg.format_element(self.q) if alg is not None else str(self.q)
        return out

    def __str__(self):
        if self.kind in ("col_swap", "row_swap"):
            return f"{self.kind}({self.i},{self.j})"
        if self.kind == "row_scale":
            return f"row_scale({self.i}, {self.q})"
        return f"row_addmul({self.i}->{self.j}, {self.q})"


def col_swap(i, j):
    return ElementaryOp("col_swap", i, j)


def row_swap(i, j):
    return ElementaryOp("row_swap", i, j)


def row_scale(i, q):
    return ElementaryOp("row_scale", i, None, q)


def row_addmul(i, j, q):
    return ElementaryOp("row_addmul", i, j, q)


class OreMatrix:
    """Immutable matrix of reduced elements with the ledger that produced it."""

    def __init__(self, entries, ctx: QuotientContext, ledger=(), origin=None, perm=None):
        self.ctx = ctx
        self.entries = tuple(tuple(ctx.reduce(x) for x in row) for row in entries)
        self.ledger = tuple(ledger)
        self.origin = self.entries if origin is None else origin
        self.perm = tuple(range(self.ncols)) if perm is None else tuple(perm)

    @property
    def nrows(self):
        return len(self.entries)

    @property
    def ncols(self):
        return len(self.entries[0]) if self.entries else 0

    def __getitem__(self, key):
        i, j = key
        return self.entries[i][j]

    def is_zero_at(self, i, j) -> bool:
        return self.entries[i][j].is_zero()

    def apply(self, op: ElementaryOp) -> "OreMatrix":
        ctx = self.ctx
        rows = [list(r) for r in self.entries]
        perm = list(self.perm)
        if op.kind == "col_swap":
            for r in rows:
                r[op.i], r[op.j] = r[op.j], r[op.i]
            perm[op.i], perm[op.j] = perm[op.j], perm[op.i]
        elif op.kind == "row_swap":
            rows[op.i], rows[op.j] = rows[op.j], rows[op.i]
        elif op.kind == "row_scale":
            if ctx.is_zero(op.q):
                raise ValueError("row_scale needs a nonzero element")
            rows[op.i] = [ctx.mul(x, op.q) for x in rows[op.i]]
        elif op.kind == "row_addmul":
            if not op.i < op.j:
                raise ValueError("row_addmul only adds a row to a later row")
            if ctx.is_zero(op.q):
                raise ValueError("row_addmul needs a nonzero element")
            rows[op.j] = [y + ctx.mul(x, op.q) for x, y in zip(rows[op.i], rows[op.j])]
        else:
            raise ValueError(f"unknown operation {op.kind}")
        return OreMatrix(rows, ctx, self.ledger + (op,), self.origin, perm)

    def replay(self, ctx: QuotientContext | None = None) -> "OreMatrix":
        """Re-apply the ledger to the origin (optionally in another context)."""
        m = OreMatrix(self.origin, ctx or self.ctx)
        for op in self.ledger:
            m = m.apply(op)
        return m

    def with_origin(self, entries) -> "OreMatrix":
        """Fresh matrix in this context whose origin is ``entries``."""
        return OreMatrix(entries, self.ctx)

    def same_entries(self, other: "OreMatrix") -> bool:
        return self.entries == other.entries

    def to_lists(self, alg=None):
        alg = alg or self.ctx.algebra
        return [[alg.format_element(x) for x in row] for row in self.entries]


def replay_ledger(entries, ledger, ctx: QuotientContext) -> OreMatrix:
    m = OreMatrix(entries, ctx)
    for op in ledger:
        m = m.apply(op)
    return m


# ---------------------------------------------------------------------------
# triangular shape


def triangular_rank(m: OreMatrix):
    """t if m is triangular of rank t, else None."""
    t = 0
    while t < min(m.nrows, m.ncols) and not m.is_zero_at(t, t):
        t += 1
    for k in range(m.nrows):
        for n in range(m.ncols):
            if k >= t:
                if not m.is_zero_at(k, n):
                    return None
            elif n < k and not m.is_zero_at(k, n):
                return None
    return t


def check_triangular(m: OreMatrix, rank: int | None = None):
    """(ok, rank, message): shape plus ψ(b_kk) <= ψ(b_kn) for k <= t."""
    t = triangular_rank(m)
    if t is None:
        return False, None, "matrix is not triangular"
    if rank is not None and t != rank:
        return False, t, f"rank {t} differs from expected {rank}"
    ctx = m.ctx
    for k in range(t):
        pk = ctx.psi(m[k, k])
        for n in range(m.ncols):
            if ctx.psi(m[k, n]) < pk:
                return False, t, f"ψ condition fails at row {k + 1}, column {n + 1}"
    return True, t, ""


def _eliminate(m: OreMatrix, t: int, k: int, col: int, degree_bound) -> OreMatrix:
    """Clear m[k, col] using pivot row t (t < k): row_k*d + row_t*c with b_tt c = -a_k d."""
    pivot, entry = m[t, col], m[k, col]
    try:
        c, d = ore_pair(pivot, entry.scale(-1), m.ctx, degree_bound)
    except OreExhausted as exc:
        raise OreExhausted(str(exc), position=(k + 1, col + 1)) from None
    if not (d.degree() == 0 and d.constant == 1):
        m = m.apply(row_scale(k, d))
    m = m.apply(row_addmul(t, k, c))
    if not m.is_zero_at(k, col):
        raise TriangularizationError(f"elimination left a nonzero entry at ({k + 1},{col + 1})")
    return m


def _clear_below(m: OreMatrix, rows, col: int, pivot_row: int, degree_bound):
    for k in rows:
        if not m.is_zero_at(k, col):
            m = _eliminate(m, pivot_row, k, col, degree_bound)
    return m


def coarse_triangular_rank(m: OreMatrix):
    """Triangular rank of the image in the coarser quotient, or None."""
    ctx = m.ctx
    if ctx.coarse is None:
        return None
    alg = ctx.algebra
    zero = [[alg.contains(ctx.coarse, x) for x in row] for row in m.entries]
    t = 0
    while t < min(m.nrows, m.ncols) and not zero[t][t]:
        t += 1
    for k in range(m.nrows):
        for n in range(m.ncols):
            if (k >= t or n < k) and not zero[k][n]:
                return None
    return t


def triangularize(m: OreMatrix, prefix: int | str | None = "auto", degree_bound: int | None = None) -> OreMatrix:
    """Bring m to triangular shape with ψ(b_kk) <= ψ(b_kn).

    The first ``prefix`` rows (those whose image in the coarser quotient is
    already triangular) are handled with right scalings and downward
    additions only; the lower rows of those columns are then cleared the same
    way, and the remaining block is fully pivoted (minimal ψ, ties broken by
    row then column).  ``prefix="auto"`` reads it off the coarser quotient.
    """
    ctx = m.ctx
    alg = ctx.algebra
    if degree_bound is None:
        top = max((max_degree(x) for row in m.entries for x in row), default=0)
        degree_bound = alg.cap - top
    if prefix == "auto":
        prefix = coarse_triangular_rank(m) or 0
    prefix = min(prefix or 0, m.nrows, m.ncols)
    # pivoting phase: rows 1..prefix
    for t in range(prefix):
        for col in range(t):
            if not m.is_zero_at(t, col):
                m = _eliminate(m, col, t, col, degree_bound)
        if m.is_zero_at(t, t):
            raise TriangularizationError(f"diagonal entry {t + 1} vanished while pivoting the first rows")
    # clear the first prefix columns below the diagonal
    for col in range(prefix):
        m = _clear_below(m, range(prefix, m.nrows), col, col, degree_bound)
    # full pivoting on the remaining block
    t = prefix
    while t < min(m.nrows, m.ncols):
        best = None
        for k in range(t, m.nrows):
            for n in range(t, m.ncols):
                if m.is_zero_at(k, n):
                    continue
                p = ctx.psi(m[k, n])
                if best is None or p < best[0]:
                    best = (p, k, n)
        if best is None:
            break
        _, k, n = best
        if k != t:
            m = m.apply(row_swap(t, k))
        if n != t:
            m = m.apply(col_swap(t, n))
        m = _clear_below(m, range(t + 1, m.nrows), t, t, degree_bound)
        t += 1
    ok, rank, msg = check_triangular(m)
    if not ok:
        raise TriangularizationError(msg)
    return m


# ---------------------------------------------------------------------------
# right combinations of rows


def combined_row_scaled(m: OreMatrix, combo, op: ElementaryOp, degree_bound: int | None = None):
    """(d, new combo): if alpha = sum row_i * combo[i] in m, then alpha^op * d = sum row'_i * new[i]."""
    ctx = m.ctx
    alg = ctx.algebra
    combo = [ctx.reduce(x) for x in combo]
    one = alg.one()
    if op.kind == "row_swap":
        new = list(combo)
        new[op.i], new[op.j] = new[op.j], new[op.i]
        return one, new
    if op.kind == "col_swap":
        return one, combo
    if op.kind == "row_addmul":
        new = list(combo)
        new[op.i] = combo[op.i] - ctx.mul(op.q, combo[op.j])
        return one, new
    if op.kind == "row_scale":
        b = combo[op.i]
        if b.is_zero():
            return one, combo
        c, d = ore_pair(op.q, b, ctx, degree_bound)
        new = [ctx.mul(x, d) for x in combo]
        new[op.i] = c
        return d, new
    raise ValueError(f"unknown operation {op.kind}")


def _right_combination(m: OreMatrix, combo):
    ctx = m.ctx
    alg = ctx.algebra
    out = [alg.zero() for _ in range(m.ncols)]
    for i, b in enumerate(combo):
        if b.is_zero():
            continue
        for n in range(m.ncols):
            out[n] = out[n] + ctx.mul(m[i, n], b)
    return out


@dataclass
class ConservationRecord:
    row: int
    certified: bool
    scale: UEAElement | None = None
    combo: list = dc_field(default_factory=list)
    reason: str = ""


def row_conservation(result: OreMatrix, degree_bound: int | None = None) -> list[ConservationRecord]:
    """For each original row alpha, d != 0 with alpha^Φ d a right combination of the result rows."""
    ctx = result.ctx
    alg = ctx.algebra
    records = []
    for r in range(len(result.origin)):
        m = OreMatrix(result.origin, ctx)
        combo = [alg.one() if i == r else alg.zero() for i in range(m.nrows)]
        alpha = list(m.entries[r])
        scale = alg.one()
        try:
            for op in result.ledger:
                d, combo = combined_row_scaled(m, combo, op, degree_bound)
                if op.kind == "col_swap":
                    alpha[op.i], alpha[op.j] = alpha[op.j], alpha[op.i]
                if not (d.degree() == 0 and d.constant == 1):
                    alpha = [ctx.mul(x, d) for x in alpha]
                    scale = ctx.mul(scale, d)
                m = m.apply(op)
        except OreExhausted as exc:
            records.append(ConservationRecord(r, False, reason=str(exc)))
            continue
        lhs = alpha
        rhs = _right_combination(m, combo)
        same = all(ctx.is_zero(x - y) for x, y in zip(lhs, rhs))
        if not same:
            records.append(ConservationRecord(r, False, scale, combo, "recombination mismatch"))
        elif ctx.is_zero(scale):
            records.append(ConservationRecord(r, False, scale, combo, "scale vanished in the truncation"))
        else:
            records.append(ConservationRecord(r, True, scale, combo))
    return records

