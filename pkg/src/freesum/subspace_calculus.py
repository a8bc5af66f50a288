"""Ideals, series and filtrations inside F and U(F), degree by degree.

Lie subspaces live in the same coordinates as U(F) (a Lie element is a
combination of normal words), so Lie-side and enveloping-side subspaces can be
intersected directly.  Closures are computed in increasing degree: the part
of degree d only depends on lower degrees, so one pass reaches the fixpoint.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .core_linear import (
    Echelon, GradedSubspace, complement_rows, echelonize, from_matrices, is_subspace, stack,
    subspace_intersect, subspace_sum, zero_subspace,
)
from .enveloping import EnvelopingAlgebra, UEAElement
from .presentation import InputError, parse_lie_expr

INFINITY = math.inf


class NotLieError(ValueError):
    """A generator handed to a Lie-side closure is not a Lie element."""


class ClosureError(ValueError):
    """A subspace lacks the closure property an operation relies on."""


def is_graded(alg: EnvelopingAlgebra, space: GradedSubspace) -> bool:
    return space.ambient is alg


def _rows_matrix(alg, d, elements):
    n = alg.dim(d)
    idx = alg.index(d)
    flat = [0] * (len(elements) * n)
    for r, el in enumerate(elements):
        for w, c in el.terms.items():
            flat[r * n + idx[w]] = c
    return alg.field.matrix(len(elements), n, flat)


def _bracket_with_letter(alg, x: int, e: int):
    """Matrix of u -> [u, x] from degree e to degree e + w(x)."""
    return alg.letter_matrix(x, e, left=False) - alg.letter_matrix(x, e, left=True)


def span_elements(alg, elements) -> GradedSubspace:
    return alg.span(elements)


def check_lie(alg, elements):
    F = alg.lie_space()
    for el in elements:
        if el.constant != 0 or not alg.contains(F, el):
            raise NotLieError(f"{el} is not a Lie element within the cap")


# ---------------------------------------------------------------------------
# Lie-side closures


def lie_ideal_closure(alg: EnvelopingAlgebra, gens, check: bool = True) -> GradedSubspace:
    """Smallest ideal of F (within the cap) containing the given Lie elements.

    Homogeneous generators give a graded subspace.  If some generator is
    inhomogeneous the ideal is computed in F modulo degrees above the cap and
    returned in flat coordinates.
    """
    gens = [g for g in gens if not g.is_zero()]
    if check:
        check_lie(alg, gens)
    if all(g.is_homogeneous() for g in gens):
        return ideal_closure_of_space(alg, alg.span(gens))
    return _flat_ideal_closure(alg, gens)


def ideal_closure_of_space(alg, X: GradedSubspace) -> GradedSubspace:
    """Lie ideal of F generated by a graded subspace of F."""
    mats = {}
    field = alg.field
    for d in range(1, alg.cap + 1):
        parts = [X.part(d).mat]
        for x, w in enumerate(alg.weights):
            e = d - w
            if e >= 1 and e in mats:
                parts.append(mats[e] * _bracket_with_letter(alg, x, e))
        m = Echelon.from_matrix(field, stack(field, alg.dim(d), parts))
        if m.rank:
            mats[d] = m.mat
    return from_matrices(alg, mats)


def _flat_ideal_closure(alg, gens):
    fl = alg.flat
    ops = []
    for x, w in enumerate(alg.weights):
        bl = {}
        for e in range(0, alg.cap - w + 1):
            bl[(e, e + w)] = _bracket_with_letter(alg, x, e)
        ops.append(fl.block_matrix(bl))
    cur = echelonize(fl, {0: [alg.flat_vector(g) for g in gens]})
    while True:
        base = cur.part(0).mat
        new = stack(alg.field, fl.total, [base] + [base * op for op in ops])
        nxt = from_matrices(fl, {0: new})
        if nxt.dim(0) == cur.dim(0):
            return cur
        cur = nxt


def subalgebra_closure(alg, X: GradedSubspace) -> GradedSubspace:
    """Lie subalgebra generated by a graded subspace of F."""
    gens = {d: alg.basis_elements(X, d) for d in X.degrees()}
    mats = {}
    field = alg.field
    for d in range(1, alg.cap + 1):
        parts = [X.part(d).mat]
        for e, els in gens.items():
            f = d - e
            if f >= 1 and f in mats:
                for g in els:
                    op = alg.right_matrix(g, f) - alg.left_matrix(g, f)
                    parts.append(mats[f] * op)
        m = Echelon.from_matrix(field, stack(field, alg.dim(d), parts))
        if m.rank:
            mats[d] = m.mat
    return from_matrices(alg, mats)


def bracket_subspaces(alg, X: GradedSubspace, Y: GradedSubspace) -> GradedSubspace:
    """span{[x, y] : x in X, y in Y}, degreewise."""
    field = alg.field
    parts = {}
    for e in X.degrees():
        for f in Y.degrees():
            d = e + f
            if d > alg.cap:
                continue
            xs, ys = X.part(e), Y.part(f)
            if xs.rank <= ys.rank:
                for g in alg.basis_elements(X, e):
                    op = alg.left_matrix(g, f) - alg.right_matrix(g, f)
                    parts.setdefault(d, []).append(ys.mat * op)
            else:
                for g in alg.basis_elements(Y, f):
                    op = alg.right_matrix(g, e) - alg.left_matrix(g, e)
                    parts.setdefault(d, []).append(xs.mat * op)
    mats = {d: stack(field, alg.dim(d), ms) for d, ms in parts.items()}
    return from_matrices(alg, mats)


def lower_central(alg, X: GradedSubspace, l: int) -> GradedSubspace:
    """X_(l): X_(1) = X, X_(j+1) = [X_(j), X]."""
    cur = X
    for _ in range(l - 1):
        cur = bracket_subspaces(alg, cur, X)
    return cur


def derived_series(alg, X: GradedSubspace, steps: int | None = None) -> list[GradedSubspace]:
    """X, [X,X], [[X,X],[X,X]], ... until zero (or ``steps`` terms)."""
    out = [X]
    while not out[-1].is_zero() and (steps is None or len(out) <= steps):
        out.append(bracket_subspaces(alg, out[-1], out[-1]))
    return out


def is_ideal(alg, X: GradedSubspace) -> bool:
    for d in X.degrees():
        for x, w in enumerate(alg.weights):
            if d + w > alg.cap:
                continue
            img = X.part(d).mat * _bracket_with_letter(alg, x, d)
            if not X.part(d + w).contains_matrix(img):
                return False
    return True


def summand_space(alg, s: int) -> GradedSubspace:
    """A_s (or the span of g_j) as a subspace of F."""
    return alg.span([alg.letter(x) for x in alg.source_letters[s]])


def summand_subalgebra(alg, sources) -> GradedSubspace:
    """Free sum of the given summands / free generators: the subalgebra they generate."""
    key = ("H", tuple(sorted(sources)))
    if key not in alg.cache:
        gens = alg.span([alg.letter(x) for s in sources for x in alg.source_letters[s]])
        alg.cache[key] = subalgebra_closure(alg, gens)
    return alg.cache[key]


def cartesian_ideal(alg) -> GradedSubspace:
    """Kernel of F -> direct sum of its parts: generated by brackets across parts.

    The free generators together form one part (the free algebra G).
    """
    if "cartesian" not in alg.cache:
        def part(x):
            return "G" if alg.free[x] else alg.sources[x]

        gens = []
        for x in range(len(alg.letters)):
            for y in range(x + 1, len(alg.letters)):
                if part(x) != part(y) and alg.weights[x] + alg.weights[y] <= alg.cap:
                    gens.append(alg.lie_bracket(alg.letter(x), alg.letter(y)))
        alg.cache["cartesian"] = ideal_closure_of_space(alg, alg.span(gens))
    return alg.cache["cartesian"]


def ideal_from_spec(alg) -> GradedSubspace:
    """The ideal N declared by the presentation."""
    if "N" not in alg.cache:
        spec = alg.presentation.ideal
        if spec.kind == "cartesian":
            alg.cache["N"] = cartesian_ideal(alg)
        else:
            gens = []
            for text in spec.generators:
                el = alg.evaluate(parse_lie_expr(text, alg.by_name))
                if el.is_zero():
                    raise InputError(f"ideal generator {text!r} evaluates to zero")
                gens.append(el)
            alg.cache["N"] = lie_ideal_closure(alg, gens)
    return alg.cache["N"]


def summand_intersections(alg, N: GradedSubspace) -> dict:
    """dim (N ∩ A_i) for every summand i with a nonzero intersection."""
    out = {}
    for s in range(alg.n_summands):
        A = summand_space(alg, s)
        if N.ambient is not alg:
            A = alg.flat.embed(A)
        inter = subspace_intersect(A, N)
        dim = sum(inter.dims())
        if dim:
            out[alg.source_names[s]] = dim
    return out


def kill_sources_image(alg, space: GradedSubspace, sources) -> GradedSubspace:
    """Image under the endomorphism that sends the given parts to zero."""
    dead = {x for s in sources for x in alg.source_letters[s]}
    if space.ambient is alg.flat:
        keep = [not any(x in dead for x in w) for w in alg.flat.words]
        rows = [[c if k else alg.field.zero for c, k in zip(r, keep)] for r in space.part(0).rows()]
        return echelonize(alg.flat, {0: rows})
    rows = {}
    for d in space.degrees():
        keep = [not any(x in dead for x in w) for w in alg.words(d)]
        rows[d] = [[c if k else alg.field.zero for c, k in zip(r, keep)] for r in space.part(d).rows()]
    return echelonize(alg, rows)


# ---------------------------------------------------------------------------
# series


@dataclass
class SeriesChain:
    signature: tuple
    labels: list          # canonical (k, l) labels in chain order
    members: list         # GradedSubspace per label

    def __getitem__(self, key):
        k, l = key
        if l == self.signature[k - 1] + 1 and k < len(self.signature):
            k, l = k + 1, 1
        return self.members[self.labels.index((k, l))]

    def items(self):
        return list(zip(self.labels, self.members))

    def block_end(self, k: int):
        """Label of N_{k, m_k + 1} (an alias of N_{k+1, 1} except for the last block)."""
        return (k + 1, 1) if k < len(self.signature) else (k, self.signature[k - 1] + 1)

    def position(self, label) -> int:
        k, l = label
        if l == self.signature[k - 1] + 1 and k < len(self.signature):
            k, l = k + 1, 1
        return self.labels.index((k, l))


def label_text(label) -> str:
    return f"N{label[0]},{label[1]}"


def _cached_bracket(alg, X, Y):
    """[X, Y] remembered per pair of subspace objects, so chains share their members."""
    key = ("bracket", id(X), id(Y))
    hit = alg.cache.get(key)
    if hit is None or hit[0] is not X or hit[1] is not Y:
        hit = (X, Y, bracket_subspaces(alg, X, Y))
        alg.cache[key] = hit
    return hit[2]


def power_chain(alg, N: GradedSubspace, signature) -> SeriesChain:
    """N = N_11 >= ... >= N_{s, m_s + 1}, N_{k,l+1} = [N_{k,l}, N_{k,1}]."""
    sig = tuple(int(m) for m in signature)
    if not sig or any(m < 1 for m in sig):
        raise ValueError("series signature must be a nonempty list of positive integers")
    if not is_graded(alg, N):
        raise ClosureError("series need a graded ideal")
    if not is_subspace(bracket_subspaces(alg, N, N), N):
        raise ClosureError("N is not closed under the bracket")
    labels, members = [], []
    head = N
    for k, m in enumerate(sig, start=1):
        cur = head
        for l in range(1, m + 1):
            labels.append((k, l))
            members.append(cur)
            cur = _cached_bracket(alg, cur, head)
        head = cur
    labels.append((len(sig), sig[-1] + 1))
    members.append(head)
    return SeriesChain(sig, labels, members)


# ---------------------------------------------------------------------------
# enveloping-side ideals


def uea_ideal(alg, X: GradedSubspace, sides: str = "both") -> GradedSubspace:
    """Ideal of U(F) generated by a graded subspace X (two-sided by default)."""
    field = alg.field
    mats = {}
    for d in range(0, alg.cap + 1):
        parts = [X.part(d).mat]
        for x, w in enumerate(alg.weights):
            e = d - w
            if e in mats:
                if sides in ("both", "left"):
                    parts.append(mats[e] * alg.letter_matrix(x, e, left=True))
                if sides in ("both", "right"):
                    parts.append(mats[e] * alg.letter_matrix(x, e, left=False))
        m = Echelon.from_matrix(field, stack(field, alg.dim(d), parts))
        if m.rank:
            mats[d] = m.mat
    return from_matrices(alg, mats)


def enveloping_ideal(alg, X: GradedSubspace) -> GradedSubspace:
    """X_U, cached per subspace object."""
    key = ("XU", id(X))
    hit = alg.cache.get(key)
    if hit is not None and hit[0] is X:
        return hit[1]
    out = uea_ideal(alg, X)
    alg.cache[key] = (X, out)
    return out


def product_space(alg, X: GradedSubspace, Y: GradedSubspace) -> GradedSubspace:
    """span{x*y : x in X, y in Y} within the cap."""
    field = alg.field
    parts = {}
    for e in X.degrees():
        for f in Y.degrees():
            d = e + f
            if d > alg.cap:
                continue
            if X.part(e).rank <= Y.part(f).rank:
                for g in alg.basis_elements(X, e):
                    parts.setdefault(d, []).append(Y.part(f).mat * alg.left_matrix(g, f))
            else:
                for g in alg.basis_elements(Y, f):
                    parts.setdefault(d, []).append(X.part(e).mat * alg.right_matrix(g, e))
    return from_matrices(alg, {d: stack(field, alg.dim(d), ms) for d, ms in parts.items()})


def _left_products(alg, B_elems: dict, Q: dict) -> dict:
    """Degreewise span of b*q (b from B_elems, q from echelon parts Q), as matrices."""
    parts = {}
    for e, els in B_elems.items():
        for f, m in Q.items():
            d = e + f
            if d > alg.cap:
                continue
            for b in els:
                parts.setdefault(d, []).append(m * alg.left_matrix(b, f))
    return {d: stack(alg.field, alg.dim(d), ms) for d, ms in parts.items()}


def subalgebra_envelope(alg, B: GradedSubspace) -> GradedSubspace:
    """U(B) inside U(F): span of all products of elements of B (with 1)."""
    key = ("UB", id(B))
    hit = alg.cache.get(key)
    if hit is not None and hit[0] is B:
        return hit[1]
    field = alg.field
    els = {e: alg.basis_elements(B, e) for e in B.degrees()}
    mats = {0: field.matrix(1, 1, [1])}
    for d in range(1, alg.cap + 1):
        parts = []
        for e, bs in els.items():
            f = d - e
            if f in mats:
                for b in bs:
                    parts.append(mats[f] * alg.left_matrix(b, f))
        if parts:
            m = Echelon.from_matrix(field, stack(field, alg.dim(d), parts))
            if m.rank:
                mats[d] = m.mat
    out = from_matrices(alg, mats)
    alg.cache[key] = (B, out)
    return out


def u0_power(alg, B: GradedSubspace, k: int, extend: bool = False) -> GradedSubspace:
    """U_0(B)^k: span of products of at least k elements of B.

    With ``extend`` the two-sided ideal of U(F) generated by it is returned.
    """
    if k < 1:
        raise ValueError("power must be positive")
    if B == alg.lie_space():
        # products of elements of F are exactly products of letters
        els = {}
        for x, w in enumerate(alg.weights):
            els.setdefault(w, []).append(alg.letter(x))
        cur = {d: Echelon.from_matrix(alg.field, _identity(alg, d)).mat for d in range(alg.cap + 1)}
    else:
        els = {e: alg.basis_elements(B, e) for e in B.degrees()}
        cur = {d: m.mat for d, m in subalgebra_envelope(alg, B).parts.items()}
    for _ in range(k):
        cur = _left_products(alg, els, cur)
        cur = {d: Echelon.from_matrix(alg.field, m).mat for d, m in cur.items()}
        cur = {d: m for d, m in cur.items() if m.nrows()}
    out = from_matrices(alg, cur)
    return uea_ideal(alg, out) if extend else out


def _identity(alg, d):
    from .core_linear import identity
    return identity(alg.field, alg.dim(d))


def subalgebra_ideal(alg, B: GradedSubspace, X: GradedSubspace) -> GradedSubspace:
    """Two-sided ideal of U(B) generated by a subspace X of U(B)."""
    els = [(e, b) for e in B.degrees() for b in alg.basis_elements(B, e)]
    field = alg.field
    mats = {}
    for d in range(0, alg.cap + 1):
        parts = [X.part(d).mat]
        for e, b in els:
            f = d - e
            if f in mats:
                parts.append(mats[f] * alg.left_matrix(b, f))
                parts.append(mats[f] * alg.right_matrix(b, f))
        m = Echelon.from_matrix(field, stack(field, alg.dim(d), parts))
        if m.rank:
            mats[d] = m.mat
    return from_matrices(alg, mats)


class DeltaFiltration:
    """Δ_k generated by products X_{i1}...X_{is} with i1 + ... + is >= k.

    ``family[i-1]`` is X_i (nested, X_1 largest).  The ambient is either the
    enveloping algebra of X_1 (``ambient="subalgebra"``; Δ_k is then the span
    of those products) or all of U(F) (``ambient="enveloping"``; Δ_k is the
    two-sided ideal they generate).  An optional ``modulus`` (an ideal of the
    ambient) is added to every level, which realises the filtration in a
    quotient.  Levels are computed on demand.
    """

    def __init__(self, alg, family, ambient: str = "enveloping", modulus: GradedSubspace | None = None):
        if ambient not in ("subalgebra", "enveloping"):
            raise ValueError("ambient must be 'subalgebra' or 'enveloping'")
        family = list(family)
        for i in range(1, len(family)):
            if not is_subspace(family[i], family[i - 1]):
                raise ClosureError(f"filtration family is not nested at position {i + 1}")
        self.alg = alg
        self.family = family
        self.ambient = ambient
        self.modulus = modulus
        self._products = {}
        self._levels = {}
        self._elems = [{e: alg.basis_elements(X, e) for e in X.degrees()} for X in family]

    def products(self, k: int) -> dict:
        """Matrices spanning the products with index sum >= k (k <= 0: all of U(X_1))."""
        alg = self.alg
        if k <= 0:
            if 0 not in self._products:
                if self.ambient == "enveloping":
                    # the ideal closure supplies the remaining factors
                    self._products[0] = {0: alg.field.matrix(1, 1, [1])}
                else:
                    env = subalgebra_envelope(alg, self.family[0])
                    self._products[0] = {d: m.mat for d, m in env.parts.items()}
            return self._products[0]
        if k in self._products:
            return self._products[k]
        total = {}
        for i, els in enumerate(self._elems, start=1):
            rest = self.products(k - i)
            for d, m in _left_products(alg, els, rest).items():
                total.setdefault(d, []).append(m)
        mats = {}
        for d, ms in total.items():
            e = Echelon.from_matrix(alg.field, stack(alg.field, alg.dim(d), ms))
            if e.rank:
                mats[d] = e.mat
        self._products[k] = mats
        return mats

    def level(self, k: int) -> GradedSubspace:
        """Δ_k (plus the modulus, if any)."""
        k = max(k, 1)
        if k in self._levels:
            return self._levels[k]
        alg = self.alg
        out = from_matrices(alg, self.products(k))
        if self.ambient == "enveloping":
            out = uea_ideal(alg, out)
        if self.modulus is not None:
            out = subspace_sum(out, self.modulus)
        self._levels[k] = out
        return out

    def depth(self) -> int:
        """First k whose level adds nothing to the modulus (levels beyond are equal)."""
        base = self.modulus if self.modulus is not None else zero_subspace(self.alg)
        k = 1
        while not is_subspace(self.level(k), base):
            k += 1
        return k


def delta_filtration(alg, family, ambient: str = "enveloping", modulus=None) -> DeltaFiltration:
    return DeltaFiltration(alg, family, ambient, modulus)


class FiltrationExhausted(ValueError):
    """The element lies in every computed level but not in the modulus."""


def valuation_psi(u: UEAElement, filt: DeltaFiltration | None, ctx) -> float | int:
    """ψ(u): ∞ for zero in context, 0 when u survives the coarser quotient,
    otherwise the largest j with u in Δ_j."""
    alg = ctx.algebra
    if ctx.is_zero(u):
        return INFINITY
    if ctx.coarse is None or not alg.contains(ctx.coarse, u):
        return 0
    if filt is None:
        raise FiltrationExhausted("no filtration supplied for an element killed by the coarser quotient")
    if not alg.contains(filt.level(1), u):
        raise FiltrationExhausted("coarser quotient and first filtration level disagree")
    j = 1
    limit = alg.cap + 1
    while j <= limit:
        if not alg.contains(filt.level(j + 1), u):
            return j
        j += 1
    raise FiltrationExhausted(f"element lies in Δ_{limit}: depth >= {limit}")


# ---------------------------------------------------------------------------
# free generating sets


@dataclass
class FreeGeneratingSet:
    elements: list    # UEAElement, sorted by degree then echelon position
    degrees: list

    def __len__(self):
        return len(self.elements)


class NotFreeError(ValueError):
    """The subalgebra meets a summand, so freeness is not guaranteed."""


def free_generating_set(alg, B: GradedSubspace) -> FreeGeneratingSet:
    """Lifts of a basis of B/[B,B] (homogeneous, lowest pivot first)."""
    bad = summand_intersections(alg, B)
    if bad:
        raise NotFreeError(f"subalgebra meets summands {sorted(bad)}; not guaranteed free")
    BB = bracket_subspaces(alg, B, B)
    if not is_subspace(BB, B):
        raise ClosureError("B is not closed under the bracket")
    els, degs = [], []
    for d in B.degrees():
        for row in complement_rows(alg.field, BB.part(d), B.part(d)):
            els.append(alg.from_vector(d, row))
            degs.append(d)
    return FreeGeneratingSet(els, degs)
