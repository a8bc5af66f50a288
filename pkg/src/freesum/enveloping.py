"""Truncated enveloping algebra of a free sum of graded Lie algebras.

Letters are the basis vectors of the summands followed by the free
generators, numbered globally.  A word is a tuple of letter ids; it is in
normal form when every maximal run of letters from one summand is
nondecreasing.  These words form a basis of U(F) (the enveloping algebra of
a free sum is the free product of the enveloping algebras), so products only
need PBW straightening inside a run.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .core_linear import (
    Ambient, Basis, Echelon, Field, GradedSubspace, complement_rows, echelonize,
    independent_subset, membership_coords,
)
from .presentation import (
    Bracket, Gen, InputError, Presentation, Scaled, Sum, format_lie_expr,
    parse_lie_expr, validate_presentation,
)


class UEAElement:
    """Finite linear combination of normal words; the empty word is the constant."""

    __slots__ = ("algebra", "terms")

    def __init__(self, algebra: "EnvelopingAlgebra", terms: dict | None = None):
        self.algebra = algebra
        self.terms = {w: c for w, c in (terms or {}).items() if c != 0}

    @property
    def constant(self):
        return self.terms.get((), self.algebra.field.zero)

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def _coerce(self, other):
        if isinstance(other, UEAElement):
            if other.algebra is not self.algebra:
                raise ValueError("elements of different algebras")
            return other
        return UEAElement(self.algebra, {(): self.algebra.field(other)})

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out.get(w, 0) + c
        return UEAElement(self.algebra, out)

    __radd__ = __add__

    def __neg__(self):
        return UEAElement(self.algebra, {w: -c for w, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def scale(self, c):
        c = self.algebra.field(c)
        if c == 0:
            return UEAElement(self.algebra)
        return UEAElement(self.algebra, {w: x * c for w, x in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, UEAElement):
            return self.algebra.multiply(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __eq__(self, other):
        if isinstance(other, UEAElement):
            return other.algebra is self.algebra and self.terms == other.terms
        try:
            return self.terms == self._coerce(other).terms
        except (TypeError, ValueError):
            return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def degree(self):
        """Top degree, or None for zero."""
        if not self.terms:
            return None
        wd = self.algebra.word_degree
        return max(wd(w) for w in self.terms)

    def low_degree(self):
        if not self.terms:
            return None
        wd = self.algebra.word_degree
        return min(wd(w) for w in self.terms)

    def is_homogeneous(self) -> bool:
        return self.degree() == self.low_degree()

    def homogeneous_parts(self) -> dict:
        parts = {}
        wd = self.algebra.word_degree
        for w, c in self.terms.items():
            parts.setdefault(wd(w), {})[w] = c
        return {d: UEAElement(self.algebra, t) for d, t in sorted(parts.items())}

    def part(self, d: int) -> "UEAElement":
        wd = self.algebra.word_degree
        return UEAElement(self.algebra, {w: c for w, c in self.terms.items() if wd(w) == d})

    def vectors(self) -> dict:
        """Degree -> dense coordinate list over the sorted normal words."""
        alg = self.algebra
        out = {}
        for w, c in self.terms.items():
            d = alg.word_degree(w)
            if d not in out:
                out[d] = [alg.field.zero] * alg.dim(d)
            out[d][alg.index(d)[w]] = c
        return out

    def __str__(self):
        return self.algebra.format_element(self)

    def __repr__(self):
        return f"UEAElement({self})"


@dataclass(frozen=True)
class Letter:
    name: str
    source: int  # summand index, or n_summands + free generator index
    local: int
    weight: int
    free: bool


class EnvelopingAlgebra(Ambient):
    """Truncated U(F) for one presentation, with the Lie algebra F inside it."""

    def __init__(self, presentation: Presentation, cap: int | None = None, check: bool = True):
        if check:
            report = validate_presentation(presentation)
            if not report.ok:
                raise InputError("invalid presentation: " + "; ".join(d.message for d in report.diagnostics))
        self.presentation = presentation
        self.field: Field = presentation.field
        self.cap = presentation.cap if cap is None else cap
        self.n_summands = len(presentation.summands)
        self.n_free = len(presentation.free_generators)
        self.n_sources = self.n_summands + self.n_free
        self.source_names = presentation.source_names()
        letters = []
        self.source_letters = []
        for s, spec in enumerate(presentation.summands):
            ids = []
            for i, (nm, w) in enumerate(zip(spec.basis, spec.weights)):
                ids.append(len(letters))
                letters.append(Letter(nm, s, i, w, False))
            self.source_letters.append(ids)
        for j, g in enumerate(presentation.free_generators):
            self.source_letters.append([len(letters)])
            letters.append(Letter(g.name, self.n_summands + j, 0, g.weight, True))
        self.letters = letters
        self.by_name = {l.name: i for i, l in enumerate(letters)}
        self.weights = [l.weight for l in letters]
        self.sources = [l.source for l in letters]
        self.free = [l.free for l in letters]
        # structure constants on global letter ids
        self.table = {}
        for s, spec in enumerate(presentation.summands):
            ids = self.source_letters[s]
            for (i, j), row in spec.brackets.items():
                self.table[(ids[i], ids[j])] = {ids[k]: c for k, c in row.items()}
        self._words = {0: [()]}
        self._index = {0: {(): 0}}
        self._straight = {}
        self._letter_mats = {}
        self._lie_monomials = {}
        self._lie_bases = {}
        self._lie_space = None
        self.cache = {}

    # -- words ---------------------------------------------------------------

    def word_degree(self, w) -> int:
        ws = self.weights
        return sum(ws[x] for x in w)

    def _can_prefix(self, x: int, w: tuple) -> bool:
        if not w or self.free[x]:
            return True
        y = w[0]
        return self.sources[y] != self.sources[x] or x <= y

    def words(self, d: int) -> list[tuple]:
        """Normal words of degree d, sorted by their letter-id tuples."""
        if d < 0:
            return []
        if d not in self._words:
            out = []
            for x, w in enumerate(self.weights):
                if w <= d:
                    for u in self.words(d - w):
                        if self._can_prefix(x, u):
                            out.append((x,) + u)
            out.sort()
            self._words[d] = out
            self._index[d] = {w: i for i, w in enumerate(out)}
        return self._words[d]

    def index(self, d: int) -> dict:
        if d not in self._index:
            self.words(d)
        return self._index[d]

    def dim(self, d: int) -> int:
        return len(self.words(d)) if 0 <= d <= self.cap else 0

    def is_normal(self, w: tuple) -> bool:
        for x, y in zip(w, w[1:]):
            if not self.free[x] and self.sources[x] == self.sources[y] and x > y:
                return False
        return True

    # -- elements ------------------------------------------------------------

    def zero(self) -> UEAElement:
        return UEAElement(self)

    def one(self) -> UEAElement:
        return UEAElement(self, {(): self.field.one})

    def scalar(self, c) -> UEAElement:
        return UEAElement(self, {(): self.field(c)})

    def letter(self, name_or_id) -> UEAElement:
        x = self.by_name[name_or_id] if isinstance(name_or_id, str) else name_or_id
        if self.weights[x] > self.cap:
            return self.zero()
        return UEAElement(self, {(x,): self.field.one})

    def word(self, letters) -> UEAElement:
        """Product of the given letters (ids or names), put in normal form."""
        out = self.one()
        for x in letters:
            out = self.multiply(out, self.letter(x))
        return out

    def from_vector(self, d: int, row) -> UEAElement:
        ws = self.words(d)
        return UEAElement(self, {ws[i]: c for i, c in enumerate(row) if c != 0})

    def from_vectors(self, vecs: dict) -> UEAElement:
        terms = {}
        for d, row in vecs.items():
            ws = self.words(d)
            for i, c in enumerate(row):
                if c != 0:
                    terms[ws[i]] = c
        return UEAElement(self, terms)

    # -- multiplication ------------------------------------------------------

    def _straighten(self, run: tuple) -> dict:
        """PBW normal form of a run of letters from one summand."""
        got = self._straight.get(run)
        if got is not None:
            return got
        p = next((i for i in range(len(run) - 1) if run[i] > run[i + 1]), None)
        if p is None:
            out = {run: self.field.one}
        else:
            out = dict(self._straighten(run[:p] + (run[p + 1], run[p]) + run[p + 2:]))
            for k, c in self.table.get((run[p], run[p + 1]), {}).items():
                for w, e in self._straighten(run[:p] + (k,) + run[p + 2:]).items():
                    out[w] = out.get(w, 0) + c * e
            out = {w: c for w, c in out.items() if c != 0}
        self._straight[run] = out
        return out

    def mul_words(self, u: tuple, v: tuple) -> dict:
        """Normal form of the product of two normal words (no truncation)."""
        if not u or not v:
            return {u + v: self.field.one}
        x, y = u[-1], v[0]
        src = self.sources
        if self.free[x] or src[x] != src[y] or x <= y:
            return {u + v: self.field.one}
        s = src[x]
        i = len(u) - 1
        while i > 0 and src[u[i - 1]] == s:
            i -= 1
        j = 1
        while j < len(v) and src[v[j]] == s:
            j += 1
        prefix, suffix = u[:i], v[j:]
        return {prefix + r + suffix: c for r, c in self._straighten(u[i:] + v[:j]).items()}

    def multiply(self, a: UEAElement, b: UEAElement) -> UEAElement:
        """Product in U(F), dropping words above the cap."""
        out = {}
        cap = self.cap
        wd = self.word_degree
        bl = [(w, c, wd(w)) for w, c in b.terms.items()]
        for u, cu in a.terms.items():
            du = wd(u)
            for v, cv, dv in bl:
                if du + dv > cap:
                    continue
                c = cu * cv
                for w, e in self.mul_words(u, v).items():
                    out[w] = out.get(w, 0) + c * e
        return UEAElement(self, out)

    def lie_bracket(self, a: UEAElement, b: UEAElement) -> UEAElement:
        return self.multiply(a, b) - self.multiply(b, a)

    def product(self, factors) -> UEAElement:
        out = self.one()
        for f in factors:
            out = self.multiply(out, f)
        return out

    # -- multiplication matrices ----------------------------------------------

    def left_matrix(self, x: UEAElement, e: int):
        """Matrix of u -> x*u from degree e to degree e + deg x (x homogeneous)."""
        return self._element_matrix(x, e, True)

    def right_matrix(self, x: UEAElement, e: int):
        """Matrix of u -> u*x from degree e to degree e + deg x (x homogeneous)."""
        return self._element_matrix(x, e, False)

    def _element_matrix(self, x, e, left):
        if len(x.terms) == 1:
            (w, c), = x.terms.items()
            if len(w) == 1:
                m = self.letter_matrix(w[0], e, left)
                return m if c == 1 else m * c
        return self._mul_matrix(x, e, x.degree(), left)

    def _mul_matrix(self, x, e, dx, left):
        d = e + dx
        src = self.words(e)
        idx = self.index(d)
        n = len(idx)
        flat = [0] * (len(src) * n)
        for r, w in enumerate(src):
            base = r * n
            for xw, cx in x.terms.items():
                prod = self.mul_words(xw, w) if left else self.mul_words(w, xw)
                for t, c in prod.items():
                    flat[base + idx[t]] += cx * c
        return self.field.matrix(len(src), n, flat)

    def letter_matrix(self, x: int, e: int, left: bool):
        key = (x, e, left)
        m = self._letter_mats.get(key)
        if m is None:
            m = self._mul_matrix(self.letter(x), e, self.weights[x], left)
            self._letter_mats[key] = m
        return m

    # -- Lie side ------------------------------------------------------------

    def evaluate(self, expr) -> UEAElement:
        """Image of a Lie expression (or its text) in U(F)."""
        if isinstance(expr, str):
            expr = parse_lie_expr(expr, self.by_name)
        if isinstance(expr, Gen):
            if expr.name not in self.by_name:
                raise InputError(f"unknown generator {expr.name!r}")
            return self.letter(expr.name)
        if isinstance(expr, Bracket):
            return self.lie_bracket(self.evaluate(expr.left), self.evaluate(expr.right))
        if isinstance(expr, Scaled):
            c = Fraction(expr.coef)
            return self.evaluate(expr.expr).scale(self.field(c))
        if isinstance(expr, Sum):
            out = self.zero()
            for t in expr.terms:
                out = out + self.evaluate(t)
            return out
        raise TypeError(f"not a Lie expression: {expr!r}")

    def lie_monomials(self, d: int) -> list:
        """Independent left-normed bracket monomials spanning F_d, as (expr, element)."""
        if d in self._lie_monomials:
            return self._lie_monomials[d]
        cands = []
        if 1 <= d <= self.cap:
            for x, l in enumerate(self.letters):
                if l.weight == d:
                    cands.append((Gen(l.name), self.letter(x)))
            for e in range(1, d):
                for expr, el in self.lie_monomials(e):
                    for x, l in enumerate(self.letters):
                        if l.weight == d - e:
                            cands.append((Bracket(expr, Gen(l.name)), self.lie_bracket(el, self.letter(x))))
        kept = []
        if cands:
            n = self.dim(d)
            idx = self.index(d)
            flat = [0] * (len(cands) * n)
            for r, (_, el) in enumerate(cands):
                for w, c in el.terms.items():
                    flat[r * n + idx[w]] = c
            picked = independent_subset(self.field, self.field.matrix(len(cands), n, flat))
            kept = [cands[i] for i in picked]
        self._lie_monomials[d] = kept
        return kept

    def lie_space(self) -> GradedSubspace:
        """F within the cap, as a subspace of U(F)."""
        if self._lie_space is None:
            rows = {}
            for d in range(1, self.cap + 1):
                mons = self.lie_monomials(d)
                if mons:
                    rows[d] = [el.vectors()[d] for _, el in mons]
            self._lie_space = echelonize(self, rows)
        return self._lie_space

    def lie_dims(self) -> list[int]:
        return [len(self.lie_monomials(d)) for d in range(1, self.cap + 1)]

    def _lie_basis(self, d: int) -> Basis | None:
        if d not in self._lie_bases:
            mons = self.lie_monomials(d)
            if not mons:
                self._lie_bases[d] = None
            else:
                n = self.dim(d)
                flat = [x for _, el in mons for x in el.vectors()[d]]
                self._lie_bases[d] = Basis(self.field, self.field.matrix(len(mons), n, flat))
        return self._lie_bases[d]

    def is_lie(self, u: UEAElement) -> bool:
        return self.contains(self.lie_space(), u)

    def to_lie_expr(self, u: UEAElement):
        """Write a Lie element as a combination of bracket monomials (an expression)."""
        terms = []
        for d, vec in sorted(u.vectors().items()):
            basis = self._lie_basis(d) if d >= 1 else None
            coords = basis.coords(vec) if basis is not None else None
            if coords is None:
                raise ValueError(f"element is not a Lie element in degree {d}")
            mons = self.lie_monomials(d)
            for (expr, _), c in zip(mons, coords):
                if c != 0:
                    terms.append(Scaled(self.field.to_fraction(c) if self.field.p is None
                                        else Fraction(int(c)), expr))
        if not terms:
            return None
        return terms[0] if len(terms) == 1 else Sum(tuple(terms))

    def lie_text(self, u: UEAElement) -> str:
        e = self.to_lie_expr(u)
        return "0" if e is None else format_lie_expr(e)

    # -- subspace helpers ------------------------------------------------------

    def span(self, elements) -> GradedSubspace:
        rows = {}
        for el in elements:
            for d, v in el.vectors().items():
                rows.setdefault(d, []).append(v)
        return echelonize(self, rows)

    def contains(self, space: GradedSubspace, u: UEAElement) -> bool:
        return membership_coords(self.vectors_in(space, u), space) is not None

    def coords(self, space: GradedSubspace, u: UEAElement):
        return membership_coords(self.vectors_in(space, u), space)

    def basis_elements(self, space: GradedSubspace, d: int | None = None) -> list[UEAElement]:
        degrees = space.degrees() if d is None else [d]
        out = []
        for e in degrees:
            for row in space.part(e).rows():
                out.append(self.from_vector(e, row))
        return out

    def first_outside(self, a: GradedSubspace, b: GradedSubspace):
        """A basis element of a outside b (lowest degree), or None."""
        from .core_linear import first_difference

        found = first_difference(a, b)
        if found is None:
            return None
        d, row = found
        if a.ambient is self.flat:
            return self.from_flat(row)
        return self.from_vector(d, row)

    def residue(self, space: GradedSubspace, u: UEAElement) -> UEAElement:
        """Canonical representative of u modulo a subspace."""
        out = {}
        for d, v in u.vectors().items():
            e = space.part(d)
            if e.rank == 0:
                res = v
            else:
                res = list(e.residues(self.field.matrix(1, len(v), v)).entries())
            ws = self.words(d)
            for i, c in enumerate(res):
                if c != 0:
                    out[ws[i]] = c
        return UEAElement(self, out)

    # -- ungraded (flat) coordinates -------------------------------------------

    @property
    def flat(self) -> "FlatAmbient":
        if "flat" not in self.cache:
            self.cache["flat"] = FlatAmbient(self)
        return self.cache["flat"]

    def flat_vector(self, u: UEAElement) -> list:
        fl = self.flat
        out = [self.field.zero] * fl.total
        for w, c in u.terms.items():
            d = self.word_degree(w)
            out[fl.offsets[d] + self.index(d)[w]] = c
        return out

    def from_flat(self, row) -> UEAElement:
        fl = self.flat
        return UEAElement(self, {fl.words[i]: c for i, c in enumerate(row) if c != 0})

    def vectors_in(self, space: GradedSubspace, u: UEAElement) -> dict:
        """Coordinates of u suited to the ambient of ``space`` (graded or flat)."""
        if space.ambient is self:
            return u.vectors()
        if space.ambient is self.flat:
            return {0: self.flat_vector(u)}
        raise ValueError("subspace does not live in this algebra")

    def elements_of(self, space: GradedSubspace) -> list[UEAElement]:
        """Echelon basis of a graded or flat subspace as elements."""
        if space.ambient is self.flat:
            return [self.from_flat(r) for r in space.part(0).rows()]
        return self.basis_elements(space)

    # -- printing ------------------------------------------------------------

    def format_word(self, w: tuple) -> str:
        if not w:
            return "1"
        return ".".join(self.letters[x].name for x in w)

    def format_element(self, u: UEAElement) -> str:
        if not u.terms:
            return "0"
        f = self.field
        pieces = []
        for w in sorted(u.terms, key=lambda w: (self.word_degree(w), w)):
            c = u.terms[w]
            if f.p is None:
                neg = c < 0
                mag = -c if neg else c
            else:
                neg, mag = False, c
            body = self.format_word(w)
            if w == ():
                text = f.to_text(mag)
            elif mag == 1:
                text = body
            else:
                text = f"{f.to_text(mag)}*{body}"
            if not pieces:
                pieces.append(("-" if neg else "") + text)
            else:
                pieces.append(("- " if neg else "+ ") + text)
        return " ".join(pieces)


class FlatAmbient(Ambient):
    """All words of degree 0..cap as one coordinate block (for ungraded spans)."""

    def __init__(self, algebra: EnvelopingAlgebra):
        self.algebra = algebra
        self.field = algebra.field
        self.cap = algebra.cap
        self.offsets = {}
        self.words = []
        for d in range(algebra.cap + 1):
            self.offsets[d] = len(self.words)
            self.words.extend(algebra.words(d))
        self.total = len(self.words)

    def dim(self, d: int) -> int:
        return self.total if d == 0 else 0

    def embed(self, space: GradedSubspace) -> GradedSubspace:
        """A graded subspace of U(F) viewed in flat coordinates."""
        if space.ambient is self:
            return space
        rows = []
        for d in space.degrees():
            off = self.offsets[d]
            for r in space.part(d).rows():
                row = [self.field.zero] * self.total
                row[off:off + len(r)] = r
                rows.append(row)
        return echelonize(self, {0: rows})

    def block_matrix(self, blocks: dict):
        """Flat matrix from degree blocks {(e, d): matrix from degree e to degree d}."""
        flat = [0] * (self.total * self.total)
        for (e, d), m in blocks.items():
            oe, od = self.offsets[e], self.offsets[d]
            nc = m.ncols()
            ents = m.entries()
            for r in range(m.nrows()):
                base = (oe + r) * self.total + od
                for c in range(nc):
                    x = ents[r * nc + c]
                    if x != 0:
                        flat[base + c] = x
        return self.field.matrix(self.total, self.total, flat)


# ---------------------------------------------------------------------------
# adapted standard bases


@dataclass(frozen=True)
class StandardMonomial:
    indices: tuple          # nondecreasing positions in the adapted order
    counts: tuple           # number of factors per layer, layers as given
    tag: str                # "alpha", "beta" or "other"

    @property
    def length(self) -> int:
        return len(self.indices)


class AdaptedChain:
    """Homogeneous basis of F adapted to a nested chain of subspaces.

    ``layers[t]`` holds the lifted basis elements of layer t (innermost layer
    first).  ``direction`` is "inner_first" (inner layers are smaller in the
    monomial order, as in a<b<c<d) or "outer_first" (d<e<b<a).
    """

    def __init__(self, algebra, layers, names, direction):
        self.algebra = algebra
        self.layers = layers
        self.names = names
        self.direction = direction
        order = range(len(layers)) if direction == "inner_first" else range(len(layers) - 1, -1, -1)
        self.elements = []   # (layer, degree, element) in adapted order
        for t in order:
            for d, el in layers[t]:
                self.elements.append((t, d, el))
        self._monomials = {}
        self._values = {}
        self._bases = {}

    def layer_of(self, pos: int) -> int:
        return self.elements[pos][0]

    def monomials(self, d: int) -> list[StandardMonomial]:
        """Standard monomials of degree d, in the monomial order."""
        if d in self._monomials:
            return self._monomials[d]
        out = []

        def rec(start, remaining, acc):
            if remaining == 0:
                out.append(tuple(acc))
                return
            for p in range(start, len(self.elements)):
                w = self.elements[p][1]
                if w <= remaining:
                    acc.append(p)
                    rec(p, remaining - w, acc)
                    acc.pop()

        rec(0, d, [])
        mons = [self._make(ix) for ix in out]
        mons.sort(key=standard_monomial_key)
        self._monomials[d] = mons
        return mons

    def _make(self, ix: tuple) -> StandardMonomial:
        counts = [0] * len(self.layers)
        for p in ix:
            counts[self.elements[p][0]] += 1
        return StandardMonomial(ix, tuple(counts), classify_counts(self.names, counts))

    def value(self, m: StandardMonomial) -> UEAElement:
        v = self._values.get(m.indices)
        if v is None:
            if not m.indices:
                v = self.algebra.one()
            else:
                head = self.value(StandardMonomial(m.indices[:-1], (), ""))
                v = self.algebra.multiply(head, self.elements[m.indices[-1]][2])
            self._values[m.indices] = v
        return v

    def basis(self, d: int) -> Basis:
        if d not in self._bases:
            alg = self.algebra
            mons = self.monomials(d)
            n = alg.dim(d)
            flat = []
            for m in mons:
                vec = self.value(m).vectors().get(d, [alg.field.zero] * n)
                flat.extend(vec)
            self._bases[d] = Basis(alg.field, alg.field.matrix(len(mons), n, flat))
        return self._bases[d]

    def expand(self, u: UEAElement) -> dict:
        """Coordinates of u in the standard monomial basis: monomial -> coefficient."""
        out = {}
        for d, vec in u.vectors().items():
            mons = self.monomials(d)
            coords = self.basis(d).coords(vec)
            if coords is None:
                raise ValueError("standard monomials do not span U(F) in degree %d" % d)
            for m, c in zip(mons, coords):
                if c != 0:
                    out[m] = c
        return out


def classify_counts(names, counts) -> str:
    """alpha / beta / other tag from the layer counts (layer names a, b, e, d)."""
    c = dict(zip(names, counts))
    theta, nu, mu = c.get("d", 0), c.get("b", 0), c.get("a", 0)
    if theta == 0 and nu == 0 and mu == 0:
        return "alpha"
    if theta > 0 and nu == 0 and mu == 0:
        return "beta"
    return "other"


def standard_monomial_key(m: StandardMonomial):
    return (len(m.indices), m.indices)


def standard_monomial_order(m1: StandardMonomial, m2: StandardMonomial) -> int:
    """-1, 0 or 1: shorter monomials first, then lexicographic in the adapted order."""
    k1, k2 = standard_monomial_key(m1), standard_monomial_key(m2)
    return (k1 > k2) - (k1 < k2)


def adapted_pbw_basis(algebra: EnvelopingAlgebra, chain, names=None, sources=None,
                      direction: str = "inner_first") -> AdaptedChain:
    """Lift bases along ``chain`` (nested Lie subspaces ending with F).

    ``chain[t]`` is the t-th subspace; layer t consists of elements of
    ``sources[t]`` (default ``chain[t]``) completing a basis of ``chain[t-1]``
    to a basis of ``chain[t]``.  A leading zero subspace may be omitted.
    """
    if direction not in ("inner_first", "outer_first"):
        raise ValueError("direction must be inner_first or outer_first")
    chain = list(chain)
    sources = list(sources) if sources is not None else list(chain)
    names = list(names) if names is not None else [str(t) for t in range(len(chain))]
    F = algebra.lie_space()
    if chain[-1] != F:
        raise ValueError("outermost subspace of the chain must be F")
    for t in range(1, len(chain)):
        if not chain[t - 1] <= chain[t]:
            raise ValueError(f"chain is not nested at position {t}")
    layers = []
    prev = None
    for t, (space, src) in enumerate(zip(chain, sources)):
        lifted = []
        for d in range(1, algebra.cap + 1):
            inner = prev.part(d) if prev is not None else Echelon(algebra.field, algebra.dim(d))
            rows = complement_rows(algebra.field, inner, src.part(d))
            target = space.part(d).rank - inner.rank
            if len(rows) != target:
                raise ValueError(f"layer {t} sources do not complete the chain in degree {d}")
            for r in rows:
                lifted.append((d, algebra.from_vector(d, r)))
        layers.append(lifted)
        prev = space
    return AdaptedChain(algebra, layers, names, direction)


def build_algebra(presentation: Presentation, cap: int | None = None) -> EnvelopingAlgebra:
    return EnvelopingAlgebra(presentation, cap)
