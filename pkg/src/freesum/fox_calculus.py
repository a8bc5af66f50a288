"""Fox derivatives on U(F) and the constructions built on them.

For a word starting with a letter of summand i the whole word belongs to
D_i; for a word starting with a free generator g_j its left quotient by g_j
belongs to D_j.  The constant term is kept apart, so that

    u = constant + sum_i D_i(u) + sum_j g_j D_j(u)

holds for every u.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

from .core_linear import (
    Basis, GradedSubspace, left_kernel, matrix_rows, solve_in_span,
    subspace_intersect, subspace_sum,
)
from .enveloping import UEAElement, adapted_pbw_basis
from .subspace_calculus import (
    FreeGeneratingSet, bracket_subspaces, check_lie, enveloping_ideal,
    ideal_closure_of_space, summand_space, summand_subalgebra,
)


class HypothesisError(ValueError):
    """The input does not satisfy the hypothesis of a construction."""

    def __init__(self, message: str, degree: int | None = None, index=None):
        super().__init__(message)
        self.degree = degree
        self.index = index


@dataclass
class FoxImage:
    constant: object
    derivatives: dict          # source index -> UEAElement

    def __getitem__(self, k):
        return self.derivatives[k]


def fox_derivatives(u: UEAElement) -> FoxImage:
    alg = u.algebra
    parts = {k: {} for k in range(alg.n_sources)}
    const = alg.field.zero
    for w, c in u.terms.items():
        if not w:
            const = c
            continue
        x = w[0]
        s = alg.sources[x]
        if alg.free[x]:
            parts[s][w[1:]] = c
        else:
            parts[s][w] = c
    return FoxImage(const, {k: UEAElement(alg, t) for k, t in parts.items()})


def fox(u: UEAElement, k: int) -> UEAElement:
    """D_k(u) for a single source index."""
    return fox_derivatives(u).derivatives[k]


def reconstruct(image: FoxImage, alg) -> UEAElement:
    out = alg.scalar(image.constant)
    for k, d in image.derivatives.items():
        if k < alg.n_summands:
            out = out + d
        else:
            out = out + alg.multiply(alg.letter(alg.source_letters[k][0]), d)
    return out


def fox_matrix(alg, k: int, d: int):
    """Matrix of D_k from U_d to U_{d'} (d' = d, or d - w(g_k) for a free generator)."""
    words = alg.words(d)
    if k < alg.n_summands:
        n = len(words)
        flat = [0] * (n * n)
        for i, w in enumerate(words):
            if alg.sources[w[0]] == k:
                flat[i * n + i] = 1
        return alg.field.matrix(n, n, flat), d
    g = alg.source_letters[k][0]
    e = d - alg.weights[g]
    idx = alg.index(e)
    n = len(idx)
    flat = [0] * (len(words) * n)
    for i, w in enumerate(words):
        if w[0] == g:
            flat[i * n + idx[w[1:]]] = 1
    return alg.field.matrix(len(words), n, flat), e


# ---------------------------------------------------------------------------
# derivatives with respect to a free base of a subalgebra


@dataclass
class SubalgebraFoxImage:
    derivatives: dict                      # base index -> UEAElement (value in U(F))
    words: dict = dc_field(default_factory=dict)   # base word -> coefficient


class _BaseWords:
    """Words in a free base, their values in U(F) and coordinate solvers."""

    def __init__(self, alg, base: FreeGeneratingSet):
        self.alg = alg
        self.base = base
        self._words = {}
        self._values = {(): alg.one()}
        self._solvers = {}

    def words(self, d):
        if d not in self._words:
            out = []
            for z, dz in enumerate(self.base.degrees):
                if dz <= d:
                    for rest in ([()] if dz == d else self.words(d - dz)):
                        out.append((z,) + rest)
            self._words[d] = sorted(out)
        return self._words[d]

    def value(self, word):
        v = self._values.get(word)
        if v is None:
            v = self.alg.multiply(self.base.elements[word[0]], self.value(word[1:]))
            self._values[word] = v
        return v

    def solver(self, d):
        if d not in self._solvers:
            ws = self.words(d)
            alg = self.alg
            n = alg.dim(d)
            flat = []
            for w in ws:
                flat.extend(self.value(w).vectors().get(d, [alg.field.zero] * n))
            self._solvers[d] = Basis(alg.field, alg.field.matrix(len(ws), n, flat)) if ws else None
        return self._solvers[d]


def subalgebra_fox(f: UEAElement, base: FreeGeneratingSet, cache: dict | None = None) -> SubalgebraFoxImage:
    """∂_z(f) for f in the augmentation part of U(B), B freely generated by ``base``."""
    alg = f.algebra
    key = ("base_words", id(base))
    if cache is None:
        cache = alg.cache
    hit = cache.get(key)
    if hit is None or hit[0] is not base:
        hit = (base, _BaseWords(alg, base))
        cache[key] = hit
    bw = hit[1]
    if f.constant != 0:
        raise HypothesisError("element has a constant term", 0)
    coeffs = {}
    for d, vec in sorted(f.vectors().items()):
        solver = bw.solver(d)
        c = solver.coords(vec) if solver is not None else None
        if c is None:
            raise HypothesisError(f"element is not in the subalgebra (degree {d})", d)
        for w, x in zip(bw.words(d), c):
            if x != 0:
                coeffs[w] = x
    ders = {z: alg.zero() for z in range(len(base.elements))}
    for w, x in coeffs.items():
        ders[w[0]] = ders[w[0]] + bw.value(w[1:]).scale(x)
    return SubalgebraFoxImage(ders, coeffs)


# ---------------------------------------------------------------------------
# kernels and the ideal M


def fox_kernel_subspace(alg, N: GradedSubspace, d: int) -> GradedSubspace:
    """{v in F_d : D_k(v) in N_U for every k}, by an exact linear solve."""
    from .core_linear import echelonize, hconcat

    NU = enveloping_ideal(alg, N)
    F = alg.lie_space()
    Fd = F.part(d)
    if Fd.rank == 0:
        return echelonize(alg, {})
    blocks = []
    for k in range(alg.n_sources):
        mat, e = fox_matrix(alg, k, d)
        if mat.ncols() == 0:
            continue
        img = Fd.mat * mat
        blocks.append(NU.part(e).residues(img))
    big = blocks[0]
    for b in blocks[1:]:
        big = hconcat(alg.field, big, b)
    ker = left_kernel(alg.field, big)
    if ker.nrows() == 0:
        return echelonize(alg, {})
    return echelonize(alg, {d: matrix_rows(ker * Fd.mat)})


def fox_kernel(alg, N: GradedSubspace) -> GradedSubspace:
    """fox_kernel_subspace in every degree up to the cap."""
    out = None
    for d in range(1, alg.cap + 1):
        part = fox_kernel_subspace(alg, N, d)
        out = part if out is None else subspace_sum(out, part)
    return out


def ideal_M(alg, N: GradedSubspace) -> GradedSubspace:
    """ид(N ∩ A_i, all i) + [N, N]."""
    meet = None
    for s in range(alg.n_summands):
        part = subspace_intersect(summand_space(alg, s), N)
        meet = part if meet is None else subspace_sum(meet, part)
    NN = bracket_subspaces(alg, N, N)
    if meet is None or meet.is_zero():
        return NN
    return subspace_sum(ideal_closure_of_space(alg, meet), NN)


# ---------------------------------------------------------------------------
# preimage constructions


def _check_target_shape(alg, k, u, allowed_letters, start_source):
    for w in u.terms:
        if not w:
            raise HypothesisError(f"target for {alg.source_names[k]} has a constant term", 0, k)
        if start_source is not None and alg.sources[w[0]] != start_source:
            raise HypothesisError(
                f"target for {alg.source_names[k]} has a word not starting in that summand",
                alg.word_degree(w), k)
        if allowed_letters is not None and any(x not in allowed_letters for x in w):
            raise HypothesisError(
                f"target for {alg.source_names[k]} leaves the enveloping algebra of H",
                alg.word_degree(w), k)


def assemble_targets(alg, targets: dict) -> UEAElement:
    """sum_m u_m + sum_k g_k u_k."""
    out = alg.zero()
    for k, u in targets.items():
        if k < alg.n_summands:
            out = out + u
        else:
            out = out + alg.multiply(alg.letter(alg.source_letters[k][0]), u)
    return out


def _first_failing_degree(alg, space, u):
    for d, part in sorted(u.homogeneous_parts().items()):
        if not alg.contains(space, part):
            return d
    return None


class PreimageContext:
    """Data shared by the preimage constructions for fixed H (given by sources) and N."""

    def __init__(self, alg, sources, N: GradedSubspace):
        self.alg = alg
        self.sources = tuple(sorted(sources))
        self.N = N
        self.H = summand_subalgebra(alg, self.sources)
        self.HN = subspace_intersect(self.H, N)
        self.NU = enveloping_ideal(alg, N)
        F = alg.lie_space()
        HplusN = subspace_sum(self.H, N)
        # a < b < c < d: basis of H∩N, completed to H, then to H+N from N, then to F
        self.chain = adapted_pbw_basis(
            alg, [self.HN, self.H, HplusN, F], names=["a", "b", "c", "d"],
            sources=[self.HN, self.H, N, F], direction="inner_first")
        self.letters_H = {x for s in self.sources for x in alg.source_letters[s]}

    def subalgebra_preimage(self, u_prime: UEAElement) -> UEAElement:
        """v in H∩N from u' = sum n_x w_x1...w_xz (all standard monomials with μ >= 1, η = θ = 0)."""
        alg = self.alg
        ch = self.chain
        v = alg.zero()
        for m, c in ch.expand(u_prime).items():
            mu, nu, eta, theta = m.counts
            if mu < 1 or eta or theta:
                deg = sum(ch.elements[p][1] for p in m.indices)
                raise HypothesisError("element is not a combination of monomials starting in H∩N", deg)
            factors = [ch.elements[p][2] for p in m.indices]
            term = factors[0]
            for w in factors[1:]:
                term = alg.lie_bracket(term, w)
            v = v + term.scale(c)
        return v

    def representative(self, k: int, u: UEAElement) -> UEAElement:
        """An element of A_k U(H) congruent to u modulo N_U (u itself when possible)."""
        alg = self.alg
        if all(alg.sources[w[0]] == k for w in u.terms if w):
            return u
        out = alg.zero()
        for d, part in u.homogeneous_parts().items():
            cands = [w for w in alg.words(d)
                     if w and alg.sources[w[0]] == k and all(x in self.letters_H for x in w)]
            NUd = self.NU.part(d)
            vec = part.vectors()[d]
            target = list(NUd.residues(alg.field.matrix(1, len(vec), vec)).entries())
            n = alg.dim(d)
            idx = alg.index(d)
            flat = [0] * (len(cands) * n)
            for r, w in enumerate(cands):
                flat[r * n + idx[w]] = 1
            res = NUd.residues(alg.field.matrix(len(cands), n, flat)) if cands else alg.field.matrix(0, n)
            coef = solve_in_span(alg.field, res, target)
            if coef is None:
                raise HypothesisError(
                    f"target component for {alg.source_names[k]} has no representative in A_k U(H)", d, k)
            for w, c in zip(cands, coef):
                if c != 0:
                    out = out + UEAElement(alg, {w: c})
        return out


def construct_preimage(alg, targets: dict, mode: str, sources, N: GradedSubspace,
                       context: PreimageContext | None = None) -> UEAElement:
    """v with D_k(v) ≡ targets[k] (mod N_U) for the sources k of H.

    mode "subalgebra": v in H∩N, targets in A_m U(H);
    mode "ideal": v in ид_F(H∩N), targets in A_m U(F).
    """
    if mode not in ("subalgebra", "ideal"):
        raise ValueError("mode must be 'subalgebra' or 'ideal'")
    ctx = context or PreimageContext(alg, sources, N)
    K = set(ctx.sources)
    targets = {k: targets.get(k, alg.zero()) for k in K}
    extra = set(targets) - K
    if extra:
        raise HypothesisError(f"targets given outside H: {sorted(extra)}")
    for k, u in targets.items():
        start = k if k < alg.n_summands else None
        _check_target_shape(alg, k, u, ctx.letters_H if mode == "subalgebra" else None, start)
    total = assemble_targets(alg, targets)
    bad = _first_failing_degree(alg, ctx.NU, total)
    if bad is not None:
        raise HypothesisError(f"targets do not combine to an element of N_U (degree {bad})", bad)
    if all(u.is_zero() for u in targets.values()):
        return alg.zero()
    if mode == "subalgebra":
        v = ctx.subalgebra_preimage(total)
    else:
        v = _ideal_mode(ctx, targets)
    certify_preimage(ctx, v, targets, mode)
    return v


def _ideal_mode(ctx: PreimageContext, targets: dict) -> UEAElement:
    alg = ctx.alg
    ch = ctx.chain
    # split every target by its tail of d-layer factors
    by_tail = {}
    for k, u in targets.items():
        for m, c in ch.expand(u).items():
            mu, nu, eta, theta = m.counts
            if mu or eta:
                continue   # monomials containing an element of N lie in N_U
            head = tuple(p for p in m.indices if ch.layer_of(p) == 1)
            tail = tuple(p for p in m.indices if ch.layer_of(p) == 3)
            value = ch.value(type(m)(head, (), ""))
            slot = by_tail.setdefault(tail, {})
            slot[k] = slot.get(k, alg.zero()) + value.scale(c)
    v = alg.zero()
    for tail, parts in sorted(by_tail.items()):
        reps = {}
        for k, u in parts.items():
            reps[k] = ctx.representative(k, u) if k < alg.n_summands else u
        u_prime = assemble_targets(alg, reps)
        bad = _first_failing_degree(alg, ctx.NU, u_prime)
        if bad is not None:
            raise HypothesisError(f"component with tail {tail} is not in N_U (degree {bad})", bad)
        if u_prime.is_zero():
            continue
        term = ctx.subalgebra_preimage(u_prime)
        for p in tail:
            term = alg.lie_bracket(term, ch.elements[p][2])
        v = v + term
    return v


class CertificateError(AssertionError):
    """A constructed object failed its own verification."""


def certify_preimage(ctx: PreimageContext, v: UEAElement, targets: dict, mode: str):
    alg = ctx.alg
    if mode == "subalgebra":
        if not alg.contains(ctx.HN, v):
            raise CertificateError("constructed element is not in H∩N")
    else:
        if not alg.contains(ideal_of_HN(ctx), v):
            raise CertificateError("constructed element is not in the ideal generated by H∩N")
    image = fox_derivatives(v)
    for k, u in targets.items():
        if _first_failing_degree(alg, ctx.NU, image.derivatives[k] - u) is not None:
            raise CertificateError(f"derivative {alg.source_names[k]} does not match its target")


def ideal_of_HN(ctx: PreimageContext) -> GradedSubspace:
    key = ("idHN", ctx.sources, id(ctx.N))
    hit = ctx.alg.cache.get(key)
    if hit is None or hit[0] is not ctx.N:
        hit = (ctx.N, ideal_closure_of_space(ctx.alg, ctx.HN))
        ctx.alg.cache[key] = hit
    return hit[1]


@dataclass
class Decomposition:
    v0: UEAElement
    v1: UEAElement
    remainder: UEAElement      # v - v0 - v1, certified to lie in M


def theorem4_decompose(alg, v: UEAElement, sources, N: GradedSubspace,
                       context: PreimageContext | None = None) -> Decomposition:
    """v ≡ v0 + v1 (mod M) with v0 in H and v1 in ид_F(H∩N), certificates checked."""
    check_lie(alg, [v])
    ctx = context or PreimageContext(alg, sources, N)
    K = set(ctx.sources)
    image = fox_derivatives(v)
    for k in range(alg.n_sources):
        if k in K:
            continue
        bad = _first_failing_degree(alg, ctx.NU, image.derivatives[k])
        if bad is not None:
            raise HypothesisError(
                f"D_{alg.source_names[k]}(v) is not in N_U (degree {bad})", bad, k)
    # v0 in H with v - v0 in N
    v0 = alg.zero()
    for d, part in v.homogeneous_parts().items():
        if alg.contains(ctx.H, part):
            v0 = v0 + part
            continue
        Nd = N.part(d)
        vec = part.vectors()[d]
        target = list(Nd.residues(alg.field.matrix(1, len(vec), vec)).entries())
        Hd = ctx.H.part(d)
        coef = solve_in_span(alg.field, Nd.residues(Hd.mat), target) if Hd.rank else None
        if coef is None:
            if all(x == 0 for x in target):
                continue
            raise HypothesisError(f"v is not in H + N (degree {d})", d)
        for row, c in zip(matrix_rows(Hd.mat), coef):
            if c != 0:
                v0 = v0 + alg.from_vector(d, row).scale(c)
    rest = v - v0
    rimg = fox_derivatives(rest)
    targets = {k: rimg.derivatives[k] for k in K}
    v1 = construct_preimage(alg, targets, "ideal", ctx.sources, N, context=ctx)
    remainder = rest - v1
    M = ideal_M(alg, N)
    if not alg.contains(M, remainder):
        raise CertificateError("v - v0 - v1 is not in M")
    if not alg.contains(ctx.H, v0):
        raise CertificateError("v0 is not in H")
    return Decomposition(v0, v1, remainder)
