"""End-to-end acceptance suite.

Each test checks one criterion, records a PASS/FAIL line (shown in the
terminal summary, and printed directly under ``-s``) and enforces its runtime
budget.
"""
import math
import random
import time
from contextlib import contextmanager
from fractions import Fraction

from freesum.core_linear import (
    is_subspace, subspace_intersect, subspace_sum, zero_subspace,
)
from freesum.fox_calculus import (
    PreimageContext, construct_preimage, fox, fox_derivatives, fox_kernel, ideal_M, ideal_of_HN,
    reconstruct, subalgebra_fox,
)
from freesum.freedom_theorems import (
    EXIT_HYPOTHESIS, EXIT_OK, level_context_for, solvability_certificate, verify_many_relators,
    verify_one_relator,
)
from freesum.ore_matrices import (
    OreExhausted, OreMatrix, check_triangular, row_conservation, triangularize,
)
from freesum.subspace_calculus import (
    DeltaFiltration, bracket_subspaces, enveloping_ideal, free_generating_set, ideal_from_spec,
    lie_ideal_closure, lower_central, power_chain, product_space, subalgebra_envelope,
    summand_space, summand_subalgebra, u0_power,
)

from conftest import load_algebra, random_element, random_in, random_lie
from oracle import (
    INSTANCES, RefAlgebra, Span, free_lie_dim, free_metabelian_dim, ideal_span, lie_span, meet_dims,
    power_chain_spans, span_sum,
)
from test_freedom_theorems import p3_variant

RESULTS = {}


@contextmanager
def criterion(n, title, budget):
    start = time.perf_counter()
    try:
        yield
        elapsed = time.perf_counter() - start
        assert elapsed <= budget, f"took {elapsed:.1f} s, budget {budget} s"
    except BaseException as exc:
        line = f"FAIL criterion {n:2d}: {title} ({exc.__class__.__name__}: {str(exc)[:120]})"
        RESULTS[n] = line
        print("\n" + line)
        raise
    line = f"PASS criterion {n:2d}: {title} ({elapsed:.1f} s)"
    RESULTS[n] = line
    print("\n" + line)


def as_ref(alg, u):
    return {tuple(alg.letters[x].name for x in w): alg.field.to_fraction(c) for w, c in u.terms.items()}


def ref_letter_bracket(ref, x, y):
    return ref.bracket({(x,): Fraction(1)}, {(y,): Fraction(1)})


# ---------------------------------------------------------------------------
# 1


def test_kernel_soundness():
    with criterion(1, "kernel soundness on P3 and PH", 60):
        for name in ("p3", "ph"):
            alg = load_algebra(name, cap=6)
            ref = RefAlgebra(INSTANCES / f"{name}.json")
            rng = random.Random(101)
            br = alg.lie_bracket
            for _ in range(200):
                # headroom: every product below stays within the cap
                u, v, w = (random_element(alg, rng, max_degree=2) for _ in range(3))
                assert alg.multiply(alg.multiply(u, v), w) == alg.multiply(u, alg.multiply(v, w))
                assert as_ref(alg, alg.multiply(u, v)) == ref.mul(as_ref(alg, u), as_ref(alg, v))
                x, y, z = (random_lie(alg, rng, max_degree=2) for _ in range(3))
                assert br(x, y) == -br(y, x)
                assert (br(br(x, y), z) + br(br(y, z), x) + br(br(z, x), y)).is_zero()
            # structure constants, read independently from the JSON tables
            for (x, y), row in ref.table.items():
                want = alg.zero()
                for z, c in row.items():
                    want = want + alg.letter(z).scale(c)
                assert br(alg.letter(x), alg.letter(y)) == want
                assert as_ref(alg, br(alg.letter(x), alg.letter(y))) == ref_letter_bracket(ref, x, y)


# ---------------------------------------------------------------------------
# 2


def test_fox_axioms():
    with criterion(2, "Fox derivative axioms", 60):
        for name in ("mixed", "p3", "free3"):
            alg = load_algebra(name)
            N = ideal_from_spec(alg)
            NU = enveloping_ideal(alg, N)
            rng = random.Random(202)
            n = alg.n_sources
            # D_j(g_j) = 1 and D_i(a) = a for a in the i-th summand
            for k in range(n):
                for x in alg.source_letters[k]:
                    u = alg.letter(x)
                    want = alg.one() if alg.letters[x].free else u
                    assert fox(u, k) == want
                    assert all(fox(u, j).is_zero() for j in range(n) if j != k)
            for _ in range(200):
                u, v = random_element(alg, rng), random_element(alg, rng)
                assert reconstruct(fox_derivatives(u), alg) == u
                p, q = rng.randint(-4, 4), rng.randint(-4, 4)
                s, t = random_lie(alg, rng, max_degree=alg.cap // 2), random_lie(alg, rng, max_degree=alg.cap // 2)
                st_ = alg.lie_bracket(s, t)
                for k in range(n):
                    assert fox(u.scale(p) + v.scale(q), k) == fox(u, k).scale(p) + fox(v, k).scale(q)
                    assert fox(st_, k) == alg.multiply(fox(s, k), t) - alg.multiply(fox(t, k), s)
            if not N.is_zero():
                for _ in range(200):
                    m = random_in(alg, N, rng, degrees=range(2, alg.cap))
                    u = random_lie(alg, rng, max_degree=1)
                    c = alg.lie_bracket(m, u)
                    for k in range(n):
                        assert alg.contains(NU, fox(c, k) - alg.multiply(fox(m, k), u))


# ---------------------------------------------------------------------------
# 3


def test_chain_rule(p3, p3_N):
    with criterion(3, "chain rule through a free base of H∩N", 120):
        ctx = PreimageContext(p3, [0, 1], p3_N)
        base = free_generating_set(p3, ctx.HN)
        rng = random.Random(303)
        cache = {}
        for _ in range(50):
            f = random_in(p3, ctx.HN, rng, degrees=range(2, 7))
            if rng.random() < 0.5:
                f = f + p3.multiply(random_in(p3, ctx.HN, rng, degrees=[2]),
                                    random_in(p3, ctx.HN, rng, degrees=[2, 3, 4]))
            img = subalgebra_fox(f, base, cache)
            for l in range(p3.n_sources):
                rhs = p3.zero()
                for z, h in enumerate(base.elements):
                    rhs = rhs + p3.multiply(fox(h, l), img.derivatives[z])
                assert fox(f, l) == rhs


# ---------------------------------------------------------------------------
# 4


def test_kernel_equals_oracle(p3, p3_N):
    with criterion(4, "Fox kernel equals [N,N], and the ideal of N∩A_i plus [N,N]", 120):
        NN = bracket_subspaces(p3, p3_N, p3_N)
        K = fox_kernel(p3, p3_N)
        assert K == NN
        assert K.dims() == [0, 0, 0, 0] + [free_lie_dim(3, n) - free_metabelian_dim(3, n) for n in (4, 5, 6)]
        alg = p3_variant(ideal={"kind": "explicit", "generators": ["a", "[b,c]"]})
        N = ideal_from_spec(alg)
        meets = [subspace_intersect(summand_space(alg, s), N) for s in range(alg.n_summands)]
        assert not meets[0].is_zero()
        gens = [e for X in meets for e in alg.elements_of(X)]
        expected = subspace_sum(lie_ideal_closure(alg, gens), bracket_subspaces(alg, N, N))
        assert fox_kernel(alg, N) == expected
        assert ideal_M(alg, N) == expected


# ---------------------------------------------------------------------------
# 5


def test_preimage_constructions(p3, p3_N):
    with criterion(5, "preimage constructions in both modes", 120):
        ctx = PreimageContext(p3, [0, 1], p3_N)
        IH = ideal_of_HN(ctx)
        # admissible noise: x_k * w with w in U(H) ∩ N_U
        UHN = subspace_intersect(subalgebra_envelope(p3, summand_subalgebra(p3, [0, 1])), ctx.NU)
        rng = random.Random(505)
        for trial in range(25):
            noise = {k: p3.multiply(p3.letter(p3.source_letters[k][0]),
                                    random_in(p3, UHN, rng, degrees=range(2, 5), terms=2)) for k in (0, 1)}
            # subalgebra mode: images of an element of H∩N, shifted by N_U
            v0 = random_in(p3, ctx.HN, rng, degrees=range(2, 6))
            targets = {k: fox(v0, k) + noise[k] for k in (0, 1)}
            v = construct_preimage(p3, targets, "subalgebra", [0, 1], p3_N, context=ctx)
            assert p3.contains(ctx.HN, v)
            for k in (0, 1):
                assert p3.contains(ctx.NU, fox(v, k) - targets[k])
            # ideal mode: representatives for an element of the ideal generated by H∩N
            w0 = random_in(p3, IH, rng, degrees=range(2, 6))
            targets = {k: ctx.representative(k, fox(w0, k)) for k in (0, 1)}
            w = construct_preimage(p3, targets, "ideal", [0, 1], p3_N, context=ctx)
            assert p3.contains(IH, w)
            for k in (0, 1):
                assert p3.contains(ctx.NU, fox(w, k) - targets[k])


# ---------------------------------------------------------------------------
# 6


def test_augmentation_powers(free3):
    with criterion(6, "augmentation powers on the free presentation", 60):
        F = free3.lie_space()
        for n in (2, 3, 4):
            P = u0_power(free3, F, n)
            meet = subspace_intersect(F, P)
            assert meet == lower_central(free3, F, n)
            assert meet.dims() == [0] + [free_lie_dim(3, d) if d >= n else 0 for d in range(1, 7)]
        powers = {k: u0_power(free3, F, k) for k in range(1, 7)}
        g2 = free3.letter("g2")
        rng = random.Random(606)
        for _ in range(50):
            v = random_lie(free3, rng, max_degree=5, terms=3)
            d1v = fox(v, 0)
            lhs = fox(free3.lie_bracket(v, g2), 0)
            assert lhs == free3.multiply(d1v, g2)
            for k, P in powers.items():
                # U_0^k is spanned by words of length >= k in a free algebra
                assert free3.contains(P, d1v) == (d1v.is_zero() or d1v.low_degree() >= k)
                if k < 6 and not free3.contains(P, d1v):
                    assert not free3.contains(powers[k + 1], lhs)


# ---------------------------------------------------------------------------
# 7


def test_valuation(p3, p3_N):
    with criterion(7, "valuation and Δ-filtration", 120):
        chain = power_chain(p3, p3_N, (2,))
        ctx = level_context_for(p3, chain, zero_subspace(p3), 1)
        filt = ctx.filtration
        assert ctx.psi(p3.zero()) == math.inf
        assert ctx.psi(p3.one()) == 0
        rng = random.Random(707)
        levels = {0: None, 1: filt.level(1), 2: filt.level(2), 3: filt.level(3)}
        pairs = 0
        for _ in range(2000):
            if pairs == 100:
                break
            du = rng.randint(1, 3)
            dv = rng.randint(1, 6 - du)
            i, j = rng.randint(0, 3), rng.randint(0, 3)
            u = random_element(p3, rng, du, min_degree=du) if i == 0 else random_in(p3, levels[i], rng, [du])
            v = random_element(p3, rng, dv, min_degree=dv) if j == 0 else random_in(p3, levels[j], rng, [dv])
            if ctx.is_zero(u) or ctx.is_zero(v):
                continue
            pairs += 1
            assert ctx.psi(p3.multiply(u, v)) == ctx.psi(u) + ctx.psi(v)
        assert pairs == 100
        for i in (1, 2):
            for j in (1, 2):
                assert is_subspace(product_space(p3, filt.level(i), filt.level(j)), filt.level(i + j))
        # Δ'_i inside U(H∩N) realizes Δ_i there
        deep = power_chain(p3, p3_N, (3,))
        H = summand_subalgebra(p3, [0, 1])
        K = enveloping_ideal(p3, deep[(1, 4)])
        fam = [deep[(1, i)] for i in range(1, 4)]
        delta = DeltaFiltration(p3, fam, "enveloping", K)
        hfam = [subspace_intersect(H, X) for X in fam]
        dprime = DeltaFiltration(p3, hfam, "subalgebra", K)
        UH = subspace_sum(subalgebra_envelope(p3, hfam[0]), K)
        for i in range(1, 5):
            assert subspace_intersect(UH, delta.level(i)) == dprime.level(i)


# ---------------------------------------------------------------------------
# 8


def _random_entry(alg, rng):
    r = rng.random()
    if r < 0.35:
        return alg.zero()
    if r < 0.45:
        return alg.scalar(rng.choice([1, 2, -1]))
    d = rng.choice([1, 1, 2])
    u = alg.zero()
    for _ in range(rng.randint(1, 2)):
        u = u + alg.word([rng.choice("abc") for _ in range(d)]).scale(rng.choice([1, -1, 2]))
    return u


def test_triangularization(p3, p3_N):
    with criterion(8, "triangularization of random Ore matrices", 180):
        Z = zero_subspace(p3)
        contexts = [level_context_for(p3, power_chain(p3, p3_N, (1,)), Z, 0),
                    level_context_for(p3, power_chain(p3, p3_N, (1,)), Z, 1),
                    level_context_for(p3, power_chain(p3, p3_N, (2,)), Z, 1)]
        rng = random.Random(5)
        done = exhausted = 0
        for trial in range(50):
            ctx = contexts[trial % 3]
            rows, cols = rng.randint(1, 3), rng.randint(1, 4)
            m = OreMatrix([[_random_entry(p3, rng) for _ in range(cols)] for _ in range(rows)], ctx)
            try:
                out = triangularize(m)
            except OreExhausted:
                exhausted += 1
                continue
            done += 1
            ok, t, msg = check_triangular(out)
            assert ok, msg
            for k in range(t):
                for n in range(out.ncols):
                    assert ctx.psi(out[k, k]) <= ctx.psi(out[k, n])
            assert out.replay().same_entries(out)
            assert all(rec.certified for rec in row_conservation(out))
        print(f"\nOre exhaustion: {exhausted}/50 matrices ({100 * exhausted / 50:.0f}%)")
        assert done + exhausted == 50


# ---------------------------------------------------------------------------
# 9 and 10: the independent pipeline works on sparse Fraction vectors


def oracle_member_dims(relators, h_letters, signature, cap=6):
    """(lhs, rhs) per chain label: dims of H∩(R+N_kl) and H∩N_kl for P3 with N = F_(2)."""
    ref = RefAlgebra(INSTANCES / "p3.json")
    L = lie_span(ref, "abc", cap)
    N = {d: (L[d] if d >= 2 else Span()) for d in L}
    chain = power_chain_spans(ref, N, signature, cap)
    gens = []
    for text in relators:
        u = relator_ref(ref, text)
        gens.append(u)
    R = ideal_span(ref, gens, "abc", cap)
    H = lie_span(ref, h_letters, cap)
    out = {}
    for label, X in chain.items():
        lhs, rhs = meet_dims(H, span_sum(R, X)), meet_dims(H, X)
        out[label] = ([lhs[d] for d in range(1, cap + 1)], [rhs[d] for d in range(1, cap + 1)])
    return out


def relator_ref(ref, text):
    """Evaluate a bracket expression over letters by hand, without the package parser."""
    pos = 0

    def parse():
        nonlocal pos
        if text[pos] == "[":
            pos += 1
            x = parse()
            assert text[pos] == ","
            pos += 1
            y = parse()
            assert text[pos] == "]"
            pos += 1
            return ref.bracket(x, y)
        pos += 1
        return {(text[pos - 1],): Fraction(1)}
    return parse()


def assert_matches_oracle(rep, relators, h_letters):
    oracle = oracle_member_dims(relators, h_letters, rep.signature)
    # the oracle also lists aliases such as N_{1,m+1} = N_{2,1}
    assert {m.label for m in rep.members} <= set(oracle)
    for m in rep.members:
        lhs, rhs = oracle[m.label]
        assert m.lhs_dims[1:] == lhs and m.rhs_dims[1:] == rhs
        assert m.equal == (lhs == rhs)


def h_letters(alg, sources):
    return [alg.letters[x].name for j in sources for x in alg.source_letters[j]]


def test_theorem1_end_to_end(p3, p3_N):
    with criterion(9, "one-relator theorem end to end", 300):
        for sig in [(2,), (2, 2), (3,)]:
            rep = verify_one_relator(p3, p3_N, sig, "[a,c]", ["A1", "A2"])
            assert rep.exit_code == EXIT_OK and rep.verdict == "holds"
            assert all(m.equal and m.lie_equal for m in rep.members)
            assert_matches_oracle(rep, ["[a,c]"], "ab")
        rep = verify_one_relator(p3, p3_N, (2,), "[a,b]", ["A1", "A2"])
        assert rep.exit_code == EXIT_HYPOTHESIS
        assert p3.lie_text(rep.witness) == "[a,b]"
        assert_matches_oracle(rep, ["[a,b]"], "ab")
        rng = random.Random(909)
        pool = ["[a,c]", "[b,c]", "[a,b]", "[[a,c],c]", "[[b,c],a]", "[[a,b],c]", "[[a,c],b]"]
        for _ in range(10):
            terms = rng.sample(pool[:3] if rng.random() < 0.5 else pool[3:], rng.randint(1, 2))
            text = terms[0]
            for t in terms[1:]:
                text += f" {rng.choice('+-')} {rng.choice([1, 2])}*{t}"
            sig = rng.choice([(1,), (2,)])
            rep = verify_one_relator(p3, p3_N, sig, text, ["A1", "A2"])
            assert rep.verdict in ("holds", "hypothesis_fails"), (text, rep.verdict)
            assert all(m.agree for m in rep.members)
            assert rep.propositions and all(p["consistent"] for p in rep.propositions.values()), text


def test_theorem2_end_to_end(p3, p3_N):
    with criterion(10, "many-relator theorem end to end", 300):
        cert = solvability_certificate(p3, p3_N)
        assert cert.step == 1 and not cert.vacuous
        n = p3.n_summands
        sel, rep = verify_many_relators(p3, p3_N, (1,), ["[a,c]"], assert_solvable=True)
        assert rep.exit_code == EXIT_OK
        assert sel.size_ok and len(sel.complement) >= n - 1
        assert all(t is not None for t in sel.ranks)
        assert all(m.equal and m.lie_equal for m in rep.members)
        assert_matches_oracle(rep, ["[a,c]"], h_letters(p3, sel.complement))
        for r2 in ["[b,c]", "[[a,b],[a,c]]", "[[a,c],b]"]:
            sel, rep = verify_many_relators(p3, p3_N, (1,), ["[a,c]", r2], assert_solvable=True)
            assert rep.exit_code == EXIT_OK, r2
            assert sel.size_ok and len(sel.complement) >= n - 2
            assert all(m.equal and m.lie_equal for m in rep.members)
            assert_matches_oracle(rep, ["[a,c]", r2], h_letters(p3, sel.complement))
        sel, rep = verify_many_relators(p3, p3_N, (1,), ["[[a,b],[a,c]]"], assert_solvable=True)
        assert sel.degenerate and rep.exit_code == EXIT_OK
        assert all(m.equal and m.lhs_dims == m.rhs_dims for m in rep.members)
