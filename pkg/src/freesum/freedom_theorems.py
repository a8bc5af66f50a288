"""Verifiers for the freedom theorems (one relator and finitely many relators).

Every verdict is a finite statement about degrees up to the cap.  Equalities
H∩(R+N_kl) = H∩N_kl are computed twice: once through the enveloping algebra
(H against the ideal (R+N_kl)_U of U(F)) and once purely on the Lie side.
Every inequality carries a witness checked by membership.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from itertools import combinations

from .core_linear import (
    is_subspace, matrix_rows, solve_in_span, subspace_intersect, subspace_sum, zero_subspace,
)
from .enveloping import UEAElement
from .fox_calculus import fox_derivatives
from .ore_matrices import (
    OreExhausted, OreMatrix, QuotientContext, TriangularizationError, replay_ledger,
    triangular_rank, triangularize,
)
from .presentation import check_elementary_invariance, parse_lie_expr
from .subspace_calculus import (
    DeltaFiltration, SeriesChain, derived_series, enveloping_ideal, is_graded,
    label_text, lie_ideal_closure, power_chain, summand_intersections, summand_subalgebra,
)

EXIT_OK, EXIT_FAILS, EXIT_HYPOTHESIS, EXIT_INPUT, EXIT_INCONCLUSIVE = 0, 1, 2, 3, 4


class RelatorError(ValueError):
    """A relator is zero, not a Lie element, or not in N."""


@dataclass
class MemberVerdict:
    label: tuple
    lhs_dims: list          # H ∩ (R + N_kl)
    rhs_dims: list          # H ∩ N_kl
    equal: bool
    lie_equal: bool         # the same verdict computed on the Lie side only
    witness: UEAElement | None = None

    @property
    def agree(self) -> bool:
        return self.equal == self.lie_equal

    def to_dict(self, alg):
        return {"member": label_text(self.label), "lhs_dims": self.lhs_dims, "rhs_dims": self.rhs_dims,
                "verdict": "equal" if self.equal else "unequal", "double_check": self.agree,
                "witness": alg.lie_text(self.witness) if self.witness is not None else None}


@dataclass
class VerificationReport:
    kind: str
    relators: list
    h_summands: list
    signature: tuple
    cap: int
    preconditions: list = dc_field(default_factory=list)   # (name, ok, detail)
    position: dict | None = None
    hypothesis: dict | None = None
    members: list = dc_field(default_factory=list)
    propositions: dict = dc_field(default_factory=dict)
    verdict: str = ""
    exit_code: int = 0
    witness: UEAElement | None = None
    notes: list = dc_field(default_factory=list)

    def member(self, label):
        for m in self.members:
            if m.label == tuple(label):
                return m
        raise KeyError(label)

    def to_dict(self, alg):
        return {
            "kind": self.kind,
            "relators": self.relators,
            "h_summands": self.h_summands,
            "signature": list(self.signature),
            "cap": self.cap,
            "preconditions": [{"check": n, "ok": ok, "detail": d} for n, ok, d in self.preconditions],
            "position": self.position,
            "hypothesis": self.hypothesis,
            "members": [m.to_dict(alg) for m in self.members],
            "propositions": self.propositions,
            "verdict": self.verdict,
            "exit_code": self.exit_code,
            "witness": alg.lie_text(self.witness) if self.witness is not None else None,
            "notes": self.notes,
        }


@dataclass
class SelectionReport:
    ranks: list                        # t_k for k = 0..s (None where not computed)
    first_level: int | None            # K
    ledgers: list                      # per level: list of ElementaryOp
    selected: list                     # I_s as source indices
    complement: list                   # J as source indices
    size_ok: bool
    special_case: bool = False
    degenerate: bool = False
    matrices: list = dc_field(default_factory=list)   # triangular M_k per level (OreMatrix or None)
    alternatives: dict | None = None   # optional exhaustive search: J -> holds

    def to_dict(self, alg):
        names = alg.source_names
        return {
            "ranks": self.ranks,
            "first_level": self.first_level,
            "ledgers": [[op.to_dict(alg) for op in led] for led in self.ledgers],
            "selected": [names[i] for i in self.selected],
            "complement": [names[i] for i in self.complement],
            "size_ok": self.size_ok,
            "special_case": self.special_case,
            "degenerate": self.degenerate,
            "matrices": [m.to_lists() if m is not None else None for m in self.matrices],
            "alternatives": None if self.alternatives is None else
            [{"J": [names[i] for i in j], "holds": ok} for j, ok in self.alternatives.items()],
        }


# ---------------------------------------------------------------------------
# building blocks


def as_element(alg, r) -> UEAElement:
    if isinstance(r, UEAElement):
        return r
    return alg.evaluate(parse_lie_expr(r, alg.by_name) if isinstance(r, str) else r)


def jacobian_matrix(alg, relators, N=None) -> OreMatrix:
    """m x n matrix of Fox derivatives D_j(r_i) over U(F)."""
    rows = []
    for r in relators:
        u = as_element(alg, r)
        if N is not None and not alg.contains(N, u):
            raise RelatorError(f"relator {alg.lie_text(u)} is not in N")
        image = fox_derivatives(u)
        rows.append([image.derivatives[k] for k in range(alg.n_sources)])
    ctx = QuotientContext(alg, zero_subspace(alg), name="U(F)")
    return OreMatrix(rows, ctx)


def relator_filtration_position(alg, r, chain: SeriesChain):
    """(label, at_end): the chain member N_kl with r in N_kl but not in the next member."""
    u = as_element(alg, r)
    if u.is_zero():
        raise RelatorError("relator is zero")
    if not alg.contains(chain.members[0], u):
        raise RelatorError(f"relator {alg.lie_text(u)} is not in N")
    last = 0
    for pos in range(1, len(chain.members)):
        if alg.contains(chain.members[pos], u):
            last = pos
        else:
            break
    return chain.labels[last], last == len(chain.members) - 1


def split_in_sum(alg, u: UEAElement, A, B):
    """(a, b) with u = a + b, a in A, b in B; None if u is not in A + B."""
    field = alg.field
    a = alg.zero()
    for d, vec in sorted(u.vectors().items()):
        Bd = B.part(d)
        target = list(Bd.residues(field.matrix(1, len(vec), vec)).entries()) if Bd.rank else list(vec)
        if all(x == 0 for x in target):
            continue
        Ad = A.part(d)
        if Ad.rank == 0:
            return None
        res = Bd.residues(Ad.mat) if Bd.rank else Ad.mat
        coef = solve_in_span(field, res, target)
        if coef is None:
            return None
        for row, c in zip(matrix_rows(Ad.mat), coef):
            if c != 0:
                a = a + alg.from_vector(d, row).scale(c)
    return a, u - a


def _member_verdicts(alg, H, R, chain: SeriesChain, R_U=None) -> list[MemberVerdict]:
    out = []
    for label, Nkl in chain.items():
        lie_lhs = subspace_intersect(H, subspace_sum(R, Nkl))
        lie_rhs = subspace_intersect(H, Nkl)
        lie_equal = lie_lhs == lie_rhs
        if R_U is not None:
            big = subspace_sum(R_U, enveloping_ideal(alg, Nkl))
            u_lhs = subspace_intersect(H, big)
            u_rhs = subspace_intersect(H, enveloping_ideal(alg, Nkl))
            equal = u_lhs == u_rhs
            lhs_dims, rhs_dims = u_lhs.dims(), u_rhs.dims()
        else:
            equal = lie_equal
            lhs_dims, rhs_dims = lie_lhs.dims(), lie_rhs.dims()
        witness = None
        if not lie_equal:
            witness = alg.first_outside(lie_lhs, lie_rhs)
            if not (alg.contains(H, witness) and alg.contains(subspace_sum(R, Nkl), witness)
                    and not alg.contains(Nkl, witness)):
                raise AssertionError("inequality witness failed its membership checks")
        out.append(MemberVerdict(label, lhs_dims, rhs_dims, equal, lie_equal, witness))
    return out


def _common_preconditions(alg, N, report: VerificationReport) -> bool:
    checks = report.preconditions
    ok = True

    def add(name, good, detail=""):
        nonlocal ok
        checks.append((name, bool(good), detail))
        ok = ok and bool(good)

    add("no free generators", alg.n_free == 0,
        "" if alg.n_free == 0 else "the verifiers handle free sums of the listed summands only")
    add("more than two summands", alg.n_summands > 2, f"n = {alg.n_summands}")
    graded = is_graded(alg, N)
    add("graded ideal N", graded)
    if not graded:
        return False
    bad = summand_intersections(alg, N)
    add("N meets no summand", not bad, "" if not bad else f"dim N∩A: {bad}")
    inv, info = check_elementary_invariance(alg, N)
    add("N invariant under elementary endomorphisms", inv,
        "" if inv else f"killing {info[0]} sends N to {alg.lie_text(info[1])}")
    return ok


def _precondition_verdict(report):
    report.verdict = "precondition_failed"
    report.exit_code = EXIT_HYPOTHESIS
    return report


def _source_index(alg, name):
    if isinstance(name, int):
        return name
    if name not in alg.source_names:
        raise KeyError(f"unknown summand {name!r}")
    return alg.source_names.index(name)


# ---------------------------------------------------------------------------
# one relator


def _propositions(members: list[MemberVerdict], chain: SeriesChain, hypothesis_holds: bool):
    order = [m.label for m in members]
    verdict = {m.label: m.equal for m in members}
    first_block_end = chain.position((1, chain.signature[0] + 1))
    first_block = order[:first_block_end + 1]
    props = {}
    # first block equality under the hypothesis
    concl = all(verdict[l] for l in first_block)
    props["first_block_equality"] = {"premise": hypothesis_holds, "conclusion": concl,
                    "consistent": (not hypothesis_holds) or concl}
    # propagation past N_21
    pos21 = first_block_end
    premise = verdict[order[pos21]]
    concl = all(verdict[l] for l in order[pos21:])
    props["equality_after_first_block"] = {"premise": premise, "conclusion": concl, "consistent": (not premise) or concl}
    # propagation of an inequality in the first block
    bad = [p for p in range(first_block_end + 1) if not verdict[order[p]]]
    if bad:
        concl = all(not verdict[l] for l in order[bad[0]:])
        props["inequality_propagates"] = {"premise": True, "from": label_text(order[bad[0]]), "conclusion": concl,
                        "consistent": concl}
    else:
        props["inequality_propagates"] = {"premise": False, "conclusion": None, "consistent": True}
    return props


def verify_one_relator(alg, N, signature, relator, h_summands) -> VerificationReport:
    rel = as_element(alg, relator)
    names = [alg.source_names[_source_index(alg, s)] for s in h_summands]
    report = VerificationReport("theorem1", [alg.lie_text(rel) if alg.is_lie(rel) else str(rel)],
                                names, tuple(signature), alg.cap)
    if not _common_preconditions(alg, N, report):
        return _precondition_verdict(report)
    idx = sorted({_source_index(alg, s) for s in h_summands})
    good_h = len(idx) == alg.n_summands - 1 and all(i < alg.n_summands for i in idx)
    report.preconditions.append(("H spanned by n-1 summands", good_h, ", ".join(names)))
    if not good_h:
        return _precondition_verdict(report)
    lie = alg.is_lie(rel)
    report.preconditions.append(("relator is a Lie element", lie, ""))
    if not lie:
        return _precondition_verdict(report)
    chain = power_chain(alg, N, signature)
    try:
        label, at_end = relator_filtration_position(alg, rel, chain)
    except RelatorError as exc:
        report.preconditions.append(("relator in N and nonzero", False, str(exc)))
        return _precondition_verdict(report)
    report.position = {"member": label_text(label), "at_end": at_end}
    if label[0] != 1 or at_end:
        report.preconditions.append(("relator lies in the first block", False,
                                     f"r is in {label_text(chain.labels[chain.position((1, chain.signature[0] + 1))])}"))
        return _precondition_verdict(report)
    i = label[1]
    H = summand_subalgebra(alg, idx)
    nxt = chain[(1, i + 1)]
    split = split_in_sum(alg, rel, H, nxt)
    holds = split is None
    report.hypothesis = {"position_i": i, "member": label_text(chain.labels[chain.position((1, i + 1))]),
                         "r_in_H_plus_next": not holds, "holds": holds}
    if not rel.is_homogeneous():
        report.preconditions.append(("homogeneous relator", False,
                                     "truncated closures are exact only for homogeneous relators"))
        return _precondition_verdict(report)
    R = lie_ideal_closure(alg, [rel])
    R_U = enveloping_ideal(alg, R)
    report.members = _member_verdicts(alg, H, R, chain, R_U)
    report.propositions = _propositions(report.members, chain, holds)
    if not all(m.agree for m in report.members):
        raise AssertionError("enveloping-side and Lie-side verdicts disagree")
    if not holds:
        h = split[0]
        ok = (alg.contains(H, h) and alg.contains(subspace_sum(R, nxt), h) and not alg.contains(nxt, h))
        report.hypothesis["h_component"] = alg.lie_text(h)
        report.hypothesis["witness_verified"] = ok
        if not ok:
            raise AssertionError("H-component of the relator failed its witness checks")
        report.witness = h
        report.verdict = "hypothesis_fails"
        report.exit_code = EXIT_HYPOTHESIS
        return report
    bad = [m for m in report.members if not m.equal]
    if bad:
        report.verdict = "fails"
        report.exit_code = EXIT_FAILS
        report.witness = bad[0].witness
    else:
        report.verdict = "holds"
        report.exit_code = EXIT_OK
    return report


# ---------------------------------------------------------------------------
# several relators


@dataclass
class SolvabilityCertificate:
    step: int | None        # first l with F^(l) inside N
    vacuous: bool           # F^(l) vanished within the cap already
    surviving_degree: int | None


def solvability_certificate(alg, N) -> SolvabilityCertificate:
    series = derived_series(alg, alg.lie_space())
    for step, D in enumerate(series):
        if is_subspace(D, N):
            return SolvabilityCertificate(step, D.is_zero(), None)
    last = series[-1]
    bad = alg.first_outside(last, N)
    return SolvabilityCertificate(None, False, bad.degree() if bad is not None else None)


class _RelatorIdeal:
    """R_U bundled with R, so that level contexts can build R + N_ki."""

    def __init__(self, alg, R):
        self.R = R
        self.U = enveloping_ideal(alg, R)


def _context(alg, chain, rel_ideal, k):
    if k == 0:
        return QuotientContext(alg, enveloping_ideal(alg, chain.members[0]), name="U(F/N)")
    end = chain[chain.block_end(k)]
    modulus = subspace_sum(rel_ideal.U, enveloping_ideal(alg, end))
    coarse = subspace_sum(rel_ideal.U, enveloping_ideal(alg, chain[(k, 1)]))
    family = [subspace_sum(rel_ideal.R, chain[(k, i)]) for i in range(1, chain.signature[k - 1] + 1)]
    filt = DeltaFiltration(alg, family, "enveloping", modulus)
    return QuotientContext(alg, modulus, coarse, filt,
                           name=f"U(F/(R+{label_text(chain.block_end(k))}))")


def level_context_for(alg, chain: SeriesChain, R, k: int) -> QuotientContext:
    """Level-k quotient context: U(F/N) for k = 0, else U(F/(R+N_{k,m_k+1})) with φ'_k and Δ."""
    return _context(alg, chain, _RelatorIdeal(alg, R), k)


def select_columns(alg, chain: SeriesChain, relators, rel_ideal, ore_bound=None) -> SelectionReport:
    """Ranks t_k, ledgers Φ_k, I_s and J, following the level-by-level triangularization."""
    s = len(chain.signature)
    M = jacobian_matrix(alg, relators)
    n = alg.n_sources
    ranks, ledgers, mats = [], [], []
    K = None
    prev = None
    for k in range(0, s + 1):
        ctx = _context(alg, chain, rel_ideal, k)
        if K is None:
            Mk = OreMatrix(M.entries, ctx)
            if all(x.is_zero() for row in Mk.entries for x in row):
                ranks.append(0)
                ledgers.append(())
                mats.append(Mk)
                continue
            K = k
            tri = triangularize(Mk, prefix=0, degree_bound=ore_bound)
        else:
            Mk1 = replay_ledger(M.entries, prev.ledger, ctx)
            tri = triangularize(Mk1, prefix="auto", degree_bound=ore_bound)
        t = triangular_rank(tri)
        ranks.append(t)
        ledgers.append(tri.ledger)
        mats.append(tri)
        prev = tri
    if prev is None:
        return SelectionReport(ranks, None, ledgers, [], list(range(n)), True, degenerate=True, matrices=mats)
    t_s = ranks[-1]
    selected = sorted(prev.perm[:t_s])
    complement = [j for j in range(n) if j not in selected]
    return SelectionReport(ranks, K, ledgers, selected, complement,
                           len(complement) >= n - len(relators), matrices=mats)


def verify_many_relators(alg, N, signature, relators, assert_solvable=False, ore_bound=None,
                         exhaustive=False):
    """(SelectionReport or None, VerificationReport)."""
    rels = [as_element(alg, r) for r in relators]
    report = VerificationReport("theorem2", [alg.lie_text(r) if alg.is_lie(r) else str(r) for r in rels],
                                [], tuple(signature), alg.cap)
    if not _common_preconditions(alg, N, report):
        return None, _precondition_verdict(report)
    m, n = len(rels), alg.n_summands
    report.preconditions.append(("fewer relators than summands", 0 < m < n, f"m = {m}, n = {n}"))
    if not 0 < m < n:
        return None, _precondition_verdict(report)
    for r in rels:
        ok = alg.is_lie(r) and not r.is_zero() and alg.contains(N, r) and r.is_homogeneous()
        report.preconditions.append((f"relator {report.relators[rels.index(r)]} is a homogeneous element of N",
                                     ok, ""))
        if not ok:
            return None, _precondition_verdict(report)
    cert = solvability_certificate(alg, N)
    if cert.step is None:
        detail = f"derived series of F/N survives (degree {cert.surviving_degree})"
    elif cert.vacuous:
        detail = f"derived term {cert.step} vanishes only by truncation"
    else:
        detail = f"F^({cert.step}) lies in N"
    cert_ok = cert.step is not None and not cert.vacuous
    report.preconditions.append(("solvability certificate", cert_ok, detail))
    report.preconditions.append(("solvability asserted by the user", bool(assert_solvable), ""))
    if not (cert_ok and assert_solvable):
        return None, _precondition_verdict(report)
    chain = power_chain(alg, N, signature)
    rel_ideal = _RelatorIdeal(alg, lie_ideal_closure(alg, rels))
    end = chain.members[-1]
    if n - m == 1:
        j = n - 1
        selection = SelectionReport([None] * (len(chain.signature) + 1), None, [], [i for i in range(n) if i != j],
                                    [j], True, special_case=True)
        report.notes.append(f"n - m = 1: H is the single summand {alg.source_names[j]}")
    elif all(alg.contains(end, r) for r in rels):
        selection = SelectionReport([0] * (len(chain.signature) + 1), None, [], [], list(range(n)), True,
                                    degenerate=True)
        report.notes.append("all relators lie in the last chain member, so R + N_kl = N_kl")
    else:
        try:
            selection = select_columns(alg, chain, rels, rel_ideal, ore_bound)
        except OreExhausted as exc:
            report.verdict = "inconclusive"
            report.exit_code = EXIT_INCONCLUSIVE
            report.notes.append(f"Ore search exhausted at position {exc.position}: {exc}")
            return None, report
        except TriangularizationError as exc:
            report.verdict = "inconclusive"
            report.exit_code = EXIT_INCONCLUSIVE
            report.notes.append(f"triangularization not certified: {exc}")
            return None, report
    report.h_summands = [alg.source_names[j] for j in selection.complement]
    H = summand_subalgebra(alg, selection.complement)
    report.members = _member_verdicts(alg, H, rel_ideal.R, chain, rel_ideal.U)
    if not all(mv.agree for mv in report.members):
        raise AssertionError("enveloping-side and Lie-side verdicts disagree")
    bad = [mv for mv in report.members if not mv.equal]
    if bad:
        report.verdict, report.exit_code, report.witness = "fails", EXIT_FAILS, bad[0].witness
    else:
        report.verdict, report.exit_code = "holds", EXIT_OK
    if exhaustive:
        alts = {}
        for size in range(max(n - m, 1), n + 1):
            for J in combinations(range(n), size):
                HJ = summand_subalgebra(alg, J)
                alts[J] = all(v.lie_equal for v in _member_verdicts(alg, HJ, rel_ideal.R, chain))
        selection.alternatives = alts
    return selection, report

