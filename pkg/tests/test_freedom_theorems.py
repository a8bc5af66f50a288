import json

import pytest

from freesum.enveloping import EnvelopingAlgebra
from freesum.freedom_theorems import (
    EXIT_HYPOTHESIS, EXIT_OK, RelatorError, jacobian_matrix, relator_filtration_position,
    solvability_certificate, split_in_sum, verify_many_relators, verify_one_relator,
)
from freesum.presentation import load_presentation
from freesum.subspace_calculus import ideal_from_spec, power_chain, summand_subalgebra

from conftest import lie
from oracle import INSTANCES


def p3_variant(**changes):
    raw = json.loads((INSTANCES / "p3.json").read_text())
    raw.update(changes)
    return EnvelopingAlgebra(load_presentation(raw))


def test_jacobian_rows(p3):
    m = jacobian_matrix(p3, ["[a,c]", "[a,c]"])
    assert m.entries[0] == (p3.word("ac"), p3.zero(), -p3.word("ca"))
    assert m.entries[0] == m.entries[1]


def test_jacobian_of_free_generator(mixed):
    m = jacobian_matrix(mixed, ["g2"])
    k = mixed.source_names.index("g2")
    assert [not x.is_zero() for x in m.entries[0]] == [j == k for j in range(mixed.n_sources)]
    assert m.entries[0][k] == mixed.one()


def test_jacobian_checks_membership(p3, p3_N):
    with pytest.raises(RelatorError):
        jacobian_matrix(p3, ["a"], N=p3_N)


def test_filtration_positions(p3, p3_N):
    ch = power_chain(p3, p3_N, (2, 2))
    assert relator_filtration_position(p3, "[a,c]", ch) == ((1, 1), False)
    assert relator_filtration_position(p3, "[[a,b],[a,c]]", ch) == ((1, 2), False)
    assert relator_filtration_position(p3, "[[[a,b],[a,c]],[b,c]]", ch) == ((2, 1), False)
    short = power_chain(p3, p3_N, (2,))
    assert relator_filtration_position(p3, "[[[a,b],[a,c]],[b,c]]", short) == ((1, 3), True)
    with pytest.raises(RelatorError):
        relator_filtration_position(p3, "[a,a]", ch)
    with pytest.raises(RelatorError):
        relator_filtration_position(p3, "a", ch)


def test_split_in_sum(p3, p3_N):
    H = summand_subalgebra(p3, [0, 1])
    u = lie(p3, "[a,b] + [a,c] + b")
    h, n = split_in_sum(p3, u, H, p3_N)
    assert p3.contains(H, h) and p3.contains(p3_N, n) and h + n == u
    assert split_in_sum(p3, p3.letter("c"), H, p3_N) is None


def test_theorem1_holds(p3, p3_N):
    rep = verify_one_relator(p3, p3_N, (2,), "[a,c]", ["A1", "A2"])
    assert rep.exit_code == EXIT_OK and rep.verdict == "holds"
    assert rep.hypothesis["holds"] and rep.position == {"member": "N1,1", "at_end": False}
    assert all(m.equal and m.lie_equal for m in rep.members)
    assert rep.member((1, 1)).lhs_dims == [0, 0, 1, 2, 3, 6, 9]
    assert all(p["consistent"] for p in rep.propositions.values())


def test_theorem1_hypothesis_fails(p3, p3_N):
    rep = verify_one_relator(p3, p3_N, (2,), "[a,b]", ["A1", "A2"])
    assert rep.exit_code == EXIT_HYPOTHESIS and rep.verdict == "hypothesis_fails"
    assert rep.witness == lie(p3, "[a,b]")
    assert rep.hypothesis["witness_verified"]
    assert not rep.member((1, 2)).equal
    assert rep.propositions["inequality_propagates"]["premise"] and rep.propositions["inequality_propagates"]["consistent"]


def test_theorem1_zero_relator(p3, p3_N):
    rep = verify_one_relator(p3, p3_N, (2,), "[a,a]", ["A1", "A2"])
    assert rep.verdict == "precondition_failed" and rep.exit_code == EXIT_HYPOTHESIS


def test_theorem1_relator_past_first_block(p3, p3_N):
    rep = verify_one_relator(p3, p3_N, (1, 1), "[[a,b],[a,c]]", ["A1", "A2"])
    assert rep.verdict == "precondition_failed"
    assert rep.position["member"] == "N2,1"


def test_theorem1_inhomogeneous_relator(p3, p3_N):
    rep = verify_one_relator(p3, p3_N, (2,), "[a,c] + [[a,b],[a,c]]", ["A1", "A2"])
    assert rep.verdict == "precondition_failed"
    assert rep.position is not None and rep.hypothesis is not None


def test_theorem1_needs_three_summands():
    raw = json.loads((INSTANCES / "p3.json").read_text())
    raw["summands"] = raw["summands"][:2]
    raw["relators"] = []
    alg = EnvelopingAlgebra(load_presentation(raw))
    rep = verify_one_relator(alg, ideal_from_spec(alg), (1,), "[a,b]", ["A1"])
    assert rep.verdict == "precondition_failed"
    assert ("more than two summands", False, "n = 2") in rep.preconditions


def test_theorem1_ideal_meeting_a_summand():
    alg = p3_variant(ideal={"kind": "explicit", "generators": ["a", "[b,c]"]})
    rep = verify_one_relator(alg, ideal_from_spec(alg), (1,), "[b,c]", ["A1", "A2"])
    assert rep.verdict == "precondition_failed"
    assert any(name == "N meets no summand" and not ok for name, ok, _ in rep.preconditions)


def test_theorem1_rejects_free_generators(mixed):
    rep = verify_one_relator(mixed, ideal_from_spec(mixed), (1,), "[x,b]", ["A1", "g1"])
    assert rep.verdict == "precondition_failed"


def test_wrong_H(p3, p3_N):
    rep = verify_one_relator(p3, p3_N, (1,), "[a,c]", ["A1"])
    assert rep.verdict == "precondition_failed"


def test_solvability_certificate(p3, p3_N):
    cert = solvability_certificate(p3, p3_N)
    assert cert.step == 1 and not cert.vacuous


def test_theorem2_needs_assertion(p3, p3_N):
    sel, rep = verify_many_relators(p3, p3_N, (1,), ["[a,c]"])
    assert sel is None and rep.exit_code == EXIT_HYPOTHESIS


def test_theorem2_too_many_relators(p3, p3_N):
    sel, rep = verify_many_relators(p3, p3_N, (1,), ["[a,c]", "[a,b]", "[b,c]"], assert_solvable=True)
    assert rep.verdict == "precondition_failed"


def test_theorem2_special_case(p3, p3_N):
    sel, rep = verify_many_relators(p3, p3_N, (1,), ["[a,c]", "[b,c]"], assert_solvable=True)
    assert sel.special_case and sel.complement == [2]
    assert rep.exit_code == EXIT_OK and rep.h_summands == ["A3"]
    assert all(m.lhs_dims == [0] * 7 for m in rep.members)


def test_theorem2_degenerate(p3, p3_N):
    sel, rep = verify_many_relators(p3, p3_N, (1,), ["[[a,b],[a,c]]"], assert_solvable=True)
    assert sel.degenerate and sel.complement == [0, 1, 2]
    assert rep.exit_code == EXIT_OK
