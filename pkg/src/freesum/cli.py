"""Command line interface: load a presentation, run one command, print a report.

Exit codes: 0 success / verdict holds, 1 verdict fails (a witness is
printed), 2 hypothesis or precondition violated, 3 input error,
4 inconclusive (Ore search or filtration exhausted within the cap).
"""
from __future__ import annotations

import argparse
import json
import re
import sys

from .core_linear import subspace_sum
from .enveloping import EnvelopingAlgebra, adapted_pbw_basis
from .fox_calculus import fox_derivatives, ideal_M, reconstruct
from .freedom_theorems import (
    EXIT_FAILS, EXIT_INCONCLUSIVE, EXIT_INPUT, EXIT_OK, jacobian_matrix,
    level_context_for, verify_many_relators, verify_one_relator,
)
from .ore_matrices import OreExhausted, OreMatrix, TriangularizationError, check_triangular, triangularize
from .presentation import InputError, load_presentation, parse_lie_expr, validate_presentation
from .subspace_calculus import (
    FiltrationExhausted, ideal_from_spec, label_text, lie_ideal_closure, power_chain,
    subspace_intersect, summand_subalgebra,
)


def _parse_series(text):
    try:
        sig = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise InputError(f"series must be a comma separated list of integers, got {text!r}")
    if not sig or any(m < 1 for m in sig):
        raise InputError("series entries must be positive")
    return sig


class Session:
    """Presentation, algebra and the derived objects a command needs."""

    def __init__(self, args):
        self.args = args
        self.presentation = load_presentation(args.input, args.cap)
        report = validate_presentation(self.presentation)
        if not report.ok:
            raise InputError("invalid presentation: " + "; ".join(d.message for d in report.diagnostics))
        self.alg = EnvelopingAlgebra(self.presentation, args.cap, check=False)
        if args.series:
            self.signature = _parse_series(args.series)
        else:
            self.signature = tuple(self.presentation.series or (1,))
        self._N = None
        self._chain = None

    @property
    def N(self):
        if self._N is None:
            self._N = ideal_from_spec(self.alg)
        return self._N

    @property
    def chain(self):
        if self._chain is None:
            self._chain = power_chain(self.alg, self.N, self.signature)
        return self._chain

    def element(self, text):
        return self.alg.evaluate(parse_lie_expr(text, self.alg.by_name))

    def relators(self):
        texts = self.args.relator or list(self.presentation.relators)
        if not texts:
            raise InputError("no relators given (use --relator or the presentation's relators)")
        return texts

    def h_sources(self):
        if not self.args.h_summands:
            raise InputError("--h-summands is required for this command")
        names = [s.strip() for s in self.args.h_summands.split(",") if s.strip()]
        out = []
        for nm in names:
            if nm not in self.alg.source_names:
                raise InputError(f"unknown summand {nm!r}; known: {', '.join(self.alg.source_names)}")
            out.append(self.alg.source_names.index(nm))
        return out


# ---------------------------------------------------------------------------
# output helpers


def _table(headers, rows):
    cols = [headers] + [[str(x) for x in r] for r in rows]
    widths = [max(len(r[i]) for r in cols) for i in range(len(headers))]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for r in cols[1:]:
        lines.append("  ".join(x.ljust(w) for x, w in zip(r, widths)))
    return "\n".join(lines)


def _emit(args, doc, text):
    if args.format == "machine":
        print(json.dumps(doc, indent=2, default=str))
    else:
        print(text)


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args):
    p = load_presentation(args.input, args.cap)
    report = validate_presentation(p)
    doc = report.to_dict()
    if report.ok:
        doc["summands"] = [s.name for s in p.summands]
        doc["free_generators"] = [g.name for g in p.free_generators]
        doc["cap"] = p.cap if args.cap is None else args.cap
    lines = ["presentation is valid" if report.ok else "presentation has problems:"]
    for d in report.diagnostics:
        lines.append(f"  [{d.kind}] {d.message}")
    _emit(args, doc, "\n".join(lines))
    return EXIT_OK if report.ok else EXIT_INPUT


def cmd_dims(args):
    s = Session(args)
    alg = s.alg
    degrees = list(range(alg.cap + 1))
    rows = [["U(F)"] + [alg.dim(d) for d in degrees], ["F"] + alg.lie_space().dims(), ["N"] + s.N.dims()]
    for label, member in s.chain.items():
        rows.append([label_text(label)] + member.dims())
    doc = {"degrees": degrees, "rows": {r[0]: r[1:] for r in rows}, "signature": list(s.signature)}
    _emit(args, doc, _table(["space"] + [str(d) for d in degrees], rows))
    return EXIT_OK


def cmd_fox(args):
    s = Session(args)
    alg = s.alg
    u = s.element(args.expr)
    image = fox_derivatives(u)
    rows = [["constant", alg.field.to_text(image.constant)]]
    for k in range(alg.n_sources):
        rows.append([f"D_{alg.source_names[k]}", alg.format_element(image.derivatives[k])])
    ok = reconstruct(image, alg) == u
    doc = {"element": alg.format_element(u), "constant": alg.field.to_text(image.constant),
           "derivatives": {alg.source_names[k]: alg.format_element(image.derivatives[k])
                           for k in range(alg.n_sources)},
           "reconstruction": ok}
    text = _table(["part", "value"], rows) + f"\nreconstruction identity: {'ok' if ok else 'FAILED'}"
    _emit(args, doc, text)
    return EXIT_OK if ok else EXIT_FAILS


_MEMBER = re.compile(r"^(R\+)?N_?\{?(\d+)[_,]?(\d+)\}?$")


def resolve_subspace(s: Session, name: str):
    alg = s.alg
    key = name.replace(" ", "")
    if key == "F":
        return alg.lie_space()
    if key == "N":
        return s.N
    if key == "H":
        return summand_subalgebra(alg, s.h_sources())
    if key == "H∩N" or key == "HN":
        return subspace_intersect(summand_subalgebra(alg, s.h_sources()), s.N)
    if key == "R":
        return lie_ideal_closure(alg, [s.element(t) for t in s.relators()])
    if key == "R+N":
        return subspace_sum(lie_ideal_closure(alg, [s.element(t) for t in s.relators()]), s.N)
    if key == "M":
        return ideal_M(alg, s.N)
    m = _MEMBER.match(key)
    if m:
        label = (int(m.group(2)), int(m.group(3)))
        try:
            member = s.chain[label]
        except (ValueError, IndexError):
            raise InputError(f"{name} is not a member of the chain with signature {s.signature}")
        if m.group(1):
            member = subspace_sum(lie_ideal_closure(alg, [s.element(t) for t in s.relators()]), member)
        return member
    raise InputError(f"unknown subspace {name!r} (use F, N, H, H∩N, R, R+N, M, N_k_l or R+N_k_l)")


def cmd_membership(args):
    s = Session(args)
    alg = s.alg
    u = s.element(args.expr)
    space = resolve_subspace(s, args.subspace)
    coords = alg.coords(space, u)
    inside = coords is not None
    doc = {"element": alg.lie_text(u), "subspace": args.subspace, "member": inside,
           "coordinates": None if coords is None else
           {str(d): [alg.field.to_text(c) for c in cs] for d, cs in coords.items()}}
    text = f"{alg.lie_text(u)} {'is in' if inside else 'is not in'} {args.subspace}"
    if inside:
        for d, cs in sorted(coords.items()):
            text += f"\n  degree {d}: [{', '.join(alg.field.to_text(c) for c in cs)}]"
    _emit(args, doc, text)
    return EXIT_OK if inside else EXIT_FAILS


def cmd_standard_basis(args):
    s = Session(args)
    alg = s.alg
    H = summand_subalgebra(alg, s.h_sources())
    HN = subspace_intersect(H, s.N)
    HplusN = subspace_sum(H, s.N)
    chain = adapted_pbw_basis(alg, [HN, s.N, HplusN, alg.lie_space()], names=["a", "e", "b", "d"],
                              sources=[HN, s.N, H, alg.lie_space()], direction="outer_first")
    layer_rows = []
    for t, nm in enumerate(chain.names):
        layer_rows.append([nm] + [sum(1 for d, _ in chain.layers[t] if d == e) for e in range(1, alg.cap + 1)])
    census = []
    for d in range(alg.cap + 1):
        mons = chain.monomials(d)
        tags = [m.tag for m in mons]
        census.append([d, len(mons), alg.dim(d), tags.count("alpha"), tags.count("beta"), tags.count("other")])
    doc = {"layers": {r[0]: r[1:] for r in layer_rows},
           "layer_elements": {nm: [alg.lie_text(el) for _, el in chain.layers[t]]
                              for t, nm in enumerate(chain.names)},
           "census": [dict(zip(["degree", "monomials", "dim_U", "alpha", "beta", "other"], r)) for r in census]}
    text = "layer sizes by degree\n" + _table(["layer"] + [str(e) for e in range(1, alg.cap + 1)], layer_rows)
    text += "\n\nstandard monomials\n" + _table(["degree", "monomials", "dim U", "S_alpha", "S_beta", "other"],
                                                census)
    _emit(args, doc, text)
    return EXIT_OK


def _report_text(alg, report, selection=None):
    lines = [f"{report.kind}: verdict {report.verdict} (exit {report.exit_code})"]
    lines.append("preconditions:")
    for name, ok, detail in report.preconditions:
        lines.append(f"  [{'ok' if ok else 'FAIL'}] {name}" + (f": {detail}" if detail else ""))
    if report.position:
        lines.append(f"relator position: {report.position['member']}"
                     + (" (at the end of the chain)" if report.position["at_end"] else ""))
    if report.hypothesis:
        h = report.hypothesis
        lines.append(f"hypothesis r not in H + {h['member']}: {'holds' if h['holds'] else 'fails'}")
        if "h_component" in h:
            lines.append(f"  H-component of r: {h['h_component']}")
    if selection is not None:
        d = selection.to_dict(alg)
        lines.append(f"ranks t_k: {d['ranks']}  first nonzero level: {d['first_level']}")
        lines.append(f"selected columns I_s: {d['selected']}  J: {d['complement']}  |J| >= n-m: {d['size_ok']}")
        for k, led in enumerate(d["ledgers"]):
            if led:
                lines.append(f"  ledger level {k}: " + ", ".join(
                    f"{op['kind']}({op['i']}" + (f",{op['j']}" if 'j' in op else "")
                    + (f", {op['q']}" if 'q' in op else "") + ")" for op in led))
    if report.h_summands:
        lines.append(f"H = free sum of {', '.join(report.h_summands)}")
    if report.members:
        rows = []
        for m in report.members:
            rows.append([label_text(m.label), m.lhs_dims, m.rhs_dims, "equal" if m.equal else "unequal",
                         "agree" if m.agree else "DISAGREE",
                         alg.lie_text(m.witness) if m.witness is not None else ""])
        lines.append(_table(["member", "H∩(R+N_kl)", "H∩N_kl", "verdict", "double check", "witness"], rows))
    for nm, prop in report.propositions.items():
        lines.append(f"{nm}: premise {prop['premise']}, conclusion {prop['conclusion']}, "
                     f"consistent {prop['consistent']}")
    if report.witness is not None:
        lines.append(f"witness: {alg.lie_text(report.witness)}")
    for note in report.notes:
        lines.append(f"note: {note}")
    return "\n".join(lines)


def cmd_verify_theorem1(args):
    s = Session(args)
    rels = s.relators()
    if len(rels) != 1:
        raise InputError("verify-theorem1 takes exactly one relator")
    report = verify_one_relator(s.alg, s.N, s.signature, s.element(rels[0]), s.h_sources())
    _emit(args, report.to_dict(s.alg), _report_text(s.alg, report))
    return report.exit_code


def cmd_verify_theorem2(args):
    s = Session(args)
    rels = [s.element(t) for t in s.relators()]
    selection, report = verify_many_relators(s.alg, s.N, s.signature, rels, assert_solvable=args.assert_solvable,
                                             ore_bound=args.ore_bound, exhaustive=args.exhaustive)
    doc = {"selection": selection.to_dict(s.alg) if selection is not None else None,
           "verification": report.to_dict(s.alg)}
    _emit(args, doc, _report_text(s.alg, report, selection))
    return report.exit_code


def cmd_triangularize(args):
    s = Session(args)
    alg = s.alg
    rels = [s.element(t) for t in s.relators()]
    level = args.level
    if not 0 <= level <= len(s.signature):
        raise InputError(f"level must be between 0 and {len(s.signature)}")
    R = lie_ideal_closure(alg, rels)
    ctx = level_context_for(alg, s.chain, R, level)
    M = jacobian_matrix(alg, rels)
    Mk = OreMatrix(M.entries, ctx)
    try:
        tri = triangularize(Mk, prefix=0, degree_bound=args.ore_bound)
    except OreExhausted as exc:
        doc = {"context": ctx.to_dict(), "inconclusive": str(exc), "position": exc.position}
        _emit(args, doc, f"inconclusive: {exc} at position {exc.position}")
        return EXIT_INCONCLUSIVE
    except (TriangularizationError, FiltrationExhausted) as exc:
        _emit(args, {"context": ctx.to_dict(), "inconclusive": str(exc)}, f"inconclusive: {exc}")
        return EXIT_INCONCLUSIVE
    ok, rank, _ = check_triangular(tri)
    replay_ok = tri.replay().same_entries(tri)
    doc = {"context": ctx.to_dict(), "input": Mk.to_lists(), "output": tri.to_lists(), "rank": rank,
           "ledger": [op.to_dict(alg) for op in tri.ledger], "replay": replay_ok,
           "columns": [alg.source_names[j] for j in tri.perm]}
    text = [f"context {ctx.name}", "input:"]
    text += ["  " + " | ".join(r) for r in Mk.to_lists()]
    text += [f"triangular of rank {rank} (columns {', '.join(doc['columns'])}):"]
    text += ["  " + " | ".join(r) for r in tri.to_lists()]
    text += ["ledger:"] + [f"  {op.to_dict(alg)}" for op in tri.ledger]
    text += [f"ledger replay: {'ok' if replay_ok else 'FAILED'}"]
    _emit(args, doc, "\n".join(text))
    return EXIT_OK if ok and replay_ok else EXIT_FAILS


COMMANDS = {
    "validate": cmd_validate,
    "dims": cmd_dims,
    "fox": cmd_fox,
    "membership": cmd_membership,
    "standard-basis": cmd_standard_basis,
    "verify-theorem1": cmd_verify_theorem1,
    "verify-theorem2": cmd_verify_theorem2,
    "triangularize": cmd_triangularize,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", required=True, help="presentation file (JSON)")
    common.add_argument("--cap", type=int, help="degree cap (overrides the file)")
    common.add_argument("--series", help="series signature m1,m2,... (overrides the file)")
    common.add_argument("--relator", action="append", help="relator expression (repeatable)")
    common.add_argument("--h-summands", help="comma separated summand names spanning H")
    common.add_argument("--format", choices=["table", "machine"], default="table")
    common.add_argument("--ore-bound", type=int, help="degree bound for Ore pair searches")

    parser = argparse.ArgumentParser(prog="freesum", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="check a presentation")
    sub.add_parser("dims", parents=[common], help="dimension table of F, N and the chain")
    p = sub.add_parser("fox", parents=[common], help="Fox derivatives of an element")
    p.add_argument("expr")
    p = sub.add_parser("membership", parents=[common], help="membership of an element in a subspace")
    p.add_argument("expr")
    p.add_argument("subspace")
    sub.add_parser("standard-basis", parents=[common], help="adapted standard basis census")
    sub.add_parser("verify-theorem1", parents=[common], help="one-relator freedom verdicts")
    p = sub.add_parser("verify-theorem2", parents=[common], help="several-relator freedom verdicts")
    p.add_argument("--assert-solvable", action="store_true", help="assert that F/N is solvable")
    p.add_argument("--exhaustive", action="store_true", help="also test every admissible index set J")
    p = sub.add_parser("triangularize", parents=[common], help="triangularize the Jacobian at one level")
    p.add_argument("--level", type=int, default=0, help="quotient level k (0 is U(F/N))")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except KeyError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
