"""Problem instances: graded summands, free generators, the ideal, the series.

Presentations are read from JSON-shaped dictionaries.  Validation never
raises; it returns a list of diagnostics so that every problem in a file can
be reported at once.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from pathlib import Path

from .core_linear import Field


class InputError(ValueError):
    """A presentation or expression that cannot be used as given."""


# ---------------------------------------------------------------------------
# Lie expressions


@dataclass(frozen=True)
class Gen:
    name: str


@dataclass(frozen=True)
class Bracket:
    left: object
    right: object


@dataclass(frozen=True)
class Scaled:
    coef: Fraction
    expr: object


@dataclass(frozen=True)
class Sum:
    terms: tuple


class ExprSyntaxError(InputError):
    def __init__(self, message: str, offset: int, text: str):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.text = text


_TOKEN = re.compile(r"\s*(?:(?P<name>[A-Za-z_][A-Za-z0-9_']*)|(?P<int>\d+)|(?P<op>[-+*/\[\],]))")


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            stripped = len(text) - len(text[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {text[stripped]!r}", stripped, text)
        kind = m.lastgroup
        start = m.start(kind)
        out.append((kind, m.group(kind), start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, names):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.names = names

    def peek(self):
        return self.tokens[self.i]

    def take(self, value=None, kind=None):
        tok = self.tokens[self.i]
        if (value is not None and tok[1] != value) or (kind is not None and tok[0] != kind):
            want = repr(value) if value is not None else kind
            got = "end of input" if tok[0] == "end" else repr(tok[1])
            raise ExprSyntaxError(f"expected {want}, found {got}", tok[2], self.text)
        self.i += 1
        return tok

    def parse(self):
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ExprSyntaxError(f"unexpected {tok[1]!r}", tok[2], self.text)
        return e

    def expr(self):
        terms = []
        sign = 1
        tok = self.peek()
        if tok[1] in "+-" and tok[0] == "op":
            self.take()
            sign = -1 if tok[1] == "-" else 1
        terms.append(self.term(sign))
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            sign = -1 if self.take()[1] == "-" else 1
            terms.append(self.term(sign))
        if len(terms) == 1:
            return terms[0]
        return Sum(tuple(terms))

    def term(self, sign):
        coef = None
        tok = self.peek()
        if tok[0] == "int":
            num = int(self.take()[1])
            den = 1
            if self.peek()[1] == "/":
                self.take("/")
                dt = self.take(kind="int")
                den = int(dt[1])
                if den == 0:
                    raise ExprSyntaxError("zero denominator", dt[2], self.text)
            self.take("*")
            coef = Fraction(num, den)
        atom = self.atom()
        if coef is None and sign == 1:
            return atom
        return Scaled(sign * (coef if coef is not None else Fraction(1)), atom)

    def atom(self):
        tok = self.peek()
        if tok[0] == "name":
            self.take()
            if self.names is not None and tok[1] not in self.names:
                raise InputError(f"unknown generator {tok[1]!r} at offset {tok[2]}")
            return Gen(tok[1])
        if tok[1] == "[":
            self.take("[")
            left = self.expr()
            self.take(",")
            right = self.expr()
            self.take("]")
            return Bracket(left, right)
        got = "end of input" if tok[0] == "end" else repr(tok[1])
        raise ExprSyntaxError(f"expected a name or '[', found {got}", tok[2], self.text)


def parse_lie_expr(text: str, names=None):
    """Parse ``text`` in the bracket grammar; ``names`` restricts the leaves."""
    return _Parser(text, None if names is None else set(names)).parse()


def _coef_text(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _flatten(e, scale=Fraction(1)):
    """Expression as a list of (coefficient, atom) pairs, coefficients multiplied through."""
    if isinstance(e, Sum):
        out = []
        for t in e.terms:
            out.extend(_flatten(t, scale))
        return out
    if isinstance(e, Scaled):
        return _flatten(e.expr, scale * Fraction(e.coef))
    return [(scale, e)]


def format_lie_expr(e) -> str:
    """Print an expression so that :func:`parse_lie_expr` reads it back."""
    pieces = []
    for coef, atom in _flatten(e):
        if coef == 0:
            continue
        body = _atom_text(atom)
        mag = abs(coef)
        text = body if mag == 1 else f"{_coef_text(mag)}*{body}"
        if not pieces:
            pieces.append(("-" if coef < 0 else "") + text)
        else:
            pieces.append(("- " if coef < 0 else "+ ") + text)
    if not pieces:
        raise ValueError("cannot print the empty expression")
    return " ".join(pieces)


def _atom_text(atom) -> str:
    if isinstance(atom, Gen):
        return atom.name
    if isinstance(atom, Bracket):
        return f"[{format_lie_expr(atom.left)},{format_lie_expr(atom.right)}]"
    raise TypeError(f"not an atom: {atom!r}")


def expr_names(e) -> set[str]:
    if isinstance(e, Gen):
        return {e.name}
    if isinstance(e, Bracket):
        return expr_names(e.left) | expr_names(e.right)
    if isinstance(e, Scaled):
        return expr_names(e.expr)
    return set().union(*(expr_names(t) for t in e.terms)) if e.terms else set()


# ---------------------------------------------------------------------------
# presentation data


@dataclass
class SummandSpec:
    name: str
    dim: int
    weights: list[int]
    basis: list[str]
    # structure constants, antisymmetrically completed: (i, j) -> {k: coef}
    brackets: dict = dc_field(default_factory=dict)


@dataclass
class FreeGenerator:
    name: str
    weight: int


@dataclass
class IdealSpec:
    kind: str  # "cartesian" or "explicit"
    generators: list[str] = dc_field(default_factory=list)


@dataclass
class Presentation:
    field: Field
    summands: list[SummandSpec]
    free_generators: list[FreeGenerator]
    cap: int
    ideal: IdealSpec
    series: list[int]
    relators: list[str]
    diagnostics: list = dc_field(default_factory=list)

    def generator_names(self) -> list[str]:
        names = [b for s in self.summands for b in s.basis]
        return names + [g.name for g in self.free_generators]

    def source_names(self) -> list[str]:
        return [s.name for s in self.summands] + [g.name for g in self.free_generators]


@dataclass
class Diagnostic:
    kind: str
    message: str
    where: tuple = ()

    def to_dict(self):
        return {"kind": self.kind, "message": self.message, "where": list(self.where)}


@dataclass
class ValidationReport:
    diagnostics: list

    @property
    def ok(self) -> bool:
        return not self.diagnostics

    def kinds(self) -> set[str]:
        return {d.kind for d in self.diagnostics}

    def to_dict(self):
        return {"ok": self.ok, "diagnostics": [d.to_dict() for d in self.diagnostics]}


def _as_int(value, what, diags, where=()):
    if isinstance(value, bool) or not isinstance(value, int):
        diags.append(Diagnostic("format", f"{what} must be an integer, got {value!r}", where))
        return None
    return value


def _parse_summand(raw, pos, field, diags):
    where = (pos,)
    if not isinstance(raw, dict):
        diags.append(Diagnostic("format", f"summand {pos} is not an object", where))
        return None
    name = str(raw.get("name", f"A{pos + 1}"))
    dim = _as_int(raw.get("dim"), f"summand {name} dim", diags, where)
    if dim is None or dim < 1:
        if dim is not None:
            diags.append(Diagnostic("format", f"summand {name} must have positive dimension", where))
        return None
    weights = raw.get("weights", [1] * dim)
    if not isinstance(weights, list) or len(weights) != dim:
        diags.append(Diagnostic("format", f"summand {name} needs {dim} weights", where))
        weights = [1] * dim
    clean = []
    for i, w in enumerate(weights):
        w = _as_int(w, f"weight of basis vector {i} in {name}", diags, where)
        if w is not None and w < 1:
            diags.append(Diagnostic("grading", f"weight of basis vector {i} in {name} is not positive", (pos, i)))
        clean.append(w if w is not None and w >= 1 else 1)
    basis = raw.get("basis")
    if basis is None:
        basis = [name.lower()] if dim == 1 else [f"{name.lower()}{i + 1}" for i in range(dim)]
    basis = [str(b) for b in basis]
    if len(basis) != dim:
        diags.append(Diagnostic("format", f"summand {name} lists {len(basis)} basis names for dimension {dim}", where))
        basis = (basis + [f"{name.lower()}_{i}" for i in range(dim)])[:dim]
    spec = SummandSpec(name, dim, clean, basis)
    entries = raw.get("brackets", [])
    if not isinstance(entries, list):
        diags.append(Diagnostic("format", f"brackets of {name} must be a list", where))
        return spec
    base = raw.get("index_base")
    int_indices = [x for e in entries if isinstance(e, list) for x in e[:3] if isinstance(x, int) and not isinstance(x, bool)]
    if base is None:
        # 1-based files are recognised by using the index ``dim`` and never 0
        base = 1 if int_indices and 0 not in int_indices and dim in int_indices else 0
    given = {}

    def index_of(x, slot, e_pos):
        if isinstance(x, str) and x in basis:
            return basis.index(x)
        if isinstance(x, int) and not isinstance(x, bool) and 0 <= x - base < dim:
            return x - base
        diags.append(Diagnostic("format", f"bracket {e_pos} of {name}: bad index {x!r} in slot {slot}", (pos, e_pos)))
        return None

    for e_pos, e in enumerate(entries):
        if not isinstance(e, list) or len(e) not in (3, 4):
            diags.append(Diagnostic("format", f"bracket {e_pos} of {name} must be [i, j, k, coef]", (pos, e_pos)))
            continue
        i, j, k = (index_of(e[s], s, e_pos) for s in range(3))
        if None in (i, j, k):
            continue
        try:
            c = field(e[3] if len(e) == 4 else 1)
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            diags.append(Diagnostic("format", f"bracket {e_pos} of {name}: bad coefficient ({exc})", (pos, e_pos)))
            continue
        if c == 0:
            continue
        key = (i, j, k)
        given[key] = given.get(key, field.zero) + c
    for (i, j, k), c in given.items():
        if i == j and c != 0:
            diags.append(Diagnostic("antisymmetry", f"{name}: [{basis[i]},{basis[i]}] has nonzero {basis[k]} coefficient", (pos, i, i, k)))
            continue
        partner = given.get((j, i, k))
        if partner is not None and partner != -c:
            if i < j:
                diags.append(Diagnostic(
                    "antisymmetry",
                    f"{name}: c[{basis[i]},{basis[j]}]^{basis[k]} = {field.to_text(c)} but "
                    f"c[{basis[j]},{basis[i]}]^{basis[k]} = {field.to_text(partner)}",
                    (pos, i, j, k)))
            continue
        if c != 0:
            spec.brackets.setdefault((i, j), {})[k] = c
            spec.brackets.setdefault((j, i), {})[k] = -c
        if clean[k] != clean[i] + clean[j]:
            if (j, i, k) not in given or i < j:
                diags.append(Diagnostic(
                    "grading",
                    f"{name}: w({basis[k]}) = {clean[k]} but w({basis[i]}) + w({basis[j]}) = {clean[i] + clean[j]}",
                    (pos, i, j, k)))
    return spec


def _jacobi_violations(spec: SummandSpec, field: Field, pos: int, diags):
    def br(x, y):
        out = {}
        for k1, c1 in x.items():
            for k2, c2 in y.items():
                for k, c in spec.brackets.get((k1, k2), {}).items():
                    out[k] = out.get(k, field.zero) + c1 * c2 * c
        return {k: c for k, c in out.items() if c != 0}

    def add(*vs):
        out = {}
        for v in vs:
            for k, c in v.items():
                out[k] = out.get(k, field.zero) + c
        return {k: c for k, c in out.items() if c != 0}

    n = spec.dim
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                x, y, z = {i: field.one}, {j: field.one}, {k: field.one}
                total = add(br(br(x, y), z), br(br(y, z), x), br(br(z, x), y))
                if total:
                    b = spec.basis
                    diags.append(Diagnostic("jacobi", f"{spec.name}: Jacobi fails on ({b[i]},{b[j]},{b[k]})", (pos, i, j, k)))


def presentation_from_dict(raw: dict, cap: int | None = None) -> Presentation:
    """Build a presentation, collecting diagnostics instead of raising."""
    diags = []
    if not isinstance(raw, dict):
        raise InputError("presentation must be a JSON object")
    try:
        fld = Field.from_spec(raw.get("field"))
    except (ValueError, TypeError) as exc:
        diags.append(Diagnostic("field", str(exc)))
        fld = Field()
    summands = []
    for pos, s in enumerate(raw.get("summands", []) or []):
        spec = _parse_summand(s, pos, fld, diags)
        if spec is not None:
            summands.append(spec)
    frees = []
    for pos, g in enumerate(raw.get("free_generators", []) or []):
        if not isinstance(g, dict) or "name" not in g:
            diags.append(Diagnostic("format", f"free generator {pos} needs a name", (pos,)))
            continue
        w = _as_int(g.get("weight", 1), f"weight of {g['name']}", diags, (pos,))
        if w is not None and w < 1:
            diags.append(Diagnostic("grading", f"weight of {g['name']} is not positive", (pos,)))
        frees.append(FreeGenerator(str(g["name"]), w if w is not None and w >= 1 else 1))
    file_cap = raw.get("cap", 6)
    cap = file_cap if cap is None else cap
    cap_ok = _as_int(cap, "cap", diags)
    if cap_ok is None or cap_ok < 1:
        if cap_ok is not None:
            diags.append(Diagnostic("format", "cap must be positive"))
        cap_ok = 1
    ideal_raw = raw.get("ideal", {"kind": "cartesian"}) or {"kind": "cartesian"}
    kind = ideal_raw.get("kind", "cartesian") if isinstance(ideal_raw, dict) else None
    if kind == "explicit":
        ideal = IdealSpec("explicit", [str(x) for x in ideal_raw.get("generators", [])])
    elif kind == "cartesian":
        ideal = IdealSpec("cartesian")
    else:
        diags.append(Diagnostic("format", f"unknown ideal kind {kind!r}"))
        ideal = IdealSpec("cartesian")
    series = raw.get("series", [1])
    if not isinstance(series, list) or not series:
        diags.append(Diagnostic("format", "series must be a nonempty list of positive integers"))
        series = [1]
    for m in series:
        if isinstance(m, bool) or not isinstance(m, int) or m < 1:
            diags.append(Diagnostic("format", f"series entry {m!r} is not a positive integer"))
    relators = [str(r) for r in raw.get("relators", []) or []]
    pres = Presentation(fld, summands, frees, cap_ok, ideal, series, relators, diags)
    return pres


def load_presentation(source, cap: int | None = None) -> Presentation:
    """Read a presentation from a path, a JSON string or a dictionary."""
    if isinstance(source, dict):
        return presentation_from_dict(source, cap)
    text = None
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise InputError(f"cannot read {source}: {exc}") from exc
    else:
        text = source
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc}") from exc
    return presentation_from_dict(raw, cap)


def validate_presentation(p: Presentation) -> ValidationReport:
    """All standing-hypothesis checks on the presentation itself."""
    diags = list(p.diagnostics)
    names = p.generator_names()
    seen = set()
    for nm in names:
        if nm in seen:
            diags.append(Diagnostic("names", f"generator name {nm!r} is used twice"))
        seen.add(nm)
    srcs = [s.name for s in p.summands]
    if len(set(srcs)) != len(srcs):
        diags.append(Diagnostic("names", "summand names are not unique"))
    if not p.summands and not p.free_generators:
        diags.append(Diagnostic("format", "presentation has no summands and no free generators"))
    for pos, s in enumerate(p.summands):
        for i, w in enumerate(s.weights):
            if w > p.cap:
                diags.append(Diagnostic("cap", f"weight of {s.basis[i]} exceeds the cap {p.cap}", (pos, i)))
        _jacobi_violations(s, p.field, pos, diags)
    for g in p.free_generators:
        if g.weight > p.cap:
            diags.append(Diagnostic("cap", f"weight of {g.name} exceeds the cap {p.cap}"))
    for text in p.ideal.generators + p.relators:
        try:
            parse_lie_expr(text, names)
        except InputError as exc:
            diags.append(Diagnostic("expression", f"{text!r}: {exc}"))
    return ValidationReport(diags)


def check_elementary_invariance(algebra, ideal):
    """Check that killing any one summand maps the ideal into itself.

    Returns ``(True, None)`` or ``(False, (summand_name, element))`` where the
    element is the image of a basis vector of the ideal that falls outside it.
    """
    from .subspace_calculus import kill_sources_image

    for s in range(algebra.n_sources):
        if s >= algebra.n_summands:
            continue
        image = kill_sources_image(algebra, ideal, {s})
        bad = algebra.first_outside(image, ideal)
        if bad is not None:
            return False, (algebra.source_names[s], bad)
    return True, None
