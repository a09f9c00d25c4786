"""Parser and serializer for the rule line language and the case syntaxes.

Grammar (keywords case-insensitive, identifiers lowercase-ish alphanumerics
plus underscore):

    rule  := "RULE" id ":" "IF" cond ("AND" cond)* "THEN" cond exp? origin?
    exp   := "[exp=" uint ("+" uint)? "]"          -- support, optional firings
    origin:= "[origin=" ident "]"                  -- omitted for authored rules
    cond  := ident "=" ident

Cases come in a native form and in the Prolog clause form used by legacy
case files:

    CASE 1 positive: symptoms=no, jaundice=no, ...
    hepatitis(1,positive,[symptoms=no,jaundice=no,...]).

Prolog directives (`:- ...`) are recognized and skipped. Serialization is
canonical: premises and observations sorted by attribute name, single
spaces, uppercase keywords; parse of a serialized value reproduces it.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Optional

from .model import AttributeDef, CaseRecord, ExperienceStats, Fact, Rule


@dataclass(frozen=True)
class SourceSpan:
    line: int
    col_start: int
    col_end: int

    def __post_init__(self) -> None:
        if self.col_start > self.col_end:
            raise ValueError("span start after end")


@dataclass(frozen=True)
class ParseDiagnostic:
    span: SourceSpan
    message: str
    severity: str = "error"

    def __str__(self) -> str:
        return f"{self.span.line}:{self.span.col_start}: {self.severity}: {self.message}"


class ParseError(ValueError):
    """Raised on malformed input; carries a diagnostic with a source span."""

    def __init__(self, diagnostic: ParseDiagnostic):
        super().__init__(str(diagnostic))
        self.diagnostic = diagnostic


def _err(message: str, line: int, col: int, end: Optional[int] = None) -> ParseError:
    return ParseError(ParseDiagnostic(SourceSpan(line, col, end if end is not None else col), message))


_TOKEN = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*|\d+|[=:,.()\[\]+])")


class _Scanner:
    """Single-line tokenizer keeping column positions for diagnostics."""

    def __init__(self, text: str, line: int = 1):
        self.text = text
        self.line = line
        self.pos = 0

    def peek(self) -> Optional[str]:
        save = self.pos
        tok = self.next()
        self.pos = save
        return tok

    def next(self) -> Optional[str]:
        if self.text[self.pos:].strip() == "":
            self.pos = len(self.text)
            return None
        m = _TOKEN.match(self.text, self.pos)
        if not m:
            raise _err(f"unexpected character {self.text[self.pos]!r}", self.line, self.pos + 1)
        self.pos = m.end()
        return m.group(1)

    def expect(self, token: str, what: str = "") -> str:
        got = self.next()
        if got is None or got.lower() != token.lower():
            raise _err(f"expected {what or token!r}, got {got!r}", self.line, self.pos + 1)
        return got

    def ident(self, what: str) -> str:
        got = self.next()
        if got is None or not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", got):
            raise _err(f"expected {what}, got {got!r}", self.line, self.pos + 1)
        return got

    def uint(self, what: str) -> int:
        got = self.next()
        if got is None or not got.isdigit():
            raise _err(f"expected {what}, got {got!r}", self.line, self.pos + 1)
        return int(got)

    def done(self) -> None:
        tok = self.next()
        if tok is not None:
            raise _err(f"trailing input {tok!r}", self.line, self.pos + 1)


def _condition(scan: _Scanner) -> Fact:
    attr = scan.ident("attribute name")
    scan.expect("=")
    value = scan.ident("value")
    return Fact(attr.lower(), value.lower())


def _check_schema(fact: Fact, schema: Optional[Iterable[AttributeDef]], line: int,
                  diagnostics: Optional[list[ParseDiagnostic]], *,
                  unknown_is_error: bool = False) -> None:
    if schema is None:
        return
    attr = next((a for a in schema if a.name == fact.attribute), None)
    if attr is None:
        # Unknown attributes in rules warn; schema extension is the loader's
        # call, not the parser's. Cases must match the schema, so they error.
        diag = ParseDiagnostic(SourceSpan(line, 1, 1),
                               f"unknown attribute {fact.attribute!r}",
                               severity="error" if unknown_is_error else "warning")
        if unknown_is_error:
            raise ParseError(diag)
        if diagnostics is not None:
            diagnostics.append(diag)
    elif not attr.allows(fact.value):
        raise ParseError(ParseDiagnostic(SourceSpan(line, 1, 1),
                                         f"value {fact.value!r} outside domain of {fact.attribute}"))


def parse_rule(text: str, schema: Optional[Iterable[AttributeDef]] = None, *,
               line: int = 1,
               diagnostics: Optional[list[ParseDiagnostic]] = None) -> Rule:
    """Parse one rule line. Premises keep written order; stats are zero
    unless an [exp=...] annotation is present."""
    scan = _Scanner(text, line)
    scan.expect("RULE")
    rule_id = scan.ident("rule id").lower()
    scan.expect(":")
    scan.expect("IF")
    premises = [_condition(scan)]
    while scan.peek() is not None and scan.peek().lower() == "and":
        scan.next()
        premises.append(_condition(scan))
    scan.expect("THEN")
    conclusion = _condition(scan)

    support = firings = 0
    origin = "authored"
    while scan.peek() == "[":
        scan.next()
        key = scan.ident("annotation key").lower()
        scan.expect("=")
        if key == "exp":
            support = scan.uint("experience count")
            if scan.peek() == "+":
                scan.next()
                firings = scan.uint("firing count")
        elif key == "origin":
            origin = scan.ident("origin").lower()
        else:
            raise _err(f"unknown annotation {key!r}", line, scan.pos)
        scan.expect("]")
    scan.done()

    for fact in premises + [conclusion]:
        _check_schema(fact, schema, line, diagnostics)
    try:
        return Rule(rule_id, tuple(premises), conclusion,
                    ExperienceStats(support, firings), origin)
    except ValueError as exc:
        raise _err(str(exc), line, 1) from exc


def serialize_rule(rule: Rule) -> str:
    """Canonical rule text: premises sorted by attribute name; experience
    annotation only when non-zero; origin annotation only when not authored."""
    premises = " AND ".join(str(p) for p in sorted(rule.premises, key=lambda p: p.attribute))
    text = f"RULE {rule.id}: IF {premises} THEN {rule.conclusion}"
    if rule.stats.firings:
        text += f" [exp={rule.stats.support}+{rule.stats.firings}]"
    elif rule.stats.support:
        text += f" [exp={rule.stats.support}]"
    if rule.origin != "authored":
        text += f" [origin={rule.origin}]"
    return text


def _observations(scan: _Scanner, sep: str) -> list[Fact]:
    obs = [_condition(scan)]
    while scan.peek() == sep:
        scan.next()
        obs.append(_condition(scan))
    return obs


def parse_case(text: str, schema: Optional[Iterable[AttributeDef]] = None, *,
               goal_attribute: str = "hbv", line: int = 1,
               required_attributes: Optional[Iterable[str]] = None) -> Optional[CaseRecord]:
    """Parse one case in either syntax; directives yield None.

    A schema makes unknown attributes and out-of-domain values errors;
    `required_attributes` additionally demands exactly that observation set.
    """
    stripped = text.strip()
    if stripped.startswith(":-"):
        return None
    scan = _Scanner(text, line)
    first = scan.peek()
    if first is None:
        raise _err("empty case line", line, 1)

    if first.lower() == "case":
        scan.next()
        case_id = scan.uint("case id")
        label_value = scan.ident("label").lower()
        scan.expect(":")
        obs = _observations(scan, ",")
        scan.done()
    else:
        scan.ident("clause functor")
        scan.expect("(")
        case_id = scan.uint("case id")
        scan.expect(",")
        label_value = scan.ident("label").lower()
        scan.expect(",")
        scan.expect("[")
        obs = _observations(scan, ",")
        scan.expect("]")
        scan.expect(")")
        scan.expect(".")
        scan.done()

    if required_attributes is not None:
        want = set(required_attributes)
        got = {o.attribute for o in obs}
        missing = want - got
        if missing:
            raise _err(f"case {case_id}: missing attribute(s) {sorted(missing)}", line, 1)
        extra = got - want
        if extra:
            raise _err(f"case {case_id}: unexpected attribute(s) {sorted(extra)}", line, 1)
    if schema is not None:
        for fact in obs:
            _check_schema(fact, schema, line, None, unknown_is_error=True)
        goal = next((a for a in schema if a.name == goal_attribute), None)
        if goal is not None and not goal.allows(label_value):
            raise _err(f"case {case_id}: label {label_value!r} outside goal domain", line, 1)

    try:
        return CaseRecord(case_id, Fact(goal_attribute, label_value), tuple(obs))
    except ValueError as exc:
        raise _err(str(exc), line, 1) from exc


def serialize_case(case: CaseRecord) -> str:
    obs = ", ".join(str(o) for o in sorted(case.observations, key=lambda o: o.attribute))
    return f"CASE {case.id} {case.label.value}: {obs}"


def format_experience_report(tree) -> str:
    """Render an induced tree as the experience indicator text.

    One attribute=value line per branch, children indented two spaces under
    their parent branch line. A branch ending in a leaf is annotated
    ` => label/count`; single-support leaves are bracketed ` => [label/1]`.
    Count-zero leaves (empty branches filled with the parent majority) are
    left out.
    """
    from .induction import Leaf, Split

    lines: list[str] = []

    def leaf_suffix(leaf: Leaf) -> str:
        body = f"{leaf.label}/{leaf.count}"
        return f" => [{body}]" if leaf.count == 1 else f" => {body}"

    def walk(node, prefix: str, depth: int) -> None:
        indent = "  " * depth
        if isinstance(node, Leaf):
            lines.append(f"{indent}{prefix}{leaf_suffix(node)}")
            return
        assert isinstance(node, Split)
        if prefix:
            lines.append(f"{indent}{prefix}")
            depth += 1
        for value, child in node.branches:
            if isinstance(child, Leaf) and child.count == 0:
                continue
            walk(child, f"{node.attribute}={value}", depth)

    walk(tree, "", 0)
    return "\n".join(lines) + "\n"
