"""Knowledge-base persistence: a sectioned, line-oriented text format.

A `.kb` file is UTF-8 with LF endings, a `kbv1` version line, then the five
sections in fixed order:

    kbv1
    @schema    ATTR name: value, value [askable, goal]
    @cases     CASE 3 negative: jaundice=yes, ...
    @rules     RULE hcv1: IF antihcv=reactive THEN hcv=positive
    @advice    ADVICE hbv=positive: free text to end of line
    @audit     AUDIT <ts> <actor>[=who] <action> [ids] <payload>

Saves are atomic (temp file + rename); a failed write never damages the
previous file. The audit section is append-only and replayable: applying it
to the authored rules reconstructs the stored rule list.
"""

from __future__ import annotations

import os
import re
import tempfile
import threading
from dataclasses import replace as _replace
from typing import Callable, Iterable, Optional

from .model import (AttributeDef, AuditEntry, CaseRecord, ExperienceStats,
                    Fact, KnowledgeBase, Rule)
from .rulelang import (ParseDiagnostic, ParseError, SourceSpan, parse_case,
                       parse_rule, serialize_case, serialize_rule)

VERSION = "kbv1"
SECTIONS = ("@schema", "@cases", "@rules", "@advice", "@audit")

_ATTR_LINE = re.compile(
    r"^ATTR\s+([A-Za-z_][A-Za-z0-9_]*)\s*:\s*([^\[]+?)\s*(?:\[([^\]]*)\])?$")
_ADVICE_LINE = re.compile(
    r"^ADVICE\s+([A-Za-z_][A-Za-z0-9_]*)=([A-Za-z_][A-Za-z0-9_]*)\s*:\s?(.*)$")
_AUDIT_LINE = re.compile(
    r"^AUDIT\s+(\S+)\s+(\S+)\s+(\S+)\s+\[([^\]]*)\](?:\s(.*))?$")


class KbLoadError(ValueError):
    def __init__(self, message: str, line: int = 0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


def _fail(message: str, line: int) -> KbLoadError:
    return KbLoadError(message, line)


def loads(text: str) -> KnowledgeBase:
    """Parse a knowledge base from its file text."""
    lines = text.split("\n")
    content = [(i + 1, ln.rstrip()) for i, ln in enumerate(lines) if ln.strip()]
    if not content:
        raise KbLoadError("empty knowledge-base file")
    first_no, first = content[0]
    if first != VERSION:
        raise _fail(f"unsupported version {first!r}, expected {VERSION!r}", first_no)

    section: Optional[str] = None
    seen: list[str] = []
    schema: list[AttributeDef] = []
    goal: Optional[str] = None
    cases: list[CaseRecord] = []
    rule_lines: list[tuple[int, str]] = []
    advice: list[tuple[Fact, str]] = []
    audit: list[AuditEntry] = []

    for line_no, line in content[1:]:
        if line.startswith("@"):
            if line not in SECTIONS:
                raise _fail(f"unknown section {line!r}", line_no)
            if line in seen:
                raise _fail(f"duplicate section {line!r}", line_no)
            if seen and SECTIONS.index(line) < SECTIONS.index(seen[-1]):
                raise _fail(f"section {line!r} out of order", line_no)
            seen.append(line)
            section = line
            continue
        if section == "@schema":
            m = _ATTR_LINE.match(line)
            if not m:
                raise _fail(f"bad attribute line: {line!r}", line_no)
            name = m.group(1).lower()
            domain = tuple(v.strip().lower() for v in m.group(2).split(","))
            flags = {f.strip().lower() for f in (m.group(3) or "").split(",") if f.strip()}
            unknown = flags - {"askable", "goal"}
            if unknown:
                raise _fail(f"unknown attribute flag(s) {sorted(unknown)}", line_no)
            try:
                schema.append(AttributeDef(name, domain, askable="askable" in flags))
            except ValueError as exc:
                raise _fail(str(exc), line_no) from exc
            if "goal" in flags:
                if goal is not None:
                    raise _fail("more than one goal attribute", line_no)
                goal = name
        elif section == "@cases":
            if goal is None:
                raise _fail("cases before a goal attribute", line_no)
            try:
                record = parse_case(line, schema, goal_attribute=goal, line=line_no)
            except ParseError as exc:
                raise _fail(str(exc), line_no) from exc
            if record is not None:
                cases.append(record)
        elif section == "@rules":
            rule_lines.append((line_no, line))
        elif section == "@advice":
            m = _ADVICE_LINE.match(line)
            if not m:
                raise _fail(f"bad advice line: {line!r}", line_no)
            advice.append((Fact(m.group(1).lower(), m.group(2).lower()), m.group(3)))
        elif section == "@audit":
            m = _AUDIT_LINE.match(line)
            if not m:
                raise _fail(f"bad audit line: {line!r}", line_no)
            actor, _, note = m.group(2).partition("=")
            ids = tuple(i for i in m.group(4).split(",") if i)
            try:
                audit.append(AuditEntry(m.group(1), actor, m.group(3), ids,
                                        m.group(5) or "", note=note))
            except ValueError as exc:
                raise _fail(str(exc), line_no) from exc
        else:
            raise _fail(f"content before any section: {line!r}", line_no)

    if goal is None:
        raise KbLoadError("no attribute flagged [goal]")
    if cases:
        shape = {o.attribute for o in cases[0].observations}
        for case in cases[1:]:
            got = {o.attribute for o in case.observations}
            if got != shape:
                raise KbLoadError(
                    f"case {case.id} observes {sorted(got)} but case "
                    f"{cases[0].id} observes {sorted(shape)}")

    rules: list[Rule] = []
    for line_no, line in rule_lines:
        try:
            rules.append(parse_rule(line, schema, line=line_no))
        except ParseError as exc:
            raise _fail(str(exc), line_no) from exc

    try:
        return KnowledgeBase(tuple(schema), goal, tuple(rules), tuple(cases),
                             tuple(advice), tuple(audit))
    except ValueError as exc:
        raise KbLoadError(str(exc)) from exc


def load(path: str) -> KnowledgeBase:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return loads(fh.read())


def _attr_line(attr: AttributeDef, goal: str) -> str:
    flags = []
    if attr.askable:
        flags.append("askable")
    if attr.name == goal:
        flags.append("goal")
    suffix = f" [{', '.join(flags)}]" if flags else ""
    return f"ATTR {attr.name}: {', '.join(attr.domain)}{suffix}"


def _audit_line(entry: AuditEntry) -> str:
    actor = f"{entry.actor}={entry.note}" if entry.note else entry.actor
    payload = f" {entry.text}" if entry.text else ""
    return f"AUDIT {entry.timestamp} {actor} {entry.action} [{','.join(entry.rule_ids)}]{payload}"


def dumps(kb: KnowledgeBase) -> str:
    """Canonical file text; load(dumps(kb)) round-trips byte-identically."""
    out = [VERSION, "@schema"]
    out.extend(_attr_line(a, kb.goal_attribute) for a in kb.schema)
    out.append("@cases")
    out.extend(serialize_case(c) for c in kb.cases)
    out.append("@rules")
    out.extend(serialize_rule(r) for r in kb.rules)
    out.append("@advice")
    out.extend(f"ADVICE {fact}: {text}"
               for fact, text in sorted(kb.advice, key=lambda kv: (kv[0].attribute, kv[0].value)))
    out.append("@audit")
    out.extend(_audit_line(e) for e in kb.audit)
    return "\n".join(out) + "\n"


def save(kb: KnowledgeBase, path: str) -> None:
    """Write atomically: the previous file survives any failure."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".kb-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(dumps(kb))
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def replay_audit(kb: KnowledgeBase,
                 baseline: Optional[Iterable[Rule]] = None) -> tuple[Rule, ...]:
    """Apply the audit trail to the authored baseline and return the rule
    list it reconstructs; equality with kb.rules is the ledger invariant."""
    rules = list(baseline if baseline is not None
                 else (r for r in kb.rules if r.origin == "authored"))

    def upsert(rule: Rule, position: Optional[int]) -> None:
        for i, existing in enumerate(rules):
            if existing.id == rule.id:
                rules[i] = rule
                return
        if position is None or position > len(rules):
            rules.append(rule)
        else:
            rules.insert(position, rule)

    for entry in kb.audit:
        if entry.action == "rule_added":
            upsert(parse_rule(entry.text), None)
        elif entry.action == "rule_removed":
            rules[:] = [r for r in rules if r.id not in entry.rule_ids]
        elif entry.action == "rule_generalized":
            position = next((i for i, r in enumerate(rules) if r.id in entry.rule_ids), None)
            rules[:] = [r for r in rules if r.id not in entry.rule_ids]
            upsert(parse_rule(entry.text), position)
        elif entry.action == "stats_updated":
            m = re.fullmatch(r"support=(\d+) firings=(\d+)", entry.text)
            if not m:
                raise ValueError(f"bad stats payload: {entry.text!r}")
            stats = ExperienceStats(int(m.group(1)), int(m.group(2)))
            for i, rule in enumerate(rules):
                if rule.id in entry.rule_ids:
                    rules[i] = _replace(rule, stats=stats)
    return tuple(rules)


class KbStore:
    """Single-writer owner of one knowledge-base file.

    Mutations run inside the store lock as pure KB->KB functions; the result
    is persisted atomically before it becomes the visible snapshot, so a
    commit that was acknowledged survives reload and readers only ever see
    complete states.
    """

    def __init__(self, path: str, kb: Optional[KnowledgeBase] = None):
        self.path = path
        self._lock = threading.Lock()
        if kb is not None:
            self._kb = kb
            save(kb, path)
        else:
            self._kb = load(path)

    @property
    def kb(self) -> KnowledgeBase:
        return self._kb

    def commit(self, mutate: Callable[[KnowledgeBase], KnowledgeBase]) -> KnowledgeBase:
        with self._lock:
            new_kb = mutate(self._kb)
            save(new_kb, self.path)
            self._kb = new_kb
            return new_kb

    def reload(self) -> KnowledgeBase:
        with self._lock:
            self._kb = load(self.path)
            return self._kb
