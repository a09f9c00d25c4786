"""Core domain types: attributes, facts, rules, cases, the knowledge base.

Everything here is an immutable value type. A KnowledgeBase is replaced,
never mutated in place; the single-writer store (see store.py) owns the
replacement cycle, so read-only snapshots are safe to share across sessions.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional, Union

ORIGINS = ("authored", "induced", "discovered", "generalized")
AUDIT_ACTIONS = ("rule_added", "rule_removed", "rule_generalized", "stats_updated")

_IDENT_CHARS = set("abcdefghijklmnopqrstuvwxyz0123456789_ABCDEFGHIJKLMNOPQRSTUVWXYZ")


def is_identifier(text: str) -> bool:
    """Identifiers are non-empty runs of alphanumerics and underscores."""
    return bool(text) and set(text) <= _IDENT_CHARS and not text[0].isdigit()


@dataclass(frozen=True)
class Fact:
    """One ground attribute=value pair.

    Rule premises are equality tests with exactly this shape, so the same
    type serves as a condition.
    """

    attribute: str
    value: str

    def __post_init__(self) -> None:
        if not is_identifier(self.attribute):
            raise ValueError(f"bad attribute identifier: {self.attribute!r}")
        if not is_identifier(self.value):
            raise ValueError(f"bad value identifier: {self.value!r}")

    def __str__(self) -> str:
        return f"{self.attribute}={self.value}"


Condition = Fact


@dataclass(frozen=True)
class AttributeDef:
    """Schema entry: an attribute, its allowed values, and whether the
    consultation loop may ask the user for it."""

    name: str
    domain: tuple[str, ...]
    askable: bool = True

    def __post_init__(self) -> None:
        if not is_identifier(self.name):
            raise ValueError(f"bad attribute name: {self.name!r}")
        if not self.domain:
            raise ValueError(f"attribute {self.name}: empty domain")
        if len(set(self.domain)) != len(self.domain):
            raise ValueError(f"attribute {self.name}: duplicate domain values")

    def allows(self, value: str) -> bool:
        return value in self.domain


@dataclass(frozen=True)
class ExperienceStats:
    """Usage statistics of a rule: induction support plus live firings."""

    support: int = 0
    firings: int = 0

    def __post_init__(self) -> None:
        if self.support < 0 or self.firings < 0:
            raise ValueError("experience counts must be non-negative")

    @property
    def experience(self) -> int:
        return self.support + self.firings

    def __add__(self, other: "ExperienceStats") -> "ExperienceStats":
        return ExperienceStats(self.support + other.support, self.firings + other.firings)


def experience(rule: "Rule") -> int:
    """Combined execution experience of a rule (support + firings)."""
    return rule.stats.experience


@dataclass(frozen=True)
class Rule:
    """IF premises THEN conclusion, with experience statistics.

    Premises keep their written order (it drives question order during a
    consultation) but compare as sets: two rules with the same premises in
    a different order are equal.
    """

    id: str
    premises: tuple[Fact, ...]
    conclusion: Fact
    stats: ExperienceStats = ExperienceStats()
    origin: str = "authored"
    is_default: bool = False

    def __post_init__(self) -> None:
        if not is_identifier(self.id):
            raise ValueError(f"bad rule id: {self.id!r}")
        if not self.premises and not self.is_default:
            raise ValueError(f"rule {self.id}: empty premises (not flagged default)")
        attrs = [p.attribute for p in self.premises]
        if len(set(attrs)) != len(attrs):
            raise ValueError(f"rule {self.id}: repeated premise attribute")
        if self.conclusion.attribute in attrs:
            raise ValueError(f"rule {self.id}: conclusion attribute appears in premises")
        if self.origin not in ORIGINS:
            raise ValueError(f"rule {self.id}: unknown origin {self.origin!r}")

    @property
    def premise_set(self) -> frozenset[Fact]:
        return frozenset(self.premises)

    def matches(self, facts: Mapping[str, str]) -> bool:
        """True when every premise holds in an attribute->value mapping."""
        return all(facts.get(p.attribute) == p.value for p in self.premises)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Rule):
            return NotImplemented
        return (
            self.id == other.id
            and self.premise_set == other.premise_set
            and self.conclusion == other.conclusion
            and self.stats == other.stats
            and self.origin == other.origin
            and self.is_default == other.is_default
        )

    def __hash__(self) -> int:
        return hash((self.id, self.premise_set, self.conclusion))


@dataclass(frozen=True)
class CaseRecord:
    """One labelled observation vector from the case base."""

    id: int
    label: Fact
    observations: tuple[Fact, ...]

    def __post_init__(self) -> None:
        if self.id <= 0:
            raise ValueError(f"case id must be positive, got {self.id}")
        attrs = [o.attribute for o in self.observations]
        if len(set(attrs)) != len(attrs):
            raise ValueError(f"case {self.id}: repeated observation attribute")
        if self.label.attribute in attrs:
            raise ValueError(f"case {self.id}: label attribute also observed")

    def as_mapping(self) -> dict[str, str]:
        return {o.attribute: o.value for o in self.observations}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CaseRecord):
            return NotImplemented
        return (self.id == other.id and self.label == other.label
                and set(self.observations) == set(other.observations))

    def __hash__(self) -> int:
        return hash((self.id, self.label, frozenset(self.observations)))


@dataclass(frozen=True)
class AuditEntry:
    """Append-only change record. Replaying the audit over the authored
    baseline must reconstruct the current rule list (see store.replay_audit)."""

    timestamp: str
    actor: str
    action: str
    rule_ids: tuple[str, ...] = ()
    text: str = ""
    note: str = ""

    def __post_init__(self) -> None:
        if self.actor not in ("system", "expert"):
            raise ValueError(f"unknown audit actor: {self.actor!r}")
        if self.action not in AUDIT_ACTIONS:
            raise ValueError(f"unknown audit action: {self.action!r}")


@dataclass(frozen=True)
class Derivation:
    """Proof that a fact holds: the rule that fired and, per premise, where
    its value came from (given fact, user answer, or a sub-derivation)."""

    conclusion: Fact
    rule: str
    antecedents: tuple[tuple[Fact, Union[str, "Derivation"]], ...]

    def leaves_are_ground(self) -> bool:
        """True when every leaf of the proof tree is a given or asked fact."""
        for _, source in self.antecedents:
            if isinstance(source, Derivation):
                if not source.leaves_are_ground():
                    return False
            elif source not in ("given", "asked"):
                return False
        return True

    def rules_used(self) -> set[str]:
        used = {self.rule}
        for _, source in self.antecedents:
            if isinstance(source, Derivation):
                used |= source.rules_used()
        return used


@dataclass(frozen=True)
class Diagnostic:
    """One validation finding. Severity 'error' should block, 'warning'
    should not."""

    code: str
    message: str
    severity: str = "error"
    rule_ids: tuple[str, ...] = ()
    case_ids: tuple[int, ...] = ()

    def __str__(self) -> str:
        return f"{self.severity}[{self.code}]: {self.message}"


@dataclass(frozen=True)
class KnowledgeBase:
    """Schema, rules, cases, advice and audit trail for one domain."""

    schema: tuple[AttributeDef, ...]
    goal_attribute: str
    rules: tuple[Rule, ...] = ()
    cases: tuple[CaseRecord, ...] = ()
    advice: tuple[tuple[Fact, str], ...] = ()
    audit: tuple[AuditEntry, ...] = ()
    allow_defaults: bool = False

    def __post_init__(self) -> None:
        names = [a.name for a in self.schema]
        if len(set(names)) != len(names):
            raise ValueError("duplicate attribute name in schema")
        if self.goal_attribute not in names:
            raise ValueError(f"goal attribute {self.goal_attribute!r} not in schema")
        # Advice is a mapping; keep it in canonical order so value equality
        # and serialization agree.
        object.__setattr__(self, "advice", tuple(
            sorted(self.advice, key=lambda kv: (kv[0].attribute, kv[0].value))))

    def attribute(self, name: str) -> Optional[AttributeDef]:
        for attr in self.schema:
            if attr.name == name:
                return attr
        return None

    def rule(self, rule_id: str) -> Optional[Rule]:
        for rule in self.rules:
            if rule.id == rule_id:
                return rule
        return None

    def rules_for(self, attribute: str) -> tuple[Rule, ...]:
        return tuple(r for r in self.rules if r.conclusion.attribute == attribute)

    def advice_for(self, fact: Fact) -> str:
        for key, text in self.advice:
            if key == fact:
                return text
        return ""

    def case_attributes(self) -> tuple[str, ...]:
        """Attributes observed in the stored cases, in schema order."""
        seen: set[str] = set()
        for case in self.cases:
            seen.update(o.attribute for o in case.observations)
        return tuple(a.name for a in self.schema if a.name in seen)

    def with_rules(self, rules: Iterable[Rule]) -> "KnowledgeBase":
        return replace(self, rules=tuple(rules))

    def with_audit(self, entry: AuditEntry) -> "KnowledgeBase":
        return replace(self, audit=self.audit + (entry,))

    def with_schema(self, schema: Iterable[AttributeDef]) -> "KnowledgeBase":
        return replace(self, schema=tuple(schema))


def rule_sort_key(rule_id: str) -> tuple:
    """Natural ordering for rule ids: digit runs compare numerically, so
    r2 sorts before r10."""
    key: list = []
    buf = ""
    digit = False
    for ch in rule_id + "\0":
        now_digit = ch.isdigit()
        if buf and now_digit != digit:
            key.append((1, int(buf)) if digit else (0, buf))
            buf = ""
        buf += ch if ch != "\0" else ""
        digit = now_digit
    if buf:
        key.append((1, int(buf)) if digit else (0, buf))
    return tuple(key)


def validate_kb(kb: KnowledgeBase) -> list[Diagnostic]:
    """Collect every consistency problem in a knowledge base.

    Pure and idempotent: diagnostics only, never an exception. Checks
    schema conformance of rules and cases, duplicate rule ids, rule pairs
    with identical premises but conflicting conclusions, case pairs with
    identical observations but different labels, and rules contradicted by
    stored cases.
    """
    out: list[Diagnostic] = []
    names = {a.name for a in kb.schema}

    def check_fact(fact: Fact, where: str, rule_ids=(), case_ids=()) -> None:
        attr = kb.attribute(fact.attribute)
        if attr is None:
            out.append(Diagnostic("unknown_attribute", f"{where}: attribute {fact.attribute!r} not in schema",
                                  rule_ids=rule_ids, case_ids=case_ids))
        elif not attr.allows(fact.value):
            out.append(Diagnostic("value_outside_domain",
                                  f"{where}: {fact} outside domain {attr.domain}",
                                  rule_ids=rule_ids, case_ids=case_ids))

    seen_ids: set[str] = set()
    for rule in kb.rules:
        if rule.id in seen_ids:
            out.append(Diagnostic("duplicate_rule_id", f"rule id {rule.id!r} used more than once",
                                  rule_ids=(rule.id,)))
        seen_ids.add(rule.id)
        if rule.is_default and not kb.allow_defaults:
            out.append(Diagnostic("default_rule_disabled",
                                  f"rule {rule.id} has no premises and defaults are disabled",
                                  rule_ids=(rule.id,)))
        for premise in rule.premises:
            check_fact(premise, f"rule {rule.id} premise", rule_ids=(rule.id,))
        check_fact(rule.conclusion, f"rule {rule.id} conclusion", rule_ids=(rule.id,))

    for i, a in enumerate(kb.rules):
        for b in kb.rules[i + 1:]:
            if (a.premise_set == b.premise_set
                    and a.conclusion.attribute == b.conclusion.attribute
                    and a.conclusion.value != b.conclusion.value):
                out.append(Diagnostic(
                    "contradictory_rules",
                    f"rules {a.id} and {b.id} share premises but conclude "
                    f"{a.conclusion} vs {b.conclusion}",
                    rule_ids=(a.id, b.id)))

    seen_case_ids: set[int] = set()
    for case in kb.cases:
        if case.id in seen_case_ids:
            out.append(Diagnostic("duplicate_case_id", f"case id {case.id} used more than once",
                                  case_ids=(case.id,)))
        seen_case_ids.add(case.id)
        check_fact(case.label, f"case {case.id} label", case_ids=(case.id,))
        if case.label.attribute != kb.goal_attribute:
            out.append(Diagnostic("label_not_goal",
                                  f"case {case.id} labelled on {case.label.attribute}, "
                                  f"goal is {kb.goal_attribute}",
                                  case_ids=(case.id,)))
        for obs in case.observations:
            check_fact(obs, f"case {case.id}", case_ids=(case.id,))

    for i, a in enumerate(kb.cases):
        for b in kb.cases[i + 1:]:
            if set(a.observations) == set(b.observations) and a.label != b.label:
                out.append(Diagnostic(
                    "contradictory_cases",
                    f"cases {a.id} and {b.id} have identical observations but "
                    f"labels {a.label.value} vs {b.label.value}",
                    case_ids=(a.id, b.id)))

    for rule in kb.rules:
        if rule.conclusion.attribute != kb.goal_attribute:
            continue
        bad = tuple(c.id for c in kb.cases
                    if rule.matches(c.as_mapping()) and c.label != rule.conclusion)
        if bad:
            out.append(Diagnostic(
                "rule_contradicts_cases",
                f"rule {rule.id} concludes {rule.conclusion} but matching "
                f"case(s) {', '.join(map(str, bad))} are labelled otherwise",
                rule_ids=(rule.id,), case_ids=bad))

    if "" in names:
        out.append(Diagnostic("empty_attribute", "schema contains empty attribute name"))
    return out
