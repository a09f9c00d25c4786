"""Adaptive maintenance of the rule set: generalization and discovery.

Two generalization mechanisms exist. Subsumption elimination removes a rule
whenever a strictly more general rule (premise subset, same conclusion)
exists, folding its experience into the survivor. Experience merging
collapses sibling rules that differ in a single premise value, keeping the
heavily-used conclusion and reporting the minority cases as exceptions.
Both validate against the stored cases before touching anything; discovery
adds expert-taught rules at runtime when a consultation ends unresolved.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import datetime, timezone
from typing import Optional

from .engine import Session, forward_chain
from .model import (AttributeDef, AuditEntry, ExperienceStats, Fact,
                    KnowledgeBase, Rule, rule_sort_key)
from .rulelang import serialize_rule


class UnknownRuleError(KeyError):
    pass


def _now(now: Optional[str]) -> str:
    if now is not None:
        return now
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def replay_cases(kb: KnowledgeBase) -> dict[int, Optional[str]]:
    """Forward-chain every stored case's observations; the independent
    accuracy oracle for every generalization decision."""
    outcomes: dict[int, Optional[str]] = {}
    for case in kb.cases:
        memory, _ = forward_chain(kb, case.observations)
        outcomes[case.id] = memory.value(case.label.attribute)
    return outcomes


def case_accuracy(kb: KnowledgeBase) -> float:
    if not kb.cases:
        return 1.0
    outcomes = replay_cases(kb)
    hits = sum(1 for c in kb.cases if outcomes[c.id] == c.label.value)
    return hits / len(kb.cases)


def misclassified_cases(kb: KnowledgeBase) -> tuple[int, ...]:
    outcomes = replay_cases(kb)
    return tuple(sorted(c.id for c in kb.cases if outcomes[c.id] != c.label.value))


@dataclass(frozen=True)
class GeneralizationReport:
    mode: str
    removed: tuple[str, ...]
    kept: tuple[str, ...]
    added: tuple[str, ...]
    exceptions: tuple[int, ...]
    accuracy_before: float
    accuracy_after: float
    skipped: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        if set(self.removed) & set(self.kept):
            raise ValueError("a rule cannot be both removed and kept")


def _next_free_id(rules: list[Rule], prefix: str) -> str:
    used = {r.id for r in rules}
    n = 1
    while f"{prefix}{n}" in used:
        n += 1
    return f"{prefix}{n}"


def _generalizes(g: Rule, s: Rule) -> bool:
    """g may replace s: same conclusion and strictly fewer premises, or a
    byte-identical duplicate where the smaller id survives."""
    if g.id == s.id or g.conclusion != s.conclusion:
        return False
    if g.premise_set < s.premise_set:
        return True
    return g.premise_set == s.premise_set and rule_sort_key(g.id) < rule_sort_key(s.id)


def subsume_generalize(kb: KnowledgeBase, *,
                       now: Optional[str] = None) -> tuple[GeneralizationReport, KnowledgeBase]:
    """Remove premise-superset rules, folding their experience into the
    general survivor.

    Every elimination is validated against the stored cases: one that would
    change any case's forward-chain outcome is skipped and reported instead
    of applied, so classification of the case base is provably unchanged.
    """
    accuracy_before = case_accuracy(kb)
    baseline = replay_cases(kb)
    rules = list(kb.rules)
    removed: list[str] = []
    kept: list[str] = []
    skipped: list[tuple[str, str]] = []
    entries: list[AuditEntry] = []
    timestamp = _now(now)

    while True:
        pairs = sorted(
            ((g, s) for s in rules for g in rules if _generalizes(g, s)),
            key=lambda gs: (rule_sort_key(gs[1].id), rule_sort_key(gs[0].id)))
        pairs = [(g, s) for g, s in pairs if (g.id, s.id) not in skipped]
        if not pairs:
            break
        g, s = pairs[0]
        absorbed = replace(g, stats=g.stats + s.stats)
        candidate = [absorbed if r.id == g.id else r for r in rules if r.id != s.id]
        trial = kb.with_rules(candidate)
        if replay_cases(trial) != baseline:
            skipped.append((g.id, s.id))
            continue
        rules = candidate
        removed.append(s.id)
        if g.id not in kept:
            kept.append(g.id)
        entries.append(AuditEntry(timestamp, "system", "rule_generalized",
                                  (s.id,), serialize_rule(absorbed)))

    new_kb = kb.with_rules(rules)
    for entry in entries:
        new_kb = new_kb.with_audit(entry)
    report = GeneralizationReport(
        mode="subsume", removed=tuple(removed), kept=tuple(kept), added=(),
        exceptions=misclassified_cases(new_kb),
        accuracy_before=accuracy_before, accuracy_after=case_accuracy(new_kb),
        skipped=tuple(skipped))
    return report, new_kb


def _sibling_diff(a: Rule, b: Rule) -> Optional[str]:
    """The single premise attribute on which two same-shape rules disagree,
    or None when they are not siblings."""
    attrs_a = {p.attribute: p.value for p in a.premises}
    attrs_b = {p.attribute: p.value for p in b.premises}
    if set(attrs_a) != set(attrs_b):
        return None
    diff = [attr for attr in attrs_a if attrs_a[attr] != attrs_b[attr]]
    return diff[0] if len(diff) == 1 else None


def experience_generalize(kb: KnowledgeBase, threshold: int = 9, *,
                          now: Optional[str] = None) -> tuple[GeneralizationReport, KnowledgeBase]:
    """Merge sibling rules that differ in one premise value.

    Same-conclusion siblings merge outright. Siblings with conflicting
    conclusions merge only when the weaker side has experience exactly one
    and the stronger side dominates by the threshold factor; the dominant
    conclusion survives and the dropped premise widens the rule. Exceptions
    and accuracy are recomputed by replaying the full case base.
    """
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    accuracy_before = case_accuracy(kb)
    rules = list(kb.rules)
    removed: list[str] = []
    added: list[str] = []
    entries: list[AuditEntry] = []
    timestamp = _now(now)

    def eligible(a: Rule, b: Rule) -> bool:
        if a.origin not in ("induced", "generalized") or b.origin not in ("induced", "generalized"):
            return False
        if a.conclusion.attribute != b.conclusion.attribute:
            return False
        if _sibling_diff(a, b) is None:
            return False
        if a.conclusion.value == b.conclusion.value:
            return True
        lo, hi = sorted((a.stats.experience, b.stats.experience))
        return lo == 1 and hi > lo and hi >= threshold * lo

    while True:
        pairs = sorted(
            ((a, b) for i, a in enumerate(rules) for b in rules[i + 1:] if eligible(a, b)),
            key=lambda ab: (rule_sort_key(ab[0].id), rule_sort_key(ab[1].id)))
        if not pairs:
            break
        a, b = pairs[0]
        major = a if a.stats.experience >= b.stats.experience else b
        diff_attr = _sibling_diff(a, b)
        premises = tuple(p for p in major.premises if p.attribute != diff_attr)
        merged = Rule(_next_free_id(rules, "g"), premises, major.conclusion,
                      a.stats + b.stats, origin="generalized",
                      is_default=not premises)
        position = min(rules.index(a), rules.index(b))
        rules = [r for r in rules if r.id not in (a.id, b.id)]
        rules.insert(position, merged)
        removed.extend([a.id, b.id])
        added.append(merged.id)
        entries.append(AuditEntry(timestamp, "system", "rule_generalized",
                                  (a.id, b.id), serialize_rule(merged)))

    new_kb = kb.with_rules(rules)
    for entry in entries:
        new_kb = new_kb.with_audit(entry)
    report = GeneralizationReport(
        mode="experience", removed=tuple(removed),
        kept=tuple(r.id for r in rules if r.id not in added and r.id in {x.id for x in kb.rules}),
        added=tuple(added),
        exceptions=misclassified_cases(new_kb),
        accuracy_before=accuracy_before, accuracy_after=case_accuracy(new_kb))
    return report, new_kb


def reinduce_rules(kb: KnowledgeBase, *,
                   now: Optional[str] = None) -> tuple[list[Rule], KnowledgeBase]:
    """Replace the induced rule set with rules compiled from a fresh tree
    over the stored cases, auditing removals and additions."""
    from .induction import induce_tree, tree_to_rules

    if not kb.cases:
        raise ValueError("no cases to induce from")
    timestamp = _now(now)
    domains = {a.name: a.domain for a in kb.schema}
    candidates = [a for a in kb.case_attributes() if a != kb.goal_attribute]
    tree = induce_tree(kb.cases, candidates, domains)
    fresh = tree_to_rules(tree, kb.goal_attribute)

    old_induced = [r for r in kb.rules if r.origin == "induced"]
    rules = [r for r in kb.rules if r.origin != "induced"] + fresh
    new_kb = kb.with_rules(rules)
    for old in old_induced:
        new_kb = new_kb.with_audit(AuditEntry(timestamp, "system", "rule_removed",
                                              (old.id,), serialize_rule(old)))
    for rule in fresh:
        new_kb = new_kb.with_audit(AuditEntry(timestamp, "system", "rule_added",
                                              (rule.id,), serialize_rule(rule)))
    return fresh, new_kb


def record_firing(kb: KnowledgeBase, rule_id: str, *,
                  now: Optional[str] = None) -> KnowledgeBase:
    """Count one execution of a rule and log the new absolute stats."""
    rule = kb.rule(rule_id)
    if rule is None:
        raise UnknownRuleError(rule_id)
    updated = replace(rule, stats=ExperienceStats(rule.stats.support, rule.stats.firings + 1))
    new_kb = kb.with_rules(updated if r.id == rule_id else r for r in kb.rules)
    entry = AuditEntry(_now(now), "system", "stats_updated", (rule_id,),
                       f"support={updated.stats.support} firings={updated.stats.firings}")
    return new_kb.with_audit(entry)


@dataclass(frozen=True)
class DiscoveryProposal:
    """Template for an expert-taught rule, pre-filled from the stuck
    session's facts."""

    session_id: str
    context: tuple[Fact, ...]
    premises: tuple[Fact, ...]
    conclusion: Optional[Fact] = None
    expert: str = ""
    new_attribute_domains: tuple[tuple[str, tuple[str, ...]], ...] = ()


@dataclass(frozen=True)
class ValidationResult:
    status: str  # accepted | conflicts
    conflicting_cases: tuple[int, ...] = ()
    subsumed_existing: tuple[str, ...] = ()


def propose_discovery(session: Session) -> DiscoveryProposal:
    """Open the discovery protocol on a session that ended unresolved."""
    if session.status != "unknown":
        raise ValueError(f"discovery needs an unresolved session, status is {session.status!r}")
    session.status = "awaiting_discovery"
    facts = tuple(sorted((f for f in session.memory.facts()
                          if f.attribute != session.goal),
                         key=lambda f: f.attribute))
    return DiscoveryProposal(session_id=session.id, context=facts, premises=facts)


def abort_discovery(session: Session) -> None:
    if session.status != "awaiting_discovery":
        raise ValueError("no discovery in progress")
    session.status = "unknown"


_VALUE_VOCABULARIES = (("yes", "no"), ("positive", "negative"),
                       ("reactive", "nonreactive"))


def _guess_domain(value: str) -> tuple[str, ...]:
    for vocab in _VALUE_VOCABULARIES:
        if value in vocab:
            return vocab
    return (value,)


def commit_discovery(kb: KnowledgeBase, proposal: DiscoveryProposal, *,
                     override: bool = False, session: Optional[Session] = None,
                     now: Optional[str] = None) -> tuple[ValidationResult, KnowledgeBase]:
    """Validate a proposal against the case base and, if clean (or
    overridden), append the discovered rule and resolve the waiting session.

    A conflict is a stored case matching every proposed premise whose label
    disagrees with the proposed conclusion. Acceptance appends exactly one
    audit entry; existing rules are never edited or removed.
    """
    if proposal.conclusion is None:
        raise ValueError("proposal has no conclusion")
    if not proposal.premises:
        raise ValueError("proposal has no premises")
    goal = session.goal if session is not None else kb.goal_attribute
    if proposal.conclusion.attribute != goal:
        raise ValueError(
            f"conclusion attribute {proposal.conclusion.attribute!r} is not the goal {goal!r}")
    if session is not None:
        for premise in proposal.premises:
            held = session.memory.value(premise.attribute)
            if held is not None and held != premise.value:
                raise ValueError(f"premise {premise} contradicts session fact "
                                 f"{premise.attribute}={held}")

    declared = dict(proposal.new_attribute_domains)
    schema = list(kb.schema)
    known = {a.name for a in schema}
    for fact in proposal.premises + (proposal.conclusion,):
        if fact.attribute not in known:
            domain = declared.get(fact.attribute, _guess_domain(fact.value))
            if fact.value not in domain:
                domain = domain + (fact.value,)
            schema.append(AttributeDef(fact.attribute, tuple(domain), askable=True))
            known.add(fact.attribute)

    conflicts = tuple(sorted(
        c.id for c in kb.cases
        if c.label.attribute == proposal.conclusion.attribute
        and c.label.value != proposal.conclusion.value
        and all(c.as_mapping().get(p.attribute) == p.value for p in proposal.premises)))
    subsumed = tuple(sorted(
        (r.id for r in kb.rules
         if r.conclusion == proposal.conclusion
         and frozenset(proposal.premises) < r.premise_set),
        key=rule_sort_key))

    if conflicts and not override:
        return ValidationResult("conflicts", conflicts, subsumed), kb

    rule = Rule(_next_free_id(list(kb.rules), "d"), proposal.premises,
                proposal.conclusion, origin="discovered")
    new_kb = kb.with_schema(schema).with_rules(kb.rules + (rule,))
    new_kb = new_kb.with_audit(AuditEntry(
        _now(now), "expert", "rule_added", (rule.id,),
        serialize_rule(rule), note=proposal.expert))

    if session is not None:
        session.kb = new_kb
        for premise in proposal.premises:
            if premise.attribute not in session.memory:
                session.memory.add(premise, "given")
        session.status = "active"
        session.resume()
    return ValidationResult("accepted", (), subsumed), new_kb
