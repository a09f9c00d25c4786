"""Forward- and backward-chaining inference with interactive sessions.

Both directions share one conflict-resolution policy (experience, then
specificity, then rule id) and compute the same model: forward chaining
settles attributes in dependency order so that every attribute is decided
against its full set of contending rules, which is exactly the choice
backward chaining makes when it recurses. Facts are never retracted or
overwritten; an attribute holds at most one value per session.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

from .model import Derivation, Fact, KnowledgeBase, Rule, experience, rule_sort_key


class CycleError(RuntimeError):
    """Rule dependencies form a loop; names the rule ids on the cycle."""

    def __init__(self, rule_ids: Sequence[str]):
        super().__init__(f"cyclic rule dependency through: {', '.join(rule_ids)}")
        self.rule_ids = tuple(rule_ids)


class SessionStateError(RuntimeError):
    pass


class AnswerError(ValueError):
    pass


UNKNOWN_ANSWER = "unknown"


@dataclass
class MemoryEntry:
    value: str
    source: str  # given | asked | derived
    rule_id: Optional[str] = None
    derivation: Optional[Derivation] = None


class WorkingMemory:
    """Monotone attribute->value store with provenance per fact."""

    def __init__(self) -> None:
        self._entries: dict[str, MemoryEntry] = {}

    def __contains__(self, attribute: str) -> bool:
        return attribute in self._entries

    def value(self, attribute: str) -> Optional[str]:
        entry = self._entries.get(attribute)
        return entry.value if entry else None

    def entry(self, attribute: str) -> Optional[MemoryEntry]:
        return self._entries.get(attribute)

    def add(self, fact: Fact, source: str, rule_id: Optional[str] = None,
            derivation: Optional[Derivation] = None) -> None:
        existing = self._entries.get(fact.attribute)
        if existing is not None:
            if existing.value != fact.value:
                raise ValueError(
                    f"attribute {fact.attribute} already holds {existing.value!r}")
            return
        self._entries[fact.attribute] = MemoryEntry(fact.value, source, rule_id, derivation)

    def facts(self) -> set[Fact]:
        return {Fact(a, e.value) for a, e in self._entries.items()}

    def mapping(self) -> dict[str, str]:
        return {a: e.value for a, e in self._entries.items()}

    def __len__(self) -> int:
        return len(self._entries)


def _usable_rules(kb: KnowledgeBase) -> list[Rule]:
    return [r for r in kb.rules if r.premises or kb.allow_defaults]


def resolve_conflict(conflict: Sequence[Rule]) -> Rule:
    """Pick the winner: more experience, then more premises, then the
    smaller rule id (digit runs compare numerically)."""
    if not conflict:
        raise ValueError("empty conflict set")
    return min(conflict,
               key=lambda r: (-experience(r), -len(r.premises), rule_sort_key(r.id)))


def conflict_order(rules: Iterable[Rule]) -> list[Rule]:
    return sorted(rules,
                  key=lambda r: (-experience(r), -len(r.premises), rule_sort_key(r.id)))


def attribute_depths(kb: KnowledgeBase) -> dict[str, int]:
    """Longest chain of rule applications feeding each attribute. Attributes
    never concluded by a rule sit at depth zero. Relaxation is capped at the
    attribute count, so cyclic rule sets still terminate (with approximate
    depths)."""
    depths = {a.name: 0 for a in kb.schema}
    rules = _usable_rules(kb)
    for _ in range(max(1, len(depths))):
        changed = False
        for rule in rules:
            concl = rule.conclusion.attribute
            need = 1 + max((depths.get(p.attribute, 0) for p in rule.premises), default=0)
            if need > depths.get(concl, 0):
                depths[concl] = need
                changed = True
        if not changed:
            break
    return depths


def _premise_sources(rule: Rule, memory: WorkingMemory) -> tuple:
    sources = []
    for premise in rule.premises:
        entry = memory.entry(premise.attribute)
        if entry.source == "derived":
            sources.append((premise, entry.derivation))
        else:
            sources.append((premise, entry.source))
    return tuple(sources)


def forward_chain(kb: KnowledgeBase,
                  initial_facts: Iterable[Fact]) -> tuple[WorkingMemory, list[Derivation]]:
    """Data-driven run to fixpoint.

    Each cycle gathers the fireable rules (premises satisfied, conclusion
    attribute unset), narrows them to the shallowest undecided attribute so
    late-arriving contenders are never preempted, and fires the conflict
    winner. Contradictory fireable rules are settled by that choice, never
    by overwriting.
    """
    memory = WorkingMemory()
    for fact in initial_facts:
        memory.add(fact, "given")

    depths = attribute_depths(kb)
    rules = _usable_rules(kb)
    derivations: list[Derivation] = []

    while True:
        fireable = [r for r in rules
                    if r.conclusion.attribute not in memory
                    and all(memory.value(p.attribute) == p.value for p in r.premises)]
        if not fireable:
            break
        shallowest = min(depths.get(r.conclusion.attribute, 0) for r in fireable)
        scope = [r for r in fireable if depths.get(r.conclusion.attribute, 0) == shallowest]
        winner = resolve_conflict(scope)
        derivation = Derivation(winner.conclusion, winner.id, _premise_sources(winner, memory))
        memory.add(winner.conclusion, "derived", winner.id, derivation)
        derivations.append(derivation)
    return memory, derivations


@dataclass(frozen=True)
class Proved:
    fact: Fact
    derivation: Optional[Derivation]


@dataclass(frozen=True)
class NextQuestion:
    attribute: str
    rule_id: str
    chain: tuple[tuple[str, Fact], ...] = ()


@dataclass(frozen=True)
class Unknown:
    missing: tuple[frozenset, ...]


Outcome = Union[Proved, NextQuestion, Unknown]


class _Ask(Exception):
    def __init__(self, attribute: str, rule_id: str, chain: tuple):
        self.attribute = attribute
        self.rule_id = rule_id
        self.chain = chain


class Session:
    """One consultation: a goal, answered facts, and the derivation trace.

    The knowledge base reference is a read-only snapshot; concluding reports
    the fired rules through `on_conclude` so the owner can feed the learner.
    """

    _counter = 0

    def __init__(self, kb: KnowledgeBase, goal: str,
                 initial_facts: Iterable[Fact] = (),
                 on_conclude: Optional[Callable[["Session"], None]] = None,
                 session_id: Optional[str] = None):
        if kb.attribute(goal) is None:
            raise ValueError(f"goal attribute {goal!r} not in schema")
        Session._counter += 1
        self.id = session_id or f"s{Session._counter}"
        self.kb = kb
        self.goal = goal
        self.memory = WorkingMemory()
        self.asked: set[str] = set()
        self.unanswerable: set[str] = set()
        self.pending_question: Optional[tuple[str, str]] = None
        self.why_chain: tuple[tuple[str, Fact], ...] = ()
        self.status = "active"
        self.result: Optional[Proved] = None
        self.missing: tuple[frozenset, ...] = ()
        self.trace: list[tuple[str, str]] = []
        self.on_conclude = on_conclude
        for fact in initial_facts:
            self.memory.add(fact, "given")
            self.trace.append(("fact", str(fact)))
        self.resume()

    def resume(self) -> Outcome:
        outcome = backward_chain(self, self.goal)
        if isinstance(outcome, Proved):
            self.status = "concluded"
            self.pending_question = None
            self.result = outcome
            self.trace.append(("concluded", str(outcome.fact)))
            if self.on_conclude:
                self.on_conclude(self)
        elif isinstance(outcome, NextQuestion):
            self.status = "active"
            self.pending_question = (outcome.attribute, outcome.rule_id)
            self.why_chain = outcome.chain
            self.trace.append(("question", outcome.attribute))
        else:
            self.status = "unknown"
            self.pending_question = None
            self.missing = outcome.missing
            self.trace.append(("unknown", self.goal))
        return outcome

    def fired_rule_ids(self) -> list[str]:
        if self.result is None or self.result.derivation is None:
            return []
        return sorted(self.result.derivation.rules_used(), key=rule_sort_key)


def backward_chain(session: Session, goal: str) -> Outcome:
    """Goal-driven proof over the session's memory.

    Tries the rules concluding the goal in conflict order; each premise is
    read from memory, recursively proved, or turned into the next question
    when its attribute is askable and not yet asked. Returns Unknown with
    the minimal unsatisfied premise sets once all candidates are exhausted.
    """
    kb = session.kb
    memory = session.memory

    def prove(attribute: str, stack: tuple[tuple[str, str], ...],
              chain: tuple) -> Optional[str]:
        if attribute in memory:
            return memory.value(attribute)
        for frame_attr, _ in stack:
            if frame_attr == attribute:
                cycle = [rid for a, rid in stack if rid]
                raise CycleError(cycle or [attribute])
        candidates = conflict_order(r for r in _usable_rules(kb)
                                    if r.conclusion.attribute == attribute)
        for rule in candidates:
            if _try_rule(rule, stack, chain):
                return memory.value(attribute)
        return None

    def _try_rule(rule: Rule, stack: tuple, chain: tuple) -> bool:
        sub_chain = chain + ((rule.id, rule.conclusion),)
        for premise in rule.premises:
            attr = premise.attribute
            if attr in memory:
                if memory.value(attr) != premise.value:
                    return False
                continue
            derivable = any(r.conclusion.attribute == attr for r in _usable_rules(kb))
            if derivable:
                value = prove(attr, stack + ((rule.conclusion.attribute, rule.id),),
                              sub_chain)
                if value is not None:
                    if value != premise.value:
                        return False
                    continue
            attr_def = kb.attribute(attr)
            if (attr_def is not None and attr_def.askable
                    and attr not in session.asked):
                raise _Ask(attr, rule.id, sub_chain)
            return False
        derivation = Derivation(rule.conclusion, rule.id, _premise_sources(rule, memory))
        memory.add(rule.conclusion, "derived", rule.id, derivation)
        session.trace.append(("fired", rule.id))
        return True

    entry = memory.entry(goal)
    if entry is not None:
        return Proved(Fact(goal, entry.value), entry.derivation)

    try:
        value = prove(goal, (), ())
    except _Ask as ask:
        return NextQuestion(ask.attribute, ask.rule_id, ask.chain)

    if value is not None:
        entry = memory.entry(goal)
        return Proved(Fact(goal, value), entry.derivation)

    missing: list[frozenset] = []
    for rule in conflict_order(r for r in _usable_rules(kb)
                               if r.conclusion.attribute == goal):
        unmet = frozenset(p for p in rule.premises
                          if memory.value(p.attribute) != p.value)
        if unmet:
            missing.append(unmet)
    minimal = [s for s in missing
               if not any(other < s for other in missing)]
    seen: list[frozenset] = []
    for s in minimal:
        if s not in seen:
            seen.append(s)
    return Unknown(tuple(seen))


def answer(session: Session, attribute: str, value: str) -> Session:
    """Record the user's answer to the pending question and resume."""
    if session.pending_question is None:
        raise SessionStateError("no question is pending")
    pending_attr, _ = session.pending_question
    if attribute != pending_attr:
        raise AnswerError(f"pending question is about {pending_attr!r}, not {attribute!r}")
    attr_def = session.kb.attribute(attribute)
    if value != UNKNOWN_ANSWER and (attr_def is None or not attr_def.allows(value)):
        raise AnswerError(f"value {value!r} outside domain of {attribute}")

    session.trace.append(("answer", f"{attribute}={value}"))
    session.asked.add(attribute)
    session.pending_question = None
    if value == UNKNOWN_ANSWER:
        session.unanswerable.add(attribute)
    else:
        session.memory.add(Fact(attribute, value), "asked")
    session.resume()
    return session


def explain_why(session: Session) -> str:
    """Why is the pending question being asked: the rule chain from the
    session goal down to the question."""
    if session.pending_question is None:
        raise SessionStateError("no question is pending")
    attribute, rule_id = session.pending_question
    lines = [f"Asking about {attribute} (goal: {session.goal}):"]
    chain = session.why_chain or ((rule_id, Fact(session.goal, "unknown")),)
    for rid, conclusion in chain:
        rule = session.kb.rule(rid)
        needed = next((p for p in rule.premises
                       if p.attribute == attribute), None) if rule else None
        want = f" needs {needed}" if needed else ""
        lines.append(f"  rule {rid} could conclude {conclusion}{want}")
    return "\n".join(lines)


def explain_how(session: Session) -> str:
    """How the conclusion was reached: the derivation tree, indented, with
    the provenance of every antecedent."""
    if session.status != "concluded" or session.result is None:
        raise SessionStateError("session has not concluded")
    fact = session.result.fact
    derivation = session.result.derivation
    if derivation is None:
        entry = session.memory.entry(fact.attribute)
        source = entry.source if entry else "given"
        return f"{fact}  ({source})\n"

    lines: list[str] = []

    def walk(d: Derivation, depth: int) -> None:
        lines.append(f"{'  ' * depth}{d.conclusion}  [rule {d.rule}]")
        for premise, source in d.antecedents:
            if isinstance(source, Derivation):
                walk(source, depth + 1)
            else:
                lines.append(f"{'  ' * (depth + 1)}{premise}  ({source})")

    walk(derivation, 0)
    return "\n".join(lines) + "\n"
