"""Top-down decision-tree induction over the case base.

Splits maximize binary-entropy information gain (ties broken by smallest
attribute name). Leaves carry the outcome label, the number of supporting
cases and their ids; compiling the tree yields one rule per non-empty leaf
whose support seeds the rule's experience.

Branch order inside a split is part of the artifact: the branch whose
subtree holds fewer cases prints first (ties follow the attribute's declared
domain order). That ordering also numbers the compiled rules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence, Union

from .model import CaseRecord, Diagnostic, ExperienceStats, Fact, Rule


@dataclass(frozen=True)
class Leaf:
    label: str
    count: int
    case_ids: tuple[int, ...] = ()


@dataclass(frozen=True)
class Split:
    attribute: str
    branches: tuple[tuple[str, "DecisionTree"], ...]


DecisionTree = Union[Leaf, Split]


@dataclass(frozen=True)
class GainTable:
    """Entropy of a node's label distribution and the information gain of
    every candidate attribute at that node."""

    entropy: float
    gains: tuple[tuple[str, float], ...]

    def gain(self, attribute: str) -> float:
        return dict(self.gains)[attribute]

    def best(self) -> str:
        top = max(g for _, g in self.gains)
        return min(a for a, g in self.gains if g == top)


class InductionError(ValueError):
    pass


def tree_cases(tree: DecisionTree) -> int:
    if isinstance(tree, Leaf):
        return tree.count
    return sum(tree_cases(child) for _, child in tree.branches)


def leaves(tree: DecisionTree) -> list[Leaf]:
    if isinstance(tree, Leaf):
        return [tree]
    out: list[Leaf] = []
    for _, child in tree.branches:
        out.extend(leaves(child))
    return out


def _entropy(cases: Sequence[CaseRecord]) -> float:
    if not cases:
        return 0.0
    counts: dict[str, int] = {}
    for case in cases:
        counts[case.label.value] = counts.get(case.label.value, 0) + 1
    total = len(cases)
    return -sum((n / total) * math.log2(n / total) for n in counts.values())


def gain_table(cases: Sequence[CaseRecord], candidates: Iterable[str]) -> GainTable:
    base = _entropy(cases)
    total = len(cases)
    gains = []
    for attr in candidates:
        buckets: dict[str, list[CaseRecord]] = {}
        for case in cases:
            buckets.setdefault(case.as_mapping().get(attr, ""), []).append(case)
        remainder = sum(len(b) / total * _entropy(b) for b in buckets.values())
        gains.append((attr, base - remainder))
    return GainTable(base, tuple(gains))


def _majority(cases: Sequence[CaseRecord]) -> tuple[str, bool]:
    """Majority label and whether it is unique (False on an exact tie)."""
    counts: dict[str, int] = {}
    for case in cases:
        counts[case.label.value] = counts.get(case.label.value, 0) + 1
    top = max(counts.values())
    winners = sorted(v for v, n in counts.items() if n == top)
    return winners[0], len(winners) == 1


def _domain_of(attr: str, domains: Mapping[str, Sequence[str]],
               cases: Sequence[CaseRecord]) -> list[str]:
    if attr in domains:
        return list(domains[attr])
    seen: list[str] = []
    for case in cases:
        value = case.as_mapping().get(attr)
        if value is not None and value not in seen:
            seen.append(value)
    return seen


def induce_tree(cases: Sequence[CaseRecord], candidate_attributes: Sequence[str],
                domains: Optional[Mapping[str, Sequence[str]]] = None,
                diagnostics: Optional[list[Diagnostic]] = None) -> DecisionTree:
    """Induce a tree from labelled cases.

    Pure nodes become leaves. Mixed nodes with candidates left split on the
    highest-gain attribute. Mixed nodes with no candidates left (contradictory
    duplicate cases) become majority leaves with a diagnostic; an exact label
    tie there is an error. A domain value with no cases becomes a count-zero
    leaf carrying the parent majority.
    """
    if not cases:
        raise InductionError("cannot induce from an empty case set")
    domains = domains or {}

    def build(subset: Sequence[CaseRecord], remaining: Sequence[str]) -> DecisionTree:
        labels = {c.label.value for c in subset}
        ids = tuple(sorted(c.id for c in subset))
        if len(labels) == 1:
            return Leaf(labels.pop(), len(subset), ids)
        if not remaining:
            label, unique = _majority(subset)
            if not unique:
                raise InductionError(
                    f"label tie among contradictory cases {ids}; cannot pick a majority")
            if diagnostics is not None:
                diagnostics.append(Diagnostic(
                    "contradictory_duplicates",
                    f"cases {ids} are indistinguishable but mixed-label; "
                    f"using majority {label!r}",
                    severity="warning", case_ids=ids))
            return Leaf(label, len(subset), ids)

        table = gain_table(subset, remaining)
        attr = table.best()
        rest = [a for a in remaining if a != attr]
        parent_majority, _ = _majority(subset)

        branches: list[tuple[str, DecisionTree]] = []
        for value in _domain_of(attr, domains, subset):
            bucket = [c for c in subset if c.as_mapping().get(attr) == value]
            if bucket:
                branches.append((value, build(bucket, rest)))
            else:
                branches.append((value, Leaf(parent_majority, 0)))

        domain_rank = {v: i for i, (v, _) in enumerate(branches)}
        branches.sort(key=lambda item: (tree_cases(item[1]), domain_rank[item[0]]))
        return Split(attr, tuple(branches))

    return build(list(cases), list(candidate_attributes))


def tree_to_rules(tree: DecisionTree, goal_attribute: str, *,
                  allow_defaults: bool = False, id_prefix: str = "r",
                  diagnostics: Optional[list[Diagnostic]] = None) -> list[Rule]:
    """Compile leaves to rules, numbered in branch (report) order.

    Premises follow the root-to-leaf path; leaf support becomes the rule's
    support. Count-zero leaves are skipped. A bare-leaf tree compiles to a
    premise-free default rule only when defaults are allowed.
    """
    rules: list[Rule] = []
    counter = 0

    def walk(node: DecisionTree, path: tuple[Fact, ...]) -> None:
        nonlocal counter
        if isinstance(node, Leaf):
            if node.count == 0:
                return
            counter += 1
            if not path and not allow_defaults:
                if diagnostics is not None:
                    diagnostics.append(Diagnostic(
                        "default_rule_suppressed",
                        "single-leaf tree compiles to a premise-free rule; "
                        "defaults are disabled", severity="warning"))
                return
            rules.append(Rule(
                f"{id_prefix}{counter}", path, Fact(goal_attribute, node.label),
                ExperienceStats(support=node.count), origin="induced",
                is_default=not path))
            return
        for value, child in node.branches:
            walk(child, path + (Fact(node.attribute, value),))

    walk(tree, ())
    return rules


def classify(tree: DecisionTree, observations: Mapping[str, str]) -> Optional[str]:
    """Walk the tree with an attribute->value mapping. Returns the leaf
    label, or None when a tested attribute has no value."""
    node = tree
    while isinstance(node, Split):
        value = observations.get(node.attribute)
        match = next((child for v, child in node.branches if v == value), None)
        if match is None:
            return None
        node = match
    return node.label
