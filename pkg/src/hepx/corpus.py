"""The bundled viral-hepatitis knowledge base and its raw case file.

The case corpus is the 32-record hepatitis data set shipped as a legacy
Prolog case file; the default knowledge base pairs it with the authored
anti-HCV rules and the rules compiled from the induced decision tree. The
literal hand-written HBV rule block (which contradicts the corpus and
itself) is available separately for inspection behind an explicit flag.
"""

from __future__ import annotations

from importlib import resources

from .induction import induce_tree, tree_to_rules
from .model import AttributeDef, AuditEntry, CaseRecord, Fact, KnowledgeBase, Rule
from .rulelang import parse_case

CASE_ATTRIBUTES = ("symptoms", "jaundice", "hbsagreact", "hbsagnonreact",
                   "igmantihbcreact", "checkhbv")
GOAL_ATTRIBUTE = "hbv"
BUNDLE_TIMESTAMP = "2026-01-01T00:00:00Z"


def _data_text(name: str) -> str:
    return resources.files("hepx.data").joinpath(name).read_text(encoding="utf-8")


def legacy_case_text() -> str:
    """The legacy Prolog case file, verbatim (directive line included)."""
    return _data_text("legacy_cases.pl")


def parse_prolog_cases(text: str, goal_attribute: str = GOAL_ATTRIBUTE) -> list[CaseRecord]:
    """Parse a Prolog-style case file; directives are skipped."""
    cases = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        record = parse_case(line, goal_attribute=goal_attribute, line=line_no)
        if record is not None:
            cases.append(record)
    return cases


def corpus_cases() -> list[CaseRecord]:
    return parse_prolog_cases(legacy_case_text())


def default_schema() -> tuple[AttributeDef, ...]:
    schema = [AttributeDef(name, ("yes", "no"), askable=True)
              for name in CASE_ATTRIBUTES]
    schema.append(AttributeDef("antihcv", ("reactive", "nonreactive"), askable=True))
    schema.append(AttributeDef("hbv", ("positive", "negative"), askable=False))
    schema.append(AttributeDef("hcv", ("positive", "negative"), askable=False))
    return tuple(schema)


def authored_rules() -> tuple[Rule, ...]:
    """The hand-written anti-HCV test rules."""
    return (
        Rule("hcv1", (Fact("antihcv", "reactive"),), Fact("hcv", "positive")),
        Rule("hcv2", (Fact("antihcv", "nonreactive"),), Fact("hcv", "negative")),
    )


def literal_hbv_rules() -> tuple[Rule, ...]:
    """The literal hand-written HBV rule block, kept only for inspection.

    It disagrees with the stored cases (and with itself: a non-reactive
    HBsAg is claimed positive in one rule and negative in another), so it is
    never part of the default knowledge base.
    """
    return (
        Rule("lit1", (Fact("hbsagreact", "yes"),), Fact("hbv", "positive")),
        Rule("lit2", (Fact("hbsagnonreact", "yes"),), Fact("hbv", "positive")),
        Rule("lit3", (Fact("hbsagreact", "yes"), Fact("igmantihbcreact", "yes")),
             Fact("hbv", "positive")),
        Rule("lit4", (Fact("hbsagreact", "yes"), Fact("igmantihbcreact", "no")),
             Fact("hbv", "positive")),
        Rule("lit5", (Fact("hbsagnonreact", "yes"), Fact("igmantihbcreact", "no")),
             Fact("hbv", "negative")),
    )


def default_advice() -> tuple[tuple[Fact, str], ...]:
    return (
        (Fact("hbv", "positive"),
         "HBV markers indicate infection; refer for confirmatory testing and specialist management."),
        (Fact("hbv", "negative"),
         "HBV markers do not indicate infection; advise routine prevention and vaccination review."),
        (Fact("hcv", "positive"),
         "Anti-HCV is reactive; refer for RNA confirmation and specialist management."),
        (Fact("hcv", "negative"),
         "Anti-HCV is non-reactive; no HCV infection indicated."),
    )


def build_bundled_kb() -> KnowledgeBase:
    """Assemble the shipped knowledge base from the raw corpus: authored
    rules plus the rules compiled from the induced tree, each rule addition
    mirrored in the audit trail."""
    schema = default_schema()
    cases = tuple(corpus_cases())
    domains = {a.name: a.domain for a in schema}
    tree = induce_tree(cases, CASE_ATTRIBUTES, domains)
    induced = tree_to_rules(tree, GOAL_ATTRIBUTE)

    from .rulelang import serialize_rule

    audit = tuple(
        AuditEntry(BUNDLE_TIMESTAMP, "system", "rule_added", (rule.id,),
                   serialize_rule(rule))
        for rule in induced)
    return KnowledgeBase(
        schema=schema, goal_attribute=GOAL_ATTRIBUTE,
        rules=authored_rules() + tuple(induced),
        cases=cases, advice=default_advice(), audit=audit)


def bundled_kb(literal_rules: bool = False) -> KnowledgeBase:
    """The shipped knowledge base, loaded from the packaged file."""
    from .store import loads

    kb = loads(_data_text("hepatitis.kb"))
    if literal_rules:
        kb = kb.with_rules(kb.rules + literal_hbv_rules())
    return kb


def write_bundled_kb(path: str) -> None:
    """Copy the packaged knowledge base to a working location."""
    from .store import save

    save(bundled_kb(), path)
