import pytest

from hepx.corpus import bundled_kb
from hepx.model import (AttributeDef, CaseRecord, ExperienceStats, Fact,
                        KnowledgeBase, Rule, experience, rule_sort_key,
                        validate_kb)


def kb_of(rules, goal="g", cases=()):
    schema = (
        AttributeDef("a", ("yes", "no")),
        AttributeDef("b", ("yes", "no")),
        AttributeDef("g", ("positive", "negative"), askable=False),
    )
    return KnowledgeBase(schema, goal, tuple(rules), tuple(cases))


class TestValueTypes:
    def test_fact_rejects_bad_identifiers(self):
        with pytest.raises(ValueError):
            Fact("2bad", "yes")
        with pytest.raises(ValueError):
            Fact("a", "")

    def test_attribute_domain_must_be_unique_and_nonempty(self):
        with pytest.raises(ValueError):
            AttributeDef("a", ())
        with pytest.raises(ValueError):
            AttributeDef("a", ("yes", "yes"))

    def test_rule_invariants(self):
        with pytest.raises(ValueError):
            Rule("r1", (), Fact("g", "positive"))  # premise-free, not default
        with pytest.raises(ValueError):
            Rule("r1", (Fact("a", "yes"), Fact("a", "no")), Fact("g", "positive"))
        with pytest.raises(ValueError):
            Rule("r1", (Fact("g", "positive"),), Fact("g", "negative"))
        Rule("d1", (), Fact("g", "positive"), is_default=True)

    def test_rule_equality_ignores_premise_order(self):
        a = Rule("r1", (Fact("a", "yes"), Fact("b", "no")), Fact("g", "positive"))
        b = Rule("r1", (Fact("b", "no"), Fact("a", "yes")), Fact("g", "positive"))
        assert a == b
        assert hash(a) == hash(b)

    def test_case_record_invariants(self):
        with pytest.raises(ValueError):
            CaseRecord(0, Fact("g", "positive"), (Fact("a", "yes"),))
        with pytest.raises(ValueError):
            CaseRecord(1, Fact("g", "positive"),
                       (Fact("a", "yes"), Fact("a", "no")))

    def test_case_equality_ignores_observation_order(self):
        a = CaseRecord(1, Fact("g", "positive"), (Fact("a", "yes"), Fact("b", "no")))
        b = CaseRecord(1, Fact("g", "positive"), (Fact("b", "no"), Fact("a", "yes")))
        assert a == b

    def test_rule_sort_key_orders_digit_runs_numerically(self):
        ids = ["r10", "r2", "r1", "hcv1", "d3"]
        assert sorted(ids, key=rule_sort_key) == ["d3", "hcv1", "r1", "r2", "r10"]


class TestExperience:
    def test_support_only(self):
        assert experience(Rule("r", (Fact("a", "yes"),), Fact("g", "positive"),
                               ExperienceStats(support=9))) == 9

    def test_zero(self):
        assert experience(Rule("r", (Fact("a", "yes"),), Fact("g", "positive"))) == 0

    def test_sum(self):
        assert experience(Rule("r", (Fact("a", "yes"),), Fact("g", "positive"),
                               ExperienceStats(support=1, firings=3))) == 4

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            ExperienceStats(support=-1)


class TestValidateKb:
    def test_empty_kb_is_clean(self):
        assert validate_kb(kb_of(())) == []

    def test_equal_premises_opposite_conclusions(self):
        # Brute-force pairwise comparison is the oracle here: exactly one
        # conflicting pair exists, so exactly one diagnostic must come back.
        rules = (
            Rule("r1", (Fact("a", "yes"),), Fact("g", "positive")),
            Rule("r2", (Fact("a", "yes"),), Fact("g", "negative")),
            Rule("r3", (Fact("b", "yes"),), Fact("g", "negative")),
        )
        diags = [d for d in validate_kb(kb_of(rules)) if d.code == "contradictory_rules"]
        assert len(diags) == 1
        assert set(diags[0].rule_ids) == {"r1", "r2"}

    def test_duplicate_rule_ids_flagged(self):
        rules = (
            Rule("r1", (Fact("a", "yes"),), Fact("g", "positive")),
            Rule("r1", (Fact("b", "yes"),), Fact("g", "positive")),
        )
        assert any(d.code == "duplicate_rule_id" for d in validate_kb(kb_of(rules)))

    def test_contradictory_cases_flagged(self):
        cases = (
            CaseRecord(1, Fact("g", "positive"), (Fact("a", "yes"), Fact("b", "no"))),
            CaseRecord(2, Fact("g", "negative"), (Fact("b", "no"), Fact("a", "yes"))),
        )
        diags = validate_kb(kb_of((), cases=cases))
        assert any(d.code == "contradictory_cases" and set(d.case_ids) == {1, 2}
                   for d in diags)

    def test_value_outside_domain_flagged(self):
        rules = (Rule("r1", (Fact("a", "maybe"),), Fact("g", "positive")),)
        assert any(d.code == "value_outside_domain" for d in validate_kb(kb_of(rules)))

    def test_idempotent_and_side_effect_free(self):
        kb = bundled_kb(literal_rules=True)
        first = validate_kb(kb)
        second = validate_kb(kb)
        assert first == second

    def test_default_bundle_is_clean(self, bundle):
        assert validate_kb(bundle) == []

    def test_literal_reactive_rule_contradicts_case_27(self):
        # The hand-written single-premise rule (HBsAg reactive -> positive)
        # clashes with stored case 27 (reactive, IgM reactive, negative).
        kb = bundled_kb(literal_rules=True)
        diags = validate_kb(kb)
        hits = [d for d in diags
                if d.code == "rule_contradicts_cases" and "lit1" in d.rule_ids]
        assert len(hits) == 1
        assert hits[0].case_ids == (27,)


class TestBundledCorpus:
    def test_exactly_32_cases(self, corpus):
        assert len(corpus) == 32
        assert sorted(c.id for c in corpus) == list(range(1, 33))

    def test_label_partition_15_positive_17_negative(self, corpus):
        positives = [c for c in corpus if c.label.value == "positive"]
        assert len(positives) == 15
        assert len(corpus) - len(positives) == 17

    def test_every_observation_is_yes_or_no(self, corpus):
        assert {o.value for c in corpus for o in c.observations} == {"yes", "no"}

    def test_duplicate_observation_records_stay_distinct(self, corpus):
        by_id = {c.id: c for c in corpus}
        for a, b in ((16, 17), (24, 25)):
            assert set(by_id[a].observations) == set(by_id[b].observations)
            assert by_id[a].label == by_id[b].label
            assert by_id[a].id != by_id[b].id
