import random
import threading

import pytest

from generators import random_kb
from hepx.engine import Session, answer, forward_chain
from hepx.learner import (DiscoveryProposal, UnknownRuleError, abort_discovery,
                          case_accuracy, commit_discovery, experience_generalize,
                          misclassified_cases, propose_discovery, record_firing,
                          replay_cases, subsume_generalize)
from hepx.model import (AttributeDef, ExperienceStats, Fact, KnowledgeBase,
                        Rule, experience)
from hepx.store import KbStore

YESNO = ("yes", "no")


def reference_generalization_rules():
    """The four-rule teaching set: one over-specified rule plus the three
    broader rules it collapses into."""
    base = (Fact("symptoms", "yes"), Fact("jaundice", "yes"))
    return (
        Rule("rule1", base + (Fact("hbsagreact", "yes"), Fact("hbsagnonreact", "yes"),
                              Fact("igmantihbcreact", "yes")),
             Fact("hbv", "positive"), ExperienceStats(2)),
        Rule("rule2", base + (Fact("hbsagreact", "yes"),),
             Fact("hbv", "positive"), ExperienceStats(3)),
        Rule("rule3", base + (Fact("hbsagnonreact", "yes"),),
             Fact("hbv", "positive"), ExperienceStats(4)),
        Rule("rule4", base + (Fact("igmantihbcreact", "yes"),),
             Fact("hbv", "positive"), ExperienceStats(5)),
    )


def rules_kb(rules, cases=()):
    names = sorted({p.attribute for r in rules for p in r.premises} | {"hbv"})
    schema = tuple(AttributeDef(n, ("positive", "negative") if n == "hbv" else YESNO,
                                askable=n != "hbv") for n in names)
    return KnowledgeBase(schema, "hbv", tuple(rules), tuple(cases))


class TestSubsumeGeneralize:
    def test_reference_four_rule_set(self):
        kb = rules_kb(reference_generalization_rules())
        report, new_kb = subsume_generalize(kb, now="2026-01-02T00:00:00Z")
        assert report.mode == "subsume"
        assert report.removed == ("rule1",)
        assert {r.id for r in new_kb.rules} == {"rule2", "rule3", "rule4"}
        # The broadest subsumer in id order absorbs the removed experience.
        assert new_kb.rule("rule2").stats.experience == 5

    def test_experience_is_conserved(self):
        kb = rules_kb(reference_generalization_rules())
        before = sum(experience(r) for r in kb.rules)
        _, new_kb = subsume_generalize(kb)
        assert sum(experience(r) for r in new_kb.rules) == before

    def test_byte_identical_duplicates_collapse(self):
        twin = (Fact("symptoms", "yes"),)
        kb = rules_kb((
            Rule("ra", twin, Fact("hbv", "positive"), ExperienceStats(2)),
            Rule("rb", twin, Fact("hbv", "positive"), ExperienceStats(3)),
        ))
        report, new_kb = subsume_generalize(kb)
        assert report.removed == ("rb",)
        assert new_kb.rule("ra").stats.experience == 5

    def test_fixpoint_leaves_no_subsumption_pairs(self):
        kb = rules_kb(reference_generalization_rules())
        _, new_kb = subsume_generalize(kb)
        report2, final_kb = subsume_generalize(new_kb)
        assert report2.removed == ()
        assert final_kb.rules == new_kb.rules

    def test_outcome_preservation_on_100_random_kbs(self):
        rng = random.Random(97531)
        removals = 0
        for _ in range(100):
            kb = random_kb(rng, subsumption_pairs=True, with_cases=True)
            before = replay_cases(kb)
            report, new_kb = subsume_generalize(kb)
            assert replay_cases(new_kb) == before
            removals += len(report.removed)
            # Removed rules must each have had a same-conclusion generalizer.
            for removed_id in report.removed:
                removed = kb.rule(removed_id)
                assert any(r.id != removed_id
                           and r.conclusion == removed.conclusion
                           and r.premise_set <= removed.premise_set
                           for r in kb.rules)
        assert removals > 0

    def test_audit_records_each_absorption(self):
        kb = rules_kb(reference_generalization_rules())
        _, new_kb = subsume_generalize(kb, now="2026-01-02T00:00:00Z")
        entries = [e for e in new_kb.audit if e.action == "rule_generalized"]
        assert len(entries) == 1
        assert entries[0].rule_ids == ("rule1",)


class TestExperienceGeneralize:
    def test_corpus_sibling_merge_at_threshold_nine(self, bundle):
        report, new_kb = experience_generalize(bundle, 9, now="2026-01-02T00:00:00Z")
        assert set(report.removed) == {"r1", "r2"}
        assert len(report.added) == 1
        merged = new_kb.rule(report.added[0])
        assert merged.premises == (Fact("hbsagreact", "yes"),)
        assert merged.conclusion == Fact("hbv", "positive")
        assert merged.stats.experience == 10
        assert merged.origin == "generalized"
        assert report.exceptions == (27,)
        assert report.accuracy_before == pytest.approx(1.0)
        assert report.accuracy_after == pytest.approx(31 / 32)

    def test_exceptions_match_independent_replay(self, bundle):
        report, new_kb = experience_generalize(bundle, 9)
        assert report.exceptions == misclassified_cases(new_kb)
        assert report.accuracy_after == pytest.approx(
            1 - len(report.exceptions) / len(new_kb.cases))

    def test_threshold_boundary_blocks_the_merge(self, bundle):
        report, new_kb = experience_generalize(bundle, 10)
        assert report.removed == ()
        assert report.added == ()
        assert new_kb.rules == bundle.rules
        assert report.accuracy_after == pytest.approx(1.0)

    def test_same_conclusion_siblings_merge_without_exceptions(self):
        shared = (Fact("symptoms", "yes"),)
        kb = rules_kb((
            Rule("r1", shared + (Fact("jaundice", "yes"),), Fact("hbv", "positive"),
                 ExperienceStats(2), origin="induced"),
            Rule("r2", shared + (Fact("jaundice", "no"),), Fact("hbv", "positive"),
                 ExperienceStats(3), origin="induced"),
        ))
        report, new_kb = experience_generalize(kb, 9)
        assert set(report.removed) == {"r1", "r2"}
        merged = new_kb.rule(report.added[0])
        assert merged.premises == shared
        assert report.exceptions == ()
        assert report.accuracy_before == report.accuracy_after

    def test_threshold_must_be_positive(self, bundle):
        with pytest.raises(ValueError):
            experience_generalize(bundle, 0)

    def test_authored_rules_never_merge(self):
        kb = rules_kb((
            Rule("a1", (Fact("symptoms", "yes"),), Fact("hbv", "positive"),
                 ExperienceStats(9)),
            Rule("a2", (Fact("symptoms", "no"),), Fact("hbv", "negative"),
                 ExperienceStats(1)),
        ))
        report, _ = experience_generalize(kb, 9)
        assert report.removed == ()


class TestRecordFiring:
    def test_increments_from_zero(self, bundle):
        new_kb = record_firing(bundle, "hcv1", now="2026-01-02T00:00:00Z")
        assert new_kb.rule("hcv1").stats.firings == 1
        entry = new_kb.audit[-1]
        assert entry.action == "stats_updated"
        assert entry.rule_ids == ("hcv1",)
        assert entry.text == "support=0 firings=1"

    def test_nine_consultations_give_nine_firings(self, bundle):
        kb = bundle
        for _ in range(9):
            kb = record_firing(kb, "r2")
        assert kb.rule("r2").stats.firings == 9
        assert experience(kb.rule("r2")) == 18  # support 9 + firings 9

    def test_unknown_rule_id(self, bundle):
        with pytest.raises(UnknownRuleError):
            record_firing(bundle, "nope")

    def test_concurrent_sessions_lose_no_updates(self, bundle_path):
        store = KbStore(bundle_path)
        rule_ids = [r.id for r in store.kb.rules]
        per_rule = 5

        def worker(rule_id):
            for _ in range(per_rule):
                store.commit(lambda kb, rid=rule_id: record_firing(kb, rid))

        threads = [threading.Thread(target=worker, args=(rid,)) for rid in rule_ids]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        final = store.kb
        for rule_id in rule_ids:
            assert final.rule(rule_id).stats.firings == per_rule
        reloaded = KbStore(bundle_path).kb
        assert reloaded == final


def unresolved_reference_session(bundle):
    facts = tuple(Fact(a, "yes") for a in
                  ("symptoms", "jaundice", "hbsagnonreact", "igmantihbcreact"))
    session = Session(bundle, "hbv", facts)
    answer(session, "hbsagreact", "unknown")
    assert session.status == "unknown"
    return session


class TestProposeDiscovery:
    def test_reference_template_has_the_four_facts(self, bundle):
        session = unresolved_reference_session(bundle)
        proposal = propose_discovery(session)
        assert session.status == "awaiting_discovery"
        assert set(proposal.premises) == {
            Fact("symptoms", "yes"), Fact("jaundice", "yes"),
            Fact("hbsagnonreact", "yes"), Fact("igmantihbcreact", "yes")}
        assert proposal.conclusion is None

    def test_concluded_session_is_rejected(self, bundle):
        session = Session(bundle, "hbv", (Fact("hbv", "positive"),))
        with pytest.raises(ValueError):
            propose_discovery(session)

    def test_template_premises_subset_of_session_facts_on_random_sessions(self):
        rng = random.Random(2468)
        proposals = 0
        for _ in range(60):
            kb = random_kb(rng)
            sources = [a for a in kb.schema if a.askable]
            facts = tuple(Fact(a.name, rng.choice(a.domain))
                          for a in sources if rng.random() < 0.5)
            session = Session(kb, kb.goal_attribute, facts)
            while session.status == "active":
                attribute, _ = session.pending_question
                answer(session, attribute, "unknown")
            if session.status != "unknown":
                continue
            proposal = propose_discovery(session)
            assert set(proposal.premises) <= session.memory.facts()
            proposals += 1
        assert proposals > 0

    def test_abort_returns_to_unknown(self, bundle):
        session = unresolved_reference_session(bundle)
        propose_discovery(session)
        abort_discovery(session)
        assert session.status == "unknown"


class TestCommitDiscovery:
    def test_reference_flow_accepts_and_resolves(self, bundle):
        session = unresolved_reference_session(bundle)
        proposal = propose_discovery(session)
        proposal = DiscoveryProposal(
            session_id=proposal.session_id, context=proposal.context,
            premises=proposal.premises + (Fact("hiv", "positive"),),
            conclusion=Fact("hbv", "positive"), expert="dr_alem")
        audit_before = len(bundle.audit)
        result, new_kb = commit_discovery(bundle, proposal, session=session,
                                          now="2026-01-02T00:00:00Z")
        assert result.status == "accepted"
        assert result.conflicting_cases == ()
        assert len(new_kb.audit) == audit_before + 1
        added = new_kb.audit[-1]
        assert added.action == "rule_added" and added.actor == "expert"
        assert added.note == "dr_alem"
        # New attribute joined the schema, askable.
        hiv = new_kb.attribute("hiv")
        assert hiv is not None and hiv.askable
        # The triggering session resolved immediately.
        assert session.status == "concluded"
        assert session.result.fact == Fact("hbv", "positive")

    def test_conflicting_proposal_lists_the_nine_positive_cases(self, bundle):
        session = unresolved_reference_session(bundle)
        propose_discovery(session)
        proposal = DiscoveryProposal(
            session_id=session.id, context=(),
            premises=(Fact("hbsagreact", "yes"),),
            conclusion=Fact("hbv", "negative"), expert="dr_alem")
        result, new_kb = commit_discovery(bundle, proposal)
        assert result.status == "conflicts"
        assert result.conflicting_cases == (2, 7, 8, 10, 15, 18, 23, 26, 31)
        assert new_kb is bundle

    def test_override_commits_despite_conflicts(self, bundle):
        proposal = DiscoveryProposal(
            session_id="s", context=(),
            premises=(Fact("hbsagreact", "yes"),),
            conclusion=Fact("hbv", "negative"), expert="dr_alem")
        result, new_kb = commit_discovery(bundle, proposal, override=True)
        assert result.status == "accepted"
        assert any(r.origin == "discovered" for r in new_kb.rules)

    def test_monotone_growth_never_edits_existing_rules(self, bundle):
        session = unresolved_reference_session(bundle)
        proposal = propose_discovery(session)
        proposal = DiscoveryProposal(
            session_id=proposal.session_id, context=proposal.context,
            premises=proposal.premises + (Fact("hiv", "positive"),),
            conclusion=Fact("hbv", "positive"), expert="dr_alem")
        result, new_kb = commit_discovery(bundle, proposal, session=session)
        assert result.status == "accepted"
        assert new_kb.rules[:len(bundle.rules)] == bundle.rules
        assert len(new_kb.rules) == len(bundle.rules) + 1

    def test_wrong_conclusion_attribute_is_rejected(self, bundle):
        proposal = DiscoveryProposal(
            session_id="s", context=(), premises=(Fact("symptoms", "yes"),),
            conclusion=Fact("hcv", "positive"), expert="x")
        with pytest.raises(ValueError):
            commit_discovery(bundle, proposal)  # bundle goal is hbv

    def test_subsumed_existing_rules_are_reported(self, bundle):
        proposal = DiscoveryProposal(
            session_id="s", context=(), premises=(Fact("hbsagreact", "yes"),),
            conclusion=Fact("hbv", "positive"), expert="x")
        result, _ = commit_discovery(bundle, proposal, override=True)
        assert "r2" in result.subsumed_existing


class TestReplayOracle:
    def test_bundle_replays_clean(self, bundle):
        assert case_accuracy(bundle) == pytest.approx(1.0)
        assert misclassified_cases(bundle) == ()

    def test_replay_uses_forward_chaining(self, bundle):
        outcomes = replay_cases(bundle)
        case27 = next(c for c in bundle.cases if c.id == 27)
        memory, _ = forward_chain(bundle, case27.observations)
        assert outcomes[27] == memory.value("hbv") == "negative"
