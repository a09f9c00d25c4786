import os
import random

import pytest

from generators import random_kb
from hepx.corpus import bundled_kb, build_bundled_kb
from hepx.learner import record_firing, reinduce_rules, subsume_generalize
from hepx.model import Fact
from hepx.store import (KbLoadError, KbStore, dumps, load, loads, replay_audit,
                        save)


class TestLoad:
    def test_bundled_file_contents(self, bundle_path):
        kb = load(bundle_path)
        assert len(kb.cases) == 32
        assert kb.goal_attribute == "hbv"
        assert kb.rule("hcv1").conclusion == Fact("hcv", "positive")
        assert kb.rule("hcv2").conclusion == Fact("hcv", "negative")
        induced = [r for r in kb.rules if r.origin == "induced"]
        assert len(induced) == 7

    def test_empty_file_is_an_error(self, tmp_path):
        path = tmp_path / "empty.kb"
        path.write_text("")
        with pytest.raises(KbLoadError):
            load(str(path))

    def test_version_mismatch(self):
        with pytest.raises(KbLoadError) as exc:
            loads("kbv9\n@schema\nATTR a: yes, no [askable, goal]\n")
        assert "version" in str(exc.value)

    def test_unknown_section_is_an_error(self):
        text = "kbv1\n@schema\nATTR a: yes, no [askable, goal]\n@wat\n"
        with pytest.raises(KbLoadError) as exc:
            loads(text)
        assert "@wat" in str(exc.value)

    def test_out_of_order_sections_rejected(self):
        text = "kbv1\n@rules\n@schema\nATTR a: yes, no [askable, goal]\n"
        with pytest.raises(KbLoadError):
            loads(text)

    def test_parse_errors_carry_line_numbers(self):
        text = "kbv1\n@schema\nATTR a: yes, no [askable, goal]\n@rules\nRULE broken\n"
        with pytest.raises(KbLoadError) as exc:
            loads(text)
        assert exc.value.line == 5

    def test_missing_goal_is_an_error(self):
        with pytest.raises(KbLoadError):
            loads("kbv1\n@schema\nATTR a: yes, no [askable]\n")

    def test_ragged_cases_rejected(self):
        text = ("kbv1\n@schema\n"
                "ATTR a: yes, no [askable]\nATTR b: yes, no [askable]\n"
                "ATTR g: positive, negative [goal]\n"
                "@cases\nCASE 1 positive: a=yes, b=yes\nCASE 2 negative: a=no\n")
        with pytest.raises(KbLoadError):
            loads(text)

    def test_prolog_case_lines_accepted_in_cases_section(self):
        text = ("kbv1\n@schema\n"
                "ATTR a: yes, no [askable]\n"
                "ATTR hbv: positive, negative [goal]\n"
                "@cases\nhepatitis(1,positive,[a=yes]).\n")
        kb = loads(text)
        assert kb.cases[0].id == 1


class TestRoundTrip:
    def test_bundle_save_load_byte_stable(self, bundle, tmp_path):
        path = tmp_path / "a.kb"
        save(bundle, str(path))
        first = path.read_bytes()
        again = load(str(path))
        save(again, str(path))
        assert path.read_bytes() == first
        assert again == bundle

    def test_packaged_file_is_the_canonical_dump(self, bundle_path):
        with open(bundle_path, "r", encoding="utf-8", newline="") as fh:
            text = fh.read()
        assert dumps(loads(text)) == text
        # The shipped file must match a fresh build from the raw corpus.
        assert dumps(build_bundled_kb()) == text

    def test_50_random_kbs_round_trip(self):
        rng = random.Random(31415)
        for _ in range(50):
            kb = random_kb(rng, with_cases=True)
            text = dumps(kb)
            again = loads(text)
            assert dumps(again) == text
            assert again == kb

    def test_zero_mutations_leave_file_untouched(self, bundle_path):
        before = open(bundle_path, "rb").read()
        store = KbStore(bundle_path)
        store.commit(lambda kb: kb)
        assert open(bundle_path, "rb").read() == before


class TestAtomicity:
    def test_injected_crash_preserves_previous_file(self, bundle_path, monkeypatch):
        before = open(bundle_path, "rb").read()
        store = KbStore(bundle_path)

        def boom(src, dst):
            raise OSError("simulated crash between temp write and rename")

        monkeypatch.setattr(os, "replace", boom)
        with pytest.raises(OSError):
            store.commit(lambda kb: record_firing(kb, "hcv1"))
        monkeypatch.undo()
        assert open(bundle_path, "rb").read() == before
        assert load(bundle_path) == bundled_kb()
        leftovers = [f for f in os.listdir(os.path.dirname(bundle_path))
                     if f.startswith(".kb-")]
        assert leftovers == []

    def test_acknowledged_commit_survives_reload(self, bundle_path):
        store = KbStore(bundle_path)
        store.commit(lambda kb: record_firing(kb, "r2", now="2026-01-02T00:00:00Z"))
        reloaded = load(bundle_path)
        assert reloaded.rule("r2").stats.firings == 1
        assert reloaded.audit[-1].action == "stats_updated"


class TestAuditReplay:
    def test_bundle_audit_reconstructs_rule_list(self, bundle):
        assert replay_audit(bundle) == bundle.rules

    def test_replay_after_firings_and_generalization(self, bundle):
        kb = record_firing(bundle, "r2", now="2026-01-02T00:00:00Z")
        kb = record_firing(kb, "r2", now="2026-01-02T00:00:01Z")
        _, kb = subsume_generalize(kb, now="2026-01-02T00:00:02Z")
        baseline = [r for r in bundled_kb().rules if r.origin == "authored"]
        assert replay_audit(kb, baseline) == kb.rules

    def test_replay_after_reinduction(self, bundle):
        _, kb = reinduce_rules(bundle, now="2026-01-02T00:00:00Z")
        assert replay_audit(kb) == kb.rules

    def test_replay_after_discovery(self, bundle):
        from hepx.learner import DiscoveryProposal, commit_discovery

        proposal = DiscoveryProposal(
            session_id="s", context=(),
            premises=(Fact("symptoms", "yes"), Fact("hiv", "positive")),
            conclusion=Fact("hbv", "positive"), expert="dr_alem")
        _, kb = commit_discovery(bundle, proposal, now="2026-01-02T00:00:00Z")
        assert replay_audit(kb) == kb.rules
        # Round-trip keeps the expert identity on the audit entry.
        again = loads(dumps(kb))
        assert again.audit[-1].note == "dr_alem"
        assert replay_audit(again) == again.rules
