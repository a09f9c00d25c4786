"""HTTP consultation service.

Thin adapter over the engine and learner: all consultation state lives
server-side keyed by session id, every KB mutation goes through the
single-writer store, and replaying an answer is idempotent (the same view
comes back and no firing is counted twice). Error bodies are always
``{"code": ..., "message": ..., "details": ...}``.
"""

from __future__ import annotations

import threading
import time
import uuid
from typing import Any, Optional

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse

from . import learner
from .engine import (AnswerError, Session, SessionStateError, answer,
                     explain_how, explain_why)
from .induction import induce_tree, tree_to_rules
from .model import Fact, KnowledgeBase
from .rulelang import format_experience_report, serialize_case, serialize_rule
from .store import KbStore

DEFAULT_SESSION_TIMEOUT = 30 * 60.0


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, details: Any = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.details = details


class _Entry:
    def __init__(self, session: Session):
        self.session = session
        self.answers: list[tuple[str, str]] = []
        self.fired_recorded = False
        self.proposal: Optional[learner.DiscoveryProposal] = None
        self.touched = time.monotonic()


class SessionManager:
    """Server-side session registry with idle expiry."""

    def __init__(self, store: KbStore, timeout: float = DEFAULT_SESSION_TIMEOUT):
        self.store = store
        self.timeout = timeout
        self._lock = threading.Lock()
        self._entries: dict[str, _Entry] = {}

    def create(self, goal: str, facts: dict[str, str]) -> _Entry:
        kb = self.store.kb
        if kb.attribute(goal) is None:
            raise ApiError(422, "unknown_goal", f"goal attribute {goal!r} is not in the schema")
        initial = []
        for attr_name, value in facts.items():
            attr = kb.attribute(attr_name)
            if attr is None:
                raise ApiError(422, "unknown_attribute", f"attribute {attr_name!r} is not in the schema")
            if not attr.allows(value):
                raise ApiError(422, "value_outside_domain",
                               f"{attr_name}={value} is outside {attr.domain}",
                               details={"attribute": attr_name, "allowed": list(attr.domain)})
            initial.append(Fact(attr_name, value))
        session = Session(kb, goal, initial, session_id=uuid.uuid4().hex[:12])
        entry = _Entry(session)
        with self._lock:
            self._entries[session.id] = entry
        self._record_firings(entry)
        return entry

    def get(self, session_id: str) -> _Entry:
        with self._lock:
            entry = self._entries.get(session_id)
            if entry is not None and time.monotonic() - entry.touched > self.timeout:
                del self._entries[session_id]
                entry = None
        if entry is None:
            raise ApiError(404, "unknown_session", f"no session {session_id!r}")
        entry.touched = time.monotonic()
        return entry

    def _record_firings(self, entry: _Entry) -> None:
        """Count rule executions once per concluded consultation."""
        session = entry.session
        if session.status != "concluded" or entry.fired_recorded:
            return
        entry.fired_recorded = True
        rule_ids = session.fired_rule_ids()
        if not rule_ids:
            return

        def mutate(kb: KnowledgeBase) -> KnowledgeBase:
            for rule_id in rule_ids:
                if kb.rule(rule_id) is not None:
                    kb = learner.record_firing(kb, rule_id)
            return kb

        self.store.commit(mutate)


def _question_payload(kb: KnowledgeBase, attribute: str) -> dict:
    attr = kb.attribute(attribute)
    domain = list(attr.domain) if attr else []
    return {
        "attribute": attribute,
        "prompt": f"What is the value of {attribute}?",
        "answers": domain + ["unknown"],
    }


def session_view(entry: _Entry) -> dict:
    session = entry.session
    view: dict[str, Any] = {
        "id": session.id,
        "goal": session.goal,
        "status": session.status,
        "facts": session.memory.mapping(),
        "answers_applied": len(entry.answers),
        "pending_question": None,
        "result": None,
    }
    if session.pending_question is not None:
        view["pending_question"] = _question_payload(session.kb, session.pending_question[0])
    if session.status == "concluded" and session.result is not None:
        fact = session.result.fact
        view["result"] = {
            "attribute": fact.attribute,
            "value": fact.value,
            "advice": session.kb.advice_for(fact),
            "rules": session.fired_rule_ids(),
        }
    if session.status in ("unknown", "awaiting_discovery"):
        view["missing"] = [sorted(str(c) for c in group) for group in session.missing]
    return view


def _rule_json(rule) -> dict:
    return {
        "id": rule.id,
        "premises": [str(p) for p in rule.premises],
        "conclusion": str(rule.conclusion),
        "support": rule.stats.support,
        "firings": rule.stats.firings,
        "experience": rule.stats.experience,
        "origin": rule.origin,
        "text": serialize_rule(rule),
    }


def _report_json(report: learner.GeneralizationReport) -> dict:
    return {
        "mode": report.mode,
        "removed": list(report.removed),
        "kept": list(report.kept),
        "added": list(report.added),
        "exceptions": list(report.exceptions),
        "accuracy_before": report.accuracy_before,
        "accuracy_after": report.accuracy_after,
        "skipped": [list(pair) for pair in report.skipped],
    }


def create_app(store: KbStore, *, session_timeout: float = DEFAULT_SESSION_TIMEOUT) -> FastAPI:
    app = FastAPI(title="hepx consultation service")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    manager = SessionManager(store, timeout=session_timeout)
    app.state.manager = manager

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError) -> JSONResponse:
        return JSONResponse(status_code=exc.status, content={
            "code": exc.code, "message": exc.message, "details": exc.details})

    async def _json_body(request: Request) -> dict:
        try:
            body = await request.json()
        except Exception:
            raise ApiError(422, "bad_json", "request body is not valid JSON")
        if not isinstance(body, dict):
            raise ApiError(422, "bad_json", "request body must be a JSON object")
        return body

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request) -> dict:
        body = await _json_body(request)
        goal = body.get("goal") or store.kb.goal_attribute
        facts = body.get("facts") or {}
        if not isinstance(facts, dict):
            raise ApiError(422, "bad_facts", "facts must map attributes to values")
        entry = manager.create(goal, facts)
        return session_view(entry)

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str) -> dict:
        return session_view(manager.get(session_id))

    @app.post("/sessions/{session_id}/answer")
    async def post_answer(session_id: str, request: Request) -> dict:
        body = await _json_body(request)
        attribute = body.get("attribute")
        value = body.get("value")
        if not attribute or value is None:
            raise ApiError(422, "bad_answer", "answer needs attribute and value")
        entry = manager.get(session_id)
        session = entry.session
        pending = session.pending_question
        if pending is not None and pending[0] == attribute:
            try:
                answer(session, attribute, value)
            except AnswerError as exc:
                raise ApiError(422, "value_outside_domain", str(exc))
            entry.answers.append((attribute, value))
            manager._record_firings(entry)
            return session_view(entry)
        if entry.answers and entry.answers[-1] == (attribute, value):
            # Idempotent retry of the last applied answer.
            return session_view(entry)
        if pending is None:
            raise ApiError(409, "no_pending_question",
                           f"session is {session.status}; nothing to answer")
        raise ApiError(409, "wrong_question",
                       f"pending question is about {pending[0]!r}, not {attribute!r}")

    @app.get("/sessions/{session_id}/explanation")
    async def get_explanation(session_id: str, mode: str = "why") -> dict:
        entry = manager.get(session_id)
        try:
            if mode == "why":
                text = explain_why(entry.session)
            elif mode == "how":
                text = explain_how(entry.session)
            else:
                raise ApiError(422, "bad_mode", "mode must be 'why' or 'how'")
        except SessionStateError as exc:
            raise ApiError(409, "wrong_session_state", str(exc))
        return {"mode": mode, "text": text}

    @app.post("/sessions/{session_id}/discovery")
    async def open_discovery(session_id: str) -> dict:
        entry = manager.get(session_id)
        if entry.session.status == "awaiting_discovery" and entry.proposal is not None:
            proposal = entry.proposal
        else:
            try:
                proposal = learner.propose_discovery(entry.session)
            except ValueError as exc:
                raise ApiError(409, "wrong_session_state", str(exc))
            entry.proposal = proposal
        goal_attr = store.kb.attribute(entry.session.goal)
        return {
            "session_id": proposal.session_id,
            "premises": [{"attribute": f.attribute, "value": f.value}
                         for f in proposal.premises],
            "conclusion_attribute": entry.session.goal,
            "goal_values": list(goal_attr.domain) if goal_attr else [],
        }

    @app.post("/sessions/{session_id}/discovery/abort")
    async def abort_discovery(session_id: str) -> dict:
        entry = manager.get(session_id)
        try:
            learner.abort_discovery(entry.session)
        except ValueError as exc:
            raise ApiError(409, "wrong_session_state", str(exc))
        entry.proposal = None
        return session_view(entry)

    @app.post("/sessions/{session_id}/discovery/commit")
    async def commit_discovery(session_id: str, request: Request) -> dict:
        body = await _json_body(request)
        entry = manager.get(session_id)
        session = entry.session
        if session.status != "awaiting_discovery":
            raise ApiError(409, "wrong_session_state",
                           f"session is {session.status}, not awaiting discovery")
        try:
            premises = tuple(Fact(p["attribute"], p["value"]) for p in body.get("premises", []))
            conclusion_body = body.get("conclusion") or {}
            conclusion = Fact(conclusion_body["attribute"], conclusion_body["value"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ApiError(422, "bad_proposal", f"malformed proposal: {exc}")
        domains = tuple((name, tuple(values)) for name, values
                        in (body.get("new_attribute_domains") or {}).items())
        proposal = learner.DiscoveryProposal(
            session_id=session.id, context=entry.proposal.context if entry.proposal else (),
            premises=premises, conclusion=conclusion,
            expert=body.get("expert", ""), new_attribute_domains=domains)

        result_holder: dict[str, Any] = {}

        def mutate(kb: KnowledgeBase) -> KnowledgeBase:
            try:
                result, new_kb = learner.commit_discovery(
                    kb, proposal, override=bool(body.get("override", False)),
                    session=session)
            except ValueError as exc:
                raise ApiError(422, "bad_proposal", str(exc))
            result_holder["result"] = result
            return new_kb

        store.commit(mutate)
        result = result_holder["result"]
        if result.status == "accepted":
            # The discovery commit is the audited event; the automatic
            # re-run that concludes the session does not also count firings.
            entry.fired_recorded = True
            entry.proposal = None
        return {
            "validation": {
                "status": result.status,
                "conflicting_cases": list(result.conflicting_cases),
                "subsumed_existing": list(result.subsumed_existing),
            },
            "session": session_view(entry),
        }

    @app.post("/kb/induce")
    async def kb_induce(request: Request) -> dict:
        try:
            body = await request.json()
        except Exception:
            body = {}
        if not isinstance(body, dict):
            body = {}
        kb = store.kb
        if not kb.cases:
            raise ApiError(409, "no_cases", "the knowledge base holds no cases to induce from")
        domains = {a.name: a.domain for a in kb.schema}
        candidates = [a for a in kb.case_attributes() if a != kb.goal_attribute]
        tree = induce_tree(kb.cases, candidates, domains)
        rules = tree_to_rules(tree, kb.goal_attribute)
        report = format_experience_report(tree)
        if body.get("emit"):
            store.commit(lambda current: learner.reinduce_rules(current)[1])
        return {"report": report, "rules": [_rule_json(r) for r in rules]}

    @app.post("/kb/generalize")
    async def kb_generalize(request: Request) -> dict:
        body = await _json_body(request)
        mode = body.get("mode")
        threshold = int(body.get("threshold", 9))
        dry_run = bool(body.get("dry_run", True))
        if mode not in ("subsume", "experience"):
            raise ApiError(422, "bad_mode", "mode must be 'subsume' or 'experience'")
        if dry_run:
            if mode == "subsume":
                report, _ = learner.subsume_generalize(store.kb)
            else:
                report, _ = learner.experience_generalize(store.kb, threshold)
        else:
            holder: dict[str, learner.GeneralizationReport] = {}

            def mutate(kb: KnowledgeBase) -> KnowledgeBase:
                if mode == "subsume":
                    report, new_kb = learner.subsume_generalize(kb)
                else:
                    report, new_kb = learner.experience_generalize(kb, threshold)
                holder["report"] = report
                return new_kb

            store.commit(mutate)
            report = holder["report"]
        return _report_json(report)

    @app.get("/kb/rules")
    async def kb_rules() -> list:
        return [_rule_json(r) for r in store.kb.rules]

    @app.get("/kb/cases")
    async def kb_cases() -> list:
        return [{
            "id": c.id,
            "label": str(c.label),
            "observations": c.as_mapping(),
            "text": serialize_case(c),
        } for c in store.kb.cases]

    @app.get("/kb/audit")
    async def kb_audit() -> list:
        return [{
            "timestamp": e.timestamp,
            "actor": e.actor,
            "action": e.action,
            "rule_ids": list(e.rule_ids),
            "text": e.text,
            "note": e.note,
        } for e in store.kb.audit]

    @app.get("/kb/schema")
    async def kb_schema() -> dict:
        kb = store.kb
        return {
            "goal_attribute": kb.goal_attribute,
            "attributes": [{
                "name": a.name,
                "domain": list(a.domain),
                "askable": a.askable,
            } for a in kb.schema],
        }

    @app.get("/kb/experience-report")
    async def kb_report() -> PlainTextResponse:
        kb = store.kb
        if not kb.cases:
            raise ApiError(409, "no_cases", "the knowledge base holds no cases to report on")
        domains = {a.name: a.domain for a in kb.schema}
        candidates = [a for a in kb.case_attributes() if a != kb.goal_attribute]
        tree = induce_tree(kb.cases, candidates, domains)
        return PlainTextResponse(format_experience_report(tree))

    return app
