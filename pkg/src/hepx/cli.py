"""Command-line entry point.

Subcommands: consult (interactive or scripted Q&A), induce (experience
report, optionally writing the compiled rules back), generalize, validate,
import-prolog (legacy case files) and serve. Diagnostics go to stderr;
scripted output is byte-deterministic for a fixed KB and script.
"""

from __future__ import annotations

import os
import sys
from typing import Optional

import click

from . import corpus, learner, store
from .engine import AnswerError, Session, answer, explain_why
from .induction import induce_tree, tree_to_rules
from .model import AttributeDef, Fact, KnowledgeBase, validate_kb
from .rulelang import format_experience_report, serialize_rule

KB_ENV = "HEPX_KB"
ADDR_ENV = "HEPX_ADDR"
DEFAULT_ADDR = "127.0.0.1:8331"


def _load_kb(path: Optional[str]) -> tuple[str, KnowledgeBase]:
    if not path:
        path = os.environ.get(KB_ENV, "")
    if not path:
        raise click.UsageError(f"no knowledge base given (use --kb or ${KB_ENV})")
    try:
        return path, store.load(path)
    except (OSError, ValueError) as exc:
        raise click.ClickException(f"cannot load {path}: {exc}")


@click.group()
def main() -> None:
    """Adaptive rule-based consultation shell."""


@main.command()
@click.option("--kb", "kb_path", type=click.Path(), help=f"knowledge-base file (default ${KB_ENV})")
@click.option("--goal", "goal", default=None, help="goal attribute (default: the KB's goal)")
@click.option("--script", "script_path", type=click.Path(exists=True),
              help="read answers from a file instead of the terminal")
@click.option("--literal-rules", is_flag=True,
              help="also load the literal hand-written HBV rule block")
def consult(kb_path: Optional[str], goal: Optional[str], script_path: Optional[str],
            literal_rules: bool) -> None:
    """Run one consultation; exit 0 when concluded, 2 when unresolved."""
    _, kb = _load_kb(kb_path)
    if literal_rules:
        kb = kb.with_rules(kb.rules + corpus.literal_hbv_rules())
    goal = goal or kb.goal_attribute
    if kb.attribute(goal) is None:
        raise click.ClickException(f"goal attribute {goal!r} not in schema")

    script: list[str] = []
    if script_path:
        with open(script_path, "r", encoding="utf-8") as fh:
            script = [ln.strip() for ln in fh
                      if ln.strip() and not ln.strip().startswith("#")]
    scripted = bool(script_path)

    try:
        session = Session(kb, goal)
    except ValueError as exc:
        raise click.ClickException(str(exc))

    while session.status == "active" and session.pending_question is not None:
        attribute, _ = session.pending_question
        attr = kb.attribute(attribute)
        choices = "/".join(attr.domain) + "/unknown"
        if scripted:
            if not script:
                raise click.ClickException(f"script exhausted while asking about {attribute}")
            reply = script.pop(0)
        else:
            reply = click.prompt(f"? {attribute} ({choices})", type=str).strip()
        if reply == "why":
            click.echo(explain_why(session))
            continue
        try:
            answer(session, attribute, reply)
        except AnswerError as exc:
            if scripted:
                raise click.ClickException(str(exc))
            click.echo(f"  {exc}", err=True)
            continue
        if scripted:
            click.echo(f"? {attribute}: {reply}")

    if session.status == "concluded" and session.result is not None:
        fact = session.result.fact
        rules = ",".join(session.fired_rule_ids())
        suffix = f" [rule {rules}]" if rules else ""
        click.echo(f"= {fact}{suffix}")
        advice = kb.advice_for(fact)
        if advice:
            click.echo(f"advice: {advice}")
        return
    click.echo(f"= {goal} unknown")
    sys.exit(2)


@main.command()
@click.option("--kb", "kb_path", type=click.Path(), help=f"knowledge-base file (default ${KB_ENV})")
@click.option("--report", "show_report", is_flag=True, help="print the experience report")
@click.option("--emit-rules", "emit", is_flag=True,
              help="replace the stored induced rules with the fresh set")
def induce(kb_path: Optional[str], show_report: bool, emit: bool) -> None:
    """Induce the decision tree from the stored cases."""
    path, kb = _load_kb(kb_path)
    if not kb.cases:
        raise click.ClickException("the knowledge base holds no cases")
    domains = {a.name: a.domain for a in kb.schema}
    candidates = [a for a in kb.case_attributes() if a != kb.goal_attribute]
    tree = induce_tree(kb.cases, candidates, domains)
    if show_report or not emit:
        click.echo(format_experience_report(tree), nl=False)
    if emit:
        kb_store = store.KbStore(path)
        fresh, _ = learner.reinduce_rules(kb_store.kb)
        kb_store.commit(lambda current: learner.reinduce_rules(current)[1])
        if not show_report:
            for rule in fresh:
                click.echo(serialize_rule(rule))
        click.echo(f"wrote {len(fresh)} induced rule(s) to {path}", err=True)


@main.command()
@click.option("--kb", "kb_path", type=click.Path(), help=f"knowledge-base file (default ${KB_ENV})")
@click.option("--mode", type=click.Choice(["subsume", "experience"]), required=True)
@click.option("--threshold", type=int, default=9, show_default=True,
              help="experience dominance factor for experience mode")
@click.option("--dry-run", is_flag=True, help="report only; do not write the KB")
def generalize(kb_path: Optional[str], mode: str, threshold: int, dry_run: bool) -> None:
    """Generalize the rule set and print the resulting report."""
    path, kb = _load_kb(kb_path)
    if mode == "subsume":
        report, new_kb = learner.subsume_generalize(kb)
    else:
        report, new_kb = learner.experience_generalize(kb, threshold)
    click.echo(f"mode: {report.mode}")
    click.echo(f"removed: {', '.join(report.removed) or '-'}")
    click.echo(f"kept: {', '.join(report.kept) or '-'}")
    if report.added:
        click.echo(f"added: {', '.join(report.added)}")
        for rule_id in report.added:
            rule = new_kb.rule(rule_id)
            if rule is not None:
                click.echo(f"  {serialize_rule(rule)}")
    click.echo(f"exceptions: {', '.join(map(str, report.exceptions)) or '-'}")
    click.echo(f"accuracy: {report.accuracy_before:.4f} -> {report.accuracy_after:.4f}")
    if report.skipped:
        click.echo("skipped (would change stored-case outcomes): "
                   + "; ".join(f"{g}<-{s}" for g, s in report.skipped))
    if not dry_run:
        kb_store = store.KbStore(path)
        if mode == "subsume":
            kb_store.commit(lambda current: learner.subsume_generalize(current)[1])
        else:
            kb_store.commit(lambda current: learner.experience_generalize(current, threshold)[1])
        click.echo(f"committed to {path}", err=True)


@main.command()
@click.option("--kb", "kb_path", type=click.Path(), help=f"knowledge-base file (default ${KB_ENV})")
def validate(kb_path: Optional[str]) -> None:
    """Check the knowledge base; exit 1 when errors are found."""
    _, kb = _load_kb(kb_path)
    diagnostics = validate_kb(kb)
    for diag in diagnostics:
        click.echo(str(diag))
    if any(d.severity == "error" for d in diagnostics):
        sys.exit(1)


@main.command("import-prolog")
@click.option("--cases", "cases_path", type=click.Path(exists=True), required=True,
              help="legacy Prolog case file")
@click.option("--out", "out_path", type=click.Path(), required=True,
              help="knowledge-base file to write")
@click.option("--goal", "goal", default="hbv", show_default=True,
              help="goal attribute the case labels belong to")
def import_prolog(cases_path: str, out_path: str, goal: str) -> None:
    """Convert a Prolog-style case file into a fresh knowledge base."""
    with open(cases_path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        cases = corpus.parse_prolog_cases(text, goal_attribute=goal)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    if not cases:
        raise click.ClickException("no case clauses found")

    seen: list[str] = []
    values: dict[str, list[str]] = {}
    labels: list[str] = []
    for case in cases:
        for obs in case.observations:
            if obs.attribute not in seen:
                seen.append(obs.attribute)
            bucket = values.setdefault(obs.attribute, [])
            if obs.value not in bucket:
                bucket.append(obs.value)
        if case.label.value not in labels:
            labels.append(case.label.value)

    def domain_for(vals: list[str]) -> tuple[str, ...]:
        if set(vals) <= {"yes", "no"}:
            return ("yes", "no")
        return tuple(vals)

    schema = tuple(AttributeDef(name, domain_for(values[name]), askable=True)
                   for name in seen)
    goal_domain = ("positive", "negative") if set(labels) <= {"positive", "negative"} \
        else tuple(labels)
    schema += (AttributeDef(goal, goal_domain, askable=False),)
    kb = KnowledgeBase(schema, goal, cases=tuple(cases))
    store.save(kb, out_path)
    click.echo(f"imported {len(cases)} case(s) into {out_path}", err=True)


@main.command()
@click.option("--kb", "kb_path", type=click.Path(), help=f"knowledge-base file (default ${KB_ENV})")
@click.option("--addr", default=None, help=f"bind address HOST:PORT (default ${ADDR_ENV} or {DEFAULT_ADDR})")
def serve(kb_path: Optional[str], addr: Optional[str]) -> None:
    """Run the HTTP consultation service."""
    import uvicorn

    from .service import create_app

    path, _ = _load_kb(kb_path)
    addr = addr or os.environ.get(ADDR_ENV, DEFAULT_ADDR)
    host, _, port_text = addr.rpartition(":")
    if not host or not port_text.isdigit():
        raise click.ClickException(f"bad address {addr!r}, expected HOST:PORT")
    app = create_app(store.KbStore(path))
    uvicorn.run(app, host=host, port=int(port_text), log_level="warning")


if __name__ == "__main__":
    main()
