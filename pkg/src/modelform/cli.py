"""Command-line surface.

Exit codes: 0 success, 1 domain error (violations at finalize, unknown
ids, validation failures), 2 usage error.  Every reporting command takes
``--json`` and then emits the same structure the HTTP API returns for the
equivalent request.
"""

from __future__ import annotations

import datetime as dt
import functools
import json
import sys
from pathlib import Path

import click

from . import assembly, codec, fixtures, query
from .errors import BadFilter, EditRejected, ModelformError
from .model import (
    GenericDocument,
    MemoryFragments,
    Party,
    Tag,
    TagKind,
    governing_spec,
    parse_path,
    validate_generic,
    walk_units,
)
from .service import error_payload, filter_from_params, generic_bundle, render_json, summary_json
from .store import Store


def _echo_json(obj):
    click.echo(json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False))


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ModelformError as exc:
            payload = error_payload(exc)
            if kwargs.get("as_json"):
                _echo_json(payload)
            else:
                click.echo(f"error: {exc.message}", err=True)
                for v in getattr(exc, "violations", []) or []:
                    marker = "pending" if v.pending else v.kind.value
                    click.echo(f"  [{marker}] {v.message}", err=True)
            sys.exit(1)

    return wrapper


@click.group()
@click.option(
    "--store",
    "store_path",
    envvar="MODELFORM_STORE",
    default="./store",
    show_default=True,
    help="Path to the document store.",
)
@click.pass_context
def main(ctx, store_path):
    """Constraint-driven contract assembly."""
    ctx.ensure_object(dict)
    ctx.obj["store_path"] = store_path


def _store(ctx) -> Store:
    return Store(ctx.obj["store_path"])


json_flag = click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")


# ---------------------------------------------------------------------------
# init
# ---------------------------------------------------------------------------


@main.command()
@click.option("--demo", is_flag=True, help="Install the model-form demo corpus.")
@click.pass_context
@handle_errors
def init(ctx, demo):
    """Create a new (optionally pre-seeded) store."""
    path = ctx.obj["store_path"]
    if demo:
        fixtures.install_demo_store(path)
        click.echo(f"store created at {path} with demo corpus")
    else:
        Store(path, create=True)
        click.echo(f"store created at {path}")


# ---------------------------------------------------------------------------
# generic
# ---------------------------------------------------------------------------


@main.group()
def generic():
    """Inspect, validate, and import generic documents."""


@generic.command("list")
@json_flag
@click.pass_context
@handle_errors
def generic_list(ctx, as_json):
    infos = _store(ctx).list_generics()
    if as_json:
        _echo_json(
            {
                "generics": [
                    {
                        "doc_type": i.doc_type,
                        "category": i.category,
                        "parts": i.parts,
                        "atomic_units": i.atomic_units,
                    }
                    for i in infos
                ]
            }
        )
        return
    for i in infos:
        click.echo(f"{i.doc_type}  [{i.category}]  {i.parts} parts, {i.atomic_units} atomic units")


@generic.command("show")
@click.argument("doc_type")
@json_flag
@click.pass_context
@handle_errors
def generic_show(ctx, doc_type, as_json):
    store = _store(ctx)
    if as_json:
        _echo_json(generic_bundle(store, doc_type))
        return
    g = store.get_generic(doc_type)
    click.echo(f"{g.doc_type}  [{g.category}]")
    if g.params:
        click.echo("parameters: " + ", ".join(f"${p.name}:{p.kind.value}" for p in g.params))
    for path, unit in walk_units(g):
        indent = "  " * len(path.labels)
        flag = "c" if unit.inclusion.value == "compulsory" else "o"
        versions = f"  versions {sorted(v.number for v in unit.versions)}" if unit.versions else ""
        click.echo(f"{indent}[{flag}] {path.leaf}{versions}")
    if g.constraints:
        click.echo("constraints:")
        for c in g.constraints:
            click.echo(f"  {codec.dump_constraint(c)}")


def _load_bundle(path: str) -> tuple[GenericDocument, MemoryFragments]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    g = codec.load_generic(data.get("generic", data))
    return g, MemoryFragments(data.get("fragments", {}))


@generic.command("import")
@click.argument("file", type=click.Path(exists=True))
@json_flag
@click.pass_context
@handle_errors
def generic_import(ctx, file, as_json):
    """Import a generic-document bundle ({"generic": ..., "fragments": ...})."""
    g, fragments = _load_bundle(file)
    _store(ctx).put_generic(g, fragments)
    if as_json:
        _echo_json({"imported": g.doc_type})
    else:
        click.echo(f"imported {g.doc_type}")


@generic.command("validate")
@click.argument("file", type=click.Path(exists=True))
@json_flag
@click.pass_context
@handle_errors
def generic_validate(ctx, file, as_json):
    """Validate a bundle file without storing it."""
    g, _fragments = _load_bundle(file)
    report = validate_generic(g)
    if as_json:
        _echo_json(
            {
                "ok": report.ok,
                "issues": [
                    {"severity": i.severity, "code": i.code, "where": i.where, "message": i.message}
                    for i in report.issues
                ],
            }
        )
    else:
        for issue in report.issues:
            click.echo(f"{issue.severity}: {issue.message}")
        if report.ok:
            click.echo("OK")
    if not report.ok:
        sys.exit(1)


# ---------------------------------------------------------------------------
# draft
# ---------------------------------------------------------------------------


@main.group()
def draft():
    """Interactive drafting sessions."""


def _session_brief(session) -> str:
    return (
        f"session {session.session_id}  type {session.doc_type!r}  "
        f"stage {session.stage.value}  draft {session.draft.id} "
        f"({session.draft.display_name})  autocheck "
        f"{'on' if session.autocheck else 'off'}"
    )


@draft.command("new")
@click.argument("doc_type")
@click.option("--prefix", default="Q", show_default=True, help="Instance id prefix.")
@json_flag
@click.pass_context
@handle_errors
def draft_new(ctx, doc_type, prefix, as_json):
    session = assembly.start_session(_store(ctx), doc_type, prefix)
    if as_json:
        _echo_json({"session": codec.dump_session(session)})
    else:
        click.echo(_session_brief(session))


@draft.command("resume")
@click.argument("session_id")
@json_flag
@click.pass_context
@handle_errors
def draft_resume(ctx, session_id, as_json):
    session = _store(ctx).get_session(session_id)
    if as_json:
        _echo_json({"session": codec.dump_session(session)})
    else:
        click.echo(_session_brief(session))
        click.echo(f"{len(session.edit_log)} edits logged")


def _parse_set(store, session, text: str, at: str | None) -> assembly.SetParam:
    if "=" not in text:
        raise BadFilter(f"--set expects NAME=VALUE, got {text!r}")
    name, _, raw = text.partition("=")
    name = name.strip()
    scope = parse_path(at) if at else None
    g = store.get_generic(session.doc_type)
    spec = governing_spec(g, scope, name)
    value: object = raw
    if spec is not None:
        if spec.kind.value == "integer":
            try:
                value = int(raw)
            except ValueError:
                raise EditRejected(f"parameter ${name} expects an integer, got {raw!r}") from None
        elif spec.kind.value == "date":
            try:
                value = dt.date.fromisoformat(raw)
            except ValueError:
                raise EditRejected(f"parameter ${name} expects YYYY-MM-DD, got {raw!r}") from None
    return assembly.SetParam(name=name, value=value, scope=scope)


def _parse_choose(text: str) -> assembly.ChooseVersion:
    path, version = query.parse_contains(text)
    return assembly.ChooseVersion(unit=path, version=version)


def _parse_tags(text: str) -> assembly.SetTags:
    if "=" not in text:
        raise BadFilter(f"--tags expects PATH=kind:party:label,... got {text!r}")
    path_text, _, spec = text.partition("=")
    tags = set()
    for item in spec.split(","):
        if not item.strip():
            continue
        parts = item.strip().split(":", 2)
        if len(parts) < 2:
            raise BadFilter(f"bad tag {item!r}; expected kind:party[:label]")
        tags.add(
            Tag(
                kind=TagKind(parts[0]),
                party=int(parts[1]),
                label=parts[2] if len(parts) > 2 else "",
            )
        )
    return assembly.SetTags(unit=parse_path(path_text), tags=frozenset(tags))


@draft.command("edit")
@click.argument("session_id")
@click.option("--party1", help="First party as 'Name' or 'Name :: Address'.")
@click.option("--party2", help="Second party as 'Name' or 'Name :: Address'.")
@click.option("--date", "date_text", help="Contract date, YYYY-MM-DD.")
@click.option("--name", "display_name", help="Display name for the document.")
@click.option("--notes", help="Free-text notes.")
@click.option("--autocheck", type=click.Choice(["on", "off"]), help="Toggle per-edit checking.")
@click.option("--stage", type=click.Choice(["meta", "compulsory", "optional", "review"]))
@click.option("--set", "sets", multiple=True, help="NAME=VALUE parameter binding.")
@click.option("--at", help="Unit path scoping --set (default: document level).")
@click.option("--include", "includes", multiple=True, help="Unit path to include.")
@click.option("--exclude", "excludes", multiple=True, help="Unit path to exclude.")
@click.option("--choose", "chooses", multiple=True, help="PATH@N version choice.")
@click.option("--keywords", "keywords_", multiple=True, help="PATH=kw1,kw2 keyword set.")
@click.option("--tags", "tags_", multiple=True, help="PATH=kind:party:label,... tag set.")
@click.option("--edit-json", "raw_edits", multiple=True, help="Raw edit object (JSON).")
@json_flag
@click.pass_context
@handle_errors
def draft_edit(ctx, session_id, party1, party2, date_text, display_name, notes,
               autocheck, stage, sets, at, includes, excludes, chooses,
               keywords_, tags_, raw_edits, as_json):
    """Apply one or more edits to a session (in the order listed in --help)."""
    store = _store(ctx)
    session = store.get_session(session_id)
    edits: list[assembly.Edit] = []
    if party1 or party2:
        if not (party1 and party2):
            raise BadFilter("--party1 and --party2 must be given together")

        def parse_party(text):
            name, _, address = text.partition("::")
            return Party(name.strip(), address.strip())

        edits.append(assembly.SetParties(parse_party(party1), parse_party(party2)))
    if date_text:
        try:
            edits.append(assembly.SetDate(dt.date.fromisoformat(date_text)))
        except ValueError:
            raise BadFilter(f"bad date {date_text!r}") from None
    if display_name is not None:
        edits.append(assembly.SetDisplayName(display_name))
    if notes is not None:
        edits.append(assembly.SetNotes(notes))
    if autocheck is not None:
        edits.append(assembly.ToggleAutocheck(autocheck == "on"))
    if stage is not None:
        edits.append(assembly.SetStage(assembly.Stage(stage)))
    for text in sets:
        edits.append(_parse_set(store, session, text, at))
    for text in includes:
        edits.append(assembly.IncludeUnit(parse_path(text)))
    for text in excludes:
        edits.append(assembly.ExcludeUnit(parse_path(text)))
    for text in chooses:
        edits.append(_parse_choose(text))
    for text in keywords_:
        path_text, _, kws = text.partition("=")
        edits.append(
            assembly.SetKeywords(
                unit=parse_path(path_text),
                keywords=frozenset(k.strip() for k in kws.split(",") if k.strip()),
            )
        )
    for text in tags_:
        edits.append(_parse_tags(text))
    for raw in raw_edits:
        edits.append(codec.load_edit(json.loads(raw)))
    if not edits:
        raise BadFilter("no edits given; see --help for the available flags")

    violations = []
    for edit in edits:
        session, violations = assembly.apply_edit(store, session, edit)
    g = store.get_generic(session.doc_type)
    if as_json:
        _echo_json(
            {
                "session": codec.dump_session(session),
                "violations": codec.dump_violations(violations, g, session.draft),
            }
        )
    else:
        click.echo(_session_brief(session))
        _echo_violations(violations)


def _echo_violations(violations):
    if not violations:
        return
    click.echo(f"{len(violations)} violation(s):")
    for v in violations:
        marker = "pending" if v.pending else v.kind.value
        click.echo(f"  [{marker}] {v.message}")


@draft.command("check")
@click.argument("session_id")
@json_flag
@click.pass_context
@handle_errors
def draft_check(ctx, session_id, as_json):
    store = _store(ctx)
    session = store.get_session(session_id)
    violations = assembly.check_session(store, session)
    if as_json:
        g = store.get_generic(session.doc_type)
        _echo_json({"violations": codec.dump_violations(violations, g, session.draft)})
    elif violations:
        _echo_violations(violations)
    else:
        click.echo("no violations")


@draft.command("finalize")
@click.argument("session_id")
@json_flag
@click.pass_context
@handle_errors
def draft_finalize(ctx, session_id, as_json):
    """Complete the draft: advances to review, checks, and stores the instance."""
    store = _store(ctx)
    session = store.get_session(session_id)
    if session.stage not in (assembly.Stage.REVIEW, assembly.Stage.FINALIZED):
        session, _ = assembly.apply_edit(store, session, assembly.SetStage(assembly.Stage.REVIEW))
    instance = assembly.finalize(store, session)
    if as_json:
        _echo_json({"instance": codec.dump_instance(instance)})
    else:
        click.echo(f"finalized {instance.id} ({instance.display_name})")


# ---------------------------------------------------------------------------
# render / query / expand / fsck / serve
# ---------------------------------------------------------------------------


@main.command("render")
@click.argument("instance_id")
@click.option("--markup", is_flag=True, help="Structural markup instead of plain text.")
@json_flag
@click.pass_context
@handle_errors
def render_cmd(ctx, instance_id, markup, as_json):
    payload = render_json(_store(ctx), instance_id, "markup" if markup else "text")
    if as_json:
        _echo_json(payload)
    else:
        click.echo(payload["content"], nl=False)


@main.command("query")
@click.option("--doc-type")
@click.option("--category")
@click.option("--on")
@click.option("--before")
@click.option("--after")
@click.option("--party-name")
@click.option("--party-address")
@click.option("--party", type=click.Choice(["1", "2"]))
@click.option("--keyword", "keywords", multiple=True)
@click.option("--contains", "contains_", multiple=True, help='Unit at version, "Part/Section@N".')
@click.option("--tag", help="kind[:party[:label]], e.g. duty:2.")
@json_flag
@click.pass_context
@handle_errors
def query_cmd(ctx, doc_type, category, on, before, after, party_name,
              party_address, party, keywords, contains_, tag, as_json):
    """Search the instance database (criteria are conjunctive)."""
    params = {
        "doc_type": doc_type,
        "category": category,
        "on": on,
        "before": before,
        "after": after,
        "party_name": party_name,
        "party_address": party_address,
        "party": party,
        "keyword": list(keywords),
        "contains": list(contains_),
        "tag": tag,
    }
    f = filter_from_params({k: v for k, v in params.items() if v})
    summaries = query.run_query(_store(ctx), f)
    if as_json:
        _echo_json({"instances": [summary_json(s) for s in summaries]})
        return
    if not summaries:
        click.echo("no matches")
        return
    for s in summaries:
        date = s.date.isoformat() if s.date else "-"
        click.echo(f"{s.id}: {s.display_name}  [{s.doc_type}, {s.category}, {date}, {s.status.value}]")


@main.command("expand")
@click.argument("instance_id")
@json_flag
@click.pass_context
@handle_errors
def expand_cmd(ctx, instance_id, as_json):
    """Retrieve a stored document and show its full text."""
    payload = render_json(_store(ctx), instance_id, "text")
    if as_json:
        _echo_json(payload)
    else:
        click.echo(payload["content"], nl=False)


@main.command("fsck")
@json_flag
@click.pass_context
@handle_errors
def fsck(ctx, as_json):
    """Integrity-check the store."""
    findings = _store(ctx).integrity_check()
    if as_json:
        _echo_json(
            {
                "findings": [
                    {"kind": f.kind, "subject": f.subject, "message": f.message} for f in findings
                ]
            }
        )
    else:
        for f in findings:
            click.echo(f"{f.kind}: {f.message}")
        if not findings:
            click.echo("clean")
    if findings:
        sys.exit(1)


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8423, show_default=True, type=int)
@click.option("--ui", "ui_dir", type=click.Path(exists=True), help="Static frontend directory to mount at /.")
@click.pass_context
@handle_errors
def serve_cmd(ctx, host, port, ui_dir):
    """Run the JSON-over-HTTP service."""
    from .service import serve

    serve(ctx.obj["store_path"], host=host, port=port, ui_dir=ui_dir)


if __name__ == "__main__":
    main()
