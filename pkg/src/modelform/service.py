"""JSON-over-HTTP surface for the drafting UI and scripted clients.

A thin adapter: handlers decode the request, call the engine, and encode
the result with the same codecs the CLI's ``--json`` mode uses — no
business rules live here.  Violation lists come back exactly as the
assembly module produced them, with suggested remedies attached so a
client can offer one-click fixes.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from . import assembly, codec, query
from .errors import BadFilter, CodecError, ModelformError
from .render import export_markup, render_document
from .store import Store

_STATUS_BY_CODE = {
    "unknown_doc_type": 404,
    "unknown_instance": 404,
    "unknown_session": 404,
    "violations_outstanding": 409,
    "session_state": 409,
    "edit_rejected": 422,
    "unit_not_found": 422,
    "unit_not_atomic": 422,
    "kind_mismatch": 422,
    "validation_failed": 422,
    "unbound_placeholder": 422,
    "fragment_unreadable": 500,
    "store_error": 500,
    "malformed": 400,
    "bad_filter": 400,
    "cond_parse_error": 400,
}


def error_payload(exc: ModelformError, store: Optional[Store] = None, session=None) -> dict:
    status = _STATUS_BY_CODE.get(exc.code, 500)
    error: dict = {"status": status, "code": exc.code, "message": exc.message}
    violations = getattr(exc, "violations", None)
    if violations is not None:
        if store is not None and session is not None:
            g = store.get_generic(session.doc_type)
            error["violations"] = codec.dump_violations(violations, g, session.draft)
        else:
            error["violations"] = [codec.dump_violation(v) for v in violations]
    return {"error": error}


def summary_json(s) -> dict:
    return {
        "id": s.id,
        "display_name": s.display_name,
        "doc_type": s.doc_type,
        "category": s.category,
        "parties": None if s.parties is None else [codec.dump_party(p) for p in s.parties],
        "date": codec.dump_date(s.date),
        "status": s.status.value,
    }


def generic_bundle(store: Store, doc_type: str) -> dict:
    """Full generic plus fragment texts — the same shape ``generic import`` reads."""
    g = store.get_generic(doc_type)
    source = store.fragments(doc_type)
    texts = {}
    from .model import walk_units

    for _path, unit in walk_units(g):
        for version in unit.versions:
            texts[version.fragment.id] = source.get_fragment(version.fragment)
    return {"generic": codec.dump_generic(g), "fragments": texts}


def render_json(store: Store, instance_id: str, fmt: str) -> dict:
    inst = store.get_instance(instance_id)
    g = store.get_generic(inst.doc_type)
    fragments = store.fragments(inst.doc_type)
    if fmt == "markup":
        return {"format": "markup", "content": export_markup(g, inst, fragments)}
    rendered = render_document(g, inst, fragments)
    return {
        "format": "text",
        "content": rendered.text,
        "toc": [[number, codec.dump_path(path), label] for number, path, label in rendered.toc],
        "warnings": rendered.warnings,
    }


def filter_from_params(params) -> query.QueryFilter:
    """Build a filter from flat key/value pairs (HTTP query string or CLI flags).

    Recognized keys: doc_type, category, on, before, after, party_name,
    party_address, party, keyword (repeatable), contains (repeatable,
    ``Path@N``), tag (``kind[:party[:label]]``).
    """
    def first(key):
        values = params.getlist(key) if hasattr(params, "getlist") else params.get(key)
        if isinstance(values, list):
            return values[0] if values else None
        return values

    def many(key):
        if hasattr(params, "getlist"):
            return params.getlist(key)
        value = params.get(key)
        if value is None:
            return []
        return value if isinstance(value, list) else [value]

    f = query.QueryFilter()
    f.doc_type = first("doc_type")
    f.category = first("category")
    given = [rel for rel in ("on", "before", "after") if first(rel)]
    if len(given) > 1:
        raise BadFilter("give at most one of on/before/after")
    if given:
        f.date_rel = query.date_rel(given[0], first(given[0]))
    party_index = first("party")
    index: Optional[int] = None
    if party_index not in (None, ""):
        if str(party_index) not in ("1", "2"):
            raise BadFilter(f"party must be 1 or 2, got {party_index!r}")
        index = int(party_index)
    if first("party_name"):
        f.party_name = query.PartyPattern(first("party_name"), index)
    if first("party_address"):
        f.party_address = query.PartyPattern(first("party_address"), index)
    keywords = frozenset(k for k in many("keyword") if k)
    if keywords:
        f.keywords = keywords
    contains = [query.parse_contains(c) for c in many("contains") if c]
    if contains:
        f.contains_version = tuple(contains)
    if first("tag"):
        f.tag = query.parse_tag(first("tag"))
    return f


def create_app(store_path, ui_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="modelform", version="0.1.0")
    store = Store(store_path)
    app.state.store = store

    @app.exception_handler(ModelformError)
    async def engine_error(_request: Request, exc: ModelformError):
        payload = error_payload(exc)
        return JSONResponse(status_code=payload["error"]["status"], content=payload)

    @app.exception_handler(RequestValidationError)
    async def malformed(_request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error": {"status": 400, "code": "malformed", "message": str(exc)}},
        )

    async def read_body(request: Request) -> dict:
        try:
            data = json.loads(await request.body() or b"{}")
        except json.JSONDecodeError as exc:
            raise CodecError(f"request body is not JSON: {exc}") from None
        if not isinstance(data, dict):
            raise CodecError("request body must be a JSON object")
        return data

    @app.get("/api/generics")
    def list_generics():
        return {
            "generics": [
                {
                    "doc_type": info.doc_type,
                    "category": info.category,
                    "parts": info.parts,
                    "atomic_units": info.atomic_units,
                }
                for info in store.list_generics()
            ]
        }

    @app.get("/api/generics/{doc_type:path}")
    def get_generic(doc_type: str):
        # :path converter because real document types contain slashes (IEE MF/2)
        return generic_bundle(store, doc_type)

    @app.post("/api/sessions")
    async def new_session(request: Request):
        data = await read_body(request)
        doc_type = data.get("doc_type")
        if not isinstance(doc_type, str) or not doc_type:
            raise CodecError("doc_type is required")
        prefix = data.get("prefix", "Q")
        session = assembly.start_session(store, doc_type, prefix)
        return {"session": codec.dump_session(session)}

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        return {"session": codec.dump_session(store.get_session(session_id))}

    @app.post("/api/sessions/{session_id}/edits")
    async def post_edit(session_id: str, request: Request):
        session = store.get_session(session_id)
        edit = codec.load_edit(await read_body(request))
        session, violations = assembly.apply_edit(store, session, edit)
        g = store.get_generic(session.doc_type)
        return {
            "session": codec.dump_session(session),
            "violations": codec.dump_violations(violations, g, session.draft),
        }

    @app.post("/api/sessions/{session_id}/check")
    def check_session(session_id: str):
        session = store.get_session(session_id)
        g = store.get_generic(session.doc_type)
        violations = assembly.check_session(store, session)
        return {"violations": codec.dump_violations(violations, g, session.draft)}

    @app.post("/api/sessions/{session_id}/finalize")
    def finalize_session(session_id: str):
        session = store.get_session(session_id)
        try:
            instance = assembly.finalize(store, session)
        except ModelformError as exc:
            payload = error_payload(exc, store, session)
            return JSONResponse(status_code=payload["error"]["status"], content=payload)
        return {"instance": codec.dump_instance(instance)}

    @app.get("/api/instances")
    def list_instances(request: Request):
        f = filter_from_params(request.query_params)
        return {"instances": [summary_json(s) for s in query.run_query(store, f)]}

    @app.get("/api/instances/{instance_id}")
    def get_instance(instance_id: str):
        return {"instance": codec.dump_instance(store.get_instance(instance_id))}

    @app.get("/api/instances/{instance_id}/render")
    def render_instance(instance_id: str, format: str = "text"):
        if format not in ("text", "markup"):
            raise BadFilter(f"format must be text or markup, got {format!r}")
        return render_json(store, instance_id, format)

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(Path(ui_dir)), html=True), name="ui")

    return app


def serve(store_path, host: str = "127.0.0.1", port: int = 8423, ui_dir: Optional[str] = None):
    """Run the service (loopback by default; this is a single-drafter tool)."""
    import uvicorn

    uvicorn.run(create_app(store_path, ui_dir), host=host, port=port, log_level="warning")
