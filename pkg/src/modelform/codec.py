"""Canonical JSON codecs for every stored and wire-visible value.

One schema (``schema_version: 1``) serves the on-disk store, the HTTP
bodies, and the CLI's ``--json`` output, so the surfaces stay structurally
identical.  Serialization is canonical — sorted keys, two-space indent,
trailing newline, collections sorted on stable keys — which makes store
round-trips byte-stable and golden files diff cleanly.

Decoding raises :class:`CodecError` on any structural problem; value
errors from domain constructors are wrapped likewise.
"""

from __future__ import annotations

import datetime as dt
import json
from typing import Any, Mapping, Optional

from . import assembly, constraints
from .condexpr import Value, parse_cond, to_source, value_kind
from .errors import CodecError, ParseError
from .model import (
    DocumentInstance,
    FragmentRef,
    GenericDocument,
    Inclusion,
    ParamBinding,
    ParamKind,
    ParamSpec,
    Party,
    Status,
    Tag,
    TagKind,
    TextVersion,
    UnitPath,
    UnitTemplate,
)

SCHEMA_VERSION = 1


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _require(data: Mapping, key: str, context: str):
    if key not in data:
        raise CodecError(f"{context}: missing field {key!r}")
    return data[key]


def _guard(context: str):
    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc_type in (KeyError, TypeError, ValueError, AttributeError, IndexError):
                raise CodecError(f"{context}: {exc}") from exc
            return False

    return _Ctx()


# ---------------------------------------------------------------------------
# Scalars
# ---------------------------------------------------------------------------


def dump_date(d: Optional[dt.date]) -> Optional[str]:
    return None if d is None else d.isoformat()


def load_date(s: Optional[str], context: str = "date") -> Optional[dt.date]:
    if s is None:
        return None
    try:
        return dt.date.fromisoformat(s)
    except (ValueError, TypeError):
        raise CodecError(f"{context}: bad date {s!r}") from None


def dump_value(v: Value) -> dict:
    kind = value_kind(v)
    return {"kind": kind, "value": v.isoformat() if isinstance(v, dt.date) else v}


def load_value(data: Mapping, context: str = "value") -> Value:
    kind = _require(data, "kind", context)
    raw = _require(data, "value", context)
    if kind == "string":
        if not isinstance(raw, str):
            raise CodecError(f"{context}: string value expected")
        return raw
    if kind == "integer":
        if not isinstance(raw, int) or isinstance(raw, bool):
            raise CodecError(f"{context}: integer value expected")
        return raw
    if kind == "date":
        out = load_date(raw, context)
        assert out is not None
        return out
    raise CodecError(f"{context}: unknown value kind {kind!r}")


def dump_path(p: UnitPath) -> list[str]:
    return list(p.labels)


def load_path(data: Any, context: str = "unit path") -> UnitPath:
    if not isinstance(data, list) or not all(isinstance(x, str) for x in data):
        raise CodecError(f"{context}: expected a list of labels, got {data!r}")
    with _guard(context):
        return UnitPath(tuple(data))
    raise AssertionError


def load_opt_path(data: Any, context: str) -> Optional[UnitPath]:
    return None if data is None else load_path(data, context)


# ---------------------------------------------------------------------------
# Generic documents
# ---------------------------------------------------------------------------


def dump_param_spec(s: ParamSpec) -> dict:
    return {"name": s.name, "kind": s.kind.value, "required": s.required}


def load_param_spec(data: Mapping, context: str = "param") -> ParamSpec:
    with _guard(context):
        return ParamSpec(
            name=_require(data, "name", context),
            kind=ParamKind(data.get("kind", "string")),
            required=bool(data.get("required", False)),
        )
    raise AssertionError


def dump_version(v: TextVersion) -> dict:
    out: dict[str, Any] = {"number": v.number, "fragment": v.fragment.id}
    if v.params:
        out["params"] = [dump_param_spec(s) for s in v.params]
    if v.commentary:
        out["commentary"] = v.commentary
    if v.author:
        out["author"] = v.author
    if v.created is not None:
        out["created"] = dump_date(v.created)
    return out


def load_version(data: Mapping, context: str) -> TextVersion:
    with _guard(context):
        return TextVersion(
            number=int(_require(data, "number", context)),
            fragment=FragmentRef(str(_require(data, "fragment", context))),
            params=tuple(load_param_spec(p, context) for p in data.get("params", [])),
            commentary=data.get("commentary", ""),
            author=data.get("author", ""),
            created=load_date(data.get("created"), context),
        )
    raise AssertionError


def dump_unit(u: UnitTemplate) -> dict:
    out: dict[str, Any] = {
        "label": u.label,
        "inclusion": u.inclusion.value,
        "order": u.order,
    }
    if u.params:
        out["params"] = [dump_param_spec(s) for s in u.params]
    if u.commentary:
        out["commentary"] = u.commentary
    if u.keyword_suggestions:
        out["keywords"] = sorted(u.keyword_suggestions)
    if u.children:
        out["children"] = [dump_unit(c) for c in u.children]
    if u.versions:
        out["versions"] = [dump_version(v) for v in sorted(u.versions, key=lambda v: v.number)]
    return out


def load_unit(data: Mapping, context: str = "unit") -> UnitTemplate:
    label = _require(data, "label", context)
    where = f"{context}/{label}"
    with _guard(where):
        return UnitTemplate(
            label=label,
            inclusion=Inclusion(data.get("inclusion", "compulsory")),
            order=int(data.get("order", 1)),
            params=tuple(load_param_spec(p, where) for p in data.get("params", [])),
            commentary=data.get("commentary", ""),
            keyword_suggestions=frozenset(data.get("keywords", [])),
            children=tuple(load_unit(c, where) for c in data.get("children", [])),
            versions=tuple(load_version(v, where) for v in data.get("versions", [])),
        )
    raise AssertionError


def _dump_cond(e) -> str:
    return to_source(e)


def _load_cond(src: Any, context: str):
    if not isinstance(src, str):
        raise CodecError(f"{context}: condition must be source text")
    try:
        return parse_cond(src)
    except ParseError as exc:
        raise CodecError(f"{context}: {exc.message}") from exc


def dump_constraint(c: constraints.Constraint) -> dict:
    if isinstance(c, constraints.Forces):
        if isinstance(c.antecedent, UnitPath):
            antecedent: dict[str, Any] = {"unit": dump_path(c.antecedent)}
        else:
            antecedent = {"cond": _dump_cond(c.antecedent)}
        out: dict[str, Any] = {
            "kind": "forces",
            "antecedent": antecedent,
            "consequent": dump_path(c.consequent),
        }
        if c.guard is not None:
            out["when"] = _dump_cond(c.guard)
        return out
    if isinstance(c, constraints.Incompatible) or isinstance(c, constraints.ExclusiveOr):
        out = {
            "kind": "incompatible" if isinstance(c, constraints.Incompatible) else "exclusive_or",
            "a": dump_path(c.a),
            "b": dump_path(c.b),
        }
        if c.guard is not None:
            out["when"] = _dump_cond(c.guard)
        return out
    if isinstance(c, constraints.Refers):
        return {"kind": "refers", "source": dump_path(c.source), "target": dump_path(c.target)}
    if isinstance(c, constraints.DataConstraint):
        return {"kind": "data", "cond": _dump_cond(c.expr), "message": c.message}
    raise CodecError(f"unknown constraint {c!r}")


def load_constraint(data: Mapping, context: str = "constraint") -> constraints.Constraint:
    kind = _require(data, "kind", context)
    guard = _load_cond(data["when"], context) if "when" in data else None
    if kind == "forces":
        ant = _require(data, "antecedent", context)
        if "unit" in ant:
            antecedent: Any = load_path(ant["unit"], context)
        elif "cond" in ant:
            antecedent = _load_cond(ant["cond"], context)
        else:
            raise CodecError(f"{context}: forces antecedent needs 'unit' or 'cond'")
        return constraints.Forces(
            antecedent=antecedent,
            consequent=load_path(_require(data, "consequent", context), context),
            guard=guard,
        )
    if kind in ("incompatible", "exclusive_or"):
        cls = constraints.Incompatible if kind == "incompatible" else constraints.ExclusiveOr
        return cls(
            a=load_path(_require(data, "a", context), context),
            b=load_path(_require(data, "b", context), context),
            guard=guard,
        )
    if kind == "refers":
        return constraints.Refers(
            source=load_path(_require(data, "source", context), context),
            target=load_path(_require(data, "target", context), context),
        )
    if kind == "data":
        return constraints.DataConstraint(
            expr=_load_cond(_require(data, "cond", context), context),
            message=str(data.get("message", "Data constraint violated.")),
        )
    raise CodecError(f"{context}: unknown constraint kind {kind!r}")


def dump_generic(g: GenericDocument) -> dict:
    return {
        "schema_version": g.schema_version,
        "doc_type": g.doc_type,
        "category": g.category,
        "params": [dump_param_spec(s) for s in g.params],
        "parts": [dump_unit(p) for p in sorted(g.parts, key=lambda p: p.order)],
        "constraints": [dump_constraint(c) for c in g.constraints],
    }


def load_generic(data: Mapping) -> GenericDocument:
    context = "generic document"
    with _guard(context):
        return GenericDocument(
            doc_type=_require(data, "doc_type", context),
            category=data.get("category", ""),
            params=tuple(load_param_spec(p, context) for p in data.get("params", [])),
            parts=tuple(load_unit(u, context) for u in data.get("parts", [])),
            constraints=tuple(
                load_constraint(c, f"constraint #{i + 1}")
                for i, c in enumerate(data.get("constraints", []))
            ),
            schema_version=int(data.get("schema_version", SCHEMA_VERSION)),
        )
    raise AssertionError


# ---------------------------------------------------------------------------
# Parties, tags, instances
# ---------------------------------------------------------------------------


def dump_party(p: Party) -> dict:
    out: dict[str, Any] = {"name": p.name, "address": p.address}
    if p.extra:
        out["extra"] = {k: v for k, v in p.extra}
    return out


def load_party(data: Mapping, context: str = "party") -> Party:
    with _guard(context):
        extra = data.get("extra", {})
        return Party(
            name=_require(data, "name", context),
            address=data.get("address", ""),
            extra=tuple(sorted(extra.items())),
        )
    raise AssertionError


def dump_tag(t: Tag) -> dict:
    return {"kind": t.kind.value, "party": t.party, "label": t.label}


def load_tag(data: Mapping, context: str = "tag") -> Tag:
    with _guard(context):
        return Tag(
            kind=TagKind(_require(data, "kind", context)),
            party=int(_require(data, "party", context)),
            label=data.get("label", ""),
        )
    raise AssertionError


def dump_instance(inst: DocumentInstance) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "id": inst.id,
        "doc_type": inst.doc_type,
        "display_name": inst.display_name,
        "parties": None if inst.parties is None else [dump_party(p) for p in inst.parties],
        "date": dump_date(inst.date),
        "bindings": [
            {
                "scope": None if b.scope is None else dump_path(b.scope),
                "name": b.name,
                **dump_value(b.value),
            }
            for b in sorted(
                inst.bindings, key=lambda b: (b.scope.labels if b.scope else (), b.name)
            )
        ],
        "selections": [
            {"unit": dump_path(p), "version": n}
            for p, n in sorted(inst.selections.items())
        ],
        "included_optional": [dump_path(p) for p in sorted(inst.included_optional)],
        "order_overrides": [
            {"parent": None if p is None else dump_path(p), "order": list(order)}
            for p, order in sorted(
                inst.order_overrides.items(), key=lambda kv: kv[0].labels if kv[0] else ()
            )
        ],
        "keywords": [
            {"unit": dump_path(p), "keywords": sorted(kws)}
            for p, kws in sorted(inst.keywords.items())
            if kws
        ],
        "tags": [
            {
                "unit": dump_path(p),
                "tags": [
                    dump_tag(t)
                    for t in sorted(tags, key=lambda t: (t.kind.value, t.party, t.label))
                ],
            }
            for p, tags in sorted(inst.tags.items())
            if tags
        ],
        "notes": inst.notes,
        "status": inst.status.value,
    }


def load_instance(data: Mapping) -> DocumentInstance:
    context = "document instance"
    with _guard(context):
        parties = data.get("parties")
        inst = DocumentInstance(
            doc_type=_require(data, "doc_type", context),
            id=_require(data, "id", context),
            display_name=data.get("display_name", ""),
            parties=None
            if parties is None
            else (load_party(parties[0]), load_party(parties[1])),
            date=load_date(data.get("date"), context),
            notes=data.get("notes", ""),
            status=Status(data.get("status", "draft")),
        )
        inst.bindings = [
            ParamBinding(
                name=_require(b, "name", context),
                value=load_value(b, context),
                scope=load_opt_path(b.get("scope"), context),
            )
            for b in data.get("bindings", [])
        ]
        inst.selections = {
            load_path(_require(s, "unit", context), context): int(_require(s, "version", context))
            for s in data.get("selections", [])
        }
        inst.included_optional = {
            load_path(p, context) for p in data.get("included_optional", [])
        }
        inst.order_overrides = {
            load_opt_path(o.get("parent"), context): tuple(o.get("order", []))
            for o in data.get("order_overrides", [])
        }
        inst.keywords = {
            load_path(_require(k, "unit", context), context): set(k.get("keywords", []))
            for k in data.get("keywords", [])
        }
        inst.tags = {
            load_path(_require(t, "unit", context), context): {
                load_tag(x, context) for x in t.get("tags", [])
            }
            for t in data.get("tags", [])
        }
        return inst
    raise AssertionError


# ---------------------------------------------------------------------------
# Edits and sessions
# ---------------------------------------------------------------------------

_EDIT_KINDS = {
    "set_parties": assembly.SetParties,
    "set_date": assembly.SetDate,
    "set_param": assembly.SetParam,
    "include_unit": assembly.IncludeUnit,
    "exclude_unit": assembly.ExcludeUnit,
    "choose_version": assembly.ChooseVersion,
    "create_version": assembly.CreateVersion,
    "reorder": assembly.Reorder,
    "set_keywords": assembly.SetKeywords,
    "set_tags": assembly.SetTags,
    "set_notes": assembly.SetNotes,
    "toggle_autocheck": assembly.ToggleAutocheck,
    "set_display_name": assembly.SetDisplayName,
    "set_stage": assembly.SetStage,
}


def dump_edit(e: assembly.Edit) -> dict:
    if isinstance(e, assembly.SetParties):
        return {"kind": "set_parties", "party1": dump_party(e.party1), "party2": dump_party(e.party2)}
    if isinstance(e, assembly.SetDate):
        return {"kind": "set_date", "date": dump_date(e.date)}
    if isinstance(e, assembly.SetParam):
        return {
            "kind": "set_param",
            "scope": None if e.scope is None else dump_path(e.scope),
            "name": e.name,
            "value": dump_value(e.value),
        }
    if isinstance(e, assembly.IncludeUnit):
        return {"kind": "include_unit", "unit": dump_path(e.unit)}
    if isinstance(e, assembly.ExcludeUnit):
        return {"kind": "exclude_unit", "unit": dump_path(e.unit)}
    if isinstance(e, assembly.ChooseVersion):
        return {"kind": "choose_version", "unit": dump_path(e.unit), "version": e.version}
    if isinstance(e, assembly.CreateVersion):
        out: dict[str, Any] = {
            "kind": "create_version",
            "unit": dump_path(e.unit),
            "text": e.text,
            "params": [dump_param_spec(s) for s in e.params],
            "commentary": e.commentary,
            "author": e.author,
        }
        if e.assigned_version is not None:
            out["assigned_version"] = e.assigned_version
        return out
    if isinstance(e, assembly.Reorder):
        return {
            "kind": "reorder",
            "parent": None if e.parent is None else dump_path(e.parent),
            "order": list(e.order),
        }
    if isinstance(e, assembly.SetKeywords):
        return {"kind": "set_keywords", "unit": dump_path(e.unit), "keywords": sorted(e.keywords)}
    if isinstance(e, assembly.SetTags):
        return {
            "kind": "set_tags",
            "unit": dump_path(e.unit),
            "tags": [
                dump_tag(t) for t in sorted(e.tags, key=lambda t: (t.kind.value, t.party, t.label))
            ],
        }
    if isinstance(e, assembly.SetNotes):
        return {"kind": "set_notes", "notes": e.notes}
    if isinstance(e, assembly.ToggleAutocheck):
        return {"kind": "toggle_autocheck", "enabled": e.enabled}
    if isinstance(e, assembly.SetDisplayName):
        return {"kind": "set_display_name", "display_name": e.display_name}
    if isinstance(e, assembly.SetStage):
        return {"kind": "set_stage", "stage": e.stage.value}
    raise CodecError(f"unknown edit {e!r}")


def load_edit(data: Mapping, context: str = "edit") -> assembly.Edit:
    kind = _require(data, "kind", context)
    if kind not in _EDIT_KINDS:
        raise CodecError(f"{context}: unknown edit kind {kind!r}")
    with _guard(context):
        if kind == "set_parties":
            return assembly.SetParties(
                party1=load_party(_require(data, "party1", context), context),
                party2=load_party(_require(data, "party2", context), context),
            )
        if kind == "set_date":
            d = load_date(_require(data, "date", context), context)
            if d is None:
                raise CodecError(f"{context}: date required")
            return assembly.SetDate(d)
        if kind == "set_param":
            return assembly.SetParam(
                name=_require(data, "name", context),
                value=load_value(_require(data, "value", context), context),
                scope=load_opt_path(data.get("scope"), context),
            )
        if kind == "include_unit":
            return assembly.IncludeUnit(load_path(_require(data, "unit", context), context))
        if kind == "exclude_unit":
            return assembly.ExcludeUnit(load_path(_require(data, "unit", context), context))
        if kind == "choose_version":
            return assembly.ChooseVersion(
                unit=load_path(_require(data, "unit", context), context),
                version=int(_require(data, "version", context)),
            )
        if kind == "create_version":
            return assembly.CreateVersion(
                unit=load_path(_require(data, "unit", context), context),
                text=str(_require(data, "text", context)),
                params=tuple(load_param_spec(p, context) for p in data.get("params", [])),
                commentary=data.get("commentary", ""),
                author=data.get("author", ""),
                assigned_version=data.get("assigned_version"),
            )
        if kind == "reorder":
            return assembly.Reorder(
                parent=load_opt_path(data.get("parent"), context),
                order=tuple(_require(data, "order", context)),
            )
        if kind == "set_keywords":
            return assembly.SetKeywords(
                unit=load_path(_require(data, "unit", context), context),
                keywords=frozenset(_require(data, "keywords", context)),
            )
        if kind == "set_tags":
            return assembly.SetTags(
                unit=load_path(_require(data, "unit", context), context),
                tags=frozenset(load_tag(t, context) for t in _require(data, "tags", context)),
            )
        if kind == "set_notes":
            return assembly.SetNotes(str(_require(data, "notes", context)))
        if kind == "toggle_autocheck":
            return assembly.ToggleAutocheck(bool(_require(data, "enabled", context)))
        if kind == "set_display_name":
            return assembly.SetDisplayName(str(_require(data, "display_name", context)))
        if kind == "set_stage":
            return assembly.SetStage(assembly.Stage(_require(data, "stage", context)))
    raise AssertionError


def dump_session(s: assembly.Session) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "session_id": s.session_id,
        "doc_type": s.doc_type,
        "stage": s.stage.value,
        "autocheck": s.autocheck,
        "pending_unit_cursor": None
        if s.pending_unit_cursor is None
        else dump_path(s.pending_unit_cursor),
        "draft": dump_instance(s.draft),
        "edit_log": [
            {"ts": e.timestamp.isoformat(), "edit": dump_edit(e.edit)} for e in s.edit_log
        ],
    }


def load_session(data: Mapping) -> assembly.Session:
    context = "session"
    with _guard(context):
        return assembly.Session(
            session_id=_require(data, "session_id", context),
            doc_type=_require(data, "doc_type", context),
            stage=assembly.Stage(_require(data, "stage", context)),
            draft=load_instance(_require(data, "draft", context)),
            autocheck=bool(data.get("autocheck", False)),
            edit_log=[
                assembly.LoggedEdit(
                    timestamp=dt.datetime.fromisoformat(_require(e, "ts", context)),
                    edit=load_edit(_require(e, "edit", context), context),
                )
                for e in data.get("edit_log", [])
            ],
            pending_unit_cursor=load_opt_path(data.get("pending_unit_cursor"), context),
        )
    raise AssertionError


# ---------------------------------------------------------------------------
# Violations and remedies (wire format only; never loaded back)
# ---------------------------------------------------------------------------


def dump_subject(s) -> dict:
    if isinstance(s, UnitPath):
        return {"unit": dump_path(s)}
    return {"param": s}


def dump_remedy(r: constraints.Remedy) -> dict:
    out: dict[str, Any] = {"action": r.action.value, "rationale": r.rationale}
    if r.unit is not None:
        out["unit"] = dump_path(r.unit)
    if r.param is not None:
        out["param"] = r.param
    return out


def dump_violation(
    v: constraints.Violation, remedies: Optional[list[constraints.Remedy]] = None
) -> dict:
    out: dict[str, Any] = {
        "kind": v.kind.value,
        "subjects": [dump_subject(s) for s in v.subjects],
        "message": v.message,
        "pending": v.pending,
        "source_index": v.source_index,
    }
    if v.unbound:
        out["unbound"] = list(v.unbound)
    if remedies is not None:
        out["remedies"] = [dump_remedy(r) for r in remedies]
    return out


def dump_violations(violations, g, inst) -> list[dict]:
    """Violations with their suggested remedies attached, wire-ready."""
    from .constraints import suggest_remedies

    return [dump_violation(v, suggest_remedies(v, g, inst)) for v in violations]
