"""Drafting sessions: the resumable state machine that produces an instance.

A session starts from a generic document with every compulsory atomic unit
pre-selected at its model-form wording (version 1, or the lowest surviving
number), then absorbs a stream of edits — parties and date, parameter
values, optional-part inclusion, version choices, new version creation,
reordering, keywords, tags, notes.  Every edit is appended to a timestamped
log, so a draft can always be reproduced by replay and drafting can spread
over many sittings.

Constraint checking is per-edit when autocheck is on, on demand otherwise,
and always at finalize, where any violation — including a merely pending
one — blocks the draft from becoming a stored final instance.
"""

from __future__ import annotations

import copy
import datetime as dt
import secrets
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Union

from .condexpr import Value, value_kind
from .constraints import CheckStage, Violation, check
from .errors import (
    EditRejected,
    SessionStateError,
    ViolationsOutstanding,
)
from .model import (
    DocumentInstance,
    GenericDocument,
    Inclusion,
    ParamBinding,
    ParamSpec,
    Party,
    Status,
    Tag,
    UnitPath,
    binding_kind_ok,
    default_selections,
    governing_spec,
    resolve_unit,
)


class Stage(str, Enum):
    META = "meta"
    COMPULSORY = "compulsory"
    OPTIONAL = "optional"
    REVIEW = "review"
    FINALIZED = "finalized"


# Stages a SetStage edit may target; only finalize() reaches FINALIZED.
_SETTABLE_STAGES = (Stage.META, Stage.COMPULSORY, Stage.OPTIONAL, Stage.REVIEW)


# ---------------------------------------------------------------------------
# Edits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SetParties:
    party1: Party
    party2: Party


@dataclass(frozen=True)
class SetDate:
    date: dt.date


@dataclass(frozen=True)
class SetParam:
    name: str
    value: Value
    scope: Optional[UnitPath] = None


@dataclass(frozen=True)
class IncludeUnit:
    unit: UnitPath


@dataclass(frozen=True)
class ExcludeUnit:
    unit: UnitPath


@dataclass(frozen=True)
class ChooseVersion:
    unit: UnitPath
    version: int


@dataclass(frozen=True)
class CreateVersion:
    unit: UnitPath
    text: str
    params: tuple[ParamSpec, ...] = ()
    commentary: str = ""
    author: str = ""
    # Filled in when the edit is applied, so replay re-selects the version
    # that was actually created instead of appending another one.
    assigned_version: Optional[int] = None


@dataclass(frozen=True)
class Reorder:
    parent: Optional[UnitPath]
    order: tuple[str, ...]


@dataclass(frozen=True)
class SetKeywords:
    unit: UnitPath
    keywords: frozenset[str]


@dataclass(frozen=True)
class SetTags:
    unit: UnitPath
    tags: frozenset[Tag]


@dataclass(frozen=True)
class SetNotes:
    notes: str


@dataclass(frozen=True)
class ToggleAutocheck:
    enabled: bool


@dataclass(frozen=True)
class SetDisplayName:
    display_name: str


@dataclass(frozen=True)
class SetStage:
    stage: Stage


Edit = Union[
    SetParties, SetDate, SetParam, IncludeUnit, ExcludeUnit, ChooseVersion,
    CreateVersion, Reorder, SetKeywords, SetTags, SetNotes, ToggleAutocheck,
    SetDisplayName, SetStage,
]


@dataclass(frozen=True)
class LoggedEdit:
    timestamp: dt.datetime
    edit: Edit


@dataclass
class Session:
    session_id: str
    doc_type: str
    stage: Stage
    draft: DocumentInstance
    autocheck: bool = False
    edit_log: list[LoggedEdit] = field(default_factory=list)
    pending_unit_cursor: Optional[UnitPath] = None

    @property
    def finalized(self) -> bool:
        return self.stage is Stage.FINALIZED


# ---------------------------------------------------------------------------
# Session lifecycle
# ---------------------------------------------------------------------------


def new_session_id() -> str:
    return secrets.token_hex(8)


def initial_draft(g: GenericDocument, instance_id: str) -> DocumentInstance:
    """Fresh draft: compulsory atomic units at their lowest version numbers,
    keywords seeded from the generic's suggestions."""
    draft = DocumentInstance(doc_type=g.doc_type, id=instance_id, display_name=instance_id)
    draft.selections = default_selections(g)
    from .model import walk_units

    for path, unit in walk_units(g):
        if unit.keyword_suggestions:
            draft.keywords[path] = set(unit.keyword_suggestions)
    return draft


def start_session(store, doc_type: str, id_prefix: str = "Q") -> Session:
    """Open (and persist) a new drafting session on a stored generic.

    The instance identifier is allocated up front, per the store's
    prefix+sequence scheme; the drafter may rename the document freely.
    """
    g = store.get_generic(doc_type)  # raises UnknownDocType
    instance_id = store.allocate_instance_id(id_prefix)
    session = Session(
        session_id=new_session_id(),
        doc_type=doc_type,
        stage=Stage.META,
        draft=initial_draft(g, instance_id),
    )
    store.put_session(session)
    return session


# ---------------------------------------------------------------------------
# Edit application
# ---------------------------------------------------------------------------


def _include_chain(g: GenericDocument, draft: DocumentInstance, path: UnitPath):
    """Make the unit present: opt in every optional ancestor (and the unit),
    then pull in compulsory descendants with default version selections."""
    for i in range(1, len(path.labels) + 1):
        node = UnitPath(path.labels[:i])
        if resolve_unit(g, node).inclusion is Inclusion.OPTIONAL:
            draft.included_optional.add(node)
    draft.selections.update(
        {p: n for p, n in default_selections(g, within=path).items() if p not in draft.selections}
    )


def _exclude_subtree(draft: DocumentInstance, path: UnitPath):
    draft.included_optional = {
        p for p in draft.included_optional if not path.is_ancestor_of(p)
    }
    draft.selections = {
        p: n for p, n in draft.selections.items() if not path.is_ancestor_of(p)
    }


def _set_binding(draft: DocumentInstance, binding: ParamBinding):
    draft.bindings = [
        b for b in draft.bindings if not (b.name == binding.name and b.scope == binding.scope)
    ]
    draft.bindings.append(binding)


def _apply_to_draft(g: GenericDocument, draft: DocumentInstance, edit: Edit) -> Optional[UnitPath]:
    """Apply one edit's draft-side effect; returns the touched unit, if any.

    Session-level edits (autocheck, stage) are handled by the caller."""
    if isinstance(edit, SetParties):
        draft.parties = (edit.party1, edit.party2)
        return None
    if isinstance(edit, SetDate):
        draft.date = edit.date
        return None
    if isinstance(edit, SetDisplayName):
        draft.display_name = edit.display_name
        return None
    if isinstance(edit, SetNotes):
        draft.notes = edit.notes
        return None
    if isinstance(edit, SetParam):
        if edit.scope is not None:
            resolve_unit(g, edit.scope)
        spec = governing_spec(g, edit.scope, edit.name)
        if spec is not None and not binding_kind_ok(spec, edit.value):
            raise EditRejected(
                f"parameter ${edit.name} expects a {spec.kind.value}, got "
                f"{value_kind(edit.value)}"
            )
        _set_binding(draft, ParamBinding(edit.name, edit.value, edit.scope))
        return edit.scope
    if isinstance(edit, IncludeUnit):
        resolve_unit(g, edit.unit)
        _include_chain(g, draft, edit.unit)
        return edit.unit
    if isinstance(edit, ExcludeUnit):
        unit = resolve_unit(g, edit.unit)
        if unit.inclusion is Inclusion.COMPULSORY:
            raise EditRejected(f"'{edit.unit}' is compulsory and cannot be excluded")
        _exclude_subtree(draft, edit.unit)
        return edit.unit
    if isinstance(edit, ChooseVersion):
        unit = resolve_unit(g, edit.unit)
        if not unit.is_atomic:
            raise EditRejected(f"'{edit.unit}' is not an atomic unit")
        if edit.version not in {v.number for v in unit.versions}:
            raise EditRejected(f"'{edit.unit}' has no version {edit.version}")
        if edit.unit not in draft.selections:
            raise EditRejected(
                f"'{edit.unit}' is not included in this draft; include it first"
            )
        draft.selections[edit.unit] = edit.version
        return edit.unit
    if isinstance(edit, Reorder):
        if edit.parent is None:
            labels = {u.label for u in g.parts}
        else:
            labels = {u.label for u in resolve_unit(g, edit.parent).children}
        if set(edit.order) != labels or len(edit.order) != len(labels):
            raise EditRejected(
                f"reorder list must be a permutation of the children of "
                f"{'the document' if edit.parent is None else edit.parent}"
            )
        draft.order_overrides[edit.parent] = tuple(edit.order)
        return edit.parent
    if isinstance(edit, SetKeywords):
        resolve_unit(g, edit.unit)
        draft.keywords[edit.unit] = set(edit.keywords)
        return edit.unit
    if isinstance(edit, SetTags):
        resolve_unit(g, edit.unit)
        draft.tags[edit.unit] = set(edit.tags)
        return edit.unit
    raise AssertionError(f"unhandled edit {edit!r}")


def apply_edit(
    store,
    session: Session,
    edit: Edit,
    now: Optional[dt.datetime] = None,
) -> tuple[Session, list[Violation]]:
    """Apply one edit, log it, persist the session, and — when autocheck is
    on — return the current interactive violation list."""
    if session.finalized:
        raise EditRejected("the session is finalized; no further edits are accepted")
    g = store.get_generic(session.doc_type)
    new = Session(
        session_id=session.session_id,
        doc_type=session.doc_type,
        stage=session.stage,
        draft=copy.deepcopy(session.draft),
        autocheck=session.autocheck,
        edit_log=list(session.edit_log),
        pending_unit_cursor=session.pending_unit_cursor,
    )
    logged = edit

    if isinstance(edit, ToggleAutocheck):
        new.autocheck = edit.enabled
    elif isinstance(edit, SetStage):
        if edit.stage not in _SETTABLE_STAGES:
            raise EditRejected(f"stage {edit.stage.value!r} cannot be set directly")
        new.stage = edit.stage
    elif isinstance(edit, CreateVersion):
        unit = resolve_unit(g, edit.unit)
        if not unit.is_atomic:
            raise EditRejected(f"'{edit.unit}' is not an atomic unit")
        g, number = store.append_version(
            session.doc_type,
            edit.unit,
            edit.text,
            edit.params,
            edit.commentary,
            edit.author,
        )
        logged = replace(edit, assigned_version=number)
        _include_chain(g, new.draft, edit.unit)
        new.draft.selections[edit.unit] = number
        new.pending_unit_cursor = edit.unit
    else:
        touched = _apply_to_draft(g, new.draft, edit)
        if touched is not None:
            new.pending_unit_cursor = touched

    new.edit_log.append(LoggedEdit(now or dt.datetime.now(dt.timezone.utc), logged))
    store.put_session(new)
    violations = check(g, new.draft, CheckStage.INTERACTIVE) if new.autocheck else []
    return new, violations


def check_session(store, session: Session) -> list[Violation]:
    """On-demand interactive check; never mutates the session."""
    g = store.get_generic(session.doc_type)
    return check(g, session.draft, CheckStage.INTERACTIVE)


def finalize(store, session: Session) -> DocumentInstance:
    """Freeze the draft into a stored final instance.

    Requires the review stage and a completely clean finalize-stage check:
    outstanding violations — pending ones included — abort without
    persisting anything.
    """
    if session.finalized:
        raise SessionStateError("the session is already finalized")
    if session.stage is not Stage.REVIEW:
        raise SessionStateError(
            f"finalize requires the review stage; session is at {session.stage.value!r}"
        )
    g = store.get_generic(session.doc_type)
    violations = check(g, session.draft, CheckStage.FINALIZE)
    if violations:
        raise ViolationsOutstanding(violations)
    final = copy.deepcopy(session.draft)
    final.status = Status.FINAL
    store.put_instance(final)
    session = Session(
        session_id=session.session_id,
        doc_type=session.doc_type,
        stage=Stage.FINALIZED,
        draft=final,
        autocheck=session.autocheck,
        edit_log=list(session.edit_log),
        pending_unit_cursor=None,
    )
    store.put_session(session)
    return final


# ---------------------------------------------------------------------------
# Replay
# ---------------------------------------------------------------------------


def replay_draft(g: GenericDocument, instance_id: str, edit_log: list[LoggedEdit]) -> DocumentInstance:
    """Rebuild the draft a session's log describes, deterministically.

    CreateVersion entries re-select the version number recorded at apply
    time rather than appending again, so replay leaves the generic alone.
    """
    draft = initial_draft(g, instance_id)
    for entry in edit_log:
        edit = entry.edit
        if isinstance(edit, (ToggleAutocheck, SetStage)):
            continue
        if isinstance(edit, CreateVersion):
            if edit.assigned_version is None:
                raise EditRejected("cannot replay a CreateVersion that was never applied")
            _include_chain(g, draft, edit.unit)
            draft.selections[edit.unit] = edit.assigned_version
            continue
        _apply_to_draft(g, draft, edit)
    return draft
