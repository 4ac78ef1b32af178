"""Drafting sessions: lifecycle, edit rules, replay, finalize."""

import datetime as dt
import random
import threading

import pytest

from modelform import fixtures
from modelform.assembly import (
    ChooseVersion,
    CreateVersion,
    ExcludeUnit,
    IncludeUnit,
    Reorder,
    SetDate,
    SetDisplayName,
    SetKeywords,
    SetNotes,
    SetParam,
    SetParties,
    SetStage,
    SetTags,
    Stage,
    ToggleAutocheck,
    apply_edit,
    check_session,
    finalize,
    replay_draft,
    start_session,
)
from modelform.constraints import ViolationKind
from modelform.errors import (
    EditRejected,
    SessionStateError,
    UnknownDocType,
    ViolationsOutstanding,
)
from modelform.model import (
    Party,
    Tag,
    TagKind,
    UnitPath,
    included_units,
    parse_path,
    resolve_unit,
)

PARTIES = SetParties(
    Party("Northern Gas Works Ltd", "Corporation Street, Leeds"),
    Party("South Coast Energy Ltd", "UK"),
)
FRENCH_PARTIES = SetParties(
    Party("Northern Gas Works Ltd", "Corporation Street, Leeds"),
    Party("Compagnie Generale de Gaz", "France"),
)


def _session(store, *edits):
    session = start_session(store, fixtures.MF2)
    violations = []
    for edit in edits:
        session, violations = apply_edit(store, session, edit)
    return session, violations


def _complete(store, *extra, parties=PARTIES):
    """A session with everything a finalize needs bound."""
    return _session(
        store,
        parties,
        SetDate(dt.date(1995, 2, 1)),
        SetParam("Engineer", "Frank"),
        SetParam("days", 30, scope=fixtures.EQUIPMENT),
        *extra,
    )


# ---------------------------------------------------------------------------
# start_session
# ---------------------------------------------------------------------------


def test_start_session_preincludes_compulsory_parts(demo_store):
    session = start_session(demo_store, fixtures.MF2)
    assert session.stage is Stage.META
    assert session.autocheck is False
    g = demo_store.get_generic(fixtures.MF2)
    included = included_units(g, session.draft)
    top = sorted(str(p) for p in included if len(p.labels) == 1)
    assert top == sorted(
        [
            "Definitions and Interpretations",
            "Engineer and Engineer's Representative",
            "Basis of Tender and Contract Price",
            "Purchaser's General Obligations",
            "Contractor's Obligations",
            "Suspension of Work, Delivery or Erection",
            "Tests on Completion",
            "Certificates and Payment",
            "Force Majeure",
            "Time for Completion",
        ]
    )
    assert session.draft.included_optional == set()


def test_start_session_selects_lowest_versions(demo_store):
    session = start_session(demo_store, fixtures.MF2)
    assert session.draft.selections[fixtures.EXTENSION] == 1
    assert session.draft.selections[fixtures.PAYMENT_TERMS] == 1


def test_start_session_seeds_keywords(demo_store):
    session = start_session(demo_store, fixtures.MF2)
    assert session.draft.keywords[fixtures.PAYMENT_TERMS] == {"payment", "certificates"}


def test_start_session_unknown_type(demo_store):
    with pytest.raises(UnknownDocType):
        start_session(demo_store, "XYZ")


def test_session_ids_and_instance_ids_are_distinct_schemes(demo_store):
    s1 = start_session(demo_store, fixtures.MF2)
    s2 = start_session(demo_store, fixtures.MF2)
    assert s1.session_id != s2.session_id
    assert s1.draft.id == "Q1" and s2.draft.id == "Q2"


# ---------------------------------------------------------------------------
# apply_edit
# ---------------------------------------------------------------------------


def test_include_with_autocheck_reports_forces(demo_store):
    _, violations = _session(
        demo_store,
        PARTIES,
        ToggleAutocheck(True),
        IncludeUnit(fixtures.ASSIGNMENT_PART),
    )
    assert [v.kind for v in violations] == [ViolationKind.FORCES_UNSATISFIED]
    assert violations[0].subjects == (fixtures.SUBCONTRACTORS_LIABILITY,)


def test_autocheck_off_returns_no_violations(demo_store):
    _, violations = _session(
        demo_store,
        PARTIES,
        ToggleAutocheck(True),
        ToggleAutocheck(False),
        IncludeUnit(fixtures.ASSIGNMENT_PART),
    )
    assert violations == []


def test_exclude_compulsory_rejected(demo_store):
    session = start_session(demo_store, fixtures.MF2)
    with pytest.raises(EditRejected):
        apply_edit(store=demo_store, session=session, edit=ExcludeUnit(UnitPath.of("Definitions and Interpretations")))


def test_choose_version_validations(demo_store):
    session = start_session(demo_store, fixtures.MF2)
    with pytest.raises(EditRejected):  # no version 9
        apply_edit(demo_store, session, ChooseVersion(fixtures.EXTENSION, 9))
    with pytest.raises(EditRejected):  # not atomic
        apply_edit(demo_store, session, ChooseVersion(UnitPath.of("Time for Completion"), 1))
    with pytest.raises(EditRejected):  # not included yet
        apply_edit(demo_store, session, ChooseVersion(fixtures.PRECEDENCE, 2))
    session, _ = apply_edit(demo_store, session, IncludeUnit(fixtures.PRECEDENCE))
    session, _ = apply_edit(demo_store, session, ChooseVersion(fixtures.PRECEDENCE, 2))
    assert session.draft.selections[fixtures.PRECEDENCE] == 2


def test_include_unit_pulls_in_compulsory_descendants(demo_store):
    session, _ = _session(demo_store, IncludeUnit(fixtures.ASSIGNMENT_PART))
    sel = session.draft.selections
    assert sel[parse_path("Assignment and Sub-Contracting/Assignment")] == 1
    assert sel[parse_path("Assignment and Sub-Contracting/Sub-Contracting")] == 1
    assert fixtures.SUBCONTRACTORS_LIABILITY not in sel  # optional child stays out


def test_include_deep_unit_includes_ancestors(demo_store):
    session, _ = _session(demo_store, IncludeUnit(fixtures.SUBCONTRACTORS_LIABILITY))
    g = demo_store.get_generic(fixtures.MF2)
    assert fixtures.SUBCONTRACTORS_LIABILITY in included_units(g, session.draft)
    assert fixtures.ASSIGNMENT_PART in session.draft.included_optional


def test_exclude_removes_subtree(demo_store):
    session, _ = _session(
        demo_store,
        IncludeUnit(fixtures.ASSIGNMENT_PART),
        IncludeUnit(fixtures.SUBCONTRACTORS_LIABILITY),
        ExcludeUnit(fixtures.ASSIGNMENT_PART),
    )
    draft = session.draft
    assert all(not fixtures.ASSIGNMENT_PART.is_ancestor_of(p) for p in draft.selections)
    assert all(not fixtures.ASSIGNMENT_PART.is_ancestor_of(p) for p in draft.included_optional)


def test_set_param_kind_checked(demo_store):
    session = start_session(demo_store, fixtures.MF2)
    with pytest.raises(EditRejected):
        apply_edit(demo_store, session, SetParam("days", "thirty", scope=fixtures.EQUIPMENT))
    session, _ = apply_edit(demo_store, session, SetParam("days", 30, scope=fixtures.EQUIPMENT))
    assert session.draft.binding_value("days", fixtures.EQUIPMENT) == 30
    # undeclared ad-hoc parameters are allowed
    session, _ = apply_edit(demo_store, session, SetParam("SiteCity", "Leeds"))
    assert session.draft.binding_value("SiteCity") == "Leeds"


def test_set_param_replaces_existing_binding(demo_store):
    session, _ = _session(
        demo_store, SetParam("Engineer", "Frank"), SetParam("Engineer", "Grace")
    )
    assert session.draft.binding_value("Engineer") == "Grace"
    assert sum(1 for b in session.draft.bindings if b.name == "Engineer") == 1


def test_reorder_requires_permutation(demo_store):
    session = start_session(demo_store, fixtures.MF2)
    g = demo_store.get_generic(fixtures.MF2)
    labels = [u.label for u in g.ordered_parts()]
    with pytest.raises(EditRejected):
        apply_edit(demo_store, session, Reorder(None, tuple(labels[:-1])))
    flipped = tuple(reversed(labels))
    session, _ = apply_edit(demo_store, session, Reorder(None, flipped))
    assert session.draft.order_overrides[None] == flipped


def test_keywords_tags_notes_name(demo_store):
    session, _ = _session(
        demo_store,
        SetKeywords(fixtures.PAYMENT_TERMS, frozenset({"payment", "escrow"})),
        SetTags(fixtures.PAYMENT_TERMS, frozenset({Tag(TagKind.DUTY, 1, "pay")})),
        SetNotes("internal note"),
        SetDisplayName("Teesside Plant 1995"),
    )
    draft = session.draft
    assert draft.keywords[fixtures.PAYMENT_TERMS] == {"payment", "escrow"}
    assert draft.tags[fixtures.PAYMENT_TERMS] == {Tag(TagKind.DUTY, 1, "pay")}
    assert draft.notes == "internal note"
    assert draft.display_name == "Teesside Plant 1995"


def test_create_version_grows_generic_and_selects(demo_store):
    session, _ = _complete(demo_store)
    edit = CreateVersion(
        unit=fixtures.EXTENSION,
        text="Extensions of time are granted only by written instruction of the Engineer.",
        commentary="Tightened at purchaser request.",
        author="tester",
    )
    session, _ = apply_edit(demo_store, session, edit)
    g = demo_store.get_generic(fixtures.MF2)
    assert sorted(v.number for v in resolve_unit(g, fixtures.EXTENSION).versions) == [1, 2, 3]
    assert session.draft.selections[fixtures.EXTENSION] == 3
    logged = session.edit_log[-1].edit
    assert logged.assigned_version == 3


def test_non_version_edits_never_touch_the_generic(demo_store):
    record = demo_store.root / "generics" / "iee-mf-2" / "generic.json"
    before = record.read_bytes()
    _complete(
        demo_store,
        IncludeUnit(fixtures.PRECEDENCE),
        ChooseVersion(fixtures.PRECEDENCE, 2),
        ExcludeUnit(fixtures.PRECEDENCE),
        SetKeywords(fixtures.PAYMENT_TERMS, frozenset({"payment"})),
        SetNotes("n"),
        SetStage(Stage.REVIEW),
    )
    assert record.read_bytes() == before


def test_create_version_only_appends(demo_store):
    before = demo_store.get_generic(fixtures.MF2)
    session, _ = _complete(demo_store)
    apply_edit(
        demo_store,
        session,
        CreateVersion(unit=fixtures.PRECEDENCE, text="New precedence wording.", commentary="x"),
    )
    after = demo_store.get_generic(fixtures.MF2)
    assert after.doc_type == before.doc_type
    assert after.constraints == before.constraints
    for path in [fixtures.EXTENSION, fixtures.PAYMENT_TERMS]:
        assert resolve_unit(after, path).versions == resolve_unit(before, path).versions
    assert len(resolve_unit(after, fixtures.PRECEDENCE).versions) == 3


def test_concurrent_create_versions_get_distinct_numbers(demo_store):
    sessions = [_complete(demo_store)[0] for _ in range(2)]
    numbers = []
    errors = []

    def worker(session):
        try:
            s2, _ = apply_edit(
                demo_store,
                session,
                CreateVersion(unit=fixtures.EXTENSION, text=f"wording by {session.session_id}"),
            )
            numbers.append(s2.draft.selections[fixtures.EXTENSION])
        except Exception as exc:  # pragma: no cover
            errors.append(exc)

    threads = [threading.Thread(target=worker, args=(s,)) for s in sessions]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    assert sorted(numbers) == [3, 4]


def test_edits_rejected_after_finalize(demo_store):
    session, _ = _complete(demo_store, SetStage(Stage.REVIEW))
    finalize(demo_store, session)
    session = demo_store.get_session(session.session_id)
    with pytest.raises(EditRejected):
        apply_edit(demo_store, session, SetNotes("too late"))


def test_stage_edits(demo_store):
    session, _ = _session(demo_store, SetStage(Stage.COMPULSORY), SetStage(Stage.META))
    assert session.stage is Stage.META  # backward moves allowed
    with pytest.raises(EditRejected):
        apply_edit(demo_store, session, SetStage(Stage.FINALIZED))


# ---------------------------------------------------------------------------
# check_session / finalize
# ---------------------------------------------------------------------------


def test_fresh_session_checks_clean_except_pending(demo_store):
    session = start_session(demo_store, fixtures.MF2)
    violations = check_session(demo_store, session)
    assert all(v.pending for v in violations)  # nothing entered yet


def test_missing_engineer_not_reported_interactively(demo_store):
    session, _ = _complete(demo_store)
    session.draft.bindings = [b for b in session.draft.bindings if b.name != "Engineer"]
    assert check_session(demo_store, session) == []


def test_finalize_requires_review_stage(demo_store):
    session, _ = _complete(demo_store)
    with pytest.raises(SessionStateError):
        finalize(demo_store, session)


def test_finalize_rejects_missing_engineer_then_succeeds(demo_store):
    session, _ = _session(
        demo_store,
        PARTIES,
        SetDate(dt.date(1995, 2, 1)),
        SetParam("days", 30, scope=fixtures.EQUIPMENT),
        SetStage(Stage.REVIEW),
    )
    with pytest.raises(ViolationsOutstanding) as exc:
        finalize(demo_store, session)
    missing = [
        v for v in exc.value.violations if v.kind is ViolationKind.MISSING_PARAMETER
    ]
    assert [v.subjects for v in missing] == [("Engineer",)]
    session = demo_store.get_session(session.session_id)
    session, _ = apply_edit(demo_store, session, SetParam("Engineer", "Frank"))
    instance = finalize(demo_store, session)
    assert instance.status.value == "final"
    assert check_session(demo_store, demo_store.get_session(session.session_id)) == []
    stored = demo_store.get_instance(instance.id)
    g = demo_store.get_generic(fixtures.MF2)
    from modelform.constraints import CheckStage, check

    assert check(g, stored, CheckStage.FINALIZE) == []


def test_finalize_blocked_by_pending_guard(demo_store):
    # no parties entered: the address-dependent forces rule is undetermined
    session, _ = _session(
        demo_store,
        SetDate(dt.date(1995, 2, 1)),
        SetParam("Engineer", "Frank"),
        SetParam("days", 30, scope=fixtures.EQUIPMENT),
        SetStage(Stage.REVIEW),
    )
    with pytest.raises(ViolationsOutstanding) as exc:
        finalize(demo_store, session)
    assert any(v.pending for v in exc.value.violations)
    assert demo_store.get_session(session.session_id).stage is Stage.REVIEW  # not finalized


def test_finalize_persists_nothing_on_failure(demo_store):
    before = {s.id for s in demo_store.list_instances()}
    session, _ = _session(demo_store, SetStage(Stage.REVIEW))
    with pytest.raises(ViolationsOutstanding):
        finalize(demo_store, session)
    assert {s.id for s in demo_store.list_instances()} == before


def test_finalize_requires_forced_units(demo_store):
    session, _ = _complete(demo_store, parties=FRENCH_PARTIES)
    session, _ = apply_edit(demo_store, session, SetStage(Stage.REVIEW))
    with pytest.raises(ViolationsOutstanding) as exc:
        finalize(demo_store, session)
    assert any(
        v.kind is ViolationKind.FORCES_UNSATISFIED
        and v.subjects == (fixtures.FOREIGN_CURRENCY,)
        for v in exc.value.violations
    )
    session = demo_store.get_session(session.session_id)
    session, _ = apply_edit(demo_store, session, IncludeUnit(fixtures.FOREIGN_CURRENCY))
    assert finalize(demo_store, session).selections[fixtures.FOREIGN_CURRENCY] == 1


# ---------------------------------------------------------------------------
# persistence and replay
# ---------------------------------------------------------------------------


def test_sessions_resume_across_store_reopen(demo_store, tmp_path):
    session, _ = _complete(demo_store)
    from modelform.store import Store

    reopened = Store(demo_store.root)
    loaded = reopened.get_session(session.session_id)
    assert loaded == session


def test_compulsory_coverage_invariant_random_edits(demo_store):
    """Whatever edits happen, every compulsory atomic unit under included
    parts keeps a selection."""
    rng = random.Random(31)
    session = start_session(demo_store, fixtures.MF2)
    optional = [
        fixtures.PRECEDENCE,
        fixtures.ASSIGNMENT_PART,
        fixtures.FOREIGN_CURRENCY,
        fixtures.SUBCONTRACTORS_LIABILITY,
    ]
    for _ in range(40):
        action = rng.choice(["include", "exclude", "choose"])
        target = rng.choice(optional)
        try:
            if action == "include":
                session, _ = apply_edit(demo_store, session, IncludeUnit(target))
            elif action == "exclude":
                session, _ = apply_edit(demo_store, session, ExcludeUnit(target))
            else:
                session, _ = apply_edit(demo_store, session, ChooseVersion(fixtures.EXTENSION, rng.choice([1, 2])))
        except EditRejected:
            continue
        g_now = demo_store.get_generic(fixtures.MF2)
        included = included_units(g_now, session.draft)
        for path in included:
            unit = resolve_unit(g_now, path)
            if unit.is_atomic:
                assert path in session.draft.selections


def test_replay_reproduces_draft_field_for_field(demo_store):
    rng = random.Random(37)
    session = start_session(demo_store, fixtures.MF2)
    pool = [
        PARTIES,
        SetDate(dt.date(1995, 4, 4)),
        SetParam("Engineer", "Ada"),
        SetParam("days", 21, scope=fixtures.EQUIPMENT),
        IncludeUnit(fixtures.PRECEDENCE),
        ChooseVersion(fixtures.EXTENSION, 2),
        IncludeUnit(fixtures.ASSIGNMENT_PART),
        ExcludeUnit(fixtures.ASSIGNMENT_PART),
        SetKeywords(fixtures.PAYMENT_TERMS, frozenset({"payment", "milestones"})),
        SetTags(fixtures.EXTENSION, frozenset({Tag(TagKind.RIGHT, 2, "claim extension")})),
        SetNotes("replay me"),
        SetDisplayName("Replay Plant"),
        ToggleAutocheck(True),
        SetStage(Stage.OPTIONAL),
        CreateVersion(unit=fixtures.PAYMENT_TERMS, text="Payment due on milestones only.", commentary="m"),
    ]
    for _ in range(25):
        edit = rng.choice(pool)
        try:
            session, _ = apply_edit(demo_store, session, edit)
        except EditRejected:
            pass
    stored = demo_store.get_session(session.session_id)
    g = demo_store.get_generic(fixtures.MF2)
    replayed = replay_draft(g, stored.draft.id, stored.edit_log)
    assert replayed == stored.draft


def test_replay_create_version_does_not_reappend(demo_store):
    session, _ = _complete(demo_store)
    session, _ = apply_edit(
        demo_store, session, CreateVersion(unit=fixtures.EXTENSION, text="New wording.")
    )
    g_after = demo_store.get_generic(fixtures.MF2)
    count = len(resolve_unit(g_after, fixtures.EXTENSION).versions)
    replayed = replay_draft(g_after, session.draft.id, session.edit_log)
    assert replayed == session.draft
    assert len(resolve_unit(demo_store.get_generic(fixtures.MF2), fixtures.EXTENSION).versions) == count
