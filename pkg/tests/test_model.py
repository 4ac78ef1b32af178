"""Document model: validation, navigation, version growth, bindings."""

import datetime as dt
import random

import pytest

from modelform import fixtures
from modelform.constraints import Forces, Incompatible, constraint_paths
from modelform.errors import NotAtomic, NotFound
from modelform.model import (
    DocumentInstance,
    GenericDocument,
    Inclusion,
    MemoryFragments,
    ParamBinding,
    ParamKind,
    ParamSpec,
    Party,
    TextVersion,
    UnitPath,
    UnitTemplate,
    add_version,
    atomic_units,
    default_selections,
    effective_bindings,
    included_units,
    parse_path,
    resolve_unit,
    validate_generic,
    walk_units,
)

C, O = Inclusion.COMPULSORY, Inclusion.OPTIONAL


def _leaf(label, order=1, inclusion=C, versions=1, frags=None):
    frags = frags if frags is not None else MemoryFragments()
    return UnitTemplate(
        label=label,
        inclusion=inclusion,
        order=order,
        versions=tuple(
            TextVersion(number=n, fragment=frags.put_fragment(f"{label} v{n}"))
            for n in range(1, versions + 1)
        ),
    )


# ---------------------------------------------------------------------------
# UnitPath
# ---------------------------------------------------------------------------


def test_unit_path_rejects_empty_labels():
    with pytest.raises(ValueError):
        UnitPath(())
    with pytest.raises(ValueError):
        UnitPath(("ok", "  "))


def test_parse_path_round_trip():
    p = parse_path("Certificates and Payment/Payment Terms")
    assert p.labels == ("Certificates and Payment", "Payment Terms")
    assert str(p) == "Certificates and Payment/Payment Terms"
    assert p.parent == UnitPath.of("Certificates and Payment")
    assert p.parent.parent is None


# ---------------------------------------------------------------------------
# validate_generic
# ---------------------------------------------------------------------------


def test_mf2_fixture_validates_clean(mf2):
    g, _ = mf2
    report = validate_generic(g)
    assert report.ok
    assert report.issues == []


def test_duplicate_sibling_labels_reported():
    g = GenericDocument(
        doc_type="T",
        parts=(_leaf("Force Majeure", 1), _leaf("Force Majeure", 2)),
    )
    report = validate_generic(g)
    assert [i.code for i in report.errors] == ["duplicate-label"]


def test_constraint_with_unresolved_path_reported(mf2):
    base, _ = mf2
    g = GenericDocument(
        doc_type="T",
        parts=(_leaf("A", 1), _leaf("B", 2)),
        constraints=(Forces(antecedent=UnitPath.of("A"), consequent=parse_path("No/Such/Unit")),),
    )
    report = validate_generic(g)
    assert [i.code for i in report.errors] == ["unresolved-path"]


def test_non_contiguous_versions_reported():
    frags = MemoryFragments()
    unit = UnitTemplate(
        label="A",
        order=1,
        versions=(
            TextVersion(number=1, fragment=frags.put_fragment("x")),
            TextVersion(number=3, fragment=frags.put_fragment("y")),
        ),
    )
    report = validate_generic(GenericDocument(doc_type="T", parts=(unit,)))
    assert [i.code for i in report.errors] == ["version-numbering"]


def test_order_not_permutation_reported():
    g = GenericDocument(doc_type="T", parts=(_leaf("A", 1), _leaf("B", 3)))
    report = validate_generic(g)
    assert [i.code for i in report.errors] == ["order-not-permutation"]


def test_empty_and_double_bodies_reported():
    frags = MemoryFragments()
    empty = UnitTemplate(label="E", order=1)
    both = UnitTemplate(
        label="B",
        order=2,
        children=(_leaf("X", 1, frags=frags),),
        versions=(TextVersion(number=1, fragment=frags.put_fragment("t")),),
    )
    report = validate_generic(GenericDocument(doc_type="T", parts=(empty, both)))
    assert sorted(i.code for i in report.errors) == ["both-bodies", "empty-unit"]


def test_no_parts_and_self_pair_reported():
    report = validate_generic(GenericDocument(doc_type="T"))
    assert [i.code for i in report.errors] == ["no-parts"]
    g = GenericDocument(
        doc_type="T",
        parts=(_leaf("A", 1),),
        constraints=(Incompatible(a=UnitPath.of("A"), b=UnitPath.of("A")),),
    )
    assert "self-pair" in [i.code for i in validate_generic(g).errors]


def test_trivial_conflict_is_warning_not_error():
    g = GenericDocument(
        doc_type="T",
        parts=(_leaf("A", 1, O), _leaf("B", 2, O)),
        constraints=(
            Forces(antecedent=UnitPath.of("A"), consequent=UnitPath.of("B")),
            Incompatible(a=UnitPath.of("A"), b=UnitPath.of("B")),
        ),
    )
    report = validate_generic(g)
    assert report.ok
    assert [i.code for i in report.warnings] == ["constraint-conflict"]


def test_clean_validation_implies_all_constraint_paths_resolve(mf2):
    g, _ = mf2
    assert validate_generic(g).ok
    for c in g.constraints:
        for p in constraint_paths(c):
            resolve_unit(g, p)  # must not raise


# ---------------------------------------------------------------------------
# resolve_unit / atomic_units
# ---------------------------------------------------------------------------


def test_resolve_extension_of_time(mf2):
    g, _ = mf2
    unit = resolve_unit(g, parse_path("Time for Completion/Extension of Time for Completion"))
    assert unit.is_atomic
    assert sorted(v.number for v in unit.versions) == [1, 2]


def test_resolve_interior_node(mf2):
    g, _ = mf2
    unit = resolve_unit(g, UnitPath.of("Time for Completion"))
    assert not unit.is_atomic
    assert [c.label for c in unit.ordered_children()] == [
        "Extension of Time for Completion",
        "Delays by Sub-Contractors",
    ]


def test_resolve_not_found(mf2):
    g, _ = mf2
    with pytest.raises(NotFound):
        resolve_unit(g, parse_path("Definitions and Interpretations/Nonexistent"))


def test_atomic_units_two_leaf_tree():
    frags = MemoryFragments()
    part = UnitTemplate(
        label="P", order=1,
        children=(_leaf("S1", 1, frags=frags), _leaf("S2", 2, frags=frags)),
    )
    g = GenericDocument(doc_type="T", parts=(part,))
    assert atomic_units(g) == [parse_path("P/S1"), parse_path("P/S2")]


def test_atomic_units_of_leaf_is_itself(mf2):
    g, _ = mf2
    leaf = parse_path("Certificates and Payment/Payment Terms")
    assert atomic_units(g, within=leaf) == [leaf]


def test_atomic_units_three_level_tree_hand_enumerated():
    # Seven-node fixture: part -> two sections -> two sub-sections each.
    # Hand enumeration: tips are exactly the four sub-sections, in order.
    frags = MemoryFragments()
    sec1 = UnitTemplate(label="S1", order=1, children=(_leaf("S1a", 1, frags=frags), _leaf("S1b", 2, frags=frags)))
    sec2 = UnitTemplate(label="S2", order=2, children=(_leaf("S2a", 1, frags=frags), _leaf("S2b", 2, frags=frags)))
    part = UnitTemplate(label="P", order=1, children=(sec1, sec2))
    g = GenericDocument(doc_type="T", parts=(part,))
    assert atomic_units(g) == [
        parse_path("P/S1/S1a"),
        parse_path("P/S1/S1b"),
        parse_path("P/S2/S2a"),
        parse_path("P/S2/S2b"),
    ]


def test_atomic_units_follow_sibling_order_values():
    frags = MemoryFragments()
    part = UnitTemplate(
        label="P", order=1,
        children=(_leaf("Late", 2, frags=frags), _leaf("Early", 1, frags=frags)),
    )
    g = GenericDocument(doc_type="T", parts=(part,))
    assert [p.leaf for p in atomic_units(g)] == ["Early", "Late"]


def test_every_atomic_unit_resolves_atomic(mf2):
    g, _ = mf2
    for p in atomic_units(g):
        assert resolve_unit(g, p).is_atomic


def test_walk_paths_resolve_to_same_node(mf2):
    g, _ = mf2
    for path, unit in walk_units(g):
        assert resolve_unit(g, path) is unit


# ---------------------------------------------------------------------------
# add_version
# ---------------------------------------------------------------------------


def test_add_version_numbers_continue():
    g, frags = fixtures.build_mf2()
    path = parse_path("Time for Completion/Extension of Time for Completion")
    g2, n = add_version(g, path, "new wording", (), "why", "me", frags)
    assert n == 3
    assert sorted(v.number for v in resolve_unit(g2, path).versions) == [1, 2, 3]
    # original untouched
    assert sorted(v.number for v in resolve_unit(g, path).versions) == [1, 2]


def test_add_version_rate_of_progress_modification():
    g, frags = fixtures.build_mf2()
    path = parse_path("Contractor's Obligations/Rate of Progress")
    original = frags.get_fragment(resolve_unit(g, path).versions[0].fragment)
    modified = original.replace("shall notify", "may notify").replace("decides", "considers")
    g2, n = add_version(
        g, path, modified, (), "Softened: notification discretionary, engineer's view subjective.",
        "drafting department", frags,
    )
    assert n == 2
    v2 = next(v for v in resolve_unit(g2, path).versions if v.number == 2)
    assert "may notify" in frags.get_fragment(v2.fragment)
    assert "considers" in frags.get_fragment(v2.fragment)
    assert v2.commentary.startswith("Softened")


def test_add_version_no_dedup_of_identical_text():
    g, frags = fixtures.build_mf2()
    path = parse_path("Force Majeure")
    g2, n2 = add_version(g, path, "same text", (), "", "a", frags)
    g3, n3 = add_version(g2, path, "same text", (), "", "b", frags)
    assert (n2, n3) == (2, 3)
    versions = resolve_unit(g3, path).versions
    assert len(versions) == 3
    refs = [v.fragment for v in versions if v.number in (2, 3)]
    assert refs[0] != refs[1]  # distinct fragments, no dedup


def test_add_version_monotone_and_prior_fragments_unchanged():
    g, frags = fixtures.build_mf2()
    rng = random.Random(7)
    targets = atomic_units(g)
    for step in range(8):
        path = rng.choice(targets)
        before = {
            (p, v.number): frags.get_fragment(v.fragment)
            for p, u in walk_units(g)
            for v in u.versions
        }
        old_count = len(before)
        g, n = add_version(g, path, f"text {step}", (), "", "t", frags)
        after = {
            (p, v.number): frags.get_fragment(v.fragment)
            for p, u in walk_units(g)
            for v in u.versions
        }
        assert len(after) == old_count + 1
        for key, text in before.items():
            assert after[key] == text  # byte-equal priors


def test_add_version_errors():
    g, frags = fixtures.build_mf2()
    with pytest.raises(NotFound):
        add_version(g, parse_path("Nope"), "t", (), "", "", frags)
    with pytest.raises(NotAtomic):
        add_version(g, parse_path("Time for Completion"), "t", (), "", "", frags)


# ---------------------------------------------------------------------------
# effective_bindings
# ---------------------------------------------------------------------------


def _draft(g):
    inst = DocumentInstance(doc_type=g.doc_type, id="X1")
    inst.selections = default_selections(g)
    return inst


def test_doc_level_engineer_plus_builtins(mf2):
    g, _ = mf2
    inst = _draft(g)
    inst.parties = (Party("A", "Leeds"), Party("B", "Paris"))
    inst.date = dt.date(1994, 5, 3)
    inst.bindings = [ParamBinding("Engineer", "Frank")]
    env = effective_bindings(g, inst, UnitPath.of("Force Majeure"))
    assert env["Engineer"] == "Frank"
    assert env["Party1.Name"] == "A"
    assert env["Party2.Address"] == "Paris"
    assert env["Date"] == dt.date(1994, 5, 3)


def test_version_scope_shadows_document_scope(mf2):
    g, _ = mf2
    inst = _draft(g)
    inst.bindings = [
        ParamBinding("days", 60),  # document level
        ParamBinding("days", 30, scope=fixtures.EQUIPMENT),  # at the unit carrying the version
    ]
    env = effective_bindings(g, inst, fixtures.EQUIPMENT, 1)
    assert env["days"] == 30
    elsewhere = effective_bindings(g, inst, UnitPath.of("Force Majeure"))
    assert elsewhere["days"] == 60


def test_no_bindings_only_builtins(mf2):
    g, _ = mf2
    inst = _draft(g)
    inst.parties = (Party("A", "x"), Party("B", "y"))
    inst.date = dt.date(1990, 1, 1)
    env = effective_bindings(g, inst, UnitPath.of("Force Majeure"))
    assert set(env) == {"Party1.Name", "Party1.Address", "Party2.Name", "Party2.Address", "Date"}


def test_effective_bindings_independent_of_insertion_order(mf2):
    g, _ = mf2
    rng = random.Random(3)
    bindings = [
        ParamBinding("Engineer", "Frank"),
        ParamBinding("days", 30, scope=fixtures.EQUIPMENT),
        ParamBinding("days", 60),
        ParamBinding("extra", "x", scope=UnitPath.of("Contractor's Obligations")),
    ]
    inst = _draft(g)
    envs = []
    for _ in range(6):
        rng.shuffle(bindings)
        inst.bindings = list(bindings)
        envs.append(effective_bindings(g, inst, fixtures.EQUIPMENT, 1))
    assert all(e == envs[0] for e in envs)
    assert envs[0]["days"] == 30
    assert envs[0]["extra"] == "x"  # inherited from ancestor unit scope


def test_param_spec_name_pattern_enforced():
    with pytest.raises(ValueError):
        ParamSpec("9bad")
    ParamSpec("Party1.Name")  # reserved built-ins match the pattern
    ParamSpec("days-v2", ParamKind.INTEGER)


# ---------------------------------------------------------------------------
# included_units
# ---------------------------------------------------------------------------


def test_included_units_excludes_unselected_optionals(mf2):
    g, _ = mf2
    inst = _draft(g)
    included = included_units(g, inst)
    tops = {p for p in included if len(p.labels) == 1}
    assert len(tops) == 10
    assert UnitPath.of("Precedence of Documents") not in included
    # opting in without a selection leaves an atomic unit out
    inst.included_optional.add(UnitPath.of("Precedence of Documents"))
    assert UnitPath.of("Precedence of Documents") not in included_units(g, inst)
    inst.selections[UnitPath.of("Precedence of Documents")] = 1
    assert UnitPath.of("Precedence of Documents") in included_units(g, inst)


def test_included_units_never_reach_into_excluded_subtrees(mf2):
    g, _ = mf2
    inst = _draft(g)
    # opting in a child of an excluded optional part does nothing
    inst.included_optional.add(fixtures.SUBCONTRACTORS_LIABILITY)
    inst.selections[fixtures.SUBCONTRACTORS_LIABILITY] = 1
    assert fixtures.SUBCONTRACTORS_LIABILITY not in included_units(g, inst)
