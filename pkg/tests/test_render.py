"""Rendering: substitution, collation, numbering, markup export."""

import datetime as dt
import re
import xml.etree.ElementTree as ET

import pytest

from modelform import fixtures
from modelform.errors import UnboundPlaceholder
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
    default_selections,
    parse_path,
)
from modelform.render import collate, export_markup, format_value, render_document, substitute


# ---------------------------------------------------------------------------
# substitute
# ---------------------------------------------------------------------------


def test_substitute_days():
    out = substitute("within $days days after the Letter of Acceptance", {"days": 30})
    assert out == "within 30 days after the Letter of Acceptance"


def test_substitute_dollar_escape():
    assert substitute("costs $$100", {}) == "costs $100"
    assert substitute("costs $$$days", {"days": 5}) == "costs $5"


def test_substitute_unbound_lists_all():
    with pytest.raises(UnboundPlaceholder) as exc:
        substitute("$Engineer shall notify $Contractor", {})
    assert exc.value.names == ["Contractor", "Engineer"]


def test_substitute_bare_dollar_left_alone():
    assert substitute("a $100 fee", {}) == "a $100 fee"


def test_substitute_longest_identifier_match():
    env = {"Party1.Name": "Alpha"}
    assert substitute("by $Party1.Name, witnessed", env) == "by Alpha, witnessed"


def test_substitute_single_pass_no_value_rescanning():
    out = substitute("pay $a now", {"a": "$b", "b": "nope"})
    assert out == "pay $b now"
    # substituting its own output (no $-bearing values) is then a no-op
    assert substitute(out.replace("$", "$$"), {"b": "x"}) == out


def test_substitute_idempotent_on_own_output():
    # single pass restated: with no $-bearing values, re-substituting the
    # output changes nothing
    env = {"days": 30, "Engineer": "Frank"}
    for fragment in (
        "within $days days, $Engineer shall act",
        "costs $$100 and $$ more",
        "no placeholders at all",
    ):
        out = substitute(fragment, env)
        assert substitute(out, env) == out


def test_format_value_date_and_int():
    assert format_value(dt.date(1994, 5, 3)) == "3 May 1994"
    assert format_value(1200) == "1200"
    assert format_value("verbatim") == "verbatim"


# ---------------------------------------------------------------------------
# collation fixtures
# ---------------------------------------------------------------------------


def _two_part_generic():
    frags = MemoryFragments()

    def leaf(label, order, text, inclusion=Inclusion.COMPULSORY):
        return UnitTemplate(
            label=label, inclusion=inclusion, order=order,
            versions=(TextVersion(number=1, fragment=frags.put_fragment(text)),),
        )

    g = GenericDocument(
        doc_type="TWO",
        parts=(
            UnitTemplate(label="First", order=1, children=(leaf("Alpha", 1, "alpha text."),)),
            UnitTemplate(label="Second", order=2, children=(leaf("Beta", 1, "beta text."),)),
        ),
    )
    return g, frags


def _instance(g):
    inst = DocumentInstance(doc_type=g.doc_type, id="T1", display_name="Test Doc")
    inst.selections = default_selections(g)
    inst.parties = (Party("A Ltd", "Leeds"), Party("B SA", "Lyon"))
    inst.date = dt.date(1994, 5, 3)
    return inst


def test_headings_numbered_by_position():
    g, frags = _two_part_generic()
    rendered = render_document(g, _instance(g), frags)
    assert "PART 1 — First" in rendered.text
    assert "1-1 Alpha" in rendered.text
    assert "PART 2 — Second" in rendered.text
    assert "2-1 Beta" in rendered.text
    assert [e[0] for e in rendered.toc] == ["1", "1-1", "2", "2-1"]


def test_render_deterministic_byte_identical():
    g, frags = _two_part_generic()
    inst = _instance(g)
    assert render_document(g, inst, frags).text == render_document(g, inst, frags).text


def test_title_block_contents(mf2, demo_store):
    from modelform.query import expand

    rendered = expand(demo_store, "R1")
    head = rendered.text.splitlines()[:8]
    assert head[0] == "IEE MF/2"
    assert head[1] == "Paris Plant 1992"
    assert any(line.startswith("Between: Northern Gas Works Ltd") for line in head)
    assert any(line.startswith("And: Compagnie Generale de Gaz") for line in head)
    assert "Dated: 14 March 1992" in head


def test_precedence_version2_wording(demo_store):
    from modelform.query import expand

    text = expand(demo_store, "R1").text
    assert "mutually explanatory of one another" in text
    assert "shall prevail over any other document" not in text


def test_excluded_units_absent_and_numbering_closes_gaps(demo_store):
    from modelform.query import expand

    r2 = expand(demo_store, "R2").text  # includes no optional parts
    assert "Assignment and Sub-Contracting" not in r2
    assert "Foreign Currency" not in r2
    # ten included parts numbered consecutively
    part_numbers = [int(m.group(1)) for m in re.finditer(r"^PART (\d+) — ", r2, re.M)]
    assert part_numbers == list(range(1, 11))


def test_toc_numbering_crosswalks_tree(demo_store):
    g = demo_store.get_generic(fixtures.MF2)
    inst = demo_store.get_instance("R1")
    entries = collate(g, inst)
    by_number = {e.number: e for e in entries}
    for e in entries:
        if "-" in e.number:
            parent_number, pos = e.number.rsplit("-", 1)
            parent = by_number[parent_number]
            assert parent.path == e.path.parent
            # the unit numbered N-M is the M-th included child of N
            siblings = [x for x in entries if x.path.parent == parent.path]
            assert siblings[int(pos) - 1].path == e.path


def test_order_override_changes_numbering():
    g, frags = _two_part_generic()
    inst = _instance(g)
    inst.order_overrides[None] = ("Second", "First")
    rendered = render_document(g, inst, frags)
    assert [e[0] for e in rendered.toc] == ["1", "1-1", "2", "2-1"]
    assert [e[2] for e in rendered.toc] == ["Second", "Beta", "First", "Alpha"]
    assert rendered.text.index("Second") < rendered.text.index("First")


def test_blank_line_conventions():
    g, frags = _two_part_generic()
    text = render_document(g, _instance(g), frags).text
    assert "\n\n\nPART 1 — First\n" in text  # two blank lines before part headings
    assert "\n\n1-1 Alpha\n\nalpha text." in text  # one blank line between units
    assert text.endswith("beta text.\n")


def test_unbound_placeholder_aggregated_with_unit_paths(demo_store):
    g = demo_store.get_generic(fixtures.MF2)
    inst = demo_store.get_instance("R1")
    inst.bindings = [b for b in inst.bindings if b.name != "days"]
    with pytest.raises(UnboundPlaceholder) as exc:
        render_document(g, inst, demo_store.fragments(fixtures.MF2))
    assert exc.value.names == ["days"]
    assert any("Contractor's Equipment" in w for w in exc.value.where)


def test_render_warns_on_refers_to_missing_target():
    frags = MemoryFragments()
    from modelform.constraints import Refers

    g = GenericDocument(
        doc_type="W",
        parts=(
            UnitTemplate(label="A", order=1, versions=(TextVersion(1, frags.put_fragment("a")),)),
            UnitTemplate(
                label="B", order=2, inclusion=Inclusion.OPTIONAL,
                versions=(TextVersion(1, frags.put_fragment("b")),),
            ),
        ),
        constraints=(Refers(source=UnitPath.of("A"), target=UnitPath.of("B")),),
    )
    inst = DocumentInstance(doc_type="W", id="T1")
    inst.selections = default_selections(g)
    rendered = render_document(g, inst, frags)
    assert rendered.warnings and "refers to" in rendered.warnings[0]


# ---------------------------------------------------------------------------
# the three encodings of the equipment-list clause
# ---------------------------------------------------------------------------

_SENTENCE = "The Contractor shall within 30 days after the Letter of Acceptance provide to the Engineer a list of equipment."


def test_three_encodings_of_parameterized_clause():
    """Alternative versions, a parameter, or sub-sections: all three
    representations of the same clause render the same obligation."""
    frags = MemoryFragments()
    as_versions = UnitTemplate(
        label="By Versions", order=1,
        versions=(
            TextVersion(1, frags.put_fragment(_SENTENCE)),
            TextVersion(2, frags.put_fragment(_SENTENCE.replace("30", "60"))),
        ),
    )
    as_param = UnitTemplate(
        label="By Parameter", order=2,
        versions=(
            TextVersion(
                1,
                frags.put_fragment(_SENTENCE.replace("30", "$days")),
                params=(ParamSpec("days", ParamKind.INTEGER, required=True),),
            ),
        ),
    )
    as_subsections = UnitTemplate(
        label="By Sub-Sections", order=3,
        children=(
            UnitTemplate(
                label="Duty", order=1,
                versions=(TextVersion(1, frags.put_fragment(
                    "The Contractor shall provide to the Engineer a list of equipment.")),),
            ),
            UnitTemplate(
                label="Deadline", order=2,
                versions=(TextVersion(1, frags.put_fragment(
                    "Such list will be provided within $days days after the Letter of Acceptance.")),
                          TextVersion(2, frags.put_fragment(
                    "Such list will be provided promptly after the Letter of Acceptance."))),
                params=(ParamSpec("days", ParamKind.INTEGER),),
            ),
        ),
    )
    g = GenericDocument(doc_type="ENC", parts=(as_versions, as_param, as_subsections))
    inst = DocumentInstance(doc_type="ENC", id="T1")
    inst.selections = default_selections(g)
    inst.bindings = [ParamBinding("days", 30)]
    text = render_document(g, inst, frags).text
    assert text.count("within 30 days after the Letter of Acceptance") == 3


# ---------------------------------------------------------------------------
# markup export
# ---------------------------------------------------------------------------


def test_markup_minimal_instance_well_formed():
    g, frags = _two_part_generic()
    markup = export_markup(g, _instance(g), frags)
    root = ET.fromstring(markup)  # off-the-shelf well-formedness check
    assert root.tag == "document"
    units = root.findall("./part/unit")
    assert [u.get("version") for u in units] == ["1", "1"]


def test_markup_link_elements_for_refers(demo_store):
    g = demo_store.get_generic(fixtures.MF2)
    inst = demo_store.get_instance("R1")
    root = ET.fromstring(export_markup(g, inst, demo_store.fragments(fixtures.MF2)))
    links = root.findall(".//link")
    assert len(links) == 1
    (link,) = links
    assert link.get("rel") == "refers"
    assert link.get("target") == str(fixtures.EXTENSION)


def test_markup_escapes_significant_characters():
    frags = MemoryFragments()
    g = GenericDocument(
        doc_type="ESC",
        parts=(
            UnitTemplate(
                label="A <&> B", order=1,
                versions=(TextVersion(1, frags.put_fragment('text with <tags> & "quotes"')),),
            ),
        ),
    )
    inst = DocumentInstance(doc_type="ESC", id="T1")
    inst.selections = default_selections(g)
    markup = export_markup(g, inst, frags)
    root = ET.fromstring(markup)
    part = root.find("part")
    assert part.get("label") == "A <&> B"
    assert part.find("text").text == 'text with <tags> & "quotes"'


def test_markup_well_formed_across_fixture_corpus(demo_store):
    for summary in demo_store.list_instances():
        inst = demo_store.get_instance(summary.id)
        g = demo_store.get_generic(inst.doc_type)
        ET.fromstring(export_markup(g, inst, demo_store.fragments(inst.doc_type)))


def test_markup_and_plain_text_agree_on_fragment_content(demo_store):
    g = demo_store.get_generic(fixtures.MF2)
    inst = demo_store.get_instance("R1")
    frags = demo_store.fragments(fixtures.MF2)
    plain = render_document(g, inst, frags).text
    root = ET.fromstring(export_markup(g, inst, frags))

    def norm(s):
        return re.sub(r"\s+", " ", s).strip()

    texts = [norm(el.text or "") for el in root.iter("text")]
    assert texts  # every selected fragment appears once, in order
    plain_norm = norm(plain)
    pos = -1
    for t in texts:
        nxt = plain_norm.find(t, pos + 1)
        assert nxt > pos, t
        pos = nxt


def test_markup_carries_keywords_and_tags(demo_store):
    g = demo_store.get_generic(fixtures.MF2)
    inst = demo_store.get_instance("R1")
    root = ET.fromstring(export_markup(g, inst, demo_store.fragments(fixtures.MF2)))
    payment = [
        el for el in root.iter("unit") if el.get("label") == "Payment Terms"
    ]
    assert payment[0].get("keywords") == "certificates,letter of credit,payment"
    assert payment[0].get("tags") == "duty:1:pay certified amounts"
