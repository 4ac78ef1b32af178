"""Full-text reconstruction from a skeletal instance.

The stored instance is only a tree of (unit, version) selections plus
data values; the readable document is rebuilt by retrieving each selected
fragment, substituting parameters, deriving heading numbers from the
effective unit order, and collating everything with a title block.  A
structural-markup export of the same content is provided for downstream
hypertext tooling.
"""

from __future__ import annotations

import datetime as dt
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .condexpr import Value
from .constraints import Refers
from .errors import UnboundPlaceholder
from .model import (
    DocumentInstance,
    FragmentSource,
    GenericDocument,
    UnitPath,
    UnitTemplate,
    effective_bindings,
    included_units,
)

_MONTHS = (
    "January", "February", "March", "April", "May", "June",
    "July", "August", "September", "October", "November", "December",
)

# `$` followed by an identifier is a placeholder; `$$` escapes a dollar.
_PLACEHOLDER_RE = re.compile(r"\$(\$|[A-Za-z_][A-Za-z0-9_.\-]*)")


def format_value(v: Value) -> str:
    """Contract-conventional rendering: dates as ``3 May 1994``, integers
    in decimal, strings verbatim."""
    if isinstance(v, dt.date):
        return f"{v.day} {_MONTHS[v.month - 1]} {v.year}"
    return str(v)


def substitute(fragment: str, env: Mapping[str, Value]) -> str:
    """Replace every ``$name`` placeholder (longest identifier match).

    Single pass: substituted values are never rescanned, so placeholder
    text inside a value cannot inject further substitution.  ``$$`` emits
    a literal dollar; a bare ``$`` not starting an identifier stays as-is.
    Raises :class:`UnboundPlaceholder` listing *all* unresolved names.
    """
    missing: list[str] = []

    def repl(m: re.Match) -> str:
        token = m.group(1)
        if token == "$":
            return "$"
        if token in env:
            return format_value(env[token])
        missing.append(token)
        return m.group(0)

    out = _PLACEHOLDER_RE.sub(repl, fragment)
    if missing:
        raise UnboundPlaceholder(missing)
    return out


# ---------------------------------------------------------------------------
# Collation
# ---------------------------------------------------------------------------


@dataclass
class RenderedDocument:
    text: str
    toc: list[tuple[str, UnitPath, str]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class _Entry:
    number: str
    path: UnitPath
    unit: UnitTemplate
    depth: int


def _effective_order(
    inst: DocumentInstance,
    parent: Optional[UnitPath],
    siblings: tuple[UnitTemplate, ...],
) -> list[UnitTemplate]:
    ordered = sorted(siblings, key=lambda u: u.order)
    override = inst.order_overrides.get(parent)
    if override:
        by_label = {u.label: u for u in ordered}
        ordered = [by_label[label] for label in override if label in by_label]
        ordered += [u for u in siblings if u.label not in override]
    return ordered


def collate(g: GenericDocument, inst: DocumentInstance) -> list[_Entry]:
    """Included units in display order, with derived heading numbers.

    Numbers are consecutive per level over *included* siblings only, so an
    instance that omits optional units still reads 1, 2, 3...
    """
    included = included_units(g, inst)
    entries: list[_Entry] = []

    def rec(prefix: str, parent: Optional[UnitPath], siblings, depth: int):
        position = 0
        for unit in _effective_order(inst, parent, tuple(siblings)):
            path = parent.child(unit.label) if parent else UnitPath.of(unit.label)
            if path not in included:
                continue
            position += 1
            number = f"{prefix}-{position}" if prefix else str(position)
            entries.append(_Entry(number, path, unit, depth))
            if unit.children:
                rec(number, path, unit.children, depth + 1)

    rec("", None, g.parts, 0)
    return entries


def _title_lines(g: GenericDocument, inst: DocumentInstance) -> list[str]:
    lines = [g.doc_type]
    if inst.display_name:
        lines.append(inst.display_name)
    meta: list[str] = []
    if inst.parties is not None:
        p1, p2 = inst.parties
        meta.append(f"Between: {p1.name}, {p1.address}" if p1.address else f"Between: {p1.name}")
        meta.append(f"And: {p2.name}, {p2.address}" if p2.address else f"And: {p2.name}")
    if inst.date is not None:
        meta.append(f"Dated: {format_value(inst.date)}")
    if meta:
        lines.append("")
        lines.extend(meta)
    return lines


def _selected_text(
    g: GenericDocument,
    inst: DocumentInstance,
    fragments: FragmentSource,
    path: UnitPath,
    unit: UnitTemplate,
    problems: list[tuple[UnitPath, list[str]]],
) -> Optional[str]:
    number = inst.selections[path]
    version = next(v for v in unit.versions if v.number == number)
    raw = fragments.get_fragment(version.fragment)
    env = effective_bindings(g, inst, path, number)
    try:
        return substitute(raw, env)
    except UnboundPlaceholder as exc:
        problems.append((path, exc.names))
        return None


def _raise_unbound(problems: list[tuple[UnitPath, list[str]]]):
    raise UnboundPlaceholder(
        [name for _, names in problems for name in names],
        where=[f"{path}: {', '.join('$' + n for n in names)}" for path, names in problems],
    )


def render_document(
    g: GenericDocument, inst: DocumentInstance, fragments: FragmentSource
) -> RenderedDocument:
    """Reconstruct the full plain-text document.  Deterministic: equal
    inputs produce byte-identical output."""
    entries = collate(g, inst)
    problems: list[tuple[UnitPath, list[str]]] = []
    texts: dict[UnitPath, str] = {}
    for e in entries:
        if e.unit.is_atomic:
            text = _selected_text(g, inst, fragments, e.path, e.unit, problems)
            if text is not None:
                texts[e.path] = text
    if problems:
        _raise_unbound(problems)

    lines = _title_lines(g, inst)
    for e in entries:
        if e.depth == 0:
            lines.extend(["", "", f"PART {e.number} — {e.unit.label}"])
        else:
            lines.extend(["", f"{e.number} {e.unit.label}"])
        if e.unit.is_atomic:
            lines.extend(["", texts[e.path]])

    included = {e.path for e in entries}
    warnings = []
    for c in g.constraints:
        if isinstance(c, Refers) and c.source in included and c.target not in included:
            warnings.append(f"'{c.source}' refers to '{c.target}', which is not in this document")

    toc = [(e.number, e.path, e.unit.label) for e in entries]
    return RenderedDocument(text="\n".join(lines) + "\n", toc=toc, warnings=warnings)


# ---------------------------------------------------------------------------
# Structural markup export
# ---------------------------------------------------------------------------


def export_markup(g: GenericDocument, inst: DocumentInstance, fragments: FragmentSource) -> str:
    """Nested-tag export of the same content as :func:`render_document`.

    Elements carry label/number/version/keyword/tag attributes and
    cross-references appear as explicit ``link`` elements so hypertext
    tooling can follow them.  Output is well-formed XML-style markup with
    markup-significant characters escaped.
    """
    entries = collate(g, inst)
    numbers = {e.path: e.number for e in entries}
    included = {e.path for e in entries}
    refers_by_source: dict[UnitPath, list[Refers]] = {}
    for c in g.constraints:
        if isinstance(c, Refers) and c.source in included and c.target in included:
            refers_by_source.setdefault(c.source, []).append(c)

    root = ET.Element("document", {"type": g.doc_type, "id": inst.id, "status": inst.status.value})
    if inst.display_name:
        root.set("name", inst.display_name)
    if inst.date is not None:
        root.set("date", inst.date.isoformat())
    if inst.parties is not None:
        for i, party in enumerate(inst.parties, start=1):
            ET.SubElement(root, "party", {"index": str(i), "name": party.name, "address": party.address})

    elements: dict[Optional[UnitPath], ET.Element] = {None: root}
    problems: list[tuple[UnitPath, list[str]]] = []
    for e in entries:
        tag = "part" if e.depth == 0 else "unit"
        el = ET.SubElement(elements[e.path.parent if e.depth else None], tag, {
            "number": e.number,
            "label": e.unit.label,
        })
        kws = inst.keywords.get(e.path)
        if kws:
            el.set("keywords", ",".join(sorted(kws)))
        tags = inst.tags.get(e.path)
        if tags:
            el.set("tags", ";".join(sorted(f"{t.kind.value}:{t.party}:{t.label}" for t in tags)))
        if e.unit.is_atomic:
            el.set("version", str(inst.selections[e.path]))
            text = _selected_text(g, inst, fragments, e.path, e.unit, problems)
            if text is not None:
                ET.SubElement(el, "text").text = text
        for ref in refers_by_source.get(e.path, ()):
            ET.SubElement(el, "link", {
                "rel": "refers",
                "target": str(ref.target),
                "target-number": numbers[ref.target],
            })
        elements[e.path] = el

    if problems:
        _raise_unbound(problems)
    ET.indent(root, space="  ")
    return ET.tostring(root, encoding="unicode") + "\n"
