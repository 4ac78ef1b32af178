"""Retrieval over the instance database: conjunctive filters plus expansion.

Every criterion is optional and all present criteria must hold ("the less
information, the more general the query").  Dates accept day, month, or
year granularity; "before December 1994" means strictly earlier than
1994-12-01.  Party matching is case-insensitive substring over name or
address, optionally pinned to the first or second party.  Matching is a
linear scan — desk-scale databases don't warrant an index.
"""

from __future__ import annotations

import datetime as dt
import re
from dataclasses import dataclass
from typing import Optional

from .errors import BadFilter
from .model import DocumentInstance, TagKind, UnitPath, parse_path
from .render import RenderedDocument, render_document
from .store import InstanceSummary, Store

_MONTH_RE = re.compile(r"(\d{4})-(\d{2})\Z")
_YEAR_RE = re.compile(r"(\d{4})\Z")


def parse_date_input(text: str) -> tuple[dt.date, dt.date]:
    """Normalize a day/month/year input to a half-open [start, end) range."""
    text = text.strip()
    m = _YEAR_RE.match(text)
    if m:
        year = int(m.group(1))
        return dt.date(year, 1, 1), dt.date(year + 1, 1, 1)
    m = _MONTH_RE.match(text)
    if m:
        year, month = int(m.group(1)), int(m.group(2))
        if not 1 <= month <= 12:
            raise BadFilter(f"bad month in date {text!r}")
        if month == 12:
            return dt.date(year, 12, 1), dt.date(year + 1, 1, 1)
        return dt.date(year, month, 1), dt.date(year, month + 1, 1)
    try:
        day = dt.date.fromisoformat(text)
    except ValueError:
        raise BadFilter(f"bad date {text!r}; use YYYY, YYYY-MM, or YYYY-MM-DD") from None
    return day, day + dt.timedelta(days=1)


@dataclass(frozen=True)
class DateRel:
    relation: str  # on | before | after
    start: dt.date
    end: dt.date  # exclusive

    def matches(self, d: Optional[dt.date]) -> bool:
        if d is None:
            return False
        if self.relation == "on":
            return self.start <= d < self.end
        if self.relation == "before":
            return d < self.start
        return d >= self.end  # after


@dataclass(frozen=True)
class PartyPattern:
    pattern: str
    index: Optional[int] = None  # 1, 2, or either


@dataclass(frozen=True)
class TagFilter:
    kind: TagKind
    party: Optional[int] = None
    label: Optional[str] = None


@dataclass
class QueryFilter:
    doc_type: Optional[str] = None
    category: Optional[str] = None
    date_rel: Optional[DateRel] = None
    party_name: Optional[PartyPattern] = None
    party_address: Optional[PartyPattern] = None
    keywords: frozenset[str] = frozenset()
    contains_version: tuple[tuple[UnitPath, int], ...] = ()
    tag: Optional[TagFilter] = None


def date_rel(relation: str, text: str) -> DateRel:
    if relation not in ("on", "before", "after"):
        raise BadFilter(f"unknown date relation {relation!r}")
    start, end = parse_date_input(text)
    return DateRel(relation, start, end)


def parse_contains(text: str) -> tuple[UnitPath, int]:
    """Parse the ``Part/Section@N`` unit-version syntax."""
    if "@" not in text:
        raise BadFilter(f"bad unit-version {text!r}; expected Path@N")
    path_text, _, version = text.rpartition("@")
    try:
        number = int(version)
    except ValueError:
        raise BadFilter(f"bad version number in {text!r}") from None
    if not path_text.strip():
        raise BadFilter(f"bad unit-version {text!r}; empty path")
    return parse_path(path_text), number


def parse_tag(text: str) -> TagFilter:
    """Parse ``kind[:party[:label]]``, e.g. ``duty:2`` or ``right:1:inspect``."""
    parts = text.split(":", 2)
    try:
        kind = TagKind(parts[0])
    except ValueError:
        raise BadFilter(f"bad tag kind {parts[0]!r}; use duty or right") from None
    party: Optional[int] = None
    if len(parts) > 1 and parts[1]:
        if parts[1] not in ("1", "2"):
            raise BadFilter(f"bad tag party {parts[1]!r}; use 1 or 2")
        party = int(parts[1])
    label = parts[2] if len(parts) > 2 and parts[2] else None
    return TagFilter(kind, party, label)


def _party_match(inst: DocumentInstance, pat: PartyPattern, attr: str) -> bool:
    if inst.parties is None:
        return False
    needle = pat.pattern.lower()
    candidates = (
        [inst.parties[pat.index - 1]] if pat.index in (1, 2) else list(inst.parties)
    )
    return any(needle in getattr(p, attr).lower() for p in candidates)


def matches(inst: DocumentInstance, category: str, f: QueryFilter) -> bool:
    if f.doc_type is not None and inst.doc_type != f.doc_type:
        return False
    if f.category is not None and category.lower() != f.category.lower():
        return False
    if f.date_rel is not None and not f.date_rel.matches(inst.date):
        return False
    if f.party_name is not None and not _party_match(inst, f.party_name, "name"):
        return False
    if f.party_address is not None and not _party_match(inst, f.party_address, "address"):
        return False
    if f.keywords:
        have = {kw.lower() for kws in inst.keywords.values() for kw in kws}
        if not {k.lower() for k in f.keywords} <= have:
            return False
    for path, version in f.contains_version:
        if inst.selections.get(path) != version:
            return False
    if f.tag is not None:
        t = f.tag
        found = any(
            tag.kind is t.kind
            and (t.party is None or tag.party == t.party)
            and (t.label is None or tag.label.lower() == t.label.lower())
            for tags in inst.tags.values()
            for tag in tags
        )
        if not found:
            return False
    return True


def run_query(store: Store, f: QueryFilter) -> list[InstanceSummary]:
    """All matching instances, ordered by date then id."""
    out = []
    for inst in store.iter_instances():
        summary = store.summarize(inst)
        if matches(inst, summary.category, f):
            out.append(summary)
    return sorted(out, key=lambda s: (s.date or dt.date.min, s.id))


def expand(store: Store, instance_id: str) -> RenderedDocument:
    """Retrieve a stored instance and reconstruct its full text."""
    inst = store.get_instance(instance_id)
    g = store.get_generic(inst.doc_type)
    return render_document(g, inst, store.fragments(inst.doc_type))
