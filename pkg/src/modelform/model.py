"""Generic documents, unit trees, text versions, and document instances.

A *generic document* is the template side of one contract type: a tree of
units (parts, sections, sub-sections, ...) whose tips ("atomic units")
carry one or more alternative text versions, plus parameter declarations,
commentary, keyword suggestions, and structural constraints.  A *document
instance* is one drafted contract: parties, date, parameter bindings, and
a (unit, version) selection for every included atomic unit.  Actual
wording lives outside both, in a fragment store keyed by opaque
:class:`FragmentRef` pointers.

All values here are immutable snapshots: operations that "change" a
generic document return a new one.
"""

from __future__ import annotations

import datetime as dt
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Iterator, Mapping, Optional, Protocol

from .condexpr import IDENT_RE, Value, value_kind
from .errors import NotAtomic, NotFound

_FULL_IDENT_RE = re.compile(IDENT_RE.pattern + r"\Z")


class Inclusion(str, Enum):
    COMPULSORY = "compulsory"
    OPTIONAL = "optional"


class ParamKind(str, Enum):
    STRING = "string"
    INTEGER = "integer"
    DATE = "date"


class Status(str, Enum):
    DRAFT = "draft"
    FINAL = "final"


class TagKind(str, Enum):
    DUTY = "duty"
    RIGHT = "right"


# Reserved parameter names bound automatically from instance metadata.
BUILTIN_PARAMS = (
    "Party1.Name",
    "Party1.Address",
    "Party2.Name",
    "Party2.Address",
    "Date",
)


# ---------------------------------------------------------------------------
# Paths and small value types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UnitPath:
    """Label path addressing one unit, root part first."""

    labels: tuple[str, ...]

    def __post_init__(self):
        if not self.labels:
            raise ValueError("unit path must have at least one label")
        for label in self.labels:
            if not isinstance(label, str) or not label.strip():
                raise ValueError(f"unit path label must be non-empty, got {label!r}")

    @staticmethod
    def of(*labels: str) -> "UnitPath":
        return UnitPath(tuple(labels))

    @property
    def parent(self) -> Optional["UnitPath"]:
        if len(self.labels) == 1:
            return None
        return UnitPath(self.labels[:-1])

    @property
    def leaf(self) -> str:
        return self.labels[-1]

    def child(self, label: str) -> "UnitPath":
        return UnitPath(self.labels + (label,))

    def is_ancestor_of(self, other: "UnitPath") -> bool:
        """True for strict ancestors and for the path itself."""
        return other.labels[: len(self.labels)] == self.labels

    def __str__(self) -> str:
        return "/".join(self.labels)

    def __lt__(self, other: "UnitPath") -> bool:
        return self.labels < other.labels


def parse_path(text: str) -> UnitPath:
    """Parse the CLI/file syntax ``Part/Section/...`` into a path."""
    return UnitPath(tuple(part.strip() for part in text.split("/")))


@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: ParamKind = ParamKind.STRING
    required: bool = False

    def __post_init__(self):
        if not _FULL_IDENT_RE.match(self.name):
            raise ValueError(f"bad parameter name {self.name!r}")


@dataclass(frozen=True)
class ParamBinding:
    """A bound parameter value; ``scope=None`` means document level."""

    name: str
    value: Value
    scope: Optional[UnitPath] = None

    def __post_init__(self):
        if not _FULL_IDENT_RE.match(self.name):
            raise ValueError(f"bad parameter name {self.name!r}")
        value_kind(self.value)  # raises on unsupported values


@dataclass(frozen=True)
class FragmentRef:
    """Opaque pointer into a fragment store, unique within one generic."""

    id: str

    def __post_init__(self):
        if not re.match(r"[A-Za-z0-9._\-]+\Z", self.id):
            raise ValueError(f"fragment id {self.id!r} is not filesystem-safe")

    def __str__(self) -> str:
        return self.id


@dataclass(frozen=True)
class Party:
    name: str
    address: str = ""
    extra: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if not self.name.strip():
            raise ValueError("party name must be non-empty")


@dataclass(frozen=True)
class Tag:
    kind: TagKind
    party: int  # 1 or 2
    label: str = ""

    def __post_init__(self):
        if self.party not in (1, 2):
            raise ValueError("tag party index must be 1 or 2")


# ---------------------------------------------------------------------------
# Template tree
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TextVersion:
    """One alternative wording of an atomic unit.  Immutable once stored."""

    number: int
    fragment: FragmentRef
    params: tuple[ParamSpec, ...] = ()
    commentary: str = ""
    author: str = ""
    created: Optional[dt.date] = None


@dataclass(frozen=True)
class UnitTemplate:
    """One node of the unit tree: either a container or an atomic unit."""

    label: str
    inclusion: Inclusion = Inclusion.COMPULSORY
    order: int = 1
    params: tuple[ParamSpec, ...] = ()
    commentary: str = ""
    keyword_suggestions: frozenset[str] = frozenset()
    children: tuple["UnitTemplate", ...] = ()
    versions: tuple[TextVersion, ...] = ()

    @property
    def is_atomic(self) -> bool:
        return bool(self.versions)

    def ordered_children(self) -> tuple["UnitTemplate", ...]:
        return tuple(sorted(self.children, key=lambda c: c.order))


@dataclass(frozen=True)
class GenericDocument:
    doc_type: str
    category: str = ""
    params: tuple[ParamSpec, ...] = ()
    parts: tuple[UnitTemplate, ...] = ()
    constraints: tuple = ()  # of constraints.Constraint
    schema_version: int = 1

    def ordered_parts(self) -> tuple[UnitTemplate, ...]:
        return tuple(sorted(self.parts, key=lambda p: p.order))


# ---------------------------------------------------------------------------
# Fragment store protocols
# ---------------------------------------------------------------------------


class FragmentSource(Protocol):
    def get_fragment(self, ref: FragmentRef) -> str: ...


class FragmentSink(Protocol):
    def put_fragment(self, text: str) -> FragmentRef: ...


class MemoryFragments:
    """In-memory fragment store used when building generics programmatically."""

    def __init__(self, texts: Optional[Mapping[str, str]] = None):
        self.texts: dict[str, str] = dict(texts or {})

    def put_fragment(self, text: str) -> FragmentRef:
        n = len(self.texts) + 1
        while f"tf{n}" in self.texts:
            n += 1
        ref = FragmentRef(f"tf{n}")
        self.texts[ref.id] = text
        return ref

    def get_fragment(self, ref: FragmentRef) -> str:
        from .errors import FragmentUnreadable

        try:
            return self.texts[ref.id]
        except KeyError:
            raise FragmentUnreadable(ref) from None


# ---------------------------------------------------------------------------
# Document instances
# ---------------------------------------------------------------------------


@dataclass
class DocumentInstance:
    """One drafted contract.  Treated as an immutable snapshot by the engine;
    the assembly module copies before mutating."""

    doc_type: str
    id: str
    display_name: str = ""
    parties: Optional[tuple[Party, Party]] = None
    date: Optional[dt.date] = None
    bindings: list[ParamBinding] = field(default_factory=list)
    selections: dict[UnitPath, int] = field(default_factory=dict)
    included_optional: set[UnitPath] = field(default_factory=set)
    order_overrides: dict[Optional[UnitPath], tuple[str, ...]] = field(default_factory=dict)
    keywords: dict[UnitPath, set[str]] = field(default_factory=dict)
    tags: dict[UnitPath, set[Tag]] = field(default_factory=dict)
    notes: str = ""
    status: Status = Status.DRAFT

    def binding_value(self, name: str, scope: Optional[UnitPath] = None) -> Optional[Value]:
        for b in self.bindings:
            if b.name == name and b.scope == scope:
                return b.value
        return None

    def builtin_env(self) -> dict[str, Value]:
        env: dict[str, Value] = {}
        if self.parties is not None:
            p1, p2 = self.parties
            env["Party1.Name"] = p1.name
            env["Party1.Address"] = p1.address
            env["Party2.Name"] = p2.name
            env["Party2.Address"] = p2.address
        if self.date is not None:
            env["Date"] = self.date
        return env


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SchemaIssue:
    severity: str  # "error" or "warning"
    code: str
    where: str
    message: str


@dataclass
class ValidationReport:
    issues: list[SchemaIssue] = field(default_factory=list)

    @property
    def errors(self) -> list[SchemaIssue]:
        return [i for i in self.issues if i.severity == "error"]

    @property
    def warnings(self) -> list[SchemaIssue]:
        return [i for i in self.issues if i.severity == "warning"]

    @property
    def ok(self) -> bool:
        return not self.errors


def _check_param_scope(issues: list[SchemaIssue], where: str, specs: Iterable[ParamSpec]):
    seen = set()
    for spec in specs:
        if spec.name in seen:
            issues.append(
                SchemaIssue("error", "duplicate-param", where, f"duplicate parameter ${spec.name} in {where}")
            )
        seen.add(spec.name)


def _check_siblings(issues: list[SchemaIssue], where: str, siblings: tuple[UnitTemplate, ...]):
    labels = [u.label for u in siblings]
    for label in sorted({l for l in labels if labels.count(l) > 1}):
        issues.append(
            SchemaIssue("error", "duplicate-label", where, f"duplicate sibling label {label!r} under {where}")
        )
    orders = sorted(u.order for u in siblings)
    if orders != list(range(1, len(siblings) + 1)):
        issues.append(
            SchemaIssue(
                "error",
                "order-not-permutation",
                where,
                f"sibling order values under {where} are {orders}, not a permutation of 1..{len(siblings)}",
            )
        )


def _walk_validate(issues: list[SchemaIssue], path: UnitPath, unit: UnitTemplate):
    where = str(path)
    if unit.children and unit.versions:
        issues.append(
            SchemaIssue("error", "both-bodies", where, f"unit {where} has both children and versions")
        )
    if not unit.children and not unit.versions:
        issues.append(
            SchemaIssue("error", "empty-unit", where, f"unit {where} has neither children nor versions")
        )
    _check_param_scope(issues, where, unit.params)
    if unit.versions:
        numbers = sorted(v.number for v in unit.versions)
        if numbers != list(range(1, len(unit.versions) + 1)):
            issues.append(
                SchemaIssue(
                    "error",
                    "version-numbering",
                    where,
                    f"version numbers of {where} are {numbers}, not contiguous from 1",
                )
            )
        for v in unit.versions:
            _check_param_scope(issues, f"{where}@{v.number}", v.params)
    if unit.children:
        _check_siblings(issues, where, unit.children)
        for child in unit.children:
            _walk_validate(issues, path.child(child.label), child)


def validate_generic(g: GenericDocument) -> ValidationReport:
    """Schema-check a generic document; errors are the report, not exceptions."""
    from . import constraints as _constraints

    issues: list[SchemaIssue] = []
    if not g.parts:
        issues.append(SchemaIssue("error", "no-parts", g.doc_type, "generic document has no parts"))
    _check_param_scope(issues, "document", g.params)
    _check_siblings(issues, g.doc_type, g.parts)
    for part in g.parts:
        _walk_validate(issues, UnitPath.of(part.label), part)

    for i, c in enumerate(g.constraints):
        where = f"constraint #{i + 1}"
        for p in _constraints.constraint_paths(c):
            try:
                resolve_unit(g, p)
            except NotFound:
                issues.append(
                    SchemaIssue("error", "unresolved-path", where, f"{where} references unknown unit {p}")
                )
        pair = _constraints.constraint_pair(c)
        if pair is not None and pair[0] == pair[1]:
            issues.append(
                SchemaIssue("error", "self-pair", where, f"{where} relates a unit to itself")
            )
    issues.extend(
        SchemaIssue("warning", "constraint-conflict", where, msg)
        for where, msg in _constraints.trivial_conflicts(g.constraints)
    )
    return ValidationReport(issues)


# ---------------------------------------------------------------------------
# Navigation
# ---------------------------------------------------------------------------


def resolve_unit(g: GenericDocument, p: UnitPath) -> UnitTemplate:
    """Return the node addressed by ``p``, walking labels from the parts list."""
    siblings: tuple[UnitTemplate, ...] = g.parts
    node: Optional[UnitTemplate] = None
    for label in p.labels:
        node = next((u for u in siblings if u.label == label), None)
        if node is None:
            raise NotFound(p)
        siblings = node.children
    assert node is not None
    return node


def walk_units(g: GenericDocument, within: Optional[UnitPath] = None) -> Iterator[tuple[UnitPath, UnitTemplate]]:
    """Pre-order traversal of (path, unit), honoring sibling order values."""

    def rec(path: UnitPath, unit: UnitTemplate) -> Iterator[tuple[UnitPath, UnitTemplate]]:
        yield path, unit
        for child in unit.ordered_children():
            yield from rec(path.child(child.label), child)

    if within is not None:
        yield from rec(within, resolve_unit(g, within))
    else:
        for part in g.ordered_parts():
            yield from rec(UnitPath.of(part.label), part)


def atomic_units(g: GenericDocument, within: Optional[UnitPath] = None) -> list[UnitPath]:
    """The tips of the tree (version-bearing units), in document order."""
    return [path for path, unit in walk_units(g, within) if unit.is_atomic]


# ---------------------------------------------------------------------------
# Version growth
# ---------------------------------------------------------------------------


def _rebuild(unit: UnitTemplate, labels: tuple[str, ...], make: "callable") -> UnitTemplate:
    if not labels:
        return make(unit)
    head, rest = labels[0], labels[1:]
    children = tuple(
        _rebuild(c, rest, make) if c.label == head else c for c in unit.children
    )
    return replace(unit, children=children)


def add_version(
    g: GenericDocument,
    p: UnitPath,
    fragment_text: str,
    params: tuple[ParamSpec, ...],
    commentary: str,
    author: str,
    fragments: FragmentSink,
    created: Optional[dt.date] = None,
) -> tuple[GenericDocument, int]:
    """Append a new text version to the atomic unit at ``p``.

    The version set only ever grows: numbers continue from the current
    maximum and existing versions (and their fragments) are untouched.
    Identical text is not deduplicated — commentary and provenance differ.
    """
    unit = resolve_unit(g, p)
    if not unit.is_atomic:
        raise NotAtomic(p)
    number = max(v.number for v in unit.versions) + 1
    ref = fragments.put_fragment(fragment_text)
    version = TextVersion(
        number=number,
        fragment=ref,
        params=tuple(params),
        commentary=commentary,
        author=author,
        created=created or dt.date.today(),
    )

    def attach(u: UnitTemplate) -> UnitTemplate:
        return replace(u, versions=u.versions + (version,))

    head, rest = p.labels[0], p.labels[1:]
    parts = tuple(
        _rebuild(part, rest, attach) if part.label == head else part for part in g.parts
    )
    return replace(g, parts=parts), number


def get_version(g: GenericDocument, p: UnitPath, number: int) -> TextVersion:
    unit = resolve_unit(g, p)
    if not unit.is_atomic:
        raise NotAtomic(p)
    for v in unit.versions:
        if v.number == number:
            return v
    raise NotFound(p.child(f"@{number}"))


# ---------------------------------------------------------------------------
# Effective bindings
# ---------------------------------------------------------------------------


def effective_bindings(
    g: GenericDocument,
    inst: DocumentInstance,
    p: UnitPath,
    v: Optional[int] = None,
) -> dict[str, Value]:
    """Name -> value environment in effect at unit ``p`` (version ``v``).

    Nearest wins: bindings scoped to the unit shadow those on its
    ancestors, which shadow document-level bindings, which shadow the
    reserved built-ins.  The result is independent of the order bindings
    were entered because each (scope, name) pair holds one value.
    """
    resolve_unit(g, p)  # NotFound on bad path
    env = inst.builtin_env()
    for b in inst.bindings:
        if b.scope is None:
            env[b.name] = b.value
    chain = [UnitPath(p.labels[: i + 1]) for i in range(len(p.labels))]
    for scope in chain:  # root first, so nearer scopes overwrite
        for b in inst.bindings:
            if b.scope == scope:
                env[b.name] = b.value
    return env


def governing_spec(
    g: GenericDocument,
    scope: Optional[UnitPath],
    name: str,
    version: Optional[int] = None,
) -> Optional[ParamSpec]:
    """Find the nearest declaration governing a binding, if any.

    Looks at the scoped unit's versions and own params, then ancestors,
    then document-level params.  Unknown names are permitted (drafters may
    bind ad-hoc parameters used by custom versions)."""
    if scope is not None:
        unit = resolve_unit(g, scope)
        for ver in unit.versions:
            if version is not None and ver.number != version:
                continue
            for spec in ver.params:
                if spec.name == name:
                    return spec
        node: Optional[UnitPath] = scope
        while node is not None:
            for spec in resolve_unit(g, node).params:
                if spec.name == name:
                    return spec
            node = node.parent
    for spec in g.params:
        if spec.name == name:
            return spec
    return None


def binding_kind_ok(spec: ParamSpec, value: Value) -> bool:
    return value_kind(value) == spec.kind.value


# ---------------------------------------------------------------------------
# Inclusion (shared by constraints, render, and assembly)
# ---------------------------------------------------------------------------


def included_units(g: GenericDocument, inst: DocumentInstance) -> set[UnitPath]:
    """The set of units structurally present in the instance.

    A unit is included when every node on its path is either compulsory or
    explicitly opted in, and — for atomic units — a version is selected.
    Nothing inside an excluded subtree counts as included.
    """
    included: set[UnitPath] = set()

    def rec(path: UnitPath, unit: UnitTemplate):
        if unit.inclusion is Inclusion.OPTIONAL and path not in inst.included_optional:
            return
        if unit.is_atomic and path not in inst.selections:
            return
        included.add(path)
        for child in unit.children:
            rec(path.child(child.label), child)

    for part in g.parts:
        rec(UnitPath.of(part.label), part)
    return included


def default_selections(g: GenericDocument, within: Optional[UnitPath] = None) -> dict[UnitPath, int]:
    """Lowest-numbered version for every compulsory-reachable atomic unit."""

    out: dict[UnitPath, int] = {}

    def rec(path: UnitPath, unit: UnitTemplate, root: bool):
        if not root and unit.inclusion is Inclusion.OPTIONAL:
            return
        if unit.is_atomic:
            out[path] = min(v.number for v in unit.versions)
        for child in unit.children:
            rec(path.child(child.label), child, False)

    if within is not None:
        rec(within, resolve_unit(g, within), True)
    else:
        for part in g.parts:
            rec(UnitPath.of(part.label), part, False)
    return out
