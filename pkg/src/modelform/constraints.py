"""Structural constraints over document instances and their checking.

Five constraint forms govern what a well-formed instance may contain:

* ``Forces(antecedent, consequent)`` — if the antecedent (a unit, or a
  condition over entered data) holds, the consequent unit must be included;
* ``Incompatible(a, b)`` — a and b cannot both appear;
* ``ExclusiveOr(a, b)`` — exactly one of a and b must appear;
* ``Refers(source, target)`` — a cross-reference: including the source
  requires the target;
* ``DataConstraint(expr, message)`` — a condition over entered data that
  must hold outright (e.g. the contracting parties must not be identical).

The first three accept an optional ``when`` guard (a condition expression).
Checking runs in two steps: the *required-units closure* (a least fixpoint
over compulsory flags, forces edges, and cross-references, computed by the
bitmask kernel in :mod:`modelform._kernel`), then direct evaluation of the
pair and data constraints.  A constraint whose condition cannot be
evaluated yet (unbound references) never fires outright: it is reported
with ``pending=True`` when — and only when — its outcome still depends on
the missing values.
"""

from __future__ import annotations

import re
from array import array
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Union

from . import _kernel
from .condexpr import CondExpr, Tri, Value, eval_cond, free_refs, to_source
from .model import (
    DocumentInstance,
    FragmentSource,
    GenericDocument,
    Inclusion,
    UnitPath,
    UnitTemplate,
    effective_bindings,
    resolve_unit,
    walk_units,
)

# ---------------------------------------------------------------------------
# Constraint forms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Forces:
    antecedent: Union[UnitPath, CondExpr]
    consequent: UnitPath
    guard: Optional[CondExpr] = None


@dataclass(frozen=True)
class Incompatible:
    a: UnitPath
    b: UnitPath
    guard: Optional[CondExpr] = None


@dataclass(frozen=True)
class ExclusiveOr:
    a: UnitPath
    b: UnitPath
    guard: Optional[CondExpr] = None


@dataclass(frozen=True)
class Refers:
    source: UnitPath
    target: UnitPath


@dataclass(frozen=True)
class DataConstraint:
    expr: CondExpr
    message: str


Constraint = Union[Forces, Incompatible, ExclusiveOr, Refers, DataConstraint]


def constraint_paths(c: Constraint) -> list[UnitPath]:
    """Every unit path a constraint mentions (for validation)."""
    if isinstance(c, Forces):
        paths = [c.consequent]
        if isinstance(c.antecedent, UnitPath):
            paths.insert(0, c.antecedent)
        return paths
    if isinstance(c, (Incompatible, ExclusiveOr)):
        return [c.a, c.b]
    if isinstance(c, Refers):
        return [c.source, c.target]
    return []


def constraint_pair(c: Constraint) -> Optional[tuple[UnitPath, UnitPath]]:
    if isinstance(c, (Incompatible, ExclusiveOr)):
        return (c.a, c.b)
    return None


def trivial_conflicts(constraints: Iterable[Constraint]) -> list[tuple[str, str]]:
    """Syntactically detectable conflicts, reported as validation warnings.

    Only the obvious case is flagged: an unguarded Forces(A, B) together
    with an unguarded Incompatible(A, B) makes A unusable.
    """
    constraints = list(constraints)
    incompat = {
        frozenset((c.a, c.b))
        for c in constraints
        if isinstance(c, Incompatible) and c.guard is None
    }
    out = []
    for i, c in enumerate(constraints):
        if (
            isinstance(c, Forces)
            and c.guard is None
            and isinstance(c.antecedent, UnitPath)
            and frozenset((c.antecedent, c.consequent)) in incompat
        ):
            out.append(
                (
                    f"constraint #{i + 1}",
                    f"Forces({c.antecedent} -> {c.consequent}) conflicts with an "
                    f"Incompatible constraint on the same pair; including "
                    f"'{c.antecedent}' can never check clean",
                )
            )
    return out


# ---------------------------------------------------------------------------
# Violations and remedies
# ---------------------------------------------------------------------------


class ViolationKind(str, Enum):
    MISSING_COMPULSORY = "missing_compulsory"
    FORCES_UNSATISFIED = "forces_unsatisfied"
    INCOMPATIBLE_PAIR = "incompatible_pair"
    EXCLUSIVE_OR_UNSATISFIED = "exclusive_or_unsatisfied"
    DANGLING_REFERENCE = "dangling_reference"
    DATA_VIOLATION = "data_violation"
    MISSING_PARAMETER = "missing_parameter"


Subject = Union[UnitPath, str]


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    subjects: tuple[Subject, ...]
    message: str
    pending: bool = False
    source: Optional[Constraint] = None
    source_index: Optional[int] = None
    unbound: tuple[str, ...] = ()  # names whose absence made the check pending


class RemedyAction(str, Enum):
    INCLUDE = "include"
    EXCLUDE = "exclude"
    SET_PARAMETER = "set_parameter"


@dataclass(frozen=True)
class Remedy:
    action: RemedyAction
    unit: Optional[UnitPath] = None
    param: Optional[str] = None
    rationale: str = ""


class CheckStage(str, Enum):
    INTERACTIVE = "interactive"
    FINALIZE = "finalize"


# ---------------------------------------------------------------------------
# Checker
# ---------------------------------------------------------------------------


def _unbound(expr: CondExpr, env) -> list[str]:
    return sorted(n for n in free_refs(expr) if n not in env)


class ConstraintChecker:
    """Reusable checker: the tree index and static edges are built once,
    so repeated checks against the same generic stay cheap."""

    def __init__(self, g: GenericDocument):
        self.generic = g
        self.paths: list[UnitPath] = []
        self.units: list[UnitTemplate] = []
        self.index: dict[UnitPath, int] = {}
        parent: list[int] = []
        for path, unit in walk_units(g):  # pre-order: parents come first
            self.index[path] = len(self.paths)
            self.paths.append(path)
            self.units.append(unit)
            parent.append(self.index[path.parent] if path.parent is not None else -1)
        self.parent = parent
        self.n = len(self.paths)
        self.optional = [u.inclusion is Inclusion.OPTIONAL for u in self.units]
        self.atomic = [u.is_atomic for u in self.units]

        # Structural edges: included-or-required units force their
        # compulsory children.  Top-level compulsory parts seed the base.
        base = 0
        struct: list[tuple[int, int]] = []
        for i in range(self.n):
            if self.optional[i]:
                continue
            if parent[i] == -1:
                base |= 1 << i
            else:
                struct.append((parent[i], i))
        self.base_mask = base
        self.struct_edges = struct

        self.refers_edges: list[tuple[int, int, int]] = []
        for ci, c in enumerate(g.constraints):
            if isinstance(c, Refers):
                self.refers_edges.append((self.index[c.source], self.index[c.target], ci))

    # -- instance lowering ---------------------------------------------------

    def doc_env(self, inst: DocumentInstance) -> dict[str, Value]:
        """Constraint conditions see built-ins plus document-level bindings.

        Unit-scoped bindings are render-local and invisible here."""
        env = inst.builtin_env()
        for b in inst.bindings:
            if b.scope is None:
                env[b.name] = b.value
        return env

    def masks(self, inst: DocumentInstance) -> tuple[int, int]:
        """(included, available) bitmasks; pre-order guarantees parents first."""
        inc = 0
        avail = 0
        for i in range(self.n):
            pa = self.parent[i]
            if pa != -1 and not (inc >> pa) & 1:
                continue
            avail |= 1 << i
            if self.optional[i] and self.paths[i] not in inst.included_optional:
                continue
            if self.atomic[i] and self.paths[i] not in inst.selections:
                continue
            inc |= 1 << i
        return inc, avail

    def _closure(self, inst: DocumentInstance, env) -> tuple[int, int, list]:
        """Returns (included, required, per-constraint condition status)."""
        included, _ = self.masks(inst)
        status: list[Optional[Tri]] = []
        srcs: list[int] = []
        dsts: list[int] = []
        base = self.base_mask
        for s, d in self.struct_edges:
            srcs.append(s)
            dsts.append(d)
        for s, d, _ci in self.refers_edges:
            srcs.append(s)
            dsts.append(d)
        for c in self.generic.constraints:
            guard = getattr(c, "guard", None)
            g_status = Tri.TRUE if guard is None else eval_cond(guard, env)
            if isinstance(c, Forces):
                if isinstance(c.antecedent, UnitPath):
                    if g_status is Tri.TRUE:
                        srcs.append(self.index[c.antecedent])
                        dsts.append(self.index[c.consequent])
                    status.append(g_status)
                else:
                    a_status = eval_cond(c.antecedent, env)
                    combined = _tri_and(g_status, a_status)
                    if combined is Tri.TRUE:
                        base |= 1 << self.index[c.consequent]
                    status.append(combined)
            elif isinstance(c, DataConstraint):
                status.append(eval_cond(c.expr, env))
            else:
                status.append(g_status)
        required = _kernel.close_required(self.n, base, array("i", srcs), array("i", dsts), included)
        return included, required, status

    # -- public operations ----------------------------------------------------

    def required_units(self, inst: DocumentInstance) -> frozenset[UnitPath]:
        env = self.doc_env(inst)
        _, required, _ = self._closure(inst, env)
        return frozenset(self.paths[i] for i in range(self.n) if (required >> i) & 1)

    def check(self, inst: DocumentInstance, stage: CheckStage = CheckStage.INTERACTIVE) -> list[Violation]:
        env = self.doc_env(inst)
        included, required, status = self._closure(inst, env)
        reach = included | required
        out: list[Violation] = []

        # Units required by compulsory structure but absent (possible only
        # for hand-built instances or missing selections).
        for i in range(self.n):
            if (required >> i) & 1 and not (included >> i) & 1 and not self.optional[i]:
                pa = self.parent[i]
                if pa == -1 or (reach >> pa) & 1:
                    out.append(
                        Violation(
                            ViolationKind.MISSING_COMPULSORY,
                            (self.paths[i],),
                            f"Compulsory unit '{self.paths[i]}' is not included.",
                        )
                    )

        for ci, c in enumerate(self.generic.constraints):
            out.extend(self._constraint_violations(ci, c, status[ci], included, reach, env))

        if stage is CheckStage.FINALIZE:
            out.extend(self._missing_parameters(inst, included))
        return out

    def _constraint_violations(self, ci, c, st, included, reach, env) -> list[Violation]:
        def inc(p: UnitPath) -> bool:
            return bool((included >> self.index[p]) & 1)

        def avail(p: UnitPath) -> bool:
            pa = self.parent[self.index[p]]
            return pa == -1 or bool((included >> pa) & 1)

        out: list[Violation] = []
        if isinstance(c, Forces):
            if inc(c.consequent):
                return out
            if isinstance(c.antecedent, UnitPath):
                ant_holds = bool((reach >> self.index[c.antecedent]) & 1)
                if st is Tri.TRUE and ant_holds:
                    out.append(
                        Violation(
                            ViolationKind.FORCES_UNSATISFIED,
                            (c.consequent,),
                            f"'{c.antecedent}' is included, which requires '{c.consequent}'.",
                            source=c,
                            source_index=ci,
                        )
                    )
                elif st is Tri.UNKNOWN and ant_holds:
                    names = _unbound(c.guard, env) if c.guard is not None else []
                    out.append(
                        Violation(
                            ViolationKind.FORCES_UNSATISFIED,
                            (c.consequent,),
                            f"'{c.consequent}' may be required by '{c.antecedent}'; "
                            f"cannot be determined yet (unbound: {_dollar(names)}).",
                            pending=True,
                            source=c,
                            source_index=ci,
                            unbound=tuple(names),
                        )
                    )
            else:
                if st is Tri.TRUE:
                    out.append(
                        Violation(
                            ViolationKind.FORCES_UNSATISFIED,
                            (c.consequent,),
                            f"The entered data ({to_source(c.antecedent)}) requires '{c.consequent}'.",
                            source=c,
                            source_index=ci,
                        )
                    )
                elif st is Tri.UNKNOWN:
                    names = _unbound(c.antecedent, env)
                    if c.guard is not None:
                        names = sorted(set(names) | set(_unbound(c.guard, env)))
                    out.append(
                        Violation(
                            ViolationKind.FORCES_UNSATISFIED,
                            (c.consequent,),
                            f"'{c.consequent}' may be required by condition "
                            f"{to_source(c.antecedent)}; cannot be determined yet "
                            f"(unbound: {_dollar(names)}).",
                            pending=True,
                            source=c,
                            source_index=ci,
                            unbound=tuple(names),
                        )
                    )
        elif isinstance(c, Incompatible):
            if inc(c.a) and inc(c.b) and st is not Tri.FALSE:
                a, b = self._ordered_pair(c.a, c.b)
                pending = st is Tri.UNKNOWN
                names = _unbound(c.guard, env) if pending else []
                suffix = f" (guard undetermined; unbound: {_dollar(names)})" if pending else ""
                out.append(
                    Violation(
                        ViolationKind.INCOMPATIBLE_PAIR,
                        (a, b),
                        f"'{a}' and '{b}' cannot both be included.{suffix}",
                        pending=pending,
                        source=c,
                        source_index=ci,
                        unbound=tuple(names),
                    )
                )
        elif isinstance(c, ExclusiveOr):
            if not (avail(c.a) and avail(c.b)):
                return out  # one side was removed wholesale with its subtree
            count = int(inc(c.a)) + int(inc(c.b))
            if count != 1 and st is not Tri.FALSE:
                a, b = self._ordered_pair(c.a, c.b)
                pending = st is Tri.UNKNOWN
                names = _unbound(c.guard, env) if pending else []
                suffix = f" (guard undetermined; unbound: {_dollar(names)})" if pending else ""
                out.append(
                    Violation(
                        ViolationKind.EXCLUSIVE_OR_UNSATISFIED,
                        (a, b),
                        f"Exactly one of '{a}' and '{b}' must be included; found {count}.{suffix}",
                        pending=pending,
                        source=c,
                        source_index=ci,
                        unbound=tuple(names),
                    )
                )
        elif isinstance(c, Refers):
            src_holds = bool((reach >> self.index[c.source]) & 1)
            if src_holds and not inc(c.target):
                out.append(
                    Violation(
                        ViolationKind.DANGLING_REFERENCE,
                        (c.source, c.target),
                        f"'{c.source}' refers to '{c.target}', which is not included.",
                        source=c,
                        source_index=ci,
                    )
                )
        elif isinstance(c, DataConstraint):
            if st is Tri.FALSE:
                out.append(
                    Violation(
                        ViolationKind.DATA_VIOLATION,
                        tuple(sorted(free_refs(c.expr))),
                        c.message,
                        source=c,
                        source_index=ci,
                    )
                )
            elif st is Tri.UNKNOWN:
                names = _unbound(c.expr, env)
                out.append(
                    Violation(
                        ViolationKind.DATA_VIOLATION,
                        tuple(sorted(free_refs(c.expr))),
                        f"{c.message} (cannot be evaluated yet; unbound: {_dollar(names)})",
                        pending=True,
                        source=c,
                        source_index=ci,
                        unbound=tuple(names),
                    )
                )
        return out

    def _ordered_pair(self, a: UnitPath, b: UnitPath) -> tuple[UnitPath, UnitPath]:
        return (a, b) if self.index[a] <= self.index[b] else (b, a)

    def _missing_parameters(self, inst: DocumentInstance, included: int) -> list[Violation]:
        out: list[Violation] = []
        if inst.parties is None:
            for name in ("Party1.Name", "Party1.Address", "Party2.Name", "Party2.Address"):
                out.append(_missing_param(name, "the contracting parties have not been entered"))
        if inst.date is None:
            out.append(_missing_param("Date", "the contract date has not been entered"))
        for spec in self.generic.params:
            if spec.required and inst.binding_value(spec.name, None) is None:
                out.append(_missing_param(spec.name))
        for i in range(self.n):
            if not (included >> i) & 1:
                continue
            path, unit = self.paths[i], self.units[i]
            env = effective_bindings(self.generic, inst, path)
            specs = list(unit.params)
            if unit.is_atomic:
                chosen = inst.selections.get(path)
                for v in unit.versions:
                    if v.number == chosen:
                        specs.extend(v.params)
            for spec in specs:
                if spec.required and spec.name not in env:
                    out.append(
                        Violation(
                            ViolationKind.MISSING_PARAMETER,
                            (path, spec.name),
                            f"Required parameter '${spec.name}' of '{path}' has no value.",
                        )
                    )
        return out


def _missing_param(name: str, why: str = "") -> Violation:
    message = f"Required parameter '${name}' has no value."
    if why:
        message = f"Required parameter '${name}' has no value ({why})."
    return Violation(ViolationKind.MISSING_PARAMETER, (name,), message)


def _dollar(names: list[str]) -> str:
    return ", ".join("$" + n for n in names) if names else "?"


def _tri_and(a: Tri, b: Tri) -> Tri:
    if Tri.FALSE in (a, b):
        return Tri.FALSE
    if Tri.UNKNOWN in (a, b):
        return Tri.UNKNOWN
    return Tri.TRUE


# ---------------------------------------------------------------------------
# Module-level operations (one-shot convenience over ConstraintChecker)
# ---------------------------------------------------------------------------


def required_units(g: GenericDocument, inst: DocumentInstance) -> frozenset[UnitPath]:
    """Least fixpoint of compulsory flags, forces edges, and cross-references
    over the instance's inclusions and entered data."""
    return ConstraintChecker(g).required_units(inst)


def check(
    g: GenericDocument,
    inst: DocumentInstance,
    stage: CheckStage = CheckStage.INTERACTIVE,
) -> list[Violation]:
    """All current violations, in constraint declaration order then path order."""
    return ConstraintChecker(g).check(inst, stage)


def suggest_remedies(v: Violation, g: GenericDocument, inst: DocumentInstance) -> list[Remedy]:
    """Remedial edits that would clear the violation.  Compulsory units are
    never offered for exclusion."""

    def excludable(p: UnitPath) -> bool:
        return resolve_unit(g, p).inclusion is Inclusion.OPTIONAL

    if v.pending:
        out = [
            Remedy(RemedyAction.SET_PARAMETER, param=n, rationale="entering the value settles the condition")
            for n in v.unbound
        ]
        if v.kind is ViolationKind.FORCES_UNSATISFIED:
            out.append(
                Remedy(
                    RemedyAction.INCLUDE,
                    unit=v.subjects[0],
                    rationale="including it satisfies the constraint whichever way the condition resolves",
                )
            )
        return out

    if v.kind in (ViolationKind.MISSING_COMPULSORY, ViolationKind.FORCES_UNSATISFIED):
        return [Remedy(RemedyAction.INCLUDE, unit=v.subjects[0], rationale="the unit is required")]
    if v.kind is ViolationKind.DANGLING_REFERENCE:
        return [
            Remedy(
                RemedyAction.INCLUDE,
                unit=v.subjects[1],
                rationale=f"'{v.subjects[0]}' refers to it",
            )
        ]
    if v.kind is ViolationKind.INCOMPATIBLE_PAIR:
        return [
            Remedy(RemedyAction.EXCLUDE, unit=p, rationale="the two units cannot coexist")
            for p in v.subjects
            if isinstance(p, UnitPath) and excludable(p)
        ]
    if v.kind is ViolationKind.EXCLUSIVE_OR_UNSATISFIED:
        included = {p for p in v.subjects if isinstance(p, UnitPath)} & _included_set(g, inst)
        if not included:
            return [
                Remedy(RemedyAction.INCLUDE, unit=p, rationale="one of the pair must be included")
                for p in v.subjects
                if isinstance(p, UnitPath)
            ]
        return [
            Remedy(RemedyAction.EXCLUDE, unit=p, rationale="only one of the pair may be included")
            for p in v.subjects
            if isinstance(p, UnitPath) and excludable(p)
        ]
    if v.kind is ViolationKind.DATA_VIOLATION:
        return [
            Remedy(RemedyAction.SET_PARAMETER, param=n, rationale="changing the value can satisfy the constraint")
            for n in v.subjects
            if isinstance(n, str)
        ]
    if v.kind is ViolationKind.MISSING_PARAMETER:
        name = next(s for s in v.subjects if isinstance(s, str))
        return [Remedy(RemedyAction.SET_PARAMETER, param=name, rationale="the parameter is required")]
    return []


def _included_set(g: GenericDocument, inst: DocumentInstance) -> set[UnitPath]:
    from .model import included_units

    return included_units(g, inst)


# ---------------------------------------------------------------------------
# Cross-reference scanning
# ---------------------------------------------------------------------------

_XREF_RE = re.compile(r"\b(?:sub-clause|clause|section)\s+(\d+(?:-\d+)*)\b", re.IGNORECASE)


def template_numbers(g: GenericDocument) -> dict[str, UnitPath]:
    """Derived number ('3', '3-1', ...) -> unit path, over template order."""

    numbers: dict[str, UnitPath] = {}

    def rec(prefix: str, path: UnitPath, unit: UnitTemplate):
        numbers[prefix] = path
        for pos, child in enumerate(unit.ordered_children(), start=1):
            rec(f"{prefix}-{pos}", path.child(child.label), child)

    for pos, part in enumerate(g.ordered_parts(), start=1):
        rec(str(pos), UnitPath.of(part.label), part)
    return numbers


def scan_cross_references(g: GenericDocument, fragments: FragmentSource) -> list[Refers]:
    """Best-effort Refers suggestions mined from fragment text.

    Finds ``Clause N`` / ``Sub-Clause N-M`` / ``Section N-M`` mentions,
    maps the number to the unit carrying that derived number, and returns
    suggestions not already declared.  Purely advisory; unresolvable
    numbers are skipped silently.
    """
    numbers = template_numbers(g)
    declared = {
        (c.source, c.target) for c in g.constraints if isinstance(c, Refers)
    }
    seen: set[tuple[UnitPath, UnitPath]] = set()
    out: list[Refers] = []
    for path, unit in walk_units(g):
        if not unit.is_atomic:
            continue
        for version in unit.versions:
            text = fragments.get_fragment(version.fragment)  # FragmentUnreadable propagates
            for m in _XREF_RE.finditer(text):
                target = numbers.get(m.group(1))
                if target is None or target == path:
                    continue
                key = (path, target)
                if key in declared or key in seen:
                    continue
                seen.add(key)
                out.append(Refers(source=path, target=target))
    return out
