"""modelform: constraint-driven assembly of contracts from generic documents.

Generic documents hold a unit tree with alternative text versions,
parameters, commentary, and explicit structural constraints; drafting
sessions build document instances under those constraints; the render
module reconstructs full text; the store and query modules keep and search
the resulting instance database.
"""

from ._kernel import KERNEL
from .assembly import Session, Stage, apply_edit, check_session, finalize, start_session
from .constraints import (
    CheckStage,
    Constraint,
    DataConstraint,
    ExclusiveOr,
    Forces,
    Incompatible,
    Refers,
    Remedy,
    Violation,
    ViolationKind,
    check,
    required_units,
    scan_cross_references,
    suggest_remedies,
)
from .model import (
    DocumentInstance,
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
    atomic_units,
    add_version,
    effective_bindings,
    resolve_unit,
    validate_generic,
)
from .query import QueryFilter, expand, run_query
from .render import RenderedDocument, export_markup, render_document, substitute
from .store import Store

__version__ = "0.1.0"

__all__ = [
    "KERNEL",
    "Session",
    "Stage",
    "apply_edit",
    "check_session",
    "finalize",
    "start_session",
    "CheckStage",
    "Constraint",
    "DataConstraint",
    "ExclusiveOr",
    "Forces",
    "Incompatible",
    "Refers",
    "Remedy",
    "Violation",
    "ViolationKind",
    "check",
    "required_units",
    "scan_cross_references",
    "suggest_remedies",
    "DocumentInstance",
    "GenericDocument",
    "Inclusion",
    "ParamBinding",
    "ParamKind",
    "ParamSpec",
    "Party",
    "Status",
    "Tag",
    "TagKind",
    "TextVersion",
    "UnitPath",
    "UnitTemplate",
    "atomic_units",
    "add_version",
    "effective_bindings",
    "resolve_unit",
    "validate_generic",
    "QueryFilter",
    "expand",
    "run_query",
    "RenderedDocument",
    "export_markup",
    "render_document",
    "substitute",
    "Store",
    "__version__",
]
