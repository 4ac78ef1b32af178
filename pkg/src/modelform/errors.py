"""Exception taxonomy shared by the engine, the CLI, and the HTTP service.

Every error carries a stable machine ``code`` so that the two app surfaces
can map engine failures one-to-one onto exit codes / HTTP statuses without
string matching.
"""

from __future__ import annotations


class ModelformError(Exception):
    """Base class for all engine errors."""

    code = "error"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class CodecError(ModelformError):
    """A serialized record or request body does not match the schema."""

    code = "malformed"


class ParseError(ModelformError):
    """Condition-expression source text could not be parsed."""

    code = "cond_parse_error"

    def __init__(self, position: int, message: str):
        super().__init__(f"parse error at {position}: {message}")
        self.position = position


class KindMismatch(ModelformError):
    """A comparison or binding mixes value kinds (string/integer/date)."""

    code = "kind_mismatch"


class NotFound(ModelformError):
    """A unit path does not resolve within the generic document."""

    code = "unit_not_found"

    def __init__(self, path):
        super().__init__(f"no unit at path {path}")
        self.path = path


class NotAtomic(ModelformError):
    """The operation requires an atomic (version-bearing) unit."""

    code = "unit_not_atomic"

    def __init__(self, path):
        super().__init__(f"unit {path} is not atomic")
        self.path = path


class ValidationFailed(ModelformError):
    """A generic document failed schema validation."""

    code = "validation_failed"

    def __init__(self, report):
        errors = "; ".join(i.message for i in report.errors)
        super().__init__(f"generic document is invalid: {errors}")
        self.report = report


class UnknownDocType(ModelformError):
    code = "unknown_doc_type"

    def __init__(self, doc_type: str):
        super().__init__(f"no generic document of type {doc_type!r}")
        self.doc_type = doc_type


class UnknownInstance(ModelformError):
    code = "unknown_instance"

    def __init__(self, instance_id: str):
        super().__init__(f"no document instance {instance_id!r}")
        self.instance_id = instance_id


class UnknownSession(ModelformError):
    code = "unknown_session"

    def __init__(self, session_id: str):
        super().__init__(f"no drafting session {session_id!r}")
        self.session_id = session_id


class EditRejected(ModelformError):
    """An edit would break a session or instance invariant."""

    code = "edit_rejected"


class SessionStateError(ModelformError):
    """The session is in the wrong stage for the requested operation."""

    code = "session_state"


class ViolationsOutstanding(ModelformError):
    """Finalize refused: the draft still has (or may have) violations."""

    code = "violations_outstanding"

    def __init__(self, violations):
        super().__init__(
            f"{len(violations)} outstanding violation(s); document not finalized"
        )
        self.violations = list(violations)


class UnboundPlaceholder(ModelformError):
    """Fragment text contains placeholders with no bound value."""

    code = "unbound_placeholder"

    def __init__(self, names, where=None):
        self.names = sorted(set(names))
        self.where = list(where or [])
        detail = ", ".join("$" + n for n in self.names)
        if self.where:
            detail += " (in " + "; ".join(str(w) for w in self.where) + ")"
        super().__init__(f"unbound placeholder(s): {detail}")


class FragmentUnreadable(ModelformError):
    code = "fragment_unreadable"

    def __init__(self, ref):
        super().__init__(f"fragment {ref} cannot be read")
        self.ref = ref


class BadFilter(ModelformError):
    """A query filter is malformed (bad date, tag, or unit-version syntax)."""

    code = "bad_filter"


class StoreError(ModelformError):
    """The on-disk store is missing, locked, or structurally broken."""

    code = "store_error"
