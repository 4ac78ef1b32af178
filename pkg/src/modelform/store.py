"""File-backed persistence for generics, fragments, instances, and sessions.

Layout under one root directory::

    store.json                      counters and schema version
    .lock                           store-wide writer lock
    generics/<slug>/generic.json    one generic document
    generics/<slug>/fragments/*.txt fragment text, one plain file per version
    instances/<id>.json             drafted/final document instances
    sessions/<id>.json              resumable drafting sessions

Fragments stay as separate UTF-8 text files so drafters can inspect the
actual wording with any tool.  All record writes are temp-file + rename,
so a crash mid-write leaves either the old or the new record readable.
Writers serialize on a coarse store-wide lock (an OS file lock, re-entrant
within the process); that is plenty at desk scale and keeps id allocation
and version-count updates atomic.
"""

from __future__ import annotations

import datetime as dt
import json
import os
import re
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

from . import codec
from .errors import (
    FragmentUnreadable,
    StoreError,
    UnknownDocType,
    UnknownInstance,
    UnknownSession,
    ValidationFailed,
)
from .model import (
    DocumentInstance,
    FragmentRef,
    GenericDocument,
    ParamSpec,
    Party,
    Status,
    UnitPath,
    add_version,
    atomic_units,
    get_version,
    validate_generic,
    walk_units,
)

try:
    import fcntl
except ImportError:  # pragma: no cover - non-POSIX fallback, lock is process-local
    fcntl = None

_ID_RE = re.compile(r"([A-Z]+)([0-9]+)\Z")
_PREFIX_RE = re.compile(r"[A-Z]+\Z")


def slugify(doc_type: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", doc_type.lower()).strip("-")
    return slug or "untitled"


def _atomic_write(path: Path, data: str):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(data, encoding="utf-8")
    os.replace(tmp, path)


class _StoreLock:
    """Re-entrant store-wide writer lock: threads serialize in-process,
    processes serialize on the lock file."""

    def __init__(self, path: Path):
        self.path = path
        self._rlock = threading.RLock()
        self._depth = 0
        self._fh = None

    def __enter__(self):
        self._rlock.acquire()
        self._depth += 1
        if self._depth == 1:
            self._fh = open(self.path, "a+")
            if fcntl is not None:
                fcntl.flock(self._fh.fileno(), fcntl.LOCK_EX)
        return self

    def __exit__(self, *exc):
        self._depth -= 1
        if self._depth == 0 and self._fh is not None:
            if fcntl is not None:
                fcntl.flock(self._fh.fileno(), fcntl.LOCK_UN)
            self._fh.close()
            self._fh = None
        self._rlock.release()
        return False


@dataclass(frozen=True)
class GenericInfo:
    doc_type: str
    category: str
    parts: int
    atomic_units: int


@dataclass(frozen=True)
class InstanceSummary:
    id: str
    display_name: str
    doc_type: str
    category: str
    parties: Optional[tuple[Party, Party]]
    date: Optional[dt.date]
    status: Status


@dataclass(frozen=True)
class Finding:
    kind: str
    subject: str
    message: str


class StoreFragments:
    """Fragment source/sink over one generic's fragments directory."""

    def __init__(self, store: "Store", slug: str):
        self.store = store
        self.dir = store.root / "generics" / slug / "fragments"

    def get_fragment(self, ref: FragmentRef) -> str:
        path = self.dir / f"{ref.id}.txt"
        try:
            return path.read_text(encoding="utf-8")
        except OSError:
            raise FragmentUnreadable(ref) from None

    def put_fragment(self, text: str) -> FragmentRef:
        with self.store.lock:
            self.dir.mkdir(parents=True, exist_ok=True)
            n = 0
            for existing in self.dir.glob("tf*.txt"):
                m = re.match(r"tf(\d+)\.txt\Z", existing.name)
                if m:
                    n = max(n, int(m.group(1)))
            ref = FragmentRef(f"tf{n + 1}")
            _atomic_write(self.dir / f"{ref.id}.txt", text)
            return ref


class Store:
    def __init__(self, root, create: bool = False):
        self.root = Path(root)
        if create:
            self.root.mkdir(parents=True, exist_ok=True)
            for sub in ("generics", "instances", "sessions"):
                (self.root / sub).mkdir(exist_ok=True)
            if not (self.root / "store.json").exists():
                _atomic_write(
                    self.root / "store.json",
                    codec.canonical_json({"schema_version": codec.SCHEMA_VERSION, "counters": {}}),
                )
        if not (self.root / "store.json").exists():
            raise StoreError(f"{self.root} is not a document store (no store.json)")
        self.lock = _StoreLock(self.root / ".lock")

    # -- store.json -----------------------------------------------------------

    def _read_meta(self) -> dict:
        return json.loads((self.root / "store.json").read_text(encoding="utf-8"))

    def _write_meta(self, meta: dict):
        _atomic_write(self.root / "store.json", codec.canonical_json(meta))

    def allocate_instance_id(self, prefix: str) -> str:
        """Next ``<PREFIX><n>``; persisted before return, so an id is never
        reused even across crash/restart or concurrent callers."""
        if not _PREFIX_RE.match(prefix):
            raise ValueError(f"id prefix must match [A-Z]+, got {prefix!r}")
        with self.lock:
            meta = self._read_meta()
            counters = meta.setdefault("counters", {})
            counters[prefix] = int(counters.get(prefix, 0)) + 1
            self._write_meta(meta)
            return f"{prefix}{counters[prefix]}"

    # -- generics ---------------------------------------------------------------

    def _generic_path(self, slug: str) -> Path:
        return self.root / "generics" / slug / "generic.json"

    def put_generic(self, g: GenericDocument, fragments) -> None:
        """Validate, then persist the generic and every referenced fragment.

        ``fragments`` is any FragmentSource that can supply the text for
        each version's ref (for a new generic, typically MemoryFragments).
        """
        report = validate_generic(g)
        if not report.ok:
            raise ValidationFailed(report)
        slug = slugify(g.doc_type)
        with self.lock:
            existing = self._generic_path(slug)
            if existing.exists():
                current = json.loads(existing.read_text(encoding="utf-8"))
                if current.get("doc_type") != g.doc_type:
                    raise StoreError(
                        f"doc types {current.get('doc_type')!r} and {g.doc_type!r} "
                        f"collide on slug {slug!r}"
                    )
            frag_dir = self.root / "generics" / slug / "fragments"
            frag_dir.mkdir(parents=True, exist_ok=True)
            for path, unit in walk_units(g):
                for version in unit.versions:
                    text = fragments.get_fragment(version.fragment)
                    _atomic_write(frag_dir / f"{version.fragment.id}.txt", text)
            _atomic_write(self._generic_path(slug), codec.canonical_json(codec.dump_generic(g)))

    def get_generic(self, doc_type: str) -> GenericDocument:
        path = self._generic_path(slugify(doc_type))
        if not path.exists():
            raise UnknownDocType(doc_type)
        g = codec.load_generic(json.loads(path.read_text(encoding="utf-8")))
        if g.doc_type != doc_type:
            raise UnknownDocType(doc_type)
        return g

    def list_generics(self) -> list[GenericInfo]:
        out = []
        for path in sorted((self.root / "generics").glob("*/generic.json")):
            g = codec.load_generic(json.loads(path.read_text(encoding="utf-8")))
            out.append(
                GenericInfo(
                    doc_type=g.doc_type,
                    category=g.category,
                    parts=len(g.parts),
                    atomic_units=len(atomic_units(g)),
                )
            )
        return sorted(out, key=lambda i: i.doc_type)

    def fragments(self, doc_type: str) -> StoreFragments:
        return StoreFragments(self, slugify(doc_type))

    def append_version(
        self,
        doc_type: str,
        unit: UnitPath,
        text: str,
        params: tuple[ParamSpec, ...] = (),
        commentary: str = "",
        author: str = "",
        created: Optional[dt.date] = None,
    ) -> tuple[GenericDocument, int]:
        """Atomically grow a stored generic by one version of one unit.

        Read-modify-write under the store lock, so two concurrent creators
        on the same unit get distinct consecutive numbers.
        """
        with self.lock:
            g = self.get_generic(doc_type)
            sink = self.fragments(doc_type)
            g2, number = add_version(g, unit, text, tuple(params), commentary, author, sink, created)
            _atomic_write(
                self._generic_path(slugify(doc_type)),
                codec.canonical_json(codec.dump_generic(g2)),
            )
            return g2, number

    # -- instances ---------------------------------------------------------------

    def _instance_path(self, instance_id: str) -> Path:
        return self.root / "instances" / f"{instance_id}.json"

    def put_instance(self, inst: DocumentInstance) -> None:
        self.get_generic(inst.doc_type)  # UnknownDocType if absent
        with self.lock:
            _atomic_write(
                self._instance_path(inst.id), codec.canonical_json(codec.dump_instance(inst))
            )

    def get_instance(self, instance_id: str) -> DocumentInstance:
        path = self._instance_path(instance_id)
        if not path.exists():
            raise UnknownInstance(instance_id)
        return codec.load_instance(json.loads(path.read_text(encoding="utf-8")))

    def iter_instances(self) -> Iterator[DocumentInstance]:
        for path in sorted((self.root / "instances").glob("*.json")):
            yield codec.load_instance(json.loads(path.read_text(encoding="utf-8")))

    def summarize(self, inst: DocumentInstance) -> InstanceSummary:
        try:
            category = self.get_generic(inst.doc_type).category
        except UnknownDocType:
            category = ""
        return InstanceSummary(
            id=inst.id,
            display_name=inst.display_name,
            doc_type=inst.doc_type,
            category=category,
            parties=inst.parties,
            date=inst.date,
            status=inst.status,
        )

    def list_instances(self) -> list[InstanceSummary]:
        summaries = [self.summarize(inst) for inst in self.iter_instances()]
        return sorted(summaries, key=lambda s: (s.date or dt.date.min, s.id))

    # -- sessions ---------------------------------------------------------------

    def _session_path(self, session_id: str) -> Path:
        return self.root / "sessions" / f"{session_id}.json"

    def put_session(self, session) -> None:
        with self.lock:
            _atomic_write(
                self._session_path(session.session_id),
                codec.canonical_json(codec.dump_session(session)),
            )

    def get_session(self, session_id: str):
        path = self._session_path(session_id)
        if not path.exists():
            raise UnknownSession(session_id)
        return codec.load_session(json.loads(path.read_text(encoding="utf-8")))

    # -- integrity ---------------------------------------------------------------

    def integrity_check(self) -> list[Finding]:
        """Cross-check every record: fragment files behind every version ref,
        instance doc types and version selections, counters ahead of ids."""
        findings: list[Finding] = []
        generics: dict[str, GenericDocument] = {}
        for info in self.list_generics():
            g = self.get_generic(info.doc_type)
            generics[g.doc_type] = g
            source = self.fragments(g.doc_type)
            for path, unit in walk_units(g):
                for version in unit.versions:
                    try:
                        source.get_fragment(version.fragment)
                    except FragmentUnreadable:
                        findings.append(
                            Finding(
                                "dangling-fragment",
                                f"{g.doc_type}:{path}@{version.number}",
                                f"fragment {version.fragment} of {path} version "
                                f"{version.number} is missing",
                            )
                        )
        max_ids: dict[str, int] = {}
        for inst in self.iter_instances():
            m = _ID_RE.match(inst.id)
            if m:
                prefix, n = m.group(1), int(m.group(2))
                max_ids[prefix] = max(max_ids.get(prefix, 0), n)
            g = generics.get(inst.doc_type)
            if g is None:
                findings.append(
                    Finding(
                        "unknown-doc-type",
                        inst.id,
                        f"instance {inst.id} references unknown type {inst.doc_type!r}",
                    )
                )
                continue
            for unit_path, number in sorted(inst.selections.items()):
                try:
                    get_version(g, unit_path, number)
                except Exception:
                    findings.append(
                        Finding(
                            "bad-version",
                            f"{inst.id}:{unit_path}",
                            f"instance {inst.id} selects version {number} of "
                            f"{unit_path}, which does not exist",
                        )
                    )
        counters = self._read_meta().get("counters", {})
        for prefix, top in sorted(max_ids.items()):
            if int(counters.get(prefix, 0)) < top:
                findings.append(
                    Finding(
                        "counter-behind",
                        prefix,
                        f"counter for prefix {prefix!r} is "
                        f"{counters.get(prefix, 0)}, behind existing id {prefix}{top}",
                    )
                )
        return findings
