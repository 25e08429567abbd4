"""Append-only file store for records and receipts.

Each document is kept in canonical form under ``records/`` or ``receipts/``,
named by the SHA-256 of its bytes and sharded by the first two hex digits.
The index lives in memory and is rebuilt from the files on open.
"""

from __future__ import annotations

import hashlib
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from filelock import FileLock

from .errors import ConsentKitError, CorruptDocument, IdConflict, IoFailure, ValidationFailed
from .lifecycle import ConsentState, current_status, event_state
from .model import ConsentEvent, ConsentReceipt, ConsentRecord, ordered_events, process_views
from .profiles import ProfileSet, declared_profile, default_profiles, validate
from .serialization import canonical_bytes, loads, parse
from .vocabulary import default_registry, to_iri

RECORDS = "records"
RECEIPTS = "receipts"
LOCK_NAME = "store.lock"


def _add(index: dict[str, set[str]], key: str, rid: str) -> None:
    index.setdefault(key, set()).add(rid)


@dataclass
class StoreIndex:
    by_subject: dict[str, set[str]] = field(default_factory=dict)
    by_controller: dict[str, set[str]] = field(default_factory=dict)
    by_status: dict[ConsentState, set[str]] = field(default_factory=dict)
    by_purpose: dict[str, set[str]] = field(default_factory=dict)
    superseded: dict[str, set[str]] = field(default_factory=dict)
    events: dict[str, tuple[ConsentEvent, ...]] = field(default_factory=dict)
    records: dict[str, Path] = field(default_factory=dict)
    receipts: dict[str, Path] = field(default_factory=dict)
    corrupt: list[CorruptDocument] = field(default_factory=list, compare=False)
    seen: set[Path] = field(default_factory=set, compare=False, repr=False)

    def add_record(self, record: ConsentRecord, path: Path) -> None:
        rid = record.primary_id
        self.records[rid] = path
        for subject in record.data_subject:
            if subject.id:
                _add(self.by_subject, subject.id, rid)
        for view in process_views(record) or [record.shared]:
            for controller in view.data_controllers:
                _add(self.by_controller, controller, rid)
            for purpose in view.purposes:
                _add(self.by_purpose, purpose, rid)
        events = ordered_events(record)
        state = event_state(events[-1][1]) if events else ConsentState.Unknown
        _add(self.by_status, state, rid)
        # enough for point-in-time status without reading the file again
        self.events[rid] = record.events
        for old in record.supersedes:
            _add(self.superseded, old, rid)

    def add_receipt(self, receipt: ConsentReceipt, path: Path) -> None:
        self.receipts[receipt.primary_id] = path


def _document_files(root: Path, subtree: str) -> list[Path]:
    base = root / subtree
    if not base.is_dir():
        return []
    return sorted(p for p in base.glob("??/*.json") if not p.name.startswith("."))


def _read(path: Path) -> ConsentRecord | ConsentReceipt:
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc.strerror}") from exc
    if hashlib.sha256(data).hexdigest() != path.stem:
        raise CorruptDocument(path, "content does not match its digest name")
    try:
        return parse(loads(data.decode("utf-8")))
    except (ConsentKitError, ValueError) as exc:
        raise CorruptDocument(path, str(exc)) from exc


def _absorb(index: StoreIndex, path: Path, subtree: str) -> None:
    index.seen.add(path)
    try:
        value = _read(path)
    except CorruptDocument as exc:
        index.corrupt.append(exc)
        return
    kind = ConsentRecord if subtree == RECORDS else ConsentReceipt
    if not isinstance(value, kind) or not value.primary_id:
        index.corrupt.append(CorruptDocument(path, f"not a {subtree[:-1]} with an identifier"))
        return
    known = index.records if kind is ConsentRecord else index.receipts
    if value.primary_id in known:
        index.corrupt.append(CorruptDocument(path, f"duplicate id {value.primary_id}"))
    elif kind is ConsentRecord:
        index.add_record(value, path)
    else:
        index.add_receipt(value, path)


def _catch_up(index: StoreIndex, root: Path) -> None:
    for subtree in (RECORDS, RECEIPTS):
        for path in _document_files(root, subtree):
            if path not in index.seen:
                _absorb(index, path, subtree)


def rebuild_index(root: str | Path) -> StoreIndex:
    """Index every document below ``root``; unreadable ones are listed in ``corrupt``."""
    root = Path(root)
    if not root.is_dir():
        raise IoFailure(f"store root {root} is not a directory")
    index = StoreIndex()
    _catch_up(index, root)
    return index


class ConsentStore:
    """Records and receipts below one root directory.

    Writers take the ``store.lock`` file lock; readers do not lock and see
    the state as of open or their process's last write.
    """

    def __init__(self, root: str | Path, profiles: ProfileSet | None = None, create: bool = True):
        self.root = Path(root)
        if create:
            try:
                self.root.mkdir(parents=True, exist_ok=True)
            except OSError as exc:
                raise IoFailure(f"cannot create store root {self.root}: {exc.strerror}") from exc
        self.profiles = profiles or default_profiles()
        self._lock = FileLock(str(self.root / LOCK_NAME))
        self.index = rebuild_index(self.root)

    def __len__(self) -> int:
        return len(self.index.records)

    def ids(self) -> list[str]:
        return sorted(self.index.records)

    def receipt_ids(self) -> list[str]:
        return sorted(self.index.receipts)

    def _path_for(self, subtree: str, hexdigest: str) -> Path:
        return self.root / subtree / hexdigest[:2] / f"{hexdigest}.json"

    def _write(self, path: Path, data: bytes) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.stem[:8]}-", suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, path)
        except BaseException:
            try:
                os.unlink(tmp)
            except FileNotFoundError:
                pass
            raise

    def put(self, value: ConsentRecord | ConsentReceipt) -> str:
        """Store ``value`` and return its id; storing identical content twice is a no-op."""
        report = validate(value, declared_profile(value, self.profiles).id, self.profiles)
        if not report.passed:
            raise ValidationFailed(f"{value.primary_id or 'document'} fails its declared profile", report)
        is_record = isinstance(value, ConsentRecord)
        subtree = RECORDS if is_record else RECEIPTS
        data = canonical_bytes(value)
        hexdigest = hashlib.sha256(data).hexdigest()
        path = self._path_for(subtree, hexdigest)
        vid = value.primary_id
        try:
            with self._lock:
                # pick up documents other processes wrote since we last looked
                _catch_up(self.index, self.root)
                known = self.index.records if is_record else self.index.receipts
                if vid in known:
                    if known[vid] == path:
                        return vid
                    raise IdConflict(f"{vid} is already stored with different content")
                self._write(path, data)
                self.index.seen.add(path)
                if is_record:
                    self.index.add_record(value, path)
                else:
                    self.index.add_receipt(value, path)
        except OSError as exc:
            raise IoFailure(f"cannot write {path}: {exc}") from exc
        return vid

    def get(self, vid: str) -> ConsentRecord | ConsentReceipt:
        path = self.index.records.get(vid) or self.index.receipts.get(vid)
        if path is None:
            raise KeyError(vid)
        return _read(path)

    def rebuild_index(self) -> StoreIndex:
        self.index = rebuild_index(self.root)
        return self.index

    def query(self, subject: str | None = None, controller: str | None = None,
              status: ConsentState | str | None = None, at=None, purpose: str | None = None) -> list[str]:
        """Ids of records matching every given clause, sorted.

        ``status`` with ``at`` asks for the state at that instant, expiry
        included; ``status`` alone matches the state named by the latest
        logged event.
        """
        prefixes = default_registry().prefixes
        found = set(self.index.records)
        for key, table in ((subject, self.index.by_subject), (controller, self.index.by_controller),
                           (purpose, self.index.by_purpose)):
            if key is not None:
                found &= table.get(to_iri(key, prefixes), set())
        if status is not None:
            state = status if isinstance(status, ConsentState) else ConsentState.parse(status)
            if at is None:
                found &= self.index.by_status.get(state, set())
            else:
                found = {rid for rid in found
                         if current_status(ConsentRecord(events=self.index.events[rid]), at) is state}
        elif at is not None:
            raise ValueError("'at' needs a status to compare against")
        return sorted(found)
