"""Immutable domain values for consent records and receipts.

All term and reference values are held as expanded IRIs (or verbatim local
identifiers). Multi-valued fields are tuples even where a profile allows at
most one value, so that over-full documents stay representable and the
validator, not the parser, decides whether they conform.
"""

from __future__ import annotations

import datetime as dt
import re
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field, fields, replace
from decimal import Decimal
from functools import total_ordering
from typing import Any

from dateutil import parser as _dateparser
from dateutil.relativedelta import relativedelta

from .errors import AmbiguousReference, DanglingReference, IndexOutOfRange
from .vocabulary import Registry, default_registry


class FrozenMap(Mapping):
    """Insertion-ordered read-only mapping; compares like a dict."""

    __slots__ = ("_items", "_hash")

    def __init__(self, items: Mapping | None = None):
        self._items = dict(items or {})
        self._hash = None

    def __getitem__(self, key):
        return self._items[key]

    def __iter__(self):
        return iter(self._items)

    def __len__(self):
        return len(self._items)

    def __eq__(self, other):
        if isinstance(other, FrozenMap):
            return self._items == other._items
        if isinstance(other, Mapping):
            return self._items == dict(other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._items.items()))
        return self._hash

    def __repr__(self):
        return f"FrozenMap({self._items!r})"


EMPTY = FrozenMap()


def freeze(value: Any) -> Any:
    """Convert parsed JSON into hashable, immutable form."""
    if isinstance(value, Mapping):
        return FrozenMap({k: freeze(v) for k, v in value.items()})
    if isinstance(value, (list, tuple)):
        return tuple(freeze(v) for v in value)
    return value


def thaw(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {k: thaw(v) for k, v in value.items()}
    if isinstance(value, tuple):
        return [thaw(v) for v in value]
    return value


# -- time --------------------------------------------------------------------

_DATE_ONLY = re.compile(r"^\d{4}-\d{2}-\d{2}$")


@total_ordering
@dataclass(frozen=True, eq=False)
class Timestamp:
    """ISO 8601 instant that remembers how it was written.

    Equality and hashing use the normalized UTC form at seconds precision;
    a date without a time means midnight UTC and a time without an offset
    is read as UTC.
    """

    lexical: str
    instant: dt.datetime = field(init=False, repr=False)

    def __post_init__(self):
        text = self.lexical.strip() if isinstance(self.lexical, str) else None
        if not text:
            raise ValueError(f"not a timestamp: {self.lexical!r}")
        try:
            parsed = _dateparser.isoparse(text)
        except (ValueError, OverflowError) as exc:
            raise ValueError(f"not an ISO 8601 timestamp: {self.lexical!r}") from exc
        if parsed.tzinfo is None:
            parsed = parsed.replace(tzinfo=dt.timezone.utc)
        parsed = parsed.astimezone(dt.timezone.utc).replace(microsecond=0)
        object.__setattr__(self, "instant", parsed)

    @classmethod
    def of(cls, value: "Timestamp | dt.datetime | dt.date | str") -> "Timestamp":
        if isinstance(value, Timestamp):
            return value
        if isinstance(value, dt.datetime):
            if value.tzinfo is None:
                value = value.replace(tzinfo=dt.timezone.utc)
            return cls(value.astimezone(dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"))
        if isinstance(value, dt.date):
            return cls(value.isoformat())
        return cls(value)

    @property
    def canonical(self) -> str:
        return self.instant.strftime("%Y-%m-%dT%H:%M:%SZ")

    @property
    def is_date_only(self) -> bool:
        return bool(_DATE_ONLY.match(self.lexical.strip()))

    def __eq__(self, other):
        if not isinstance(other, Timestamp):
            return NotImplemented
        return self.instant == other.instant

    def __lt__(self, other):
        if not isinstance(other, Timestamp):
            return NotImplemented
        return self.instant < other.instant

    def __hash__(self):
        return hash(self.instant)

    def __str__(self):
        return self.lexical


_ISO_DURATION = re.compile(
    r"^P(?!$)(?:(?P<Y>\d+)Y)?(?:(?P<M>\d+)M)?(?:(?P<W>\d+)W)?(?:(?P<D>\d+)D)?"
    r"(?:T(?=\d)(?:(?P<h>\d+)H)?(?:(?P<m>\d+)M)?(?:(?P<s>\d+(?:\.\d+)?)S)?)?$"
)


@dataclass(frozen=True, kw_only=True)
class Duration:
    """A validity or storage duration.

    Either an ISO 8601 period (``P6M``) or a described duration such as
    ``dpv:UntilEventDuration`` with its description in ``value``.
    """

    value: str
    types: tuple[str, ...] = ()
    extensions: FrozenMap = EMPTY

    @property
    def is_period(self) -> bool:
        return not self.types and _ISO_DURATION.match(self.value) is not None

    def delta(self) -> relativedelta | None:
        m = _ISO_DURATION.match(self.value) if not self.types else None
        if m is None:
            return None
        g = {k: v for k, v in m.groupdict().items() if v is not None}
        seconds = Decimal(g.get("s", "0"))
        return relativedelta(
            years=int(g.get("Y", 0)), months=int(g.get("M", 0)),
            weeks=int(g.get("W", 0)), days=int(g.get("D", 0)),
            hours=int(g.get("h", 0)), minutes=int(g.get("m", 0)),
            seconds=int(seconds), microseconds=int((seconds % 1) * 1_000_000),
        )

    def add_to(self, instant: dt.datetime) -> dt.datetime:
        """Calendar-aware addition; month steps clamp to the month's last day."""
        delta = self.delta()
        if delta is None:
            raise ValueError(f"{self.value!r} is not an ISO 8601 period")
        return instant + delta


# -- record parts -------------------------------------------------------------

@dataclass(frozen=True, kw_only=True)
class Resource:
    """A described thing the toolkit carries without interpreting its fields:
    rights, involvement controls, assessments, rules, codes, contact points."""

    id: str | None = None
    types: tuple[str, ...] = ()
    props: FrozenMap = EMPTY


@dataclass(frozen=True, kw_only=True)
class Entity:
    id: str | None = None
    types: tuple[str, ...] = ()
    names: tuple[str, ...] = ()
    identifiers: tuple[str, ...] = ()
    contacts: tuple[Resource, ...] = ()
    extensions: FrozenMap = EMPTY


@dataclass(frozen=True, kw_only=True)
class PersonalDataItem:
    id: str | None = None
    data_types: tuple[str, ...] = ()
    identifiers: tuple[str, ...] = ()
    values: tuple[str, ...] = ()
    necessity: tuple[str, ...] = ()
    sensitivity: tuple[str, ...] = ()
    sources: tuple[str, ...] = ()
    extensions: FrozenMap = EMPTY


@dataclass(frozen=True, kw_only=True)
class Condition:
    """Storage or processing condition (location, duration, deletion, ...)."""

    id: str | None = None
    types: tuple[str, ...] = ()
    locations: tuple[str, ...] = ()
    durations: tuple[Duration, ...] = ()
    extensions: FrozenMap = EMPTY


StorageCondition = Condition


@dataclass(frozen=True, kw_only=True)
class Notice:
    id: str | None = None
    types: tuple[str, ...] = ()
    date: Timestamp | None = None
    language: tuple[str, ...] = ()
    coverage: str | None = None
    extensions: FrozenMap = EMPTY


@dataclass(frozen=True, kw_only=True)
class Process:
    id: str | None = None
    types: tuple[str, ...] = ()
    purposes: tuple[str, ...] = ()
    personal_data: tuple[PersonalDataItem, ...] = ()
    processing_operations: tuple[str, ...] = ()
    data_sources: tuple[str, ...] = ()
    storage_conditions: tuple[Condition, ...] = ()
    processing_conditions: tuple[Condition, ...] = ()
    geographic_restrictions: tuple[Resource, ...] = ()
    data_controllers: tuple[str, ...] = ()
    data_processors: tuple[str, ...] = ()
    third_parties: tuple[str, ...] = ()
    authorities: tuple[str, ...] = ()
    legal_basis: tuple[str, ...] = ()
    recipients: tuple[str, ...] = ()
    involvement_controls: tuple[Resource, ...] = ()
    jurisdictions: tuple[str, ...] = ()
    applicable_law: tuple[str, ...] = ()
    rights: tuple[Resource, ...] = ()
    services: tuple[str, ...] = ()
    codes_of_conduct: tuple[Resource, ...] = ()
    impact_assessments: tuple[Resource, ...] = ()
    notices: tuple[Notice, ...] = ()
    extensions: FrozenMap = EMPTY


# Fields a process may inherit from the record-level defaults.
INHERITED_FIELDS = tuple(f.name for f in fields(Process) if f.name not in ("id", "types", "extensions"))


@dataclass(frozen=True, kw_only=True)
class ConsentEvent:
    id: str | None = None
    status: tuple[str, ...] = ()
    consent_types: tuple[str, ...] = ()
    legal_basis: tuple[str, ...] = ()
    other_types: tuple[str, ...] = ()
    time: tuple[Timestamp, ...] = ()
    duration: tuple[Duration, ...] = ()
    actor: tuple[str, ...] = ()
    method: tuple[str, ...] = ()
    notes: tuple[str, ...] = ()
    extensions: FrozenMap = EMPTY

    @property
    def when(self) -> Timestamp | None:
        return self.time[0] if self.time else None


@dataclass(frozen=True, kw_only=True)
class RedactionManifest:
    paths: tuple[str, ...]
    salt_digest: str
    algorithm: str = "sha-256"


@dataclass(frozen=True, kw_only=True)
class ConsentRecord:
    id: str | None = None
    types: tuple[str, ...] = ()
    schema_version: tuple[str, ...] = ()
    record_ids: tuple[str, ...] = ()
    data_subject: tuple[Entity, ...] = ()
    parties: tuple[Entity, ...] = ()
    shared: Process = field(default_factory=Process)
    processes: tuple[Process, ...] = ()
    events: tuple[ConsentEvent, ...] = ()
    supersedes: tuple[str, ...] = ()
    redaction: RedactionManifest | None = None
    extensions: FrozenMap = EMPTY
    context: Any = field(default=None, compare=False, repr=False)

    @property
    def primary_id(self) -> str | None:
        return self.record_ids[0] if self.record_ids else self.id


@dataclass(frozen=True, kw_only=True)
class ConsentReceipt:
    id: str | None = None
    types: tuple[str, ...] = ()
    schema_version: tuple[str, ...] = ()
    receipt_ids: tuple[str, ...] = ()
    records: tuple[ConsentRecord, ...] = ()
    created: Timestamp | None = None
    publisher: str | None = None
    recipient: str | None = None
    extensions: FrozenMap = EMPTY
    context: Any = field(default=None, compare=False, repr=False)

    @property
    def primary_id(self) -> str | None:
        return self.receipt_ids[0] if self.receipt_ids else self.id


# -- operations ---------------------------------------------------------------

def resolve_process_view(record: ConsentRecord, process_index: int) -> Process:
    """Process ``process_index`` with record-level defaults filled in.

    A non-empty local field wins outright; lists are replaced, never merged.
    """
    if not 0 <= process_index < len(record.processes):
        raise IndexOutOfRange(f"process index {process_index} out of range (record has {len(record.processes)})")
    local = record.processes[process_index]
    shared = record.shared
    merged = {name: getattr(local, name) or getattr(shared, name) for name in INHERITED_FIELDS}
    return replace(local, **merged)


def process_views(record: ConsentRecord) -> list[Process]:
    return [resolve_process_view(record, i) for i in range(len(record.processes))]


ROLE_LINKS = {
    "data_controllers": "https://w3id.org/dpv#DataController",
    "data_processors": "https://w3id.org/dpv#DataProcessor",
    "third_parties": "https://w3id.org/dpv#ThirdParty",
    "authorities": "https://w3id.org/dpv#Authority",
}
DATA_SUBJECT = "https://w3id.org/dpv#DataSubject"
ENTITY_ROOT = "https://w3id.org/dpv#Entity"


def _linked_roles(record: ConsentRecord) -> dict[str, list[str]]:
    """id -> role IRIs asserted through hasDataController and friends."""
    linked: dict[str, list[str]] = {}
    for proc in (record.shared, *record.processes):
        for attr, role in ROLE_LINKS.items():
            for ref in getattr(proc, attr):
                roles = linked.setdefault(ref, [])
                if role not in roles:
                    roles.append(role)
    return linked


def known_entities(record: ConsentRecord, registry: Registry | None = None) -> list[tuple[Entity, frozenset[str]]]:
    """Every entity a reference may point at, paired with its roles.

    Data subjects carry the data-subject role implicitly. Ids that only occur
    in role links (e.g. ``"dpv:hasDataController": "ex:Acme"``) become
    minimal entities holding that role.
    """
    reg = registry or default_registry()
    linked = _linked_roles(record)
    out: list[tuple[Entity, frozenset[str]]] = []
    seen: set[str] = set()
    for ent in record.data_subject:
        roles = {DATA_SUBJECT, *(t for t in ent.types if reg.is_a(t, ENTITY_ROOT))}
        roles.update(linked.get(ent.id, ()))
        out.append((ent, frozenset(roles)))
        if ent.id is not None:
            seen.add(ent.id)
    for ent in record.parties:
        roles = {t for t in ent.types if reg.is_a(t, ENTITY_ROOT)}
        roles.update(linked.get(ent.id, ()))
        out.append((ent, frozenset(roles)))
        if ent.id is not None:
            seen.add(ent.id)
    for ref, roles in linked.items():
        if ref in seen or reg.is_a(ref, ENTITY_ROOT):
            continue
        out.append((Entity(id=ref, types=tuple(roles)), frozenset(roles)))
        seen.add(ref)
    return out


def roles_of(record: ConsentRecord, entity: Entity, registry: Registry | None = None) -> frozenset[str]:
    candidates = known_entities(record, registry)
    for ent, roles in candidates:
        if ent is entity:
            return roles
    # synthesized entities are rebuilt on each call, so fall back to equality
    for ent, roles in candidates:
        if ent == entity:
            return roles
    return frozenset()


def entity_lookup(record: ConsentRecord, ref: str, registry: Registry | None = None) -> Entity:
    """Resolve an entity reference: an id, or a role term naming its unique holder."""
    reg = registry or default_registry()
    candidates = known_entities(record, reg)
    matches = [ent for ent, _ in candidates if ent.id == ref]
    if not matches and reg.is_a(ref, ENTITY_ROOT):
        matches = [ent for ent, roles in candidates if any(reg.is_a(r, ref) for r in roles)]
    if not matches:
        raise DanglingReference(f"{reg.compact(ref)} does not resolve to any party")
    if len(matches) > 1:
        raise AmbiguousReference(f"{reg.compact(ref)} matches {len(matches)} parties")
    return matches[0]


def is_entity_ref(value: str, registry: Registry | None = None) -> bool:
    """True when a ref-or-term value must resolve to a party.

    Registered terms outside the entity taxonomy (a data-source category,
    say) are plain terms.
    """
    reg = registry or default_registry()
    if value in reg:
        return reg.is_a(value, ENTITY_ROOT)
    return True


def reference_sites(record: ConsentRecord) -> Iterator[tuple[str, str]]:
    """(path, ref) for every reference that must resolve to a party."""
    for attr in ("recipients", "data_sources"):
        for ref in getattr(record.shared, attr):
            yield f"processing.{attr}", ref
    for item_index, item in enumerate(record.shared.personal_data):
        for ref in item.sources:
            yield f"processing.personal_data[{item_index}].source", ref
    for i, proc in enumerate(record.processes):
        for attr in ("recipients", "data_sources"):
            for ref in getattr(proc, attr):
                yield f"processing[{i}].{attr}", ref
        for item_index, item in enumerate(proc.personal_data):
            for ref in item.sources:
                yield f"processing[{i}].personal_data[{item_index}].source", ref
    for e, event in enumerate(record.events):
        for ref in event.actor:
            yield f"events[{e}].actor", ref


def reference_problems(record: ConsentRecord, registry: Registry | None = None,
                       roles: bool = False) -> list[tuple[str, str, Exception]]:
    """References that fail to resolve.

    Id references are checked by default. With ``roles=True`` only role-term
    references (``dpv:DataSubject`` as a recipient, say) are checked; those
    are legitimate terms even when no party holds the role.
    """
    reg = registry or default_registry()
    problems = []
    for path, ref in reference_sites(record):
        if not is_entity_ref(ref, reg) or (ref in reg) != roles:
            continue
        try:
            entity_lookup(record, ref, reg)
        except (DanglingReference, AmbiguousReference) as exc:
            problems.append((path, ref, exc))
    return problems


def ordered_events(record: ConsentRecord) -> list[tuple[int, ConsentEvent]]:
    """Timed events in time order; equal times keep insertion order."""
    timed = [(i, ev) for i, ev in enumerate(record.events) if ev.time]
    return sorted(timed, key=lambda pair: (pair[1].time[0].instant, pair[0]))
