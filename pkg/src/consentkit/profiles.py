"""Conformance profiles, the validation engine and the GDPR crosswalk.

Profiles are plain text files (see ``data/profiles``); one constraint per
line::

    <path> <min>..<max|n> [taxonomy=..] [includes=..] [when=..] [scope=..] [clause=..] [id=..]

A path names a section and a field (``processing.purposes``). Processing
fields are checked on each process after record-level defaults are merged
in; party fields on each described party; event fields on each event.
"""

from __future__ import annotations

import csv
import re
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any

from .errors import ProfileSyntaxError, TypeMismatch, UnknownProfile
from .model import (
    INHERITED_FIELDS, ConsentReceipt, ConsentRecord, Entity, PersonalDataItem, Process,
    known_entities, ordered_events, process_views, reference_problems,
)
from .vocabulary import PROFILE_NAMESPACE, Registry, compact, default_registry, to_iri

ERROR = "error"
WARNING = "warning"

DPV = "https://w3id.org/dpv#"
SCHEMA = "https://schema.org/"
PROFILE_SHORTNAMES = ("record", "record-eu-gdpr", "receipt", "receipt-eu-gdpr")

LANGUAGE_TAG = re.compile(r"^[A-Za-z]{2,8}(-[A-Za-z0-9]{1,8})*$")


# -- types ----------------------------------------------------------------------

@dataclass(frozen=True)
class FieldConstraint:
    path: str
    min: int
    max: int | None  # None means unbounded
    taxonomy: tuple[str, ...] = ()
    includes: tuple[str, ...] = ()
    when: tuple[str, ...] = ()
    scope: str = ""
    clause: str | None = None
    id: str = ""

    def __post_init__(self):
        if self.min < 0 or (self.max is not None and self.max < self.min):
            raise ProfileSyntaxError(f"{self.path}: bad cardinality {self.min}..{self.max}")

    @property
    def cardinality(self) -> str:
        return f"{self.min}..{'n' if self.max is None else self.max}"

    @property
    def field_name(self) -> str:
        return self.path.rsplit(".", 1)[-1]

    @property
    def conditional(self) -> bool:
        return bool(self.includes or self.when)


@dataclass(frozen=True)
class Profile:
    id: str
    kind: str  # "record" or "receipt"
    constraints: tuple[FieldConstraint, ...]
    base: str | None = None
    records: str | None = None  # profile applied to records embedded in a receipt
    own: tuple[FieldConstraint, ...] = ()

    @property
    def shortname(self) -> str:
        return self.id[len(PROFILE_NAMESPACE):] if self.id.startswith(PROFILE_NAMESPACE) else self.id

    def min_for(self, path: str) -> int:
        """Unconditional minimum for ``path`` (0 if the path is not declared)."""
        return max((c.min for c in self.constraints if c.path == path and not c.conditional), default=0)

    def declared_paths(self) -> list[str]:
        return list(dict.fromkeys(c.path for c in self.constraints))


@dataclass(frozen=True)
class Finding:
    severity: str
    path: str
    rule: str
    message: str
    gdpr_refs: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"severity": self.severity, "path": self.path, "rule": self.rule,
                "message": self.message, "gdpr_refs": list(self.gdpr_refs)}


@dataclass(frozen=True)
class ValidationReport:
    profile: str
    findings: tuple[Finding, ...] = ()

    @property
    def passed(self) -> bool:
        return not any(f.severity == ERROR for f in self.findings)

    @property
    def errors(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == ERROR]

    @property
    def warnings(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == WARNING]

    def to_dict(self) -> dict:
        return {
            "profile": compact(self.profile),
            "passed": self.passed,
            "errors": len(self.errors),
            "warnings": len(self.warnings),
            "findings": [f.to_dict() for f in self.findings],
        }


@dataclass(frozen=True)
class CrosswalkEntry:
    iso27560_clause: str
    iso27560_name: str
    iso29184_refs: tuple[str, ...]
    gdpr_refs: tuple[str, ...]
    note: str

    @property
    def clauses(self) -> tuple[str, ...]:
        return tuple(c.strip() for c in self.iso27560_clause.split(","))

    def to_dict(self) -> dict:
        return {"clause": self.iso27560_clause, "name": self.iso27560_name,
                "iso29184": list(self.iso29184_refs), "gdpr": list(self.gdpr_refs), "note": self.note}


# -- loading ----------------------------------------------------------------------

def _data(*parts: str):
    return resources.files("consentkit").joinpath("data", *parts)


def profile_iri(ref: str) -> str:
    """Accept a short name ("record"), a CURIE or a full IRI."""
    if ref in PROFILE_SHORTNAMES:
        return PROFILE_NAMESPACE + ref
    return to_iri(ref, default_registry().prefixes)


@dataclass(frozen=True)
class _RawProfile:
    id: str
    kind: str
    base: str | None
    records: str | None
    constraints: tuple[FieldConstraint, ...]


def parse_profile_text(text: str, source: str = "<profile>", registry: Registry | None = None) -> _RawProfile:
    reg = registry or default_registry()
    header: dict[str, str] = {}
    constraints: list[FieldConstraint] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip() if not raw.lstrip().startswith("@") else raw.strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        if line.startswith("@"):
            parts = line.split()
            if len(parts) != 2 or parts[0][1:] not in ("profile", "extends", "kind", "records"):
                raise ProfileSyntaxError(f"{where}: bad header {line!r}")
            header[parts[0][1:]] = parts[1]
            continue
        constraints.append(_parse_constraint(line, where, reg))
    if "profile" not in header:
        raise ProfileSyntaxError(f"{source}: missing @profile header")
    kind = header.get("kind", "record")
    if kind not in ("record", "receipt"):
        raise ProfileSyntaxError(f"{source}: @kind must be record or receipt")
    pid = profile_iri(header["profile"])
    return _RawProfile(
        id=pid, kind=kind,
        base=profile_iri(header["extends"]) if "extends" in header else None,
        records=profile_iri(header["records"]) if "records" in header else None,
        constraints=tuple(constraints),
    )


_CARD = re.compile(r"^(\d+)\.\.(\d+|n|\*)$")


def _parse_constraint(line: str, where: str, reg: Registry) -> FieldConstraint:
    parts = line.split()
    if len(parts) < 2:
        raise ProfileSyntaxError(f"{where}: expected '<path> <min>..<max>'")
    path, card, *opts = parts
    m = _CARD.match(card)
    if m is None:
        raise ProfileSyntaxError(f"{where}: bad cardinality {card!r}")
    lo = int(m.group(1))
    hi = None if m.group(2) in ("n", "*") else int(m.group(2))
    kwargs: dict[str, Any] = {}
    for opt in opts:
        key, sep, value = opt.partition("=")
        if not sep or key not in ("taxonomy", "includes", "when", "scope", "clause", "id"):
            raise ProfileSyntaxError(f"{where}: unknown option {opt!r}")
        if key in ("taxonomy", "includes", "when"):
            terms = tuple(reg.expand(v) for v in value.split(","))
            for t in terms:
                if t not in reg:
                    raise ProfileSyntaxError(f"{where}: {compact(t)} is not a registered term")
            kwargs[key] = terms
        else:
            kwargs[key] = value
    scope = _scope_of(path)
    if kwargs.get("scope", scope) != scope:
        raise ProfileSyntaxError(f"{where}: scope {kwargs['scope']!r} does not match path {path!r}")
    kwargs["scope"] = scope
    if not _selector_known(scope, path):
        raise ProfileSyntaxError(f"{where}: unknown field path {path!r}")
    kwargs.setdefault("id", f"card:{path}")
    try:
        return FieldConstraint(path=path, min=lo, max=hi, **kwargs)
    except ProfileSyntaxError as exc:
        raise ProfileSyntaxError(f"{where}: {exc}") from None


class ProfileSet(Mapping):
    """Profiles by IRI, with ``@extends`` chains resolved."""

    def __init__(self, raws: Iterable[_RawProfile]):
        raw_by_id: dict[str, _RawProfile] = {}
        for r in raws:
            if r.id in raw_by_id:
                raise ProfileSyntaxError(f"profile {compact(r.id)} defined twice")
            raw_by_id[r.id] = r
        self._profiles: dict[str, Profile] = {}
        for pid in raw_by_id:
            self._resolve(pid, raw_by_id, ())

    def _resolve(self, pid: str, raws: dict, stack: tuple) -> Profile:
        if pid in self._profiles:
            return self._profiles[pid]
        if pid in stack:
            raise ProfileSyntaxError(f"profile inheritance cycle through {compact(pid)}")
        if pid not in raws:
            raise UnknownProfile(f"profile {compact(pid)} is not defined")
        raw = raws[pid]
        inherited: tuple[FieldConstraint, ...] = ()
        records = raw.records
        if raw.base is not None:
            base = self._resolve(raw.base, raws, stack + (pid,))
            if base.kind != raw.kind:
                raise ProfileSyntaxError(f"{compact(pid)} extends a {base.kind} profile")
            inherited = base.constraints
            records = records or base.records
        profile = Profile(id=pid, kind=raw.kind, constraints=inherited + raw.constraints,
                          base=raw.base, records=records, own=raw.constraints)
        self._profiles[pid] = profile
        return profile

    def __getitem__(self, ref: str) -> Profile:
        pid = profile_iri(ref)
        try:
            return self._profiles[pid]
        except KeyError:
            raise UnknownProfile(f"unknown profile {ref!r}") from None

    def __iter__(self) -> Iterator[str]:
        return iter(self._profiles)

    def __len__(self) -> int:
        return len(self._profiles)

    def __contains__(self, ref: object) -> bool:
        return isinstance(ref, str) and profile_iri(ref) in self._profiles

    def with_files(self, paths: Iterable[str | Path]) -> "ProfileSet":
        raws = [_RawProfile(p.id, p.kind, p.base, p.records, p.own) for p in self._profiles.values()]
        raws += [parse_profile_text(Path(p).read_text(encoding="utf-8"), str(p)) for p in paths]
        return ProfileSet(raws)


@lru_cache(maxsize=1)
def default_profiles() -> ProfileSet:
    raws = []
    for entry in sorted(_data("profiles").iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".profile"):
            raws.append(parse_profile_text(entry.read_text(encoding="utf-8"), entry.name))
    return ProfileSet(raws)


def get_profile(ref: str, profiles: ProfileSet | None = None) -> Profile:
    return (profiles or default_profiles())[ref]


def gdpr_profile_delta() -> list[FieldConstraint]:
    """Constraints record-eu-gdpr adds on top of the base record profile."""
    return list(get_profile("record-eu-gdpr").own)


# -- crosswalk ----------------------------------------------------------------------

def _split(cell: str, sep: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in cell.split(sep) if p.strip())


@lru_cache(maxsize=1)
def crosswalk() -> tuple[CrosswalkEntry, ...]:
    text = _data("crosswalk.tsv").read_text(encoding="utf-8")
    entries = []
    seen: set[str] = set()
    for row in csv.DictReader(text.splitlines(), delimiter="\t"):
        entry = CrosswalkEntry(
            iso27560_clause=row["clause"], iso27560_name=row["name"],
            iso29184_refs=_split(row["iso29184"], ";"), gdpr_refs=_split(row["gdpr"], ","),
            note=row["note"],
        )
        if entry.iso27560_clause in seen:
            raise ProfileSyntaxError(f"crosswalk clause {entry.iso27560_clause} listed twice")
        seen.add(entry.iso27560_clause)
        entries.append(entry)
    return tuple(entries)


def gdpr_requirements(clause_or_field: str) -> list[CrosswalkEntry]:
    """Crosswalk rows matching a clause id, a field name, a profile path or a GDPR citation."""
    q = clause_or_field.strip()
    if not q:
        return []
    via_path = {c.clause for name in ("record-eu-gdpr", "receipt-eu-gdpr")
                for c in get_profile(name).constraints if c.path == q and c.clause}
    return [e for e in crosswalk()
            if q in e.clauses or q.lower() == e.iso27560_name.lower() or q in e.gdpr_refs
            or via_path.intersection(e.clauses)]


@lru_cache(maxsize=None)
def _clause_refs(clause: str | None) -> tuple[str, ...]:
    if not clause:
        return ()
    refs: list[str] = []
    for e in crosswalk():
        if clause in e.clauses:
            refs.extend(e.gdpr_refs)
    return tuple(dict.fromkeys(refs))


# -- selectors ----------------------------------------------------------------------

_RECORD_FIELDS = {"metadata.schema_version", "metadata.record_ids", "metadata.data_subject",
                  "processing.processes", "events"}
_RECEIPT_FIELDS = {"metadata.schema_version", "metadata.receipt_ids", "metadata.records"}
_PERSONAL_DATA = {"data_type": "data_types", "identifier": "identifiers", "value": "values",
                  "necessity": "necessity", "sensitivity": "sensitivity", "source": "sources"}
_NOTICE = {"language": "language", "date": "date", "coverage": "coverage", "type": "types"}
_ENTITY = {"names", "identifiers", "roles", "contacts", "postal_addresses", "emails", "telephones", "urls"}
_EVENT = {"status": ("status",), "consent_type": ("consent_types", "legal_basis"), "time": ("time",),
          "duration": ("duration",), "actor": ("actor",), "method": ("method",), "notes": ("notes",)}


def _scope_of(path: str) -> str:
    if path in _RECORD_FIELDS or path in _RECEIPT_FIELDS:
        return "record"
    if path.startswith("processing.personal_data."):
        return "personal_data"
    if path.startswith("processing.notices."):
        return "notice"
    if path.startswith("processing."):
        return "process"
    if path.startswith("parties."):
        return "entity"
    if path.startswith("events."):
        return "event"
    return "unknown"


def _selector_known(scope: str, path: str) -> bool:
    name = path.rsplit(".", 1)[-1]
    return {
        "record": True,
        "process": name in INHERITED_FIELDS,
        "personal_data": name in _PERSONAL_DATA,
        "notice": name in _NOTICE,
        "entity": name in _ENTITY,
        "event": name in _EVENT,
    }.get(scope, False)


def _terms_of(value: Any) -> tuple[str, ...]:
    if isinstance(value, str):
        return (value,)
    if isinstance(value, PersonalDataItem):
        return value.data_types
    return getattr(value, "types", ())


class _Checker:
    def __init__(self, registry: Registry, profiles: ProfileSet):
        self.reg = registry
        self.profiles = profiles
        self.findings: list[Finding] = []

    def add(self, severity: str, path: str, rule: str, message: str, refs: tuple[str, ...] = ()):
        self.findings.append(Finding(severity, path, rule, message, refs))

    # constraint evaluation ------------------------------------------------

    def apply(self, c: FieldConstraint, values: tuple, path: str) -> None:
        refs = _clause_refs(c.clause)
        count = len(values)
        if c.includes:
            matching = [v for v in values if any(self.reg.is_a(t, *c.includes) for t in _terms_of(v))]
            if len(matching) < c.min:
                wanted = ", ".join(compact(t) for t in c.includes)
                self.add(ERROR, path, c.id, f"expected at least {c.min} value(s) of {wanted}, found {len(matching)}", refs)
        elif count < c.min or (c.max is not None and count > c.max):
            self.add(ERROR, path, c.id, f"expected {c.cardinality} value(s), found {count}", refs)
        if c.taxonomy:
            allowed = ", ".join(compact(t) for t in c.taxonomy)
            for i, v in enumerate(values):
                terms = _terms_of(v)
                if not any(self.reg.is_a(t, *c.taxonomy) for t in terms):
                    shown = ", ".join(compact(t) for t in terms) or "untyped value"
                    self.add(ERROR, f"{path}[{i}]", c.id.replace("card:", "taxonomy:", 1),
                             f"{shown} is not within {allowed}", refs)

    def check_record(self, record: ConsentRecord, profile: Profile) -> None:
        views = process_views(record)
        entities = known_entities(record, self.reg)
        for c in profile.constraints:
            if c.scope == "record":
                self.apply(c, self._record_values(record, c.path), c.path)
            elif c.scope == "process":
                for i, view in enumerate(views):
                    self.apply(c, getattr(view, c.field_name), f"processing[{i}].{c.field_name}")
            elif c.scope == "personal_data":
                attr = _PERSONAL_DATA[c.field_name]
                for i, view in enumerate(views):
                    for j, item in enumerate(view.personal_data):
                        self.apply(c, getattr(item, attr), f"processing[{i}].personal_data[{j}].{c.field_name}")
            elif c.scope == "notice":
                attr = _NOTICE[c.field_name]
                for i, view in enumerate(views):
                    for j, notice in enumerate(view.notices):
                        value = getattr(notice, attr)
                        values = value if isinstance(value, tuple) else (() if value is None else (value,))
                        self.apply(c, values, f"processing[{i}].notices[{j}].{c.field_name}")
            elif c.scope == "entity":
                for k, party in enumerate(record.parties):
                    self.apply(c, self._entity_values(party, c.field_name, entities), f"parties[{k}].{c.field_name}")
            elif c.scope == "event":
                for e, event in enumerate(record.events):
                    if c.when and not any(self.reg.is_a(s, *c.when) for s in event.status):
                        continue
                    values = tuple(v for attr in _EVENT[c.field_name] for v in getattr(event, attr))
                    self.apply(c, values, f"events[{e}].{c.field_name}")
        self.builtin_record_rules(record)

    def _record_values(self, record: ConsentRecord, path: str) -> tuple:
        return {
            "metadata.schema_version": record.schema_version,
            "metadata.record_ids": record.record_ids,
            "metadata.data_subject": record.data_subject,
            "processing.processes": record.processes,
            "events": record.events,
        }[path]

    def _entity_values(self, party: Entity, name: str, entities) -> tuple:
        if name == "roles":
            for ent, roles in entities:
                if ent is party:
                    return tuple(sorted(roles))
            return ()
        if name == "postal_addresses":
            return tuple(c for c in party.contacts if SCHEMA + "PostalAddress" in c.types)
        if name in ("emails", "telephones", "urls"):
            key = SCHEMA + {"emails": "email", "telephones": "telephone", "urls": "url"}[name]
            return tuple(v for c in party.contacts for v in _as_tuple(c.props.get(key)))
        return getattr(party, name)

    # built-in rules ---------------------------------------------------------

    def builtin_record_rules(self, record: ConsentRecord) -> None:
        reg = self.reg
        for path, ref, exc in reference_problems(record, reg):
            rule = "ref.dangling" if type(exc).__name__ == "DanglingReference" else "ref.ambiguous"
            self.add(ERROR, path, rule, str(exc))
        for path, ref, exc in reference_problems(record, reg, roles=True):
            self.add(WARNING, path, "ref.role-unfilled", f"{exc}; read as a plain role term")
        for sv in record.schema_version:
            if sv not in self.profiles:
                self.add(WARNING, "metadata.schema_version", "schema_version.unregistered",
                         f"{compact(sv)} is not a registered profile")
        for label, proc in (("processing", record.shared),
                            *((f"processing[{i}]", p) for i, p in enumerate(record.processes))):
            self._process_rules(label, proc)
        for k, party in enumerate(record.parties):
            self._unknown_terms(f"parties[{k}].types", party.types)
            self._extensions(f"parties[{k}]", party.extensions)
        for k, subject in enumerate(record.data_subject):
            self._unknown_terms(f"metadata.data_subject[{k}].types", subject.types)
            self._extensions(f"metadata.data_subject[{k}]", subject.extensions)
        for e, event in enumerate(record.events):
            self._unknown_terms(f"events[{e}].types", event.other_types)
            self._unknown_terms(f"events[{e}].consent_type", event.legal_basis)
            self._extensions(f"events[{e}]", event.extensions)
            for d in event.duration:
                if not d.is_period:
                    self.add(WARNING, f"events[{e}].duration", "lifecycle.duration",
                             f"{d.value!r} is not an ISO 8601 period and cannot expire consent")
        in_time = [i for i, _ in ordered_events(record)]
        if in_time != sorted(in_time):
            self.add(WARNING, "events", "lifecycle.order", "events are not listed in chronological order")
        self._extensions("metadata", record.extensions)

    def _process_rules(self, label: str, proc: Process) -> None:
        for attr in ("purposes", "processing_operations", "legal_basis", "jurisdictions", "applicable_law"):
            self._unknown_terms(f"{label}.{attr}", getattr(proc, attr))
        for j, item in enumerate(proc.personal_data):
            base = f"{label}.personal_data[{j}]"
            for attr, name in (("data_types", "data_type"), ("necessity", "necessity"), ("sensitivity", "sensitivity")):
                self._unknown_terms(f"{base}.{name}", getattr(item, attr))
            self._extensions(base, item.extensions)
        for attr in ("storage_conditions", "processing_conditions"):
            for k, cond in enumerate(getattr(proc, attr)):
                self._condition_shape(f"{label}.{attr}[{k}]", cond)
                self._unknown_terms(f"{label}.{attr}[{k}].types", cond.types)
                self._unknown_terms(f"{label}.{attr}[{k}].locations", cond.locations)
                self._extensions(f"{label}.{attr}[{k}]", cond.extensions)
        for attr in ("geographic_restrictions", "involvement_controls", "rights", "codes_of_conduct", "impact_assessments"):
            for k, res in enumerate(getattr(proc, attr)):
                self._unknown_terms(f"{label}.{attr}[{k}].types", res.types)
        for k, notice in enumerate(proc.notices):
            for tag in notice.language:
                if not LANGUAGE_TAG.match(tag):
                    self.add(ERROR, f"{label}.notices[{k}].language", "notice.language-tag",
                             f"{tag!r} is not a well-formed language tag")
            self._extensions(f"{label}.notices[{k}]", notice.extensions)
        self._extensions(label, proc.extensions)

    def _condition_shape(self, path: str, cond) -> None:
        reg = self.reg
        needs_location = any(reg.is_a(t, DPV + "StorageLocation", DPV + "ProcessingLocation") for t in cond.types)
        needs_duration = any(reg.is_a(t, DPV + "StorageDuration", DPV + "ProcessingDuration", DPV + "StorageDeletion")
                             for t in cond.types)
        if needs_location and not cond.locations:
            self.add(ERROR, path, "condition.shape", "location condition names no location")
        if needs_duration and not cond.durations:
            self.add(ERROR, path, "condition.shape", "duration or deletion condition carries no duration")

    def _unknown_terms(self, path: str, values: Iterable[str]) -> None:
        for v in values:
            if v not in self.reg:
                self.add(WARNING, path, "term.unknown", f"{compact(v)} is not a registered term")

    def _extensions(self, path: str, ext: Mapping) -> None:
        for key in ext:
            self.add(WARNING, f"{path}.{compact(key)}", "extension.unrecognized",
                     f"field {compact(key)} is not part of the profile")

    # receipts -----------------------------------------------------------------

    def check_receipt(self, receipt: ConsentReceipt, profile: Profile) -> None:
        values = {
            "metadata.schema_version": receipt.schema_version,
            "metadata.receipt_ids": receipt.receipt_ids,
            "metadata.records": receipt.records,
        }
        for c in profile.constraints:
            if c.path not in values:
                raise ProfileSyntaxError(f"{c.path} is not a receipt field")
            self.apply(c, values[c.path], c.path)
        for sv in receipt.schema_version:
            if sv not in self.profiles:
                self.add(WARNING, "metadata.schema_version", "schema_version.unregistered",
                         f"{compact(sv)} is not a registered profile")
        self._extensions("metadata", receipt.extensions)
        record_profile = self.profiles[profile.records] if profile.records else None
        subjects = set()
        for r, record in enumerate(receipt.records):
            subjects.add(tuple(e.id for e in record.data_subject))
            if record_profile is None:
                continue
            inner = _Checker(self.reg, self.profiles)
            inner.check_record(record, record_profile)
            for f in _sorted(inner.findings):
                self.findings.append(Finding(f.severity, f"records[{r}].{f.path}", f.rule, f.message, f.gdpr_refs))
        if len(subjects) > 1:
            self.add(WARNING, "metadata.records", "receipt.mixed-subjects",
                     "receipt aggregates records of different data subjects")


def _as_tuple(value: Any) -> tuple:
    if value is None:
        return ()
    return value if isinstance(value, tuple) else (value,)


_SECTION_RANK = {"metadata": 0, "processing": 1, "parties": 2, "events": 3, "records": 4}
_INDEX = re.compile(r"\[(\d+)\]")


def _path_key(path: str) -> tuple:
    head = re.split(r"[.\[]", path, maxsplit=1)[0]
    if head == "records":
        m = re.match(r"records\[(\d+)\]\.(.*)$", path)
        if m:
            return (_SECTION_RANK["records"], int(m.group(1)), _path_key(m.group(2)))
    indices = tuple(int(i) for i in _INDEX.findall(path))
    return (_SECTION_RANK.get(head, 5), indices)


def _sorted(findings: list[Finding]) -> list[Finding]:
    return sorted(findings, key=lambda f: _path_key(f.path))


def validate(value: ConsentRecord | ConsentReceipt, profile_id: str,
             profiles: ProfileSet | None = None, registry: Registry | None = None) -> ValidationReport:
    """Check ``value`` against a profile; findings come back in document order."""
    profiles = profiles or default_profiles()
    profile = profiles[profile_id]
    checker = _Checker(registry or default_registry(), profiles)
    if isinstance(value, ConsentRecord):
        if profile.kind != "record":
            raise TypeMismatch(f"a consent record cannot be validated against receipt profile {profile.shortname}")
        checker.check_record(value, profile)
    elif isinstance(value, ConsentReceipt):
        if profile.kind != "receipt":
            raise TypeMismatch(f"a consent receipt cannot be validated against record profile {profile.shortname}")
        checker.check_receipt(value, profile)
    else:
        raise TypeMismatch(f"cannot validate {type(value).__name__}")
    return ValidationReport(profile.id, tuple(_sorted(checker.findings)))


def declared_profile(value: ConsentRecord | ConsentReceipt, profiles: ProfileSet | None = None) -> Profile:
    """The profile a value claims via its schema version, or the base profile of its kind."""
    profiles = profiles or default_profiles()
    kind = "receipt" if isinstance(value, ConsentReceipt) else "record"
    for sv in value.schema_version:
        if sv in profiles and profiles[sv].kind == kind:
            return profiles[sv]
    return profiles[kind]
