"""Compact JSON-LD reading and writing under the pinned context.

Only the shipped context (or inline prefix maps that agree with it) is
understood; this is deliberately not a general JSON-LD processor. Two output
modes exist:

* ``pretty``: compact keys and terms, single-element arrays collapsed,
  timestamps in their original lexical form, ``@context`` emitted.
* ``canonical``: expanded keys sorted by code point, every multi-valued field
  an array, timestamps normalized to UTC seconds, no whitespace, no context.
  Digests and signatures are computed over these bytes.
"""

from __future__ import annotations

import json
import warnings
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from .errors import (
    DocumentError, DuplicateKey, MalformedField, NotAReceipt, NotARecord, ParseWarning,
    RegistryError, UnknownContext, UnserializableValue,
)
from .model import (
    EMPTY, Condition, ConsentEvent, ConsentReceipt, ConsentRecord, Duration, Entity, FrozenMap,
    Notice, PersonalDataItem, Process, RedactionManifest, Resource, Timestamp, freeze,
    reference_problems,
)
from .vocabulary import PINNED_CONTEXT_IRI, PrefixTable, Registry, compact, default_registry, to_iri

PRETTY = "pretty"
CANONICAL = "canonical"

DPV = "https://w3id.org/dpv#"
RECORD_TYPE = DPV + "ConsentRecord"
RECEIPT_TYPE = DPV + "ConsentReceipt"
RECEIPT_TYPO = DPV + "ConsentRereceipt"
CONSENT_STATUS = DPV + "ConsentStatus"
CONSENT_ROOT = DPV + "Consent"

_KEY_ALIASES = {"type": "@type", "id": "@id"}


# -- field tables -------------------------------------------------------------

@dataclass(frozen=True)
class Field:
    attr: str
    key: str  # CURIE under the pinned context, or a JSON-LD keyword
    kind: str
    aliases: tuple[str, ...] = ()
    single: bool = False


def _f(attr, key, kind, *aliases, single=False):
    return Field(attr, key, kind, aliases, single)


PROCESS_FIELDS = (
    _f("purposes", "dpv:hasPurpose", "iri"),
    _f("personal_data", "dpv:hasPersonalData", "personal_data"),
    _f("processing_operations", "dpv:hasProcessing", "iri"),
    _f("data_sources", "dpv:hasDataSource", "iri"),
    _f("storage_conditions", "dpv:hasStorageCondition", "condition"),
    _f("processing_conditions", "dpv:hasProcessingCondition", "condition"),
    _f("geographic_restrictions", "dpv:hasRule", "resource"),
    _f("data_controllers", "dpv:hasDataController", "iri"),
    _f("data_processors", "dpv:hasDataProcessor", "iri"),
    _f("third_parties", "dpv:hasThirdParty", "iri"),
    _f("authorities", "dpv:hasAuthority", "iri"),
    _f("legal_basis", "dpv:hasLegalBasis", "iri"),
    _f("recipients", "dpv:hasRecipient", "iri"),
    _f("involvement_controls", "dpv:hasInvolvementControl", "resource"),
    _f("jurisdictions", "dpv:hasJurisdiction", "iri"),
    _f("applicable_law", "dpv:hasApplicableLaw", "iri"),
    _f("rights", "dpv:hasRight", "resource"),
    _f("services", "dpv:hasService", "text"),
    _f("codes_of_conduct", "dpv:hasOrganisationalMeasure", "resource"),
    _f("impact_assessments", "dpv:hasImpactAssessment", "resource", "dpv:hasAssessment"),
    _f("notices", "dpv:hasNotice", "notice"),
)

HEAD_FIELDS = (
    _f("id", "@id", "iri", single=True),
    _f("types", "@type", "iri"),
)

ENTITY_FIELDS = HEAD_FIELDS + (
    _f("names", "dpv:hasName", "text"),
    _f("identifiers", "dpv:hasIdentifier", "text"),
    _f("contacts", "schema:contactPoint", "resource"),
)

PERSONAL_DATA_FIELDS = (
    _f("id", "@id", "iri", single=True),
    _f("data_types", "@type", "iri"),
    _f("identifiers", "dct:identifier", "text"),
    _f("values", "rdf:value", "text"),
    _f("necessity", "dpv:hasNecessity", "iri"),
    _f("sensitivity", "dct:type", "iri"),
    _f("sources", "dpv:hasDataSource", "iri"),
)

CONDITION_FIELDS = HEAD_FIELDS + (
    _f("locations", "dpv:hasLocation", "iri"),
    _f("durations", "dpv:hasDuration", "duration"),
)

NOTICE_FIELDS = HEAD_FIELDS + (
    _f("date", "dct:date", "timestamp", single=True),
    _f("language", "dct:language", "text"),
    _f("coverage", "dct:coverage", "text", single=True),
)

EVENT_FIELDS = (
    _f("id", "@id", "iri", single=True),
    # @type is split into status / consent_types / other_types
    _f("legal_basis", "dpv:hasLegalBasis", "iri"),
    _f("time", "dpv:isIndicatedAtTime", "timestamp"),
    _f("duration", "dpv:hasDuration", "duration"),
    _f("actor", "dpv:isIndicatedBy", "iri"),
    _f("method", "dpv:hasIndicationMethod", "text"),
    _f("notes", "rdfs:comment", "text"),
)

DURATION_FIELDS = (
    _f("types", "@type", "iri"),
    _f("value", "rdf:value", "text", single=True),
)

MANIFEST_FIELDS = (
    _f("paths", "ck:redactedPaths", "text"),
    _f("salt_digest", "ck:saltDigest", "text", single=True),
    _f("algorithm", "ck:algorithm", "text", single=True),
)

RECORD_FIELDS = HEAD_FIELDS + (
    _f("record_ids", "dct:identifier", "text", "dpv:hasIdentifier"),
    _f("schema_version", "dct:conformsTo", "iri"),
    _f("data_subject", "dpv:hasDataSubject", "entity"),
    _f("parties", "dpv:hasEntity", "entity"),
    _f("supersedes", "dct:replaces", "iri"),
    _f("processes", "dpv:hasProcess", "process"),
    _f("events", "dpv:hasConsentStatus", "event"),
    _f("redaction", "ck:redaction", "manifest", single=True),
)

RECEIPT_FIELDS = HEAD_FIELDS + (
    _f("receipt_ids", "dct:identifier", "text", "dpv:hasIdentifier"),
    _f("schema_version", "dct:conformsTo", "iri"),
    _f("created", "dct:created", "timestamp", single=True),
    _f("publisher", "dct:publisher", "iri", single=True),
    _f("recipient", "schema:recipient", "iri", single=True),
    _f("records", "dpv:hasRecordOfActivity", "record"),
)


# -- reading ------------------------------------------------------------------

class _Reader:
    def __init__(self, prefixes: PrefixTable, registry: Registry):
        self.prefixes = prefixes
        self.registry = registry

    def with_prefixes(self, prefixes: PrefixTable) -> "_Reader":
        return _Reader(prefixes, self.registry)

    def iri(self, value: str) -> str:
        return to_iri(value, self.prefixes)

    def key(self, raw: str, path: str) -> str:
        if raw.startswith("@"):
            return raw
        if raw in _KEY_ALIASES:
            warnings.warn(f"{path}: key {raw!r} read as {_KEY_ALIASES[raw]}", ParseWarning, stacklevel=4)
            return _KEY_ALIASES[raw]
        return self.iri(raw)

    def field_key(self, f: Field) -> str:
        return f.key if f.key.startswith("@") else self.registry.expand(f.key)

    # generic object walk -------------------------------------------------

    def expand_keys(self, obj: Mapping, path: str, allow_context: bool = False) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for raw, value in obj.items():
            if raw == "@context":
                if not allow_context:
                    raise UnknownContext("nested @context is only supported on records and receipts", path)
                continue
            key = self.key(raw, path)
            if key in out:
                raise DuplicateKey(f"key {raw!r} duplicates an earlier key after expansion", path)
            out[key] = value
        return out

    def read_fields(self, obj: Mapping, table: tuple[Field, ...], path: str) -> tuple[dict, dict]:
        """Return (model kwargs, expanded leftovers)."""
        expanded = self.expand_keys(obj, path)
        kwargs: dict[str, Any] = {}
        for f in table:
            keys = [self.field_key(f)] + [self.registry.expand(a) for a in f.aliases]
            present = [k for k in keys if k in expanded]
            if not present:
                continue
            if len(present) > 1:
                raise DuplicateKey(f"{' and '.join(self.registry.compact(k) for k in present)} both given", path)
            raw = expanded.pop(present[0])
            kwargs[f.attr] = self.value(raw, f, _join(path, f.attr))
        return kwargs, expanded

    def extensions(self, leftovers: Mapping[str, Any], path: str) -> FrozenMap:
        if not leftovers:
            return EMPTY
        return FrozenMap({k: self.raw(v) for k, v in leftovers.items()})

    def raw(self, value: Any) -> Any:
        """Opaque JSON with keys and @type values expanded."""
        if isinstance(value, Mapping):
            out = {}
            for k, v in value.items():
                key = k if k.startswith("@") else self.iri(k)
                if key == "@type":
                    out[key] = freeze([self.iri(t) if isinstance(t, str) else t for t in _listify(v)])
                else:
                    out[key] = self.raw(v)
            return FrozenMap(out)
        if isinstance(value, list):
            return tuple(self.raw(v) for v in value)
        return value

    # values ----------------------------------------------------------------

    def value(self, raw: Any, f: Field, path: str) -> Any:
        items = _listify(raw)
        if f.single:
            if len(items) > 1:
                raise MalformedField(f"expected a single value, got {len(items)}", path)
            return self.item(items[0], f.kind, path) if items else None
        return tuple(self.item(v, f.kind, f"{path}[{i}]") for i, v in enumerate(items))

    def item(self, v: Any, kind: str, path: str) -> Any:
        reader = _KIND_READERS.get(kind)
        if reader is None:
            raise AssertionError(kind)
        return reader(self, v, path)

    def read_iri(self, v, path):
        if isinstance(v, Mapping) and set(v) == {"@id"} and isinstance(v["@id"], str):
            v = v["@id"]
        if not isinstance(v, str):
            raise MalformedField(f"expected an IRI or term, got {type(v).__name__}", path)
        return self.iri(v)

    def read_text(self, v, path):
        if not isinstance(v, str):
            raise MalformedField(f"expected text, got {type(v).__name__}", path)
        return v

    def read_timestamp(self, v, path):
        if not isinstance(v, str):
            raise MalformedField("expected an ISO 8601 timestamp", path)
        try:
            return Timestamp(v)
        except ValueError as exc:
            raise MalformedField(str(exc), path) from None

    def read_duration(self, v, path):
        if isinstance(v, str):
            return Duration(value=v)
        if not isinstance(v, Mapping):
            raise MalformedField("expected a duration string or object", path)
        kwargs, rest = self.read_fields(v, DURATION_FIELDS, path)
        if kwargs.get("value") is None:
            raise MalformedField("described duration needs rdf:value", path)
        return Duration(**kwargs, extensions=self.extensions(rest, path))

    def _term_or_id(self, v: str) -> dict:
        iri = self.iri(v)
        return {"types": (iri,)} if iri in self.registry else {"id": iri}

    def read_resource(self, v, path):
        if isinstance(v, str):
            return Resource(**self._term_or_id(v))
        obj = _require_object(v, path)
        expanded = self.expand_keys(obj, path)
        rid = expanded.pop("@id", None)
        if rid is not None and not isinstance(rid, str):
            raise MalformedField("@id must be text", path)
        types = tuple(self.read_iri(t, f"{path}.types") for t in _listify(expanded.pop("@type", [])))
        props = FrozenMap({k: self.raw(val) for k, val in expanded.items()})
        return Resource(id=self.iri(rid) if rid is not None else None, types=types, props=props)

    def _object(self, cls, table, v, path, string_form):
        if isinstance(v, str):
            return cls(**string_form(v))
        obj = _require_object(v, path)
        kwargs, rest = self.read_fields(obj, table, path)
        return cls(**kwargs, extensions=self.extensions(rest, path))

    def read_entity(self, v, path):
        return self._object(Entity, ENTITY_FIELDS, v, path, lambda s: {"id": self.iri(s)})

    def read_personal_data(self, v, path):
        return self._object(PersonalDataItem, PERSONAL_DATA_FIELDS, v, path,
                            lambda s: {"data_types": (self.iri(s),)})

    def read_condition(self, v, path):
        return self._object(Condition, CONDITION_FIELDS, v, path, self._term_or_id)

    def read_notice(self, v, path):
        return self._object(Notice, NOTICE_FIELDS, v, path, self._term_or_id)

    def read_process(self, v, path):
        return self._object(Process, HEAD_FIELDS + PROCESS_FIELDS, v, path, lambda s: {"id": self.iri(s)})

    def read_event(self, v, path):
        obj = _require_object(v, path)
        expanded = self.expand_keys(obj, path)
        raw_types = expanded.pop("@type", [])
        kwargs, rest = self.read_fields(expanded, EVENT_FIELDS, path)
        status, consent, other = [], [], []
        for i, t in enumerate(_listify(raw_types)):
            iri = self.read_iri(t, f"{path}.types[{i}]")
            if self.registry.is_a(iri, CONSENT_STATUS):
                status.append(iri)
            elif self.registry.is_a(iri, CONSENT_ROOT):
                consent.append(iri)
            else:
                other.append(iri)
        if not kwargs.get("time"):
            raise MalformedField("event has no time (dpv:isIndicatedAtTime)", _join(path, "time"))
        return ConsentEvent(status=tuple(status), consent_types=tuple(consent), other_types=tuple(other),
                            **kwargs, extensions=self.extensions(rest, path))

    def read_manifest(self, v, path):
        obj = _require_object(v, path)
        kwargs, rest = self.read_fields(obj, MANIFEST_FIELDS, path)
        if rest or not kwargs.get("salt_digest"):
            raise MalformedField("malformed redaction manifest", path)
        kwargs.setdefault("paths", ())
        if kwargs.get("algorithm") is None:
            kwargs.pop("algorithm", None)
        return RedactionManifest(**kwargs)

    def read_record(self, v, path):
        obj = _require_object(v, path)
        reader = self._scoped(obj, path)
        return reader._record(obj, path)

    def _scoped(self, obj: Mapping, path: str) -> "_Reader":
        if "@context" not in obj:
            return self
        return self.with_prefixes(_context_table(obj["@context"], self.prefixes, path))

    def _record(self, obj: Mapping, path: str) -> ConsentRecord:
        expanded = self.expand_keys(obj, path, allow_context=True)
        types = tuple(self.read_iri(t, f"{path}.types") for t in _listify(expanded.get("@type", [])))
        if RECORD_TYPE not in types:
            raise NotARecord("document does not declare type dpv:ConsentRecord", path)
        shared_kwargs, rest = self.read_fields(expanded, PROCESS_FIELDS, path)
        kwargs, rest = self.read_fields(rest, RECORD_FIELDS, path)
        return ConsentRecord(
            **kwargs, shared=Process(**shared_kwargs),
            extensions=self.extensions(rest, path), context=_context_value(obj),
        )

    def _receipt(self, obj: Mapping, path: str) -> ConsentReceipt:
        expanded = self.expand_keys(obj, path, allow_context=True)
        types = [self.read_iri(t, f"{path}.types") for t in _listify(expanded.get("@type", []))]
        if RECEIPT_TYPO in types:
            warnings.warn("type dpv:ConsentRereceipt read as dpv:ConsentReceipt", ParseWarning, stacklevel=3)
            types = [RECEIPT_TYPE if t == RECEIPT_TYPO else t for t in types]
            types = list(dict.fromkeys(types))
            expanded["@type"] = types
        if RECEIPT_TYPE not in types:
            raise NotAReceipt("document does not declare type dpv:ConsentReceipt", path)
        kwargs, rest = self.read_fields(expanded, RECEIPT_FIELDS, path)
        if not kwargs.get("records"):
            raise MalformedField("receipt embeds no consent record", _join(path, "records"))
        return ConsentReceipt(**kwargs, extensions=self.extensions(rest, path), context=_context_value(obj))


_KIND_READERS: dict[str, Callable] = {
    "iri": _Reader.read_iri,
    "text": _Reader.read_text,
    "timestamp": _Reader.read_timestamp,
    "duration": _Reader.read_duration,
    "resource": _Reader.read_resource,
    "entity": _Reader.read_entity,
    "personal_data": _Reader.read_personal_data,
    "condition": _Reader.read_condition,
    "notice": _Reader.read_notice,
    "process": _Reader.read_process,
    "event": _Reader.read_event,
    "manifest": _Reader.read_manifest,
    "record": _Reader.read_record,
}


def _join(path: str, attr: str) -> str:
    return f"{path}.{attr}" if path else attr


def _listify(v: Any) -> list:
    if v is None:
        return []
    return list(v) if isinstance(v, (list, tuple)) else [v]


def _require_object(v: Any, path: str) -> Mapping:
    if not isinstance(v, Mapping):
        raise MalformedField(f"expected an object, got {type(v).__name__}", path)
    return v


def _context_value(obj: Mapping) -> Any:
    return obj.get("@context")


def _context_table(ctx: Any, base: PrefixTable, path: str) -> PrefixTable:
    """Prefix table for a document's ``@context``.

    Accepted: the pinned context IRI, inline prefix maps that agree with the
    registry (new prefixes may be added), or a list of those.
    """
    table = base
    for item in _listify(ctx) if ctx is not None else [None]:
        if isinstance(item, str):
            if item != PINNED_CONTEXT_IRI:
                raise UnknownContext(f"unsupported context {item!r}", path)
            continue
        if not isinstance(item, Mapping):
            raise UnknownContext("context must be the pinned IRI or a prefix map", path)
        extra = {}
        for prefix, ns in item.items():
            if prefix.startswith("@") or not isinstance(ns, str) or ":" in prefix:
                raise UnknownContext(f"context entry {prefix!r} is not a plain prefix declaration", path)
            if prefix in table:
                if table[prefix] != ns:
                    raise UnknownContext(f"prefix {prefix!r} redefined as {ns}", path)
                continue
            extra[prefix] = ns
        try:
            table = table.extended(extra)
        except RegistryError as exc:
            raise UnknownContext(str(exc), path) from None
    return table


def _reject_duplicates(pairs: list[tuple[str, Any]]) -> dict:
    out: dict = {}
    for k, v in pairs:
        if k in out:
            raise DuplicateKey(f"duplicate key {k!r}")
        out[k] = v
    return out


def loads(data: str | bytes) -> Any:
    """json.loads that refuses duplicate keys."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        return json.loads(data, object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as exc:
        raise MalformedField(f"not valid JSON: {exc}") from None


def _as_tree(doc: Any) -> Any:
    if isinstance(doc, (str, bytes)):
        return loads(doc)
    if isinstance(doc, Path):
        return loads(doc.read_bytes())
    return doc


def _reader(registry: Registry | None) -> _Reader:
    reg = registry or default_registry()
    return _Reader(reg.prefixes, reg)


def parse_record(doc: Any, registry: Registry | None = None) -> ConsentRecord:
    tree = _as_tree(doc)
    obj = _require_object(tree, "")
    return _reader(registry).read_record(obj, "")


def parse_receipt(doc: Any, registry: Registry | None = None) -> ConsentReceipt:
    tree = _as_tree(doc)
    obj = _require_object(tree, "")
    reader = _reader(registry)
    return reader._scoped(obj, "")._receipt(obj, "")


def document_kind(doc: Any, registry: Registry | None = None) -> str:
    """'record', 'receipt' or 'unknown' judged from the top-level @type."""
    reg = registry or default_registry()
    tree = _as_tree(doc)
    if not isinstance(tree, Mapping):
        return "unknown"
    try:
        table = _context_table(tree["@context"], reg.prefixes, "") if "@context" in tree else reg.prefixes
    except UnknownContext:
        table = reg.prefixes
    raw = tree.get("@type", tree.get("type", []))
    types = {to_iri(t, table) for t in _listify(raw) if isinstance(t, str)}
    if RECORD_TYPE in types:
        return "record"
    if RECEIPT_TYPE in types or RECEIPT_TYPO in types:
        return "receipt"
    return "unknown"


def parse(doc: Any, registry: Registry | None = None) -> ConsentRecord | ConsentReceipt:
    tree = _as_tree(doc)
    kind = document_kind(tree, registry)
    if kind == "receipt":
        return parse_receipt(tree, registry)
    if kind == "record":
        return parse_record(tree, registry)
    raise NotARecord("document is neither a consent record nor a consent receipt")


def load(path: str | Path, registry: Registry | None = None) -> ConsentRecord | ConsentReceipt:
    return parse(Path(path).read_bytes(), registry)


# -- writing ------------------------------------------------------------------

class _Writer:
    def __init__(self, mode: str, registry: Registry):
        if mode not in (PRETTY, CANONICAL):
            raise ValueError(f"unknown serialization mode {mode!r}")
        self.pretty = mode == PRETTY
        self.registry = registry

    def key(self, curie_or_iri: str) -> str:
        if curie_or_iri.startswith("@"):
            return curie_or_iri
        iri = to_iri(curie_or_iri, self.registry.prefixes)
        return compact(iri, self.registry.prefixes) if self.pretty else iri

    def iri(self, value: str) -> str:
        return compact(value, self.registry.prefixes) if self.pretty else value

    def many(self, values: list) -> Any:
        if self.pretty and len(values) == 1:
            return values[0]
        return values

    def fields(self, value: Any, table: tuple[Field, ...], out: dict | None = None) -> dict:
        out = {} if out is None else out
        for f in table:
            v = getattr(value, f.attr)
            if f.single:
                if v is not None:
                    out[self.key(f.key)] = self.item(v, f.kind)
            elif v:
                out[self.key(f.key)] = self.many([self.item(x, f.kind) for x in v])
        return out

    def extensions(self, ext: Mapping, out: dict) -> dict:
        for k, v in ext.items():
            out[self.key(k)] = self.raw(v)
        return out

    def raw(self, value: Any) -> Any:
        if isinstance(value, Mapping):
            out = {}
            for k, v in value.items():
                if k == "@type":
                    out[k] = self.many([self.iri(t) if isinstance(t, str) else t for t in v])
                else:
                    out[self.key(k)] = self.raw(v)
            return out
        if isinstance(value, tuple):
            return [self.raw(v) for v in value]
        return value

    def item(self, v: Any, kind: str) -> Any:
        if kind == "iri":
            return self.iri(v)
        if kind == "text":
            return v
        if kind == "timestamp":
            return v.lexical if self.pretty else v.canonical
        return getattr(self, f"write_{kind}")(v)

    def _short(self, obj: Any, rest_empty: bool) -> Any:
        """Bare-string form of a resource-like object when that reads back identically."""
        if not (self.pretty and rest_empty):
            return None
        if obj.id is not None and not obj.types and obj.id not in self.registry:
            return obj.id
        if obj.id is None and len(obj.types) == 1 and obj.types[0] in self.registry:
            return self.iri(obj.types[0])
        return None

    def write_duration(self, d: Duration) -> Any:
        if not d.types and not d.extensions:
            return d.value
        out = self.fields(d, DURATION_FIELDS)
        return self.extensions(d.extensions, out)

    def write_resource(self, r: Resource) -> Any:
        short = self._short(r, not r.props)
        if short is not None:
            return short
        out = self.fields(r, HEAD_FIELDS)
        return self.extensions(r.props, out)

    def write_entity(self, e: Entity) -> Any:
        if self.pretty and e.id is not None and e == Entity(id=e.id):
            return self.iri(e.id)
        return self.extensions(e.extensions, self.fields(e, ENTITY_FIELDS))

    def write_personal_data(self, p: PersonalDataItem) -> Any:
        if self.pretty and len(p.data_types) == 1 and p == PersonalDataItem(data_types=p.data_types):
            return self.iri(p.data_types[0])
        return self.extensions(p.extensions, self.fields(p, PERSONAL_DATA_FIELDS))

    def write_condition(self, c: Condition) -> Any:
        short = self._short(c, not (c.locations or c.durations or c.extensions))
        if short is not None:
            return short
        return self.extensions(c.extensions, self.fields(c, CONDITION_FIELDS))

    def write_notice(self, n: Notice) -> Any:
        short = self._short(n, n.date is None and not n.language and n.coverage is None and not n.extensions)
        if short is not None:
            return short
        return self.extensions(n.extensions, self.fields(n, NOTICE_FIELDS))

    def write_process(self, p: Process) -> Any:
        return self.extensions(p.extensions, self.fields(p, HEAD_FIELDS + PROCESS_FIELDS))

    def write_event(self, ev: ConsentEvent) -> Any:
        out: dict = {}
        if ev.id is not None:
            out["@id"] = self.iri(ev.id)
        types = [*ev.status, *ev.consent_types, *ev.other_types]
        if types:
            out["@type"] = self.many([self.iri(t) for t in types])
        self.fields(ev, EVENT_FIELDS[1:], out)
        return self.extensions(ev.extensions, out)

    def write_manifest(self, m: RedactionManifest) -> Any:
        return self.fields(m, MANIFEST_FIELDS)

    def write_record(self, r: ConsentRecord, top: bool = False) -> dict:
        out: dict = {}
        if top and self.pretty:
            out["@context"] = r.context if r.context is not None else PINNED_CONTEXT_IRI
        # shared defaults are written inline on the record node, so they have
        # nowhere to keep an id, types or extensions of their own
        if r.shared.id is not None or r.shared.types or r.shared.extensions:
            raise UnserializableValue("record-level process defaults cannot carry an id, types or extensions")
        self.fields(r, RECORD_FIELDS[:6], out)  # head, ids, schema version, subject, parties
        self.fields(r.shared, PROCESS_FIELDS, out)
        self.fields(r, RECORD_FIELDS[6:], out)
        return self.extensions(r.extensions, out)

    def write_receipt(self, w: ConsentReceipt) -> dict:
        out: dict = {}
        if self.pretty:
            out["@context"] = w.context if w.context is not None else PINNED_CONTEXT_IRI
        self.fields(w, RECEIPT_FIELDS, out)
        return self.extensions(w.extensions, out)


def _check_references(value: ConsentRecord | ConsentReceipt, registry: Registry) -> None:
    records = value.records if isinstance(value, ConsentReceipt) else (value,)
    for i, record in enumerate(records):
        problems = reference_problems(record, registry)
        if problems:
            path, ref, exc = problems[0]
            where = f"records[{i}].{path}" if isinstance(value, ConsentReceipt) else path
            raise UnserializableValue(f"{where}: {exc}")


def to_tree(value: ConsentRecord | ConsentReceipt, mode: str = PRETTY, registry: Registry | None = None) -> dict:
    reg = registry or default_registry()
    _check_references(value, reg)
    writer = _Writer(mode, reg)
    if isinstance(value, ConsentReceipt):
        return writer.write_receipt(value)
    if isinstance(value, ConsentRecord):
        return writer.write_record(value, top=True)
    raise UnserializableValue(f"cannot serialize {type(value).__name__}")


def canonical_json(tree: Any) -> bytes:
    try:
        text = json.dumps(tree, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)
    except (TypeError, ValueError) as exc:
        raise UnserializableValue(str(exc)) from None
    return text.encode("utf-8")


def serialize(value: ConsentRecord | ConsentReceipt, mode: str = PRETTY, registry: Registry | None = None) -> bytes:
    tree = to_tree(value, mode, registry)
    if mode == CANONICAL:
        return canonical_json(tree)
    try:
        return (json.dumps(tree, indent=2, ensure_ascii=False, allow_nan=False) + "\n").encode("utf-8")
    except (TypeError, ValueError) as exc:
        raise UnserializableValue(str(exc)) from None


def canonical_bytes(value: ConsentRecord | ConsentReceipt, registry: Registry | None = None) -> bytes:
    return serialize(value, CANONICAL, registry)


def dump(value: ConsentRecord | ConsentReceipt, path: str | Path, mode: str = PRETTY) -> None:
    Path(path).write_bytes(serialize(value, mode))


def template_path(name: str) -> Path:
    from importlib import resources
    return Path(str(resources.files("consentkit").joinpath("data", "templates", name)))


TEMPLATES = {
    "example-record": "example_record.json",
    "example-receipt": "example_receipt.json",
}


def load_template(name: str) -> ConsentRecord | ConsentReceipt:
    """Load a shipped template by short name ("example-record") or file name."""
    return load(template_path(TEMPLATES.get(name, name)))


__all__ = [
    "PRETTY", "CANONICAL", "parse", "parse_record", "parse_receipt", "serialize", "canonical_bytes",
    "to_tree", "load", "dump", "loads", "document_kind", "load_template", "DocumentError",
]
