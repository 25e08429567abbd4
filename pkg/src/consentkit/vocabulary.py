"""Controlled terms, taxonomies and CURIE handling.

The registry is a curated slice of DPV and its GDPR, personal-data and
location extensions, shipped as ``data/registry.txt``. Terms are identified
by their expanded IRI everywhere inside the toolkit; CURIEs only appear at
the document boundary.
"""

from __future__ import annotations

import csv
import graphlib
from collections.abc import Iterator, Mapping
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .errors import MalformedCurie, RegistryError, UnknownPrefix, UnknownTerm

PINNED_CONTEXT_IRI = "https://w3id.org/dpv/schema/dpv-27560.jsonld"
PROFILE_NAMESPACE = "https://w3id.org/dpv/schema/dpv-27560#"
# sha-256 of data/context.jsonld as released; a mismatch means the shipped
# context was edited without a version bump
PINNED_CONTEXT_SHA256 = "224f8677c4c1779532360cfdd0b32330252992aa5e8e01c5509ff98e000240bc"

# Schemes that mark a string as an absolute IRI rather than a CURIE when the
# prefix is not declared. Anything after "//" is also treated as absolute.
_IRI_SCHEMES = frozenset({"urn", "mailto", "tag", "did", "data", "http", "https", "file"})


def _data_path(*parts: str):
    return resources.files("consentkit").joinpath("data", *parts)


class PrefixTable(Mapping):
    """Immutable prefix -> namespace map."""

    def __init__(self, entries: Mapping[str, str]):
        seen: dict[str, str] = {}
        for prefix, ns in entries.items():
            if ns in seen:
                raise RegistryError(f"prefixes {seen[ns]!r} and {prefix!r} share namespace {ns}")
            seen[ns] = prefix
        self._entries = dict(entries)
        # longest namespace first so compaction prefers the most specific match
        self._by_length = sorted(self._entries.items(), key=lambda kv: -len(kv[1]))

    def __getitem__(self, prefix: str) -> str:
        return self._entries[prefix]

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __repr__(self) -> str:
        return f"PrefixTable({self._entries!r})"

    def namespaces(self) -> tuple[str, ...]:
        return tuple(self._entries.values())

    def extended(self, extra: Mapping[str, str]) -> "PrefixTable":
        merged = dict(self._entries)
        merged.update(extra)
        return PrefixTable(merged)

    def expand(self, curie: str) -> str:
        return expand(curie, self)

    def compact(self, iri: str) -> str:
        return compact(iri, self)


def expand(curie: str, table: PrefixTable | None = None) -> str:
    """Expand ``prefix:local`` to an absolute IRI. Absolute IRIs pass through."""
    if table is None:
        table = default_registry().prefixes
    if not isinstance(curie, str):
        raise MalformedCurie(f"expected text, got {type(curie).__name__}")
    prefix, sep, local = curie.partition(":")
    if not sep:
        raise MalformedCurie(f"{curie!r} has no prefix separator")
    if prefix in table:
        if not local or ":" in local:
            raise MalformedCurie(f"{curie!r} has an empty or ambiguous local name")
        return table[prefix] + local
    if local.startswith("//") or prefix.lower() in _IRI_SCHEMES:
        return curie
    if not prefix or not local:
        raise MalformedCurie(f"{curie!r} has an empty prefix or local name")
    raise UnknownPrefix(f"prefix {prefix!r} is not registered")


def compact(iri: str, table: PrefixTable | None = None) -> str:
    """Shorten ``iri`` with the longest matching namespace, if any."""
    if table is None:
        table = default_registry().prefixes
    for prefix, ns in table._by_length:
        if iri.startswith(ns):
            local = iri[len(ns):]
            if local and ":" not in local:
                return f"{prefix}:{local}"
    return iri


def to_iri(value: str, table: PrefixTable | None = None) -> str:
    """Lenient expansion used for document values.

    Strings that are not CURIEs over a known prefix are kept verbatim: a
    string such as ``ex:Acme`` reads as an IRI in the ``ex`` scheme and a
    bare token such as ``0760c9ba`` as a local identifier.
    """
    try:
        return expand(value, table)
    except (UnknownPrefix, MalformedCurie):
        return value


@dataclass(frozen=True)
class Term:
    iri: str
    curie: str
    taxonomy: str
    parents: frozenset[str]

    def __str__(self) -> str:
        return self.curie


class Registry:
    """Loaded term registry. Immutable once built."""

    def __init__(self, prefixes: PrefixTable, terms: Mapping[str, Term], version: str = ""):
        self.prefixes = prefixes
        self.version = version
        self._terms = dict(terms)
        for term in self._terms.values():
            for parent in term.parents:
                if parent not in self._terms:
                    raise RegistryError(f"{term.curie}: parent {compact(parent, prefixes)} is not registered")
            if term.taxonomy not in self._terms:
                raise RegistryError(f"{term.curie}: taxonomy root {term.taxonomy} is not registered")
        sorter = graphlib.TopologicalSorter({iri: t.parents for iri, t in self._terms.items()})
        try:
            self._order = tuple(sorter.static_order())
        except graphlib.CycleError as exc:
            raise RegistryError(f"subtype cycle: {exc.args[1]}") from None
        ancestors: dict[str, frozenset[str]] = {}
        for iri in self._order:
            acc = {iri}
            for parent in self._terms[iri].parents:
                acc |= ancestors[parent]
            ancestors[iri] = frozenset(acc)
        self._ancestors = ancestors

    def __iter__(self) -> Iterator[Term]:
        return iter(self._terms.values())

    def __len__(self) -> int:
        return len(self._terms)

    def __contains__(self, ref: object) -> bool:
        return isinstance(ref, str) and self.get(ref) is not None

    def topological_order(self) -> tuple[str, ...]:
        return self._order

    def _iri(self, ref: str | Term) -> str:
        if isinstance(ref, Term):
            return ref.iri
        return to_iri(ref, self.prefixes)

    def get(self, ref: str | Term) -> Term | None:
        return self._terms.get(self._iri(ref))

    def term(self, ref: str | Term) -> Term:
        found = self.get(ref)
        if found is None:
            raise UnknownTerm(f"{ref} is not a registered term")
        return found

    def ancestors(self, ref: str | Term) -> frozenset[str]:
        return self._ancestors[self.term(ref).iri]

    def is_in_taxonomy(self, term: str | Term, root: str | Term) -> bool:
        return self.term(root).iri in self.ancestors(term)

    def is_a(self, value: str, *roots: str) -> bool:
        """Like is_in_taxonomy but false, not an error, for unknown values."""
        found = self._terms.get(value)
        if found is None:
            return False
        anc = self._ancestors[found.iri]
        return any(r in anc for r in roots)

    def in_namespace(self, iri: str) -> bool:
        """True when ``iri`` lives under one of the registry namespaces."""
        return any(iri.startswith(ns) and len(iri) > len(ns) for ns in self.prefixes.namespaces())

    def expand(self, curie: str) -> str:
        return expand(curie, self.prefixes)

    def compact(self, iri: str) -> str:
        return compact(iri, self.prefixes)


def parse_registry(text: str) -> Registry:
    prefixes: dict[str, str] = {}
    rows: list[tuple[int, str, str, str]] = []
    version = ""
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("# registry-version"):
            version = line.split()[-1]
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "@prefix":
            if len(parts) != 3:
                raise RegistryError(f"line {lineno}: expected '@prefix <prefix> <namespace>'")
            prefixes[parts[1]] = parts[2]
            continue
        if len(parts) != 3:
            raise RegistryError(f"line {lineno}: expected '<curie> <root> <parents>'")
        rows.append((lineno, *parts))
    table = PrefixTable(prefixes)
    terms: dict[str, Term] = {}
    for lineno, curie, root, parents in rows:
        try:
            iri = expand(curie, table)
            parent_iris = frozenset() if parents == "-" else frozenset(expand(p, table) for p in parents.split(","))
            term = Term(iri, curie, expand(root, table), parent_iris)
        except (UnknownPrefix, MalformedCurie) as exc:
            raise RegistryError(f"line {lineno}: {exc}") from None
        if iri in terms:
            raise RegistryError(f"line {lineno}: {curie} registered twice")
        terms[iri] = term
    return Registry(table, terms, version)


def load_registry(path: str | Path | None = None) -> Registry:
    if path is None:
        return default_registry()
    return parse_registry(Path(path).read_text(encoding="utf-8"))


@lru_cache(maxsize=1)
def default_registry() -> Registry:
    return parse_registry(_data_path("registry.txt").read_text(encoding="utf-8"))


def is_in_taxonomy(term: str | Term, taxonomy_root: str | Term, registry: Registry | None = None) -> bool:
    return (registry or default_registry()).is_in_taxonomy(term, taxonomy_root)


def pinned_context_text() -> str:
    return _data_path("context.jsonld").read_text(encoding="utf-8")


# -- terminology glossary -----------------------------------------------------

@dataclass(frozen=True)
class GlossaryEntry:
    iso29100_section: str
    iso29100_term: str
    gdpr_article: str
    gdpr_term: str
    iso_concept: str
    gdpr_concept: str


@lru_cache(maxsize=1)
def glossary() -> tuple[GlossaryEntry, ...]:
    text = _data_path("glossary.tsv").read_text(encoding="utf-8")
    reader = csv.DictReader(text.splitlines(), delimiter="\t")
    return tuple(GlossaryEntry(**row) for row in reader)


@lru_cache(maxsize=1)
def _role_aliases() -> dict[str, str]:
    reg = default_registry()
    aliases: dict[str, str] = {}
    role_root = reg.expand("dpv:Entity")
    for term in reg:
        if reg.is_a(term.iri, role_root):
            local = term.curie.split(":", 1)[1]
            aliases[local.lower()] = term.iri
    for entry in glossary():
        for name, concept in ((entry.iso29100_term, entry.iso_concept), (entry.gdpr_term, entry.gdpr_concept)):
            iri = reg.expand(concept)
            if reg.is_a(iri, role_root):
                aliases[name.lower()] = iri
    # short forms used on the command line
    for short, curie in (("controller", "dpv:DataController"), ("processor", "dpv:DataProcessor"),
                         ("subject", "dpv:DataSubject"), ("authority", "dpv:Authority")):
        aliases.setdefault(short, reg.expand(curie))
    return aliases


def resolve_role(name: str) -> str:
    """Map a role name in either terminology (e.g. "PII Principal") to its DPV IRI."""
    reg = default_registry()
    key = name.strip().lower()
    aliases = _role_aliases()
    if key in aliases:
        return aliases[key]
    term = reg.get(name)
    if term is not None and reg.is_a(term.iri, reg.expand("dpv:Entity")):
        return term.iri
    raise UnknownTerm(f"{name!r} is not a known party role")
