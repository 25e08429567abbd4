import hashlib

import pytest

from consentkit.errors import MalformedCurie, RegistryError, UnknownPrefix, UnknownTerm
from consentkit.vocabulary import (
    PINNED_CONTEXT_SHA256, PROFILE_NAMESPACE, PrefixTable, compact, default_registry, expand, glossary,
    is_in_taxonomy, parse_registry, pinned_context_text, resolve_role, to_iri,
)

DPV = "https://w3id.org/dpv#"


def test_expand_registered_prefix():
    assert expand("dpv:ConsentRecord") == DPV + "ConsentRecord"
    assert expand("dpv-27560:record") == PROFILE_NAMESPACE + "record"
    assert expand("eu-gdpr:A6-1-a") == "https://w3id.org/dpv/legal/eu/gdpr#A6-1-a"


def test_absolute_iri_passes_through():
    assert expand("https://example.com/x") == "https://example.com/x"
    assert expand("urn:uuid:1234") == "urn:uuid:1234"


@pytest.mark.parametrize("bad", ["ConsentRecord", "dpv:", ":Local", ""])
def test_malformed_curies(bad):
    with pytest.raises(MalformedCurie):
        expand(bad)


def test_unknown_prefix():
    with pytest.raises(UnknownPrefix):
        expand("nope:Thing")


def test_compact_longest_match():
    # the profile namespace is a longer match than any dpv namespace
    assert compact(PROFILE_NAMESPACE + "record") == "dpv-27560:record"
    assert compact("https://w3id.org/dpv/pd#EmailAddress") == "pd:EmailAddress"
    assert compact("https://elsewhere.example/x") == "https://elsewhere.example/x"


def test_round_trip_over_whole_registry():
    reg = default_registry()
    assert len(reg) > 100
    for term in reg:
        assert expand(compact(term.iri)) == term.iri
        assert compact(expand(term.curie)) == term.curie


def test_lenient_to_iri_keeps_unknown_forms():
    assert to_iri("dpv:Consumer") == DPV + "Consumer"
    assert to_iri("ex:Acme") == "ex:Acme"
    assert to_iri("0760c9ba") == "0760c9ba"


def test_prefix_table_rejects_shared_namespace():
    with pytest.raises(RegistryError):
        PrefixTable({"a": "https://x.example/#", "b": "https://x.example/#"})


def test_required_prefixes_present():
    prefixes = default_registry().prefixes
    for p in ("dpv", "eu-gdpr", "pd", "loc", "dct", "schema", "rdf", "dpv-27560"):
        assert p in prefixes
    assert prefixes["dpv-27560"] == PROFILE_NAMESPACE


def test_taxonomy_membership():
    assert is_in_taxonomy("dpv:ConsentGiven", "dpv:ConsentStatus")
    assert is_in_taxonomy("dpv:ConsentStatus", "dpv:ConsentStatus")
    assert not is_in_taxonomy("dpv:PaymentManagement", "dpv:ConsentStatus")
    with pytest.raises(UnknownTerm):
        is_in_taxonomy("dpv:NotATerm", "dpv:ConsentStatus")


def test_consent_subtypes():
    for basis in ("eu-gdpr:A6-1-a", "eu-gdpr:A9-2-a"):
        assert is_in_taxonomy(basis, "dpv:Consent")
    for kind in ("dpv:ExpressedConsent", "dpv:ExplicitlyExpressedConsent"):
        assert is_in_taxonomy(kind, "dpv:Consent")


def test_is_a_never_raises_on_unknown():
    reg = default_registry()
    assert not reg.is_a("ex:Whatever", DPV + "Entity")
    assert reg.is_a(DPV + "Consumer", DPV + "DataSubject")


def test_registry_rejects_cycles():
    text = "\n".join([
        "@prefix a https://a.example/#",
        "a:X a:X a:Y",
        "a:Y a:X a:X",
    ])
    with pytest.raises(RegistryError):
        parse_registry(text)


def test_fixture_terms_resolve(example_record, example_receipt):
    reg = default_registry()
    terms = set()
    for record in (example_record, example_receipt.records[0]):
        for view in (record.shared, *record.processes):
            terms.update(view.purposes, view.jurisdictions, view.applicable_law, view.legal_basis)
            for item in view.personal_data:
                terms.update(item.data_types, item.necessity)
            for cond in view.storage_conditions:
                terms.update(cond.types)
                terms.update(loc for loc in cond.locations)
        for event in record.events:
            terms.update(event.status, event.consent_types)
    assert terms
    for t in terms:
        assert t in reg, t


def test_pinned_context_digest():
    assert hashlib.sha256(pinned_context_text().encode("utf-8")).hexdigest() == PINNED_CONTEXT_SHA256


def test_glossary_role_alias():
    assert resolve_role("PII Principal") == DPV + "DataSubject"
    assert resolve_role("PII Controller") == DPV + "DataController"
    assert len(glossary()) == 8
