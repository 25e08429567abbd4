"""Seeded generators of valid consent records and receipts.

Everything is drawn from a ``random.Random`` passed in by the caller, so a
seed fully determines the output.
"""

from __future__ import annotations

import datetime as dt
import random
import uuid

from consentkit.lifecycle import ConsentState, STATE_TERMS, default_transitions
from consentkit.model import (
    Condition, ConsentEvent, ConsentRecord, Duration, Entity, FrozenMap, Notice, PersonalDataItem,
    Process, Resource, Timestamp, INHERITED_FIELDS,
)
from consentkit.receipts import issue_receipt
from consentkit.vocabulary import PROFILE_NAMESPACE

DPV = "https://w3id.org/dpv#"
PD = "https://w3id.org/dpv/pd#"
LOC = "https://w3id.org/dpv/loc#"
GDPR = "https://w3id.org/dpv/legal/eu/gdpr#"
SCHEMA = "https://schema.org/"
DCT = "http://purl.org/dc/terms/"
EX_EXT = "https://example.org/ext#"

PURPOSES = [DPV + t for t in ("ServiceProvision", "PaymentManagement", "ServiceRegistration", "IdentityVerification",
                              "FraudPreventionAndDetection", "DirectMarketing", "ResearchAndDevelopment", "CustomerCare")]
DATA_TYPES = [PD + t for t in ("Name", "OfficialID", "EmailAddress", "TelephoneNumber", "PhysicalAddress",
                               "PaymentCardNumber", "Age", "Health", "Location")]
NECESSITY = [DPV + t for t in ("Required", "Optional", "NotRequired")]
SENSITIVITY = [DPV + "SensitivePersonalData", DPV + "SpecialCategoryPersonalData"]
LOCATIONS = [LOC + c for c in ("IE", "FR", "DE", "NL", "SE", "NO", "US", "EU")] + [DPV + "WithinDevice", DPV + "CloudLocation"]
OPERATIONS = [DPV + t for t in ("Collect", "Store", "Use", "Transfer", "Erase")]
BASE_LEGAL = [DPV + "Contract", DPV + "LegitimateInterest", GDPR + "A6-1-b", GDPR + "A6-1-f", GDPR + "A6-1-a"]
GDPR_LEGAL = [GDPR + "A6-1-a", GDPR + "A9-2-a", GDPR + "A6-1-a-explicit-consent", GDPR + "A6-1-a-non-explicit-consent"]
CONSENT_TYPES = [DPV + t for t in ("ExpressedConsent", "ExplicitlyExpressedConsent", "ImpliedConsent", "InformedConsent")]
RIGHTS = [GDPR + a for a in ("A15", "A16", "A17", "A20", "A21")]
WITHDRAWING = [DPV + "WithdrawingPermission", DPV + "OptingOutFromActivity", DPV + "WithdrawingFromActivity"]
SUBJECT_TYPES = [DPV + t for t in ("Consumer", "Customer", "Employee", "Child", "DataSubject")]
PERIODS = ["P6M", "P1Y", "P30D", "P2Y6M", "PT12H", "P1M"]
LANGUAGES = ["en", "EN", "de-DE", "fr", "ga-IE", "sv"]
METHODS = ["Interaction in App", "Web form", "Paper form", "Verbal"]
SERVICES = ["Register for Event X", "Newsletter", "Loyalty Programme", "Online Shop"]

CONTROLLERS = ["ex:Acme", "ex:Globex", "ex:Initech", "https://example.com/org/umbrella"]
PROCESSORS = ["ex:Beta", "ex:Hooli", "https://example.com/org/vandelay"]


def _pick(rng: random.Random, pool, lo: int = 1, hi: int = 2) -> tuple:
    k = rng.randint(lo, min(hi, len(pool)))
    return tuple(rng.sample(pool, k))


def _uuid(rng: random.Random) -> str:
    return str(uuid.UUID(int=rng.getrandbits(128), version=4))


def _timestamp(rng: random.Random, base: dt.datetime) -> Timestamp:
    """A timestamp at ``base`` written in one of several lexical styles."""
    style = rng.randrange(4)
    if style == 0 and base.hour == 0 and base.minute == 0 and base.second == 0:
        return Timestamp(base.date().isoformat())
    if style == 1:
        offset = dt.timezone(dt.timedelta(hours=rng.choice([-5, 1, 2, 9])))
        return Timestamp(base.astimezone(offset).isoformat())
    if style == 2:
        return Timestamp(base.strftime("%Y-%m-%dT%H:%M:%S+00:00"))
    return Timestamp(base.strftime("%Y-%m-%dT%H:%M:%SZ"))


def _personal_data(rng: random.Random, refs: list[str]) -> PersonalDataItem:
    return PersonalDataItem(
        data_types=_pick(rng, DATA_TYPES, 1, 2),
        identifiers=(f"PD-{rng.randrange(10**6):06d}",) if rng.random() < 0.3 else (),
        values=(f"user{rng.randrange(1000)}@example.org",) if rng.random() < 0.3 else (),
        necessity=(rng.choice(NECESSITY),) if rng.random() < 0.6 else (),
        sensitivity=(rng.choice(SENSITIVITY),) if rng.random() < 0.2 else (),
        sources=(rng.choice(refs),) if rng.random() < 0.4 else (),
    )


def _storage_condition(rng: random.Random) -> Condition:
    kind = rng.randrange(3)
    if kind == 0:
        return Condition(types=(DPV + "StorageLocation",), locations=_pick(rng, LOCATIONS, 1, 3))
    if kind == 1 and rng.random() < 0.3:
        return Condition(types=(DPV + "StorageDuration",),
                         durations=(Duration(value="Account Closure", types=(DPV + "UntilEventDuration",)),))
    label = "StorageDuration" if kind == 1 else "StorageDeletion"
    return Condition(types=(DPV + label,), durations=(Duration(value=rng.choice(PERIODS)),))


def _processing_condition(rng: random.Random) -> Condition:
    if rng.random() < 0.5:
        return Condition(types=(DPV + "ProcessingLocation",), locations=_pick(rng, LOCATIONS, 1, 2))
    return Condition(types=(DPV + "ProcessingDuration",), durations=(Duration(value=rng.choice(PERIODS)),))


def _notice(rng: random.Random, start: dt.datetime) -> Notice:
    return Notice(
        id=f"https://example.com/notices/{rng.randrange(10**8):08d}" if rng.random() < 0.5 else None,
        types=(DPV + "ConsentNotice",) if rng.random() < 0.8 else (DPV + "PrivacyNotice",),
        date=Timestamp(start.date().isoformat()) if rng.random() < 0.6 else None,
        language=_pick(rng, LANGUAGES, 1, 2),
        coverage=f"{start.date().isoformat()}/P12M" if rng.random() < 0.4 else None,
    )


def _fields(rng: random.Random, gdpr: bool, controllers, processors, refs, start) -> dict:
    """Values for every inherited process field; empty tuples for skipped optional ones."""
    involvement = [Resource(types=(rng.choice(WITHDRAWING),),
                            props=FrozenMap({DPV + "isExercisedAt": "https://example.com/manage-consent"}))]
    if rng.random() < 0.3:
        involvement.insert(0, Resource(types=(DPV + "ProvidingPermission",)))
    rights = [Resource(types=(DPV + "DataSubjectRight", r), props=FrozenMap({DCT + "title": f"Right {r[-3:]}"}))
              for r in _pick(rng, RIGHTS, 1, 2)]
    if gdpr or rng.random() < 0.5:
        rights.append(Resource(types=(DPV + "DataSubjectRight", GDPR + "A7-3"),
                               props=FrozenMap({DCT + "title": "Right to Withdraw Consent"})))
    values = {
        "purposes": _pick(rng, PURPOSES, 1, 2),
        "personal_data": tuple(_personal_data(rng, refs) for _ in range(rng.randint(1, 3))),
        "storage_conditions": tuple(_storage_condition(rng) for _ in range(rng.randint(1, 3))),
        "data_controllers": tuple(controllers),
        "recipients": _pick(rng, refs, 1, 3),
        "involvement_controls": tuple(involvement),
        "jurisdictions": _pick(rng, [LOC + "IE", LOC + "FR", LOC + "DE", LOC + "EU"], 1, 2),
        "rights": tuple(rights),
        "notices": (_notice(rng, start),),
        "legal_basis": _pick(rng, GDPR_LEGAL if gdpr else BASE_LEGAL, 1, 1),
        "processing_operations": _pick(rng, OPERATIONS, 1, 3),
        "data_sources": (rng.choice(refs),),
        "processing_conditions": (_processing_condition(rng),),
        "geographic_restrictions": (Resource(types=(DPV + "Permission",),
                                             props=FrozenMap({DPV + "hasLocation": rng.choice(LOCATIONS)})),),
        "data_processors": tuple(processors),
        "third_parties": (),
        "authorities": (),
        "applicable_law": (GDPR + "GDPR",),
        "services": (rng.choice(SERVICES),),
        "codes_of_conduct": (Resource(types=(DPV + "CodeOfConduct",),
                                      props=FrozenMap({SCHEMA + "url": "https://example.com/coc"})),),
        "impact_assessments": (Resource(types=(DPV + "DPIA",),
                                        props=FrozenMap({SCHEMA + "url": "https://example.com/DPIA"})),),
    }
    optional = {"processing_operations", "data_sources", "processing_conditions", "geographic_restrictions",
                "applicable_law", "services", "codes_of_conduct", "impact_assessments"}
    if not gdpr:
        optional.add("legal_basis")
    for name in sorted(optional):  # set order varies with PYTHONHASHSEED
        if rng.random() < 0.5:
            values[name] = ()
    return values


def _events(rng: random.Random, gdpr: bool, start: dt.datetime, actors: list[str]) -> tuple[ConsentEvent, ...]:
    table = default_transitions()
    state = ConsentState.Unknown
    when = start
    out = []
    for _ in range(rng.randint(1, 6)):
        targets = sorted(table.targets(state), key=lambda s: s.value)
        if not targets:
            break
        state = rng.choice(targets)
        when = when + dt.timedelta(days=rng.randint(0, 90), seconds=rng.randrange(86400))
        active = state in (ConsentState.Given, ConsentState.Reaffirmed)
        consent_types = _pick(rng, CONSENT_TYPES, 1, 1) if active and (gdpr or rng.random() < 0.5) else ()
        out.append(ConsentEvent(
            status=(STATE_TERMS[state],),
            consent_types=consent_types,
            time=(_timestamp(rng, when),),
            duration=(Duration(value=rng.choice(PERIODS)),) if active and rng.random() < 0.4 else (),
            actor=(rng.choice(actors),),
            method=(rng.choice(METHODS),) if rng.random() < 0.6 else (),
        ))
    return tuple(out)


def _party(rng: random.Random, ref: str) -> Entity:
    contacts = [Resource(types=(SCHEMA + "PostalAddress",),
                         props=FrozenMap({SCHEMA + "streetAddress": f"{rng.randint(1, 99)} Main Street"}))]
    if rng.random() < 0.7:
        contacts.append(Resource(types=(SCHEMA + "ContactPoint",),
                                 props=FrozenMap({SCHEMA + "email": f"privacy{rng.randrange(100)}@example.com"})))
    return Entity(id=ref, types=(DPV + "Organisation",) if rng.random() < 0.5 else (),
                  names=(f"Org {ref.rsplit(':', 1)[-1].rsplit('/', 1)[-1]}",),
                  identifiers=(f"REG-{rng.randrange(10**5):05d}",), contacts=tuple(contacts))


def random_record(rng: random.Random, gdpr: bool | None = None) -> ConsentRecord:
    """A record that passes its declared profile with no errors."""
    if gdpr is None:
        gdpr = rng.random() < 0.5
    rid = _uuid(rng)
    start = dt.datetime(2023, 1, 1, tzinfo=dt.timezone.utc) + dt.timedelta(days=rng.randrange(700))
    subject = Entity(id=f"subject-{rng.randrange(16**8):08x}", types=(rng.choice(SUBJECT_TYPES),))
    controllers = _pick(rng, CONTROLLERS, 1, 2)
    processors = _pick(rng, PROCESSORS, 0, 2)
    refs = list(controllers) + list(processors) + [DPV + "DataSubject"]
    values_for = lambda: _fields(rng, gdpr, controllers, processors, refs, start)  # noqa: E731

    n = rng.randint(1, 3)
    shared_values = values_for()
    # each field lives either at record level or on every process
    at_record = {name for name in INHERITED_FIELDS if rng.random() < 0.4}
    shared = Process(**{name: shared_values[name] for name in at_record})
    processes = []
    for _ in range(n):
        own = values_for()
        processes.append(Process(types=(DPV + "Process",),
                                 **{name: own[name] for name in INHERITED_FIELDS if name not in at_record}))
    parties = tuple(_party(rng, ref) for ref in controllers + processors if rng.random() < 0.5)
    actors = [DPV + "DataSubject", subject.id, controllers[0]]
    record = ConsentRecord(
        id=f"https://example.com/{rid}" if rng.random() < 0.7 else None,
        types=(DPV + "ConsentRecord",),
        schema_version=(PROFILE_NAMESPACE + ("record-eu-gdpr" if gdpr else "record"),),
        record_ids=(rid,),
        data_subject=(subject,),
        parties=parties,
        shared=shared,
        processes=tuple(processes),
        events=_events(rng, gdpr, start, actors),
        extensions=FrozenMap({EX_EXT + "channel": rng.choice(["web", "app"])}) if rng.random() < 0.1 else FrozenMap(),
    )
    return record


def random_receipt(rng: random.Random):
    records = [random_record(rng) for _ in range(rng.randint(1, 2))]
    mode = rng.choice(["full", "mandatory-only"])
    created = dt.datetime(2024, 1, 1, tzinfo=dt.timezone.utc) + dt.timedelta(seconds=rng.randrange(10**8))
    return issue_receipt(records, f"receipt-{rng.randrange(16**10):010x}", rng.choice(CONTROLLERS),
                         DPV + "DataSubject", mode, clock=lambda: created,
                         iri=f"https://example.com/receipts/{rng.randrange(10**6)}" if rng.random() < 0.5 else None)
