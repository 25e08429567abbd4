"""Issue consent receipts from records and check their completeness."""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import replace

from .errors import EmptyRecordSet, InvalidSourceRecord
from .model import ConsentReceipt, ConsentRecord, Process, Timestamp
from .profiles import (
    _NOTICE, _PERSONAL_DATA, Profile, ProfileSet, ValidationReport, declared_profile,
    default_profiles, validate,
)
from .vocabulary import PROFILE_NAMESPACE, default_registry, to_iri

FULL = "full"
MANDATORY_ONLY = "mandatory-only"

RECORD_GDPR = PROFILE_NAMESPACE + "record-eu-gdpr"


def _lineage(profile: Profile, profiles: ProfileSet) -> list[str]:
    chain = [profile.id]
    while profile.base is not None:
        profile = profiles[profile.base]
        chain.append(profile.id)
    return chain


def receipt_profile_for(records: Sequence[ConsentRecord], profiles: ProfileSet | None = None) -> str:
    """GDPR receipt profile only when every record is GDPR-profiled."""
    profiles = profiles or default_profiles()
    gdpr = all(RECORD_GDPR in _lineage(declared_profile(r, profiles), profiles) for r in records)
    return PROFILE_NAMESPACE + ("receipt-eu-gdpr" if gdpr else "receipt")


def _optional(profile: Profile, prefix: str) -> list[str]:
    """Field names under ``prefix`` whose unconditional minimum is 0."""
    names = []
    for path in profile.declared_paths():
        if path.startswith(prefix) and "." not in path[len(prefix):] and profile.min_for(path) == 0:
            names.append(path[len(prefix):])
    return names


def _cleared(obj, attrs: list[str]):
    changes = {}
    for attr in attrs:
        current = getattr(obj, attr)
        changes[attr] = None if current is None or not isinstance(current, tuple) else ()
    return replace(obj, **changes) if changes else obj


def mandatory_view(record: ConsentRecord, profile: Profile) -> ConsentRecord:
    """Copy of ``record`` without the processing content ``profile`` declares optional.

    Only the processing section is pruned. Party details and event fields
    stay as they are, so a receipt still shows how consent was expressed.
    """
    process_attrs = _optional(profile, "processing.")
    item_attrs = [_PERSONAL_DATA[n] for n in _optional(profile, "processing.personal_data.")]
    notice_attrs = [_NOTICE[n] for n in _optional(profile, "processing.notices.")]

    def strip_process(proc: Process) -> Process:
        proc = _cleared(proc, process_attrs)
        items = tuple(_cleared(i, item_attrs) for i in proc.personal_data)
        notices = tuple(_cleared(n, notice_attrs) for n in proc.notices)
        return replace(proc, personal_data=items, notices=notices)

    return replace(
        record,
        shared=strip_process(record.shared),
        processes=tuple(strip_process(p) for p in record.processes),
    )


def issue_receipt(
    records: Sequence[ConsentRecord],
    receipt_id: str,
    publisher: str | None = None,
    recipient: str | None = None,
    mode: str = FULL,
    *,
    clock: Callable[[], object] | None = None,
    iri: str | None = None,
    profiles: ProfileSet | None = None,
) -> ConsentReceipt:
    """Wrap copies of ``records`` in a receipt.

    ``created`` is taken from ``clock`` only; without a clock the receipt
    carries no creation time.
    """
    if mode not in (FULL, MANDATORY_ONLY):
        raise ValueError(f"unknown receipt mode {mode!r}")
    records = tuple(records)
    if not records:
        raise EmptyRecordSet("a receipt needs at least one consent record")
    profiles = profiles or default_profiles()
    embedded = []
    for i, record in enumerate(records):
        profile = declared_profile(record, profiles)
        report = validate(record, profile.id, profiles)
        if not report.passed:
            raise InvalidSourceRecord(f"record {i} ({record.primary_id}) fails {profile.shortname}", report)
        embedded.append(mandatory_view(record, profile) if mode == MANDATORY_ONLY else record)
    prefixes = default_registry().prefixes
    return ConsentReceipt(
        id=to_iri(iri, prefixes) if iri else None,
        types=(to_iri("dpv:ConsentReceipt", prefixes),),
        schema_version=(receipt_profile_for(records, profiles),),
        receipt_ids=(receipt_id,),
        records=tuple(embedded),
        created=Timestamp.of(clock()) if clock is not None else None,
        publisher=to_iri(publisher, prefixes) if publisher else None,
        recipient=to_iri(recipient, prefixes) if recipient else None,
    )


def receipt_completeness(receipt: ConsentReceipt, profiles: ProfileSet | None = None) -> ValidationReport:
    """Receipt metadata checks plus the mandatory checks on every embedded record."""
    profiles = profiles or default_profiles()
    return validate(receipt, declared_profile(receipt, profiles).id, profiles)
