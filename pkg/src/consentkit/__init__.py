"""Consent records and receipts in the DPV JSON-LD form.

Parse and serialize documents, validate them against the record and
receipt profiles, track consent state, issue receipts, hash and sign,
and keep an append-only store.
"""

__version__ = "0.1.0"

from .errors import ConsentKitError
from .integrity import Digest, SignatureEnvelope, digest, redact, sign, verify
from .lifecycle import ConsentState, append_event, current_status, expiry, make_event
from .model import ConsentEvent, ConsentReceipt, ConsentRecord, Timestamp
from .profiles import ValidationReport, crosswalk, gdpr_requirements, get_profile, validate
from .receipts import issue_receipt, receipt_completeness
from .serialization import canonical_bytes, load, load_template, parse, serialize
from .store import ConsentStore, rebuild_index
from .vocabulary import compact, default_registry, expand, is_in_taxonomy

__all__ = [
    "ConsentKitError", "Digest", "SignatureEnvelope", "digest", "redact", "sign", "verify",
    "ConsentState", "append_event", "current_status", "expiry", "make_event",
    "ConsentEvent", "ConsentReceipt", "ConsentRecord", "Timestamp",
    "ValidationReport", "crosswalk", "gdpr_requirements", "get_profile", "validate",
    "issue_receipt", "receipt_completeness",
    "canonical_bytes", "load", "load_template", "parse", "serialize",
    "ConsentStore", "rebuild_index",
    "compact", "default_registry", "expand", "is_in_taxonomy",
]
