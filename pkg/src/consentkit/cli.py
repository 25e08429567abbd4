"""``consentkit`` command line.

Exit codes: 0 success, 1 validation errors, 2 usage error, 3 I/O or
integrity failure.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import os
import sys
import uuid
import warnings
from dataclasses import replace
from pathlib import Path

from . import __version__
from .errors import (
    BadKey, ConsentKitError, CorruptDocument, DocumentError, EmptyRecordSet, IdConflict, IllegalTransition,
    InvalidSourceRecord, IoFailure, NonMonotonicTime, TypeMismatch, UnknownProfile, UnserializableValue,
    ValidationFailed,
)
from .integrity import (
    digest, envelope_path, generate_key, load_private_key, load_public_key, read_envelope, save_private_key,
    save_public_key, sign, verify, write_envelope,
)
from .lifecycle import ConsentState, append_event, make_event
from .model import ConsentReceipt, ConsentRecord, Timestamp, process_views
from .profiles import declared_profile, gdpr_requirements, validate
from .receipts import FULL, MANDATORY_ONLY, issue_receipt
from .serialization import TEMPLATES, load, load_template, serialize
from .store import ConsentStore
from .vocabulary import compact, default_registry, to_iri

EXIT_OK, EXIT_INVALID, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
STORE_ENV = "CONSENT_STORE"


class Failure(Exception):
    def __init__(self, code: int, message: str, payload: dict | None = None):
        super().__init__(message)
        self.code = code
        self.payload = payload


# -- helpers ------------------------------------------------------------------------

def _emit(args, text: str | None = None, payload: dict | None = None) -> None:
    if args.format == "json" and payload is not None:
        sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n")
    elif text:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _now(args) -> Timestamp:
    if args.now:
        try:
            return Timestamp.of(args.now)
        except ValueError as exc:
            raise Failure(EXIT_USAGE, f"--now: {exc}") from None
    return Timestamp.of(dt.datetime.now(dt.timezone.utc))


def _load(path: str) -> ConsentRecord | ConsentReceipt:
    try:
        return load(path)
    except OSError as exc:
        raise Failure(EXIT_IO, f"cannot read {path}: {exc.strerror or exc}") from None
    except DocumentError as exc:
        raise Failure(EXIT_INVALID, f"{path}: {exc}") from None


def _load_record(path: str) -> ConsentRecord:
    value = _load(path)
    if not isinstance(value, ConsentRecord):
        raise Failure(EXIT_INVALID, f"{path} is a receipt, not a consent record")
    return value


def _write_doc(args, value, out: str | None) -> None:
    data = serialize(value)
    if out:
        try:
            Path(out).write_bytes(data)
        except OSError as exc:
            raise Failure(EXIT_IO, f"cannot write {out}: {exc.strerror}") from None
        _emit(args, f"wrote {out}", {"written": out, "id": value.primary_id})
    else:
        sys.stdout.write(data.decode("utf-8") + "\n")


def _store_root(args) -> str:
    root = getattr(args, "store", None) or os.environ.get(STORE_ENV)
    if not root:
        raise Failure(EXIT_USAGE, f"no store given and {STORE_ENV} is not set")
    return root


def _open_store(args, create: bool) -> ConsentStore:
    root = _store_root(args)
    if not create and not Path(root).is_dir():
        raise Failure(EXIT_IO, f"store root {root} does not exist")
    try:
        return ConsentStore(root, create=create)
    except IoFailure as exc:
        raise Failure(EXIT_IO, str(exc)) from None


def _report_text(report) -> str:
    head = f"{'passed' if report.passed else 'failed'}: {compact(report.profile)} " \
           f"({len(report.errors)} errors, {len(report.warnings)} warnings)"
    lines = [head]
    for f in report.findings:
        refs = f" [GDPR {', '.join(f.gdpr_refs)}]" if f.gdpr_refs else ""
        lines.append(f"  {f.severity}: {f.path}: {f.message}{refs}")
    return "\n".join(lines)


# -- subcommands ----------------------------------------------------------------------

def cmd_validate(args) -> int:
    value = _load(args.file)
    try:
        profile = args.profile or declared_profile(value).id
        report = validate(value, profile)
    except UnknownProfile as exc:
        raise Failure(EXIT_USAGE, str(exc)) from None
    except TypeMismatch as exc:
        raise Failure(EXIT_INVALID, f"TypeMismatch: {exc}",
                      {"passed": False, "error": "TypeMismatch", "message": str(exc)}) from None
    report_dict = report.to_dict()
    _emit(args, _report_text(report), report_dict)
    return EXIT_OK if report.passed else EXIT_INVALID


def _fresh_id(template: ConsentRecord, now: Timestamp) -> str:
    # deterministic for a given template and clock
    seed = f"{digest(template).hex}|{now.canonical}"
    return str(uuid.uuid5(uuid.NAMESPACE_URL, "urn:x-consentkit:record:" + seed))


def cmd_record_new(args) -> int:
    if args.template in TEMPLATES:
        template = load_template(args.template)
    else:
        template = _load_record(args.template)
    now = _now(args)
    rid = args.id or _fresh_id(template, now)
    actor = args.actor
    if actor is None:
        controllers = [c for view in process_views(template) or [template.shared] for c in view.data_controllers]
        actor = controllers[0] if controllers else "dpv:DataController"
    prefixes = default_registry().prefixes
    record = replace(template, id=to_iri(args.iri, prefixes) if args.iri else None, record_ids=(rid,),
                     events=(), supersedes=(), redaction=None)
    record = append_event(record, make_event(ConsentState.Requested, now, to_iri(actor, prefixes)))
    _write_doc(args, record, args.output)
    return EXIT_OK


def cmd_event_add(args) -> int:
    record = _load_record(args.record)
    try:
        state = ConsentState.parse(args.status)
    except (ValueError, ConsentKitError) as exc:
        raise Failure(EXIT_USAGE, f"--status: {exc}") from None
    when = Timestamp.of(args.time) if args.time else _now(args)
    prefixes = default_registry().prefixes
    event = make_event(state, when, to_iri(args.actor, prefixes),
                       method=args.method, duration=args.duration,
                       consent_types=tuple(to_iri(t, prefixes) for t in args.consent_type))
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            record = append_event(record, event, strict=args.strict)
    except (IllegalTransition, NonMonotonicTime) as exc:
        raise Failure(EXIT_INVALID, f"{type(exc).__name__}: {exc}",
                      {"error": type(exc).__name__, "message": str(exc)}) from None
    for w in caught:
        sys.stderr.write(f"warning: {w.message}\n")
    out = args.output or (args.record if args.in_place else None)
    _write_doc(args, record, out)
    return EXIT_OK


def cmd_receipt_issue(args) -> int:
    records = [_load_record(p) for p in args.records]
    now = _now(args)
    try:
        receipt = issue_receipt(records, args.id, args.publisher, args.recipient,
                                MANDATORY_ONLY if args.mandatory_only else FULL,
                                clock=lambda: now, iri=args.iri)
    except InvalidSourceRecord as exc:
        raise Failure(EXIT_INVALID, f"{exc}\n{_report_text(exc.report)}",
                      {"error": "InvalidSourceRecord", "message": str(exc), "report": exc.report.to_dict()}) from None
    except EmptyRecordSet as exc:
        raise Failure(EXIT_USAGE, str(exc)) from None
    _write_doc(args, receipt, args.output)
    return EXIT_OK


def cmd_digest(args) -> int:
    value = _load(args.file)
    try:
        d = digest(value)
    except UnserializableValue as exc:
        raise Failure(EXIT_INVALID, str(exc)) from None
    _emit(args, str(d), {"algorithm": d.algorithm, "digest": d.hex, "file": args.file})
    return EXIT_OK


def cmd_keygen(args) -> int:
    stem = Path(args.out)
    key = generate_key()
    private, public = stem.with_name(stem.name + ".key"), stem.with_name(stem.name + ".pub")
    try:
        save_private_key(key, private)
        save_public_key(key, public)
    except OSError as exc:
        raise Failure(EXIT_IO, f"cannot write key: {exc.strerror}") from None
    _emit(args, f"wrote {private} and {public}", {"private": str(private), "public": str(public)})
    return EXIT_OK


def cmd_sign(args) -> int:
    value = _load(args.file)
    try:
        key = load_private_key(args.key)
    except BadKey as exc:
        raise Failure(EXIT_IO, str(exc)) from None
    signer = args.signer or "urn:x-consentkit:unspecified-signer"
    try:
        envelope = sign(value, key, signer)
    except UnserializableValue as exc:
        raise Failure(EXIT_INVALID, str(exc)) from None
    out = Path(args.output) if args.output else envelope_path(args.file)
    try:
        write_envelope(envelope, out)
    except OSError as exc:
        raise Failure(EXIT_IO, f"cannot write {out}: {exc.strerror}") from None
    _emit(args, f"wrote {out}", {"envelope": str(out), **envelope.to_dict()})
    return EXIT_OK


def cmd_verify(args) -> int:
    value = _load(args.file)
    sig = args.sig or envelope_path(args.file)
    try:
        envelope = read_envelope(sig)
        public = load_public_key(args.pub)
    except (CorruptDocument, BadKey) as exc:
        raise Failure(EXIT_IO, str(exc)) from None
    except OSError as exc:
        raise Failure(EXIT_IO, f"cannot read {sig}: {exc.strerror}") from None
    result = verify(value, envelope, public)
    _emit(args, ("verified" if result else "NOT verified") + f": {result.reason}",
          {"verified": result.ok, "reason": result.reason, "kid": envelope.key_id, "signer": envelope.signer})
    return EXIT_OK if result else EXIT_IO


def cmd_put(args) -> int:
    store = _open_store(args, create=True)
    stored = []
    for path in args.files:
        value = _load(path)
        try:
            stored.append(store.put(value))
        except ValidationFailed as exc:
            raise Failure(EXIT_INVALID, f"{path}: {exc}\n{_report_text(exc.report)}",
                          {"error": "ValidationFailed", "file": path, "report": exc.report.to_dict()}) from None
        except IdConflict as exc:
            raise Failure(EXIT_INVALID, f"{path}: IdConflict: {exc}",
                          {"error": "IdConflict", "file": path, "message": str(exc)}) from None
        except IoFailure as exc:
            raise Failure(EXIT_IO, str(exc)) from None
    _emit(args, "\n".join(stored), {"stored": stored})
    return EXIT_OK


def cmd_query(args) -> int:
    if args.at and not args.status:
        raise Failure(EXIT_USAGE, "--at needs --status")
    store = _open_store(args, create=False)
    try:
        ids = store.query(subject=args.subject, controller=args.controller, purpose=args.purpose,
                          status=args.status, at=Timestamp.of(args.at) if args.at else None)
    except ValueError as exc:
        raise Failure(EXIT_USAGE, str(exc)) from None
    for bad in store.index.corrupt:
        sys.stderr.write(f"warning: skipped {bad}\n")
    _emit(args, "\n".join(ids), {"ids": ids, "corrupt": [str(c) for c in store.index.corrupt]})
    return EXIT_OK


def cmd_crosswalk(args) -> int:
    entries = gdpr_requirements(args.query)
    if not entries:
        raise Failure(EXIT_INVALID, f"no crosswalk entry for {args.query!r}", {"query": args.query, "entries": []})
    lines = []
    for e in entries:
        lines.append(f"{e.iso27560_clause}\t{e.iso27560_name}\tGDPR: {', '.join(e.gdpr_refs) or '-'}"
                     f"\tISO 29184: {', '.join(e.iso29184_refs) or '-'}")
    _emit(args, "\n".join(lines), {"query": args.query, "entries": [e.to_dict() for e in entries]})
    return EXIT_OK


# -- parser --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default=argparse.SUPPRESS,
                        help="output format (default text)")
    common.add_argument("--now", default=argparse.SUPPRESS, help="clock override, ISO 8601")

    parser = argparse.ArgumentParser(prog="consentkit", parents=[common],
                                     description="Consent records and receipts toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("validate", parents=[common], help="check a document against a profile")
    p.add_argument("file")
    p.add_argument("--profile", help="profile IRI or short name (default: the one the document declares)")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("record", help="create records")
    rsub = p.add_subparsers(dest="action", required=True, metavar="ACTION")
    q = rsub.add_parser("new", parents=[common], help="start a record from a template")
    q.add_argument("--from", dest="template", required=True,
                   help=f"template name ({', '.join(sorted(TEMPLATES))}) or record file")
    q.add_argument("--id", help="record identifier (default: derived from template and clock)")
    q.add_argument("--iri", help="document IRI")
    q.add_argument("--actor", help="who requests consent (default: first controller)")
    q.add_argument("-o", "--output")
    q.set_defaults(func=cmd_record_new)

    p = sub.add_parser("event", help="append consent events")
    esub = p.add_subparsers(dest="action", required=True, metavar="ACTION")
    q = esub.add_parser("add", parents=[common], help="append an event to a record")
    q.add_argument("record")
    q.add_argument("--status", required=True, help="state name (Given, Withdrawn, ...) or status term")
    q.add_argument("--time", help="event time (default: --now or the current time)")
    q.add_argument("--actor", default="dpv:DataSubject")
    q.add_argument("--method")
    q.add_argument("--duration", help="validity period, e.g. P6M")
    q.add_argument("--consent-type", action="append", default=[])
    q.add_argument("--strict", action="store_true", help="reject illegal transitions and out-of-order times")
    group = q.add_mutually_exclusive_group()
    group.add_argument("-o", "--output")
    group.add_argument("--in-place", action="store_true")
    q.set_defaults(func=cmd_event_add)

    p = sub.add_parser("receipt", help="issue receipts")
    rsub = p.add_subparsers(dest="action", required=True, metavar="ACTION")
    q = rsub.add_parser("issue", parents=[common], help="issue a receipt for records")
    q.add_argument("records", nargs="+")
    q.add_argument("--id", required=True)
    q.add_argument("--publisher")
    q.add_argument("--recipient")
    q.add_argument("--iri")
    q.add_argument("--mandatory-only", action="store_true")
    q.add_argument("-o", "--output")
    q.set_defaults(func=cmd_receipt_issue)

    p = sub.add_parser("digest", parents=[common], help="print the canonical SHA-256 digest")
    p.add_argument("file")
    p.set_defaults(func=cmd_digest)

    p = sub.add_parser("keygen", parents=[common], help="create an ed25519 key pair")
    p.add_argument("--out", required=True, help="path stem; writes <stem>.key and <stem>.pub")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("sign", parents=[common], help="write a detached signature envelope")
    p.add_argument("file")
    p.add_argument("--key", required=True)
    p.add_argument("--signer", help="signing entity (IRI or CURIE)")
    p.add_argument("-o", "--output", help="envelope path (default <name>.sig.json)")
    p.set_defaults(func=cmd_sign)

    p = sub.add_parser("verify", parents=[common], help="check a detached signature envelope")
    p.add_argument("file")
    p.add_argument("--sig", help="envelope path (default <name>.sig.json)")
    p.add_argument("--pub", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("put", parents=[common], help="add documents to a store")
    p.add_argument("files", nargs="+")
    p.add_argument("--store", help=f"store root (default ${STORE_ENV})")
    p.set_defaults(func=cmd_put)

    p = sub.add_parser("query", parents=[common], help="find records in a store")
    p.add_argument("store", nargs="?", help=f"store root (default ${STORE_ENV})")
    p.add_argument("--subject")
    p.add_argument("--controller")
    p.add_argument("--purpose")
    p.add_argument("--status")
    p.add_argument("--at")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("crosswalk", parents=[common], help="GDPR and ISO 29184 references for a clause or field")
    p.add_argument("query", metavar="clause-or-field")
    p.set_defaults(func=cmd_crosswalk)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    args.format = getattr(args, "format", "text")
    args.now = getattr(args, "now", None)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return args.func(args)
    except Failure as exc:
        if args.format == "json" and exc.payload is not None:
            _emit(args, payload=exc.payload)
        sys.stderr.write(f"consentkit: {exc}\n")
        return exc.code
    except ConsentKitError as exc:
        sys.stderr.write(f"consentkit: {type(exc).__name__}: {exc}\n")
        return EXIT_INVALID
    except OSError as exc:
        sys.stderr.write(f"consentkit: {exc}\n")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
