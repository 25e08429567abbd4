"""Digests, detached ed25519 signatures and salted redaction.

Signatures never touch the document: an envelope stored beside it carries
the algorithm, key id, digest, signature and signer.
"""

from __future__ import annotations

import base64
import binascii
import hashlib
import json
import os
import re
from dataclasses import dataclass, replace
from pathlib import Path

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import serialization as _ser
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey

from .errors import BadKey, CorruptDocument, NonLiteralPath, PathNotFound, UnserializableValue
from .model import ConsentReceipt, ConsentRecord, Entity, FrozenMap, PersonalDataItem, RedactionManifest, Resource
from .serialization import canonical_bytes
from .vocabulary import default_registry, to_iri

SHA256 = "sha-256"
ED25519 = "ed25519"
PREAMBLE = "consentkit-signature-v1"
REDACTED_PREFIX = "redacted:sha-256:"

_DIGEST_SIZES = {SHA256: 32}


@dataclass(frozen=True)
class Digest:
    value: bytes
    algorithm: str = SHA256

    def __post_init__(self):
        size = _DIGEST_SIZES.get(self.algorithm)
        if size is None:
            raise ValueError(f"unsupported digest algorithm {self.algorithm!r}")
        if len(self.value) != size:
            raise ValueError(f"{self.algorithm} digest must be {size} bytes, got {len(self.value)}")

    @property
    def hex(self) -> str:
        return self.value.hex()

    def __str__(self) -> str:
        return f"{self.algorithm}:{self.hex}"

    @classmethod
    def parse(cls, text: str) -> "Digest":
        algorithm, sep, hexpart = text.rpartition(":")
        try:
            return cls(bytes.fromhex(hexpart), algorithm if sep else SHA256)
        except ValueError as exc:
            raise ValueError(f"not a digest: {text!r}") from exc


def digest_bytes(data: bytes) -> Digest:
    return Digest(hashlib.sha256(data).digest())


def digest(value: ConsentRecord | ConsentReceipt) -> Digest:
    """SHA-256 over the canonical serialization."""
    return digest_bytes(canonical_bytes(value))


# -- keys ------------------------------------------------------------------------

def generate_key() -> Ed25519PrivateKey:
    return Ed25519PrivateKey.generate()


def _raw_public(key: Ed25519PublicKey) -> bytes:
    return key.public_bytes(_ser.Encoding.Raw, _ser.PublicFormat.Raw)


def key_id(key: Ed25519PublicKey | Ed25519PrivateKey) -> str:
    """First 16 hex characters of the SHA-256 of the raw public key."""
    if isinstance(key, Ed25519PrivateKey):
        key = key.public_key()
    if not isinstance(key, Ed25519PublicKey):
        raise BadKey(f"expected an ed25519 key, got {type(key).__name__}")
    return hashlib.sha256(_raw_public(key)).hexdigest()[:16]


def save_private_key(key: Ed25519PrivateKey, path: str | Path) -> None:
    pem = key.private_bytes(_ser.Encoding.PEM, _ser.PrivateFormat.PKCS8, _ser.NoEncryption())
    path = Path(path)
    path.write_bytes(pem)
    os.chmod(path, 0o600)


def save_public_key(key: Ed25519PublicKey | Ed25519PrivateKey, path: str | Path) -> None:
    if isinstance(key, Ed25519PrivateKey):
        key = key.public_key()
    Path(path).write_bytes(key.public_bytes(_ser.Encoding.PEM, _ser.PublicFormat.SubjectPublicKeyInfo))


def _read_key_bytes(source: str | Path | bytes) -> bytes:
    if isinstance(source, bytes):
        return source
    try:
        return Path(source).read_bytes()
    except OSError as exc:
        raise BadKey(f"cannot read key {source}: {exc.strerror}") from exc


def load_private_key(source: str | Path | bytes) -> Ed25519PrivateKey:
    try:
        key = _ser.load_pem_private_key(_read_key_bytes(source), password=None)
    except (ValueError, TypeError) as exc:
        raise BadKey(f"not a PEM private key: {exc}") from exc
    if not isinstance(key, Ed25519PrivateKey):
        raise BadKey(f"expected an ed25519 private key, got {type(key).__name__}")
    return key


def load_public_key(source: str | Path | bytes) -> Ed25519PublicKey:
    try:
        key = _ser.load_pem_public_key(_read_key_bytes(source))
    except (ValueError, TypeError) as exc:
        raise BadKey(f"not a PEM public key: {exc}") from exc
    if not isinstance(key, Ed25519PublicKey):
        raise BadKey(f"expected an ed25519 public key, got {type(key).__name__}")
    return key


# -- envelopes --------------------------------------------------------------------

@dataclass(frozen=True)
class SignatureEnvelope:
    key_id: str
    signed_digest: Digest
    signature: bytes
    signer: str
    algorithm: str = ED25519

    def to_dict(self) -> dict:
        return {
            "alg": self.algorithm,
            "kid": self.key_id,
            "digest": self.signed_digest.hex,
            "sig": base64.b64encode(self.signature).decode("ascii"),
            "signer": self.signer,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "SignatureEnvelope":
        missing = {"alg", "kid", "digest", "sig", "signer"} - set(data)
        if missing:
            raise ValueError(f"envelope lacks {', '.join(sorted(missing))}")
        try:
            sig = base64.b64decode(data["sig"], validate=True)
        except (binascii.Error, TypeError) as exc:
            raise ValueError("envelope signature is not base64") from exc
        return cls(
            algorithm=data["alg"], key_id=data["kid"], signed_digest=Digest(bytes.fromhex(data["digest"])),
            signature=sig, signer=data["signer"],
        )


def envelope_path(document: str | Path) -> Path:
    """``record.json`` -> ``record.sig.json`` in the same directory."""
    document = Path(document)
    return document.with_name(document.stem + ".sig.json")


def write_envelope(envelope: SignatureEnvelope, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(envelope.to_json(), encoding="utf-8")
    return path


def read_envelope(path: str | Path) -> SignatureEnvelope:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
        if not isinstance(data, dict):
            raise ValueError("envelope must be a JSON object")
        return SignatureEnvelope.from_dict(data)
    except (ValueError, UnicodeDecodeError) as exc:
        raise CorruptDocument(path, str(exc)) from exc


def _preamble(algorithm: str, kid: str, signer: str, d: Digest) -> bytes:
    return "\n".join((PREAMBLE, algorithm, kid, signer, str(d))).encode("utf-8")


def sign(value: ConsentRecord | ConsentReceipt, key: Ed25519PrivateKey, signer: str) -> SignatureEnvelope:
    """Detached signature over the value's digest, the signer and the key id."""
    if not isinstance(key, Ed25519PrivateKey):
        raise BadKey(f"expected an ed25519 private key, got {type(key).__name__}")
    signer = to_iri(signer, default_registry().prefixes)
    d = digest(value)
    kid = key_id(key)
    return SignatureEnvelope(key_id=kid, signed_digest=d, signer=signer,
                             signature=key.sign(_preamble(ED25519, kid, signer, d)))


@dataclass(frozen=True)
class Verification:
    ok: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def verify(value: ConsentRecord | ConsentReceipt, envelope: SignatureEnvelope, public_key) -> Verification:
    """Check ``envelope`` against ``value``; never raises."""
    if envelope.algorithm != ED25519:
        return Verification(False, f"unsupported algorithm {envelope.algorithm!r}")
    if not isinstance(public_key, Ed25519PublicKey):
        return Verification(False, "public key is not an ed25519 key")
    if key_id(public_key) != envelope.key_id:
        return Verification(False, "key id does not match the public key")
    try:
        actual = digest(value)
    except (UnserializableValue, ValueError) as exc:
        return Verification(False, f"value cannot be serialized: {exc}")
    if actual != envelope.signed_digest:
        return Verification(False, "digest mismatch: the document changed after signing")
    try:
        public_key.verify(envelope.signature,
                          _preamble(envelope.algorithm, envelope.key_id, envelope.signer, envelope.signed_digest))
    except InvalidSignature:
        return Verification(False, "signature does not validate")
    return Verification(True, "ok")


# -- redaction -------------------------------------------------------------------

_STEP = re.compile(r"([a-z_]+)(?:\[(\d+)\])?$")
_LITERAL_FIELDS = {Entity: ("names", "identifiers", "contacts"), PersonalDataItem: ("values", "identifiers")}
_CONTAINERS = {"data_subject", "parties", "processes", "personal_data"}


def _steps(selector: str) -> list[tuple[str, int | None]]:
    out = []
    for part in selector.split("."):
        m = _STEP.match(part)
        if not m:
            raise PathNotFound(f"{selector}: cannot read step {part!r}")
        out.append((m.group(1), int(m.group(2)) if m.group(2) is not None else None))
    return out


def _hide(text: str, salt: bytes) -> str:
    return REDACTED_PREFIX + hashlib.sha256(salt + text.encode("utf-8")).hexdigest()


def _hide_contact(contact: Resource, salt: bytes, selector: str) -> Resource:
    props = {}
    hidden = False
    for key, val in contact.props.items():
        if isinstance(val, str):
            val, hidden = _hide(val, salt), True
        elif isinstance(val, tuple) and val and all(isinstance(v, str) for v in val):
            val, hidden = tuple(_hide(v, salt) for v in val), True
        props[key] = val
    if not hidden:
        raise NonLiteralPath(f"{selector}: contact has no literal value")
    return replace(contact, props=FrozenMap(props))


def _redact_at(node, steps, salt: bytes, selector: str):
    name, index = steps[0]
    rest = steps[1:]
    if isinstance(node, ConsentRecord) and name == "shared":
        if index is not None or not rest:
            raise PathNotFound(f"{selector}: 'shared' takes no index and needs a field")
        return replace(node, shared=_redact_at(node.shared, rest, salt, selector))
    if not hasattr(node, name) or name in ("id", "extensions", "context"):
        raise PathNotFound(f"{selector}: no field {name!r} on {type(node).__name__}")
    current = getattr(node, name)
    if name in _CONTAINERS and isinstance(current, tuple):
        if not rest:
            raise NonLiteralPath(f"{selector}: {name} holds structures, not literals")
        if index is None:
            raise PathNotFound(f"{selector}: {name} needs an index")
        if index >= len(current):
            raise PathNotFound(f"{selector}: {name}[{index}] does not exist")
        items = list(current)
        items[index] = _redact_at(items[index], rest, salt, selector)
        return replace(node, **{name: tuple(items)})
    if rest or name not in _LITERAL_FIELDS.get(type(node), ()):
        raise NonLiteralPath(f"{selector}: {type(node).__name__}.{name} is not a redactable literal")
    if index is not None and index >= len(current):
        raise PathNotFound(f"{selector}: {name}[{index}] does not exist")
    if not current:
        raise PathNotFound(f"{selector}: {name} is empty")
    targets = range(len(current)) if index is None else (index,)
    items = list(current)
    for i in targets:
        if name == "contacts":
            items[i] = _hide_contact(items[i], salt, selector)
        else:
            items[i] = _hide(items[i], salt)
    return replace(node, **{name: tuple(items)})


def redactable_paths(record: ConsentRecord) -> list[str]:
    """Every selector naming a single literal that redact() accepts."""
    out = []

    def entity(prefix: str, e: Entity):
        for attr in ("names", "identifiers"):
            out.extend(f"{prefix}.{attr}[{k}]" for k in range(len(getattr(e, attr))))
        out.extend(f"{prefix}.contacts[{k}]" for k, c in enumerate(e.contacts)
                   if any(isinstance(v, str) or (isinstance(v, tuple) and v and all(isinstance(x, str) for x in v))
                          for v in c.props.values()))

    def process(prefix: str, p):
        for j, item in enumerate(p.personal_data):
            for attr in ("values", "identifiers"):
                out.extend(f"{prefix}.personal_data[{j}].{attr}[{k}]" for k in range(len(getattr(item, attr))))

    for i, e in enumerate(record.data_subject):
        entity(f"data_subject[{i}]", e)
    for i, e in enumerate(record.parties):
        entity(f"parties[{i}]", e)
    process("shared", record.shared)
    for i, p in enumerate(record.processes):
        process(f"processes[{i}]", p)
    return out


def redact(record: ConsentRecord, paths, salt: bytes | None = None) -> ConsentRecord:
    """Replace the selected literals with salted SHA-256 digests.

    Selectors are dotted attribute paths such as
    ``processes[0].personal_data[0].values[0]``; leaving off the last index
    redacts every value of that field. A manifest listing the selectors and
    the digest of the salt is attached. Redacting again must reuse the salt.
    """
    if not isinstance(record, ConsentRecord):
        raise TypeError("only consent records can be redacted")
    paths = list(paths)
    if not paths:
        return record
    if salt is None:
        salt = os.urandom(16)
    salt_digest = str(digest_bytes(salt))
    previous = record.redaction
    if previous is not None and previous.salt_digest != salt_digest:
        raise ValueError("record was already redacted with a different salt")
    for selector in paths:
        record = _redact_at(record, _steps(selector), salt, selector)
    merged = list(previous.paths) if previous else []
    merged += [p for p in paths if p not in merged]
    return replace(record, redaction=RedactionManifest(paths=tuple(merged), salt_digest=salt_digest))
