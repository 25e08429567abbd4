import base64
import datetime as dt
import random
from dataclasses import fields, is_dataclass, replace

import pytest
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

from consentkit.errors import BadKey, CorruptDocument, NonLiteralPath, PathNotFound
from consentkit.integrity import (
    REDACTED_PREFIX, Digest, SignatureEnvelope, digest, digest_bytes, envelope_path, generate_key, key_id,
    load_private_key, load_public_key, read_envelope, redact, redactable_paths, save_private_key, save_public_key,
    sign, verify, write_envelope,
)
from consentkit.model import FrozenMap, Timestamp
from consentkit.profiles import validate
from consentkit.receipts import issue_receipt
from consentkit.serialization import canonical_bytes, parse, serialize

import oracle_canonical
from conftest import GOLDEN
from generators import random_record

SIGNER = "https://example.com/org/acme"


@pytest.fixture(scope="module")
def key():
    return generate_key()


def golden_digest():
    return (GOLDEN / "example_record.sha256").read_text().strip()


def test_fixture_digest_matches_golden(example_record):
    assert digest(example_record).hex == golden_digest()


def test_oracle_still_agrees(example_record):
    assert oracle_canonical.fixture_digest() == golden_digest()
    assert oracle_canonical.canonical(
        __import__("json").loads(oracle_canonical.FIXTURE.read_text(encoding="utf-8"))) == canonical_bytes(example_record)


def test_digest_text_form():
    d = digest_bytes(b"abc")
    assert str(d) == "sha-256:ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    assert Digest.parse(str(d)) == d
    with pytest.raises(ValueError):
        Digest(b"short")
    with pytest.raises(ValueError):
        Digest.parse("md5:00")


def test_sign_verify_fixture(example_record, key):
    env = sign(example_record, key, SIGNER)
    assert env.signed_digest.hex == golden_digest()
    assert env.key_id == key_id(key.public_key())
    assert verify(example_record, env, key.public_key())


def test_round_trip_through_text_keeps_signature(example_record, key):
    env = sign(example_record, key, SIGNER)
    again = parse(serialize(example_record))
    assert verify(again, env, key.public_key())


def test_sign_verify_random_records(key):
    pub = key.public_key()
    for seed in range(100):
        record = random_record(random.Random(seed))
        env = sign(record, key, SIGNER)
        assert verify(record, env, pub), seed
        assert verify(parse(serialize(record)), env, pub), seed


def test_receipts_sign_too(example_receipt, key):
    env = sign(example_receipt, key, "ex:Acme")
    assert env.signer == "ex:Acme"
    assert verify(example_receipt, env, key.public_key())


def test_wrong_key(example_record, key):
    env = sign(example_record, key, SIGNER)
    result = verify(example_record, env, generate_key().public_key())
    assert not result and "key id" in result.reason


def test_tampered_envelope(example_record, key):
    env = sign(example_record, key, SIGNER)
    forged = replace(env, signer="https://example.com/org/mallory")
    assert verify(example_record, forged, key.public_key()).reason == "signature does not validate"
    bad_alg = replace(env, algorithm="rsa")
    assert not verify(example_record, bad_alg, key.public_key())


def test_non_ed25519_key(example_record):
    from cryptography.hazmat.primitives.asymmetric import ec
    with pytest.raises(BadKey):
        sign(example_record, ec.generate_private_key(ec.SECP256R1()), SIGNER)


# -- mutation sweep ------------------------------------------------------------------

def _bumped(value):
    if isinstance(value, str):
        return value + "-x"
    if isinstance(value, Timestamp):
        return Timestamp((value.instant + dt.timedelta(days=1)).isoformat())
    if isinstance(value, bool) or value is None:
        return None
    if isinstance(value, (int, float)):
        return value + 1
    return None


def mutations(node, rebuild, label):
    """Single-field mutations of every field reachable from ``node``."""
    for f in fields(node):
        if f.name == "context":
            continue
        value = getattr(node, f.name)
        put = lambda v, f=f: rebuild(replace(node, **{f.name: v}))  # noqa: E731
        if is_dataclass(value) and not isinstance(value, Timestamp):
            yield from mutations(value, put, f"{label}.{f.name}")
        elif isinstance(value, FrozenMap):
            if value:
                k = sorted(value)[0]
                yield f"{label}.{f.name}[{k}]", put(FrozenMap({**value, k: "changed"}))
            yield f"{label}.{f.name}+", put(FrozenMap({**value, "https://example.org/ext#added": "y"}))
        elif isinstance(value, tuple):
            if value:
                yield f"{label}.{f.name}-last", put(value[:-1])
            for i, item in enumerate(value):
                setter = lambda v, i=i, value=value, put=put: put(value[:i] + (v,) + value[i + 1:])  # noqa: E731
                if is_dataclass(item) and not isinstance(item, Timestamp):
                    yield from mutations(item, setter, f"{label}.{f.name}[{i}]")
                elif _bumped(item) is not None:
                    yield f"{label}.{f.name}[{i}]", setter(_bumped(item))
        elif _bumped(value) is not None:
            yield f"{label}.{f.name}", put(_bumped(value))


def test_mutation_sweep(example_record, key):
    env = sign(example_record, key, SIGNER)
    pub = key.public_key()
    original = digest(example_record)
    seen = 0
    unserializable = 0
    for label, mutated in mutations(example_record, lambda v: v, "record"):
        assert mutated != example_record, label
        result = verify(mutated, env, pub)
        assert not result, label
        seen += 1
        if result.reason.startswith("value cannot be serialized"):
            unserializable += 1  # e.g. a renamed reference now dangles
            continue
        assert result.reason.startswith("digest mismatch"), (label, result.reason)
        assert digest(mutated) != original, label
    assert seen > 100
    assert unserializable < seen // 4


# -- keys and envelopes -----------------------------------------------------------------

def test_key_files(tmp_path, key):
    save_private_key(key, tmp_path / "k.key")
    save_public_key(key, tmp_path / "k.pub")
    assert (tmp_path / "k.key").stat().st_mode & 0o777 == 0o600
    assert key_id(load_private_key(tmp_path / "k.key")) == key_id(key)
    assert key_id(load_public_key(tmp_path / "k.pub")) == key_id(key)
    with pytest.raises(BadKey):
        load_public_key(b"not a key")
    with pytest.raises(BadKey):
        load_private_key(tmp_path / "k.pub")


def test_key_id_shape(key):
    kid = key_id(key)
    assert len(kid) == 16 and int(kid, 16) >= 0
    assert kid == key_id(key.public_key())


def test_envelope_file_round_trip(tmp_path, example_record, key):
    env = sign(example_record, key, SIGNER)
    path = envelope_path(tmp_path / "rec.json")
    assert path.name == "rec.sig.json"
    write_envelope(env, path)
    assert read_envelope(path) == env
    assert set(env.to_dict()) == {"alg", "kid", "digest", "sig", "signer"}
    assert SignatureEnvelope.from_dict(env.to_dict()) == env


@pytest.mark.parametrize("text", ["[]", "{}", "not json", '{"alg":"ed25519","kid":"x","digest":"00","sig":"@@","signer":"s"}'])
def test_corrupt_envelope(tmp_path, text):
    path = tmp_path / "bad.sig.json"
    path.write_text(text)
    with pytest.raises(CorruptDocument):
        read_envelope(path)


def test_signature_covers_preamble(example_record, key):
    env = sign(example_record, key, SIGNER)
    raw = base64.b64decode(env.to_dict()["sig"])
    assert len(raw) == 64


# -- redaction ----------------------------------------------------------------------------

FIXED_SALT = bytes(range(16))


def test_fixture_redactable_paths(example_record):
    assert redactable_paths(example_record) == [
        "processes[0].personal_data[0].values[0]",
        "processes[1].personal_data[0].identifiers[0]",
    ]


def test_redaction_keeps_validity_and_changes_digest(example_record):
    out = redact(example_record, redactable_paths(example_record), FIXED_SALT)
    report = validate(out, "record")
    assert report.passed and report.findings == ()
    assert digest(out) != digest(example_record)
    assert out.processes[0].personal_data[0].values[0].startswith(REDACTED_PREFIX)
    assert "hello@example.com" not in serialize(out).decode()
    assert parse(serialize(out)) == out
    assert out.redaction.paths == tuple(redactable_paths(example_record))


def test_redaction_is_salted(example_record):
    one = redact(example_record, ["processes[0].personal_data[0].values[0]"], FIXED_SALT)
    two = redact(example_record, ["processes[0].personal_data[0].values[0]"], bytes(16))
    assert one.processes[0].personal_data[0].values != two.processes[0].personal_data[0].values


def test_redaction_sweep_on_generated_records(key):
    count = 0
    for seed in range(60):
        record = random_record(random.Random(seed))
        paths = redactable_paths(record)
        if not paths:
            continue
        out = redact(record, paths, FIXED_SALT)
        assert validate(out, out.schema_version[0]).passed, seed
        assert parse(serialize(out)) == out
        assert verify(out, sign(out, key, SIGNER), key.public_key())
        count += 1
    assert count > 10


def test_re_redaction_needs_same_salt(example_record):
    once = redact(example_record, ["processes[0].personal_data[0].values[0]"], FIXED_SALT)
    twice = redact(once, ["processes[1].personal_data[0].identifiers[0]"], FIXED_SALT)
    assert twice.redaction.paths == ("processes[0].personal_data[0].values[0]",
                                     "processes[1].personal_data[0].identifiers[0]")
    with pytest.raises(ValueError):
        redact(once, ["processes[1].personal_data[0].identifiers[0]"], bytes(16))


def test_no_paths_is_identity(example_record):
    assert redact(example_record, []) is example_record


@pytest.mark.parametrize("selector,error", [
    ("processes[9].personal_data[0].values[0]", PathNotFound),
    ("processes.personal_data[0].values[0]", PathNotFound),
    ("nonsense", PathNotFound),
    ("processes[0].purposes[0]", NonLiteralPath),
    ("processes[0]", NonLiteralPath),
    ("data_subject[0].types[0]", NonLiteralPath),
])
def test_bad_selectors(example_record, selector, error):
    with pytest.raises(error):
        redact(example_record, [selector], FIXED_SALT)


def test_receipt_of_redacted_record(example_record):
    out = redact(example_record, redactable_paths(example_record), FIXED_SALT)
    receipt = issue_receipt([out], "r")
    assert parse(serialize(receipt)).records[0].redaction == out.redaction


def test_private_key_type(key):
    assert isinstance(key, Ed25519PrivateKey)
