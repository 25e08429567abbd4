"""Exception hierarchy shared by every consentkit module."""

from __future__ import annotations


class ConsentKitError(Exception):
    """Base class for all toolkit errors."""


class ParseWarning(UserWarning):
    """Non-fatal oddity noticed while reading a document."""


class LifecycleWarning(UserWarning):
    """An event was accepted in lenient mode despite breaking the rules."""


# vocabulary

class UnknownPrefix(ConsentKitError):
    pass


class MalformedCurie(ConsentKitError):
    pass


class UnknownTerm(ConsentKitError):
    pass


class RegistryError(ConsentKitError):
    """The shipped registry file is inconsistent (cycle, bad parent)."""


# model

class IndexOutOfRange(ConsentKitError, IndexError):
    pass


class DanglingReference(ConsentKitError):
    pass


class AmbiguousReference(ConsentKitError):
    pass


# serialization

class DocumentError(ConsentKitError):
    """A document could not be read. ``path`` locates the offending node."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        self.detail = message
        super().__init__(f"{path}: {message}" if path else message)

    def prefixed(self, prefix: str) -> "DocumentError":
        joined = f"{prefix}.{self.path}" if self.path and not self.path.startswith("[") else prefix + self.path
        return type(self)(self.detail, joined)


class NotARecord(DocumentError):
    pass


class NotAReceipt(DocumentError):
    pass


class MalformedField(DocumentError):
    pass


class DuplicateKey(DocumentError):
    pass


class UnknownContext(DocumentError):
    pass


class UnserializableValue(ConsentKitError):
    pass


# profiles

class UnknownProfile(ConsentKitError):
    pass


class TypeMismatch(ConsentKitError):
    pass


class ProfileSyntaxError(ConsentKitError):
    pass


# lifecycle

class IllegalTransition(ConsentKitError):
    def __init__(self, source, target):
        self.source = source
        self.target = target
        super().__init__(f"transition {source.value} -> {target.value} is not allowed")


class NonMonotonicTime(ConsentKitError):
    pass


# receipts

class EmptyRecordSet(ConsentKitError):
    pass


class InvalidSourceRecord(ConsentKitError):
    def __init__(self, message: str, report):
        self.report = report
        super().__init__(message)


# integrity

class BadKey(ConsentKitError):
    pass


class PathNotFound(ConsentKitError):
    pass


class NonLiteralPath(ConsentKitError):
    pass


# store

class ValidationFailed(ConsentKitError):
    def __init__(self, message: str, report):
        self.report = report
        super().__init__(message)


class IdConflict(ConsentKitError):
    pass


class IoFailure(ConsentKitError):
    pass


class CorruptDocument(ConsentKitError):
    def __init__(self, path, reason: str):
        self.path = path
        self.reason = reason
        super().__init__(f"{path}: {reason}")
