"""Consent state machine over a record's event log.

Status is never stored beyond what the events say: expiry is derived from
the validity duration of the latest given or reaffirmed consent.
"""

from __future__ import annotations

import datetime as dt
import warnings
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .errors import IllegalTransition, MalformedField, NonMonotonicTime, LifecycleWarning
from .model import ConsentEvent, ConsentRecord, Duration, Timestamp, ordered_events
from .vocabulary import Registry, default_registry

DPV = "https://w3id.org/dpv#"


class ConsentState(Enum):
    Unknown = "Unknown"
    Requested = "Requested"
    Given = "Given"
    Refused = "Refused"
    Withdrawn = "Withdrawn"
    Expired = "Expired"
    Terminated = "Terminated"
    Invalidated = "Invalidated"
    Reaffirmed = "Reaffirmed"

    @property
    def term(self) -> str:
        return STATE_TERMS[self]

    @classmethod
    def parse(cls, name: str) -> "ConsentState":
        for state in cls:
            if state.value.lower() == name.strip().lower():
                return state
        return state_of_term(default_registry().expand(name) if ":" in name else name)


STATE_TERMS = {
    ConsentState.Unknown: DPV + "ConsentUnknown",
    ConsentState.Requested: DPV + "ConsentRequested",
    ConsentState.Given: DPV + "ConsentGiven",
    ConsentState.Refused: DPV + "ConsentRefused",
    ConsentState.Withdrawn: DPV + "ConsentWithdrawn",
    ConsentState.Expired: DPV + "ConsentExpired",
    ConsentState.Terminated: DPV + "ConsentRevoked",
    ConsentState.Invalidated: DPV + "ConsentInvalidated",
    ConsentState.Reaffirmed: DPV + "RenewedConsentGiven",
}
_BY_TERM = {iri: state for state, iri in STATE_TERMS.items()}
ACTIVE = (ConsentState.Given, ConsentState.Reaffirmed)


def state_of_term(iri: str, registry: Registry | None = None) -> ConsentState:
    """Map a status term to its state; subterms map to their nearest mapped ancestor."""
    if iri in _BY_TERM:
        return _BY_TERM[iri]
    reg = registry or default_registry()
    if iri in reg:
        for state, term in STATE_TERMS.items():
            if reg.is_a(iri, term):
                return state
    raise ValueError(f"{reg.compact(iri)} is not a consent state")


def event_state(event: ConsentEvent, registry: Registry | None = None) -> ConsentState:
    for status in event.status:
        try:
            return state_of_term(status, registry)
        except ValueError:
            continue
    return ConsentState.Unknown


# -- transition table --------------------------------------------------------------

@dataclass(frozen=True)
class TransitionTable:
    allowed: frozenset[tuple[ConsentState, ConsentState]]

    def targets(self, state: ConsentState) -> frozenset[ConsentState]:
        return frozenset(t for s, t in self.allowed if s is state)

    def permits(self, source: ConsentState, target: ConsentState) -> bool:
        return (source, target) in self.allowed


def parse_transitions(text: str) -> TransitionTable:
    pairs = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        source, arrow, targets = line.partition("->")
        if not arrow:
            raise ValueError(f"transitions line {lineno}: expected '<from> -> <to>[,<to>...]'")
        try:
            src = ConsentState(source.strip())
            for name in targets.split(","):
                pairs.add((src, ConsentState(name.strip())))
        except ValueError as exc:
            raise ValueError(f"transitions line {lineno}: {exc}") from None
    return TransitionTable(frozenset(pairs))


@lru_cache(maxsize=1)
def default_transitions() -> TransitionTable:
    text = resources.files("consentkit").joinpath("data", "transitions.txt").read_text(encoding="utf-8")
    return parse_transitions(text)


def load_transitions(path: str | Path | None = None) -> TransitionTable:
    if path is None:
        return default_transitions()
    return parse_transitions(Path(path).read_text(encoding="utf-8"))


def allowed_transitions(state: ConsentState, table: TransitionTable | None = None) -> frozenset[ConsentState]:
    return (table or default_transitions()).targets(state)


# -- status ---------------------------------------------------------------------------

def _period(event: ConsentEvent) -> Duration | None:
    return next((d for d in event.duration if d.is_period), None)


def _validity(history: list[tuple[int, ConsentEvent]], registry: Registry | None) -> Duration | None:
    """Validity of the last event in ``history``.

    A reaffirmation without its own duration keeps the duration of the consent
    it renews; the clock restarts at the reaffirmation.
    """
    _, last = history[-1]
    own = _period(last)
    if own is not None or event_state(last, registry) is not ConsentState.Reaffirmed:
        return own
    for _, earlier in reversed(history[:-1]):
        if event_state(earlier, registry) in ACTIVE:
            found = _period(earlier)
            if found is not None:
                return found
    return None


def _instant(at) -> dt.datetime:
    return Timestamp.of(at).instant


def expiry(record: ConsentRecord, at, registry: Registry | None = None) -> dt.datetime | None:
    """When the consent in force at ``at`` lapses, if it is given and time-limited."""
    when = _instant(at)
    history = [(i, e) for i, e in ordered_events(record) if e.time[0].instant <= when]
    if not history or event_state(history[-1][1], registry) not in ACTIVE:
        return None
    d = _validity(history, registry)
    return d.add_to(history[-1][1].time[0].instant) if d is not None else None


def current_status(record: ConsentRecord, at, registry: Registry | None = None) -> ConsentState:
    """State at instant ``at``: the latest event not after ``at``, with expiry applied."""
    when = _instant(at)
    history = [(i, e) for i, e in ordered_events(record) if e.time[0].instant <= when]
    if not history:
        return ConsentState.Unknown
    state = event_state(history[-1][1], registry)
    if state in ACTIVE:
        d = _validity(history, registry)
        if d is not None and when > d.add_to(history[-1][1].time[0].instant):
            return ConsentState.Expired
    return state


def status_boundaries(record: ConsentRecord, registry: Registry | None = None) -> list[dt.datetime]:
    """Instants at which current_status may change: event times and expiry points."""
    points = set()
    events = ordered_events(record)
    for k, (_, event) in enumerate(events):
        t = event.time[0].instant
        points.add(t)
        if event_state(event, registry) in ACTIVE:
            d = _validity(events[: k + 1], registry)
            if d is not None:
                points.add(d.add_to(t))
    return sorted(points)


# -- appending --------------------------------------------------------------------------

def make_event(state: ConsentState, time, actor: str, *, method: str | None = None,
               duration: str | None = None, consent_types: tuple[str, ...] = ()) -> ConsentEvent:
    return ConsentEvent(
        status=(state.term,), consent_types=tuple(consent_types), time=(Timestamp.of(time),),
        actor=(actor,), method=(method,) if method else (),
        duration=(Duration(value=duration),) if duration else (),
    )


def append_event(record: ConsentRecord, event: ConsentEvent, strict: bool = True,
                 table: TransitionTable | None = None, registry: Registry | None = None) -> ConsentRecord:
    """Return a copy of ``record`` with ``event`` appended.

    Strict mode rejects illegal transitions and events dated before the
    latest one. Lenient mode appends anyway and notes the problem on the
    event itself.
    """
    if not (event.status and event.time and event.actor):
        raise MalformedField("event needs a status, a time and an actor")
    table = table or default_transitions()
    notes: list[str] = []
    when = event.time[0]
    latest = max((e.time[0] for e in record.events if e.time), default=None)
    if latest is not None and when < latest:
        if strict:
            raise NonMonotonicTime(f"event at {when.canonical} precedes latest event at {latest.canonical}")
        notes.append(f"out of order: precedes event at {latest.canonical}")
    reference = when if latest is None or latest < when else latest
    source = current_status(record, reference, registry)
    target = event_state(event, registry)
    if not table.permits(source, target):
        if strict:
            raise IllegalTransition(source, target)
        notes.append(f"illegal transition {source.value} -> {target.value}")
    if notes:
        for note in notes:
            warnings.warn(note, LifecycleWarning, stacklevel=2)
        event = replace(event, notes=event.notes + tuple(notes))
    return replace(record, events=record.events + (event,))
