"""Typed domain model of the home context hierarchy.

Persons carry a priority, activities tie a person and a preference profile
to a time of day, preference profiles map appliances to desired boolean
states, and environment readings are timestamped sensor snapshots.  All of
it maps bidirectionally onto triples in the home namespace.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date as Date

from .rdf import Iri, Literal, Triple, TriplePattern, TripleStore, Variable, home, xsd

P_NAME = home("name")
P_PRIORITY = home("hasPriority")
P_WHEN = home("When")
P_WHO = home("Who")
P_DO = home("Do")
P_HUMIDITY = home("Humidity")
P_TEMPERATURE = home("Temperature")
P_ILLUMINATION = home("Illumination")
P_DATE = home("Date")
P_HAS_TIME = home("hasTime")
P_PERSON_IN = home("personIn")

XSD_DOUBLE = xsd("double")
XSD_BOOLEAN = xsd("boolean")
XSD_DATE = xsd("date")


class ModelError(ValueError):
    """Raised when triples cannot be interpreted as a valid home model."""


@dataclass(frozen=True)
class TimeOfDay:
    hour: int
    minute: int
    second: int

    def __post_init__(self):
        if not (0 <= self.hour <= 23 and 0 <= self.minute <= 59
                and 0 <= self.second <= 59):
            raise ValueError(f"invalid time of day {self.hour}:{self.minute}:{self.second}")

    @property
    def label(self) -> str:
        """6-digit HHMMSS form used in resource names like :_180000."""
        return f"{self.hour:02d}{self.minute:02d}{self.second:02d}"

    @property
    def iri(self) -> Iri:
        return home(f"_{self.label}")

    @classmethod
    def from_label(cls, label: str) -> "TimeOfDay":
        digits = label.lstrip("_")
        if len(digits) != 6 or not digits.isdigit():
            raise ValueError(f"time label must be 6 digits, got {label!r}")
        return cls(int(digits[0:2]), int(digits[2:4]), int(digits[4:6]))


@dataclass(frozen=True)
class Person:
    id: Iri
    name: str
    priority: int

    def __post_init__(self):
        if self.priority < 1:
            raise ValueError(f"priority must be >= 1, got {self.priority}")


@dataclass(frozen=True)
class EnvironmentReading:
    """One timestamped sensor snapshot; the id is derived from date + time."""

    humidity: float
    temperature: float
    illumination: float
    date: Date
    time: TimeOfDay
    persons_present: frozenset[Iri] = frozenset()

    def __post_init__(self):
        if not 0 <= self.humidity <= 100:
            raise ValueError(f"humidity out of range: {self.humidity}")
        if self.illumination < 0:
            raise ValueError(f"illumination must be >= 0: {self.illumination}")

    @property
    def id(self) -> Iri:
        stamp = f"{self.date.year % 100:02d}{self.date.month:02d}{self.date.day:02d}"
        return home(f"_{stamp}{self.time.label}")


@dataclass(frozen=True)
class Activity:
    id: Iri
    when: TimeOfDay
    who: Iri
    does: Iri


@dataclass(frozen=True)
class PreferenceProfile:
    id: Iri
    appliance_states: dict  # appliance Iri -> bool; open-ended, not an enum

    def __post_init__(self):
        if not self.appliance_states:
            raise ValueError(f"preference profile {self.id.written} has no appliances")

    def __hash__(self):
        return hash(self.id)


@dataclass
class HomeModel:
    persons: dict = field(default_factory=dict)       # Iri -> Person
    activities: dict = field(default_factory=dict)    # Iri -> Activity
    preferences: dict = field(default_factory=dict)   # Iri -> PreferenceProfile


def format_double(value: float) -> str:
    """Lexical form for xsd:double; integral values print without a point."""
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def reading_to_triples(reading: EnvironmentReading) -> list[Triple]:
    """Emit the triple shape of one environment record."""
    rid = reading.id
    triples = [
        Triple(rid, P_HUMIDITY, Literal(format_double(reading.humidity), XSD_DOUBLE)),
        Triple(rid, P_TEMPERATURE, Literal(format_double(reading.temperature), XSD_DOUBLE)),
        Triple(rid, P_ILLUMINATION, Literal(format_double(reading.illumination), XSD_DOUBLE)),
        Triple(rid, P_DATE, Literal(reading.date.isoformat(), XSD_DATE)),
        Triple(rid, P_HAS_TIME, reading.time.iri),
    ]
    for person in sorted(reading.persons_present, key=lambda i: i.written):
        triples.append(Triple(rid, P_PERSON_IN, person))
    return triples


def _single_object(store: TripleStore, subject: Iri, predicate: Iri):
    hits = store.match(TriplePattern(subject, predicate, Variable("o")))
    return hits[0].object if hits else None


def _required_double(store: TripleStore, subject: Iri, predicate: Iri) -> float:
    obj = _single_object(store, subject, predicate)
    if obj is None:
        raise ModelError(f"missing property {predicate.local} on {subject.written}")
    if not isinstance(obj, Literal) or obj.datatype != XSD_DOUBLE:
        raise ModelError(f"property {predicate.local} on {subject.written} is not xsd:double")
    return float(obj.lexical)


def triples_to_reading(store: TripleStore, rid: Iri) -> EnvironmentReading:
    """Inverse of reading_to_triples for the record named ``rid``."""
    if not store.match(TriplePattern(rid, Variable("p"), Variable("o"))):
        raise ModelError(f"environment record {rid.written} not found")
    humidity = _required_double(store, rid, P_HUMIDITY)
    temperature = _required_double(store, rid, P_TEMPERATURE)
    illumination = _required_double(store, rid, P_ILLUMINATION)
    date_obj = _single_object(store, rid, P_DATE)
    if date_obj is None:
        raise ModelError(f"missing property Date on {rid.written}")
    if not isinstance(date_obj, Literal) or date_obj.datatype != XSD_DATE:
        raise ModelError(f"property Date on {rid.written} is not xsd:date")
    time_obj = _single_object(store, rid, P_HAS_TIME)
    if time_obj is None:
        raise ModelError(f"missing property hasTime on {rid.written}")
    if not isinstance(time_obj, Iri):
        raise ModelError(f"hasTime on {rid.written} must name a time resource")
    persons = frozenset(
        t.object for t in store.match(TriplePattern(rid, P_PERSON_IN, Variable("o")))
        if isinstance(t.object, Iri)
    )
    try:
        time = TimeOfDay.from_label(time_obj.local)
    except ValueError as exc:
        raise ModelError(str(exc)) from None
    return EnvironmentReading(
        humidity=humidity,
        temperature=temperature,
        illumination=illumination,
        date=Date.fromisoformat(date_obj.lexical),
        time=time,
        persons_present=persons,
    )


def load_home_model(store: TripleStore) -> HomeModel:
    """Collect persons, activities and preference profiles, checking references.

    A person is any subject with both :name and :hasPriority; an activity any
    subject with :When/:Who/:Do; a preference profile any :Do target carrying
    at least one boolean-valued property (the fixture carries no rdf:type
    triples, so discovery is structural).
    """
    model = HomeModel()
    for t in store.match(TriplePattern(Variable("s"), P_PRIORITY, Variable("o"))):
        name_obj = _single_object(store, t.subject, P_NAME)
        if name_obj is None or not isinstance(name_obj, Literal):
            continue
        if not isinstance(t.object, Literal):
            raise ModelError(f"hasPriority on {t.subject.written} must be a literal")
        priority = int(float(t.object.lexical))
        if priority < 1:
            raise ModelError(f"non-positive priority {priority} on {t.subject.written}")
        model.persons[t.subject] = Person(t.subject, name_obj.lexical, priority)

    for t in store.match(TriplePattern(Variable("s"), P_WHEN, Variable("o"))):
        who = _single_object(store, t.subject, P_WHO)
        does = _single_object(store, t.subject, P_DO)
        if who is None or does is None:
            continue
        if not isinstance(t.object, Iri):
            raise ModelError(f"When on {t.subject.written} must name a time resource")
        if not isinstance(who, Iri) or not isinstance(does, Iri):
            raise ModelError(f"Who/Do on {t.subject.written} must be resources")
        try:
            when = TimeOfDay.from_label(t.object.local)
        except ValueError as exc:
            raise ModelError(str(exc)) from None
        model.activities[t.subject] = Activity(t.subject, when, who, does)

    for activity in model.activities.values():
        if activity.who not in model.persons:
            raise ModelError(
                f"activity {activity.id.written} references unknown person "
                f"{activity.who.written}"
            )
        if activity.does not in model.preferences:
            states = {
                t.predicate: t.object.lexical == "true"
                for t in store.match(TriplePattern(activity.does, Variable("p"), Variable("o")))
                if isinstance(t.object, Literal) and t.object.datatype == XSD_BOOLEAN
            }
            if not states:
                raise ModelError(
                    f"activity {activity.id.written} references unknown preference "
                    f"{activity.does.written}"
                )
            model.preferences[activity.does] = PreferenceProfile(activity.does, states)
    return model
