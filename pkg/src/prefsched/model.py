"""Domain model for preference-driven desk scheduling.

Instances describe a pool of identical desks shared by a set of agents over a
horizon of calendar days.  Agents carry hard constraints (a cap on office days
and days they are out) and typed preferences; the planner fixes a total order
over the preference types.  This module owns the JSON wire formats, instance
validation, preference-satisfaction semantics and the sat/unsat partition of
a schedule.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date
from enum import Enum
from functools import cached_property
from typing import Any, Iterable, Mapping

WEEKDAY_NAMES = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")

DESK = "desk"


class SchemaError(ValueError):
    """Raised when a JSON document does not match the expected shape."""


class UnknownReferenceError(SchemaError):
    """Raised when a document references an agent or day that does not exist."""


class UnknownTypeError(KeyError):
    """Raised when a preference type is not part of the declared order."""


class InfeasibleScheduleError(ValueError):
    """Raised when a schedule violates the hard constraints of its instance."""


def weekday_name(day: date) -> str:
    return WEEKDAY_NAMES[day.weekday()]


class PrefType(str, Enum):
    MIN = "min"
    MEET = "meet"
    GROUP = "group"
    PREF = "pref"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass(frozen=True)
class Agent:
    """An agent with a per-horizon day cap and out-of-office days."""

    id: str
    max_days: int
    days_out: frozenset[date] = frozenset()


@dataclass(frozen=True)
class Preference:
    """One typed preference:

    - min:   attend at least ``n`` days over the horizon
    - meet:  attend on ``day`` (an important meeting)
    - group: attend on ``day`` together with ``partner``
    - pref:  attend on ``day`` (personal convenience)
    """

    id: str
    type: PrefType
    agent: str
    n: int | None = None
    day: date | None = None
    partner: str | None = None


@dataclass(frozen=True)
class PreferenceOrder:
    """Total order over preference types, most important first.

    The rank of a type is its 1-based position; smaller is more important.
    """

    types: tuple[PrefType, ...]

    def rank(self, type_tag: PrefType) -> int:
        try:
            return self.types.index(type_tag) + 1
        except ValueError:
            raise UnknownTypeError(type_tag) from None

    def rank_of(self, p: Preference) -> int:
        return self.rank(p.type)

    def rank_ok(self, p: Preference, u: Preference) -> bool:
        """True when ``p``'s type is at least as important as ``u``'s."""
        return self.rank_of(p) <= self.rank_of(u)


DEFAULT_ORDER = PreferenceOrder((PrefType.MIN, PrefType.MEET, PrefType.GROUP, PrefType.PREF))


@dataclass(frozen=True)
class Instance:
    """A full scheduling instance.

    ``occupancy`` selects the desk-occupancy rule: "exact" fills every desk
    every day, "at_most" allows desks to stay empty.
    """

    time_slots: tuple[date, ...]
    n_desks: int
    agents: tuple[Agent, ...]
    preferences: tuple[Preference, ...]
    order: PreferenceOrder = DEFAULT_ORDER
    occupancy: str = "exact"

    @cached_property
    def agents_by_id(self) -> dict[str, Agent]:
        return {a.id: a for a in self.agents}

    @cached_property
    def preferences_by_id(self) -> dict[str, Preference]:
        return {p.id: p for p in self.preferences}

    def agent(self, agent_id: str) -> Agent:
        try:
            return self.agents_by_id[agent_id]
        except KeyError:
            raise UnknownReferenceError(f"unknown agent id: {agent_id!r}") from None

    def preference(self, pref_id: str) -> Preference:
        try:
            return self.preferences_by_id[pref_id]
        except KeyError:
            raise UnknownReferenceError(f"unknown preference id: {pref_id!r}") from None

    def available_days(self, agent_id: str) -> int:
        """Days of the horizon on which the agent is not out of office."""
        return len(self.time_slots) - len(self.agent(agent_id).days_out)


@dataclass(frozen=True)
class Assignment:
    """One agent holding one desk on one day."""

    agent: str
    day: date
    resource: str = DESK


@dataclass(frozen=True)
class Schedule:
    assignments: frozenset[Assignment]

    @cached_property
    def days_by_agent(self) -> dict[str, frozenset[date]]:
        acc: dict[str, set[date]] = {}
        for a in self.assignments:
            acc.setdefault(a.agent, set()).add(a.day)
        return {agent: frozenset(days) for agent, days in acc.items()}

    @cached_property
    def agents_by_day(self) -> dict[date, frozenset[str]]:
        acc: dict[date, set[str]] = {}
        for a in self.assignments:
            acc.setdefault(a.day, set()).add(a.agent)
        return {day: frozenset(agents) for day, agents in acc.items()}

    def is_assigned(self, agent_id: str, day: date) -> bool:
        return day in self.days_by_agent.get(agent_id, frozenset())

    def attended_days(self, agent_id: str) -> frozenset[date]:
        return self.days_by_agent.get(agent_id, frozenset())


@dataclass(frozen=True)
class SatReport:
    """Disjoint, exhaustive partition of an instance's preference ids."""

    sat: frozenset[str]
    unsat: frozenset[str]


@dataclass(frozen=True)
class Violation:
    pref_id: str
    code: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


# ---------------------------------------------------------------------------
# Satisfaction semantics
# ---------------------------------------------------------------------------

def is_satisfied(p: Preference, schedule: Schedule) -> bool:
    """Whether one preference holds under a schedule.

    min: the agent attends at least ``n`` distinct days (vacuous for n=0);
    meet/pref: the agent attends ``day``; group: both agents attend ``day``.
    """
    if p.type is PrefType.MIN:
        return len(schedule.attended_days(p.agent)) >= (p.n or 0)
    if p.type in (PrefType.MEET, PrefType.PREF):
        return schedule.is_assigned(p.agent, p.day)
    if p.type is PrefType.GROUP:
        return schedule.is_assigned(p.agent, p.day) and schedule.is_assigned(p.partner, p.day)
    raise UnknownTypeError(p.type)


def check_schedule(instance: Instance, schedule: Schedule) -> list[str]:
    """Hard-constraint violations of a schedule, empty when feasible."""
    problems: list[str] = []
    slots = set(instance.time_slots)
    for a in schedule.assignments:
        if a.agent not in instance.agents_by_id:
            problems.append(f"assignment references unknown agent {a.agent!r}")
        if a.day not in slots:
            problems.append(f"assignment references unknown day {a.day.isoformat()}")
    if problems:
        return problems
    for day in instance.time_slots:
        count = len(schedule.agents_by_day.get(day, frozenset()))
        if instance.occupancy == "exact" and count != instance.n_desks:
            problems.append(
                f"{day.isoformat()}: {count} desks occupied, expected {instance.n_desks}"
            )
        elif count > instance.n_desks:
            problems.append(
                f"{day.isoformat()}: {count} desks occupied, capacity {instance.n_desks}"
            )
    for agent in instance.agents:
        attended = schedule.attended_days(agent.id)
        if len(attended) > agent.max_days:
            problems.append(
                f"{agent.id}: assigned {len(attended)} days, max {agent.max_days}"
            )
        out = attended & agent.days_out
        for day in sorted(out):
            problems.append(f"{agent.id}: assigned on out-of-office day {day.isoformat()}")
    return problems


def partition_preferences(instance: Instance, schedule: Schedule) -> SatReport:
    """Split the instance's preferences into satisfied and unsatisfied sets."""
    problems = check_schedule(instance, schedule)
    if problems:
        raise InfeasibleScheduleError("; ".join(problems))
    sat, unsat = set(), set()
    for p in instance.preferences:
        (sat if is_satisfied(p, schedule) else unsat).add(p.id)
    return SatReport(sat=frozenset(sat), unsat=frozenset(unsat))


def rank(order: PreferenceOrder, p: Preference) -> int:
    return order.rank_of(p)


def rank_ok(order: PreferenceOrder, p: Preference, u: Preference) -> bool:
    return order.rank_ok(p, u)


# ---------------------------------------------------------------------------
# Instance validation (contradictions between preferences and constraints)
# ---------------------------------------------------------------------------

def validate(instance: Instance) -> ValidationReport:
    """Report every preference that contradicts its agent's own constraints
    or the planner's.  An instance is admitted to solving iff the report is
    empty; parse-level/schema problems raise instead of being reported here.
    """
    violations: list[Violation] = []

    def flag(p: Preference, code: str, message: str) -> None:
        violations.append(Violation(pref_id=p.id, code=code, message=message))

    for p in instance.preferences:
        agent = instance.agent(p.agent)
        if p.type is PrefType.MIN:
            available = instance.available_days(p.agent)
            if (p.n or 0) > available:
                flag(p, "min_exceeds_available_days",
                     f"min {p.n} exceeds horizon ({available} available days)")
            if (p.n or 0) > agent.max_days:
                flag(p, "min_exceeds_max_days",
                     f"min {p.n} exceeds the agent's own max of {agent.max_days} days")
        elif p.type is PrefType.MEET:
            if p.day in agent.days_out:
                flag(p, "meet_on_day_out",
                     f"meeting on out-of-office day {p.day.isoformat()}")
        elif p.type is PrefType.PREF:
            if p.day in agent.days_out:
                flag(p, "pref_on_day_out",
                     f"preferred day {p.day.isoformat()} is an out-of-office day")
        elif p.type is PrefType.GROUP:
            partner = instance.agent(p.partner)
            if p.day in agent.days_out or p.day in partner.days_out:
                flag(p, "group_on_day_out",
                     f"group day {p.day.isoformat()} is an out-of-office day for "
                     f"{p.agent if p.day in agent.days_out else p.partner}")
    return ValidationReport(violations=tuple(violations))


# ---------------------------------------------------------------------------
# JSON wire formats
# ---------------------------------------------------------------------------
#
# Instance document:
#   { "time_slots": ["YYYY-MM-DD", ...], "n_desks": int,
#     "order": ["min", "meet", "group", "pref"],
#     "agents": [{"id": str, "max_days": int, "days_out": [date]}],
#     "preferences": [{"id": str, "type": "min|meet|group|pref",
#                      "agent": str, "n": int?, "day": date?, "with": str?}],
#     "occupancy": "exact"|"at_most"?  (optional, default "exact") }
#
# Schedule document:  { "assignments": [{"agent": str, "day": date}] }
#
# Unknown fields are rejected everywhere.

_PREF_PAYLOAD_FIELDS = {
    PrefType.MIN: {"n"},
    PrefType.MEET: {"day"},
    PrefType.PREF: {"day"},
    PrefType.GROUP: {"day", "with"},
}


def _require_mapping(value: Any, where: str) -> Mapping[str, Any]:
    if not isinstance(value, Mapping):
        raise SchemaError(f"{where}: expected an object, got {type(value).__name__}")
    return value


def _require_keys(obj: Mapping[str, Any], required: set[str], optional: set[str], where: str) -> None:
    keys = set(obj)
    missing = required - keys
    if missing:
        raise SchemaError(f"{where}: missing field(s) {sorted(missing)}")
    extra = keys - required - optional
    if extra:
        raise SchemaError(f"{where}: unknown field(s) {sorted(extra)}")


def _parse_date(value: Any, where: str) -> date:
    if not isinstance(value, str):
        raise SchemaError(f"{where}: expected an ISO date string")
    try:
        return date.fromisoformat(value)
    except ValueError as exc:
        raise SchemaError(f"{where}: {exc}") from None


def _parse_int(value: Any, where: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"{where}: expected an integer")
    if minimum is not None and value < minimum:
        raise SchemaError(f"{where}: must be >= {minimum}")
    return value


def _parse_str(value: Any, where: str) -> str:
    if not isinstance(value, str) or not value:
        raise SchemaError(f"{where}: expected a non-empty string")
    return value


def _parse_order(raw: Any) -> PreferenceOrder:
    if not isinstance(raw, list) or not raw:
        raise SchemaError("order: expected a non-empty list of preference types")
    types = []
    for tag in raw:
        try:
            types.append(PrefType(_parse_str(tag, "order entry")))
        except ValueError:
            raise SchemaError(f"order: unknown preference type {tag!r}") from None
    if len(set(types)) != len(types):
        raise SchemaError("order: each preference type may appear only once")
    return PreferenceOrder(tuple(types))


def instance_from_json(doc: Any) -> Instance:
    """Build an Instance from a decoded JSON document (strict schema)."""
    doc = _require_mapping(doc, "instance")
    _require_keys(doc, {"time_slots", "n_desks", "order", "agents", "preferences"},
                  {"occupancy"}, "instance")

    raw_slots = doc["time_slots"]
    if not isinstance(raw_slots, list) or not raw_slots:
        raise SchemaError("time_slots: expected a non-empty list of dates")
    slots = [_parse_date(s, "time_slots entry") for s in raw_slots]
    if len(set(slots)) != len(slots):
        raise SchemaError("time_slots: dates must be distinct")
    time_slots = tuple(sorted(slots))
    slot_set = set(time_slots)

    order = _parse_order(doc["order"])

    if not isinstance(doc["agents"], list) or not doc["agents"]:
        raise SchemaError("agents: expected a non-empty list")
    agents = []
    for i, raw in enumerate(doc["agents"]):
        where = f"agents[{i}]"
        obj = _require_mapping(raw, where)
        _require_keys(obj, {"id", "max_days", "days_out"}, set(), where)
        agent_id = _parse_str(obj["id"], f"{where}.id")
        max_days = _parse_int(obj["max_days"], f"{where}.max_days", minimum=0)
        if max_days > len(time_slots):
            raise SchemaError(f"{where}.max_days: exceeds the {len(time_slots)}-day horizon")
        if not isinstance(obj["days_out"], list):
            raise SchemaError(f"{where}.days_out: expected a list of dates")
        days_out = frozenset(_parse_date(d, f"{where}.days_out entry") for d in obj["days_out"])
        for d in days_out:
            if d not in slot_set:
                raise UnknownReferenceError(
                    f"{where}.days_out: {d.isoformat()} is not an instance time slot")
        agents.append(Agent(id=agent_id, max_days=max_days, days_out=days_out))
    agent_ids = [a.id for a in agents]
    if len(set(agent_ids)) != len(agent_ids):
        raise SchemaError("agents: ids must be distinct")
    agent_set = set(agent_ids)

    n_desks = _parse_int(doc["n_desks"], "n_desks", minimum=1)
    if n_desks > len(agents):
        raise SchemaError(f"n_desks: {n_desks} desks but only {len(agents)} agents")

    if not isinstance(doc["preferences"], list):
        raise SchemaError("preferences: expected a list")
    preferences = []
    for i, raw in enumerate(doc["preferences"]):
        where = f"preferences[{i}]"
        obj = _require_mapping(raw, where)
        try:
            ptype = PrefType(_parse_str(obj.get("type"), f"{where}.type"))
        except ValueError:
            raise SchemaError(f"{where}.type: unknown preference type {obj.get('type')!r}") from None
        payload = _PREF_PAYLOAD_FIELDS[ptype]
        _require_keys(obj, {"id", "type", "agent"} | payload, set(), where)
        pref_id = _parse_str(obj["id"], f"{where}.id")
        agent_id = _parse_str(obj["agent"], f"{where}.agent")
        if agent_id not in agent_set:
            raise UnknownReferenceError(f"{where}.agent: unknown agent {agent_id!r}")
        n = day = partner = None
        if "n" in payload:
            n = _parse_int(obj["n"], f"{where}.n", minimum=1)
        if "day" in payload:
            day = _parse_date(obj["day"], f"{where}.day")
            if day not in slot_set:
                raise UnknownReferenceError(
                    f"{where}.day: {day.isoformat()} is not an instance time slot")
        if "with" in payload:
            partner = _parse_str(obj["with"], f"{where}.with")
            if partner not in agent_set:
                raise UnknownReferenceError(f"{where}.with: unknown agent {partner!r}")
            if partner == agent_id:
                raise SchemaError(f"{where}: a group preference needs two distinct agents")
        preferences.append(Preference(id=pref_id, type=ptype, agent=agent_id,
                                      n=n, day=day, partner=partner))
    pref_ids = [p.id for p in preferences]
    if len(set(pref_ids)) != len(pref_ids):
        raise SchemaError("preferences: ids must be distinct")

    return Instance(
        time_slots=time_slots,
        n_desks=n_desks,
        agents=tuple(agents),
        preferences=tuple(preferences),
        order=order,
        occupancy=_parse_occupancy(doc.get("occupancy", "exact")),
    )


def _parse_occupancy(value: Any) -> str:
    if value not in ("exact", "at_most"):
        raise SchemaError(f"occupancy: expected 'exact' or 'at_most', got {value!r}")
    return value


def parse_instance(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from None
    return instance_from_json(doc)


def instance_to_json(instance: Instance) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "time_slots": [d.isoformat() for d in instance.time_slots],
        "n_desks": instance.n_desks,
        "order": [t.value for t in instance.order.types],
        "agents": [
            {"id": a.id, "max_days": a.max_days,
             "days_out": [d.isoformat() for d in sorted(a.days_out)]}
            for a in instance.agents
        ],
        "preferences": [_pref_to_json(p) for p in instance.preferences],
    }
    if instance.occupancy != "exact":
        doc["occupancy"] = instance.occupancy
    return doc


def _pref_to_json(p: Preference) -> dict[str, Any]:
    obj: dict[str, Any] = {"id": p.id, "type": p.type.value, "agent": p.agent}
    if p.n is not None:
        obj["n"] = p.n
    if p.day is not None:
        obj["day"] = p.day.isoformat()
    if p.partner is not None:
        obj["with"] = p.partner
    return obj


def serialize_instance(instance: Instance) -> str:
    return json.dumps(instance_to_json(instance), indent=2) + "\n"


def schedule_from_json(doc: Any, instance: Instance | None = None) -> Schedule:
    doc = _require_mapping(doc, "schedule")
    _require_keys(doc, {"assignments"}, set(), "schedule")
    if not isinstance(doc["assignments"], list):
        raise SchemaError("assignments: expected a list")
    assignments = set()
    for i, raw in enumerate(doc["assignments"]):
        where = f"assignments[{i}]"
        obj = _require_mapping(raw, where)
        _require_keys(obj, {"agent", "day"}, set(), where)
        agent = _parse_str(obj["agent"], f"{where}.agent")
        day = _parse_date(obj["day"], f"{where}.day")
        if instance is not None:
            if agent not in instance.agents_by_id:
                raise UnknownReferenceError(f"{where}.agent: unknown agent {agent!r}")
            if day not in set(instance.time_slots):
                raise UnknownReferenceError(
                    f"{where}.day: {day.isoformat()} is not an instance time slot")
        assignments.add(Assignment(agent=agent, day=day))
    return Schedule(assignments=frozenset(assignments))


def parse_schedule(text: str, instance: Instance | None = None) -> Schedule:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from None
    return schedule_from_json(doc, instance)


def schedule_to_json(schedule: Schedule) -> dict[str, Any]:
    ordered = sorted(schedule.assignments, key=lambda a: (a.day, a.agent))
    return {"assignments": [{"agent": a.agent, "day": a.day.isoformat()} for a in ordered]}


def serialize_schedule(schedule: Schedule) -> str:
    return json.dumps(schedule_to_json(schedule), indent=2) + "\n"


def sat_report_to_json(report: SatReport) -> dict[str, Any]:
    return {"sat": sorted(report.sat), "unsat": sorted(report.unsat)}
