"""Render explanations as text: per-reason detail, or reasons aggregated by
day and preference type, optionally anonymized for privacy.

Wording comes from a named template bundle ({placeholder} substitution).
The shipped default bundle reproduces the reference phrasing character for
character; custom bundles load from plain-text files with ``[template name]``
section headers.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import date
from enum import Enum
from pathlib import Path
from typing import Mapping

from .explain import Explanation, Reason
from .model import Instance, Preference, PrefType


class MissingTemplateError(KeyError):
    pass


class RenderMode(Enum):
    DETAILED = "detailed"
    AGGREGATED = "aggregated"


DEFAULT_TEMPLATES: dict[str, str] = {
    # Aggregated frame: constraint clause first, then the reason clauses.
    "frame_aggregated": (
        "The preference could not be satisfied because the {n_desks} available desks "
        "were assigned to other people with more important preferences: {clauses}."
    ),
    "frame_aggregated_empty": (
        "The preference could not be satisfied because the {n_desks} available desks "
        "were assigned to other people with more important preferences."
    ),
    # One clause per (day, type) group of reasons.
    "clause_min": "{agents} due to a minimum number of days per week",
    "clause_min_anon": "{agents} due to minimum number of days per week",
    "clause_min_equal": "{agents} due to an equally important minimum number of days per week",
    "clause_min_equal_anon": "{agents} due to equally important minimum number of days per week",
    "clause_meet": "{agents} due to meetings",
    "clause_meet_equal": "{agents} due to equally important meetings",
    "clause_group": "{agents} due to {n_groups} working group",
    "clause_group_plural": "{agents} due to {n_groups} working groups",
    "clause_group_equal": "{agents} due to {n_groups} equally important working group",
    "clause_group_equal_plural": "{agents} due to {n_groups} equally important working groups",
    "clause_pref": "{agents} due to a preferred day",
    "clause_pref_equal": "{agents} due to an equally important preferred day",
    # Detailed mode: one sentence per reason.
    "reason_detailed": (
        "{sat_agent} was assigned {resource} on {day} instead of {target_agent} "
        "because to satisfy {sat_desc} is more important than to satisfy {target_desc}."
    ),
    "reason_detailed_equal": (
        "{sat_agent} was assigned {resource} on {day} instead of {target_agent} "
        "because to satisfy {sat_desc} is equally important as to satisfy {target_desc}."
    ),
    "desc_min": "a minimum number of {n} days per week",
    "desc_meet": "a meeting on {day}",
    "desc_group": "a working group with {partner} on {day}",
    "desc_group_anon": "a working group on {day}",
    "desc_pref": "a preferred day on {day}",
    "agent_anon": "An employee",
}

_REQUIRED_TEMPLATES = (
    "frame_aggregated", "frame_aggregated_empty",
    "clause_min", "clause_meet", "clause_group", "clause_group_plural", "clause_pref",
    "reason_detailed", "desc_min", "desc_meet", "desc_group", "desc_pref",
)


@dataclass(frozen=True)
class TemplateBundle:
    name: str
    templates: Mapping[str, str]

    def get(self, *candidates: str) -> str:
        for name in candidates:
            if name in self.templates:
                return self.templates[name]
        raise MissingTemplateError(
            f"bundle {self.name!r} has none of: {', '.join(candidates)}"
        )


DEFAULT_BUNDLE = TemplateBundle(name="default", templates=DEFAULT_TEMPLATES)


@dataclass(frozen=True)
class RenderOptions:
    mode: RenderMode = RenderMode.AGGREGATED
    anonymize: bool = False
    templates: TemplateBundle = DEFAULT_BUNDLE


@dataclass(frozen=True)
class ReasonGroup:
    """Reasons sharing a day and a satisfied-preference type."""

    day: date
    type: PrefType
    agents: tuple[str, ...]
    reasons: tuple[Reason, ...]
    group_pairs: int


def aggregate(e: Explanation, instance: Instance) -> list[ReasonGroup]:
    """Partition reasons by (day, type); days ascending, then rank ascending.
    Expects a sound, complete explanation."""
    buckets: dict[tuple[date, PrefType], list[Reason]] = {}
    for r in e.reasons:
        p = instance.preference(r.satisfied_pref)
        buckets.setdefault((r.assignment.day, p.type), []).append(r)
    agent_pos = {a.id: i for i, a in enumerate(instance.agents)}
    order = instance.order
    groups = []
    for (day, ptype), reasons in sorted(
        buckets.items(), key=lambda kv: (kv[0][0], order.rank(kv[0][1]))
    ):
        reasons.sort(key=lambda r: agent_pos[r.assignment.agent])
        agents = tuple(dict.fromkeys(r.assignment.agent for r in reasons))
        pairs = {
            frozenset({p.agent, p.partner})
            for p in (instance.preference(r.satisfied_pref) for r in reasons)
            if p.type is PrefType.GROUP
        }
        groups.append(ReasonGroup(day=day, type=ptype, agents=agents,
                                  reasons=tuple(reasons), group_pairs=len(pairs)))
    return groups


def _join_names(names: tuple[str, ...]) -> str:
    if len(names) == 1:
        return names[0]
    return ", ".join(names[:-1]) + " and " + names[-1]


def _agents_text(group: ReasonGroup, anonymize: bool) -> str:
    if not anonymize:
        return _join_names(group.agents)
    n = len(group.agents)
    return f"{n} employee" if n == 1 else f"{n} employees"


def _clause_template(bundle: TemplateBundle, group: ReasonGroup,
                     equal_rank: bool, anonymize: bool) -> str:
    name = f"clause_{group.type.value}"
    if equal_rank:
        name += "_equal"
    if group.type is PrefType.GROUP and group.group_pairs != 1:
        name += "_plural"
    if anonymize:
        return bundle.get(name + "_anon", name)
    return bundle.get(name)


def render(e: Explanation, opts: RenderOptions, instance: Instance) -> str:
    if opts.mode is RenderMode.AGGREGATED:
        return _render_aggregated(e, opts, instance)
    return _render_detailed(e, opts, instance)


def _render_aggregated(e: Explanation, opts: RenderOptions, instance: Instance) -> str:
    bundle = opts.templates
    target_rank = instance.order.rank_of(instance.preference(e.target))
    groups = aggregate(e, instance)
    if not groups:
        return bundle.get("frame_aggregated_empty").format(n_desks=instance.n_desks)
    clauses = []
    for g in groups:
        equal_rank = instance.order.rank(g.type) == target_rank
        template = _clause_template(bundle, g, equal_rank, opts.anonymize)
        clauses.append(template.format(
            agents=_agents_text(g, opts.anonymize), n_groups=g.group_pairs
        ))
    if opts.anonymize or len(clauses) == 1:
        body = "; ".join(clauses)
    else:
        body = "; ".join(clauses[:-1]) + "; and " + clauses[-1]
    return bundle.get("frame_aggregated").format(n_desks=instance.n_desks, clauses=body)


def _describe(p: Preference, bundle: TemplateBundle, anonymize: bool) -> str:
    name = f"desc_{p.type.value}"
    template = bundle.get(name + "_anon", name) if anonymize else bundle.get(name)
    return template.format(
        n=p.n, day=p.day.isoformat() if p.day else None, partner=p.partner
    )


def _render_detailed(e: Explanation, opts: RenderOptions, instance: Instance) -> str:
    bundle = opts.templates
    target = instance.preference(e.target)
    target_rank = instance.order.rank_of(target)
    agent_pos = {a.id: i for i, a in enumerate(instance.agents)}
    lines = []
    for r in sorted(e.reasons, key=lambda r: (r.assignment.day, agent_pos[r.assignment.agent])):
        p = instance.preference(r.satisfied_pref)
        equal_rank = instance.order.rank_of(p) == target_rank
        template = bundle.get("reason_detailed_equal" if equal_rank else "reason_detailed",
                              "reason_detailed")
        sat_agent = bundle.get("agent_anon") if opts.anonymize else p.agent
        lines.append(template.format(
            sat_agent=sat_agent,
            resource=r.assignment.resource,
            day=r.assignment.day.isoformat(),
            target_agent=target.agent,
            sat_desc=_describe(p, bundle, opts.anonymize),
            target_desc=_describe(target, bundle, anonymize=False),
        ))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Bundle files
# ---------------------------------------------------------------------------

_SECTION_RE = re.compile(r"^\[template ([A-Za-z0-9_]+)\]\s*$")


def parse_bundle(text: str, name: str = "custom") -> TemplateBundle:
    templates: dict[str, str] = {}
    current: str | None = None
    lines: list[str] = []

    def flush() -> None:
        if current is not None:
            templates[current] = "\n".join(lines).strip()

    for line in text.splitlines():
        m = _SECTION_RE.match(line)
        if m:
            flush()
            current = m.group(1)
            lines = []
        elif current is not None:
            lines.append(line)
        elif line.strip():
            raise ValueError(f"content outside any [template ...] section: {line!r}")
    flush()
    missing = [n for n in _REQUIRED_TEMPLATES if n not in templates]
    if missing:
        raise MissingTemplateError(f"bundle {name!r} is missing: {', '.join(missing)}")
    return TemplateBundle(name=name, templates=templates)


def load_bundle(path: str | Path) -> TemplateBundle:
    path = Path(path)
    return parse_bundle(path.read_text(encoding="utf-8"), name=path.stem)


def dump_bundle(bundle: TemplateBundle) -> str:
    sections = []
    for name in sorted(bundle.templates):
        sections.append(f"[template {name}]\n{bundle.templates[name]}\n")
    return "\n".join(sections)


# ---------------------------------------------------------------------------
# Inverse of the default detailed templates (round-trip checks)
# ---------------------------------------------------------------------------

_DETAILED_LINE_RE = re.compile(
    r"^(?P<sat_agent>.+?) was assigned (?P<resource>\S+) on (?P<day>\d{4}-\d{2}-\d{2}) "
    r"instead of (?P<target_agent>.+?) because to satisfy (?P<sat_desc>.+?) is "
    r"(?:more important than|equally important as) to satisfy .+\.$"
)

_DESC_RES = {
    PrefType.MIN: re.compile(r"^a minimum number of (?P<n>\d+) days per week$"),
    PrefType.MEET: re.compile(r"^a meeting on (?P<day>\d{4}-\d{2}-\d{2})$"),
    PrefType.GROUP: re.compile(r"^a working group with (?P<partner>.+) on (?P<day>\d{4}-\d{2}-\d{2})$"),
    PrefType.PREF: re.compile(r"^a preferred day on (?P<day>\d{4}-\d{2}-\d{2})$"),
}


def parse_detailed(text: str, instance: Instance, target: str) -> frozenset[Reason]:
    """Recover reasons from default-bundle detailed, non-anonymized output."""
    reasons = set()
    for line in text.splitlines():
        if not line.strip():
            continue
        m = _DETAILED_LINE_RE.match(line)
        if not m:
            raise ValueError(f"unparseable detailed line: {line!r}")
        sat_agent = m.group("sat_agent")
        day = date.fromisoformat(m.group("day"))
        desc = m.group("sat_desc")
        pref = _resolve_desc(instance, sat_agent, desc)
        from .model import Assignment

        reasons.add(Reason(
            satisfied_pref=pref.id,
            assignment=Assignment(agent=sat_agent, day=day, resource=m.group("resource")),
            unsatisfied_pref=target,
        ))
    return frozenset(reasons)


def _resolve_desc(instance: Instance, agent: str, desc: str) -> Preference:
    for ptype, rx in _DESC_RES.items():
        m = rx.match(desc)
        if not m:
            continue
        fields = m.groupdict()
        matches = [
            p for p in instance.preferences
            if p.type is ptype and p.agent == agent
            and ("n" not in fields or p.n == int(fields["n"]))
            and ("day" not in fields or p.day == date.fromisoformat(fields["day"]))
            and ("partner" not in fields or p.partner == fields["partner"])
        ]
        if len(matches) != 1:
            raise ValueError(f"description resolves to {len(matches)} preferences: {desc!r}")
        return matches[0]
    raise ValueError(f"unparseable preference description: {desc!r}")
