"""Seeded random instance generation for the simulation protocol.

Per agent: 1-2 meetings, 1-2 preferred days and 1-4 pairwise working-group
preferences (partner and day uniform); the minimum-days preference equals the
number of distinct days carrying that agent's day-anchored preferences, and
the day cap is uniform between that minimum and the horizon.  Agents have a
20% chance of 1-2 out-of-office days, drawn so they never contradict any
sampled preference (their own anchored days, or group days naming them as
partner).  Desks per day default to half the agent count, rounded up.

Randomness comes from ``random.Random`` (Mersenne Twister, stable semantics
across platforms and Python versions), so a (seed, config) pair reproduces an
instance byte for byte.  Sampling order is fixed: all preferences for all
agents first, then days out per agent.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from datetime import date, timedelta
from fractions import Fraction

from .model import Agent, Instance, Preference, PrefType, DEFAULT_ORDER

DEFAULT_START = date(2021, 11, 15)  # a Monday


class GenerationExhaustedError(Exception):
    """The configured ranges cannot produce a contradiction-free instance."""


@dataclass(frozen=True)
class GenConfig:
    n_agents: int
    seed: int
    n_days: int = 5
    start_date: date = DEFAULT_START
    desk_fraction: Fraction = Fraction(1, 2)
    meetings_range: tuple[int, int] = (1, 2)
    pref_days_range: tuple[int, int] = (1, 2)
    group_prefs_range: tuple[int, int] = (1, 4)
    days_out_prob: float = 0.2
    days_out_range: tuple[int, int] = (1, 2)
    max_retries: int = 32


def _check_config(config: GenConfig) -> None:
    if config.n_agents < 1:
        raise ValueError("n_agents must be >= 1")
    if config.n_days < 1:
        raise ValueError("n_days must be >= 1")
    if not 0 < config.desk_fraction <= 1:
        raise ValueError("desk_fraction must be in (0, 1]")
    for name in ("meetings_range", "pref_days_range", "group_prefs_range", "days_out_range"):
        lo, hi = getattr(config, name)
        if lo > hi or lo < 0:
            raise ValueError(f"{name} is not a valid range")
    if config.meetings_range[1] > config.n_days or config.pref_days_range[1] > config.n_days:
        raise GenerationExhaustedError("more anchored days requested than the horizon holds")
    if config.days_out_range[0] > config.n_days:
        raise GenerationExhaustedError("days_out_range exceeds the horizon")


def generate(config: GenConfig) -> Instance:
    """Deterministic instance for (seed, config); always passes validation."""
    _check_config(config)
    rng = random.Random(config.seed)
    days = tuple(config.start_date + timedelta(days=i) for i in range(config.n_days))
    agent_ids = [f"emp{i:0{max(2, len(str(config.n_agents - 1)))}d}"
                 for i in range(config.n_agents)]

    meetings: dict[str, list[date]] = {}
    pref_days: dict[str, list[date]] = {}
    groups: dict[str, list[tuple[str, date]]] = {}

    for i, agent in enumerate(agent_ids):
        meetings[agent] = sorted(rng.sample(days, rng.randint(*config.meetings_range)))
        pref_days[agent] = sorted(rng.sample(days, rng.randint(*config.pref_days_range)))
        wanted = rng.randint(*config.group_prefs_range)
        picked: list[tuple[str, date]] = []
        if config.n_agents > 1:
            attempts = 0
            while len(picked) < wanted and attempts < config.max_retries * wanted:
                attempts += 1
                partner = agent_ids[rng.randrange(config.n_agents - 1)]
                if partner == agent:  # the sampled prefix excludes only index n-1
                    partner = agent_ids[config.n_agents - 1]
                pair = (partner, rng.choice(days))
                if pair not in picked:
                    picked.append(pair)
        groups[agent] = picked

    def anchored(agent: str) -> set[date]:
        return set(meetings[agent]) | set(pref_days[agent]) | {d for _, d in groups[agent]}

    partner_anchored: dict[str, set[date]] = {a: set() for a in agent_ids}
    for agent in agent_ids:
        for partner, day in groups[agent]:
            partner_anchored[partner].add(day)

    agents: list[Agent] = []
    for agent in agent_ids:
        n_min = len(anchored(agent))
        max_days = rng.randint(n_min, config.n_days)
        days_out: frozenset[date] = frozenset()
        if rng.random() < config.days_out_prob:
            protected = anchored(agent) | partner_anchored[agent]
            candidates = [d for d in days if d not in protected]
            k = rng.randint(*config.days_out_range)
            chosen: list[date] | None = None
            for _ in range(config.max_retries):
                draw = rng.sample(days, k)
                if all(d in candidates for d in draw):
                    chosen = draw
                    break
            if chosen is None and candidates:
                chosen = rng.sample(candidates, min(k, len(candidates)))
            # An agent whose preferences anchor every day simply has no days
            # out; there is nothing left to reconcile.
            days_out = frozenset(chosen or ())
        agents.append(Agent(id=agent, max_days=max_days, days_out=days_out))

    preferences: list[Preference] = []
    for agent in agent_ids:
        preferences.append(Preference(
            id=f"{agent}_min", type=PrefType.MIN, agent=agent, n=len(anchored(agent))
        ))
        for d in meetings[agent]:
            preferences.append(Preference(
                id=f"{agent}_meet_{d.isoformat()}", type=PrefType.MEET, agent=agent, day=d
            ))
        for partner, d in groups[agent]:
            preferences.append(Preference(
                id=f"{agent}_group_{partner}_{d.isoformat()}",
                type=PrefType.GROUP, agent=agent, partner=partner, day=d,
            ))
        for d in pref_days[agent]:
            preferences.append(Preference(
                id=f"{agent}_pref_{d.isoformat()}", type=PrefType.PREF, agent=agent, day=d
            ))

    n_desks = min(math.ceil(config.desk_fraction * config.n_agents), config.n_agents)
    return Instance(
        time_slots=days,
        n_desks=n_desks,
        agents=tuple(agents),
        preferences=tuple(preferences),
        order=DEFAULT_ORDER,
    )
