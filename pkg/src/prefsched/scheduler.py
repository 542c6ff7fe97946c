"""Optimal schedules under a total order of preference types.

The optimum is defined by filter composition: among feasible schedules, keep
those maximizing the satisfied count of the most important type, then of the
next type within that set, and so on.  That composition is realized as one
ILP solve per type, pinning each earlier type's satisfied count with an
equality row before maximizing the next.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import date
from fractions import Fraction

from . import ilp
from .model import (
    Assignment,
    Instance,
    Preference,
    PrefType,
    SatReport,
    Schedule,
    partition_preferences,
    validate,
)


class ScheduleInfeasibleError(Exception):
    """No feasible schedule exists for the instance."""


class InfeasibleByConstructionError(ScheduleInfeasibleError):
    """Aggregate agent availability cannot fill the desks under exact occupancy."""


class ScheduleTimeoutError(Exception):
    """The solve budget expired; carries the 1-based stage reached."""

    def __init__(self, stage: int, type_tag: PrefType):
        super().__init__(f"budget expired in stage {stage} ({type_tag.value})")
        self.stage = stage
        self.type_tag = type_tag


@dataclass(frozen=True)
class LexResult:
    schedule: Schedule
    per_type_counts: tuple[tuple[PrefType, int], ...]
    sat_report: SatReport


def y_var(agent_id: str, day: date) -> str:
    return f"y|{agent_id}|{day.isoformat()}"


def z_var(pref_id: str) -> str:
    return f"z|{pref_id}"


def build_feasibility_model(instance: Instance) -> ilp.IlpProblem:
    """Binary attendance model: one y per (agent, day), desk occupancy per
    day, per-agent day caps, and zero rows for out-of-office days."""
    horizon = len(instance.time_slots)
    effective = sum(
        min(a.max_days, horizon - len(a.days_out)) for a in instance.agents
    )
    if instance.occupancy == "exact" and effective < instance.n_desks * horizon:
        raise InfeasibleByConstructionError(
            f"agents can fill at most {effective} of {instance.n_desks * horizon} desk-days"
        )

    variables = tuple(
        y_var(a.id, day) for a in instance.agents for day in instance.time_slots
    )
    constraints: list[ilp.Constraint] = []
    occupancy_rel = ilp.EQ if instance.occupancy == "exact" else ilp.LE
    for day in instance.time_slots:
        terms = {y_var(a.id, day): 1 for a in instance.agents}
        constraints.append(ilp.Constraint(terms, occupancy_rel, instance.n_desks))
    for a in instance.agents:
        terms = {y_var(a.id, day): 1 for day in instance.time_slots}
        constraints.append(ilp.Constraint(terms, ilp.LE, a.max_days))
    for a in instance.agents:
        for day in sorted(a.days_out):
            constraints.append(ilp.Constraint({y_var(a.id, day): 1}, ilp.LE, 0))
    return ilp.IlpProblem(variables=variables, objective={}, constraints=tuple(constraints))


def attach_satisfaction_indicators(
    problem: ilp.IlpProblem, instance: Instance, type_tag: PrefType
) -> ilp.IlpProblem:
    """Add one binary z per preference of the given type, upper-bounded by
    the attendance pattern that satisfies it.  z is only pushed to 1 by
    maximization pressure, so reported satisfaction is recomputed from y
    after solving rather than read off the indicators."""
    new_vars = list(problem.variables)
    new_cons = list(problem.constraints)
    for p in instance.preferences:
        if p.type is not type_tag:
            continue
        z = z_var(p.id)
        new_vars.append(z)
        if p.type is PrefType.MIN:
            terms: dict[str, int] = {y_var(p.agent, day): 1 for day in instance.time_slots}
            terms[z] = -(p.n or 0)
            new_cons.append(ilp.Constraint(terms, ilp.GE, 0))
        elif p.type in (PrefType.MEET, PrefType.PREF):
            new_cons.append(ilp.Constraint({z: 1, y_var(p.agent, p.day): -1}, ilp.LE, 0))
        elif p.type is PrefType.GROUP:
            new_cons.append(ilp.Constraint({z: 1, y_var(p.agent, p.day): -1}, ilp.LE, 0))
            new_cons.append(ilp.Constraint({z: 1, y_var(p.partner, p.day): -1}, ilp.LE, 0))
    return ilp.IlpProblem(
        variables=tuple(new_vars), objective=problem.objective, constraints=tuple(new_cons)
    )


def solve_lexicographic(instance: Instance, budget: float | None = None) -> LexResult:
    """Stage-by-stage lexicographic optimum over the instance's type order."""
    report = validate(instance)
    if not report.ok:
        details = "; ".join(v.message for v in report.violations)
        raise ValueError(f"instance fails validation: {details}")

    problem = build_feasibility_model(instance)
    stage_budget = budget / len(instance.order.types) if budget is not None else None
    counts: list[tuple[PrefType, int]] = []
    solution: ilp.IlpSolution | None = None

    for stage, type_tag in enumerate(instance.order.types, start=1):
        problem = attach_satisfaction_indicators(problem, instance, type_tag)
        stage_zs = [z_var(p.id) for p in instance.preferences if p.type is type_tag]
        # Branch the stage's indicator variables first: fixing them integral
        # before the attendance pattern closes the LP relaxation gap early.
        stage_set = set(stage_zs)
        branch_order = tuple(stage_zs) + tuple(
            v for v in problem.variables if v not in stage_set
        )
        staged = replace(
            problem,
            variables=branch_order,
            objective={z: Fraction(-1) for z in stage_zs},
        )
        warm = _extend_previous(instance, solution, staged)
        solution = ilp.solve(staged, stage_budget, warm_start=warm)
        if solution.status is ilp.SolveStatus.TIMED_OUT:
            raise ScheduleTimeoutError(stage, type_tag)
        if solution.status is ilp.SolveStatus.INFEASIBLE:
            raise ScheduleInfeasibleError("no schedule satisfies the hard constraints")
        achieved = -int(solution.objective_value)
        counts.append((type_tag, achieved))
        if stage_zs:
            problem = replace(
                problem,
                constraints=problem.constraints
                + (ilp.Constraint({z: 1 for z in stage_zs}, ilp.EQ, achieved),),
            )

    assert solution is not None
    assignments = frozenset(
        Assignment(agent=a.id, day=day)
        for a in instance.agents
        for day in instance.time_slots
        if solution.assignment[y_var(a.id, day)] == 1
    )
    schedule = Schedule(assignments=assignments)
    sat_report = partition_preferences(instance, schedule)
    recounted = _counts_from_report(instance, sat_report)
    assert recounted == tuple(counts), "indicator counts diverge from re-evaluated satisfaction"
    return LexResult(schedule=schedule, per_type_counts=recounted, sat_report=sat_report)


def _counts_from_report(
    instance: Instance, report: SatReport
) -> tuple[tuple[PrefType, int], ...]:
    by_type = {t: 0 for t in instance.order.types}
    for p in instance.preferences:
        if p.id in report.sat:
            by_type[p.type] += 1
    return tuple((t, by_type[t]) for t in instance.order.types)


def lex_result_to_json(result: LexResult) -> dict:
    from .model import sat_report_to_json, schedule_to_json

    doc = schedule_to_json(result.schedule)
    return {
        "schedule": doc,
        "counts": [[t.value, c] for t, c in result.per_type_counts],
        **sat_report_to_json(result.sat_report),
    }
