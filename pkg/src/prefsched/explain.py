"""Optimal explanations for unsatisfied preferences in a given schedule.

Why was preference u left unsatisfied?  Each assignment "involved" in u must
be justified by exactly one satisfied preference that "affects" it and whose
type is at least as important as u's.  Among all such justifications we
minimize the summed ranks of the satisfied preferences used, via a 0/1
program with one variable per admissible (satisfied preference, assignment)
pair.  Alternative explanations come from re-solving under exclusion cuts.

Involved/affected are domain rules registered per preference type; the desk
domain rules are:

- involved(u): all other agents' assignments when u is a min preference,
  otherwise every assignment on u's day;
- a satisfied min preference affects an assignment when the agents match and
  the agent's available days equal its minimum (attendance cannot shrink);
- meet/pref affect an assignment when agent and day match;
- group affects an assignment when the owner and day match and the partner
  is also assigned that day.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction

from . import ilp
from .model import (
    Assignment,
    Instance,
    Preference,
    PrefType,
    SatReport,
    Schedule,
    is_satisfied,
    partition_preferences,
)


class NoExplanationError(Exception):
    """Some involved assignment admits no satisfied preference as a reason.

    A first-class outcome, not a crash: heavily constrained instances where
    important preferences go unsatisfied regularly end up here.
    """

    def __init__(self, target: str):
        super().__init__(f"no explanation exists for {target!r}")
        self.target = target


class ExplainTimeoutError(Exception):
    """Budget expired before optimality was proven; carries any incumbent."""

    def __init__(self, target: str, incumbent: "Explanation | None" = None):
        super().__init__(f"explanation budget expired for {target!r}")
        self.target = target
        self.incumbent = incumbent


class TargetMismatchError(ValueError):
    """Two explanations do not share the same explained preference."""


@dataclass(frozen=True)
class Reason:
    """<unsatisfied_pref> about <assignment> was unsatisfied because
    <satisfied_pref> was satisfied."""

    satisfied_pref: str
    assignment: Assignment
    unsatisfied_pref: str


@dataclass(frozen=True)
class Explanation:
    target: str
    reasons: frozenset[Reason]
    objective: int


@dataclass(frozen=True)
class ExplanationTask:
    """An instance, a schedule solving it optimally (caller-asserted; nothing
    here consumes optimality), its sat/unsat partition, and the unsatisfied
    preference to explain."""

    instance: Instance
    schedule: Schedule
    sat_report: SatReport
    target: str

    @property
    def target_pref(self) -> Preference:
        return self.instance.preference(self.target)


@dataclass(frozen=True)
class ExplanationEnumeration:
    explanations: tuple[Explanation, ...]
    exhausted: bool
    timed_out: bool


def build_task(instance: Instance, schedule: Schedule, target: str) -> ExplanationTask:
    report = partition_preferences(instance, schedule)
    if target not in report.unsat:
        if target in report.sat:
            raise ValueError(f"{target!r} is satisfied; nothing to explain")
        instance.preference(target)  # raises UnknownReferenceError
    return ExplanationTask(instance=instance, schedule=schedule, sat_report=report, target=target)


# ---------------------------------------------------------------------------
# Domain rules
# ---------------------------------------------------------------------------

def involved(task: ExplanationTask) -> tuple[Assignment, ...]:
    """Assignments that must each be justified, in deterministic order."""
    u = task.target_pref
    if u.type is PrefType.MIN:
        picked = [a for a in task.schedule.assignments if a.agent != u.agent]
    else:
        picked = [a for a in task.schedule.assignments if a.day == u.day]
    agent_pos = {a.id: i for i, a in enumerate(task.instance.agents)}
    return tuple(sorted(picked, key=lambda a: (a.day, agent_pos[a.agent])))


def affected(task: ExplanationTask, pref_id: str, assignment: Assignment) -> bool:
    """Whether a satisfied preference bears on an assignment (see module doc)."""
    p = task.instance.preference(pref_id)
    if p.type is PrefType.MIN:
        return (
            p.agent == assignment.agent
            and task.instance.available_days(p.agent) == (p.n or 0)
        )
    if p.type in (PrefType.MEET, PrefType.PREF):
        return p.agent == assignment.agent and p.day == assignment.day
    if p.type is PrefType.GROUP:
        return (
            p.agent == assignment.agent
            and p.day == assignment.day
            and task.schedule.is_assigned(p.partner, p.day)
        )
    return False


def _admissible(task: ExplanationTask) -> dict[Assignment, list[Preference]]:
    """Per involved assignment: satisfied preferences that may justify it,
    ordered by (rank, id) so the cheapest candidate comes first."""
    order = task.instance.order
    target_rank = order.rank_of(task.target_pref)
    sat_prefs = [task.instance.preference(pid) for pid in sorted(task.sat_report.sat)]
    out: dict[Assignment, list[Preference]] = {}
    for a in involved(task):
        candidates = [
            p for p in sat_prefs
            if order.rank_of(p) <= target_rank and affected(task, p.id, a)
        ]
        candidates.sort(key=lambda p: (order.rank_of(p), p.id))
        out[a] = candidates
    return out


# ---------------------------------------------------------------------------
# The 0/1 program
# ---------------------------------------------------------------------------

def _reason_var(pref_id: str, assignment: Assignment) -> str:
    return f"r|{pref_id}|{assignment.agent}|{assignment.day.isoformat()}"


def build_explanation_milp(
    task: ExplanationTask,
) -> tuple[ilp.IlpProblem, dict[str, tuple[str, Assignment]]]:
    """One binary per admissible (satisfied preference, involved assignment)
    pair, cost = the preference's rank; one exactly-one row per assignment.

    Affectedness and rank admissibility are realized by omitting the pairs
    they forbid rather than emitting their bound rows, so the variable count
    equals the number of admissible pairs.
    """
    order = task.instance.order
    admissible = _admissible(task)
    variables: list[str] = []
    objective: dict[str, int] = {}
    index: dict[str, tuple[str, Assignment]] = {}
    constraints: list[ilp.Constraint] = []
    for a, candidates in admissible.items():
        row: dict[str, int] = {}
        for p in candidates:
            v = _reason_var(p.id, a)
            variables.append(v)
            objective[v] = order.rank_of(p)
            index[v] = (p.id, a)
            row[v] = 1
        constraints.append(ilp.Constraint(row, ilp.EQ, 1))
    problem = ilp.IlpProblem(
        variables=tuple(variables), objective=objective, constraints=tuple(constraints)
    )
    return problem, index


def _decode(
    task: ExplanationTask,
    solution: ilp.IlpSolution,
    index: dict[str, tuple[str, Assignment]],
) -> Explanation:
    reasons = frozenset(
        Reason(satisfied_pref=index[v][0], assignment=index[v][1], unsatisfied_pref=task.target)
        for v, x in solution.assignment.items()
        if x == 1
    )
    return Explanation(
        target=task.target, reasons=reasons, objective=int(solution.objective_value)
    )


def explain(task: ExplanationTask, budget: float | None = None) -> Explanation:
    """The optimal (minimum summed rank) sound and complete explanation."""
    problem, index = build_explanation_milp(task)
    solution = ilp.solve(problem, budget)
    if solution.status is ilp.SolveStatus.INFEASIBLE:
        raise NoExplanationError(task.target)
    if solution.status is ilp.SolveStatus.TIMED_OUT:
        incumbent = _decode(task, solution, index) if solution.assignment else None
        raise ExplainTimeoutError(task.target, incumbent)
    return _decode(task, solution, index)


def enumerate_explanations(
    task: ExplanationTask,
    max_explanations: int = 1000,
    budget: float | None = None,
) -> ExplanationEnumeration:
    """All sound complete explanations in non-decreasing cost order, capped
    by count and budget.  The first element equals ``explain``'s output."""
    problem, index = build_explanation_milp(task)
    run = ilp.enumerate_solutions(problem, max_explanations, budget)
    if not run.solutions:
        if run.timed_out:
            raise ExplainTimeoutError(task.target)
        raise NoExplanationError(task.target)
    explanations = tuple(_decode(task, s, index) for s in run.solutions)
    return ExplanationEnumeration(
        explanations=explanations, exhausted=run.exhausted, timed_out=run.timed_out
    )


# ---------------------------------------------------------------------------
# Predicates and oracles
# ---------------------------------------------------------------------------

def is_complete(e: Explanation, task: ExplanationTask) -> bool:
    """Exactly one reason for every involved assignment."""
    per_assignment: dict[Assignment, int] = {}
    for r in e.reasons:
        per_assignment[r.assignment] = per_assignment.get(r.assignment, 0) + 1
    return all(per_assignment.get(a, 0) == 1 for a in involved(task)) and all(
        count == 1 for count in per_assignment.values()
    )


def is_sound(e: Explanation, task: ExplanationTask) -> bool:
    """Every reason is well defined: its satisfied preference affects the
    assignment, the assignment is involved in the target, and the rank of
    the satisfied preference does not exceed the target's."""
    order = task.instance.order
    target = task.target_pref
    involved_set = set(involved(task))
    for r in e.reasons:
        if r.unsatisfied_pref != task.target:
            return False
        if r.satisfied_pref not in task.sat_report.sat:
            return False
        if r.assignment not in involved_set:
            return False
        if not affected(task, r.satisfied_pref, r.assignment):
            return False
        if not order.rank_ok(task.instance.preference(r.satisfied_pref), target):
            return False
    return True


def greedy_oracle(task: ExplanationTask) -> Explanation:
    """Independent optimum: nothing couples two assignments, so picking the
    minimum-rank admissible preference per assignment (ties by id) must match
    the program's objective whenever both succeed."""
    order = task.instance.order
    reasons = set()
    total = 0
    for a, candidates in _admissible(task).items():
        if not candidates:
            raise NoExplanationError(task.target)
        best = candidates[0]
        reasons.add(Reason(satisfied_pref=best.id, assignment=a, unsatisfied_pref=task.target))
        total += order.rank_of(best)
    return Explanation(target=task.target, reasons=frozenset(reasons), objective=total)


def distance(e1: Explanation, e2: Explanation) -> int:
    """Number of reasons of e1 not present in e2, compared by
    (satisfied preference, assignment) identity."""
    if e1.target != e2.target:
        raise TargetMismatchError(
            f"explanations target different preferences: {e1.target!r} vs {e2.target!r}"
        )
    left = {(r.satisfied_pref, r.assignment) for r in e1.reasons}
    right = {(r.satisfied_pref, r.assignment) for r in e2.reasons}
    return len(left - right)


# ---------------------------------------------------------------------------
# Wire format
# ---------------------------------------------------------------------------

def explanation_to_json(e: Explanation) -> dict:
    ordered = sorted(e.reasons, key=lambda r: (r.assignment.day, r.assignment.agent, r.satisfied_pref))
    return {
        "target": e.target,
        "objective": e.objective,
        "reasons": [
            {"sat_pref": r.satisfied_pref, "agent": r.assignment.agent,
             "day": r.assignment.day.isoformat()}
            for r in ordered
        ],
    }


def explanation_from_json(doc: dict, instance: Instance) -> Explanation:
    from datetime import date

    from .model import SchemaError, _require_keys, _require_mapping

    doc = _require_mapping(doc, "explanation")
    _require_keys(doc, {"target", "objective", "reasons"}, set(), "explanation")
    if not isinstance(doc["reasons"], list):
        raise SchemaError("reasons: expected a list")
    reasons = set()
    for i, raw in enumerate(doc["reasons"]):
        where = f"reasons[{i}]"
        obj = _require_mapping(raw, where)
        _require_keys(obj, {"sat_pref", "agent", "day"}, set(), where)
        reasons.add(Reason(
            satisfied_pref=obj["sat_pref"],
            assignment=Assignment(agent=obj["agent"], day=date.fromisoformat(obj["day"])),
            unsatisfied_pref=doc["target"],
        ))
    return Explanation(target=doc["target"], reasons=frozenset(reasons),
                       objective=int(doc["objective"]))
