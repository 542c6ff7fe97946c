"""Exact solver for 0/1 linear programs with rational coefficients.

Minimization only.  The search is a depth-first branch and bound over the
declared variable order, branching 1 before 0, with integer-exact constraint
propagation.  All feasibility and objective arithmetic is done on integers
(each row and the objective are scaled by the lcm of their denominators), so
optimality claims carry no floating-point tolerance.  On larger problems a
floating-point LP relaxation (HiGHS via scipy) is consulted as an additional
pruning bound; its value is slackened before use so pruning stays sound.

Ties between equal-objective optima resolve to the first optimum in the
1-first depth-first order, i.e. earlier declared variables are preferentially
set to 1.  This equals the lexicographically smallest optimal support except
in the corner case where one optimal support is a sorted prefix of another
(possible only with zero objective coefficients on the extra variables).
"""

from __future__ import annotations

import math
import sys
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

LE, EQ, GE = "<=", "=", ">="
_RELATIONS = (LE, EQ, GE)

# LP relaxation bounding is only worth its overhead when the cheap integer
# bounds are weak, which in this codebase means problems with negative
# objective coefficients (maximization encoded as minimization).
_LP_MIN_FREE_VARS = 28


class MalformedProblemError(ValueError):
    """A constraint or the objective uses an undeclared variable."""


class EmptySupportError(ValueError):
    """An exclusion cut of an all-zero solution; enumeration must stop."""


class SolveStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    TIMED_OUT = "timed_out"


@dataclass(frozen=True)
class Constraint:
    terms: Mapping[str, Fraction | int]
    relation: str
    rhs: Fraction | int


@dataclass(frozen=True)
class IlpProblem:
    variables: tuple[str, ...]
    objective: Mapping[str, Fraction | int]
    constraints: tuple[Constraint, ...] = ()


@dataclass(frozen=True)
class IlpSolution:
    status: SolveStatus
    assignment: dict[str, int] | None = None
    objective_value: Fraction | None = None

    @property
    def support(self) -> frozenset[str]:
        if self.assignment is None:
            return frozenset()
        return frozenset(v for v, x in self.assignment.items() if x == 1)


@dataclass(frozen=True)
class EnumerationRun:
    """Ordered optima of an exclusion-cut enumeration.

    ``exhausted`` means the feasible set was provably emptied; ``timed_out``
    means the budget expired first (the list is a valid prefix either way).
    """

    solutions: tuple[IlpSolution, ...]
    exhausted: bool
    timed_out: bool


class _TimeoutSignal(Exception):
    pass


def _lcm(values: Iterable[int]) -> int:
    out = 1
    for v in values:
        out = out * v // math.gcd(out, v)
    return out


class _Row:
    __slots__ = ("terms", "relation", "rhs")

    def __init__(self, terms: list[tuple[int, int]], relation: str, rhs: int):
        self.terms = terms
        self.relation = relation
        self.rhs = rhs


class _Prepared:
    """Scaled-integer form of a problem plus the indexes the search needs."""

    def __init__(self, problem: IlpProblem):
        names = problem.variables
        if len(set(names)) != len(names):
            raise MalformedProblemError("duplicate variable declarations")
        self.names = names
        self.index = {v: i for i, v in enumerate(names)}
        n = len(names)

        obj = {v: Fraction(c) for v, c in problem.objective.items()}
        for v in obj:
            if v not in self.index:
                raise MalformedProblemError(f"objective uses undeclared variable {v!r}")
        self.obj_scale = _lcm(c.denominator for c in obj.values()) if obj else 1
        self.cost = [0] * n
        for v, c in obj.items():
            self.cost[self.index[v]] = int(c * self.obj_scale)

        self.rows: list[_Row] = []
        self.count_rows: list[tuple[list[int], int]] = []  # all-ones =/>= rows
        for cons in problem.constraints:
            if cons.relation not in _RELATIONS:
                raise MalformedProblemError(f"unknown relation {cons.relation!r}")
            terms = {v: Fraction(c) for v, c in cons.terms.items()}
            for v in terms:
                if v not in self.index:
                    raise MalformedProblemError(f"constraint uses undeclared variable {v!r}")
            rhs = Fraction(cons.rhs)
            scale = _lcm([c.denominator for c in terms.values()] + [rhs.denominator])
            row = _Row(
                [(self.index[v], int(c * scale)) for v, c in sorted(terms.items())],
                cons.relation,
                int(rhs * scale),
            )
            self.rows.append(row)
            if (
                cons.relation in (EQ, GE)
                and terms
                and all(c == 1 for c in terms.values())
                and rhs >= 1
            ):
                self.count_rows.append(([self.index[v] for v in sorted(terms)], int(rhs)))

        self.var_rows: list[list[int]] = [[] for _ in range(n)]
        for ri, row in enumerate(self.rows):
            for j, _ in row.terms:
                self.var_rows[j].append(ri)

        self.lp_enabled = (
            n >= _LP_MIN_FREE_VARS and any(c < 0 for c in self.cost)
        )
        if self.lp_enabled:
            self._build_lp_arrays(n)

    def _build_lp_arrays(self, n: int) -> None:
        ub_rows, ub_rhs, eq_rows, eq_rhs = [], [], [], []
        for row in self.rows:
            dense = np.zeros(n)
            for j, a in row.terms:
                dense[j] = a
            if row.relation == LE:
                ub_rows.append(dense)
                ub_rhs.append(float(row.rhs))
            elif row.relation == GE:
                ub_rows.append(-dense)
                ub_rhs.append(-float(row.rhs))
            else:
                eq_rows.append(dense)
                eq_rhs.append(float(row.rhs))
        self.lp_c = np.array(self.cost, dtype=float)
        self.lp_a_ub = np.vstack(ub_rows) if ub_rows else None
        self.lp_b_ub = np.array(ub_rhs) if ub_rows else None
        self.lp_a_eq = np.vstack(eq_rows) if eq_rows else None
        self.lp_b_eq = np.array(eq_rhs) if eq_rows else None


class _State:
    __slots__ = ("val", "trail", "pending", "queued", "deadline",
                 "best_value", "best_assignment")

    def __init__(self, n: int, n_rows: int, deadline: float | None):
        self.val = [-1] * n
        self.trail: list[int] = []
        self.pending: list[int] = list(range(n_rows))
        self.queued = [True] * n_rows
        self.deadline = deadline
        self.best_value: int | None = None
        self.best_assignment: list[int] | None = None


def _assign(prep: _Prepared, st: _State, i: int, v: int) -> bool:
    cur = st.val[i]
    if cur != -1:
        return cur == v
    st.val[i] = v
    st.trail.append(i)
    for ri in prep.var_rows[i]:
        if not st.queued[ri]:
            st.queued[ri] = True
            st.pending.append(ri)
    return True


def _undo(st: _State, mark: int) -> None:
    while len(st.trail) > mark:
        st.val[st.trail.pop()] = -1


def _clear_queue(st: _State) -> None:
    st.pending.clear()
    for k in range(len(st.queued)):
        st.queued[k] = False


def _propagate(prep: _Prepared, st: _State) -> bool:
    """Drain the pending row queue, fixing forced variables; False = conflict.

    Within one row pass the running lo/hi are not refreshed after a forcing;
    that only makes later checks conservative, and the forcing re-queues the
    row so the fixpoint is still reached.
    """
    val = st.val
    while st.pending:
        ri = st.pending.pop()
        st.queued[ri] = False
        row = prep.rows[ri]
        lo = hi = 0
        free: list[tuple[int, int]] = []
        for j, a in row.terms:
            v = val[j]
            if v == -1:
                if a > 0:
                    hi += a
                else:
                    lo += a
                free.append((j, a))
            else:
                t = a * v
                lo += t
                hi += t
        rel, rhs = row.relation, row.rhs
        if (rel in (LE, EQ) and lo > rhs) or (rel in (GE, EQ) and hi < rhs):
            _clear_queue(st)
            return False
        for j, a in free:
            if val[j] != -1:
                continue
            if rel in (LE, EQ):
                if a > 0 and lo + a > rhs:
                    _assign(prep, st, j, 0)
                    continue
                if a < 0 and lo - a > rhs:
                    _assign(prep, st, j, 1)
                    continue
            if rel in (GE, EQ):
                if a > 0 and hi - a < rhs:
                    _assign(prep, st, j, 1)
                    continue
                if a < 0 and hi + a < rhs:
                    _assign(prep, st, j, 0)
    return True


def _cheap_bound(prep: _Prepared, st: _State) -> tuple[float | int, int]:
    """Integer-exact lower bound plus the number of free variables."""
    val, cost = st.val, prep.cost
    base = 0
    n_free = 0
    for i, v in enumerate(val):
        c = cost[i]
        if v == -1:
            n_free += 1
            if c < 0:
                base += c
        else:
            base += c * v

    bound = base
    used: set[int] = set()
    for var_list, k in prep.count_rows:
        ones = 0
        free: list[int] = []
        usable = True
        for j in var_list:
            v = val[j]
            if v == 1:
                ones += 1
            elif v == -1:
                if j in used or cost[j] < 0:
                    usable = False
                    break
                free.append(j)
        if not usable:
            continue
        need = k - ones
        if need <= 0:
            continue
        if len(free) < need:
            return math.inf, n_free
        free_costs = sorted(cost[j] for j in free)
        bound += sum(free_costs[:need])
        used.update(free)
    return bound, n_free


def _lp_relax(prep: _Prepared, st: _State) -> tuple[int | float | None, "np.ndarray | None"]:
    """LP relaxation under the current fixes: (integer-safe bound, solution)."""
    from scipy.optimize import linprog

    bounds = [(0.0, 1.0) if v == -1 else (float(v), float(v)) for v in st.val]
    res = linprog(
        prep.lp_c,
        A_ub=prep.lp_a_ub, b_ub=prep.lp_b_ub,
        A_eq=prep.lp_a_eq, b_eq=prep.lp_b_eq,
        bounds=bounds, method="highs",
    )
    if res.status == 2:
        return math.inf, None
    if res.status != 0:
        return None, None
    # Slacken before ceiling so an over-reported LP value can never prune a
    # subtree that still holds an improving integer point.
    return math.ceil(res.fun - 1e-6 - 1e-9 * abs(res.fun)), res.x


def _objective_of(prep: _Prepared, val: Sequence[int]) -> int:
    return sum(c * v for c, v in zip(prep.cost, val))


def _exact_feasible(prep: _Prepared, val: Sequence[int]) -> bool:
    for row in prep.rows:
        lhs = sum(a * val[j] for j, a in row.terms)
        if row.relation == LE and lhs > row.rhs:
            return False
        if row.relation == GE and lhs < row.rhs:
            return False
        if row.relation == EQ and lhs != row.rhs:
            return False
    return True


def _try_rounded_leaf(prep: _Prepared, st: _State, x: "np.ndarray",
                      lp_bound: int | float) -> bool:
    """If the LP solution is integral on the free variables and exactly
    feasible, record it; True means the subtree is settled (its optimum is
    the LP bound itself)."""
    candidate = list(st.val)
    for i, v in enumerate(candidate):
        if v != -1:
            continue
        r = round(x[i])
        if abs(x[i] - r) > 1e-7:
            return False
        candidate[i] = int(r)
    if not _exact_feasible(prep, candidate):
        return False
    value = _objective_of(prep, candidate)
    if st.best_value is None or value < st.best_value:
        st.best_value = value
        st.best_assignment = candidate
    # The LP value floors the subtree; a matching integer point closes it.
    return value <= lp_bound


def _dfs(prep: _Prepared, st: _State) -> None:
    if st.deadline is not None and time.monotonic() > st.deadline:
        raise _TimeoutSignal
    mark = len(st.trail)
    if not _propagate(prep, st):
        _undo(st, mark)
        return
    bound, n_free = _cheap_bound(prep, st)
    if bound == math.inf or (st.best_value is not None and bound >= st.best_value):
        _undo(st, mark)
        return

    lp_x = None
    if prep.lp_enabled and n_free >= 12:
        lp_bound, lp_x = _lp_relax(prep, st)
        if lp_bound == math.inf or (
            lp_bound is not None and st.best_value is not None and lp_bound >= st.best_value
        ):
            _undo(st, mark)
            return
        if lp_bound is not None:
            bound = max(bound, lp_bound)
            if lp_x is not None and _try_rounded_leaf(prep, st, lp_x, lp_bound):
                _undo(st, mark)
                return

    branch = None
    first_choice = 1
    if lp_x is not None:
        # Guided dive: branch the most fractional variable toward its LP
        # rounding, ties to the smaller index.  (Engaged only on LP-assisted
        # problems; pure integer searches keep the 1-first lexicographic dive.)
        best_frac = 1e-7
        for i, v in enumerate(st.val):
            if v != -1:
                continue
            frac = 0.5 - abs(lp_x[i] - 0.5)
            if frac > best_frac:
                best_frac = frac
                branch = i
        if branch is not None:
            first_choice = 1 if lp_x[branch] >= 0.5 else 0
    if branch is None:
        branch = next((i for i, v in enumerate(st.val) if v == -1), None)
        if lp_x is not None and branch is not None:
            first_choice = 1 if lp_x[branch] >= 0.5 else 0
    if branch is None:
        value = _objective_of(prep, st.val)
        if st.best_value is None or value < st.best_value:
            st.best_value = value
            st.best_assignment = list(st.val)
        _undo(st, mark)
        return
    for choice in (first_choice, 1 - first_choice):
        sub = len(st.trail)
        _assign(prep, st, branch, choice)
        _dfs(prep, st)
        _undo(st, sub)
        if st.best_value is not None and bound >= st.best_value:
            break
    _undo(st, mark)


def solve(
    problem: IlpProblem,
    budget: float | None = None,
    warm_start: Mapping[str, int] | None = None,
) -> IlpSolution:
    """Minimize over binary assignments; exact optimum, infeasibility proof,
    or (on budget expiry) the best incumbent found so far.

    ``warm_start`` seeds the incumbent with a known feasible assignment (it
    is re-checked exactly); the search then only explores improvements.
    """
    prep = _Prepared(problem)
    n = len(prep.names)
    deadline = time.monotonic() + budget if budget is not None else None
    st = _State(n, len(prep.rows), deadline)
    if warm_start is not None:
        seed = [warm_start[v] for v in prep.names]
        if any(x not in (0, 1) for x in seed) or not _exact_feasible(prep, seed):
            raise ValueError("warm start is not a feasible 0/1 assignment")
        st.best_value = _objective_of(prep, seed)
        st.best_assignment = seed
    sys.setrecursionlimit(max(sys.getrecursionlimit(), 3 * n + 500))

    timed_out = False
    try:
        _dfs(prep, st)
    except _TimeoutSignal:
        timed_out = True

    if st.best_assignment is None:
        return IlpSolution(status=SolveStatus.TIMED_OUT if timed_out else SolveStatus.INFEASIBLE)
    assignment = {prep.names[i]: st.best_assignment[i] for i in range(n)}
    value = Fraction(st.best_value, prep.obj_scale)
    status = SolveStatus.TIMED_OUT if timed_out else SolveStatus.OPTIMAL
    return IlpSolution(status=status, assignment=assignment, objective_value=value)


def add_exclusion_cut(problem: IlpProblem, solution: IlpSolution) -> IlpProblem:
    """Forbid the support of a solution: sum of its 1-variables <= |support|-1."""
    if solution.assignment is None:
        raise EmptySupportError("solution carries no assignment")
    support = [v for v in problem.variables if solution.assignment.get(v) == 1]
    if not support:
        raise EmptySupportError("cannot exclude the empty support")
    cut = Constraint(terms={v: 1 for v in support}, relation=LE, rhs=len(support) - 1)
    return replace(problem, constraints=problem.constraints + (cut,))


def enumerate_solutions(
    problem: IlpProblem,
    max_solutions: int,
    budget: float | None = None,
) -> EnumerationRun:
    """Optima in non-decreasing objective order, each excluding the previous
    supports, until infeasible, the budget expires, or the cap is reached."""
    if max_solutions < 1:
        raise ValueError("max_solutions must be >= 1")
    deadline = time.monotonic() + budget if budget is not None else None
    solutions: list[IlpSolution] = []
    current = problem
    while True:
        remaining: float | None = None
        if deadline is not None:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                return EnumerationRun(tuple(solutions), exhausted=False, timed_out=True)
        sol = solve(current, remaining)
        if sol.status is SolveStatus.INFEASIBLE:
            return EnumerationRun(tuple(solutions), exhausted=True, timed_out=False)
        if sol.status is SolveStatus.TIMED_OUT:
            # An unproven incumbent is not emitted; the prefix stays optimal.
            return EnumerationRun(tuple(solutions), exhausted=False, timed_out=True)
        solutions.append(sol)
        if len(solutions) >= max_solutions:
            return EnumerationRun(tuple(solutions), exhausted=False, timed_out=False)
        try:
            current = add_exclusion_cut(current, sol)
        except EmptySupportError:
            return EnumerationRun(tuple(solutions), exhausted=True, timed_out=False)


def dump_lp(problem: IlpProblem) -> str:
    """Human-readable LP-style dump for cross-checking with external tools."""

    def term_str(terms: Mapping[str, Fraction | int]) -> str:
        parts = []
        for v in problem.variables:
            if v not in terms:
                continue
            c = Fraction(terms[v])
            if c == 0:
                continue
            parts.append(f"{c} {v}")
        return " + ".join(parts) if parts else "0"

    lines = [f"min: {term_str(problem.objective)};"]
    for cons in problem.constraints:
        lines.append(f"st: {term_str(cons.terms)} {cons.relation} {Fraction(cons.rhs)};")
    lines.append(f"bin: {', '.join(problem.variables)};")
    return "\n".join(lines) + "\n"
