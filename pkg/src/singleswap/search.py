"""Strict-improvement local search and transition graphs.

A problem is anything exposing ``direction``, ``cost``, ``moves``,
``solutions``, ``count`` and ``check``; :class:`FlipProblem` and
:class:`SwapProblem` cover the SAT side and the location side.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter

from . import facility as fl
from . import satcore as sc

BEST = "best"
FIRST = "first"
MIN = "min"
MAX = "max"

DEFAULT_MAX_NODES = 2**20


class GuardExceeded(RuntimeError):
    """The solution space is larger than the configured enumeration guard."""


class FlipProblem:
    """Max-(NAE-)2-SAT under the Flip neighbourhood (maximisation)."""

    direction = MAX

    def __init__(self, inst: sc.SatInstance):
        self.inst = inst
        self._cache: dict = {}

    def check(self, T):
        T = tuple(int(bool(t)) for t in T)
        if len(T) != self.inst.num_vars:
            raise ValueError(f"assignment has length {len(T)}, expected {self.inst.num_vars}")
        return T

    def cost(self, T):
        try:
            return self._cache[T]
        except KeyError:
            value = self._cache[T] = sc.cost(self.inst, T)
            return value

    def moves(self, T):
        return [(("flip", i + 1), sc.flip(T, i)) for i in range(len(T))]

    def solutions(self):
        return sc.all_assignments(self.inst.num_vars)

    def count(self) -> int:
        return 2**self.inst.num_vars

    @staticmethod
    def format_move(move) -> str:
        return f"flip:{move[1]}"

    @staticmethod
    def format_solution(T) -> str:
        return sc.format_assignment(T)


class SwapProblem:
    """MUFL, DKM or DFKM under the single-swap neighbourhood (minimisation)."""

    direction = MIN

    def __init__(self, inst: fl.LocationInstance):
        self.inst = inst
        self._cache: dict = {}

    def check(self, O):
        return fl.check_solution(self.inst, O)

    def cost(self, O):
        try:
            return self._cache[O]
        except KeyError:
            value = self._cache[O] = fl.objective(self.inst, O)
            return value

    def moves(self, O):
        return fl.swap_moves(self.inst, O)

    def solutions(self):
        return fl.all_solutions(self.inst)

    def count(self) -> int:
        return fl.count_solutions(self.inst)

    format_move = staticmethod(fl.format_move)
    format_solution = staticmethod(fl.format_solution)


def make_problem(obj):
    if isinstance(obj, sc.SatInstance):
        return FlipProblem(obj)
    if isinstance(obj, fl.LocationInstance):
        return SwapProblem(obj)
    return obj


def better(direction: str, a, b) -> bool:
    """Is cost ``a`` strictly better than cost ``b``?"""
    return a > b if direction == MAX else a < b


@dataclass
class SearchTrace:
    initial: tuple
    initial_cost: object
    pivot_rule: str
    direction: str
    steps: list = field(default_factory=list)  # (solution, cost, move)

    def __len__(self):
        return len(self.steps)

    @property
    def final(self):
        return self.steps[-1][0] if self.steps else self.initial

    @property
    def final_cost(self):
        return self.steps[-1][1] if self.steps else self.initial_cost

    def solutions(self):
        return [self.initial] + [s for s, _, _ in self.steps]

    def to_csv(self, format_move, format_cost=fl.format_number) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["step", "move", "cost"])
        writer.writerow([0, "init", format_cost(self.initial_cost)])
        for k, (_, c, move) in enumerate(self.steps, start=1):
            writer.writerow([k, format_move(move), format_cost(c)])
        return buf.getvalue()


def improving_move(problem, sol, current, pivot: str = BEST):
    """Return ``(move, neighbour, cost)`` for the pivot's chosen improvement, or None."""
    best = None
    for move, nb in problem.moves(sol):
        c = problem.cost(nb)
        if not better(problem.direction, c, current):
            continue
        if pivot == FIRST:
            return move, nb, c
        # moves arrive in lexicographic order, so only a strictly better cost displaces
        if best is None or better(problem.direction, c, best[2]):
            best = (move, nb, c)
    return best


def local_search(problem, init, pivot: str = BEST, max_steps: int | None = None):
    """Run strict-improvement local search from ``init``.

    Returns ``(local_optimum, trace)``.  Ties are never taken; under BEST the
    lexicographically first of the equally best moves wins.
    """
    if pivot not in (BEST, FIRST):
        raise ValueError(f"pivot must be {BEST!r} or {FIRST!r}")
    problem = make_problem(problem)
    sol = problem.check(init)
    current = problem.cost(sol)
    trace = SearchTrace(sol, current, pivot, problem.direction)
    while max_steps is None or len(trace) < max_steps:
        step = improving_move(problem, sol, current, pivot)
        if step is None:
            break
        move, sol, current = step
        trace.steps.append((sol, current, move))
    return sol, trace


def is_local_optimum(problem, sol) -> bool:
    problem = make_problem(problem)
    return improving_move(problem, sol, problem.cost(sol), FIRST) is None


@dataclass
class TransitionGraph:
    nodes: list
    costs: dict
    arcs: list  # (u, v, move)
    direction: str

    @property
    def sinks(self) -> list:
        has_out = {u for u, _, _ in self.arcs}
        return [u for u in self.nodes if u not in has_out]

    def successors(self) -> dict:
        out = {u: [] for u in self.nodes}
        for u, v, _ in self.arcs:
            out[u].append(v)
        return out

    def is_acyclic(self) -> bool:
        try:
            self.topological_order()
        except CycleError:
            return False
        return True

    def topological_order(self) -> list:
        preds = {u: [] for u in self.nodes}
        for u, v, _ in self.arcs:
            preds[v].append(u)
        return list(TopologicalSorter(preds).static_order())

    def to_csv(self, format_solution) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["from", "to"])
        for u, v, _ in self.arcs:
            writer.writerow([format_solution(u), format_solution(v)])
        return buf.getvalue()


def guard(problem, max_nodes: int = DEFAULT_MAX_NODES) -> int:
    n = problem.count()
    if n > max_nodes:
        raise GuardExceeded(f"solution space has {n} nodes, guard is {max_nodes}")
    return n


def build_transition_graph(problem, max_nodes: int = DEFAULT_MAX_NODES) -> TransitionGraph:
    problem = make_problem(problem)
    guard(problem, max_nodes)
    nodes = list(problem.solutions())
    costs = {u: problem.cost(u) for u in nodes}
    arcs = []
    for u in nodes:
        cu = costs[u]
        for move, v in problem.moves(u):
            if better(problem.direction, costs[v], cu):
                arcs.append((u, v, move))
    return TransitionGraph(nodes, costs, arcs, problem.direction)


def enumerate_local_optima(problem, max_nodes: int = DEFAULT_MAX_NODES) -> list:
    problem = make_problem(problem)
    guard(problem, max_nodes)
    return [u for u in problem.solutions() if is_local_optimum(problem, u)]
