import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from singleswap import facility as fl
from singleswap import reduce as rd
from singleswap import satcore as sc
from singleswap import search as se

ONE_CLAUSE = sc.SatInstance(2, ((1, 2),), (1,))


def test_flip_search_best():
    final, trace = se.local_search(ONE_CLAUSE, (0, 0), se.BEST)
    assert final == (1, 0)
    assert len(trace) == 1
    assert trace.to_csv(se.FlipProblem.format_move).splitlines() == [
        "step,move,cost", "0,init,0", "1,flip:1,1"]


def test_already_optimal_gives_empty_trace():
    final, trace = se.local_search(ONE_CLAUSE, (1, 1))
    assert final == (1, 1) and len(trace) == 0


def test_mufl_first_move_improves():
    art = rd.reduce_sat_to_mufl(ONE_CLAUSE)
    inst = art.target
    init = tuple(inst.point(x) for x in ("x1", "~x1", "x2"))
    for pivot in (se.BEST, se.FIRST):
        final, trace = se.local_search(inst, init, pivot)
        assert trace.initial_cost == Fraction(25, 3)
        assert trace.steps[0][1] <= Fraction(22, 3)
        assert trace.final_cost == Fraction(22, 3)
        assert rd.map_solution_back(art, final) in {(1, 0), (0, 1), (1, 1)}
    final, _ = se.local_search(inst, init, se.BEST)
    assert rd.map_solution_back(art, final) == (0, 1)  # dropping x1 is the first tied move


def test_infeasible_init():
    with pytest.raises(fl.InfeasibleSolution):
        se.local_search(rd.reduce_sat_to_dkm(ONE_CLAUSE).target, (0,))
    with pytest.raises(ValueError):
        se.local_search(ONE_CLAUSE, (0, 0, 0))


def test_transition_graph_sat():
    g = se.build_transition_graph(ONE_CLAUSE)
    assert len(g.nodes) == 4
    assert sorted(g.sinks) == [(0, 1), (1, 0), (1, 1)]
    assert sorted((u, v) for u, v, _ in g.arcs) == [((0, 0), (0, 1)), ((0, 0), (1, 0))]
    assert g.to_csv(se.FlipProblem.format_solution).splitlines()[0] == "from,to"


def test_transition_graph_single_variable():
    g = se.build_transition_graph(sc.SatInstance(1, ((1, 1),), (2,)))
    assert len(g.nodes) == 2 and len(g.arcs) <= 1


def test_dkm_sinks_reasonable():
    art = rd.reduce_sat_to_dkm(ONE_CLAUSE)
    g = se.build_transition_graph(art.target)
    assert len(g.nodes) == 10
    assert g.sinks and all(fl.is_reasonable(art.target, s) for s in g.sinks)


def test_enumerate_local_optima():
    assert len(se.enumerate_local_optima(ONE_CLAUSE)) == 3
    dominated = sc.SatInstance(2, ((1, 2), (-1, -2)), (1, 10))
    optima = se.enumerate_local_optima(dominated)
    assert all(sc.sat_cost(dominated, T) == 11 or sc.sat_cost(dominated, T) >= 10 for T in optima)
    assert (1, 0) in optima and (0, 1) in optima
    art = rd.reduce_sat_to_mufl(ONE_CLAUSE)
    assert se.SwapProblem(art.target).count() == 15
    assert all(fl.is_reasonable(art.target, O) for O in se.enumerate_local_optima(art.target))


def test_guard():
    with pytest.raises(se.GuardExceeded):
        se.build_transition_graph(ONE_CLAUSE, max_nodes=3)
    with pytest.raises(se.GuardExceeded):
        se.enumerate_local_optima(rd.reduce_sat_to_mufl(ONE_CLAUSE).target, max_nodes=10)


def _random_problem(seed):
    rng = random.Random(seed)
    kind = rng.choice(["sat", fl.MUFL, fl.DKM, fl.DFKM])
    N, M = rng.randint(2, 3), rng.randint(2, 3)
    if kind == "sat":
        return se.FlipProblem(sc.random_instance(rng, N, M)), rng
    mode = sc.NAE if kind == fl.DFKM else sc.STD
    return se.SwapProblem(rd.reduce(sc.random_instance(rng, N, M, mode), kind).target), rng


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_search_reaches_sink_monotonically(seed):
    problem, rng = _random_problem(seed)
    graph = se.build_transition_graph(problem)
    sinks = set(graph.sinks)
    assert graph.is_acyclic()
    assert len(graph.topological_order()) == len(graph.nodes)
    init = rng.choice(graph.nodes)
    for pivot in (se.BEST, se.FIRST):
        final, trace = se.local_search(problem, init, pivot)
        assert final in sinks
        assert len(trace) <= len(graph.nodes)
        sols = trace.solutions()
        costs = [trace.initial_cost] + [c for _, c, _ in trace.steps]
        for a, b in zip(costs, costs[1:]):
            assert se.better(problem.direction, b, a)
        for u, v in zip(sols, sols[1:]):
            assert v in [nb for _, nb in problem.moves(u)]
            assert problem.cost(v) == costs[sols.index(v)]


def test_best_pivot_picks_best_improvement():
    inst = sc.SatInstance(3, ((1, 1), (2, 2), (3, 3)), (1, 5, 5))
    final, trace = se.local_search(inst, (0, 0, 0), se.BEST)
    assert trace.steps[0][2] == ("flip", 2)  # ties between 2 and 3 go to the lower index
    final, trace = se.local_search(inst, (0, 0, 0), se.FIRST)
    assert trace.steps[0][2] == ("flip", 1)
