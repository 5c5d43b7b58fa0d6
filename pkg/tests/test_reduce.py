import json
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from singleswap import facility as fl
from singleswap import reduce as rd
from singleswap import satcore as sc

from oracles import MUFL_TABLE, all_bits, decode, gadget_distance, kmeans_table, term_by_term_kmeans

ONE_CLAUSE = sc.SatInstance(2, ((1, 2),), (1,))
NAE_ONE = sc.SatInstance(2, ((1, 2),), (1,), sc.NAE)


def test_constants():
    assert rd.mufl_constants(ONE_CLAUSE) == {"W": 1, "f": 2}
    k = rd.dkm_constants(ONE_CLAUSE)
    assert k["epsilon"] == Fraction(1, 10) and k["K"] == 2 and k["c"] == Fraction(3, 2)
    k = rd.dfkm_constants(NAE_ONE)
    assert k["epsilon"] == Fraction(1, 72)
    assert k["W"] == 32 and k["K"] == 2


def test_c_range():
    for bad in (1, 2, Fraction(5, 2)):
        with pytest.raises(ValueError):
            rd.reduce_sat_to_dkm(ONE_CLAUSE, bad)
    assert rd.reduce_sat_to_dkm(ONE_CLAUSE, "5/4").constants["c"] == Fraction(5, 4)


def test_mode_mismatch():
    with pytest.raises(ValueError):
        rd.reduce_sat_to_mufl(NAE_ONE)
    with pytest.raises(ValueError):
        rd.reduce_pnaesat_to_dfkm(ONE_CLAUSE)
    with pytest.raises(ValueError):
        rd.reduce(ONE_CLAUSE, "kmeans")


def test_mufl_layout():
    art = rd.reduce_sat_to_mufl(ONE_CLAUSE)
    t = art.target
    assert t.labels == ("x1", "~x1", "x2", "~x2", "b1")
    assert list(t.facility_indices) == [0, 1, 2, 3]
    assert all(f == 2 for f in t.opening_costs)
    assert t.dist[0][1] == 1 and t.dist[0][4] == Fraction(4, 3)
    assert t.dist[1][4] == Fraction(5, 3) and t.dist[0][2] == 2


def test_dfkm_doubling():
    art = rd.reduce_pnaesat_to_dfkm(NAE_ONE)
    t = art.target
    assert len(t.weights) == 2 * 2 + 2 * 1
    assert t.labels[-2:] == ("b1.1", "b1.2")
    eps = art.constants["epsilon"]
    # the second copy is {~x1, ~x2}
    assert t.dist[t.point("~x1")][t.point("b1.2")] == 1 + eps
    assert t.dist[t.point("x1")][t.point("b1.2")] == 1 + Fraction(3, 2) * eps
    doubled = rd.double_clauses(NAE_ONE)
    assert doubled.num_clauses == 2 and rd.doubled_literals(doubled) == [(1, 2), (-1, -2)]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([fl.MUFL, fl.DKM, fl.DFKM]))
def test_distances_match_case_table(seed, kind):
    import random
    rng = random.Random(seed)
    mode = sc.NAE if kind == fl.DFKM else sc.STD
    inst = sc.random_instance(rng, rng.randint(2, 4), rng.randint(1, 4), mode)
    art = rd.reduce(inst, kind)
    t = art.target
    if kind == fl.DFKM:
        lits = rd.doubled_literals(rd.double_clauses(inst))
    else:
        lits = list(inst.clauses)
    if kind == fl.MUFL:
        table = MUFL_TABLE
    else:
        table = kmeans_table(art.constants["epsilon"], art.constants["c"])
    pts = [decode(lb, lits if kind != fl.DFKM else inst.clauses) for lb in t.labels]
    for i, p in enumerate(pts):
        for j, q in enumerate(pts):
            expect = 0 if i == j else gadget_distance(p, q, table)
            if i != j and p == q:  # repeated clause
                expect = table[3]
            assert t.dist[i][j] == expect
    assert fl.is_metric(t)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_psi_lift_roundtrip(n):
    inst = sc.SatInstance(n, ((1, 1),), (1,))
    for kind in (fl.MUFL, fl.DKM):
        art = rd.reduce(inst, kind)
        lifted = rd.reasonable_solutions(art)
        assert len(set(lifted)) == 2 ** n
        for T in all_bits(n):
            O = rd.lift_assignment(art, T)
            assert fl.is_reasonable(art.target, O)
            assert rd.map_solution_back(art, O) == T


def test_lift_wrong_length():
    with pytest.raises(ValueError):
        rd.lift_assignment(rd.reduce_sat_to_mufl(ONE_CLAUSE), (1,))


def test_closed_forms_match_costs():
    import random
    rng = random.Random(7)
    for _ in range(10):
        for kind in (fl.MUFL, fl.DKM, fl.DFKM):
            mode = sc.NAE if kind == fl.DFKM else sc.STD
            inst = sc.random_instance(rng, 3, 3, mode)
            art = rd.reduce(inst, kind)
            for T in all_bits(3):
                O = rd.lift_assignment(art, T)
                assert rd.closed_form_cost(art, T) == fl.objective(art.target, O)


def test_dfkm_cost_against_label_oracle():
    inst = sc.SatInstance(3, ((1, 2), (2, 3)), (2, 1), sc.NAE)
    art = rd.reduce_pnaesat_to_dfkm(inst)
    k = art.constants
    table = kmeans_table(k["epsilon"], k["c"])
    t = art.target
    for O in fl.all_solutions(t):
        labels = [t.labels[i] for i in O]
        expect = term_by_term_kmeans(t.labels, inst.clauses, inst.weights, k["W"], labels, table, fuzzy=True)
        assert fl.dfkm_cost(t, O) == expect


def test_gamma_gap():
    gap = rd.gamma_gap(2, Fraction(1, 10), Fraction(3, 2))
    assert gap > 0
    assert gap == rd.gamma_gap_factored(2, Fraction(1, 10), Fraction(3, 2))
    assert abs(float(gap) - 5.5556e-4) < 1e-7
    assert rd.gamma_gap(3, Fraction(1, 20), Fraction(1)) == 0
    assert abs(rd.gamma_gap(4, 0.01, 1 + 1e-9)) < 1e-15


def test_artifact_json_roundtrip():
    for kind, inst in ((fl.MUFL, ONE_CLAUSE), (fl.DKM, ONE_CLAUSE), (fl.DFKM, NAE_ONE)):
        art = rd.reduce(inst, kind)
        doc = json.loads(json.dumps(rd.artifact_to_dict(art)))
        back = rd.artifact_from_dict(doc)
        assert back.source == art.source
        assert back.constants == art.constants
        assert back.label_map == art.label_map
        assert back.target.dist == art.target.dist
        assert back.constants == rd.derive_constants(back.source, kind, back.constants.get("c", rd.DEFAULT_C))


def test_artifact_hash_mismatch():
    doc = rd.artifact_to_dict(rd.reduce_sat_to_mufl(ONE_CLAUSE))
    doc["reduction"]["source"]["weights"] = [2]
    with pytest.raises(ValueError):
        rd.artifact_from_dict(doc)
