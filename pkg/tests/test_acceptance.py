"""Acceptance criteria, one test per criterion.

Each test records a verdict line (shown in the pytest terminal summary) and
then asserts it.  Run alone with ``pytest tests/test_acceptance.py -m acceptance``.
"""
import hashlib
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from singleswap import cli
from singleswap import embed as em
from singleswap import facility as fl
from singleswap import reduce as rd
from singleswap import satcore as sc
from singleswap import search as se
from singleswap import verify as vf

from acceptance_log import record
from oracles import brute_flip_optimal, term_by_term_mufl

pytestmark = pytest.mark.acceptance

C = Fraction(3, 2)


def _random_std(rng):
    return sc.random_instance(rng, rng.choice((2, 3)), rng.choice((2, 3)), sc.STD, 3)


def test_criterion_1_exhaustive_audit():
    rng = random.Random(1001)
    start = time.perf_counter()
    failures = []
    audited = 0
    for i in range(50):
        inst = _random_std(rng)
        for kind in (fl.MUFL, fl.DKM):
            art = rd.reduce(inst, kind, C)
            assert art.target.is_exact()
            results = [
                vf.check_local_optima_reasonable(art),
                vf.check_cost_order_equivalence(art),
                vf.check_closed_forms(art),
                vf.check_no_escape_from_reasonable(art),
                vf.check_tightness_paths(art),
                vf.check_psi_correspondence(art),
                vf.check_single_step_lemmas(art),
            ]
            audited += 1
            failures += [(i, kind, r.name) for r in results if r.status != vf.PASS]
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 300
    record(1, ok, f"{audited} reductions x 7 checks, {len(failures)} failures, {elapsed:.1f}s (limit 300s)")
    assert not failures, failures[:5]
    assert elapsed < 300


def test_criterion_2_dfkm_audit():
    rng = random.Random(2002)
    start = time.perf_counter()
    failures = []
    worst_rel = 0.0
    min_membership = float("inf")
    for i in range(25):
        inst = sc.random_instance(rng, rng.choice((2, 3)), rng.choice((2, 3)), sc.NAE, 3)
        art = rd.reduce_pnaesat_to_dfkm(inst, C)
        results = [
            vf.check_local_optima_reasonable(art),
            vf.check_cost_order_equivalence(art),
            vf.check_closed_forms(art),
            vf.check_membership_bound(art),
        ]
        closed = results[2]
        if closed.status == vf.PASS:
            worst_rel = max(worst_rel, closed.details["max_rel_error"])
        member = results[3]
        if member.status == vf.PASS:
            assert member.details["mode"] == "exhaustive"
            min_membership = min(min_membership, member.details["min_membership"] * 2 * inst.num_vars)
        failures += [(i, r.name) for r in results if r.status != vf.PASS]
    gamma = vf.check_gamma_positivity((2, 3), samples=10_000, seed=2002)
    if gamma.status != vf.PASS:
        failures.append(("gamma", gamma.name))
    elapsed = time.perf_counter() - start
    ok = not failures and worst_rel <= 1e-9 and min_membership > 1 and elapsed < 600
    record(2, ok, f"25 instances, {len(failures)} failures, closed-form rel err {worst_rel:.1e}, "
                  f"min r*2N {min_membership:.9f} (must exceed 1), {elapsed:.1f}s (limit 600s)")
    assert not failures, failures[:5]
    assert worst_rel <= 1e-9
    assert min_membership > 1
    assert elapsed < 600


def test_criterion_3_closed_form_spot_value():
    inst = sc.SatInstance(2, ((1, 2),), (1,))
    art = rd.reduce_sat_to_mufl(inst)
    t = art.target
    O = [t.point("x1"), t.point("~x2")]
    direct = fl.mufl_cost(t, O)
    oracle = term_by_term_mufl(t.labels, inst.clauses, inst.weights, 1, ["x1", "~x2"])
    closed = rd.closed_form_cost(art, (1, 0))
    expect = Fraction(4, 3) + 3 * 1 * 2
    ok = direct == oracle == closed == expect == Fraction(22, 3)
    record(3, ok, f"direct {direct}, oracle {oracle}, closed form {closed} (expected 22/3, exact)")
    assert ok


def test_criterion_4_embedding():
    start = time.perf_counter()
    inst = sc.random_instance(random.Random(4004), 4, 5, sc.STD)
    art = rd.reduce_sat_to_dkm(inst, C)
    M = art.target.dist
    assert len(M) == 13 and art.constants["epsilon"] == Fraction(1, 26)
    check = em.schoenberg_check(M, 1e-9)
    result = em.classical_mds(M, 1e-9)
    bad = [[0, 1, 9], [1, 0, 1], [9, 1, 0]]
    rejected = em.schoenberg_check(bad, 1e-9)
    u = rejected.witness
    form = float(u @ np.array(bad, dtype=float) @ u) if u is not None else float("nan")
    elapsed = time.perf_counter() - start
    ok = (check.embeddable and result.max_abs_error <= 1e-6 and not rejected.embeddable
          and abs(u.sum()) < 1e-12 and abs(form - 10) < 1e-9 and elapsed < 10)
    record(4, ok, f"13-point DKM error {result.max_abs_error:.1e} (limit 1e-6), "
                  f"witness {np.round(u, 12).tolist()} form {form:.12g}, {elapsed:.2f}s (limit 10s)")
    assert ok


def test_criterion_5_end_to_end():
    rng = random.Random(5005)
    kinds = (fl.MUFL, fl.DKM, fl.DFKM)
    passed = 0
    bad = []
    for i in range(100):
        kind = kinds[i % 3]
        mode = sc.NAE if kind == fl.DFKM else sc.STD
        inst = sc.random_instance(rng, rng.randint(2, 3), rng.randint(2, 3), mode, 3)
        art = rd.reduce(inst, kind, C)
        problem = se.SwapProblem(art.target)
        init = rd.lift_assignment(art, tuple(rng.randint(0, 1) for _ in range(inst.num_vars)))
        good = True
        for pivot in (se.BEST, se.FIRST):
            final, _ = se.local_search(problem, init, pivot)
            T = rd.map_solution_back(art, final)
            nae = inst.mode == sc.NAE
            if not brute_flip_optimal(inst.clauses, inst.weights, T, nae):
                good = False
                bad.append((i, kind, pivot))
        passed += good
    record(5, passed == 100, f"{passed}/100 instances map back to flip-optimal assignments (both pivots)")
    assert passed == 100, bad[:5]


def _hash_run(tmp_path, tag, argv, capsys):
    out_dir = tmp_path / tag
    out_dir.mkdir()
    args = [a.replace("{out}", str(out_dir)) for a in argv]
    code = cli.main(args)
    stdout = capsys.readouterr().out.replace(str(out_dir), "{out}")
    h = hashlib.sha256(f"{code}\n{stdout}".encode())
    for p in sorted(out_dir.iterdir()):
        h.update(p.name.encode() + b"\0" + p.read_bytes())
    return h.hexdigest()


def test_criterion_6_determinism(tmp_path, capsys):
    src = tmp_path / "in"
    src.mkdir()
    (src / "std.wsat2").write_text("p wsat2 3 3 std\n1 2 2\n-1 3 1\n-2 -3 3\n")
    (src / "nae.wsat2").write_text("p wsat2 3 2 nae\n1 2 1\n2 3 2\n")
    (src / "bad.csv").write_text("3\n0,1,9\n1,0,1\n9,1,0\n")
    std, nae = str(src / "std.wsat2"), str(src / "nae.wsat2")
    cli.main(["reduce", "--in", std, "--target", "dkm", "--out", str(src / "dkm.json")])
    capsys.readouterr()
    commands = {
        "reduce-mufl": ["reduce", "--in", std, "--target", "mufl", "--out", "{out}/a.json"],
        "reduce-dfkm": ["reduce", "--in", nae, "--target", "dfkm", "--c", "5/4", "--out", "{out}/a.json"],
        "search-random": ["search", "--in", str(src / "dkm.json"), "--init", "random", "--seed", "7",
                          "--pivot", "first", "--trace", "{out}/t.csv"],
        "search-sat": ["search", "--in", std, "--init", "lift:000", "--trace", "{out}/t.csv"],
        "tg": ["tg", "--in", str(src / "dkm.json"), "--out", "{out}/tg.csv"],
        "verify-file": ["verify", "--in", nae, "--gamma-samples", "500", "--seed", "3",
                        "--report", "{out}/r.json"],
        "verify-random": ["verify", "--samples", "2", "--seed", "11", "--gamma-samples", "200",
                          "--report", "{out}/r.json"],
        "embed": ["embed", "--in", str(src / "dkm.json"), "--out", "{out}/p.csv"],
        "embed-reject": ["embed", "--in", str(src / "bad.csv")],
        "bench": ["bench", "--instances", "10", "--seed", "13", "--out", "{out}/b.csv"],
    }
    differing = []
    for name, argv in commands.items():
        first = _hash_run(tmp_path, f"{name}-1", argv, capsys)
        second = _hash_run(tmp_path, f"{name}-2", argv, capsys)
        if first != second:
            differing.append(name)
    ok = not differing
    record(6, ok, f"{len(commands) - len(differing)}/{len(commands)} commands byte-identical across repeated runs")
    assert ok, differing


def test_criterion_7_bench_sanity():
    rows = cli.run_bench(100, seed=7007, kind="metric", fmax=8)
    worst = max(rows, key=lambda r: r[4])
    over = [r[0] for r in rows if r[4] > 3]
    detail = f"observational: max ratio {float(worst[4]):.4f} over {len(rows)} metric MUFL instances"
    if over:
        detail += f"; FINDING: {len(over)} exceed 3 ({', '.join(over)})"
    else:
        detail += "; no instance exceeds 3"
    record(7, True, detail)
    assert len(rows) == 100
    assert all(r[4] >= 1 for r in rows)
