"""Command line: ``singleswap {reduce,search,tg,verify,embed,bench}``.

Exit codes: 0 success, 1 verification failure (or non-embeddable matrix),
2 usage or parse error, 3 enumeration guard exceeded.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import random
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import embed as em
from . import facility as fl
from . import reduce as rd
from . import satcore as sc
from . import search as se
from . import verify as vf

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_GUARD = 3


class UsageError(Exception):
    pass


def write_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def parse_fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected a rational like 3/2, got {text!r}") from None


def read_text(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def load_any(path):
    """Load a wsat2 file, an instance JSON or a reduction artifact JSON."""
    text = read_text(path)
    if text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
        try:
            if "reduction" in doc:
                return rd.artifact_from_dict(doc)
            return fl.instance_from_dict(doc)
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"{path}: bad instance file: {exc}") from None
    try:
        return sc.parse_wsat2(text)
    except sc.SatFormatError as exc:
        raise UsageError(f"{path}: {exc}") from None


def load_sat(path) -> sc.SatInstance:
    obj = load_any(path)
    if not isinstance(obj, sc.SatInstance):
        raise UsageError(f"{path}: expected a wsat2 instance")
    return obj


def _target_of(obj):
    if isinstance(obj, rd.ReductionArtifact):
        return obj.target
    return obj


# --- reduce ----------------------------------------------------------------

def _check_target(inst: sc.SatInstance, target: str) -> None:
    if target in (fl.MUFL, fl.DKM) and inst.mode != sc.STD:
        raise UsageError(f"target {target} needs a std instance, input is {inst.mode}")
    if target == fl.DFKM and inst.mode != sc.NAE:
        raise UsageError(f"target {target} needs a nae instance, input is {inst.mode}")


def describe_constants(art: rd.ReductionArtifact) -> str:
    k = art.constants
    parts = [f"W={k['W']}"]
    if "f" in k:
        parts.append(f"f={k['f']}")
    if "K" in k:
        parts.append(f"K={k['K']}")
    if "epsilon" in k:
        parts.append(f"epsilon={k['epsilon']}")
        parts.append(f"c={k['c']}")
    return " ".join(parts)


def cmd_reduce(args) -> int:
    inst = load_sat(args.input)
    _check_target(inst, args.target)
    art = rd.reduce(inst, args.target, args.c)
    doc = rd.artifact_to_dict(art)
    write_atomic(args.out, json.dumps(doc, indent=1) + "\n")
    print(f"{args.target}: {art.target.n_points} points, {describe_constants(art)}")
    return EXIT_OK


# --- search ----------------------------------------------------------------

def parse_init(spec: str, obj, seed):
    inst = _target_of(obj)
    if spec == "random":
        if seed is None:
            raise UsageError("--init random requires --seed")
        rng = random.Random(seed)
        if isinstance(inst, sc.SatInstance):
            return tuple(rng.randint(0, 1) for _ in range(inst.num_vars))
        if inst.kind == fl.MUFL:
            F = sorted(inst.facility_indices)
            size = rng.randint(1, len(F))
            return tuple(sorted(rng.sample(F, size)))
        return tuple(sorted(rng.sample(range(inst.n_points), inst.k)))
    kind, _, value = spec.partition(":")
    if kind == "lift":
        if isinstance(inst, sc.SatInstance):
            return sc.parse_assignment(value, inst.num_vars)
        if not isinstance(obj, rd.ReductionArtifact):
            raise UsageError("lift: needs an instance with a reduction block")
        try:
            return rd.lift_assignment(obj, sc.parse_assignment(value, obj.num_vars))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if kind == "indices":
        if isinstance(inst, sc.SatInstance):
            raise UsageError("indices: applies to location instances; use lift:<bits> for SAT")
        tokens = [t for t in value.replace(" ", ",").split(",") if t]
        try:
            return tuple(inst.point(t) for t in tokens)
        except (KeyError, fl.MissingLabels) as exc:
            raise UsageError(f"bad --init: {exc}") from None
    raise UsageError(f"--init must be lift:<bits>, indices:<list> or random, got {spec!r}")


def cmd_search(args) -> int:
    obj = load_any(args.input)
    inst = _target_of(obj)
    problem = se.make_problem(inst)
    init = parse_init(args.init, obj, args.seed)
    try:
        final, trace = se.local_search(problem, init, args.pivot, args.max_steps)
    except (fl.InfeasibleSolution, ValueError) as exc:
        raise UsageError(f"infeasible initial solution: {exc}") from None
    if args.trace:
        write_atomic(args.trace, trace.to_csv(problem.format_move))
    print(f"steps: {len(trace)}")
    print(f"initial cost: {fl.format_number(trace.initial_cost)}")
    print(f"final cost: {fl.format_number(trace.final_cost)}")
    print(f"final solution: {problem.format_solution(final)}")
    if isinstance(obj, rd.ReductionArtifact):
        T = rd.map_solution_back(obj, final)
        print(f"psi: {sc.format_assignment(T)}")
        print(f"reasonable: {str(fl.is_reasonable(inst, final)).lower()}")
    return EXIT_OK


# --- tg --------------------------------------------------------------------

def cmd_tg(args) -> int:
    obj = load_any(args.input)
    problem = se.make_problem(_target_of(obj))
    graph = se.build_transition_graph(problem, args.max_nodes)
    if args.out:
        write_atomic(args.out, graph.to_csv(problem.format_solution))
    print(f"nodes: {len(graph.nodes)}")
    print(f"arcs: {len(graph.arcs)}")
    sinks = graph.sinks
    print(f"local optima: {len(sinks)}")
    for s in sinks:
        print(f"  {problem.format_solution(s)}  cost {fl.format_number(graph.costs[s])}")
    return EXIT_OK


# --- verify ----------------------------------------------------------------

def _targets_for(mode: str, target: str) -> list[str]:
    if target == "all":
        return [fl.MUFL, fl.DKM] if mode == sc.STD else [fl.DFKM]
    return [target]


def _verify_artifact(art, instance_id, args, reports) -> None:
    se.guard(se.SwapProblem(art.target), args.max_nodes)
    membership_cap = args.max_nodes if args.exhaustive else vf.MEMBERSHIP_SAMPLES
    reports.append(vf.run_checks(art, instance_id, args.max_nodes, seed=args.seed or 0,
                                 membership_max=membership_cap))


def cmd_verify(args) -> int:
    reports: list[vf.VerificationReport] = []
    extra = []
    if args.input:
        obj = load_any(args.input)
        if isinstance(obj, sc.SatInstance):
            targets = _targets_for(obj.mode, args.target)
            for target in targets:
                _check_target(obj, target)
                art = rd.reduce(obj, target, args.c)
                _verify_artifact(art, f"{Path(args.input).name}:{target}", args, reports)
            if fl.DFKM in targets:
                extra.append(vf.check_gamma_positivity((obj.num_vars, obj.num_vars),
                                                       args.gamma_samples, args.seed or 0))
        elif isinstance(obj, rd.ReductionArtifact):
            _verify_artifact(obj, Path(args.input).name, args, reports)
        else:
            report = vf.run_checks(obj, Path(args.input).name, args.max_nodes)
            reports.append(report)
    else:
        if args.seed is None:
            raise UsageError("randomized verification requires --seed")
        rng = random.Random(args.seed)
        modes = {fl.MUFL: sc.STD, fl.DKM: sc.STD, fl.DFKM: sc.NAE}
        targets = [fl.MUFL, fl.DKM, fl.DFKM] if args.target == "all" else [args.target]
        for i in range(args.samples):
            N = rng.randint(2, args.nmax)
            M = rng.randint(2, args.mmax)
            for target in targets:
                inst = sc.random_instance(rng, N, M, modes[target], args.wmax)
                art = rd.reduce(inst, target, args.c)
                _verify_artifact(art, f"sample{i}:{target}:N{N}:M{M}", args, reports)
        if fl.DFKM in targets:
            extra.append(vf.check_gamma_positivity((2, args.nmax), args.gamma_samples, args.seed))
    passed = all(r.passed for r in reports) and all(c.ok for c in extra)
    doc = {
        "passed": passed,
        "reports": [r.to_dict() for r in reports],
        "global_checks": [c.to_dict() for c in extra],
    }
    text = json.dumps(doc, indent=1) + "\n"
    if args.report:
        write_atomic(args.report, text)
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        failed = [c.name for c in r.checks if not c.ok]
        print(f"{status} {r.instance_id}" + (f"  failed: {', '.join(failed)}" if failed else ""))
    for c in extra:
        print(f"{'PASS' if c.ok else 'FAIL'} {c.name}")
    print(f"overall: {'PASS' if passed else 'FAIL'}")
    return EXIT_OK if passed else EXIT_FAIL


# --- embed -----------------------------------------------------------------

def cmd_embed(args) -> int:
    path = Path(args.input)
    text = read_text(path)
    if text.lstrip().startswith("{"):
        inst = _target_of(load_any(path))
        if inst.kind == fl.MUFL:
            raise UsageError("embedding applies to dkm/dfkm instances or matrix files")
        M = inst.dist
    else:
        try:
            M = em.parse_matrix_csv(text)
        except ValueError as exc:
            raise UsageError(f"{path}: {exc}") from None
    try:
        check = em.schoenberg_check(M, args.tol)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print(f"points: {len(M)}")
    print(f"min gram eigenvalue: {check.min_eigenvalue:.6e}")
    if not check.embeddable:
        u = check.witness
        A = np.array([[float(x) for x in row] for row in M])
        print("embeddable: false")
        print("witness: " + ",".join(f"{x:.12g}" for x in u))
        print(f"witness sum: {float(np.sum(u)):.3e}")
        print(f"witness quadratic form: {float(u @ A @ u):.12g}")
        return EXIT_FAIL
    result = em.classical_mds(M, args.tol)
    print("embeddable: true")
    print(f"dimension: {result.dim}")
    print(f"max abs error: {result.max_abs_error:.3e}")
    if args.out:
        write_atomic(args.out, em.format_points_csv(result.points))
    return EXIT_OK


# --- bench -----------------------------------------------------------------

def random_metric_mufl(rng: random.Random, n_facilities: int, n_clients: int,
                       max_edge: int = 20) -> fl.LocationInstance:
    """Shortest-path metric over a random complete graph; integer-exact."""
    n = n_facilities + n_clients
    d = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            d[i][j] = d[j][i] = rng.randint(1, max_edge)
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if d[i][k] + d[k][j] < d[i][j]:
                    d[i][j] = d[i][k] + d[k][j]
    dist = [[Fraction(x) for x in row] for row in d]
    weights = [rng.randint(1, 5) for _ in range(n)]
    costs = [Fraction(rng.randint(1, 4 * max_edge)) for _ in range(n_facilities)]
    return fl.LocationInstance(fl.MUFL, weights, dist, tuple(range(n_facilities)), costs)


def _bench_instance(rng, kind, fmax):
    if kind == "metric":
        return random_metric_mufl(rng, rng.randint(2, fmax), rng.randint(0, fmax))
    N = rng.randint(2, max(2, fmax // 2))
    M = rng.randint(2, 2 * N)
    sat = sc.random_instance(rng, N, M, sc.STD)
    return rd.reduce(sat, fl.MUFL if kind == "reduced-mufl" else fl.DKM).target


def _random_init(rng, inst):
    if inst.kind == fl.MUFL:
        F = sorted(inst.facility_indices)
        return tuple(sorted(rng.sample(F, rng.randint(1, len(F)))))
    return tuple(sorted(rng.sample(range(inst.n_points), inst.k)))


def run_bench(instances: int, seed: int, kind: str = "metric", fmax: int = 8,
              pivot: str = se.BEST, max_nodes: int = se.DEFAULT_MAX_NODES):
    rng = random.Random(seed)
    rows = []
    for i in range(instances):
        inst = _bench_instance(rng, kind, fmax)
        problem = se.SwapProblem(inst)
        se.guard(problem, max_nodes)
        init = _random_init(rng, inst)
        final, trace = se.local_search(problem, init, pivot)
        optimum = min(problem.cost(O) for O in problem.solutions())
        ratio = trace.final_cost / optimum if optimum else Fraction(1)
        rows.append((f"{kind}-{i}", len(trace), trace.final_cost, optimum, ratio))
    return rows


def cmd_bench(args) -> int:
    rows = run_bench(args.instances, args.seed, args.kind, args.fmax, args.pivot, args.max_nodes)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["instance", "steps", "final_cost", "optimum", "ratio"])
    for name, steps, final, opt, ratio in rows:
        writer.writerow([name, steps, fl.format_number(final), fl.format_number(opt),
                         f"{float(ratio):.6f}"])
    if args.out:
        write_atomic(args.out, buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    worst = max(rows, key=lambda r: r[4])
    print(f"instances: {len(rows)}  max ratio: {float(worst[4]):.6f} ({worst[0]})")
    over = [r for r in rows if r[4] > 3]
    if over and args.kind == "metric":
        print(f"FINDING: {len(over)} instance(s) exceed the 3-approximation bound for MUFL: "
              + ", ".join(r[0] for r in over))
    return EXIT_OK


# --- entry point -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="singleswap", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reduce", help="reduce a wsat2 instance to MUFL, DKM or DFKM")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--target", choices=[fl.MUFL, fl.DKM, fl.DFKM], required=True)
    p.add_argument("--c", type=parse_fraction, default=rd.DEFAULT_C)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("search", help="run single-swap (or Flip) local search")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--init", required=True, help="lift:<bits> | indices:<list> | random")
    p.add_argument("--seed", type=int)
    p.add_argument("--pivot", choices=[se.BEST, se.FIRST], default=se.BEST)
    p.add_argument("--max-steps", type=int)
    p.add_argument("--trace", help="write the step trace as CSV")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("tg", help="enumerate the transition graph")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", help="edge list CSV")
    p.add_argument("--max-nodes", type=int, default=se.DEFAULT_MAX_NODES)
    p.set_defaults(func=cmd_tg)

    p = sub.add_parser("verify", help="audit the reduction properties by enumeration")
    p.add_argument("--in", dest="input")
    p.add_argument("--target", choices=[fl.MUFL, fl.DKM, fl.DFKM, "all"], default="all")
    p.add_argument("--exhaustive", action="store_true",
                   help="never sample, enumerate every solution up to --max-nodes")
    p.add_argument("--c", type=parse_fraction, default=rd.DEFAULT_C)
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--nmax", type=int, default=3)
    p.add_argument("--mmax", type=int, default=3)
    p.add_argument("--wmax", type=int, default=3)
    p.add_argument("--seed", type=int)
    p.add_argument("--gamma-samples", type=int, default=10_000)
    p.add_argument("--max-nodes", type=int, default=se.DEFAULT_MAX_NODES)
    p.add_argument("--report", help="write the JSON report here")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("embed", help="realise a K-means distance matrix in Euclidean space")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", help="points CSV")
    p.add_argument("--tol", type=float, default=em.DEFAULT_TOL)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("bench", help="single-swap versus brute-force optimum on random instances")
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--kind", choices=["metric", "reduced-mufl", "reduced-dkm"], default="metric")
    p.add_argument("--fmax", type=int, default=8)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--pivot", choices=[se.BEST, se.FIRST], default=se.BEST)
    p.add_argument("--max-nodes", type=int, default=se.DEFAULT_MAX_NODES)
    p.add_argument("--out", help="CSV destination (stdout if omitted)")
    p.set_defaults(func=cmd_bench)
    return parser


def _validate(args) -> None:
    for name in ("samples", "nmax", "mmax", "wmax", "gamma_samples", "max_nodes",
                 "instances", "fmax", "max_steps"):
        value = getattr(args, name, None)
        if value is not None and value < 1:
            raise UsageError(f"--{name.replace('_', '-')} must be positive")
    if getattr(args, "nmax", 2) < 2 or getattr(args, "mmax", 2) < 2:
        raise UsageError("--nmax and --mmax must be at least 2")
    if getattr(args, "fmax", 2) < 2:
        raise UsageError("--fmax must be at least 2")
    c = getattr(args, "c", None)
    if c is not None and not 1 < c < 2:
        raise UsageError("--c must lie strictly between 1 and 2")
    tol = getattr(args, "tol", None)
    if tol is not None and tol < 0:
        raise UsageError("--tol must be nonnegative")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _validate(args)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except se.GuardExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())
