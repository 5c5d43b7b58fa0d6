"""Brute-force audits of the reduction properties on enumerable instances.

Every check takes a :class:`~singleswap.reduce.ReductionArtifact` and returns
a :class:`CheckResult`.  Failures carry a counterexample made of plain index
lists, assignment strings and cost strings, so it can be replayed by hand
against the instance file.
"""
from __future__ import annotations

import random
import weakref
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

from . import facility as fl
from . import reduce as rd
from . import satcore as sc
from . import search as se

PASS = "pass"
FAIL = "fail"
SKIPPED = "skipped"

FLOAT_REL_TOL = 1e-9
MEMBERSHIP_SAMPLES = 10_000


@dataclass
class CheckResult:
    name: str
    status: str
    details: dict = field(default_factory=dict)
    counterexample: dict | None = None

    @property
    def ok(self) -> bool:
        return self.status != FAIL

    def to_dict(self) -> dict:
        doc = {"name": self.name, "status": self.status, "details": self.details}
        if self.counterexample is not None:
            doc["counterexample"] = self.counterexample
        return doc


@dataclass
class VerificationReport:
    instance_id: str
    target_kind: str
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks)

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "instance": self.instance_id,
            "target_kind": self.target_kind,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
        }


def _num(x) -> str:
    return fl.format_number(x)


def _sol(O) -> list[int]:
    return sorted(int(i) for i in O)


def _has_labels(art) -> bool:
    if not isinstance(art, rd.ReductionArtifact):
        return False
    try:
        art.target.literal_points
    except fl.MissingLabels:
        return False
    return True


def _skip(name: str, reason: str) -> CheckResult:
    return CheckResult(name, SKIPPED, {"reason": reason})


def _exact(art) -> bool:
    return art.target.is_exact()


def _cmp(a, b, exact: bool) -> int:
    """Three-way comparison; float costs within a relative margin count as equal."""
    if not exact:
        scale = max(abs(float(a)), abs(float(b)), 1.0)
        if abs(float(a) - float(b)) <= FLOAT_REL_TOL * scale:
            return 0
    return (a > b) - (a < b)


_problems: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def _problem(art) -> se.SwapProblem:
    """One cost-caching problem per artifact, shared by all checks."""
    try:
        return _problems[art]
    except KeyError:
        problem = _problems[art] = se.SwapProblem(art.target)
        return problem


def _guarded(name, art, max_nodes):
    if not _has_labels(art):
        return None, _skip(name, "instance lacks reduction labels")
    problem = _problem(art)
    try:
        se.guard(problem, max_nodes)
    except se.GuardExceeded as exc:
        return None, _skip(name, str(exc))
    return problem, None


def check_local_optima_reasonable(art, max_nodes: int = se.DEFAULT_MAX_NODES) -> CheckResult:
    name = "local_optima_reasonable"
    problem, skipped = _guarded(name, art, max_nodes)
    if skipped:
        return skipped
    optima = se.enumerate_local_optima(problem, max_nodes)
    details = {"solutions": problem.count(), "local_optima": len(optima)}
    for O in optima:
        if not fl.is_reasonable(art.target, O):
            return CheckResult(name, FAIL, details,
                               {"solution": _sol(O), "cost": _num(problem.cost(O))})
    return CheckResult(name, PASS, details)


def check_cost_order_equivalence(art, max_nodes: int = se.DEFAULT_MAX_NODES) -> CheckResult:
    name = "cost_order_equivalence"
    problem, skipped = _guarded(name, art, max_nodes)
    if skipped:
        return skipped
    exact = _exact(art)
    rows = []
    for T in sc.all_assignments(art.num_vars):
        O = rd.lift_assignment(art, T)
        rows.append((T, O, sc.cost(art.source, T), problem.cost(O)))
    pairs = 0
    for a, b in combinations(rows, 2):
        for (T1, O1, w1, c1), (T2, O2, w2, c2) in ((a, b), (b, a)):
            pairs += 1
            sat_less = w1 < w2
            cost_greater = _cmp(c1, c2, exact) > 0
            if sat_less != cost_greater:
                return CheckResult(name, FAIL, {"pairs": pairs}, {
                    "solutions": [_sol(O1), _sol(O2)],
                    "assignments": [sc.format_assignment(T1), sc.format_assignment(T2)],
                    "sat_costs": [w1, w2],
                    "costs": [_num(c1), _num(c2)],
                })
    return CheckResult(name, PASS, {"reasonable": len(rows), "pairs": pairs, "exact": exact})


def check_closed_forms(art, max_nodes: int = se.DEFAULT_MAX_NODES) -> CheckResult:
    name = "closed_forms"
    problem, skipped = _guarded(name, art, max_nodes)
    if skipped:
        return skipped
    exact = _exact(art)
    worst = 0.0
    for T in sc.all_assignments(art.num_vars):
        O = rd.lift_assignment(art, T)
        direct = problem.cost(O)
        closed = rd.closed_form_cost(art, T)
        rel = abs(float(direct) - float(closed)) / max(abs(float(closed)), 1e-300)
        worst = max(worst, rel)
        agree = direct == closed if exact else rel <= FLOAT_REL_TOL
        if not agree:
            return CheckResult(name, FAIL, {"exact": exact}, {
                "solution": _sol(O), "assignment": sc.format_assignment(T),
                "direct": _num(direct), "closed_form": _num(closed),
            })
    return CheckResult(name, PASS, {"reasonable": 2**art.num_vars, "exact": exact,
                                    "max_rel_error": worst})


def check_no_escape_from_reasonable(art, max_nodes: int = se.DEFAULT_MAX_NODES,
                                    graph: se.TransitionGraph | None = None) -> CheckResult:
    name = "no_escape_from_reasonable"
    problem, skipped = _guarded(name, art, max_nodes)
    if skipped:
        return skipped
    graph = graph or se.build_transition_graph(problem, max_nodes)
    checked = 0
    for u, v, move in graph.arcs:
        if fl.is_reasonable(art.target, u):
            checked += 1
            if not fl.is_reasonable(art.target, v):
                return CheckResult(name, FAIL, {"arcs": len(graph.arcs)}, {
                    "from": _sol(u), "to": _sol(v), "move": fl.format_move(move),
                    "costs": [_num(graph.costs[u]), _num(graph.costs[v])],
                })
    return CheckResult(name, PASS, {"arcs": len(graph.arcs), "arcs_from_reasonable": checked})


def check_tightness_paths(art, max_nodes: int = se.DEFAULT_MAX_NODES,
                          graph: se.TransitionGraph | None = None) -> CheckResult:
    """Paths between reasonable solutions through unreasonable ones project to Flip arcs."""
    name = "tightness_paths"
    problem, skipped = _guarded(name, art, max_nodes)
    if skipped:
        return skipped
    graph = graph or se.build_transition_graph(problem, max_nodes)
    reasonable = {u for u in graph.nodes if fl.is_reasonable(art.target, u)}
    succ = graph.successors()
    flip = se.FlipProblem(art.source)
    paths = longest = 0
    for start in sorted(reasonable):
        # depth-first over unreasonable interiors; the graph is acyclic
        stack = [(v, 1) for v in succ[start]]
        ends = {}
        while stack:
            v, length = stack.pop()
            if v in reasonable:
                ends[v] = max(ends.get(v, 0), length)
                continue
            stack.extend((x, length + 1) for x in succ[v])
        T = rd.map_solution_back(art, start)
        for end, length in sorted(ends.items()):
            paths += 1
            longest = max(longest, length)
            T2 = rd.map_solution_back(art, end)
            is_edge = (sum(a != b for a, b in zip(T, T2)) == 1
                       and se.better(flip.direction, flip.cost(T2), flip.cost(T)))
            if not (is_edge or T == T2) or length != 1:
                return CheckResult(name, FAIL, {"paths": paths}, {
                    "from": _sol(start), "to": _sol(end), "path_length": length,
                    "assignments": [sc.format_assignment(T), sc.format_assignment(T2)],
                    "sat_costs": [flip.cost(T), flip.cost(T2)],
                })
    return CheckResult(name, PASS, {"paths": paths, "longest": longest})


def check_psi_correspondence(art, max_nodes: int = se.DEFAULT_MAX_NODES) -> CheckResult:
    name = "psi_correspondence"
    problem, skipped = _guarded(name, art, max_nodes)
    if skipped:
        return skipped
    optima = se.enumerate_local_optima(problem, max_nodes)
    flip = se.FlipProblem(art.source)
    images = set()
    for O in optima:
        T = rd.map_solution_back(art, O)
        images.add(sc.format_assignment(T))
        if not se.is_local_optimum(flip, T):
            return CheckResult(name, FAIL, {"local_optima": len(optima)}, {
                "solution": _sol(O), "assignment": sc.format_assignment(T),
                "sat_cost": flip.cost(T),
            })
    return CheckResult(name, PASS, {"local_optima": len(optima), "images": sorted(images)})


def check_membership_bound(art, max_nodes: int = se.DEFAULT_MAX_NODES,
                           samples: int = MEMBERSHIP_SAMPLES, seed: int = 0) -> CheckResult:
    """Every non-center keeps more than 1/(2N) of its membership at every center."""
    name = "membership_bound"
    if not isinstance(art, rd.ReductionArtifact) or art.kind != fl.DFKM:
        return _skip(name, "membership bound applies to fuzzy K-means reductions")
    inst = art.target
    N = art.num_vars
    bound = Fraction(1, 2 * N)
    total = fl.count_solutions(inst)
    if total <= max_nodes:
        candidates = fl.all_solutions(inst)
        mode = "exhaustive"
    else:
        rng = random.Random(seed)
        candidates = (tuple(sorted(rng.sample(range(inst.n_points), N))) for _ in range(samples))
        mode = "sampled"
    checked = 0
    smallest = None
    for O in candidates:
        opened = set(O)
        for c in range(inst.n_points):
            if c in opened:
                continue
            inv = [inst.inverse_dist[c][o] for o in O]
            s = sum(inv)
            for o, v in zip(O, inv):
                r = v / s
                checked += 1
                if smallest is None or r < smallest:
                    smallest = r
                if not r > bound:
                    return CheckResult(name, FAIL, {"mode": mode}, {
                        "solution": _sol(O), "point": c, "center": o, "membership": _num(r),
                        "bound": _num(bound),
                    })
    return CheckResult(name, PASS, {"mode": mode, "memberships": checked,
                                    "min_membership": float(smallest), "bound": float(bound)})


def check_gamma_positivity(n_range=(2, 4), samples: int = 10_000, seed: int = 0,
                           m_range=(2, 12)) -> CheckResult:
    """Sampled check that the fuzzy clause-cost gap is positive and matches its factored form.

    Sampled floats are converted to exact rationals, so the identity is
    checked without cancellation error.
    """
    name = "gamma_positivity"
    rng = random.Random(seed)
    smallest = None
    for _ in range(samples):
        N = rng.randint(*n_range)
        M = rng.randint(*m_range)
        hi = 1 / (4 * N + 2 * M)
        eps = Fraction(rng.uniform(0, hi)) or Fraction(hi)
        c = Fraction(rng.uniform(1, 2))
        if c <= 1:
            continue
        gap = rd.gamma_gap(N, eps, c)
        factored = rd.gamma_gap_factored(N, eps, c)
        rel = abs(gap - factored) / abs(factored) if factored else abs(gap)
        if not gap > 0 or rel > Fraction(1, 10**12):
            return CheckResult(name, FAIL, {"samples": samples}, {
                "N": N, "M": M, "epsilon": _num(eps), "c": _num(c),
                "gap": float(gap), "factored": float(factored),
            })
        if smallest is None or gap < smallest:
            smallest = gap
    return CheckResult(name, PASS, {"samples": samples, "min_gap": float(smallest)})


# --- prescribed single-step improvements ----------------------------------

def _prescribed_moves(art, O) -> list[tuple[str, tuple]]:
    """Candidate improving moves for an unreasonable ``O``, grouped by case."""
    inst = art.target
    opened = set(O)
    N = art.num_vars
    lit = art.literal_point
    both = [n for n in range(1, N + 1) if lit(n, True) in opened and lit(n, False) in opened]
    neither = [n for n in range(1, N + 1) if lit(n, True) not in opened and lit(n, False) not in opened]
    moves = []
    if inst.kind == fl.MUFL:
        moves += [("close_positive", (lit(n, True), None)) for n in both]
        moves += [("open_positive", (None, lit(n, True))) for n in neither]
        return moves
    # K-means: |O| = N, so an unrepresented variable exists
    represented = lambda v: v not in neither  # noqa: E731
    clause_point = {}
    for m, pts in art.label_map["clauses"].items():
        for i, p in enumerate(pts):
            clause_point[p] = (m, i)
    for p in sorted(opened & set(clause_point)):
        m, i = clause_point[p]
        a, b = art.source.clauses[m - 1]
        if i == 1:
            a, b = -a, -b
        vars_ = list(dict.fromkeys((abs(a), abs(b))))
        free = [v for v in vars_ if not represented(v)]
        if len(free) == len(vars_):
            moves.append(("case_1_1", (p, lit(abs(a), a > 0))))
        elif free:
            v = free[0]
            sign = a > 0 if abs(a) == v else b > 0
            moves.append(("case_1_2", (p, lit(v, sign))))
        else:
            moves += [("case_1_3", (p, lit(n, True))) for n in neither]
    if not moves:
        index = sc.literal_index(art.source)
        M = art.source.num_clauses
        for o in both:
            dropped = lit(o, True) if len(index[o]) < M else lit(o, False)
            moves += [("case_2", (dropped, lit(n, True))) for n in neither]
    return moves


def _apply(O, move) -> tuple[int, ...]:
    drop, add = move
    out = set(O)
    if drop is not None:
        out.discard(drop)
    if add is not None:
        out.add(add)
    return tuple(sorted(out))


def check_single_step_lemmas(art, max_nodes: int = se.DEFAULT_MAX_NODES,
                             strict: bool = False) -> CheckResult:
    """Every unreasonable solution is improved by one of its prescribed case moves.

    With ``strict`` every prescribed move must improve, not just one.
    """
    name = "single_step_lemmas"
    if isinstance(art, rd.ReductionArtifact) and art.kind == fl.DFKM:
        return _skip(name, "single-step lemmas are checked for MUFL and DKM targets")
    problem, skipped = _guarded(name, art, max_nodes)
    if skipped:
        return skipped
    counts: dict[str, int] = {}
    for O in problem.solutions():
        if fl.is_reasonable(art.target, O):
            continue
        base = problem.cost(O)
        moves = _prescribed_moves(art, O)
        outcomes = []
        for label, move in moves:
            new = problem.cost(_apply(O, move))
            outcomes.append((label, move, new, new < base))
        good = [o for o in outcomes if o[3]]
        failed = not good or (strict and len(good) != len(outcomes))
        if failed:
            return CheckResult(name, FAIL, {"cases": counts}, {
                "solution": _sol(O), "cost": _num(base),
                "moves": [{"case": lb, "move": fl.format_move(mv), "cost": _num(c)}
                          for lb, mv, c, _ in outcomes],
            })
        for label, *_ in good:
            counts[label] = counts.get(label, 0) + 1
    return CheckResult(name, PASS, {"cases": dict(sorted(counts.items()))})


def check_constants(art) -> CheckResult:
    """Stored constants must be reproducible from the source instance."""
    name = "constants"
    if not isinstance(art, rd.ReductionArtifact):
        return _skip(name, "not a reduction artifact")
    c = art.constants.get("c", rd.DEFAULT_C)
    derived = rd.derive_constants(art.source, art.kind, c)
    if derived != art.constants:
        return CheckResult(name, FAIL, {}, {
            "stored": {k: _num(v) for k, v in art.constants.items()},
            "derived": {k: _num(v) for k, v in derived.items()},
        })
    return CheckResult(name, PASS, {k: _num(v) for k, v in derived.items()})


STANDARD_CHECKS = (
    "local_optima_reasonable", "cost_order_equivalence", "closed_forms",
    "no_escape_from_reasonable", "tightness_paths", "psi_correspondence",
    "single_step_lemmas",
)


def run_checks(art, instance_id: str = "instance", max_nodes: int = se.DEFAULT_MAX_NODES,
               seed: int = 0, membership_max: int | None = None) -> VerificationReport:
    """All checks applicable to ``art``; inapplicable ones are reported as skipped."""
    report = VerificationReport(instance_id, art.kind)
    report.checks.append(check_constants(art))
    graph = None
    if _has_labels(art):
        try:
            graph = se.build_transition_graph(_problem(art), max_nodes)
        except se.GuardExceeded:
            graph = None
    report.checks += [
        check_local_optima_reasonable(art, max_nodes),
        check_cost_order_equivalence(art, max_nodes),
        check_closed_forms(art, max_nodes),
        check_no_escape_from_reasonable(art, max_nodes, graph),
        check_tightness_paths(art, max_nodes, graph),
        check_psi_correspondence(art, max_nodes),
        check_single_step_lemmas(art, max_nodes),
        check_membership_bound(art, membership_max or max_nodes, seed=seed),
    ]
    return report
