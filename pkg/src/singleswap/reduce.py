"""Reductions from (NAE-)Max-2-SAT to MUFL, DKM and DFKM, and back.

Point layout of every reduced instance: literal points first, ordered
``x1, ~x1, x2, ~x2, ...``, then one point per clause (two per original clause
for DFKM, the positive copy first).  All constants are ``Fraction``.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import facility as fl
from . import satcore as sc

DEFAULT_C = Fraction(3, 2)


@dataclass(frozen=True, eq=False)
class ReductionArtifact:
    source: sc.SatInstance
    target: fl.LocationInstance
    constants: dict
    label_map: dict  # {"variables": {n: (pos, neg)}, "clauses": {m: (idx, ...)}}

    @property
    def kind(self) -> str:
        return self.target.kind

    @property
    def num_vars(self) -> int:
        return self.source.num_vars

    def literal_point(self, n: int, positive: bool) -> int:
        pos, neg = self.label_map["variables"][n]
        return pos if positive else neg


def _as_fraction(c) -> Fraction:
    c = fl.to_number(c) if isinstance(c, str) else c
    return c if isinstance(c, Fraction) else Fraction(c)


def _check_c(c) -> Fraction:
    c = _as_fraction(c)
    if not 1 < c < 2:
        raise ValueError(f"c must lie strictly between 1 and 2, got {c}")
    return c


def mufl_constants(inst: sc.SatInstance) -> dict:
    W = inst.num_clauses * inst.w_max
    return {"W": W, "f": 2 * W}


def dkm_constants(inst: sc.SatInstance, c=DEFAULT_C) -> dict:
    c = _check_c(c)
    N, M = inst.num_vars, inst.num_clauses
    return {"W": M * inst.w_max, "K": N, "epsilon": Fraction(1, 4 * N + 2 * M), "c": c}


def dfkm_constants(inst: sc.SatInstance, c=DEFAULT_C) -> dict:
    """Constants for an *original* NAE instance; M below is the doubled clause count."""
    c = _check_c(c)
    N, M = inst.num_vars, 2 * inst.num_clauses
    if M < 2:
        raise ValueError("fuzzy reduction needs at least one clause")
    eps = min(Fraction(1, 4 * N + 2 * M), Fraction(M - 1, 9 * N * N * M))
    return {"W": 4 * N * N * M * inst.w_max, "K": N, "epsilon": eps, "c": c}


def _literal_distance(lit: int, clause: Sequence[int], near, far, other):
    if lit in clause:
        return near
    if -lit in clause:
        return far
    return other


def _build(num_vars: int, clause_lits, clause_weights, W, *, pair, near, far, other):
    """Distance matrix, weights and labels for the shared gadget layout."""
    lits = []
    labels = []
    for n in range(1, num_vars + 1):
        lits += [n, -n]
        labels += [fl.literal_label(n, True), fl.literal_label(n, False)]
    n_lit = len(lits)
    size = n_lit + len(clause_lits)
    zero = Fraction(0)
    dist = [[other] * size for _ in range(size)]
    for i in range(size):
        dist[i][i] = zero
    for n in range(num_vars):
        dist[2 * n][2 * n + 1] = dist[2 * n + 1][2 * n] = pair
    for j, clause in enumerate(clause_lits):
        q = n_lit + j
        for i, lit in enumerate(lits):
            d = _literal_distance(lit, clause, near, far, other)
            dist[i][q] = dist[q][i] = d
    weights = [W] * n_lit + list(clause_weights)
    return dist, weights, labels


def _label_map(num_vars: int, clause_points: dict) -> dict:
    return {
        "variables": {n: (2 * (n - 1), 2 * (n - 1) + 1) for n in range(1, num_vars + 1)},
        "clauses": clause_points,
    }


def reduce_sat_to_mufl(inst: sc.SatInstance) -> ReductionArtifact:
    if inst.mode != sc.STD:
        raise ValueError("MUFL reduction takes a standard Max-2-SAT instance")
    const = mufl_constants(inst)
    dist, weights, labels = _build(
        inst.num_vars, inst.clauses, inst.weights, const["W"],
        pair=Fraction(1), near=Fraction(4, 3), far=Fraction(5, 3), other=Fraction(2))
    labels += [fl.clause_label(m + 1) for m in range(inst.num_clauses)]
    n_lit = 2 * inst.num_vars
    target = fl.LocationInstance(
        kind=fl.MUFL, weights=weights, dist=dist,
        facility_indices=tuple(range(n_lit)),
        opening_costs=(Fraction(const["f"]),) * n_lit,
        labels=labels)
    clause_points = {m + 1: (n_lit + m,) for m in range(inst.num_clauses)}
    return ReductionArtifact(inst, target, const, _label_map(inst.num_vars, clause_points))


def _kmeans_values(eps: Fraction, c: Fraction) -> dict:
    return dict(pair=Fraction(1), near=1 + eps, far=1 + c * eps, other=1 + 2 * eps)


def reduce_sat_to_dkm(inst: sc.SatInstance, c=DEFAULT_C) -> ReductionArtifact:
    if inst.mode != sc.STD:
        raise ValueError("DKM reduction takes a standard Max-2-SAT instance")
    const = dkm_constants(inst, c)
    dist, weights, labels = _build(
        inst.num_vars, inst.clauses, inst.weights, const["W"],
        **_kmeans_values(const["epsilon"], const["c"]))
    labels += [fl.clause_label(m + 1) for m in range(inst.num_clauses)]
    target = fl.LocationInstance(kind=fl.DKM, weights=weights, dist=dist, k=const["K"], labels=labels)
    n_lit = 2 * inst.num_vars
    clause_points = {m + 1: (n_lit + m,) for m in range(inst.num_clauses)}
    return ReductionArtifact(inst, target, const, _label_map(inst.num_vars, clause_points))


def double_clauses(inst: sc.SatInstance) -> sc.SatInstance:
    """Duplicate every NAE clause; entry ``2m + 1`` stands for the negated pair of entry ``2m``.

    The NAE value of ``{~x_o, ~x_p}`` equals that of ``{x_o, x_p}``, so the copy
    is stored with positive literals; :func:`doubled_literals` recovers the
    negated form used for distances.
    """
    if inst.mode != sc.NAE:
        raise ValueError("clause doubling applies to NAE instances")
    clauses, weights = [], []
    for clause, w in zip(inst.clauses, inst.weights):
        clauses += [clause, clause]
        weights += [w, w]
    return sc.SatInstance(inst.num_vars, tuple(clauses), tuple(weights), sc.NAE)


def doubled_literals(doubled: sc.SatInstance) -> list[tuple[int, int]]:
    return [(a, b) if i % 2 == 0 else (-a, -b) for i, (a, b) in enumerate(doubled.clauses)]


def reduce_pnaesat_to_dfkm(inst: sc.SatInstance, c=DEFAULT_C) -> ReductionArtifact:
    if inst.mode != sc.NAE:
        raise ValueError("DFKM reduction takes a positive NAE Max-2-SAT instance")
    const = dfkm_constants(inst, c)
    doubled = double_clauses(inst)
    dist, weights, labels = _build(
        inst.num_vars, doubled_literals(doubled), doubled.weights, const["W"],
        **_kmeans_values(const["epsilon"], const["c"]))
    labels += [fl.clause_label(m + 1, i) for m in range(inst.num_clauses) for i in (1, 2)]
    target = fl.LocationInstance(kind=fl.DFKM, weights=weights, dist=dist, k=const["K"], labels=labels)
    n_lit = 2 * inst.num_vars
    clause_points = {m + 1: (n_lit + 2 * m, n_lit + 2 * m + 1) for m in range(inst.num_clauses)}
    return ReductionArtifact(inst, target, const, _label_map(inst.num_vars, clause_points))


def reduce(inst: sc.SatInstance, kind: str, c=DEFAULT_C) -> ReductionArtifact:
    if kind == fl.MUFL:
        return reduce_sat_to_mufl(inst)
    if kind == fl.DKM:
        return reduce_sat_to_dkm(inst, c)
    if kind == fl.DFKM:
        return reduce_pnaesat_to_dfkm(inst, c)
    raise ValueError(f"unknown target {kind!r}")


def derive_constants(source: sc.SatInstance, kind: str, c=DEFAULT_C) -> dict:
    if kind == fl.MUFL:
        return mufl_constants(source)
    if kind == fl.DKM:
        return dkm_constants(source, c)
    return dfkm_constants(source, c)


def map_solution_back(art: ReductionArtifact, O: Sequence[int]) -> tuple[int, ...]:
    """Variable n is true iff the point of literal x_n is open; clause points are ignored."""
    opened = set(O)
    return tuple(int(art.literal_point(n, True) in opened) for n in range(1, art.num_vars + 1))


def lift_assignment(art: ReductionArtifact, T: Sequence[int]) -> tuple[int, ...]:
    if len(T) != art.num_vars:
        raise ValueError(f"assignment has length {len(T)}, expected {art.num_vars}")
    return tuple(sorted(art.literal_point(n, bool(t)) for n, t in enumerate(T, start=1)))


def reasonable_solutions(art: ReductionArtifact) -> list[tuple[int, ...]]:
    return [lift_assignment(art, T) for T in sc.all_assignments(art.num_vars)]


# --- closed forms on reasonable solutions ---------------------------------

def _split_weights(inst: sc.SatInstance, T) -> tuple[int, int]:
    sat, unsat, _ = sc.clause_sets(inst, T)
    return (sum(inst.weights[m] for m in sat), sum(inst.weights[m] for m in unsat))


def gammas(N: int, eps, c):
    """The three per-clause fuzzy cost factors for 2, 1 and 0 near centers."""
    base = (N - 2) / (1 + 2 * eps)
    near, far = 1 / (1 + eps), 1 / (1 + c * eps)
    return 1 / (base + 2 * near), 1 / (base + near + far), 1 / (base + 2 * far)


def gamma_gap(N: int, eps, c):
    g1, g2, g3 = gammas(N, eps, c)
    return g1 + g3 - 2 * g2


def gamma_gap_factored(N: int, eps, c):
    base = (N - 2) / (1 + 2 * eps)
    near, far = 1 / (1 + eps), 1 / (1 + c * eps)
    return 2 * (far - near) ** 2 / ((base + 2 * near) * (base + 2 * far) * (base + near + far))


def closed_form_cost(art: ReductionArtifact, T: Sequence[int]):
    """Objective of the reasonable solution lifted from ``T``, computed without the distance matrix."""
    k = art.constants
    N = art.num_vars
    t, f = _split_weights(art.source, T)
    if art.kind == fl.MUFL:
        return Fraction(4, 3) * t + Fraction(5, 3) * f + 3 * k["W"] * N
    eps, c = k["epsilon"], k["c"]
    if art.kind == fl.DKM:
        return N * k["W"] + (1 + eps) * t + (1 + c * eps) * f
    g1, g2, g3 = gammas(N, eps, c)
    literals = N * k["W"] * (1 + 2 * eps) / (N + 2 * eps)
    return literals + 2 * g2 * t + (g1 + g3) * f


# --- artifact (de)serialisation -------------------------------------------

def source_hash(inst: sc.SatInstance) -> str:
    return hashlib.sha256(sc.format_wsat2(inst).encode()).hexdigest()


def artifact_to_dict(art: ReductionArtifact) -> dict:
    doc = fl.instance_to_dict(art.target)
    k = art.constants
    block = {
        "source_file_hash": source_hash(art.source),
        "target_kind": art.kind,
        "W": k["W"],
    }
    if "f" in k:
        block["f"] = str(k["f"])
    if "K" in k:
        block["K"] = k["K"]
    if "epsilon" in k:
        block["epsilon"] = str(k["epsilon"])
        block["c"] = str(k["c"])
    block["label_map"] = {
        "variables": {str(n): list(v) for n, v in art.label_map["variables"].items()},
        "clauses": {str(m): list(v) for m, v in art.label_map["clauses"].items()},
    }
    block["source"] = {
        "num_vars": art.source.num_vars,
        "mode": art.source.mode,
        "clauses": [list(cl) for cl in art.source.clauses],
        "weights": list(art.source.weights),
    }
    doc["reduction"] = block
    return doc


def artifact_from_dict(doc: dict) -> ReductionArtifact:
    target = fl.instance_from_dict(doc)
    block = doc["reduction"]
    src = block["source"]
    source = sc.SatInstance(src["num_vars"], tuple(tuple(c) for c in src["clauses"]),
                            tuple(src["weights"]), src["mode"])
    if source_hash(source) != block["source_file_hash"]:
        raise ValueError("reduction block: source hash does not match embedded source")
    const = {"W": block["W"]}
    if "f" in block:
        const["f"] = Fraction(block["f"])
        const["f"] = int(const["f"]) if const["f"].denominator == 1 else const["f"]
    if "K" in block:
        const["K"] = block["K"]
    if "epsilon" in block:
        const["epsilon"] = Fraction(block["epsilon"])
        const["c"] = Fraction(block["c"])
    lm = block["label_map"]
    label_map = {
        "variables": {int(n): tuple(v) for n, v in lm["variables"].items()},
        "clauses": {int(m): tuple(v) for m, v in lm["clauses"].items()},
    }
    return ReductionArtifact(source, target, const, label_map)
