"""MUFL, DKM and DFKM objectives and single-swap neighbourhoods.

All three problems share one instance type.  Every point is a client; for
MUFL a subset of points doubles as facility locations, for the K-means
variants every point is a candidate center.  Distances are kept in whatever
number type they arrive in, so reductions built from ``Fraction`` constants
are evaluated exactly.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import Iterator, Sequence

import numpy as np

MUFL = "mufl"
DKM = "dkm"
DFKM = "dfkm"
KINDS = (MUFL, DKM, DFKM)

ROW_SUM_TOL = 1e-12

_LITERAL_RE = re.compile(r"^(~|¬|-|!)?x(\d+)$")


class InfeasibleSolution(ValueError):
    pass


class MissingLabels(ValueError):
    pass


def literal_label(n: int, positive: bool) -> str:
    return f"x{n}" if positive else f"~x{n}"


def clause_label(m: int, copy: int | None = None) -> str:
    return f"b{m}" if copy is None else f"b{m}.{copy}"


def parse_literal_label(label: str):
    """``'x3'`` -> ``(3, True)``, ``'~x3'``/``'¬x3'`` -> ``(3, False)``, otherwise None."""
    match = _LITERAL_RE.match(label.strip())
    if not match:
        return None
    return int(match.group(2)), match.group(1) is None


def to_number(value):
    """Parse ``"p/q"``, decimal strings, ints and floats into exact numbers where possible."""
    if isinstance(value, (int, Fraction)) and not isinstance(value, bool):
        return Fraction(value)
    if isinstance(value, float):
        return value
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as a number")


def format_number(x) -> str:
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


@dataclass(frozen=True, eq=False)
class LocationInstance:
    kind: str
    weights: tuple
    dist: tuple
    facility_indices: tuple | None = None
    opening_costs: tuple | None = None
    k: int | None = None
    labels: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(self.weights))
        object.__setattr__(self, "dist", tuple(tuple(row) for row in self.dist))
        n = len(self.weights)
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if any(w <= 0 for w in self.weights):
            raise ValueError("client weights must be positive")
        if len(self.dist) != n or any(len(row) != n for row in self.dist):
            raise ValueError(f"distance matrix must be {n}x{n}")
        for i in range(n):
            if self.dist[i][i] != 0:
                raise ValueError(f"nonzero diagonal entry at {i}")
            for j in range(i + 1, n):
                if self.dist[i][j] != self.dist[j][i]:
                    raise ValueError(f"distance matrix not symmetric at ({i}, {j})")
                if self.dist[i][j] < 0:
                    raise ValueError(f"negative distance at ({i}, {j})")
        if self.kind == MUFL:
            if self.opening_costs is None or self.k is not None:
                raise ValueError("MUFL instances need opening costs and no budget k")
            if self.facility_indices is None:
                object.__setattr__(self, "facility_indices", tuple(range(n)))
            object.__setattr__(self, "facility_indices", tuple(self.facility_indices))
            object.__setattr__(self, "opening_costs", tuple(self.opening_costs))
            if len(self.opening_costs) != len(self.facility_indices):
                raise ValueError("one opening cost per facility required")
            if any(f < 0 for f in self.opening_costs):
                raise ValueError("opening costs must be nonnegative")
            if not self.facility_indices or any(not 0 <= i < n for i in self.facility_indices):
                raise ValueError("facility indices out of range")
            if len(set(self.facility_indices)) != len(self.facility_indices):
                raise ValueError("duplicate facility index")
        else:
            if self.k is None or self.opening_costs is not None:
                raise ValueError(f"{self.kind} instances need a budget k and no opening costs")
            if not 1 <= self.k <= n:
                raise ValueError(f"k must lie in 1..{n}")
            object.__setattr__(self, "facility_indices", tuple(range(n)))
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))
            if len(self.labels) != n:
                raise ValueError("one label per point required")

    @property
    def n_points(self) -> int:
        return len(self.weights)

    @cached_property
    def opening_cost(self) -> dict:
        if self.kind != MUFL:
            return {}
        return dict(zip(self.facility_indices, self.opening_costs))

    @cached_property
    def inverse_dist(self) -> tuple:
        """Elementwise reciprocals of the distances, ``None`` where the distance is 0."""
        return tuple(tuple(None if d == 0 else 1 / d for d in row) for row in self.dist)

    @cached_property
    def label_index(self) -> dict:
        if self.labels is None:
            return {}
        return {label: i for i, label in enumerate(self.labels)}

    @cached_property
    def literal_points(self) -> dict:
        """Map ``(n, polarity)`` to the point index carrying that literal label."""
        if self.labels is None:
            raise MissingLabels("instance carries no reduction labels")
        out = {}
        for i, label in enumerate(self.labels):
            parsed = parse_literal_label(label) if label else None
            if parsed is not None:
                out[parsed] = i
        if not out:
            raise MissingLabels("instance carries no literal labels")
        return out

    @property
    def num_vars(self) -> int:
        return max(n for n, _ in self.literal_points)

    def as_float(self) -> np.ndarray:
        return np.array([[float(d) for d in row] for row in self.dist], dtype=float)

    def is_exact(self) -> bool:
        return all(isinstance(d, (int, Fraction)) for row in self.dist for d in row)

    def point(self, token) -> int:
        """Resolve a label (``'x1'``, ``'¬x2'``, ``'b1'``) or integer string to a point index."""
        if isinstance(token, int):
            return token
        token = token.strip()
        if token.lstrip("-").isdigit():
            return int(token)
        parsed = parse_literal_label(token)
        if parsed is not None and self.labels is not None:
            return self.literal_points[parsed]
        if token in self.label_index:
            return self.label_index[token]
        raise KeyError(f"unknown point {token!r}")


def check_solution(inst: LocationInstance, O: Sequence[int]) -> tuple[int, ...]:
    """Validate ``O`` against the instance and return it as a sorted tuple."""
    sol = tuple(sorted(set(O)))
    if len(sol) != len(O):
        raise InfeasibleSolution("solution contains duplicate indices")
    if inst.kind == MUFL:
        if not sol:
            raise InfeasibleSolution("MUFL solution must open at least one facility")
        bad = set(sol) - set(inst.facility_indices)
        if bad:
            raise InfeasibleSolution(f"indices {sorted(bad)} are not facilities")
    else:
        if len(sol) != inst.k:
            raise InfeasibleSolution(f"solution has {len(sol)} centers, budget is k={inst.k}")
        if sol and not (0 <= sol[0] and sol[-1] < inst.n_points):
            raise InfeasibleSolution("center index out of range")
    return sol


def service_cost(inst: LocationInstance, O: Sequence[int], clients=None):
    """Weighted distance from every client to its nearest open location."""
    if not O:
        raise InfeasibleSolution("distance to an empty set of locations is undefined")
    clients = range(inst.n_points) if clients is None else clients
    total = 0
    for c in clients:
        row = inst.dist[c]
        total += inst.weights[c] * min(row[o] for o in O)
    return total


def mufl_cost(inst: LocationInstance, O: Sequence[int]):
    O = check_solution(inst, O)
    return service_cost(inst, O) + sum(inst.opening_cost[o] for o in O)


def dkm_cost(inst: LocationInstance, O: Sequence[int]):
    return service_cost(inst, check_solution(inst, O))


def _fuzzy_point_cost(inst: LocationInstance, c: int, O: Sequence[int]):
    inv = inst.inverse_dist[c]
    total = 0
    for o in O:
        if inv[o] is None:
            return 0
        total += inv[o]
    return 1 / total


def dfkm_cost(inst: LocationInstance, O: Sequence[int]):
    """Fuzzy K-means cost with memberships already optimised out.

    Each non-center contributes its weight divided by the sum of reciprocal
    distances to the centers.  Exact when the distances are rationals.
    """
    O = check_solution(inst, O)
    chosen = set(O)
    return sum(inst.weights[c] * _fuzzy_point_cost(inst, c, O)
               for c in range(inst.n_points) if c not in chosen)


def optimal_memberships(inst: LocationInstance, O: Sequence[int]) -> np.ndarray:
    """Cost-minimising fuzzy memberships, one row per point, one column per center of ``O``.

    Rows are proportional to reciprocal distances.  A point at distance zero
    from some centers splits its membership equally among those centers.
    """
    O = check_solution(inst, O)
    r = np.zeros((inst.n_points, len(O)))
    for c in range(inst.n_points):
        inv = [inst.inverse_dist[c][o] for o in O]
        zeros = [j for j, v in enumerate(inv) if v is None]
        if zeros:
            r[c, zeros] = 1.0 / len(zeros)
            continue
        total = sum(inv)
        r[c] = [float(v / total) for v in inv]
    return r


def fuzzy_cost_with(inst: LocationInstance, O: Sequence[int], r) -> float:
    """Weighted fuzzy objective for an arbitrary membership matrix ``r``."""
    O = check_solution(inst, O)
    d = inst.as_float()[:, list(O)]
    w = np.asarray([float(x) for x in inst.weights])
    return float(np.sum(w[:, None] * np.asarray(r) ** 2 * d))


def objective(inst: LocationInstance, O: Sequence[int]):
    if inst.kind == MUFL:
        return mufl_cost(inst, O)
    if inst.kind == DKM:
        return dkm_cost(inst, O)
    return dfkm_cost(inst, O)


# --- neighbourhoods --------------------------------------------------------

def move_key(move) -> tuple[int, int]:
    drop, add = move
    return (-1 if drop is None else drop, -1 if add is None else add)


def format_move(move) -> str:
    drop, add = move
    if drop is None:
        return f"add:{add}"
    if add is None:
        return f"drop:{drop}"
    return f"swap:{drop}->{add}"


def swap_moves(inst: LocationInstance, O: Sequence[int]) -> list[tuple[tuple, tuple[int, ...]]]:
    """All single-swap moves from ``O`` as ``((drop, add), neighbour)`` pairs.

    ``drop``/``add`` are ``None`` for pure additions/removals (MUFL only).
    Ordered by dropped index, then added index, with ``None`` first.
    """
    O = check_solution(inst, O)
    opened = set(O)
    closed = [i for i in inst.facility_indices if i not in opened]
    closed.sort()
    moves = []
    if inst.kind == MUFL:
        for j in closed:
            moves.append(((None, j), tuple(sorted(O + (j,)))))
    for i in O:
        rest = tuple(o for o in O if o != i)
        if inst.kind == MUFL and rest:
            moves.append(((i, None), rest))
        for j in closed:
            moves.append(((i, j), tuple(sorted(rest + (j,)))))
    moves.sort(key=lambda mv: move_key(mv[0]))
    return moves


def swap_neighbors(inst: LocationInstance, O: Sequence[int]) -> list[tuple[int, ...]]:
    return [sol for _, sol in swap_moves(inst, O)]


def all_solutions(inst: LocationInstance) -> Iterator[tuple[int, ...]]:
    """Every feasible solution, smaller cardinalities first then lexicographic."""
    if inst.kind == MUFL:
        F = sorted(inst.facility_indices)
        for size in range(1, len(F) + 1):
            yield from combinations(F, size)
    else:
        yield from combinations(range(inst.n_points), inst.k)


def count_solutions(inst: LocationInstance) -> int:
    from math import comb
    if inst.kind == MUFL:
        return 2 ** len(inst.facility_indices) - 1
    return comb(inst.n_points, inst.k)


# --- reduction-aware predicates -------------------------------------------

def is_reasonable(inst: LocationInstance, O: Sequence[int]) -> bool:
    """Exactly one literal point per variable is open, and nothing else."""
    lits = inst.literal_points
    N = max(n for n, _ in lits)
    if len(set(O)) != N:
        return False
    opened = set(O)
    return all(lits.get((n, True)) in opened or lits.get((n, False)) in opened
               for n in range(1, N + 1))


def triangle_violations(inst: LocationInstance, limit: int | None = 1) -> list[tuple[int, int, int]]:
    """Triples ``(i, j, k)`` with ``d(i, k) > d(i, j) + d(j, k)``."""
    n = inst.n_points
    d = inst.dist
    found = []
    for i in range(n):
        for j in range(n):
            dij = d[i][j]
            for k in range(n):
                if d[i][k] > dij + d[j][k]:
                    found.append((i, j, k))
                    if limit is not None and len(found) >= limit:
                        return found
    return found


def is_metric(inst: LocationInstance) -> bool:
    return not triangle_violations(inst)


# --- JSON ----------------------------------------------------------------

def instance_to_dict(inst: LocationInstance) -> dict:
    return {
        "kind": inst.kind,
        "n_points": inst.n_points,
        "weights": [format_number(w) if not isinstance(w, int) else w for w in inst.weights],
        "dist": [[format_number(d) for d in row] for row in inst.dist],
        "facility_indices": list(inst.facility_indices) if inst.kind == MUFL else None,
        "opening_costs": ([format_number(f) for f in inst.opening_costs]
                          if inst.opening_costs is not None else None),
        "k": inst.k,
        "labels": list(inst.labels) if inst.labels is not None else None,
    }


def instance_from_dict(doc: dict) -> LocationInstance:
    n = doc.get("n_points")
    weights = [w if isinstance(w, int) else to_number(w) for w in doc["weights"]]
    if n is None:
        n = len(weights)
    raw = doc["dist"]
    if raw and not isinstance(raw[0], list):
        if len(raw) != n * n:
            raise ValueError(f"flat dist needs {n * n} entries, got {len(raw)}")
        raw = [raw[i * n:(i + 1) * n] for i in range(n)]
    dist = [[to_number(x) for x in row] for row in raw]
    costs = doc.get("opening_costs")
    return LocationInstance(
        kind=doc["kind"],
        weights=weights,
        dist=dist,
        facility_indices=doc.get("facility_indices"),
        opening_costs=[to_number(f) for f in costs] if costs is not None else None,
        k=doc.get("k"),
        labels=doc.get("labels"),
    )


def dumps_instance(inst: LocationInstance, extra: dict | None = None) -> str:
    doc = instance_to_dict(inst)
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=1, sort_keys=False) + "\n"


def format_solution(O: Sequence[int]) -> str:
    return " ".join(str(i) for i in sorted(O))
