"""Weighted Max-2-SAT and positive NAE Max-2-SAT with the Flip neighbourhood.

Literals are signed nonzero integers (``3`` is x3, ``-3`` is the negation of
x3), variables are numbered from 1.  Assignments are tuples of 0/1 ints indexed
from 0, so variable ``n`` lives at ``T[n - 1]``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

STD = "std"
NAE = "nae"

INT64_MAX = 2**63 - 1


class SatFormatError(ValueError):
    """Raised on malformed wsat2 input; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class SatInstance:
    num_vars: int
    clauses: tuple[tuple[int, int], ...]
    weights: tuple[int, ...]
    mode: str = STD

    def __post_init__(self):
        object.__setattr__(self, "clauses", tuple(tuple(c) for c in self.clauses))
        object.__setattr__(self, "weights", tuple(self.weights))
        if self.mode not in (STD, NAE):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.num_vars < 1:
            raise ValueError("num_vars must be positive")
        if len(self.clauses) != len(self.weights):
            raise ValueError("one weight per clause required")
        for m, clause in enumerate(self.clauses):
            if len(clause) != 2:
                raise ValueError(f"clause {m + 1} does not have exactly 2 literals")
            for lit in clause:
                if not isinstance(lit, int) or lit == 0 or abs(lit) > self.num_vars:
                    raise ValueError(f"clause {m + 1}: literal {lit!r} out of range")
                if self.mode == NAE and lit < 0:
                    raise ValueError(f"clause {m + 1}: NAE clauses take positive literals only")
        total = 0
        for w in self.weights:
            if not isinstance(w, int) or isinstance(w, bool) or w < 1:
                raise ValueError(f"weights must be integers >= 1, got {w!r}")
            total += w
        if total > INT64_MAX:
            raise OverflowError("total clause weight exceeds 64-bit range")

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    @property
    def w_max(self) -> int:
        return max(self.weights) if self.weights else 0

    @property
    def total_weight(self) -> int:
        return sum(self.weights)


def _check(inst: SatInstance, T: Sequence[int], mode: str | None = None) -> None:
    if mode is not None and inst.mode != mode:
        raise ValueError(f"expected a {mode} instance, got {inst.mode}")
    if len(T) != inst.num_vars:
        raise ValueError(f"assignment has length {len(T)}, instance has {inst.num_vars} variables")


def literal_true(lit: int, T: Sequence[int]) -> bool:
    value = bool(T[abs(lit) - 1])
    return value if lit > 0 else not value


def clause_satisfied(inst: SatInstance, m: int, T: Sequence[int]) -> bool:
    a, b = inst.clauses[m]
    if inst.mode == NAE:
        return bool(T[a - 1]) != bool(T[b - 1])
    return literal_true(a, T) or literal_true(b, T)


def sat_cost(inst: SatInstance, T: Sequence[int]) -> int:
    """Total weight of clauses with at least one true literal."""
    _check(inst, T, STD)
    return sum(w for m, w in enumerate(inst.weights) if clause_satisfied(inst, m, T))


def nae_cost(inst: SatInstance, T: Sequence[int]) -> int:
    """Total weight of clauses whose two variables take different values."""
    _check(inst, T, NAE)
    return sum(w for m, w in enumerate(inst.weights) if clause_satisfied(inst, m, T))


def cost(inst: SatInstance, T: Sequence[int]) -> int:
    """Mode-dispatching cost: ``sat_cost`` for STD, ``nae_cost`` for NAE."""
    return nae_cost(inst, T) if inst.mode == NAE else sat_cost(inst, T)


def clause_sets(inst: SatInstance, T: Sequence[int]):
    """Return ``(satisfied, unsatisfied, by_literal)``.

    The first two are frozensets of 0-based clause indices.  ``by_literal``
    maps every literal of the instance (``±n``) to the sorted tuple of clause
    indices containing it.
    """
    _check(inst, T)
    sat = frozenset(m for m in range(inst.num_clauses) if clause_satisfied(inst, m, T))
    unsat = frozenset(range(inst.num_clauses)) - sat
    return sat, unsat, literal_index(inst)


def literal_index(inst: SatInstance) -> dict[int, tuple[int, ...]]:
    index: dict[int, list[int]] = {}
    for n in range(1, inst.num_vars + 1):
        index[n] = []
        index[-n] = []
    for m, clause in enumerate(inst.clauses):
        for lit in dict.fromkeys(clause):
            index[lit].append(m)
    return {lit: tuple(ms) for lit, ms in index.items()}


def flip(T: Sequence[int], i: int) -> tuple[int, ...]:
    """Flip the variable at 0-based position ``i``."""
    out = list(T)
    out[i] = 1 - int(bool(out[i]))
    return tuple(out)


def flip_neighbors(T: Sequence[int]) -> list[tuple[int, ...]]:
    return [flip(T, i) for i in range(len(T))]


def complement(T: Sequence[int]) -> tuple[int, ...]:
    return tuple(1 - int(bool(t)) for t in T)


def all_assignments(n: int) -> Iterator[tuple[int, ...]]:
    """All 2**n assignments in binary-counting order, most significant first."""
    for k in range(2**n):
        yield tuple((k >> (n - 1 - i)) & 1 for i in range(n))


def is_flip_optimal(inst: SatInstance, T: Sequence[int]) -> bool:
    """True iff no single flip strictly increases the cost."""
    base = cost(inst, T)
    return all(cost(inst, T2) <= base for T2 in flip_neighbors(T))


# --- wsat2 text format ---------------------------------------------------

def parse_wsat2(text: str) -> SatInstance:
    header = None
    clauses: list[tuple[int, int]] = []
    weights: list[int] = []
    expected = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line or line.startswith("c "):
            continue
        parts = line.split()
        if header is None:
            if len(parts) != 5 or parts[0] != "p" or parts[1] != "wsat2":
                raise SatFormatError("expected header 'p wsat2 <N> <M> <std|nae>'", lineno)
            try:
                n, expected = int(parts[2]), int(parts[3])
            except ValueError:
                raise SatFormatError("N and M must be integers", lineno) from None
            if parts[4] not in (STD, NAE):
                raise SatFormatError(f"mode must be std or nae, got {parts[4]!r}", lineno)
            header = (n, parts[4])
            continue
        if len(parts) != 3:
            raise SatFormatError("clause line needs '<lit1> <lit2> <weight>'", lineno)
        try:
            a, b, w = (int(p) for p in parts)
        except ValueError:
            raise SatFormatError("non-integer token in clause line", lineno) from None
        n, mode = header
        for lit in (a, b):
            if lit == 0 or abs(lit) > n:
                raise SatFormatError(f"literal {lit} out of range 1..{n}", lineno)
            if mode == NAE and lit < 0:
                raise SatFormatError("negative literal in nae instance", lineno)
        if w < 1:
            raise SatFormatError("clause weight must be >= 1", lineno)
        clauses.append((a, b))
        weights.append(w)
    if header is None:
        raise SatFormatError("missing header line")
    if len(clauses) != expected:
        raise SatFormatError(f"header announces {expected} clauses, found {len(clauses)}")
    try:
        return SatInstance(header[0], tuple(clauses), tuple(weights), header[1])
    except ValueError as exc:
        raise SatFormatError(str(exc)) from exc


def format_wsat2(inst: SatInstance) -> str:
    lines = [f"p wsat2 {inst.num_vars} {inst.num_clauses} {inst.mode}"]
    lines += [f"{a} {b} {w}" for (a, b), w in zip(inst.clauses, inst.weights)]
    return "\n".join(lines) + "\n"


def parse_assignment(s: str, num_vars: int | None = None) -> tuple[int, ...]:
    s = s.strip()
    if not s or any(ch not in "01" for ch in s):
        raise ValueError(f"assignment must be a string of 0/1 characters, got {s!r}")
    if num_vars is not None and len(s) != num_vars:
        raise ValueError(f"assignment has length {len(s)}, expected {num_vars}")
    return tuple(int(ch) for ch in s)


def format_assignment(T: Sequence[int]) -> str:
    return "".join("1" if t else "0" for t in T)


def random_instance(rng, num_vars: int, num_clauses: int, mode: str = STD,
                    max_weight: int = 3) -> SatInstance:
    """Random instance with two distinct variables per clause (``rng``: ``random.Random``)."""
    if num_vars < 2:
        raise ValueError("need at least 2 variables for distinct-variable clauses")
    clauses = []
    for _ in range(num_clauses):
        a, b = sorted(rng.sample(range(1, num_vars + 1), 2))
        if mode == STD:
            a *= rng.choice((1, -1))
            b *= rng.choice((1, -1))
        clauses.append((a, b))
    weights = [rng.randint(1, max_weight) for _ in range(num_clauses)]
    return SatInstance(num_vars, tuple(clauses), tuple(weights), mode)
