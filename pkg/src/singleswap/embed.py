"""Euclidean realisation of squared-distance matrices (classical MDS).

A squared-distance matrix ``M`` is realisable iff the double-centred Gram
matrix ``G = -1/2 J M J`` is positive semidefinite; the eigenvectors of ``G``
then give coordinates directly.  The eigensolver is a cyclic Jacobi sweep so
results are deterministic down to the rotation order.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .facility import format_number, to_number

DEFAULT_TOL = 1e-9


class NotEmbeddable(ValueError):
    def __init__(self, result: "SchoenbergResult"):
        self.result = result
        super().__init__(f"matrix is not a squared Euclidean distance matrix "
                         f"(min Gram eigenvalue {result.min_eigenvalue:.3e})")


def _as_matrix(M) -> np.ndarray:
    A = np.array([[float(x) for x in row] for row in M], dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("distance matrix must be square")
    if not np.array_equal(A, A.T):
        raise ValueError("distance matrix must be symmetric")
    if np.any(np.diag(A) != 0):
        raise ValueError("distance matrix must have a zero diagonal")
    return A


def jacobi_eigh(A, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps visit pairs ``(p, q)``, ``p < q``, in row order until the
    off-diagonal Frobenius mass falls below ``tol`` times the matrix norm.
    Returns ``(eigenvalues, eigenvectors)`` sorted by ascending eigenvalue,
    eigenvectors as columns.
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    scale = max(np.linalg.norm(A), 1.0)
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta  # theta**2 would overflow
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # A <- R^T A R with R the (p, q) rotation
                Ap, Aq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Ap, Aq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
                A[p, q] = A[q, p] = 0.0
                Vp, Vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * Vp - s * Vq
                V[:, q] = s * Vp + c * Vq
    else:
        raise RuntimeError("Jacobi iteration did not converge")
    evals = np.diag(A).copy()
    order = np.argsort(evals, kind="stable")
    return evals[order], V[:, order]


def double_center(M) -> np.ndarray:
    A = _as_matrix(M)
    n = A.shape[0]
    J = np.eye(n) - np.ones((n, n)) / n
    G = -0.5 * J @ A @ J
    return (G + G.T) / 2


@dataclass
class SchoenbergResult:
    embeddable: bool
    min_eigenvalue: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    witness: np.ndarray | None = None

    def __bool__(self):
        return self.embeddable


def _normalise_witness(u: np.ndarray) -> np.ndarray:
    u = u - u.mean()
    big = np.max(np.abs(u))
    nonzero = np.abs(u)[np.abs(u) > 1e-9 * big]
    u = u / nonzero.min()
    first = u[np.abs(u) > 1e-9 * np.max(np.abs(u))][0]
    if first < 0:
        u = -u
    return u - u.mean()


def schoenberg_check(M, tol: float = DEFAULT_TOL) -> SchoenbergResult:
    """Decide whether ``M`` is realisable as squared Euclidean distances.

    On failure ``witness`` holds a vector ``u`` with ``sum(u) == 0`` and
    ``u @ M @ u > 0``: the eigenvector of the most negative Gram eigenvalue,
    scaled so its smallest nonzero entry has magnitude 1.
    """
    G = double_center(M)
    evals, evecs = jacobi_eigh(G)
    lam = float(evals[0])
    if lam >= -tol:
        return SchoenbergResult(True, lam, evals, evecs)
    return SchoenbergResult(False, lam, evals, evecs, _normalise_witness(evecs[:, 0]))


@dataclass
class EmbeddingResult:
    points: np.ndarray
    max_abs_error: float

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def roundtrip_error(M, P) -> float:
    """Largest deviation between squared pairwise distances of ``P`` and ``M``."""
    A = np.array([[float(x) for x in row] for row in M], dtype=float)
    P = np.asarray(P, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    if P.shape[0] != A.shape[0]:
        raise ValueError("point count does not match matrix size")
    sq = np.sum(P * P, axis=1)
    D = sq[:, None] + sq[None, :] - 2 * P @ P.T
    return float(np.max(np.abs(D - A))) if A.size else 0.0


def classical_mds(M, tol: float = DEFAULT_TOL) -> EmbeddingResult:
    """Points whose squared distances reproduce ``M``, one row per point."""
    check = schoenberg_check(M, tol)
    if not check.embeddable:
        raise NotEmbeddable(check)
    evals = check.eigenvalues[::-1]
    evecs = check.eigenvectors[:, ::-1]
    keep = evals > tol
    P = evecs[:, keep] * np.sqrt(evals[keep])
    if P.shape[1] == 0:
        P = np.zeros((len(evals), 0))
    return EmbeddingResult(P, roundtrip_error(M, P))


# --- CSV formats ----------------------------------------------------------

def format_matrix_csv(M) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([len(M)])
    for row in M:
        writer.writerow([format_number(x) for x in row])
    return buf.getvalue()


def parse_matrix_csv(text: str) -> list[list]:
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows:
        raise ValueError("empty matrix file")
    n = int(rows[0][0])
    body = rows[1:]
    if len(body) != n or any(len(r) != n for r in body):
        raise ValueError(f"header announces {n}x{n} matrix")
    return [[to_number(x) for x in r] for r in body]


def format_points_csv(P) -> str:
    P = np.asarray(P, dtype=float)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([P.shape[0], P.shape[1]])
    for row in P:
        writer.writerow([repr(float(x)) for x in row])
    return buf.getvalue()
