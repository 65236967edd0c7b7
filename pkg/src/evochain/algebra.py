"""Element-level operations on a three-dimensional evolution algebra.

An algebra here is given by its 3x3 matrix of structural constants
``a[i][j]``: the basis squares are ``e_i * e_i = sum_j a[i][j] e_j`` and
distinct basis vectors multiply to zero.  Everything below is a pure
function of its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Optional, Sequence

import numpy as np

__all__ = [
    "StructuralMatrix",
    "NilpotentClassification",
    "IdempotentSet",
    "NewtonOptions",
    "Trajectory",
    "BaricResult",
    "multiply",
    "square",
    "baric_check",
    "nilpotent_classify",
    "idempotents_rank1",
    "idempotents_numeric",
    "rank1_factor",
    "evolve",
]

DEFAULT_TOL = 1e-9
IDEMPOTENT_RESIDUAL_TOL = 1e-8
NEWTON_RESIDUAL_TOL = 1e-10
DEDUP_RADIUS = 1e-6
DIVERGENCE_BOUND = 1e12


def _as_vec(x) -> np.ndarray:
    v = np.asarray(x, dtype=float).reshape(3)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"coordinates must be finite, got {v}")
    return v


@dataclass(frozen=True)
class StructuralMatrix:
    """3x3 real matrix of structural constants, with provenance."""

    entries: np.ndarray
    provenance: str = "custom"

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float).reshape(3, 3)
        if not np.all(np.isfinite(a)):
            raise ValueError("structural constants must all be finite")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def norm(self) -> float:
        """Max-abs-row-sum norm of the matrix."""
        return float(np.linalg.norm(self.entries, np.inf))

    @property
    def scale(self) -> float:
        return max(1.0, self.norm)


def multiply(M: StructuralMatrix, x, y) -> np.ndarray:
    """Product of two elements: z_j = sum_i a_ij x_i y_i."""
    x = _as_vec(x)
    y = _as_vec(y)
    return (x * y) @ M.entries


def square(M: StructuralMatrix, x) -> np.ndarray:
    """x^2, i.e. the evolution operator applied to x."""
    return multiply(M, x, x)


@dataclass(frozen=True)
class BaricResult:
    column: int  # 1-based index of the qualifying column
    weight: float  # diagonal entry a_{i0 i0}, the weight-function coefficient
    qualifying_columns: tuple[int, ...] = ()


def baric_check(M: StructuralMatrix, tol: float = DEFAULT_TOL) -> Optional[BaricResult]:
    """Character existence test.

    Looks for a column i0 with a nonzero diagonal entry and zeros off the
    diagonal; the weight function is then sigma(x) = a_{i0 i0} * x_{i0}.
    Returns the smallest qualifying column (all qualifiers are listed),
    or None.  Thresholds are relative to max(1, matrix norm), so scaling
    the matrix by a positive constant never changes the outcome.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = M.entries
    thresh = tol * M.scale
    qualifying = []
    for j in range(3):
        off = [abs(a[i, j]) for i in range(3) if i != j]
        if abs(a[j, j]) > thresh and max(off) <= thresh:
            qualifying.append(j)
    if not qualifying:
        return None
    j0 = qualifying[0]
    return BaricResult(
        column=j0 + 1,
        weight=float(a[j0, j0]),
        qualifying_columns=tuple(j + 1 for j in qualifying),
    )


@dataclass(frozen=True)
class NilpotentClassification:
    """Outcome of the x^2 = 0 analysis.

    kind is "only-zero" when x = 0 is the unique absolute nilpotent, or
    "positive-dimensional" when nonzero solutions exist; in the latter
    case `witness` is a vertex of {A^T y = 0, sum y = 1, y >= 0} and
    `nilpotent_witness` the element with x_i = sqrt(y_i).
    """

    kind: str
    witness: Optional[np.ndarray] = None
    nilpotent_witness: Optional[np.ndarray] = None
    support: tuple[int, ...] = ()

    @property
    def unique(self) -> bool:
        return self.kind == "only-zero"


def _support_patterns() -> list[tuple[int, ...]]:
    patterns = []
    for size in (1, 2, 3):
        patterns.extend(combinations(range(3), size))
    return patterns


def nilpotent_classify(M: StructuralMatrix, tol: float = DEFAULT_TOL) -> NilpotentClassification:
    """Classify the solution set of sum_i a_ij x_i^2 = 0.

    With y_i = x_i^2 >= 0 the system becomes the cone problem
    A^T y = 0, y >= 0.  The cone is {0} iff the normalized polytope
    {A^T y = 0, sum y = 1, y >= 0} is empty, which is decided exactly by
    enumerating the seven support patterns: any vertex of the polytope is
    the unique solution of the equality system restricted to its support.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    At = M.entries.T
    thresh = tol * M.scale
    for support in _support_patterns():
        k = len(support)
        # stack the three homogeneous equations with the normalization row
        rows = np.vstack([At[:, support], np.ones((1, k))])
        rhs = np.array([0.0, 0.0, 0.0, 1.0])
        y_s, *_ = np.linalg.lstsq(rows, rhs, rcond=None)
        if np.any(y_s < -tol):
            continue
        y = np.zeros(3)
        y[list(support)] = np.clip(y_s, 0.0, None)
        total = y.sum()
        if total <= 0:
            continue
        y /= total
        if np.max(np.abs(At @ y)) <= thresh:
            x = np.sqrt(y)
            return NilpotentClassification(
                kind="positive-dimensional",
                witness=y,
                nilpotent_witness=x,
                support=tuple(i + 1 for i in support if y[i] > tol),
            )
    return NilpotentClassification(kind="only-zero")


@dataclass(frozen=True)
class IdempotentSet:
    """Solutions of x^2 = x, with per-point residuals and discovery method."""

    points: tuple[np.ndarray, ...]
    residuals: tuple[float, ...]
    methods: tuple[str, ...]
    completeness: str  # "certified-rank1" | "heuristic-multistart"
    note: str = ""

    def __len__(self) -> int:
        return len(self.points)

    def contains(self, x, radius: float = DEDUP_RADIUS) -> bool:
        x = _as_vec(x)
        return any(np.max(np.abs(p - x)) <= radius for p in self.points)


def _sort_points(points: Sequence[np.ndarray]) -> list[np.ndarray]:
    return sorted(points, key=lambda p: (p[0], p[1], p[2]))


def rank1_factor(M: StructuralMatrix, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Factor the matrix as a_ij = u_i v_j; raises if it is not rank <= 1."""
    a = M.entries
    u_mat, sing, vt = np.linalg.svd(a)
    if sing[1] > tol * M.scale:
        raise ValueError("matrix is not rank-1 within tolerance")
    if sing[0] <= tol * M.scale:
        return np.zeros(3), np.zeros(3)
    return u_mat[:, 0] * sing[0], vt[0]


def idempotents_rank1(u, v, tol: float = DEFAULT_TOL) -> IdempotentSet:
    """Closed-form idempotents for a rank-1 matrix a_ij = u_i v_j.

    The system x_j = v_j * Q with Q = sum_i u_i x_i^2 collapses to the
    scalar equation Q = S * Q^2, S = sum_i u_i v_i^2: besides 0 the only
    candidate is x = v / S, which exists iff S is nonzero.
    """
    u = _as_vec(u)
    v = _as_vec(v)
    M = StructuralMatrix(np.outer(u, v), provenance="rank1")
    s_val = float(u @ v**2)
    zero = np.zeros(3)
    points = [zero]
    note = ""
    if abs(s_val) > tol:
        points.append(v / s_val)
    else:
        note = "nonzero solution diverges (S = sum u_i v_i^2 vanishes)"
    points = _sort_points(points)
    residuals = tuple(float(np.max(np.abs(square(M, p) - p))) for p in points)
    return IdempotentSet(
        points=tuple(points),
        residuals=residuals,
        methods=("closed-form",) * len(points),
        completeness="certified-rank1",
        note=note,
    )


@dataclass(frozen=True)
class NewtonOptions:
    box: float = 10.0
    grid: int = 7
    max_iter: int = 80
    residual_tol: float = NEWTON_RESIDUAL_TOL
    dedup_radius: float = DEDUP_RADIUS
    seeds: tuple = ()


def _newton_multistart(A: np.ndarray, starts: np.ndarray, opts: NewtonOptions, scale: float) -> np.ndarray:
    """Damped Newton on R(x) = x^2 - x from many starts at once; returns converged points."""
    X = starts.copy()
    eye = np.eye(3)

    def resid(P):
        return (P**2) @ A - P

    accept_tol = opts.residual_tol * scale
    # iterate well past the acceptance threshold so accepted roots are
    # polished to the rounding floor (stalled steps freeze the iterate)
    target = 8 * np.finfo(float).eps * scale
    active = np.ones(len(X), dtype=bool)
    for _ in range(opts.max_iter):
        R = resid(X)
        rnorm = np.max(np.abs(R), axis=1)
        active &= rnorm > target
        active &= np.max(np.abs(X), axis=1) < DIVERGENCE_BOUND
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        # J_{jk} = 2 a_kj x_k - delta_jk
        J = 2.0 * A.T[None, :, :] * X[idx, None, :] - eye[None, :, :]
        det = np.linalg.det(J)
        solvable = np.abs(det) > 1e-14
        if not solvable.any():
            active[idx] = False
            break
        active[idx[~solvable]] = False
        idx = idx[solvable]
        step = np.linalg.solve(J[solvable], -R[idx][:, :, None])[:, :, 0]
        # backtracking: halve the step until the residual improves
        alpha = np.ones(len(idx))
        base = rnorm[idx]
        accepted = np.zeros(len(idx), dtype=bool)
        Xn = X[idx].copy()
        for _ in range(25):
            trial = X[idx] + alpha[:, None] * step
            tnorm = np.max(np.abs(resid(trial)), axis=1)
            better = ~accepted & ((tnorm < base) | (tnorm <= target))
            Xn[better] = trial[better]
            accepted |= better
            if accepted.all():
                break
            alpha[~accepted] *= 0.5
        # starts whose backtracking stalls are dropped
        active[idx[~accepted]] = False
        X[idx[accepted]] = Xn[accepted]
    final = resid(X)
    rnorm = np.max(np.abs(final), axis=1)
    # floating-point floor: at large |x| the residual cannot beat rounding
    floor = 64 * np.finfo(float).eps * scale * np.maximum(1.0, np.max(np.abs(X), axis=1)) ** 2
    ok = (rnorm <= accept_tol) | (rnorm <= floor)
    ok &= np.all(np.isfinite(X), axis=1)
    return X[ok]


def idempotents_numeric(M: StructuralMatrix, opts: NewtonOptions | None = None) -> IdempotentSet:
    """Multi-start Newton fallback for x^2 = x on an arbitrary matrix.

    Starts on a deterministic cube grid plus the origin and any caller
    seeds (e.g. a rank-1 closed form); converged roots are deduplicated.
    The zero element is always reported since it is an exact root.
    """
    opts = opts or NewtonOptions()
    A = M.entries
    axis = np.linspace(-opts.box, opts.box, opts.grid)
    grid = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 3)
    extra = [np.zeros(3)] + [_as_vec(seed) for seed in opts.seeds]
    starts = np.vstack([grid, np.array(extra)])
    converged = _newton_multistart(A, starts, opts, M.scale)

    points: list[np.ndarray] = [np.zeros(3)]
    for p in converged:
        if not any(np.max(np.abs(p - q)) <= opts.dedup_radius for q in points):
            points.append(p)
    points = _sort_points(points)
    residuals = tuple(float(np.max(np.abs(square(M, p) - p))) for p in points)
    methods = tuple("closed-form" if np.max(np.abs(p)) == 0 else "newton" for p in points)
    return IdempotentSet(
        points=tuple(points),
        residuals=residuals,
        methods=methods,
        completeness="heuristic-multistart",
    )


@dataclass(frozen=True)
class Trajectory:
    points: tuple[np.ndarray, ...]
    diverged: bool = False

    def __len__(self) -> int:
        return len(self.points)


def evolve(M: StructuralMatrix, x0, k: int) -> Trajectory:
    """Iterate the evolution operator k times from x0.

    Stops early with the diverged flag once the max-abs coordinate
    exceeds 1e12.
    """
    if k < 0:
        raise ValueError("step count must be >= 0")
    x = _as_vec(x0)
    points = [x]
    for _ in range(k):
        if np.max(np.abs(x)) > DIVERGENCE_BOUND:
            return Trajectory(points=tuple(points), diverged=True)
        x = square(M, x)
        points.append(x)
    return Trajectory(points=tuple(points))
