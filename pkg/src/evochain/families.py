"""The six closed-form chain families and their predicted-property oracles.

Family ids F0..F5 are the canonical names used throughout this package.
Each family maps a time pair (s, t) with 0 <= s <= t to a 3x3 structural
matrix; all six closed forms are rank-1, which the idempotent fast path
exploits.  F2 and F5 are step families: they switch to the zero matrix
once t reaches the threshold ``a``.

Besides the constructors this module carries the predicted classification
sets (baric / unique-nilpotent / idempotent lists) used to cross-check the
numerical classifiers, plus boundary-distance helpers so grid sweeps can
skip cells too close to a set boundary for a float comparison to be fair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .algebra import DEFAULT_TOL, StructuralMatrix
from .expr import EvalDomainError, TimeExpr, parse, restrict_variables

__all__ = [
    "CeaFamily",
    "FamilyError",
    "UndefinedMatrixError",
    "TripleSampler",
    "CkReport",
    "FAMILY_ROLES",
    "make_family",
    "matrix_at",
    "rank1_factors",
    "ck_residual",
    "verify_ck",
    "predicted_baric",
    "predicted_nilpotent_unique",
    "predicted_idempotents",
    "baric_boundary_distance",
    "nilpotent_boundary_distance",
]

# role name -> variable the expression may use
FAMILY_ROLES: dict[str, dict[str, str]] = {
    "F0": {},
    "F1": {"h": "t", "f": "s", "g": "s"},
    "F2": {"phi": "s", "psi": "s"},
    "F3": {"g1": "t", "g2": "t", "g3": "t", "psi": "s", "phi": "s"},
    "F4": {"g": "t", "phi": "t", "f": "t"},
    "F5": {"phi": "t", "psi": "t"},
}
STEP_FAMILIES = ("F2", "F5")
FAMILY_KINDS = ("F0", "F1", "F2", "F3", "F4", "F5", "CUSTOM")


class FamilyError(ValueError):
    """Invalid family definition (unknown kind, wrong roles, bad threshold)."""


class UndefinedMatrixError(ValueError):
    """The structural matrix is undefined at the requested time pair."""

    def __init__(self, message: str, s: float, t: float):
        super().__init__(f"{message} at (s, t) = ({s}, {t})")
        self.s = s
        self.t = t


@dataclass(frozen=True)
class CeaFamily:
    """A family id plus its parameter expressions and optional threshold."""

    kind: str
    params: dict[str, TimeExpr]
    a: Optional[float] = None
    custom_entries: Optional[tuple[TimeExpr, ...]] = None  # row-major, CUSTOM only

    def param_strings(self) -> dict[str, str]:
        return {name: str(expr) for name, expr in self.params.items()}


def make_family(
    kind: str,
    params: dict[str, str] | None = None,
    a: float | None = None,
    custom: list[list[str]] | None = None,
) -> CeaFamily:
    """Build and validate a family from expression strings."""
    params = params or {}
    if kind == "CUSTOM":
        if custom is None or len(custom) != 3 or any(len(row) != 3 for row in custom):
            raise FamilyError("CUSTOM requires a 3x3 array of expression strings")
        entries = tuple(parse(text) for row in custom for text in row)
        return CeaFamily(kind="CUSTOM", params={}, a=a, custom_entries=entries)
    if kind not in FAMILY_ROLES:
        raise FamilyError(f"unknown family kind {kind!r}; expected one of {FAMILY_KINDS}")
    roles = FAMILY_ROLES[kind]
    missing = sorted(set(roles) - set(params))
    unknown = sorted(set(params) - set(roles))
    if missing or unknown:
        raise FamilyError(
            f"family {kind} expects roles {sorted(roles)}; "
            f"missing {missing or 'none'}, unknown {unknown or 'none'}"
        )
    parsed: dict[str, TimeExpr] = {}
    for name, var in roles.items():
        expr = parse(params[name])
        bad = restrict_variables(expr, {var})
        if bad:
            raise FamilyError(
                f"role {name!r} of family {kind} may only use variable {var!r}; "
                f"found {sorted(bad)}"
            )
        parsed[name] = expr
    if kind in STEP_FAMILIES:
        if a is None or not (a > 0):
            raise FamilyError(f"family {kind} requires a threshold a > 0")
    elif a is not None:
        raise FamilyError(f"family {kind} takes no threshold")
    return CeaFamily(kind=kind, params=parsed, a=a)


def _single(family: CeaFamily, role: str, x: float) -> float:
    return family.params[role].eval_single(x)


def _check_times(s: float, t: float) -> None:
    if not (0 <= s <= t):
        raise ValueError(f"time pair requires 0 <= s <= t, got (s, t) = ({s}, {t})")


def _in_step_branch(family: CeaFamily, t: float) -> bool:
    return t < family.a


def rank1_factors(family: CeaFamily, s: float, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form factors (u, v) with a_ij = u_i v_j for the family matrix."""
    _check_times(s, t)
    kind = family.kind
    if kind == "F0":
        return np.zeros(3), np.zeros(3)
    if kind == "F1":
        h_s = _single(family, "h", s)
        if h_s == 0.0:
            raise UndefinedMatrixError("h(s) = 0", s, t)
        h_t = _single(family, "h", t)
        f_s = _single(family, "f", s)
        g_s = _single(family, "g", s)
        u = 0.5 * h_t * np.array([1.0 / h_s + f_s, 1.0 / h_s - g_s, g_s - f_s])
        return u, np.ones(3)
    if kind == "F2":
        if not _in_step_branch(family, t):
            return np.zeros(3), np.zeros(3)
        phi = _single(family, "phi", s)
        psi = _single(family, "psi", s)
        u = 0.5 * np.array([1.0 + psi, 1.0 - phi, phi - psi])
        return u, np.ones(3)
    if kind == "F3":
        psi = _single(family, "psi", s)
        phi = _single(family, "phi", s)
        g_at = lambda x: np.array(
            [_single(family, "g1", x), _single(family, "g2", x), _single(family, "g3", x)]
        )
        big_phi = float(np.array([1.0, psi, phi]) @ g_at(s))
        if big_phi == 0.0:
            raise UndefinedMatrixError("Phi(s) = 0", s, t)
        return np.array([1.0, psi, phi]) / big_phi, g_at(t)
    if kind == "F4":
        g_s = _single(family, "g", s)
        if g_s == 0.0:
            raise UndefinedMatrixError("g(s) = 0", s, t)
        v = np.array(
            [_single(family, "phi", t), _single(family, "f", t), _single(family, "g", t)]
        )
        return np.array([0.0, 0.0, 1.0 / g_s]), v
    if kind == "F5":
        if not _in_step_branch(family, t):
            return np.zeros(3), np.zeros(3)
        v = np.array([_single(family, "phi", t), _single(family, "psi", t), 1.0])
        return np.array([0.0, 0.0, 1.0]), v
    raise FamilyError("CUSTOM families have no closed-form rank-1 factorization")


def matrix_at(family: CeaFamily, s: float, t: float) -> StructuralMatrix:
    """Evaluate the family's structural matrix at a fixed time pair."""
    _check_times(s, t)
    if family.kind == "CUSTOM":
        values = [expr.eval(s, t) for expr in family.custom_entries]
        return StructuralMatrix(np.array(values).reshape(3, 3), provenance=f"CUSTOM[{s},{t}]")
    u, v = rank1_factors(family, s, t)
    return StructuralMatrix(np.outer(u, v), provenance=f"{family.kind}[{s},{t}]")


def ck_residual(family: CeaFamily, s: float, tau: float, t: float) -> float:
    """Max-abs entry of M[s,t] - M[s,tau] @ M[tau,t]."""
    if not (0 <= s <= tau <= t):
        raise ValueError(f"requires 0 <= s <= tau <= t, got ({s}, {tau}, {t})")
    m_st = matrix_at(family, s, t).entries
    m_stau = matrix_at(family, s, tau).entries
    m_taut = matrix_at(family, tau, t).entries
    return float(np.max(np.abs(m_st - m_stau @ m_taut)))


@dataclass(frozen=True)
class TripleSampler:
    """Uniform admissible triples s <= tau <= t inside a time window."""

    count: int = 100
    window: tuple[float, float] = (0.1, 3.0)
    seed: int = 0

    def triples(self) -> Iterator[tuple[float, float, float]]:
        rng = np.random.default_rng(self.seed)
        lo, hi = self.window
        for _ in range(self.count):
            s, tau, t = np.sort(rng.uniform(lo, hi, size=3))
            yield float(s), float(tau), float(t)


@dataclass(frozen=True)
class CkReport:
    passed: bool
    max_residual: float
    worst_triple: Optional[tuple[float, float, float]]
    checked: int
    skipped: int
    tol: float
    seed: int


def verify_ck(family: CeaFamily, sampler: TripleSampler, tol: float = DEFAULT_TOL) -> CkReport:
    """Sample the Chapman-Kolmogorov defect over random admissible triples.

    The pass threshold is relative to the norms of the three matrices in
    each triple; undefined triples are skipped and counted.
    """
    worst = None
    worst_rel = 0.0
    checked = 0
    skipped = 0
    for s, tau, t in sampler.triples():
        try:
            res = ck_residual(family, s, tau, t)
            scale = max(
                1.0,
                matrix_at(family, s, t).norm,
                matrix_at(family, s, tau).norm,
                matrix_at(family, tau, t).norm,
            )
        except (UndefinedMatrixError, EvalDomainError):
            skipped += 1
            continue
        checked += 1
        rel = res / scale
        if rel >= worst_rel:
            worst_rel = rel
            worst = (s, tau, t)
    return CkReport(
        passed=worst_rel <= tol,
        max_residual=worst_rel,
        worst_triple=worst,
        checked=checked,
        skipped=skipped,
        tol=tol,
        seed=sampler.seed,
    )


def _releq(x: float, y: float, tol: float) -> bool:
    return abs(x - y) <= tol * max(1.0, abs(x), abs(y))


def _require_oracle(family: CeaFamily) -> None:
    if family.kind == "CUSTOM":
        raise FamilyError("predicted-property oracles are undefined for CUSTOM matrices")


def predicted_baric(family: CeaFamily, s: float, t: float, eq_tol: float = DEFAULT_TOL) -> bool:
    """Membership in the family's predicted baric duration set.

    F0 and F3 are never baric.  F1 and F2 are baric only on the equality
    sets of their parameters (union of the branches below); F4 requires a
    nonzero g(t); F5 is baric exactly in its step branch.  The step
    families additionally require t < a since the zero matrix admits no
    character (the printed F2 set omits this guard).  F1 likewise needs
    h(t) nonzero.
    """
    _require_oracle(family)
    _check_times(s, t)
    kind = family.kind
    if kind in ("F0", "F3"):
        return False
    if kind == "F1":
        h_s = _single(family, "h", s)
        if h_s == 0.0:
            raise UndefinedMatrixError("h(s) = 0", s, t)
        if abs(_single(family, "h", t)) <= eq_tol:
            return False
        f_s = _single(family, "f", s)
        g_s = _single(family, "g", s)
        inv_h = 1.0 / h_s
        return (
            (_releq(g_s, f_s, eq_tol) and _releq(g_s, inv_h, eq_tol))
            or (_releq(g_s, f_s, eq_tol) and _releq(g_s, -inv_h, eq_tol))
            or (_releq(g_s, -f_s, eq_tol) and _releq(g_s, inv_h, eq_tol))
        )
    if kind == "F2":
        if t >= family.a:
            return False
        phi = _single(family, "phi", s)
        psi = _single(family, "psi", s)
        return (
            (_releq(phi, 1.0, eq_tol) and _releq(psi, 1.0, eq_tol))
            or (_releq(phi, -1.0, eq_tol) and _releq(psi, -1.0, eq_tol))
            or (_releq(phi, 1.0, eq_tol) and _releq(psi, -1.0, eq_tol))
        )
    if kind == "F4":
        return abs(_single(family, "g", t)) > eq_tol
    # F5
    return t < family.a


def predicted_nilpotent_unique(family: CeaFamily, s: float, t: float) -> Optional[bool]:
    """Membership in the predicted unique-absolute-nilpotent set.

    F0, F4 and F5 carry infinitely many absolute nilpotents at every time
    (False everywhere).  F1 and F2 have explicit inequality sets.  The F3
    set is returned as None (not covered): its printed sign condition
    does not line up with the cone analysis of the defining system, so
    diagram runs record matches against the classifier instead of
    asserting them.
    """
    _require_oracle(family)
    _check_times(s, t)
    kind = family.kind
    if kind in ("F0", "F4", "F5"):
        return False
    if kind == "F3":
        return None
    if kind == "F1":
        h_s = _single(family, "h", s)
        if h_s == 0.0:
            raise UndefinedMatrixError("h(s) = 0", s, t)
        h_t = _single(family, "h", t)
        f_s = _single(family, "f", s)
        g_s = _single(family, "g", s)
        inv_h = 1.0 / h_s
        return h_t != 0.0 and f_s < g_s < inv_h and -f_s < inv_h
    # F2
    phi = _single(family, "phi", s)
    psi = _single(family, "psi", s)
    return t < family.a and -1.0 < psi < phi < 1.0


def predicted_idempotents(family: CeaFamily, s: float, t: float) -> list[np.ndarray]:
    """The closed-form idempotent list predicted for the family.

    Always contains the zero element.  Coordinate orders follow direct
    substitution into the fixed-point system (verified by the residual
    oracle in the tests), not the printed tuples, which are permuted for
    the two row-supported families.
    """
    _require_oracle(family)
    _check_times(s, t)
    zero = np.zeros(3)
    kind = family.kind
    if kind == "F0":
        return [zero]
    if kind == "F1":
        h_t = _single(family, "h", t)
        h_s = _single(family, "h", s)
        if h_s == 0.0:
            raise UndefinedMatrixError("h(s) = 0", s, t)
        if h_t == 0.0:
            return [zero]
        r = h_s / h_t
        return [zero, np.array([r, r, r])]
    if kind == "F2":
        if t >= family.a:
            return [zero]
        return [zero, np.ones(3)]
    if kind == "F3":
        psi = _single(family, "psi", s)
        phi = _single(family, "phi", s)
        g = np.array(
            [_single(family, "g1", t), _single(family, "g2", t), _single(family, "g3", t)]
        )
        g_s = np.array(
            [_single(family, "g1", s), _single(family, "g2", s), _single(family, "g3", s)]
        )
        big_phi = float(np.array([1.0, psi, phi]) @ g_s)
        if big_phi == 0.0:
            raise UndefinedMatrixError("Phi(s) = 0", s, t)
        # scale factor of the nonzero fixed point; the g1 term enters squared
        f_val = (g[0] ** 2 + psi * g[1] ** 2 + phi * g[2] ** 2) / big_phi
        if f_val == 0.0:
            return [zero]
        return [zero, g / f_val]
    if kind == "F4":
        g_t = _single(family, "g", t)
        g_s = _single(family, "g", s)
        if g_s == 0.0:
            raise UndefinedMatrixError("g(s) = 0", s, t)
        if g_t == 0.0:
            return [zero]
        phi_t = _single(family, "phi", t)
        f_t = _single(family, "f", t)
        return [zero, np.array([phi_t * g_s / g_t**2, f_t * g_s / g_t**2, g_s / g_t])]
    # F5
    if t >= family.a:
        return [zero]
    return [zero, np.array([_single(family, "phi", t), _single(family, "psi", t), 1.0])]


def baric_boundary_distance(family: CeaFamily, s: float, t: float) -> float:
    """Relative distance of (s, t) from the boundary of the predicted baric set.

    Used to exclude grid cells where a float classifier and an equality-set
    oracle may legitimately disagree.  F0/F3 have no boundary (inf).
    """
    _require_oracle(family)
    kind = family.kind
    if kind in ("F0", "F3"):
        return math.inf

    def gap(x, y):
        return abs(x - y) / max(1.0, abs(x), abs(y))

    if kind == "F1":
        h_s = _single(family, "h", s)
        if h_s == 0.0:
            return 0.0
        h_t = _single(family, "h", t)
        f_s = _single(family, "f", s)
        g_s = _single(family, "g", s)
        inv_h = 1.0 / h_s
        branches = [
            max(gap(g_s, f_s), gap(g_s, inv_h)),
            max(gap(g_s, f_s), gap(g_s, -inv_h)),
            max(gap(g_s, -f_s), gap(g_s, inv_h)),
        ]
        return min(min(branches), abs(h_t))
    if kind == "F2":
        phi = _single(family, "phi", s)
        psi = _single(family, "psi", s)
        branches = [
            max(gap(phi, 1.0), gap(psi, 1.0)),
            max(gap(phi, -1.0), gap(psi, -1.0)),
            max(gap(phi, 1.0), gap(psi, -1.0)),
        ]
        return min(min(branches), abs(t - family.a) / max(1.0, family.a))
    if kind == "F4":
        return abs(_single(family, "g", t))
    return abs(t - family.a) / max(1.0, family.a)


def nilpotent_boundary_distance(family: CeaFamily, s: float, t: float) -> float:
    """Relative distance from the boundary of the predicted unique-nilpotent set."""
    _require_oracle(family)
    kind = family.kind
    if kind in ("F0", "F4", "F5"):
        return math.inf
    if kind == "F3":
        return 0.0  # not covered; nothing is asserted
    if kind == "F1":
        h_s = _single(family, "h", s)
        if h_s == 0.0:
            return 0.0
        h_t = _single(family, "h", t)
        f_s = _single(family, "f", s)
        g_s = _single(family, "g", s)
        inv_h = 1.0 / h_s
        slacks = [g_s - f_s, inv_h - g_s, inv_h + f_s]
        return min(min(abs(v) for v in slacks), abs(h_t))
    phi = _single(family, "phi", s)
    psi = _single(family, "psi", s)
    slacks = [psi + 1.0, phi - psi, 1.0 - phi]
    return min(
        min(abs(v) for v in slacks), abs(t - family.a) / max(1.0, family.a)
    )
