import numpy as np
import pytest

from evochain import make_family

WINDOW = (0.1, 3.0)


def _lin(rng, var, lo=0.2, hi=1.5, slope=0.5):
    """Random affine expression string in one variable, bounded away from 0."""
    a = rng.uniform(lo, hi)
    b = rng.uniform(0.0, slope)
    return f"{a:.9g} + {b:.9g}*{var}"


def _affine(rng, var, lo=-1.0, hi=1.0, slope=0.4):
    a = rng.uniform(lo, hi)
    b = rng.uniform(-slope, slope)
    return f"{a:.9g} + {b:.9g}*{var}"


def random_family(kind, rng):
    """A family of the given kind with random smooth parameters, defined on WINDOW."""
    if kind == "F0":
        return make_family("F0")
    if kind == "F1":
        return make_family(
            "F1",
            {"h": _lin(rng, "t"), "f": _affine(rng, "s"), "g": _affine(rng, "s")},
        )
    if kind == "F2":
        return make_family(
            "F2",
            {"phi": _affine(rng, "s"), "psi": _affine(rng, "s")},
            a=rng.uniform(1.0, 2.5),
        )
    if kind == "F3":
        return make_family(
            "F3",
            {
                "g1": _lin(rng, "t"),
                "g2": _lin(rng, "t"),
                "g3": _lin(rng, "t"),
                "psi": _lin(rng, "s", lo=0.1, hi=1.0),
                "phi": _lin(rng, "s", lo=0.1, hi=1.0),
            },
        )
    if kind == "F4":
        return make_family(
            "F4",
            {"g": _lin(rng, "t"), "phi": _affine(rng, "t"), "f": _affine(rng, "t")},
        )
    if kind == "F5":
        return make_family(
            "F5",
            {"phi": _affine(rng, "t"), "psi": _affine(rng, "t")},
            a=rng.uniform(1.0, 2.5),
        )
    raise ValueError(kind)


def simplex_grid(resolution=200):
    """All nonnegative triples summing to 1 on the lattice with the given resolution."""
    n = resolution
    i, j = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
    mask = i + j <= n
    i, j = i[mask], j[mask]
    k = n - i - j
    return np.stack([i, j, k], axis=1) / n


def simplex_min_residual(matrix_entries, grid):
    """min over the simplex grid of the max-abs defect of the cone equations."""
    # (A^T y)_j = sum_k a_kj y_k = (y @ A)_j
    return float(np.min(np.max(np.abs(grid @ matrix_entries), axis=1)))


@pytest.fixture(scope="session")
def simplex200():
    return simplex_grid(200)
