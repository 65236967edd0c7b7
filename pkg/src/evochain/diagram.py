"""Grid sweeps over the admissible time quadrant {(s, t): 0 <= s <= t}.

Every grid node with t >= s becomes one CellRecord holding the computed
classification (baric column, unique-nilpotent flag, idempotent list), the
family's predicted classification, and match flags.  Cells closer to a
predicted-set boundary than the configured equality band get empty match
flags: a float grid almost never lands exactly on a measure-zero set, so
asserting matches there would only measure rounding.

Cells are independent and may be classified in parallel; output order is
always s-major then t, regardless of thread count.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .algebra import (
    DEFAULT_TOL,
    IdempotentSet,
    NewtonOptions,
    baric_check,
    idempotents_numeric,
    idempotents_rank1,
    nilpotent_classify,
)
from .expr import EvalDomainError
from .families import (
    CeaFamily,
    UndefinedMatrixError,
    baric_boundary_distance,
    matrix_at,
    nilpotent_boundary_distance,
    predicted_baric,
    predicted_nilpotent_unique,
    rank1_factors,
)

__all__ = [
    "GridSpec",
    "CellRecord",
    "PropertyDiagram",
    "ALL_PROPS",
    "CSV_COLUMNS",
    "sample_diagram",
    "export_csv",
    "export_json",
]

ALL_PROPS = ("baric", "nilpotent", "idempotent")
DEFAULT_BAND = 1e-3

CSV_COLUMNS = [
    "s",
    "t",
    "defined",
    "baric",
    "baric_column",
    "baric_weight",
    "nilpotent_unique",
    "idempotent_count",
    "predicted_baric",
    "predicted_nilpotent_unique",
    "baric_match",
    "nilpotent_match",
]


@dataclass(frozen=True)
class GridSpec:
    """Inclusive linear grid over s and t; cells with t < s are dropped."""

    s_min: float
    s_max: float
    n_s: int
    t_min: float
    t_max: float
    n_t: int

    def __post_init__(self):
        if not (0 <= self.s_min <= self.s_max <= self.t_max):
            raise ValueError("grid requires 0 <= s_min <= s_max <= t_max")
        if self.t_min > self.t_max:
            raise ValueError("grid requires t_min <= t_max")
        if self.n_s < 1 or self.n_t < 1:
            raise ValueError("grid requires at least one node per axis")

    def s_values(self) -> np.ndarray:
        if self.n_s == 1:
            return np.array([self.s_min])
        return np.linspace(self.s_min, self.s_max, self.n_s)

    def t_values(self) -> np.ndarray:
        if self.n_t == 1:
            return np.array([self.t_min])
        return np.linspace(self.t_min, self.t_max, self.n_t)

    def nodes(self) -> list[tuple[float, float]]:
        return [
            (float(s), float(t))
            for s in self.s_values()
            for t in self.t_values()
            if t >= s
        ]


@dataclass
class CellRecord:
    s: float
    t: float
    defined: bool
    error: str = ""
    baric: Optional[bool] = None
    baric_column: Optional[int] = None
    baric_weight: Optional[float] = None
    nilpotent_unique: Optional[bool] = None
    idempotent_count: Optional[int] = None
    idempotents: Optional[list[np.ndarray]] = None
    predicted_baric: Optional[bool] = None
    predicted_nilpotent_unique: Optional[bool] = None
    baric_match: Optional[bool] = None
    nilpotent_match: Optional[bool] = None


@dataclass
class PropertyDiagram:
    family: CeaFamily
    grid: GridSpec
    props: tuple[str, ...]
    band: float
    tol: float
    cells: list[CellRecord] = field(default_factory=list)

    def mismatches(self) -> int:
        return sum(
            1
            for c in self.cells
            if c.baric_match is False or c.nilpotent_match is False
        )


def _classify_cell(
    family: CeaFamily,
    s: float,
    t: float,
    props: Sequence[str],
    band: float,
    tol: float,
) -> CellRecord:
    cell = CellRecord(s=s, t=t, defined=True)
    try:
        matrix = matrix_at(family, s, t)
    except (UndefinedMatrixError, EvalDomainError) as err:
        return CellRecord(s=s, t=t, defined=False, error=str(err))

    has_oracle = family.kind != "CUSTOM"
    if "baric" in props:
        result = baric_check(matrix, tol=tol)
        cell.baric = result is not None
        if result is not None:
            cell.baric_column = result.column
            cell.baric_weight = result.weight
        if has_oracle:
            cell.predicted_baric = predicted_baric(family, s, t, eq_tol=tol)
            if baric_boundary_distance(family, s, t) > band:
                cell.baric_match = cell.baric == cell.predicted_baric
    if "nilpotent" in props:
        cell.nilpotent_unique = nilpotent_classify(matrix, tol=tol).unique
        if has_oracle:
            predicted = predicted_nilpotent_unique(family, s, t)
            cell.predicted_nilpotent_unique = predicted
            if predicted is not None and nilpotent_boundary_distance(family, s, t) > band:
                cell.nilpotent_match = cell.nilpotent_unique == predicted
    if "idempotent" in props:
        if has_oracle:
            u, v = rank1_factors(family, s, t)
            idem = idempotents_rank1(u, v, tol=tol)
        else:
            idem = idempotents_numeric(matrix, NewtonOptions())
        cell.idempotents = list(idem.points)
        cell.idempotent_count = len(idem)
    return cell


def sample_diagram(
    family: CeaFamily,
    grid: GridSpec,
    props: Sequence[str] = ALL_PROPS,
    band: float = DEFAULT_BAND,
    tol: float = DEFAULT_TOL,
    threads: int = 1,
) -> PropertyDiagram:
    """Classify every admissible grid node; deterministic s-major order."""
    unknown = set(props) - set(ALL_PROPS)
    if unknown:
        raise ValueError(f"unknown properties {sorted(unknown)}; expected {ALL_PROPS}")
    nodes = grid.nodes()
    diagram = PropertyDiagram(
        family=family, grid=grid, props=tuple(props), band=band, tol=tol
    )
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            diagram.cells = list(
                pool.map(
                    lambda node: _classify_cell(family, node[0], node[1], props, band, tol),
                    nodes,
                )
            )
    else:
        diagram.cells = [
            _classify_cell(family, s, t, props, band, tol) for s, t in nodes
        ]
    return diagram


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def export_csv(diagram: PropertyDiagram, path) -> None:
    """One row per cell in the fixed column layout; UTF-8, LF endings."""
    if not diagram.cells:
        raise ValueError("diagram has no cells to export")
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for cell in diagram.cells:
            writer.writerow(
                [
                    _fmt(cell.s),
                    _fmt(cell.t),
                    _fmt(cell.defined),
                    _fmt(cell.baric),
                    _fmt(cell.baric_column),
                    _fmt(cell.baric_weight),
                    _fmt(cell.nilpotent_unique),
                    _fmt(cell.idempotent_count),
                    _fmt(cell.predicted_baric),
                    _fmt(cell.predicted_nilpotent_unique),
                    _fmt(cell.baric_match),
                    _fmt(cell.nilpotent_match),
                ]
            )


def _cell_to_json(cell: CellRecord) -> dict:
    return {
        "s": cell.s,
        "t": cell.t,
        "defined": cell.defined,
        "error": cell.error,
        "baric": cell.baric,
        "baric_column": cell.baric_column,
        "baric_weight": cell.baric_weight,
        "nilpotent_unique": cell.nilpotent_unique,
        "idempotent_count": cell.idempotent_count,
        "idempotents": (
            None
            if cell.idempotents is None
            else [[float(c) for c in p] for p in cell.idempotents]
        ),
        "predicted_baric": cell.predicted_baric,
        "predicted_nilpotent_unique": cell.predicted_nilpotent_unique,
        "baric_match": cell.baric_match,
        "nilpotent_match": cell.nilpotent_match,
    }


def export_json(diagram: PropertyDiagram, path, seed: Optional[int] = None) -> None:
    """Full diagram, including idempotent point lists, with a metadata block."""
    grid = diagram.grid
    payload = {
        "metadata": {
            "family": diagram.family.kind,
            "params": diagram.family.param_strings(),
            "a": diagram.family.a,
            "grid": {
                "s": [grid.s_min, grid.s_max, grid.n_s],
                "t": [grid.t_min, grid.t_max, grid.n_t],
            },
            "props": list(diagram.props),
            "band": diagram.band,
            "tol": diagram.tol,
            "seed": seed,
            "version": __version__,
        },
        "cells": [_cell_to_json(cell) for cell in diagram.cells],
    }
    with open(path, "w", encoding="utf-8", newline="") as handle:
        json.dump(payload, handle, indent=2)
        handle.write("\n")
