"""Command-line interface.

Subcommands: ``ck-verify`` (sample the Chapman-Kolmogorov defect),
``diagram`` (grid sweep with CSV/JSON export and optional figure),
``points`` (nilpotent/idempotent sets at one time pair) and ``dynamics``
(iterate the evolution operator).  A JSON config file supplies the family
and defaults; command-line flags override config values.

Exit codes: 0 success/pass, 1 verification failure, 2 usage or config
error, 3 I/O error.
"""

from __future__ import annotations

import json
import sys

import click
import numpy as np

from . import __version__
from .algebra import (
    DEFAULT_TOL,
    NewtonOptions,
    evolve,
    idempotents_numeric,
    idempotents_rank1,
    nilpotent_classify,
    square,
)
from .diagram import (
    ALL_PROPS,
    DEFAULT_BAND,
    GridSpec,
    export_csv,
    export_json,
    sample_diagram,
)
from .expr import ExprError
from .families import (
    CeaFamily,
    FamilyError,
    TripleSampler,
    UndefinedMatrixError,
    make_family,
    matrix_at,
    rank1_factors,
    verify_ck,
)

CONVERGENCE_RADIUS = 1e-6


class ConfigError(click.ClickException):
    exit_code = 2


class OutputError(click.ClickException):
    exit_code = 3


class VerificationFailure(click.ClickException):
    exit_code = 1

    def show(self, file=None):  # message already printed as part of the report
        pass


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as handle:
            return json.load(handle)
    except FileNotFoundError as err:
        raise ConfigError(f"config file not found: {path}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"config file {path} is not valid JSON: {err}") from err


def build_family(cfg: dict) -> CeaFamily:
    try:
        return make_family(
            kind=cfg.get("family", "CUSTOM"),
            params=cfg.get("params"),
            a=cfg.get("a"),
            custom=cfg.get("custom"),
        )
    except (FamilyError, ExprError) as err:
        raise ConfigError(str(err)) from err


def build_grid(cfg: dict) -> GridSpec:
    grid_cfg = cfg.get("grid")
    if not grid_cfg:
        raise ConfigError('config is missing a "grid" section: {"s": [min, max, n], "t": [min, max, n]}')
    try:
        s_min, s_max, n_s = grid_cfg["s"]
        t_min, t_max, n_t = grid_cfg["t"]
        return GridSpec(
            s_min=float(s_min),
            s_max=float(s_max),
            n_s=int(n_s),
            t_min=float(t_min),
            t_max=float(t_max),
            n_t=int(n_t),
        )
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigError(f"invalid grid spec: {err}") from err


def pick(flag, cfg: dict, key: str, default):
    """Flag value if given, else config value, else default."""
    if flag is not None:
        return flag
    if key in cfg:
        return cfg[key]
    return default


@click.group()
@click.version_option(__version__)
def cli():
    """Chains of three-dimensional evolution algebras."""


@cli.command("ck-verify")
@click.option("--config", "config_path", required=True, type=click.Path(), help="JSON config file.")
@click.option("--samples", type=int, default=None, help="Number of random (s, tau, t) triples.")
@click.option("--tol", type=float, default=None, help="Relative residual tolerance.")
@click.option("--seed", type=int, default=None, help="Sampling seed.")
def cmd_ck_verify(config_path, samples, tol, seed):
    """Check the chain identity M[s,t] = M[s,tau] M[tau,t] by sampling."""
    cfg = load_config(config_path)
    family = build_family(cfg)
    sampler = TripleSampler(
        count=int(pick(samples, cfg, "samples", 100)),
        window=tuple(cfg.get("window", (0.1, 3.0))),
        seed=int(pick(seed, cfg, "seed", 0)),
    )
    tol = float(pick(tol, cfg, "tol", DEFAULT_TOL))
    report = verify_ck(family, sampler, tol=tol)
    click.echo(f"family: {family.kind}  seed: {report.seed}  tol: {tol:g}")
    click.echo(
        f"checked {report.checked} triples ({report.skipped} skipped), "
        f"max relative residual {report.max_residual:.3e}"
    )
    if report.worst_triple is not None:
        s, tau, t = report.worst_triple
        click.echo(f"worst triple: s={s:.6g} tau={tau:.6g} t={t:.6g}")
    click.echo("PASS" if report.passed else "FAIL")
    if not report.passed:
        raise VerificationFailure("chain identity violated")


@cli.command("diagram")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--out", "out_path", type=click.Path(), default=None, help="CSV output path.")
@click.option("--json-out", "json_path", type=click.Path(), default=None, help="JSON output path.")
@click.option("--plot", "plot_path", type=click.Path(), default=None, help="Figure output path.")
@click.option("--props", type=str, default=None, help="Comma-separated subset of baric,nilpotent,idempotent.")
@click.option("--band", type=float, default=None, help="Equality-band width for match flags.")
@click.option("--tol", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("--strict", is_flag=True, help="Exit 1 if any cell mismatches its prediction.")
def cmd_diagram(config_path, out_path, json_path, plot_path, props, band, tol, seed, threads, strict):
    """Classify a grid over the time quadrant and export the results."""
    cfg = load_config(config_path)
    family = build_family(cfg)
    grid = build_grid(cfg)
    props_value = pick(props, cfg, "props", ",".join(ALL_PROPS))
    if isinstance(props_value, str):
        selected = tuple(p.strip() for p in props_value.split(",") if p.strip())
    else:
        selected = tuple(props_value)
    unknown = set(selected) - set(ALL_PROPS)
    if unknown:
        raise ConfigError(f"unknown properties {sorted(unknown)}; expected {ALL_PROPS}")
    band = float(pick(band, cfg, "band", DEFAULT_BAND))
    tol = float(pick(tol, cfg, "tol", DEFAULT_TOL))
    seed = int(pick(seed, cfg, "seed", 0))
    if threads < 1:
        raise ConfigError("--threads must be >= 1")
    diagram = sample_diagram(
        family, grid, props=selected, band=band, tol=tol, threads=threads
    )
    out_path = pick(out_path, cfg, "out", None)
    json_path = pick(json_path, cfg, "json_out", None)
    try:
        if out_path:
            export_csv(diagram, out_path)
            click.echo(f"wrote {out_path}")
        if json_path:
            export_json(diagram, json_path, seed=seed)
            click.echo(f"wrote {json_path}")
        if plot_path:
            from .plots import render_diagram

            render_diagram(diagram, plot_path)
            click.echo(f"wrote {plot_path}")
    except OSError as err:
        raise OutputError(f"cannot write output: {err}") from err
    defined = sum(1 for c in diagram.cells if c.defined)
    mismatches = diagram.mismatches()
    click.echo(
        f"family: {family.kind}  seed: {seed}  cells: {len(diagram.cells)} "
        f"({defined} defined)  mismatches: {mismatches}"
    )
    if strict and mismatches:
        raise VerificationFailure("prediction mismatches in strict mode")


def _time_pair(family, s, t):
    try:
        return matrix_at(family, s, t)
    except (UndefinedMatrixError, ValueError) as err:
        raise ConfigError(str(err)) from err


@cli.command("points")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.argument("s", type=float)
@click.argument("t", type=float)
@click.option(
    "--which",
    type=click.Choice(["nilpotents", "idempotents"]),
    default="idempotents",
    show_default=True,
)
@click.option("--tol", type=float, default=None)
def cmd_points(config_path, s, t, which, tol):
    """List absolute nilpotents or idempotents at one time pair."""
    cfg = load_config(config_path)
    family = build_family(cfg)
    tol = float(pick(tol, cfg, "tol", DEFAULT_TOL))
    matrix = _time_pair(family, s, t)
    click.echo(f"family: {family.kind}  (s, t) = ({s:g}, {t:g})")
    if which == "nilpotents":
        result = nilpotent_classify(matrix, tol=tol)
        click.echo(f"classification: {result.kind}")
        if result.witness is not None:
            y = ", ".join(f"{v:.12g}" for v in result.witness)
            x = ", ".join(f"{v:.12g}" for v in result.nilpotent_witness)
            click.echo(f"witness y (simplex): ({y})  support {set(result.support)}")
            click.echo(f"nilpotent element x = sqrt(y): ({x})")
        return
    if family.kind == "CUSTOM":
        idem = idempotents_numeric(matrix, NewtonOptions())
    else:
        u, v = rank1_factors(family, s, t)
        idem = idempotents_rank1(u, v, tol=tol)
    click.echo(f"completeness: {idem.completeness}")
    for point, residual, method in zip(idem.points, idem.residuals, idem.methods):
        coords = ", ".join(f"{c:.12g}" for c in point)
        click.echo(f"  ({coords})  residual={residual:.3e}  method={method}")
    if idem.note:
        click.echo(f"note: {idem.note}")


@cli.command("dynamics")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.argument("s", type=float)
@click.argument("t", type=float)
@click.option("--x0", type=str, required=True, help="Start element, e.g. '0.4,0.4,0.4'.")
@click.option("--steps", type=int, default=20, show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None, help="Trajectory CSV path.")
def cmd_dynamics(config_path, s, t, x0, steps, out_path):
    """Iterate the evolution operator x -> x^2 and track fixed-point approach."""
    cfg = load_config(config_path)
    family = build_family(cfg)
    if steps < 0:
        raise ConfigError("--steps must be >= 0")
    try:
        start = np.array([float(part) for part in x0.split(",")])
        if start.shape != (3,):
            raise ValueError
    except ValueError:
        raise ConfigError("--x0 must be three comma-separated numbers")
    matrix = _time_pair(family, s, t)
    if family.kind == "CUSTOM":
        idem = idempotents_numeric(matrix, NewtonOptions())
    else:
        u, v = rank1_factors(family, s, t)
        idem = idempotents_rank1(u, v)
    trajectory = evolve(matrix, start, steps)
    rows = []
    for step, point in enumerate(trajectory.points):
        residual = float(np.max(np.abs(square(matrix, point) - point)))
        converged = idem.contains(point, radius=CONVERGENCE_RADIUS)
        rows.append((step, point, residual, converged))
        flag = "  <- at idempotent" if converged else ""
        coords = ", ".join(f"{c:.12g}" for c in point)
        click.echo(f"step {step}: ({coords})  |x^2 - x| = {residual:.3e}{flag}")
    if trajectory.diverged:
        click.echo("trajectory diverged (|x| > 1e12); iteration stopped early")
    if out_path:
        try:
            with open(out_path, "w", encoding="utf-8", newline="") as handle:
                handle.write("step,x1,x2,x3,residual,at_idempotent\n")
                for step, point, residual, converged in rows:
                    coords = ",".join(repr(float(c)) for c in point)
                    handle.write(f"{step},{coords},{residual!r},{int(converged)}\n")
        except OSError as err:
            raise OutputError(f"cannot write output: {err}") from err
        click.echo(f"wrote {out_path}")


def main():
    cli(prog_name="evochain")


if __name__ == "__main__":
    main()
