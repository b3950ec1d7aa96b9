"""Command-line front door.

Five subcommands over polytope JSON (and, for ``character``, weight-table
CSV) inputs:

    check       validate a polytope file and print its basic geometry
    invariants  H / DF / Jensen report for one direction
    optimize    maximize H and report the stability verdict
    dh          Duistermaat-Heckman sample at one degree
    character   weight-character samples and Laurent-coefficient fit

Reports are JSON documents {"manifest": ..., "report": ...}; every float
is a 17-significant-digit decimal string and every exact rational a "p/q"
string, so report bodies are byte-identical across runs with the same
inputs (the manifest carries the wall-clock duration, the report never
does).  Diagnostics go to stderr only.  Exit codes: 0 ok, 2 parse or
invalid parameters, 3 not reflexive, 4 unbounded direction, 5
non-convergence.
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
import time
from fractions import Fraction
from numbers import Integral

import click
import numpy as np

from . import __version__
from . import invariants as inv
from . import lattice_geom as lg
from . import optimal_degeneration as od
from . import weight_rings as wr
from .errors import (
    DegeneratePolytope,
    EmptyDegree,
    HstabError,
    Inconclusive,
    InsufficientDegrees,
    NonRationalInput,
    NotReflexive,
    ParseError,
    TruncationTooCoarse,
)

EXIT_PARSE = 2
EXIT_NOT_REFLEXIVE = 3
EXIT_UNBOUNDED = 4
EXIT_NO_CONVERGENCE = 5


def _fail(code: int, message) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _jsonify(value):
    """Deterministic JSON form: floats as 17-significant-digit decimal
    strings, rationals as 'p/q', containers recursively."""
    if isinstance(value, bool):
        return value
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, Integral):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, np.ndarray):
        return [_jsonify(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_jsonify(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonify(v) for k, v in value.items()}
    if value is None or isinstance(value, str):
        return value
    return str(value)


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _manifest(command: str, path: str, params: dict, t0: float) -> dict:
    return {
        "command": command,
        "input_sha256": _sha256(path),
        "parameters": _jsonify(params),
        "version": __version__,
        "duration_seconds": format(time.monotonic() - t0, ".17g"),
    }


def _emit(doc: dict, output) -> None:
    text = json.dumps(doc, indent=2) + "\n"
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _parse_xi(text: str, dim: int) -> tuple:
    try:
        parts = [p for p in text.split(",")]
        vec = tuple(lg.as_rational(p) for p in parts)
    except NonRationalInput as exc:
        _fail(EXIT_PARSE, f"cannot parse --xi {text!r}: {exc}")
    if len(vec) != dim:
        _fail(
            EXIT_PARSE,
            f"--xi has {len(vec)} components, polytope has dimension {dim}",
        )
    return vec


def _load_polytope(path: str) -> lg.LatticePolytope:
    try:
        return lg.load_polytope(path)
    except (ParseError, DegeneratePolytope, NonRationalInput) as exc:
        _fail(EXIT_PARSE, exc)


@click.group()
@click.version_option(version=__version__, prog_name="hstab")
def main() -> None:
    """Invariants of torus-equivariant degenerations of toric Fanos."""


@main.command("check")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
def cmd_check(path: str) -> None:
    """Validate a polytope file and print its basic geometry."""
    P = _load_polytope(path)
    bary = lg.barycenter(P)
    click.echo(f"name: {P.name}")
    click.echo(f"dim: {P.dim}")
    click.echo(f"vertices: {P.n_vertices}")
    click.echo(f"facets: {P.n_facets}")
    click.echo(f"lattice: {'true' if P.is_lattice() else 'false'}")
    click.echo(f"reflexive: {'true' if lg.is_reflexive(P) else 'false'}")
    click.echo(f"volume: {lg.volume(P)}")
    click.echo(f"normalized volume: {lg.normalized_volume(P)}")
    click.echo(f"barycenter: ({', '.join(str(b) for b in bary)})")


@main.command("invariants")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--xi", "xi_text", required=True, help="direction, e.g. 0.3,-1/2")
@click.option(
    "--oracle",
    "oracle_m",
    type=int,
    default=None,
    help="append brute-force recomputations from the degree-m weight table",
)
@click.option("--output", type=click.Path(dir_okay=False), default=None)
def cmd_invariants(path: str, xi_text: str, oracle_m, output) -> None:
    """H, DF and the Jensen gap for one direction."""
    t0 = time.monotonic()
    P = _load_polytope(path)
    xi = _parse_xi(xi_text, P.dim)
    try:
        report = inv.build_report(P, xi)
    except NotReflexive as exc:
        _fail(EXIT_NOT_REFLEXIVE, exc)
    body = {
        "polytope_name": report.polytope_name,
        "dim": report.dim,
        "xi": list(report.xi),
        "volume": report.volume,
        "normalized_volume": report.normalized_volume,
        "c0": report.c0,
        "b0": report.b0,
        "b1": report.b1,
        "h": report.h,
        "df": report.df,
        "df_exact": report.df_exact,
        "jensen_gap": report.jensen_gap,
    }
    if oracle_m is not None:
        try:
            table = wr.weight_table_toric(P, oracle_m)
            fit = wr.fit_b0_b1(table, xi)
        except (ValueError, InsufficientDegrees, EmptyDegree) as exc:
            _fail(EXIT_PARSE, f"--oracle {oracle_m}: {exc}")
        c0_bf = wr.c0_bruteforce(table, xi, oracle_m)
        n = P.dim
        v = float(lg.normalized_volume(P))
        h_oracle = -v * math.log(c0_bf / v) - 2 * math.factorial(n - 1) * fit.b1
        df_oracle = math.factorial(n) * (fit.b0 - (2.0 / n) * fit.b1)
        body["oracle"] = {
            "m": oracle_m,
            "c0_bruteforce": c0_bf,
            "c0_deviation": abs(c0_bf - report.c0) / report.c0,
            "b0_fit": fit.b0,
            "b1_fit": fit.b1,
            "fit_residual": fit.residual,
            "b0_deviation": abs(fit.b0 - float(report.b0)),
            "b1_deviation": abs(fit.b1 - float(report.b1)),
            "h_from_oracle": h_oracle,
            "df_from_oracle": df_oracle,
        }
    doc = {
        "manifest": _manifest(
            "invariants",
            path,
            {"xi": xi_text, "oracle": oracle_m},
            t0,
        ),
        "report": _jsonify(body),
    }
    _emit(doc, output)


@main.command("optimize")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--tol", type=float, default=1e-9, show_default=True)
@click.option("--max-iter", type=int, default=200, show_default=True)
@click.option("--trace", is_flag=True, help="include the full iterate trace")
@click.option("--output", type=click.Path(dir_okay=False), default=None)
def cmd_optimize(path: str, tol: float, max_iter: int, trace: bool, output) -> None:
    """Maximize H over torus directions; report the stability verdict."""
    t0 = time.monotonic()
    P = _load_polytope(path)
    try:
        result = od.maximize_h(P, tol=tol, max_iter=max_iter, keep_trace=trace)
    except NotReflexive as exc:
        _fail(EXIT_NOT_REFLEXIVE, exc)
    except ValueError as exc:
        _fail(EXIT_PARSE, exc)
    body = {
        "polytope_name": P.name,
        "dim": P.dim,
        "status": result.status,
        "xi_star": result.xi_star,
        "h_star": result.h_star,
        "grad_norm": result.grad_norm,
        "hessian_max_eigenvalue": result.hessian_max_eigenvalue,
        "iterations": result.iterations,
        "flat_direction": result.flat_direction,
    }
    if result.direction is not None:
        body["direction"] = result.direction
    if result.converged:
        verdict = od.h_stability_verdict(P, result)
        body["mu_supremum"] = od.mu_supremum(P, result)
        body["verdict"] = {
            "stable": verdict.stable,
            "label": verdict.label,
            "qualifier": verdict.qualifier,
            "description": verdict.description,
            "witness_xi": list(verdict.witness_xi),
            "h_at_witness": verdict.h_at_witness,
            "hessian_max_eigenvalue": verdict.hessian_max_eigenvalue,
        }
    if trace and result.trace is not None:
        body["trace"] = result.trace
    doc = {
        "manifest": _manifest(
            "optimize",
            path,
            {"tol": tol, "max_iter": max_iter, "trace": trace},
            t0,
        ),
        "report": _jsonify(body),
    }
    _emit(doc, output)
    if result.status == "unbounded_direction":
        sys.exit(EXIT_UNBOUNDED)
    if result.status == "max_iterations":
        sys.exit(EXIT_NO_CONVERGENCE)


@main.command("dh")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--xi", "xi_text", required=True)
@click.option("--m", "m", type=int, required=True, help="sample degree")
@click.option("--bins", type=int, default=None, help="histogram instead of atoms")
@click.option("--output", type=click.Path(dir_okay=False), default=None)
def cmd_dh(path: str, xi_text: str, m: int, bins, output) -> None:
    """Duistermaat-Heckman sample of the toric weight table at degree m."""
    t0 = time.monotonic()
    P = _load_polytope(path)
    xi = _parse_xi(xi_text, P.dim)
    if m < 1:
        _fail(EXIT_PARSE, f"--m must be >= 1, got {m}")
    if bins is not None and bins < 1:
        _fail(EXIT_PARSE, f"--bins must be >= 1, got {bins}")
    try:
        table = wr.weight_table_toric(P, m)
    except NotReflexive as exc:
        _fail(EXIT_NOT_REFLEXIVE, exc)
    sample = wr.dh_measure(table, xi, m)
    moment = wr.dh_exp_moment(sample)
    c0_over_v = wr.c0_exact(P, xi) / float(lg.normalized_volume(P))
    body = {
        "polytope_name": P.name,
        "dim": P.dim,
        "xi": [float(c) for c in wr.as_float_vector(xi, P.dim)],
        "m": m,
        "n_atoms": int(sample.lambdas.size),
        "exp_moment": moment,
        "c0_over_v": c0_over_v,
        "deviation": abs(moment - c0_over_v),
        "relative_deviation": abs(moment - c0_over_v) / c0_over_v,
    }
    if bins is None:
        body["atoms"] = [
            [lam, mass] for lam, mass in sample.atoms
        ]
    else:
        lo = float(sample.lambdas.min())
        hi = float(sample.lambdas.max())
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
        masses, edges = np.histogram(
            sample.lambdas, bins=bins, range=(lo, hi), weights=sample.masses
        )
        body["histogram"] = {"edges": edges, "masses": masses}
    doc = {
        "manifest": _manifest(
            "dh", path, {"xi": xi_text, "m": m, "bins": bins}, t0
        ),
        "report": _jsonify(body),
    }
    _emit(doc, output)


def _load_character_input(path: str):
    """Polytope JSON or weight-table CSV, decided by content: JSON
    documents parse as JSON, everything else is treated as CSV."""
    with open(path, "r", encoding="utf-8") as fh:
        head = fh.read(1)
    if head == "{":
        return _load_polytope(path), None
    try:
        return None, wr.load_weight_table(path)
    except (ParseError, EmptyDegree) as exc:
        _fail(EXIT_PARSE, exc)


@main.command("character")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--xi", "xi_text", required=True)
@click.option(
    "--t",
    "t_text",
    default=",".join(str(t) for t in wr.LAURENT_T_SAMPLES),
    show_default=True,
    help="comma-separated t values for the sample table",
)
@click.option(
    "--m-max",
    type=int,
    default=128,
    show_default=True,
    help="table depth when the input is a polytope",
)
@click.option("--output", type=click.Path(dir_okay=False), default=None)
def cmd_character(path: str, xi_text: str, t_text: str, m_max: int, output) -> None:
    """Weight-character samples C(xi, t) and the Laurent-coefficient fit."""
    t0 = time.monotonic()
    P, table = _load_character_input(path)
    if table is None:
        if m_max < 1:
            _fail(EXIT_PARSE, f"--m-max must be >= 1, got {m_max}")
        try:
            table = wr.weight_table_toric(P, m_max)
        except NotReflexive as exc:
            _fail(EXIT_NOT_REFLEXIVE, exc)
    xi = _parse_xi(xi_text, table.dim)
    try:
        ts = [float(t) for t in t_text.split(",")]
    except ValueError:
        _fail(EXIT_PARSE, f"cannot parse --t {t_text!r}")
    if any(not (t > 0) or not math.isfinite(t) for t in ts):
        _fail(EXIT_PARSE, "all --t values must be positive and finite")
    samples = [
        {"t": t, "character": wr.weight_character(table, xi, t, table.m_max)}
        for t in ts
    ]
    try:
        fit = wr.laurent_fit(table, xi)
    except TruncationTooCoarse as exc:
        _fail(
            EXIT_PARSE,
            f"{exc} (rerun with --m-max {exc.required_m_max} or deeper)",
        )
    body = {
        "source": table.source,
        "dim": table.dim,
        "m_max": table.m_max,
        "xi": [float(c) for c in wr.as_float_vector(xi, table.dim)],
        "samples": samples,
        "laurent": {"b0": fit.b0, "b1": fit.b1},
    }
    if P is not None:
        b0, b1 = wr.b0_b1_exact(P, xi)
        body["exact"] = {
            "b0": b0,
            "b1": b1,
            "b0_error": abs(fit.b0 - float(b0)),
            "b1_error": abs(fit.b1 - float(b1)),
        }
    doc = {
        "manifest": _manifest(
            "character",
            path,
            {"xi": xi_text, "t": t_text, "m_max": m_max},
            t0,
        ),
        "report": _jsonify(body),
    }
    _emit(doc, output)


if __name__ == "__main__":
    main()
