"""Command-line interface.

Exit codes: 0 success, 1 check failure, 2 classification aborted,
3 geodesic refusal, 64 usage error.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import sys

import click
import numpy as np

from . import __version__
from .catalog import BUILTIN_NAMES, MetricCatalogEntry, load_metric
from .classify import SamplerConfig, classify_metric, parallel_map, sample_sites
from .disk import (PolarGrid, ahlfors_compare, gaussian_curvature, laplacian_estimate,
                   linear_disk, poincare_scale, pullback_scale)
from .errors import (ClassificationAborted, FinslerError, MetricParseError, PreconditionError)
from .geodesic import GeodesicOptions, Refusal, solve_complex_geodesic
from .homogeneity import check_homogeneity
from .identities import identity_suite
from .parser import parse_metric
from .tensors import levi, tensor_pack

EXIT_OK, EXIT_FAIL, EXIT_ABORT, EXIT_REFUSAL, EXIT_USAGE = 0, 1, 2, 3, 64


# -- helpers -----------------------------------------------------------------

def _resolve_metric(ref, dim, expr):
    if expr is not None:
        if dim is None:
            raise click.UsageError("--expr needs --dim")
        ast = parse_metric(expr, dim)
        return MetricCatalogEntry(name="expr", dimension=dim, ast=ast)
    if ref is None:
        raise click.UsageError("missing METRIC (file path or builtin name)")
    try:
        return load_metric(ref, dim)
    except FileNotFoundError:
        raise click.UsageError(
            f"metric {ref!r} is neither a file nor a builtin ({', '.join(BUILTIN_NAMES)})")


def _complex_vector(text, name):
    try:
        return np.array([complex(x.strip().replace(" ", "")) for x in text.split(",")])
    except ValueError:
        raise click.UsageError(f"{name}: expected comma-separated complex numbers, got {text!r}")


def _emit(ctx, payload, rows=None, header=None, summary=None):
    """Write JSON (payload) or CSV (header + rows, summary as comment lines).

    ``--quiet`` silences stdout only; an explicit ``--output`` file is still written.
    """
    out = ctx.obj["output"]
    if ctx.obj["quiet"] and not out:
        return
    if ctx.obj["format"] == "json":
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if header:
            w.writerow(header)
        for row in rows or []:
            w.writerow(row)
        for key, value in (summary or {}).items():
            buf.write(f"# {key}={value!r}\n")
        text = buf.getvalue()
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _common(fn):
    fn = click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json",
                      show_default=True, help="Output format.")(fn)
    fn = click.option("--quiet", is_flag=True, help="Suppress stdout; --output files are still written.")(fn)
    fn = click.option("--output", "-o", type=click.Path(dir_okay=False), default=None,
                      help="Write the report to a file instead of stdout.")(fn)
    fn = click.option("--threads", type=click.IntRange(min=1), default=None,
                      help="Worker threads for sampling (default: CPU count).")(fn)
    fn = click.option("--seed", type=int, default=0, show_default=True)(fn)
    return fn


def _metric_args(fn):
    fn = click.option("--expr", default=None, help="Inline expression for G instead of METRIC.")(fn)
    fn = click.option("--dim", type=click.IntRange(min=1), default=None,
                      help="Dimension n (builtins and --expr).")(fn)
    fn = click.argument("metric", required=False)(fn)
    return fn


def _setup(ctx, fmt, quiet, output, threads, seed):
    ctx.obj = dict(format=fmt, quiet=quiet, output=output,
                   threads=threads or os.cpu_count() or 1, seed=seed)


def _read_config(path):
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise click.UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (x.strip() for x in line.split("=", 1))
            values[key.replace("-", "_")] = value
    return values


# -- commands ----------------------------------------------------------------

@click.group()
@click.version_option(__version__)
@click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None,
              help="key = value file supplying option defaults; flags override it.")
@click.pass_context
def cli(ctx, config):
    """Holomorphic curvature, Kahler/torsion checks and complex geodesics of complex Finsler metrics."""
    if config:
        values = _read_config(config)
        ctx.default_map = {name: dict(values) for name in ctx.command.commands}


@cli.command()
@_metric_args
@_common
@click.option("--samples", type=click.IntRange(min=1), default=20, show_default=True)
@click.option("--tol", type=click.FloatRange(min=0, min_open=True), default=1e-9,
              show_default=True, help="Tolerance for every residual.")
@click.pass_context
def check(ctx, metric, dim, expr, fmt, quiet, output, threads, seed, samples, tol):
    """Homogeneity, Levi positivity and the identity suite on sampled sites."""
    _setup(ctx, fmt, quiet, output, threads, seed)
    entry = _resolve_metric(metric, dim, expr)
    m = entry.compile()
    config = SamplerConfig(samples=samples, seed=seed)
    rng = np.random.default_rng(seed)
    sites = sample_sites(m, config, normalize=False)
    lambdas = rng.normal(size=samples) + 1j * rng.normal(size=samples)
    checks = {}
    try:
        hom = check_homogeneity(m, list(zip(sites, lambdas)), tol=tol)
        checks["homogeneity"] = hom.max_residual
    except FinslerError as exc:
        checks["homogeneity"] = math.inf
        click.echo(f"homogeneity: {exc}", err=True)
    singular = 0
    for s in sites:
        try:
            levi(m, s)
        except FinslerError:
            singular += 1
    checks["levi_singular_sites"] = float(singular)
    identities = {}
    if singular == 0 and checks["homogeneity"] < tol:
        def run(site):
            try:
                return identity_suite(m, site).residuals
            except FinslerError as exc:
                return {"evaluation_error": math.inf, "_msg": str(exc)}
        identity_suite(m, sites[0])
        for res in parallel_map(run, sites, ctx.obj["threads"]):
            for key, value in res.items():
                if key == "_msg":
                    continue
                identities[key] = max(identities.get(key, 0.0), value)
    else:
        identities["skipped"] = math.inf
    failed = [k for k, v in {**checks, **identities}.items() if not v < tol and
              k != "levi_singular_sites"] + (["levi"] if singular else [])
    verdict = "FAIL" if failed else "PASS"
    payload = {"metric": entry.name, "samples": samples, "seed": seed, "tolerance": tol,
               "checks": {k: _json_float(v) for k, v in checks.items()},
               "identities": {k: _json_float(v) for k, v in sorted(identities.items())},
               "failed": sorted(failed), "verdict": verdict}
    rows = [(k, v, tol, "PASS" if (v < tol if k != "levi_singular_sites" else v == 0) else "FAIL")
            for k, v in list(checks.items()) + sorted(identities.items())]
    _emit(ctx, payload, rows, ["check", "max_residual", "tolerance", "verdict"],
          {"verdict": verdict})
    return EXIT_OK if verdict == "PASS" else EXIT_FAIL


def _json_float(x):
    return x if math.isfinite(x) else repr(x)


@cli.command()
@_metric_args
@_common
@click.option("--samples", type=click.IntRange(min=1), default=100, show_default=True)
@click.pass_context
def curvature(ctx, metric, dim, expr, fmt, quiet, output, threads, seed, samples):
    """Holomorphic curvature K_F at sampled unit vectors."""
    _setup(ctx, fmt, quiet, output, threads, seed)
    entry = _resolve_metric(metric, dim, expr)
    m = entry.compile()
    sites = sample_sites(m, SamplerConfig(samples=samples, seed=seed))
    tensor_pack(m, sites[0], with_h=False)
    values = parallel_map(lambda s: tensor_pack(m, s, with_h=False).K_F, sites,
                          ctx.obj["threads"])
    n = m.n
    header = ["site"] + [f"{part}_{k}{a}" for k in ("z", "v") for a in range(1, n + 1)
                         for part in ("re", "im")] + ["K_F"]
    rows = []
    for idx, (s, K) in enumerate(zip(sites, values)):
        coords = []
        for vec in (s.p, s.v):
            for c in vec:
                coords += [float(c.real), float(c.imag)]
        rows.append([idx] + coords + [K])
    summary = {"min": min(values), "max": max(values), "mean": math.fsum(values) / len(values)}
    payload = {"metric": entry.name, "samples": samples, "seed": seed,
               "rows": [{"site": r[0], "z": [[a, b] for a, b in zip(r[1:1 + 2 * n:2], r[2:2 + 2 * n:2])],
                         "v": [[a, b] for a, b in zip(r[1 + 2 * n:1 + 4 * n:2], r[2 + 2 * n:2 + 4 * n:2])],
                         "K_F": r[-1]} for r in rows],
               "summary": summary}
    _emit(ctx, payload, rows, header, summary)
    return EXIT_OK


@cli.command()
@_metric_args
@_common
@click.option("--samples", type=click.IntRange(min=1), default=200, show_default=True)
@click.option("--curvature-tol", type=click.FloatRange(min=0, min_open=True), default=1e-6,
              show_default=True)
@click.option("--tensor-tol", type=click.FloatRange(min=0, min_open=True), default=1e-7,
              show_default=True)
@click.pass_context
def classify(ctx, metric, dim, expr, fmt, quiet, output, threads, seed, samples,
             curvature_tol, tensor_tol):
    """Sampled verdicts on curvature -4, vanishing H, Kahler and the geodesic condition."""
    _setup(ctx, fmt, quiet, output, threads, seed)
    entry = _resolve_metric(metric, dim, expr)
    config = SamplerConfig(samples=samples, seed=seed, curvature_tol=curvature_tol,
                           tensor_tol=tensor_tol, threads=ctx.obj["threads"])
    try:
        report = classify_metric(entry, config)
    except ClassificationAborted as exc:
        _emit(ctx, {"metric": entry.name, "aborted": str(exc)}, [("aborted", str(exc))],
              ["key", "value"])
        return EXIT_ABORT
    d = report.to_dict()
    rows = []
    for key in ("strongly_pseudoconvex", "curvature_constant_minus4", "H_vanishes",
                "kahler", "geodesic_condition"):
        v = d[key]
        rows.append((key, v["verdict"], v["value"], v["tolerance"]))
    rows.append(("condition_curvature_consistent",
                 str(report.condition_curvature_consistent), "", ""))
    for key, v in sorted(report.corollaries.items()):
        rows.append((key, v["verdict"], "", v["statement"]))
    _emit(ctx, d, rows, ["check", "verdict", "value", "tolerance_or_statement"])
    return EXIT_OK


@cli.command()
@_metric_args
@_common
@click.option("--p", "p_text", required=True, help="Base point, e.g. '0,0'.")
@click.option("--xi", "xi_text", required=True, help="Unit direction, e.g. '1,0'.")
@click.option("--rays", type=click.IntRange(min=16), default=64, show_default=True)
@click.option("--nt", type=click.IntRange(min=16), default=48, show_default=True)
@click.option("--s-max", type=click.FloatRange(min=0, min_open=True), default=5.0,
              show_default=True)
@click.option("--rtol", type=click.FloatRange(min=0, min_open=True), default=1e-10,
              show_default=True)
@click.option("--condition-tol", type=click.FloatRange(min=0, min_open=True), default=1e-7,
              show_default=True)
@click.option("--force", is_flag=True, help="Integrate even when the condition fails.")
@click.option("--trace-csv", type=click.Path(dir_okay=False), default=None,
              help="Write the polar-grid trace here.")
@click.pass_context
def geodesic(ctx, metric, dim, expr, fmt, quiet, output, threads, seed, p_text, xi_text,
             rays, nt, s_max, rtol, condition_tol, force, trace_csv):
    """Radial construction of the holomorphic disk tangent to (p; xi)."""
    _setup(ctx, fmt, quiet, output, threads, seed)
    entry = _resolve_metric(metric, dim, expr)
    p = _complex_vector(p_text, "--p")
    xi = _complex_vector(xi_text, "--xi")
    if len(p) != entry.dimension or len(xi) != entry.dimension:
        raise click.UsageError(f"--p and --xi need {entry.dimension} components")
    if not np.any(xi):
        raise click.UsageError("--xi must be nonzero")
    opts = GeodesicOptions(condition_tol=condition_tol, n_rays=rays, n_t=nt, s_max=s_max,
                           rtol=rtol, atol=rtol * 1e-2, force=force)
    result = solve_complex_geodesic(entry, p, xi, opts)
    if isinstance(result, Refusal):
        res = [[float(c.real), float(c.imag)] for c in result.residual]
        payload = {"metric": entry.name, "refused": True, "reason": result.reason,
                   "condition_residual": res, "residual_norm": result.residual_norm}
        _emit(ctx, payload, [(a + 1, r[0], r[1]) for a, r in enumerate(res)],
              ["component", "re_residual", "im_residual"], {"refused": result.reason})
        return EXIT_REFUSAL
    if trace_csv:
        with open(trace_csv, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(result.csv_header())
            w.writerows(result.csv_rows())
    summary = {
        "flags": list(result.flags),
        "holomorphy_residual": result.holomorphy_residual,
        "isometry_residual": result.isometry_residual,
        "realized_curvature": result.realized_curvature,
        "K_F": result.K_F,
        "norm_drift": result.norm_drift,
        "condition_residual_norm": float(np.linalg.norm(result.condition_residual)),
        "kahler_residual_norm": float(np.linalg.norm(result.kahler_residual)),
    }
    payload = {"metric": entry.name, "refused": False, "rays": rays, "nt": nt,
               "s_max": s_max, **summary}
    _emit(ctx, payload, [(k, v if not isinstance(v, list) else ";".join(v))
                         for k, v in summary.items()], ["key", "value"])
    return EXIT_OK


def _scale_from_options(metric, dim, direction, factor, source_a):
    if metric is None:
        return poincare_scale(source_a).scaled(factor) if factor != 1.0 else poincare_scale(source_a)
    entry = _resolve_metric(metric, dim, None)
    d = _complex_vector(direction, "--direction") if direction else \
        np.eye(entry.dimension, dtype=complex)[0]
    if len(d) != entry.dimension:
        raise click.UsageError(f"--direction needs {entry.dimension} components")
    scale = pullback_scale(entry, linear_disk(d))
    return scale.scaled(factor) if factor != 1.0 else scale


def _scale_options(fn):
    fn = click.option("--direction", default=None,
                      help="Linear disk direction for a metric pullback (default e1).")(fn)
    fn = click.option("--factor", type=float, default=1.0, show_default=True,
                      help="Multiply the scale by this constant.")(fn)
    fn = click.option("--source-a", type=click.FloatRange(min=0, min_open=True), default=1.0,
                      show_default=True, help="Without METRIC the scale is g_a with this a.")(fn)
    fn = click.option("--dim", type=click.IntRange(min=1), default=None)(fn)
    fn = click.argument("metric", required=False)(fn)
    return fn


@cli.command()
@_scale_options
@_common
@click.option("--at", "points", multiple=True, default=("0",), show_default=True,
              help="Point of the disk (repeatable).")
@click.pass_context
def laplacian(ctx, metric, dim, direction, factor, source_a, fmt, quiet, output, threads,
              seed, points):
    """Circle-mean Laplacian of log g and Gaussian curvature of a disk scale."""
    _setup(ctx, fmt, quiet, output, threads, seed)
    g = _scale_from_options(metric, dim, direction, factor, source_a)
    rows = []
    for text in points:
        z0 = _complex_vector(text, "--at")[0]
        est = laplacian_estimate(lambda z: np.log(g(z)), z0, smooth=g.smooth)
        K = gaussian_curvature(g, z0)
        rows.append((text, est.value, K, est.tag))
    payload = {"scale": g.label, "rows": [dict(zip(("zeta", "laplacian_log_g", "K", "tag"), r))
                                          for r in rows]}
    _emit(ctx, payload, rows, ["zeta", "laplacian_log_g", "K", "tag"])
    return EXIT_OK


@cli.command()
@_scale_options
@_common
@click.option("--a", "a", type=click.FloatRange(min=0, min_open=True), default=1.0,
              show_default=True, help="Compare against g_a.")
@click.option("--grid", default="20,20,0.9", show_default=True, help="n_r,n_theta,r_max")
@click.option("--tol", type=click.FloatRange(min=0, min_open=True), default=1e-8,
              show_default=True)
@click.pass_context
def ahlfors(ctx, metric, dim, direction, factor, source_a, fmt, quiet, output, threads, seed,
            a, grid, tol):
    """Compare a disk scale with g_a on a polar grid; exit 1 on violation."""
    _setup(ctx, fmt, quiet, output, threads, seed)
    try:
        n_r, n_theta, r_max = grid.split(",")
        pg = PolarGrid(int(n_r), int(n_theta), float(r_max))
        pg.points()
    except ValueError:
        raise click.UsageError(f"--grid: expected n_r,n_theta,r_max with r_max in (0,1), got {grid!r}")
    g = _scale_from_options(metric, dim, direction, factor, source_a)
    report = ahlfors_compare(g, a, pg, tol=tol)
    rows = [(repr(z), gv, ga, margin) for z, gv, ga, margin in report.csv_rows()]
    payload = {"scale": g.label, "a": a, "flags": report.flags,
               "max_excess": report.max_excess,
               "equality_everywhere": report.equality_everywhere,
               "points": len(rows)}
    _emit(ctx, payload, rows, ["zeta", "g", "g_a", "margin"],
          {"flags": ";".join(report.flags), "max_excess": report.max_excess})
    return EXIT_FAIL if report.violation else EXIT_OK


def main(argv=None) -> int:
    """Entry point; returns the process exit code."""
    try:
        code = cli.main(args=argv, prog_name="cfinsler", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        exc.show()
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except click.exceptions.Abort:
        return EXIT_FAIL
    except (MetricParseError, PreconditionError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_USAGE
    except ClassificationAborted as exc:
        click.echo(f"aborted: {exc}", err=True)
        return EXIT_ABORT
    except FinslerError as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        return EXIT_FAIL
    return code if isinstance(code, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
