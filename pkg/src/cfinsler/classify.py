"""Sampled classification of a metric against the constant-curvature theorems.

Sites are drawn deterministically from a seed: base points from a scrambled
Halton sequence, directions Gaussian on the sphere and then F-normalized.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
import json

import numpy as np
from scipy.stats import qmc

from .errors import ClassificationAborted, HypothesesNotEstablished, SingularLevi
from .jets import TangentPoint
from .tensors import compiled, tensor_pack

SCHEMA_VERSION = 1


@dataclass
class SamplerConfig:
    """Sampling region and tolerances.

    Ball-domain metrics are sampled with |z| < ``ball_radius``; the others in
    the box ``[-box, box]^(2n)``.
    """

    samples: int = 200
    seed: int = 0
    ball_radius: float = 0.7
    box: float = 1.0
    curvature_tol: float = 1e-6
    tensor_tol: float = 1e-7
    singular_fraction: float = 0.05
    threads: int = 1


def sample_sites(metric, config: SamplerConfig, normalize=True) -> list:
    """Deterministic list of tangent vectors inside the metric's domain.

    With ``normalize`` each v is rescaled to F(z; v) = 1.
    """
    metric = compiled(metric)
    n = metric.n
    halton = qmc.Halton(d=2 * n, scramble=True, seed=config.seed)
    rng = np.random.default_rng(config.seed)
    sites = []
    while len(sites) < config.samples:
        u = halton.random(max(16, 2 * (config.samples - len(sites))))
        for row in u:
            if len(sites) == config.samples:
                break
            x = 2.0 * row - 1.0
            z = x[:n] + 1j * x[n:]
            if metric.domain == "ball":
                z = config.ball_radius * z
                if np.linalg.norm(z) >= config.ball_radius:
                    continue
            else:
                z = config.box * z
            v = rng.normal(size=n) + 1j * rng.normal(size=n)
            v = v / np.linalg.norm(v)
            sites.append((z, v))
    if not normalize:
        return [TangentPoint(z, v) for z, v in sites]
    return [TangentPoint(z, v / metric.F(z, v)) for z, v in sites]


@dataclass
class SiteResult:
    singular: bool = False
    min_eigenvalue: float = float("nan")
    K_F: float = float("nan")
    H_norm: float = float("nan")
    kahler_norm: float = float("nan")
    condition_norm: float = float("nan")


def evaluate_site(metric, site) -> SiteResult:
    try:
        P = tensor_pack(metric, site, with_h=True)
    except SingularLevi as exc:
        return SiteResult(singular=True, min_eigenvalue=exc.min_eigenvalue)
    return SiteResult(
        min_eigenvalue=P.min_levi_eigenvalue,
        K_F=P.K_F,
        H_norm=float(np.linalg.norm(P.H_contracted)),
        kahler_norm=float(np.linalg.norm(P.kahler_residual)),
        condition_norm=float(np.linalg.norm(P.geodesic_condition_residual)),
    )


def parallel_map(fn, items, threads=1):
    """Ordered map; ``threads=1`` runs inline."""
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass
class Verdict:
    verdict: str
    value: float
    tolerance: float


@dataclass
class ClassificationReport:
    metric: str
    dimension: int
    samples: int
    seed: int
    complete: bool | None
    strongly_pseudoconvex: Verdict
    curvature_constant_minus4: Verdict
    H_vanishes: Verdict
    kahler: Verdict
    geodesic_condition: Verdict
    condition_curvature_consistent: bool
    inconsistent_sites: int
    curvature_range: tuple
    corollaries: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schema_version"] = SCHEMA_VERSION
        d["curvature_range"] = list(self.curvature_range)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _verdict(value, tol):
    return Verdict("PASS" if value < tol else "FAIL", value, tol)


def _corollaries(report) -> dict:
    hyp = (report.curvature_constant_minus4.verdict == "PASS"
           and report.H_vanishes.verdict == "PASS")
    kahler = report.kahler.verdict == "PASS"
    complete = report.complete
    out = {}

    def entry(verdict, text):
        return {"verdict": verdict, "statement": text}

    if not hyp:
        out["infinitesimal_geodesics"] = entry(
            "NEGATIVE", "curvature -4 or vanishing H fails on samples; no conclusion")
        out["pointwise_geodesic_curves"] = entry(
            "NEGATIVE", "hypotheses (curvature -4, vanishing H) not met on samples")
        out["kobayashi_identification"] = entry(
            "NEGATIVE", "hypotheses (curvature -4, vanishing H) not met on samples")
        return out
    if complete is True:
        text = "infinitesimal complex geodesic tangent to every unit vector"
        if kahler:
            text += "; unique geodesic complex curve tangent to every unit vector"
        out["infinitesimal_geodesics"] = entry("POSITIVE", text + " (completeness assumed by declaration)")
        out["kobayashi_identification"] = entry(
            "POSITIVE", "F is identified with the Kobayashi metric (hypotheses met on samples; "
                        "completeness assumed by declaration)")
    else:
        why = "completeness not declared" if complete is None else "metric declared incomplete"
        out["infinitesimal_geodesics"] = entry("UNDETERMINED", why)
        out["kobayashi_identification"] = entry("UNDETERMINED", why)
    out["pointwise_geodesic_curves"] = entry(
        "POSITIVE" if kahler else "PARTIAL",
        "segment of geodesic complex curve exists exactly at sites where the contracted "
        "torsion vanishes" + ("; it vanishes at every sampled site" if kahler else
                              "; it fails at some sampled sites"))
    return out


def classify_metric(entry, config: SamplerConfig | None = None) -> ClassificationReport:
    """Aggregate pointwise tensors over sampled unit vectors into verdicts.

    Raises ClassificationAborted when more than ``singular_fraction`` of the
    sites have a degenerate Levi matrix.
    """
    config = config or SamplerConfig()
    metric = compiled(entry)
    sites = sample_sites(metric, config)
    # compile once before any threads start
    evaluate_site(metric, sites[0])
    results = parallel_map(lambda s: evaluate_site(metric, s), sites, config.threads)
    singular = sum(r.singular for r in results)
    if singular > config.singular_fraction * len(results):
        raise ClassificationAborted(
            f"NOT-STRONGLY-PSEUDOCONVEX: {singular} of {len(results)} sites have a "
            "degenerate Levi matrix")
    good = [r for r in results if not r.singular]
    min_eig = min(r.min_eigenvalue for r in results)
    curv = max(abs(r.K_F + 4.0) for r in good)
    H = max(r.H_norm for r in good)
    kahler = max(r.kahler_norm for r in good)
    cond = max(r.condition_norm for r in good)
    inconsistent = 0
    for r in good:
        lhs = r.condition_norm < config.tensor_tol
        rhs = abs(r.K_F + 4.0) < config.curvature_tol and r.H_norm < config.curvature_tol
        inconsistent += lhs != rhs
    notes = []
    if singular:
        notes.append(f"{singular} sites skipped: degenerate Levi matrix")
    if inconsistent:
        notes.append(f"INCONSISTENT: condition and curvature/H verdicts disagree at "
                     f"{inconsistent} sites; tolerance edge or a bug")
    report = ClassificationReport(
        metric=metric.name,
        dimension=metric.n,
        samples=len(results),
        seed=config.seed,
        complete=getattr(entry, "complete", None),
        strongly_pseudoconvex=Verdict("PASS" if not singular else "FAIL", min_eig, 0.0),
        curvature_constant_minus4=_verdict(curv, config.curvature_tol),
        H_vanishes=_verdict(H, config.curvature_tol),
        kahler=_verdict(kahler, config.tensor_tol),
        geodesic_condition=_verdict(cond, config.tensor_tol),
        condition_curvature_consistent=inconsistent == 0,
        inconsistent_sites=inconsistent,
        curvature_range=(min(r.K_F for r in good), max(r.K_F for r in good)),
        notes=notes,
    )
    report.corollaries = _corollaries(report)
    return report


def pointwise_geodesic_gate(report: ClassificationReport, metric, p, xi, tol=1e-7) -> str:
    """EXISTS or NOT-EXISTS for a geodesic complex curve tangent to (p; xi).

    Only meaningful once curvature -4 and vanishing H have passed on samples.
    """
    if not (report.curvature_constant_minus4.verdict == "PASS"
            and report.H_vanishes.verdict == "PASS"):
        raise HypothesesNotEstablished(
            "curvature -4 and vanishing H must pass on samples before the pointwise test")
    metric = compiled(metric)
    site = TangentPoint(p, xi)
    site = TangentPoint(site.p, site.v / metric.F(site.p, site.v))
    T = tensor_pack(metric, site, with_h=False).T_contracted
    return "EXISTS" if np.linalg.norm(T) < tol else "NOT-EXISTS"
