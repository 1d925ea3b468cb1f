"""Numerical check of the (1,1)-homogeneity G(z; lambda v) = |lambda|^2 G(z; v)."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import DomainError, PreconditionError


@dataclass
class HomogeneityReport:
    residuals: list = field(default_factory=list)
    differences: list = field(default_factory=list)
    tol: float = 1e-10

    @property
    def max_residual(self):
        return max(self.residuals, default=0.0)

    @property
    def passed(self):
        return self.max_residual < self.tol

    @property
    def verdict(self):
        return "PASS" if self.passed else "FAIL"


def check_homogeneity(metric, samples, tol=1e-10) -> HomogeneityReport:
    """Residual of the homogeneity law on ``(site, lambda)`` samples.

    Each residual is ``|G(z; lam v) - |lam|^2 G(z; v)| / max(1, |lam|^2 |G|)``;
    the unnormalized differences are kept alongside.
    """
    report = HomogeneityReport(tol=tol)
    for k, (site, lam) in enumerate(samples):
        lam = complex(lam)
        if lam == 0:
            raise PreconditionError("lambda must be nonzero")
        if not site.v.any():
            raise PreconditionError("v must be nonzero")
        try:
            g = metric.evaluate([()], site.p, site.v)[0]
            g_scaled = metric.evaluate([()], site.p, lam * site.v)[0]
        except DomainError as exc:
            raise DomainError(f"sample {k}: {exc}", sample=(site, lam)) from None
        scale2 = abs(lam) ** 2
        diff = abs(g_scaled - scale2 * g)
        report.differences.append(diff)
        report.residuals.append(diff / max(1.0, scale2 * abs(g)))
    return report
