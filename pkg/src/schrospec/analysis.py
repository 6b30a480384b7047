"""Energy-scaling analysis: power-law fits of E_n(lambda) and the
crossover couplings where the two regimes meet.

Fitting log E against log lambda turns a power law into a line; the
quartic-coupling spectrum follows one line over its whole range, while
the mixed quadratic+quartic spectrum shows a shallow line at weak
coupling and a steeper one at strong coupling.  The intersection of the
two lines per state marks the breakdown of the perturbative regime and
moves to weaker coupling for higher states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError

__all__ = [
    "FitResult",
    "CriticalPoint",
    "REGIONS",
    "LOW_LAMBDA_MAX",
    "HIGH_LAMBDA_MIN",
    "fit_region",
    "critical_lambda",
    "split_regions",
    "scaling_summary",
]

REGIONS = ("low_lambda", "high_lambda", "quartic")
LOW_LAMBDA_MAX = 0.1
HIGH_LAMBDA_MIN = 2.0


@dataclass(frozen=True)
class FitResult:
    """log(E) = a log(lambda) + b over one coupling region."""

    a: float
    b: float
    region: str
    n: int
    residual: float
    points: int

    def energy_at(self, lam: float) -> float:
        return math.exp(self.a * math.log(lam) + self.b)


@dataclass(frozen=True)
class CriticalPoint:
    n: int
    lambda_c: float
    e_c: float


def fit_region(points: Iterable[tuple[float, float]], region: str, n: int) -> FitResult:
    """Ordinary least squares on (log lambda, log E)."""
    if region not in REGIONS:
        raise ConfigError(f"region must be one of {REGIONS}, got {region!r}")
    pts = [(float(lam), float(e)) for lam, e in points]
    if len(pts) < 2:
        raise ConfigError(f"need at least 2 points to fit, got {len(pts)}")
    if any(lam <= 0 or e <= 0 for lam, e in pts):
        raise ConfigError("power-law fit needs positive couplings and energies")
    x = np.log([lam for lam, _ in pts])
    y = np.log([e for _, e in pts])
    a, b = np.polyfit(x, y, 1)
    residual = float(np.sum((y - (a * x + b)) ** 2))
    return FitResult(a=float(a), b=float(b), region=region, n=n, residual=residual, points=len(pts))


def critical_lambda(fit_low: FitResult, fit_high: FitResult) -> CriticalPoint:
    """Intersection of two regional fit lines in (lambda, E) space."""
    if fit_low.n != fit_high.n:
        raise ConfigError("cannot intersect fits for different states")
    if fit_low.a == fit_high.a:
        raise ConfigError("fit lines are parallel; no crossover")
    log_lc = (fit_high.b - fit_low.b) / (fit_low.a - fit_high.a)
    lam_c = math.exp(log_lc)
    return CriticalPoint(n=fit_low.n, lambda_c=lam_c, e_c=fit_low.energy_at(lam_c))


def split_regions(
    lams: Sequence[float],
    low_max: float = LOW_LAMBDA_MAX,
    high_min: float = HIGH_LAMBDA_MIN,
) -> tuple[list[float], list[float]]:
    low = [l for l in lams if l < low_max]
    high = [l for l in lams if l > high_min]
    return low, high


def scaling_summary(
    anharmonic: dict[int, dict[float, float]],
    quartic: dict[int, dict[float, float]] | None = None,
    low_max: float = LOW_LAMBDA_MAX,
    high_min: float = HIGH_LAMBDA_MIN,
) -> tuple[list[FitResult], list[CriticalPoint]]:
    """Regional fits and crossover points from per-state energy tables
    keyed as {n: {lambda: E}}."""
    fits: list[FitResult] = []
    criticals: list[CriticalPoint] = []
    for n in sorted(anharmonic):
        table = anharmonic[n]
        low, high = split_regions(sorted(table), low_max, high_min)
        if len(low) >= 2 and len(high) >= 2:
            f_low = fit_region([(l, table[l]) for l in low], "low_lambda", n)
            f_high = fit_region([(l, table[l]) for l in high], "high_lambda", n)
            fits.extend([f_low, f_high])
            criticals.append(critical_lambda(f_low, f_high))
    if quartic:
        for n in sorted(quartic):
            table = quartic[n]
            if len(table) >= 2:
                fits.append(fit_region(sorted(table.items()), "quartic", n))
    return fits, criticals
