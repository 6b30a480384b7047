"""Collocation batches and training-domain sizing.

The domain must cover the state's support but not much more: too small
truncates the wavefunction, too large trains on stretches of zeros and
starves the inner-product losses.  For the harmonic well the width grows
linearly with the quantum number; with a quartic term the potential
climbs faster, so the width shrinks to the point where the anharmonic
potential reaches the harmonic potential's value at the harmonic edge,
plus one unit of slack per side.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = [
    "harmonic_domain",
    "anharmonic_domain",
    "domain_half_width",
    "BatchSpec",
    "sample_batch",
    "uniform_grid",
]

DOMAIN_SLACK = 1.0


def harmonic_domain(n: int) -> float:
    """Full training-domain width for the pure harmonic well: 7 + 2n."""
    if n < 0:
        raise ConfigError("quantum number must be >= 0")
    return 7.0 + 2.0 * n


def anharmonic_domain(n: int, lam: float, omega: float = 1.0) -> float:
    """Full width for the quartic-perturbed well.

    Solves lam*(La/2 - eps)^4 + omega*(La/2 - eps)^2 = omega*(L/2)^2 for
    the half-width, adds eps = 1 slack per side, and never exceeds the
    harmonic width.
    """
    base = harmonic_domain(n)
    if lam <= 0.0:
        return base
    if omega <= 0.0:
        raise ConfigError("anharmonic domain formula needs omega > 0")
    r = lam / omega
    half = np.sqrt((-1.0 + np.sqrt(1.0 + 4.0 * r * (base / 2.0) ** 2)) / (2.0 * r))
    return min(2.0 * (half + DOMAIN_SLACK), base)


def domain_half_width(n: int, omega_sq: float, lam: float, override: float | None = None) -> float:
    """Half-width for a general (omega_sq, lam) problem.

    Negative omega_sq (double well) and omega_sq == 0 (pure quartic) fall
    back to the same sizing rule with |omega| resp. omega = 1 as the
    harmonic reference; both cases accept an explicit override.
    """
    if override is not None:
        if override <= 0:
            raise ConfigError("domain override must be positive")
        return float(override)
    if omega_sq > 0:
        return anharmonic_domain(n, lam, float(np.sqrt(omega_sq))) / 2.0
    if lam <= 0:
        raise ConfigError("potential unbounded below: omega_sq <= 0 needs lambda > 0")
    omega_ref = float(np.sqrt(-omega_sq)) if omega_sq < 0 else 1.0
    return anharmonic_domain(n, lam, omega_ref) / 2.0


@dataclass(frozen=True)
class BatchSpec:
    """Jittered-grid collocation batch layout."""

    half_width: float
    count: int = 512
    jitter_fraction: float = 0.5

    def __post_init__(self):
        if self.count < 2:
            raise ConfigError("batch needs at least 2 points")
        if not 0.0 <= self.jitter_fraction <= 0.5:
            raise ConfigError("jitter_fraction must be in [0, 0.5]")
        if self.half_width <= 0:
            raise ConfigError("half_width must be positive")


def uniform_grid(half_width: float, count: int) -> np.ndarray:
    return np.linspace(-half_width, half_width, count)


def sample_batch(spec: BatchSpec, rng: np.random.Generator) -> np.ndarray:
    """One batch: each node of the spanning uniform grid jittered
    uniformly within +-jitter_fraction of the spacing, clipped to the
    domain.  Points stay sorted because the jitter never exceeds half a
    spacing."""
    grid = uniform_grid(spec.half_width, spec.count)
    if spec.jitter_fraction == 0.0:
        return grid
    spacing = 2.0 * spec.half_width / (spec.count - 1)
    jitter = rng.uniform(-spec.jitter_fraction * spacing, spec.jitter_fraction * spacing, size=spec.count)
    return np.clip(grid + jitter, -spec.half_width, spec.half_width)
