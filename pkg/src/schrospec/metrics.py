"""Evaluation metrics: signed relative energy error and resampled fidelity.

Fidelity is the squared overlap of the two states after normalizing both
on the evaluation grid.  Because it depends (weakly) on where the grid
points land, it is recomputed on many jittered grids and reported as a
mean with a population standard deviation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError, NumericError
from .sampling import BatchSpec, sample_batch

__all__ = ["FidelityReport", "energy_error", "overlap_sq", "fidelity"]


@dataclass(frozen=True)
class FidelityReport:
    mean: float
    std: float
    resamples: int


def energy_error(e_ref: float, e_pinn: float) -> float:
    """(E_ref - E_solver) / E_ref; positive means the solver
    underestimates the energy."""
    if e_ref == 0.0:
        raise ConfigError("reference energy must be nonzero for a relative error")
    return (e_ref - e_pinn) / e_ref


def overlap_sq(a: np.ndarray, b: np.ndarray) -> float:
    """Squared inner product of two vectors normalized on their grid."""
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise NumericError("zero-norm state in overlap computation")
    ov = float(np.dot(a / na, b / nb))
    return ov * ov


def fidelity(
    psi_ref: Callable[[np.ndarray], np.ndarray],
    psi_other: Callable[[np.ndarray], np.ndarray],
    half_width: float,
    resamples: int = 1000,
    points: int = 512,
    jitter_fraction: float = 0.5,
    seed: int = 0,
) -> FidelityReport:
    """Mean and population std of the squared overlap over freshly
    jittered spanning grids."""
    if resamples < 1:
        raise ConfigError("resamples must be >= 1")
    spec = BatchSpec(half_width=half_width, count=points, jitter_fraction=jitter_fraction)
    rng = np.random.default_rng(seed)
    vals = np.empty(resamples)
    for i in range(resamples):
        xs = sample_batch(spec, rng)
        vals[i] = overlap_sq(np.asarray(psi_ref(xs), dtype=np.float64), np.asarray(psi_other(xs), dtype=np.float64))
    return FidelityReport(mean=float(vals.mean()), std=float(vals.std()), resamples=resamples)
