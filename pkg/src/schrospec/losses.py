"""The seven training losses and their scheduled weights.

Loss functions are written against a minimal numeric protocol (``+``,
``*``, ``mean`` ...) so the same code runs on plain NumPy arrays (for
tests and diagnostics, returning floats) and on :class:`~schrospec.autodiff.Var`
nodes (during training, returning differentiable nodes).

Metric conventions: sum of absolute errors for the two hard physical
constraints (normalization, boundary), mean squared error for the
integral, equation and symmetry residuals, and summed squared inner
products for orthogonality.  Discrete inner products are plain sums of
products of grid-normalized vectors, no grid-spacing factor.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .autodiff import Var
from .errors import ConfigError

__all__ = [
    "ProblemSpec",
    "LossWeights",
    "WeightSchedule",
    "LossBreakdown",
    "ArchivedState",
    "StateArchive",
    "potential",
    "integral_loss",
    "normalization_loss",
    "boundary_loss",
    "orthogonality_loss",
    "equation_loss",
    "energy_min_loss",
    "symmetry_loss",
]


@dataclass(frozen=True)
class ProblemSpec:
    """One eigenstate problem: potential, quantum number, domain."""

    omega_sq: float
    lam: float
    n: int
    parity: int
    half_width: float
    e_init: float = 0.0
    e_steepness: float = 0.8

    def __post_init__(self):
        if self.n < 0:
            raise ConfigError("quantum number n must be >= 0")
        if self.parity != (1 if self.n % 2 == 0 else -1):
            raise ConfigError(f"parity must be {'+1' if self.n % 2 == 0 else '-1'} for n={self.n}")
        if self.lam < 0:
            raise ConfigError("quartic coupling must be >= 0")
        if self.lam == 0 and self.omega_sq == 0:
            raise ConfigError("potential is identically zero (omega_sq and lambda both zero)")
        if not self.half_width > 0:
            raise ConfigError("half_width must be positive")
        if not self.e_steepness > 0:
            raise ConfigError("energy-loss steepness must be positive")

    def with_n(self, n: int, **changes) -> "ProblemSpec":
        return replace(self, n=n, parity=1 if n % 2 == 0 else -1, **changes)


def potential(x, spec: ProblemSpec):
    """V(x) = omega_sq * x^2 / 2 + lambda * x^4."""
    x2 = x * x
    return 0.5 * spec.omega_sq * x2 + spec.lam * x2 * x2


@dataclass(frozen=True)
class LossWeights:
    integral: float
    normalization: float
    boundary: float
    orthogonality: float
    equation: float
    energy_min: float
    symmetry: float


@dataclass(frozen=True)
class WeightSchedule:
    """Static weights plus the two scheduled ones.

    The equation weight ramps linearly from ``equation_start`` to
    ``equation_final`` over ``equation_ramp_epochs`` and then holds; the
    energy weight decays linearly from ``energy_start`` to zero over
    ``energy_decay_epochs``.  Transfer-initialized runs start from an
    already-correct state, so they use a much smaller orthogonality
    weight and drop the energy push entirely.
    """

    integral: float = 1000.0
    normalization: float = 500.0
    boundary: float = 10.0
    symmetry: float = 1000.0
    orthogonality_per_state: float = 500.0
    equation_start: float = 1.0
    equation_final: float = 100.0
    equation_ramp_epochs: int = 10000
    energy_start: float = 100.0
    energy_decay_epochs: int = 10000

    @classmethod
    def transfer(cls, **overrides) -> "WeightSchedule":
        defaults = dict(orthogonality_per_state=30.0, energy_start=0.0)
        defaults.update(overrides)
        return cls(**defaults)

    def at_epoch(self, epoch: int, n: int) -> LossWeights:
        frac = min(1.0, epoch / self.equation_ramp_epochs) if self.equation_ramp_epochs > 0 else 1.0
        eq = self.equation_start + (self.equation_final - self.equation_start) * frac
        decay = max(0.0, 1.0 - epoch / self.energy_decay_epochs) if self.energy_decay_epochs > 0 else 0.0
        return LossWeights(
            integral=self.integral,
            normalization=self.normalization,
            boundary=self.boundary,
            orthogonality=self.orthogonality_per_state * n,
            equation=eq,
            energy_min=self.energy_start * decay,
            symmetry=self.symmetry,
        )


@dataclass(frozen=True)
class LossBreakdown:
    """Unweighted values of the seven losses plus the weighted total."""

    integral: float
    normalization: float
    boundary: float
    orthogonality: float
    equation: float
    energy_min: float
    symmetry: float
    weights: LossWeights
    total: float

    COLUMNS = ("integral", "normalization", "boundary", "orthogonality", "equation", "energy_min", "symmetry")

    def values(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in self.COLUMNS)

    def finite(self) -> bool:
        return all(np.isfinite(v) for v in self.values()) and np.isfinite(self.total)

    def worst_term(self) -> str:
        """Name of the largest weighted contribution (used in numeric-error reports)."""
        weighted = {name: getattr(self.weights, name) * v for name, v in zip(self.COLUMNS, self.values())}
        bad = [name for name, v in weighted.items() if not np.isfinite(v)]
        if bad:
            return bad[0]
        return max(weighted, key=lambda k: weighted[k])


# ---------------------------------------------------------------------------
# dispatch helpers: Var or ndarray/float
# ---------------------------------------------------------------------------


def _mean(x):
    return x.mean() if isinstance(x, Var) else float(np.mean(x))


def _sum(x):
    return x.sum() if isinstance(x, Var) else float(np.sum(x))


def _abs(x):
    return x.abs() if isinstance(x, Var) else abs(float(x))


def _exp(x):
    return x.exp() if isinstance(x, Var) else float(np.exp(x))


def _sqrt(x):
    return x.sqrt() if isinstance(x, Var) else float(np.sqrt(x))


# ---------------------------------------------------------------------------
# the seven losses
# ---------------------------------------------------------------------------


def integral_loss(d_aux, psi):
    """MSE of (d aux/dx - psi^2): makes the auxiliary head the running
    normalization integral."""
    r = d_aux - psi * psi
    return _mean(r * r)


def normalization_loss(aux_left, aux_right):
    """SAE pinning the integral head to 0 at -L/2 and 1 at +L/2."""
    return _abs(aux_left) + _abs(aux_right - 1.0)


def boundary_loss(psi_left, psi_right):
    """SAE pinning the wavefunction to ~0 at both domain edges."""
    return _abs(psi_left) + _abs(psi_right)


def orthogonality_loss(psi, archived: Sequence[np.ndarray]):
    """Sum of squared overlaps with each previously converged state.

    Both the candidate and the archived vectors are normalized on the
    batch grid before the inner product; zero when nothing is archived.
    """
    if len(archived) == 0:
        return 0.0
    unit = psi / _sqrt(_sum(psi * psi))
    total = None
    for ref in archived:
        norm = float(np.linalg.norm(ref))
        if norm == 0.0:
            continue
        ov = _sum(unit * (ref / norm))
        sq = ov * ov
        total = sq if total is None else total + sq
    if total is None:
        return 0.0
    return total


def equation_loss(psi, d2_psi, xs, energy, spec: ProblemSpec):
    """MSE of the stationary equation residual -psi''/2 + (V - E) psi."""
    v = potential(np.asarray(xs, dtype=np.float64), spec)
    r = d2_psi * (-0.5) + psi * v - psi * energy
    return _mean(r * r)


def energy_min_loss(energy, spec: ProblemSpec):
    """exp(a (E - E_init)): monotone push toward lower energies."""
    return _exp((energy - spec.e_init) * spec.e_steepness)


def symmetry_loss(psi, psi_mirrored, parity: int):
    """MSE of psi(x) - s psi(-x) with s = +-1 fixed by the target state."""
    r = psi - psi_mirrored * float(parity)
    return _mean(r * r)


# ---------------------------------------------------------------------------
# archive of converged lower states
# ---------------------------------------------------------------------------


@dataclass
class ArchivedState:
    """A converged state frozen on a dense grid, evaluable anywhere
    (zero outside its original domain)."""

    xs: np.ndarray
    values: np.ndarray
    energy: float
    n: int
    half_width: float

    def __post_init__(self):
        norm = np.linalg.norm(self.values)
        if norm == 0.0:
            raise ValueError("archived state has zero norm")
        self.values = self.values / norm

    def __call__(self, x) -> np.ndarray:
        return np.interp(x, self.xs, self.values, left=0.0, right=0.0)


@dataclass
class StateArchive:
    """Previously converged states, indexed by quantum number order."""

    states: list = field(default_factory=list)

    def __len__(self):
        return len(self.states)

    def add(self, state: ArchivedState) -> None:
        if state.n != len(self.states):
            raise ConfigError(f"archive holds states 0..{len(self.states) - 1}; cannot add n={state.n}")
        self.states.append(state)

    def values_at(self, xs: np.ndarray) -> list[np.ndarray]:
        return [s(xs) for s in self.states]

    def energies(self) -> list[float]:
        return [s.energy for s in self.states]
