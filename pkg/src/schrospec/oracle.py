"""Reference solutions: grid diagonalization, exact harmonic states, and
the second-order perturbative energy formula.

The diagonalization route is deliberately independent of the neural
solver: the Hamiltonian -d2/dx2 / 2 + V is discretized with central
differences on a uniform grid (a symmetric tridiagonal matrix under
Dirichlet boundaries) and its lowest eigenpairs are found with Sturm
bisection plus inverse iteration, both implemented here.  Energies are
Richardson-extrapolated from three nested grids and the extrapolation is
required to be stable to 1e-8 under grid doubling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigError, ConvergenceError, DomainError
from .sampling import anharmonic_domain, harmonic_domain

__all__ = [
    "OracleSolution",
    "diagonalize",
    "default_x_max",
    "harmonic_exact",
    "perturbative_energy",
    "lowest_eigenvalues",
]

BOUNDARY_TOL = 1e-8
RICHARDSON_TOL = 1e-8


@dataclass
class OracleSolution:
    """Lowest-k eigenpairs on a uniform grid over [-x_max, x_max].

    Energies are grid-extrapolated; wavefunctions live on ``grid`` with
    unit discrete norm and the first significantly nonzero component
    positive.
    """

    grid: np.ndarray
    energies: np.ndarray
    wavefunctions: np.ndarray

    def state(self, n: int):
        """Interpolating callable for state n (zero outside the grid)."""
        xs, vals = self.grid, self.wavefunctions[n]
        return lambda x: np.interp(x, xs, vals, left=0.0, right=0.0)


def default_x_max(k: int, lam: float) -> float:
    """Generous half-domain for the lowest k states."""
    return max(harmonic_domain(k), anharmonic_domain(k, lam) if lam > 0 else 0.0) / 2.0 + 2.0


def _tridiag(omega_sq: float, lam: float, x_max: float, grid_points: int):
    """Interior-point central-difference Hamiltonian (diag, offdiag, full grid)."""
    grid = np.linspace(-x_max, x_max, grid_points)
    h = grid[1] - grid[0]
    xi = grid[1:-1]
    xi2 = xi * xi
    diag = 1.0 / (h * h) + 0.5 * omega_sq * xi2 + lam * xi2 * xi2
    off = np.full(grid_points - 3, -0.5 / (h * h))
    return grid, diag, off


def lowest_eigenvalues(diag: np.ndarray, off: np.ndarray, k: int, rtol: float = 1e-13) -> np.ndarray:
    """Lowest k eigenvalues of a symmetric tridiagonal matrix by Sturm
    bisection, refining all k brackets against a shared shift batch."""
    n = diag.shape[0]
    if k > n:
        raise ConfigError(f"requested {k} eigenvalues from a {n}x{n} matrix")
    abs_off = np.abs(off)
    radius = np.zeros(n)
    radius[:-1] += abs_off
    radius[1:] += abs_off
    lo = np.full(k, float(np.min(diag - radius)))
    hi = np.full(k, float(np.max(diag + radius)))
    per_bracket = 24
    for _ in range(90):
        scale = np.maximum(1.0, np.maximum(np.abs(lo), np.abs(hi)))
        live = (hi - lo) > rtol * scale
        if not live.any():
            break
        shifts = np.unique(
            np.concatenate([np.linspace(lo[j], hi[j], per_bracket + 2)[1:-1] for j in range(k) if live[j]])
        )
        counts = _kernels.sturm_counts(diag, off, shifts)
        for j in range(k):
            below = shifts[(counts <= j) & (shifts > lo[j]) & (shifts < hi[j])]
            if below.size:
                lo[j] = below.max()
            above = shifts[(counts >= j + 1) & (shifts < hi[j]) & (shifts > lo[j])]
            if above.size:
                hi[j] = above.min()
    else:
        raise ConvergenceError("Sturm bisection failed to shrink eigenvalue brackets")
    return (lo + hi) / 2.0


def _solve_shifted(diag, off, sigma, rhs):
    """Solve (T - sigma I) x = rhs by Gaussian elimination with partial
    pivoting; row swaps spill into a second superdiagonal.  Zero pivots
    (shift numerically on an eigenvalue) are replaced by the smallest
    normal float, which is exactly what inverse iteration wants."""
    n = diag.shape[0]
    d = np.asarray(diag, dtype=np.float64) - sigma
    du = np.asarray(off, dtype=np.float64).copy()
    du2 = np.zeros(max(n - 2, 0))
    b = np.array(rhs, dtype=np.float64)
    tiny = np.finfo(np.float64).tiny
    for i in range(n - 1):
        sub = off[i]
        if abs(d[i]) >= abs(sub):
            fact = sub / (d[i] if d[i] != 0.0 else tiny)
            d[i + 1] -= fact * du[i]
            b[i + 1] -= fact * b[i]
        else:
            fact = d[i] / sub
            d[i] = sub
            d[i + 1], du[i] = du[i] - fact * d[i + 1], d[i + 1]
            if i < n - 2:
                du2[i] = du[i + 1]
                du[i + 1] = -fact * du[i + 1]
            b[i], b[i + 1] = b[i + 1], b[i] - fact * b[i + 1]
    x = np.empty(n)
    x[n - 1] = b[n - 1] / (d[n - 1] if d[n - 1] != 0.0 else tiny)
    if n > 1:
        x[n - 2] = (b[n - 2] - du[n - 2] * x[n - 1]) / (d[n - 2] if d[n - 2] != 0.0 else tiny)
    for i in range(n - 3, -1, -1):
        x[i] = (b[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / (d[i] if d[i] != 0.0 else tiny)
    return x


def _eigenvector(diag, off, sigma, rng, neighbors):
    """Inverse iteration at a converged shift; Gram-Schmidt against
    eigenvectors of nearly equal eigenvalues keeps clusters orthogonal."""
    n = diag.shape[0]
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    for _ in range(3):
        v = _solve_shifted(diag, off, sigma, v)
        for u in neighbors:
            v -= (u @ v) * u
        norm = np.linalg.norm(v)
        if norm == 0.0:
            raise ConvergenceError("inverse iteration collapsed to the zero vector")
        v /= norm
    return v


def _fix_sign(v: np.ndarray) -> np.ndarray:
    threshold = 1e-3 * np.max(np.abs(v))
    idx = np.argmax(np.abs(v) > threshold)
    if v[idx] < 0:
        return -v
    return v


def diagonalize(
    omega_sq: float,
    lam: float,
    x_max: float | None = None,
    grid_points: int = 4001,
    k: int = 6,
) -> OracleSolution:
    """Lowest-k eigenpairs of -psi''/2 + (omega_sq x^2 / 2 + lam x^4) psi.

    Eigenvalues are computed on grids of ``grid_points``, 2x and 4x
    resolution and Richardson-extrapolated; the two extrapolations must
    agree to 1e-8 per state.  Wavefunctions are reported on the requested
    grid.
    """
    if grid_points < 201:
        raise ConfigError("grid_points must be >= 201")
    if k < 1:
        raise ConfigError("need at least one state")
    if x_max is None:
        x_max = default_x_max(k, lam)
    if x_max <= 0:
        raise ConfigError("x_max must be positive")

    sizes = [grid_points, 2 * grid_points - 1, 4 * grid_points - 3]
    raw = []
    tridiags = []
    for g in sizes:
        grid, diag, off = _tridiag(omega_sq, lam, x_max, g)
        tridiags.append((grid, diag, off))
        raw.append(lowest_eigenvalues(diag, off, k))
    extrap_coarse = (4.0 * raw[1] - raw[0]) / 3.0
    extrap_fine = (4.0 * raw[2] - raw[1]) / 3.0
    drift = np.max(np.abs(extrap_fine - extrap_coarse))
    if drift >= RICHARDSON_TOL:
        raise ConvergenceError(
            f"grid-doubling changed extrapolated energies by {drift:.3e} (>= {RICHARDSON_TOL}); increase grid_points"
        )

    grid, diag, off = tridiags[0]
    rng = np.random.default_rng(12345)
    vectors = np.zeros((k, grid_points))
    interior = []
    scale = max(1.0, float(np.max(np.abs(raw[0]))))
    for j in range(k):
        neighbors = [interior[i] for i in range(j) if abs(raw[0][i] - raw[0][j]) < 1e-6 * scale]
        v = _eigenvector(diag, off, raw[0][j], rng, neighbors)
        interior.append(v)
        vectors[j, 1:-1] = _fix_sign(v)

    edge = np.max(np.abs(vectors[:, [1, -2]]))
    if edge >= BOUNDARY_TOL:
        raise DomainError(
            f"wavefunction amplitude {edge:.3e} at the domain edge (>= {BOUNDARY_TOL}); increase x_max"
        )
    return OracleSolution(grid=grid, energies=extrap_fine, wavefunctions=vectors)


def harmonic_exact(n: int, omega: float, grid: np.ndarray):
    """Exact harmonic eigenstate on a grid (unit discrete norm) and its
    energy (n + 1/2) omega."""
    if n < 0:
        raise ConfigError("quantum number must be >= 0")
    if omega <= 0:
        raise ConfigError("harmonic frequency must be positive")
    y = np.sqrt(omega) * np.asarray(grid, dtype=np.float64)
    h_prev = np.pi**-0.25 * np.exp(-0.5 * y * y)
    if n == 0:
        psi = h_prev
    else:
        h_cur = np.sqrt(2.0) * y * h_prev
        for m in range(1, n):
            h_cur, h_prev = np.sqrt(2.0 / (m + 1)) * y * h_cur - np.sqrt(m / (m + 1)) * h_prev, h_cur
        psi = h_cur
    psi = psi / np.linalg.norm(psi)
    return psi, (n + 0.5) * omega


def perturbative_energy(n: int, lam: float) -> float:
    """Second-order perturbative energy of the unit-frequency quartic
    oscillator (valid as an asymptotic series for small lam)."""
    first = 0.75 * lam * (1.0 + 2.0 * n * (n + 1.0))
    second = (
        (n + 1.0) * (n + 1.5) ** 2 * (n + 2.0) / (2.0 + 3.0 * lam * (2.0 * n + 3.0))
        - n * (n - 0.5) ** 2 * (n - 1.0) / (2.0 + 3.0 * lam * (2.0 * n - 1.0))
        + (n + 1.0) * (n + 2.0) * (n + 3.0) * (n + 4.0) / (16.0 * (4.0 + 6.0 * lam * (2.0 * n + 5.0)))
        - n * (n - 1.0) * (n - 2.0) * (n - 3.0) / (16.0 * (4.0 + 6.0 * lam * (2.0 * n - 3.0)))
    )
    return (n + 0.5) + first - lam * lam * second
