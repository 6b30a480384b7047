"""ADAM training loop, the excited-state cascade, and coupling sweeps.

One epoch is one optimizer step on a fresh jittered batch.  Training
stops as soon as the weighted total loss and the raw equation loss both
drop below their thresholds; non-convergence after the epoch budget is a
reported outcome, not an exception, so sweeps can continue.

Excited states are trained in cascade order: each converged state is
frozen on a dense grid and every later state is penalized for overlap
with it, with the symmetry sign alternating and the energy-loss anchor
moving up to the previous state's energy.  Coupling sweeps reuse the
converged parameters of the nearest already-solved coupling as the
initial state, with the reduced transfer weights and a stricter equation
threshold.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import autodiff as ad
from .errors import ConfigError
from .losses import (
    ArchivedState,
    LossBreakdown,
    ProblemSpec,
    StateArchive,
    WeightSchedule,
    boundary_loss,
    energy_min_loss,
    equation_loss,
    integral_loss,
    normalization_loss,
    orthogonality_loss,
    symmetry_loss,
)
from .metrics import overlap_sq
from .networks import (
    ENERGY_HIDDEN_DEFAULT,
    PSI_HIDDEN_DEFAULT,
    ModelPair,
    checkpoint_name,
    evaluate_energy,
    evaluate_psi,
    init_model,
    load_checkpoint,
    save_checkpoint,
)
from .sampling import BatchSpec, domain_half_width, sample_batch, uniform_grid

__all__ = [
    "Adam",
    "TrainConfig",
    "TrainTrace",
    "TrainResult",
    "CascadeResult",
    "SweepResult",
    "train_state",
    "train_cascade",
    "sweep_lambda",
    "snapshot_state",
    "default_lambda_grid",
    "write_state_artifacts",
]

SNAPSHOT_POINTS = 2048


def default_lambda_grid() -> list[float]:
    """The coupling sweep grid 0.005 * 2^k for k = 0..12."""
    return [0.005 * 2.0**k for k in range(13)]


class Adam(object):
    """Standard ADAM with bias correction; state per parameter array."""

    def __init__(self, params: Sequence[np.ndarray], beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params: Sequence[np.ndarray], grads: Sequence[np.ndarray], lr: float) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    max_epochs: int = 50000
    total_threshold: float = 5e-2
    eq_threshold: float = 4e-4
    seed: int = 0
    batch_size: int = 512
    jitter_fraction: float = 0.5
    psi_hidden: tuple[int, ...] = PSI_HIDDEN_DEFAULT
    energy_hidden: tuple[int, ...] = ENERGY_HIDDEN_DEFAULT
    schedule: WeightSchedule = field(default_factory=WeightSchedule)
    lr_decay_every: int = 20000
    lr_decay_factor: float = 0.5
    transfer_from: str | None = None
    validate_every: int = 0
    deterministic: bool = True

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ConfigError("max_epochs must be >= 1")
        if self.total_threshold <= 0 or self.eq_threshold <= 0:
            raise ConfigError("convergence thresholds must be positive")
        if self.learning_rate <= 0:
            raise ConfigError("learning rate must be positive")

    def lr_at(self, epoch: int) -> float:
        if self.lr_decay_every <= 0:
            return self.learning_rate
        return self.learning_rate * self.lr_decay_factor ** (epoch // self.lr_decay_every)


@dataclass
class TrainTrace:
    """Per-epoch loss breakdown, energy, and optional validation fidelity."""

    breakdowns: list[LossBreakdown] = field(default_factory=list)
    energies: list[float] = field(default_factory=list)
    fidelity_epochs: list[int] = field(default_factory=list)
    fidelities: list[float] = field(default_factory=list)

    def __len__(self):
        return len(self.breakdowns)

    def to_csv(self, path) -> None:
        cols = ("epoch",) + LossBreakdown.COLUMNS + ("total", "energy")
        lines = [",".join(cols)]
        for i, (bd, e) in enumerate(zip(self.breakdowns, self.energies)):
            row = (i,) + bd.values() + (bd.total, e)
            lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
        Path(path).write_text("\n".join(lines) + "\n")


@dataclass
class TrainResult:
    spec: ProblemSpec
    model: ModelPair
    trace: TrainTrace
    outcome: str  # converged | max_epochs | diverged | resumed
    energy: float
    epochs: int

    @property
    def converged(self) -> bool:
        return self.outcome in ("converged", "resumed")


def _epoch_pass(model: ModelPair, spec: ProblemSpec, xs, archived_values, weights, edges):
    """Build the tape for one batch; returns (breakdown, total Var, leaves)."""
    tape = ad.Tape()
    pw, pb = ad.param_leaves(tape, model.psi_net.weights, model.psi_net.biases)
    ew, eb = ad.param_leaves(tape, model.energy_net.weights, model.energy_net.biases)

    val, d1, d2 = ad.net_jets(tape, pw, pb, xs)
    psi = ad.column(val, 0)
    d_aux = ad.column(d1, 1)
    d2_psi = ad.column(d2, 0)
    mirrored = ad.net_values(tape, pw, pb, -xs)
    edge_out = ad.net_values(tape, pw, pb, edges)
    e_out = ad.net_values(tape, ew, eb, np.ones(1))
    energy = ad.element(e_out, 0, 0)

    l_int = integral_loss(d_aux, psi)
    l_norm = normalization_loss(ad.element(edge_out, 0, 1), ad.element(edge_out, 1, 1))
    l_bc = boundary_loss(ad.element(edge_out, 0, 0), ad.element(edge_out, 1, 0))
    l_orth = orthogonality_loss(psi, archived_values)
    l_eq = equation_loss(psi, d2_psi, xs, energy, spec)
    l_en = energy_min_loss(energy, spec)
    l_sym = symmetry_loss(psi, ad.column(mirrored, 0), spec.parity)

    total = (
        l_int * weights.integral
        + l_norm * weights.normalization
        + l_bc * weights.boundary
        + l_eq * weights.equation
        + l_sym * weights.symmetry
    )
    if weights.orthogonality != 0.0 and isinstance(l_orth, ad.Var):
        total = total + l_orth * weights.orthogonality
    if weights.energy_min != 0.0:
        total = total + l_en * weights.energy_min

    def _f(x):
        return float(x.value) if isinstance(x, ad.Var) else float(x)

    breakdown = LossBreakdown(
        integral=_f(l_int),
        normalization=_f(l_norm),
        boundary=_f(l_bc),
        orthogonality=_f(l_orth),
        equation=_f(l_eq),
        energy_min=_f(l_en),
        symmetry=_f(l_sym),
        weights=weights,
        total=_f(total),
    )
    leaves_psi = [x for pair in zip(pw, pb) for x in pair]
    leaves_energy = [x for pair in zip(ew, eb) for x in pair]
    return breakdown, total, leaves_psi, leaves_energy, _f(energy)


def train_state(
    spec: ProblemSpec,
    cfg: TrainConfig,
    archive: StateArchive | None = None,
    model: ModelPair | None = None,
    reference: Callable[[np.ndarray], np.ndarray] | None = None,
) -> TrainResult:
    """Train one eigenstate.

    ``archive`` must hold the converged states 0..n-1 (empty for the
    ground state).  ``model``, when given, is copied and used as the
    initial state (transfer learning); otherwise ``cfg.transfer_from``
    is loaded, or a fresh seeded model is created.
    """
    archive = archive if archive is not None else StateArchive()
    if len(archive) != spec.n:
        raise ConfigError(f"archive holds {len(archive)} states; training n={spec.n} needs exactly {spec.n}")
    if model is not None:
        model = model.copy()
    elif cfg.transfer_from is not None:
        model, _ = load_checkpoint(cfg.transfer_from)
    else:
        model = init_model(cfg.psi_hidden, cfg.energy_hidden, cfg.seed)
    model.validate()

    rng = np.random.default_rng(cfg.seed)
    batch = BatchSpec(half_width=spec.half_width, count=cfg.batch_size, jitter_fraction=cfg.jitter_fraction)
    edges = np.array([-spec.half_width, spec.half_width])
    val_grid = uniform_grid(spec.half_width, cfg.batch_size) if reference is not None else None
    opt_psi = Adam(model.psi_net.arrays())
    opt_energy = Adam(model.energy_net.arrays())

    trace = TrainTrace()
    outcome = "max_epochs"
    energy = evaluate_energy(model)
    for epoch in range(cfg.max_epochs):
        xs = sample_batch(batch, rng)
        weights = cfg.schedule.at_epoch(epoch, spec.n)
        archived_values = archive.values_at(xs)
        breakdown, total, leaves_psi, leaves_energy, energy = _epoch_pass(
            model, spec, xs, archived_values, weights, edges
        )
        if not breakdown.finite():
            outcome = "diverged"
            break
        trace.breakdowns.append(breakdown)
        trace.energies.append(energy)
        if reference is not None and cfg.validate_every > 0 and epoch % cfg.validate_every == 0:
            trace.fidelity_epochs.append(epoch)
            trace.fidelities.append(overlap_sq(reference(val_grid), evaluate_psi(model, val_grid)))
        if breakdown.total < cfg.total_threshold and breakdown.equation < cfg.eq_threshold:
            outcome = "converged"
            break
        grads = ad.grad(total, leaves_psi + leaves_energy)
        lr = cfg.lr_at(epoch)
        opt_psi.step(model.psi_net.arrays(), grads[: len(leaves_psi)], lr)
        opt_energy.step(model.energy_net.arrays(), grads[len(leaves_psi) :], lr)
    return TrainResult(spec=spec, model=model, trace=trace, outcome=outcome, energy=energy, epochs=len(trace))


def snapshot_state(model: ModelPair, spec: ProblemSpec, points: int = SNAPSHOT_POINTS) -> ArchivedState:
    """Freeze the wavefunction head on a dense uniform grid."""
    xs = uniform_grid(spec.half_width, points)
    return ArchivedState(
        xs=xs,
        values=evaluate_psi(model, xs),
        energy=evaluate_energy(model),
        n=spec.n,
        half_width=spec.half_width,
    )


def write_state_artifacts(run_dir, result: TrainResult, state: ArchivedState | None, suffix: str = "") -> None:
    """Trace CSV, checkpoint, and dense state snapshot for one run."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    n, lam = result.spec.n, result.spec.lam
    tag = f"n{n}{suffix}"
    result.trace.to_csv(run_dir / f"trace_{tag}.csv")
    save_checkpoint(result.model, result.spec, run_dir / checkpoint_name(n, lam))
    if state is not None:
        lines = ["x,psi"]
        lines += [f"{x!r},{v!r}" for x, v in zip(state.xs, state.values)]
        (run_dir / f"state_{tag}.csv").write_text("\n".join(lines) + "\n")


@dataclass
class CascadeResult:
    results: list[TrainResult]
    archive: StateArchive
    completed: bool

    def energies(self) -> list[float]:
        return [r.energy for r in self.results]


def train_cascade(
    omega_sq: float,
    lam: float,
    cfg: TrainConfig,
    n_max: int,
    e_init: float = 0.0,
    e_steepness: float = 0.8,
    domain_override: float | None = None,
    run_dir=None,
    references: Sequence[Callable] | None = None,
) -> CascadeResult:
    """Train states n = 0..n_max in order, alternating the symmetry sign
    and anchoring each excited state's energy loss at the previous
    energy.  Stops at the first state that fails to converge."""
    archive = StateArchive()
    results: list[TrainResult] = []
    prev_energy = None
    for n in range(n_max + 1):
        spec = ProblemSpec(
            omega_sq=omega_sq,
            lam=lam,
            n=n,
            parity=1 if n % 2 == 0 else -1,
            half_width=domain_half_width(n, omega_sq, lam, domain_override),
            e_init=e_init if prev_energy is None else prev_energy,
            e_steepness=e_steepness,
        )
        cfg_n = dataclasses.replace(cfg, seed=cfg.seed + n, transfer_from=cfg.transfer_from if n == 0 else None)
        reference = references[n] if references is not None else None
        result = train_state(spec, cfg_n, archive, reference=reference)
        results.append(result)
        if not result.converged:
            if run_dir is not None:
                write_state_artifacts(run_dir, result, None)
            return CascadeResult(results, archive, completed=False)
        state = snapshot_state(result.model, spec)
        archive.add(state)
        prev_energy = result.energy
        if run_dir is not None:
            write_state_artifacts(run_dir, result, state)
    return CascadeResult(results, archive, completed=True)


@dataclass
class SweepResult:
    runs: dict
    completed: bool

    def energy_table(self) -> dict[int, dict[float, float]]:
        table: dict[int, dict[float, float]] = {}
        for (n, lam), result in self.runs.items():
            table.setdefault(n, {})[lam] = result.energy
        return table


def sweep_lambda(
    base_models: dict[int, ModelPair],
    lambda_list: Sequence[float],
    cfg: TrainConfig,
    omega_sq: float = 1.0,
    base_lambda: float = 0.0,
    eq_threshold: float = 2e-5,
    e_steepness: float = 0.8,
    domain_override: float | None = None,
    run_dir=None,
) -> SweepResult:
    """Transfer-learning sweep over couplings, ascending.

    Each (n, lambda) run starts from the already-solved model of the
    same state with the nearest coupling (the base models count as
    solved at ``base_lambda``) and uses the reduced transfer weights
    plus the stricter equation threshold.
    """
    if not base_models:
        raise ConfigError("sweep needs at least the base model for n=0")
    n_states = max(base_models) + 1
    if sorted(base_models) != list(range(n_states)):
        raise ConfigError("base models must cover n = 0..n_max without gaps")
    lambdas = sorted(set(float(l) for l in lambda_list))
    if any(l <= 0 for l in lambdas):
        raise ConfigError("sweep couplings must be positive")

    schedule = dataclasses.replace(cfg.schedule, orthogonality_per_state=30.0, energy_start=0.0)
    solved: dict[int, list[tuple[float, ModelPair]]] = {n: [(base_lambda, m)] for n, m in base_models.items()}
    runs: dict[tuple[int, float], TrainResult] = {}
    run_dir = Path(run_dir) if run_dir is not None else None

    for lam in lambdas:
        archive = StateArchive()
        prev_energy = None
        for n in range(n_states):
            spec = ProblemSpec(
                omega_sq=omega_sq,
                lam=lam,
                n=n,
                parity=1 if n % 2 == 0 else -1,
                half_width=domain_half_width(n, omega_sq, lam, domain_override),
                e_init=0.0 if prev_energy is None else prev_energy,
                e_steepness=e_steepness,
            )
            ckpt = run_dir / checkpoint_name(n, lam) if run_dir is not None else None
            if ckpt is not None and ckpt.exists():
                model, saved_spec = load_checkpoint(ckpt)
                if abs(saved_spec.half_width - spec.half_width) > 1e-12 or saved_spec.n != n:
                    raise ConfigError(f"checkpoint {ckpt} does not match the sweep configuration")
                result = TrainResult(
                    spec=spec, model=model, trace=TrainTrace(), outcome="resumed",
                    energy=evaluate_energy(model), epochs=0,
                )
            else:
                nearest = min(solved[n], key=lambda pair: abs(pair[0] - lam))[1]
                cfg_run = dataclasses.replace(
                    cfg,
                    schedule=schedule,
                    eq_threshold=eq_threshold,
                    seed=cfg.seed + 1000 * n + int(round(lam * 1e6)) % 997,
                    transfer_from=None,
                )
                result = train_state(spec, cfg_run, archive, model=nearest)
            runs[(n, lam)] = result
            if not result.converged:
                return SweepResult(runs, completed=False)
            state = snapshot_state(result.model, spec)
            archive.add(state)
            solved[n].append((lam, result.model))
            prev_energy = result.energy
            if run_dir is not None and result.outcome != "resumed":
                write_state_artifacts(run_dir, result, state, suffix=f"_lambda{lam!r}")
    return SweepResult(runs, completed=True)
