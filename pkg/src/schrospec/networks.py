"""The two MLPs and their checkpoint format.

The main network maps x to two heads (head 0 the wavefunction, head 1
the running normalization integral); the energy network maps the
constant 1 to the energy estimate.  Hidden activations are tanh, output
layers are linear.  Checkpoints are versioned binary files that
round-trip every parameter bit-exactly, which is what makes transfer
learning across couplings reproducible.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import (
    CheckpointFormatError,
    CheckpointShapeError,
    CheckpointVersionError,
    ConfigError,
    NumericError,
)
from .losses import ProblemSpec

__all__ = [
    "NetworkParams",
    "ModelPair",
    "EvalBundle",
    "glorot_init",
    "init_model",
    "PSI_HIDDEN_DEFAULT",
    "ENERGY_HIDDEN_DEFAULT",
    "evaluate",
    "evaluate_psi",
    "evaluate_energy",
    "save_checkpoint",
    "load_checkpoint",
    "checkpoint_name",
]

PSI_HIDDEN_DEFAULT = (256,) * 7
ENERGY_HIDDEN_DEFAULT = (256,) * 4

_MAGIC = b"SCHK"
_VERSION = 1
_HEADER = struct.Struct("<4sI")
_SPEC = struct.Struct("<ddiiddd")


@dataclass
class NetworkParams:
    """Dense MLP parameters; weights[i] is (out, in) row-major float64."""

    layer_dims: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def validate(self) -> None:
        if len(self.layer_dims) < 2:
            raise ConfigError("network needs at least input and output dims")
        if len(self.weights) != len(self.layer_dims) - 1 or len(self.biases) != len(self.weights):
            raise ConfigError("parameter list length inconsistent with layer_dims")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            want = (self.layer_dims[i + 1], self.layer_dims[i])
            if w.shape != want:
                raise ConfigError(f"weights[{i}] has shape {w.shape}, expected {want}")
            if b.shape != (self.layer_dims[i + 1],):
                raise ConfigError(f"biases[{i}] has shape {b.shape}, expected ({self.layer_dims[i + 1]},)")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise NumericError(f"non-finite parameters in layer {i}")

    def copy(self) -> "NetworkParams":
        return NetworkParams(list(self.layer_dims), [w.copy() for w in self.weights], [b.copy() for b in self.biases])

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def arrays(self) -> list[np.ndarray]:
        """Flat list (weights then bias per layer) used by the optimizer."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out


@dataclass
class ModelPair:
    """Wavefunction network plus energy network."""

    psi_net: NetworkParams
    energy_net: NetworkParams

    def copy(self) -> "ModelPair":
        return ModelPair(self.psi_net.copy(), self.energy_net.copy())

    def validate(self) -> None:
        self.psi_net.validate()
        self.energy_net.validate()
        if self.psi_net.layer_dims[0] != 1 or self.psi_net.layer_dims[-1] != 2:
            raise ConfigError("main network must map 1 input to 2 heads")
        if self.energy_net.layer_dims[0] != 1 or self.energy_net.layer_dims[-1] != 1:
            raise ConfigError("energy network must map 1 input to 1 output")


@dataclass(frozen=True)
class EvalBundle:
    """Everything the losses need at one collocation point."""

    psi: float
    d_psi: float
    d2_psi: float
    aux: float
    d_aux: float
    energy: float


def glorot_init(layer_dims: Sequence[int], rng: np.random.Generator) -> NetworkParams:
    """Glorot-uniform weights, zero biases."""
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return NetworkParams(list(layer_dims), weights, biases)


def init_model(
    psi_hidden: Sequence[int] = PSI_HIDDEN_DEFAULT,
    energy_hidden: Sequence[int] = ENERGY_HIDDEN_DEFAULT,
    seed: int = 0,
) -> ModelPair:
    """Fresh model pair, reproducible per seed."""
    rng = np.random.default_rng(seed)
    psi = glorot_init([1, *psi_hidden, 2], rng)
    energy = glorot_init([1, *energy_hidden, 1], rng)
    model = ModelPair(psi, energy)
    model.validate()
    return model


def evaluate_energy(model: ModelPair) -> float:
    val, _ = _kernels.value_forward(model.energy_net.weights, model.energy_net.biases, np.ones(1))
    return float(val[0, 0])


def evaluate_psi(model: ModelPair, xs: np.ndarray) -> np.ndarray:
    """Wavefunction head on a batch of points (values only)."""
    val, _ = _kernels.value_forward(model.psi_net.weights, model.psi_net.biases, np.asarray(xs, dtype=np.float64))
    return val[:, 0]


def evaluate(model: ModelPair, x: float) -> EvalBundle:
    """Full jet evaluation at one point plus the energy estimate."""
    val, d1, d2, _ = _kernels.jet_forward(model.psi_net.weights, model.psi_net.biases, np.array([float(x)]))
    energy = evaluate_energy(model)
    bundle = EvalBundle(
        psi=float(val[0, 0]),
        d_psi=float(d1[0, 0]),
        d2_psi=float(d2[0, 0]),
        aux=float(val[0, 1]),
        d_aux=float(d1[0, 1]),
        energy=energy,
    )
    for name, v in bundle.__dict__.items():
        if not np.isfinite(v):
            raise NumericError(f"non-finite network output: {name} at x={x}")
    return bundle


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------


def checkpoint_name(n: int, lam: float) -> str:
    return f"ckpt_n{n}_lambda{lam!r}.bin"


def _write_net(buf: io.BytesIO, net: NetworkParams) -> None:
    buf.write(struct.pack("<I", len(net.layer_dims)))
    buf.write(struct.pack(f"<{len(net.layer_dims)}I", *net.layer_dims))


def save_checkpoint(model: ModelPair, spec: ProblemSpec, path) -> None:
    """Versioned binary checkpoint: header, problem metadata, layer dims,
    then raw little-endian float64 parameters (per layer: weights
    row-major, then bias)."""
    model.validate()
    buf = io.BytesIO()
    buf.write(_HEADER.pack(_MAGIC, _VERSION))
    buf.write(
        _SPEC.pack(spec.omega_sq, spec.lam, spec.n, spec.parity, spec.half_width, spec.e_init, spec.e_steepness)
    )
    for net in (model.psi_net, model.energy_net):
        _write_net(buf, net)
    for net in (model.psi_net, model.energy_net):
        for w, b in zip(net.weights, net.biases):
            buf.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            buf.write(np.ascontiguousarray(b, dtype="<f8").tobytes())
    Path(path).write_bytes(buf.getvalue())


def _read_exact(buf: io.BytesIO, count: int, what: str) -> bytes:
    data = buf.read(count)
    if len(data) != count:
        raise CheckpointFormatError(f"truncated checkpoint while reading {what}")
    return data


def _read_dims(buf: io.BytesIO) -> list[int]:
    (ndims,) = struct.unpack("<I", _read_exact(buf, 4, "layer count"))
    if not 2 <= ndims <= 64:
        raise CheckpointShapeError(f"implausible layer count {ndims}")
    dims = list(struct.unpack(f"<{ndims}I", _read_exact(buf, 4 * ndims, "layer dims")))
    if any(d < 1 for d in dims):
        raise CheckpointShapeError(f"non-positive layer dim in {dims}")
    return dims


def _read_net(buf: io.BytesIO, dims: list[int]) -> NetworkParams:
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        w = np.frombuffer(_read_exact(buf, 8 * fan_out * fan_in, "weights"), dtype="<f8").reshape(fan_out, fan_in)
        b = np.frombuffer(_read_exact(buf, 8 * fan_out, "biases"), dtype="<f8")
        weights.append(w.astype(np.float64).copy())
        biases.append(b.astype(np.float64).copy())
    return NetworkParams(list(dims), weights, biases)


def load_checkpoint(path) -> tuple[ModelPair, ProblemSpec]:
    raw = Path(path).read_bytes()
    buf = io.BytesIO(raw)
    magic, version = _HEADER.unpack(_read_exact(buf, _HEADER.size, "header"))
    if magic != _MAGIC:
        raise CheckpointFormatError(f"bad magic bytes {magic!r}; not a checkpoint file")
    if version != _VERSION:
        raise CheckpointVersionError(f"unsupported checkpoint version {version} (expected {_VERSION})")
    omega_sq, lam, n, parity, half_width, e_init, e_steepness = _SPEC.unpack(
        _read_exact(buf, _SPEC.size, "problem metadata")
    )
    spec = ProblemSpec(omega_sq, lam, n, parity, half_width, e_init, e_steepness)
    psi_dims = _read_dims(buf)
    energy_dims = _read_dims(buf)
    psi = _read_net(buf, psi_dims)
    energy = _read_net(buf, energy_dims)
    if buf.read(1):
        raise CheckpointFormatError("trailing bytes after parameter payload")
    model = ModelPair(psi, energy)
    try:
        model.validate()
    except ConfigError as exc:
        raise CheckpointShapeError(str(exc)) from exc
    return model, spec
