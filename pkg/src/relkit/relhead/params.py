"""Parameters of the relationship head and exact-round-trip checkpoints."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from ..errors import ConfigError, FormatError


@dataclass(frozen=True)
class Dims:
    """Feature dimensions and vocabulary sizes the head is built for."""

    d: int  # ingested visual feature dimension
    r: int  # spatial / geometric projection dimension
    e: int  # word embedding dimension
    n_object_labels: int
    n_predicate_labels: int

    def __post_init__(self):
        for name in ("d", "r", "e", "n_object_labels", "n_predicate_labels"):
            if getattr(self, name) < 1:
                raise ConfigError(f"dimension {name} must be >= 1")

    @property
    def dpr(self) -> int:
        return self.d + self.r


def tensor_shapes(dims: Dims) -> Dict[str, Tuple[int, ...]]:
    dpr = dims.dpr
    return {
        "W_spat": (4, dims.r), "b_spat": (dims.r,),
        "W_att_obj": (2 * dpr, dpr),
        "W_o": (dpr, dims.n_object_labels), "b_o": (dims.n_object_labels,),
        "W_geo": (4, dims.r), "b_geo": (dims.r,),
        "W_txt": (dims.e, dpr), "b_txt": (dpr,),
        "W_att_txt": (2 * dpr, dpr),
        "W_so": (2 * dpr, dpr),
        "W_att_so": (2 * dpr, dpr),
        "W_r": (dpr, dims.n_predicate_labels), "b_r": (dims.n_predicate_labels,),
        "W_re": (dpr, dims.e), "b_re": (dims.e,),
    }


@dataclass
class ModelParams:
    """All learned tensors plus the three loss weights."""

    dims: Dims
    tensors: Dict[str, np.ndarray]
    lambdas: Tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        expected = tensor_shapes(self.dims)
        if set(self.tensors) != set(expected):
            missing = set(expected) - set(self.tensors)
            extra = set(self.tensors) - set(expected)
            raise ConfigError(f"tensor set mismatch: missing={missing} extra={extra}")
        for name, shape in expected.items():
            if self.tensors[name].shape != shape:
                raise ConfigError(
                    f"{name}: shape {self.tensors[name].shape}, expected {shape}")
            if not np.all(np.isfinite(self.tensors[name])):
                raise ConfigError(f"{name}: non-finite entries")
        if any(l < 0 for l in self.lambdas):
            raise ConfigError("loss weights must be >= 0")

    def copy(self) -> "ModelParams":
        return ModelParams(self.dims,
                           {k: v.copy() for k, v in self.tensors.items()},
                           self.lambdas)

    def zero_like(self) -> Dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.tensors.items()}


def init_params(dims: Dims, seed: int, scale: float = 0.1,
                lambdas: Tuple[float, float, float] = (1.0, 1.0, 1.0)
                ) -> ModelParams:
    """Seeded Gaussian weights, zero biases."""
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape in tensor_shapes(dims).items():
        if name.startswith("b_"):
            tensors[name] = np.zeros(shape, dtype=np.float64)
        else:
            tensors[name] = rng.normal(0.0, scale, size=shape)
    return ModelParams(dims, tensors, lambdas)


# ---------------------------------------------------------------------------
# Checkpoint: plain text, one tensor per block. Values are written with
# repr(), which round-trips IEEE doubles exactly, so save->load is
# bit-identical and reruns produce byte-identical files.
# ---------------------------------------------------------------------------

_MAGIC = "RELKIT-CKPT 1"


def save_params(params: ModelParams, path) -> None:
    d = params.dims
    with open(path, "w") as fh:
        fh.write(_MAGIC + "\n")
        fh.write(f"dims {d.d} {d.r} {d.e} {d.n_object_labels} {d.n_predicate_labels}\n")
        fh.write("lambdas " + " ".join(repr(float(l)) for l in params.lambdas) + "\n")
        for name in sorted(params.tensors):
            arr = params.tensors[name]
            fh.write(f"tensor {name} " + " ".join(str(s) for s in arr.shape) + "\n")
            for v in arr.ravel():
                fh.write(repr(float(v)) + "\n")


def load_params(path) -> ModelParams:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != _MAGIC:
        raise FormatError(f"{path}: not a relkit checkpoint")
    try:
        dims = Dims(*(int(v) for v in lines[1].split()[1:]))
        lambdas = tuple(float(v) for v in lines[2].split()[1:])
        if len(lambdas) != 3:
            raise ValueError("need three loss weights")
    except (IndexError, ValueError, TypeError) as exc:
        raise FormatError(f"{path}: bad checkpoint header: {exc}") from exc
    tensors: Dict[str, np.ndarray] = {}
    i = 3
    while i < len(lines):
        parts = lines[i].split()
        if not parts:
            i += 1
            continue
        if parts[0] != "tensor":
            raise FormatError(f"{path}:{i + 1}: expected tensor block")
        name = parts[1]
        shape = tuple(int(s) for s in parts[2:])
        size = int(np.prod(shape))
        block = lines[i + 1:i + 1 + size]
        if len(block) != size:
            raise FormatError(f"{path}: truncated tensor {name}")
        try:
            values = np.array([float(v) for v in block], dtype=np.float64)
        except ValueError as exc:
            raise FormatError(f"{path}: bad value in tensor {name}") from exc
        tensors[name] = values.reshape(shape)
        i += 1 + size
    try:
        return ModelParams(dims, tensors, lambdas)
    except ConfigError as exc:
        raise FormatError(f"{path}: {exc}") from exc
