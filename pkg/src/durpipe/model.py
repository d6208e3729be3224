"""Dual-head duration predictor over a pluggable token encoder.

Both heads read the sum of the masked-token embeddings: the exact head
is a bias-free linear regression to a log-second value, the range head a
bias-free linear layer plus softmax over the unit inventory. The bundled
BaselineEncoder is a deterministic hashed embedding table averaged over
a context window around each mask position; anything exposing the same
small surface can stand in for it.

Training is minibatch gradient descent with adaptive per-parameter
moments and a linear-warmup-then-constant schedule. All randomness flows
from the config seed, so runs are bit-reproducible.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import struct
from dataclasses import dataclass, replace
from typing import Iterable, Protocol, Sequence

import numpy as np

from .adapters import ModelInput
from .text import strip_clinging, tokenize
from .units import UNITS_8, TemporalUnit, UnitInventory

logger = logging.getLogger(__name__)

__all__ = [
    "Encoder",
    "BaselineEncoder",
    "DualHeadModel",
    "TrainConfig",
    "InvalidInputError",
    "ConfigError",
    "CheckpointError",
    "predict_exact",
    "predict_range",
    "train",
    "loss_and_grads",
    "evaluate_loss",
    "save",
    "load",
    "with_inventory",
]

CHECKPOINT_MAGIC = b"DURCKPT\n"
CHECKPOINT_VERSION = 1


class InvalidInputError(ValueError):
    """Raised for inputs that cannot be encoded (no mask positions, bad indices)."""


class ConfigError(ValueError):
    """Raised when training configuration and data disagree."""


class CheckpointError(ValueError):
    """Raised when checkpoint bytes cannot be loaded."""


class Encoder(Protocol):
    dim: int

    def encode(self, tokens: Sequence[str], mask_positions: Sequence[int]) -> list[np.ndarray]:
        """One vector of length `dim` per mask position."""
        ...


class BaselineEncoder:
    """Hashed-bucket token embeddings averaged over a context window.

    Tokens are canonicalized (clinging punctuation stripped, lowercased)
    and hashed into a fixed number of buckets, so there is no vocabulary
    to build. The vector for a mask position is the mean embedding of
    the tokens within `radius` positions of it, the mask token included.
    """

    def __init__(self, dim: int = 32, buckets: int = 4096, radius: int = 5,
                 seed: int = 0, embeddings: np.ndarray | None = None):
        if dim < 1 or buckets < 1 or radius < 0:
            raise ConfigError(f"bad encoder shape: dim={dim} buckets={buckets} radius={radius}")
        self.dim = dim
        self.buckets = buckets
        self.radius = radius
        self.seed = seed
        if embeddings is None:
            rng = np.random.default_rng(seed)
            embeddings = rng.uniform(-0.05, 0.05, size=(buckets, dim))
        self.embeddings = np.asarray(embeddings, dtype=np.float64)
        if self.embeddings.shape != (buckets, dim):
            raise ConfigError(f"embedding table shape {self.embeddings.shape} != ({buckets}, {dim})")

    def bucket(self, token: str) -> int:
        canonical = strip_clinging(token).lower()
        digest = hashlib.blake2b(canonical.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "big") % self.buckets

    def window_buckets(self, tokens: Sequence[str], position: int) -> np.ndarray:
        lo = max(0, position - self.radius)
        hi = min(len(tokens), position + self.radius + 1)
        return np.array([self.bucket(tokens[q]) for q in range(lo, hi)], dtype=np.intp)

    def encode(self, tokens: Sequence[str], mask_positions: Sequence[int]) -> list[np.ndarray]:
        out = []
        for p in mask_positions:
            if not 0 <= p < len(tokens):
                raise InvalidInputError(f"mask position {p} outside token range 0..{len(tokens) - 1}")
            rows = self.window_buckets(tokens, p)
            out.append(self.embeddings[rows].mean(axis=0))
        return out

    def clone(self) -> "BaselineEncoder":
        return BaselineEncoder(self.dim, self.buckets, self.radius, self.seed,
                               embeddings=self.embeddings.copy())


@dataclass
class DualHeadModel:
    encoder: BaselineEncoder
    w_e: np.ndarray  # (dim,)
    w_r: np.ndarray  # (|inventory|, dim)
    inventory: tuple[TemporalUnit, ...]
    seed: int = 0

    @classmethod
    def create(cls, dim: int = 32, inventory: UnitInventory = UNITS_8, seed: int = 0,
               buckets: int = 4096, radius: int = 5) -> "DualHeadModel":
        """Fresh model with all parameters uniform in [-0.05, 0.05]."""
        inventory = tuple(inventory)
        if not inventory:
            raise ConfigError("inventory must be nonempty")
        rng = np.random.default_rng(seed)
        encoder = BaselineEncoder(
            dim=dim, buckets=buckets, radius=radius, seed=seed,
            embeddings=rng.uniform(-0.05, 0.05, size=(buckets, dim)),
        )
        w_e = rng.uniform(-0.05, 0.05, size=dim)
        w_r = rng.uniform(-0.05, 0.05, size=(len(inventory), dim))
        return cls(encoder=encoder, w_e=w_e, w_r=w_r, inventory=inventory, seed=seed)

    @property
    def dim(self) -> int:
        return self.encoder.dim

    def clone(self) -> "DualHeadModel":
        return DualHeadModel(
            encoder=self.encoder.clone(),
            w_e=self.w_e.copy(),
            w_r=self.w_r.copy(),
            inventory=self.inventory,
            seed=self.seed,
        )


def _masked_sum(model: DualHeadModel, model_input: ModelInput) -> np.ndarray:
    if not model_input.mask_positions:
        raise InvalidInputError("input has no mask positions")
    vectors = model.encoder.encode(tokenize(model_input.text), model_input.mask_positions)
    return np.sum(vectors, axis=0)


def predict_exact(model: DualHeadModel, model_input: ModelInput) -> float:
    """Exact-value head: dot product of the regression weights with the
    summed mask embeddings, in log-seconds."""
    return float(model.w_e @ _masked_sum(model, model_input))


def predict_range(model: DualHeadModel, model_input: ModelInput) -> tuple[TemporalUnit, np.ndarray]:
    """Range head: softmax over the inventory; ties go to the smaller unit."""
    probs = _softmax(model.w_r @ _masked_sum(model, model_input))
    return model.inventory[int(np.argmax(probs))], probs


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - np.max(z)
    e = np.exp(shifted)
    return e / e.sum()


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings. The bare defaults are the pre-training ones."""

    learning_rate: float = 5e-5
    batch_size: int = 16
    warmup_proportion: float = 0.1
    epochs: int = 1
    seed: int = 0
    loss: str = "mse"  # "mse" for the exact head, "cross_entropy" for the range head

    def __post_init__(self) -> None:
        if self.loss not in ("mse", "cross_entropy"):
            raise ConfigError(f"loss must be 'mse' or 'cross_entropy', got {self.loss!r}")
        if not 0.0 <= self.warmup_proportion <= 1.0:
            raise ConfigError(f"warmup_proportion must be in [0, 1], got {self.warmup_proportion}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate < 0:
            raise ConfigError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")

    @classmethod
    def pretraining(cls, **overrides) -> "TrainConfig":
        return cls(**{"learning_rate": 5e-5, "batch_size": 16, "epochs": 1, **overrides})

    @classmethod
    def finetuning(cls, **overrides) -> "TrainConfig":
        return cls(**{"learning_rate": 2e-5, "batch_size": 32, "epochs": 3, **overrides})


def _check_labels(model: DualHeadModel, data: Sequence[tuple[ModelInput, object]], loss: str) -> None:
    for i, (_, label) in enumerate(data):
        if loss == "mse":
            if isinstance(label, TemporalUnit) or not isinstance(label, (int, float)):
                raise ConfigError(f"mse loss needs numeric labels; item {i} has {type(label).__name__}")
        else:
            if not isinstance(label, TemporalUnit):
                raise ConfigError(
                    f"cross_entropy loss needs TemporalUnit labels; item {i} has {type(label).__name__}"
                )
            if label not in model.inventory:
                raise ConfigError(f"label {label.word} outside the model inventory")


def loss_and_grads(
    model: DualHeadModel,
    batch: Sequence[tuple[ModelInput, object]],
    loss: str,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean batch loss and its analytic gradients.

    Returns gradients for the active head ("w_e" for mse, "w_r" for
    cross_entropy) and for the full encoder embedding table
    ("embeddings", dense (buckets, dim)).
    """
    encoder = model.encoder
    d_emb = np.zeros_like(encoder.embeddings)
    d_we = np.zeros_like(model.w_e)
    d_wr = np.zeros_like(model.w_r)
    total = 0.0
    n = len(batch)
    for model_input, label in batch:
        tokens = tokenize(model_input.text)
        if not model_input.mask_positions:
            raise InvalidInputError("input has no mask positions")
        windows = [encoder.window_buckets(tokens, p) for p in model_input.mask_positions]
        xs = [encoder.embeddings[rows].mean(axis=0) for rows in windows]
        s = np.sum(xs, axis=0)
        if loss == "mse":
            err = float(model.w_e @ s) - float(label)
            total += err * err
            dv = 2.0 * err / n
            d_we += dv * s
            ds = dv * model.w_e
        else:
            probs = _softmax(model.w_r @ s)
            target = model.inventory.index(label)
            total += -math.log(max(probs[target], 1e-300))
            dz = probs.copy()
            dz[target] -= 1.0
            dz /= n
            d_wr += np.outer(dz, s)
            ds = model.w_r.T @ dz
        for rows in windows:
            np.add.at(d_emb, rows, ds / len(rows))
    grads = {"embeddings": d_emb}
    if loss == "mse":
        grads["w_e"] = d_we
    else:
        grads["w_r"] = d_wr
    return total / n, grads


def evaluate_loss(model: DualHeadModel, data: Sequence[tuple[ModelInput, object]], loss: str) -> float:
    """Mean loss over `data` without touching any parameter."""
    if not data:
        raise ConfigError("cannot evaluate loss on empty data")
    _check_labels(model, data, loss)
    total = 0.0
    for model_input, label in data:
        s = _masked_sum(model, model_input)
        if loss == "mse":
            err = float(model.w_e @ s) - float(label)
            total += err * err
        else:
            probs = _softmax(model.w_r @ s)
            total += -math.log(max(probs[model.inventory.index(label)], 1e-300))
    return total / len(data)


class _Adam:
    """Adaptive-moment updates; the learning rate is supplied per step."""

    def __init__(self, shapes: dict[str, tuple[int, ...]],
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = {k: np.zeros(s) for k, s in shapes.items()}
        self.v = {k: np.zeros(s) for k, s in shapes.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray], lr: float) -> None:
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for key, grad in grads.items():
            m = self.m[key]
            v = self.v[key]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            params[key] -= lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)


def _warmup_lr(base: float, step: int, warmup_steps: int) -> float:
    # 1-based step; linear ramp to the base rate, then constant.
    if warmup_steps <= 0:
        return base
    return base * min(1.0, step / warmup_steps)


def train(
    model: DualHeadModel,
    data: Iterable[tuple[ModelInput, object]],
    cfg: TrainConfig,
) -> tuple[DualHeadModel, list[float]]:
    """Train the head selected by cfg.loss (plus the encoder) in place.

    Labels must be log-second floats for "mse" and TemporalUnit members
    of the model inventory for "cross_entropy". Returns the model and the
    per-step loss curve. Empty data is a warned no-op.
    """
    data = list(data)
    if not data:
        logger.warning("train called with no data; model left unchanged")
        return model, []
    _check_labels(model, data, cfg.loss)

    head_key = "w_e" if cfg.loss == "mse" else "w_r"
    params = {
        "embeddings": model.encoder.embeddings,
        "w_e": model.w_e,
        "w_r": model.w_r,
    }
    optimizer = _Adam({k: params[k].shape for k in ("embeddings", head_key)})

    n = len(data)
    steps_per_epoch = math.ceil(n / cfg.batch_size)
    total_steps = steps_per_epoch * cfg.epochs
    warmup_steps = math.ceil(cfg.warmup_proportion * total_steps)

    rng = np.random.default_rng(cfg.seed)
    curve: list[float] = []
    step = 0
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = [data[i] for i in order[start:start + cfg.batch_size]]
            loss, grads = loss_and_grads(model, batch, cfg.loss)
            step += 1
            lr = _warmup_lr(cfg.learning_rate, step, warmup_steps)
            optimizer.step(params, grads, lr)
            curve.append(loss)
    return model, curve


def with_inventory(model: DualHeadModel, inventory: UnitInventory) -> DualHeadModel:
    """Adapt a model to a prefix inventory by slicing the range head.

    Shrinking (8 units to 7) keeps the leading rows; growing is an error
    because the extra rows would be untrained.
    """
    inventory = tuple(inventory)
    if inventory == model.inventory:
        return model
    if len(inventory) > len(model.inventory):
        raise ConfigError(
            f"cannot grow inventory from {len(model.inventory)} to {len(inventory)} units"
        )
    if inventory != model.inventory[: len(inventory)]:
        raise ConfigError("target inventory is not a prefix of the model inventory")
    return replace(model, w_r=model.w_r[: len(inventory)].copy(), inventory=inventory)


def save(model: DualHeadModel) -> bytes:
    """Serialize to a deterministic, self-describing byte container."""
    header = {
        "version": CHECKPOINT_VERSION,
        "dim": model.dim,
        "buckets": model.encoder.buckets,
        "radius": model.encoder.radius,
        "seed": model.seed,
        "inventory": [u.word for u in model.inventory],
        "dtype": "<f8",
        "arrays": [
            {"name": "embeddings", "shape": list(model.encoder.embeddings.shape)},
            {"name": "w_e", "shape": list(model.w_e.shape)},
            {"name": "w_r", "shape": list(model.w_r.shape)},
        ],
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = b"".join(
        np.ascontiguousarray(arr, dtype="<f8").tobytes()
        for arr in (model.encoder.embeddings, model.w_e, model.w_r)
    )
    return CHECKPOINT_MAGIC + struct.pack(">II", CHECKPOINT_VERSION, len(header_bytes)) + header_bytes + payload


def load(blob: bytes) -> DualHeadModel:
    """Inverse of save(); raises CheckpointError on damage or version skew."""
    fixed = len(CHECKPOINT_MAGIC) + 8
    if len(blob) < fixed or not blob.startswith(CHECKPOINT_MAGIC):
        raise CheckpointError("not a model checkpoint (bad magic)")
    version, header_len = struct.unpack(">II", blob[len(CHECKPOINT_MAGIC):fixed])
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint version {version} (supported: {CHECKPOINT_VERSION})"
        )
    if len(blob) < fixed + header_len:
        raise CheckpointError("truncated checkpoint (incomplete header)")
    try:
        header = json.loads(blob[fixed:fixed + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"corrupt checkpoint header: {exc}") from exc
    try:
        inventory = tuple(TemporalUnit.from_string(w) for w in header["inventory"])
        specs = [(a["name"], tuple(a["shape"])) for a in header["arrays"]]
        dim, buckets, radius, seed = (header[k] for k in ("dim", "buckets", "radius", "seed"))
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"corrupt checkpoint header: {exc}") from exc

    arrays = {}
    offset = fixed + header_len
    for name, shape in specs:
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        if len(blob) < offset + nbytes:
            raise CheckpointError(f"truncated checkpoint (array {name})")
        arrays[name] = np.frombuffer(blob, dtype="<f8", count=count, offset=offset).reshape(shape).copy()
        offset += nbytes
    if offset != len(blob):
        raise CheckpointError("trailing bytes after checkpoint payload")
    try:
        encoder = BaselineEncoder(dim=dim, buckets=buckets, radius=radius, seed=seed,
                                  embeddings=arrays["embeddings"])
        return DualHeadModel(encoder=encoder, w_e=arrays["w_e"], w_r=arrays["w_r"],
                             inventory=inventory, seed=seed)
    except (ConfigError, KeyError) as exc:
        raise CheckpointError(f"inconsistent checkpoint contents: {exc}") from exc
