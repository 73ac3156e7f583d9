"""Tiny trainable encoder-decoder translation model with exact gradients.

Single-layer attention architecture over word-level vocabularies, all in
64-bit floats so finite-difference gradient checks are tight:

    H      = tanh((Esrc[src] + Psrc) We + be)          encoder states
    Q      = tanh((Etgt[tgt_in] + Ptgt) Wd + bd)       decoder queries
    alpha  = softmax(Q H^T / sqrt(h))                  attention (src pads masked)
    Z      = tanh([Q; alpha H] Wc + bc)
    probs  = softmax(Z Wo + bo)

Training is plain teacher-forced mini-batch SGD with AdamW (decoupled weight
decay), deterministic for a fixed seed and single-threaded execution. The
backward pass is written out by hand and checked against central finite
differences in the test suite.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

PAD, BOS, EOS, UNK = 0, 1, 2, 3
RESERVED = ("<pad>", "<bos>", "<eos>", "<unk>")

INIT_SCALE = 0.08
CHECKPOINT_VERSION = 1

# parameter tensor names in a fixed order (checkpoints, optimizer state)
PARAM_NAMES = ("esrc", "etgt", "psrc", "ptgt", "we", "be", "wd", "bd", "wc", "bc", "wo", "bo")


class ModelError(ValueError):
    """Raised for invalid model inputs or corrupt checkpoints."""


class DivergenceError(RuntimeError):
    """Raised when training hits a non-finite loss or gradient."""

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


@dataclass(frozen=True)
class Vocabulary:
    """Token/index bijection with reserved pad/bos/eos/unk entries."""

    tokens: tuple[str, ...]

    def __post_init__(self):
        if tuple(self.tokens[:4]) != RESERVED:
            raise ModelError(f"first four tokens must be {RESERVED}")
        if len(set(self.tokens)) != len(self.tokens):
            raise ModelError("vocabulary tokens must be unique")
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.tokens)})

    @classmethod
    def from_tokens(cls, tokens) -> "Vocabulary":
        seen = sorted(set(tokens) - set(RESERVED))
        return cls(tuple(RESERVED) + tuple(seen))

    def __len__(self) -> int:
        return len(self.tokens)

    def encode(self, words: Sequence[str]) -> list[int]:
        return [self._index.get(w, UNK) for w in words]

    def decode(self, ids: Sequence[int]) -> list[str]:
        return [self.tokens[i] for i in ids if i not in (PAD, BOS, EOS)]


@dataclass(frozen=True)
class ModelConfig:
    embed_dim: int = 24
    hidden_dim: int = 32
    max_len: int = 32

    def __post_init__(self):
        if min(self.embed_dim, self.hidden_dim, self.max_len) < 1:
            raise ValueError("model dimensions must be positive")


@dataclass(frozen=True)
class TrainConfig:
    """Fine-tuning recipe defaults; toy runs override max_steps (and usually lr)."""

    lr: float = 2e-5
    weight_decay: float = 0.01
    batch_size: int = 16
    max_steps: int = 250_000
    second_round_max_steps: int = 500
    seed: int = 0
    temperature: float = 1.0

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError(f"lr must be > 0, got {self.lr}")
        if self.weight_decay < 0:
            raise ValueError(f"weight_decay must be >= 0, got {self.weight_decay}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_steps < 0:
            raise ValueError(f"max_steps must be >= 0, got {self.max_steps}")
        if self.temperature <= 0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")


@dataclass
class OptimizerState:
    """AdamW moment estimates; shapes mirror the parameter dict."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0

    @classmethod
    def for_params(cls, params: dict[str, np.ndarray], **kwargs) -> "OptimizerState":
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
            **kwargs,
        )


def _softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


@dataclass
class ForwardCache:
    """Intermediate activations of one batched forward pass."""

    src: np.ndarray
    tgt_in: np.ndarray
    src_valid: np.ndarray
    xs: np.ndarray
    h: np.ndarray
    xt: np.ndarray
    q: np.ndarray
    alpha: np.ndarray
    context: np.ndarray
    z: np.ndarray
    logits: np.ndarray
    probs: np.ndarray


class StudentModel:
    """The small student translator: parameters plus forward/backward passes."""

    def __init__(
        self,
        src_vocab: Vocabulary,
        tgt_vocab: Vocabulary,
        config: ModelConfig = ModelConfig(),
        seed: int = 0,
    ):
        self.src_vocab = src_vocab
        self.tgt_vocab = tgt_vocab
        self.config = config
        d, h = config.embed_dim, config.hidden_dim
        rng = np.random.default_rng(seed)

        def init(*shape):
            return rng.uniform(-INIT_SCALE, INIT_SCALE, size=shape)

        self.params: dict[str, np.ndarray] = {
            "esrc": init(len(src_vocab), d),
            "etgt": init(len(tgt_vocab), d),
            "psrc": init(config.max_len, d),
            "ptgt": init(config.max_len, d),
            "we": init(d, h),
            "be": np.zeros(h),
            "wd": init(d, h),
            "bd": np.zeros(h),
            "wc": init(2 * h, h),
            "bc": np.zeros(h),
            "wo": init(h, len(tgt_vocab)),
            "bo": np.zeros(len(tgt_vocab)),
        }

    # -- forward / backward --------------------------------------------------

    def _check_indices(self, ids: np.ndarray, vocab: Vocabulary, what: str) -> None:
        if ids.size and (ids.min() < 0 or ids.max() >= len(vocab)):
            raise ModelError(f"{what} index out of range [0, {len(vocab)})")

    def forward_batch(self, src: np.ndarray, tgt_in: np.ndarray) -> ForwardCache:
        """Batched teacher-forced forward pass; src/tgt_in are [B,S] and [B,T]."""
        src = np.asarray(src, dtype=np.int64)
        tgt_in = np.asarray(tgt_in, dtype=np.int64)
        self._check_indices(src, self.src_vocab, "source")
        self._check_indices(tgt_in, self.tgt_vocab, "target")
        s_len, t_len = src.shape[1], tgt_in.shape[1]
        if s_len > self.config.max_len or t_len > self.config.max_len:
            raise ModelError(f"sequence longer than max_len={self.config.max_len}")
        p = self.params
        hdim = self.config.hidden_dim

        src_valid = src != PAD
        xs = p["esrc"][src] + p["psrc"][:s_len]
        h = np.tanh(xs @ p["we"] + p["be"])
        xt = p["etgt"][tgt_in] + p["ptgt"][:t_len]
        q = np.tanh(xt @ p["wd"] + p["bd"])

        scores = np.einsum("bth,bsh->bts", q, h) / math.sqrt(hdim)
        scores = np.where(src_valid[:, None, :], scores, -1e9)
        alpha = _softmax(scores, axis=-1)
        context = np.einsum("bts,bsh->bth", alpha, h)

        zin = np.concatenate([q, context], axis=-1)
        z = np.tanh(zin @ p["wc"] + p["bc"])
        logits = z @ p["wo"] + p["bo"]
        probs = _softmax(logits, axis=-1)
        return ForwardCache(src, tgt_in, src_valid, xs, h, xt, q, alpha, context, z, logits, probs)

    def forward(self, src_ids: Sequence[int], tgt_prefix_ids: Sequence[int]) -> np.ndarray:
        """One distribution over the target vocabulary per prefix position."""
        cache = self.forward_batch(
            np.asarray([list(src_ids)]), np.asarray([list(tgt_prefix_ids)])
        )
        return cache.probs[0]

    def backward_batch(self, cache: ForwardCache, dlogits: np.ndarray) -> dict[str, np.ndarray]:
        """Exact gradients for all parameters given d(loss)/d(logits)."""
        p = self.params
        hdim = self.config.hidden_dim
        s_len, t_len = cache.src.shape[1], cache.tgt_in.shape[1]

        grads = {name: np.zeros_like(arr) for name, arr in p.items()}

        grads["wo"] = np.einsum("bth,btv->hv", cache.z, dlogits)
        grads["bo"] = dlogits.sum(axis=(0, 1))
        dz = dlogits @ p["wo"].T
        dzin_pre = dz * (1.0 - cache.z**2)
        zin = np.concatenate([cache.q, cache.context], axis=-1)
        grads["wc"] = np.einsum("btk,bth->kh", zin, dzin_pre)
        grads["bc"] = dzin_pre.sum(axis=(0, 1))
        dzin = dzin_pre @ p["wc"].T
        dq = dzin[:, :, :hdim].copy()
        dcontext = dzin[:, :, hdim:]

        dalpha = np.einsum("bth,bsh->bts", dcontext, cache.h)
        dh = np.einsum("bts,bth->bsh", cache.alpha, dcontext)
        # softmax backward; fully-masked lanes have alpha == 0, so they stay 0
        dscores = cache.alpha * (dalpha - np.sum(dalpha * cache.alpha, axis=-1, keepdims=True))
        dscores /= math.sqrt(hdim)
        dq += np.einsum("bts,bsh->bth", dscores, cache.h)
        dh += np.einsum("bts,bth->bsh", dscores, cache.q)

        dq_pre = dq * (1.0 - cache.q**2)
        grads["wd"] = np.einsum("btd,bth->dh", cache.xt, dq_pre)
        grads["bd"] = dq_pre.sum(axis=(0, 1))
        dxt = dq_pre @ p["wd"].T
        np.add.at(grads["etgt"], cache.tgt_in, dxt)
        grads["ptgt"][:t_len] = dxt.sum(axis=0)

        dh_pre = dh * (1.0 - cache.h**2)
        grads["we"] = np.einsum("bsd,bsh->dh", cache.xs, dh_pre)
        grads["be"] = dh_pre.sum(axis=(0, 1))
        dxs = dh_pre @ p["we"].T
        np.add.at(grads["esrc"], cache.src, dxs)
        grads["psrc"][:s_len] = dxs.sum(axis=0)
        return grads

    # -- persistence -----------------------------------------------------------

    def save(self, path) -> None:
        """Self-describing JSON checkpoint: config, vocabularies, parameters."""
        payload = {
            "format_version": CHECKPOINT_VERSION,
            "config": {
                "embed_dim": self.config.embed_dim,
                "hidden_dim": self.config.hidden_dim,
                "max_len": self.config.max_len,
            },
            "src_vocab": list(self.src_vocab.tokens),
            "tgt_vocab": list(self.tgt_vocab.tokens),
            "params": {
                name: {"shape": list(arr.shape), "data": arr.ravel().tolist()}
                for name, arr in self.params.items()
            },
        }
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, ensure_ascii=False)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "StudentModel":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        if payload.get("format_version") != CHECKPOINT_VERSION:
            raise ModelError(f"unsupported checkpoint version {payload.get('format_version')!r}")
        model = cls.__new__(cls)
        model.src_vocab = Vocabulary(tuple(payload["src_vocab"]))
        model.tgt_vocab = Vocabulary(tuple(payload["tgt_vocab"]))
        model.config = ModelConfig(**payload["config"])
        model.params = {}
        for name in PARAM_NAMES:
            entry = payload["params"][name]
            arr = np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])
            model.params[name] = arr
        return model


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------


def cross_entropy_loss(probs: np.ndarray, gold: np.ndarray, mask: np.ndarray) -> float:
    """Mean of -log p(gold) over unmasked positions.

    probs is [..., V] row-stochastic, gold and mask broadcast over the leading
    axes; mask truthy marks positions that count.
    """
    probs = np.asarray(probs)
    gold = np.asarray(gold)
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ModelError("all positions are padded")
    picked = np.take_along_axis(probs, gold[..., None], axis=-1)[..., 0]
    return float(-np.log(picked[mask]).sum() / mask.sum())


def temperature_scale(dist: np.ndarray, temperature: float) -> np.ndarray:
    """Sharpen/flatten a distribution: p^(1/T) renormalized. T=1 is the identity."""
    if temperature == 1.0:
        return dist
    powered = np.asarray(dist) ** (1.0 / temperature)
    return powered / powered.sum(axis=-1, keepdims=True)


def _check_row_stochastic(dist: np.ndarray, what: str, tol: float = 1e-4) -> None:
    sums = np.asarray(dist).sum(axis=-1)
    if np.abs(sums - 1.0).max() > tol or np.asarray(dist).min() < -tol:
        raise ModelError(f"{what} rows are not probability distributions")


def soft_target_loss(
    probs: np.ndarray, teacher: np.ndarray, temperature: float, mask: np.ndarray
) -> float:
    """Mean cross-entropy between temperature-scaled teacher and student rows.

    Both inputs are row-stochastic [..., V] arrays; zero-probability teacher
    entries contribute nothing (0 * log 0 := 0).
    """
    if temperature <= 0:
        raise ModelError(f"temperature must be > 0, got {temperature}")
    probs = np.asarray(probs)
    teacher = np.asarray(teacher)
    if probs.shape != teacher.shape:
        raise ModelError(f"shape mismatch: {probs.shape} vs {teacher.shape}")
    _check_row_stochastic(teacher, "teacher")
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ModelError("all positions are padded")

    p_t = temperature_scale(teacher, temperature)[mask]
    q_t = temperature_scale(probs, temperature)[mask]
    support = p_t > 0.0
    with np.errstate(divide="ignore"):
        logs = np.where(support, np.log(np.where(support, q_t, 1.0)), 0.0)
    return float(-(p_t * logs)[support].sum() / mask.sum())


# ---------------------------------------------------------------------------
# Optimizers
# ---------------------------------------------------------------------------


def adamw_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: OptimizerState,
    lr: float,
    weight_decay: float,
) -> None:
    """One AdamW update in place: theta -= lr * (m_hat/(sqrt(v_hat)+eps) + wd*theta)."""
    for name, grad in grads.items():
        if not np.all(np.isfinite(grad)):
            raise DivergenceError(f"non-finite gradient in {name!r}", step=state.t)
    state.t += 1
    bc1 = 1.0 - state.beta1**state.t
    bc2 = 1.0 - state.beta2**state.t
    for name, theta in params.items():
        g = grads[name]
        state.m[name] = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        state.v[name] = state.beta2 * state.v[name] + (1.0 - state.beta2) * g**2
        m_hat = state.m[name] / bc1
        v_hat = state.v[name] / bc2
        theta -= lr * (m_hat / (np.sqrt(v_hat) + state.eps) + weight_decay * theta)
        if not np.all(np.isfinite(theta)):
            raise DivergenceError(f"non-finite parameter {name!r} after update", step=state.t)


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: OptimizerState,
    lr: float,
) -> None:
    """Classic Adam, for the weight-decay-free comparison path."""
    for name, grad in grads.items():
        if not np.all(np.isfinite(grad)):
            raise DivergenceError(f"non-finite gradient in {name!r}", step=state.t)
    state.t += 1
    bc1 = 1.0 - state.beta1**state.t
    bc2 = 1.0 - state.beta2**state.t
    for name, theta in params.items():
        g = grads[name]
        state.m[name] = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        state.v[name] = state.beta2 * state.v[name] + (1.0 - state.beta2) * g**2
        m_hat = state.m[name] / bc1
        v_hat = state.v[name] / bc2
        theta -= lr * (m_hat / (np.sqrt(v_hat) + state.eps))


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


@dataclass
class TrainingPair:
    """One training example: token ids without BOS/EOS, plus optional teacher rows."""

    src: list[int]
    tgt: list[int]
    teacher_dists: Optional[np.ndarray] = None  # [len(tgt)+1, V] including the EOS row


@dataclass
class TrainResult:
    model: StudentModel
    losses: list[float] = field(default_factory=list)
    optimizer_state: Optional[OptimizerState] = None

    def write_loss_curve(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("step,loss\n")
            for step, loss in enumerate(self.losses, start=1):
                fh.write(f"{step},{loss!r}\n")


def _pad_batch(rows: list[list[int]], width: int) -> np.ndarray:
    out = np.full((len(rows), width), PAD, dtype=np.int64)
    for i, row in enumerate(rows):
        out[i, : len(row)] = row
    return out


def _batch_arrays(pairs: list[TrainingPair], want_dists: bool, tgt_vocab_size: int):
    src_rows = [pair.src + [EOS] for pair in pairs]
    tgt_in_rows = [[BOS] + pair.tgt for pair in pairs]
    tgt_out_rows = [pair.tgt + [EOS] for pair in pairs]
    s_width = max(len(r) for r in src_rows)
    t_width = max(len(r) for r in tgt_in_rows)
    src = _pad_batch(src_rows, s_width)
    tgt_in = _pad_batch(tgt_in_rows, t_width)
    tgt_out = _pad_batch(tgt_out_rows, t_width)
    dists = None
    if want_dists:
        # padded rows get a one-hot placeholder at PAD: they are masked out of
        # the loss but still have to pass the row-stochastic validation
        dists = np.zeros((len(pairs), t_width, tgt_vocab_size))
        dists[:, :, PAD] = 1.0
        for i, pair in enumerate(pairs):
            if pair.teacher_dists is None:
                raise ModelError("training pair lacks teacher distributions")
            rows = np.asarray(pair.teacher_dists)
            if rows.shape != (len(pair.tgt) + 1, tgt_vocab_size):
                raise ModelError(
                    f"teacher distributions must be [{len(pair.tgt) + 1}, {tgt_vocab_size}],"
                    f" got {rows.shape}"
                )
            dists[i, : rows.shape[0]] = rows
    return src, tgt_in, tgt_out, dists


def _one_hot(indices: np.ndarray, size: int) -> np.ndarray:
    out = np.zeros(indices.shape + (size,))
    np.put_along_axis(out, indices[..., None], 1.0, axis=-1)
    return out


def train(
    model: StudentModel,
    pairs: Sequence[TrainingPair],
    config: TrainConfig,
    loss: str = "hard",
) -> TrainResult:
    """Teacher-forced mini-batch training, deterministic for a fixed seed.

    loss="hard" uses cross-entropy against the gold targets; loss="soft" uses
    the temperature-scaled teacher distributions carried by the pairs. With
    one-hot teacher rows and temperature 1 the two paths take identical
    floating-point steps.
    """
    if loss not in ("hard", "soft"):
        raise ValueError(f"unknown loss {loss!r}")
    if not pairs:
        raise ModelError("training set is empty")
    pairs = list(pairs)
    rng = np.random.default_rng(config.seed)
    state = OptimizerState.for_params(model.params)
    result = TrainResult(model=model, optimizer_state=state)
    temp = config.temperature if loss == "soft" else 1.0
    vocab_size = len(model.tgt_vocab)

    for step in range(1, config.max_steps + 1):
        chosen = rng.integers(0, len(pairs), size=config.batch_size)
        batch = [pairs[i] for i in chosen]
        src, tgt_in, tgt_out, dists = _batch_arrays(batch, loss == "soft", vocab_size)
        cache = model.forward_batch(src, tgt_in)
        mask = tgt_out != PAD

        target_rows = dists if loss == "soft" else _one_hot(tgt_out, vocab_size)
        loss_value = soft_target_loss(cache.probs, target_rows, temp, mask)
        if not math.isfinite(loss_value):
            raise DivergenceError(f"loss diverged at step {step}", step=step)

        q_t = cache.probs if temp == 1.0 else _softmax(cache.logits / temp, axis=-1)
        dlogits = (q_t - temperature_scale(target_rows, temp)) / (temp * mask.sum())
        dlogits[~mask] = 0.0

        grads = model.backward_batch(cache, dlogits)
        adamw_step(model.params, grads, state, config.lr, config.weight_decay)
        result.losses.append(loss_value)
    return result


def greedy_decode(model: StudentModel, src_ids: Sequence[int], max_len: int) -> list[int]:
    """Argmax decoding until EOS or max_len tokens; ties pick the lowest index."""
    if max_len < 1:
        raise ModelError(f"max_len must be >= 1, got {max_len}")
    src = list(src_ids) + [EOS]
    prefix = [BOS]
    out: list[int] = []
    for _ in range(max_len):
        probs = model.forward(src, prefix)
        nxt = int(np.argmax(probs[-1]))
        if nxt == EOS:
            break
        out.append(nxt)
        prefix.append(nxt)
    return out
