"""Training: sliding windows, cross-entropy, BPTT, RMSprop."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .model import ForwardTrace, Gradients, NetworkParams, forward, forward_batch
from .model import _gru_backward as _gru_backward_layer

log = logging.getLogger(__name__)

__all__ = [
    "TrainingConfig",
    "WindowSample",
    "RmspropState",
    "EpochLog",
    "make_windows",
    "window_count",
    "cross_entropy_loss",
    "backward",
    "rmsprop_step",
    "NonFiniteGradientError",
    "grad_check",
    "Trainer",
    "train",
    "evaluate_accuracy",
    "epoch_permutation",
]

PROB_FLOOR = 1e-30


@dataclass(frozen=True)
class TrainingConfig:
    eta: float = 0.001
    epsilon: float = 1e-8
    epochs: int = 1
    stride: int = 1
    batch: int = 1
    seed: int = 0

    def __post_init__(self):
        if not self.eta >= 0:
            raise ValueError("eta must be >= 0")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if self.stride < 1 or self.batch < 1 or self.epochs < 0:
            raise ValueError("stride and batch must be >= 1, epochs >= 0")


@dataclass(frozen=True)
class WindowSample:
    context: bytes
    tags: tuple  # tag ids aligned with context; None entries are not allowed
    target: int


def window_count(length: int, window: int, stride: int) -> int:
    if length < window + 1:
        return 0
    return (length - window - 1) // stride + 1


def make_windows(text: bytes, tags: Sequence[int], window: int = 40, stride: int = 1) -> list[WindowSample]:
    """Context ``text[i*stride : i*stride + window]``, target the next byte."""
    text = bytes(text)
    if len(tags) != len(text):
        raise ValueError(f"{len(tags)} tags for {len(text)} bytes")
    if len(text) < window + 1:
        raise ValueError(f"text of {len(text)} bytes is shorter than window + 1 = {window + 1}")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    tags = tuple(int(t) for t in tags)
    out = []
    for k in range(window_count(len(text), window, stride)):
        i = k * stride
        out.append(WindowSample(text[i : i + window], tags[i : i + window], text[i + window]))
    return out


def cross_entropy_loss(pmf, target: int) -> float:
    """Half the cross-entropy against a one-hot target, natural log."""
    p = float(pmf[target])
    if p <= 0.0:
        log.warning("pmf[%d] == 0, clamped to %g", target, PROB_FLOOR)
        p = PROB_FLOOR
    return -0.5 * math.log(p)


def backward(params: NetworkParams, trace: ForwardTrace, target: int, out: Gradients | None = None) -> Gradients:
    """Gradient of ``cross_entropy_loss`` w.r.t. every weight.

    ``out`` (if given) is accumulated into rather than overwritten.
    """
    if trace is None:
        raise ValueError("backward needs the trace of a train-mode forward pass")
    g = params.zeros_like() if out is None else out

    # output layers: d(0.5 * -ln softmax) / d logits = 0.5 (pmf - onehot)
    d2 = 0.5 * trace.pmf
    d2[target] -= 0.5
    g.dense2.w += np.outer(trace.dense1_out, d2)
    g.dense2.theta += d2
    d1 = (params.dense2.w @ d2) * (trace.dense1_pre > 0.0)
    g.dense1.w += np.outer(trace.merged.h[-1], d1)
    g.dense1.theta += d1
    d_last = params.dense1.w @ d1

    mg = params.merged_gru
    dA, g_urz, g_uh = _gru_backward_layer(trace.merged, mg, None, d_last)
    g.merged_gru.w_in += trace.merged_in.T @ dA
    g.merged_gru.u_rz += g_urz
    g.merged_gru.u_h += g_uh
    g.merged_gru.b += dA.sum(axis=0)
    d_merged_in = dA @ mg.w_in.T

    n_c = params.config.char_gru_units
    d_char = d_merged_in[:, :n_c] * trace.keep_char
    d_pos = d_merged_in[:, n_c:] * trace.keep_pos

    cg = params.char_gru
    dA, g_urz, g_uh = _gru_backward_layer(trace.char, cg, d_char, None)
    _scatter_rows(g.char_gru.w_in, trace.chars, dA)
    g.char_gru.u_rz += g_urz
    g.char_gru.u_h += g_uh
    g.char_gru.b += dA.sum(axis=0)

    pg = params.pos_gru
    dA, g_urz, g_uh = _gru_backward_layer(trace.pos, pg, d_pos, None)
    if trace.tags is not None:
        _scatter_rows(g.pos_gru.w_in, trace.tags, dA)
    g.pos_gru.u_rz += g_urz
    g.pos_gru.u_h += g_uh
    g.pos_gru.b += dA.sum(axis=0)
    return g


def _scatter_rows(dst, rows, src):
    """``dst[rows] += src`` with repeated rows accumulating."""
    if dst.dtype == np.float64 and src.dtype == np.float64:
        _kernels.scatter_add_rows(dst, rows, src)
    else:
        np.add.at(dst, rows, src)


@dataclass
class RmspropState:
    mean_sq: np.ndarray
    _scratch: np.ndarray | None = field(default=None, repr=False, compare=False)

    def scratch(self) -> np.ndarray:
        if self._scratch is None or self._scratch.shape != self.mean_sq.shape:
            self._scratch = np.empty_like(self.mean_sq)
        return self._scratch

    @classmethod
    def zeros(cls, params: NetworkParams) -> "RmspropState":
        return cls(np.zeros_like(params.flat))


class NonFiniteGradientError(FloatingPointError):
    pass


def _first_bad_path(grads: Gradients) -> str:
    for path, arr in grads.named_arrays():
        if not np.all(np.isfinite(arr)):
            return path
    return "?"


def rmsprop_step(
    params: NetworkParams, grads: Gradients, state: RmspropState, cfg: TrainingConfig
) -> tuple[NetworkParams, RmspropState]:
    """In-place RMSprop update; returns the (same) params and state objects.

    E <- 0.9 E + 0.1 g^2 ;  w <- w - eta / (sqrt(E) + eps) * g
    """
    _rmsprop(params, grads, state, cfg, clear=False)
    return params, state


def _rmsprop(params, grads, state, cfg, clear):
    g = grads.flat
    if g.shape != params.flat.shape or state.mean_sq.shape != g.shape:
        raise ValueError("gradient / state shape mismatch")
    # the kernel refuses when the sum of g is not finite; a finite sum implies
    # finite entries, so only then is a full scan needed
    if params.flat.dtype == np.float64 and g.dtype == np.float64:
        if _kernels.rmsprop(params.flat, g, state.mean_sq, cfg.eta, cfg.epsilon, clear):
            return
        finite_sum = False
    else:
        finite_sum = np.isfinite(g.sum())
    if not finite_sum and not np.all(np.isfinite(g)):
        raise NonFiniteGradientError(f"non-finite gradient in {_first_bad_path(grads)}")
    ms = state.mean_sq
    tmp = state.scratch()
    ms *= 0.9
    np.multiply(g, g, out=tmp)
    tmp *= 0.1
    ms += tmp
    np.sqrt(ms, out=tmp)
    tmp += cfg.epsilon
    np.divide(g, tmp, out=tmp)
    tmp *= cfg.eta
    params.flat -= tmp
    if clear:
        g[:] = 0.0


def sample_loss(params: NetworkParams, sample: WindowSample, use_tags: bool = True) -> float:
    pmf = forward(params, sample.context, sample.tags if use_tags else None)
    return cross_entropy_loss(pmf, sample.target)


def grad_check(
    params: NetworkParams,
    sample: WindowSample,
    h: float = 1e-5,
    *,
    use_tags: bool = True,
    backward_fn: Callable = backward,
    indices=None,
    fd_dtype=np.longdouble,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Dropout is disabled. ``indices`` restricts the check to a subset of
    flat parameter positions (default: all of them).

    The perturbed losses are evaluated in ``fd_dtype`` (extended precision by
    default): in float64 the difference quotient carries roughly
    ``eps * loss / h ~ 3e-11`` of rounding noise, which swamps gradients of
    order 1e-8 that small networks routinely have.
    """
    tags = sample.tags if use_tags else None
    _, trace = forward(params, sample.context, tags, mode="train", rho=0.0)
    analytic = backward_fn(params, trace, sample.target).flat
    work = NetworkParams(params.config, params.flat.astype(fd_dtype))
    flat = work.flat
    idx = range(flat.size) if indices is None else indices
    target = sample.target
    worst = 0.0
    for i in idx:
        w0 = flat[i]
        flat[i] = w0 + h
        up = np.log(forward(work, sample.context, tags)[target])
        flat[i] = w0 - h
        down = np.log(forward(work, sample.context, tags)[target])
        flat[i] = w0
        numeric = float(-0.5 * (up - down) / (2 * fd_dtype(h)))
        a = analytic[i]
        err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
        worst = max(worst, err)
    return worst


def epoch_permutation(seed: int, epoch: int, n: int) -> np.ndarray:
    """Sample order used by ``Trainer`` for a given epoch (0-based)."""
    return np.random.default_rng([seed, epoch, 1]).permutation(n)


@dataclass
class EpochLog:
    epoch: int
    loss: float
    accuracy: float
    seconds: float

    def line(self) -> str:
        return f"{self.epoch}\t{self.loss:.6f}\t{self.accuracy:.6f}\t{self.seconds:.3f}"


class Trainer:
    """Stateful training loop (params, RMSprop accumulators, dropout rng).

    ``run_epoch`` can be called repeatedly; ``train`` is the one-shot wrapper.
    """

    def __init__(self, params: NetworkParams, cfg: TrainingConfig, *, use_tags: bool = True, shuffle: bool = True):
        self.params = params
        self.cfg = cfg
        self.use_tags = use_tags
        self.shuffle = shuffle
        self.state = RmspropState.zeros(params)
        self.dropout_rng = np.random.default_rng([cfg.seed, 0, 2])
        self.epoch = 0
        self.history: list[EpochLog] = []

    def run_epoch(self, dataset: Sequence[WindowSample]) -> EpochLog:
        if not dataset:
            raise ValueError("empty dataset")
        start = time.perf_counter()
        params, cfg = self.params, self.cfg
        order = epoch_permutation(cfg.seed, self.epoch, len(dataset)) if self.shuffle else range(len(dataset))
        grads = params.zeros_like()
        total_loss = 0.0
        hits = 0
        pending = 0
        for k in order:
            s = dataset[k]
            pmf, trace = forward(params, s.context, s.tags if self.use_tags else None, "train", self.dropout_rng)
            total_loss += cross_entropy_loss(pmf, s.target)
            hits += int(np.argmax(pmf)) == s.target
            backward(params, trace, s.target, out=grads)
            pending += 1
            if pending == cfg.batch:
                self._apply(grads, pending)
                pending = 0
        if pending:
            self._apply(grads, pending)
        self.epoch += 1
        entry = EpochLog(self.epoch, total_loss / len(dataset), hits / len(dataset), time.perf_counter() - start)
        self.history.append(entry)
        log.info("epoch %s", entry.line())
        return entry

    def _apply(self, grads: Gradients, count: int):
        if count > 1:
            grads.flat /= count
        _rmsprop(self.params, grads, self.state, self.cfg, clear=True)


def train(
    params: NetworkParams,
    dataset: Sequence[WindowSample],
    cfg: TrainingConfig,
    *,
    use_tags: bool = True,
    on_epoch: Callable[[EpochLog], None] | None = None,
) -> tuple[NetworkParams, list[EpochLog]]:
    """Train a copy of ``params`` for ``cfg.epochs`` epochs."""
    if not dataset:
        raise ValueError("empty dataset")
    trainer = Trainer(params.copy(), cfg, use_tags=use_tags)
    for _ in range(cfg.epochs):
        entry = trainer.run_epoch(dataset)
        if on_epoch is not None:
            on_epoch(entry)
    return trainer.params, trainer.history


def evaluate_accuracy(params: NetworkParams, dataset: Sequence[WindowSample], *, use_tags: bool = True) -> float:
    """Fraction of samples whose most probable byte is the target."""
    if not dataset:
        return 0.0
    pmfs = forward_batch(params, [s.context for s in dataset], [s.tags for s in dataset] if use_tags else None)
    targets = np.fromiter((s.target for s in dataset), dtype=np.intp, count=len(dataset))
    return float(np.mean(pmfs.argmax(axis=1) == targets))
