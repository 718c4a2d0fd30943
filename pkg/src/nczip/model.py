"""Dual-input GRU language model.

Layer chain for one window of ``T`` characters::

    chars (T x 256 one-hot) -> GRU_c  -> dropout --+
                                                   +-> concat -> GRU_m (last state)
    tags  (T x 49  one-hot) -> GRU_p  -> dropout --+        -> dense ReLU -> dense softmax

All weights of a network live in one contiguous float64 vector
(``NetworkParams.flat``); every matrix is a view into it. This keeps the
optimizer, finite-difference checks and serialization trivial.

Row-vector convention throughout: a layer computes ``x @ W + b`` with ``W``
shaped ``(input_dim, units)``.
"""
from __future__ import annotations

import struct
import zlib
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import _kernels

CHAR_ALPHABET = 256
TAG_ALPHABET = 49

__all__ = [
    "ModelConfig",
    "GruParams",
    "DenseParams",
    "NetworkParams",
    "Gradients",
    "GruTrace",
    "ForwardTrace",
    "init_params",
    "one_hot_chars",
    "one_hot_tags",
    "hard_sigmoid",
    "gru_step",
    "gru_sequence",
    "dropout_apply",
    "merge_concat",
    "dense_relu",
    "dense_softmax",
    "softmax",
    "forward",
    "params_to_bytes",
    "params_from_bytes",
    "save_params",
    "load_params",
    "ModelFormatError",
]


@dataclass(frozen=True)
class ModelConfig:
    window: int = 40
    char_alphabet: int = CHAR_ALPHABET
    tag_alphabet: int = TAG_ALPHABET
    char_gru_units: int = 128
    pos_gru_units: int = 32
    merged_gru_units: int = 128
    dense1_units: int = 128
    dropout_rho: float = 0.2
    seed: int = 0

    def __post_init__(self):
        for f in fields(self):
            if f.name in ("dropout_rho", "seed"):
                continue
            if int(getattr(self, f.name)) < 1:
                raise ValueError(f"{f.name} must be >= 1")
        if not 0.0 <= self.dropout_rho < 1.0:
            raise ValueError("dropout_rho must lie in [0, 1)")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def replace(self, **changes) -> "ModelConfig":
        return ModelConfig(**{**asdict(self), **changes})


# ---------------------------------------------------------------------------
# parameter containers
# ---------------------------------------------------------------------------


class GruParams:
    """GRU weights stored gate-stacked.

    ``w_in`` is ``(d, 3n)`` with column blocks ``[reset | update | candidate]``,
    ``u_rz`` is ``(n, 2n)`` for the two gates and ``u_h`` is ``(n, n)`` for the
    candidate. ``v_r``, ``u_z``, ``b_h`` etc. are views into those blocks.
    """

    def __init__(self, w_in, u_rz, u_h, b):
        self.w_in = w_in
        self.u_rz = u_rz
        self.u_h = u_h
        self.b = b

    @property
    def units(self) -> int:
        return self.u_h.shape[0]

    @property
    def input_dim(self) -> int:
        return self.w_in.shape[0]

    @classmethod
    def from_gates(cls, v_r, v_z, v_h, u_r, u_z, u_h, b_r, b_z, b_h) -> "GruParams":
        as2 = lambda a: np.atleast_2d(np.asarray(a, dtype=np.float64))
        as1 = lambda a: np.atleast_1d(np.asarray(a, dtype=np.float64))
        return cls(
            np.hstack([as2(v_r), as2(v_z), as2(v_h)]),
            np.hstack([as2(u_r), as2(u_z)]),
            as2(u_h).copy(),
            np.concatenate([as1(b_r), as1(b_z), as1(b_h)]),
        )

    v_r = property(lambda self: self.w_in[:, : self.units])
    v_z = property(lambda self: self.w_in[:, self.units : 2 * self.units])
    v_h = property(lambda self: self.w_in[:, 2 * self.units :])
    u_r = property(lambda self: self.u_rz[:, : self.units])
    u_z = property(lambda self: self.u_rz[:, self.units :])
    b_r = property(lambda self: self.b[: self.units])
    b_z = property(lambda self: self.b[self.units : 2 * self.units])
    b_h = property(lambda self: self.b[2 * self.units :])

    GATE_FIELDS = ("v_r", "v_z", "v_h", "u_r", "u_z", "u_h", "b_r", "b_z", "b_h")


class DenseParams:
    def __init__(self, w, theta):
        self.w = w
        self.theta = theta

    GATE_FIELDS = ("w", "theta")


def _layout(cfg: ModelConfig):
    """(layer, [(attr, shape), ...]) in storage order."""
    def gru(d, n):
        return [("w_in", (d, 3 * n)), ("u_rz", (n, 2 * n)), ("u_h", (n, n)), ("b", (3 * n,))]

    merged_in = cfg.char_gru_units + cfg.pos_gru_units
    return [
        ("char_gru", gru(cfg.char_alphabet, cfg.char_gru_units)),
        ("pos_gru", gru(cfg.tag_alphabet, cfg.pos_gru_units)),
        ("merged_gru", gru(merged_in, cfg.merged_gru_units)),
        ("dense1", [("w", (cfg.merged_gru_units, cfg.dense1_units)), ("theta", (cfg.dense1_units,))]),
        ("dense2", [("w", (cfg.dense1_units, cfg.char_alphabet)), ("theta", (cfg.char_alphabet,))]),
    ]


LAYERS = ("char_gru", "pos_gru", "merged_gru", "dense1", "dense2")


class NetworkParams:
    """All network weights, as views into ``self.flat``.

    The same class doubles as the gradient container (see ``Gradients``).
    """

    def __init__(self, config: ModelConfig, flat: np.ndarray | None = None):
        layout = _layout(config)
        size = sum(int(np.prod(s)) for _, entries in layout for _, s in entries)
        if flat is None:
            flat = np.zeros(size, dtype=np.float64)
        elif flat.shape != (size,) or flat.dtype not in (np.float64, np.longdouble):
            raise ValueError(f"flat vector must be float64 of length {size}")
        self.config = config
        self.flat = flat
        off = 0
        for layer, entries in layout:
            views = {}
            for name, shape in entries:
                n = int(np.prod(shape))
                views[name] = flat[off : off + n].reshape(shape)
                off += n
            cls = DenseParams if layer.startswith("dense") else GruParams
            setattr(self, layer, cls(**views))

    @property
    def size(self) -> int:
        return self.flat.size

    def copy(self) -> "NetworkParams":
        return NetworkParams(self.config, self.flat.copy())

    def zeros_like(self) -> "NetworkParams":
        return NetworkParams(self.config)

    def named_arrays(self):
        """``(path, array)`` pairs in serialization order, e.g. ``("char_gru.v_r", ...)``."""
        for layer in LAYERS:
            obj = getattr(self, layer)
            for name in obj.GATE_FIELDS:
                yield f"{layer}.{name}", getattr(obj, name)

    def checksum(self) -> int:
        return zlib.crc32(_body_bytes(self))

    def __eq__(self, other):
        return (
            isinstance(other, NetworkParams)
            and self.config == other.config
            and np.array_equal(self.flat, other.flat)
        )


Gradients = NetworkParams


def init_params(config: ModelConfig) -> NetworkParams:
    """Glorot-uniform weights from ``config.seed``; zero biases."""
    params = NetworkParams(config)
    rng = np.random.default_rng(config.seed)
    for layer in LAYERS:
        obj = getattr(params, layer)
        if isinstance(obj, DenseParams):
            mats = [obj.w]
        else:
            mats = [obj.v_r, obj.v_z, obj.v_h, obj.u_r, obj.u_z, obj.u_h]
        for m in mats:
            limit = np.sqrt(6.0 / (m.shape[0] + m.shape[1]))
            m[...] = rng.uniform(-limit, limit, size=m.shape)
    return params


# ---------------------------------------------------------------------------
# elementary operations
# ---------------------------------------------------------------------------


def one_hot_chars(data, window: int = 40) -> np.ndarray:
    idx = np.frombuffer(bytes(data), dtype=np.uint8)
    if idx.size != window:
        raise ValueError(f"expected {window} bytes, got {idx.size}")
    out = np.zeros((window, CHAR_ALPHABET))
    out[np.arange(window), idx] = 1.0
    return out


def _check_tags(tags, window: int, n_tags: int = TAG_ALPHABET) -> np.ndarray:
    idx = np.asarray(tags, dtype=np.int64)
    if idx.shape != (window,):
        raise ValueError(f"expected {window} tag ids, got shape {idx.shape}")
    if idx.size and (idx.min() < 0 or idx.max() >= n_tags):
        bad = int(np.flatnonzero((idx < 0) | (idx >= n_tags))[0])
        raise ValueError(f"tag id {int(idx[bad])} at position {bad} outside 0..{n_tags - 1}")
    return idx


def one_hot_tags(tags, window: int = 40, *, ablate: bool = False) -> np.ndarray:
    """One-hot tag matrix; with ``ablate`` the matrix is all zeros."""
    idx = _check_tags(tags, window)
    out = np.zeros((window, TAG_ALPHABET))
    if not ablate:
        out[np.arange(window), idx] = 1.0
    return out


def hard_sigmoid(x):
    return np.clip(0.2 * np.asarray(x, dtype=np.float64) + 0.5, 0.0, 1.0)


def gru_step(p: GruParams, x_t, h_prev) -> np.ndarray:
    x_t = np.asarray(x_t, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    n = p.units
    if x_t.shape != (p.input_dim,) or h_prev.shape != (n,):
        raise ValueError(
            f"shape mismatch: x {x_t.shape} vs ({p.input_dim},), h {h_prev.shape} vs ({n},)"
        )
    # one-step recurrence, so a sequence of length 1 agrees bit for bit
    return _run_gru((x_t @ p.w_in + p.b)[None, :], p, h_prev).h[1].copy()


@dataclass
class GruTrace:
    """Per-timestep activations of one GRU layer (row ``t`` = step ``t``)."""

    h: np.ndarray  # (T+1, n), h[0] is the initial state
    rz: np.ndarray  # (T, 2n), reset gate then update gate
    cand: np.ndarray  # (T, n)
    rh: np.ndarray  # r * h_prev

    @property
    def r(self) -> np.ndarray:
        return self.rz[:, : self.cand.shape[1]]

    @property
    def z(self) -> np.ndarray:
        return self.rz[:, self.cand.shape[1] :]

    @property
    def outputs(self) -> np.ndarray:
        return self.h[1:]


def _run_gru(proj: np.ndarray, p: GruParams, h0: np.ndarray | None = None) -> GruTrace:
    """Recurrence over precomputed input projections ``proj = x @ w_in + b``.

    ``h0`` defaults to the zero state.
    """
    if proj.dtype == np.float64:
        T, n = proj.shape[0], p.units
        H = np.zeros((T + 1, n))
        if h0 is not None:
            H[0] = h0
        RZ = np.empty((T, 2 * n))
        C = np.empty((T, n))
        RH = np.empty((T, n))
        _kernels.gru_forward(np.ascontiguousarray(proj), p.u_rz, p.u_h, H, RZ, C, RH)
        return GruTrace(H, RZ, C, RH)
    return _run_gru_reference(proj, p, h0)


def _run_gru_reference(proj: np.ndarray, p: GruParams, h0: np.ndarray | None = None) -> GruTrace:
    """Plain numpy recurrence; works for any float dtype."""
    T = proj.shape[0]
    n = p.units
    # hard sigmoid folded into the affine maps: hs(a) = clip(0.2 a + 0.5)
    gate_in = 0.2 * proj[:, : 2 * n] + 0.5
    cand_in = proj[:, 2 * n :]
    u_rz = 0.2 * p.u_rz
    u_h = p.u_h
    dt = proj.dtype
    H = np.zeros((T + 1, n), dtype=dt)
    if h0 is not None:
        H[0] = h0
    RZ = np.empty((T, 2 * n), dtype=dt)
    C = np.empty((T, n), dtype=dt)
    RH = np.empty((T, n), dtype=dt)
    maximum, minimum, multiply, tanh = np.maximum, np.minimum, np.multiply, np.tanh
    h = H[0]
    for t in range(T):
        rz = RZ[t]
        np.add(gate_in[t], h @ u_rz, out=rz)
        maximum(rz, 0.0, out=rz)
        minimum(rz, 1.0, out=rz)
        rh = multiply(rz[:n], h, out=RH[t])
        c = tanh(cand_in[t] + rh @ u_h, out=C[t])
        z = rz[n:]
        h_next = multiply(z, h, out=H[t + 1])
        h_next += (1.0 - z) * c
        h = h_next
    return GruTrace(H, RZ, C, RH)


def _gru_backward(tr: GruTrace, p: GruParams, d_out: np.ndarray | None, d_last: np.ndarray | None):
    """Reverse pass through one GRU layer.

    ``d_out`` holds dLoss/dh_t injected at every step (or None), ``d_last``
    the gradient arriving at the final state (or None). Returns the gradient
    w.r.t. the pre-activations ``[a_r | a_z | a_h]`` per step, plus the
    recurrent weight gradients.
    """
    if tr.h.dtype != np.float64:
        return _gru_backward_reference(tr, p, d_out, d_last)
    T, n = tr.r.shape
    d_out = np.zeros((T, n)) if d_out is None else np.ascontiguousarray(d_out, dtype=np.float64)
    d_last = np.zeros(n) if d_last is None else np.asarray(d_last, dtype=np.float64)
    dA = np.empty((T, 3 * n))
    _kernels.gru_backward(tr.h, tr.rz, tr.cand, p.u_rz.T.copy(), p.u_h.T.copy(), d_out, d_last, dA)
    h_prev = tr.h[:-1]
    return dA, h_prev.T @ dA[:, : 2 * n], tr.rh.T @ dA[:, 2 * n :]


def _gru_backward_reference(tr: GruTrace, p: GruParams, d_out: np.ndarray | None, d_last: np.ndarray | None):
    """Numpy version of ``_gru_backward``."""
    T, n = tr.r.shape
    h_prev = tr.h[:-1]
    # per-step Jacobian factors, computed once
    d_hs_r = np.where((tr.r > 0.0) & (tr.r < 1.0), 0.2, 0.0)
    d_hs_z = np.where((tr.z > 0.0) & (tr.z < 1.0), 0.2, 0.0)
    f_cand = (1.0 - tr.z) * (1.0 - tr.cand * tr.cand)
    f_z = (h_prev - tr.cand) * d_hs_z
    f_r = h_prev * d_hs_r
    u_rz_t = p.u_rz.T.copy()
    u_h_t = p.u_h.T.copy()
    dA = np.empty((T, 3 * n))
    dh = np.zeros(n) if d_last is None else np.array(d_last, dtype=np.float64)
    for t in range(T - 1, -1, -1):
        if d_out is not None:
            dh = dh + d_out[t]
        row = dA[t]
        dac = np.multiply(dh, f_cand[t], out=row[2 * n :])
        drh = dac @ u_h_t
        np.multiply(drh, f_r[t], out=row[:n])
        np.multiply(dh, f_z[t], out=row[n : 2 * n])
        dh = dh * tr.z[t] + drh * tr.r[t] + row[: 2 * n] @ u_rz_t
    g_u_rz = h_prev.T @ dA[:, : 2 * n]
    g_u_h = tr.rh.T @ dA[:, 2 * n :]
    return dA, g_u_rz, g_u_h


def gru_sequence(p: GruParams, xs, return_sequence: bool = True) -> np.ndarray:
    """Run a GRU from the zero state over the rows of ``xs``."""
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 2 or xs.shape[0] == 0:
        raise ValueError("xs must be a non-empty (T, d) matrix")
    if xs.shape[1] != p.input_dim:
        raise ValueError(f"input width {xs.shape[1]} != {p.input_dim}")
    tr = _run_gru(xs @ p.w_in + p.b, p)
    return tr.outputs if return_sequence else tr.h[-1].copy()


def dropout_apply(v, rho: float, rng: np.random.Generator | None, training: bool):
    """Inverted dropout. Returns ``(output, keep_mask)``."""
    v = np.asarray(v, dtype=np.float64)
    if not 0.0 <= rho < 1.0:
        raise ValueError("rho must lie in [0, 1)")
    if not training or rho == 0.0:
        return v.copy(), np.ones(v.shape, dtype=bool)
    keep = rng.random(v.shape) >= rho
    return np.where(keep, v / (1.0 - rho), 0.0), keep


def merge_concat(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"cannot merge {a.shape[0]} and {b.shape[0]} timesteps")
    return np.concatenate([a, b], axis=1)


def softmax(x) -> np.ndarray:
    x = np.asarray(x)
    if x.dtype not in (np.float64, np.longdouble):
        x = x.astype(np.float64)
    e = np.exp(x - x.max())
    return e / e.sum()


def _affine(p: DenseParams, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite input to dense layer")
    return x @ p.w + p.theta


def dense_relu(p: DenseParams, x) -> np.ndarray:
    return np.maximum(_affine(p, x), 0.0)


def dense_softmax(p: DenseParams, x) -> np.ndarray:
    return softmax(_affine(p, x))


# ---------------------------------------------------------------------------
# full network
# ---------------------------------------------------------------------------


@dataclass
class ForwardTrace:
    chars: np.ndarray  # (T,) byte values
    tags: np.ndarray | None  # (T,) tag ids, None under ablation
    char: GruTrace
    pos: GruTrace
    merged: GruTrace
    keep_char: np.ndarray  # dropout multipliers, 0 or 1/(1-rho)
    keep_pos: np.ndarray
    merged_in: np.ndarray  # (T, n_c + n_p), the concatenation layer
    dense1_pre: np.ndarray
    dense1_out: np.ndarray
    dense2_pre: np.ndarray
    pmf: np.ndarray


def _as_bytes_array(chars, window: int) -> np.ndarray:
    if isinstance(chars, (bytes, bytearray, memoryview)):
        idx = np.frombuffer(bytes(chars), dtype=np.uint8).astype(np.intp)
    else:
        idx = np.asarray(chars, dtype=np.intp)
    if idx.shape != (window,):
        raise ValueError(f"expected {window} bytes, got shape {idx.shape}")
    if idx.size and (idx.min() < 0 or idx.max() > 255):
        raise ValueError("byte values must lie in 0..255")
    return idx


def forward(
    params: NetworkParams,
    chars,
    tags=None,
    mode: str = "infer",
    rng: np.random.Generator | None = None,
    *,
    rho: float | None = None,
):
    """Next-byte distribution for one context window.

    ``tags=None`` selects the ablation mode (all-zero tag input). In
    ``mode="train"`` dropout is active (``rho`` overrides the configured rate)
    and ``(pmf, ForwardTrace)`` is returned; ``mode="infer"`` returns the pmf.
    """
    if mode not in ("train", "infer"):
        raise ValueError(f"unknown mode {mode!r}")
    cfg = params.config
    T = cfg.window
    cidx = _as_bytes_array(chars, T)
    tidx = None if tags is None else _check_tags(tags, T, cfg.tag_alphabet).astype(np.intp)

    cg, pg, mg = params.char_gru, params.pos_gru, params.merged_gru
    # one-hot inputs reduce to row gathers of w_in
    char_tr = _run_gru(cg.w_in[cidx] + cg.b, cg)
    if tidx is None:
        pos_proj = np.broadcast_to(pg.b, (T, pg.b.size))
    else:
        pos_proj = pg.w_in[tidx] + pg.b
    pos_tr = _run_gru(pos_proj, pg)

    training = mode == "train"
    rho = cfg.dropout_rho if rho is None else rho
    if training and rho > 0.0:
        if rng is None:
            raise ValueError("train mode with dropout needs an rng")
        scale = 1.0 / (1.0 - rho)
        keep_c = (rng.random(char_tr.outputs.shape) >= rho) * scale
        keep_p = (rng.random(pos_tr.outputs.shape) >= rho) * scale
        merged_in = np.concatenate([char_tr.outputs * keep_c, pos_tr.outputs * keep_p], axis=1)
    else:
        keep_c = keep_p = None
        merged_in = np.concatenate([char_tr.outputs, pos_tr.outputs], axis=1)

    merged_tr = _run_gru(merged_in @ mg.w_in + mg.b, mg)
    d1_pre = merged_tr.h[-1] @ params.dense1.w + params.dense1.theta
    d1 = np.maximum(d1_pre, 0.0)
    d2_pre = d1 @ params.dense2.w + params.dense2.theta
    pmf = softmax(d2_pre)
    if not training:
        return pmf
    if keep_c is None:
        keep_c = np.ones_like(char_tr.outputs)
        keep_p = np.ones_like(pos_tr.outputs)
    trace = ForwardTrace(
        chars=cidx,
        tags=tidx,
        char=char_tr,
        pos=pos_tr,
        merged=merged_tr,
        keep_char=keep_c,
        keep_pos=keep_p,
        merged_in=merged_in,
        dense1_pre=d1_pre,
        dense1_out=d1,
        dense2_pre=d2_pre,
        pmf=pmf,
    )
    return pmf, trace


def _gru_batch(proj: np.ndarray, p: GruParams, return_sequence: bool) -> np.ndarray:
    """Recurrence for a batch of sequences at once; ``proj`` is (B, T, 3n)."""
    B, T, _ = proj.shape
    n = p.units
    h = np.zeros((B, n))
    seq = np.empty((B, T, n)) if return_sequence else None
    for t in range(T):
        a = proj[:, t]
        rz = np.clip(0.2 * (a[:, : 2 * n] + h @ p.u_rz) + 0.5, 0.0, 1.0)
        r, z = rz[:, :n], rz[:, n:]
        c = np.tanh(a[:, 2 * n :] + (r * h) @ p.u_h)
        h = z * h + (1.0 - z) * c
        if seq is not None:
            seq[:, t] = h
    return seq if return_sequence else h


def forward_batch(params: NetworkParams, contexts, tags=None, *, chunk: int = 256) -> np.ndarray:
    """Inference-mode pmfs for many windows, one row per context.

    Agrees with ``forward`` to rounding (the products are summed in a
    different order), so it suits statistics such as accuracy but not the
    coder, whose encoder and decoder must see bit-identical pmfs.
    """
    cfg = params.config
    T = cfg.window
    chars = np.stack([_as_bytes_array(c, T) for c in contexts]) if len(contexts) else np.zeros((0, T), np.intp)
    tag_ids = None
    if tags is not None:
        tag_ids = np.stack([_check_tags(t, T, cfg.tag_alphabet) for t in tags]).astype(np.intp)
    cg, pg, mg = params.char_gru, params.pos_gru, params.merged_gru
    out = np.empty((len(chars), cfg.char_alphabet))
    for lo in range(0, len(chars), chunk):
        hi = min(lo + chunk, len(chars))
        c_seq = _gru_batch(cg.w_in[chars[lo:hi]] + cg.b, cg, True)
        if tag_ids is None:
            p_proj = np.broadcast_to(pg.b, (hi - lo, T, pg.b.size))
        else:
            p_proj = pg.w_in[tag_ids[lo:hi]] + pg.b
        p_seq = _gru_batch(p_proj, pg, True)
        merged_in = np.concatenate([c_seq, p_seq], axis=2)
        h = _gru_batch(merged_in @ mg.w_in + mg.b, mg, False)
        d1 = np.maximum(h @ params.dense1.w + params.dense1.theta, 0.0)
        logits = d1 @ params.dense2.w + params.dense2.theta
        e = np.exp(logits - logits.max(axis=1, keepdims=True))
        out[lo:hi] = e / e.sum(axis=1, keepdims=True)
    return out


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------
#
# Model file layout (all little-endian):
#   b"NCMP"                      magic
#   u16                          format version (1)
#   u32 x 7                      window, char_alphabet, tag_alphabet, char_gru_units,
#                                pos_gru_units, merged_gru_units, dense1_units
#   u64                          dropout_rho as IEEE-754 double bits
#   u64                          seed
#   f64 arrays                   NetworkParams.named_arrays() order, each row-major:
#                                char_gru, pos_gru, merged_gru as
#                                v_r v_z v_h u_r u_z u_h b_r b_z b_h, then
#                                dense1 w theta, dense2 w theta
#   u32                          CRC-32 of every preceding byte

MODEL_MAGIC = b"NCMP"
MODEL_VERSION = 1
_HEADER = struct.Struct("<4sH7IQQ")


class ModelFormatError(ValueError):
    pass


def _body_bytes(params: NetworkParams) -> bytes:
    cfg = params.config
    rho_bits = struct.unpack("<Q", struct.pack("<d", cfg.dropout_rho))[0]
    head = _HEADER.pack(
        MODEL_MAGIC,
        MODEL_VERSION,
        cfg.window,
        cfg.char_alphabet,
        cfg.tag_alphabet,
        cfg.char_gru_units,
        cfg.pos_gru_units,
        cfg.merged_gru_units,
        cfg.dense1_units,
        rho_bits,
        cfg.seed,
    )
    parts = [head]
    for _, arr in params.named_arrays():
        parts.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return b"".join(parts)


def params_to_bytes(params: NetworkParams) -> bytes:
    body = _body_bytes(params)
    return body + struct.pack("<I", zlib.crc32(body))


def params_from_bytes(data: bytes) -> NetworkParams:
    if len(data) < _HEADER.size + 4:
        raise ModelFormatError("model file too short")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    magic, version, *ints, rho_bits, seed = _HEADER.unpack_from(body)
    if magic != MODEL_MAGIC:
        raise ModelFormatError(f"bad magic {magic!r}")
    if version != MODEL_VERSION:
        raise ModelFormatError(f"unsupported model format version {version}")
    if zlib.crc32(body) != crc:
        raise ModelFormatError("model checksum mismatch")
    rho = struct.unpack("<d", struct.pack("<Q", rho_bits))[0]
    names = [f.name for f in fields(ModelConfig)][:7]
    cfg = ModelConfig(**dict(zip(names, ints)), dropout_rho=rho, seed=seed)
    params = NetworkParams(cfg)
    off = _HEADER.size
    for path, arr in params.named_arrays():
        n = arr.size * 8
        if off + n > len(body):
            raise ModelFormatError(f"model file truncated in {path}")
        arr[...] = np.frombuffer(body, dtype="<f8", count=arr.size, offset=off).reshape(arr.shape)
        off += n
    if off != len(body):
        raise ModelFormatError("trailing bytes in model file")
    return params


def save_params(params: NetworkParams, path) -> None:
    Path(path).write_bytes(params_to_bytes(params))


def load_params(path) -> NetworkParams:
    return params_from_bytes(Path(path).read_bytes())
