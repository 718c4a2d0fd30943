"""Compiled inner loops for float64 training.

The numpy implementations in ``model`` and ``training`` stay the reference
(they also serve the extended-precision finite-difference path); these
kernels compute the same quantities without per-timestep interpreter
overhead. Tests compare the two.

Only the matrix-vector products are compiled with relaxed floating point
(so they vectorize); the elementwise gate algebra keeps strict IEEE semantics, which
preserves identities such as ``z = 1 -> h_t == h_{t-1}`` exactly.
"""
import numba
import numpy as np

_STRICT = dict(cache=True, error_model="numpy")
# no nnan/ninf: non-finite values must propagate, not be assumed away
_RELAXED = dict(_STRICT, fastmath={"reassoc", "contract", "arcp", "nsz"})


@numba.njit(**_RELAXED)
def _vecmat(v, m, out):
    """``out[j] += sum_k v[k] * m[k, j]``.

    Four rows of ``m`` are folded in per sweep over ``out``; one row at a
    time the loop is bound by the loads and stores of ``out``, not by the
    arithmetic.
    """
    n, cols = m.shape
    k = 0
    while k + 4 <= n:
        a0, a1, a2, a3 = v[k], v[k + 1], v[k + 2], v[k + 3]
        r0, r1, r2, r3 = m[k], m[k + 1], m[k + 2], m[k + 3]
        for j in range(cols):
            out[j] += a0 * r0[j] + a1 * r1[j] + a2 * r2[j] + a3 * r3[j]
        k += 4
    while k < n:
        a, r = v[k], m[k]
        for j in range(cols):
            out[j] += a * r[j]
        k += 1


@numba.njit(**_STRICT)
def _tanh(x):
    """tanh through one exp; within a few ulp of libm's and twice as fast."""
    e = np.exp(-2.0 * abs(x))
    v = (1.0 - e) / (1.0 + e)
    return v if x >= 0.0 else -v


@numba.njit(**_STRICT)
def gru_forward(proj, u_rz, u_h, H, RZ, C, RH):
    """Fill ``H`` (T+1, n), ``RZ`` (T, 2n), ``C`` and ``RH`` (T, n) in place.

    ``proj`` holds ``x @ w_in + b`` per step; ``H[0]`` is the initial state.
    """
    T = proj.shape[0]
    n = u_h.shape[0]
    # separate buffers: slices of one array would lose their contiguity
    # in the compiled products
    arz = np.empty(2 * n)
    ah = np.empty(n)
    for t in range(T):
        h = H[t]
        arz[:] = proj[t, : 2 * n]
        _vecmat(h, u_rz, arz)
        for j in range(2 * n):
            v = 0.2 * arz[j] + 0.5
            RZ[t, j] = 0.0 if v < 0.0 else (1.0 if v > 1.0 else v)
        for k in range(n):
            RH[t, k] = RZ[t, k] * h[k]
        ah[:] = proj[t, 2 * n :]
        _vecmat(RH[t], u_h, ah)
        for j in range(n):
            c = _tanh(ah[j])
            C[t, j] = c
            z = RZ[t, n + j]
            H[t + 1, j] = z * h[j] + (1.0 - z) * c


@numba.njit(**_STRICT)
def gru_backward(H, RZ, C, u_rz_t, u_h_t, d_out, d_last, dA):
    """Fill ``dA`` (T, 3n) with dLoss/d[a_r | a_z | a_h] per step.

    ``d_out`` (T, n) is added at every step; ``d_last`` (n,) seeds the final
    state. Pass zero arrays for absent terms. The recurrent matrices come
    transposed, so the products with them have the same form as forward.
    """
    T = RZ.shape[0]
    n = u_h_t.shape[0]
    dh = d_last.copy()
    drh = np.empty(n)
    nxt = np.empty(n)
    for t in range(T - 1, -1, -1):
        for j in range(n):
            dh[j] += d_out[t, j]
        for j in range(n):
            z = RZ[t, n + j]
            c = C[t, j]
            dA[t, 2 * n + j] = dh[j] * (1.0 - z) * (1.0 - c * c)
            dz = 0.2 if 0.0 < z < 1.0 else 0.0
            dA[t, n + j] = dh[j] * (H[t, j] - c) * dz
        drh[:] = 0.0
        _vecmat(dA[t, 2 * n :], u_h_t, drh)
        for k in range(n):
            r = RZ[t, k]
            dr = 0.2 if 0.0 < r < 1.0 else 0.0
            dA[t, k] = drh[k] * H[t, k] * dr
        for k in range(n):
            nxt[k] = dh[k] * RZ[t, n + k] + drh[k] * RZ[t, k]
        _vecmat(dA[t, : 2 * n], u_rz_t, nxt)
        dh[:] = nxt


@numba.njit(**_RELAXED)
def rmsprop(w, g, mean_sq, eta, eps, clear):
    """Fused in-place RMSprop update, optionally zeroing ``g`` as it goes.

    Returns False, touching nothing, when the sum of ``g`` is not finite;
    the caller then decides whether an entry really is non-finite.
    """
    s = 0.0
    for i in range(g.size):
        s += g[i]
    if not np.isfinite(s):
        return False
    for i in range(w.size):
        gi = g[i]
        e = 0.9 * mean_sq[i] + 0.1 * (gi * gi)
        mean_sq[i] = e
        w[i] -= gi / (np.sqrt(e) + eps) * eta
        if clear:
            g[i] = 0.0
    return True


@numba.njit(**_STRICT)
def scatter_add_rows(dst, rows, src):
    """``dst[rows[t]] += src[t]`` for every t, repeated rows included."""
    for t in range(rows.shape[0]):
        r = rows[t]
        for j in range(src.shape[1]):
            dst[r, j] += src[t, j]
