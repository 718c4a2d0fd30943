"""Slow, independent reference computations used by the tests.

Nothing here calls into the vectorized code paths of ``nczip.model``; the
GRU and the full network are written out unit by unit with ``math``.
"""
import math
from fractions import Fraction


def hs(x):
    return min(1.0, max(0.0, 0.2 * x + 0.5))


def gru_step_scalar(p, x, h):
    """One GRU step, one unit at a time, from the named gate matrices."""
    n = p.units
    d = len(x)

    def pre(v, u, b, hh):
        return [
            sum(x[i] * v[i, j] for i in range(d)) + sum(hh[k] * u[k, j] for k in range(n)) + b[j]
            for j in range(n)
        ]

    r = [hs(a) for a in pre(p.v_r, p.u_r, p.b_r, h)]
    z = [hs(a) for a in pre(p.v_z, p.u_z, p.b_z, h)]
    rh = [r[k] * h[k] for k in range(n)]
    c = [math.tanh(a) for a in pre(p.v_h, p.u_h, p.b_h, rh)]
    return [z[j] * h[j] + (1 - z[j]) * c[j] for j in range(n)]


def gru_unrolled(p, xs):
    h = [0.0] * p.units
    out = []
    for x in xs:
        h = gru_step_scalar(p, list(x), h)
        out.append(h)
    return out


def network_pmf(params, chars, tags):
    """Straight-line forward pass (inference, tags=None means ablation)."""
    cfg = params.config
    T = cfg.window
    xc = [[1.0 if k == chars[t] else 0.0 for k in range(cfg.char_alphabet)] for t in range(T)]
    if tags is None:
        xp = [[0.0] * cfg.tag_alphabet for _ in range(T)]
    else:
        xp = [[1.0 if k == tags[t] else 0.0 for k in range(cfg.tag_alphabet)] for t in range(T)]
    yc = gru_unrolled(params.char_gru, xc)
    yp = gru_unrolled(params.pos_gru, xp)
    psi = [yc[t] + yp[t] for t in range(T)]
    hm = gru_unrolled(params.merged_gru, psi)[-1]
    d1, d2 = params.dense1, params.dense2
    a1 = [sum(hm[i] * d1.w[i, j] for i in range(len(hm))) + d1.theta[j] for j in range(d1.w.shape[1])]
    y1 = [max(0.0, a) for a in a1]
    a2 = [sum(y1[i] * d2.w[i, j] for i in range(len(y1))) + d2.theta[j] for j in range(d2.w.shape[1])]
    m = max(a2)
    e = [math.exp(a - m) for a in a2]
    s = sum(e)
    return [v / s for v in e]


def ideal_bits(pmfs, symbols):
    return sum(math.log2(p.total / int(p.freqs[s])) for p, s in zip(pmfs, symbols))


def order0_bits(text):
    """Code length of the adaptive count model without rescaling."""
    counts = [1] * 256
    total = 256
    bits = 0.0
    for b in text:
        bits += math.log2(total / counts[b])
        counts[b] += 1
        total += 1
    return bits


def rmsprop_reference(w, mean_sq, g, eta, eps, prec=50):
    """One RMSprop step in decimal arithmetic with ``prec`` digits."""
    from decimal import Decimal, getcontext

    getcontext().prec = prec
    E = Decimal("0.9") * Decimal(mean_sq) + Decimal("0.1") * Decimal(g) ** 2
    step = Decimal(eta) / (E.sqrt() + Decimal(eps)) * Decimal(g)
    return Decimal(w) - step, E


TABLE1 = [("A", "0.3"), ("B", "0.2"), ("C", "0.2"), ("D", "0.1"), ("E", "0.1"), ("O", "0.05"), ("!", "0.05")]


def table1_fractions():
    return [(s, Fraction(p)) for s, p in TABLE1]
