from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nczip.coder import (
    BitReader,
    BitWriter,
    CorruptStreamError,
    FixedModel,
    QuantizedPmf,
    RangeDecoder,
    RangeEncoder,
    RationalInterval,
    decode_symbols,
    encode_symbols,
    quantize_pmf,
    rational_decode,
    rational_encode,
)
from oracles import TABLE1, ideal_bits, table1_fractions


@pytest.fixture
def table1():
    return FixedModel.from_pairs(TABLE1)


# ---------------------------------------------------------------- rational coder


def test_table1_model_is_exact(table1):
    assert sum(table1.probs) == 1
    assert table1.cumulative[0] == 0
    assert list(table1.cumulative) == sorted(set(table1.cumulative))
    assert dict(zip(table1.symbols, table1.probs)) == dict(table1_fractions())


def test_code_steps_match_table2(table1):
    steps = []
    final = rational_encode("CODE!", table1, steps=steps)
    expected = [("0.5", "0.7"), ("0.68", "0.69"), ("0.687", "0.688"), ("0.6878", "0.6879"), ("0.687895", "0.6879")]
    assert [(s.low, s.high) for s in steps] == [(Fraction(a), Fraction(b)) for a, b in expected]
    assert final == RationalInterval(Fraction("0.687895"), Fraction("0.68790"))


def test_aaaaa_contains_0_0024(table1):
    iv = rational_encode("AAAAA!", table1)
    assert (iv.low, iv.high) == (Fraction("0.0023085"), Fraction("0.00243"))
    assert Fraction("0.0024") in iv


def test_empty_message(table1):
    assert rational_encode("", table1) == RationalInterval(Fraction(0), Fraction(1))


def test_unknown_symbol_names_index(table1):
    with pytest.raises(ValueError, match="index 2"):
        rational_encode("CAZ", table1)


@pytest.mark.parametrize(
    "point, length, expected",
    [("0.687895", 5, "CODE!"), ("0.0024", 6, "AAAAA!"), ("0", 3, "AAA")],
)
def test_rational_decode(table1, point, length, expected):
    assert "".join(rational_decode(Fraction(point), length, table1)) == expected


def test_rational_decode_accepts_float(table1):
    assert "".join(rational_decode(0.687895, 5, table1)) == "CODE!"


@given(st.lists(st.sampled_from("ABCDEO!"), max_size=12))
def test_rational_nesting_width_and_inverse(msg):
    table1 = FixedModel.from_pairs(TABLE1)
    steps = []
    iv = rational_encode(msg, table1, steps=steps)
    prev = RationalInterval(Fraction(0), Fraction(1))
    for s in steps:
        assert prev.contains_interval(s)
        prev = s
    width = Fraction(1)
    for m in msg:
        width *= table1.probs[table1.index(m)]
    assert iv.width == width
    assert rational_decode(iv.low, len(msg), table1) == list(msg)


def test_fixed_model_rejects_bad_probs():
    with pytest.raises(ValueError):
        FixedModel(("a", "b"), (Fraction(1, 2), Fraction(1, 3)))
    with pytest.raises(ValueError):
        FixedModel(("a", "b"), (Fraction(1), Fraction(0)))


# ---------------------------------------------------------------- quantizer


def test_quantize_uniform():
    q = quantize_pmf(np.full(256, 1 / 256))
    assert np.all(q.freqs == 255)
    assert q.total == 65280


def test_quantize_point_mass():
    p = np.zeros(256)
    p[0] = 1.0
    q = quantize_pmf(p)
    assert q.freqs[0] == 65280
    assert np.all(q.freqs[1:] == 1)
    assert q.cumulative[-1] == q.total == 65280 + 255


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 10))
def test_quantize_bounds_and_determinism(seed, alpha):
    p = np.random.default_rng(seed).dirichlet(np.full(256, alpha))
    q1, q2 = quantize_pmf(p), quantize_pmf(p.copy())
    assert q1.freqs.min() >= 1
    assert q1.total <= 2**16
    assert q1.cumulative[256] == q1.total
    assert q1.freqs.tobytes() == q2.freqs.tobytes()


def test_quantize_rejects_non_finite():
    p = np.full(256, 1 / 256)
    p[3] = np.nan
    with pytest.raises(ValueError):
        quantize_pmf(p)


# ---------------------------------------------------------------- bit I/O


def test_bits_msb_first_zero_padded():
    w = BitWriter()
    for b in (1, 0, 1, 1, 0, 0, 0, 0, 1, 1):
        w.write(b)
    assert w.getvalue() == bytes([0b10110000, 0b11000000])
    r = BitReader(w.getvalue(), slack=0)
    assert [r.read() for _ in range(16)] == [1, 0, 1, 1, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0, 0, 0]
    with pytest.raises(CorruptStreamError):
        r.read()


# ---------------------------------------------------------------- range coder


def _random_pmfs(rng, n):
    return [quantize_pmf(rng.dirichlet(np.full(256, rng.choice([0.02, 0.3, 3.0])))) for _ in range(n)]


def test_certain_symbol_costs_nothing():
    certain = QuantizedPmf([65280])
    enc = RangeEncoder()
    for _ in range(50):
        enc.encode(certain, 0)
        assert enc.range == 2**32 - 1 and enc.low == 0
    assert enc.finish() == b""
    assert decode_symbols(b"", [certain] * 50) == [0] * 50


def test_uniform_eight_symbols_about_eight_bytes():
    u = quantize_pmf(np.full(256, 1 / 256))
    data, ideal = encode_symbols(range(100, 108), [u] * 8)
    assert ideal == pytest.approx(64.0)
    assert abs(len(data) - 8) <= 1


def test_random_symbols_within_slack():
    rng = np.random.default_rng(1234)
    pmfs = _random_pmfs(rng, 1000)
    syms = [int(rng.choice(256, p=q.freqs / q.total)) for q in pmfs]
    enc = RangeEncoder()
    for q, s in zip(pmfs, syms):
        enc.encode(q, s)
    enc.finish()
    assert enc.sink.bits_written <= ideal_bits(pmfs, syms) + 32


def test_every_single_byte_round_trips():
    u = quantize_pmf(np.full(256, 1 / 256))
    for x in range(256):
        data, _ = encode_symbols([x], [u])
        assert decode_symbols(data, [u]) == [x]


def test_fuzz_round_trip():
    rng = np.random.default_rng(99)
    for _ in range(150):
        n = int(rng.integers(0, 200))
        pmfs = _random_pmfs(rng, n)
        syms = [int(rng.integers(256)) if rng.random() < 0.2 else int(rng.choice(256, p=q.freqs / q.total)) for q in pmfs]
        data, _ = encode_symbols(syms, pmfs)
        assert decode_symbols(data, pmfs) == syms


def test_truncated_stream_is_corrupt():
    u = quantize_pmf(np.full(256, 1 / 256))
    rng = np.random.default_rng(5)
    syms = [int(s) for s in rng.integers(0, 256, 100)]
    data, _ = encode_symbols(syms, [u] * 100)
    with pytest.raises(CorruptStreamError):
        decode_symbols(data[:1], [u] * 100)


def test_carry_propagation_path():
    # symbols at the top of a skewed table push low towards the carry boundary
    top_heavy = QuantizedPmf([1] * 255 + [65280 - 255])
    pmfs = [top_heavy] * 3000 + [quantize_pmf(np.full(256, 1 / 256))] * 20
    syms = [255] * 3000 + list(range(20))
    data, _ = encode_symbols(syms, pmfs)
    assert decode_symbols(data, pmfs) == syms


@settings(max_examples=200, deadline=None)
@given(
    st.lists(
        st.tuples(st.lists(st.integers(1, 300), min_size=2, max_size=40), st.integers(0, 10**6)),
        max_size=60,
    )
)
def test_round_trip_and_efficiency_property(steps):
    pmfs, syms = [], []
    for freqs, pick in steps:
        q = QuantizedPmf(freqs)
        pmfs.append(q)
        syms.append(pick % len(freqs))
    enc = RangeEncoder()
    for q, s in zip(pmfs, syms):
        enc.encode(q, s)
    data = enc.finish()
    assert enc.sink.bits_written <= ideal_bits(pmfs, syms) + 33
    assert decode_symbols(data, pmfs) == syms


def test_decoder_state_mirrors_encoder():
    rng = np.random.default_rng(3)
    pmfs = _random_pmfs(rng, 300)
    syms = [int(rng.choice(256, p=q.freqs / q.total)) for q in pmfs]
    enc = RangeEncoder()
    ranges = []
    for q, s in zip(pmfs, syms):
        enc.encode(q, s)
        ranges.append(enc.range)
        assert enc.range >= 2**24
    dec = RangeDecoder(BitReader(enc.finish()))
    for q, s, r in zip(pmfs, syms, ranges):
        assert dec.decode(q) == s
        assert dec.range == r
