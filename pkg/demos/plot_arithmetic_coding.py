"""
Arithmetic coding by hand
=========================

A fixed model over seven symbols, the message ``CODE!`` narrowed one symbol
at a time, then the same idea with the 32-bit range coder.
"""
from fractions import Fraction

import numpy as np

from nczip.coder import FixedModel, encode_symbols, decode_symbols, quantize_pmf, rational_decode, rational_encode

model = FixedModel.from_pairs(
    [("A", "0.3"), ("B", "0.2"), ("C", "0.2"), ("D", "0.1"), ("E", "0.1"), ("O", "0.05"), ("!", "0.05")]
)
for sym, lo, p in zip(model.symbols, model.cumulative, model.probs):
    print(f"{sym}  p={float(p):<5}  [{float(lo)}, {float(lo + p)})")

# every symbol shrinks the interval by its probability
steps = []
final = rational_encode("CODE!", model, steps=steps)
for sym, iv in zip("CODE!", steps):
    print(f"after {sym}: [{float(iv.low):.6f}, {float(iv.high):.6f})  width {float(iv.high - iv.low):.2e}")

# any point inside the final interval names the message
print("".join(rational_decode(Fraction("0.687895"), 5, model)))

# width 5e-6 is worth log2(1/5e-6) bits
print("ideal bits:", -np.log2(float(final.high - final.low)))

# a message of likely symbols leaves a wide interval
iv = rational_encode("AAAAA!", model)
print("AAAAA! ->", float(iv.low), float(iv.high), Fraction("0.0024") in iv)

# %%
# The streaming coder works on 16-bit integer frequencies instead of exact
# fractions, and writes bits as soon as they are settled.
pmf = quantize_pmf([0.3, 0.2, 0.2, 0.1, 0.1, 0.05, 0.05] + [0.0] * 249)
print(pmf.freqs[:8], pmf.total)  # impossible bytes still get frequency 1

msg = [2, 5, 3, 4, 6]
data, ideal = encode_symbols(msg, [pmf] * len(msg))
print(f"{len(data)} bytes, ideal {ideal:.2f} bits")
print(decode_symbols(data, [pmf] * len(msg)) == msg)
