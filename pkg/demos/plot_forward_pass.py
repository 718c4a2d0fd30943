"""
One forward pass through the dual-input network
================================================

Characters and part-of-speech tags enter separate GRUs, their sequences are
concatenated and fed to a third GRU, and two dense layers turn its last state
into a distribution over the next byte.
"""
import numpy as np

from nczip.model import ModelConfig, forward, gru_sequence, hard_sigmoid, init_params, one_hot_chars, one_hot_tags
from nczip.tagging import TAGSET, default_tagger, tag_prefix

text = b"The cats were sitting on the warm stones of the old wall, and"
window = 40
context = text[-window:]

# tags are assigned only once a word is finished, so "and" is still untagged
tags = tag_prefix(default_tagger(), text)[-window:]
for ch, t in zip(context[-12:].decode(), tags[-12:]):
    print(repr(ch), TAGSET.name(int(t)))

x = one_hot_chars(context, window)
y = one_hot_tags(tags, window)
print(x.shape, y.shape)  # (40, 256) and (40, 49)

# the gates use a piecewise-linear sigmoid
print(hard_sigmoid(np.array([-3.0, -1.0, 0.0, 1.0, 3.0])))

params = init_params(ModelConfig(seed=0))
print(params.size, "weights")

# the branch GRU returns one state per character
states = gru_sequence(params.char_gru, x)
print(states.shape, np.abs(states).max())

pmf = forward(params, context, tags)
print(pmf.sum(), pmf.min(), pmf.max())  # untrained: close to uniform

# without the tag channel the input is all zeros on that side
ablated = forward(params, context, None)
print(np.abs(pmf - ablated).max())

top = np.argsort(pmf)[::-1][:5]
print([(bytes([b]), round(float(pmf[b]), 5)) for b in top])
