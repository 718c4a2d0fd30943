"""
Checking backpropagation through time
=====================================

Compare the analytic gradient of every weight with a central finite
difference, first on a sound backward pass, then on one with a planted bug.
"""
import numpy as np

from nczip.model import ModelConfig, init_params
from nczip.training import WindowSample, backward, grad_check, sample_loss

cfg = ModelConfig(window=5, char_gru_units=4, pos_gru_units=4, merged_gru_units=4, dense1_units=8, dropout_rho=0.0, seed=3)
params = init_params(cfg)
rng = np.random.default_rng(3)
params.flat[:] += rng.normal(0, 0.1, params.size)  # move off the symmetric start

sample = WindowSample(b"hello", (12, 12, 0, 21, 21), ord("!"))
print("loss", sample_loss(params, sample))

# the finite differences run in extended precision, so h can be small
for h in (1e-3, 1e-4, 1e-5, 1e-6):
    print(f"h={h:g}  max relative error {grad_check(params, sample, h):.2e}")

# the same check with the tag channel switched off
print(grad_check(params, sample, 1e-5, use_tags=False))


# %%
# A backward pass that forgets the factor of one half in the loss gradient
def broken(params, trace, target, out=None):
    g = backward(params, trace, target, out)
    g.dense2.theta[:] *= 2.0
    return g


print("broken:", grad_check(params, sample, 1e-5, backward_fn=broken))
