"""
When do tags help?
==================

In this synthetic language the word ``ka`` is a noun or a verb, and which
word comes next depends only on that choice. The spelling never reveals it,
so only a model that reads the tag channel can predict the next letter.
"""
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))
from corpora import homograph_corpus  # noqa: E402

from nczip.model import ModelConfig, init_params  # noqa: E402
from nczip.tagging import TAGSET  # noqa: E402
from nczip.training import TrainingConfig, evaluate_accuracy, make_windows, train  # noqa: E402

text, tags = homograph_corpus(100, seed=1000)
print(text[:48])
print([TAGSET.name(int(t)) for t in tags[:12]])

held_text, held_tags = homograph_corpus(100, seed=2000)
cfg = ModelConfig(window=12, char_gru_units=16, pos_gru_units=8, merged_gru_units=16, dense1_units=16, dropout_rho=0.0)
train_ds = make_windows(text, tags, cfg.window)
test_ds = make_windows(held_text, held_tags, cfg.window)

for use_tags in (True, False):
    accs = []
    for seed in range(3):
        params, _ = train(init_params(cfg.replace(seed=seed)), train_ds, TrainingConfig(epochs=30, seed=seed), use_tags=use_tags)
        accs.append(evaluate_accuracy(params, test_ds, use_tags=use_tags))
    print("with tags" if use_tags else "ablated  ", np.round(accs, 3), f"mean {np.mean(accs):.3f}")

# a blind model can only guess after "ka ": one position in six is a coin flip,
# so it tops out near 1 - 1/12
print(1 - 1 / 12)
