"""
Train on a text, then compress it
=================================

A small network memorizes a short document, and the arithmetic coder turns
its confident predictions into a short bit stream.
"""
import time
from importlib import resources

from nczip.compressor import baseline_order0, coding_windows, compress_with_stats, decompress
from nczip.model import ModelConfig, init_params, params_to_bytes
from nczip.tagging import default_tagger
from nczip.training import Trainer, TrainingConfig, evaluate_accuracy

text = (resources.files("nczip") / "data" / "sample.txt").read_bytes()[:512]
print(len(text), "bytes:", text[:70])

tagger = default_tagger()
cfg = ModelConfig(window=20, char_gru_units=48, pos_gru_units=12, merged_gru_units=48, dense1_units=48, seed=1)

# one training sample per byte, with exactly the context the coder will see
dataset = coding_windows(text, tagger, cfg.window)

trainer = Trainer(init_params(cfg), TrainingConfig(seed=1))
start = time.perf_counter()
for epoch in range(1, 61):
    log = trainer.run_epoch(dataset)
    if epoch % 10 == 0:
        acc = evaluate_accuracy(trainer.params, dataset)
        print(f"epoch {epoch}  loss {log.loss:.3f}  accuracy {acc:.3f}  {time.perf_counter() - start:.0f}s")

blob, stats = compress_with_stats(text, trainer.params, tagger)
print(stats.line())
print("order-0 baseline:", baseline_order0(text).line())

# the model itself is far larger than the text it memorized
print(len(params_to_bytes(trainer.params)), "model bytes")

assert decompress(blob, trainer.params, tagger) == text
