"""Lossless text compression with a dual-input (characters + part-of-speech) GRU model.

Modules:

* ``coder``      exact rational arithmetic coder and streaming integer range coder
* ``model``      network parameters, forward pass, model file format
* ``training``   sliding windows, loss, backpropagation through time, RMSprop
* ``tagging``    49-tag inventory, causal lexicon tagger, tag files
* ``compressor`` container format, compress / decompress, bpc evaluation
* ``cli``        the ``nczip`` command
"""
__version__ = "0.1.0"

from .coder import FixedModel, QuantizedPmf, quantize_pmf, rational_decode, rational_encode
from .compressor import baseline_order0, compress, decompress, evaluate_bpc
from .model import ModelConfig, NetworkParams, forward, init_params, load_params, save_params
from .tagging import TAGSET, default_tagger, tag_prefix
from .training import TrainingConfig, evaluate_accuracy, make_windows, train

__all__ = [
    "FixedModel",
    "QuantizedPmf",
    "quantize_pmf",
    "rational_encode",
    "rational_decode",
    "ModelConfig",
    "NetworkParams",
    "init_params",
    "forward",
    "load_params",
    "save_params",
    "TrainingConfig",
    "make_windows",
    "train",
    "evaluate_accuracy",
    "TAGSET",
    "default_tagger",
    "tag_prefix",
    "compress",
    "decompress",
    "evaluate_bpc",
    "baseline_order0",
]
