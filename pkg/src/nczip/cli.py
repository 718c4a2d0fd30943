"""Command-line interface.

    nczip train CORPUS --model OUT [--epochs N ...]
    nczip compress IN OUT --model M [--no-pos]
    nczip decompress IN OUT --model M
    nczip eval TEXT --model M
    nczip gradcheck
    nczip tags [TEXT]

Settings come from ``--config FILE`` (``key = value`` lines, ``#`` comments)
and are overridden by flags. Keys are the fields of ``ModelConfig`` and
``TrainingConfig`` plus ``corpus``, ``lexicon``, ``tag_file``, ``model``,
``no_pos`` and ``coding_windows``.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .coder import CorruptStreamError
from .compressor import (
    ContainerError,
    ModelMismatchError,
    baseline_order0,
    coding_windows,
    compress_with_stats,
    decompress,
    evaluate_bpc,
)
from .model import ModelConfig, ModelFormatError, init_params, load_params, save_params
from .tagging import (
    DEFAULT_SUFFIX_RULES,
    TAGSET,
    TagFileError,
    default_tagger,
    iter_words,
    load_lexicon,
    load_tag_file,
    tag_prefix,
)
from .training import (
    TrainingConfig,
    WindowSample,
    backward,
    evaluate_accuracy,
    grad_check,
    make_windows,
    train,
)

log = logging.getLogger("nczip")

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_MODEL_MISMATCH = 3
EXIT_CORRUPT = 4

PATH_KEYS = ("corpus", "lexicon", "tag_file", "model")
BOOL_KEYS = ("no_pos", "coding_windows")
MODEL_KEYS = {f.name: f for f in dataclasses.fields(ModelConfig)}
TRAIN_KEYS = {f.name: f for f in dataclasses.fields(TrainingConfig)}


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE):
        super().__init__(message)
        self.code = code


def read_config(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise CliError(f"cannot read config {path}: {e.strerror}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or not key:
            raise CliError(f"{path}:{lineno}: expected 'key = value'")
        if key not in MODEL_KEYS and key not in TRAIN_KEYS and key not in PATH_KEYS + BOOL_KEYS:
            raise CliError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value.strip()
    return out


def _convert(key: str, value):
    if value is None:
        return None
    field = MODEL_KEYS.get(key) or TRAIN_KEYS.get(key)
    if key in BOOL_KEYS:
        if isinstance(value, bool):
            return value
        return str(value).lower() in ("1", "true", "yes", "on")
    if field is None:
        return value
    typ = float if field.type in ("float", float) else int
    try:
        return typ(value)
    except ValueError:
        raise CliError(f"bad value for {key}: {value!r}") from None


def resolve_settings(args) -> dict:
    settings = read_config(args.config) if getattr(args, "config", None) else {}
    for key in list(MODEL_KEYS) + list(TRAIN_KEYS) + list(PATH_KEYS) + list(BOOL_KEYS):
        value = getattr(args, key, None)
        if value is not None and value is not False:
            settings[key] = value
    return {k: _convert(k, v) for k, v in settings.items()}


def model_config(settings) -> ModelConfig:
    kw = {k: settings[k] for k in MODEL_KEYS if k in settings}
    try:
        return ModelConfig(**kw)
    except ValueError as e:
        raise CliError(str(e)) from None


def training_config(settings) -> TrainingConfig:
    kw = {k: settings[k] for k in TRAIN_KEYS if k in settings}
    try:
        return TrainingConfig(**kw)
    except ValueError as e:
        raise CliError(str(e)) from None


def _existing(path, role: str) -> Path:
    if path is None:
        raise CliError(f"no {role} given")
    p = Path(path)
    if not p.is_file():
        raise CliError(f"{role} not found: {p}")
    return p


def build_tagger(settings):
    if settings.get("lexicon"):
        rules = tuple((s, TAGSET.id(t)) for s, t in DEFAULT_SUFFIX_RULES)
        try:
            return load_lexicon(_existing(settings["lexicon"], "lexicon"), rules)
        except TagFileError as e:
            raise CliError(str(e)) from None
    return default_tagger()


def _load_model(settings):
    path = _existing(settings.get("model"), "model file")
    try:
        return load_params(path)
    except ModelFormatError as e:
        raise CliError(f"{path}: {e}", EXIT_CORRUPT) from None


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_train(settings, out) -> int:
    corpus = _existing(settings.get("corpus"), "corpus")
    model_out = settings.get("model")
    if not model_out:
        raise CliError("no output model path (--model)")
    text = corpus.read_bytes()
    mcfg = model_config(settings)
    tcfg = training_config(settings)
    if len(text) < mcfg.window + 1:
        raise CliError(f"corpus {corpus} has {len(text)} bytes; need at least {mcfg.window + 1}")
    use_pos = not settings.get("no_pos", False)
    tagger = build_tagger(settings)
    if settings.get("coding_windows"):
        dataset = coding_windows(text, tagger, mcfg.window, use_pos=use_pos)
    else:
        if settings.get("tag_file"):
            try:
                tags = load_tag_file(_existing(settings["tag_file"], "tag file"), text)
            except TagFileError as e:
                raise CliError(str(e)) from None
        else:
            tags = tag_prefix(tagger, text)
        dataset = make_windows(text, tags, mcfg.window, tcfg.stride)
    params = init_params(mcfg)
    params, _ = train(params, dataset, tcfg, use_tags=use_pos, on_epoch=lambda e: print(e.line(), file=out, flush=True))
    save_params(params, model_out)
    return EXIT_OK


def cmd_compress(settings, src, dst, out) -> int:
    params = _load_model(settings)
    text = _existing(src, "input file").read_bytes()
    blob, stats = compress_with_stats(text, params, build_tagger(settings), use_pos=not settings.get("no_pos", False))
    Path(dst).write_bytes(blob)
    print(stats.line(), file=out)
    return EXIT_OK


def cmd_decompress(settings, src, dst, out) -> int:
    params = _load_model(settings)
    blob = _existing(src, "input file").read_bytes()
    try:
        text = decompress(blob, params, build_tagger(settings))
    except ModelMismatchError as e:
        raise CliError(str(e), EXIT_MODEL_MISMATCH) from None
    except (ContainerError, CorruptStreamError) as e:
        raise CliError(f"corrupt container: {e}", EXIT_CORRUPT) from None
    Path(dst).write_bytes(text)
    print(f"restored {len(text)} bytes", file=out)
    return EXIT_OK


def cmd_eval(settings, src, out) -> int:
    params = _load_model(settings)
    text = _existing(src, "input file").read_bytes()
    use_pos = not settings.get("no_pos", False)
    tagger = build_tagger(settings)
    stats = evaluate_bpc(text, params, tagger, use_pos=use_pos)
    print(f"model\t{stats.line()}", file=out)
    print(f"order0\t{baseline_order0(text).line()}", file=out)
    if text:
        # the same padded, causally tagged contexts the compressor sees
        ds = coding_windows(text, tagger, params.config.window, use_pos=use_pos)
        print(f"accuracy\t{evaluate_accuracy(params, ds, use_tags=use_pos):.6f}", file=out)
    return EXIT_OK


def _corrupted_backward(params, trace, target, out=None):
    g = backward(params, trace, target, out)
    g.merged_gru.u_h *= 1.01
    return g


GRADCHECK_CONFIG = ModelConfig(
    window=5, char_gru_units=4, pos_gru_units=4, merged_gru_units=4, dense1_units=8, dropout_rho=0.0
)


def cmd_gradcheck(settings, out, corrupt: bool = False) -> int:
    seed = int(settings.get("seed", 0))
    params = init_params(GRADCHECK_CONFIG.replace(seed=seed))
    rng = np.random.default_rng(seed)
    w = GRADCHECK_CONFIG.window
    sample = WindowSample(
        bytes(rng.integers(0, 256, w, dtype=np.uint8)),
        tuple(int(t) for t in rng.integers(0, len(TAGSET), w)),
        int(rng.integers(0, 256)),
    )
    bw = _corrupted_backward if corrupt else backward
    errors = {}
    for h in (1e-4, 1e-5, 1e-6):
        errors[h] = grad_check(params, sample, h, use_tags=not settings.get("no_pos", False), backward_fn=bw)
        print(f"h={h:g}\tmax_rel_error={errors[h]:.3e}", file=out)
    ok = errors[1e-5] < 1e-4
    print(f"{'PASS' if ok else 'FAIL'}: max relative error {errors[1e-5]:.3e} at h=1e-5 (threshold 1e-4)", file=out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_tags(settings, src, out) -> int:
    if src is None:
        for i, name in enumerate(TAGSET.names):
            print(f"{i}\t{name}", file=out)
        return EXIT_OK
    text = _existing(src, "input file").read_bytes()
    tagger = build_tagger(settings)
    for s, e in iter_words(text):
        word = text[s:e].decode("ascii")
        print(f"{word}\t{TAGSET.name(tagger(word))}", file=out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _common(sub_defaults: bool) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    d = argparse.SUPPRESS if sub_defaults else None
    p.add_argument("--config", default=d, help="key = value settings file")
    p.add_argument("--seed", type=int, default=d)
    p.add_argument("--no-pos", dest="no_pos", action="store_true", default=d, help="zero the POS input channel")
    p.add_argument("--model", default=d, help="model file (output for train, input otherwise)")
    p.add_argument("--lexicon", default=d, help="word<TAB>tag lexicon for the built-in tagger")
    return p


def _config_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("model / training settings")
    for name, f in {**MODEL_KEYS, **TRAIN_KEYS}.items():
        if name == "seed":
            continue
        typ = float if f.type in ("float", float) else int
        g.add_argument(f"--{name.replace('_', '-')}", dest=name, type=typ, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nczip", description=__doc__.split("\n")[0], parents=[_common(False)])
    parser.add_argument("--version", action="version", version=f"nczip {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common(True)

    p = sub.add_parser("train", parents=[common], help="train a model on a corpus")
    p.add_argument("corpus", nargs="?")
    p.add_argument("--tag-file", dest="tag_file", help="external word<TAB>tag file for the corpus")
    p.add_argument("--coding-windows", dest="coding_windows", action="store_true", default=None,
                   help="train on the padded, causally tagged contexts that compress uses")
    _config_flags(p)

    for name in ("compress", "decompress"):
        p = sub.add_parser(name, parents=[common], help=f"{name} a file")
        p.add_argument("input")
        p.add_argument("output")

    p = sub.add_parser("eval", parents=[common], help="bits per character and accuracy on a text")
    p.add_argument("input")

    p = sub.add_parser("gradcheck", parents=[common], help="compare BPTT gradients with finite differences")
    p.add_argument("--corrupt-backward", action="store_true", help=argparse.SUPPRESS)

    p = sub.add_parser("tags", parents=[common], help="list the tag set, or tag a text file")
    p.add_argument("input", nargs="?")
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        settings = resolve_settings(args)
        if args.command == "train":
            return cmd_train(settings, out)
        if args.command == "compress":
            return cmd_compress(settings, args.input, args.output, out)
        if args.command == "decompress":
            return cmd_decompress(settings, args.input, args.output, out)
        if args.command == "eval":
            return cmd_eval(settings, args.input, out)
        if args.command == "gradcheck":
            return cmd_gradcheck(settings, out, corrupt=args.corrupt_backward)
        if args.command == "tags":
            return cmd_tags(settings, args.input, out)
    except CliError as e:
        print(f"nczip: error: {e}", file=sys.stderr)
        return e.code
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
