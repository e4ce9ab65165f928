"""Command-line interface: ``segcrf {train,tag,convert,ensemble,eval}``.

Exit codes: 0 success, 1 usage error, 2 data error.  Logs go to stderr.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .corpus import (
    CorpusFormatError,
    SpanSegmentation,
    TagScheme,
    collect_pos_inventory,
    cross_scheme,
    format_words,
    read_raw_text,
    read_segmented_corpus,
    read_tag_file,
    sentence_words,
    spans_to_tags,
    split_token,
    tags_to_spans,
    write_dataset,
)
from .coupled import convert_annotations, load_mapping, side_tags
from .crf import Hyperparameters, load_model, save_model, tag
from .ensemble import ensemble
from .evaluation import score_files
from .features import TemplateConfig
from .lexicon import LexiconError, load_lexicon

logger = logging.getLogger("segcrf")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# -- configuration -----------------------------------------------------------

DEFAULTS = {
    "pipeline": "baseline",
    "train": "",
    "dev": "",
    "joint": "false",
    "source_train": "",
    "source_dev": "",
    "source_joint": "false",
    "lexicon_path": "",
    "mapping": "",
    "baseline": "true",
    "lexicon": "",
    "iterations": "20",
    "eta0": "0.1",
    "l2": "0.0001",
    "seed": "0",
    "sample_count": "5000",
    "cutoff": "1",
    "lexicon_cap": "6",
    "output": "",
    "threads": "1",
}

PIPELINES = ("baseline", "lexicon", "guide", "coupled")
_PATH_KEYS = ("train", "dev", "source_train", "source_dev", "lexicon_path", "mapping", "output")


def parse_config(text: str, source: str = "<config>") -> dict:
    """Flat ``key = value`` lines with ``#`` comments."""
    cfg = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise UsageError(f"{source}:{lineno}: expected key = value")
        if key not in DEFAULTS:
            raise UsageError(f"{source}:{lineno}: unknown configuration key {key!r}")
        cfg[key] = value.strip()
    return cfg


def apply_overrides(cfg: dict, overrides) -> dict:
    cfg = dict(cfg)
    for item in overrides or ():
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep:
            raise UsageError(f"--set expects key=value, got {item!r}")
        if key not in DEFAULTS:
            raise UsageError(f"unknown configuration key {key!r}")
        cfg[key] = value.strip()
    return cfg


def _as_bool(cfg, key):
    v = cfg[key].lower()
    if v not in ("true", "false", "1", "0", "yes", "no"):
        raise UsageError(f"{key}: expected a boolean, got {cfg[key]!r}")
    return v in ("true", "1", "yes")


def _as_num(cfg, key, kind):
    try:
        return kind(cfg[key])
    except ValueError:
        raise UsageError(f"{key}: expected a {kind.__name__}, got {cfg[key]!r}") from None


def _paths(value):
    return [p.strip() for p in value.split(",") if p.strip()]


@dataclass
class TrainSettings:
    cfg: dict
    templates: TemplateConfig
    hp: Hyperparameters


def resolve_config(cfg: dict, base_dir: Path) -> TrainSettings:
    full = dict(DEFAULTS)
    full.update(cfg)
    for key in _PATH_KEYS:
        full[key] = ",".join(str(base_dir / p) if not os.path.isabs(p) else p
                             for p in _paths(full[key]))
    if full["pipeline"] not in PIPELINES:
        raise UsageError(f"pipeline must be one of {', '.join(PIPELINES)}")
    if not full["train"]:
        raise UsageError("configuration names no training data (key 'train')")
    if not full["output"]:
        raise UsageError("configuration names no model output (key 'output')")
    pipeline = full["pipeline"]
    use_lex = _as_bool(full, "lexicon") if full["lexicon"] else pipeline == "lexicon"
    if use_lex and not full["lexicon_path"]:
        raise UsageError("lexicon features need 'lexicon_path'")
    if pipeline in ("guide", "coupled") and not full["source_train"]:
        raise UsageError(f"the {pipeline} pipeline needs 'source_train'")
    templates = TemplateConfig(baseline=_as_bool(full, "baseline"), lexicon=use_lex,
                               lexicon_cap=_as_num(full, "lexicon_cap", int),
                               cutoff=_as_num(full, "cutoff", int))
    hp = Hyperparameters(iterations=_as_num(full, "iterations", int),
                         eta0=_as_num(full, "eta0", float), l2=_as_num(full, "l2", float),
                         seed=_as_num(full, "seed", int),
                         sample_count=_as_num(full, "sample_count", int))
    return TrainSettings(full, templates, hp)


def _scheme_for(paths, joint):
    if joint:
        return cross_scheme(TagScheme.bies(), collect_pos_inventory(paths))
    return TagScheme.bies()


def _read_all(paths, scheme):
    return [read_segmented_corpus(p, scheme) for p in paths]


# -- subcommands ---------------------------------------------------------------

def cmd_train(args) -> int:
    from .pipelines import coupled_pipeline, guide_pipeline, train_baseline

    config_path = Path(args.config)
    try:
        text = config_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read configuration: {exc}") from None
    cfg = apply_overrides(parse_config(text, str(config_path)), args.set)
    if args.output:
        cfg["output"] = str(Path(args.output).resolve())
    st = resolve_config(cfg, config_path.parent)
    c = st.cfg
    out = Path(c["output"])
    log_handler = logging.FileHandler(str(out) + ".log", mode="w", encoding="utf-8")
    log_handler.setFormatter(logging.Formatter("%(message)s"))
    logging.getLogger("segcrf").addHandler(log_handler)
    try:
        logger.info("configuration:")
        for k in sorted(c):
            logger.info("  %s = %s", k, c[k])
        train_paths = _paths(c["train"])
        scheme = _scheme_for(train_paths, _as_bool(c, "joint"))
        train_sets = _read_all(train_paths, scheme)
        dev = read_segmented_corpus(c["dev"], scheme) if c["dev"] else None
        lexicon = load_lexicon(c["lexicon_path"]) if st.templates.lexicon else None
        pipeline = c["pipeline"]
        if pipeline in ("baseline", "lexicon"):
            model = train_baseline(train_sets, st.templates, st.hp, dev, lexicon)
        else:
            src_paths = _paths(c["source_train"])
            src_scheme = _scheme_for(src_paths, _as_bool(c, "source_joint"))
            src_sets = _read_all(src_paths, src_scheme)
            if len(train_sets) != 1:
                raise UsageError(f"the {pipeline} pipeline takes exactly one target training file")
            if pipeline == "guide":
                src_dev = read_segmented_corpus(c["source_dev"], src_scheme) if c["source_dev"] else None
                model = guide_pipeline(src_sets, train_sets[0], st.templates, st.hp, dev, src_dev,
                                       lexicon, threads=_as_num(c, "threads", int))
            else:
                mapping = load_mapping(c["mapping"]) if c["mapping"] else None
                model = coupled_pipeline(train_sets[0], src_sets, mapping, st.templates, st.hp,
                                         dev, lexicon)
        if lexicon is not None:
            model.lexicon_path = os.path.relpath(c["lexicon_path"], out.parent)
        if model.source_model is not None:
            src_out = Path(str(out) + ".source")
            save_model(model.source_model, src_out)
            model.source_model_path = src_out.name
        save_model(model, out)
        logger.info("wrote %s", out)
    finally:
        logging.getLogger("segcrf").removeHandler(log_handler)
        log_handler.close()
    return 0


def _load_for_tagging(args):
    model = load_model(args.model)
    if args.lexicon:
        model.lexicon = load_lexicon(args.lexicon)
    if getattr(args, "source_model", None):
        model.source_model = load_model(args.source_model)
    if model.config.lexicon and model.lexicon is None:
        raise DataError("model uses lexicon features; pass --lexicon")
    if model.config.guide and model.source_model is None:
        raise DataError(f"guide model needs its paired source model "
                        f"({model.source_model_path or 'not recorded'}); pass --source-model")
    return model


def _pmap(fn, items, threads):
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _open_out(path):
    if path:
        return open(path, "w", encoding="utf-8", newline="\n")
    return _Stdout()


class _Stdout:
    def write(self, s):
        sys.stdout.write(s)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        sys.stdout.flush()


def cmd_tag(args) -> int:
    model = _load_for_tagging(args)
    sentences = read_raw_text(args.input)

    def one(x):
        if model.bundle is not None:
            return side_tags(model, x, args.side)
        return tag(model, x)

    results = _pmap(one, sentences, args.threads)
    with _open_out(args.output) as fh:
        for x, tags in zip(sentences, results):
            if args.emit_tags:
                fh.write(" ".join(tags) + "\n")
            else:
                fh.write(" ".join(format_words(x, tags_to_spans(tags))) + "\n")
    return 0


def cmd_convert(args) -> int:
    model = load_model(args.model)
    if model.bundle is None:
        raise DataError("conversion needs a coupled model")
    if model.config.lexicon:
        if args.lexicon:
            model.lexicon = load_lexicon(args.lexicon)
        if model.lexicon is None:
            raise DataError("model uses lexicon features; pass --lexicon")
    side_in = args.fixed_side
    dataset = read_segmented_corpus(args.input, model.bundle.side_scheme(side_in))
    converted, report = convert_annotations(model, dataset, args.threshold, side_in, args.threads)
    if args.output:
        write_dataset(args.output, converted)
    else:
        for s in converted:
            sys.stdout.write(" ".join(sentence_words(s, converted.scheme)) + "\n")
    lines = [f"kept\t{report.kept}", f"dropped\t{report.dropped}",
             "dropped lines\t" + " ".join(map(str, report.dropped_lines))]
    if args.report:
        Path(args.report).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print("\n".join(lines), file=sys.stderr)
    return 0


def _read_voter(path, fmt, joint):
    if fmt == "tags":
        return read_tag_file(path)
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            tokens = line.split()
            if not tokens:
                continue
            words = [split_token(t, joint, path, lineno)[0] for t in tokens]
            out.append((words, spans_to_tags(SpanSegmentation.from_words(words))))
    return out


def cmd_ensemble(args) -> int:
    voters = [_read_voter(p, args.input_format, args.joint) for p in args.inputs]
    counts = {len(v) for v in voters}
    if len(counts) != 1:
        raise DataError("ensemble inputs have different numbers of sentences")
    if args.input_format == "tags":
        if args.text:
            chars = read_raw_text(args.text)
            if len(chars) != len(voters[0]):
                raise DataError("--text has a different number of sentences than the inputs")
        elif not args.emit_tags:
            raise UsageError("tag-file inputs need --text for segmented output (or use --emit-tags)")
        else:
            chars = None
        tag_seqs = voters
    else:
        chars = ["".join(v[0]) for v in voters[0]]
        for v in voters[1:]:
            for k, (words, _) in enumerate(v):
                if "".join(words) != chars[k]:
                    raise DataError(f"ensemble inputs disagree on the characters of sentence {k + 1}")
        tag_seqs = [[t for _, t in v] for v in voters]
    with _open_out(args.output) as fh:
        for k in range(len(tag_seqs[0])):
            outputs = [seqs[k] for seqs in tag_seqs]
            if len({len(o) for o in outputs}) != 1:
                raise DataError(f"sentence {k + 1}: inputs differ in length")
            if chars is not None and len(chars[k]) != len(outputs[0]):
                raise DataError(f"sentence {k + 1}: text and tags differ in length")
            merged = ensemble(outputs)
            if args.emit_tags:
                fh.write(" ".join(merged) + "\n")
            else:
                fh.write(" ".join(tags_to_spans(merged).words(chars[k])) + "\n")
    return 0


def cmd_eval(args) -> int:
    report = score_files(args.gold, args.pred, args.joint)
    text = report.format()
    if args.per_sentence:
        rows = [f"{k + 1}\t{s.gold}\t{s.pred}\t{s.correct}\t{100 * s.f1:.2f}"
                for k, s in enumerate(report.sentences)]
        text = "\n".join(["#sentence\tgold\tpred\tcorrect\tF"] + rows + [text])
    with _open_out(args.output) as fh:
        fh.write(text + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="segcrf", description="CRF word segmentation: train, tag, convert, ensemble, eval.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train a model from a configuration file")
    p.add_argument("--config", required=True)
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    p.add_argument("--output", help="model path (overrides the config)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("tag", help="segment raw text, one sentence per line")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    p.add_argument("--lexicon")
    p.add_argument("--source-model")
    p.add_argument("--emit-tags", action="store_true", help="write tag sequences instead of words")
    p.add_argument("--side", choices=("A", "B"), default="A", help="side reported by coupled models")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_tag)

    p = sub.add_parser("convert", help="convert a corpus to the other standard of a coupled model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True, help="segmented corpus in the fixed side's standard")
    p.add_argument("--output")
    p.add_argument("--threshold", type=float, default=0.8)
    p.add_argument("--fixed-side", choices=("A", "B"), default="B")
    p.add_argument("--lexicon")
    p.add_argument("--report")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("ensemble", help="merge-then-re-decode several outputs")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--input-format", choices=("segmented", "tags"), default="segmented")
    p.add_argument("--text", help="raw text matching tag-file inputs")
    p.add_argument("--joint", action="store_true", help="segmented inputs carry word_POS tokens")
    p.add_argument("--emit-tags", action="store_true")
    p.add_argument("--output")
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("eval", help="score a segmented corpus against gold")
    p.add_argument("gold")
    p.add_argument("pred")
    p.add_argument("--joint", action="store_true", help="word_POS files; labels must match")
    p.add_argument("--per-sentence", action="store_true")
    p.add_argument("--output")
    p.add_argument("--threads", type=int, default=1, help="upper bound on workers; scoring uses one")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    root = logging.getLogger("segcrf")
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root.addHandler(handler)
    root.setLevel(logging.DEBUG if args.verbose else logging.INFO)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"segcrf: error: {exc}", file=sys.stderr)
        return 1
    except (DataError, CorpusFormatError, LexiconError, ValueError, KeyError, OSError) as exc:
        print(f"segcrf: error: {exc}", file=sys.stderr)
        return 2
    finally:
        root.removeHandler(handler)


if __name__ == "__main__":
    sys.exit(main())
