"""Command-line front door.

Subcommands: preprocess, featurize, rules, train, evaluate, series, synth.
Exit codes are a stable contract: 0 success, 1 usage, 2 I/O, 3 validation,
4 stale cache. A flat key=value config file can preset any long flag;
explicit flags win.
"""

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .corpus import DOMAINS, load_dataset, save_dataset, synth_corpus
from .digest import atomic_write_text, combine_digests
from .errors import (
    FormatError,
    RweetsError,
    StaleCacheError,
    TrainingDivergedError,
    ValidationError,
)
from .features import FeatureConfig, combo, load_matrix, save_matrix
from .metrics import render_record, render_text
from .models import TrainConfig, cross_validate, make_classifier
from .pipeline import (
    FeatureCache,
    featurize_corpus,
    load_staged,
    run_series,
    save_series_output,
    save_staged,
    train_staged,
)
from .preprocess import (
    DEFAULT_OPS,
    PUNCT_FIRST_OPS,
    PipelineConfig,
    load_clean,
    run_pipeline,
    save_clean,
)
from .rules import match_tweet, rule_classify


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


_CONFIG_COERCERS = {
    "seed": int,
    "cache_dir": str,
    "combo": int,
    "folds": int,
    "clf": str,
    "order": str,
    "threshold": float,
    "min_tokens": int,
    "alpha": float,
    "learning_rate": float,
    "l2_penalty": float,
    "max_epochs": int,
    "tol": float,
    "vectorizer": str,
    "ngrams": str,
    "domain": str,
}


def _load_config_file(path) -> dict:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValidationError(f"{path}: line {lineno}: expected key=value")
            key, _, raw = line.partition("=")
            key = key.strip().replace("-", "_")
            coerce = _CONFIG_COERCERS.get(key, str)
            try:
                values[key] = coerce(raw.strip())
            except ValueError:
                raise ValidationError(f"{path}: line {lineno}: bad value for {key}") from None
    return values


def _apply_config(args: argparse.Namespace) -> None:
    if not getattr(args, "config", None):
        return
    for key, value in _load_config_file(args.config).items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)


def _pipeline_config(args) -> PipelineConfig:
    order = args.order or "default"
    if order not in ("default", "punct-first"):
        raise UsageError(f"--order must be 'default' or 'punct-first', got {order!r}")
    return PipelineConfig(
        ops=DEFAULT_OPS if order == "default" else PUNCT_FIRST_OPS,
        english_threshold=args.threshold if args.threshold is not None else 0.15,
        min_tokens=args.min_tokens if args.min_tokens is not None else 2,
    )


def _feature_config(args) -> FeatureConfig:
    if args.combo is not None:
        if not 1 <= args.combo <= 24:
            raise UsageError(f"--combo must be in 1..24, got {args.combo}")
        return combo(args.combo)
    if args.vectorizer is None and args.ngrams is None:
        raise UsageError("give --combo N or explicit --vectorizer/--ngrams flags")
    vectorizer = args.vectorizer or "tf"
    ngrams = args.ngrams or "1,1"
    try:
        lo, hi = (int(x) for x in ngrams.split(","))
    except ValueError:
        raise UsageError(f"--ngrams expects LO,HI, got {ngrams!r}") from None
    return FeatureConfig(
        vectorizer=vectorizer, ngram_range=(lo, hi), append_rules=bool(args.rules)
    )


def _domain(args):
    name = args.domain or "binary"
    if name not in DOMAINS:
        raise UsageError(f"--domain must be one of {sorted(DOMAINS)}, got {name!r}")
    return DOMAINS[name]


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        learning_rate=args.learning_rate if args.learning_rate is not None else 0.1,
        l2_penalty=args.l2_penalty if args.l2_penalty is not None else 1e-4,
        max_epochs=args.max_epochs if args.max_epochs is not None else 500,
        tol=args.tol if args.tol is not None else 1e-6,
        seed=args.seed if args.seed is not None else 0,
    )


def _add_pipeline_flags(parser):
    parser.add_argument("--order", choices=("default", "punct-first"), default=None,
                        help="cleaning op order (default: default)")
    parser.add_argument("--threshold", type=float, default=None,
                        help="English-evidence ratio threshold (default 0.15)")
    parser.add_argument("--min-tokens", dest="min_tokens", type=int, default=None,
                        help="minimum tokens to keep a tweet (default 2)")


def _add_feature_flags(parser):
    parser.add_argument("--combo", type=int, default=None,
                        help="standard feature combination index, 1..24")
    parser.add_argument("--vectorizer", choices=("tf", "tf-idf"), default=None)
    parser.add_argument("--ngrams", default=None, help="n-gram range as LO,HI")
    parser.add_argument("--rules", action="store_true", help="append rule features")


def _add_train_flags(parser):
    parser.add_argument("--clf", choices=("logreg", "nb"), default=None)
    parser.add_argument("--learning-rate", dest="learning_rate", type=float, default=None)
    parser.add_argument("--l2-penalty", dest="l2_penalty", type=float, default=None)
    parser.add_argument("--max-epochs", dest="max_epochs", type=int, default=None)
    parser.add_argument("--tol", type=float, default=None)
    parser.add_argument("--alpha", type=float, default=None,
                        help="naive Bayes smoothing (default 1.0)")


def build_parser() -> _Parser:
    parser = _Parser(prog="rweets", description=__doc__)
    parser.add_argument("--version", action="version", version=f"rweets {__version__}")
    parser.add_argument("--config", default=None, help="flat key=value config file")
    parser.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
    parser.add_argument("--cache-dir", dest="cache_dir", default=None)
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("preprocess", help="clean a dataset and persist the corpus")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--domain", default=None, choices=sorted(DOMAINS))
    _add_pipeline_flags(p)

    p = sub.add_parser("featurize", help="build and persist a feature matrix")
    p.add_argument("--clean", required=True, help="clean-corpus file from preprocess")
    p.add_argument("--out", required=True, help="matrix output path")
    p.add_argument("--raw", default=None, help="original dataset (needed for rule features)")
    _add_feature_flags(p)
    _add_pipeline_flags(p)

    p = sub.add_parser("rules", help="rule-based rweet classification")
    p.add_argument("action", nargs="?", default="classify", choices=("classify",))
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)

    p = sub.add_parser("train", help="train the staged classifier pair")
    p.add_argument("--binary", required=True, help="binary-labeled dataset (stage 1)")
    p.add_argument("--categories", required=True, help="categorical dataset (stage 2)")
    p.add_argument("--out", required=True, help="output directory for the staged model")
    _add_feature_flags(p)
    _add_pipeline_flags(p)
    _add_train_flags(p)

    p = sub.add_parser("evaluate", help="stratified cross-validation report")
    p.add_argument("--input", required=True)
    p.add_argument("--domain", default=None, choices=sorted(DOMAINS))
    p.add_argument("--folds", type=int, default=None, help="fold count (default 5)")
    p.add_argument("--out", default=None, help="write the machine-readable report here")
    _add_feature_flags(p)
    _add_pipeline_flags(p)
    _add_train_flags(p)

    p = sub.add_parser("series", help="identify, filter, and categorize")
    p.add_argument("--model", default=None, help="staged model directory")
    p.add_argument("--input", default=None)
    p.add_argument("--output", required=True)
    p.add_argument("--binary", default=None, help="train stage 1 on this dataset first")
    p.add_argument("--categories", default=None, help="train stage 2 on this dataset first")
    p.add_argument("--resubstitution", action="store_true",
                   help="predict the stage-1 training data back (uses --binary as input)")
    _add_feature_flags(p)
    _add_pipeline_flags(p)
    _add_train_flags(p)

    p = sub.add_parser("synth", help="generate a deterministic synthetic dataset")
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--domain", default=None, choices=sorted(DOMAINS))
    p.add_argument("--out", required=True)

    return parser


# --- commands ----------------------------------------------------------------


def _load_texts(path) -> dict[str, str]:
    """id -> text map from a JSONL file, ignoring labels and extra fields."""
    texts = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: line {lineno}: {exc.msg}")
            if not isinstance(record.get("id"), str) or not isinstance(record.get("text"), str):
                raise ValidationError(f"{path}: line {lineno}: needs 'id' and 'text'")
            if record["id"] in texts:
                raise ValidationError(f"{path}: line {lineno}: duplicate tweet id {record['id']!r}")
            texts[record["id"]] = record["text"]
    return texts


def cmd_preprocess(args) -> int:
    config = _pipeline_config(args)
    dataset = load_dataset(args.input, _domain(args))
    corpus, report = run_pipeline(dataset, config)
    save_clean(corpus, args.output)
    print(f"cleaned {report.input_count} -> {report.output_count} tweets")
    for stage, count in report.removed_by_stage.items():
        print(f"  removed at {stage}: {count}")
    for stage, delta in report.token_deltas.items():
        print(f"  token delta at {stage}: {delta:+d}")
    if args.verbose:
        print(f"  pipeline digest: {config.digest}")
    return 0


def cmd_featurize(args) -> int:
    pipeline_config = _pipeline_config(args)
    feature_config = _feature_config(args)
    corpus = load_clean(args.clean, pipeline_config)
    # the artifact digest covers the feature config AND the cleaned input
    # (which itself folds in the pipeline and stopword-list digests), so any
    # upstream change invalidates this matrix
    artifact_digest = combine_digests(feature_config.digest, corpus.content_digest())
    out = Path(args.out)
    if out.exists():
        try:
            load_matrix(out, feature_config, digest=artifact_digest)
        except (FormatError, StaleCacheError, FileNotFoundError):
            pass  # stale or damaged product: rebuild below
        else:
            print(f"cache hit: {out} is current for digest {artifact_digest}")
            return 0
    raw = None
    if feature_config.append_rules:
        if args.raw is None:
            raise UsageError("rule features need --raw pointing at the original dataset")
        raw = _load_texts(args.raw)
    fm = featurize_corpus(corpus, feature_config, raw)
    save_matrix(fm, out, digest=artifact_digest)
    print(
        f"wrote {fm.matrix.rows}x{fm.matrix.cols} matrix ({fm.matrix.nnz} nonzeros) to {out}"
    )
    print("note: vocabulary built on the full corpus (cache precompute, not a CV fit)")
    return 0


def cmd_rules(args) -> int:
    lines_out = []
    with open(args.input, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{args.input}: line {lineno}: {exc.msg}")
            text = record.get("text")
            if not isinstance(text, str):
                raise ValidationError(f"{args.input}: line {lineno}: missing 'text'")
            record["rule_label"] = rule_classify(text)
            record["rule_bits"] = [int(bit) for bit in match_tweet(text)]
            lines_out.append(json.dumps(record, ensure_ascii=False))
    atomic_write_text(args.output, "".join(l + "\n" for l in lines_out))
    print(f"classified {len(lines_out)} tweets -> {args.output}")
    return 0


def cmd_train(args) -> int:
    from .corpus import BINARY, CATEGORICAL

    d1 = load_dataset(args.binary, BINARY)
    d2 = load_dataset(args.categories, CATEGORICAL)
    staged, (r1, r2) = train_staged(
        d1,
        d2,
        _feature_config(args),
        train_config=_train_config(args),
        pipeline_config=_pipeline_config(args),
        classifier=args.clf or "logreg",
        alpha=args.alpha if args.alpha is not None else 1.0,
    )
    save_staged(staged, args.out)
    print(f"identifier trained on {r1.output_count} cleaned tweets")
    print(f"categorizer trained on {r2.output_count} cleaned tweets")
    print(f"staged model written to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    domain = _domain(args)
    dataset = load_dataset(args.input, domain)
    dataset.require_labeled()
    corpus, _ = run_pipeline(dataset, _pipeline_config(args))
    feature_config = _feature_config(args)
    train_config = _train_config(args)
    clf_name = args.clf or "logreg"
    alpha = args.alpha if args.alpha is not None else 1.0
    result = cross_validate(
        lambda: make_classifier(clf_name, train_config, alpha),
        corpus,
        domain,
        feature_config,
        k=args.folds if args.folds is not None else 5,
        seed=args.seed if args.seed is not None else 0,
        raw_texts=dataset.texts_by_id(),
    )
    sys.stdout.write(render_text(result.pooled))
    if args.out:
        atomic_write_text(args.out, render_record(result.pooled))
        print(f"report written to {args.out}")
    return 0


def cmd_series(args) -> int:
    from .corpus import BINARY, CATEGORICAL

    if args.model:
        staged = load_staged(args.model)
    else:
        if not (args.binary and args.categories):
            raise UsageError("series needs --model or both --binary and --categories")
        d1 = load_dataset(args.binary, BINARY)
        d2 = load_dataset(args.categories, CATEGORICAL)
        staged, _ = train_staged(
            d1,
            d2,
            _feature_config(args),
            train_config=_train_config(args),
            pipeline_config=_pipeline_config(args),
            classifier=args.clf or "logreg",
            alpha=args.alpha if args.alpha is not None else 1.0,
        )
    if args.resubstitution:
        if not args.binary:
            raise UsageError("--resubstitution needs --binary (it predicts that data back)")
        input_path = args.binary
    elif args.input:
        input_path = args.input
    else:
        raise UsageError("series needs --input (or --resubstitution)")
    # input labels, if any, are ignored: the series only needs id and text
    from .corpus import Dataset, RawTweet

    texts = _load_texts(input_path)
    dataset = Dataset(BINARY, tuple(RawTweet(i, t) for i, t in texts.items()))
    cache = FeatureCache(args.cache_dir) if args.cache_dir else None
    results = run_series(dataset, staged, cache)
    save_series_output(results, args.output)
    n_rweets = sum(1 for r in results if r.stage1 == "rweet")
    print(f"{len(results)} tweets classified; {n_rweets} rweets categorized")
    if cache is not None and args.verbose:
        print(f"cache: {cache.hits} hits, {cache.misses} misses, {cache.built} built")
    return 0


def cmd_synth(args) -> int:
    dataset = synth_corpus(
        args.seed if args.seed is not None else 0, args.size, _domain(args)
    )
    save_dataset(dataset, args.out)
    print(f"wrote {len(dataset)} synthetic tweets to {args.out}")
    return 0


_COMMANDS = {
    "preprocess": cmd_preprocess,
    "featurize": cmd_featurize,
    "rules": cmd_rules,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "series": cmd_series,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("no command given (see --help)")
        _apply_config(args)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except StaleCacheError as exc:
        print(f"stale cache: {exc}", file=sys.stderr)
        return 4
    except (ValidationError, FormatError, TrainingDivergedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except RweetsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
