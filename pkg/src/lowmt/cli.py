"""Single entry point exposing every pipeline stage as a subcommand.

Commands read an optional sectioned config file (``--config`` or the
LOWMT_CONFIG environment variable), let individual flags override it, log the
resolved configuration and seed, and echo the effective config as JSON next
to their artifacts so every run is reproducible from what it leaves on disk.

Exit codes: 0 success, 1 operational failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import time
from pathlib import Path

from . import bench as bench_mod
from . import corpus as corpus_mod
from . import distill as distill_mod
from . import metrics as metrics_mod
from . import model as model_mod
from . import pseudo as pseudo_mod
from .config import ConfigError, PipelineConfig, load_pipeline_config

logger = logging.getLogger("lowmt")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _echo_path(output: Path) -> Path:
    return output.with_name(output.name + ".config.json")


def _load_config(args) -> PipelineConfig:
    config = load_pipeline_config(getattr(args, "config", None))
    if getattr(args, "seed", None) is not None:
        config = dataclasses.replace(config, seed=args.seed)
        config.train = dataclasses.replace(config.train, seed=args.seed)
        config.experiment = dataclasses.replace(config.experiment, seed=args.seed)
    logger.info("resolved config (seed=%d): %s", config.seed, json.dumps(config.to_dict(), sort_keys=True))
    return config


def _read_lines(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh]


def _resolve(flag_value, config: PipelineConfig, path_key: str, flag_name: str):
    """Flags win; fall back to the [paths] section of the config."""
    if flag_value is not None:
        return flag_value
    configured = config.path(path_key)
    if configured is None:
        raise ConfigError(f"{flag_name} not given and no paths.{path_key} configured")
    return configured


# ---------------------------------------------------------------------------
# subcommand implementations
# ---------------------------------------------------------------------------


def cmd_corpus_filter(args) -> int:
    config = _load_config(args)
    spec = config.length_filter
    if args.min_chars is not None or args.max_chars is not None or args.sides is not None:
        spec = corpus_mod.LengthFilterSpec(
            min_chars=args.min_chars if args.min_chars is not None else spec.min_chars,
            max_chars=args.max_chars if args.max_chars is not None else spec.max_chars,
            sides=tuple(args.sides.split(",")) if args.sides else spec.sides,
        )
    source = _resolve(args.input, config, "corpus", "--input")
    records = corpus_mod.load_corpus(source, format=args.format)
    kept, dropped = corpus_mod.filter_by_length(records, spec)
    corpus_mod.save_corpus(kept, args.output, format=args.format)
    dataclasses.replace(config, length_filter=spec).echo(_echo_path(Path(args.output)))
    print(json.dumps({"kept": len(kept), "dropped": dropped}))
    return EXIT_OK


def cmd_corpus_stats(args) -> int:
    config = _load_config(args)
    source = _resolve(args.input, config, "corpus", "--input")
    records = corpus_mod.load_corpus(source, format=args.format)
    stats = corpus_mod.corpus_stats(records)
    payload = {
        "record_count": stats.record_count,
        "vocab_size": stats.vocab_size,
        "length_histogram": {
            side: {str(k): v for k, v in sorted(hist.items())}
            for side, hist in stats.length_histogram.items()
        },
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.output:
        Path(args.output).write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


def cmd_pseudo_build_dict(args) -> int:
    config = _load_config(args)
    dictionary = pseudo_mod.build_dictionary(_resolve(args.input, config, "dictionary", "--input"))
    with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
        for key in sorted(dictionary.entries):
            fh.write(f"{key}\t{dictionary.entries[key]}\n")
    print(json.dumps({"entries": dictionary.size}))
    return EXIT_OK


def cmd_pseudo_translate(args) -> int:
    config = _load_config(args)
    dictionary = pseudo_mod.build_dictionary(
        _resolve(args.dictionary, config, "dictionary", "--dictionary")
    )
    records = corpus_mod.load_corpus(
        _resolve(args.input, config, "corpus", "--input"), format=args.format
    )
    out, dropped = pseudo_mod.pseudo_translate(records, dictionary, config.eifeler)
    corpus_mod.save_corpus(out, args.output, format=args.format)
    config.echo(_echo_path(Path(args.output)))
    print(json.dumps({"translated": len(out), "dropped": dropped}))
    return EXIT_OK


def cmd_distill_generate(args) -> int:
    config = _load_config(args)
    mapping = pseudo_mod.build_dictionary(args.teacher_dict).entries
    teacher = distill_mod.ToyTeacher(mapping, alpha=args.alpha)
    if args.no_dists:
        teacher.produces_distributions = False
    sources = [s for s in _read_lines(args.sources) if s.strip()]
    records, skipped = distill_mod.generate_soft_targets(teacher, sources)
    distill_mod.save_soft_targets(records, args.output)
    config.echo(_echo_path(Path(args.output)))
    print(json.dumps({"records": len(records), "skipped": len(skipped)}))
    return EXIT_OK


def _train_common(args, config: PipelineConfig, model=None) -> int:
    records = distill_mod.load_soft_targets(args.train)
    train_config = dataclasses.replace(
        config.train,
        max_steps=args.steps if args.steps is not None else config.train.max_steps,
        lr=args.lr if args.lr is not None else config.train.lr,
        batch_size=args.batch_size if args.batch_size is not None else config.train.batch_size,
        temperature=args.temperature if args.temperature is not None else config.train.temperature,
    )
    mode = args.mode if getattr(args, "mode", None) else config.kd_mode
    if mode == "token":
        result = distill_mod.distill_token_level(records, config.model, train_config, model=model)
    else:
        result = distill_mod.distill_sequence_level(records, config.model, train_config, model=model)

    out_dir = Path(_resolve(args.out_dir, config, "output_dir", "--out-dir"))
    out_dir.mkdir(parents=True, exist_ok=True)
    result.model.save(out_dir / "checkpoint.json")
    result.write_loss_curve(out_dir / "loss.csv")
    dataclasses.replace(config, train=train_config).echo(out_dir / "config.json")
    final = result.losses[-1] if result.losses else None
    print(json.dumps({"steps": len(result.losses), "final_loss": final}))
    return EXIT_OK


def cmd_train(args) -> int:
    config = _load_config(args)
    return _train_common(args, config)


def cmd_finetune(args) -> int:
    config = _load_config(args)
    steps = args.steps if args.steps is not None else config.train.second_round_max_steps
    if steps > config.train.second_round_max_steps:
        raise ConfigError(
            f"finetune steps {steps} exceed the second-round cap "
            f"{config.train.second_round_max_steps}"
        )
    args.steps = steps
    model = model_mod.StudentModel.load(args.checkpoint)
    return _train_common(args, config, model=model)


def cmd_evaluate(args) -> int:
    config = _load_config(args)
    hyps = _read_lines(args.hyp)
    refs = _read_lines(args.ref)
    bleu_report = metrics_mod.bleu(hyps, refs, config.bleu)
    chrf_report = metrics_mod.chrf_pp(hyps, refs, config.chrf)
    payload = {
        "bleu": bleu_report.score,
        "chrfpp": chrf_report.score,
        "detail": {"bleu": bleu_report.to_dict(), "chrfpp": chrf_report.to_dict()},
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.output:
        Path(args.output).write_text(text + "\n", encoding="utf-8")
        config.echo(_echo_path(Path(args.output)))
    print(text)
    return EXIT_OK


def _make_translator(spec: str):
    if spec == "echo":
        return (lambda s: s), "echo"
    if spec.startswith("sleep:"):
        delay = float(spec.split(":", 1)[1])
        return (lambda s: time.sleep(delay)), f"sleep:{delay}"
    if spec.startswith("model:"):
        path = spec.split(":", 1)[1]
        student = model_mod.StudentModel.load(path)

        def translate(sentence: str) -> str:
            ids = student.src_vocab.encode(sentence.split())
            out = model_mod.greedy_decode(student, ids, student.config.max_len)
            return " ".join(student.tgt_vocab.decode(out))

        return translate, f"model:{Path(path).name}"
    raise ConfigError(f"unknown translator spec {spec!r} (use echo, sleep:SECS, model:PATH)")


def cmd_bench(args) -> int:
    config = _load_config(args)
    translator, translator_id = _make_translator(args.translator)
    sentences = [s for s in _read_lines(args.sentences) if s.strip()]
    report = bench_mod.bench_translate(
        translator,
        sentences,
        warmup=args.warmup,
        repetitions=args.repetitions,
        translator_id=translator_id,
        workers=args.workers,
    )
    report.save(args.output)
    config.echo(_echo_path(Path(args.output)))
    stats = bench_mod.summarize(report.samples) if report.samples else {}
    print(json.dumps({"complete": report.complete, "seconds_per_sentence": stats}))
    return EXIT_OK


def cmd_experiment(args) -> int:
    config = _load_config(args)
    report = distill_mod.kd_experiment(config.experiment)
    out_dir = Path(_resolve(args.out_dir, config, "output_dir", "--out-dir"))
    out_dir.mkdir(parents=True, exist_ok=True)
    distill_mod.write_experiment_report(report, out_dir / "report.json", out_dir / "report.md")
    config.echo(out_dir / "config.json")
    print(json.dumps({"rows": len(report.rows), "teacher_agreement_bleu": report.teacher_agreement_bleu}))
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="config file (TOML or JSON); "
                        "defaults to $LOWMT_CONFIG when set")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lowmt",
        description="Low-resource MT toolkit: corpus tools, pseudo-translation, "
        "knowledge distillation, scoring, and latency benchmarking.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("corpus-filter", help="drop records outside the length bounds")
    p.add_argument("--input", default=None, help="input corpus file (default: paths.corpus)")
    p.add_argument("--output", required=True, help="filtered corpus file")
    p.add_argument("--format", choices=("jsonl", "tsv"), default="jsonl", help="corpus format")
    p.add_argument("--min-chars", "--min", type=int, default=None,
                   help="minimum characters (inclusive)")
    p.add_argument("--max-chars", "--max", type=int, default=None,
                   help="maximum characters (inclusive)")
    p.add_argument("--sides", default=None, help="comma-separated sides to check (default: all present)")
    _add_common(p)
    p.set_defaults(func=cmd_corpus_filter)

    p = sub.add_parser("corpus-stats", help="record count, length histogram, vocabulary size")
    p.add_argument("--input", default=None, help="input corpus file (default: paths.corpus)")
    p.add_argument("--format", choices=("jsonl", "tsv"), default="jsonl", help="corpus format")
    p.add_argument("--output", default=None, help="optional JSON output file")
    _add_common(p)
    p.set_defaults(func=cmd_corpus_stats)

    p = sub.add_parser("pseudo-build-dict", help="validate and normalize a bilingual dictionary")
    p.add_argument("--input", default=None, help="TSV dictionary (default: paths.dictionary)")
    p.add_argument("--output", required=True, help="normalized dictionary TSV")
    _add_common(p)
    p.set_defaults(func=cmd_pseudo_build_dict)

    p = sub.add_parser("pseudo-translate", help="fill the lrl side from hrl via the dictionary and Eifeler Regel")
    p.add_argument("--input", default=None, help="input corpus with hrl sides (default: paths.corpus)")
    p.add_argument("--output", required=True, help="output corpus with pseudo lrl sides")
    p.add_argument("--dictionary", default=None, help="TSV dictionary (default: paths.dictionary)")
    p.add_argument("--format", choices=("jsonl", "tsv"), default="jsonl", help="corpus format")
    _add_common(p)
    p.set_defaults(func=cmd_pseudo_translate)

    p = sub.add_parser("distill-generate", help="generate soft targets with the toy teacher")
    p.add_argument("--sources", required=True, help="source sentences, one per line")
    p.add_argument("--teacher-dict", required=True, help="TSV mapping defining the toy teacher")
    p.add_argument("--output", required=True, help="soft-target JSONL output")
    p.add_argument("--alpha", type=float, default=0.0, help="teacher smoothing mass in [0, 0.5)")
    p.add_argument("--no-dists", action="store_true", help="emit hypotheses only, no distributions")
    _add_common(p)
    p.set_defaults(func=cmd_distill_generate)

    for name, help_text in (
        ("train", "train a student on soft-target records"),
        ("finetune", "continue training from a checkpoint (second round, capped steps)"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--train", required=True, help="soft-target JSONL training file")
        p.add_argument("--out-dir", default=None, help="output directory for checkpoint.json, loss.csv, config.json (default: paths.output_dir)")
        p.add_argument("--mode", choices=("sequence", "token"), default=None,
                       help="KD mode (default: config distill.mode)")
        p.add_argument("--steps", type=int, default=None, help="number of optimizer steps")
        p.add_argument("--lr", type=float, default=None, help="learning rate")
        p.add_argument("--batch-size", type=int, default=None, help="mini-batch size")
        p.add_argument("--temperature", type=float, default=None, help="soft-target temperature")
        if name == "finetune":
            p.add_argument("--checkpoint", required=True, help="checkpoint.json to continue from")
        _add_common(p)
        p.set_defaults(func=cmd_train if name == "train" else cmd_finetune)

    p = sub.add_parser("evaluate", help="score hypotheses against references (BLEU and chrF++)")
    p.add_argument("--hyp", required=True, help="hypothesis file, one sentence per line")
    p.add_argument("--ref", required=True, help="reference file, one sentence per line")
    p.add_argument("--output", default=None, help="optional JSON report file")
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="per-sentence latency benchmark")
    p.add_argument("--sentences", required=True, help="sentences file, one per line")
    p.add_argument("--translator", required=True, help="echo | sleep:SECS | model:CHECKPOINT")
    p.add_argument("--output", required=True, help="JSON report with raw samples")
    p.add_argument("--warmup", type=int, default=3, help="untimed warmup calls")
    p.add_argument("--repetitions", type=int, default=1, help="timed passes over the sentences")
    p.add_argument("--workers", type=int, default=1, help="must be 1; timing refuses to parallelize")
    _add_common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("experiment", help="run the pseudo/distilled/ground-truth comparison grid")
    p.add_argument("--out-dir", default=None, help="output directory for report.json, report.md, config.json (default: paths.output_dir)")
    _add_common(p)
    p.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"lowmt: config error: {exc}", file=sys.stderr)
        print(parser.format_usage(), file=sys.stderr, end="")
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"lowmt: error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
