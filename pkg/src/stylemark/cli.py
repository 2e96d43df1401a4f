"""Command line entry point.

Every run is fully determined by flags plus an optional TOML config file;
flags win on conflict. Exit codes: 0 success, 1 usage error, 2 data/IO
error. ``detect`` always exits 0 on success; the verdict lives in the
printed JSON, not the exit code.
"""

from __future__ import annotations

import argparse
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path

from . import bridge
from .attack import AttackConfig, AttackError, load_synonyms, paraphrase_attack
from .detection import detect
from .generation import (
    FEATURES,
    ToyModel,
    WatermarkConfig,
    generate,
    train_toy_model,
)
from .harness import (
    ALL_SUBSETS,
    ExperimentSpec,
    ablate_lengths,
    run_experiment,
    subset_name,
)
from .norms import NormsError, load_class_frequencies, load_norms

USAGE_ERROR = 1
DATA_ERROR = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stylemark", description=__doc__)
    parser.add_argument("--config", help="TOML file with defaults for any flag")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-toy", help="train the toy n-gram model")
    p.add_argument("--corpus", required=True)
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--smoothing", type=float, default=1.0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("generate", help="watermarked generation with the toy model")
    p.add_argument("--model", required=True)
    p.add_argument("--prompt")
    p.add_argument("--prompt-file")
    _watermark_flags(p)
    p.add_argument("--max-tokens", type=int, default=200)
    p.add_argument("--sampler", choices=["multinomial", "greedy"], default="multinomial")
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write text here instead of stdout")
    p.add_argument("--trace-out", help="write the JSONL step trace here")

    p = sub.add_parser("detect", help="score a text; prints the report JSON")
    p.add_argument("--text-file", required=True)
    p.add_argument("--model", required=True, help="toy model dump (vocabulary source)")
    p.add_argument("--norms", required=True)
    p.add_argument("--frequencies", help="class frequency CSV (default: uniform)")
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--out")

    p = sub.add_parser("attack", help="bounded lexical substitution attack")
    p.add_argument("--text-file", required=True)
    p.add_argument("--min-fraction", type=float, default=0.10)
    p.add_argument("--substitution", choices=["synonym-table", "random-vocab"],
                   default="synonym-table")
    p.add_argument("--synonyms", help="two-column CSV (default: shipped table)")
    p.add_argument("--model", help="toy model dump, required for random-vocab")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")

    p = sub.add_parser("eval", help="run an experiment grid")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--norms", required=True)
    p.add_argument("--frequencies")
    p.add_argument("--setting", choices=["weak", "medium", "strong", "custom"],
                   default="medium")
    _watermark_flags(p)
    p.add_argument("--subsets", default="all",
                   help="comma list like acro+redgreen,senso or 'all'")
    p.add_argument("--no-human", action="store_true")
    p.add_argument("--n-samples", type=int, default=100)
    p.add_argument("--prompt-len", type=int, default=40)
    p.add_argument("--completion-len", type=int, default=160)
    p.add_argument("--max-tokens", type=int, default=160)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--attack", action="store_true")
    p.add_argument("--attack-min-fraction", type=float, default=0.10)
    p.add_argument("--ablate", action="store_true",
                   help="also emit per-sentence-count detection rates")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("plot", help="SVG charts from eval CSV output")
    p.add_argument("--results", required=True, help="rows CSV from eval")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("step-serve",
                       help="JSON-lines per-step session server (bridge endpoint)")

    return parser


def _watermark_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--delta-acro", type=float, default=None)
    p.add_argument("--delta-senso", type=float, default=None)
    p.add_argument("--delta-redgreen", type=float, default=None)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--features", default="acro,senso,redgreen",
                   help="comma list from {acro,senso,redgreen}")
    if not any(a.dest == "norms" for a in p._actions):
        p.add_argument("--norms")
        p.add_argument("--frequencies")


def _apply_config_file(argv: list[str]) -> list[str]:
    """Prepend TOML values as flags so command line flags win."""
    if "--config" not in argv:
        return argv
    index = argv.index("--config")
    path = Path(argv[index + 1])
    values = tomllib.loads(path.read_text(encoding="utf-8"))
    extra: list[str] = []
    for key, value in values.items():
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            if value:
                extra.append(flag)
        else:
            extra.extend([flag, str(value)])
    # keep the subcommand first, then config-derived flags, then user flags
    rest = argv[:index] + argv[index + 2:]
    if rest and not rest[0].startswith("-"):
        return [rest[0]] + extra + rest[1:]
    return extra + rest


def _load_lexicon(args):
    baselines = load_class_frequencies(args.frequencies) if getattr(args, "frequencies", None) else None
    if getattr(args, "norms", None):
        return load_norms(args.norms, baselines)
    return None


def _features(text: str) -> frozenset[str]:
    names = frozenset(f.strip() for f in text.split(",") if f.strip())
    unknown = names - set(FEATURES)
    if unknown:
        raise SystemExit(USAGE_ERROR)
    return names


def _read_text(args) -> str:
    return Path(args.text_file).read_text(encoding="utf-8")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        print(text)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_file(argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _dispatch(args)
    except (OSError, NormsError, AttackError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR


def _dispatch(args) -> int:
    if args.command == "train-toy":
        model = train_toy_model(args.corpus, order=args.order, smoothing=args.smoothing)
        model.save(args.out)
        print(f"saved toy model ({model.vocabulary.size} tokens) to {args.out}")
        return 0

    if args.command == "generate":
        model = ToyModel.load(args.model)
        features = _features(args.features)
        if "senso" in features and not args.norms:
            print("error: --norms is required when the senso feature is enabled",
                  file=sys.stderr)
            return USAGE_ERROR
        lexicon = _load_lexicon(args)
        prompt = args.prompt
        if prompt is None:
            if not args.prompt_file:
                print("error: provide --prompt or --prompt-file", file=sys.stderr)
                return USAGE_ERROR
            prompt = Path(args.prompt_file).read_text(encoding="utf-8")
        config = WatermarkConfig(
            delta_acro=args.delta_acro if args.delta_acro is not None else 0.0,
            delta_senso=args.delta_senso if args.delta_senso is not None else 0.0,
            delta_redgreen=args.delta_redgreen if args.delta_redgreen is not None else 0.0,
            gamma=args.gamma,
            enabled=features,
            max_tokens=args.max_tokens,
            sampler=args.sampler,
            temperature=args.temperature,
            seed=args.seed,
        )
        text, trace = generate(model, prompt, config, lexicon)
        _emit(text, args.out)
        if args.trace_out:
            Path(args.trace_out).write_text(trace.to_jsonl() + "\n", encoding="utf-8")
        return 0

    if args.command == "detect":
        model = ToyModel.load(args.model)
        lexicon = _load_lexicon(args)
        report = detect(_read_text(args), lexicon, args.gamma, model.vocabulary,
                        alpha=args.alpha)
        _emit(report.to_json(), args.out)
        return 0

    if args.command == "attack":
        text = _read_text(args)
        config = AttackConfig(
            min_fraction=args.min_fraction,
            substitution=args.substitution,
            seed=args.seed,
        )
        vocabulary = ToyModel.load(args.model).vocabulary if args.model else None
        synonyms = load_synonyms(args.synonyms) if args.substitution == "synonym-table" else None
        attacked, replaced, total = paraphrase_attack(
            text, config, vocabulary=vocabulary, synonyms=synonyms
        )
        _emit(attacked, args.out)
        print(f"replaced {replaced}/{total} words", file=sys.stderr)
        return 0

    if args.command == "eval":
        return _run_eval(args)

    if args.command == "plot":
        return _run_plot(args)

    if args.command == "step-serve":
        bridge.serve()
        return 0

    raise AssertionError(f"unhandled command {args.command}")


def _run_eval(args) -> int:
    model = ToyModel.load(args.model)
    lexicon = _load_lexicon(args)
    if args.subsets == "all":
        subsets = ALL_SUBSETS
    else:
        subsets = tuple(
            frozenset(part.split("+")) for part in args.subsets.split(",") if part
        )
    deltas = None
    if args.setting == "custom":
        deltas = (
            args.delta_senso or 0.0,
            args.delta_acro or 0.0,
            args.delta_redgreen or 0.0,
        )
    spec = ExperimentSpec(
        setting=args.setting,
        deltas=deltas,
        feature_subsets=subsets,
        include_human=not args.no_human,
        n_samples=args.n_samples,
        corpus=args.corpus,
        prompt_len=args.prompt_len,
        completion_len=args.completion_len,
        max_tokens=args.max_tokens,
        alpha=args.alpha,
        gamma=args.gamma,
        seed=args.seed,
        attack=AttackConfig(
            min_fraction=args.attack_min_fraction,
            substitution="random-vocab",
            seed=args.seed,
        ) if args.attack else None,
    )
    table = run_experiment(spec, model, lexicon)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "rows.csv").write_text(table.to_csv(), encoding="utf-8")
    (out_dir / "aggregates.csv").write_text(table.aggregates_csv(), encoding="utf-8")
    (out_dir / "results.json").write_text(table.to_json(), encoding="utf-8")
    if args.ablate:
        name = subset_name(frozenset(FEATURES))
        texts = [
            table.texts[(name, i, False)]
            for i in range(args.n_samples)
            if (name, i, False) in table.texts
        ]
        rates = ablate_lengths(texts, lexicon, args.gamma, model.vocabulary,
                               alpha=args.alpha)
        lines = ["sentences,detection_rate"]
        lines += [f"{m},{rate!r}" for m, rate in rates.items()]
        (out_dir / "ablation.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote results to {out_dir}")
    return 0


def _run_plot(args) -> int:
    import csv as _csv

    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("error: plotting requires matplotlib (pip install stylemark[plots])",
              file=sys.stderr)
        return DATA_ERROR
    with open(args.results, newline="", encoding="utf-8") as handle:
        rows = list(_csv.DictReader(handle))
    if not rows:
        print("error: empty results file", file=sys.stderr)
        return DATA_ERROR
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    configs = sorted({r["configuration"] for r in rows})

    fig, ax = plt.subplots(figsize=(7, 5))
    for config in configs:
        points = [r for r in rows if r["configuration"] == config and r["attacked"] == "0"]
        ax.scatter(
            [float(r["perplexity"]) for r in points],
            [float(r["equivalent_z"]) for r in points],
            label=config, s=12, alpha=0.6,
        )
    ax.set_xlabel("perplexity")
    ax.set_ylabel("equivalent z of final score")
    ax.legend(fontsize=7)
    fig.savefig(out_dir / "z_vs_perplexity.svg")
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(7, 5))
    for config in configs:
        scores = sorted(
            float(r["final_score"])
            for r in rows
            if r["configuration"] == config and r["attacked"] == "0"
        )
        ys = [(i + 1) / len(scores) for i in range(len(scores))]
        ax.step(scores, ys, where="post", label=config)
    ax.set_xscale("log")
    ax.set_xlabel("final score")
    ax.set_ylabel("empirical CDF")
    ax.legend(fontsize=7)
    fig.savefig(out_dir / "score_ecdf.svg")
    plt.close(fig)
    print(f"wrote plots to {out_dir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
