"""Command-line entry points.

`bootstrap run` drives the full generate-filter loop; the remaining
subcommands expose the individual stages (generate, filter, analyze, eval,
export-train, prompt) for piecemeal use. Every networked subcommand accepts
--mock-script to run against a scripted offline gateway instead of a server.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from typing import List, Optional, Sequence

from . import diversity, evaluation, pipeline
from .errors import BootstrapError, InsufficientYield
from .filtering import (
    DedupIndex,
    FilterReport,
    LengthBounds,
    basic_filter,
    consistency_filter,
)
from .gateway import (
    Gateway,
    GatewayConfig,
    HttpGateway,
    ScriptedGateway,
    load_script,
)
from .generation import candidate_from_dict, candidate_to_dict, generate_batch
from .prompts import (
    render_classification_prompt,
    render_generation_prompt,
    render_zero_shot_prompt,
)
from .task_model import (
    SOURCE_REAL,
    SOURCE_SYNTHETIC,
    DecodingConfig,
    GenerationPlan,
    LabeledExample,
    TaskSpec,
    VerdictKind,
    load_dataset,
    load_task,
    select_seeds,
    write_dataset,
)


def _add_gateway_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--gateway-config", help="JSON file with gateway settings")
    parser.add_argument("--endpoint", help="completion endpoint URL override")
    parser.add_argument("--model", help="server-side model identifier override")
    parser.add_argument(
        "--mock-script",
        help="JSON script for an offline scripted gateway (list of "
        '{"match", "response"} entries)',
    )


def _add_decoding_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--temperature", type=float, default=1.0)
    parser.add_argument("--top-k", type=int, default=50)
    parser.add_argument("--num-beams", type=int, default=1, choices=None)
    parser.add_argument("--max-new-tokens", type=int, default=128)


def _build_gateway(args: argparse.Namespace) -> Gateway:
    if args.mock_script:
        return ScriptedGateway(load_script(args.mock_script))
    config = GatewayConfig.load(args.gateway_config)
    if args.endpoint:
        config = GatewayConfig(**{**config.__dict__, "endpoint": args.endpoint})
    if args.model:
        config = GatewayConfig(**{**config.__dict__, "model_ref": args.model})
    return HttpGateway(config)


def _decoding_from(args: argparse.Namespace) -> DecodingConfig:
    return DecodingConfig(
        temperature=args.temperature,
        top_k=args.top_k,
        num_beams=args.num_beams,
        max_new_tokens=args.max_new_tokens,
    )


def _cmd_run(args: argparse.Namespace) -> int:
    task = load_task(args.task)
    seeds = load_dataset(args.seeds, task)
    plan = GenerationPlan(
        n_per_class=args.n,
        seeds_per_class=args.seeds_per_class,
        batch_size=args.batch_size,
        max_rounds=args.max_rounds,
        rng_seed=args.rng_seed,
    )
    config = pipeline.PipelineConfig(
        task=task,
        plan=plan,
        decoding=_decoding_from(args),
        bounds=LengthBounds(min_words=args.min_words, max_words=args.max_words),
        skip_consistency=args.skip_consistency,
        output_dir=args.out,
    )
    gateway = _build_gateway(args)
    if args.resume:
        dataset, report = pipeline.resume(config, gateway, seeds)
    else:
        dataset, report = pipeline.run_pipeline(config, gateway, seeds)
    print(report.table())
    synthetic = sum(1 for example in dataset if example.source == SOURCE_SYNTHETIC)
    print(f"dataset: {len(dataset)} examples ({synthetic} synthetic) -> {args.out}")
    return 0


def _cmd_export_train(args: argparse.Namespace) -> int:
    task = load_task(args.task)
    dataset = load_dataset(args.data, task)
    real = [example for example in dataset if example.source == SOURCE_REAL]
    synthetic = [example for example in dataset if example.source == SOURCE_SYNTHETIC]
    records = pipeline.assemble_training_set(
        real, synthetic, task, args.rng_seed, args.out
    )
    print(f"wrote {len(records)} training records -> {args.out}")
    return 0


def _cmd_generate(args: argparse.Namespace) -> int:
    task = load_task(args.task)
    pool = load_dataset(args.seeds, task)
    seeds = select_seeds(pool, args.seeds_per_class, args.rng_seed)
    labels = list(task.labels) if args.label == "all" else [task.canonical_label(args.label)]
    gateway = _build_gateway(args)
    decoding = _decoding_from(args)
    candidates = []
    for label in labels:
        label_seeds = [s for s in seeds if task.canonical_label(s.label) == label]
        candidates.extend(
            generate_batch(gateway, task, label, label_seeds, decoding, args.round)
        )
    with open(args.out, "w", encoding="utf-8") as handle:
        for candidate in candidates:
            handle.write(json.dumps(candidate_to_dict(candidate), ensure_ascii=False))
            handle.write("\n")
    print(f"wrote {len(candidates)} candidates -> {args.out}")
    return 0


def _cmd_filter(args: argparse.Namespace) -> int:
    task = load_task(args.task)
    pool = load_dataset(args.seeds, task)
    seeds = select_seeds(pool, args.seeds_per_class, args.rng_seed)
    with open(args.candidates, "r", encoding="utf-8") as handle:
        candidates = [
            candidate_from_dict(json.loads(line)) for line in handle if line.strip()
        ]
    bounds = LengthBounds(min_words=args.min_words, max_words=args.max_words)
    index = DedupIndex(seed.text for seed in seeds)
    gateway = None if args.skip_consistency else _build_gateway(args)
    report = FilterReport()
    kept: List[LabeledExample] = []
    for candidate in candidates:
        verdict = basic_filter(candidate, index, bounds, task)
        if verdict.kind is VerdictKind.ACCEPTED and not args.skip_consistency:
            verdict = consistency_filter(
                gateway, task, seeds, candidate, args.rng_seed
            )
        report.record(candidate.intended_label, verdict.kind)
        report.note_round(candidate.intended_label, candidate.round)
        if verdict.kind is VerdictKind.ACCEPTED:
            kept.append(
                LabeledExample(
                    text=candidate.text,
                    label=candidate.intended_label,
                    source=SOURCE_SYNTHETIC,
                    round=candidate.round,
                    verdict=verdict.kind.value,
                )
            )
    write_dataset(args.out, kept)
    with open(args.report, "w", encoding="utf-8") as handle:
        json.dump(report.to_dict(), handle, indent=2, sort_keys=True)
        handle.write("\n")
    print(report.table())
    print(f"kept {len(kept)}/{len(candidates)} candidates -> {args.out}")
    return 0


def _cmd_analyze(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.data)
    sizes = [int(part) for part in args.sizes.split(",")] if args.sizes else []
    curve = diversity.diversity_curve(
        dataset, sizes, args.ngram, args.rng_seed, char_level=args.char_level
    )
    with open(args.out, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["data_size", f"unique_{args.ngram}grams"])
        writer.writerows(curve.points)
    print(f"wrote {len(curve.points)} curve points ({curve.cohort}) -> {args.out}")
    if args.freq_out:
        stopwords = diversity.DEFAULT_STOPWORDS
        if args.stopwords:
            with open(args.stopwords, "r", encoding="utf-8") as handle:
                stopwords = frozenset(handle.read().split())
        table = diversity.token_frequencies(
            [example.text for example in dataset],
            top_k=args.top_k,
            stopwords=stopwords,
            cohort=curve.cohort,
        )
        with open(args.freq_out, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["token", "count"])
            writer.writerows(table.entries)
        print(f"wrote {len(table.entries)} token frequencies -> {args.freq_out}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    task = load_task(args.task)
    testset = load_dataset(args.test, task)
    kind = {
        "zero-shot": evaluation.EvalKind.ZERO_SHOT,
        "icl": evaluation.EvalKind.ICL,
        "tuned": evaluation.EvalKind.TUNED,
    }[args.mode]
    demos = ()
    if kind is evaluation.EvalKind.ICL:
        if not args.demos:
            print("--demos is required for icl mode", file=sys.stderr)
            return 1
        pool = load_dataset(args.demos, task)
        demos = select_seeds(pool, args.demos_per_class, args.rng_seed)
    mode = evaluation.EvalMode(kind=kind, demos=demos, rng_seed=args.rng_seed)
    gateway = _build_gateway(args)
    summary = evaluation.evaluate(
        gateway,
        task,
        mode,
        testset,
        checkpoint_path=args.out + ".partial" if args.out else None,
    )
    payload = summary.to_dict()
    payload["fingerprint"] = _eval_fingerprint(task, args.mode, args.rng_seed)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            json.dump(payload, handle, indent=2)
            handle.write("\n")
    print(
        f"accuracy {summary.accuracy:.4f} | mean latency {summary.mean_latency_ms:.1f} ms"
        f" | unparseable {summary.unparseable}"
    )
    return 0


def _eval_fingerprint(task: TaskSpec, mode: str, rng_seed: int) -> str:
    import hashlib

    canonical = json.dumps(
        {"task": task.to_dict(), "mode": mode, "rng_seed": rng_seed},
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _cmd_prompt(args: argparse.Namespace) -> int:
    task = load_task(args.task)
    if args.kind == "generation":
        pool = load_dataset(args.seeds, task)
        label = task.canonical_label(args.label)
        seeds = [
            example
            for example in select_seeds(pool, args.seeds_per_class, args.rng_seed)
            if task.canonical_label(example.label) == label
        ]
        rendered = render_generation_prompt(task, label, seeds)
    elif args.kind == "icl":
        pool = load_dataset(args.seeds, task)
        demos = select_seeds(pool, args.seeds_per_class, args.rng_seed)
        rendered = render_classification_prompt(task, demos, args.query, args.rng_seed)
    else:
        rendered = render_zero_shot_prompt(task, args.query)
    print(rendered.text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bootstrap",
        description="Bootstrap a text classifier from a few labeled examples",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="full generate-filter pipeline")
    run.add_argument("--task", required=True)
    run.add_argument("--seeds", required=True)
    run.add_argument("--n", type=int, default=21, help="synthetic quota per class")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--seeds-per-class", type=int, default=4)
    run.add_argument("--batch-size", type=int, default=8)
    run.add_argument("--max-rounds", type=int, default=40)
    run.add_argument("--rng-seed", type=int, default=0)
    run.add_argument("--min-words", type=int, default=3)
    run.add_argument("--max-words", type=int, default=256)
    run.add_argument("--skip-consistency", action="store_true")
    run.add_argument("--resume", action="store_true")
    _add_decoding_args(run)
    _add_gateway_args(run)
    run.set_defaults(func=_cmd_run)

    export = sub.add_parser("export-train", help="assemble the training file")
    export.add_argument("--task", required=True)
    export.add_argument("--data", required=True, help="dataset JSONL to export")
    export.add_argument("--out", required=True)
    export.add_argument("--rng-seed", type=int, default=0)
    export.set_defaults(func=_cmd_export_train)

    generate = sub.add_parser("generate", help="one generation batch per label")
    generate.add_argument("--task", required=True)
    generate.add_argument("--seeds", required=True)
    generate.add_argument("--label", required=True, help='label name or "all"')
    generate.add_argument("--out", required=True)
    generate.add_argument("--seeds-per-class", type=int, default=4)
    generate.add_argument("--rng-seed", type=int, default=0)
    generate.add_argument("--round", type=int, default=1)
    _add_decoding_args(generate)
    _add_gateway_args(generate)
    generate.set_defaults(func=_cmd_generate)

    filt = sub.add_parser("filter", help="filter a candidates file")
    filt.add_argument("--task", required=True)
    filt.add_argument("--candidates", required=True)
    filt.add_argument("--seeds", required=True)
    filt.add_argument("--out", required=True)
    filt.add_argument("--report", required=True)
    filt.add_argument("--seeds-per-class", type=int, default=4)
    filt.add_argument("--rng-seed", type=int, default=0)
    filt.add_argument("--min-words", type=int, default=3)
    filt.add_argument("--max-words", type=int, default=256)
    filt.add_argument("--skip-consistency", action="store_true")
    _add_gateway_args(filt)
    filt.set_defaults(func=_cmd_filter)

    analyze = sub.add_parser("analyze", help="diversity curve and token table")
    analyze.add_argument("--data", required=True)
    analyze.add_argument("--ngram", type=int, default=3)
    analyze.add_argument("--sizes", required=True, help="comma-separated sizes")
    analyze.add_argument("--out", required=True, help="curve CSV path")
    analyze.add_argument("--rng-seed", type=int, default=0)
    analyze.add_argument(
        "--char-level", action="store_true", help="character n-grams instead of word"
    )
    analyze.add_argument("--freq-out", help="token-frequency CSV path")
    analyze.add_argument("--top-k", type=int, default=50)
    analyze.add_argument("--stopwords", help="whitespace-separated stopword file")
    analyze.set_defaults(func=_cmd_analyze)

    ev = sub.add_parser("eval", help="accuracy/latency over a test set")
    ev.add_argument("--task", required=True)
    ev.add_argument("--test", required=True)
    ev.add_argument("--mode", required=True, choices=["zero-shot", "icl", "tuned"])
    ev.add_argument("--demos", help="demo dataset for icl mode")
    ev.add_argument("--demos-per-class", type=int, default=4)
    ev.add_argument("--rng-seed", type=int, default=0)
    ev.add_argument("--out", help="summary JSON path")
    _add_gateway_args(ev)
    ev.set_defaults(func=_cmd_eval)

    prompt = sub.add_parser("prompt", help="print a rendered prompt")
    prompt.add_argument("--task", required=True)
    prompt.add_argument(
        "--kind", required=True, choices=["generation", "icl", "zero-shot"]
    )
    prompt.add_argument("--seeds")
    prompt.add_argument("--label")
    prompt.add_argument("--query")
    prompt.add_argument("--seeds-per-class", type=int, default=4)
    prompt.add_argument("--rng-seed", type=int, default=0)
    prompt.set_defaults(func=_cmd_prompt)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InsufficientYield as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BootstrapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
