"""Command-line pipeline driver.

Subcommands mirror the pipeline stages: ingest -> split -> build ->
vocab / emit-train -> reframe -> eval auto / eval manual -> report.
Every stage checks its upstream artifact and names the missing producer
when one is absent. A TOML config file sets defaults; flags win.
"""

from __future__ import annotations

import argparse
import logging
import random
import sys
from collections import defaultdict
from pathlib import Path

from . import artifacts
from .artifacts import (
    ARTICLES,
    INSTANCES,
    SPLITS,
    ArtifactHashMismatch,
    MissingArtifactError,
)
from .config import ConfigError, RunConfig, load_config
from .corpus import (
    CorpusParseError,
    SplitAssignment,
    SplitSizeError,
    article_from_record,
    article_to_record,
    assign_splits,
    load_corpus,
)
from .entities import EntitySidecarFile, MissingEntityRecords
from .frames import FRAME_LABELS, FRAME_ORDER, Frame, frame_from_letter
from .gateway import (
    GenerationError,
    HttpBackend,
    MockBackend,
    ReplayBackend,
    reframe_batch,
    reframed_from_record,
    reframed_to_record,
)
from .instances import (
    build_all_instances,
    count_by_frame_and_split,
    filter_instances,
    instance_from_record,
    instance_to_record,
)
from .metrics import (
    FrameVocabulary,
    VocabularyError,
    build_frame_vocabulary,
    corpus_overlap,
    macro_rouge,
    overlap_delta_pp,
    render_overlap_cell,
    rouge_l,
    rouge_n,
    strip_entities,
    vocabulary_tokens,
)
from .reporting import (
    AnnotationError,
    aggregate_scores,
    build_pilot_table,
    direction_matrix,
    majority_agreement,
    read_annotations_csv,
    render_crowd_report,
    render_direction_report,
    render_pilot_report,
    score_table_rows,
    select_models,
    variant_order,
)
from .strategies import (
    ReservedTokenError,
    TrainingSetError,
    build_finetune_set,
    build_pretrain_set,
    emit_training_plan,
    example_to_record,
    phases_to_plan,
)
from .textseg import tokenize
from .variants import Variant, enumerate_variants

logger = logging.getLogger(__name__)

_USER_ERRORS = (
    ConfigError,
    CorpusParseError,
    SplitSizeError,
    MissingArtifactError,
    ArtifactHashMismatch,
    MissingEntityRecords,
    TrainingSetError,
    ReservedTokenError,
    AnnotationError,
    VocabularyError,
    GenerationError,
    FileNotFoundError,
)


def _read_articles(config: RunConfig):
    path = artifacts.require(config.workdir_path, ARTICLES)
    _, records = artifacts.read_jsonl(path)
    return [article_from_record(r) for r in records]


def _read_splits(config: RunConfig) -> SplitAssignment:
    path = artifacts.require(config.workdir_path, SPLITS)
    payload = artifacts.read_json(path)
    return SplitAssignment(seed=payload["seed"], assignment=payload["assignment"])


def _read_instances(config: RunConfig):
    path = artifacts.require(config.workdir_path, INSTANCES)
    _, records = artifacts.read_jsonl(path)
    return [instance_from_record(r) for r in records]


def cmd_ingest(config: RunConfig, args: argparse.Namespace) -> int:
    articles = load_corpus(config.corpus_path, config.topics)
    out = config.workdir_path / (args.out or "articles.jsonl")
    artifacts.write_jsonl(
        out, "articles", config.hash, (article_to_record(a) for a in articles)
    )
    by_topic = defaultdict(int)
    for article in articles:
        by_topic[article.topic] += 1
    print(f"ingested {len(articles)} articles -> {out}")
    for topic in sorted(by_topic):
        print(f"  {topic}: {by_topic[topic]}")
    return 0


def cmd_split(config: RunConfig, args: argparse.Namespace) -> int:
    articles = _read_articles(config)
    assignment = assign_splits(
        articles,
        seed=config.seed,
        val_per_topic=config.val_per_topic,
        test_per_topic=config.test_per_topic,
    )
    out = config.workdir_path / "splits.json"
    artifacts.write_json(
        out,
        {
            "artifact": "splits",
            "config_hash": config.hash,
            "seed": assignment.seed,
            "assignment": assignment.assignment,
        },
    )
    counts = assignment.counts()
    print(
        f"splits -> {out} (train {counts['train']}, "
        f"validation {counts['validation']}, test {counts['test']})"
    )
    return 0


def _entity_provider_for(args: argparse.Namespace):
    if not getattr(args, "entities_file", None):
        return None, None
    adapter = EntitySidecarFile(args.entities_file)
    missing: list[str] = []

    def provider(instance_id: str, text: str) -> list[str]:
        try:
            return [e.surface for e in adapter.for_instance(instance_id)]
        except MissingEntityRecords:
            missing.append(instance_id)
            return []

    return provider, missing


def _print_table2(counts, retention_kept: int, retention_total: int) -> None:
    header = f"{'#':<3}{'Frame':<28}{'Train':>8}{'Validation':>12}{'Test':>8}"
    print(header)
    totals = {"train": 0, "validation": 0, "test": 0}
    for frame in FRAME_ORDER:
        row = counts[frame]
        for split in totals:
            totals[split] += row[split]
        print(
            f"{frame.value:<3}{FRAME_LABELS[frame]:<28}"
            f"{row['train']:>8}{row['validation']:>12}{row['test']:>8}"
        )
    print(
        f"{'':<3}{'All four frames':<28}"
        f"{totals['train']:>8}{totals['validation']:>12}{totals['test']:>8}"
    )
    pct = 100.0 * retention_kept / retention_total if retention_total else 0.0
    print(
        f"retention: kept {retention_kept} of {retention_total} "
        f"candidate instances ({pct:.1f}%)"
    )


def cmd_build(config: RunConfig, args: argparse.Namespace) -> int:
    articles = _read_articles(config)
    splits = _read_splits(config)
    provider, missing = _entity_provider_for(args)

    kwargs = {"code_map": config.frame_codes}
    if provider is not None:
        kwargs["entity_provider"] = provider
    candidates = build_all_instances(articles, splits, **kwargs)
    if missing:
        raise MissingEntityRecords(sorted(set(missing)))

    kept = filter_instances(
        candidates,
        min_tokens=config.min_tokens,
        max_tokens=config.max_tokens,
        tolerance=config.tolerance,
    )
    out = config.workdir_path / "instances.jsonl"
    artifacts.write_jsonl(
        out, "instances", config.hash, (instance_to_record(i) for i in kept)
    )
    print(f"instances -> {out}")
    _print_table2(count_by_frame_and_split(kept), len(kept), len(candidates))
    return 0


def _write_vocab(path: Path, config_hash: str, vocab: FrameVocabulary) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# config_hash={config_hash}\n")
        for word, score in vocab.entries:
            fh.write(f"{word}\t{score:.6f}\n")


def _read_vocab(path: Path, frame: Frame) -> FrameVocabulary:
    entries = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            word, score = line.split("\t")
            entries.append((word, float(score)))
    return FrameVocabulary(frame=frame, entries=tuple(entries))


def cmd_vocab(config: RunConfig, args: argparse.Namespace) -> int:
    instances = _read_instances(config)
    selected = [i for i in instances if i.split == config.vocab_split]
    docs_by_frame: dict[Frame, list[list[str]]] = defaultdict(list)
    for inst in selected:
        docs_by_frame[inst.frame].append(vocabulary_tokens(inst.s2.text))
    all_docs = [doc for frame in FRAME_ORDER for doc in docs_by_frame.get(frame, [])]

    out_dir = config.workdir_path / "vocab"
    for frame in FRAME_ORDER:
        vocab = build_frame_vocabulary(
            frame,
            docs_by_frame.get(frame, []),
            all_docs,
            k=config.vocab_k,
            aggregate=config.vocab_aggregate,
        )
        path = out_dir / f"{frame.value}.txt"
        _write_vocab(path, config.hash, vocab)
        print(f"vocab[{frame.value}] -> {path} ({len(vocab.entries)} entries)")
    return 0


def _select_variants(name: str | None) -> list[Variant]:
    if name is None or name == "all":
        return enumerate_variants()
    return [Variant.from_name(name)]


def _select_frames(letter: str | None) -> list[Frame]:
    if letter is None or letter == "all":
        return list(FRAME_ORDER)
    return [frame_from_letter(letter)]


def cmd_emit_train(config: RunConfig, args: argparse.Namespace) -> int:
    instances = _read_instances(config)
    training = [i for i in instances if i.split == "train"]
    frames = _select_frames(args.frame)

    for variant in _select_variants(args.variant):
        base = config.workdir_path / "train" / variant.name
        if variant.use_pretraining:
            pool = build_pretrain_set(training, variant)
            artifacts.write_jsonl(
                base / "pretrain.jsonl",
                "training-examples",
                config.hash,
                (example_to_record(e) for e in pool),
            )
            print(f"train[{variant.name}] pretrain pool: {len(pool)} examples")
        for frame in frames:
            examples = build_finetune_set(
                training,
                frame,
                variant,
                seed=config.seed,
                neg_ratio=config.neg_ratio,
            )
            artifacts.write_jsonl(
                base / f"{frame.value}.jsonl",
                "training-examples",
                config.hash,
                (example_to_record(e) for e in examples),
            )
            phases = emit_training_plan(
                variant,
                frame,
                pretrain_epochs=config.pretrain_epochs,
                finetune_epochs=config.finetune_epochs,
                adversarial_epochs=config.adversarial_epochs,
            )
            artifacts.write_json(
                config.workdir_path / "plan" / variant.name / f"{frame.value}.json",
                phases_to_plan(variant, frame, phases, config.hash),
            )
            positives = sum(1 for e in examples if e.kind == "positive")
            print(
                f"train[{variant.name}/{frame.value}]: {positives} positives, "
                f"{len(examples) - positives} negatives, {len(phases)} phases"
            )
    return 0


def _make_backend(config: RunConfig):
    name = config.backend
    if name == "mock":
        return MockBackend(seed=config.seed)
    if name.startswith("replay:"):
        return ReplayBackend(name[len("replay:") :])
    if name.startswith(("http://", "https://")):
        return HttpBackend(name, timeout=config.request_timeout)
    if name.startswith("http:"):
        rest = name[len("http:") :]
        url = rest if rest.startswith(("http://", "https://")) else f"http://{rest}"
        return HttpBackend(url, timeout=config.request_timeout)
    raise ConfigError(f"unknown backend spec: {name!r}")


def cmd_reframe(config: RunConfig, args: argparse.Namespace) -> int:
    instances = _read_instances(config)
    selected = [i for i in instances if i.split == args.split]
    if args.limit_per_frame:
        per_frame: dict[Frame, list] = defaultdict(list)
        for inst in selected:
            per_frame[inst.frame].append(inst)
        sampled = []
        for frame in FRAME_ORDER:
            group = sorted(per_frame.get(frame, []), key=lambda i: i.id)
            rng = random.Random(f"{config.seed}:reframe:{frame.value}")
            take = min(args.limit_per_frame, len(group))
            sampled.extend(rng.sample(group, take))
        selected = sorted(sampled, key=lambda i: i.id)
    if not selected:
        raise TrainingSetError(f"no instances in split {args.split!r} to reframe")

    backend = _make_backend(config)
    if isinstance(backend, HttpBackend):
        backend.health()

    variant = Variant.from_name(args.variant)
    total_failures = 0
    for frame in _select_frames(args.target_frame):
        batch = reframe_batch(
            selected,
            [frame],
            variant.name,
            backend,
            concurrency_limit=config.concurrency_limit,
            max_tokens=config.max_gen_tokens,
            retries=config.retries,
            prompt_only=args.prompt_only,
        )
        out = config.workdir_path / "generated" / variant.name / f"{frame.value}.jsonl"
        artifacts.write_jsonl(
            out,
            "generated",
            config.hash,
            (reframed_to_record(r) for r in batch.results),
        )
        total_failures += len(batch.failures)
        for failure in batch.failures:
            logger.warning(
                "failed %s -> %s: %s",
                failure.instance_id,
                failure.target_frame.value,
                failure.error,
            )
        print(f"generated[{variant.name}/{frame.value}] -> {out} ({batch.summary()})")
    if total_failures:
        print(f"warning: {total_failures} instances failed", file=sys.stderr)
    return 0


def _generated_by_variant(config: RunConfig) -> dict[str, list]:
    root = config.workdir_path / "generated"
    if not root.exists():
        raise MissingArtifactError(root, "reframe")
    by_variant: dict[str, list] = defaultdict(list)
    for path in sorted(root.glob("*/*.jsonl")):
        _, records = artifacts.read_jsonl(path)
        by_variant[path.parent.name].extend(
            reframed_from_record(r) for r in records
        )
    if not by_variant:
        raise MissingArtifactError(root / "<variant>", "reframe")
    return by_variant


def cmd_eval_auto(config: RunConfig, args: argparse.Namespace) -> int:
    instances = {i.id: i for i in _read_instances(config)}
    by_variant = _generated_by_variant(config)
    vocab_dir = config.workdir_path / "vocab"
    if not vocab_dir.exists():
        raise MissingArtifactError(vocab_dir, "vocab")
    vocabularies = {
        frame: _read_vocab(vocab_dir / f"{frame.value}.txt", frame)
        for frame in FRAME_ORDER
    }

    rouge_rows = []
    overlap_rows = []
    for variant in sorted(by_variant, key=variant_order):
        items = by_variant[variant]
        intra = [r for r in items if r.intra_frame and r.instance_id in instances]
        scores = {"R1": [], "R2": [], "RL": [], "R1m": [], "RLm": []}
        for item in intra:
            ref_instance = instances[item.instance_id]
            cand = tokenize(item.generated)
            ref = tokenize(ref_instance.s2.text)
            scores["R1"].append(rouge_n(cand, ref, 1))
            scores["R2"].append(rouge_n(cand, ref, 2))
            scores["RL"].append(rouge_l(cand, ref))
            cand_m = strip_entities(cand, ref_instance.entities)
            ref_m = strip_entities(ref, ref_instance.entities)
            scores["R1m"].append(rouge_n(cand_m, ref_m, 1, entity_masked=True))
            scores["RLm"].append(rouge_l(cand_m, ref_m, entity_masked=True))
        if intra:
            rouge_rows.append(
                [variant]
                + [f"{100 * macro_rouge(scores[k]):.2f}" for k in ("R1", "R2", "RL", "R1m", "RLm")]
                + [len(intra)]
            )
        else:
            logger.warning("variant %s has no intra-frame generations", variant)

        cells = [variant]
        for frame in FRAME_ORDER:
            targeted = [r for r in items if r.target_frame == frame]
            if not targeted:
                cells.append("-")
                continue
            generated_texts = [r.generated for r in targeted]
            original_texts = [
                instances[r.instance_id].s2.text
                for r in targeted
                if r.instance_id in instances
            ]
            after = corpus_overlap(generated_texts, vocabularies[frame])
            before = corpus_overlap(original_texts, vocabularies[frame])
            cells.append(render_overlap_cell(after, overlap_delta_pp(after, before)))
        overlap_rows.append(cells)

    eval_dir = config.workdir_path / "eval"
    artifacts.write_tsv(
        eval_dir / "rouge.tsv",
        config.hash,
        ["variant", "rouge1", "rouge2", "rougeL", "rouge1_masked", "rougeL_masked", "cases"],
        rouge_rows,
    )
    artifacts.write_tsv(
        eval_dir / "overlap.tsv",
        config.hash,
        ["variant"] + [f.value for f in FRAME_ORDER],
        overlap_rows,
    )
    print(f"eval -> {eval_dir / 'rouge.tsv'}, {eval_dir / 'overlap.tsv'}")
    return 0


def cmd_eval_manual(config: RunConfig, args: argparse.Namespace) -> int:
    report_dir = config.workdir_path / "report"
    records = read_annotations_csv(args.annotations)
    table = aggregate_scores(records)
    agreement = majority_agreement(records)
    artifacts.write_text(
        report_dir / "crowd.md", render_crowd_report(table, agreement, config.hash)
    )
    rows = score_table_rows(table)
    artifacts.write_tsv(
        report_dir / "crowd.tsv",
        config.hash,
        ["variant", "block", "topic", "coherence", "framing", "average"],
        [
            [r["variant"], r["block"], r["topic"], r["coherence"], r["framing"], r["average"]]
            for r in rows
        ],
    )
    matrices = [direction_matrix(records, dim) for dim in ("coherence", "framing")]
    artifacts.write_text(
        report_dir / "directions.md", render_direction_report(matrices, config.hash)
    )
    artifacts.write_tsv(
        report_dir / "directions.tsv",
        config.hash,
        ["dimension", "source", "target", "mean"],
        [
            [m.dimension, s.value, t.value, value]
            for m in matrices
            for (s, t), value in sorted(
                m.cells.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)
            )
        ],
    )
    print(f"reports -> {report_dir / 'crowd.md'}, {report_dir / 'directions.md'}")

    if args.pilot:
        pilot_records = read_annotations_csv(args.pilot)
        pilot = build_pilot_table(pilot_records)
        selection = select_models(pilot)
        artifacts.write_text(
            report_dir / "pilot.md", render_pilot_report(pilot, selection, config.hash)
        )
        artifacts.write_tsv(
            report_dir / "pilot.tsv",
            config.hash,
            ["variant", "coherence", "framing", "balance"],
            [
                [name, row.coherence, row.framing, row.balance]
                for name, row in sorted(pilot.items(), key=lambda kv: variant_order(kv[0]))
            ],
        )
        print(f"pilot report -> {report_dir / 'pilot.md'}")
    return 0


def cmd_report(config: RunConfig, args: argparse.Namespace) -> int:
    workdir = config.workdir_path
    stamped = artifacts.check_hashes(workdir, config.hash)
    lines = [
        "# Run report",
        "",
        f"Artifacts with matching config hash: {len(stamped)}",
        "",
    ]
    instances_path = workdir / "instances.jsonl"
    if instances_path.exists():
        instances = _read_instances(config)
        counts = count_by_frame_and_split(instances)
        lines += [
            "| # | Frame | Train | Validation | Test |",
            "|---|---|---|---|---|",
        ]
        totals = {"train": 0, "validation": 0, "test": 0}
        for frame in FRAME_ORDER:
            row = counts[frame]
            for split in totals:
                totals[split] += row[split]
            lines.append(
                f"| {frame.value} | {FRAME_LABELS[frame]} | {row['train']} "
                f"| {row['validation']} | {row['test']} |"
            )
        lines.append(
            f"|  | All four frames | {totals['train']} | {totals['validation']} "
            f"| {totals['test']} |"
        )
        lines.append("")
    lines.append("## Files")
    lines.append("")
    for path, _ in stamped:
        lines.append(f"- {path.relative_to(workdir)}")
    lines += ["", f"Config hash: {config.hash}", ""]
    artifacts.write_text(workdir / "report" / "run.md", "\n".join(lines))
    print(f"run report -> {workdir / 'report' / 'run.md'} (hash {config.hash})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reframer",
        description="Sentence-level reframing pipeline: dataset build, "
        "generation driving, and evaluation.",
    )
    parser.add_argument("-c", "--config", help="TOML config file")
    parser.add_argument("--workdir", help="artifact directory (default: run)")
    parser.add_argument("--seed", type=int, help="global random seed")
    parser.add_argument("--corpus-dir", dest="corpus_dir", help="corpus directory")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse corpus files into articles.jsonl")
    p.add_argument(
        "--corpus-dir",
        dest="corpus_dir",
        default=argparse.SUPPRESS,
        help="corpus directory (also accepted before the subcommand)",
    )
    p.add_argument("--out", help="output name under the workdir")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("split", help="assign train/validation/test splits")
    p.add_argument(
        "--seed",
        type=int,
        default=argparse.SUPPRESS,
        help="random seed (also accepted before the subcommand)",
    )
    p.add_argument("--val-per-topic", dest="val_per_topic", type=int)
    p.add_argument("--test-per-topic", dest="test_per_topic", type=int)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("build", help="build and length-filter instances")
    p.add_argument(
        "--entities-file",
        dest="entities_file",
        help="entities.jsonl sidecar keyed by instance id (default: heuristic)",
    )
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("vocab", help="rank per-frame TF-IDF vocabularies")
    p.add_argument("--top-k", dest="vocab_k", type=int)
    p.add_argument("--split", dest="vocab_split", choices=["train", "validation", "test"])
    p.set_defaults(func=cmd_vocab)

    p = sub.add_parser("emit-train", help="emit training sets and phase plans")
    p.add_argument("--variant", default="all", help="variant name or 'all'")
    p.add_argument("--frame", default="all", help="frame letter or 'all'")
    p.add_argument("--neg-ratio", dest="neg_ratio", type=float)
    p.set_defaults(func=cmd_emit_train)

    p = sub.add_parser("reframe", help="drive a backend over the evaluation split")
    p.add_argument("--variant", required=True)
    p.add_argument("--target-frame", dest="target_frame", default="all")
    p.add_argument("--backend", help="mock | replay:FILE | http:URL")
    p.add_argument("--split", default="test", choices=["train", "validation", "test"])
    p.add_argument("--limit-per-frame", dest="limit_per_frame", type=int)
    p.add_argument("--prompt-only", dest="prompt_only", action="store_true")
    p.set_defaults(func=cmd_reframe)

    p = sub.add_parser("eval", help="evaluate generations or annotations")
    eval_sub = p.add_subparsers(dest="eval_mode", required=True)
    pa = eval_sub.add_parser("auto", help="ROUGE + framing-overlap tables")
    pa.set_defaults(func=cmd_eval_auto)
    pm = eval_sub.add_parser("manual", help="aggregate annotation exports")
    pm.add_argument("--annotations", required=True, help="crowd annotations CSV")
    pm.add_argument("--pilot", help="pilot annotations CSV (optional)")
    pm.set_defaults(func=cmd_eval_manual)

    p = sub.add_parser("report", help="consolidated run report with config hash")
    p.set_defaults(func=cmd_report)

    return parser


_OVERRIDE_KEYS = (
    "workdir",
    "seed",
    "corpus_dir",
    "val_per_topic",
    "test_per_topic",
    "vocab_k",
    "vocab_split",
    "neg_ratio",
    "backend",
)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        overrides = {
            key: getattr(args, key)
            for key in _OVERRIDE_KEYS
            if getattr(args, key, None) is not None
        }
        config = load_config(args.config, overrides)
        return args.func(config, args)
    except _USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
