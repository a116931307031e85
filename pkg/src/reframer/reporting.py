"""Aggregation of human annotation exports into score tables.

The crowd questionnaire has six questions: coherence (q1), topic match
(q2), and one frame-coverage question per frame (q3..q6). The framing
score of a record reads only the question matching its target frame.
The two-question pilot export reuses the same CSV schema with q1 =
coherence and q2 = frame coverage; q3..q6 stay blank there.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .frames import FRAME_ORDER, Frame, frame_from_letter
from .metrics import harmonic_mean, mean, round_half_up
from .variants import VARIANT_NAMES

FRAME_QUESTION: Mapping[Frame, str] = {
    Frame.ECONOMIC: "q3",
    Frame.LEGALITY: "q4",
    Frame.POLICY: "q5",
    Frame.CRIME: "q6",
}

QUESTIONS = ("q1", "q2", "q3", "q4", "q5", "q6")
DIMENSIONS = ("topic", "coherence", "framing")


class AnnotationError(ValueError):
    """Malformed or incomplete annotation records."""


@dataclass(frozen=True)
class AnnotationRecord:
    """One worker's judgment of one generated sentence."""

    instance_id: str
    variant: str
    source_frame: Frame
    target_frame: Frame
    worker_id: str
    answers: Mapping[str, int]  # question -> score in {0, 1, 2}

    @property
    def intra_frame(self) -> bool:
        return self.source_frame == self.target_frame


def read_annotations_csv(path: str | Path) -> list[AnnotationRecord]:
    """Read the flat export: instance_id,variant,source_frame,target_frame,
    worker_id,q1..q6. Blank answer cells are treated as unanswered."""
    records: list[AnnotationRecord] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"instance_id", "variant", "source_frame", "target_frame", "worker_id"}
        missing_cols = required - set(reader.fieldnames or [])
        if missing_cols:
            raise AnnotationError(
                f"{path}: missing columns {sorted(missing_cols)}"
            )
        for line_no, row in enumerate(reader, start=2):
            answers: dict[str, int] = {}
            for question in QUESTIONS:
                raw = (row.get(question) or "").strip()
                if not raw:
                    continue
                value = int(raw)
                if value not in (0, 1, 2):
                    raise AnnotationError(
                        f"{path}:{line_no}: {question} value {raw!r} not in 0/1/2"
                    )
                answers[question] = value
            records.append(
                AnnotationRecord(
                    instance_id=row["instance_id"],
                    variant=row["variant"],
                    source_frame=frame_from_letter(row["source_frame"]),
                    target_frame=frame_from_letter(row["target_frame"]),
                    worker_id=row["worker_id"],
                    answers=answers,
                )
            )
    return records


def _framing_answer(record: AnnotationRecord) -> int | None:
    return record.answers.get(FRAME_QUESTION[record.target_frame])


@dataclass(frozen=True)
class DimensionMeans:
    topic: float
    coherence: float
    framing: float

    @property
    def average(self) -> float:
        return (self.topic + self.coherence + self.framing) / 3


def variant_order(name: str) -> tuple[int, str]:
    """Canonical variants first (lattice order), then anything else."""
    if name in VARIANT_NAMES:
        return (VARIANT_NAMES.index(name), name)
    return (len(VARIANT_NAMES), name)


@dataclass(frozen=True)
class ScoreTable:
    """Per (variant, intra/inter block) dimension means, Table-style."""

    rows: Mapping[tuple[str, str], DimensionMeans]  # (variant, "intra"|"inter")

    def variants(self) -> list[str]:
        return sorted({variant for variant, _ in self.rows}, key=variant_order)


def aggregate_scores(records: Sequence[AnnotationRecord]) -> ScoreTable:
    """Mean topic (q2), coherence (q1), and target-frame framing scores,
    split into intra- and inter-frame blocks per variant."""
    rejected = [
        r.instance_id
        for r in records
        if _framing_answer(r) is None or "q1" not in r.answers or "q2" not in r.answers
    ]
    if rejected:
        preview = ", ".join(sorted(set(rejected))[:10])
        raise AnnotationError(
            f"{len(rejected)} records lack q1/q2 or their target-frame "
            f"question: {preview}"
        )

    grouped: dict[tuple[str, str], list[AnnotationRecord]] = defaultdict(list)
    for record in records:
        block = "intra" if record.intra_frame else "inter"
        grouped[(record.variant, block)].append(record)

    rows = {}
    for key, group in grouped.items():
        rows[key] = DimensionMeans(
            topic=mean([r.answers["q2"] for r in group]),
            coherence=mean([r.answers["q1"] for r in group]),
            framing=mean([_framing_answer(r) for r in group]),
        )
    return ScoreTable(rows=rows)


@dataclass(frozen=True)
class AgreementSummary:
    percentage: float  # mean majority share, in percent
    items: int
    skipped: int  # items with fewer than 2 workers


def majority_agreement(records: Sequence[AnnotationRecord]) -> AgreementSummary:
    """Mean share of workers matching the per-item majority answer.

    An item is one (instance, variant, question); on ties the max share
    stands in for the majority share. Items answered by fewer than two
    workers are skipped but counted.
    """
    by_item: dict[tuple[str, str, str], list[int]] = defaultdict(list)
    for record in records:
        for question, value in record.answers.items():
            by_item[(record.instance_id, record.variant, question)].append(value)

    shares: list[float] = []
    skipped = 0
    for values in by_item.values():
        if len(values) < 2:
            skipped += 1
            continue
        counts = defaultdict(int)
        for v in values:
            counts[v] += 1
        shares.append(max(counts.values()) / len(values))
    return AgreementSummary(
        percentage=mean(shares) * 100.0, items=len(shares), skipped=skipped
    )


@dataclass(frozen=True)
class DirectionMatrix:
    """Mean scores of reframing source -> target, inter-frame only."""

    dimension: str
    cells: Mapping[tuple[Frame, Frame], float]  # missing pairs absent

    def row_average(self, source: Frame) -> float | None:
        values = [v for (s, _), v in self.cells.items() if s == source]
        return mean(values) if values else None

    def column_average(self, target: Frame) -> float | None:
        values = [v for (_, t), v in self.cells.items() if t == target]
        return mean(values) if values else None


def direction_matrix(
    records: Sequence[AnnotationRecord], dimension: str
) -> DirectionMatrix:
    if dimension not in DIMENSIONS:
        raise ValueError(f"unknown dimension: {dimension!r}")
    buckets: dict[tuple[Frame, Frame], list[int]] = defaultdict(list)
    for record in records:
        if record.intra_frame:
            continue
        if dimension == "topic":
            value = record.answers.get("q2")
        elif dimension == "coherence":
            value = record.answers.get("q1")
        else:
            value = _framing_answer(record)
        if value is None:
            continue
        buckets[(record.source_frame, record.target_frame)].append(value)
    cells = {pair: mean(values) for pair, values in buckets.items()}
    return DirectionMatrix(dimension=dimension, cells=cells)


@dataclass(frozen=True)
class PilotRow:
    coherence: float
    framing: float

    @property
    def balance(self) -> float:
        return harmonic_mean(self.coherence, self.framing)


def build_pilot_table(records: Sequence[AnnotationRecord]) -> dict[str, PilotRow]:
    """Per-variant coherence (q1) and framing (q2) means of the pilot."""
    grouped: dict[str, list[AnnotationRecord]] = defaultdict(list)
    for record in records:
        grouped[record.variant].append(record)
    table: dict[str, PilotRow] = {}
    for variant, group in grouped.items():
        missing = [r.instance_id for r in group if "q1" not in r.answers or "q2" not in r.answers]
        if missing:
            raise AnnotationError(
                f"pilot records without q1/q2 answers: {sorted(set(missing))[:10]}"
            )
        table[variant] = PilotRow(
            coherence=mean([r.answers["q1"] for r in group]),
            framing=mean([r.answers["q2"] for r in group]),
        )
    return table


@dataclass(frozen=True)
class ModelSelection:
    coherence: tuple[str, ...]  # argmax coherence mean (ties all listed)
    framing: tuple[str, ...]
    balance: tuple[str, ...]    # argmax harmonic mean


def _argmax_all(table: Mapping[str, float]) -> tuple[str, ...]:
    best = max(table.values())
    return tuple(sorted(v for v, score in table.items() if score == best))


def select_models(pilot: Mapping[str, PilotRow]) -> ModelSelection:
    """Pick the most coherent, best-framing, and best-balanced variants."""
    if not pilot:
        raise ValueError("empty pilot table")
    return ModelSelection(
        coherence=_argmax_all({v: row.coherence for v, row in pilot.items()}),
        framing=_argmax_all({v: row.framing for v, row in pilot.items()}),
        balance=_argmax_all({v: row.balance for v, row in pilot.items()}),
    )


def _fmt(value: float | None) -> str:
    return "-" if value is None else f"{round_half_up(value, 2):.2f}"


def render_pilot_report(
    pilot: Mapping[str, PilotRow], selection: ModelSelection, config_hash: str
) -> str:
    lines = [
        "# Pilot ranking",
        "",
        "| Strategy | Coherence | Framing | H. mean |",
        "|---|---|---|---|",
    ]
    for variant in sorted(pilot, key=variant_order):
        row = pilot[variant]
        lines.append(
            f"| {variant} | {_fmt(row.coherence)} | {_fmt(row.framing)} "
            f"| {_fmt(row.balance)} |"
        )
    lines += [
        "",
        f"Most coherent: {', '.join(selection.coherence)}",
        f"Best framing: {', '.join(selection.framing)}",
        f"Best balance: {', '.join(selection.balance)}",
        "",
        f"Config hash: {config_hash}",
        "",
    ]
    return "\n".join(lines)


def render_crowd_report(
    table: ScoreTable, agreement: AgreementSummary, config_hash: str
) -> str:
    lines = [
        "# Crowd evaluation",
        "",
        "| Variant | Block | Topic | Coherence | Framing | Avg |",
        "|---|---|---|---|---|---|",
    ]
    for variant in table.variants():
        for block in ("intra", "inter"):
            means = table.rows.get((variant, block))
            if means is None:
                continue
            lines.append(
                f"| {variant} | {block} | {_fmt(means.topic)} "
                f"| {_fmt(means.coherence)} | {_fmt(means.framing)} "
                f"| {_fmt(means.average)} |"
            )
    lines += [
        "",
        f"Majority agreement: {_fmt(agreement.percentage)}% over "
        f"{agreement.items} items ({agreement.skipped} skipped with <2 workers)",
        "",
        f"Config hash: {config_hash}",
        "",
    ]
    return "\n".join(lines)


def render_direction_report(
    matrices: Sequence[DirectionMatrix], config_hash: str
) -> str:
    lines = ["# Reframing directions", ""]
    header = "| source \\ target | " + " | ".join(f.value for f in FRAME_ORDER) + " | avg |"
    for matrix in matrices:
        lines += [f"## {matrix.dimension.capitalize()}", "", header,
                  "|" + "---|" * (len(FRAME_ORDER) + 2)]
        for source in FRAME_ORDER:
            cells = []
            for target in FRAME_ORDER:
                if source == target:
                    cells.append("-")
                else:
                    cells.append(_fmt(matrix.cells.get((source, target))))
            cells.append(_fmt(matrix.row_average(source)))
            lines.append(f"| {source.value} | " + " | ".join(cells) + " |")
        col_avgs = [_fmt(matrix.column_average(t)) for t in FRAME_ORDER]
        overall = mean(list(matrix.cells.values())) if matrix.cells else None
        lines.append("| avg | " + " | ".join(col_avgs) + f" | {_fmt(overall)} |")
        lines.append("")
    lines += [f"Config hash: {config_hash}", ""]
    return "\n".join(lines)


def score_table_rows(table: ScoreTable) -> list[dict]:
    """Machine-readable twin of the crowd table (raw, unrounded means)."""
    rows = []
    for variant in table.variants():
        for block in ("intra", "inter"):
            means = table.rows.get((variant, block))
            if means is None:
                continue
            rows.append(
                {
                    "variant": variant,
                    "block": block,
                    "topic": means.topic,
                    "coherence": means.coherence,
                    "framing": means.framing,
                    "average": means.average,
                }
            )
    return rows
