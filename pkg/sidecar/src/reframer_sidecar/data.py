"""Training-file and plan loading, vocabulary, and input serialization.

The sidecar consumes two file formats produced upstream:

* training JSONL: an optional header object, then one example per line
  with at least {"input", "target", "kind"};
* plan JSON: {"variant", "frame", "phases": [{"phase", "file",
  "epochs", "examples"}]} with files relative to the pipeline workdir.

Inputs are whitespace-token sequences; the reserved bracket markers
([MASK], [NE], [/NE]) are ordinary vocabulary items here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

PAD, BOS, EOS, UNK = "<pad>", "<bos>", "<eos>", "<unk>"
SPECIALS = (PAD, BOS, EOS, UNK)
MARKERS = ("[MASK]", "[NE]", "[/NE]")


class PlanError(ValueError):
    """Plan/file mismatch detected before any training step."""


@dataclass(frozen=True)
class Example:
    input: str
    target: str
    kind: str  # "positive" | "negative"


@dataclass(frozen=True)
class Phase:
    phase: str
    file: Path
    epochs: int
    examples: str  # "all" | "positive"


@dataclass(frozen=True)
class Plan:
    variant: str
    frame: str
    phases: tuple[Phase, ...]


def load_examples(path: Path) -> list[Example]:
    examples: list[Example] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            if "input" not in record:  # header or foreign line
                continue
            examples.append(
                Example(
                    input=record["input"],
                    target=record["target"],
                    kind=record.get("kind", "positive"),
                )
            )
    return examples


def load_plan(plan_path: Path, data_root: Path | None = None) -> Plan:
    """Parse a plan and resolve its files; fail before training starts.

    File paths inside the plan are workdir-relative; by default the
    workdir is taken to be two directories above the plan file
    (workdir/plan/VARIANT/frame.json).
    """
    with open(plan_path, encoding="utf-8") as fh:
        payload = json.load(fh)
    for key in ("variant", "frame", "phases"):
        if key not in payload:
            raise PlanError(f"{plan_path}: missing key {key!r}")
    root = data_root if data_root is not None else plan_path.parents[2]

    phases = []
    for index, raw in enumerate(payload["phases"]):
        for key in ("phase", "file", "epochs", "examples"):
            if key not in raw:
                raise PlanError(f"{plan_path}: phase {index} missing {key!r}")
        if raw["examples"] not in ("all", "positive"):
            raise PlanError(
                f"{plan_path}: phase {index} has unknown examples filter "
                f"{raw['examples']!r}"
            )
        if int(raw["epochs"]) < 1:
            raise PlanError(f"{plan_path}: phase {index} has no epoch budget")
        file_path = root / raw["file"]
        if not file_path.exists():
            raise PlanError(f"{plan_path}: phase {index} file not found: {file_path}")
        phases.append(
            Phase(
                phase=raw["phase"],
                file=file_path,
                epochs=int(raw["epochs"]),
                examples=raw["examples"],
            )
        )
    if not phases:
        raise PlanError(f"{plan_path}: empty phase list")

    plan = Plan(
        variant=payload["variant"], frame=payload["frame"], phases=tuple(phases)
    )
    # every phase must yield at least one example under its filter
    for phase in plan.phases:
        if not phase_examples(phase):
            raise PlanError(
                f"{plan_path}: phase {phase.phase} has no usable examples in "
                f"{phase.file}"
            )
    return plan


def phase_examples(phase: Phase) -> list[Example]:
    examples = load_examples(phase.file)
    if phase.examples == "positive":
        examples = [e for e in examples if e.kind == "positive"]
    return examples


class Vocabulary:
    """Word-level vocabulary with fixed special tokens."""

    def __init__(self, words: Sequence[str]):
        self.words = list(SPECIALS) + [w for w in words if w not in SPECIALS]
        self.index = {w: i for i, w in enumerate(self.words)}

    def __len__(self) -> int:
        return len(self.words)

    @classmethod
    def build(cls, examples: Iterable[Example], max_size: int = 8000) -> "Vocabulary":
        counts: dict[str, int] = {}
        for example in examples:
            for token in example.input.split() + example.target.split():
                counts[token] = counts.get(token, 0) + 1
        ranked = sorted(counts, key=lambda w: (-counts[w], w))
        return cls(ranked[: max_size - len(SPECIALS)])

    def encode(self, text: str, max_len: int) -> list[int]:
        unk = self.index[UNK]
        ids = [self.index.get(tok, unk) for tok in text.split()[:max_len]]
        return ids or [unk]

    def decode(self, ids: Iterable[int]) -> str:
        skip = set(SPECIALS) | set(MARKERS)
        words = [self.words[i] for i in ids if 0 <= i < len(self.words)]
        return " ".join(w for w in words if w not in skip)


def most_frequent_target_word(examples: Iterable[Example]) -> str:
    counts: dict[str, int] = {}
    for example in examples:
        for token in example.target.split():
            counts[token] = counts.get(token, 0) + 1
    if not counts:
        return "and"
    return sorted(counts, key=lambda w: (-counts[w], w))[0]


def serialize_request(
    s1: str, s3: str, entities: Sequence[str], with_entities: bool, prompt_only: bool
) -> str:
    """Build the model input exactly as the training files do."""
    if prompt_only:
        return s1
    if with_entities:
        block = f"[NE] {'; '.join(entities)} [/NE]" if entities else "[NE] [/NE]"
        return f"{s1} {block} {s3}"
    return f"{s1} [MASK] {s3}"
