"""Fixtures: fabricated training workdirs in the upstream file formats.

The sidecar consumes the pipeline only through its file formats (plan
JSON + training JSONL) and the /v1 wire, so tests fabricate those files
directly: 50 examples per frame over small word pools, with negative
examples for adversarial phases.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

import pytest

FRAMES = ("e", "l", "p", "c")
FRAME_WORDS = {
    "e": ["market", "budget", "industry", "cost", "revenue", "trade"],
    "l": ["court", "ruling", "statute", "judge", "appeal", "rights"],
    "p": ["bill", "vote", "senate", "policy", "campaign", "reform"],
    "c": ["police", "arrest", "sentence", "crime", "prison", "charges"],
}
FILLERS = ["the", "a", "after", "before", "local", "state", "new", "long", "was", "said"]
NAMES = ["Ashford", "Bellamy", "Calder", "Deming", "Ellison"]


def _sentence(rng: random.Random, frame: str) -> str:
    words = []
    for i in range(rng.randint(6, 9)):
        pool = FRAME_WORDS[frame] if i % 2 == 0 else FILLERS
        words.append(rng.choice(pool))
    words[0] = words[0].capitalize()
    return " ".join(words) + "."


def _example(rng: random.Random, frame: str, index: int, with_entities: bool, variant: str) -> dict:
    s1 = _sentence(rng, frame)
    s3 = _sentence(rng, frame)
    target = _sentence(rng, frame)
    entities = rng.sample(NAMES, rng.randint(0, 2))
    if with_entities:
        block = f"[NE] {'; '.join(entities)} [/NE]" if entities else "[NE] [/NE]"
        input_text = f"{s1} {block} {s3}"
    else:
        input_text = f"{s1} [MASK] {s3}"
    return {
        "input": input_text,
        "target": target,
        "frame": frame,
        "variant": variant,
        "kind": "positive",
        "source_instance_id": f"art-{frame}{index:03d}:00010:{frame}",
        "negative_source_id": None,
    }


def write_training_workdir(
    root: Path, variant: str = "SFNA", per_frame: int = 50, seed: int = 5
) -> Path:
    """train/{variant}/*.jsonl + plan/{variant}/*.json for all frames."""
    rng = random.Random(seed)
    with_entities = "N" in variant
    adversarial = "A" in variant
    pretraining = "F" in variant

    train_dir = root / "train" / variant
    plan_dir = root / "plan" / variant
    train_dir.mkdir(parents=True, exist_ok=True)
    plan_dir.mkdir(parents=True, exist_ok=True)

    header = {"artifact": "training-examples", "config_hash": "deadbeef0000"}
    pooled: list[dict] = []
    for frame in FRAMES:
        examples = [
            _example(rng, frame, i, with_entities, variant) for i in range(per_frame)
        ]
        pooled.extend(examples)
        rows = list(examples)
        if adversarial:
            for i, example in enumerate(examples):
                other = examples[(i + 7) % len(examples)]
                rows.append(
                    example
                    | {
                        "kind": "negative",
                        "target": other["target"],
                        "negative_source_id": other["source_instance_id"],
                    }
                )
        with open(train_dir / f"{frame}.jsonl", "w", encoding="utf-8") as fh:
            fh.write(json.dumps(header) + "\n")
            for row in rows:
                fh.write(json.dumps(row) + "\n")

        phases = []
        if pretraining:
            phases.append(
                {
                    "phase": "pretrain",
                    "file": f"train/{variant}/pretrain.jsonl",
                    "epochs": 1,
                    "examples": "all",
                }
            )
        phases.append(
            {
                "phase": "finetune",
                "file": f"train/{variant}/{frame}.jsonl",
                "epochs": 1,
                "examples": "positive",
            }
        )
        if adversarial:
            phases.append(
                {
                    "phase": "adversarial",
                    "file": f"train/{variant}/{frame}.jsonl",
                    "epochs": 3,
                    "examples": "all",
                }
            )
        plan = {
            "config_hash": "deadbeef0000",
            "variant": variant,
            "frame": frame,
            "phases": phases,
        }
        with open(plan_dir / f"{frame}.json", "w", encoding="utf-8") as fh:
            json.dump(plan, fh, indent=2)

    if pretraining:
        with open(train_dir / "pretrain.jsonl", "w", encoding="utf-8") as fh:
            fh.write(json.dumps(header) + "\n")
            for row in pooled:
                fh.write(json.dumps(row) + "\n")
    return root


@pytest.fixture(scope="session")
def workdir(tmp_path_factory) -> Path:
    return write_training_workdir(tmp_path_factory.mktemp("workdir"))


@pytest.fixture(scope="session")
def checkpoints(tmp_path_factory, workdir) -> Path:
    """Tiny-preset checkpoints for all four frames of the SFNA plans."""
    from reframer_sidecar.training import execute_plan

    out = tmp_path_factory.mktemp("checkpoints")
    for frame in FRAMES:
        execute_plan(
            plan_path=workdir / "plan" / "SFNA" / f"{frame}.json",
            out_dir=out,
            preset_name="tiny",
            seed=3,
        )
    return out
