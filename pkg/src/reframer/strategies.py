"""Training-set emission for the strategy variants.

Turns instances into serialized input/target pairs: pooled pretraining
sets, per-frame finetuning sets, adversarial negatives whose target
sentence is swapped for a same-frame sentence elsewhere in the training
split, and the ordered phase plans a trainer executes.

The serialized input grammar uses three reserved bracket tokens; builds
fail fast if any corpus text contains them, which keeps serialization
invertible.
"""

from __future__ import annotations

import math
import random
import re
from bisect import bisect_left
from dataclasses import dataclass
from typing import Iterable, Sequence

from .entities import entity_jaccard
from .frames import Frame
from .instances import Instance
from .variants import Variant

MASK_TOKEN = "[MASK]"
ENTITY_OPEN = "[NE]"
ENTITY_CLOSE = "[/NE]"
RESERVED_TOKENS = (MASK_TOKEN, ENTITY_OPEN, ENTITY_CLOSE)
ENTITY_JOINER = "; "


class ReservedTokenError(ValueError):
    """Corpus text contains a reserved serialization token."""


class TrainingSetError(ValueError):
    """Raised for split violations or empty frames/pools."""


@dataclass(frozen=True)
class TrainingExample:
    input: str
    target: str
    frame: Frame
    variant: str
    kind: str  # "positive" | "negative"
    source_instance_id: str
    negative_source_id: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("positive", "negative"):
            raise ValueError(f"bad example kind: {self.kind!r}")
        if self.kind == "negative" and self.negative_source_id is None:
            raise ValueError("negative example without a negative_source_id")


def check_corpus_clean(*texts: str) -> None:
    for text in texts:
        for token in RESERVED_TOKENS:
            if token in text:
                raise ReservedTokenError(
                    f"reserved token {token} occurs in corpus text: {text[:80]!r}"
                )


def serialize_context(
    s1: str, s3: str, entities: Sequence[str], with_entities: bool
) -> str:
    """"{s1} [MASK] {s3}", or with entities "{s1} [NE] e1; e2 [/NE] {s3}".

    An empty entity list under with_entities still emits an explicit
    empty block "[NE] [/NE]"."""
    if not with_entities:
        return f"{s1} {MASK_TOKEN} {s3}"
    if entities:
        block = f"{ENTITY_OPEN} {ENTITY_JOINER.join(entities)} {ENTITY_CLOSE}"
    else:
        block = f"{ENTITY_OPEN} {ENTITY_CLOSE}"
    return f"{s1} {block} {s3}"


def serialize_input(instance: Instance, with_entities: bool) -> str:
    return serialize_context(
        instance.s1.text, instance.s3.text, instance.entities, with_entities
    )


_ENTITY_FORM = re.compile(
    rf"\A(?P<s1>.*) {re.escape(ENTITY_OPEN)}(?: (?P<block>.*?))? "
    rf"{re.escape(ENTITY_CLOSE)} (?P<s3>.*)\Z",
    re.DOTALL,
)
_MASK_FORM = re.compile(
    rf"\A(?P<s1>.*) {re.escape(MASK_TOKEN)} (?P<s3>.*)\Z", re.DOTALL
)


def parse_serialized_input(text: str) -> tuple[str, list[str] | None, str]:
    """Inverse of serialize_context for corpus-clean strings.

    Returns (s1, entities-or-None, s3); entities is None for the masked
    form and a (possibly empty) list for the entity form.
    """
    m = _ENTITY_FORM.match(text)
    if m:
        block = m.group("block")
        entities = block.split(ENTITY_JOINER) if block else []
        return m.group("s1"), entities, m.group("s3")
    m = _MASK_FORM.match(text)
    if m:
        return m.group("s1"), None, m.group("s3")
    raise ValueError(f"not a serialized input: {text[:80]!r}")


def _check_training_split(instances: Iterable[Instance]) -> None:
    offenders = [i.id for i in instances if i.split != "train"]
    if offenders:
        preview = ", ".join(offenders[:5])
        raise TrainingSetError(
            f"{len(offenders)} non-training-split instances in training build: "
            f"{preview}"
        )


def _validate_clean(instance: Instance) -> None:
    check_corpus_clean(
        instance.s1.text, instance.s2.text, instance.s3.text, *instance.entities
    )


def build_pretrain_set(
    instances: Sequence[Instance], variant: Variant
) -> list[TrainingExample]:
    """One positive example per instance, all frames pooled.

    This is the framed-language pretraining corpus: the model sees every
    frame's text before it specializes. Inputs follow the variant's
    entity flag; the target is always the instance's own middle sentence.
    """
    _check_training_split(instances)
    examples = []
    for inst in sorted(instances, key=lambda i: i.id):
        _validate_clean(inst)
        examples.append(
            TrainingExample(
                input=serialize_input(inst, variant.use_entities),
                target=inst.s2.text,
                frame=inst.frame,
                variant=variant.name,
                kind="positive",
                source_instance_id=inst.id,
            )
        )
    return examples


class AdversarialPool:
    """Same-frame candidate pool with an inverted entity index.

    Entity-mode selection only needs to score candidates that share at
    least one case-folded surface with the probe (anything else scores
    0), which keeps per-frame negative sampling far below the quadratic
    all-pairs cost on corpus-scale frames.
    """

    def __init__(self, candidates: Sequence[Instance]):
        self.candidates = sorted(candidates, key=lambda c: c.id)
        self.ids = [c.id for c in self.candidates]
        self.by_entity: dict[str, list[Instance]] = {}
        for candidate in self.candidates:
            for surface in {s.casefold() for s in candidate.entities}:
                self.by_entity.setdefault(surface, []).append(candidate)

    def _without(self, instance_id: str) -> tuple[int, bool]:
        position = bisect_left(self.ids, instance_id)
        present = position < len(self.ids) and self.ids[position] == instance_id
        return position, present

    def best_entity_match(self, instance: Instance) -> Instance | None:
        """Argmax of entity Jaccard, ties to smallest id; None when no
        candidate shares an entity (every score is then 0)."""
        own = {s.casefold() for s in instance.entities}
        sharing = {
            candidate.id: candidate
            for surface in own
            for candidate in self.by_entity.get(surface, [])
            if candidate.id != instance.id
        }
        if not sharing:
            return None
        return min(
            sharing.values(),
            key=lambda c: (-entity_jaccard(own, c.entities), c.id),
        )

    def smallest_other(self, instance: Instance) -> Instance | None:
        position, present = self._without(instance.id)
        if not self.candidates or (len(self.candidates) == 1 and present):
            return None
        return self.candidates[1 if present and position == 0 else 0]

    def random_other(self, instance: Instance, rng: random.Random) -> Instance | None:
        position, present = self._without(instance.id)
        size = len(self.candidates) - (1 if present else 0)
        if size <= 0:
            return None
        index = rng.randrange(size)
        if present and index >= position:
            index += 1
        return self.candidates[index]


def select_adversarial_target(
    instance: Instance,
    frame: Frame,
    pool: Sequence[Instance] | AdversarialPool,
    use_entities: bool,
    seed: int,
) -> Instance:
    """Pick the substitute target sentence for a negative example.

    Entity mode: the pool candidate with maximal entity-set Jaccard to
    the instance, ties broken by smallest id. Otherwise: a uniform pick
    from an RNG derived from (seed, instance id), so the choice is stable
    across runs and independent of pool order. Callers selecting for many
    instances should pass a prebuilt AdversarialPool.
    """
    if not isinstance(pool, AdversarialPool):
        pool = AdversarialPool(pool)
    if use_entities:
        chosen = pool.best_entity_match(instance)
        if chosen is None:  # all scores 0: smallest id wins the tie
            chosen = pool.smallest_other(instance)
    else:
        rng = random.Random(f"{seed}:{instance.id}")
        chosen = pool.random_other(instance, rng)
    if chosen is None:
        raise TrainingSetError(
            f"no adversarial candidates for frame {frame.value!r}"
        )
    return chosen


def build_finetune_set(
    instances: Sequence[Instance],
    frame: Frame,
    variant: Variant,
    seed: int,
    neg_ratio: float = 1.0,
) -> list[TrainingExample]:
    """Per-frame training set: positives, then adversarial negatives.

    Positives are the frame's training instances (id order), each
    targeting its own middle sentence. Under the adversarial flag,
    floor(neg_ratio * positives) negatives follow: the input context is
    kept verbatim from a positive instance while the target is swapped
    for a selected same-frame sentence. Ratios above 1 cycle through the
    positives.
    """
    _check_training_split(instances)
    positives = sorted(
        (i for i in instances if i.frame == frame), key=lambda i: i.id
    )
    if not positives:
        raise TrainingSetError(f"no training instances for frame {frame.value!r}")

    examples = []
    for inst in positives:
        _validate_clean(inst)
        examples.append(
            TrainingExample(
                input=serialize_input(inst, variant.use_entities),
                target=inst.s2.text,
                frame=frame,
                variant=variant.name,
                kind="positive",
                source_instance_id=inst.id,
            )
        )
    if variant.use_adversarial:
        pool = AdversarialPool(positives)
        n_neg = math.floor(neg_ratio * len(positives))
        for j in range(n_neg):
            source = positives[j % len(positives)]
            adversary = select_adversarial_target(
                source, frame, pool, variant.use_entities, seed
            )
            examples.append(
                TrainingExample(
                    input=serialize_input(source, variant.use_entities),
                    target=adversary.s2.text,
                    frame=frame,
                    variant=variant.name,
                    kind="negative",
                    source_instance_id=source.id,
                    negative_source_id=adversary.id,
                )
            )
    return examples


@dataclass(frozen=True)
class TrainingPhase:
    phase: str     # "pretrain" | "finetune" | "adversarial"
    file: str      # workdir-relative JSONL path
    epochs: int
    examples: str  # "all" | "positive"


def emit_training_plan(
    variant: Variant,
    frame: Frame,
    pretrain_epochs: int = 1,
    finetune_epochs: int = 1,
    adversarial_epochs: int = 3,
) -> list[TrainingPhase]:
    """Ordered phases a trainer executes for (variant, frame).

    Pooled pretraining first when enabled, then frame-positive
    finetuning, then the short adversarial phase over the mixed
    positive+negative set (3 epochs by default, to push frame features
    without wrecking coherence).
    """
    phases: list[TrainingPhase] = []
    if variant.use_pretraining:
        phases.append(
            TrainingPhase(
                phase="pretrain",
                file=f"train/{variant.name}/pretrain.jsonl",
                epochs=pretrain_epochs,
                examples="all",
            )
        )
    frame_file = f"train/{variant.name}/{frame.value}.jsonl"
    phases.append(
        TrainingPhase(
            phase="finetune",
            file=frame_file,
            epochs=finetune_epochs,
            examples="positive",
        )
    )
    if variant.use_adversarial:
        phases.append(
            TrainingPhase(
                phase="adversarial",
                file=frame_file,
                epochs=adversarial_epochs,
                examples="all",
            )
        )
    return phases


def example_to_record(example: TrainingExample) -> dict:
    return {
        "input": example.input,
        "target": example.target,
        "frame": example.frame.value,
        "variant": example.variant,
        "kind": example.kind,
        "source_instance_id": example.source_instance_id,
        "negative_source_id": example.negative_source_id,
    }


def phases_to_plan(
    variant: Variant, frame: Frame, phases: Sequence[TrainingPhase], config_hash: str
) -> dict:
    return {
        "config_hash": config_hash,
        "variant": variant.name,
        "frame": frame.value,
        "phases": [
            {
                "phase": p.phase,
                "file": p.file,
                "epochs": p.epochs,
                "examples": p.examples,
            }
            for p in phases
        ],
    }
