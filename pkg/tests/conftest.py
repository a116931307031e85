"""Shared fixtures: a deterministic synthetic corpus in the ingest layout.

The generator fabricates five-topic article files with span annotations
whose offsets are exact by construction (sentences are joined with a
single space and every sentence ends with a period followed by a
capitalized word, so the default splitter reproduces the offsets).
Word pools are large enough that every frame accumulates well over 100
distinct vocabulary words.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

import pytest

from reframer.corpus import KNOWN_TOPICS
from reframer.frames import FRAME_ORDER, Frame
from reframer.instances import Instance
from reframer.textseg import Sentence


def make_words(prefix: str, count: int) -> list[str]:
    """Deterministic pronounceable words, alphabetic only."""
    syllables = [c + v for c in "bdfglmnprst" for v in "aeiou"]
    words = []
    i = 0
    while len(words) < count:
        a, b = divmod(i, len(syllables))
        words.append(prefix + syllables[a % len(syllables)] + syllables[b])
        i += 1
    return words


FRAME_POOLS: dict[Frame, list[str]] = {
    Frame.ECONOMIC: make_words("ec", 130),
    Frame.LEGALITY: make_words("le", 130),
    Frame.POLICY: make_words("po", 130),
    Frame.CRIME: make_words("cr", 130),
}
FILLER = make_words("fi", 160)
NAME_WORDS = [w.capitalize() for w in make_words("na", 40)]

# codes whose floor maps to each frame under the default table
FRAME_CODES: dict[Frame, list[float]] = {
    Frame.ECONOMIC: [1.0, 1.2],
    Frame.LEGALITY: [5.1, 5.2],
    Frame.POLICY: [6.1, 13.1],
    Frame.CRIME: [7.1, 7.2],
}
UNMAPPED_CODES = [2.3, 9.1]


def synth_sentence(rng: random.Random, frame: Frame | None) -> str:
    """9..13 tokens (plus terminal period token), capitalized start."""
    length = rng.randint(9, 13)
    tokens = []
    for i in range(length):
        if frame is not None and i % 2 == 0:
            tokens.append(rng.choice(FRAME_POOLS[frame]))
        else:
            tokens.append(rng.choice(FILLER))
    if rng.random() < 0.6:  # a two-token name gives the entity port work
        name = f"{rng.choice(NAME_WORDS)} {rng.choice(NAME_WORDS)}"
        tokens[2:2] = name.split()
    tokens[0] = tokens[0].capitalize()
    return " ".join(tokens) + "."


def synth_article(
    rng: random.Random, topic: str, index: int, frame_cycle: list[Frame]
) -> tuple[str, dict]:
    n_sentences = rng.randint(6, 9)
    # choose which sentences carry labels; interior ones mostly, but the
    # first/last occasionally get one to exercise the boundary rule
    labeled: dict[int, list[Frame]] = {}
    for idx in range(n_sentences):
        interior = 0 < idx < n_sentences - 1
        if rng.random() < (0.55 if interior else 0.1):
            frame = frame_cycle.pop(0)
            frame_cycle.append(frame)
            frames = [frame]
            if interior and rng.random() < 0.2:
                other = frame_cycle.pop(0)
                frame_cycle.append(other)
                if other != frame:
                    frames.append(other)
            labeled[idx] = frames

    sentences = []
    for idx in range(n_sentences):
        frame = labeled[idx][0] if idx in labeled else None
        sentences.append(synth_sentence(rng, frame))

    text = ""
    offsets = []
    for sentence in sentences:
        if text:
            text += " "
        offsets.append((len(text), len(text) + len(sentence)))
        text += sentence

    framing: dict[str, list[dict]] = {"ann1": [], "ann2": []}
    for idx, frames in labeled.items():
        start, end = offsets[idx]
        for pos, frame in enumerate(frames):
            annotator = "ann1" if pos == 0 else "ann2"
            code = rng.choice(FRAME_CODES[frame])
            framing[annotator].append(
                {"start": start + 1, "end": end - 1, "code": code}
            )
    if rng.random() < 0.3:  # unmapped-major span; never yields an instance
        start, end = offsets[rng.randrange(n_sentences)]
        framing["ann1"].append(
            {"start": start, "end": end, "code": rng.choice(UNMAPPED_CODES)}
        )
    if index == 0:  # one out-of-bounds span per topic, dropped at load
        framing["ann2"].append({"start": 0, "end": len(text) + 50, "code": 1.0})

    article_id = f"{topic}-{index:03d}"
    return article_id, {
        "text": text,
        "title": f"Synthetic report {index} on {topic}",
        "source": rng.choice(["Daily Ledger", "Harbor Times", "The Meridian"]),
        "year": 1990 + index % 20,
        "annotations": {"framing": framing},
    }


def write_synthetic_corpus(
    directory: Path,
    topics: tuple[str, ...] = KNOWN_TOPICS,
    per_topic: int = 14,
    seed: int = 7,
) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)
    frame_cycle = list(FRAME_ORDER)
    for topic in topics:
        payload = {}
        for index in range(per_topic):
            article_id, obj = synth_article(rng, topic, index, frame_cycle)
            payload[article_id] = obj
        with open(directory / f"{topic}.json", "w", encoding="utf-8") as fh:
            json.dump(payload, fh, ensure_ascii=False, indent=1, sort_keys=True)
    return directory


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory) -> Path:
    return write_synthetic_corpus(tmp_path_factory.mktemp("corpus"))


def sentence_with_tokens(n: int, prefix: str = "w") -> Sentence:
    """A sentence whose tokenize() count is exactly n."""
    text = " ".join(f"{prefix}{i}" for i in range(n))
    return Sentence(text=text, start=0, end=len(text))


def make_instance(
    instance_id: str = "art-001:00000:e",
    frame: Frame = Frame.ECONOMIC,
    split: str = "train",
    n1: int = 10,
    n2: int = 10,
    n3: int = 10,
    entities: tuple[str, ...] = (),
    s2_text: str | None = None,
    all_frames: frozenset[Frame] | None = None,
) -> Instance:
    if s2_text is not None:
        s2 = Sentence(text=s2_text, start=0, end=len(s2_text))
    else:
        # distinct middle text per id, so negative targets differ from
        # their source's own sentence
        checksum = sum(ord(c) for c in instance_id) % 997
        s2 = sentence_with_tokens(n2, f"m{checksum}x")
    return Instance(
        id=instance_id,
        article_id=instance_id.split(":")[0],
        topic="tobacco",
        split=split,
        frame=frame,
        all_frames=all_frames or frozenset({frame}),
        s1=sentence_with_tokens(n1, "a"),
        s2=s2,
        s3=sentence_with_tokens(n3, "z"),
        entities=entities,
    )
