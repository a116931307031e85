"""Media-frames corpus ingestion and train/validation/test splitting.

Input layout: one JSON file per topic, mapping article id -> an object
with text, title, source, year, and annotations.framing (annotator ->
list of {start, end, code} spans). Spans from all annotators are
unioned; articles without framing spans are kept because their
sentences still serve as context.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

logger = logging.getLogger(__name__)

KNOWN_TOPICS = (
    "death_penalty",
    "gun_control",
    "immigration",
    "same_sex_marriage",
    "tobacco",
)

SPLITS = ("train", "validation", "test")


class CorpusParseError(ValueError):
    """Raised for a missing or structurally broken corpus file."""


class SplitSizeError(ValueError):
    """Raised when a topic has too few articles for the requested split."""


@dataclass(frozen=True)
class FrameSpan:
    """One annotated span: character offsets plus the decimal frame code."""

    start: int
    end: int
    code: float
    annotator: str

    def __post_init__(self) -> None:
        if self.start >= self.end:
            raise ValueError(f"span [{self.start},{self.end}) is empty")
        if self.code <= 0:
            raise ValueError(f"span code must be positive, got {self.code}")


@dataclass(frozen=True)
class Article:
    """One corpus document with span-level frame annotations."""

    id: str
    topic: str
    source: str
    year: int
    title: str
    text: str
    spans: tuple[FrameSpan, ...] = field(default=())


def _require(obj: Mapping, key: str, path: Path, article_id: str | None = None):
    if key not in obj:
        where = f"{path}" if article_id is None else f"{path} (article {article_id})"
        raise CorpusParseError(f"missing key {key!r} in {where}")
    return obj[key]


def _number(caster, obj: Mapping, key: str, path: Path, article_id: str):
    value = _require(obj, key, path, article_id)
    try:
        return caster(value)
    except (TypeError, ValueError) as exc:
        raise CorpusParseError(
            f"bad value {value!r} for key {key!r} in {path} (article {article_id})"
        ) from exc


def load_corpus(path: str | Path, topics: Iterable[str] | None = None) -> list[Article]:
    """Load one Article per corpus entry of the requested topics.

    Spans are flattened across annotators (annotator name retained).
    Out-of-bounds spans are dropped; one warning reports the total count.
    Output is sorted by (topic, id), so loading is idempotent.
    """
    root = Path(path)
    wanted = tuple(sorted(topics)) if topics is not None else KNOWN_TOPICS
    articles: list[Article] = []
    seen_ids: set[str] = set()
    dropped_spans = 0

    for topic in wanted:
        topic_file = root / f"{topic}.json"
        if not topic_file.exists():
            raise CorpusParseError(f"corpus file not found: {topic_file}")
        try:
            with open(topic_file, encoding="utf-8") as fh:
                payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CorpusParseError(f"invalid JSON in {topic_file}: {exc}") from exc
        if not isinstance(payload, dict):
            raise CorpusParseError(f"{topic_file}: expected an object of articles")

        for article_id in sorted(payload):
            obj = payload[article_id]
            if article_id in seen_ids:
                raise CorpusParseError(
                    f"duplicate article id {article_id!r} in {topic_file}"
                )
            seen_ids.add(article_id)
            text = _require(obj, "text", topic_file, article_id)
            annotations = _require(obj, "annotations", topic_file, article_id)
            framing = _require(annotations, "framing", topic_file, article_id)

            spans: list[FrameSpan] = []
            for annotator in sorted(framing):
                for raw in framing[annotator]:
                    start = _number(int, raw, "start", topic_file, article_id)
                    end = _number(int, raw, "end", topic_file, article_id)
                    code = _number(float, raw, "code", topic_file, article_id)
                    if start < 0 or end > len(text) or start >= end or code <= 0:
                        dropped_spans += 1
                        continue
                    spans.append(
                        FrameSpan(start=start, end=end, code=code, annotator=annotator)
                    )

            articles.append(
                Article(
                    id=article_id,
                    topic=topic,
                    source=str(_require(obj, "source", topic_file, article_id)),
                    year=_number(int, obj, "year", topic_file, article_id),
                    title=str(_require(obj, "title", topic_file, article_id)),
                    text=text,
                    spans=tuple(spans),
                )
            )

    if dropped_spans:
        logger.warning(
            "dropped %d spans (out of text bounds or nonpositive code)",
            dropped_spans,
        )
    return articles


@dataclass(frozen=True)
class SplitAssignment:
    """Deterministic article-id -> split mapping for a given seed."""

    seed: int
    assignment: dict[str, str]

    def split_of(self, article_id: str) -> str:
        return self.assignment[article_id]

    def counts(self) -> dict[str, int]:
        out = {name: 0 for name in SPLITS}
        for split in self.assignment.values():
            out[split] += 1
        return out


def assign_splits(
    articles: list[Article],
    seed: int,
    val_per_topic: int = 600,
    test_per_topic: int = 600,
) -> SplitAssignment:
    """Per topic: seeded shuffle, first val_per_topic ids -> validation,
    next test_per_topic -> test, remainder -> train.

    The shuffle runs over the sorted id list with an RNG derived from
    (seed, topic), so the assignment is reproducible regardless of input
    order or platform.
    """
    by_topic: dict[str, list[str]] = {}
    for article in articles:
        by_topic.setdefault(article.topic, []).append(article.id)

    assignment: dict[str, str] = {}
    for topic in sorted(by_topic):
        ids = sorted(by_topic[topic])
        needed = val_per_topic + test_per_topic
        if len(ids) <= needed:
            raise SplitSizeError(
                f"topic {topic!r} has {len(ids)} articles; needs more than "
                f"{needed} ({val_per_topic} validation + {test_per_topic} test)"
            )
        rng = random.Random(f"{seed}:{topic}")
        rng.shuffle(ids)
        for article_id in ids[:val_per_topic]:
            assignment[article_id] = "validation"
        for article_id in ids[val_per_topic : val_per_topic + test_per_topic]:
            assignment[article_id] = "test"
        for article_id in ids[val_per_topic + test_per_topic :]:
            assignment[article_id] = "train"
    return SplitAssignment(seed=seed, assignment=assignment)


def article_to_record(article: Article) -> dict:
    return {
        "id": article.id,
        "topic": article.topic,
        "source": article.source,
        "year": article.year,
        "title": article.title,
        "text": article.text,
        "spans": [
            {"start": s.start, "end": s.end, "code": s.code, "annotator": s.annotator}
            for s in article.spans
        ],
    }


def article_from_record(record: dict) -> Article:
    return Article(
        id=record["id"],
        topic=record["topic"],
        source=record["source"],
        year=record["year"],
        title=record["title"],
        text=record["text"],
        spans=tuple(
            FrameSpan(
                start=s["start"], end=s["end"], code=s["code"], annotator=s["annotator"]
            )
            for s in record["spans"]
        ),
    )
