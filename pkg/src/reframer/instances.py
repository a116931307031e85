"""Fill-in-the-blank instance construction.

An instance is three contiguous sentences from one article: the middle
one carries a frame label and is the generation target; its neighbors
are the context. A sentence gets a frame when any annotated span of that
frame overlaps it by at least one character; multi-label sentences
produce one instance per frame. Length filtering keeps instances whose
sentences have 5..50 tokens and whose middle sentence stays within
+/-50% of the mean context length.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .corpus import Article, SplitAssignment
from .entities import dedupe_surfaces, extract_entities
from .frames import Frame, frame_from_letter, map_code_to_frame
from .textseg import Sentence, segment_sentences

# entity port: (instance_id, middle-sentence text) -> entity surfaces
EntityProvider = Callable[[str, str], list[str]]
SentenceSplitter = Callable[[str], list[Sentence]]


def heuristic_entity_provider(instance_id: str, text: str) -> list[str]:
    return [e.surface for e in extract_entities(text)]


@dataclass(frozen=True)
class Instance:
    """One <context, masked sentence, context> triple filed under a frame."""

    id: str
    article_id: str
    topic: str
    split: str
    frame: Frame
    all_frames: frozenset[Frame]
    s1: Sentence
    s2: Sentence
    s3: Sentence
    entities: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.frame not in self.all_frames:
            raise ValueError(f"instance {self.id}: frame not among its labels")


def label_sentences(
    article: Article,
    sentences: Sequence[Sentence],
    code_map: dict[int, Frame] | None = None,
) -> list[frozenset[Frame]]:
    """Per-sentence frame sets under the any-overlap rule."""
    labels: list[frozenset[Frame]] = []
    for sent in sentences:
        frames = {
            frame
            for span in article.spans
            if span.start < sent.end
            and sent.start < span.end
            and (frame := map_code_to_frame(span.code, code_map)) is not None
        }
        labels.append(frozenset(frames))
    return labels


def build_instances(
    article: Article,
    splits: SplitAssignment,
    entity_provider: EntityProvider = heuristic_entity_provider,
    splitter: SentenceSplitter = segment_sentences,
    code_map: dict[int, Frame] | None = None,
) -> list[Instance]:
    """All instances of one article, ordered by (middle offset, frame).

    First and last sentences never become the masked sentence (no
    predecessor/successor). Instance ids are "{article}:{offset}:{frame}"
    with the offset zero-padded so lexicographic id order matches
    document order.
    """
    sentences = splitter(article.text)
    labels = label_sentences(article, sentences, code_map)
    split = splits.split_of(article.id)

    instances: list[Instance] = []
    for idx in range(1, len(sentences) - 1):
        if not labels[idx]:
            continue
        s1, s2, s3 = sentences[idx - 1], sentences[idx], sentences[idx + 1]
        # frame-letter order keeps file order identical to id order
        for frame in sorted(labels[idx], key=lambda f: f.value):
            instance_id = f"{article.id}:{s2.start:05d}:{frame.value}"
            entities = tuple(dedupe_surfaces(entity_provider(instance_id, s2.text)))
            instances.append(
                Instance(
                    id=instance_id,
                    article_id=article.id,
                    topic=article.topic,
                    split=split,
                    frame=frame,
                    all_frames=labels[idx],
                    s1=s1,
                    s2=s2,
                    s3=s3,
                    entities=entities,
                )
            )
    return instances


def build_all_instances(
    articles: Iterable[Article],
    splits: SplitAssignment,
    entity_provider: EntityProvider = heuristic_entity_provider,
    splitter: SentenceSplitter = segment_sentences,
    code_map: dict[int, Frame] | None = None,
) -> list[Instance]:
    """Corpus-wide instance list sorted by (article_id, offset, frame)."""
    out: list[Instance] = []
    for article in articles:
        out.extend(build_instances(article, splits, entity_provider, splitter, code_map))
    out.sort(key=lambda i: (i.article_id, i.s2.start, i.frame.value))
    return out


def passes_length_filter(
    instance: Instance,
    min_tokens: int = 5,
    max_tokens: int = 50,
    tolerance: float = 0.5,
) -> bool:
    """The length predicate, stated exactly: every sentence in
    [min_tokens, max_tokens], and |tokens(middle)| within
    [(1-tolerance)*m, (1+tolerance)*m] for m = mean context length.
    Bounds inclusive, m fractional (no rounding)."""
    n1 = len(instance.s1.tokens)
    n2 = len(instance.s2.tokens)
    n3 = len(instance.s3.tokens)
    if not all(min_tokens <= n <= max_tokens for n in (n1, n2, n3)):
        return False
    mean = (n1 + n3) / 2
    return (1 - tolerance) * mean <= n2 <= (1 + tolerance) * mean


def filter_instances(
    instances: Iterable[Instance],
    min_tokens: int = 5,
    max_tokens: int = 50,
    tolerance: float = 0.5,
) -> list[Instance]:
    return [
        i
        for i in instances
        if passes_length_filter(i, min_tokens, max_tokens, tolerance)
    ]


def instance_to_record(instance: Instance) -> dict:
    return {
        "id": instance.id,
        "article_id": instance.article_id,
        "topic": instance.topic,
        "split": instance.split,
        "frame": instance.frame.value,
        "all_frames": sorted(f.value for f in instance.all_frames),
        "s1": instance.s1.text,
        "s2": instance.s2.text,
        "s3": instance.s3.text,
        "entities": list(instance.entities),
    }


def instance_from_record(record: dict) -> Instance:
    return Instance(
        id=record["id"],
        article_id=record["article_id"],
        topic=record["topic"],
        split=record["split"],
        frame=frame_from_letter(record["frame"]),
        all_frames=frozenset(frame_from_letter(v) for v in record["all_frames"]),
        s1=Sentence.from_text(record["s1"]),
        s2=Sentence.from_text(record["s2"]),
        s3=Sentence.from_text(record["s3"]),
        entities=tuple(record["entities"]),
    )


def count_by_frame_and_split(instances: Iterable[Instance]) -> dict[Frame, dict[str, int]]:
    counts: dict[Frame, dict[str, int]] = {
        frame: {"train": 0, "validation": 0, "test": 0} for frame in Frame
    }
    for inst in instances:
        counts[inst.frame][inst.split] += 1
    return counts
