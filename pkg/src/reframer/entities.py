"""Named-entity surface extraction behind a pluggable port.

Two implementations of the port:

* the default heuristic extractor (deterministic, no model): capitalized
  runs that don't lean on sentence-start capitalization, title-cased
  multiword spans, and all-caps acronyms;
* a sidecar adapter that reads pre-computed entities from an
  entities.jsonl file keyed by instance id (for callers that ran a real
  NER model out of band).

Entity identity for similarity purposes is the case-folded surface
string; `entity_jaccard` defines both-empty as 0 so that entity-free
candidates never look like perfect matches.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence


@dataclass(frozen=True)
class Entity:
    """An entity surface with offsets into its source sentence."""

    surface: str
    start: int
    end: int
    kind: str | None = None

    def __post_init__(self) -> None:
        if not self.surface:
            raise ValueError("entity surface must be non-empty")
        if self.end - self.start != len(self.surface):
            raise ValueError(
                f"entity span [{self.start},{self.end}) does not fit "
                f"surface {self.surface!r}"
            )


class MissingEntityRecords(KeyError):
    """Sidecar entity file lacks records for requested instance ids."""

    def __init__(self, missing: Sequence[str]):
        self.missing = list(missing)
        preview = ", ".join(self.missing[:10])
        suffix = "" if len(self.missing) <= 10 else f" (+{len(self.missing) - 10} more)"
        super().__init__(f"entity sidecar is missing ids: {preview}{suffix}")


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


_INITIAL = re.compile(r"[A-Z]\.")
_ACRONYM = re.compile(r"(?:[A-Z]\.){2,}|[A-Z]{2,}")

_TITLE, _INIT, _ACRO, _OTHER = "title", "initial", "acronym", "other"


@dataclass(frozen=True)
class _Word:
    core: str
    start: int
    end: int
    cls: str
    breaks_after: bool  # trailing punctuation ends any capitalized run


def _classify(core: str) -> str:
    if _INITIAL.fullmatch(core):
        return _INIT
    if _ACRONYM.fullmatch(core):
        return _ACRO
    if core and core[0].isupper() and any(c.islower() for c in core):
        return _TITLE
    return _OTHER


def _words(text: str) -> list[_Word]:
    words = []
    for m in re.finditer(r"\S+", text):
        chunk, cs, ce = m.group(), m.start(), m.end()
        i, j = 0, len(chunk)
        while i < j and _is_punct(chunk[i]):
            i += 1
        stripped_trailing = False
        while j > i and _is_punct(chunk[j - 1]):
            j -= 1
            stripped_trailing = True
        if i >= j:
            continue
        core = chunk[i:j]
        # a trailing period is part of initials/acronyms ("K.", "U.S.")
        if stripped_trailing and j < len(chunk) and chunk[j] == ".":
            candidate = chunk[i : j + 1]
            if _INITIAL.fullmatch(candidate) or _ACRONYM.fullmatch(candidate):
                core = candidate
                j += 1
                stripped_trailing = j < len(chunk)
        words.append(
            _Word(
                core=core,
                start=cs + i,
                end=cs + j,
                cls=_classify(core),
                breaks_after=stripped_trailing,
            )
        )
    return words


def extract_entities(text: str) -> list[Entity]:
    """Deterministic heuristic extraction of entity surfaces.

    Candidate spans, before overlap pruning:
    * maximal runs of capitalized words (title-cased, initials, acronyms);
      a run anchored at the first word of the sentence drops that word,
      since sentence-start capitalization is not evidence -- unless the
      word is an all-caps acronym;
    * runs of two or more title-cased words, kept whole even at sentence
      start ("New York City banned ...");
    * every all-caps acronym on its own, anywhere.

    Spans strictly contained in another span are dropped, then surfaces
    are deduplicated case-insensitively in first-occurrence order.
    """
    words = _words(text)
    runs: list[list[int]] = []
    current: list[int] = []
    for idx, w in enumerate(words):
        if w.cls in (_TITLE, _INIT, _ACRO):
            current.append(idx)
            if w.breaks_after:
                runs.append(current)
                current = []
        else:
            if current:
                runs.append(current)
            current = []
    if current:
        runs.append(current)

    spans: list[tuple[int, int]] = []
    for run in runs:
        kept = run
        if run[0] == 0 and words[0].cls != _ACRO:
            kept = run[1:]
        if kept:
            spans.append((words[kept[0]].start, words[kept[-1]].end))
        if len(run) >= 2 and all(words[i].cls == _TITLE for i in run):
            spans.append((words[run[0]].start, words[run[-1]].end))
    for idx, w in enumerate(words):
        if w.cls == _ACRO:
            spans.append((w.start, w.end))

    spans = sorted(set(spans))
    maximal = [
        (s, e)
        for s, e in spans
        if not any((os <= s and e <= oe) and (os, oe) != (s, e) for os, oe in spans)
    ]

    seen: set[str] = set()
    entities: list[Entity] = []
    for s, e in sorted(maximal):
        surface = text[s:e]
        key = surface.casefold()
        if key in seen:
            continue
        seen.add(key)
        entities.append(Entity(surface=surface, start=s, end=e))
    return entities


def dedupe_surfaces(surfaces: Iterable[str]) -> list[str]:
    """Case-insensitive dedup, first occurrence wins, order preserved."""
    seen: set[str] = set()
    out: list[str] = []
    for s in surfaces:
        key = s.casefold()
        if key not in seen:
            seen.add(key)
            out.append(s)
    return out


def entity_jaccard(a: Iterable[str], b: Iterable[str]) -> float:
    """Jaccard similarity of case-folded entity surfaces; both-empty -> 0."""
    sa = {s.casefold() for s in a}
    sb = {s.casefold() for s in b}
    if not sa and not sb:
        return 0.0
    return len(sa & sb) / len(sa | sb)


class EntitySidecarFile:
    """Adapter reading pre-computed entities keyed by instance id.

    File format (one JSON object per line, optional header line):
    {"instance_id": ..., "entities": [{"surface","kind","start","end"}, ...]}
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._records: dict[str, list[Entity]] = {}
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                if "instance_id" not in obj:  # header or foreign line
                    continue
                self._records[obj["instance_id"]] = [
                    Entity(
                        surface=e["surface"],
                        start=e.get("start", 0),
                        end=e.get("end", e.get("start", 0) + len(e["surface"])),
                        kind=e.get("kind"),
                    )
                    for e in obj.get("entities", [])
                ]

    def validate_ids(self, instance_ids: Iterable[str]) -> None:
        missing = sorted(i for i in instance_ids if i not in self._records)
        if missing:
            raise MissingEntityRecords(missing)

    def for_instance(self, instance_id: str) -> list[Entity]:
        if instance_id not in self._records:
            raise MissingEntityRecords([instance_id])
        return self._records[instance_id]


def write_entity_sidecar(
    path: str | Path, records: dict[str, list[Entity]], header: dict | None = None
) -> None:
    """Write an entities.jsonl sidecar (used by tests and exports)."""
    with open(path, "w", encoding="utf-8") as fh:
        if header is not None:
            fh.write(json.dumps(header, ensure_ascii=False) + "\n")
        for instance_id in sorted(records):
            obj = {
                "instance_id": instance_id,
                "entities": [
                    {
                        "surface": e.surface,
                        "kind": e.kind,
                        "start": e.start,
                        "end": e.end,
                    }
                    for e in records[instance_id]
                ],
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
