"""Tokenization and rule-based sentence segmentation.

The tokenizer is deliberately dumb and frozen: whitespace split with
leading/trailing punctuation peeled off into their own tokens, no
lowercasing. Length filtering and ROUGE both count these tokens, so the
definition must never drift between modules.

The sentence splitter is the frozen default; callers that need a smarter
splitter pass their own callable wherever a splitter is accepted.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(text: str) -> list[str]:
    """Whitespace tokens with leading/trailing punctuation split off.

    "Congress adjourned." -> ["Congress", "adjourned", "."]. Internal
    punctuation (hyphens, apostrophes, "U.S" dots) stays attached.
    """
    tokens: list[str] = []
    for chunk in text.split():
        i, j = 0, len(chunk)
        leading: list[str] = []
        trailing: list[str] = []
        while i < j and _is_punct(chunk[i]):
            leading.append(chunk[i])
            i += 1
        while j > i and _is_punct(chunk[j - 1]):
            trailing.append(chunk[j - 1])
            j -= 1
        tokens.extend(leading)
        if i < j:
            tokens.append(chunk[i:j])
        tokens.extend(reversed(trailing))
    return tokens


@dataclass(frozen=True)
class Sentence:
    """One sentence with character offsets into its source text."""

    text: str
    start: int
    end: int
    tokens: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.end <= self.start:
            raise ValueError(f"empty sentence span [{self.start},{self.end})")
        if not self.tokens:
            object.__setattr__(self, "tokens", tuple(tokenize(self.text)))

    @classmethod
    def from_text(cls, text: str) -> "Sentence":
        """Standalone sentence (offsets relative to itself); used when
        reading instances back from JSONL, where article offsets are gone."""
        return cls(text=text, start=0, end=len(text))


# Common abbreviations that end in '.' but do not end a sentence.
# Single uppercase initials ("K.") are handled by a pattern, not the list.
DEFAULT_ABBREVIATIONS = frozenset(
    {
        "Mr.", "Mrs.", "Ms.", "Dr.", "Prof.", "Rev.", "Hon.",
        "Sen.", "Rep.", "Gov.", "Gen.", "Col.", "Sgt.", "Lt.", "Capt.",
        "Jr.", "Sr.", "St.", "Mt.", "Ft.",
        "U.S.", "U.N.", "U.K.", "D.C.", "L.A.",
        "Jan.", "Feb.", "Mar.", "Apr.", "Jun.", "Jul.", "Aug.",
        "Sept.", "Oct.", "Nov.", "Dec.",
        "Inc.", "Corp.", "Co.", "Ltd.", "Dept.", "Assn.",
        "vs.", "v.", "No.", "etc.", "e.g.", "i.e.", "a.m.", "p.m.",
    }
)

_TERMINALS = ".!?"


def _word_ending_at(text: str, period_pos: int) -> str:
    """The maximal non-whitespace run ending at text[period_pos] inclusive."""
    start = period_pos
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    return text[start : period_pos + 1]


def segment_sentences(
    text: str, abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS
) -> list[Sentence]:
    """Split text into ordered, non-overlapping sentences.

    A break happens after a run of ./!/? when the next non-space character
    is uppercase, unless the word ending at a '.' is a known abbreviation
    or a single-letter initial ("K."). All non-whitespace text is covered;
    text without terminal punctuation is one sentence.
    """
    breaks: list[int] = []
    n = len(text)
    i = 0
    while i < n:
        if text[i] not in _TERMINALS:
            i += 1
            continue
        run_end = i
        while run_end + 1 < n and text[run_end + 1] in _TERMINALS:
            run_end += 1
        # next non-space character after the punctuation run
        j = run_end + 1
        has_space = j < n and text[j].isspace()
        while j < n and text[j].isspace():
            j += 1
        splittable = has_space and j < n and text[j].isupper()
        if splittable and text[run_end] == ".":
            word = _word_ending_at(text, run_end)
            if word in abbreviations or (
                len(word) == 2 and word[0].isupper() and word[1] == "."
            ):
                splittable = False
        if splittable:
            breaks.append(run_end + 1)
        i = run_end + 1

    sentences: list[Sentence] = []
    prev = 0
    for boundary in breaks + [n]:
        start, end = prev, boundary
        while start < end and text[start].isspace():
            start += 1
        while end > start and text[end - 1].isspace():
            end -= 1
        if start < end:
            sentences.append(Sentence(text=text[start:end], start=start, end=end))
        prev = boundary
    return sentences
