"""The four merged frame labels and the raw-code -> frame mapping.

Corpus span annotations carry decimal codes (major.minor). We keep four
frames: economic, legality/jurisprudence, policy+political (two majors
merged into one label), and crime/punishment. Everything else maps to
no frame and falls out of the task.
"""

from __future__ import annotations

import math
from enum import Enum


class Frame(str, Enum):
    """Closed set of frame labels; the value is the wire/FS letter."""

    ECONOMIC = "e"
    LEGALITY = "l"
    POLICY = "p"
    CRIME = "c"

    def __str__(self) -> str:
        return self.value


# Canonical ordering used in tables, file output, and multi-label expansion.
FRAME_ORDER: tuple[Frame, ...] = (
    Frame.ECONOMIC,
    Frame.LEGALITY,
    Frame.POLICY,
    Frame.CRIME,
)

FRAME_LABELS: dict[Frame, str] = {
    Frame.ECONOMIC: "Economic",
    Frame.LEGALITY: "Legality & jurisprudence",
    Frame.POLICY: "Policy & political",
    Frame.CRIME: "Crime & punishment",
}

# Major annotation code -> frame. Policy prescription (6) and political (13)
# share one label. Kept as data, not logic: codebook revisions can remap via
# config without touching the pipeline.
DEFAULT_FRAME_CODES: dict[int, Frame] = {
    1: Frame.ECONOMIC,
    5: Frame.LEGALITY,
    6: Frame.POLICY,
    13: Frame.POLICY,
    7: Frame.CRIME,
}


def frame_from_letter(letter: str) -> Frame:
    """Parse the single-letter wire form ('e'/'l'/'p'/'c')."""
    try:
        return Frame(letter)
    except ValueError:
        raise ValueError(f"unknown frame letter: {letter!r}") from None


def map_code_to_frame(
    code: float, code_map: dict[int, Frame] | None = None
) -> Frame | None:
    """Map a decimal span code (major.minor) to a frame, or None.

    Total and pure: the major part (floor) is looked up in the mapping;
    unmapped majors yield None and the span is simply outside the
    four-frame task.
    """
    table = DEFAULT_FRAME_CODES if code_map is None else code_map
    return table.get(math.floor(code))


def parse_code_map(raw: dict[str, str]) -> dict[int, Frame]:
    """Build a code map from config data like {"1": "e", "13": "p"}."""
    mapping: dict[int, Frame] = {}
    for key, letter in raw.items():
        mapping[int(key)] = frame_from_letter(letter)
    return mapping
