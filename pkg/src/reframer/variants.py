"""The eight training-strategy variants.

Three independent strategies compose into a lattice of eight variants:
pooled framed-language pretraining, entity-preserving input
serialization, and adversarial negative sampling. Canonical names run
S0 (none) through SFNA (all three).
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Variant:
    use_pretraining: bool  # extra pooled-corpus phase before finetuning
    use_entities: bool     # entity block serialized into the input
    use_adversarial: bool  # negative examples + short extra phase

    @property
    def name(self) -> str:
        suffix = (
            ("F" if self.use_pretraining else "")
            + ("N" if self.use_entities else "")
            + ("A" if self.use_adversarial else "")
        )
        return f"S{suffix or '0'}"

    @classmethod
    def from_name(cls, name: str) -> "Variant":
        if not name.startswith("S"):
            raise ValueError(f"unknown variant name: {name!r}")
        suffix = name[1:]
        if suffix == "0":
            suffix = ""
        if set(suffix) - set("FNA") or len(set(suffix)) != len(suffix):
            raise ValueError(f"unknown variant name: {name!r}")
        variant = cls(
            use_pretraining="F" in suffix,
            use_entities="N" in suffix,
            use_adversarial="A" in suffix,
        )
        if variant.name != name:
            raise ValueError(
                f"non-canonical variant name {name!r}; expected {variant.name!r}"
            )
        return variant


VARIANT_NAMES = ("S0", "SF", "SN", "SA", "SFN", "SFA", "SNA", "SFNA")


def enumerate_variants() -> list[Variant]:
    """All eight variants in canonical table order."""
    return [Variant.from_name(name) for name in VARIANT_NAMES]
