"""A small word-level GRU encoder-decoder with greedy decoding.

Sized for CPU smoke-scale training: the point of this backend is to
exercise the protocol and the staged training plans end to end, not to
reach publication-grade generation quality.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import torch
from torch import nn

from .data import BOS, EOS, PAD, Vocabulary


@dataclass(frozen=True)
class ModelConfig:
    embedding_dim: int
    hidden_dim: int
    max_input_len: int
    max_target_len: int

    def as_dict(self) -> dict:
        return {
            "embedding_dim": self.embedding_dim,
            "hidden_dim": self.hidden_dim,
            "max_input_len": self.max_input_len,
            "max_target_len": self.max_target_len,
        }


class Seq2Seq(nn.Module):
    def __init__(self, vocab_size: int, config: ModelConfig):
        super().__init__()
        self.config = config
        self.embedding = nn.Embedding(vocab_size, config.embedding_dim, padding_idx=0)
        self.encoder = nn.GRU(
            config.embedding_dim, config.hidden_dim, batch_first=True
        )
        self.decoder = nn.GRU(
            config.embedding_dim, config.hidden_dim, batch_first=True
        )
        self.projection = nn.Linear(config.hidden_dim, vocab_size)

    def encode(self, source: torch.Tensor) -> torch.Tensor:
        _, hidden = self.encoder(self.embedding(source))
        return hidden

    def forward(self, source: torch.Tensor, target_in: torch.Tensor) -> torch.Tensor:
        hidden = self.encode(source)
        outputs, _ = self.decoder(self.embedding(target_in), hidden)
        return self.projection(outputs)


@dataclass(frozen=True)
class DecodeParams:
    """Backend-side decoding configuration (the wire carries only
    max_tokens). Sampling draws from a generator seeded per input, so
    repeated identical requests still get identical outputs."""

    mode: str = "greedy"  # "greedy" | "sample"
    temperature: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in ("greedy", "sample"):
            raise ValueError(f"unknown decode mode: {self.mode!r}")
        if self.temperature <= 0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")


@torch.no_grad()
def decode(
    model: Seq2Seq,
    vocab: Vocabulary,
    text: str,
    max_tokens: int,
    fallback_word: str,
    params: DecodeParams = DecodeParams(),
) -> str:
    """Decode one sentence; never returns an empty string.

    EOS is suppressed on the first step; if everything decoded is
    special/marker tokens, the stored fallback word stands in. Greedy
    mode is fully deterministic; sample mode is deterministic per
    (params.seed, input text).
    """
    model.eval()
    device = next(model.parameters()).device
    generator = None
    if params.mode == "sample":
        generator = torch.Generator(device=device)
        digest = hashlib.sha256(f"{params.seed}|{text}".encode()).digest()[:8]
        generator.manual_seed(int.from_bytes(digest, "big") % (2**63))
    source = torch.tensor(
        [vocab.encode(text, model.config.max_input_len)],
        dtype=torch.long,
        device=device,
    )
    hidden = model.encode(source)
    token = torch.tensor([[vocab.index[BOS]]], dtype=torch.long, device=device)
    eos_id = vocab.index[EOS]
    pad_id = vocab.index[PAD]

    ids: list[int] = []
    budget = min(max_tokens, model.config.max_target_len)
    for step in range(budget):
        output, hidden = model.decoder(model.embedding(token), hidden)
        logits = model.projection(output[0, -1])
        logits[pad_id] = float("-inf")
        if step == 0:
            logits[eos_id] = float("-inf")
        if generator is None:
            next_id = int(torch.argmax(logits).item())
        else:
            probabilities = torch.softmax(logits / params.temperature, dim=-1)
            next_id = int(
                torch.multinomial(probabilities, 1, generator=generator).item()
            )
        if next_id == eos_id:
            break
        ids.append(next_id)
        token = torch.tensor([[next_id]], dtype=torch.long, device=device)

    decoded = vocab.decode(ids)
    return decoded if decoded else fallback_word


def greedy_decode(
    model: Seq2Seq,
    vocab: Vocabulary,
    text: str,
    max_tokens: int,
    fallback_word: str,
) -> str:
    return decode(model, vocab, text, max_tokens, fallback_word)
