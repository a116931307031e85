"""Staged plan execution: pretrain -> finetune -> adversarial phases.

One checkpoint is written per phase, each initialized from the previous
phase's weights (the chain is recorded in the checkpoint metadata), plus
a final alias "{variant}-{frame}.pt" that serving loads. The whole plan
is validated against its files before the first gradient step.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from pathlib import Path

import torch
from torch import nn

from .data import BOS, EOS, Example, Plan, Vocabulary, load_plan, most_frequent_target_word, phase_examples
from .model import ModelConfig, Seq2Seq

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Preset:
    name: str
    embedding_dim: int
    hidden_dim: int
    max_input_len: int
    max_target_len: int
    batch_size: int
    learning_rate: float
    vocab_size: int


PRESETS = {
    "tiny": Preset(
        name="tiny",
        embedding_dim=32,
        hidden_dim=64,
        max_input_len=48,
        max_target_len=32,
        batch_size=16,
        learning_rate=3e-3,
        vocab_size=4000,
    ),
    "small": Preset(
        name="small",
        embedding_dim=128,
        hidden_dim=256,
        max_input_len=96,
        max_target_len=64,
        batch_size=32,
        learning_rate=1e-3,
        vocab_size=16000,
    ),
}


def _batches(examples: list[Example], vocab: Vocabulary, preset: Preset):
    bos, eos = vocab.index[BOS], vocab.index[EOS]
    for start in range(0, len(examples), preset.batch_size):
        chunk = examples[start : start + preset.batch_size]
        sources = [vocab.encode(e.input, preset.max_input_len) for e in chunk]
        targets = [
            vocab.encode(e.target, preset.max_target_len - 1) for e in chunk
        ]
        src_len = max(len(s) for s in sources)
        tgt_len = max(len(t) for t in targets) + 1
        source = torch.zeros(len(chunk), src_len, dtype=torch.long)
        target_in = torch.zeros(len(chunk), tgt_len, dtype=torch.long)
        target_out = torch.zeros(len(chunk), tgt_len, dtype=torch.long)
        for row, (s, t) in enumerate(zip(sources, targets)):
            source[row, : len(s)] = torch.tensor(s)
            target_in[row, : len(t) + 1] = torch.tensor([bos] + t)
            target_out[row, : len(t) + 1] = torch.tensor(t + [eos])
        yield source, target_in, target_out


def _train_phase(
    model: Seq2Seq,
    vocab: Vocabulary,
    examples: list[Example],
    epochs: int,
    preset: Preset,
) -> float:
    optimizer = torch.optim.Adam(model.parameters(), lr=preset.learning_rate)
    criterion = nn.CrossEntropyLoss(ignore_index=0)
    model.train()
    last_loss = 0.0
    for epoch in range(epochs):
        total, batches = 0.0, 0
        for source, target_in, target_out in _batches(examples, vocab, preset):
            optimizer.zero_grad()
            logits = model(source, target_in)
            loss = criterion(
                logits.reshape(-1, logits.size(-1)), target_out.reshape(-1)
            )
            loss.backward()
            optimizer.step()
            total += float(loss.item())
            batches += 1
        last_loss = total / max(batches, 1)
        logger.info("epoch %d/%d: loss %.4f", epoch + 1, epochs, last_loss)
    return last_loss


def checkpoint_name(variant: str, frame: str) -> str:
    return f"{variant}-{frame}.pt"


def execute_plan(
    plan_path: Path,
    out_dir: Path,
    preset_name: str = "tiny",
    seed: int = 13,
    data_root: Path | None = None,
) -> list[Path]:
    """Run every phase of a plan; returns the checkpoint chain paths.

    The final checkpoint is additionally written under the serving alias
    "{variant}-{frame}.pt".
    """
    preset = PRESETS[preset_name]
    plan: Plan = load_plan(plan_path, data_root)  # validates before training
    torch.manual_seed(seed)

    # vocabulary comes from everything the plan will see
    all_examples: list[Example] = []
    for phase in plan.phases:
        all_examples.extend(phase_examples(phase))
    vocab = Vocabulary.build(all_examples, max_size=preset.vocab_size)
    fallback = most_frequent_target_word(all_examples)

    config = ModelConfig(
        embedding_dim=preset.embedding_dim,
        hidden_dim=preset.hidden_dim,
        max_input_len=preset.max_input_len,
        max_target_len=preset.max_target_len,
    )
    model = Seq2Seq(len(vocab), config)

    out_dir.mkdir(parents=True, exist_ok=True)
    chain: list[Path] = []
    parent: str | None = None
    for index, phase in enumerate(plan.phases):
        examples = phase_examples(phase)
        started = time.monotonic()
        loss = _train_phase(model, vocab, examples, phase.epochs, preset)
        elapsed = time.monotonic() - started
        logger.info(
            "phase %s (%d examples, %d epochs) done in %.1fs",
            phase.phase,
            len(examples),
            phase.epochs,
            elapsed,
        )
        path = out_dir / f"{plan.variant}-{plan.frame}-phase{index + 1}-{phase.phase}.pt"
        payload = {
            "state_dict": model.state_dict(),
            "vocab": vocab.words,
            "model_config": config.as_dict(),
            "variant": plan.variant,
            "frame": plan.frame,
            "phase": phase.phase,
            "phase_index": index + 1,
            "epochs": phase.epochs,
            "examples": len(examples),
            "final_loss": loss,
            "fallback_word": fallback,
            "parent": parent,
            "preset": preset.name,
            "seed": seed,
        }
        torch.save(payload, path)
        chain.append(path)
        parent = path.name

    final = out_dir / checkpoint_name(plan.variant, plan.frame)
    torch.save(torch.load(chain[-1], weights_only=False), final)
    return chain


@dataclass
class LoadedModel:
    model: Seq2Seq
    vocab: Vocabulary
    fallback_word: str
    variant: str
    frame: str


def load_checkpoint(path: Path, device: str = "cpu") -> LoadedModel:
    payload = torch.load(path, map_location=device, weights_only=False)
    # stored words start with the specials, so reconstruction is exact
    vocab = Vocabulary(payload["vocab"])
    config = ModelConfig(**payload["model_config"])
    model = Seq2Seq(len(vocab), config)
    model.load_state_dict(payload["state_dict"])
    model.to(torch.device(device))
    model.eval()
    return LoadedModel(
        model=model,
        vocab=vocab,
        fallback_word=payload["fallback_word"],
        variant=payload["variant"],
        frame=payload["frame"],
    )
