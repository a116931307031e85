"""Full loop: pipeline CLI emits artifacts, sidecar trains from the
emitted plans, and the pipeline drives the live sidecar over HTTP.

The pipeline is consumed strictly through its external surfaces: the
console script, the files it writes, and the /v1 wire. The server
socket is bound before the run so the backend URL can sit in the config
file and every artifact shares one config hash.
"""

from __future__ import annotations

import json
import random
import subprocess
import threading
from pathlib import Path

import pytest

from reframer_sidecar.server import ServingConfig, make_server
from reframer_sidecar.training import execute_plan

FRAMES = ("e", "l", "p", "c")
FRAME_CODE = {"e": 1.0, "l": 5.1, "p": 6.1, "c": 7.2}
WORDS = {
    "e": ["market", "budget", "industry", "cost", "revenue", "trade", "tax"],
    "l": ["court", "ruling", "statute", "judge", "appeal", "rights", "filing"],
    "p": ["bill", "vote", "senate", "policy", "campaign", "reform", "session"],
    "c": ["police", "arrest", "sentence", "crime", "prison", "charges", "patrol"],
}
FILLERS = ["the", "after", "before", "local", "state", "new", "was", "said", "again", "slowly"]


def _sentence(rng: random.Random, frame: str | None) -> str:
    words = []
    for i in range(rng.randint(8, 11)):
        pool = WORDS[frame] if frame and i % 2 == 0 else FILLERS
        words.append(rng.choice(pool))
    words[0] = words[0].capitalize()
    return " ".join(words) + "."


def _write_corpus(directory: Path) -> None:
    """One-topic corpus: 10 articles, labeled interior sentences cycling
    through the four frames."""
    rng = random.Random(23)
    cycle = list(FRAMES)
    payload = {}
    for index in range(10):
        frames_here = [cycle[(index * 2) % 4], cycle[(index * 2 + 1) % 4]]
        sentences = []
        labeled = {1: frames_here[0], 3: frames_here[1]}
        for position in range(5):
            sentences.append(_sentence(rng, labeled.get(position)))
        text = ""
        offsets = []
        for sentence in sentences:
            if text:
                text += " "
            offsets.append((len(text), len(text) + len(sentence)))
            text += sentence
        spans = [
            {"start": offsets[pos][0] + 1, "end": offsets[pos][1] - 1,
             "code": FRAME_CODE[frame]}
            for pos, frame in labeled.items()
        ]
        payload[f"tobacco-{index:03d}"] = {
            "text": text,
            "title": f"Integration article {index}",
            "source": "Integration Wire",
            "year": 2001 + index,
            "annotations": {"framing": {"ann1": spans}},
        }
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "tobacco.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def _pipeline(config: Path, *args: str) -> subprocess.CompletedProcess:
    return subprocess.run(
        ["reframer", "-c", str(config), *args],
        capture_output=True,
        text=True,
        timeout=300,
    )


@pytest.mark.integration
def test_pipeline_to_sidecar_round_trip(tmp_path):
    corpus = tmp_path / "corpus"
    _write_corpus(corpus)
    workdir = tmp_path / "run"
    checkpoints = tmp_path / "checkpoints"
    checkpoints.mkdir()

    # bind the socket first so the URL is known; checkpoints load later
    serving = ServingConfig(checkpoint_dir=checkpoints, backend_id="sidecar-int", port=0)
    server, store = make_server(serving, preload=False)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    url = f"http://127.0.0.1:{server.server_address[1]}"

    config = tmp_path / "run.toml"
    config.write_text(
        "\n".join(
            [
                f'workdir = "{workdir}"',
                f'corpus_dir = "{corpus}"',
                'topics = ["tobacco"]',
                "seed = 4",
                "val_per_topic = 1",
                "test_per_topic = 1",
                f'backend = "{url}"',
            ]
        )
        + "\n",
        encoding="utf-8",
    )

    try:
        for command in (
            ("ingest",),
            ("split",),
            ("build",),
            ("vocab",),
            ("emit-train", "--variant", "SN"),
        ):
            result = _pipeline(config, *command)
            assert result.returncode == 0, result.stderr

        # the sidecar trains from the pipeline's own emitted plan files
        for frame in FRAMES:
            plan = workdir / "plan" / "SN" / f"{frame}.json"
            assert plan.exists()
            execute_plan(plan, checkpoints, preset_name="tiny", seed=4)
        store.load()

        result = _pipeline(config, "reframe", "--variant", "SN")
        assert result.returncode == 0, result.stderr
        assert "0 failed" in result.stdout

        for frame in FRAMES:
            path = workdir / "generated" / "SN" / f"{frame}.jsonl"
            records = [json.loads(l) for l in path.read_text().splitlines()[1:]]
            assert records
            assert all(r["backend_id"] == "sidecar-int" for r in records)
            assert all(r["generated"].strip() for r in records)

        result = _pipeline(config, "eval", "auto")
        assert result.returncode == 0, result.stderr
        rouge_rows = (workdir / "eval" / "rouge.tsv").read_text().splitlines()
        assert any(row.startswith("SN\t") for row in rouge_rows)

        # one config hash across the whole run, so report accepts it
        result = _pipeline(config, "report")
        assert result.returncode == 0, result.stderr
    finally:
        server.shutdown()
