import json
from pathlib import Path

import pytest

from reframer.cli import main
from reframer.frames import FRAME_ORDER
from reframer.variants import VARIANT_NAMES


def run_cli(*args) -> int:
    return main([str(a) for a in args])


def write_config(tmp_path: Path, corpus_dir: Path, **extra) -> Path:
    work = tmp_path / "run"
    settings = {
        "workdir": str(work),
        "corpus_dir": str(corpus_dir),
        "seed": 11,
        "val_per_topic": 2,
        "test_per_topic": 2,
    } | extra
    lines = []
    for key, value in settings.items():
        if isinstance(value, str):
            lines.append(f'{key} = "{value}"')
        else:
            lines.append(f"{key} = {value}")
    config = tmp_path / "run.toml"
    config.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return config


@pytest.fixture()
def pipeline(tmp_path, corpus_dir) -> tuple[Path, Path]:
    """(config file, workdir) with ingest/split/build already run."""
    config = write_config(tmp_path, corpus_dir)
    for command in ("ingest", "split", "build"):
        assert run_cli("-c", config, command) == 0
    return config, tmp_path / "run"


def test_subcommand_level_flags_accepted(tmp_path, corpus_dir):
    work = tmp_path / "w"
    assert (
        run_cli("--workdir", work, "ingest", "--corpus-dir", corpus_dir) == 0
    )
    assert (
        run_cli("--workdir", work, "split", "--seed", 7,
                "--val-per-topic", 2, "--test-per-topic", 2)
        == 0
    )
    assert json.loads((work / "splits.json").read_text())["seed"] == 7


def test_missing_upstream_artifact_names_producer(tmp_path, capsys):
    assert run_cli("--workdir", tmp_path / "empty", "split") == 1
    err = capsys.readouterr().err
    assert "articles.jsonl" in err
    assert "reframer ingest" in err


def test_build_before_split_fails(tmp_path, corpus_dir, capsys):
    work = tmp_path / "w"
    assert run_cli("--workdir", work, "--corpus-dir", corpus_dir, "ingest") == 0
    assert run_cli("--workdir", work, "build") == 1
    assert "reframer split" in capsys.readouterr().err


def test_ingest_and_split_artifacts(pipeline):
    _, workdir = pipeline
    header = json.loads((workdir / "articles.jsonl").read_text().splitlines()[0])
    assert header["artifact"] == "articles"
    splits = json.loads((workdir / "splits.json").read_text())
    assert splits["seed"] == 11
    assert set(splits["assignment"].values()) == {"train", "validation", "test"}


def test_build_prints_table2_stats(tmp_path, corpus_dir, capsys):
    config = write_config(tmp_path, corpus_dir)
    run_cli("-c", config, "ingest")
    run_cli("-c", config, "split")
    assert run_cli("-c", config, "build") == 0
    out = capsys.readouterr().out
    assert "All four frames" in out
    assert "retention:" in out
    # rows in the canonical display order
    lines = [l for l in out.splitlines() if l[:2].strip() in {"e", "l", "p", "c"}]
    assert [l.split()[0] for l in lines] == ["e", "l", "p", "c"]


def test_instances_are_filtered_and_sorted(pipeline):
    _, workdir = pipeline
    lines = (workdir / "instances.jsonl").read_text().splitlines()
    records = [json.loads(l) for l in lines[1:]]
    assert records
    keys = [(r["article_id"], r["id"], r["frame"]) for r in records]
    assert keys == sorted(keys)
    for r in records:
        assert r["frame"] in r["all_frames"]
        assert set(r) == {
            "id", "article_id", "topic", "split", "frame", "all_frames",
            "s1", "s2", "s3", "entities",
        }


def test_vocab_emits_four_ranked_files(pipeline):
    config, workdir = pipeline
    assert run_cli("-c", config, "vocab", "--top-k", 40) == 0
    for frame in FRAME_ORDER:
        path = workdir / "vocab" / f"{frame.value}.txt"
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# config_hash=")
        entries = [l.split("\t") for l in lines[1:]]
        assert len(entries) == 40
        scores = [float(s) for _, s in entries]
        assert scores == sorted(scores, reverse=True)


def test_emit_train_all_variants(pipeline):
    config, workdir = pipeline
    assert run_cli("-c", config, "emit-train") == 0
    for name in VARIANT_NAMES:
        base = workdir / "train" / name
        for frame in FRAME_ORDER:
            assert (base / f"{frame.value}.jsonl").exists()
            plan = json.loads(
                (workdir / "plan" / name / f"{frame.value}.json").read_text()
            )
            phases = [p["phase"] for p in plan["phases"]]
            assert ("pretrain" in phases) == ("F" in name)
            assert ("adversarial" in phases) == ("A" in name)
        assert (base / "pretrain.jsonl").exists() == ("F" in name)
    # adversarial variants have negatives marked and sourced
    sa_lines = (workdir / "train" / "SA" / "e.jsonl").read_text().splitlines()
    records = [json.loads(l) for l in sa_lines[1:]]
    kinds = {r["kind"] for r in records}
    assert kinds == {"positive", "negative"}
    for r in records:
        if r["kind"] == "negative":
            assert r["negative_source_id"]


def test_reframe_eval_report_offline(pipeline, capsys):
    config, workdir = pipeline
    assert run_cli("-c", config, "vocab") == 0
    assert run_cli("-c", config, "emit-train", "--variant", "SN") == 0
    assert (
        run_cli("-c", config, "reframe", "--variant", "SN",
                "--backend", "mock", "--limit-per-frame", 3)
        == 0
    )
    for frame in FRAME_ORDER:
        path = workdir / "generated" / "SN" / f"{frame.value}.jsonl"
        records = [json.loads(l) for l in path.read_text().splitlines()[1:]]
        assert records
        assert all(r["provenance_marker"] for r in records)
        assert all(r["target_frame"] == frame.value for r in records)

    assert run_cli("-c", config, "eval", "auto") == 0
    rouge = (workdir / "eval" / "rouge.tsv").read_text().splitlines()
    assert rouge[1].split("\t")[0] == "variant"
    assert rouge[2].split("\t")[0] == "SN"
    overlap = (workdir / "eval" / "overlap.tsv").read_text().splitlines()
    assert any("%" in line and "(" in line for line in overlap[2:])

    assert run_cli("-c", config, "report") == 0
    run_md = (workdir / "report" / "run.md").read_text()
    assert "Config hash:" in run_md


def test_eval_manual_reports(pipeline, tmp_path):
    config, workdir = pipeline
    annotations = tmp_path / "annotations.csv"
    rows = ["instance_id,variant,source_frame,target_frame,worker_id,q1,q2,q3,q4,q5,q6"]
    for i in range(12):
        source = "elpc"[i % 4]
        target = "elpc"[(i + 1) % 4] if i % 3 else source
        for worker in ("w1", "w2", "w3"):
            rows.append(f"i{i},SN,{source},{target},{worker},2,1,1,0,2,1")
    annotations.write_text("\n".join(rows) + "\n", encoding="utf-8")

    pilot = tmp_path / "pilot.csv"
    pilot_rows = ["instance_id,variant,source_frame,target_frame,worker_id,q1,q2,q3,q4,q5,q6"]
    for variant, (q1, q2) in {"S0": (1, 0), "SN": (2, 1), "SA": (0, 2)}.items():
        for judge in ("a1", "a2"):
            pilot_rows.append(f"p1,{variant},e,e,{judge},{q1},{q2},,,,")
    pilot.write_text("\n".join(pilot_rows) + "\n", encoding="utf-8")

    assert (
        run_cli("-c", config, "eval", "manual",
                "--annotations", annotations, "--pilot", pilot)
        == 0
    )
    report_dir = workdir / "report"
    crowd = (report_dir / "crowd.md").read_text()
    assert "| SN | intra |" in crowd and "| SN | inter |" in crowd
    assert "Majority agreement:" in crowd
    directions = (report_dir / "directions.md").read_text()
    assert "## Coherence" in directions and "## Framing" in directions
    pilot_md = (report_dir / "pilot.md").read_text()
    assert "Best balance: SN" in pilot_md
    assert (report_dir / "crowd.tsv").exists()
    assert (report_dir / "directions.tsv").exists()
    assert (report_dir / "pilot.tsv").exists()


def test_build_with_entity_sidecar_file(pipeline, tmp_path):
    config, workdir = pipeline
    records = [
        json.loads(l) for l in (workdir / "instances.jsonl").read_text().splitlines()[1:]
    ]
    sidecar = tmp_path / "entities.jsonl"
    with open(sidecar, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(
                json.dumps(
                    {
                        "instance_id": record["id"],
                        "entities": [
                            {"surface": "Injected Name", "kind": "PERSON",
                             "start": 0, "end": 13}
                        ],
                    }
                )
                + "\n"
            )
    assert run_cli("-c", config, "build", "--entities-file", sidecar) == 0
    rebuilt = [
        json.loads(l) for l in (workdir / "instances.jsonl").read_text().splitlines()[1:]
    ]
    assert all(r["entities"] == ["Injected Name"] for r in rebuilt)

    # dropping one id must fail, naming it
    lines = sidecar.read_text().splitlines()
    sidecar.write_text("\n".join(lines[1:]) + "\n", encoding="utf-8")
    assert run_cli("-c", config, "build", "--entities-file", sidecar) == 1
    # restore the heuristic build for subsequent fixtures
    assert run_cli("-c", config, "build") == 0


def test_reframe_prompt_only_mode(pipeline):
    config, workdir = pipeline
    assert (
        run_cli("-c", config, "reframe", "--variant", "S0", "--target-frame", "p",
                "--backend", "mock", "--limit-per-frame", 2, "--prompt-only")
        == 0
    )
    path = workdir / "generated" / "S0" / "p.jsonl"
    records = [json.loads(l) for l in path.read_text().splitlines()[1:]]
    assert records and all(r["generated"].strip() for r in records)


def test_reframe_replay_reproduces_recorded_texts(pipeline, tmp_path):
    config, workdir = pipeline
    assert (
        run_cli("-c", config, "reframe", "--variant", "S0",
                "--target-frame", "e", "--backend", "mock",
                "--limit-per-frame", 3)
        == 0
    )
    out_path = workdir / "generated" / "S0" / "e.jsonl"
    recorded = tmp_path / "recorded.jsonl"
    recorded.write_bytes(out_path.read_bytes())
    first = [json.loads(l) for l in out_path.read_text().splitlines()[1:]]

    assert (
        run_cli("-c", config, "reframe", "--variant", "S0",
                "--target-frame", "e", "--backend", f"replay:{recorded}",
                "--limit-per-frame", 3)
        == 0
    )
    second = [json.loads(l) for l in out_path.read_text().splitlines()[1:]]
    assert [(r["instance_id"], r["generated"]) for r in first] == [
        (r["instance_id"], r["generated"]) for r in second
    ]
    assert all(r["backend_id"].startswith("replay:") for r in second)


def test_report_refuses_mixed_hashes(pipeline, capsys):
    config, workdir = pipeline
    assert run_cli("-c", config, "report") == 0
    # a different semantic config must refuse the old artifacts
    assert run_cli("-c", config, "--seed", 999, "report") == 1
    assert "different configs" in capsys.readouterr().err


def test_unknown_backend_spec_errors(pipeline, capsys):
    config, _ = pipeline
    assert (
        run_cli("-c", config, "reframe", "--variant", "SN", "--backend", "quantum")
        == 1
    )
    assert "unknown backend spec" in capsys.readouterr().err
