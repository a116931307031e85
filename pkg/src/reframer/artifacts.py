"""Artifact files under the workdir, every one stamped with the config hash.

Conventions (documented in the README):
* JSONL: first line is a header object {"artifact", "config_hash"},
  then one record per line; readers skip the header.
* JSON: a top-level "config_hash" key.
* TSV / vocab text: first line "# config_hash=<hash>".
* Markdown reports: a trailing "Config hash: <hash>" line.

All writes are UTF-8, newline-terminated, and deterministic given the
records; nothing time-dependent is ever written.
"""

from __future__ import annotations

import json
import re
from pathlib import Path
from typing import Iterable, Sequence


class MissingArtifactError(FileNotFoundError):
    """An upstream artifact is absent; the message names the producer."""

    def __init__(self, path: Path, producer: str):
        super().__init__(
            f"missing artifact {path}; run `reframer {producer}` first"
        )
        self.path = path
        self.producer = producer


class ArtifactHashMismatch(ValueError):
    """Artifacts from different configurations were mixed."""


# workdir-relative locations, with the subcommand that produces each
ARTICLES = ("articles.jsonl", "ingest")
SPLITS = ("splits.json", "split")
INSTANCES = ("instances.jsonl", "build")


def workdir_file(workdir: Path, name: str) -> Path:
    return workdir / name


def require(workdir: Path, artifact: tuple[str, str]) -> Path:
    name, producer = artifact
    path = workdir / name
    if not path.exists():
        raise MissingArtifactError(path, producer)
    return path


def write_jsonl(
    path: Path, artifact: str, config_hash: str, records: Iterable[dict]
) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            json.dumps({"artifact": artifact, "config_hash": config_hash}) + "\n"
        )
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def read_jsonl(path: Path) -> tuple[dict, list[dict]]:
    """Returns (header, records); headerless files get an empty header."""
    header: dict = {}
    records: list[dict] = []
    with open(path, encoding="utf-8") as fh:
        for idx, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if idx == 0 and "artifact" in obj and "config_hash" in obj:
                header = obj
                continue
            records.append(obj)
    return header, records


def write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path: Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_tsv(
    path: Path, config_hash: str, columns: Sequence[str], rows: Iterable[Sequence]
) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# config_hash={config_hash}\n")
        fh.write("\t".join(columns) + "\n")
        for row in rows:
            fh.write("\t".join(str(cell) for cell in row) + "\n")


def write_text(path: Path, content: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(content if content.endswith("\n") else content + "\n")


_TSV_HASH = re.compile(r"^# config_hash=(\S+)")
_MD_HASH = re.compile(r"^Config hash: (\S+)", re.MULTILINE)


def embedded_hash(path: Path) -> str | None:
    """Extract the embedded config hash from any artifact file."""
    suffix = path.suffix
    if suffix == ".jsonl":
        header, _ = read_jsonl(path)
        return header.get("config_hash")
    if suffix == ".json":
        return read_json(path).get("config_hash")
    text = path.read_text(encoding="utf-8")
    if suffix in (".tsv", ".txt"):
        m = _TSV_HASH.match(text)
        return m.group(1) if m else None
    if suffix == ".md":
        m = _MD_HASH.search(text)
        return m.group(1) if m else None
    return None


def check_hashes(workdir: Path, expected: str) -> list[tuple[Path, str]]:
    """All (path, hash) pairs under workdir; raises on any mismatch."""
    found: list[tuple[Path, str]] = []
    mismatched: list[str] = []
    for path in sorted(workdir.rglob("*")):
        if not path.is_file() or path.suffix not in (".jsonl", ".json", ".tsv", ".txt", ".md"):
            continue
        file_hash = embedded_hash(path)
        if file_hash is None:
            continue
        found.append((path, file_hash))
        if file_hash != expected:
            mismatched.append(f"{path} has {file_hash}, expected {expected}")
    if mismatched:
        raise ArtifactHashMismatch(
            "artifacts from different configs present:\n  " + "\n  ".join(mismatched)
        )
    return found
