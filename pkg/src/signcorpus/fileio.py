"""Small shared helpers for line-delimited manifests and atomic writes."""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Iterable


def dumps_record(record: dict[str, Any]) -> str:
    return json.dumps(record, ensure_ascii=False, sort_keys=True)


def write_jsonl(records: Iterable[dict[str, Any]], path: str | Path) -> None:
    text = "".join(dumps_record(r) + "\n" for r in records)
    write_text_atomic(text, path)


def read_jsonl(path: str | Path) -> list[dict[str, Any]]:
    records = []
    for i, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines()):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}:{i + 1}: bad record: {exc}") from exc
    return records


def write_text_atomic(text: str, path: str | Path) -> None:
    write_bytes_atomic(text.encode("utf-8"), path)


def write_bytes_atomic(data: bytes, path: str | Path) -> None:
    """Write via a sibling temp file and rename, so readers never see partials."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with tmp.open("wb") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())
    tmp.replace(path)


def read_tsv_pairs(path: str | Path) -> list[tuple[str, str]]:
    """Read ``<key>\\t<value>`` lines; the value may contain further tabs."""
    pairs = []
    for i, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines()):
        if not line.strip():
            continue
        if "\t" not in line:
            raise ValueError(f"{path}:{i + 1}: expected '<id>\\t<value>'")
        key, value = line.split("\t", 1)
        pairs.append((key, value))
    return pairs


def write_tsv_pairs(pairs: Iterable[tuple[str, str]], path: str | Path) -> None:
    write_text_atomic("".join(f"{k}\t{v}\n" for k, v in pairs), path)
