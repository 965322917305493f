"""Corpus records, train/dev/test splitting, statistics, keypoint pruning.

Splits aim for the requested ratios while keeping dev and test free of
glosses unseen in train: whole partitions are redrawn until the constraint
holds, with a deterministic fallback that moves offending samples to train.

Corpus manifests are line-delimited JSON records (sample_id, signer_id,
episode_id, start_frame, end_frame, fps, glosses, text).  Split files carry
``<sample_id>\\t<split>`` lines.  Keypoint files start with one ASCII header
line ``<sample_id> <frame_count>`` followed by frame_count * n_points * 3
little-endian float32 values in C order; pruned files always hold 121 points
per frame.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .fileio import read_jsonl, read_tsv_pairs, write_jsonl, write_tsv_pairs

MIN_SAMPLE_S = 3.0
MAX_SAMPLE_S = 15.0
DEFAULT_RATIOS = (0.9, 0.05, 0.05)
SPLIT_NAMES = ("train", "dev", "test")

# COCO-WholeBody layout: 17 body, 6 feet, 68 face, 42 hand points.
_N_WHOLEBODY = 133
_FACE = slice(23, 91)
_HANDS = slice(91, 133)
_UPPER_BODY = slice(0, 11)
N_PRUNED = 121


@dataclass
class SampleRecord:
    """One aligned sign clip with its gloss annotation and subtitle text."""

    sample_id: str
    signer_id: str
    episode_id: str
    start_frame: int
    end_frame: int
    fps: float
    glosses: list[str]
    text: str

    def __post_init__(self) -> None:
        if not self.sample_id or any(c.isspace() for c in self.sample_id):
            raise ValueError(f"bad sample_id {self.sample_id!r}")
        if self.fps <= 0:
            raise ValueError(f"fps must be positive, got {self.fps}")
        if self.end_frame <= self.start_frame:
            raise ValueError(
                f"{self.sample_id}: empty frame span "
                f"[{self.start_frame}, {self.end_frame})"
            )
        duration = self.duration_s
        if not MIN_SAMPLE_S <= duration <= MAX_SAMPLE_S:
            raise ValueError(
                f"{self.sample_id}: duration {duration:.3f}s outside "
                f"[{MIN_SAMPLE_S}, {MAX_SAMPLE_S}]s"
            )

    @property
    def duration_s(self) -> float:
        return (self.end_frame - self.start_frame) / self.fps


@dataclass
class SplitAssignment:
    """Sample-to-split map plus the seed and the achieved ratios."""

    assignment: dict[str, str]
    seed: int
    ratios: tuple[float, float, float]
    attempts: int = 1
    moved_to_train: int = 0


@dataclass
class SplitStats:
    """Size and vocabulary statistics for one split (or the whole corpus)."""

    hours: float
    samples: int
    gloss_vocab: int
    gloss_running: int
    gloss_oov: int | None
    gloss_singletons: int
    char_vocab: int
    char_running: int
    char_oov: int | None
    char_singletons: int


def _sample_chars(record: SampleRecord) -> list[str]:
    return [c for c in record.text if not c.isspace()]


def make_split(
    samples: Sequence[SampleRecord],
    ratios: tuple[float, float, float] = DEFAULT_RATIOS,
    seed: int = 0,
    max_attempts: int = 100,
) -> SplitAssignment:
    """Seeded random partition with zero dev/test gloss OOVs against train.

    Redraws the whole partition up to max_attempts times; when exhausted it
    falls back to greedily moving the dev/test samples that carry unseen
    glosses into train (fewest moves first), so the call never fails.
    """
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must be three nonnegative values summing to 1: {ratios}")
    if max_attempts < 1:
        raise ValueError(f"max_attempts must be >= 1, got {max_attempts}")
    ids = [s.sample_id for s in samples]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate sample ids")
    if not samples:
        raise ValueError("cannot split an empty corpus")

    gloss_sets = [set(s.glosses) for s in samples]
    n = len(samples)
    n_dev = int(round(n * ratios[1]))
    n_test = int(round(n * ratios[2]))
    rng = random.Random(seed)

    def partition() -> tuple[list[int], list[int], list[int]]:
        order = list(range(n))
        rng.shuffle(order)
        return order[n_dev + n_test :], order[:n_dev], order[n_dev : n_dev + n_test]

    def oov_offenders(
        train: list[int], held: list[int]
    ) -> tuple[set[str], list[tuple[int, set[str]]]]:
        vocab: set[str] = set()
        for i in train:
            vocab |= gloss_sets[i]
        offenders = []
        for i in held:
            unseen = gloss_sets[i] - vocab
            if unseen:
                offenders.append((i, unseen))
        oov = set()
        for _, unseen in offenders:
            oov |= unseen
        return oov, offenders

    moved = 0
    attempts = 0
    train: list[int] = []
    dev: list[int] = []
    test: list[int] = []
    while attempts < max_attempts:
        attempts += 1
        train, dev, test = partition()
        oov, _ = oov_offenders(train, dev + test)
        if not oov:
            break

    oov, offenders = oov_offenders(train, dev + test)
    while oov:
        # Move the sample covering the most unseen gloss types; earliest
        # held-out position breaks ties, keeping the fallback deterministic.
        held = dev + test
        position = {i: p for p, i in enumerate(held)}
        best, _ = max(offenders, key=lambda o: (len(o[1]), -position[o[0]]))
        if best in dev:
            dev.remove(best)
        else:
            test.remove(best)
        train.append(best)
        moved += 1
        oov, offenders = oov_offenders(train, dev + test)

    assignment: dict[str, str] = {}
    for split, members in zip(SPLIT_NAMES, (train, dev, test)):
        for i in members:
            assignment[ids[i]] = split
    achieved = (len(train) / n, len(dev) / n, len(test) / n)
    return SplitAssignment(
        assignment=assignment,
        seed=seed,
        ratios=achieved,
        attempts=attempts,
        moved_to_train=moved,
    )


def compute_stats(
    samples: Sequence[SampleRecord], assignment: SplitAssignment
) -> dict[str, SplitStats]:
    """Per-split and overall statistics; OOV columns compare against train.

    OOV counts are types unseen in train and are reported as None
    (not applicable) for the train split and the overall row.  Singletons
    are counted within each split independently.
    """
    by_split: dict[str, list[SampleRecord]] = {name: [] for name in SPLIT_NAMES}
    for record in samples:
        split = assignment.assignment.get(record.sample_id)
        if split is None:
            raise ValueError(f"sample {record.sample_id} missing from assignment")
        if split not in by_split:
            raise ValueError(f"sample {record.sample_id} has unknown split {split!r}")
        by_split[split].append(record)

    train_glosses = {g for r in by_split["train"] for g in r.glosses}
    train_chars = {c for r in by_split["train"] for c in _sample_chars(r)}

    def stats_for(records: Sequence[SampleRecord], is_train_like: bool) -> SplitStats:
        gloss_counts: Counter = Counter()
        char_counts: Counter = Counter()
        for r in records:
            gloss_counts.update(r.glosses)
            char_counts.update(_sample_chars(r))
        return SplitStats(
            hours=sum(r.duration_s for r in records) / 3600.0,
            samples=len(records),
            gloss_vocab=len(gloss_counts),
            gloss_running=sum(gloss_counts.values()),
            gloss_oov=None
            if is_train_like
            else sum(1 for g in gloss_counts if g not in train_glosses),
            gloss_singletons=sum(1 for c in gloss_counts.values() if c == 1),
            char_vocab=len(char_counts),
            char_running=sum(char_counts.values()),
            char_oov=None
            if is_train_like
            else sum(1 for c in char_counts if c not in train_chars),
            char_singletons=sum(1 for c in char_counts.values() if c == 1),
        )

    result = {
        name: stats_for(by_split[name], name == "train") for name in SPLIT_NAMES
    }
    result["overall"] = stats_for(list(samples), True)
    return result


def prune_keypoints(points: np.ndarray) -> np.ndarray:
    """Drop lower body and feet from COCO-WholeBody keypoints.

    Accepts one frame (133, 3) or a sequence (n, 133, 3); returns 121 points
    per frame ordered face (68), hands (42), upper body (11), with
    coordinates copied bit-exactly.
    """
    points = np.asarray(points)
    if points.shape[-2:] != (_N_WHOLEBODY, 3) or points.ndim not in (2, 3):
        raise ValueError(
            f"expected (..., {_N_WHOLEBODY}, 3) keypoints, got {points.shape}"
        )
    return np.concatenate(
        [points[..., _FACE, :], points[..., _HANDS, :], points[..., _UPPER_BODY, :]],
        axis=-2,
    )


def write_manifest(records: Iterable[SampleRecord], path: str | Path) -> None:
    write_jsonl(
        (
            {
                "sample_id": r.sample_id,
                "signer_id": r.signer_id,
                "episode_id": r.episode_id,
                "start_frame": r.start_frame,
                "end_frame": r.end_frame,
                "fps": r.fps,
                "glosses": r.glosses,
                "text": r.text,
            }
            for r in records
        ),
        path,
    )


def read_manifest(path: str | Path) -> list[SampleRecord]:
    records = []
    for raw in read_jsonl(path):
        try:
            records.append(
                SampleRecord(
                    sample_id=raw["sample_id"],
                    signer_id=raw["signer_id"],
                    episode_id=raw["episode_id"],
                    start_frame=int(raw["start_frame"]),
                    end_frame=int(raw["end_frame"]),
                    fps=float(raw["fps"]),
                    glosses=list(raw["glosses"]),
                    text=raw["text"],
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"{path}: bad sample record: {exc}") from exc
    return records


def write_split_file(assignment: SplitAssignment, path: str | Path) -> None:
    write_tsv_pairs(sorted(assignment.assignment.items()), path)


def read_split_file(path: str | Path) -> dict[str, str]:
    result = {}
    for sample_id, split in read_tsv_pairs(path):
        if split not in SPLIT_NAMES:
            raise ValueError(f"{path}: unknown split {split!r} for {sample_id}")
        result[sample_id] = split
    return result


def write_keypoint_file(
    sample_id: str, frames: np.ndarray, path: str | Path
) -> None:
    """Write frames of shape (n, points, 3) as little-endian float32."""
    frames = np.asarray(frames)
    if frames.ndim != 3 or frames.shape[-1] != 3:
        raise ValueError(f"expected (n, points, 3) array, got {frames.shape}")
    with Path(path).open("wb") as fh:
        fh.write(f"{sample_id} {frames.shape[0]}\n".encode("ascii"))
        fh.write(frames.astype("<f4", copy=False).tobytes(order="C"))


def read_keypoint_file(path: str | Path) -> tuple[str, np.ndarray]:
    """Read a keypoint file; the per-frame point count is inferred."""
    with Path(path).open("rb") as fh:
        header = fh.readline().decode("ascii", errors="replace").split()
        if len(header) != 2:
            raise ValueError(f"{path}: header must be '<sample_id> <frame_count>'")
        sample_id, count_field = header
        try:
            n_frames = int(count_field)
        except ValueError as exc:
            raise ValueError(f"{path}: bad frame count {count_field!r}") from exc
        payload = fh.read()
    if n_frames == 0:
        return sample_id, np.zeros((0, N_PRUNED, 3), dtype=np.float32)
    frame_bytes = len(payload) // n_frames
    if frame_bytes % 12 or frame_bytes * n_frames != len(payload):
        raise ValueError(f"{path}: payload size {len(payload)} does not divide evenly")
    n_points = frame_bytes // 12
    data = np.frombuffer(payload, dtype="<f4")
    return sample_id, data.reshape(n_frames, n_points, 3)
