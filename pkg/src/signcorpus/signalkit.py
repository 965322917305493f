"""Frame and score stream primitives for activity and subtitle segmentation.

Two streams drive the pipeline: per-frame classifier scores for the signer
window (activity detection) and raw pixel intensities for the subtitle strip
(change detection).  Both use half-open frame intervals [start, end) and
intensities normalized to [0, 1].

File formats:

* Score stream: UTF-8 text, first line ``fps=<float>``, then one score per
  line.
* Raw frame stream: one ASCII header line ``<width> <height> <n_frames>``,
  then ``width * height * n_frames`` bytes, frame-major and row-major within
  each frame; intensity = byte / 255.
* Image directory: numbered 8-bit grayscale or RGB images, ordered by their
  numeric stem; RGB is reduced to luma with BT.601 weights.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

BT601_WEIGHTS = (0.299, 0.587, 0.114)


class DataFormatError(ValueError):
    """An input file or record does not match its documented layout."""


class SegmentKind(str, enum.Enum):
    SIGN = "sign"
    SUBTITLE = "subtitle"


@dataclass(frozen=True)
class Segment:
    """Half-open frame interval [start_frame, end_frame)."""

    start_frame: int
    end_frame: int
    kind: SegmentKind = SegmentKind.SIGN

    def __post_init__(self) -> None:
        if self.start_frame < 0 or self.end_frame <= self.start_frame:
            raise ValueError(
                f"invalid segment [{self.start_frame}, {self.end_frame})"
            )

    @property
    def n_frames(self) -> int:
        return self.end_frame - self.start_frame

    def duration_s(self, fps: float) -> float:
        return self.n_frames / fps


@dataclass
class ScoreStream:
    """Per-frame activity scores in [0, 1] for one episode."""

    episode_id: str
    fps: float
    scores: list[float]

    def __post_init__(self) -> None:
        if self.fps <= 0:
            raise ValueError(f"fps must be positive, got {self.fps}")
        bad = [s for s in self.scores if not 0.0 <= s <= 1.0]
        if bad:
            raise ValueError(f"scores outside [0, 1]: {bad[:3]}")


@dataclass
class FrameStream:
    """Grayscale frames for one episode, shape (n_frames, height, width)."""

    episode_id: str
    fps: float
    frames: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.fps <= 0:
            raise ValueError(f"fps must be positive, got {self.fps}")
        if self.frames.ndim != 3:
            raise ValueError(f"frames must be 3-d, got shape {self.frames.shape}")
        if self.frames.size and (self.frames.min() < 0.0 or self.frames.max() > 1.0):
            raise ValueError("frame intensities outside [0, 1]")

    @property
    def n_frames(self) -> int:
        return int(self.frames.shape[0])

    @property
    def height(self) -> int:
        return int(self.frames.shape[1])

    @property
    def width(self) -> int:
        return int(self.frames.shape[2])


def binarize_and_segment(
    scores: ScoreStream, threshold: float, kind: SegmentKind = SegmentKind.SIGN
) -> list[Segment]:
    """Return maximal runs of frames whose score >= threshold."""
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    segments: list[Segment] = []
    run_start: int | None = None
    for i, score in enumerate(scores.scores):
        if score >= threshold:
            if run_start is None:
                run_start = i
        elif run_start is not None:
            segments.append(Segment(run_start, i, kind))
            run_start = None
    if run_start is not None:
        segments.append(Segment(run_start, len(scores.scores), kind))
    return segments


def filter_by_duration(
    segments: list[Segment], fps: float, min_s: float, max_s: float
) -> list[Segment]:
    """Keep segments with min_s <= duration <= max_s (bounds inclusive)."""
    if not 0 < min_s <= max_s:
        raise ValueError(f"need 0 < min_s <= max_s, got {min_s}, {max_s}")
    if fps <= 0:
        raise ValueError(f"fps must be positive, got {fps}")
    return [s for s in segments if min_s <= s.duration_s(fps) <= max_s]


def temporal_laplacian(stream: FrameStream) -> np.ndarray:
    """Per-frame mean absolute second temporal difference.

    For interior frames the measure is mean_pixels |I[t-1] - 2 I[t] + I[t+1]|;
    the first and last frame are assigned 0.  Output length equals the
    stream length.
    """
    n = stream.n_frames
    if n < 3:
        raise ValueError(f"stream too short: {n} frames, need at least 3")
    frames = stream.frames.astype(np.float64, copy=False)
    second_diff = frames[:-2] - 2.0 * frames[1:-1] + frames[2:]
    measures = np.zeros(n, dtype=np.float64)
    measures[1:-1] = np.abs(second_diff).mean(axis=(1, 2))
    return measures


def detect_transitions(measures: np.ndarray, threshold: float) -> list[int]:
    """One transition index per contiguous above-threshold run.

    Within a run the index with the largest measure is reported; the first
    index wins ties.
    """
    if threshold <= 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    measures = np.asarray(measures, dtype=np.float64)
    transitions: list[int] = []
    run_start: int | None = None
    for i in range(len(measures) + 1):
        above = i < len(measures) and measures[i] > threshold
        if above and run_start is None:
            run_start = i
        elif not above and run_start is not None:
            run = measures[run_start:i]
            transitions.append(run_start + int(np.argmax(run)))
            run_start = None
    return transitions


def segments_from_transitions(
    transitions: list[int],
    frame_count: int,
    kind: SegmentKind = SegmentKind.SUBTITLE,
) -> list[Segment]:
    """Partition [0, frame_count) at the given transition indices."""
    if frame_count < 0:
        raise ValueError(f"frame_count must be >= 0, got {frame_count}")
    if frame_count == 0:
        return []
    for t in transitions:
        if not 0 <= t < frame_count:
            raise ValueError(f"transition {t} outside [0, {frame_count})")
    bounds = sorted(set(transitions) | {0, frame_count})
    return [
        Segment(a, b, kind) for a, b in zip(bounds, bounds[1:]) if b > a
    ]


def rgb_to_luma(rgb: np.ndarray) -> np.ndarray:
    """Reduce an (..., 3) RGB array in [0, 1] to luma with BT.601 weights."""
    if rgb.shape[-1] != 3:
        raise ValueError(f"expected trailing RGB axis of size 3, got {rgb.shape}")
    r, g, b = BT601_WEIGHTS
    return r * rgb[..., 0] + g * rgb[..., 1] + b * rgb[..., 2]


def quantize_u8(plane: np.ndarray) -> np.ndarray:
    """Quantize intensities in [0, 1] to bytes, rounding half away from zero."""
    return np.clip(np.floor(plane * 255.0 + 0.5), 0, 255).astype(np.uint8)


def read_score_stream(path: str | Path, episode_id: str | None = None) -> ScoreStream:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("fps="):
        raise DataFormatError(f"{path}: first line must be 'fps=<float>'")
    try:
        fps = float(lines[0][len("fps="):])
        scores = [float(line) for line in lines[1:] if line.strip()]
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc
    return ScoreStream(episode_id or path.stem, fps, scores)


def write_score_stream(stream: ScoreStream, path: str | Path) -> None:
    lines = [f"fps={stream.fps}"] + [repr(s) for s in stream.scores]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_raw_frames(
    path: str | Path, fps: float, episode_id: str | None = None
) -> FrameStream:
    """Read the raw planar frame format (header line, then bytes)."""
    path = Path(path)
    with path.open("rb") as fh:
        header = fh.readline().decode("ascii", errors="replace")
        fields = header.split()
        if len(fields) != 3:
            raise DataFormatError(f"{path}: header must be '<width> <height> <n>'")
        try:
            width, height, n_frames = (int(f) for f in fields)
        except ValueError as exc:
            raise DataFormatError(f"{path}: bad header {header!r}") from exc
        payload = fh.read()
    expected = width * height * n_frames
    if len(payload) != expected:
        raise DataFormatError(
            f"{path}: expected {expected} intensity bytes, found {len(payload)}"
        )
    data = np.frombuffer(payload, dtype=np.uint8).astype(np.float64) / 255.0
    frames = data.reshape(n_frames, height, width)
    return FrameStream(episode_id or path.stem, fps, frames)


def write_raw_frames(stream: FrameStream, path: str | Path) -> None:
    header = f"{stream.width} {stream.height} {stream.n_frames}\n"
    with Path(path).open("wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(quantize_u8(stream.frames).tobytes())


def read_frame_dir(
    path: str | Path, fps: float, episode_id: str | None = None
) -> FrameStream:
    """Read numbered 8-bit grayscale or RGB images as one stream."""
    from PIL import Image

    path = Path(path)
    entries = []
    for child in path.iterdir():
        match = re.search(r"(\d+)", child.stem)
        if child.is_file() and match:
            entries.append((int(match.group(1)), child))
    if not entries:
        raise DataFormatError(f"{path}: no numbered image files found")
    entries.sort()
    planes = []
    for _, child in entries:
        with Image.open(child) as img:
            if img.mode not in ("L", "RGB"):
                img = img.convert("RGB")
            arr = np.asarray(img, dtype=np.float64) / 255.0
        planes.append(rgb_to_luma(arr) if arr.ndim == 3 else arr)
    frames = np.stack(planes)
    return FrameStream(episode_id or path.name, fps, frames)
