"""Subtitle strip processing: clip averaging, OCR adapters, and regrouping.

A subtitle clip is the per-pixel average of the strip over one detected
segment.  Clips are OCRed through a pluggable adapter, blank clips are
dropped, and clips whose texts are near-duplicates (oversegmented subtitles)
are regrouped into subtitle groups.

Clip manifests are line-delimited JSON records with fields ``episode_id``,
``start_frame``, ``end_frame``, ``text``, ``confidence`` and optionally
``mean_frame`` (path to the averaged image).
"""

from __future__ import annotations

import enum
import hashlib
import io
import json
import subprocess
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .editops import levenshtein
from .signalkit import FrameStream, Segment, quantize_u8

DEFAULT_BLANK_EPSILON = 0.02
DEFAULT_REGROUP_THRESHOLD = 3


class AdapterError(RuntimeError):
    """An external cleaner or OCR adapter failed at transport or protocol level."""


@dataclass
class SubtitleClip:
    """One detected subtitle interval with its averaged strip image."""

    segment: Segment
    mean_frame: np.ndarray
    text: str | None = None
    ocr_confidence: float | None = None


@dataclass
class SubtitleGroup:
    """Adjacent near-duplicate clips merged into one subtitle event."""

    members: list[SubtitleClip]
    representative_text: str
    start_frame: int
    end_frame: int

    def __post_init__(self) -> None:
        if not self.members:
            raise ValueError("subtitle group needs at least one member")
        texts = [m.text for m in self.members]
        if self.representative_text not in texts:
            raise ValueError("representative text must come from a member")
        if self.start_frame != self.members[0].segment.start_frame:
            raise ValueError("group start must match first member")
        if self.end_frame != self.members[-1].segment.end_frame:
            raise ValueError("group end must match last member")


class OcrKind(str, enum.Enum):
    EXTERNAL_COMMAND = "external_command"
    HTTP = "http"
    MOCK = "mock"


class CleanerKind(str, enum.Enum):
    EXTERNAL_COMMAND = "external_command"
    PASSTHROUGH = "passthrough"


@dataclass
class OcrAdapter:
    """OCR backend: an external command, an HTTP endpoint, or a mock table.

    * external_command: invoked with the image file path appended; must print
      one line ``<confidence>\\t<text>``.
    * http: receives the PNG image bytes by POST; must answer a JSON object
      ``{"text": ..., "confidence": ...}``.
    * mock: looks up the digest of the averaged frame in ``mock_table``
      (digest -> [text, confidence]).
    """

    kind: OcrKind
    command: list[str] | None = None
    endpoint: str | None = None
    mock_table: dict[str, tuple[str, float]] | None = None


@dataclass
class CleanerAdapter:
    """Strip cleaner: passthrough, or an external command taking two raw
    frame-stream paths (input, output)."""

    kind: CleanerKind
    command: list[str] | None = None


def average_clip(stream: FrameStream, segment: Segment) -> SubtitleClip:
    """Average the stream over [start_frame, end_frame) into one clip."""
    if segment.end_frame > stream.n_frames:
        raise ValueError(
            f"segment [{segment.start_frame}, {segment.end_frame}) exceeds "
            f"stream of {stream.n_frames} frames"
        )
    mean = stream.frames[segment.start_frame : segment.end_frame].mean(axis=0)
    return SubtitleClip(segment=segment, mean_frame=mean)


def is_blank(clip: SubtitleClip, epsilon: float = DEFAULT_BLANK_EPSILON) -> bool:
    """True when the clip's mean intensity falls below epsilon."""
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    return float(clip.mean_frame.mean()) < epsilon


def frame_digest(plane: np.ndarray) -> str:
    """Stable digest of a [0, 1] image plane after 8-bit quantization."""
    if plane.ndim != 2:
        raise ValueError(f"expected a 2-d plane, got shape {plane.shape}")
    h = hashlib.sha256()
    h.update(f"{plane.shape[1]} {plane.shape[0]}\n".encode("ascii"))
    h.update(quantize_u8(plane).tobytes())
    return h.hexdigest()


def plane_to_png_bytes(plane: np.ndarray) -> bytes:
    """Encode a [0, 1] image plane as 8-bit grayscale PNG."""
    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(quantize_u8(plane), mode="L").save(buf, format="PNG")
    return buf.getvalue()


def _parse_ocr_line(line: str, source: str) -> tuple[str, float]:
    if "\t" not in line:
        raise AdapterError(f"{source}: expected '<confidence>\\t<text>', got {line!r}")
    confidence_field, text = line.rstrip("\n").split("\t", 1)
    try:
        confidence = float(confidence_field)
    except ValueError as exc:
        raise AdapterError(f"{source}: bad confidence {confidence_field!r}") from exc
    return text, confidence


def run_ocr(clip: SubtitleClip, adapter: OcrAdapter) -> SubtitleClip:
    """Return a copy of the clip with text and confidence filled in.

    Adapter failures raise AdapterError; OCR never yields silent empty text
    for a failed call.
    """
    if adapter.kind is OcrKind.MOCK:
        if adapter.mock_table is None:
            raise AdapterError("mock OCR adapter has no table")
        digest = frame_digest(clip.mean_frame)
        if digest not in adapter.mock_table:
            raise AdapterError(f"mock OCR table has no entry for digest {digest}")
        text, confidence = adapter.mock_table[digest]
    elif adapter.kind is OcrKind.EXTERNAL_COMMAND:
        if not adapter.command:
            raise AdapterError("external-command OCR adapter has no command")
        with tempfile.NamedTemporaryFile(suffix=".png", delete=False) as tmp:
            tmp.write(plane_to_png_bytes(clip.mean_frame))
            image_path = tmp.name
        try:
            proc = subprocess.run(
                [*adapter.command, image_path],
                capture_output=True,
                text=True,
                check=False,
            )
        except OSError as exc:
            raise AdapterError(f"cannot run OCR command: {exc}") from exc
        finally:
            Path(image_path).unlink(missing_ok=True)
        if proc.returncode != 0:
            raise AdapterError(
                f"OCR command exited {proc.returncode}: {proc.stderr.strip()}"
            )
        text, confidence = _parse_ocr_line(proc.stdout, "OCR command")
    elif adapter.kind is OcrKind.HTTP:
        if not adapter.endpoint:
            raise AdapterError("http OCR adapter has no endpoint")
        import httpx

        try:
            response = httpx.post(
                adapter.endpoint,
                content=plane_to_png_bytes(clip.mean_frame),
                headers={"content-type": "image/png"},
                timeout=30.0,
            )
            response.raise_for_status()
            payload = response.json()
        except httpx.HTTPError as exc:
            raise AdapterError(f"OCR endpoint failed: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise AdapterError(f"OCR endpoint returned non-JSON: {exc}") from exc
        if not isinstance(payload, dict) or "text" not in payload:
            raise AdapterError(f"OCR endpoint returned bad payload: {payload!r}")
        text = str(payload["text"])
        confidence = float(payload.get("confidence", 0.0))
    else:  # pragma: no cover - enum is exhaustive
        raise AdapterError(f"unknown OCR adapter kind {adapter.kind}")
    return replace(clip, text=text, ocr_confidence=confidence)


def run_ocr_batch(
    clips: list[SubtitleClip], adapter: OcrAdapter, workers: int = 1
) -> list[SubtitleClip]:
    """OCR a batch, possibly concurrently, preserving input order."""
    if workers <= 1 or len(clips) <= 1:
        return [run_ocr(clip, adapter) for clip in clips]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda clip: run_ocr(clip, adapter), clips))


def clean_stream(stream: FrameStream, adapter: CleanerAdapter) -> FrameStream:
    """Apply the configured strip cleaner to a frame stream."""
    from .signalkit import read_raw_frames, write_raw_frames

    if adapter.kind is CleanerKind.PASSTHROUGH:
        return stream
    if not adapter.command:
        raise AdapterError("external-command cleaner has no command")
    with tempfile.TemporaryDirectory() as tmpdir:
        src = Path(tmpdir) / "in.frames"
        dst = Path(tmpdir) / "out.frames"
        write_raw_frames(stream, src)
        try:
            proc = subprocess.run(
                [*adapter.command, str(src), str(dst)],
                capture_output=True,
                text=True,
                check=False,
            )
        except OSError as exc:
            raise AdapterError(f"cannot run cleaner command: {exc}") from exc
        if proc.returncode != 0:
            raise AdapterError(
                f"cleaner exited {proc.returncode}: {proc.stderr.strip()}"
            )
        if not dst.exists():
            raise AdapterError("cleaner produced no output file")
        return read_raw_frames(dst, stream.fps, stream.episode_id)


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance over Unicode scalar values with unit costs."""
    return levenshtein(a, b)


def select_representative(texts: list[str]) -> str:
    """Text with minimum mean edit distance to the others; earliest wins ties."""
    if not texts:
        raise ValueError("cannot pick a representative from no texts")
    if len(texts) == 1:
        return texts[0]
    best_index = 0
    best_mean = float("inf")
    for i, candidate in enumerate(texts):
        total = sum(edit_distance(candidate, other) for j, other in enumerate(texts) if j != i)
        mean = total / (len(texts) - 1)
        if mean < best_mean:
            best_index, best_mean = i, mean
    return texts[best_index]


def regroup(
    clips: list[SubtitleClip],
    threshold: int = DEFAULT_REGROUP_THRESHOLD,
    compare_to_representative: bool = False,
) -> list[SubtitleGroup]:
    """Merge adjacent clips whose texts differ by less than the threshold.

    Scans left to right; a clip joins the open group when the edit distance
    between its text and the group's last member text (or the group's current
    representative, when compare_to_representative is set) is strictly below
    the threshold.  Input clips must be temporally ordered and carry text.
    """
    if threshold < 0:
        raise ValueError(f"threshold must be >= 0, got {threshold}")
    for clip in clips:
        if clip.text is None:
            raise ValueError("regroup needs OCRed clips with text")
    for prev, cur in zip(clips, clips[1:]):
        if cur.segment.start_frame < prev.segment.end_frame:
            raise ValueError("clips must be temporally ordered and disjoint")

    groups: list[SubtitleGroup] = []
    pending: list[SubtitleClip] = []

    def close(members: list[SubtitleClip]) -> None:
        texts = [m.text for m in members]
        groups.append(
            SubtitleGroup(
                members=list(members),
                representative_text=select_representative(texts),
                start_frame=members[0].segment.start_frame,
                end_frame=members[-1].segment.end_frame,
            )
        )

    for clip in clips:
        if not pending:
            pending = [clip]
            continue
        if compare_to_representative:
            reference = select_representative([m.text for m in pending])
        else:
            reference = pending[-1].text
        if edit_distance(clip.text, reference) < threshold:
            pending.append(clip)
        else:
            close(pending)
            pending = [clip]
    if pending:
        close(pending)
    return groups


def clip_to_record(
    clip: SubtitleClip, episode_id: str, mean_frame_path: str | None = None
) -> dict:
    record = {
        "episode_id": episode_id,
        "start_frame": clip.segment.start_frame,
        "end_frame": clip.segment.end_frame,
        "text": clip.text,
        "confidence": clip.ocr_confidence,
    }
    if mean_frame_path is not None:
        record["mean_frame"] = mean_frame_path
    return record
