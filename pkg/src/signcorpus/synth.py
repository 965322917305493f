"""Synthetic episode generator with exact ground truth.

Builds a subtitle-strip frame stream, an activity score stream, a mock OCR
table and the ground-truth alignment for one artificial episode.  Layout
margins are chosen so the pipeline provably recovers the truth:

* activity scores cross the 0.5 threshold exactly at sign run boundaries;
* subtitle events are separated by enough black frames that intermediate
  clips stay below the blank threshold;
* every sign run carries at least one subtitle event, placed centrally
  enough that its group midpoint is strictly nearest to its own sign run.

A step change at frame s produces equal change measures at s-1 and s, so
detected clip boundaries sit one frame before the pixel change; expected
clip spans and their mock-table digests account for that.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from .aligner import make_sample_id
from .signalkit import FrameStream, ScoreStream, Segment
from .subtitlex import average_clip, edit_distance, frame_digest

MIN_SIGN_S = 3.0
MAX_SIGN_S = 15.0
_EDGE_MARGIN = 15  # frames between a sign boundary and its first/last event
_INNER_GAP = 30  # black frames between subtitle events inside one sign
_MIN_EVENT = 15  # frames per subtitle event (or sub-event)
_MAX_EVENT_EXTRA = 55
_SIGN_GAP = (60, 120)  # frames between consecutive sign runs
_LEAD = (50, 80)  # frames before the first sign and after the last
_PATTERN_BYTE = 204  # intensity 0.8 after byte/255
_TEXT_ALPHABET = "天氣報告今日溫度風雨雲晴濕百分比強烈警信號颱北南東西部升降月年時分零一二三四五六七八九十宗號場區"
_MIN_TEXT_DISTANCE = 3
_CONFIDENCE = 0.95


@dataclass
class SynthSpec:
    """Parameters for one synthetic episode."""

    episode_id: str
    n_signs: int
    subs_per_sign: tuple[int, int] = (1, 3)
    sign_duration_s: tuple[float, float] = (4.0, 10.0)
    fps: float = 25.0
    strip_width: int = 96
    strip_height: int = 12
    seed: int = 0
    split_event_prob: float = 0.35

    def __post_init__(self) -> None:
        if self.n_signs < 0:
            raise ValueError(f"n_signs must be >= 0, got {self.n_signs}")
        lo, hi = self.subs_per_sign
        if not 1 <= lo <= hi:
            raise ValueError(f"bad subs_per_sign range {self.subs_per_sign}")
        dlo, dhi = self.sign_duration_s
        if not MIN_SIGN_S <= dlo <= dhi <= MAX_SIGN_S:
            raise ValueError(
                f"sign durations must lie within [{MIN_SIGN_S}, {MAX_SIGN_S}] s, "
                f"got {self.sign_duration_s}"
            )
        if self.fps <= 0:
            raise ValueError(f"fps must be positive, got {self.fps}")
        if self.strip_width < 8 or self.strip_height < 2:
            raise ValueError("strip must be at least 8x2 pixels")
        if not 0.0 <= self.split_event_prob <= 1.0:
            raise ValueError(f"bad split_event_prob {self.split_event_prob}")


@dataclass
class SynthEpisode:
    """Generated artifacts plus the ground-truth alignment records."""

    spec: SynthSpec
    frames: FrameStream
    scores: ScoreStream
    mock_table: dict[str, tuple[str, float]]
    truth: list[dict]


def _random_text(rng: random.Random, existing: list[str]) -> str:
    """Draw a subtitle text keeping a safe edit distance from the others."""
    while True:
        length = rng.randint(6, 10)
        text = "".join(rng.choice(_TEXT_ALPHABET) for _ in range(length))
        if all(edit_distance(text, t) >= _MIN_TEXT_DISTANCE for t in existing):
            return text


def generate_episode(spec: SynthSpec) -> SynthEpisode:
    """Deterministically generate one episode from a SynthSpec and its seed."""
    rng = random.Random(spec.seed)
    fps = spec.fps

    # Sign runs: [start, end) frame spans separated by sub-threshold gaps.
    sign_spans: list[tuple[int, int]] = []
    cursor = rng.randint(*_LEAD)
    for _ in range(spec.n_signs):
        length = int(round(rng.uniform(*spec.sign_duration_s) * fps))
        length = max(int(MIN_SIGN_S * fps), min(int(MAX_SIGN_S * fps), length))
        sign_spans.append((cursor, cursor + length))
        cursor = cursor + length + rng.randint(*_SIGN_GAP)
    n_frames = cursor + rng.randint(*_LEAD)
    for (_, prev_end), (next_start, _) in zip(sign_spans, sign_spans[1:]):
        if next_start <= prev_end:
            raise ValueError("sign runs overlap; spec is infeasible")

    # Subtitle events inside each sign: (start, end, text, sign_index).
    events: list[tuple[int, int, str, int]] = []
    texts: list[str] = []
    for sign_index, (a, b) in enumerate(sign_spans):
        # Keep events in a central band so each group midpoint stays strictly
        # nearest to its own sign run, whatever the sign duration.
        length_frames = b - a
        edge = max(_EDGE_MARGIN, length_frames // 2 - 100)
        band_start = a + edge
        band = (b - edge) - band_start
        k = rng.randint(*spec.subs_per_sign)
        while k > 1 and k * _MIN_EVENT + (k - 1) * _INNER_GAP > band:
            k -= 1
        budget = band - (k - 1) * _INNER_GAP
        lengths = [_MIN_EVENT] * k
        extra = budget - k * _MIN_EVENT
        for i in range(k):
            add = rng.randint(0, min(_MAX_EVENT_EXTRA, extra))
            lengths[i] += add
            extra -= add
        lead = rng.randint(0, extra)
        pos = band_start + lead
        for length in lengths:
            text = _random_text(rng, texts)
            texts.append(text)
            events.append((pos, pos + length, text, sign_index))
            pos += length + _INNER_GAP

    # Optionally split an event into two same-text sub-events; the blank gap
    # between them must later regroup into a single subtitle group.
    sub_events: list[tuple[int, int, str, int]] = []  # (start, end, text, event_idx)
    for event_index, (start, end, text, _) in enumerate(events):
        length = end - start
        splittable = length >= 2 * _MIN_EVENT + _INNER_GAP + 2
        if splittable and rng.random() < spec.split_event_prob:
            first_len = rng.randint(_MIN_EVENT, length - _MIN_EVENT - _INNER_GAP - 2)
            gap = _INNER_GAP + 2
            sub_events.append((start, start + first_len, text, event_index))
            sub_events.append((start + first_len + gap, end, text, event_index))
        else:
            sub_events.append((start, end, text, event_index))

    # Frames: black strip with a per-sub-event random on/off pixel pattern.
    height, width = spec.strip_height, spec.strip_width
    frames = np.zeros((n_frames, height, width), dtype=np.float64)
    intensity = _PATTERN_BYTE / 255.0
    for start, end, _, _ in sub_events:
        pattern_rng = np.random.default_rng(rng.randrange(2**32))
        mask = pattern_rng.random((height, width)) < 0.5
        if not mask.any():
            mask[0, 0] = True
        frames[start:end, mask] = intensity
    stream = FrameStream(spec.episode_id, fps, frames)

    # Scores: noisy but strictly separated by the 0.5 activity threshold.
    scores = [rng.uniform(0.02, 0.45) for _ in range(n_frames)]
    for a, b in sign_spans:
        for t in range(a, b):
            scores[t] = rng.uniform(0.55, 0.98)
    score_stream = ScoreStream(spec.episode_id, fps, scores)

    # Mock OCR table keyed by the digests of the clips the pipeline will
    # average.  Detected boundaries sit one frame before each pixel change,
    # so a sub-event [s, e) becomes the clip [s-1, e-1).
    mock_table: dict[str, tuple[str, float]] = {}
    for start, end, text, _ in sub_events:
        clip = average_clip(stream, Segment(start - 1, end - 1))
        mock_table[frame_digest(clip.mean_frame)] = (text, _CONFIDENCE)

    # Ground truth: one sample per sign run; groups span [first sub-event
    # start - 1, last sub-event end - 1) in detected-boundary coordinates.
    truth: list[dict] = []
    for sign_index, (a, b) in enumerate(sign_spans):
        subtitles = []
        for event_index, (_, _, text, owner) in enumerate(events):
            if owner != sign_index:
                continue
            parts = [s for s in sub_events if s[3] == event_index]
            subtitles.append(
                {
                    "start": parts[0][0] - 1,
                    "end": parts[-1][1] - 1,
                    "text": text,
                }
            )
        truth.append(
            {
                "episode_id": spec.episode_id,
                "sample_id": make_sample_id(spec.episode_id, a, b),
                "sign_start": a,
                "sign_end": b,
                "joined_text": "".join(s["text"] for s in subtitles),
                "subtitles": subtitles,
            }
        )

    return SynthEpisode(
        spec=spec,
        frames=stream,
        scores=score_stream,
        mock_table=mock_table,
        truth=truth,
    )
