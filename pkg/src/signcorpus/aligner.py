"""Monotonic alignment of sign activity clips to subtitle groups.

Both inputs are temporally ordered; dynamic time warping over segment
midpoints produces a full monotonic pairing, which is then materialized into
samples by assigning every subtitle group to exactly one sign clip.

Alignment manifests are line-delimited JSON records with fields
``episode_id``, ``sample_id``, ``sign_start``, ``sign_end``, ``joined_text``
and ``subtitles`` (list of ``{start, end, text}`` spans).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

from .signalkit import Segment
from .subtitlex import SubtitleGroup


class SpanLike(Protocol):
    start_frame: int
    end_frame: int


@dataclass(frozen=True)
class DtwResult:
    """Optimal monotonic pairing: path of (sign_index, subtitle_index)."""

    path: tuple[tuple[int, int], ...]
    total_cost: float


@dataclass
class AlignedSample:
    """One sign clip with the subtitle groups assigned to it."""

    sign: Segment
    subtitles: list[SubtitleGroup]
    joined_text: str


def midpoint(span: SpanLike, fps: float) -> float:
    """Midpoint of [start_frame, end_frame) in seconds."""
    if fps <= 0:
        raise ValueError(f"fps must be positive, got {fps}")
    return (span.start_frame + span.end_frame) / 2.0 / fps


def dtw_align(
    signs: Sequence[SpanLike], subtitles: Sequence[SpanLike], fps: float
) -> DtwResult:
    """Minimum-total-cost monotonic path from (0, 0) to (len-1, len-1).

    The local cost of visiting (i, j) is the absolute midpoint difference in
    seconds.  Allowed steps are (i+1, j+1), (i, j+1) and (i+1, j); cost ties
    are broken in that order.
    """
    if not signs or not subtitles:
        raise ValueError("dtw_align needs at least one sign and one subtitle")
    sign_mid = [midpoint(s, fps) for s in signs]
    sub_mid = [midpoint(s, fps) for s in subtitles]
    n, m = len(sign_mid), len(sub_mid)

    cost = [[0.0] * m for _ in range(n)]
    # Backpointers encode the step that reached the cell: 0 = diagonal,
    # 1 = (i, j+1) i.e. from (i, j-1), 2 = (i+1, j) i.e. from (i-1, j).
    back = [[-1] * m for _ in range(n)]
    for i in range(n):
        for j in range(m):
            local = abs(sign_mid[i] - sub_mid[j])
            if i == 0 and j == 0:
                cost[i][j] = local
                continue
            candidates: list[tuple[float, int]] = []
            if i > 0 and j > 0:
                candidates.append((cost[i - 1][j - 1], 0))
            if j > 0:
                candidates.append((cost[i][j - 1], 1))
            if i > 0:
                candidates.append((cost[i - 1][j], 2))
            best_cost, best_step = candidates[0]
            for cand_cost, cand_step in candidates[1:]:
                if cand_cost < best_cost:
                    best_cost, best_step = cand_cost, cand_step
            cost[i][j] = local + best_cost
            back[i][j] = best_step

    path = [(n - 1, m - 1)]
    i, j = n - 1, m - 1
    while (i, j) != (0, 0):
        step = back[i][j]
        if step == 0:
            i, j = i - 1, j - 1
        elif step == 1:
            j -= 1
        else:
            i -= 1
        path.append((i, j))
    path.reverse()
    return DtwResult(path=tuple(path), total_cost=cost[n - 1][m - 1])


def materialize_samples(
    result: DtwResult,
    signs: Sequence[Segment],
    subtitles: Sequence[SubtitleGroup],
    fps: float,
    separator: str = "",
) -> list[AlignedSample]:
    """Turn a DTW path into per-sign samples.

    Every subtitle group ends up with exactly one sign clip: when the path
    pairs a subtitle with several signs, the sign whose midpoint is nearest
    wins (the earlier sign on ties).  Sign clips left without subtitles are
    dropped.  joined_text concatenates representative texts in temporal
    order using the separator.
    """
    paired: dict[int, list[int]] = {}
    for i, j in result.path:
        paired.setdefault(j, []).append(i)

    assigned: dict[int, list[int]] = {}
    for j in sorted(paired):
        sub_mid = midpoint(subtitles[j], fps)
        best = min(
            paired[j],
            key=lambda i: (abs(midpoint(signs[i], fps) - sub_mid), i),
        )
        assigned.setdefault(best, []).append(j)

    samples = []
    for i in sorted(assigned):
        groups = [subtitles[j] for j in sorted(assigned[i])]
        samples.append(
            AlignedSample(
                sign=signs[i],
                subtitles=groups,
                joined_text=separator.join(g.representative_text for g in groups),
            )
        )
    return samples


def make_sample_id(episode_id: str, start_frame: int, end_frame: int) -> str:
    return f"{episode_id}_{start_frame:07d}_{end_frame:07d}"


def sample_to_record(sample: AlignedSample, episode_id: str) -> dict:
    sample_id = make_sample_id(
        episode_id, sample.sign.start_frame, sample.sign.end_frame
    )
    return {
        "episode_id": episode_id,
        "sample_id": sample_id,
        "sign_start": sample.sign.start_frame,
        "sign_end": sample.sign.end_frame,
        "joined_text": sample.joined_text,
        "subtitles": [
            {"start": g.start_frame, "end": g.end_frame, "text": g.representative_text}
            for g in sample.subtitles
        ],
    }
