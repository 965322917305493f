"""Independent reference implementations used to cross-check the library.

Each oracle deliberately takes a different algorithmic route than the
production code (naive scans, explicit loops, memoized recursion,
exhaustive enumeration, or a third-party graph library) so that a bug
would have to be introduced twice, in two different shapes, to go
unnoticed.
"""

from __future__ import annotations

import math
from collections import Counter
from functools import lru_cache
from typing import Sequence

import networkx as nx
import numpy as np


def scan_segments(scores: Sequence[float], threshold: float) -> list[tuple[int, int]]:
    """Run-length segmentation by a per-frame boolean scan."""
    spans: list[tuple[int, int]] = []
    start = None
    for t, value in enumerate(scores):
        active = value >= threshold
        if active and start is None:
            start = t
        elif not active and start is not None:
            spans.append((start, t))
            start = None
    if start is not None:
        spans.append((start, len(scores)))
    return spans


def laplacian_loops(frames: np.ndarray) -> np.ndarray:
    """Second temporal difference magnitude, averaged by explicit loops."""
    n, h, w = frames.shape
    out = np.zeros(n, dtype=np.float64)
    for t in range(1, n - 1):
        total = 0.0
        for y in range(h):
            for x in range(w):
                total += abs(
                    frames[t - 1, y, x] - 2.0 * frames[t, y, x] + frames[t + 1, y, x]
                )
        out[t] = total / (h * w)
    return out


def scan_transitions(measures: Sequence[float], threshold: float) -> list[int]:
    """One index per above-threshold run, at the run's first maximum."""
    picks: list[int] = []
    run: list[int] = []
    for t, value in enumerate(measures):
        if value > threshold:
            run.append(t)
        elif run:
            picks.append(max(run, key=lambda i: (measures[i], -i)))
            run = []
    if run:
        picks.append(max(run, key=lambda i: (measures[i], -i)))
    return picks


def assert_ordered_partition(spans: Sequence[tuple[int, int]], frame_count: int) -> None:
    """Membership scan: every frame belongs to exactly one span, in order."""
    owners = [0] * frame_count
    for start, end in spans:
        for t in range(start, end):
            owners[t] += 1
    assert all(c == 1 for c in owners), "spans do not cover each frame exactly once"
    flat = [b for span in spans for b in span]
    assert flat == sorted(flat), "spans are not in ascending order"


def average_by_loops(frames: np.ndarray) -> np.ndarray:
    """Per-pixel arithmetic mean via explicit accumulation."""
    n, h, w = frames.shape
    acc = np.zeros((h, w), dtype=np.float64)
    for t in range(n):
        for y in range(h):
            for x in range(w):
                acc[y, x] += frames[t, y, x]
    return acc / n


def lev_recursive(a: Sequence, b: Sequence) -> int:
    """Levenshtein distance by memoized recursion over suffixes."""

    @lru_cache(maxsize=None)
    def go(i: int, j: int) -> int:
        if i == len(a):
            return len(b) - j
        if j == len(b):
            return len(a) - i
        if a[i] == b[j]:
            return go(i + 1, j + 1)
        return 1 + min(go(i + 1, j), go(i, j + 1), go(i + 1, j + 1))

    result = go(0, 0)
    go.cache_clear()
    return result


def dtw_min_cost(cost: np.ndarray) -> float:
    """Minimum monotonic-path cost by exhaustive recursive enumeration.

    Paths start at (0, 0), end at (m-1, n-1), and move by (+1, +1),
    (0, +1), or (+1, 0).  Exponential; intended for small instances only.
    """
    m, n = cost.shape

    def go(i: int, j: int) -> float:
        here = float(cost[i, j])
        if i == m - 1 and j == n - 1:
            return here
        best = math.inf
        for di, dj in ((1, 1), (0, 1), (1, 0)):
            if i + di < m and j + dj < n:
                best = min(best, go(i + di, j + dj))
        return here + best

    return go(0, 0)


def component_classes(groups: Sequence[Sequence[str]]) -> set[frozenset[str]]:
    """Transitive closure of overlapping groups via networkx components."""
    graph = nx.Graph()
    for members in groups:
        graph.add_nodes_from(members)
        for first, second in zip(members, members[1:]):
            graph.add_edge(first, second)
    return {frozenset(c) for c in nx.connected_components(graph)}


def bleu_counting(
    hypotheses: Sequence[Sequence[str]],
    references: Sequence[Sequence[str]],
    max_n: int,
) -> list[float]:
    """Corpus BLEU by direct clipped n-gram counting.

    Written against the standard definition: per-order modified precision
    pooled over the corpus, brevity penalty exp(1 - r/c) when the
    hypothesis is shorter, geometric mean over orders 1..n, 0-100 scale.
    """
    hyp_len = sum(len(h) for h in hypotheses)
    ref_len = sum(len(r) for r in references)
    scores: list[float] = []
    for order in range(1, max_n + 1):
        precisions = []
        for k in range(1, order + 1):
            matched = possible = 0
            for hyp, ref in zip(hypotheses, references):
                hyp_grams = Counter(
                    tuple(hyp[i : i + k]) for i in range(len(hyp) - k + 1)
                )
                ref_grams = Counter(
                    tuple(ref[i : i + k]) for i in range(len(ref) - k + 1)
                )
                matched += sum(min(c, ref_grams[g]) for g, c in hyp_grams.items())
                possible += sum(hyp_grams.values())
            precisions.append(matched / possible if possible else 0.0)
        if any(p == 0.0 for p in precisions):
            scores.append(0.0)
            continue
        log_mean = sum(math.log(p) for p in precisions) / order
        bp = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / max(hyp_len, 1))
        scores.append(100.0 * bp * math.exp(log_mean))
    return scores


def lcs_recursive(a: Sequence, b: Sequence) -> int:
    """Longest common subsequence length by memoized recursion."""

    @lru_cache(maxsize=None)
    def go(i: int, j: int) -> int:
        if i == len(a) or j == len(b):
            return 0
        if a[i] == b[j]:
            return 1 + go(i + 1, j + 1)
        return max(go(i + 1, j), go(i, j + 1))

    result = go(0, 0)
    go.cache_clear()
    return result
