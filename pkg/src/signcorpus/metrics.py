"""Evaluation metrics: gloss-level WER, character BLEU, and ROUGE-L.

All scores live on a 0-100 scale.  WER aggregates as a micro-average (total
edits over total reference length), BLEU as standard corpus BLEU with a
brevity penalty, ROUGE-L as the mean of per-sample LCS F-measures.
"""

from __future__ import annotations

import enum
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from .editops import levenshtein

_ASCII_RUN_RE = re.compile(r"[0-9A-Za-z]+|\S")


class MetricKind(str, enum.Enum):
    WER = "wer"
    BLEU = "bleu"
    ROUGE_L = "rouge_l"


@dataclass
class SampleScore:
    sample_id: str
    score: float


@dataclass
class ScoreReport:
    metric: MetricKind
    per_sample: list[SampleScore]
    corpus: float
    details: dict[str, float] = field(default_factory=dict)


def wer(hypothesis: Sequence[str], reference: Sequence[str]) -> float:
    """Word error rate: 100 * edit distance / reference length."""
    if not reference:
        raise ValueError("reference must be nonempty")
    return 100.0 * levenshtein(hypothesis, reference) / len(reference)


def corpus_wer(
    hypotheses: Sequence[Sequence[str]], references: Sequence[Sequence[str]]
) -> float:
    """Micro-averaged WER: total edits over total reference tokens."""
    _check_corpus(hypotheses, references)
    total_edits = 0
    total_ref = 0
    for hyp, ref in zip(hypotheses, references):
        if not ref:
            raise ValueError("references must be nonempty")
        total_edits += levenshtein(hyp, ref)
        total_ref += len(ref)
    return 100.0 * total_edits / total_ref


def _check_corpus(hypotheses: Sequence, references: Sequence) -> None:
    if len(hypotheses) != len(references):
        raise ValueError(
            f"corpus size mismatch: {len(hypotheses)} hypotheses, "
            f"{len(references)} references"
        )
    if not references:
        raise ValueError("empty corpus")


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(
        tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)
    )


def bleu(
    hypotheses: Sequence[Sequence[str]],
    references: Sequence[Sequence[str]],
    max_n: int = 4,
) -> list[float]:
    """Corpus BLEU-1..BLEU-max_n with clipped counts and brevity penalty.

    A hypothesis shorter than n simply contributes no n-gram counts.  An
    order with zero precision yields 0 for that BLEU and all higher orders
    that include it.
    """
    _check_corpus(hypotheses, references)
    if max_n < 1:
        raise ValueError(f"max_n must be >= 1, got {max_n}")
    matched = [0] * max_n
    possible = [0] * max_n
    hyp_len = 0
    ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, max_n + 1):
            hyp_counts = _ngram_counts(hyp, n)
            if not hyp_counts:
                continue
            ref_counts = _ngram_counts(ref, n)
            matched[n - 1] += sum(
                min(count, ref_counts[gram]) for gram, count in hyp_counts.items()
            )
            possible[n - 1] += sum(hyp_counts.values())

    if hyp_len == 0:
        return [0.0] * max_n
    brevity = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    precisions = [
        matched[n] / possible[n] if possible[n] else 0.0 for n in range(max_n)
    ]
    scores = []
    for n in range(1, max_n + 1):
        if any(p == 0.0 for p in precisions[:n]):
            scores.append(0.0)
            continue
        log_mean = sum(math.log(p) for p in precisions[:n]) / n
        scores.append(100.0 * brevity * math.exp(log_mean))
    return scores


def sentence_bleu(
    hypothesis: Sequence[str],
    reference: Sequence[str],
    max_n: int = 4,
    smoothing: str = "none",
) -> list[float]:
    """Single-pair BLEU with optional add-one smoothing for orders > 1."""
    if smoothing not in ("none", "add1"):
        raise ValueError(f"unknown smoothing {smoothing!r}")
    if smoothing == "none":
        return bleu([hypothesis], [reference], max_n)
    precisions = []
    for n in range(1, max_n + 1):
        hyp_counts = _ngram_counts(hypothesis, n)
        ref_counts = _ngram_counts(reference, n)
        match = sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
        total = sum(hyp_counts.values())
        if n == 1:
            precisions.append(match / total if total else 0.0)
        else:
            precisions.append((match + 1.0) / (total + 1.0))
    if not hypothesis:
        return [0.0] * max_n
    brevity = (
        1.0
        if len(hypothesis) >= len(reference)
        else math.exp(1.0 - len(reference) / len(hypothesis))
    )
    scores = []
    for n in range(1, max_n + 1):
        if any(p == 0.0 for p in precisions[:n]):
            scores.append(0.0)
            continue
        log_mean = sum(math.log(p) for p in precisions[:n]) / n
        scores.append(100.0 * brevity * math.exp(log_mean))
    return scores


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return 0
    previous = [0] * (len(b) + 1)
    for item_a in a:
        current = [0]
        for j, item_b in enumerate(b, start=1):
            if item_a == item_b:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    return previous[len(b)]


def rouge_l(
    hypothesis: Sequence[str], reference: Sequence[str], beta: float = 1.0
) -> float:
    """LCS F-measure on a 0-100 scale; 0 when either side is empty."""
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if not hypothesis or not reference:
        return 0.0
    lcs = _lcs_length(hypothesis, reference)
    if lcs == 0:
        return 0.0
    precision = lcs / len(hypothesis)
    recall = lcs / len(reference)
    beta_sq = beta * beta
    f_score = (1.0 + beta_sq) * precision * recall / (recall + beta_sq * precision)
    return 100.0 * f_score


def corpus_rouge_l(
    hypotheses: Sequence[Sequence[str]],
    references: Sequence[Sequence[str]],
    beta: float = 1.0,
) -> float:
    """Mean per-sample ROUGE-L."""
    _check_corpus(hypotheses, references)
    scores = [rouge_l(h, r, beta) for h, r in zip(hypotheses, references)]
    return sum(scores) / len(scores)


def char_tokens(text: str, pure_chars: bool = False) -> list[str]:
    """Character tokens with ASCII letter/digit runs kept whole by default.

    Whitespace never yields tokens.  With pure_chars=True every non-space
    character becomes its own token.
    """
    if pure_chars:
        return [c for c in text if not c.isspace()]
    return _ASCII_RUN_RE.findall(text)


def score_wer(
    pairs: list[tuple[str, Sequence[str], Sequence[str]]]
) -> ScoreReport:
    """Build a WER report from (sample_id, hypothesis, reference) triples."""
    per_sample = [SampleScore(sid, wer(h, r)) for sid, h, r in pairs]
    corpus = corpus_wer([h for _, h, _ in pairs], [r for _, _, r in pairs])
    return ScoreReport(MetricKind.WER, per_sample, corpus)


def score_bleu(
    pairs: list[tuple[str, Sequence[str], Sequence[str]]],
    max_n: int = 4,
    smoothing: str = "none",
) -> ScoreReport:
    """BLEU report; per-sample rows use sentence BLEU at the same order."""
    per_sample = [
        SampleScore(sid, sentence_bleu(h, r, max_n, smoothing)[-1])
        for sid, h, r in pairs
    ]
    scores = bleu([h for _, h, _ in pairs], [r for _, _, r in pairs], max_n)
    details = {f"bleu_{n}": s for n, s in enumerate(scores, start=1)}
    return ScoreReport(MetricKind.BLEU, per_sample, scores[-1], details)


def score_rouge_l(
    pairs: list[tuple[str, Sequence[str], Sequence[str]]], beta: float = 1.0
) -> ScoreReport:
    per_sample = [SampleScore(sid, rouge_l(h, r, beta)) for sid, h, r in pairs]
    corpus = corpus_rouge_l([h for _, h, _ in pairs], [r for _, _, r in pairs], beta)
    return ScoreReport(MetricKind.ROUGE_L, per_sample, corpus)
