"""Acceptance gate: one test per release criterion.

Run ``pytest tests/test_acceptance.py -v`` to get one pass/fail line per
criterion.  Each test restates its fixture from scratch and checks the
production code against an independent oracle or a hand-enumerated value,
enforcing the stated tolerance and, where one applies, the runtime budget.
"""

from __future__ import annotations

import random
import string
import time
from pathlib import Path

import numpy as np
import pytest

from oracles import bleu_counting, component_classes, dtw_min_cost, lev_recursive
from signcorpus.aligner import dtw_align
from signcorpus.cli import main
from signcorpus.corpus import SampleRecord, SplitAssignment, compute_stats, make_split
from signcorpus.glossgrammar import (
    Compound,
    GlossUnit,
    HomosignGroup,
    HomosignRegistry,
    build_registry,
    canonicalize_for_scoring,
    parse,
    to_training_sequence,
)
from signcorpus.metrics import bleu, corpus_rouge_l, rouge_l, wer
from signcorpus.signalkit import (
    FrameStream,
    ScoreStream,
    Segment,
    SegmentKind,
    binarize_and_segment,
    detect_transitions,
    filter_by_duration,
    temporal_laplacian,
)
from signcorpus.subtitlex import SubtitleClip, edit_distance, regroup, select_representative

FPS = 25.0


def _segments(count: int, rng: random.Random, kind=SegmentKind.SIGN) -> list[Segment]:
    """Disjoint, ordered, random-length frame spans."""
    spans, cursor = [], 0
    for _ in range(count):
        cursor += rng.randrange(0, 40)
        length = rng.randrange(1, 120)
        spans.append(Segment(cursor, cursor + length, kind))
        cursor += length
    return spans


def test_c01_wer_reference_pairs():
    """Three fixed hypothesis/reference pairs score 33.33, 44.44, 22.22 (+-0.005)."""
    started = time.monotonic()
    reference = "昨天 溫度 二 十 有 濕 百分比 七 六".split()
    cases = [
        ("以前 溫度 小 有 濕 百分比 七 六".split(), 33.33),
        ("溫度 十 濕 百分比 七 九 六".split(), 44.44),
        ("溫度 二 十 濕 百分比 七 六".split(), 22.22),
    ]
    for hypothesis, expected in cases:
        got = wer(hypothesis, reference)
        assert got == pytest.approx(expected, abs=0.005)
        assert round(got, 2) == expected
    assert time.monotonic() - started < 1.0


def test_c02_dtw_equals_exhaustive_path_enumeration():
    """Total DTW cost matches brute-force path enumeration on 1,000 episodes."""
    started = time.monotonic()
    rng = random.Random(4202)
    # fps=0.5 keeps every midpoint an integer-valued float, so the two
    # summation orders agree bit for bit and equality can be exact.
    fps = 0.5
    for _ in range(1000):
        signs = _segments(rng.randrange(1, 7), rng)
        subtitles = _segments(rng.randrange(1, 11), rng, SegmentKind.SUBTITLE)
        result = dtw_align(signs, subtitles, fps)

        def mid(span: Segment) -> float:
            return (span.start_frame + span.end_frame) / 2.0 / fps

        cost = np.array([[abs(mid(a) - mid(b)) for b in subtitles] for a in signs])
        assert result.total_cost == dtw_min_cost(cost)
        assert result.path[0] == (0, 0)
        assert result.path[-1] == (len(signs) - 1, len(subtitles) - 1)
    assert time.monotonic() - started < 30.0


def test_c03_edit_distance_oracle_and_metric_axioms():
    """Matches memoized recursion on 10,000 pairs; metric axioms on 10,000 triples."""
    rng = random.Random(99)
    alphabet = "ab天氣xyz"

    def word() -> str:
        return "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 9)))

    for _ in range(10_000):
        a, b = word(), word()
        assert edit_distance(a, b) == lev_recursive(a, b)

    for _ in range(10_000):
        a, b, c = word(), word(), word()
        d_ab, d_bc, d_ac = edit_distance(a, b), edit_distance(b, c), edit_distance(a, c)
        assert d_ab >= 0
        assert (d_ab == 0) == (a == b)
        assert d_ab == edit_distance(b, a)
        assert d_ac <= d_ab + d_bc


def test_c04_regroup_representative_minimality_and_ordered_partition():
    """The representative minimizes mean intra-group distance; regroup partitions."""
    rng = random.Random(77)
    alphabet = "abc天氣"

    def word() -> str:
        return "".join(rng.choice(alphabet) for _ in range(rng.randrange(1, 6)))

    for _ in range(2000):
        texts = [word() for _ in range(rng.randrange(1, 9))]
        chosen = select_representative(texts)
        # Exhaustive pairwise matrix, computed with the oracle distance.
        matrix = [[lev_recursive(a, b) for b in texts] for a in texts]
        means = [
            sum(row) / max(len(texts) - 1, 1) for row in (
                [d for j, d in enumerate(matrix[i]) if j != i] for i in range(len(texts))
            )
        ]
        chosen_mean = means[texts.index(chosen)]
        assert chosen_mean == min(means)

    for case in range(1000):
        rng_case = random.Random(case)
        clips = [
            SubtitleClip(segment=span, mean_frame=np.zeros((1, 1)), text=word())
            for span in _segments(rng_case.randrange(0, 13), rng, SegmentKind.SUBTITLE)
        ]
        groups = regroup(
            clips,
            threshold=rng_case.randrange(0, 5),
            compare_to_representative=bool(case % 2),
        )
        flattened = [member for group in groups for member in group.members]
        assert flattened == clips  # every clip exactly once, order preserved
        assert all(group.members for group in groups)


def _random_annotation(rng: random.Random) -> str:
    alphabet = "ABdq天氣十7"

    def unit() -> GlossUnit:
        base = "".join(rng.choice(alphabet) for _ in range(rng.randrange(1, 4)))
        variant = rng.randrange(1, 13) if rng.random() < 0.25 else None
        return GlossUnit(base, ill_performed=rng.random() < 0.2, variant=variant)

    def compound() -> Compound:
        return Compound(tuple(unit() for _ in range(rng.randrange(1, 4))))

    def homosign() -> HomosignGroup:
        while True:
            try:
                return HomosignGroup(
                    tuple(compound() for _ in range(rng.randrange(2, 4)))
                )
            except ValueError:  # members collided after normalization; redraw
                continue

    tokens = [
        homosign() if rng.random() < 0.25 else compound()
        for _ in range(rng.randrange(1, 7))
    ]
    return " ".join(token.render() for token in tokens)


def test_c05_gloss_grammar_round_trip_normalization_and_registry():
    """render(parse(s)) == s; the fixed annotation flattens per the rules;
    registry merging equals a connected-components oracle."""
    rng = random.Random(2025)
    for _ in range(10_000):
        raw = _random_annotation(rng)
        assert parse(raw).render() == raw

    ann = parse("A+B C(?) D(2) E(=F=G)")
    registry = HomosignRegistry([["E", "F", "G"]])
    assert to_training_sequence(ann) == ["A", "B", "C", "D", "E"]
    assert to_training_sequence(ann, registry) == ["A", "B", "C", "D", "E"]

    letters = string.ascii_uppercase[:10]
    for _ in range(1000):
        group_sets = []
        for _ in range(rng.randrange(1, 9)):
            members = rng.sample(letters, rng.randrange(2, 5))
            group_sets.append(members)
        groups = [
            HomosignGroup(tuple(Compound((GlossUnit(m),)) for m in members))
            for members in group_sets
        ]
        built = build_registry(groups)
        got = {frozenset(members) for _, members in built.classes()}
        assert got == component_classes(group_sets)


def test_c06_registry_canonicalization_scores_zero():
    """A hypothesis naming another member of the same class is not penalized."""
    registry = HomosignRegistry([["A", "B"]])
    hypothesis, reference = canonicalize_for_scoring(["B"], ["A"], registry)
    assert hypothesis == reference == ["A"]
    assert wer(hypothesis, reference) == 0.0


def _zipf_corpus(rng: random.Random, n: int, vocab_size: int = 40) -> list[SampleRecord]:
    vocab = [f"g{k}" for k in range(vocab_size)]
    weights = [1.0 / (rank + 1) for rank in range(vocab_size)]
    records = []
    for i in range(n):
        glosses = rng.choices(vocab, weights=weights, k=rng.randrange(2, 7))
        records.append(
            SampleRecord(
                sample_id=f"s{i:04d}",
                signer_id=f"sig{i % 5}",
                episode_id="ep0",
                start_frame=0,
                end_frame=100,
                fps=FPS,
                glosses=list(glosses),
                text="".join(glosses),
            )
        )
    return records


def test_c07_splitter_oov_free_ratio_bounded_and_deterministic():
    """On 100 corpora: zero held-out gloss OOVs, ratios within 2 points of
    90/5/5, and identical output for a repeated seed."""
    for seed in range(100):
        rng = random.Random(seed)
        corpus = _zipf_corpus(rng, 500 + rng.randrange(0, 120))
        split = make_split(corpus, seed=seed)
        assert split == make_split(corpus, seed=seed)

        train_vocab = {
            gloss
            for record in corpus
            if split.assignment[record.sample_id] == "train"
            for gloss in record.glosses
        }
        for record in corpus:
            if split.assignment[record.sample_id] != "train":
                assert not set(record.glosses) - train_vocab
        stats = compute_stats(corpus, split)
        assert stats["dev"].gloss_oov == 0
        assert stats["test"].gloss_oov == 0

        for achieved, target in zip(split.ratios, (0.90, 0.05, 0.05)):
            assert abs(achieved - target) <= 0.02


def test_c08_statistics_hand_enumeration_and_running_total_additivity():
    """All ten per-split fields match hand enumeration; split running-token
    counts add up to the overall row."""

    def record(sample_id, glosses, text, n_frames):
        return SampleRecord(
            sample_id=sample_id,
            signer_id="sig0",
            episode_id="ep0",
            start_frame=0,
            end_frame=n_frames,
            fps=FPS,
            glosses=glosses,
            text=text,
        )

    records = [
        record("s1", ["天", "氣", "天"], "天氣 好", 100),
        record("s2", ["天", "雨"], "天雨", 75),
        record("s3", ["風"], "風圖", 250),
    ]
    assignment = SplitAssignment(
        assignment={"s1": "train", "s2": "dev", "s3": "test"},
        seed=0,
        ratios=(1 / 3, 1 / 3, 1 / 3),
    )
    stats = compute_stats(records, assignment)

    expected = {
        # hours, samples, gloss (vocab, running, oov, singles), char (same)
        "train": (4.0 / 3600, 1, 2, 3, None, 1, 3, 3, None, 3),
        "dev": (3.0 / 3600, 1, 2, 2, 1, 2, 2, 2, 1, 2),
        "test": (10.0 / 3600, 1, 1, 1, 1, 1, 2, 2, 2, 2),
        "overall": (17.0 / 3600, 3, 4, 6, None, 3, 6, 7, None, 5),
    }
    for split, values in expected.items():
        got = stats[split]
        assert got.hours == pytest.approx(values[0])
        assert (
            got.samples,
            got.gloss_vocab,
            got.gloss_running,
            got.gloss_oov,
            got.gloss_singletons,
            got.char_vocab,
            got.char_running,
            got.char_oov,
            got.char_singletons,
        ) == values[1:]

    for seed in range(20):
        rng = random.Random(seed)
        corpus = _zipf_corpus(rng, rng.randrange(30, 200), vocab_size=20)
        stats = compute_stats(corpus, make_split(corpus, seed=seed))
        split_rows = [stats["train"], stats["dev"], stats["test"]]
        assert sum(s.gloss_running for s in split_rows) == stats["overall"].gloss_running
        assert sum(s.char_running for s in split_rows) == stats["overall"].char_running
        assert sum(s.samples for s in split_rows) == stats["overall"].samples


def test_c09_switch_counts_and_emitted_clip_durations():
    """K intensity switches yield exactly K transitions; every emitted
    activity clip lasts between 3 and 15 seconds at 25 fps."""
    rng = random.Random(11)
    for _ in range(200):
        n = rng.randrange(40, 400)
        positions = []
        cursor = 2
        while cursor <= n - 2 and len(positions) < 12:
            if rng.random() < 0.25:
                positions.append(cursor)
                cursor += 4  # keep measure plateaus from merging
            else:
                cursor += 1
        values = []
        level = rng.uniform(0.0, 0.3)
        high = True
        for switch in [*positions, n]:
            values.append((switch, level))
            level = rng.uniform(0.6, 1.0) if high else rng.uniform(0.0, 0.3)
            high = not high
        frames = np.zeros((n, 4, 8))
        start = 0
        for end, value in values:
            frames[start:end] = value
            start = end
        stream = FrameStream(episode_id="ep", fps=FPS, frames=frames)
        transitions = detect_transitions(temporal_laplacian(stream), threshold=0.15)
        assert len(transitions) == len(positions)

    kept_total = dropped_total = 0
    for seed in range(200):
        rng = random.Random(seed)
        flip = 0.02 if seed % 2 else 0.005
        scores, active = [], False
        for _ in range(2000):
            if rng.random() < flip:
                active = not active
            scores.append(0.9 if active else 0.05)
        stream = ScoreStream(episode_id="ep", fps=FPS, scores=scores)
        raw = binarize_and_segment(stream, threshold=0.5)
        clips = filter_by_duration(raw, FPS, 3.0, 15.0)
        for clip in clips:
            assert 3.0 <= clip.duration_s(FPS) <= 15.0
        kept_total += len(clips)
        dropped_total += len(raw) - len(clips)
    assert kept_total > 0 and dropped_total > 0  # both sides exercised


def test_c10_end_to_end_truth_recovery_for_50_seeds(tmp_path):
    """The full pipeline with mock OCR reproduces the generator's alignment
    pairs and joined texts byte for byte, for 50 random seeds."""
    started = time.monotonic()

    def run(argv: list[str]) -> int:
        with pytest.raises(SystemExit) as excinfo:
            main(argv)
        return excinfo.value.code

    for seed in range(50):
        episode_dir = tmp_path / f"episode{seed}"
        assert (
            run(
                [
                    "synth-episode",
                    "--out-dir",
                    str(episode_dir),
                    "--episode-id",
                    "ep",
                    "--seed",
                    str(seed),
                ]
            )
            == 0
        )
        run_dir = tmp_path / f"run{seed}"
        assert (
            run(
                [
                    "all",
                    "--scores",
                    str(episode_dir / "ep.scores"),
                    "--frames",
                    str(episode_dir / "ep.frames"),
                    "--mock-table",
                    str(episode_dir / "ep.mock.json"),
                    "--out-dir",
                    str(run_dir),
                ]
            )
            == 0
        )
        got = (run_dir / "aligned.jsonl").read_bytes()
        assert got == (episode_dir / "ep.truth.jsonl").read_bytes(), seed
    assert time.monotonic() - started < 60.0


def test_c11_bleu_and_rouge_reference_behavior():
    """Identical corpora score 100; a 2-pair corpus matches the counting
    oracle to 1e-9; the short/long character pair scores 80.0."""
    identical = [list("昨天溫度"), ["有", "濕", "七"]]
    assert bleu(identical, identical, max_n=3) == [100.0, 100.0, 100.0]
    assert corpus_rouge_l(identical, identical) == 100.0

    hypotheses = [["a", "b", "c"], ["x", "y"]]
    references = [["a", "b", "d"], ["x", "y", "z"]]
    got = bleu(hypotheses, references, max_n=2)
    want = bleu_counting(hypotheses, references, 2)
    for order in range(2):
        assert got[order] == pytest.approx(want[order], abs=1e-9)

    assert rouge_l(["A", "B"], ["A", "B", "C"], beta=1.0) == 80.0
