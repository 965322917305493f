"""Command-line pipeline for corpus construction, scoring and serving.

Stages read and write line-delimited manifests so that every stage can be
re-run independently; identical inputs and configuration produce
byte-identical outputs.  Exit codes: 0 success, 1 usage or configuration
error, 2 data error, 3 adapter error.
"""

from __future__ import annotations

import dataclasses
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import click
import numpy as np

from . import aligner, corpus, glossgrammar, metrics, signalkit, subtitlex, synth
from .fileio import read_jsonl, write_bytes_atomic, write_jsonl
from .signalkit import DataFormatError, Segment, SegmentKind
from .subtitlex import AdapterError, CleanerAdapter, CleanerKind, OcrAdapter, OcrKind


class ConfigError(Exception):
    """A configuration field is unknown or has an invalid value."""


@dataclass
class PipelineConfig:
    """Tunable parameters shared by the pipeline stages."""

    fps: float = 25.0
    activity_threshold: float = 0.5
    min_sign_s: float = 3.0
    max_sign_s: float = 15.0
    laplacian_threshold: float = 0.05
    blank_epsilon: float = subtitlex.DEFAULT_BLANK_EPSILON
    regroup_threshold: int = subtitlex.DEFAULT_REGROUP_THRESHOLD
    compare_to_representative: bool = False
    join_separator: str = ""
    split_ratios: tuple[float, float, float] = corpus.DEFAULT_RATIOS
    split_seed: int = 0
    split_max_attempts: int = 100
    workers: int = 1
    cleaner_command: str = ""
    ocr_adapter: str = "mock"
    ocr_command: str = ""
    ocr_endpoint: str = ""
    ocr_mock_table: str = ""

    def validate(self) -> None:
        checks = [
            ("fps", self.fps > 0),
            ("activity_threshold", 0.0 < self.activity_threshold < 1.0),
            ("min_sign_s", 0 < self.min_sign_s <= self.max_sign_s),
            ("max_sign_s", self.max_sign_s >= self.min_sign_s),
            ("laplacian_threshold", self.laplacian_threshold > 0),
            ("blank_epsilon", self.blank_epsilon >= 0),
            ("regroup_threshold", self.regroup_threshold >= 0),
            ("split_ratios", len(self.split_ratios) == 3
             and all(r >= 0 for r in self.split_ratios)
             and abs(sum(self.split_ratios) - 1.0) <= 1e-9),
            ("split_max_attempts", self.split_max_attempts >= 1),
            ("workers", self.workers >= 1),
            ("ocr_adapter", self.ocr_adapter in ("mock", "external_command", "http")),
        ]
        for name, ok in checks:
            if not ok:
                raise ConfigError(
                    f"invalid value for config field '{name}': "
                    f"{getattr(self, name)!r}"
                )

    def cleaner(self) -> CleanerAdapter:
        if self.cleaner_command:
            return CleanerAdapter(
                CleanerKind.EXTERNAL_COMMAND, command=self.cleaner_command.split()
            )
        return CleanerAdapter(CleanerKind.PASSTHROUGH)

    def ocr(self) -> OcrAdapter:
        if self.ocr_adapter == "mock":
            if not self.ocr_mock_table:
                raise ConfigError(
                    "invalid value for config field 'ocr_mock_table': "
                    "mock adapter needs a table path"
                )
            table_path = Path(self.ocr_mock_table)
            if not table_path.exists():
                raise FileNotFoundError(f"missing mock OCR table: {table_path}")
            raw = json.loads(table_path.read_text(encoding="utf-8"))
            table = {
                digest: (entry["text"], float(entry["confidence"]))
                for digest, entry in raw.items()
            }
            return OcrAdapter(OcrKind.MOCK, mock_table=table)
        if self.ocr_adapter == "external_command":
            if not self.ocr_command:
                raise ConfigError(
                    "invalid value for config field 'ocr_command': required "
                    "for the external_command adapter"
                )
            return OcrAdapter(OcrKind.EXTERNAL_COMMAND, command=self.ocr_command.split())
        if not self.ocr_endpoint:
            raise ConfigError(
                "invalid value for config field 'ocr_endpoint': required "
                "for the http adapter"
            )
        return OcrAdapter(OcrKind.HTTP, endpoint=self.ocr_endpoint)


_CONFIG_FIELDS = {f.name: f for f in dataclasses.fields(PipelineConfig)}


def load_config(path: str | None, overrides: tuple[str, ...] = ()) -> PipelineConfig:
    """Read the JSON config file (if any) and apply KEY=VALUE overrides."""
    values: dict = {}
    if path:
        config_path = Path(path)
        if not config_path.exists():
            raise FileNotFoundError(f"missing config file: {config_path}")
        try:
            loaded = json.loads(config_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {config_path} is not valid JSON: {exc}")
        if not isinstance(loaded, dict):
            raise ConfigError(f"config file {config_path} must hold an object")
        values.update(loaded)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must look like KEY=VALUE, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            values[key] = json.loads(raw)
        except json.JSONDecodeError:
            values[key] = raw
    for key in values:
        if key not in _CONFIG_FIELDS:
            raise ConfigError(f"unknown config field '{key}'")
    if "split_ratios" in values:
        values["split_ratios"] = tuple(float(r) for r in values["split_ratios"])
    try:
        config = PipelineConfig(**values)
    except TypeError as exc:
        raise ConfigError(f"bad config value: {exc}")
    config.validate()
    return config


def _require_file(path: str | Path) -> Path:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"missing input file: {path}")
    return path


def _parallel_map(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- stage implementations -------------------------------------------------


def stage_segment_activity(
    config: PipelineConfig, score_paths: list[str], out_path: str
) -> list[dict]:
    """Threshold activity scores into duration-filtered sign segments."""
    paths = [_require_file(p) for p in score_paths]

    def one(path: Path) -> list[dict]:
        stream = signalkit.read_score_stream(path)
        segments = signalkit.binarize_and_segment(stream, config.activity_threshold)
        segments = signalkit.filter_by_duration(
            segments, stream.fps, config.min_sign_s, config.max_sign_s
        )
        return [
            {
                "episode_id": stream.episode_id,
                "start_frame": s.start_frame,
                "end_frame": s.end_frame,
                "kind": s.kind.value,
                "fps": stream.fps,
            }
            for s in segments
        ]

    groups = _parallel_map(one, paths, config.workers)
    records = [r for group in groups for r in group]
    records.sort(key=lambda r: (r["episode_id"], r["start_frame"]))
    write_jsonl(records, out_path)
    return records


def _read_frames(path: Path, fps: float) -> signalkit.FrameStream:
    if path.is_dir():
        return signalkit.read_frame_dir(path, fps)
    return signalkit.read_raw_frames(path, fps)


def stage_subtitle_clips(
    config: PipelineConfig,
    frame_paths: list[str],
    out_manifest: str,
    out_frames_dir: str,
) -> list[dict]:
    """Detect subtitle change points and emit non-blank averaged clips."""
    paths = [_require_file(p) for p in frame_paths]
    frames_dir = Path(out_frames_dir)
    frames_dir.mkdir(parents=True, exist_ok=True)
    cleaner = config.cleaner()

    def one(path: Path) -> list[dict]:
        stream = _read_frames(path, config.fps)
        stream = subtitlex.clean_stream(stream, cleaner)
        measures = signalkit.temporal_laplacian(stream)
        transitions = signalkit.detect_transitions(
            measures, config.laplacian_threshold
        )
        segments = signalkit.segments_from_transitions(transitions, stream.n_frames)
        records = []
        for segment in segments:
            clip = subtitlex.average_clip(stream, segment)
            if subtitlex.is_blank(clip, config.blank_epsilon):
                continue
            name = (
                f"{stream.episode_id}_{segment.start_frame:07d}"
                f"_{segment.end_frame:07d}.png"
            )
            write_bytes_atomic(
                subtitlex.plane_to_png_bytes(clip.mean_frame), frames_dir / name
            )
            records.append(
                subtitlex.clip_to_record(clip, stream.episode_id, name)
            )
        return records

    groups = _parallel_map(one, paths, config.workers)
    records = [r for group in groups for r in group]
    records.sort(key=lambda r: (r["episode_id"], r["start_frame"]))
    write_jsonl(records, out_manifest)
    return records


def stage_ocr(
    config: PipelineConfig, clips_path: str, frames_dir: str, out_path: str
) -> list[dict]:
    """Fill clip records with text via the configured OCR adapter."""
    from PIL import Image

    records = read_jsonl(_require_file(clips_path))
    adapter = config.ocr()
    base = Path(frames_dir)

    def one(record: dict) -> dict:
        image_path = _require_file(base / record["mean_frame"])
        with Image.open(image_path) as img:
            plane = np.asarray(img.convert("L"), dtype=np.float64) / 255.0
        clip = subtitlex.SubtitleClip(
            segment=Segment(
                record["start_frame"], record["end_frame"], SegmentKind.SUBTITLE
            ),
            mean_frame=plane,
        )
        done = subtitlex.run_ocr(clip, adapter)
        out = dict(record)
        out["text"] = done.text
        out["confidence"] = done.ocr_confidence
        return out

    out_records = _parallel_map(one, records, config.workers)
    write_jsonl(out_records, out_path)
    return out_records


def _clips_from_records(records: list[dict]) -> list[subtitlex.SubtitleClip]:
    clips = []
    for record in records:
        if record.get("text") is None:
            raise DataFormatError(
                f"clip record {record.get('episode_id')}:"
                f"{record.get('start_frame')} has no text; run the ocr stage first"
            )
        clips.append(
            subtitlex.SubtitleClip(
                segment=Segment(
                    record["start_frame"], record["end_frame"], SegmentKind.SUBTITLE
                ),
                # The averaged image is irrelevant for text regrouping.
                mean_frame=np.zeros((1, 1)),
                text=record["text"],
                ocr_confidence=record.get("confidence"),
            )
        )
    return clips


def stage_regroup(config: PipelineConfig, clips_path: str, out_path: str) -> list[dict]:
    """Merge adjacent near-duplicate clips into subtitle groups."""
    records = read_jsonl(_require_file(clips_path))
    by_episode: dict[str, list[dict]] = {}
    for record in records:
        by_episode.setdefault(record["episode_id"], []).append(record)
    out_records = []
    for episode_id in sorted(by_episode):
        episode_records = sorted(
            by_episode[episode_id], key=lambda r: r["start_frame"]
        )
        clips = _clips_from_records(episode_records)
        groups = subtitlex.regroup(
            clips, config.regroup_threshold, config.compare_to_representative
        )
        for group in groups:
            out_records.append(
                {
                    "episode_id": episode_id,
                    "start_frame": group.start_frame,
                    "end_frame": group.end_frame,
                    "representative_text": group.representative_text,
                    "members": [
                        {
                            "start": m.segment.start_frame,
                            "end": m.segment.end_frame,
                            "text": m.text,
                        }
                        for m in group.members
                    ],
                }
            )
    write_jsonl(out_records, out_path)
    return out_records


def stage_align(
    config: PipelineConfig, segments_path: str, groups_path: str, out_path: str
) -> list[dict]:
    """Assign subtitle groups to sign clips and emit aligned samples."""
    sign_records = read_jsonl(_require_file(segments_path))
    group_records = read_jsonl(_require_file(groups_path))
    episodes = sorted(
        {r["episode_id"] for r in sign_records}
        | {r["episode_id"] for r in group_records}
    )
    out_records = []
    for episode_id in episodes:
        signs = [
            Segment(r["start_frame"], r["end_frame"], SegmentKind.SIGN)
            for r in sign_records
            if r["episode_id"] == episode_id and r.get("kind", "sign") == "sign"
        ]
        signs.sort(key=lambda s: s.start_frame)
        groups = []
        for r in sorted(
            (g for g in group_records if g["episode_id"] == episode_id),
            key=lambda g: g["start_frame"],
        ):
            segment = Segment(r["start_frame"], r["end_frame"], SegmentKind.SUBTITLE)
            clip = subtitlex.SubtitleClip(
                segment=segment,
                mean_frame=np.zeros((1, 1)),
                text=r["representative_text"],
            )
            groups.append(
                subtitlex.SubtitleGroup(
                    members=[clip],
                    representative_text=r["representative_text"],
                    start_frame=r["start_frame"],
                    end_frame=r["end_frame"],
                )
            )
        if not signs or not groups:
            continue
        result = aligner.dtw_align(signs, groups, config.fps)
        samples = aligner.materialize_samples(
            result, signs, groups, config.fps, config.join_separator
        )
        out_records.extend(aligner.sample_to_record(s, episode_id) for s in samples)
    out_records.sort(key=lambda r: (r["episode_id"], r["sign_start"]))
    write_jsonl(out_records, out_path)
    return out_records


def stage_all(
    config: PipelineConfig,
    score_paths: list[str],
    frame_paths: list[str],
    out_dir: str,
) -> Path:
    """Run segmentation, clip detection, OCR, regrouping and alignment."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stage_segment_activity(config, score_paths, str(out / "signs.jsonl"))
    stage_subtitle_clips(
        config, frame_paths, str(out / "clips.jsonl"), str(out / "clip_frames")
    )
    stage_ocr(
        config,
        str(out / "clips.jsonl"),
        str(out / "clip_frames"),
        str(out / "clips_text.jsonl"),
    )
    stage_regroup(config, str(out / "clips_text.jsonl"), str(out / "groups.jsonl"))
    stage_align(
        config,
        str(out / "signs.jsonl"),
        str(out / "groups.jsonl"),
        str(out / "aligned.jsonl"),
    )
    return out / "aligned.jsonl"


def _parse_annotations(path: Path) -> list[tuple[str, glossgrammar.GlossAnnotation]]:
    parsed = []
    for sample_id, raw in glossgrammar.read_annotation_file(path):
        try:
            parsed.append((sample_id, glossgrammar.parse(raw)))
        except glossgrammar.GlossParseError as exc:
            raise DataFormatError(f"{path}: sample {sample_id}: {exc}") from exc
    return parsed


def stage_gloss_normalize(
    config: PipelineConfig,
    annotations_path: str,
    out_path: str,
    registry_out: str = "",
    registry_in: str = "",
) -> None:
    """Flatten raw annotations into training gloss sequences.

    Without --registry-in each homosign group resolves within itself
    (training data); with a registry file compounds map to their global
    class representatives (test data).
    """
    parsed = _parse_annotations(_require_file(annotations_path))
    registry = None
    if registry_in:
        registry = glossgrammar.HomosignRegistry.load(_require_file(registry_in))
    rows = []
    for sample_id, annotation in parsed:
        sequence = glossgrammar.to_training_sequence(annotation, registry)
        rows.append((sample_id, " ".join(sequence)))
    glossgrammar.write_annotation_file(rows, out_path)
    if registry_out:
        built = glossgrammar.build_registry(
            glossgrammar.collect_homosign_groups(a for _, a in parsed)
        )
        built.dump(registry_out)


def stage_gloss_canonicalize(
    config: PipelineConfig,
    hyp_path: str,
    ref_path: str,
    registry_path: str,
    out_hyp: str,
    out_ref: str,
) -> None:
    """Rewrite both sides of a scoring pair through the homosign registry."""
    registry = glossgrammar.HomosignRegistry.load(_require_file(registry_path))
    hyp_rows = glossgrammar.read_annotation_file(_require_file(hyp_path))
    ref_rows = glossgrammar.read_annotation_file(_require_file(ref_path))
    if len(hyp_rows) != len(ref_rows):
        raise DataFormatError("hypothesis and reference files differ in length")
    out_h = []
    out_r = []
    for (hid, hyp), (rid, ref) in zip(hyp_rows, ref_rows):
        canon_h, canon_r = glossgrammar.canonicalize_for_scoring(
            hyp.split(), ref.split(), registry
        )
        out_h.append((hid, " ".join(canon_h)))
        out_r.append((rid, " ".join(canon_r)))
    glossgrammar.write_annotation_file(out_h, out_hyp)
    glossgrammar.write_annotation_file(out_r, out_ref)


def _paired_rows(
    hyp_path: Path, ref_path: Path
) -> list[tuple[str, str, str]]:
    hyp_rows = dict(glossgrammar.read_annotation_file(hyp_path))
    ref_rows = glossgrammar.read_annotation_file(ref_path)
    if len(hyp_rows) != len(ref_rows):
        raise DataFormatError(
            f"{hyp_path} has {len(hyp_rows)} samples, {ref_path} has {len(ref_rows)}"
        )
    pairs = []
    for sample_id, ref_raw in ref_rows:
        if sample_id not in hyp_rows:
            raise DataFormatError(f"{hyp_path}: missing hypothesis for {sample_id}")
        pairs.append((sample_id, hyp_rows[sample_id], ref_raw))
    return pairs


def stage_score(
    config: PipelineConfig,
    metric: str,
    hyp_path: str,
    ref_path: str,
    registry_path: str = "",
    max_n: int = 4,
    beta: float = 1.0,
    pure_chars: bool = False,
    smoothing: str = "none",
    out_path: str = "",
) -> metrics.ScoreReport:
    """Score hypothesis against reference files and print a report."""
    rows = _paired_rows(_require_file(hyp_path), _require_file(ref_path))
    if metric == "wer":
        pairs = [(sid, h.split(), r.split()) for sid, h, r in rows]
        if registry_path:
            registry = glossgrammar.HomosignRegistry.load(
                _require_file(registry_path)
            )
            pairs = [
                (sid, *glossgrammar.canonicalize_for_scoring(h, r, registry))
                for sid, h, r in pairs
            ]
        report = metrics.score_wer(pairs)
    else:
        if registry_path:
            raise ConfigError(
                "invalid value for config field 'registry': only applies to wer"
            )
        pairs = [
            (
                sid,
                metrics.char_tokens(h, pure_chars),
                metrics.char_tokens(r, pure_chars),
            )
            for sid, h, r in rows
        ]
        if metric == "bleu":
            report = metrics.score_bleu(pairs, max_n=max_n, smoothing=smoothing)
        elif metric == "rouge":
            report = metrics.score_rouge_l(pairs, beta=beta)
        else:
            raise ConfigError(f"unknown metric {metric!r}, expected wer, bleu or rouge")

    for sample in report.per_sample:
        click.echo(f"{sample.sample_id}\t{sample.score:.2f}")
    if report.details:
        detail = "  ".join(f"{k}={v:.2f}" for k, v in sorted(report.details.items()))
        click.echo(f"# {detail}")
    click.echo(f"corpus\t{report.corpus:.2f}")
    if out_path:
        records = [
            {"sample_id": s.sample_id, "score": s.score} for s in report.per_sample
        ]
        records.append(
            {
                "sample_id": None,
                "metric": report.metric.value,
                "corpus": report.corpus,
                **{k: v for k, v in sorted(report.details.items())},
            }
        )
        write_jsonl(records, out_path)
    return report


def stage_split(
    config: PipelineConfig, manifest_path: str, out_path: str
) -> corpus.SplitAssignment:
    samples = corpus.read_manifest(_require_file(manifest_path))
    assignment = corpus.make_split(
        samples,
        ratios=config.split_ratios,
        seed=config.split_seed,
        max_attempts=config.split_max_attempts,
    )
    corpus.write_split_file(assignment, out_path)
    achieved = "/".join(f"{r:.4f}" for r in assignment.ratios)
    click.echo(
        f"split {len(assignment.assignment)} samples (train/dev/test = {achieved}, "
        f"attempts={assignment.attempts}, moved_to_train={assignment.moved_to_train})"
    )
    return assignment


_STATS_COLUMNS = [
    ("hours", "hours"),
    ("samples", "samples"),
    ("gloss_vocab", "gloss vocab"),
    ("gloss_running", "gloss running"),
    ("gloss_oov", "gloss OOVs"),
    ("gloss_singletons", "gloss singletons"),
    ("char_vocab", "char vocab"),
    ("char_running", "char running"),
    ("char_oov", "char OOVs"),
    ("char_singletons", "char singletons"),
]


def stage_stats(
    config: PipelineConfig, manifest_path: str, split_path: str, out_path: str = ""
) -> dict[str, corpus.SplitStats]:
    samples = corpus.read_manifest(_require_file(manifest_path))
    split_map = corpus.read_split_file(_require_file(split_path))
    assignment = corpus.SplitAssignment(
        assignment=split_map, seed=config.split_seed, ratios=config.split_ratios
    )
    stats = corpus.compute_stats(samples, assignment)

    def fmt(value) -> str:
        if value is None:
            return "N/A"
        if isinstance(value, float):
            return f"{value:.2f}"
        return str(value)

    header = ["split"] + [label for _, label in _STATS_COLUMNS]
    click.echo("\t".join(header))
    for name in ("train", "dev", "test", "overall"):
        row = [name] + [fmt(getattr(stats[name], field)) for field, _ in _STATS_COLUMNS]
        click.echo("\t".join(row))
    if out_path:
        payload = {
            name: {field: getattr(split_stats, field) for field, _ in _STATS_COLUMNS}
            for name, split_stats in stats.items()
        }
        write_bytes_atomic(
            json.dumps(payload, indent=2, sort_keys=True).encode("utf-8"),
            out_path,
        )
    return stats


def stage_synth_episode(
    config: PipelineConfig, spec: synth.SynthSpec, out_dir: str
) -> synth.SynthEpisode:
    """Generate one synthetic episode plus its ground truth on disk."""
    episode = synth.generate_episode(spec)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    signalkit.write_score_stream(episode.scores, out / f"{spec.episode_id}.scores")
    signalkit.write_raw_frames(episode.frames, out / f"{spec.episode_id}.frames")
    table = {
        digest: {"text": text, "confidence": confidence}
        for digest, (text, confidence) in episode.mock_table.items()
    }
    write_bytes_atomic(
        json.dumps(table, ensure_ascii=False, indent=2, sort_keys=True).encode("utf-8"),
        out / f"{spec.episode_id}.mock.json",
    )
    write_jsonl(episode.truth, out / f"{spec.episode_id}.truth.jsonl")
    return episode


def stage_serve(
    config: PipelineConfig,
    store_dir: str,
    host: str,
    port: int,
    read_only: bool,
    manifest_path: str = "",
    media_dir: str = "",
) -> None:
    import uvicorn

    from .service import AnnotationStore, create_app, tasks_from_manifest

    store = AnnotationStore(store_dir)
    if manifest_path and not store.list_tasks():
        records = corpus.read_manifest(_require_file(manifest_path))
        store.import_tasks(tasks_from_manifest(records, media_dir or None))
    app = create_app(store, read_only=read_only)
    uvicorn.run(app, host=host, port=port, log_level="warning")


STAGES = {
    "segment-activity": stage_segment_activity,
    "subtitle-clips": stage_subtitle_clips,
    "ocr": stage_ocr,
    "regroup": stage_regroup,
    "align": stage_align,
    "all": stage_all,
    "gloss-normalize": stage_gloss_normalize,
    "gloss-canonicalize": stage_gloss_canonicalize,
    "score": stage_score,
    "split": stage_split,
    "stats": stage_stats,
    "serve": stage_serve,
    "synth-episode": stage_synth_episode,
}


def run_stage(stage: str, config: PipelineConfig, **inputs):
    """Programmatic entry point mirroring the CLI subcommands."""
    if stage not in STAGES:
        raise ValueError(f"unknown stage {stage!r}")
    return STAGES[stage](config, **inputs)


# -- click wiring -----------------------------------------------------------


_config_option = click.option(
    "--config", "config_path", default=None, help="JSON config file."
)
_override_option = click.option(
    "--option",
    "-o",
    "overrides",
    multiple=True,
    help="Config override KEY=VALUE (repeatable).",
)


@click.group()
def cli() -> None:
    """Sign language corpus construction and evaluation pipeline."""


@cli.command("segment-activity")
@click.argument("scores", nargs=-1, required=True)
@click.option("--out", required=True, help="Output sign segment manifest.")
@_config_option
@_override_option
def cmd_segment_activity(scores, out, config_path, overrides):
    """Threshold activity score streams into sign segments."""
    config = load_config(config_path, overrides)
    stage_segment_activity(config, list(scores), out)


@cli.command("subtitle-clips")
@click.argument("frames", nargs=-1, required=True)
@click.option("--out", required=True, help="Output clip manifest.")
@click.option("--frames-dir", required=True, help="Directory for averaged clips.")
@_config_option
@_override_option
def cmd_subtitle_clips(frames, out, frames_dir, config_path, overrides):
    """Detect subtitle changes in strip streams and average clips."""
    config = load_config(config_path, overrides)
    stage_subtitle_clips(config, list(frames), out, frames_dir)


@cli.command("ocr")
@click.option("--clips", required=True, help="Clip manifest from subtitle-clips.")
@click.option("--frames-dir", required=True, help="Directory holding averaged clips.")
@click.option("--out", required=True, help="Output manifest with text.")
@click.option("--adapter", default=None, help="mock, external_command or http.")
@click.option("--mock-table", default=None, help="Mock OCR table (JSON).")
@click.option("--command", default=None, help="External OCR command.")
@click.option("--endpoint", default=None, help="HTTP OCR endpoint.")
@_config_option
@_override_option
def cmd_ocr(clips, frames_dir, out, adapter, mock_table, command, endpoint,
            config_path, overrides):
    """Run OCR over averaged subtitle clips."""
    config = load_config(config_path, overrides)
    if adapter:
        config.ocr_adapter = adapter
    if mock_table:
        config.ocr_mock_table = mock_table
    if command:
        config.ocr_command = command
    if endpoint:
        config.ocr_endpoint = endpoint
    config.validate()
    stage_ocr(config, clips, frames_dir, out)


@cli.command("regroup")
@click.option("--clips", required=True, help="Clip manifest with text.")
@click.option("--out", required=True, help="Output subtitle group manifest.")
@_config_option
@_override_option
def cmd_regroup(clips, out, config_path, overrides):
    """Merge adjacent near-duplicate subtitle clips."""
    config = load_config(config_path, overrides)
    stage_regroup(config, clips, out)


@cli.command("align")
@click.option("--segments", required=True, help="Sign segment manifest.")
@click.option("--groups", required=True, help="Subtitle group manifest.")
@click.option("--out", required=True, help="Output aligned sample manifest.")
@_config_option
@_override_option
def cmd_align(segments, groups, out, config_path, overrides):
    """Align subtitle groups to sign segments."""
    config = load_config(config_path, overrides)
    stage_align(config, segments, groups, out)


@cli.command("all")
@click.option("--scores", multiple=True, required=True, help="Score stream file.")
@click.option("--frames", multiple=True, required=True, help="Frame stream file.")
@click.option("--out-dir", required=True, help="Directory for all artifacts.")
@click.option("--mock-table", default=None, help="Mock OCR table (JSON).")
@_config_option
@_override_option
def cmd_all(scores, frames, out_dir, mock_table, config_path, overrides):
    """Run the full pipeline: segment, clips, ocr, regroup, align."""
    config = load_config(config_path, overrides)
    if mock_table:
        config.ocr_mock_table = mock_table
    stage_all(config, list(scores), list(frames), out_dir)


@cli.command("gloss-normalize")
@click.option("--annotations", required=True, help="TSV of sample_id and raw gloss.")
@click.option("--out", required=True, help="Output TSV of flattened glosses.")
@click.option("--registry-out", default="", help="Dump the homosign registry here.")
@click.option("--registry-in", default="", help="Apply an existing registry (test mode).")
@_config_option
@_override_option
def cmd_gloss_normalize(annotations, out, registry_out, registry_in,
                        config_path, overrides):
    """Normalize raw gloss annotations into flat training sequences."""
    config = load_config(config_path, overrides)
    stage_gloss_normalize(config, annotations, out, registry_out, registry_in)


@cli.command("gloss-canonicalize")
@click.option("--hyp", required=True, help="Hypothesis TSV.")
@click.option("--ref", required=True, help="Reference TSV.")
@click.option("--registry", required=True, help="Homosign registry dump.")
@click.option("--out-hyp", required=True)
@click.option("--out-ref", required=True)
@_config_option
@_override_option
def cmd_gloss_canonicalize(hyp, ref, registry, out_hyp, out_ref,
                           config_path, overrides):
    """Map registered glosses to class representatives on both sides."""
    config = load_config(config_path, overrides)
    stage_gloss_canonicalize(config, hyp, ref, registry, out_hyp, out_ref)


@cli.command("score")
@click.argument("metric", type=click.Choice(["wer", "bleu", "rouge"]))
@click.option("--hyp", required=True, help="Hypothesis TSV.")
@click.option("--ref", required=True, help="Reference TSV.")
@click.option("--registry", default="", help="Homosign registry (wer only).")
@click.option("--max-n", default=4, show_default=True, help="Highest BLEU order.")
@click.option("--beta", default=1.0, show_default=True, help="ROUGE-L beta.")
@click.option("--pure-chars", is_flag=True, help="Split ASCII runs per character.")
@click.option("--smoothing", default="none", type=click.Choice(["none", "add1"]),
              show_default=True, help="Per-sample sentence BLEU smoothing.")
@click.option("--out", default="", help="Also write a line-delimited report.")
@_config_option
@_override_option
def cmd_score(metric, hyp, ref, registry, max_n, beta, pure_chars, smoothing, out,
              config_path, overrides):
    """Score hypothesis against reference annotations."""
    config = load_config(config_path, overrides)
    stage_score(
        config, metric, hyp, ref, registry,
        max_n=max_n, beta=beta, pure_chars=pure_chars, smoothing=smoothing,
        out_path=out,
    )


@cli.command("split")
@click.option("--manifest", required=True, help="Corpus manifest.")
@click.option("--out", required=True, help="Output split file.")
@click.option("--seed", default=None, type=int, help="Override the split seed.")
@_config_option
@_override_option
def cmd_split(manifest, out, seed, config_path, overrides):
    """Partition a corpus manifest into train/dev/test."""
    config = load_config(config_path, overrides)
    if seed is not None:
        config.split_seed = seed
    stage_split(config, manifest, out)


@cli.command("stats")
@click.option("--manifest", required=True, help="Corpus manifest.")
@click.option("--split", "split_path", required=True, help="Split file.")
@click.option("--out", default="", help="Also write the table as JSON.")
@_config_option
@_override_option
def cmd_stats(manifest, split_path, out, config_path, overrides):
    """Print per-split corpus statistics."""
    config = load_config(config_path, overrides)
    stage_stats(config, manifest, split_path, out)


@cli.command("serve")
@click.option("--store", required=True, help="Annotation store directory.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8787, show_default=True)
@click.option("--read-only", is_flag=True)
@click.option("--manifest", default="", help="Seed tasks from a corpus manifest.")
@click.option("--media-dir", default="", help="Directory with per-sample media.")
@_config_option
@_override_option
def cmd_serve(store, host, port, read_only, manifest, media_dir,
              config_path, overrides):
    """Serve the annotation API over a local socket."""
    config = load_config(config_path, overrides)
    stage_serve(config, store, host, port, read_only, manifest, media_dir)


@cli.command("synth-episode")
@click.option("--out-dir", required=True, help="Output directory.")
@click.option("--episode-id", default="synth000", show_default=True)
@click.option("--signs", default=3, show_default=True, help="Number of sign runs.")
@click.option("--subs", default="1:3", show_default=True,
              help="Subtitles per sign, MIN:MAX.")
@click.option("--duration", default="4:10", show_default=True,
              help="Sign duration range in seconds, MIN:MAX.")
@click.option("--seed", default=0, show_default=True)
@click.option("--strip", default="96x12", show_default=True,
              help="Strip size, WIDTHxHEIGHT.")
@click.option("--split-prob", default=0.35, show_default=True,
              help="Chance an event is emitted as two same-text sub-events.")
@_config_option
@_override_option
def cmd_synth_episode(out_dir, episode_id, signs, subs, duration, seed, strip,
                      split_prob, config_path, overrides):
    """Generate a synthetic episode with exact ground truth."""
    config = load_config(config_path, overrides)

    def parse_range(text: str, name: str, cast):
        parts = text.split(":")
        if len(parts) != 2:
            raise ConfigError(f"invalid value for config field '{name}': {text!r}")
        return cast(parts[0]), cast(parts[1])

    try:
        width, height = (int(v) for v in strip.lower().split("x"))
    except ValueError:
        raise ConfigError(f"invalid value for config field 'strip': {strip!r}")
    spec = synth.SynthSpec(
        episode_id=episode_id,
        n_signs=signs,
        subs_per_sign=parse_range(subs, "subs", int),
        sign_duration_s=parse_range(duration, "duration", float),
        fps=config.fps,
        strip_width=width,
        strip_height=height,
        seed=seed,
        split_event_prob=split_prob,
    )
    stage_synth_episode(config, spec, out_dir)


def main(argv: list[str] | None = None) -> None:
    """CLI entry point with the documented exit codes."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.UsageError as exc:
        exc.show()
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except click.Abort:
        sys.exit(1)
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    except AdapterError as exc:
        click.echo(f"adapter error: {exc}", err=True)
        sys.exit(3)
    except (FileNotFoundError, ValueError, KeyError, OSError) as exc:
        click.echo(f"data error: {exc}", err=True)
        sys.exit(2)
    sys.exit(0)


if __name__ == "__main__":
    main()
