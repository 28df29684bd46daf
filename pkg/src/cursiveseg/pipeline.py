"""Word-level pipeline: preprocess, cut, validate, and score against truth.

Metric taxonomy (tolerances in columns, tol = match_tolerance):
predictions and truth columns are matched greedily 1:1, nearest pairs
first, considering pairs up to 2*tol apart. A truth column matched
within tol is correct; matched in (tol, 2*tol] it is bad; unmatched it
is a miss. Predictions matching no truth column are over-segmentation.
correct/miss/bad are percentages of truth columns and always partition
them; over is a percentage of predicted cuts (0% when nothing was
predicted).
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .features import WindowConfig, extract_window
from .mlp import MlpModel, classify_point
from .raster import (
    BinaryImage,
    GrayImage,
    OtsuResult,
    binarize,
    estimate_slant,
    load_gray,
    otsu_threshold,
    shear,
    shear_row_shifts,
    thin,
)
from .segmentation import (
    CandidateColumns,
    SegmentationResult,
    candidate_columns,
    column_profile,
    cut_segments,
    merge_runs,
)

if TYPE_CHECKING:  # records are consumed as plain data; no runtime import cycle
    from .corpus import WordRecord

__all__ = [
    "ConfigurationError",
    "PipelineConfig",
    "CandidateAudit",
    "WordSegmentation",
    "EvaluationReport",
    "greedy_match",
    "segment_word",
    "evaluate",
    "overlay_image",
]


class ConfigurationError(ValueError):
    """Raised when a model and pipeline configuration disagree."""


@dataclass(frozen=True)
class PipelineConfig:
    merge_threshold: int = 3
    window_cfg: WindowConfig = field(default_factory=WindowConfig)
    decision_threshold: float = 0.5
    use_validator: bool = True
    match_tolerance: int = 2
    deslant: bool = True

    def __post_init__(self):
        if self.merge_threshold < 1:
            raise ValueError("merge_threshold must be >= 1")
        if not 0.0 <= self.decision_threshold <= 1.0:
            raise ValueError("decision_threshold must lie in [0, 1]")
        if self.match_tolerance < 0:
            raise ValueError("match_tolerance must be >= 0")


@dataclass(frozen=True)
class CandidateAudit:
    """Fate of one merged candidate column.

    verdict is 'accepted', 'margin' (would cut off an inkless margin
    segment), or 'validator' (rejected by the trained net). activation is
    None unless the validator examined the candidate.
    """

    column: int
    run: tuple[int, int]
    profile_count: int
    verdict: str
    activation: float | None = None


@dataclass(frozen=True)
class WordSegmentation:
    """segment_word output: final cuts plus a complete audit trail."""

    result: SegmentationResult
    audit: tuple[CandidateAudit, ...]
    otsu: OtsuResult
    slant_angle: int | None
    thinned: BinaryImage
    elapsed_seconds: float


def greedy_match(predicted: Sequence[int], truth: Sequence[int], max_distance: int) -> list[tuple[int, int, int]]:
    """Greedy 1:1 matching of column lists, nearest pairs first.

    Ties break on the predicted then the truth column, so the matching is
    stable for sorted inputs. Returns (predicted index, truth index,
    distance) triples.
    """
    pairs = sorted(
        (abs(int(p) - int(t)), pi, ti)
        for pi, p in enumerate(predicted)
        for ti, t in enumerate(truth)
        if abs(int(p) - int(t)) <= max_distance
    )
    taken_p, taken_t = set(), set()
    matches = []
    for dist, pi, ti in pairs:
        if pi in taken_p or ti in taken_t:
            continue
        taken_p.add(pi)
        taken_t.add(ti)
        matches.append((pi, ti, dist))
    return matches


def segment_word(gray: GrayImage, model: MlpModel | None, cfg: PipelineConfig = PipelineConfig()) -> WordSegmentation:
    """Segment one word image; stages run in a fixed order.

    Threshold, binarize, optionally deslant, thin, project, merge
    candidates, drop margin cuts, then let the validator veto survivors
    when a model is supplied and enabled. Every merged candidate appears
    exactly once in the audit trail. Cut columns refer to the returned
    (possibly deslanted) thinned image.
    """
    if model is not None and cfg.use_validator:
        if model.window_cfg is not None and model.window_cfg != cfg.window_cfg:
            raise ConfigurationError(
                f"model window {model.window_cfg} does not match configured {cfg.window_cfg}"
            )
        if model.input_size != cfg.window_cfg.input_size:
            raise ConfigurationError(
                f"model expects {model.input_size} inputs, window provides {cfg.window_cfg.input_size}"
            )
    start = time.perf_counter()
    otsu = otsu_threshold(gray)
    work = binarize(gray, otsu.threshold)
    slant = None
    if cfg.deslant:
        slant = estimate_slant(work)
        work = shear(work, slant)
    thinned = thin(work)
    profile = column_profile(thinned)
    runs = merge_runs(candidate_columns(profile), cfg.merge_threshold)

    ink = np.nonzero(profile.counts)[0]
    first_ink = int(ink[0]) if len(ink) else None
    last_ink = int(ink[-1]) if len(ink) else None
    audit = []
    accepted = []
    for run in runs:
        count = int(profile.counts[run.column])
        if first_ink is None or run.column <= first_ink or run.column > last_ink:
            audit.append(CandidateAudit(run.column, (run.first, run.last), count, "margin"))
            continue
        if model is not None and cfg.use_validator:
            verdict = classify_point(model, extract_window(thinned, run.column, cfg.window_cfg),
                                     cfg.decision_threshold)
            if not verdict.correct:
                audit.append(CandidateAudit(run.column, (run.first, run.last), count,
                                            "validator", verdict.activation))
                continue
            audit.append(CandidateAudit(run.column, (run.first, run.last), count,
                                        "accepted", verdict.activation))
        else:
            audit.append(CandidateAudit(run.column, (run.first, run.last), count, "accepted"))
        accepted.append(run.column)
    result = cut_segments(thinned, CandidateColumns(np.asarray(accepted, dtype=np.int64)))
    elapsed = time.perf_counter() - start
    return WordSegmentation(result, tuple(audit), otsu, slant, thinned, elapsed)


@dataclass(frozen=True)
class EvaluationReport:
    """Corpus-level counts; rates are always derived from these counts."""

    word_count: int
    truth_total: int
    predicted_total: int
    correct_count: int
    bad_count: int
    miss_count: int
    over_count: int
    mean_time_per_word: float
    validator_used: bool
    config: PipelineConfig

    def _truth_rate(self, count: int) -> float:
        return 100.0 * count / self.truth_total if self.truth_total else 0.0

    @property
    def correct_rate(self) -> float:
        return self._truth_rate(self.correct_count)

    @property
    def bad_rate(self) -> float:
        return self._truth_rate(self.bad_count)

    @property
    def miss_rate(self) -> float:
        return self._truth_rate(self.miss_count)

    @property
    def over_rate(self) -> float:
        # Percentage of predicted cuts; 0% when nothing was predicted.
        return 100.0 * self.over_count / self.predicted_total if self.predicted_total else 0.0

    def to_kv_text(self) -> str:
        """Canonical machine-readable form, one key=value per line.

        Deliberately excludes wall-clock timing so identical runs produce
        byte-identical files.
        """
        cfg = self.config
        entries = {
            "word_count": self.word_count,
            "truth_total": self.truth_total,
            "predicted_total": self.predicted_total,
            "correct_count": self.correct_count,
            "bad_count": self.bad_count,
            "miss_count": self.miss_count,
            "over_count": self.over_count,
            "correct_rate": self.correct_rate,
            "bad_rate": self.bad_rate,
            "miss_rate": self.miss_rate,
            "over_rate": self.over_rate,
            "validator_used": self.validator_used,
            "config.merge_threshold": cfg.merge_threshold,
            "config.window_width": cfg.window_cfg.window_width,
            "config.normalized_height": cfg.window_cfg.normalized_height,
            "config.decision_threshold": cfg.decision_threshold,
            "config.use_validator": cfg.use_validator,
            "config.match_tolerance": cfg.match_tolerance,
            "config.deslant": cfg.deslant,
        }
        return "".join(f"{k}={entries[k]!r}\n" for k in sorted(entries))

    def to_table(self) -> str:
        """Human-readable summary, definitions printed beside the numbers."""
        tol = self.config.match_tolerance
        rows = [
            ("words", self.word_count, "word images evaluated"),
            ("truth columns", self.truth_total, "ground-truth cut columns"),
            ("predicted cuts", self.predicted_total, "final cut columns emitted"),
            ("correct", f"{self.correct_rate:.2f}%",
             f"truth columns matched within {tol} columns ({self.correct_count})"),
            ("bad", f"{self.bad_rate:.2f}%",
             f"truth columns matched within {tol + 1}..{2 * tol} columns ({self.bad_count})"),
            ("miss", f"{self.miss_rate:.2f}%",
             f"truth columns with no prediction within {2 * tol} columns ({self.miss_count})"),
            ("over", f"{self.over_rate:.2f}%",
             f"predicted cuts matching no truth column ({self.over_count})"),
            ("mean time", f"{1000.0 * self.mean_time_per_word:.3f} ms",
             "wall clock per word, segment_word only (not in the key-value report)"),
        ]
        label_w = max(len(r[0]) for r in rows)
        value_w = max(len(str(r[1])) for r in rows)
        lines = [f"{label:<{label_w}}  {str(value):>{value_w}}  {note}" for label, value, note in rows]
        lines.append(f"validator: {'enabled' if self.validator_used else 'disabled (geometry only)'}")
        lines.append("correct/bad/miss are percentages of truth columns and sum to 100%;")
        lines.append("over is a percentage of predicted cuts.")
        return "\n".join(lines) + "\n"


def _score_word(record, model, cfg: PipelineConfig):
    from pathlib import Path

    gray = load_gray(Path(record.image_path).read_bytes())
    if any(t >= gray.width for t in record.truth_columns):
        raise ValueError(f"word {record.word_id}: truth column beyond image width {gray.width}")
    seg = segment_word(gray, model, cfg)
    cuts = seg.result.cut_columns
    tol = cfg.match_tolerance
    matches = greedy_match(cuts, record.truth_columns, 2 * tol)
    correct = sum(1 for _, _, d in matches if d <= tol)
    bad = len(matches) - correct
    return (
        len(record.truth_columns),
        len(cuts),
        correct,
        bad,
        len(record.truth_columns) - len(matches),
        len(cuts) - len(matches),
        seg.elapsed_seconds,
    )


def evaluate(records: Sequence["WordRecord"], model: MlpModel | None,
             cfg: PipelineConfig = PipelineConfig(), *, workers: int = 1) -> EvaluationReport:
    """Score a corpus; see the module docstring for the taxonomy.

    Serial by default for stable timing; workers > 1 fans the per-word
    runs over a thread pool and merges counts in corpus order, so the
    report content does not depend on scheduling.
    """
    if not records:
        raise ValueError("corpus is empty")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if workers == 1:
        rows = [_score_word(r, model, cfg) for r in records]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda r: _score_word(r, model, cfg), records))
    truth_total = sum(r[0] for r in rows)
    predicted = sum(r[1] for r in rows)
    correct = sum(r[2] for r in rows)
    bad = sum(r[3] for r in rows)
    miss = sum(r[4] for r in rows)
    over = sum(r[5] for r in rows)
    mean_time = sum(r[6] for r in rows) / len(rows)
    return EvaluationReport(
        word_count=len(records),
        truth_total=truth_total,
        predicted_total=predicted,
        correct_count=correct,
        bad_count=bad,
        miss_count=miss,
        over_count=over,
        mean_time_per_word=mean_time,
        validator_used=model is not None and cfg.use_validator,
        config=cfg,
    )


_ACCEPT_MARK = 64
_REJECT_MARK = 192


def overlay_image(gray: GrayImage, seg: WordSegmentation, cfg: PipelineConfig) -> GrayImage:
    """Source image with candidate columns drawn over it.

    Accepted cuts are painted dark (64), rejected candidates light (192).
    Cut columns live in deslanted coordinates; when a slant correction
    was applied, each column maps back through the inverse row shifts and
    is drawn as the corresponding slanted line.
    """
    canvas = np.array(gray.pixels)
    height = gray.height
    if seg.slant_angle:
        shifts = shear_row_shifts(height, seg.slant_angle)
        offset = -int(shifts.min())
    else:
        shifts = np.zeros(height, np.int64)
        offset = 0
    ys = np.arange(height)
    for aud in seg.audit:
        xs = aud.column - shifts - offset
        mark = _ACCEPT_MARK if aud.verdict == "accepted" else _REJECT_MARK
        valid = (xs >= 0) & (xs < gray.width)
        canvas[ys[valid], xs[valid]] = mark
    return GrayImage(canvas)
