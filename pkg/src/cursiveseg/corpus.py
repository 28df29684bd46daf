"""Corpora: manifests on disk, synthetic words, and training patterns.

A manifest is UTF-8 text, one word per line, three tab-separated fields:
word id, image path relative to the manifest, and comma-separated
strictly increasing truth columns (empty for single-glyph words).
"""
from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import pipeline
from .features import WindowConfig, extract_window
from .mlp import LabeledPoint
from .raster import BinaryImage, GrayImage, binary_to_gray, load_gray, save_gray

__all__ = [
    "ManifestError",
    "WordRecord",
    "GlyphSet",
    "TrainingFile",
    "separable_glyphs",
    "mixed_glyphs",
    "glyph_library",
    "synthesize_word",
    "synthesize_corpus",
    "load_manifest",
    "write_manifest",
    "build_training_file",
    "save_training_file",
    "load_training_file",
]


class ManifestError(ValueError):
    """Raised with every malformed manifest line listed."""


@dataclass(frozen=True)
class WordRecord:
    word_id: str
    image_path: Path
    truth_columns: tuple[int, ...]
    script_tag: str | None = None

    def __post_init__(self):
        cols = tuple(int(c) for c in self.truth_columns)
        if any(b <= a for a, b in zip(cols, cols[1:])):
            raise ValueError(f"word {self.word_id}: truth columns must be strictly increasing")
        if any(c < 0 for c in cols):
            raise ValueError(f"word {self.word_id}: negative truth column")
        object.__setattr__(self, "truth_columns", cols)
        object.__setattr__(self, "image_path", Path(self.image_path))


def load_manifest(path) -> list[WordRecord]:
    """Parse and validate a manifest file.

    Image paths resolve against the manifest's directory. Validation is
    fail-fast but complete: every malformed line (field count, bad
    integers, non-increasing columns, missing image file, column beyond
    the image width) is reported in one ManifestError.
    """
    path = Path(path)
    base = path.parent
    records = []
    problems = []
    lines = path.read_text(encoding="utf-8").splitlines()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            problems.append(f"line {lineno}: expected 3 tab-separated fields, got {len(parts)}")
            continue
        word_id, rel_path, col_field = parts
        if not word_id:
            problems.append(f"line {lineno}: empty word id")
            continue
        try:
            cols = tuple(int(tok) for tok in col_field.split(",")) if col_field else ()
        except ValueError:
            problems.append(f"line {lineno}: malformed truth columns {col_field!r}")
            continue
        image_path = (base / rel_path).resolve()
        if not image_path.is_file():
            problems.append(f"line {lineno}: missing image file {rel_path}")
            continue
        try:
            record = WordRecord(word_id, image_path, cols)
        except ValueError as exc:
            problems.append(f"line {lineno}: {exc}")
            continue
        try:
            width = load_gray(image_path.read_bytes()).width
        except ValueError as exc:
            problems.append(f"line {lineno}: undecodable image {rel_path}: {exc}")
            continue
        if cols and cols[-1] >= width:
            problems.append(f"line {lineno}: truth column {cols[-1]} beyond image width {width}")
            continue
        records.append(record)
    if problems:
        raise ManifestError("; ".join(problems))
    if not records:
        warnings.warn(f"manifest {path} holds no records", stacklevel=2)
    return records


def write_manifest(records: Sequence[WordRecord], path) -> None:
    """Write records with image paths relative to the manifest location."""
    path = Path(path)
    lines = []
    for rec in records:
        rel = Path(rec.image_path).resolve().relative_to(path.parent.resolve())
        cols = ",".join(str(c) for c in rec.truth_columns)
        lines.append(f"{rec.word_id}\t{rel.as_posix()}\t{cols}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# glyphs and synthesis

def _trim_columns(pixels: np.ndarray) -> np.ndarray:
    cols = np.nonzero(pixels.any(axis=0))[0]
    return pixels[:, cols[0] : cols[-1] + 1]


def _ring(radius=8, thickness=2.4) -> np.ndarray:
    size = 2 * radius + 3
    yy, xx = np.mgrid[:size, :size]
    d = np.hypot(yy - size // 2, xx - size // 2)
    return ((d <= radius) & (d > radius - thickness)).astype(np.uint8)


def _ellipse(rx=6, ry=10, thickness=0.30) -> np.ndarray:
    size_y, size_x = 2 * ry + 3, 2 * rx + 3
    yy, xx = np.mgrid[:size_y, :size_x]
    d = np.hypot((yy - size_y // 2) / ry, (xx - size_x // 2) / rx)
    return ((d <= 1.0) & (d > 1.0 - thickness)).astype(np.uint8)


def _arc(radius=8, thickness=2.4, opening_deg=55.0, facing=0.0) -> np.ndarray:
    # Ring with an angular opening centered on `facing` degrees (0 = east).
    size = 2 * radius + 3
    yy, xx = np.mgrid[:size, :size]
    d = np.hypot(yy - size // 2, xx - size // 2)
    ang = np.degrees(np.arctan2(yy - size // 2, xx - size // 2))
    gap = np.abs((ang - facing + 180.0) % 360.0 - 180.0) < opening_deg
    return ((d <= radius) & (d > radius - thickness) & ~gap).astype(np.uint8)


def _bar(height=22, width=3) -> np.ndarray:
    return np.ones((height, width), np.uint8)


def _link(width=10, thickness=2, lift=4) -> np.ndarray:
    # Low horizontal connector stroke; `lift` blank rows keep it off the
    # baseline after bottom alignment.
    block = np.zeros((thickness + lift, width), np.uint8)
    block[:thickness] = 1
    return block


def _tail(span=8, thickness=2) -> np.ndarray:
    # Descending diagonal stroke.
    canvas = np.zeros((span + thickness, span), np.uint8)
    for i in range(span):
        canvas[i : i + thickness, i] = 1
    return canvas


@dataclass(frozen=True)
class GlyphSet:
    """Named binary glyphs, trimmed to content columns, bottom-aligned.

    Every glyph is padded on top to the tallest glyph's height so that
    horizontal concatenation is well defined.
    """

    glyphs: dict[str, BinaryImage]

    def __post_init__(self):
        if not self.glyphs:
            raise ValueError("glyph set is empty")
        normalized = {}
        height = 0
        trimmed = {}
        for name, glyph in self.glyphs.items():
            pixels = glyph.pixels if isinstance(glyph, BinaryImage) else np.asarray(glyph)
            if not pixels.any():
                raise ValueError(f"glyph {name!r} is empty")
            pixels = _trim_columns(pixels)
            trimmed[name] = pixels
            height = max(height, pixels.shape[0])
        for name, pixels in trimmed.items():
            pad = height - pixels.shape[0]
            normalized[name] = BinaryImage(np.pad(pixels, ((pad, 0), (0, 0))))
        object.__setattr__(self, "glyphs", normalized)

    @property
    def height(self) -> int:
        return next(iter(self.glyphs.values())).height

    def names(self) -> tuple[str, ...]:
        return tuple(sorted(self.glyphs))

    def get(self, name: str) -> BinaryImage:
        try:
            return self.glyphs[name]
        except KeyError:
            raise ValueError(f"unknown glyph {name!r}; have {', '.join(self.names())}") from None


def separable_glyphs() -> GlyphSet:
    """Closed and semi-open shapes whose interiors keep columns busy.

    Thinned, every interior column of these glyphs still carries at
    least two ink pixels, so candidate columns appear only in the gaps
    between glyphs. Skeletons stay wide; no glyph collapses to a stroke
    thin enough for neighboring gap runs to merge across it.
    """
    return GlyphSet({
        "ring": _ring(),
        "tallring": _ellipse(),
        "cee": _arc(facing=0.0),
        "dee": _arc(facing=180.0),
    })


def mixed_glyphs() -> GlyphSet:
    """Separable shapes plus strokes that defeat pure projection.

    The stem thins to a single column, so the gaps flanking it merge
    across it; the link and tail strokes are one pixel tall after
    thinning, so their whole extent becomes candidate columns. Both are
    classic over-segmentation sources the validator exists to veto.
    """
    base = {name: img.pixels for name, img in separable_glyphs().glyphs.items()}
    base["stem"] = _bar()
    base["link"] = _link()
    base["tail"] = _tail()
    return GlyphSet(base)


def glyph_library(name: str) -> GlyphSet:
    if name == "separable":
        return separable_glyphs()
    if name == "mixed":
        return mixed_glyphs()
    raise ValueError(f"unknown glyph library {name!r}; have separable, mixed")


_JITTER_ROWS = 3


def synthesize_word(glyphs: GlyphSet, sequence: Sequence[str], gap: int = 0,
                    overlap: int = 0, seed: int = 0) -> tuple[BinaryImage, tuple[int, ...]]:
    """Compose glyphs left to right with a uniform junction style.

    gap inserts that many all-blank columns between glyphs; overlap slides
    glyphs into each other, OR-ing the overlapped columns. The two are
    mutually exclusive. Truth columns are the midpoints of the junction
    regions: for a gap, the midpoint of the blank run; for an overlap,
    the seam at the middle of the shared columns. The seed drives a small
    per-glyph vertical jitter (layout and truth columns are unaffected).
    """
    if not sequence:
        raise ValueError("glyph sequence is empty")
    if gap < 0 or overlap < 0:
        raise ValueError("gap and overlap must be non-negative")
    if gap > 0 and overlap > 0:
        raise ValueError("gap and overlap are mutually exclusive")
    images = [glyphs.get(name) for name in sequence]
    if overlap and overlap >= min(img.width for img in images):
        raise ValueError(f"overlap {overlap} swallows a glyph")
    jitter = np.random.default_rng(seed).integers(0, _JITTER_ROWS + 1, size=len(images))
    height = glyphs.height + _JITTER_ROWS
    width = sum(img.width for img in images) + (len(images) - 1) * (gap - overlap)
    canvas = np.zeros((height, width), np.uint8)
    truths = []
    x = 0
    for i, img in enumerate(images):
        if i > 0:
            end_prev = x
            x = end_prev + gap - overlap
            truths.append((end_prev - overlap + end_prev + gap) // 2)
        top = height - img.height - int(jitter[i])
        canvas[top : top + img.height, x : x + img.width] |= img.pixels
        x += img.width
    return BinaryImage(canvas), tuple(truths)


_MODES = (("gap", 2), ("gap", 3), ("gap", 4), ("gap", 0), ("overlap", 1), ("overlap", 2))


def synthesize_corpus(glyphs: GlyphSet, n_words: int, out_dir, seed: int, *,
                      gap: int = 2, overlap: int = 0, junctions: str = "fixed",
                      min_glyphs: int = 3, max_glyphs: int = 6,
                      id_prefix: str = "word") -> list[WordRecord]:
    """Generate a corpus of word images plus its manifest.

    junctions='fixed' uses the given gap/overlap for every word;
    'random' draws one junction style per word from a fixed mix of gaps,
    touching joins, and overlaps. Images are written as PGM (ink black on
    white paper) under out_dir, with a manifest.tsv beside them. Fully
    deterministic for one seed.
    """
    if n_words < 1:
        raise ValueError("n_words must be >= 1")
    if junctions not in ("fixed", "random"):
        raise ValueError(f"unknown junction style {junctions!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    names = list(sorted(glyphs.glyphs))
    records = []
    for i in range(n_words):
        count = int(rng.integers(min_glyphs, max_glyphs + 1))
        sequence = [names[int(k)] for k in rng.integers(0, len(names), size=count)]
        if junctions == "fixed":
            word_gap, word_overlap = gap, overlap
        else:
            kind, value = _MODES[int(rng.integers(0, len(_MODES)))]
            word_gap = value if kind == "gap" else 0
            word_overlap = value if kind == "overlap" else 0
        word_seed = int(rng.integers(0, 2**31))
        image, truths = synthesize_word(glyphs, sequence, word_gap, word_overlap, word_seed)
        word_id = f"{id_prefix}_{i:04d}"
        image_path = out_dir / f"{word_id}.pgm"
        image_path.write_bytes(save_gray(binary_to_gray(image)))
        records.append(WordRecord(word_id, image_path, truths, script_tag="synthetic"))
    write_manifest(records, out_dir / "manifest.tsv")
    return records


# ---------------------------------------------------------------------------
# training patterns

@dataclass(frozen=True)
class TrainingFile:
    """Labeled window patterns plus the geometry they were cut with."""

    window_cfg: WindowConfig
    points: tuple[LabeledPoint, ...]
    source_word_count: int

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        for p in self.points:
            if p.features.shape != (self.window_cfg.input_size,):
                raise ValueError(f"point from {p.word_id} has {p.features.shape[0]} values, window needs {self.window_cfg.input_size}")


def build_training_file(records: Sequence[WordRecord], pipeline_cfg: pipeline.PipelineConfig,
                        window_cfg: WindowConfig, match_tolerance: int = 2) -> TrainingFile:
    """Label every geometric candidate of a corpus against its truth.

    Runs the pipeline without a validator, then marks each produced cut
    correct (1) when greedy nearest-first matching pairs it with a truth
    column within the tolerance, incorrect (0) otherwise. Features come
    from the same thinned image the cuts were made on.
    """
    if not records:
        raise ValueError("corpus is empty")
    points = []
    for rec in records:
        gray = load_gray(Path(rec.image_path).read_bytes())
        seg = pipeline.segment_word(gray, None, pipeline_cfg)
        cuts = seg.result.cut_columns
        matched = {pi for pi, _, _ in pipeline.greedy_match(cuts, rec.truth_columns, match_tolerance)}
        for ci, column in enumerate(cuts):
            features = extract_window(seg.thinned, column, window_cfg)
            points.append(LabeledPoint(features, int(ci in matched), rec.word_id, column))
    return TrainingFile(window_cfg, tuple(points), len(records))


_TRAIN_MAGIC = b"CSEGTRN1"
_TRAIN_VERSION = 1
_ID_BYTES = 32


def save_training_file(tf: TrainingFile) -> bytes:
    """Fixed-width binary container.

    Header: magic, version, window width/height, pattern count, source
    word count. Each record: 32-byte NUL-padded UTF-8 word id, uint32
    column, uint8 label, then window values as little-endian float64.
    """
    out = [_TRAIN_MAGIC, struct.pack(
        "<IIIII", _TRAIN_VERSION, tf.window_cfg.window_width, tf.window_cfg.normalized_height,
        len(tf.points), tf.source_word_count,
    )]
    for p in tf.points:
        ident = p.word_id.encode("utf-8")
        if len(ident) > _ID_BYTES:
            raise ValueError(f"word id {p.word_id!r} longer than {_ID_BYTES} bytes")
        out.append(ident.ljust(_ID_BYTES, b"\0"))
        out.append(struct.pack("<IB", p.column, p.label))
        out.append(p.features.astype("<f8").tobytes())
    return b"".join(out)


def load_training_file(data: bytes) -> TrainingFile:
    if data[:8] != _TRAIN_MAGIC:
        raise ValueError("bad magic, not a training file")
    if len(data) < 8 + 20:
        raise ValueError("truncated header")
    version, win_w, win_h, count, words = struct.unpack("<IIIII", data[8:28])
    if version != _TRAIN_VERSION:
        raise ValueError(f"unsupported format version {version}")
    cfg = WindowConfig(win_w, win_h)
    record = _ID_BYTES + 5 + 8 * cfg.input_size
    body = data[28:]
    if len(body) != count * record:
        raise ValueError(f"payload holds {len(body)} bytes, header promises {count * record}")
    points = []
    for i in range(count):
        chunk = body[i * record : (i + 1) * record]
        word_id = chunk[:_ID_BYTES].rstrip(b"\0").decode("utf-8")
        column, label = struct.unpack("<IB", chunk[_ID_BYTES : _ID_BYTES + 5])
        features = np.frombuffer(chunk, "<f8", count=cfg.input_size, offset=_ID_BYTES + 5)
        points.append(LabeledPoint(features, label, word_id, column))
    return TrainingFile(cfg, tuple(points), words)
