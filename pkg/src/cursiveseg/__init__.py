"""Cursive word segmentation: column profiles plus a perceptron validator.

The pipeline binarizes a grayscale word image by global thresholding,
corrects slant with a shear, thins strokes to one-pixel skeletons, cuts
at merged low-density columns, and optionally lets a small trained
network veto candidate cuts.
"""

from .raster import (
    BinaryImage,
    DecodeError,
    GrayImage,
    OtsuResult,
    binarize,
    binary_to_gray,
    dump_pbm,
    estimate_slant,
    histogram256,
    invert_gray,
    load_gray,
    otsu_threshold,
    save_gray,
    shear,
    shear_row_shifts,
    thin,
)
from .segmentation import (
    CandidateColumns,
    ColumnProfile,
    MergedRun,
    SegmentationResult,
    candidate_columns,
    column_profile,
    cut_segments,
    cuts_line,
    merge_candidates,
    merge_runs,
)
from .features import WindowConfig, extract_window
from .mlp import (
    Classification,
    Gradients,
    LabeledPoint,
    MlpModel,
    ModelFormatError,
    TrainingConfig,
    TrainingError,
    classify_point,
    forward,
    init_model,
    load_model,
    loss_gradients,
    save_model,
    train,
)
from .corpus import (
    GlyphSet,
    ManifestError,
    TrainingFile,
    WordRecord,
    build_training_file,
    glyph_library,
    load_manifest,
    load_training_file,
    mixed_glyphs,
    save_training_file,
    separable_glyphs,
    synthesize_corpus,
    synthesize_word,
    write_manifest,
)
from .pipeline import (
    CandidateAudit,
    ConfigurationError,
    EvaluationReport,
    PipelineConfig,
    WordSegmentation,
    evaluate,
    greedy_match,
    overlay_image,
    segment_word,
)

__version__ = "0.1.0"
