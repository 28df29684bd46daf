"""Command line front end.

Exit codes: 0 success, 1 usage error, 2 input/configuration error,
3 internal invariant violation. stdout carries data and status; stderr
carries diagnostics. Every run prints its effective configuration, and
all file outputs are byte-identical across runs with the same flags and
seeds.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .corpus import (
    ManifestError,
    build_training_file,
    glyph_library,
    load_manifest,
    load_training_file,
    save_training_file,
    synthesize_corpus,
)
from .features import WindowConfig
from .mlp import (
    ModelFormatError,
    TrainingConfig,
    TrainingError,
    init_model,
    load_model,
    save_model,
    train,
)
from .pipeline import (
    ConfigurationError,
    PipelineConfig,
    evaluate,
    overlay_image,
    segment_word,
)
from .raster import (
    DecodeError,
    binarize,
    binary_to_gray,
    dump_pbm,
    estimate_slant,
    invert_gray,
    load_gray,
    otsu_threshold,
    save_gray,
    shear,
    thin,
)
from .segmentation import cuts_line

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; the contract wants 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def _add_window_flags(sub):
    sub.add_argument("--window-width", type=int, default=9, help="feature window width (odd)")
    sub.add_argument("--window-height", type=int, default=29, help="normalized window height")


def _add_pipeline_flags(sub):
    sub.add_argument("--merge-threshold", type=int, default=3,
                     help="merge candidate columns closer than this")
    sub.add_argument("--decision-threshold", type=float, default=0.5,
                     help="validator acceptance threshold")
    sub.add_argument("--match-tolerance", type=int, default=2,
                     help="columns of slack when matching truth")
    sub.add_argument("--no-deslant", action="store_true", help="skip slant correction")
    sub.add_argument("--no-validator", action="store_true", help="geometry only, ignore any model")
    _add_window_flags(sub)


def _pipeline_config(args) -> PipelineConfig:
    return PipelineConfig(
        merge_threshold=args.merge_threshold,
        window_cfg=WindowConfig(args.window_width, args.window_height),
        decision_threshold=args.decision_threshold,
        use_validator=not args.no_validator,
        match_tolerance=args.match_tolerance,
        deslant=not args.no_deslant,
    )


def _load_input(args):
    gray = load_gray(Path(args.input).read_bytes())
    return invert_gray(gray) if args.invert else gray


def _print_config(args):
    for key in sorted(vars(args)):
        if key == "func":
            continue
        print(f"config: {key} = {getattr(args, key)}")


def _cmd_preprocess(args) -> int:
    gray = _load_input(args)
    otsu = otsu_threshold(gray)
    binary = binarize(gray, otsu.threshold)
    if args.no_deslant:
        slant_note = "skipped"
        deslanted = binary
    else:
        angle = estimate_slant(binary)
        slant_note = str(angle)
        deslanted = shear(binary, angle)
    thinned = thin(deslanted)
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.input).stem
    (out_dir / f"{stem}_binary.pgm").write_bytes(save_gray(binary_to_gray(binary)))
    (out_dir / f"{stem}_thinned.pgm").write_bytes(save_gray(binary_to_gray(thinned)))
    if args.debug_pbm:
        (out_dir / f"{stem}_binary.pbm").write_text(dump_pbm(binary))
        (out_dir / f"{stem}_thinned.pbm").write_text(dump_pbm(thinned))
    degenerate = " (degenerate histogram)" if otsu.degenerate else ""
    print(f"otsu threshold {otsu.threshold}{degenerate}, slant {slant_note}")
    return 0


def _cmd_segment(args) -> int:
    gray = _load_input(args)
    cfg = _pipeline_config(args)
    model = load_model(Path(args.model).read_bytes()) if args.model else None
    seg = segment_word(gray, model, cfg)
    out = Path(args.out) if args.out else Path(args.input).with_suffix(".cuts")
    out.write_text(cuts_line(seg.result) + "\n")
    if args.overlay:
        Path(args.overlay).write_bytes(save_gray(overlay_image(gray, seg, cfg)))
    kept = len(seg.result.cut_columns)
    print(f"cuts: {cuts_line(seg.result) or '(none)'}")
    print(f"candidates: {len(seg.audit)} merged, {kept} accepted")
    print(f"wrote {out}")
    return 0


def _cmd_build_train(args) -> int:
    records = load_manifest(args.manifest)
    cfg = _pipeline_config(args)
    window = WindowConfig(args.window_width, args.window_height)
    tf = build_training_file(records, cfg, window, match_tolerance=args.match_tolerance)
    Path(args.out).write_bytes(save_training_file(tf))
    positive = sum(p.label for p in tf.points)
    print(f"patterns: {len(tf.points)} from {tf.source_word_count} words "
          f"({positive} correct, {len(tf.points) - positive} incorrect)")
    print(f"wrote {args.out}")
    return 0


def _cmd_train(args) -> int:
    tf = load_training_file(Path(args.training_file).read_bytes())
    cfg = TrainingConfig(
        learning_rate=args.lr,
        momentum=args.momentum,
        epochs=args.epochs,
        seed=args.seed,
        shuffle=not args.no_shuffle,
    )
    model = init_model(tf.window_cfg.input_size, args.hidden, args.seed, tf.window_cfg)
    trained, history = train(model, tf.points, cfg)
    Path(args.out).write_bytes(save_model(trained))
    loss_path = Path(args.out).with_suffix(Path(args.out).suffix + ".loss")
    loss_path.write_text("".join(f"{i}\t{mse!r}\n" for i, mse in enumerate(history)))
    print(f"trained on {len(tf.points)} patterns, final epoch mse {history[-1]:.6f}")
    print(f"wrote {args.out} and {loss_path}")
    return 0


def _cmd_evaluate(args) -> int:
    records = load_manifest(args.manifest)
    cfg = _pipeline_config(args)
    model = load_model(Path(args.model).read_bytes()) if args.model else None
    report = evaluate(records, model, cfg, workers=args.workers)
    Path(args.report).write_text(report.to_kv_text())
    print(report.to_table(), end="")
    print(f"wrote {args.report}")
    return 0


def _cmd_synth(args) -> int:
    glyphs = glyph_library(args.glyphset)
    records = synthesize_corpus(
        glyphs, args.words, args.out_dir, args.seed,
        gap=args.gap, overlap=args.overlap, junctions=args.junctions,
    )
    print(f"wrote {len(records)} words and manifest.tsv to {args.out_dir}")
    return 0


def _cmd_inspect_model(args) -> int:
    model = load_model(Path(args.model).read_bytes())
    window = model.window_cfg
    print(f"layers: {model.input_size} -> {model.hidden_size} -> {model.output_size}")
    if window:
        print(f"window: {window.window_width} x {window.normalized_height}")
    else:
        print("window: none")
    params = model.input_size * model.hidden_size + 2 * model.hidden_size + 1
    print(f"parameters: {params}")
    for name, arr in (("weights_ih", model.weights_ih), ("bias_h", model.bias_h),
                      ("weights_ho", model.weights_ho)):
        print(f"{name}: min {arr.min():.6f}, max {arr.max():.6f}")
    print(f"bias_o: {model.bias_o:.6f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cursiveseg", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub = subs.add_parser("preprocess", help="binarize, deslant and thin one image")
    sub.add_argument("--input", required=True)
    sub.add_argument("--output-dir", required=True)
    sub.add_argument("--invert", action="store_true", help="source is light on dark")
    sub.add_argument("--no-deslant", action="store_true")
    sub.add_argument("--debug-pbm", action="store_true", help="also dump plain-text bitmaps")
    sub.set_defaults(func=_cmd_preprocess)

    sub = subs.add_parser("segment", help="cut one word image")
    sub.add_argument("--input", required=True)
    sub.add_argument("--model", help="trained validator model")
    sub.add_argument("--out", help="cuts sidecar path (default: input with .cuts)")
    sub.add_argument("--overlay", help="write an overlay PGM here")
    sub.add_argument("--invert", action="store_true")
    _add_pipeline_flags(sub)
    sub.set_defaults(func=_cmd_segment)

    sub = subs.add_parser("build-train", help="label geometric candidates of a corpus")
    sub.add_argument("--manifest", required=True)
    sub.add_argument("--out", required=True)
    _add_pipeline_flags(sub)
    sub.set_defaults(func=_cmd_build_train)

    sub = subs.add_parser("train", help="train the cut validator")
    sub.add_argument("--training-file", required=True)
    sub.add_argument("--out", required=True)
    sub.add_argument("--hidden", type=int, default=28)
    sub.add_argument("--epochs", type=int, default=315)
    sub.add_argument("--lr", type=float, default=0.1)
    sub.add_argument("--momentum", type=float, default=0.3)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--no-shuffle", action="store_true")
    sub.set_defaults(func=_cmd_train)

    sub = subs.add_parser("evaluate", help="score a corpus against its manifest")
    sub.add_argument("--manifest", required=True)
    sub.add_argument("--report", required=True)
    sub.add_argument("--model")
    sub.add_argument("--workers", type=int, default=1)
    _add_pipeline_flags(sub)
    sub.set_defaults(func=_cmd_evaluate)

    sub = subs.add_parser("synth", help="generate a synthetic corpus")
    sub.add_argument("--out-dir", required=True)
    sub.add_argument("--words", type=int, required=True)
    sub.add_argument("--glyphset", default="separable", choices=["separable", "mixed"])
    sub.add_argument("--gap", type=int, default=2)
    sub.add_argument("--overlap", type=int, default=0)
    sub.add_argument("--junctions", default="fixed", choices=["fixed", "random"],
                     help="fixed uses --gap/--overlap; random mixes styles per word")
    sub.add_argument("--seed", type=int, default=0)
    sub.set_defaults(func=_cmd_synth)

    sub = subs.add_parser("inspect-model", help="describe a model file")
    sub.add_argument("--model", required=True)
    sub.set_defaults(func=_cmd_inspect_model)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    _print_config(args)
    try:
        return args.func(args)
    except (DecodeError, ManifestError, ModelFormatError, ConfigurationError,
            TrainingError, FileNotFoundError, IsADirectoryError, NotADirectoryError,
            PermissionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - anything else is an internal bug
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
