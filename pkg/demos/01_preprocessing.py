"""
Preprocessing a word image
==========================

Walks one synthetic word through the three preprocessing stages:
global thresholding, slant correction, and skeletonisation. Every
stage writes a PGM you can open in any image viewer, plus a plain
text bitmap for a quick look in the terminal.

Run from the repository root:

    python demos/01_preprocessing.py
"""

from pathlib import Path

import numpy as np

from cursiveseg import (
    binarize,
    binary_to_gray,
    dump_pbm,
    estimate_slant,
    mixed_glyphs,
    otsu_threshold,
    save_gray,
    shear,
    synthesize_word,
    thin,
)

out_dir = Path(__file__).resolve().parent / "demo_output"
out_dir.mkdir(exist_ok=True)

# ---------------------------------------------------------------------------
# Build a word and slant it artificially.
#
# The synthesizer emits a clean binary image, so we slant it by 12 degrees
# and convert to grayscale to give the pipeline something to undo. The
# word deliberately contains tall vertical stems: the slant estimator
# judges poses by blank columns, which only long strokes constrain.

glyphs = mixed_glyphs()
word, truth = synthesize_word(glyphs, ["stem", "dee", "stem", "tallring"], gap=3, seed=7)
slanted = shear(word, 12.0)
gray = binary_to_gray(slanted)
(out_dir / "input.pgm").write_bytes(save_gray(gray))
print(f"input: {gray.width}x{gray.height}, junction truth at columns {truth}")

# ---------------------------------------------------------------------------
# Stage 1: global threshold.
#
# The threshold maximises between-class variance over the histogram.
# Pixels at or below it are ink. A constant image would set the
# degenerate flag instead of failing.

otsu = otsu_threshold(gray)
print(f"otsu threshold: {otsu.threshold} (degenerate: {otsu.degenerate})")
binary = binarize(gray, otsu.threshold)
(out_dir / "binary.pgm").write_bytes(save_gray(binary_to_gray(binary)))

# ---------------------------------------------------------------------------
# Stage 2: slant correction.
#
# The estimator shears the image over every angle from -45 to +45 degrees
# and keeps the one with the most blank columns. The recovered angle
# should be the negative of the 12 degrees applied above.

angle = estimate_slant(binary)
print(f"estimated slant: {angle} degrees")
deslanted = shear(binary, angle)
(out_dir / "deslanted.pgm").write_bytes(save_gray(binary_to_gray(deslanted)))

# ---------------------------------------------------------------------------
# Stage 3: thinning.
#
# Iterative boundary deletion until only a one-pixel skeleton remains.
# Ink count drops sharply; connectivity does not change.

thinned = thin(deslanted)
print(f"ink pixels: {deslanted.ink_count} -> {thinned.ink_count} after thinning")
(out_dir / "thinned.pgm").write_bytes(save_gray(binary_to_gray(thinned)))
(out_dir / "thinned.pbm").write_text(dump_pbm(thinned))

print(f"wrote input/binary/deslanted/thinned images to {out_dir}")
