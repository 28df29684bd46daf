"""
Training the cut validator
==========================

The geometric segmenter happily cuts through ligature-like connectors,
producing spurious cuts. This script builds a labeled pattern set from
a synthetic corpus, trains the validating perceptron on it, and plots
the loss curve as plain text.

Run from the repository root:

    python demos/03_training.py
"""

from pathlib import Path

from cursiveseg import (
    PipelineConfig,
    TrainingConfig,
    WindowConfig,
    build_training_file,
    init_model,
    mixed_glyphs,
    save_model,
    save_training_file,
    synthesize_corpus,
    train,
)

out_dir = Path(__file__).resolve().parent / "demo_output"
out_dir.mkdir(exist_ok=True)

# ---------------------------------------------------------------------------
# A corpus with varied junctions: gaps, touching joins, and overlaps.
# Overlap junctions are where pure projection over-segments.

corpus_dir = out_dir / "train_corpus"
records = synthesize_corpus(
    mixed_glyphs(), 200, corpus_dir, seed=17, junctions="random", id_prefix="demo"
)
print(f"synthesized {len(records)} words into {corpus_dir}")

# ---------------------------------------------------------------------------
# Label every geometric cut against the ground truth: a cut within 2
# columns of a true junction is a positive pattern, anything else a
# negative. Features are binary windows from the thinned image,
# 9 columns wide, height normalized to 29 rows (261 inputs).

cfg = PipelineConfig(deslant=False)
window = WindowConfig()
tf = build_training_file(records, cfg, window, match_tolerance=2)
positives = sum(p.label for p in tf.points)
print(
    f"{len(tf.points)} patterns from {tf.source_word_count} words: "
    f"{positives} correct cuts, {len(tf.points) - positives} spurious"
)
(out_dir / "patterns.bin").write_bytes(save_training_file(tf))

# ---------------------------------------------------------------------------
# Train: one hidden layer of 28 logistic units, per-sample updates with
# learning rate 0.1 and momentum 0.3. A few dozen epochs are enough on
# a corpus this small; the library default is 315.

model = init_model(window.input_size, 28, seed=0, window_cfg=window)
trained, history = train(model, tf.points, TrainingConfig(epochs=40, seed=0))
(out_dir / "validator.bin").write_bytes(save_model(trained))

# text loss curve, one bar per epoch
peak = max(history)
for epoch, mse in enumerate(history):
    if epoch % 2:
        continue
    bar = "*" * max(1, round(40 * mse / peak))
    print(f"epoch {epoch:>3}  mse {mse:.4f}  {bar}")

print(f"wrote {out_dir / 'patterns.bin'} and {out_dir / 'validator.bin'}")
