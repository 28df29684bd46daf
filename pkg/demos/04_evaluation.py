"""
Scoring a corpus, with and without the validator
================================================

Evaluates the pipeline twice on a held-out corpus: geometry only, and
geometry plus the validator trained in demo 03 (rebuilt here so this
script stands alone). The comparison shows the validator trading a
little correct rate for a large drop in over-segmentation.

Run from the repository root:

    python demos/04_evaluation.py
"""

from pathlib import Path

from cursiveseg import (
    PipelineConfig,
    TrainingConfig,
    WindowConfig,
    build_training_file,
    evaluate,
    init_model,
    mixed_glyphs,
    synthesize_corpus,
    train,
)

out_dir = Path(__file__).resolve().parent / "demo_output"
out_dir.mkdir(exist_ok=True)

glyphs = mixed_glyphs()
cfg = PipelineConfig(deslant=False)

# disjoint corpora: train on one, score the other
train_records = synthesize_corpus(
    glyphs, 300, out_dir / "eval_train", seed=401, junctions="random", id_prefix="tr"
)
held_out = synthesize_corpus(
    glyphs, 150, out_dir / "eval_held", seed=402, junctions="random", id_prefix="ev"
)

# ---------------------------------------------------------------------------
# Baseline: projection profile, merging, margin filter. No model.

baseline = evaluate(held_out, None, cfg)
print("geometry only")
print(baseline.to_table())

# ---------------------------------------------------------------------------
# With the validator: same pipeline, but every merged candidate must
# also win the perceptron's vote.

window = WindowConfig()
tf = build_training_file(train_records, cfg, window, match_tolerance=2)
model = init_model(window.input_size, 28, seed=0, window_cfg=window)
trained, _ = train(model, tf.points, TrainingConfig(epochs=30, seed=0))

validated = evaluate(held_out, trained, cfg)
print("with validator")
print(validated.to_table())

# ---------------------------------------------------------------------------
# The machine-readable report omits timing, so repeated runs with the
# same seeds are byte-identical. Handy for regression checks.

report_path = out_dir / "report.txt"
report_path.write_text(validated.to_kv_text())
print(
    f"over-segmentation {baseline.over_rate:.2f}% -> {validated.over_rate:.2f}%, "
    f"correct {baseline.correct_rate:.2f}% -> {validated.correct_rate:.2f}%"
)
print(f"wrote {report_path}")
