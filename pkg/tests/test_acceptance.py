"""Acceptance suite: nine pinned criteria covering the whole pipeline.

Each test prints one PASS line with its measured numbers (visible under
pytest -s); a failing criterion fails its test, there is no soft-pass.
Random seeds and expected values are frozen; independent reference
implementations live in oracles.py.
"""

import struct
import time
from fractions import Fraction

import numpy as np
import pytest

from cursiveseg import (
    BinaryImage,
    GrayImage,
    MlpModel,
    PipelineConfig,
    TrainingConfig,
    WindowConfig,
    WordRecord,
    binary_to_gray,
    build_training_file,
    classify_point,
    evaluate,
    forward,
    histogram256,
    init_model,
    loss_gradients,
    mixed_glyphs,
    otsu_threshold,
    save_gray,
    segment_word,
    separable_glyphs,
    synthesize_corpus,
    synthesize_word,
    thin,
    train,
    write_manifest,
)
from cursiveseg.mlp import LabeledPoint

from oracles import blob_image, count_components_8, otsu_all_variances

NO_DESLANT = PipelineConfig(deslant=False)


# --------------------------------------------------------------- criterion 1

def test_criterion_1_otsu_matches_exhaustive_search():
    """200 seeded random images: chosen threshold attains the exact
    maximum between-class variance, verified in rational arithmetic."""
    started = time.perf_counter()
    rng = np.random.default_rng(1001)
    for i in range(200):
        h = int(rng.integers(2, 24))
        w = int(rng.integers(2, 24))
        if i % 3 == 0:
            # bimodal: two narrow intensity bands, the classic use case
            lo, hi = sorted(rng.integers(0, 256, size=2).tolist())
            pix = np.where(
                rng.random((h, w)) < 0.5,
                rng.integers(lo, min(lo + 20, 256), size=(h, w)),
                rng.integers(hi, min(hi + 20, 256), size=(h, w)),
            ).astype(np.uint8)
        else:
            pix = rng.integers(0, 256, size=(h, w), dtype=np.uint8)
        img = GrayImage(pix)
        t, _ = otsu_threshold(img)
        hist = [int(v) for v in histogram256(img)]
        variances = otsu_all_variances(hist)
        assert variances[t] == max(variances), f"image {i}: t={t} not optimal"
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0, f"took {elapsed:.2f}s, budget 5s"
    print(f"PASS criterion 1: 200 images exact-optimal in {elapsed:.2f}s")


# --------------------------------------------------------------- criterion 2

def test_criterion_2_thinning_properties():
    """50 seeded blob images: deletion-only, idempotent, and 8-connected
    component count preserved against a flood-fill oracle."""
    started = time.perf_counter()
    for seed in range(50):
        img = blob_image(seed)
        before = count_components_8(img)
        thinned = thin(BinaryImage(img))
        assert not np.any(thinned.pixels & ~img), f"seed {seed}: pixel added"
        assert thin(thinned) == thinned, f"seed {seed}: not idempotent"
        after = count_components_8(thinned.pixels)
        assert after == before, f"seed {seed}: components {before} -> {after}"
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0, f"took {elapsed:.2f}s, budget 10s"
    print(f"PASS criterion 2: 50 blob images in {elapsed:.2f}s")


# --------------------------------------------------------------- criterion 3

def test_criterion_3_gradients_match_finite_differences():
    """10 random 5-3-1 nets: every analytic partial within 1e-4 relative
    error of the central difference at h=1e-5."""
    started = time.perf_counter()
    h = 1e-5
    worst = 0.0
    for seed in range(10):
        rng = np.random.default_rng(seed + 2000)
        model = init_model(5, 3, seed=seed + 2000)
        x = rng.normal(size=5)
        target = float(rng.integers(0, 2))
        g = loss_gradients(model, x, target)

        def loss_at(ih, bh, ho, bo) -> float:
            probe = MlpModel(5, 3, ih, bh, ho, bo)
            return 0.5 * (forward(probe, x) - target) ** 2

        def check(analytic: float, numeric: float):
            nonlocal worst
            # near-zero derivatives are judged on absolute scale
            err = abs(analytic - numeric) / max(1.0, abs(numeric))
            worst = max(worst, err)
            assert err < 1e-4, f"seed {seed}: {analytic} vs {numeric}"

        for (i, j), val in np.ndenumerate(g.weights_ih):
            ih = np.array(model.weights_ih)
            ih[i, j] += h
            up = loss_at(ih, model.bias_h, model.weights_ho, model.bias_o)
            ih[i, j] -= 2 * h
            down = loss_at(ih, model.bias_h, model.weights_ho, model.bias_o)
            check(val, (up - down) / (2 * h))
        for j, val in enumerate(g.bias_h):
            bh = np.array(model.bias_h)
            bh[j] += h
            up = loss_at(model.weights_ih, bh, model.weights_ho, model.bias_o)
            bh[j] -= 2 * h
            down = loss_at(model.weights_ih, bh, model.weights_ho, model.bias_o)
            check(val, (up - down) / (2 * h))
        for j, val in enumerate(g.weights_ho):
            ho = np.array(model.weights_ho)
            ho[j] += h
            up = loss_at(model.weights_ih, model.bias_h, ho, model.bias_o)
            ho[j] -= 2 * h
            down = loss_at(model.weights_ih, model.bias_h, ho, model.bias_o)
            check(val, (up - down) / (2 * h))
        up = loss_at(model.weights_ih, model.bias_h, model.weights_ho, model.bias_o + h)
        down = loss_at(model.weights_ih, model.bias_h, model.weights_ho, model.bias_o - h)
        check(g.bias_o, (up - down) / (2 * h))
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0, f"took {elapsed:.2f}s, budget 5s"
    print(f"PASS criterion 3: worst relative error {worst:.2e} in {elapsed:.2f}s")


# --------------------------------------------------------------- criterion 4

def test_criterion_4_xor_converges():
    """2-4-1 net, lr 0.5, momentum 0.3, seed 0: MSE drops below 0.05
    within 20000 epochs and all four points classify at threshold 0.5."""
    started = time.perf_counter()
    points = [
        LabeledPoint(np.array([0.0, 0.0]), 0, "xor00", 0),
        LabeledPoint(np.array([0.0, 1.0]), 1, "xor01", 1),
        LabeledPoint(np.array([1.0, 0.0]), 1, "xor10", 2),
        LabeledPoint(np.array([1.0, 1.0]), 0, "xor11", 3),
    ]
    model = init_model(2, 4, seed=0)
    cfg = TrainingConfig(learning_rate=0.5, momentum=0.3, epochs=20000, seed=0)
    trained, history = train(model, points, cfg)
    below = next((i for i, mse in enumerate(history) if mse < 0.05), None)
    assert below is not None, f"never reached MSE < 0.05 (final {history[-1]:.4f})"
    for p in points:
        got = classify_point(trained, p.features).correct
        assert got == bool(p.label), f"{p.word_id} misclassified"
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0, f"took {elapsed:.2f}s, budget 10s"
    print(
        f"PASS criterion 4: MSE<0.05 at epoch {below}, final {history[-1]:.4f}, "
        f"{elapsed:.2f}s"
    )


# --------------------------------------------------------------- criterion 5

def _separable_corpus(tmp_path) -> list[WordRecord]:
    # 100 words, gaps cycling 2/3/4 columns, glyphs cycling the whole set
    glyphs = separable_glyphs()
    names = list(glyphs.names())
    rng = np.random.default_rng(4242)
    records = []
    for i in range(100):
        gap = (2, 3, 4)[i % 3]
        k = int(rng.integers(3, 7))
        seq = [names[(i + j) % len(names)] for j in range(k)]
        img, truth = synthesize_word(glyphs, seq, gap=gap, seed=int(rng.integers(2**31)))
        path = tmp_path / f"sep_{i:04d}.pgm"
        path.write_bytes(save_gray(binary_to_gray(img)))
        records.append(WordRecord(f"sep_{i:04d}", path, truth))
    return records


def test_criterion_5_separable_corpus_is_perfect(tmp_path):
    """100 separable words (every junction >= 2 blank columns): geometry
    alone scores correct 100%, miss 0% at tolerance 2."""
    started = time.perf_counter()
    records = _separable_corpus(tmp_path)
    report = evaluate(records, None, NO_DESLANT)
    assert report.correct_rate == 100.0, f"correct {report.correct_rate:.2f}%"
    assert report.miss_rate == 0.0, f"miss {report.miss_rate:.2f}%"
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0, f"took {elapsed:.2f}s, budget 10s"
    print(
        f"PASS criterion 5: correct {report.correct_rate:.2f}%, miss "
        f"{report.miss_rate:.2f}%, over {report.over_rate:.2f}%, {elapsed:.2f}s"
    )


# --------------------------------------------------------------- criterion 6

@pytest.fixture(scope="module")
def mixed_corpora(tmp_path_factory):
    root = tmp_path_factory.mktemp("mixed")
    glyphs = mixed_glyphs()
    training = synthesize_corpus(
        glyphs, 700, root / "train", seed=101, junctions="random", id_prefix="tr"
    )
    held_out = synthesize_corpus(
        glyphs, 300, root / "eval", seed=202, junctions="random", id_prefix="ev"
    )
    return training, held_out


def test_criterion_6_validator_reduces_over_segmentation(mixed_corpora):
    """A validator trained on 700 disjoint words strictly lowers the
    over-segmentation rate on 300 held-out words while costing fewer
    than 5 percentage points of correct rate."""
    training, held_out = mixed_corpora
    baseline = evaluate(held_out, None, NO_DESLANT)
    assert baseline.over_rate > 0.0, "baseline has nothing to improve"

    tf = build_training_file(training, NO_DESLANT, WindowConfig(), match_tolerance=2)
    labels = {p.label for p in tf.points}
    assert labels == {0, 1}, "training patterns must contain both classes"
    model = init_model(261, 28, seed=0, window_cfg=WindowConfig())
    trained, _ = train(model, tf.points, TrainingConfig(epochs=30, seed=0))

    validated = evaluate(held_out, trained, NO_DESLANT)
    drop = baseline.correct_rate - validated.correct_rate
    assert validated.over_rate < baseline.over_rate, (
        f"over rate {baseline.over_rate:.2f}% -> {validated.over_rate:.2f}%"
    )
    assert drop < 5.0, f"correct rate dropped {drop:.2f} points"
    print(
        f"PASS criterion 6: over {baseline.over_rate:.2f}% -> "
        f"{validated.over_rate:.2f}%, correct {baseline.correct_rate:.2f}% -> "
        f"{validated.correct_rate:.2f}% (drop {drop:.2f})"
    )


# --------------------------------------------------------------- criterion 7

def test_criterion_7_identical_runs_are_byte_identical(tmp_path):
    """Same flags and seeds twice: evaluation reports and trained model
    files agree byte for byte."""
    glyphs = mixed_glyphs()
    records = synthesize_corpus(glyphs, 25, tmp_path / "c", seed=33, junctions="random")

    reports = []
    models = []
    for _ in range(2):
        report = evaluate(records, None, NO_DESLANT)
        reports.append(report.to_kv_text().encode())
        tf = build_training_file(records, NO_DESLANT, WindowConfig(), match_tolerance=2)
        model = init_model(261, 8, seed=1, window_cfg=WindowConfig())
        trained, _ = train(model, tf.points, TrainingConfig(epochs=3, seed=1))
        from cursiveseg import save_model

        models.append(save_model(trained))
    assert reports[0] == reports[1], "reports differ between identical runs"
    assert models[0] == models[1], "model files differ between identical runs"
    print(
        f"PASS criterion 7: report {len(reports[0])} bytes and model "
        f"{len(models[0])} bytes reproduced exactly"
    )


# --------------------------------------------------------------- criterion 8

def test_criterion_8_word_timing(tmp_path):
    """Mean segment_word wall time at most 57 ms/word on images up to
    400x100, full pipeline (deslant on, trained validator attached)."""
    glyphs = mixed_glyphs()
    names = list(glyphs.names())
    rng = np.random.default_rng(88)

    # quick validator so the timed path includes the model
    small = synthesize_corpus(glyphs, 30, tmp_path / "t", seed=55, junctions="random")
    tf = build_training_file(small, NO_DESLANT, WindowConfig(), match_tolerance=2)
    model = init_model(261, 28, seed=0, window_cfg=WindowConfig())
    trained, _ = train(model, tf.points, TrainingConfig(epochs=5, seed=0))

    grays = []
    for i in range(20):
        k = int(rng.integers(18, 26))
        seq = [names[int(rng.integers(0, len(names)))] for _ in range(k)]
        img, _ = synthesize_word(glyphs, seq, gap=3, seed=i)
        pix = img.pixels
        assert pix.shape[1] <= 400, f"word {i} wider than 400"
        pad_rows = 100 - pix.shape[0]
        pad_cols = min(400, pix.shape[1] + 20) - pix.shape[1]
        padded = np.pad(pix, ((pad_rows // 2, pad_rows - pad_rows // 2), (0, pad_cols)))
        grays.append(binary_to_gray(BinaryImage(padded)))
        assert grays[-1].height <= 100 and grays[-1].width <= 400

    cfg = PipelineConfig()  # defaults: deslant enabled
    times = [segment_word(g, trained, cfg).elapsed_seconds for g in grays]
    mean = sum(times) / len(times)
    assert mean <= 0.057, f"mean {1000 * mean:.1f} ms exceeds 57 ms"

    # the human-readable evaluation output must carry the measured mean
    path = tmp_path / "timed.pgm"
    path.write_bytes(save_gray(grays[0]))
    seg = segment_word(grays[0], None, NO_DESLANT)
    record = WordRecord("timed", path, seg.result.cut_columns)
    table = evaluate([record], None, NO_DESLANT).to_table()
    assert "mean time" in table and "ms" in table
    print(
        f"PASS criterion 8: mean {1000 * mean:.2f} ms, max {1000 * max(times):.2f} ms "
        f"over {len(times)} words up to {max(g.width for g in grays)}x"
        f"{max(g.height for g in grays)}"
    )


# --------------------------------------------------------------- criterion 9

def test_criterion_9_rates_partition_truth(mixed_corpora):
    """correct + miss + bad always account for exactly 100% of truth
    columns (within 1e-9), with and without a validator."""
    _, held_out = mixed_corpora
    report = evaluate(held_out[:60], None, NO_DESLANT)
    total = report.correct_rate + report.miss_rate + report.bad_rate
    assert abs(total - 100.0) < 1e-9, f"rates sum to {total!r}"
    assert report.correct_count + report.miss_count + report.bad_count == report.truth_total
    print(
        f"PASS criterion 9: correct {report.correct_rate:.2f} + bad "
        f"{report.bad_rate:.2f} + miss {report.miss_rate:.2f} = {total!r}"
    )
