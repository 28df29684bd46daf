"""
From column profile to cut columns
==================================

Shows the geometric segmenter's reasoning on one word: the vertical
projection profile, the candidate columns it admits, how nearby
candidates merge, and which survive the margin filter. Ends with the
full pipeline call and an overlay image of the final cuts.

Run from the repository root:

    python demos/02_segmentation.py
"""

from pathlib import Path

from cursiveseg import (
    PipelineConfig,
    binary_to_gray,
    candidate_columns,
    column_profile,
    merge_runs,
    overlay_image,
    save_gray,
    segment_word,
    separable_glyphs,
    synthesize_word,
    thin,
)

out_dir = Path(__file__).resolve().parent / "demo_output"
out_dir.mkdir(exist_ok=True)

word, truth = synthesize_word(
    separable_glyphs(), ["dee", "ring", "cee", "tallring"], gap=2, seed=3
)
print(f"word is {word.width} columns wide; true junctions at {truth}")

# ---------------------------------------------------------------------------
# The vertical projection counts ink per column on the *thinned* image.
# Columns crossed by at most one stroke (count <= 1) become candidates;
# a printed ruler makes the gaps easy to spot.

skeleton = thin(word)
profile = column_profile(skeleton)
cands = candidate_columns(profile)
ruler = "".join("." if c in set(cands) else "#" for c in range(word.width))
print(f"profile counts:   {' '.join(str(int(v)) for v in profile.counts)}")
print(f"candidate ruler:  {ruler}   (. = candidate column)")

# ---------------------------------------------------------------------------
# Candidates come in runs: a 2-column gap produces 2 or 3 of them in a
# row. Runs closer than the merge threshold (default 3) collapse to
# their rounded mean, so each junction keeps exactly one column.

for run in merge_runs(cands):
    span = f"{run.first}..{run.last}" if run.first != run.last else str(run.first)
    print(f"run {span:>7} -> column {run.column}")

# ---------------------------------------------------------------------------
# The pipeline does all of the above plus the margin filter, which
# drops merged columns that sit before the first ink or after the last.
# The audit trail records every candidate with its verdict.

gray = binary_to_gray(word)
seg = segment_word(gray, None, PipelineConfig(deslant=False))
print(f"final cuts: {seg.result.cut_columns} (truth {truth})")
for a in seg.audit:
    print(f"  column {a.column:>3} profile={a.profile_count} verdict={a.verdict}")

(out_dir / "segmented.pgm").write_bytes(
    save_gray(overlay_image(gray, seg, PipelineConfig(deslant=False)))
)
print(f"wrote overlay to {out_dir / 'segmented.pgm'}")
