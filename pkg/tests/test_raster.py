"""Image I/O, thresholding, shear, and thinning."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cursiveseg import (
    BinaryImage,
    DecodeError,
    GrayImage,
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

from oracles import count_components_8, otsu_brute_force, otsu_variance, thin_scalar


def gray(rows) -> GrayImage:
    return GrayImage(np.array(rows, dtype=np.uint8))


def binary(rows) -> BinaryImage:
    return BinaryImage(np.array(rows, dtype=np.uint8))


def from_text(text: str) -> BinaryImage:
    rows = [[1 if c == "#" else 0 for c in line] for line in text.strip().splitlines()]
    return binary(rows)


# ---------------------------------------------------------------- pgm i/o

def test_load_gray_minimal():
    img = load_gray(b"P5\n2 2\n255\n\x00\x80\xff\x10")
    assert img.width == 2 and img.height == 2
    assert img.pixels[1, 1] == 0x10


def test_load_gray_comments_and_whitespace():
    img = load_gray(b"P5 # a comment\n# another\n 3\t1 \n255 \xaa\xbb\xcc")
    assert img.width == 3
    assert list(img.pixels[0]) == [0xAA, 0xBB, 0xCC]


def test_roundtrip_save_load():
    img = gray([[0, 128], [255, 7]])
    assert load_gray(save_gray(img)) == img


@pytest.mark.parametrize(
    "data,fragment",
    [
        (b"P4\n2 2\n255\n1234", "magic"),
        (b"P5\n0 2\n255\n", "dimensions"),
        (b"P5\n2 2\n64\n1234", "maxval"),
        (b"P5\n2 2\n255\n12", "truncated"),
        (b"P5\n2 2\n255\n12345", "trailing"),
        (b"P5\n2\n", "height"),
    ],
)
def test_load_gray_rejects(data, fragment):
    with pytest.raises(DecodeError) as err:
        load_gray(data)
    assert fragment in str(err.value).lower()


def test_load_gray_requires_separator_after_maxval():
    # the single whitespace byte after maxval is part of the header
    with pytest.raises(DecodeError):
        load_gray(b"P5\n2 1\n255")


@given(
    st.integers(1, 12),
    st.integers(1, 12),
    st.integers(0, 2**32 - 1),
)
@settings(max_examples=60, deadline=None)
def test_roundtrip_random(w, h, seed):
    rng = np.random.default_rng(seed)
    img = GrayImage(rng.integers(0, 256, size=(h, w), dtype=np.uint8))
    again = load_gray(save_gray(img))
    assert again == img


def test_dump_pbm_shape():
    img = binary([[1, 0, 1], [0, 1, 0]])
    text = dump_pbm(img)
    lines = text.strip().splitlines()
    assert lines[0] == "P1"
    assert lines[1] == "3 2"
    assert "101" in lines[2].replace(" ", "") + lines[-1].replace(" ", "")


def test_invert_and_binary_to_gray():
    img = gray([[0, 200]])
    assert list(invert_gray(img).pixels[0]) == [255, 55]
    b = binary([[1, 0]])
    assert list(binary_to_gray(b).pixels[0]) == [0, 255]


# ---------------------------------------------------------------- otsu

def test_histogram_counts():
    img = gray([[0, 0, 3], [3, 3, 255]])
    h = histogram256(img)
    assert h[0] == 2 and h[3] == 3 and h[255] == 1 and h.sum() == 6


def test_otsu_two_values():
    img = gray([[10] * 5 + [200] * 5])
    t, degenerate = otsu_threshold(img)
    assert not degenerate
    assert 10 <= t < 200
    hist = list(histogram256(img))
    assert otsu_variance(hist, t) == max(otsu_variance(hist, u) for u in range(256))


def test_otsu_single_level_degenerate():
    t, degenerate = otsu_threshold(gray([[42, 42], [42, 42]]))
    assert degenerate
    assert t == 42


def test_otsu_ties_take_smallest_threshold():
    # symmetric histogram: every t between the two spikes scores the same
    img = gray([[0] * 4 + [255] * 4])
    t, _ = otsu_threshold(img)
    assert t == otsu_brute_force(list(histogram256(img)))


@given(st.integers(0, 2**32 - 1), st.integers(2, 10), st.integers(2, 10))
@settings(max_examples=40, deadline=None)
def test_otsu_matches_exhaustive_search(seed, w, h):
    rng = np.random.default_rng(seed)
    img = GrayImage(rng.integers(0, 256, size=(h, w), dtype=np.uint8))
    t, _ = otsu_threshold(img)
    assert t == otsu_brute_force(list(histogram256(img)))


def test_binarize_ink_is_dark():
    img = gray([[0, 100, 101, 255]])
    b = binarize(img, 100)
    assert list(b.pixels[0]) == [1, 1, 0, 0]


# ---------------------------------------------------------------- shear

def test_shear_zero_angle_is_identity():
    img = from_text("""
.#.
.#.
.#.
""")
    assert shear(img, 0.0) == img


def test_shear_row_shifts_round_half_up():
    # tan(45) = 1 exactly: bottom row shifts 0, each row above one more
    shifts = shear_row_shifts(4, 45.0)
    assert list(shifts) == [3, 2, 1, 0]


def test_shear_single_column_becomes_diagonal():
    img = from_text("""
#
#
#
""")
    out = shear(img, 45.0)
    assert out.height == 3 and out.width == 3
    ys, xs = np.nonzero(out.pixels)
    assert sorted(zip(ys, xs)) == [(0, 2), (1, 1), (2, 0)]


def test_shear_negative_angle_mirrors():
    img = from_text("""
#
#
#
""")
    out = shear(img, -45.0)
    ys, xs = np.nonzero(out.pixels)
    assert sorted(zip(ys, xs)) == [(0, 0), (1, 1), (2, 2)]


@given(st.integers(0, 2**32 - 1), st.integers(-45, 45))
@settings(max_examples=40, deadline=None)
def test_shear_preserves_ink_count(seed, angle):
    rng = np.random.default_rng(seed)
    img = BinaryImage((rng.random((8, 8)) < 0.3).astype(np.uint8))
    assert shear(img, float(angle)).ink_count == img.ink_count


@given(st.integers(0, 2**32 - 1), st.integers(-45, 45))
@settings(max_examples=40, deadline=None)
def test_shear_keeps_rows_intact(seed, angle):
    # shear only slides rows horizontally, so per-row ink counts survive
    rng = np.random.default_rng(seed)
    img = BinaryImage((rng.random((6, 10)) < 0.4).astype(np.uint8))
    out = shear(img, float(angle))
    assert list(out.pixels.sum(axis=1)) == list(img.pixels.sum(axis=1))


# ---------------------------------------------------------------- slant

def _bars(shear_angle: float) -> BinaryImage:
    # bars span the full canvas height: a 1 degree shear then smears them
    # across an extra column, so the upright pose scores strictly best
    canvas = np.zeros((30, 40), dtype=np.uint8)
    for x in (5, 18, 31):
        canvas[:, x : x + 2] = 1
    return shear(BinaryImage(canvas), shear_angle)


def test_estimate_slant_recovers_applied_shear():
    assert estimate_slant(_bars(20.0)) == -20


def test_estimate_slant_upright_is_zero():
    assert estimate_slant(_bars(0.0)) == 0


def test_estimate_slant_all_ties_prefers_zero():
    # a 1-wide bar occupies one column at any angle, so every score ties
    img = from_text("""
#
#
#
#
""")
    assert estimate_slant(img) == 0


def test_estimate_slant_empty_image_zero():
    assert estimate_slant(binary(np.zeros((5, 5)))) == 0


def test_estimate_slant_score_is_max_blank_columns():
    # exhaustive check against directly applying each shear
    rng = np.random.default_rng(7)
    img = BinaryImage((rng.random((10, 12)) < 0.25).astype(np.uint8))
    best = estimate_slant(img)

    def blanks(angle):
        out = shear(img, float(angle))
        return out.width - len(np.unique(np.nonzero(out.pixels)[1]))

    assert blanks(best) == max(blanks(a) for a in range(-45, 46))


# ---------------------------------------------------------------- thinning

def test_thin_empty_image_unchanged():
    img = binary(np.zeros((4, 6)))
    assert thin(img) == img


def test_thin_isolated_pixel_survives():
    img = from_text("""
...
.#.
...
""")
    assert thin(img) == img


def test_thin_three_row_bar_collapses_to_line():
    img = binary(np.pad(np.ones((3, 10), dtype=np.uint8), 1))
    out = thin(img)
    assert out.ink_count <= 10
    assert count_components_8(out.pixels) == 1


def test_thin_matches_scalar_reference():
    rng = np.random.default_rng(123)
    for _ in range(10):
        img = (rng.random((12, 12)) < 0.5).astype(np.uint8)
        assert np.array_equal(thin(BinaryImage(img)).pixels, thin_scalar(img))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_thin_is_deletion_only_and_idempotent(seed):
    rng = np.random.default_rng(seed)
    img = BinaryImage((rng.random((10, 10)) < 0.45).astype(np.uint8))
    out = thin(img)
    assert not np.any(out.pixels & ~img.pixels)
    assert thin(out) == out
