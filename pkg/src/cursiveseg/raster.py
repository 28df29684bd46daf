"""Image containers, netpbm codecs, and bi-level preprocessing.

Conventions used throughout the package: grayscale pixels are uint8 with
0 = black ink on 255 = white paper; binary images store 1 = foreground
ink, 0 = background. Arrays are row-major with row 0 at the top.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "DecodeError",
    "GrayImage",
    "BinaryImage",
    "OtsuResult",
    "load_gray",
    "save_gray",
    "dump_pbm",
    "histogram256",
    "otsu_threshold",
    "binarize",
    "invert_gray",
    "binary_to_gray",
    "shear_row_shifts",
    "shear",
    "estimate_slant",
    "thin",
]


class DecodeError(ValueError):
    """Raised when a netpbm byte stream cannot be decoded."""


def _frozen_2d(pixels, max_value, what):
    arr = np.asarray(pixels)
    if arr.dtype == bool:
        arr = arr.astype(np.uint8)
    if not np.issubdtype(arr.dtype, np.integer):
        raise ValueError(f"{what} pixels must be integers, got {arr.dtype}")
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{what} needs a 2-d array with nonzero dimensions")
    if arr.min() < 0 or arr.max() > max_value:
        raise ValueError(f"{what} pixel values must lie in 0..{max_value}")
    arr = arr.astype(np.uint8, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Grayscale raster, uint8, 0 = ink through 255 = paper."""

    pixels: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "pixels", _frozen_2d(self.pixels, 255, "GrayImage"))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other):
        return isinstance(other, GrayImage) and np.array_equal(self.pixels, other.pixels)


@dataclass(frozen=True, eq=False)
class BinaryImage:
    """Bi-level raster, 1 = foreground ink, 0 = background."""

    pixels: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "pixels", _frozen_2d(self.pixels, 1, "BinaryImage"))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def ink_count(self) -> int:
        return int(self.pixels.sum())

    def __eq__(self, other):
        return isinstance(other, BinaryImage) and np.array_equal(self.pixels, other.pixels)


# ---------------------------------------------------------------------------
# netpbm codecs

_WS = b" \t\n\r\x0b\x0c"


def _skip_separators(data: bytes, pos: int) -> tuple[int, int]:
    # Whitespace and '#' comments count as separators between header tokens.
    skipped = 0
    while pos < len(data):
        byte = data[pos : pos + 1]
        if byte in (b"\t", b"\n", b"\r", b" ", b"\x0b", b"\x0c"):
            pos += 1
            skipped += 1
        elif byte == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            skipped += 1
        else:
            break
    return pos, skipped


def load_gray(data: bytes) -> GrayImage:
    """Decode a binary PGM (P5) stream with maxval 255.

    Raises DecodeError naming the offending field or byte offset for
    malformed headers, unsupported maxval, truncated or trailing rasters.
    """
    if data[:2] != b"P5":
        raise DecodeError("expected 'P5' magic at offset 0")
    pos = 2
    fields = {}
    for name in ("width", "height", "maxval"):
        pos, skipped = _skip_separators(data, pos)
        if skipped == 0:
            raise DecodeError(f"missing separator before {name} at offset {pos}")
        start = pos
        while pos < len(data) and data[pos : pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise DecodeError(f"invalid {name} token at offset {start}")
        fields[name] = int(data[start:pos])
    if pos >= len(data) or data[pos : pos + 1] not in (b"\t", b"\n", b"\r", b" ", b"\x0b", b"\x0c"):
        raise DecodeError(f"missing raster separator at offset {pos}")
    pos += 1
    width, height, maxval = fields["width"], fields["height"], fields["maxval"]
    if width < 1 or height < 1:
        raise DecodeError(f"bad dimensions {width}x{height} in header")
    if maxval != 255:
        raise DecodeError(f"unsupported maxval {maxval}, only 255 is accepted")
    need = width * height
    have = len(data) - pos
    if have < need:
        raise DecodeError(f"raster truncated at offset {len(data)}: need {need} bytes, have {have}")
    if have > need:
        raise DecodeError(f"{have - need} trailing bytes after raster at offset {pos + need}")
    pixels = np.frombuffer(data, np.uint8, count=need, offset=pos).reshape(height, width)
    return GrayImage(pixels)


def save_gray(image: GrayImage) -> bytes:
    """Encode as canonical binary PGM: 'P5\\n{w} {h}\\n255\\n' + raster."""
    header = f"P5\n{image.width} {image.height}\n255\n".encode("ascii")
    return header + image.pixels.tobytes()


def dump_pbm(image: BinaryImage) -> str:
    """Plain-text bitmap (P1) dump for debugging, 1 = ink, lines <= 70 chars."""
    lines = ["P1", f"{image.width} {image.height}"]
    for row in image.pixels:
        bits = "".join("1" if v else "0" for v in row)
        lines.extend(bits[i : i + 70] for i in range(0, len(bits), 70))
    return "\n".join(lines) + "\n"


def invert_gray(image: GrayImage) -> GrayImage:
    """Flip polarity for light-on-dark sources."""
    return GrayImage(255 - image.pixels)


def binary_to_gray(image: BinaryImage) -> GrayImage:
    """Render ink as black (0) on white (255), e.g. for PGM output."""
    return GrayImage(np.where(image.pixels > 0, 0, 255).astype(np.uint8))


# ---------------------------------------------------------------------------
# global thresholding

def histogram256(image: GrayImage) -> np.ndarray:
    """256-bin intensity histogram; counts sum to width*height."""
    return np.bincount(image.pixels.ravel(), minlength=256).astype(np.int64)


class OtsuResult(NamedTuple):
    threshold: int
    degenerate: bool


def otsu_threshold(image: GrayImage) -> OtsuResult:
    """Threshold maximizing the between-class variance of the histogram.

    Pixels at or below the returned level count as ink. The argmax is
    evaluated with exact integer arithmetic (the variance ratio is
    compared cross-multiplied), so ties are resolved to the smallest
    threshold without float noise. A single-level image cannot be split;
    it is flagged degenerate and its own level is returned.
    """
    counts = histogram256(image)
    occupied = np.nonzero(counts)[0]
    if len(occupied) == 1:
        return OtsuResult(int(occupied[0]), True)
    total = int(counts.sum())
    total_first_moment = int((np.arange(256, dtype=np.int64) * counts).sum())
    best_t, best_num, best_den = 0, -1, 1
    c0 = 0
    s0 = 0
    for t in range(256):
        c0 += int(counts[t])
        s0 += t * int(counts[t])
        c1 = total - c0
        if c0 == 0 or c1 == 0:
            continue
        s1 = total_first_moment - s0
        # sigma_b(t) proportional to (s0*c1 - s1*c0)^2 / (c0*c1)
        num = (s0 * c1 - s1 * c0) ** 2
        den = c0 * c1
        if num * best_den > best_num * den:
            best_t, best_num, best_den = t, num, den
    return OtsuResult(best_t, False)


def binarize(image: GrayImage, threshold: int) -> BinaryImage:
    """Mark pixels at or below the threshold as ink."""
    if not 0 <= threshold <= 255:
        raise ValueError(f"threshold {threshold} outside 0..255")
    return BinaryImage((image.pixels <= threshold).astype(np.uint8))


# ---------------------------------------------------------------------------
# slant correction

def shear_row_shifts(height: int, angle_degrees: float) -> np.ndarray:
    """Per-row horizontal shifts for a shear anchored at the bottom row.

    Row y moves by round((height-1-y) * tan(angle)), rounding half up;
    the bottom row never moves. Since source x is integral, rounding the
    per-row offset equals rounding per pixel.
    """
    offsets = (height - 1 - np.arange(height)) * math.tan(math.radians(angle_degrees))
    return np.floor(offsets + 0.5).astype(np.int64)


def shear(image: BinaryImage, angle_degrees: float) -> BinaryImage:
    """Horizontal shear about the bottom row, canvas widened to fit.

    The canvas grows by the full shift span regardless of content, so the
    result for angle 0 is the identical image.
    """
    if not -45.0 <= angle_degrees <= 45.0:
        raise ValueError(f"shear angle {angle_degrees} outside -45..45 degrees")
    shifts = shear_row_shifts(image.height, angle_degrees)
    offset = -int(shifts.min())
    out_width = image.width + int(shifts.max()) - int(shifts.min())
    out = np.zeros((image.height, out_width), np.uint8)
    for y in range(image.height):
        x0 = int(shifts[y]) + offset
        out[y, x0 : x0 + image.width] = image.pixels[y]
    return BinaryImage(out)


def estimate_slant(image: BinaryImage) -> int:
    """Corrective shear angle in degrees, searched exhaustively.

    Scores every integer angle in -45..45 by the number of all-blank
    columns after shearing, and returns the argmax. Ties go to the
    smallest absolute angle, then to the negative one. A blank image has
    no slant evidence and yields 0.
    """
    ys, xs = np.nonzero(image.pixels)
    if len(xs) == 0:
        return 0
    best_angle, best_score = 0, -1
    for magnitude in range(46):
        for angle in (0,) if magnitude == 0 else (-magnitude, magnitude):
            shifts = shear_row_shifts(image.height, angle)
            canvas = image.width + int(shifts.max()) - int(shifts.min())
            occupied = len(np.unique(xs + shifts[ys]))
            score = canvas - occupied
            if score > best_score:
                best_angle, best_score = angle, score
    return best_angle


# ---------------------------------------------------------------------------
# thinning

def _neighbor_views(padded):
    # P2..P9 clockwise from north, for every pixel of the unpadded image.
    return (
        padded[:-2, 1:-1],  # P2 north
        padded[:-2, 2:],    # P3 north-east
        padded[1:-1, 2:],   # P4 east
        padded[2:, 2:],     # P5 south-east
        padded[2:, 1:-1],   # P6 south
        padded[2:, :-2],    # P7 south-west
        padded[1:-1, :-2],  # P8 west
        padded[:-2, :-2],   # P9 north-west
    )


def thin(image: BinaryImage) -> BinaryImage:
    """Skeletonize by the classic two-subiteration parallel deletion.

    Each full iteration applies two sub-passes. A foreground pixel is
    deleted when it has 2..6 foreground neighbors, exactly one 0->1
    transition around its 8-neighborhood ring, and its north/east/south
    (first sub-pass) or north/west plus east/west (second sub-pass)
    products are zero. Iterates to a fixed point; deletions only, so the
    result is a subset of the input and a second call is a no-op.
    """
    img = np.array(image.pixels, dtype=np.uint8)
    while True:
        changed = False
        for second_pass in (False, True):
            padded = np.pad(img, 1)
            p2, p3, p4, p5, p6, p7, p8, p9 = _neighbor_views(padded)
            ring = (p2, p3, p4, p5, p6, p7, p8, p9)
            b = np.zeros(img.shape, np.int16)
            for n in ring:
                b += n
            a = np.zeros(img.shape, np.int16)
            for cur, nxt in zip(ring, ring[1:] + ring[:1]):
                a += (cur == 0) & (nxt == 1)
            if second_pass:
                corner = (p2 * p4 * p8 == 0) & (p2 * p6 * p8 == 0)
            else:
                corner = (p2 * p4 * p6 == 0) & (p4 * p6 * p8 == 0)
            deletable = (img == 1) & (b >= 2) & (b <= 6) & (a == 1) & corner
            if deletable.any():
                img[deletable] = 0
                changed = True
        if not changed:
            return BinaryImage(img)
