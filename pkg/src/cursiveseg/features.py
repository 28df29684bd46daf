"""Fixed-size pixel windows around candidate columns."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster import BinaryImage

__all__ = ["WindowConfig", "extract_window"]


@dataclass(frozen=True)
class WindowConfig:
    """Geometry of the validator's input window (width x normalized height)."""

    window_width: int = 9
    normalized_height: int = 29

    def __post_init__(self):
        if self.window_width < 1 or self.window_width % 2 == 0:
            raise ValueError(f"window_width must be odd and positive, got {self.window_width}")
        if self.normalized_height < 1:
            raise ValueError(f"normalized_height must be positive, got {self.normalized_height}")

    @property
    def input_size(self) -> int:
        return self.window_width * self.normalized_height


def extract_window(image: BinaryImage, column: int, cfg: WindowConfig = WindowConfig()) -> np.ndarray:
    """Pixel window centered on a column, as a flat {0.0, 1.0} vector.

    Takes window_width columns around the given one (zero padding where
    the window leaves the image) and resamples the full image height to
    normalized_height rows by nearest-neighbor picks, so values stay
    exactly binary. Layout is row-major: normalized_height rows of
    window_width values. When the image is already normalized_height tall
    the rows pass through unchanged.
    """
    if not 0 <= column < image.width:
        raise ValueError(f"column {column} outside image of width {image.width}")
    half = cfg.window_width // 2
    left = column - half
    window = np.zeros((image.height, cfg.window_width), np.uint8)
    src_lo = max(0, left)
    src_hi = min(image.width, column + half + 1)
    if src_lo < src_hi:
        window[:, src_lo - left : src_hi - left] = image.pixels[:, src_lo:src_hi]
    rows = np.floor((np.arange(cfg.normalized_height) + 0.5) * image.height / cfg.normalized_height)
    rows = np.clip(rows.astype(np.int64), 0, image.height - 1)
    return window[rows].astype(np.float64).ravel()
