"""Fixture builders shared by several test modules."""

import numpy as np

from medal.core import Image


def blocky_image(rng, size=64, block=4):
    """Piecewise-constant image with mild noise: plenty of corners, some flat areas."""
    coarse = rng.integers(0, 256, size=(size // block, size // block))
    px = np.kron(coarse, np.ones((block, block), dtype=np.int64))
    px = px + rng.integers(-8, 9, size=px.shape)
    return Image(np.clip(px, 0, 255).astype(np.uint8))


def ramp_image(size=48):
    """I(row, col) = 4 * col + row, a smooth gradient pointing along +x."""
    rows, cols = np.mgrid[0:size, 0:size]
    return Image((4 * cols + rows).astype(np.uint8))
