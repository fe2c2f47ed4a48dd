"""Single-scale ORB-style descriptors for whole images.

Pipeline: FAST-9 corners on the radius-3 Bresenham circle, orientation
from the intensity centroid of a circular patch, a steered 256-pair BRIEF
test, then a bitwise mean over all keypoints of the image.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass

import numpy as np

from .core import Image
from .errors import ImageTooSmall, ParseError, PatchOutOfBounds

N_BITS = 256
PATCH_RADIUS = 15
PATCH_SIZE = 2 * PATCH_RADIUS + 1
DEFAULT_THRESHOLD = 20
DEFAULT_MAX_KEYPOINTS = 500
ARC_LENGTH = 9
MIN_IMAGE_SIDE = 32

# (dx, dy) of the 16 circle pixels, clockwise from 12 o'clock (y grows down)
CIRCLE = np.array([
    (0, -3), (1, -3), (2, -2), (3, -1), (3, 0), (3, 1), (2, 2), (1, 3),
    (0, 3), (-1, 3), (-2, 2), (-3, 1), (-3, 0), (-3, -1), (-2, -2), (-1, -3),
])


class EmptyDescriptorWarning(UserWarning):
    """An image produced no keypoints; its pooled descriptor is all zeros."""


@dataclass(frozen=True)
class Keypoint:
    x: int
    y: int
    score: float
    angle: float = 0.0


@dataclass(frozen=True)
class BriefPattern:
    """256 point pairs, integer offsets ``(dx, dy)`` inside the patch disc."""

    pairs: np.ndarray  # (256, 2, 2) int
    seed: int

    @classmethod
    def generate(cls, seed: int = 0, n_pairs: int = N_BITS) -> "BriefPattern":
        rng = np.random.default_rng(seed)
        sigma = PATCH_SIZE / 5.0
        pairs = np.empty((n_pairs, 2, 2), dtype=np.int64)
        i = 0
        while i < n_pairs:
            pts = _clamp_to_disc(np.rint(rng.normal(0.0, sigma, size=(2, 2))))
            if (pts[0] == pts[1]).all():
                continue  # a point compared with itself is always 0
            pairs[i] = pts
            i += 1
        return cls(pairs, seed)


def _clamp_to_disc(pts):
    # Radially project onto the radius-15 disc; truncating towards zero keeps
    # the point inside the disc, so every steered offset stays within +-15.
    pts = np.asarray(pts, dtype=np.float64)
    norms = np.hypot(pts[:, 0], pts[:, 1])
    scale = np.where(norms > PATCH_RADIUS, PATCH_RADIUS / np.maximum(norms, 1e-12), 1.0)
    return np.trunc(pts * scale[:, None]).astype(np.int64)


# -- PGM -------------------------------------------------------------------

def read_pgm(path) -> Image:
    """Read a binary (P5) PGM with maxval <= 255."""
    with open(path, "rb") as fh:
        data = fh.read()
    return parse_pgm(data, name=os.fspath(path))


def parse_pgm(data: bytes, name: str = "<bytes>") -> Image:
    tokens = []
    pos = 0
    # header: magic, width, height, maxval separated by whitespace, '#' comments
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise ParseError(f"{name}: truncated PGM header")
        if data[pos:pos + 1] == b"#":
            end = data.find(b"\n", pos)
            pos = len(data) if end < 0 else end + 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        tokens.append(data[start:pos])
    if tokens[0] != b"P5":
        raise ParseError(f"{name}: not a binary PGM (magic {tokens[0]!r}, expected b'P5')")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise ParseError(f"{name}: malformed PGM header {tokens[1:]!r}") from None
    if width <= 0 or height <= 0:
        raise ParseError(f"{name}: bad image size {width}x{height}")
    if not 0 < maxval <= 255:
        raise ParseError(f"{name}: maxval {maxval} unsupported (need 1..255)")
    pos += 1  # exactly one whitespace byte before the raster
    raster = data[pos:pos + width * height]
    if len(raster) != width * height:
        raise ParseError(f"{name}: expected {width * height} pixel bytes, got {len(raster)}")
    px = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    return Image(px.copy())


def write_pgm(path, img: Image):
    px = np.asarray(img.pixels, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (px.shape[1], px.shape[0]))
        fh.write(px.tobytes())


# -- FAST ------------------------------------------------------------------

def _circle_stack(pix, r):
    """(16, H - 2r, W - 2r) circle intensities for every pixel with margin r."""
    h, w = pix.shape
    return np.stack([pix[r + dy:h - r + dy, r + dx:w - r + dx] for dx, dy in CIRCLE])


def _longest_run_mask(flags):
    """Per pixel, mark circle positions that belong to a circular run >= ARC_LENGTH.

    ``flags`` has shape (16, ...). Returns a boolean array of the same shape.
    """
    n = flags.shape[0]
    doubled = np.concatenate([flags, flags], axis=0)
    # run length ending at each position of the doubled ring
    run = np.zeros(doubled.shape, dtype=np.int32)
    acc = np.zeros(flags.shape[1:], dtype=np.int32)
    for i in range(2 * n):
        acc = np.where(doubled[i], acc + 1, 0)
        run[i] = acc
    member = np.zeros(doubled.shape, dtype=bool)
    # walk backwards marking every position covered by a long-enough run
    remaining = np.zeros(flags.shape[1:], dtype=np.int32)
    for i in range(2 * n - 1, -1, -1):
        start_long = (run[i] >= ARC_LENGTH) & (remaining == 0)
        remaining = np.where(start_long, np.minimum(run[i], n), remaining)
        member[i] = remaining > 0
        remaining = np.maximum(remaining - 1, 0)
    return member[:n] | member[n:]


def detect_fast_keypoints(img: Image, threshold: float = DEFAULT_THRESHOLD,
                          max_keypoints: int = DEFAULT_MAX_KEYPOINTS,
                          border: int = PATCH_RADIUS) -> list[Keypoint]:
    """FAST-9 segment test, scored and sorted by descending strength.

    Only pixels at least ``border`` pixels from every edge are considered.
    Ties in score are ordered by row, then column.
    """
    pix = np.asarray(img.pixels, dtype=np.int32)
    h, w = pix.shape
    if h < MIN_IMAGE_SIDE or w < MIN_IMAGE_SIDE:
        raise ImageTooSmall(f"image is {w}x{h}; need at least {MIN_IMAGE_SIDE}x{MIN_IMAGE_SIDE}")
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    r = max(3, int(border))
    if h <= 2 * r or w <= 2 * r:
        return []

    center = pix[r:h - r, r:w - r]
    ring = _circle_stack(pix, r)
    diff = ring - center[None]
    bright = diff > threshold
    dark = diff < -threshold
    score = np.zeros(center.shape, dtype=np.float64)
    for flags in (bright, dark):
        # cheap reject: a 9-arc needs at least 9 flagged pixels
        candidates = flags.sum(axis=0) >= ARC_LENGTH
        if not candidates.any():
            continue
        member = _longest_run_mask(flags[:, candidates])
        gain = (np.abs(diff[:, candidates]) - threshold) * member
        score[candidates] += gain.sum(axis=0)

    ys, xs = np.nonzero(score > 0)
    scores = score[ys, xs]
    order = np.lexsort((xs, ys, -scores))
    return [Keypoint(int(xs[i]) + r, int(ys[i]) + r, float(scores[i]))
            for i in order[:max_keypoints]]


# -- orientation -----------------------------------------------------------

def _disc_offsets(radius):
    r = int(radius)
    dy, dx = np.mgrid[-r:r + 1, -r:r + 1]
    inside = dx * dx + dy * dy <= r * r
    return dx, dy, inside


def keypoint_orientation(img: Image, kp: Keypoint, patch_radius: int = PATCH_RADIUS) -> float:
    """Intensity-centroid angle ``atan2(m01, m10)`` mapped to ``[0, 2pi)``.

    ``x`` runs along columns and ``y`` along rows (downwards). A patch with
    both first moments zero gets angle 0.
    """
    r = int(patch_radius)
    pix = np.asarray(img.pixels, dtype=np.int64)
    h, w = pix.shape
    if kp.x - r < 0 or kp.y - r < 0 or kp.x + r >= w or kp.y + r >= h:
        raise PatchOutOfBounds(f"radius-{r} patch around ({kp.x}, {kp.y}) leaves the {w}x{h} image")
    patch = pix[kp.y - r:kp.y + r + 1, kp.x - r:kp.x + r + 1]
    dx, dy, inside = _disc_offsets(r)
    weights = patch * inside
    m10 = int((dx * weights).sum())
    m01 = int((dy * weights).sum())
    if m10 == 0 and m01 == 0:
        return 0.0
    return math.atan2(m01, m10) % (2 * math.pi)


def orient(img: Image, keypoints, patch_radius: int = PATCH_RADIUS) -> list[Keypoint]:
    return [Keypoint(k.x, k.y, k.score, keypoint_orientation(img, k, patch_radius))
            for k in keypoints]


# -- steered BRIEF ---------------------------------------------------------

def steer(pairs: np.ndarray, angle: float) -> np.ndarray:
    """Rotate pattern offsets by ``angle`` and round to the nearest pixel."""
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    return np.rint(pairs.astype(np.float64) @ rot.T).astype(np.int64)


def rbrief_describe(img: Image, kp: Keypoint, pattern: BriefPattern) -> np.ndarray:
    """256-bit steered BRIEF descriptor (bool array); bit = I(a') < I(b')."""
    pix = np.asarray(img.pixels, dtype=np.int32)
    h, w = pix.shape
    pts = steer(pattern.pairs, kp.angle)  # (n, 2, 2)
    xs = pts[..., 0] + kp.x
    ys = pts[..., 1] + kp.y
    if xs.min() < 0 or ys.min() < 0 or xs.max() >= w or ys.max() >= h:
        raise PatchOutOfBounds(f"steered pattern around ({kp.x}, {kp.y}) leaves the {w}x{h} image")
    vals = pix[ys, xs]
    return vals[:, 0] < vals[:, 1]


def pool_image_descriptor(descs) -> np.ndarray:
    """Bitwise mean of a stack of binary descriptors (zeros + warning if empty)."""
    descs = np.asarray(descs, dtype=bool)
    if descs.size == 0:
        warnings.warn("no keypoint descriptors to pool; using the zero vector",
                      EmptyDescriptorWarning, stacklevel=2)
        return np.zeros(descs.shape[-1] if descs.ndim == 2 else N_BITS)
    if descs.ndim == 1:
        descs = descs[None, :]
    return descs.mean(axis=0)


def describe_image(img: Image, pattern: BriefPattern, threshold: float = DEFAULT_THRESHOLD,
                   max_keypoints: int = DEFAULT_MAX_KEYPOINTS) -> np.ndarray:
    """Detect, orient, describe and pool: one 256-d vector in [0, 1] per image."""
    kps = orient(img, detect_fast_keypoints(img, threshold, max_keypoints))
    descs = np.array([rbrief_describe(img, k, pattern) for k in kps], dtype=bool).reshape(-1, N_BITS)
    return pool_image_descriptor(descs)
