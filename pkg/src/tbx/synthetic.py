"""Synthetic drawing sheets with a planted, ruled title block.

No real drawings ship with this package, so tests and demos generate
their own: a white page, a bordered grid block flush to the right or
bottom edge, light dash noise standing in for drawing content. The
generator returns the planted box, which doubles as ground truth.
"""
from __future__ import annotations

import numpy as np

from .detection import BoundingBox, PageImage


def make_sheet(
    drawing_id: str,
    seed: int,
    width: int = 1000,
    height: int = 700,
    placement: str = "right",  # "right" | "bottom" | "center"
    noise_dashes: int = 12,
) -> tuple[PageImage, BoundingBox]:
    """Generate one sheet; the returned box is the planted title block."""
    rng = np.random.default_rng(seed)
    page = np.full((height, width), 255, dtype=np.uint8)

    if placement == "right":
        w = int(rng.uniform(0.13, 0.20) * width)
        h = int(rng.uniform(0.25, 0.55) * height)
        x = width - w - int(rng.uniform(3, max(4, 0.24 * width - w)))
        y = int(rng.uniform(0.05, 0.90 - h / height) * height)
    elif placement == "bottom":
        w = int(rng.uniform(0.25, 0.55) * width)
        h = int(rng.uniform(0.10, 0.18) * height)
        x = int(rng.uniform(0.05, 0.90 - w / width) * width)
        y = height - h - int(rng.uniform(3, max(4, 0.24 * height - h)))
    elif placement == "center":
        w = int(rng.uniform(0.13, 0.20) * width)
        h = int(rng.uniform(0.25, 0.45) * height)
        x = int(rng.uniform(0.25, 0.45) * width)
        y = int(rng.uniform(0.15, 0.35) * height)
    else:
        raise ValueError(f"unknown placement {placement!r}")

    box = BoundingBox(x, y, w, h)
    _draw_block(page, x, y, w, h, rng)
    _draw_noise(page, rng, noise_dashes, avoid=box)
    return PageImage(drawing_id=drawing_id, pixels=page), box


def _draw_block(page: np.ndarray, x: int, y: int, w: int, h: int, rng) -> None:
    t = 2  # border thickness, px
    page[y : y + t, x : x + w] = 0
    page[y + h - t : y + h, x : x + w] = 0
    page[y : y + h, x : x + t] = 0
    page[y : y + h, x + w - t : x + w] = 0
    # one vertical and one horizontal splitter: four cells
    sx = x + int(rng.uniform(0.35, 0.65) * w)
    sy = y + int(rng.uniform(0.35, 0.65) * h)
    page[y : y + h, sx : sx + t] = 0
    page[sy : sy + t, x : x + w] = 0
    # short text-like dashes inside the cells
    for _ in range(rng.integers(4, 10)):
        dx = x + int(rng.uniform(0.08, 0.8) * w)
        dy = y + int(rng.uniform(0.08, 0.9) * h)
        length = int(rng.uniform(0.05, 0.18) * w)
        page[dy : dy + 1, dx : min(x + w - t - 1, dx + length)] = 0


def _draw_noise(page: np.ndarray, rng, dashes: int, avoid: BoundingBox) -> None:
    """Sparse short strokes in the content area, too short to read as lines."""
    height, width = page.shape
    max_len = int(0.04 * width)  # below the detector's run-length floor
    for _ in range(dashes):
        dx = int(rng.uniform(0, width - max_len - 1))
        dy = int(rng.uniform(0, height - max_len - 1))
        if avoid.x - max_len <= dx <= avoid.x2 and avoid.y - max_len <= dy <= avoid.y2:
            continue
        length = int(rng.uniform(8, max_len))
        if rng.random() < 0.5:
            page[dy, dx : dx + length] = 0
        else:
            page[dy : dy + length, dx] = 0
