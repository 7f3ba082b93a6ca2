"""Geometric fallback detector for title blocks.

No learned model: binarize the page, find long horizontal and
vertical dark runs, assemble candidate rectangles from the line
intersections, and score each by border coverage plus a location
prior (title blocks live along the right or bottom edge of a sheet).
Thresholds are heuristics tuned on synthetic sheets and are all
overridable through HeuristicConfig.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .detection import BoundingBox, Detection, PageImage, TITLE_BLOCK


@dataclass(frozen=True)
class HeuristicConfig:
    min_run_frac: float = 0.05      # dark run must span >= 5% of page width/height
    min_area_frac: float = 0.01     # candidate rectangles: 1% .. 20% of page area
    max_area_frac: float = 0.20
    edge_band_frac: float = 0.25    # right/bottom band granting the full location prior
    interior_prior: float = 0.25    # prior for rectangles outside the band
    coverage_weight: float = 0.5    # blend between border coverage and location prior
    merge_gap: int = 3              # rows/cols this close collapse into one line
    corner_tol: int = 4             # slack when testing line intersections, px
    coverage_tol: int = 2           # half-width of the band sampled along each border
    max_lines: int = 48             # longest lines kept per orientation


@dataclass(frozen=True)
class _Segment:
    pos: int    # y for horizontal lines, x for vertical
    lo: int     # start of the span (x0 / y0)
    hi: int     # end of the span, exclusive


def otsu_threshold(gray: np.ndarray) -> int:
    """Otsu's histogram threshold; pixels at or below it count as dark."""
    hist = np.bincount(gray.ravel(), minlength=256).astype(np.float64)
    total = hist.sum()
    if total == 0:
        return 128
    omega = np.cumsum(hist) / total
    mu = np.cumsum(hist * np.arange(256)) / total
    mu_t = mu[-1]
    denom = omega * (1.0 - omega)
    denom[denom == 0] = np.nan
    sigma_b = (mu_t * omega - mu) ** 2 / denom
    if np.all(np.isnan(sigma_b)):
        return 128
    return int(np.nanargmax(sigma_b))


def _runs_in_row(row: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of True values as (start, end) pairs, end exclusive."""
    padded = np.concatenate(([0], row.view(np.int8), [0]))
    diff = np.diff(padded)
    starts = np.flatnonzero(diff == 1)
    ends = np.flatnonzero(diff == -1)
    return list(zip(starts.tolist(), ends.tolist()))


def _scan_segments(mask: np.ndarray, min_len: int, merge_gap: int) -> list[_Segment]:
    """Collect long horizontal dark runs and merge vertically-adjacent ones.

    Returns horizontal segments for `mask`; callers transpose the mask
    to get vertical ones.
    """
    clusters: list[dict] = []  # each: pos list, lo, hi, last row seen
    for y in range(mask.shape[0]):
        row = mask[y]
        if not row.any():
            continue
        for x0, x1 in _runs_in_row(row):
            if x1 - x0 < min_len:
                continue
            for c in clusters:
                if y - c["last"] <= merge_gap and x0 < c["hi"] and x1 > c["lo"]:
                    c["rows"].append(y)
                    c["lo"] = min(c["lo"], x0)
                    c["hi"] = max(c["hi"], x1)
                    c["last"] = y
                    break
            else:
                clusters.append({"rows": [y], "lo": x0, "hi": x1, "last": y})
    return [
        _Segment(pos=int(round(float(np.mean(c["rows"])))), lo=c["lo"], hi=c["hi"])
        for c in clusters
    ]


def _border_coverage(mask: np.ndarray, x: int, y: int, w: int, h: int, tol: int) -> float:
    """Fraction of the rectangle perimeter backed by dark pixels.

    Each border is sampled through a band of +-tol pixels; coverage is
    length-weighted across the four sides.
    """
    H, W = mask.shape
    x2, y2 = x + w, y + h

    def band_rows(cy: int) -> np.ndarray:
        lo, hi = max(0, cy - tol), min(H, cy + tol + 1)
        seg = mask[lo:hi, max(0, x):min(W, x2)]
        return seg.any(axis=0) if seg.size else np.zeros(0, dtype=bool)

    def band_cols(cx: int) -> np.ndarray:
        lo, hi = max(0, cx - tol), min(W, cx + tol + 1)
        seg = mask[max(0, y):min(H, y2), lo:hi]
        return seg.any(axis=1) if seg.size else np.zeros(0, dtype=bool)

    covered = 0.0
    total = 0.0
    for edge in (band_rows(y), band_rows(y2 - 1)):
        covered += float(edge.sum())
        total += w
    for edge in (band_cols(x), band_cols(x2 - 1)):
        covered += float(edge.sum())
        total += h
    return covered / total if total else 0.0


def heuristic_detect(img: PageImage, cfg: HeuristicConfig = HeuristicConfig()) -> list[Detection]:
    """Detect title-block candidates from ruled lines.

    Returns zero or more title_block detections with a pseudo-confidence
    in [0, 1], strongest first. Blank pages yield an empty list.
    """
    gray = img.to_gray()
    if gray.min() == gray.max():  # blank page, nothing to threshold
        return []
    thr = otsu_threshold(gray)
    mask = gray <= thr
    if not mask.any() or mask.all():
        return []

    H, W = mask.shape
    h_lines = _scan_segments(mask, int(cfg.min_run_frac * W), cfg.merge_gap)
    v_raw = _scan_segments(mask.T, int(cfg.min_run_frac * H), cfg.merge_gap)
    v_lines = v_raw  # transposed scan: pos is x, (lo, hi) is the y-span

    # keep only the longest lines to bound the pairing work on noisy scans
    h_lines = sorted(h_lines, key=lambda s: s.hi - s.lo, reverse=True)[: cfg.max_lines]
    v_lines = sorted(v_lines, key=lambda s: s.hi - s.lo, reverse=True)[: cfg.max_lines]
    if len(h_lines) < 2 or len(v_lines) < 2:
        return []

    h_lines.sort(key=lambda s: s.pos)
    v_lines.sort(key=lambda s: s.pos)

    page_area = float(W * H)
    tol = cfg.corner_tol
    scored: list[tuple[float, BoundingBox]] = []
    for i, h1 in enumerate(h_lines):
        for h2 in h_lines[i + 1:]:
            height = h2.pos - h1.pos
            if height <= 0:
                continue
            for j, v1 in enumerate(v_lines):
                for v2 in v_lines[j + 1:]:
                    width = v2.pos - v1.pos
                    if width <= 0:
                        continue
                    area_frac = (width * height) / page_area
                    if not cfg.min_area_frac <= area_frac <= cfg.max_area_frac:
                        continue
                    if not _corners_meet(h1, h2, v1, v2, tol):
                        continue
                    x = max(0, v1.pos)
                    y = max(0, h1.pos)
                    box = BoundingBox(x, y, width, height)
                    coverage = _border_coverage(mask, x, y, width, height, cfg.coverage_tol)
                    prior = 1.0 if _in_edge_band(box, W, H, cfg.edge_band_frac) else cfg.interior_prior
                    score = cfg.coverage_weight * coverage + (1.0 - cfg.coverage_weight) * prior
                    scored.append((score, box))

    # containment suppression: a ruled 4-cell block should yield one box,
    # not the outer frame plus every interior cell
    scored.sort(key=lambda t: (-t[0], -t[1].area, t[1].x, t[1].y))
    kept: list[tuple[float, BoundingBox]] = []
    for score, box in scored:
        if any(_contains(k_box, box, cfg.merge_gap) for _, k_box in kept):
            continue
        kept.append((score, box))

    return [
        Detection(box=box, category=TITLE_BLOCK, confidence=min(1.0, max(0.0, score)))
        for score, box in kept
    ]


def _corners_meet(h1: _Segment, h2: _Segment, v1: _Segment, v2: _Segment, tol: int) -> bool:
    for h in (h1, h2):
        for v in (v1, v2):
            if not (h.lo - tol <= v.pos <= h.hi + tol):
                return False
            if not (v.lo - tol <= h.pos <= v.hi + tol):
                return False
    return True


def _in_edge_band(box: BoundingBox, width: int, height: int, band_frac: float) -> bool:
    return box.x >= (1.0 - band_frac) * width or box.y >= (1.0 - band_frac) * height


def _contains(outer: BoundingBox, inner: BoundingBox, tol: int) -> bool:
    return (
        outer.x - tol <= inner.x
        and outer.y - tol <= inner.y
        and inner.x2 <= outer.x2 + tol
        and inner.y2 <= outer.y2 + tol
    )
