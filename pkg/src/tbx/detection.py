"""Bounding boxes, detections and page images.

Boxes use the COCO (x, y, w, h) convention with the origin at the
top-left of the page. Detections carry one of the four region
categories and a confidence score; precomputed detector output is
read from a newline-delimited wire format.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ConfidenceOutOfRange, InvalidCategory, OutOfBounds, ParseError

CATEGORIES = ("title_block", "main_content", "legend", "notes")

TITLE_BLOCK = "title_block"


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in pixels, (x, y) top-left, w/h strictly positive."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box must have positive size, got w={self.w}, h={self.h}")
        if self.x < 0 or self.y < 0:
            raise ValueError(f"box origin must be non-negative, got ({self.x}, {self.y})")

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h


@dataclass(frozen=True)
class Detection:
    box: BoundingBox
    category: str
    confidence: float

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise InvalidCategory(f"unknown category {self.category!r}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ConfidenceOutOfRange(f"confidence {self.confidence} not in [0, 1]")


@dataclass
class PageImage:
    """A rasterized drawing page; pixels are uint8 grayscale or RGB."""

    drawing_id: str
    pixels: np.ndarray = field(repr=False)
    dpi: int = 300

    def __post_init__(self):
        if self.pixels.ndim not in (2, 3):
            raise ValueError("pixel array must be HxW or HxWx3")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("page must have positive dimensions")

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    def to_gray(self) -> np.ndarray:
        if self.pixels.ndim == 2:
            return self.pixels
        # ITU-R 601 luma weights
        rgb = self.pixels[..., :3].astype(np.float32)
        gray = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
        return gray.astype(np.uint8)

    def to_png_bytes(self) -> bytes:
        import io

        buf = io.BytesIO()
        Image.fromarray(self.pixels).save(buf, format="PNG")
        return buf.getvalue()


def load_page_image(path: str | Path, drawing_id: str | None = None, dpi: int = 300) -> PageImage:
    """Load a raster file (png/jpg/tiff) as a page image.

    The drawing id defaults to the file stem.
    """
    p = Path(path)
    with Image.open(p) as im:
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB")
        pixels = np.asarray(im)
    return PageImage(drawing_id=drawing_id or p.stem, pixels=pixels, dpi=dpi)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes; 0.0 when disjoint."""
    ix = max(a.x, b.x)
    iy = max(a.y, b.y)
    ix2 = min(a.x2, b.x2)
    iy2 = min(a.y2, b.y2)
    iw = ix2 - ix
    ih = iy2 - iy
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    return inter / union


def select_title_block(dets: list[Detection]) -> Detection | None:
    """Pick the winning title-block detection.

    Only the most confident title-block prediction counts; every
    drawing is assumed to contain at most one real title block.
    Equal confidences break toward the smallest (x, y, w, h).
    """
    candidates = [d for d in dets if d.category == TITLE_BLOCK]
    if not candidates:
        return None
    return min(candidates, key=lambda d: (-d.confidence, d.box.x, d.box.y, d.box.w, d.box.h))


def crop_region(img: PageImage, box: BoundingBox, pad: float = 8) -> PageImage:
    """Cut out a box expanded by `pad` on all sides, clamped to the page.

    Raises OutOfBounds when the (unpadded) box does not intersect the
    image at all.
    """
    if box.x >= img.width or box.y >= img.height:
        raise OutOfBounds(f"box {box} lies outside {img.width}x{img.height} image")
    x0 = max(0, int(np.floor(box.x - pad)))
    y0 = max(0, int(np.floor(box.y - pad)))
    x1 = min(img.width, int(np.ceil(box.x2 + pad)))
    y1 = min(img.height, int(np.ceil(box.y2 + pad)))
    if x1 <= x0 or y1 <= y0:
        raise OutOfBounds(f"box {box} lies outside {img.width}x{img.height} image")
    return PageImage(
        drawing_id=img.drawing_id,
        pixels=img.pixels[y0:y1, x0:x1].copy(),
        dpi=img.dpi,
    )


def load_precomputed(path: str | Path) -> dict[str, list[Detection]]:
    """Read detector output from the newline-delimited wire format.

    Each line is an object {"drawing_id", "category", "bbox": [x,y,w,h],
    "confidence"}; unknown fields are ignored. Malformed entries raise
    a positioned error rather than being skipped.
    """
    out: dict[str, list[Detection]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line=lineno) from exc
            if not isinstance(obj, dict):
                raise ParseError("record is not an object", line=lineno)
            out.setdefault(_field(obj, "drawing_id", str, lineno), []).append(
                _parse_detection(obj, lineno)
            )
    return out


def _field(obj: dict, name: str, typ: type, lineno: int):
    if name not in obj:
        raise ParseError("missing field", line=lineno, field=name)
    value = obj[name]
    if typ is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ParseError("expected a number", line=lineno, field=name)
        return float(value)
    if not isinstance(value, typ):
        raise ParseError(f"expected {typ.__name__}", line=lineno, field=name)
    return value


def _parse_detection(obj: dict, lineno: int) -> Detection:
    category = _field(obj, "category", str, lineno)
    if category not in CATEGORIES:
        raise InvalidCategory(f"unknown category {category!r} (line {lineno})")
    confidence = _field(obj, "confidence", float, lineno)
    if not 0.0 <= confidence <= 1.0:
        raise ConfidenceOutOfRange(f"confidence {confidence} not in [0, 1] (line {lineno})")
    bbox = _field(obj, "bbox", list, lineno)
    if len(bbox) != 4 or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in bbox):
        raise ParseError("bbox must be four numbers", line=lineno, field="bbox")
    try:
        box = BoundingBox(*[float(v) for v in bbox])
    except ValueError as exc:
        raise ParseError(str(exc), line=lineno, field="bbox") from exc
    return Detection(box=box, category=category, confidence=confidence)


def detection_to_wire(drawing_id: str, det: Detection) -> str:
    """Render one detection as a wire-format line."""
    return json.dumps(
        {
            "drawing_id": drawing_id,
            "category": det.category,
            "bbox": [det.box.x, det.box.y, det.box.w, det.box.h],
            "confidence": det.confidence,
        }
    )
