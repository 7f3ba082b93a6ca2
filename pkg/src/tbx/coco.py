"""Markup <-> COCO dataset conversion and validation.

Annotators work in page points on per-drawing markup files; training
tooling wants one COCO dataset in pixels. The two sides are kept in
sync by a lossless-enough round trip: coordinates survive within half
a point at the default 300 dpi, labels exactly.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .detection import CATEGORIES
from .errors import RectOutOfBounds, UnknownLabel, ValidationError

DEFAULT_DPI = 300
POINTS_PER_INCH = 72.0

CATEGORY_IDS = {name: i + 1 for i, name in enumerate(CATEGORIES)}

# separator between the source file name and the page index inside a
# COCO image file_name; needed to regroup pages on the way back
PAGE_SEP = "#p"


@dataclass
class MarkupShape:
    rect: tuple[float, float, float, float]  # (x, y, w, h) in page points
    label: str
    author: str = ""
    created: str | None = None


@dataclass
class MarkupPage:
    page_index: int
    width_pt: float
    height_pt: float
    shapes: list[MarkupShape] = field(default_factory=list)


@dataclass
class MarkupDocument:
    file_name: str
    pages: list[MarkupPage] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "file_name": self.file_name,
            "pages": [
                {
                    "page_index": p.page_index,
                    "width_pt": p.width_pt,
                    "height_pt": p.height_pt,
                    "shapes": [
                        {
                            "rect": list(s.rect),
                            "label": s.label,
                            "author": s.author,
                            "created": s.created,
                        }
                        for s in p.shapes
                    ],
                }
                for p in self.pages
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "MarkupDocument":
        doc = cls(file_name=data["file_name"])
        for p in data.get("pages", []):
            page = MarkupPage(
                page_index=p["page_index"],
                width_pt=p["width_pt"],
                height_pt=p["height_pt"],
            )
            for s in p.get("shapes", []):
                page.shapes.append(
                    MarkupShape(
                        rect=tuple(s["rect"]),
                        label=s["label"],
                        author=s.get("author", ""),
                        created=s.get("created"),
                    )
                )
            doc.pages.append(page)
        return doc


@dataclass
class CocoDataset:
    images: list[dict] = field(default_factory=list)
    annotations: list[dict] = field(default_factory=list)
    categories: list[dict] = field(
        default_factory=lambda: [{"id": i, "name": n} for n, i in CATEGORY_IDS.items()]
    )

    def to_json(self) -> dict:
        return {
            "images": [
                {"id": im["id"], "file_name": im["file_name"], "width": im["width"], "height": im["height"]}
                for im in self.images
            ],
            "annotations": [
                {
                    "id": a["id"],
                    "image_id": a["image_id"],
                    "category_id": a["category_id"],
                    "bbox": list(a["bbox"]),
                    "area": a["area"],
                }
                for a in self.annotations
            ],
            "categories": [{"id": c["id"], "name": c["name"]} for c in self.categories],
        }

    @classmethod
    def from_json(cls, data: dict) -> "CocoDataset":
        return cls(
            images=list(data.get("images", [])),
            annotations=list(data.get("annotations", [])),
            categories=list(data.get("categories", [])),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "CocoDataset":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def normalize_label(label: str) -> str:
    return "_".join(label.lower().split())


def markup_to_coco(docs: list[MarkupDocument], dpi: float = DEFAULT_DPI) -> CocoDataset:
    """Scale page-point markup into one COCO dataset at the given dpi.

    One COCO image per page; ids run sequentially in input order.
    Shape labels must normalize to one of the four categories.
    """
    scale = dpi / POINTS_PER_INCH
    ds = CocoDataset()
    image_id = 0
    ann_id = 0
    for doc in docs:
        for page in doc.pages:
            image_id += 1
            img_w = round(page.width_pt * scale)
            img_h = round(page.height_pt * scale)
            ds.images.append(
                {
                    "id": image_id,
                    "file_name": f"{doc.file_name}{PAGE_SEP}{page.page_index}",
                    "width": img_w,
                    "height": img_h,
                }
            )
            for k, shape in enumerate(page.shapes):
                where = f"{doc.file_name} page {page.page_index} shape {k}"
                name = normalize_label(shape.label)
                if name not in CATEGORY_IDS:
                    raise UnknownLabel(f"label {shape.label!r} at {where}")
                x, y, w, h = shape.rect
                if x < 0 or y < 0 or x + w > page.width_pt or y + h > page.height_pt:
                    raise RectOutOfBounds(f"rect {shape.rect} exceeds page at {where}")
                bbox = [round(x * scale), round(y * scale), round(w * scale), round(h * scale)]
                # edge-flush rects may round one pixel past the rounded
                # page; clamping costs well under the half-point budget
                bbox[2] = max(1, min(bbox[2], img_w - bbox[0]))
                bbox[3] = max(1, min(bbox[3], img_h - bbox[1]))
                ann_id += 1
                ds.annotations.append(
                    {
                        "id": ann_id,
                        "image_id": image_id,
                        "category_id": CATEGORY_IDS[name],
                        "bbox": bbox,
                        "area": bbox[2] * bbox[3],
                    }
                )
    return ds


def coco_to_markup(ds: CocoDataset, dpi: float = DEFAULT_DPI) -> list[MarkupDocument]:
    """Inverse of markup_to_coco: back to page points, grouped by file."""
    findings = validate_coco(ds)
    if findings:
        raise ValidationError(
            f"dataset has {len(findings)} validation finding(s); first: {findings[0]['message']}"
        )
    scale = POINTS_PER_INCH / dpi
    id_to_name = {c["id"]: c["name"] for c in ds.categories}
    docs: dict[str, MarkupDocument] = {}
    pages: dict[int, MarkupPage] = {}
    for im in ds.images:
        file_name, _, page_part = im["file_name"].rpartition(PAGE_SEP)
        if not file_name:  # flat name without a page marker
            file_name, page_part = im["file_name"], "0"
        page = MarkupPage(
            page_index=int(page_part),
            width_pt=im["width"] * scale,
            height_pt=im["height"] * scale,
        )
        pages[im["id"]] = page
        docs.setdefault(file_name, MarkupDocument(file_name=file_name)).pages.append(page)
    for ann in ds.annotations:
        x, y, w, h = ann["bbox"]
        display = id_to_name[ann["category_id"]].replace("_", " ").title()
        pages[ann["image_id"]].shapes.append(
            MarkupShape(rect=(x * scale, y * scale, w * scale, h * scale), label=display)
        )
    return list(docs.values())


def validate_coco(ds: CocoDataset) -> list[dict]:
    """Consistency findings for a dataset; an empty list means valid.

    Checks: duplicate ids, dangling references, boxes outside their
    image, area mismatches, and category names outside the four known
    regions. Findings are data, not exceptions.
    """
    findings: list[dict] = []

    def add(code: str, message: str, where: str) -> None:
        findings.append({"code": code, "message": message, "where": where})

    seen_img: set = set()
    for im in ds.images:
        if im["id"] in seen_img:
            add("duplicate_image_id", f"image id {im['id']} repeats", f"image {im['id']}")
        seen_img.add(im["id"])

    seen_cat: set = set()
    for c in ds.categories:
        if c["id"] in seen_cat:
            add("duplicate_category_id", f"category id {c['id']} repeats", f"category {c['id']}")
        seen_cat.add(c["id"])
        if c["name"] not in CATEGORIES:
            add("unknown_category", f"category name {c['name']!r} is not recognised", f"category {c['id']}")

    images_by_id = {im["id"]: im for im in ds.images}
    seen_ann: set = set()
    for ann in ds.annotations:
        where = f"annotation {ann['id']}"
        if ann["id"] in seen_ann:
            add("duplicate_annotation_id", f"annotation id {ann['id']} repeats", where)
        seen_ann.add(ann["id"])
        if ann["image_id"] not in images_by_id:
            add("dangling_image_ref", f"image_id {ann['image_id']} does not exist", where)
        if ann["category_id"] not in seen_cat:
            add("dangling_category_ref", f"category_id {ann['category_id']} does not exist", where)
        bbox = ann.get("bbox", [])
        if len(bbox) != 4:
            add("bad_bbox", "bbox must have four entries", where)
            continue
        x, y, w, h = bbox
        if w <= 0 or h <= 0 or x < 0 or y < 0:
            add("bad_bbox", f"degenerate bbox {bbox}", where)
        im = images_by_id.get(ann["image_id"])
        if im is not None and (x + w > im["width"] or y + h > im["height"]):
            add("bbox_outside_image", f"bbox {bbox} exceeds {im['width']}x{im['height']}", where)
        if abs(ann.get("area", 0) - w * h) > 1e-6:
            add("area_mismatch", f"area {ann.get('area')} != w*h = {w * h}", where)
    return findings


def save_markup(doc: MarkupDocument, path: str | Path) -> None:
    Path(path).write_text(json.dumps(doc.to_json(), indent=2), encoding="utf-8")


def load_markup(path: str | Path) -> MarkupDocument:
    return MarkupDocument.from_json(json.loads(Path(path).read_text(encoding="utf-8")))
