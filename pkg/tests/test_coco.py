"""Markup <-> COCO conversion and dataset validation."""
from __future__ import annotations

import random

import pytest

from tbx.coco import (
    CATEGORY_IDS,
    CocoDataset,
    MarkupDocument,
    MarkupPage,
    MarkupShape,
    coco_to_markup,
    markup_to_coco,
    validate_coco,
)
from tbx.errors import RectOutOfBounds, UnknownLabel, ValidationError

LABELS = ["Title Block", "Main Content", "Legend", "Notes"]


def random_document(rng: random.Random, name: str) -> MarkupDocument:
    doc = MarkupDocument(file_name=name)
    for page_index in range(rng.randint(1, 3)):
        width = rng.uniform(400, 1200)
        height = rng.uniform(400, 1200)
        page = MarkupPage(page_index=page_index, width_pt=width, height_pt=height)
        for _ in range(rng.randint(0, 5)):
            w = rng.uniform(10, width / 2)
            h = rng.uniform(10, height / 2)
            x = rng.uniform(0, width - w)
            y = rng.uniform(0, height - h)
            page.shapes.append(MarkupShape(rect=(x, y, w, h), label=rng.choice(LABELS)))
        doc.pages.append(page)
    return doc


class TestMarkupToCoco:
    def test_point_scaling_at_300dpi(self):
        doc = MarkupDocument(
            file_name="sheet.pdf",
            pages=[
                MarkupPage(
                    page_index=0,
                    width_pt=612,
                    height_pt=792,
                    shapes=[MarkupShape(rect=(72, 72, 144, 72), label="Title Block")],
                )
            ],
        )
        ds = markup_to_coco([doc], dpi=300)
        image = ds.images[0]
        assert (image["width"], image["height"]) == (2550, 3300)
        ann = ds.annotations[0]
        assert ann["bbox"] == [300, 300, 600, 300]
        assert ann["category_id"] == CATEGORY_IDS["title_block"] == 1
        assert ann["area"] == 600 * 300

    def test_unknown_label(self):
        doc = MarkupDocument(
            file_name="d",
            pages=[
                MarkupPage(
                    page_index=0,
                    width_pt=100,
                    height_pt=100,
                    shapes=[MarkupShape(rect=(0, 0, 10, 10), label="watermark")],
                )
            ],
        )
        with pytest.raises(UnknownLabel, match="page 0 shape 0"):
            markup_to_coco([doc])

    def test_rect_out_of_bounds(self):
        doc = MarkupDocument(
            file_name="d",
            pages=[
                MarkupPage(
                    page_index=0,
                    width_pt=100,
                    height_pt=100,
                    shapes=[MarkupShape(rect=(90, 90, 20, 20), label="Notes")],
                )
            ],
        )
        with pytest.raises(RectOutOfBounds):
            markup_to_coco([doc])

    def test_empty_input(self):
        ds = markup_to_coco([])
        assert ds.images == []
        assert ds.annotations == []
        assert [c["name"] for c in ds.categories] == [
            "title_block",
            "main_content",
            "legend",
            "notes",
        ]

    def test_category_ids_stable(self):
        assert CATEGORY_IDS == {"title_block": 1, "main_content": 2, "legend": 3, "notes": 4}

    def test_output_always_validates(self):
        rng = random.Random(11)
        docs = [random_document(rng, f"doc{i}.pdf") for i in range(20)]
        assert validate_coco(markup_to_coco(docs)) == []


class TestRoundTrip:
    def test_inverse_of_example(self):
        doc = MarkupDocument(
            file_name="sheet.pdf",
            pages=[
                MarkupPage(
                    page_index=0,
                    width_pt=612,
                    height_pt=792,
                    shapes=[MarkupShape(rect=(72, 72, 144, 72), label="Title Block")],
                )
            ],
        )
        back = coco_to_markup(markup_to_coco([doc], dpi=300), dpi=300)
        rect = back[0].pages[0].shapes[0].rect
        for got, want in zip(rect, (72, 72, 144, 72)):
            assert abs(got - want) <= 0.5

    def test_empty_dataset(self):
        assert coco_to_markup(CocoDataset()) == []

    def test_random_documents_within_half_point(self):
        rng = random.Random(23)
        docs = [random_document(rng, f"doc{i}.pdf") for i in range(200)]
        recovered = coco_to_markup(markup_to_coco(docs, dpi=300), dpi=300)
        by_name = {d.file_name: d for d in recovered}
        for doc in docs:
            if not doc.pages:
                continue
            got = by_name[doc.file_name]
            assert len(got.pages) == len(doc.pages)
            for page, got_page in zip(doc.pages, got.pages):
                assert page.page_index == got_page.page_index
                assert len(got_page.shapes) == len(page.shapes)
                for shape, got_shape in zip(page.shapes, got_page.shapes):
                    assert got_shape.label == shape.label
                    for a, b in zip(shape.rect, got_shape.rect):
                        assert abs(a - b) <= 0.5

    def test_invalid_dataset_rejected(self):
        ds = CocoDataset(
            images=[{"id": 1, "file_name": "x#p0", "width": 100, "height": 100}],
            annotations=[
                {"id": 1, "image_id": 99, "category_id": 1, "bbox": [0, 0, 10, 10], "area": 100}
            ],
        )
        with pytest.raises(ValidationError):
            coco_to_markup(ds)


class TestValidateCoco:
    def valid_ds(self) -> CocoDataset:
        return CocoDataset(
            images=[{"id": 1, "file_name": "a#p0", "width": 100, "height": 100}],
            annotations=[
                {"id": 1, "image_id": 1, "category_id": 1, "bbox": [10, 10, 20, 20], "area": 400}
            ],
        )

    def test_valid_dataset(self):
        assert validate_coco(self.valid_ds()) == []

    def test_dangling_image_reference(self):
        ds = self.valid_ds()
        ds.annotations[0]["image_id"] = 99
        findings = validate_coco(ds)
        assert [f["code"] for f in findings] == ["dangling_image_ref"]

    def test_area_mismatch(self):
        ds = self.valid_ds()
        ds.annotations[0]["area"] = 5
        findings = validate_coco(ds)
        assert [f["code"] for f in findings] == ["area_mismatch"]

    def test_duplicate_ids(self):
        ds = self.valid_ds()
        ds.images.append(dict(ds.images[0]))
        codes = [f["code"] for f in validate_coco(ds)]
        assert "duplicate_image_id" in codes

    def test_bbox_outside_image(self):
        ds = self.valid_ds()
        ds.annotations[0]["bbox"] = [90, 90, 20, 20]
        ds.annotations[0]["area"] = 400
        codes = [f["code"] for f in validate_coco(ds)]
        assert "bbox_outside_image" in codes

    def test_unknown_category_name(self):
        ds = self.valid_ds()
        ds.categories.append({"id": 9, "name": "tables"})
        codes = [f["code"] for f in validate_coco(ds)]
        assert "unknown_category" in codes

    def test_file_round_trip(self, tmp_path):
        ds = self.valid_ds()
        path = tmp_path / "ds.json"
        ds.save(path)
        loaded = CocoDataset.load(path)
        assert loaded.to_json() == ds.to_json()
