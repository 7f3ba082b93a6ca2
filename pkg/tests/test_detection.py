"""Boxes, IoU, winner selection, cropping and the wire format."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tbx.detection import (
    BoundingBox,
    Detection,
    PageImage,
    crop_region,
    detection_to_wire,
    iou,
    load_precomputed,
    select_title_block,
)
from tbx.errors import ConfidenceOutOfRange, InvalidCategory, OutOfBounds, ParseError


def pixel_iou(a: BoundingBox, b: BoundingBox, grid: int = 400) -> float:
    """Rasterization oracle: count covered cells on an integer grid."""
    ga = np.zeros((grid, grid), dtype=bool)
    gb = np.zeros((grid, grid), dtype=bool)
    ga[int(a.y) : int(a.y2), int(a.x) : int(a.x2)] = True
    gb[int(b.y) : int(b.y2), int(b.x) : int(b.x2)] = True
    inter = int(np.logical_and(ga, gb).sum())
    union = int(np.logical_or(ga, gb).sum())
    return inter / union if union else 0.0


int_boxes = st.builds(
    BoundingBox,
    x=st.integers(0, 180),
    y=st.integers(0, 180),
    w=st.integers(1, 60),
    h=st.integers(1, 60),
)


class TestIou:
    def test_identical(self):
        a = BoundingBox(0, 0, 10, 10)
        assert iou(a, BoundingBox(0, 0, 10, 10)) == 1.0

    def test_disjoint(self):
        assert iou(BoundingBox(0, 0, 10, 10), BoundingBox(20, 20, 5, 5)) == 0.0

    def test_partial_overlap(self):
        a = BoundingBox(0, 0, 10, 10)
        b = BoundingBox(5, 5, 10, 10)
        expected = pixel_iou(a, b)  # 25 / 175
        assert iou(a, b) == expected
        assert abs(iou(a, b) - 25 / 175) < 1e-12

    @given(int_boxes, int_boxes)
    def test_symmetry(self, a, b):
        assert iou(a, b) == iou(b, a)

    @given(int_boxes)
    def test_self_is_one(self, a):
        assert iou(a, a) == 1.0

    @given(int_boxes, int_boxes)
    def test_matches_rasterization(self, a, b):
        assert iou(a, b) == pixel_iou(a, b)

    def test_degenerate_boxes_rejected(self):
        with pytest.raises(ValueError):
            BoundingBox(0, 0, 0, 10)
        with pytest.raises(ValueError):
            BoundingBox(-1, 0, 5, 5)


def tb(conf, x=0.0, y=0.0, w=10.0, h=10.0, category="title_block"):
    return Detection(box=BoundingBox(x, y, w, h), category=category, confidence=conf)


class TestSelectTitleBlock:
    def test_empty(self):
        assert select_title_block([]) is None

    def test_highest_confidence_wins(self):
        dets = [tb(0.9), tb(0.7, x=50), tb(0.95, category="legend")]
        assert select_title_block(dets) is dets[0]

    def test_other_categories_never_selected(self):
        dets = [tb(0.99, category="legend"), tb(0.98, category="notes")]
        assert select_title_block(dets) is None

    def test_tie_breaks_on_position(self):
        a = tb(0.8, x=5, y=5)
        b = tb(0.8, x=0, y=0)
        # exhaustive check over both orders
        assert select_title_block([a, b]) is b
        assert select_title_block([b, a]) is b

    def test_result_dominates_all_title_blocks(self):
        dets = [tb(0.3, x=1), tb(0.6, x=2), tb(0.5, x=3), tb(0.9, category="notes")]
        winner = select_title_block(dets)
        assert winner.category == "title_block"
        assert all(winner.confidence >= d.confidence for d in dets if d.category == "title_block")


class TestCropRegion:
    def make_img(self, w=100, h=100):
        pixels = np.arange(w * h, dtype=np.uint32).reshape(h, w).astype(np.uint8)
        return PageImage(drawing_id="d", pixels=pixels)

    def test_interior_crop_exact(self):
        crop = crop_region(self.make_img(), BoundingBox(10, 10, 20, 20), pad=0)
        assert (crop.width, crop.height) == (20, 20)
        np.testing.assert_array_equal(crop.pixels, self.make_img().pixels[10:30, 10:30])

    def test_clamped_to_bounds(self):
        crop = crop_region(self.make_img(), BoundingBox(90, 90, 20, 20), pad=5)
        assert (crop.width, crop.height) == (15, 15)

    def test_disjoint_raises(self):
        with pytest.raises(OutOfBounds):
            crop_region(self.make_img(), BoundingBox(200, 200, 10, 10), pad=0)

    @given(
        st.integers(0, 99), st.integers(0, 99),
        st.integers(1, 60), st.integers(1, 60),
        st.integers(0, 12),
    )
    def test_never_exceeds_source(self, x, y, w, h, pad):
        img = self.make_img()
        crop = crop_region(img, BoundingBox(x, y, w, h), pad=pad)
        assert crop.width <= img.width and crop.height <= img.height


class TestWireFormat:
    def test_round_trip_single_record(self, tmp_path):
        line = '{"drawing_id": "d1", "category": "title_block", "bbox": [10, 10, 200, 80], "confidence": 0.97}'
        path = tmp_path / "dets.ndjson"
        path.write_text(line + "\n", encoding="utf-8")
        loaded = load_precomputed(path)
        assert set(loaded) == {"d1"}
        det = loaded["d1"][0]
        assert det.category == "title_block"
        assert det.confidence == 0.97
        assert (det.box.x, det.box.y, det.box.w, det.box.h) == (10, 10, 200, 80)
        # writer emits a line the reader accepts
        path.write_text(detection_to_wire("d1", det) + "\n", encoding="utf-8")
        assert load_precomputed(path)["d1"][0] == det

    def test_confidence_out_of_range(self, tmp_path):
        path = tmp_path / "dets.ndjson"
        path.write_text(
            '{"drawing_id": "d1", "category": "title_block", "bbox": [0, 0, 1, 1], "confidence": 1.3}\n'
        )
        with pytest.raises(ConfidenceOutOfRange):
            load_precomputed(path)

    def test_invalid_category(self, tmp_path):
        path = tmp_path / "dets.ndjson"
        path.write_text(
            '{"drawing_id": "d1", "category": "tables", "bbox": [0, 0, 1, 1], "confidence": 0.5}\n'
        )
        with pytest.raises(InvalidCategory):
            load_precomputed(path)

    def test_malformed_json_reports_line(self, tmp_path):
        path = tmp_path / "dets.ndjson"
        path.write_text(
            '{"drawing_id": "d1", "category": "notes", "bbox": [0, 0, 1, 1], "confidence": 0.5}\n'
            "{broken\n"
        )
        with pytest.raises(ParseError) as exc_info:
            load_precomputed(path)
        assert exc_info.value.line == 2

    def test_unknown_fields_ignored(self, tmp_path):
        path = tmp_path / "dets.ndjson"
        path.write_text(
            '{"drawing_id": "d1", "category": "legend", "bbox": [0, 0, 5, 5], "confidence": 0.5, "extra": true}\n'
        )
        assert len(load_precomputed(path)["d1"]) == 1

    def test_grouping_by_drawing(self, tmp_path):
        lines = [
            '{"drawing_id": "a", "category": "title_block", "bbox": [0, 0, 5, 5], "confidence": 0.5}',
            '{"drawing_id": "b", "category": "notes", "bbox": [0, 0, 5, 5], "confidence": 0.5}',
            '{"drawing_id": "a", "category": "legend", "bbox": [1, 1, 5, 5], "confidence": 0.9}',
        ]
        path = tmp_path / "dets.ndjson"
        path.write_text("\n".join(lines) + "\n")
        loaded = load_precomputed(path)
        assert len(loaded["a"]) == 2
        assert len(loaded["b"]) == 1
