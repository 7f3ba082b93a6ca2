"""Walkthrough: both evaluation protocols on a tiny worked example.

Detection: IoU-gated matching at 0.7 with suppression of redundant
title-block hits. Extraction: gated fuzzy key/value accuracy.

    python3 demos/04_evaluate_detection_extraction.py
"""
from tbx import BoundingBox, Detection, evaluate_detections, evaluate_extraction

gt_box = BoundingBox(100, 100, 400, 200)
gts = {
    "sheet-1": [Detection(box=gt_box, category="title_block", confidence=1.0)],
    "sheet-2": [Detection(box=BoundingBox(50, 50, 300, 150), category="title_block", confidence=1.0)],
}
preds = {
    "sheet-1": [
        # on target, and a slightly shifted duplicate that gets suppressed
        Detection(box=BoundingBox(105, 100, 400, 200), category="title_block", confidence=0.95),
        Detection(box=BoundingBox(120, 100, 400, 200), category="title_block", confidence=0.70),
    ],
    "sheet-2": [
        Detection(box=BoundingBox(52, 50, 300, 150), category="title_block", confidence=0.90),
        # a stray box elsewhere counts as a false positive
        Detection(box=BoundingBox(900, 900, 80, 60), category="title_block", confidence=0.40),
    ],
}

metrics = evaluate_detections(preds, gts)
print(metrics.to_table())

gt_records = {
    "sheet-1": {
        "drawing_title": ["SECTION LEVEL 00"],
        "status": ["ISSUED FOR CONSTRUCTION"],
        "scale": ["1:10"],
    }
}
pred_records = {
    "sheet-1": {
        "drawing_title": ["SECTION LEVEL 00"],
        "status": ["ISSUED FOR CONSTRUCTON"],  # one dropped letter: fuzzy value hit
        "scale": ["1:20"],                      # short value: exact match required
    }
}
ext = evaluate_extraction(pred_records, gt_records)
print(f"\nkey accuracy:   {ext.key_accuracy:.2f}")
print(f"value accuracy: {ext.value_accuracy:.2f}  (typo tolerated, wrong scale not)")
