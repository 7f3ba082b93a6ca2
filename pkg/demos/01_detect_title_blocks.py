"""Walkthrough: find the title block on a sheet without any ML.

Generates a synthetic drawing with a planted, ruled title block, runs
the line-intersection detector over it and compares the winning box
against the plant. Run from the repo root:

    python3 demos/01_detect_title_blocks.py
"""
from pathlib import Path

from PIL import Image

from tbx import crop_region, heuristic_detect, iou, select_title_block
from tbx.synthetic import make_sheet

out_dir = Path("demo-output")
out_dir.mkdir(exist_ok=True)

img, planted = make_sheet("demo", seed=42, placement="right")
print(f"sheet: {img.width}x{img.height}px, planted block at {planted}")

detections = heuristic_detect(img)
print(f"\ncandidates ({len(detections)}):")
for det in detections:
    print(f"  conf={det.confidence:.3f}  {det.box}")

winner = select_title_block(detections)
print(f"\nwinner: {winner.box}  IoU vs plant = {iou(winner.box, planted):.3f}")

crop = crop_region(img, winner.box, pad=8)
Image.fromarray(img.pixels).save(out_dir / "sheet.png")
Image.fromarray(crop.pixels).save(out_dir / "title_block.png")
print(f"\nwrote {out_dir}/sheet.png and {out_dir}/title_block.png")
