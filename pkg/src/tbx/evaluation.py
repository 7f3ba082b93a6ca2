"""Evaluation protocols for detection and extraction.

Detection quality is scored per category with an IoU gate and
redundant-prediction suppression for title blocks (a drawing is
assumed to hold one title block, so near-duplicate hits on an
already-matched ground truth are neither TPs nor FPs). Extraction
quality is scored with gated fuzzy matching: edit distance up to 2 on
long or multi-word keys, up to 4 on values longer than 20 characters,
exact equality otherwise.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .detection import CATEGORIES, Detection, TITLE_BLOCK, iou
from .errors import MissingGroundTruth

KEY_FUZZY_DISTANCE = 2
KEY_LENGTH_GATE = 10
VALUE_FUZZY_DISTANCE = 4
VALUE_LENGTH_GATE = 20

# IoU above which an extra title-block prediction on an already-matched
# ground truth is suppressed instead of counted as a false positive
REDUNDANT_SUPPRESS_IOU = 0.5

_WS_RE = re.compile(r"\s+")


def levenshtein(a: str, b: str) -> int:
    """Edit distance with unit-cost insert/delete/substitute."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        curr = [i]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            curr.append(min(curr[j - 1] + 1, prev[j] + 1, prev[j - 1] + cost))
        prev = curr
    return prev[-1]


def _normalize(s: str) -> str:
    return _WS_RE.sub(" ", s.lower()).strip()


def fuzzy_key_match(pred: str, gt: str) -> bool:
    """Key comparison with the length/whitespace gate on the GT side."""
    p, g = _normalize(pred), _normalize(gt)
    if len(g) > KEY_LENGTH_GATE or " " in g:
        return levenshtein(p, g) <= KEY_FUZZY_DISTANCE
    return p == g


def fuzzy_value_match(pred: str, gt: str) -> bool:
    """Value comparison; fuzzy only for GT values longer than 20 chars."""
    p, g = _normalize(pred), _normalize(gt)
    if len(g) > VALUE_LENGTH_GATE:
        return levenshtein(p, g) <= VALUE_FUZZY_DISTANCE
    return p == g


@dataclass
class CategoryMetrics:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    # drawings where this category's region was found / looked for
    # (accuracy denominator differs between title block and the rest)
    found_drawings: int = 0
    total_drawings: int = 0

    @property
    def precision(self) -> float | None:
        return self.tp / (self.tp + self.fp) if (self.tp + self.fp) > 0 else None

    @property
    def recall(self) -> float | None:
        return self.tp / (self.tp + self.fn) if (self.tp + self.fn) > 0 else None

    @property
    def f1(self) -> float | None:
        p, r = self.precision, self.recall
        if p is None or r is None or (p + r) == 0:
            return None
        return 2 * p * r / (p + r)

    @property
    def accuracy(self) -> float | None:
        if self.total_drawings == 0:
            return None
        return self.found_drawings / self.total_drawings


@dataclass
class DetectionMetrics:
    per_category: dict[str, CategoryMetrics] = field(
        default_factory=lambda: {c: CategoryMetrics() for c in CATEGORIES}
    )

    def to_dict(self) -> dict:
        out = {}
        for cat, m in self.per_category.items():
            out[cat] = {
                "tp": m.tp,
                "fp": m.fp,
                "fn": m.fn,
                "accuracy": m.accuracy,
                "precision": m.precision,
                "recall": m.recall,
                "f1": m.f1,
            }
        return out

    def to_table(self) -> str:
        def fmt(v: float | None) -> str:
            return f"{v:.3f}" if v is not None else "-"

        lines = [f"{'Category':<14} {'Acc':>6} {'Pr':>6} {'Rec':>6} {'F1':>6} {'TP':>4} {'FP':>4} {'FN':>4}"]
        for cat, m in self.per_category.items():
            lines.append(
                f"{cat:<14} {fmt(m.accuracy):>6} {fmt(m.precision):>6} {fmt(m.recall):>6} "
                f"{fmt(m.f1):>6} {m.tp:>4} {m.fp:>4} {m.fn:>4}"
            )
        return "\n".join(lines)


@dataclass
class ExtractionMetrics:
    gt_keys: int = 0
    matched_keys: int = 0
    matched_values: int = 0

    @property
    def key_accuracy(self) -> float:
        return self.matched_keys / self.gt_keys if self.gt_keys else 0.0

    @property
    def value_accuracy(self) -> float:
        return self.matched_values / self.matched_keys if self.matched_keys else 0.0

    def to_dict(self) -> dict:
        return {
            "gt_keys": self.gt_keys,
            "matched_keys": self.matched_keys,
            "matched_values": self.matched_values,
            "key_accuracy": self.key_accuracy,
            "value_accuracy": self.value_accuracy,
        }


def evaluate_detections(
    preds: dict[str, list[Detection]],
    gts: dict[str, list[Detection]],
    iou_threshold: float = 0.7,
    suppress_iou: float = REDUNDANT_SUPPRESS_IOU,
) -> DetectionMetrics:
    """Score predictions against ground truth, drawing by drawing.

    Predictions are matched greedily in descending confidence to
    same-category GT boxes at IoU > iou_threshold. Once a title-block
    GT is matched, further title-block predictions overlapping it at
    IoU >= suppress_iou are ignored outright. Unmatched predictions
    are FPs, unmatched GTs are FNs.
    """
    unknown = set(preds) - set(gts)
    if unknown:
        raise MissingGroundTruth(f"no ground truth for drawings: {sorted(unknown)}")

    metrics = DetectionMetrics()
    for drawing, gt_dets in gts.items():
        pred_dets = preds.get(drawing, [])
        for cat in CATEGORIES:
            cat_gts = [d for d in gt_dets if d.category == cat]
            cat_preds = sorted(
                (d for d in pred_dets if d.category == cat),
                key=lambda d: (-d.confidence, d.box.x, d.box.y, d.box.w, d.box.h),
            )
            m = metrics.per_category[cat]
            matched_gt: set[int] = set()
            for pred in cat_preds:
                best_i, best_iou = -1, 0.0
                for i, gt in enumerate(cat_gts):
                    if i in matched_gt:
                        continue
                    v = iou(pred.box, gt.box)
                    if v > iou_threshold and v > best_iou:
                        best_i, best_iou = i, v
                if best_i >= 0:
                    matched_gt.add(best_i)
                    m.tp += 1
                    continue
                if cat == TITLE_BLOCK and any(
                    iou(pred.box, cat_gts[i].box) >= suppress_iou for i in matched_gt
                ):
                    continue  # redundant hit on an already-found title block
                m.fp += 1
            m.fn += len(cat_gts) - len(matched_gt)
            if cat == TITLE_BLOCK and cat_gts:
                m.total_drawings += 1
                if matched_gt:
                    m.found_drawings += 1
    # accuracy for the other categories is the fraction of GT instances
    # matched, which tp/fn already express
    for cat in CATEGORIES:
        if cat == TITLE_BLOCK:
            continue
        m = metrics.per_category[cat]
        m.total_drawings = m.tp + m.fn
        m.found_drawings = m.tp
    return metrics


def _record_items(rec) -> list[tuple[str, list[str]]]:
    """Key-values view over either a canonical record or a raw extraction."""
    if hasattr(rec, "fields"):
        return [(k, list(vs)) for k, vs in rec.fields.items()]
    if hasattr(rec, "pairs"):
        out: dict[str, list[str]] = {}
        for k, v in rec.pairs:
            out.setdefault(k, []).append(v)
        return list(out.items())
    if isinstance(rec, dict):
        return [(k, v if isinstance(v, list) else [v]) for k, v in rec.items()]
    raise TypeError(f"cannot evaluate record of type {type(rec).__name__}")


def evaluate_extraction(preds: dict, gts: dict) -> ExtractionMetrics:
    """Key/value accuracy of predicted records against ground truth.

    GT keys are matched greedily in order to at most one predicted key
    each, preferring the smallest edit distance (ties break on the
    lexicographically smallest predicted key). A matched key counts as
    a value hit when any predicted value fuzzy-matches any GT value.
    """
    unknown = set(preds) - set(gts)
    if unknown:
        raise MissingGroundTruth(f"no ground truth for drawings: {sorted(unknown)}")

    metrics = ExtractionMetrics()
    for drawing, gt_rec in gts.items():
        gt_items = _record_items(gt_rec)
        pred_items = _record_items(preds[drawing]) if drawing in preds else []
        available = dict(pred_items)
        for gt_key, gt_values in gt_items:
            metrics.gt_keys += 1
            candidates = [
                (levenshtein(_normalize(pk), _normalize(gt_key)), pk)
                for pk in available
                if fuzzy_key_match(pk, gt_key)
            ]
            if not candidates:
                continue
            candidates.sort()
            _, pred_key = candidates[0]
            pred_values = available.pop(pred_key)
            metrics.matched_keys += 1
            if any(fuzzy_value_match(pv, gv) for gv in gt_values for pv in pred_values):
                metrics.matched_values += 1
    return metrics
