"""End-to-end inference: detect, crop, extract, canonicalize, store.

Failures degrade to statuses rather than exceptions; a batch over
thousands of scans must not abort because one file is broken. Reruns
are idempotent per drawing, so restarting a batch is always safe.
"""
from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .canonicalize import CanonicalRecord, SynonymDictionary, merge_pairs
from .detection import (
    Detection,
    PageImage,
    crop_region,
    load_page_image,
    load_precomputed,
    select_title_block,
)
from .errors import DataError, ExternalServiceError, OutOfBounds, PersistenceError
from .extraction import ExtractorConfig, RawExtraction, extract_via_llm, mock_extract
from .heuristic import HeuristicConfig, heuristic_detect
from .store import RecordStore

logger = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".tif", ".tiff")

STATUS_OK = "ok"
STATUS_NO_TITLE_BLOCK = "no_title_block"
STATUS_EXTRACTION_FAILED = "extraction_failed"


@dataclass
class PipelineConfig:
    detector_backend: str = "heuristic"     # "precomputed" | "heuristic"
    extractor_backend: str = "mock"         # "llm" | "mock"
    dictionary_path: str | None = None
    crop_padding: float = 8
    concurrency: int = 4
    data_dir: str | Path | None = None
    detections_path: str | None = None      # precomputed detector input
    fixtures_dir: str | None = None         # mock extractor input
    llm: ExtractorConfig | None = None      # defaults to env configuration
    save_thumbnails: bool = True
    heuristic: HeuristicConfig = field(default_factory=HeuristicConfig)

    def validate(self) -> None:
        if self.detector_backend not in ("precomputed", "heuristic"):
            raise DataError(f"unknown detector backend {self.detector_backend!r}")
        if self.extractor_backend not in ("llm", "mock"):
            raise DataError(f"unknown extractor backend {self.extractor_backend!r}")
        if self.concurrency < 1:
            raise DataError("concurrency limit must be >= 1")
        if self.detector_backend == "precomputed":
            if not self.detections_path or not Path(self.detections_path).is_file():
                raise DataError("precomputed backend needs an existing --detections file")
        if self.extractor_backend == "mock":
            if not self.fixtures_dir or not Path(self.fixtures_dir).is_dir():
                raise DataError("mock backend needs an existing --fixtures directory")
        if self.dictionary_path and not Path(self.dictionary_path).is_file():
            raise DataError(f"dictionary file not found: {self.dictionary_path}")


@dataclass
class PipelineResult:
    drawing_id: str
    status: str
    detection: Detection | None = None
    raw: RawExtraction | None = None
    record: CanonicalRecord | None = None
    timings: dict[str, float] = field(default_factory=dict)
    error: str | None = None

    def to_json(self) -> dict:
        det = None
        if self.detection is not None:
            b = self.detection.box
            det = {
                "bbox": [b.x, b.y, b.w, b.h],
                "category": self.detection.category,
                "confidence": self.detection.confidence,
            }
        return {
            "drawing_id": self.drawing_id,
            "status": self.status,
            "detection": det,
            "pairs": list(map(list, self.raw.pairs)) if self.raw else None,
            "record": self.record.to_json() if self.record else None,
            "timings_ms": self.timings,
            "error": self.error,
        }


@dataclass
class BatchReport:
    results: list[PipelineResult] = field(default_factory=list)
    failures: list[tuple[str, str]] = field(default_factory=list)

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for r in self.results:
            out[r.status] = out.get(r.status, 0) + 1
        if self.failures:
            out["unreadable"] = len(self.failures)
        return out

    def to_json(self) -> dict:
        return {
            "results": [r.to_json() for r in self.results],
            "failures": [{"path": p, "error": e} for p, e in self.failures],
            "counts": self.counts(),
        }


class Pipeline:
    """Holds the store, dictionary and backend state for many runs."""

    def __init__(self, cfg: PipelineConfig, store: RecordStore | None = None):
        cfg.validate()
        self.cfg = cfg
        self.dictionary = (
            SynonymDictionary.load(cfg.dictionary_path)
            if cfg.dictionary_path
            else SynonymDictionary.default()
        )
        self.store = store if store is not None else RecordStore(cfg.data_dir)
        self._precomputed: dict[str, list[Detection]] | None = None
        if cfg.detector_backend == "precomputed":
            self._precomputed = load_precomputed(cfg.detections_path)

    def detect(self, img: PageImage) -> list[Detection]:
        if self._precomputed is not None:
            return self._precomputed.get(img.drawing_id, [])
        return heuristic_detect(img, self.cfg.heuristic)

    def extract(self, crop: PageImage) -> RawExtraction:
        if self.cfg.extractor_backend == "mock":
            return mock_extract(crop.drawing_id, self.cfg.fixtures_dir)
        llm_cfg = self.cfg.llm or ExtractorConfig.from_env()
        return extract_via_llm(crop, llm_cfg)

    def run(self, img: PageImage, source_file: str | None = None) -> PipelineResult:
        """Process one page image end to end.

        Status captures what went wrong; the store gains a record only
        on full success, so a rerun always replaces cleanly.
        """
        result = PipelineResult(drawing_id=img.drawing_id, status=STATUS_OK)

        t0 = time.perf_counter()
        detections = self.detect(img)
        winner = select_title_block(detections)
        result.timings["detect_ms"] = (time.perf_counter() - t0) * 1000.0
        if winner is None:
            result.status = STATUS_NO_TITLE_BLOCK
            return result
        result.detection = winner

        t0 = time.perf_counter()
        try:
            crop = crop_region(img, winner.box, self.cfg.crop_padding)
            raw = self.extract(crop)
        except (ExternalServiceError, DataError, OutOfBounds) as exc:
            result.status = STATUS_EXTRACTION_FAILED
            result.error = str(exc)
            result.timings["extract_ms"] = (time.perf_counter() - t0) * 1000.0
            return result
        result.raw = raw
        result.timings["extract_ms"] = (time.perf_counter() - t0) * 1000.0

        t0 = time.perf_counter()
        record = merge_pairs(raw, self.dictionary)
        record.source_file = source_file
        result.record = record
        result.timings["canonicalize_ms"] = (time.perf_counter() - t0) * 1000.0

        t0 = time.perf_counter()
        self._save_thumbnail(crop)
        self.store.upsert(record)
        result.timings["store_ms"] = (time.perf_counter() - t0) * 1000.0
        return result

    def _save_thumbnail(self, crop: PageImage) -> None:
        if not (self.cfg.save_thumbnails and self.cfg.data_dir):
            return
        thumb_dir = Path(self.cfg.data_dir) / "thumbnails"
        thumb_dir.mkdir(parents=True, exist_ok=True)
        (thumb_dir / f"{crop.drawing_id}.png").write_bytes(crop.to_png_bytes())

    def batch(self, directory: str | Path) -> BatchReport:
        """Process every supported image under a directory.

        Work is bounded by the configured concurrency; per-file
        failures are recorded and the batch continues.
        """
        directory = Path(directory)
        paths = sorted(
            p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES
        )
        report = BatchReport()

        def process(path: Path):
            img = load_page_image(path)
            return self.run(img, source_file=path.name)

        with ThreadPoolExecutor(max_workers=self.cfg.concurrency) as pool:
            futures = {pool.submit(process, p): p for p in paths}
            for future, path in futures.items():
                try:
                    report.results.append(future.result())
                except PersistenceError:
                    raise
                except Exception as exc:
                    logger.warning("failed to process %s: %s", path, exc)
                    report.failures.append((str(path), str(exc)))
        report.results.sort(key=lambda r: r.drawing_id)
        return report


def run_pipeline(img: PageImage, cfg: PipelineConfig) -> PipelineResult:
    """One-shot convenience wrapper around Pipeline.run."""
    return Pipeline(cfg).run(img)


def batch_process(directory: str | Path, cfg: PipelineConfig) -> BatchReport:
    """One-shot convenience wrapper around Pipeline.batch."""
    return Pipeline(cfg).batch(directory)
