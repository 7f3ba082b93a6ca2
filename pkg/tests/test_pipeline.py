"""End-to-end pipeline behaviour over synthetic sheets."""
from __future__ import annotations

import numpy as np
import pytest
from PIL import Image

from tbx.detection import PageImage
from tbx.extraction import ExtractorConfig
from tbx.pipeline import Pipeline, PipelineConfig, batch_process, run_pipeline
from tbx.synthetic import make_sheet

from conftest import CROPPED_BLOCK_OUTPUT


def write_sheet(path, drawing_id, seed):
    img, planted = make_sheet(drawing_id, seed=seed, placement="right")
    Image.fromarray(img.pixels).save(path)
    return img, planted


def simple_body(i: int) -> str:
    return (
        f'"Drawing Title": "PLAN L{i:02d}",\n'
        f'"Drawing No.": "B{i}/10",\n'
        f'"Scale": "1:10",\n'
        f'"Date": "0{(i % 9) + 1}/197{i % 10}"\n'
    )


@pytest.fixture()
def workspace(tmp_path):
    drawings = tmp_path / "drawings"
    fixtures = tmp_path / "fixtures"
    data = tmp_path / "data"
    drawings.mkdir()
    fixtures.mkdir()
    for i in range(5):
        did = f"d{i}"
        write_sheet(drawings / f"{did}.png", did, seed=100 + i)
        body = CROPPED_BLOCK_OUTPUT if i == 0 else simple_body(i)
        (fixtures / f"{did}.txt").write_text(body, encoding="utf-8")
    return {"drawings": drawings, "fixtures": fixtures, "data": data}


def mock_cfg(workspace, **kwargs) -> PipelineConfig:
    defaults = dict(
        detector_backend="heuristic",
        extractor_backend="mock",
        fixtures_dir=str(workspace["fixtures"]),
        data_dir=workspace["data"],
    )
    defaults.update(kwargs)
    return PipelineConfig(**defaults)


class TestRunPipeline:
    def test_ok_flow(self, workspace):
        import time

        img, _ = make_sheet("d0", seed=100, placement="right")
        started = time.perf_counter()
        result = run_pipeline(img, mock_cfg(workspace))
        wall_ms = (time.perf_counter() - started) * 1000.0
        assert result.status == "ok"
        assert result.record.fields["drawing_title"] == ["SECTION LEVEL 00"]
        assert result.detection is not None
        assert all(v >= 0 for v in result.timings.values())
        assert sum(result.timings.values()) <= wall_ms

    def test_blank_page_no_title_block(self, workspace):
        blank = PageImage(drawing_id="blank", pixels=np.full((700, 1000), 255, dtype=np.uint8))
        result = run_pipeline(blank, mock_cfg(workspace))
        assert result.status == "no_title_block"
        assert result.record is None

    def test_missing_fixture_fails_without_store_write(self, workspace):
        img, _ = make_sheet("ghost", seed=4, placement="right")
        pipeline = Pipeline(mock_cfg(workspace))
        result = pipeline.run(img)
        assert result.status == "extraction_failed"
        assert result.detection is not None
        assert pipeline.store.get("ghost") is None

    def test_unreachable_llm_endpoint(self, workspace, monkeypatch):
        monkeypatch.setattr("tbx.extraction.time.sleep", lambda s: None)
        cfg = mock_cfg(
            workspace,
            extractor_backend="llm",
            fixtures_dir=None,
            llm=ExtractorConfig(endpoint_url="http://127.0.0.1:1/x", timeout=0.2, max_retries=0),
        )
        img, _ = make_sheet("d0", seed=100, placement="right")
        pipeline = Pipeline(cfg)
        result = pipeline.run(img)
        assert result.status == "extraction_failed"
        assert pipeline.store.get("d0") is None

    def test_rerun_replaces_record(self, workspace):
        img, _ = make_sheet("d1", seed=101, placement="right")
        pipeline = Pipeline(mock_cfg(workspace))
        first = pipeline.run(img)
        (workspace["fixtures"] / "d1.txt").write_text('"Scale": "1:999"', encoding="utf-8")
        second = pipeline.run(img)
        assert first.status == second.status == "ok"
        assert pipeline.store.get("d1").fields["scale"] == ["1:999"]
        assert len(pipeline.store) == 1

    def test_thumbnail_saved(self, workspace):
        img, _ = make_sheet("d0", seed=100, placement="right")
        run_pipeline(img, mock_cfg(workspace))
        assert (workspace["data"] / "thumbnails" / "d0.png").is_file()

    def test_invalid_config_rejected(self, workspace):
        with pytest.raises(Exception):
            PipelineConfig(detector_backend="psychic").validate()
        with pytest.raises(Exception):
            mock_cfg(workspace, concurrency=0).validate()


class TestBatchProcess:
    def test_full_directory(self, workspace):
        report = batch_process(workspace["drawings"], mock_cfg(workspace))
        assert len(report.results) == 5
        assert report.counts() == {"ok": 5}
        store_ids = Pipeline(mock_cfg(workspace)).store.ids()
        assert store_ids == [f"d{i}" for i in range(5)]
        # source file names recorded for later rename plans
        recs = [r.record for r in report.results]
        assert all(rec.source_file.endswith(".png") for rec in recs)

    def test_empty_directory(self, tmp_path, workspace):
        empty = tmp_path / "empty"
        empty.mkdir()
        report = batch_process(empty, mock_cfg(workspace))
        assert report.results == []

    def test_unreadable_file_isolated(self, workspace):
        (workspace["drawings"] / "broken.png").write_text("not a png")
        report = batch_process(workspace["drawings"], mock_cfg(workspace))
        assert len(report.results) == 5
        assert len(report.failures) == 1
        assert "broken.png" in report.failures[0][0]
        assert report.counts()["unreadable"] == 1

    def test_concurrency_invariance(self, workspace, tmp_path):
        data1 = tmp_path / "s1"
        data8 = tmp_path / "s8"
        r1 = batch_process(workspace["drawings"], mock_cfg(workspace, data_dir=data1, concurrency=1))
        r8 = batch_process(workspace["drawings"], mock_cfg(workspace, data_dir=data8, concurrency=8))
        key = lambda rep: sorted((r.drawing_id, r.status) for r in rep.results)
        assert key(r1) == key(r8)
        from tbx.store import RecordStore

        assert RecordStore(data1).state() == RecordStore(data8).state()
