"""HTTP API over the pipeline, store and search.

Single-node service: one pipeline instance, its record store, and an
in-memory registry of drawing files. Rename is two-phase; a plan is
cached under its content hash and applied only when that hash comes
back, so nothing on disk moves without an explicit confirmation.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse, JSONResponse
from pydantic import BaseModel

from . import coco as coco_mod
from .detection import Detection, load_page_image, load_precomputed
from .errors import DataError, ExternalServiceError, QuerySyntaxError, UnknownKey
from .evaluation import evaluate_detections, evaluate_extraction
from .pipeline import Pipeline, PipelineConfig
from .query import eval_query, parse_query, print_query
from .store import (
    apply_rename_plan,
    group_by,
    keyword_summary,
    load_records_file,
    rename_plan,
    RenamePlan,
)


class RegisterBody(BaseModel):
    path: str
    drawing_id: str | None = None


class BatchBody(BaseModel):
    directory: str


class TemplateBody(BaseModel):
    template: str


class ApplyBody(BaseModel):
    hash: str
    root: str | None = None


class EvalDetectionsBody(BaseModel):
    pred_path: str
    gt_path: str  # COCO file


class EvalExtractionBody(BaseModel):
    pred_path: str
    gt_path: str  # canonical records file


def _plan_hash(plan: RenamePlan) -> str:
    payload = json.dumps(plan.to_json(), sort_keys=True).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


def coco_to_gt_detections(ds: coco_mod.CocoDataset) -> dict[str, list[Detection]]:
    """Ground-truth detections keyed by COCO image file_name."""
    from .detection import BoundingBox

    names = {c["id"]: c["name"] for c in ds.categories}
    by_image = {im["id"]: im["file_name"] for im in ds.images}
    out: dict[str, list[Detection]] = {name: [] for name in by_image.values()}
    for ann in ds.annotations:
        x, y, w, h = ann["bbox"]
        out[by_image[ann["image_id"]]].append(
            Detection(
                box=BoundingBox(x, y, w, h),
                category=names[ann["category_id"]],
                confidence=1.0,
            )
        )
    return out


def create_app(
    cfg: PipelineConfig | None = None,
    pipeline: Pipeline | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    if pipeline is None:
        pipeline = Pipeline(cfg or PipelineConfig(detector_backend="heuristic", extractor_backend="llm"))
    cfg = pipeline.cfg

    app = FastAPI(title="tbx", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.pipeline = pipeline
    app.state.registry = {}
    app.state.plans = {}

    store = pipeline.store
    dictionary = pipeline.dictionary

    @app.exception_handler(DataError)
    async def data_error_handler(_, exc: DataError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(ExternalServiceError)
    async def external_error_handler(_, exc: ExternalServiceError):
        return JSONResponse(status_code=502, content={"error": str(exc)})

    @app.post("/api/drawings")
    def register_drawing(body: RegisterBody):
        path = Path(body.path)
        if not path.is_file():
            raise HTTPException(status_code=404, detail=f"no such file: {body.path}")
        drawing_id = body.drawing_id or path.stem
        app.state.registry[drawing_id] = str(path)
        return {"drawing_id": drawing_id}

    @app.post("/api/drawings/{drawing_id}/process")
    def process_drawing(drawing_id: str):
        path = app.state.registry.get(drawing_id)
        if path is None:
            raise HTTPException(status_code=404, detail=f"unknown drawing {drawing_id!r}")
        img = load_page_image(path, drawing_id=drawing_id)
        result = pipeline.run(img, source_file=Path(path).name)
        return result.to_json()

    @app.post("/api/batch")
    def batch(body: BatchBody):
        directory = Path(body.directory)
        if not directory.is_dir():
            raise HTTPException(status_code=404, detail=f"no such directory: {body.directory}")
        return pipeline.batch(directory).to_json()

    @app.get("/api/records/{drawing_id}")
    def get_record(drawing_id: str):
        record = store.get(drawing_id)
        if record is None:
            raise HTTPException(status_code=404, detail=f"no record for {drawing_id!r}")
        return record.to_json()

    @app.get("/api/search")
    def search(q: str = Query(default="")):
        normalized = ""
        if not q.strip():
            ids = store.ids()  # the empty conjunction matches everything
        else:
            try:
                ast = parse_query(q, dictionary)
            except QuerySyntaxError as exc:
                return JSONResponse(
                    status_code=400,
                    content={"error": str(exc), "offset": exc.offset, "expected": exc.expected},
                )
            except UnknownKey as exc:
                return JSONResponse(status_code=400, content={"error": str(exc)})
            normalized = print_query(ast)
            ids = eval_query(ast, store)
        results = []
        for drawing_id in ids:
            record = store.get(drawing_id)
            thumb = None
            if cfg.data_dir and (Path(cfg.data_dir) / "thumbnails" / f"{drawing_id}.png").is_file():
                thumb = f"/api/thumbnails/{drawing_id}.png"
            results.append(
                {
                    "drawing_id": drawing_id,
                    "fields": record.fields if record else {},
                    "thumbnail": thumb,
                }
            )
        return {"ids": ids, "results": results, "query": normalized}

    @app.get("/api/thumbnails/{name}")
    def thumbnail(name: str):
        if not cfg.data_dir:
            raise HTTPException(status_code=404, detail="no thumbnails configured")
        path = Path(cfg.data_dir) / "thumbnails" / name
        if not path.is_file():
            raise HTTPException(status_code=404, detail="no such thumbnail")
        return FileResponse(path, media_type="image/png")

    @app.get("/api/keys")
    def keys():
        return keyword_summary(store)

    @app.get("/api/groups")
    def groups(key: str = Query(...)):
        resolved = dictionary.resolve(key)
        if resolved is None:
            raise UnknownKey(f"unknown key {key!r}")
        return group_by(store, resolved.id, dictionary)

    @app.post("/api/rename-plan")
    def make_rename_plan(body: TemplateBody):
        plan = rename_plan(store, body.template, dictionary)
        digest = _plan_hash(plan)
        app.state.plans[digest] = plan
        payload = plan.to_json()
        payload["hash"] = digest
        return payload

    @app.post("/api/rename-apply")
    def apply_plan(body: ApplyBody):
        plan = app.state.plans.get(body.hash)
        if plan is None:
            raise HTTPException(status_code=404, detail="unknown plan hash; request a fresh plan")
        root = Path(body.root) if body.root else (Path(cfg.data_dir or ".") / "drawings")
        if not root.is_dir():
            raise HTTPException(status_code=400, detail=f"rename root {root} is not a directory")
        return {"outcomes": apply_rename_plan(plan, root)}

    @app.post("/api/eval/detections")
    def eval_detections(body: EvalDetectionsBody):
        preds = load_precomputed(body.pred_path)
        gts = coco_to_gt_detections(coco_mod.CocoDataset.load(body.gt_path))
        return evaluate_detections(preds, gts).to_dict()

    @app.post("/api/eval/extraction")
    def eval_extraction(body: EvalExtractionBody):
        preds = load_records_file(body.pred_path)
        gts = load_records_file(body.gt_path)
        return evaluate_extraction(preds, gts).to_dict()

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        # mounted last so /api/* keeps priority
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
