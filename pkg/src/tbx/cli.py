"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 external-service
error. The data directory defaults to TBX_DATA_DIR (falling back to
./tbx-data); LLM access is configured through TBX_LLM_ENDPOINT,
TBX_LLM_API_KEY and TBX_LLM_MODEL.
"""
from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from . import coco as coco_mod
from .canonicalize import SynonymDictionary
from .detection import detection_to_wire, load_page_image, load_precomputed
from .errors import DataError, ExternalServiceError, QuerySyntaxError, UnknownKey
from .evaluation import evaluate_detections, evaluate_extraction
from .extraction import ExtractorConfig, extract_via_llm, mock_extract
from .heuristic import heuristic_detect
from .pipeline import Pipeline, PipelineConfig
from .query import eval_query, parse_query
from .store import (
    RecordStore,
    apply_rename_plan,
    group_by,
    keyword_summary,
    load_records_file,
    rename_plan,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_SERVICE = 3


def default_data_dir() -> str:
    return os.environ.get("TBX_DATA_DIR", "./tbx-data")


def _dictionary(path: str | None) -> SynonymDictionary:
    return SynonymDictionary.load(path) if path else SynonymDictionary.default()


@click.group()
def cli():
    """Title-block metadata extraction and search."""


@cli.command()
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--data-dir", default=None, help="Override TBX_DATA_DIR.")
def ingest(directory, data_dir):
    """Register drawing files so later commands can find them."""
    data = Path(data_dir or default_data_dir())
    data.mkdir(parents=True, exist_ok=True)
    registry_path = data / "registry.json"
    registry = {}
    if registry_path.exists():
        registry = json.loads(registry_path.read_text(encoding="utf-8"))
    count = 0
    for path in sorted(Path(directory).iterdir()):
        if path.suffix.lower() in (".png", ".jpg", ".jpeg", ".tif", ".tiff", ".pdf"):
            registry[path.stem] = str(path.resolve())
            count += 1
    registry_path.write_text(json.dumps(registry, indent=2), encoding="utf-8")
    click.echo(f"registered {count} drawings ({len(registry)} total)")


@cli.command()
@click.argument("images", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--backend", type=click.Choice(["heuristic", "precomputed"]), default="heuristic")
@click.option("--detections", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Wire-format file for the precomputed backend.")
def detect(images, backend, detections):
    """Detect title blocks; prints wire-format lines."""
    if backend == "precomputed":
        if not detections:
            raise click.UsageError("--detections is required with the precomputed backend")
        precomputed = load_precomputed(detections)
    else:
        precomputed = None
    for image_path in images:
        img = load_page_image(image_path)
        dets = precomputed.get(img.drawing_id, []) if precomputed is not None else heuristic_detect(img)
        for det in dets:
            click.echo(detection_to_wire(img.drawing_id, det))


@cli.command()
@click.argument("target")
@click.option("--backend", type=click.Choice(["llm", "mock"]), default="mock")
@click.option("--fixtures", type=click.Path(exists=True, file_okay=False), default=None,
              help="Fixture directory for the mock backend (target = drawing id).")
def extract(target, backend, fixtures):
    """Extract raw pairs from a title-block crop image (llm) or fixture (mock)."""
    if backend == "mock":
        if not fixtures:
            raise click.UsageError("--fixtures is required with the mock backend")
        raw = mock_extract(target, fixtures)
    else:
        img = load_page_image(target)
        raw = extract_via_llm(img, ExtractorConfig.from_env())
    click.echo(json.dumps({"drawing_id": raw.drawing_id, "pairs": list(map(list, raw.pairs))}, indent=2))


@cli.command()
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--detector", type=click.Choice(["heuristic", "precomputed"]), default="heuristic")
@click.option("--extractor", type=click.Choice(["llm", "mock"]), default="llm")
@click.option("--detections", type=click.Path(), default=None)
@click.option("--fixtures", type=click.Path(), default=None)
@click.option("--dict", "dict_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--data-dir", default=None)
@click.option("--padding", type=float, default=8.0, show_default=True)
@click.option("--concurrency", type=int, default=4, show_default=True)
def pipeline(directory, detector, extractor, detections, fixtures, dict_path, data_dir, padding, concurrency):
    """Run the full pipeline over a directory of page images."""
    cfg = PipelineConfig(
        detector_backend=detector,
        extractor_backend=extractor,
        detections_path=detections,
        fixtures_dir=fixtures,
        dictionary_path=dict_path,
        data_dir=data_dir or default_data_dir(),
        crop_padding=padding,
        concurrency=concurrency,
    )
    report = Pipeline(cfg).batch(directory)
    for result in report.results:
        click.echo(f"{result.drawing_id}: {result.status}" + (f" ({result.error})" if result.error else ""))
    for path, error in report.failures:
        click.echo(f"{path}: unreadable ({error})")
    click.echo(json.dumps(report.counts()))


@cli.command()
@click.argument("query_text")
@click.option("--data-dir", default=None)
@click.option("--dict", "dict_path", type=click.Path(exists=True, dir_okay=False), default=None)
def search(query_text, data_dir, dict_path):
    """Evaluate a conditional query; prints matching drawing ids."""
    store = RecordStore(data_dir or default_data_dir())
    dictionary = _dictionary(dict_path)
    if not query_text.strip():
        ids = store.ids()
    else:
        ast = parse_query(query_text, dictionary)
        ids = eval_query(ast, store)
    for drawing_id in ids:
        click.echo(drawing_id)


@cli.command()
@click.option("--data-dir", default=None)
@click.option("--top", type=int, default=10, show_default=True)
def keys(data_dir, top):
    """Keyword summary: per-key record counts and most frequent values."""
    store = RecordStore(data_dir or default_data_dir())
    click.echo(json.dumps(keyword_summary(store, top_n=top), indent=2))


@cli.command()
@click.option("--key", "key_text", required=True)
@click.option("--data-dir", default=None)
@click.option("--dict", "dict_path", type=click.Path(exists=True, dir_okay=False), default=None)
def group(key_text, data_dir, dict_path):
    """Group drawings by a metadata key."""
    store = RecordStore(data_dir or default_data_dir())
    dictionary = _dictionary(dict_path)
    resolved = dictionary.resolve(key_text)
    if resolved is None:
        raise UnknownKey(f"unknown key {key_text!r}")
    click.echo(json.dumps(group_by(store, resolved.id, dictionary), indent=2))


@cli.command()
@click.option("--template", required=True)
@click.option("--apply", "do_apply", is_flag=True, help="Actually rename files under --root.")
@click.option("--root", type=click.Path(file_okay=False), default=None)
@click.option("--data-dir", default=None)
@click.option("--dict", "dict_path", type=click.Path(exists=True, dir_okay=False), default=None)
def rename(template, do_apply, root, data_dir, dict_path):
    """Plan (and optionally apply) metadata-based file renames."""
    store = RecordStore(data_dir or default_data_dir())
    plan = rename_plan(store, template, _dictionary(dict_path))
    click.echo(json.dumps(plan.to_json(), indent=2))
    if do_apply:
        if not root:
            raise click.UsageError("--apply needs --root pointing at the drawing files")
        outcomes = apply_rename_plan(plan, root)
        click.echo(json.dumps({"outcomes": outcomes}, indent=2))


@cli.command("eval-det")
@click.option("--gt", "gt_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Ground-truth COCO file.")
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Predictions in the detection wire format.")
@click.option("--iou-threshold", type=float, default=0.7, show_default=True)
def eval_det(gt_path, pred_path, iou_threshold):
    """Detection metrics: per-category accuracy, precision, recall, F1."""
    from .server import coco_to_gt_detections

    preds = load_precomputed(pred_path)
    gts = coco_to_gt_detections(coco_mod.CocoDataset.load(gt_path))
    metrics = evaluate_detections(preds, gts, iou_threshold=iou_threshold)
    click.echo(metrics.to_table())


@cli.command("eval-ext")
@click.option("--gt", "gt_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True, dir_okay=False))
def eval_ext(gt_path, pred_path):
    """Extraction metrics: key and value accuracy."""
    metrics = evaluate_extraction(load_records_file(pred_path), load_records_file(gt_path))
    click.echo(json.dumps(metrics.to_dict(), indent=2))


@cli.command()
@click.argument("direction", type=click.Choice(["markup2coco", "coco2markup"]))
@click.argument("inputs", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path())
@click.option("--dpi", type=float, default=300.0, show_default=True)
def convert(direction, inputs, out, dpi):
    """Convert between markup files and a COCO dataset.

    markup2coco takes one or more markup files and writes one COCO
    file; coco2markup takes one COCO file and writes markup files
    into the --out directory.
    """
    if direction == "markup2coco":
        docs = [coco_mod.load_markup(p) for p in inputs]
        ds = coco_mod.markup_to_coco(docs, dpi=dpi)
        ds.save(out)
        click.echo(f"wrote {out}: {len(ds.images)} images, {len(ds.annotations)} annotations")
    else:
        if len(inputs) != 1:
            raise click.UsageError("coco2markup expects exactly one COCO file")
        docs = coco_mod.coco_to_markup(coco_mod.CocoDataset.load(inputs[0]), dpi=dpi)
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        for doc in docs:
            target = out_dir / f"{doc.file_name}.markup.json"
            coco_mod.save_markup(doc, target)
        click.echo(f"wrote {len(docs)} markup files to {out_dir}")


@cli.command("validate-coco")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
def validate_coco_cmd(path):
    """Validate a COCO file; exits 2 when findings exist."""
    findings = coco_mod.validate_coco(coco_mod.CocoDataset.load(path))
    if not findings:
        click.echo("valid: no findings")
        return
    for finding in findings:
        click.echo(f"{finding['code']}: {finding['message']} [{finding['where']}]")
    raise DataError(f"{len(findings)} validation finding(s)")


@cli.command()
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--detector", type=click.Choice(["heuristic", "precomputed"]), default="heuristic")
@click.option("--extractor", type=click.Choice(["llm", "mock"]), default="llm")
@click.option("--detections", type=click.Path(), default=None)
@click.option("--fixtures", type=click.Path(), default=None)
@click.option("--dict", "dict_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--data-dir", default=None)
@click.option("--ui", "ui_dir", type=click.Path(file_okay=False), default=None,
              help="Also serve a built web UI directory at /.")
def serve(port, host, detector, extractor, detections, fixtures, dict_path, data_dir, ui_dir):
    """Run the HTTP API (optionally with the web UI)."""
    import uvicorn

    from .server import create_app

    cfg = PipelineConfig(
        detector_backend=detector,
        extractor_backend=extractor,
        detections_path=detections,
        fixtures_dir=fixtures,
        dictionary_path=dict_path,
        data_dir=data_dir or default_data_dir(),
    )
    uvicorn.run(create_app(cfg, ui_dir=ui_dir), host=host, port=port)


def main(argv: list[str] | None = None) -> int:
    """Entry point with the documented exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except (click.UsageError, click.BadParameter) as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return EXIT_USAGE
    except (QuerySyntaxError, UnknownKey, DataError) as exc:
        click.echo(f"data error: {exc}", err=True)
        return EXIT_DATA
    except ExternalServiceError as exc:
        click.echo(f"service error: {exc}", err=True)
        return EXIT_SERVICE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except click.Abort:
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
