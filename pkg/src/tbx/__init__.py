"""Title-block detection, metadata extraction and drawing search."""

__version__ = "0.1.0"

from .canonicalize import (
    CanonicalKey,
    CanonicalRecord,
    DateValue,
    SynonymDictionary,
    canonicalize_key,
    merge_pairs,
    normalize_key_text,
    parse_date,
)
from .coco import (
    CocoDataset,
    MarkupDocument,
    MarkupPage,
    MarkupShape,
    coco_to_markup,
    markup_to_coco,
    validate_coco,
)
from .detection import (
    BoundingBox,
    CATEGORIES,
    Detection,
    PageImage,
    crop_region,
    iou,
    load_page_image,
    load_precomputed,
    select_title_block,
)
from .evaluation import (
    DetectionMetrics,
    ExtractionMetrics,
    evaluate_detections,
    evaluate_extraction,
    fuzzy_key_match,
    fuzzy_value_match,
    levenshtein,
)
from .extraction import (
    ExtractorConfig,
    RawExtraction,
    build_prompt,
    extract_via_llm,
    mock_extract,
    parse_tolerant_pairs,
)
from .heuristic import HeuristicConfig, heuristic_detect
from .pipeline import (
    BatchReport,
    Pipeline,
    PipelineConfig,
    PipelineResult,
    batch_process,
    run_pipeline,
)
from .query import eval_query, parse_query, print_query
from .store import (
    InvertedIndex,
    RecordStore,
    RenamePlan,
    apply_rename_plan,
    group_by,
    keyword_summary,
    rename_plan,
    tokenize,
)
