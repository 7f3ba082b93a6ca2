"""Title-block metadata extractors.

Two backends produce the same RawExtraction: a remote chat-completion
model that receives the cropped title block as an image, and a
deterministic file-backed mock for offline runs and tests. Model
output is recovered tolerantly: real responses contain duplicate
keys, stray characters and missing braces, so a strict JSON parse is
only the first attempt.
"""
from __future__ import annotations

import base64
import io
import json
import logging
import os
import re
import time
from dataclasses import dataclass, field
from pathlib import Path

import requests
from PIL import Image

from .detection import PageImage
from .errors import AuthError, EmptyExtraction, FixtureMissing, TransportError

logger = logging.getLogger(__name__)

SYSTEM_PROMPT = (
    "You are an expert extracting text from an input image that is technical drawing."
)
USER_PROMPT = (
    "What text is in this drawing title block? Identify the title block cells and "
    "return their content in a JSON format, where the key is the cell title and the "
    "value is the content of the cell without the key."
)

# crops are sent as-is up to this longest side, then downscaled proportionally
MAX_IMAGE_SIDE = 2048

BACKOFF_BASE_SECONDS = 1.0
BACKOFF_CAP_SECONDS = 30.0


@dataclass
class RawExtraction:
    """Ordered key-value pairs as emitted by an extractor.

    Keys may repeat; deduplication is canonicalization's job, and
    collapsing early would hide merge bugs downstream.
    """

    drawing_id: str
    pairs: list[tuple[str, str]] = field(default_factory=list)
    source: str = "mock"  # "llm" | "mock"


@dataclass
class ExtractorConfig:
    endpoint_url: str
    api_key: str = ""
    model_name: str = "gpt-4o"
    timeout: float = 60.0
    max_retries: int = 3

    def __post_init__(self):
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")

    @classmethod
    def from_env(cls) -> "ExtractorConfig":
        endpoint = os.environ.get("TBX_LLM_ENDPOINT", "")
        if not endpoint:
            raise TransportError("TBX_LLM_ENDPOINT is not set")
        return cls(
            endpoint_url=endpoint,
            api_key=os.environ.get("TBX_LLM_API_KEY", ""),
            model_name=os.environ.get("TBX_LLM_MODEL", "gpt-4o"),
        )


def build_prompt() -> tuple[str, str]:
    """The (system, user) message pair sent with every crop."""
    return SYSTEM_PROMPT, USER_PROMPT


def _encode_image(crop: PageImage) -> str:
    """PNG-encode a crop as base64, downscaling past MAX_IMAGE_SIDE."""
    im = Image.fromarray(crop.pixels)
    longest = max(im.size)
    if longest > MAX_IMAGE_SIDE:
        scale = MAX_IMAGE_SIDE / longest
        im = im.resize((max(1, int(im.width * scale)), max(1, int(im.height * scale))))
    buf = io.BytesIO()
    im.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def build_request_body(crop: PageImage, model_name: str) -> dict:
    system, user = build_prompt()
    b64 = _encode_image(crop)
    return {
        "model": model_name,
        "messages": [
            {"role": "system", "content": system},
            {
                "role": "user",
                "content": [
                    {"type": "text", "text": user},
                    {
                        "type": "image_url",
                        "image_url": {"url": f"data:image/png;base64,{b64}"},
                    },
                ],
            },
        ],
    }


def extract_via_llm(crop: PageImage, cfg: ExtractorConfig) -> RawExtraction:
    """Send a title-block crop to the chat-completion endpoint.

    Retries transport errors and HTTP 429/5xx with exponential backoff
    (1s, 2s, 4s, ... capped at 30s) up to cfg.max_retries; 401/403 fail
    immediately. A response with zero recoverable pairs raises
    EmptyExtraction.
    """
    body = build_request_body(crop, cfg.model_name)
    headers = {"Content-Type": "application/json"}
    if cfg.api_key:
        headers["Authorization"] = f"Bearer {cfg.api_key}"

    last_error: Exception | None = None
    for attempt in range(cfg.max_retries + 1):
        if attempt > 0:
            delay = min(BACKOFF_CAP_SECONDS, BACKOFF_BASE_SECONDS * 2 ** (attempt - 1))
            logger.debug("retrying extraction for %s in %.1fs", crop.drawing_id, delay)
            time.sleep(delay)
        try:
            resp = requests.post(cfg.endpoint_url, json=body, headers=headers, timeout=cfg.timeout)
        except requests.RequestException as exc:
            last_error = exc
            continue
        if resp.status_code in (401, 403):
            raise AuthError(f"endpoint rejected credentials (HTTP {resp.status_code})")
        if resp.status_code == 429 or resp.status_code >= 500:
            last_error = TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            continue
        if resp.status_code >= 400:
            raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        text = _response_text(resp)
        pairs = parse_tolerant_pairs(text)
        if not pairs:
            raise EmptyExtraction(f"no key-value pairs recovered for {crop.drawing_id}")
        return RawExtraction(drawing_id=crop.drawing_id, pairs=pairs, source="llm")

    raise TransportError(
        f"extraction failed after {cfg.max_retries + 1} attempts: {last_error}"
    )


def _response_text(resp: requests.Response) -> str:
    """First choice's text content, or the raw body if the shape is off."""
    try:
        data = resp.json()
        content = data["choices"][0]["message"]["content"]
        if isinstance(content, list):  # content-part style responses
            content = "".join(part.get("text", "") for part in content if isinstance(part, dict))
        return str(content)
    except (ValueError, KeyError, IndexError, TypeError):
        return resp.text


_FENCE_RE = re.compile(r"```[a-zA-Z0-9]*\n(.*?)```", re.DOTALL)
_PAIR_RE = re.compile(
    r'^\s*(?:"(?P<qkey>[^"]*)"|(?P<bkey>[^:"\n][^:\n]*?))\s*:\s*'
    r'(?:"(?P<qval>[^"]*)"|(?P<bval>[^\n]*?))\s*,?\s*$'
)


def parse_tolerant_pairs(text: str) -> list[tuple[str, str]]:
    """Recover ordered key-value pairs from noisy extractor output.

    Strategy: strip code fences, try a strict JSON object parse that
    preserves duplicate keys, then fall back to line-wise recovery.
    Junk characters around unquoted keys are stripped; pairs whose key
    strips to nothing are dropped. Never raises; the worst case is an
    empty list.
    """
    if not isinstance(text, str) or not text.strip():
        return []

    fenced = _FENCE_RE.search(text)
    if fenced:
        text = fenced.group(1)

    strict = _try_strict_object(text)
    if strict is not None:
        return strict

    pairs: list[tuple[str, str]] = []
    for line in text.splitlines():
        m = _PAIR_RE.match(line)
        if not m:
            continue
        if m.group("qkey") is not None:
            key = m.group("qkey")
        else:
            key = _strip_junk(m.group("bkey"))
        if not key:
            continue
        value = m.group("qval") if m.group("qval") is not None else m.group("bval").strip()
        pairs.append((key, value))
    return pairs


def _try_strict_object(text: str) -> list[tuple[str, str]] | None:
    start = text.find("{")
    end = text.rfind("}")
    if start < 0 or end <= start:
        return None
    try:
        parsed = json.loads(text[start : end + 1], object_pairs_hook=lambda p: ("__pairs__", p))
    except (json.JSONDecodeError, RecursionError):
        return None
    if not (isinstance(parsed, tuple) and parsed[0] == "__pairs__"):
        return None
    out: list[tuple[str, str]] = []
    for key, value in parsed[1]:
        out.append((str(key), _stringify(value)))
    return out


def _stringify(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, tuple) and len(value) == 2 and value[0] == "__pairs__":
        # nested object re-encoded for flat downstream handling
        return json.dumps({k: _stringify(v) for k, v in value[1]})
    if isinstance(value, list):
        return json.dumps([_stringify(v) if not isinstance(v, str) else v for v in value])
    if value is None:
        return ""
    if value is True:
        return "true"
    if value is False:
        return "false"
    return str(value)


def _strip_junk(key: str) -> str:
    return re.sub(r"^[^0-9A-Za-z]+|[^0-9A-Za-z]+$", "", key)


def mock_extract(drawing_id: str, fixtures: str | Path) -> RawExtraction:
    """Deterministic extractor reading raw model output from a fixture file.

    Expects one UTF-8 text file per drawing id under `fixtures`, named
    "<drawing_id>.txt".
    """
    path = Path(fixtures) / f"{drawing_id}.txt"
    if not path.is_file():
        raise FixtureMissing(f"no extraction fixture for {drawing_id!r} in {fixtures}")
    pairs = parse_tolerant_pairs(path.read_text(encoding="utf-8"))
    return RawExtraction(drawing_id=drawing_id, pairs=pairs, source="mock")
