"""Key canonicalization, date normalization and record merging.

Extractors emit whatever cell titles the drawing happens to use, so
"Drawing No.", "Drg. No." and "number" must all land on one canonical
key. Matching is deterministic: abbreviation expansion plus a synonym
dictionary, with a fuzzy fallback gated the same way as evaluation
(edit distance <= 2, only for strings longer than 10 characters or
containing whitespace). Dates in a handful of common formats are
parsed into a comparable (year, month, day) form.
"""
from __future__ import annotations

import calendar
import datetime
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataError
from .evaluation import KEY_FUZZY_DISTANCE, KEY_LENGTH_GATE, levenshtein
from .extraction import RawExtraction

PUNCT_TO_SPACE = ".:/-"

DEFAULT_ABBREVIATIONS = {
    "dwg": "drawing",
    "drg": "drawing",
    "desc": "description",
    "no": "number",
    "num": "number",
    "rev": "revision",
    "chk": "checked",
    "appd": "approved",
    "proj": "project",
}

# canonical id -> (display, aliases, type); aliases are given in human
# form and normalized at load time
DEFAULT_KEYS: dict[str, tuple[str, list[str], str]] = {
    "drawing_title": ("Drawing Title", ["title"], "text"),
    "drawing_number": ("Drawing Number", ["number"], "text"),
    "drawing_description": (
        "Drawing Description",
        ["description", "drawing content", "content"],
        "text",
    ),
    "project_name": ("Project Name", ["project", "job name", "job"], "text"),
    "scale": ("Scale", [], "text"),
    "date": ("Date", ["issue date", "date drawn"], "date"),
    "drawn_by": ("Drawn By", ["drawn", "author"], "text"),
    "checked_by": ("Checked By", ["checked"], "text"),
    "approved_by": ("Approved By", ["approved"], "text"),
    "revision": ("Revision", [], "text"),
    "status": ("Status", [], "text"),
    "notes": ("Notes", ["note", "general notes"], "text"),
    "client": ("Client", [], "text"),
    "sheet_number": ("Sheet Number", ["sheet"], "text"),
    "discipline": ("Discipline", [], "text"),
}

_ID_RE = re.compile(r"^[a-z0-9_]+$")


@dataclass(frozen=True)
class CanonicalKey:
    id: str
    display: str

    def __post_init__(self):
        if not self.id or not _ID_RE.match(self.id):
            raise ValueError(f"canonical id must be snake_case, got {self.id!r}")


@dataclass
class SynonymDictionary:
    """Alias and abbreviation tables driving key canonicalization."""

    keys: dict[str, CanonicalKey]
    aliases: dict[str, set[str]]          # canonical id -> normalized alias strings
    types: dict[str, str]                 # canonical id -> "text" | "date"
    abbreviations: dict[str, str] = field(default_factory=dict)
    _alias_to_id: dict[str, str] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        seen: dict[str, str] = {}
        for cid, alias_set in self.aliases.items():
            # a key always answers to its own id and display label
            alias_set.add(normalize_key_text(cid, self))
            alias_set.add(normalize_key_text(self.keys[cid].display, self))
            for alias in alias_set:
                other = seen.get(alias)
                if other is not None and other != cid:
                    raise DataError(
                        f"alias {alias!r} is claimed by both {other!r} and {cid!r}"
                    )
                seen[alias] = cid
        self._alias_to_id = seen

    @classmethod
    def default(cls) -> "SynonymDictionary":
        return cls.from_data(
            {
                "keys": {
                    cid: {"display": display, "aliases": aliases, "type": typ}
                    for cid, (display, aliases, typ) in DEFAULT_KEYS.items()
                },
                "abbreviations": dict(DEFAULT_ABBREVIATIONS),
            }
        )

    @classmethod
    def from_data(cls, data: dict) -> "SynonymDictionary":
        abbreviations = dict(data.get("abbreviations", DEFAULT_ABBREVIATIONS))
        keys: dict[str, CanonicalKey] = {}
        aliases: dict[str, set[str]] = {}
        types: dict[str, str] = {}
        stub = cls.__new__(cls)  # normalization needs only the abbreviation table
        stub.abbreviations = abbreviations
        for cid, entry in data.get("keys", {}).items():
            display = entry.get("display") or cid.replace("_", " ").title()
            typ = entry.get("type", "text")
            if typ not in ("text", "date"):
                raise DataError(f"key {cid!r} has unknown type {typ!r}")
            keys[cid] = CanonicalKey(id=cid, display=display)
            types[cid] = typ
            aliases[cid] = {
                normalize_key_text(a, stub) for a in entry.get("aliases", [])
            }
            aliases[cid].discard("")
        return cls(keys=keys, aliases=aliases, types=types, abbreviations=abbreviations)

    @classmethod
    def load(cls, path: str | Path) -> "SynonymDictionary":
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise DataError(f"dictionary file {path}: {exc}") from exc
        return cls.from_data(data)

    def date_key_ids(self) -> set[str]:
        return {cid for cid, typ in self.types.items() if typ == "date"}

    def resolve(self, text: str) -> CanonicalKey | None:
        return canonicalize_key(text, self)


def normalize_key_text(raw: str, dictionary: SynonymDictionary) -> str:
    """Lowercase, fold punctuation to spaces and expand abbreviations."""
    text = raw.lower()
    for ch in PUNCT_TO_SPACE:
        text = text.replace(ch, " ")
    tokens = [dictionary.abbreviations.get(tok, tok) for tok in text.split()]
    return " ".join(tokens)


def canonicalize_key(raw: str, dictionary: SynonymDictionary) -> CanonicalKey | None:
    """Resolve a raw cell title to a canonical key, or None.

    Exact alias lookup first; fuzzy matching applies only past the
    same gate the evaluation protocol uses, so short opaque strings
    ("Scle") are never guessed at.
    """
    norm = normalize_key_text(raw, dictionary)
    if not norm:
        return None
    cid = dictionary._alias_to_id.get(norm)
    if cid is not None:
        return dictionary.keys[cid]
    if not (len(norm) > KEY_LENGTH_GATE or " " in norm):
        return None
    best: tuple[int, str] | None = None  # (distance, canonical id)
    for alias, alias_cid in dictionary._alias_to_id.items():
        d = levenshtein(norm, alias)
        if d <= KEY_FUZZY_DISTANCE and (best is None or (d, alias_cid) < best):
            best = (d, alias_cid)
    if best is None:
        return None
    return dictionary.keys[best[1]]


@dataclass(frozen=True)
class DateValue:
    """A possibly partial date; missing parts compare as zero."""

    year: int
    month: int | None = None
    day: int | None = None

    def __post_init__(self):
        if self.day is not None and self.month is None:
            raise ValueError("a day requires a month")
        if self.month is not None and not 1 <= self.month <= 12:
            raise ValueError(f"month {self.month} out of range")
        if self.day is not None:
            last = calendar.monthrange(self.year, self.month)[1]
            if not 1 <= self.day <= last:
                raise ValueError(f"day {self.day} invalid for {self.year}-{self.month:02d}")

    def sort_key(self) -> tuple[int, int, int]:
        return (self.year, self.month or 0, self.day or 0)

    def __lt__(self, other: "DateValue") -> bool:
        return self.sort_key() < other.sort_key()

    def __le__(self, other: "DateValue") -> bool:
        return self.sort_key() <= other.sort_key()

    def __gt__(self, other: "DateValue") -> bool:
        return self.sort_key() > other.sort_key()

    def __ge__(self, other: "DateValue") -> bool:
        return self.sort_key() >= other.sort_key()

    def to_json(self) -> dict:
        return {"year": self.year, "month": self.month, "day": self.day}

    @classmethod
    def from_json(cls, data: dict) -> "DateValue":
        return cls(year=data["year"], month=data.get("month"), day=data.get("day"))


_MONTH_NAMES = {}
for i in range(1, 13):
    _MONTH_NAMES[datetime.date(2000, i, 1).strftime("%B").lower()] = i
    _MONTH_NAMES[datetime.date(2000, i, 1).strftime("%b").lower()] = i
_MONTH_NAMES["sept"] = 9

_MONTH_YEAR_RE = re.compile(r"^([a-zA-Z]+)\.?,?\s+(\d{4})$")
_MM_YYYY_RE = re.compile(r"^(\d{1,2})\s*/\s*(\d{4})$")
_DMY_RE = re.compile(r"^(\d{1,2})\.(\d{1,2})\.(\d{2}|\d{4})$")
_MMYYYY_RE = re.compile(r"^(\d{2})(\d{4})$")
_YYYY_RE = re.compile(r"^(\d{4})$")

TWO_DIGIT_YEAR_PIVOT = 50  # >= 50 -> 1900s, < 50 -> 2000s


def _expand_year(two_digit: int) -> int:
    return 1900 + two_digit if two_digit >= TWO_DIGIT_YEAR_PIVOT else 2000 + two_digit


def parse_date(raw: str) -> DateValue | None:
    """Parse common title-block date spellings; None when nothing fits.

    Accepted: "May 1973", "10/1973", "28.03.22", "28.03.2022",
    "082014" (month-year run-on) and a bare "1973".
    """
    text = raw.strip()
    if not text:
        return None

    m = _MONTH_YEAR_RE.match(text)
    if m:
        month = _MONTH_NAMES.get(m.group(1).lower())
        if month:
            return DateValue(year=int(m.group(2)), month=month)
        return None

    m = _MM_YYYY_RE.match(text)
    if m:
        month = int(m.group(1))
        if 1 <= month <= 12:
            return DateValue(year=int(m.group(2)), month=month)
        return None

    m = _DMY_RE.match(text)
    if m:
        day, month = int(m.group(1)), int(m.group(2))
        year = int(m.group(3)) if len(m.group(3)) == 4 else _expand_year(int(m.group(3)))
        try:
            return DateValue(year=year, month=month, day=day)
        except ValueError:
            return None

    m = _MMYYYY_RE.match(text)
    if m:
        month = int(m.group(1))
        if 1 <= month <= 12:
            return DateValue(year=int(m.group(2)), month=month)
        return None

    m = _YYYY_RE.match(text)
    if m:
        return DateValue(year=int(m.group(1)))

    return None


@dataclass
class CanonicalRecord:
    """The searchable metadata unit for one drawing.

    fields maps canonical ids to value lists in first-seen order with
    exact duplicates removed; pairs that resolved to no canonical key
    are kept verbatim in unmatched.
    """

    drawing_id: str
    fields: dict[str, list[str]] = field(default_factory=dict)
    dates: dict[str, DateValue] = field(default_factory=dict)
    unmatched: list[tuple[str, str]] = field(default_factory=list)
    source_file: str | None = None

    def first_value(self, key_id: str) -> str | None:
        values = self.fields.get(key_id)
        return values[0] if values else None

    def to_json(self) -> dict:
        return {
            "drawing_id": self.drawing_id,
            "source_file": self.source_file,
            "fields": {k: list(v) for k, v in self.fields.items()},
            "dates": {k: d.to_json() for k, d in self.dates.items()},
            "unmatched": [list(p) for p in self.unmatched],
        }

    @classmethod
    def from_json(cls, data: dict) -> "CanonicalRecord":
        return cls(
            drawing_id=data["drawing_id"],
            fields={k: list(v) for k, v in data.get("fields", {}).items()},
            dates={k: DateValue.from_json(d) for k, d in data.get("dates", {}).items()},
            unmatched=[(p[0], p[1]) for p in data.get("unmatched", [])],
            source_file=data.get("source_file"),
        )


def merge_pairs(raw: RawExtraction, dictionary: SynonymDictionary) -> CanonicalRecord:
    """Fold raw extractor pairs into a canonical record.

    Every input pair ends up either under a canonical key or in
    unmatched; nothing is dropped. Under one key, identical values
    merge and distinct values keep first-seen order. Date-typed keys
    get a parsed DateValue from their first parseable value.
    """
    record = CanonicalRecord(drawing_id=raw.drawing_id)
    for raw_key, raw_value in raw.pairs:
        value = raw_value.strip()
        key = canonicalize_key(raw_key, dictionary)
        if key is None:
            record.unmatched.append((raw_key, value))
            continue
        values = record.fields.setdefault(key.id, [])
        if value not in values:
            values.append(value)
    for cid in dictionary.date_key_ids():
        for value in record.fields.get(cid, []):
            parsed = parse_date(value)
            if parsed is not None:
                record.dates[cid] = parsed
                break
    return record
