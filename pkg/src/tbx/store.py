"""Record persistence, indexing and metadata utilities.

Durability is an append-only journal of upserts in newline-delimited
JSON; the in-memory store and inverted index are rebuilt by replaying
it, so a crash can at worst lose the final partially-written line.
Writers are serialized behind one lock, readers see either the pre-
or post-state of any upsert.
"""
from __future__ import annotations

import json
import os
import re
import threading
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .canonicalize import CanonicalRecord, SynonymDictionary
from .errors import BadTemplate, ParseError, PersistenceError, UnknownKey

JOURNAL_NAME = "journal.ndjson"

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)
_WS_RE = re.compile(r"\s+")


def tokenize(value: str) -> list[str]:
    """Lowercase tokens split on every non-alphanumeric character."""
    return _TOKEN_RE.findall(value.lower())


def _collapse(value: str) -> str:
    return _WS_RE.sub(" ", value.lower()).strip()


class InvertedIndex:
    """Postings from (canonical key, token) to drawing ids, plus a
    per-key registry of distinct values for substring and equality
    lookups."""

    def __init__(self):
        self.postings: dict[tuple[str, str], set[str]] = {}
        self.values: dict[str, dict[str, set[str]]] = {}

    def add(self, record: CanonicalRecord) -> None:
        for key, values in record.fields.items():
            registry = self.values.setdefault(key, {})
            for value in values:
                registry.setdefault(value.lower(), set()).add(record.drawing_id)
                for token in tokenize(value):
                    self.postings.setdefault((key, token), set()).add(record.drawing_id)

    def remove(self, record: CanonicalRecord) -> None:
        for key, values in record.fields.items():
            registry = self.values.get(key, {})
            for value in values:
                low = value.lower()
                ids = registry.get(low)
                if ids is not None:
                    ids.discard(record.drawing_id)
                    if not ids:
                        del registry[low]
                for token in tokenize(value):
                    ids = self.postings.get((key, token))
                    if ids is not None:
                        ids.discard(record.drawing_id)
                        if not ids:
                            del self.postings[(key, token)]
            if key in self.values and not self.values[key]:
                del self.values[key]

    def __eq__(self, other) -> bool:
        if not isinstance(other, InvertedIndex):
            return NotImplemented
        return self.postings == other.postings and self.values == other.values


class RecordStore:
    """Canonical records keyed by drawing id, with journal persistence.

    A store without a data directory is ephemeral: upserts skip the
    journal but behave identically otherwise.
    """

    def __init__(self, data_dir: str | Path | None = None):
        self.records: dict[str, CanonicalRecord] = {}
        self.index = InvertedIndex()
        self._lock = threading.RLock()
        self._journal_path: Path | None = None
        if data_dir is not None:
            data_dir = Path(data_dir)
            data_dir.mkdir(parents=True, exist_ok=True)
            self._journal_path = data_dir / JOURNAL_NAME
            if self._journal_path.exists():
                self._replay(self._journal_path.read_bytes())

    @classmethod
    def open(cls, data_dir: str | Path) -> "RecordStore":
        return cls(data_dir=data_dir)

    def _replay(self, raw: bytes) -> None:
        lines = raw.split(b"\n")
        for i, line in enumerate(lines):
            if not line.strip():
                continue
            try:
                entry = json.loads(line)
            except json.JSONDecodeError as exc:
                if i >= len(lines) - 2:  # torn tail from a crash mid-write
                    break
                raise ParseError(f"corrupt journal entry: {exc.msg}", line=i + 1) from exc
            if isinstance(entry, dict) and entry.get("op") == "upsert" and "record" in entry:
                self._apply(CanonicalRecord.from_json(entry["record"]))

    def upsert(self, record: CanonicalRecord) -> None:
        """Store a record, replacing any prior version atomically.

        The journal line is flushed and fsynced before memory changes;
        a failed write leaves the store untouched.
        """
        if not record.drawing_id:
            raise ValueError("record must have a drawing_id")
        line = json.dumps({"op": "upsert", "record": record.to_json()}) + "\n"
        with self._lock:
            if self._journal_path is not None:
                try:
                    with open(self._journal_path, "a", encoding="utf-8") as fh:
                        fh.write(line)
                        fh.flush()
                        os.fsync(fh.fileno())
                except OSError as exc:
                    raise PersistenceError(f"journal write failed: {exc}") from exc
            self._apply(record)

    def _apply(self, record: CanonicalRecord) -> None:
        old = self.records.get(record.drawing_id)
        if old is not None:
            self.index.remove(old)
        self.records[record.drawing_id] = record
        self.index.add(record)

    def get(self, drawing_id: str) -> CanonicalRecord | None:
        with self._lock:
            return self.records.get(drawing_id)

    def ids(self) -> list[str]:
        with self._lock:
            return sorted(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def rebuild_index(self) -> InvertedIndex:
        fresh = InvertedIndex()
        with self._lock:
            for record in self.records.values():
                fresh.add(record)
        return fresh

    def state(self) -> dict:
        """Serializable snapshot used for replay-equality checks."""
        with self._lock:
            return {did: rec.to_json() for did, rec in sorted(self.records.items())}

    # ── lookups backing the query evaluator ──────────────────────────

    def contains_ids(self, key: str, term: str) -> set[str]:
        term_l = term.lower().strip()
        with self._lock:
            out = set(self.index.postings.get((key, term_l), ()))
            for value_l, ids in self.index.values.get(key, {}).items():
                if term_l in value_l:
                    out |= ids
            return out

    def equals_ids(self, key: str, value: str) -> set[str]:
        target = _collapse(value)
        with self._lock:
            out: set[str] = set()
            for value_l, ids in self.index.values.get(key, {}).items():
                if _collapse(value_l) == target:
                    out |= ids
            return out

    def dates_for(self, key: str):
        with self._lock:
            return [(did, rec.dates.get(key)) for did, rec in self.records.items()]


def keyword_summary(store: RecordStore, top_n: int = 10) -> dict[str, dict]:
    """Per canonical key: how many records carry it and its top values.

    Values are ranked by frequency, ties alphabetically.
    """
    summary: dict[str, dict] = {}
    with store._lock:
        records = list(store.records.values())
    per_key_counts: dict[str, Counter] = {}
    per_key_records: Counter = Counter()
    for rec in records:
        for key, values in rec.fields.items():
            per_key_records[key] += 1
            counter = per_key_counts.setdefault(key, Counter())
            for value in values:
                counter[value] += 1
    for key, counter in per_key_counts.items():
        ranked = sorted(counter.items(), key=lambda kv: (-kv[1], kv[0]))[:top_n]
        summary[key] = {
            "records": per_key_records[key],
            "top_values": [{"value": v, "count": c} for v, c in ranked],
        }
    return summary


MISSING_GROUP = "(missing)"


def group_by(store: RecordStore, key_id: str, dictionary: SynonymDictionary) -> dict[str, list[str]]:
    """Partition drawing ids by their values under one canonical key.

    Multi-valued records appear in every matching group; records
    without the key land in the "(missing)" group.
    """
    if key_id not in dictionary.keys:
        raise UnknownKey(f"unknown canonical key {key_id!r}")
    groups: dict[str, list[str]] = {}
    with store._lock:
        items = sorted(store.records.items())
    for did, rec in items:
        values = rec.fields.get(key_id)
        if not values:
            groups.setdefault(MISSING_GROUP, []).append(did)
            continue
        for value in values:
            groups.setdefault(value, []).append(did)
    return groups


# ── Rename planning ──────────────────────────────────────────────────

_PLACEHOLDER_RE = re.compile(r"\{([^{}]*)\}")
_UNSAFE_RE = re.compile(r"[^A-Za-z0-9._-]")


@dataclass
class RenameEntry:
    drawing_id: str
    old_name: str
    new_name: str

    def to_json(self) -> dict:
        return {"drawing_id": self.drawing_id, "old_name": self.old_name, "new_name": self.new_name}


@dataclass
class RenamePlan:
    entries: list[RenameEntry] = field(default_factory=list)
    collisions: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "entries": [e.to_json() for e in self.entries],
            "collisions": list(self.collisions),
        }

    @classmethod
    def from_json(cls, data: dict) -> "RenamePlan":
        return cls(
            entries=[RenameEntry(**e) for e in data.get("entries", [])],
            collisions=list(data.get("collisions", [])),
        )


def _sanitize(name: str) -> str:
    return _UNSAFE_RE.sub("_", name)


def rename_plan(store: RecordStore, template: str, dictionary: SynonymDictionary) -> RenamePlan:
    """Plan metadata-based file names; nothing touches the filesystem.

    Placeholders are canonical ids in braces; a record's first value
    fills each one ("unknown" when absent). Targets assigned more than
    once are reported and suffixed -2, -3, ... in drawing-id order.
    """
    placeholders = _PLACEHOLDER_RE.findall(template)
    for name in placeholders:
        if name not in dictionary.keys:
            raise BadTemplate(f"unknown placeholder {{{name}}}")

    with store._lock:
        items = sorted(store.records.items())
    plan = RenamePlan()
    assigned: Counter = Counter()
    for did, rec in items:
        old_name = rec.source_file or did

        def fill(m: re.Match) -> str:
            return rec.first_value(m.group(1)) or "unknown"

        base = _sanitize(_PLACEHOLDER_RE.sub(fill, template))
        ext = os.path.splitext(old_name)[1]
        target = base + ext
        assigned[target] += 1
        if assigned[target] > 1:
            target = f"{base}-{assigned[target]}{ext}"
        plan.entries.append(RenameEntry(drawing_id=did, old_name=old_name, new_name=target))
    plan.collisions = sorted(name for name, n in assigned.items() if n > 1)
    return plan


def apply_rename_plan(plan: RenamePlan, root: str | Path) -> list[dict]:
    """Execute a plan against files under `root`; returns per-entry outcomes."""
    root = Path(root)
    outcomes = []
    for entry in plan.entries:
        src = root / entry.old_name
        dst = root / entry.new_name
        if entry.old_name == entry.new_name:
            outcomes.append({"drawing_id": entry.drawing_id, "outcome": "unchanged"})
        elif not src.exists():
            outcomes.append({"drawing_id": entry.drawing_id, "outcome": "missing"})
        elif dst.exists():
            outcomes.append({"drawing_id": entry.drawing_id, "outcome": "target_exists"})
        else:
            src.rename(dst)
            outcomes.append({"drawing_id": entry.drawing_id, "outcome": "renamed"})
    return outcomes


def load_records_file(path: str | Path) -> dict[str, CanonicalRecord]:
    """Read a JSON file of canonical records, keyed by drawing id.

    Accepts either a bare list of record objects or {"records": [...]}.
    """
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(data, dict):
        data = data.get("records", [])
    out = {}
    for item in data:
        rec = CanonicalRecord.from_json(item)
        out[rec.drawing_id] = rec
    return out
