"""Shared fixtures: captured extractor outputs and small stores."""
from __future__ import annotations

import pytest

from tbx.canonicalize import CanonicalRecord, DateValue, SynonymDictionary
from tbx.store import RecordStore


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    """One visible pass/fail line per acceptance criterion."""
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and item.fspath.basename == "test_acceptance.py":
        reporter = item.config.pluginmanager.get_plugin("terminalreporter")
        if reporter is not None:
            verdict = "PASS" if report.passed else "FAIL"
            reporter.write_line(f"[ACCEPTANCE] {item.name}: {verdict}")

# Captured model output for a whole drawing sheet: noisy, guessed keys,
# a duplicated Scale cell and an OCR-style typo in a note.
WHOLE_DRAWING_OUTPUT = '''"Drawing Title": "SECTION",
"Drawing Note 7": "JT3 5.5x25 THROUGH SLOT",
"Drawing Note 8": "JT3 5.5x25 TO LOCK BOX",
"Drawing Note 10": "STEEL BY OTHERS",
"Drawing Note 12": "3mm ALUMNIM BRCKET",
"Drawing No.": "A150",
"Checked by": "GR",
"Date": "082014",
"Scale": "110",
"Rev": "01",
"Scale": "110"
'''

# Captured model output for a cropped title block: complete, but with a
# corrupted quote on the Status line and duplicated number/scale cells.
CROPPED_BLOCK_OUTPUT = '''"Drawing Title": "SECTION LEVEL 00",
"Drawing No.": "A1/50",
"Scale": "1:10",
"Date": "28.03.22",
"Drawn": "CJ",
"Checked": "CD",
"Rev": "P01",
>Status": "ISSUED FOR CONSTRUCTION",
"Drg. No.": "A1/50",
"Scale": "1:10",
"Drawn By": "CJ",
"Checked By": "CD"
'''


@pytest.fixture(scope="session")
def dictionary() -> SynonymDictionary:
    return SynonymDictionary.default()


def make_record(
    drawing_id: str,
    fields: dict[str, list[str]] | None = None,
    dates: dict[str, DateValue] | None = None,
    source_file: str | None = None,
) -> CanonicalRecord:
    return CanonicalRecord(
        drawing_id=drawing_id,
        fields=fields or {},
        dates=dates or {},
        source_file=source_file,
    )


@pytest.fixture()
def demo_store() -> RecordStore:
    """Three in-memory records mirroring the search walkthrough:
    one cinema/electric drawing from mid-1970, one too late, one other."""
    store = RecordStore()
    store.upsert(
        make_record(
            "d1",
            fields={
                "drawing_description": ["Cinema electric layout L03"],
                "project_name": ["Flat Iron"],
                "scale": ["1:10"],
            },
            dates={"date": DateValue(1970, 5)},
        )
    )
    store.upsert(
        make_record(
            "d2",
            fields={
                "drawing_description": ["Cinema electric layout L04"],
                "project_name": ["Flat Iron"],
            },
            dates={"date": DateValue(1971, 1)},
        )
    )
    store.upsert(
        make_record(
            "d3",
            fields={
                "drawing_description": ["Plumbing riser"],
                "project_name": ["Barbican"],
                "scale": ["1:20"],
            },
            dates={"date": DateValue(1969, 12)},
        )
    )
    return store
