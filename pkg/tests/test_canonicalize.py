"""Key normalization, synonym resolution, dates and record merging."""
from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from tbx.canonicalize import (
    CanonicalRecord,
    DateValue,
    SynonymDictionary,
    canonicalize_key,
    merge_pairs,
    normalize_key_text,
    parse_date,
)
from tbx.errors import DataError
from tbx.extraction import RawExtraction, parse_tolerant_pairs

from conftest import CROPPED_BLOCK_OUTPUT


class TestNormalizeKeyText:
    @pytest.mark.parametrize(
        "raw,expected",
        [
            ("Dwg. Desc.", "drawing description"),
            ("description", "description"),
            ("Drg. No.", "drawing number"),
            ("Drawing No.", "drawing number"),
            ("  CHECKED   BY ", "checked by"),
            ("Rev", "revision"),
            ("date/drawn", "date drawn"),
        ],
    )
    def test_expansion(self, raw, expected, dictionary):
        assert normalize_key_text(raw, dictionary) == expected


class TestCanonicalizeKey:
    def test_number_aliases_unify(self, dictionary):
        a = canonicalize_key("Drawing No.", dictionary)
        b = canonicalize_key("Drg. No.", dictionary)
        assert a is not None and a.id == "drawing_number"
        assert b is not None and b.id == a.id

    def test_description_aliases_unify(self, dictionary):
        ids = {
            canonicalize_key(raw, dictionary).id
            for raw in ("drawing description", "description", "dwg. desc.")
        }
        assert ids == {"drawing_description"}

    def test_exact_alias(self, dictionary):
        assert canonicalize_key("Scale", dictionary).id == "scale"

    def test_fuzzy_typo(self, dictionary):
        key = canonicalize_key("Drawing Descriptiom", dictionary)
        assert key is not None and key.id == "drawing_description"

    def test_unknown_returns_none(self, dictionary):
        assert canonicalize_key("Drawing Note 7", dictionary) is None
        assert canonicalize_key("Scle", dictionary) is None

    def test_display_label_round_trips(self, dictionary):
        for cid, key in dictionary.keys.items():
            assert canonicalize_key(key.display, dictionary).id == cid
            assert canonicalize_key(cid, dictionary).id == cid

    @given(st.text(alphabet=st.characters(blacklist_categories=("Zs", "Cc")), max_size=10))
    def test_short_unspaced_strings_never_fuzzy(self, raw):
        dictionary = SynonymDictionary.default()
        norm = normalize_key_text(raw, dictionary)
        if " " in norm or len(norm) > 10 or not norm:
            return
        key = canonicalize_key(raw, dictionary)
        if key is not None:
            # only an exact alias can explain the hit
            assert norm in dictionary.aliases[key.id]

    def test_alias_collision_rejected(self):
        with pytest.raises(DataError):
            SynonymDictionary.from_data(
                {
                    "keys": {
                        "alpha": {"display": "Alpha", "aliases": ["shared"], "type": "text"},
                        "beta": {"display": "Beta", "aliases": ["shared"], "type": "text"},
                    }
                }
            )

    def test_dictionary_file_round_trip(self, tmp_path, dictionary):
        import json

        path = tmp_path / "dict.json"
        path.write_text(
            json.dumps(
                {
                    "keys": {
                        "drawing_number": {
                            "display": "Drawing Number",
                            "aliases": ["number"],
                            "type": "text",
                        },
                        "date": {"display": "Date", "aliases": [], "type": "date"},
                    },
                    "abbreviations": {"no": "number", "drg": "drawing"},
                }
            ),
            encoding="utf-8",
        )
        loaded = SynonymDictionary.load(path)
        assert canonicalize_key("Drg. No.", loaded).id == "drawing_number"
        assert loaded.date_key_ids() == {"date"}


class TestParseDate:
    @pytest.mark.parametrize(
        "raw,expected",
        [
            ("May 1973", DateValue(1973, 5)),
            ("Apr 1970", DateValue(1970, 4)),
            ("10/1973", DateValue(1973, 10)),
            ("28.03.22", DateValue(2022, 3, 28)),
            ("28.03.2022", DateValue(2022, 3, 28)),
            ("082014", DateValue(2014, 8)),
            ("1973", DateValue(1973)),
            ("December 1970", DateValue(1970, 12)),
            ("12.06.75", DateValue(1975, 6, 12)),
        ],
    )
    def test_accepted_formats(self, raw, expected):
        assert parse_date(raw) == expected

    @pytest.mark.parametrize(
        "raw",
        ["", "n/a", "Somet 1973", "13/1970", "31.02.2020", "132014", "12", "drawn 1970 x"],
    )
    def test_rejected_strings(self, raw):
        assert parse_date(raw) is None

    @given(st.text(max_size=16))
    def test_output_always_valid(self, raw):
        result = parse_date(raw)
        if result is None:
            return
        if result.day is not None:
            assert result.month is not None
        if result.month is not None:
            assert 1 <= result.month <= 12

    def test_total_order_matches_tuples(self):
        values = [
            DateValue(1970),
            DateValue(1970, 5),
            DateValue(1970, 5, 12),
            DateValue(1971, 1),
            DateValue(1969, 12, 31),
        ]
        for a in values:
            for b in values:
                assert (a < b) == (a.sort_key() < b.sort_key())
                assert (a >= b) == (a.sort_key() >= b.sort_key())

    def test_invariants_enforced(self):
        with pytest.raises(ValueError):
            DateValue(2020, None, 5)
        with pytest.raises(ValueError):
            DateValue(2020, 2, 30)
        with pytest.raises(ValueError):
            DateValue(2020, 13)


class TestMergePairs:
    def cropped_raw(self) -> RawExtraction:
        return RawExtraction(drawing_id="d1", pairs=parse_tolerant_pairs(CROPPED_BLOCK_OUTPUT))

    def test_duplicate_scales_merge(self, dictionary):
        record = merge_pairs(self.cropped_raw(), dictionary)
        assert record.fields["scale"] == ["1:10"]

    def test_number_cells_merge_across_spellings(self, dictionary):
        record = merge_pairs(self.cropped_raw(), dictionary)
        assert record.fields["drawing_number"] == ["A1/50"]

    def test_date_parsed(self, dictionary):
        record = merge_pairs(self.cropped_raw(), dictionary)
        assert record.dates["date"] == DateValue(2022, 3, 28)

    def test_status_recovered(self, dictionary):
        record = merge_pairs(self.cropped_raw(), dictionary)
        assert record.fields["status"] == ["ISSUED FOR CONSTRUCTION"]

    def test_empty_extraction(self, dictionary):
        record = merge_pairs(RawExtraction(drawing_id="d0"), dictionary)
        assert record.fields == {}
        assert record.unmatched == []

    def test_nothing_dropped(self, dictionary):
        raw = self.cropped_raw()
        record = merge_pairs(raw, dictionary)
        matched = sum(
            1 for k, _ in raw.pairs if canonicalize_key(k, dictionary) is not None
        )
        assert matched + len(record.unmatched) == len(raw.pairs)

    def test_unmatched_keeps_original_key(self, dictionary):
        raw = RawExtraction(drawing_id="d", pairs=[("Weird Cell 3", " x ")])
        record = merge_pairs(raw, dictionary)
        assert record.unmatched == [("Weird Cell 3", "x")]

    def test_distinct_values_keep_order(self, dictionary):
        raw = RawExtraction(
            drawing_id="d",
            pairs=[("Scale", "1:10"), ("Scale", "1:20"), ("Scale", "1:10")],
        )
        record = merge_pairs(raw, dictionary)
        assert record.fields["scale"] == ["1:10", "1:20"]

    def test_record_json_round_trip(self, dictionary):
        record = merge_pairs(self.cropped_raw(), dictionary)
        record.source_file = "a.png"
        assert CanonicalRecord.from_json(record.to_json()) == record
