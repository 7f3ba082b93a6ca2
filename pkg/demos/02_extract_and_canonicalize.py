"""Walkthrough: from noisy model output to a clean metadata record.

Model responses for title blocks are never tidy JSON: keys repeat,
quotes get mangled, spellings drift between cells. This demo feeds a
realistic noisy body through tolerant recovery and canonicalization.

    python3 demos/02_extract_and_canonicalize.py
"""
from tbx import RawExtraction, SynonymDictionary, merge_pairs, parse_tolerant_pairs

NOISY_RESPONSE = '''"Drawing Title": "SECTION LEVEL 00",
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

pairs = parse_tolerant_pairs(NOISY_RESPONSE)
print(f"recovered {len(pairs)} raw pairs:")
for key, value in pairs:
    print(f"  {key!r}: {value!r}")

dictionary = SynonymDictionary.default()
record = merge_pairs(RawExtraction(drawing_id="demo", pairs=pairs), dictionary)

print("\ncanonical record:")
for key, values in record.fields.items():
    print(f"  {key} = {values}")
print(f"  dates: { {k: v.sort_key() for k, v in record.dates.items()} }")
print(f"  unmatched: {record.unmatched}")

print("\nnote how 'Drawing No.' and 'Drg. No.' merged, the duplicate")
print("Scale collapsed, and the broken '>Status' line was repaired.")
