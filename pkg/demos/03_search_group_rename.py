"""Walkthrough: conditional search, grouping and rename planning.

Builds a small in-memory store and runs the kind of query an engineer
actually types: all drawings whose description mentions both cinema
and electric, produced before December 1970.

    python3 demos/03_search_group_rename.py
"""
from tbx import (
    CanonicalRecord,
    DateValue,
    RecordStore,
    SynonymDictionary,
    eval_query,
    group_by,
    keyword_summary,
    parse_query,
    print_query,
    rename_plan,
)

dictionary = SynonymDictionary.default()
store = RecordStore()

rows = [
    ("dr-001", "Cinema electric layout L03", "Flat Iron", DateValue(1970, 5), "scan01.pdf"),
    ("dr-002", "Cinema electric layout L04", "Flat Iron", DateValue(1971, 1), "scan02.pdf"),
    ("dr-003", "Plumbing riser", "Barbican", DateValue(1969, 12), "scan03.pdf"),
    ("dr-004", "Cinema foyer plan", "Barbican", DateValue(1970, 2), "scan04.pdf"),
]
for did, desc, project, date, source in rows:
    store.upsert(
        CanonicalRecord(
            drawing_id=did,
            fields={"drawing_description": [desc], "project_name": [project]},
            dates={"date": date},
            source_file=source,
        )
    )

query = '["cinema", "electric"] in "description" AND "date" < 12/1970'
ast = parse_query(query, dictionary)
print(f"query: {query}")
print(f"normalized: {print_query(ast)}")
print(f"matches: {eval_query(ast, store)}")

print("\nkeyword panel:")
for key, info in keyword_summary(store, top_n=3).items():
    values = ", ".join(f"{v['value']} (x{v['count']})" for v in info["top_values"])
    print(f"  {key}: {info['records']} records; top: {values}")

print("\ngrouped by project:")
for value, ids in group_by(store, "project_name", dictionary).items():
    print(f"  {value}: {ids}")

plan = rename_plan(store, "{project_name}_{drawing_description}", dictionary)
print("\nrename plan (dry run, nothing moved):")
for entry in plan.entries:
    print(f"  {entry.old_name} -> {entry.new_name}")
if plan.collisions:
    print(f"  collisions: {plan.collisions}")
