"""A small balanced dataset drawn from a shipped phase region, with prompts.

Run with ``python demos/04_dataset.py`` from the repository root.
"""

from pathlib import Path

from nlsat.datagen import (
    GenConfig, dataset_report, format_table, generate_dataset, report_rows, split_dataset, zero_shot_prompt,
)
from nlsat.phasemap import load_region

region = load_region(Path(__file__).resolve().parents[1] / "regions" / "region_S.csv")
print(f"region cells (alpha): {[a for a, _ in region.cells]}")

config = GenConfig("S", train=40, eval=10, test=10, seed=42)
data = generate_dataset(config, region)
splits = split_dataset(data, config.sizes(), seed=42)

reports = {name: dataset_report(part) for name, part in splits.items()}
print(format_table(report_rows(reports)))

first = splits["test"][0]
print(zero_shot_prompt(first).text)
print()
print(zero_shot_prompt(first, "truefalse", example=splits["train"][0]).text)
print(f"(expected answer: {zero_shot_prompt(first, 'truefalse', splits['train'][0]).answer})")
