from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from sparse_agreement import AnnotationTable, ItemCounts

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


def random_items(rng: np.random.Generator, max_items: int = 12, max_classes: int = 4,
                 max_n: int = 8) -> list[ItemCounts]:
    """Random sparse item-count fixtures, including n in {0, 1} items."""
    n_items = int(rng.integers(1, max_items + 1))
    n_classes = int(rng.integers(1, max_classes + 1))
    items = []
    for _ in range(n_items):
        n = int(rng.integers(0, max_n + 1))
        counts = np.bincount(rng.integers(0, n_classes, size=n), minlength=n_classes)
        items.append(ItemCounts(tuple(int(c) for c in counts)))
    return items


def random_table(rng: np.random.Generator, max_items: int = 10, max_annotators: int = 6,
                 n_classes: int = 3, keep_prob: float = 0.7) -> AnnotationTable:
    """Random sparse table where each annotator labels a random item subset."""
    n_items = int(rng.integers(2, max_items + 1))
    n_annotators = int(rng.integers(2, max_annotators + 1))
    records = []
    for i in range(n_items):
        for a in range(n_annotators):
            if rng.random() < keep_prob:
                records.append((f"i{i}", f"a{a}", f"c{int(rng.integers(n_classes))}"))
    if not records:
        records.append(("i0", "a0", "c0"))
    universe = tuple(f"c{j}" for j in range(n_classes))
    return AnnotationTable.from_records(records, label_universe=universe)
