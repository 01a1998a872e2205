import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from catenc.tabular import Column, DataTable, Task


def cat_column(name, labels, levels=None):
    """Build a categorical column from string labels ('' means missing)."""
    if levels is None:
        levels = []
        for lab in labels:
            if lab and lab not in levels:
                levels.append(lab)
    index = {lab: i for i, lab in enumerate(levels)}
    codes = np.array([index[lab] if lab else -1 for lab in labels],
                     dtype=np.int64)
    return Column(name, "cat", codes, list(levels))


def num_column(name, values):
    return Column(name, "num", np.asarray(values, dtype=float))


def make_table(columns, target_name, task=None):
    names = [c.name for c in columns]
    tgt_idx = names.index(target_name)
    if task is None:
        tgt = columns[tgt_idx]
        if tgt.kind == "num":
            task = Task("regression")
        else:
            n_classes = int((tgt.level_counts() > 0).sum())
            task = Task("binary" if n_classes == 2 else "multiclass",
                        n_classes)
    return DataTable(columns, tgt_idx, task)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# One human-readable line per acceptance criterion, echoed after the run so
# the verdicts are visible even when pytest captures stdout.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
