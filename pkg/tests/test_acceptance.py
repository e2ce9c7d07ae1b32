"""Every acceptance criterion, each printing one PASS/FAIL line.

Criterion 12 (the extended prime window) runs only with ``pytest --extended``.
"""

from __future__ import annotations

import pytest

from phi4forms.acceptance import CORE, run_criterion

LINES: list[str] = []


def _check(n, cache, capsys):
    res = run_criterion(n, cache)
    with capsys.disabled():
        print("\n" + res.line())
    LINES.append(res.line())
    assert res.ok, res.detail


@pytest.mark.parametrize("n", CORE)
def test_criterion(n, count_cache, capsys):
    _check(n, count_cache, capsys)


@pytest.mark.extended
def test_criterion_12_extended(count_cache, capsys):
    _check(12, count_cache, capsys)


def test_summary_lines(capsys):
    """Repeat the per-criterion lines as one block at the end of the run."""
    with capsys.disabled():
        print("\nacceptance summary:")
        for line in LINES:
            print("  " + line)
