from __future__ import annotations

import pytest

from phi4forms.pointcount import CountCache


def pytest_addoption(parser):
    parser.addoption("--extended", action="store_true", default=False,
                     help="also run the extended prime window criterion (slow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--extended"):
        return
    skip = pytest.mark.skip(reason="needs --extended")
    for item in items:
        if "extended" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope="session")
def count_cache(tmp_path_factory) -> CountCache:
    """One fresh count cache per test session, so the acceptance timings are cold-start honest."""
    return CountCache(tmp_path_factory.mktemp("counts") / "counts.jsonl")
