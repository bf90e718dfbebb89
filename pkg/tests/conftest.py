import os
import re
from pathlib import Path

import numpy as np
import pytest

from gtsp_lk.instance import cluster_tsp, read_instance

DATA = Path(__file__).parent / "data"
TSPLIB = DATA / "tsplib"

# archived GTSP files, when available, take precedence over regenerated ones
ARCHIVE = os.environ.get("GTSPLIB_DIR")

_cache: dict = {}


def load_benchmark(name: str):
    """GTSP instance ``name`` (e.g. ``10att48``) and where it came from."""
    if name in _cache:
        return _cache[name]
    if ARCHIVE:
        path = Path(ARCHIVE) / f"{name}.gtsp"
        if path.exists():
            _cache[name] = (read_instance(path), "archived")
            return _cache[name]
    m, base = re.fullmatch(r"(\d+)([a-z]+\d+)", name).groups()
    matches = [p for p in TSPLIB.glob("*.tsp") if p.stem.lower() == base]
    if not matches:
        pytest.skip(f"no TSPLIB source for {name}")
    inst = cluster_tsp(read_instance(matches[0]), int(m))
    assert inst.name == name
    _cache[name] = (inst, "regenerated")
    return _cache[name]


@pytest.fixture(scope="session")
def benchmark_instance():
    return load_benchmark


@pytest.fixture(scope="session")
def g5():
    """Six-vertex instance with clusters {1}, {2, 2'}, {3}, {4}, {5}.

    Vertex ids 0..5 stand for 1, 2, 3, 4, 5, 2'. Unit-weight edges:
    1-2, 1-2', 2-3, 2-4, 2-5, 2'-3, 2'-5; everything else is free.
    """
    return read_instance(DATA / "g5.gtsp")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
