import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

from hfopf.network import Branch, Bus, Generator, Network, mg3

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def net3():
    return mg3()


def random_network(rng, n=4, extra=2):
    """Connected random network: a random spanning tree plus ``extra`` chords."""
    buses = tuple(Bus(k, 0.9, 1.1, rng.uniform(0, 1), rng.uniform(-0.5, 0.5)) for k in range(n))
    edges = [(int(rng.integers(0, k)), k) for k in range(1, n)]
    for _ in range(extra):
        k, l = rng.choice(n, 2, replace=False)
        edges.append((int(k), int(l)))
    branches = tuple(Branch(k, l, 1 / complex(rng.uniform(0.005, 0.05), rng.uniform(0.02, 0.2)), 5.0)
                     for k, l in edges)
    gens = (Generator(0, 0.0, 5.0, -3.0, 3.0, 1.0, 10.0, 0.0),)
    return Network(buses, branches, gens)


def random_voltages(rng, n, size=None):
    shape = (n,) if size is None else (size, n)
    return rng.uniform(0.8, 1.2, shape) * np.exp(1j * rng.uniform(-np.pi, np.pi, shape))


def voltage_vectors(n):
    """Hypothesis strategy for complex voltage vectors of length ``n``."""
    mag = st.floats(0.5, 1.5, allow_nan=False)
    ang = st.floats(-np.pi, np.pi, allow_nan=False)
    return st.lists(st.tuples(mag, ang), min_size=n, max_size=n).map(
        lambda pairs: np.array([m * np.exp(1j * a) for m, a in pairs]))


def load_fixture(name):
    return json.loads((FIXTURES / "sdp" / name).read_text())


def sdp_fixture_names(prefix):
    return sorted(p.name for p in (FIXTURES / "sdp").glob(f"{prefix}_*.json"))


# acceptance verdicts, filled in by test_acceptance.py and echoed after the run
ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k} [{title}]: {'PASS' if ok else 'FAIL'} - {detail}")
