from __future__ import annotations

import numpy as np
import pytest

from wqlab import available_backends
from wqlab.measures import DiscreteMeasure

BACKENDS = available_backends()


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_discrete(rng, n, d=3, equal=False):
    atoms = rng.random((n, d))
    w = np.full(n, 1.0 / n) if equal else rng.random(n) + 0.1
    return DiscreteMeasure(atoms, w / w.sum())


def pytest_terminal_summary(terminalreporter):
    import sys
    lines = []
    for name, mod in list(sys.modules.items()):
        if name.split(".")[-1] == "test_acceptance":
            lines.extend(getattr(mod, "LINES", []))
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
