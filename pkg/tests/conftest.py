import io
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fxscaling import GenSpec, gen_panel  # noqa: E402
from fxscaling.synthgen import panels_to_stream  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20080803)


@pytest.fixture(scope="session")
def small_stream():
    spec = GenSpec(("EUR/USD", "USD/JPY", "EUR/JPY", "GBP/USD"), (5.0, 2.0, 0.5, 1.0), Q=120,
                   coupling_v=0.1, factor_memory=0.5, trade_fraction=0.4, seed=11)
    p, d = gen_panel(spec)
    return spec, p, d, panels_to_stream(p, d, spec.seed)


def to_bytes(lines):
    return io.BytesIO(("\n".join(lines) + "\n").encode())


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
