import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from casimir_trench.dielectric import doped_silicon_model, gold_model  # noqa: E402
from casimir_trench.pipeline import flat_casimir_theory  # noqa: E402
from casimir_trench.roughness import RoughnessSpec  # noqa: E402

R_SPHERE = 50e-6

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def gold():
    return gold_model()


@pytest.fixture(scope="session")
def silicon():
    return doped_silicon_model()


@pytest.fixture(scope="session")
def default_roughness():
    return RoughnessSpec(4e-9, 0.6e-9, "gaussian")


@pytest.fixture(scope="session")
def calibration_theory(gold, silicon, default_roughness):
    """Au / doped-Si gradient with roughness, wide enough for calibration fits."""
    return flat_casimir_theory(R_SPHERE, gold, silicon, 75e-9, 1500e-9, default_roughness)


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)
