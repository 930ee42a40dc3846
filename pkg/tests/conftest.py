import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from compsurv.dataset import CONTINUOUS, SurvivalDataset
from compsurv.kernels import available_backends
from compsurv.synth import SynthConfig, synth_generate


def make_ds(time, event, X=None, names=None):
    time = np.asarray(time, dtype=float)
    if X is None:
        X = np.zeros((len(time), 1))
    X = np.asarray(X, dtype=float).reshape(len(time), -1)
    names = names or [f"x{i}" for i in range(X.shape[1])]
    return SurvivalDataset(X, time, event, tuple(names), (CONTINUOUS,) * X.shape[1])


@pytest.fixture(scope="session", params=sorted(available_backends()))
def backend(request):
    return available_backends()[request.param]


@pytest.fixture(scope="session")
def cohort():
    cfg = SynthConfig(n=600, n_covariates=3, coef=(0.8, -0.5, 0.3), censoring_rate=0.3, seed=11)
    return synth_generate(cfg)


ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture()
def verdict(request):
    """Record one acceptance line: verdict(ok, detail)."""

    def record(ok: bool, detail: str = "") -> bool:
        ACCEPTANCE.append((request.node.name, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    skipped = [
        r for r in terminalreporter.stats.get("skipped", []) if "test_acceptance" in r.nodeid
    ]
    if not ACCEPTANCE and not skipped:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
    for rep in skipped:
        reason = rep.longrepr[2] if isinstance(rep.longrepr, tuple) else ""
        terminalreporter.write_line(f"SKIP  {rep.nodeid.split('::')[-1]}  {reason}")
