import json

import pytest

from frogmodel.model import DriftSpec, FrogCountSpec, LambdaSpec, ModelConfig
from frogmodel.pgf import DistributionSpec

_ACCEPTANCE = {}


def unit_config(p=0.7, p0=None):
    """X_j = 1 everywhere, constant drift p."""
    return ModelConfig(DriftSpec.constant(p), FrogCountSpec.iid(DistributionSpec.deterministic(1)),
                       p if p0 is None else p0)


def poisson_linear_config(p=0.6):
    """Poisson(j) frogs at site j, constant drift p."""
    return ModelConfig(DriftSpec.constant(p),
                       FrogCountSpec.poisson_sequence(LambdaSpec("linear", alpha=1.0, beta=0.0)), p)


UNIT_JSON = json.dumps({"drift": {"kind": "constant", "p": 0.7},
                        "counts": {"kind": "iid", "dist": {"kind": "deterministic", "k": 1}},
                        "p0": 0.7})


@pytest.fixture
def unit_cfg():
    return unit_config()


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        _ACCEPTANCE[name] = (report.outcome, report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=lambda s: int(s.split("_")[2])):
        outcome, secs = _ACCEPTANCE[name]
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}  ({secs:.1f} s)")
