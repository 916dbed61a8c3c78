import math

import numpy as np
import pytest

from frogmodel.errors import ConfigError
from frogmodel.model import (GENERAL, IID_DRIFT, POISSON_DRIFT, DriftSpec, FrogCountSpec, LambdaSpec,
                             ModelConfig, auto_n0, default_horizon, drift_at, ratio_at, validate_config)
from frogmodel.pgf import DistributionSpec

from conftest import unit_config

ONE = FrogCountSpec.iid(DistributionSpec.deterministic(1))


def codes(rep):
    return {v.code for v in rep.violations}


def test_constant_unit_config_is_valid():
    rep = validate_config(unit_config(), 100)
    assert rep.valid
    assert rep.applicable(unit_config()) == [GENERAL, IID_DRIFT]


def test_c_over_log_is_valid_and_inverse_a_concave():
    cfg = ModelConfig(DriftSpec.c_over_log(0.2, 2), ONE, 0.9)
    assert validate_config(cfg, 500).valid
    j = np.arange(2, 501)
    g = 5.0 * np.log(j)
    assert np.all(g[2:] + g[:-2] <= 2 * g[1:-1] + 1e-12)


def test_drift_table_not_decreasing():
    cfg = ModelConfig(DriftSpec.from_table([0.6, 0.7]), ONE, 0.8)
    rep = validate_config(cfg, 10)
    assert "drift_not_decreasing" in codes(rep)
    assert any("drifts not decreasing" in v.message for v in rep.violations)
    assert not rep.valid_for(GENERAL)


def test_out_of_range_drift_and_p0():
    cfg = ModelConfig(DriftSpec.constant(0.4), ONE, 1.0)
    assert {"drift_range", "p0_range"} <= codes(validate_config(cfg, 5))


def test_half_plus_a_concavity_violation_names_sharper_criteria():
    # 1/a = 10, 5, 10: convex at j = 2
    cfg = ModelConfig(DriftSpec.half_plus_a([0.1, 0.2, 0.1]), ONE, 0.9)
    rep = validate_config(cfg, 10)
    v = [x for x in rep.violations if x.code == "inverse_a_not_concave"]
    assert v and v[0].site == 2
    assert set(v[0].hypotheses) == {IID_DRIFT, POISSON_DRIFT}


def test_lambda_dominance_and_concavity():
    decreasing = ModelConfig(DriftSpec.constant(0.7),
                             FrogCountSpec.poisson_sequence(LambdaSpec("table", table=(3.0, 2.0))), 0.7)
    assert "dominance" in codes(validate_config(decreasing, 5))
    convex = ModelConfig(DriftSpec.constant(0.7),
                         FrogCountSpec.poisson_sequence(LambdaSpec("table", table=(1.0, 1.5, 3.0))), 0.7)
    rep = validate_config(convex, 5)
    assert "lambda_not_concave" in codes(rep) and rep.valid_for(GENERAL)


def test_count_violations():
    never = ModelConfig(DriftSpec.constant(0.7), FrogCountSpec.iid(DistributionSpec.table([0], [1.0])), 0.7)
    assert "counts_never_positive" in codes(validate_config(never, 5))
    shrinking = ModelConfig(DriftSpec.constant(0.7), FrogCountSpec.deterministic_sequence([3, 2]), 0.7)
    assert "dominance" in codes(validate_config(shrinking, 5))
    heavy = ModelConfig(DriftSpec.constant(0.7), FrogCountSpec.iid(DistributionSpec.dyadic_zeta(2.0)), 0.7)
    rep = validate_config(heavy, 5)
    assert codes(rep) == {"infinite_mean"} and rep.valid_for(GENERAL)


def test_horizon_precondition():
    with pytest.raises(ValueError):
        validate_config(unit_config(), 1)


def test_drift_at_examples():
    assert drift_at(unit_config(), 5) == 0.7
    assert drift_at(unit_config(p0=0.8), 0) == 0.8
    cfg = ModelConfig(DriftSpec.c_over_log(0.2, 2), ONE, 0.9)
    j = math.ceil(math.e ** 2)
    assert drift_at(cfg, j) == pytest.approx(0.5 + 0.2 / math.log(j), rel=1e-15)
    assert drift_at(cfg, j) == pytest.approx(0.6, abs=5e-3)
    assert drift_at(ModelConfig(DriftSpec.from_table([0.8]), ONE, 0.9), 1) == 0.8


def test_c_over_log_prefix_held():
    cfg = ModelConfig(DriftSpec.c_over_log(0.2, 5), ONE, 0.9)
    assert drift_at(cfg, 1) == drift_at(cfg, 4) == drift_at(cfg, 5)


def test_auto_n0_keeps_drift_below_cap():
    for C in (0.1, 0.41, 1.0, 3.0):
        n0 = auto_n0(C)
        assert 0.5 + C / math.log(n0) <= 0.95
        assert n0 == 2 or 0.5 + C / math.log(n0 - 1) > 0.95


def test_ratio_examples():
    assert ratio_at(unit_config(), 3) == pytest.approx(0.4285714285714286, rel=1e-15)
    assert ratio_at(unit_config(0.75), 3) == pytest.approx(1 / 3, rel=1e-15)
    for a in np.arange(0.01, 0.5, 0.01):
        cfg = unit_config(0.5 + a)
        assert abs(ratio_at(cfg, 1) - (1 - 4 * a / (1 + 2 * a))) <= 1e-15


def test_half_plus_a_linear_inverse_extension():
    d = DriftSpec.half_plus_a([0.3, 0.2], extend="linear_inverse")
    # 1/a continues 10/3, 5, 20/3, ...
    assert d.a(3) == pytest.approx(1 / (5 + 5 / 3))
    assert DriftSpec.half_plus_a([0.3, 0.2]).a(7) == pytest.approx(0.2)


def test_default_horizon_covers_tables():
    cfg = ModelConfig(DriftSpec.from_table([0.9] * 100), ONE, 0.9)
    assert default_horizon(cfg) >= 102


@pytest.mark.parametrize("doc", [
    {"kind": "constant", "p": 0.7},
    {"kind": "c_over_log", "C": 0.3, "n0": 3},
    {"kind": "half_plus_a", "a": [0.3, 0.2], "extend": "linear_inverse"},
    {"kind": "table", "p": [0.9, 0.8]},
])
def test_drift_dict_round_trip(doc):
    assert DriftSpec.from_dict(doc).to_dict() == doc


def test_drift_dict_errors():
    with pytest.raises(ConfigError):
        DriftSpec.from_dict({"kind": "constant", "p": 0.7, "C": 1})
    with pytest.raises(ConfigError):
        DriftSpec.from_dict({"kind": "c_over_log", "C": 0.3, "n0": 1.5})
    with pytest.raises(ConfigError):
        DriftSpec.from_dict({"kind": "spiral"})
    assert DriftSpec.from_dict({"kind": "c_over_log", "C": 0.3}).n0 == auto_n0(0.3)
