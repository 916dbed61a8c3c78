"""Property-based checks of the invariants the library promises."""

import math

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from frogmodel import criteria, pgf
from frogmodel import simulator as sim
from frogmodel.model import (DriftSpec, FrogCountSpec, LambdaSpec, ModelConfig, drift_at, ratio_at,
                             validate_config)
from frogmodel.pgf import DistributionSpec as D
from frogmodel.rng import stream

probs = st.floats(0.51, 0.99)


@st.composite
def drift_specs(draw):
    kind = draw(st.sampled_from(["constant", "c_over_log", "half_plus_a", "table"]))
    if kind == "constant":
        return DriftSpec.constant(draw(probs))
    if kind == "c_over_log":
        return DriftSpec.c_over_log(draw(st.floats(0.05, 2.0)))
    if kind == "half_plus_a":
        # 1/a_j = g0 + slope * j: linear, hence concave, and nondecreasing
        g0 = draw(st.floats(2.5, 10.0))
        slope = draw(st.floats(0.0, 2.0))
        n = draw(st.integers(2, 12))
        g = [g0 + slope * j for j in range(n)]
        return DriftSpec.half_plus_a([1.0 / x for x in g], draw(st.sampled_from(["hold", "linear_inverse"])))
    ps = sorted(draw(st.lists(probs, min_size=1, max_size=10)), reverse=True)
    return DriftSpec.from_table(ps)


@st.composite
def dists(draw):
    kind = draw(st.sampled_from(["deterministic", "poisson", "geometric", "table"]))
    if kind == "deterministic":
        return D.deterministic(draw(st.integers(1, 6)))
    if kind == "poisson":
        return D.poisson(draw(st.floats(0.1, 8.0)))
    if kind == "geometric":
        return D.geometric(draw(st.floats(0.1, 0.9)))
    values = sorted(set(draw(st.lists(st.integers(0, 8), min_size=1, max_size=4))))
    w = draw(st.lists(st.floats(0.05, 1.0), min_size=len(values), max_size=len(values)))
    total = math.fsum(w)
    return D.table(values, [x / total for x in w])


@st.composite
def configs(draw):
    d = draw(drift_specs())
    counts = draw(st.sampled_from(["iid", "poisson"]))
    if counts == "iid":
        c = FrogCountSpec.iid(draw(dists().filter(lambda x: pgf.prob_positive(x) > 0)))
    else:
        c = FrogCountSpec.poisson_sequence(LambdaSpec("linear", alpha=draw(st.floats(0.0, 1.0)),
                                                      beta=draw(st.floats(0.2, 3.0))))
    return ModelConfig(d, c, draw(probs))


@given(drift_specs())
def test_drifts_decrease_and_ratios_increase(d):
    cfg = ModelConfig(d, FrogCountSpec.iid(D.deterministic(1)), 0.7)
    if not validate_config(cfg, 80).valid_for("general"):
        return
    p = [drift_at(cfg, j) for j in range(1, 81)]
    r = [ratio_at(cfg, j) for j in range(1, 81)]
    assert all(b <= a for a, b in zip(p, p[1:]))
    assert all(b >= a for a, b in zip(r, r[1:]))
    assert all(0 < x < 1 for x in r)


@given(st.floats(0.5 + 1e-9, 1 - 1e-6))
def test_ratio_identity(p):
    cfg = ModelConfig(DriftSpec.constant(p), FrogCountSpec.iid(D.deterministic(1)), p)
    want = (1 - p) / p
    assert abs(ratio_at(cfg, 1) - want) <= 2 * np.spacing(want)


@given(configs(), st.integers(2, 40), st.integers(0, 40))
def test_validation_monotone_in_horizon(cfg, h, extra):
    small = {(v.code, v.site) for v in validate_config(cfg, h).violations}
    large = {(v.code, v.site) for v in validate_config(cfg, h + extra).violations}
    assert small <= large


@given(dists(), st.lists(st.floats(0.0, 1.0), min_size=3, max_size=3, unique=True))
def test_pgf_convex_and_monotone(d, s):
    s1, s2, s3 = sorted(s)
    f1, f2, f3 = (pgf.pgf_eval(d, x) for x in (s1, s2, s3))
    assert f1 <= f2 + 1e-15 <= f3 + 2e-15
    lam = (s2 - s1) / (s3 - s1)
    assert f2 <= (1 - lam) * f1 + lam * f3 + 1e-12


@given(dists(), st.floats(1e-6, 1.0))
def test_log_one_minus_consistent(d, eps):
    direct = pgf.pgf_eval(d, 1.0 - eps)
    if direct < 1e-300:
        return
    assert math.isclose(math.exp(pgf.log_pgf_one_minus(d, eps)), direct, rel_tol=1e-10)


@given(dists().filter(lambda d: d.kind in ("deterministic", "table")))
def test_derivative_at_one_is_mean(d):
    h = 1e-7
    # 1 - f(1 - h) from the cancellation-free complement
    slope = -math.expm1(pgf.log_pgf_one_minus(d, h)) / h
    assert abs(slope - pgf.mean(d)) <= 1e-5 * max(1.0, pgf.mean(d))


@settings(max_examples=30, deadline=None)
@given(configs(), st.integers(2, 120))
def test_series_terms_in_unit_interval(cfg, n_max):
    rep = criteria.general_series(cfg, n_max, closed_form=False)
    assert np.all(rep.log_terms <= 1e-15)
    assert np.all((rep.terms > 0) | (rep.log_terms < -700)) and np.all(rep.terms <= 1)
    assert np.all(np.diff(rep.partial_sums) >= 0)
    assert len(rep.terms) == n_max - 1


@settings(max_examples=30, deadline=None)
@given(configs(), st.floats(0.0, 0.3))
def test_terms_grow_with_larger_drift(cfg, shift):
    # larger p_j means smaller r_j, so every factor f_j(1 - r_j**k) can only grow
    # push every p_j toward 1 by a fraction of the remaining gap
    j = np.arange(1, 101)
    p = np.asarray(cfg.drift.p_at(j), dtype=float)
    higher = ModelConfig(DriftSpec.from_table(list(p + shift * (1 - p))), cfg.counts, cfg.p0)
    base = ModelConfig(DriftSpec.from_table(list(p)), cfg.counts, cfg.p0)
    t_hi = criteria.general_series(higher, 100, closed_form=False).terms
    t_lo = criteria.general_series(base, 100, closed_form=False).terms
    assert np.all(t_hi >= t_lo - 1e-12)


@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(configs(), st.integers(1, 300), st.integers(0, 300), st.integers(0, 2**32))
def test_survival_monotone_in_cap(cfg, cap1, extra, seed):
    a = sim.run_activation(cfg, cap1, stream(seed, 0))
    b = sim.run_activation(cfg, cap1 + extra, stream(seed, 0))
    if b.survived_to_cap:
        assert a.survived_to_cap
    if not a.survived_to_cap:
        assert b.died_at == a.died_at


@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(configs(), st.floats(0.05, 0.5), st.integers(1, 300), st.integers(0, 2**32))
def test_larger_drift_never_survives_longer(cfg, shift, cap, seed):
    j = np.arange(1, cap + 2)
    p = np.asarray(cfg.drift.p_at(j), dtype=float)
    base = ModelConfig(DriftSpec.from_table(list(p)), cfg.counts, cfg.p0)
    higher = ModelConfig(DriftSpec.from_table(list(p + shift * (1 - p))), cfg.counts,
                         cfg.p0 + shift * (1 - cfg.p0))
    lo = sim.run_activation(base, cap, stream(seed, 7))
    hi = sim.run_activation(higher, cap, stream(seed, 7))
    if hi.survived_to_cap:
        assert lo.survived_to_cap
    else:
        assert lo.survived_to_cap or lo.died_at >= hi.died_at


@settings(max_examples=15, deadline=None)
@given(configs(), st.integers(1, 200), st.integers(1, 20), st.integers(0, 2**32))
def test_estimates_reproducible(cfg, cap, trials, seed):
    a = sim.estimate_survival(cfg, cap, trials, seed, workers=1)
    b = sim.estimate_survival(cfg, cap, trials, seed, workers=3)
    assert a == b
    assert a.ci_low <= a.proportion <= a.ci_high


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 10.0), st.floats(0.01, 0.49))
def test_constant_poisson_criteria_agree(lam, a):
    t32 = criteria.poisson_terms(lam, np.full(200, a), 200)
    t31 = criteria.iid_drift_terms(np.full(200, a), D.poisson(lam), 200)
    assert t32.verdict == t31.verdict == criteria.DIVERGES
    # constant-drift Poisson closed form: the sum of exp(-c lam) over j diverges
    cfg = ModelConfig(DriftSpec.constant(0.5 + a),
                      FrogCountSpec.poisson_sequence(LambdaSpec("constant", value=lam)), 0.5 + a)
    assert criteria.closed_form_verdict(cfg)[0] == criteria.TRANSIENT
