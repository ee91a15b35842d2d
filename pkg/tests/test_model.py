import json
import math

import numpy as np
import pytest

from preydelay import (DelayFunction, ModelParams, ModelSpec, boundedness_limit,
                       consistent_history, constant_delay, constant_history,
                       correction_factor, exp_delay, history_consistency_error,
                       holling2, linear, make_delay, power_law,
                       reproduction_number, saturating_delay,
                       tabulated_history, validate)
from preydelay.model import HistoryConsistencyWarning, warn_if_inconsistent

from oracles import implicit_rate_solution


def model(r=1.0, K=2.0, n=1.0, dj=0.5, d=1.0, delay=None, response=None):
    return ModelSpec(ModelParams(r, K, n, dj, d),
                     delay or constant_delay(1.0),
                     response or linear(1.0))


# --------------------------------------------------------------------------
# parameters and delay laws


def test_params_must_be_positive():
    with pytest.raises(ValueError):
        ModelParams(r=0.0, K=1.0, n=1.0, dj=1.0, d=1.0)
    with pytest.raises(ValueError):
        ModelParams(r=1.0, K=1.0, n=1.0, dj=-0.1, d=1.0)


@pytest.mark.parametrize("delay", [
    constant_delay(0.7),
    saturating_delay(0.5, 1.5, 2.0),
    exp_delay(0.3, 1.2, 0.8),
])
def test_builtin_delays_respect_bounds(delay):
    ys = np.linspace(0.0, 50.0, 200)
    taus = np.array([delay.tau(y) for y in ys])
    assert delay.tau(0.0) == pytest.approx(delay.tau_m, rel=1e-12)
    assert np.all(taus >= delay.tau_m - 1e-12)
    assert np.all(taus <= delay.tau_M + 1e-12)
    assert np.all(np.diff(taus) >= -1e-12)
    for y in (0.0, 0.3, 2.0, 10.0):
        fd = (delay.tau(y + 1e-6) - delay.tau(max(y - 1e-6, 0.0))) / (
            1e-6 + min(y, 1e-6))
        assert delay.tau_prime(y) == pytest.approx(fd, rel=1e-4, abs=1e-7)


def test_make_delay_constant_requires_equal_bounds():
    with pytest.raises(ValueError):
        make_delay("constant", 0.5, 1.0)
    d = make_delay("saturating", 0.5, 1.0, theta=2.0)
    assert d.tau(1e9) == pytest.approx(1.0, rel=1e-6)


# --------------------------------------------------------------------------
# validation


def test_validate_passes_for_holling2():
    report = validate(model(response=holling2(b=2.0, h=0.5)))
    assert report.passed, str(report)


def test_validate_flags_powerlaw_exponent_but_not_monotonicity():
    report = validate(model(response=power_law(b=1.0, k=1.0)))
    failed = {c.name for c in report.failures}
    assert any("coefficients" in name for name in failed)
    assert not any("nondecreasing in x" in name for name in failed)


def test_validate_catches_wrong_delay_bound_with_witness():
    # tau(y) = 1 - exp(-y) exceeds a claimed upper bound of 0.5
    bad = DelayFunction(tau=lambda y: 1.0 - math.exp(-y),
                        tau_prime=lambda y: math.exp(-y),
                        tau_m=0.0, tau_M=0.5)
    report = validate(model(delay=bad))
    fails = [c for c in report.failures if "bounds" in c.name]
    assert len(fails) == 1
    y_witness, tau_witness = fails[0].witness
    assert tau_witness > 0.5 and 1.0 - math.exp(-y_witness) > 0.5


def test_validate_cross_checks_supplied_derivative():
    lying = DelayFunction(tau=lambda y: 0.5 + 0.1 * y / (1 + y),
                          tau_prime=lambda y: 0.0,  # wrong on purpose
                          tau_m=0.5, tau_M=0.6)
    report = validate(model(delay=lying))
    assert any("finite differences" in c.name for c in report.failures)


def test_validate_rejects_coarse_grid():
    with pytest.raises(ValueError):
        validate(model(), grid=8)


# --------------------------------------------------------------------------
# reproduction number


def test_reproduction_number_exponent_vanishes():
    # dj -> 0: R = n f(K,0) / d = 2 with b=1, K=2, d=1
    m = model(dj=1e-12)
    assert reproduction_number(m) == pytest.approx(2.0, rel=1e-10)


def test_reproduction_number_half_survival():
    m = model(dj=1.0, delay=constant_delay(math.log(2.0)))
    assert reproduction_number(m) == pytest.approx(1.0, rel=1e-15)


def test_reproduction_number_bd_is_r_independent():
    from preydelay import beddington_deangelis
    resp = beddington_deangelis(b=1.0, k1=0.1, k2=3.0)
    vals = {reproduction_number(model(r=r_, K=10.0, response=resp))
            for r_ in (0.5, 1.0, 2.0)}
    assert len(vals) == 1
    (val,) = vals
    assert val == pytest.approx(
        1.0 * math.exp(-0.5) * (1.0 * 10.0 / (1.0 + 0.1 * 10.0)) / 1.0)


def test_reproduction_number_monotonicity_signs():
    base = dict(r=1.0, K=2.0, n=1.0, dj=0.5, d=1.0)
    R0 = reproduction_number(model(**base))
    assert reproduction_number(model(**{**base, "n": 1.1})) > R0
    assert reproduction_number(model(**{**base, "d": 1.1})) < R0
    assert reproduction_number(
        model(**base, delay=constant_delay(1.2))) < R0
    assert reproduction_number(model(**{**base, "K": 2.4})) > R0  # f(K,0) up


# --------------------------------------------------------------------------
# correction factor


def test_correction_factor_constant_delay_is_one():
    assert correction_factor(model(), 3.0, 5.0) == 1.0


def test_correction_factor_zero_recruitment_value():
    m = model(d=1.0, delay=saturating_delay(0.5, 1.5, 5.0))
    # tau'(2) = 1.0 * 5 / 49; pick theta so tau'(y)=0.1 at y=2 instead:
    delay = DelayFunction(tau=lambda y: 0.5 + 0.1 * y, tau_prime=lambda y: 0.1,
                          tau_m=0.5, tau_M=math.inf)
    m = model(d=1.0, delay=delay)
    assert correction_factor(m, 2.0, 0.0) == pytest.approx(1.2, abs=0)


def test_correction_factor_matches_implicit_solve():
    rng = np.random.default_rng(2)
    for _ in range(300):
        tp, d, y, N = rng.uniform(0.0, 2.0), rng.uniform(0.05, 2.0), \
            rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)
        delay = DelayFunction(tau=lambda v, tp=tp: 0.5 + tp * v,
                              tau_prime=lambda v, tp=tp: tp,
                              tau_m=0.5, tau_M=math.inf)
        m = model(d=d, delay=delay)
        got = correction_factor(m, y, N)
        yp = implicit_rate_solution(tp, d, y, N)
        assert got == pytest.approx(1.0 - tp * yp, rel=1e-12, abs=1e-12)
        assert got > 0.0
        assert got <= 1.0 + tp * d * y + 1e-12


def test_correction_factor_rejects_negative_inputs():
    with pytest.raises(ValueError):
        correction_factor(model(), -1.0, 0.0)
    with pytest.raises(ValueError):
        correction_factor(model(), 1.0, -0.5)


# --------------------------------------------------------------------------
# histories


def test_history_consistency_identity():
    m = model(response=holling2(b=2.0, h=0.5))
    hist = consistent_history(m, x0=1.0, y0=0.6, amp=0.2, omega=2.0)
    assert history_consistency_error(m, hist) < 1e-9


def test_inconsistent_history_warns():
    m = model()
    hist = constant_history(1.0, 0.5, 10.0)  # juvenile stock far too large
    with pytest.warns(HistoryConsistencyWarning):
        warn_if_inconsistent(m, hist)


def test_history_nonnegativity_enforced():
    bad = tabulated_history([-1.0, 0.0], x=[1.0, 1.0], y=[-0.2, 0.5],
                            yj=[0.1, 0.1])
    with pytest.raises(ValueError):
        bad.check_nonnegative(tau_M=1.0)


def test_boundedness_limit_symmetric_rates():
    # dj = d: limit is n K (d + r)^2 / (4 r d)
    m = model(dj=1.0, d=1.0)
    assert boundedness_limit(m) == pytest.approx(2.0 * 4.0 / 4.0)


# --------------------------------------------------------------------------
# serialization


def test_json_round_trip():
    m = ModelSpec(ModelParams(1.5, 10.0, 0.8, 0.3, 0.6),
                  saturating_delay(0.4, 1.1, 2.0),
                  holling2(b=2.0, h=0.5))
    doc = json.loads(m.to_json())
    m2 = ModelSpec.from_dict(doc)
    assert m2.params == m.params
    assert m2.delay.kind == "saturating"
    assert m2.response.coefficients == m.response.coefficients
    for y in (0.0, 1.0, 7.0):
        assert m2.delay.tau(y) == pytest.approx(m.delay.tau(y), rel=1e-15)


def test_json_unknown_key_is_rejected_with_path():
    m = model()
    doc = m.to_dict()
    doc["params"]["extra"] = 1.0
    with pytest.raises(ValueError, match="params.extra"):
        ModelSpec.from_dict(doc)
