import math
import warnings

import numpy as np
import pytest

from preydelay import (IntegrationError, ModelParams, ModelSpec, State,
                       StepperConfig, beddington_deangelis, constant_delay,
                       consistent_history, constant_history, default_stepper,
                       exp_delay, export_csv, integrate, lag_times,
                       lagged_lookup, linear, rhs, saturating_delay,
                       yj_integral)
from preydelay.model import HistoryConsistencyWarning

from oracles import RK4StepsOracle, implicit_rate_solution


def quiet_integrate(model, hist, cfg):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", HistoryConsistencyWarning)
        return integrate(model, hist, cfg)


@pytest.fixture(scope="module")
def bd_traj(bd_model):
    hist = consistent_history(bd_model, 2.0, 0.5, amp=0.2)
    return integrate(bd_model, hist, default_stepper(bd_model, 60.0))


# --------------------------------------------------------------------------
# right-hand side


def test_rhs_decoupled_prey_is_logistic(const_delay_model):
    m = ModelSpec(const_delay_model.params, const_delay_model.delay, linear(0.0))
    hist = constant_history(0.5, 0.3, 0.2)
    cfg = default_stepper(m, 10.0, rtol=1e-10, atol=1e-12)
    traj = quiet_integrate(m, hist, cfg)
    r, K, x0 = 1.0, 2.0, 0.5
    for t in (1.0, 5.0, 10.0):
        exact = K * x0 * math.exp(r * t) / (K + x0 * (math.exp(r * t) - 1.0))
        assert traj.lookup(t)[0] == pytest.approx(exact, rel=1e-8)
        assert traj.lookup(t)[1] == pytest.approx(0.3 * math.exp(-0.8 * t), rel=1e-7)


def test_rhs_constant_delay_has_no_correction(const_delay_model):
    m = const_delay_model
    state = State(t=0.0, x=1.2, y=0.7, yj=0.4)
    x_lag, y_lag = 0.9, 0.5
    xp, yp, yjp = rhs(m, state, lambda s: (x_lag, y_lag))
    p = m.params
    N = p.n * math.exp(-p.dj * 1.0) * m.response.f(x_lag, y_lag) * y_lag
    assert yp == pytest.approx(N - p.d * 0.7, rel=1e-15)
    assert xp == pytest.approx(p.r * 1.2 * (1 - 1.2 / p.K)
                               - m.response.f(1.2, 0.7) * 0.7, rel=1e-15)
    assert yjp == pytest.approx(p.n * m.response.f(1.2, 0.7) * 0.7
                                - p.dj * 0.4 - N, rel=1e-15)


def test_rhs_matches_implicit_newton_solution():
    rng = np.random.default_rng(11)
    for _ in range(200):
        tau_m = rng.uniform(0.2, 0.8)
        m = ModelSpec(
            ModelParams(*rng.uniform(0.3, 2.0, 5)),
            saturating_delay(tau_m, tau_m + rng.uniform(0.1, 1.0),
                             rng.uniform(0.5, 2.0)),
            beddington_deangelis(b=rng.uniform(0.3, 2.0),
                                 k1=rng.uniform(0.0, 0.5),
                                 k2=rng.uniform(0.0, 2.0)))
        state = State(t=1.0, x=rng.uniform(0.0, 3.0), y=rng.uniform(0.0, 3.0),
                      yj=rng.uniform(0.0, 3.0))
        lag = (rng.uniform(0.0, 3.0), rng.uniform(0.0, 3.0))
        _, yp, _ = rhs(m, state, lambda s: lag)
        p = m.params
        tau = m.delay.tau(state.y)
        N = p.n * math.exp(-p.dj * tau) * m.response.f(*lag) * lag[1]
        yp_newton = implicit_rate_solution(m.delay.tau_prime(state.y),
                                           p.d, state.y, N)
        assert yp == pytest.approx(yp_newton, rel=1e-12, abs=1e-12)


# --------------------------------------------------------------------------
# integration


def test_constant_delay_matches_fixed_step_rk4(const_delay_model):
    m = const_delay_model
    hist = consistent_history(m, 1.0, 0.3, amp=0.2, omega=2.0)
    cfg = default_stepper(m, 5.0, rtol=1e-10, atol=1e-12)
    traj = integrate(m, hist, cfg)
    oracle = RK4StepsOracle(
        r=1.0, K=2.0, n=1.0, dj=0.2, d=0.8, f=m.response.f, tau=1.0,
        history=lambda s: (hist.phi1(s), hist.phi3(s), hist.phi2(s)),
        t_end=5.0, h=2e-4)
    for t in np.arange(0.5, 5.0001, 0.5):
        got = np.array(traj.lookup(float(t)))
        want = oracle.at(float(t))
        rel = np.max(np.abs(got - want) / np.maximum(np.abs(want), 1e-12))
        assert rel < 1e-6, (t, got, want)


def test_positivity_and_decay_floor(bd_model, bd_traj):
    assert np.all(bd_traj.us >= 0.0)
    y0 = bd_traj.lookup(0.0)[1]
    d = bd_model.params.d
    for t, y in zip(bd_traj.ts, bd_traj.us[:, 1]):
        assert y >= y0 * math.exp(-d * t) * (1.0 - 1e-7)


def test_lag_time_strictly_increasing(bd_model, bd_traj):
    lags = lag_times(bd_model, bd_traj)
    assert np.all(np.diff(lags) > 0.0)


def test_dense_output_continuous_at_joins(bd_traj):
    for t in bd_traj.ts[1:-1:7]:
        left = np.array(bd_traj.lookup(float(np.nextafter(t, -np.inf))))
        right = np.array(bd_traj.lookup(float(np.nextafter(t, np.inf))))
        assert np.max(np.abs(left - right)) < 1e-12


def test_interior_lookup_refines_at_local_error_order(bd_model):
    # mid-step dense output is cubic Hermite: accurate to local-error order,
    # and a half-step re-integration must shrink the interior deviation
    hist = consistent_history(bd_model, 2.0, 0.5, amp=0.2)
    ref = integrate(bd_model, hist,
                    default_stepper(bd_model, 8.0, rtol=1e-12, atol=1e-14))
    devs = []
    for h in (0.2, 0.1):
        cfg = StepperConfig(t_end=8.0, rtol=1e6, atol=1e6, h_init=h, h_max=h,
                            positivity_guard=False)
        traj = integrate(bd_model, hist, cfg)
        worst = 0.0
        for t in np.linspace(0.3, 7.7, 23):
            a = np.array(traj.lookup(float(t)))
            b = np.array(ref.lookup(float(t)))
            worst = max(worst, float(np.max(np.abs(a - b)
                                            / np.maximum(np.abs(b), 1e-10))))
        devs.append(worst)
    assert devs[0] < 3e-5
    assert devs[1] < devs[0] / 3.0  # fourth-order interpolant: ~16x per halving


def test_convergence_order_at_least_four(const_delay_model):
    m = const_delay_model
    hist = consistent_history(m, 1.0, 0.3, amp=0.2, omega=2.0)
    ref = integrate(m, hist, default_stepper(m, 4.0, rtol=1e-12, atol=1e-14))
    ref_end = np.array(ref.lookup(4.0))
    errs, hs = [], []
    for h in (0.25, 0.125, 0.0625, 0.03125):
        cfg = StepperConfig(t_end=4.0, rtol=1e6, atol=1e6, h_init=h, h_max=h,
                            positivity_guard=False)
        traj = quiet_integrate(m, hist, cfg)
        end = np.array(traj.lookup(4.0))
        errs.append(np.max(np.abs(end - ref_end)))
        hs.append(h)
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert slope >= 4.0, (slope, errs)


def test_h_max_must_stay_below_minimum_delay(bd_model):
    hist = constant_history(1.0, 0.5, 0.2)
    cfg = StepperConfig(t_end=10.0, h_init=0.01, h_max=0.6)
    with pytest.raises(ValueError, match="tau"):
        integrate(bd_model, hist, cfg)


def test_step_budget_failure_carries_partial_trajectory(bd_model):
    hist = consistent_history(bd_model, 2.0, 0.5)
    cfg = StepperConfig(t_end=50.0, h_init=0.01, h_max=0.2, max_steps=10)
    with pytest.raises(IntegrationError) as exc_info:
        integrate(bd_model, hist, cfg)
    partial = exc_info.value.trajectory
    assert partial is not None and 0.0 < partial.t_end < 50.0


def test_vanishing_minimum_delay_stage_iteration():
    # tau(0) = 0 exercises the provisional-segment fixed point; compare a
    # run with roomy steps against a sharply capped one
    m = ModelSpec(ModelParams(1.0, 2.0, 1.0, 0.4, 0.9),
                  exp_delay(0.0, 0.8, 1.5), linear(1.2))
    hist = consistent_history(m, 1.0, 0.4, amp=0.1)
    a = quiet_integrate(m, hist, StepperConfig(t_end=6.0, rtol=1e-9,
                                               atol=1e-11, h_init=0.01,
                                               h_max=0.05))
    b = quiet_integrate(m, hist, StepperConfig(t_end=6.0, rtol=1e-9,
                                               atol=1e-11, h_init=0.002,
                                               h_max=0.008))
    for t in np.linspace(0.5, 6.0, 12):
        va, vb = np.array(a.lookup(float(t))), np.array(b.lookup(float(t)))
        assert np.max(np.abs(va - vb) / np.maximum(np.abs(vb), 1e-9)) < 1e-5


# --------------------------------------------------------------------------
# lagged lookup and the juvenile integral


def test_lagged_lookup_reads_history(const_delay_model):
    m = const_delay_model
    hist = consistent_history(m, 1.0, 0.3, amp=0.2, omega=2.0)
    traj = integrate(m, hist, default_stepper(m, 3.0))
    x_lag, y_lag = lagged_lookup(m, traj, 0.5, y_now=1.0)
    assert x_lag == pytest.approx(hist.phi1(-0.5), rel=1e-12)
    assert y_lag == pytest.approx(hist.phi3(-0.5), rel=1e-12)


def test_lagged_lookup_outside_history_raises(const_delay_model):
    m = const_delay_model
    hist = consistent_history(m, 1.0, 0.3)
    traj = integrate(m, hist, default_stepper(m, 3.0))
    with pytest.raises(ValueError):
        traj.lookup(-1.5)


def test_yj_integral_matches_initial_juvenile_stock(bd_model):
    hist = consistent_history(bd_model, 2.0, 0.5, amp=0.2)
    traj = integrate(bd_model, hist, default_stepper(bd_model, 5.0))
    assert yj_integral(bd_model, traj, 0.0) == pytest.approx(
        hist.phi2(0.0), rel=1e-8)


def test_yj_integral_zero_for_zero_response(const_delay_model):
    m = ModelSpec(const_delay_model.params, const_delay_model.delay, linear(0.0))
    hist = constant_history(1.0, 0.3, 0.2)
    traj = quiet_integrate(m, hist, default_stepper(m, 5.0))
    assert yj_integral(m, traj, 3.0) == 0.0


def test_yj_integral_tracks_ode_channel(bd_model, bd_traj):
    for t in (2.0, 10.0, 20.0, 45.0):
        ode = bd_traj.lookup(t)[2]
        quad_val = yj_integral(bd_model, bd_traj, t)
        assert abs(ode - quad_val) / max(ode, 1e-10) < 1e-6


# --------------------------------------------------------------------------
# CSV export


def test_csv_export_deterministic_and_well_formed(bd_model, tmp_path):
    hist = consistent_history(bd_model, 2.0, 0.5, amp=0.2)
    cfg = default_stepper(bd_model, 10.0)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    export_csv(bd_model, integrate(bd_model, hist, cfg), p1, stride=0.5)
    export_csv(bd_model, integrate(bd_model, hist, cfg), p2, stride=0.5)
    assert p1.read_bytes() == p2.read_bytes()
    lines = p1.read_text().strip().split("\n")
    assert lines[0] == "t,x,y,yj,tau,lag_s,correction"
    row = [float(v) for v in lines[1].split(",")]
    assert row[0] == 0.0
    assert row[4] == pytest.approx(bd_model.delay.tau(row[2]), rel=1e-12)
    assert row[5] == row[0] - row[4]
    assert row[6] > 0.0
    # round trip: every float survives parse/format exactly
    assert repr(row[6]) in lines[1]
