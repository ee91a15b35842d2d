"""Model definition: parameters, composite spec, histories, and validation.

The model couples a logistic prey x with a stage-structured predator whose
maturation time is a bounded nondecreasing function tau(y) of the mature
stock y.  Newly matured predators arrive at rate

    (1 - tau'(y) y'(t)) * n * exp(-d_j tau(y)) * f(x_lag, y_lag) * y_lag,

the leading factor accounting for the moving maturation boundary.  Because
y'(t) appears on both sides, the system is resolved in closed form here
(see :func:`correction_factor` and the integration engine).
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.integrate import quad

from .delays import DelayFunction, make_delay
from .responses import FunctionalResponse, make_response

__all__ = [
    "ModelParams",
    "ModelSpec",
    "HistoryFunction",
    "ValidationReport",
    "CheckResult",
    "HistoryConsistencyWarning",
    "validate",
    "reproduction_number",
    "correction_factor",
    "boundedness_limit",
    "constant_history",
    "constant_plus_sine_history",
    "tabulated_history",
    "consistent_history",
    "history_consistency_error",
]


@dataclass(frozen=True)
class ModelParams:
    """Demographic constants, all strictly positive.

    r     prey intrinsic growth rate
    K     prey carrying capacity
    n     predator birth-rate conversion
    dj    juvenile predator death rate
    d     mature predator death rate
    """

    r: float
    K: float
    n: float
    dj: float
    d: float

    def __post_init__(self):
        for name in ("r", "K", "n", "dj", "d"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"parameter {name} must be strictly positive")


@dataclass(frozen=True)
class ModelSpec:
    """Immutable description of one model instance."""

    params: ModelParams
    delay: DelayFunction
    response: FunctionalResponse

    # -- derived scalars -------------------------------------------------

    def survival(self, tau: float) -> float:
        """Probability of surviving the juvenile stage of length tau."""
        return math.exp(-self.params.dj * tau)

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        p = self.params
        return {
            "params": {"r": p.r, "K": p.K, "n": p.n, "dj": p.dj, "d": p.d},
            "delay": {
                "kind": self.delay.kind,
                "coefficients": dict(self.delay.coefficients),
                "tau_m": self.delay.tau_m,
                "tau_M": self.delay.tau_M,
            },
            "response": {
                "kind": self.response.kind,
                "coefficients": dict(self.response.coefficients),
            },
        }

    def to_json(self, **dumps_kwargs) -> str:
        return json.dumps(self.to_dict(), **dumps_kwargs)

    @staticmethod
    def from_dict(doc: Mapping) -> "ModelSpec":
        _require_keys(doc, {"params", "delay", "response"}, "model")
        pdoc = doc["params"]
        _require_keys(pdoc, {"r", "K", "n", "dj", "d"}, "model.params")
        params = ModelParams(**{k: float(pdoc[k]) for k in ("r", "K", "n", "dj", "d")})
        ddoc = doc["delay"]
        _require_keys(ddoc, {"kind", "coefficients", "tau_m", "tau_M"}, "model.delay")
        delay = make_delay(ddoc["kind"], float(ddoc["tau_m"]), float(ddoc["tau_M"]),
                           **{k: float(v) for k, v in ddoc["coefficients"].items()})
        rdoc = doc["response"]
        _require_keys(rdoc, {"kind", "coefficients"}, "model.response")
        response = make_response(rdoc["kind"],
                                 **{k: float(v) for k, v in rdoc["coefficients"].items()})
        return ModelSpec(params, delay, response)

    @staticmethod
    def from_json(text: str) -> "ModelSpec":
        return ModelSpec.from_dict(json.loads(text))


def _require_keys(doc: Mapping, expected: set, path: str) -> None:
    unknown = set(doc) - expected
    if unknown:
        key = sorted(unknown)[0]
        raise ValueError(f"unknown key {path}.{key}")
    missing = expected - set(doc)
    if missing:
        key = sorted(missing)[0]
        raise ValueError(f"missing key {path}.{key}")


# --------------------------------------------------------------------------
# scalar operations


def reproduction_number(model: ModelSpec) -> float:
    """Predator net reproduction number R = n exp(-dj tau(0)) f(K, 0) / d.

    One newborn predator placed in a prey-saturated, predator-free environment
    leaves R offspring.  R > 1 is equivalent to permanence of the system and
    to existence of the coexistence equilibrium.
    """
    p = model.params
    tau0 = model.delay.tau(0.0)
    return p.n * math.exp(-p.dj * tau0) * model.response.f(p.K, 0.0) / p.d


def correction_factor(model: ModelSpec, y: float, lagged_recruitment: float) -> float:
    """The maturation-flux factor 1 - tau'(y) y'(t), resolved in closed form.

    With N the lagged recruitment rate n exp(-dj tau(y)) f(x_lag, y_lag) y_lag,
    substituting y' = (N - d y) / (1 + tau'(y) N) gives

        1 - tau'(y) y' = (1 + tau'(y) d y) / (1 + tau'(y) N),

    which is positive for every y >= 0, N >= 0 and bounded by 1 + tau'(y) d y.
    """
    if y < 0.0:
        raise ValueError(f"density must be nonnegative, got y={y}")
    if lagged_recruitment < 0.0:
        raise ValueError(
            f"lagged recruitment must be nonnegative, got {lagged_recruitment}")
    tp = model.delay.tau_prime(y)
    return (1.0 + tp * model.params.d * y) / (1.0 + tp * lagged_recruitment)


def boundedness_limit(model: ModelSpec) -> float:
    """Eventual upper bound for V = n x + y + yj.

    V' <= -min(dj, d) V + M with M the maximum of the concave quadratic
    n (min(dj,d)+r) x - (n r / K) x^2, so limsup V <= M / min(dj, d).
    """
    p = model.params
    m = min(p.dj, p.d)
    M = p.n * p.K * (m + p.r) ** 2 / (4.0 * p.r)
    return M / m


# --------------------------------------------------------------------------
# histories


@dataclass(frozen=True)
class HistoryFunction:
    """Initial data on [-tau_M, 0]: prey phi1, juvenile phi2, mature phi3.

    All three must be nonnegative with positive values at 0.  phi2 influences
    only the juvenile channel's starting value phi2(0); for that value to be
    dynamically consistent it should equal the survival-discounted integral of
    past recruitment (see :func:`history_consistency_error`).
    """

    phi1: Callable[[float], float] = field(repr=False)
    phi2: Callable[[float], float] = field(repr=False)
    phi3: Callable[[float], float] = field(repr=False)
    label: str = ""

    def state0(self) -> tuple[float, float, float]:
        """(x, y, yj) at t = 0."""
        return (float(self.phi1(0.0)), float(self.phi3(0.0)), float(self.phi2(0.0)))

    def check_nonnegative(self, tau_M: float, samples: int = 64) -> None:
        thetas = np.linspace(-tau_M, 0.0, samples)
        for name, fn in (("phi1", self.phi1), ("phi2", self.phi2), ("phi3", self.phi3)):
            vals = np.array([fn(t) for t in thetas], dtype=float)
            if np.any(vals < 0.0):
                theta = thetas[int(np.argmin(vals))]
                raise ValueError(
                    f"history {name} is negative at theta={theta:.6g}: {vals.min():.6g}")
        x0, y0, yj0 = self.state0()
        if not (x0 > 0.0 and y0 > 0.0 and yj0 > 0.0):
            raise ValueError(
                f"history values at 0 must be positive, got ({x0}, {yj0}, {y0})")


class HistoryConsistencyWarning(UserWarning):
    """phi2(0) does not match the survival-discounted recruitment integral."""


def history_consistency_error(model: ModelSpec, history: HistoryFunction) -> float:
    """Relative mismatch between phi2(0) and the juvenile stock implied by history.

    The implied stock is the adaptive quadrature of
    n f(phi1(s), phi3(s)) phi3(s) exp(dj s) over s in [-tau(phi3(0)), 0].
    """
    p = model.params
    tau0 = model.delay.tau(history.phi3(0.0))

    def integrand(s: float) -> float:
        return (p.n * model.response.f(history.phi1(s), history.phi3(s))
                * history.phi3(s) * math.exp(p.dj * s))

    implied, _ = quad(integrand, -tau0, 0.0, epsabs=0.0, epsrel=1e-8, limit=200)
    scale = max(abs(implied), abs(history.phi2(0.0)), 1e-300)
    return abs(history.phi2(0.0) - implied) / scale


def warn_if_inconsistent(model: ModelSpec, history: HistoryFunction,
                         rel_tol: float = 1e-6) -> float:
    err = history_consistency_error(model, history)
    if err > rel_tol:
        warnings.warn(
            f"history phi2(0) deviates from the implied juvenile stock by a "
            f"relative {err:.3g}; the juvenile channel will start inconsistently",
            HistoryConsistencyWarning, stacklevel=2)
    return err


def constant_history(x0: float, y0: float, yj0: float, label: str = "") -> HistoryFunction:
    """Constant history (x0, y0 mature, yj0 juvenile)."""
    return HistoryFunction(
        phi1=lambda t: x0, phi2=lambda t: yj0, phi3=lambda t: y0,
        label=label or f"const({x0:g},{y0:g},{yj0:g})")


def constant_plus_sine_history(x0: float, y0: float, yj0: float,
                               amp: float = 0.2, omega: float = 2.0,
                               phase: float = 0.0, label: str = "") -> HistoryFunction:
    """Positive constants modulated by a common sine, exercising the whole lag window."""
    if not 0.0 <= amp < 1.0:
        raise ValueError("relative amplitude must lie in [0, 1)")

    def mod(t: float) -> float:
        return 1.0 + amp * math.sin(omega * t + phase)

    return HistoryFunction(
        phi1=lambda t: x0 * mod(t), phi2=lambda t: yj0 * mod(t),
        phi3=lambda t: y0 * mod(t),
        label=label or f"sine({x0:g},{y0:g},{yj0:g};a={amp:g})")


def tabulated_history(times: Sequence[float], x: Sequence[float],
                      y: Sequence[float], yj: Sequence[float],
                      label: str = "tabulated") -> HistoryFunction:
    """Piecewise-linear history through sample points (times must cover [-tau_M, 0])."""
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size < 2 or np.any(np.diff(t) <= 0.0):
        raise ValueError("times must be strictly increasing with at least 2 points")
    xa, ya, yja = (np.asarray(v, dtype=float) for v in (x, y, yj))

    def interp(vals):
        return lambda s: float(np.interp(s, t, vals))

    return HistoryFunction(phi1=interp(xa), phi2=interp(yja), phi3=interp(ya),
                           label=label)


def consistent_history(model: ModelSpec, x0: float, y0: float,
                       amp: float = 0.0, omega: float = 2.0, phase: float = 0.0,
                       label: str = "") -> HistoryFunction:
    """History with phi2(0) computed from the recruitment integral.

    Prey and mature-predator histories are constants (optionally sine
    modulated); the juvenile history is the constant that makes the initial
    juvenile stock exactly consistent with the past recruitment they imply.
    """
    if amp == 0.0:
        base = constant_history(x0, y0, 1.0)
    else:
        base = constant_plus_sine_history(x0, y0, 1.0, amp=amp, omega=omega, phase=phase)
    p = model.params
    tau0 = model.delay.tau(base.phi3(0.0))

    def integrand(s: float) -> float:
        return (p.n * model.response.f(base.phi1(s), base.phi3(s))
                * base.phi3(s) * math.exp(p.dj * s))

    yj0, _ = quad(integrand, -tau0, 0.0, epsabs=0.0, epsrel=1e-10, limit=200)
    return HistoryFunction(
        phi1=base.phi1, phi2=lambda t: yj0, phi3=base.phi3,
        label=label or f"consistent({x0:g},{y0:g};a={amp:g})")


# --------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    witness: object = None
    detail: str = ""

    def __str__(self):
        mark = "pass" if self.passed else "FAIL"
        extra = f" [{self.detail}]" if self.detail and not self.passed else ""
        return f"{mark}  {self.name}{extra}"


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> tuple[CheckResult, ...]:
        return tuple(c for c in self.checks if not c.passed)

    def __str__(self):
        return "\n".join(str(c) for c in self.checks)


def validate(model: ModelSpec, grid: int = 64, y_cap: float | None = None) -> ValidationReport:
    """Check the model hypotheses on a sampled grid; never raises on content.

    Positivity of the demographic constants, delay monotonicity/bounds and the
    consistency of the supplied tau' with finite differences of tau, response
    sign/monotonicity structure, and kind-specific coefficient constraints are
    each reported with a witness point for any failure.  ``y_cap`` defaults to
    the eventual bound for V = n x + y + yj so the grid covers the reachable
    region.
    """
    if grid < 16:
        raise ValueError("grid must be at least 16 points per axis")
    checks: list[CheckResult] = []
    p, delay, resp = model.params, model.delay, model.response
    if y_cap is None:
        y_cap = boundedness_limit(model)

    # (A1) positive constants
    for name in ("r", "K", "n", "dj", "d"):
        v = getattr(p, name)
        checks.append(CheckResult(f"params.{name} > 0", v > 0.0, witness=v))

    ys = np.linspace(0.0, y_cap, grid)
    xs = np.linspace(0.0, p.K, grid)

    # (A2) delay structure
    tau_vals = np.array([delay.tau(y) for y in ys])
    tp_vals = np.array([delay.tau_prime(y) for y in ys])
    bad = np.nonzero(tp_vals < 0.0)[0]
    checks.append(CheckResult(
        "delay.tau_prime >= 0", bad.size == 0,
        witness=None if bad.size == 0 else (ys[bad[0]], tp_vals[bad[0]])))
    bad = np.nonzero((tau_vals < delay.tau_m - 1e-12) |
                     (tau_vals > delay.tau_M + 1e-12))[0]
    checks.append(CheckResult(
        "delay bounds tau_m <= tau(y) <= tau_M", bad.size == 0,
        witness=None if bad.size == 0 else (ys[bad[0]], tau_vals[bad[0]]),
        detail="" if bad.size == 0 else
        f"tau({ys[bad[0]]:.6g}) = {tau_vals[bad[0]]:.6g} outside "
        f"[{delay.tau_m:.6g}, {delay.tau_M:.6g}]"))
    checks.append(CheckResult(
        "delay.tau(0) == tau_m",
        abs(delay.tau(0.0) - delay.tau_m) <= 1e-9 * max(1.0, abs(delay.tau_m)),
        witness=delay.tau(0.0)))
    diffs = np.diff(tau_vals)
    bad = np.nonzero(diffs < -1e-12)[0]
    checks.append(CheckResult(
        "delay nondecreasing on grid", bad.size == 0,
        witness=None if bad.size == 0 else ys[bad[0]]))
    # supplied derivative vs central differences of tau
    hgrid = max(y_cap, 1.0) * 1e-6
    fd_ok, fd_witness = True, None
    for y in ys[1:-1]:
        fd = (delay.tau(y + hgrid) - delay.tau(y - hgrid)) / (2.0 * hgrid)
        if abs(fd - delay.tau_prime(y)) > 1e-5 * max(1.0, abs(fd)):
            fd_ok, fd_witness = False, (y, fd, delay.tau_prime(y))
            break
    checks.append(CheckResult("delay.tau_prime matches finite differences",
                              fd_ok, witness=fd_witness))

    # (A3) response structure
    for err in resp.coefficient_errors():
        checks.append(CheckResult(f"response coefficients: {err}", False, detail=err))
    if not resp.coefficient_errors():
        checks.append(CheckResult("response coefficient constraints", True))

    zero_ok, zero_witness = True, None
    for y in ys:
        if resp.f(0.0, y) != 0.0:
            zero_ok, zero_witness = False, (0.0, y, resp.f(0.0, y))
            break
    checks.append(CheckResult("response f(0, y) == 0", zero_ok, witness=zero_witness))

    pos_ok, pos_witness = True, None
    mono_x_ok, mono_x_witness = True, None
    mono_y_ok, mono_y_witness = True, None
    F = np.empty((grid, grid))
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            F[i, j] = resp.f(x, y)
    interior = F[1:, :]
    if np.any(interior <= 0.0):
        i, j = np.argwhere(interior <= 0.0)[0]
        pos_ok, pos_witness = False, (xs[i + 1], ys[j], interior[i, j])
    dx = np.diff(F, axis=0)
    if np.any(dx < -1e-12):
        i, j = np.argwhere(dx < -1e-12)[0]
        mono_x_ok, mono_x_witness = False, (xs[i], ys[j])
    dy = np.diff(F, axis=1)
    if np.any(dy > 1e-12):
        i, j = np.argwhere(dy > 1e-12)[0]
        mono_y_ok, mono_y_witness = False, (xs[i], ys[j])
    checks.append(CheckResult("response f > 0 for x, y > 0", pos_ok, witness=pos_witness))
    checks.append(CheckResult("response nondecreasing in x", mono_x_ok,
                              witness=mono_x_witness))
    checks.append(CheckResult("response nonincreasing in y", mono_y_ok,
                              witness=mono_y_witness))
    fx00 = resp.f_x(0.0, 0.0)
    checks.append(CheckResult("response |f_x(0,0)| finite", math.isfinite(fx00),
                              witness=fx00))

    return ValidationReport(tuple(checks))
