"""Linearized stability: characteristic quasi-polynomial and classifiers.

Freezing the delay at an equilibrium (x*, y*) gives the linear system

    x'(t) = A x(t) - B y(t)
    y'(t) = C x(t - tau*) + (eta - d) y(t) + D y(t - tau*)

whose spectrum solves G(lambda) = lambda^2 + H1 lambda + H2
+ (N1 lambda + N2) exp(-lambda tau*) = 0 with H1 = d - eta - A,
H2 = A (eta - d), N1 = -D, N2 = A D + B C.  Purely imaginary roots
i v correspond to positive real roots of a quartic in v, classified
exactly through the resolvent cubic; the rightmost spectral abscissa is
located numerically by argument-principle winding counts on subdivided
rectangles with Newton refinement.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .equilibria import Equilibrium, EquilibriumKind
from .model import ModelSpec, reproduction_number
from .responses import ResponseKind

__all__ = [
    "LinearizationCoeffs",
    "QuasiPolynomial",
    "QuarticReport",
    "StabilityVerdict",
    "ConditionReport",
    "Verdict",
    "WindingError",
    "linearize_at",
    "quasi_polynomial",
    "characteristic_eval",
    "characteristic_derivative",
    "rightmost_abscissa",
    "quartic_classify",
    "classify_equilibrium",
    "check_global_conditions",
]


class WindingError(RuntimeError):
    """The contour count stayed unstable after repeated perturbations."""


class Verdict:
    UNSTABLE = "unstable"
    NEUTRALLY_STABLE = "neutrally_stable"
    STABLE = "locally_asymptotically_stable"
    UNSUPPORTED = "unsupported"


@dataclass(frozen=True)
class LinearizationCoeffs:
    """Coefficients of the frozen-delay linearization at an equilibrium."""

    A: float
    B: float
    C: float
    D: float
    eta: float
    tau_star: float


@dataclass(frozen=True)
class QuasiPolynomial:
    """G(lambda) = lambda^2 + H1 lambda + H2 + (N1 lambda + N2) e^(-lambda tau)."""

    H1: float
    H2: float
    N1: float
    N2: float
    tau: float


def linearize_at(model: ModelSpec, eq: Equilibrium) -> LinearizationCoeffs:
    """Linearization coefficients at a steady state with residual <= 1e-10."""
    if eq.residual > 1e-10:
        raise ValueError(f"equilibrium residual {eq.residual:.3g} too large")
    p = model.params
    x, y = eq.x_star, eq.y_star
    f = model.response.f(x, y)
    fx = model.response.f_x(x, y)
    fy = model.response.f_y(x, y)
    tau = model.delay.tau(y)
    tp = model.delay.tau_prime(y)
    surv = math.exp(-p.dj * tau)
    return LinearizationCoeffs(
        A=p.r - 2.0 * p.r * x / p.K - fx * y,
        B=f + fy * y,
        C=p.n * surv * fx * y,
        D=p.n * surv * (f + fy * y),
        eta=p.n * surv * tp * f * y * (p.d - p.dj),
        tau_star=tau,
    )


def quasi_polynomial(model: ModelSpec, coeffs: LinearizationCoeffs) -> QuasiPolynomial:
    d = model.params.d
    return QuasiPolynomial(
        H1=d - coeffs.eta - coeffs.A,
        H2=coeffs.A * (coeffs.eta - d),
        N1=-coeffs.D,
        N2=coeffs.A * coeffs.D + coeffs.B * coeffs.C,
        tau=coeffs.tau_star,
    )


def characteristic_eval(qp: QuasiPolynomial, lam: complex) -> complex:
    return (lam * lam + qp.H1 * lam + qp.H2
            + (qp.N1 * lam + qp.N2) * cmath.exp(-lam * qp.tau))


def characteristic_derivative(qp: QuasiPolynomial, lam: complex) -> complex:
    e = cmath.exp(-lam * qp.tau)
    return (2.0 * lam + qp.H1
            + (qp.N1 - qp.tau * (qp.N1 * lam + qp.N2)) * e)


# --------------------------------------------------------------------------
# quartic classifier


@dataclass(frozen=True)
class QuarticReport:
    """Decision data for positive real roots of v^4 + Q1 v^3 + Q2 v^2 + Q3 v + Q4.

    The resolvent cubic of h'(v)/4 (depressed by v = w - Q1/4) has
    M = Q2/2 - 3 Q1^2/16, N = Q1^3/32 - Q1 Q2/8 + Q3/4 and discriminant
    delta = (N/2)^2 + (M/3)^3; its roots Y_i give the critical points
    v_i = Y_i - Q1/4 of the quartic, from which existence of a positive real
    root follows by sign inspection.
    """

    Q1: float
    Q2: float
    Q3: float
    Q4: float
    M: float
    N: float
    delta: float
    Y1: complex
    Y2: complex
    Y3: complex
    v1: complex
    v2: complex
    v3: complex
    has_positive_root: bool
    case: str

    def h(self, v: float) -> float:
        return ((((v + self.Q1) * v + self.Q2) * v + self.Q3) * v + self.Q4)

    def boundary_distance(self) -> float:
        """Distance to the nearest decision boundary (for margin exclusion)."""
        dist = abs(self.Q4)
        if self.case == "negative_constant":
            return dist
        dist = min(dist, abs(self.delta))
        for v in (self.v1, self.v2, self.v3):
            if abs(v.imag) <= 1e-9:
                vr = v.real
                dist = min(dist, abs(vr))
                if vr > 0.0:
                    dist = min(dist, abs(self.h(vr)))
        return dist


_SIGMA = complex(-0.5, 0.5 * math.sqrt(3.0))


def quartic_classify(Q1: float, Q2: float, Q3: float, Q4: float) -> QuarticReport:
    """Decide whether the quartic has a positive real root, by cases.

    (i) Q4 < 0: h(0) < 0 and h(+inf) = +inf force a positive root.
    (ii) delta >= 0: the quartic has a single real critical point v1 (its
        global minimum); a positive root exists iff v1 > 0 and h(v1) < 0.
    (iii) delta < 0: three real critical points; a positive root exists iff
        some positive critical point has h <= 0.

    The report always carries the Cardano data (sigma pairing of the two cube
    roots); complex-valued candidates are excluded when |Im| > 1e-9.
    """
    M = 0.5 * Q2 - 3.0 * Q1 * Q1 / 16.0
    N = Q1 ** 3 / 32.0 - Q1 * Q2 / 8.0 + Q3 / 4.0
    delta = (0.5 * N) ** 2 + (M / 3.0) ** 3

    if delta >= 0.0:
        rd = math.sqrt(delta)
        u = float(np.cbrt(-0.5 * N + rd))
        w = float(np.cbrt(-0.5 * N - rd))
        uc, wc = complex(u), complex(w)
    else:
        uc = (complex(-0.5 * N, math.sqrt(-delta))) ** (1.0 / 3.0)
        wc = uc.conjugate()
    Y1 = uc + wc
    Y2 = _SIGMA * uc + _SIGMA ** 2 * wc
    Y3 = _SIGMA ** 2 * uc + _SIGMA * wc
    shift = Q1 / 4.0
    v1, v2, v3 = (Y - shift for Y in (Y1, Y2, Y3))

    def h(v: float) -> float:
        return (((v + Q1) * v + Q2) * v + Q3) * v + Q4

    if Q4 < 0.0:
        case = "negative_constant"
        has_root = True
    elif delta >= 0.0:
        case = "single_minimum"
        vr = v1.real
        has_root = vr > 0.0 and h(vr) < 0.0
    else:
        case = "three_critical_points"
        has_root = any(
            v.real > 0.0 and h(v.real) <= 0.0
            for v in (v1, v2, v3) if abs(v.imag) <= 1e-9
        )

    return QuarticReport(Q1, Q2, Q3, Q4, M, N, delta, Y1, Y2, Y3,
                         v1, v2, v3, has_root, case)


def imaginary_crossing_quartic(qp: QuasiPolynomial) -> tuple[float, float]:
    """(B1, B2) such that i v is a characteristic root only if
    v^4 + B1 v^2 + B2 = 0 has the positive real root v^2 > 0."""
    B1 = qp.H1 * qp.H1 - 2.0 * qp.H2 - qp.N1 * qp.N1
    B2 = qp.H2 * qp.H2 - qp.N2 * qp.N2
    return B1, B2


# --------------------------------------------------------------------------
# rightmost spectral abscissa by argument-principle winding


def _default_box(qp: QuasiPolynomial) -> tuple[float, float, float, float]:
    a0 = abs(qp.H1) + abs(qp.N1)
    b0 = abs(qp.H2) + abs(qp.N2)
    bound0 = 0.5 * (a0 + math.sqrt(a0 * a0 + 4.0 * b0))
    re_max = max(1.0, bound0)
    re_min = -(1.0 + a0 + math.sqrt(b0) + 1.0 / max(qp.tau, 0.1))
    if qp.tau > 0.0:
        grow = math.exp(-re_min * qp.tau)
        a = abs(qp.H1) + abs(qp.N1) * grow
        b = abs(qp.H2) + abs(qp.N2) * grow
        im_max = 0.5 * (a + math.sqrt(a * a + 4.0 * b)) + 1.0
        im_max = min(im_max, max(40.0, 12.0 * math.pi / qp.tau))
    else:
        im_max = bound0 + 1.0
    return (re_min, re_max, -1e-3, im_max)


class _ContourTrouble(Exception):
    pass


def _edge_arg_sum(qp: QuasiPolynomial, z0: complex, z1: complex,
                  n0: int) -> tuple[float, float]:
    """Total argument variation of G along the segment z0 -> z1.

    Samples are refined until consecutive phase increments stay below one
    radian, which rules out aliasing of full turns.
    """
    ts = np.linspace(0.0, 1.0, max(n0, 8))
    for _ in range(26):
        zs = z0 + (z1 - z0) * ts
        vals = _eval_array(qp, zs)
        if not np.all(np.isfinite(vals)):
            raise _ContourTrouble("non-finite contour value")
        dph = np.angle(vals[1:] / vals[:-1])
        bad = np.nonzero(np.abs(dph) > 1.0)[0]
        if bad.size == 0:
            return float(np.sum(dph)), float(np.min(np.abs(vals)))
        if ts.size > 40000:
            raise _ContourTrouble("contour refinement exploded")
        mids = 0.5 * (ts[bad] + ts[bad + 1])
        ts = np.sort(np.concatenate([ts, mids]))
    raise _ContourTrouble("argument variation would not settle")


def _eval_array(qp: QuasiPolynomial, zs: np.ndarray) -> np.ndarray:
    return (zs * zs + qp.H1 * zs + qp.H2
            + (qp.N1 * zs + qp.N2) * np.exp(-qp.tau * zs))


def _winding(qp: QuasiPolynomial, rect: tuple[float, float, float, float],
             n0: int) -> int:
    re0, re1, im0, im1 = rect
    corners = [complex(re0, im0), complex(re1, im0),
               complex(re1, im1), complex(re0, im1), complex(re0, im0)]
    total = 0.0
    min_abs = math.inf
    for a, b in zip(corners[:-1], corners[1:]):
        s, m = _edge_arg_sum(qp, a, b, n0)
        total += s
        min_abs = min(min_abs, m)
    scale = 1.0 + abs(qp.H2) + abs(qp.N2)
    if min_abs < 1e-9 * scale:
        raise _ContourTrouble("near-zero on contour")
    w = total / (2.0 * math.pi)
    wi = round(w)
    if abs(w - wi) > 0.25:
        raise _ContourTrouble(f"non-integer winding {w:.3f}")
    return int(wi)


def _winding_robust(qp: QuasiPolynomial, rect, n0: int) -> tuple[int, tuple]:
    """Winding count with the contour nudged outward on instability."""
    re0, re1, im0, im1 = rect
    for attempt in range(6):
        try:
            return _winding(qp, (re0, re1, im0, im1), n0), (re0, re1, im0, im1)
        except _ContourTrouble:
            pad = 1e-6 * (1.0 + attempt) * max(re1 - re0, im1 - im0, 1.0)
            re0 -= pad
            re1 += pad
            im0 -= pad
            im1 += pad
    raise WindingError(
        f"winding count unstable on [{re0:.4g},{re1:.4g}]x[{im0:.4g},{im1:.4g}]")


def _newton_root(qp: QuasiPolynomial, z0: complex) -> complex | None:
    z = z0
    for _ in range(80):
        g = characteristic_eval(qp, z)
        gp = characteristic_derivative(qp, z)
        if gp == 0.0:
            return None
        step = g / gp
        z -= step
        if abs(step) <= 1e-12 * max(1.0, abs(z)):
            return z
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            return None
    return None


def rightmost_abscissa(qp: QuasiPolynomial,
                       box: tuple[float, float, float, float] | None = None,
                       ngrid: int = 64) -> tuple[float, list[complex]]:
    """Largest real part over characteristic roots inside the search box.

    Roots are isolated by winding counts on recursively subdivided rectangles
    and polished by Newton iteration to ~1e-12 relative.  The default box
    exploits conjugate symmetry (lower edge just below the real axis) and an
    a-priori modulus bound for roots with real part above the left edge.
    Returns (-inf, []) when the box contains no root.
    """
    if box is None:
        box = _default_box(qp)
    re0, re1, im0, im1 = (float(v) for v in box)
    scale = max(1.0, abs(re0), abs(re1), abs(im1))
    roots: list[complex] = []

    def add_root(z: complex) -> None:
        for r in roots:
            if abs(r - z) <= 1e-7 * scale:
                return
        if (re0 - 1e-6 * scale <= z.real <= re1 + 1e-6 * scale
                and im0 - 1e-6 * scale <= z.imag <= im1 + 1e-6 * scale):
            roots.append(z)

    stack = [(re0, re1, im0, im1)]
    while stack:
        rect = stack.pop()
        w, rect = _winding_robust(qp, rect, ngrid)
        if w == 0:
            continue
        width = rect[1] - rect[0]
        height = rect[3] - rect[2]
        small = max(width, height) <= 2e-2 * scale
        if w == 1 or small:
            centre = complex(0.5 * (rect[0] + rect[1]), 0.5 * (rect[2] + rect[3]))
            starts = [centre]
            if w > 1:
                starts += [centre + complex(0.3 * width, 0.0),
                           centre - complex(0.3 * width, 0.0),
                           centre + complex(0.0, 0.3 * height),
                           centre - complex(0.0, 0.3 * height)]
            pad = 1e-5 * scale
            captured = 0
            for s in starts:
                z = _newton_root(qp, s)
                if z is None or abs(characteristic_eval(qp, z)) > 1e-8 * (
                        1.0 + abs(qp.H2) + abs(qp.N2)):
                    continue
                add_root(z)
                if (rect[0] - pad <= z.real <= rect[1] + pad
                        and rect[2] - pad <= z.imag <= rect[3] + pad):
                    captured += 1
            if captured >= w or max(width, height) <= 1e-8 * scale:
                continue
            # not every enclosed root captured: keep subdividing
        if width >= height:
            mid = 0.5 * (rect[0] + rect[1])
            stack.append((rect[0], mid, rect[2], rect[3]))
            stack.append((mid, rect[1], rect[2], rect[3]))
        else:
            mid = 0.5 * (rect[2] + rect[3])
            stack.append((rect[0], rect[1], rect[2], mid))
            stack.append((rect[0], rect[1], mid, rect[3]))

    if not roots:
        return (-math.inf, [])
    roots.sort(key=lambda z: -z.real)
    return (roots[0].real, roots)


# --------------------------------------------------------------------------
# equilibrium classification


def _classification_box(d: float, coeffs: LinearizationCoeffs):
    """Model-aware search rectangle for the spectral cross-check.

    Real part spans [-(d + |A| + |D| + 1), 1 + |A| + |D|]; the imaginary
    window covers ten delay-frequencies (conjugate symmetry makes the lower
    half redundant, so the bottom edge sits just below the axis).
    """
    re_min = -(d + abs(coeffs.A) + abs(coeffs.D) + 1.0)
    re_max = 1.0 + abs(coeffs.A) + abs(coeffs.D)
    im_max = (10.0 * 2.0 * math.pi / coeffs.tau_star
              if coeffs.tau_star > 0.0 else 40.0)
    return (re_min, re_max, -1e-3, im_max)


@dataclass(frozen=True)
class ConditionReport:
    """Explicit stability/attraction inequalities with their margins.

    The "local" set asks for permanence, mature mortality not exceeding
    juvenile mortality, and interference k2 above a threshold depending on
    the zero-state delay; the "global" set asks for predator viability at
    prey capacity plus interference above the largest of three thresholds
    built from the equilibrium delay.
    """

    R: float
    permanent: bool
    death_ordering_ok: bool
    local_interference_required: float
    local_interference_ok: bool
    viability_lhs: float
    viability_ok: bool
    global_interference_required: float
    global_interference_ok: bool
    local_ok: bool
    global_ok: bool
    overall: bool
    margins: dict = field(default_factory=dict)


def check_global_conditions(model: ModelSpec, eq: Equilibrium) -> ConditionReport:
    """Evaluate the explicit interference conditions at a coexistence point.

    Only defined for the Beddington-DeAngelis response (the inequalities are
    formulated through its coefficients).
    """
    if model.response.kind != ResponseKind.BEDDINGTON_DEANGELIS:
        raise ValueError("global-attraction conditions are specific to the "
                         "Beddington-DeAngelis response")
    if eq.kind != EquilibriumKind.COEXISTENCE:
        raise ValueError("conditions are evaluated at a coexistence equilibrium")
    p = model.params
    c = model.response.coefficients
    b, k1, k2 = c["b"], c["k1"], c["k2"]
    e0 = math.exp(-p.dj * model.delay.tau(0.0))
    es = math.exp(-p.dj * model.delay.tau(eq.y_star))

    R = reproduction_number(model)
    permanent = R > 1.0
    death_ordering_ok = p.d <= p.dj

    local_req = 2.0 * (p.n * b * e0 - p.d * k1) / (p.n * p.r * e0)
    local_ok = k2 > local_req

    viability_lhs = p.n * b * es * p.K / (1.0 + k1 * p.K)
    viability_ok = viability_lhs > p.d

    g = p.n * b * es - p.d * k1
    t2 = b * p.K * g / (p.r * p.d)
    t3 = b / p.r
    if g * p.K - p.d > 0.0:
        t1 = b * p.K * g / (p.r * (g * p.K - p.d))
        global_req = max(t1, t2, t3)
    else:
        t1 = math.inf
        global_req = math.inf
    global_ok = k2 > global_req

    local_all = permanent and death_ordering_ok and local_ok
    global_all = viability_ok and global_ok
    margins = {
        "k2_minus_local_required": k2 - local_req,
        "dj_minus_d": p.dj - p.d,
        "R_minus_1": R - 1.0,
        "viability_lhs_minus_d": viability_lhs - p.d,
        "k2_minus_global_required": (k2 - global_req
                                     if math.isfinite(global_req) else -math.inf),
    }
    return ConditionReport(
        R=R, permanent=permanent, death_ordering_ok=death_ordering_ok,
        local_interference_required=local_req, local_interference_ok=local_ok,
        viability_lhs=viability_lhs, viability_ok=viability_ok,
        global_interference_required=global_req,
        global_interference_ok=global_ok,
        local_ok=local_all, global_ok=global_all,
        overall=local_all and global_all, margins=margins)


@dataclass(frozen=True)
class StabilityVerdict:
    verdict: str
    equilibrium: Equilibrium
    coeffs: LinearizationCoeffs
    reason: str
    qp: QuasiPolynomial | None = None
    quartic: QuarticReport | None = None
    rightmost: float | None = None
    rightmost_root: complex | None = None
    conditions: ConditionReport | None = None


def classify_equilibrium(model: ModelSpec, eq: Equilibrium,
                         compute_rightmost: bool = True) -> StabilityVerdict:
    """Stability verdict for a steady state.

    The origin is always unstable (the prey growth mode).  The predator-free
    state is classified by the sign of n e^{-dj tau(0)} f(K,0) - d, with the
    equality case reported as neutrally stable (a simple zero root, all other
    roots in the closed left half plane).  A coexistence point is classified
    for the Beddington-DeAngelis response by the algebraic route (no zero
    root, no imaginary-axis crossing for any delay, delay-free quadratic
    stable) and cross-checked against the numerical spectral abscissa; other
    responses and the d > dj regime return an "unsupported" verdict carrying
    the numerical abscissa only.
    """
    p = model.params
    coeffs = linearize_at(model, eq)
    qp = quasi_polynomial(model, coeffs)
    box = _classification_box(p.d, coeffs)

    if eq.kind == EquilibriumKind.TRIVIAL:
        return StabilityVerdict(
            Verdict.UNSTABLE, eq, coeffs, qp=qp,
            reason=f"prey growth mode lambda = r = {p.r:g} > 0",
            rightmost=p.r, rightmost_root=complex(p.r, 0.0))

    if eq.kind == EquilibriumKind.PREDATOR_EXTINCTION:
        gain = p.n * math.exp(-p.dj * model.delay.tau(0.0)) * model.response.f(p.K, 0.0)
        tol = 1e-12 * max(gain, p.d)
        if gain > p.d + tol:
            verdict, reason = Verdict.UNSTABLE, (
                f"recruitment gain {gain:.6g} exceeds mortality {p.d:.6g}")
        elif gain < p.d - tol:
            verdict, reason = Verdict.STABLE, (
                f"recruitment gain {gain:.6g} below mortality {p.d:.6g}")
        else:
            verdict, reason = Verdict.NEUTRALLY_STABLE, (
                "recruitment gain equals mortality: simple zero root")
        rm, roots = (None, [])
        if compute_rightmost:
            rm, roots = rightmost_abscissa(qp, box=box)
        return StabilityVerdict(verdict, eq, coeffs, reason, qp=qp,
                                rightmost=rm,
                                rightmost_root=roots[0] if roots else None)

    # coexistence
    rm, roots = (None, [])
    if compute_rightmost:
        rm, roots = rightmost_abscissa(qp, box=box)
    root0 = roots[0] if roots else None

    if model.response.kind != ResponseKind.BEDDINGTON_DEANGELIS:
        return StabilityVerdict(
            Verdict.UNSUPPORTED, eq, coeffs, qp=qp,
            reason="algebraic classification is only established for the "
                   "Beddington-DeAngelis response; numerical abscissa attached",
            rightmost=rm, rightmost_root=root0)

    conditions = check_global_conditions(model, eq)
    if p.d > p.dj:
        return StabilityVerdict(
            Verdict.UNSUPPORTED, eq, coeffs, qp=qp,
            reason="d > dj regime not covered by the algebraic route; "
                   "numerical abscissa attached",
            rightmost=rm, rightmost_root=root0, conditions=conditions)

    B1, B2 = imaginary_crossing_quartic(qp)
    quartic = quartic_classify(0.0, B1, 0.0, B2)
    zero_excluded = qp.H2 + qp.N2 > 0.0
    delay_free_stable = (qp.H1 + qp.N1 > 0.0) and zero_excluded
    if (not quartic.has_positive_root) and delay_free_stable:
        verdict = Verdict.STABLE
        reason = ("no imaginary-axis crossing for any delay, zero is not a "
                  "root, and the delay-free quadratic is stable")
    elif rm is not None and rm > 1e-8:
        verdict = Verdict.UNSTABLE
        reason = f"numerical spectral abscissa {rm:.3g} > 0"
    elif rm is not None and rm < -1e-8:
        verdict = Verdict.STABLE
        reason = (f"numerical spectral abscissa {rm:.3g} < 0 (algebraic "
                  "route inconclusive)")
    elif rm is not None:
        verdict = Verdict.NEUTRALLY_STABLE
        reason = f"numerical spectral abscissa {rm:.3g} within 1e-8 of zero"
    else:
        verdict = Verdict.UNSUPPORTED
        reason = "algebraic route inconclusive and no numerical abscissa requested"
    return StabilityVerdict(verdict, eq, coeffs, reason, qp=qp,
                            quartic=quartic, rightmost=rm,
                            rightmost_root=root0, conditions=conditions)
