"""Command-line front end: simulate, equilibria, stability, verify, sweep.

Configuration is a versioned JSON document; unknown keys anywhere in it are
rejected with the offending key path.  Exit codes: 0 success, 1 check
failure, 2 usage or configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import quoteattr

import numpy as np

from . import analysis
from .engine import (IntegrationError, StepperConfig, default_stepper,
                     export_csv, integrate, lag_times, yj_integral)
from .equilibria import (NoConvergenceError, boundary_equilibria,
                         solve_coexistence)
from .model import (HistoryFunction, ModelSpec, consistent_history,
                    constant_history, constant_plus_sine_history,
                    reproduction_number, tabulated_history, validate)
from .responses import ResponseKind
from .stability import WindingError, check_global_conditions, classify_equilibrium
from .svg import Series, stacked_chart

__all__ = ["main", "Scenario", "load_scenario", "ConfigError"]

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CHECK_FAILURE = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class ConfigError(ValueError):
    pass


def _check_keys(doc: dict, path: str, required: set, optional: set = frozenset()):
    if not isinstance(doc, dict):
        raise ConfigError(f"{path or 'config'} must be an object")
    for key in doc:
        if key not in required and key not in optional:
            raise ConfigError(f"unknown key {path + '.' if path else ''}{key}")
    for key in required:
        if key not in doc:
            raise ConfigError(f"missing key {path + '.' if path else ''}{key}")


@dataclass(frozen=True)
class Outputs:
    stride: float
    csv: str | None
    svg: str | None


@dataclass(frozen=True)
class Scenario:
    """A fully resolved run description loaded from a config file."""

    model: ModelSpec
    history: HistoryFunction
    stepper: StepperConfig
    outputs: Outputs
    seed: int
    sweep: dict | None


def _build_history(doc: dict, model: ModelSpec) -> HistoryFunction:
    _check_keys(doc, "history", {"kind"},
                {"x", "y", "yj", "amp", "omega", "phase", "times", "series"})
    kind = doc["kind"]
    if kind == "constant":
        _check_keys(doc, "history", {"kind", "x", "y"}, {"yj"})
        if "yj" in doc:
            return constant_history(float(doc["x"]), float(doc["y"]),
                                    float(doc["yj"]))
        return consistent_history(model, float(doc["x"]), float(doc["y"]))
    if kind == "constant_plus_sine":
        _check_keys(doc, "history", {"kind", "x", "y", "amp", "omega"},
                    {"yj", "phase"})
        phase = float(doc.get("phase", 0.0))
        if "yj" in doc:
            return constant_plus_sine_history(
                float(doc["x"]), float(doc["y"]), float(doc["yj"]),
                amp=float(doc["amp"]), omega=float(doc["omega"]), phase=phase)
        return consistent_history(model, float(doc["x"]), float(doc["y"]),
                                  amp=float(doc["amp"]),
                                  omega=float(doc["omega"]), phase=phase)
    if kind == "tabulated":
        _check_keys(doc, "history", {"kind", "times", "series"}, set())
        series = doc["series"]
        _check_keys(series, "history.series", {"x", "y", "yj"}, set())
        return tabulated_history(doc["times"], series["x"], series["y"],
                                 series["yj"])
    raise ConfigError(f"unknown key history.kind value {kind!r}")


def _build_stepper(doc: dict, model: ModelSpec, horizon: float | None) -> StepperConfig:
    _check_keys(doc, "stepper", {"t_end"},
                {"rtol", "atol", "h_init", "h_max", "positivity_guard"})
    t_end = float(horizon if horizon is not None else doc["t_end"])
    base = default_stepper(model, t_end,
                           rtol=float(doc.get("rtol", 1e-8)),
                           atol=float(doc.get("atol", 1e-10)))
    h_max = float(doc["h_max"]) if doc.get("h_max") is not None else base.h_max
    h_init = float(doc["h_init"]) if doc.get("h_init") is not None else min(
        base.h_init, h_max)
    return StepperConfig(t_end=t_end, rtol=base.rtol, atol=base.atol,
                         h_init=h_init, h_max=h_max,
                         positivity_guard=bool(doc.get("positivity_guard", True)))


def load_scenario(path, horizon: float | None = None,
                  seed: int | None = None) -> Scenario:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    _check_keys(doc, "", {"schema", "model"},
                {"history", "stepper", "outputs", "seed", "sweep"})
    if doc["schema"] != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema version {doc['schema']!r}")
    try:
        model = ModelSpec.from_dict(doc["model"])
    except ValueError as exc:
        raise ConfigError(str(exc))
    history = _build_history(doc.get("history", {"kind": "constant", "x": model.params.K / 2,
                                                 "y": model.params.K / 4}), model)
    stepper = _build_stepper(doc.get("stepper", {"t_end": 100.0}), model, horizon)
    odoc = doc.get("outputs", {})
    _check_keys(odoc, "outputs", set(), {"stride", "csv", "svg"})
    outputs = Outputs(stride=float(odoc.get("stride", stepper.t_end / 200.0)),
                      csv=odoc.get("csv"), svg=odoc.get("svg"))
    sweep = doc.get("sweep")
    if sweep is not None:
        _check_keys(sweep, "sweep", set(),
                    {"k2", "d", "tau_m", "tau_M", "horizon"})
    return Scenario(model=model, history=history, stepper=stepper,
                    outputs=outputs,
                    seed=int(seed if seed is not None else doc.get("seed", 42)),
                    sweep=sweep)


# --------------------------------------------------------------------------
# subcommands


def _cmd_simulate(scn: Scenario, outdir: Path) -> int:
    traj = integrate(scn.model, scn.history, scn.stepper)
    csv_path = outdir / (scn.outputs.csv or "trajectory.csv")
    export_csv(scn.model, traj, csv_path, scn.outputs.stride)
    print(f"wrote {csv_path} ({traj.n_steps} steps to t={traj.t_end:g})")
    if scn.outputs.svg:
        ts = np.arange(0.0, traj.t_end + scn.outputs.stride / 2, scn.outputs.stride)
        vals = traj.sample(ts)
        taus = [scn.model.delay.tau(max(v, 0.0)) for v in vals[:, 1]]
        svg_path = outdir / scn.outputs.svg
        stacked_chart(
            [([Series("x", list(ts), list(vals[:, 0])),
               Series("y", list(ts), list(vals[:, 1])),
               Series("yj", list(ts), list(vals[:, 2]))],
              "population densities", "t", "density"),
             ([Series("tau(y)", list(ts), taus)],
              "maturation delay along the run", "t", "tau")],
            svg_path)
        print(f"wrote {svg_path}")
    x, y, yj = traj.lookup(traj.t_end)
    print(f"final state: x={x:.6g} y={y:.6g} yj={yj:.6g}")
    return EXIT_OK


def _equilibria_doc(model: ModelSpec) -> dict:
    eqs = boundary_equilibria(model)
    coex = solve_coexistence(model)
    if coex is not None:
        eqs.append(coex)
    return {
        "R": reproduction_number(model),
        "equilibria": [
            {"kind": e.kind, "x": e.x_star, "y": e.y_star, "yj": e.yj_star,
             "tau": e.tau_star, "residual": e.residual}
            for e in eqs
        ],
    }


def _cmd_equilibria(scn: Scenario, outdir: Path) -> int:
    doc = _equilibria_doc(scn.model)
    text = json.dumps(doc, indent=2, sort_keys=True)
    print(text)
    (outdir / "equilibria.json").write_text(text + "\n")
    return EXIT_OK


def _cmd_stability(scn: Scenario, outdir: Path) -> int:
    model = scn.model
    eqs = boundary_equilibria(model)
    coex = solve_coexistence(model)
    if coex is not None:
        eqs.append(coex)
    reports = []
    for eq in eqs:
        verdict = classify_equilibrium(model, eq)
        cond = verdict.conditions
        reports.append({
            "equilibrium": eq.kind,
            "coefficients": {"A": verdict.coeffs.A, "B": verdict.coeffs.B,
                             "C": verdict.coeffs.C, "D": verdict.coeffs.D,
                             "eta": verdict.coeffs.eta},
            "verdict": verdict.verdict,
            "reason": verdict.reason,
            "conditions": None if cond is None else {
                "thm7": cond.local_ok, "thm8": cond.global_ok,
                "margins": cond.margins},
            "rightmost": None if verdict.rightmost_root is None else {
                "re": verdict.rightmost_root.real,
                "im": verdict.rightmost_root.imag},
        })
    text = json.dumps(reports, indent=2, sort_keys=True)
    print(text)
    (outdir / "stability.json").write_text(text + "\n")
    return EXIT_OK


def _cmd_verify(scn: Scenario, outdir: Path) -> int:
    model = scn.model
    checks: list[tuple[str, bool, str, dict]] = []

    def add(name, passed, detail="", **data):
        checks.append((name, bool(passed), detail, data))

    report = validate(model)
    add("model_validation", report.passed,
        "; ".join(str(c) for c in report.failures))

    R = reproduction_number(model)
    eqs = boundary_equilibria(model)
    coex = solve_coexistence(model)
    add("threshold_consistency", (coex is not None) == (R > 1.0),
        f"R={R:.6g}, coexistence {'found' if coex else 'absent'}", R=R)
    if coex is not None:
        add("coexistence_residual", coex.residual <= 1e-10,
            f"residual={coex.residual:.3g}", residual=coex.residual)

    horizon = max(scn.stepper.t_end, 41.0 * model.delay.tau_M)
    cfg = StepperConfig(t_end=horizon, rtol=scn.stepper.rtol,
                        atol=scn.stepper.atol, h_init=scn.stepper.h_init,
                        h_max=scn.stepper.h_max,
                        positivity_guard=scn.stepper.positivity_guard)
    traj = integrate(model, scn.history, cfg)

    cert = analysis.boundedness_certificate(model, traj)
    add("boundedness_certificate",
        cert.v_within_limit and cert.x_within_capacity(model.params.K),
        f"V_sup={cert.observed_V_sup:.6g} limit={cert.V_limit:.6g}",
        V_sup=cert.observed_V_sup, V_limit=cert.V_limit)

    sample_ts = np.linspace(model.delay.tau_M, traj.t_end, 12)
    worst = 0.0
    for t in sample_ts:
        ode = traj.lookup(float(t))[2]
        quad_val = yj_integral(model, traj, float(t))
        worst = max(worst, abs(ode - quad_val) / max(abs(ode), cfg.atol))
    add("yj_conservation", worst <= 1e-5, f"worst rel dev={worst:.3g}",
        worst=worst)

    lags = lag_times(model, traj)
    add("lag_monotonic", bool(np.all(np.diff(lags) > 0.0)),
        "s(t) = t - tau(y(t)) strictly increasing", min_step=float(np.min(np.diff(lags))))

    positive = all(eq.residual <= 1e-10 for eq in eqs)
    add("boundary_residuals", positive, "")

    if (coex is not None
            and model.response.kind == ResponseKind.BEDDINGTON_DEANGELIS):
        cond = check_global_conditions(model, coex)
        verdict = classify_equilibrium(model, coex)
        if verdict.verdict == "locally_asymptotically_stable":
            add("spectral_consistency",
                verdict.rightmost is not None and verdict.rightmost < -1e-8,
                f"verdict={verdict.verdict}, rightmost={verdict.rightmost}",
                rightmost=verdict.rightmost)
        if cond.overall and model.response.coefficients["k1"] == 0.0:
            try:
                br = analysis.monotone_bounds(model, coex, 1e-4)
                add("bracket_containment", True,
                    f"limits={tuple(round(v, 8) for v in br.limits)}")
            except analysis.BracketNestingError as exc:
                add("bracket_containment", False, str(exc))
            # zero-state delay variant: reported, not asserted (containment
            # cannot hold when the delay genuinely varies with the state)
            try:
                br0 = analysis.monotone_bounds(model, coex, 1e-4, tau_hat="zero")
                add("bracket_limits_zero_delay_variant", True,
                    f"limits={tuple(round(v, 8) for v in br0.limits)}")
            except analysis.BracketNestingError as exc:
                add("bracket_limits_zero_delay_variant", True,
                    f"variant does not bracket the equilibrium: {exc}")

    n_fail = sum(1 for _, ok, _, _ in checks if not ok)
    _write_junit(outdir / "verify.xml", checks)
    _write_checks_csv(outdir / "verify_checks.csv", checks)
    for name, ok, detail, _ in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else ""))
    print(f"{len(checks) - n_fail}/{len(checks)} checks passed; "
          f"reports in {outdir}")
    return EXIT_OK if n_fail == 0 else EXIT_CHECK_FAILURE


def _write_junit(path: Path, checks) -> None:
    n_fail = sum(1 for _, ok, _, _ in checks if not ok)
    lines = ['<?xml version="1.0" encoding="UTF-8"?>',
             f'<testsuite name="preydelay-verify" tests="{len(checks)}" '
             f'failures="{n_fail}">']
    for name, ok, detail, _ in checks:
        if ok:
            lines.append(f'  <testcase name={quoteattr(name)}/>')
        else:
            lines.append(f'  <testcase name={quoteattr(name)}>')
            lines.append(f'    <failure message={quoteattr(detail or name)}/>')
            lines.append('  </testcase>')
    lines.append('</testsuite>')
    path.write_text("\n".join(lines) + "\n")


def _write_checks_csv(path: Path, checks) -> None:
    lines = ["check,passed,detail,data"]
    for name, ok, detail, data in checks:
        datum = ";".join(f"{k}={v!r}" for k, v in data.items())
        detail_quoted = '"' + detail.replace('"', '""') + '"'
        lines.append(f"{name},{str(ok).lower()},{detail_quoted},{datum}")
    path.write_text("\n".join(lines) + "\n")


def _sweep_point(model: ModelSpec, k2: float, d: float, tau_m: float,
                 tau_M: float) -> str:
    base = model.to_dict()
    base["params"]["d"] = d
    base["response"]["coefficients"]["k2"] = k2
    base["delay"]["tau_m"] = tau_m
    base["delay"]["tau_M"] = tau_M
    if base["delay"]["kind"] == "constant" and tau_m != tau_M:
        raise ConfigError("constant delay cannot sweep tau_m != tau_M")
    point = ModelSpec.from_dict(base)
    R = reproduction_number(point)
    coexists = False
    thm7 = thm8 = False
    rightmost = math.nan
    try:
        coex = solve_coexistence(point)
    except NoConvergenceError:
        coex = None
    if coex is not None:
        coexists = True
        cond = check_global_conditions(point, coex)
        thm7, thm8 = cond.local_ok, cond.global_ok
        verdict = classify_equilibrium(point, coex)
        rightmost = verdict.rightmost if verdict.rightmost is not None else math.nan
    else:
        e1 = boundary_equilibria(point)[1]
        verdict = classify_equilibrium(point, e1)
        rightmost = verdict.rightmost if verdict.rightmost is not None else math.nan
    return ",".join([repr(float(k2)), repr(float(d)), repr(float(tau_m)),
                     repr(float(tau_M)), repr(float(R)),
                     str(coexists).lower(), str(thm7).lower(),
                     str(thm8).lower(), repr(float(rightmost))])


def _cmd_sweep(scn: Scenario, outdir: Path, threads: int) -> int:
    if scn.sweep is None:
        raise ConfigError("missing key sweep (required by the sweep subcommand)")
    if scn.model.response.kind != ResponseKind.BEDDINGTON_DEANGELIS:
        raise ConfigError("sweep varies k2 and is defined for the "
                          "BeddingtonDeAngelis response")
    c = scn.model.response.coefficients
    delay = scn.model.delay
    k2s = [float(v) for v in scn.sweep.get("k2", [c["k2"]])]
    ds = [float(v) for v in scn.sweep.get("d", [scn.model.params.d])]
    tms = [float(v) for v in scn.sweep.get("tau_m", [delay.tau_m])]
    tMs = [float(v) for v in scn.sweep.get("tau_M", [delay.tau_M])]
    points = [(k2, d, tm, tM) for k2 in k2s for d in ds for tm in tms
              for tM in tMs if tm <= tM]
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rows = list(pool.map(
            lambda p: _sweep_point(scn.model, *p), points))
    csv_path = outdir / "sweep.csv"
    header = "k2,d,tau_m,tau_M,R,coexists,thm7_pass,thm8_pass,rightmost_re"
    csv_path.write_text("\n".join([header] + rows) + "\n")
    print(f"wrote {csv_path} ({len(rows)} grid points)")
    return EXIT_OK


# --------------------------------------------------------------------------
# entry point


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="preydelay",
        description="Simulate and analyze the stage-structured predator-prey "
                    "system with a state-dependent maturation delay.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("simulate", "integrate the system and write trajectory CSV/SVG"),
            ("equilibria", "compute equilibria and print a JSON report"),
            ("stability", "classify equilibria and print a JSON report"),
            ("verify", "run the property suite; JUnit XML plus per-check CSV"),
            ("sweep", "grid over (k2, d, tau_m, tau_M) and write a CSV")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="random seed override (default from config, 42)")
        p.add_argument("--horizon", type=float, default=None,
                       help="override stepper.t_end")
        if name == "sweep":
            p.add_argument("--threads", type=int, default=1,
                           help="worker threads for grid points")
    return ap


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        scn = load_scenario(args.config, horizon=args.horizon, seed=args.seed)
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            if args.command == "simulate":
                return _cmd_simulate(scn, outdir)
            if args.command == "equilibria":
                return _cmd_equilibria(scn, outdir)
            if args.command == "stability":
                return _cmd_stability(scn, outdir)
            if args.command == "verify":
                return _cmd_verify(scn, outdir)
            if args.command == "sweep":
                return _cmd_sweep(scn, outdir, args.threads)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, NoConvergenceError, WindingError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
