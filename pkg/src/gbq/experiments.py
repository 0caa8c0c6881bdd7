"""Theorem-level experiment drivers.

classify            threshold table: global vs blowup verdict from constants
lemma7_roots        fixed points of y = c1 + c2 y^s bracketing the threshold
confirm_dichotomy   simulate a classified datum and test the predicted branch
scattering_probe    dyadic free-pullback residuals and Strichartz saturation
sweep               deterministic parameter grid -> CSV phase table

The blowup threshold machinery follows the constant chain

    threshold_norm   = c_star^{-(alpha+1)/(alpha-1)}  (= ||phi||_{H^1})
    threshold_energy = (alpha-1)/(2(alpha+1)) * threshold_norm^2  (= eta)

with the fixed-point structure y(t) <= c1 + c2 y(t)^s, c1 = 2 E(0),
c2 = 2 c_star^{alpha+1}/(alpha+1), s = (alpha+1)/2: data starting below the
middle root stays on the lower branch (global), above it on the upper branch
(blowup, by virial convexity).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.optimize import brentq

from .spectral import Field, PHYSICAL, sobolev_norm_sq
from .propagator import (
    ModelParams,
    POWER,
    QUADRATIC,
    State,
    StepperConfig,
    evolve,
    spectral_support,
    to_v,
    wrap_around_time,
)
from . import diagnostics
from .diagnostics import compute_record
from .ground_state import GroundState

VERDICT_GLOBAL = "GlobalByThm2i"
VERDICT_BLOWUP = "BlowupByThm2ii"
VERDICT_DEFOCUSING = "DefocusingGlobal"
VERDICT_INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class Classification:
    verdict: str
    energy0: float
    h1_0: float
    threshold_energy: float
    threshold_norm: float
    margin_energy: float  # (energy0 - threshold) / threshold, negative = below
    margin_norm: float
    alpha: float
    beta: int


def initial_energy(u0, u1, params):
    """E(0) evaluated directly from (u0, u1) without building a state."""
    from .diagnostics import hminus1_sq, potential_term

    return 0.5 * (hminus1_sq(u1) + sobolev_norm_sq(u0, 1.0)) + potential_term(
        u0, params
    )


def classify(u0, u1, params, gs, boundary_band=1e-8):
    """Apply the sharp-threshold verdict table to one datum.

    Data within boundary_band (relative) of either threshold is declared
    Indeterminate rather than over-claimed.  The defocusing power case is
    globally wellposed outright; the quadratic variant is classified with
    the focusing table at alpha = 2 (its Lap(u^2) forcing admits blowup).
    """
    if gs.alpha != params.alpha or gs.dim != u0.grid.dim:
        raise ValueError(
            f"ground state is for (alpha={gs.alpha}, d={gs.dim}), "
            f"data is (alpha={params.alpha}, d={u0.grid.dim})"
        )
    energy0 = initial_energy(u0, u1, params)
    h1_0 = math.sqrt(sobolev_norm_sq(u0, 1.0))
    thr_e = gs.threshold_energy
    thr_n = gs.threshold_norm
    margin_e = (energy0 - thr_e) / thr_e
    margin_n = (h1_0 - thr_n) / thr_n

    focusing_table = params.beta == -1 or params.nonlinearity == QUADRATIC
    if not focusing_table:
        verdict = VERDICT_DEFOCUSING
    elif abs(margin_e) <= boundary_band or abs(margin_n) <= boundary_band:
        verdict = VERDICT_INDETERMINATE
    elif energy0 < thr_e and h1_0 < thr_n:
        verdict = VERDICT_GLOBAL
    elif energy0 < thr_e and h1_0 > thr_n:
        verdict = VERDICT_BLOWUP
    else:
        verdict = VERDICT_INDETERMINATE
    return Classification(
        verdict, energy0, h1_0, thr_e, thr_n, margin_e, margin_n,
        params.alpha, params.beta,
    )


@dataclass(frozen=True)
class Lemma7Roots:
    c1: float
    c2: float
    s: float
    y0: float
    y1: float | None
    y2: float | None
    condition_ok: bool


def lemma7_roots(energy0, gs, alpha=None):
    """Roots of F(y) = c1 + c2 y^s - y bracketing y0 = (1/(c2 s))^{1/(s-1)}.

    The two fixed points exist iff c1 < (s-1)/s * y0; outside that range the
    report carries condition_ok = False and no roots.  y0 always equals
    threshold_norm^2 up to arithmetic (an identity the tests pin down).
    """
    if energy0 < 0:
        raise ValueError("energy0 must be nonnegative")
    a = alpha if alpha is not None else gs.alpha
    s = (a + 1.0) / 2.0
    c1 = 2.0 * energy0
    c2 = 2.0 / (a + 1.0) * gs.c_star ** (a + 1.0)
    y0 = (1.0 / (c2 * s)) ** (1.0 / (s - 1.0))
    condition_ok = c1 < (s - 1.0) / s * y0
    if not condition_ok:
        return Lemma7Roots(c1, c2, s, y0, None, None, False)

    def f(y):
        return c1 + c2 * y**s - y

    y1 = float(brentq(f, 0.0, y0, xtol=1e-14, rtol=1e-15))
    upper = 2.0 * y0
    while f(upper) <= 0.0:
        upper *= 2.0
        if upper > 1e300:
            raise RuntimeError("failed to bracket the upper fixed point")
    y2 = float(brentq(f, y0, upper, xtol=1e-14, rtol=1e-15))
    return Lemma7Roots(c1, c2, s, y0, y1, y2, True)


# ---------------------------------------------------------------------------
# dichotomy confirmation


@dataclass
class DichotomyReport:
    classification: Classification
    adjusted: Classification | None
    roots: Lemma7Roots | None
    outcome: str  # "Confirmed-Global" | "Confirmed-Blowup" | "Contradicted"
    ok: bool
    detail: str
    records: list
    max_h1_sq: float
    blowup_time: float | None
    lemma8_horizon: float | None
    glob8_max_slack: float | None


def subtract_mean(u):
    """(mean-zero copy of u, removed constant)."""
    shift = float(u.physical().values.real.mean())
    vals = u.physical().values.real - shift
    return Field(u.grid, vals, PHYSICAL), shift


def lemma8_horizon(times, virials, rates, alpha):
    """Sharpest blowup-time bound T0 = phi(t0)/(eta phi'(t0)) + t0 over trace
    samples with phi, phi' > 0; eta = (alpha - 1)/4.  None when no sample
    qualifies."""
    eta = (alpha - 1.0) / 4.0
    best = None
    for t, phi, rate in zip(times, virials, rates):
        if phi > 0 and rate > 0:
            bound = phi / (eta * rate) + t
            best = bound if best is None else min(best, bound)
    return best


def confirm_dichotomy(u0, u1, params, gs, cfg, mean_subtract=True,
                      y1_factor=1.01, y2_factor=0.99, max_extensions=3):
    """Evolve a classified datum and check the branch the verdict predicts.

    The verdict comes from the data as given; when mean_subtract is set the
    simulation runs on mean-zero u0 (so the inverse-Laplacian diagnostics are
    meaningful) and the classification of the adjusted field is reported
    alongside.  Confirmation criteria:

      GlobalByThm2i / DefocusingGlobal:
        run completes; for the focusing branch additionally
        sup_t ||u||_{H^1}^2 <= y1 * y1_factor and the coercivity bound
        (a-1)/(2(a+1)) ||u||_{H^1}^2 + 1/2 ||(-Lap)^{-1/2} u_t||^2 <= E(0)
        holds at every sample (small slack for drift).
      BlowupByThm2ii:
        blowup detected no later than twice the trace-derived bound
        T0 = phi(t0)/((alpha-1)/4 phi'(t0)) + t0 (the horizon is re-derived
        and the run extended, up to max_extensions times, if needed); when
        the fixed-point roots exist for the evolved datum's energy, the trace
        additionally stays on the upper branch: ||u||_{H^1}^2 >= y2 * y2_factor.

    A run contradicting its verdict yields outcome "Contradicted" with
    ok = False; that is a finding, not an error.
    """
    nominal = classify(u0, u1, params, gs)
    if nominal.verdict == VERDICT_INDETERMINATE:
        raise ValueError("cannot confirm an Indeterminate classification")

    adjusted = None
    u0_run = u0
    if mean_subtract:
        u0_run, shift = subtract_mean(u0)
        if abs(shift) > 0:
            adjusted = classify(u0_run, u1, params, gs)

    state = to_v(u0_run, u1, params)
    run_energy0 = diagnostics.energy(state)
    roots = None
    if run_energy0 >= 0:
        roots = lemma7_roots(run_energy0, gs, params.alpha)

    records = []
    outcome = evolve(state, cfg, sink=lambda s: records.append(compute_record(s)))

    # extend the horizon for predicted blowups that have not fired yet
    extensions = 0
    while (
        nominal.verdict == VERDICT_BLOWUP
        and not outcome.blew_up
        and extensions < max_extensions
    ):
        horizon = lemma8_horizon(
            [r.t for r in records], [r.virial for r in records],
            [r.virial_rate for r in records], params.alpha,
        )
        target = 2.0 * horizon if horizon is not None else 2.0 * cfg.t_end
        if outcome.state.t >= target - 1e-9:
            break
        extensions += 1
        cfg2 = StepperConfig(cfg.dt, target, cfg.sample_every,
                             cfg.blowup_h1_factor, cfg.dealias)
        outcome = evolve(outcome.state, cfg2,
                         sink=lambda s: records.append(compute_record(s)))

    times = [r.t for r in records]
    h1s = [r.h1_sq for r in records]
    max_h1_sq = max(h1s)
    horizon = lemma8_horizon(times, [r.virial for r in records],
                             [r.virial_rate for r in records], params.alpha)
    blowup_time = outcome.state.t if outcome.blew_up else None

    a = params.alpha
    e_ref = run_energy0
    glob8_slack = max(
        (a - 1.0) / (2.0 * (a + 1.0)) * r.h1_sq + 0.5 * r.hminus_ut - e_ref
        for r in records
    )

    if nominal.verdict in (VERDICT_GLOBAL, VERDICT_DEFOCUSING):
        checks = [(not outcome.blew_up, "run completed")]
        if nominal.verdict == VERDICT_GLOBAL:
            if roots is not None and roots.condition_ok:
                checks.append(
                    (max_h1_sq <= roots.y1 * y1_factor,
                     f"sup h1^2 {max_h1_sq:.6g} vs y1 {roots.y1:.6g}")
                )
            checks.append(
                (glob8_slack <= 1e-6 * max(1.0, abs(e_ref)),
                 f"coercivity slack {glob8_slack:.3e}")
            )
        ok = all(c for c, _ in checks)
        detail = "; ".join(msg for _, msg in checks)
        return DichotomyReport(
            nominal, adjusted, roots,
            "Confirmed-Global" if ok else "Contradicted", ok, detail,
            records, max_h1_sq, blowup_time, horizon, glob8_slack,
        )

    # blowup branch
    checks = [(outcome.blew_up, f"blowup detected: {outcome.blew_up}")]
    if outcome.blew_up and horizon is not None:
        checks.append(
            (blowup_time <= 2.0 * horizon,
             f"detected t={blowup_time:.4g} vs 2 x bound {2 * horizon:.4g}")
        )
    if roots is not None and roots.condition_ok:
        min_h1 = min(h1s)
        checks.append(
            (min_h1 >= roots.y2 * y2_factor,
             f"min h1^2 {min_h1:.6g} vs y2 {roots.y2:.6g}")
        )
    ok = all(c for c, _ in checks)
    detail = "; ".join(msg for _, msg in checks)
    return DichotomyReport(
        nominal, adjusted, roots,
        "Confirmed-Blowup" if ok else "Contradicted", ok, detail,
        records, max_h1_sq, blowup_time, horizon, glob8_slack,
    )


# ---------------------------------------------------------------------------
# scattering probe


@dataclass
class ScatteringReport:
    windows: list  # [(t1, t2, residual)]
    decreasing: bool
    final_residual: float
    spacetime_full: float
    spacetime_half: float
    sublinear: bool
    strichartz_curve: list  # [(t, cumulative S-norm)]
    truncated: bool
    horizon: float
    records: list


def scattering_probe(u0, u1, params, horizon, cfg, mean_subtract=True):
    """Run to `horizon` and report dyadic free-pullback residuals.

    Residuals are taken over the windows (T/8, T/4), (T/4, T/2), (T/2, T);
    strictly decreasing values are the numerical scattering signature.  The
    cumulative Strichartz-norm curve uses the symmetric admissible pair at
    regularity s_c.  A horizon beyond the causal wrap-around time of the box
    (for the data's spectral support) is flagged in the report; the free
    pullback itself is exact on the torus, so the residuals stay well
    defined, but their decay may stall once wrapped radiation re-enters.
    The horizon is snapped down to a multiple of 8 sampling intervals so
    that every window endpoint falls on a sample.
    """
    d = u0.grid.dim
    alpha = params.alpha
    if params.nonlinearity == POWER and alpha < 1.0 + 4.0 / d - 1e-12:
        raise ValueError(
            f"scattering regime needs alpha >= 1 + 4/d = {1 + 4 / d:.3g}"
        )
    if mean_subtract:
        u0, _ = subtract_mean(u0)
    support = spectral_support(u0, floor=1e-8)
    wrap = wrap_around_time(u0.grid, max(support, 1.0))
    truncated = horizon > wrap
    sample_dt = cfg.dt * cfg.sample_every
    t_final = max(1, int(np.floor(horizon / (8.0 * sample_dt) + 1e-9))) * 8.0 * sample_dt
    targets = [t_final / 8.0, t_final / 4.0, t_final / 2.0, t_final]

    state = to_v(u0, u1, params)
    q = 2.0 * (d + 2) / d
    s_c = max(diagnostics.critical_regularity(alpha, d), 0.0)
    snapshots = []
    curve_t, curve_vals = [], []
    records = []

    def sink(s):
        records.append(compute_record(s))
        curve_t.append(s.t)
        curve_vals.append(diagnostics._bessel_lq_norm(s.v, s_c, q))
        for tgt in targets:
            if abs(s.t - tgt) <= 1e-9 * max(1.0, tgt):
                snapshots.append((s.t, s.v))

    cfg_run = StepperConfig(cfg.dt, t_final, cfg.sample_every,
                            cfg.blowup_h1_factor, cfg.dealias)
    evolve(state, cfg_run, sink=sink)

    windows = []
    for t1, t2 in zip(targets[:-1], targets[1:]):
        res = diagnostics.scattering_residual(snapshots, t1, t2)
        windows.append((t1, t2, res))
    residuals = [w[2] for w in windows]
    decreasing = all(b < a for a, b in zip(residuals, residuals[1:]))

    st_full = diagnostics.spacetime_integral(records, 0.0, t_final, alpha)
    st_half = diagnostics.spacetime_integral(records, 0.0, t_final / 2.0, alpha)
    sublinear = st_full < 2.0 * st_half if st_half > 0 else True

    ts = np.asarray(curve_t)
    vs = np.asarray(curve_vals)
    cum = []
    for i in range(1, len(ts)):
        cum.append(
            (float(ts[i]),
             float(np.trapezoid(vs[: i + 1] ** q, ts[: i + 1]) ** (1.0 / q)))
        )
    return ScatteringReport(
        windows, decreasing, residuals[-1], st_full, st_half, sublinear,
        cum, truncated, wrap, records,
    )


# ---------------------------------------------------------------------------
# initial data profiles and the sweep driver


def initial_data(profile, grid, amplitude, width=1.0, mode=1, gs=None):
    """Build a named initial profile (u0 only; u1 = 0 is the callers' default).

    gaussian             amplitude * exp(-|x-c|^2 / width^2)
    cosine               amplitude * cos(2 pi mode x1 / L1)
    ground_state_scaled  amplitude * phi  (amplitude doubles as the scaling)
    """
    if profile == "gaussian":
        r = grid.radius_from_center()
        return Field(grid, amplitude * np.exp(-((r / width) ** 2)), PHYSICAL)
    if profile == "cosine":
        x = grid.coordinate_mesh()[0]
        k = 2.0 * np.pi * mode / grid.side[0]
        return Field(grid, amplitude * np.cos(k * x), PHYSICAL)
    if profile == "ground_state_scaled":
        if gs is None:
            raise ValueError("ground_state_scaled needs a GroundState")
        phi = gs.phi
        if not phi.grid.compatible(grid):
            from .spectral import resample

            phi = resample(phi, grid).real_part()
        return amplitude * phi
    raise ValueError(f"unknown profile {profile!r}")


SWEEP_HEADER = (
    "alpha,beta,amplitude,profile,verdict,energy0,h1_0,thr_energy,thr_norm,"
    "y1,y2,outcome,max_h1,t_end,wallclock_s"
)


@dataclass
class SweepCell:
    alpha: float
    beta: int
    amplitude: float
    profile: str


def _fmt(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return f"{x:.17g}"


def sweep(cells, grid, cfg, gs_for_alpha, confirm=False, width=1.0,
          timings=False):
    """Classify (and optionally confirm) every cell; one CSV row per cell.

    gs_for_alpha: callable alpha -> GroundState on `grid`'s dimension.
    Cell failures are recorded in-row as outcome "error: ..." and never
    abort the sweep.  Rows keep the input order.  Wallclock is reported
    only with timings=True so that reruns are byte-identical by default.
    """
    rows = []
    for cell in cells:
        t0 = time.perf_counter()
        try:
            rows.append(_sweep_cell(cell, grid, cfg, gs_for_alpha, confirm, width))
        except Exception as exc:  # noqa: BLE001 - in-row error reporting
            rows.append(
                f"{_fmt(cell.alpha)},{cell.beta},{_fmt(cell.amplitude)},"
                f"{cell.profile},error,nan,nan,nan,nan,nan,nan,"
                f"\"error: {exc}\",nan,nan,0"
            )
            continue
        wall = time.perf_counter() - t0 if timings else 0.0
        rows[-1] += f",{wall:.3f}" if timings else ",0"
    return rows


def _sweep_cell(cell, grid, cfg, gs_for_alpha, confirm, width):
    gs = gs_for_alpha(cell.alpha)
    params = ModelParams(cell.alpha, cell.beta, POWER)
    u0 = initial_data(cell.profile, grid, cell.amplitude, width=width, gs=gs)
    u1 = Field(grid, np.zeros(grid.shape), PHYSICAL)
    c = classify(u0, u1, params, gs)
    roots = None
    if c.energy0 >= 0:
        roots = lemma7_roots(c.energy0, gs, cell.alpha)
    y1 = roots.y1 if roots is not None and roots.condition_ok else None
    y2 = roots.y2 if roots is not None and roots.condition_ok else None
    outcome = "NotRun"
    max_h1 = math.nan
    t_end = math.nan
    if confirm and c.verdict != VERDICT_INDETERMINATE:
        report = confirm_dichotomy(u0, u1, params, gs, cfg)
        outcome = report.outcome
        max_h1 = math.sqrt(report.max_h1_sq)
        t_end = report.records[-1].t
    return (
        f"{_fmt(cell.alpha)},{cell.beta},{_fmt(cell.amplitude)},{cell.profile},"
        f"{c.verdict},{_fmt(c.energy0)},{_fmt(c.h1_0)},"
        f"{_fmt(c.threshold_energy)},{_fmt(c.threshold_norm)},"
        f"{_fmt(y1)},{_fmt(y2)},{outcome},{_fmt(max_h1)},{_fmt(t_end)}"
    )
