"""Command-line entry point.

Subcommands: ground-state, evolve, classify, sweep, decay-test, morawetz,
scattering.  Exit codes: 0 ok, 1 usage/config error, 2 numerical failure,
3 contradiction report (an experiment whose simulation disagrees with its
verdict, or an empirical inequality check that fails).

Outputs are deterministic: identical configuration and seed produce
byte-identical CSVs and checkpoints (sweep timings are suppressed unless
--timings is given, since wallclock is inherently non-reproducible).
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import diagnostics, experiments, ground_state, propagator
from .config import ConfigError, load_run_config, parse_config_text
from .diagnostics import (
    MorawetzConstructionError,
    WrapAroundError,
    compute_record,
    csv_header,
    csv_row,
)
from .experiments import SweepCell, VERDICT_INDETERMINATE
from .ground_state import GroundStateConvergenceError
from .propagator import ModelParams, State, StepperConfig
from .spectral import Field, PHYSICAL, make_grid

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_CONTRADICTION = 3


def _fmt(x):
    return f"{x:.17g}"


def _build_initial(cfg):
    """(u0, u1, shift) from a RunConfig; u1 is zero."""
    grid = cfg.grid
    if cfg.profile == "zero":
        u0 = Field(grid, np.zeros(grid.shape), PHYSICAL)
    elif cfg.profile == "ground_state_scaled":
        if not cfg.ground_state_path:
            raise ConfigError(
                "profile ground_state_scaled needs initial.ground_state",
                field="initial.ground_state",
            )
        gs = ground_state.load_ground_state(cfg.ground_state_path)
        u0 = experiments.initial_data(
            "ground_state_scaled", grid, cfg.amplitude, gs=gs
        )
    else:
        u0 = experiments.initial_data(
            cfg.profile, grid, cfg.amplitude, width=cfg.width, mode=cfg.mode
        )
    shift = 0.0
    if cfg.mean_subtract:
        u0, shift = experiments.subtract_mean(u0)
    u1 = Field(grid, np.zeros(grid.shape), PHYSICAL)
    return u0, u1, shift


def cmd_ground_state(args):
    if args.alpha <= 1:
        print(f"error: alpha must exceed 1, got {args.alpha}", file=sys.stderr)
        return EXIT_USAGE
    if not ground_state.admissible_alpha(args.alpha, args.dim):
        print(
            f"error: alpha={args.alpha} not admissible in d={args.dim}",
            file=sys.stderr,
        )
        return EXIT_USAGE
    grid = ground_state.default_grid(args.dim, args.points, args.box)
    try:
        gs = ground_state.petviashvili(
            grid, args.alpha, tol=args.tol, max_iter=args.max_iter
        )
    except GroundStateConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    ground_state.save_ground_state(args.out, gs)
    print(
        f"converged in {gs.iterations} iterations: "
        f"h1_norm_sq={_fmt(gs.h1_norm_sq)} c_star={_fmt(gs.c_star)} "
        f"eta={_fmt(gs.eta)} pohozaev={gs.pohozaev_residual:.3e} "
        f"residual={gs.equation_residual:.3e}"
    )
    return EXIT_OK


def _load_cfg(path):
    try:
        return load_run_config(path)
    except FileNotFoundError:
        raise ConfigError(f"no such config file: {path}")


def cmd_evolve(args):
    cfg = _load_cfg(args.config)
    u0, u1, shift = _build_initial(cfg)
    state = propagator.to_v(u0, u1, cfg.params)
    weight = None
    if cfg.morawetz_r is not None:
        weight = diagnostics.morawetz_weight(
            cfg.grid, cfg.morawetz_r, cfg.morawetz_profile
        )
    records = []
    outcome = propagator.evolve(
        state, cfg.stepper,
        sink=lambda s: records.append(compute_record(s, weight=weight)),
    )
    if cfg.csv_path:
        diagnostics.write_csv(cfg.csv_path, cfg.grid.dim, records)
    if cfg.checkpoint_path:
        propagator.write_checkpoint(cfg.checkpoint_path, outcome.state)
    if shift:
        print(f"mean shift removed from u0: {_fmt(shift)}")
    support = propagator.spectral_support(u0)
    print(
        f"wrap_around_time={_fmt(propagator.wrap_around_time(cfg.grid, max(support, 1.0)))}"
    )
    print(f"OUTCOME={outcome.outcome} t={_fmt(outcome.state.t)}")
    return EXIT_OK


def cmd_classify(args):
    cfg = _load_cfg(args.config)
    gs = ground_state.load_ground_state(args.ground_state)
    u0, u1, _ = _build_initial(cfg)
    c = experiments.classify(u0, u1, cfg.params, gs)
    roots = None
    if c.energy0 >= 0:
        roots = experiments.lemma7_roots(c.energy0, gs, cfg.params.alpha)
    print(f"verdict: {c.verdict}")
    print(
        f"energy0={_fmt(c.energy0)} (threshold {_fmt(c.threshold_energy)}, "
        f"margin {c.margin_energy:+.6e})"
    )
    print(
        f"h1_0={_fmt(c.h1_0)} (threshold {_fmt(c.threshold_norm)}, "
        f"margin {c.margin_norm:+.6e})"
    )
    if args.out:
        y1 = roots.y1 if roots is not None and roots.condition_ok else None
        y2 = roots.y2 if roots is not None and roots.condition_ok else None
        with open(args.out, "w", newline="\n") as fh:
            fh.write(experiments.SWEEP_HEADER + "\n")
            fh.write(
                f"{_fmt(cfg.params.alpha)},{cfg.params.beta},"
                f"{_fmt(cfg.amplitude)},{cfg.profile},{c.verdict},"
                f"{_fmt(c.energy0)},{_fmt(c.h1_0)},{_fmt(c.threshold_energy)},"
                f"{_fmt(c.threshold_norm)},{experiments._fmt(y1)},"
                f"{experiments._fmt(y2)},NotRun,nan,nan,0\n"
            )
    return EXIT_OK


def cmd_confirm(args):
    cfg = _load_cfg(args.config)
    gs = ground_state.load_ground_state(args.ground_state)
    u0, u1, _ = _build_initial(cfg)
    report = experiments.confirm_dichotomy(
        u0, u1, cfg.params, gs, cfg.stepper, mean_subtract=True
    )
    print(f"verdict: {report.classification.verdict}")
    print(f"outcome: {report.outcome}")
    print(f"detail: {report.detail}")
    return EXIT_OK if report.ok else EXIT_CONTRADICTION


def _sweep_values(sections, key, conv):
    raw = sections.get("sweep", {}).get(key)
    if raw is None:
        return []
    return [conv(part.strip()) for part in raw.split(",") if part.strip()]


def cmd_sweep(args):
    with open(args.grid) as fh:
        sections = parse_config_text(fh.read())
    alphas = _sweep_values(sections, "alphas", float)
    betas = _sweep_values(sections, "betas", int)
    amplitudes = _sweep_values(sections, "amplitudes", float)
    profiles = _sweep_values(sections, "profiles", str)
    cells = [
        SweepCell(a, b, amp, prof)
        for a in alphas for b in betas for amp in amplitudes for prof in profiles
    ]

    sw = sections.get("sweep", {})
    dim = int(sw.get("dim", 1))
    points = int(sw.get("points", 1024))
    side = float(sw.get("side", ground_state.DEFAULT_SIDE[dim]))
    width = float(sw.get("width", 1.0))
    grid = make_grid(dim, (points,) * dim, (side,) * dim)
    stepper = StepperConfig(
        dt=float(sw.get("dt", 2e-3)),
        t_end=float(sw.get("t_end", 20.0)),
        sample_every=int(sw.get("sample_every", 25)),
    )

    gs_cache = {}

    def gs_for_alpha(alpha):
        if alpha not in gs_cache:
            gs_cache[alpha] = ground_state.petviashvili(grid, alpha, tol=1e-12)
        return gs_cache[alpha]

    rows = experiments.sweep(
        cells, grid, stepper, gs_for_alpha,
        confirm=args.confirm, width=width, timings=args.timings,
    )
    with open(args.out, "w", newline="\n") as fh:
        fh.write(experiments.SWEEP_HEADER + "\n")
        for row in rows:
            fh.write(row + "\n")
    print(f"{len(rows)} cells -> {args.out}")
    return EXIT_OK


_DECAY_DEFAULTS = {1: (8192, 800.0), 2: (4096, 800.0), 3: (128, 60.0)}


def cmd_decay_test(args):
    n, side = _DECAY_DEFAULTS[args.dim]
    n = args.points or n
    side = args.box or side
    grid = make_grid(args.dim, (n,) * args.dim, (side,) * args.dim)
    shells = [float(s) for s in args.shells.split(",") if s.strip()]
    rows = []
    status = EXIT_OK
    for shell in shells:
        k_hi = shell * (1.0 + 6.1 * args.width)
        horizon = propagator.wrap_around_time(grid, k_hi)
        t_min = diagnostics.decay_onset_time(shell, args.width)
        t_max = 0.9 * horizon
        if t_max <= t_min * 1.5:
            print(
                f"error: box too small for shell {shell} "
                f"(horizon {horizon:.3g})",
                file=sys.stderr,
            )
            return EXIT_NUMERICAL
        times = np.geomspace(t_min, t_max, args.samples)
        try:
            slope, prefactor = diagnostics.decay_rate_fit(
                grid, shell, args.width, times
            )
        except WrapAroundError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
        expected = -args.dim / 2.0
        rows.append(
            f"{args.dim},{_fmt(shell)},{_fmt(args.width)},{_fmt(slope)},"
            f"{_fmt(prefactor)},{_fmt(times[0])},{_fmt(times[-1])},{_fmt(expected)}"
        )
        print(
            f"shell N={shell:g}: slope {slope:+.4f} (dispersive prediction "
            f"{expected:+.1f}), prefactor {prefactor:.6g}"
        )
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write("dim,shell,width,slope,prefactor,t_min,t_max,expected_slope\n")
            for row in rows:
                fh.write(row + "\n")
    return status


def cmd_morawetz(args):
    cfg = _load_cfg(args.config)
    radii = [float(r) for r in args.radii.split(",") if r.strip()]
    weights = [
        diagnostics.morawetz_weight(cfg.grid, r, cfg.morawetz_profile)
        for r in radii
    ]
    u0, u1, _ = _build_initial(cfg)
    if not cfg.mean_subtract:
        u0, _ = experiments.subtract_mean(u0)
    state = propagator.to_v(u0, u1, cfg.params)
    energy0 = diagnostics.energy(state)
    times, lp_vals = [], []
    m_vals = [[] for _ in radii]

    def sink(s):
        times.append(s.t)
        u, _ = propagator.from_v(s)
        from .spectral import norm

        lp_vals.append(norm(u, "Lp", cfg.params.alpha + 1.0))
        for i, w in enumerate(weights):
            m_vals[i].append(diagnostics.morawetz_quantity(s, w))

    propagator.evolve(state, cfg.stepper, sink=sink)
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write("t,lp," + ",".join(f"M_R{_fmt(r)}" for r in radii) + "\n")
            for i, t in enumerate(times):
                cells = [_fmt(t), _fmt(lp_vals[i])]
                cells += [_fmt(m_vals[j][i]) for j in range(len(radii))]
                fh.write(",".join(cells) + "\n")
    status = EXIT_OK
    for weight, series in zip(weights, m_vals):
        c_fit, c_ap, bound_ok = diagnostics.morawetz_bound_check(
            times, series, weight, energy0
        )
        c_coeff, c_big, frac = diagnostics.morawetz_increment_check(
            times, series, lp_vals, cfg.params.alpha, cfg.grid.dim, weight.R
        )
        ok = bound_ok and frac >= 0.95
        print(
            f"R={weight.R:g}: |M_R| <= C R E(0) with fitted C={c_fit:.4g} "
            f"(a-priori ceiling {c_ap:.4g}, {'ok' if bound_ok else 'VIOLATED'}); "
            f"M_R' >= {c_coeff:.3g} int|u|^(a+1) - {c_big:.4g} R^-theta at "
            f"{100 * frac:.1f}% of samples"
        )
        if not ok:
            status = EXIT_CONTRADICTION
    return status


def cmd_scattering(args):
    cfg = _load_cfg(args.config)
    u0, u1, _ = _build_initial(cfg)
    report = experiments.scattering_probe(
        u0, u1, cfg.params, args.horizon, cfg.stepper
    )
    if report.truncated:
        print(
            f"warning: horizon truncated to the wrap-around time "
            f"{report.horizon:.4g}",
            file=sys.stderr,
        )
    for t1, t2, res in report.windows:
        print(f"residual({_fmt(t1)}, {_fmt(t2)}) = {res:.6e}")
    print(
        f"decreasing={report.decreasing} final={report.final_residual:.6e} "
        f"spacetime [0,T]={report.spacetime_full:.6g} "
        f"[0,T/2]={report.spacetime_half:.6g} sublinear={report.sublinear}"
    )
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write("t1,t2,residual\n")
            for t1, t2, res in report.windows:
                fh.write(f"{_fmt(t1)},{_fmt(t2)},{_fmt(res)}\n")
            fh.write("t,cumulative_strichartz\n")
            for t, val in report.strichartz_curve:
                fh.write(f"{_fmt(t)},{_fmt(val)}\n")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gbq",
        description="Pseudospectral toolkit for the generalized Boussinesq "
        "equation: ground states, sharp-threshold classification, blowup and "
        "scattering experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ground-state", help="compute a solitary-wave profile")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--dim", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--box", type=float, default=None,
                   help="box side (default 80/40/30 by dimension)")
    p.add_argument("--points", type=int, default=None,
                   help="points per axis (default 2048/256/128)")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=cmd_ground_state)

    p = sub.add_parser("evolve", help="run a configured simulation")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("classify", help="apply the sharp-threshold verdict table")
    p.add_argument("--config", required=True)
    p.add_argument("--ground-state", required=True, help=".gbq profile path")
    p.add_argument("--out", default=None, help="one-row CSV output")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("confirm", help="classify, simulate, and check the branch")
    p.add_argument("--config", required=True)
    p.add_argument("--ground-state", required=True)
    p.set_defaults(func=cmd_confirm)

    p = sub.add_parser("sweep", help="parameter-grid phase table")
    p.add_argument("--grid", required=True, help="sweep definition file")
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--confirm", action="store_true")
    p.add_argument("--timings", action="store_true",
                   help="record wallclock (breaks byte-reproducibility)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("decay-test", help="free-flow dispersive decay slopes")
    p.add_argument("--dim", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--shells", default="1")
    p.add_argument("--width", type=float, default=0.25)
    p.add_argument("--points", type=int, default=None)
    p.add_argument("--box", type=float, default=None)
    p.add_argument("--samples", type=int, default=12)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_decay_test)

    p = sub.add_parser("morawetz", help="Morawetz quantity trace and checks")
    p.add_argument("--config", required=True)
    p.add_argument("--radii", "--R", dest="radii", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_morawetz)

    p = sub.add_parser("scattering", help="dyadic scattering residual probe")
    p.add_argument("--config", required=True)
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_scattering)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    if os.environ.get("GBQ_NUM_THREADS") and hasattr(args, "jobs"):
        args.jobs = int(os.environ["GBQ_NUM_THREADS"])
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GroundStateConvergenceError, WrapAroundError,
            MorawetzConstructionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
