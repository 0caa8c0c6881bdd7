"""Time evolution of the generalized Boussinesq flow.

The second-order equation

    u_tt - Lap u + Lap^2 u = beta * Lap(|u|^{alpha-1} u)

is evolved through its first-order complex form

    i v_t - B v - beta * M |Re v|^{alpha-1} Re v = 0,
    v = u + i * Binv(u_t),   B = sqrt(-Lap (1 - Lap)),   M = sqrt(-Lap/(1-Lap)),

so u = Re(v) and u_t = B(Im v).  The linear phase exp(-i t B) is an exact
Fourier multiplier; the nonlinear remainder is integrated with a classical
4-stage integrating-factor Runge-Kutta scheme (global order 4).

The "quadratic" nonlinearity option evolves the quadratic-string variant

    u_tt - Lap u + Lap^2 u + Lap(u^2) = 0,

i.e. the generic right-hand side beta*Lap(N(u)) with beta = +1 absorbed and
N(u) = -u^2; its conserved energy carries -1/3 * int u^3 (sign-indefinite).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field as dc_field

import numpy as np

from .spectral import (
    Field,
    Grid,
    PHYSICAL,
    SPECTRAL,
    ZeroModeError,
    forward_fft,
    inverse_fft,
    sobolev_norm_sq,
    symbol_values,
)

POWER = "power"
QUADRATIC = "quadratic"
NONE = "none"

_NONLINEARITY_CODES = {POWER: 0, QUADRATIC: 1, NONE: 2}
_NONLINEARITY_NAMES = {v: k for k, v in _NONLINEARITY_CODES.items()}


class BlowupSuspected(RuntimeError):
    """A stage produced non-finite values; carries the last finite state."""

    def __init__(self, state, message="non-finite values in a stage"):
        super().__init__(message)
        self.state = state


@dataclass(frozen=True)
class ModelParams:
    """Nonlinearity exponent alpha > 1, sign beta = +1/-1, and kind.

    kind "power" is |u|^{alpha-1} u; "quadratic" fixes alpha = 2, beta = +1
    and uses N(u) = -u^2 (see module docstring); "none" disables the
    nonlinear term (pure linear flow).
    """

    alpha: float
    beta: int
    nonlinearity: str = POWER

    def __post_init__(self):
        if self.nonlinearity not in (POWER, QUADRATIC, NONE):
            raise ValueError(f"unknown nonlinearity {self.nonlinearity!r}")
        if self.nonlinearity != NONE and not self.alpha > 1:
            raise ValueError("alpha must exceed 1")
        if self.beta not in (-1, 1):
            raise ValueError("beta must be +1 or -1")
        if self.nonlinearity == QUADRATIC:
            if self.alpha != 2:
                raise ValueError("quadratic mode fixes alpha = 2")
            if self.beta != 1:
                raise ValueError("quadratic mode absorbs the sign; use beta = +1")


@dataclass(frozen=True)
class State:
    """The complex field v at time t (physical representation)."""

    t: float
    v: Field
    params: ModelParams

    @property
    def grid(self):
        return self.v.grid


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    t_end: float
    sample_every: int = 1
    blowup_h1_factor: float = 50.0
    dealias: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")
        if self.sample_every < 1:
            raise ValueError("sample_every must be >= 1")
        if not self.blowup_h1_factor > 1:
            raise ValueError("blowup_h1_factor must exceed 1")


@dataclass
class RunOutcome:
    outcome: str  # "Completed" | "BlowupDetected"
    state: State  # final state (last finite state on blowup)
    reason: str = ""
    initial_h1: float = 0.0
    max_h1: float = 0.0
    samples: int = 0

    @property
    def blew_up(self):
        return self.outcome == "BlowupDetected"


def _require_small_mean(u, what):
    spec = u.spectral().values
    peak = float(np.abs(spec).max())
    if peak > 0 and abs(spec.flat[0]) > 1e-10 * peak:
        raise ZeroModeError(f"{what} must be mean-zero for Binv to be defined")


def to_v(u0, u1, params, t=0.0):
    """State v = u0 + i * Binv(u1) at time t; u1 must be mean-zero."""
    _require_small_mean(u1, "u1 (= u_t at t=0)")
    g = u0.grid
    binv = symbol_values(g, "Binv")
    v_spec = forward_fft(u0.physical().values.real) + 1j * binv * forward_fft(
        u1.physical().values.real
    )
    return State(t, Field(g, inverse_fft(v_spec), PHYSICAL), params)


def from_v(state):
    """(u, u_t) with u = Re v and u_t = B(Im v)."""
    g = state.grid
    phys = state.v.physical().values
    u = Field(g, phys.real, PHYSICAL)
    b = symbol_values(g, "B")
    ut_vals = inverse_fft(b * forward_fft(phys.imag)).real
    return u, Field(g, ut_vals, PHYSICAL)


def linear_flow(u0, u1, t):
    """Exact free evolution: u(t) = cos(tB) u0 + sin(tB) Binv u1.

    Returns (u(t), u_t(t)); u1 must be mean-zero.
    """
    _require_small_mean(u1, "u1")
    g = u0.grid
    b = symbol_values(g, "B")
    binv = symbol_values(g, "Binv")
    c, s = np.cos(t * b), np.sin(t * b)
    u0h = forward_fft(u0.physical().values.real)
    u1h = forward_fft(u1.physical().values.real)
    uh = c * u0h + s * binv * u1h
    uth = -b * s * u0h + c * u1h
    return (
        Field(g, inverse_fft(uh).real, PHYSICAL),
        Field(g, inverse_fft(uth).real, PHYSICAL),
    )


def _nonlinear_physical(u_vals, params):
    """N(u) pointwise: |u|^{alpha-1} u, or -u^2 in quadratic mode."""
    if params.nonlinearity == QUADRATIC:
        return -(u_vals * u_vals)
    return np.abs(u_vals) ** (params.alpha - 1.0) * u_vals


def nonlinear_term(state, dealias=True):
    """beta * M N(Re v) as a physical field (the forcing of i v_t = Bv + ...)."""
    g = state.grid
    if state.params.nonlinearity == NONE:
        return Field(g, np.zeros(g.shape), PHYSICAL)
    u = state.v.physical().values.real
    nl_spec = forward_fft(_nonlinear_physical(u, state.params))
    if dealias:
        nl_spec = nl_spec * g.dealias_mask
    out = state.params.beta * symbol_values(g, "M") * nl_spec
    return Field(g, inverse_fft(out), PHYSICAL)


class _Stepper:
    """Integrating-factor RK4 on the spectral coefficients of v.

    The substitution w(t) = exp(i t B) v(t) removes the stiff linear phase
    exactly; classical RK4 on w gives, back in the v variable,

        v+ = E2 v + dt/6 (E2 k1 + 2 E (k2 + k3) + k4),  E = exp(-i dt/2 B),

    with the stages evaluated at t, t+dt/2, t+dt/2, t+dt as usual.
    """

    def __init__(self, grid, params, dt, dealias=True):
        self.grid = grid
        self.params = params
        self.dt = dt
        self.dealias = dealias
        self.e_half = np.exp(-0.5j * dt * grid.b_symbol)
        self.e_full = self.e_half * self.e_half
        self._minus_i_beta_m = -1j * params.beta * grid.m_symbol
        self._mask = grid.dealias_mask if dealias else None

    def _rhs(self, v_spec):
        # nonlinear part of v_t: -i beta M N(Re v), in spectral coefficients;
        # overflow here is a blowup signature, caught by the finiteness check
        if self.params.nonlinearity == NONE:
            return np.zeros_like(v_spec)
        u = inverse_fft(v_spec).real
        with np.errstate(over="ignore", invalid="ignore"):
            nl = forward_fft(_nonlinear_physical(u, self.params))
        if self._mask is not None:
            nl = nl * self._mask
        return self._minus_i_beta_m * nl

    def advance(self, v_spec):
        dt, e, e2 = self.dt, self.e_half, self.e_full
        k1 = self._rhs(v_spec)
        k2 = self._rhs(e * (v_spec + (0.5 * dt) * k1))
        k3 = self._rhs(e * v_spec + (0.5 * dt) * k2)
        k4 = self._rhs(e2 * v_spec + dt * (e * k3))
        return e2 * v_spec + (dt / 6.0) * (e2 * k1 + 2.0 * e * (k2 + k3) + k4)


def step(state, dt, dealias=True):
    """One integrating-factor RK4 step of size dt; raises BlowupSuspected on
    non-finite stages."""
    if dt == 0.0:
        return state
    stepper = _Stepper(state.grid, state.params, dt, dealias)
    v_spec = forward_fft(state.v.physical().values)
    out = stepper.advance(v_spec)
    if not np.all(np.isfinite(out.view(np.float64))):
        raise BlowupSuspected(state)
    return State(state.t + dt, Field(state.grid, inverse_fft(out), PHYSICAL), state.params)


def evolve(state, cfg, sink=None):
    """March a state to cfg.t_end, sampling every cfg.sample_every steps.

    The sink (if given) is called with each sampled State, including the
    initial and final one.  The run ends early with outcome BlowupDetected
    when any stage goes non-finite or the H^1 norm of u exceeds
    cfg.blowup_h1_factor times its initial value; errors never propagate as
    exceptions from here.
    """
    grid = state.grid
    stepper = _Stepper(grid, state.params, cfg.dt, cfg.dealias)
    v_spec = forward_fft(state.v.physical().values)
    t = state.t

    def current_state():
        return State(t, Field(grid, inverse_fft(v_spec), PHYSICAL), state.params)

    def h1_of_u():
        u = inverse_fft(v_spec).real
        return float(
            np.sqrt(
                np.sum((1.0 + grid.k_sq) * np.abs(forward_fft(u)) ** 2)
                * grid.cell_volume
            )
        )

    h1_0 = h1_of_u()
    max_h1 = h1_0
    samples = 0
    if sink is not None:
        sink(current_state())
        samples += 1

    n_steps = int(np.floor((cfg.t_end - t) / cfg.dt + 1e-9))
    remainder = cfg.t_end - t - n_steps * cfg.dt
    last_finite = current_state()
    for i in range(1, n_steps + 1):
        out = stepper.advance(v_spec)
        if not np.all(np.isfinite(out.view(np.float64))):
            return RunOutcome(
                "BlowupDetected", last_finite, "non-finite stage",
                h1_0, max_h1, samples,
            )
        v_spec = out
        t = state.t + i * cfg.dt
        at_sample = (i % cfg.sample_every == 0) or (i == n_steps)
        if at_sample:
            h1 = h1_of_u()
            max_h1 = max(max_h1, h1)
            last_finite = current_state()
            if sink is not None:
                sink(last_finite)
                samples += 1
            if h1_0 > 0 and h1 > cfg.blowup_h1_factor * h1_0:
                return RunOutcome(
                    "BlowupDetected", last_finite,
                    f"H1 runaway: {h1:.6g} > {cfg.blowup_h1_factor} x {h1_0:.6g}",
                    h1_0, max_h1, samples,
                )
    if remainder > 1e-12 * max(1.0, cfg.t_end):
        tail = _Stepper(grid, state.params, remainder, cfg.dealias)
        out = tail.advance(v_spec)
        if not np.all(np.isfinite(out.view(np.float64))):
            return RunOutcome(
                "BlowupDetected", last_finite, "non-finite stage",
                h1_0, max_h1, samples,
            )
        v_spec = out
        t = cfg.t_end
        h1 = h1_of_u()
        max_h1 = max(max_h1, h1)
        last_finite = current_state()
        if sink is not None:
            sink(last_finite)
            samples += 1
    return RunOutcome("Completed", last_finite, "", h1_0, max_h1, samples)


def wrap_around_time(grid, k_support):
    """Causal horizon of the periodic box for data supported under |k| <= k_support.

    Group speed of the dispersion w(k) = |k| sqrt(1+|k|^2) is
    w'(k) = (1 + 2 k^2)/sqrt(1 + k^2); the wrap-around time is the box
    in-radius divided by the fastest supported mode.
    """
    k = max(float(k_support), 1e-12)
    speed = (1.0 + 2.0 * k * k) / np.sqrt(1.0 + k * k)
    radius = min(grid.side) / 2.0
    return float(radius / speed)


def spectral_support(f, floor=1e-8):
    """Largest |k| whose amplitude exceeds floor * max amplitude."""
    spec = np.abs(f.spectral().values)
    peak = float(spec.max())
    if peak == 0.0:
        return 0.0
    return float(f.grid.k_abs[spec > floor * peak].max())


# ---------------------------------------------------------------------------
# checkpoint format: magic "GBQ1", u32 dim, u32 points[dim], f64 side[dim],
# f64 t, f64 alpha, i8 beta, u8 nonlinearity, then interleaved f64 (Re, Im)
# of v in row-major physical order; everything little-endian.

_MAGIC = b"GBQ1"


def write_checkpoint(path, state):
    g = state.grid
    phys = state.v.physical().values
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", g.dim))
        fh.write(struct.pack(f"<{g.dim}I", *g.points))
        fh.write(struct.pack(f"<{g.dim}d", *g.side))
        fh.write(struct.pack("<dd", state.t, state.params.alpha))
        fh.write(
            struct.pack(
                "<bB",
                state.params.beta,
                _NONLINEARITY_CODES[state.params.nonlinearity],
            )
        )
        inter = np.empty(g.shape + (2,), dtype="<f8")
        inter[..., 0] = phys.real
        inter[..., 1] = phys.imag
        fh.write(inter.tobytes())


def read_checkpoint(path):
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError(f"bad checkpoint magic {magic!r}")
        (dim,) = struct.unpack("<I", fh.read(4))
        points = struct.unpack(f"<{dim}I", fh.read(4 * dim))
        side = struct.unpack(f"<{dim}d", fh.read(8 * dim))
        t, alpha = struct.unpack("<dd", fh.read(16))
        beta, nl_code = struct.unpack("<bB", fh.read(2))
        if nl_code not in _NONLINEARITY_NAMES:
            raise ValueError(f"bad nonlinearity code {nl_code}")
        grid = Grid(dim, points, side)
        raw = np.frombuffer(fh.read(grid.size * 16), dtype="<f8")
        if raw.size != grid.size * 2:
            raise ValueError("truncated checkpoint payload")
        inter = raw.reshape(grid.shape + (2,))
        vals = inter[..., 0] + 1j * inter[..., 1]
        params = ModelParams(alpha, beta, _NONLINEARITY_NAMES[nl_code])
        return State(t, Field(grid, vals, PHYSICAL), params)
