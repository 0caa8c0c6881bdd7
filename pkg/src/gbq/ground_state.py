"""Solitary-wave profiles of -Lap(phi) + phi = |phi|^{alpha-1} phi.

The profile is computed on a periodic box by the normalized fixed-point
(Petviashvili) iteration

    phi_{n+1} = m_n^gamma * (1 - Lap)^{-1} (|phi_n|^{alpha-1} phi_n),
    m_n = <(1-Lap) phi_n, phi_n> / <|phi_n|^{alpha-1} phi_n, phi_n>,
    gamma = alpha / (alpha - 1),

started from a unit-height Gaussian bump at the box center.  The derived
sharp constants are

    c_star = ||phi||_{H^1}^{-(alpha-1)/(alpha+1)}     (best H^1 -> L^{alpha+1})
    eta    = (alpha-1)/(2(alpha+1)) * ||phi||_{H^1}^2 (threshold energy, = E(phi))

In one dimension the profile has the closed form
((alpha+1)/2)^{1/(alpha-1)} sech^{2/(alpha-1)}((alpha-1) x / 2), which the
tests use as the external oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import Field, PHYSICAL, forward_fft, inverse_fft
from . import propagator

DEFAULT_SIDE = {1: 80.0, 2: 40.0, 3: 30.0}
DEFAULT_POINTS = {1: 2048, 2: 256, 3: 128}


class GroundStateConvergenceError(RuntimeError):
    """Iteration did not meet tol; carries the last iterate and residual."""

    def __init__(self, phi, change, iterations):
        super().__init__(
            f"no convergence after {iterations} iterations (last change {change:.3e})"
        )
        self.phi = phi
        self.change = change
        self.iterations = iterations


def admissible_alpha(alpha, dim):
    if dim in (1, 2):
        return alpha > 1
    return 1 < alpha < (dim + 2) / (dim - 2)


@dataclass(frozen=True)
class GroundState:
    phi: Field
    alpha: float
    dim: int
    h1_norm_sq: float
    c_star: float
    eta: float
    pohozaev_residual: float
    equation_residual: float
    iterations: int

    @property
    def threshold_norm(self):
        """c_star^{-(alpha+1)/(alpha-1)} = ||phi||_{H^1}."""
        return self.c_star ** (-(self.alpha + 1) / (self.alpha - 1))

    @property
    def threshold_energy(self):
        """(alpha-1)/(2(alpha+1)) * c_star^{-2(alpha+1)/(alpha-1)} = eta."""
        a = self.alpha
        return (a - 1) / (2 * (a + 1)) * self.c_star ** (-2 * (a + 1) / (a - 1))


def default_grid(dim, points=None, side=None):
    from .spectral import make_grid

    n = points if points is not None else DEFAULT_POINTS[dim]
    L = side if side is not None else DEFAULT_SIDE[dim]
    return make_grid(dim, (n,) * dim if np.isscalar(n) else n,
                     (L,) * dim if np.isscalar(L) else L)


def gaussian_bump(grid, amplitude=1.0, width=1.0):
    """amplitude * exp(-|x - center|^2 / width^2), the default seed."""
    r = grid.radius_from_center()
    return Field(grid, amplitude * np.exp(-((r / width) ** 2)), PHYSICAL)


def petviashvili(grid, alpha, init=None, tol=1e-12, max_iter=500):
    """Run the stabilized fixed-point iteration to tolerance.

    Convergence is declared when the successive sup-norm change drops below
    tol.  Raises GroundStateConvergenceError after max_iter, and ValueError
    for alpha outside the admissible range of the grid's dimension.
    """
    if not admissible_alpha(alpha, grid.dim):
        raise ValueError(
            f"alpha={alpha} not admissible in dimension {grid.dim}"
        )
    gamma = alpha / (alpha - 1.0)
    one_plus_k2 = 1.0 + grid.k_sq
    dv = grid.cell_volume

    phi = (init.physical().values.real if init is not None
           else gaussian_bump(grid).values.real)
    phi_hat = forward_fft(phi)
    for it in range(1, max_iter + 1):
        g = np.abs(phi) ** (alpha - 1.0) * phi
        g_hat = forward_fft(g)
        h1_sq = float(np.sum(one_plus_k2 * np.abs(phi_hat) ** 2)) * dv
        lp_pow = float(np.sum(g * phi)) * dv
        m = h1_sq / lp_pow
        phi_hat = (m**gamma) * g_hat / one_plus_k2
        phi_new = inverse_fft(phi_hat).real
        change = float(np.max(np.abs(phi_new - phi)))
        phi = phi_new
        if change <= tol:
            return _finalize(grid, phi, phi_hat, alpha, it)
    raise GroundStateConvergenceError(Field(grid, phi, PHYSICAL), change, max_iter)


def _finalize(grid, phi, phi_hat, alpha, iterations):
    dv = grid.cell_volume
    h1_sq = float(np.sum((1.0 + grid.k_sq) * np.abs(phi_hat) ** 2)) * dv
    lp_pow = float(np.sum(np.abs(phi) ** (alpha + 1.0))) * dv
    pohozaev = abs(h1_sq - lp_pow) / h1_sq
    resid_vals = inverse_fft((1.0 + grid.k_sq) * phi_hat).real - np.abs(phi) ** (
        alpha - 1.0
    ) * phi
    l2 = np.sqrt(float(np.sum(phi**2)) * dv)
    eq_residual = np.sqrt(float(np.sum(resid_vals**2)) * dv) / l2
    c_star, eta = _constants(h1_sq, alpha)
    return GroundState(
        phi=Field(grid, phi, PHYSICAL),
        alpha=alpha,
        dim=grid.dim,
        h1_norm_sq=h1_sq,
        c_star=c_star,
        eta=eta,
        pohozaev_residual=pohozaev,
        equation_residual=eq_residual,
        iterations=iterations,
    )


def _constants(h1_norm_sq, alpha):
    c_star = h1_norm_sq ** (-(alpha - 1.0) / (2.0 * (alpha + 1.0)))
    eta = (alpha - 1.0) / (2.0 * (alpha + 1.0)) * h1_norm_sq
    return c_star, eta


def constants_from_phi(phi, alpha):
    """(c_star, eta) from a converged profile; eta is cross-checked against
    the static energy E(phi) = h1/2 - ||phi||_{alpha+1}^{alpha+1}/(alpha+1)."""
    from .spectral import sobolev_norm_sq, norm

    h1_sq = sobolev_norm_sq(phi, 1.0)
    c_star, eta = _constants(h1_sq, alpha)
    lp_pow = norm(phi, "Lp", alpha + 1.0) ** (alpha + 1.0)
    e_phi = 0.5 * h1_sq - lp_pow / (alpha + 1.0)
    if abs(e_phi - eta) > 1e-3 * abs(eta):
        raise ValueError(
            f"eta={eta:.6g} and E(phi)={e_phi:.6g} disagree; "
            "phi does not look like a converged ground state"
        )
    return c_star, eta


def sech_profile(grid, alpha):
    """Closed-form 1-d profile, the oracle for d = 1."""
    if grid.dim != 1:
        raise ValueError("closed form exists only in one dimension")
    x = grid.coordinate_mesh()[0] - grid.side[0] / 2.0
    amp = ((alpha + 1.0) / 2.0) ** (1.0 / (alpha - 1.0))
    return Field(
        grid, amp * np.cosh((alpha - 1.0) * x / 2.0) ** (-2.0 / (alpha - 1.0)),
        PHYSICAL,
    )


def save_ground_state(path_prefix, gs):
    """Write <prefix>.gbq (checkpoint with u_t = 0) and <prefix>.txt sidecar."""
    params = propagator.ModelParams(gs.alpha, -1, propagator.POWER)
    state = propagator.State(0.0, gs.phi, params)
    propagator.write_checkpoint(str(path_prefix) + ".gbq", state)
    with open(str(path_prefix) + ".txt", "w") as fh:
        fh.write(f"alpha = {gs.alpha:.17g}\n")
        fh.write(f"dim = {gs.dim}\n")
        fh.write(f"h1_norm_sq = {gs.h1_norm_sq:.17g}\n")
        fh.write(f"c_star = {gs.c_star:.17g}\n")
        fh.write(f"eta = {gs.eta:.17g}\n")
        fh.write(f"pohozaev_residual = {gs.pohozaev_residual:.17g}\n")
        fh.write(f"equation_residual = {gs.equation_residual:.17g}\n")


def load_ground_state(checkpoint_path):
    """Rebuild a GroundState from a stored profile (constants recomputed)."""
    state = propagator.read_checkpoint(checkpoint_path)
    phi_hat = forward_fft(state.v.physical().values.real)
    return _finalize(
        state.grid, state.v.values.real, phi_hat, state.params.alpha, 0
    )
