"""Periodic grids, unitary FFTs, Fourier-multiplier operators, and norms.

Everything lives on a periodic box [0, L1) x ... x [0, Ld) sampled on a
uniform lattice with power-of-two point counts.  Angular wavenumbers are
k = 2*pi*n/L on the centered integer lattice (FFT storage order).  The two
symbols at the heart of the model are

    B(k) = |k| * sqrt(1 + |k|^2)        (half-wave operator of u_tt = -B^2 u)
    M(k) = |k| / sqrt(1 + |k|^2)        (= B / (1 + |k|^2))

and they are cached on the grid together with |k|^2.

Conventions:
  * transforms are unitary (discrete Parseval holds exactly), so L^2-type
    norms may be evaluated in either representation;
  * the zero mode of every negative-power symbol (Binv, |k|^s with s < 0)
    is defined as 0, i.e. operators act on mean-zero content only;
  * quadrature is the uniform Riemann sum times the cell volume, which is
    exact for band-limited integrands.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as _fft


class GridMismatchError(ValueError):
    """Two fields (or a field and a symbol) live on different grids."""


class ZeroModeError(ValueError):
    """A negative-power operator or norm was asked for on a field with mean."""


class Grid:
    """Uniform periodic grid with cached wavenumber lattice and symbols.

    Parameters
    ----------
    dim : 1, 2 or 3
    points : per-axis sample counts, each a power of two >= 8
    side : per-axis box lengths, each > 0
    """

    def __init__(self, dim, points, side):
        points = tuple(int(n) for n in np.atleast_1d(points))
        side = tuple(float(L) for L in np.atleast_1d(side))
        if dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {dim}")
        if len(points) != dim or len(side) != dim:
            raise ValueError("points and side must have one entry per axis")
        for n in points:
            if n < 8 or n & (n - 1):
                raise ValueError(f"points must be powers of two >= 8, got {n}")
        for L in side:
            if not L > 0:
                raise ValueError(f"side lengths must be positive, got {L}")
        self.dim = dim
        self.points = points
        self.side = side
        self.shape = points
        self.size = int(np.prod(points))
        self.cell_volume = float(np.prod([L / n for L, n in zip(side, points)]))
        self.volume = float(np.prod(side))
        # per-axis coordinates and angular wavenumbers (FFT order)
        self.axes = tuple(
            np.arange(n) * (L / n) for n, L in zip(points, side)
        )
        self.wavenumbers = tuple(
            2.0 * np.pi * np.fft.fftfreq(n, d=L / n) for n, L in zip(points, side)
        )
        ks = np.meshgrid(*self.wavenumbers, indexing="ij")
        self.k_sq = sum(k * k for k in ks)
        self.k_abs = np.sqrt(self.k_sq)
        self.b_symbol = self.k_abs * np.sqrt(1.0 + self.k_sq)
        self.m_symbol = self.k_abs / np.sqrt(1.0 + self.k_sq)
        # 2/3-rule mask, applied per axis when dealiasing nonlinear products
        mask = np.ones(self.shape, dtype=bool)
        for ax, (k, n, L) in enumerate(zip(self.wavenumbers, points, side)):
            cutoff = (2.0 / 3.0) * np.pi * n / L
            shape = [1] * dim
            shape[ax] = n
            mask &= (np.abs(k) <= cutoff + 1e-12).reshape(shape)
        self.dealias_mask = mask

    def coordinate_mesh(self):
        """Physical coordinates as dim arrays of the grid shape."""
        return np.meshgrid(*self.axes, indexing="ij")

    def radius_from_center(self):
        """Distance |x - x_c| from the box center."""
        mesh = self.coordinate_mesh()
        return np.sqrt(
            sum((x - L / 2.0) ** 2 for x, L in zip(mesh, self.side))
        )

    def compatible(self, other):
        return (
            self.dim == other.dim
            and self.points == other.points
            and self.side == other.side
        )

    def __eq__(self, other):
        return isinstance(other, Grid) and self.compatible(other)

    def __hash__(self):
        return hash((self.dim, self.points, self.side))

    def __repr__(self):
        return f"Grid(dim={self.dim}, points={self.points}, side={self.side})"


def make_grid(dim, points, side):
    """Construct a validated Grid (see Grid for the accepted arguments)."""
    return Grid(dim, points, side)


PHYSICAL = "physical"
SPECTRAL = "spectral"


@dataclass(frozen=True)
class Field:
    """Samples of a scalar field on a grid, physical or spectral.

    Values are complex128; real physical fields simply carry zero imaginary
    part.  Treat instances as immutable values.
    """

    grid: Grid
    values: np.ndarray
    representation: str = PHYSICAL

    def __post_init__(self):
        if self.representation not in (PHYSICAL, SPECTRAL):
            raise ValueError(f"unknown representation {self.representation!r}")
        vals = np.ascontiguousarray(self.values, dtype=np.complex128)
        if vals.shape != self.grid.shape:
            raise ValueError(
                f"values shape {vals.shape} does not match grid {self.grid.shape}"
            )
        object.__setattr__(self, "values", vals)

    @property
    def is_physical(self):
        return self.representation == PHYSICAL

    def to(self, target):
        return transform(self, target)

    def physical(self):
        return transform(self, PHYSICAL)

    def spectral(self):
        return transform(self, SPECTRAL)

    def real_part(self):
        """Physical-space real part, as a new physical Field."""
        return Field(self.grid, self.physical().values.real, PHYSICAL)

    def imag_part(self):
        return Field(self.grid, self.physical().values.imag, PHYSICAL)

    def mean(self):
        """Box average (complex for complex fields)."""
        return complex(self.physical().values.mean())

    def __add__(self, other):
        _check_same(self, other)
        return Field(self.grid, self.values + other.values, self.representation)

    def __sub__(self, other):
        _check_same(self, other)
        return Field(self.grid, self.values - other.values, self.representation)

    def __mul__(self, scalar):
        return Field(self.grid, self.values * scalar, self.representation)

    __rmul__ = __mul__


def _check_same(f, g):
    if not f.grid.compatible(g.grid):
        raise GridMismatchError("fields live on different grids")
    if f.representation != g.representation:
        raise ValueError("fields are in different representations")


def field_from_function(grid, fn):
    """Sample fn(*coords) on the grid as a physical field."""
    return Field(grid, np.asarray(fn(*grid.coordinate_mesh())), PHYSICAL)


def zero_field(grid):
    return Field(grid, np.zeros(grid.shape), PHYSICAL)


def transform(f, target):
    """Unitary DFT between representations; returns f unchanged if already there."""
    if target not in (PHYSICAL, SPECTRAL):
        raise ValueError(f"unknown representation {target!r}")
    if f.representation == target:
        return f
    if target == SPECTRAL:
        vals = forward_fft(f.values)
    else:
        vals = inverse_fft(f.values)
    return Field(f.grid, vals, target)


def forward_fft(values):
    """Unitary forward DFT of a physical sample array."""
    return _fft.fftn(values, norm="ortho")


def inverse_fft(values):
    """Unitary inverse DFT of a spectral coefficient array."""
    return _fft.ifftn(values, norm="ortho")


# ---------------------------------------------------------------------------
# multiplier symbols


@dataclass(frozen=True)
class MultiplierSymbol:
    """A Fourier multiplier, identified by kind and an optional parameter.

    kinds:
      "B"                    |k| sqrt(1+|k|^2)
      "Binv"                 1 / B(k), 0 at k = 0
      "M"                    |k| / sqrt(1+|k|^2)
      "M_power"(s)           M(k)^s, 0 at k = 0 for s > 0
      "fractional_laplacian"(s)   |k|^s  (s may be negative; 0 at k = 0)
      "bessel"(s)            (1+|k|^2)^{s/2}
      "riesz"(axis=j)        -i k_j / |k|, 0 at k = 0 and at the Nyquist rows
      "phase"(t)             exp(-i t B(k))
      "cos"(t)               cos(t B(k))
      "sin"(t)               sin(t B(k))
      "dyadic"(N)            sharp shell indicator N/2 < |k| <= N
    """

    kind: str
    param: float = 0.0
    axis: int = 0

    def values(self, grid):
        return symbol_values(grid, self.kind, self.param, self.axis)


def _nyquist_mask(grid, axis):
    """False on the unpaired Nyquist row of `axis` (even point counts)."""
    n = grid.points[axis]
    keep = np.ones(n, dtype=bool)
    keep[n // 2] = False
    shape = [1] * grid.dim
    shape[axis] = n
    return keep.reshape(shape)


def symbol_values(grid, kind, param=0.0, axis=0):
    """Symbol array for `kind` on `grid`, in FFT storage order."""
    if kind == "B":
        return grid.b_symbol
    if kind == "Binv":
        return _safe_negative_power(grid.b_symbol)
    if kind == "M":
        return grid.m_symbol
    if kind == "M_power":
        if param >= 0:
            return grid.m_symbol**param
        return _safe_negative_power(grid.m_symbol, -param)
    if kind == "fractional_laplacian":
        if param >= 0:
            return grid.k_abs**param
        return _safe_negative_power(grid.k_abs, -param)
    if kind == "bessel":
        return (1.0 + grid.k_sq) ** (param / 2.0)
    if kind == "riesz":
        kj = grid.wavenumbers[axis].reshape(
            [grid.points[axis] if a == axis else 1 for a in range(grid.dim)]
        )
        sym = -1j * kj * _safe_negative_power(grid.k_abs)
        return sym * _nyquist_mask(grid, axis)
    if kind == "phase":
        return np.exp(-1j * param * grid.b_symbol)
    if kind == "cos":
        return np.cos(param * grid.b_symbol)
    if kind == "sin":
        return np.sin(param * grid.b_symbol)
    if kind == "dyadic":
        if param <= 0:
            raise ValueError("dyadic shell N must be positive")
        return ((grid.k_abs > param / 2.0) & (grid.k_abs <= param)).astype(float)
    raise ValueError(f"unknown multiplier kind {kind!r}")


def _safe_negative_power(sym, power=1.0):
    """sym**(-power) with the zero-symbol entries mapped to 0."""
    out = np.zeros_like(sym)
    nz = sym != 0.0
    out[nz] = sym[nz] ** (-power)
    return out


def apply_multiplier(f, m):
    """Apply a multiplier to a field; output keeps the input representation.

    `m` may be a MultiplierSymbol or a raw symbol array on the same grid.
    """
    sym = m.values(f.grid) if isinstance(m, MultiplierSymbol) else np.asarray(m)
    if sym.shape != f.grid.shape:
        raise GridMismatchError("symbol shape does not match the field's grid")
    spec = f.spectral()
    out = Field(f.grid, spec.values * sym, SPECTRAL)
    return out.to(f.representation)


def apply_symbol(grid, values_spec, kind, param=0.0, axis=0):
    """Raw-array variant of apply_multiplier for hot loops (spectral in/out)."""
    return values_spec * symbol_values(grid, kind, param, axis)


def dyadic_project(f, shell):
    """Spectral restriction to the sharp dyadic shell N/2 < |k| <= N.

    The shells tile the nonzero frequencies, so summing projections over all
    shells that meet the lattice and adding the zero mode recovers the field.
    """
    return apply_multiplier(f, MultiplierSymbol("dyadic", float(shell)))


def gradient(f):
    """Spectral gradient, one field per axis (i k_j with Nyquist rows zeroed)."""
    spec = f.spectral()
    out = []
    for ax in range(f.grid.dim):
        kj = f.grid.wavenumbers[ax].reshape(
            [f.grid.points[ax] if a == ax else 1 for a in range(f.grid.dim)]
        )
        g = Field(f.grid, 1j * kj * spec.values * _nyquist_mask(f.grid, ax), SPECTRAL)
        out.append(g.to(f.representation))
    return tuple(out)


# ---------------------------------------------------------------------------
# norms and inner products


def norm(f, which, order=None):
    """Norm of a field.

    which: "L2" | "Lp" (needs order=p) | "Linf" | "H1" | "Hs" (order=s)
           | "Hdot" (order=s; s < 0 requires a mean-zero field)
    Physical-space norms use the uniform Riemann sum; Sobolev norms use
    Parseval on the unitary spectrum.
    """
    g = f.grid
    if which == "L2":
        return float(np.sqrt(np.sum(np.abs(f.values) ** 2) * g.cell_volume))
    if which == "Linf":
        return float(np.max(np.abs(f.physical().values)))
    if which == "Lp":
        if order is None:
            raise ValueError("Lp norm needs order=p")
        vals = np.abs(f.physical().values)
        return float((np.sum(vals**order) * g.cell_volume) ** (1.0 / order))
    if which == "H1":
        return float(np.sqrt(sobolev_norm_sq(f, 1.0)))
    if which == "Hs":
        if order is None:
            raise ValueError("Hs norm needs order=s")
        return float(np.sqrt(sobolev_norm_sq(f, order)))
    if which == "Hdot":
        if order is None:
            raise ValueError("Hdot norm needs order=s")
        return float(np.sqrt(homogeneous_norm_sq(f, order)))
    raise ValueError(f"unknown norm kind {which!r}")


def sobolev_norm_sq(f, s):
    """||<D>^s f||_{L^2}^2 via Parseval."""
    spec = f.spectral()
    w = (1.0 + f.grid.k_sq) ** s
    return float(np.sum(w * np.abs(spec.values) ** 2) * f.grid.cell_volume)


def homogeneous_norm_sq(f, s, zero_mode_rtol=1e-10):
    """|||k|^s f||_{L^2}^2 over nonzero modes.

    For s < 0 the zero mode must vanish (relative to the spectral maximum),
    otherwise the homogeneous norm is ill-defined and ZeroModeError is raised.
    """
    spec = f.spectral()
    mag = np.abs(spec.values)
    if s < 0:
        peak = float(mag.max())
        if peak > 0 and float(mag.flat[0]) > zero_mode_rtol * peak:
            raise ZeroModeError(
                "homogeneous norm of negative order needs a mean-zero field"
            )
    w = symbol_values(f.grid, "fractional_laplacian", 2.0 * s)
    return float(np.sum(w * mag**2) * f.grid.cell_volume)


def inner(f, g):
    """L^2 inner product <f, g> = integral of conj(f) g (complex)."""
    _check_compatible_reps(f, g)
    return complex(np.sum(np.conj(f.values) * g.values) * f.grid.cell_volume)


def _check_compatible_reps(f, g):
    if not f.grid.compatible(g.grid):
        raise GridMismatchError("fields live on different grids")
    if f.representation != g.representation:
        raise ValueError("fields are in different representations")


# ---------------------------------------------------------------------------
# pointwise nonlinearities and the multiplier commutator


def pointwise_power(f, alpha, dealias=True):
    """|f|^{alpha-1} f computed in physical space, optionally 2/3-masked."""
    phys = f.physical()
    vals = phys.values.real
    out = np.abs(vals) ** (alpha - 1.0) * vals
    result = Field(f.grid, out, PHYSICAL)
    if dealias:
        spec = result.spectral()
        result = Field(
            f.grid, spec.values * f.grid.dealias_mask, SPECTRAL
        ).physical()
    return result


def resample(f, new_grid):
    """Trigonometric resampling onto a grid with the same box lengths.

    Spectral coefficients of shared modes are kept (zero-padding upward,
    truncation downward), which reproduces band-limited fields exactly.
    """
    g = f.grid
    if g.dim != new_grid.dim or g.side != new_grid.side:
        raise GridMismatchError("resampling requires identical box lengths")
    if g.points == new_grid.points:
        return Field(new_grid, f.values, f.representation)
    old = np.fft.fftshift(f.spectral().values)
    out = np.zeros(new_grid.shape, dtype=np.complex128)
    slices_old, slices_new = [], []
    for n_old, n_new in zip(g.points, new_grid.points):
        n = min(n_old, n_new)
        lo_old = (n_old - n) // 2
        lo_new = (n_new - n) // 2
        slices_old.append(slice(lo_old, lo_old + n))
        slices_new.append(slice(lo_new, lo_new + n))
    out[tuple(slices_new)] = old[tuple(slices_old)]
    scale = np.sqrt(new_grid.size / g.size)  # unitary-coefficient rescaling
    res = Field(new_grid, np.fft.ifftshift(out) * scale, SPECTRAL)
    return res.to(f.representation)


def riesz_commutator(phi, f):
    """Commutator [(-Delta)^{1/2}, phi] f = D(phi f) - phi D f, spectrally.

    phi should be smooth (band-limited); the product is formed pointwise in
    physical space.
    """
    if not phi.grid.compatible(f.grid):
        raise GridMismatchError("fields live on different grids")
    phi_p = phi.physical()
    f_p = f.physical()
    prod = Field(f.grid, phi_p.values * f_p.values, PHYSICAL)
    d_prod = apply_multiplier(prod, MultiplierSymbol("fractional_laplacian", 1.0))
    d_f = apply_multiplier(f_p, MultiplierSymbol("fractional_laplacian", 1.0))
    vals = d_prod.values - phi_p.values * d_f.values
    return Field(f.grid, vals, PHYSICAL)
