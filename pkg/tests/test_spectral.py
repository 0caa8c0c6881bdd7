import numpy as np
import pytest

from gbq.spectral import (
    Field,
    GridMismatchError,
    MultiplierSymbol,
    ZeroModeError,
    apply_multiplier,
    dyadic_project,
    gradient,
    inner,
    make_grid,
    norm,
    resample,
    riesz_commutator,
    sobolev_norm_sq,
    zero_field,
)
from conftest import random_band_limited


class TestGrid:
    def test_unit_box_integer_wavenumbers(self):
        g = make_grid(1, [8], [2 * np.pi])
        assert np.array_equal(np.sort(g.wavenumbers[0]), np.arange(-4.0, 4.0))

    def test_wavenumber_spacing(self):
        g = make_grid(1, [8], [4 * np.pi])
        spacing = np.diff(np.sort(g.wavenumbers[0]))
        assert np.allclose(spacing, 0.5)

    def test_total_samples(self):
        g = make_grid(2, [16, 16], [2 * np.pi, 2 * np.pi])
        assert g.size == 256

    @pytest.mark.parametrize("points", [7, 12, 4])
    def test_rejects_bad_counts(self, points):
        with pytest.raises(ValueError):
            make_grid(1, [points], [1.0])

    def test_rejects_nonpositive_side(self):
        with pytest.raises(ValueError):
            make_grid(1, [8], [0.0])

    def test_rejects_bad_dim(self):
        with pytest.raises(ValueError):
            make_grid(4, [8] * 4, [1.0] * 4)


class TestTransform:
    def test_constant_concentrates_on_zero_mode(self, grid_2pi):
        f = Field(grid_2pi, np.full(256, 2.5)).spectral()
        mags = np.abs(f.values)
        assert mags[0] > 0
        assert np.max(mags[1:]) < 1e-12 * mags[0]

    def test_cosine_two_lines(self, grid_2pi):
        x = grid_2pi.axes[0]
        spec = Field(grid_2pi, np.cos(3 * x)).spectral().values
        idx = np.argsort(np.abs(spec))[::-1]
        k = grid_2pi.wavenumbers[0]
        assert sorted(k[idx[:2]]) == [-3.0, 3.0]
        assert np.max(np.abs(spec[idx[2:]])) < 1e-12 * np.abs(spec[idx[0]])

    def test_round_trip(self, grid_2pi):
        rng = np.random.default_rng(0)
        f = Field(grid_2pi, rng.standard_normal(256))
        back = f.spectral().physical()
        assert np.max(np.abs(back.values - f.values)) < 1e-12

    def test_parseval(self, grid_2pi):
        rng = np.random.default_rng(1)
        f = Field(grid_2pi, rng.standard_normal(256))
        assert norm(f, "L2") == pytest.approx(norm(f.spectral(), "L2"), rel=1e-12)


class TestMultipliers:
    def test_b_on_single_mode(self, grid_2pi):
        x = grid_2pi.axes[0]
        e = Field(grid_2pi, np.exp(1j * x))
        out = apply_multiplier(e, MultiplierSymbol("B"))
        assert np.max(np.abs(out.values - np.sqrt(2.0) * e.values)) < 1e-12

    def test_m_kills_constants(self, grid_2pi):
        c = Field(grid_2pi, np.full(256, 3.0))
        out = apply_multiplier(c, MultiplierSymbol("M"))
        assert np.max(np.abs(out.values)) == 0.0

    def test_fractional_laplacian_on_cos(self, grid_2pi):
        x = grid_2pi.axes[0]
        f = Field(grid_2pi, np.cos(2 * x))
        out = apply_multiplier(f, MultiplierSymbol("fractional_laplacian", 2.0))
        assert np.max(np.abs(out.values.real - 4 * np.cos(2 * x))) < 1e-10

    def test_grid_mismatch_rejected(self, grid_2pi):
        other = make_grid(1, [128], [2 * np.pi])
        f = zero_field(other)
        with pytest.raises(GridMismatchError):
            apply_multiplier(f, MultiplierSymbol("B").values(grid_2pi))

    def test_binv_inverts_b_on_mean_zero(self, grid_2pi):
        rng = np.random.default_rng(2)
        f = random_band_limited(grid_2pi, rng, band=30)
        out = apply_multiplier(
            apply_multiplier(f, MultiplierSymbol("B")), MultiplierSymbol("Binv")
        )
        assert np.max(np.abs(out.values - f.values)) < 1e-12 * norm(f, "Linf")

    def test_m_factors_through_bessel(self, grid_2pi):
        rng = np.random.default_rng(3)
        f = random_band_limited(grid_2pi, rng, band=30)
        direct = apply_multiplier(f, MultiplierSymbol("M"))
        composed = apply_multiplier(
            apply_multiplier(f, MultiplierSymbol("bessel", -2.0)),
            MultiplierSymbol("B"),
        )
        assert np.max(np.abs(direct.values - composed.values)) < 1e-12

    @pytest.mark.parametrize(
        "sym",
        [
            MultiplierSymbol("B"),
            MultiplierSymbol("M"),
            MultiplierSymbol("bessel", 1.5),
            MultiplierSymbol("fractional_laplacian", 1.0),
            MultiplierSymbol("cos", 0.7),
        ],
    )
    def test_even_symbols_preserve_realness(self, grid_2pi, sym):
        rng = np.random.default_rng(4)
        f = random_band_limited(grid_2pi, rng, band=40)
        out = apply_multiplier(f, sym)
        assert np.max(np.abs(out.values.imag)) < 1e-12 * max(
            1.0, norm(out, "Linf")
        )

    def test_riesz_maps_real_to_real(self):
        g = make_grid(2, [32, 32], [2 * np.pi, 2 * np.pi])
        rng = np.random.default_rng(5)
        f = random_band_limited(g, rng, band=8)
        out = apply_multiplier(f, MultiplierSymbol("riesz", axis=1))
        assert np.max(np.abs(out.values.imag)) < 1e-12 * max(
            1.0, norm(out, "Linf")
        )

    def test_phase_is_unitary(self, grid_2pi):
        rng = np.random.default_rng(6)
        f = random_band_limited(grid_2pi, rng, band=40, real=False)
        out = apply_multiplier(f, MultiplierSymbol("phase", 2.3))
        assert norm(out, "L2") == pytest.approx(norm(f, "L2"), rel=1e-12)


class TestDyadic:
    def test_low_mode_kept_in_unit_shell(self, grid_2pi):
        x = grid_2pi.axes[0]
        f = Field(grid_2pi, np.cos(x))
        out = dyadic_project(f, 1.0)
        assert np.max(np.abs(out.values - f.values)) < 1e-12

    def test_low_mode_killed_by_high_shell(self, grid_2pi):
        x = grid_2pi.axes[0]
        f = Field(grid_2pi, np.cos(x))
        out = dyadic_project(f, 8.0)
        assert np.max(np.abs(out.values)) < 1e-14

    def test_shells_partition_white_noise(self, grid_2pi):
        rng = np.random.default_rng(7)
        f = Field(grid_2pi, rng.standard_normal(256))
        total = np.zeros(256, dtype=complex)
        for j in range(-1, 9):
            total += dyadic_project(f, 2.0**j).spectral().values
        spec = f.spectral().values
        total[0] += spec[0]  # zero mode sits outside every shell
        assert np.max(np.abs(total - spec)) < 1e-12 * np.abs(spec).max()


class TestNorms:
    def test_l2_of_cosine(self, grid_2pi):
        x = grid_2pi.axes[0]
        f = Field(grid_2pi, np.cos(x))
        assert norm(f, "L2") ** 2 == pytest.approx(np.pi, rel=1e-12)

    def test_h1_of_cosine(self, grid_2pi):
        x = grid_2pi.axes[0]
        f = Field(grid_2pi, np.cos(x))
        assert norm(f, "H1") ** 2 == pytest.approx(2 * np.pi, rel=1e-12)

    def test_h1_of_sech_profile(self):
        # integral of 2 sech^2 = 4 and of 2 sech^2 tanh^2 = 4/3
        g = make_grid(1, [2048], [80.0])
        x = g.axes[0] - 40.0
        f = Field(g, np.sqrt(2.0) / np.cosh(x))
        assert norm(f, "H1") ** 2 == pytest.approx(16.0 / 3.0, abs=1e-6)

    def test_linf_and_lp(self, grid_2pi):
        x = grid_2pi.axes[0]
        f = Field(grid_2pi, np.cos(x))
        assert norm(f, "Linf") == pytest.approx(1.0, rel=1e-12)
        # int |cos|^4 = 3 pi / 4
        assert norm(f, "Lp", 4) ** 4 == pytest.approx(3 * np.pi / 4, rel=1e-12)

    def test_negative_homogeneous_needs_mean_zero(self, grid_2pi):
        f = Field(grid_2pi, np.full(256, 1.0))
        with pytest.raises(ZeroModeError):
            norm(f, "Hdot", -1.0)

    def test_hdot_on_single_mode(self, grid_2pi):
        x = grid_2pi.axes[0]
        f = Field(grid_2pi, np.cos(2 * x))
        # |k|^{-1} weight at k = 2 halves the amplitude
        assert norm(f, "Hdot", -1.0) ** 2 == pytest.approx(np.pi / 4, rel=1e-12)


class TestCommutator:
    def test_constant_weight_commutes(self, grid_2pi):
        rng = np.random.default_rng(8)
        f = random_band_limited(grid_2pi, rng, band=30)
        phi = Field(grid_2pi, np.full(256, 4.2))
        out = riesz_commutator(phi, f)
        assert np.max(np.abs(out.values)) < 1e-12 * norm(f, "Linf")

    def test_two_mode_hand_expansion(self, grid_2pi):
        # phi = sin x, f = cos x: D(sin x cos x) = sin 2x, phi D f = sin(2x)/2
        x = grid_2pi.axes[0]
        out = riesz_commutator(Field(grid_2pi, np.sin(x)), Field(grid_2pi, np.cos(x)))
        assert np.max(np.abs(out.values.real - 0.5 * np.sin(2 * x))) < 1e-12

    def test_bound_constant_stable_under_refinement(self):
        def empirical_constant(n):
            g = make_grid(1, [n], [2 * np.pi])
            rng = np.random.default_rng(9)
            worst = 0.0
            for _ in range(40):
                phi = random_band_limited(g, rng, band=40)
                f = random_band_limited(g, rng, band=40)
                com = riesz_commutator(phi, f)
                grad_inf = norm(gradient(phi)[0], "Linf")
                worst = max(worst, norm(com, "L2") / (grad_inf * norm(f, "L2")))
            return worst

        c_lo, c_hi = empirical_constant(256), empirical_constant(512)
        assert abs(c_hi - c_lo) / c_lo < 0.05


class TestResample:
    def test_band_limited_exact_both_ways(self):
        g_lo = make_grid(1, [256], [2 * np.pi])
        g_hi = make_grid(1, [512], [2 * np.pi])
        rng = np.random.default_rng(10)
        f = random_band_limited(g_lo, rng, band=40)
        up = resample(f, g_hi)
        # values agree on the shared lattice (every other point of the fine one)
        assert np.max(np.abs(up.values[::2] - f.values)) < 1e-12
        down = resample(up, g_lo)
        assert np.max(np.abs(down.values - f.values)) < 1e-12

    def test_requires_same_box(self):
        g1 = make_grid(1, [256], [2 * np.pi])
        g2 = make_grid(1, [256], [4 * np.pi])
        with pytest.raises(GridMismatchError):
            resample(zero_field(g1), g2)


def test_inner_product_matches_quadrature(grid_2pi):
    x = grid_2pi.axes[0]
    f = Field(grid_2pi, np.cos(x))
    g = Field(grid_2pi, np.cos(x) + np.sin(2 * x))
    assert inner(f, g).real == pytest.approx(np.pi, rel=1e-12)


def test_sobolev_norm_matches_parseval(grid_2pi):
    rng = np.random.default_rng(11)
    f = random_band_limited(grid_2pi, rng, band=50)
    w = (1.0 + grid_2pi.k_sq) ** 1.5
    spec = f.spectral().values
    manual = float(np.sum(w * np.abs(spec) ** 2) * grid_2pi.cell_volume)
    assert sobolev_norm_sq(f, 1.5) == pytest.approx(manual, rel=1e-12)
