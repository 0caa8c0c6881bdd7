import numpy as np
import pytest

from gbq.spectral import Field, make_grid, norm, sobolev_norm_sq
from gbq.ground_state import (
    GroundStateConvergenceError,
    constants_from_phi,
    gaussian_bump,
    load_ground_state,
    petviashvili,
    save_ground_state,
    sech_profile,
)
from gbq.diagnostics import static_functionals
from conftest import random_band_limited


class TestOneDimensionalOracle:
    """alpha = 3, d = 1: the closed form is sqrt(2) sech(x - x_c)."""

    def test_pointwise_error(self, gs1):
        oracle = sech_profile(gs1.phi.grid, 3.0)
        assert np.max(np.abs(gs1.phi.values.real - oracle.values.real)) < 1e-6

    def test_center_amplitude(self, gs1):
        assert gs1.phi.values.real.max() == pytest.approx(np.sqrt(2.0), abs=1e-6)

    def test_h1_norm(self, gs1):
        assert gs1.h1_norm_sq == pytest.approx(16.0 / 3.0, abs=1e-5)

    def test_best_constant(self, gs1):
        assert gs1.c_star == pytest.approx((16.0 / 3.0) ** -0.25, abs=1e-6)

    def test_threshold_energy(self, gs1):
        assert gs1.eta == pytest.approx(4.0 / 3.0, abs=1e-6)
        assert gs1.threshold_energy == pytest.approx(gs1.eta, rel=1e-12)

    def test_threshold_norm_is_h1_norm(self, gs1):
        assert gs1.threshold_norm == pytest.approx(
            np.sqrt(gs1.h1_norm_sq), rel=1e-12
        )

    def test_pohozaev_residual(self, gs1):
        assert gs1.pohozaev_residual <= 1e-8

    def test_equation_residual(self, gs1):
        assert gs1.equation_residual <= 1e-6

    def test_positive_up_to_roundoff(self, gs1):
        vals = gs1.phi.values.real
        assert vals.min() >= -1e-12 * vals.max()

    def test_radially_symmetric_about_center(self, gs1):
        vals = gs1.phi.values.real
        reflected = np.roll(vals[::-1], 1)
        assert np.max(np.abs(vals - reflected)) < 1e-8


def test_alpha_five_closed_form():
    # ((alpha+1)/2)^{1/(alpha-1)} sech^{2/(alpha-1)}((alpha-1)x/2)
    grid = make_grid(1, [2048], [80.0])
    gs = petviashvili(grid, 5.0, tol=1e-13)
    oracle = sech_profile(grid, 5.0)
    assert np.max(np.abs(gs.phi.values.real - oracle.values.real)) < 1e-6
    assert gs.phi.values.real.max() == pytest.approx(3.0**0.25, abs=1e-6)


class TestAdmissibility:
    def test_rejects_alpha_below_one(self):
        grid = make_grid(1, [64], [40.0])
        with pytest.raises(ValueError):
            petviashvili(grid, 0.5)

    def test_rejects_supercritical_alpha_in_3d(self):
        grid = make_grid(3, [16] * 3, [30.0] * 3)
        with pytest.raises(ValueError):
            petviashvili(grid, 6.0)

    def test_any_alpha_in_2d(self):
        grid = make_grid(2, [64] * 2, [40.0] * 2)
        petviashvili(grid, 7.0, tol=1e-8, max_iter=400)


def test_non_convergence_carries_iterate():
    grid = make_grid(1, [256], [80.0])
    with pytest.raises(GroundStateConvergenceError) as err:
        petviashvili(grid, 3.0, tol=1e-13, max_iter=3)
    assert err.value.iterations == 3
    assert err.value.phi.grid is grid
    assert err.value.change > 0


class TestTwoDimensional:
    @pytest.fixture(scope="class")
    def gs2(self):
        grid = make_grid(2, [128] * 2, [40.0] * 2)
        return petviashvili(grid, 3.0, tol=1e-12)

    def test_residuals(self, gs2):
        assert gs2.pohozaev_residual <= 1e-6
        assert gs2.equation_residual <= 1e-6

    def test_eta_matches_static_energy(self, gs2):
        e_phi, r_phi = static_functionals(gs2.phi, 3.0)
        assert e_phi == pytest.approx(gs2.eta, rel=1e-6)
        assert abs(r_phi) <= 1e-6 * gs2.h1_norm_sq

    def test_positive_and_radial(self, gs2):
        vals = gs2.phi.values.real
        assert vals.min() >= -1e-12 * vals.max()
        for ax in (0, 1):
            reflected = np.roll(np.flip(vals, axis=ax), 1, axis=ax)
            assert np.max(np.abs(vals - reflected)) < 1e-8
        assert np.max(np.abs(vals - vals.T)) < 1e-8


def test_constants_from_phi_cross_check(gs1):
    c_star, eta = constants_from_phi(gs1.phi, 3.0)
    assert c_star == pytest.approx(gs1.c_star, rel=1e-12)
    e_phi, _ = static_functionals(gs1.phi, 3.0)
    assert eta == pytest.approx(e_phi, rel=1e-6)


def test_constants_from_phi_rejects_non_ground_state(gs1):
    bump = gaussian_bump(gs1.phi.grid, amplitude=3.0, width=0.5)
    with pytest.raises(ValueError):
        constants_from_phi(bump, 3.0)


def test_sobolev_optimality_over_random_trials(gs1):
    # c_star is the best H^1 -> L^{alpha+1} constant; no trial may beat it
    rng = np.random.default_rng(12)
    grid = gs1.phi.grid
    for _ in range(200):
        g = random_band_limited(grid, rng, band=8.0)
        lhs = norm(g, "Lp", 4.0)
        rhs = gs1.c_star * np.sqrt(sobolev_norm_sq(g, 1.0))
        assert lhs <= rhs * (1 + 1e-4)


def test_box_doubling_stability(gs1):
    grid2 = make_grid(1, [4096], [160.0])
    gs2 = petviashvili(grid2, 3.0, tol=1e-13)
    assert abs(gs2.c_star - gs1.c_star) / gs1.c_star <= 1e-4


def test_save_load_round_trip(tmp_path, gs1):
    prefix = tmp_path / "gs"
    save_ground_state(prefix, gs1)
    loaded = load_ground_state(str(prefix) + ".gbq")
    assert loaded.alpha == gs1.alpha
    assert loaded.c_star == pytest.approx(gs1.c_star, rel=1e-14)
    assert np.array_equal(loaded.phi.values, gs1.phi.values)
    sidecar = (tmp_path / "gs.txt").read_text()
    assert "c_star" in sidecar and "pohozaev_residual" in sidecar
