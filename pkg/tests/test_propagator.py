import os

import numpy as np
import pytest

from gbq.spectral import Field, ZeroModeError, make_grid, norm, zero_field
from gbq.propagator import (
    BlowupSuspected,
    ModelParams,
    State,
    StepperConfig,
    evolve,
    from_v,
    linear_flow,
    nonlinear_term,
    read_checkpoint,
    spectral_support,
    step,
    to_v,
    wrap_around_time,
    write_checkpoint,
)
from gbq.diagnostics import energy
from conftest import random_band_limited

FOCUSING = ModelParams(3.0, -1)
DEFOCUSING = ModelParams(3.0, 1)
LINEAR = ModelParams(3.0, 1, "none")


class TestModelParams:
    def test_alpha_must_exceed_one(self):
        with pytest.raises(ValueError):
            ModelParams(1.0, 1)

    def test_quadratic_fixes_alpha(self):
        with pytest.raises(ValueError):
            ModelParams(3.0, 1, "quadratic")

    def test_quadratic_absorbs_sign(self):
        with pytest.raises(ValueError):
            ModelParams(2.0, -1, "quadratic")
        ModelParams(2.0, 1, "quadratic")


class TestTransformPair:
    def test_real_data_gives_real_v(self, grid_2pi):
        x = grid_2pi.axes[0]
        s = to_v(Field(grid_2pi, np.cos(x)), zero_field(grid_2pi), FOCUSING)
        assert np.max(np.abs(s.v.values.imag)) < 1e-14
        assert np.max(np.abs(s.v.values.real - np.cos(x))) < 1e-14

    def test_velocity_maps_through_binv(self, grid_2pi):
        # Binv at |k| = 1 is 1/sqrt(2)
        x = grid_2pi.axes[0]
        s = to_v(zero_field(grid_2pi), Field(grid_2pi, np.sin(x)), FOCUSING)
        assert np.max(np.abs(s.v.values.imag - np.sin(x) / np.sqrt(2))) < 1e-13
        assert np.max(np.abs(s.v.values.real)) < 1e-13

    def test_round_trip(self, grid_2pi):
        rng = np.random.default_rng(0)
        u0 = random_band_limited(grid_2pi, rng, band=30)
        u1 = random_band_limited(grid_2pi, rng, band=30)
        u0b, u1b = from_v(to_v(u0, u1, FOCUSING))
        assert np.max(np.abs(u0b.values - u0.values)) < 1e-12
        assert np.max(np.abs(u1b.values - u1.values)) < 1e-12

    def test_rejects_velocity_with_mean(self, grid_2pi):
        with pytest.raises(ZeroModeError):
            to_v(zero_field(grid_2pi), Field(grid_2pi, np.full(256, 1.0)), FOCUSING)


class TestLinearFlow:
    def test_single_mode_phase(self, grid_2pi):
        x = grid_2pi.axes[0]
        k = 3.0
        omega = k * np.sqrt(1 + k * k)
        u, ut = linear_flow(Field(grid_2pi, np.cos(k * x)), zero_field(grid_2pi), 1.0)
        assert np.max(np.abs(u.values.real - np.cos(omega) * np.cos(k * x))) < 1e-12
        assert np.max(
            np.abs(ut.values.real + omega * np.sin(omega) * np.cos(k * x))
        ) < 1e-11

    def test_identity_at_t_zero(self, grid_2pi):
        rng = np.random.default_rng(1)
        u1 = random_band_limited(grid_2pi, rng, band=20)
        u, ut = linear_flow(zero_field(grid_2pi), u1, 0.0)
        assert np.max(np.abs(u.values)) < 1e-14
        assert np.max(np.abs(ut.values - u1.values)) < 1e-14

    def test_matches_phase_multiplier_route(self, grid_2pi):
        rng = np.random.default_rng(2)
        u0 = random_band_limited(grid_2pi, rng, band=20)
        u1 = random_band_limited(grid_2pi, rng, band=20)
        u_direct, ut_direct = linear_flow(u0, u1, 0.8)
        state = to_v(u0, u1, LINEAR)
        u_v, ut_v = from_v(step(State(0.0, state.v, LINEAR), 0.8))
        assert np.max(np.abs(u_direct.values - u_v.values)) < 1e-12
        assert np.max(np.abs(ut_direct.values - ut_v.values)) < 1e-12

    def test_reversibility(self, grid_2pi):
        rng = np.random.default_rng(3)
        u0 = random_band_limited(grid_2pi, rng, band=20)
        u1 = random_band_limited(grid_2pi, rng, band=20)
        ua, uta = linear_flow(u0, u1, 2.5)
        ub, utb = linear_flow(ua, uta, -2.5)
        assert np.max(np.abs(ub.values - u0.values)) < 1e-12
        assert np.max(np.abs(utb.values - u1.values)) < 1e-12

    def test_energy_invariant(self, grid_2pi):
        rng = np.random.default_rng(4)
        u0 = random_band_limited(grid_2pi, rng, band=20)
        u1 = random_band_limited(grid_2pi, rng, band=20)
        e0 = energy(to_v(u0, u1, LINEAR))
        u, ut = linear_flow(u0, u1, 7.7)
        e1 = energy(to_v(u, ut, LINEAR))
        assert abs(e1 - e0) < 1e-12 * abs(e0)


class TestNonlinearTerm:
    def test_zero_field(self, grid_2pi):
        s = to_v(zero_field(grid_2pi), zero_field(grid_2pi), FOCUSING)
        assert np.max(np.abs(nonlinear_term(s).values)) == 0.0

    def test_constant_killed_by_m(self, grid_2pi):
        s = to_v(Field(grid_2pi, np.full(256, 2.0)), zero_field(grid_2pi), FOCUSING)
        assert np.max(np.abs(nonlinear_term(s, dealias=False).values)) < 1e-13

    def test_cosine_cubed_two_mode_oracle(self, grid_2pi):
        # cos^3 x = (3/4) cos x + (1/4) cos 3x; M(1) = 1/sqrt2, M(3) = 3/sqrt10
        x = grid_2pi.axes[0]
        s = to_v(Field(grid_2pi, np.cos(x)), zero_field(grid_2pi), DEFOCUSING)
        out = nonlinear_term(s, dealias=False)
        expected = (0.75 / np.sqrt(2)) * np.cos(x) + (0.25 * 3 / np.sqrt(10)) * np.cos(
            3 * x
        )
        assert np.max(np.abs(out.values.real - expected)) < 1e-13

    def test_beta_flips_sign(self, grid_2pi):
        x = grid_2pi.axes[0]
        u0 = Field(grid_2pi, np.cos(x))
        plus = nonlinear_term(to_v(u0, zero_field(grid_2pi), DEFOCUSING))
        minus = nonlinear_term(to_v(u0, zero_field(grid_2pi), FOCUSING))
        assert np.max(np.abs(plus.values + minus.values)) < 1e-14


class TestStep:
    def test_zero_dt_is_identity(self, grid_2pi):
        rng = np.random.default_rng(5)
        u0 = random_band_limited(grid_2pi, rng, band=10)
        s = to_v(u0, zero_field(grid_2pi), DEFOCUSING)
        assert step(s, 0.0) is s

    def test_fourth_order_self_convergence(self):
        g = make_grid(1, [128], [2 * np.pi])
        x = g.axes[0]
        s0 = to_v(Field(g, 0.5 * np.cos(x)), zero_field(g), DEFOCUSING)
        finals = {}
        for dt in (4e-3, 2e-3, 1e-3):
            out = evolve(s0, StepperConfig(dt=dt, t_end=0.5, sample_every=10**9))
            finals[dt] = out.state.v.values
        e1 = np.max(np.abs(finals[4e-3] - finals[2e-3]))
        e2 = np.max(np.abs(finals[2e-3] - finals[1e-3]))
        assert 12.0 <= e1 / e2 <= 20.0

    def test_blowup_suspected_carries_state(self, grid_2pi):
        huge = Field(grid_2pi, np.full(256, 1e200))
        s = to_v(huge, zero_field(grid_2pi), FOCUSING)
        with pytest.raises(BlowupSuspected) as err:
            step(s, 1.0)
        assert err.value.state is s


class TestEvolve:
    def test_zero_data_completes_with_zero_diagnostics(self, grid_2pi):
        s = to_v(zero_field(grid_2pi), zero_field(grid_2pi), FOCUSING)
        seen = []
        out = evolve(
            s, StepperConfig(dt=0.01, t_end=0.1), sink=lambda st: seen.append(st)
        )
        assert out.outcome == "Completed"
        assert all(np.max(np.abs(st.v.values)) == 0.0 for st in seen)

    def test_linear_energy_drift_tiny(self, grid_2pi):
        rng = np.random.default_rng(6)
        u0 = random_band_limited(grid_2pi, rng, band=20)
        s = to_v(u0, zero_field(grid_2pi), LINEAR)
        e0 = energy(s)
        drifts = []
        out = evolve(
            s,
            StepperConfig(dt=0.01, t_end=10.0, sample_every=200),
            sink=lambda st: drifts.append(abs(energy(st) - e0)),
        )
        assert out.outcome == "Completed"
        assert max(drifts) < 1e-10 * abs(e0)

    def test_supercritical_focusing_blows_up(self, gs1_coarse):
        u0 = 1.3 * gs1_coarse.phi
        shift = float(u0.values.real.mean())
        u0 = Field(u0.grid, u0.values.real - shift)
        s = to_v(u0, zero_field(u0.grid), FOCUSING)
        out = evolve(s, StepperConfig(dt=2e-3, t_end=15.0, sample_every=20))
        assert out.outcome == "BlowupDetected"
        assert out.state.t < 15.0
        assert np.all(np.isfinite(out.state.v.values.view(np.float64)))

    def test_mean_invariants(self, grid_2pi):
        x = grid_2pi.axes[0]
        u0 = Field(grid_2pi, np.cos(x) + 0.3)
        u1 = Field(grid_2pi, 0.2 * np.sin(x))
        s = to_v(u0, u1, DEFOCUSING)
        means = []
        evolve(
            s,
            StepperConfig(dt=5e-3, t_end=2.0, sample_every=50),
            sink=lambda st: means.append(
                (st.v.values.real.mean(), np.abs(from_v(st)[1].values.real.mean()))
            ),
        )
        u_means = np.array([m[0] for m in means])
        ut_means = np.array([m[1] for m in means])
        assert np.max(np.abs(u_means - 0.3)) < 1e-10
        assert np.max(ut_means) < 1e-10

    def test_quadratic_mode_conserves_its_energy(self, grid_2pi):
        x = grid_2pi.axes[0]
        params = ModelParams(2.0, 1, "quadratic")
        s = to_v(Field(grid_2pi, 0.4 * np.cos(x)), zero_field(grid_2pi), params)
        e0 = energy(s)
        drifts = []
        evolve(
            s,
            StepperConfig(dt=2e-3, t_end=5.0, sample_every=500),
            sink=lambda st: drifts.append(abs(energy(st) - e0)),
        )
        assert max(drifts) < 1e-9 * abs(e0)


class TestSupportAndWrap:
    def test_spectral_support_of_single_mode(self, grid_2pi):
        x = grid_2pi.axes[0]
        assert spectral_support(Field(grid_2pi, np.cos(5 * x))) == pytest.approx(5.0)

    def test_wrap_time_scales_with_box(self):
        g1 = make_grid(1, [256], [100.0])
        g2 = make_grid(1, [512], [200.0])
        assert wrap_around_time(g2, 2.0) == pytest.approx(
            2 * wrap_around_time(g1, 2.0)
        )


class TestCheckpoint:
    def test_bit_exact_round_trip(self, tmp_path, grid_2pi):
        rng = np.random.default_rng(7)
        u0 = random_band_limited(grid_2pi, rng, band=30)
        u1 = random_band_limited(grid_2pi, rng, band=30)
        s = to_v(u0, u1, FOCUSING)
        s = State(3.75, s.v, s.params)
        path = tmp_path / "state.gbq"
        write_checkpoint(path, s)
        s2 = read_checkpoint(path)
        assert s2.t == s.t
        assert s2.params == s.params
        assert np.array_equal(s2.v.values, s.v.values)
        path2 = tmp_path / "state2.gbq"
        write_checkpoint(path2, s2)
        assert path.read_bytes() == path2.read_bytes()

    def test_rejects_bad_magic(self, tmp_path):
        path = tmp_path / "junk.gbq"
        path.write_bytes(b"NOPE" + b"\x00" * 64)
        with pytest.raises(ValueError):
            read_checkpoint(path)
