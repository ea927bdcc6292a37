import numpy as np
import pytest

from gemsim import ConfigError, PulseSpec, run_gem, output_energy
from gemsim.core import make_plane_wave_mode
from gemsim.metrics import efficiency_analytic, efficiency_numeric, shifted_output
from gemsim.solver import cumulative_simpson

from conftest import balance_residual, small_config, small_pulse


class TestCumulativeSimpson:
    def test_polynomial_exact(self):
        x = np.linspace(0.0, 2.0, 41)
        f = 3.0 * x**2 - 2.0 * x + 1.0
        exact = x**3 - x**2 + x
        np.testing.assert_allclose(cumulative_simpson(f, x[1] - x[0]), exact, atol=1e-12)

    def test_oscillatory_accuracy_beats_trapezoid(self):
        x = np.linspace(0.0, 10.0, 2001)
        dx = x[1] - x[0]
        k = 0.8 / dx
        f = np.exp(1j * k * x)
        exact = (np.exp(1j * k * x) - 1.0) / (1j * k)
        err = np.max(np.abs(cumulative_simpson(f, dx) - exact)) * k
        inc = np.empty_like(f)
        inc[0] = 0.0
        inc[1:] = 0.5 * dx * (f[1:] + f[:-1])
        err_trap = np.max(np.abs(np.cumsum(inc) - exact)) * k
        assert err < 0.025
        assert err < err_trap / 3.0


class TestRunGem:
    def test_no_coupling_passes_input_through(self):
        cfg = small_config(beta=1.0)
        # g -> tiny emulates the decoupled limit within the beta > 0 invariant
        cfg = type(cfg)(g=1e-12, linear_density=cfg.linear_density, gamma=0.0,
                        stark=cfg.stark, grid=cfg.grid)
        rec = run_gem(cfg, small_pulse())
        np.testing.assert_allclose(rec.output_series, rec.input_series,
                                   rtol=0, atol=1e-10)
        assert np.max(np.abs(rec.polarisation)) < 1e-10

    def test_deterministic_reruns(self):
        cfg = small_config()
        a = run_gem(cfg, small_pulse())
        b = run_gem(cfg, small_pulse())
        assert np.array_equal(a.output_series, b.output_series)
        assert np.array_equal(a.e_field, b.e_field)

    def test_linearity_in_the_input(self):
        cfg = small_config()
        c = 0.7 - 1.3j
        base = run_gem(cfg, small_pulse())
        scaled = run_gem(cfg, small_pulse().scaled(c))
        np.testing.assert_allclose(scaled.output_series, c * base.output_series,
                                   rtol=1e-12, atol=1e-14)

    def test_superposition(self):
        cfg = small_config(switch=20.0, t_max=50.0, nt=2001, nz=160)
        u1 = make_plane_wave_mode(0, 6.0, 10.0)
        u2 = make_plane_wave_mode(1, 6.0, 10.0)
        r1 = run_gem(cfg, u1)
        r2 = run_gem(cfg, u2)
        mix = PulseSpec(kind="plane_wave_window", mode_index=0, window=(6.0, 10.0))
        out_sum = 0.6 * r1.output_series + 0.8j * r2.output_series
        ein = 0.6 * r1.input_series + 0.8j * r2.input_series
        # run the superposed input through a custom callable is not part of
        # the API; linearity is asserted via the two scaled runs instead
        rs1 = run_gem(cfg, u1.scaled(0.6))
        rs2 = run_gem(cfg, u2.scaled(0.8j))
        np.testing.assert_allclose(rs1.output_series + rs2.output_series, out_sum,
                                   rtol=1e-12, atol=1e-14)
        np.testing.assert_allclose(rs1.input_series + rs2.input_series, ein,
                                   rtol=1e-12, atol=1e-14)

    def test_efficiency_against_analytic_small_grid(self):
        for beta in (0.25, 1.0):
            cfg = small_config(beta=beta)
            rec = run_gem(cfg, small_pulse(), store_fields=False)
            sig = efficiency_numeric(rec, (0.0, 10.0), (15.0, 40.0))
            assert sig == pytest.approx(efficiency_analytic(beta), abs=0.02)

    def test_echo_time_follows_switch(self):
        cfg = small_config(beta=1.0, switch=15.0)
        rec = run_gem(cfg, small_pulse(center=4.0), store_fields=False)
        assert rec.echo_peak_time() == pytest.approx(26.0, abs=0.3)

    def test_excitation_balance(self):
        rec = run_gem(small_config(beta=1.0), small_pulse())
        assert balance_residual(rec) < 0.01

    def test_alpha_norm_conserved_during_storage(self):
        rec = run_gem(small_config(beta=1.0), small_pulse())
        t = rec.times
        window = (t > 10.0) & (t < 14.0)  # input gone, echo not yet
        a = rec.alpha_norm_series[window]
        assert np.ptp(a) / np.max(a) < 1e-3

    def test_gamma_decay_rate(self):
        gamma = 0.2
        rec = run_gem(small_config(beta=1.0, gamma=gamma, switch=35.0),
                      small_pulse(), store_fields=False)
        t = rec.times
        m0 = np.argmin(np.abs(t - 10.0))
        m1 = np.argmin(np.abs(t - 30.0))
        ratio = rec.alpha_norm_series[m1] / rec.alpha_norm_series[m0]
        assert ratio == pytest.approx(np.exp(-gamma * 20.0), rel=0.01)

    def test_maxwell_relation_rows(self):
        rec = run_gem(small_config(beta=1.0), small_pulse(), field_stride=100)
        dz = rec.grid.dz
        for i, tv in enumerate(rec.field_times):
            j = np.argmin(np.abs(rec.times - tv))
            expect = rec.input_series[j] + 1j * rec.linear_density * cumulative_simpson(
                rec.polarisation[i], dz)
            np.testing.assert_allclose(rec.e_field[i], expect, rtol=0, atol=1e-12)

    def test_carrier_gauge_equivalence(self):
        cfg = small_config(beta=1.0, switch=20.0, t_max=50.0, nt=4001, nz=160)
        mode = make_plane_wave_mode(2, 6.0, 10.0)
        omega = 2.0 * np.pi * 2 / 4.0
        plain = run_gem(cfg, mode, store_fields=False)
        gauged = run_gem(cfg, mode, store_fields=False, carrier=omega)
        np.testing.assert_allclose(gauged.input_series, plain.input_series,
                                   rtol=0, atol=1e-12)
        scale = np.max(np.abs(plain.output_series))
        np.testing.assert_allclose(gauged.output_series / scale,
                                   plain.output_series / scale,
                                   rtol=0, atol=5e-4)

    def test_delta_offset_equals_gauge_shift(self):
        # the in-profile offset and the post-hoc phase are the same dynamics
        # in two discretizations; they agree to O((delta*dt)^2) per step
        delta = 0.8
        base = run_gem(small_config(beta=1.0), small_pulse(), store_fields=False)
        offset = run_gem(small_config(beta=1.0, delta_offset=delta), small_pulse(),
                         store_fields=False)
        scale = np.max(np.abs(base.output_series))
        np.testing.assert_allclose(offset.output_series / scale,
                                   shifted_output(base, delta) / scale,
                                   rtol=0, atol=1e-3)

    def test_time_step_guard(self):
        with pytest.raises(ConfigError, match="exchange"):
            run_gem(small_config(beta=200.0, nz=4096), small_pulse())

    def test_records_are_readonly(self):
        rec = run_gem(small_config(), small_pulse())
        with pytest.raises(ValueError):
            rec.output_series[0] = 0.0


class TestConvergence:
    def test_refining_grid_changes_echo_energy_little(self):
        cfg = small_config(beta=1.0)
        coarse = run_gem(cfg, small_pulse(), store_fields=False)
        fine = run_gem(small_config(beta=1.0, nt=3201, nz=256), small_pulse(),
                       store_fields=False)
        e0 = output_energy(coarse, (15.0, 40.0))
        e1 = output_energy(fine, (15.0, 40.0))
        assert abs(e1 - e0) / e1 < 0.005


class TestOutputEnergy:
    def test_zero_field(self):
        cfg = small_config()
        rec = run_gem(cfg, small_pulse(), store_fields=False)
        # before the pulse arrives the output is essentially dark
        assert output_energy(rec, (30.0, 40.0)) > 0.0
        with pytest.raises(ValueError):
            output_energy(rec, (10.0, 5.0))
        with pytest.raises(ValueError):
            output_energy(rec, (-1.0, 5.0))

    def test_unit_pulse_normalization(self):
        cfg = small_config(switch=20.0, t_max=50.0, nt=2001, nz=160)
        rec = run_gem(cfg, make_plane_wave_mode(0, 6.0, 10.0), store_fields=False)
        e_in = np.trapezoid(np.abs(rec.input_series) ** 2, dx=rec.grid.dt)
        assert e_in == pytest.approx(1.0, abs=0.01)
