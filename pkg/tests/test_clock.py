import numpy as np
import pytest

from spinmetro import bayes as by
from spinmetro import clock as ck
from spinmetro import measurement as ms
from spinmetro import states as st

OMEGA0 = 2 * np.pi * 1e6


def css_sensor(n=16):
    return by.SensorDesign(st.css(n), ms.basis_jy(n))


class TestNoiseSynthesis:
    @pytest.mark.parametrize("alpha", [-1, 0, 1])
    def test_psd_slope(self, alpha):
        spec = ck.OscillatorNoiseSpec(alpha, 1e-22, 16.0)
        y = ck.synthesize_noise(spec, 2 ** 17 / 16.0, 42)
        slope, _ = ck.welch_psd_slope(y, 16.0)
        assert slope == pytest.approx(-1 - alpha, abs=0.1)

    def test_amplitude_linearity(self):
        a = ck.OscillatorNoiseSpec(-1, 1e-22, 16.0)
        b = ck.OscillatorNoiseSpec(-1, 2e-22, 16.0)
        _, amp_a = ck.welch_psd_slope(ck.synthesize_noise(a, 4096, 3), 16.0)
        _, amp_b = ck.welch_psd_slope(ck.synthesize_noise(b, 4096, 3), 16.0)
        assert amp_b / amp_a == pytest.approx(2.0, rel=0.05)

    def test_deterministic(self):
        spec = ck.OscillatorNoiseSpec(0, 1e-22, 8.0)
        assert np.array_equal(ck.synthesize_noise(spec, 256, 7),
                              ck.synthesize_noise(spec, 256, 7))

    def test_sample_cap(self):
        spec = ck.OscillatorNoiseSpec(-1, 1e-22, 2.0)
        with pytest.raises(ValueError):
            ck.synthesize_noise(spec, 2 ** 24, 0)


class TestAllanDeviation:
    def test_constant_series(self):
        s = ck.allan_deviation(np.full(4096, 3.3e-9), 1.0)
        assert np.max(s.sigma_y) < 1e-20

    def test_white_fm_law(self):
        h = 1e-22
        spec = ck.OscillatorNoiseSpec(-1, h, 16.0)
        y = ck.synthesize_noise(spec, 2 ** 20 / 16.0, 5)
        s = ck.allan_deviation(y, 1 / 16.0)
        sel = (s.tau >= s.tau[2]) & (s.tau <= s.tau[-3])
        slope = np.polyfit(np.log(s.tau[sel]), np.log(s.sigma_y[sel]), 1)[0]
        assert slope == pytest.approx(-0.5, abs=0.05)
        # PSD-calibrated amplitude: sigma_y^2 = h / (2 tau)
        i = 5
        assert s.sigma_y[i] ** 2 == pytest.approx(h / (2 * s.tau[i]),
                                                  rel=0.10)

    def test_random_walk_law(self):
        h = 1e-24
        spec = ck.OscillatorNoiseSpec(1, h, 16.0)
        y = ck.synthesize_noise(spec, 2 ** 20 / 16.0, 6)
        s = ck.allan_deviation(y, 1 / 16.0)
        sel = (s.tau >= s.tau[2]) & (s.tau <= s.tau[-3])
        slope = np.polyfit(np.log(s.tau[sel]), np.log(s.sigma_y[sel]), 1)[0]
        assert slope == pytest.approx(0.5, abs=0.05)
        i = 6
        assert s.sigma_y[i] ** 2 == pytest.approx(
            (2 * np.pi ** 2 / 3) * h * s.tau[i], rel=0.15)

    def test_insufficient_data(self):
        with pytest.raises(ValueError):
            ck.allan_deviation(np.ones(2), 1.0)


class TestServo:
    def test_linearity_ideal(self):
        # deterministic frequency step, no noise: steady-state residual zero
        spec = ck.OscillatorNoiseSpec(-1, 1e-40, 16.0)
        cfg = ck.ClockConfig(OMEGA0, 1.0, 0.0, 0.5, 400, estimator="ideal",
                             seed=3, initial_offset=2.5e-9)
        rec = ck.run_servo(cfg, spec)
        assert abs(rec.residual_y[-1]) < 1e-12 * 2.5e-9 + 1e-20

    def test_geometric_decay_of_offset(self):
        spec = ck.OscillatorNoiseSpec(-1, 1e-40, 16.0)
        gain = 0.5
        cfg = ck.ClockConfig(OMEGA0, 1.0, 0.0, gain, 60, estimator="ideal",
                             seed=3, initial_offset=1e-9)
        rec = ck.run_servo(cfg, spec)
        ratios = rec.residual_y[1:20] / rec.residual_y[:19]
        assert np.allclose(ratios, 1 - gain, atol=1e-6)

    def test_seed_determinism(self):
        spec = ck.OscillatorNoiseSpec(-1, 1e-18, 16.0)
        cfg = ck.ClockConfig(OMEGA0, 1.0, 0.0, 0.5, 500,
                             sensor=css_sensor(), estimator="sme", seed=11)
        a = ck.run_servo(cfg, spec)
        b = ck.run_servo(cfg, spec)
        assert np.array_equal(a.residual_y, b.residual_y)
        assert np.array_equal(a.phi_estimate, b.phi_estimate)

    def test_instability_matches_prediction(self):
        n = 16
        spec = ck.OscillatorNoiseSpec(-1, 1e-18, 16.0)
        cfg = ck.ClockConfig(OMEGA0, 1.0, 0.0, 0.5, 40000,
                             sensor=css_sensor(n), estimator="sme", seed=77)
        rec = ck.run_servo(cfg, spec)
        assert not rec.slipped
        series = ck.residual_allan(rec)
        pred = ck.instability_prediction(OMEGA0, 1.0, 0.0, 1 / np.sqrt(n),
                                         series.tau)
        # two decades above the servo attack time; longer taus are checked in
        # the acceptance run where the record is 5x longer
        sel = (series.tau >= 10) & (series.tau <= 1100)
        ratio = series.sigma_y[sel] / pred[sel]
        assert np.all((ratio > 0.85) & (ratio < 1.15))

    def test_dead_time_factor(self):
        n = 16
        spec = ck.OscillatorNoiseSpec(-1, 1e-18, 16.0)
        recs = {}
        for td in (0.0, 1.0):
            cfg = ck.ClockConfig(OMEGA0, 1.0, td, 0.5, 30000,
                                 sensor=css_sensor(n), estimator="sme",
                                 seed=78)
            recs[td] = ck.residual_allan(ck.run_servo(cfg, spec))
        tau = 128.0
        i0 = int(np.argmin(np.abs(recs[0.0].tau - tau)))
        i1 = int(np.argmin(np.abs(recs[1.0].tau - tau)))
        ratio = recs[1.0].sigma_y[i1] / recs[0.0].sigma_y[i0]
        assert ratio == pytest.approx(np.sqrt(2.0), rel=0.10)

    def test_locked_does_not_amplify_noise(self):
        spec = ck.OscillatorNoiseSpec(-1, 1e-14, 16.0)
        cfg = ck.ClockConfig(OMEGA0, 1.0, 0.0, 0.5, 8192, estimator="ideal",
                             seed=5)
        rec, noise = ck.run_servo(cfg, spec, return_noise=True)
        locked = ck.residual_allan(rec)
        free = ck.allan_deviation(noise[:8192 * 16], 1 / 16.0)
        # compare at the longest common tau
        t_max = min(locked.tau[-1], free.tau[-1])
        il = int(np.argmin(np.abs(locked.tau - t_max)))
        jf = int(np.argmin(np.abs(free.tau - t_max)))
        assert locked.sigma_y[il] <= free.sigma_y[jf] * 1.05

    def test_mmse_estimator_runs(self):
        spec = ck.OscillatorNoiseSpec(-1, 1e-16, 16.0)
        cfg = ck.ClockConfig(OMEGA0, 1.0, 0.0, 0.5, 2000,
                             sensor=css_sensor(8), estimator="mmse", seed=2)
        rec = ck.run_servo(cfg, spec)
        assert not rec.slipped
        assert np.isfinite(rec.phi_estimate).all()


class TestPriorWidth:
    def test_white_fm_exponent(self):
        spec = ck.OscillatorNoiseSpec(-1, 1e-14, 64.0)
        slope, widths = ck.prior_width_exponent(
            spec, np.geomspace(0.25, 2.5, 5), 0.0, 0.5, cycles=16000,
            omega0=OMEGA0)
        assert slope == pytest.approx(1.0, abs=0.15)
        assert np.all(np.diff(widths) > 0)

    def test_random_walk_exponent(self):
        spec = ck.OscillatorNoiseSpec(1, 1e-19, 64.0)
        slope, widths = ck.prior_width_exponent(
            spec, np.geomspace(0.25, 2.5, 5), 0.0, 0.5, cycles=16000,
            omega0=OMEGA0)
        assert slope == pytest.approx(3.0, abs=0.3)
        assert np.all(np.diff(widths) > 0)

    def test_unlocked_flagged(self):
        spec = ck.OscillatorNoiseSpec(1, 1e-13, 64.0)
        with pytest.raises(RuntimeError):
            ck.stationary_prior_width(spec, 2.0, 0.0, 0.5, cycles=4000,
                                      omega0=OMEGA0)


class TestCoherenceTime:
    def test_root_condition(self):
        spec = ck.OscillatorNoiseSpec(-1, 1e-14, 16.0)
        tc = ck.lo_coherence_time(spec, 1e6, 1.0, duration=2 ** 18 / 16.0)
        y = ck.synthesize_noise(spec, 2 ** 18 / 16.0, 12345)
        series = ck.allan_deviation(y, 1 / 16.0)
        sig = np.exp(np.interp(np.log(tc), np.log(series.tau),
                               np.log(series.sigma_y)))
        assert sig * 2 * np.pi * 1e6 * (1.0 + tc) == pytest.approx(1.0,
                                                                   rel=0.02)
