import numpy as np
import pytest
from scipy.stats import norm

from spinmetro import frequentist as fr
from spinmetro import measurement as ms
from spinmetro import spincore as sc
from spinmetro import states as st


class TestResponseCurve:
    def test_css_sine_response(self):
        n = 16
        curve = fr.response_curve(st.css(n), ms.basis_jy(n),
                                  np.linspace(-np.pi / 2, np.pi / 2, 401))
        assert np.max(np.abs(curve.mean - n / 2 * np.sin(curve.phi_grid))) < 1e-10
        lo, hi = curve.monotone_interval
        assert lo == pytest.approx(-np.pi / 2) and hi == pytest.approx(np.pi / 2)

    def test_ghz_parity_response(self):
        n = 8
        curve = fr.response_curve(st.ghz(n), ms.basis_parity(n, "x"),
                                  np.linspace(-0.3, 0.3, 301))
        assert np.max(np.abs(curve.mean - np.cos(n * curve.phi_grid))) < 1e-10

    def test_single_point_variance(self):
        curve = fr.response_curve(st.css(4), ms.basis_jy(4), np.array([0.2]))
        assert curve.var[0] >= 0


class TestSme:
    def _curve(self, n=16):
        return fr.response_curve(st.css(n), ms.basis_jy(n),
                                 np.linspace(-np.pi / 2, np.pi / 2, 2001))

    def test_arcsine_inversion(self):
        est = fr.sme(np.array([4.0]), self._curve())
        assert est.phi == pytest.approx(np.arcsin(0.5), abs=1e-5)
        assert not est.railed

    def test_zero_mean(self):
        est = fr.sme(np.array([1.0, -1.0]), self._curve())
        assert est.phi == pytest.approx(0.0, abs=1e-12)

    def test_railed(self):
        est = fr.sme(np.array([8.0]), self._curve())
        assert est.railed and est.phi == pytest.approx(np.pi / 2, abs=1e-6)


class TestSmeVariance:
    def test_css_sql(self):
        n = 16
        assert fr.sme_variance(st.css(n), ms.basis_jy(n), 0.0) == \
            pytest.approx(1 / n, rel=1e-6)

    def test_ghz_hl(self):
        n = 16
        v = fr.sme_variance(st.ghz(n), ms.basis_parity(n, "x"),
                            np.pi / (4 * n))
        assert v == pytest.approx(1 / n ** 2, rel=1e-6)

    def test_sss_phase_dependence(self):
        n = 8
        s = st.sss_ground(st.SqueezingParentParams(n, 0.5))
        jx = sc.collective_op(n, "jx")
        jy = sc.collective_op(n, "jy")
        vy, vx = sc.variance(s, jy), sc.variance(s, jx)
        mx = sc.expectation(s, jx)
        for phi in (0.0, 0.33, 0.8):
            pred = (np.cos(phi) ** 2 * vy + np.sin(phi) ** 2 * vx) / (
                np.cos(phi) ** 2 * mx ** 2)
            assert fr.sme_variance(s, ms.basis_jy(n), phi) == \
                pytest.approx(pred, rel=1e-6)

    def test_divergence_at_extremum(self):
        n = 4
        assert fr.sme_variance(st.css(n), ms.basis_jy(n), np.pi / 2) == \
            np.inf


class TestMle:
    def test_single_atom_seven_of_ten(self):
        outcomes = np.array([0.5] * 7 + [-0.5] * 3)
        est = fr.mle(outcomes, st.css(1), ms.basis_jy(1),
                     (-np.pi / 2, np.pi / 2))
        assert est.phi == pytest.approx(np.arcsin(0.4), abs=1e-6)
        assert not est.ambiguous

    def test_point_mass(self):
        n = 4
        b = ms.basis_jy(n)
        s = sc.DickeVector(n, b.vectors[:, 1])
        # all outcomes equal the eigenvalue of the prepared eigenvector
        outcomes = np.full(5, b.outcomes[1])
        est = fr.mle(outcomes, s, b, (-0.5, 0.5))
        assert est.phi == pytest.approx(0.0, abs=1e-3)

    def test_asymptotic_normality(self):
        n = 4
        s, b = st.css(n), ms.basis_jy(n)
        phi0, r, trials = 0.2, 1000, 1500
        cfg = fr.EstimationExperiment(s, b, "mle", np.array([phi0]), r,
                                      trials, 99,
                                      search_interval=(-np.pi / 2, np.pi / 2))
        f = fr.fisher_information(s, b, phi0)
        from spinmetro.experiments import _collect_estimates

        ests = _collect_estimates(cfg)
        grid = np.sort(ests)
        emp = np.arange(1, trials + 1) / trials
        model = norm.cdf(grid, loc=phi0, scale=1 / np.sqrt(r * f))
        assert np.max(np.abs(emp - model)) <= 0.05


class TestFisherInformation:
    def test_css_sql_everywhere(self):
        n = 16
        for phi in (-1.2, 0.0, 0.7):
            assert fr.fisher_information(st.css(n), ms.basis_jy(n), phi) == \
                pytest.approx(n, rel=1e-6)

    def test_ghz_parity(self):
        n = 8
        # two-outcome analytic: F = N^2 away from degeneracies
        assert fr.fisher_information(st.ghz(n), ms.basis_parity(n, "x"),
                                     0.09) == pytest.approx(n ** 2, rel=1e-6)

    def test_eigenstate_zero(self):
        n = 6
        s = sc.DickeVector(n, np.eye(n + 1)[1])
        assert fr.fisher_information(s, ms.basis_jz(n), 0.3) < 1e-10

    def test_grouping_invariance(self):
        n = 6
        s = st.ghz(n)
        grouped = fr.fisher_information(s, ms.basis_parity(n, "x"), 0.11)
        # same projectors with unique outcome labels, then merged by hand
        vecs, outs = ms._parity_x_vectors(n)
        relabeled = ms.MeasurementBasis(n, vecs, outs)
        assert fr.fisher_information(s, relabeled, 0.11) == \
            pytest.approx(grouped, abs=1e-8)


class TestWineland:
    def test_css_unity(self):
        assert fr.wineland_xi2(st.css(10)) == pytest.approx(1.0, abs=1e-10)

    def test_extreme_bound(self):
        # ratio ~ 3e-5 sits between the eigenvector-roundoff floor (smaller
        # ratios) and the O(ratio^2) physics correction (larger ratios)
        n = 8
        s = st.sss_ground(st.SqueezingParentParams(n, 3e-5))
        assert fr.wineland_xi2(s) == pytest.approx(2 / (n + 2), abs=1e-6)

    def test_ghz_undefined(self):
        assert np.isnan(fr.wineland_xi2(st.ghz(6)))

    def test_entanglement_flag(self):
        s = st.sss_ground(st.SqueezingParentParams(8, 0.5))
        assert fr.is_entangled_by_xi2(fr.wineland_xi2(s))
        assert not fr.is_entangled_by_xi2(fr.wineland_xi2(st.css(8)))

    def test_frame_alignment(self):
        # xi^2 is frame independent: rotate a squeezed state arbitrarily
        s = st.sss_ground(st.SqueezingParentParams(8, 0.7))
        rotated = sc.rotate(sc.rotate(s, "z", 0.9), "y", -0.4)
        assert fr.wineland_xi2(rotated) == pytest.approx(
            fr.wineland_xi2(s), rel=1e-8)


class TestRunExperiment:
    def test_css_sql_mse(self):
        n = 16
        cfg = fr.EstimationExperiment(st.css(n), ms.basis_jy(n), "sme",
                                      np.array([0.0]), 100, 10000, 12,
                                      search_interval=(-np.pi / 2, np.pi / 2))
        stats = fr.run_experiment(cfg)
        assert stats.mse[0] == pytest.approx(1 / (100 * n), rel=0.10)

    def test_ghz_hl_mse(self):
        n = 16
        cfg = fr.EstimationExperiment(st.ghz(n), ms.basis_parity(n, "x"),
                                      "sme", np.array([np.pi / (4 * n)]),
                                      100, 10000, 13,
                                      search_interval=(0.0, np.pi / n))
        stats = fr.run_experiment(cfg)
        assert stats.mse[0] == pytest.approx(1 / (100 * n ** 2), rel=0.15)

    def test_error_decomposition_identity(self):
        n = 8
        cfg = fr.EstimationExperiment(st.css(n), ms.basis_jy(n), "sme",
                                      np.linspace(-1.0, 1.0, 5), 10, 400, 3,
                                      search_interval=(-np.pi / 2, np.pi / 2))
        stats = fr.run_experiment(cfg)
        assert np.max(np.abs(stats.mse - stats.bias ** 2 - stats.variance)) \
            < 1e-10

    def test_single_shot_eigenstate_dip(self):
        # near phi = pi/2 the CSS is an eigenstate: single-shot error falls
        # below the CRB as the estimator rails
        n = 16
        phi = np.pi / 2 - 0.02
        cfg = fr.EstimationExperiment(st.css(n), ms.basis_jy(n), "sme",
                                      np.array([phi]), 1, 4000, 5,
                                      search_interval=(-np.pi / 2, np.pi / 2))
        stats = fr.run_experiment(cfg)
        crb = 1.0 / fr.fisher_information(st.css(n), ms.basis_jy(n), phi)
        assert stats.mse[0] < crb
        assert stats.railed_fraction[0] > 0.2

    def test_crb_respected_when_unbiased(self):
        n = 8
        phis = np.linspace(-0.8, 0.8, 5)
        cfg = fr.EstimationExperiment(st.css(n), ms.basis_jy(n), "sme",
                                      phis, 50, 2000, 8,
                                      search_interval=(-np.pi / 2, np.pi / 2))
        stats = fr.run_experiment(cfg)
        f = fr.fisher_information(st.css(n), ms.basis_jy(n), 0.0)
        for i in range(phis.size):
            if abs(stats.bias[i]) < 0.1 * np.sqrt(stats.variance[i]):
                assert 50 * stats.mse[i] >= 0.9 / f

    def test_seed_reproducible(self):
        n = 6
        cfg = fr.EstimationExperiment(st.css(n), ms.basis_jy(n), "sme",
                                      np.array([0.1]), 5, 100, 77,
                                      search_interval=(-np.pi / 2, np.pi / 2))
        a = fr.run_experiment(cfg)
        b = fr.run_experiment(cfg)
        assert a.mse[0] == b.mse[0]
