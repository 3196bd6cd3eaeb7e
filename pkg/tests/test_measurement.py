import numpy as np
import pytest
from hypothesis import given, settings, strategies as sts

from spinmetro import measurement as ms
from spinmetro import spincore as sc
from spinmetro import states as st


def random_state(n, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
    return sc.DickeVector.from_amplitudes(v)


class TestJyBasis:
    def test_eigenvectors(self):
        n = 10
        b = ms.basis_jy(n)
        jy = sc.collective_op(n, "jy").matrix
        assert np.max(np.abs(jy @ b.vectors - b.vectors * sc.m_values(n))) < 1e-10

    def test_css_moments(self):
        n = 16
        b = ms.basis_jy(n)
        d0 = ms.outcome_distribution(st.css(n), b, 0.0)
        assert d0.mean() == pytest.approx(0.0, abs=1e-10)
        assert d0.variance() == pytest.approx(n / 4, abs=1e-10)
        d = ms.outcome_distribution(st.css(n), b, 0.31)
        assert d.mean() == pytest.approx(n / 2 * np.sin(0.31), abs=1e-10)


class TestParity:
    def test_ghz_cosine(self):
        n = 16
        b = ms.basis_parity(n, "x")
        g = st.ghz(n)
        for phi in np.linspace(-np.pi / 8, np.pi / 8, 1001):
            d = ms.outcome_distribution(g, b, phi)
            assert abs(d.mean() - np.cos(n * phi)) < 1e-10

    def test_css_cosine_power(self):
        n = 10
        b = ms.basis_parity(n, "x")
        d = ms.outcome_distribution(st.css(n), b, 0.23)
        assert d.mean() == pytest.approx(np.cos(0.23) ** n, abs=1e-10)

    def test_outcome_set_and_ranks(self):
        for n in (5, 8):
            for quad in ("x", "plus", "minus"):
                b = ms.basis_parity(n, quad)
                assert set(np.unique(b.outcomes)) == {-1.0, 1.0}
                plus_rank = int(np.sum(b.outcomes > 0))
                assert plus_rank == int(np.ceil((n + 1) / 2))
                assert int(np.sum(b.outcomes < 0)) == (n + 1) // 2

    def test_plus_minus_match_tensor_operator(self):
        # two-atom oracle: Pi_+- = ((sx +- sy)/sqrt2) x ((sx +- sy)/sqrt2)
        n = 2
        for sign, quad in ((1, "plus"), (-1, "minus")):
            single = (sc.PAULI["x"] + sign * sc.PAULI["y"]) / np.sqrt(2)
            full = np.kron(single, single)
            b = ms.basis_parity(n, quad)
            for seed in range(4):
                s = random_state(n, seed)
                d = ms.outcome_distribution(s, b, 0.4)
                fv = sc.embed_full(sc.rotate(s, "z", 0.4))
                expect = np.vdot(fv.amps, full @ fv.amps).real
                assert d.mean() == pytest.approx(expect, abs=1e-10)

    def test_parity_quadrature_response(self):
        for n in (1, 2, 4):
            g = st.ghz(n)
            for sign in (+1, -1):
                b = ms.basis_parity_quadrature(n, sign)
                for phi in (0.0, 0.07):
                    d = ms.outcome_distribution(g, b, phi)
                    assert d.mean() == pytest.approx(
                        np.cos(n * phi - sign * np.pi / 4), abs=1e-10)


class TestPhaseOperator:
    def test_orthonormal(self):
        b = ms.basis_phase_op(8)
        gram = b.vectors.conj().T @ b.vectors
        assert np.max(np.abs(gram - np.eye(9))) < 1e-12

    def test_sine_state_peaks_at_zero(self):
        n = 16
        b = ms.basis_phase_op(n)
        d = ms.outcome_distribution(st.sine_state(n), b, 0.0)
        assert d.outcomes[np.argmax(d.probs)] == pytest.approx(0.0, abs=1e-12)

    def test_outcome_span(self):
        b = ms.basis_phase_op(11)
        assert b.outcomes.min() > -np.pi - 1e-12
        assert b.outcomes.max() <= np.pi + 1e-12
        assert b.outcomes.size == 12


class TestDecoder:
    def test_identity_is_jz(self):
        n = 5
        b = ms.basis_decoder(n, np.eye(n + 1), sc.m_values(n))
        d = ms.outcome_distribution(st.css(n), b, 0.0)
        ref = ms.outcome_distribution(st.css(n), ms.basis_jz(n), 0.0)
        assert np.allclose(d.probs, ref.probs, atol=1e-12)

    def test_rotation_reproduces_jy(self):
        n = 6
        u = sc.rotation_matrix(n, "x", -np.pi / 2)
        b = ms.basis_decoder(n, u, sc.m_values(n))
        s = random_state(n, 2)
        for phi in (0.0, 0.4):
            d1 = ms.outcome_distribution(s, b, phi)
            d2 = ms.outcome_distribution(s, ms.basis_jy(n), phi)
            assert np.allclose(d1.probs, d2.probs, atol=1e-10)

    def test_non_unitary_rejected(self):
        with pytest.raises(ValueError):
            ms.basis_decoder(2, np.ones((3, 3)), np.arange(3))


class TestDistributionAndSampling:
    @settings(max_examples=100, deadline=None)
    @given(sts.integers(1, 8), sts.integers(0, 10 ** 6),
           sts.floats(-6, 6, allow_nan=False),
           sts.sampled_from(["jy", "parity_x", "phase_op"]))
    def test_probability_sums(self, n, seed, phi, kind):
        s = random_state(n, seed)
        basis = {"jy": ms.basis_jy, "parity_x":
                 lambda m: ms.basis_parity(m, "x"),
                 "phase_op": ms.basis_phase_op}[kind](n)
        d = ms.outcome_distribution(s, basis, phi)
        assert abs(d.probs.sum() - 1.0) < 1e-10

    def test_phase_covariance(self):
        n = 6
        s = random_state(n, 9)
        b = ms.basis_jy(n)
        d1 = ms.outcome_distribution(s, b, 0.3 + 0.5)
        d2 = ms.outcome_distribution(sc.rotate(s, "z", 0.3), b, 0.5)
        assert np.max(np.abs(d1.probs - d2.probs)) < 1e-12

    def test_point_mass_state(self):
        n = 5
        b = ms.basis_jy(n)
        s = sc.DickeVector(n, b.vectors[:, 2])
        d = ms.outcome_distribution(s, b, 0.0)
        assert d.probs[np.argmin(np.abs(d.outcomes - b.outcomes[2]))] == \
            pytest.approx(1.0, abs=1e-12)

    def test_ghz_parity_balanced_at_node(self):
        n = 8
        d = ms.outcome_distribution(st.ghz(n), ms.basis_parity(n, "x"),
                                    np.pi / (2 * n))
        assert np.allclose(sorted(d.probs), [0.5, 0.5], atol=1e-12)

    def test_single_atom_excitation(self):
        d = ms.outcome_distribution(st.css(1), ms.basis_jy(1), 0.77)
        p_up = d.probs[d.outcomes > 0][0]
        assert p_up == pytest.approx((1 + np.sin(0.77)) / 2, abs=1e-12)

    def test_sample_point_mass(self):
        d = ms.OutcomeDistribution(np.array([2.0]), np.array([1.0]))
        assert np.all(ms.sample(d, 50, 1) == 2.0)

    def test_sample_determinism(self):
        d = ms.OutcomeDistribution(np.array([0.0, 1.0]), np.array([0.3, 0.7]))
        assert np.array_equal(ms.sample(d, 1000, 5), ms.sample(d, 1000, 5))

    def test_sample_frequencies(self):
        probs = np.array([0.15, 0.2, 0.4, 0.25])
        d = ms.OutcomeDistribution(np.arange(4.0), probs)
        r = 100000
        draws = ms.sample(d, r, 123)
        freq = np.array([(draws == v).mean() for v in d.outcomes])
        assert np.max(np.abs(freq - probs)) <= 5 / np.sqrt(r)

    def test_incomplete_basis_flagged(self):
        n = 4
        vecs = np.eye(n + 1)[:, :3]
        bad = ms.MeasurementBasis(n, vecs, np.arange(3.0))
        with pytest.raises(ValueError):
            ms.outcome_distribution(st.css(n), bad, 0.0)
