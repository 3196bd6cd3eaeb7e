import numpy as np
import pytest

from spinmetro import bounds as bd
from spinmetro import measurement as ms
from spinmetro import spincore as sc
from spinmetro import states as st
from spinmetro.frequentist import fisher_information


def random_density(dim, rank, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = v @ v.conj().T
    return rho / np.trace(rho).real


def random_pure(n, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
    return sc.DickeVector.from_amplitudes(v)


class TestQfiPure:
    def test_ghz(self):
        n = 8
        assert bd.qfi_pure(st.ghz(n), sc.collective_op(n, "jz")) == \
            pytest.approx(n ** 2, abs=1e-10)

    def test_css(self):
        n = 12
        assert bd.qfi_pure(st.css(n), sc.collective_op(n, "jz")) == \
            pytest.approx(n, abs=1e-10)

    def test_rotated_dicke_zero(self):
        # <Jy^2> in |M=0> equals j(j+1)/2, so QFI = 2 j (j+1) = N(N+2)/2
        n = 8
        d0 = sc.DickeVector(n, np.eye(n + 1)[n // 2])
        s = sc.rotate(d0, "x", -np.pi / 2)
        assert bd.qfi_pure(s, sc.collective_op(n, "jz")) == \
            pytest.approx(n * (n + 2) / 2, abs=1e-10)


class TestSld:
    def test_pure_state_residual(self):
        n = 5
        s = random_pure(n, 3)
        rho = bd.SpectralDensity.from_pure(s)
        g = sc.collective_op(n, "jz").matrix
        l0 = bd.sld(rho, g)
        mat = rho.matrix()
        lhs = -1j * (g @ mat - mat @ g)
        rhs = 0.5 * (l0 @ mat + mat @ l0)
        assert np.max(np.abs(lhs - rhs)) < 1e-8

    def test_maximally_mixed(self):
        dim = 6
        rho = bd.SpectralDensity.from_density(np.eye(dim) / dim)
        l0 = bd.sld(rho, np.diag(np.arange(dim, dtype=float)))
        assert np.max(np.abs(l0)) < 1e-10

    def test_trace_formula_matches_qfi(self):
        n = 4
        rho_mat = random_density(n + 1, 3, 7)
        rho = bd.SpectralDensity.from_density(rho_mat)
        g = sc.collective_op(n, "jz")
        l0 = bd.sld(rho, g)
        q_trace = np.trace(rho.matrix() @ l0 @ l0).real
        assert bd.qfi_mixed(rho, g) == pytest.approx(q_trace, abs=1e-8)

    def test_residual_on_support(self):
        n = 4
        rho = bd.SpectralDensity.from_density(random_density(n + 1, 2, 11))
        g = sc.collective_op(n, "jz").matrix
        l0 = bd.sld(rho, g)
        mat = rho.matrix()
        resid = -1j * (g @ mat - mat @ g) - 0.5 * (l0 @ mat + mat @ l0)
        # project onto the support
        keep = rho.probs > 1e-12
        proj = rho.states[:, keep] @ rho.states[:, keep].conj().T
        assert np.max(np.abs(proj @ resid @ proj)) < 1e-8


class TestQfiMixed:
    def test_pure_limit(self):
        n = 6
        s = random_pure(n, 1)
        rho = bd.SpectralDensity.from_pure(s)
        g = sc.collective_op(n, "jz")
        assert bd.qfi_mixed(rho, g) == pytest.approx(bd.qfi_pure(s, g),
                                                     abs=1e-10)

    def test_maximally_mixed_zero(self):
        rho = bd.SpectralDensity.from_density(np.eye(5) / 5)
        assert bd.qfi_mixed(rho, sc.collective_op(4, "jz")) == \
            pytest.approx(0.0, abs=1e-10)

    def test_convex_upper_bound(self):
        g = sc.collective_op(4, "jz")
        for seed in range(100):
            rho = bd.SpectralDensity.from_density(random_density(5, 3, seed))
            q = bd.qfi_mixed(rho, g)
            gv = g.matrix @ rho.states
            g2 = np.einsum("ik,ik->k", rho.states.conj(),
                           g.matrix @ gv).real
            g1 = np.einsum("ik,ik->k", rho.states.conj(), gv).real
            convex = np.sum(4 * rho.probs * (g2 - g1 ** 2))
            assert q <= convex + 1e-10

    def test_phase_invariance(self):
        n = 5
        rho_mat = random_density(n + 1, 2, 21)
        g = sc.collective_op(n, "jz")
        q0 = bd.qfi_mixed(bd.SpectralDensity.from_density(rho_mat), g)
        ph = np.exp(-1j * 0.63 * sc.m_values(n))
        rot = ph[:, None] * rho_mat * ph.conj()[None, :]
        q1 = bd.qfi_mixed(bd.SpectralDensity.from_density(rot), g)
        assert abs(q0 - q1) < 1e-10

    def test_cutoff_stability(self):
        n = 4
        rho_mat = random_density(n + 1, 3, 5)
        g = sc.collective_op(n, "jz")
        qs = [bd.qfi_mixed(bd.SpectralDensity.from_density(rho_mat, cut), g)
              for cut in (1e-10, 1e-12, 1e-14)]
        assert max(qs) - min(qs) < 1e-8


class TestQcrbMeasurement:
    @pytest.mark.parametrize("maker,expected", [
        (lambda n: st.ghz(n), lambda n: n ** 2),
        (lambda n: st.css(n), lambda n: n),
    ])
    def test_pure_saturation(self, maker, expected):
        n = 6
        s = maker(n)
        basis = bd.qcrb_measurement(bd.SpectralDensity.from_pure(s),
                                    sc.collective_op(n, "jz"))
        f = fisher_information(s, basis, 0.0)
        assert f == pytest.approx(expected(n), rel=1e-6)

    def test_decayed_sss_saturation(self):
        from spinmetro import decoherence as dec

        n = 6
        s = st.sss_ground(st.SqueezingParentParams(n, 0.5))
        blk = dec.damp_blocks(s, dec.DecayParams(0.1))
        rho_full = dec.full_from_block(blk).matrix
        g = sc.full_collective(n, "z")
        rho = bd.SpectralDensity.from_density(rho_full)
        q = bd.qfi_mixed(rho, g)
        basis = bd.qcrb_measurement(rho, g)
        f = fisher_information(rho_full, basis, 0.0)
        assert f == pytest.approx(q, rel=1e-6)


class TestEntanglementDepth:
    def test_sql_depth_one(self):
        assert bd.entanglement_depth(8.0, 8) == 1

    def test_hl_full_depth(self):
        assert bd.entanglement_depth(64.0, 8) == 8

    def test_enumerated_table(self):
        # independent enumeration for N = 4
        n = 4
        bounds = {k: (n // k) * k ** 2 + (n - k * (n // k)) ** 2
                  for k in range(1, 5)}
        assert bounds == {1: 4, 2: 8, 3: 10, 4: 16}
        assert bd.entanglement_depth(10.0, 4) == 3
        assert bd.entanglement_depth(8.5, 4) == 3
        assert bd.entanglement_depth(8.0, 4) == 2

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            bd.entanglement_depth(70.0, 8)


class TestCrossModuleInequalities:
    def test_fi_below_qfi_random(self):
        rng = np.random.default_rng(0)
        n = 5
        g = sc.collective_op(n, "jz")
        for case in range(100):
            s = random_pure(n, 1000 + case)
            u, _ = np.linalg.qr(rng.normal(size=(n + 1, n + 1))
                                + 1j * rng.normal(size=(n + 1, n + 1)))
            basis = ms.basis_decoder(n, u, np.arange(n + 1, dtype=float))
            phi = rng.uniform(-2, 2)
            f = fisher_information(s, basis, phi)
            q = bd.qfi_pure(s, g)
            assert f <= q + 1e-8

    def test_additivity_product_states(self):
        rng = np.random.default_rng(4)
        for na, nb in ((2, 2), (3, 2), (4, 4)):
            rho_a = random_density(2 ** na, 2, rng.integers(1 << 30))
            rho_b = random_density(2 ** nb, 2, rng.integers(1 << 30))
            ga = sc.full_collective(na, "z")
            gb = sc.full_collective(nb, "z")
            gab = np.kron(ga, np.eye(2 ** nb)) + np.kron(np.eye(2 ** na), gb)
            qa = bd.qfi_mixed(bd.SpectralDensity.from_density(rho_a), ga)
            qb = bd.qfi_mixed(bd.SpectralDensity.from_density(rho_b), gb)
            qab = bd.qfi_mixed(
                bd.SpectralDensity.from_density(np.kron(rho_a, rho_b)), gab)
            assert qab == pytest.approx(qa + qb, abs=1e-8)

    def test_heisenberg_bound_helper(self):
        g = sc.collective_op(6, "jz")
        assert bd.heisenberg_bound(g) == pytest.approx(36.0, abs=1e-10)
