import numpy as np
import pytest

from spinmetro import decoherence as dec
from spinmetro import spincore as sc
from spinmetro import states as st

PHI0 = 0.02  # generic phase offset breaking measure-zero symmetry points


def random_block(n, seed):
    rng = np.random.default_rng(seed)
    blocks = []
    total = 0.0
    for j in dec.sector_spins(n):
        dim = int(round(2 * j)) + 1
        v = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        b = v @ v.conj().T
        blocks.append(b)
        total += dec.sector_degeneracy(n, j) * np.trace(b).real
    return dec.BlockDensity(n, tuple(b / total for b in blocks))


class TestSectors:
    def test_degeneracies_sum(self):
        for n in (2, 5, 8):
            total = sum(dec.sector_degeneracy(n, j) * (int(round(2 * j)) + 1)
                        for j in dec.sector_spins(n))
            assert total == 2 ** n

    def test_top_sector_unique(self):
        assert dec.sector_degeneracy(6, 3.0) == 1


class TestFullChannel:
    def test_identity_at_zero(self):
        rho = dec.full_density(st.ghz(4))
        out = dec.damp_full(rho, dec.DecayParams(0.0))
        assert np.max(np.abs(out.matrix - rho.matrix)) < 1e-14

    def test_full_decay(self):
        rho = dec.full_density(st.css(3))
        out = dec.damp_full(rho, dec.DecayParams(40.0))
        expect = np.zeros_like(out.matrix)
        expect[0, 0] = 1.0
        assert np.max(np.abs(out.matrix - expect)) < 1e-10

    def test_single_atom_population(self):
        up = sc.DickeVector(1, np.array([0.0, 1.0], dtype=complex))
        for t in (0.1, 0.5):
            out = dec.damp_full(dec.full_density(up), dec.DecayParams(t))
            assert out.matrix[1, 1].real == pytest.approx(np.exp(-2 * t),
                                                          abs=1e-12)

    def test_single_atom_coherence(self):
        plus = st.css(1)
        out = dec.damp_full(dec.full_density(plus), dec.DecayParams(0.3))
        assert abs(out.matrix[0, 1]) == pytest.approx(
            0.5 * np.exp(-0.3), abs=1e-12)


class TestBlockOracle:
    @pytest.mark.parametrize("n", [2, 4, 6])
    @pytest.mark.parametrize("t", [0.05, 0.2, 1.0])
    def test_matches_full_kraus(self, n, t):
        p = dec.DecayParams(t)
        for state in (st.ghz(n), st.css(n),
                      st.sss_ground(st.SqueezingParentParams(n, 0.4))):
            blk = dec.damp_blocks(state, p)
            oracle = dec.block_from_full(
                dec.damp_full(dec.full_density(state), p), n)
            err = max(np.max(np.abs(np.asarray(a) - np.asarray(b)))
                      for a, b in zip(blk.blocks, oracle.blocks))
            assert err < 1e-8

    def test_mixed_input_oracle(self):
        n = 4
        blk0 = random_block(n, 3)
        p = dec.DecayParams(0.17)
        blk = dec.damp_blocks(blk0, p)
        oracle = dec.block_from_full(
            dec.damp_full(dec.full_from_block(blk0), p), n)
        err = max(np.max(np.abs(np.asarray(a) - np.asarray(b)))
                  for a, b in zip(blk.blocks, oracle.blocks))
        assert err < 1e-8

    def test_ghz_sector_leak(self):
        n = 6
        blk = dec.damp_blocks(st.ghz(n), dec.DecayParams(0.05))
        traces = blk.sector_traces()
        assert traces[1] > 1e-3  # j = N/2 - 1 populated
        assert traces[0] < 1.0

    def test_trace_and_positivity_random(self):
        n = 5
        for seed in range(100):
            blk = dec.damp_blocks(random_block(n, seed),
                                  dec.DecayParams(0.3))
            assert abs(blk.sector_traces().sum() - 1.0) < 1e-10
            for b in blk.blocks:
                w = np.linalg.eigvalsh(np.asarray(b))
                assert w.min() > -1e-10

    def test_semigroup(self):
        n = 6
        a = dec.damp_blocks(dec.damp_blocks(st.ghz(n), dec.DecayParams(0.07)),
                            dec.DecayParams(0.13))
        b = dec.damp_blocks(st.ghz(n), dec.DecayParams(0.2))
        err = max(np.max(np.abs(np.asarray(x) - np.asarray(y)))
                  for x, y in zip(a.blocks, b.blocks))
        assert err < 1e-10

    def test_commutes_with_encoding(self):
        n = 4
        state = st.sss_ground(st.SqueezingParentParams(n, 0.5))
        phi = 0.41
        p = dec.DecayParams(0.2)
        a = dec.damp_blocks(sc.rotate(state, "z", phi), p)
        b = dec.damp_blocks(state, p)
        rotated = []
        for j, blk in zip(dec.sector_spins(n), b.blocks):
            m = np.arange(-j, j + 1)
            ph = np.exp(-1j * phi * m)
            rotated.append(ph[:, None] * np.asarray(blk) * ph.conj()[None, :])
        err = max(np.max(np.abs(np.asarray(x) - y))
                  for x, y in zip(a.blocks, rotated))
        assert err < 1e-10


class TestFiQfiAfterDecay:
    def test_zero_time_recovers_noiseless(self):
        from spinmetro.bounds import qfi_pure
        from spinmetro.frequentist import fisher_information
        from spinmetro.measurement import basis_jy

        n = 6
        s = st.css(n)
        f0 = fisher_information(s, basis_jy(n), PHI0)
        assert dec.fi_after_decay(s, dec.DecayParams(0.0), phi=PHI0) == \
            pytest.approx(f0, abs=1e-10)
        assert dec.qfi_after_decay(st.ghz(n), dec.DecayParams(0.0)) == \
            pytest.approx(qfi_pure(st.ghz(n),
                                   sc.collective_op(n, "jz")), abs=1e-9)

    def test_ghz_qfi_analytic(self):
        # independent two-level-block oracle: Q = N^2 2x/(1+x), x=e^{-2NT/Ta}
        n = 8
        for t in (0.01, 0.05):
            x = np.exp(-2 * n * t)
            assert dec.qfi_after_decay(st.ghz(n), dec.DecayParams(t)) == \
                pytest.approx(n ** 2 * 2 * x / (1 + x), rel=1e-6)

    def test_squeezing_ordering(self):
        n = 8
        ratios = [st.find_star_ratio(n), 1 / np.sqrt(n), 1 / n ** 2]
        xis, fis = [], []
        from spinmetro.frequentist import wineland_xi2

        for r in ratios:
            s = st.sss_ground(st.SqueezingParentParams(n, r))
            xis.append(wineland_xi2(s))
            fis.append(dec.fi_after_decay(s, dec.DecayParams(0.1), phi=PHI0))
        assert xis[0] > xis[1] > xis[2]
        assert np.argmin(fis) == 2  # most squeezed loses the most FI

    def test_ghz_retains_longer_than_extreme_sss(self):
        n = 8
        p = dec.DecayParams(0.05)
        sq = st.sss_ground(st.SqueezingParentParams(n, 1e-4))
        assert dec.fi_after_decay(st.ghz(n), p, phi=PHI0) > \
            dec.fi_after_decay(sq, p, phi=PHI0)

    def test_qfi_monotone(self):
        n = 8
        states = [st.css(n), st.ghz(n),
                  st.sss_ground(st.SqueezingParentParams(n, 0.2))]
        ts = np.linspace(0.0, 1.0, 20)
        for s in states:
            qs = [dec.qfi_after_decay(s, dec.DecayParams(t)) for t in ts]
            assert np.all(np.diff(qs) <= 1e-8)

    def test_fi_below_qfi(self):
        n = 6
        for t in (0.05, 0.3):
            for s in (st.css(n), st.ghz(n),
                      st.sss_ground(st.SqueezingParentParams(n, 0.5))):
                f = dec.fi_after_decay(s, dec.DecayParams(t), phi=PHI0)
                q = dec.qfi_after_decay(s, dec.DecayParams(t))
                assert f <= q + 1e-8


class TestAllanQcrb:
    def test_short_time_asymptotes(self):
        n = 8
        t = 1 / (20 * n)
        ghz_q = dec.qfi_after_decay(st.ghz(n), dec.DecayParams(t))
        css_q = dec.qfi_after_decay(st.css(n), dec.DecayParams(t))
        assert ghz_q == pytest.approx(n ** 2, rel=0.05)
        assert css_q == pytest.approx(n, rel=0.05)
        assert dec.allan_qcrb(st.ghz(n), t) == pytest.approx(
            1 / (ghz_q * t), rel=1e-12)

    def test_optimal_interrogation_ordering(self):
        n = 8
        ts = np.geomspace(1e-3, 2.0, 30)
        ghz_curve = [dec.allan_qcrb(st.ghz(n), t) for t in ts]
        css_curve = [dec.allan_qcrb(st.css(n), t) for t in ts]
        ig, ic = np.argmin(ghz_curve), np.argmin(css_curve)
        assert 0 < ig < len(ts) - 1 and 0 < ic < len(ts) - 1
        assert ts[ig] < ts[ic]
