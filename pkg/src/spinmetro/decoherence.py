"""Spontaneous-emission channel and its effect on (Q)FI and clock stability.

Two backends: an exact full-space Kraus product (oracle, N <= 10) and a
permutation-invariant block representation storing one Hermitian matrix per
total-spin sector j with degeneracy weights.  Per-atom decay couples sector
j to j-1, j, j+1; the transfer amplitudes factorize into Clebsch-Gordan
functions of m times per-(j -> j') weights, which are pinned exactly by
trace preservation (the m^2/m/1 components of the loss rate N/2 + m).
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm
from scipy.special import comb

from .spincore import (SIGMA_MINUS, DickeVector, FullDensity,
                       eigh as fixed_eigh)

RANK_CUTOFF = 1e-12
TRACE_TOL = 1e-10


@dataclass(frozen=True)
class DecayParams:
    """Exposure time in units of the atomic coherence time."""

    t_over_ta: float

    def __post_init__(self):
        if not np.isfinite(self.t_over_ta) or self.t_over_ta < 0:
            raise ValueError("t_over_ta must be finite and non-negative")

    @property
    def gamma(self):
        """Per-atom jump probability: excited population decays e^{-2T/T_A}."""
        return 1.0 - np.exp(-2.0 * self.t_over_ta)


def sector_spins(n_atoms):
    """Total-spin labels N/2, N/2-1, ..., (1/2 or 0)."""
    return [n_atoms / 2.0 - k for k in range(int(n_atoms // 2) + 1)]


def sector_degeneracy(n_atoms, j):
    """Multiplicity of the spin-j sector in the N-atom decomposition."""
    k = n_atoms / 2.0 - j
    if abs(k - round(k)) > 1e-9 or k < 0:
        raise ValueError(f"invalid sector j={j} for N={n_atoms}")
    k = int(round(k))
    d = comb(n_atoms, k, exact=True)
    if k >= 1:
        d -= comb(n_atoms, k - 1, exact=True)
    return int(d)


def spin_matrix(j, label):
    """Angular-momentum matrix for arbitrary spin j, ascending m."""
    dim = int(round(2 * j)) + 1
    m = np.arange(dim) - j
    if label == "jz":
        return np.diag(m).astype(complex)
    ladder = np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1))
    jp = np.zeros((dim, dim), dtype=complex)
    jp[np.arange(1, dim), np.arange(dim - 1)] = ladder
    if label == "jp":
        return jp
    if label == "jx":
        return 0.5 * (jp + jp.conj().T)
    if label == "jy":
        return -0.5j * (jp - jp.conj().T)
    raise ValueError(label)


@dataclass(frozen=True)
class BlockDensity:
    """Permutation-invariant density: per-copy block B_j for each sector.

    The physical state is sum_j sum_{alpha=1..d_j} |j m alpha> B_j[m,m']
    <j m' alpha|, so sum_j d_j tr(B_j) = 1.
    """

    n_atoms: int
    blocks: tuple  # aligned with sector_spins(n_atoms)

    def __post_init__(self):
        js = sector_spins(self.n_atoms)
        if len(self.blocks) != len(js):
            raise ValueError("one block per spin sector required")
        total = 0.0
        blocks = []
        for j, b in zip(js, self.blocks):
            b = np.asarray(b, dtype=complex)
            dim = int(round(2 * j)) + 1
            if b.shape != (dim, dim):
                raise ValueError(f"sector j={j} block must be {dim}x{dim}")
            total += sector_degeneracy(self.n_atoms, j) * float(
                np.trace(b).real)
            b.setflags(write=False)
            blocks.append(b)
        if abs(total - 1.0) > TRACE_TOL:
            raise ValueError(f"weighted trace = {total!r}")
        object.__setattr__(self, "blocks", tuple(blocks))

    @classmethod
    def from_dicke(cls, state):
        js = sector_spins(state.n_atoms)
        blocks = [np.outer(state.amps, state.amps.conj())]
        for j in js[1:]:
            dim = int(round(2 * j)) + 1
            blocks.append(np.zeros((dim, dim), dtype=complex))
        return cls(state.n_atoms, tuple(blocks))

    def sector_traces(self):
        """Weighted population per sector (sums to 1)."""
        return np.array([sector_degeneracy(self.n_atoms, j)
                         * float(np.trace(b).real)
                         for j, b in zip(sector_spins(self.n_atoms),
                                         self.blocks)])


# ---------------------------------------------------------------------------
# full-space Kraus oracle


def full_density(state):
    if isinstance(state, DickeVector):
        from .spincore import embed_full

        fv = embed_full(state)
        return FullDensity(state.n_atoms, np.outer(fv.amps, fv.amps.conj()))
    return state


def damp_full(rho, params):
    """Per-atom amplitude damping applied as an exact Kraus product."""
    n = rho.n_atoms
    g = params.gamma
    k0 = np.diag([1.0, np.sqrt(1.0 - g)]).astype(complex)
    k1 = np.sqrt(g) * SIGMA_MINUS
    mat = np.asarray(rho.matrix, dtype=complex)
    eye = np.eye(2, dtype=complex)
    for site in range(n):
        ops = []
        for k in (k0, k1):
            op = np.array([[1.0]], dtype=complex)
            for s in range(n):
                op = np.kron(op, k if s == site else eye)
            ops.append(op)
        mat = sum(op @ mat @ op.conj().T for op in ops)
    return FullDensity(n, mat)


# ---------------------------------------------------------------------------
# block backend


def _cg_sq(j, m, jp):
    """Squared Clebsch-Gordan <j m; 1 -1 | j' m-1> (all-positive convention)."""
    if jp == j + 1:
        return (j - m + 1) * (j - m + 2) / ((2 * j + 1) * (2 * j + 2))
    if jp == j:
        if j == 0:
            return 0.0
        return (j + m) * (j - m + 1) / (2 * j * (j + 1))
    if jp == j - 1:
        if j <= 0.5:
            return 0.0 if jp < 0 else (j + m) * (j + m - 1) / (
                2 * j * (2 * j + 1))
        return (j + m) * (j + m - 1) / (2 * j * (2 * j + 1))
    return 0.0


@lru_cache(maxsize=None)
def _sector_weights(n_atoms):
    """Per-(j -> j') reduced jump weights K, solved from trace preservation.

    For each source sector j the total loss rate of |j m><j m| must equal
    N/2 + m; the three candidate destinations give quadratic-in-m gain
    profiles whose weights are fixed by matching the m^2, m and constant
    parts.  Residuals are asserted tiny.
    """
    weights = {}
    js = sector_spins(n_atoms)
    jmax = js[0]
    jmin = js[-1]
    for j in js:
        targets = [jp for jp in (j - 1, j, j + 1) if jmin <= jp <= jmax]
        ms = np.arange(-j, j + 1)
        a = np.array([[_cg_sq(j, m, jp) for jp in targets] for m in ms])
        rhs = n_atoms / 2.0 + ms
        k, res, _, _ = np.linalg.lstsq(a, rhs, rcond=None)
        err = np.max(np.abs(a @ k - rhs))
        if err > 1e-9:
            raise AssertionError(
                f"sector-weight solve failed for N={n_atoms}, j={j}: {err}")
        weights[j] = dict(zip(targets, k))
    return weights


@lru_cache(maxsize=None)
def _coherence_generators(n_atoms):
    """Per coherence order q = m - m': generator matrix of the decay channel
    acting on class coefficients p^j_{m,m-q}, in units of 1/T_A with jump
    rate 2/T_A (excited population decays as e^{-2T/T_A})."""
    js = sector_spins(n_atoms)
    weights = _sector_weights(n_atoms)
    gens = {}
    qmax = int(round(2 * js[0]))
    for qq in range(-qmax, qmax + 1):
        q = float(qq)
        coords = []
        index = {}
        for j in js:
            for m in np.arange(-j, j + 1):
                mp = m - q
                if -j <= mp <= j:
                    index[(j, float(m))] = len(coords)
                    coords.append((j, float(m)))
        if not coords:
            continue
        g = np.zeros((len(coords), len(coords)))
        for (j, m), row in index.items():
            mp = m - q
            # anticommutator loss
            g[row, row] -= 2.0 * (n_atoms / 2.0 + 0.5 * (m + mp))
            # jump gain into (j', m-1, m'-1)
            for jp, k in weights[j].items():
                tgt = (jp, float(m - 1))
                if tgt in index and -jp <= mp - 1 <= jp:
                    amp = np.sqrt(_cg_sq(j, m, jp) * _cg_sq(j, mp, jp)) * k
                    g[index[tgt], row] += 2.0 * amp
        gens[qq] = (coords, index, g)
    return gens


def damp_blocks(rho, params):
    """Evolve a permutation-invariant density under per-atom decay.

    Accepts a BlockDensity or a DickeVector; agrees with the full-space
    Kraus oracle on embedded inputs.
    """
    if isinstance(rho, DickeVector):
        rho = BlockDensity.from_dicke(rho)
    n = rho.n_atoms
    js = sector_spins(n)
    t = params.t_over_ta
    if t == 0.0:
        return rho
    dj = {j: sector_degeneracy(n, j) for j in js}
    out = [np.zeros_like(np.asarray(b)) for b in rho.blocks]
    gens = _coherence_generators(n)
    jpos = {j: i for i, j in enumerate(js)}
    for qq, (coords, index, g) in gens.items():
        vec = np.zeros(len(coords), dtype=complex)
        for (j, m), row in index.items():
            b = rho.blocks[jpos[j]]
            mi = int(round(m + j))
            mpi = int(round(m - qq + j))
            vec[row] = dj[j] * b[mi, mpi]
        prop = expm(g * t)
        new = prop @ vec
        for (j, m), row in index.items():
            mi = int(round(m + j))
            mpi = int(round(m - qq + j))
            out[jpos[j]][mi, mpi] = new[row] / dj[j]
    return BlockDensity(n, tuple(out))


# ---------------------------------------------------------------------------
# symmetry-adapted basis (oracle bridge, small N)


@lru_cache(maxsize=None)
def symmetric_adapted_basis(n_atoms):
    """Isometries W[(j, alpha)]: columns |j, m, alpha> in the 2^N basis.

    Built by sequentially coupling one spin-1/2 at a time (new atom = new
    highest bit), tracking every coupling path alpha.
    """
    if n_atoms > 10:
        raise ValueError("adapted basis capped at N = 10")
    # start with one atom: j = 1/2, columns m = -1/2, +1/2
    reps = {(0.5, ()): np.eye(2, dtype=complex)}
    for n in range(1, n_atoms):
        new = {}
        for (j, path), w in reps.items():
            dim_old = 2 ** n
            up = np.zeros((2 ** (n + 1), w.shape[1]), dtype=complex)
            dn = np.zeros_like(up)
            up[dim_old:, :] = w  # new highest bit set (new atom up)
            dn[:dim_old, :] = w
            for jp in (j + 0.5, j - 0.5):
                if jp < 0:
                    continue
                dimp = int(round(2 * jp)) + 1
                cols = np.zeros((2 ** (n + 1), dimp), dtype=complex)
                for mi in range(dimp):
                    m = mi - jp
                    if jp == j + 0.5:
                        cup = np.sqrt(max(j + m + 0.5, 0.0) / (2 * j + 1))
                        cdn = np.sqrt(max(j - m + 0.5, 0.0) / (2 * j + 1))
                    else:
                        cup = -np.sqrt(max(j - m + 0.5, 0.0) / (2 * j + 1))
                        cdn = np.sqrt(max(j + m + 0.5, 0.0) / (2 * j + 1))
                    iu = int(round(m - 0.5 + j))
                    if abs(cup) > 0 and 0 <= iu < w.shape[1]:
                        cols[:, mi] += cup * up[:, iu]
                    idn = int(round(m + 0.5 + j))
                    if abs(cdn) > 0 and 0 <= idn < w.shape[1]:
                        cols[:, mi] += cdn * dn[:, idn]
                new[(jp, path + (jp,))] = cols
        reps = new
    return reps


def block_from_full(rho, n_atoms):
    """Project a full density onto the permutation-invariant block form."""
    reps = symmetric_adapted_basis(n_atoms)
    js = sector_spins(n_atoms)
    mat = rho.matrix if isinstance(rho, FullDensity) else np.asarray(rho)
    blocks = []
    for j in js:
        dim = int(round(2 * j)) + 1
        acc = np.zeros((dim, dim), dtype=complex)
        count = 0
        for (jj, _), w in reps.items():
            if abs(jj - j) < 1e-9:
                acc += w.conj().T @ mat @ w
                count += 1
        if count != sector_degeneracy(n_atoms, j):
            raise AssertionError("coupling-path count mismatch")
        blocks.append(acc / count)
    return BlockDensity(n_atoms, tuple(blocks))


def full_from_block(block):
    """Expand a BlockDensity into the 2^N computational basis."""
    reps = symmetric_adapted_basis(block.n_atoms)
    js = sector_spins(block.n_atoms)
    jpos = {j: i for i, j in enumerate(js)}
    dim = 2 ** block.n_atoms
    mat = np.zeros((dim, dim), dtype=complex)
    for (j, _), w in reps.items():
        mat += w @ np.asarray(block.blocks[jpos[j]]) @ w.conj().T
    return FullDensity(block.n_atoms, mat)


# ---------------------------------------------------------------------------
# FI / QFI after decay


def _encoded_block(b, j, phi):
    m = np.arange(-j, j + 1)
    ph = np.exp(-1j * phi * m)
    return ph[:, None] * np.asarray(b) * ph.conj()[None, :]


def y_resolved_probabilities(block, phi):
    """p(m_y = m | phi): excitation-resolved measurement along y.

    Outcome m pools the y-basis populations of every sector with j >= |m|,
    weighted by sector degeneracy.
    """
    n = block.n_atoms
    js = sector_spins(n)
    probs = np.zeros(n + 1)
    for j, b in zip(js, block.blocks):
        if np.max(np.abs(b)) == 0.0:
            continue
        w, v = np.linalg.eigh(spin_matrix(j, "jy"))
        order = np.argsort(w)
        v = v[:, order]
        rot = v.conj().T @ _encoded_block(b, j, phi) @ v
        d = sector_degeneracy(n, j)
        for mi in range(int(round(2 * j)) + 1):
            m = mi - j
            probs[int(round(m + n / 2.0))] += d * rot[mi, mi].real
    return np.clip(probs, 0.0, None)


def fi_after_decay(state, params, phi=0.0):
    """Classical FI of the excitation-resolved y measurement after decay."""
    block = damp_blocks(state, params)
    h = 1e-5

    def p(x):
        return y_resolved_probabilities(block, x)

    d1 = (p(phi + h) - p(phi - h)) / (2 * h)
    d2 = (p(phi + h / 2) - p(phi - h / 2)) / h
    dp = (4.0 * d2 - d1) / 3.0
    p0 = p(phi)
    keep = p0 > 1e-14
    return float(np.sum(dp[keep] ** 2 / p0[keep]))


def qfi_after_decay(state, params):
    """QFI (generator Jz) of the decayed state, summed over sectors."""
    block = damp_blocks(state, params)
    n = block.n_atoms
    total = 0.0
    for j, b in zip(sector_spins(n), block.blocks):
        b = np.asarray(b)
        if np.max(np.abs(b)) == 0.0:
            continue
        w, v = fixed_eigh(b)
        w = np.clip(w, 0.0, None)
        m = np.arange(-j, j + 1)
        gv = m[:, None] * v  # Jz |v_k>
        g2 = (np.abs(v) ** 2 * (m ** 2)[:, None]).sum(axis=0)
        g1 = (np.abs(v) ** 2 * m[:, None]).sum(axis=0)
        q = float(np.sum(4.0 * w * (g2 - g1 ** 2)))
        gmat = v.conj().T @ gv
        denom = w[:, None] + w[None, :]
        num = 8.0 * np.outer(w, w) * np.abs(gmat) ** 2
        mask = (denom > RANK_CUTOFF) & ~np.eye(w.size, dtype=bool)
        q -= float(np.sum(num[mask] / denom[mask]))
        total += sector_degeneracy(n, j) * q
    return total


def allan_qcrb(state, interrogation, t_atomic=1.0):
    """Normalized Allan variance sigma_y^2 omega_0^2 tau = 1/(Q(T) T).

    interrogation in the same units as the atomic coherence time t_atomic.
    """
    if interrogation <= 0:
        raise ValueError("interrogation time must be positive")
    q = qfi_after_decay(state, DecayParams(interrogation / t_atomic))
    return 1.0 / (q * interrogation)
