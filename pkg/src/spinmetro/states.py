"""Probe-state factory.

Coherent, squeezed-ground, one-axis-twisted, GHZ, sine/phase and
finite-range-quench states.  All constructors return unit-norm states; pure
functions, safe to sweep in parallel.
"""

from dataclasses import dataclass
from itertools import combinations, product

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply
from scipy.special import comb

from .spincore import (DickeVector, FullVector, collective_op, eigh,
                       m_values, rotate)

DEGENERACY_TOL = 1e-11


@dataclass(frozen=True)
class SqueezingParentParams:
    """Control parameters of the squeezing parent Hamiltonian chi*Jy^2 + field."""

    n_atoms: int
    ratio: float  # omega/chi >= 0

    def __post_init__(self):
        if not np.isfinite(self.ratio) or self.ratio < 0:
            raise ValueError("ratio must be finite and non-negative")


@dataclass(frozen=True)
class LatticeGeometry:
    """Unit-spaced open-boundary lattice in 1, 2 or 3 dimensions."""

    extents: tuple

    def __post_init__(self):
        ext = tuple(int(e) for e in self.extents)
        if not 1 <= len(ext) <= 3:
            raise ValueError("1 to 3 lattice dimensions supported")
        if any(e < 1 for e in ext):
            raise ValueError("extents must be positive")
        n = int(np.prod(ext))
        if n > 14:
            raise ValueError("full-space quenches capped at N = 14")
        object.__setattr__(self, "extents", ext)

    @property
    def dimensions(self):
        return len(self.extents)

    @property
    def n_atoms(self):
        return int(np.prod(self.extents))

    @property
    def positions(self):
        return np.array(list(product(*[range(e) for e in self.extents])),
                        dtype=float)


def css(n_atoms, polar=np.pi / 2, azimuth=0.0):
    """Coherent spin state pointing along the Bloch direction (polar, azimuth).

    Default (pi/2, 0) is the x-aligned CSS with <Jx> = N/2; polar 0 gives
    |M = +N/2>.  Azimuth is measured from +x toward +y, matching the
    e^{-i phi Jz} encoding convention.
    """
    if n_atoms < 1:
        raise ValueError("n_atoms must be >= 1")
    nup = np.arange(n_atoms + 1)
    c, s = np.cos(polar / 2.0), np.sin(polar / 2.0)
    amps = (np.sqrt(comb(n_atoms, nup)) * c ** nup * s ** (n_atoms - nup)
            * np.exp(1j * azimuth * (n_atoms - nup)))
    amps /= np.linalg.norm(amps)
    return DickeVector(n_atoms, amps)


def squeezing_parent_hamiltonian(n_atoms, ratio):
    """chi*Jy^2 - omega*Jx with chi = 1, omega = ratio.

    The -Jx field polarizes the ground state along +x, the frame assumed by
    the Wineland squeezing parameter (the +Jx variant of the same model is
    unitarily equivalent under a pi rotation about z).
    """
    jy = collective_op(n_atoms, "jy").matrix
    jx = collective_op(n_atoms, "jx").matrix
    return jy @ jy - ratio * jx


def sss_ground(params):
    """Extreme spin-squeezed state: ground state of the parent Hamiltonian.

    Degenerate ground spaces (ratio -> 0) are resolved deterministically by
    projecting the x-aligned CSS onto the ground eigenspace.
    """
    n = params.n_atoms
    h = squeezing_parent_hamiltonian(n, params.ratio)
    w, v = eigh(h)
    scale = max(1.0, abs(w[-1]), abs(w[0]))
    ground = v[:, w <= w[0] + DEGENERACY_TOL * scale]
    ref = css(n).amps
    proj = ground @ (ground.conj().T @ ref)
    nrm = np.linalg.norm(proj)
    if nrm < 1e-8:
        # reference orthogonal to the ground space; fall back to first vector
        vec = ground[:, 0]
    else:
        vec = proj / nrm
    ov = np.vdot(ref, vec)
    if abs(ov) > 0:
        vec = vec * np.conj(ov) / abs(ov)
    return DickeVector(n, vec)


def oat_quench(n_atoms, chi_t):
    """One-axis-twisting quench e^{-i chi_t Jz^2} of the x-aligned CSS."""
    if n_atoms < 2:
        raise ValueError("one-axis twisting needs N >= 2")
    state = css(n_atoms)
    m = m_values(n_atoms)
    return DickeVector(n_atoms, np.exp(-1j * chi_t * m * m) * state.amps)


def ghz(n_atoms):
    """(|M=+N/2> + |M=-N/2>)/sqrt(2)."""
    if n_atoms < 1:
        raise ValueError("n_atoms must be >= 1")
    amps = np.zeros(n_atoms + 1, dtype=complex)
    amps[0] = amps[-1] = 1.0 / np.sqrt(2.0)
    return DickeVector(n_atoms, amps)


def ghz_balanced(n_atoms):
    """GHZ state pre-rotated by -pi/(2N) about z.

    The x-parity response becomes sin(N phi), odd around phi = 0, which is
    the symmetric-sensitivity frame used for Bayesian estimation (an even
    response carries no posterior-mean information under a symmetric prior).
    """
    return rotate(ghz(n_atoms), "z", -np.pi / (2 * n_atoms))


def phase_state(n_atoms, k):
    """Pointer state |Phi_k> = e^{-i Phi_k Jz} |Phi_0>, Phi_k = 2 pi k/(N+1).

    k runs over {-N/2, ..., +N/2} in unit steps (half-integers for odd N).
    """
    kgrid = m_values(n_atoms)
    if not np.any(np.abs(kgrid - k) < 1e-9):
        raise ValueError(f"k = {k} outside the N+1 point grid")
    phi_k = 2.0 * np.pi * k / (n_atoms + 1)
    amps = np.exp(-1j * phi_k * m_values(n_atoms)) / np.sqrt(n_atoms + 1)
    return DickeVector(n_atoms, amps)


def sine_state(n_atoms):
    """Sine state: amplitudes sqrt(2/(N+1)) sin(pi (m+1/2)/(N+1)), m = M+N/2."""
    m = np.arange(n_atoms + 1)
    amps = np.sqrt(2.0 / (n_atoms + 1)) * np.sin(
        np.pi * (m + 0.5) / (n_atoms + 1))
    return DickeVector(n_atoms, amps.astype(complex))


# ---------------------------------------------------------------------------
# finite-range quenches (full 2^N backend)


def _coupling_matrix(geometry, alpha):
    pos = geometry.positions
    n = geometry.n_atoms
    w = np.zeros((n, n))
    for k, l in combinations(range(n), 2):
        r = np.linalg.norm(pos[k] - pos[l])
        if np.isinf(alpha):
            w[k, l] = w[l, k] = 1.0 if abs(r - 1.0) < 1e-9 else 0.0
        else:
            w[k, l] = w[l, k] = r ** (-alpha)
    return w


def xxz_hamiltonian(geometry, alpha, chi, chi_prime):
    """Sparse H = sum_{k<l} W_kl [chi sigma.sigma + (chi-chi') sigma_z sigma_z].

    W_kl = 1/|r_k - r_l|^alpha with unit lattice spacing and open boundaries.
    """
    n = geometry.n_atoms
    dim = 2 ** n
    w = _coupling_matrix(geometry, alpha)
    idx = np.arange(dim, dtype=np.int64)
    bits = ((idx[:, None] >> np.arange(n)[None, :]) & 1).astype(np.int8)
    s = 2.0 * bits - 1.0  # sigma_z eigenvalues per site
    # diagonal: (2 chi - chi') sum_{k<l} W_kl s_k s_l  (zz from both terms)
    zz = 0.5 * np.einsum("ik,kl,il->i", s, w, s)
    diag = (2.0 * chi - chi_prime) * zz
    rows, cols, vals = [idx], [idx], [diag.astype(complex)]
    # flip-flop: 2 chi W_kl (sigma+ sigma- + h.c.) between states with
    # opposite bits at k, l
    if chi != 0.0:
        for k, l in combinations(range(n), 2):
            if w[k, l] == 0.0:
                continue
            mask = (1 << k) | (1 << l)
            sel = idx[bits[:, k] != bits[:, l]]
            rows.append(sel)
            cols.append(sel ^ mask)
            vals.append(np.full(sel.size, 2.0 * chi * w[k, l], dtype=complex))
    h = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim)).tocsr()
    return h


def _apply_collective(axis, amps, n_atoms):
    """Matrix-free J_axis |psi> in the computational basis."""
    dim = amps.size
    idx = np.arange(dim)
    out = np.zeros(dim, dtype=complex)
    if axis == "z":
        nup = np.zeros(dim)
        for b in range(n_atoms):
            nup += (idx >> b) & 1
        return (nup - n_atoms / 2.0) * amps
    for b in range(n_atoms):
        flipped = amps[idx ^ (1 << b)]
        if axis == "x":
            out += 0.5 * flipped
        else:  # y: +i for bit 0 (down), -i for bit 1 (up)
            sign = 1.0 - 2.0 * ((idx >> b) & 1)
            out += 0.5j * sign * flipped
    return out


def xi2_yz(state):
    """Wineland parameter with mean spin assumed along x.

    Minimizes the variance over quadratures in the y-z plane by closed-form
    diagonalization of the 2x2 covariance matrix.  Accepts DickeVector or
    FullVector.
    """
    if isinstance(state, DickeVector):
        n = state.n_atoms
        psi = state.amps
        jx = collective_op(n, "jx").matrix
        jy = collective_op(n, "jy").matrix
        jz = collective_op(n, "jz").matrix
        yv = jy @ psi
        zv = jz @ psi
        mean_x = float(np.vdot(psi, jx @ psi).real)
    else:
        n = state.n_atoms
        psi = state.amps
        yv = _apply_collective("y", psi, n)
        zv = _apply_collective("z", psi, n)
        mean_x = float(np.vdot(psi, _apply_collective("x", psi, n)).real)
    my = float(np.vdot(psi, yv).real)
    mz = float(np.vdot(psi, zv).real)
    vyy = float(np.vdot(yv, yv).real) - my ** 2
    vzz = float(np.vdot(zv, zv).real) - mz ** 2
    vyz = float(np.vdot(yv, zv).real) - my * mz
    half_tr = 0.5 * (vyy + vzz)
    rad = np.sqrt(0.25 * (vyy - vzz) ** 2 + vyz ** 2)
    var_min = max(half_tr - rad, 0.0)
    if mean_x == 0.0:
        return float("nan")
    return n * var_min / mean_x ** 2


def xxz_quench(geometry, alpha, chi, chi_prime, t):
    """Quench the embedded x-aligned CSS under the XXZ Hamiltonian for time t."""
    return xxz_trajectory(geometry, alpha, chi, chi_prime, [t])[0]


def xxz_trajectory(geometry, alpha, chi, chi_prime, times):
    """Evolved states at the given times (ascending), as FullVectors.

    Dense eigendecomposition is used up to 2^12; larger systems fall back to
    sparse Krylov stepping.
    """
    from .spincore import embed_full

    n = geometry.n_atoms
    h = xxz_hamiltonian(geometry, alpha, chi, chi_prime)
    psi0 = embed_full(css(n)).amps
    times = np.atleast_1d(np.asarray(times, dtype=float))
    out = []
    if h.shape[0] <= 4096:
        w, v = np.linalg.eigh(h.toarray())
        coeff = v.conj().T @ psi0
        for t in times:
            amps = v @ (np.exp(-1j * w * t) * coeff)
            out.append(FullVector(n, amps / np.linalg.norm(amps)))
    else:
        psi = psi0.astype(complex)
        prev = 0.0
        for t in times:
            if t != prev:
                psi = expm_multiply(-1j * (t - prev) * h, psi)
            prev = t
            out.append(FullVector(n, psi / np.linalg.norm(psi)))
    return out


def xxz_xi2_curve(geometry, alpha, chi, chi_prime, times):
    """xi^2(t) along an XXZ quench (quadrature optimized in the y-z plane)."""
    traj = xxz_trajectory(geometry, alpha, chi, chi_prime, times)
    return np.array([xi2_yz(fv) for fv in traj])


def find_star_ratio(n_atoms, lo=1e-6, hi=None):
    """Locate the parent-Hamiltonian ratio where Var(Jy) = Var(Jx).

    Bisection on log(ratio); the difference is monotone across the bracket.
    """
    from .spincore import variance

    if hi is None:
        hi = 10.0 * n_atoms ** 2

    def gap(ratio):
        st = sss_ground(SqueezingParentParams(n_atoms, ratio))
        return (variance(st, collective_op(n_atoms, "jy"))
                - variance(st, collective_op(n_atoms, "jx")))

    flo, fhi = gap(lo), gap(hi)
    if flo * fhi > 0:
        raise ValueError("bracket does not straddle Var(Jy) = Var(Jx)")
    for _ in range(200):
        mid = np.sqrt(lo * hi)
        fm = gap(mid)
        if flo * fm <= 0:
            hi, fhi = mid, fm
        else:
            lo, flo = mid, fm
        if hi / lo < 1 + 1e-12:
            break
    return float(np.sqrt(lo * hi))
