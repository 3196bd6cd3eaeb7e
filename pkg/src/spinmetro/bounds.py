"""Quantum Fisher information, the symmetric logarithmic derivative, the
QCRB-saturating measurement, and the multipartite-entanglement witness.
"""

from dataclasses import dataclass

import numpy as np

from .measurement import MeasurementBasis
from .spincore import CollectiveOperator, DickeVector, eigh

RANK_CUTOFF = 1e-12


@dataclass(frozen=True)
class SpectralDensity:
    """Eigendecomposition of a density matrix: probs, orthonormal columns."""

    probs: np.ndarray
    states: np.ndarray
    rank_cutoff: float = RANK_CUTOFF

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        v = np.asarray(self.states, dtype=complex)
        if p.size != v.shape[1]:
            raise ValueError("one probability per eigenvector required")
        if abs(p.sum() - 1.0) > 1e-10:
            raise ValueError(f"probabilities sum to {p.sum()!r}")
        gram = v.conj().T @ v
        if np.max(np.abs(gram - np.eye(p.size))) > 1e-10:
            raise ValueError("eigenvectors not orthonormal")
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "states", v)

    @property
    def rank(self):
        return int(np.sum(self.probs > self.rank_cutoff))

    @classmethod
    def from_density(cls, matrix, rank_cutoff=RANK_CUTOFF):
        w, v = eigh(matrix)
        w = np.clip(w, 0.0, None)
        return cls(w / w.sum(), v, rank_cutoff)

    @classmethod
    def from_pure(cls, state):
        amps = state.amps if isinstance(state, DickeVector) else np.asarray(
            state)
        dim = amps.size
        # complete to an orthonormal basis; dropping the pivot column keeps
        # the stacked matrix full rank for any normalized amps
        pivot = int(np.argmax(np.abs(amps)))
        others = [np.eye(dim, dtype=complex)[:, i] for i in range(dim)
                  if i != pivot]
        q, _ = np.linalg.qr(np.column_stack([amps] + others))
        q[:, 0] = amps
        p = np.zeros(dim)
        p[0] = 1.0
        return cls(p, q)

    def matrix(self):
        return (self.states * self.probs[None, :]) @ self.states.conj().T


def _gen_matrix(generator):
    if isinstance(generator, CollectiveOperator):
        return generator.matrix
    return np.asarray(generator, dtype=complex)


def qfi_pure(state, generator):
    """4 (⟨G^2⟩ - ⟨G⟩^2) for a pure probe."""
    g = _gen_matrix(generator)
    amps = state.amps if isinstance(state, DickeVector) else np.asarray(state)
    gv = g @ amps
    mean = np.vdot(amps, gv).real
    return float(4.0 * (np.vdot(gv, gv).real - mean ** 2))


def sld(rho, generator):
    """Symmetric logarithmic derivative of the encoded density at phi = 0.

    Matrix elements -2i G_kl (p_l - p_k)/(p_k + p_l) in the eigenbasis,
    restricted to pairs with p_k + p_l above the rank cutoff.
    """
    if not isinstance(rho, SpectralDensity):
        rho = SpectralDensity.from_density(rho)
    if rho.rank < 1:
        raise ValueError("all-zero density")
    g = rho.states.conj().T @ _gen_matrix(generator) @ rho.states
    p = rho.probs
    denom = p[:, None] + p[None, :]
    diff = p[None, :] - p[:, None]
    with np.errstate(invalid="ignore", divide="ignore"):
        core = np.where(denom > rho.rank_cutoff,
                        -2j * g * diff / np.maximum(denom, 1e-300), 0.0)
    l0 = rho.states @ core @ rho.states.conj().T
    return 0.5 * (l0 + l0.conj().T)


def qfi_mixed(rho, generator):
    """QFI of a mixed probe under e^{-i phi G} encoding.

    Convex sum of pure-state QFIs minus the coherence-pair corrections;
    pairs below the rank cutoff are dropped.
    """
    if not isinstance(rho, SpectralDensity):
        rho = SpectralDensity.from_density(rho)
    gmat = _gen_matrix(generator)
    gv = gmat @ rho.states
    g2 = np.einsum("ik,ik->k", rho.states.conj(), gmat @ gv).real
    g1 = np.einsum("ik,ik->k", rho.states.conj(), gv).real
    total = float(np.sum(4.0 * rho.probs * (g2 - g1 ** 2)))
    gkl = rho.states.conj().T @ gv
    p = rho.probs
    denom = p[:, None] + p[None, :]
    num = 8.0 * np.outer(p, p) * np.abs(gkl) ** 2
    mask = (denom > rho.rank_cutoff) & ~np.eye(p.size, dtype=bool)
    total -= float(np.sum(num[mask] / denom[mask]))
    return total


def qcrb_measurement(rho, generator):
    """Projective measurement saturating the QCRB: the SLD eigenbasis.

    Degenerate SLD eigenvalues are disambiguated by diagonalizing Jz inside
    each eigenspace so outputs are deterministic.
    """
    if not isinstance(rho, SpectralDensity):
        rho = SpectralDensity.from_density(rho)
    l0 = sld(rho, generator)
    outs, vecs = eigh(l0)
    dim = l0.shape[0]
    jz_like = np.diag(np.arange(dim, dtype=float))
    i = 0
    vecs = vecs.copy()
    while i < outs.size:
        j = i
        while j + 1 < outs.size and outs[j + 1] - outs[i] <= 1e-9 * max(
                1.0, abs(outs[i])):
            j += 1
        if j > i:
            block = vecs[:, i:j + 1]
            _, u = eigh(block.conj().T @ jz_like @ block)
            vecs[:, i:j + 1] = block @ u
        i = j + 1
    n_atoms = _atoms_from_dim(dim)
    return MeasurementBasis(n_atoms, vecs, outs, "sld")


def _atoms_from_dim(dim):
    n = dim - 1
    if 2 ** int(round(np.log2(dim))) == dim and dim > 2:
        return int(round(np.log2(dim)))
    return n


def heisenberg_bound(generator):
    """Generalized single-shot bound (lambda_max - lambda_min)^2."""
    w, _ = eigh(_gen_matrix(generator))
    return float((w[-1] - w[0]) ** 2)


def partition_qfi_bound(n_atoms, k):
    """Largest QFI of states with at most k-atom entangled groups."""
    groups = n_atoms // k
    return groups * k ** 2 + (n_atoms - k * groups) ** 2


def entanglement_depth(qfi_value, n_atoms):
    """Smallest group size k whose partitioned bound allows qfi_value."""
    if qfi_value < 0 or qfi_value > n_atoms ** 2 + 1e-9:
        raise ValueError(f"QFI {qfi_value!r} outside [0, N^2]")
    for k in range(1, n_atoms + 1):
        if qfi_value <= partition_qfi_bound(n_atoms, k) + 1e-9:
            return k
    return n_atoms
