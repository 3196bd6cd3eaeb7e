"""Collective-spin linear algebra in the Dicke basis.

States of N two-level atoms restricted to the permutation-symmetric subspace
are length-(N+1) complex vectors indexed by magnetization M = -N/2 .. +N/2
(ascending, matching the diagonal of Jz).  A full 2^N computational-basis
backend is provided for small N to cross-check symmetric-subspace results.
"""

import hashlib
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.special import comb

NORM_TOL = 1e-12
HERM_TOL = 1e-10
FULL_VECTOR_MAX_ATOMS = 14
FULL_DENSITY_MAX_ATOMS = 10

_op_cache = {}
_rot_cache = {}


def m_values(n_atoms):
    """Magnetization labels -N/2 .. N/2 in ascending order."""
    return np.arange(n_atoms + 1) - n_atoms / 2.0


@dataclass(frozen=True)
class DickeVector:
    """Pure symmetric state: N+1 amplitudes over ascending magnetization."""

    n_atoms: int
    amps: np.ndarray

    def __post_init__(self):
        if self.n_atoms < 1:
            raise ValueError("n_atoms must be >= 1")
        amps = np.asarray(self.amps, dtype=complex)
        if amps.shape != (self.n_atoms + 1,):
            raise ValueError(
                f"expected {self.n_atoms + 1} amplitudes, got {amps.shape}")
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > 1e-10:
            raise ValueError(f"state not normalized: |psi|^2 = {norm2!r}")
        object.__setattr__(self, "amps", amps)

    @classmethod
    def from_amplitudes(cls, amps):
        amps = np.asarray(amps, dtype=complex)
        n = amps.size - 1
        nrm = np.linalg.norm(amps)
        if nrm == 0:
            raise ValueError("zero state")
        return cls(n, amps / nrm)

    def overlap(self, other):
        return complex(np.vdot(self.amps, other.amps))

    def fidelity(self, other):
        return abs(self.overlap(other)) ** 2

    def density(self):
        return np.outer(self.amps, self.amps.conj())


@dataclass(frozen=True)
class CollectiveOperator:
    """Hermitian (or ladder) collective-spin operator on the Dicke basis."""

    n_atoms: int
    matrix: np.ndarray
    label: str = "custom"

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        d = self.n_atoms + 1
        if mat.shape != (d, d):
            raise ValueError(f"operator must be {d}x{d}")
        if self.label not in ("jp", "jm"):
            herm_err = np.max(np.abs(mat - mat.conj().T))
            if herm_err > NORM_TOL * max(1.0, np.max(np.abs(mat))):
                raise ValueError(f"matrix not Hermitian (err {herm_err:.2e})")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)


@dataclass(frozen=True)
class FullVector:
    """Computational-basis pure state |sigma_1 ... sigma_N> for small N."""

    n_atoms: int
    amps: np.ndarray

    def __post_init__(self):
        if self.n_atoms > FULL_VECTOR_MAX_ATOMS:
            raise ValueError(
                f"full-space vectors capped at N = {FULL_VECTOR_MAX_ATOMS}")
        amps = np.asarray(self.amps, dtype=complex)
        if amps.shape != (2 ** self.n_atoms,):
            raise ValueError("amplitude count must be 2^N")
        if abs(np.vdot(amps, amps).real - 1.0) > 1e-10:
            raise ValueError("state not normalized")
        object.__setattr__(self, "amps", amps)


@dataclass(frozen=True)
class FullDensity:
    """2^N x 2^N density matrix for small N."""

    n_atoms: int
    matrix: np.ndarray

    def __post_init__(self):
        if self.n_atoms > FULL_DENSITY_MAX_ATOMS:
            raise ValueError(
                f"full-space densities capped at N = {FULL_DENSITY_MAX_ATOMS}")
        mat = np.asarray(self.matrix, dtype=complex)
        d = 2 ** self.n_atoms
        if mat.shape != (d, d):
            raise ValueError("density must be 2^N x 2^N")
        tr = float(np.trace(mat).real)
        if abs(tr - 1.0) > 1e-10:
            raise ValueError(f"trace = {tr!r}, expected 1")
        object.__setattr__(self, "matrix", mat)


# ---------------------------------------------------------------------------
# operators


def _build_op(n_atoms, label):
    j = n_atoms / 2.0
    m = m_values(n_atoms)
    if label == "jz":
        return np.diag(m).astype(complex)
    # J+|j,m> = sqrt(j(j+1) - m(m+1)) |j,m+1>  (subdiagonal in ascending-M order)
    ladder = np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1))
    jp = np.zeros((n_atoms + 1, n_atoms + 1), dtype=complex)
    jp[np.arange(1, n_atoms + 1), np.arange(n_atoms)] = ladder
    if label == "jp":
        return jp
    if label == "jm":
        return jp.conj().T
    if label == "jx":
        return 0.5 * (jp + jp.conj().T)
    if label == "jy":
        return -0.5j * (jp - jp.conj().T)
    raise ValueError(f"unknown operator label {label!r}")


def _cache_dir():
    return os.environ.get("SPINMETRO_CACHE_DIR", "")


def collective_op(n_atoms, label):
    """Collective spin operator J_label on the j = N/2 symmetric subspace.

    Labels: jx, jy, jz, jp, jm.  Matrices are memoized read-only; when
    SPINMETRO_CACHE_DIR is set they are additionally persisted as
    content-addressed .npy blobs.
    """
    if n_atoms < 1:
        raise ValueError("n_atoms must be >= 1")
    label = label.lower()
    key = (n_atoms, label)
    if key in _op_cache:
        return _op_cache[key]
    cache_dir = _cache_dir()
    mat = None
    blob = None
    if cache_dir:
        tag = hashlib.sha256(f"op:{n_atoms}:{label}".encode()).hexdigest()
        blob = os.path.join(cache_dir, f"{tag}.npy")
        if os.path.exists(blob):
            mat = np.load(blob)
    if mat is None:
        mat = _build_op(n_atoms, label)
        if cache_dir:
            os.makedirs(cache_dir, exist_ok=True)
            np.save(blob, mat)
    op = CollectiveOperator(n_atoms, mat, label)
    _op_cache[key] = op
    return op


def eigh(matrix):
    """Hermitian eigendecomposition with a deterministic phase convention.

    Symmetrizes the input (rejecting it if the anti-Hermitian part exceeds
    tolerance) and fixes each eigenvector's phase so its largest-magnitude
    component is real positive.  Returns (eigenvalues ascending, columns).
    """
    a = np.asarray(matrix, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(a))))
    herm_err = float(np.max(np.abs(a - a.conj().T)))
    if herm_err > HERM_TOL * scale:
        raise ValueError(f"matrix not Hermitian within tolerance ({herm_err:.2e})")
    w, v = np.linalg.eigh(0.5 * (a + a.conj().T))
    for k in range(v.shape[1]):
        idx = int(np.argmax(np.abs(v[:, k])))
        ph = v[idx, k]
        if abs(ph) > 0:
            v[:, k] *= np.conj(ph) / abs(ph)
    return w, v


def _rotation_eigensystem(n_atoms, axis):
    key = (n_atoms, axis)
    if key not in _rot_cache:
        w, v = eigh(collective_op(n_atoms, "j" + axis).matrix)
        w.setflags(write=False)
        v.setflags(write=False)
        _rot_cache[key] = (w, v)
    return _rot_cache[key]


def rotate(state, axis, angle):
    """Apply exp(-i * angle * J_axis) to a DickeVector."""
    axis = axis.lower()
    if axis == "z":
        phases = np.exp(-1j * angle * m_values(state.n_atoms))
        return DickeVector(state.n_atoms, phases * state.amps)
    if axis not in ("x", "y"):
        raise ValueError("axis must be x, y or z")
    w, v = _rotation_eigensystem(state.n_atoms, axis)
    amps = v @ (np.exp(-1j * angle * w) * (v.conj().T @ state.amps))
    return DickeVector(state.n_atoms, amps)


def rotation_matrix(n_atoms, axis, angle):
    """Matrix of exp(-i * angle * J_axis) on the Dicke basis."""
    axis = axis.lower()
    if axis == "z":
        return np.diag(np.exp(-1j * angle * m_values(n_atoms)))
    w, v = _rotation_eigensystem(n_atoms, axis)
    return (v * np.exp(-1j * angle * w)) @ v.conj().T


def expectation(state, op):
    """<O> for a DickeVector or a density matrix (ndarray)."""
    mat = op.matrix if isinstance(op, CollectiveOperator) else np.asarray(op)
    if isinstance(state, DickeVector):
        return float(np.vdot(state.amps, mat @ state.amps).real)
    rho = np.asarray(state)
    if rho.shape != mat.shape:
        raise ValueError("dimension mismatch")
    return float(np.trace(rho @ mat).real)


def variance(state, op):
    """<O^2> - <O>^2 (clipped at -1e-12 roundoff)."""
    mat = op.matrix if isinstance(op, CollectiveOperator) else np.asarray(op)
    mean = expectation(state, mat)
    second = expectation(state, mat @ mat)
    var = second - mean ** 2
    if var < -NORM_TOL:
        raise ValueError(f"variance {var!r} below roundoff floor")
    return max(var, 0.0)


# ---------------------------------------------------------------------------
# full-space bridge


def _popcounts(n_atoms):
    idx = np.arange(2 ** n_atoms, dtype=np.uint32)
    counts = np.zeros_like(idx)
    for b in range(n_atoms):
        counts += (idx >> b) & 1
    return counts.astype(int)


def embed_full(state):
    """Embed a DickeVector into the 2^N computational basis.

    |M> maps to the binomial-normalized symmetric sum of computational states
    with N/2 + M up-spins (bit value 1 = up).
    """
    n = state.n_atoms
    if n > FULL_VECTOR_MAX_ATOMS:
        raise ValueError(f"embedding capped at N = {FULL_VECTOR_MAX_ATOMS}")
    nup = _popcounts(n)
    weights = 1.0 / np.sqrt(comb(n, nup))
    amps = state.amps[nup] * weights
    return FullVector(n, amps)


def project_dicke(full):
    """Symmetric-subspace component of a FullVector plus leakage.

    Returns (DickeVector, leakage) with leakage = 1 - |projection|^2.
    """
    n = full.n_atoms
    nup = _popcounts(n)
    weights = 1.0 / np.sqrt(comb(n, nup))
    proj = np.zeros(n + 1, dtype=complex)
    np.add.at(proj, nup, full.amps * weights)
    norm2 = float(np.vdot(proj, proj).real)
    leakage = 1.0 - norm2
    if norm2 <= 0:
        raise ValueError("state has no symmetric component")
    return DickeVector(n, proj / np.sqrt(norm2)), leakage


def full_operator(n_atoms, single_site, labels=None):
    """Sum over atoms of a single-site operator, Sum_k A^(k), in 2^N space."""
    dim = 2 ** n_atoms
    total = np.zeros((dim, dim), dtype=complex)
    eye = np.eye(2, dtype=complex)
    for k in range(n_atoms):
        op = np.array([[1.0]], dtype=complex)
        for site in range(n_atoms):
            op = np.kron(op, single_site if site == k else eye)
        total += op
    return total


# Single-site matrices in the (|down>, |up>) ordering so that basis index
# bit value 1 means spin-up; index 0 is the all-down state.
PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, 1j], [-1j, 0]], dtype=complex),
    "z": np.array([[-1, 0], [0, 1]], dtype=complex),
}
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.conj().T


def full_collective(n_atoms, axis):
    """J_axis = Sum_k sigma_axis^(k) / 2 in the computational basis.

    Bit order: bit k of the basis index is atom k, bit value 1 = up, so the
    all-down state is index 0 and Jz eigenvalues are popcount - N/2.
    """
    return 0.5 * full_operator(n_atoms, PAULI[axis])
