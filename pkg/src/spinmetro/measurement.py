"""Von Neumann measurements: bases, outcome distributions, sampling.

A basis is an orthonormal set of vectors (columns) with one real outcome
value per vector; degenerate outcome values are grouped at the distribution
layer so parity-type measurements keep a uniform representation.
"""

from dataclasses import dataclass

import numpy as np

from .spincore import DickeVector, m_values, rotation_matrix

GRAM_TOL = 1e-10
GROUP_TOL = 1e-9
PROB_CLAMP = 1e-12


@dataclass(frozen=True)
class MeasurementBasis:
    n_atoms: int
    vectors: np.ndarray  # (dim, n_outcomes) orthonormal columns
    outcomes: np.ndarray  # (n_outcomes,) real values, ties allowed
    label: str = "custom"

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=complex)
        out = np.asarray(self.outcomes, dtype=float)
        if v.ndim != 2 or v.shape[1] != out.size:
            raise ValueError("one outcome value per basis vector required")
        if not np.all(np.isfinite(out)):
            raise ValueError("outcomes must be finite")
        gram_err = np.max(np.abs(v.conj().T @ v - np.eye(v.shape[1])))
        if gram_err > GRAM_TOL:
            raise ValueError(f"basis not orthonormal (err {gram_err:.2e})")
        v.setflags(write=False)
        out.setflags(write=False)
        object.__setattr__(self, "vectors", v)
        object.__setattr__(self, "outcomes", out)

    @property
    def dim(self):
        return self.vectors.shape[0]


@dataclass(frozen=True)
class OutcomeDistribution:
    outcomes: np.ndarray  # unique ascending values
    probs: np.ndarray

    def mean(self):
        return float(self.outcomes @ self.probs)

    def variance(self):
        mu = self.mean()
        return float((self.outcomes - mu) ** 2 @ self.probs)


def phase_generator_diag(n_atoms, dim):
    """Diagonal of Jz for the given backend dimension."""
    if dim == n_atoms + 1:
        return m_values(n_atoms)
    if dim == 2 ** n_atoms:
        idx = np.arange(dim)
        nup = np.zeros(dim)
        for b in range(n_atoms):
            nup += (idx >> b) & 1
        return nup - n_atoms / 2.0
    raise ValueError("basis dimension matches neither backend")


def basis_jy(n_atoms):
    """Excitation-resolved measurement along y: Jy eigenvectors, outcomes M."""
    u = rotation_matrix(n_atoms, "x", -np.pi / 2)  # maps Jz eigenbasis to Jy
    return MeasurementBasis(n_atoms, u, m_values(n_atoms), "jy_resolved")


def basis_jz(n_atoms):
    """Computational (excitation-number) measurement, outcomes M."""
    dim = n_atoms + 1
    return MeasurementBasis(n_atoms, np.eye(dim, dtype=complex),
                            m_values(n_atoms), "jz_resolved")


def basis_quadrature(n_atoms, beta):
    """Excitation-resolved measurement of the equatorial spin component
    cos(beta) Jx + sin(beta) Jy, outcomes M."""
    ux = rotation_matrix(n_atoms, "y", np.pi / 2)  # Jx eigenbasis
    dz = np.exp(-1j * beta * m_values(n_atoms))
    return MeasurementBasis(n_atoms, dz[:, None] * ux, m_values(n_atoms),
                            f"quadrature({beta:+.4f})")


def _parity_x_vectors(n_atoms):
    dim = n_atoms + 1
    vecs = np.zeros((dim, dim), dtype=complex)
    outs = np.zeros(dim)
    col = 0
    # symmetric/antisymmetric combinations of |M>, |-M>
    for i in range((dim + 1) // 2):
        jrev = dim - 1 - i
        if i == jrev:  # M = 0 column, even parity
            vecs[i, col] = 1.0
            outs[col] = 1.0
            col += 1
            continue
        vecs[i, col] = vecs[jrev, col] = 1.0 / np.sqrt(2.0)
        outs[col] = 1.0
        col += 1
        vecs[i, col] = 1.0 / np.sqrt(2.0)
        vecs[jrev, col] = -1.0 / np.sqrt(2.0)
        outs[col] = -1.0
        col += 1
    return vecs, outs


def basis_parity(n_atoms, quadrature="x"):
    """Parity measurements.

    "x": eigenbasis of Prod_k sigma_x^(k) (|M> -> |-M| exchange), outcomes +-1.
    "plus"/"minus": eigenbases of Prod_k (sigma_x +- sigma_y)/sqrt(2), realized
    by conjugating the x-parity basis with the diagonal rotation
    e^{-i(+-pi/4) Jz}.
    """
    vecs, outs = _parity_x_vectors(n_atoms)
    if quadrature == "x":
        return MeasurementBasis(n_atoms, vecs, outs, "parity_x")
    if quadrature not in ("plus", "minus"):
        raise ValueError("quadrature must be x, plus or minus")
    theta = np.pi / 4 if quadrature == "plus" else -np.pi / 4
    dz = np.exp(-1j * theta * m_values(n_atoms))
    return MeasurementBasis(n_atoms, dz[:, None] * vecs, outs,
                            f"parity_{quadrature}")


def basis_parity_quadrature(n_atoms, sign):
    """Parity measurement with the collective phase offset by -+ pi/4.

    Basis vectors are e^{-i theta Jz} (x-parity eigenvectors) with
    theta = sign * pi/(4 N), so the parity response of an N-atom GHZ state is
    cos(N phi - sign * pi/4): a genuine quadrature pair 90 degrees apart in
    the amplified phase N phi.  For N = 1 this is exactly the single-atom
    (sigma_x +- sigma_y)/sqrt(2) pair.
    """
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    vecs, outs = _parity_x_vectors(n_atoms)
    theta = sign * np.pi / (4.0 * n_atoms)
    dz = np.exp(-1j * theta * m_values(n_atoms))
    return MeasurementBasis(n_atoms, dz[:, None] * vecs, outs,
                            f"parity_quad({'+' if sign > 0 else '-'})")


def basis_phase_op(n_atoms):
    """Phase-operator measurement: N+1 pointer states, outcomes 2 pi k/(N+1)."""
    m = m_values(n_atoms)
    ks = m_values(n_atoms)  # same grid: unit steps, half-integer for odd N
    phis = 2.0 * np.pi * ks / (n_atoms + 1)
    vecs = np.exp(-1j * np.outer(m, phis)) / np.sqrt(n_atoms + 1)
    return MeasurementBasis(n_atoms, vecs, phis, "phase_op")


def basis_decoder(n_atoms, u_de, outcomes, label="decoder"):
    """Basis from the columns of a decoding unitary with supplied outcomes."""
    u = np.asarray(u_de, dtype=complex)
    err = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[1])))
    if err > GRAM_TOL:
        raise ValueError(f"decoder not unitary (err {err:.2e})")
    return MeasurementBasis(n_atoms, u, outcomes, label)


def decoded_basis(basis, u_de, label=None):
    """Left-compose a decoding unitary with an existing basis."""
    vecs = np.asarray(u_de, dtype=complex) @ basis.vectors
    return MeasurementBasis(basis.n_atoms, vecs, basis.outcomes,
                            label or f"decoded({basis.label})")


def group_outcomes(outcomes, tol=GROUP_TOL):
    """Indices grouping outcome values equal within tol.

    Returns (unique_values ascending, list of index arrays).
    """
    order = np.argsort(outcomes, kind="stable")
    groups = []
    values = []
    for idx in order:
        if values and abs(outcomes[idx] - values[-1]) <= tol:
            groups[-1].append(idx)
        else:
            values.append(outcomes[idx])
            groups.append([idx])
    return np.array(values), [np.array(g) for g in groups]


def raw_probabilities(state, basis, phi):
    """Per-vector probabilities |<mu|U_phi|state>|^2 (no grouping)."""
    mdiag = phase_generator_diag(basis.n_atoms, basis.dim)
    phases = np.exp(-1j * phi * mdiag)
    if isinstance(state, DickeVector):
        if state.amps.size != basis.dim:
            raise ValueError("state/basis dimension mismatch")
        amps = basis.vectors.conj().T @ (phases * state.amps)
        return np.abs(amps) ** 2
    rho = np.asarray(state, dtype=complex)
    if rho.shape != (basis.dim, basis.dim):
        raise ValueError("state/basis dimension mismatch")
    rot = phases[:, None] * rho * phases.conj()[None, :]
    return np.einsum("ik,ij,jk->k", basis.vectors.conj(), rot,
                     basis.vectors).real


def outcome_distribution(state, basis, phi=0.0):
    """Grouped conditional distribution p(mu | phi) after phase encoding."""
    p = raw_probabilities(state, basis, phi)
    total = p.sum()
    if not (1 - 1e-9 <= total <= 1 + 1e-9):
        raise ValueError(f"probabilities sum to {total!r}; basis incomplete?")
    if np.min(p) < -PROB_CLAMP:
        raise ValueError("negative probability beyond roundoff")
    p = np.clip(p, 0.0, None)
    values, groups = group_outcomes(basis.outcomes)
    gp = np.array([p[g].sum() for g in groups])
    return OutcomeDistribution(values, gp / gp.sum())


def sample(dist, r, seed):
    """r inverse-CDF draws; deterministic for a fixed seed."""
    if r < 1:
        raise ValueError("need at least one draw")
    rng = np.random.Generator(np.random.Philox(seed))
    cdf = np.cumsum(dist.probs)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, rng.random(r), side="right")
    return dist.outcomes[np.minimum(idx, dist.outcomes.size - 1)]


def stream_rng(seed, stream):
    """Counter-based per-stream generator derived from (seed, stream)."""
    return np.random.Generator(np.random.Philox(key=seed + (1 << 32) * stream))
