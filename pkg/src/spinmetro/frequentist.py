"""Frequentist estimation: sample-mean and maximum-likelihood estimators,
Monte Carlo estimation experiments, Fisher information, and the Wineland
squeezing parameter.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .measurement import (MeasurementBasis, group_outcomes,
                          outcome_distribution, raw_probabilities, stream_rng)
from .spincore import DickeVector, collective_op, rotate

FD_STEP = 1e-5
PROB_FLOOR = 1e-14
MLE_COARSE_POINTS = 1024
MLE_TOL = 1e-8


@dataclass(frozen=True)
class ResponseCurve:
    """Mean and variance of the measured observable vs encoded phase."""

    phi_grid: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    monotone_interval: tuple

    def monotone_slice(self):
        lo, hi = self.monotone_interval
        sel = (self.phi_grid >= lo - 1e-15) & (self.phi_grid <= hi + 1e-15)
        return self.phi_grid[sel], self.mean[sel]


@dataclass(frozen=True)
class SmeEstimate:
    phi: float
    railed: bool


@dataclass(frozen=True)
class MleEstimate:
    phi: float
    ambiguous: bool


@dataclass(frozen=True)
class EstimationExperiment:
    state: DickeVector
    basis: MeasurementBasis
    estimator: str  # "sme" or "mle"
    phi_true: np.ndarray
    repetitions: int
    trials: int
    seed: int
    search_interval: tuple = None
    curve_points: int = 801

    def __post_init__(self):
        if self.repetitions < 1 or self.trials < 1:
            raise ValueError("repetitions and trials must be >= 1")
        if self.estimator not in ("sme", "mle"):
            raise ValueError("estimator must be 'sme' or 'mle'")


@dataclass(frozen=True)
class EstimationStats:
    """Per-phase Monte Carlo error decomposition: mse = bias^2 + variance."""

    phi_true: np.ndarray
    mse: np.ndarray
    bias: np.ndarray
    variance: np.ndarray
    mse_stderr: np.ndarray
    railed_fraction: np.ndarray


def response_curve(state, basis, phi_grid):
    """Mean/variance of the measured observable over an ascending phi grid."""
    phi_grid = np.asarray(phi_grid, dtype=float)
    if np.any(np.diff(phi_grid) <= 0):
        raise ValueError("phi grid must ascend")
    means = np.empty(phi_grid.size)
    vars_ = np.empty(phi_grid.size)
    for i, phi in enumerate(phi_grid):
        d = outcome_distribution(state, basis, phi)
        means[i] = d.mean()
        vars_[i] = d.variance()
    lo_i, hi_i = _longest_monotone_run(means)
    return ResponseCurve(phi_grid, means, vars_,
                         (float(phi_grid[lo_i]), float(phi_grid[hi_i])))


def _longest_monotone_run(means):
    diffs = np.sign(np.diff(means))
    best = (0, 0)
    start = 0
    cur_sign = 0.0
    for i, s in enumerate(diffs):
        if s == 0 or (cur_sign != 0 and s != cur_sign):
            start = i
            cur_sign = s
        elif cur_sign == 0:
            cur_sign = s
        if i + 1 - start > best[1] - best[0]:
            best = (start, i + 1)
    return best


def sme(outcomes, curve):
    """Invert the response at the sample mean on the monotone interval."""
    grid, mean = curve.monotone_slice()
    if mean.size < 2:
        raise ValueError("response has no monotone interval")
    target = float(np.mean(outcomes))
    ascending = mean[-1] >= mean[0]
    xs = mean if ascending else mean[::-1]
    ys = grid if ascending else grid[::-1]
    railed = target <= xs[0] or target >= xs[-1]
    return SmeEstimate(float(np.interp(target, xs, ys)), bool(railed))


def _phi_derivative(func, phi, h=FD_STEP):
    """Central difference with one Richardson refinement step."""
    d1 = (func(phi + h) - func(phi - h)) / (2 * h)
    d2 = (func(phi + h / 2) - func(phi - h / 2)) / h
    return (4.0 * d2 - d1) / 3.0


def sme_variance(state, basis, phi):
    """Single-repetition estimator variance r*Delta^2 from error propagation."""
    def mean_at(p):
        return outcome_distribution(state, basis, p).mean()

    slope = _phi_derivative(mean_at, phi)
    if abs(slope) < 1e-10:
        return float("inf")
    return outcome_distribution(state, basis, phi).variance() / slope ** 2


def _grouped_prob_table(state, basis, phis):
    """(n_phi, n_groups) grouped probabilities over a phase grid."""
    values, groups = group_outcomes(basis.outcomes)
    table = np.empty((len(phis), len(groups)))
    for i, phi in enumerate(phis):
        p = np.clip(raw_probabilities(state, basis, phi), 0.0, None)
        table[i] = [p[g].sum() for g in groups]
    return values, groups, table


def _mle_kernel_args(state, basis):
    g_mat = basis.vectors.conj().T * state.amps[None, :]
    values, groups = group_outcomes(basis.outcomes)
    group_idx = np.empty(basis.outcomes.size, dtype=np.int64)
    for gi, g in enumerate(groups):
        group_idx[g] = gi
    from .measurement import phase_generator_diag

    mvals = phase_generator_diag(basis.n_atoms, basis.dim).astype(complex)
    return g_mat, mvals, group_idx, len(groups), values


def mle(outcomes, state, basis, search_interval):
    """Maximum-likelihood estimate over a search interval.

    Coarse 1024-point scan plus golden-section refinement to 1e-8; near-ties
    of the global maximum are resolved toward the interval center and flagged.
    """
    lo, hi = search_interval
    g_mat, mvals, group_idx, n_groups, values = _mle_kernel_args(state, basis)
    counts = _counts_from_outcomes(outcomes, values)
    grid = np.linspace(lo, hi, MLE_COARSE_POINTS)
    ll = np.array([
        _kernels.loglike_at(g_mat, mvals, group_idx, n_groups, counts, p)
        for p in grid])
    step = grid[1] - grid[0]
    # refine every coarse local maximum near the global one
    best_idx = int(np.argmax(ll))
    cand_idx = [best_idx]
    for i in range(1, grid.size - 1):
        if ll[i] >= ll[i - 1] and ll[i] >= ll[i + 1] and i != best_idx:
            cand_idx.append(i)
    refined = []
    for i in cand_idx:
        a = max(lo, grid[i] - step)
        b = min(hi, grid[i] + step)
        est = _kernels.golden_refine(
            g_mat, mvals, group_idx, n_groups, counts[None, :],
            np.array([a]), np.array([b]), MLE_TOL)[0]
        val = _kernels.loglike_at(g_mat, mvals, group_idx, n_groups, counts,
                                  est)
        refined.append((val, est))
    refined.sort(key=lambda t: -t[0])
    top_val = refined[0][0]
    ties = [est for val, est in refined if top_val - val <= 1e-9]
    center = 0.5 * (lo + hi)
    phi_hat = min(ties, key=lambda e: abs(e - center))
    return MleEstimate(float(phi_hat), len(ties) > 1)


def _counts_from_outcomes(outcomes, values):
    counts = np.zeros(values.size)
    for mu in np.atleast_1d(outcomes):
        gi = int(np.argmin(np.abs(values - mu)))
        if abs(values[gi] - mu) > 1e-6:
            raise ValueError(f"outcome {mu!r} not produced by this basis")
        counts[gi] += 1
    return counts


def fisher_information(state, basis, phi):
    """Classical FI of the grouped outcome distribution at phi.

    Derivatives by central difference (1e-5) with one Richardson step;
    outcome groups with probability below 1e-14 are dropped.
    """
    def grouped(p):
        probs = np.clip(raw_probabilities(state, basis, p), 0.0, None)
        _, groups = group_outcomes(basis.outcomes)
        return np.array([probs[g].sum() for g in groups])

    p0 = grouped(phi)
    h = FD_STEP
    d1 = (grouped(phi + h) - grouped(phi - h)) / (2 * h)
    d2 = (grouped(phi + h / 2) - grouped(phi - h / 2)) / h
    dp = (4.0 * d2 - d1) / 3.0
    keep = p0 > PROB_FLOOR
    return float(np.sum(dp[keep] ** 2 / p0[keep]))


def wineland_xi2(state):
    """Wineland spin-squeezing parameter N*Var_min/<J>^2.

    The state is rotated so its mean spin points along +x and the minimal
    transverse variance is found by diagonalizing the (Jy, Jz) covariance.
    Returns NaN when the mean spin vanishes.
    """
    n = state.n_atoms
    j = {ax: collective_op(n, "j" + ax) for ax in "xyz"}
    from .spincore import expectation, variance

    jvec = np.array([expectation(state, j[ax]) for ax in "xyz"])
    norm = np.linalg.norm(jvec)
    if norm < 1e-12:
        return float("nan")
    azimuth = np.arctan2(jvec[1], jvec[0])
    s1 = rotate(state, "z", -azimuth)
    rho = np.hypot(jvec[0], jvec[1])
    alpha = np.arctan2(jvec[2], rho)
    s2 = rotate(s1, "y", alpha)
    psi = s2.amps
    yv = j["y"].matrix @ psi
    zv = j["z"].matrix @ psi
    my = float(np.vdot(psi, yv).real)
    mz = float(np.vdot(psi, zv).real)
    vyy = float(np.vdot(yv, yv).real) - my ** 2
    vzz = float(np.vdot(zv, zv).real) - mz ** 2
    vyz = float(np.vdot(yv, zv).real) - my * mz
    lam_min = 0.5 * (vyy + vzz) - np.sqrt(0.25 * (vyy - vzz) ** 2 + vyz ** 2)
    return float(n * max(lam_min, 0.0) / norm ** 2)


def is_entangled_by_xi2(xi2, roundoff=1e-9):
    """xi^2 < 1 witnesses entanglement (guarded against roundoff at 1)."""
    return bool(np.isfinite(xi2) and xi2 < 1.0 - roundoff)


def run_experiment(cfg):
    """Monte Carlo estimation experiment.

    For each true phase: trials x repetitions sampled outcomes, estimator
    applied per trial, errors decomposed into bias^2 + variance.  Railed SME
    trials are kept in the averages.  Per-phase RNG streams derive from
    (seed, phase index).
    """
    phis = np.atleast_1d(np.asarray(cfg.phi_true, dtype=float))
    if cfg.estimator == "sme":
        if cfg.search_interval is not None:
            lo, hi = cfg.search_interval
            grid = np.linspace(lo, hi, cfg.curve_points)
            curve = response_curve(cfg.state, cfg.basis, grid)
        else:
            # scan widely, invert on the monotone run around the phase range
            scan = response_curve(cfg.state, cfg.basis,
                                  np.linspace(-np.pi, np.pi, 1601))
            lo, hi = _monotone_run_containing(scan, float(np.median(phis)))
            curve = response_curve(cfg.state, cfg.basis,
                                   np.linspace(lo, hi, cfg.curve_points))
        xs, ys = _sme_inversion_table(curve)
    else:
        if cfg.search_interval is None:
            raise ValueError("mle experiments need a search interval")
        g_mat, mvals, group_idx, n_groups, values = _mle_kernel_args(
            cfg.state, cfg.basis)
        coarse = np.linspace(cfg.search_interval[0], cfg.search_interval[1],
                             MLE_COARSE_POINTS)
        logp = np.empty((MLE_COARSE_POINTS, n_groups))
        for i, p in enumerate(coarse):
            probs = np.clip(raw_probabilities(cfg.state, cfg.basis, p), 0.0,
                            None)
            _, groups = group_outcomes(cfg.basis.outcomes)
            gp = np.array([probs[g].sum() for g in groups])
            logp[i] = np.log(np.maximum(gp, 1e-300))

    mse = np.empty(phis.size)
    bias = np.empty(phis.size)
    var = np.empty(phis.size)
    mse_se = np.empty(phis.size)
    railed = np.zeros(phis.size)
    for i, phi in enumerate(phis):
        dist = outcome_distribution(cfg.state, cfg.basis, phi)
        rng = stream_rng(cfg.seed, i)
        counts = rng.multinomial(cfg.repetitions, dist.probs,
                                 size=cfg.trials).astype(float)
        if cfg.estimator == "sme":
            means = counts @ dist.outcomes / cfg.repetitions
            est = np.interp(means, xs, ys)
            railed[i] = float(np.mean((means <= xs[0]) | (means >= xs[-1])))
        else:
            full_counts = _expand_counts(counts, dist.outcomes, values)
            idx = _kernels.neg_loglike_scan(logp, full_counts)
            step = coarse[1] - coarse[0]
            lo_arr = np.maximum(coarse[idx] - step, cfg.search_interval[0])
            hi_arr = np.minimum(coarse[idx] + step, cfg.search_interval[1])
            est = _kernels.golden_refine(g_mat, mvals, group_idx, n_groups,
                                         full_counts, lo_arr, hi_arr, MLE_TOL)
        err = est - phi
        mse[i] = float(np.mean(err ** 2))
        bias[i] = float(np.mean(err))
        var[i] = float(np.var(est))
        mse_se[i] = float(np.std(err ** 2) / np.sqrt(cfg.trials))
    return EstimationStats(phis, mse, bias, var, mse_se, railed)


def _monotone_run_containing(curve, x0):
    """Bounds of the monotone run of the response that contains x0."""
    grid, mean = curve.phi_grid, curve.mean
    sign = np.sign(np.diff(mean))
    k = int(np.clip(np.searchsorted(grid, x0) - 1, 0, sign.size - 1))
    s = sign[k] if sign[k] != 0 else 1.0
    lo = k
    while lo > 0 and sign[lo - 1] == s:
        lo -= 1
    hi = k
    while hi < sign.size - 1 and sign[hi + 1] == s:
        hi += 1
    return float(grid[lo]), float(grid[hi + 1])


def _sme_inversion_table(curve):
    grid, mean = curve.monotone_slice()
    if mean[-1] >= mean[0]:
        return mean, grid
    return mean[::-1], grid[::-1]


def _expand_counts(counts, dist_outcomes, basis_values):
    """Map multinomial counts over distribution outcomes onto basis groups."""
    col = np.array([int(np.argmin(np.abs(basis_values - v)))
                    for v in dist_outcomes])
    full = np.zeros((counts.shape[0], basis_values.size))
    full[:, col] = counts
    return full
