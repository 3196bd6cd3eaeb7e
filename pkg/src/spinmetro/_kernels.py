"""Hot numeric inner loops.

Every kernel here is numba-jitted when available and falls back to the same
source (or a vectorized numpy twin) otherwise; see `accel`.  Kernels take only
plain arrays / scalars so both paths stay bit-compatible in structure.
"""

import numpy as np

from .accel import USING_NUMBA, maybe_jit

_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0  # golden ratio step
_LOG_FLOOR = 1e-300


@maybe_jit(cache=True)
def neg_loglike_scan(logp, counts):
    """Coarse MLE scan: logp (n_phi, n_out), counts (trials, n_out).

    Returns (trials,) argmax indices of the log-likelihood over the phi grid.
    """
    n_phi = logp.shape[0]
    trials = counts.shape[0]
    out = np.empty(trials, dtype=np.int64)
    ll = counts @ logp.T  # (trials, n_phi)
    for t in range(trials):
        best = 0
        bestv = ll[t, 0]
        for i in range(1, n_phi):
            if ll[t, i] > bestv:
                bestv = ll[t, i]
                best = i
        out[t] = best
    return out


@maybe_jit(cache=True)
def loglike_at(G, mvals, group_idx, n_groups, counts_row, phi):
    """Log-likelihood of grouped outcome counts at a single phase.

    G: (n_vec, dim) rows conj(U)_k * psi; group_idx maps basis vectors to
    outcome groups; counts_row: (n_groups,) observed counts.
    """
    amps = G @ np.exp(-1j * phi * mvals)
    p = np.zeros(n_groups)
    for k in range(amps.shape[0]):
        p[group_idx[k]] += amps[k].real ** 2 + amps[k].imag ** 2
    total = 0.0
    for g in range(n_groups):
        if counts_row[g] > 0:
            pg = p[g]
            if pg < _LOG_FLOOR:
                pg = _LOG_FLOOR
            total += counts_row[g] * np.log(pg)
    return total


@maybe_jit(cache=True)
def golden_refine(G, mvals, group_idx, n_groups, counts, lo_arr, hi_arr, tol):
    """Golden-section refinement of per-trial likelihood maxima."""
    trials = counts.shape[0]
    est = np.empty(trials)
    for t in range(trials):
        a = lo_arr[t]
        b = hi_arr[t]
        c = b - _INVPHI * (b - a)
        d = a + _INVPHI * (b - a)
        fc = loglike_at(G, mvals, group_idx, n_groups, counts[t], c)
        fd = loglike_at(G, mvals, group_idx, n_groups, counts[t], d)
        while b - a > tol:
            if fc > fd:
                b = d
                d = c
                fd = fc
                c = b - _INVPHI * (b - a)
                fc = loglike_at(G, mvals, group_idx, n_groups, counts[t], c)
            else:
                a = c
                c = d
                fc = fd
                d = a + _INVPHI * (b - a)
                fd = loglike_at(G, mvals, group_idx, n_groups, counts[t], d)
        est[t] = 0.5 * (a + b)
    return est


@maybe_jit(cache=True)
def servo_loop_modes(phi_free, ybar, probs_table, phi_lo, dphi, u, est_table,
                     phi_grid, est_mode, gain, omega0_t, delta2_init,
                     ema_lam):
    """Sequential clock feedback loop.

    phi_free: per-cycle free-running interrogation phase (rad);
    ybar: per-cycle mean free-running fractional frequency;
    probs_table: (n_grid, n_out) outcome probabilities on a uniform phi grid;
    u: per-cycle uniforms; est_table: outcome index -> SME phase estimate;
    phi_grid: grid for the in-loop MMSE posterior; omega0_t = omega0 * T;
    est_mode: 0 = SME, 1 = MMSE with tracked prior width, 2 = ideal.

    Returns (phi_true, phi_est, correction, resid_y, slip_flag).
    """
    cycles = phi_free.shape[0]
    n_grid = probs_table.shape[0]
    n_out = probs_table.shape[1]
    phi_true = np.empty(cycles)
    phi_est = np.empty(cycles)
    corr = np.empty(cycles)
    resid = np.empty(cycles)
    y_off = 0.0
    delta2 = delta2_init
    slip_run = 0
    slipped = False
    for k in range(cycles):
        phi = phi_free[k] + omega0_t * y_off
        phi_true[k] = phi
        resid[k] = ybar[k] + y_off
        if est_mode == 2:
            est = phi
        else:
            # linear interpolation row of the outcome distribution
            f = (phi - phi_lo) / dphi
            if f < 0.0:
                f = 0.0
            if f > n_grid - 1.000001:
                f = n_grid - 1.000001
            i0 = int(f)
            w = f - i0
            # inverse-CDF draw
            total = 0.0
            for j in range(n_out):
                total += ((1.0 - w) * probs_table[i0, j]
                          + w * probs_table[i0 + 1, j])
            target = u[k] * total
            acc = 0.0
            out = n_out - 1
            for j in range(n_out):
                acc += ((1.0 - w) * probs_table[i0, j]
                        + w * probs_table[i0 + 1, j])
                if acc >= target:
                    out = j
                    break
            if est_mode == 1:
                num = 0.0
                den = 0.0
                inv2d2 = 0.5 / delta2
                for g in range(phi_grid.shape[0]):
                    pw = probs_table[g, out] * np.exp(
                        -phi_grid[g] * phi_grid[g] * inv2d2)
                    num += phi_grid[g] * pw
                    den += pw
                est = num / den if den > 0.0 else 0.0
            else:
                est = est_table[out]
        phi_est[k] = est
        dy = gain * est / omega0_t
        y_off -= dy
        corr[k] = -dy
        delta2 = ema_lam * delta2 + (1.0 - ema_lam) * phi * phi
        if np.sqrt(delta2) > np.pi:
            slip_run += 1
            if slip_run >= 100:
                slipped = True
        else:
            slip_run = 0
    return phi_true, phi_est, corr, resid, slipped


@maybe_jit(cache=True)
def _allan_overlap_jit(y, ms, tau0):
    n = y.shape[0]
    c = np.zeros(n + 1)
    for i in range(n):
        c[i + 1] = c[i] + y[i]
    avar = np.empty(ms.shape[0])
    nterm = np.empty(ms.shape[0], dtype=np.int64)
    for im in range(ms.shape[0]):
        m = ms[im]
        k = n - 2 * m + 1
        if k < 1:
            avar[im] = np.nan
            nterm[im] = 0
            continue
        s = 0.0
        for j in range(k):
            d = c[j + 2 * m] - 2.0 * c[j + m] + c[j]
            s += d * d
        avar[im] = s / (2.0 * m * m * k)
        nterm[im] = k
    return avar, nterm


def _allan_overlap_numpy(y, ms, tau0):
    n = y.shape[0]
    c = np.concatenate(([0.0], np.cumsum(y)))
    avar = np.empty(ms.shape[0])
    nterm = np.empty(ms.shape[0], dtype=np.int64)
    for im, m in enumerate(ms):
        k = n - 2 * m + 1
        if k < 1:
            avar[im] = np.nan
            nterm[im] = 0
            continue
        d = c[2 * m:2 * m + k] - 2.0 * c[m:m + k] + c[:k]
        avar[im] = np.dot(d, d) / (2.0 * m * m * k)
        nterm[im] = k
    return avar, nterm


def allan_overlap(y, ms, tau0=1.0):
    """Overlapping Allan variance of a fractional-frequency series.

    y: samples averaged over tau0; ms: integer averaging factors.
    Returns (avar, n_terms) per m.
    """
    y = np.ascontiguousarray(y, dtype=np.float64)
    ms = np.ascontiguousarray(ms, dtype=np.int64)
    if USING_NUMBA:
        return _allan_overlap_jit(y, ms, tau0)
    return _allan_overlap_numpy(y, ms, tau0)
