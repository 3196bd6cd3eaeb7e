"""Local-oscillator noise synthesis, clock feedback servo, Allan analysis.

Fractional-frequency noise y(t) with power-law PSD S(f) = h_alpha f^(-1-alpha)
drives a Ramsey-style loop: integrate the detuning over the interrogation
window, sample one measurement outcome from the sensor at that phase,
estimate, and steer the oscillator with a single-pole integrator.  The servo
loop is the hottest kernel in the package (see `_kernels.servo_loop`).
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import welch

from . import _kernels
from .accel import USING_NUMBA
from .bayes import SensorDesign, likelihood_table
from .frequentist import _monotone_run_containing, response_curve

MAX_SAMPLES = 2 ** 24
PHI_GRID_POINTS = 4097
EMA_HALF_LIFE = 50.0


@dataclass(frozen=True)
class OscillatorNoiseSpec:
    """Power-law fractional-frequency noise: S_y(f) = h_alpha * f^(-1-alpha)."""

    alpha: int  # -1 white FM, 0 flicker FM, +1 random-walk FM
    h_alpha: float
    sample_rate: float

    def __post_init__(self):
        if self.alpha not in (-1, 0, 1):
            raise ValueError("alpha must be -1, 0 or +1")
        if self.h_alpha <= 0 or self.sample_rate <= 0:
            raise ValueError("h_alpha and sample_rate must be positive")


@dataclass(frozen=True)
class ClockConfig:
    omega0: float
    interrogation: float
    dead_time: float
    gain: float
    cycles: int
    sensor: SensorDesign = None  # unused by the "ideal" estimator
    estimator: str = "sme"  # sme | mmse | ideal
    seed: int = 0
    initial_offset: float = 0.0  # startup LO fractional-frequency detuning

    def __post_init__(self):
        if self.interrogation <= 0 or self.dead_time < 0:
            raise ValueError("need T > 0 and T_D >= 0")
        if not 0 < self.gain < 2:
            raise ValueError("integrator gain must lie in (0, 2)")
        if self.estimator not in ("sme", "mmse", "ideal"):
            raise ValueError("estimator must be sme, mmse or ideal")

    @property
    def cycle_time(self):
        return self.interrogation + self.dead_time


@dataclass(frozen=True)
class AllanSeries:
    tau: np.ndarray
    sigma_y: np.ndarray
    rel_stderr: np.ndarray
    n_terms: np.ndarray


@dataclass(frozen=True)
class ServoRecord:
    config: ClockConfig
    phi_true: np.ndarray
    phi_estimate: np.ndarray
    correction: np.ndarray
    residual_y: np.ndarray
    slipped: bool


def synthesize_noise(spec, duration, seed):
    """Fractional-frequency series with the requested one-sided PSD.

    Spectral shaping of unit-variance white Gaussian samples; deterministic
    per seed; the DC bin is zeroed.
    """
    n = int(round(duration * spec.sample_rate))
    if n > MAX_SAMPLES:
        raise ValueError(f"{n} samples exceed the 2^24 cap")
    if n < 2:
        raise ValueError("duration too short for the sample rate")
    rng = np.random.Generator(np.random.Philox(seed))
    x = rng.standard_normal(n)
    spectrum = np.fft.rfft(x)
    f = np.fft.rfftfreq(n, 1.0 / spec.sample_rate)
    shape = np.zeros_like(f)
    nonzero = f > 0
    target = spec.h_alpha * f[nonzero] ** (-1.0 - spec.alpha)
    white = 2.0 / spec.sample_rate  # one-sided PSD of unit-variance samples
    shape[nonzero] = np.sqrt(target / white)
    return np.fft.irfft(spectrum * shape, n)


def welch_psd_slope(y, sample_rate, nperseg=None):
    """Log-log PSD slope fit (oracle for the synthesis exponent -1-alpha)."""
    f, pxx = welch(y, fs=sample_rate, nperseg=nperseg or min(len(y) // 8,
                                                             1 << 14))
    keep = (f > 0) & (pxx > 0)
    # drop the lowest octave (window leakage) and the top octave (aliasing)
    f, pxx = f[keep], pxx[keep]
    lo, hi = f[0] * 4, f[-1] / 4
    sel = (f >= lo) & (f <= hi)
    slope, intercept = np.polyfit(np.log(f[sel]), np.log(pxx[sel]), 1)
    return slope, np.exp(intercept)


def allan_deviation(y, tau0, max_fraction=3):
    """Overlapping Allan deviation on octave-spaced averaging factors."""
    y = np.asarray(y, dtype=float)
    ms = []
    m = 1
    while m <= y.size // max_fraction:
        ms.append(m)
        m *= 2
    if not ms:
        raise ValueError("series too short for Allan analysis")
    avar, nterm = _kernels.allan_overlap(y, np.array(ms, dtype=np.int64))
    ms = np.array(ms, dtype=float)
    return AllanSeries(ms * tau0, np.sqrt(avar),
                       1.0 / np.sqrt(np.maximum(nterm, 1)),
                       nterm)


def instability_prediction(omega0, interrogation, dead_time, delta_phi, tau):
    """sigma_y(tau) = (Delta_phi / (omega0 T)) sqrt((T + T_D) / tau)."""
    tau = np.asarray(tau, dtype=float)
    return (delta_phi / (omega0 * interrogation)) * np.sqrt(
        (interrogation + dead_time) / tau)


def _sensor_tables(design, omega0_t):
    """Outcome-probability and SME-inversion tables on a phi grid."""
    grid = np.linspace(-np.pi, np.pi, PHI_GRID_POINTS)
    values, gp = likelihood_table(design, grid)
    probs_table = np.ascontiguousarray(gp.T)  # (n_grid, n_out)
    curve = response_curve(design.state, design.basis,
                           np.linspace(-np.pi, np.pi, 1601))
    lo, hi = _monotone_run_containing(curve, 0.0)
    fine = response_curve(design.state, design.basis,
                          np.linspace(lo, hi, 801))
    mean, phis = fine.mean, fine.phi_grid
    if mean[-1] < mean[0]:
        mean, phis = mean[::-1], phis[::-1]
    est_table = np.interp(values, mean, phis,
                          left=phis[0], right=phis[-1])
    return grid, probs_table, est_table


def _servo_numpy(phi_free, ybar, probs_table, phi_lo, dphi, u, est_table,
                 phi_grid, est_mode, gain, omega0_t, delta2_init, ema_lam):
    cycles = phi_free.size
    n_grid = probs_table.shape[0]
    phi_true = np.empty(cycles)
    phi_est = np.empty(cycles)
    corr = np.empty(cycles)
    resid = np.empty(cycles)
    y_off = 0.0
    delta2 = delta2_init
    slip_run = 0
    slipped = False
    cdf_cache = np.cumsum(probs_table, axis=1)
    for k in range(cycles):
        phi = phi_free[k] + omega0_t * y_off
        phi_true[k] = phi
        resid[k] = ybar[k] + y_off
        f = np.clip((phi - phi_lo) / dphi, 0.0, n_grid - 1.000001)
        i0 = int(f)
        w = f - i0
        cdf = (1.0 - w) * cdf_cache[i0] + w * cdf_cache[i0 + 1]
        out = int(np.searchsorted(cdf, u[k] * cdf[-1]))
        out = min(out, est_table.size - 1)
        if est_mode == 1:
            pw = ((1.0 - w) * probs_table[i0, out]
                  + w * probs_table[i0 + 1, out])
            like = probs_table[:, out]
            post = like * np.exp(-0.5 * phi_grid ** 2 / delta2)
            den = post.sum()
            est = float((post @ phi_grid) / den) if den > 0 else 0.0
        elif est_mode == 2:
            est = phi
        else:
            est = est_table[out]
        phi_est[k] = est
        dy = gain * est / omega0_t
        y_off -= dy
        corr[k] = -dy
        delta2 = ema_lam * delta2 + (1.0 - ema_lam) * phi * phi
        if np.sqrt(delta2) > np.pi:
            slip_run += 1
            slipped = slipped or slip_run >= 100
        else:
            slip_run = 0
    return phi_true, phi_est, corr, resid, slipped


def run_servo(cfg, noise_spec, return_noise=False):
    """Simulate the closed feedback loop cycle by cycle.

    Per cycle: integrate the free-running detuning over the interrogation
    window (trapezoid at the noise sample rate), draw one measurement
    outcome at that phase, estimate, and apply -gain * estimate / T to the
    oscillator frequency.  Dead time accrues no measurement.  The residual
    series is the steered fractional frequency averaged per cycle.
    """
    fs = noise_spec.sample_rate
    n_t = int(round(cfg.interrogation * fs))
    if n_t < 16:
        raise ValueError("sample_rate must resolve the interrogation window "
                         "(>= 16 samples per T)")
    n_cyc = int(round(cfg.cycle_time * fs))
    total = cfg.cycles * n_cyc + 1
    y = synthesize_noise(noise_spec, total / fs, cfg.seed)
    dt = 1.0 / fs
    ctrap = np.concatenate(([0.0], np.cumsum(0.5 * (y[:-1] + y[1:]) * dt)))
    starts = np.arange(cfg.cycles) * n_cyc
    phi_free = cfg.omega0 * (ctrap[starts + n_t] - ctrap[starts])
    ybar = (ctrap[starts + n_cyc] - ctrap[starts]) / cfg.cycle_time
    if cfg.initial_offset:
        phi_free = phi_free + cfg.omega0 * cfg.interrogation * cfg.initial_offset
        ybar = ybar + cfg.initial_offset
    omega0_t = cfg.omega0 * cfg.interrogation

    if cfg.estimator == "ideal":
        grid = np.linspace(-np.pi, np.pi, 3)
        probs_table = np.ones((3, 1))
        est_table = np.zeros(1)
        est_mode = 2
    else:
        grid, probs_table, est_table = _sensor_tables(cfg.sensor, omega0_t)
        est_mode = 1 if cfg.estimator == "mmse" else 0
    rng = np.random.Generator(np.random.Philox(cfg.seed + (1 << 40)))
    u = rng.random(cfg.cycles)
    ema_lam = 0.5 ** (1.0 / EMA_HALF_LIFE)
    delta2_init = max(np.var(phi_free[:min(200, cfg.cycles)]), 1e-12)
    args = (phi_free, ybar, probs_table, grid[0],
            grid[1] - grid[0] if grid.size > 1 else 1.0, u, est_table, grid,
            est_mode, cfg.gain, omega0_t, delta2_init, ema_lam)
    loop = _kernels.servo_loop_modes if USING_NUMBA else _servo_numpy
    phi_true, phi_est, corr, resid, slipped = loop(*args)
    rec = ServoRecord(cfg, phi_true, phi_est, corr, resid, bool(slipped))
    if return_noise:
        return rec, y
    return rec


def residual_allan(record):
    return allan_deviation(record.residual_y, record.config.cycle_time)


def stationary_prior_width(noise_spec, interrogation, dead_time, gain,
                           cycles=20000, omega0=1.0e6, seed=1):
    """Measured variance of the pre-correction phase in the locked regime.

    Uses the noise-free in-loop estimator so the width reflects the
    oscillator and feedback dynamics alone; the second half of the run is
    used.  Raises if the loop never locks (slip flag).
    """
    cfg = ClockConfig(omega0, interrogation, dead_time, gain, cycles,
                      estimator="ideal", seed=seed)
    rec = run_servo(cfg, noise_spec)
    if rec.slipped:
        raise RuntimeError("servo did not lock (phase slips)")
    half = rec.phi_true[cycles // 2:]
    return float(np.var(half))


def prior_width_exponent(noise_spec, t_grid, dead_time, gain, **kw):
    """Log-log slope of the stationary prior width vs interrogation time."""
    widths = [stationary_prior_width(noise_spec, t, dead_time, gain, **kw)
              for t in t_grid]
    slope = np.polyfit(np.log(np.asarray(t_grid)), np.log(widths), 1)[0]
    return float(slope), np.asarray(widths)


def lo_coherence_time(noise_spec, omega0, interrogation, duration=None,
                      seed=12345):
    """T_C solving sigma_y,LO(T_C) * 2 pi omega0 (T + T_C) = 1 rad.

    The free-running Allan deviation is measured on a synthesized series and
    interpolated; the condition is solved by bisection on the octave grid.
    """
    fs = noise_spec.sample_rate
    duration = duration or (1 << 22) / fs
    y = synthesize_noise(noise_spec, duration, seed)
    series = allan_deviation(y, 1.0 / fs)

    def value(tc):
        sig = np.interp(np.log(tc), np.log(series.tau),
                        np.log(series.sigma_y))
        return np.exp(sig) * 2.0 * np.pi * omega0 * (interrogation + tc) - 1.0

    # the condition can dip below 1 before dephasing takes over; the
    # coherence time is the crossing on the rising branch
    vals = np.array([value(t) for t in series.tau])
    imin = int(np.argmin(vals))
    if vals[imin] > 0:
        return float(series.tau[0])  # LO loses coherence within one bin
    rising = np.where(vals[imin:] > 0)[0]
    if rising.size == 0:
        raise ValueError("LO keeps coherence beyond the synthesized span; "
                         "increase duration")
    hi = series.tau[imin + rising[0]]
    lo = series.tau[imin + rising[0] - 1]
    flo = value(lo)
    for _ in range(200):
        mid = np.sqrt(lo * hi)
        if value(mid) * flo <= 0:
            hi = mid
        else:
            lo, flo = mid, value(mid)
        if hi / lo < 1 + 1e-10:
            break
    return float(np.sqrt(lo * hi))
