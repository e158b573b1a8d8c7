//! Steady-state displacement spectrum of the collapse-modified oscillator.
//!
//! `S(ω)` here is two-sided: ⟨x²⟩ = ∫ S(ω) dω/2π over the whole real line.
//! The one-sided density per Hz used in output files is 2·S(ω) at ω ≥ 0.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_positive, Error, Result};
use crate::models::{LinearizedDynamics, PhysicalConstants};

const PARALLEL_THRESHOLD: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumParams {
    pub dynamics: LinearizedDynamics,
    /// kg
    pub mass: f64,
    /// Bath temperature of the mechanical damping, K.
    pub t_env: f64,
    /// Angular frequencies to evaluate, rad/s, strictly increasing.
    pub omega_grid: Vec<f64>,
}

impl SpectrumParams {
    pub fn new(dynamics: LinearizedDynamics, mass: f64, t_env: f64, omega_grid: Vec<f64>) -> Result<Self> {
        require_positive("mass", mass)?;
        require_positive("T_env", t_env)?;
        if omega_grid.is_empty() {
            return Err(invalid("frequency grid is empty"));
        }
        if omega_grid.iter().any(|w| !w.is_finite()) || omega_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("frequency grid must be finite and strictly increasing"));
        }
        Ok(Self {
            dynamics,
            mass,
            t_env,
            omega_grid,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumCurve {
    /// (ω in rad/s, two-sided S in m²/Hz)
    pub points: Vec<(f64, f64)>,
    pub meta: SpectrumParams,
}

impl SpectrumCurve {
    pub fn omegas(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.0)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.1)
    }
}

/// x·coth(x), even in x, with the series 1 + x²/3 near zero.
fn x_coth_x(x: f64) -> f64 {
    let x = x.abs();
    if x < 1e-6 {
        1.0 + x * x / 3.0
    } else {
        let e = (-2.0 * x).exp_m1();
        x * (2.0 + e) / -e
    }
}

/// Two-sided S(ω) at a single frequency.
pub fn spectral_density(
    omega: f64,
    dynamics: &LinearizedDynamics,
    mass: f64,
    t_env: f64,
    consts: &PhysicalConstants,
) -> f64 {
    let d = dynamics;
    let kt = consts.k_b * t_env;
    // (ħωγ_m/M)·coth(ħω/2k_BT) = (2γ_m k_BT/M)·x coth x
    let bath = if d.gamma_m == 0.0 {
        0.0
    } else {
        2.0 * d.gamma_m * kt / mass * x_coth_x(consts.hbar * omega / (2.0 * kt))
    };
    let collapse = if d.gamma == 0.0 {
        d.eta * (consts.hbar / mass).powi(2)
    } else {
        let g2 = d.gamma * d.gamma;
        g2 * (2.0 * d.gamma_m + d.gamma).powi(2) / (16.0 * d.eta)
            + g2 * omega * omega / (4.0 * d.eta)
            + d.eta * (consts.hbar / mass).powi(2)
    };
    let w = omega.abs();
    let big = d.omega0_shifted();
    let detuning = (big - w) * (big + w);
    let damping = d.total_damping();
    (bath + collapse) / (detuning * detuning + w * w * damping * damping)
}

pub fn psd_analytic(params: &SpectrumParams, consts: &PhysicalConstants) -> Result<SpectrumCurve> {
    let d = &params.dynamics;
    if d.total_damping() <= 0.0 {
        return Err(Error::NoSteadyState(d.total_damping()));
    }
    let eval = |&w: &f64| (w, spectral_density(w, d, params.mass, params.t_env, consts));
    let points: Vec<(f64, f64)> = if params.omega_grid.len() >= PARALLEL_THRESHOLD {
        params.omega_grid.par_iter().map(eval).collect()
    } else {
        params.omega_grid.iter().map(eval).collect()
    };
    Ok(SpectrumCurve {
        points,
        meta: params.clone(),
    })
}

/// Γ + γ_m.
pub fn total_linewidth(dynamics: &LinearizedDynamics) -> f64 {
    dynamics.gamma + dynamics.gamma_m
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinewidthFit {
    pub omega_peak: f64,
    pub peak_value: f64,
    /// Half width at half maximum, s⁻¹.
    pub hwhm: f64,
    /// Full width at half maximum, s⁻¹.
    pub fwhm: f64,
}

// Quadratic through three points, returned as a closure.
fn lagrange3(x: [f64; 3], y: [f64; 3]) -> impl Fn(f64) -> f64 {
    move |t| {
        let l0 = (t - x[1]) * (t - x[2]) / ((x[0] - x[1]) * (x[0] - x[2]));
        let l1 = (t - x[0]) * (t - x[2]) / ((x[1] - x[0]) * (x[1] - x[2]));
        let l2 = (t - x[0]) * (t - x[1]) / ((x[2] - x[0]) * (x[2] - x[1]));
        y[0] * l0 + y[1] * l1 + y[2] * l2
    }
}

fn triple(xs: &[f64], ys: &[f64], centre: usize) -> ([f64; 3], [f64; 3]) {
    let c = centre.clamp(1, xs.len() - 2);
    ([xs[c - 1], xs[c], xs[c + 1]], [ys[c - 1], ys[c], ys[c + 1]])
}

// Crossing of `level` between xs[i] and xs[i+1] on the local quadratic.
fn crossing(xs: &[f64], ys: &[f64], i: usize, level: f64) -> f64 {
    let (tx, ty) = triple(xs, ys, i + 1);
    let q = lagrange3(tx, ty);
    let (mut lo, mut hi) = (xs[i], xs[i + 1]);
    let rising = ys[i + 1] > ys[i];
    if (q(lo) - level).signum() == (q(hi) - level).signum() {
        // Quadratic does not bracket; fall back to linear.
        return xs[i] + (level - ys[i]) * (xs[i + 1] - xs[i]) / (ys[i + 1] - ys[i]);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (q(mid) > level) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Peak position and widths of a single-peaked curve at ω > 0, by local
/// quadratic interpolation on the sampled grid.
pub fn fit_linewidth(curve: &SpectrumCurve) -> Result<LinewidthFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = curve.points.iter().filter(|p| p.0 > 0.0).copied().unzip();
    fit_peak(&xs, &ys)
}

/// As [`fit_linewidth`] on bare arrays.
pub fn fit_peak(xs: &[f64], ys: &[f64]) -> Result<LinewidthFit> {
    if xs.len() != ys.len() || xs.len() < 5 {
        return Err(Error::Fit("need at least five samples at positive frequency".into()));
    }
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::Fit("curve contains non-finite values".into()));
    }
    let (imax, &ymax) = ys
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    let ymin = ys.iter().copied().fold(f64::INFINITY, f64::min);
    if !(ymax > ymin * (1.0 + 1e-9)) || ymax <= 0.0 {
        return Err(Error::Fit("curve is flat".into()));
    }
    if imax == 0 || imax == xs.len() - 1 {
        return Err(Error::Fit("maximum lies on the grid boundary".into()));
    }
    let secondary = (1..xs.len() - 1)
        .filter(|&i| i != imax && ys[i] > ys[i - 1] && ys[i] >= ys[i + 1] && ys[i] > 0.5 * ymax)
        .count();
    if secondary > 0 {
        return Err(Error::Fit(format!(
            "curve has {} local maxima above half the peak",
            secondary + 1
        )));
    }

    let (tx, ty) = triple(xs, ys, imax);
    // Vertex of the parabola, in coordinates centred on the middle sample.
    let (h0, h2) = (tx[0] - tx[1], tx[2] - tx[1]);
    let (d0, d2) = (ty[0] - ty[1], ty[2] - ty[1]);
    let a = (d2 * h0 - d0 * h2) / (h0 * h2 * (h2 - h0));
    let b = (d0 * h2 * h2 - d2 * h0 * h0) / (h0 * h2 * (h2 - h0));
    let (omega_peak, peak_value) = if a < 0.0 {
        let v = -b / (2.0 * a);
        if v > h0 && v < h2 {
            (tx[1] + v, ty[1] + v * (b + a * v))
        } else {
            (xs[imax], ymax)
        }
    } else {
        (xs[imax], ymax)
    };
    let half = 0.5 * peak_value;

    let left = (0..imax).rev().find(|&i| ys[i] <= half);
    let right = (imax + 1..xs.len()).find(|&i| ys[i] <= half);
    let (Some(l), Some(r)) = (left, right) else {
        return Err(Error::Fit("half maximum not reached on both sides of the peak".into()));
    };
    let w_left = crossing(xs, ys, l, half);
    let w_right = crossing(xs, ys, r - 1, half);
    let fwhm = w_right - w_left;
    Ok(LinewidthFit {
        omega_peak,
        peak_value,
        hwhm: 0.5 * fwhm,
        fwhm,
    })
}

/// Frequency grid around a resonance: `n_core` uniform points within
/// ±10 linewidths of `centre`, and `n_tail` log-spaced offsets on each side
/// reaching down to `centre/100` and up to `100·centre`.
pub fn resonance_grid(centre: f64, linewidth: f64, n_core: usize, n_tail: usize) -> Result<Vec<f64>> {
    require_positive("centre frequency", centre)?;
    require_positive("linewidth", linewidth)?;
    if n_core < 3 {
        return Err(invalid("need at least three core points"));
    }
    let core = (10.0 * linewidth).min(0.5 * centre);
    let mut grid: Vec<f64> = (0..n_core)
        .map(|i| centre - core + 2.0 * core * i as f64 / (n_core - 1) as f64)
        .collect();
    let span_lo = 0.99 * centre;
    let span_hi = 99.0 * centre;
    for (span, sign) in [(span_lo, -1.0), (span_hi, 1.0)] {
        if span > core && n_tail > 0 {
            let ratio = (span / core).ln();
            for j in 1..=n_tail {
                let off = core * (ratio * j as f64 / n_tail as f64).exp();
                grid.push(centre + sign * off);
            }
        }
    }
    grid.retain(|w| *w > 0.0 && w.is_finite());
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(grid)
}
