//! Semiclassical simulation of the linearised Langevin equations
//!
//!   dx = (p/M − Γx/2) dt − ħα dW_x
//!   dp = (−Mω₀²x − (Γ/2 + γ_m)p) dt + dξ − ħ dW_p
//!
//! with W_x, W_p independent real Wiener processes of intensity η and ξ the
//! thermal force of intensity 2Mγ_m k_B T_env. The quantum cross-correlator
//! of the collapse noises is dropped; the drift matrix, and with it the
//! linewidth and the peak frequency, is unaffected. The simulated spectrum
//! is therefore only compared with the analytic one in the classical
//! regime.
//!
//! Integration is semi-implicit Euler–Maruyama: p is advanced first and the
//! new p feeds the x update. The noise is additive, so the scheme has strong
//! order 1; without noise and damping it is symplectic Euler and the energy
//! error stays bounded at O(ω₀ dt).

use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::{num_complex::Complex, Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};
use crate::models::{LinearizedDynamics, PhysicalConstants};

/// Largest allowed dt·(Γ+γ_m).
pub const MAX_DAMPING_STEP: f64 = 1e-3;
/// Largest allowed dt·Ω₀.
pub const MAX_PHASE_STEP: f64 = 0.1;
/// Largest ħΩ₀/(k_B T) accepted as classical.
pub const CLASSICAL_RATIO: f64 = 1e-2;
pub const LINEWIDTH_TOLERANCE: f64 = 0.10;
pub const PEAK_TOLERANCE: f64 = 0.01;
/// Equivalent noise bandwidth of the Hann window, bins.
pub const HANN_ENBW_BINS: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dynamics: LinearizedDynamics,
    pub mass: f64,
    pub t_env: f64,
    /// Integration step, s.
    pub dt: f64,
    /// Steps per trajectory (per segment when validating).
    pub n_steps: usize,
    pub seed: u64,
    pub n_segments: usize,
    /// Keep every n-th step.
    pub decimation: usize,
    /// Keep the −ħαŵ_x term of the position equation.
    pub position_noise: bool,
    /// Switches every noise source off, leaving the drift.
    pub stochastic: bool,
    /// Initial (x, p).
    pub initial: (f64, f64),
}

impl SimConfig {
    pub fn new(
        dynamics: LinearizedDynamics,
        mass: f64,
        t_env: f64,
        dt: f64,
        n_steps: usize,
        seed: u64,
        n_segments: usize,
    ) -> Result<Self> {
        let cfg = Self {
            dynamics,
            mass,
            t_env,
            dt,
            n_steps,
            seed,
            n_segments,
            decimation: 1,
            position_noise: true,
            stochastic: true,
            initial: (0.0, 0.0),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_decimation(mut self, decimation: usize) -> Self {
        self.decimation = decimation;
        self
    }

    pub fn with_position_noise(mut self, on: bool) -> Self {
        self.position_noise = on;
        self
    }

    pub fn deterministic(mut self) -> Self {
        self.stochastic = false;
        self
    }

    pub fn with_initial(mut self, x: f64, p: f64) -> Self {
        self.initial = (x, p);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |m: String| Err(Error::Config(m));
        for (name, v) in [("mass", self.mass), ("dt", self.dt)] {
            if !(v.is_finite() && v > 0.0) {
                return cfg_err(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if !(self.t_env.is_finite() && self.t_env >= 0.0) {
            return cfg_err(format!("T_env must be non-negative, got {}", self.t_env));
        }
        if self.n_steps == 0 || self.n_segments == 0 || self.decimation == 0 {
            return cfg_err("n_steps, n_segments and decimation must be positive".into());
        }
        let damp = self.dt * self.dynamics.total_damping();
        if damp >= MAX_DAMPING_STEP {
            return cfg_err(format!(
                "dt*(Gamma+gamma_m) = {damp:e} must be below {MAX_DAMPING_STEP:e}"
            ));
        }
        let phase = self.dt * self.dynamics.omega0_shifted();
        if phase >= MAX_PHASE_STEP {
            return cfg_err(format!("dt*Omega0 = {phase:e} must be below {MAX_PHASE_STEP}"));
        }
        if !(self.initial.0.is_finite() && self.initial.1.is_finite()) {
            return cfg_err("initial state must be finite".into());
        }
        Ok(())
    }

    /// Spacing of the recorded samples, s.
    pub fn sample_dt(&self) -> f64 {
        self.dt * self.decimation as f64
    }

    /// Settling time discarded before a validation segment: ten damping
    /// times, s.
    pub fn burn_in(&self) -> f64 {
        let g = self.dynamics.total_damping();
        if g > 0.0 {
            10.0 / g
        } else {
            0.0
        }
    }
}

/// Recorded samples, spaced by `sample_dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub sample_dt: f64,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

impl Trajectory {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.x.len()).map(|i| i as f64 * self.sample_dt)
    }
}

struct Stepper {
    dt: f64,
    spring: f64,
    inv_mass: f64,
    damp_x: f64,
    damp_p: f64,
    sigma_x: f64,
    sigma_p: f64,
}

impl Stepper {
    fn new(cfg: &SimConfig, consts: &PhysicalConstants) -> Self {
        let d = &cfg.dynamics;
        let dt = cfg.dt;
        let (sigma_x, sigma_p) = if cfg.stochastic {
            let sx = if cfg.position_noise {
                consts.hbar * d.alpha * (d.eta * dt).sqrt()
            } else {
                0.0
            };
            // ξ and ħŵ_p are independent and both white in p, so one
            // Gaussian with the summed variance is exact in distribution.
            let thermal = 2.0 * cfg.mass * d.gamma_m * consts.k_b * cfg.t_env;
            let collapse = consts.hbar * consts.hbar * d.eta;
            (sx, ((thermal + collapse) * dt).sqrt())
        } else {
            (0.0, 0.0)
        };
        Self {
            dt,
            spring: cfg.mass * d.omega0 * d.omega0,
            inv_mass: 1.0 / cfg.mass,
            damp_x: 0.5 * d.gamma,
            damp_p: 0.5 * d.gamma + d.gamma_m,
            sigma_x,
            sigma_p,
        }
    }

    #[inline]
    fn step<R: Rng>(&self, x: &mut f64, p: &mut f64, rng: &mut R) {
        let np: f64 = if self.sigma_p > 0.0 {
            rng.sample(StandardNormal)
        } else {
            0.0
        };
        *p += self.dt * (-self.spring * *x - self.damp_p * *p) + self.sigma_p * np;
        let nx: f64 = if self.sigma_x > 0.0 {
            rng.sample(StandardNormal)
        } else {
            0.0
        };
        *x += self.dt * (*p * self.inv_mass - self.damp_x * *x) + self.sigma_x * nx;
    }
}

/// Runs `burn` unrecorded steps then `cfg.n_steps` steps, recording every
/// `cfg.decimation`-th state. Noise comes from ChaCha8 stream `stream`.
fn run(cfg: &SimConfig, stream: u64, burn: usize, consts: &PhysicalConstants) -> Trajectory {
    let stepper = Stepper::new(cfg, consts);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let (mut x, mut p) = cfg.initial;
    for _ in 0..burn {
        stepper.step(&mut x, &mut p, &mut rng);
    }
    let n_rec = cfg.n_steps / cfg.decimation + 1;
    let mut xs = Vec::with_capacity(n_rec);
    let mut ps = Vec::with_capacity(n_rec);
    xs.push(x);
    ps.push(p);
    for i in 1..=cfg.n_steps {
        stepper.step(&mut x, &mut p, &mut rng);
        if i % cfg.decimation == 0 {
            xs.push(x);
            ps.push(p);
        }
    }
    Trajectory {
        sample_dt: cfg.sample_dt(),
        x: xs,
        p: ps,
    }
}

/// One trajectory from `cfg.initial`, seeded by `cfg.seed` alone.
pub fn simulate_trajectory(cfg: &SimConfig, consts: &PhysicalConstants) -> Result<Trajectory> {
    cfg.validate()?;
    Ok(run(cfg, 0, 0, consts))
}

/// Segment-averaged one-sided periodogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdEstimate {
    /// Bin centres, rad/s.
    pub freqs: Vec<f64>,
    /// One-sided PSD per Hz.
    pub psd: Vec<f64>,
    /// Variance of the averaged estimate in each bin.
    pub variance: Vec<f64>,
    pub segment_len: usize,
    pub n_segments: usize,
    pub sample_dt: f64,
}

impl PsdEstimate {
    pub fn bin_width_hz(&self) -> f64 {
        1.0 / (self.segment_len as f64 * self.sample_dt)
    }

    /// ∫S df over all bins; equals the signal variance.
    pub fn integrated_power(&self) -> f64 {
        self.psd.iter().sum::<f64>() * self.bin_width_hz()
    }
}

/// Hann-windowed periodogram of fixed-length segments, normalised so that
/// Σ S_k Δf recovers the mean-square of the (de-meaned) segment.
struct Periodogram {
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    scale: f64,
}

impl Periodogram {
    fn new(n: usize, sample_dt: f64) -> Self {
        let window: Vec<f64> = (0..n)
            .map(|i| {
                let s = (std::f64::consts::PI * i as f64 / n as f64).sin();
                s * s
            })
            .collect();
        let w2: f64 = window.iter().map(|w| w * w).sum();
        Self {
            fft: FftPlanner::new().plan_fft_forward(n),
            window,
            scale: sample_dt / w2,
        }
    }

    fn bins(&self) -> usize {
        self.window.len() / 2 + 1
    }

    fn compute(&self, seg: &[f64]) -> Vec<f64> {
        let n = seg.len();
        let mean = seg.iter().sum::<f64>() / n as f64;
        let mut buf: Vec<Complex<f64>> = seg
            .iter()
            .zip(&self.window)
            .map(|(x, w)| Complex::new((x - mean) * w, 0.0))
            .collect();
        self.fft.process(&mut buf);
        (0..self.bins())
            .map(|k| {
                let one_sided = if k == 0 || (n.is_multiple_of(2) && k == n / 2) {
                    1.0
                } else {
                    2.0
                };
                one_sided * self.scale * buf[k].norm_sqr()
            })
            .collect()
    }
}

fn finish(sum: Vec<f64>, sumsq: Vec<f64>, n_seg: usize, seg_len: usize, sample_dt: f64) -> PsdEstimate {
    let m = n_seg as f64;
    let psd: Vec<f64> = sum.iter().map(|s| s / m).collect();
    let variance = if n_seg > 1 {
        sumsq
            .iter()
            .zip(&psd)
            .map(|(q, mu)| ((q / m - mu * mu) * m / (m - 1.0)).max(0.0) / m)
            .collect()
    } else {
        vec![f64::NAN; psd.len()]
    };
    let df = std::f64::consts::TAU / (seg_len as f64 * sample_dt);
    PsdEstimate {
        freqs: (0..psd.len()).map(|k| k as f64 * df).collect(),
        psd,
        variance,
        segment_len: seg_len,
        n_segments: n_seg,
        sample_dt,
    }
}

/// Splits `series` into `n_segments` non-overlapping segments, removes each
/// segment's mean, applies a Hann window and averages the one-sided
/// periodograms. Samples left over at the end are ignored.
pub fn estimate_psd(series: &[f64], sample_dt: f64, n_segments: usize) -> Result<PsdEstimate> {
    require_positive("sample dt", sample_dt)?;
    let required = 2 * n_segments.max(1) * 8;
    if n_segments == 0 || series.len() < required {
        return Err(Error::Length {
            len: series.len(),
            required,
        });
    }
    let seg_len = series.len() / n_segments;
    let pg = Periodogram::new(seg_len, sample_dt);
    let mut sum = vec![0.0; pg.bins()];
    let mut sumsq = vec![0.0; pg.bins()];
    for seg in series.chunks_exact(seg_len).take(n_segments) {
        for (k, v) in pg.compute(seg).into_iter().enumerate() {
            sum[k] += v;
            sumsq[k] += v * v;
        }
    }
    Ok(finish(sum, sumsq, n_segments, seg_len, sample_dt))
}

/// Least-squares fit of ln S = a − ln((Ω² − ω²)² + ω²γ²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorFit {
    pub log_amplitude: f64,
    /// Resonance Ω, rad/s.
    pub omega: f64,
    /// Full width γ, rad/s.
    pub linewidth: f64,
    pub omega_sigma: f64,
    pub linewidth_sigma: f64,
    pub n_points: usize,
    pub iterations: usize,
}

fn model_and_jacobian(theta: &Vector3<f64>, w: f64) -> (f64, Vector3<f64>) {
    let (a, om, g) = (theta[0], theta[1], theta[2]);
    let d = om * om - w * w;
    let den = d * d + w * w * g * g;
    (
        a - den.ln(),
        Vector3::new(1.0, -4.0 * om * d / den, -2.0 * w * w * g / den),
    )
}

fn window(freqs: &[f64], psd: &[f64], centre: f64, width: f64) -> Vec<(f64, f64)> {
    freqs
        .iter()
        .zip(psd)
        .filter(|(w, s)| **w > 0.0 && (**w - centre).abs() <= FIT_HALF_WINDOW * width && **s > 0.0)
        .map(|(w, s)| (*w, s.ln()))
        .collect()
}

/// Levenberg–Marquardt on the log line shape. Returns the optimum, the
/// residual sum of squares, the iteration count and (JᵀJ)⁻¹.
fn levenberg_marquardt(pts: &[(f64, f64)], start: Vector3<f64>) -> Result<(Vector3<f64>, f64, usize, Matrix3<f64>)> {
    if pts.len() < 10 {
        return Err(Error::Fit(format!("only {} bins in the fit window", pts.len())));
    }
    let cost = |th: &Vector3<f64>| -> f64 {
        pts.iter()
            .map(|&(w, y)| {
                let r = y - model_and_jacobian(th, w).0;
                r * r
            })
            .sum()
    };
    let normal = |th: &Vector3<f64>| -> (Matrix3<f64>, Vector3<f64>) {
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for &(w, y) in pts {
            let (f, j) = model_and_jacobian(th, w);
            jtj += j * j.transpose();
            jtr += j * (y - f);
        }
        (jtj, jtr)
    };

    let mut theta = start;
    let mut c = cost(&theta);
    let mut mu = 1e-3;
    let mut iterations = 0;
    for it in 1..=500 {
        iterations = it;
        let (jtj, jtr) = normal(&theta);
        let mut improved = false;
        while mu < 1e12 {
            let mut a = jtj;
            for k in 0..3 {
                a[(k, k)] *= 1.0 + mu;
            }
            let Some(step) = a.lu().solve(&jtr) else {
                mu *= 10.0;
                continue;
            };
            let trial = theta + step;
            let ct = cost(&trial);
            if ct.is_finite() && ct <= c {
                let small = (0..3).all(|k| step[k].abs() <= 1e-12 * (theta[k].abs() + 1e-300));
                theta = trial;
                let done = small || c - ct <= 1e-15 * c;
                c = ct;
                mu = (mu / 3.0).max(1e-12);
                improved = !done;
                break;
            }
            mu *= 4.0;
        }
        if !improved {
            break;
        }
    }
    let (jtj, _) = normal(&theta);
    let inv = jtj
        .try_inverse()
        .ok_or_else(|| Error::Fit("singular normal matrix at the optimum".into()))?;
    Ok((theta, c, iterations, inv))
}

/// Half-width of the fit window in linewidths.
const FIT_HALF_WINDOW: f64 = 8.0;

/// Fits the damped-oscillator line shape in log space. A rough fit over a
/// window set by the half-maximum crossings of the highest bin fixes Ω and
/// γ; the final fit uses bins within eight of those linewidths of Ω.
/// Uncertainties assume independent bins.
pub fn fit_oscillator(freqs: &[f64], psd: &[f64]) -> Result<OscillatorFit> {
    if freqs.len() != psd.len() || freqs.len() < 2 {
        return Err(Error::Fit("frequency and PSD lengths differ or are too short".into()));
    }
    let (ipk, &peak) = psd
        .iter()
        .enumerate()
        .filter(|(i, _)| freqs[*i] > 0.0)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::Fit("no positive-frequency bins".into()))?;
    if !(peak.is_finite() && peak > 0.0) || ipk == 0 || ipk + 1 >= psd.len() {
        return Err(Error::Fit("no interior positive peak".into()));
    }
    let half = 0.5 * peak;
    let mut lo = ipk;
    while lo > 0 && psd[lo] > half {
        lo -= 1;
    }
    let mut hi = ipk;
    while hi + 1 < psd.len() && psd[hi] > half {
        hi += 1;
    }
    let bin = freqs[1] - freqs[0];
    let g0 = (freqs[hi] - freqs[lo]).max(2.0 * bin);
    let om0 = freqs[ipk];
    let start = Vector3::new(peak.ln() + (om0 * om0 * g0 * g0).ln(), om0, g0);
    let (rough, _, _, _) = levenberg_marquardt(&window(freqs, psd, om0, g0), start)?;

    let pts = window(freqs, psd, rough[1].abs(), rough[2].abs().max(2.0 * bin));
    let (theta, c, iterations, inv) = levenberg_marquardt(&pts, rough)?;
    let cov = inv * (c / (pts.len() as f64 - 3.0));
    let fit = OscillatorFit {
        log_amplitude: theta[0],
        omega: theta[1].abs(),
        linewidth: theta[2].abs(),
        omega_sigma: cov[(1, 1)].sqrt(),
        linewidth_sigma: cov[(2, 2)].sqrt(),
        n_points: pts.len(),
        iterations,
    };
    if !(fit.omega.is_finite() && fit.linewidth.is_finite() && fit.linewidth > 0.0) {
        return Err(Error::Fit(format!("fit diverged: {fit:?}")));
    }
    Ok(fit)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub n_segments: usize,
    pub dt: f64,
    pub decimation: usize,
    pub steps_per_segment: usize,
    pub burn_in_steps: usize,
    pub gamma_collapse: f64,
    pub gamma_m: f64,
    /// Γ + γ_m, s⁻¹.
    pub linewidth_expected: f64,
    pub linewidth_fit: f64,
    pub linewidth_sigma: f64,
    pub linewidth_rel_dev: f64,
    /// Ω₀, rad/s.
    pub peak_expected: f64,
    pub peak_fit: f64,
    pub peak_sigma: f64,
    pub peak_rel_dev: f64,
    pub linewidth_tolerance: f64,
    pub peak_tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Validation {
    pub report: ValidationReport,
    pub psd: PsdEstimate,
    pub fit: OscillatorFit,
}

fn check_classical(cfg: &SimConfig, consts: &PhysicalConstants) -> Result<()> {
    let d = &cfg.dynamics;
    let e = consts.hbar * d.omega0_shifted();
    let ratio = e / (consts.k_b * cfg.t_env);
    if !(ratio < CLASSICAL_RATIO) {
        return Err(Error::Regime(format!(
            "hbar*Omega0/(k_B*T_env) = {ratio:e}; the semiclassical noise model needs it below {CLASSICAL_RATIO:e}"
        )));
    }
    if d.gamma > 0.0 {
        // Collapse noise temperature implied by Γ and η.
        let t_noise = consts.hbar * consts.hbar * d.eta / (2.0 * cfg.mass * consts.k_b * d.gamma);
        let ratio = e / (consts.k_b * t_noise);
        if !(ratio < CLASSICAL_RATIO) {
            return Err(Error::Regime(format!(
                "collapse noise temperature {t_noise:e} K is not classical at Omega0 (ratio {ratio:e})"
            )));
        }
    }
    Ok(())
}

/// Simulates `n_segments` independent trajectories (ChaCha8 stream k for
/// segment k, each settled for ten damping times), averages their
/// periodograms and fits the damped-oscillator shape. The fitted full width
/// is compared with Γ + γ_m and the fitted resonance with Ω₀.
pub fn validate_against_analytic(cfg: &SimConfig, consts: &PhysicalConstants) -> Result<Validation> {
    cfg.validate()?;
    check_classical(cfg, consts)?;
    let seg_len = cfg.n_steps / cfg.decimation;
    if seg_len < 16 {
        return Err(Error::Length {
            len: seg_len,
            required: 16,
        });
    }
    let burn = (cfg.burn_in() / cfg.dt).ceil() as usize;
    let pg = Periodogram::new(seg_len, cfg.sample_dt());
    let bins = pg.bins();
    let (sum, sumsq) = (0..cfg.n_segments as u64)
        .into_par_iter()
        .map(|k| {
            let traj = run(cfg, k, burn, consts);
            let p = pg.compute(&traj.x[1..=seg_len]);
            let sq = p.iter().map(|v| v * v).collect::<Vec<_>>();
            (p, sq)
        })
        .reduce(
            || (vec![0.0; bins], vec![0.0; bins]),
            |(mut a, mut b), (c, d)| {
                a.iter_mut().zip(&c).for_each(|(x, y)| *x += y);
                b.iter_mut().zip(&d).for_each(|(x, y)| *x += y);
                (a, b)
            },
        );
    let psd = finish(sum, sumsq, cfg.n_segments, seg_len, cfg.sample_dt());
    let mut fit = fit_oscillator(&psd.freqs, &psd.psd)?;
    // Hann-windowed bins are correlated over about 1.5 bins.
    fit.omega_sigma *= HANN_ENBW_BINS.sqrt();
    fit.linewidth_sigma *= HANN_ENBW_BINS.sqrt();
    let d = &cfg.dynamics;
    let lw = d.total_damping();
    let om = d.omega0_shifted();
    let lw_dev = (fit.linewidth - lw) / lw;
    let pk_dev = (fit.omega - om) / om;
    let report = ValidationReport {
        seed: cfg.seed,
        n_segments: cfg.n_segments,
        dt: cfg.dt,
        decimation: cfg.decimation,
        steps_per_segment: cfg.n_steps,
        burn_in_steps: burn,
        gamma_collapse: d.gamma,
        gamma_m: d.gamma_m,
        linewidth_expected: lw,
        linewidth_fit: fit.linewidth,
        linewidth_sigma: fit.linewidth_sigma,
        linewidth_rel_dev: lw_dev,
        peak_expected: om,
        peak_fit: fit.omega,
        peak_sigma: fit.omega_sigma,
        peak_rel_dev: pk_dev,
        linewidth_tolerance: LINEWIDTH_TOLERANCE,
        peak_tolerance: PEAK_TOLERANCE,
        passed: lw_dev.abs() <= LINEWIDTH_TOLERANCE && pk_dev.abs() <= PEAK_TOLERANCE,
    };
    Ok(Validation { report, psd, fit })
}

/// Dynamics with a collapse channel of rate Γ whose noise temperature is
/// `t_noise`, i.e. η = 2M k_B T_noise Γ/ħ².
pub fn dynamics_with_noise_temperature(
    gamma: f64,
    t_noise: f64,
    mass: f64,
    omega0: f64,
    gamma_m: f64,
    consts: &PhysicalConstants,
) -> Result<LinearizedDynamics> {
    let eta = 2.0 * mass * consts.k_b * t_noise * gamma / (consts.hbar * consts.hbar);
    LinearizedDynamics::new(eta, gamma, omega0, gamma_m, consts)
}
