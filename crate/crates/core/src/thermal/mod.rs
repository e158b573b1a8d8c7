//! Second-moment dynamics of the trapped sphere under the collapse noise
//! alone, asymptotic temperatures, and the T(T_β) = T̃(T_χ) contour.
//!
//! Temperatures follow ⟨H⟩∞ = k_B T.

pub mod ode;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_non_negative, require_positive, Error, Result};
use crate::models::{CdDissipation, ModelParams, PhysicalConstants, SphereGeometry};
use crate::rates::{self, Framework};

pub use ode::{dormand_prince, OdeOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentState {
    /// ⟨V⟩ = Mω₀²⟨x²⟩/2, J.
    pub v: f64,
    /// ⟨K⟩ = ⟨p²⟩/2M, J.
    pub k: f64,
    /// ⟨{x, p}⟩, J·s.
    pub c: f64,
    /// s
    pub t: f64,
}

impl MomentState {
    pub fn new(v: f64, k: f64, c: f64, t: f64) -> Self {
        Self { v, k, c, t }
    }

    pub fn energy(&self) -> f64 {
        self.v + self.k
    }

    pub fn temperature(&self, consts: &PhysicalConstants) -> f64 {
        self.energy() / consts.k_b
    }
}

/// Time derivatives of (⟨V⟩, ⟨K⟩, ⟨{x,p}⟩).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentRates {
    pub dv: f64,
    pub dk: f64,
    pub dc: f64,
}

/// The linear three-moment system of either framework.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSystem {
    pub framework: Framework,
    /// Γ or Γ̃, s⁻¹.
    pub gamma: f64,
    /// η or η̃, m⁻²·s⁻¹.
    pub eta: f64,
    pub mass: f64,
    pub omega0: f64,
    hbar: f64,
}

impl MomentSystem {
    pub fn new(
        framework: Framework,
        gamma: f64,
        eta: f64,
        mass: f64,
        omega0: f64,
        consts: &PhysicalConstants,
    ) -> Result<Self> {
        require_non_negative("Gamma", gamma)?;
        require_non_negative("eta", eta)?;
        require_positive("mass", mass)?;
        require_positive("omega0", omega0)?;
        if gamma > 0.0 && eta == 0.0 {
            return Err(invalid("Gamma > 0 requires eta > 0"));
        }
        Ok(Self {
            framework,
            gamma,
            eta,
            mass,
            omega0,
            hbar: consts.hbar,
        })
    }

    pub fn lf(gamma: f64, eta: f64, mass: f64, omega0: f64, consts: &PhysicalConstants) -> Result<Self> {
        Self::new(Framework::Lf, gamma, eta, mass, omega0, consts)
    }

    pub fn cd(gamma: f64, eta: f64, mass: f64, omega0: f64, consts: &PhysicalConstants) -> Result<Self> {
        Self::new(Framework::Cd, gamma, eta, mass, omega0, consts)
    }

    // Constant drive: Γ²Mω₀²/8η on ⟨V⟩ and ħ²η/2M on ⟨K⟩.
    fn drive(&self) -> (f64, f64) {
        let b1 = if self.gamma == 0.0 {
            0.0
        } else {
            self.gamma * self.gamma * self.mass * self.omega0 * self.omega0 / (8.0 * self.eta)
        };
        let b2 = self.hbar * self.hbar * self.eta / (2.0 * self.mass);
        (b1, b2)
    }

    pub fn rhs(&self, s: &MomentState) -> MomentRates {
        let (b1, b2) = self.drive();
        let g = self.gamma;
        let w2 = self.omega0 * self.omega0;
        match self.framework {
            Framework::Lf => MomentRates {
                dv: -g * s.v + 0.5 * w2 * s.c + b1,
                dk: -g * s.k - 0.5 * w2 * s.c + b2,
                dc: -g * s.c + 4.0 * s.k - 4.0 * s.v,
            },
            Framework::Cd => MomentRates {
                dv: 0.5 * w2 * s.c + b1,
                dk: -2.0 * g * s.k - 0.5 * w2 * s.c + b2,
                dc: -g * s.c + 4.0 * s.k - 4.0 * s.v,
            },
        }
    }

    // In the variables E = V + K, D = V − K, u = ω₀C/2 the system reads
    // y' = A y + b with entries of order Γ and ω₀ only.
    fn scaled_system(&self) -> (Matrix3<f64>, Vector3<f64>) {
        let (b1, b2) = self.drive();
        let g = self.gamma;
        let w = self.omega0;
        let a = match self.framework {
            Framework::Lf => Matrix3::new(-g, 0.0, 0.0, 0.0, -g, 2.0 * w, 0.0, -2.0 * w, -g),
            Framework::Cd => Matrix3::new(-g, g, 0.0, g, -g, 2.0 * w, 0.0, -2.0 * w, -g),
        };
        (a, Vector3::new(b1 + b2, b1 - b2, 0.0))
    }

    /// Fixed point of the moment system by a direct linear solve.
    pub fn steady_state(&self) -> Result<MomentState> {
        if self.gamma <= 0.0 {
            return Err(Error::NoSteadyState(self.gamma));
        }
        let (a, b) = self.scaled_system();
        let y = a.lu().solve(&(-b)).ok_or(Error::NoSteadyState(self.gamma))?;
        Ok(MomentState {
            v: 0.5 * (y[0] + y[1]),
            k: 0.5 * (y[0] - y[1]),
            c: 2.0 * y[2] / self.omega0,
            t: f64::INFINITY,
        })
    }

    /// Eigenvalues of the drift matrix.
    pub fn eigenvalues(&self) -> Vec<nalgebra::Complex<f64>> {
        let (a, _) = self.scaled_system();
        a.complex_eigenvalues().iter().copied().collect()
    }
}

pub fn lf_moment_rhs(
    state: &MomentState,
    gamma: f64,
    eta: f64,
    mass: f64,
    omega0: f64,
    consts: &PhysicalConstants,
) -> Result<MomentRates> {
    Ok(MomentSystem::lf(gamma, eta, mass, omega0, consts)?.rhs(state))
}

pub fn cd_moment_rhs(
    state: &MomentState,
    gamma_tilde: f64,
    eta_tilde: f64,
    mass: f64,
    omega0: f64,
    consts: &PhysicalConstants,
) -> Result<MomentRates> {
    Ok(MomentSystem::cd(gamma_tilde, eta_tilde, mass, omega0, consts)?.rhs(state))
}

/// Adaptive explicit integration of the moment system up to `t_end`.
/// `tol` is both the relative tolerance and, scaled by the larger of the
/// initial and steady-state energy, the absolute one.
pub fn integrate_moments(
    system: &MomentSystem,
    initial: &MomentState,
    t_end: f64,
    tol: f64,
) -> Result<Vec<MomentState>> {
    require_positive("tol", tol)?;
    let w = system.omega0;
    // An explicit scheme needs several steps per oscillation period.
    const MAX_STEPS: usize = 20_000_000;
    let periods = w * (t_end - initial.t) / (2.0 * std::f64::consts::PI);
    if periods > (MAX_STEPS / 8) as f64 {
        return Err(Error::Stiffness {
            t: initial.t,
            h: (t_end - initial.t) / MAX_STEPS as f64,
        });
    }
    let half_w2 = 0.5 * w;
    let steady = system.steady_state().map(|s| s.energy()).unwrap_or(0.0);
    let (b1, b2) = system.drive();
    let heat = (b1 + b2) * (t_end - initial.t).max(0.0);
    let scale = (initial.v.abs() + initial.k.abs() + (half_w2 * initial.c).abs())
        .max(steady)
        .max(heat)
        .max(f64::MIN_POSITIVE);
    let opts = OdeOptions {
        rtol: tol,
        atol: tol * scale,
        max_steps: MAX_STEPS,
        h0: None,
    };
    // Integrate (V, K, u = ω₀C/2) so all components share units.
    let f = |_t: f64, y: &[f64; 3]| {
        let s = MomentState::new(y[0], y[1], y[2] / half_w2, 0.0);
        let r = system.rhs(&s);
        [r.dv, r.dk, half_w2 * r.dc]
    };
    let y0 = [initial.v, initial.k, half_w2 * initial.c];
    let traj = dormand_prince(f, initial.t, y0, t_end, &opts)?;
    Ok(traj
        .into_iter()
        .map(|(t, y)| MomentState::new(y[0], y[1], y[2] / half_w2, t))
        .collect())
}

/// T = T_β + ħ²ω₀²/(16 k_B² T_β).
pub fn t_asymptotic_lf(t_beta: f64, omega0: f64, consts: &PhysicalConstants) -> f64 {
    t_beta + (consts.hbar * omega0).powi(2) / (16.0 * consts.k_b * consts.k_b * t_beta)
}

/// T̃ = Γ̃Mω₀²/(8η̃k_B) + ħ²η̃/(2MΓ̃k_B) + Γ̃³M/(16η̃k_B).
pub fn t_tilde_from_rates(eta_tilde: f64, gamma_tilde: f64, mass: f64, omega0: f64, consts: &PhysicalConstants) -> f64 {
    let (g, e, k) = (gamma_tilde, eta_tilde, consts.k_b);
    g * mass * omega0 * omega0 / (8.0 * e * k)
        + consts.hbar * consts.hbar * e / (2.0 * mass * g * k)
        + g.powi(3) * mass / (16.0 * e * k)
}

/// Asymptotic temperature of the collisional-dynamics model, written
/// through T_χ and χ:
///
/// ```text
/// T̃ = T_χ/(1+χ) + ħ²ω₀²(1+χ)/(16k_B²T_χ) + ħ⁶η̃²(1+χ)³/(128M²k_B⁴T_χ³)
/// ```
pub fn t_asymptotic_cd(
    params: &ModelParams,
    geom: &SphereGeometry,
    t_chi: f64,
    omega0: f64,
    consts: &PhysicalConstants,
) -> Result<f64> {
    let diss = CdDissipation::for_model(t_chi, params, consts)?;
    let eta = rates::eta_tilde_closed(params, geom, &diss, consts)?;
    Ok(t_tilde_closed(eta, geom.mass(), &diss, omega0, consts))
}

fn t_tilde_closed(eta_tilde: f64, mass: f64, diss: &CdDissipation, omega0: f64, consts: &PhysicalConstants) -> f64 {
    let one_chi = 1.0 + diss.chi();
    let t = diss.t_chi();
    let k = consts.k_b;
    let hb = consts.hbar;
    t / one_chi
        + (hb * omega0).powi(2) * one_chi / (16.0 * k * k * t)
        + hb.powi(6) * eta_tilde * eta_tilde * one_chi.powi(3) / (128.0 * mass * mass * k.powi(4) * t.powi(3))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticTemps {
    pub t_lf: f64,
    pub t_cd: f64,
    pub t_beta: f64,
    pub t_chi: f64,
    pub omega0: f64,
}

pub fn asymptotic_temps(
    params: &ModelParams,
    geom: &SphereGeometry,
    t_beta: f64,
    t_chi: f64,
    omega0: f64,
    consts: &PhysicalConstants,
) -> Result<AsymptoticTemps> {
    require_positive("T_beta", t_beta)?;
    require_positive("omega0", omega0)?;
    Ok(AsymptoticTemps {
        t_lf: t_asymptotic_lf(t_beta, omega0, consts),
        t_cd: t_asymptotic_cd(params, geom, t_chi, omega0, consts)?,
        t_beta,
        t_chi,
        omega0,
    })
}

/// Lowest reachable LF temperature, ħω₀/(2k_B), attained at T_β = ħω₀/(4k_B).
pub fn t_lf_minimum(omega0: f64, consts: &PhysicalConstants) -> f64 {
    consts.hbar * omega0 / (2.0 * consts.k_b)
}

/// The T_β values with T(T_β) = `t_target`, ascending: none below the LF
/// minimum, one at it, two above.
pub fn tbeta_for_temperature(t_target: f64, omega0: f64, consts: &PhysicalConstants) -> Vec<f64> {
    let c = (consts.hbar * omega0 / (4.0 * consts.k_b)).powi(2);
    let disc = t_target * t_target - 4.0 * c;
    if !t_target.is_finite() || t_target <= 0.0 || disc < -8.0 * f64::EPSILON * t_target * t_target {
        return Vec::new();
    }
    if disc <= 8.0 * f64::EPSILON * t_target * t_target {
        return vec![0.5 * t_target];
    }
    let hi = 0.5 * (t_target + disc.sqrt());
    vec![c / hi, hi]
}

/// T_β values whose LF temperature equals the CD temperature at `t_chi`.
pub fn contour_tbeta_of_tchi(
    params: &ModelParams,
    geom: &SphereGeometry,
    t_chi: f64,
    omega0: f64,
    consts: &PhysicalConstants,
) -> Result<Vec<f64>> {
    let t_tilde = t_asymptotic_cd(params, geom, t_chi, omega0, consts)?;
    Ok(tbeta_for_temperature(t_tilde, omega0, consts))
}

/// T_χ values on which T̃(T_χ) = `t_target`, ascending. Sign changes are
/// located on `t_chi_grid` and refined by bisection in log T_χ, so roots
/// closer together than one grid step can be missed.
pub fn tchi_for_temperature(
    params: &ModelParams,
    geom: &SphereGeometry,
    t_target: f64,
    t_chi_grid: &[f64],
    omega0: f64,
    consts: &PhysicalConstants,
) -> Result<Vec<f64>> {
    require_positive("target temperature", t_target)?;
    let f = |t_chi: f64| -> Result<f64> { Ok((t_asymptotic_cd(params, geom, t_chi, omega0, consts)? / t_target).ln()) };
    let vals = t_chi_grid.par_iter().map(|&t| f(t)).collect::<Result<Vec<_>>>()?;
    let mut roots = Vec::new();
    for i in 1..t_chi_grid.len() {
        let (fa, fb) = (vals[i - 1], vals[i]);
        if fa == 0.0 {
            roots.push(t_chi_grid[i - 1]);
            continue;
        }
        if fa.signum() == fb.signum() || fb == 0.0 {
            continue;
        }
        let (mut a, mut b, mut sa) = (t_chi_grid[i - 1].ln(), t_chi_grid[i].ln(), fa.signum());
        while (b - a).abs() > 1e-14 * a.abs().max(1.0) {
            let m = 0.5 * (a + b);
            let fm = f(m.exp())?;
            if fm == 0.0 {
                a = m;
                b = m;
                break;
            }
            if fm.signum() == sa {
                a = m;
                sa = fm.signum();
            } else {
                b = m;
            }
        }
        roots.push((0.5 * (a + b)).exp());
    }
    if let (Some(&last), Some(&v)) = (t_chi_grid.last(), vals.last()) {
        if v == 0.0 {
            roots.push(last);
        }
    }
    Ok(roots)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourPoint {
    pub t_chi: f64,
    pub t_tilde: f64,
    pub t_beta_lower: Option<f64>,
    pub t_beta_upper: Option<f64>,
}

/// Both contour branches over a T_χ grid.
pub fn contour_sweep(
    params: &ModelParams,
    geom: &SphereGeometry,
    t_chi_grid: &[f64],
    omega0: f64,
    consts: &PhysicalConstants,
) -> Result<Vec<ContourPoint>> {
    t_chi_grid
        .par_iter()
        .map(|&t_chi| {
            let t_tilde = t_asymptotic_cd(params, geom, t_chi, omega0, consts)?;
            let roots = tbeta_for_temperature(t_tilde, omega0, consts);
            Ok(ContourPoint {
                t_chi,
                t_tilde,
                t_beta_lower: roots.first().copied(),
                t_beta_upper: roots.last().copied(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{CslParams, DpParams, SILICA_DENSITY};
    use crate::rates::{gamma_cd, gamma_lf};
    use proptest::prelude::*;

    fn consts() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    fn dania() -> SphereGeometry {
        SphereGeometry::from_mass_density(4.3e-17, SILICA_DENSITY).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn dp(r0: f64) -> ModelParams {
        ModelParams::Dp(DpParams::new(r0, None).unwrap())
    }

    fn csl(r_c: f64) -> ModelParams {
        ModelParams::Csl(CslParams::new(1e-16, r_c, None).unwrap())
    }

    /// LF system for a given T_β, with η from the DP rate of the Dania sphere.
    fn lf_system(t_beta: f64, omega0: f64) -> MomentSystem {
        let c = consts();
        let g = dania();
        let eta = rates::eta_closed(&dp(1e-8), &g, &c).unwrap();
        let gamma = gamma_lf(eta, g.mass(), t_beta, &c);
        MomentSystem::lf(gamma, eta, g.mass(), omega0, &c).unwrap()
    }

    fn cd_system(params: &ModelParams, t_chi: f64, omega0: f64) -> MomentSystem {
        let c = consts();
        let g = dania();
        let diss = CdDissipation::for_model(t_chi, params, &c).unwrap();
        let eta = rates::eta_tilde_closed(params, &g, &diss, &c).unwrap();
        let gamma = gamma_cd(eta, g.mass(), params.sigma(), &diss, &c);
        MomentSystem::cd(gamma, eta, g.mass(), omega0, &c).unwrap()
    }

    #[test]
    fn lf_steady_state_matches_asymptotic_formula() {
        let c = consts();
        for omega0 in [1.0, 2.0 * std::f64::consts::PI * 1e5] {
            for log_t in -14..=2 {
                let t_beta = 10f64.powi(log_t);
                let sys = lf_system(t_beta, omega0);
                let ss = sys.steady_state().unwrap();
                let t = ss.temperature(&c);
                assert!(rel(t, t_asymptotic_lf(t_beta, omega0, &c)) < 1e-10, "T_β = {t_beta}");
            }
        }
    }

    #[test]
    fn cd_steady_state_matches_both_closed_forms() {
        let c = consts();
        let omega0 = 2.0 * std::f64::consts::PI * 1e5;
        for params in [dp(1e-7), csl(1e-7), dp(1e-10)] {
            for log_t in -14..=2 {
                let t_chi = 10f64.powi(log_t);
                let sys = cd_system(&params, t_chi, omega0);
                let t = sys.steady_state().unwrap().temperature(&c);
                let rates_form = t_tilde_from_rates(sys.eta, sys.gamma, sys.mass, omega0, &c);
                let table = t_asymptotic_cd(&params, &dania(), t_chi, omega0, &c).unwrap();
                assert!(
                    rel(t, rates_form) < 1e-10,
                    "{params:?} T_χ = {t_chi}: {t} vs {rates_form}"
                );
                assert!(rel(table, rates_form) < 1e-10, "{table} vs {rates_form}");
            }
        }
    }

    #[test]
    fn cd_drift_is_stable() {
        let sys = cd_system(&csl(1e-7), 1e-9, 1e3);
        for ev in sys.eigenvalues() {
            assert!(ev.re < 0.0, "{ev}");
        }
    }

    #[test]
    fn conservative_without_collapse() {
        let c = consts();
        let s = MomentState::new(1.0, 2.0, 0.3, 0.0);
        for sys in [
            MomentSystem::lf(0.0, 0.0, 1.0, 3.0, &c),
            MomentSystem::cd(0.0, 0.0, 1.0, 3.0, &c),
        ] {
            let r = sys.unwrap().rhs(&s);
            assert_eq!(r.dv + r.dk, 0.0);
        }
    }

    #[test]
    fn pure_heating_without_dissipation() {
        let c = consts();
        let (eta, m) = (1e20, 1e-17);
        let s = MomentState::new(1e-22, 2e-22, 0.0, 0.0);
        let lf = lf_moment_rhs(&s, 0.0, eta, m, 10.0, &c).unwrap();
        let cd = cd_moment_rhs(&s, 0.0, eta, m, 10.0, &c).unwrap();
        let heat = c.hbar * c.hbar * eta / (2.0 * m);
        assert!(rel(lf.dv + lf.dk, heat) < 1e-14);
        assert_eq!(lf, cd);
        assert!(lf_moment_rhs(&s, 1.0, 0.0, m, 10.0, &c).is_err());
    }

    #[test]
    fn lf_integration_reaches_fixed_point() {
        // Γ/ω₀ of order 0.1 keeps the run short.
        let c = consts();
        let sys = lf_system(1e-9, 1.0);
        let omega0 = 10.0 * sys.gamma;
        let sys = MomentSystem::lf(sys.gamma, sys.eta, sys.mass, omega0, &c).unwrap();
        let t_beta = 1e-9;
        let traj = integrate_moments(&sys, &MomentState::new(0.0, 0.0, 0.0, 0.0), 20.0 / sys.gamma, 1e-10).unwrap();
        let end = traj.last().unwrap();
        let expect = t_asymptotic_lf(t_beta, omega0, &c);
        assert!(
            rel(end.temperature(&c), expect) < 1e-6,
            "{} vs {expect}",
            end.temperature(&c)
        );
        assert!(traj
            .iter()
            .all(|s| s.v >= -1e-9 * expect * c.k_b && s.k >= -1e-9 * expect * c.k_b));
    }

    #[test]
    fn cd_integration_reaches_fixed_point() {
        let c = consts();
        let base = cd_system(&csl(1e-7), 1e-9, 1.0);
        let omega0 = 3.0 * base.gamma;
        let sys = MomentSystem::cd(base.gamma, base.eta, base.mass, omega0, &c).unwrap();
        let ss = sys.steady_state().unwrap();
        let traj = integrate_moments(&sys, &MomentState::new(0.0, 0.0, 0.0, 0.0), 40.0 / sys.gamma, 1e-10).unwrap();
        let end = traj.last().unwrap();
        assert!(rel(end.energy(), ss.energy()) < 1e-6);
    }

    #[test]
    fn fixed_point_is_invariant() {
        let c = consts();
        let base = lf_system(1e-9, 1.0);
        let sys = MomentSystem::lf(base.gamma, base.eta, base.mass, 5.0 * base.gamma, &c).unwrap();
        let mut ss = sys.steady_state().unwrap();
        ss.t = 0.0;
        let traj = integrate_moments(&sys, &ss, 10.0 / sys.gamma, 1e-10).unwrap();
        for s in &traj {
            assert!(rel(s.energy(), ss.energy()) < 1e-8);
        }
    }

    #[test]
    fn tchi_roots_solve_the_target() {
        let c = consts();
        let geom = dania();
        let p = ModelParams::Dp(DpParams::new(1e-7, None).unwrap());
        let w = 2.0 * std::f64::consts::PI * 1e5;
        let grid: Vec<f64> = (0..=300).map(|i| 10f64.powf(-15.0 + 0.06 * i as f64)).collect();
        let target = t_asymptotic_lf(1.0, w, &c);
        let roots = tchi_for_temperature(&p, &geom, target, &grid, w, &c).unwrap();
        assert!(!roots.is_empty());
        for r in roots {
            let t = t_asymptotic_cd(&p, &geom, r, w, &c).unwrap();
            assert!(rel(t, target) < 1e-10, "{r}: {t} vs {target}");
        }
    }

    #[test]
    fn integrating_a_stiff_system_reports_stiffness() {
        let sys = lf_system(1e-9, 2.0 * std::f64::consts::PI * 1e5);
        let err = integrate_moments(&sys, &MomentState::new(0.0, 0.0, 0.0, 0.0), 20.0 / sys.gamma, 1e-8).unwrap_err();
        assert!(matches!(err, Error::Stiffness { .. }));
    }

    #[test]
    fn lf_temperature_minimum_and_limits() {
        let c = consts();
        let w = 2.0 * std::f64::consts::PI * 1e5;
        let t_min = c.hbar * w / (4.0 * c.k_b);
        assert!(rel(t_asymptotic_lf(t_min, w, &c), t_lf_minimum(w, &c)) < 1e-15);
        let hot = 1e3 * c.hbar * w / c.k_b;
        assert!(rel(t_asymptotic_lf(hot, w, &c), hot) < 1e-3);
        assert!(t_asymptotic_lf(1e-300, w, &c).is_infinite() || t_asymptotic_lf(1e-300, w, &c) > 1e200);
    }

    #[test]
    fn wide_kernel_cd_coincides_with_lf() {
        let c = consts();
        let w = 2.0 * std::f64::consts::PI * 1e5;
        for t in [1e-9, 1e-6, 1e-3, 1.0, 1e3] {
            let cd = t_asymptotic_cd(&dp(1.0), &dania(), t, w, &c).unwrap();
            assert!(rel(cd, t_asymptotic_lf(t, w, &c)) < 1e-6, "T = {t}");
        }
    }

    #[test]
    fn cd_temperature_diverges_at_both_ends() {
        let c = consts();
        let w = 2.0 * std::f64::consts::PI * 1e5;
        let p = dp(1e-7);
        let mid = t_asymptotic_cd(&p, &dania(), 1e-7, w, &c).unwrap();
        assert!(t_asymptotic_cd(&p, &dania(), 1e20, w, &c).unwrap() > 1e10 * mid);
        assert!(t_asymptotic_cd(&p, &dania(), 1e-25, w, &c).unwrap() > 1e10 * mid);
    }

    #[test]
    fn double_root_at_minimum() {
        let c = consts();
        let w = 2.0 * std::f64::consts::PI * 1e5;
        let roots = tbeta_for_temperature(t_lf_minimum(w, &c), w, &c);
        assert_eq!(roots.len(), 1);
        assert!(rel(roots[0], c.hbar * w / (4.0 * c.k_b)) < 1e-12);
        assert!(tbeta_for_temperature(0.5 * t_lf_minimum(w, &c), w, &c).is_empty());
    }

    #[test]
    fn contour_roots_are_valid() {
        let c = consts();
        let w = 2.0 * std::f64::consts::PI * 1e5;
        for p in [dp(1e-7), dp(1e-10), csl(1e-7), csl(1e-10)] {
            for i in 0..60 {
                let t_chi = 10f64.powf(-14.0 + 0.25 * i as f64);
                let t_tilde = t_asymptotic_cd(&p, &dania(), t_chi, w, &c).unwrap();
                for tb in contour_tbeta_of_tchi(&p, &dania(), t_chi, w, &c).unwrap() {
                    assert!(rel(t_asymptotic_lf(tb, w, &c), t_tilde) < 1e-10);
                }
            }
        }
    }

    // Each branch is sampled as a unimodal sequence: T̃(T_χ) falls and then
    // rises, so neither branch is monotone over a wide sweep.
    #[test]
    fn contour_branches_are_unimodal() {
        let c = consts();
        let w = 2.0 * std::f64::consts::PI * 1e5;
        let grid: Vec<f64> = (0..200).map(|i| 10f64.powf(-14.0 + 0.08 * i as f64)).collect();
        for p in [dp(1e-7), csl(1e-7)] {
            let sweep = contour_sweep(&p, &dania(), &grid, w, &c).unwrap();
            for branch in [
                sweep.iter().filter_map(|s| s.t_beta_upper).collect::<Vec<_>>(),
                sweep.iter().filter_map(|s| s.t_beta_lower).collect::<Vec<_>>(),
            ] {
                let changes = branch
                    .windows(3)
                    .filter(|t| (t[1] - t[0]).signum() * (t[2] - t[1]).signum() < 0.0)
                    .count();
                assert!(changes <= 1, "{changes} direction changes");
            }
        }
    }

    proptest! {
        #[test]
        fn lf_temperature_never_below_minimum(log_t in -20.0f64..5.0, log_w in 0.0f64..8.0) {
            let c = consts();
            let w = 10f64.powf(log_w);
            prop_assert!(t_asymptotic_lf(10f64.powf(log_t), w, &c) >= t_lf_minimum(w, &c) * (1.0 - 1e-14));
        }
    }
}
