//! Diffusion and dissipation rates of a homogeneous sphere.
//!
//! The k-space integral
//!
//! ```text
//! η = 1/(6π²ħ²) ∫₀^∞ k⁴ D_k μ_k² dk
//! ```
//!
//! is the reference definition; the closed forms below are checked against
//! [`eta_quadrature`] in the tests.

pub mod quadrature;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_non_negative, require_positive, Result};
use crate::models::{CdDissipation, ModelKind, ModelParams, PhysicalConstants, SphereGeometry};

/// Relative tolerance of the reference quadrature.
pub const QUADRATURE_REL_TOL: f64 = 1e-9;
/// The integrand is cut where its envelope drops below this fraction of the peak.
pub const QUADRATURE_CUTOFF: f64 = 1e-16;
const MAX_UNIFORM_PANELS: usize = 50_000;
const MAX_PANELS: usize = 400_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Framework {
    /// Linear friction: dissipation through a bath at T_β.
    Lf,
    /// Collisional dynamics: dissipation through a bath at T_χ.
    Cd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePair {
    /// η or η̃, m⁻²·s⁻¹.
    pub eta: f64,
    /// Γ or Γ̃, s⁻¹.
    pub gamma: f64,
    pub framework: Framework,
}

/// Noise correlator in k-space. The Gaussian width is σ(1 + χ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    model: ModelKind,
    framework: Framework,
    sigma: f64,
    chi: f64,
}

impl KernelSpec {
    pub fn new(model: ModelKind, framework: Framework, sigma: f64, chi: f64) -> Result<Self> {
        require_positive("sigma", sigma)?;
        require_non_negative("chi", chi)?;
        if framework == Framework::Lf && chi != 0.0 {
            return Err(invalid("a linear-friction kernel has chi = 0"));
        }
        Ok(Self {
            model,
            framework,
            sigma,
            chi,
        })
    }

    pub fn lf(params: &ModelParams) -> Self {
        Self {
            model: params.kind(),
            framework: Framework::Lf,
            sigma: params.sigma(),
            chi: 0.0,
        }
    }

    pub fn cd(params: &ModelParams, diss: &CdDissipation) -> Self {
        Self {
            model: params.kind(),
            framework: Framework::Cd,
            sigma: params.sigma(),
            chi: diss.chi(),
        }
    }

    pub fn model(&self) -> ModelKind {
        self.model
    }

    pub fn framework(&self) -> Framework {
        self.framework
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    /// Gaussian width σ(1 + χ), m.
    pub fn width(&self) -> f64 {
        self.sigma * (1.0 + self.chi)
    }

    /// Noise correlator D_k at wavenumber k.
    pub fn d_k(&self, k: f64, params: &ModelParams, consts: &PhysicalConstants) -> f64 {
        let gauss = (-(self.width() * k).powi(2)).exp();
        match params {
            ModelParams::Csl(p) => consts.hbar * consts.hbar * p.gamma_coupling(consts) * gauss,
            ModelParams::Dp(_) => 4.0 * PI * consts.hbar * consts.g / (k * k) * gauss,
        }
    }
}

/// Normalised form factor 3(sin u − u cos u)/u³ of a homogeneous ball.
pub fn form_factor(u: f64) -> f64 {
    let u = u.abs();
    if u < 0.1 {
        let u2 = u * u;
        1.0 - u2 / 10.0 * (1.0 - u2 / 28.0 * (1.0 - u2 / 54.0 * (1.0 - u2 / 88.0)))
    } else {
        3.0 * (u.sin() - u * u.cos()) / (u * u * u)
    }
}

/// Fourier transform μ_k of the sphere's mass density, kg.
pub fn sphere_form_factor(k: f64, geom: &SphereGeometry) -> f64 {
    geom.mass() * form_factor(k * geom.radius())
}

/// Reference value of η (or η̃) by adaptive Gauss–Kronrod quadrature in
/// u = kr.
pub fn eta_quadrature(
    kernel: &KernelSpec,
    geom: &SphereGeometry,
    params: &ModelParams,
    consts: &PhysicalConstants,
) -> Result<f64> {
    if kernel.model != params.kind() {
        return Err(invalid("kernel model does not match the model parameters"));
    }
    let m = geom.mass();
    let r = geom.radius();
    let (power, prefactor) = match params {
        ModelParams::Csl(p) => (4, p.gamma_coupling(consts) / (6.0 * PI * PI) * m * m / r.powi(5)),
        ModelParams::Dp(_) => (2, 2.0 * consts.g / (3.0 * PI * consts.hbar) * m * m / r.powi(3)),
    };
    if prefactor == 0.0 {
        return Ok(0.0);
    }
    let ratio = r / kernel.width();
    let a = 1.0 / (ratio * ratio);
    let integrand = |u: f64| {
        let f = form_factor(u);
        u.powi(power) * (-a * u * u).exp() * f * f
    };
    let envelope = |u: f64| {
        let f = (3.0 * (1.0 + u) / (u * u * u)).min(1.0);
        u.powi(power) * (-a * u * u).exp() * f * f
    };

    let scale = ratio.min(1.0);
    let top = 60.0 * ratio.max(1.0);
    let mut u = scale * 1e-3;
    let mut peak = 0.0f64;
    let mut samples = Vec::new();
    while u < top {
        peak = peak.max(integrand(u));
        samples.push((u, envelope(u)));
        u *= 1.02;
    }
    let u_max = samples
        .iter()
        .rev()
        .find(|(_, e)| *e >= QUADRATURE_CUTOFF * peak)
        .map_or(scale, |(u, _)| (u * 1.02).max(scale));

    let mut breakpoints: Vec<f64> = vec![0.0];
    breakpoints.extend((1..=10).rev().map(|j| scale * 0.5f64.powi(j)));
    breakpoints.push(scale);
    if u_max > scale {
        let step = (PI / 2.0).min(scale).max((u_max - scale) / MAX_UNIFORM_PANELS as f64);
        let n = ((u_max - scale) / step).ceil() as usize;
        breakpoints.extend((1..=n).map(|j| scale + (u_max - scale) * j as f64 / n as f64));
    }

    let result = quadrature::integrate(integrand, &breakpoints, QUADRATURE_REL_TOL, MAX_PANELS)?;
    Ok(prefactor * result.value)
}

// h(x)/x³ with h(x) = e^{−x}(x + 2) + x − 2.
fn csl_shape(x: f64) -> f64 {
    if x < 2.0 {
        let mut term = 1.0 / 6.0;
        let mut sum = term;
        for n in 3..80 {
            term *= x / (n + 1) as f64;
            let add = (n - 1) as f64 * term;
            sum += add;
            if add < 1e-17 * sum {
                break;
            }
        }
        (-x).exp() * sum
    } else {
        ((-x).exp() * (x + 2.0) + x - 2.0) / (x * x * x)
    }
}

// g(y)/y⁶ with g(y) = 2 − 3y² + e^{−y²}(y² − 2) + √π y³ erf(y).
fn dp_shape(y: f64) -> f64 {
    let y2 = y * y;
    if y < 1.0 {
        // 3 Σ_{n≥3} (−1)^{n+1} (n−2) y^{2n−6} / (n! (2n−3))
        let mut power = 1.0 / 6.0;
        let mut sum = 0.0;
        for n in 3..60 {
            let add = (n - 2) as f64 * power / (2 * n - 3) as f64;
            sum += if n % 2 == 1 { add } else { -add };
            if add < 1e-18 * sum.abs() {
                break;
            }
            power *= y2 / (n + 1) as f64;
        }
        3.0 * sum
    } else {
        let g = 2.0 - 3.0 * y2 + (-y2).exp() * (y2 - 2.0) + PI.sqrt() * y2 * y * libm::erf(y);
        g / (y2 * y2 * y2)
    }
}

/// Closed-form η with the Gaussian width widened to w = σ(1 + χ). χ = 0 is
/// the linear-friction rate; both frameworks go through here.
///
/// ```text
/// CSL: η = 3λM²σ³/(m0² r⁶) · w · [e^{−r²/w²}(r²/w² + 2) + r²/w² − 2]
/// DP:  η = GM²/(√π ħ r⁶) · [2w³ − 3r²w + e^{−r²/w²}(r²w − 2w³) + √π r³ erf(r/w)]
/// ```
///
/// Both are evaluated in a form scaled by w rather than r, with a power
/// series for small r/w, so that neither cancellation nor underflow sets in
/// for small spheres.
pub fn eta_closed_with_chi(
    params: &ModelParams,
    geom: &SphereGeometry,
    chi: f64,
    consts: &PhysicalConstants,
) -> Result<f64> {
    require_non_negative("chi", chi)?;
    let m = geom.mass();
    let r = geom.radius();
    let w = params.sigma() * (1.0 + chi);
    let eta = match params {
        ModelParams::Csl(p) => {
            let x = (r / w).powi(2);
            3.0 * p.lambda() * m * m * p.r_c().powi(3) / (consts.m0 * consts.m0 * w.powi(5)) * csl_shape(x)
        }
        ModelParams::Dp(_) => consts.g * m * m / (PI.sqrt() * consts.hbar * w.powi(3)) * dp_shape(r / w),
    };
    if eta.is_finite() {
        Ok(eta)
    } else {
        Err(crate::Error::Numeric {
            message: format!("closed-form rate overflowed for r = {r:e}, width = {w:e}"),
            achieved: f64::INFINITY,
            requested: 0.0,
        })
    }
}

/// Linear-friction diffusion rate η, m⁻²·s⁻¹.
pub fn eta_closed(params: &ModelParams, geom: &SphereGeometry, consts: &PhysicalConstants) -> Result<f64> {
    eta_closed_with_chi(params, geom, 0.0, consts)
}

/// Collisional-dynamics diffusion rate η̃. `diss` must have been built for
/// the same σ as `params`.
pub fn eta_tilde_closed(
    params: &ModelParams,
    geom: &SphereGeometry,
    diss: &CdDissipation,
    consts: &PhysicalConstants,
) -> Result<f64> {
    eta_closed_with_chi(params, geom, diss.chi(), consts)
}

/// Γ = ħ²η/(2M k_B T_β).
pub fn gamma_lf(eta: f64, mass: f64, t_beta: f64, consts: &PhysicalConstants) -> f64 {
    consts.hbar * consts.hbar * eta / (2.0 * mass * consts.k_b * t_beta)
}

/// Γ̃ = 4η̃σ²χ(1 + χ)m0/M.
pub fn gamma_cd(eta_tilde: f64, mass: f64, sigma: f64, diss: &CdDissipation, consts: &PhysicalConstants) -> f64 {
    let chi = diss.chi();
    4.0 * eta_tilde * sigma * sigma * chi * (1.0 + chi) * consts.m0 / mass
}

/// Γ̃ written through T_χ: ħ²η̃/(2M k_B T_χ) · (1 + ħ²/(8 m0 σ² k_B T_χ)).
pub fn gamma_cd_table(eta_tilde: f64, mass: f64, sigma: f64, diss: &CdDissipation, consts: &PhysicalConstants) -> f64 {
    let kt = consts.k_b * diss.t_chi();
    let hb2 = consts.hbar * consts.hbar;
    hb2 * eta_tilde / (2.0 * mass * kt) * (1.0 + hb2 / (8.0 * consts.m0 * sigma * sigma * kt))
}

/// η and Γ for the linear-friction framework; Γ = 0 without a T_β.
pub fn rates_lf(params: &ModelParams, geom: &SphereGeometry, consts: &PhysicalConstants) -> Result<RatePair> {
    let eta = eta_closed(params, geom, consts)?;
    let gamma = match params.t_beta() {
        Some(t) if geom.mass() > 0.0 => gamma_lf(eta, geom.mass(), t, consts),
        _ => 0.0,
    };
    Ok(RatePair {
        eta,
        gamma,
        framework: Framework::Lf,
    })
}

pub fn rates_cd(
    params: &ModelParams,
    geom: &SphereGeometry,
    diss: &CdDissipation,
    consts: &PhysicalConstants,
) -> Result<RatePair> {
    let eta = eta_tilde_closed(params, geom, diss, consts)?;
    let gamma = if geom.mass() > 0.0 {
        gamma_cd(eta, geom.mass(), params.sigma(), diss, consts)
    } else {
        0.0
    };
    Ok(RatePair {
        eta,
        gamma,
        framework: Framework::Cd,
    })
}
