//! Domain types shared by every other module: physical constants, collapse
//! model parameters, the levitated sphere and the experiment records.
//!
//! All quantities are SI. Angular frequencies are rad/s throughout; only the
//! experiment config file speaks Hz.

mod config;

pub use config::{builtin_experiments, load_experiments, to_config_string, CONFIG_SCHEMA};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_non_negative, require_positive, Result};
use crate::rates;

/// Fused silica, used for the Paul-trap nanoparticles.
pub const SILICA_DENSITY: f64 = 2200.0;
/// Sintered NdFeB, used for the levitated micromagnet.
pub const NDFEB_DENSITY: f64 = 7400.0;
/// Trap frequency assumed by the spectrum, thermal and simulation commands
/// when none is configured.
pub const DEFAULT_OMEGA0: f64 = 2.0 * PI * 1.0e5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Reduced Planck constant, J·s.
    pub hbar: f64,
    /// Boltzmann constant, J/K.
    pub k_b: f64,
    /// Newton constant, m³·kg⁻¹·s⁻².
    pub g: f64,
    /// Reference nucleon mass, kg.
    pub m0: f64,
    /// Density used when an experiment gives neither radius nor density, kg/m³.
    pub default_density: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        // CODATA 2018; m0 is one atomic mass unit.
        Self {
            hbar: 1.054_571_817e-34,
            k_b: 1.380_649e-23,
            g: 6.674_30e-11,
            m0: 1.660_539_066_60e-27,
            default_density: SILICA_DENSITY,
        }
    }
}

impl PhysicalConstants {
    pub fn with_m0(mut self, m0: f64) -> Result<Self> {
        self.m0 = require_positive("m0", m0)?;
        Ok(self)
    }

    pub fn with_default_density(mut self, density: f64) -> Result<Self> {
        self.default_density = require_positive("default density", density)?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("hbar", self.hbar)?;
        require_positive("k_B", self.k_b)?;
        require_positive("G", self.g)?;
        require_positive("m0", self.m0)?;
        require_positive("default density", self.default_density)?;
        Ok(())
    }
}

/// Diósi–Penrose parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpParams {
    r0: f64,
    t_beta: Option<f64>,
}

impl DpParams {
    pub fn new(r0: f64, t_beta: Option<f64>) -> Result<Self> {
        require_positive("R0", r0)?;
        if let Some(t) = t_beta {
            require_positive("T_beta", t)?;
        }
        Ok(Self { r0, t_beta })
    }

    /// Localisation length R₀, m.
    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn t_beta(&self) -> Option<f64> {
        self.t_beta
    }
}

/// Continuous spontaneous localisation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CslParams {
    lambda: f64,
    r_c: f64,
    t_beta: Option<f64>,
}

impl CslParams {
    pub fn new(lambda: f64, r_c: f64, t_beta: Option<f64>) -> Result<Self> {
        require_non_negative("lambda", lambda)?;
        require_positive("r_C", r_c)?;
        if let Some(t) = t_beta {
            require_positive("T_beta", t)?;
        }
        Ok(Self { lambda, r_c, t_beta })
    }

    /// Collapse rate λ, s⁻¹.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Localisation length r_C, m.
    pub fn r_c(&self) -> f64 {
        self.r_c
    }

    pub fn t_beta(&self) -> Option<f64> {
        self.t_beta
    }

    /// γ = (√(4π) r_C)³ λ / m0², in m³·s⁻¹·kg⁻².
    pub fn gamma_coupling(&self, consts: &PhysicalConstants) -> f64 {
        (4.0 * PI).powf(1.5) * self.r_c.powi(3) * self.lambda / (consts.m0 * consts.m0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    Dp,
    Csl,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelParams {
    Dp(DpParams),
    Csl(CslParams),
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Dp(_) => ModelKind::Dp,
            ModelParams::Csl(_) => ModelKind::Csl,
        }
    }

    /// Gaussian cut-off length σ of the noise correlator (R₀ or r_C).
    pub fn sigma(&self) -> f64 {
        match self {
            ModelParams::Dp(p) => p.r0,
            ModelParams::Csl(p) => p.r_c,
        }
    }

    pub fn t_beta(&self) -> Option<f64> {
        match self {
            ModelParams::Dp(p) => p.t_beta,
            ModelParams::Csl(p) => p.t_beta,
        }
    }

    pub fn with_t_beta(self, t_beta: Option<f64>) -> Result<Self> {
        Ok(match self {
            ModelParams::Dp(p) => ModelParams::Dp(DpParams::new(p.r0, t_beta)?),
            ModelParams::Csl(p) => ModelParams::Csl(CslParams::new(p.lambda, p.r_c, t_beta)?),
        })
    }
}

/// Dissipation of the collisional-dynamics framework. χ is always derived
/// from T_χ and the model's σ at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdDissipation {
    t_chi: f64,
    chi: f64,
}

impl CdDissipation {
    pub fn new(t_chi: f64, sigma: f64, consts: &PhysicalConstants) -> Result<Self> {
        require_positive("T_chi", t_chi)?;
        require_positive("sigma", sigma)?;
        let chi = consts.hbar * consts.hbar / (8.0 * consts.m0 * sigma * sigma * consts.k_b * t_chi);
        Ok(Self { t_chi, chi })
    }

    pub fn for_model(t_chi: f64, params: &ModelParams, consts: &PhysicalConstants) -> Result<Self> {
        Self::new(t_chi, params.sigma(), consts)
    }

    pub fn t_chi(&self) -> f64 {
        self.t_chi
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }
}

/// Radius of a homogeneous sphere of the given mass and density.
pub fn derive_radius(mass: f64, density: f64) -> Result<f64> {
    require_positive("mass", mass)?;
    require_positive("density", density)?;
    Ok((3.0 * mass / (4.0 * PI * density)).cbrt())
}

pub fn sphere_mass(radius: f64, density: f64) -> f64 {
    4.0 / 3.0 * PI * radius.powi(3) * density
}

/// Homogeneous rigid sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereGeometry {
    mass: f64,
    radius: f64,
    density: f64,
}

impl SphereGeometry {
    pub fn from_mass_density(mass: f64, density: f64) -> Result<Self> {
        let radius = derive_radius(mass, density)?;
        Ok(Self { mass, radius, density })
    }

    /// Zero mass is accepted here so that rate limits can be probed.
    pub fn from_mass_radius(mass: f64, radius: f64) -> Result<Self> {
        require_non_negative("mass", mass)?;
        require_positive("radius", radius)?;
        let density = mass / (4.0 / 3.0 * PI * radius.powi(3));
        Ok(Self { mass, radius, density })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    /// Same radius, different mass.
    pub fn with_mass(&self, mass: f64) -> Result<Self> {
        Self::from_mass_radius(mass, self.radius)
    }
}

/// One levitated-optomechanics measurement. Frequencies are held as the
/// cyclic values of the config file so that serialisation round-trips
/// exactly; accessors return rad/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    name: String,
    mass: f64,
    gamma_exp_hz: f64,
    radius: Option<f64>,
    density: f64,
    omega0_hz: Option<f64>,
    t_env: Option<f64>,
    geometry: SphereGeometry,
}

impl ExperimentRecord {
    /// Builds and validates a record. `density` falls back to the constants'
    /// default; the radius is derived from mass and density when absent.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        mass: f64,
        gamma_exp_hz: f64,
        radius: Option<f64>,
        density: Option<f64>,
        omega0_hz: Option<f64>,
        t_env: Option<f64>,
        consts: &PhysicalConstants,
    ) -> Result<Self> {
        let name = name.into();
        let fail = |message: String| crate::Error::Validation {
            record: name.clone(),
            message,
        };
        if name.trim().is_empty() {
            return Err(fail("name must not be empty".into()));
        }
        let checks: [(&str, Option<f64>); 6] = [
            ("mass_kg", Some(mass)),
            ("gamma_exp_hz", Some(gamma_exp_hz)),
            ("radius_m", radius),
            ("density_kg_m3", density),
            ("omega0_hz", omega0_hz),
            ("T_env_K", t_env),
        ];
        for (key, value) in checks {
            if let Some(v) = value {
                require_positive(key, v).map_err(|e| fail(e.to_string()))?;
            }
        }
        let density = density.unwrap_or(consts.default_density);
        let geometry = match radius {
            Some(r) => SphereGeometry::from_mass_radius(mass, r),
            None => SphereGeometry::from_mass_density(mass, density),
        }
        .map_err(|e| fail(e.to_string()))?;
        Ok(Self {
            name,
            mass,
            gamma_exp_hz,
            radius,
            density,
            omega0_hz,
            t_env,
            geometry,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Measured total linewidth γ_exp, rad/s.
    pub fn gamma_exp(&self) -> f64 {
        2.0 * PI * self.gamma_exp_hz
    }

    pub fn gamma_exp_hz(&self) -> f64 {
        self.gamma_exp_hz
    }

    /// Radius as configured, if any; see [`Self::geometry`] for the resolved one.
    pub fn radius_input(&self) -> Option<f64> {
        self.radius
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn omega0(&self) -> Option<f64> {
        self.omega0_hz.map(|f| 2.0 * PI * f)
    }

    pub fn omega0_hz(&self) -> Option<f64> {
        self.omega0_hz
    }

    pub fn t_env(&self) -> Option<f64> {
        self.t_env
    }

    pub fn geometry(&self) -> &SphereGeometry {
        &self.geometry
    }

    /// Copy with every measured linewidth scaled by `factor`.
    pub fn with_gamma_scaled(&self, factor: f64) -> Result<Self> {
        require_positive("linewidth scale", factor)?;
        let mut out = self.clone();
        out.gamma_exp_hz *= factor;
        Ok(out)
    }
}

/// Coefficients of the linearised centre-of-mass dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearizedDynamics {
    /// Diffusion rate η, m⁻²·s⁻¹.
    pub eta: f64,
    /// Collapse dissipation rate Γ, s⁻¹.
    pub gamma: f64,
    /// α = Γ/(2ηħ); zero when the collapse is switched off.
    pub alpha: f64,
    /// Bare trap frequency ω₀, rad/s.
    pub omega0: f64,
    /// Shifted frequency squared Ω₀² = ω₀² + (Γ/2)(Γ/2 + γ_m).
    pub omega0_sq_shifted: f64,
    /// Mechanical (environmental) damping γ_m, s⁻¹.
    pub gamma_m: f64,
}

impl LinearizedDynamics {
    pub fn new(eta: f64, gamma: f64, omega0: f64, gamma_m: f64, consts: &PhysicalConstants) -> Result<Self> {
        require_non_negative("eta", eta)?;
        require_non_negative("Gamma", gamma)?;
        require_positive("omega0", omega0)?;
        require_non_negative("gamma_m", gamma_m)?;
        let alpha = if gamma == 0.0 {
            0.0
        } else if eta > 0.0 {
            gamma / (2.0 * eta * consts.hbar)
        } else {
            return Err(invalid("Gamma > 0 requires eta > 0 (alpha = Gamma/(2 eta hbar))"));
        };
        let omega0_sq_shifted = omega0 * omega0 + 0.5 * gamma * (0.5 * gamma + gamma_m);
        Ok(Self {
            eta,
            gamma,
            alpha,
            omega0,
            omega0_sq_shifted,
            gamma_m,
        })
    }

    /// Dynamics of a sphere under a linear-friction collapse model. Without
    /// a T_β the model is non-dissipative and Γ = 0.
    pub fn from_model(
        params: &ModelParams,
        geom: &SphereGeometry,
        omega0: f64,
        gamma_m: f64,
        consts: &PhysicalConstants,
    ) -> Result<Self> {
        let eta = rates::eta_closed(params, geom, consts)?;
        let gamma = match params.t_beta() {
            Some(t) => rates::gamma_lf(eta, geom.mass(), t, consts),
            None => 0.0,
        };
        Self::new(eta, gamma, omega0, gamma_m, consts)
    }

    /// Collapse switched off entirely.
    pub fn thermal_only(omega0: f64, gamma_m: f64, consts: &PhysicalConstants) -> Result<Self> {
        Self::new(0.0, 0.0, omega0, gamma_m, consts)
    }

    pub fn omega0_shifted(&self) -> f64 {
        self.omega0_sq_shifted.sqrt()
    }

    pub fn total_damping(&self) -> f64 {
        self.gamma + self.gamma_m
    }
}
