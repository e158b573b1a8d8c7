use collapse_core::models::DEFAULT_OMEGA0;
use collapse_core::rates;
use collapse_core::spectrum::{fit_linewidth, psd_analytic, resonance_grid, SpectrumParams};
use collapse_core::{CslParams, DpParams, ExperimentRecord, LinearizedDynamics, ModelParams};
use serde_json::json;

use super::{find_experiment, say, CliError, CmdResult, Context};
use crate::args::{ModelArg, SpectrumArgs};
use crate::output::{num, Table};
use crate::svg::{self, Axis, Panel, Series, PALETTE};
use crate::EXIT_OK;

/// Room temperature, used when the experiment record has none.
const DEFAULT_T_ENV: f64 = 300.0;

/// (η, Γ) from the flags.
fn collapse_rates(a: &SpectrumArgs, exp: &ExperimentRecord, ctx: &Context) -> Result<(f64, f64), CliError> {
    let consts = &ctx.consts;
    let mass = exp.mass();
    if let Some(m) = a.model {
        let sigma = a.sigma.ok_or_else(|| CliError::Usage("--model needs --sigma".into()))?;
        let p = match m {
            ModelArg::Dp => ModelParams::Dp(DpParams::new(sigma, a.tbeta)?),
            ModelArg::Csl => ModelParams::Csl(CslParams::new(a.lambda, sigma, a.tbeta)?),
        };
        let eta = rates::eta_closed(&p, exp.geometry(), consts)?;
        let gamma = a.tbeta.map_or(0.0, |t| rates::gamma_lf(eta, mass, t, consts));
        return Ok((eta, gamma));
    }
    let gamma = a.gamma_collapse.unwrap_or(0.0);
    let eta = match (a.eta, a.tbeta) {
        (Some(e), _) => e,
        (None, Some(t)) => 2.0 * mass * consts.k_b * t * gamma / (consts.hbar * consts.hbar),
        (None, None) if gamma == 0.0 => 0.0,
        (None, None) => {
            return Err(CliError::Usage(
                "--gamma-collapse > 0 needs --eta or --tbeta to fix the diffusion rate".into(),
            ))
        }
    };
    Ok((eta, gamma))
}

pub fn run(a: &SpectrumArgs, experiments: &[ExperimentRecord], ctx: &mut Context) -> CmdResult {
    let exp = find_experiment(experiments, &a.experiment)?;
    let omega0 = match a.omega0_hz {
        Some(hz) => 2.0 * std::f64::consts::PI * hz,
        None => exp.omega0().unwrap_or(DEFAULT_OMEGA0),
    };
    let gamma_m = a.gamma_m.unwrap_or(exp.gamma_exp());
    let t_env = a.t_env.or(exp.t_env()).unwrap_or(DEFAULT_T_ENV);
    let (eta, gamma) = collapse_rates(a, exp, ctx)?;
    let dynamics = LinearizedDynamics::new(eta, gamma, omega0, gamma_m, &ctx.consts)?;
    let width = dynamics.total_damping();
    if width <= 0.0 {
        return Err(CliError::Usage(
            "Γ + γ_m must be positive for a stationary spectrum".into(),
        ));
    }
    let grid = match a.grid {
        Some(g) => g.points()?,
        None => resonance_grid(dynamics.omega0_shifted(), width, 2001, 400)?,
    };
    ctx.record(
        "spectrum",
        json!({
            "experiment": exp.name(), "mass": exp.mass(), "t_env": t_env, "dynamics": dynamics,
            "n_points": grid.len(),
        }),
    );
    let curve = psd_analytic(&SpectrumParams::new(dynamics, exp.mass(), t_env, grid)?, &ctx.consts)?;
    let mut t = Table::new("spectrum", &["omega_rad_s", "S_two_sided", "S_one_sided"])
        .meta("experiment", exp.name())
        .meta("units", "m2_s");
    for &(w, s) in &curve.points {
        t.push(vec![num(w), num(s), num(2.0 * s)]);
    }
    ctx.out.table("spectrum.csv", &t)?;

    let fit = fit_linewidth(&curve)?;
    let mut ft = Table::new(
        "linewidth",
        &[
            "omega_peak_rad_s",
            "fwhm_rad_s",
            "hwhm_rad_s",
            "Omega0_shifted_rad_s",
            "Gamma_plus_gamma_m_s-1",
            "Gamma_s-1",
            "gamma_m_s-1",
            "eta_m-2_s-1",
        ],
    );
    ft.push(vec![
        num(fit.omega_peak),
        num(fit.fwhm),
        num(fit.hwhm),
        num(dynamics.omega0_shifted()),
        num(width),
        num(gamma),
        num(gamma_m),
        num(eta),
    ]);
    ctx.out.table("spectrum_fit.csv", &ft)?;
    say(&format!(
        "peak {:.6e} rad/s (Omega0 {:.6e}), FWHM {:.6e} s^-1 (Gamma + gamma_m {:.6e})",
        fit.omega_peak,
        dynamics.omega0_shifted(),
        fit.fwhm,
        width
    ));

    let t = ctx.out.read_table("spectrum.csv")?;
    let pts: Vec<(f64, f64)> = t
        .floats("omega_rad_s")?
        .into_iter()
        .zip(t.floats("S_one_sided")?)
        .collect();
    let x = Axis::log_fit(pts.iter().map(|p| p.0));
    let y = Axis::log_fit(pts.iter().map(|p| p.1));
    let mut p = Panel::new(
        format!("Position noise, {}", exp.name()),
        "ω (rad/s)",
        "S_xx one-sided",
        x,
        y,
    );
    p.series.push(Series::line("analytic", pts, PALETTE[0]));
    ctx.out.text("spectrum.svg", &svg::render(&[p]))?;
    Ok(EXIT_OK)
}
