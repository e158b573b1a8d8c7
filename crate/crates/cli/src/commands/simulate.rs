use collapse_core::simulate::{
    dynamics_with_noise_temperature, simulate_trajectory, validate_against_analytic, SimConfig,
};
use collapse_core::spectrum::spectral_density;
use serde_json::json;

use super::{say, CliError, CmdResult, Context};
use crate::args::SimulateArgs;
use crate::output::{num, Table};
use crate::svg::{self, Axis, Panel, Series, PALETTE};
use crate::EXIT_OK;

/// Plot window around the resonance, in linewidths.
const PLOT_HALF_WIDTH: f64 = 10.0;

pub fn run(a: &SimulateArgs, seed: u64, ctx: &mut Context) -> CmdResult {
    if a.decimation == 0 {
        return Err(CliError::Usage("--decimation must be at least 1".into()));
    }
    if !(4..=30).contains(&a.segment_log2) {
        return Err(CliError::Usage("--segment-log2 must lie in 4..=30".into()));
    }
    let consts = ctx.consts;
    let t_noise = a.t_noise.unwrap_or(a.t_env);
    let gamma = a.gamma_ratio * a.gamma_m;
    let dynamics = dynamics_with_noise_temperature(gamma, t_noise, a.mass, a.omega0, a.gamma_m, &consts)?;
    let n_steps = (1usize << a.segment_log2) * a.decimation;
    let cfg = SimConfig::new(dynamics, a.mass, a.t_env, a.dt, n_steps, seed, a.segments)?
        .with_decimation(a.decimation)
        .with_position_noise(!a.no_position_noise);
    cfg.validate()?;
    ctx.record("simulate", json!({"sim_config": cfg, "t_noise": t_noise}));

    let v = validate_against_analytic(&cfg, &consts)?;
    let r = &v.report;
    let mut rt = Table::new("simulation_report", &["key", "value"]);
    let rows: Vec<(&str, String)> = vec![
        ("seed", r.seed.to_string()),
        ("n_segments", r.n_segments.to_string()),
        ("dt_s", num(r.dt)),
        ("decimation", r.decimation.to_string()),
        ("steps_per_segment", r.steps_per_segment.to_string()),
        ("burn_in_steps", r.burn_in_steps.to_string()),
        ("Gamma_s-1", num(r.gamma_collapse)),
        ("gamma_m_s-1", num(r.gamma_m)),
        ("linewidth_expected_s-1", num(r.linewidth_expected)),
        ("linewidth_fit_s-1", num(r.linewidth_fit)),
        ("linewidth_sigma_s-1", num(r.linewidth_sigma)),
        ("linewidth_rel_dev", num(r.linewidth_rel_dev)),
        ("peak_expected_rad_s", num(r.peak_expected)),
        ("peak_fit_rad_s", num(r.peak_fit)),
        ("peak_sigma_rad_s", num(r.peak_sigma)),
        ("peak_rel_dev", num(r.peak_rel_dev)),
        ("linewidth_tolerance", num(r.linewidth_tolerance)),
        ("peak_tolerance", num(r.peak_tolerance)),
        ("passed", r.passed.to_string()),
    ];
    let mut text = String::from("simulation against the analytic spectrum\n");
    for (k, val) in &rows {
        rt.push(vec![k.to_string(), val.clone()]);
        text.push_str(&format!("{k:<26} {val}\n"));
    }
    ctx.out.table("simulate_report.csv", &rt)?;
    ctx.out.text("simulate_report.txt", &text)?;

    let mut pt = Table::new(
        "simulated_psd",
        &["omega_rad_s", "psd_one_sided", "psd_variance", "analytic_one_sided"],
    )
    .meta("segment_len", v.psd.segment_len)
    .meta("n_segments", v.psd.n_segments);
    for i in 0..v.psd.freqs.len() {
        let w = v.psd.freqs[i];
        let s = 2.0 * spectral_density(w, &dynamics, a.mass, a.t_env, &consts);
        pt.push(vec![num(w), num(v.psd.psd[i]), num(v.psd.variance[i]), num(s)]);
    }
    ctx.out.table("simulate_psd.csv", &pt)?;

    if let Some(n) = a.trajectory {
        let tcfg = SimConfig {
            n_steps: n * a.decimation,
            ..cfg
        };
        let tr = simulate_trajectory(&tcfg, &consts)?;
        let mut tt = Table::new("trajectory", &["t_s", "x_m", "p_kg_m_s"]);
        for (i, t) in tr.times().enumerate() {
            tt.push(vec![num(t), num(tr.x[i]), num(tr.p[i])]);
        }
        ctx.out.table("simulate_trajectory.csv", &tt)?;
    }

    let t = ctx.out.read_table("simulate_psd.csv")?;
    let w = t.floats("omega_rad_s")?;
    let lo = r.peak_expected - PLOT_HALF_WIDTH * r.linewidth_expected;
    let hi = r.peak_expected + PLOT_HALF_WIDTH * r.linewidth_expected;
    let keep = |col: &str| -> Result<Vec<(f64, f64)>, CliError> {
        Ok(w.iter()
            .zip(t.floats(col)?)
            .filter(|(w, s)| **w >= lo && **w <= hi && *s > 0.0)
            .map(|(w, s)| (*w, s))
            .collect())
    };
    let sim = keep("psd_one_sided")?;
    let ana = keep("analytic_one_sided")?;
    let y = Axis::log_fit(sim.iter().chain(&ana).map(|p| p.1));
    let mut p = Panel::new(
        format!("Simulated PSD, seed {seed}"),
        "ω (rad/s)",
        "S_xx one-sided",
        Axis::linear(lo.max(0.0), hi),
        y,
    );
    p.series.push(Series::line("simulation", sim, PALETTE[0]));
    p.series.push(Series::line("analytic", ana, "#000000").dashed());
    ctx.out.text("simulate_psd.svg", &svg::render(&[p]))?;

    say(&format!(
        "linewidth {:.4e} vs {:.4e} ({:+.2}%), peak {:+.3}%: {}",
        r.linewidth_fit,
        r.linewidth_expected,
        100.0 * r.linewidth_rel_dev,
        100.0 * r.peak_rel_dev,
        if r.passed {
            "within tolerance"
        } else {
            "OUTSIDE tolerance"
        }
    ));
    Ok(EXIT_OK)
}
