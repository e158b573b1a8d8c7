use collapse_core::models::DEFAULT_OMEGA0;
use collapse_core::thermal::{contour_sweep, t_asymptotic_cd, t_asymptotic_lf};
use collapse_core::{CslParams, DpParams, ExperimentRecord, ModelParams};
use serde_json::json;

use super::{find_experiment, label, say, CliError, CmdResult, Context};
use crate::args::{CompareArgs, ModelArg};
use crate::output::{num, opt_num, Table};
use crate::svg::{self, Axis, Panel, Series, PALETTE};
use crate::EXIT_OK;

type Group = (String, String, Vec<(f64, f64)>);

fn model_name(m: ModelArg) -> &'static str {
    match m {
        ModelArg::Dp => "dp",
        ModelArg::Csl => "csl",
    }
}

pub fn run(a: &CompareArgs, experiments: &[ExperimentRecord], ctx: &mut Context) -> CmdResult {
    if a.sigma.is_empty() {
        return Err(CliError::Usage("--sigma needs at least one value".into()));
    }
    let exp = find_experiment(experiments, &a.experiment)?;
    let geom = *exp.geometry();
    let omega0 = match a.omega0_hz {
        Some(hz) => 2.0 * std::f64::consts::PI * hz,
        None => exp.omega0().unwrap_or(DEFAULT_OMEGA0),
    };
    let model = model_name(a.model);
    ctx.record(
        "compare",
        json!({
            "model": model, "sigma": a.sigma, "lambda": a.lambda, "experiment": exp.name(),
            "mass": geom.mass(), "radius": geom.radius(), "omega0": omega0,
            "tbeta_grid": [a.tbeta_grid.lo, a.tbeta_grid.hi, a.tbeta_grid.n],
            "tchi_grid": [a.tchi_grid.lo, a.tchi_grid.hi, a.tchi_grid.n],
        }),
    );
    let consts = ctx.consts;
    let params = |sigma: f64| -> Result<ModelParams, CliError> {
        Ok(match a.model {
            ModelArg::Dp => ModelParams::Dp(DpParams::new(sigma, None)?),
            ModelArg::Csl => ModelParams::Csl(CslParams::new(a.lambda, sigma, None)?),
        })
    };

    let tb = a.tbeta_grid.points()?;
    let tc = a.tchi_grid.points()?;
    let mut temps = Table::new(
        "asymptotic_temperature",
        &["curve", "sigma_m", "T_dissipation_K", "T_asymptotic_K"],
    )
    .meta("model", model)
    .meta("omega0_rad_s", num(omega0));
    for &t in &tb {
        temps.push(vec![
            "lf".into(),
            String::new(),
            num(t),
            num(t_asymptotic_lf(t, omega0, &consts)),
        ]);
    }
    let mut contour = Table::new("contour", &["T_chi", "T_beta_lower", "T_beta_upper", "model", "sigma"])
        .meta("omega0_rad_s", num(omega0));
    for &s in &a.sigma {
        let p = params(s)?;
        for &t in &tc {
            temps.push(vec![
                "cd".into(),
                num(s),
                num(t),
                num(t_asymptotic_cd(&p, &geom, t, omega0, &consts)?),
            ]);
        }
        for c in contour_sweep(&p, &geom, &tc, omega0, &consts)? {
            contour.push(vec![
                num(c.t_chi),
                opt_num(c.t_beta_lower),
                opt_num(c.t_beta_upper),
                model.into(),
                num(s),
            ]);
        }
    }
    let tname = format!("compare_{model}_temperatures.csv");
    let cname = format!("compare_{model}_contour.csv");
    ctx.out.table(&tname, &temps)?;
    ctx.out.table(&cname, &contour)?;

    // Figure, from the CSVs.
    let temps = ctx.out.read_table(&tname)?;
    let curve = temps.strings("curve")?;
    let sig = temps.strings("sigma_m")?;
    let td = temps.floats("T_dissipation_K")?;
    let ta = temps.floats("T_asymptotic_K")?;
    // (curve, sigma, points), one entry per run of equal keys.
    let mut groups: Vec<Group> = Vec::new();
    for i in 0..curve.len() {
        match groups.last_mut() {
            Some(g) if g.0 == curve[i] && g.1 == sig[i] => g.2.push((td[i], ta[i])),
            _ => groups.push((curve[i].clone(), sig[i].clone(), vec![(td[i], ta[i])])),
        }
    }
    let all_x = groups.iter().flat_map(|g| g.2.iter().map(|p| p.0));
    let xa = Axis::log_fit(all_x);
    let ya = Axis::log_fit(groups.iter().flat_map(|g| g.2.iter().map(|p| p.1)));
    let mut pa = Panel::new(
        format!("{}: asymptotic temperatures", model.to_uppercase()),
        "T_β, T_χ (K)",
        "T, T̃ (K)",
        xa,
        ya,
    );
    for (i, (c, s, pts)) in groups.into_iter().enumerate() {
        let name = if c == "lf" {
            "T(T_β), linear friction".to_string()
        } else {
            format!("T̃(T_χ), σ = {s} m")
        };
        let mut line = Series::line(name, pts, PALETTE[i % PALETTE.len()]);
        if c == "lf" {
            line.color = "#000000".into();
        } else {
            line = line.dashed();
        }
        pa.series.push(line);
    }

    let ct = ctx.out.read_table(&cname)?;
    let tchi = ct.floats("T_chi")?;
    let lo = ct.floats("T_beta_lower")?;
    let hi = ct.floats("T_beta_upper")?;
    let csig = ct.strings("sigma")?;
    let yb = Axis::log_fit(lo.iter().chain(hi.iter()).copied());
    let mut pb = Panel::new(
        format!("{}: T(T_β) = T̃(T_χ)", model.to_uppercase()),
        "T_χ (K)",
        "T_β (K)",
        Axis::log(a.tchi_grid.lo, a.tchi_grid.hi),
        yb,
    );
    for (k, &sv) in a.sigma.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let s = num(sv);
        let pick = |ys: &[f64]| -> Vec<(f64, f64)> {
            (0..tchi.len())
                .filter(|&i| csig[i] == s && ys[i].is_finite())
                .map(|i| (tchi[i], ys[i]))
                .collect()
        };
        pb.series
            .push(Series::line(format!("σ = {} m", label(sv)), pick(&lo), color));
        pb.series.push(Series::line(String::new(), pick(&hi), color).dashed());
    }
    ctx.out.text(&format!("compare_{model}.svg"), &svg::render(&[pa, pb]))?;
    say(&format!(
        "wrote {} files to {}",
        ctx.out.files.len(),
        ctx.out.path.display()
    ));
    Ok(EXIT_OK)
}
