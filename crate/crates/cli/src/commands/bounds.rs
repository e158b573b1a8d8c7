use collapse_core::bounds::{
    binding_indices, csl_curve, dp_curve, envelope, full_plane_exclusion_temperature, log_grid_per_decade,
    BisectionOptions, PlaneGrid, DEFAULT_CSL_LAMBDA_RANGE, DEFAULT_CSL_RC_RANGE, DEFAULT_CSL_TEMPERATURES,
    DEFAULT_DP_RANGE, GRW_LAMBDA, GRW_RC,
};
use collapse_core::{BoundCurve, ExperimentRecord, TheoryFloor};
use serde_json::json;

use super::{label, say, CliError, CmdResult, Context};
use crate::args::{BoundKind, BoundsArgs};
use crate::output::{num, Table};
use crate::svg::{self, Axis, Bar, Fill, Marker, Panel, Series, PALETTE};
use crate::EXIT_OK;

/// Adler's suggested rate range at r_C = 1e-7 m, s⁻¹.
const ADLER_DEFAULT: [f64; 3] = [1e-7, 1e-10, 1e-6];

fn abscissa_grid(a: &BoundsArgs, range: (f64, f64)) -> Result<Vec<f64>, CliError> {
    if a.per_decade == 0 {
        return Err(CliError::Usage("--per-decade must be at least 1".into()));
    }
    Ok(match a.grid {
        Some(g) => g.points()?,
        None => log_grid_per_decade(range.0, range.1, a.per_decade)?,
    })
}

fn curve_table(c: &BoundCurve, x_name: &str, y_name: &str, binding: Option<&[String]>) -> Table {
    let mut header = vec![x_name, y_name];
    if binding.is_some() {
        header.push("binding_experiment");
    }
    let mut t = Table::new("bound_curve", &header)
        .meta("model", c.model.as_str())
        .meta("experiment", &c.experiment);
    if let Some(tb) = c.t_beta_fixed {
        t = t.meta("t_beta_K", num(tb));
    }
    for i in 0..c.len() {
        let mut row = vec![num(c.abscissa[i]), num(c.ordinate[i])];
        if let Some(b) = binding {
            row.push(b[i].clone());
        }
        t.push(row);
    }
    t
}

fn write_curves(
    ctx: &mut Context,
    curves: &[BoundCurve],
    prefix: &str,
    x_name: &str,
    y_name: &str,
) -> Result<Vec<String>, CliError> {
    let mut names = Vec::new();
    for c in curves {
        let name = format!("{prefix}_{}.csv", c.experiment);
        ctx.out.table(&name, &curve_table(c, x_name, y_name, None))?;
        names.push(name);
    }
    let env = envelope(curves)?;
    let binding: Vec<String> = binding_indices(curves)?
        .into_iter()
        .map(|i| curves[i].experiment.clone())
        .collect();
    let name = format!("{prefix}_envelope.csv");
    ctx.out
        .table(&name, &curve_table(&env, x_name, y_name, Some(&binding)))?;
    names.push(name);
    Ok(names)
}

/// Series for every per-experiment CSV, read back from disk.
fn series_from_csv(
    ctx: &Context,
    files: &[String],
    x_name: &str,
    y_name: &str,
    fill: Fill,
) -> Result<Vec<Series>, CliError> {
    let mut out = Vec::new();
    for (i, f) in files.iter().enumerate() {
        let t = ctx.out.read_table(f)?;
        let pts: Vec<(f64, f64)> = t.floats(x_name)?.into_iter().zip(t.floats(y_name)?).collect();
        let name = t.meta_value("experiment").unwrap_or(f).to_string();
        let s = if name == "envelope" {
            Series::line("envelope", pts, "#000000")
        } else {
            Series::line(name, pts, PALETTE[i % PALETTE.len()]).filled(fill)
        };
        out.push(s);
    }
    Ok(out)
}

/// Log-log interpolation, clamped to the end values.
fn log_interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let i = xs.partition_point(|&v| v < x);
    if i == 0 {
        return ys[0];
    }
    if i == xs.len() {
        return ys[xs.len() - 1];
    }
    let t = (x / xs[i - 1]).ln() / (xs[i] / xs[i - 1]).ln();
    (ys[i - 1].ln() + t * (ys[i] / ys[i - 1]).ln()).exp()
}

pub fn run(a: &BoundsArgs, experiments: &[ExperimentRecord], ctx: &mut Context) -> CmdResult {
    if experiments.is_empty() {
        return Err(CliError::Usage("no experiments to bound with".into()));
    }
    match a.model {
        BoundKind::Ddp => run_ddp(a, experiments, ctx),
        BoundKind::Dcsl => run_dcsl(a, experiments, ctx),
    }
}

fn run_ddp(a: &BoundsArgs, experiments: &[ExperimentRecord], ctx: &mut Context) -> CmdResult {
    let grid = abscissa_grid(a, DEFAULT_DP_RANGE)?;
    ctx.record(
        "bounds",
        json!({"model": "ddp", "r0_lo": grid[0], "r0_hi": grid[grid.len() - 1], "n": grid.len(), "diosi_r0": a.diosi}),
    );
    let curves = experiments
        .iter()
        .map(|e| dp_curve(e, &grid, &ctx.consts))
        .collect::<Result<Vec<_>, _>>()?;
    let (xn, yn) = ("R0_m", "T_beta_threshold_K");
    let files = write_curves(ctx, &curves, "ddp", xn, yn)?;

    let series = series_from_csv(ctx, &files, xn, yn, Fill::Below)?;
    let x = Axis::log(grid[0], grid[grid.len() - 1]);
    let y = Axis::log_fit(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let mut p = Panel::new("dDP: excluded below each curve", "R₀ (m)", "T_β (K)", x, y);
    p.series = series;
    // Diósi's R₀ sits on the envelope, where the bound on T_β is read off.
    let env = ctx.out.read_table("ddp_envelope.csv")?;
    let (ex, ey) = (env.floats(xn)?, env.floats(yn)?);
    p.markers.push(Marker {
        label: format!("Diósi, R₀ = {} m", label(a.diosi)),
        x: a.diosi,
        y: log_interp(&ex, &ey, a.diosi),
    });
    ctx.out.text("ddp_bounds.svg", &svg::render(&[p]))?;
    say(&format!(
        "wrote {} files to {}",
        ctx.out.files.len(),
        ctx.out.path.display()
    ));
    Ok(EXIT_OK)
}

fn run_dcsl(a: &BoundsArgs, experiments: &[ExperimentRecord], ctx: &mut Context) -> CmdResult {
    let grid = abscissa_grid(a, DEFAULT_CSL_RC_RANGE)?;
    let temps = a.tbeta.clone().unwrap_or_else(|| DEFAULT_CSL_TEMPERATURES.to_vec());
    if temps.is_empty() {
        return Err(CliError::Usage("--tbeta needs at least one temperature".into()));
    }
    let floor = match (&a.floor_file, a.floor) {
        (Some(p), _) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
            TheoryFloor::parse_csv(&text)?
        }
        (None, Some(v)) => TheoryFloor::Constant(v),
        (None, None) => TheoryFloor::default(),
    };
    floor.validate()?;
    let grw = a.grw.clone().unwrap_or_else(|| vec![GRW_LAMBDA, GRW_RC]);
    let adler = a.adler.clone().unwrap_or_else(|| ADLER_DEFAULT.to_vec());
    if adler[1] > adler[2] {
        return Err(CliError::Usage(
            "--adler needs r_C,lambda_lo,lambda_hi with lambda_lo <= lambda_hi".into(),
        ));
    }
    ctx.record(
        "bounds",
        json!({
            "model": "dcsl", "rc_lo": grid[0], "rc_hi": grid[grid.len() - 1], "n": grid.len(),
            "t_beta": temps, "floor": floor, "grw": grw, "adler": adler,
        }),
    );

    let (xn, yn) = ("r_C_m", "lambda_threshold_s-1");
    let mut per_temp = Vec::new();
    for &t in &temps {
        let curves = experiments
            .iter()
            .map(|e| csl_curve(e, &grid, t, &ctx.consts))
            .collect::<Result<Vec<_>, _>>()?;
        let files = write_curves(ctx, &curves, &format!("dcsl_T{}", label(t)), xn, yn)?;
        per_temp.push((t, files));
    }

    let mut ft = Table::new("theory_floor", &["r_C_m", "lambda_min_s-1"]);
    for &r in &grid {
        ft.push(vec![num(r), num(floor.at(r))]);
    }
    ctx.out.table("dcsl_floor.csv", &ft)?;

    let per_decade = a.per_decade;
    let plane = PlaneGrid::new(
        log_grid_per_decade(DEFAULT_CSL_LAMBDA_RANGE.0, DEFAULT_CSL_LAMBDA_RANGE.1, per_decade)?,
        grid.clone(),
    )?;
    let t_star =
        full_plane_exclusion_temperature(&plane, experiments, &floor, &BisectionOptions::default(), &ctx.consts)?;
    let mut pt = Table::new(
        "full_plane",
        &[
            "lambda_lo_s-1",
            "lambda_hi_s-1",
            "n_lambda",
            "r_C_lo_m",
            "r_C_hi_m",
            "n_r_C",
            "T_beta_full_exclusion_K",
        ],
    );
    pt.push(vec![
        num(plane.lambda[0]),
        num(plane.lambda[plane.lambda.len() - 1]),
        plane.lambda.len().to_string(),
        num(grid[0]),
        num(grid[grid.len() - 1]),
        grid.len().to_string(),
        num(t_star),
    ]);
    ctx.out.table("dcsl_full_plane.csv", &pt)?;
    say(&format!(
        "whole dCSL plane above the floor excluded below T_beta = {t_star:.4e} K"
    ));

    let x = Axis::log(grid[0], grid[grid.len() - 1]);
    let y = Axis::log(DEFAULT_CSL_LAMBDA_RANGE.0, DEFAULT_CSL_LAMBDA_RANGE.1);
    let floor_t = ctx.out.read_table("dcsl_floor.csv")?;
    let floor_pts: Vec<(f64, f64)> = floor_t
        .floats("r_C_m")?
        .into_iter()
        .zip(floor_t.floats("lambda_min_s-1")?)
        .collect();
    let mut panels = Vec::new();
    for (t, files) in &per_temp {
        let mut p = Panel::new(format!("dCSL, T_β = {} K", label(*t)), "r_C (m)", "λ (s⁻¹)", x, y);
        p.series
            .push(Series::line("theory floor", floor_pts.clone(), "#888888").filled(Fill::Below));
        p.series.extend(series_from_csv(ctx, files, xn, yn, Fill::Above)?);
        p.markers.push(Marker {
            label: "GRW".into(),
            x: grw[1],
            y: grw[0],
        });
        p.bars.push(Bar {
            label: "Adler".into(),
            x: adler[0],
            y_lo: adler[1],
            y_hi: adler[2],
        });
        panels.push(p);
    }
    ctx.out.text("dcsl_bounds.svg", &svg::render(&panels))?;
    say(&format!(
        "wrote {} files to {}",
        ctx.out.files.len(),
        ctx.out.path.display()
    ));
    Ok(EXIT_OK)
}
