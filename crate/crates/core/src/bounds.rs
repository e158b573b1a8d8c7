//! Exclusion bounds from measured linewidths.
//!
//! A collapse model is excluded by an experiment when the dissipation it
//! predicts exceeds the full measured linewidth, Γ > γ_exp. Using the whole
//! of γ_exp as the budget for Γ ignores every other damping channel, so the
//! excluded regions are conservative.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_positive, Error, Result};
use crate::models::{CslParams, DpParams, ExperimentRecord, ModelParams, PhysicalConstants};
use crate::rates;

/// Grid density used when none is given.
pub const DEFAULT_POINTS_PER_DECADE: usize = 200;
/// R₀ range of the dDP sweep, m.
pub const DEFAULT_DP_RANGE: (f64, f64) = (1e-15, 1e-4);
/// r_C range of the dCSL sweep, m.
pub const DEFAULT_CSL_RC_RANGE: (f64, f64) = (1e-9, 1e-3);
/// λ range of the dCSL plane, s⁻¹.
pub const DEFAULT_CSL_LAMBDA_RANGE: (f64, f64) = (1e-20, 1e-6);
/// T_β values of the dCSL panels, K.
pub const DEFAULT_CSL_TEMPERATURES: [f64; 4] = [1.0, 1e-4, 1e-6, 1e-9];
/// A second set of panel temperatures, K.
pub const ALTERNATE_CSL_TEMPERATURES: [f64; 4] = [1.0, 1e-3, 1e-5, 1e-7];
/// GRW collapse rate, s⁻¹; also the default floor of the full-plane search.
pub const GRW_LAMBDA: f64 = 1e-16;
pub const GRW_RC: f64 = 1e-7;
/// Diósi's proposed R₀, m.
pub const DIOSI_R0: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundModel {
    Ddp,
    Dcsl,
}

impl BoundModel {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundModel::Ddp => "ddp",
            BoundModel::Dcsl => "dcsl",
        }
    }
}

impl std::str::FromStr for BoundModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ddp" | "dp" => Ok(BoundModel::Ddp),
            "dcsl" | "csl" => Ok(BoundModel::Dcsl),
            other => Err(invalid(format!("unknown model `{other}`, expected ddp or dcsl"))),
        }
    }
}

/// Threshold curve of one experiment (or an envelope). For dDP the
/// ordinate is the T_β below which the model is excluded; for dCSL it is
/// the λ above which it is excluded at `t_beta_fixed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub model: BoundModel,
    pub abscissa: Vec<f64>,
    pub ordinate: Vec<f64>,
    pub experiment: String,
    pub t_beta_fixed: Option<f64>,
}

impl BoundCurve {
    pub fn len(&self) -> usize {
        self.abscissa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abscissa.is_empty()
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    require_positive("grid lower end", lo)?;
    require_positive("grid upper end", hi)?;
    if hi < lo || n == 0 || (n == 1 && hi != lo) {
        return Err(invalid(format!("bad grid {lo:e}:{hi:e}:{n}")));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.log10(), hi.log10());
    let mut g: Vec<f64> = (0..n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
        .collect();
    g[0] = lo;
    g[n - 1] = hi;
    Ok(g)
}

/// Log grid with the given density per decade, end points included.
pub fn log_grid_per_decade(lo: f64, hi: f64, per_decade: usize) -> Result<Vec<f64>> {
    require_positive("grid lower end", lo)?;
    require_positive("grid upper end", hi)?;
    if per_decade == 0 {
        return Err(invalid("points per decade must be positive"));
    }
    let decades = (hi / lo).log10();
    let n = (decades * per_decade as f64).round() as usize + 1;
    log_grid(lo, hi, n.max(2))
}

/// Collapse part of the measured linewidth when a mechanical damping
/// γ_m is attributed to the environment.
pub fn collapse_budget(exp: &ExperimentRecord, gamma_m: f64) -> Result<f64> {
    if !(gamma_m >= 0.0 && gamma_m < exp.gamma_exp()) {
        return Err(invalid(format!(
            "gamma_m = {gamma_m:e} must lie in [0, gamma_exp = {:e})",
            exp.gamma_exp()
        )));
    }
    Ok(exp.gamma_exp() - gamma_m)
}

/// T_β threshold with an explicit budget for Γ, K.
pub fn tbeta_threshold_dp_with_budget(
    r0: f64,
    exp: &ExperimentRecord,
    budget: f64,
    consts: &PhysicalConstants,
) -> Result<f64> {
    require_positive("Gamma budget", budget)?;
    let params = ModelParams::Dp(DpParams::new(r0, None)?);
    let geom = exp.geometry();
    let eta = rates::eta_closed(&params, geom, consts)?;
    Ok(consts.hbar * consts.hbar * eta / (2.0 * geom.mass() * consts.k_b * budget))
}

/// T_β below which dDP at R₀ is excluded by `exp`, K.
pub fn tbeta_threshold_dp(r0: f64, exp: &ExperimentRecord, consts: &PhysicalConstants) -> Result<f64> {
    tbeta_threshold_dp_with_budget(r0, exp, exp.gamma_exp(), consts)
}

/// η_CSL/λ for the experiment's sphere.
fn eta_per_lambda(r_c: f64, exp: &ExperimentRecord, consts: &PhysicalConstants) -> Result<f64> {
    let params = ModelParams::Csl(CslParams::new(1.0, r_c, None)?);
    rates::eta_closed(&params, exp.geometry(), consts)
}

pub fn lambda_threshold_csl_with_budget(
    r_c: f64,
    t_beta: f64,
    exp: &ExperimentRecord,
    budget: f64,
    consts: &PhysicalConstants,
) -> Result<f64> {
    require_positive("T_beta", t_beta)?;
    require_positive("Gamma budget", budget)?;
    let eta_bar = eta_per_lambda(r_c, exp, consts)?;
    Ok(2.0 * exp.mass() * consts.k_b * t_beta * budget / (consts.hbar * consts.hbar * eta_bar))
}

/// λ above which dCSL at (r_C, T_β) is excluded by `exp`, s⁻¹.
pub fn lambda_threshold_csl(r_c: f64, t_beta: f64, exp: &ExperimentRecord, consts: &PhysicalConstants) -> Result<f64> {
    lambda_threshold_csl_with_budget(r_c, t_beta, exp, exp.gamma_exp(), consts)
}

pub fn dp_curve(exp: &ExperimentRecord, r0_grid: &[f64], consts: &PhysicalConstants) -> Result<BoundCurve> {
    let ordinate = r0_grid
        .par_iter()
        .map(|&r0| tbeta_threshold_dp(r0, exp, consts))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundCurve {
        model: BoundModel::Ddp,
        abscissa: r0_grid.to_vec(),
        ordinate,
        experiment: exp.name().to_string(),
        t_beta_fixed: None,
    })
}

pub fn csl_curve(
    exp: &ExperimentRecord,
    rc_grid: &[f64],
    t_beta: f64,
    consts: &PhysicalConstants,
) -> Result<BoundCurve> {
    let ordinate = rc_grid
        .par_iter()
        .map(|&r_c| lambda_threshold_csl(r_c, t_beta, exp, consts))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundCurve {
        model: BoundModel::Dcsl,
        abscissa: rc_grid.to_vec(),
        ordinate,
        experiment: exp.name().to_string(),
        t_beta_fixed: Some(t_beta),
    })
}

fn check_aligned(curves: &[BoundCurve]) -> Result<&BoundCurve> {
    let first = curves
        .first()
        .ok_or_else(|| Error::Alignment("no curves given".into()))?;
    for c in curves {
        if c.model != first.model {
            return Err(Error::Alignment(format!(
                "model {} does not match {}",
                c.model.as_str(),
                first.model.as_str()
            )));
        }
        if c.abscissa != first.abscissa || c.ordinate.len() != c.abscissa.len() {
            return Err(Error::Alignment(format!(
                "curve `{}` is not on the grid of `{}`",
                c.experiment, first.experiment
            )));
        }
        if c.t_beta_fixed != first.t_beta_fixed {
            return Err(Error::Alignment(format!(
                "curve `{}` is for a different T_beta",
                c.experiment
            )));
        }
    }
    Ok(first)
}

fn stronger(model: BoundModel, a: f64, b: f64) -> bool {
    match model {
        BoundModel::Ddp => a > b,
        BoundModel::Dcsl => a < b,
    }
}

/// Index of the binding curve at every abscissa.
pub fn binding_indices(curves: &[BoundCurve]) -> Result<Vec<usize>> {
    let first = check_aligned(curves)?;
    Ok((0..first.len())
        .map(|i| {
            let mut best = 0;
            for (j, c) in curves.iter().enumerate().skip(1) {
                if stronger(first.model, c.ordinate[i], curves[best].ordinate[i]) {
                    best = j;
                }
            }
            best
        })
        .collect())
}

/// Pointwise strongest bound: largest T_β threshold for dDP, smallest λ
/// threshold for dCSL.
pub fn envelope(curves: &[BoundCurve]) -> Result<BoundCurve> {
    let first = check_aligned(curves)?;
    if curves.len() == 1 {
        return Ok(first.clone());
    }
    let idx = binding_indices(curves)?;
    Ok(BoundCurve {
        model: first.model,
        abscissa: first.abscissa.clone(),
        ordinate: idx.iter().enumerate().map(|(i, &j)| curves[j].ordinate[i]).collect(),
        experiment: "envelope".into(),
        t_beta_fixed: first.t_beta_fixed,
    })
}

/// Lower edge of the region kept out of the full-plane search: points with
/// λ below the floor are not required to be excluded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TheoryFloor {
    Constant(f64),
    /// (r_C, λ_min) pairs, r_C increasing; interpolated log-log, held
    /// constant beyond the ends.
    Curve(Vec<(f64, f64)>),
}

impl Default for TheoryFloor {
    fn default() -> Self {
        TheoryFloor::Constant(GRW_LAMBDA)
    }
}

impl TheoryFloor {
    pub fn validate(&self) -> Result<()> {
        match self {
            TheoryFloor::Constant(v) => require_positive("lambda floor", *v).map(|_| ()),
            TheoryFloor::Curve(pts) => {
                if pts.is_empty() {
                    return Err(invalid("floor curve is empty"));
                }
                for &(r, l) in pts {
                    require_positive("floor r_C", r)?;
                    require_positive("floor lambda", l)?;
                }
                if pts.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(invalid("floor curve r_C must be strictly increasing"));
                }
                Ok(())
            }
        }
    }

    pub fn at(&self, r_c: f64) -> f64 {
        match self {
            TheoryFloor::Constant(v) => *v,
            TheoryFloor::Curve(pts) => {
                let first = pts[0];
                let last = pts[pts.len() - 1];
                if r_c <= first.0 {
                    return first.1;
                }
                if r_c >= last.0 {
                    return last.1;
                }
                let j = pts.partition_point(|p| p.0 <= r_c);
                let (a, b) = (pts[j - 1], pts[j]);
                let s = (r_c / a.0).ln() / (b.0 / a.0).ln();
                (a.1.ln() + s * (b.1 / a.1).ln()).exp()
            }
        }
    }

    /// Reads `r_C, lambda_min` rows; blank lines and `#` comments are skipped.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut pts = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: Option<(f64, f64)> = match fields.as_slice() {
                [a, b] => a.parse().ok().zip(b.parse().ok()),
                _ => None,
            };
            match parsed {
                Some(p) => pts.push(p),
                // A header row is allowed.
                None if pts.is_empty() && fields.iter().any(|f| f.parse::<f64>().is_err()) && n < 2 => {}
                None => {
                    return Err(Error::Parse {
                        line: n + 1,
                        key: "floor".into(),
                        message: format!("expected `r_C, lambda_min`, got `{line}`"),
                    })
                }
            }
        }
        let floor = TheoryFloor::Curve(pts);
        floor.validate()?;
        Ok(floor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneGrid {
    pub lambda: Vec<f64>,
    pub r_c: Vec<f64>,
}

impl PlaneGrid {
    pub fn new(lambda: Vec<f64>, r_c: Vec<f64>) -> Result<Self> {
        if lambda.is_empty() || r_c.is_empty() {
            return Err(invalid("plane grid axes must be non-empty"));
        }
        Ok(Self { lambda, r_c })
    }

    /// The plotted plane: λ ∈ [1e-20, 1e-6] s⁻¹, r_C ∈ [1e-9, 1e-3] m.
    pub fn default_plane(per_decade: usize) -> Result<Self> {
        let (l0, l1) = DEFAULT_CSL_LAMBDA_RANGE;
        let (r0, r1) = DEFAULT_CSL_RC_RANGE;
        Self::new(
            log_grid_per_decade(l0, l1, per_decade)?,
            log_grid_per_decade(r0, r1, per_decade)?,
        )
    }
}

/// Settings of the bisection in T_β.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectionOptions {
    pub t_lo: f64,
    pub t_hi: f64,
    /// Stop when t_hi/t_lo − 1 falls below this.
    pub rel_tol: f64,
}

impl Default for BisectionOptions {
    fn default() -> Self {
        Self {
            t_lo: 1e-30,
            t_hi: 1e6,
            rel_tol: 1e-9,
        }
    }
}

/// Per-r_C data of the full-plane search: the smallest λ that must be
/// excluded and the envelope λ threshold per kelvin of T_β.
struct PlaneColumn {
    lambda_min: f64,
    threshold_per_kelvin: f64,
}

fn plane_columns(
    grid: &PlaneGrid,
    experiments: &[ExperimentRecord],
    floor: &TheoryFloor,
    consts: &PhysicalConstants,
) -> Result<Vec<PlaneColumn>> {
    let cols: Vec<Option<PlaneColumn>> = grid
        .r_c
        .par_iter()
        .map(|&r_c| {
            let f = floor.at(r_c);
            let Some(lambda_min) = grid.lambda.iter().copied().filter(|&l| l >= f).reduce(f64::min) else {
                return Ok(None);
            };
            let mut best = f64::INFINITY;
            for exp in experiments {
                best = best.min(lambda_threshold_csl(r_c, 1.0, exp, consts)?);
            }
            Ok(Some(PlaneColumn {
                lambda_min,
                threshold_per_kelvin: best,
            }))
        })
        .collect::<Result<_>>()?;
    Ok(cols.into_iter().flatten().collect())
}

fn plane_fully_excluded(cols: &[PlaneColumn], t_beta: f64) -> bool {
    cols.iter().all(|c| c.lambda_min > c.threshold_per_kelvin * t_beta)
}

/// Largest T_β at which every grid point of the dCSL plane above the floor
/// is excluded, found by bisection in log T_β. Below the returned value the
/// whole plane is excluded.
pub fn full_plane_exclusion_temperature(
    grid: &PlaneGrid,
    experiments: &[ExperimentRecord],
    floor: &TheoryFloor,
    opts: &BisectionOptions,
    consts: &PhysicalConstants,
) -> Result<f64> {
    if experiments.is_empty() {
        return Err(invalid("no experiments given"));
    }
    floor.validate()?;
    require_positive("bisection lower end", opts.t_lo)?;
    require_positive("bisection tolerance", opts.rel_tol)?;
    if opts.t_hi <= opts.t_lo {
        return Err(invalid("bisection upper end must exceed the lower end"));
    }
    let cols = plane_columns(grid, experiments, floor, consts)?;
    if cols.is_empty() {
        return Err(invalid("every grid point lies below the floor"));
    }
    let at_lo = plane_fully_excluded(&cols, opts.t_lo);
    let at_hi = plane_fully_excluded(&cols, opts.t_hi);
    if !at_lo || at_hi {
        return Err(Error::Bisection(format!(
            "T_beta = {:e} K: plane {}excluded; T_beta = {:e} K: plane {}excluded",
            opts.t_lo,
            if at_lo { "fully " } else { "not fully " },
            opts.t_hi,
            if at_hi { "fully " } else { "not fully " },
        )));
    }
    let (mut lo, mut hi) = (opts.t_lo, opts.t_hi);
    while hi / lo - 1.0 > opts.rel_tol {
        let mid = (lo * hi).sqrt();
        if plane_fully_excluded(&cols, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentMargin {
    pub experiment: String,
    /// Γ predicted for this sphere, s⁻¹.
    pub gamma: f64,
    /// Γ/γ_exp.
    pub margin: f64,
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExclusionVerdict {
    pub point: ModelParams,
    pub excluded: bool,
    /// Experiment with the largest margin, when the point is excluded.
    pub binding_experiment: Option<String>,
    /// Largest Γ/γ_exp over the experiments.
    pub margin: f64,
    pub per_experiment: Vec<ExperimentMargin>,
}

/// Compares Γ with every γ_exp. A point without T_β is non-dissipative and
/// never excluded.
pub fn verdict(
    point: &ModelParams,
    experiments: &[ExperimentRecord],
    consts: &PhysicalConstants,
) -> Result<ExclusionVerdict> {
    let mut per_experiment = Vec::with_capacity(experiments.len());
    for exp in experiments {
        let (gamma, excluded) = match (point, point.t_beta()) {
            (_, None) => (0.0, false),
            (ModelParams::Dp(p), Some(t)) => {
                let th = tbeta_threshold_dp(p.r0(), exp, consts)?;
                let eta = rates::eta_closed(point, exp.geometry(), consts)?;
                (rates::gamma_lf(eta, exp.mass(), t, consts), t < th)
            }
            (ModelParams::Csl(p), Some(t)) => {
                let th = lambda_threshold_csl(p.r_c(), t, exp, consts)?;
                let eta = rates::eta_closed(point, exp.geometry(), consts)?;
                (rates::gamma_lf(eta, exp.mass(), t, consts), p.lambda() > th)
            }
        };
        per_experiment.push(ExperimentMargin {
            experiment: exp.name().to_string(),
            gamma,
            margin: gamma / exp.gamma_exp(),
            excluded,
        });
    }
    let excluded = per_experiment.iter().any(|m| m.excluded);
    let best = per_experiment.iter().max_by(|a, b| a.margin.total_cmp(&b.margin));
    Ok(ExclusionVerdict {
        point: *point,
        excluded,
        binding_experiment: if excluded {
            best.map(|m| m.experiment.clone())
        } else {
            None
        },
        margin: best.map_or(0.0, |m| m.margin),
        per_experiment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::builtin_experiments;
    use proptest::prelude::*;

    fn consts() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    fn exps() -> Vec<ExperimentRecord> {
        builtin_experiments(&consts())
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn grids() {
        let g = log_grid(1e-3, 1e3, 7).unwrap();
        assert_eq!(g.len(), 7);
        assert_eq!(g[0], 1e-3);
        assert_eq!(g[6], 1e3);
        assert!(rel(g[3], 1.0) < 1e-14);
        assert_eq!(log_grid_per_decade(1e-15, 1e-4, 200).unwrap().len(), 2201);
        assert!(log_grid(1.0, 0.1, 3).is_err());
        assert!(log_grid(0.0, 1.0, 3).is_err());
    }

    #[test]
    fn dp_envelope_thresholds() {
        let c = consts();
        let e = exps();
        let at = |r0: f64| {
            e.iter()
                .map(|x| tbeta_threshold_dp(r0, x, &c).unwrap())
                .fold(0.0, f64::max)
        };
        let t8 = at(1e-8);
        assert!(t8 > 6e-12 / 3.0 && t8 < 6e-12 * 3.0, "{t8}");
        let t6 = at(1e-6);
        assert!(t6 > 1e-13 / 3.0 && t6 < 1e-13 * 3.0, "{t6}");
    }

    #[test]
    fn wide_linewidth_excludes_nothing() {
        let c = consts();
        let e = exps()[2].with_gamma_scaled(1e300).unwrap();
        assert!(tbeta_threshold_dp(1e-8, &e, &c).unwrap() < 1e-250);
    }

    #[test]
    fn csl_threshold_linear_in_temperature() {
        let c = consts();
        let e = &exps()[0];
        let a = lambda_threshold_csl(1e-7, 1e-3, e, &c).unwrap();
        let b = lambda_threshold_csl(1e-7, 2e-3, e, &c).unwrap();
        assert!(rel(b, 2.0 * a) < 1e-15);
    }

    #[test]
    fn grw_point_verdicts() {
        let c = consts();
        let hot = ModelParams::Csl(CslParams::new(GRW_LAMBDA, GRW_RC, Some(1.0)).unwrap());
        assert!(!verdict(&hot, &exps(), &c).unwrap().excluded);
        let cold = ModelParams::Csl(CslParams::new(GRW_LAMBDA, GRW_RC, Some(1e-5)).unwrap());
        let v = verdict(&cold, &exps(), &c).unwrap();
        assert!(v.excluded);
        assert!(v.margin > 1.0);
        assert!(v.binding_experiment.is_some());
    }

    #[test]
    fn diosi_point_is_allowed() {
        let c = consts();
        let p = ModelParams::Dp(DpParams::new(DIOSI_R0, Some(3.0)).unwrap());
        let v = verdict(&p, &exps(), &c).unwrap();
        assert!(!v.excluded, "margin {}", v.margin);
        assert!(v.binding_experiment.is_none());
    }

    #[test]
    fn non_dissipative_point_is_never_excluded() {
        let c = consts();
        let p = ModelParams::Dp(DpParams::new(1e-8, None).unwrap());
        let v = verdict(&p, &exps(), &c).unwrap();
        assert!(!v.excluded);
        assert_eq!(v.margin, 0.0);
    }

    #[test]
    fn point_on_threshold_has_unit_margin() {
        let c = consts();
        let e = exps();
        let th = tbeta_threshold_dp(1e-7, &e[2], &c).unwrap();
        let p = ModelParams::Dp(DpParams::new(1e-7, Some(th)).unwrap());
        let v = verdict(&p, &e[2..3], &c).unwrap();
        assert!((v.margin - 1.0).abs() < 1e-9);

        let th = lambda_threshold_csl(1e-6, 1e-3, &e[0], &c).unwrap();
        let p = ModelParams::Csl(CslParams::new(th, 1e-6, Some(1e-3)).unwrap());
        let v = verdict(&p, &e[0..1], &c).unwrap();
        assert!((v.margin - 1.0).abs() < 1e-9);
    }

    #[test]
    fn envelope_basics() {
        let c = consts();
        let grid = log_grid(1e-15, 1e-4, 111).unwrap();
        let curves: Vec<_> = exps().iter().map(|e| dp_curve(e, &grid, &c).unwrap()).collect();
        assert_eq!(envelope(&curves[..1]).unwrap(), curves[0]);
        let twin = envelope(&[curves[0].clone(), curves[0].clone()]).unwrap();
        assert_eq!(twin.ordinate, curves[0].ordinate);
        let env = envelope(&curves).unwrap();
        for c in &curves {
            assert!(env.ordinate.iter().zip(&c.ordinate).all(|(e, o)| e >= o));
        }
        let mut bad = curves[1].clone();
        bad.abscissa[3] *= 1.01;
        assert!(matches!(envelope(&[curves[0].clone(), bad]), Err(Error::Alignment(_))));
        assert!(matches!(envelope(&[]), Err(Error::Alignment(_))));
    }

    #[test]
    fn dania_binds_among_nanoparticles() {
        // At small-to-mid R₀ the lowest γ_exp/M sphere wins over Pontin.
        let c = consts();
        let e = exps();
        let grid = log_grid(1e-15, 1e-6, 91).unwrap();
        let pontin = dp_curve(&e[0], &grid, &c).unwrap();
        let dania = dp_curve(&e[2], &grid, &c).unwrap();
        assert!(dania.ordinate.iter().zip(&pontin.ordinate).all(|(d, p)| d > p));
        let env = envelope(&[pontin, dp_curve(&e[1], &grid, &c).unwrap(), dania]).unwrap();
        let idx = binding_indices(&[
            dp_curve(&e[0], &grid, &c).unwrap(),
            dp_curve(&e[1], &grid, &c).unwrap(),
            dp_curve(&e[2], &grid, &c).unwrap(),
        ])
        .unwrap();
        let near_1e8 = grid.iter().position(|&r| r >= 1e-8).unwrap();
        assert_eq!(idx[near_1e8], 2);
        assert!(env.ordinate.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn full_plane_temperature() {
        let c = consts();
        let grid = PlaneGrid::default_plane(20).unwrap();
        let t = full_plane_exclusion_temperature(
            &grid,
            &exps(),
            &TheoryFloor::default(),
            &BisectionOptions::default(),
            &c,
        )
        .unwrap();
        assert!(t > 6e-9 / 3.0 && t < 6e-9 * 3.0, "{t}");

        let doubled: Vec<_> = exps().iter().map(|e| e.with_gamma_scaled(2.0).unwrap()).collect();
        let t2 = full_plane_exclusion_temperature(
            &grid,
            &doubled,
            &TheoryFloor::default(),
            &BisectionOptions::default(),
            &c,
        )
        .unwrap();
        assert!(rel(t2, 0.5 * t) < 1e-8, "{t2} vs {}", 0.5 * t);
    }

    #[test]
    fn full_plane_not_excluded_at_one_kelvin() {
        let c = consts();
        let grid = PlaneGrid::default_plane(10).unwrap();
        let opts = BisectionOptions {
            t_lo: 1.0,
            t_hi: 10.0,
            rel_tol: 1e-6,
        };
        match full_plane_exclusion_temperature(&grid, &exps(), &TheoryFloor::default(), &opts, &c) {
            Err(Error::Bisection(msg)) => assert!(msg.contains("not fully"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn floor_curve_interpolates() {
        let f = TheoryFloor::parse_csv("r_C, lambda\n1e-8, 1e-18\n1e-6, 1e-14\n").unwrap();
        assert!(rel(f.at(1e-7), 1e-16) < 1e-12);
        assert_eq!(f.at(1e-10), 1e-18);
        assert_eq!(f.at(1.0), 1e-14);
        assert!(TheoryFloor::parse_csv("1e-8, 1e-18\n1e-9, 1e-17\n").is_err());
        assert!(matches!(
            TheoryFloor::parse_csv("1e-8, 1e-18\nbad\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn mechanical_damping_only_enlarges_exclusion() {
        let c = consts();
        let e = &exps()[2];
        let full = tbeta_threshold_dp(1e-8, e, &c).unwrap();
        let budget = collapse_budget(e, 0.5 * e.gamma_exp()).unwrap();
        let reduced = tbeta_threshold_dp_with_budget(1e-8, e, budget, &c).unwrap();
        assert!(reduced > full);
        let l_full = lambda_threshold_csl(1e-7, 1e-3, e, &c).unwrap();
        let l_red = lambda_threshold_csl_with_budget(1e-7, 1e-3, e, budget, &c).unwrap();
        assert!(l_red < l_full);
        assert!(collapse_budget(e, e.gamma_exp()).is_err());
    }

    proptest! {
        #[test]
        fn verdict_agrees_with_thresholds(
            log_sigma in -14.0f64..-3.0,
            log_t in -16.0f64..2.0,
            log_lambda in -20.0f64..-6.0,
            is_dp in any::<bool>(),
        ) {
            let c = consts();
            let e = exps();
            let (sigma, t) = (10f64.powf(log_sigma), 10f64.powf(log_t));
            let p = if is_dp {
                ModelParams::Dp(DpParams::new(sigma, Some(t)).unwrap())
            } else {
                ModelParams::Csl(CslParams::new(10f64.powf(log_lambda), sigma, Some(t)).unwrap())
            };
            let v = verdict(&p, &e, &c).unwrap();
            let by_threshold = e.iter().any(|x| match &p {
                ModelParams::Dp(_) => t < tbeta_threshold_dp(sigma, x, &c).unwrap(),
                ModelParams::Csl(q) => q.lambda() > lambda_threshold_csl(sigma, t, x, &c).unwrap(),
            });
            prop_assert_eq!(v.excluded, by_threshold);
            // Margins agree with the thresholds away from the boundary.
            if (v.margin - 1.0).abs() > 1e-9 {
                prop_assert_eq!(v.excluded, v.margin > 1.0);
            }
        }

        #[test]
        fn thresholds_linear_in_linewidth(factor in 1e-3f64..1e3, log_r in -12.0f64..-4.0) {
            let c = consts();
            let e = &exps()[1];
            let s = e.with_gamma_scaled(factor).unwrap();
            let r = 10f64.powf(log_r);
            let a = tbeta_threshold_dp(r, e, &c).unwrap();
            let b = tbeta_threshold_dp(r, &s, &c).unwrap();
            prop_assert!(a >= 0.0 && rel(b * factor, a) < 1e-12);
            let a = lambda_threshold_csl(r, 1.0, e, &c).unwrap();
            let b = lambda_threshold_csl(r, 1.0, &s, &c).unwrap();
            prop_assert!(rel(b, a * factor) < 1e-12);
        }
    }
}
