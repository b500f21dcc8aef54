//! The validation suite: twelve numbered criteria, each reduced to a list of
//! scalar checks against pinned tolerances.

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{
    bloch_profile, discrete_static_wall, integrate_with, track_wall, IntegrateOptions,
};
use crate::error::Result;
use crate::io::{RunConfig, SCHEMA_VERSION};
use crate::model::{CartesianProfile, Grid, Params, Regime, Vec3};
use crate::spectral::{
    cosine, lowest_eigenpairs, potential_l, potential_m, potential_n, rayleigh_bound_check,
};
use crate::staticsol::StaticWall;
use crate::stencil::StencilOrder;
use crate::twsolve::{
    residual, solve_tw, velocity_identity, Correction, NewtonOptions, ReferenceProfile,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|observed - expected| <= tolerance`
    Within,
    /// `observed >= expected - tolerance`
    AtLeast,
    /// `observed <= expected + tolerance`
    AtMost,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub label: String,
    pub observed: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub pass: bool,
}

impl Check {
    pub fn new(label: impl Into<String>, observed: f64, expected: f64, tolerance: f64, relation: Relation) -> Check {
        let pass = match relation {
            Relation::Within => (observed - expected).abs() <= tolerance,
            Relation::AtLeast => observed >= expected - tolerance,
            Relation::AtMost => observed <= expected + tolerance,
        };
        Check {
            label: label.into(),
            observed,
            expected,
            tolerance,
            relation,
            pass,
        }
    }

    /// Slack left before the check fails, in units of the tolerance (or
    /// absolute when the tolerance is zero); negative when failing.
    fn margin(&self) -> f64 {
        let slack = match self.relation {
            Relation::Within => self.tolerance - (self.observed - self.expected).abs(),
            Relation::AtLeast => self.observed - (self.expected - self.tolerance),
            Relation::AtMost => self.expected + self.tolerance - self.observed,
        };
        let slack = if slack.is_nan() { f64::NEG_INFINITY } else { slack };
        if self.tolerance > 0.0 {
            slack / self.tolerance
        } else {
            slack
        }
    }

    pub fn describe(&self) -> String {
        let op = match self.relation {
            Relation::Within => format!("{:.6e} +- {:.1e}", self.expected, self.tolerance),
            Relation::AtLeast => format!(">= {:.6e}", self.expected - self.tolerance),
            Relation::AtMost => format!("<= {:.6e}", self.expected + self.tolerance),
        };
        format!("{}: {:.6e} (want {op})", self.label, self.observed)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionReport {
    pub id: u32,
    pub name: String,
    /// Summary of the tightest check.
    pub expected: f64,
    pub observed: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl CriterionReport {
    fn new(id: u32, name: &str, checks: Vec<Check>) -> CriterionReport {
        let pass = !checks.is_empty() && checks.iter().all(|c| c.pass);
        let worst = checks
            .iter()
            .min_by(|a, b| a.margin().total_cmp(&b.margin()))
            .cloned();
        let (expected, observed, tolerance) = worst
            .map(|c| (c.expected, c.observed, c.tolerance))
            .unwrap_or((f64::NAN, f64::NAN, f64::NAN));
        CriterionReport {
            id,
            name: name.to_string(),
            expected,
            observed,
            tolerance,
            pass,
            checks,
        }
    }

    /// The tightest check, for one-line summaries.
    pub fn tightest(&self) -> Option<&Check> {
        self.checks
            .iter()
            .min_by(|a, b| a.margin().total_cmp(&b.margin()))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub pass: bool,
    pub criteria: Vec<CriterionReport>,
}

/// Settings shared by all criteria.
#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub grid: Grid,
    pub alpha: f64,
    pub newton: NewtonOptions,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            grid: Grid::default(),
            alpha: 0.1,
            newton: NewtonOptions::default(),
            seed: 0,
        }
    }
}

impl From<&RunConfig> for VerifyConfig {
    fn from(c: &RunConfig) -> Self {
        VerifyConfig {
            grid: c.grid,
            alpha: c.params.alpha,
            newton: c.newton,
            seed: c.seed,
        }
    }
}

pub const CRITERIA: [(u32, &str); 12] = [
    (1, "static residual at the Walker base point"),
    (2, "static residual at the transverse base point"),
    (3, "kernel and gap of L"),
    (4, "lower bound for L + K2"),
    (5, "lower bound for N"),
    (6, "kernel of M"),
    (7, "travelling waves near the Walker point"),
    (8, "travelling waves near the transverse point"),
    (9, "velocity identity on both lattices"),
    (10, "small-field mobility"),
    (11, "dynamics against the travelling wave"),
    (12, "mesh and time-step convergence"),
];

fn name(id: u32) -> &'static str {
    CRITERIA[(id - 1) as usize].1
}

fn failed(label: &str, err: impl std::fmt::Display) -> Check {
    Check {
        label: format!("{label}: {err}"),
        observed: f64::NAN,
        expected: 0.0,
        tolerance: 0.0,
        relation: Relation::Within,
        pass: false,
    }
}

fn static_residual(params: &Params, regime: &Regime, cfg: &VerifyConfig) -> Result<f64> {
    let order = cfg.newton.stencil;
    let r = ReferenceProfile::build(params, regime, &cfg.grid, cfg.newton.theta, order.radius())?;
    let res = residual(&Correction::zeros(r.n_nodes()), 0.0, &r, order)?;
    Ok(res.norm(r.grid.spacing()))
}

pub fn criterion_1(cfg: &VerifyConfig) -> CriterionReport {
    let checks = [0.5, 1.0, 5.0]
        .iter()
        .map(|&k2| {
            let regime = Regime::Walker { k2 };
            let label = format!("K2 = {k2}");
            match static_residual(&regime.base_params(cfg.alpha), &regime, cfg) {
                Ok(r) => Check::new(label, r, 0.0, 1e-6, Relation::AtMost),
                Err(e) => failed(&label, e),
            }
        })
        .collect();
    CriterionReport::new(1, name(1), checks)
}

pub fn criterion_2(cfg: &VerifyConfig) -> CriterionReport {
    let checks = [0.25, 0.5, 0.75]
        .iter()
        .map(|&h3| {
            let regime = Regime::Transverse { h2: 0.0, h3 };
            let label = format!("H3 = {h3}");
            match static_residual(&regime.base_params(cfg.alpha), &regime, cfg) {
                Ok(r) => Check::new(label, r, 0.0, 1e-6, Relation::AtMost),
                Err(e) => failed(&label, e),
            }
        })
        .collect();
    CriterionReport::new(2, name(2), checks)
}

pub fn criterion_3(cfg: &VerifyConfig) -> CriterionReport {
    let op = potential_l(&cfg.grid);
    let pairs = lowest_eigenpairs(&op, 2);
    let sech: Vec<f64> = op.interior_nodes().iter().map(|x| 1.0 / x.cosh()).collect();
    let checks = vec![
        Check::new("lambda0(L)", pairs[0].value, 0.0, 1e-4, Relation::Within),
        Check::new(
            "cos(v0, sech)",
            cosine(&pairs[0].vector, &sech).abs(),
            0.999,
            0.0,
            Relation::AtLeast,
        ),
        Check::new("lambda1(L)", pairs[1].value, 0.2, 0.0, Relation::AtLeast),
    ];
    CriterionReport::new(3, name(3), checks)
}

pub fn criterion_4(cfg: &VerifyConfig) -> CriterionReport {
    let mut checks = vec![];
    for (k, &k2) in [0.5, 1.0].iter().enumerate() {
        let op = potential_l(&cfg.grid).shifted(k2);
        let l0 = lowest_eigenpairs(&op, 1)[0].value;
        checks.push(Check::new(format!("lambda0(L + {k2})"), l0, k2, 1e-4, Relation::Within));
        let rq = rayleigh_bound_check(&op, k2, 200, cfg.seed.wrapping_add(k as u64));
        checks.push(Check::new(
            format!("min Rayleigh quotient of L + {k2} (200 trials)"),
            rq.min_quotient,
            k2,
            1e-6,
            Relation::AtLeast,
        ));
    }
    CriterionReport::new(4, name(4), checks)
}

pub fn criterion_5(cfg: &VerifyConfig) -> CriterionReport {
    let checks = [0.25, 0.5, 0.75]
        .iter()
        .map(|&h3| {
            let label = format!("lambda0(N), H3 = {h3}");
            match potential_n(h3, &cfg.grid) {
                Ok(op) => Check::new(
                    label,
                    lowest_eigenpairs(&op, 1)[0].value,
                    h3 * h3,
                    1e-4,
                    Relation::AtLeast,
                ),
                Err(e) => failed(&label, e),
            }
        })
        .collect();
    CriterionReport::new(5, name(5), checks)
}

pub fn criterion_6(cfg: &VerifyConfig) -> CriterionReport {
    let mut checks = vec![];
    for h3 in [0.25, 0.5, 0.75] {
        let run = || -> Result<(f64, f64)> {
            let op = potential_m(h3, &cfg.grid)?;
            let g = op.grid;
            let pair = lowest_eigenpairs(&op, 1).remove(0);
            let samples = StaticWall::Transverse { h2: 0.0, h3 }.sample(&g, 0)?;
            let n = g.n_nodes();
            Ok((pair.value, cosine(&pair.vector, &samples.dbeta[1..n - 1]).abs()))
        };
        match run() {
            Ok((l0, c)) => {
                checks.push(Check::new(format!("lambda0(M), H3 = {h3}"), l0, 0.0, 1e-3, Relation::Within));
                checks.push(Check::new(format!("cos(v0, beta_T'), H3 = {h3}"), c, 0.999, 0.0, Relation::AtLeast));
            }
            Err(e) => checks.push(failed(&format!("H3 = {h3}"), e)),
        }
    }
    CriterionReport::new(6, name(6), checks)
}

/// Outcome of one travelling-wave solve on a lattice.
#[derive(Clone, Debug, Serialize)]
pub struct LatticePoint {
    pub lambda: [f64; 4],
    pub velocity: Option<f64>,
    pub identity: Option<f64>,
    pub residual_norm: Option<f64>,
    pub error: Option<String>,
}

/// A `3 x 3 x 3 x 3` lattice of parameter points with its solves and the
/// local slope estimates on every edge.
#[derive(Clone, Debug, Serialize)]
pub struct Lattice {
    pub regime: Regime,
    pub axes: [[f64; 3]; 4],
    pub points: Vec<LatticePoint>,
    /// `(from, to, axis, |dV|, slope estimate)` per edge with both ends converged.
    pub edges: Vec<(usize, usize, usize, f64, Option<f64>)>,
}

const SLOPE_FLOOR: f64 = 1e-6;

fn lattice_index(ix: [usize; 4]) -> usize {
    ((ix[0] * 3 + ix[1]) * 3 + ix[2]) * 3 + ix[3]
}

fn solve_point(lambda: [f64; 4], regime: &Regime, cfg: &VerifyConfig) -> LatticePoint {
    let base = Params {
        h1: 0.0,
        h2: 0.0,
        h3: 0.0,
        k2: 0.0,
        alpha: cfg.alpha,
    };
    let params = base.with_lambda(lambda);
    match solve_tw(&params, regime, &cfg.grid, &cfg.newton, None)
        .and_then(|s| velocity_identity(&s).map(|v| (s, v)))
    {
        Ok((s, v)) => LatticePoint {
            lambda,
            velocity: Some(s.velocity),
            identity: Some(v),
            residual_norm: Some(s.residual_norm),
            error: None,
        },
        Err(e) => LatticePoint {
            lambda,
            velocity: None,
            identity: None,
            residual_norm: None,
            error: Some(e.to_string()),
        },
    }
}

pub fn run_lattice(regime: Regime, axes: [[f64; 3]; 4], cfg: &VerifyConfig) -> Lattice {
    let mut lambdas = vec![];
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                for d in 0..3 {
                    lambdas.push([axes[0][a], axes[1][b], axes[2][c], axes[3][d]]);
                }
            }
        }
    }
    let points: Vec<LatticePoint> = lambdas
        .par_iter()
        .map(|l| solve_point(*l, &regime, cfg))
        .collect();

    let mut pairs = vec![];
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                for d in 0..3 {
                    let ix = [a, b, c, d];
                    for axis in 0..4 {
                        if ix[axis] == 2 {
                            continue;
                        }
                        let mut jx = ix;
                        jx[axis] += 1;
                        let (i, j) = (lattice_index(ix), lattice_index(jx));
                        if let (Some(_), Some(_)) = (points[i].velocity, points[j].velocity) {
                            pairs.push((i, j, axis));
                        }
                    }
                }
            }
        }
    }
    let edges = pairs
        .par_iter()
        .map(|&(i, j, axis)| {
            let dv = (points[j].velocity.unwrap() - points[i].velocity.unwrap()).abs();
            let spacing = axes[axis][1] - axes[axis][0];
            let delta = 0.25 * spacing;
            let mut mid = points[i].lambda;
            mid[axis] += 0.5 * spacing;
            let (mut lo, mut hi) = (mid, mid);
            lo[axis] -= delta;
            hi[axis] += delta;
            let slope = match (
                solve_point(lo, &regime, cfg).velocity,
                solve_point(hi, &regime, cfg).velocity,
            ) {
                (Some(a), Some(b)) => Some((b - a) / (2.0 * delta)),
                _ => None,
            };
            (i, j, axis, dv, slope)
        })
        .collect();
    Lattice {
        regime,
        axes,
        points,
        edges,
    }
}

pub fn walker_lattice(cfg: &VerifyConfig) -> Lattice {
    run_lattice(
        Regime::Walker { k2: 1.0 },
        [
            [-0.01, 0.0, 0.01],
            [-0.05, 0.0, 0.05],
            [-0.05, 0.0, 0.05],
            [0.8, 1.0, 1.2],
        ],
        cfg,
    )
}

pub fn transverse_lattice(cfg: &VerifyConfig) -> Lattice {
    run_lattice(
        Regime::Transverse { h2: 0.0, h3: 0.5 },
        [
            [-0.005, 0.0, 0.005],
            [-0.05, 0.0, 0.05],
            [0.45, 0.5, 0.55],
            [0.0, 0.01, 0.02],
        ],
        cfg,
    )
}

fn lattice_checks(lattice: &Lattice) -> Vec<Check> {
    let total = lattice.points.len();
    let failures: Vec<&LatticePoint> = lattice.points.iter().filter(|p| p.error.is_some()).collect();
    let mut checks = vec![Check::new(
        format!(
            "unconverged points out of {total}{}",
            failures
                .first()
                .map(|p| format!(" (first: {:?}: {})", p.lambda, p.error.as_deref().unwrap_or("")))
                .unwrap_or_default()
        ),
        failures.len() as f64,
        0.0,
        0.5,
        Relation::AtMost,
    )];
    let gap = lattice
        .points
        .iter()
        .filter_map(|p| Some((p.velocity? - p.identity?).abs()))
        .fold(0.0, f64::max);
    checks.push(Check::new("max |V - identity|", gap, 0.0, 1e-6, Relation::AtMost));
    let worst_residual = lattice
        .points
        .iter()
        .filter_map(|p| p.residual_norm)
        .fold(0.0, f64::max);
    checks.push(Check::new("max residual norm", worst_residual, 0.0, 1e-8, Relation::AtMost));
    let mut ratio: f64 = 0.0;
    let mut missing = 0;
    for &(_, _, axis, dv, slope) in &lattice.edges {
        let spacing = lattice.axes[axis][1] - lattice.axes[axis][0];
        match slope {
            Some(s) => ratio = ratio.max(dv / (spacing * s.abs().max(SLOPE_FLOOR))),
            None => missing += 1,
        }
    }
    checks.push(Check::new(
        "max |dV| / (spacing x local slope) over lattice edges",
        ratio,
        5.0,
        0.0,
        Relation::AtMost,
    ));
    checks.push(Check::new("edges without a slope estimate", missing as f64, 0.0, 0.5, Relation::AtMost));
    checks
}

pub fn criterion_7(lattice: &Lattice) -> CriterionReport {
    CriterionReport::new(7, name(7), lattice_checks(lattice))
}

pub fn criterion_8(lattice: &Lattice) -> CriterionReport {
    CriterionReport::new(8, name(8), lattice_checks(lattice))
}

pub fn criterion_9(lattices: &[&Lattice]) -> CriterionReport {
    let mut rel: f64 = 0.0;
    let mut zero: f64 = 0.0;
    let (mut driven, mut still) = (0, 0);
    for l in lattices {
        for p in &l.points {
            if let (Some(v), Some(id)) = (p.velocity, p.identity) {
                if p.lambda[0] == 0.0 {
                    still += 1;
                    zero = zero.max(v.abs()).max(id.abs());
                } else {
                    driven += 1;
                    rel = rel.max((v - id).abs() / v.abs());
                }
            }
        }
    }
    let checks = vec![
        Check::new(
            format!("max relative |V - identity| / |V| over {driven} solutions with H1 != 0"),
            rel,
            0.0,
            1e-6,
            Relation::AtMost,
        ),
        Check::new(
            format!("max |V|, |identity| over {still} solutions with H1 = 0"),
            zero,
            0.0,
            1e-10,
            Relation::AtMost,
        ),
        Check::new("solutions examined", (driven + still) as f64, 1.0, 0.0, Relation::AtLeast),
    ];
    CriterionReport::new(9, name(9), checks)
}

pub fn criterion_10(cfg: &VerifyConfig) -> CriterionReport {
    let regime = Regime::Walker { k2: 1.0 };
    let mut checks = vec![];
    let mut devs = vec![];
    for h1 in [0.01, 0.005, 0.0025] {
        let p = Params {
            h1,
            h2: 0.0,
            h3: 0.0,
            k2: 1.0,
            alpha: cfg.alpha,
        };
        match solve_tw(&p, &regime, &cfg.grid, &cfg.newton, None) {
            Ok(s) => {
                // the wall moves against +x under H1 > 0, so V/H1 -> -1/alpha
                let ratio = -cfg.alpha * s.velocity / h1;
                devs.push((ratio - 1.0).abs());
                checks.push(Check::new(
                    format!("-alpha V / H1 at H1 = {h1}"),
                    ratio,
                    1.0,
                    0.03,
                    Relation::Within,
                ));
            }
            Err(e) => checks.push(failed(&format!("H1 = {h1}"), e)),
        }
    }
    if devs.len() == 3 {
        let growth = devs.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        checks.push(Check::new(
            "largest increase of |ratio - 1| as H1 decreases",
            growth,
            0.0,
            1e-12,
            Relation::AtMost,
        ));
    }
    CriterionReport::new(10, name(10), checks)
}

/// Bloch wall with a tilt out of the easy plane and a narrowed core.
fn perturbed_wall(grid: &Grid, tilt: f64) -> CartesianProfile {
    CartesianProfile {
        m: grid
            .nodes()
            .into_iter()
            .map(|x| {
                let s = 1.3 * x;
                Vec3::new(s.tanh(), tilt / x.cosh(), 1.0 / s.cosh()).normalize()
            })
            .collect(),
    }
}

pub fn criterion_11(cfg: &VerifyConfig) -> CriterionReport {
    let mut checks = vec![];
    let driven = Params {
        h1: 0.01,
        h2: 0.0,
        h3: 0.0,
        k2: 1.0,
        alpha: cfg.alpha,
    };
    let run = || -> Result<(f64, f64)> {
        let tw = solve_tw(&driven, &Regime::Walker { k2: 1.0 }, &cfg.grid, &cfg.newton, None)?;
        let grid = Grid::new(30.0, 1201)?;
        let still = driven.with_lambda([0.0, 0.0, 0.0, 1.0]);
        let m0 = discrete_static_wall(&bloch_profile(&grid, 10.0), &still, &grid)?;
        let opts = IntegrateOptions {
            dt: None,
            output_interval: 1.0,
            keep_profiles: false,
            monitor_energy: false,
        };
        let traj = integrate_with(&m0, &driven, &grid, 200.0, &opts)?;
        Ok((track_wall(&traj)?.velocity, tw.velocity))
    };
    match run() {
        Ok((v_dyn, v_tw)) => checks.push(Check::new(
            format!("tracked velocity / solve_tw V (V = {v_tw:.6e}, tracked {v_dyn:.6e})"),
            v_dyn / v_tw,
            1.0,
            0.02,
            Relation::Within,
        )),
        Err(e) => checks.push(failed("driven run", e)),
    }

    let run0 = || -> Result<(f64, f64, f64)> {
        let grid = Grid::new(15.0, 301)?;
        let p = Params::new(0.0, 0.0, 0.0, 1.0, cfg.alpha)?;
        let opts = IntegrateOptions {
            dt: None,
            output_interval: 1.0,
            keep_profiles: false,
            monitor_energy: true,
        };
        let traj = integrate_with(&perturbed_wall(&grid, 0.3), &p, &grid, 10.0, &opts)?;
        let drop = traj.energy[0] - traj.energy[traj.energy.len() - 1];
        Ok((traj.max_energy_increase, traj.max_unit_error, drop))
    };
    match run0() {
        Ok((rise, unit, drop)) => {
            checks.push(Check::new("largest energy increase over one step at H = 0", rise, 0.0, 1e-9, Relation::AtMost));
            checks.push(Check::new("max | |m| - 1 | after renormalisation", unit, 0.0, 1e-9, Relation::AtMost));
            checks.push(Check::new("total energy dissipated at H = 0", drop, 0.0, 0.0, Relation::AtLeast));
        }
        Err(e) => checks.push(failed("zero-field run", e)),
    }
    CriterionReport::new(11, name(11), checks)
}

fn observed_order(values: &[f64]) -> f64 {
    let d1 = (values[0] - values[1]).abs();
    let d2 = (values[1] - values[2]).abs();
    (d1 / d2).log2()
}

pub fn criterion_12(cfg: &VerifyConfig) -> CriterionReport {
    let mut checks = vec![];
    let half = cfg.grid.half_width();
    let grids: Vec<Grid> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&h| Grid::with_spacing(half, h).expect("positive spacing"))
        .collect();

    let spectral = |f: &dyn Fn(&Grid) -> Result<f64>, label: &str, checks: &mut Vec<Check>| {
        match grids.iter().map(f).collect::<Result<Vec<f64>>>() {
            Ok(v) => checks.push(Check::new(
                format!("order in h of {label}"),
                observed_order(&v),
                2.0,
                0.2,
                Relation::AtLeast,
            )),
            Err(e) => checks.push(failed(label, e)),
        }
    };
    spectral(&|g| Ok(lowest_eigenpairs(&potential_l(g), 1)[0].value), "lambda0(L)", &mut checks);
    spectral(&|g| Ok(lowest_eigenpairs(&potential_l(g), 2)[1].value), "lambda1(L)", &mut checks);
    spectral(
        &|g| Ok(lowest_eigenpairs(&potential_l(g).shifted(0.5), 1)[0].value),
        "lambda0(L + 0.5)",
        &mut checks,
    );
    spectral(&|g| Ok(lowest_eigenpairs(&potential_n(0.5, g)?, 1)[0].value), "lambda0(N), H3 = 0.5", &mut checks);

    let corner = Params {
        h1: 0.01,
        h2: 0.05,
        h3: 0.05,
        k2: 1.2,
        alpha: cfg.alpha,
    };
    let opts = NewtonOptions {
        stencil: StencilOrder::Second,
        ..cfg.newton
    };
    spectral(
        &|g| Ok(solve_tw(&corner, &Regime::Walker { k2: 1.0 }, g, &opts, None)?.velocity),
        "V at (0.01, 0.05, 0.05, 1.2), second-order stencil",
        &mut checks,
    );

    let run = || -> Result<f64> {
        let grid = Grid::new(10.0, 101)?;
        let p = Params::new(0.01, 0.0, 0.0, 1.0, cfg.alpha)?;
        let m0 = perturbed_wall(&grid, 0.3);
        let finals = [0.01, 0.005, 0.0025]
            .iter()
            .map(|&dt| {
                let opts = IntegrateOptions {
                    dt: Some(dt),
                    output_interval: 2.0,
                    keep_profiles: false,
                    monitor_energy: false,
                };
                Ok(integrate_with(&m0, &p, &grid, 2.0, &opts)?.final_profile)
            })
            .collect::<Result<Vec<_>>>()?;
        let diff = |a: &CartesianProfile, b: &CartesianProfile| {
            a.m.iter().zip(&b.m).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
        };
        Ok((diff(&finals[0], &finals[1]) / diff(&finals[1], &finals[2])).log2())
    };
    match run() {
        Ok(order) => checks.push(Check::new("order in dt of the final profile", order, 4.0, 0.5, Relation::AtLeast)),
        Err(e) => checks.push(failed("time-step study", e)),
    }
    CriterionReport::new(12, name(12), checks)
}

/// Runs every criterion. Independent criteria are evaluated in parallel; the
/// report is in criterion order and does not depend on scheduling.
pub fn run_all(cfg: &VerifyConfig) -> Report {
    let (lattices, mut rest) = rayon::join(
        || rayon::join(|| walker_lattice(cfg), || transverse_lattice(cfg)),
        || {
            let single: [fn(&VerifyConfig) -> CriterionReport; 8] = [
                criterion_1,
                criterion_2,
                criterion_3,
                criterion_4,
                criterion_5,
                criterion_6,
                criterion_10,
                criterion_11,
            ];
            single.par_iter().map(|f| f(cfg)).collect::<Vec<_>>()
        },
    );
    rest.push(criterion_12(cfg));
    let (walker, transverse) = lattices;
    rest.push(criterion_7(&walker));
    rest.push(criterion_8(&transverse));
    rest.push(criterion_9(&[&walker, &transverse]));
    rest.sort_by_key(|c| c.id);
    Report {
        schema_version: SCHEMA_VERSION,
        pass: rest.iter().all(|c| c.pass),
        criteria: rest,
    }
}

/// Runs a single criterion by number.
pub fn run_one(id: u32, cfg: &VerifyConfig) -> Option<CriterionReport> {
    Some(match id {
        1 => criterion_1(cfg),
        2 => criterion_2(cfg),
        3 => criterion_3(cfg),
        4 => criterion_4(cfg),
        5 => criterion_5(cfg),
        6 => criterion_6(cfg),
        7 => criterion_7(&walker_lattice(cfg)),
        8 => criterion_8(&transverse_lattice(cfg)),
        9 => criterion_9(&[&walker_lattice(cfg), &transverse_lattice(cfg)]),
        10 => criterion_10(cfg),
        11 => criterion_11(cfg),
        12 => criterion_12(cfg),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_relations() {
        assert!(Check::new("a", 1.0, 1.0, 0.0, Relation::Within).pass);
        assert!(!Check::new("a", 1.1, 1.0, 0.05, Relation::Within).pass);
        assert!(Check::new("a", 0.96, 1.0, 0.05, Relation::AtLeast).pass);
        assert!(!Check::new("a", 2.0, 1.0, 0.5, Relation::AtMost).pass);
        assert!(!Check::new("a", f64::NAN, 1.0, 0.5, Relation::AtMost).pass);
    }

    #[test]
    fn report_picks_tightest_check() {
        let r = CriterionReport::new(
            1,
            "x",
            vec![
                Check::new("loose", 0.0, 0.0, 1.0, Relation::AtMost),
                Check::new("tight", 0.9, 0.0, 1.0, Relation::AtMost),
            ],
        );
        assert!(r.pass);
        assert_eq!(r.tightest().unwrap().label, "tight");
        assert_eq!(r.observed, 0.9);
        assert!(!CriterionReport::new(2, "y", vec![]).pass);
    }

    #[test]
    fn fast_criteria_pass() {
        let cfg = VerifyConfig::default();
        for c in [criterion_1(&cfg), criterion_3(&cfg), criterion_5(&cfg)] {
            assert!(c.pass, "{c:?}");
        }
    }
}
