//! Run configuration (`key = value` text) and profile files.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    polar_from_unit, to_cartesian, validate, Grid, Params, PolarPoint, PolarProfile, Regime,
    TWSolution,
};
use crate::stencil::StencilOrder;
use crate::twsolve::{JacobianMode, NewtonOptions};

/// Version of every JSON document this crate writes.
pub const SCHEMA_VERSION: u32 = 1;

/// Recognised configuration keys.
pub const KEYS: &[&str] = &[
    "H1",
    "H2",
    "H3",
    "K2",
    "alpha",
    "regime",
    "base_K2",
    "base_H2",
    "base_H3",
    "half_width",
    "n_nodes",
    "spacing",
    "stencil",
    "tol",
    "max_iter",
    "jacobian",
    "seed",
    "output",
    "T",
    "dt",
    "output_interval",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub params: Params,
    pub regime: Regime,
    pub grid: Grid,
    pub newton: NewtonOptions,
    /// Seed for randomised checks.
    pub seed: u64,
    pub output: Option<PathBuf>,
    /// Final time for `simulate`.
    pub t_final: f64,
    /// Time step for `simulate`; `None` selects `0.2 h^2`.
    pub dt: Option<f64>,
    pub output_interval: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::from_map(&BTreeMap::new()).expect("defaults are valid")
    }
}

/// Parses `key = value` lines; `#` starts a comment. Keys outside [`KEYS`]
/// and repeated keys are errors.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected `key = value`, got `{line}`", lineno + 1))
        })?;
        let (key, value) = (key.trim(), value.trim());
        check_key(key)?;
        if map.insert(key.to_string(), value.to_string()).is_some() {
            return Err(Error::Config(format!("line {}: key `{key}` given twice", lineno + 1)));
        }
    }
    Ok(map)
}

pub fn check_key(key: &str) -> Result<()> {
    if KEYS.contains(&key) {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "unknown key `{key}`; allowed keys are {}",
            KEYS.join(", ")
        )))
    }
}

fn number(map: &BTreeMap<String, String>, key: &str) -> Result<Option<f64>> {
    map.get(key)
        .map(|v| {
            v.parse::<f64>()
                .map_err(|_| Error::Config(format!("`{key}` must be a number (got `{v}`)")))
        })
        .transpose()
}

fn integer(map: &BTreeMap<String, String>, key: &str) -> Result<Option<u64>> {
    map.get(key)
        .map(|v| {
            v.parse::<u64>().map_err(|_| {
                Error::Config(format!("`{key}` must be a non-negative integer (got `{v}`)"))
            })
        })
        .transpose()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::from_map(&parse_pairs(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<RunConfig> {
        RunConfig::parse(&std::fs::read_to_string(path)?)
    }

    /// Builds and validates a configuration; absent keys take their defaults.
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<RunConfig> {
        for key in map.keys() {
            check_key(key)?;
        }
        let params = Params::new(
            number(map, "H1")?.unwrap_or(0.0),
            number(map, "H2")?.unwrap_or(0.0),
            number(map, "H3")?.unwrap_or(0.0),
            number(map, "K2")?.unwrap_or(1.0),
            number(map, "alpha")?.unwrap_or(0.1),
        )?;
        if params.is_degenerate() {
            return Err(Error::DegenerateRegime);
        }
        let regime = match map.get("regime").map(String::as_str).unwrap_or("auto") {
            "auto" => {
                if map.keys().any(|k| k.starts_with("base_")) {
                    return Err(Error::Config(
                        "base_* keys need an explicit `regime = walker|transverse`".into(),
                    ));
                }
                Regime::nearest(&params)?
            }
            "walker" => Regime::Walker {
                k2: number(map, "base_K2")?.unwrap_or(params.k2),
            },
            "transverse" => Regime::Transverse {
                h2: number(map, "base_H2")?.unwrap_or(params.h2),
                h3: number(map, "base_H3")?.unwrap_or(params.h3),
            },
            other => {
                return Err(Error::Config(format!(
                    "`regime` must be auto, walker or transverse (got `{other}`)"
                )))
            }
        };
        validate(&params, &regime)?;

        let half_width = number(map, "half_width")?.unwrap_or(20.0);
        let grid = match (integer(map, "n_nodes")?, number(map, "spacing")?) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either `n_nodes` or `spacing`, not both".into()))
            }
            (Some(n), None) => Grid::new(half_width, n as usize)?,
            (None, Some(h)) => Grid::with_spacing(half_width, h)?,
            (None, None) => Grid::with_spacing(half_width, 0.05)?,
        };

        let mut newton = NewtonOptions::default();
        if let Some(s) = map.get("stencil") {
            newton.stencil = StencilOrder::parse(s).ok_or_else(|| {
                Error::Config(format!("`stencil` must be 2, 4 or 6 (got `{s}`)"))
            })?;
        }
        if let Some(t) = number(map, "tol")? {
            newton.tol_residual = t;
        }
        if let Some(k) = integer(map, "max_iter")? {
            newton.max_iter = k as usize;
        }
        if let Some(j) = map.get("jacobian") {
            newton.jacobian = match j.as_str() {
                "analytic" => JacobianMode::Analytic,
                "fd" => JacobianMode::FiniteDifference,
                other => {
                    return Err(Error::Config(format!(
                        "`jacobian` must be analytic or fd (got `{other}`)"
                    )))
                }
            };
        }
        newton.check()?;

        let t_final = number(map, "T")?.unwrap_or(10.0);
        let dt = number(map, "dt")?;
        let output_interval = number(map, "output_interval")?.unwrap_or(1.0);
        if !(t_final.is_finite() && t_final >= 0.0) || !(output_interval > 0.0) {
            return Err(Error::Config(
                "`T` must be >= 0 and `output_interval` > 0".into(),
            ));
        }
        if let Some(dt) = dt {
            let h = grid.spacing();
            if !(dt > 0.0 && dt <= 0.25 * h * h) {
                return Err(Error::Config(format!(
                    "`dt` = {dt} must lie in (0, 0.25 h^2] = (0, {}]",
                    0.25 * h * h
                )));
            }
        }
        Ok(RunConfig {
            params,
            regime,
            grid,
            newton,
            seed: integer(map, "seed")?.unwrap_or(0),
            output: map.get("output").map(PathBuf::from),
            t_final,
            dt,
            output_interval,
        })
    }
}

/// Profile as CSV with header `xi,psi,beta,m1,m2,m3`.
pub fn write_profile_csv<W: Write>(mut w: W, profile: &PolarProfile, grid: &Grid) -> Result<()> {
    if profile.len() != grid.n_nodes() {
        return Err(Error::InvalidProfile(format!(
            "profile has {} samples, grid has {} nodes",
            profile.len(),
            grid.n_nodes()
        )));
    }
    writeln!(w, "xi,psi,beta,m1,m2,m3")?;
    let cart = to_cartesian(profile);
    for (i, m) in cart.m.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            grid.xi(i as isize),
            profile.psi[i],
            profile.beta[i],
            m.x,
            m.y,
            m.z
        )?;
    }
    Ok(())
}

/// Reads a profile CSV; the far-field states are taken from the end rows.
pub fn read_profile_csv<R: BufRead>(r: R) -> Result<(Grid, PolarProfile)> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidProfile("empty CSV".into()))??;
    if header.trim() != "xi,psi,beta,m1,m2,m3" {
        return Err(Error::InvalidProfile(format!(
            "CSV header must be `xi,psi,beta,m1,m2,m3` (got `{header}`)"
        )));
    }
    let (mut xi, mut psi, mut beta) = (vec![], vec![], vec![]);
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidProfile(format!("CSV row {}: {e}", k + 2)))?;
        if cols.len() != 6 {
            return Err(Error::InvalidProfile(format!(
                "CSV row {} has {} columns, expected 6",
                k + 2,
                cols.len()
            )));
        }
        xi.push(cols[0]);
        psi.push(cols[1]);
        beta.push(cols[2]);
    }
    let grid = grid_from_nodes(&xi)?;
    let n = psi.len();
    let minus = PolarPoint::new(psi[0], beta[0]);
    let plus = PolarPoint::new(psi[n - 1], beta[n - 1]);
    Ok((grid, PolarProfile::new(psi, beta, minus, plus)?))
}

fn grid_from_nodes(xi: &[f64]) -> Result<Grid> {
    if xi.len() < 3 {
        return Err(Error::InvalidProfile("profile needs at least 3 nodes".into()));
    }
    let grid = Grid::new(-xi[0], xi.len())?;
    let h = grid.spacing();
    for (i, x) in xi.iter().enumerate() {
        if (x - grid.xi(i as isize)).abs() > 1e-9 * (1.0 + h) {
            return Err(Error::InvalidProfile(format!(
                "nodes are not a uniform symmetric grid (node {i} at {x})"
            )));
        }
    }
    Ok(grid)
}

/// JSON form of a travelling wave: node data plus the metadata needed to
/// reuse it as a seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub schema_version: u32,
    pub params: Params,
    pub regime: Regime,
    #[serde(rename = "V")]
    pub velocity: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub stencil: StencilOrder,
    pub half_width: f64,
    pub minus: PolarPoint,
    pub plus: PolarPoint,
    pub xi: Vec<f64>,
    pub psi: Vec<f64>,
    pub beta: Vec<f64>,
    pub m1: Vec<f64>,
    pub m2: Vec<f64>,
    pub m3: Vec<f64>,
}

impl From<&TWSolution> for SolutionRecord {
    fn from(s: &TWSolution) -> Self {
        let cart = to_cartesian(&s.profile);
        SolutionRecord {
            schema_version: SCHEMA_VERSION,
            params: s.params,
            regime: s.regime,
            velocity: s.velocity,
            residual_norm: s.residual_norm,
            iterations: s.iterations,
            stencil: s.stencil,
            half_width: s.grid.half_width(),
            minus: s.profile.minus,
            plus: s.profile.plus,
            xi: s.grid.nodes(),
            psi: s.profile.psi.clone(),
            beta: s.profile.beta.clone(),
            m1: cart.component(0),
            m2: cart.component(1),
            m3: cart.component(2),
        }
    }
}

impl SolutionRecord {
    pub fn into_solution(self) -> Result<TWSolution> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidProfile(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let grid = Grid::new(self.half_width, self.psi.len())?;
        if self.xi.len() != self.psi.len() {
            return Err(Error::InvalidProfile("xi and psi lengths differ".into()));
        }
        grid_from_nodes(&self.xi)?;
        Ok(TWSolution {
            profile: PolarProfile::new(self.psi, self.beta, self.minus, self.plus)?,
            velocity: self.velocity,
            params: self.params,
            residual_norm: self.residual_norm,
            grid,
            regime: self.regime,
            stencil: self.stencil,
            iterations: self.iterations,
        })
    }
}

pub fn write_solution_json<W: Write>(w: W, sol: &TWSolution) -> Result<()> {
    serde_json::to_writer_pretty(w, &SolutionRecord::from(sol))?;
    Ok(())
}

pub fn read_solution_json<R: std::io::Read>(r: R) -> Result<TWSolution> {
    let rec: SolutionRecord = serde_json::from_reader(r)?;
    rec.into_solution()
}

/// Polar form of a unit-vector field, used when exporting dynamics snapshots.
pub fn write_cartesian_csv<W: Write>(
    mut w: W,
    m: &crate::model::CartesianProfile,
    grid: &Grid,
) -> Result<()> {
    writeln!(w, "xi,psi,beta,m1,m2,m3")?;
    for (i, v) in m.m.iter().enumerate() {
        let p = polar_from_unit(v);
        writeln!(
            w,
            "{},{},{},{},{},{}",
            grid.xi(i as isize),
            p.psi,
            p.beta,
            v.x,
            v.y,
            v.z
        )?;
    }
    Ok(())
}
