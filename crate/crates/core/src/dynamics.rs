//! Time integration of the full LLG equation on the truncated wire,
//!
//! ```text
//! m_t = (m x H - alpha m x (m x H)) / (1 + alpha^2),
//! ```
//!
//! by classical RK4 with renormalisation of `m` after every step and the end
//! nodes held at the far-field states.

use serde::{Deserialize, Serialize};

use crate::banded::BandMatrix;
use crate::energetics::{energy_cartesian, equilibria, potential_unchecked};
use crate::error::{Error, Result};
use crate::model::{CartesianProfile, Grid, Params, Vec3};

/// Walls closer than this to either end abort the run.
pub const BOUNDARY_MARGIN: f64 = 5.0;
const UNIT_ABORT: f64 = 1e-3;
const ENERGY_ABORT: f64 = 1e-6;

#[inline]
fn field_at(m: &[Vec3], i: usize, left: &Vec3, right: &Vec3, params: &Params, inv_h2: f64) -> Vec3 {
    let lap = (left - 2.0 * m[i] + right) * inv_h2;
    lap + Vec3::new(m[i].x + params.h1, -params.k2 * m[i].y + params.h2, params.h3)
}

#[inline]
fn torque(m: &Vec3, h: &Vec3, alpha: f64) -> Vec3 {
    let mh = m.cross(h);
    (mh - alpha * m.cross(&mh)) / (1.0 + alpha * alpha)
}

/// `m_t` at every node; the neighbours of the end nodes are copies of the end
/// values themselves, which are the far-field states for a wall profile.
pub fn llg_rhs(m: &CartesianProfile, params: &Params, grid: &Grid) -> Result<Vec<Vec3>> {
    params.check()?;
    if m.len() != grid.n_nodes() {
        return Err(Error::InvalidProfile(format!(
            "profile has {} samples, grid has {} nodes",
            m.len(),
            grid.n_nodes()
        )));
    }
    if let Some(v) = m.m.iter().find(|v| (v.norm() - 1.0).abs() > 1e-9) {
        return Err(Error::NonUnitVector { norm: v.norm() });
    }
    let n = m.len();
    let inv_h2 = 1.0 / grid.spacing().powi(2);
    Ok((0..n)
        .map(|i| {
            let left = m.m[i.saturating_sub(1)];
            let right = m.m[(i + 1).min(n - 1)];
            let h = field_at(&m.m, i, &left, &right, params, inv_h2);
            torque(&m.m[i], &h, params.alpha)
        })
        .collect())
}

/// Right-hand side with the end nodes frozen.
fn rhs_clamped(m: &[Vec3], out: &mut [Vec3], params: &Params, inv_h2: f64) {
    let n = m.len();
    out[0] = Vec3::zeros();
    out[n - 1] = Vec3::zeros();
    for i in 1..n - 1 {
        let h = field_at(m, i, &m[i - 1], &m[i + 1], params, inv_h2);
        out[i] = torque(&m[i], &h, params.alpha);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOptions {
    /// Time step; defaults to `0.2 h^2`.
    pub dt: Option<f64>,
    /// Interval between recorded samples.
    pub output_interval: f64,
    /// Store the full profile at every sample.
    pub keep_profiles: bool,
    /// Evaluate the energy after every step (always on at zero field).
    pub monitor_energy: bool,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            dt: None,
            output_interval: 1.0,
            keep_profiles: true,
            monitor_energy: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub grid: Grid,
    pub dt: f64,
    pub steps: usize,
    pub times: Vec<f64>,
    /// Profiles at the sample times (empty unless requested).
    pub profiles: Vec<CartesianProfile>,
    /// Zero crossing of `m1` at each sample, if there is exactly one.
    pub positions: Vec<Option<f64>>,
    pub energy: Vec<f64>,
    /// Largest `| |m| - 1 |` before renormalisation since the previous sample.
    pub max_unit_violation: Vec<f64>,
    /// Largest energy increase over a single step (when monitored).
    pub max_energy_increase: f64,
    /// Largest `| |m| - 1 |` after renormalisation over the whole run.
    pub max_unit_error: f64,
    pub final_profile: CartesianProfile,
}

pub fn integrate(
    m0: &CartesianProfile,
    params: &Params,
    grid: &Grid,
    t_final: f64,
    dt: f64,
) -> Result<Trajectory> {
    integrate_with(
        m0,
        params,
        grid,
        t_final,
        &IntegrateOptions {
            dt: Some(dt),
            ..Default::default()
        },
    )
}

pub fn integrate_with(
    m0: &CartesianProfile,
    params: &Params,
    grid: &Grid,
    t_final: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    params.check()?;
    let h = grid.spacing();
    let dt = opts.dt.unwrap_or(0.2 * h * h);
    if !(dt > 0.0 && dt <= 0.25 * h * h) {
        return Err(Error::InvalidParams(format!(
            "dt = {dt} must lie in (0, 0.25 h^2] = (0, {}]",
            0.25 * h * h
        )));
    }
    if !(t_final.is_finite() && t_final >= 0.0) || !(opts.output_interval > 0.0) {
        return Err(Error::InvalidParams(
            "final time must be >= 0 and output interval > 0".into(),
        ));
    }
    if m0.len() != grid.n_nodes() {
        return Err(Error::InvalidProfile(format!(
            "initial profile has {} samples, grid has {} nodes",
            m0.len(),
            grid.n_nodes()
        )));
    }
    if let Some(v) = m0.m.iter().find(|v| (v.norm() - 1.0).abs() > 1e-9) {
        return Err(Error::NonUnitVector { norm: v.norm() });
    }
    let eq = equilibria(params)?;
    let (minus, plus) = (eq.minus.to_unit(), eq.plus.to_unit());
    let zero_field = params.applied_field() == Vec3::zeros();
    let monitor = opts.monitor_energy || zero_field;
    let u_ref = potential_unchecked(&plus, params);

    let n = grid.n_nodes();
    let mut m = m0.m.clone();
    m[0] = minus;
    m[n - 1] = plus;

    let inv_h2 = 1.0 / (h * h);
    let n_steps = (t_final / dt).round() as usize;
    let every = ((opts.output_interval / dt).round() as usize).max(1);
    let mut traj = Trajectory {
        grid: *grid,
        dt,
        steps: n_steps,
        times: vec![],
        profiles: vec![],
        positions: vec![],
        energy: vec![],
        max_unit_violation: vec![],
        max_energy_increase: f64::NEG_INFINITY,
        max_unit_error: 0.0,
        final_profile: CartesianProfile { m: vec![] },
    };
    let mut energy = energy_cartesian(&m, params, grid, u_ref);
    let mut violation: f64 = 0.0;
    let record = |traj: &mut Trajectory, m: &[Vec3], t: f64, e: f64, v: f64| -> Result<()> {
        let prof = CartesianProfile { m: m.to_vec() };
        let pos = wall_position(&prof, grid).ok();
        if let Some(x) = pos {
            if x.abs() > grid.half_width() - BOUNDARY_MARGIN {
                return Err(Error::WallNearBoundary { position: x, time: t });
            }
        }
        traj.times.push(t);
        traj.positions.push(pos);
        traj.energy.push(e);
        traj.max_unit_violation.push(v);
        if opts.keep_profiles {
            traj.profiles.push(prof);
        }
        Ok(())
    };
    record(&mut traj, &m, 0.0, energy, 0.0)?;

    let mut k1 = vec![Vec3::zeros(); n];
    let mut k2 = vec![Vec3::zeros(); n];
    let mut k3 = vec![Vec3::zeros(); n];
    let mut k4 = vec![Vec3::zeros(); n];
    let mut tmp = vec![Vec3::zeros(); n];
    for step in 1..=n_steps {
        rhs_clamped(&m, &mut k1, params, inv_h2);
        for i in 0..n {
            tmp[i] = m[i] + 0.5 * dt * k1[i];
        }
        rhs_clamped(&tmp, &mut k2, params, inv_h2);
        for i in 0..n {
            tmp[i] = m[i] + 0.5 * dt * k2[i];
        }
        rhs_clamped(&tmp, &mut k3, params, inv_h2);
        for i in 0..n {
            tmp[i] = m[i] + dt * k3[i];
        }
        rhs_clamped(&tmp, &mut k4, params, inv_h2);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let v = m[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            let norm = v.norm();
            worst = worst.max((norm - 1.0).abs());
            m[i] = v / norm;
            traj.max_unit_error = traj.max_unit_error.max((m[i].norm() - 1.0).abs());
        }
        let t = step as f64 * dt;
        if worst > UNIT_ABORT {
            return Err(Error::Instability(format!(
                "|m| drifted by {worst:.3e} in one step at t = {t:.4}"
            )));
        }
        violation = violation.max(worst);
        if monitor {
            let e = energy_cartesian(&m, params, grid, u_ref);
            let rise = e - energy;
            traj.max_energy_increase = traj.max_energy_increase.max(rise);
            if zero_field && rise > ENERGY_ABORT {
                return Err(Error::Instability(format!(
                    "energy rose by {rise:.3e} in one step at t = {t:.4}"
                )));
            }
            energy = e;
        }
        if step % every == 0 || step == n_steps {
            if !monitor {
                energy = energy_cartesian(&m, params, grid, u_ref);
            }
            record(&mut traj, &m, t, energy, violation)?;
            violation = 0.0;
        }
    }
    traj.final_profile = CartesianProfile { m };
    Ok(traj)
}

/// Zero crossing of `m1` by linear interpolation.
pub fn wall_position(m: &CartesianProfile, grid: &Grid) -> Result<f64> {
    let mut crossings = vec![];
    let m1 = m.component(0);
    for i in 0..m1.len() - 1 {
        let (a, b) = (m1[i], m1[i + 1]);
        // a zero at a node is attributed to the cell on its left
        if (a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0) {
            let x0 = grid.xi(i as isize);
            crossings.push(x0 + grid.spacing() * a / (a - b));
        }
    }
    match crossings.len() {
        0 => Err(Error::NoWall),
        1 => Ok(crossings[0]),
        count => Err(Error::MultipleWalls { count }),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WallTrack {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    /// Least-squares slope of position against time over the final third.
    pub velocity: f64,
}

/// Wall positions from the stored profiles and the asymptotic velocity.
pub fn track_wall(traj: &Trajectory) -> Result<WallTrack> {
    let positions = if traj.profiles.len() == traj.times.len() && !traj.profiles.is_empty() {
        traj.profiles
            .iter()
            .map(|p| wall_position(p, &traj.grid))
            .collect::<Result<Vec<_>>>()?
    } else {
        traj.positions
            .iter()
            .map(|p| p.ok_or(Error::NoWall))
            .collect::<Result<Vec<_>>>()?
    };
    let velocity = tail_slope(&traj.times, &positions);
    Ok(WallTrack {
        times: traj.times.clone(),
        positions,
        velocity,
    })
}

/// Least-squares slope over the last third of the samples.
pub fn tail_slope(t: &[f64], x: &[f64]) -> f64 {
    let n = t.len();
    if n < 2 {
        return 0.0;
    }
    let start = (2 * n / 3).min(n - 2);
    let (ts, xs) = (&t[start..], &x[start..]);
    let k = ts.len() as f64;
    let tm = ts.iter().sum::<f64>() / k;
    let xm = xs.iter().sum::<f64>() / k;
    let num: f64 = ts.iter().zip(xs).map(|(a, b)| (a - tm) * (b - xm)).sum();
    let den: f64 = ts.iter().map(|a| (a - tm).powi(2)).sum();
    num / den
}

/// Orthonormal basis of the tangent plane at the unit vector `m`.
fn tangent_basis(m: &Vec3) -> (Vec3, Vec3) {
    let a = if m.x.abs() < 0.6 { Vec3::x() } else { Vec3::z() };
    let e1 = a.cross(m).normalize();
    (e1, m.cross(&e1))
}

/// Equilibrium of the lattice equations nearest to `m0`, with the end nodes
/// set to the far-field states.
///
/// The three-point Laplacian does not hold the continuum walls exactly
/// (they move by `O(h^2)`); this is the profile the integrator keeps fixed.
/// Newton on tangent-plane coordinates, with a small diagonal shift that
/// suppresses the (exponentially weak) lattice translation mode.
pub fn discrete_static_wall(m0: &CartesianProfile, params: &Params, grid: &Grid) -> Result<CartesianProfile> {
    params.check()?;
    let n = grid.n_nodes();
    if m0.len() != n {
        return Err(Error::InvalidProfile(format!(
            "profile has {} samples, grid has {} nodes",
            m0.len(),
            n
        )));
    }
    let eq = equilibria(params)?;
    let mut m: Vec<Vec3> = m0.m.iter().map(|v| v.normalize()).collect();
    m[0] = eq.minus.to_unit();
    m[n - 1] = eq.plus.to_unit();
    let inv_h2 = 1.0 / grid.spacing().powi(2);
    let diag = Vec3::new(1.0 - 2.0 * inv_h2, -params.k2 - 2.0 * inv_h2, -2.0 * inv_h2);
    let shift = 1e-7;
    let tol = 1e-10;
    let ni = n - 2;
    let mut worst = f64::INFINITY;
    for _ in 0..40 {
        let bases: Vec<(Vec3, Vec3)> = m.iter().map(tangent_basis).collect();
        let fields: Vec<Vec3> = (1..n - 1)
            .map(|i| field_at(&m, i, &m[i - 1], &m[i + 1], params, inv_h2))
            .collect();
        let mut rhs = vec![0.0; 2 * ni];
        for k in 0..ni {
            let (e1, e2) = bases[k + 1];
            rhs[2 * k] = -e1.dot(&fields[k]);
            rhs[2 * k + 1] = -e2.dot(&fields[k]);
        }
        worst = rhs.iter().fold(0.0, |a: f64, b| a.max(b.abs()));
        if worst < tol {
            return Ok(CartesianProfile { m });
        }
        let mut jac = BandMatrix::zeros(2 * ni, 3, 3);
        for k in 0..ni {
            let i = k + 1;
            let e = [bases[i].0, bases[i].1];
            let mh = m[i].dot(&fields[k]);
            for a in 0..2 {
                for b in 0..2 {
                    let d = e[a].component_mul(&diag).dot(&e[b]) - if a == b { mh + shift } else { 0.0 };
                    jac.add(2 * k + a, 2 * k + b, d);
                    if k + 1 < ni {
                        let f = [bases[i + 1].0, bases[i + 1].1];
                        jac.add(2 * k + a, 2 * (k + 1) + b, e[a].dot(&f[b]) * inv_h2);
                        jac.add(2 * (k + 1) + b, 2 * k + a, e[a].dot(&f[b]) * inv_h2);
                    }
                }
            }
        }
        let lu = jac
            .factor()
            .map_err(|e| Error::NoConvergence {
                iterations: 0,
                residual_norm: worst,
                reason: format!("lattice wall Jacobian: {e}"),
            })?;
        let step = lu.solve(&rhs);
        for k in 0..ni {
            let (e1, e2) = bases[k + 1];
            m[k + 1] = (m[k + 1] + step[2 * k] * e1 + step[2 * k + 1] * e2).normalize();
        }
    }
    Err(Error::NoConvergence {
        iterations: 40,
        residual_norm: worst,
        reason: "lattice wall relaxation".into(),
    })
}

/// Bloch wall `(tanh(xi - c), 0, sech(xi - c))` centred at `c`.
pub fn bloch_profile(grid: &Grid, centre: f64) -> CartesianProfile {
    CartesianProfile {
        m: grid
            .nodes()
            .into_iter()
            .map(|x| {
                let s = x - centre;
                Vec3::new(s.tanh(), 0.0, 1.0 / s.cosh())
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{to_cartesian, Regime};
    use crate::staticsol::StaticWall;

    fn sup(a: &CartesianProfile, b: &CartesianProfile) -> f64 {
        a.m.iter().zip(&b.m).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn rhs_examples() {
        let grid = Grid::new(10.0, 101).unwrap();
        let n = grid.n_nodes();
        let pw = Params::new(0.0, 0.0, 0.0, 1.0, 0.1).unwrap();
        let ux = CartesianProfile { m: vec![Vec3::x(); n] };
        assert!(llg_rhs(&ux, &pw, &grid).unwrap().iter().all(|v| v.norm() == 0.0));

        let (h1, alpha) = (0.3, 0.1);
        let p = Params::new(h1, 0.0, 0.0, 0.0, alpha).unwrap();
        let uz = CartesianProfile { m: vec![Vec3::z(); n] };
        let expected = Vec3::new(alpha * h1, h1, 0.0) / (1.0 + alpha * alpha);
        for v in llg_rhs(&uz, &p, &grid).unwrap() {
            assert!((v - expected).norm() < 1e-15);
        }

        let grid = Grid::default();
        let wall = bloch_profile(&grid, 0.0);
        let worst = llg_rhs(&wall, &pw, &grid)
            .unwrap()
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        assert!(worst < grid.spacing().powi(2), "{worst}");

        let bad = CartesianProfile { m: vec![Vec3::new(1.0, 0.1, 0.0); n] };
        assert!(llg_rhs(&bad, &pw, &Grid::new(10.0, 101).unwrap()).is_err());
    }

    #[test]
    fn static_walls_persist() {
        let grid = Grid::new(15.0, 301).unwrap();
        let pw = Params::new(0.0, 0.0, 0.0, 1.0, 0.1).unwrap();
        let tanh = bloch_profile(&grid, 0.0);
        let m0 = discrete_static_wall(&tanh, &pw, &grid).unwrap();
        assert!(sup(&m0, &tanh) < grid.spacing().powi(2));
        let traj = integrate(&m0, &pw, &grid, 10.0, 0.2 * grid.spacing().powi(2)).unwrap();
        let d = sup(&traj.final_profile, &m0);
        assert!(d < 1e-6, "{d}");
        assert!(traj.max_energy_increase <= 1e-12);
        assert!(track_wall(&traj).unwrap().velocity.abs() < 1e-8);

        let pt = Params::new(0.0, 0.0, 0.5, 0.0, 0.1).unwrap();
        let regime = Regime::Transverse { h2: 0.0, h3: 0.5 };
        let g2 = StaticWall::from(regime).fit_grid(&grid);
        let cont = to_cartesian(&crate::staticsol::static_profile(&regime, &g2).unwrap());
        let prof = discrete_static_wall(&cont, &pt, &g2).unwrap();
        assert!(sup(&prof, &cont) < g2.spacing().powi(2));
        let traj = integrate(&prof, &pt, &g2, 10.0, 0.2 * g2.spacing().powi(2)).unwrap();
        let d = sup(&traj.final_profile, &prof);
        assert!(d < 1e-6, "{d}");
    }

    #[test]
    fn synthetic_translation() {
        let grid = Grid::new(40.0, 1601).unwrap();
        let times: Vec<f64> = (0..=90).map(|k| k as f64).collect();
        let profiles: Vec<CartesianProfile> = times
            .iter()
            .map(|t| bloch_profile(&grid, -12.0 + 0.3 * t))
            .collect();
        let traj = Trajectory {
            grid,
            dt: 1.0,
            steps: 90,
            positions: vec![None; times.len()],
            energy: vec![0.0; times.len()],
            max_unit_violation: vec![0.0; times.len()],
            max_energy_increase: 0.0,
            max_unit_error: 0.0,
            final_profile: profiles.last().unwrap().clone(),
            times,
            profiles,
        };
        let tr = track_wall(&traj).unwrap();
        assert!((tr.velocity - 0.3).abs() < 1e-6, "{}", tr.velocity);
    }

    #[test]
    fn wall_detection_errors() {
        let grid = Grid::new(5.0, 11).unwrap();
        let ux = CartesianProfile { m: vec![Vec3::x(); 11] };
        assert!(matches!(wall_position(&ux, &grid), Err(Error::NoWall)));
        let mut two = ux.clone();
        for i in 3..7 {
            two.m[i] = -Vec3::x();
        }
        assert!(matches!(
            wall_position(&two, &grid),
            Err(Error::MultipleWalls { count: 2 })
        ));
        let w = bloch_profile(&grid, 0.0);
        assert_eq!(wall_position(&w, &grid).unwrap(), 0.0);
    }

    #[test]
    fn wall_near_boundary_aborts() {
        let grid = Grid::new(8.0, 161).unwrap();
        let p = Params::new(0.0, 0.0, 0.0, 1.0, 0.1).unwrap();
        let m0 = bloch_profile(&grid, 4.0);
        assert!(matches!(
            integrate(&m0, &p, &grid, 1.0, 0.2 * grid.spacing().powi(2)),
            Err(Error::WallNearBoundary { .. })
        ));
    }

    #[test]
    fn rejects_large_steps() {
        let grid = Grid::new(8.0, 161).unwrap();
        let p = Params::new(0.0, 0.0, 0.0, 1.0, 0.1).unwrap();
        let m0 = bloch_profile(&grid, 0.0);
        assert!(integrate(&m0, &p, &grid, 1.0, 0.3 * grid.spacing().powi(2)).is_err());
    }

    #[test]
    fn unit_defect_scales_like_dt_to_the_fifth() {
        let grid = Grid::new(10.0, 101).unwrap();
        let p = Params::new(0.01, 0.0, 0.0, 1.0, 0.1).unwrap();
        // a tilted wall so that all torque components are active
        let mut m0 = bloch_profile(&grid, 0.0);
        for v in m0.m.iter_mut() {
            *v = Vec3::new(v.x, 0.4 * v.z, v.z).normalize();
        }
        let n = grid.n_nodes();
        m0.m[0] = -Vec3::x();
        m0.m[n - 1] = Vec3::x();
        let defect = |dt: f64| {
            let opts = IntegrateOptions {
                dt: Some(dt),
                output_interval: dt,
                keep_profiles: false,
                monitor_energy: false,
            };
            let t = integrate_with(&m0, &p, &grid, dt, &opts).unwrap();
            t.max_unit_violation[1]
        };
        let h2 = grid.spacing().powi(2);
        let (a, b) = (defect(0.2 * h2), defect(0.1 * h2));
        let rate = (a / b).log2();
        assert!(rate > 4.5, "{a} {b} {rate}");
    }
}
