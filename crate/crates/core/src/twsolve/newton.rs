use serde::{Deserialize, Serialize};

use crate::energetics::potential_unchecked;
use crate::error::{Error, Result};
use crate::model::{align_branch, validate, Grid, Params, Regime, TWSolution};
use crate::stencil::StencilOrder;

use super::problem::Problem;
use super::reference::{ReferenceProfile, SwitchingFunction};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JacobianMode {
    #[default]
    Analytic,
    /// Central differences of the residual; slow, for cross-checks.
    FiniteDifference,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub tol_residual: f64,
    pub max_iter: usize,
    /// Sufficient-decrease constant of the backtracking line search.
    pub armijo: f64,
    /// Smallest step fraction tried before the line search gives up.
    pub min_step: f64,
    pub fd_step: f64,
    pub jacobian: JacobianMode,
    pub stencil: StencilOrder,
    /// Iterative-refinement sweeps per linear solve.
    pub refinements: usize,
    pub theta: SwitchingFunction,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol_residual: 1e-10,
            max_iter: 50,
            armijo: 1e-4,
            min_step: 1.0 / 1024.0,
            fd_step: 1e-7,
            jacobian: JacobianMode::Analytic,
            stencil: StencilOrder::default(),
            refinements: 2,
            theta: SwitchingFunction::default(),
        }
    }
}

impl NewtonOptions {
    pub fn check(&self) -> Result<()> {
        let positive = [self.tol_residual, self.armijo, self.min_step, self.fd_step];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0))
            || self.max_iter == 0
            || self.min_step > 1.0
            || self.armijo >= 0.5
            || !(self.theta.xi0 > 0.0)
        {
            return Err(Error::InvalidParams(format!(
                "Newton options must be positive with min_step <= 1 and armijo < 0.5 (got {self:?})"
            )));
        }
        Ok(())
    }
}

/// Damped Newton on the bordered travelling-wave system.
///
/// Without a seed the iteration starts from the reference profile with
/// `V = 0`. A seed on the same grid is re-expressed as corrections to the
/// new reference, so solutions at nearby parameters make good starts.
pub fn solve_tw(
    params: &Params,
    regime: &Regime,
    grid: &Grid,
    opts: &NewtonOptions,
    seed: Option<&TWSolution>,
) -> Result<TWSolution> {
    validate(params, regime)?;
    opts.check()?;
    let reference =
        ReferenceProfile::build(params, regime, grid, opts.theta, opts.stencil.radius())?;
    let problem = Problem::new(&reference, opts.stencil)?;
    let mut x = match seed {
        Some(s) => seed_vector(&problem, &reference, s)?,
        None => vec![0.0; problem.n_unknowns()],
    };
    let h = problem.spacing();
    let mut res = problem.residual(&x)?;
    let mut norm = res.norm(h);
    let mut iterations = 0;
    while norm >= opts.tol_residual {
        if iterations == opts.max_iter {
            return Err(Error::NoConvergence {
                iterations,
                residual_norm: norm,
                reason: "iteration limit reached".into(),
            });
        }
        iterations += 1;
        let jac = match opts.jacobian {
            JacobianMode::Analytic => problem.jacobian(&x),
            JacobianMode::FiniteDifference => problem.fd_jacobian(&x, opts.fd_step)?,
        };
        let lu = jac.factor().map_err(|e| Error::NoConvergence {
            iterations,
            residual_norm: norm,
            reason: format!("singular Jacobian ({e})"),
        })?;
        let f = problem.residual_vector(&res);
        let m = f.len() - 1;
        let neg: Vec<f64> = f[..m].iter().map(|v| -v).collect();
        let (dx, dv) = lu.solve(&neg, -f[m], opts.refinements);

        let mut lambda = 1.0;
        loop {
            let mut trial = x.clone();
            for (t, d) in trial.iter_mut().zip(dx.iter().chain(std::iter::once(&dv))) {
                *t += lambda * d;
            }
            if let Ok(r) = problem.residual(&trial) {
                let n_trial = r.norm(h);
                if n_trial * n_trial <= (1.0 - 2.0 * opts.armijo * lambda) * norm * norm {
                    x = trial;
                    res = r;
                    norm = n_trial;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < opts.min_step {
                return Err(Error::NoConvergence {
                    iterations,
                    residual_norm: norm,
                    reason: "line search stagnated".into(),
                });
            }
        }
    }
    let profile = problem.solution_profile(&x);
    Ok(TWSolution {
        profile,
        velocity: x[problem.n_unknowns() - 1],
        params: *params,
        residual_norm: norm,
        grid: reference.grid,
        regime: *regime,
        stencil: opts.stencil,
        iterations,
    })
}

fn seed_vector(
    problem: &Problem<'_>,
    reference: &ReferenceProfile,
    seed: &TWSolution,
) -> Result<Vec<f64>> {
    let n = problem.n_nodes();
    if seed.profile.len() != n || seed.grid != reference.grid {
        return Err(Error::InvalidProfile(format!(
            "seed lives on a grid with {} nodes (half-width {}), solve uses {n} (half-width {})",
            seed.profile.len(),
            seed.grid.half_width(),
            reference.grid.half_width()
        )));
    }
    let g = reference.ghosts();
    let mut x = Vec::with_capacity(problem.n_unknowns());
    for i in 1..n - 1 {
        let b_ref = reference.beta[i + g];
        x.push(seed.profile.psi[i] - reference.psi[i + g]);
        x.push(align_branch(seed.profile.beta[i], b_ref) - b_ref);
    }
    x.push(seed.velocity);
    Ok(x)
}

/// `(U(m+) - U(m-)) / (alpha integral |m'|^2)`, the wave speed implied by the
/// energy balance of a travelling wave, evaluated on the converged profile
/// with the solver's own derivative stencil.
pub fn velocity_identity(sol: &TWSolution) -> Result<f64> {
    let parts = velocity_identity_parts(sol)?;
    Ok(parts.0 / (sol.params.alpha * parts.1))
}

/// Numerator `U(m+) - U(m-)` and `integral |m'|^2` of the identity.
pub fn velocity_identity_parts(sol: &TWSolution) -> Result<(f64, f64)> {
    let theta = SwitchingFunction::default();
    let reference = ReferenceProfile::build(
        &sol.params,
        &sol.regime,
        &sol.grid,
        theta,
        sol.stencil.radius(),
    )?;
    let problem = Problem::new(&reference, sol.stencil)?;
    let g = reference.ghosts();
    let n = problem.n_nodes();
    let mut x = Vec::with_capacity(problem.n_unknowns());
    for i in 1..n - 1 {
        x.push(sol.profile.psi[i] - reference.psi[i + g]);
        x.push(sol.profile.beta[i] - reference.beta[i + g]);
    }
    x.push(sol.velocity);
    let du = potential_unchecked(&sol.profile.plus.to_unit(), &sol.params)
        - potential_unchecked(&sol.profile.minus.to_unit(), &sol.params);
    Ok((du, problem.exchange_integral(&x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::staticsol::{bloch_wall, transverse_wall};

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn base_points_return_static_walls() {
        let grid = Grid::default();
        let opts = NewtonOptions::default();
        let p = Params::new(0.0, 0.0, 0.0, 1.0, 0.1).unwrap();
        let s = solve_tw(&p, &Regime::Walker { k2: 1.0 }, &grid, &opts, None).unwrap();
        assert!(s.velocity.abs() < 1e-10);
        assert!(max_diff(&s.profile.beta, &bloch_wall(&grid).beta) < 1e-6);

        let p = Params::new(0.0, 0.0, 0.5, 0.0, 0.1).unwrap();
        let reg = Regime::Transverse { h2: 0.0, h3: 0.5 };
        let s = solve_tw(&p, &reg, &grid, &opts, None).unwrap();
        assert!(s.velocity.abs() < 1e-10);
        let t = transverse_wall(0.5, &s.grid).unwrap();
        assert!(max_diff(&s.profile.beta, &t.beta) < 1e-6);
    }

    #[test]
    fn small_drive_mobility() {
        let grid = Grid::default();
        let p = Params::new(0.01, 0.0, 0.0, 1.0, 0.1).unwrap();
        let s = solve_tw(&p, &Regime::Walker { k2: 1.0 }, &grid, &Default::default(), None)
            .unwrap();
        assert!(s.residual_norm < 1e-10);
        // a field along +x drives the +x domain to grow: the wall moves left
        assert!((s.velocity + 0.1).abs() < 0.003, "{}", s.velocity);
        let vi = velocity_identity(&s).unwrap();
        assert!((vi - s.velocity).abs() <= 1e-6 * s.velocity.abs(), "{vi} {}", s.velocity);
        let (du, ex) = velocity_identity_parts(&s).unwrap();
        assert!((du + 0.02).abs() < 1e-12);
        // exact Walker wall: tilt sin 2phi = 2 H1/(alpha K2), width
        // 1/sqrt(1 + K2 sin^2 phi), speed -H1 * width / alpha
        let phi = 0.5 * (2.0 * 0.01 / (0.1 * 1.0f64)).asin();
        let width = 1.0 / (1.0 + phi.sin().powi(2)).sqrt();
        assert!((s.velocity + 0.01 * width / 0.1).abs() < 1e-6, "{}", s.velocity);
        assert!((ex - 2.0 / width).abs() < 1e-6, "{ex}");
    }

    #[test]
    fn finite_difference_mode_agrees() {
        let grid = Grid::new(8.0, 81).unwrap();
        let p = Params::new(0.01, 0.02, 0.0, 1.0, 0.1).unwrap();
        let reg = Regime::Walker { k2: 1.0 };
        let a = solve_tw(&p, &reg, &grid, &Default::default(), None).unwrap();
        let opts = NewtonOptions {
            jacobian: JacobianMode::FiniteDifference,
            ..Default::default()
        };
        let b = solve_tw(&p, &reg, &grid, &opts, None).unwrap();
        assert!((a.velocity - b.velocity).abs() < 1e-9);
        assert!(max_diff(&a.profile.psi, &b.profile.psi) < 1e-9);
    }

    #[test]
    fn translated_seed_returns_same_translate() {
        let grid = Grid::default();
        let p = Params::new(0.01, 0.0, 0.02, 1.0, 0.1).unwrap();
        let reg = Regime::Walker { k2: 1.0 };
        let opts = NewtonOptions::default();
        let s = solve_tw(&p, &reg, &grid, &opts, None).unwrap();
        let mut shifted = s.clone();
        let n = grid.n_nodes();
        for i in (1..n - 1).rev() {
            shifted.profile.psi[i] = s.profile.psi[i - 1];
            shifted.profile.beta[i] = s.profile.beta[i - 1];
        }
        let again = solve_tw(&p, &reg, &grid, &opts, Some(&shifted)).unwrap();
        assert!(max_diff(&again.profile.psi, &s.profile.psi) < 1e-8);
        assert!(max_diff(&again.profile.beta, &s.profile.beta) < 1e-8);
        assert!((again.velocity - s.velocity).abs() < 1e-10);
    }

    #[test]
    fn rejects_degenerate_and_bad_options() {
        let grid = Grid::default();
        let p = Params::new(0.0, 0.0, 0.0, 0.0, 0.1).unwrap();
        assert!(matches!(
            solve_tw(&p, &Regime::Walker { k2: 1.0 }, &grid, &Default::default(), None),
            Err(Error::DegenerateRegime)
        ));
        let p = Params::new(0.0, 0.0, 0.0, 1.0, 0.1).unwrap();
        let opts = NewtonOptions {
            max_iter: 0,
            ..Default::default()
        };
        assert!(solve_tw(&p, &Regime::Walker { k2: 1.0 }, &grid, &opts, None).is_err());
    }

    #[test]
    fn strong_drive_does_not_converge() {
        let grid = Grid::default();
        let p = Params::new(0.6, 0.0, 0.0, 1.0, 0.1).unwrap();
        let opts = NewtonOptions {
            max_iter: 30,
            ..Default::default()
        };
        let r = solve_tw(&p, &Regime::Walker { k2: 1.0 }, &grid, &opts, None);
        assert!(matches!(r, Err(Error::NoConvergence { .. })), "{r:?}");
    }
}
