use serde::{Deserialize, Serialize};

use crate::energetics::equilibria;
use crate::error::Result;
use crate::model::{align_branch, Grid, Params, PolarPoint, PolarProfile, Regime};
use crate::staticsol::{StaticWall, WallSamples};

/// Quintic smoothstep `6t^5 - 15t^4 + 10t^3` on `[0, xi0]`: zero to the left,
/// one to the right, twice continuously differentiable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchingFunction {
    pub xi0: f64,
}

impl Default for SwitchingFunction {
    fn default() -> Self {
        SwitchingFunction { xi0: 1.0 }
    }
}

impl SwitchingFunction {
    pub fn eval(&self, xi: f64) -> f64 {
        if xi <= 0.0 {
            0.0
        } else if xi >= self.xi0 {
            1.0
        } else {
            let t = xi / self.xi0;
            t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
        }
    }

    pub fn derivative(&self, xi: f64) -> f64 {
        if xi <= 0.0 || xi >= self.xi0 {
            0.0
        } else {
            let t = xi / self.xi0;
            30.0 * t * t * (1.0 - t) * (1.0 - t) / self.xi0
        }
    }

    pub fn second_derivative(&self, xi: f64) -> f64 {
        if xi <= 0.0 || xi >= self.xi0 {
            0.0
        } else {
            let t = xi / self.xi0;
            60.0 * t * (1.0 - t) * (1.0 - 2.0 * t) / (self.xi0 * self.xi0)
        }
    }
}

/// Static profile shifted smoothly onto the far-field states of `params`:
///
/// ```text
/// psi_ref = psi* + Theta(xi) (psi+ - psi+*) + Theta(-xi) (psi- - psi-*)
/// ```
///
/// and likewise for `beta`. Samples include `ghosts` nodes beyond each end so
/// that wide stencils can be applied at every grid node.
#[derive(Clone, Debug)]
pub struct ReferenceProfile {
    pub params: Params,
    pub regime: Regime,
    pub grid: Grid,
    pub theta: SwitchingFunction,
    pub base: WallSamples,
    pub psi: Vec<f64>,
    pub beta: Vec<f64>,
    pub minus: PolarPoint,
    pub plus: PolarPoint,
}

impl ReferenceProfile {
    /// Builds the reference on `grid`, widened at fixed spacing if the static
    /// wall's tail has not settled by the ends.
    pub fn build(
        params: &Params,
        regime: &Regime,
        grid: &Grid,
        theta: SwitchingFunction,
        ghosts: usize,
    ) -> Result<Self> {
        regime.check()?;
        let wall = StaticWall::from(*regime);
        let grid = wall.fit_grid(grid);
        let base = wall.sample(&grid, ghosts)?;
        let (minus, plus) = if params.lambda() == regime.base_params(params.alpha).lambda() {
            (base.minus, base.plus)
        } else {
            let eq = equilibria(params)?;
            (
                PolarPoint::new(eq.minus.psi, align_branch(eq.minus.beta, base.minus.beta)),
                PolarPoint::new(eq.plus.psi, align_branch(eq.plus.beta, base.plus.beta)),
            )
        };
        let (dpm, dbm) = (minus.psi - base.minus.psi, minus.beta - base.minus.beta);
        let (dpp, dbp) = (plus.psi - base.plus.psi, plus.beta - base.plus.beta);
        let mut psi = base.psi.clone();
        let mut beta = base.beta.clone();
        for k in 0..psi.len() {
            let xi = grid.xi(k as isize - ghosts as isize);
            let (tr, tl) = (theta.eval(xi), theta.eval(-xi));
            psi[k] += tr * dpp + tl * dpm;
            beta[k] += tr * dbp + tl * dbm;
        }
        Ok(ReferenceProfile {
            params: *params,
            regime: *regime,
            grid,
            theta,
            base,
            psi,
            beta,
            minus,
            plus,
        })
    }

    pub fn ghosts(&self) -> usize {
        self.base.ghosts
    }

    pub fn n_nodes(&self) -> usize {
        self.grid.n_nodes()
    }

    /// The reference itself restricted to the grid.
    pub fn profile(&self) -> PolarProfile {
        let g = self.ghosts();
        let r = g..g + self.n_nodes();
        PolarProfile {
            psi: self.psi[r.clone()].to_vec(),
            beta: self.beta[r].to_vec(),
            minus: self.minus,
            plus: self.plus,
        }
    }
}

/// Reference profile with enough ghost nodes for the default stencil.
pub fn reference_profile(
    params: &Params,
    regime: &Regime,
    grid: &Grid,
    theta: SwitchingFunction,
) -> Result<ReferenceProfile> {
    let ghosts = crate::stencil::StencilOrder::default().radius();
    ReferenceProfile::build(params, regime, grid, theta, ghosts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::staticsol::{bloch_wall, transverse_wall};

    #[test]
    fn switching_function_properties() {
        let th = SwitchingFunction::default();
        assert_eq!(th.eval(-0.5), 0.0);
        assert_eq!(th.eval(0.0), 0.0);
        assert_eq!(th.eval(1.0), 1.0);
        assert_eq!(th.eval(3.0), 1.0);
        assert!((th.eval(0.5) - 0.5).abs() < 1e-15);
        // continuity of first and second derivatives at the joins
        for x in [0.0, 1.0] {
            assert!(th.derivative(x).abs() < 1e-15);
            assert!(th.second_derivative(x).abs() < 1e-15);
        }
        let e = 1e-6;
        for x in [0.1, 0.37, 0.8] {
            let fd1 = (th.eval(x + e) - th.eval(x - e)) / (2.0 * e);
            let fd2 = (th.derivative(x + e) - th.derivative(x - e)) / (2.0 * e);
            assert!((fd1 - th.derivative(x)).abs() < 1e-8);
            assert!((fd2 - th.second_derivative(x)).abs() < 1e-7);
        }
    }

    #[test]
    fn reference_at_base_points_is_static_wall() {
        let grid = Grid::default();
        let p = Params::new(0.0, 0.0, 0.0, 1.0, 0.1).unwrap();
        let r = reference_profile(&p, &Regime::Walker { k2: 1.0 }, &grid, Default::default())
            .unwrap();
        assert_eq!(r.profile(), bloch_wall(&grid));

        let p = Params::new(0.0, 0.0, 0.5, 0.0, 0.1).unwrap();
        let reg = Regime::Transverse { h2: 0.0, h3: 0.5 };
        let r = reference_profile(&p, &reg, &grid, Default::default()).unwrap();
        assert_eq!(r.profile(), transverse_wall(0.5, &r.grid).unwrap());
    }

    #[test]
    fn reference_limits_follow_the_equilibria() {
        let grid = Grid::default();
        let p = Params::new(0.0, 0.0, 0.6, 0.0, 0.1).unwrap();
        let reg = Regime::Transverse { h2: 0.0, h3: 0.5 };
        let r = reference_profile(&p, &reg, &grid, Default::default()).unwrap();
        let prof = r.profile();
        let n = prof.len();
        assert!((prof.beta[n - 1] - 0.6f64.asin()).abs() < 1e-6);
        assert!((0.6f64.asin() - 0.6435).abs() < 1e-4);
        assert!((prof.beta[0] - (std::f64::consts::PI - 0.6f64.asin())).abs() < 1e-6);
        assert!(prof.endpoint_mismatch() < 1e-6);
    }
}
