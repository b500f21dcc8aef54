//! The linearisation of the travelling-wave map at a static wall, acting on
//! `(f1, f2, mu)` (perturbations of `psi`, `beta` and the speed):
//!
//! ```text
//! Walker:     (-L f2 + alpha mu b',  -(L + K2) f1 - mu b',  <b', f2>)
//! Transverse: (-M f2 + alpha mu b',  -N f1 - mu b',         <b', f2>)
//! ```
//!
//! with `b'` the derivative of the static azimuth.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{Grid, Regime};
use crate::spectral::{potential_l, potential_m, potential_n, SchrodingerOp};
use crate::staticsol::StaticWall;

#[derive(Clone, Debug)]
pub struct LinearizedOperator {
    pub regime: Regime,
    pub alpha: f64,
    /// Operator acting on `f2` in the first block (`L` or `M`).
    pub first: SchrodingerOp,
    /// Operator acting on `f1` in the second block (`L + K2` or `N`).
    pub second: SchrodingerOp,
    /// `b'` at interior nodes.
    pub dbeta: Vec<f64>,
}

pub fn linearized_operator(regime: &Regime, alpha: f64, grid: &Grid) -> Result<LinearizedOperator> {
    regime.check()?;
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParams(format!("alpha must be > 0 (got {alpha})")));
    }
    let (first, second) = match *regime {
        Regime::Walker { k2 } => {
            let l = potential_l(grid);
            let lk = l.shifted(k2);
            (l, lk)
        }
        Regime::Transverse { h2, h3 } => {
            if h2 != 0.0 || h3 <= 0.0 {
                return Err(Error::InvalidRegime(format!(
                    "linearised operator is assembled in the frame H2 = 0, H3 > 0 \
                     (got H2 = {h2}, H3 = {h3}); rotate the field about x first"
                )));
            }
            (potential_m(h3, grid)?, potential_n(h3, grid)?)
        }
    };
    let g = first.grid;
    let samples = StaticWall::from(*regime).sample(&g, 0)?;
    let n = g.n_nodes();
    Ok(LinearizedOperator {
        regime: *regime,
        alpha,
        first,
        second,
        dbeta: samples.dbeta[1..n - 1].to_vec(),
    })
}

impl LinearizedOperator {
    pub fn grid(&self) -> Grid {
        self.first.grid
    }

    /// Number of interior nodes per block.
    pub fn block_dim(&self) -> usize {
        self.dbeta.len()
    }

    pub fn apply(&self, f1: &[f64], f2: &[f64], mu: f64) -> (Vec<f64>, Vec<f64>, f64) {
        let a = self.first.apply(f2);
        let b = self.second.apply(f1);
        let r1 = a
            .iter()
            .zip(&self.dbeta)
            .map(|(x, d)| -x + self.alpha * mu * d)
            .collect();
        let r2 = b.iter().zip(&self.dbeta).map(|(x, d)| -x - mu * d).collect();
        let h = self.grid().spacing();
        let r3 = h * f2.iter().zip(&self.dbeta).map(|(x, d)| x * d).sum::<f64>();
        (r1, r2, r3)
    }

    /// Dense matrix in `L^2`-balanced form: block rows and columns scaled by
    /// `sqrt(h)` so that singular values approximate those of the continuum
    /// operator on `L^2 x L^2 x R`. Unknown order is `(f1, f2, mu)`.
    pub fn balanced_matrix(&self) -> DMatrix<f64> {
        let n = self.block_dim();
        let h = self.grid().spacing();
        let sh = h.sqrt();
        let mut m = DMatrix::zeros(2 * n + 1, 2 * n + 1);
        let fill = |m: &mut DMatrix<f64>, op: &SchrodingerOp, row0: usize, col0: usize| {
            let d = op.diagonal();
            let e = -1.0 / (h * h);
            for i in 0..n {
                m[(row0 + i, col0 + i)] = -d[i];
                if i + 1 < n {
                    m[(row0 + i, col0 + i + 1)] = -e;
                    m[(row0 + i + 1, col0 + i)] = -e;
                }
            }
        };
        fill(&mut m, &self.first, 0, n);
        fill(&mut m, &self.second, n, 0);
        for i in 0..n {
            m[(i, 2 * n)] = sh * self.alpha * self.dbeta[i];
            m[(n + i, 2 * n)] = -sh * self.dbeta[i];
            m[(2 * n, n + i)] = sh * self.dbeta[i];
        }
        m
    }

    pub fn smallest_singular_value(&self) -> f64 {
        self.balanced_matrix()
            .singular_values()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}
