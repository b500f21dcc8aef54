//! Schrödinger operators `-d^2/dxi^2 + W(xi)` from the linearisation about
//! the static walls, and numerical checks of their spectra.
//!
//! * `L`: `W = cos 2 beta_W = 1 - 2 sech^2 xi` (Bloch wall).
//! * `M`: `W = cos 2 beta_T + H3 sin beta_T`, for which `M beta_T' = 0`.
//! * `N`: `W = cos 2 beta_T + 3 H3 sin beta_T - H3^2`.
//!
//! Discretisation is the three-point Laplacian on interior nodes with
//! Dirichlet ends.

pub mod tridiag;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Grid;
use crate::staticsol::StaticWall;

#[derive(Clone, Debug, PartialEq)]
pub struct SchrodingerOp {
    pub grid: Grid,
    /// `W` at every node (the end samples only enter through the limits).
    pub potential: Vec<f64>,
}

impl SchrodingerOp {
    pub fn new(grid: Grid, potential: Vec<f64>) -> Result<Self> {
        if potential.len() != grid.n_nodes() {
            return Err(Error::InvalidProfile(format!(
                "potential has {} samples, grid has {} nodes",
                potential.len(),
                grid.n_nodes()
            )));
        }
        if potential.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidProfile("potential must be finite".into()));
        }
        Ok(SchrodingerOp { grid, potential })
    }

    /// `self + c`, e.g. `L + K2`.
    pub fn shifted(&self, c: f64) -> SchrodingerOp {
        SchrodingerOp {
            grid: self.grid,
            potential: self.potential.iter().map(|w| w + c).collect(),
        }
    }

    /// Number of interior nodes, the matrix dimension.
    pub fn dim(&self) -> usize {
        self.grid.n_nodes() - 2
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let h = self.grid.spacing();
        self.potential[1..self.grid.n_nodes() - 1]
            .iter()
            .map(|w| 2.0 / (h * h) + w)
            .collect()
    }

    pub fn off_diagonal(&self) -> Vec<f64> {
        let h = self.grid.spacing();
        vec![-1.0 / (h * h); self.dim().saturating_sub(1)]
    }

    /// Matrix-vector product on interior samples.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let d = self.diagonal();
        let e = -1.0 / self.grid.spacing().powi(2);
        let n = v.len();
        (0..n)
            .map(|i| {
                let mut s = d[i] * v[i];
                if i > 0 {
                    s += e * v[i - 1];
                }
                if i + 1 < n {
                    s += e * v[i + 1];
                }
                s
            })
            .collect()
    }

    pub fn rayleigh_quotient(&self, v: &[f64]) -> f64 {
        let av = self.apply(v);
        let num: f64 = v.iter().zip(&av).map(|(a, b)| a * b).sum();
        let den: f64 = v.iter().map(|a| a * a).sum();
        num / den
    }

    /// Potential limits `(W(-L), W(+L))`.
    pub fn limits(&self) -> (f64, f64) {
        (self.potential[0], *self.potential.last().unwrap())
    }

    /// Interior node coordinates, matching eigenvector entries.
    pub fn interior_nodes(&self) -> Vec<f64> {
        (1..self.grid.n_nodes() - 1)
            .map(|i| self.grid.xi(i as isize))
            .collect()
    }
}

/// `L = -d^2 + 1 - 2 sech^2`.
pub fn potential_l(grid: &Grid) -> SchrodingerOp {
    let w = grid
        .nodes()
        .into_iter()
        .map(|x| 1.0 - 2.0 / x.cosh().powi(2))
        .collect();
    SchrodingerOp {
        grid: *grid,
        potential: w,
    }
}

fn transverse_beta(h3: f64, grid: &Grid) -> Result<(Grid, Vec<f64>)> {
    if !(h3 > 0.0 && h3 < 1.0) {
        return Err(Error::InvalidField { h3 });
    }
    let wall = StaticWall::Transverse { h2: 0.0, h3 };
    let grid = wall.fit_grid(grid);
    Ok((grid, wall.sample(&grid, 0)?.beta))
}

/// `M` about the transverse wall; the grid is widened at fixed spacing if the
/// wall's tail needs it.
pub fn potential_m(h3: f64, grid: &Grid) -> Result<SchrodingerOp> {
    let (grid, beta) = transverse_beta(h3, grid)?;
    let w = beta
        .iter()
        .map(|b| (2.0 * b).cos() + h3 * b.sin())
        .collect();
    SchrodingerOp::new(grid, w)
}

pub fn potential_n(h3: f64, grid: &Grid) -> Result<SchrodingerOp> {
    let (grid, beta) = transverse_beta(h3, grid)?;
    let w = beta
        .iter()
        .map(|b| (2.0 * b).cos() + 3.0 * h3 * b.sin() - h3 * h3)
        .collect();
    SchrodingerOp::new(grid, w)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Eigenpair {
    pub value: f64,
    /// Unit vector on the interior nodes, largest entry positive.
    pub vector: Vec<f64>,
}

pub fn lowest_eigenpairs(op: &SchrodingerOp, k: usize) -> Vec<Eigenpair> {
    tridiag::lowest_eigenpairs(&op.diagonal(), &op.off_diagonal(), k.max(1))
        .into_iter()
        .map(|(value, vector)| Eigenpair { value, vector })
        .collect()
}

/// Cosine of the angle between two sample vectors.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let aa: f64 = a.iter().map(|x| x * x).sum();
    let bb: f64 = b.iter().map(|x| x * x).sum();
    ab / (aa * bb).sqrt()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RayleighReport {
    pub trials: usize,
    pub bound: f64,
    pub min_quotient: f64,
    pub mean_quotient: f64,
    /// Cosine between the minimising trial function and the ground state.
    pub min_ground_cosine: f64,
}

impl RayleighReport {
    pub fn holds(&self, tolerance: f64) -> bool {
        self.min_quotient >= self.bound - tolerance
    }
}

fn bump(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (-1.0 / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

/// Rayleigh quotients of `trials` random smooth compactly supported functions
/// (sums of up to four `exp(-1/(1-t^2))` bumps inside the domain).
pub fn rayleigh_bound_check(op: &SchrodingerOp, bound: f64, trials: usize, seed: u64) -> RayleighReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs = op.interior_nodes();
    let half = op.grid.half_width();
    let ground = lowest_eigenpairs(op, 1).remove(0).vector;
    let mut min_q = f64::INFINITY;
    let mut min_cos = 0.0;
    let mut sum = 0.0;
    let mut done = 0;
    while done < trials {
        let terms = rng.gen_range(1..=4);
        let mut phi = vec![0.0; xs.len()];
        for _ in 0..terms {
            let width = rng.gen_range(0.5..(0.5 * half).max(0.6));
            let centre = rng.gen_range(-(half - width)..(half - width));
            let c = rng.gen_range(-1.0..1.0);
            for (p, &x) in phi.iter_mut().zip(&xs) {
                *p += c * bump((x - centre) / width);
            }
        }
        if phi.iter().all(|v| v.abs() < 1e-12) {
            continue;
        }
        let q = op.rayleigh_quotient(&phi);
        sum += q;
        if q < min_q {
            min_q = q;
            min_cos = cosine(&phi, &ground).abs();
        }
        done += 1;
    }
    RayleighReport {
        trials,
        bound,
        min_quotient: min_q,
        mean_quotient: sum / trials.max(1) as f64,
        min_ground_cosine: min_cos,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EssentialFloor {
    /// Lowest eigenvalue among the two sub-operators on `xi < -L/2` and
    /// `xi > L/2`, each with Dirichlet ends.
    pub outer_lowest: f64,
    /// `min(W-, W+)`.
    pub limit: f64,
}

pub fn essential_floor(op: &SchrodingerOp) -> EssentialFloor {
    let d = op.diagonal();
    let e = op.off_diagonal();
    let xs = op.interior_nodes();
    let half = 0.5 * op.grid.half_width();
    let left: Vec<usize> = (0..xs.len()).filter(|&i| xs[i] < -half).collect();
    let right: Vec<usize> = (0..xs.len()).filter(|&i| xs[i] > half).collect();
    let lowest = |idx: &[usize]| {
        let dd: Vec<f64> = idx.iter().map(|&i| d[i]).collect();
        let ee = &e[..idx.len().saturating_sub(1)];
        tridiag::eigenvalue(&dd, ee, 0)
    };
    let (wl, wr) = op.limits();
    EssentialFloor {
        outer_lowest: lowest(&left).min(lowest(&right)),
        limit: wl.min(wr),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::staticsol::bloch_beta;

    #[test]
    fn l_potential_examples() {
        let g = Grid::default();
        let op = potential_l(&g);
        assert_eq!(op.potential[400], -1.0);
        let (wl, wr) = op.limits();
        assert!((wl - 1.0).abs() < 1e-8 && (wr - 1.0).abs() < 1e-8);
        for (i, x) in g.nodes().into_iter().enumerate() {
            let via_beta = (2.0 * bloch_beta(x)).cos();
            assert!((via_beta - op.potential[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn l_kernel_and_gap() {
        let op = potential_l(&Grid::default());
        let pairs = lowest_eigenpairs(&op, 2);
        assert!(pairs[0].value.abs() < 1e-4, "{}", pairs[0].value);
        let sech: Vec<f64> = op.interior_nodes().iter().map(|x| 1.0 / x.cosh()).collect();
        assert!(cosine(&pairs[0].vector, &sech) > 0.999);
        assert!(pairs[1].value >= 0.2);
        let shifted = lowest_eigenpairs(&op.shifted(1.0), 1);
        assert!((shifted[0].value - 1.0).abs() < 1e-4);
    }

    #[test]
    fn m_and_n_operators() {
        let g = Grid::default();
        let m = potential_m(0.5, &g).unwrap();
        let n = potential_n(0.5, &g).unwrap();
        let l0 = lowest_eigenpairs(&m, 2);
        assert!(l0[0].value.abs() < 1e-3);
        assert!(l0[1].value > l0[0].value + 0.2);
        let n0 = lowest_eigenpairs(&n, 1)[0].value;
        assert!(n0 >= 0.25 - 1e-4, "{n0}");
        let (wl, wr) = n.limits();
        assert!((wl - 1.0).abs() < 1e-6 && (wr - 1.0).abs() < 1e-6);
        let (ml, mr) = m.limits();
        assert!((ml - 0.75).abs() < 1e-6 && (mr - 0.75).abs() < 1e-6);
        assert!(matches!(potential_m(1.0, &g), Err(Error::InvalidField { .. })));
    }

    #[test]
    fn m_tends_to_l_for_small_field() {
        let g = Grid::default();
        let m = potential_m(1e-9, &g).unwrap();
        let l = potential_l(&g);
        for (a, b) in m.potential.iter().zip(&l.potential) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn n_matches_ratio_form_away_from_centre() {
        let g = Grid::default();
        let h3 = 0.5;
        let wall = StaticWall::Transverse { h2: 0.0, h3 };
        let grid = wall.fit_grid(&g);
        let beta = wall.sample(&grid, 0).unwrap().beta;
        let n = potential_n(h3, &g).unwrap();
        let h = grid.spacing();
        let mut worst: f64 = 0.0;
        for i in 1..beta.len() - 1 {
            let c = beta[i].cos();
            if c.abs() <= 0.1 {
                continue;
            }
            let d2 = (beta[i + 1].cos() - 2.0 * c + beta[i - 1].cos()) / (h * h);
            worst = worst.max((n.potential[i] - (d2 / c + 1.0)).abs());
        }
        assert!(worst < 10.0 * h * h, "{worst}");
    }

    #[test]
    fn rayleigh_checks() {
        let g = Grid::default();
        let l1 = potential_l(&g).shifted(1.0);
        let r = rayleigh_bound_check(&l1, 1.0, 200, 7);
        assert!(r.holds(1e-6), "{r:?}");
        let n = potential_n(0.75, &g).unwrap();
        let r = rayleigh_bound_check(&n, 0.5625, 200, 8);
        assert!(r.holds(1e-6), "{r:?}");
        let m = potential_m(0.5, &g).unwrap();
        let r = rayleigh_bound_check(&m, 0.0, 200, 9);
        assert!(r.holds(1e-6), "{r:?}");
    }

    #[test]
    fn essential_floor_is_near_the_limits() {
        let op = potential_l(&Grid::default());
        let f = essential_floor(&op);
        assert!(f.outer_lowest > f.limit);
        // box ground state on a half-line piece of length L/2
        assert!(f.outer_lowest - f.limit < 0.1);
    }
}
