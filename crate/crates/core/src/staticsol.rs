//! The explicit static walls used as base points.
//!
//! * Bloch wall at `(0, 0, 0, K2)`: `m = (tanh xi, 0, sech xi)`, i.e.
//!   `psi = pi/2`, `beta = 2 atan(exp(-xi))`.
//! * Transverse wall at `(0, H2, H3, 0)`: in the frame where the transverse
//!   field points along `z`, `psi = pi/2` and `beta' = |H_perp| - sin beta`
//!   with `beta(0) = pi/2`. The potential is invariant under rotations about
//!   the easy axis when `K2 = 0`, so the general wall is that profile rotated
//!   about `x`.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::model::{align_branch, polar_from_unit, Grid, PolarPoint, PolarProfile, Regime, Vec3};

/// Far-field accuracy demanded of the integrated transverse tail.
pub const TAIL_TOL: f64 = 1e-8;
const SUBSTEPS: usize = 10;

pub fn bloch_beta(xi: f64) -> f64 {
    2.0 * (-xi).exp().atan()
}

/// `beta_W' = -sech xi`.
pub fn bloch_beta_prime(xi: f64) -> f64 {
    -1.0 / xi.cosh()
}

pub fn bloch_wall(grid: &Grid) -> PolarProfile {
    let n = grid.n_nodes();
    PolarProfile {
        psi: vec![FRAC_PI_2; n],
        beta: grid.nodes().into_iter().map(bloch_beta).collect(),
        minus: PolarPoint::new(FRAC_PI_2, PI),
        plus: PolarPoint::new(FRAC_PI_2, 0.0),
    }
}

pub fn transverse_wall(h3: f64, grid: &Grid) -> Result<PolarProfile> {
    if !(h3 > 0.0 && h3 < 1.0) {
        return Err(Error::InvalidField { h3 });
    }
    StaticWall::Transverse { h2: 0.0, h3 }
        .sample(grid, 0)
        .map(|s| s.profile())
}

/// Which explicit static profile to sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StaticWall {
    Bloch,
    Transverse { h2: f64, h3: f64 },
}

/// Samples of a static wall on the grid plus `ghosts` extra nodes each side,
/// with exact first derivatives.
#[derive(Clone, Debug)]
pub struct WallSamples {
    pub psi: Vec<f64>,
    pub beta: Vec<f64>,
    pub dpsi: Vec<f64>,
    pub dbeta: Vec<f64>,
    pub ghosts: usize,
    pub minus: PolarPoint,
    pub plus: PolarPoint,
}

impl WallSamples {
    pub fn n_nodes(&self) -> usize {
        self.psi.len() - 2 * self.ghosts
    }

    /// The on-grid part as a profile.
    pub fn profile(&self) -> PolarProfile {
        let r = self.ghosts..self.ghosts + self.n_nodes();
        PolarProfile {
            psi: self.psi[r.clone()].to_vec(),
            beta: self.beta[r].to_vec(),
            minus: self.minus,
            plus: self.plus,
        }
    }

    /// `beta'` at the on-grid nodes.
    pub fn dbeta_nodes(&self) -> &[f64] {
        &self.dbeta[self.ghosts..self.ghosts + self.n_nodes()]
    }

    pub fn dpsi_nodes(&self) -> &[f64] {
        &self.dpsi[self.ghosts..self.ghosts + self.n_nodes()]
    }
}

impl From<Regime> for StaticWall {
    fn from(r: Regime) -> Self {
        match r {
            Regime::Walker { .. } => StaticWall::Bloch,
            Regime::Transverse { h2, h3 } => StaticWall::Transverse { h2, h3 },
        }
    }
}

impl StaticWall {
    /// Half-width needed for the transverse tail to settle to `TAIL_TOL`,
    /// estimated from the linear decay rate `sqrt(1 - H^2)`. Zero for Bloch,
    /// whose samples are exact.
    pub fn suggested_half_width(&self) -> f64 {
        match *self {
            StaticWall::Bloch => 0.0,
            StaticWall::Transverse { h2, h3 } => {
                let hp = h2.hypot(h3);
                let rate = (1.0 - hp * hp).sqrt();
                // the tail amplitude prefactor is below 4 for |H| < 1
                (4.0 / TAIL_TOL).ln() / rate + 1.0
            }
        }
    }

    /// Smallest grid with the spacing of `grid` on which `sample` succeeds.
    pub fn fit_grid(&self, grid: &Grid) -> Grid {
        let mut g = *grid;
        loop {
            match self.sample(&g, 0) {
                Err(Error::DomainTooShort { required, .. }) => g = g.widened_to(required),
                _ => return g,
            }
        }
    }

    pub fn sample(&self, grid: &Grid, ghosts: usize) -> Result<WallSamples> {
        let n = grid.n_nodes() + 2 * ghosts;
        let xi: Vec<f64> = (0..n)
            .map(|k| grid.xi(k as isize - ghosts as isize))
            .collect();
        match *self {
            StaticWall::Bloch => Ok(WallSamples {
                psi: vec![FRAC_PI_2; n],
                beta: xi.iter().map(|&x| bloch_beta(x)).collect(),
                dpsi: vec![0.0; n],
                dbeta: xi.iter().map(|&x| bloch_beta_prime(x)).collect(),
                ghosts,
                minus: PolarPoint::new(FRAC_PI_2, PI),
                plus: PolarPoint::new(FRAC_PI_2, 0.0),
            }),
            StaticWall::Transverse { h2, h3 } => transverse_samples(h2, h3, grid, &xi, ghosts),
        }
    }
}

fn rk4_step(beta: f64, c: f64, dx: f64) -> f64 {
    let f = |b: f64| c - b.sin();
    let k1 = f(beta);
    let k2 = f(beta + 0.5 * dx * k1);
    let k3 = f(beta + 0.5 * dx * k2);
    let k4 = f(beta + dx * k3);
    beta + dx / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

fn transverse_samples(
    h2: f64,
    h3: f64,
    grid: &Grid,
    xi: &[f64],
    ghosts: usize,
) -> Result<WallSamples> {
    let hp = h2.hypot(h3);
    if !(hp > 0.0 && hp < 1.0) {
        return Err(Error::InvalidField { h3: hp });
    }
    let n = xi.len();
    let centre = (n - 1) / 2;
    let dx = grid.spacing() / SUBSTEPS as f64;

    // rotated-frame azimuth, integrated outward from the normalisation point
    let mut b = vec![0.0; n];
    b[centre] = FRAC_PI_2;
    for k in centre + 1..n {
        let mut v = b[k - 1];
        for _ in 0..SUBSTEPS {
            v = rk4_step(v, hp, dx);
        }
        b[k] = v;
    }
    for k in (0..centre).rev() {
        let mut v = b[k + 1];
        for _ in 0..SUBSTEPS {
            v = rk4_step(v, hp, -dx);
        }
        b[k] = v;
    }

    let b_plus = hp.asin();
    let b_minus = PI - b_plus;
    let (first, last) = (ghosts, ghosts + grid.n_nodes() - 1);
    let tail = (b[first] - b_minus).abs().max((b[last] - b_plus).abs());
    if !(tail < TAIL_TOL) {
        let rate = (1.0 - hp * hp).sqrt();
        let extra = (tail / TAIL_TOL).ln().max(0.0) / rate + 1.0;
        return Err(Error::DomainTooShort {
            required: grid.half_width() + extra,
            half_width: grid.half_width(),
        });
    }

    // rotation about x taking z onto the field direction (0, h2, h3)/hp
    let (s, c) = (-h2 / hp, h3 / hp);
    let rotate = |bb: f64| Vec3::new(bb.cos(), -s * bb.sin(), c * bb.sin());
    let mut psi = Vec::with_capacity(n);
    let mut beta: Vec<f64> = Vec::with_capacity(n);
    let mut dpsi = Vec::with_capacity(n);
    let mut dbeta = Vec::with_capacity(n);
    for &bb in &b {
        if h2 == 0.0 && h3 > 0.0 {
            // unrotated frame: exact samples
            psi.push(FRAC_PI_2);
            beta.push(bb);
            dpsi.push(0.0);
            dbeta.push(hp - bb.sin());
            continue;
        }
        let m = rotate(bb);
        let db = hp - bb.sin();
        let dm = Vec3::new(-bb.sin(), -s * bb.cos(), c * bb.cos()) * db;
        let pp = polar_from_unit(&m);
        psi.push(pp.psi);
        beta.push(pp.beta);
        let rho2 = m.x * m.x + m.z * m.z;
        dpsi.push(-dm.y / rho2.sqrt());
        dbeta.push((m.x * dm.z - m.z * dm.x) / rho2);
    }
    // continuous azimuth, anchored at the centre on the principal branch
    for k in centre + 1..n {
        beta[k] = align_branch(beta[k], beta[k - 1]);
    }
    for k in (0..centre).rev() {
        beta[k] = align_branch(beta[k], beta[k + 1]);
    }
    let (minus, plus) = if h2 == 0.0 && h3 > 0.0 {
        (PolarPoint::new(FRAC_PI_2, b_minus), PolarPoint::new(FRAC_PI_2, b_plus))
    } else {
        (polar_from_unit(&rotate(b_minus)), polar_from_unit(&rotate(b_plus)))
    };
    Ok(WallSamples {
        minus: PolarPoint::new(minus.psi, align_branch(minus.beta, beta[0])),
        plus: PolarPoint::new(plus.psi, align_branch(plus.beta, beta[n - 1])),
        psi,
        beta,
        dpsi,
        dbeta,
        ghosts,
    })
}

/// The static profile a regime is anchored to, on `grid` (which must be wide
/// enough; see [`StaticWall::fit_grid`]).
pub fn static_profile(regime: &Regime, grid: &Grid) -> Result<PolarProfile> {
    regime.check()?;
    StaticWall::from(*regime).sample(grid, 0).map(|s| s.profile())
}
