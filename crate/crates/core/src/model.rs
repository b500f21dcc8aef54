//! Core domain types: parameters, regimes, grids and magnetization profiles.
//!
//! Magnetization directions are parametrised by polar coordinates `(psi, beta)`
//! with the polar axis along the hard axis `y`:
//!
//! ```text
//! m(psi, beta) = (sin psi cos beta, cos psi, sin psi sin beta)
//! ```
//!
//! Domain-wall profiles never come close to the hard axis, so `psi` stays in
//! the open interval `(0, pi)` and the representation is regular. Azimuths are
//! stored unwrapped: `beta` is continuous along the wire rather than reduced
//! modulo `2 pi`.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stencil::StencilOrder;

pub type Vec3 = Vector3<f64>;

/// Physical parameters: applied field `(h1, h2, h3)`, hard-axis anisotropy
/// `k2` and Gilbert damping `alpha`.
///
/// The first four components form the parameter vector `(H1, H2, H3, K2)`
/// that continuation moves through; damping is held fixed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
    pub k2: f64,
    pub alpha: f64,
}

impl Params {
    pub fn new(h1: f64, h2: f64, h3: f64, k2: f64, alpha: f64) -> Result<Self> {
        let p = Params {
            h1,
            h2,
            h3,
            k2,
            alpha,
        };
        p.check()?;
        Ok(p)
    }

    /// Checks the standalone invariants: finite entries, `k2 >= 0`, `alpha > 0`.
    pub fn check(&self) -> Result<()> {
        let all = [self.h1, self.h2, self.h3, self.k2, self.alpha];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "all of H1, H2, H3, K2, alpha must be finite (got {self:?})"
            )));
        }
        if self.k2 < 0.0 {
            return Err(Error::InvalidParams(format!(
                "K2 must be >= 0 (got {})",
                self.k2
            )));
        }
        if self.alpha <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "alpha must be > 0 (got {})",
                self.alpha
            )));
        }
        Ok(())
    }

    pub fn applied_field(&self) -> Vec3 {
        Vec3::new(self.h1, self.h2, self.h3)
    }

    pub fn lambda(&self) -> [f64; 4] {
        [self.h1, self.h2, self.h3, self.k2]
    }

    pub fn with_lambda(&self, lambda: [f64; 4]) -> Params {
        Params {
            h1: lambda[0],
            h2: lambda[1],
            h3: lambda[2],
            k2: lambda[3],
            alpha: self.alpha,
        }
    }

    /// Euclidean distance between the parameter vectors (damping excluded).
    pub fn lambda_distance(&self, other: &Params) -> f64 {
        self.lambda()
            .iter()
            .zip(other.lambda())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_degenerate(&self) -> bool {
        self.k2 == 0.0 && self.h2 == 0.0 && self.h3 == 0.0
    }
}

/// Which explicit static wall a computation is anchored to.
///
/// `Walker` is the zero-field biaxial point `(0, 0, 0, k2)` whose static
/// profile is the Bloch wall; `Transverse` is the uniaxial point
/// `(0, h2, h3, 0)` with a transverse field of magnitude below one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Regime {
    Walker { k2: f64 },
    Transverse { h2: f64, h3: f64 },
}

impl Regime {
    pub fn check(&self) -> Result<()> {
        match *self {
            Regime::Walker { k2 } => {
                if !(k2.is_finite() && k2 > 0.0) {
                    return Err(Error::InvalidRegime(format!(
                        "Walker regime requires K2 > 0 (got {k2})"
                    )));
                }
            }
            Regime::Transverse { h2, h3 } => {
                let t = h2 * h2 + h3 * h3;
                if !(t.is_finite() && t > 0.0 && t < 1.0) {
                    return Err(Error::InvalidRegime(format!(
                        "Transverse regime requires 0 < H2^2 + H3^2 < 1 (got {t})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The static parameter point of this regime, with the given damping.
    pub fn base_params(&self, alpha: f64) -> Params {
        match *self {
            Regime::Walker { k2 } => Params {
                h1: 0.0,
                h2: 0.0,
                h3: 0.0,
                k2,
                alpha,
            },
            Regime::Transverse { h2, h3 } => Params {
                h1: 0.0,
                h2,
                h3,
                k2: 0.0,
                alpha,
            },
        }
    }

    /// Picks the base point closest to `params`: either `(0,0,0,K2)` or
    /// `(0,H2,H3,0)`, whichever is valid and nearer in parameter space.
    pub fn nearest(params: &Params) -> Result<Regime> {
        if params.is_degenerate() {
            return Err(Error::DegenerateRegime);
        }
        let walker = Regime::Walker { k2: params.k2 };
        let transverse = Regime::Transverse {
            h2: params.h2,
            h3: params.h3,
        };
        let candidates = [walker, transverse];
        candidates
            .iter()
            .filter(|r| r.check().is_ok())
            .map(|r| (r.base_params(params.alpha).lambda_distance(params), *r))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, r)| r)
            .ok_or_else(|| {
                Error::InvalidRegime(format!(
                    "no valid base point near {:?}: need K2 > 0 or 0 < H2^2 + H3^2 < 1",
                    params.lambda()
                ))
            })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Regime::Walker { .. } => "walker",
            Regime::Transverse { .. } => "transverse",
        }
    }
}

/// Checks `params` and `regime` before a computation.
///
/// The regime's own base point must be valid; the target parameters only
/// need to be finite with `K2 >= 0` and `alpha > 0`, except that the fully
/// degenerate point `K2 = H2 = H3 = 0` is rejected.
pub fn validate(params: &Params, regime: &Regime) -> Result<()> {
    if params.is_degenerate() {
        return Err(Error::DegenerateRegime);
    }
    params.check()?;
    regime.check()
}

/// Uniform symmetric mesh on `[-half_width, half_width]` with an odd number
/// of nodes, so that `xi = 0` is a node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    half_width: f64,
    n_nodes: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            half_width: 20.0,
            n_nodes: 801,
        }
    }
}

impl Grid {
    pub fn new(half_width: f64, n_nodes: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half_width must be finite and > 0 (got {half_width})"
            )));
        }
        if n_nodes < 3 || n_nodes % 2 == 0 {
            return Err(Error::InvalidGrid(format!(
                "n_nodes must be odd and >= 3 so that xi = 0 is a node (got {n_nodes})"
            )));
        }
        Ok(Grid {
            half_width,
            n_nodes,
        })
    }

    /// Grid with spacing `h` covering at least `[-half_width, half_width]`.
    pub fn with_spacing(half_width: f64, h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing must be > 0 (got {h})")));
        }
        let cells_per_side = (half_width / h - 1e-9).ceil().max(1.0) as usize;
        Grid::new(cells_per_side as f64 * h, 2 * cells_per_side + 1)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.n_nodes - 1) as f64
    }

    fn centre(&self) -> usize {
        (self.n_nodes - 1) / 2
    }

    /// Coordinate of node `i`. Indices outside `0..n_nodes` address ghost
    /// nodes continuing the uniform spacing.
    pub fn xi(&self, i: isize) -> f64 {
        let c = self.centre() as isize;
        ((i - c) as f64 / c as f64) * self.half_width
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes as isize).map(|i| self.xi(i)).collect()
    }

    /// Same domain, half the spacing.
    pub fn refined(&self) -> Grid {
        Grid {
            half_width: self.half_width,
            n_nodes: 2 * self.n_nodes - 1,
        }
    }

    /// Same spacing, domain enlarged to cover at least `half_width`.
    pub fn widened_to(&self, half_width: f64) -> Grid {
        if half_width <= self.half_width {
            return *self;
        }
        Grid::with_spacing(half_width, self.spacing()).expect("spacing of a valid grid is positive")
    }

    /// Trapezoidal quadrature of node samples.
    pub fn trapezoid(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.n_nodes);
        let n = f.len();
        let inner: f64 = f[1..n - 1].iter().sum();
        self.spacing() * (inner + 0.5 * (f[0] + f[n - 1]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarPoint {
    pub psi: f64,
    pub beta: f64,
}

impl PolarPoint {
    pub fn new(psi: f64, beta: f64) -> Self {
        PolarPoint { psi, beta }
    }

    pub fn to_unit(&self) -> Vec3 {
        unit_from_polar(self.psi, self.beta)
    }
}

pub fn unit_from_polar(psi: f64, beta: f64) -> Vec3 {
    let (sp, cp) = psi.sin_cos();
    let (sb, cb) = beta.sin_cos();
    Vec3::new(sp * cb, cp, sp * sb)
}

/// Polar angles of a unit vector, `beta` in `(-pi, pi]`.
pub fn polar_from_unit(m: &Vec3) -> PolarPoint {
    let psi = m.x.hypot(m.z).atan2(m.y);
    let beta = m.z.atan2(m.x);
    PolarPoint { psi, beta }
}

/// Shifts `beta` by a multiple of `2 pi` so that it lies within `pi` of `near`.
pub fn align_branch(beta: f64, near: f64) -> f64 {
    beta - 2.0 * PI * ((beta - near) / (2.0 * PI)).round()
}

/// Sampled polar angles with the far-field states they connect.
///
/// `minus` is the state at `xi -> -infinity`, `plus` the one at `+infinity`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarProfile {
    pub psi: Vec<f64>,
    pub beta: Vec<f64>,
    pub minus: PolarPoint,
    pub plus: PolarPoint,
}

impl PolarProfile {
    pub fn new(psi: Vec<f64>, beta: Vec<f64>, minus: PolarPoint, plus: PolarPoint) -> Result<Self> {
        if psi.len() != beta.len() {
            return Err(Error::InvalidProfile(format!(
                "psi has {} samples but beta has {}",
                psi.len(),
                beta.len()
            )));
        }
        check_psi_range(&psi)?;
        Ok(PolarProfile {
            psi,
            beta,
            minus,
            plus,
        })
    }

    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    /// Largest distance between an endpoint sample and its far-field state.
    pub fn endpoint_mismatch(&self) -> f64 {
        let n = self.len();
        [
            (self.psi[0] - self.minus.psi).abs(),
            (self.beta[0] - self.minus.beta).abs(),
            (self.psi[n - 1] - self.plus.psi).abs(),
            (self.beta[n - 1] - self.plus.beta).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub(crate) fn check_psi_range(psi: &[f64]) -> Result<()> {
    if let Some((index, &psi)) = psi
        .iter()
        .enumerate()
        .find(|(_, p)| !(**p > 0.0 && **p < PI))
    {
        return Err(Error::PolarSingularity { index, psi });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CartesianProfile {
    pub m: Vec<Vec3>,
}

impl CartesianProfile {
    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn max_unit_deviation(&self) -> f64 {
        self.m
            .iter()
            .map(|v| (v.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn component(&self, k: usize) -> Vec<f64> {
        self.m.iter().map(|v| v[k]).collect()
    }
}

pub fn to_cartesian(p: &PolarProfile) -> CartesianProfile {
    CartesianProfile {
        m: p
            .psi
            .iter()
            .zip(&p.beta)
            .map(|(&psi, &beta)| unit_from_polar(psi, beta))
            .collect(),
    }
}

/// Polar extraction with `beta` unwrapped along the profile, starting on the
/// branch nearest `beta_start`.
pub fn to_polar(
    c: &CartesianProfile,
    beta_start: f64,
    minus: PolarPoint,
    plus: PolarPoint,
) -> Result<PolarProfile> {
    let mut psi = Vec::with_capacity(c.len());
    let mut beta = Vec::with_capacity(c.len());
    let mut prev = beta_start;
    for m in &c.m {
        let pp = polar_from_unit(m);
        let b = align_branch(pp.beta, prev);
        psi.push(pp.psi);
        beta.push(b);
        prev = b;
    }
    PolarProfile::new(psi, beta, minus, plus)
}

/// A converged travelling wave.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TWSolution {
    pub profile: PolarProfile,
    pub velocity: f64,
    pub params: Params,
    pub residual_norm: f64,
    pub grid: Grid,
    pub regime: Regime,
    pub stencil: StencilOrder,
    pub iterations: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: Vec3, b: Vec3) -> bool {
        (a - b).norm() < 1e-15
    }

    #[test]
    fn axis_cases() {
        assert!(close(unit_from_polar(FRAC_PI_2, 0.0), Vec3::new(1.0, 0.0, 0.0)));
        assert!(close(
            unit_from_polar(FRAC_PI_2, FRAC_PI_2),
            Vec3::new(0.0, 0.0, 1.0)
        ));
        // centre of the Bloch wall: (tanh 0, 0, sech 0)
        let m = unit_from_polar(FRAC_PI_2, 2.0 * 1f64.atan());
        assert!(close(m, Vec3::new(0.0, 0.0, 1.0)));
    }

    #[test]
    fn validate_regimes() {
        let p = Params::new(0.0, 0.0, 0.0, 1.0, 0.1).unwrap();
        assert!(validate(&p, &Regime::Walker { k2: 1.0 }).is_ok());
        let p = Params::new(0.0, 0.0, 0.5, 0.0, 0.1).unwrap();
        assert!(validate(&p, &Regime::Transverse { h2: 0.0, h3: 0.5 }).is_ok());
        let p = Params::new(0.0, 0.0, 0.0, 0.0, 0.1).unwrap();
        assert!(matches!(
            validate(&p, &Regime::Walker { k2: 1.0 }),
            Err(Error::DegenerateRegime)
        ));
        assert!(matches!(
            Regime::nearest(&p),
            Err(Error::DegenerateRegime)
        ));
    }

    #[test]
    fn invalid_regime_bases() {
        assert!(Regime::Walker { k2: 0.0 }.check().is_err());
        assert!(Regime::Transverse { h2: 0.0, h3: 1.0 }.check().is_err());
        assert!(Regime::Transverse { h2: 0.0, h3: 0.0 }.check().is_err());
        assert!(Params::new(0.0, 0.0, 0.0, -1.0, 0.1).is_err());
        assert!(Params::new(0.0, 0.0, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn nearest_regime_picks_closer_base() {
        let p = Params::new(0.01, 0.0, 0.02, 1.0, 0.1).unwrap();
        assert_eq!(Regime::nearest(&p).unwrap(), Regime::Walker { k2: 1.0 });
        let p = Params::new(0.0, 0.0, 0.5, 0.01, 0.1).unwrap();
        assert_eq!(
            Regime::nearest(&p).unwrap(),
            Regime::Transverse { h2: 0.0, h3: 0.5 }
        );
    }

    #[test]
    fn grid_invariants() {
        let g = Grid::default();
        assert!((g.spacing() - 0.05).abs() < 1e-15);
        assert_eq!(g.xi(400), 0.0);
        assert!(Grid::new(20.0, 800).is_err());
        assert!(Grid::new(20.0, 1).is_err());
        assert!(Grid::new(-1.0, 11).is_err());
        let r = g.refined();
        assert_eq!(r.n_nodes(), 1601);
        assert!((r.spacing() - 0.025).abs() < 1e-15);
        let w = g.widened_to(27.01);
        assert!((w.spacing() - 0.05).abs() < 1e-12);
        assert!(w.half_width() >= 27.01);
    }

    #[test]
    fn psi_guard_errors() {
        let r = PolarProfile::new(
            vec![FRAC_PI_2, 0.0],
            vec![0.0, 0.0],
            PolarPoint::new(FRAC_PI_2, PI),
            PolarPoint::new(FRAC_PI_2, 0.0),
        );
        assert!(matches!(r, Err(Error::PolarSingularity { index: 1, .. })));
    }

    proptest! {
        #[test]
        fn grid_is_symmetric(n2 in 1usize..2000, half in 0.1f64..100.0) {
            let g = Grid::new(half, 2 * n2 + 1).unwrap();
            let n = g.n_nodes();
            for i in 0..n {
                prop_assert_eq!(g.xi(i as isize), -g.xi((n - 1 - i) as isize));
            }
        }

        #[test]
        fn polar_round_trip(psi in 1e-3f64..(PI - 1e-3), beta in -10.0f64..10.0) {
            let m = unit_from_polar(psi, beta);
            prop_assert!((m.norm() - 1.0).abs() < 1e-15);
            let back = polar_from_unit(&m);
            prop_assert!((back.psi - psi).abs() < 1e-12);
            prop_assert!((align_branch(back.beta, beta) - beta).abs() < 1e-12);
        }
    }
}
