//! Anisotropy/Zeeman potential, micromagnetic energy, effective field,
//! torques and the two boundary equilibria.
//!
//! The potential is
//!
//! ```text
//! U(m) = 1/2 (1 - m1^2 + K2 m2^2 - 2 H.m)
//! ```
//!
//! and torques are its derivatives along the polar frame
//! `n = dm/da = (cos a cos b, -sin a, cos a sin b)`, `p = m x n = (sin b, 0, -cos b)`:
//! `F1 = -p.grad U`, `F2 = n.grad U`. In angle form `F2 = dU/da` and
//! `sin a * F1 = dU/db`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    align_branch, polar_from_unit, to_cartesian, unit_from_polar, Grid, Params, PolarPoint,
    PolarProfile, Vec3,
};

const UNIT_TOL: f64 = 1e-9;
/// Equilibria are polished until both torques are below this.
pub const EQUILIBRIUM_TOL: f64 = 1e-12;

pub fn potential(m: &Vec3, params: &Params) -> Result<f64> {
    let norm = m.norm();
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(Error::NonUnitVector { norm });
    }
    Ok(potential_unchecked(m, params))
}

#[inline]
pub fn potential_unchecked(m: &Vec3, params: &Params) -> f64 {
    0.5 * (1.0 - m.x * m.x + params.k2 * m.y * m.y - 2.0 * params.applied_field().dot(m))
}

/// Ambient gradient `-(m.x)x + K2 (m.y)y - H`.
#[inline]
pub fn grad_potential(m: &Vec3, params: &Params) -> Vec3 {
    Vec3::new(-m.x - params.h1, params.k2 * m.y - params.h2, -params.h3)
}

#[inline]
pub fn potential_polar(a: f64, b: f64, params: &Params) -> f64 {
    potential_unchecked(&unit_from_polar(a, b), params)
}

/// `(F1, F2)` at polar angles `(a, b)`.
#[inline]
pub fn torques(a: f64, b: f64, params: &Params) -> (f64, f64) {
    let (sa, ca) = a.sin_cos();
    let (sb, cb) = b.sin_cos();
    let f1 = sa * sb * cb + params.h1 * sb - params.h3 * cb;
    let f2 = -sa * ca * cb * cb - params.k2 * sa * ca - params.h1 * ca * cb + params.h2 * sa
        - params.h3 * ca * sb;
    (f1, f2)
}

/// Partial derivatives of the torques:
/// `[[dF1/da, dF1/db], [dF2/da, dF2/db]]`.
#[inline]
pub fn torque_jacobian(a: f64, b: f64, params: &Params) -> [[f64; 2]; 2] {
    let (sa, ca) = a.sin_cos();
    let (sb, cb) = b.sin_cos();
    let (h1, h2, h3, k2) = (params.h1, params.h2, params.h3, params.k2);
    let c2a = (2.0 * a).cos();
    let f1a = ca * sb * cb;
    let f1b = sa * (2.0 * b).cos() + h1 * cb + h3 * sb;
    let uaa = -c2a * cb * cb - k2 * c2a + h1 * sa * cb + h2 * ca + h3 * sa * sb;
    let uab = sa * ca * (2.0 * b).sin() + h1 * ca * sb - h3 * ca * cb;
    [[f1a, f1b], [uaa, uab]]
}

/// Second derivatives `(U_aa, U_ab, U_bb)` of the potential in angle form.
pub fn angle_hessian(a: f64, b: f64, params: &Params) -> (f64, f64, f64) {
    let (sa, ca) = a.sin_cos();
    let (sb, cb) = b.sin_cos();
    let (h1, h2, h3, k2) = (params.h1, params.h2, params.h3, params.k2);
    let c2a = (2.0 * a).cos();
    let uaa = -c2a * cb * cb - k2 * c2a + h1 * sa * cb + h2 * ca + h3 * sa * sb;
    let uab = sa * ca * (2.0 * b).sin() + h1 * ca * sb - h3 * ca * cb;
    let ubb = sa * sa * (2.0 * b).cos() + h1 * sa * cb + h3 * sa * sb;
    (uaa, uab, ubb)
}

/// Eigenvalues (ascending) of the Hessian of `U` restricted to the sphere,
/// expressed in the orthonormal tangent frame `(n, p)`. Only meaningful at
/// critical points.
pub fn tangent_hessian_eigenvalues(a: f64, b: f64, params: &Params) -> [f64; 2] {
    let (uaa, uab, ubb) = angle_hessian(a, b, params);
    let sa = a.sin();
    let (p, q, r) = (uaa, uab / sa, ubb / (sa * sa));
    let mean = 0.5 * (p + r);
    let rad = (0.25 * (p - r).powi(2) + q * q).sqrt();
    [mean - rad, mean + rad]
}

/// Tangential gradient `F2 n - F1 p` of `U` on the sphere.
pub fn tangent_gradient(a: f64, b: f64, params: &Params) -> Vec3 {
    let (f1, f2) = torques(a, b, params);
    let (sa, ca) = a.sin_cos();
    let (sb, cb) = b.sin_cos();
    let n = Vec3::new(ca * cb, -sa, ca * sb);
    let p = Vec3::new(sb, 0.0, -cb);
    f2 * n - f1 * p
}

/// Effective field `m'' + (m.x)x - K2 (m.y)y + H` with second-order central
/// differences; the neighbours of the end nodes are the far-field states.
pub fn effective_field_cartesian(
    m: &[Vec3],
    params: &Params,
    h: f64,
    minus: &Vec3,
    plus: &Vec3,
) -> Vec<Vec3> {
    let n = m.len();
    let ha = params.applied_field();
    let inv_h2 = 1.0 / (h * h);
    (0..n)
        .map(|i| {
            let left = if i == 0 { minus } else { &m[i - 1] };
            let right = if i + 1 == n { plus } else { &m[i + 1] };
            let lap = (left - 2.0 * m[i] + right) * inv_h2;
            lap + Vec3::new(m[i].x, -params.k2 * m[i].y, 0.0) + ha
        })
        .collect()
}

pub fn effective_field(p: &PolarProfile, params: &Params, grid: &Grid) -> Vec<Vec3> {
    let c = to_cartesian(p);
    effective_field_cartesian(
        &c.m,
        params,
        grid.spacing(),
        &p.minus.to_unit(),
        &p.plus.to_unit(),
    )
}

/// Discrete energy: exchange `1/2 |m'|^2` by forward differences summed over
/// cells, potential `U - U(m+)` by the trapezoid rule.
///
/// The exchange part is exactly the quadratic form whose gradient is the
/// three-point Laplacian used in the effective field, so the semi-discrete
/// dynamics dissipates this quantity.
pub fn energy_cartesian(m: &[Vec3], params: &Params, grid: &Grid, u_ref: f64) -> f64 {
    let h = grid.spacing();
    let exchange: f64 = m
        .windows(2)
        .map(|w| (w[1] - w[0]).norm_squared())
        .sum::<f64>()
        * 0.5
        / h;
    let dens: Vec<f64> = m
        .iter()
        .map(|v| potential_unchecked(v, params) - u_ref)
        .collect();
    exchange + grid.trapezoid(&dens)
}

/// Energy of a profile, renormalised by the potential of its right state.
pub fn micromagnetic_energy(p: &PolarProfile, params: &Params, grid: &Grid) -> f64 {
    let c = to_cartesian(p);
    let u_ref = potential_unchecked(&p.plus.to_unit(), params);
    energy_cartesian(&c.m, params, grid, u_ref)
}

/// The two tail-to-tail minima of the potential.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumPair {
    pub plus: PolarPoint,
    pub minus: PolarPoint,
}

impl EquilibriumPair {
    /// Largest torque magnitude at either state.
    pub fn torque_residual(&self, params: &Params) -> f64 {
        [self.plus, self.minus]
            .iter()
            .map(|s| {
                let (f1, f2) = torques(s.psi, s.beta, params);
                f1.abs().max(f2.abs())
            })
            .fold(0.0, f64::max)
    }

    pub fn min_hessian_eigenvalue(&self, params: &Params) -> f64 {
        [self.plus, self.minus]
            .iter()
            .map(|s| tangent_hessian_eigenvalues(s.psi, s.beta, params)[0])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Locates the two boundary minima by Newton descent on the sphere.
///
/// Seeds are the field-tilted easy-axis states
/// `(+-sqrt(1 - t2^2 - t3^2), t2, t3)` with `t2 = H2/(1+K2)`, `t3 = H3`, which
/// are exact when `H1 = 0` and `K2 = 0` or `H2 = 0`. `plus.beta` is reported
/// in `(-pi/2, pi/2)` and `minus.beta` in `(pi/2, 3pi/2)`.
pub fn equilibria(params: &Params) -> Result<EquilibriumPair> {
    params.check()?;
    let mut t2 = params.h2 / (1.0 + params.k2);
    let mut t3 = params.h3;
    let r2 = t2 * t2 + t3 * t3;
    if r2 > 0.95 {
        // seeds must keep a nonzero easy-axis component
        let k = (0.95 / r2).sqrt();
        t2 *= k;
        t3 *= k;
    }
    seeded_pair(params, (1.0 - t2 * t2 - t3 * t3).sqrt(), t2, t3)
}

fn seeded_pair(params: &Params, t1: f64, t2: f64, t3: f64) -> Result<EquilibriumPair> {
    let plus = minimise(params, polar_from_unit(&Vec3::new(t1, t2, t3)))?;
    let minus = minimise(params, polar_from_unit(&Vec3::new(-t1, t2, t3)))?;
    let (mp, mm) = (plus.to_unit(), minus.to_unit());
    if !(mp.x > 0.0 && mm.x < 0.0) {
        return Err(Error::WrongSign {
            plus_x: mp.x,
            minus_x: mm.x,
        });
    }
    if (mp - mm).norm() < 1e-6 {
        return Err(Error::NoEquilibrium(
            "both seeds converged to the same minimum".into(),
        ));
    }
    let pair = EquilibriumPair {
        plus: PolarPoint::new(plus.psi, align_branch(plus.beta, 0.0)),
        minus: PolarPoint::new(minus.psi, align_branch(minus.beta, PI)),
    };
    let lowest = pair.min_hessian_eigenvalue(params);
    if lowest < -1e-9 {
        return Err(Error::NoEquilibrium(format!(
            "critical point is not a minimum (tangent Hessian eigenvalue {lowest:.3e})"
        )));
    }
    Ok(pair)
}

fn minimise(params: &Params, seed: PolarPoint) -> Result<PolarPoint> {
    let (mut a, mut b) = (seed.psi, seed.beta);
    for _ in 0..200 {
        let (f1, f2) = torques(a, b, params);
        if f1.abs().max(f2.abs()) <= 0.1 * EQUILIBRIUM_TOL {
            break;
        }
        let sa = a.sin();
        let (ga, gb) = (f2, sa * f1);
        let (uaa, uab, ubb) = angle_hessian(a, b, params);
        let det = uaa * ubb - uab * uab;
        let (mut da, mut db) = if uaa > 0.0 && det > 0.0 {
            (-(ubb * ga - uab * gb) / det, -(uaa * gb - uab * ga) / det)
        } else {
            (-ga, -gb / (sa * sa))
        };
        let step = da.hypot(db * sa);
        if step > 0.5 {
            da *= 0.5 / step;
            db *= 0.5 / step;
        }
        let u0 = potential_polar(a, b, params);
        let mut lambda = 1.0;
        loop {
            let (na, nb) = (a + lambda * da, b + lambda * db);
            let ok = na > 0.0 && na < PI;
            if ok && potential_polar(na, nb, params) <= u0 + 1e-15 {
                a = na;
                b = nb;
                break;
            }
            lambda *= 0.5;
            if lambda < 1e-12 {
                break;
            }
        }
        if lambda < 1e-12 {
            // descent stalled at rounding level; accept if torques are small
            break;
        }
    }
    let (f1, f2) = torques(a, b, params);
    let r = f1.abs().max(f2.abs());
    if !(r <= EQUILIBRIUM_TOL) || !(a > 0.0 && a < PI) {
        return Err(Error::NoEquilibrium(format!(
            "descent from (psi, beta) = ({:.4}, {:.4}) ended with torque {r:.3e}",
            seed.psi, seed.beta
        )));
    }
    Ok(PolarPoint::new(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::staticsol::bloch_wall;
    use std::f64::consts::FRAC_PI_2;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(h1: f64, h2: f64, h3: f64, k2: f64) -> Params {
        Params::new(h1, h2, h3, k2, 0.1).unwrap()
    }

    #[test]
    fn potential_examples() {
        let x = Vec3::x();
        assert_eq!(potential(&x, &p(0.0, 0.0, 0.0, 1.0)).unwrap(), 0.0);
        assert!((potential(&Vec3::y(), &p(0.0, 0.0, 0.0, 2.0)).unwrap() - 1.5).abs() < 1e-15);
        assert!((potential(&x, &p(0.3, 0.0, 0.0, 0.0)).unwrap() + 0.3).abs() < 1e-15);
        assert!(matches!(
            potential(&Vec3::new(1.0, 0.1, 0.0), &p(0.0, 0.0, 0.0, 1.0)),
            Err(Error::NonUnitVector { .. })
        ));
    }

    #[test]
    fn torque_examples() {
        let (f1, f2) = torques(FRAC_PI_2, 0.0, &p(0.0, 0.0, 0.0, 1.0));
        assert!(f1.abs() < 1e-15 && f2.abs() < 1e-15);
        for &b in &[0.1, 0.7, 2.0, -1.3] {
            let (f1, f2) = torques(FRAC_PI_2, b, &p(0.0, 0.0, 0.5, 0.0));
            assert!((f1 - b.cos() * (b.sin() - 0.5)).abs() < 1e-15);
            assert!(f2.abs() < 1e-15);
        }
        let (f1, f2) = torques(FRAC_PI_2, FRAC_PI_2, &p(0.0, 0.0, 0.5, 0.0));
        assert!(f1.abs() < 1e-16 && f2.abs() < 1e-16);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let params = p(
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
                rng.gen_range(0.0..3.0),
            );
            let a = rng.gen_range(0.1..PI - 0.1);
            let b = rng.gen_range(-PI..PI);
            let m = unit_from_polar(a, b);
            let g = tangent_gradient(a, b, &params);
            // directional derivatives along two tangent directions
            let (sa, ca) = a.sin_cos();
            let (sb, cb) = b.sin_cos();
            for t in [Vec3::new(ca * cb, -sa, ca * sb), Vec3::new(sb, 0.0, -cb)] {
                let eps = 1e-5;
                let up = potential_unchecked(&(m + eps * t).normalize(), &params);
                let dn = potential_unchecked(&(m - eps * t).normalize(), &params);
                let fd = (up - dn) / (2.0 * eps);
                assert!((fd - g.dot(&t)).abs() < 1e-6, "{fd} vs {}", g.dot(&t));
            }
            // ambient gradient projects onto the same tangent vector
            let amb = grad_potential(&m, &params);
            let proj = amb - m * m.dot(&amb);
            assert!((proj - g).norm() < 1e-12);
        }
    }

    #[test]
    fn torque_jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let params = p(
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
                rng.gen_range(0.0..3.0),
            );
            let a = rng.gen_range(0.1..PI - 0.1);
            let b = rng.gen_range(-PI..PI);
            let j = torque_jacobian(a, b, &params);
            let e = 1e-6;
            let (pa1, pa2) = torques(a + e, b, &params);
            let (ma1, ma2) = torques(a - e, b, &params);
            let (pb1, pb2) = torques(a, b + e, &params);
            let (mb1, mb2) = torques(a, b - e, &params);
            let fd = [
                [(pa1 - ma1) / (2.0 * e), (pb1 - mb1) / (2.0 * e)],
                [(pa2 - ma2) / (2.0 * e), (pb2 - mb2) / (2.0 * e)],
            ];
            for r in 0..2 {
                for c in 0..2 {
                    assert!((j[r][c] - fd[r][c]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn equilibria_examples() {
        let w = equilibria(&p(0.0, 0.0, 0.0, 1.0)).unwrap();
        assert!((w.plus.psi - FRAC_PI_2).abs() < 1e-14 && w.plus.beta.abs() < 1e-14);
        assert!((w.minus.psi - FRAC_PI_2).abs() < 1e-14 && (w.minus.beta - PI).abs() < 1e-14);

        let t = equilibria(&p(0.0, 0.0, 0.5, 0.0)).unwrap();
        assert!((t.plus.psi - FRAC_PI_2).abs() < 1e-12);
        assert!((t.plus.beta - PI / 6.0).abs() < 1e-12);
        assert!((t.minus.beta - 5.0 * PI / 6.0).abs() < 1e-12);

        let s = equilibria(&p(0.01, 0.0, 0.0, 1.0)).unwrap();
        assert!(s.plus.beta.abs() < 1e-14 && (s.minus.beta - PI).abs() < 1e-14);
    }

    #[test]
    fn equilibria_with_mixed_fields_are_minima() {
        for params in [
            p(0.01, 0.05, -0.05, 1.2),
            p(-0.005, 0.05, 0.55, 0.02),
            p(0.0, -0.3, 0.4, 0.0),
        ] {
            let e = equilibria(&params).unwrap();
            assert!(e.torque_residual(&params) <= EQUILIBRIUM_TOL);
            assert!(e.min_hessian_eigenvalue(&params) >= -1e-9);
            assert!(e.plus.to_unit().x > 0.0 && e.minus.to_unit().x < 0.0);
        }
    }

    #[test]
    fn equilibria_fail_outside_basin() {
        // transverse field above the anisotropy field: a single minimum
        assert!(equilibria(&p(0.0, 0.0, 1.2, 0.0)).is_err());
    }

    #[test]
    fn bloch_energy_and_field() {
        let grid = Grid::default();
        let wall = bloch_wall(&grid);
        let e1 = micromagnetic_energy(&wall, &p(0.0, 0.0, 0.0, 1.0), &grid);
        let e5 = micromagnetic_energy(&wall, &p(0.0, 0.0, 0.0, 5.0), &grid);
        assert!((e1 - 2.0).abs() < 1e-3, "{e1}");
        assert!((e1 - e5).abs() < 1e-12);
        let fine = grid.refined();
        let e_fine = micromagnetic_energy(&bloch_wall(&fine), &p(0.0, 0.0, 0.0, 1.0), &fine);
        let ratio = (e1 - 2.0).abs() / (e_fine - 2.0).abs();
        assert!(ratio > 3.5 && ratio < 4.5, "{ratio}");

        let params = p(0.0, 0.0, 0.0, 1.0);
        let field = effective_field(&wall, &params, &grid);
        let c = grid.n_nodes() / 2;
        assert!((field[c] - Vec3::new(0.0, 0.0, -1.0)).norm() < 0.5 * grid.spacing().powi(2), "{:?}", field[c]);
        let m = to_cartesian(&wall);
        let torque = m
            .m
            .iter()
            .zip(&field)
            .map(|(m, h)| m.cross(h).norm())
            .fold(0.0, f64::max);
        assert!(torque < 1e-3, "{torque}");
    }

    #[test]
    fn uniform_state_energy_and_field() {
        let grid = Grid::new(5.0, 11).unwrap();
        let n = grid.n_nodes();
        let x = PolarPoint::new(FRAC_PI_2, 0.0);
        let prof = PolarProfile::new(vec![FRAC_PI_2; n], vec![0.0; n], x, x).unwrap();
        let params = p(0.0, 0.0, 0.0, 1.0);
        assert_eq!(micromagnetic_energy(&prof, &params, &grid), 0.0);
        for h in effective_field(&prof, &params, &grid) {
            assert!((h - Vec3::x()).norm() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn reflection_symmetry(
            x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0,
            h2 in -1.0f64..1.0, h3 in -1.0f64..1.0, k2 in 0.0f64..5.0,
        ) {
            let v = Vec3::new(x, y, z);
            prop_assume!(v.norm() > 1e-3);
            let m = v.normalize();
            let r = Vec3::new(-m.x, m.y, m.z);
            let params = p(0.0, h2, h3, k2);
            prop_assert_eq!(potential_unchecked(&m, &params), potential_unchecked(&r, &params));
        }
    }
}
