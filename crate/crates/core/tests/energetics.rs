use nanowire_tw::energetics::{equilibria, grad_potential, potential, potential_unchecked};
use nanowire_tw::model::{Params, Vec3};
use proptest::prelude::*;

fn unit(a: f64, b: f64) -> Vec3 {
    Vec3::new(a.sin() * b.cos(), a.cos(), a.sin() * b.sin())
}

proptest! {
    #[test]
    fn equilibria_are_local_minima(
        h1 in -0.05..0.05f64,
        h2 in -0.3..0.3f64,
        h3 in -0.6..0.6f64,
        k2 in 0.0..3.0f64,
    ) {
        let p = Params::new(h1, h2, h3, k2, 0.1).unwrap();
        prop_assume!(!p.is_degenerate());
        if let Ok(eq) = equilibria(&p) {
            prop_assert!(eq.min_hessian_eigenvalue(&p) >= -1e-9);
            prop_assert!(eq.torque_residual(&p) <= 1e-12);
            prop_assert!(eq.plus.to_unit().x > 0.0 && eq.minus.to_unit().x < 0.0);
        }
    }

    #[test]
    fn gradient_matches_finite_differences(
        a in 0.05..3.09f64,
        b in -3.1..3.1f64,
        h in prop::array::uniform3(-0.8..0.8f64),
        k2 in 0.0..2.0f64,
    ) {
        let p = Params::new(h[0], h[1], h[2], k2, 0.1).unwrap();
        let m = unit(a, b);
        let g = grad_potential(&m, &p);
        let tangent = g - m * g.dot(&m);
        let e1 = Vec3::new(a.cos() * b.cos(), -a.sin(), a.cos() * b.sin());
        let e2 = Vec3::new(-b.sin(), 0.0, b.cos());
        let eps: f64 = 1e-6;
        for e in [e1, e2] {
            let fwd = potential(&(m * eps.cos() + e * eps.sin()), &p).unwrap();
            let bwd = potential(&(m * eps.cos() - e * eps.sin()), &p).unwrap();
            let fd = (fwd - bwd) / (2.0 * eps);
            prop_assert!((fd - tangent.dot(&e)).abs() < 1e-6);
        }
    }

    #[test]
    fn reflection_symmetry_without_easy_axis_field(
        a in 0.0..3.14f64,
        b in -3.14..3.14f64,
        h2 in -1.0..1.0f64,
        h3 in -1.0..1.0f64,
        k2 in 0.0..3.0f64,
    ) {
        let p = Params::new(0.0, h2, h3, k2, 0.1).unwrap();
        let m = unit(a, b);
        let r = Vec3::new(-m.x, m.y, m.z);
        prop_assert_eq!(potential_unchecked(&m, &p), potential_unchecked(&r, &p));
    }
}

#[test]
fn non_unit_input_is_rejected() {
    let p = Params::new(0.0, 0.0, 0.0, 1.0, 0.1).unwrap();
    assert!(potential(&Vec3::new(1.0, 1.0, 0.0), &p).is_err());
}
