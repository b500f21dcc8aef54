use nanowire_tw::dynamics::{
    bloch_profile, discrete_static_wall, integrate_with, track_wall, IntegrateOptions,
};
use nanowire_tw::model::{CartesianProfile, Grid, Params, Vec3};
use proptest::prelude::*;

fn tilted(grid: &Grid, tilt: f64, squeeze: f64) -> CartesianProfile {
    CartesianProfile {
        m: grid
            .nodes()
            .into_iter()
            .map(|x| {
                let s = squeeze * x;
                Vec3::new(s.tanh(), tilt / x.cosh(), 1.0 / s.cosh()).normalize()
            })
            .collect(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn energy_decreases_at_zero_field(tilt in -0.8..0.8f64, squeeze in 0.6..1.6f64, k2 in 0.2..2.0f64) {
        let grid = Grid::new(12.0, 121).unwrap();
        let p = Params::new(0.0, 0.0, 0.0, k2, 0.2).unwrap();
        let opts = IntegrateOptions { dt: None, output_interval: 0.5, keep_profiles: false, monitor_energy: true };
        let t = integrate_with(&tilted(&grid, tilt, squeeze), &p, &grid, 3.0, &opts).unwrap();
        prop_assert!(t.max_energy_increase <= 1e-9);
        prop_assert!(t.max_unit_error <= 1e-9);
        for w in t.times.windows(2) {
            prop_assert!(w[1] > w[0]);
        }
    }
}

#[test]
fn static_trajectory_has_zero_velocity() {
    let grid = Grid::new(15.0, 301).unwrap();
    let p = Params::new(0.0, 0.0, 0.0, 1.0, 0.1).unwrap();
    let m0 = discrete_static_wall(&bloch_profile(&grid, 0.0), &p, &grid).unwrap();
    let opts = IntegrateOptions { dt: None, output_interval: 0.5, keep_profiles: true, monitor_energy: false };
    let t = integrate_with(&m0, &p, &grid, 5.0, &opts).unwrap();
    assert!(track_wall(&t).unwrap().velocity.abs() < 1e-8);
}

#[test]
fn final_profile_converges_at_fourth_order_in_dt() {
    let grid = Grid::new(10.0, 101).unwrap();
    let p = Params::new(0.01, 0.02, 0.0, 1.0, 0.1).unwrap();
    let m0 = tilted(&grid, 0.3, 1.2);
    let run = |dt: f64| {
        let opts = IntegrateOptions { dt: Some(dt), output_interval: 1.0, keep_profiles: false, monitor_energy: false };
        integrate_with(&m0, &p, &grid, 1.0, &opts).unwrap().final_profile
    };
    let (a, b, c) = (run(0.01), run(0.005), run(0.0025));
    let d = |x: &CartesianProfile, y: &CartesianProfile| {
        x.m.iter().zip(&y.m).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max)
    };
    let order = (d(&a, &b) / d(&b, &c)).log2();
    assert!(order > 3.5, "{order}");
}
