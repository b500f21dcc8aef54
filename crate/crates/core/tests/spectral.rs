use nanowire_tw::model::Grid;
use nanowire_tw::spectral::{
    essential_floor, lowest_eigenpairs, potential_l, potential_m, potential_n, rayleigh_bound_check,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn shifted_l_is_bounded_below(k2 in 0.05..3.0f64, seed in any::<u64>()) {
        let op = potential_l(&Grid::default()).shifted(k2);
        let rq = rayleigh_bound_check(&op, k2, 50, seed);
        prop_assert!(rq.holds(1e-6));
    }

    #[test]
    fn n_is_bounded_below(h3 in 0.1..0.85f64) {
        let op = potential_n(h3, &Grid::default()).unwrap();
        prop_assert!(lowest_eigenpairs(&op, 1)[0].value >= h3 * h3 - 1e-4);
    }

    #[test]
    fn m_has_one_dimensional_kernel(h3 in 0.1..0.8f64) {
        let op = potential_m(h3, &Grid::default()).unwrap();
        let e = lowest_eigenpairs(&op, 2);
        prop_assert!(e[0].value.abs() < 1e-3);
        prop_assert!(e[1].value >= e[0].value + 0.2);
    }
}

#[test]
fn l_has_one_dimensional_kernel() {
    let e = lowest_eigenpairs(&potential_l(&Grid::default()), 3);
    assert!(e[0].value.abs() < 1e-3);
    assert!(e[1].value >= e[0].value + 0.2);
    assert!(e[2].value >= e[1].value);
}

#[test]
fn essential_floor_tracks_the_limits() {
    for op in [potential_l(&Grid::default()), potential_n(0.5, &Grid::default()).unwrap()] {
        let f = essential_floor(&op);
        assert!(f.outer_lowest >= f.limit - 1e-6);
        assert!(f.outer_lowest - f.limit < 0.1, "{f:?}");
    }
}

#[test]
fn eigenvalues_converge_at_second_order() {
    let l0 = |n| lowest_eigenpairs(&potential_l(&Grid::new(20.0, n).unwrap()), 1)[0].value;
    let (a, b, c) = (l0(401), l0(801), l0(1601));
    let order = ((a - b) / (b - c)).log2();
    assert!((order - 2.0).abs() < 0.1, "{order}");
}
