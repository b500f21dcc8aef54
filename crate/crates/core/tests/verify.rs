use nanowire_tw::io::RunConfig;
use nanowire_tw::verify::{run_one, VerifyConfig};

#[test]
fn reports_are_deterministic() {
    let cfg = VerifyConfig::from(&RunConfig::default());
    for id in [3, 4, 6] {
        let a = serde_json::to_string(&run_one(id, &cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&run_one(id, &cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }
    assert!(run_one(13, &cfg).is_none());
}

#[test]
fn coarse_grid_still_passes_static_checks() {
    let cfg = VerifyConfig::from(&RunConfig::parse("spacing = 0.1").unwrap());
    assert!(run_one(1, &cfg).unwrap().pass);
    assert!(run_one(2, &cfg).unwrap().pass);
}
