//! Configs survive INI and JSON round trips.

use ietlab_cli::{Experiment, ExperimentConfig};
use proptest::prelude::*;

fn experiment() -> impl Strategy<Value = Experiment> {
    prop::sample::select(Experiment::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn resolved_configs_round_trip(e in experiment(), seed in any::<u64>(), pick in prop::collection::vec(any::<prop::sample::Index>(), 0..3)) {
        let mut cfg = ExperimentConfig::new(e);
        cfg.seed = seed;
        // set a few parameters explicitly
        for ix in pick {
            let p = ix.get(e.schema());
            cfg.set(p.key, p.default).unwrap();
        }
        let cfg = cfg.resolve().unwrap();
        prop_assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg.clone());
        prop_assert_eq!(ExperimentConfig::from_ini(&cfg.to_ini()).unwrap(), cfg.clone());
        prop_assert!(!cfg.to_ini().contains('\r'));
    }
}

#[test]
fn unknown_keys_are_rejected() {
    assert!(ExperimentConfig::from_json(r#"{"experiment":"tau","seed":1,"colour":"red"}"#).is_err());
    let cfg = ExperimentConfig::from_json(r#"{"experiment":"tau","seed":1,"parameters":{"bogus":"1"}}"#).unwrap();
    assert!(cfg.resolve().is_err());
    let cfg = ExperimentConfig::from_ini("[experiment]\nname = tau\n\n[parameters]\nbogus = 1\n");
    assert!(cfg.and_then(|c| c.resolve()).is_err());
    assert!(ExperimentConfig::from_ini("[experiment]\nname = nope\n").is_err());
}
