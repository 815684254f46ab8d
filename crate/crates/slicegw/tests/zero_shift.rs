use slicegw::config::RunSpec;
use slicegw::experiment::{load_data, run_on};

#[test]
fn source_classifier_transfers_without_shift() {
    for seed in 0..5 {
        let mut spec = RunSpec::default();
        for (k, v) in [
            ("arm", "source_only"),
            ("rotation_deg", "0"),
            ("translation", "0,0"),
            ("epochs", "10"),
            ("batch_size", "32"),
            ("lr", "0.002"),
            ("projections", "8"),
            ("n_per_class", "500"),
        ] {
            spec.set(k, v).unwrap();
        }
        spec.cfg.seed = seed;
        let data = load_data(&spec).unwrap();
        let (summary, _) = run_on(&spec, &data, |_| {}).unwrap();
        let gap = (summary.final_src_acc - summary.final_tgt_acc).abs();
        assert!(gap <= 0.02, "seed {seed}: source {} target {}", summary.final_src_acc, summary.final_tgt_acc);
        assert!(summary.final_src_acc > 0.5, "seed {seed}: classifier did not train");
    }
}
