//! The explore-then-commit multiplier c = 8 was calibrated so the baseline
//! meets its 1−δ guarantee on multiclass instances; this pins that fact.

use sparse_bandits::rng::RngStream;
use sparse_bandits_harness::{run_point, Algorithm, ExoParams, FamilyConfig};

#[test]
fn etc_default_multiplier_meets_target_on_multiclass() {
    let family = FamilyConfig::Multiclass {
        x_size: 10,
        a_size: 8,
        pi_size: 20,
        atoms: 2,
        hot_prob: 0.75,
    };
    let (eps, delta) = (0.2, 0.1);
    let master = RngStream::new(808);
    let mut successes = 0;
    for seed in 0..100u64 {
        let outcome = run_point(
            Algorithm::BaselineEtc,
            &family,
            eps,
            delta,
            &sparse_bandits_harness::Budget::default(),
            &ExoParams::default(),
            master.substream(seed),
        )
        .unwrap();
        successes += (outcome.suboptimality <= eps + 1e-12) as usize;
    }
    // 1 − δ = 0.9 over 100 seeds.
    assert!(successes >= 90, "etc succeeded only {successes}/100 times");
}
