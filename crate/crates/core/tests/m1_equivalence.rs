//! At m = 1 with binary rewards, the semi-bandit algorithm degenerates to the
//! single-action algorithm: `γm/K = γ/|A|`, coordinate counts equal action
//! counts, and `r = r²`. Running both on the same streams must select the
//! same policies round for round and return the same final policy.

use rand::Rng;
use sparse_bandits::ccsb::{phase1_ccsb, phase2_ccsb, CcsbConfig};
use sparse_bandits::env::{
    ActionId, ActionSpace, ContextId, Environment, RewardAtom, RewardVector, Sparsity, SparsityMode,
};
use sparse_bandits::lve::{phase1, phase2, LveConfig};
use sparse_bandits::policy::{Policy, PolicyClass, SubsetAction, SubsetPolicy, SubsetPolicyClass};
use sparse_bandits::rng::RngStream;

#[test]
fn ccsb_at_m1_reduces_to_lve_on_binary_rewards() {
    let (x_size, a_size) = (3, 5);
    let mut rng = RngStream::new(6).rng();
    let probs = vec![0.5, 0.3, 0.2];
    let law: Vec<Vec<RewardAtom>> = (0..x_size)
        .map(|_| {
            let hot = rng.random_range(0..a_size);
            let mut r1 = vec![0.0; a_size];
            r1[hot] = 1.0;
            vec![
                RewardAtom { p: 0.8, r: RewardVector(r1) },
                RewardAtom { p: 0.2, r: RewardVector::zeros(a_size) },
            ]
        })
        .collect();

    let env_atomic = Environment::new(
        probs.clone(),
        law.clone(),
        Sparsity { mode: SparsityMode::L1, s: 1.0 },
        ActionSpace::Atomic(a_size),
    )
    .unwrap();
    let env_subset = Environment::new(
        probs,
        law,
        Sparsity { mode: SparsityMode::L1, s: 1.0 },
        ActionSpace::MSubset { k: a_size, m: 1 },
    )
    .unwrap();

    let mut prng = RngStream::new(6).substream(3).rng();
    let maps: Vec<Vec<usize>> = (0..7)
        .map(|_| (0..x_size).map(|_| prng.random_range(0..a_size)).collect())
        .collect();
    let atomic_class = PolicyClass::new(
        maps.iter()
            .map(|m| Policy::new(m.iter().map(|&a| ActionId(a)).collect()))
            .collect(),
    )
    .unwrap();
    let subset_class = SubsetPolicyClass::new(
        maps.iter()
            .map(|m| {
                SubsetPolicy::new(
                    m.iter().map(|&a| SubsetAction::new(vec![a], a_size, 1).unwrap()).collect(),
                )
            })
            .collect(),
    )
    .unwrap();

    let gamma = 0.5;
    let lve_cfg = LveConfig {
        t_rounds: 180,
        n_rounds: 400,
        eta: gamma / a_size as f64,
        gamma,
        t_multiplier: 8.0,
        n_multiplier: 16.0,
    };
    let ccsb_cfg = CcsbConfig {
        t_rounds: 180,
        n_rounds: 400,
        eta: gamma * 1.0 / (a_size as f64 * 1.0),
        gamma,
        k: a_size,
        m: 1,
        s: 1.0,
        t_multiplier: 8.0,
        n_multiplier: 16.0,
    };
    assert_eq!(lve_cfg.eta, ccsb_cfg.eta);

    let stream = RngStream::new(404);
    let (ed_a, trace_a) = phase1(&env_atomic, &atomic_class, &lve_cfg, stream).unwrap();
    let (ed_s, trace_s) = phase1_ccsb(&env_subset, &subset_class, &ccsb_cfg, stream).unwrap();
    assert_eq!(ed_a.selected(), ed_s.selected(), "phase-1 policy sequences differ");
    for (ra, rs) in trace_a.rounds.iter().zip(&trace_s.rounds) {
        assert_eq!(ra.context, rs.context);
        assert_eq!(ra.action, rs.action);
        assert_eq!(ra.observed, rs.observed);
    }
    for x in 0..x_size {
        for a in 0..a_size {
            assert_eq!(
                ed_a.marginal(ContextId(x), ActionId(a)),
                ed_s.marginal(ContextId(x), ActionId(a))
            );
        }
    }

    let (chosen_a, est_a) = phase2(&env_atomic, &atomic_class, &ed_a, &lve_cfg, stream).unwrap();
    let (chosen_s, est_s) =
        phase2_ccsb(&env_subset, &subset_class, &ed_s, &ccsb_cfg, stream).unwrap();
    assert_eq!(chosen_a, chosen_s, "final policies differ");
    assert_eq!(est_a, est_s, "estimate vectors differ");
}
