//! Explore-then-commit baseline: uniform exploration for
//! `n₀ = ⌈c·(|A|/ε²)·log(|Π|/δ)⌉` rounds, plain inverse-propensity estimates
//! with denominator `1/|A|`, then argmax. This is the classical
//! sparsity-blind rate the sweeps compare against.

use rand::Rng;
use sparse_bandits::env::{ContextId, Environment};
use sparse_bandits::lve::argmax_lowest;
use sparse_bandits::oracle::{EnvOracle, RoundOracle};
use sparse_bandits::policy::{best_policy_value, policy_value_exact, PolicyClass};
use sparse_bandits::report::RunReport;
use sparse_bandits::rng::{labels, RngStream};
use sparse_bandits::ActionId;

use crate::HarnessError;

pub const DEFAULT_ETC_MULTIPLIER: f64 = 8.0;

/// Exploration budget of the baseline at a given scale.
pub fn etc_budget(eps: f64, delta: f64, a_size: usize, pi_size: usize, scale: f64) -> usize {
    let n = DEFAULT_ETC_MULTIPLIER
        * scale
        * (a_size as f64 / (eps * eps))
        * (pi_size as f64 / delta).ln();
    (n.ceil() as usize).max(1)
}

pub fn run_baseline_etc(
    env: &Environment,
    class: &PolicyClass,
    eps: f64,
    delta: f64,
    budget_scale: f64,
    stream: RngStream,
) -> Result<RunReport, HarnessError> {
    if !(eps > 0.0 && eps < 1.0 && delta > 0.0 && delta < 1.0) {
        return Err(HarnessError::Config("eps and delta must lie in (0,1)".into()));
    }
    let a_count = env.reward_dim();
    let n0 = etc_budget(eps, delta, a_count, class.len(), budget_scale);
    let mut oracle = EnvOracle::new(env, stream.substream(labels::ENV_PHASE1).rng());
    let mut alg = stream.substream(labels::ALG_PHASE1).rng();

    let mut by_action: Vec<Vec<Vec<u32>>> =
        vec![vec![Vec::new(); a_count]; env.context_count()];
    for (i, pi) in class.iter().enumerate() {
        for (x, groups) in by_action.iter_mut().enumerate() {
            groups[pi.action(ContextId(x)).0].push(i as u32);
        }
    }

    let mut sums = vec![0.0; class.len()];
    for _ in 0..n0 {
        let x = oracle.next_context();
        let a = ActionId(alg.random_range(0..a_count));
        let obs = oracle.observe(a);
        if obs != 0.0 {
            let inc = obs * a_count as f64;
            for &i in &by_action[x.0][a.0] {
                sums[i as usize] += inc;
            }
        }
    }
    debug_assert_eq!(oracle.draws(), n0 as u64);

    let chosen = argmax_lowest(&sums);
    let (best, _) = best_policy_value(env, class);
    let suboptimality = best - policy_value_exact(env, class.get(chosen));

    // Variance diagnostic of the uniform-exploration estimator:
    // E[r(π(x))²]·|A| per policy.
    let variance_by_policy: Vec<f64> = class
        .iter()
        .map(|pi| {
            env.context_probs()
                .iter()
                .enumerate()
                .map(|(x, &px)| {
                    let a = pi.action(ContextId(x));
                    px * env
                        .reward_law(ContextId(x))
                        .iter()
                        .map(|atom| {
                            let r = atom.r.get(a);
                            atom.p * r * r
                        })
                        .sum::<f64>()
                        * a_count as f64
                })
                .sum()
        })
        .collect();

    Ok(RunReport {
        config: serde_json::json!({
            "algorithm": "baseline-etc",
            "eps": eps,
            "delta": delta,
            "n_rounds": n0,
            "multiplier": DEFAULT_ETC_MULTIPLIER * budget_scale,
        }),
        samples_total: n0 as u64,
        chosen_policy: chosen,
        suboptimality,
        variance_by_policy,
        seed: stream.seed,
    })
}
