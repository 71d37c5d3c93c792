//! Synthetic sparse-reward instance generators, including the two-context
//! hard instance used by the lower-bound sweeps.
//!
//! Every generator re-validates its own output through [`Environment::new`],
//! so a generated instance that violates its declared sparsity certificate is
//! a bug, not a silent test distortion.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ccsb::uniform_msubset;
use crate::env::{
    ActionId, ActionSpace, ContextId, EnvError, Environment, RewardAtom, RewardVector, Sparsity,
    SparsityMode,
};
use crate::policy::{Policy, PolicyClass, SubsetAction, SubsetPolicy, SubsetPolicyClass};
use crate::rng::RngStream;

/// Shape of the per-context reward support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardStyle {
    /// One-hot vectors (bandit multiclass, s = 1 per draw).
    OneHot,
    /// Binary vectors with exactly `⌊s⌋` ones, drawn from a per-context hot set.
    SparseBinary,
    /// Dense vectors scaled down until the certificate holds.
    DenseScaled,
}

/// How the non-optimal members of the policy class are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyStyle {
    /// Independent uniform actions at every context.
    Uniform,
    /// With probability `hot_prob`, pick uniformly among the context's
    /// high-reward actions; otherwise uniform over all actions. Produces a
    /// dense spectrum of near-optimal policies, which is what makes the
    /// epsilon-resolution of a sample-complexity search actually bind.
    HotBiased { hot_prob: f64 },
    /// Fixed near-optimality tiers: policies cycle through exact mutation
    /// distances {1, 2, 3, fully-random} from a hot policy, picking a random
    /// hot action where not mutated and a random cold action where mutated.
    /// Keeps the winner/boundary/loser composition stable across instance
    /// draws, which sample-complexity scaling fits need.
    Tiered,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparseEnvSpec {
    pub x_size: usize,
    pub a_size: usize,
    pub s: f64,
    pub mode: SparsityMode,
    pub reward_style: RewardStyle,
    pub pi_size: usize,
    /// Support points per context (coerced to 1 for `SparseBinary`).
    pub atoms_per_context: usize,
    pub policy_style: PolicyStyle,
}

/// Extra facts about a generated instance that tests and reports rely on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenDiagnostics {
    pub optimal_index: usize,
    pub optimal_value: f64,
    pub duplicate_policies: usize,
}

fn random_probs<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

fn distinct_indices<R: Rng>(count: usize, n: usize, rng: &mut R) -> Vec<usize> {
    // Partial Fisher-Yates over [n].
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..count {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(count);
    pool
}

/// The two-context hard instance: context `x₁` appears with probability
/// `eps` and hides a one-hot reward at a uniformly drawn action `a*`;
/// context `x₂` always pays zero. The policy class is all `|A|²` maps.
/// Policy `i·|A| + j` plays action `i` at `x₁` and `j` at `x₂`.
pub fn make_lower_bound_env(
    a_size: usize,
    eps: f64,
    stream: RngStream,
) -> Result<(Environment, PolicyClass, ActionId), EnvError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(EnvError::BadEpsilon(eps));
    }
    assert!(a_size >= 2, "lower-bound instance needs at least two actions");
    let mut rng = stream.rng();
    let star = rng.random_range(0..a_size);
    let mut hot = vec![0.0; a_size];
    hot[star] = 1.0;
    let env = Environment::new(
        vec![eps, 1.0 - eps],
        vec![
            vec![RewardAtom { p: 1.0, r: RewardVector(hot) }],
            vec![RewardAtom { p: 1.0, r: RewardVector::zeros(a_size) }],
        ],
        Sparsity { mode: SparsityMode::L1, s: 1.0 },
        ActionSpace::Atomic(a_size),
    )?;
    let mut policies = Vec::with_capacity(a_size * a_size);
    for i in 0..a_size {
        for j in 0..a_size {
            policies.push(Policy::new(vec![ActionId(i), ActionId(j)]));
        }
    }
    let class = PolicyClass::new(policies).expect("non-empty by construction");
    Ok((env, class, ActionId(star)))
}

fn check_class_size(pi_size: usize, actions: u128, contexts: usize) -> Result<(), EnvError> {
    let mut available: u128 = 1;
    for _ in 0..contexts {
        available = match available.checked_mul(actions) {
            Some(v) => v,
            // Overflow means the space is astronomically larger than any
            // requested class size.
            None => return Ok(()),
        };
    }
    if pi_size as u128 > available {
        return Err(EnvError::PolicyClassTooLarge { requested: pi_size as u128, available });
    }
    Ok(())
}

/// Generate a random environment satisfying the requested sparsity
/// certificate, plus a policy class that contains at least one policy tied
/// for optimal.
pub fn make_sparse_env(
    spec: &SparseEnvSpec,
    stream: RngStream,
) -> Result<(Environment, PolicyClass, GenDiagnostics), EnvError> {
    let a = spec.a_size;
    if !(1.0..=a as f64).contains(&spec.s) {
        return Err(EnvError::SparsityOutOfRange(spec.s));
    }
    check_class_size(spec.pi_size, a as u128, spec.x_size)?;
    let mut rng = stream.rng();
    let s_int = (spec.s.floor() as usize).clamp(1, a);
    let atoms = match spec.reward_style {
        RewardStyle::SparseBinary => 1,
        _ => spec.atoms_per_context.max(1),
    };

    // Uniform contexts for the binary style keep the suboptimality tiers of
    // a Tiered policy class at exact multiples of 1/|X|.
    let context_probs = match spec.reward_style {
        RewardStyle::SparseBinary => vec![1.0 / spec.x_size as f64; spec.x_size],
        _ => random_probs(spec.x_size, &mut rng),
    };
    let mut reward_law = Vec::with_capacity(spec.x_size);
    let mut hot_sets: Vec<Vec<usize>> = Vec::with_capacity(spec.x_size);
    for _ in 0..spec.x_size {
        let atom_probs = random_probs(atoms, &mut rng);
        let mut law = Vec::with_capacity(atoms);
        let mut hot = Vec::new();
        match spec.reward_style {
            RewardStyle::OneHot => {
                for &p in &atom_probs {
                    let label = rng.random_range(0..a);
                    let mut r = vec![0.0; a];
                    r[label] = 1.0;
                    if !hot.contains(&label) {
                        hot.push(label);
                    }
                    law.push(RewardAtom { p, r: RewardVector(r) });
                }
            }
            RewardStyle::SparseBinary => {
                // Bernoulli realization of a per-context hot set: the s-sparse
                // indicator vector with probability p_x, zero otherwise.
                let set = distinct_indices(s_int, a, &mut rng);
                let mut r = vec![0.0; a];
                for &j in &set {
                    r[j] = 1.0;
                }
                hot = set;
                let p_hot = rng.random_range(0.6..0.9);
                law.push(RewardAtom { p: p_hot, r: RewardVector(r) });
                law.push(RewardAtom { p: 1.0 - p_hot, r: RewardVector::zeros(a) });
            }
            RewardStyle::DenseScaled => {
                for &p in &atom_probs {
                    let mut r: Vec<f64> = (0..a).map(|_| rng.random_range(0.0..=1.0)).collect();
                    if spec.mode == SparsityMode::L1 {
                        let l1: f64 = r.iter().sum();
                        if l1 > spec.s {
                            let f = spec.s / l1;
                            for v in &mut r {
                                *v *= f;
                            }
                        }
                    }
                    law.push(RewardAtom { p, r: RewardVector(r) });
                }
            }
        }
        reward_law.push(law);
        hot_sets.push(hot);
    }

    if spec.reward_style == RewardStyle::DenseScaled && spec.mode == SparsityMode::L2 {
        // Rescale globally so the exact expectation meets the certificate.
        let e: f64 = context_probs
            .iter()
            .zip(&reward_law)
            .map(|(&px, law)| px * law.iter().map(|a| a.p * a.r.sq_l2_norm()).sum::<f64>())
            .sum();
        if e > spec.s {
            let f = (spec.s / e).sqrt();
            for law in &mut reward_law {
                for atom in law {
                    for v in &mut atom.r.0 {
                        *v *= f;
                    }
                }
            }
        }
    }

    let env = Environment::new(
        context_probs,
        reward_law,
        Sparsity { mode: spec.mode, s: spec.s },
        ActionSpace::Atomic(a),
    )?;

    // Hot sets for DenseScaled: the top-⌈s⌉ actions by conditional mean.
    if spec.reward_style == RewardStyle::DenseScaled {
        let top = (spec.s.ceil() as usize).clamp(1, a);
        for (x, hot) in hot_sets.iter_mut().enumerate() {
            let means = env.mean_reward(ContextId(x));
            let mut order: Vec<usize> = (0..a).collect();
            order.sort_by(|&i, &j| means[j].partial_cmp(&means[i]).unwrap().then(i.cmp(&j)));
            *hot = order.into_iter().take(top).collect();
        }
    }

    // Pointwise argmax of the conditional mean is optimal overall.
    let optimal = Policy::new(
        (0..spec.x_size)
            .map(|x| {
                let means = env.mean_reward(ContextId(x));
                let best = means
                    .iter()
                    .enumerate()
                    .max_by(|(i, u), (j, v)| u.partial_cmp(v).unwrap().then(j.cmp(i)))
                    .map(|(i, _)| i)
                    .unwrap();
                ActionId(best)
            })
            .collect(),
    );

    let optimal_index = rng.random_range(0..spec.pi_size);
    let mut policies = Vec::with_capacity(spec.pi_size);
    let mut tier = 0usize;
    for i in 0..spec.pi_size {
        if i == optimal_index {
            policies.push(optimal.clone());
            continue;
        }
        let actions: Vec<ActionId> = match spec.policy_style {
            PolicyStyle::Uniform => (0..spec.x_size)
                .map(|_| ActionId(rng.random_range(0..a)))
                .collect(),
            PolicyStyle::HotBiased { hot_prob } => (0..spec.x_size)
                .map(|x| {
                    let hot = &hot_sets[x];
                    if !hot.is_empty() && rng.random::<f64>() < hot_prob {
                        ActionId(hot[rng.random_range(0..hot.len())])
                    } else {
                        ActionId(rng.random_range(0..a))
                    }
                })
                .collect(),
            PolicyStyle::Tiered => {
                const TIERS: [usize; 4] = [2, 3, 4, usize::MAX];
                let d = TIERS[tier % TIERS.len()];
                tier += 1;
                if d == usize::MAX {
                    (0..spec.x_size).map(|_| ActionId(rng.random_range(0..a))).collect()
                } else {
                    let cold_at = distinct_indices(d.min(spec.x_size), spec.x_size, &mut rng);
                    (0..spec.x_size)
                        .map(|x| {
                            let hot = &hot_sets[x];
                            if cold_at.contains(&x) || hot.is_empty() {
                                // A cold action, drawn uniformly outside the
                                // hot set when possible.
                                loop {
                                    let c = rng.random_range(0..a);
                                    if !hot.contains(&c) || hot.len() == a {
                                        break ActionId(c);
                                    }
                                }
                            } else {
                                ActionId(hot[rng.random_range(0..hot.len())])
                            }
                        })
                        .collect()
                }
            }
        };
        policies.push(Policy::new(actions));
    }
    let class = PolicyClass::new(policies).expect("non-empty by construction");
    let diag = GenDiagnostics {
        optimal_index,
        optimal_value: crate::policy::policy_value_exact(&env, &optimal),
        duplicate_policies: class.duplicate_count(),
    };
    Ok((env, class, diag))
}

/// Single-context planted-arm instance: the reward vector is an exactly
/// `⌊s⌋`-sparse indicator drawn by systematic sampling against per-action
/// inclusion probabilities that are flat except for one planted arm raised by
/// `gap`. The policy class holds one single-action policy per candidate arm
/// (the planted one plus `pi_size − 1` random others), so ε-optimality with
/// `gap > ε` forces identifying the planted arm, and estimator variance
/// scales linearly with `s` through the flat inclusion level.
pub fn make_planted_env(
    a_size: usize,
    s: f64,
    gap: f64,
    pi_size: usize,
    stream: RngStream,
) -> Result<(Environment, PolicyClass, ActionId), EnvError> {
    let s_int = (s.floor() as usize).clamp(1, a_size);
    if !(1.0..=a_size as f64).contains(&s) {
        return Err(EnvError::SparsityOutOfRange(s));
    }
    if pi_size > a_size {
        return Err(EnvError::PolicyClassTooLarge {
            requested: pi_size as u128,
            available: a_size as u128,
        });
    }
    let mut rng = stream.rng();
    let star = rng.random_range(0..a_size);
    let sf = s_int as f64;
    let mu_star = (sf / a_size as f64 + gap).min(1.0);
    let mu_rest = (sf - mu_star) / (a_size as f64 - 1.0);
    assert!(mu_rest >= 0.0 && mu_star <= 1.0, "planted marginals out of range");
    let mu: Vec<f64> = (0..a_size).map(|a| if a == star { mu_star } else { mu_rest }).collect();

    // Systematic sampling: include a iff some integer k satisfies
    // cum[a] < k + u <= cum[a+1]; the subset is piecewise constant in u with
    // breakpoints at the fractional parts of the cumulative sums.
    let mut cum = vec![0.0; a_size + 1];
    for a in 0..a_size {
        cum[a + 1] = cum[a] + mu[a];
    }
    // The total is s by construction; snap away accumulated rounding so the
    // final breakpoint does not spawn a spurious sliver interval.
    debug_assert!((cum[a_size] - sf).abs() < 1e-9);
    cum[a_size] = sf;
    let mut cuts: Vec<f64> = cum.iter().map(|c| c.fract()).collect();
    cuts.push(0.0);
    cuts.push(1.0);
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    let mut atoms = Vec::new();
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi - lo <= 1e-15 {
            continue;
        }
        let u = 0.5 * (lo + hi);
        let mut r = vec![0.0; a_size];
        let mut count = 0;
        for a in 0..a_size {
            // Number of integers k with cum[a] < k + u <= cum[a+1].
            let included = (cum[a + 1] - u).floor() - (cum[a] - u).floor();
            if included >= 1.0 {
                r[a] = 1.0;
                count += 1;
            }
        }
        assert_eq!(count, s_int, "systematic sample is exactly s-sparse");
        atoms.push(RewardAtom { p: hi - lo, r: RewardVector(r) });
    }
    let env = Environment::new(
        vec![1.0],
        vec![atoms],
        Sparsity { mode: SparsityMode::L1, s },
        ActionSpace::Atomic(a_size),
    )?;

    // Exact marginal audit: the construction must reproduce mu.
    let means = env.mean_reward(ContextId(0));
    for (a, (&got, &want)) in means.iter().zip(&mu).enumerate() {
        assert!((got - want).abs() < 1e-9, "marginal {a}: {got} vs {want}");
    }

    let mut candidates = vec![star];
    while candidates.len() < pi_size {
        let a = rng.random_range(0..a_size);
        if !candidates.contains(&a) {
            candidates.push(a);
        }
    }
    // Shuffle so the planted arm is not always policy 0.
    for i in (1..candidates.len()).rev() {
        let j = rng.random_range(0..=i);
        candidates.swap(i, j);
    }
    let class = PolicyClass::new(
        candidates.iter().map(|&a| Policy::new(vec![ActionId(a)])).collect(),
    )
    .expect("non-empty by construction");
    Ok((env, class, ActionId(star)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiBanditEnvSpec {
    pub x_size: usize,
    pub k: usize,
    pub m: usize,
    pub s: f64,
    pub reward_style: RewardStyle,
    pub pi_size: usize,
    pub atoms_per_context: usize,
}

/// Generate a semi-bandit environment over m-subsets of `[K]` together with a
/// subset-policy class containing the pointwise-optimal policy.
pub fn make_semibandit_env(
    spec: &SemiBanditEnvSpec,
    stream: RngStream,
) -> Result<(Environment, SubsetPolicyClass, GenDiagnostics), EnvError> {
    let k = spec.k;
    if spec.m == 0 || spec.m > k {
        return Err(EnvError::BadSubsetSize { k, m: spec.m });
    }
    if !(1.0..=k as f64).contains(&spec.s) {
        return Err(EnvError::SparsityOutOfRange(spec.s));
    }
    let subsets_available = binomial(k as u128, spec.m as u128);
    check_class_size(spec.pi_size, subsets_available, spec.x_size)?;
    let mut rng = stream.rng();
    let s_int = (spec.s.floor() as usize).clamp(1, k);
    let atoms = match spec.reward_style {
        RewardStyle::SparseBinary => 1,
        _ => spec.atoms_per_context.max(1),
    };

    let context_probs = random_probs(spec.x_size, &mut rng);
    let mut reward_law = Vec::with_capacity(spec.x_size);
    for _ in 0..spec.x_size {
        let atom_probs = random_probs(atoms, &mut rng);
        let mut law = Vec::with_capacity(atoms);
        match spec.reward_style {
            RewardStyle::OneHot => {
                for &p in &atom_probs {
                    let label = rng.random_range(0..k);
                    let mut r = vec![0.0; k];
                    r[label] = 1.0;
                    law.push(RewardAtom { p, r: RewardVector(r) });
                }
            }
            RewardStyle::SparseBinary => {
                let set = distinct_indices(s_int, k, &mut rng);
                let mut r = vec![0.0; k];
                for &j in &set {
                    r[j] = 1.0;
                }
                law.push(RewardAtom { p: 1.0, r: RewardVector(r) });
            }
            RewardStyle::DenseScaled => {
                for &p in &atom_probs {
                    let mut r: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..=1.0)).collect();
                    let l1: f64 = r.iter().sum();
                    if l1 > spec.s {
                        let f = spec.s / l1;
                        for v in &mut r {
                            *v *= f;
                        }
                    }
                    law.push(RewardAtom { p, r: RewardVector(r) });
                }
            }
        }
        reward_law.push(law);
    }

    let env = Environment::new(
        context_probs,
        reward_law,
        Sparsity { mode: SparsityMode::L1, s: spec.s },
        ActionSpace::MSubset { k, m: spec.m },
    )?;

    // Top-m coordinates by conditional mean, per context.
    let top_m: Vec<SubsetAction> = (0..spec.x_size)
        .map(|x| {
            let means = env.mean_reward(ContextId(x));
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&i, &j| means[j].partial_cmp(&means[i]).unwrap().then(i.cmp(&j)));
            SubsetAction::new(order.into_iter().take(spec.m).collect(), k, spec.m)
                .expect("valid by construction")
        })
        .collect();
    let optimal = SubsetPolicy::new(top_m);

    let optimal_index = rng.random_range(0..spec.pi_size);
    let mut policies = Vec::with_capacity(spec.pi_size);
    for i in 0..spec.pi_size {
        if i == optimal_index {
            policies.push(optimal.clone());
            continue;
        }
        let fully_random = rng.random::<f64>() < 0.5;
        let subsets = (0..spec.x_size)
            .map(|x| {
                if fully_random {
                    uniform_msubset(k, spec.m, &mut rng).expect("valid (k, m)")
                } else {
                    // Mutate the optimal subset: swap a random number of
                    // members for uniform random outsiders.
                    let mut members: Vec<usize> = optimal.subset(ContextId(x)).members().to_vec();
                    let swaps = rng.random_range(0..=spec.m);
                    for _ in 0..swaps {
                        let slot = rng.random_range(0..spec.m);
                        let mut cand = rng.random_range(0..k);
                        while members.contains(&cand) {
                            cand = rng.random_range(0..k);
                        }
                        members[slot] = cand;
                    }
                    SubsetAction::new(members, k, spec.m).expect("swap keeps members distinct")
                }
            })
            .collect();
        policies.push(SubsetPolicy::new(subsets));
    }
    let class = SubsetPolicyClass::new(policies).expect("non-empty by construction");
    let diag = GenDiagnostics {
        optimal_index,
        optimal_value: crate::policy::subset_policy_value_exact(&env, &optimal),
        duplicate_policies: class.duplicate_count(),
    };
    Ok((env, class, diag))
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut out: u128 = 1;
    for i in 0..k {
        out = match out.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    out
}
