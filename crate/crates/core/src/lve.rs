//! Two-phase low-variance exploration for contextual bandits with sparse
//! rewards.
//!
//! Phase I plays uniformly random actions while running Hedge over the policy
//! class on adaptively built reward vectors; the empirical distribution of the
//! sampled policies becomes the exploration distribution. Phase II mixes that
//! distribution with uniform exploration and picks the policy maximizing an
//! importance-weighted reward estimate whose variance Phase I made small for
//! every comparator simultaneously.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{ActionId, ContextId, EnvError, Environment};
use crate::mwu::{MwuError, WeightVector};
use crate::oracle::{EnvOracle, RoundOracle};
use crate::policy::{best_policy_value, policy_value_exact, Policy, PolicyClass, PolicyError};
use crate::report::RunReport;
use crate::rng::{labels, sample_index, RngStream};

#[derive(Debug, Error)]
pub enum LveError {
    #[error(transparent)]
    Mwu(#[from] MwuError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("phase II needs at least one round")]
    EmptyPhase2,
    #[error("gamma = {0} outside (0, 1/2]")]
    BadGamma(f64),
    #[error("eps/delta must lie in (0, 1)")]
    BadTarget,
    #[error("T and n must be positive")]
    EmptyPhase1,
}

/// Parameters of a two-phase run. `t_multiplier`/`n_multiplier` absorb the
/// constants of the sample-complexity rate; they were calibrated once
/// against the acceptance sweeps and are frozen at (8, 16).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LveConfig {
    pub t_rounds: usize,
    pub n_rounds: usize,
    pub eta: f64,
    pub gamma: f64,
    pub t_multiplier: f64,
    pub n_multiplier: f64,
}

pub const DEFAULT_T_MULTIPLIER: f64 = 8.0;
pub const DEFAULT_N_MULTIPLIER: f64 = 16.0;

/// Smallest admissible gamma; anything lower is user error and gets floored
/// loudly so the `|A|/γ` reward bound stays finite.
pub const GAMMA_FLOOR: f64 = 1e-6;

impl LveConfig {
    /// The prescribed settings: `γ = 1/2`, `η = γ/|A|`,
    /// `T = ⌈mult·(|A|/ε)·log(|Π|/δ)·log(1/ε)⌉` and
    /// `n = ⌈mult·(|A|/ε + s/ε²)·log(|Π|/δ)·log(1/ε)⌉`, with the log factor
    /// standing in for the Θ̃.
    pub fn derive(
        eps: f64,
        delta: f64,
        a_size: usize,
        pi_size: usize,
        s: f64,
    ) -> Result<Self, LveError> {
        Self::derive_scaled(eps, delta, a_size, pi_size, s, 1.0)
    }

    /// Same derivation with both budgets scaled by `budget_scale`; the
    /// sample-complexity search drives this knob.
    pub fn derive_scaled(
        eps: f64,
        delta: f64,
        a_size: usize,
        pi_size: usize,
        s: f64,
        budget_scale: f64,
    ) -> Result<Self, LveError> {
        Self::derive_with_multipliers(
            eps,
            delta,
            a_size,
            pi_size,
            s,
            DEFAULT_T_MULTIPLIER * budget_scale,
            DEFAULT_N_MULTIPLIER * budget_scale,
        )
    }

    /// Full control over the Θ̃ constants.
    pub fn derive_with_multipliers(
        eps: f64,
        delta: f64,
        a_size: usize,
        pi_size: usize,
        s: f64,
        t_multiplier: f64,
        n_multiplier: f64,
    ) -> Result<Self, LveError> {
        if !(0.0..1.0).contains(&eps) || eps == 0.0 || !(0.0..1.0).contains(&delta) || delta == 0.0
        {
            return Err(LveError::BadTarget);
        }
        let gamma = 0.5;
        let a = a_size as f64;
        let logs = (pi_size as f64 / delta).ln() * (1.0 / eps).ln().max(1.0);
        let t = (t_multiplier * (a / eps) * logs).ceil() as usize;
        let n = (n_multiplier * (a / eps + s / (eps * eps)) * logs).ceil() as usize;
        Ok(Self {
            t_rounds: t.max(1),
            n_rounds: n.max(1),
            eta: gamma / a,
            gamma,
            t_multiplier,
            n_multiplier,
        })
    }

    /// Floor gamma and check ranges. Returns the possibly-floored config.
    pub fn validated(mut self) -> Result<Self, LveError> {
        if self.gamma <= 0.0 || self.gamma > 0.5 {
            return Err(LveError::BadGamma(self.gamma));
        }
        if self.gamma < GAMMA_FLOOR {
            eprintln!(
                "[lve] gamma = {} below floor, clamping to {GAMMA_FLOOR}; \
                 the reward bound |A|/gamma was about to explode",
                self.gamma
            );
            self.gamma = GAMMA_FLOOR;
        }
        if self.t_rounds == 0 || self.n_rounds == 0 {
            return Err(LveError::EmptyPhase1);
        }
        Ok(self)
    }
}

/// The exploration distribution fixed at the end of Phase I: the selected
/// policy sequence plus the per-context action counts it induces.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationDistribution {
    selected: Vec<usize>,
    counts: Vec<Vec<u32>>,
}

impl ExplorationDistribution {
    /// Build from an explicit selection sequence (used by tests to assemble
    /// arbitrary exploration distributions).
    pub fn from_selected(
        class: &PolicyClass,
        x_count: usize,
        a_count: usize,
        selected: Vec<usize>,
    ) -> Self {
        let mut counts = vec![vec![0u32; a_count]; x_count];
        for &pi in &selected {
            let policy = class.get(pi);
            for (x, row) in counts.iter_mut().enumerate() {
                row[policy.action(ContextId(x)).0] += 1;
            }
        }
        Self { selected, counts }
    }

    /// Assemble from a selection sequence and a precomputed count table
    /// (the semi-bandit phase counts coordinate inclusions instead of
    /// single-action agreements, but the shape is the same).
    pub(crate) fn from_parts(selected: Vec<usize>, counts: Vec<Vec<u32>>) -> Self {
        Self { selected, counts }
    }

    pub fn t_rounds(&self) -> usize {
        self.selected.len()
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    /// `p̂(π) = (1/T)·#{t : π_t = π}`.
    pub fn p_hat(&self, pi_count: usize) -> Vec<f64> {
        let mut counts = vec![0u32; pi_count];
        for &i in &self.selected {
            counts[i] += 1;
        }
        let t = self.selected.len() as f64;
        counts.into_iter().map(|c| c as f64 / t).collect()
    }

    /// Marginal `Q̃_{p̂,x}(a) = (1/T)·#{t : π_t(x) = a}`.
    pub fn marginal(&self, x: ContextId, a: ActionId) -> f64 {
        self.counts[x.0][a.0] as f64 / self.selected.len() as f64
    }
}

/// One Phase-I round as the algorithm saw it. Only the observed scalar
/// `r_t(a_t)` is ever stored; the rest of the reward vector never crosses
/// the feedback boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub t: usize,
    pub context: ContextId,
    pub action: ActionId,
    pub observed: f64,
    pub policy_index: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Phase1Trace {
    pub rounds: Vec<RoundLog>,
}

/// Phase I. Draws contexts and uniform actions, feeds the rewards
/// `u_t(π) = r_t(a_t)²·1{π(x_t)=a_t} / (γ/|A| + (1−γ)·(1/T)·Σ_{s<t} 1{π_s(x_t)=a_t})`
/// to Hedge, and returns the empirical distribution of the sampled policies.
///
/// Per round this consumes one environment draw, one uniform action draw and
/// one policy-sample draw, in that order.
pub fn phase1(
    env: &Environment,
    class: &PolicyClass,
    cfg: &LveConfig,
    stream: RngStream,
) -> Result<(ExplorationDistribution, Phase1Trace), LveError> {
    class.validate_for(env)?;
    let mut oracle = EnvOracle::new(env, stream.substream(labels::ENV_PHASE1).rng());
    phase1_with_oracle(&mut oracle, env.reward_dim(), env.context_count(), class, cfg, stream)
}

/// Phase I against an injected feedback oracle (the firewall tests corrupt
/// unobserved coordinates through this entry point).
pub fn phase1_with_oracle(
    oracle: &mut dyn RoundOracle,
    a_count: usize,
    x_count: usize,
    class: &PolicyClass,
    cfg: &LveConfig,
    stream: RngStream,
) -> Result<(ExplorationDistribution, Phase1Trace), LveError> {
    let cfg = cfg.validated()?;
    let draws_at_entry = oracle.draws();
    let mut alg = stream.substream(labels::ALG_PHASE1).rng();
    let reward_bound = a_count as f64 / cfg.gamma;
    let mut weights = WeightVector::uniform(class.len(), cfg.eta, reward_bound)?;
    let t_total = cfg.t_rounds;
    let mut counts = vec![vec![0u32; a_count]; x_count];
    let mut selected = Vec::with_capacity(t_total);
    let mut trace = Phase1Trace { rounds: Vec::with_capacity(t_total) };
    let mut u = vec![0.0; class.len()];

    for t in 1..=t_total {
        let x = oracle.next_context();
        let a = ActionId(alg.random_range(0..a_count));
        let obs = oracle.observe(a);
        let pi_t = weights.sample(&mut alg);

        // Counts of π_s for s < t only; π_t enters after the update.
        let denom = cfg.gamma / a_count as f64
            + (1.0 - cfg.gamma) * counts[x.0][a.0] as f64 / t_total as f64;
        let gain = obs * obs / denom;
        assert!(
            gain <= reward_bound + 1e-9,
            "phase-1 reward {gain} exceeds |A|/gamma = {reward_bound}"
        );
        u.iter_mut().for_each(|v| *v = 0.0);
        for (i, pi) in class.iter().enumerate() {
            if pi.action(x) == a {
                u[i] = gain;
            }
        }
        weights = weights.hedge_step(&u)?;

        let chosen = class.get(pi_t);
        for (cx, row) in counts.iter_mut().enumerate() {
            row[chosen.action(ContextId(cx)).0] += 1;
        }
        selected.push(pi_t);
        trace.rounds.push(RoundLog { t, context: x, action: a, observed: obs, policy_index: pi_t });
    }

    assert_eq!(
        oracle.draws() - draws_at_entry,
        t_total as u64,
        "phase 1 must consume exactly T environment draws"
    );
    Ok((ExplorationDistribution { selected, counts }, trace))
}

/// Exact Phase-I variance diagnostic for one policy:
/// `E_{(x,r)}[ Σ_a r(a)²·1{π(x)=a} / (γ/|A| + (1−γ)·Q̃_{p̂,x}(a)) ]`,
/// summed over the environment's finite support.
pub fn estimator_variance_exact(
    env: &Environment,
    ed: &ExplorationDistribution,
    gamma: f64,
    pi: &Policy,
) -> f64 {
    let a_count = env.reward_dim() as f64;
    env.context_probs()
        .iter()
        .enumerate()
        .map(|(x, &px)| {
            let a = pi.action(ContextId(x));
            let denom = gamma / a_count + (1.0 - gamma) * ed.marginal(ContextId(x), a);
            px * env
                .reward_law(ContextId(x))
                .iter()
                .map(|atom| {
                    let r = atom.r.get(a);
                    atom.p * r * r
                })
                .sum::<f64>()
                / denom
        })
        .sum()
}

/// Exact expectation of the Phase-II estimator `R_i(π)` under the γ-mixed
/// action law — evaluated term by term, without using the algebraic
/// cancellation that makes it equal to the policy value. The unbiasedness
/// tests compare this against [`policy_value_exact`].
pub fn estimator_mean_exact(
    env: &Environment,
    class: &PolicyClass,
    ed: &ExplorationDistribution,
    gamma: f64,
    pi: &Policy,
) -> f64 {
    let a_count = env.reward_dim();
    let p_hat = ed.p_hat(class.len());
    env.context_probs()
        .iter()
        .enumerate()
        .map(|(x, &px)| {
            let xid = ContextId(x);
            let mut inner = 0.0;
            for atom in env.reward_law(xid) {
                for a in 0..a_count {
                    if pi.action(xid) != ActionId(a) {
                        continue;
                    }
                    // P[a_i = a | x] under the γ-mix of uniform and p̂.
                    let q_marg = crate::policy::marginal_action_prob(&p_hat, class, xid, ActionId(a));
                    let p_action = gamma / a_count as f64 + (1.0 - gamma) * q_marg;
                    let denom =
                        gamma / a_count as f64 + (1.0 - gamma) * ed.marginal(xid, ActionId(a));
                    inner += atom.p * p_action * atom.r.get(ActionId(a)) / denom;
                }
            }
            px * inner
        })
        .sum()
}

/// Phase II: γ-mixed sampling and importance-weighted estimation. Returns the
/// argmax policy (lowest index on ties) and the estimate vector divided by n.
///
/// Per round: one environment draw, one γ-coin draw, one action-or-policy draw.
pub fn phase2(
    env: &Environment,
    class: &PolicyClass,
    ed: &ExplorationDistribution,
    cfg: &LveConfig,
    stream: RngStream,
) -> Result<(usize, Vec<f64>), LveError> {
    class.validate_for(env)?;
    let mut oracle = EnvOracle::new(env, stream.substream(labels::ENV_PHASE2).rng());
    phase2_with_oracle(&mut oracle, env.reward_dim(), env.context_count(), class, ed, cfg, stream)
}

pub fn phase2_with_oracle(
    oracle: &mut dyn RoundOracle,
    a_count: usize,
    x_count: usize,
    class: &PolicyClass,
    ed: &ExplorationDistribution,
    cfg: &LveConfig,
    stream: RngStream,
) -> Result<(usize, Vec<f64>), LveError> {
    let cfg = cfg.validated()?;
    if cfg.n_rounds == 0 {
        return Err(LveError::EmptyPhase2);
    }
    let draws_at_entry = oracle.draws();
    let mut alg = stream.substream(labels::ALG_PHASE2).rng();
    let p_hat = ed.p_hat(class.len());

    // Policies grouped by the action they play at each context, so a round
    // only touches the matching policies.
    let mut by_action: Vec<Vec<Vec<u32>>> = vec![vec![Vec::new(); a_count]; x_count];
    for (i, pi) in class.iter().enumerate() {
        for (x, groups) in by_action.iter_mut().enumerate() {
            groups[pi.action(ContextId(x)).0].push(i as u32);
        }
    }

    let mut sums = vec![0.0; class.len()];
    for _ in 0..cfg.n_rounds {
        let x = oracle.next_context();
        let coin: f64 = alg.random();
        let a = if coin < cfg.gamma {
            ActionId(alg.random_range(0..a_count))
        } else {
            let pi_i = sample_index(&p_hat, &mut alg);
            class.get(pi_i).action(x)
        };
        let obs = oracle.observe(a);
        if obs != 0.0 {
            let denom =
                cfg.gamma / a_count as f64 + (1.0 - cfg.gamma) * ed.marginal(x, a);
            let inc = obs / denom;
            for &i in &by_action[x.0][a.0] {
                sums[i as usize] += inc;
            }
        }
    }

    assert_eq!(
        oracle.draws() - draws_at_entry,
        cfg.n_rounds as u64,
        "phase 2 must consume exactly n environment draws"
    );
    let chosen = argmax_lowest(&sums);
    let n = cfg.n_rounds as f64;
    let estimates: Vec<f64> = sums.iter().map(|v| v / n).collect();
    Ok((chosen, estimates))
}

/// Index of the largest value, lowest index on ties.
pub fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = f64::NEG_INFINITY;
    let mut idx = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > best {
            best = v;
            idx = i;
        }
    }
    idx
}

/// Full two-phase run with the derived parameters. Phase I and
/// Phase II consume independent sub-streams of `stream`.
pub fn run_lve(
    env: &Environment,
    class: &PolicyClass,
    eps: f64,
    delta: f64,
    overrides: Option<LveConfig>,
    stream: RngStream,
) -> Result<RunReport, LveError> {
    let cfg = match overrides {
        Some(c) => c.validated()?,
        None => LveConfig::derive(eps, delta, env.reward_dim(), class.len(), env.sparsity().s)?,
    };
    let (ed, _trace) = phase1(env, class, &cfg, stream)?;
    let (chosen, _estimates) = phase2(env, class, &ed, &cfg, stream)?;

    let (best, _) = best_policy_value(env, class);
    let suboptimality = best - policy_value_exact(env, class.get(chosen));
    let variance_by_policy: Vec<f64> = class
        .iter()
        .map(|pi| estimator_variance_exact(env, &ed, cfg.gamma, pi))
        .collect();

    Ok(RunReport {
        config: serde_json::json!({
            "algorithm": "lve",
            "eps": eps,
            "delta": delta,
            "t_rounds": cfg.t_rounds,
            "n_rounds": cfg.n_rounds,
            "eta": cfg.eta,
            "gamma": cfg.gamma,
            "t_multiplier": cfg.t_multiplier,
            "n_multiplier": cfg.n_multiplier,
        }),
        samples_total: (cfg.t_rounds + cfg.n_rounds) as u64,
        chosen_policy: chosen,
        suboptimality,
        variance_by_policy,
        seed: stream.seed,
    })
}
