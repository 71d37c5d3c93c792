//! Finite-support contextual bandit environments.
//!
//! An [`Environment`] is a joint distribution over (context, reward vector)
//! pairs with finite support everywhere, which is what makes the
//! exact-expectation oracles throughout this crate (policy values, estimator
//! variances, unbiasedness identities) possible. Each environment carries a
//! sparsity certificate that is *validated*, not trusted: construction fails
//! if the declared `(mode, s)` does not actually hold on the support.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index into a finite context set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ContextId(pub usize);

/// Index into a finite action set (a coordinate of `[K]` in semi-bandit mode).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActionId(pub usize);

/// A reward vector over the action set (or over the `K` coordinates in
/// semi-bandit mode), entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RewardVector(pub Vec<f64>);

impl RewardVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, a: ActionId) -> f64 {
        self.0[a.0]
    }

    pub fn l1_norm(&self) -> f64 {
        self.0.iter().map(|v| v.abs()).sum()
    }

    pub fn sq_l2_norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }
}

/// Which certificate the environment's sparsity declaration uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SparsityMode {
    /// Every support vector satisfies `‖r‖₁ ≤ s`.
    L1,
    /// The exact expectation satisfies `E‖r‖₂² ≤ s` (weaker; checked in
    /// expectation over the whole environment, not per draw).
    L2,
}

/// A sparsity certificate `(mode, s)` with `s ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sparsity {
    pub mode: SparsityMode,
    pub s: f64,
}

/// The action structure: either a flat finite action set, or the m-subsets of
/// `[K]` used by the combinatorial semi-bandit algorithms. In both cases the
/// reward vector has one coordinate per base action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ActionSpace {
    Atomic(usize),
    MSubset { k: usize, m: usize },
}

impl ActionSpace {
    /// Length of the reward vectors (`|A|`, or `K` in semi-bandit mode).
    pub fn reward_dim(&self) -> usize {
        match *self {
            ActionSpace::Atomic(n) => n,
            ActionSpace::MSubset { k, .. } => k,
        }
    }
}

/// One support point of a per-context reward law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardAtom {
    pub p: f64,
    pub r: RewardVector,
}

pub const PROB_TOL: f64 = 1e-12;
pub const CERT_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("context probabilities sum to {0}, expected 1")]
    ContextProbsNotNormalized(f64),
    #[error("reward law for context {0} sums to {1}, expected 1")]
    RewardLawNotNormalized(usize, f64),
    #[error("negative probability encountered")]
    NegativeProbability,
    #[error("reward entry {0} outside [0, 1]")]
    RewardOutOfRange(f64),
    #[error("reward vector has length {got}, expected {want}")]
    RewardDimMismatch { got: usize, want: usize },
    #[error("sparsity certificate violated: {0}")]
    SparsityViolated(String),
    #[error("sparsity parameter s = {0} outside [1, reward dim]")]
    SparsityOutOfRange(f64),
    #[error("environment must have at least one context")]
    NoContexts,
    #[error("subset size m = {m} outside [1, {k}]")]
    BadSubsetSize { k: usize, m: usize },
    #[error("epsilon = {0} outside (0, 1)")]
    BadEpsilon(f64),
    #[error("requested policy class size {requested} exceeds |A|^|X| = {available}")]
    PolicyClassTooLarge { requested: u128, available: u128 },
}

/// A finite-support joint distribution over contexts and reward vectors,
/// with a validated sparsity certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    #[serde(rename = "contexts")]
    context_probs: Vec<f64>,
    #[serde(rename = "rewards")]
    reward_law: Vec<Vec<RewardAtom>>,
    sparsity: Sparsity,
    actions: ActionSpace,
}

impl Environment {
    pub fn new(
        context_probs: Vec<f64>,
        reward_law: Vec<Vec<RewardAtom>>,
        sparsity: Sparsity,
        actions: ActionSpace,
    ) -> Result<Self, EnvError> {
        let env = Self { context_probs, reward_law, sparsity, actions };
        env.validate()?;
        Ok(env)
    }

    /// Re-check every invariant: normalization, ranges, and the sparsity
    /// certificate of the declared mode.
    pub fn validate(&self) -> Result<(), EnvError> {
        if self.context_probs.is_empty() {
            return Err(EnvError::NoContexts);
        }
        if let ActionSpace::MSubset { k, m } = self.actions {
            if m == 0 || m > k {
                return Err(EnvError::BadSubsetSize { k, m });
            }
        }
        let dim = self.actions.reward_dim();
        if !(1.0..=dim as f64).contains(&self.sparsity.s) {
            return Err(EnvError::SparsityOutOfRange(self.sparsity.s));
        }
        if self.context_probs.iter().any(|&p| p < 0.0) {
            return Err(EnvError::NegativeProbability);
        }
        let total: f64 = self.context_probs.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(EnvError::ContextProbsNotNormalized(total));
        }
        for (x, law) in self.reward_law.iter().enumerate() {
            if law.iter().any(|a| a.p < 0.0) {
                return Err(EnvError::NegativeProbability);
            }
            let mass: f64 = law.iter().map(|a| a.p).sum();
            if (mass - 1.0).abs() > PROB_TOL {
                return Err(EnvError::RewardLawNotNormalized(x, mass));
            }
            for atom in law {
                if atom.r.len() != dim {
                    return Err(EnvError::RewardDimMismatch { got: atom.r.len(), want: dim });
                }
                for &v in &atom.r.0 {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(EnvError::RewardOutOfRange(v));
                    }
                }
            }
        }
        match self.sparsity.mode {
            SparsityMode::L1 => {
                for law in &self.reward_law {
                    for atom in law {
                        let l1 = atom.r.l1_norm();
                        if l1 > self.sparsity.s + CERT_TOL {
                            return Err(EnvError::SparsityViolated(format!(
                                "support vector with ‖r‖₁ = {l1} > s = {}",
                                self.sparsity.s
                            )));
                        }
                    }
                }
            }
            SparsityMode::L2 => {
                let e = self.expected_sq_l2();
                if e > self.sparsity.s + CERT_TOL {
                    return Err(EnvError::SparsityViolated(format!(
                        "E‖r‖₂² = {e} > s = {}",
                        self.sparsity.s
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn context_count(&self) -> usize {
        self.context_probs.len()
    }

    pub fn context_probs(&self) -> &[f64] {
        &self.context_probs
    }

    pub fn reward_law(&self, x: ContextId) -> &[RewardAtom] {
        &self.reward_law[x.0]
    }

    pub fn sparsity(&self) -> Sparsity {
        self.sparsity
    }

    pub fn actions(&self) -> ActionSpace {
        self.actions
    }

    /// `|A|` for atomic environments, `K` for semi-bandit ones.
    pub fn reward_dim(&self) -> usize {
        self.actions.reward_dim()
    }

    /// Exact `E[r | x]`, one entry per base action.
    pub fn mean_reward(&self, x: ContextId) -> Vec<f64> {
        let mut out = vec![0.0; self.reward_dim()];
        for atom in &self.reward_law[x.0] {
            for (o, v) in out.iter_mut().zip(&atom.r.0) {
                *o += atom.p * v;
            }
        }
        out
    }

    /// Exact `E‖r‖₂²` over the whole environment.
    pub fn expected_sq_l2(&self) -> f64 {
        self.context_probs
            .iter()
            .zip(&self.reward_law)
            .map(|(&px, law)| {
                px * law.iter().map(|a| a.p * a.r.sq_l2_norm()).sum::<f64>()
            })
            .sum()
    }

    /// Draw one `(x, r)` pair from the joint law. Consumes exactly two uniform
    /// draws from `rng` (context, then reward atom).
    pub fn sample_round<R: rand::Rng>(&self, rng: &mut R) -> (ContextId, RewardVector) {
        let x = crate::rng::sample_index(&self.context_probs, rng);
        let law = &self.reward_law[x];
        let probs: Vec<f64> = law.iter().map(|a| a.p).collect();
        let atom = crate::rng::sample_index(&probs, rng);
        (ContextId(x), law[atom].r.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn one_hot_env() -> Environment {
        // |X| = 1, deterministic r = (1, 0).
        Environment::new(
            vec![1.0],
            vec![vec![RewardAtom { p: 1.0, r: RewardVector(vec![1.0, 0.0]) }]],
            Sparsity { mode: SparsityMode::L1, s: 1.0 },
            ActionSpace::Atomic(2),
        )
        .unwrap()
    }

    #[test]
    fn deterministic_law_always_returns_same_round() {
        let env = one_hot_env();
        let mut rng = RngStream::new(0).rng();
        for _ in 0..50 {
            let (x, r) = env.sample_round(&mut rng);
            assert_eq!(x, ContextId(0));
            assert_eq!(r.0, vec![1.0, 0.0]);
        }
    }

    #[test]
    fn two_equal_mass_contexts_have_balanced_frequencies() {
        let law = vec![RewardAtom { p: 1.0, r: RewardVector(vec![0.0]) }];
        let env = Environment::new(
            vec![0.5, 0.5],
            vec![law.clone(), law],
            Sparsity { mode: SparsityMode::L1, s: 1.0 },
            ActionSpace::Atomic(1),
        )
        .unwrap();
        let mut rng = RngStream::new(11).rng();
        let n = 100_000;
        let mut c0 = 0usize;
        for _ in 0..n {
            if env.sample_round(&mut rng).0 == ContextId(0) {
                c0 += 1;
            }
        }
        let freq = c0 as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.01, "freq = {freq}");
    }

    #[test]
    fn validation_rejects_unnormalized_contexts() {
        let err = Environment::new(
            vec![0.6, 0.6],
            vec![
                vec![RewardAtom { p: 1.0, r: RewardVector(vec![0.0]) }],
                vec![RewardAtom { p: 1.0, r: RewardVector(vec![0.0]) }],
            ],
            Sparsity { mode: SparsityMode::L1, s: 1.0 },
            ActionSpace::Atomic(1),
        )
        .unwrap_err();
        assert!(matches!(err, EnvError::ContextProbsNotNormalized(_)));
    }

    #[test]
    fn validation_rejects_l1_violation() {
        let err = Environment::new(
            vec![1.0],
            vec![vec![RewardAtom { p: 1.0, r: RewardVector(vec![1.0, 1.0, 1.0]) }]],
            Sparsity { mode: SparsityMode::L1, s: 2.0 },
            ActionSpace::Atomic(3),
        )
        .unwrap_err();
        assert!(matches!(err, EnvError::SparsityViolated(_)));
    }

    #[test]
    fn l2_certificate_is_checked_in_expectation_not_per_draw() {
        // A vector with ‖r‖₂² = 3 on a low-probability atom still passes when
        // the exact expectation stays below s.
        let env = Environment::new(
            vec![1.0],
            vec![vec![
                RewardAtom { p: 0.1, r: RewardVector(vec![1.0, 1.0, 1.0]) },
                RewardAtom { p: 0.9, r: RewardVector(vec![0.0, 0.0, 0.0]) },
            ]],
            Sparsity { mode: SparsityMode::L2, s: 1.0 },
            ActionSpace::Atomic(3),
        )
        .unwrap();
        assert!((env.expected_sq_l2() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let env = Environment::new(
            vec![0.1, 0.9],
            vec![
                vec![RewardAtom { p: 0.25, r: RewardVector(vec![0.3, 1.0]) },
                     RewardAtom { p: 0.75, r: RewardVector(vec![0.0, 0.0]) }],
                vec![RewardAtom { p: 1.0, r: RewardVector(vec![0.0, 0.12345678901234567]) }],
            ],
            Sparsity { mode: SparsityMode::L2, s: 1.0 },
            ActionSpace::Atomic(2),
        )
        .unwrap();
        let json = serde_json::to_string(&env).unwrap();
        let back: Environment = serde_json::from_str(&json).unwrap();
        assert_eq!(env, back);
        assert_eq!(json, serde_json::to_string(&back).unwrap());
    }
}
