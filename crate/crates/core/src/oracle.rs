//! The bandit-feedback boundary.
//!
//! Algorithms never touch a raw reward vector: they see a context, commit to
//! an action, and receive only that action's reward (or the chosen
//! coordinates, under semi-bandit feedback). Everything else stays on the
//! environment side of this trait. The draw counter doubles as the budget
//! audit used by the experiment harness.

use rand_chacha::ChaCha8Rng;

use crate::env::{ActionId, ContextId, Environment, RewardVector};
use crate::policy::SubsetAction;

pub trait RoundOracle {
    /// Start a round: draw `(x, r)` from the joint law, reveal only `x`.
    fn next_context(&mut self) -> ContextId;
    /// Reveal `r(a)` for the pending round.
    fn observe(&mut self, a: ActionId) -> f64;
    /// Reveal `(r(j))_{j ∈ subset}` for the pending round.
    fn observe_subset(&mut self, subset: &SubsetAction) -> Vec<f64>;
    /// Environment draws so far.
    fn draws(&self) -> u64;
}

pub struct EnvOracle<'a> {
    env: &'a Environment,
    rng: ChaCha8Rng,
    pending: Option<RewardVector>,
    draws: u64,
}

impl<'a> EnvOracle<'a> {
    pub fn new(env: &'a Environment, rng: ChaCha8Rng) -> Self {
        Self { env, rng, pending: None, draws: 0 }
    }
}

impl RoundOracle for EnvOracle<'_> {
    fn next_context(&mut self) -> ContextId {
        let (x, r) = self.env.sample_round(&mut self.rng);
        self.pending = Some(r);
        self.draws += 1;
        x
    }

    fn observe(&mut self, a: ActionId) -> f64 {
        let r = self.pending.take().expect("observe called without a pending round");
        r.get(a)
    }

    fn observe_subset(&mut self, subset: &SubsetAction) -> Vec<f64> {
        let r = self.pending.take().expect("observe called without a pending round");
        subset.members().iter().map(|&j| r.0[j]).collect()
    }

    fn draws(&self) -> u64 {
        self.draws
    }
}

/// Oracle that overwrites every unobserved reward coordinate with garbage
/// before answering. Running an algorithm against this wrapper and against
/// the plain [`EnvOracle`] on the same stream must produce identical output;
/// the firewall tests use exactly that comparison.
pub struct CorruptingOracle<'a> {
    inner: EnvOracle<'a>,
    pending: Option<RewardVector>,
}

impl<'a> CorruptingOracle<'a> {
    pub fn new(env: &'a Environment, rng: ChaCha8Rng) -> Self {
        Self { inner: EnvOracle::new(env, rng), pending: None }
    }
}

impl RoundOracle for CorruptingOracle<'_> {
    fn next_context(&mut self) -> ContextId {
        let x = self.inner.next_context();
        self.pending = self.inner.pending.take();
        x
    }

    fn observe(&mut self, a: ActionId) -> f64 {
        let mut r = self.pending.take().expect("observe called without a pending round");
        let kept = r.get(a);
        for (j, v) in r.0.iter_mut().enumerate() {
            if j != a.0 {
                *v = 0.77 + 0.01 * j as f64; // deterministic garbage, no rng use
            }
        }
        kept
    }

    fn observe_subset(&mut self, subset: &SubsetAction) -> Vec<f64> {
        let mut r = self.pending.take().expect("observe called without a pending round");
        let kept: Vec<f64> = subset.members().iter().map(|&j| r.0[j]).collect();
        for (j, v) in r.0.iter_mut().enumerate() {
            if !subset.contains(j) {
                *v = 0.77 + 0.01 * j as f64;
            }
        }
        kept
    }

    fn draws(&self) -> u64 {
        self.inner.draws()
    }
}
