//! Policies, policy classes, and exact policy evaluation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{ActionId, ContextId, Environment};

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("policy maps {got} contexts, environment has {want}")]
    ContextCountMismatch { got: usize, want: usize },
    #[error("policy targets action {0} outside the action set")]
    ActionOutOfRange(usize),
    #[error("subset action must have exactly {want} members, got {got}")]
    BadSubsetSize { got: usize, want: usize },
    #[error("subset member {0} outside [K]")]
    MemberOutOfRange(usize),
    #[error("subset members must be strictly increasing")]
    UnsortedMembers,
    #[error("policy class must contain at least one policy")]
    EmptyClass,
}

/// A deterministic map from contexts to actions, stored as a table.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Policy {
    actions: Vec<ActionId>,
}

impl Policy {
    pub fn new(actions: Vec<ActionId>) -> Self {
        Self { actions }
    }

    pub fn action(&self, x: ContextId) -> ActionId {
        self.actions[x.0]
    }

    pub fn context_count(&self) -> usize {
        self.actions.len()
    }
}

/// An indexed finite collection of policies. Duplicates are permitted; they
/// are reported through [`PolicyClass::duplicate_count`] rather than rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyClass {
    policies: Vec<Policy>,
}

impl PolicyClass {
    pub fn new(policies: Vec<Policy>) -> Result<Self, PolicyError> {
        if policies.is_empty() {
            return Err(PolicyError::EmptyClass);
        }
        Ok(Self { policies })
    }

    pub fn len(&self) -> usize {
        self.policies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.policies.is_empty()
    }

    pub fn get(&self, i: usize) -> &Policy {
        &self.policies[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Policy> {
        self.policies.iter()
    }

    /// Number of policies that duplicate an earlier entry.
    pub fn duplicate_count(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        self.policies.iter().filter(|p| !seen.insert(&p.actions)).count()
    }

    /// Check every policy against an environment's context and action counts.
    pub fn validate_for(&self, env: &Environment) -> Result<(), PolicyError> {
        let want = env.context_count();
        let a = env.reward_dim();
        for p in &self.policies {
            if p.context_count() != want {
                return Err(PolicyError::ContextCountMismatch { got: p.context_count(), want });
            }
            if let Some(bad) = p.actions.iter().find(|id| id.0 >= a) {
                return Err(PolicyError::ActionOutOfRange(bad.0));
            }
        }
        Ok(())
    }
}

/// A sorted m-subset of `[K]`, the action type of the semi-bandit setting.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubsetAction {
    members: Vec<usize>,
}

impl SubsetAction {
    pub fn new(mut members: Vec<usize>, k: usize, m: usize) -> Result<Self, PolicyError> {
        members.sort_unstable();
        if members.len() != m {
            return Err(PolicyError::BadSubsetSize { got: members.len(), want: m });
        }
        if members.windows(2).any(|w| w[0] == w[1]) {
            return Err(PolicyError::UnsortedMembers);
        }
        if let Some(&bad) = members.iter().find(|&&j| j >= k) {
            return Err(PolicyError::MemberOutOfRange(bad));
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn contains(&self, j: usize) -> bool {
        self.members.binary_search(&j).is_ok()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// A deterministic map from contexts to m-subsets.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubsetPolicy {
    subsets: Vec<SubsetAction>,
}

impl SubsetPolicy {
    pub fn new(subsets: Vec<SubsetAction>) -> Self {
        Self { subsets }
    }

    pub fn subset(&self, x: ContextId) -> &SubsetAction {
        &self.subsets[x.0]
    }

    pub fn context_count(&self) -> usize {
        self.subsets.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetPolicyClass {
    policies: Vec<SubsetPolicy>,
}

impl SubsetPolicyClass {
    pub fn new(policies: Vec<SubsetPolicy>) -> Result<Self, PolicyError> {
        if policies.is_empty() {
            return Err(PolicyError::EmptyClass);
        }
        Ok(Self { policies })
    }

    pub fn len(&self) -> usize {
        self.policies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.policies.is_empty()
    }

    pub fn get(&self, i: usize) -> &SubsetPolicy {
        &self.policies[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &SubsetPolicy> {
        self.policies.iter()
    }

    pub fn duplicate_count(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        self.policies.iter().filter(|p| !seen.insert(&p.subsets)).count()
    }
}

/// Marginal probability of predicting action `a` at context `x` when the
/// policy is drawn from the distribution `p` over the class.
pub fn marginal_action_prob(p: &[f64], class: &PolicyClass, x: ContextId, a: ActionId) -> f64 {
    debug_assert_eq!(p.len(), class.len());
    p.iter()
        .zip(class.iter())
        .filter(|(_, pi)| pi.action(x) == a)
        .map(|(w, _)| w)
        .sum()
}

/// Marginal probability that coordinate `j` is included in the predicted
/// subset at context `x`, for `p` a distribution over a subset-policy class.
pub fn marginal_coord_prob(p: &[f64], class: &SubsetPolicyClass, x: ContextId, j: usize) -> f64 {
    debug_assert_eq!(p.len(), class.len());
    p.iter()
        .zip(class.iter())
        .filter(|(_, pi)| pi.subset(x).contains(j))
        .map(|(w, _)| w)
        .sum()
}

/// Exact population reward of a deterministic policy: `Σ_x ρ(x)·E[r(π(x)) | x]`.
pub fn policy_value_exact(env: &Environment, pi: &Policy) -> f64 {
    env.context_probs()
        .iter()
        .enumerate()
        .map(|(x, &px)| {
            let a = pi.action(ContextId(x));
            px * env
                .reward_law(ContextId(x))
                .iter()
                .map(|atom| atom.p * atom.r.get(a))
                .sum::<f64>()
        })
        .sum()
}

/// Exact population reward of a subset policy: `Σ_x ρ(x)·E[Σ_{j∈π(x)} r(j) | x]`.
pub fn subset_policy_value_exact(env: &Environment, pi: &SubsetPolicy) -> f64 {
    env.context_probs()
        .iter()
        .enumerate()
        .map(|(x, &px)| {
            let subset = pi.subset(ContextId(x));
            px * env
                .reward_law(ContextId(x))
                .iter()
                .map(|atom| {
                    atom.p * subset.members().iter().map(|&j| atom.r.0[j]).sum::<f64>()
                })
                .sum::<f64>()
        })
        .sum()
}

/// Exact maximum of [`policy_value_exact`] over the class, with the lowest
/// index attaining it (ties broken deterministically).
pub fn best_policy_value(env: &Environment, class: &PolicyClass) -> (f64, usize) {
    let mut best = f64::NEG_INFINITY;
    let mut idx = 0;
    for (i, pi) in class.iter().enumerate() {
        let v = policy_value_exact(env, pi);
        if v > best {
            best = v;
            idx = i;
        }
    }
    (best, idx)
}

/// Subset-policy analogue of [`best_policy_value`].
pub fn best_subset_policy_value(env: &Environment, class: &SubsetPolicyClass) -> (f64, usize) {
    let mut best = f64::NEG_INFINITY;
    let mut idx = 0;
    for (i, pi) in class.iter().enumerate() {
        let v = subset_policy_value_exact(env, pi);
        if v > best {
            best = v;
            idx = i;
        }
    }
    (best, idx)
}
