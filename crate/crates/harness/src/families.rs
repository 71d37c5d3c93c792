//! Parametrized instance families for sweeps and sample-complexity searches.
//!
//! A family fixes the instance shape; each seed redraws a concrete
//! environment and policy class from it, so searched budgets average over the
//! family rather than a single draw. The lower-bound family follows the
//! two-context hard construction with `|Π| = |A|²` and a redrawn hidden
//! action per seed.

use serde::{Deserialize, Serialize};
use sparse_bandits::env::Environment;
use sparse_bandits::exo::{env_from_models, Model, ModelClass, ObservationSpace};
use sparse_bandits::gen::{
    make_lower_bound_env, make_semibandit_env, make_sparse_env, PolicyStyle, RewardStyle,
    SemiBanditEnvSpec, SparseEnvSpec,
};
use sparse_bandits::policy::{Policy, PolicyClass, SubsetPolicyClass};
use sparse_bandits::rng::RngStream;
use sparse_bandits::{ActionId, ContextId, SparsityMode};

use crate::HarnessError;

/// Instance family. Grid sweeps override the relevant fields point by point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FamilyConfig {
    /// One-hot rewards (s = 1), hot-biased policy class.
    Multiclass {
        x_size: usize,
        a_size: usize,
        pi_size: usize,
        #[serde(default = "default_atoms")]
        atoms: usize,
        #[serde(default = "default_hot_prob")]
        hot_prob: f64,
    },
    /// Exactly-s-sparse binary rewards with a shared hot set per context and
    /// a tiered policy class (fixed mutation distances from a hot policy).
    SparseBinary { x_size: usize, a_size: usize, s: f64, pi_size: usize },
    /// Dense rewards under the expected-squared-L2 certificate.
    DenseL2 {
        x_size: usize,
        a_size: usize,
        s: f64,
        pi_size: usize,
        #[serde(default = "default_atoms")]
        atoms: usize,
    },
    /// Semi-bandit list classification: one-hot rewards over `[K]`,
    /// predictions are m-subsets.
    List {
        x_size: usize,
        k: usize,
        m: usize,
        pi_size: usize,
        #[serde(default = "default_atoms")]
        atoms: usize,
    },
    /// The two-context lower-bound construction. The hidden-reward context
    /// appears with probability `2ε` so that ε-optimality forces identifying
    /// the hidden action; `|Π| = |A|²`.
    LowerBound { a_size: usize },
    /// Single-context planted-arm instance with exactly-s-sparse rewards and
    /// one arm's mean raised by `gap_mult·ε`; single-action policy class.
    Planted {
        a_size: usize,
        s: f64,
        pi_size: usize,
        #[serde(default = "default_gap_mult")]
        gap_mult: f64,
    },
    /// Environment loaded from a JSON file, with a freshly drawn hot-biased
    /// policy class (plus the pointwise-optimal policy).
    EnvFile { path: String, pi_size: usize },
    /// Mixture over member families: each seed draws one member uniformly.
    /// Members must share the action count, class size, and sparsity so the
    /// budget derivations stay well defined.
    Union { members: Vec<FamilyConfig> },
}

fn default_atoms() -> usize {
    2
}

fn default_hot_prob() -> f64 {
    0.75
}

fn default_gap_mult() -> f64 {
    1.5
}

/// A concrete instance drawn from a family.
pub enum Instance {
    Atomic { env: Environment, class: PolicyClass },
    Subset { env: Environment, class: SubsetPolicyClass },
}

impl Instance {
    pub fn a_size(&self) -> usize {
        match self {
            Instance::Atomic { env, .. } | Instance::Subset { env, .. } => env.reward_dim(),
        }
    }

    pub fn pi_size(&self) -> usize {
        match self {
            Instance::Atomic { class, .. } => class.len(),
            Instance::Subset { class, .. } => class.len(),
        }
    }

    pub fn s(&self) -> f64 {
        match self {
            Instance::Atomic { env, .. } | Instance::Subset { env, .. } => env.sparsity().s,
        }
    }
}

impl FamilyConfig {
    pub fn with_a_size(&self, a: usize) -> Self {
        let mut out = self.clone();
        match &mut out {
            FamilyConfig::Multiclass { a_size, .. }
            | FamilyConfig::SparseBinary { a_size, .. }
            | FamilyConfig::DenseL2 { a_size, .. }
            | FamilyConfig::LowerBound { a_size }
            | FamilyConfig::Planted { a_size, .. } => *a_size = a,
            FamilyConfig::List { k, .. } => *k = a,
            FamilyConfig::EnvFile { .. } => {}
            FamilyConfig::Union { members } => {
                *members = members.iter().map(|m| m.with_a_size(a)).collect();
            }
        }
        out
    }

    pub fn with_s(&self, new_s: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            FamilyConfig::SparseBinary { s, .. }
            | FamilyConfig::DenseL2 { s, .. }
            | FamilyConfig::Planted { s, .. } => *s = new_s,
            FamilyConfig::Union { members } => {
                *members = members.iter().map(|m| m.with_s(new_s)).collect();
            }
            _ => {}
        }
        out
    }

    pub fn with_pi_size(&self, n: usize) -> Self {
        let mut out = self.clone();
        match &mut out {
            FamilyConfig::Multiclass { pi_size, .. }
            | FamilyConfig::SparseBinary { pi_size, .. }
            | FamilyConfig::DenseL2 { pi_size, .. }
            | FamilyConfig::List { pi_size, .. }
            | FamilyConfig::EnvFile { pi_size, .. }
            | FamilyConfig::Planted { pi_size, .. } => *pi_size = n,
            FamilyConfig::LowerBound { .. } => {}
            FamilyConfig::Union { members } => {
                *members = members.iter().map(|m| m.with_pi_size(n)).collect();
            }
        }
        out
    }

    pub fn with_km(&self, new_k: usize, new_m: usize) -> Self {
        let mut out = self.clone();
        if let FamilyConfig::List { k, m, .. } = &mut out {
            *k = new_k;
            *m = new_m;
        }
        out
    }

    /// Declared sparsity of the family (before instantiation).
    pub fn s(&self) -> f64 {
        match self {
            FamilyConfig::SparseBinary { s, .. }
            | FamilyConfig::DenseL2 { s, .. }
            | FamilyConfig::Planted { s, .. } => *s,
            FamilyConfig::Union { members } => members.first().map_or(1.0, |m| m.s()),
            _ => 1.0,
        }
    }

    pub fn is_subset(&self) -> bool {
        match self {
            FamilyConfig::List { .. } => true,
            FamilyConfig::Union { members } => members.iter().any(|m| m.is_subset()),
            _ => false,
        }
    }

    /// Draw one instance. `eps` is the optimality target of the surrounding
    /// experiment; the lower-bound family uses it for the hidden context's
    /// probability `min(2ε, 1/2)` and the planted family for its arm gap.
    pub fn instantiate(&self, eps: f64, stream: RngStream) -> Result<Instance, HarnessError> {
        match self {
            FamilyConfig::Multiclass { x_size, a_size, pi_size, atoms, hot_prob } => {
                let spec = SparseEnvSpec {
                    x_size: *x_size,
                    a_size: *a_size,
                    s: 1.0,
                    mode: SparsityMode::L1,
                    reward_style: RewardStyle::OneHot,
                    pi_size: *pi_size,
                    atoms_per_context: *atoms,
                    policy_style: PolicyStyle::HotBiased { hot_prob: *hot_prob },
                };
                let (env, class, _) = make_sparse_env(&spec, stream)?;
                Ok(Instance::Atomic { env, class })
            }
            FamilyConfig::SparseBinary { x_size, a_size, s, pi_size } => {
                let spec = SparseEnvSpec {
                    x_size: *x_size,
                    a_size: *a_size,
                    s: *s,
                    mode: SparsityMode::L1,
                    reward_style: RewardStyle::SparseBinary,
                    pi_size: *pi_size,
                    atoms_per_context: 1,
                    policy_style: PolicyStyle::Tiered,
                };
                let (env, class, _) = make_sparse_env(&spec, stream)?;
                Ok(Instance::Atomic { env, class })
            }
            FamilyConfig::DenseL2 { x_size, a_size, s, pi_size, atoms } => {
                let spec = SparseEnvSpec {
                    x_size: *x_size,
                    a_size: *a_size,
                    s: *s,
                    mode: SparsityMode::L2,
                    reward_style: RewardStyle::DenseScaled,
                    pi_size: *pi_size,
                    atoms_per_context: *atoms,
                    policy_style: PolicyStyle::HotBiased { hot_prob: 0.6 },
                };
                let (env, class, _) = make_sparse_env(&spec, stream)?;
                Ok(Instance::Atomic { env, class })
            }
            FamilyConfig::List { x_size, k, m, pi_size, atoms } => {
                let spec = SemiBanditEnvSpec {
                    x_size: *x_size,
                    k: *k,
                    m: *m,
                    s: 1.0,
                    reward_style: RewardStyle::OneHot,
                    pi_size: *pi_size,
                    atoms_per_context: *atoms,
                };
                let (env, class, _) = make_semibandit_env(&spec, stream)?;
                Ok(Instance::Subset { env, class })
            }
            FamilyConfig::LowerBound { a_size } => {
                let eps_env = (2.0 * eps).min(0.5);
                let (env, class, _) = make_lower_bound_env(*a_size, eps_env, stream)?;
                Ok(Instance::Atomic { env, class })
            }
            FamilyConfig::Planted { a_size, s, pi_size, gap_mult } => {
                let (env, class, _) = sparse_bandits::gen::make_planted_env(
                    *a_size,
                    *s,
                    gap_mult * eps,
                    *pi_size,
                    stream,
                )?;
                Ok(Instance::Atomic { env, class })
            }
            FamilyConfig::Union { members } => {
                if members.is_empty() {
                    return Err(HarnessError::Config("union family needs members".into()));
                }
                use rand::Rng;
                let mut rng = stream.substream(7).rng();
                let pick = rng.random_range(0..members.len());
                members[pick].instantiate(eps, stream.substream(8 + pick as u64))
            }
            FamilyConfig::EnvFile { path, pi_size } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| HarnessError::Io { path: path.clone(), source: e })?;
                let env: Environment = serde_json::from_str(&text)
                    .map_err(|e| HarnessError::Config(format!("bad environment file {path}: {e}")))?;
                env.validate()?;
                let class = random_class_with_optimal(&env, *pi_size, stream);
                Ok(Instance::Atomic { env, class })
            }
        }
    }
}

fn random_class_with_optimal(env: &Environment, pi_size: usize, stream: RngStream) -> PolicyClass {
    use rand::Rng;
    let mut rng = stream.rng();
    let a = env.reward_dim();
    let optimal = Policy::new(
        (0..env.context_count())
            .map(|x| {
                let means = env.mean_reward(ContextId(x));
                ActionId(sparse_bandits::lve::argmax_lowest(&means))
            })
            .collect(),
    );
    let slot = rng.random_range(0..pi_size.max(1));
    let mut policies = Vec::with_capacity(pi_size.max(1));
    for i in 0..pi_size.max(1) {
        if i == slot {
            policies.push(optimal.clone());
        } else {
            policies.push(Policy::new(
                (0..env.context_count()).map(|_| ActionId(rng.random_range(0..a))).collect(),
            ));
        }
    }
    PolicyClass::new(policies).expect("non-empty")
}

/// Build a model class for ExO runs on a binary-reward environment: the true
/// per-context models plus `extra` random sparse Bernoulli models.
pub fn exo_model_class(
    env: &Environment,
    extra: usize,
    stream: RngStream,
) -> Result<ModelClass, HarnessError> {
    use rand::Rng;
    let obs = ObservationSpace::new(vec![0.0, 1.0]).expect("binary grid");
    let truths = sparse_bandits::exo::models_from_env(env, &obs)
        .map_err(|e| HarnessError::Config(format!("environment is not binary-reward: {e}")))?;
    let a = env.reward_dim();
    let s = env.sparsity().s;
    let mut rng = stream.rng();
    let mut models = truths;
    for _ in 0..extra {
        // Random success probabilities scaled to the sparsity budget.
        let mut p: Vec<f64> = (0..a).map(|_| rng.random_range(0.0..1.0)).collect();
        let total: f64 = p.iter().sum();
        if total > s {
            let f = s / total * rng.random_range(0.3..1.0);
            p.iter_mut().for_each(|v| *v *= f);
        }
        models.push(
            Model::new(p.iter().map(|&pa| vec![1.0 - pa, pa]).collect())
                .expect("rows normalized by construction"),
        );
    }
    ModelClass::new(obs, models, s).map_err(|e| HarnessError::Config(e.to_string()))
}

/// Re-wire a binary environment through its observation models so that the
/// coordinates are independent per action (the contextual-decision-making
/// form ExO expects). Policy values are unchanged.
pub fn exo_env_view(env: &Environment, mclass: &ModelClass) -> Result<Environment, HarnessError> {
    let truths = sparse_bandits::exo::models_from_env(env, mclass.obs())
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let mut class_models = mclass.models().to_vec();
    let mut indices = Vec::with_capacity(truths.len());
    for t in &truths {
        let idx = class_models.iter().position(|m| m == t).unwrap_or_else(|| {
            class_models.push(t.clone());
            class_models.len() - 1
        });
        indices.push(idx);
    }
    let full = ModelClass::new(mclass.obs().clone(), class_models, mclass.s())
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    env_from_models(env.context_probs().to_vec(), &indices, &full)
        .map_err(|e| HarnessError::Config(e.to_string()))
}
