//! Experiment harness for the sparse-bandits algorithms: instance families,
//! the explore-then-commit baseline, seeded sweeps, empirical
//! sample-complexity searches, scaling-law fits, and CSV/JSON emission.

pub mod baseline;
pub mod emit;
pub mod families;
pub mod scaling;
pub mod search;
pub mod sweep;

pub use baseline::{etc_budget, run_baseline_etc, DEFAULT_ETC_MULTIPLIER};
pub use emit::{emit, rows_to_csv, rows_to_json, OutputFormat, SweepRow};
pub use families::{exo_env_view, exo_model_class, FamilyConfig, Instance};
pub use scaling::{fit_log_log, scaling_report, ScaleAxis, ScalingFit};
pub use search::{sample_complexity_search, SearchConfig, SearchResult, SearchSpec};
pub use sweep::{run_sweep, SweepConfig};

use serde::{Deserialize, Serialize};
use sparse_bandits::ccsb::{run_ccsb, CcsbConfig};
use sparse_bandits::exo::{randomized_policy_value, run_exo, SolverConfig};
use sparse_bandits::lve::{run_lve, LveConfig};
use sparse_bandits::policy::{
    best_policy_value, best_subset_policy_value, policy_value_exact, subset_policy_value_exact,
};
use sparse_bandits::rng::{labels, RngStream};

#[derive(Debug)]
pub enum HarnessError {
    Config(String),
    Env(sparse_bandits::env::EnvError),
    Algorithm(String),
    Io { path: String, source: std::io::Error },
    DegenerateGrid(String),
    BudgetCapExceeded { cap: u64 },
}

impl std::fmt::Display for HarnessError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HarnessError::Config(msg) => write!(f, "config error: {msg}"),
            HarnessError::Env(e) => write!(f, "environment error: {e}"),
            HarnessError::Algorithm(msg) => write!(f, "algorithm error: {msg}"),
            HarnessError::Io { path, source } => write!(f, "i/o error on {path}: {source}"),
            HarnessError::DegenerateGrid(msg) => write!(f, "degenerate grid: {msg}"),
            HarnessError::BudgetCapExceeded { cap } => {
                write!(f, "sample budget cap {cap} exceeded before reaching the success target")
            }
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<sparse_bandits::env::EnvError> for HarnessError {
    fn from(e: sparse_bandits::env::EnvError) -> Self {
        HarnessError::Env(e)
    }
}

impl From<sparse_bandits::lve::LveError> for HarnessError {
    fn from(e: sparse_bandits::lve::LveError) -> Self {
        HarnessError::Algorithm(e.to_string())
    }
}

/// Which algorithm a sweep point runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Lve,
    Ccsb,
    Exo,
    BaselineEtc,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Lve => "lve",
            Algorithm::Ccsb => "ccsb",
            Algorithm::Exo => "exo",
            Algorithm::BaselineEtc => "baseline-etc",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lve" => Ok(Algorithm::Lve),
            "ccsb" => Ok(Algorithm::Ccsb),
            "exo" => Ok(Algorithm::Exo),
            "baseline-etc" | "etc" => Ok(Algorithm::BaselineEtc),
            other => Err(HarnessError::Config(format!("unknown algorithm '{other}'"))),
        }
    }
}

/// Sample-budget knobs: a joint scale (driven by the sample-complexity
/// search) and optional overrides for the two Θ̃ multipliers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    #[serde(default = "default_budget_scale")]
    pub scale: f64,
    #[serde(default)]
    pub t_multiplier: Option<f64>,
    #[serde(default)]
    pub n_multiplier: Option<f64>,
}

fn default_budget_scale() -> f64 {
    1.0
}

impl Default for Budget {
    fn default() -> Self {
        Self { scale: 1.0, t_multiplier: None, n_multiplier: None }
    }
}

impl Budget {
    pub fn scaled(scale: f64) -> Self {
        Self { scale, ..Self::default() }
    }

    fn lve_multipliers(&self) -> (f64, f64) {
        (
            self.t_multiplier.unwrap_or(sparse_bandits::lve::DEFAULT_T_MULTIPLIER) * self.scale,
            self.n_multiplier.unwrap_or(sparse_bandits::lve::DEFAULT_N_MULTIPLIER) * self.scale,
        )
    }
}

/// ExO-specific knobs used when a sweep point runs the minimax loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExoParams {
    /// γ = `gamma_mult`·|A|.
    pub gamma_mult: f64,
    pub t_rounds: usize,
    /// Extra random models added to the realizable ones.
    pub extra_models: usize,
    pub solver: SolverConfig,
}

impl Default for ExoParams {
    fn default() -> Self {
        Self { gamma_mult: 32.0, t_rounds: 300, extra_models: 4, solver: SolverConfig::default() }
    }
}

/// Result of running one algorithm on one drawn instance.
#[derive(Debug, Clone)]
pub struct PointOutcome {
    pub samples_used: u64,
    pub suboptimality: f64,
    pub chosen_policy: Option<usize>,
}

/// Run `algo` on a fresh instance of `family`. The instance is drawn from a
/// sub-stream of `stream`; the run consumes the phase sub-streams.
pub fn run_point(
    algo: Algorithm,
    family: &FamilyConfig,
    eps: f64,
    delta: f64,
    budget: &Budget,
    exo: &ExoParams,
    stream: RngStream,
) -> Result<PointOutcome, HarnessError> {
    let instance = family.instantiate(eps, stream.substream(labels::GENERATOR))?;
    match (algo, instance) {
        (Algorithm::Lve, Instance::Atomic { env, class }) => {
            let (t_mult, n_mult) = budget.lve_multipliers();
            let cfg = LveConfig::derive_with_multipliers(
                eps,
                delta,
                env.reward_dim(),
                class.len(),
                env.sparsity().s,
                t_mult,
                n_mult,
            )?;
            let report = run_lve(&env, &class, eps, delta, Some(cfg), stream)?;
            // Emission-time audit: recompute the suboptimality exactly.
            let (best, _) = best_policy_value(&env, &class);
            let recomputed = best - policy_value_exact(&env, class.get(report.chosen_policy));
            assert!(
                (recomputed - report.suboptimality).abs() <= 1e-10,
                "reported suboptimality drifted from the exact oracle"
            );
            Ok(PointOutcome {
                samples_used: report.samples_total,
                suboptimality: recomputed,
                chosen_policy: Some(report.chosen_policy),
            })
        }
        (Algorithm::Ccsb, Instance::Subset { env, class }) => {
            let (k, m) = match env.actions() {
                sparse_bandits::ActionSpace::MSubset { k, m } => (k, m),
                _ => unreachable!("subset instances carry subset action spaces"),
            };
            let (t_mult, n_mult) = budget.lve_multipliers();
            let cfg = CcsbConfig::derive_with_multipliers(
                eps,
                delta,
                k,
                m,
                env.sparsity().s,
                class.len(),
                t_mult,
                n_mult,
            )?;
            let report = run_ccsb(&env, &class, eps, delta, Some(cfg), stream)?;
            let (best, _) = best_subset_policy_value(&env, &class);
            let recomputed =
                best - subset_policy_value_exact(&env, class.get(report.chosen_policy));
            assert!((recomputed - report.suboptimality).abs() <= 1e-10);
            Ok(PointOutcome {
                samples_used: report.samples_total,
                suboptimality: recomputed,
                chosen_policy: Some(report.chosen_policy),
            })
        }
        (Algorithm::BaselineEtc, Instance::Atomic { env, class }) => {
            let report = run_baseline_etc(&env, &class, eps, delta, budget.scale, stream)?;
            let (best, _) = best_policy_value(&env, &class);
            let recomputed = best - policy_value_exact(&env, class.get(report.chosen_policy));
            assert!((recomputed - report.suboptimality).abs() <= 1e-10);
            Ok(PointOutcome {
                samples_used: report.samples_total,
                suboptimality: recomputed,
                chosen_policy: Some(report.chosen_policy),
            })
        }
        (Algorithm::Exo, Instance::Atomic { env, class }) => {
            let mclass = exo_model_class(&env, exo.extra_models, stream.substream(51))?;
            let env_view = exo_env_view(&env, &mclass)?;
            let gamma = exo.gamma_mult * env.reward_dim() as f64;
            let t_rounds = ((exo.t_rounds as f64 * budget.scale).ceil() as usize).max(1);
            let (out, _trace) = run_exo(
                &env_view,
                &class,
                gamma,
                t_rounds,
                &mclass,
                &exo.solver,
                stream,
            )
            .map_err(|e| HarnessError::Algorithm(e.to_string()))?;
            let (best, _) = best_policy_value(&env_view, &class);
            let achieved = randomized_policy_value(&env_view, &out.policy);
            Ok(PointOutcome {
                samples_used: out.samples_total,
                suboptimality: best - achieved,
                chosen_policy: None,
            })
        }
        (Algorithm::Ccsb, Instance::Atomic { .. }) => Err(HarnessError::Config(
            "ccsb needs a subset-action family (list)".into(),
        )),
        (_, Instance::Subset { .. }) => Err(HarnessError::Config(
            "this algorithm needs an atomic-action family".into(),
        )),
    }
}

/// Deterministic total sample budget an algorithm would use at a given scale
/// on a family point (budgets depend only on the shape, not the draw).
pub fn budget_for(
    algo: Algorithm,
    family: &FamilyConfig,
    eps: f64,
    delta: f64,
    budget: &Budget,
    exo: &ExoParams,
) -> Result<u64, HarnessError> {
    match (algo, family) {
        (Algorithm::Lve | Algorithm::BaselineEtc | Algorithm::Exo, f) if f.is_subset() => Err(
            HarnessError::Config("atomic algorithm paired with subset family".into()),
        ),
        (Algorithm::Lve, f) => {
            let (a, pi) = family_shape_atomic(f)?;
            let (t_mult, n_mult) = budget.lve_multipliers();
            let cfg = LveConfig::derive_with_multipliers(eps, delta, a, pi, f.s(), t_mult, n_mult)?;
            Ok((cfg.t_rounds + cfg.n_rounds) as u64)
        }
        (Algorithm::BaselineEtc, f) => {
            let (a, pi) = family_shape_atomic(f)?;
            Ok(etc_budget(eps, delta, a, pi, budget.scale) as u64)
        }
        (Algorithm::Exo, _) => Ok(((exo.t_rounds as f64 * budget.scale).ceil() as u64).max(1)),
        (Algorithm::Ccsb, FamilyConfig::List { k, m, pi_size, .. }) => {
            let (t_mult, n_mult) = budget.lve_multipliers();
            let cfg = CcsbConfig::derive_with_multipliers(
                eps,
                delta,
                *k,
                *m,
                family.s(),
                *pi_size,
                t_mult,
                n_mult,
            )?;
            Ok((cfg.t_rounds + cfg.n_rounds) as u64)
        }
        (Algorithm::Ccsb, _) => {
            Err(HarnessError::Config("ccsb needs a subset-action family (list)".into()))
        }
    }
}

fn family_shape_atomic(family: &FamilyConfig) -> Result<(usize, usize), HarnessError> {
    match family {
        FamilyConfig::Multiclass { a_size, pi_size, .. }
        | FamilyConfig::SparseBinary { a_size, pi_size, .. }
        | FamilyConfig::DenseL2 { a_size, pi_size, .. } => Ok((*a_size, *pi_size)),
        FamilyConfig::LowerBound { a_size } => Ok((*a_size, a_size * a_size)),
        FamilyConfig::Planted { a_size, pi_size, .. } => Ok((*a_size, *pi_size)),
        FamilyConfig::Union { members } => {
            let shapes: Result<Vec<_>, _> = members.iter().map(family_shape_atomic).collect();
            let shapes = shapes?;
            if shapes.windows(2).any(|w| w[0] != w[1]) {
                return Err(HarnessError::Config(
                    "union members must share |A| and |Pi| for budget derivation".into(),
                ));
            }
            shapes.first().copied().ok_or_else(|| {
                HarnessError::Config("union family needs members".into())
            })
        }
        FamilyConfig::EnvFile { .. } => Err(HarnessError::Config(
            "sample-complexity budgets need a generated family, not an env file".into(),
        )),
        FamilyConfig::List { .. } => {
            Err(HarnessError::Config("subset family in atomic context".into()))
        }
    }
}
