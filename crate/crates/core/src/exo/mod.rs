//! Desk-scale exploration-by-optimization for contextual decision making,
//! plus numerical estimation of the decision-estimation coefficient (DEC).
//!
//! A [`Model`] maps each action to a finite-support observation distribution;
//! a [`ModelClass`] is a finite list of models sharing one observation space
//! and reward table, every member certified to satisfy the sparse-reward
//! condition `Σ_a E_{o∼M(a)}[R(o)²] ≤ s`. The per-round minimax objective is
//! solved by projected subgradient on a convex re-parametrization (see
//! [`solver`]), and the DEC estimate pairs that solver with an explicit
//! sparsity-weighted certificate whose value is bounded by `64·s/γ` for
//! `γ ≥ 32|A|`.

#![allow(clippy::needless_range_loop)] // multi-table numeric kernels index on purpose

mod solver;

pub use solver::{gamma_objective_reparam, pdec_estimate, project_simplex, solve_exo, ExoSolution, PdecEstimate, SolverConfig};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{ActionId, ActionSpace, ContextId, EnvError, Environment, RewardAtom, RewardVector, Sparsity, SparsityMode};
use crate::oracle::{EnvOracle, RoundOracle};
use crate::policy::PolicyClass;
use crate::rng::{labels, sample_index, RngStream};

#[derive(Debug, Error)]
pub enum ExoError {
    #[error("probability vectors have mismatched lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("vector does not sum to 1 (got {0})")]
    NotNormalized(f64),
    #[error("function value {0} outside [-1, 1]")]
    FunctionOutOfRange(f64),
    #[error("reward table value {0} outside [0, 1]")]
    RewardOutOfRange(f64),
    #[error("model row for action {0} sums to {1}, expected 1")]
    RowNotNormalized(usize, f64),
    #[error("sparsity certificate violated: sum of second moments {0} > s = {1}")]
    CertificateViolated(f64, f64),
    #[error("observed reward value {0} not representable in the observation grid")]
    ObservationNotInGrid(f64),
    #[error("model class is empty")]
    EmptyClass,
    #[error("model shape mismatch: expected {want_a} actions x {want_o} observations")]
    ShapeMismatch { want_a: usize, want_o: usize },
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// Exponent arguments are clamped to this magnitude before `exp`.
pub const EXP_CLAMP: f64 = 40.0;
/// Magnitude cap for entries of a [`XiTable`] (so exponent differences stay
/// within ±[`EXP_CLAMP`]).
pub const XI_CAP: f64 = 20.0;

/// A finite observation space with its reward table `R : O → [0,1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSpace {
    values: Vec<f64>,
}

impl ObservationSpace {
    pub fn new(values: Vec<f64>) -> Result<Self, ExoError> {
        for &v in &values {
            if !(0.0..=1.0).contains(&v) {
                return Err(ExoError::RewardOutOfRange(v));
            }
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `R(o)` for observation index `o`.
    pub fn reward(&self, o: usize) -> f64 {
        self.values[o]
    }

    pub fn rewards(&self) -> &[f64] {
        &self.values
    }

    /// Index of an exact reward value, if the grid contains it.
    pub fn index_of(&self, value: f64) -> Option<usize> {
        self.values.iter().position(|&v| v == value)
    }
}

/// A map from actions to observation distributions: `rows[a][o]` is the
/// probability of observing `o` after playing `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Model {
    rows: Vec<Vec<f64>>,
}

impl Model {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, ExoError> {
        for (a, row) in rows.iter().enumerate() {
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(ExoError::RowNotNormalized(a, total));
            }
            if row.iter().any(|&p| p < 0.0) {
                return Err(ExoError::NotNormalized(-1.0));
            }
        }
        Ok(Self { rows })
    }

    pub fn action_count(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, a: usize) -> &[f64] {
        &self.rows[a]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// `f^M(a) = E_{o∼M(a)}[R(o)]`.
    pub fn value(&self, a: usize, obs: &ObservationSpace) -> f64 {
        self.rows[a].iter().zip(obs.rewards()).map(|(p, r)| p * r).sum()
    }

    pub fn values(&self, obs: &ObservationSpace) -> Vec<f64> {
        (0..self.rows.len()).map(|a| self.value(a, obs)).collect()
    }

    /// `λ_a = E_{o∼M(a)}[R(o)²]`.
    pub fn second_moment(&self, a: usize, obs: &ObservationSpace) -> f64 {
        self.rows[a].iter().zip(obs.rewards()).map(|(p, r)| p * r * r).sum()
    }

    /// `C = Σ_a λ_a`, the quantity the sparsity certificate bounds by `s`.
    pub fn sparsity_load(&self, obs: &ObservationSpace) -> f64 {
        (0..self.rows.len()).map(|a| self.second_moment(a, obs)).sum()
    }

    /// Best action under `f^M`, lowest index on ties.
    pub fn best_action(&self, obs: &ObservationSpace) -> usize {
        let vals = self.values(obs);
        crate::lve::argmax_lowest(&vals)
    }
}

/// A finite list of models sharing one observation space and reward table,
/// all satisfying the `s`-sparsity certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelClass {
    #[serde(rename = "observations")]
    obs: ObservationSpace,
    models: Vec<Model>,
    s: f64,
}

impl ModelClass {
    pub fn new(obs: ObservationSpace, models: Vec<Model>, s: f64) -> Result<Self, ExoError> {
        if models.is_empty() {
            return Err(ExoError::EmptyClass);
        }
        let a_count = models[0].action_count();
        for m in &models {
            if m.action_count() != a_count || m.rows.iter().any(|r| r.len() != obs.len()) {
                return Err(ExoError::ShapeMismatch { want_a: a_count, want_o: obs.len() });
            }
            let load = m.sparsity_load(&obs);
            if load > s + 1e-9 {
                return Err(ExoError::CertificateViolated(load, s));
            }
        }
        Ok(Self { obs, models, s })
    }

    pub fn obs(&self) -> &ObservationSpace {
        &self.obs
    }

    pub fn models(&self) -> &[Model] {
        &self.models
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn action_count(&self) -> usize {
        self.models[0].action_count()
    }

    /// Uniform mixture of the members (a point of the convex hull, usable as
    /// a DEC reference model).
    pub fn uniform_mixture(&self) -> Model {
        let a = self.action_count();
        let o = self.obs.len();
        let w = 1.0 / self.models.len() as f64;
        let mut rows = vec![vec![0.0; o]; a];
        for m in &self.models {
            for (ra, row) in rows.iter_mut().zip(&m.rows) {
                for (acc, &p) in ra.iter_mut().zip(row) {
                    *acc += w * p;
                }
            }
        }
        Model { rows }
    }
}

/// The estimation weight function `ξ : A × A × O → ℝ`, entries capped at
/// ±[`XI_CAP`]. Indexed as `(a', a, o)` — predicted action, played action,
/// observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiTable {
    a_count: usize,
    o_count: usize,
    values: Vec<f64>,
}

impl XiTable {
    pub fn zeros(a_count: usize, o_count: usize) -> Self {
        Self { a_count, o_count, values: vec![0.0; a_count * a_count * o_count] }
    }

    pub fn from_fn(a_count: usize, o_count: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(a_count, o_count);
        for ap in 0..a_count {
            for a in 0..a_count {
                for o in 0..o_count {
                    t.set(ap, a, o, f(ap, a, o));
                }
            }
        }
        t
    }

    fn idx(&self, a_prime: usize, a: usize, o: usize) -> usize {
        (a_prime * self.a_count + a) * self.o_count + o
    }

    pub fn get(&self, a_prime: usize, a: usize, o: usize) -> f64 {
        self.values[self.idx(a_prime, a, o)]
    }

    /// Set an entry, clamped into `[-XI_CAP, XI_CAP]`.
    pub fn set(&mut self, a_prime: usize, a: usize, o: usize, v: f64) {
        let i = self.idx(a_prime, a, o);
        self.values[i] = v.clamp(-XI_CAP, XI_CAP);
    }

    pub fn action_count(&self) -> usize {
        self.a_count
    }

    pub fn obs_count(&self) -> usize {
        self.o_count
    }
}

/// Squared Hellinger distance `½·Σ_z (√P(z) − √Q(z))²` between two finite
/// distributions on the same support.
pub fn hellinger_sq(p: &[f64], q: &[f64]) -> Result<f64, ExoError> {
    if p.len() != q.len() {
        return Err(ExoError::LengthMismatch(p.len(), q.len()));
    }
    debug_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    debug_assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    Ok(0.5
        * p.iter()
            .zip(q)
            .map(|(&a, &b)| {
                let d = a.sqrt() - b.sqrt();
                d * d
            })
            .sum::<f64>())
}

/// The exploration-by-optimization objective for one `(M, a*)` pair:
///
/// `Γ_{w,γ}(p,q,ξ; M,a*) = E_{a∼p}[f^M(a*) − f^M(a)]
///    − γ·E_{a∼q} E_{o∼M(a)} E_{a'∼w}[1 − exp(ξ(a';a,o) − ξ(a*;a,o))]`.
///
/// Exponent arguments are clamped to ±[`EXP_CLAMP`]; `clamp_events` counts how
/// often that actually happened.
#[allow(clippy::too_many_arguments)]
pub fn gamma_objective_with_stats(
    w: &[f64],
    gamma: f64,
    p: &[f64],
    q: &[f64],
    xi: &XiTable,
    model: &Model,
    obs: &ObservationSpace,
    a_star: ActionId,
    clamp_events: &mut u64,
) -> f64 {
    let a_count = model.action_count();
    let f = model.values(obs);
    let exploit: f64 = p.iter().enumerate().map(|(a, &pa)| pa * (f[a_star.0] - f[a])).sum();
    let mut info = 0.0;
    for a in 0..a_count {
        if q[a] == 0.0 {
            continue;
        }
        let row = model.row(a);
        for (o, &mo) in row.iter().enumerate() {
            if mo == 0.0 {
                continue;
            }
            let xi_star = xi.get(a_star.0, a, o);
            let mut inner = 0.0;
            for (ap, &wa) in w.iter().enumerate() {
                if wa == 0.0 {
                    continue;
                }
                let mut arg = xi.get(ap, a, o) - xi_star;
                if arg.abs() > EXP_CLAMP {
                    arg = arg.clamp(-EXP_CLAMP, EXP_CLAMP);
                    *clamp_events += 1;
                }
                inner += wa * (1.0 - arg.exp());
            }
            info += q[a] * mo * inner;
        }
    }
    exploit - gamma * info
}

/// [`gamma_objective_with_stats`] without the clamp counter.
#[allow(clippy::too_many_arguments)]
pub fn gamma_objective(
    w: &[f64],
    gamma: f64,
    p: &[f64],
    q: &[f64],
    xi: &XiTable,
    model: &Model,
    obs: &ObservationSpace,
    a_star: ActionId,
) -> f64 {
    let mut clamps = 0;
    gamma_objective_with_stats(w, gamma, p, q, xi, model, obs, a_star, &mut clamps)
}

/// The sparsity-weighted exploration distribution from the DEC upper bound:
/// `q(a) = (1/|A|)·(1 − C/2s) + λ_a/2s` with `λ_a = E_{o∼M̄(a)}[R(o)²]` and
/// `C = Σ_a λ_a ≤ s`. Sums to 1 by the algebraic identity.
pub fn sparsity_weighted_q(mbar: &Model, obs: &ObservationSpace, s: f64) -> Result<Vec<f64>, ExoError> {
    let a_count = mbar.action_count();
    let lambdas: Vec<f64> = (0..a_count).map(|a| mbar.second_moment(a, obs)).collect();
    let c: f64 = lambdas.iter().sum();
    if c > s + 1e-9 {
        return Err(ExoError::CertificateViolated(c, s));
    }
    let base = (1.0 - c / (2.0 * s)) / a_count as f64;
    Ok(lambdas.iter().map(|&l| base + l / (2.0 * s)).collect())
}

/// Executable form of the Hellinger variance lemma: for `|f| ≤ 1`,
/// `|E_P f − E_Q f| ≤ 4·√(E_Q[f²]·D²_H(P,Q)) + 4·D²_H(P,Q)`.
/// Returns `RHS − LHS`, which the lemma asserts is nonnegative.
pub fn hellinger_variance_gap(p: &[f64], q: &[f64], f: &[f64]) -> Result<f64, ExoError> {
    if p.len() != q.len() || p.len() != f.len() {
        return Err(ExoError::LengthMismatch(p.len(), q.len().min(f.len())));
    }
    if let Some(&bad) = f.iter().find(|v| v.abs() > 1.0) {
        return Err(ExoError::FunctionOutOfRange(bad));
    }
    let d2 = hellinger_sq(p, q)?;
    let ep: f64 = p.iter().zip(f).map(|(&w, &v)| w * v).sum();
    let eq: f64 = q.iter().zip(f).map(|(&w, &v)| w * v).sum();
    let eq2: f64 = q.iter().zip(f).map(|(&w, &v)| w * v * v).sum();
    let lhs = (ep - eq).abs();
    let rhs = 4.0 * (eq2 * d2).sqrt() + 4.0 * d2;
    Ok(rhs - lhs)
}

/// Build a finite-support [`Environment`] backed by per-context models: the
/// reward vector's coordinates are drawn independently as `r(a) = R(o_a)`,
/// `o_a ∼ M_x(a)`. Policy values depend only on per-action marginals, so this
/// environment is exactly the contextual-decision-making instance
/// `(ρ, {M_x})`, and its exact `E‖r‖₂²` inherits the class certificate.
pub fn env_from_models(
    context_probs: Vec<f64>,
    model_indices: &[usize],
    class: &ModelClass,
) -> Result<Environment, ExoError> {
    let obs = &class.obs;
    let a_count = class.action_count();
    let o_count = obs.len();
    let mut reward_law = Vec::with_capacity(model_indices.len());
    for &mi in model_indices {
        let model = &class.models[mi];
        // Cartesian product over per-action observation draws.
        let mut atoms: Vec<(f64, Vec<f64>)> = vec![(1.0, Vec::new())];
        for a in 0..a_count {
            let mut next = Vec::with_capacity(atoms.len() * o_count);
            for (p, r) in &atoms {
                for o in 0..o_count {
                    let po = model.rows[a][o];
                    if po == 0.0 {
                        continue;
                    }
                    let mut r2 = r.clone();
                    r2.push(obs.reward(o));
                    next.push((p * po, r2));
                }
            }
            atoms = next;
        }
        reward_law.push(
            atoms
                .into_iter()
                .map(|(p, r)| RewardAtom { p, r: RewardVector(r) })
                .collect::<Vec<_>>(),
        );
    }
    Ok(Environment::new(
        context_probs,
        reward_law,
        Sparsity { mode: SparsityMode::L2, s: class.s },
        ActionSpace::Atomic(a_count),
    )?)
}

/// Recover the per-context observation models of an environment whose reward
/// support lies on the observation grid (the realizability direction of
/// [`env_from_models`]).
pub fn models_from_env(env: &Environment, obs: &ObservationSpace) -> Result<Vec<Model>, ExoError> {
    let a_count = env.reward_dim();
    let mut out = Vec::with_capacity(env.context_count());
    for x in 0..env.context_count() {
        let mut rows = vec![vec![0.0; obs.len()]; a_count];
        for atom in env.reward_law(ContextId(x)) {
            for a in 0..a_count {
                let v = atom.r.0[a];
                let o = obs.index_of(v).ok_or(ExoError::ObservationNotInGrid(v))?;
                rows[a][o] += atom.p;
            }
        }
        out.push(Model::new(rows)?);
    }
    Ok(out)
}

/// What a full ExO run produces: a per-context action distribution (the
/// online-to-batch average of the per-round exploitation distributions).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExoOutput {
    /// `policy[x][a]` is the probability the output policy plays `a` at `x`.
    pub policy: Vec<Vec<f64>>,
    pub samples_total: u64,
}

/// Per-round diagnostics of the ExO loop.
#[derive(Debug, Clone, Default)]
pub struct ExoTrace {
    pub objectives: Vec<f64>,
    pub actions: Vec<usize>,
    pub any_solver_unconverged: bool,
    pub clamp_events: u64,
}

/// Random model class on `a_count` actions and `o_count` observations (the
/// first observation pays zero), every member scaled to satisfy the
/// `s`-sparsity certificate. Used by the DEC sweeps and the fuzz tests.
pub fn random_sparse_model_class(
    a_count: usize,
    o_count: usize,
    count: usize,
    s: f64,
    stream: RngStream,
) -> ModelClass {
    use rand::Rng;
    let mut rng = stream.rng();
    let mut values = vec![0.0];
    while values.len() < o_count {
        let v: f64 = rng.random_range(0.05..=1.0);
        if values.iter().all(|&u| u != v) {
            values.push(v);
        }
    }
    values.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let obs = ObservationSpace::new(values).expect("values in range");
    let mut models = Vec::with_capacity(count);
    for _ in 0..count {
        let mut rows: Vec<Vec<f64>> = (0..a_count)
            .map(|_| {
                let raw: Vec<f64> = (0..o_count).map(|_| rng.random_range(0.01..1.0)).collect();
                let t: f64 = raw.iter().sum();
                raw.into_iter().map(|v| v / t).collect()
            })
            .collect();
        let model = Model::new(rows.clone()).expect("rows normalized");
        let load = model.sparsity_load(&obs);
        if load > 0.95 * s {
            // Mix toward the zero-reward observation until the certificate
            // holds with room to spare.
            let beta = 1.0 - 0.95 * s / load;
            for row in &mut rows {
                for (oi, v) in row.iter_mut().enumerate() {
                    *v *= 1.0 - beta;
                    if oi == 0 {
                        *v += beta;
                    }
                }
            }
        }
        models.push(Model::new(rows).expect("rows normalized"));
    }
    ModelClass::new(obs, models, s).expect("certificate enforced above")
}

/// Random model class concentrated around a random center: member 0 is the
/// center itself, the rest are perturbations of it at the given radius (in
/// total-variation-like row deviation). Near-center classes at radius `~1/γ`
/// are where the DEC's gap/information tradeoff genuinely binds, so the
/// `64·s/γ` checks use them alongside the wide classes.
pub fn random_local_model_class(
    a_count: usize,
    o_count: usize,
    count: usize,
    s: f64,
    radius: f64,
    stream: RngStream,
) -> ModelClass {
    use rand::Rng;
    let wide = random_sparse_model_class(a_count, o_count, 1, s, stream.substream(1));
    let obs = wide.obs().clone();
    // Center with one shared observation row: every action has the same
    // value, so radius-sized perturbations genuinely move the argmax and the
    // gap/information tradeoff binds.
    let mut rng = stream.substream(2).rng();
    let center = {
        let raw: Vec<f64> = (0..o_count).map(|_| rng.random_range(0.01..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let mut row: Vec<f64> = raw.into_iter().map(|v| v / total).collect();
        let moment: f64 = row.iter().zip(obs.rewards()).map(|(p, r)| p * r * r).sum();
        let load = a_count as f64 * moment;
        if load > 0.95 * s {
            let beta = 1.0 - 0.95 * s / load;
            for (oi, v) in row.iter_mut().enumerate() {
                *v *= 1.0 - beta;
                if oi == 0 {
                    *v += beta;
                }
            }
        }
        Model::new(vec![row; a_count]).expect("row normalized")
    };
    let mut models = vec![center.clone()];
    for _ in 1..count.max(1) {
        let mut rows = center.rows().to_vec();
        for row in &mut rows {
            let mut dir: Vec<f64> = (0..o_count).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mean: f64 = dir.iter().sum::<f64>() / o_count as f64;
            dir.iter_mut().for_each(|d| *d -= mean);
            for (v, d) in row.iter_mut().zip(&dir) {
                *v = (*v + radius * d).max(0.0);
            }
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= total);
        }
        let model = Model::new(rows.clone()).expect("rows renormalized");
        let load = model.sparsity_load(&obs);
        if load > s {
            let beta = 1.0 - s / load;
            for row in &mut rows {
                for (oi, v) in row.iter_mut().enumerate() {
                    *v *= 1.0 - beta;
                    if oi == 0 {
                        *v += beta;
                    }
                }
            }
        }
        models.push(Model::new(rows).expect("rows renormalized"));
    }
    ModelClass::new(obs, models, s).expect("certificate enforced above")
}

/// Exact value of a randomized per-context policy table.
pub fn randomized_policy_value(env: &Environment, policy: &[Vec<f64>]) -> f64 {
    env.context_probs()
        .iter()
        .enumerate()
        .map(|(x, &px)| {
            let means = env.mean_reward(ContextId(x));
            px * policy[x].iter().zip(&means).map(|(pa, ma)| pa * ma).sum::<f64>()
        })
        .sum()
}

/// The full exploration-by-optimization loop. Each round observes a context,
/// solves the minimax objective at the current marginal `w = W|_x`, plays an
/// action from the exploration distribution `q`, observes the induced reward
/// observation, and applies the exponential-weight update with the solved
/// `ξ`. The output policy re-solves at the cached weight snapshots, once per
/// `(round, context)` pair, and averages the exploitation distributions.
pub fn run_exo(
    env: &Environment,
    class: &PolicyClass,
    gamma: f64,
    t_rounds: usize,
    mclass: &ModelClass,
    solver_cfg: &SolverConfig,
    stream: RngStream,
) -> Result<(ExoOutput, ExoTrace), ExoError> {
    let a_count = env.reward_dim();
    assert_eq!(a_count, mclass.action_count(), "environment and model class disagree on |A|");
    // Realizability wiring: the environment's per-context observation models
    // must be expressible on the class's observation grid.
    let true_models = models_from_env(env, &mclass.obs)?;
    let x_count = env.context_count();
    let pi_count = class.len();

    let mut oracle = EnvOracle::new(env, stream.substream(labels::ENV_PHASE1).rng());
    let mut alg = stream.substream(labels::EXO_ROUNDS).rng();

    let mut log_w = vec![0.0_f64; pi_count];
    let mut snapshots: Vec<Vec<f64>> = Vec::with_capacity(t_rounds);
    let mut round_solutions: Vec<ExoSolution> = Vec::with_capacity(t_rounds);
    let mut round_contexts: Vec<usize> = Vec::with_capacity(t_rounds);
    let mut trace = ExoTrace::default();

    let marginal = |log_w: &[f64], x: ContextId| -> Vec<f64> {
        let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut weights: Vec<f64> = log_w.iter().map(|&l| (l - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|v| *v /= total);
        let mut w = vec![0.0; a_count];
        for (i, pi) in class.iter().enumerate() {
            w[pi.action(x).0] += weights[i];
        }
        w
    };

    for _t in 0..t_rounds {
        let x = oracle.next_context();
        snapshots.push(log_w.clone());
        let w = marginal(&log_w, x);
        let sol = solve_exo(&w, gamma, mclass, solver_cfg);
        let a = ActionId(sample_index(&sol.q, &mut alg));
        let value = oracle.observe(a);
        let o = mclass
            .obs
            .index_of(value)
            .ok_or(ExoError::ObservationNotInGrid(value))?;

        for (i, pi) in class.iter().enumerate() {
            log_w[i] += sol.xi.get(pi.action(x).0, a.0, o);
        }
        let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        log_w.iter_mut().for_each(|l| *l -= max);

        trace.objectives.push(sol.objective_value);
        trace.actions.push(a.0);
        trace.any_solver_unconverged |= !sol.converged;
        trace.clamp_events += sol.clamp_events;
        round_contexts.push(x.0);
        round_solutions.push(sol);
    }
    let _ = &true_models; // realizability checked above; kept for clarity

    // Online-to-batch output: average the exploitation distributions solved
    // at every (snapshot, context) pair, reusing the round's own solution
    // where the context matches.
    let mut policy = vec![vec![0.0; a_count]; x_count];
    for (t, snapshot) in snapshots.iter().enumerate() {
        for x in 0..x_count {
            let p = if round_contexts[t] == x {
                round_solutions[t].p.clone()
            } else {
                let w = marginal(snapshot, ContextId(x));
                let sol = solve_exo(&w, gamma, mclass, solver_cfg);
                trace.any_solver_unconverged |= !sol.converged;
                sol.p
            };
            for (acc, v) in policy[x].iter_mut().zip(&p) {
                *acc += v / t_rounds as f64;
            }
        }
    }

    Ok((ExoOutput { policy, samples_total: oracle.draws() }, trace))
}
