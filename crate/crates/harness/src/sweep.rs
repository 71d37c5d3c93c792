//! Grid sweeps: the cartesian product of parameter grids times the seed
//! list, run in parallel and emitted in a canonical order.
//!
//! Each (point, seed) job derives its stream id from a stable hash of the
//! point parameters and seed, so results are independent of scheduling and
//! worker count. Wall times are recorded only in timing mode, because the
//! determinism contract compares emitted bytes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sparse_bandits::rng::{stable_hash, RngStream};

use crate::{run_point, Algorithm, Budget, ExoParams, FamilyConfig, HarnessError, SweepRow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub algorithm: Algorithm,
    pub family: FamilyConfig,
    #[serde(default)]
    pub s_grid: Vec<f64>,
    #[serde(default)]
    pub a_grid: Vec<usize>,
    #[serde(default)]
    pub pi_grid: Vec<usize>,
    pub eps_grid: Vec<f64>,
    /// `(K, m)` pairs for subset families.
    #[serde(default)]
    pub km_grid: Vec<(usize, usize)>,
    pub delta: f64,
    pub seeds: Vec<u64>,
    #[serde(default = "default_scale")]
    pub budget_scale: f64,
    /// Optional overrides for the Θ̃ multipliers (T and n respectively).
    #[serde(default)]
    pub t_multiplier: Option<f64>,
    #[serde(default)]
    pub n_multiplier: Option<f64>,
    /// Record measured wall times (breaks byte-identical output).
    #[serde(default)]
    pub timing: bool,
    #[serde(default)]
    pub exo: Option<ExoParams>,
}

fn default_scale() -> f64 {
    1.0
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.eps_grid.is_empty() {
            return Err(HarnessError::Config("eps_grid must be non-empty".into()));
        }
        if self.seeds.is_empty() {
            return Err(HarnessError::Config("seeds must be non-empty".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(HarnessError::Config("seeds must be distinct".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(HarnessError::Config("delta must lie in (0,1)".into()));
        }
        Ok(())
    }

    /// Materialize the family variants of the grid (cartesian product, with
    /// empty grids contributing the family's own value).
    fn points(&self) -> Vec<(FamilyConfig, f64)> {
        let families0 = vec![self.family.clone()];
        let apply =
            |fams: Vec<FamilyConfig>, f: &dyn Fn(&FamilyConfig) -> Vec<FamilyConfig>| -> Vec<FamilyConfig> {
                fams.iter().flat_map(f).collect()
            };
        let families = apply(families0, &|fam| {
            if self.a_grid.is_empty() {
                vec![fam.clone()]
            } else {
                self.a_grid.iter().map(|&a| fam.with_a_size(a)).collect()
            }
        });
        let families = apply(families, &|fam| {
            if self.s_grid.is_empty() {
                vec![fam.clone()]
            } else {
                self.s_grid.iter().map(|&s| fam.with_s(s)).collect()
            }
        });
        let families = apply(families, &|fam| {
            if self.pi_grid.is_empty() {
                vec![fam.clone()]
            } else {
                self.pi_grid.iter().map(|&n| fam.with_pi_size(n)).collect()
            }
        });
        let families = apply(families, &|fam| {
            if self.km_grid.is_empty() {
                vec![fam.clone()]
            } else {
                self.km_grid.iter().map(|&(k, m)| fam.with_km(k, m)).collect()
            }
        });
        families
            .into_iter()
            .flat_map(|fam| self.eps_grid.iter().map(move |&e| (fam.clone(), e)))
            .collect()
    }
}

fn row_shape(family: &FamilyConfig) -> (f64, usize, Option<usize>, Option<usize>, usize) {
    match family {
        FamilyConfig::Multiclass { a_size, pi_size, .. } => (1.0, *a_size, None, None, *pi_size),
        FamilyConfig::SparseBinary { a_size, s, pi_size, .. }
        | FamilyConfig::DenseL2 { a_size, s, pi_size, .. } => (*s, *a_size, None, None, *pi_size),
        FamilyConfig::List { k, m, pi_size, .. } => (1.0, *k, Some(*k), Some(*m), *pi_size),
        FamilyConfig::LowerBound { a_size } => (1.0, *a_size, None, None, a_size * a_size),
        FamilyConfig::Planted { a_size, s, pi_size, .. } => (*s, *a_size, None, None, *pi_size),
        FamilyConfig::EnvFile { pi_size, .. } => (f64::NAN, 0, None, None, *pi_size),
        FamilyConfig::Union { members } => {
            members.first().map_or((f64::NAN, 0, None, None, 0), row_shape)
        }
    }
}

/// Run the sweep on `workers` threads and return rows in canonical order.
pub fn run_sweep(
    cfg: &SweepConfig,
    master_seed: u64,
    workers: usize,
) -> Result<Vec<SweepRow>, HarnessError> {
    cfg.validate()?;
    let exo = cfg.exo.unwrap_or_default();
    let points = cfg.points();
    let jobs: Vec<(FamilyConfig, f64, u64)> = points
        .iter()
        .flat_map(|(fam, eps)| cfg.seeds.iter().map(move |&s| (fam.clone(), *eps, s)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;

    let rows: Result<Vec<SweepRow>, HarnessError> = pool.install(|| {
        jobs.par_iter()
            .map(|(family, eps, seed)| {
                let key = format!(
                    "{}|{}|{eps}|{}|{seed}",
                    cfg.algorithm.name(),
                    serde_json::to_string(family).expect("family serializes"),
                    cfg.delta
                );
                let stream = RngStream::with_stream(master_seed, stable_hash(key.as_bytes()));
                let started = std::time::Instant::now();
                let budget = Budget {
                    scale: cfg.budget_scale,
                    t_multiplier: cfg.t_multiplier,
                    n_multiplier: cfg.n_multiplier,
                };
                let outcome =
                    run_point(cfg.algorithm, family, *eps, cfg.delta, &budget, &exo, stream)?;
                let wall_time_ms =
                    if cfg.timing { started.elapsed().as_millis() as u64 } else { 0 };
                let (s, a_size, k, m, pi_size) = row_shape(family);
                assert!(
                    outcome.suboptimality >= -1e-10,
                    "negative suboptimality {}",
                    outcome.suboptimality
                );
                Ok(SweepRow {
                    algorithm: cfg.algorithm.name().to_string(),
                    s,
                    a_size,
                    k,
                    m,
                    pi_size,
                    eps: *eps,
                    delta: cfg.delta,
                    seed: *seed,
                    samples_used: outcome.samples_used,
                    suboptimality: outcome.suboptimality,
                    success: outcome.suboptimality <= *eps + 1e-12,
                    wall_time_ms,
                })
            })
            .collect()
    });
    let mut rows = rows?;
    rows.sort_by(|a, b| {
        a.s.total_cmp(&b.s)
            .then(a.a_size.cmp(&b.a_size))
            .then(a.k.cmp(&b.k))
            .then(a.m.cmp(&b.m))
            .then(a.pi_size.cmp(&b.pi_size))
            .then(a.eps.total_cmp(&b.eps))
            .then(a.seed.cmp(&b.seed))
    });
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rows_to_csv;

    fn tiny_config() -> SweepConfig {
        SweepConfig {
            algorithm: Algorithm::Lve,
            family: FamilyConfig::Multiclass {
                x_size: 3,
                a_size: 4,
                pi_size: 6,
                atoms: 1,
                hot_prob: 0.7,
            },
            s_grid: vec![],
            a_grid: vec![2, 4],
            pi_grid: vec![],
            eps_grid: vec![0.3],
            km_grid: vec![],
            delta: 0.2,
            seeds: vec![1, 2, 3],
            budget_scale: 0.05,
            t_multiplier: None,
            n_multiplier: None,
            timing: false,
            exo: None,
        }
    }

    #[test]
    fn sweep_is_byte_identical_across_worker_counts() {
        let cfg = tiny_config();
        let rows1 = run_sweep(&cfg, 77, 1).unwrap();
        let rows8 = run_sweep(&cfg, 77, 8).unwrap();
        assert_eq!(rows_to_csv(&rows1), rows_to_csv(&rows8));
        assert_eq!(rows1.len(), 6);
    }

    #[test]
    fn duplicate_seeds_are_rejected() {
        let mut cfg = tiny_config();
        cfg.seeds = vec![1, 1];
        assert!(matches!(run_sweep(&cfg, 0, 1), Err(HarnessError::Config(_))));
    }

    #[test]
    fn budget_audit_counts_both_phases() {
        let cfg = tiny_config();
        let rows = run_sweep(&cfg, 5, 1).unwrap();
        for r in &rows {
            let fam = cfg.family.with_a_size(r.a_size);
            let expect = crate::budget_for(
                cfg.algorithm,
                &fam,
                r.eps,
                r.delta,
                &Budget::scaled(cfg.budget_scale),
                &ExoParams::default(),
            )
            .unwrap();
            assert_eq!(r.samples_used, expect);
        }
    }
}
