//! Empirical sample-complexity search: doubling then log-space bisection on
//! the budget multiplier until the per-seed success rate crosses the target,
//! at resolution factor 1.25.

use serde::{Deserialize, Serialize};
use sparse_bandits::rng::{stable_hash, RngStream};

use crate::{budget_for, run_point, Algorithm, Budget, ExoParams, FamilyConfig, HarnessError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSpec {
    pub success_target: f64,
    pub seeds_per_point: usize,
    /// Hard cap on the probed total budget.
    pub budget_cap: u64,
    /// Geometric resolution of the final bracket.
    pub resolution: f64,
    /// Smallest probed budget multiplier.
    pub scale_floor: f64,
}

impl Default for SearchSpec {
    fn default() -> Self {
        Self {
            success_target: 0.9,
            seeds_per_point: 50,
            budget_cap: 100_000_000,
            resolution: 1.25,
            scale_floor: 1.0 / 4096.0,
        }
    }
}

/// File-based description of a search, for `bandits search --config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub algorithm: Algorithm,
    pub family: FamilyConfig,
    pub eps: f64,
    pub delta: f64,
    #[serde(default = "default_target")]
    pub success_target: f64,
    #[serde(default = "default_seeds")]
    pub seeds_per_point: usize,
}

fn default_target() -> f64 {
    0.9
}

fn default_seeds() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    /// Smallest tested total budget meeting the target.
    pub budget: u64,
    /// The budget multiplier that produced it.
    pub scale: f64,
    pub success_rate: f64,
    /// Every probe as `(scale, budget, success_rate)`, in test order.
    pub probes: Vec<(f64, u64, f64)>,
}

/// Success rate of `algo` on the family at one budget scale: the same seed
/// list is replayed at every probe, each seed redrawing the instance.
#[allow(clippy::too_many_arguments)]
fn success_rate(
    algo: Algorithm,
    family: &FamilyConfig,
    eps: f64,
    delta: f64,
    scale: f64,
    spec: &SearchSpec,
    exo: &ExoParams,
    master: RngStream,
) -> Result<f64, HarnessError> {
    let mut successes = 0usize;
    for i in 0..spec.seeds_per_point {
        let stream = RngStream::with_stream(
            master.seed,
            stable_hash(format!("search:{}:{}", master.stream_id, i).as_bytes()),
        );
        let outcome = run_point(algo, family, eps, delta, &Budget::scaled(scale), exo, stream)?;
        if outcome.suboptimality <= eps + 1e-12 {
            successes += 1;
        }
    }
    Ok(successes as f64 / spec.seeds_per_point as f64)
}

pub fn sample_complexity_search(
    family: &FamilyConfig,
    algo: Algorithm,
    eps: f64,
    delta: f64,
    spec: &SearchSpec,
    exo: &ExoParams,
    master: RngStream,
) -> Result<SearchResult, HarnessError> {
    if !(spec.success_target > 0.5 && spec.success_target < 1.0) {
        return Err(HarnessError::Config("success target must lie in (0.5, 1)".into()));
    }
    let mut probes = Vec::new();
    let mut probe = |scale: f64| -> Result<(u64, f64), HarnessError> {
        let budget = budget_for(algo, family, eps, delta, &Budget::scaled(scale), exo)?;
        let rate = success_rate(algo, family, eps, delta, scale, spec, exo, master)?;
        probes.push((scale, budget, rate));
        Ok((budget, rate))
    };

    // Doubling until the target is met.
    let mut scale = spec.scale_floor;
    let (mut budget, mut rate) = probe(scale)?;
    if rate >= spec.success_target {
        return Ok(SearchResult { budget, scale, success_rate: rate, probes });
    }
    let mut lo = scale;
    loop {
        scale *= 2.0;
        if budget_for(algo, family, eps, delta, &Budget::scaled(scale), exo)? > spec.budget_cap {
            return Err(HarnessError::BudgetCapExceeded { cap: spec.budget_cap });
        }
        (budget, rate) = probe(scale)?;
        if rate >= spec.success_target {
            break;
        }
        lo = scale;
    }
    let mut hi = scale;
    let mut hi_budget = budget;
    let mut hi_rate = rate;

    // Log-space bisection to the stated resolution.
    while hi / lo > spec.resolution {
        let mid = (lo * hi).sqrt();
        let (b, r) = probe(mid)?;
        if r >= spec.success_target {
            hi = mid;
            hi_budget = b;
            hi_rate = r;
        } else {
            lo = mid;
        }
    }

    Ok(SearchResult { budget: hi_budget, scale: hi, success_rate: hi_rate, probes })
}
