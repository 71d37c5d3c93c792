//! Executable forms of the supporting lemmas.
//!
//! Exact inequalities (harmonic sum, Hedge regret, Hellinger variance) are
//! checked as fuzzed nonnegativity gaps; concentration inequalities are
//! probability statements and are validated as empirical coverage with a
//! binomial slack of `3·√(δ/trials)`. The `check-all-lemmas` CLI subcommand
//! and the acceptance suite both drive [`run_all_lemma_checks`].

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::RngStream;

// The regret and Hellinger-variance checkers live next to the machinery they
// exercise; this module re-exports them so the full suite has one home.
pub use crate::exo::hellinger_variance_gap;
pub use crate::mwu::hedge_regret_gap;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("sequence entry {0} outside [0, 1]")]
    EntryOutOfRange(f64),
    #[error("generator emitted {0} outside [0, {1}]")]
    GeneratorOutOfRange(f64, f64),
    #[error("generator produced mismatched sequence lengths")]
    LengthMismatch,
}

/// Gap of the harmonic-sum inequality
/// `Σ_i a_i/(1 + Σ_{j<i} a_j) ≤ 2·log(1 + Σ_i a_i)` for entries in `[0,1]`.
/// Returns `RHS − LHS`, asserted nonnegative by the lemma.
pub fn harmonic_bound_gap(a_seq: &[f64]) -> Result<f64, OracleError> {
    let mut prefix = 0.0;
    let mut lhs = 0.0;
    for &a in a_seq {
        if !(0.0..=1.0).contains(&a) {
            return Err(OracleError::EntryOutOfRange(a));
        }
        lhs += a / (1.0 + prefix);
        prefix += a;
    }
    Ok(2.0 * (1.0 + prefix).ln() - lhs)
}

/// Empirical coverage of a probability-`1−δ` statement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub trials: u64,
    pub violations: u64,
    pub delta: f64,
    pub pass: bool,
}

impl CoverageReport {
    pub fn from_counts(trials: u64, violations: u64, delta: f64) -> Self {
        let rate = violations as f64 / trials as f64;
        let slack = 3.0 * (delta / trials as f64).sqrt();
        Self { trials, violations, delta, pass: rate <= delta + slack }
    }

    pub fn violation_rate(&self) -> f64 {
        self.violations as f64 / self.trials as f64
    }
}

/// A synthetic adapted sequence with known conditional means, used to
/// exercise the multiplicative Freedman bounds.
pub trait MartingaleGen: Sync {
    fn name(&self) -> &'static str;
    /// Range bound `B`: every emitted value lies in `[0, B]`.
    fn bound(&self) -> f64;
    /// One sequence `(X_t)` together with `(E[X_t | F_{t−1}])`.
    fn simulate(&self, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>);
}

/// `X_t = c` deterministically.
pub struct ConstantGen {
    pub c: f64,
    pub b: f64,
    pub horizon: usize,
}

impl MartingaleGen for ConstantGen {
    fn name(&self) -> &'static str {
        "constant"
    }
    fn bound(&self) -> f64 {
        self.b
    }
    fn simulate(&self, _rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
        (vec![self.c; self.horizon], vec![self.c; self.horizon])
    }
}

/// I.i.d. `B·Bernoulli(p)`.
pub struct IidBernoulliGen {
    pub p: f64,
    pub b: f64,
    pub horizon: usize,
}

impl MartingaleGen for IidBernoulliGen {
    fn name(&self) -> &'static str {
        "iid-bernoulli"
    }
    fn bound(&self) -> f64 {
        self.b
    }
    fn simulate(&self, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
        let xs: Vec<f64> = (0..self.horizon)
            .map(|_| if rng.random::<f64>() < self.p { self.b } else { 0.0 })
            .collect();
        (xs, vec![self.b * self.p; self.horizon])
    }
}

/// Adversarially adapted generator: the success probability drifts against
/// the running mean of the history, so conditional means are genuinely
/// history-dependent.
pub struct AdaptedDriftGen {
    pub b: f64,
    pub horizon: usize,
}

impl MartingaleGen for AdaptedDriftGen {
    fn name(&self) -> &'static str {
        "adapted-drift"
    }
    fn bound(&self) -> f64 {
        self.b
    }
    fn simulate(&self, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
        let mut xs = Vec::with_capacity(self.horizon);
        let mut means = Vec::with_capacity(self.horizon);
        let mut running = 0.0;
        for t in 0..self.horizon {
            let hist_mean = if t == 0 { 0.5 * self.b } else { running / t as f64 };
            let p = (0.9 - 0.8 * hist_mean / self.b).clamp(0.05, 0.95);
            means.push(self.b * p);
            let x = if rng.random::<f64>() < p { self.b } else { 0.0 };
            running += x;
            xs.push(x);
        }
        (xs, means)
    }
}

/// The generator fixtures shipped with the crate.
pub fn shipped_generators() -> Vec<Box<dyn MartingaleGen>> {
    vec![
        Box::new(ConstantGen { c: 0.6, b: 1.0, horizon: 100 }),
        Box::new(IidBernoulliGen { p: 0.5, b: 2.0, horizon: 100 }),
        Box::new(AdaptedDriftGen { b: 1.5, horizon: 100 }),
    ]
}

/// Simulate `trials` sequences and count violations of both multiplicative
/// Freedman tails with parameter `a_or_b`:
/// upper `Σ X_t ≤ (1+1/a)·Σ E[X_t|F] + aB·log(1/δ)` and
/// lower `Σ X_t ≥ (1−1/b)·Σ E[X_t|F] − bB·log(1/δ)`.
/// The report carries the worse of the two tallies.
pub fn freedman_mult_coverage(
    generator: &dyn MartingaleGen,
    a_or_b: f64,
    delta: f64,
    trials: u64,
    stream: RngStream,
) -> Result<CoverageReport, OracleError> {
    assert!(a_or_b >= 1.0, "the lemma requires a, b >= 1");
    let b_range = generator.bound();
    let log_term = (1.0 / delta).ln();
    let mut upper_viol = 0u64;
    let mut lower_viol = 0u64;
    let mut rng = stream.rng();
    for _ in 0..trials {
        let (xs, means) = generator.simulate(&mut rng);
        if xs.len() != means.len() {
            return Err(OracleError::LengthMismatch);
        }
        if let Some(&bad) = xs.iter().find(|&&x| !(0.0..=b_range).contains(&x)) {
            return Err(OracleError::GeneratorOutOfRange(bad, b_range));
        }
        let s: f64 = xs.iter().sum();
        let m: f64 = means.iter().sum();
        if s > (1.0 + 1.0 / a_or_b) * m + a_or_b * b_range * log_term {
            upper_viol += 1;
        }
        if s < (1.0 - 1.0 / a_or_b) * m - a_or_b * b_range * log_term {
            lower_viol += 1;
        }
    }
    Ok(CoverageReport::from_counts(trials, upper_viol.max(lower_viol), delta))
}

/// One line of the lemma-suite summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub name: String,
    pub trials: u64,
    /// Worst gap for exact lemmas, worst violation rate for coverage checks.
    pub worst: f64,
    pub pass: bool,
}

/// Trial counts for the full suite. The CLI and the acceptance tests use
/// [`LemmaSuiteConfig::full`]; unit tests shrink it.
#[derive(Debug, Clone, Copy)]
pub struct LemmaSuiteConfig {
    pub harmonic_trials: u64,
    pub hedge_trials: u64,
    pub hellinger_trials: u64,
    pub coverage_trials: u64,
}

impl LemmaSuiteConfig {
    pub fn full() -> Self {
        Self {
            harmonic_trials: 1_000_000,
            hedge_trials: 10_000,
            hellinger_trials: 100_000,
            coverage_trials: 10_000,
        }
    }

    pub fn quick() -> Self {
        Self { harmonic_trials: 2_000, hedge_trials: 100, hellinger_trials: 2_000, coverage_trials: 500 }
    }
}

/// Worst (smallest) harmonic-sum gap over fuzzed sequences of length ≤ 500.
pub fn harmonic_fuzz_worst(trials: u64, stream: RngStream) -> f64 {
    let mut rng = stream.rng();
    let mut worst = f64::INFINITY;
    for _ in 0..trials {
        let n = rng.random_range(1..=500);
        let seq: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..=1.0)).collect();
        let gap = harmonic_bound_gap(&seq).expect("entries in range by construction");
        worst = worst.min(gap);
    }
    worst
}

/// Worst (largest) Hedge regret gap over fuzzed runs with `T ≤ 200`,
/// `R ≤ 8`, `|Π| ≤ 32` and admissible step sizes.
pub fn hedge_fuzz_worst(trials: u64, stream: RngStream) -> f64 {
    let mut rng = stream.rng();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let n = rng.random_range(2..=32);
        let t = rng.random_range(1..=200);
        let r: f64 = rng.random_range(0.1..=8.0);
        let eta = rng.random_range(0.05..=1.0) / r;
        let us: Vec<Vec<f64>> = (0..t)
            .map(|_| (0..n).map(|_| rng.random_range(0.0..=r)).collect())
            .collect();
        let mut p_star = vec![0.0; n];
        p_star[rng.random_range(0..n)] = 1.0;
        let gap = hedge_regret_gap(&us, eta, r, &p_star).expect("valid parameters");
        worst = worst.max(gap);
    }
    worst
}

/// Worst (smallest) Hellinger-variance gap over fuzzed `(P, Q, f)` triples.
pub fn hellinger_fuzz_worst(trials: u64, stream: RngStream) -> f64 {
    let mut rng = stream.rng();
    let mut worst = f64::INFINITY;
    for _ in 0..trials {
        let n = rng.random_range(2..=8);
        let mut p: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let mut q: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let (sp, sq): (f64, f64) = (p.iter().sum(), q.iter().sum());
        p.iter_mut().for_each(|v| *v /= sp);
        q.iter_mut().for_each(|v| *v /= sq);
        let f: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let gap = hellinger_variance_gap(&p, &q, &f).expect("valid triple");
        worst = worst.min(gap);
    }
    worst
}

/// Run every lemma checker and return one summary line per lemma.
pub fn run_all_lemma_checks(cfg: &LemmaSuiteConfig, stream: RngStream) -> Vec<LemmaCheck> {
    let mut out = Vec::new();

    let worst = harmonic_fuzz_worst(cfg.harmonic_trials, stream.substream(1));
    out.push(LemmaCheck {
        name: "harmonic-sum".into(),
        trials: cfg.harmonic_trials,
        worst,
        pass: worst >= -1e-9,
    });

    let worst = hedge_fuzz_worst(cfg.hedge_trials, stream.substream(2));
    out.push(LemmaCheck {
        name: "hedge-regret".into(),
        trials: cfg.hedge_trials,
        worst,
        pass: worst <= 1e-9,
    });

    let worst = hellinger_fuzz_worst(cfg.hellinger_trials, stream.substream(3));
    out.push(LemmaCheck {
        name: "hellinger-variance".into(),
        trials: cfg.hellinger_trials,
        worst,
        pass: worst >= -1e-9,
    });

    // Multiplicative Freedman coverage on the shipped generators.
    for (gi, generator) in shipped_generators().iter().enumerate() {
        for (di, &delta) in [0.01, 0.05, 0.1].iter().enumerate() {
            let sub = stream.substream(1000 + (gi * 8 + di) as u64);
            let report = freedman_mult_coverage(generator.as_ref(), 2.0, delta, cfg.coverage_trials, sub)
                .expect("shipped generators stay in range");
            out.push(LemmaCheck {
                name: format!("freedman-mult[{},delta={delta}]", generator.name()),
                trials: report.trials,
                worst: report.violation_rate(),
                pass: report.pass,
            });
        }
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_gap_zero_sequence() {
        assert_eq!(harmonic_bound_gap(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn harmonic_gap_ones_hand_value() {
        // a = (1,1,1): LHS = 1 + 1/2 + 1/3 = 11/6, RHS = 2·ln 4.
        let gap = harmonic_bound_gap(&[1.0, 1.0, 1.0]).unwrap();
        let expect = 2.0 * 4.0_f64.ln() - 11.0 / 6.0;
        assert!((gap - expect).abs() < 1e-12);
        assert!((gap - 0.9392).abs() < 1e-4);
    }

    #[test]
    fn harmonic_rejects_out_of_range() {
        assert!(harmonic_bound_gap(&[0.5, 1.2]).is_err());
        assert!(harmonic_bound_gap(&[-0.1]).is_err());
    }

    #[test]
    fn coverage_report_pass_formula() {
        let r = CoverageReport::from_counts(10_000, 500, 0.05);
        assert!(r.pass); // rate 0.05 ≤ 0.05 + slack
        let slack = 3.0 * (0.05_f64 / 10_000.0).sqrt();
        let limit = ((0.05 + slack) * 10_000.0).floor() as u64;
        let r2 = CoverageReport::from_counts(10_000, limit + 1, 0.05);
        assert!(!r2.pass);
    }

    #[test]
    fn constant_generator_never_violates() {
        let g = ConstantGen { c: 0.4, b: 1.0, horizon: 50 };
        let report =
            freedman_mult_coverage(&g, 2.0, 0.05, 200, RngStream::new(1)).unwrap();
        assert_eq!(report.violations, 0);
        assert!(report.pass);
    }

    #[test]
    fn iid_bernoulli_coverage_within_slack() {
        let g = IidBernoulliGen { p: 0.5, b: 2.0, horizon: 100 };
        let report =
            freedman_mult_coverage(&g, 2.0, 0.05, 10_000, RngStream::new(2)).unwrap();
        assert!(report.pass, "rate = {}", report.violation_rate());
    }

    #[test]
    fn adapted_generator_coverage_within_slack() {
        let g = AdaptedDriftGen { b: 1.5, horizon: 100 };
        let report =
            freedman_mult_coverage(&g, 2.0, 0.05, 10_000, RngStream::new(3)).unwrap();
        assert!(report.pass, "rate = {}", report.violation_rate());
    }

    #[test]
    fn quick_suite_passes() {
        let checks = run_all_lemma_checks(&LemmaSuiteConfig::quick(), RngStream::new(4));
        for c in &checks {
            assert!(c.pass, "{} failed: worst = {}", c.name, c.worst);
        }
        assert!(checks.len() >= 3 + 9);
    }
}
