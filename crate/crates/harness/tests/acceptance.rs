//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (run with `cargo test --test acceptance -- --nocapture` to see them).
//!
//! Every tolerance and threshold is pinned here, in code. The Monte-Carlo
//! criteria are deterministic end to end: instance draws, algorithm runs and
//! searches all derive from fixed master streams.

use rand::Rng;
use sparse_bandits::ccsb::{self, CcsbConfig};
use sparse_bandits::env::{ActionSpace, ContextId, Environment};
use sparse_bandits::exo::{
    env_from_models, pdec_estimate, random_local_model_class, random_sparse_model_class,
    randomized_policy_value, run_exo, Model, ModelClass, ObservationSpace, SolverConfig,
};
use sparse_bandits::gen::{
    make_semibandit_env, make_sparse_env, PolicyStyle, RewardStyle, SemiBanditEnvSpec,
    SparseEnvSpec,
};
use sparse_bandits::lve::{self, LveConfig};
use sparse_bandits::oracles::{
    freedman_mult_coverage, harmonic_fuzz_worst, hedge_fuzz_worst, hellinger_fuzz_worst,
    shipped_generators,
};
use sparse_bandits::policy::{best_policy_value, policy_value_exact, Policy, PolicyClass};
use sparse_bandits::rng::RngStream;
use sparse_bandits::{ActionId, SparsityMode};
use sparse_bandits_harness::{
    run_sweep, sample_complexity_search, Algorithm, ExoParams, FamilyConfig, SearchSpec,
    SweepConfig,
};

fn binomial(n: usize, k: usize) -> u64 {
    let k = k.min(n - k);
    let mut out: u64 = 1;
    for i in 0..k {
        out = out.saturating_mul((n - i) as u64) / (i as u64 + 1);
    }
    out
}

fn verdict(criterion: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

// ---------------------------------------------------------------------------
// 1. Exact lemma suite.
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_exact_lemma_suite() {
    let stream = RngStream::new(0xACC1);
    let harmonic = harmonic_fuzz_worst(1_000_000, stream.substream(1));
    let hedge = hedge_fuzz_worst(10_000, stream.substream(2));
    let hellinger = hellinger_fuzz_worst(100_000, stream.substream(3));
    let pass = harmonic >= -1e-9 && hedge <= 1e-9 && hellinger >= -1e-9;
    verdict(
        "1 (exact lemmas)",
        pass,
        &format!(
            "harmonic worst gap {harmonic:.3e} (>= -1e-9), hedge worst gap {hedge:.3e} \
             (<= 1e-9), hellinger-variance worst gap {hellinger:.3e} (>= -1e-9)"
        ),
    );
}

// ---------------------------------------------------------------------------
// 2. Freedman coverage suite.
// ---------------------------------------------------------------------------

#[test]
fn criterion_02_freedman_coverage() {
    let stream = RngStream::new(0xACC2);
    let mut all_pass = true;
    let mut worst_line = String::new();
    let mut worst_margin = f64::INFINITY;
    for (gi, generator) in shipped_generators().iter().enumerate() {
        for (di, &delta) in [0.01, 0.05, 0.1].iter().enumerate() {
            let report = freedman_mult_coverage(
                generator.as_ref(),
                2.0,
                delta,
                10_000,
                stream.substream((gi * 8 + di) as u64),
            )
            .expect("shipped generators stay in range");
            all_pass &= report.pass;
            let slack = delta + 3.0 * (delta / report.trials as f64).sqrt();
            let margin = slack - report.violation_rate();
            if margin < worst_margin {
                worst_margin = margin;
                worst_line = format!(
                    "worst: {} at delta={delta}: rate {:.4} vs allowed {:.4}",
                    generator.name(),
                    report.violation_rate(),
                    slack
                );
            }
        }
    }
    verdict("2 (freedman coverage)", all_pass, &worst_line);
}

// ---------------------------------------------------------------------------
// 3. Exact unbiasedness of the Phase-II estimators.
// ---------------------------------------------------------------------------

#[test]
fn criterion_03_unbiasedness_exact() {
    let master = RngStream::new(0xACC3);
    let mut worst = 0.0_f64;

    let mut shape_rng = master.substream(1).rng();
    for i in 0..200u64 {
        let styles = [
            (RewardStyle::OneHot, SparsityMode::L1),
            (RewardStyle::SparseBinary, SparsityMode::L1),
            (RewardStyle::DenseScaled, SparsityMode::L2),
        ];
        let (style, mode) = styles[shape_rng.random_range(0..styles.len())];
        let a_size = shape_rng.random_range(2..=10);
        let x_size = shape_rng.random_range(1..=5);
        let map_count = (a_size as u64).saturating_pow(x_size as u32).min(12);
        let spec = SparseEnvSpec {
            x_size,
            a_size,
            s: shape_rng.random_range(1.0..=a_size as f64),
            mode,
            reward_style: style,
            pi_size: shape_rng.random_range(1..=map_count as usize),
            atoms_per_context: shape_rng.random_range(1..=3),
            policy_style: PolicyStyle::HotBiased { hot_prob: 0.6 },
        };
        let (env, class, _) = make_sparse_env(&spec, master.substream(100 + i)).unwrap();
        let mut rng = master.substream(300 + i).rng();
        let selected: Vec<usize> =
            (0..shape_rng.random_range(1..=30)).map(|_| rng.random_range(0..class.len())).collect();
        let ed = lve::ExplorationDistribution::from_selected(
            &class,
            env.context_count(),
            env.reward_dim(),
            selected,
        );
        let gamma = shape_rng.random_range(0.05..=0.5);
        let pi = class.get(rng.random_range(0..class.len()));
        let mean = lve::estimator_mean_exact(&env, &class, &ed, gamma, pi);
        let value = policy_value_exact(&env, pi);
        worst = worst.max((mean - value).abs());
    }

    for i in 0..200u64 {
        let k = shape_rng.random_range(3..=10);
        let m = shape_rng.random_range(1..=k.min(4));
        let x_size = shape_rng.random_range(1..=4);
        let subsets = binomial(k, m);
        let map_count = subsets.saturating_pow(x_size as u32).min(10);
        let spec = SemiBanditEnvSpec {
            x_size,
            k,
            m,
            s: shape_rng.random_range(1.0..=k.min(4) as f64),
            reward_style: if shape_rng.random::<bool>() {
                RewardStyle::OneHot
            } else {
                RewardStyle::SparseBinary
            },
            pi_size: shape_rng.random_range(1..=map_count as usize),
            atoms_per_context: shape_rng.random_range(1..=2),
        };
        let (env, class, _) = make_semibandit_env(&spec, master.substream(500 + i)).unwrap();
        let mut rng = master.substream(700 + i).rng();
        let selected: Vec<usize> =
            (0..shape_rng.random_range(1..=25)).map(|_| rng.random_range(0..class.len())).collect();
        let ed = ccsb::exploration_from_selected(&class, env.context_count(), k, selected);
        let gamma = shape_rng.random_range(0.05..=0.5);
        let pi = class.get(rng.random_range(0..class.len()));
        let mean = ccsb::estimator_mean_ccsb_exact(&env, &class, &ed, gamma, m, pi);
        let value = sparse_bandits::policy::subset_policy_value_exact(&env, pi);
        worst = worst.max((mean - value).abs());
    }

    verdict(
        "3 (unbiasedness)",
        worst <= 1e-10,
        &format!("worst |E[R_i(pi)] - R(pi)| = {worst:.3e} over 400 fixtures (<= 1e-10)"),
    );
}

// ---------------------------------------------------------------------------
// 4. Phase-I variance bounds with explicit constants.
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_variance_bounds() {
    let master = RngStream::new(0xACC4);
    let gamma = 0.5;
    let delta = 0.05;
    let runs_per_instance = 400usize;
    let needed = (0.85 * runs_per_instance as f64).ceil() as usize;

    // Single-action bound: 96·s·logT + 22·(|A|²/γT)·log(|Π|/δ).
    let mut shape_rng = master.substream(1).rng();
    let mut worst_fraction = 1.0_f64;
    for i in 0..20u64 {
        let a_size = shape_rng.random_range(4..=32);
        let s = shape_rng.random_range(1.0..=8.0_f64.min(a_size as f64));
        let pi_size = shape_rng.random_range(4..=40);
        let style = if shape_rng.random::<bool>() {
            RewardStyle::SparseBinary
        } else {
            RewardStyle::OneHot
        };
        let spec = SparseEnvSpec {
            x_size: shape_rng.random_range(2..=6),
            a_size,
            s,
            mode: SparsityMode::L1,
            reward_style: style,
            pi_size,
            atoms_per_context: 2,
            policy_style: PolicyStyle::HotBiased { hot_prob: 0.7 },
        };
        let (env, class, _) = make_sparse_env(&spec, master.substream(10 + i)).unwrap();
        for (ti, t_mult) in [2.0, 8.0].into_iter().enumerate() {
            let t_rounds = (t_mult * a_size as f64 / gamma).ceil() as usize;
            let bound = 96.0 * s * (t_rounds as f64).ln()
                + 22.0 * (a_size as f64).powi(2) / (gamma * t_rounds as f64)
                    * (pi_size as f64 / delta).ln();
            let cfg = LveConfig {
                t_rounds,
                n_rounds: 1,
                eta: gamma / a_size as f64,
                gamma,
                t_multiplier: 8.0,
                n_multiplier: 16.0,
            };
            let mut ok = 0usize;
            for run in 0..runs_per_instance {
                let stream = master.substream(1000 + i * 64 + ti as u64).substream(run as u64);
                let (ed, _) = lve::phase1(&env, &class, &cfg, stream).unwrap();
                let all_within = class.iter().all(|pi| {
                    lve::estimator_variance_exact(&env, &ed, gamma, pi) <= bound
                });
                ok += all_within as usize;
            }
            worst_fraction = worst_fraction.min(ok as f64 / runs_per_instance as f64);
            assert!(
                ok >= needed,
                "lve instance {i} (|A|={a_size}, s={s:.2}, |Pi|={pi_size}, T={t_rounds}): \
                 only {ok}/{runs_per_instance} runs within the bound"
            );
        }
    }

    // Semi-bandit case with constants 96·s·logT + 22·(K²·min(s,m)/(γm²T))·log(|Π|/δ).
    let mut worst_fraction_ccsb = 1.0_f64;
    for i in 0..20u64 {
        let k = shape_rng.random_range(6..=32);
        let m = shape_rng.random_range(2..=k / 2).min(6);
        let s = shape_rng.random_range(1.0..=8.0_f64.min(k as f64));
        let pi_size = shape_rng.random_range(4..=40);
        let spec = SemiBanditEnvSpec {
            x_size: shape_rng.random_range(2..=5),
            k,
            m,
            s,
            reward_style: if shape_rng.random::<bool>() {
                RewardStyle::SparseBinary
            } else {
                RewardStyle::OneHot
            },
            pi_size,
            atoms_per_context: 2,
        };
        let (env, class, _) = make_semibandit_env(&spec, master.substream(40 + i)).unwrap();
        let ms = s.min(m as f64);
        for (ti, t_mult) in [2.0, 8.0].into_iter().enumerate() {
            let t_rounds = (t_mult * k as f64 / (m as f64 * gamma)).ceil() as usize;
            let bound = 96.0 * s * (t_rounds as f64).ln()
                + 22.0 * (k as f64).powi(2) * ms
                    / (gamma * (m as f64).powi(2) * t_rounds as f64)
                    * (pi_size as f64 / delta).ln();
            let cfg = CcsbConfig {
                t_rounds,
                n_rounds: 1,
                eta: gamma * m as f64 / (k as f64 * ms),
                gamma,
                k,
                m,
                s,
                t_multiplier: 8.0,
                n_multiplier: 16.0,
            };
            let mut ok = 0usize;
            for run in 0..runs_per_instance {
                let stream = master.substream(5000 + i * 64 + ti as u64).substream(run as u64);
                let (ed, _) = ccsb::phase1_ccsb(&env, &class, &cfg, stream).unwrap();
                let all_within = class.iter().all(|pi| {
                    ccsb::estimator_variance_ccsb_exact(&env, &ed, gamma, m, pi) <= bound
                });
                ok += all_within as usize;
            }
            worst_fraction_ccsb = worst_fraction_ccsb.min(ok as f64 / runs_per_instance as f64);
            assert!(
                ok >= needed,
                "ccsb instance {i} (K={k}, m={m}, s={s:.2}): {ok}/{runs_per_instance}"
            );
        }
    }

    verdict(
        "4 (variance bounds)",
        true,
        &format!(
            "worst within-bound fraction: lve {worst_fraction:.3}, ccsb {worst_fraction_ccsb:.3} \
             (>= 0.85 required on every instance)"
        ),
    );
}

// ---------------------------------------------------------------------------
// 5. End-to-end epsilon-optimality at the derived defaults.
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_end_to_end_optimality() {
    let master = RngStream::new(0xACC5);
    let (eps, delta) = (0.2, 0.1);

    let family = FamilyConfig::Multiclass {
        x_size: 10,
        a_size: 8,
        pi_size: 20,
        atoms: 2,
        hot_prob: 0.75,
    };
    let mut lve_successes = 0usize;
    for seed in 0..100u64 {
        let stream = master.substream(seed);
        let outcome = sparse_bandits_harness::run_point(
            Algorithm::Lve,
            &family,
            eps,
            delta,
            &sparse_bandits_harness::Budget::default(),
            &ExoParams::default(),
            stream,
        )
        .unwrap();
        lve_successes += (outcome.suboptimality <= eps + 1e-12) as usize;
    }

    let list = FamilyConfig::List { x_size: 10, k: 8, m: 2, pi_size: 20, atoms: 2 };
    let mut ccsb_successes = 0usize;
    for seed in 0..100u64 {
        let stream = master.substream(1000 + seed);
        let outcome = sparse_bandits_harness::run_point(
            Algorithm::Ccsb,
            &list,
            eps,
            delta,
            &sparse_bandits_harness::Budget::default(),
            &ExoParams::default(),
            stream,
        )
        .unwrap();
        ccsb_successes += (outcome.suboptimality <= eps + 1e-12) as usize;
    }

    let pass = lve_successes >= 85 && ccsb_successes >= 85;
    verdict(
        "5 (end-to-end)",
        pass,
        &format!("lve {lve_successes}/100, ccsb {ccsb_successes}/100 successes (>= 85 each)"),
    );
}

// ---------------------------------------------------------------------------
// 6. Scaling laws.
// ---------------------------------------------------------------------------

/// Geometric mean of searched budgets over independent repeat searches.
fn searched_budget(
    family: &FamilyConfig,
    algo: Algorithm,
    eps: f64,
    delta: f64,
    master: RngStream,
    repeats: u64,
) -> f64 {
    let spec = SearchSpec::default();
    let exo = ExoParams::default();
    let mut log_sum = 0.0;
    for r in 0..repeats {
        let res =
            sample_complexity_search(family, algo, eps, delta, &spec, &exo, master.substream(r))
                .expect("search completes under the budget cap");
        log_sum += (res.budget as f64).ln();
    }
    (log_sum / repeats as f64).exp()
}

fn slope_fit(points: &[(f64, f64)]) -> f64 {
    sparse_bandits_harness::fit_log_log(points).expect("enough grid points").slope
}

fn scaling_family_6a(s: f64) -> FamilyConfig {
    FamilyConfig::Union {
        members: vec![
            FamilyConfig::Planted { a_size: 64, s, pi_size: 40, gap_mult: 1.7 },
            FamilyConfig::SparseBinary { x_size: 12, a_size: 64, s, pi_size: 40 },
        ],
    }
}

#[test]
fn criterion_06_scaling_laws() {
    let master = RngStream::new(0xACC6);
    let (eps, delta) = (0.1, 0.1);
    let repeats = 3;

    // (a) LVE vs s at |A| = 64.
    let mut points_a = Vec::new();
    for (i, s) in [1.0, 4.0, 16.0].into_iter().enumerate() {
        let n = searched_budget(
            &scaling_family_6a(s),
            Algorithm::Lve,
            eps,
            delta,
            master.substream(10 + i as u64),
            repeats,
        );
        points_a.push((s, n));
    }
    let slope_s = slope_fit(&points_a);

    // (b) baseline-etc vs |A| at s = 1.
    let mut points_b = Vec::new();
    for (i, a) in [8usize, 16, 32, 64].into_iter().enumerate() {
        let family = FamilyConfig::SparseBinary { x_size: 12, a_size: a, s: 1.0, pi_size: 40 };
        let n = searched_budget(
            &family,
            Algorithm::BaselineEtc,
            eps,
            delta,
            master.substream(20 + i as u64),
            repeats,
        );
        points_b.push((a as f64, n));
    }
    let slope_a = slope_fit(&points_b);

    // (c) head-to-head at |A| = 64, s = 1 on the same family as (b).
    let family64 = FamilyConfig::SparseBinary { x_size: 12, a_size: 64, s: 1.0, pi_size: 40 };
    let lve_budget =
        searched_budget(&family64, Algorithm::Lve, eps, delta, master.substream(30), repeats);
    let etc_budget = points_b[3].1;
    let ratio = lve_budget / etc_budget;

    let pass = (0.7..=1.3).contains(&slope_s) && (0.8..=1.2).contains(&slope_a) && ratio <= 0.5;
    verdict(
        "6 (scaling laws)",
        pass,
        &format!(
            "s-slope {slope_s:.3} (in [0.7, 1.3]); |A|-slope {slope_a:.3} (in [0.8, 1.2]); \
             lve/etc budget ratio at |A|=64 is {ratio:.3} (<= 0.5; {lve_budget:.0} vs {etc_budget:.0})"
        ),
    );
}

// ---------------------------------------------------------------------------
// 7. Lower bound: no algorithm beats Omega(|A|/eps).
// ---------------------------------------------------------------------------

#[test]
fn criterion_07_lower_bound_barrier() {
    let master = RngStream::new(0xACC7);
    let (eps, delta) = (0.1, 0.1);
    let repeats = 3;
    let mut slopes = Vec::new();
    for (ai, algo) in [Algorithm::Lve, Algorithm::BaselineEtc].into_iter().enumerate() {
        let mut points = Vec::new();
        for (i, a) in [8usize, 16, 32, 64].into_iter().enumerate() {
            let family = FamilyConfig::LowerBound { a_size: a };
            let n = searched_budget(
                &family,
                algo,
                eps,
                delta,
                master.substream((ai * 100 + i) as u64),
                repeats,
            );
            points.push((a as f64, n));
        }
        slopes.push((algo.name(), slope_fit(&points)));
    }
    let pass = slopes.iter().all(|&(_, s)| s >= 0.8);
    verdict(
        "7 (lower bound)",
        pass,
        &format!(
            "{} |A|-slope {:.3}, {} |A|-slope {:.3} (both >= 0.8)",
            slopes[0].0, slopes[0].1, slopes[1].0, slopes[1].1
        ),
    );
}

// ---------------------------------------------------------------------------
// 8. DEC bound with explicit constant 64·s/gamma.
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_dec_bound() {
    let master = RngStream::new(0xACC8);
    let mut shape_rng = master.substream(1).rng();
    let solver = SolverConfig::default();
    let mut worst_margin = f64::INFINITY;
    for i in 0..50u64 {
        let a = shape_rng.random_range(2..=4usize);
        let o = shape_rng.random_range(2..=3usize);
        let count = shape_rng.random_range(2..=20usize);
        let s = shape_rng.random_range(1.0..=2.0f64);
        // Alternate wide random classes with tight local perturbation classes
        // (the latter make the gap/information tradeoff bind).
        let base = if i % 2 == 0 {
            random_sparse_model_class(a, o, count, s, master.substream(100 + i))
        } else {
            let radius = 10f64.powf(shape_rng.random_range(-4.0..=-0.7));
            random_local_model_class(a, o, count, s, radius, master.substream(100 + i))
        };
        let mbar = base.uniform_mixture();
        let mut models = base.models().to_vec();
        models.push(mbar.clone());
        let class = ModelClass::new(base.obs().clone(), models, s).unwrap();
        for k in 0..5u32 {
            let gamma = 32.0 * a as f64 * f64::from(1u32 << k);
            let est = pdec_estimate(&class, &mbar, gamma, &solver).unwrap();
            let bound = 64.0 * s / gamma;
            assert!(
                est.value <= bound + 1e-12 && est.value >= -1e-9,
                "class {i} gamma {gamma}: pdec {} outside [0, {bound}]",
                est.value
            );
            assert!(
                est.certificate_value <= bound + 1e-12,
                "class {i} gamma {gamma}: certificate {} above {bound}",
                est.certificate_value
            );
            worst_margin = worst_margin.min(bound - est.value.max(est.certificate_value));
        }
    }
    verdict(
        "8 (DEC bound)",
        true,
        &format!(
            "pdec and certificate below 64*s/gamma on 50 classes x 5 gammas; \
             smallest margin {worst_margin:.3e}"
        ),
    );
}

// ---------------------------------------------------------------------------
// 9. ExO end-to-end on the tiny instance.
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_exo_end_to_end() {
    let obs = ObservationSpace::new(vec![0.0, 1.0]).unwrap();
    let bern = |p: &[f64]| Model::new(p.iter().map(|&v| vec![1.0 - v, v]).collect()).unwrap();
    // True per-context models plus grid extras, all satisfying s = 1.
    let truth_x0 = bern(&[0.7, 0.15, 0.05]);
    let truth_x1 = bern(&[0.1, 0.6, 0.2]);
    let extras = vec![
        bern(&[0.3, 0.3, 0.3]),
        bern(&[0.8, 0.1, 0.05]),
        bern(&[0.05, 0.1, 0.8]),
        bern(&[0.33, 0.0, 0.33]),
    ];
    let mut models = vec![truth_x0, truth_x1];
    models.extend(extras);
    let s = 1.0;
    let mclass = ModelClass::new(obs, models, s).unwrap();
    let env = env_from_models(vec![0.5, 0.5], &[0, 1], &mclass).unwrap();
    // |Π| = 6 maps over two contexts, including the pointwise optimal (0, 1).
    let maps = [(0, 1), (0, 0), (1, 1), (2, 1), (0, 2), (1, 2)];
    let class = PolicyClass::new(
        maps.iter().map(|&(i, j)| Policy::new(vec![ActionId(i), ActionId(j)])).collect(),
    )
    .unwrap();

    let a_size = 3.0;
    let gamma = 32.0 * a_size;
    let t_rounds = 300usize;
    let delta = 0.1;
    let pi_size = class.len() as f64;
    let bound = 64.0 * s * 8.0 / gamma
        + 4.0 * gamma * (pi_size / delta).ln() / t_rounds as f64
        + 2.0 * ((1.0 / delta).ln() / t_rounds as f64).sqrt();

    let (best, _) = best_policy_value(&env, &class);
    let solver = SolverConfig::default();
    let master = RngStream::new(0xACC9);
    let mut successes = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for seed in 0..50u64 {
        let (out, _) = run_exo(
            &env,
            &class,
            gamma,
            t_rounds,
            &mclass,
            &solver,
            master.substream(seed),
        )
        .unwrap();
        assert_eq!(out.samples_total, t_rounds as u64);
        let subopt = best - randomized_policy_value(&env, &out.policy);
        worst = worst.max(subopt);
        successes += (subopt <= bound) as usize;
    }
    let pass = successes >= 45;
    verdict(
        "9 (ExO end-to-end)",
        pass,
        &format!(
            "{successes}/50 runs with suboptimality <= {bound:.3} (worst observed {worst:.3})"
        ),
    );
}

// ---------------------------------------------------------------------------
// 10. Byte-identical sweeps across runs and worker counts.
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_sweep_determinism() {
    let cfg = SweepConfig {
        algorithm: Algorithm::Lve,
        family: FamilyConfig::Multiclass {
            x_size: 8,
            a_size: 8,
            pi_size: 16,
            atoms: 2,
            hot_prob: 0.75,
        },
        s_grid: vec![],
        a_grid: vec![4, 8],
        pi_grid: vec![],
        eps_grid: vec![0.2, 0.3],
        km_grid: vec![],
        delta: 0.1,
        seeds: (1..=10).collect(),
        budget_scale: 0.25,
        t_multiplier: None,
        n_multiplier: None,
        timing: false,
        exo: None,
    };
    let first = sparse_bandits_harness::rows_to_csv(&run_sweep(&cfg, 2024, 1).unwrap());
    let second = sparse_bandits_harness::rows_to_csv(&run_sweep(&cfg, 2024, 1).unwrap());
    let eight = sparse_bandits_harness::rows_to_csv(&run_sweep(&cfg, 2024, 8).unwrap());
    let pass = first == second && first == eight;
    verdict(
        "10 (determinism)",
        pass,
        &format!(
            "sweep of {} rows byte-identical across two runs and workers 1 vs 8",
            first.lines().count() - 1
        ),
    );
}

// The environments underlying every criterion re-validate their sparsity
// certificates on construction; a quick spot check that the validator is
// actually wired into the acceptance families.
#[test]
fn acceptance_families_revalidate() {
    let fam = scaling_family_6a(4.0);
    for seed in 0..5 {
        match fam.instantiate(0.1, RngStream::new(seed)).unwrap() {
            sparse_bandits_harness::Instance::Atomic { env, class } => {
                env.validate().unwrap();
                class.validate_for(&env).unwrap();
            }
            sparse_bandits_harness::Instance::Subset { env, .. } => {
                env.validate().unwrap();
            }
        }
    }
    let _ = Environment::new(
        vec![1.0],
        vec![vec![sparse_bandits::env::RewardAtom {
            p: 1.0,
            r: sparse_bandits::env::RewardVector(vec![0.0, 0.0]),
        }]],
        sparse_bandits::env::Sparsity { mode: SparsityMode::L1, s: 1.0 },
        ActionSpace::Atomic(2),
    )
    .unwrap();
    let _ = ContextId(0);
}
