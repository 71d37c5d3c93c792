//! `bandits` — experiment runner CLI.
//!
//! Subcommands: `run` (single experiment), `sweep` (grid), `search`
//! (sample-complexity search), `check-all-lemmas`, `dec` (DEC sweeps).
//! Exit codes: 0 success, 1 any FAIL result, 2 configuration errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sparse_bandits::exo::{pdec_estimate, random_sparse_model_class, SolverConfig};
use sparse_bandits::oracles::{run_all_lemma_checks, LemmaSuiteConfig};
use sparse_bandits::rng::RngStream;
use sparse_bandits_harness::{
    emit, run_point, run_sweep, sample_complexity_search, Algorithm, ExoParams, FamilyConfig,
    HarnessError, OutputFormat, SearchConfig, SearchSpec, SweepConfig,
};

#[derive(Parser)]
#[command(name = "bandits", about = "Sparse-reward contextual bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Master seed for all randomness.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format for rows.
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args, Clone)]
struct FamilyArgs {
    /// Instance family: multiclass | sparse-binary | dense-l2 | list | lower-bound.
    #[arg(long, default_value = "multiclass")]
    family: String,
    #[arg(long, default_value_t = 8)]
    x_size: usize,
    #[arg(long, default_value_t = 8)]
    a_size: usize,
    #[arg(long, default_value_t = 1.0)]
    s: f64,
    #[arg(long, default_value_t = 20)]
    pi_size: usize,
    #[arg(long, default_value_t = 8)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// Environment JSON file (family env-file).
    #[arg(long)]
    env_path: Option<PathBuf>,
    /// Planted-arm gap as a multiple of eps.
    #[arg(long, default_value_t = 1.5)]
    gap_mult: f64,
}

impl FamilyArgs {
    fn build(&self) -> Result<FamilyConfig, HarnessError> {
        Ok(match self.family.as_str() {
            "multiclass" => FamilyConfig::Multiclass {
                x_size: self.x_size,
                a_size: self.a_size,
                pi_size: self.pi_size,
                atoms: 2,
                hot_prob: 0.75,
            },
            "sparse-binary" => FamilyConfig::SparseBinary {
                x_size: self.x_size,
                a_size: self.a_size,
                s: self.s,
                pi_size: self.pi_size,
            },
            "dense-l2" => FamilyConfig::DenseL2 {
                x_size: self.x_size,
                a_size: self.a_size,
                s: self.s,
                pi_size: self.pi_size,
                atoms: 2,
            },
            "list" => FamilyConfig::List {
                x_size: self.x_size,
                k: self.k,
                m: self.m,
                pi_size: self.pi_size,
                atoms: 2,
            },
            "lower-bound" => FamilyConfig::LowerBound { a_size: self.a_size },
            "planted" => FamilyConfig::Planted {
                a_size: self.a_size,
                s: self.s,
                pi_size: self.pi_size,
                gap_mult: self.gap_mult,
            },
            "env-file" => FamilyConfig::EnvFile {
                path: self
                    .env_path
                    .as_ref()
                    .ok_or_else(|| HarnessError::Config("env-file family needs --env-path".into()))?
                    .display()
                    .to_string(),
                pi_size: self.pi_size,
            },
            other => return Err(HarnessError::Config(format!("unknown family '{other}'"))),
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and print its report.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value = "lve")]
        algo: String,
        #[arg(long, default_value_t = 0.2)]
        eps: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        budget_scale: f64,
    },
    /// Run a parameter-grid sweep from a JSON config.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Override the config's algorithm.
        #[arg(long)]
        algo: Option<String>,
        /// Record measured wall times (breaks byte-identical output).
        #[arg(long)]
        timing: bool,
    },
    /// Empirical sample-complexity search on a family.
    Search {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        family: FamilyArgs,
        /// JSON search config; overrides the family flags.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "lve")]
        algo: String,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 0.9)]
        success_target: f64,
        #[arg(long, default_value_t = 50)]
        seeds_per_point: usize,
    },
    /// Run every lemma checker and print one line per lemma.
    CheckAllLemmas {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Reduced trial counts for a fast smoke run.
        #[arg(long)]
        quick: bool,
    },
    /// DEC sweeps: fuzzed sparse model classes against the 64·s/γ bound.
    Dec {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        classes: usize,
    },
}

fn write_or_print(common: &CommonArgs, body: &str) -> Result<(), HarnessError> {
    match &common.out {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| HarnessError::Io { path: path.display().to_string(), source: e }),
        None => {
            println!("{body}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(all_pass) => {
            if all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool, HarnessError> {
    match cli.command {
        Command::Run { common, family, algo, eps, delta, budget_scale } => {
            let algo: Algorithm = algo.parse()?;
            let fam = family.build()?;
            let outcome = run_point(
                algo,
                &fam,
                eps,
                delta,
                &sparse_bandits_harness::Budget::scaled(budget_scale),
                &ExoParams::default(),
                RngStream::new(common.seed),
            )?;
            let report = serde_json::json!({
                "algorithm": algo.name(),
                "eps": eps,
                "delta": delta,
                "seed": common.seed,
                "samples_used": outcome.samples_used,
                "suboptimality": outcome.suboptimality,
                "chosen_policy": outcome.chosen_policy,
                "success": outcome.suboptimality <= eps + 1e-12,
            });
            write_or_print(&common, &serde_json::to_string_pretty(&report).unwrap())?;
            Ok(outcome.suboptimality <= eps + 1e-12)
        }
        Command::Sweep { common, config, workers, algo, timing } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| HarnessError::Io { path: config.display().to_string(), source: e })?;
            let mut cfg: SweepConfig = serde_json::from_str(&text)
                .map_err(|e| HarnessError::Config(format!("bad sweep config: {e}")))?;
            if let Some(a) = algo {
                cfg.algorithm = a.parse()?;
            }
            cfg.timing |= timing;
            let rows = run_sweep(&cfg, common.seed, workers)?;
            let format: OutputFormat = common.format.parse()?;
            match &common.out {
                Some(path) => emit(&rows, format, path)?,
                None => {
                    let body = match format {
                        OutputFormat::Csv => sparse_bandits_harness::rows_to_csv(&rows),
                        OutputFormat::Json => sparse_bandits_harness::rows_to_json(&rows),
                    };
                    println!("{body}");
                }
            }
            Ok(true)
        }
        Command::Search {
            common,
            family,
            config,
            algo,
            eps,
            delta,
            success_target,
            seeds_per_point,
        } => {
            let (algo, fam, eps, delta, spec) = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| HarnessError::Io {
                        path: path.display().to_string(),
                        source: e,
                    })?;
                    let sc: SearchConfig = serde_json::from_str(&text)
                        .map_err(|e| HarnessError::Config(format!("bad search config: {e}")))?;
                    let spec = SearchSpec {
                        success_target: sc.success_target,
                        seeds_per_point: sc.seeds_per_point,
                        ..SearchSpec::default()
                    };
                    (sc.algorithm, sc.family, sc.eps, sc.delta, spec)
                }
                None => {
                    let spec =
                        SearchSpec { success_target, seeds_per_point, ..SearchSpec::default() };
                    (algo.parse()?, family.build()?, eps, delta, spec)
                }
            };
            let result = sample_complexity_search(
                &fam,
                algo,
                eps,
                delta,
                &spec,
                &ExoParams::default(),
                RngStream::new(common.seed),
            )?;
            write_or_print(&common, &serde_json::to_string_pretty(&result).unwrap())?;
            Ok(true)
        }
        Command::CheckAllLemmas { seed, quick } => {
            let cfg = if quick { LemmaSuiteConfig::quick() } else { LemmaSuiteConfig::full() };
            let checks = run_all_lemma_checks(&cfg, RngStream::new(seed));
            let mut all_pass = true;
            for c in &checks {
                println!(
                    "{:<40} trials={:<8} worst={:<24} {}",
                    c.name,
                    c.trials,
                    format!("{:.6e}", c.worst),
                    if c.pass { "PASS" } else { "FAIL" }
                );
                all_pass &= c.pass;
            }
            Ok(all_pass)
        }
        Command::Dec { seed, classes } => {
            use rand::Rng;
            let master = RngStream::new(seed);
            let mut shape_rng = master.substream(1).rng();
            let solver = SolverConfig::default();
            let mut all_pass = true;
            for i in 0..classes {
                let a = shape_rng.random_range(2..=4usize);
                let o = shape_rng.random_range(2..=3usize);
                let count = shape_rng.random_range(2..=20usize);
                let s = shape_rng.random_range(1.0..=2.0f64);
                // Alternate wide classes with tight perturbation classes; the
                // latter are the ones where the 64·s/γ tradeoff binds.
                let base = if i % 2 == 0 {
                    random_sparse_model_class(a, o, count, s, master.substream(100 + i as u64))
                } else {
                    let radius = 10f64.powf(shape_rng.random_range(-4.0..=-0.7));
                    sparse_bandits::exo::random_local_model_class(
                        a,
                        o,
                        count,
                        s,
                        radius,
                        master.substream(100 + i as u64),
                    )
                };
                let mbar = base.uniform_mixture();
                // Keep the reference inside the list so the estimate is
                // sandwiched in [0, 64·s/γ] rather than trivially negative.
                let mut models = base.models().to_vec();
                models.push(mbar.clone());
                let class = sparse_bandits::exo::ModelClass::new(base.obs().clone(), models, s)
                    .map_err(|e| HarnessError::Algorithm(e.to_string()))?;
                for k in 0..5u32 {
                    let gamma = 32.0 * a as f64 * f64::from(1u32 << k);
                    let est = pdec_estimate(&class, &mbar, gamma, &solver)
                        .map_err(|e| HarnessError::Algorithm(e.to_string()))?;
                    let bound = 64.0 * s / gamma;
                    let pass = est.value <= bound + 1e-12
                        && est.certificate_value <= bound + 1e-12
                        && est.value >= -1e-9;
                    println!(
                        "class={i:<3} |A|={a} |O|={o} n={count:<3} s={s:.3} gamma={gamma:<10} \
                         pdec={:<12.6e} cert={:<12.6e} bound={bound:<12.6e} {}",
                        est.value,
                        est.certificate_value,
                        if pass { "PASS" } else { "FAIL" }
                    );
                    all_pass &= pass;
                }
            }
            Ok(all_pass)
        }
    }
}
