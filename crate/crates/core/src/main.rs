//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for configuration or validation errors,
//! 2 for failures while computing.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use switchmimo::asymptotics::{
    appendix_identity_check, sector_expectation_check, AsymptoticPrediction,
};
use switchmimo::config::RunConfig;
use switchmimo::experiments::{self, ExperimentKind, OutputFormat};
use switchmimo::rfchain::friis_composite_nf;
use switchmimo::Error;

#[derive(Parser)]
#[command(name = "switchmimo", version, about = "Switch-based massive MIMO combining simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON configuration file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Output file; overrides `output.path`.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Output encoding; overrides `output.format`.
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// Seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Print progress to standard error.
    #[arg(short, long)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// SNR ratio of switch combining to MRC versus array size.
    Fig2(Common),
    /// Per-user rate versus SNR for every receiver architecture.
    Fig3(Common),
    /// Exhaustive switch search versus the greedy design on small arrays.
    OracleGap(Common),
    /// Composite noise figure of the cascade in `nf.chain`.
    Nf(Common),
    /// Large-array limits for (N, U, N_Q).
    Limits {
        #[command(flatten)]
        common: Common,
        #[arg(short = 'n', long = "antennas")]
        n: Option<usize>,
        #[arg(short = 'u', long = "users")]
        u: Option<usize>,
        #[arg(short = 'q', long = "nq")]
        nq: Option<usize>,
    },
    /// Statistical self-checks of the model.
    Validate(Common),
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_config_error() { 1 } else { 2 },
            message: e.to_string(),
        }
    }
}

fn load(common: &Common) -> Result<RunConfig, Failure> {
    let mut rc = match &common.config {
        Some(path) => {
            if !path.exists() {
                return Err(Failure {
                    code: 1,
                    message: format!("config file not found: {}", path.display()),
                });
            }
            RunConfig::load(path)?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        rc.run.seed = Some(seed);
    }
    if let Some(t) = common.threads {
        rc.run.threads = Some(t);
    }
    if let Some(f) = &common.format {
        rc.output.format = Some(if f == "json" { OutputFormat::Json } else { OutputFormat::Csv });
    }
    if let Some(p) = &common.output {
        rc.output.path = Some(p.clone());
    }
    rc.threads()?;
    Ok(rc)
}

fn require_config(common: &Common) -> Result<(), Failure> {
    if common.config.is_none() {
        return Err(Failure {
            code: 1,
            message: "--config is required for this subcommand".into(),
        });
    }
    Ok(())
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Failure {
        code: 2,
        message: format!("cannot start worker pool: {e}"),
    })?;
    Ok(pool.install(f))
}

fn run_experiment(common: &Common, kind: ExperimentKind) -> Result<(), Failure> {
    let rc = load(common)?;
    let cfg = rc.experiment(kind)?;
    if common.verbose {
        eprintln!("running {kind} with {} trials, seed {}", cfg.trials, cfg.seed);
    }
    let result = with_pool(rc.threads()?, || experiments::run(&cfg))??;
    let format = rc.output.format.unwrap_or_default();
    match &rc.output.path {
        Some(path) => {
            result.write_file(path, format)?;
            if common.verbose {
                eprintln!("wrote {} rows to {}", result.rows.len(), path.display());
            }
        }
        None => {
            let text = match format {
                OutputFormat::Csv => result.to_csv_string()?,
                OutputFormat::Json => result.to_json_string()? + "\n",
            };
            print!("{text}");
        }
    }
    Ok(())
}

fn nf(common: &Common) -> Result<(), Failure> {
    require_config(common)?;
    let rc = load(common)?;
    let chain = rc.chain()?;
    let nf = friis_composite_nf(&chain)?;
    for s in &chain.stages {
        println!("{:<16} gain {:>7.2} dB  nf {:>6.2} dB", s.label, s.gain_db, s.nf_db);
    }
    println!("composite_nf_db={nf:.2}");
    Ok(())
}

fn limits(common: &Common, n: Option<usize>, u: Option<usize>, nq: Option<usize>) -> Result<(), Failure> {
    let rc = load(common)?;
    let pick = |flag: Option<usize>, file: Option<usize>, name: &str| {
        flag.or(file).ok_or_else(|| Failure {
            code: 1,
            message: format!("config error in `system.{name}`: not given (use the flag or the config file)"),
        })
    };
    let n = pick(n, rc.system.n_antennas, "N")?;
    let u = pick(u, rc.system.n_users, "U")?;
    let nq = pick(nq, rc.system.n_quant, "NQ")?;
    let p = AsymptoticPrediction::new(n, u, nq, f64::NAN)?;
    println!("N={n} U={u} NQ={nq}");
    println!("gamma={:.6}", p.gamma);
    println!("sinr_limit={:.4}", p.sinr_limit);
    println!("rate_limit={:.4}", p.rate_limit);
    Ok(())
}

fn validate(common: &Common) -> Result<(), Failure> {
    let rc = load(common)?;
    let seed = rc.run.seed.unwrap_or(1);
    let mut ok = true;
    let mut report = |name: &str, pass: bool, detail: String| {
        ok &= pass;
        println!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    };

    let worst = (1..=10_000)
        .map(|q| appendix_identity_check(q).map(|c| c.abs_diff))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    report("appendix identity", worst < 1e-12, format!("max |lhs-rhs| = {worst:.3e}"));

    for nq in [1, 2, 4, 8] {
        let rep = sector_expectation_check(nq, 200_000, seed)?;
        report(
            &format!("sector moments NQ={nq}"),
            rep.passes(4.0),
            format!("max |z| = {:.2}", rep.max_abs_z()),
        );
    }

    let mut cfg = rc.experiment(ExperimentKind::InterferenceDistribution)?;
    cfg.seed = seed;
    let res = with_pool(rc.threads()?, || experiments::run(&cfg))??;
    let get = |m: &str| res.metric(m).first().map(|r| r.mean).unwrap_or(f64::NAN);
    let n = cfg.n_antennas as f64;
    let (mean, cv2, p) = (get("mean"), get("cv2"), get("ks_pvalue"));
    report(
        "interference ~ Exp(N)",
        (mean / n - 1.0).abs() < 0.03 && (cv2 - 1.0).abs() < 0.06 && p > 0.01,
        format!("mean={mean:.3} (N={n}), cv2={cv2:.4}, KS p={p:.3}"),
    );

    if ok {
        Ok(())
    } else {
        Err(Failure {
            code: 2,
            message: "one or more self-checks failed".into(),
        })
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version land here too and are not errors
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::Fig2(c) => require_config(c).and_then(|_| run_experiment(c, ExperimentKind::SnrRatioConvergence)),
        Command::Fig3(c) => require_config(c).and_then(|_| run_experiment(c, ExperimentKind::RateVsSnr)),
        Command::OracleGap(c) => require_config(c).and_then(|_| run_experiment(c, ExperimentKind::OracleGap)),
        Command::Nf(c) => nf(c),
        Command::Limits { common, n, u, nq } => limits(common, *n, *u, *nq),
        Command::Validate(c) => validate(c),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
