//! `effq`: batch front-end for the limited-feedback simulator.
//!
//! Exit codes: 0 success, 1 config error, 2 validation failure, 3 I/O error.

mod config;
mod output;

use std::collections::hash_map::RandomState;
use std::hash::BuildHasher;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use effq_core::analysis::{
    bits_required, ceil_bits, feedback_savings, feedback_savings_exact, ScalingInputs,
};
use effq_core::validation::{run_validation, ValidationConfig};
use effq_core::{run_experiment, Error as CoreError};

use config::{parse_sweep, parse_validate, SweepConfig};
use output::{scaling_csv, sweep_csv, ManifestInput, RowStatus, RunManifest, ScalingRow, SweepRow};

#[derive(Parser, Debug)]
#[command(
    name = "effq",
    version,
    about = "Limited-feedback MIMO downlink simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo sum-rate sweep over SNR and receive-antenna counts.
    Sweep(RunArgs),
    /// Feedback bits needed to hold a target rate gap, with savings vs. one antenna.
    ScalingTable(ScalingArgs),
    /// Distributional checks of effective-channel quantization.
    Validate(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Config file (`key = value`) or a manifest JSON from an earlier run.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to one per core. Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the trial count (sample count for `validate`).
    #[arg(long)]
    trials: Option<u64>,
}

#[derive(Args, Debug)]
struct ScalingArgs {
    /// Transmit antennas (= users).
    #[arg(long)]
    m: usize,
    /// Receive-antenna counts.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Target per-user rate gap in bps/Hz.
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    /// SNR points in dB.
    #[arg(
        long = "snr-db",
        value_delimiter = ',',
        required = true,
        allow_hyphen_values = true
    )]
    snr_db: Vec<f64>,
    /// Also write `scaling.csv` into this directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Validation,
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Validation => 2,
            Failure::Io(_) => 3,
        }
    }
}

type Outcome = Result<(), Failure>;

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Failure> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

fn fresh_seed() -> u64 {
    let t = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos())
        .unwrap_or(0);
    RandomState::new().hash_one((t, std::process::id()))
}

fn resolve_seed(cli: Option<u64>, file: Option<u64>) -> u64 {
    cli.or(file).unwrap_or_else(|| {
        let s = fresh_seed();
        eprintln!("seed = {s} (auto-generated; pass --seed {s} to reproduce)");
        s
    })
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Failure::Config("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| Failure::Config(format!("cannot start {n} threads: {e}"))),
    }
}

fn load_manifest(text: &str, path: &Path, command: &str) -> Result<ManifestInput, Failure> {
    let m: ManifestInput = serde_json::from_str(text)
        .map_err(|e| Failure::Config(format!("{}: not a valid manifest: {e}", path.display())))?;
    if m.command != command {
        return Err(Failure::Config(format!(
            "{}: manifest is from `{}`, not `{command}`",
            path.display(),
            m.command
        )));
    }
    Ok(m)
}

fn is_json(text: &str) -> bool {
    text.trim_start().starts_with('{')
}

fn config_failure(path: &Path, e: config::ConfigError) -> Failure {
    Failure::Config(format!("{}: {e}", path.display()))
}

fn sweep(args: RunArgs) -> Outcome {
    let text = read_text(&args.config)?;
    let mut cfg: SweepConfig = if is_json(&text) {
        let m = load_manifest(&text, &args.config, "sweep")?;
        let mut c = m
            .sweep
            .ok_or_else(|| Failure::Config("manifest has no sweep config".into()))?;
        c.seed = Some(m.seed);
        c
    } else {
        parse_sweep(&text).map_err(|e| config_failure(&args.config, e))?
    };
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    let seed = resolve_seed(args.seed, cfg.seed);
    cfg.seed = Some(seed);

    let start = Instant::now();
    let rows = in_pool(args.threads, || sweep_rows(&cfg, seed))??;
    eprintln!("sweep finished in {:.2} s", start.elapsed().as_secs_f64());

    for r in &rows {
        match (&r.point, r.status) {
            (Some(p), _) => {
                if let Some(w) = &p.warning {
                    eprintln!("warning: N = {}: {w}", r.n_rx);
                }
            }
            (None, RowStatus::Infeasible) => eprintln!(
                "note: N = {} at {} dB: target gap unreachable with {} receive antennas",
                r.n_rx, r.snr_db, r.n_rx
            ),
            (None, _) => eprintln!(
                "note: N = {} at {} dB: {} bits exceed the codebook limit",
                r.n_rx,
                r.snr_db,
                r.bits_required.unwrap_or_default()
            ),
        }
    }

    let mut manifest = RunManifest::new("sweep", seed);
    manifest.sweep = Some(cfg);
    manifest.rows = rows;
    let csv = write_file(&args.out, "sweep.csv", &sweep_csv(&manifest.rows))?;
    let json = write_file(&args.out, "manifest.json", &manifest.to_json())?;
    println!("wrote {}", csv.display());
    println!("wrote {}", json.display());
    Ok(())
}

/// One experiment per N; SNR points the bit rule cannot serve become
/// placeholder rows. Streams do not depend on the SNR set, so skipping
/// points leaves the others unchanged.
fn sweep_rows(cfg: &SweepConfig, seed: u64) -> Result<Vec<SweepRow>, Failure> {
    let mut rows = Vec::new();
    for mut exp in cfg.experiments(seed) {
        let mut runnable = Vec::new();
        let mut curve = Vec::new();
        for &snr_db in &cfg.snr_db {
            let (status, bits_required) = match exp.resolve_bits(snr_db) {
                Ok((bits, _)) => {
                    runnable.push(snr_db);
                    (RowStatus::Ok, Some(i64::from(bits)))
                }
                Err(CoreError::InfeasibleTarget { .. }) => (RowStatus::Infeasible, None),
                Err(CoreError::Capacity { bits, .. }) => {
                    (RowStatus::OverCapacity, Some(i64::from(bits)))
                }
                Err(e) => return Err(Failure::Config(e.to_string())),
            };
            curve.push(SweepRow {
                snr_db,
                n_rx: exp.n,
                status,
                bits_required,
                point: None,
            });
        }
        if !runnable.is_empty() {
            exp.snr_db = runnable;
            let result = run_experiment(&exp).map_err(|e| Failure::Config(e.to_string()))?;
            let mut points = result.points.into_iter();
            for row in curve.iter_mut().filter(|r| r.status == RowStatus::Ok) {
                row.point = points.next();
            }
        }
        rows.extend(curve);
    }
    Ok(rows)
}

fn scaling_table(args: ScalingArgs) -> Outcome {
    if args.m < 2 {
        return Err(Failure::Config("--m must be at least 2".into()));
    }
    if let Some(&n) = args.n.iter().find(|&&n| n == 0 || n >= args.m) {
        return Err(Failure::Config(format!(
            "--n: {n} is outside [1, M - 1 = {}]; the scaling law needs N < M",
            args.m - 1
        )));
    }
    if !(args.r > 0.0) {
        return Err(Failure::Config("--r must be positive".into()));
    }
    let mut rows = Vec::new();
    for &n in &args.n {
        for &snr_db in &args.snr_db {
            let inputs = ScalingInputs {
                m: args.m,
                n,
                snr_db,
                rate_gap: args.r,
            };
            let (raw, savings_exact) = match bits_required(&inputs) {
                Ok(b) => (
                    Some(b),
                    feedback_savings_exact(args.m, n, snr_db, args.r).ok(),
                ),
                Err(CoreError::InfeasibleTarget { .. }) => (None, None),
                Err(e) => return Err(Failure::Config(e.to_string())),
            };
            // the approximation is derived for a 1 bps/Hz target
            let savings_approx = (raw.is_some() && args.r == 1.0)
                .then(|| feedback_savings(args.m, n, snr_db).ok())
                .flatten();
            rows.push(ScalingRow {
                m: args.m,
                n,
                snr_db,
                rate_gap: args.r,
                bits_unrounded: raw,
                bits_ceil: raw.map(ceil_bits),
                savings_exact,
                savings_approx,
            });
        }
    }
    let csv = scaling_csv(&rows);
    print!("{csv}");
    if let Some(dir) = &args.out {
        let path = write_file(dir, "scaling.csv", &csv)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn validate(args: RunArgs) -> Outcome {
    let text = read_text(&args.config)?;
    let (mut cfg, file_seed): (ValidationConfig, Option<u64>) = if is_json(&text) {
        let m = load_manifest(&text, &args.config, "validate")?;
        let c = m
            .validation_config
            .ok_or_else(|| Failure::Config("manifest has no validation config".into()))?;
        (c, Some(m.seed))
    } else {
        parse_validate(&text).map_err(|e| config_failure(&args.config, e))?
    };
    if let Some(t) = args.trials {
        cfg.samples =
            usize::try_from(t).map_err(|_| Failure::Config("--trials too large".into()))?;
        if cfg.samples < 1000 {
            return Err(Failure::Config(
                "--trials must be at least 1000 for validate".into(),
            ));
        }
    }
    cfg.seed = resolve_seed(args.seed, file_seed);

    let start = Instant::now();
    let summary = in_pool(args.threads, || run_validation(&cfg))?
        .map_err(|e| Failure::Config(e.to_string()))?;
    eprintln!(
        "validation finished in {:.2} s",
        start.elapsed().as_secs_f64()
    );

    for r in &summary.reports {
        println!(
            "{} {:<30} vs {}",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.reference
        );
        for c in &r.checks {
            println!(
                "       {:<22} {:>12.6} <= {:<10} {}",
                c.metric,
                c.value,
                c.limit,
                if c.pass { "ok" } else { "FAIL" }
            );
        }
    }

    let mut manifest = RunManifest::new("validate", cfg.seed);
    manifest.validation_config = Some(summary.config);
    manifest.reports = summary.reports;
    manifest.pass = Some(summary.pass);
    let json = write_file(&args.out, "validation.json", &manifest.to_json())?;
    println!("wrote {}", json.display());
    if summary.pass {
        Ok(())
    } else {
        Err(Failure::Validation)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::ScalingTable(a) => scaling_table(a),
        Command::Validate(a) => validate(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(m) => eprintln!("config error: {m}"),
                Failure::Io(m) => eprintln!("I/O error: {m}"),
                Failure::Validation => eprintln!("validation failed"),
            }
            ExitCode::from(f.code())
        }
    }
}
