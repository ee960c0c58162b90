use clap::{Args, Parser, Subcommand};
use soliton_cli::config::{parse_cutoff, parse_models, parse_resolution, ConfigError, RunConfig, Suite};
use soliton_cli::summary;
use soliton_core::catalog::{default_catalog_ids, mu_invariant, parse_model_id};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

const OUT_ENV: &str = "SOLITON_ENTROPY_OUT";

#[derive(Parser)]
#[command(name = "soliton-entropy", version, about = "Check entropy inequalities on gradient Ricci solitons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the catalog models with their invariants.
    List,
    /// Run check suites and write report.json plus CSV traces.
    Verify(VerifyArgs),
    /// Summarise the reports stored in a directory.
    Report { dir: PathBuf },
}

#[derive(Args)]
struct VerifyArgs {
    /// Model ids, comma separated, or `all`.
    #[arg(long, num_args = 1.., default_value = "all")]
    models: Vec<String>,
    #[arg(long, value_enum, num_args = 1.., value_delimiter = ',', default_value = "all")]
    suite: Vec<Suite>,
    /// RADIAL or RADIALxANGULAR quadrature nodes.
    #[arg(long, default_value = "128")]
    resolution: String,
    /// `auto`, `auto:TAIL` or a fixed radius.
    #[arg(long, default_value = "auto")]
    cutoff: String,
    #[arg(long, default_value_t = 5e-4)]
    dt: f64,
    #[arg(long, default_value_t = 3.0)]
    horizon: f64,
    /// KEY=VALUE tolerance override; a bare number sets the LSI tolerance.
    #[arg(long = "tol")]
    tol: Vec<String>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Output directory (overridden by SOLITON_ENTROPY_OUT).
    #[arg(long, default_value = "soliton-report")]
    out: PathBuf,
    /// Worker threads; defaults to the hardware parallelism.
    #[arg(long)]
    jobs: Option<usize>,
}

impl VerifyArgs {
    fn into_config(self) -> Result<RunConfig, ConfigError> {
        let mut c = RunConfig {
            models: parse_models(&self.models),
            suites: Suite::expand(&self.suite),
            resolution: parse_resolution(&self.resolution)?,
            cutoff: parse_cutoff(&self.cutoff)?,
            dt: self.dt,
            horizon: self.horizon,
            seed: self.seed,
            out: self.out,
            jobs: self.jobs,
            ..RunConfig::default()
        };
        for t in &self.tol {
            c.tolerances.apply(t)?;
        }
        if let Some(dir) = std::env::var_os(OUT_ENV).filter(|d| !d.is_empty()) {
            c.out = dir.into();
        }
        if c.jobs == Some(0) {
            return Err(ConfigError::Invalid("--jobs must be positive".into()));
        }
        c.validate()?;
        Ok(c)
    }
}

fn list() -> ExitCode {
    println!("{:<42} {:<10} {:>4}  invariant", "id", "kind", "dim");
    for id in default_catalog_ids() {
        let Ok(model) = parse_model_id(id) else { continue };
        let symbol = model.kind.invariant_symbol();
        let value = match mu_invariant(&model) {
            Ok(v) if v.abs() < 1e-13 => "0".to_string(),
            Ok(v) => format!("{v:.5}"),
            Err(e) => format!("unavailable ({e})"),
        };
        println!("{id:<42} {:<10} {:>4}  {symbol} = {value}", model.kind.label(), model.total_dim);
    }
    ExitCode::SUCCESS
}

fn verify(args: VerifyArgs) -> ExitCode {
    let config = match args.into_config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = config.jobs {
        pool = pool.num_threads(j);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let report = pool.install(|| soliton_cli::verify(&config, timestamp));
    if let Err(e) = report.write(&config.out) {
        eprintln!("error: cannot write {}: {e}", config.out.display());
        return ExitCode::from(2);
    }
    let s = report.summary;
    println!(
        "{} checks: {} passed, {} failed, {} n/a, {} inconclusive; report in {}",
        s.total,
        s.pass,
        s.fail,
        s.not_applicable,
        s.inconclusive,
        config.out.join(soliton_cli::output::REPORT_FILE).display()
    );
    for r in report.reports.iter().filter(|r| r.status == soliton_core::report::Status::Fail) {
        println!("FAIL {} {} gap {:e} tol {:e}", r.model, r.check_id, r.gap, r.tolerance);
    }
    if s.fail == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn report(dir: PathBuf) -> ExitCode {
    let scan = match summary::scan(&dir) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", dir.display());
            return ExitCode::from(1);
        }
    };
    if scan.reports.is_empty() && scan.broken.is_empty() {
        println!("no reports found");
        return ExitCode::from(1);
    }
    print!("{}", summary::render(&scan));
    if summary::all_clear(&scan) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::List => list(),
        Command::Verify(args) => verify(args),
        Command::Report { dir } => report(dir),
    }
}
