use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use pess_core::harness::{self, MATCH_TOL};
use pess_core::io::{self, RecordsTable};
use pess_core::rng::clock_seed;
use pess_core::{OptimizerSettings, PessError, SolveConfig};

/// Packs equal unit spheres into the smallest container sphere.
#[derive(Parser)]
#[command(name = "pess", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solver on one instance with several seeds.
    Solve(SolveArgs),
    /// Check a stored solution against the packing constraints.
    Verify {
        file: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Time deferred neighbor maintenance against per-iteration rebuilds.
    AnmExp {
        /// Comma-separated sphere counts.
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[arg(long, default_value_t = 50)]
        runs: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Classify summary results against best-known records.
    Compare {
        #[arg(long)]
        summary: PathBuf,
        #[arg(long)]
        records: PathBuf,
    },
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    n: usize,
    /// Wall-clock budget per run, e.g. `60s`, `2h`.
    #[arg(long, value_parser = humantime::parse_duration)]
    time: Option<Duration>,
    /// Base seed; run i uses a seed mixed from base + i. Defaults to the clock.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 3)]
    runs: usize,
    /// Directory for solution files and summary.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 700)]
    s_iter: usize,
    #[arg(long, default_value_t = 7.0)]
    c: f64,
    #[arg(long, default_value_t = 0.8)]
    theta: f64,
    /// Neighbor list cutoff distance.
    #[arg(long, default_value_t = 4.0)]
    l_cut: f64,
    #[arg(long, default_value_t = 0.6)]
    init_density: f64,
    /// CSV with columns n,radius.
    #[arg(long)]
    records: Option<PathBuf>,
    /// Use the long budgets (2 h up to n=100, 6 h up to 200, 12 h beyond)
    /// when --time is not given.
    #[arg(long)]
    long_schedule: bool,
    /// Search at R*(1 - step) instead of R* after the first solution.
    #[arg(long, default_value_t = 0.0)]
    shrink_step: f64,
    /// Stop after this many outer passes even if time remains.
    #[arg(long)]
    max_rounds: Option<usize>,
}

fn long_budget(n: usize) -> Duration {
    let hours = match n {
        0..=100 => 2,
        101..=200 => 6,
        _ => 12,
    };
    Duration::from_secs(hours * 3600)
}

fn run_solve(args: SolveArgs) -> Result<ExitCode, PessError> {
    let t_cut =
        args.time.unwrap_or_else(|| if args.long_schedule { long_budget(args.n) } else { Duration::from_secs(60) });
    let seed_base = args.seed.unwrap_or_else(clock_seed);
    let mut config = SolveConfig::new(args.n, t_cut, seed_base);
    config.sed.s_iter = args.s_iter;
    config.sed.c = args.c;
    config.sed.theta = args.theta;
    config.opt.cutoff = args.l_cut;
    config.init_density = args.init_density;
    config.radius_shrink_step = args.shrink_step;
    config.max_rounds = args.max_rounds;
    config.validate()?;

    let records = args.records.as_deref().map(RecordsTable::read).transpose()?;
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|source| PessError::Io { path: dir.clone(), source })?;
    }
    println!("n={} runs={} time={} seed_base={seed_base}", args.n, args.runs, humantime::format_duration(t_cut));
    let (record, results) =
        harness::run_instance(&config, args.runs, seed_base, records.as_ref(), args.out.as_deref())?;
    for r in &results {
        println!(
            "seed {:>20}  radius {:.15}  passes {:>5}  time to best {:.2}s",
            r.seed,
            r.best_radius,
            r.iterations,
            r.time_to_best.as_secs_f64()
        );
    }
    let row = record.summary_row();
    let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.3e}"));
    println!(
        "r_best {:.15}  r_avg {:.15}  hr {:.3}  rr {}  delta_best {}  density {:.6}",
        row.r_best,
        row.r_avg,
        row.hr,
        row.rr.map_or_else(|| "-".to_string(), |x| format!("{x:.3}")),
        opt(row.delta_best),
        row.density_best
    );
    Ok(ExitCode::SUCCESS)
}

fn run_verify(file: &Path, tol: f64) -> Result<ExitCode, PessError> {
    let verdict = harness::verify_solution(file, tol)?;
    println!("n={} radius={:.15} density={:.12}", verdict.solution.n(), verdict.solution.radius(), verdict.density);
    println!("tolerance {tol:e}");
    println!("{}", verdict.feasibility.to_string().trim_end());
    Ok(if verdict.feasible() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn run_anm(n_list: &[usize], runs: usize, out: &Path, seed: Option<u64>) -> Result<ExitCode, PessError> {
    let seed = seed.unwrap_or_else(clock_seed);
    println!("seed_base={seed}");
    let studies = harness::anm_experiment(n_list, runs, seed, &OptimizerSettings::default())?;
    let rows: Vec<_> = studies.into_iter().map(|s| s.row).collect();
    for r in &rows {
        println!(
            "n={:>5}  anm {:.4}s  rebuild {:.4}s  ratio {:.3}  deferring {:.3}",
            r.n, r.avg_runtime_anm_s, r.avg_runtime_brute_s, r.runtime_ratio, r.avg_deferring_ratio
        );
    }
    io::write_csv(out, &rows)?;
    Ok(ExitCode::SUCCESS)
}

fn run_compare(summary: &Path, records: &Path) -> Result<ExitCode, PessError> {
    let c = harness::compare_files(summary, records)?;
    let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.12}"));
    println!("{:>6}  {:>16}  {:>16}  class", "n", "r_best", "record");
    for row in &c.rows {
        println!("{:>6}  {:>16}  {:>16}  {}", row.n, fmt(row.r_best), fmt(row.record), row.class);
    }
    println!("improved {}  equal {}  worse {}  absent {}  (tol {MATCH_TOL:e})", c.improved, c.equal, c.worse, c.absent);
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(args) => run_solve(args),
        Command::Verify { file, tol } => run_verify(&file, tol),
        Command::AnmExp { n_list, runs, out, seed } => run_anm(&n_list, runs, &out, seed),
        Command::Compare { summary, records } => run_compare(&summary, &records),
    };
    match outcome {
        Ok(code) => code,
        Err(e @ PessError::Infeasible { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
