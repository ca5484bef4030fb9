//! Command-line driver for the 2-D viscoelastic solver.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 blow-up guard
//! tripped, 4 a configured check failed.

mod config;
mod experiment;
mod report;
mod snapshot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use oldroyd2d::lp::{self, DyadicPartition};
use oldroyd2d::{Fft2d, linear};

const EXIT_CONFIG: u8 = 2;
const EXIT_BLOWUP: u8 = 3;
const EXIT_CHECK: u8 = 4;

#[derive(Parser)]
#[command(
    name = "oldroyd2d",
    about = "Pseudo-spectral experiments for a 2-D incompressible viscoelastic fluid",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an experiment described by a key/value config file
    Run {
        /// Path to the key/value config file (see README for the key table)
        config: PathBuf,
    },
    /// Print norms of a stored state snapshot
    Norms {
        snapshot: PathBuf,
        /// Extra Besov norms as `s,p,r` (repeatable)
        #[arg(long, value_name = "S,P,R")]
        besov: Vec<String>,
    },
    /// Print the linear dispersion table (CSV on stdout)
    Dispersion {
        /// Largest integer wavenumber to tabulate
        #[arg(long, default_value_t = 10)]
        kmax: usize,
    },
    /// Summarize a diagnostics CSV; with --config, re-run its checks
    Summarize {
        csv: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// The solver is single-threaded; the thread-count variable is accepted for
/// script compatibility, validated, and ignored beyond a warning.
fn check_thread_env() -> Result<(), String> {
    let Ok(v) = std::env::var("OLDROYD2D_THREADS") else {
        return Ok(());
    };
    match v.parse::<usize>() {
        Ok(0) | Err(_) => Err(format!(
            "OLDROYD2D_THREADS must be a positive integer, got '{v}'"
        )),
        Ok(1) => Ok(()),
        Ok(n) => {
            eprintln!("warning: this build is single-threaded; ignoring OLDROYD2D_THREADS={n}");
            Ok(())
        }
    }
}

fn cmd_run(path: &PathBuf) -> Result<u8, String> {
    let cfg = config::parse_file(path)?;
    let art = experiment::run_experiment(&cfg)?;
    print!("{}", art.summary_text);
    println!(
        "artifacts in {} ({} records)",
        art.out_dir.display(),
        art.records.len()
    );
    if art.blowup.is_some() {
        return Ok(EXIT_BLOWUP);
    }
    if report::any_failed(&art.results) {
        return Ok(EXIT_CHECK);
    }
    Ok(0)
}

fn cmd_norms(path: &PathBuf, besov: &[String]) -> Result<u8, String> {
    let requests: Vec<(f64, f64, f64)> = besov
        .iter()
        .map(|spec| {
            let parts: Vec<f64> = spec
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| format!("--besov expects three numbers 's,p,r', got '{spec}'"))?;
            match parts[..] {
                [s, p, r] if p >= 1.0 && r >= 1.0 => Ok((s, p, r)),
                [_, _, _] => Err(format!("--besov needs p >= 1 and r >= 1, got '{spec}'")),
                _ => Err(format!("--besov expects three numbers 's,p,r', got '{spec}'")),
            }
        })
        .collect::<Result<_, _>>()?;

    let snap = snapshot::read_snapshot(path)?;
    let grid = snap.grid;
    let fft = Fft2d::new(grid.n);
    let state = &snap.state;
    println!("t = {}", state.t);
    println!("l2_u = {}", state.u.lp_norm(2.0, &grid));
    println!("linf_u = {}", state.u.lp_norm(f64::INFINITY, &grid));
    println!("l2_tau = {}", state.tau.lp_norm(2.0, &grid));
    println!("linf_tau = {}", state.tau.lp_norm(f64::INFINITY, &grid));
    let u_spec = state.u.to_spectral(&fft);
    let tau_spec = state.tau.to_spectral(&fft);
    let h1 = |m: f64| m.sqrt();
    println!(
        "h1_u = {}",
        h1(u_spec.spectral_moment(&grid, |k2| 1.0 + k2))
    );
    println!(
        "h1_tau = {}",
        h1(tau_spec.spectral_moment(&grid, |k2| 1.0 + k2))
    );
    if !requests.is_empty() {
        let part = DyadicPartition::new(&grid).map_err(|e| e.to_string())?;
        for (s, p, r) in requests {
            let bu = lp::besov_norm(&lp::vector_parts(&u_spec), s, p, r, false, &part, &fft);
            let bt = lp::besov_norm(&lp::tensor_parts(&tau_spec), s, p, r, false, &part, &fft);
            println!("besov_u[s={s},p={p},r={r}] = {bu}");
            println!("besov_tau[s={s},p={p},r={r}] = {bt}");
        }
    }
    Ok(0)
}

fn cmd_dispersion(kmax: usize) -> Result<u8, String> {
    if kmax == 0 {
        return Err("--kmax needs at least 1".to_string());
    }
    println!("k,slow_re,slow_im,fast_re,fast_im");
    for (k, sr, si, fr, fi) in linear::dispersion_rows(kmax) {
        println!("{k},{sr},{si},{fr},{fi}");
    }
    Ok(0)
}

fn cmd_summarize(csv: &PathBuf, config: &Option<PathBuf>) -> Result<u8, String> {
    let text = std::fs::read_to_string(csv)
        .map_err(|e| format!("cannot read CSV '{}': {e}", csv.display()))?;
    let records = report::read_csv(&text)?;
    let results = match config {
        Some(path) => {
            let cfg = config::parse_file(path)?;
            report::run_checks(&records, &cfg.params, &cfg.checks, cfg.fit_window)
        }
        None => vec![],
    };
    print!("{}", report::render_text(&records, &results));
    if report::any_failed(&results) {
        return Ok(EXIT_CHECK);
    }
    Ok(0)
}

fn main() -> ExitCode {
    if let Err(msg) = check_thread_env() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_CONFIG);
    }
    let cli = Cli::parse();
    let outcome = match &cli.cmd {
        Cmd::Run { config } => cmd_run(config),
        Cmd::Norms { snapshot, besov } => cmd_norms(snapshot, besov),
        Cmd::Dispersion { kmax } => cmd_dispersion(*kmax),
        Cmd::Summarize { csv, config } => cmd_summarize(csv, config),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
