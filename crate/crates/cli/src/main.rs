use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wavelab_cli::commands::{worker_count, Check, RunReport};
use wavelab_cli::{check, convergence, run, sweep, CliError, RunConfig, EXIT_DIVERGED, EXIT_INVALID, EXIT_OK};

#[derive(Parser)]
#[command(name = "wavelab", version, about = "Damped and viscoelastic 1D wave experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration and write its energy CSV and SVG.
    Run {
        config: PathBuf,
        /// Overrides output.dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeat a run over values of one configuration key.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        axis: String,
        /// Values, repeated or separated by ';'.
        #[arg(long, value_delimiter = ';', num_args = 0..)]
        values: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Concurrent runs; defaults to $WAVELAB_WORKERS or the core count.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Report the assumption checks without solving.
    Check { config: PathBuf },
    /// Observed orders under simultaneous space-time refinement.
    Convergence {
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
}

fn load(path: &Path, out: Option<&Path>) -> Result<(RunConfig, PathBuf), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut cfg = RunConfig::parse(&text)?;
    if let Some(out) = out {
        cfg = cfg.with_value("output.dir", &out.to_string_lossy())?;
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    // --out is relative to the working directory, output.dir to the file
    let base = if out.is_some() { PathBuf::new() } else { base };
    Ok((cfg, base))
}

fn print_checks(checks: &[Check]) {
    for c in checks {
        println!("  {:<16} {}  {}", c.name, c.status_text(), c.detail);
    }
}

fn print_run(rep: &RunReport) {
    print_checks(&rep.checks);
    if let Some(s) = &rep.series {
        println!("energy: {} samples, e(0) = {:.6e}, e(T) = {:.6e}", s.len(), s.initial(), s.last());
    }
    if let Some(f) = &rep.fit {
        println!(
            "decay fit on [{}, {}]: lambda = {:.6e}, r^2 = {:.4}",
            f.window.0, f.window.1, f.lambda, f.r_squared
        );
    }
    if let Some(b) = &rep.bound {
        let ok = rep.series.as_ref().is_some_and(|s| b.dominates(s).unwrap_or(false));
        println!("bound: constant {:.6e}, dominates energy: {ok}", b.constant);
    }
    for n in &rep.notes {
        println!("note: {n}");
    }
    if let Some(n) = rep.diverged_at {
        println!("diverged at time level {n}; the CSV holds the completed prefix");
    }
    for f in &rep.files {
        println!("wrote {}", f.display());
    }
    println!("wall time {:.3} s", rep.wall_time.as_secs_f64());
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run { config, out } => {
            let (cfg, base) = load(&config, out.as_deref())?;
            let rep = run(&cfg, &base)?;
            print_run(&rep);
            Ok(if rep.diverged() { EXIT_DIVERGED } else { EXIT_OK })
        }
        Command::Sweep { config, axis, values, out, workers } => {
            let (cfg, base) = load(&config, out.as_deref())?;
            let values: Vec<String> = values.into_iter().map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
            let runs = sweep(&cfg, &axis, &values, &base, workers.unwrap_or_else(worker_count))?;
            let mut code = EXIT_OK;
            for r in &runs {
                match &r.result {
                    Ok(rep) => {
                        let last = rep.series.as_ref().map_or(f64::NAN, |s| s.last());
                        let status = if rep.diverged() { "diverged" } else { "ok" };
                        println!("{axis} = {:<24} {status:<8} e(T) = {last:.6e}", r.value);
                        if rep.diverged() && code == EXIT_OK {
                            code = EXIT_DIVERGED;
                        }
                    }
                    Err(e) => {
                        println!("{axis} = {:<24} error    {e}", r.value);
                        code = EXIT_INVALID;
                    }
                }
            }
            Ok(code)
        }
        Command::Check { config } => {
            let (cfg, _) = load(&config, None)?;
            let rep = check(&cfg);
            print_checks(&rep.checks);
            Ok(EXIT_OK)
        }
        Command::Convergence { config, levels } => {
            let (cfg, _) = load(&config, None)?;
            let table = convergence(&cfg, levels)?;
            if let Some(n) = &table.notice {
                println!("notice: {n}");
            }
            println!("{:>7} {:>8} {:>12} {:>12} {:>12} {:>7}", "nx", "nt", "dx", "dt", if table.modal { "error" } else { "difference" }, "order");
            for r in &table.rows {
                let err = r.error.map_or("-".to_string(), |e| format!("{e:.4e}"));
                let ord = r.order.map_or("-".to_string(), |o| format!("{o:.3}"));
                println!("{:>7} {:>8} {:>12.4e} {:>12.4e} {err:>12} {ord:>7}", r.nx, r.nt, r.dx, r.dt);
            }
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INVALID as u8)
        }
    }
}
