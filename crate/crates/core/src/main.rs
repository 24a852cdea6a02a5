//! `eic`: regions, trials and sweeps for the two-user erasure interference channel.
//!
//! Exit status is 0 on success, 2 on a configuration error, 3 when a `--check`
//! fails and 1 on any other error.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use erasure_ic::channel::ViewId;
use erasure_ic::harness::{
    emit_region_overlay, run_sweep, run_trials, summarize, verify_marginals, within_outer_bound, write_region_csv,
    write_sweep_csv, write_trials_csv, ExperimentConfig, SweepPoint, SweepSummary,
};
use erasure_ic::protocol::Scheme;
use erasure_ic::Error;

#[derive(Parser)]
#[command(name = "eic", version, about = "Two-user binary erasure interference channel with delayed CSIT")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Half-spaces and corners of the capacity region for a view.
    Region {
        #[arg(long, default_value = "V8")]
        view: ViewId,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, value_enum, default_value = "csv")]
        emit: Emit,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Independent trials at one message length; one CSV row per trial.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 10_000)]
        m: usize,
    },
    /// Trials at several message lengths; one CSV row per length.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated message lengths.
        #[arg(long, value_delimiter = ',', default_values_t = [1_000, 10_000])]
        m: Vec<usize>,
        /// Also write the region overlay with the sweep's mean rates.
        #[arg(long)]
        overlay: Option<PathBuf>,
    },
    /// Chi-square test that correlating the outgoing links keeps each receiver's joint law.
    VerifyMarginals {
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit with status 3 unless both tests pass.
        #[arg(long)]
        check: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = "symmetric-v2")]
    scheme: Scheme,
    #[arg(long, default_value = "V2")]
    view: ViewId,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 0.02)]
    delta: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 3 if a point lies outside the outer bound by more than
    /// three standard errors or fails too often.
    #[arg(long)]
    check: bool,
    /// Failure fraction tolerated by `--check`.
    #[arg(long, default_value_t = 0.02)]
    max_failure: f64,
    /// Run trials on one thread.
    #[arg(long)]
    serial: bool,
}

impl RunArgs {
    fn config(&self, m: Vec<usize>) -> ExperimentConfig {
        ExperimentConfig {
            scheme: self.scheme,
            view: self.view,
            p: self.p,
            m,
            trials: self.trials,
            delta: self.delta,
            seed: self.seed,
            out: self.out.clone(),
        }
    }

    fn check(&self, points: &[SweepPoint]) -> Result<bool, Error> {
        let mut ok = true;
        for pt in points {
            let inside = within_outer_bound(pt, 3.0)?;
            let pass = pt.successes > 0 && inside && pt.failure_fraction <= self.max_failure;
            eprintln!(
                "check m={}: successes {}/{}, inside outer bound: {inside} -> {}",
                pt.m,
                pt.successes,
                pt.trials,
                if pass { "PASS" } else { "FAIL" }
            );
            ok &= pass;
        }
        Ok(ok)
    }
}

enum Failure {
    Check,
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Lib(e.into())
    }
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Error> {
    Ok(match out {
        Some(path) => Box::new(File::create(path)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn print_point(pt: &SweepPoint) {
    let rate = pt.mean_rate.map_or("-".to_string(), |r| r.to_string());
    eprintln!(
        "m={} trials={} failures={:.4} mean rate {rate} mean uses {:.1}",
        pt.m, pt.trials, pt.failure_fraction, pt.mean_uses
    );
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Region { view, p, emit: Emit::Csv, out } => {
            write_region_csv(view, p, &[], sink(&out)?)?;
        }
        Command::Simulate { run, m } => {
            let cfg = run.config(vec![m]);
            cfg.validate()?;
            let reports = run_trials(&cfg, m, !run.serial)?;
            write_trials_csv(&reports, sink(&run.out)?)?;
            let pt = summarize(m, run.p, &reports);
            print_point(&pt);
            if run.check && !run.check(&[pt])? {
                return Err(Failure::Check);
            }
        }
        Command::Sweep { run, m, overlay } => {
            let cfg = run.config(m);
            let summary: SweepSummary = if run.serial {
                cfg.validate()?;
                let mut points = Vec::new();
                for &mm in &cfg.m {
                    points.push(summarize(mm, cfg.p, &run_trials(&cfg, mm, false)?));
                }
                let s = SweepSummary { scheme: cfg.scheme, view: cfg.view, points };
                if let Some(path) = &cfg.out {
                    write_sweep_csv(&s, File::create(path)?)?;
                }
                s
            } else {
                run_sweep(&cfg)?
            };
            if cfg.out.is_none() {
                write_sweep_csv(&summary, io::stdout().lock())?;
            }
            summary.points.iter().for_each(print_point);
            if let Some(path) = overlay {
                emit_region_overlay(cfg.view, cfg.p, &summary, &path)?;
            }
            if run.check && !run.check(&summary.points)? {
                return Err(Failure::Check);
            }
        }
        Command::VerifyMarginals { p, samples, seed, out, check } => {
            let report = verify_marginals(samples, p, seed)?;
            let mut w = sink(&out)?;
            writeln!(w, "rx,statistic,dof,p_value,pass")?;
            for t in &report.tests {
                writeln!(w, "{},{},{},{},{}", t.rx, t.statistic, t.dof, t.p_value, t.pass)?;
            }
            w.flush()?;
            if check && !report.pass() {
                return Err(Failure::Check);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => {
            eprintln!("check failed");
            ExitCode::from(3)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::InvalidParameter(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
