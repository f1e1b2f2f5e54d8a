//! Command-line front end: `solve`, `bench`, `profile` and `list`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Deserialize;

use crate::driver::{solve, HessianStrategy, SolverConfig, SolverReport};
use crate::testlib::{self, get_problem};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const BENCH_HEADER: [&str; 10] = ["problem", "n", "m", "status", "nit", "nf", "nc", "ng", "res", "time_s"];

#[derive(Debug, Parser)]
#[command(name = "filter-arc", version, about = "Filter line-search cubic regularization solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum HessianArg {
    Exact,
    Fd,
    Bfgs,
}

impl From<HessianArg> for HessianStrategy {
    fn from(h: HessianArg) -> Self {
        match h {
            HessianArg::Exact => HessianStrategy::Exact,
            HessianArg::Fd => HessianStrategy::Fd,
            HessianArg::Bfgs => HessianStrategy::Bfgs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Paper,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Nit,
    Nf,
    Nc,
    Ng,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one built-in problem.
    Solve {
        #[arg(long)]
        problem: String,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        sigma0: Option<f64>,
        #[arg(long, value_enum, default_value = "exact")]
        hessian: HessianArg,
        #[arg(long)]
        verbose: bool,
        #[arg(long)]
        json: bool,
    },
    /// Solve a suite and write one CSV row per problem.
    Bench {
        #[arg(long, value_enum, default_value = "paper")]
        suite: Suite,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        parallel: Option<usize>,
    },
    /// Performance profiles from bench CSV files, one file per solver.
    Profile {
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum)]
        metric: Metric,
        #[arg(long)]
        out: PathBuf,
    },
    /// List the built-in problems.
    List,
}

/// One row of the bench CSV.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct BenchRecord {
    pub problem: String,
    pub n: usize,
    pub m: usize,
    pub status: String,
    pub nit: usize,
    pub nf: usize,
    pub nc: usize,
    pub ng: usize,
    pub res: f64,
    pub time_s: f64,
}

impl BenchRecord {
    pub fn from_report(report: &SolverReport) -> Self {
        Self {
            problem: report.problem.clone(),
            n: report.n,
            m: report.m,
            status: report.status.to_string(),
            nit: report.nit,
            nf: report.nf,
            nc: report.nc,
            ng: report.ng,
            res: report.res,
            time_s: report.wall_time,
        }
    }

    fn fields(&self) -> [String; 10] {
        [
            self.problem.clone(),
            self.n.to_string(),
            self.m.to_string(),
            self.status.clone(),
            self.nit.to_string(),
            self.nf.to_string(),
            self.nc.to_string(),
            self.ng.to_string(),
            format!("{:e}", self.res),
            format!("{:.4}", self.time_s),
        ]
    }

    pub fn metric(&self, metric: Metric) -> usize {
        match metric {
            Metric::Nit => self.nit,
            Metric::Nf => self.nf,
            Metric::Nc => self.nc,
            Metric::Ng => self.ng,
        }
    }
}

pub fn write_bench_csv<W: Write>(records: &[BenchRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BENCH_HEADER)?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_bench_csv(path: &Path) -> csv::Result<Vec<BenchRecord>> {
    csv::Reader::from_path(path)?.deserialize().collect()
}

/// Solve every problem of the suite. Output order follows the registry
/// regardless of the thread count.
pub fn run_suite(suite: Suite, threads: Option<usize>) -> Result<Vec<BenchRecord>, rayon::ThreadPoolBuildError> {
    let names: Vec<&str> = match suite {
        Suite::Paper => testlib::names()
            .iter()
            .copied()
            .filter(|n| testlib::reference_stats(n).is_some())
            .collect(),
        Suite::All => testlib::names().to_vec(),
    };
    let solve_one = |name: &&str| {
        let tp = get_problem(name).expect("registered");
        let started = Instant::now();
        match solve(&tp.problem, &SolverConfig::default()) {
            Ok(report) => BenchRecord::from_report(&report),
            Err(_) => BenchRecord {
                problem: tp.problem.name().to_owned(),
                n: tp.problem.n(),
                m: tp.problem.m(),
                status: "error".to_owned(),
                nit: 0,
                nf: 0,
                nc: 0,
                ng: 0,
                res: f64::NAN,
                time_s: started.elapsed().as_secs_f64(),
            },
        }
    };
    match threads {
        Some(t) if t > 1 => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(t).build()?;
            Ok(pool.install(|| names.par_iter().map(solve_one).collect()))
        }
        _ => Ok(names.iter().map(solve_one).collect()),
    }
}

/// Stepwise performance profiles on a `τ` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub solvers: Vec<String>,
    pub taus: Vec<f64>,
    /// `rho[s][i]` is the fraction of problems solver `s` solves within
    /// a factor `taus[i]` of the best solver.
    pub rho: Vec<Vec<f64>>,
}

/// Performance ratios `r[p][s]`; failures and missing rows are infinite.
pub fn performance_ratios(runs: &[Vec<BenchRecord>], metric: Metric) -> Vec<Vec<f64>> {
    let problems: BTreeSet<&str> = runs.iter().flatten().map(|r| r.problem.as_str()).collect();
    let lookup: Vec<BTreeMap<&str, &BenchRecord>> = runs
        .iter()
        .map(|recs| recs.iter().map(|r| (r.problem.as_str(), r)).collect())
        .collect();
    problems
        .iter()
        .map(|p| {
            let costs: Vec<f64> = lookup
                .iter()
                .map(|l| match l.get(p) {
                    Some(r) if r.status == "converged" => (r.metric(metric) as f64).max(1.0),
                    _ => f64::INFINITY,
                })
                .collect();
            let best = costs.iter().copied().fold(f64::INFINITY, f64::min);
            costs
                .iter()
                .map(|&c| if c.is_finite() { c / best } else { f64::INFINITY })
                .collect()
        })
        .collect()
}

pub fn performance_profile(solvers: Vec<String>, runs: &[Vec<BenchRecord>], metric: Metric) -> Profile {
    let ratios = performance_ratios(runs, metric);
    let finite: Vec<f64> = ratios.iter().flatten().copied().filter(|r| r.is_finite()).collect();
    let max_log = finite.iter().map(|r| r.log2()).fold(0.0, f64::max).ceil().max(1.0);
    let mut taus: Vec<f64> = (0..=100).map(|i| (max_log * i as f64 / 100.0).exp2()).collect();
    taus.extend(finite.iter().copied());
    taus.sort_by(f64::total_cmp);
    taus.dedup();
    let count = ratios.len().max(1) as f64;
    let rho = (0..solvers.len())
        .map(|s| {
            taus.iter()
                .map(|&t| ratios.iter().filter(|r| r[s] <= t).count() as f64 / count)
                .collect()
        })
        .collect();
    Profile { solvers, taus, rho }
}

pub fn write_profile_csv<W: Write>(profile: &Profile, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["log2_tau".to_owned(), "tau".to_owned()];
    header.extend(profile.solvers.iter().cloned());
    w.write_record(&header)?;
    for (i, &t) in profile.taus.iter().enumerate() {
        let mut row = vec![format!("{:e}", t.log2()), format!("{t:e}")];
        row.extend(profile.rho.iter().map(|r| format!("{}", r[i])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn solver_label(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Parse `args` (program name first) and run the command.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_FAILURE
        }
    }
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> io::Result<i32> {
    match command {
        Command::Solve {
            problem,
            tol,
            max_iter,
            sigma0,
            hessian,
            verbose,
            json,
        } => {
            let tp = match get_problem(&problem) {
                Ok(tp) => tp,
                Err(e) => {
                    writeln!(err, "error: {e}")?;
                    return Ok(EXIT_USAGE);
                }
            };
            let defaults = SolverConfig::default();
            let cfg = SolverConfig {
                epsilon: tol.unwrap_or(defaults.epsilon),
                max_iter: max_iter.unwrap_or(defaults.max_iter),
                sigma0: sigma0.unwrap_or(defaults.sigma0),
                hessian_strategy: hessian.into(),
                ..defaults
            };
            if let Err(e) = cfg.validate() {
                writeln!(err, "error: {e}")?;
                return Ok(EXIT_USAGE);
            }
            let report = match solve(&tp.problem, &cfg) {
                Ok(r) => r,
                Err(e) => {
                    writeln!(err, "error: {e}")?;
                    return Ok(EXIT_FAILURE);
                }
            };
            writeln!(out, "{}", report.summary_line())?;
            if verbose {
                write_verbose(&report, out)?;
            }
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&report.to_json()).map_err(io::Error::other)?)?;
            } else if verbose {
                write!(out, "{}", report.to_key_value())?;
            }
            Ok(if report.converged() { EXIT_OK } else { EXIT_FAILURE })
        }
        Command::Bench { suite, out: path, parallel } => {
            if parallel == Some(0) {
                writeln!(err, "error: --parallel must be at least 1")?;
                return Ok(EXIT_USAGE);
            }
            let records = run_suite(suite, parallel).map_err(io::Error::other)?;
            match path {
                Some(p) => write_bench_csv(&records, File::create(&p)?)?,
                None => write_bench_csv(&records, &mut *out)?,
            }
            let failed = records.iter().filter(|r| r.status != "converged").count();
            if failed > 0 {
                writeln!(err, "{failed} of {} problems did not converge", records.len())?;
            }
            Ok(EXIT_OK)
        }
        Command::Profile { inputs, metric, out: path } => {
            let mut runs = Vec::with_capacity(inputs.len());
            for p in &inputs {
                match read_bench_csv(p) {
                    Ok(r) => runs.push(r),
                    Err(e) => {
                        writeln!(err, "error: cannot read {}: {e}", p.display())?;
                        return Ok(EXIT_USAGE);
                    }
                }
            }
            let labels = inputs.iter().map(|p| solver_label(p)).collect();
            let profile = performance_profile(labels, &runs, metric);
            write_profile_csv(&profile, File::create(&path)?)?;
            Ok(EXIT_OK)
        }
        Command::List => {
            for name in testlib::names() {
                let tp = get_problem(name).expect("registered");
                let nit = tp.paper_stats.map(|s| s.nit.to_string()).unwrap_or_else(|| "-".to_owned());
                writeln!(out, "{:<10} n={:<3} m={:<3} ref_nit={}", name, tp.problem.n(), tp.problem.m(), nit)?;
            }
            Ok(EXIT_OK)
        }
    }
}

fn write_verbose(report: &SolverReport, out: &mut dyn Write) -> io::Result<()> {
    for (k, log) in &report.trial_logs {
        for t in log {
            writeln!(out, "iter {k} alpha={:e} {}", t.alpha, t.reason)?;
        }
    }
    for r in &report.restorations {
        writeln!(
            out,
            "iter {} restoration {} inner={} h={:e}",
            r.k, r.status, r.inner_iterations, r.h_final
        )?;
        for s in &r.trace {
            writeln!(out, "  inner {} h={:e} step={}", s.iteration, s.h, s.kind)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(problem: &str, nf: usize, status: &str) -> BenchRecord {
        BenchRecord {
            problem: problem.to_owned(),
            n: 2,
            m: 1,
            status: status.to_owned(),
            nit: nf,
            nf,
            nc: nf,
            ng: nf,
            res: 1e-7,
            time_s: 0.0,
        }
    }

    #[test]
    fn dominant_solver_has_full_profile_at_one() {
        let a = vec![rec("P1", 3, "converged"), rec("P2", 5, "converged")];
        let b = vec![rec("P1", 6, "converged"), rec("P2", 9, "converged")];
        let prof = performance_profile(vec!["a".into(), "b".into()], &[a, b], Metric::Nf);
        assert_eq!(prof.taus[0], 1.0);
        assert_eq!(prof.rho[0][0], 1.0);
        assert_eq!(prof.rho[1][0], 0.0);
        assert_eq!(*prof.rho[1].last().unwrap(), 1.0);
    }

    #[test]
    fn failures_never_count() {
        let a = vec![rec("P1", 3, "converged"), rec("P2", 5, "max-iter")];
        let b = vec![rec("P1", 6, "converged")];
        let prof = performance_profile(vec!["a".into(), "b".into()], &[a, b], Metric::Nf);
        assert_eq!(*prof.rho[0].last().unwrap(), 0.5);
        assert_eq!(*prof.rho[1].last().unwrap(), 0.5);
        for r in &prof.rho {
            assert!(r.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn zero_metric_is_clamped() {
        let a = vec![rec("P1", 0, "converged")];
        let b = vec![rec("P1", 1, "converged")];
        let ratios = performance_ratios(&[a, b], Metric::Nf);
        assert_eq!(ratios[0], vec![1.0, 1.0]);
    }

    #[test]
    fn csv_roundtrip() {
        let records = vec![rec("P1", 3, "converged"), BenchRecord { res: 0.1 + 0.2, ..rec("P2", 4, "max-iter") }];
        let mut buf = Vec::new();
        write_bench_csv(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("problem,n,m,status,nit,nf,nc,ng,res,time_s\n"));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        std::fs::write(&path, &text).unwrap();
        assert_eq!(read_bench_csv(&path).unwrap(), records);
    }

    #[test]
    fn usage_errors_exit_two() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["filter-arc", "frobnicate"], &mut out, &mut err), EXIT_USAGE);
        assert_eq!(run(["filter-arc", "solve", "--problem", "NOSUCH"], &mut out, &mut err), EXIT_USAGE);
        assert_eq!(run(["filter-arc", "solve"], &mut out, &mut err), EXIT_USAGE);
        assert_eq!(
            run(["filter-arc", "solve", "--problem", "HS28", "--sigma0", "-1"], &mut out, &mut err),
            EXIT_USAGE
        );
    }

    #[test]
    fn solve_booth() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["filter-arc", "solve", "--problem", "BOOTH"], &mut out, &mut err), EXIT_OK);
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("BOOTH converged nit=1 res="), "{text}");
    }

    #[test]
    fn non_convergence_exits_one() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(["filter-arc", "solve", "--problem", "HS27", "--max-iter", "1"], &mut out, &mut err);
        assert_eq!(code, EXIT_FAILURE);
    }
}
