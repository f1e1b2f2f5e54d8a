//! Performance profiles of the three Hessian strategies on the suite.

use filter_arc::cli::{performance_profile, write_profile_csv, BenchRecord, Metric};
use filter_arc::testlib::all_problems;
use filter_arc::{solve, HessianStrategy, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let strategies = [HessianStrategy::Exact, HessianStrategy::Fd, HessianStrategy::Bfgs];
    let problems = all_problems();
    let mut runs = Vec::new();
    for strategy in strategies {
        let cfg = SolverConfig { hessian_strategy: strategy, ..SolverConfig::default() };
        let mut records = Vec::new();
        for tp in &problems {
            records.push(BenchRecord::from_report(&solve(&tp.problem, &cfg)?));
        }
        runs.push(records);
    }
    let names = strategies.iter().map(|s| s.to_string()).collect();
    let profile = performance_profile(names, &runs, Metric::Nit);
    write_profile_csv(&profile, std::io::stdout())?;
    Ok(())
}
