//! Compare exact, finite-difference and damped BFGS Lagrangian Hessians.

use filter_arc::{get_problem, solve, HessianStrategy, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let problems = ["HS6", "HS26", "HS77", "BT2", "MARATOS"];
    println!("{:<10} {:>6} {:>6} {:>6}", "problem", "exact", "fd", "bfgs");
    for name in problems {
        let tp = get_problem(name)?;
        let mut row = format!("{name:<10}");
        for strategy in [HessianStrategy::Exact, HessianStrategy::Fd, HessianStrategy::Bfgs] {
            let cfg = SolverConfig { hessian_strategy: strategy, ..SolverConfig::default() };
            let report = solve(&tp.problem, &cfg)?;
            let cell = if report.converged() { report.nit.to_string() } else { "fail".to_owned() };
            row.push_str(&format!(" {cell:>6}"));
        }
        println!("{row}");
    }
    Ok(())
}
