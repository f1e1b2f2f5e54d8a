//! Solve a registered test problem and print the iteration history.
//!
//! `cargo run --example solve_builtin -- HS6`

use filter_arc::{get_problem, solve, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "HS6".to_owned());
    let tp = get_problem(&name)?;
    let report = solve(&tp.problem, &SolverConfig::default())?;

    println!("{:>4} {:>12} {:>14} {:>10} {:>8} {:>4}", "k", "h", "l", "sigma", "alpha", "type");
    for rec in &report.history {
        println!(
            "{:>4} {:>12.4e} {:>14.6e} {:>10.3e} {:>8.2e} {:>4}",
            rec.k, rec.h, rec.l, rec.sigma, rec.alpha, rec.step_type
        );
    }
    println!("{}", report.summary_line());
    println!("x* = {:?}", report.x_final.as_slice());
    if let Some(stats) = tp.paper_stats {
        println!("reference: nit={} nf={} res={:e}", stats.nit, stats.nf, stats.res);
    }
    Ok(())
}
