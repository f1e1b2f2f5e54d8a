//! Show feasibility restoration phases triggered while solving a problem.
//!
//! `cargo run --example restoration_trace -- BT12`

use filter_arc::{get_problem, solve, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "BT12".to_owned());
    let tp = get_problem(&name)?;
    let report = solve(&tp.problem, &SolverConfig::default())?;
    println!("{}", report.summary_line());
    if report.restorations.is_empty() {
        println!("no restoration phase");
    }
    for r in &report.restorations {
        println!(
            "k={} trigger={:?} status={} inner={} h_final={:.3e}",
            r.k, r.trigger, r.status, r.inner_iterations, r.h_final
        );
        for s in &r.trace {
            println!("  inner {} h={:.3e} step={}", s.iteration, s.h, s.kind);
        }
    }
    Ok(())
}
