//! Run the built-in suite in parallel and print the bench CSV.

use filter_arc::cli::{run_suite, write_bench_csv, Suite};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let records = run_suite(Suite::All, Some(4))?;
    write_bench_csv(&records, std::io::stdout())?;
    let solved = records.iter().filter(|r| r.status == "converged").count();
    eprintln!("{solved}/{} converged", records.len());
    Ok(())
}
