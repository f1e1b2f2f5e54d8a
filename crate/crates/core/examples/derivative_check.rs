//! Compare analytic and finite-difference derivatives for every registered problem.

use filter_arc::testlib::all_problems;
use filter_arc::check_derivatives;

fn main() {
    for tp in all_problems() {
        let p = &tp.problem;
        match check_derivatives(p, p.x0(), 1e-5) {
            Ok(r) => println!(
                "{:<10} grad {:>10.2e}  jac {:>10.2e}  {}",
                p.name(),
                r.gradient_error.unwrap_or(0.0),
                r.jacobian_error.unwrap_or(0.0),
                if r.passed { "ok" } else { "MISMATCH" }
            ),
            Err(e) => println!("{:<10} error: {e}", p.name()),
        }
    }
}
