//! Define a problem from closures, check its derivatives and solve it.
//!
//! min (x₁ − 1)² + (x₂ − 2)² + x₃²  s.t.  x₁² + x₂² + x₃² = 4,  x₁ + x₃ = 1

use filter_arc::{check_derivatives, solve, Matrix, ProblemDef, SolverConfig, Vector};
use nalgebra::{dmatrix, dvector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let problem = ProblemDef::new(
        "SPHERE-PLANE",
        dvector![1.0, 1.0, 1.0],
        2,
        |x: &Vector| (x[0] - 1.0).powi(2) + (x[1] - 2.0).powi(2) + x[2] * x[2],
        |x: &Vector| dvector![x.norm_squared() - 4.0, x[0] + x[2] - 1.0],
    )?
    .with_gradient(|x: &Vector| dvector![2.0 * (x[0] - 1.0), 2.0 * (x[1] - 2.0), 2.0 * x[2]])
    .with_jacobian(|x: &Vector| dmatrix![2.0 * x[0], 2.0 * x[1], 2.0 * x[2]; 1.0, 0.0, 1.0])
    .with_lagrangian_hessian(|_x: &Vector, lam: &Vector| Matrix::identity(3, 3) * (2.0 - 2.0 * lam[0]));

    let check = check_derivatives(&problem, problem.x0(), 1e-6)?;
    println!("derivative check: {check:?}");

    let report = solve(&problem, &SolverConfig::default())?;
    println!("{}", report.summary_line());
    println!("x* = {:?}", report.x_final.as_slice());
    println!("nf={} nc={} ng={} nj={} nh={}", report.nf, report.nc, report.ng, report.nj, report.nh);
    Ok(())
}
