//! Solve cubic-regularized subproblems, including the hard case.

use filter_arc::cubic_subproblem::{cauchy_step, default_tolerance, solve_reduced, solve_reduced_arc, TangentialModel};
use filter_arc::kernels::{factorize_jacobian, project};
use filter_arc::{Matrix, Vector};
use nalgebra::{dmatrix, dvector};

fn report(label: &str, h: &Matrix, g: &Vector, sigma: f64) {
    match solve_reduced(h, g, sigma, default_tolerance(g)) {
        Some(s) => println!(
            "{label}: w={:?} |w|={:.6} nu={:.6} status={:?}",
            s.w.as_slice(),
            s.w.norm(),
            s.nu,
            s.status
        ),
        None => println!("{label}: eigendecomposition failed"),
    }
}

fn main() {
    report("convex", &dmatrix![2.0, 0.0; 0.0, 1.0], &dvector![1.0, -1.0], 1.0);
    report("indefinite", &dmatrix![-1.0, 0.5; 0.5, 2.0], &dvector![0.3, 0.2], 0.5);
    report("hard case", &dmatrix![-1.0, 0.0; 0.0, 1.0], &dvector![0.0, 1.0], 1.0);

    let a = dmatrix![1.0, 1.0, 1.0];
    let fac = factorize_jacobian(&a, 1e-12).expect("full rank");
    let g = dvector![1.0, -2.0, 0.5];
    let pg = project(&fac, &g);
    let hess = dmatrix![1.0, 0.0, 0.0; 0.0, -2.0, 0.0; 0.0, 0.0, 0.5];
    let model = TangentialModel { f0: 0.0, pg: &pg, hessian: &hess, sigma: 2.0, fac: &fac };
    let sol = solve_reduced_arc(&model, None);
    let (_, cauchy) = cauchy_step(&model);
    println!("tangential step t={:?} A·t={:.2e}", sol.t.as_slice(), (&a * &sol.t).norm());
    println!("decrease {:.6} vs Cauchy {:.6} (bound {:.6})", sol.decrease, cauchy, sol.cauchy_decrease);
}
