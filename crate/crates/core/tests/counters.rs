use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use filter_arc::{solve, HessianStrategy, Matrix, ProblemDef, SolverConfig, Vector};
use nalgebra::{dmatrix, dvector};

#[derive(Default)]
struct Calls {
    f: AtomicUsize,
    c: AtomicUsize,
    g: AtomicUsize,
    a: AtomicUsize,
}

impl Calls {
    fn get(&self) -> [usize; 4] {
        [&self.f, &self.c, &self.g, &self.a].map(|n| n.load(Ordering::SeqCst))
    }
}

fn bump(n: &AtomicUsize) {
    n.fetch_add(1, Ordering::SeqCst);
}

/// `min x₁² + x₂² + x₃²  s.t.  x₁ + x₂ + x₃ = 1, x₁x₂ = 0.1`.
fn instrumented(analytic: bool, calls: Arc<Calls>) -> ProblemDef {
    let (cf, cc) = (calls.clone(), calls.clone());
    let p = ProblemDef::new(
        "instrumented",
        dvector![1.0, 0.5, -0.2],
        2,
        move |x: &Vector| {
            bump(&cf.f);
            x.norm_squared()
        },
        move |x: &Vector| {
            bump(&cc.c);
            dvector![x[0] + x[1] + x[2] - 1.0, x[0] * x[1] - 0.1]
        },
    )
    .unwrap();
    if !analytic {
        return p;
    }
    let (cg, ca) = (calls.clone(), calls);
    p.with_gradient(move |x: &Vector| {
        bump(&cg.g);
        x * 2.0
    })
    .with_jacobian(move |x: &Vector| {
        bump(&ca.a);
        dmatrix![1.0, 1.0, 1.0; x[1], x[0], 0.0]
    })
    .with_lagrangian_hessian(|_x: &Vector, lam: &Vector| {
        let mut h = Matrix::identity(3, 3) * 2.0;
        h[(0, 1)] -= lam[1];
        h[(1, 0)] -= lam[1];
        h
    })
}

#[test]
fn reported_counters_match_user_calls() {
    for strategy in [HessianStrategy::Exact, HessianStrategy::Fd, HessianStrategy::Bfgs] {
        let calls = Arc::new(Calls::default());
        let problem = instrumented(true, calls.clone());
        let cfg = SolverConfig { hessian_strategy: strategy, ..SolverConfig::default() };
        let report = solve(&problem, &cfg).unwrap();
        assert!(report.converged(), "{strategy}: {}", report.status);
        assert_eq!(calls.get(), [report.nf, report.nc, report.ng, report.nj], "{strategy}");
    }
}

#[test]
fn finite_difference_calls_are_charged_to_underlying_maps() {
    let calls = Arc::new(Calls::default());
    let problem = instrumented(false, calls.clone());
    let cfg = SolverConfig { hessian_strategy: HessianStrategy::Bfgs, ..SolverConfig::default() };
    let report = solve(&problem, &cfg).unwrap();
    assert!(report.converged());
    assert!(report.fd_gradient && report.fd_jacobian);
    let [f, c, g, a] = calls.get();
    assert_eq!((g, a), (0, 0));
    assert_eq!(f, report.nf);
    assert_eq!(c, report.nc);
    assert!(report.nf > report.nit);
}

#[test]
fn solution_is_kkt_point() {
    let problem = instrumented(true, Arc::new(Calls::default()));
    let report = solve(&problem, &SolverConfig::default()).unwrap();
    let x = &report.x_final;
    assert!((x[0] + x[1] + x[2] - 1.0).abs() <= 1e-6);
    assert!((x[0] * x[1] - 0.1).abs() <= 1e-6);
    assert!(report.res <= 1e-6);
}
