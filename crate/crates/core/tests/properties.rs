use filter_arc::cubic_subproblem::{cauchy_step, solve_reduced, solve_reduced_arc, TangentialModel};
use filter_arc::kernels::{factorize_jacobian, kkt_quantities, multipliers, normal_step, project};
use filter_arc::{Filter, Matrix, SolverConfig, Vector};
use proptest::prelude::*;

fn matrix_strategy(max_n: usize) -> impl Strategy<Value = Matrix> {
    (2..=max_n)
        .prop_flat_map(|n| (1..n, Just(n)))
        .prop_flat_map(|(m, n)| {
            prop::collection::vec(-3.0f64..3.0, m * n).prop_map(move |v| Matrix::from_vec(m, n, v))
        })
}

fn symmetric(k: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-2.0f64..2.0, k * k).prop_map(move |v| {
        let b = Matrix::from_vec(k, k, v);
        (&b + b.transpose()) * 0.5
    })
}

fn rank_tol() -> f64 {
    SolverConfig::default().rank_tol
}

proptest! {
    #[test]
    fn projector_annihilates_rows(a in matrix_strategy(8)) {
        let fac = factorize_jacobian(&a, rank_tol());
        prop_assume!(fac.is_ok());
        let fac = fac.unwrap();
        prop_assume!(fac.sigma_min() > 1e-3 * fac.norm());
        let z = fac.null_basis();
        let p = z * z.transpose();
        prop_assert!((&p * &p - &p).norm() <= 1e-10 * (1.0 + p.norm()));
        prop_assert!((&p - p.transpose()).norm() <= 1e-12 * (1.0 + p.norm()));
        prop_assert!((&a * &p).norm() <= 1e-9 * a.norm());
        prop_assert_eq!(fac.nullity(), a.ncols() - a.nrows());
    }

    #[test]
    fn gradient_splits_into_range_and_null_parts(a in matrix_strategy(8), seed in prop::collection::vec(-4.0f64..4.0, 8)) {
        let fac = factorize_jacobian(&a, rank_tol());
        prop_assume!(fac.is_ok());
        let fac = fac.unwrap();
        prop_assume!(fac.sigma_min() > 1e-3 * fac.norm());
        let g = Vector::from_iterator(a.ncols(), seed.iter().copied().take(a.ncols()));
        let lambda = multipliers(&fac, &g);
        let pg = project(&fac, &g);
        let recomposed = a.transpose() * lambda + &pg;
        prop_assert!((recomposed - &g).norm() <= 1e-9 * (1.0 + g.norm()));
        prop_assert!(pg.dot(&(&g - &pg)).abs() <= 1e-9 * (1.0 + g.norm_squared()));
    }

    #[test]
    fn normal_step_solves_linearized_constraints(a in matrix_strategy(8), seed in prop::collection::vec(-4.0f64..4.0, 7)) {
        let fac = factorize_jacobian(&a, rank_tol());
        prop_assume!(fac.is_ok());
        let fac = fac.unwrap();
        prop_assume!(fac.sigma_min() > 1e-3 * fac.norm());
        let c = Vector::from_iterator(a.nrows(), seed.iter().copied().take(a.nrows()));
        let n = normal_step(&fac, &c);
        prop_assert!((&a * &n + &c).norm() <= 1e-9 * (1.0 + c.norm()));
        prop_assert!(project(&fac, &n).norm() <= 1e-9 * (1.0 + n.norm()));
    }

    #[test]
    fn kkt_residual_is_max_of_parts(a in matrix_strategy(6), gs in prop::collection::vec(-4.0f64..4.0, 6), cs in prop::collection::vec(-4.0f64..4.0, 5)) {
        let fac = factorize_jacobian(&a, rank_tol());
        prop_assume!(fac.is_ok());
        let fac = fac.unwrap();
        let g = Vector::from_iterator(a.ncols(), gs.iter().copied().take(a.ncols()));
        let c = Vector::from_iterator(a.nrows(), cs.iter().copied().take(a.nrows()));
        let q = kkt_quantities(1.5, &g, &c, &fac);
        prop_assert_eq!(q.res, q.pg_norm.max(q.h));
        prop_assert!((q.h - c.norm()).abs() <= 1e-14 * (1.0 + c.norm()));
        prop_assert!((q.lagrangian_value - (1.5 - q.lambda.dot(&c))).abs() <= 1e-12 * (1.0 + q.lagrangian_value.abs()));
    }

    #[test]
    fn reduced_solution_satisfies_secular_conditions(
        (h, g) in (1usize..=5).prop_flat_map(|k| (symmetric(k), prop::collection::vec(-2.0f64..2.0, k))),
        sigma in 0.05f64..5.0,
    ) {
        let g = Vector::from_vec(g);
        prop_assume!(g.norm() > 1e-6);
        let sol = solve_reduced(&h, &g, sigma, 1e-10 * (1.0 + g.norm())).expect("eigendecomposition");
        let k = g.len();
        let stationarity = ((&h + Matrix::identity(k, k) * sol.nu) * &sol.w + &g).norm();
        prop_assert!(stationarity <= 1e-7 * (1.0 + g.norm()));
        prop_assert!((sol.nu - sigma * sol.w.norm()).abs() <= 1e-7 * (1.0 + sol.nu));
        prop_assert!(h.symmetric_eigenvalues().min() + sol.nu >= -1e-8);
    }

    #[test]
    fn global_step_dominates_cauchy_step(
        a in matrix_strategy(6),
        gs in prop::collection::vec(-3.0f64..3.0, 6),
        hs in prop::collection::vec(-2.0f64..2.0, 36),
        sigma in 0.1f64..4.0,
    ) {
        let fac = factorize_jacobian(&a, rank_tol());
        prop_assume!(fac.is_ok());
        let fac = fac.unwrap();
        let n = a.ncols();
        let b = Matrix::from_iterator(n, n, hs.iter().copied().take(n * n));
        let hess = (&b + b.transpose()) * 0.5;
        let g = Vector::from_iterator(n, gs.iter().copied().take(n));
        let pg = project(&fac, &g);
        let model = TangentialModel { f0: 0.0, pg: &pg, hessian: &hess, sigma, fac: &fac };
        let sol = solve_reduced_arc(&model, None);
        let (_, cauchy) = cauchy_step(&model);
        prop_assert!(sol.decrease >= cauchy - 1e-10 * (1.0 + cauchy.abs()));
        prop_assert!(project(&fac, &sol.t).norm() >= sol.t.norm() * (1.0 - 1e-9) - 1e-12);
        prop_assert!((&a * &sol.t).norm() <= 1e-9 * (1.0 + sol.t.norm()) * (1.0 + a.norm()));
    }

    #[test]
    fn filter_region_only_grows(points in prop::collection::vec((0.0f64..5.0, -5.0f64..5.0), 1..60),
                                probes in prop::collection::vec((0.0f64..6.0, -6.0f64..6.0), 50)) {
        let mut pruned = Filter::new(5.0, 1e-5, 1e-5).unwrap();
        let mut full = Filter::new(5.0, 1e-5, 1e-5).unwrap().without_pruning();
        let mut before: Vec<bool> = probes.iter().map(|&(h, l)| pruned.in_region(h, l)).collect();
        for &(h, l) in &points {
            pruned.add(h, l);
            full.add(h, l);
            prop_assert!(pruned.in_region(h, l));
            for (i, &(ph, pl)) in probes.iter().enumerate() {
                let now = pruned.in_region(ph, pl);
                prop_assert!(!before[i] || now);
                prop_assert_eq!(now, full.in_region(ph, pl));
                before[i] = now;
            }
        }
        prop_assert!(pruned.len() <= full.len());
    }

    #[test]
    fn margins_against_every_corner_escape_region(points in prop::collection::vec((0.01f64..5.0, -5.0f64..5.0), 1..30)) {
        let mut filter = Filter::new(10.0, 1e-5, 1e-5).unwrap();
        for &(h, l) in &points {
            filter.add(h, l);
        }
        let min_h = filter.entries().iter().map(|e| e.h).fold(f64::INFINITY, f64::min);
        let h = 0.5 * min_h;
        prop_assert!(!filter.in_region(h, 1e6));
        prop_assert!(filter.entries().iter().all(|&e| filter.improves_on(h, 1e6, e)));
    }
}
