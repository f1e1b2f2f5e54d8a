//! Built-in equality-constrained test problems with analytic derivatives
//! and published reference statistics.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::dvector;
use thiserror::Error;

use crate::problem::{Matrix, ProblemDef, Vector};

/// Reference run statistics for one problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaperStats {
    pub n: usize,
    pub m: usize,
    pub nit: usize,
    pub nf: usize,
    pub nc: usize,
    pub ng: usize,
    pub res: f64,
    pub cpu_time: f64,
}

#[derive(Debug, Clone)]
pub struct TestProblem {
    pub problem: ProblemDef,
    pub paper_stats: Option<PaperStats>,
    pub known_solution: Option<Vector>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("unknown problem '{name}'; available: {}", available.join(", "))]
pub struct LookupError {
    pub name: String,
    pub available: Vec<&'static str>,
}

/// Implemented problems, in reference-table order.
pub const REGISTRY: [&str; 24] = [
    "BOOTH", "BT1", "BT2", "BT11", "BT12", "BYRDSPHR", "GENHS28", "HIMMELBA", "HIMMELBC", "HS6", "HS7", "HS8", "HS9",
    "HS26", "HS27", "HS28", "HS39", "HS40", "HS77", "HS78", "HS79", "MARATOS", "RECIPE", "ZANGWIL3",
];

type Row = (&'static str, usize, usize, usize, usize, usize, usize, f64, f64);

const TABLE: [Row; 83] = [
    ("AIRCRFTA", 8, 5, 2, 3, 3, 3, 1.5932e-08, 0.0164),
    ("ARGTRIG", 200, 200, 3, 3, 4, 4, 6.8423e-07, 3.8064),
    ("BDVALUE", 102, 100, 2, 3, 3, 3, 9.5721e-10, 0.1291),
    ("BOOTH", 2, 2, 1, 2, 2, 2, 0.0000e+00, 0.0074),
    ("BROYDN3D", 500, 500, 4, 5, 5, 5, 1.0634e-09, 18.2427),
    ("BT1", 2, 1, 5, 5, 6, 6, 1.3889e-07, 0.0234),
    ("BT2", 3, 1, 9, 9, 10, 10, 7.2220e-10, 0.0297),
    ("BT3", 5, 3, 3, 4, 4, 4, 1.0934e-10, 0.0084),
    ("BT4", 3, 2, 5, 5, 1, 6, 2.5683e-07, 0.0200),
    ("BT5", 3, 2, 7, 8, 8, 8, 2.2452e-08, 0.0147),
    ("BT6", 5, 2, 12, 15, 13, 13, 4.2933e-07, 0.0277),
    ("BT7", 5, 3, 5, 4, 6, 6, 2.9464e-07, 0.0334),
    ("BT8", 5, 2, 6, 6, 7, 7, 3.5654e-07, 0.0213),
    ("BT9", 4, 2, 9, 11, 10, 10, 8.0670e-08, 0.0198),
    ("BT10", 2, 2, 2, 2, 3, 3, 2.0895e-09, 0.0187),
    ("BT11", 5, 3, 9, 9, 10, 10, 5.2740e-09, 0.0349),
    ("BT12", 5, 3, 8, 8, 9, 9, 3.5613e-07, 0.0315),
    ("BYRDSPHR", 3, 2, 8, 8, 9, 9, 3.5170e-13, 0.0346),
    ("CLUSTER", 2, 2, 4, 7, 5, 5, 3.7799e-10, 0.0174),
    ("DTOC3", 299, 198, 27, 28, 28, 28, 3.9893e-07, 42.3079),
    ("DTOC4", 299, 198, 3, 4, 4, 4, 2.3783e-07, 17.4360),
    ("DTOC5", 19, 9, 0, 1, 1, 1, 0.0000e+00, 0.0009),
    ("GENHS28", 10, 8, 5, 5, 6, 6, 3.3345e-08, 0.0360),
    ("GOTTFR", 2, 3, 5, 8, 6, 6, 2.1823e-10, 0.0169),
    ("HAGER1", 1001, 500, 16, 16, 17, 17, 5.8785e-07, 102.1731),
    ("HAGER2", 1001, 500, 12, 12, 13, 13, 4.6752e-07, 71.8340),
    ("HAGER3", 1001, 500, 10, 10, 11, 11, 2.9516e-07, 52.7732),
    ("HATFLDF", 3, 3, 3, 3, 4, 4, 1.7795e-08, 0.0387),
    ("HATFLDG", 25, 25, 2, 2, 3, 3, 4.0738e-12, 0.0684),
    ("HEART8", 8, 8, 5, 6, 6, 6, 1.8500e-07, 0.2510),
    ("HIMMELBA", 2, 2, 1, 1, 2, 2, 5.3134e-07, 0.0108),
    ("HIMMELBC", 2, 2, 2, 2, 3, 3, 2.8424e-13, 0.0260),
    ("HIMMELBE", 3, 3, 5, 1, 2, 6, 7.4308e-07, 0.0121),
    ("HS06", 2, 1, 13, 13, 14, 14, 6.0080e-08, 0.0232),
    ("HS07", 2, 1, 7, 8, 8, 8, 5.4175e-08, 0.0273),
    ("HS08", 2, 2, 2, 2, 3, 3, 2.5421e-13, 0.0105),
    ("HS09", 2, 1, 6, 7, 7, 7, 3.9241e-07, 0.0112),
    ("HS26", 3, 1, 9, 10, 10, 10, 1.2431e-08, 0.0189),
    ("HS27", 3, 1, 26, 29, 27, 27, 3.4457e-08, 0.0447),
    ("HS28", 3, 1, 5, 7, 6, 6, 1.9369e-08, 0.0081),
    ("HS39", 4, 2, 9, 11, 10, 10, 8.1036e-08, 0.0350),
    ("HS40", 4, 3, 19, 19, 20, 120, 9.5368e-07, 0.0527),
    ("HS42", 4, 2, 28, 52, 29, 29, 8.4021e-07, 0.0657),
    ("HS46", 5, 2, 12, 13, 13, 13, 8.8987e-07, 0.0551),
    ("HS47", 5, 3, 20, 20, 21, 21, 5.8020e-07, 0.1012),
    ("HS48", 5, 2, 4, 5, 5, 5, 8.6615e-08, 0.0169),
    ("HS49", 5, 2, 22, 23, 23, 23, 7.8456e-07, 0.0975),
    ("HS50", 5, 3, 12, 15, 13, 13, 1.3377e-07, 0.0667),
    ("HS51", 5, 3, 3, 5, 4, 4, 9.8047e-15, 0.0143),
    ("HS52", 5, 3, 6, 6, 7, 7, 3.1612e-10, 0.0209),
    ("HS56", 7, 4, 0, 1, 1, 1, 0.0000e+00, 0.0043),
    ("HS61", 3, 2, 6, 6, 7, 7, 6.3198e-07, 0.0232),
    ("HS77", 5, 2, 11, 13, 12, 12, 7.8820e-07, 0.0267),
    ("HS78", 5, 3, 12, 14, 13, 13, 5.3810e-07, 0.0303),
    ("HS79", 5, 3, 8, 8, 9, 9, 8.8824e-07, 0.0353),
    ("HS100LNP", 7, 2, 15, 21, 16, 16, 4.9734e-07, 0.0540),
    ("HS111LNP", 10, 3, 12, 12, 13, 13, 8.0141e-08, 0.0587),
    ("HYPCIR", 2, 2, 1, 1, 2, 2, 5.4209e-07, 0.0118),
    ("INTEGREQ", 5, 5, 1, 1, 2, 2, 3.8263e-07, 0.0117),
    ("MARATOS", 2, 1, 3, 4, 4, 4, 2.6776e-07, 0.0072),
    ("MWRIGHT", 5, 3, 8, 10, 9, 9, 6.1967e-09, 0.0267),
    ("ORTHREGB", 27, 6, 7, 8, 8, 8, 1.1322e-08, 0.2326),
    ("POWELLSQ", 2, 2, 1, 1, 2, 2, 8.1603e-07, 0.0099),
    ("RECIPE", 3, 3, 2, 2, 3, 3, 3.0307e-15, 0.0118),
    ("S235", 3, 1, 16, 17, 17, 17, 1.8935e-08, 0.0230),
    ("S252", 3, 1, 14, 14, 15, 15, 4.7686e-08, 0.0267),
    ("S265", 4, 2, 1, 2, 2, 2, 1.8081e-16, 0.0073),
    ("S269", 5, 3, 5, 5, 6, 6, 2.1785e-07, 0.0201),
    ("S316", 2, 1, 2, 2, 3, 3, 4.8916e-08, 0.0094),
    ("S317", 2, 1, 5, 5, 6, 6, 3.3780e-12, 0.0143),
    ("S318", 2, 1, 5, 5, 6, 6, 3.2496e-11, 0.0143),
    ("S319", 2, 1, 7, 7, 8, 8, 6.3140e-08, 0.0151),
    ("S320", 2, 1, 25, 46, 26, 26, 9.1824e-07, 0.0498),
    ("S321", 2, 1, 17, 35, 18, 18, 2.9056e-07, 0.0406),
    ("S335", 3, 2, 11, 11, 12, 12, 1.2615e-07, 0.1254),
    ("S336", 3, 2, 7, 7, 8, 8, 2.3466e-08, 0.0211),
    ("S338", 3, 2, 6, 6, 7, 7, 9.4251e-07, 0.0209),
    ("S344", 3, 1, 8, 10, 9, 9, 6.4195e-07, 0.0146),
    ("S373", 9, 6, 13, 12, 14, 14, 7.6678e-07, 0.1131),
    ("S378", 10, 3, 13, 13, 14, 14, 1.9417e-10, 0.0707),
    ("S394", 20, 12, 9, 9, 10, 10, 2.7574e-07, 0.1158),
    ("S395", 50, 1, 9, 8, 10, 10, 5.1312e-07, 0.2480),
    ("ZANGWIL3", 3, 3, 2, 2, 3, 3, 2.0128e-47, 0.0208),
];

/// Upper-case the name and drop leading zeros after an `HS` prefix.
pub fn canonical_name(name: &str) -> String {
    let upper = name.trim().to_ascii_uppercase();
    match upper.strip_prefix("HS") {
        Some(rest) if rest.starts_with(|c: char| c.is_ascii_digit()) => {
            let trimmed = rest.trim_start_matches('0');
            format!("HS{}", if trimmed.is_empty() || !trimmed.starts_with(|c: char| c.is_ascii_digit()) {
                rest
            } else {
                trimmed
            })
        }
        _ => upper,
    }
}

/// Reference statistics for any tabulated name, implemented or not.
pub fn reference_stats(name: &str) -> Option<PaperStats> {
    let key = canonical_name(name);
    TABLE
        .iter()
        .find(|row| canonical_name(row.0) == key)
        .map(|&(_, n, m, nit, nf, nc, ng, res, cpu_time)| PaperStats {
            n,
            m,
            nit,
            nf,
            nc,
            ng,
            res,
            cpu_time,
        })
}

/// Every tabulated name, in table order.
pub fn reference_names() -> impl Iterator<Item = &'static str> {
    TABLE.iter().map(|row| row.0)
}

pub fn names() -> &'static [&'static str] {
    &REGISTRY
}

pub fn get_problem(name: &str) -> Result<TestProblem, LookupError> {
    let key = canonical_name(name);
    let (problem, known_solution) = match key.as_str() {
        "BOOTH" => (booth(), Some(dvector![1.0, 3.0])),
        "BT1" => (bt1(), Some(dvector![1.0, 0.0])),
        "BT2" => (bt2(), None),
        "BT11" => (hs79("BT11"), None),
        "BT12" => (bt12(), None),
        "BYRDSPHR" => (byrdsphr(), None),
        "GENHS28" => (genhs28(), None),
        "HIMMELBA" => (himmelba(), Some(dvector![20.0, 1.0])),
        "HIMMELBC" => (himmelbc(), Some(dvector![3.0, 2.0])),
        "HS6" => (hs6(), Some(dvector![1.0, 1.0])),
        "HS7" => (hs7(), Some(dvector![0.0, 3f64.sqrt()])),
        "HS8" => (hs8(), None),
        "HS9" => (hs9(), None),
        "HS26" => (hs26(), Some(dvector![1.0, 1.0, 1.0])),
        "HS27" => (hs27(), Some(dvector![-1.0, 1.0, 0.0])),
        "HS28" => (hs28(), Some(dvector![0.5, -0.5, 0.5])),
        "HS39" => (hs39(), Some(dvector![1.0, 1.0, 0.0, 0.0])),
        "HS40" => (hs40(), None),
        "HS77" => (hs77(), None),
        "HS78" => (hs78(), None),
        "HS79" => (hs79("HS79"), None),
        "MARATOS" => (maratos(), Some(dvector![1.0, 0.0])),
        "RECIPE" => (recipe(), Some(dvector![5.0, 2.0, 1.0])),
        "ZANGWIL3" => (zangwil3(), Some(dvector![0.0, 0.0, 0.0])),
        _ => {
            return Err(LookupError {
                name: name.to_owned(),
                available: REGISTRY.to_vec(),
            })
        }
    };
    Ok(TestProblem {
        paper_stats: reference_stats(&key),
        problem,
        known_solution,
    })
}

/// All registered problems, in registry order.
pub fn all_problems() -> Vec<TestProblem> {
    REGISTRY.iter().map(|n| get_problem(n).expect("registered")).collect()
}

fn build<F, G, C, J, H>(name: &str, x0: Vector, m: usize, f: F, g: G, c: C, a: J, hess: H) -> ProblemDef
where
    F: Fn(&Vector) -> f64 + Send + Sync + 'static,
    G: Fn(&Vector) -> Vector + Send + Sync + 'static,
    C: Fn(&Vector) -> Vector + Send + Sync + 'static,
    J: Fn(&Vector) -> Matrix + Send + Sync + 'static,
    H: Fn(&Vector, &Vector) -> Matrix + Send + Sync + 'static,
{
    ProblemDef::new(name, x0, m, f, c)
        .expect("registered problems have valid dimensions")
        .with_gradient(g)
        .with_jacobian(a)
        .with_lagrangian_hessian(hess)
}

fn sym(n: usize, entries: &[(usize, usize, f64)]) -> Matrix {
    let mut h = Matrix::zeros(n, n);
    for &(i, j, v) in entries {
        h[(i, j)] += v;
        if i != j {
            h[(j, i)] += v;
        }
    }
    h
}

fn rows(m: usize, n: usize, data: &[f64]) -> Matrix {
    Matrix::from_row_slice(m, n, data)
}

fn booth() -> ProblemDef {
    build(
        "BOOTH",
        dvector![0.0, 0.0],
        2,
        |_| 0.0,
        |_| Vector::zeros(2),
        |x| dvector![x[0] + 2.0 * x[1] - 7.0, 2.0 * x[0] + x[1] - 5.0],
        |_| rows(2, 2, &[1.0, 2.0, 2.0, 1.0]),
        |_, _| Matrix::zeros(2, 2),
    )
}

fn himmelba() -> ProblemDef {
    build(
        "HIMMELBA",
        dvector![8.0, 9.0],
        2,
        |_| 0.0,
        |_| Vector::zeros(2),
        |x| dvector![0.25 * x[0] - 5.0, x[1] - 1.0],
        |_| rows(2, 2, &[0.25, 0.0, 0.0, 1.0]),
        |_, _| Matrix::zeros(2, 2),
    )
}

fn himmelbc() -> ProblemDef {
    build(
        "HIMMELBC",
        dvector![1.0, 1.0],
        2,
        |_| 0.0,
        |_| Vector::zeros(2),
        |x| dvector![x[0] * x[0] + x[1] - 11.0, x[0] + x[1] * x[1] - 7.0],
        |x| rows(2, 2, &[2.0 * x[0], 1.0, 1.0, 2.0 * x[1]]),
        |_, l| sym(2, &[(0, 0, -2.0 * l[0]), (1, 1, -2.0 * l[1])]),
    )
}

fn maratos() -> ProblemDef {
    const TAU: f64 = 1e-6;
    build(
        "MARATOS",
        dvector![1.1, 0.1],
        1,
        |x| -x[0] + TAU * (x[0] * x[0] + x[1] * x[1] - 1.0),
        |x| dvector![-1.0 + 2.0 * TAU * x[0], 2.0 * TAU * x[1]],
        |x| dvector![x[0] * x[0] + x[1] * x[1] - 1.0],
        |x| rows(1, 2, &[2.0 * x[0], 2.0 * x[1]]),
        |_, l| Matrix::identity(2, 2) * (2.0 * TAU - 2.0 * l[0]),
    )
}

fn bt1() -> ProblemDef {
    build(
        "BT1",
        dvector![0.08, 0.06],
        1,
        |x| 100.0 * x[0] * x[0] + 100.0 * x[1] * x[1] - x[0] - 100.0,
        |x| dvector![200.0 * x[0] - 1.0, 200.0 * x[1]],
        |x| dvector![x[0] * x[0] + x[1] * x[1] - 1.0],
        |x| rows(1, 2, &[2.0 * x[0], 2.0 * x[1]]),
        |_, l| Matrix::identity(2, 2) * (200.0 - 2.0 * l[0]),
    )
}

fn bt2() -> ProblemDef {
    build(
        "BT2",
        dvector![10.0, 10.0, 10.0],
        1,
        |x| (x[0] - 1.0).powi(2) + (x[0] - x[1]).powi(2) + (x[1] - x[2]).powi(4),
        |x| {
            let u3 = 4.0 * (x[1] - x[2]).powi(3);
            dvector![2.0 * (x[0] - 1.0) + 2.0 * (x[0] - x[1]), -2.0 * (x[0] - x[1]) + u3, -u3]
        },
        |x| dvector![x[0] * (1.0 + x[1] * x[1]) + x[2].powi(4) - 4.0 - 3.0 * SQRT_2],
        |x| rows(1, 3, &[1.0 + x[1] * x[1], 2.0 * x[0] * x[1], 4.0 * x[2].powi(3)]),
        |x, l| {
            let u2 = 12.0 * (x[1] - x[2]).powi(2);
            sym(
                3,
                &[
                    (0, 0, 4.0),
                    (0, 1, -2.0 - 2.0 * l[0] * x[1]),
                    (1, 1, 2.0 + u2 - 2.0 * l[0] * x[0]),
                    (1, 2, -u2),
                    (2, 2, u2 - 12.0 * l[0] * x[2] * x[2]),
                ],
            )
        },
    )
}

fn hs79(name: &str) -> ProblemDef {
    build(
        name,
        dvector![2.0, 2.0, 2.0, 2.0, 2.0],
        3,
        |x| {
            (x[0] - 1.0).powi(2)
                + (x[0] - x[1]).powi(2)
                + (x[1] - x[2]).powi(2)
                + (x[2] - x[3]).powi(4)
                + (x[3] - x[4]).powi(4)
        },
        |x| {
            let a3 = 4.0 * (x[2] - x[3]).powi(3);
            let b3 = 4.0 * (x[3] - x[4]).powi(3);
            dvector![
                2.0 * (x[0] - 1.0) + 2.0 * (x[0] - x[1]),
                -2.0 * (x[0] - x[1]) + 2.0 * (x[1] - x[2]),
                -2.0 * (x[1] - x[2]) + a3,
                -a3 + b3,
                -b3
            ]
        },
        |x| {
            dvector![
                x[0] + x[1] * x[1] + x[2].powi(3) - 2.0 - 3.0 * SQRT_2,
                x[1] - x[2] * x[2] + x[3] + 2.0 - 2.0 * SQRT_2,
                x[0] * x[4] - 2.0
            ]
        },
        |x| {
            rows(
                3,
                5,
                &[
                    1.0, 2.0 * x[1], 3.0 * x[2] * x[2], 0.0, 0.0, //
                    0.0, 1.0, -2.0 * x[2], 1.0, 0.0, //
                    x[4], 0.0, 0.0, 0.0, x[0],
                ],
            )
        },
        |x, l| {
            let a2 = 12.0 * (x[2] - x[3]).powi(2);
            let b2 = 12.0 * (x[3] - x[4]).powi(2);
            sym(
                5,
                &[
                    (0, 0, 4.0),
                    (0, 1, -2.0),
                    (1, 1, 4.0 - 2.0 * l[0]),
                    (1, 2, -2.0),
                    (2, 2, 2.0 + a2 - 6.0 * l[0] * x[2] + 2.0 * l[1]),
                    (2, 3, -a2),
                    (3, 3, a2 + b2),
                    (3, 4, -b2),
                    (4, 4, b2),
                    (0, 4, -l[2]),
                ],
            )
        },
    )
}

fn bt12() -> ProblemDef {
    build(
        "BT12",
        dvector![15.0, -2.0, 0.0, 0.0, 3.0],
        3,
        |x| 0.01 * x[0] * x[0] + x[1] * x[1],
        |x| dvector![0.02 * x[0], 2.0 * x[1], 0.0, 0.0, 0.0],
        |x| {
            dvector![
                x[0] + x[1] - x[2] * x[2] - 25.0,
                x[0] * x[0] + x[1] * x[1] - x[3] * x[3] - 25.0,
                x[0] - x[4] * x[4] - 2.0
            ]
        },
        |x| {
            rows(
                3,
                5,
                &[
                    1.0, 1.0, -2.0 * x[2], 0.0, 0.0, //
                    2.0 * x[0], 2.0 * x[1], 0.0, -2.0 * x[3], 0.0, //
                    1.0, 0.0, 0.0, 0.0, -2.0 * x[4],
                ],
            )
        },
        |_, l| {
            sym(
                5,
                &[
                    (0, 0, 0.02 - 2.0 * l[1]),
                    (1, 1, 2.0 - 2.0 * l[1]),
                    (2, 2, 2.0 * l[0]),
                    (3, 3, 2.0 * l[1]),
                    (4, 4, 2.0 * l[2]),
                ],
            )
        },
    )
}

fn byrdsphr() -> ProblemDef {
    build(
        "BYRDSPHR",
        dvector![5.0, 0.0001, -0.0001],
        2,
        |x| -x[0] - x[1] - x[2],
        |_| dvector![-1.0, -1.0, -1.0],
        |x| {
            let tail = x[1] * x[1] + x[2] * x[2] - 9.0;
            dvector![x[0] * x[0] + tail, (x[0] - 1.0).powi(2) + tail]
        },
        |x| {
            rows(
                2,
                3,
                &[
                    2.0 * x[0], 2.0 * x[1], 2.0 * x[2], //
                    2.0 * (x[0] - 1.0), 2.0 * x[1], 2.0 * x[2],
                ],
            )
        },
        |_, l| Matrix::identity(3, 3) * (-2.0 * (l[0] + l[1])),
    )
}

fn genhs28() -> ProblemDef {
    const N: usize = 10;
    let mut x0 = Vector::from_element(N, 1.0);
    x0[0] = -4.0;
    build(
        "GENHS28",
        x0,
        N - 2,
        |x| (0..N - 1).map(|i| (x[i] + x[i + 1]).powi(2)).sum(),
        |x| {
            let mut g = Vector::zeros(N);
            for i in 0..N - 1 {
                let s = 2.0 * (x[i] + x[i + 1]);
                g[i] += s;
                g[i + 1] += s;
            }
            g
        },
        |x| Vector::from_fn(N - 2, |i, _| x[i] + 2.0 * x[i + 1] + 3.0 * x[i + 2] - 1.0),
        |_| {
            Matrix::from_fn(N - 2, N, |i, j| match j.wrapping_sub(i) {
                0 => 1.0,
                1 => 2.0,
                2 => 3.0,
                _ => 0.0,
            })
        },
        |_, _| {
            let mut h = Matrix::zeros(N, N);
            for i in 0..N - 1 {
                h[(i, i)] += 2.0;
                h[(i + 1, i + 1)] += 2.0;
                h[(i, i + 1)] += 2.0;
                h[(i + 1, i)] += 2.0;
            }
            h
        },
    )
}

fn hs6() -> ProblemDef {
    build(
        "HS6",
        dvector![-1.2, 1.0],
        1,
        |x| (1.0 - x[0]).powi(2),
        |x| dvector![-2.0 * (1.0 - x[0]), 0.0],
        |x| dvector![10.0 * (x[1] - x[0] * x[0])],
        |x| rows(1, 2, &[-20.0 * x[0], 10.0]),
        |_, l| sym(2, &[(0, 0, 2.0 + 20.0 * l[0])]),
    )
}

fn hs7() -> ProblemDef {
    build(
        "HS7",
        dvector![2.0, 2.0],
        1,
        |x| (1.0 + x[0] * x[0]).ln() - x[1],
        |x| dvector![2.0 * x[0] / (1.0 + x[0] * x[0]), -1.0],
        |x| dvector![(1.0 + x[0] * x[0]).powi(2) + x[1] * x[1] - 4.0],
        |x| rows(1, 2, &[4.0 * x[0] * (1.0 + x[0] * x[0]), 2.0 * x[1]]),
        |x, l| {
            let q = 1.0 + x[0] * x[0];
            sym(
                2,
                &[
                    (0, 0, 2.0 * (1.0 - x[0] * x[0]) / (q * q) - l[0] * 4.0 * (1.0 + 3.0 * x[0] * x[0])),
                    (1, 1, -2.0 * l[0]),
                ],
            )
        },
    )
}

fn hs8() -> ProblemDef {
    build(
        "HS8",
        dvector![2.0, 1.0],
        2,
        |_| -1.0,
        |_| Vector::zeros(2),
        |x| dvector![x[0] * x[0] + x[1] * x[1] - 25.0, x[0] * x[1] - 9.0],
        |x| rows(2, 2, &[2.0 * x[0], 2.0 * x[1], x[1], x[0]]),
        |_, l| sym(2, &[(0, 0, -2.0 * l[0]), (1, 1, -2.0 * l[0]), (0, 1, -l[1])]),
    )
}

fn hs9() -> ProblemDef {
    const A: f64 = PI / 12.0;
    const B: f64 = PI / 16.0;
    build(
        "HS9",
        dvector![0.0, 0.0],
        1,
        |x| (A * x[0]).sin() * (B * x[1]).cos(),
        |x| {
            dvector![
                A * (A * x[0]).cos() * (B * x[1]).cos(),
                -B * (A * x[0]).sin() * (B * x[1]).sin()
            ]
        },
        |x| dvector![4.0 * x[0] - 3.0 * x[1]],
        |_| rows(1, 2, &[4.0, -3.0]),
        |x, _| {
            let f = (A * x[0]).sin() * (B * x[1]).cos();
            sym(
                2,
                &[
                    (0, 0, -A * A * f),
                    (1, 1, -B * B * f),
                    (0, 1, -A * B * (A * x[0]).cos() * (B * x[1]).sin()),
                ],
            )
        },
    )
}

fn hs26() -> ProblemDef {
    build(
        "HS26",
        dvector![-2.6, 2.0, 2.0],
        1,
        |x| (x[0] - x[1]).powi(2) + (x[1] - x[2]).powi(4),
        |x| {
            let u3 = 4.0 * (x[1] - x[2]).powi(3);
            dvector![2.0 * (x[0] - x[1]), -2.0 * (x[0] - x[1]) + u3, -u3]
        },
        |x| dvector![(1.0 + x[1] * x[1]) * x[0] + x[2].powi(4) - 3.0],
        |x| rows(1, 3, &[1.0 + x[1] * x[1], 2.0 * x[0] * x[1], 4.0 * x[2].powi(3)]),
        |x, l| {
            let u2 = 12.0 * (x[1] - x[2]).powi(2);
            sym(
                3,
                &[
                    (0, 0, 2.0),
                    (0, 1, -2.0 - 2.0 * l[0] * x[1]),
                    (1, 1, 2.0 + u2 - 2.0 * l[0] * x[0]),
                    (1, 2, -u2),
                    (2, 2, u2 - 12.0 * l[0] * x[2] * x[2]),
                ],
            )
        },
    )
}

fn hs27() -> ProblemDef {
    build(
        "HS27",
        dvector![2.0, 2.0, 2.0],
        1,
        |x| 0.01 * (x[0] - 1.0).powi(2) + (x[1] - x[0] * x[0]).powi(2),
        |x| {
            let r = x[1] - x[0] * x[0];
            dvector![0.02 * (x[0] - 1.0) - 4.0 * x[0] * r, 2.0 * r, 0.0]
        },
        |x| dvector![x[0] + x[2] * x[2] + 1.0],
        |x| rows(1, 3, &[1.0, 0.0, 2.0 * x[2]]),
        |x, l| {
            sym(
                3,
                &[
                    (0, 0, 0.02 - 4.0 * x[1] + 12.0 * x[0] * x[0]),
                    (0, 1, -4.0 * x[0]),
                    (1, 1, 2.0),
                    (2, 2, -2.0 * l[0]),
                ],
            )
        },
    )
}

fn hs28() -> ProblemDef {
    build(
        "HS28",
        dvector![-4.0, 1.0, 1.0],
        1,
        |x| (x[0] + x[1]).powi(2) + (x[1] + x[2]).powi(2),
        |x| {
            let p = 2.0 * (x[0] + x[1]);
            let q = 2.0 * (x[1] + x[2]);
            dvector![p, p + q, q]
        },
        |x| dvector![x[0] + 2.0 * x[1] + 3.0 * x[2] - 1.0],
        |_| rows(1, 3, &[1.0, 2.0, 3.0]),
        |_, _| sym(3, &[(0, 0, 2.0), (0, 1, 2.0), (1, 1, 4.0), (1, 2, 2.0), (2, 2, 2.0)]),
    )
}

fn hs39() -> ProblemDef {
    build(
        "HS39",
        dvector![2.0, 2.0, 2.0, 2.0],
        2,
        |x| -x[0],
        |_| dvector![-1.0, 0.0, 0.0, 0.0],
        |x| {
            dvector![
                x[1] - x[0].powi(3) - x[2] * x[2],
                x[0] * x[0] - x[1] - x[3] * x[3]
            ]
        },
        |x| {
            rows(
                2,
                4,
                &[
                    -3.0 * x[0] * x[0], 1.0, -2.0 * x[2], 0.0, //
                    2.0 * x[0], -1.0, 0.0, -2.0 * x[3],
                ],
            )
        },
        |x, l| {
            sym(
                4,
                &[
                    (0, 0, 6.0 * l[0] * x[0] - 2.0 * l[1]),
                    (2, 2, 2.0 * l[0]),
                    (3, 3, 2.0 * l[1]),
                ],
            )
        },
    )
}

/// Product of all entries except those at `skip`.
fn product_except(x: &Vector, skip: &[usize]) -> f64 {
    x.iter()
        .enumerate()
        .filter(|(i, _)| !skip.contains(i))
        .map(|(_, v)| v)
        .product()
}

fn product_hessian(x: &Vector, scale: f64) -> Matrix {
    let n = x.len();
    Matrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { scale * product_except(x, &[i, j]) })
}

fn hs40() -> ProblemDef {
    build(
        "HS40",
        dvector![0.8, 0.8, 0.8, 0.8],
        3,
        |x| -x.iter().product::<f64>(),
        |x| Vector::from_fn(4, |i, _| -product_except(x, &[i])),
        |x| {
            dvector![
                x[0].powi(3) + x[1] * x[1] - 1.0,
                x[0] * x[0] * x[3] - x[2],
                x[3] * x[3] - x[1]
            ]
        },
        |x| {
            rows(
                3,
                4,
                &[
                    3.0 * x[0] * x[0], 2.0 * x[1], 0.0, 0.0, //
                    2.0 * x[0] * x[3], 0.0, -1.0, x[0] * x[0], //
                    0.0, -1.0, 0.0, 2.0 * x[3],
                ],
            )
        },
        |x, l| {
            product_hessian(x, -1.0)
                - sym(
                    4,
                    &[
                        (0, 0, 6.0 * l[0] * x[0] + 2.0 * l[1] * x[3]),
                        (1, 1, 2.0 * l[0]),
                        (0, 3, 2.0 * l[1] * x[0]),
                        (3, 3, 2.0 * l[2]),
                    ],
                )
        },
    )
}

fn hs77() -> ProblemDef {
    build(
        "HS77",
        dvector![2.0, 2.0, 2.0, 2.0, 2.0],
        2,
        |x| {
            (x[0] - 1.0).powi(2)
                + (x[0] - x[1]).powi(2)
                + (x[2] - 1.0).powi(2)
                + (x[3] - 1.0).powi(4)
                + (x[4] - 1.0).powi(6)
        },
        |x| {
            dvector![
                2.0 * (x[0] - 1.0) + 2.0 * (x[0] - x[1]),
                -2.0 * (x[0] - x[1]),
                2.0 * (x[2] - 1.0),
                4.0 * (x[3] - 1.0).powi(3),
                6.0 * (x[4] - 1.0).powi(5)
            ]
        },
        |x| {
            dvector![
                x[0] * x[0] * x[3] + (x[3] - x[4]).sin() - 2.0 * SQRT_2,
                x[1] + x[2].powi(4) * x[3] * x[3] - 8.0 - SQRT_2
            ]
        },
        |x| {
            let cs = (x[3] - x[4]).cos();
            rows(
                2,
                5,
                &[
                    2.0 * x[0] * x[3], 0.0, 0.0, x[0] * x[0] + cs, -cs, //
                    0.0, 1.0, 4.0 * x[2].powi(3) * x[3] * x[3], 2.0 * x[2].powi(4) * x[3], 0.0,
                ],
            )
        },
        |x, l| {
            let sn = (x[3] - x[4]).sin();
            let f = sym(
                5,
                &[
                    (0, 0, 4.0),
                    (0, 1, -2.0),
                    (1, 1, 2.0),
                    (2, 2, 2.0),
                    (3, 3, 12.0 * (x[3] - 1.0).powi(2)),
                    (4, 4, 30.0 * (x[4] - 1.0).powi(4)),
                ],
            );
            let c1 = sym(5, &[(0, 0, 2.0 * x[3]), (0, 3, 2.0 * x[0]), (3, 3, -sn), (3, 4, sn), (4, 4, -sn)]);
            let c2 = sym(
                5,
                &[
                    (2, 2, 12.0 * x[2] * x[2] * x[3] * x[3]),
                    (2, 3, 8.0 * x[2].powi(3) * x[3]),
                    (3, 3, 2.0 * x[2].powi(4)),
                ],
            );
            f - c1 * l[0] - c2 * l[1]
        },
    )
}

fn hs78() -> ProblemDef {
    build(
        "HS78",
        dvector![-2.0, 1.5, 2.0, -1.0, -1.0],
        3,
        |x| x.iter().product(),
        |x| Vector::from_fn(5, |i, _| product_except(x, &[i])),
        |x| {
            dvector![
                x.norm_squared() - 10.0,
                x[1] * x[2] - 5.0 * x[3] * x[4],
                x[0].powi(3) + x[1].powi(3) + 1.0
            ]
        },
        |x| {
            rows(
                3,
                5,
                &[
                    2.0 * x[0], 2.0 * x[1], 2.0 * x[2], 2.0 * x[3], 2.0 * x[4], //
                    0.0, x[2], x[1], -5.0 * x[4], -5.0 * x[3], //
                    3.0 * x[0] * x[0], 3.0 * x[1] * x[1], 0.0, 0.0, 0.0,
                ],
            )
        },
        |x, l| {
            product_hessian(x, 1.0)
                - Matrix::identity(5, 5) * (2.0 * l[0])
                - sym(5, &[(1, 2, l[1]), (3, 4, -5.0 * l[1])])
                - sym(5, &[(0, 0, 6.0 * l[2] * x[0]), (1, 1, 6.0 * l[2] * x[1])])
        },
    )
}

fn recipe() -> ProblemDef {
    build(
        "RECIPE",
        dvector![2.0, 5.0, 1.0],
        3,
        |_| 0.0,
        |_| Vector::zeros(3),
        |x| dvector![x[0] - 5.0, x[1] * x[1] + x[0] - 9.0, x[2] + x[0] * x[1] - 11.0],
        |x| {
            rows(
                3,
                3,
                &[
                    1.0, 0.0, 0.0, //
                    1.0, 2.0 * x[1], 0.0, //
                    x[1], x[0], 1.0,
                ],
            )
        },
        |_, l| sym(3, &[(1, 1, -2.0 * l[1]), (0, 1, -l[2])]),
    )
}

fn zangwil3() -> ProblemDef {
    build(
        "ZANGWIL3",
        dvector![100.0, -1.0, 2.5],
        3,
        |_| 0.0,
        |_| Vector::zeros(3),
        |x| {
            dvector![
                x[0] - x[1] + x[2],
                -x[0] + x[1] + x[2],
                x[0] + x[1] - x[2]
            ]
        },
        |_| {
            rows(
                3,
                3,
                &[
                    1.0, -1.0, 1.0, //
                    -1.0, 1.0, 1.0, //
                    1.0, 1.0, -1.0,
                ],
            )
        },
        |_, _| Matrix::zeros(3, 3),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{check_derivatives, fd_lagrangian_hessian, EvalCounters};

    #[test]
    fn lookup_examples() {
        let booth = get_problem("BOOTH").unwrap();
        assert_eq!((booth.problem.n(), booth.problem.m()), (2, 2));
        let hs40 = get_problem("HS40").unwrap();
        assert_eq!((hs40.problem.n(), hs40.problem.m()), (4, 3));
        let err = get_problem("NOSUCH").unwrap_err();
        assert!(err.to_string().contains("BOOTH"));
        assert_eq!(get_problem("hs06").unwrap().problem.name(), "HS6");
    }

    #[test]
    fn stats_examples() {
        let s = reference_stats("BOOTH").unwrap();
        assert_eq!((s.nit, s.nf, s.nc, s.ng, s.res), (1, 2, 2, 2, 0.0));
        let s = reference_stats("AIRCRFTA").unwrap();
        assert_eq!((s.nit, s.nf, s.nc, s.ng), (2, 3, 3, 3));
        assert!(reference_stats("NOSUCH").is_none());
        assert_eq!(reference_stats("HS6").unwrap().nit, 13);
        assert_eq!(reference_names().count(), 83);
    }

    #[test]
    fn dimensions_match_reference_table() {
        for tp in all_problems() {
            let s = tp.paper_stats.expect("every registered problem is tabulated");
            assert_eq!((tp.problem.n(), tp.problem.m()), (s.n, s.m), "{}", tp.problem.name());
        }
    }

    #[test]
    fn canonical_names() {
        assert_eq!(canonical_name("hs06"), "HS6");
        assert_eq!(canonical_name("HS100LNP"), "HS100LNP");
        assert_eq!(canonical_name("booth"), "BOOTH");
    }

    #[test]
    fn derivatives_at_start() {
        for tp in all_problems() {
            let report = check_derivatives(&tp.problem, tp.problem.x0(), 1e-5).unwrap();
            assert!(report.passed, "{}: {report:?}", tp.problem.name());
        }
    }

    #[test]
    fn hessians_match_finite_differences() {
        for tp in all_problems() {
            let p = &tp.problem;
            let x = p.x0().map(|v| v * 0.9 + 0.1);
            let lambda = Vector::from_fn(p.m(), |i, _| 0.3 + 0.2 * i as f64);
            let mut counters = EvalCounters::default();
            let exact = p.exact_lagrangian_hessian(&x, &lambda, &mut counters).unwrap().unwrap();
            let fd = fd_lagrangian_hessian(p, &x, &lambda, &mut counters).unwrap();
            let err = (&exact - &fd).amax() / fd.amax().max(1.0);
            assert!(err < 1e-5, "{}: {err}", p.name());
            assert!((&exact - exact.transpose()).amax() <= 1e-10 * exact.amax().max(1.0));
        }
    }

    #[test]
    fn known_solutions_are_feasible() {
        for tp in all_problems() {
            if let Some(xs) = &tp.known_solution {
                let mut counters = EvalCounters::default();
                let c = tp.problem.evaluate(xs, crate::problem::Request::C, &mut counters).unwrap().c.unwrap();
                assert!(c.norm() < 1e-12, "{}", tp.problem.name());
            }
        }
    }
}
