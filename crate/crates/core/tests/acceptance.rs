//! End-to-end acceptance checks. Each test prints one PASS/FAIL line.
//!
//! Run with `cargo test --test acceptance -- --nocapture --test-threads 1`
//! to see the lines in order.

use std::f64::consts::PI;
use std::time::Instant;

use dn_crosspoint::discretization::{oracle_solve, DirichletMode};
use dn_crosspoint::dn::{
    demonstrate_standard_odd_failure, diagnose, run_dn, ConvergenceEstimate, DnOptions, DnReport,
    FailureSignature, Method, ParityMode,
};
use dn_crosspoint::field::{
    assemble_global, broken_max_abs, recombine, split_even_odd, symmetry_residual, Field, LocalField, Parity,
};
use dn_crosspoint::grid::{Grid, Side};
use dn_crosspoint::problem::{example_catalog, ProblemSpec};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DIRECT_TOL: f64 = 1e-10;
const PENALTY_FLOOR: f64 = 1e-6;
const PENALTY_EPS: f64 = 1e-12;
const RHO_TOL: f64 = 1e-4;
const RECURRENCE_TOL: f64 = 1e-8;
const RECURRENCE_ITERS: usize = 12;
const MESH_TOL: f64 = 1e-6;
const SYMMETRY_TOL: f64 = 1e-10;
const ORACLE_TOL: f64 = 1e-10;
const SLOPE_TOL: f64 = 0.1;
const RUNTIME_2D_S: f64 = 30.0;
const RUNTIME_3D_S: f64 = 600.0;
const N_2D: usize = 100;
const N_3D: usize = 34;

fn verdict(id: u32, ok: bool, what: &str) {
    println!("[{id:>2}] {} {what}", if ok { "PASS" } else { "FAIL" });
}

fn grid_for(example: u8, n: usize) -> Grid {
    Grid::new(if example <= 2 { 2 } else { 3 }, n).unwrap()
}

/// Parity of each reference example's data.
fn parity_of(example: u8) -> ParityMode {
    match example {
        1 | 3 => ParityMode::Even,
        _ => ParityMode::Odd,
    }
}

fn run(example: u8, n: usize, theta: f64, mode: DirichletMode, iters: usize, keep: bool) -> (DnReport, f64) {
    let grid = grid_for(example, n);
    let spec = example_catalog(example, grid).unwrap();
    let opts = DnOptions {
        theta,
        max_iter: iters,
        tol: 0.0,
        dirichlet: mode,
        record_iterates: keep,
        ..DnOptions::default()
    };
    let start = Instant::now();
    let r = run_dn(&spec, Method::New, parity_of(example), &Field::zeros(grid), &opts).unwrap();
    (r, start.elapsed().as_secs_f64())
}

/// `max_k ||e^k - (1-2θ)^{k-1} e^1||_∞ / ||e^1||_∞`.
fn recurrence_defect(r: &DnReport) -> f64 {
    let e1 = r.error_at(1).unwrap();
    let scale = broken_max_abs(&e1);
    let c = 1.0 - 2.0 * r.theta;
    (2..=r.iterates.len())
        .map(|k| {
            let ek = r.error_at(k).unwrap();
            let pred: Vec<LocalField> = e1.iter().map(|f| f.scaled(c.powi(k as i32 - 1))).collect();
            (0..4).map(|i| ek[i].sub(&pred[i]).unwrap().max_abs()).fold(0.0, f64::max) / scale
        })
        .fold(0.0, f64::max)
}

fn rho_error(r: &DnReport) -> f64 {
    match r.estimate {
        ConvergenceEstimate::Factor(rho) => (rho - (1.0 - 2.0 * r.theta).abs()).abs(),
        _ => f64::INFINITY,
    }
}

#[test]
fn direct_solver_at_half_relaxation() {
    let mut ok = true;
    for ex in [1u8, 2] {
        let (r, secs) = run(ex, N_2D, 0.5, DirichletMode::Strong, 2, false);
        let e2 = r.records[1].l2_rel;
        let (p, _) = run(ex, N_2D, 0.5, DirichletMode::Penalty(PENALTY_EPS), 2, false);
        let floor = p.records[1].l2_rel;
        println!("  example {ex}: strong e2 = {e2:e} ({secs:.2} s), penalty e2 = {floor:e}");
        ok &= e2 <= DIRECT_TOL && secs < RUNTIME_2D_S && floor <= PENALTY_FLOOR;
    }
    verdict(1, ok, "theta = 1/2 solves examples 1-2 in two iterations");
    assert!(ok);
}

#[test]
fn convergence_factor_and_recurrence_2d() {
    let mut rho_ok = true;
    let mut rec_ok = true;
    for ex in [1u8, 2] {
        for theta in [0.45, 0.49] {
            let (r, _) = run(ex, N_2D, theta, DirichletMode::Strong, RECURRENCE_ITERS, true);
            let d = recurrence_defect(&r);
            println!("  example {ex}, theta {theta}: rho = {}, |rho - |1-2theta|| = {:e}, recurrence defect {d:e}", r.estimate, rho_error(&r));
            rho_ok &= rho_error(&r) <= RHO_TOL;
            rec_ok &= d <= RECURRENCE_TOL;
        }
    }
    verdict(2, rho_ok, "estimated factor equals |1 - 2 theta| in 2D");
    verdict(3, rec_ok, "errors follow e^k = (1 - 2 theta)^(k-1) e^1 in 2D");
    assert!(rho_ok && rec_ok);
}

#[test]
fn mesh_independence() {
    let (a, _) = run(1, 100, 0.45, DirichletMode::Strong, RECURRENCE_ITERS, false);
    let (b, _) = run(1, 200, 0.45, DirichletMode::Strong, RECURRENCE_ITERS, false);
    let (ra, rb) = (a.estimate.factor(), b.estimate.factor());
    let ok = matches!((ra, rb), (Some(x), Some(y)) if (x - y).abs() <= MESH_TOL);
    println!("  rho(N=100) = {}, rho(N=200) = {}", a.estimate, b.estimate);
    verdict(4, ok, "factor independent of the mesh size");
    assert!(ok);
}

#[test]
fn three_dimensional_examples() {
    let mut ok = true;
    for ex in [3u8, 4] {
        let (r, secs) = run(ex, N_3D, 0.5, DirichletMode::Strong, 2, false);
        let (p, _) = run(ex, N_3D, 0.5, DirichletMode::Penalty(PENALTY_EPS), 2, false);
        let e2 = r.records[1].l2_rel;
        let floor = p.records[1].l2_rel;
        println!("  example {ex}, theta 0.5: strong e2 = {e2:e} ({secs:.1} s), penalty e2 = {floor:e}");
        ok &= e2 <= DIRECT_TOL && floor <= PENALTY_FLOOR && secs < RUNTIME_3D_S;
        for theta in [0.45, 0.49] {
            let (r, secs) = run(ex, N_3D, theta, DirichletMode::Strong, RECURRENCE_ITERS, true);
            let d = recurrence_defect(&r);
            println!(
                "  example {ex}, theta {theta}: rho = {}, |rho - |1-2theta|| = {:e}, recurrence defect {d:e} ({secs:.1} s)",
                r.estimate,
                rho_error(&r)
            );
            ok &= rho_error(&r) <= RHO_TOL && d <= RECURRENCE_TOL && secs < RUNTIME_3D_S;
        }
    }
    verdict(5, ok, "3D examples: direct solve, factor and recurrence");
    assert!(ok);
}

#[test]
fn error_symmetries() {
    let mut worst_odd = 0.0f64;
    let mut worst_even = 0.0f64;
    let mut crosspoint = 0.0f64;
    let (odd, _) = run(2, N_2D, 0.45, DirichletMode::Strong, RECURRENCE_ITERS, true);
    let scale = broken_max_abs(&odd.error_at(1).unwrap());
    for k in 1..=odd.iterates.len() {
        let e = odd.error_at(k).unwrap();
        let layout = e[0].layout();
        for l in 0..layout.len() {
            let v1 = e[0].values()[l];
            // same local index: Ω2 mirrors x, Ω3 both, Ω4 y
            worst_odd = worst_odd
                .max((e[1].values()[l] - v1).abs())
                .max((e[2].values()[l] + v1).abs())
                .max((e[3].values()[l] + v1).abs());
        }
        crosspoint = crosspoint.max(e[0].values()[0].abs());
    }
    let (even, _) = run(1, N_2D, 0.45, DirichletMode::Strong, RECURRENCE_ITERS, true);
    let escale = broken_max_abs(&even.error_at(1).unwrap());
    for k in 1..=even.iterates.len() {
        let e = even.error_at(k).unwrap();
        for l in 0..e[0].values().len() {
            let v1 = e[0].values()[l];
            worst_even = worst_even
                .max((e[1].values()[l] + v1).abs())
                .max((e[2].values()[l] - v1).abs())
                .max((e[3].values()[l] + v1).abs());
        }
    }
    let (wo, we, cp) = (worst_odd / scale, worst_even / escale, crosspoint / scale);
    println!("  odd defect {wo:e}, cross-point {cp:e}, even defect {we:e}");
    let ok = wo <= SYMMETRY_TOL && cp <= SYMMETRY_TOL && we <= SYMMETRY_TOL;
    verdict(6, ok, "nodewise error symmetries at every iteration");
    assert!(ok);
}

fn ulp_at(x: f64) -> f64 {
    if x == 0.0 {
        f64::MIN_POSITIVE
    } else {
        let b = x.abs();
        f64::from_bits(b.to_bits() + 1) - b
    }
}

#[test]
fn even_odd_algebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut ok = true;
    let mut worst_ulp = 0.0f64;
    let mut worst_res = 0.0f64;
    for case in 0..1000 {
        let grid = if case % 4 == 3 {
            Grid::new(3, 2 * rng.random_range(2..5usize)).unwrap()
        } else {
            Grid::new(2, 2 * rng.random_range(2..13usize)).unwrap()
        };
        let scale = 10f64.powf(rng.random_range(-3.0..3.0));
        let values: Vec<f64> = (0..grid.node_count()).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
        let f = Field::from_values(grid, values).unwrap();
        let pair = split_even_odd(&f);
        let back = recombine(&pair).unwrap();
        for n in grid.nodes() {
            let r = grid.reflect_xy(n).unwrap();
            let mag = f.at(n).abs().max(f.at(r).abs());
            let ulps = (back.at(n) - f.at(n)).abs() / ulp_at(mag);
            worst_ulp = worst_ulp.max(ulps);
        }
        let res = symmetry_residual(&pair.even, Parity::Even).max(symmetry_residual(&pair.odd, Parity::Odd));
        worst_res = worst_res.max(res / f.max_abs());
    }
    ok &= worst_ulp <= 2.0 && worst_res <= 1e-14;
    println!("  worst recombination {worst_ulp} ulp, worst parity residual {worst_res:e}");
    verdict(7, ok, "split/recombine identity and parity residuals on 1000 fields");
    assert!(ok);
}

#[test]
fn full_parity_matches_oracle() {
    let grid = Grid::new(2, N_2D).unwrap();
    let spec = ProblemSpec::builder(grid)
        .source(|p| 1.0 + (PI * p[0]).sin() * (PI * p[1] / 2.0).cos())
        .dirichlet(Side::Left, |_| 0.0)
        .dirichlet(Side::Right, |_| 0.0)
        .neumann(Side::Bottom, |_| 0.0)
        .neumann(Side::Top, |_| 0.0)
        .build()
        .unwrap();
    let opts = DnOptions {
        theta: 0.5,
        max_iter: 2,
        tol: 0.0,
        ..DnOptions::default()
    };
    let r = run_dn(&spec, Method::New, ParityMode::Full, &Field::zeros(grid), &opts).unwrap();
    let oracle = oracle_solve(&spec, DirichletMode::Strong).unwrap();
    let u = assemble_global(&r.final_fields);
    let rel = u.sub(&oracle).unwrap().max_abs() / oracle.max_abs();
    println!("  nodewise relative deviation {rel:e}");
    let ok = rel <= ORACLE_TOL;
    verdict(8, ok, "full-parity run recombined after two iterations equals the monodomain solution");
    assert!(ok);
}

#[test]
fn discretization_order() {
    let err = |n: usize| {
        let grid = Grid::new(2, n).unwrap();
        let u = |p: [f64; 3]| (PI * p[0]).sin() * (PI * p[1]).sin() + (p[0] + 0.5 * p[1]).exp();
        let spec = ProblemSpec::builder(grid)
            .source(|p| 2.0 * PI * PI * (PI * p[0]).sin() * (PI * p[1]).sin() - 1.25 * (p[0] + 0.5 * p[1]).exp())
            .dirichlet_everywhere(u)
            .build()
            .unwrap();
        let s = oracle_solve(&spec, DirichletMode::Strong).unwrap();
        grid.nodes().map(|m| (s.at(m) - u(grid.point(m))).abs()).fold(0.0, f64::max)
    };
    let ns = [16usize, 32, 64];
    let es: Vec<f64> = ns.iter().map(|&n| err(n)).collect();
    // least-squares slope of log e against log h
    let xs: Vec<f64> = ns.iter().map(|&n| (2.0 / n as f64).ln()).collect();
    let ys: Vec<f64> = es.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / 3.0;
    let my = ys.iter().sum::<f64>() / 3.0;
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>();
    println!("  errors {es:?}, slope {slope:.4}");
    let ok = (slope - 2.0).abs() <= SLOPE_TOL;
    verdict(9, ok, "manufactured solution converges at second order");
    assert!(ok);
}

#[test]
fn standard_method_fails_on_odd_part() {
    let grid = Grid::new(2, N_2D).unwrap();
    let ex2 = example_catalog(2, grid).unwrap();
    let d = demonstrate_standard_odd_failure(&ex2, 0.5, &Field::zeros(grid), 10).unwrap();
    let failure = matches!(d.signature, FailureSignature::Singular(_) | FailureSignature::NonContractive { .. });
    match &d.signature {
        FailureSignature::NonContractive { ratios } => println!("  odd part: non-contractive, ratios {ratios:?}"),
        other => println!("  odd part: {other:?}"),
    }
    if let Some(r) = &d.report {
        println!("  odd part relative errors {:?}", r.records.iter().map(|x| x.l2_rel).collect::<Vec<_>>());
    }
    let ex1 = example_catalog(1, grid).unwrap();
    let c = diagnose(&ex1, ParityMode::Even, 0.45, &Field::zeros(grid), RECURRENCE_ITERS).unwrap();
    let control = c.signature == FailureSignature::None && c.report.as_ref().is_some_and(|r| rho_error(r) <= RHO_TOL);
    println!("  even control: {:?}, rho = {}", c.signature, c.report.as_ref().map_or("-".into(), |r| r.estimate.to_string()));
    let ok = failure && control;
    verdict(10, ok, "standard method breaks down on the odd part, even control contracts");
    assert!(ok);
}
