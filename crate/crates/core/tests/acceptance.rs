//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wavelab::bounds::{damped_bound_curve, decay_fit, Calibration, DampedBoundOptions, DampedBoundParams, DataNorms, DEFAULT_MARGIN};
use wavelab::damped::{damped_solve, node_coefficients};
use wavelab::energy::{energy_classical, energy_damped, energy_modified, energy_rate_residual, EnergySeries};
use wavelab::inputs::{check_a1, check_damping};
use wavelab::oracle::{convolution_oracle, dense_solve_oracle, ModalExpansion};
use wavelab::viscoelastic::{memory_trapezoid, thomas_solve, visco_solve, KernelTable, Tridiagonal};
use wavelab::{
    EquationKind, Grid1D, InitOrder, ProblemSpec, RelaxationKernel, SolutionField, SpaceFunction,
    TimeFunction,
};

const TAXONOMY_HORIZON: f64 = 100.0;
const FIG_NX: usize = 315;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn fig_grid(horizon: f64) -> Grid1D {
    Grid1D::with_cfl(10.0 * PI, horizon, FIG_NX, 0.5).unwrap()
}

fn solve(spec: &ProblemSpec) -> SolutionField {
    match spec.kind {
        EquationKind::Viscoelastic => visco_solve(spec).unwrap(),
        _ => damped_solve(spec).unwrap(),
    }
}

fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn fmt_list(v: &[f64], prec: usize) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.prec$}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Max-norm error over every node and level against the modal solution.
fn modal_error(spec: &ProblemSpec, damping: f64) -> f64 {
    let field = solve(spec);
    let grid = spec.grid;
    let exact = ModalExpansion::for_grid(&spec.phi, &spec.psi, &grid, 8, damping).unwrap();
    let mut err: f64 = 0.0;
    for n in 0..grid.nt {
        let u = exact.eval_on(&grid, grid.t(n));
        for (i, ui) in u.iter().enumerate() {
            err = err.max((field.get(i, n) - ui).abs());
        }
    }
    err
}

const LEVELS: [usize; 3] = [21, 41, 81];

fn single_mode_grids() -> Vec<Grid1D> {
    LEVELS
        .iter()
        .map(|&nx| Grid1D::with_cfl(PI / 2.0, 2.0, nx, 0.5).unwrap())
        .collect()
}

fn c01() -> Outcome {
    let spec = ProblemSpec::classical(
        fig_grid(50.0),
        SpaceFunction::Sin { freq: 0.2 },
        SpaceFunction::Cos { freq: 0.2 },
    );
    let drift = energy_classical(&solve(&spec)).unwrap().relative_drift();
    outcome(drift <= 1e-2, format!("relative drift {drift:.3e} <= 1e-2"))
}

fn c02() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let a_dt = rng.gen_range(0.0..50.0);
        let r = rng.gen_range(1e-3..1.0);
        let (alpha, beta, zeta) = node_coefficients(a_dt, r);
        worst = worst.max((alpha + beta + alpha - zeta - 1.0).abs());
    }
    outcome(worst <= 1e-12, format!("max |2 alpha + beta - zeta - 1| = {worst:.3e} <= 1e-12"))
}

fn c03() -> Outcome {
    let run = |order| -> Vec<f64> {
        single_mode_grids()
            .into_iter()
            .map(|g| {
                let spec = ProblemSpec::damped(
                    g,
                    SpaceFunction::Sin { freq: 1.0 },
                    SpaceFunction::Constant(0.0),
                    SpaceFunction::Constant(1.0),
                )
                .with_init_order(order);
                modal_error(&spec, 1.0)
            })
            .collect()
    };
    let first = orders(&run(InitOrder::First));
    let second = orders(&run(InitOrder::Second));
    let lo1 = first.iter().cloned().fold(f64::INFINITY, f64::min);
    let lo2 = second.iter().cloned().fold(f64::INFINITY, f64::min);
    outcome(
        lo1 >= 0.9 && lo2 >= 1.8,
        format!(
            "orders first-order init {} >= 0.9, second-order init {} >= 1.8",
            fmt_list(&first, 3),
            fmt_list(&second, 3)
        ),
    )
}

fn c04() -> Outcome {
    let errs: Vec<f64> = single_mode_grids()
        .into_iter()
        .map(|g| {
            let spec = ProblemSpec::viscoelastic(
                g,
                SpaceFunction::Sin { freq: 1.0 },
                SpaceFunction::Constant(0.0),
                RelaxationKernel::Zero,
            )
            .with_init_order(InitOrder::Second);
            modal_error(&spec, 0.0)
        })
        .collect();
    let ord = orders(&errs);
    let lo = ord.iter().cloned().fold(f64::INFINITY, f64::min);
    outcome(lo >= 1.8, format!("orders {} >= 1.8", fmt_list(&ord, 3)))
}

fn c05() -> Outcome {
    let g = RelaxationKernel::ExpShift;
    let exact = (-1.0f64).exp() * (1.0 - (-1.0f64).exp());
    let oracle = convolution_oracle(&g, &TimeFunction::Constant(1.0), 1.0, 1e-5);
    let errs: Vec<f64> = [11, 21, 41, 81]
        .iter()
        .map(|&nt| {
            let grid = Grid1D::new(1.0, 1.0, 4, nt).unwrap();
            let table = KernelTable::new(&g, &grid);
            let ones = vec![1.0; nt];
            (memory_trapezoid(&table, &ones, nt - 1) - exact).abs()
        })
        .collect();
    let ord = orders(&errs);
    let lo = ord.iter().cloned().fold(f64::INFINITY, f64::min);
    let oracle_ok = (oracle - exact).abs() < 1e-9 && (exact - 0.232544).abs() < 1e-6;
    outcome(
        lo >= 1.9 && oracle_ok,
        format!("slopes {} >= 1.9, oracle {oracle:.7} vs {exact:.7}", fmt_list(&ord, 3)),
    )
}

fn c06() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let m = rng.gen_range(1..=200);
        let sub: Vec<f64> = (1..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sup: Vec<f64> = (1..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let diag: Vec<f64> = (0..m)
            .map(|_| {
                let s: f64 = rng.gen_range(2.1..4.0);
                if rng.gen_bool(0.5) { s } else { -s }
            })
            .collect();
        let a = Tridiagonal::new(sub, diag, sup).unwrap();
        let rhs: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = thomas_solve(&a, &rhs).unwrap();
        let y = dense_solve_oracle(&a.to_dense(), &rhs).unwrap();
        for (p, q) in x.iter().zip(&y) {
            worst = worst.max((p - q).abs());
        }
    }
    outcome(worst <= 1e-12, format!("max |thomas - dense| = {worst:.3e} <= 1e-12"))
}

fn c07() -> Outcome {
    let blowup = |r: f64| -> Option<usize> {
        let nx = 315;
        let dx = 10.0 * PI / (nx - 1) as f64;
        let grid = Grid1D::new(10.0 * PI, 2000.0 * r * dx, nx, 2001).unwrap();
        let spec = ProblemSpec::classical(grid, SpaceFunction::Sin { freq: 0.05 }, SpaceFunction::Constant(0.0))
            .with_cfl_override(true);
        let field = damped_solve(&spec).unwrap();
        let done = field.completed_levels();
        (0..grid.nt).find(|&n| n >= done || field.column(n).iter().any(|v| !(v.abs() <= 1e6)))
    };
    let unstable = blowup(1.05);
    let stable = blowup(1.0);
    outcome(
        unstable.is_some() && stable.is_none(),
        format!("r = 1.05 exceeds 1e6 at step {unstable:?}, r = 1.0 exceeds at {stable:?}"),
    )
}

/// Mid window `[T/2, 3T/4]` and final window `[3T/4, T]`.
fn windows(t: f64) -> ((f64, f64), (f64, f64)) {
    ((0.5 * t, 0.75 * t), (0.75 * t, t))
}

fn taxonomy(series: &EnergySeries, family: &str, t: f64) -> (bool, String) {
    let ((m0, m1), (f0, f1)) = windows(t);
    match family {
        "exp" => match decay_fit(series, 0.5 * t, t) {
            Ok(fit) => (
                fit.lambda > 0.0 && fit.r_squared >= 0.8,
                format!("lambda {:.4e}, r2 {:.3}", fit.lambda, fit.r_squared),
            ),
            Err(e) => (false, e.to_string()),
        },
        "sqrt" => (
            series.last() > series.initial(),
            format!("e(T) {:.4e} vs e(0) {:.4e}", series.last(), series.initial()),
        ),
        "sat" => {
            let ratio = series.window_mean(f0, f1).unwrap() / series.window_mean(m0, m1).unwrap();
            ((ratio - 1.0).abs() <= 0.5, format!("final/mid mean {ratio:.3}"))
        }
        _ => {
            let rel = series.window_amplitude(f0, f1).unwrap() / series.window_mean(f0, f1).unwrap();
            (rel > 0.1, format!("amplitude/mean {rel:.3}"))
        }
    }
}

fn h_families() -> Vec<(&'static str, TimeFunction)> {
    vec![
        ("exp", TimeFunction::ExpDecay { rate: 1.0 }),
        ("sin", TimeFunction::Sine { omega: 0.2 }),
        ("sat", TimeFunction::Saturating { scale: 5.0 }),
        ("sqrt", TimeFunction::Sqrt),
    ]
}

fn c08() -> Outcome {
    let t = TAXONOMY_HORIZON;
    let mut failures = Vec::new();
    let mut total = 0;
    let dampings = [
        ("e^-x", SpaceFunction::Exp { rate: 1.0 }),
        ("sin^2 x", SpaceFunction::SinSquared),
        ("(x+1)^2", SpaceFunction::ShiftedSquare),
    ];
    for (an, a) in &dampings {
        for (hn, h) in h_families() {
            let spec = ProblemSpec::damped(fig_grid(t), SpaceFunction::Cos { freq: 0.2 }, SpaceFunction::Constant(0.0), a.clone())
                .with_neumann(h);
            let s = energy_damped(&solve(&spec)).unwrap();
            let (ok, why) = taxonomy(&s, hn, t);
            total += 1;
            if !ok {
                failures.push(format!("damped a={an} h={hn}: {why}"));
            }
        }
    }
    let kernels = [
        ("e^-(t+1)", RelaxationKernel::ExpShift),
        ("(t+1)^-10", RelaxationKernel::Power { p: 10.0 }),
        ("log", RelaxationKernel::LogType),
    ];
    for (gn, g) in &kernels {
        for (hn, h) in h_families() {
            let spec = ProblemSpec::viscoelastic(fig_grid(t), SpaceFunction::Sin { freq: 0.2 }, SpaceFunction::Cos { freq: 0.2 }, g.clone())
                .with_neumann(h);
            let s = energy_modified(&solve(&spec), g).unwrap();
            let (ok, why) = taxonomy(&s, hn, t);
            total += 1;
            if !ok {
                failures.push(format!("visco g={gn} h={hn}: {why}"));
            }
        }
    }
    let mut detail = format!("{}/{total} configurations match", total - failures.len());
    for f in &failures {
        detail.push_str(&format!("\n        failed: {f}"));
    }
    outcome(failures.is_empty(), detail)
}

fn c09() -> Outcome {
    let grid = fig_grid(TAXONOMY_HORIZON);
    let a = SpaceFunction::Exp { rate: 1.0 };
    let h = TimeFunction::ExpDecay { rate: 1.0 };
    let spec = ProblemSpec::damped(grid, SpaceFunction::Cos { freq: 0.2 }, SpaceFunction::Constant(0.0), a.clone())
        .with_neumann(h.clone());
    let series = energy_damped(&solve(&spec)).unwrap();
    let rep = check_damping(&a, &grid);
    let params = DampedBoundParams::new(rep.a_min, rep.a_max, grid.length, DampedBoundOptions::default()).unwrap();
    let cal = Calibration::Initial { energy: series.initial(), margin: DEFAULT_MARGIN };
    let curve = damped_bound_curve(&params, &h, &DataNorms::from_spec(&spec), &series.times, 1e-3, Some(cal)).unwrap();
    let ok = curve.dominates(&series).unwrap();
    let slack = curve
        .envelope
        .iter()
        .zip(&series.values)
        .map(|(b, e)| b - e)
        .fold(f64::INFINITY, f64::min);
    outcome(ok, format!("min(envelope - energy) = {slack:.4e} over {} samples", series.len()))
}

fn c10() -> Outcome {
    let res: Vec<f64> = [315, 629]
        .iter()
        .map(|&nx| {
            let grid = Grid1D::with_cfl(10.0 * PI, 20.0, nx, 0.5).unwrap();
            let spec = ProblemSpec::damped(grid, SpaceFunction::Sin { freq: 0.05 }, SpaceFunction::Constant(0.0), SpaceFunction::Exp { rate: 1.0 });
            let field = solve(&spec);
            let s = energy_damped(&field).unwrap();
            energy_rate_residual(&field, &s, &spec)
                .unwrap()
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()))
        })
        .collect();
    let ord = (res[0] / res[1]).log2();
    outcome(ord >= 0.9, format!("residual max-norms {:.3e}, {:.3e} order {ord:.3} >= 0.9", res[0], res[1]))
}

fn c11() -> Outcome {
    let e = check_a1(&RelaxationKernel::ExpShift, 50.0, 1e-3).unwrap();
    let p = check_a1(&RelaxationKernel::Power { p: 10.0 }, 50.0, 1e-3).unwrap();
    let d = check_damping(&SpaceFunction::SinSquared, &fig_grid(10.0));
    let de = (e.integral_estimate - (-1.0f64).exp()).abs();
    let dp = (p.integral_estimate - 1.0 / 9.0).abs();
    outcome(
        de <= 1e-4 && dp <= 1e-4 && !d.positive,
        format!("A1 errors {de:.2e}, {dp:.2e} <= 1e-4; sin^2 x flagged: {}", !d.positive),
    )
}

fn c12() -> Outcome {
    let t = TAXONOMY_HORIZON;
    let phi = SpaceFunction::Abs;
    let psi = SpaceFunction::Step { at: 5.0 * PI, left: 1.0, right: 0.0 };
    let damped = ProblemSpec::damped(fig_grid(t), phi.clone(), psi.clone(), SpaceFunction::Exp { rate: 1.0 })
        .with_neumann(TimeFunction::ExpDecay { rate: 1.0 });
    let visco = ProblemSpec::viscoelastic(fig_grid(t), phi, psi, RelaxationKernel::ExpShift)
        .with_neumann(TimeFunction::Sine { omega: 0.2 });
    let fd = solve(&damped);
    let fv = solve(&visco);
    let fit = decay_fit(&energy_damped(&fd).unwrap(), 0.5 * t, t).unwrap();
    let ok = !fd.is_diverged() && !fv.is_diverged() && fit.lambda > 0.0;
    outcome(
        ok,
        format!(
            "diverged damped {} visco {}; damped lambda {:.4e}",
            fd.is_diverged(),
            fv.is_diverged(),
            fit.lambda
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, u64); 12] = [
        ("conservation", c01, 5),
        ("coefficient identity", c02, 1),
        ("damped oracle order", c03, 30),
        ("CN classical order", c04, 60),
        ("memory quadrature order", c05, 5),
        ("tridiagonal solve", c06, 2),
        ("CFL witness", c07, 5),
        ("decay taxonomy", c08, 600),
        ("envelope domination", c09, 10),
        ("energy-rate residual", c10, 30),
        ("assumption checkers", c11, 2),
        ("rough data", c12, 60),
    ];
    let mut failed = 0;
    for (k, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let in_time = took < Duration::from_secs(*limit);
        let pass = out.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "[{}] {:>2} {:<24} {} ({:.2} s, limit {} s)",
            if pass { "PASS" } else { "FAIL" },
            k + 1,
            name,
            out.detail,
            took.as_secs_f64(),
            limit
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
