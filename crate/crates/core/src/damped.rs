//! Explicit three-level scheme for `u_tt - u_xx + a(x) u_t = 0` with a
//! Dirichlet datum at `x = 0` and a Neumann datum at `x = L`.
//!
//! The velocity in the damping term is a forward difference, so the update
//! is explicit in `U^{n+1}`. The Neumann end is closed with the one-sided
//! second-order stencil `(3U_{N} - 4U_{N-1} + U_{N-2}) / (2 dx) = h`.

use crate::error::{Result, WaveError};
use crate::functions::sample_space_function;
use crate::grid::Grid1D;
use crate::problem::{EquationKind, InitOrder, ProblemSpec, SolutionField};

/// Per-node coefficients of the explicit update, interior nodes only.
///
/// Entry `k` belongs to node `i = k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DampedCoefficients {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub zeta: Vec<f64>,
}

impl DampedCoefficients {
    /// Coefficients of node `i` (`1 <= i <= nx - 2`).
    #[inline]
    pub fn at(&self, i: usize) -> (f64, f64, f64) {
        (self.alpha[i - 1], self.beta[i - 1], self.zeta[i - 1])
    }
}

/// Coefficients for one node from `a_i dt` and `r`.
#[inline]
pub fn node_coefficients(a_dt: f64, r: f64) -> (f64, f64, f64) {
    let denom = 1.0 + a_dt;
    let r2 = r * r;
    (r2 / denom, (2.0 - 2.0 * r2 + a_dt) / denom, 1.0 / denom)
}

pub fn damped_coefficients(a_samples: &[f64], grid: &Grid1D) -> Result<DampedCoefficients> {
    if a_samples.len() != grid.nx {
        return Err(WaveError::DimensionMismatch(format!(
            "damping samples have length {}, grid has {} nodes",
            a_samples.len(),
            grid.nx
        )));
    }
    let m = grid.interior();
    let mut c = DampedCoefficients {
        alpha: Vec::with_capacity(m),
        beta: Vec::with_capacity(m),
        zeta: Vec::with_capacity(m),
    };
    for &a in &a_samples[1..grid.nx - 1] {
        let (al, be, ze) = node_coefficients(a * grid.dt, grid.r);
        c.alpha.push(al);
        c.beta.push(be);
        c.zeta.push(ze);
    }
    Ok(c)
}

/// Value at the Neumann node from the two nodes before it.
#[inline]
pub fn neumann_ghost(u_prev2: f64, u_prev1: f64, h_val: f64, dx: f64) -> f64 {
    (2.0 * dx * h_val - u_prev2 + 4.0 * u_prev1) / 3.0
}

/// Second derivative of nodal samples: centered in the interior and
/// second-order one-sided at both ends.
pub fn second_difference(u: &[f64], dx: f64) -> Vec<f64> {
    let n = u.len();
    let s = dx * dx;
    let mut out = vec![0.0; n];
    for i in 1..n - 1 {
        out[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / s;
    }
    if n >= 4 {
        out[0] = (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) / s;
        out[n - 1] = (2.0 * u[n - 1] - 5.0 * u[n - 2] + 4.0 * u[n - 3] - u[n - 4]) / s;
    } else {
        out[0] = out[1];
        out[n - 1] = out[n - 2];
    }
    out
}

/// First two time levels from the initial data.
///
/// Only the raw samples are returned; the solvers overwrite the boundary
/// nodes with the Dirichlet and Neumann data afterwards.
pub fn damped_init(
    phi: &[f64],
    psi: &[f64],
    grid: &Grid1D,
    order: InitOrder,
    a_samples: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let nx = grid.nx;
    if phi.len() != nx || psi.len() != nx || a_samples.len() != nx {
        return Err(WaveError::DimensionMismatch(format!(
            "initial data must have {nx} samples"
        )));
    }
    let dt = grid.dt;
    let u0 = phi.to_vec();
    let u1 = match order {
        InitOrder::First => (0..nx).map(|i| phi[i] + dt * psi[i]).collect(),
        InitOrder::Second => {
            let phi_xx = second_difference(phi, grid.dx);
            (0..nx)
                .map(|i| {
                    phi[i] + dt * psi[i] + 0.5 * dt * dt * (phi_xx[i] - a_samples[i] * psi[i])
                })
                .collect()
        }
    };
    Ok((u0, u1))
}

/// One explicit step on the interior.
///
/// `u_n` and `u_prev` are full columns; their boundary entries are not read.
/// The Dirichlet value `f_n` enters node 1 and the Neumann value `h_n` is
/// folded into node `nx - 2`. Writes `out[k]` for node `k + 1`.
pub fn damped_step_into(
    u_n: &[f64],
    u_prev: &[f64],
    coeffs: &DampedCoefficients,
    f_n: f64,
    h_n: f64,
    grid: &Grid1D,
    out: &mut [f64],
) {
    let nx = grid.nx;
    let last = nx - 2;
    for i in 1..last {
        let (al, be, ze) = coeffs.at(i);
        let left = if i == 1 { f_n } else { u_n[i - 1] };
        out[i - 1] = al * u_n[i + 1] + be * u_n[i] + al * left - ze * u_prev[i];
    }
    let (al, be, ze) = coeffs.at(last);
    let left = if last == 1 { f_n } else { u_n[last - 1] };
    out[last - 1] = (be + 4.0 * al / 3.0) * u_n[last] + (2.0 * al / 3.0) * left
        + (2.0 * al / 3.0) * grid.dx * h_n
        - ze * u_prev[last];
}

/// Allocating wrapper around [`damped_step_into`]; returns the `nx - 2`
/// interior values.
pub fn damped_step(
    u_n: &[f64],
    u_prev: &[f64],
    coeffs: &DampedCoefficients,
    f_n: f64,
    h_n: f64,
    grid: &Grid1D,
) -> Vec<f64> {
    let mut out = vec![0.0; grid.interior()];
    damped_step_into(u_n, u_prev, coeffs, f_n, h_n, grid, &mut out);
    out
}

fn close_column(col: &mut [f64], f_val: f64, h_val: f64, dx: f64) {
    let nx = col.len();
    col[0] = f_val;
    col[nx - 1] = neumann_ghost(col[nx - 3], col[nx - 2], h_val, dx);
}

/// Runs the explicit scheme over the whole grid.
///
/// Classical problems use `a = 0`. A step that produces a non-finite value
/// stops the run and flags the field as diverged from that level on.
pub fn damped_solve(spec: &ProblemSpec) -> Result<SolutionField> {
    spec.validate()?;
    let grid = spec.grid;
    let a_samples = match spec.kind {
        EquationKind::Classical => vec![0.0; grid.nx],
        EquationKind::Damped => sample_space_function(spec.damping.as_ref().unwrap(), &grid),
        EquationKind::Viscoelastic => {
            return Err(WaveError::InvalidProblem(
                "the explicit solver handles classical and damped problems only".into(),
            ))
        }
    };
    if grid.r > 1.0 && !spec.options.allow_cfl_violation {
        return Err(WaveError::CflViolation { r: grid.r });
    }
    let coeffs = damped_coefficients(&a_samples, &grid)?;
    let phi = sample_space_function(&spec.phi, &grid);
    let psi = sample_space_function(&spec.psi, &grid);
    let (u0, u1) = damped_init(&phi, &psi, &grid, spec.options.init_order, &a_samples)?;

    let mut field = SolutionField::zeros(grid);
    let dx = grid.dx;
    let f = &spec.dirichlet;
    let h = &spec.neumann;
    field.column_mut(0).copy_from_slice(&u0);
    close_column(field.column_mut(0), f.eval(0.0), h.eval(0.0), dx);
    field.column_mut(1).copy_from_slice(&u1);
    close_column(field.column_mut(1), f.eval(grid.t(1)), h.eval(grid.t(1)), dx);

    let nx = grid.nx;
    let mut next = vec![0.0; grid.interior()];
    for n in 1..grid.nt - 1 {
        {
            let u_prev = field.column(n - 1);
            let u_n = field.column(n);
            damped_step_into(u_n, u_prev, &coeffs, f.eval(grid.t(n)), h.eval(grid.t(n)), &grid, &mut next);
        }
        let t1 = grid.t(n + 1);
        let col = field.column_mut(n + 1);
        col[1..nx - 1].copy_from_slice(&next);
        close_column(col, f.eval(t1), h.eval(t1), dx);
        if col.iter().any(|v| !v.is_finite()) {
            field.mark_diverged(n + 1);
            break;
        }
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{SpaceFunction, TimeFunction};
    use crate::oracle::dense_matvec;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn coefficient_examples() {
        let (a, b, z) = node_coefficients(0.0, 1.0);
        assert_eq!((a, b, z), (1.0, 0.0, 1.0));
        let (a, b, z) = node_coefficients(1.0, 0.5);
        assert!((a - 0.125).abs() < 1e-15 && (b - 1.25).abs() < 1e-15 && (z - 0.5).abs() < 1e-15);
        let (a, b, z) = node_coefficients(1.0, 1.0);
        assert!((a - 0.5).abs() < 1e-15 && (b - 0.5).abs() < 1e-15 && (z - 0.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn coefficients_preserve_constants(a_dt in 0.0f64..50.0, r in 0.01f64..1.5) {
            let (al, be, ze) = node_coefficients(a_dt, r);
            prop_assert!((2.0 * al + be - ze - 1.0).abs() <= 1e-12);
            prop_assert!(ze > 0.0 && ze <= 1.0);
            prop_assert!((al * (1.0 + a_dt) - r * r).abs() <= 4.0 * f64::EPSILON * r * r);
        }

        #[test]
        fn folded_row_matches_ghost_then_stencil(
            seed in any::<u64>(), h in -5.0f64..5.0, a in 0.0f64..3.0
        ) {
            let grid = Grid1D::new(1.0, 0.5, 12, 11).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u_n: Vec<f64> = (0..grid.nx).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let u_p: Vec<f64> = (0..grid.nx).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let coeffs = damped_coefficients(&vec![a; grid.nx], &grid).unwrap();
            let out = damped_step(&u_n, &u_p, &coeffs, u_n[0], h, &grid);
            let ghost = neumann_ghost(u_n[9], u_n[10], h, grid.dx);
            let (al, be, ze) = coeffs.at(10);
            let unfolded = al * ghost + be * u_n[10] + al * u_n[9] - ze * u_p[10];
            prop_assert!((out[9] - unfolded).abs() <= 1e-13);
        }
    }

    #[test]
    fn ghost_examples() {
        assert_eq!(neumann_ghost(1.0, 1.0, 0.0, 0.3), 1.0);
        assert!((neumann_ghost(0.0, 0.0, 3.0, 0.1) - 0.2).abs() < 1e-15);
        let (l, dx) = (2.0, 0.25);
        assert!((neumann_ghost(l - 2.0 * dx, l - dx, 1.0, dx) - l).abs() < 1e-15);
        // exact for quadratics: u = x^2, u'(L) = 2L
        let v = neumann_ghost((l - 2.0 * dx).powi(2), (l - dx).powi(2), 2.0 * l, dx);
        assert!((v - l * l).abs() < 1e-13);
    }

    #[test]
    fn init_examples() {
        let grid = Grid1D::new(1.0, 1.0, 11, 11).unwrap();
        let zero = vec![0.0; 11];
        let phi: Vec<f64> = grid.xs().iter().map(|x| x * x).collect();
        for order in [InitOrder::First, InitOrder::Second] {
            let (u0, u1) = damped_init(&phi, &zero, &grid, order, &zero).unwrap();
            if order == InitOrder::First {
                assert_eq!(u0, u1);
            }
        }
        let (_, u1) = damped_init(&zero, &vec![1.0; 11], &grid, InitOrder::First, &zero).unwrap();
        assert!(u1.iter().all(|v| (v - 0.1).abs() < 1e-15));
        let (_, u1) = damped_init(&phi, &zero, &grid, InitOrder::Second, &zero).unwrap();
        for i in 1..10 {
            assert!((u1[i] - (phi[i] + 0.01)).abs() < 1e-13);
        }
    }

    #[test]
    fn leapfrog_transport() {
        let grid = Grid1D::new(1.0, 1.0, 11, 11).unwrap();
        assert_eq!(grid.r, 1.0);
        let coeffs = damped_coefficients(&vec![0.0; 11], &grid).unwrap();
        let mut u_n = vec![0.0; 11];
        u_n[5] = 1.0;
        let out = damped_step(&u_n, &vec![0.0; 11], &coeffs, 0.0, 0.0, &grid);
        assert_eq!(out[3], 1.0);
        assert_eq!(out[5], 1.0);
        assert_eq!(out[4], 0.0);
        assert!(out.iter().enumerate().all(|(k, v)| k == 3 || k == 5 || *v == 0.0));
    }

    #[test]
    fn constants_are_preserved() {
        let grid = Grid1D::new(3.0, 1.0, 16, 21).unwrap();
        let a: Vec<f64> = grid.xs().iter().map(|x| (x + 1.0).powi(2)).collect();
        let coeffs = damped_coefficients(&a, &grid).unwrap();
        let ones = vec![1.0; 16];
        let out = damped_step(&ones, &ones, &coeffs, 1.0, 0.0, &grid);
        assert!(out.iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    /// Rebuilds the step from the explicit matrices of the recurrence
    /// `U^{n+1} = K U^n - Z U^{n-1} + D_n + N_n` on the interior nodes.
    #[test]
    fn step_matches_dense_recurrence() {
        let grid = Grid1D::new(1.0, 0.5, 5, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..2.0)).collect();
        let coeffs = damped_coefficients(&a, &grid).unwrap();
        let u_n: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u_p: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (f_n, h_n) = (0.7, -1.3);

        let m = 3;
        let mut k = vec![vec![0.0; m]; m];
        for row in 0..m {
            let (al, be, _) = coeffs.at(row + 1);
            k[row][row] = be;
            if row > 0 {
                k[row][row - 1] = al;
            }
            if row + 1 < m {
                k[row][row + 1] = al;
            }
        }
        let (al_last, be_last, _) = coeffs.at(m);
        k[m - 1][m - 1] = be_last + 4.0 * al_last / 3.0;
        k[m - 1][m - 2] = 2.0 * al_last / 3.0;
        let interior_n = &u_n[1..4];
        let interior_p = &u_p[1..4];
        let mut expect = dense_matvec(&k, interior_n);
        for row in 0..m {
            expect[row] -= coeffs.at(row + 1).2 * interior_p[row];
        }
        expect[0] += coeffs.at(1).0 * f_n;
        expect[m - 1] += 2.0 * al_last / 3.0 * grid.dx * h_n;

        let out = damped_step(&u_n, &u_p, &coeffs, f_n, h_n, &grid);
        for (o, e) in out.iter().zip(&expect) {
            assert!((o - e).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_data_gives_zero_field() {
        let grid = Grid1D::with_cfl(5.0, 2.0, 21, 0.5).unwrap();
        let spec = ProblemSpec::damped(
            grid,
            SpaceFunction::Constant(0.0),
            SpaceFunction::Constant(0.0),
            SpaceFunction::Exp { rate: 1.0 },
        );
        let u = damped_solve(&spec).unwrap();
        assert!(u.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn boundary_rows_are_prescribed() {
        let grid = Grid1D::with_cfl(4.0, 3.0, 41, 0.5).unwrap();
        let spec = ProblemSpec::damped(
            grid,
            SpaceFunction::Sin { freq: 0.2 },
            SpaceFunction::Constant(0.0),
            SpaceFunction::Constant(0.5),
        )
        .with_dirichlet(TimeFunction::Sine { omega: 1.0 })
        .with_neumann(TimeFunction::ExpDecay { rate: 1.0 });
        let u = damped_solve(&spec).unwrap();
        for n in 0..grid.nt {
            let t = grid.t(n);
            assert_eq!(u.get(0, n), t.sin());
            let slope = (3.0 * u.get(40, n) - 4.0 * u.get(39, n) + u.get(38, n)) / (2.0 * grid.dx);
            assert!((slope - (-t).exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn cfl_guard() {
        let grid = Grid1D::with_cfl(1.0, 1.0, 11, 1.2).unwrap();
        let spec = ProblemSpec::classical(grid, SpaceFunction::Sin { freq: 1.0 }, SpaceFunction::Constant(0.0));
        assert!(matches!(damped_solve(&spec), Err(WaveError::CflViolation { .. })));
        assert!(damped_solve(&spec.with_cfl_override(true)).is_ok());
    }

    #[test]
    fn deterministic() {
        let grid = Grid1D::with_cfl(10.0, 5.0, 51, 0.5).unwrap();
        let spec = ProblemSpec::damped(grid, SpaceFunction::Abs, SpaceFunction::Cos { freq: 0.2 }, SpaceFunction::SinSquared)
            .with_neumann(TimeFunction::Sqrt);
        let a = damped_solve(&spec).unwrap();
        let b = damped_solve(&spec).unwrap();
        assert!(a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}
