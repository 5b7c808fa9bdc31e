//! Reference solutions and brute-force checkers used to verify the solvers.
//!
//! The modal solutions expand the data in the eigenfunctions of `-d^2/dx^2`
//! on `(0, L)` with `u(0) = 0` and `u'(L) = 0`:
//! `e_k(x) = sqrt(2/L) sin((k - 1/2) pi x / L)`.

use std::f64::consts::PI;

use crate::error::{Result, WaveError};
use crate::functions::{RelaxationKernel, SpaceFunction, TimeFunction};
use crate::grid::Grid1D;
use crate::quadrature::{simpson, trapezoid_fn};

/// Default number of retained modes.
pub const DEFAULT_MODES: usize = 64;

/// Projection quadrature is this many times finer than the simulation grid.
pub const PROJECTION_REFINEMENT: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct ModalBasis {
    pub length: f64,
    /// `lambdas[k]` belongs to mode `k + 1`.
    pub lambdas: Vec<f64>,
}

pub fn mixed_eigenpairs(length: f64, modes: usize) -> Result<ModalBasis> {
    if modes == 0 {
        return Err(WaveError::ParameterDomain("at least one mode is required".into()));
    }
    if !(length > 0.0) {
        return Err(WaveError::ParameterDomain(format!("length must be positive, got {length}")));
    }
    let lambdas = (0..modes)
        .map(|k| ((k as f64 + 0.5) * PI / length).powi(2))
        .collect();
    Ok(ModalBasis { length, lambdas })
}

impl ModalBasis {
    pub fn modes(&self) -> usize {
        self.lambdas.len()
    }

    #[inline]
    fn wavenumber(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * PI / self.length
    }

    /// `e_k(x)` for zero-based `k`.
    #[inline]
    pub fn e(&self, k: usize, x: f64) -> f64 {
        (2.0 / self.length).sqrt() * (self.wavenumber(k) * x).sin()
    }

    pub fn e_prime(&self, k: usize, x: f64) -> f64 {
        (2.0 / self.length).sqrt() * self.wavenumber(k) * (self.wavenumber(k) * x).cos()
    }

    pub fn e_second(&self, k: usize, x: f64) -> f64 {
        let w = self.wavenumber(k);
        -(2.0 / self.length).sqrt() * w * w * (w * x).sin()
    }

    /// `e_k(x_i)` on every node of `grid`.
    pub fn sample(&self, k: usize, grid: &Grid1D) -> Vec<f64> {
        (0..grid.nx).map(|i| self.e(k, grid.x(i))).collect()
    }

    /// `(f, e_k)` for every mode, by composite Simpson with step at most
    /// `step`.
    pub fn project(&self, f: impl Fn(f64) -> f64, step: f64) -> Vec<f64> {
        (0..self.modes())
            .map(|k| simpson(|x| f(x) * self.e(k, x), 0.0, self.length, step))
            .collect()
    }
}

/// Modal amplitude and velocity of `u'' + a u' + lambda u = 0`.
pub fn damped_mode(phi: f64, psi: f64, a: f64, lambda: f64, t: f64) -> (f64, f64) {
    let decay = (-0.5 * a * t).exp();
    let b = psi + 0.5 * a * phi;
    let disc = 0.25 * a * a - lambda;
    let k = 0.5 * a * psi + lambda * phi;
    if disc.abs() <= 1e-12 * lambda.max(1e-300) {
        (decay * (phi + b * t), decay * (psi - 0.5 * a * b * t))
    } else if disc < 0.0 {
        let w = (-disc).sqrt();
        let (s, c) = (w * t).sin_cos();
        (decay * (phi * c + b / w * s), decay * (psi * c - k / w * s))
    } else {
        let w = disc.sqrt();
        let (s, c) = ((w * t).sinh(), (w * t).cosh());
        (decay * (phi * c + b / w * s), decay * (psi * c - k / w * s))
    }
}

/// Truncated eigenfunction expansion of the solution with homogeneous
/// boundary data and constant damping `a >= 0`.
#[derive(Debug, Clone)]
pub struct ModalExpansion {
    pub basis: ModalBasis,
    pub damping: f64,
    pub phi_k: Vec<f64>,
    pub psi_k: Vec<f64>,
}

impl ModalExpansion {
    pub fn new(
        phi: &SpaceFunction,
        psi: &SpaceFunction,
        basis: ModalBasis,
        damping: f64,
        quad_step: f64,
    ) -> Result<Self> {
        if !(damping >= 0.0) {
            return Err(WaveError::ParameterDomain(format!(
                "damping must be nonnegative, got {damping}"
            )));
        }
        let phi_k = basis.project(|x| phi.eval(x), quad_step);
        let psi_k = basis.project(|x| psi.eval(x), quad_step);
        Ok(Self {
            basis,
            damping,
            phi_k,
            psi_k,
        })
    }

    /// Expansion whose projection grid is 8 times finer than `grid`.
    pub fn for_grid(
        phi: &SpaceFunction,
        psi: &SpaceFunction,
        grid: &Grid1D,
        modes: usize,
        damping: f64,
    ) -> Result<Self> {
        let basis = mixed_eigenpairs(grid.length, modes)?;
        Self::new(phi, psi, basis, damping, grid.dx / PROJECTION_REFINEMENT as f64)
    }

    /// Modal amplitudes and velocities at time `t`.
    pub fn amplitudes(&self, t: f64) -> Vec<(f64, f64)> {
        (0..self.basis.modes())
            .map(|k| damped_mode(self.phi_k[k], self.psi_k[k], self.damping, self.basis.lambdas[k], t))
            .collect()
    }

    pub fn eval_on(&self, grid: &Grid1D, t: f64) -> Vec<f64> {
        let amps = self.amplitudes(t);
        (0..grid.nx)
            .map(|i| {
                let x = grid.x(i);
                amps.iter().enumerate().map(|(k, (u, _))| u * self.basis.e(k, x)).sum()
            })
            .collect()
    }

    /// `(1/2)(|u_x|^2 + |u_t|^2)` of the truncated expansion, exact by
    /// orthonormality.
    pub fn energy(&self, t: f64) -> f64 {
        self.amplitudes(t)
            .iter()
            .zip(&self.basis.lambdas)
            .map(|((u, v), l)| 0.5 * (l * u * u + v * v))
            .sum()
    }
}

/// Solution of `u_tt = u_xx` with `u(0, t) = 0`, `u_x(L, t) = 0` on the
/// nodes of `grid` at time `t`.
pub fn modal_classical_solution(
    phi: &SpaceFunction,
    psi: &SpaceFunction,
    grid: &Grid1D,
    modes: usize,
    t: f64,
) -> Result<Vec<f64>> {
    Ok(ModalExpansion::for_grid(phi, psi, grid, modes, 0.0)?.eval_on(grid, t))
}

/// Same as [`modal_classical_solution`] with constant damping `a`.
pub fn modal_damped_solution(
    phi: &SpaceFunction,
    psi: &SpaceFunction,
    a: f64,
    grid: &Grid1D,
    modes: usize,
    t: f64,
) -> Result<Vec<f64>> {
    Ok(ModalExpansion::for_grid(phi, psi, grid, modes, a)?.eval_on(grid, t))
}

pub fn dense_matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum())
        .collect()
}

/// Gaussian elimination with partial pivoting.
pub fn dense_solve_oracle(a: &[Vec<f64>], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = rhs.len();
    if a.len() != n || a.iter().any(|row| row.len() != n) {
        return Err(WaveError::DimensionMismatch(format!(
            "matrix is not {n} x {n}"
        )));
    }
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut b = rhs.to_vec();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[p][col] == 0.0 {
            return Err(WaveError::SingularSystem { row: col });
        }
        m.swap(col, p);
        b.swap(col, p);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            if f != 0.0 {
                for k in col..n {
                    m[row][k] -= f * m[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| m[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / m[row][row];
    }
    Ok(x)
}

/// Fine trapezoid evaluation of `int_0^t g(t - s) phi(s) ds`.
pub fn convolution_oracle(g: &RelaxationKernel, phi: &TimeFunction, t: f64, quad_dt: f64) -> f64 {
    trapezoid_fn(|s| g.eval(t - s) * phi.eval(s), 0.0, t, quad_dt)
}
