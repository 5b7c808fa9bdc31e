//! Uniform space-time mesh.

use crate::error::{Result, WaveError};

/// Uniform mesh on `[0, L] x [0, T]`.
///
/// `nx` and `nt` count points, endpoints included, so `x_i = i dx` for
/// `i = 0..nx` and `t_n = n dt` for `n = 0..nt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub length: f64,
    pub horizon: f64,
    pub nx: usize,
    pub nt: usize,
    pub dx: f64,
    pub dt: f64,
    /// CFL ratio `dt / dx`.
    pub r: f64,
}

impl Grid1D {
    pub fn new(length: f64, horizon: f64, nx: usize, nt: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(WaveError::InvalidGrid(format!(
                "domain length must be positive and finite, got {length}"
            )));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(WaveError::InvalidGrid(format!(
                "time horizon must be positive and finite, got {horizon}"
            )));
        }
        // the one-sided boundary stencil reaches two nodes inward
        if nx < 4 {
            return Err(WaveError::InvalidGrid(format!(
                "nx must be at least 4, got {nx}"
            )));
        }
        if nt < 3 {
            return Err(WaveError::InvalidGrid(format!(
                "nt must be at least 3, got {nt}"
            )));
        }
        let dx = length / (nx - 1) as f64;
        let dt = horizon / (nt - 1) as f64;
        Ok(Self {
            length,
            horizon,
            nx,
            nt,
            dx,
            dt,
            r: dt / dx,
        })
    }

    /// Builds a grid whose time step gives a CFL ratio as close to `r` as
    /// an integer number of steps allows.
    pub fn with_cfl(length: f64, horizon: f64, nx: usize, r: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(WaveError::InvalidGrid(format!(
                "CFL ratio must be positive, got {r}"
            )));
        }
        if nx < 4 {
            return Err(WaveError::InvalidGrid(format!(
                "nx must be at least 4, got {nx}"
            )));
        }
        let dx = length / (nx - 1) as f64;
        let steps = (horizon / (r * dx)).round().max(2.0) as usize;
        Self::new(length, horizon, nx, steps + 1)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    #[inline]
    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn ts(&self) -> Vec<f64> {
        (0..self.nt).map(|n| self.t(n)).collect()
    }

    /// Number of interior nodes `i = 1..=nx-2`.
    #[inline]
    pub fn interior(&self) -> usize {
        self.nx - 2
    }

    /// Same domain with `factor` times as many intervals in both directions.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(
            self.length,
            self.horizon,
            (self.nx - 1) * factor + 1,
            (self.nt - 1) * factor + 1,
        )
    }
}
