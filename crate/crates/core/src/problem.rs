//! Problem description and the solution container shared by both solvers.

use std::fmt;

use crate::error::{Result, WaveError};
use crate::functions::{RelaxationKernel, SpaceFunction, TimeFunction};
use crate::grid::Grid1D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EquationKind {
    /// `u_tt - u_xx = 0`
    Classical,
    /// `u_tt - u_xx + a(x) u_t = 0`
    Damped,
    /// `u_tt - u_xx + int_0^t g(t - s) u_xx(s) ds = 0`
    Viscoelastic,
}

impl fmt::Display for EquationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Classical => "classical",
            Self::Damped => "damped",
            Self::Viscoelastic => "viscoelastic",
        })
    }
}

/// How the second time level `U^1` is built from the initial data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitOrder {
    /// `U^1 = U^0 + dt psi`
    #[default]
    First,
    /// Taylor start `U^1 = U^0 + dt psi + dt^2/2 (phi'' - a psi)`.
    Second,
}

impl fmt::Display for InitOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::First => "first",
            Self::Second => "second",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolverOptions {
    pub init_order: InitOrder,
    /// Lets the explicit solver run with `r > 1`.
    pub allow_cfl_violation: bool,
    /// Keep only the most recent `cap` history columns in the memory sum.
    pub history_cap: Option<usize>,
}

/// Full declarative description of one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub kind: EquationKind,
    pub grid: Grid1D,
    /// Initial displacement `u(x, 0)`.
    pub phi: SpaceFunction,
    /// Initial velocity `u_t(x, 0)`.
    pub psi: SpaceFunction,
    /// Dirichlet datum `u(0, t)`.
    pub dirichlet: TimeFunction,
    /// Neumann datum `u_x(L, t)`.
    pub neumann: TimeFunction,
    pub damping: Option<SpaceFunction>,
    pub kernel: Option<RelaxationKernel>,
    pub options: SolverOptions,
}

impl ProblemSpec {
    pub fn classical(grid: Grid1D, phi: SpaceFunction, psi: SpaceFunction) -> Self {
        Self {
            kind: EquationKind::Classical,
            grid,
            phi,
            psi,
            dirichlet: TimeFunction::Zero,
            neumann: TimeFunction::Zero,
            damping: None,
            kernel: None,
            options: SolverOptions::default(),
        }
    }

    pub fn damped(grid: Grid1D, phi: SpaceFunction, psi: SpaceFunction, a: SpaceFunction) -> Self {
        Self {
            kind: EquationKind::Damped,
            damping: Some(a),
            ..Self::classical(grid, phi, psi)
        }
    }

    pub fn viscoelastic(
        grid: Grid1D,
        phi: SpaceFunction,
        psi: SpaceFunction,
        g: RelaxationKernel,
    ) -> Self {
        Self {
            kind: EquationKind::Viscoelastic,
            kernel: Some(g),
            ..Self::classical(grid, phi, psi)
        }
    }

    pub fn with_neumann(mut self, h: TimeFunction) -> Self {
        self.neumann = h;
        self
    }

    pub fn with_dirichlet(mut self, f: TimeFunction) -> Self {
        self.dirichlet = f;
        self
    }

    pub fn with_init_order(mut self, order: InitOrder) -> Self {
        self.options.init_order = order;
        self
    }

    pub fn with_cfl_override(mut self, allow: bool) -> Self {
        self.options.allow_cfl_violation = allow;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            EquationKind::Classical => {
                if self.damping.is_some() || self.kernel.is_some() {
                    return Err(WaveError::InvalidProblem(
                        "classical problems take neither a damping coefficient nor a kernel"
                            .into(),
                    ));
                }
            }
            EquationKind::Damped => {
                if self.damping.is_none() {
                    return Err(WaveError::InvalidProblem(
                        "damped problems require a damping coefficient a(x)".into(),
                    ));
                }
                if self.kernel.is_some() {
                    return Err(WaveError::InvalidProblem(
                        "damped problems take no relaxation kernel".into(),
                    ));
                }
            }
            EquationKind::Viscoelastic => {
                if self.kernel.is_none() {
                    return Err(WaveError::InvalidProblem(
                        "viscoelastic problems require a relaxation kernel g(t)".into(),
                    ));
                }
                if self.damping.is_some() {
                    return Err(WaveError::InvalidProblem(
                        "viscoelastic problems take no damping coefficient".into(),
                    ));
                }
            }
        }
        if let Some(a) = &self.damping {
            for i in 0..self.grid.nx {
                let v = a.eval(self.grid.x(i));
                if !(v.is_finite() && v >= 0.0) {
                    return Err(WaveError::InvalidProblem(format!(
                        "damping coefficient must be finite and nonnegative, a({}) = {v}",
                        self.grid.x(i)
                    )));
                }
            }
        }
        Ok(())
    }

    /// Non-fatal observations about the data, for run metadata.
    ///
    /// The data are not required to satisfy the corner compatibility
    /// conditions; mismatches are only reported here.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let l = self.grid.length;
        let slope = self.phi.derivative(l).unwrap_or_else(|| {
            let h = self.grid.dx;
            (3.0 * self.phi.eval(l) - 4.0 * self.phi.eval(l - h) + self.phi.eval(l - 2.0 * h))
                / (2.0 * h)
        });
        let h0 = self.neumann.eval(0.0);
        if (slope - h0).abs() > 1e-8 {
            out.push(format!(
                "incompatible Neumann corner: phi'(L) = {slope:.6e} but h(0) = {h0:.6e}"
            ));
        }
        let u0 = self.phi.eval(0.0);
        let f0 = self.dirichlet.eval(0.0);
        if (u0 - f0).abs() > 1e-8 {
            out.push(format!(
                "incompatible Dirichlet corner: phi(0) = {u0:.6e} but f(0) = {f0:.6e}"
            ));
        }
        if self.kind == EquationKind::Damped || self.kind == EquationKind::Classical {
            if self.grid.r > 1.0 + 1e-12 {
                out.push(format!(
                    "CFL ratio r = {:.6} exceeds 1 for the explicit scheme",
                    self.grid.r
                ));
            }
        }
        out
    }
}

/// Nodal values `U_i^n` on the full space-time mesh.
///
/// Stored column by column: all `nx` nodes of level 0, then level 1, and so
/// on. Levels after a divergence are filled with NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField {
    pub grid: Grid1D,
    values: Vec<f64>,
    /// First level containing a non-finite value, if any.
    pub diverged_at: Option<usize>,
}

impl SolutionField {
    pub fn zeros(grid: Grid1D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.nx * grid.nt],
            diverged_at: None,
        }
    }

    /// Builds a field from a sampled function `u(x, t)`.
    pub fn from_fn(grid: Grid1D, u: impl Fn(f64, f64) -> f64) -> Self {
        let mut field = Self::zeros(grid);
        for n in 0..grid.nt {
            let t = grid.t(n);
            for (i, v) in field.column_mut(n).iter_mut().enumerate() {
                *v = u(i as f64 * grid.dx, t);
            }
        }
        field
    }

    /// Wraps column-major values (`nx` entries per level).
    pub fn from_values(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.nx * grid.nt {
            return Err(WaveError::DimensionMismatch(format!(
                "expected {} values, got {}",
                grid.nx * grid.nt,
                values.len()
            )));
        }
        Ok(Self {
            grid,
            values,
            diverged_at: None,
        })
    }

    #[inline]
    pub fn get(&self, i: usize, n: usize) -> f64 {
        self.values[n * self.grid.nx + i]
    }

    #[inline]
    pub fn column(&self, n: usize) -> &[f64] {
        let nx = self.grid.nx;
        &self.values[n * nx..(n + 1) * nx]
    }

    #[inline]
    pub fn column_mut(&mut self, n: usize) -> &mut [f64] {
        let nx = self.grid.nx;
        &mut self.values[n * nx..(n + 1) * nx]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.grid.nt).map(|n| self.get(i, n)).collect()
    }

    pub fn is_diverged(&self) -> bool {
        self.diverged_at.is_some()
    }

    /// Number of fully computed levels.
    pub fn completed_levels(&self) -> usize {
        self.diverged_at.unwrap_or(self.grid.nt)
    }

    /// Largest finite |U_i^n| over completed levels.
    pub fn max_abs(&self) -> f64 {
        self.values[..self.completed_levels() * self.grid.nx]
            .iter()
            .filter(|v| v.is_finite())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Marks level `n` and everything after it as diverged.
    pub(crate) fn mark_diverged(&mut self, n: usize) {
        self.diverged_at = Some(n);
        let nx = self.grid.nx;
        for v in &mut self.values[n * nx..] {
            *v = f64::NAN;
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid1D {
        Grid1D::new(1.0, 1.0, 11, 11).unwrap()
    }

    #[test]
    fn kind_requirements() {
        let g = grid();
        let base = ProblemSpec::classical(g, SpaceFunction::Constant(0.0), SpaceFunction::Constant(0.0));
        assert!(base.validate().is_ok());

        let mut bad = base.clone();
        bad.kind = EquationKind::Damped;
        assert!(bad.validate().is_err());

        let mut bad = base.clone();
        bad.kind = EquationKind::Viscoelastic;
        assert!(bad.validate().is_err());

        let mut bad = base.clone();
        bad.kernel = Some(RelaxationKernel::ExpShift);
        assert!(bad.validate().is_err());

        let ok = ProblemSpec::damped(g, SpaceFunction::Abs, SpaceFunction::Abs, SpaceFunction::SinSquared);
        assert!(ok.validate().is_ok());
        let ok = ProblemSpec::viscoelastic(g, SpaceFunction::Abs, SpaceFunction::Abs, RelaxationKernel::LogType);
        assert!(ok.validate().is_ok());

        let neg = ProblemSpec::damped(g, SpaceFunction::Abs, SpaceFunction::Abs, SpaceFunction::Constant(-1.0));
        assert!(neg.validate().is_err());
    }

    #[test]
    fn compatibility_is_warned_not_enforced() {
        let g = Grid1D::new(10.0 * std::f64::consts::PI, 1.0, 315, 11).unwrap();
        let p = ProblemSpec::damped(
            g,
            SpaceFunction::Cos { freq: 0.2 },
            SpaceFunction::Constant(0.0),
            SpaceFunction::Exp { rate: 1.0 },
        )
        .with_neumann(TimeFunction::ExpDecay { rate: 1.0 });
        assert!(p.validate().is_ok());
        let w = p.warnings();
        assert!(w.iter().any(|m| m.contains("Neumann corner")));
        assert!(w.iter().any(|m| m.contains("Dirichlet corner")));
    }

    #[test]
    fn field_layout() {
        let g = grid();
        let f = SolutionField::from_fn(g, |x, t| x + 10.0 * t);
        assert_eq!(f.get(3, 0), g.x(3));
        assert!((f.get(0, 2) - 10.0 * g.t(2)).abs() < 1e-15);
        assert_eq!(f.column(4).len(), 11);
        assert_eq!(f.row(2).len(), 11);
        assert_eq!(f.completed_levels(), 11);
    }
}
