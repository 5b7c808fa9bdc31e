//! Function descriptors for initial data, boundary inputs, damping
//! coefficients and relaxation kernels.
//!
//! Every descriptor is a plain value: a family tag plus parameters. They
//! evaluate pointwise and, where the family has a closed form, expose the
//! analytic derivative.

use std::fmt;

use crate::error::{Result, WaveError};
use crate::grid::Grid1D;

/// Piecewise-linear interpolant through `(knot, value)` pairs.
///
/// Outside the knot range the end values are held constant.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl Table {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(WaveError::InvalidFunction(format!(
                "table has {} knots but {} values",
                knots.len(),
                values.len()
            )));
        }
        if knots.len() < 2 {
            return Err(WaveError::InvalidFunction(
                "table needs at least two samples".into(),
            ));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(WaveError::InvalidFunction(
                "table knots must be strictly increasing".into(),
            ));
        }
        if knots.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(WaveError::InvalidFunction(
                "table entries must be finite".into(),
            ));
        }
        Ok(Self { knots, values })
    }

    /// Tabulates `f` at `count` equally spaced knots on `[start, end]`.
    pub fn from_fn(start: f64, end: f64, count: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if count < 2 {
            return Err(WaveError::InvalidFunction(
                "table needs at least two samples".into(),
            ));
        }
        let step = (end - start) / (count - 1) as f64;
        let knots: Vec<f64> = (0..count).map(|k| start + k as f64 * step).collect();
        let values = knots.iter().map(|&x| f(x)).collect();
        Self::new(knots, values)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn segment(&self, x: f64) -> usize {
        // index k with knots[k] <= x < knots[k + 1], clamped to a valid segment
        let k = self.knots.partition_point(|&k| k <= x);
        k.saturating_sub(1).min(self.knots.len() - 2)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let last = self.knots.len() - 1;
        if x <= self.knots[0] {
            return self.values[0];
        }
        if x >= self.knots[last] {
            return self.values[last];
        }
        let k = self.segment(x);
        let (x0, x1) = (self.knots[k], self.knots[k + 1]);
        let w = (x - x0) / (x1 - x0);
        self.values[k] * (1.0 - w) + self.values[k + 1] * w
    }
}

/// Time-dependent boundary datum (`f` at the Dirichlet end, `h` at the
/// Neumann end).
#[derive(Debug, Clone, PartialEq)]
pub enum TimeFunction {
    Zero,
    Constant(f64),
    /// `exp(-rate * t)`
    ExpDecay { rate: f64 },
    /// `sin(omega * t)`
    Sine { omega: f64 },
    /// `scale * t / (t + 1)`
    Saturating { scale: f64 },
    /// `sqrt(t)`
    Sqrt,
    Tabulated(Table),
}

impl TimeFunction {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Constant(c) => *c,
            Self::ExpDecay { rate } => (-rate * t).exp(),
            Self::Sine { omega } => (omega * t).sin(),
            Self::Saturating { scale } => scale * t / (t + 1.0),
            Self::Sqrt => t.max(0.0).sqrt(),
            Self::Tabulated(table) => table.eval(t),
        }
    }

    /// Closed-form derivative, when the family has one.
    ///
    /// `Sqrt` reports an infinite slope at `t = 0`.
    pub fn derivative(&self, t: f64) -> Option<f64> {
        match self {
            Self::Zero | Self::Constant(_) => Some(0.0),
            Self::ExpDecay { rate } => Some(-rate * (-rate * t).exp()),
            Self::Sine { omega } => Some(omega * (omega * t).cos()),
            Self::Saturating { scale } => Some(scale / ((t + 1.0) * (t + 1.0))),
            Self::Sqrt => Some(0.5 / t.max(0.0).sqrt()),
            Self::Tabulated(_) => None,
        }
    }

    pub fn has_analytic_derivative(&self) -> bool {
        !matches!(self, Self::Tabulated(_))
    }

    /// Analytic derivative or a centered difference with step `step`
    /// (one-sided when `t - step < 0`).
    pub fn derivative_or_fd(&self, t: f64, step: f64) -> f64 {
        if let Some(d) = self.derivative(t) {
            return d;
        }
        if t - step < 0.0 {
            (self.eval(t + step) - self.eval(t)) / step
        } else {
            (self.eval(t + step) - self.eval(t - step)) / (2.0 * step)
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Zero => true,
            Self::Constant(c) => *c == 0.0,
            Self::Tabulated(t) => t.values().iter().all(|&v| v == 0.0),
            _ => false,
        }
    }
}

impl fmt::Display for TimeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "zero"),
            Self::Constant(c) => write!(f, "constant({c})"),
            Self::ExpDecay { rate } => write!(f, "exp_decay({rate})"),
            Self::Sine { omega } => write!(f, "sine({omega})"),
            Self::Saturating { scale } => write!(f, "saturating({scale})"),
            Self::Sqrt => write!(f, "sqrt"),
            Self::Tabulated(t) => write_table(f, t),
        }
    }
}

/// Space-dependent datum: initial displacement and velocity, damping
/// coefficient.
#[derive(Debug, Clone, PartialEq)]
pub enum SpaceFunction {
    Constant(f64),
    /// `cos(freq * x)`
    Cos { freq: f64 },
    /// `sin(freq * x)`
    Sin { freq: f64 },
    /// `exp(-rate * x)`
    Exp { rate: f64 },
    /// `sin(x)^2`
    SinSquared,
    /// `(x + 1)^2`
    ShiftedSquare,
    /// `|x|`
    Abs,
    /// `left` for `x <= at`, `right` otherwise.
    Step { at: f64, left: f64, right: f64 },
    /// `x^exponent`
    Power { exponent: f64 },
    Tabulated(Table),
}

impl SpaceFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Cos { freq } => (freq * x).cos(),
            Self::Sin { freq } => (freq * x).sin(),
            Self::Exp { rate } => (-rate * x).exp(),
            Self::SinSquared => {
                let s = x.sin();
                s * s
            }
            Self::ShiftedSquare => (x + 1.0) * (x + 1.0),
            Self::Abs => x.abs(),
            Self::Step { at, left, right } => {
                if x <= *at {
                    *left
                } else {
                    *right
                }
            }
            Self::Power { exponent } => x.powf(*exponent),
            Self::Tabulated(table) => table.eval(x),
        }
    }

    pub fn derivative(&self, x: f64) -> Option<f64> {
        match self {
            Self::Constant(_) | Self::Step { .. } => Some(0.0),
            Self::Cos { freq } => Some(-freq * (freq * x).sin()),
            Self::Sin { freq } => Some(freq * (freq * x).cos()),
            Self::Exp { rate } => Some(-rate * (-rate * x).exp()),
            Self::SinSquared => Some((2.0 * x).sin()),
            Self::ShiftedSquare => Some(2.0 * (x + 1.0)),
            Self::Abs => Some(x.signum()),
            Self::Power { exponent } => Some(exponent * x.powf(exponent - 1.0)),
            Self::Tabulated(_) => None,
        }
    }

    pub fn is_constant(&self) -> Option<f64> {
        match self {
            Self::Constant(c) => Some(*c),
            _ => None,
        }
    }
}

impl fmt::Display for SpaceFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "constant({c})"),
            Self::Cos { freq } => write!(f, "cos({freq})"),
            Self::Sin { freq } => write!(f, "sin({freq})"),
            Self::Exp { rate } => write!(f, "exp({rate})"),
            Self::SinSquared => write!(f, "sin2"),
            Self::ShiftedSquare => write!(f, "shifted_square"),
            Self::Abs => write!(f, "abs"),
            Self::Step { at, left, right } => write!(f, "step({at}, {left}, {right})"),
            Self::Power { exponent } => write!(f, "power({exponent})"),
            Self::Tabulated(t) => write_table(f, t),
        }
    }
}

/// Relaxation (memory) kernel `g` of the viscoelastic equation.
#[derive(Debug, Clone, PartialEq)]
pub enum RelaxationKernel {
    Zero,
    /// `g(t) = c`; a test kernel, not a physical relaxation function.
    Constant(f64),
    /// `exp(-(t + 1))`
    ExpShift,
    /// `(t + 1)^(-p)`
    Power { p: f64 },
    /// `0.2 / (ln(t + 2)^2 (t + 1))`
    LogType,
    Tabulated(Table),
}

impl RelaxationKernel {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Constant(c) => *c,
            Self::ExpShift => (-(t + 1.0)).exp(),
            Self::Power { p } => (t + 1.0).powf(-p),
            Self::LogType => {
                let l = (t + 2.0).ln();
                0.2 / (l * l * (t + 1.0))
            }
            Self::Tabulated(table) => table.eval(t),
        }
    }

    pub fn derivative(&self, t: f64) -> Option<f64> {
        match self {
            Self::Zero | Self::Constant(_) => Some(0.0),
            Self::ExpShift => Some(-(-(t + 1.0)).exp()),
            Self::Power { p } => Some(-p * (t + 1.0).powf(-p - 1.0)),
            Self::LogType => {
                let l = (t + 2.0).ln();
                let g = 0.2 / (l * l * (t + 1.0));
                Some(-g * (2.0 / ((t + 2.0) * l) + 1.0 / (t + 1.0)))
            }
            Self::Tabulated(_) => None,
        }
    }

    /// Analytic derivative or a centered difference of `g` (forward near 0).
    pub fn derivative_or_fd(&self, t: f64, step: f64) -> f64 {
        if let Some(d) = self.derivative(t) {
            return d;
        }
        if t - step < 0.0 {
            (self.eval(t + step) - self.eval(t)) / step
        } else {
            (self.eval(t + step) - self.eval(t - step)) / (2.0 * step)
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Zero => true,
            Self::Constant(c) => *c == 0.0,
            Self::Tabulated(t) => t.values().iter().all(|&v| v == 0.0),
            _ => false,
        }
    }

    /// Samples `g` on `grid` and reports whether it is positive and
    /// nonincreasing there (nonzero families only).
    pub fn check_shape(&self, grid: &Grid1D) -> Result<()> {
        if self.is_zero() {
            return Ok(());
        }
        let mut prev = f64::INFINITY;
        for n in 0..grid.nt {
            let v = self.eval(grid.t(n));
            if !(v > 0.0) {
                return Err(WaveError::InvalidFunction(format!(
                    "kernel {self} is not positive at t = {}",
                    grid.t(n)
                )));
            }
            if v > prev {
                return Err(WaveError::InvalidFunction(format!(
                    "kernel {self} increases near t = {}",
                    grid.t(n)
                )));
            }
            prev = v;
        }
        Ok(())
    }
}

impl fmt::Display for RelaxationKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "zero"),
            Self::Constant(c) => write!(f, "constant({c})"),
            Self::ExpShift => write!(f, "exp_shift"),
            Self::Power { p } => write!(f, "power({p})"),
            Self::LogType => write!(f, "log_type"),
            Self::Tabulated(t) => write_table(f, t),
        }
    }
}

fn write_table(f: &mut fmt::Formatter<'_>, t: &Table) -> fmt::Result {
    write!(f, "table(")?;
    for (k, (x, v)) in t.knots().iter().zip(t.values()).enumerate() {
        if k > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{x} {v}")?;
    }
    write!(f, ")")
}

/// Samples `func` at every spatial node of `grid`.
pub fn sample_space_function(func: &SpaceFunction, grid: &Grid1D) -> Vec<f64> {
    (0..grid.nx).map(|i| func.eval(grid.x(i))).collect()
}

/// Samples `func` at every time level of `grid`.
pub fn sample_time_function(func: &TimeFunction, grid: &Grid1D) -> Vec<f64> {
    (0..grid.nt).map(|n| func.eval(grid.t(n))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn space_sampling_examples() {
        let g = Grid1D::new(10.0 * PI, 1.0, 315, 3).unwrap();
        assert!(sample_space_function(&SpaceFunction::Constant(1.0), &g)
            .iter()
            .all(|&v| v == 1.0));

        let c = sample_space_function(&SpaceFunction::Cos { freq: 0.2 }, &g);
        assert_eq!(c[0], 1.0);
        assert!((c[314] - 1.0).abs() < 1e-14);

        let a = sample_space_function(&SpaceFunction::Abs, &g);
        for (i, v) in a.iter().enumerate() {
            assert_eq!(*v, g.x(i));
        }
    }

    #[test]
    fn time_sampling_examples() {
        let g = Grid1D::new(1.0, 8.0, 5, 9).unwrap();
        assert!(sample_time_function(&TimeFunction::Zero, &g)
            .iter()
            .all(|&v| v == 0.0));
        assert_eq!(TimeFunction::ExpDecay { rate: 1.0 }.eval(0.0), 1.0);
        let s = sample_time_function(&TimeFunction::Saturating { scale: 5.0 }, &g);
        // t_4 = 4
        assert_eq!(s[4], 4.0);
    }

    #[test]
    fn sampling_is_deterministic() {
        let g = Grid1D::new(3.0, 5.0, 101, 57).unwrap();
        let f = SpaceFunction::SinSquared;
        let a = sample_space_function(&f, &g);
        let b = sample_space_function(&f, &g);
        assert_eq!(
            a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn table_interpolates_linearly_and_clamps() {
        let t = Table::new(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 0.0]).unwrap();
        assert_eq!(t.eval(-1.0), 0.0);
        assert_eq!(t.eval(0.5), 1.0);
        assert_eq!(t.eval(2.0), 1.0);
        assert_eq!(t.eval(1.0), 2.0);
        assert_eq!(t.eval(9.0), 0.0);
        assert!(Table::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(Table::new(vec![0.0], vec![1.0]).is_err());
    }

    /// Max |analytic - centered difference| over interior levels.
    fn derivative_gap(f: &TimeFunction, dt: f64, horizon: f64) -> f64 {
        let n = (horizon / dt).round() as usize;
        (1..n)
            .map(|k| {
                let t = k as f64 * dt;
                let fd = (f.eval(t + dt) - f.eval(t - dt)) / (2.0 * dt);
                (f.derivative(t).unwrap() - fd).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn analytic_time_derivatives_are_second_order_consistent() {
        let families = [
            TimeFunction::ExpDecay { rate: 1.0 },
            TimeFunction::Sine { omega: 0.2 },
            TimeFunction::Saturating { scale: 5.0 },
            TimeFunction::Sqrt,
        ];
        for f in &families {
            let dts = [0.02, 0.01, 0.005];
            // sqrt is singular at 0, so start its window away from the origin
            let horizon: f64 = 10.0;
            let errs: Vec<f64> = dts
                .iter()
                .map(|&dt| {
                    if matches!(f, TimeFunction::Sqrt) {
                        let n = (horizon / dt).round() as usize;
                        (1..n)
                            .map(|k| 1.0 + k as f64 * dt)
                            .map(|t| {
                                let fd = (f.eval(t + dt) - f.eval(t - dt)) / (2.0 * dt);
                                (f.derivative(t).unwrap() - fd).abs()
                            })
                            .fold(0.0, f64::max)
                    } else {
                        derivative_gap(f, dt, horizon)
                    }
                })
                .collect();
            let slope = ((errs[0] / errs[2]).ln()) / (4.0f64).ln();
            assert!(slope >= 1.9, "{f}: slope {slope}, errors {errs:?}");
        }
    }

    #[test]
    fn kernel_derivatives_match_finite_differences() {
        let kernels = [
            RelaxationKernel::ExpShift,
            RelaxationKernel::Power { p: 10.0 },
            RelaxationKernel::LogType,
        ];
        let h = 1e-5;
        for k in &kernels {
            for &t in &[0.1, 0.7, 2.0, 9.5] {
                let fd = (k.eval(t + h) - k.eval(t - h)) / (2.0 * h);
                let an = k.derivative(t).unwrap();
                assert!((fd - an).abs() <= 1e-7 * (1.0 + an.abs()), "{k} at {t}");
            }
        }
    }

    #[test]
    fn builtin_kernels_are_positive_and_nonincreasing() {
        let g = Grid1D::new(1.0, 50.0, 5, 501).unwrap();
        for k in [
            RelaxationKernel::ExpShift,
            RelaxationKernel::Power { p: 10.0 },
            RelaxationKernel::LogType,
            RelaxationKernel::Zero,
        ] {
            k.check_shape(&g).unwrap();
        }
        let rising = RelaxationKernel::Tabulated(
            Table::new(vec![0.0, 100.0], vec![1.0, 2.0]).unwrap(),
        );
        assert!(rising.check_shape(&g).is_err());
    }

    #[test]
    fn display_names() {
        assert_eq!(TimeFunction::ExpDecay { rate: 1.0 }.to_string(), "exp_decay(1)");
        assert_eq!(SpaceFunction::SinSquared.to_string(), "sin2");
        assert_eq!(RelaxationKernel::Power { p: 10.0 }.to_string(), "power(10)");
    }
}
