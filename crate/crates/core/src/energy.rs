//! Discrete energies and residuals of the energy-rate identities.
//!
//! Spatial norms use the trapezoid rule on the nodes. The velocity at level
//! `n` is the backward difference `(U^n - U^{n-1}) / dt`, forward at `n = 0`.

use std::fmt;

use crate::error::{Result, WaveError};
use crate::functions::{sample_space_function, RelaxationKernel};
use crate::problem::{EquationKind, ProblemSpec, SolutionField};
use crate::quadrature::trapezoid;
use crate::viscoelastic::{memory_trapezoid, KernelTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyKind {
    Classical,
    Damped,
    Modified,
}

impl fmt::Display for EnergyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Classical => "classical",
            Self::Damped => "damped",
            Self::Modified => "modified",
        })
    }
}

/// Per-term breakdown: `energy = potential + kinetic + history`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnergyComponents {
    pub kinetic: Vec<f64>,
    pub potential: Vec<f64>,
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergySeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: EnergyKind,
    pub components: Option<EnergyComponents>,
    /// Time-level index of each sample in the source field.
    pub levels: Vec<usize>,
    pub warnings: Vec<String>,
}

impl EnergySeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn initial(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Samples with `t_a <= t <= t_b`.
    pub fn window(&self, t_a: f64, t_b: f64) -> Vec<(f64, f64)> {
        self.times
            .iter()
            .zip(&self.values)
            .filter(|(t, _)| **t >= t_a && **t <= t_b)
            .map(|(t, v)| (*t, *v))
            .collect()
    }

    pub fn window_mean(&self, t_a: f64, t_b: f64) -> Option<f64> {
        let w = self.window(t_a, t_b);
        (!w.is_empty()).then(|| w.iter().map(|p| p.1).sum::<f64>() / w.len() as f64)
    }

    /// Half the peak-to-peak spread inside the window.
    pub fn window_amplitude(&self, t_a: f64, t_b: f64) -> Option<f64> {
        let w = self.window(t_a, t_b);
        if w.is_empty() {
            return None;
        }
        let (lo, hi) = w
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
        Some(0.5 * (hi - lo))
    }

    /// Largest `|e(t_n) - e(t_0)| / e(t_0)`.
    pub fn relative_drift(&self) -> f64 {
        let e0 = self.initial();
        self.values.iter().fold(0.0f64, |m, v| m.max((v - e0).abs())) / e0
    }
}

/// `u_x` by centered differences inside, second-order one-sided at the ends.
pub fn discrete_gradient(col: &[f64], dx: f64) -> Vec<f64> {
    let n = col.len();
    let mut g = vec![0.0; n];
    discrete_gradient_into(col, dx, &mut g);
    g
}

fn discrete_gradient_into(col: &[f64], dx: f64, out: &mut [f64]) {
    let n = col.len();
    let s = 0.5 / dx;
    for i in 1..n - 1 {
        out[i] = (col[i + 1] - col[i - 1]) * s;
    }
    out[0] = (-3.0 * col[0] + 4.0 * col[1] - col[2]) * s;
    out[n - 1] = (3.0 * col[n - 1] - 4.0 * col[n - 2] + col[n - 3]) * s;
}

fn norm_sq(v: &[f64], dx: f64) -> f64 {
    let n = v.len();
    let inner: f64 = v[1..n - 1].iter().map(|x| x * x).sum();
    dx * (0.5 * (v[0] * v[0] + v[n - 1] * v[n - 1]) + inner)
}

fn diff_norm_sq(a: &[f64], b: &[f64], dx: f64) -> f64 {
    let n = a.len();
    let sq = |i: usize| (a[i] - b[i]) * (a[i] - b[i]);
    let inner: f64 = (1..n - 1).map(sq).sum();
    dx * (0.5 * (sq(0) + sq(n - 1)) + inner)
}

/// Velocity column at level `n`.
pub fn velocity(field: &SolutionField, n: usize) -> Vec<f64> {
    let dt = field.grid.dt;
    let (hi, lo) = if n == 0 { (1, 0) } else { (n, n - 1) };
    field
        .column(hi)
        .iter()
        .zip(field.column(lo))
        .map(|(a, b)| (a - b) / dt)
        .collect()
}

fn gradients(field: &SolutionField) -> Vec<Vec<f64>> {
    let dx = field.grid.dx;
    (0..field.completed_levels())
        .map(|n| discrete_gradient(field.column(n), dx))
        .collect()
}

/// `(1/2)|u_x|^2 + (1/2)|u_t|^2` at every completed level.
pub fn energy_damped(field: &SolutionField) -> Result<EnergySeries> {
    let levels = field.completed_levels();
    if levels < 2 {
        return Err(WaveError::DimensionMismatch(
            "energy needs at least two completed time levels".into(),
        ));
    }
    let dx = field.grid.dx;
    let mut comps = EnergyComponents::default();
    let mut values = Vec::with_capacity(levels);
    let mut grad = vec![0.0; field.grid.nx];
    for n in 0..levels {
        discrete_gradient_into(field.column(n), dx, &mut grad);
        let pot = 0.5 * norm_sq(&grad, dx);
        let kin = 0.5 * norm_sq(&velocity(field, n), dx);
        values.push(pot + kin);
        comps.potential.push(pot);
        comps.kinetic.push(kin);
        comps.history.push(0.0);
    }
    Ok(EnergySeries {
        times: (0..levels).map(|n| field.grid.t(n)).collect(),
        values,
        kind: EnergyKind::Damped,
        components: Some(comps),
        levels: (0..levels).collect(),
        warnings: Vec::new(),
    })
}

/// Same functional labelled as the conserved energy of the undamped wave.
pub fn energy_classical(field: &SolutionField) -> Result<EnergySeries> {
    let mut s = energy_damped(field)?;
    s.kind = EnergyKind::Classical;
    Ok(s)
}

fn g_circ_from(grads: &[Vec<f64>], n: usize, lag: impl Fn(usize) -> f64, dt: f64, dx: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let now = &grads[n];
    // the m = n term vanishes
    let mut acc = 0.5 * lag(n) * diff_norm_sq(now, &grads[0], dx);
    for m in 1..n {
        acc += lag(n - m) * diff_norm_sq(now, &grads[m], dx);
    }
    acc * dt
}

/// `(g o u_x)(t_n) = int_0^{t_n} g(t_n - s) |u_x(t_n) - u_x(s)|^2 ds` by the
/// trapezoid rule over the stored levels.
pub fn g_circ_grad(field: &SolutionField, n: usize, g: &RelaxationKernel) -> f64 {
    let dx = field.grid.dx;
    let dt = field.grid.dt;
    let grads: Vec<Vec<f64>> = (0..=n).map(|m| discrete_gradient(field.column(m), dx)).collect();
    g_circ_from(&grads, n, |k| g.eval(k as f64 * dt), dt, dx)
}

/// Modified energy at every completed level.
pub fn energy_modified(field: &SolutionField, g: &RelaxationKernel) -> Result<EnergySeries> {
    energy_modified_strided(field, g, 1)
}

/// Modified energy at levels `0, stride, 2 stride, ...` and the last
/// completed level. The history pairing costs `O(n nx)` per sample.
pub fn energy_modified_strided(
    field: &SolutionField,
    g: &RelaxationKernel,
    stride: usize,
) -> Result<EnergySeries> {
    if stride == 0 {
        return Err(WaveError::ParameterDomain("energy stride must be positive".into()));
    }
    let levels = field.completed_levels();
    if levels < 2 {
        return Err(WaveError::DimensionMismatch(
            "energy needs at least two completed time levels".into(),
        ));
    }
    let grid = &field.grid;
    let (dx, dt) = (grid.dx, grid.dt);
    let table = KernelTable::new(g, grid);
    let int_g = table.cumulative_integral();
    let grads = gradients(field);

    let mut picks: Vec<usize> = (0..levels).step_by(stride).collect();
    if *picks.last().unwrap() != levels - 1 {
        picks.push(levels - 1);
    }
    let mut comps = EnergyComponents::default();
    let mut values = Vec::with_capacity(picks.len());
    let mut warnings = Vec::new();
    for &n in &picks {
        let weight = 1.0 - int_g[n];
        if weight <= 0.0 && warnings.is_empty() {
            warnings.push(format!(
                "1 - int_0^t g is {weight:.6e} at t = {:.6}; the modified energy may be negative",
                grid.t(n)
            ));
        }
        let pot = 0.5 * (weight * norm_sq(&grads[n], dx));
        let kin = 0.5 * norm_sq(&velocity(field, n), dx);
        let hist = 0.5 * g_circ_from(&grads, n, |k| table.lag(k), dt, dx);
        values.push(pot + kin + hist);
        comps.potential.push(pot);
        comps.kinetic.push(kin);
        comps.history.push(hist);
    }
    Ok(EnergySeries {
        times: picks.iter().map(|&n| grid.t(n)).collect(),
        values,
        kind: EnergyKind::Modified,
        components: Some(comps),
        levels: picks,
        warnings,
    })
}

/// Residuals of the continuous energy-rate identity on each interval
/// `[t_{n-1}, t_n]`, `n = 1..levels`.
///
/// With `v = (U^n - U^{n-1}) / dt` the damped residual is
/// `(e_n - e_{n-1}) / dt + int a v^2 - h(t_{n-1/2}) v(L)`. The viscoelastic
/// residual replaces the damping term by
/// `-(1/2)(g' o u_x) + (1/2) g |u_x|^2` averaged over the interval and
/// subtracts the memory boundary flux `v(L) int_0^t g(t - s) h(s) ds`.
/// The series must hold every level of the field.
pub fn energy_rate_residual(
    field: &SolutionField,
    series: &EnergySeries,
    spec: &ProblemSpec,
) -> Result<Vec<f64>> {
    let levels = field.completed_levels();
    if series.len() != levels || series.levels.iter().enumerate().any(|(k, &n)| k != n) {
        return Err(WaveError::DimensionMismatch(
            "residuals need an energy sample at every time level".into(),
        ));
    }
    let grid = &field.grid;
    let (nx, dx, dt) = (grid.nx, grid.dx, grid.dt);
    let h = &spec.neumann;
    let mut out = Vec::with_capacity(levels.saturating_sub(1));
    match spec.kind {
        EquationKind::Classical | EquationKind::Damped => {
            let a = match &spec.damping {
                Some(a) => sample_space_function(a, grid),
                None => vec![0.0; nx],
            };
            for n in 1..levels {
                let v = velocity(field, n);
                let av: Vec<f64> = v.iter().zip(&a).map(|(v, a)| a * v * v).collect();
                let dissipation = trapezoid(&av, dx);
                let flux = h.eval(grid.t(n) - 0.5 * dt) * v[nx - 1];
                out.push((series.values[n] - series.values[n - 1]) / dt + dissipation - flux);
            }
        }
        EquationKind::Viscoelastic => {
            let g = spec.kernel.as_ref().unwrap();
            let table = KernelTable::new(g, grid);
            let dg: Vec<f64> = (0..=grid.nt).map(|k| g.derivative_or_fd(grid.t(k), dt)).collect();
            let grads = gradients(field);
            let h_samples: Vec<f64> = (0..levels).map(|n| h.eval(grid.t(n))).collect();
            let bulk = |n: usize| {
                0.5 * g_circ_from(&grads, n, |k| dg[k], dt, dx)
                    - 0.5 * table.lag(n) * norm_sq(&grads[n], dx)
            };
            let memory_flux = |n: usize| memory_trapezoid(&table, &h_samples, n);
            let mut prev_bulk = bulk(0);
            let mut prev_mem = memory_flux(0);
            for n in 1..levels {
                let (b, m) = (bulk(n), memory_flux(n));
                let v = velocity(field, n);
                let flux = v[nx - 1] * (h.eval(grid.t(n) - 0.5 * dt) - 0.5 * (m + prev_mem));
                out.push(
                    (series.values[n] - series.values[n - 1]) / dt - 0.5 * (b + prev_bulk) - flux,
                );
                prev_bulk = b;
                prev_mem = m;
            }
        }
    }
    Ok(out)
}
