//! Checks of the structural hypotheses on kernels, damping coefficients and
//! boundary inputs.
//!
//! The checks never stop a simulation. Several of the reference experiments
//! deliberately use inputs that violate them; callers record the reports as
//! run metadata.

use crate::error::{Result, WaveError};
use crate::functions::{RelaxationKernel, SpaceFunction, TimeFunction};
use crate::grid::Grid1D;
use crate::quadrature::trapezoid_fn;

/// Default absolute tolerance for the monotonicity test on `xi`.
pub const A2_TOLERANCE: f64 = 1e-8;

/// Integrability check: `1 - 2 int_0^inf g > L` for some `L` in `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct A1Report {
    /// Quadrature on `[0, tail_horizon]` plus the tail bound.
    pub integral_estimate: f64,
    /// Analytic bound used for `int_H^inf g`, when the family has one.
    pub tail: Option<f64>,
    /// Largest admissible `L`, i.e. `1 - 2 * integral_estimate`.
    pub l_max: f64,
    pub passes: bool,
    pub note: Option<String>,
}

/// Decay-rate check: `g' <= -xi g` with `xi` positive and nonincreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct A2Report {
    /// `xi*(t_n) = -g'(t_n) / g(t_n)` on the grid.
    pub xi_samples: Vec<f64>,
    pub monotone: bool,
    pub positive: bool,
    /// Estimate of `max |xi' / xi|`; reported, never enforced.
    pub ratio_bound: f64,
    /// First node where `g` vanishes, if any.
    pub vanishing_node: Option<usize>,
    pub passes: bool,
}

/// Both kernel checks together.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelReport {
    pub a1: A1Report,
    pub a2: A2Report,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampingReport {
    pub a_min: f64,
    pub a_max: f64,
    /// `a_min > 0`, the lower bound needed by the damped decay estimate.
    pub positive: bool,
}

/// Growth test for `|h|^2` and `|h_t|^2` against exponential decay.
#[derive(Debug, Clone, PartialEq)]
pub struct NeumannDecayReport {
    pub decaying: bool,
    pub h_sq_head_max: f64,
    pub h_sq_tail_max: f64,
    pub ht_sq_head_max: f64,
    pub ht_sq_tail_max: f64,
}

fn tail_bound(g: &RelaxationKernel, horizon: f64) -> std::result::Result<f64, String> {
    match g {
        RelaxationKernel::Zero => Ok(0.0),
        RelaxationKernel::Constant(c) => {
            if *c == 0.0 {
                Ok(0.0)
            } else {
                Err("constant kernel is not integrable on [0, inf)".into())
            }
        }
        RelaxationKernel::ExpShift => Ok((-(horizon + 1.0)).exp()),
        RelaxationKernel::Power { p } => {
            if *p > 1.0 {
                Ok((horizon + 1.0).powf(1.0 - p) / (p - 1.0))
            } else {
                Err(format!("(t+1)^(-{p}) is not integrable on [0, inf)"))
            }
        }
        RelaxationKernel::LogType => {
            // (t+2)/(t+1) <= (H+2)/(H+1) on [H, inf) and
            // int_H^inf 1/((t+2) ln^2(t+2)) dt = 1/ln(H+2)
            Ok(0.2 * (horizon + 2.0) / ((horizon + 1.0) * (horizon + 2.0).ln()))
        }
        RelaxationKernel::Tabulated(table) => {
            let last = *table.values().last().unwrap();
            if last == 0.0 && horizon >= *table.knots().last().unwrap() {
                Ok(0.0)
            } else if last == 0.0 {
                Ok(trapezoid_fn(|t| table.eval(t), horizon, *table.knots().last().unwrap(), 1e-3))
            } else {
                Err("tabulated kernel holds a nonzero tail value".into())
            }
        }
    }
}

/// Estimates `int_0^inf g` and the admissible `L`.
pub fn check_a1(g: &RelaxationKernel, tail_horizon: f64, quad_dt: f64) -> Result<A1Report> {
    if !(tail_horizon >= 10.0) {
        return Err(WaveError::ParameterDomain(format!(
            "tail horizon must be at least 10, got {tail_horizon}"
        )));
    }
    if !(quad_dt > 0.0) {
        return Err(WaveError::ParameterDomain(format!(
            "quadrature step must be positive, got {quad_dt}"
        )));
    }
    let body = trapezoid_fn(|t| g.eval(t), 0.0, tail_horizon, quad_dt).max(0.0);
    Ok(match tail_bound(g, tail_horizon) {
        Ok(tail) => {
            let integral = body + tail;
            let l_max = 1.0 - 2.0 * integral;
            A1Report {
                integral_estimate: integral,
                tail: Some(tail),
                l_max,
                passes: l_max > 0.0,
                note: (l_max <= 0.0).then(|| format!("1 - 2 int g = {l_max:.6} is not positive")),
            }
        }
        Err(note) => A1Report {
            integral_estimate: body,
            tail: None,
            l_max: 1.0 - 2.0 * body,
            passes: false,
            note: Some(note),
        },
    })
}

/// Samples the canonical `xi = -g'/g` on the grid and tests it.
pub fn check_a2(g: &RelaxationKernel, grid: &Grid1D, tol: f64) -> A2Report {
    let nt = grid.nt;
    let mut xi = Vec::with_capacity(nt);
    let mut vanishing_node = None;
    for n in 0..nt {
        let t = grid.t(n);
        let gv = g.eval(t);
        if !(gv > 0.0) {
            vanishing_node = Some(n);
            break;
        }
        xi.push(-g.derivative_or_fd(t, grid.dt) / gv);
    }
    if let Some(node) = vanishing_node {
        return A2Report {
            xi_samples: xi,
            monotone: false,
            positive: false,
            ratio_bound: f64::NAN,
            vanishing_node: Some(node),
            passes: false,
        };
    }
    let monotone = xi.windows(2).all(|w| w[1] <= w[0] + tol);
    let positive = xi.iter().all(|&v| v > 0.0);
    let mut ratio_bound: f64 = 0.0;
    for n in 1..nt - 1 {
        if xi[n] != 0.0 {
            let d = (xi[n + 1] - xi[n - 1]) / (2.0 * grid.dt);
            ratio_bound = ratio_bound.max((d / xi[n]).abs());
        }
    }
    A2Report {
        passes: monotone && positive,
        xi_samples: xi,
        monotone,
        positive,
        ratio_bound,
        vanishing_node: None,
    }
}

pub fn check_kernel(g: &RelaxationKernel, grid: &Grid1D) -> Result<KernelReport> {
    Ok(KernelReport {
        a1: check_a1(g, 50.0, 1e-3)?,
        a2: check_a2(g, grid, A2_TOLERANCE),
    })
}

/// Sampled bounds `a_min <= a(x) <= a_max` on the grid.
pub fn check_damping(a: &SpaceFunction, grid: &Grid1D) -> DampingReport {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..grid.nx {
        let v = a.eval(grid.x(i));
        lo = lo.min(v);
        hi = hi.max(v);
    }
    DampingReport {
        a_min: lo,
        a_max: hi,
        positive: lo > 0.0,
    }
}

/// Compares the second half of `[0, T]` against the first half for both
/// `h^2` and `h_t^2`. A quantity passes when it vanishes on the grid or
/// its tail maximum is at most 0.9 of its head maximum. `t = 0` is skipped
/// so that a singular slope at the origin does not dominate.
pub fn check_neumann_decay(h: &TimeFunction, grid: &Grid1D) -> NeumannDecayReport {
    let half = grid.horizon / 2.0;
    let (mut hh, mut ht, mut th, mut tt): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for n in 1..grid.nt {
        let t = grid.t(n);
        let v = h.eval(t).powi(2);
        let d = h.derivative_or_fd(t, grid.dt).powi(2);
        if t <= half {
            hh = hh.max(v);
            th = th.max(d);
        } else {
            ht = ht.max(v);
            tt = tt.max(d);
        }
    }
    let ok = |head: f64, tail: f64| (head == 0.0 && tail == 0.0) || tail <= 0.9 * head;
    NeumannDecayReport {
        decaying: ok(hh, ht) && ok(th, tt),
        h_sq_head_max: hh,
        h_sq_tail_max: ht,
        ht_sq_head_max: th,
        ht_sq_tail_max: tt,
    }
}
