//! Theoretical decay envelopes and exponential fits of measured energies.
//!
//! The generic constants of the decay estimates are not known explicitly.
//! They are exposed as parameters, and the leading multiplier can be
//! calibrated so the envelope matches the measured energy at `t = 0`. The
//! envelopes therefore test the shape of the estimate (rate and domination),
//! not its constants.

use crate::error::{Result, WaveError};
use crate::energy::{discrete_gradient, EnergySeries};
use crate::functions::{sample_space_function, RelaxationKernel, TimeFunction};
use crate::problem::ProblemSpec;
use crate::quadrature::{cumulative_simpson, simpson, trapezoid};

/// Default relative headroom of a calibrated envelope over `e(0)`.
pub const DEFAULT_MARGIN: f64 = 0.05;

/// Sharp constant in `|u|^2 <= c_p |u_x|^2` for `u(0) = 0` on `(0, L)`.
pub fn poincare_constant(length: f64) -> f64 {
    (2.0 * length / std::f64::consts::PI).powi(2)
}

pub fn eps_zero(a_min: f64, a_max: f64, c_p: f64) -> Result<f64> {
    if !(a_min > 0.0) {
        return Err(WaveError::BoundUndefined(format!(
            "the damping lower bound a_min = {a_min:e} is not positive"
        )));
    }
    if !(a_max >= a_min && c_p > 0.0) {
        return Err(WaveError::ParameterDomain(format!(
            "need a_max >= a_min and c_p > 0, got a_max = {a_max}, c_p = {c_p}"
        )));
    }
    Ok((a_min / 4.0).min(a_min / (2.0 * a_max * a_max * c_p)))
}

/// Norms of the initial data entering the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DataNorms {
    /// `|u^0|^2`
    pub u0_sq: f64,
    /// `|u^0_x|^2`
    pub grad_u0_sq: f64,
    /// `|u^1|^2`
    pub u1_sq: f64,
}

impl DataNorms {
    /// Trapezoid norms of `phi`, `phi'` and `psi` on the grid.
    pub fn from_spec(spec: &ProblemSpec) -> Self {
        let grid = &spec.grid;
        let phi = sample_space_function(&spec.phi, grid);
        let psi = sample_space_function(&spec.psi, grid);
        let grad = discrete_gradient(&phi, grid.dx);
        let sq = |v: &[f64]| trapezoid(&v.iter().map(|x| x * x).collect::<Vec<_>>(), grid.dx);
        Self {
            u0_sq: sq(&phi),
            grad_u0_sq: sq(&grad),
            u1_sq: sq(&psi),
        }
    }

    /// `|u^0|^2_{H^1}` taken as `|u^0|^2 + |u^0_x|^2`.
    pub fn u0_h1_sq(&self) -> f64 {
        self.u0_sq + self.grad_u0_sq
    }
}

/// How the leading constant of an envelope is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Calibration {
    Fixed(f64),
    /// Match `e(0) (1 + margin)`.
    Initial { energy: f64, margin: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampedBoundParams {
    pub a_min: f64,
    pub a_max: f64,
    pub c_p: f64,
    pub eps0: f64,
    /// The `epsilon` in `(0, eps0]` fixing `v = u_t + epsilon u`.
    pub epsilon: f64,
    pub eta: f64,
    pub alpha: f64,
    pub delta: f64,
    pub delta1: f64,
    pub c: f64,
}

/// Optional overrides for [`DampedBoundParams::new`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DampedBoundOptions {
    pub epsilon: Option<f64>,
    pub eta: Option<f64>,
    pub alpha: Option<f64>,
    pub delta: Option<f64>,
    pub c: Option<f64>,
}

impl DampedBoundParams {
    /// Defaults: `epsilon = eps0`, `eta = epsilon / (4 c_p (1 + epsilon))`,
    /// `alpha = epsilon/2 - eta c_p (1 + epsilon)` (that is `eps0 / 4`),
    /// `delta = 1 / (10 c_p)` so that `delta1 = alpha / 2`, and `c = 1`.
    pub fn new(a_min: f64, a_max: f64, length: f64, opts: DampedBoundOptions) -> Result<Self> {
        let c_p = poincare_constant(length);
        let eps0 = eps_zero(a_min, a_max, c_p)?;
        let epsilon = opts.epsilon.unwrap_or(eps0);
        if !(epsilon > 0.0 && epsilon <= eps0) {
            return Err(WaveError::ParameterDomain(format!(
                "epsilon = {epsilon:e} must lie in (0, eps0 = {eps0:e}]"
            )));
        }
        let eta = opts.eta.unwrap_or(epsilon / (4.0 * c_p * (1.0 + epsilon)));
        let alpha = opts.alpha.unwrap_or(0.5 * epsilon - eta * c_p * (1.0 + epsilon));
        if !(alpha > 0.0 && alpha < 0.5 * eps0) {
            return Err(WaveError::ParameterDomain(format!(
                "alpha = {alpha:e} must lie in (0, eps0/2 = {:e})",
                0.5 * eps0
            )));
        }
        let delta = opts.delta.unwrap_or(0.1 / c_p);
        if !(delta > 0.0 && delta < 0.5 / c_p) {
            return Err(WaveError::ParameterDomain(format!(
                "delta = {delta:e} must lie in (0, 1/(2 c_p) = {:e})",
                0.5 / c_p
            )));
        }
        let delta1 = 4.0 * delta * alpha * c_p / (1.0 - 2.0 * delta * c_p);
        Ok(Self {
            a_min,
            a_max,
            c_p,
            eps0,
            epsilon,
            eta,
            alpha,
            delta,
            delta1,
            c: opts.c.unwrap_or(1.0),
        })
    }

    /// Net exponential rate `2 alpha - delta1` of the envelope.
    pub fn net_rate(&self) -> f64 {
        2.0 * self.alpha - self.delta1
    }
}

/// `H(t)` of the damped estimate at a single time; integrals by composite
/// Simpson with step at most `quad_dt`.
pub fn damped_h(t: f64, h: &TimeFunction, norms: &DataNorms, alpha: f64, quad_dt: f64) -> f64 {
    let ht = |s: f64| h.derivative_or_fd(s, quad_dt);
    let weighted = simpson(
        |s| (2.0 * alpha * s).exp() * (h.eval(s).powi(2) + ht(s).powi(2)),
        0.0,
        t,
        quad_dt,
    );
    let plain = simpson(|s| h.eval(s).powi(2), 0.0, t, quad_dt);
    norms.u0_h1_sq()
        + norms.u1_sq
        + weighted
        + (2.0 * alpha * t).exp() * h.eval(t).powi(2)
        + h.eval(0.0).powi(2)
        + plain
}

/// `H` at each of the increasing `times` (starting at 0).
pub fn damped_h_series(
    times: &[f64],
    h: &TimeFunction,
    norms: &DataNorms,
    alpha: f64,
    quad_dt: f64,
) -> Vec<f64> {
    let ht = |s: f64| h.derivative_or_fd(s, quad_dt);
    let weighted = cumulative_simpson(
        |s| (2.0 * alpha * s).exp() * (h.eval(s).powi(2) + ht(s).powi(2)),
        times,
        quad_dt,
    );
    let plain = cumulative_simpson(|s| h.eval(s).powi(2), times, quad_dt);
    let base = norms.u0_h1_sq() + norms.u1_sq + h.eval(0.0).powi(2);
    times
        .iter()
        .enumerate()
        .map(|(k, &t)| base + weighted[k] + (2.0 * alpha * t).exp() * h.eval(t).powi(2) + plain[k])
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundParams {
    Damped(DampedBoundParams),
    Viscoelastic(ViscoBoundParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCurve {
    pub times: Vec<f64>,
    pub envelope: Vec<f64>,
    pub params: BoundParams,
    /// `H(t_n)` for the damped bound, `H~(t_n)` for the viscoelastic one.
    pub h_samples: Vec<f64>,
    /// The multiplier after calibration (`c` or `alpha_3`).
    pub constant: f64,
}

impl BoundCurve {
    /// Pointwise `envelope >= energy` on the samples of `series`, which must
    /// share the curve's time grid.
    pub fn dominates(&self, series: &EnergySeries) -> Result<bool> {
        if series.times.len() != self.times.len()
            || series.times.iter().zip(&self.times).any(|(a, b)| (a - b).abs() > 1e-9 * (1.0 + b.abs()))
        {
            return Err(WaveError::DimensionMismatch(
                "bound and energy are sampled at different times".into(),
            ));
        }
        Ok(self.envelope.iter().zip(&series.values).all(|(b, e)| b >= e))
    }

    /// First sample index where the energy exceeds the envelope.
    pub fn first_violation(&self, series: &EnergySeries) -> Option<usize> {
        self.envelope.iter().zip(&series.values).position(|(b, e)| b < e)
    }
}

fn calibrate(cal: Calibration, shape0: f64) -> Result<f64> {
    match cal {
        Calibration::Fixed(c) => Ok(c),
        Calibration::Initial { energy, margin } => {
            if !(shape0 > 0.0) {
                return Err(WaveError::BoundUndefined(
                    "the envelope shape vanishes at t = 0 and cannot be calibrated".into(),
                ));
            }
            Ok(energy * (1.0 + margin) / shape0)
        }
    }
}

/// `c e^{-2 alpha t} e^{delta1 t} H(t)` on `times`.
pub fn damped_bound_curve(
    params: &DampedBoundParams,
    h: &TimeFunction,
    norms: &DataNorms,
    times: &[f64],
    quad_dt: f64,
    calibration: Option<Calibration>,
) -> Result<BoundCurve> {
    if times.is_empty() {
        return Err(WaveError::DimensionMismatch("no sample times".into()));
    }
    let hs = damped_h_series(times, h, norms, params.alpha, quad_dt);
    let shape: Vec<f64> = times
        .iter()
        .zip(&hs)
        .map(|(t, hv)| (-(2.0 * params.alpha - params.delta1) * t).exp() * hv)
        .collect();
    let c = match calibration {
        Some(cal) => calibrate(cal, shape[0])?,
        None => params.c,
    };
    let mut p = *params;
    p.c = c;
    Ok(BoundCurve {
        times: times.to_vec(),
        envelope: shape.iter().map(|s| c * s).collect(),
        params: BoundParams::Damped(p),
        h_samples: hs,
        constant: c,
    })
}

/// User constants of the viscoelastic envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViscoBoundParams {
    pub epsilon: f64,
    pub eps1: f64,
    pub eps2: f64,
    /// Generic constant `c` of the estimate.
    pub c: f64,
    /// Also absorbs the undefined constant `M`.
    pub kappa: f64,
    pub xi_floor: f64,
    /// Defaults to `epsilon c (1 + 2 g(0))` when `None`.
    pub c_eps: Option<f64>,
    /// The `L` of the integrability condition.
    pub l: f64,
    pub alpha2: f64,
}

impl Default for ViscoBoundParams {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            eps1: 0.1,
            eps2: 0.1,
            c: 1.0,
            kappa: 0.5,
            xi_floor: 1e-3,
            c_eps: None,
            l: 0.25,
            alpha2: 1.0,
        }
    }
}

impl ViscoBoundParams {
    pub fn c_eps_for(&self, g: &RelaxationKernel) -> f64 {
        self.c_eps
            .unwrap_or(self.epsilon * self.c * (1.0 + 2.0 * g.eval(0.0)))
    }

    /// `alpha_3 = alpha_2 / (1 - 2 epsilon c)`.
    pub fn alpha3(&self) -> Result<f64> {
        let d = 1.0 - 2.0 * self.epsilon * self.c;
        if !(d > 0.0) {
            return Err(WaveError::ParameterDomain(format!(
                "1 - 2 epsilon c = {d:e} must be positive"
            )));
        }
        Ok(self.alpha2 / d)
    }

    /// Factor multiplying `int (kappa xi - c_eps)` in the exponent.
    pub fn exponent_factor(&self) -> Result<f64> {
        let d = 1.0 - 2.0 * self.epsilon * self.c;
        if !(d > 0.0) {
            return Err(WaveError::ParameterDomain(format!(
                "1 - 2 epsilon c = {d:e} must be positive"
            )));
        }
        Ok(2.0 * self.epsilon * self.c / d - 1.0)
    }
}

/// `max(-g'/g, floor)`; the floor alone where `g` vanishes.
pub fn xi(g: &RelaxationKernel, t: f64, floor: f64, step: f64) -> f64 {
    let v = g.eval(t);
    if v > 0.0 {
        (-g.derivative_or_fd(t, step) / v).max(floor)
    } else {
        floor
    }
}

/// `int_0^t (kappa xi(s) - c_eps) ds` at each of `times`, by Simpson with
/// step at most `quad_dt`.
pub fn exponent_integral(
    g: &RelaxationKernel,
    params: &ViscoBoundParams,
    times: &[f64],
    quad_dt: f64,
) -> Vec<f64> {
    let c_eps = params.c_eps_for(g);
    cumulative_simpson(
        |s| params.kappa * xi(g, s, params.xi_floor, quad_dt) - c_eps,
        times,
        quad_dt,
    )
}

/// `alpha_3 e^{E(t)} H~(t)` on `times`, where `E` is the exponent of the
/// viscoelastic estimate and `H~` collects the data and boundary terms.
///
/// The time integrals inside `H~` use the trapezoid rule on `times`
/// refined so that steps do not exceed `quad_dt`; their convolutions make
/// this `O(N^2)` in the number of refined samples.
pub fn visco_envelope(
    params: &ViscoBoundParams,
    g: &RelaxationKernel,
    h: &TimeFunction,
    norms: &DataNorms,
    times: &[f64],
    quad_dt: f64,
    calibration: Option<Calibration>,
) -> Result<BoundCurve> {
    let alpha3 = params.alpha3()?;
    let factor = params.exponent_factor()?;
    if times.len() < 2 {
        return Err(WaveError::DimensionMismatch("need at least two sample times".into()));
    }
    let eps = params.epsilon;
    let c = params.c;
    let q = 1.0 / (4.0 * eps);

    // refined grid that contains every sample time
    let mut fine = vec![times[0]];
    let mut picks = vec![0usize];
    for w in times.windows(2) {
        let sub = ((w[1] - w[0]) / quad_dt).ceil().max(1.0) as usize;
        for j in 1..=sub {
            fine.push(w[0] + (w[1] - w[0]) * j as f64 / sub as f64);
        }
        picks.push(fine.len() - 1);
    }
    let n = fine.len();
    let step = quad_dt.min(times[1] - times[0]);

    let lambda = exponent_integral(g, params, &fine, quad_dt);
    let c_eps = params.c_eps_for(g);
    let xis: Vec<f64> = fine.iter().map(|&s| xi(g, s, params.xi_floor, step)).collect();
    let hv: Vec<f64> = fine.iter().map(|&s| h.eval(s)).collect();
    let h_sq: Vec<f64> = hv.iter().map(|v| v * v).collect();
    let ht_sq: Vec<f64> = fine.iter().map(|&s| h.derivative_or_fd(s, step).powi(2)).collect();

    // convolutions on the nonuniform refined grid, trapezoid in tau
    let conv = |k: usize, f: &dyn Fn(usize, usize) -> f64| -> f64 {
        let mut acc = 0.0;
        for j in 1..=k {
            acc += 0.5 * (fine[j] - fine[j - 1]) * (f(k, j) + f(k, j - 1));
        }
        acc
    };
    let g_h2: Vec<f64> = (0..n).map(|k| conv(k, &|k, j| g.eval(fine[k] - fine[j]) * h_sq[j])).collect();
    let dg_h2: Vec<f64> = (0..n)
        .map(|k| conv(k, &|k, j| g.derivative_or_fd(fine[k] - fine[j], step) * h_sq[j]))
        .collect();
    let g_circ_h: Vec<f64> = (0..n)
        .map(|k| conv(k, &|k, j| g.eval(fine[k] - fine[j]) * (hv[k] - hv[j]).powi(2)))
        .collect();

    let source: Vec<f64> = (0..n)
        .map(|k| {
            (q * g.eval(0.0) + c * params.eps1 * xis[k] + c * params.eps2 * xis[k]) * h_sq[k]
                + q * ht_sq[k]
                + c * params.eps1 * xis[k] * g_h2[k]
                - q * dg_h2[k]
                + c * params.eps2 * xis[k] * g_circ_h[k]
        })
        .collect();
    let l = params.l;
    let h_tilde: Vec<f64> = (0..n)
        .map(|k| q * ((1.0 - l).powi(2) + 1.0) * h_sq[k] + q * (1.0 - l) * g_circ_h[k])
        .collect();

    let rate: Vec<f64> = xis.iter().map(|x| params.kappa * x - c_eps).collect();
    let e_lambda: Vec<f64> = lambda.iter().map(|v| v.exp()).collect();
    let integrate = |f: &dyn Fn(usize) -> f64| -> Vec<f64> {
        let mut out = Vec::with_capacity(n);
        let mut acc = 0.0;
        out.push(0.0);
        for k in 1..n {
            acc += 0.5 * (fine[k] - fine[k - 1]) * (f(k) + f(k - 1));
            out.push(acc);
        }
        out
    };
    let i_source = integrate(&|k| e_lambda[k] * source[k]);
    let i_h = integrate(&|k| rate[k] * e_lambda[k] * h_sq[k]);
    let i_ht = integrate(&|k| rate[k] * e_lambda[k] * h_tilde[k]);

    let xi0 = xis[0];
    let c0 = hv[0] * hv[0]
        + 0.5 * (1.0 + c * c) * norms.grad_u0_sq
        + 0.5 * params.eps1 * xi0 * norms.u0_sq
        + 0.5 * (1.0 + params.eps1 * xi0) * norms.u1_sq;

    let mut h_big = Vec::with_capacity(times.len());
    let mut shape = Vec::with_capacity(times.len());
    for &k in &picks {
        let ht = i_source[k]
            + q * e_lambda[k] * h_sq[k]
            + q * i_h[k]
            + q * e_lambda[k] * h_tilde[k]
            + q * i_ht[k]
            + c0;
        h_big.push(ht);
        shape.push((factor * lambda[k]).exp() * ht);
    }
    let constant = match calibration {
        Some(cal) => calibrate(cal, shape[0])?,
        None => alpha3,
    };
    Ok(BoundCurve {
        times: times.to_vec(),
        envelope: shape.iter().map(|s| constant * s).collect(),
        params: BoundParams::Viscoelastic(*params),
        h_samples: h_big,
        constant,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Fitted rate in `e ~ exp(intercept - lambda t)`.
    pub lambda: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    pub r_squared: f64,
    pub samples: usize,
}

/// Least-squares line through `(t, ln e)` over the window.
pub fn decay_fit(series: &EnergySeries, t_a: f64, t_b: f64) -> Result<DecayFit> {
    let pts = series.window(t_a, t_b);
    if pts.len() < 2 {
        return Err(WaveError::FitDomain(format!(
            "window [{t_a}, {t_b}] holds {} samples; at least two are needed",
            pts.len()
        )));
    }
    if let Some((t, v)) = pts.iter().find(|p| !(p.1 > 0.0)) {
        return Err(WaveError::FitDomain(format!(
            "energy {v:e} at t = {t} is not positive; shrink the window"
        )));
    }
    let m = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / m;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (t, v) in &pts {
        let (dx, dy) = (t - mt, v.ln() - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(DecayFit {
        lambda: -slope,
        intercept: my - slope * mt,
        window: (t_a, t_b),
        r_squared,
        samples: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::EnergyKind;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn poincare_examples() {
        assert!((poincare_constant(PI / 2.0) - 1.0).abs() < 1e-15);
        assert!((poincare_constant(PI) - 4.0).abs() < 1e-14);
        assert!((poincare_constant(10.0 * PI) - 400.0).abs() < 1e-11);
        // c_p is the reciprocal of the first mixed eigenvalue
        let b = crate::oracle::mixed_eigenpairs(3.0, 1).unwrap();
        assert!((poincare_constant(3.0) * b.lambdas[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eps_zero_examples() {
        assert_eq!(eps_zero(1.0, 1.0, 1.0).unwrap(), 0.25);
        assert_eq!(eps_zero(4.0, 4.0, 1.0).unwrap(), 0.125);
        let a_min = (-10.0 * PI).exp();
        let e = eps_zero(a_min, 1.0, 400.0).unwrap();
        assert_eq!(e, a_min / 800.0);
        assert!(matches!(eps_zero(0.0, 1.0, 1.0), Err(WaveError::BoundUndefined(_))));
    }

    proptest! {
        #[test]
        fn eps_zero_monotone(a in 0.01f64..5.0, da in 0.0f64..5.0, b in 0.0f64..5.0, cp in 0.1f64..100.0, dc in 0.0f64..50.0) {
            let e = eps_zero(a, a + b + da, cp).unwrap();
            prop_assert!(eps_zero(a + da.min(b), a + b + da, cp).unwrap() >= e);
            prop_assert!(eps_zero(a, a + b + da + 1.0, cp).unwrap() <= e);
            prop_assert!(eps_zero(a, a + b + da, cp + dc).unwrap() <= e);
        }
    }

    #[test]
    fn default_parameters() {
        let p = DampedBoundParams::new(1.0, 1.0, PI / 2.0, DampedBoundOptions::default()).unwrap();
        assert_eq!(p.eps0, 0.25);
        assert!((p.alpha - p.eps0 / 4.0).abs() < 1e-15);
        assert!((p.delta1 - p.alpha / 2.0).abs() < 1e-15);
        assert!(p.net_rate() > 0.0);
        let bad = DampedBoundOptions { alpha: Some(0.2), ..Default::default() };
        assert!(DampedBoundParams::new(1.0, 1.0, PI / 2.0, bad).is_err());
        let bad = DampedBoundOptions { delta: Some(0.6), ..Default::default() };
        assert!(DampedBoundParams::new(1.0, 1.0, PI / 2.0, bad).is_err());
        assert!(DampedBoundParams::new(0.0, 1.0, 1.0, DampedBoundOptions::default()).is_err());
    }

    #[test]
    fn h_closed_form() {
        let h = TimeFunction::ExpDecay { rate: 1.0 };
        let norms = DataNorms::default();
        let alpha = 0.25;
        for t in [0.0f64, 0.5, 2.0, 7.5] {
            let weighted = 4.0 / 3.0 * (1.0 - (-1.5 * t).exp());
            let plain = 0.5 * (1.0 - (-2.0 * t).exp());
            let exact = weighted + (0.5 * t).exp() * (-2.0 * t).exp() + 1.0 + plain;
            assert!((damped_h(t, &h, &norms, alpha, 1e-3) - exact).abs() < 1e-8);
        }
        let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.5).collect();
        let series = damped_h_series(&times, &h, &norms, alpha, 1e-3);
        for (t, v) in times.iter().zip(&series) {
            assert!((v - damped_h(*t, &h, &norms, alpha, 1e-3)).abs() < 1e-10);
        }
        assert!(series.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }

    #[test]
    fn h_of_zero_input() {
        let z = DataNorms::default();
        assert_eq!(damped_h(3.0, &TimeFunction::Zero, &z, 0.1, 1e-2), 0.0);
        let n = DataNorms { u0_sq: 1.0, grad_u0_sq: 2.0, u1_sq: 0.5 };
        assert_eq!(damped_h(3.0, &TimeFunction::Zero, &n, 0.1, 1e-2), 3.5);
    }

    #[test]
    fn envelope_exponent_arithmetic() {
        let mut p = DampedBoundParams::new(1.0, 1.0, PI / 2.0, DampedBoundOptions::default()).unwrap();
        p.alpha = 0.1;
        p.delta1 = 0.01;
        let n = DataNorms { u0_sq: 0.0, grad_u0_sq: 1.0, u1_sq: 0.0 };
        let times: Vec<f64> = (0..50).map(|k| k as f64 * 0.2).collect();
        let b = damped_bound_curve(&p, &TimeFunction::Zero, &n, &times, 1e-2, None).unwrap();
        for (t, v) in times.iter().zip(&b.envelope) {
            assert!((v - (-0.19 * t).exp()).abs() < 1e-14);
        }
        let z = damped_bound_curve(&p, &TimeFunction::Zero, &DataNorms::default(), &times, 1e-2, None).unwrap();
        assert!(z.envelope.iter().all(|v| *v == 0.0));
        let cal = damped_bound_curve(&p, &TimeFunction::Zero, &n, &times, 1e-2, Some(Calibration::Initial { energy: 2.0, margin: 0.5 })).unwrap();
        assert!((cal.envelope[0] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn exponent_integral_closed_forms() {
        let times: Vec<f64> = (0..=10).map(|k| k as f64).collect();
        let p = ViscoBoundParams { kappa: 1.0, c_eps: Some(0.0), xi_floor: 0.0, ..Default::default() };
        let e = exponent_integral(&RelaxationKernel::Power { p: 10.0 }, &p, &times, 1e-3);
        for (t, v) in times.iter().zip(&e) {
            assert!((v - 10.0 * (t + 1.0).ln()).abs() < 1e-6);
        }
        let p = ViscoBoundParams { kappa: 0.7, c_eps: Some(0.2), ..Default::default() };
        let e = exponent_integral(&RelaxationKernel::ExpShift, &p, &times, 1e-3);
        for (t, v) in times.iter().zip(&e) {
            assert!((v - 0.5 * t).abs() < 1e-10);
        }
    }

    #[test]
    fn visco_envelope_decays_without_input() {
        let p = ViscoBoundParams::default();
        let g = RelaxationKernel::ExpShift;
        let n = DataNorms { u0_sq: 1.0, grad_u0_sq: 1.0, u1_sq: 1.0 };
        let times: Vec<f64> = (0..=100).map(|k| k as f64 * 0.5).collect();
        let b = visco_envelope(&p, &g, &TimeFunction::Zero, &n, &times, 0.1, None).unwrap();
        assert!(b.envelope.windows(2).all(|w| w[1] < w[0]));
        // rate (2 eps c / (1 - 2 eps c) - 1)(kappa - c_eps)
        let rate = p.exponent_factor().unwrap() * (p.kappa - p.c_eps_for(&g));
        let fit = (b.envelope[100] / b.envelope[50]).ln() / 25.0;
        assert!((fit - rate).abs() < 1e-9);
        let bad = ViscoBoundParams { epsilon: 0.6, ..Default::default() };
        assert!(matches!(
            visco_envelope(&bad, &g, &TimeFunction::Zero, &n, &times, 0.1, None),
            Err(WaveError::ParameterDomain(_))
        ));
    }

    fn series(times: Vec<f64>, values: Vec<f64>) -> EnergySeries {
        let n = times.len();
        EnergySeries {
            times,
            values,
            kind: EnergyKind::Damped,
            components: None,
            levels: (0..n).collect(),
            warnings: vec![],
        }
    }

    #[test]
    fn fit_examples() {
        let t: Vec<f64> = (0..200).map(|k| k as f64 * 0.5).collect();
        let s = series(t.clone(), t.iter().map(|x| (-0.1 * x).exp()).collect());
        let f = decay_fit(&s, 0.0, 100.0).unwrap();
        assert!((f.lambda - 0.1).abs() < 1e-10);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        let s = series(t.clone(), vec![2.0; 200]);
        let f = decay_fit(&s, 10.0, 50.0).unwrap();
        assert_eq!(f.lambda, 0.0);
        let s = series(t.clone(), t.iter().map(|x| x - 5.0).collect());
        assert!(matches!(decay_fit(&s, 0.0, 20.0), Err(WaveError::FitDomain(_))));
    }

    proptest! {
        #[test]
        fn fit_recovers_synthetic_rates(rate in -1.0f64..1.0, amp in 0.1f64..10.0) {
            let t: Vec<f64> = (0..100).map(|k| k as f64 * 0.3).collect();
            let s = series(t.clone(), t.iter().map(|x| amp * (-rate * x).exp()).collect());
            let f = decay_fit(&s, 0.0, 30.0).unwrap();
            prop_assert!((f.lambda - rate).abs() < 1e-10);
            prop_assert!((0.0..=1.0).contains(&f.r_squared));
        }
    }
}
