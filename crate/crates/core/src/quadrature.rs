//! Small quadrature helpers shared by the energy, input-check and bound
//! modules.

/// Trapezoid rule over equally spaced samples.
pub fn trapezoid(samples: &[f64], step: f64) -> f64 {
    match samples.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = samples[1..n - 1].iter().sum();
            step * (0.5 * (samples[0] + samples[n - 1]) + inner)
        }
    }
}

/// Trapezoid rule for `f` on `[a, b]` with step at most `max_step`.
pub fn trapezoid_fn(f: impl Fn(f64) -> f64, a: f64, b: f64, max_step: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = ((b - a) / max_step).ceil().max(1.0) as usize;
    let h = (b - a) / n as f64;
    let mut sum = 0.5 * (f(a) + f(b));
    for k in 1..n {
        sum += f(a + k as f64 * h);
    }
    sum * h
}

/// Composite Simpson rule for `f` on `[a, b]` with step at most `max_step`.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, max_step: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut n = ((b - a) / max_step).ceil().max(2.0) as usize;
    if n % 2 == 1 {
        n += 1;
    }
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + k as f64 * h);
    }
    sum * h / 3.0
}

/// Running integral `int_0^{t_k} f` at each of the increasing `times`,
/// built from Simpson panels of width at most `max_step` between
/// consecutive times. `times[0]` is taken as the lower limit.
pub fn cumulative_simpson(f: impl Fn(f64) -> f64, times: &[f64], max_step: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    for (k, &t) in times.iter().enumerate() {
        if k > 0 {
            acc += simpson(&f, times[k - 1], t, max_step);
        }
        out.push(acc);
    }
    out
}

/// Running trapezoid integral of equally spaced samples.
pub fn cumulative_trapezoid(samples: &[f64], step: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(samples.len());
    let mut acc = 0.0;
    for (k, &v) in samples.iter().enumerate() {
        if k > 0 {
            acc += 0.5 * step * (samples[k - 1] + v);
        }
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_exact_for_linears() {
        let s: Vec<f64> = (0..11).map(|k| 2.0 * k as f64 * 0.1 + 1.0).collect();
        assert!((trapezoid(&s, 0.1) - 2.0).abs() < 1e-14);
        assert_eq!(trapezoid(&[3.0], 1.0), 0.0);
    }

    #[test]
    fn simpson_exact_for_cubics() {
        let v = simpson(|x| x * x * x - x, 0.0, 2.0, 0.5);
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn cumulative_matches_closed_form() {
        let times: Vec<f64> = (0..21).map(|k| k as f64 * 0.5).collect();
        let c = cumulative_simpson(|t| (-t).exp(), &times, 1e-2);
        for (t, v) in times.iter().zip(&c) {
            assert!((v - (1.0 - (-t).exp())).abs() < 1e-10);
        }
        let tr = cumulative_trapezoid(&[1.0, 1.0, 1.0], 0.5);
        assert_eq!(tr, vec![0.0, 0.5, 1.0]);
    }
}
