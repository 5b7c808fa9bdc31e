//! Crank-Nicolson scheme for `u_tt = u_xx - int_0^t g(t - s) u_xx(s) ds`
//! with the memory integral discretized by the trapezoid rule.
//!
//! Writing `S^k` for the undivided second difference of level `k` and
//! `I^k` for the trapezoid memory term, every interior node satisfies
//!
//! ```text
//! (4/r^2)(U^{n+1} - 2U^n + U^{n-1}) = (S - I)^{n+1} + 2(S - I)^n + (S - I)^{n-1}
//! ```
//!
//! Regrouping the implicit and recent-history terms gives the tridiagonal
//! system `K U^{n+1} = 2K' U^n + K'' U^{n-1} - (older history) + D + N`.

use crate::damped::{damped_init, neumann_ghost};
use crate::error::{Result, WaveError};
use crate::functions::{sample_space_function, RelaxationKernel, TimeFunction};
use crate::grid::Grid1D;
use crate::problem::{EquationKind, ProblemSpec, SolutionField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViscoCoefficients {
    pub r: f64,
    /// Half time step.
    pub delta: f64,
    /// `delta g(0)`, the implicit memory weight.
    pub a: f64,
    /// `delta (g(0) + g(t_1))`
    pub b: f64,
    /// `delta (g(0) + 4 g(t_1) + 2 g(t_2))`
    pub c: f64,
}

pub fn visco_coefficients(g: &RelaxationKernel, grid: &Grid1D) -> ViscoCoefficients {
    let delta = 0.5 * grid.dt;
    let (g0, g1, g2) = (g.eval(0.0), g.eval(grid.t(1)), g.eval(grid.t(2)));
    ViscoCoefficients {
        r: grid.r,
        delta,
        a: delta * g0,
        b: delta * (g0 + g1),
        c: delta * (g0 + 4.0 * g1 + 2.0 * g2),
    }
}

/// Square tridiagonal matrix stored by diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    /// `sub[k]` sits in row `k + 1`.
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    /// `sup[k]` sits in row `k`.
    pub sup: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64>) -> Result<Self> {
        let m = diag.len();
        if m == 0 || sub.len() + 1 != m || sup.len() + 1 != m {
            return Err(WaveError::DimensionMismatch(format!(
                "tridiagonal bands of lengths {}, {}, {}",
                sub.len(),
                m,
                sup.len()
            )));
        }
        Ok(Self { sub, diag, sup })
    }

    /// Constant bands of size `m`.
    pub fn constant(m: usize, sub: f64, diag: f64, sup: f64) -> Self {
        Self {
            sub: vec![sub; m - 1],
            diag: vec![diag; m],
            sup: vec![sup; m - 1],
        }
    }

    pub fn size(&self) -> usize {
        self.diag.len()
    }

    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        let m = self.size();
        for k in 0..m {
            let mut v = self.diag[k] * x[k];
            if k > 0 {
                v += self.sub[k - 1] * x[k - 1];
            }
            if k + 1 < m {
                v += self.sup[k] * x[k + 1];
            }
            out[k] = v;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.size()];
        self.mul_vec_into(x, &mut out);
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let m = self.size();
        let mut a = vec![vec![0.0; m]; m];
        for k in 0..m {
            a[k][k] = self.diag[k];
            if k > 0 {
                a[k][k - 1] = self.sub[k - 1];
            }
            if k + 1 < m {
                a[k][k + 1] = self.sup[k];
            }
        }
        a
    }

    /// Rows where `|diag| <= |sub| + |sup|`. Empty means strictly
    /// diagonally dominant.
    pub fn weak_rows(&self) -> Vec<usize> {
        let m = self.size();
        (0..m)
            .filter(|&k| {
                let off = if k > 0 { self.sub[k - 1].abs() } else { 0.0 }
                    + if k + 1 < m { self.sup[k].abs() } else { 0.0 };
                self.diag[k].abs() <= off
            })
            .collect()
    }
}

/// LU factors of a tridiagonal matrix without pivoting, reusable across
/// right-hand sides.
#[derive(Debug, Clone)]
pub struct TridiagonalLu {
    sub: Vec<f64>,
    /// Eliminated superdiagonal `c'_k`.
    sup: Vec<f64>,
    /// Pivots.
    piv: Vec<f64>,
}

impl TridiagonalLu {
    pub fn factor(a: &Tridiagonal) -> Result<Self> {
        let m = a.size();
        let mut piv = Vec::with_capacity(m);
        let mut sup = Vec::with_capacity(m.saturating_sub(1));
        let mut p = a.diag[0];
        for k in 0..m {
            if k > 0 {
                p = a.diag[k] - a.sub[k - 1] * sup[k - 1];
            }
            if p == 0.0 || !p.is_finite() {
                return Err(WaveError::SingularSystem { row: k });
            }
            piv.push(p);
            if k + 1 < m {
                sup.push(a.sup[k] / p);
            }
        }
        Ok(Self {
            sub: a.sub.clone(),
            sup,
            piv,
        })
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let m = self.piv.len();
        x[0] /= self.piv[0];
        for k in 1..m {
            x[k] = (x[k] - self.sub[k - 1] * x[k - 1]) / self.piv[k];
        }
        for k in (0..m - 1).rev() {
            x[k] -= self.sup[k] * x[k + 1];
        }
    }
}

/// Thomas algorithm. Stops with the pivot row when elimination meets a zero
/// pivot; no pivoting is attempted.
pub fn thomas_solve(a: &Tridiagonal, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != a.size() {
        return Err(WaveError::DimensionMismatch(format!(
            "right-hand side has length {}, matrix has size {}",
            rhs.len(),
            a.size()
        )));
    }
    let lu = TridiagonalLu::factor(a)?;
    let mut x = rhs.to_vec();
    lu.solve_in_place(&mut x);
    Ok(x)
}

/// The four interior operators of the scheme, each of size `nx - 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ViscoMatrices {
    /// Implicit operator acting on `U^{n+1}`.
    pub k: Tridiagonal,
    /// Acts on `U^n` (with a factor 2 in the right-hand side).
    pub k1: Tridiagonal,
    /// Acts on `U^{n-1}`.
    pub k2: Tridiagonal,
    /// Undivided second difference, closed with the Neumann stencil.
    pub k3: Tridiagonal,
}

pub fn assemble_visco_matrices(coeffs: &ViscoCoefficients, nx: usize) -> Result<ViscoMatrices> {
    if nx < 4 {
        return Err(WaveError::InvalidGrid(format!(
            "nx must be at least 4, got {nx}"
        )));
    }
    let m = nx - 2;
    let q = 4.0 / (coeffs.r * coeffs.r);
    let (a, b, c) = (coeffs.a, coeffs.b, coeffs.c);
    let band = |sub: f64, diag: f64, last_sub: f64, last_diag: f64| {
        let mut t = Tridiagonal::constant(m, sub, diag, sub);
        t.sub[m - 2] = last_sub;
        t.diag[m - 1] = last_diag;
        t
    };
    // The ghost value (2 dx h - U_{N-2} + 4 U_{N-1}) / 3 turns the last
    // second difference into (2/3)(U_{N-2} - U_{N-1}) + (2 dx / 3) h.
    let two3 = 2.0 / 3.0;
    Ok(ViscoMatrices {
        k: band(-(1.0 - a), 2.0 * (1.0 + 0.5 * q - a), -two3 * (1.0 - a), q + two3 * (1.0 - a)),
        k1: band(1.0 - b, -2.0 * (1.0 - 0.5 * q - b), two3 * (1.0 - b), q - two3 * (1.0 - b)),
        k2: band(1.0 - c, -2.0 * (1.0 + 0.5 * q - c), two3 * (1.0 - c), -(q + two3 * (1.0 - c))),
        k3: band(1.0, -2.0, two3, -two3),
    })
}

/// Kernel values at the grid lags `g(t_k)`, `k = 0..=nt`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    lags: Vec<f64>,
    dt: f64,
}

impl KernelTable {
    pub fn new(g: &RelaxationKernel, grid: &Grid1D) -> Self {
        Self {
            lags: (0..=grid.nt).map(|k| g.eval(grid.t(k))).collect(),
            dt: grid.dt,
        }
    }

    #[inline]
    pub fn lag(&self, k: usize) -> f64 {
        self.lags[k]
    }

    pub fn lags(&self) -> &[f64] {
        &self.lags
    }

    /// Running trapezoid integral `int_0^{t_n} g` for `n = 0..nt`.
    pub fn cumulative_integral(&self) -> Vec<f64> {
        let n = self.lags.len() - 1;
        crate::quadrature::cumulative_trapezoid(&self.lags[..n], self.dt)
    }
}

/// History weights of step `n`: `w0` multiplies `U^0` and `w[m - 1]`
/// multiplies `U^m` for `m = 1..=n-2`.
pub fn memory_weights(n: usize, table: &KernelTable) -> (f64, Vec<f64>) {
    let lag3 = |k: usize| table.lag(k - 1) + 2.0 * table.lag(k) + table.lag(k + 1);
    let w0 = lag3(n);
    let w = (1..n.saturating_sub(1)).map(|m| lag3(n - m)).collect();
    (w0, w)
}

/// Trapezoid approximation of `int_0^{t_n} g(t_n - s) phi(s) ds` from the
/// samples `phi(t_m)`, `m = 0..=n`. This is the quadrature behind the
/// memory term of the scheme.
pub fn memory_trapezoid(table: &KernelTable, samples: &[f64], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let mut acc = 0.5 * (table.lag(n) * samples[0] + table.lag(0) * samples[n]);
    for m in 1..n {
        acc += table.lag(n - m) * samples[m];
    }
    acc * table.dt
}

/// Stored time levels of the solution together with the Neumann samples
/// used to close each of them.
#[derive(Debug, Clone)]
pub struct HistoryBuffer {
    nx: usize,
    values: Vec<f64>,
    h: Vec<f64>,
}

impl HistoryBuffer {
    pub fn new(nx: usize, capacity: usize) -> Self {
        Self {
            nx,
            values: Vec::with_capacity(nx * capacity),
            h: Vec::with_capacity(capacity),
        }
    }

    /// Appends a full column with its Neumann sample.
    pub fn push(&mut self, column: &[f64], h_val: f64) {
        assert_eq!(column.len(), self.nx);
        self.values.extend_from_slice(column);
        self.h.push(h_val);
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    #[inline]
    pub fn column(&self, m: usize) -> &[f64] {
        &self.values[m * self.nx..(m + 1) * self.nx]
    }

    pub fn h(&self, m: usize) -> f64 {
        self.h[m]
    }

    fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Everything the step needs besides the history.
#[derive(Debug, Clone)]
pub struct ViscoScheme {
    pub grid: Grid1D,
    pub coeffs: ViscoCoefficients,
    pub matrices: ViscoMatrices,
    pub table: KernelTable,
    pub dirichlet: TimeFunction,
    pub neumann: TimeFunction,
    /// Use only the `cap` most recent columns in the older-history sum.
    pub history_cap: Option<usize>,
    lu: TridiagonalLu,
}

impl ViscoScheme {
    pub fn new(
        grid: Grid1D,
        g: &RelaxationKernel,
        dirichlet: TimeFunction,
        neumann: TimeFunction,
        history_cap: Option<usize>,
    ) -> Result<Self> {
        let coeffs = visco_coefficients(g, &grid);
        let matrices = assemble_visco_matrices(&coeffs, grid.nx)?;
        let lu = TridiagonalLu::factor(&matrices.k)?;
        Ok(Self {
            grid,
            coeffs,
            matrices,
            table: KernelTable::new(g, &grid),
            dirichlet,
            neumann,
            history_cap,
            lu,
        })
    }

    /// Right-hand side of the system for `U^{n+1}`, interior entries.
    pub fn rhs(&self, history: &HistoryBuffer, n: usize) -> Vec<f64> {
        let grid = &self.grid;
        let (nx, m) = (grid.nx, grid.interior());
        let ViscoCoefficients { delta, a, b, c, .. } = self.coeffs;
        let (w0, w) = memory_weights(n, &self.table);
        let lo = match self.history_cap {
            Some(cap) => n.saturating_sub(1).saturating_sub(cap).max(1),
            None => 1,
        };

        // Older history enters only through K''' applied to a weighted sum.
        let mut acc = history.column(0)[1..nx - 1].iter().map(|v| w0 * v).collect::<Vec<_>>();
        let mut h_hist = w0 * history.h(0);
        let mut w_sum = 0.0;
        for mm in lo..n.saturating_sub(1) {
            let wm = 2.0 * w[mm - 1];
            w_sum += w[mm - 1];
            h_hist += wm * history.h(mm);
            for (s, v) in acc.iter_mut().zip(&history.column(mm)[1..nx - 1]) {
                *s += wm * v;
            }
        }

        let mut rhs = vec![0.0; m];
        let mut tmp = vec![0.0; m];
        self.matrices.k1.mul_vec_into(&history.column(n)[1..nx - 1], &mut rhs);
        for v in &mut rhs {
            *v *= 2.0;
        }
        self.matrices.k2.mul_vec_into(&history.column(n - 1)[1..nx - 1], &mut tmp);
        for (r, t) in rhs.iter_mut().zip(&tmp) {
            *r += t;
        }
        self.matrices.k3.mul_vec_into(&acc, &mut tmp);
        for (r, t) in rhs.iter_mut().zip(&tmp) {
            *r -= delta * t;
        }

        let t_n = grid.t(n);
        rhs[0] += (4.0 - a - 2.0 * b - c - delta * w0 - 2.0 * delta * w_sum)
            * self.dirichlet.eval(t_n);
        let dx = grid.dx;
        rhs[m - 1] += 2.0 * dx / 3.0
            * ((1.0 - a) * self.neumann.eval(grid.t(n + 1))
                + 2.0 * (1.0 - b) * history.h(n)
                + (1.0 - c) * history.h(n - 1))
            - 2.0 * delta * dx / 3.0 * h_hist;
        rhs
    }

    /// Interior values of `U^{n+1}`; `history` must hold levels `0..=n`.
    pub fn step(&self, history: &HistoryBuffer, n: usize) -> Result<Vec<f64>> {
        if n == 0 || history.len() < n + 1 {
            return Err(WaveError::DimensionMismatch(format!(
                "step {n} needs levels 0..={n}, history holds {}",
                history.len()
            )));
        }
        let mut x = self.rhs(history, n);
        self.lu.solve_in_place(&mut x);
        Ok(x)
    }

    /// Full column for level `n` from its interior values.
    pub fn close(&self, interior: &[f64], n: usize) -> Vec<f64> {
        let nx = self.grid.nx;
        let t = self.grid.t(n);
        let mut col = vec![0.0; nx];
        col[0] = self.dirichlet.eval(t);
        col[1..nx - 1].copy_from_slice(interior);
        col[nx - 1] = neumann_ghost(col[nx - 3], col[nx - 2], self.neumann.eval(t), self.grid.dx);
        col
    }
}

/// Runs the scheme over the whole grid.
pub fn visco_solve(spec: &ProblemSpec) -> Result<SolutionField> {
    spec.validate()?;
    if spec.kind != EquationKind::Viscoelastic {
        return Err(WaveError::InvalidProblem(
            "the Crank-Nicolson solver handles viscoelastic problems only".into(),
        ));
    }
    let grid = spec.grid;
    let g = spec.kernel.as_ref().unwrap();
    g.check_shape(&grid)?;
    let scheme = ViscoScheme::new(
        grid,
        g,
        spec.dirichlet.clone(),
        spec.neumann.clone(),
        spec.options.history_cap,
    )?;
    let nx = grid.nx;
    let phi = sample_space_function(&spec.phi, &grid);
    let psi = sample_space_function(&spec.psi, &grid);
    let (u0, u1) = damped_init(&phi, &psi, &grid, spec.options.init_order, &vec![0.0; nx])?;

    let mut history = HistoryBuffer::new(nx, grid.nt);
    history.push(&scheme.close(&u0[1..nx - 1], 0), spec.neumann.eval(0.0));
    history.push(&scheme.close(&u1[1..nx - 1], 1), spec.neumann.eval(grid.t(1)));
    let mut diverged = None;
    for n in 1..grid.nt - 1 {
        let next = scheme.step(&history, n)?;
        let col = scheme.close(&next, n + 1);
        let finite = col.iter().all(|v| v.is_finite());
        history.push(&col, spec.neumann.eval(grid.t(n + 1)));
        if !finite {
            diverged = Some(n + 1);
            break;
        }
    }
    let mut values = history.into_values();
    values.resize(nx * grid.nt, 0.0);
    let mut field = SolutionField::from_values(grid, values)?;
    if let Some(n) = diverged {
        field.mark_diverged(n);
    }
    Ok(field)
}
