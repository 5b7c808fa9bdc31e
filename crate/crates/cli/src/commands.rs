use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use wavelab::bounds::{
    damped_bound_curve, decay_fit, visco_envelope, BoundCurve, Calibration, DampedBoundParams,
    DataNorms, DecayFit,
};
use wavelab::damped::damped_solve;
use wavelab::energy::{
    energy_classical, energy_damped, energy_modified_strided, energy_rate_residual, EnergyComponents,
    EnergySeries,
};
use wavelab::inputs::{check_damping, check_kernel, check_neumann_decay};
use wavelab::oracle::{ModalExpansion, DEFAULT_MODES};
use wavelab::viscoelastic::visco_solve;
use wavelab::{EquationKind, Grid1D, ProblemSpec, SolutionField, WaveError};

use crate::config::{ConfigError, RunConfig};
use crate::csvio::SeriesTable;
use crate::svg::{line_chart, Series};

/// Environment variable holding the sweep worker count.
pub const WORKERS_ENV: &str = "WAVELAB_WORKERS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Solver(#[from] WaveError),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self::Io(format!("{}: {e}", path.display()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Warn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

impl Check {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            status: if pass { CheckStatus::Pass } else { CheckStatus::Warn },
            detail,
        }
    }

    pub fn status_text(&self) -> &'static str {
        match self.status {
            CheckStatus::Pass => "pass",
            CheckStatus::Warn => "warn",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub config: Vec<(String, String)>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub diverged_at: Option<usize>,
    pub wall_time: Duration,
    pub files: Vec<PathBuf>,
    pub series: Option<EnergySeries>,
    pub fit: Option<DecayFit>,
    pub bound: Option<BoundCurve>,
}

impl RunReport {
    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }
}

/// Assumption checks for the configured problem. Never fails the run.
pub fn assumption_checks(spec: &ProblemSpec) -> Vec<Check> {
    let grid = &spec.grid;
    let mut out = Vec::new();
    if spec.kind != EquationKind::Viscoelastic {
        out.push(Check::new("cfl", grid.r <= 1.0 + 1e-12, format!("r = {:.6}", grid.r)));
    }
    if let Some(a) = &spec.damping {
        let d = check_damping(a, grid);
        out.push(Check::new(
            "damping_bounds",
            d.positive,
            format!("a_min = {:.6e}, a_max = {:.6e}", d.a_min, d.a_max),
        ));
    }
    if let Some(g) = &spec.kernel {
        match check_kernel(g, grid) {
            Ok(k) => {
                let mut detail = format!("int g = {:.6e}, L_max = {:.6e}", k.a1.integral_estimate, k.a1.l_max);
                if let Some(note) = &k.a1.note {
                    detail.push_str(&format!(" ({note})"));
                }
                out.push(Check::new("kernel_a1", k.a1.passes, detail));
                let (lo, hi) = k
                    .a2
                    .xi_samples
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(*x), h.max(*x)));
                let mut detail = format!(
                    "xi in [{lo:.6e}, {hi:.6e}], positive {}, nonincreasing {}",
                    k.a2.positive, k.a2.monotone
                );
                if let Some(i) = k.a2.vanishing_node {
                    detail.push_str(&format!(", g vanishes at t = {:.6}", grid.t(i)));
                }
                out.push(Check::new("kernel_a2", k.a2.passes, detail));
            }
            Err(e) => out.push(Check::new("kernel_a1", false, e.to_string())),
        }
    }
    if !spec.neumann.is_zero() {
        let n = check_neumann_decay(&spec.neumann, grid);
        out.push(Check::new(
            "neumann_decay",
            n.decaying,
            format!(
                "max h^2 {:.3e} -> {:.3e}, max h_t^2 {:.3e} -> {:.3e} (first -> second half)",
                n.h_sq_head_max, n.h_sq_tail_max, n.ht_sq_head_max, n.ht_sq_tail_max
            ),
        ));
    }
    for w in spec.warnings() {
        out.push(Check::new("compatibility", false, w));
    }
    out
}

pub fn solve(spec: &ProblemSpec) -> Result<SolutionField, WaveError> {
    match spec.kind {
        EquationKind::Viscoelastic => visco_solve(spec),
        _ => damped_solve(spec),
    }
}

fn subsample(series: EnergySeries, stride: usize) -> EnergySeries {
    if stride == 1 {
        return series;
    }
    let n = series.len();
    let mut picks: Vec<usize> = (0..n).step_by(stride).collect();
    if *picks.last().unwrap() != n - 1 {
        picks.push(n - 1);
    }
    let take = |v: &[f64]| picks.iter().map(|&k| v[k]).collect::<Vec<_>>();
    EnergySeries {
        times: take(&series.times),
        values: take(&series.values),
        kind: series.kind,
        components: series.components.as_ref().map(|c| EnergyComponents {
            kinetic: take(&c.kinetic),
            potential: take(&c.potential),
            history: take(&c.history),
        }),
        levels: picks.iter().map(|&k| series.levels[k]).collect(),
        warnings: series.warnings,
    }
}

fn truncate(series: &mut EnergySeries, len: usize) {
    series.times.truncate(len);
    series.values.truncate(len);
    series.levels.truncate(len);
    if let Some(c) = &mut series.components {
        c.kinetic.truncate(len);
        c.potential.truncate(len);
        c.history.truncate(len);
    }
}

fn energy_of(field: &SolutionField, spec: &ProblemSpec, stride: usize) -> Result<EnergySeries, WaveError> {
    match spec.kind {
        EquationKind::Classical => energy_classical(field).map(|s| subsample(s, stride)),
        EquationKind::Damped => energy_damped(field).map(|s| subsample(s, stride)),
        EquationKind::Viscoelastic => energy_modified_strided(field, spec.kernel.as_ref().unwrap(), stride),
    }
}

fn bound_for(cfg: &RunConfig, series: &EnergySeries) -> Result<BoundCurve, WaveError> {
    let b = cfg.bound.as_ref().unwrap();
    let spec = &cfg.spec;
    let norms = DataNorms::from_spec(spec);
    let cal = b.calibrate.then_some(Calibration::Initial { energy: series.initial(), margin: b.margin });
    match spec.kind {
        EquationKind::Damped => {
            let d = check_damping(spec.damping.as_ref().unwrap(), &spec.grid);
            let params = DampedBoundParams::new(d.a_min, d.a_max, spec.grid.length, b.damped)?;
            damped_bound_curve(&params, &spec.neumann, &norms, &series.times, b.quad_dt.unwrap_or(1e-3), cal)
        }
        EquationKind::Viscoelastic => visco_envelope(
            &b.visco,
            spec.kernel.as_ref().unwrap(),
            &spec.neumann,
            &norms,
            &series.times,
            b.quad_dt.unwrap_or(spec.grid.dt),
            cal,
        ),
        EquationKind::Classical => Err(WaveError::BoundUndefined(
            "the classical equation has no decay bound".into(),
        )),
    }
}

/// Solves, measures and writes `<name>.csv` (and `<name>.svg`) under the
/// output directory, resolved against `base` when relative.
pub fn run(cfg: &RunConfig, base: &Path) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let spec = &cfg.spec;
    let checks = assumption_checks(spec);
    let field = solve(spec)?;
    let mut diverged_at = field.diverged_at;
    let mut notes = Vec::new();

    let mut series = if field.completed_levels() >= 2 {
        Some(energy_of(&field, spec, cfg.energy_stride)?)
    } else {
        notes.push("fewer than two levels completed; no energy samples".to_string());
        None
    };
    // a finite field can still overflow once squared
    if let Some(s) = &mut series {
        if let Some(j) = s.values.iter().position(|v| !v.is_finite()) {
            let level = s.levels[j];
            diverged_at = Some(diverged_at.map_or(level, |n| n.min(level)));
            notes.push(format!("energy overflowed at time level {level}"));
            truncate(s, j);
            if j < 2 {
                series = None;
            }
        }
    }
    if let Some(s) = &series {
        notes.extend(s.warnings.iter().cloned());
    }

    let residual = match (&series, cfg.residual) {
        (Some(s), true) => {
            let full = energy_of(&field, spec, 1)?;
            let r = energy_rate_residual(&field, &full, spec)?;
            // residual of [t_{n-1}, t_n] is reported on row n
            Some(s.levels.iter().map(|&n| if n == 0 { f64::NAN } else { r[n - 1] }).collect::<Vec<_>>())
        }
        _ => None,
    };

    let bound = match (&series, &cfg.bound) {
        (Some(s), Some(_)) => match bound_for(cfg, s) {
            Ok(b) => Some(b),
            Err(e) => {
                notes.push(format!("bound unavailable: {e}"));
                None
            }
        },
        _ => None,
    };

    let fit = match (&series, cfg.fit) {
        (Some(s), Some((a, b))) => match decay_fit(s, a, b) {
            Ok(f) => Some(f),
            Err(e) => {
                notes.push(format!("decay fit unavailable: {e}"));
                None
            }
        },
        _ => None,
    };

    let config: Vec<(String, String)> = cfg.entries.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    let mut meta: Vec<(String, String)> = config.iter().map(|(k, v)| (format!("config.{k}"), v.clone())).collect();
    let g = &spec.grid;
    meta.push(("grid.nt".into(), g.nt.to_string()));
    meta.push(("grid.dx".into(), format!("{:.16e}", g.dx)));
    meta.push(("grid.dt".into(), format!("{:.16e}", g.dt)));
    meta.push(("grid.r".into(), format!("{:.16e}", g.r)));
    for c in &checks {
        meta.push((format!("check.{}", c.name), format!("{}: {}", c.status_text(), c.detail)));
    }
    meta.push(("diverged".into(), diverged_at.is_some().to_string()));
    if let Some(n) = diverged_at {
        meta.push(("diverged_at_level".into(), n.to_string()));
    }
    if let Some(f) = &fit {
        meta.push(("fit.lambda".into(), format!("{:.16e}", f.lambda)));
        meta.push(("fit.r_squared".into(), format!("{:.16e}", f.r_squared)));
        meta.push(("fit.window".into(), format!("{} {}", f.window.0, f.window.1)));
    }
    if let Some(b) = &bound {
        meta.push(("bound.constant".into(), format!("{:.16e}", b.constant)));
    }
    for (k, n) in notes.iter().enumerate() {
        meta.push((format!("note.{k}"), n.clone()));
    }
    meta.push(("wall_time_s".into(), format!("{:.3}", start.elapsed().as_secs_f64())));

    let mut table = SeriesTable::new(meta);
    if let Some(s) = &series {
        table.push_column("t", s.times.clone());
        table.push_column("energy", s.values.clone());
        if let Some(c) = &s.components {
            table.push_column("kinetic", c.kinetic.clone());
            table.push_column("potential", c.potential.clone());
            table.push_column("history", c.history.clone());
        }
        if let Some(b) = &bound {
            table.push_column("bound", b.envelope.clone());
        }
        if let Some(r) = residual {
            table.push_column("residual", r);
        }
    } else {
        table.push_column("t", Vec::new());
        table.push_column("energy", Vec::new());
    }

    let dir = resolve(base, &cfg.output.dir);
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let csv_path = dir.join(format!("{}.csv", cfg.output.name));
    table.write(&csv_path).map_err(|e| CliError::io(&csv_path, e))?;
    let mut files = vec![csv_path];
    if cfg.output.svg {
        let svg_path = dir.join(format!("{}.svg", cfg.output.name));
        let empty: &[f64] = &[];
        let (t, e) = series.as_ref().map_or((empty, empty), |s| (&s.times[..], &s.values[..]));
        let mut lines = vec![Series { label: "energy", x: t, y: e }];
        if let Some(b) = &bound {
            lines.push(Series { label: "bound", x: &b.times, y: &b.envelope });
        }
        let title = format!("{} energy, {}", kind_name(spec.kind), cfg.output.name);
        let svg = line_chart(&title, "energy", &lines, cfg.output.log_scale);
        fs::write(&svg_path, svg).map_err(|e| CliError::io(&svg_path, e))?;
        files.push(svg_path);
    }

    Ok(RunReport {
        config,
        checks,
        notes,
        diverged_at,
        wall_time: start.elapsed(),
        files,
        series,
        fit,
        bound,
    })
}

fn kind_name(kind: EquationKind) -> &'static str {
    match kind {
        EquationKind::Classical => "classical",
        EquationKind::Damped => "damped",
        EquationKind::Viscoelastic => "viscoelastic",
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Runs the assumption checks without solving.
pub fn check(cfg: &RunConfig) -> RunReport {
    let start = Instant::now();
    RunReport {
        config: cfg.entries.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        checks: assumption_checks(&cfg.spec),
        notes: Vec::new(),
        diverged_at: None,
        wall_time: start.elapsed(),
        files: Vec::new(),
        series: None,
        fit: None,
        bound: None,
    }
}

pub struct SweepRun {
    pub value: String,
    pub result: Result<RunReport, CliError>,
}

pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// One run per value of `axis`, each in its own subdirectory of the base
/// output directory, plus `<name>_sweep.csv` holding every energy curve in
/// long format (`run,t,energy`; run labels in the metadata).
pub fn sweep(
    cfg: &RunConfig,
    axis: &str,
    values: &[String],
    base: &Path,
    workers: usize,
) -> Result<Vec<SweepRun>, CliError> {
    if !crate::config::KNOWN_KEYS.contains(&axis) || axis.starts_with("output.") {
        return Err(CliError::Usage(format!("'{axis}' is not a sweepable key")));
    }
    if values.is_empty() {
        return Ok(Vec::new());
    }
    let root = resolve(base, &cfg.output.dir);
    let slot: Vec<Mutex<Option<Result<RunReport, CliError>>>> = values.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, values.len()) {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= values.len() {
                    break;
                }
                let sub = cfg.output.dir.join(format!("{}_{k}", axis.replace('.', "_")));
                let result = cfg
                    .with_value(axis, &values[k])
                    .and_then(|c| c.with_value("output.dir", &sub.to_string_lossy()))
                    .map_err(CliError::from)
                    .and_then(|c| run(&c, base));
                *slot[k].lock().unwrap() = Some(result);
            });
        }
    });
    let runs: Vec<SweepRun> = values
        .iter()
        .zip(slot)
        .map(|(v, m)| SweepRun { value: v.clone(), result: m.into_inner().unwrap().unwrap() })
        .collect();

    let mut meta = vec![("sweep.axis".to_string(), axis.to_string())];
    let (mut run_col, mut t_col, mut e_col) = (Vec::new(), Vec::new(), Vec::new());
    for (k, r) in runs.iter().enumerate() {
        let status = match &r.result {
            Ok(rep) if rep.diverged() => "diverged",
            Ok(_) => "ok",
            Err(_) => "error",
        };
        meta.push((format!("run.{k}"), format!("{} ({status})", r.value)));
        if let Ok(RunReport { series: Some(s), .. }) = &r.result {
            for (t, e) in s.times.iter().zip(&s.values) {
                run_col.push(k as f64);
                t_col.push(*t);
                e_col.push(*e);
            }
        }
    }
    let mut table = SeriesTable::new(meta);
    table.push_column("run", run_col);
    table.push_column("t", t_col);
    table.push_column("energy", e_col);
    fs::create_dir_all(&root).map_err(|e| CliError::io(&root, e))?;
    let path = root.join(format!("{}_sweep.csv", cfg.output.name));
    table.write(&path).map_err(|e| CliError::io(&path, e))?;
    Ok(runs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub nx: usize,
    pub nt: usize,
    pub dx: f64,
    pub dt: f64,
    /// Modal: error against the oracle. Richardson: difference to the next
    /// finer level, so the finest row has none.
    pub error: Option<f64>,
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub modal: bool,
    pub notice: Option<String>,
    pub rows: Vec<ConvergenceRow>,
}

fn modal_damping(spec: &ProblemSpec) -> Result<f64, String> {
    if !spec.dirichlet.is_zero() || !spec.neumann.is_zero() {
        return Err("inhomogeneous boundary data".into());
    }
    match spec.kind {
        EquationKind::Classical => Ok(0.0),
        EquationKind::Damped => spec
            .damping
            .as_ref()
            .and_then(|a| a.is_constant())
            .filter(|a| *a >= 0.0)
            .ok_or_else(|| "damping is not a nonnegative constant".to_string()),
        EquationKind::Viscoelastic => {
            if spec.kernel.as_ref().is_some_and(|g| g.is_zero()) {
                Ok(0.0)
            } else {
                Err("nonzero memory kernel".into())
            }
        }
    }
}

/// Refines space and time together `levels` times and reports max-norm
/// errors at the final time with observed orders.
pub fn convergence(cfg: &RunConfig, levels: usize) -> Result<ConvergenceTable, CliError> {
    if levels < 3 {
        return Err(CliError::Usage(format!("convergence needs at least 3 levels, got {levels}")));
    }
    let base = cfg.spec.grid;
    let grids: Vec<Grid1D> = (0..levels)
        .map(|k| Grid1D::new(base.length, base.horizon, (base.nx - 1) * (1 << k) + 1, (base.nt - 1) * (1 << k) + 1))
        .collect::<Result<_, _>>()?;
    let mut finals = Vec::with_capacity(levels);
    for g in &grids {
        let mut spec = cfg.spec.clone();
        spec.grid = *g;
        let field = solve(&spec)?;
        if let Some(n) = field.diverged_at {
            return Err(CliError::Solver(WaveError::InvalidProblem(format!(
                "run with nx = {} diverged at level {n}",
                g.nx
            ))));
        }
        finals.push(field.column(g.nt - 1).to_vec());
    }
    let (modal, notice, errors): (bool, Option<String>, Vec<Option<f64>>) = match modal_damping(&cfg.spec) {
        Ok(a) => {
            let errs = grids
                .iter()
                .zip(&finals)
                .map(|(g, u)| {
                    let exact = ModalExpansion::for_grid(&cfg.spec.phi, &cfg.spec.psi, g, DEFAULT_MODES, a)?
                        .eval_on(g, g.horizon);
                    Ok(Some(u.iter().zip(&exact).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)))
                })
                .collect::<Result<Vec<_>, WaveError>>()?;
            (true, None, errs)
        }
        Err(why) => {
            let mut errs: Vec<Option<f64>> = finals
                .windows(2)
                .map(|w| {
                    let coarse = &w[0];
                    let fine = &w[1];
                    Some(coarse.iter().enumerate().map(|(i, c)| (c - fine[2 * i]).abs()).fold(0.0, f64::max))
                })
                .collect();
            errs.push(None);
            (false, Some(format!("no modal oracle ({why}); using Richardson differences")), errs)
        }
    };
    let rows = grids
        .iter()
        .enumerate()
        .map(|(k, g)| {
            let order = match (k.checked_sub(1).and_then(|j| errors[j]), errors[k]) {
                (Some(a), Some(b)) if a > 0.0 && b > 0.0 => Some((a / b).log2()),
                _ => None,
            };
            ConvergenceRow { nx: g.nx, nt: g.nt, dx: g.dx, dt: g.dt, error: errors[k], order }
        })
        .collect();
    Ok(ConvergenceTable { modal, notice, rows })
}
