//! Flat `key = value` run configuration.
//!
//! Lines are `dotted.key = value`; `#` starts a comment. Numbers accept a
//! `pi` factor (`pi`, `10pi`, `pi/2`). Functions are written `name(args)`:
//!
//! * time (`bc.f`, `bc.h`): a number, `exp_decay(rate)`, `sine(omega)`,
//!   `saturating(scale)`, `sqrt`, `table(t v, t v, ...)`
//! * space (`data.*`, `coef.a`): a number, `cos(k)`, `sin(k)`, `exp(rate)`
//!   for `e^(-rate x)`, `sin2`, `shifted_square`, `abs`,
//!   `step(at, left, right)`, `power(p)`, `table(...)`
//! * kernel (`coef.g`): `0`, `const(c)`, `exp_shift`, `power(p)`,
//!   `log_type`, `table(...)`

use std::fmt;
use std::path::PathBuf;

use wavelab::bounds::{DampedBoundOptions, ViscoBoundParams, DEFAULT_MARGIN};
use wavelab::{
    EquationKind, Grid1D, InitOrder, ProblemSpec, RelaxationKernel, SpaceFunction, Table,
    TimeFunction,
};

pub const KNOWN_KEYS: &[&str] = &[
    "kind",
    "grid.length",
    "grid.horizon",
    "grid.nx",
    "grid.nt",
    "grid.r",
    "data.phi",
    "data.psi",
    "bc.f",
    "bc.h",
    "coef.a",
    "coef.g",
    "options.init_order",
    "options.allow_cfl_violation",
    "options.history_cap",
    "energy.stride",
    "energy.residual",
    "bound.enabled",
    "bound.calibrate",
    "bound.margin",
    "bound.quad_dt",
    "bound.epsilon",
    "bound.eta",
    "bound.alpha",
    "bound.delta",
    "bound.c",
    "bound.kappa",
    "bound.eps1",
    "bound.eps2",
    "bound.xi_floor",
    "bound.c_eps",
    "bound.l",
    "bound.alpha2",
    "fit.enabled",
    "fit.start",
    "fit.end",
    "output.dir",
    "output.name",
    "output.svg",
    "output.log_scale",
];

pub const DEFAULT_LENGTH_TEXT: &str = "10pi";
pub const DEFAULT_NX: usize = 315;
pub const DEFAULT_R: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn at(key: &str, message: impl Into<String>) -> Self {
        Self { line: None, key: Some(key.to_string()), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(key) = &self.key {
            write!(f, "{key}: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Ordered raw entries, as written.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Entries {
    items: Vec<(String, String)>,
}

impl Entries {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut out = Self::default();
        for (k, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: String| ConfigError { line: Some(k + 1), key: None, message: m };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected 'key = value', got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KNOWN_KEYS.contains(&key) {
                return Err(err(format!("unknown key '{key}'")));
            }
            if out.get(key).is_some() {
                return Err(err(format!("duplicate key '{key}'")));
            }
            out.items.push((key.to_string(), value.to_string()));
        }
        Ok(out)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.items.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(ConfigError::at(key, "unknown key"));
        }
        match self.items.iter_mut().find(|(k, _)| k == key) {
            Some(item) => item.1 = value.to_string(),
            None => self.items.push((key.to_string(), value.to_string())),
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.items.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

pub fn parse_number(text: &str) -> Option<f64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if let Some(rest) = s.strip_prefix("pi/") {
        return rest.parse::<f64>().ok().map(|d| std::f64::consts::PI / d);
    }
    if let Some(coef) = s.strip_suffix("pi") {
        let coef = coef.strip_suffix('*').unwrap_or(coef);
        let c = match coef {
            "" | "+" => 1.0,
            "-" => -1.0,
            _ => coef.parse::<f64>().ok()?,
        };
        return Some(c * std::f64::consts::PI);
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Splits `name(args)` into the name and its comma-separated arguments.
fn call(text: &str) -> Result<(String, Vec<String>), String> {
    let t = text.trim();
    match t.find('(') {
        None => Ok((t.to_string(), Vec::new())),
        Some(i) => {
            let inner = t[i + 1..]
                .strip_suffix(')')
                .ok_or_else(|| format!("missing ')' in '{t}'"))?;
            let args = if inner.trim().is_empty() {
                Vec::new()
            } else {
                inner.split(',').map(|a| a.trim().to_string()).collect()
            };
            Ok((t[..i].trim().to_string(), args))
        }
    }
}

fn numbers(args: &[String], want: usize, name: &str) -> Result<Vec<f64>, String> {
    if args.len() != want {
        return Err(format!("{name} takes {want} argument(s), got {}", args.len()));
    }
    args.iter()
        .map(|a| parse_number(a).ok_or_else(|| format!("'{a}' is not a number")))
        .collect()
}

fn table(args: &[String]) -> Result<Table, String> {
    let mut knots = Vec::with_capacity(args.len());
    let mut values = Vec::with_capacity(args.len());
    for pair in args {
        let parts: Vec<&str> = pair.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(format!("table entries are 'knot value' pairs, got '{pair}'"));
        }
        let k = parse_number(parts[0]).ok_or_else(|| format!("'{}' is not a number", parts[0]))?;
        let v = parse_number(parts[1]).ok_or_else(|| format!("'{}' is not a number", parts[1]))?;
        knots.push(k);
        values.push(v);
    }
    Table::new(knots, values).map_err(|e| e.to_string())
}

pub fn parse_time_function(text: &str) -> Result<TimeFunction, String> {
    if let Some(v) = parse_number(text) {
        return Ok(if v == 0.0 { TimeFunction::Zero } else { TimeFunction::Constant(v) });
    }
    let (name, args) = call(text)?;
    Ok(match name.as_str() {
        "zero" => TimeFunction::Zero,
        "const" => TimeFunction::Constant(numbers(&args, 1, &name)?[0]),
        "exp_decay" => TimeFunction::ExpDecay { rate: numbers(&args, 1, &name)?[0] },
        "sine" => TimeFunction::Sine { omega: numbers(&args, 1, &name)?[0] },
        "saturating" => TimeFunction::Saturating { scale: numbers(&args, 1, &name)?[0] },
        "sqrt" => {
            numbers(&args, 0, &name)?;
            TimeFunction::Sqrt
        }
        "table" => TimeFunction::Tabulated(table(&args)?),
        _ => return Err(format!("unknown time function '{name}'")),
    })
}

pub fn parse_space_function(text: &str) -> Result<SpaceFunction, String> {
    if let Some(v) = parse_number(text) {
        return Ok(SpaceFunction::Constant(v));
    }
    let (name, args) = call(text)?;
    let none = |f: SpaceFunction| numbers(&args, 0, &name).map(|_| f);
    Ok(match name.as_str() {
        "const" => SpaceFunction::Constant(numbers(&args, 1, &name)?[0]),
        "cos" => SpaceFunction::Cos { freq: numbers(&args, 1, &name)?[0] },
        "sin" => SpaceFunction::Sin { freq: numbers(&args, 1, &name)?[0] },
        "exp" => SpaceFunction::Exp { rate: numbers(&args, 1, &name)?[0] },
        "sin2" => none(SpaceFunction::SinSquared)?,
        "shifted_square" => none(SpaceFunction::ShiftedSquare)?,
        "abs" => none(SpaceFunction::Abs)?,
        "step" => {
            let v = numbers(&args, 3, &name)?;
            SpaceFunction::Step { at: v[0], left: v[1], right: v[2] }
        }
        "power" => SpaceFunction::Power { exponent: numbers(&args, 1, &name)?[0] },
        "table" => SpaceFunction::Tabulated(table(&args)?),
        _ => return Err(format!("unknown space function '{name}'")),
    })
}

pub fn parse_kernel(text: &str) -> Result<RelaxationKernel, String> {
    if let Some(v) = parse_number(text) {
        return Ok(if v == 0.0 { RelaxationKernel::Zero } else { RelaxationKernel::Constant(v) });
    }
    let (name, args) = call(text)?;
    Ok(match name.as_str() {
        "zero" => RelaxationKernel::Zero,
        "const" => RelaxationKernel::Constant(numbers(&args, 1, &name)?[0]),
        "exp_shift" => {
            numbers(&args, 0, &name)?;
            RelaxationKernel::ExpShift
        }
        "power" => RelaxationKernel::Power { p: numbers(&args, 1, &name)?[0] },
        "log_type" => {
            numbers(&args, 0, &name)?;
            RelaxationKernel::LogType
        }
        "table" => RelaxationKernel::Tabulated(table(&args)?),
        _ => return Err(format!("unknown kernel '{name}'")),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundConfig {
    pub calibrate: bool,
    pub margin: f64,
    pub quad_dt: Option<f64>,
    pub damped: DampedBoundOptions,
    pub visco: ViscoBoundParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub name: String,
    pub svg: bool,
    pub log_scale: bool,
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub entries: Entries,
    pub spec: ProblemSpec,
    pub energy_stride: usize,
    pub residual: bool,
    pub bound: Option<BoundConfig>,
    /// Decay-fit window; `None` disables the fit.
    pub fit: Option<(f64, f64)>,
    pub output: OutputConfig,
}

struct Reader<'a> {
    entries: &'a Entries,
}

impl Reader<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key)
    }

    fn required(&self, key: &str) -> Result<&str, ConfigError> {
        self.raw(key).ok_or_else(|| ConfigError::at(key, "required key is missing"))
    }

    fn number(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.raw(key)
            .map(|v| parse_number(v).ok_or_else(|| ConfigError::at(key, format!("'{v}' is not a number"))))
            .transpose()
    }

    fn count(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        self.raw(key)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| ConfigError::at(key, format!("'{v}' is not a nonnegative integer")))
            })
            .transpose()
    }

    fn flag(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some("true" | "yes" | "on" | "1") => Ok(true),
            Some("false" | "no" | "off" | "0") => Ok(false),
            Some(v) => Err(ConfigError::at(key, format!("'{v}' is not a boolean"))),
        }
    }

    fn with<T>(&self, key: &str, f: fn(&str) -> Result<T, String>) -> Result<Option<T>, ConfigError> {
        self.raw(key).map(|v| f(v).map_err(|m| ConfigError::at(key, m))).transpose()
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_entries(Entries::parse(text)?)
    }

    pub fn from_entries(entries: Entries) -> Result<Self, ConfigError> {
        let rd = Reader { entries: &entries };
        let kind = match rd.required("kind")? {
            "classical" => EquationKind::Classical,
            "damped" => EquationKind::Damped,
            "viscoelastic" => EquationKind::Viscoelastic,
            other => {
                return Err(ConfigError::at(
                    "kind",
                    format!("expected classical, damped or viscoelastic, got '{other}'"),
                ))
            }
        };

        let length = rd.number("grid.length")?.unwrap_or(10.0 * std::f64::consts::PI);
        let horizon = rd
            .number("grid.horizon")?
            .ok_or_else(|| ConfigError::at("grid.horizon", "required key is missing"))?;
        let nx = rd.count("grid.nx")?.unwrap_or(DEFAULT_NX);
        let grid = match (rd.count("grid.nt")?, rd.number("grid.r")?) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::at("grid.nt", "give either grid.nt or grid.r, not both"))
            }
            (Some(nt), None) => Grid1D::new(length, horizon, nx, nt),
            (None, r) => Grid1D::with_cfl(length, horizon, nx, r.unwrap_or(DEFAULT_R)),
        }
        .map_err(|e| ConfigError::at("grid", e.to_string()))?;

        let phi = rd
            .with("data.phi", parse_space_function)?
            .ok_or_else(|| ConfigError::at("data.phi", "required key is missing"))?;
        let psi = rd.with("data.psi", parse_space_function)?.unwrap_or(SpaceFunction::Constant(0.0));

        let a = rd.with("coef.a", parse_space_function)?;
        let g = rd.with("coef.g", parse_kernel)?;
        let mut spec = match kind {
            EquationKind::Classical => {
                for key in ["coef.a", "coef.g"] {
                    if rd.raw(key).is_some() {
                        return Err(ConfigError::at(key, "not used by kind = classical"));
                    }
                }
                ProblemSpec::classical(grid, phi, psi)
            }
            EquationKind::Damped => {
                if rd.raw("coef.g").is_some() {
                    return Err(ConfigError::at("coef.g", "only used by kind = viscoelastic"));
                }
                let a = a.ok_or_else(|| ConfigError::at("coef.a", "required for kind = damped"))?;
                ProblemSpec::damped(grid, phi, psi, a)
            }
            EquationKind::Viscoelastic => {
                if rd.raw("coef.a").is_some() {
                    return Err(ConfigError::at("coef.a", "only used by kind = damped"));
                }
                let g = g.ok_or_else(|| ConfigError::at("coef.g", "required for kind = viscoelastic"))?;
                ProblemSpec::viscoelastic(grid, phi, psi, g)
            }
        };
        if let Some(f) = rd.with("bc.f", parse_time_function)? {
            spec = spec.with_dirichlet(f);
        }
        if let Some(h) = rd.with("bc.h", parse_time_function)? {
            spec = spec.with_neumann(h);
        }
        match rd.raw("options.init_order") {
            None | Some("first") => {}
            Some("second") => spec = spec.with_init_order(InitOrder::Second),
            Some(v) => {
                return Err(ConfigError::at("options.init_order", format!("expected first or second, got '{v}'")))
            }
        }
        spec = spec.with_cfl_override(rd.flag("options.allow_cfl_violation", false)?);
        spec.options.history_cap = rd.count("options.history_cap")?;
        spec.validate().map_err(|e| ConfigError { line: None, key: None, message: e.to_string() })?;

        let energy_stride = rd.count("energy.stride")?.unwrap_or(1);
        if energy_stride == 0 {
            return Err(ConfigError::at("energy.stride", "must be positive"));
        }
        let residual = rd.flag("energy.residual", false)?;
        if residual && energy_stride != 1 && kind == EquationKind::Viscoelastic {
            return Err(ConfigError::at("energy.residual", "needs energy.stride = 1"));
        }

        let bound = if rd.flag("bound.enabled", false)? {
            let mut visco = ViscoBoundParams::default();
            let set = |dst: &mut f64, key: &str| -> Result<(), ConfigError> {
                if let Some(v) = rd.number(key)? {
                    *dst = v;
                }
                Ok(())
            };
            set(&mut visco.epsilon, "bound.epsilon")?;
            set(&mut visco.eps1, "bound.eps1")?;
            set(&mut visco.eps2, "bound.eps2")?;
            set(&mut visco.c, "bound.c")?;
            set(&mut visco.kappa, "bound.kappa")?;
            set(&mut visco.xi_floor, "bound.xi_floor")?;
            set(&mut visco.l, "bound.l")?;
            set(&mut visco.alpha2, "bound.alpha2")?;
            visco.c_eps = rd.number("bound.c_eps")?;
            let damped = DampedBoundOptions {
                epsilon: rd.number("bound.epsilon")?,
                eta: rd.number("bound.eta")?,
                alpha: rd.number("bound.alpha")?,
                delta: rd.number("bound.delta")?,
                c: rd.number("bound.c")?,
            };
            let quad_dt = rd.number("bound.quad_dt")?;
            if quad_dt.is_some_and(|q| q <= 0.0) {
                return Err(ConfigError::at("bound.quad_dt", "must be positive"));
            }
            Some(BoundConfig {
                calibrate: rd.flag("bound.calibrate", true)?,
                margin: rd.number("bound.margin")?.unwrap_or(DEFAULT_MARGIN),
                quad_dt,
                damped,
                visco,
            })
        } else {
            None
        };

        let fit = if rd.flag("fit.enabled", true)? {
            let a = rd.number("fit.start")?.unwrap_or(0.5 * horizon);
            let b = rd.number("fit.end")?.unwrap_or(horizon);
            if !(a < b) {
                return Err(ConfigError::at("fit.start", format!("window [{a}, {b}] is empty")));
            }
            Some((a, b))
        } else {
            None
        };

        let output = OutputConfig {
            dir: PathBuf::from(rd.raw("output.dir").unwrap_or("out")),
            name: rd.raw("output.name").unwrap_or("run").to_string(),
            svg: rd.flag("output.svg", true)?,
            log_scale: rd.flag("output.log_scale", false)?,
        };
        if output.name.is_empty() || output.name.contains(['/', '\\']) {
            return Err(ConfigError::at("output.name", "must be a plain file stem"));
        }

        Ok(Self { entries, spec, energy_stride, residual, bound, fit, output })
    }

    /// Copy with one key replaced, revalidated.
    pub fn with_value(&self, key: &str, value: &str) -> Result<Self, ConfigError> {
        let mut entries = self.entries.clone();
        entries.set(key, value)?;
        Self::from_entries(entries)
    }
}
