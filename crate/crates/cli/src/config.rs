//! JSON run configuration: parsing, `--set` overrides and validation.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use floquet_flow::models::{OscillatorParams, TwoLevelParams, DEFAULT_LEVELS};
use floquet_flow::{BathSpec, CMatrix, Complex64, CouplingOperator, FourierHamiltonian, SpectralDensity};
use serde::Deserialize;
use serde_json::Value;

use crate::error::{CliError, CliResult};

/// `J0` giving `Gamma0 = 2 pi gamma^2 J0 = 1` at unit coupling.
pub const DEFAULT_J0: f64 = 1.0 / (2.0 * PI);
pub const DEFAULT_FIGURE_POINTS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    #[serde(alias = "solve")]
    Quasienergies,
    Rates,
    Steady,
    Dissipation,
    Sweep,
    Figure,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Quasienergies => "quasienergies",
            Task::Rates => "rates",
            Task::Steady => "steady",
            Task::Dissipation => "dissipation",
            Task::Sweep => "sweep",
            Task::Figure => "figure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    /// Generic pipeline: propagate, Fourier-analyse, golden rule, master equation.
    #[default]
    Numeric,
    /// Closed-form model results.
    Analytic,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Numeric => "numeric",
            Engine::Analytic => "analytic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
        }
    }
}

// ---- raw document ----------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    system: RawSystem,
    #[serde(default)]
    bath: RawBath,
    #[serde(default)]
    solver: RawSolver,
    task: Option<Task>,
    engine: Option<Engine>,
    sweep: Option<RawSweep>,
    figure: Option<RawFigure>,
    output: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum RawSystem {
    TwoLevel {
        omega0: f64,
        omega: f64,
        mu_f: f64,
        #[serde(default = "one")]
        gamma: f64,
    },
    DrivenOscillator {
        #[serde(default = "one")]
        mass: f64,
        omega0: f64,
        omega: f64,
        force: f64,
        #[serde(default = "one")]
        gamma: f64,
        #[serde(default = "default_levels")]
        n_max: usize,
    },
    Custom {
        omega: f64,
        hamiltonian: PathBuf,
        coupling: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

fn default_levels() -> usize {
    DEFAULT_LEVELS
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawBeta {
    Number(f64),
    Text(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBath {
    beta: Option<RawBeta>,
    #[serde(rename = "kT")]
    kt: Option<f64>,
    spectral_density: Option<RawDensity>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum RawDensity {
    Constant { j0: f64 },
    Ohmic { eta: f64, cutoff: f64 },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    steps: Option<usize>,
    harmonics: Option<usize>,
    ell_max: Option<usize>,
    truncation_tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    parameter: String,
    start: f64,
    stop: f64,
    count: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFigure {
    which: Option<Figure>,
    points: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMatrix {
    re: Vec<Vec<f64>>,
    #[serde(default)]
    im: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawComponent {
    harmonic: i64,
    re: Vec<Vec<f64>>,
    #[serde(default)]
    im: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHamiltonian {
    components: Vec<RawComponent>,
}

// ---- validated configuration -------------------------------------------------

#[derive(Debug, Clone)]
pub struct CustomSystem {
    pub hamiltonian: FourierHamiltonian,
    pub coupling: CouplingOperator,
    pub hamiltonian_path: PathBuf,
    pub coupling_path: PathBuf,
}

#[derive(Debug, Clone)]
pub enum System {
    TwoLevel(TwoLevelParams),
    DrivenOscillator(OscillatorParams),
    Custom(CustomSystem),
}

impl System {
    pub fn kind(&self) -> &'static str {
        match self {
            System::TwoLevel(_) => "two_level",
            System::DrivenOscillator(_) => "driven_oscillator",
            System::Custom(_) => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub steps: usize,
    pub harmonics: Option<usize>,
    pub ell_max: Option<usize>,
    pub truncation_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    /// Dotted path of a numeric config field, e.g. `system.mu_f`.
    pub parameter: String,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        let n = self.count - 1;
        (0..self.count).map(|i| self.start + (self.stop - self.start) * i as f64 / n as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureSettings {
    pub which: Option<Figure>,
    pub points: usize,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub system: System,
    pub bath: BathSpec,
    pub solver: SolverSettings,
    pub task: Task,
    pub engine: Engine,
    pub sweep: Option<Sweep>,
    pub figure: FigureSettings,
    pub output: Option<PathBuf>,
    /// The effective document after overrides; hashed into output metadata.
    pub document: Value,
    /// Directory that relative paths in the document are resolved against.
    pub base_dir: PathBuf,
}

// ---- loading ---------------------------------------------------------------

pub fn parse_document(text: &str) -> CliResult<Value> {
    serde_json::from_str(text).map_err(|e| CliError::Parse { line: e.line(), column: e.column(), message: e.to_string() })
}

/// Parses the value of a `--set key=value` override: JSON if it parses,
/// otherwise a plain string.
pub fn parse_override(spec: &str) -> CliResult<(String, Value)> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::validation(spec, "override must have the form key=value"))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(CliError::validation(key, "empty path segment in override"));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    Ok((key.to_string(), value))
}

/// Sets `doc[a][b]... = value` along a dotted path, creating objects as needed.
pub fn set_path(doc: &mut Value, path: &str, value: Value) -> CliResult<()> {
    let mut cur = doc;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if !cur.is_object() {
            if cur.is_null() {
                *cur = Value::Object(Default::default());
            } else {
                return Err(CliError::validation(parts[..i].join("."), "cannot set a field inside a non-object value"));
            }
        }
        let map = cur.as_object_mut().expect("object");
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        cur = map.entry(part.to_string()).or_insert(Value::Null);
    }
    Ok(())
}

pub fn load_config(path: &Path) -> CliResult<RunConfig> {
    load_config_with(path, &[])
}

pub fn load_config_with(path: &Path, overrides: &[(String, Value)]) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io { path: path.to_path_buf(), message: e.to_string() })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    load_config_str(&text, &base, overrides)
}

pub fn load_config_str(text: &str, base_dir: &Path, overrides: &[(String, Value)]) -> CliResult<RunConfig> {
    let mut doc = parse_document(text)?;
    if !doc.is_object() {
        return Err(CliError::validation("<root>", "configuration must be a JSON object"));
    }
    for (k, v) in overrides {
        set_path(&mut doc, k, v.clone())?;
    }
    RunConfig::from_document(doc, base_dir)
}

fn field_error(e: serde_path_to_error::Error<serde_json::Error>) -> CliError {
    let path = e.path().to_string();
    let inner = e.into_inner();
    let message = inner.to_string();
    // serde reports a missing field at its parent; name the field itself.
    let field = match message.strip_prefix("missing field `").and_then(|m| m.split('`').next()) {
        Some(name) if path == "." => name.to_string(),
        Some(name) => format!("{path}.{name}"),
        None => path,
    };
    CliError::Validation { field, message }
}

fn positive(field: &str, x: f64) -> CliResult<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::validation(field, format!("must be positive and finite, got {x}")))
    }
}

fn nonnegative(field: &str, x: f64) -> CliResult<f64> {
    if x >= 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::validation(field, format!("must be nonnegative and finite, got {x}")))
    }
}

fn finite(field: &str, x: f64) -> CliResult<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::validation(field, format!("must be finite, got {x}")))
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), message: e.to_string() })?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        if inner.is_syntax() || inner.is_eof() {
            CliError::Parse { line: inner.line(), column: inner.column(), message: format!("{}: {inner}", path.display()) }
        } else {
            CliError::Validation { field: format!("{}:{}", path.display(), e.path()), message: inner.to_string() }
        }
    })
}

fn to_matrix(path: &Path, re: &[Vec<f64>], im: Option<&Vec<Vec<f64>>>) -> CliResult<CMatrix> {
    let n = re.len();
    let bad = |msg: &str| CliError::validation(path.display().to_string(), msg);
    if n == 0 || re.iter().any(|r| r.len() != n) {
        return Err(bad("matrix must be square and non-empty"));
    }
    if let Some(im) = im {
        if im.len() != n || im.iter().any(|r| r.len() != n) {
            return Err(bad("imaginary part has a different shape"));
        }
    }
    Ok(CMatrix::from_fn(n, n, |a, b| Complex64::new(re[a][b], im.map_or(0.0, |m| m[a][b]))))
}

fn map_hermiticity(path: &Path, e: floquet_flow::Error) -> CliError {
    match e {
        floquet_flow::Error::NonHermitianInput { what, defect } => {
            CliError::NonHermitian { path: path.to_path_buf(), what, defect }
        }
        other => CliError::validation(path.display().to_string(), other.to_string()),
    }
}

fn load_custom(omega: f64, h_path: &Path, v_path: &Path) -> CliResult<CustomSystem> {
    let raw: RawHamiltonian = read_json(h_path)?;
    let mut comps = Vec::with_capacity(raw.components.len());
    for c in &raw.components {
        comps.push((c.harmonic, to_matrix(h_path, &c.re, c.im.as_ref())?));
    }
    let hamiltonian = FourierHamiltonian::new(omega, comps).map_err(|e| map_hermiticity(h_path, e))?;
    let rv: RawMatrix = read_json(v_path)?;
    let coupling =
        CouplingOperator::new(to_matrix(v_path, &rv.re, rv.im.as_ref())?).map_err(|e| map_hermiticity(v_path, e))?;
    if coupling.dim() != hamiltonian.dim() {
        return Err(CliError::validation("system.coupling", "coupling and Hamiltonian dimensions differ"));
    }
    Ok(CustomSystem {
        hamiltonian,
        coupling,
        hamiltonian_path: h_path.to_path_buf(),
        coupling_path: v_path.to_path_buf(),
    })
}

impl RunConfig {
    pub fn from_document(doc: Value, base_dir: &Path) -> CliResult<Self> {
        let raw: RawConfig = serde_path_to_error::deserialize(&doc).map_err(field_error)?;

        let density = match raw.bath.spectral_density {
            None => SpectralDensity::Constant { j0: DEFAULT_J0 },
            Some(RawDensity::Constant { j0 }) => {
                SpectralDensity::Constant { j0: nonnegative("bath.spectral_density.j0", j0)? }
            }
            Some(RawDensity::Ohmic { eta, cutoff }) => SpectralDensity::Ohmic {
                eta: nonnegative("bath.spectral_density.eta", eta)?,
                cutoff: positive("bath.spectral_density.cutoff", cutoff)?,
            },
        };
        let beta = match (raw.bath.beta, raw.bath.kt) {
            (Some(_), Some(_)) => return Err(CliError::validation("bath", "give either beta or kT, not both")),
            (Some(RawBeta::Number(b)), None) => {
                if b > 0.0 {
                    b
                } else {
                    return Err(CliError::validation("bath.beta", format!("must be positive, got {b}")));
                }
            }
            (Some(RawBeta::Text(s)), None) => match s.to_ascii_lowercase().as_str() {
                "inf" | "infinity" => f64::INFINITY,
                _ => return Err(CliError::validation("bath.beta", format!("expected a number or \"inf\", got {s:?}"))),
            },
            (None, Some(kt)) => {
                let kt = nonnegative("bath.kT", kt)?;
                if kt == 0.0 {
                    f64::INFINITY
                } else {
                    1.0 / kt
                }
            }
            (None, None) => 1.0,
        };
        let bath = BathSpec::new(beta, density).map_err(|e| CliError::validation("bath", e.to_string()))?;

        let system = match raw.system {
            RawSystem::TwoLevel { omega0, omega, mu_f, gamma } => {
                let j0 = match density {
                    SpectralDensity::Constant { j0 } => j0,
                    SpectralDensity::Ohmic { .. } => 0.0,
                };
                System::TwoLevel(TwoLevelParams {
                    omega0: positive("system.omega0", omega0)?,
                    omega: positive("system.omega", omega)?,
                    mu_f: nonnegative("system.mu_f", mu_f)?,
                    gamma: finite("system.gamma", gamma)?,
                    j0,
                })
            }
            RawSystem::DrivenOscillator { mass, omega0, omega, force, gamma, n_max } => {
                let p = OscillatorParams {
                    mass: positive("system.mass", mass)?,
                    omega0: positive("system.omega0", omega0)?,
                    omega: positive("system.omega", omega)?,
                    force: finite("system.force", force)?,
                    gamma: finite("system.gamma", gamma)?,
                    n_max,
                };
                if (p.omega - p.omega0).abs() <= 1e-9 * p.omega0 {
                    return Err(CliError::validation("system.omega", "drive frequency must differ from omega0"));
                }
                if n_max < 10 {
                    return Err(CliError::validation("system.n_max", format!("must be at least 10, got {n_max}")));
                }
                System::DrivenOscillator(p)
            }
            RawSystem::Custom { omega, hamiltonian, coupling } => {
                let omega = positive("system.omega", omega)?;
                System::Custom(load_custom(omega, &base_dir.join(hamiltonian), &base_dir.join(coupling))?)
            }
        };

        let steps = raw.solver.steps.unwrap_or(floquet_flow::floquet::DEFAULT_STEPS);
        if steps < 64 || !steps.is_power_of_two() {
            return Err(CliError::validation("solver.steps", format!("must be a power of two >= 64, got {steps}")));
        }
        if let Some(k) = raw.solver.harmonics {
            if k == 0 || k > steps / 4 {
                return Err(CliError::validation("solver.harmonics", format!("must lie in 1..={}, got {k}", steps / 4)));
            }
        }
        let truncation_tol = positive(
            "solver.truncation_tol",
            raw.solver.truncation_tol.unwrap_or(floquet_flow::floquet::DEFAULT_TRUNCATION_TOL),
        )?;
        let solver = SolverSettings { steps, harmonics: raw.solver.harmonics, ell_max: raw.solver.ell_max, truncation_tol };

        let sweep = match raw.sweep {
            None => None,
            Some(s) => {
                if s.count < 2 {
                    return Err(CliError::validation("sweep.count", format!("must be at least 2, got {}", s.count)));
                }
                finite("sweep.start", s.start)?;
                finite("sweep.stop", s.stop)?;
                if s.parameter.trim().is_empty() {
                    return Err(CliError::validation("sweep.parameter", "must name a config field"));
                }
                Some(Sweep { parameter: s.parameter, start: s.start, stop: s.stop, count: s.count })
            }
        };
        let figure = match raw.figure {
            None => FigureSettings { which: None, points: DEFAULT_FIGURE_POINTS },
            Some(f) => {
                let points = f.points.unwrap_or(DEFAULT_FIGURE_POINTS);
                if points < 2 {
                    return Err(CliError::validation("figure.points", format!("must be at least 2, got {points}")));
                }
                FigureSettings { which: f.which, points }
            }
        };
        let task = raw.task.unwrap_or(Task::Dissipation);
        if task == Task::Sweep && sweep.is_none() {
            return Err(CliError::validation("sweep", "task sweep requires a sweep section"));
        }
        let engine = raw.engine.unwrap_or_default();
        if engine == Engine::Analytic {
            match &system {
                System::Custom(_) => {
                    return Err(CliError::validation("engine", "no closed form exists for custom systems"));
                }
                System::TwoLevel(_) if matches!(density, SpectralDensity::Ohmic { .. }) => {
                    return Err(CliError::validation(
                        "bath.spectral_density",
                        "two-level closed forms require a constant spectral density",
                    ));
                }
                _ => {}
            }
        }

        Ok(RunConfig {
            system,
            bath,
            solver,
            task,
            engine,
            sweep,
            figure,
            output: raw.output.map(|p| base_dir.join(p)),
            document: doc,
            base_dir: base_dir.to_path_buf(),
        })
    }

    /// The same configuration with one dotted field replaced.
    pub fn with_field(&self, path: &str, value: Value) -> CliResult<Self> {
        let mut doc = self.document.clone();
        set_path(&mut doc, path, value)?;
        let mut cfg = RunConfig::from_document(doc, &self.base_dir)?;
        cfg.task = self.task;
        cfg.engine = self.engine;
        cfg.output = self.output.clone();
        Ok(cfg)
    }
}
