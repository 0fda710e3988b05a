//! Task execution for a validated configuration.

use std::path::{Path, PathBuf};

use floquet_flow::kinetics::generator;
use floquet_flow::models::{
    build_osc_hamiltonian, build_tls_hamiltonian, label_tls_solution, osc_quasienergy, osc_rate_table,
    osc_steady_and_r, tls_dissipation, tls_floquet, tls_population, tls_rate_table, OscillatorParams,
    TwoLevelParams,
};
use floquet_flow::{
    dissipation_rate, evaluate, floquet_solve, suggested_steps, BathSpec, CouplingOperator, DissipationReport,
    FloquetSolution, FourierHamiltonian, RateTable, SolveOptions, SteadyState,
};
use rayon::prelude::*;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{Engine, RunConfig, SolverSettings, System, Task};
use crate::error::{CliError, CliResult};
use crate::figures::emit_figure;

/// Column-oriented numeric output.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl DataTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Values of one column, in row order.
    pub fn values(&self, name: &str) -> Vec<f64> {
        let j = self.column(name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows.iter().map(|r| r[j]).collect()
    }
}

/// Shortest round-trip decimal for moderate magnitudes, exponent form otherwise.
pub fn format_number(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn config_hash(doc: &Value) -> String {
    // serde_json maps are key-sorted, so this is canonical.
    let digest = Sha256::digest(doc.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// CSV text with `#` metadata lines and a header row.
pub fn render_csv(meta: &[(&str, String)], table: &DataTable) -> CliResult<String> {
    let mut out = String::new();
    for (k, v) in meta {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Io { path: PathBuf::from("<csv>"), message: e.to_string() };
    w.write_record(&table.columns).map_err(csv_err)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|&x| format_number(x))).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io { path: PathBuf::from("<csv>"), message: e.to_string() })?;
    out.push_str(&String::from_utf8(bytes).expect("ascii csv"));
    Ok(out)
}

pub fn write_output(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io { path: dir.to_path_buf(), message: e.to_string() })?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Io { path: path.to_path_buf(), message: e.to_string() })
}

pub fn metadata(cfg: &RunConfig, detail: &str) -> Vec<(&'static str, String)> {
    vec![
        ("floquet-flow", env!("CARGO_PKG_VERSION").to_string()),
        ("config_sha256", config_hash(&cfg.document)),
        ("task", if detail.is_empty() { cfg.task.name().to_string() } else { format!("{} {detail}", cfg.task.name()) }),
        ("engine", cfg.engine.name().to_string()),
    ]
}

// ---- evaluation --------------------------------------------------------------

pub fn solve_options(h: &FourierHamiltonian, solver: &SolverSettings) -> SolveOptions {
    SolveOptions {
        steps: suggested_steps(h, solver.steps),
        harmonics: solver.harmonics,
        truncation_tol: solver.truncation_tol,
        keep_samples: false,
    }
}

/// A numerically solved system with its coupling, states in output order.
#[derive(Debug, Clone)]
pub struct NumericStates {
    pub solution: FloquetSolution,
    pub coupling: CouplingOperator,
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    pub quasienergies: Vec<f64>,
    pub labels: Vec<String>,
    pub numeric: Option<NumericStates>,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub spectrum: Spectrum,
    pub table: RateTable,
    pub steady: SteadyState,
    pub dissipation: DissipationReport,
}

fn tls_labels() -> Vec<String> {
    vec!["minus".into(), "plus".into()]
}

fn index_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

/// Two-level solve relabeled into the `[-, +]` convention.
pub fn tls_numeric_states(p: &TwoLevelParams, solver: &SolverSettings) -> CliResult<NumericStates> {
    let (h, coupling) = build_tls_hamiltonian(p)?;
    let raw = floquet_solve(&h, &solve_options(&h, solver))?;
    Ok(NumericStates { solution: label_tls_solution(&raw, p)?, coupling })
}

/// Oscillator solve with states ordered by their dominant number-basis level.
pub fn osc_numeric_states(p: &OscillatorParams, solver: &SolverSettings) -> CliResult<NumericStates> {
    let (h, coupling) = build_osc_hamiltonian(p)?;
    let raw = floquet_solve(&h, &solve_options(&h, solver))?;
    let level = |s: usize| -> usize {
        let u = raw.floquet_function_at(s, 0.0).expect("state index");
        (0..u.len()).max_by(|&a, &b| u[a].norm().total_cmp(&u[b].norm())).unwrap_or(0)
    };
    let mut order: Vec<usize> = (0..raw.num_states()).collect();
    order.sort_by_key(|&s| (level(s), s));
    Ok(NumericStates { solution: raw.permuted(&order), coupling })
}

fn numeric_states(cfg: &RunConfig) -> CliResult<NumericStates> {
    match &cfg.system {
        System::TwoLevel(p) => tls_numeric_states(p, &cfg.solver),
        System::DrivenOscillator(p) => osc_numeric_states(p, &cfg.solver),
        System::Custom(c) => {
            let sol = floquet_solve(&c.hamiltonian, &solve_options(&c.hamiltonian, &cfg.solver))?;
            Ok(NumericStates { solution: sol, coupling: c.coupling.clone() })
        }
    }
}

fn labels_for(system: &System, n: usize) -> Vec<String> {
    match system {
        System::TwoLevel(_) => tls_labels(),
        _ => index_labels(n),
    }
}

pub fn spectrum(cfg: &RunConfig) -> CliResult<Spectrum> {
    match cfg.engine {
        Engine::Numeric => Ok(numeric_spectrum(&cfg.system, numeric_states(cfg)?)),
        Engine::Analytic => match &cfg.system {
            System::TwoLevel(p) => {
                let f = tls_floquet(p)?;
                Ok(Spectrum { quasienergies: vec![f.eps_minus, f.eps_plus], labels: tls_labels(), numeric: None })
            }
            System::DrivenOscillator(p) => Ok(Spectrum {
                quasienergies: (0..p.n_max).map(|n| osc_quasienergy(p, n)).collect(),
                labels: index_labels(p.n_max),
                numeric: None,
            }),
            System::Custom(_) => Err(CliError::validation("engine", "no closed form exists for custom systems")),
        },
    }
}

fn numeric_spectrum(system: &System, states: NumericStates) -> Spectrum {
    let n = states.solution.num_states();
    Spectrum { quasienergies: states.solution.quasienergies().to_vec(), labels: labels_for(system, n), numeric: Some(states) }
}

fn residual(table: &RateTable, p: &[f64]) -> f64 {
    let g = generator(table.totals());
    let r = (0..p.len()).map(|i| (0..p.len()).map(|j| g[(i, j)] * p[j]).sum::<f64>().abs()).fold(0.0, f64::max);
    let scale = table.max_total();
    if scale > 0.0 {
        r / scale
    } else {
        r
    }
}

/// Rates, steady state and dissipation on top of a spectrum.
pub fn kinetics(cfg: &RunConfig, spectrum: Spectrum) -> CliResult<Evaluation> {
    if let Some(states) = &spectrum.numeric {
        let res = evaluate(states.solution.clone(), &states.coupling, &cfg.bath, cfg.solver.ell_max)?;
        return Ok(Evaluation { spectrum, table: res.table, steady: res.steady, dissipation: res.dissipation });
    }
    match &cfg.system {
        System::TwoLevel(p) => {
            let beta = cfg.bath.beta;
            let table = tls_rate_table(p, beta)?;
            let pm = tls_population(p, beta)?;
            let probs = vec![pm, 1.0 - pm];
            let steady = SteadyState { residual: residual(&table, &probs), p: probs, ergodic: true };
            let closed = tls_dissipation(p, beta)?;
            let flows = dissipation_rate(&table, &steady)?;
            let dissipation = DissipationReport {
                total: closed.total,
                transitions: closed.transitions,
                pseudo: closed.pseudo,
                pseudo_net: flows.pseudo_net,
                channels: flows.channels,
            };
            Ok(Evaluation { spectrum, table, steady, dissipation })
        }
        System::DrivenOscillator(p) => {
            let table = osc_rate_table(p, &cfg.bath)?;
            let closed = osc_steady_and_r(p, &cfg.bath)?;
            let probs: Vec<f64> = (0..p.n_max).map(|n| closed.population(n)).collect();
            let steady = SteadyState { residual: residual(&table, &probs), p: probs, ergodic: true };
            let flows = dissipation_rate(&table, &steady)?;
            let dissipation = DissipationReport {
                total: closed.total,
                transitions: closed.transitions,
                pseudo: closed.pseudo,
                pseudo_net: flows.pseudo_net,
                channels: flows.channels,
            };
            Ok(Evaluation { spectrum, table, steady, dissipation })
        }
        System::Custom(_) => Err(CliError::validation("engine", "no closed form exists for custom systems")),
    }
}

pub fn evaluate_config(cfg: &RunConfig) -> CliResult<Evaluation> {
    kinetics(cfg, spectrum(cfg)?)
}

/// Steady state and dissipation of the normalized two-level model.
pub fn tls_point(p: &TwoLevelParams, beta: f64, engine: Engine, solver: &SolverSettings) -> CliResult<TlsPoint> {
    match engine {
        Engine::Analytic => {
            let d = tls_dissipation(p, beta)?;
            Ok(TlsPoint { p_minus: tls_population(p, beta)?, r: d.total, r_trans: d.transitions, r_pseudo: d.pseudo })
        }
        Engine::Numeric => {
            let states = tls_numeric_states(p, solver)?;
            let bath: BathSpec = p.bath(beta)?;
            let res = evaluate(states.solution, &states.coupling, &bath, solver.ell_max)?;
            Ok(TlsPoint {
                p_minus: res.steady.p[floquet_flow::models::MINUS],
                r: res.dissipation.total,
                r_trans: res.dissipation.transitions,
                r_pseudo: res.dissipation.pseudo,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TlsPoint {
    pub p_minus: f64,
    pub r: f64,
    pub r_trans: f64,
    pub r_pseudo: f64,
}

// ---- tasks -------------------------------------------------------------------

/// Result of a run: JSON summary for stdout and the CSV table.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: Value,
    pub table: DataTable,
    pub csv: String,
    pub written: Option<PathBuf>,
}

fn header(cfg: &RunConfig) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("task".into(), json!(cfg.task.name()));
    m.insert("engine".into(), json!(cfg.engine.name()));
    m.insert("system".into(), json!(cfg.system.kind()));
    m
}

fn diagnostics(spectrum: &Spectrum) -> Value {
    match &spectrum.numeric {
        None => Value::Null,
        Some(s) => json!({
            "steps": s.solution.steps(),
            "harmonic_cutoff": s.solution.harmonic_cutoff(),
            "unitarity_defect": s.solution.unitarity_defect(),
            "orthonormality_defect": s.solution.orthonormality_defect(),
            "degenerate": s.solution.is_degenerate(),
        }),
    }
}

fn labeled(labels: &[String], values: &[f64]) -> Value {
    Value::Object(labels.iter().zip(values).map(|(l, v)| (l.clone(), json!(v))).collect())
}

fn quasienergy_table(spec: &Spectrum) -> DataTable {
    let mut t = DataTable::new(["state", "quasienergy"]);
    for (i, e) in spec.quasienergies.iter().enumerate() {
        t.rows.push(vec![i as f64, *e]);
    }
    t
}

fn rates_table(table: &RateTable) -> DataTable {
    let mut t = DataTable::new([
        "final_state",
        "initial_state",
        "ell",
        "frequency",
        "element_re",
        "element_im",
        "rate",
        "flagged",
    ]);
    for c in table.channels() {
        t.rows.push(vec![
            c.final_state as f64,
            c.initial_state as f64,
            c.ell as f64,
            c.frequency,
            c.element.re,
            c.element.im,
            c.rate,
            if c.flagged { 1.0 } else { 0.0 },
        ]);
    }
    t
}

fn flows_table(d: &DissipationReport) -> DataTable {
    let mut t = DataTable::new(["final_state", "initial_state", "ell", "energy_weight", "rate", "contribution"]);
    for c in &d.channels {
        t.rows.push(vec![
            c.final_state as f64,
            c.initial_state as f64,
            c.ell as f64,
            c.energy_weight,
            c.rate,
            c.contribution,
        ]);
    }
    t
}

fn dissipation_summary(ev: &Evaluation) -> Value {
    json!({
        "p": labeled(&ev.spectrum.labels, &ev.steady.p),
        "R": ev.dissipation.total,
        "R_trans": ev.dissipation.transitions,
        "R_pseudo": ev.dissipation.pseudo,
        "R_pseudo_net": ev.dissipation.pseudo_net,
    })
}

fn single_point(cfg: &RunConfig) -> CliResult<(Value, DataTable)> {
    let mut m = header(cfg);
    let spec = spectrum(cfg)?;
    m.insert("quasienergies".into(), labeled(&spec.labels, &spec.quasienergies));
    m.insert("diagnostics".into(), diagnostics(&spec));
    if cfg.task == Task::Quasienergies {
        let t = quasienergy_table(&spec);
        return Ok((Value::Object(m), t));
    }
    let ev = kinetics(cfg, spec)?;
    let table = match cfg.task {
        Task::Rates => {
            let totals = ev.table.totals();
            let rows: Vec<Vec<f64>> = (0..totals.nrows()).map(|i| totals.row(i).iter().copied().collect()).collect();
            m.insert("total_rates".into(), json!(rows));
            m.insert("flagged_channels".into(), json!(ev.table.degenerate_channels().count()));
            rates_table(&ev.table)
        }
        Task::Steady => {
            m.insert("p".into(), labeled(&ev.spectrum.labels, &ev.steady.p));
            m.insert("residual".into(), json!(ev.steady.residual));
            m.insert("ergodic".into(), json!(ev.steady.ergodic));
            let mut t = DataTable::new(["state", "quasienergy", "p"]);
            for (i, (e, p)) in ev.spectrum.quasienergies.iter().zip(&ev.steady.p).enumerate() {
                t.rows.push(vec![i as f64, *e, *p]);
            }
            t
        }
        _ => {
            if let Value::Object(d) = dissipation_summary(&ev) {
                m.extend(d);
            }
            flows_table(&ev.dissipation)
        }
    };
    Ok((Value::Object(m), table))
}

/// Evaluates the sweep grid in parallel; output rows follow the grid order.
pub fn sweep(cfg: &RunConfig) -> CliResult<(Value, DataTable)> {
    let sw = cfg.sweep.as_ref().ok_or_else(|| CliError::validation("sweep", "missing sweep section"))?;
    let values = sw.values();
    let configs: Vec<RunConfig> =
        values.iter().map(|&v| cfg.with_field(&sw.parameter, json!(v))).collect::<CliResult<_>>()?;
    let mut spectra: Vec<Spectrum> = configs.par_iter().map(spectrum).collect::<CliResult<_>>()?;
    let dim = spectra[0].quasienergies.len();
    if spectra.iter().any(|s| s.quasienergies.len() != dim) {
        return Err(CliError::validation(&sw.parameter, "sweep changes the number of states"));
    }
    // Custom systems carry no model labels: follow states by continuity.
    if matches!(cfg.system, System::Custom(_)) {
        for k in 1..spectra.len() {
            let prev = spectra[k - 1].numeric.as_ref().expect("numeric").solution.clone();
            let cur = spectra[k].numeric.as_mut().expect("numeric");
            cur.solution = cur.solution.align_to(&prev)?;
            spectra[k].quasienergies = cur.solution.quasienergies().to_vec();
        }
    }
    let evals: Vec<Evaluation> =
        configs.par_iter().zip(spectra.into_par_iter()).map(|(c, s)| kinetics(c, s)).collect::<CliResult<_>>()?;

    let labels = evals[0].spectrum.labels.clone();
    let mut columns = vec![sw.parameter.clone(), "R".into(), "R_trans".into(), "R_pseudo".into()];
    columns.extend(labels.iter().map(|l| format!("p_{l}")));
    columns.extend(labels.iter().map(|l| format!("eps_{l}")));
    let mut t = DataTable { columns, rows: Vec::with_capacity(evals.len()) };
    let mut points = Vec::with_capacity(evals.len());
    for (v, ev) in values.iter().zip(&evals) {
        let mut row = vec![*v, ev.dissipation.total, ev.dissipation.transitions, ev.dissipation.pseudo];
        row.extend(&ev.steady.p);
        row.extend(&ev.spectrum.quasienergies);
        t.rows.push(row);
        let mut point = dissipation_summary(ev);
        point["value"] = json!(v);
        points.push(point);
    }
    let mut m = header(cfg);
    m.insert("parameter".into(), json!(sw.parameter));
    m.insert("points".into(), Value::Array(points));
    Ok((Value::Object(m), t))
}

/// Runs the configured task and writes the CSV if an output path is set.
pub fn run(cfg: &RunConfig) -> CliResult<RunOutput> {
    let (mut summary, table, detail, default_out) = match cfg.task {
        Task::Sweep => {
            let (s, t) = sweep(cfg)?;
            (s, t, String::new(), None)
        }
        Task::Figure => {
            let which = cfg
                .figure
                .which
                .ok_or_else(|| CliError::validation("figure.which", "select one of fig1, fig2, fig3, fig4"))?;
            let t = emit_figure(which, cfg.figure.points, cfg.engine, &cfg.solver)?;
            let mut m = header(cfg);
            m.insert("figure".into(), json!(which.name()));
            m.insert("rows".into(), json!(t.rows.len()));
            (Value::Object(m), t, which.name().to_string(), Some(PathBuf::from(format!("{}.csv", which.name()))))
        }
        _ => {
            let (s, t) = single_point(cfg)?;
            (s, t, String::new(), None)
        }
    };
    let csv = render_csv(&metadata(cfg, &detail), &table)?;
    let written = cfg.output.clone().or(default_out);
    if let Some(path) = &written {
        write_output(path, &csv)?;
    }
    summary["output"] = json!(written.as_ref().map(|p| p.display().to_string()));
    Ok(RunOutput { summary, table, csv, written })
}
