//! Parallel k-path sweeps driven by a TOML run configuration, with CSV and
//! JSON emission.
//!
//! Every sweep is a pure map over the k-points of the path; results are
//! gathered in k order, so output files do not depend on the thread count.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{Map, Value};

pub use config::{
    CavityConfig, ConfigError, EntanglementConfig, Format, KPathConfig, LatticeConfig, OmegaSetting, OutputConfig,
    Overrides, Plan, RunConfig, Threads,
};

use crate::epr::{ground_delta0, Regime};
use crate::experiment::{derive_seed, run_protocol, Acquisition, ProtocolError, ProtocolReport, Stage};
use crate::lattice::KVector;
use crate::spinwave::{solve_modes, BareModes, ModeSolution};
use crate::squeezed::{choose_excited_truncation, eigenstate_coefficients};

#[derive(Debug)]
pub enum SweepError {
    Config(ConfigError),
    Runtime(String),
    Io(String),
}

impl SweepError {
    /// 1 for configuration problems, 2 for everything that fails at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            SweepError::Config(_) => 1,
            SweepError::Runtime(_) | SweepError::Io(_) => 2,
        }
    }
}

impl std::fmt::Display for SweepError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SweepError::Config(e) => write!(f, "config error: {e}"),
            SweepError::Runtime(m) => write!(f, "runtime error: {m}"),
            SweepError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for SweepError {}

impl From<ConfigError> for SweepError {
    fn from(e: ConfigError) -> Self {
        SweepError::Config(e)
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SweepError + '_ {
    move |e| SweepError::Io(format!("{}: {e}", path.display()))
}

/// Shortest round-trip decimal; scientific notation outside [1e-5, 1e16).
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// One table cell, rendered as a CSV field or a JSON value.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    fn opt(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }

    pub fn to_csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt_f64(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Cell::Num(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Int(n) => Value::from(*n),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Empty => Value::Null,
        }
    }
}

/// Named rectangular result set.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn to_csv(&self) -> Result<String, SweepError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let to_err = |e: csv::Error| SweepError::Io(e.to_string());
        w.write_record(&self.header).map_err(to_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::to_csv)).map_err(to_err)?;
        }
        let bytes = w.into_inner().map_err(|e| SweepError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| SweepError::Io(e.to_string()))
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> =
                        self.header.iter().cloned().zip(row.iter().map(Cell::to_json)).collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }

    /// Writes `<name>.csv` and/or `<name>.json` into `dir`.
    pub fn write(&self, dir: &Path, output: &OutputConfig) -> Result<Vec<PathBuf>, SweepError> {
        let mut files = Vec::new();
        if output.wants(Format::Csv) {
            let path = dir.join(format!("{}.csv", self.name));
            fs::write(&path, self.to_csv()?).map_err(io_err(&path))?;
            files.push(path);
        }
        if output.wants(Format::Json) {
            let path = dir.join(format!("{}.json", self.name));
            fs::write(&path, json_text(&self.to_json())?).map_err(io_err(&path))?;
            files.push(path);
        }
        Ok(files)
    }
}

fn json_text<T: Serialize>(value: &T) -> Result<String, SweepError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| SweepError::Io(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Ok,
    /// Stable Bogoliubov solution with ω_α ≤ 0.
    Soft,
    /// Non-positive bare modes or |Γ| ≥ 1.
    Unstable,
}

impl PointStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PointStatus::Ok => "ok",
            PointStatus::Soft => "soft",
            PointStatus::Unstable => "unstable",
        }
    }
}

/// Mode chain at one k with its stability verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSolution {
    pub bare: BareModes,
    pub solution: Option<ModeSolution>,
    pub status: PointStatus,
}

impl PointSolution {
    pub fn at(plan: &Plan, k: &KVector) -> Self {
        let bare = BareModes::compute(&plan.model, &plan.spec, k);
        match solve_modes(&plan.model, &plan.spec, k) {
            Ok(sol) => {
                let status = if sol.hybrid.is_soft() { PointStatus::Soft } else { PointStatus::Ok };
                Self { bare, solution: Some(sol), status }
            }
            Err(_) => Self { bare, solution: None, status: PointStatus::Unstable },
        }
    }

    pub fn abs_gamma(&self) -> Option<f64> {
        (self.bare.epsilon > 0.0).then(|| self.bare.g.norm() / self.bare.epsilon)
    }
}

fn pool(plan: &Plan) -> Result<rayon::ThreadPool, SweepError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(plan.threads.get())
        .build()
        .map_err(|e| SweepError::Runtime(format!("thread pool: {e}")))
}

fn par_map<T: Send>(plan: &Plan, f: impl Fn(usize, &KVector) -> T + Sync) -> Result<Vec<T>, SweepError> {
    Ok(pool(plan)?.install(|| plan.ks.par_iter().enumerate().map(|(i, k)| f(i, k)).collect()))
}

pub fn dispersion_table(plan: &Plan) -> Result<Table, SweepError> {
    let mut table = Table::new(
        "dispersion",
        &[
            "k_index", "kx", "ky", "kz", "epsilon", "abs_g", "omega_a", "omega_b", "omega_alpha", "omega_beta",
            "abs_gamma", "r", "phi", "status",
        ],
    );
    table.rows = par_map(plan, |i, k| {
        let p = PointSolution::at(plan, k);
        let hybrid = p.solution.map(|s| s.hybrid);
        let bog = p.solution.map(|s| s.bogoliubov);
        vec![
            Cell::Int(i as u64),
            Cell::Num(k.0[0]),
            Cell::Num(k.0[1]),
            Cell::Num(k.0[2]),
            Cell::Num(p.bare.epsilon),
            Cell::Num(p.bare.g.norm()),
            Cell::Num(p.bare.omega_a),
            Cell::Num(p.bare.omega_b),
            Cell::opt(hybrid.map(|h| h.omega_alpha)),
            Cell::opt(hybrid.map(|h| h.omega_beta)),
            Cell::opt(p.abs_gamma()),
            Cell::opt(bog.map(|b| b.r)),
            Cell::opt(bog.map(|b| b.phi)),
            Cell::Text(p.status.as_str().into()),
        ]
    })?;
    Ok(table)
}

pub fn epr_path_table(plan: &Plan) -> Result<Table, SweepError> {
    let mut table = Table::new("epr_path", &["k_index", "k_scalar", "delta0", "regime", "status"]);
    table.rows = par_map(plan, |i, k| {
        let p = PointSolution::at(plan, k);
        let delta0 = p.solution.map(|s| ground_delta0(s.bogoliubov.r, s.bogoliubov.phi));
        vec![
            Cell::Int(i as u64),
            Cell::Num(k.norm()),
            Cell::opt(delta0),
            delta0.map_or(Cell::Empty, |d| Cell::Text(Regime::classify(d).as_str().into())),
            Cell::Text(p.status.as_str().into()),
        ]
    })?;
    Ok(table)
}

/// Entanglement entropy of the (x, y) eigenstate in nats.
pub fn state_entropy(r: f64, phi: f64, x: usize, y: usize, tail_tol: f64) -> crate::Result<f64> {
    let n = choose_excited_truncation(r, x, y, tail_tol)?;
    let seq = eigenstate_coefficients(r, phi, x, y, n)?;
    let norm = seq.norm_sqr();
    Ok(crate::squeezed::shannon(seq.values.iter().map(|c| c.norm_sqr() / norm)))
}

pub fn state_column(x: usize, y: usize) -> String {
    if x < 10 && y < 10 {
        format!("E_{x}{y}")
    } else {
        format!("E_{x}_{y}")
    }
}

/// Entropies per k; `bits` switches from nats to bits.
pub fn entanglement_table(plan: &Plan, bits: bool) -> Result<Table, SweepError> {
    let scale = if bits { std::f64::consts::LN_2.recip() } else { 1.0 };
    let columns: Vec<String> = plan.states.iter().map(|&(x, y)| state_column(x, y)).collect();
    let mut header: Vec<&str> = vec!["k_index", "abs_gamma", "r", "delta0", "E_ground"];
    header.extend(columns.iter().map(String::as_str));
    header.push("status");
    let mut table = Table::new("entanglement", &header);
    table.rows = par_map(plan, |i, k| {
        let p = PointSolution::at(plan, k);
        let mut row = vec![Cell::Int(i as u64), Cell::opt(p.abs_gamma())];
        match p.solution {
            Some(sol) => {
                let (r, phi) = (sol.bogoliubov.r, sol.bogoliubov.phi);
                row.push(Cell::Num(r));
                row.push(Cell::Num(ground_delta0(r, phi)));
                row.push(Cell::Num(crate::squeezed::ground_entropy(r) * scale));
                for &(x, y) in &plan.states {
                    match state_entropy(r, phi, x, y, plan.tail_tol) {
                        Ok(e) => row.push(Cell::Num(e * scale)),
                        Err(e) => {
                            log::warn!("k_index {i}: E_{x}{y} unavailable: {e}");
                            row.push(Cell::Empty);
                        }
                    }
                }
            }
            None => row.extend(std::iter::repeat_n(Cell::Empty, 3 + plan.states.len())),
        }
        row.push(Cell::Text(p.status.as_str().into()));
        row
    })?;
    Ok(table)
}

/// Per-k outcome of the read-out protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPoint {
    pub k_index: usize,
    pub status: PointStatus,
    pub outcome: Result<ProtocolReport, ProtocolError>,
}

#[derive(Serialize)]
struct ReportFile<'a> {
    k_index: usize,
    status: &'a str,
    #[serde(flatten)]
    report: &'a ProtocolReport,
}

#[derive(Serialize)]
struct FailureFile<'a> {
    k_index: usize,
    status: &'a str,
    stage: Stage,
    error: String,
}

impl ExperimentPoint {
    pub fn status_label(&self) -> &'static str {
        match &self.outcome {
            Ok(_) => self.status.as_str(),
            Err(e) if e.stage == Stage::Modes => PointStatus::Unstable.as_str(),
            Err(_) => "failed",
        }
    }

    pub fn to_json(&self) -> Result<String, SweepError> {
        let status = self.status_label();
        match &self.outcome {
            Ok(report) => json_text(&ReportFile { k_index: self.k_index, status, report }),
            Err(e) => json_text(&FailureFile { k_index: self.k_index, status, stage: e.stage, error: e.source.to_string() }),
        }
    }
}

/// Acquisition used at path index `i`: the master seed mixed with `i`.
pub fn point_acquisition(base: &Acquisition, i: usize) -> Acquisition {
    Acquisition { seed: derive_seed(base.seed, i as u64), ..*base }
}

pub fn experiment_points(plan: &Plan) -> Result<Vec<ExperimentPoint>, SweepError> {
    let cavity = plan
        .cavity
        .ok_or_else(|| SweepError::Config(ConfigError::new("cavity", "section required by the experiment command")))?;
    par_map(plan, |i, k| {
        let status = PointSolution::at(plan, k).status;
        let acq = point_acquisition(&plan.acquisition, i);
        let outcome = run_protocol(&plan.model, &plan.spec, k, &cavity, &acq);
        if let Err(e) = &outcome {
            log::warn!("k_index {i}: {e}");
        }
        ExperimentPoint { k_index: i, status, outcome }
    })
}

pub fn experiment_table(points: &[ExperimentPoint]) -> Table {
    let mut table = Table::new(
        "experiment",
        &["k_index", "f_hat", "delta0_true", "delta0_est", "rel_err", "converged", "status"],
    );
    table.rows = points
        .iter()
        .map(|p| {
            let mut row = vec![Cell::Int(p.k_index as u64)];
            match &p.outcome {
                Ok(r) => row.extend([
                    Cell::Num(r.f_hat),
                    Cell::Num(r.delta0_true),
                    Cell::Num(r.delta0_est),
                    Cell::Num(r.rel_err),
                    Cell::Bool(r.converged),
                ]),
                Err(e) => {
                    row.extend(std::iter::repeat_n(Cell::Empty, 4));
                    row.push(if e.stage == Stage::Reconstruction { Cell::Bool(false) } else { Cell::Empty });
                }
            }
            row.push(Cell::Text(p.status_label().into()));
            row
        })
        .collect();
    table
}

fn series_csv(report: &ProtocolReport) -> Result<String, SweepError> {
    let mut table = Table::new("series", &["t", "value"]);
    table.rows = report
        .series
        .times
        .iter()
        .zip(&report.series.values)
        .map(|(&t, &v)| vec![Cell::Num(t), Cell::Num(v)])
        .collect();
    table.to_csv()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Dispersion,
    Entanglement { bits: bool },
    EprPath,
    Experiment,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub points: usize,
    pub flagged: usize,
}

fn points_flagged(table: &Table) -> usize {
    table.rows.len() - count_status(table, "ok")
}

fn count_status(table: &Table, status: &str) -> usize {
    let col = table.column("status").expect("status column");
    table.rows.iter().filter(|r| r[col] == Cell::Text(status.into())).count()
}

/// Runs one sweep and writes its files under the output directory.
///
/// Files are written even when no k-point is stable; that case is then
/// reported as a runtime error.
pub fn execute(command: Command, plan: &Plan) -> Result<RunSummary, SweepError> {
    let dir = plan.output.directory.clone();
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let (files, flagged, unusable) = match command {
        Command::Dispersion => {
            let t = dispersion_table(plan)?;
            (t.write(&dir, &plan.output)?, points_flagged(&t), count_status(&t, "unstable"))
        }
        Command::Entanglement { bits } => {
            let t = entanglement_table(plan, bits)?;
            (t.write(&dir, &plan.output)?, points_flagged(&t), count_status(&t, "unstable"))
        }
        Command::EprPath => {
            let t = epr_path_table(plan)?;
            (t.write(&dir, &plan.output)?, points_flagged(&t), count_status(&t, "unstable"))
        }
        Command::Experiment => {
            let points = experiment_points(plan)?;
            let mut files = Vec::new();
            if plan.output.wants(Format::Csv) {
                let path = dir.join("experiment.csv");
                fs::write(&path, experiment_table(&points).to_csv()?).map_err(io_err(&path))?;
                files.push(path);
            }
            if plan.output.wants(Format::Json) {
                let reports = dir.join("reports");
                fs::create_dir_all(&reports).map_err(io_err(&reports))?;
                for p in &points {
                    let path = reports.join(format!("k_{:04}.json", p.k_index));
                    fs::write(&path, p.to_json()?).map_err(io_err(&path))?;
                    files.push(path);
                }
            }
            if plan.output.dump_series {
                let series = dir.join("series");
                fs::create_dir_all(&series).map_err(io_err(&series))?;
                for p in &points {
                    if let Ok(report) = &p.outcome {
                        let path = series.join(format!("k_{:04}.csv", p.k_index));
                        fs::write(&path, series_csv(report)?).map_err(io_err(&path))?;
                        files.push(path);
                    }
                }
            }
            let flagged = points.iter().filter(|p| p.status_label() != "ok").count();
            let unusable = points.iter().filter(|p| p.outcome.is_err()).count();
            (files, flagged, unusable)
        }
    };
    let points = plan.ks.len();
    if points > 0 && unusable == points {
        return Err(SweepError::Runtime(match command {
            Command::Experiment => "the protocol failed at every k-point".into(),
            _ => "every k-point on the path is unstable".into(),
        }));
    }
    Ok(RunSummary { files, points, flagged })
}

/// Findings of `validate`: human-readable lines plus the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Validation {
    pub lines: Vec<String>,
    pub exit_code: i32,
}

fn compact_indices(indices: &[usize]) -> String {
    let mut parts = Vec::new();
    let mut i = 0;
    while i < indices.len() {
        let start = indices[i];
        let mut end = start;
        while i + 1 < indices.len() && indices[i + 1] == end + 1 {
            i += 1;
            end = indices[i];
        }
        parts.push(if start == end { start.to_string() } else { format!("{start}-{end}") });
        i += 1;
    }
    parts.join(",")
}

/// Checks a configuration text and reports stability, truncations and a
/// runtime estimate. Never fails; problems become lines and an exit code.
pub fn validate(text: &str, overrides: &Overrides) -> Validation {
    let mut lines = Vec::new();
    let plan = RunConfig::from_toml_str(text).and_then(|mut cfg| {
        cfg.apply(overrides);
        cfg.resolve()
    });
    let plan = match plan {
        Ok(p) => p,
        Err(e) => {
            lines.push(format!("error: {e}"));
            return Validation { lines, exit_code: 1 };
        }
    };
    lines.push(format!(
        "config ok: lattice {} (z1={}, z2={}), {} k-points",
        plan.spec.name(),
        plan.spec.z1(),
        plan.spec.z2(),
        plan.ks.len()
    ));

    let points: Vec<PointSolution> = plan.ks.iter().map(|k| PointSolution::at(&plan, k)).collect();
    lines.push("stability map (k_index, |k|, |Gamma|, status):".into());
    for (i, (k, p)) in plan.ks.iter().zip(&points).enumerate() {
        let g = p.abs_gamma().map_or_else(|| "-".to_string(), fmt_f64);
        lines.push(format!("  {i} {} {g} {}", fmt_f64(k.norm()), p.status.as_str()));
    }
    let indices = |status| -> Vec<usize> {
        points.iter().enumerate().filter(|(_, p)| p.status == status).map(|(i, _)| i).collect()
    };
    let unstable = indices(PointStatus::Unstable);
    let soft = indices(PointStatus::Soft);
    if !unstable.is_empty() {
        lines.push(format!("warning: unstable (|Gamma| >= 1 or non-positive bare mode) at k indices {}", compact_indices(&unstable)));
    }
    if !soft.is_empty() {
        lines.push(format!("warning: soft hybrid mode (omega_alpha <= 0) at k indices {}", compact_indices(&soft)));
    }

    let stable: Vec<&ModeSolution> = points.iter().filter_map(|p| p.solution.as_ref()).collect();
    let mut states = vec![(0, 0)];
    states.extend(plan.states.iter().copied().filter(|&s| s != (0, 0)));
    for (x, y) in states {
        let mut worst: Option<usize> = None;
        let mut failed = 0;
        for s in &stable {
            match choose_excited_truncation(s.bogoliubov.r, x, y, plan.tail_tol) {
                Ok(n) => worst = Some(worst.map_or(n, |w| w.max(n))),
                Err(_) => failed += 1,
            }
        }
        match worst {
            Some(n) => lines.push(format!("truncation ({x},{y}): max n_trunc = {n}")),
            None if stable.is_empty() => {}
            None => lines.push(format!("truncation ({x},{y}): unavailable")),
        }
        if failed > 0 {
            lines.push(format!("warning: truncation ({x},{y}) exceeds the cap at {failed} k-points"));
        }
    }

    if plan.cavity.is_none() {
        lines.push("note: no [cavity] section, the experiment command is unavailable".into());
    }
    let probe = points.iter().position(|p| p.status == PointStatus::Ok);
    if let Some(i) = probe {
        let start = Instant::now();
        let k = &plan.ks[i];
        for &(x, y) in &plan.states {
            let s = points[i].solution.expect("stable point");
            let _ = state_entropy(s.bogoliubov.r, s.bogoliubov.phi, x, y, plan.tail_tol);
        }
        if let Some(cav) = plan.cavity {
            let _ = run_protocol(&plan.model, &plan.spec, k, &cav, &point_acquisition(&plan.acquisition, i));
        }
        let per_point = start.elapsed().as_secs_f64();
        let workers = match plan.threads {
            Threads::Auto => rayon::current_num_threads(),
            Threads::Count(n) => n,
        };
        let estimate = per_point * plan.ks.len() as f64 / workers as f64;
        lines.push(format!("estimated runtime: {estimate:.3} s (threads: {workers})"));
    }

    let exit_code = if unstable.len() == points.len() {
        lines.push("error: every k-point on the path is unstable".into());
        2
    } else {
        0
    };
    Validation { lines, exit_code }
}

/// Parses, overrides and resolves a config file.
pub fn load_plan(path: &Path, overrides: &Overrides) -> Result<Plan, SweepError> {
    let mut cfg = RunConfig::from_path(path)?;
    cfg.apply(overrides);
    Ok(cfg.resolve()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn plan_from(extra: &str, model: &str, n_points: usize) -> Plan {
        let text = format!(
            r#"
            threads = 2
            [model]
            {model}
            [lattice]
            preset = "g_type_simple_cubic"
            [kpath]
            direction = [0.0, 0.0, 1.0]
            k_max = {PI}
            n_points = {n_points}
            {extra}
            "#
        );
        RunConfig::from_toml_str(&text).unwrap().resolve().unwrap()
    }

    const HEISENBERG: &str = "J1 = 1.0\nK_aniso = 0.5\nS = 1.0";

    fn num(table: &Table, row: usize, col: &str) -> f64 {
        match &table.rows[row][table.column(col).unwrap()] {
            Cell::Num(x) => *x,
            other => panic!("{col} is {other:?}"),
        }
    }

    #[test]
    fn float_format_round_trips() {
        for x in [7.0, 0.1, 1.0 / 3.0, 1e-20, 6.02e23, -2.5e-7, 123456.789, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(7.0), "7");
        assert_eq!(fmt_f64(1e-20), "1e-20");
    }

    #[test]
    fn dispersion_rows_and_values() {
        let plan = plan_from("", HEISENBERG, 3);
        let t = dispersion_table(&plan).unwrap();
        assert_eq!(t.rows.len(), 3);
        assert_eq!(num(&t, 0, "epsilon"), 7.0);
        assert!((num(&t, 0, "abs_g") - 6.0).abs() < 1e-14);
        let csv = t.to_csv().unwrap();
        assert!(csv.starts_with(
            "k_index,kx,ky,kz,epsilon,abs_g,omega_a,omega_b,omega_alpha,omega_beta,abs_gamma,r,phi,status\n"
        ));
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn unstable_points_are_flagged_not_fatal() {
        let plan = plan_from("", "J1 = 1.0\nK_aniso = 0.5\nS = 1.0\nB_field = 8.0", 3);
        let t = dispersion_table(&plan).unwrap();
        let status = t.column("status").unwrap();
        let r = t.column("r").unwrap();
        for row in &t.rows {
            assert_eq!(row[status], Cell::Text("unstable".into()));
            assert_eq!(row[r], Cell::Empty);
        }
    }

    #[test]
    fn decoupled_columns() {
        let plan = plan_from("", "J1 = 0.0\nK_aniso = 0.5\nS = 1.0", 5);
        let d = dispersion_table(&plan).unwrap();
        let e = entanglement_table(&plan, false).unwrap();
        let p = epr_path_table(&plan).unwrap();
        for i in 0..5 {
            assert_eq!(num(&d, i, "r"), 0.0);
            assert_eq!(num(&p, i, "delta0"), 1.0);
            assert_eq!(num(&e, i, "delta0"), 1.0);
            for col in ["E_ground", "E_10", "E_01", "E_11"] {
                assert_eq!(num(&e, i, col), 0.0, "{col}");
            }
        }
    }

    #[test]
    fn entanglement_symmetry_and_units() {
        let plan = plan_from("", HEISENBERG, 4);
        let nats = entanglement_table(&plan, false).unwrap();
        let bits = entanglement_table(&plan, true).unwrap();
        for i in 0..4 {
            assert_eq!(num(&nats, i, "E_10"), num(&nats, i, "E_01"));
            let r = num(&nats, i, "r");
            assert!((num(&nats, i, "E_ground") - crate::squeezed::ground_entropy(r)).abs() < 1e-8);
            assert!((num(&bits, i, "E_11") * std::f64::consts::LN_2 - num(&nats, i, "E_11")).abs() < 1e-14);
        }
    }

    #[test]
    fn heisenberg_path_is_entangled() {
        let plan = plan_from("", HEISENBERG, 9);
        let t = epr_path_table(&plan).unwrap();
        for i in 0..9 {
            assert!(num(&t, i, "delta0") <= 1.0 + 1e-15);
        }
    }

    #[test]
    fn exact_experiment_closes_the_loop() {
        let extra = "[cavity]\nomega = \"resonant_alpha\"\nlambda = 0.05\n[acquisition]\nshots = \"exact\"";
        let plan = plan_from(extra, HEISENBERG, 6);
        let points = experiment_points(&plan).unwrap();
        let t = experiment_table(&points);
        for i in 0..6 {
            assert!(num(&t, i, "rel_err") < 1e-6);
        }
    }

    #[test]
    fn amplitude_coupling_fails_only_at_origin() {
        let extra = "[cavity]\nomega = \"resonant_alpha\"\nA0 = 0.05\n[acquisition]\nshots = \"exact\"";
        let plan = plan_from(extra, HEISENBERG, 4);
        let points = experiment_points(&plan).unwrap();
        assert_eq!(points[0].status_label(), "failed");
        assert!(points[0].to_json().unwrap().contains("\"stage\": \"coupling\""));
        assert!(points[1..].iter().all(|p| p.outcome.is_ok()));
    }

    #[test]
    fn validate_reports() {
        let good = format!(
            "[model]\n{HEISENBERG}\n[lattice]\npreset = \"g_type_simple_cubic\"\n[kpath]\ndirection = [0.0, 0.0, 1.0]\nk_max = 3.0\nn_points = 4\n"
        );
        let v = validate(&good, &Overrides::default());
        assert_eq!(v.exit_code, 0);
        assert!(v.lines.iter().any(|l| l.starts_with("truncation (1,1)")));

        let hot = good.replace("S = 1.0", "S = 1.0\nJ2 = 0.0\nD1 = 3.0");
        let v = validate(&hot, &Overrides::default());
        assert!(v.lines.iter().any(|l| l.starts_with("warning: unstable")), "{:?}", v.lines);

        let bad = good.replace("n_points = 4", "n_points = 4\nsteps = 2");
        let v = validate(&bad, &Overrides::default());
        assert_eq!(v.exit_code, 1);
        assert!(v.lines[0].contains("kpath"));
    }

    #[test]
    fn index_ranges() {
        assert_eq!(compact_indices(&[0, 1, 2, 5, 7, 8]), "0-2,5,7-8");
        assert_eq!(compact_indices(&[]), "");
    }
}
