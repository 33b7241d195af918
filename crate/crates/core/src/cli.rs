//! Config ingestion, orchestration and report emission for the `reduce` binary.
//!
//! A config is `{"mode": ..., "problem": {...}, "output": {...}, "seed": u64}`.
//! `problem` is parsed according to `mode`. Reports are canonical JSON (sorted
//! keys, no timestamp) plus per-mode CSV tables; both carry the tool version
//! and the SHA-256 of the canonical `{mode, problem, seed}`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::classical::{classify_classical, integrate_flow, ClassicalClassification};
use crate::comparator::{
    coherent_matrix_elements, comparator_scalars, Comparator, ComparatorScalars, ComparatorSpec, CoherentElements,
};
use crate::error::{invalid, Error, Result};
use crate::grid::GridSpec;
use crate::hamiltonian::{HamiltonianSpec, PhasePoint};
use crate::packets::{GaussianPacket, WidthConfig};
use crate::reduction::{
    ehrenfest_residuals, squeeze_sweep, verdict, EhrenfestReport, ReductionProblem, ReductionReport, SqueezeTable,
    Verdict,
};
use crate::scaling::{hepp_experiment, FamilyReading, HeppTable};
use crate::spectral::{
    classify_quantum, grid_vector, position_projector, ClassifierThresholds, FiniteEvolution, QuantumClassification,
    StayCurve,
};

pub const TOOL: &str = "qcreduce";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: u8 = 0;
pub const EXIT_NOT_REDUCED: u8 = 1;
pub const EXIT_SCHEMA: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Reduce,
    ClassifyClassical,
    ClassifyQuantum,
    ComparatorAudit,
    Scale,
    Squeeze,
    Ehrenfest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

fn default_dir() -> PathBuf {
    PathBuf::from(".")
}
fn default_formats() -> Vec<Format> {
    vec![Format::Json, Format::Csv]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_dir(), formats: default_formats() }
    }
}

fn default_classical_dt() -> f64 {
    1e-2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalTask {
    pub hamiltonian: HamiltonianSpec,
    pub alpha0: PhasePoint,
    pub horizon: f64,
    #[serde(default = "default_classical_dt")]
    pub dt: f64,
    /// Tested radii R for the bound test.
    pub radii: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum QuantumState {
    /// Gaussian packet with width matrix M0.
    Packet {
        alpha: PhasePoint,
        #[serde(default)]
        width: WidthConfig,
    },
    /// Equal-weight superposition of the listed grid eigenstates (dense evolution only).
    Eigenstates(Vec<usize>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Observation {
    /// Indicator of a position interval (dense evolution only).
    Interval([f64; 2]),
    /// Normalised comparator e^{−sN} (split-operator evolution only).
    Comparator(ComparatorSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Evolution {
    Dense,
    SplitOperator,
}

fn default_quantum_dt() -> f64 {
    0.05
}
fn default_curve_rows() -> usize {
    200
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumTask {
    pub hamiltonian: HamiltonianSpec,
    pub grid: GridSpec,
    pub state: QuantumState,
    pub observe: Observation,
    pub evolution: Evolution,
    pub horizon: f64,
    #[serde(default = "default_quantum_dt")]
    pub dt: f64,
    #[serde(default)]
    pub thresholds: ClassifierThresholds,
    /// Rows of the exported (T, μ, τ) curve.
    #[serde(default = "default_curve_rows")]
    pub curve_rows: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditTask {
    pub comparator: ComparatorSpec,
    /// Phase points for the coherent-state closed forms (1D).
    #[serde(default)]
    pub points: Vec<PhasePoint>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Value")]
pub struct ScaleTask {
    #[serde(flatten)]
    pub problem: ReductionProblem,
    /// Strictly decreasing λ values.
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub reading: FamilyReading,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Value")]
pub struct SqueezeTask {
    #[serde(flatten)]
    pub problem: ReductionProblem,
    pub dilations: Vec<f64>,
}

/// Splits the mode's own keys off a flat object; the rest must form a `ReductionProblem`.
fn split_problem(value: Value, keys: &[&str]) -> Result<(ReductionProblem, serde_json::Map<String, Value>)> {
    let Value::Object(mut map) = value else {
        return Err(Error::Schema("problem must be an object".into()));
    };
    let mut own = serde_json::Map::new();
    for k in keys {
        if let Some(v) = map.remove(*k) {
            own.insert(k.to_string(), v);
        }
    }
    let problem = serde_json::from_value(Value::Object(map)).map_err(|e| Error::Schema(e.to_string()))?;
    Ok((problem, own))
}

fn take<T: serde::de::DeserializeOwned>(own: &mut serde_json::Map<String, Value>, key: &str) -> Result<Option<T>> {
    own.remove(key)
        .map(|v| serde_json::from_value(v).map_err(|e| Error::Schema(format!("{key}: {e}"))))
        .transpose()
}

impl TryFrom<Value> for ScaleTask {
    type Error = Error;
    fn try_from(v: Value) -> Result<Self> {
        let (problem, mut own) = split_problem(v, &["lambdas", "reading"])?;
        let lambdas = take(&mut own, "lambdas")?.ok_or_else(|| Error::Schema("missing field `lambdas`".into()))?;
        let reading = take(&mut own, "reading")?.unwrap_or_default();
        Ok(Self { problem, lambdas, reading })
    }
}

impl TryFrom<Value> for SqueezeTask {
    type Error = Error;
    fn try_from(v: Value) -> Result<Self> {
        let (problem, mut own) = split_problem(v, &["dilations"])?;
        let dilations = take(&mut own, "dilations")?.ok_or_else(|| Error::Schema("missing field `dilations`".into()))?;
        Ok(Self { problem, dilations })
    }
}

fn default_ehrenfest_dt() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EhrenfestTask {
    pub hamiltonian: HamiltonianSpec,
    pub alpha0: PhasePoint,
    #[serde(default)]
    pub width: WidthConfig,
    #[serde(default)]
    pub grid: GridSpec,
    pub horizon: f64,
    #[serde(default = "default_ehrenfest_dt")]
    pub dt: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Task {
    Reduce(ReductionProblem),
    ClassifyClassical(ClassicalTask),
    ClassifyQuantum(QuantumTask),
    ComparatorAudit(AuditTask),
    Scale(ScaleTask),
    Squeeze(SqueezeTask),
    Ehrenfest(EhrenfestTask),
}

impl Task {
    pub fn mode(&self) -> Mode {
        match self {
            Task::Reduce(_) => Mode::Reduce,
            Task::ClassifyClassical(_) => Mode::ClassifyClassical,
            Task::ClassifyQuantum(_) => Mode::ClassifyQuantum,
            Task::ComparatorAudit(_) => Mode::ComparatorAudit,
            Task::Scale(_) => Mode::Scale,
            Task::Squeeze(_) => Mode::Squeeze,
            Task::Ehrenfest(_) => Mode::Ehrenfest,
        }
    }

    fn parse(mode: Mode, problem: Value) -> Result<Self> {
        let schema = |e: serde_json::Error| Error::Schema(format!("problem: {e}"));
        Ok(match mode {
            Mode::Reduce => Task::Reduce(serde_json::from_value(problem).map_err(schema)?),
            Mode::ClassifyClassical => Task::ClassifyClassical(serde_json::from_value(problem).map_err(schema)?),
            Mode::ClassifyQuantum => Task::ClassifyQuantum(serde_json::from_value(problem).map_err(schema)?),
            Mode::ComparatorAudit => Task::ComparatorAudit(serde_json::from_value(problem).map_err(schema)?),
            Mode::Scale => Task::Scale(serde_json::from_value(problem).map_err(schema)?),
            Mode::Squeeze => Task::Squeeze(serde_json::from_value(problem).map_err(schema)?),
            Mode::Ehrenfest => Task::Ehrenfest(serde_json::from_value(problem).map_err(schema)?),
        })
    }

    /// Cheap checks that must pass before any computation starts.
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                invalid(format!("{what} must be positive and finite"))
            }
        };
        match self {
            Task::Reduce(p) => p.validate(),
            Task::ClassifyClassical(t) => {
                positive(t.horizon, "horizon")?;
                positive(t.dt, "dt")?;
                if t.alpha0.dim() != t.hamiltonian.dimension() {
                    return invalid("alpha0 and Hamiltonian dimensions must agree");
                }
                if t.radii.is_empty() || t.radii.iter().any(|r| !(*r > 0.0)) {
                    return invalid("radii must be non-empty and positive");
                }
                Ok(())
            }
            Task::ClassifyQuantum(t) => {
                positive(t.horizon, "horizon")?;
                positive(t.dt, "dt")?;
                if t.curve_rows == 0 {
                    return invalid("curve_rows must be positive");
                }
                let th = &t.thresholds;
                positive(th.transit_increment, "transit_increment")?;
                positive(th.stay_floor, "stay_floor")?;
                positive(th.stay_drift, "stay_drift")?;
                if t.hamiltonian.dimension() != 1 || t.grid.dimension() != 1 {
                    return Err(Error::Unsupported("quantum classification is 1D only".into()));
                }
                match (&t.evolution, &t.observe, &t.state) {
                    (Evolution::Dense, Observation::Comparator(_), _) => {
                        invalid("dense evolution observes an interval")
                    }
                    (Evolution::SplitOperator, Observation::Interval(_), _) => {
                        invalid("split-operator evolution observes the comparator")
                    }
                    (Evolution::SplitOperator, _, QuantumState::Eigenstates(_)) => {
                        invalid("eigenstate superpositions need dense evolution")
                    }
                    (_, _, QuantumState::Eigenstates(v)) if v.is_empty() || v.iter().any(|k| *k >= t.grid.points()) => {
                        invalid("eigenstate indices must be non-empty and below the grid size")
                    }
                    (_, Observation::Interval([a, b]), _) if !(a < b) => invalid("interval must satisfy lo < hi"),
                    (Evolution::Dense, _, _) if t.grid.points() > crate::spectral::MAX_DIMENSION => {
                        invalid("grid too large for dense evolution")
                    }
                    _ => Ok(()),
                }
            }
            Task::ComparatorAudit(t) => {
                if t.points.iter().any(|p| p.dim() != 1) {
                    return invalid("audit points are one-dimensional");
                }
                Ok(())
            }
            Task::Scale(t) => {
                t.problem.validate()?;
                if t.lambdas.is_empty()
                    || t.lambdas.iter().any(|l| !(*l > 0.0 && *l <= 1.0))
                    || t.lambdas.windows(2).any(|w| !(w[1] < w[0]))
                {
                    return invalid("lambdas must lie in (0, 1] and decrease strictly");
                }
                Ok(())
            }
            Task::Squeeze(t) => {
                t.problem.validate()?;
                if t.dilations.is_empty() || t.dilations.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
                    return invalid("dilations must be positive");
                }
                Ok(())
            }
            Task::Ehrenfest(t) => {
                positive(t.horizon, "horizon")?;
                positive(t.dt, "dt")?;
                let n = t.hamiltonian.dimension();
                if t.alpha0.dim() != n || t.grid.dimension() != n {
                    return invalid("alpha0, grid and Hamiltonian dimensions must agree");
                }
                t.width.to_matrix(n).map(|_| ())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub task: Task,
    pub output: OutputConfig,
    pub seed: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mode: Mode,
    problem: Value,
    #[serde(default)]
    output: OutputConfig,
    #[serde(default)]
    seed: u64,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        let task = Task::parse(raw.mode, raw.problem)?;
        Ok(Self { task, output: raw.output, seed: raw.seed })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn mode(&self) -> Mode {
        self.task.mode()
    }

    /// Canonical form of everything that affects the computation.
    pub fn canonical(&self) -> Result<Value> {
        Ok(json!({
            "mode": self.mode(),
            "problem": serde_json::to_value(&self.task)?,
            "seed": self.seed,
        }))
    }

    /// Hex SHA-256 of the canonical config.
    pub fn hash(&self) -> Result<String> {
        let bytes = serde_json::to_vec(&self.canonical()?)?;
        Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
    }
}

/// Grid, time step and comparator truncation used by a run; null where not applicable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub grid: Option<GridSpec>,
    pub dt: Option<f64>,
    pub truncation: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub mode: Mode,
    /// Canonical config echo (all tolerances included).
    pub config: Value,
    pub provenance: Provenance,
    /// Mode-specific result; non-finite numbers appear as null.
    pub result: Value,
}

/// One CSV table: file name and rows (header first).
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub body: String,
}

#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub tables: Vec<Table>,
    /// Verdict of a `reduce` run.
    pub verdict: Option<Verdict>,
}

/// Data columns of each CSV file; `n` is the configuration-space dimension.
pub fn documented_columns(mode: Mode, n: usize) -> Vec<String> {
    let own = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let axes = |tag: &'static str| (0..n).map(move |i| format!("{tag}_{i}"));
    match mode {
        Mode::Reduce => {
            let mut c = vec!["t".to_string()];
            c.extend(axes("err_xi"));
            c.extend(axes("err_pi"));
            c.extend(own(&[
                "error_max",
                "wu_distance",
                "duhamel_bound",
                "one_minus_w",
                "inverse_norm_u",
                "inverse_norm_w",
                "theorem_bound",
                "theorem_bound_duhamel",
                "closed_form_bound",
                "closed_form_bound_duhamel",
            ]));
            c
        }
        Mode::ClassifyClassical => {
            let mut c = vec!["t".to_string()];
            c.extend(axes("xi"));
            c.extend(axes("pi"));
            c.push("energy".into());
            c
        }
        Mode::ClassifyQuantum => own(&["T", "mu", "tau"]),
        Mode::ComparatorAudit => own(&[
            "xi",
            "pi",
            "diag",
            "diag_measured",
            "inv_norm_sq",
            "inv_norm_sq_measured",
            "one_minus_bound",
            "one_minus_measured",
        ]),
        Mode::Scale => own(&["lambda", "error", "bound"]),
        Mode::Squeeze => own(&["d", "duhamel_term", "comparator_term", "magnitude", "total_bound", "resolved"]),
        Mode::Ehrenfest => own(&["t", "identity_residual", "classicality_gap"]),
    }
}

fn csv_string(write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<String> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::InvalidInput(e.to_string()))
}

fn e10(v: f64) -> String {
    format!("{v:.10e}")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditReport {
    pub scalars: ComparatorScalars,
    pub points: Vec<PhasePoint>,
    pub coherent: Vec<CoherentElements>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuantumReport {
    pub classification: QuantumClassification,
    /// Eigen-decomposition levels (dense evolution).
    pub levels: Option<Vec<f64>>,
}

fn run_quantum(t: &QuantumTask) -> Result<(QuantumReport, StayCurve)> {
    let spec = &t.hamiltonian;
    match t.evolution {
        Evolution::Dense => {
            let evo = FiniteEvolution::from_grid(spec, &t.grid)?;
            let psi = match &t.state {
                QuantumState::Packet { alpha, width } => {
                    let packet = GaussianPacket::from_width(alpha.clone(), width.to_matrix(1)?)?;
                    grid_vector(&packet.sample_on_grid(&t.grid)?.normalized()?)
                }
                QuantumState::Eigenstates(ks) => {
                    let mut v = crate::spectral::CVector::zeros(evo.dim());
                    for &k in ks {
                        v += evo.eigenvector(k);
                    }
                    let norm = v.norm();
                    v.unscale(norm)
                }
            };
            let Observation::Interval([lo, hi]) = t.observe else {
                unreachable!("validated")
            };
            let omega = position_projector(&t.grid, |x| (lo..=hi).contains(&x));
            let curve = StayCurve::finite(&evo, &psi, &omega, t.horizon, Some(t.dt))?;
            let classification = classify_quantum(&curve, t.horizon, t.thresholds)?;
            Ok((QuantumReport { classification, levels: Some(evo.levels()) }, curve))
        }
        Evolution::SplitOperator => {
            let QuantumState::Packet { alpha, width } = &t.state else {
                unreachable!("validated")
            };
            let Observation::Comparator(cs) = &t.observe else {
                unreachable!("validated")
            };
            let packet = GaussianPacket::from_width(alpha.clone(), width.to_matrix(1)?)?;
            let psi = packet.sample_on_grid(&t.grid)?.normalized()?;
            let comparator = Comparator::new(cs, &t.grid)?;
            let curve = StayCurve::grid(spec, &psi, &comparator, t.horizon, t.dt)?;
            let classification = classify_quantum(&curve, t.horizon, t.thresholds)?;
            Ok((QuantumReport { classification, levels: None }, curve))
        }
    }
}

fn write_squeeze(table: &SqueezeTable, w: &mut Vec<u8>) -> Result<()> {
    use std::io::Write;
    writeln!(w, "{}", documented_columns(Mode::Squeeze, 1).join(","))?;
    for r in &table.rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            e10(r.d),
            e10(r.duhamel_term),
            e10(r.comparator_term),
            e10(r.magnitude),
            e10(r.total_bound),
            r.resolved
        )?;
    }
    Ok(())
}

fn write_ehrenfest(rep: &EhrenfestReport, w: &mut Vec<u8>) -> Result<()> {
    use std::io::Write;
    writeln!(w, "{}", documented_columns(Mode::Ehrenfest, 1).join(","))?;
    for k in 0..rep.times.len() {
        writeln!(w, "{},{},{}", e10(rep.times[k]), e10(rep.identity_residual[k]), e10(rep.classicality_gap[k]))?;
    }
    Ok(())
}

fn write_audit(rep: &AuditReport, w: &mut Vec<u8>) -> Result<()> {
    use std::io::Write;
    writeln!(w, "{}", documented_columns(Mode::ComparatorAudit, 1).join(","))?;
    for (p, c) in rep.points.iter().zip(&rep.coherent) {
        let row = [
            p.xi[0],
            p.pi[0],
            c.diag,
            c.diag_measured,
            c.inv_norm_sq,
            c.inv_norm_sq_measured,
            c.one_minus_bound,
            c.one_minus_measured,
        ];
        writeln!(w, "{}", row.map(e10).join(","))?;
    }
    Ok(())
}

fn reduction_provenance(p: &ReductionProblem) -> Provenance {
    Provenance { grid: Some(p.grid), dt: Some(p.dt), truncation: Some(p.comparator.order()) }
}

/// Runs a validated config. Errors here are numerical failures.
fn compute(task: &Task) -> Result<(Value, Provenance, Vec<Table>, Option<Verdict>)> {
    let table = |name: &str, body: String| Table { name: name.to_string(), body };
    Ok(match task {
        Task::Reduce(p) => {
            let report: ReductionReport = verdict(p)?;
            let tables = report
                .runs
                .iter()
                .enumerate()
                .map(|(k, r)| Ok(table(&format!("run_{k}.csv"), csv_string(|w| r.write_csv(w))?)))
                .collect::<Result<Vec<_>>>()?;
            (serde_json::to_value(&report)?, reduction_provenance(p), tables, Some(report.verdict))
        }
        Task::ClassifyClassical(t) => {
            let c: ClassicalClassification = classify_classical(&t.hamiltonian, &t.alpha0, t.horizon, t.dt, &t.radii)?;
            let mut tables = Vec::new();
            // The trajectory is exported only when the orbit stayed finite over the horizon.
            if c.escaped_at.is_none() {
                let traj = integrate_flow(&t.hamiltonian, &t.alpha0, t.horizon, t.dt)?;
                tables.push(table("trajectory.csv", csv_string(|w| traj.write_csv(w))?));
            }
            let prov = Provenance { grid: None, dt: Some(c.dt), truncation: None };
            (serde_json::to_value(&c)?, prov, tables, None)
        }
        Task::ClassifyQuantum(t) => {
            let (report, curve) = run_quantum(t)?;
            let rows = t.curve_rows;
            let horizons: Vec<f64> = (1..=rows).map(|k| t.horizon * k as f64 / rows as f64).collect();
            let body = csv_string(|w| curve.write_csv(w, &horizons))?;
            let truncation = match &t.observe {
                Observation::Comparator(c) => Some(c.order()),
                Observation::Interval(_) => None,
            };
            let prov = Provenance { grid: Some(t.grid), dt: Some(curve.dt), truncation };
            (serde_json::to_value(&report)?, prov, vec![table("stay.csv", body)], None)
        }
        Task::ComparatorAudit(t) => {
            let scalars = comparator_scalars(&t.comparator)?;
            let coherent = t
                .points
                .iter()
                .map(|p| coherent_matrix_elements(&t.comparator, p))
                .collect::<Result<Vec<_>>>()?;
            let rep = AuditReport { scalars, points: t.points.clone(), coherent };
            let body = csv_string(|w| write_audit(&rep, w))?;
            let prov = Provenance { grid: None, dt: None, truncation: Some(t.comparator.order()) };
            (serde_json::to_value(&rep)?, prov, vec![table("coherent.csv", body)], None)
        }
        Task::Scale(t) => {
            let rep: HeppTable = hepp_experiment(&t.problem, &t.lambdas, t.reading)?;
            let body = csv_string(|w| rep.write_csv(w))?;
            (serde_json::to_value(&rep)?, reduction_provenance(&t.problem), vec![table("hepp.csv", body)], None)
        }
        Task::Squeeze(t) => {
            let rep = squeeze_sweep(&t.problem, &t.dilations)?;
            let body = csv_string(|w| write_squeeze(&rep, w))?;
            (serde_json::to_value(&rep)?, reduction_provenance(&t.problem), vec![table("squeeze.csv", body)], None)
        }
        Task::Ehrenfest(t) => {
            let n = t.hamiltonian.dimension();
            let packet = GaussianPacket::from_width(t.alpha0.clone(), t.width.to_matrix(n)?)?;
            let psi = packet.sample_on_grid(&t.grid)?.normalized()?;
            let rep = ehrenfest_residuals(&t.hamiltonian, &psi, t.horizon, t.dt)?;
            let body = csv_string(|w| write_ehrenfest(&rep, w))?;
            let prov = Provenance { grid: Some(t.grid), dt: Some(t.dt), truncation: None };
            (serde_json::to_value(&rep)?, prov, vec![table("ehrenfest.csv", body)], None)
        }
    })
}

/// Validates and runs a config in memory.
pub fn execute(config: &RunConfig) -> std::result::Result<Outcome, Failure> {
    config.task.validate().map_err(Failure::Schema)?;
    let hash = config.hash().map_err(Failure::Schema)?;
    let (result, provenance, tables, verdict) = compute(&config.task).map_err(Failure::Numerical)?;
    let report = Report {
        tool: TOOL.into(),
        version: VERSION.into(),
        config_hash: hash,
        mode: config.mode(),
        config: config.canonical().map_err(Failure::Schema)?,
        provenance,
        result,
    };
    Ok(Outcome { report, tables, verdict })
}

#[derive(Debug)]
pub enum Failure {
    Schema(Error),
    Numerical(Error),
    Output(Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Schema(_) => EXIT_SCHEMA,
            Failure::Numerical(_) | Failure::Output(_) => EXIT_NUMERICAL,
        }
    }

    pub fn error(&self) -> &Error {
        match self {
            Failure::Schema(e) | Failure::Numerical(e) | Failure::Output(e) => e,
        }
    }
}

/// Canonical JSON: keys sorted, two-space indentation, trailing newline.
pub fn emit_json(report: &Report) -> Result<String> {
    let value = serde_json::to_value(report)?;
    Ok(serde_json::to_string_pretty(&value)? + "\n")
}

pub fn parse_report(text: &str) -> Result<Report> {
    Ok(serde_json::from_str(text)?)
}

fn csv_preamble(report: &Report) -> String {
    format!("# {} {} config_hash={}\n", report.tool, report.version, report.config_hash)
}

/// Writes report.json and the CSV tables; returns the written paths.
pub fn emit_report(outcome: &Outcome, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if formats.contains(&Format::Json) {
        let path = dir.join("report.json");
        fs::write(&path, emit_json(&outcome.report)?)?;
        written.push(path);
    }
    if formats.contains(&Format::Csv) {
        for t in &outcome.tables {
            let path = dir.join(&t.name);
            fs::write(&path, csv_preamble(&outcome.report) + &t.body)?;
            written.push(path);
        }
    }
    Ok(written)
}

fn write_diagnostic(dir: &Path, config: Option<&RunConfig>, failure: &Failure) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let kind = match failure {
        Failure::Schema(_) => "schema",
        Failure::Numerical(_) => "numerical",
        Failure::Output(_) => "output",
    };
    let diag = json!({
        "tool": TOOL,
        "version": VERSION,
        "mode": config.map(|c| c.mode()),
        "config_hash": config.and_then(|c| c.hash().ok()),
        "kind": kind,
        "error": failure.error().to_string(),
        "detail": format!("{:?}", failure.error()),
    });
    let path = dir.join("error.json");
    fs::write(&path, serde_json::to_string_pretty(&diag)? + "\n")?;
    Ok(path)
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub assert_reduced: bool,
    pub out: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
}

/// Loads, runs and emits; returns the process exit code.
pub fn run(config_path: &Path, opts: &RunOptions) -> u8 {
    let config = match RunConfig::load(config_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_SCHEMA;
        }
    };
    let dir = opts.out.clone().unwrap_or_else(|| config.output.dir.clone());
    let formats = opts.formats.clone().unwrap_or_else(|| config.output.formats.clone());
    let result = execute(&config).and_then(|o| emit_report(&o, &dir, &formats).map(|_| o).map_err(Failure::Output));
    match result {
        Ok(outcome) => {
            if let Some(v) = outcome.verdict {
                println!("verdict: {}", serde_json::to_value(v).unwrap_or(Value::Null).as_str().unwrap_or("?"));
                if opts.assert_reduced && v != Verdict::Reduced {
                    return EXIT_NOT_REDUCED;
                }
            }
            EXIT_OK
        }
        Err(failure) => {
            eprintln!("error: {}", failure.error());
            if let Failure::Numerical(_) = failure {
                match write_diagnostic(&dir, Some(&config), &failure) {
                    Ok(p) => eprintln!("diagnostic written to {}", p.display()),
                    Err(e) => eprintln!("could not write diagnostic: {e}"),
                }
            }
            failure.exit_code()
        }
    }
}

/// REDUCE_THREADS caps the worker pool; unset or invalid leaves rayon's default.
pub fn configure_threads() {
    if let Some(n) = std::env::var("REDUCE_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Template config for a mode.
pub fn template(mode: Mode) -> Value {
    let cubic = json!("cubic-perturbed");
    let origin = json!({"xi": [0.0], "pi": [0.0]});
    let problem = match mode {
        Mode::Reduce => json!({
            "hamiltonian": "harmonic",
            "alpha0": {"xi": [1.0], "pi": [0.0]},
            "horizon": std::f64::consts::TAU,
            "epsilon": 1e-6,
            "grid": {"points": 1024, "half_width": 20.0},
            "samples": 100
        }),
        Mode::ClassifyClassical => json!({
            "hamiltonian": "quartic",
            "alpha0": {"xi": [1.0], "pi": [0.0]},
            "horizon": 50.0,
            "radii": [1.0, 2.0, 4.0, 8.0]
        }),
        Mode::ClassifyQuantum => json!({
            "hamiltonian": "double-well",
            "grid": {"points": 256, "half_width": 8.0},
            "state": {"eigenstates": [0, 1]},
            "observe": {"interval": [0.0, 8.0]},
            "evolution": "dense",
            "horizon": 200.0
        }),
        Mode::ComparatorAudit => json!({
            "comparator": {"s": std::f64::consts::LN_2},
            "points": [origin, {"xi": [1.0], "pi": [0.5]}]
        }),
        Mode::Scale => json!({
            "hamiltonian": cubic,
            "alpha0": {"xi": [1.0], "pi": [0.0]},
            "horizon": 2.0,
            "epsilon": 1.0,
            "lambdas": [1.0, 0.25],
            "samples": 50
        }),
        Mode::Squeeze => json!({
            "hamiltonian": cubic,
            "alpha0": origin,
            "horizon": 0.2,
            "epsilon": 1.0,
            "comparator": {"s": 0.2},
            "dilations": [0.25, 0.5, 1.0, 2.0, 4.0],
            "samples": 20
        }),
        Mode::Ehrenfest => json!({
            "hamiltonian": "quartic",
            "alpha0": {"xi": [1.0], "pi": [0.0]},
            "horizon": 1.0
        }),
    };
    json!({"mode": mode, "problem": problem, "output": {"dir": "out", "formats": ["json", "csv"]}, "seed": 0})
}

#[derive(Parser, Debug)]
#[command(name = "reduce", version, about = "Classical-limit reduction experiments driven by a JSON config")]
#[command(args_conflicts_with_subcommands = true)]
pub struct Cli {
    /// Run config (JSON).
    pub config: Option<PathBuf>,
    /// Exit with status 1 unless the verdict is "reduced".
    #[arg(long)]
    pub assert_reduced: bool,
    /// Output directory (overrides the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output formats (overrides the config).
    #[arg(long, value_delimiter = ',')]
    pub format: Option<Vec<Format>>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// List the built-in Hamiltonian presets.
    Presets,
    /// Print a template config for a mode.
    Template { mode: Mode },
    /// Print comparator scalars for e^{−sN} without a config file.
    Audit {
        #[arg(long)]
        s: f64,
        #[arg(long)]
        order: Option<usize>,
    },
}

fn print_json(v: &impl Serialize) -> u8 {
    match serde_json::to_string_pretty(v) {
        Ok(s) => {
            println!("{s}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_NUMERICAL
        }
    }
}

pub fn run_cli(cli: Cli) -> u8 {
    configure_threads();
    match cli.command {
        Some(Command::Presets) => {
            for name in crate::corpus::PRESETS {
                println!("{name}");
            }
            EXIT_OK
        }
        Some(Command::Template { mode }) => print_json(&template(mode)),
        Some(Command::Audit { s, order }) => {
            let spec = ComparatorSpec::new(s).and_then(|c| match order {
                Some(n) => c.with_order(n),
                None => Ok(c),
            });
            match spec.and_then(|c| comparator_scalars(&c)) {
                Ok(scalars) => print_json(&scalars),
                Err(e @ (Error::InvalidInput(_) | Error::Schema(_))) => {
                    eprintln!("error: {e}");
                    EXIT_SCHEMA
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_NUMERICAL
                }
            }
        }
        None => match cli.config {
            Some(path) => run(
                &path,
                &RunOptions { assert_reduced: cli.assert_reduced, out: cli.out, formats: cli.format },
            ),
            None => {
                eprintln!("error: a config path or a subcommand is required (see --help)");
                EXIT_SCHEMA
            }
        },
    }
}

pub fn run_from_args() -> ExitCode {
    ExitCode::from(run_cli(Cli::parse()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(v: Value) -> RunConfig {
        RunConfig::from_json(&v.to_string()).unwrap()
    }

    #[test]
    fn templates_parse_and_validate() {
        for mode in Mode::value_variants() {
            let c = config(template(*mode));
            assert_eq!(c.mode(), *mode);
            c.task.validate().unwrap();
        }
    }

    #[test]
    fn unknown_fields_are_schema_errors() {
        let mut v = template(Mode::Reduce);
        v["problem"]["epsilom"] = json!(1.0);
        assert!(matches!(RunConfig::from_json(&v.to_string()), Err(Error::Schema(_))));
        let mut v = template(Mode::Reduce);
        v["extra"] = json!(1);
        assert!(matches!(RunConfig::from_json(&v.to_string()), Err(Error::Schema(_))));
        let v = json!({"mode": "reduce-everything", "problem": {}});
        assert!(matches!(RunConfig::from_json(&v.to_string()), Err(Error::Schema(_))));
    }

    #[test]
    fn hash_tracks_tolerances_not_output() {
        let base = config(template(Mode::Reduce));
        let mut v = template(Mode::Reduce);
        v["output"]["dir"] = json!("elsewhere");
        assert_eq!(config(v).hash().unwrap(), base.hash().unwrap());
        for (key, val) in [("epsilon", json!(2e-6)), ("dt", json!(5e-4)), ("magnitude", json!(3.0))] {
            let mut v = template(Mode::Reduce);
            v["problem"][key] = val;
            assert_ne!(config(v).hash().unwrap(), base.hash().unwrap(), "{key}");
        }
        let mut v = template(Mode::ClassifyQuantum);
        let h0 = config(v.clone()).hash().unwrap();
        v["problem"]["thresholds"] = json!({"stay_drift": 0.1});
        assert_ne!(config(v).hash().unwrap(), h0);
    }

    #[test]
    fn flattened_problem_rejects_unknown_fields() {
        let mut v = template(Mode::Squeeze);
        v["problem"]["dilation"] = json!([1.0]);
        assert!(RunConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn invalid_values_fail_validation_before_compute() {
        let mut v = template(Mode::Scale);
        v["problem"]["lambdas"] = json!([0.25, 1.0]);
        let err = execute(&config(v)).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_SCHEMA);
        let mut v = template(Mode::ClassifyQuantum);
        v["problem"]["evolution"] = json!("split-operator");
        assert_eq!(execute(&config(v)).unwrap_err().exit_code(), EXIT_SCHEMA);
    }
}
