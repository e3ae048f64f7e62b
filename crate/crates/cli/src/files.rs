//! On-disk formats: system and scenario JSON, report JSON, run metadata.

use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use secest::attack_sim::{random_scenario, random_vector, scenario_on_supports, AttackScenario};
use secest::estimator::EstimateReport;
use secest::lti::SystemFile;
use secest::strong_obs::WitnessScenario;
use secest::{IndexSet, LtiSystem, StateSpace, Vector};

/// Scenario description.
///
/// The required fields describe a random attack drawn from `seed`. The
/// optional fields pin parts of it: attacked sets (1-based), the initial
/// state, the controller input and the attack signals. Witness files carry
/// all of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub seed: u64,
    pub r: usize,
    pub s: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attacked_inputs: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attacked_outputs: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_ctrl: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_attack: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_attack: Option<Vec<Vec<f64>>>,
}

/// Everything needed to run one scenario.
#[derive(Debug, Clone)]
pub struct Materialized {
    pub attack: AttackScenario,
    pub x0: Vector,
    pub u_ctrl: Vec<Vector>,
    pub horizon: usize,
}

// Sub-seeds so the state, the controller input and the attack draw from
// independent streams.
const X0_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;
const U_STREAM: u64 = 0xbf58_476d_1ce4_e5b9;

fn stream_from_rows(rows: &[Vec<f64>], width: usize, horizon: usize, what: &str) -> anyhow::Result<Vec<Vector>> {
    if rows.len() < horizon {
        bail!("{what} has {} samples, scenario needs {horizon}", rows.len());
    }
    rows.iter()
        .enumerate()
        .map(|(t, row)| {
            if row.len() != width {
                bail!("{what} sample {t} has length {}, expected {width}", row.len());
            }
            Ok(Vector::from_column_slice(row))
        })
        .collect()
}

fn rows_from_stream(stream: &[Vector]) -> Vec<Vec<f64>> {
    stream.iter().map(|v| v.iter().copied().collect()).collect()
}

impl ScenarioFile {
    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading scenario {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing scenario {}", path.display()))
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        write_json(path, self)
    }

    /// Resolves defaults against `sys`.
    pub fn materialize(&self, sys: &LtiSystem) -> anyhow::Result<Materialized> {
        let (n, m, p) = (sys.n(), sys.m(), sys.p());
        let horizon = self.horizon;
        if horizon < n {
            bail!("scenario horizon T = {horizon} is shorter than the state dimension {n}");
        }
        let x0 = match &self.x0 {
            Some(v) if v.len() == n => Vector::from_column_slice(v),
            Some(v) => bail!("x0 has length {}, expected {n}", v.len()),
            None => random_vector(n, self.seed ^ X0_STREAM),
        };
        let u_ctrl = match &self.u_ctrl {
            Some(rows) => stream_from_rows(rows, m, horizon, "u_ctrl")?,
            None => {
                let flat = random_vector(m * horizon, self.seed ^ U_STREAM);
                (0..horizon).map(|t| flat.rows(t * m, m).into_owned()).collect()
            }
        };
        let mut attack = match (&self.attacked_inputs, &self.attacked_outputs) {
            (None, None) => random_scenario(sys, self.r, self.s, horizon, self.seed)?,
            (ins, outs) => {
                let gu = IndexSet::from_one_based(ins.as_deref().unwrap_or(&[]), m)?;
                let gy = IndexSet::from_one_based(outs.as_deref().unwrap_or(&[]), p)?;
                scenario_on_supports(gu, gy, horizon, self.seed)
            }
        };
        attack.r_bound = self.r;
        attack.s_bound = self.s;
        if let Some(rows) = &self.input_attack {
            attack.w_stream = stream_from_rows(rows, m, horizon, "input_attack")?;
        }
        if let Some(rows) = &self.output_attack {
            attack.a_stream = stream_from_rows(rows, p, horizon, "output_attack")?;
        }
        attack.validate()?;
        Ok(Materialized {
            attack,
            x0,
            u_ctrl,
            horizon,
        })
    }

    /// Fully pinned scenario file for one side of a witness pair.
    pub fn from_witness(w: &WitnessScenario, r: usize, s: usize, horizon: usize) -> Self {
        Self {
            seed: 0,
            r,
            s,
            horizon,
            attacked_inputs: Some(w.attack.attacked_inputs.to_one_based()),
            attacked_outputs: Some(w.attack.attacked_outputs.to_one_based()),
            x0: Some(w.x0.iter().copied().collect()),
            u_ctrl: Some(rows_from_stream(&w.u_ctrl[..horizon])),
            input_attack: Some(rows_from_stream(&w.attack.w_stream[..horizon])),
            output_attack: Some(rows_from_stream(&w.attack.a_stream[..horizon])),
        }
    }
}

pub fn read_system(path: &Path) -> anyhow::Result<LtiSystem> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading system {}", path.display()))?;
    let file: SystemFile = serde_json::from_str(&text).with_context(|| format!("parsing system {}", path.display()))?;
    file.to_system().with_context(|| format!("validating system {}", path.display()))
}

pub fn write_system(path: &Path, sys: &LtiSystem) -> anyhow::Result<()> {
    write_json(path, &SystemFile::from_system(sys))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Estimation result as written to `report.json`. Index lists are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub method: String,
    /// Time index of the estimated state.
    pub estimate_time: usize,
    pub x_hat: Vec<f64>,
    /// Inputs identified as attacked.
    pub b: Vec<usize>,
    /// Outputs identified as attacked.
    pub c: Vec<usize>,
    pub sat_calls: u64,
    pub theory_calls: u64,
    pub certificates_added: u64,
    pub wall_time_s: f64,
    pub residual: f64,
    pub epsilon: f64,
}

impl ReportFile {
    pub fn new(rep: &EstimateReport, method: &str, estimate_time: usize) -> Self {
        Self {
            method: method.to_string(),
            estimate_time,
            x_hat: rep.x_hat.iter().copied().collect(),
            b: rep.identified.attacked_inputs().to_one_based(),
            c: rep.identified.attacked_outputs().to_one_based(),
            sat_calls: rep.sat_calls,
            theory_calls: rep.theory_calls,
            certificates_added: rep.certificates_added,
            wall_time_s: rep.wall_time_s,
            residual: rep.residual,
            epsilon: rep.epsilon,
        }
    }
}

/// Where and how a run happened; written next to benchmark output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMeta {
    pub command: String,
    pub seed: u64,
    pub trials: usize,
    pub version: String,
    pub os: String,
    pub arch: String,
    pub cpus: usize,
    pub unix_time_s: u64,
}

impl RunMeta {
    pub fn capture(command: &str, seed: u64, trials: usize) -> Self {
        Self {
            command: command.to_string(),
            seed,
            trials,
            version: env!("CARGO_PKG_VERSION").to_string(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            unix_time_s: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }
}
