//! Command implementations. Each returns a structured outcome so tests can
//! inspect results without scraping printed text.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;

use secest::attack_sim::{plant_system, random_scenario, random_system, random_vector, run_scenario, ObservationWindow};
use secest::estimator::{estimate_with, EstimateOptions, EstimateReport, Method};
use secest::strong_obs::{find_indistinguishable_pair, is_sparse_strongly_observable, is_strongly_observable};
use secest::{Error, LtiSystem, StateSpace, TolerancePolicy, Vector};

use crate::files::{read_system, write_json, ReportFile, RunMeta, ScenarioFile};
use crate::{fail, RunConfig, EXIT_INFEASIBLE, EXIT_STRUCTURE};

/// Estimates within this relative error count as exact recovery.
pub const RECOVERY_TOL: f64 = 1e-6;

/// `‖x̂ − x‖ / max(1, ‖x‖)`.
pub fn relative_error(x_hat: &Vector, x: &Vector) -> f64 {
    (x_hat - x).norm() / x.norm().max(1.0)
}

fn out_dir(path: &Path) -> anyhow::Result<&Path> {
    std::fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(path)
}

fn fmt_vec(v: &Vector) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6e}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Maps estimator errors that have dedicated exit codes.
fn classify(err: Error, r: usize, s: usize) -> anyhow::Error {
    match err {
        Error::NotSparseStronglyObservable { gamma_u, gamma_y } => fail(
            EXIT_STRUCTURE,
            format!(
                "system is not ({}, {})-sparse strongly observable; failing subsystem with attacked inputs {gamma_u} and trusted outputs {gamma_y}",
                2 * r,
                2 * s
            ),
        ),
        e @ Error::Infeasible { .. } => fail(EXIT_INFEASIBLE, e.to_string()),
        e => e.into(),
    }
}

pub struct EstimateOutcome {
    pub report: ReportFile,
    pub x_true: Vector,
    pub relative_error: f64,
    pub window: ObservationWindow,
    pub opb: Option<String>,
}

#[derive(Serialize)]
struct TruthFile {
    estimate_time: usize,
    x_true: Vec<f64>,
    relative_error: f64,
}

fn run_estimation(cfg: &RunConfig, capture_opb: bool) -> anyhow::Result<(EstimateOutcome, LtiSystem)> {
    let sys = read_system(cfg.system.as_deref().expect("validated"))?;
    let mut file = ScenarioFile::read(cfg.scenario.as_deref().expect("validated"))?;
    file.r = cfg.r.unwrap_or(file.r);
    file.s = cfg.s.unwrap_or(file.s);
    let scen = file.materialize(&sys)?;
    let (window, truth) = run_scenario(&sys, &scen.attack, &scen.x0, &scen.u_ctrl, scen.horizon)?;
    let method = cfg.single_method();
    let opts = EstimateOptions {
        check_sso: !cfg.skip_sso_check,
        capture_opb,
        ..EstimateOptions::with_method(method)
    };
    let rep = estimate_with(&sys, &window, file.r, file.s, &opts).map_err(|e| classify(e, file.r, file.s))?;
    let relative_error = relative_error(&rep.x_hat, &truth.x_at_estimate_time);
    let outcome = EstimateOutcome {
        report: ReportFile::new(&rep, method.name(), window.t_start()),
        x_true: truth.x_at_estimate_time,
        relative_error,
        window,
        opb: rep.opb,
    };
    Ok((outcome, sys))
}

pub fn estimate(cfg: &RunConfig, out: &mut dyn Write) -> anyhow::Result<EstimateOutcome> {
    let (outcome, _) = run_estimation(cfg, cfg.dump_opb.is_some())?;
    let rep = &outcome.report;
    writeln!(out, "x_hat(t = {}) = {}", rep.estimate_time, fmt_vec(&Vector::from_column_slice(&rep.x_hat)))?;
    writeln!(out, "attacked inputs: {:?}", rep.b)?;
    writeln!(out, "attacked outputs: {:?}", rep.c)?;
    writeln!(out, "sat_calls: {}", rep.sat_calls)?;
    writeln!(out, "relative error vs simulation: {:.3e}", outcome.relative_error)?;
    if let Some(dir) = &cfg.out {
        let dir = out_dir(dir)?;
        write_json(&dir.join("report.json"), rep)?;
        write_json(
            &dir.join("truth.json"),
            &TruthFile {
                estimate_time: rep.estimate_time,
                x_true: outcome.x_true.iter().copied().collect(),
                relative_error: outcome.relative_error,
            },
        )?;
        std::fs::write(dir.join("window.csv"), outcome.window.to_csv())?;
    }
    if let (Some(path), Some(text)) = (&cfg.dump_opb, &outcome.opb) {
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(outcome)
}

pub fn export_opb(cfg: &RunConfig, out: &mut dyn Write) -> anyhow::Result<()> {
    let (outcome, _) = run_estimation(cfg, true)?;
    let text = outcome.opb.expect("requested");
    match &cfg.dump_opb {
        Some(path) => {
            std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
            writeln!(out, "wrote {} after {} SAT calls", path.display(), outcome.report.sat_calls)?;
        }
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct SsoOutcome {
    pub r: usize,
    pub s: usize,
    pub holds: bool,
    /// Failing subsystem, 1-based.
    pub witness_inputs: Option<Vec<usize>>,
    pub witness_outputs: Option<Vec<usize>>,
    pub subsets_checked: usize,
    /// Plain strong observability of the whole system over `tau` samples.
    pub strongly_observable: bool,
    pub tau: usize,
}

/// Prints the result; a failing check is reported with exit status 2.
pub fn check_sso(cfg: &RunConfig, out: &mut dyn Write) -> anyhow::Result<SsoOutcome> {
    let sys = read_system(cfg.system.as_deref().expect("validated"))?;
    let (r, s) = (cfg.r.expect("validated"), cfg.s.expect("validated"));
    let pol = TolerancePolicy::default();
    let rep = is_sparse_strongly_observable(&sys, r, s, &pol)?;
    let tau = cfg.tau.unwrap_or(sys.n());
    let outcome = SsoOutcome {
        r,
        s,
        holds: rep.holds,
        witness_inputs: rep.witness_gamma_u.as_ref().map(|g| g.to_one_based()),
        witness_outputs: rep.witness_gamma_y.as_ref().map(|g| g.to_one_based()),
        subsets_checked: rep.subsets_checked,
        strongly_observable: is_strongly_observable(&sys, Some(tau), &pol)?,
        tau,
    };
    writeln!(out, "({r}, {s})-sparse strong observability: {}", if outcome.holds { "holds" } else { "fails" })?;
    if let (Some(gu), Some(gy)) = (&rep.witness_gamma_u, &rep.witness_gamma_y) {
        writeln!(out, "failing subsystem: attacked inputs {gu}, trusted outputs {gy}")?;
    }
    writeln!(out, "subsets checked: {}", outcome.subsets_checked)?;
    writeln!(out, "strongly observable over {tau} samples: {}", outcome.strongly_observable)?;
    if let Some(dir) = &cfg.out {
        write_json(&out_dir(dir)?.join("sso.json"), &outcome)?;
    }
    if outcome.holds {
        Ok(outcome)
    } else {
        Err(fail(EXIT_STRUCTURE, format!("system is not ({r}, {s})-sparse strongly observable")))
    }
}

pub struct WitnessOutcome {
    pub files: [PathBuf; 2],
    pub x0: [Vector; 2],
    /// Largest entrywise gap between the two replayed output streams.
    pub output_gap: f64,
}

/// Simulates a scenario file and returns its captured window.
pub fn replay(sys: &LtiSystem, file: &ScenarioFile) -> anyhow::Result<ObservationWindow> {
    let scen = file.materialize(sys)?;
    let (win, _) = run_scenario(sys, &scen.attack, &scen.x0, &scen.u_ctrl, scen.horizon)?;
    Ok(win)
}

pub fn witness(cfg: &RunConfig, out: &mut dyn Write) -> anyhow::Result<WitnessOutcome> {
    let sys = read_system(cfg.system.as_deref().expect("validated"))?;
    let (r, s) = (cfg.r.expect("validated"), cfg.s.expect("validated"));
    let Some(pair) = find_indistinguishable_pair(&sys, r, s, &TolerancePolicy::default())? else {
        return Err(fail(
            EXIT_STRUCTURE,
            format!(
                "system is ({}, {})-sparse strongly observable; no indistinguishable pair exists",
                (2 * r).min(sys.m()),
                (2 * s).min(sys.p())
            ),
        ));
    };
    let dir = out_dir(cfg.out.as_deref().expect("validated"))?;
    let mut files = Vec::new();
    let mut windows = Vec::new();
    for (k, side) in [&pair.first, &pair.second].into_iter().enumerate() {
        let file = ScenarioFile::from_witness(side, r, s, pair.horizon);
        let path = dir.join(format!("witness_{}.json", k + 1));
        file.write(&path)?;
        // Replay from disk so the streams reflect exactly what was written.
        let win = replay(&sys, &ScenarioFile::read(&path)?)?;
        std::fs::write(dir.join(format!("witness_{}_window.csv", k + 1)), win.to_csv())?;
        files.push(path);
        windows.push(win);
    }
    let output_gap = (&windows[0].y - &windows[1].y).amax();
    let x0 = [pair.first.x0.clone(), pair.second.x0.clone()];
    writeln!(out, "x0 (first):  {}", fmt_vec(&x0[0]))?;
    writeln!(out, "x0 (second): {}", fmt_vec(&x0[1]))?;
    writeln!(out, "initial state gap: {:.3e}", (&x0[0] - &x0[1]).norm())?;
    writeln!(out, "largest observed output gap: {output_gap:.3e}")?;
    let [a, b]: [PathBuf; 2] = files.try_into().expect("two sides");
    Ok(WitnessOutcome {
        files: [a, b],
        x0,
        output_gap,
    })
}

/// One estimation inside a benchmark.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub r: usize,
    pub s: usize,
    pub method: String,
    pub trial: usize,
    pub sat_calls: Option<u64>,
    pub wall_time_s: Option<f64>,
    pub relative_error: Option<f64>,
    pub success: bool,
    pub error: Option<String>,
}

/// Averages over one benchmark point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub r: usize,
    pub s: usize,
    pub method: String,
    pub mean_sat_calls: f64,
    pub mean_wall_time_s: f64,
    pub success_rate: f64,
    /// Number of hypotheses with exactly `r` attacked inputs and `s`
    /// attacked outputs, the size of an exhaustive search.
    pub brute_force_bound: u128,
    pub trials: usize,
}

/// Column order of the benchmark summary CSV.
pub const BENCH_COLUMNS: [&str; 11] = [
    "n",
    "m",
    "p",
    "r",
    "s",
    "method",
    "mean_sat_calls",
    "mean_wall_time_s",
    "success_rate",
    "brute_force_bound",
    "trials",
];

/// Column order of the per-trial CSV.
pub const TRIAL_COLUMNS: [&str; 12] = [
    "n",
    "m",
    "p",
    "r",
    "s",
    "method",
    "trial",
    "sat_calls",
    "wall_time_s",
    "relative_error",
    "success",
    "error",
];

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Attack bounds for a random benchmark point: a fifth of the channels,
/// rounded up.
pub fn default_bounds(m: usize, p: usize) -> (usize, usize) {
    (m.div_ceil(5), p.div_ceil(5))
}

fn record(
    sys: &LtiSystem,
    r: usize,
    s: usize,
    method: Method,
    trial: usize,
    outcome: secest::Result<(EstimateReport, f64)>,
) -> TrialRecord {
    let (sat_calls, wall_time_s, relative_error, success, error) = match outcome {
        Ok((rep, err)) => (Some(rep.sat_calls), Some(rep.wall_time_s), Some(err), err <= RECOVERY_TOL, None),
        Err(e) => (None, None, None, false, Some(e.to_string())),
    };
    TrialRecord {
        n: sys.n(),
        m: sys.m(),
        p: sys.p(),
        r,
        s,
        method: method.name().to_string(),
        trial,
        sat_calls,
        wall_time_s,
        relative_error,
        success,
        error,
    }
}

/// Runs every method on one simulated window. Simulation time is excluded
/// from the reported wall time. The structural check is skipped: at
/// benchmark sizes it enumerates far more subsets than the estimator
/// explores, and generic random systems satisfy it.
fn run_trial(sys: &LtiSystem, r: usize, s: usize, methods: &[Method], trial: usize, seed: u64) -> anyhow::Result<Vec<TrialRecord>> {
    let n = sys.n();
    let scen = random_scenario(sys, r, s, n, seed.wrapping_add(1000))?;
    let x0 = random_vector(n, seed.wrapping_add(2000));
    let (win, truth) = run_scenario(sys, &scen, &x0, &vec![Vector::zeros(sys.m()); n], n)?;
    Ok(methods
        .iter()
        .map(|&method| {
            let opts = EstimateOptions {
                check_sso: false,
                ..EstimateOptions::with_method(method)
            };
            let outcome = estimate_with(sys, &win, r, s, &opts).map(|rep| {
                let err = relative_error(&rep.x_hat, &truth.x_at_estimate_time);
                (rep, err)
            });
            record(sys, r, s, method, trial, outcome)
        })
        .collect())
}

/// Groups trial records by `(p, method)` in first-seen order.
pub fn summarize(records: &[TrialRecord]) -> Vec<BenchRow> {
    let mut keys: Vec<(usize, String)> = Vec::new();
    for rec in records {
        let key = (rec.p, rec.method.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(p, method)| {
            let group: Vec<&TrialRecord> = records.iter().filter(|t| t.p == p && t.method == method).collect();
            let done: Vec<&&TrialRecord> = group.iter().filter(|t| t.sat_calls.is_some()).collect();
            let mean = |f: &dyn Fn(&TrialRecord) -> f64| {
                if done.is_empty() {
                    f64::NAN
                } else {
                    done.iter().map(|t| f(t)).sum::<f64>() / done.len() as f64
                }
            };
            let first = group[0];
            BenchRow {
                n: first.n,
                m: first.m,
                p,
                r: first.r,
                s: first.s,
                method,
                mean_sat_calls: mean(&|t| t.sat_calls.unwrap_or(0) as f64),
                mean_wall_time_s: mean(&|t| t.wall_time_s.unwrap_or(0.0)),
                success_rate: group.iter().filter(|t| t.success).count() as f64 / group.len() as f64,
                brute_force_bound: binomial(first.m, first.r) * binomial(p, first.s),
                trials: group.len(),
            }
        })
        .collect()
}

fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> anyhow::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_bench(dir: &Path, stem: &str, cfg: &RunConfig, rows: &[BenchRow], records: &[TrialRecord]) -> anyhow::Result<()> {
    write_csv(&dir.join(format!("{stem}.csv")), &BENCH_COLUMNS, rows)?;
    write_csv(&dir.join(format!("{stem}_trials.csv")), &TRIAL_COLUMNS, records)?;
    write_json(&dir.join(format!("{stem}_meta.json")), &RunMeta::capture(stem, cfg.seed, cfg.trials))
}

fn print_rows(out: &mut dyn Write, rows: &[BenchRow]) -> anyhow::Result<()> {
    for row in rows {
        writeln!(
            out,
            "p = {:>3} {:>8}: mean sat calls {:>9.2}, mean time {:.4} s, success {:.2} (bound {})",
            row.p, row.method, row.mean_sat_calls, row.mean_wall_time_s, row.success_rate, row.brute_force_bound
        )?;
    }
    Ok(())
}

/// Random systems of order `n` with `m` inputs, one point per output
/// count. Trials at a point share nothing and run in parallel.
pub fn bench_random(cfg: &RunConfig, out: &mut dyn Write) -> anyhow::Result<Vec<BenchRow>> {
    let methods = cfg.bench_methods();
    let dir = out_dir(cfg.out.as_deref().expect("validated"))?;
    let mut records = Vec::new();
    for &p in &cfg.p_grid {
        let (dr, ds) = default_bounds(cfg.m, p);
        let (r, s) = (cfg.r.unwrap_or(dr), cfg.s.unwrap_or(ds));
        let start = Instant::now();
        let point: Vec<Vec<TrialRecord>> = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let seed = cfg.seed.wrapping_mul(1_000_003).wrapping_add((p * 10_000 + trial) as u64);
                let sys = random_system(cfg.n, cfg.m, p, seed)?;
                run_trial(&sys, r, s, &methods, trial, seed)
            })
            .collect::<anyhow::Result<_>>()?;
        records.extend(point.into_iter().flatten());
        writeln!(out, "p = {p}: {} trials in {:.1} s", cfg.trials, start.elapsed().as_secs_f64())?;
    }
    let rows = summarize(&records);
    print_rows(out, &rows)?;
    write_bench(dir, "bench_random", cfg, &rows, &records)?;
    Ok(rows)
}

/// Plant-shaped systems with one attacked input and two attacked outputs.
pub fn bench_plant(cfg: &RunConfig, out: &mut dyn Write) -> anyhow::Result<Vec<BenchRow>> {
    let methods = cfg.bench_methods();
    let dir = out_dir(cfg.out.as_deref().expect("validated"))?;
    let (r, s) = (cfg.r.unwrap_or(1), cfg.s.unwrap_or(2));
    let per_trial: Vec<Vec<TrialRecord>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = cfg.seed.wrapping_add(trial as u64);
            let sys = plant_system(seed).map_err(|e| fail(EXIT_STRUCTURE, format!("plant generation failed: {e}")))?;
            run_trial(&sys, r, s, &methods, trial, seed)
        })
        .collect::<anyhow::Result<_>>()?;
    let records: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
    let rows = summarize(&records);
    print_rows(out, &rows)?;
    write_bench(dir, "bench_plant", cfg, &rows, &records)?;
    Ok(rows)
}
