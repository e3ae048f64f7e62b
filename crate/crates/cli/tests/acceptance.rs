//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line; the process fails if any
//! criterion fails.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::{Duration, Instant};

use clap::Parser;

use secest::attack_sim::{random_scenario, random_system, random_vector, run_scenario};
use secest::estimator::{
    certificate_method1, certificate_method2, estimate_with, Certificate, ElementOrder, EstimateOptions, Method, TheorySolver,
};
use secest::sat_core::{ConflictClause, SatCore};
use secest::strong_obs::{is_sparse_strongly_observable, is_strongly_observable};
use secest::{IndexSet, LtiSystem, Matrix, StateSpace, Subsystem, TolerancePolicy, Vector};
use secest_cli::commands::{bench_plant, replay, witness};
use secest_cli::files::{write_system, ScenarioFile};
use secest_cli::RunConfig;

fn pol() -> TolerancePolicy {
    TolerancePolicy::default()
}

/// SplitMix64, so draws do not depend on any library's stream.
struct Rng(u64);

impl Rng {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    fn below(&mut self, k: usize) -> usize {
        (self.next() % k as u64) as usize
    }

    fn range(&mut self, lo: usize, hi: usize) -> usize {
        lo + self.below(hi - lo + 1)
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn rel_err(x_hat: &Vector, x: &Vector) -> f64 {
    (x_hat - x).norm() / x.norm().max(1.0)
}

// ---------------------------------------------------------------------------
// 1. Exact recovery on random systems.

/// Seeds tried per shape before it is skipped.
const SYSTEM_DRAWS: usize = 30;

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = Rng(1);
    let mut worst: f64 = 0.0;
    let mut ok = 0;
    let mut failures = Vec::new();
    let mut seed = 0u64;
    let mut skipped_shapes = 0;
    for trial in 0..100 {
        // Draw shapes where (2r, 2s) sparse strong observability is
        // generically possible: more trusted outputs than attacked inputs.
        // Long horizons with few trusted outputs leave singular values below
        // the rank cutoff, so some shapes never certify; those are redrawn.
        let (n, m, r, s, p, sys) = 'draw: loop {
            let n = rng.range(2, 20);
            let m = rng.range(1, 6);
            let r = rng.range(0, 2.min(m));
            let s = rng.range(0, 2);
            let p_min = (2 * r).min(m) + 2 * s + 1;
            if p_min > 12 {
                continue;
            }
            let p = rng.range(p_min, 12);
            for _ in 0..SYSTEM_DRAWS {
                seed += 1;
                let sys = random_system(n, m, p, seed).unwrap();
                if is_sparse_strongly_observable(&sys, (2 * r).min(m), (2 * s).min(p), &pol()).unwrap().holds {
                    break 'draw (n, m, r, s, p, sys);
                }
            }
            skipped_shapes += 1;
        };
        let horizon = n + rng.range(0, 5);
        let scen = random_scenario(&sys, r, s, horizon, seed ^ 0xa5a5).unwrap();
        let u: Vec<Vector> = (0..horizon).map(|t| random_vector(m, seed * 1000 + t as u64)).collect();
        let (win, truth) = run_scenario(&sys, &scen, &random_vector(n, seed ^ 0x5a5a), &u, horizon).unwrap();
        let opts = EstimateOptions {
            check_sso: false,
            ..EstimateOptions::default()
        };
        match estimate_with(&sys, &win, r, s, &opts) {
            Ok(rep) => {
                let e = rel_err(&rep.x_hat, &truth.x_at_estimate_time);
                worst = worst.max(e);
                if e <= 1e-6 {
                    ok += 1;
                } else {
                    failures.push(format!("trial {trial}: error {e:.2e}"));
                }
            }
            Err(e) => failures.push(format!("trial {trial} ({n},{m},{p},{r},{s}): {e}")),
        }
    }
    let elapsed = start.elapsed();
    let pass = ok == 100 && elapsed < Duration::from_secs(300);
    let mut detail = format!(
        "{ok}/100 recovered, worst relative error {worst:.2e}, {:.1} s, {skipped_shapes} shapes without a certified system",
        elapsed.as_secs_f64()
    );
    if let Some(f) = failures.first() {
        detail.push_str(&format!("; first failure {f}"));
    }
    Outcome::new(pass, detail)
}

// ---------------------------------------------------------------------------
// 2. Indistinguishable pairs for systems that are not sparse strongly
// observable.

fn cfg(args: &[&str]) -> RunConfig {
    RunConfig::parse_from(std::iter::once("secest").chain(args.iter().copied()))
}

fn criterion_2(tmp: &Path) -> Outcome {
    let mut ok = 0;
    let mut notes = Vec::new();
    let mut worst_gap: f64 = 0.0;
    let mut min_state_gap = f64::INFINITY;
    // Shapes where at most one output survives while inputs are unknown.
    let shapes = [(2, 2, 3, 1, 1), (3, 2, 3, 1, 1), (4, 1, 3, 1, 1), (3, 3, 4, 1, 1), (5, 2, 4, 1, 1)];
    for k in 0..20usize {
        let (n, m, p, r, s) = shapes[k % shapes.len()];
        let sys = random_system(n, m, p, 9000 + k as u64).unwrap();
        let dir = tmp.join(format!("witness_{k}"));
        std::fs::create_dir_all(&dir).unwrap();
        let sys_path = dir.join("system.json");
        write_system(&sys_path, &sys).unwrap();
        let (rs, ss) = (r.to_string(), s.to_string());
        let c = cfg(&["witness", "--system", sys_path.to_str().unwrap(), "-r", &rs, "-s", &ss, "--out", dir.to_str().unwrap()]);
        let outcome = match witness(&c, &mut std::io::sink()) {
            Ok(o) => o,
            Err(e) => {
                notes.push(format!("system {k}: {e}"));
                continue;
            }
        };
        let a = ScenarioFile::read(&outcome.files[0]).unwrap();
        let b = ScenarioFile::read(&outcome.files[1]).unwrap();
        let (wa, wb) = (replay(&sys, &a).unwrap(), replay(&sys, &b).unwrap());
        let y_gap = (&wa.y - &wb.y).amax();
        let u_gap = (&wa.u_ctrl - &wb.u_ctrl).amax();
        let x_gap = (Vector::from_vec(a.x0.clone().unwrap()) - Vector::from_vec(b.x0.clone().unwrap())).norm();
        worst_gap = worst_gap.max(y_gap.max(u_gap));
        min_state_gap = min_state_gap.min(x_gap);
        if y_gap <= 1e-8 && u_gap <= 1e-8 && x_gap > 1e-6 {
            ok += 1;
        } else {
            notes.push(format!("system {k}: output gap {y_gap:.2e}, input gap {u_gap:.2e}, state gap {x_gap:.2e}"));
        }
    }
    let mut detail = format!("{ok}/20 pairs, largest stream gap {worst_gap:.2e}, smallest state gap {min_state_gap:.2e}");
    if let Some(n) = notes.first() {
        detail.push_str(&format!("; {n}"));
    }
    Outcome::new(ok == 20, detail)
}

// ---------------------------------------------------------------------------
// 3. Structural tests against brute-force oracles.

/// Stacked output map over `n` steps, built directly from the definition.
fn batch_by_definition(a: &Matrix, b: &Matrix, c: &Matrix, d: &Matrix) -> (Matrix, Matrix) {
    let (n, m, p) = (a.nrows(), b.ncols(), c.nrows());
    let mut powers = vec![Matrix::identity(n, n)];
    for k in 1..n {
        powers.push(&powers[k - 1] * a);
    }
    let mut obs = Matrix::zeros(n * p, n);
    let mut inv = Matrix::zeros(n * p, n * m);
    for t in 0..n {
        obs.view_mut((t * p, 0), (p, n)).copy_from(&(c * &powers[t]));
        for k in 0..=t {
            let block = if k == t { d.clone() } else { c * &powers[t - k - 1] * b };
            inv.view_mut((t * p, k * m), (p, m)).copy_from(&block);
        }
    }
    (obs, inv)
}

/// Null space of a matrix by reduced row echelon form.
fn null_basis(m: &Matrix) -> Vec<Vector> {
    let mut a = m.clone();
    let (rows, cols) = a.shape();
    let tol = 1e-9 * a.amax().max(1.0);
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        if row == rows {
            break;
        }
        let (piv, val) = (row..rows).map(|r| (r, a[(r, col)].abs())).fold((row, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val <= tol {
            for r in row..rows {
                a[(r, col)] = 0.0;
            }
            continue;
        }
        a.swap_rows(row, piv);
        let lead = a[(row, col)];
        for k in 0..cols {
            a[(row, k)] /= lead;
        }
        for r in 0..rows {
            if r != row {
                let f = a[(r, col)];
                if f != 0.0 {
                    for k in 0..cols {
                        a[(r, k)] -= f * a[(row, k)];
                    }
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    (0..cols)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = Vector::zeros(cols);
            v[free] = 1.0;
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[(r, free)];
            }
            v
        })
        .collect()
}

/// Strongly observable iff no null vector of `[O | N]` moves the state.
fn so_by_null_space(a: &Matrix, b: &Matrix, c: &Matrix, d: &Matrix) -> bool {
    let n = a.nrows();
    if c.nrows() == 0 {
        return n == 0;
    }
    let (obs, inv) = batch_by_definition(a, b, c, d);
    let mut joint = Matrix::zeros(obs.nrows(), obs.ncols() + inv.ncols());
    joint.view_mut((0, 0), obs.shape()).copy_from(&obs);
    joint.view_mut((0, n), inv.shape()).copy_from(&inv);
    null_basis(&joint).iter().all(|v| v.rows(0, n).amax() < 1e-7)
}

fn sparse_int(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| if rng.below(3) == 0 { 0.0 } else { rng.range(0, 4) as f64 - 2.0 })
}

fn criterion_3() -> Outcome {
    let mut rng = Rng(3);
    let mut so_disagree = 0;
    let mut so_true = 0;
    for _ in 0..200 {
        let n = rng.range(1, 5);
        let m = rng.range(0, 3);
        let p = rng.range(1, 4);
        let (a, b, c, d) = (sparse_int(&mut rng, n, n), sparse_int(&mut rng, n, m), sparse_int(&mut rng, p, n), sparse_int(&mut rng, p, m));
        let want = so_by_null_space(&a, &b, &c, &d);
        let sys = Subsystem::new(a, b, c, d).unwrap();
        let got = is_strongly_observable(&sys, None, &pol()).unwrap();
        so_true += usize::from(want);
        so_disagree += usize::from(got != want);
    }

    let mut sso_disagree = 0;
    let mut systems = 0;
    let mut holds = 0;
    while systems < 60 {
        let n = rng.range(1, 4);
        let m = rng.range(1, 3);
        let p = rng.range(1, 4);
        let (a, b, c, d) = (sparse_int(&mut rng, n, n), sparse_int(&mut rng, n, m), sparse_int(&mut rng, p, n), sparse_int(&mut rng, p, m));
        let Ok(sys) = LtiSystem::new(a, b, c, d) else { continue };
        systems += 1;
        for r in 0..=m {
            for s in 0..=p {
                // Every subset, not only the extremal ones.
                let want = (0..=r).all(|ku| {
                    IndexSet::combinations(m, ku).all(|gu| {
                        (0..=s).all(|ks| {
                            IndexSet::combinations(p, ks).all(|dropped| {
                                let gy: Vec<usize> = dropped.complement().iter().collect();
                                let gu: Vec<usize> = gu.iter().collect();
                                so_by_null_space(sys.a(), &sys.b().select_columns(&gu), &sys.c().select_rows(&gy), &sys.d().select_rows(&gy).select_columns(&gu))
                            })
                        })
                    })
                });
                let got = is_sparse_strongly_observable(&sys, r, s, &pol()).unwrap().holds;
                holds += usize::from(want);
                sso_disagree += usize::from(got != want);
            }
        }
    }
    Outcome::new(
        so_disagree == 0 && sso_disagree == 0,
        format!(
            "strong observability: {so_disagree} disagreements on 200 quadruples ({so_true} observable); sparse: {sso_disagree} disagreements over {systems} systems and all bounds ({holds} holding)"
        ),
    )
}

// ---------------------------------------------------------------------------
// 4-6. Certificates on refuted hypotheses.

struct CertStats {
    hypotheses: usize,
    unsound: usize,
    reducible: usize,
    output_bound_violations: usize,
    size_bound_violations: usize,
    certificates: usize,
}

fn certificate_runs() -> CertStats {
    let mut st = CertStats {
        hypotheses: 0,
        unsound: 0,
        reducible: 0,
        output_bound_violations: 0,
        size_bound_violations: 0,
        certificates: 0,
    };
    let shapes = [(4, 2, 7, 1, 1), (5, 3, 9, 1, 2), (6, 2, 8, 1, 1), (4, 3, 10, 1, 2)];
    let mut seed = 40_000u64;
    let mut inst = 0;
    while st.hypotheses < 50 {
        let (n, m, p, r, s) = shapes[inst % shapes.len()];
        inst += 1;
        seed += 1;
        let sys = random_system(n, m, p, seed).unwrap();
        let ru = (2 * r).min(m);
        if !is_sparse_strongly_observable(&sys, ru, 2 * s, &pol()).unwrap().holds {
            continue;
        }
        let scen = random_scenario(&sys, r, s, n, seed).unwrap();
        let (win, _) = run_scenario(&sys, &scen, &random_vector(n, seed + 1), &vec![Vector::zeros(m); n], n).unwrap();
        let theory = TheorySolver::new(&sys, &win, &pol()).unwrap();
        // Up to five refuted hypotheses per instance, spread over the
        // SAT-feasible region.
        let mut taken = 0;
        'outer: for ku in 0..=r {
            for gu in IndexSet::combinations(m, ku) {
                for ks in 0..=s {
                    for attacked in IndexSet::combinations(p, ks) {
                        if taken == 5 || st.hypotheses == 50 {
                            break 'outer;
                        }
                        let gy = attacked.complement();
                        let failed = theory.solve(&gu, &gy).unwrap();
                        if failed.is_sat() {
                            continue;
                        }
                        taken += 1;
                        st.hypotheses += 1;
                        let m1 = certificate_method1(&theory, &gu, &gy, r, s, &failed).unwrap();
                        let m2 = certificate_method2(&theory, &gu, &gy, &ElementOrder::ALL).unwrap();
                        for cert in &m1 {
                            st.unsound += usize::from(!cert.is_conflict(&theory).unwrap());
                            st.output_bound_violations += usize::from(cert.trusted_outputs.len() > p - 2 * s + 1);
                        }
                        for cert in &m2 {
                            st.unsound += usize::from(!cert.is_conflict(&theory).unwrap());
                            let drop_in = cert.free_inputs.iter().any(|j| {
                                Certificate::new(cert.free_inputs.without(j), cert.trusted_outputs.clone()).is_conflict(&theory).unwrap()
                            });
                            let drop_out = cert.trusted_outputs.iter().any(|i| {
                                Certificate::new(cert.free_inputs.clone(), cert.trusted_outputs.without(i)).is_conflict(&theory).unwrap()
                            });
                            st.reducible += usize::from(drop_in || drop_out);
                        }
                        for cert in m1.iter().chain(&m2) {
                            st.certificates += 1;
                            st.size_bound_violations += usize::from(cert.size() <= m);
                        }
                    }
                }
            }
        }
    }
    st
}

// ---------------------------------------------------------------------------
// 7. Plant benchmark.

fn criterion_7(tmp: &Path) -> Outcome {
    let dir = tmp.join("plant");
    let c = cfg(&["bench-plant", "--trials", "20", "--seed", "0", "--out", dir.to_str().unwrap()]);
    let rows = match bench_plant(&c, &mut std::io::sink()) {
        Ok(rows) => rows,
        Err(e) => return Outcome::new(false, format!("benchmark failed: {e}")),
    };
    let find = |name: &str| rows.iter().find(|r| r.method == name).cloned();
    let (Some(m1), Some(m2)) = (find("method1"), find("method2")) else {
        return Outcome::new(false, "missing method rows");
    };
    let pass = m1.mean_sat_calls <= 60.0
        && m2.mean_sat_calls <= 25.0
        && m2.mean_sat_calls <= m1.mean_sat_calls
        && m1.success_rate == 1.0
        && m2.success_rate == 1.0;
    Outcome::new(
        pass,
        format!(
            "mean SAT calls method1 {:.2}, method2 {:.2}; success {:.2} / {:.2}",
            m1.mean_sat_calls, m2.mean_sat_calls, m1.success_rate, m2.success_rate
        ),
    )
}

// ---------------------------------------------------------------------------
// 8. One large random system.

fn criterion_8() -> Outcome {
    let (n, m, p, r, s) = (40, 10, 24, 2, 4);
    let sys = random_system(n, m, p, 7).unwrap();
    let scen = random_scenario(&sys, r, s, n, 8).unwrap();
    let (win, truth) = run_scenario(&sys, &scen, &random_vector(n, 9), &vec![Vector::zeros(m); n], n).unwrap();
    // The structural precheck would enumerate C(10,4)·C(24,8) subsets.
    let opts = EstimateOptions {
        check_sso: false,
        max_sat_calls: Some(5000),
        ..EstimateOptions::with_method(Method::Method2)
    };
    let start = Instant::now();
    let res = estimate_with(&sys, &win, r, s, &opts);
    let elapsed = start.elapsed();
    match res {
        Ok(rep) => {
            let e = rel_err(&rep.x_hat, &truth.x_at_estimate_time);
            let pass = rep.sat_calls <= 5000 && elapsed <= Duration::from_secs(600);
            Outcome::new(
                pass,
                format!(
                    "{} SAT calls, {} theory calls, {:.1} s, relative error {e:.2e}",
                    rep.sat_calls,
                    rep.theory_calls,
                    elapsed.as_secs_f64()
                ),
            )
        }
        Err(e) => Outcome::new(false, format!("{e} after {:.1} s", elapsed.as_secs_f64())),
    }
}

// ---------------------------------------------------------------------------
// 9. SAT core against brute force.

fn criterion_9() -> Outcome {
    let mut rng = Rng(9);
    let mut mismatches = 0;
    let mut models = 0;
    for _ in 0..50 {
        let m = rng.range(1, 7);
        let p = rng.range(1, 14 - m);
        let (r, s) = (rng.range(0, m), rng.range(0, p));
        let clauses: Vec<(Vec<usize>, Vec<usize>)> = (0..rng.range(0, 15))
            .map(|_| {
                let ins: Vec<usize> = (0..m).filter(|_| rng.below(4) == 0).collect();
                let mut outs: Vec<usize> = (0..p).filter(|_| rng.below(4) == 0).collect();
                if ins.is_empty() && outs.is_empty() {
                    outs.push(rng.below(p));
                }
                (ins, outs)
            })
            .collect();
        let mut core = SatCore::new(m, p, r, s).unwrap();
        for (ins, outs) in &clauses {
            core.add_clause(ConflictClause::new(IndexSet::from_unsorted(ins.clone(), m).unwrap(), IndexSet::from_unsorted(outs.clone(), p).unwrap()))
                .unwrap();
        }
        let got: Vec<u32> = std::iter::from_fn(|| core.next_assignment())
            .map(|a| a.b.iter().chain(&a.c).enumerate().filter(|x| *x.1).fold(0u32, |acc, (v, _)| acc | 1 << v))
            .collect();
        let want: BTreeSet<u32> = (0..1u32 << (m + p))
            .filter(|&mask| {
                let bit = |v: usize| mask >> v & 1 == 1;
                (0..m).filter(|&j| bit(j)).count() <= r
                    && (0..p).filter(|&i| bit(m + i)).count() <= s
                    && clauses.iter().all(|(ci, co)| ci.iter().any(|&j| bit(j)) || co.iter().any(|&i| bit(m + i)))
            })
            .collect();
        let got_set: BTreeSet<u32> = got.iter().copied().collect();
        models += want.len();
        mismatches += usize::from(got_set != want || got_set.len() != got.len());
    }
    Outcome::new(mismatches == 0, format!("{mismatches} mismatching clause sets out of 50 ({models} models in total)"))
}

// ---------------------------------------------------------------------------
// 10. Merging consistent output sets.

fn criterion_10() -> Outcome {
    let shapes = [(3, 2, 8, 1, 2), (4, 2, 7, 1, 1), (3, 1, 9, 1, 2), (5, 2, 8, 1, 1)];
    let mut instances = 0;
    let mut seed = 70_000u64;
    let mut exercised = 0usize;
    let mut counterexamples = 0usize;
    while instances < 50 {
        let (n, m, p, r, s) = shapes[instances % shapes.len()];
        seed += 1;
        let sys = random_system(n, m, p, seed).unwrap();
        let ru = (2 * r).min(m);
        if !is_sparse_strongly_observable(&sys, ru, 2 * s, &pol()).unwrap().holds {
            continue;
        }
        instances += 1;
        let scen = random_scenario(&sys, r, s, n, seed).unwrap();
        let (win, _) = run_scenario(&sys, &scen, &random_vector(n, seed + 3), &vec![Vector::zeros(m); n], n).unwrap();
        let theory = TheorySolver::new(&sys, &win, &pol()).unwrap();
        let sat = |gu: &IndexSet, gy: &IndexSet| !theory.conflicts(gu, gy).unwrap();
        for gu in (0..=ru).flat_map(|k| IndexSet::combinations(m, k)) {
            for base in IndexSet::combinations(p, p - 2 * s) {
                let rest: Vec<usize> = base.complement().iter().collect();
                let extend = |bits: usize| rest.iter().enumerate().filter(|(k, _)| bits >> k & 1 == 1).fold(base.clone(), |acc, (_, &i)| acc.with(i));
                for a in 0..1usize << rest.len() {
                    for b in a + 1..1usize << rest.len() {
                        let (g1, g2) = (extend(a), extend(b));
                        if sat(&gu, &g1) && sat(&gu, &g2) {
                            exercised += 1;
                            counterexamples += usize::from(!sat(&gu, &g1.union(&g2)));
                        }
                    }
                }
            }
        }
    }
    Outcome::new(
        counterexamples == 0 && exercised > 0,
        format!("{counterexamples} counterexamples in {exercised} merges over {instances} instances"),
    )
}

fn report(k: usize, name: &str, o: &Outcome, failed: &mut usize) {
    println!("[{}] criterion {k}: {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    if !o.pass {
        *failed += 1;
    }
}

fn main() {
    // `cargo test -- <filter>` passes extra arguments; this target always
    // runs everything, except when the harness only asks for a listing.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let tmp = tempfile::tempdir().expect("temporary directory");
    let mut failed = 0;
    report(1, "exact recovery", &criterion_1(), &mut failed);
    report(2, "indistinguishable pairs", &criterion_2(tmp.path()), &mut failed);
    report(3, "structural oracles", &criterion_3(), &mut failed);
    let st = certificate_runs();
    report(
        4,
        "certificate soundness and irreducibility",
        &Outcome::new(
            st.unsound == 0 && st.reducible == 0 && st.hypotheses == 50,
            format!(
                "{} unsound, {} reducible among {} certificates from {} refuted hypotheses",
                st.unsound, st.reducible, st.certificates, st.hypotheses
            ),
        ),
        &mut failed,
    );
    report(
        5,
        "method1 trusted-output bound",
        &Outcome::new(st.output_bound_violations == 0, format!("{} certificates above p - 2s + 1 outputs", st.output_bound_violations)),
        &mut failed,
    );
    report(
        6,
        "certificate size lower bound",
        &Outcome::new(st.size_bound_violations == 0, format!("{} of {} certificates with at most m literals", st.size_bound_violations, st.certificates)),
        &mut failed,
    );
    report(7, "plant benchmark", &criterion_7(tmp.path()), &mut failed);
    report(8, "large random system", &criterion_8(), &mut failed);
    report(9, "SAT enumeration", &criterion_9(), &mut failed);
    report(10, "merging consistent output sets", &criterion_10(), &mut failed);
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
