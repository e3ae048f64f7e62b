//! Secure state estimation by a lazy SMT loop.
//!
//! The SAT core proposes which channels are attacked; the theory solver
//! checks the proposal against the window and, when it fails, explains the
//! failure with one or more certificates that the core turns into clauses.

mod certificate;
mod quickxplain;
mod theory;

use std::time::Instant;

pub use certificate::{
    certificate_method1, input_slacks, naive_certificate, output_slacks, slack_inputs, slack_outputs, CertElement, Certificate,
};
pub use quickxplain::{certificate_method2, quickxplain, ElementOrder};
pub use theory::{test_consistency, ConsistencyResult, Status, TheorySolver, Verdict};

use crate::attack_sim::{remove_ctrl_effect, ObservationWindow};
use crate::error::{Error, Result};
use crate::lti::{LtiSystem, StateSpace};
use crate::numerics::{TolerancePolicy, Vector};
use crate::sat_core::{BoolAssignment, SatCore};
use crate::strong_obs;

/// How refuted hypotheses are turned into clauses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Exclude only the refuted assignment.
    Naive,
    /// Slack-guided shortening, two certificates per conflict.
    Method1,
    /// Irreducible certificates, three element orders per conflict.
    Method2,
    /// Everything from both of the above.
    Both,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Naive => "naive",
            Method::Method1 => "method1",
            Method::Method2 => "method2",
            Method::Both => "both",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(Method::Naive),
            "method1" => Ok(Method::Method1),
            "method2" => Ok(Method::Method2),
            "both" => Ok(Method::Both),
            other => Err(Error::InvalidInput(format!("unknown method '{other}'"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct EstimateOptions {
    pub method: Method,
    /// Verify `(2r, 2s)`-sparse strong observability before estimating. The
    /// check enumerates subsets and gets expensive fast.
    pub check_sso: bool,
    /// Keep every certificate in the report.
    pub record_certificates: bool,
    /// Stop with an error after this many SAT calls. The default bound is
    /// the number of cardinality-feasible assignments plus one.
    pub max_sat_calls: Option<u64>,
    /// Keep the final SAT core as OPB text in the report.
    pub capture_opb: bool,
    pub policy: TolerancePolicy,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            method: Method::Method2,
            check_sso: true,
            record_certificates: false,
            max_sat_calls: None,
            capture_opb: false,
            policy: TolerancePolicy::default(),
        }
    }
}

impl EstimateOptions {
    pub fn with_method(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct EstimateReport {
    /// Estimate of the state at the first sample of the window.
    pub x_hat: Vector,
    /// Accepted attack hypothesis.
    pub identified: BoolAssignment,
    pub sat_calls: u64,
    /// Least-squares solves performed by the theory solver.
    pub theory_calls: u64,
    /// Distinct clauses added to the SAT core.
    pub certificates_added: u64,
    pub wall_time_s: f64,
    pub residual: f64,
    pub epsilon: f64,
    /// Certificates in emission order, when requested.
    pub certificates: Vec<Certificate>,
    /// Final clause set, when requested.
    pub opb: Option<String>,
}

/// Runs the estimator with the given method and default options.
pub fn estimate(sys: &LtiSystem, win: &ObservationWindow, r: usize, s: usize, method: Method, pol: &TolerancePolicy) -> Result<EstimateReport> {
    let opts = EstimateOptions {
        method,
        policy: pol.clone(),
        ..EstimateOptions::default()
    };
    estimate_with(sys, win, r, s, &opts)
}

/// Certificates for a refuted hypothesis under `method`.
pub fn certificates_for(
    theory: &TheorySolver,
    method: Method,
    gamma_u: &crate::lti::IndexSet,
    gamma_y: &crate::lti::IndexSet,
    r: usize,
    s: usize,
    failed: &ConsistencyResult,
) -> Result<Vec<Certificate>> {
    Ok(match method {
        Method::Naive => vec![naive_certificate(gamma_u, gamma_y)],
        Method::Method1 => certificate_method1(theory, gamma_u, gamma_y, r, s, failed)?,
        Method::Method2 => certificate_method2(theory, gamma_u, gamma_y, &ElementOrder::ALL)?,
        Method::Both => {
            let mut all = certificate_method1(theory, gamma_u, gamma_y, r, s, failed)?;
            for c in certificate_method2(theory, gamma_u, gamma_y, &ElementOrder::ALL)? {
                if !all.contains(&c) {
                    all.push(c);
                }
            }
            all
        }
    })
}

/// Runs the estimator. A window with a nonzero controller input has that
/// input's effect removed first.
pub fn estimate_with(sys: &LtiSystem, win: &ObservationWindow, r: usize, s: usize, opts: &EstimateOptions) -> Result<EstimateReport> {
    let (m, p) = (sys.m(), sys.p());
    if r > m || s > p {
        return Err(Error::InvalidInput(format!("attack bounds ({r}, {s}) exceed channel counts ({m}, {p})")));
    }
    if opts.check_sso {
        let rep = strong_obs::is_sparse_strongly_observable(sys, (2 * r).min(m), (2 * s).min(p), &opts.policy)?;
        if let (false, Some(gu), Some(gy)) = (rep.holds, rep.witness_gamma_u, rep.witness_gamma_y) {
            return Err(Error::NotSparseStronglyObservable { gamma_u: gu, gamma_y: gy });
        }
    }
    let start = Instant::now();
    let clean;
    let win = if win.u_ctrl.iter().any(|&u| u != 0.0) {
        clean = remove_ctrl_effect(sys, win)?;
        &clean
    } else {
        win
    };
    let theory = TheorySolver::new(sys, win, &opts.policy)?;
    let mut core = SatCore::new(m, p, r, s)?;
    let mut cap = core.cardinality_model_count().saturating_add(1);
    if let Some(limit) = opts.max_sat_calls {
        cap = cap.min(u128::from(limit));
    }
    let mut sat_calls: u64 = 0;
    let mut certificates_added: u64 = 0;
    let mut certificates = Vec::new();
    let mut residual_floor = f64::INFINITY;
    let mut last_epsilon = opts.policy.residual_abs_floor;

    loop {
        let Some(asg) = core.next_assignment() else {
            return Err(Error::Infeasible {
                residual_floor,
                epsilon: last_epsilon,
            });
        };
        sat_calls += 1;
        if u128::from(sat_calls) > cap {
            return Err(Error::IterationCap(sat_calls - 1));
        }
        let gamma_u = asg.attacked_inputs();
        let gamma_y = asg.attacked_outputs().complement();
        let res = theory.solve(&gamma_u, &gamma_y)?;
        if res.is_sat() {
            return Ok(EstimateReport {
                x_hat: res.x_hat,
                identified: asg,
                sat_calls,
                theory_calls: theory.solves(),
                certificates_added,
                wall_time_s: start.elapsed().as_secs_f64(),
                residual: res.residual,
                epsilon: res.epsilon_used,
                certificates,
                opb: opts.capture_opb.then(|| core.export_opb()),
            });
        }
        residual_floor = residual_floor.min(res.residual);
        last_epsilon = res.epsilon_used;
        for cert in certificates_for(&theory, opts.method, &gamma_u, &gamma_y, r, s, &res)? {
            if core.add_clause(cert.to_clause())? {
                certificates_added += 1;
            }
            if opts.record_certificates {
                certificates.push(cert);
            }
        }
    }
}
