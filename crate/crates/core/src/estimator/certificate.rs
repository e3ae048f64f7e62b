//! Conflict certificates: the naive one and the slack-guided shortening.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::lti::IndexSet;
use crate::numerics::{self, Vector};
use crate::sat_core::ConflictClause;

use super::theory::{ConsistencyResult, TheorySolver};

/// A refuted hypothesis in clause form: at least one of `free_inputs` must be
/// attacked or one of `trusted_outputs` must be attacked.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Certificate {
    pub free_inputs: IndexSet,
    pub trusted_outputs: IndexSet,
}

impl Certificate {
    pub fn new(free_inputs: IndexSet, trusted_outputs: IndexSet) -> Self {
        Self {
            free_inputs,
            trusted_outputs,
        }
    }

    /// Inputs treated as attacked when re-checking the certificate.
    pub fn suspected_inputs(&self) -> IndexSet {
        self.free_inputs.complement()
    }

    /// Number of literals.
    pub fn size(&self) -> usize {
        self.free_inputs.len() + self.trusted_outputs.len()
    }

    pub fn to_clause(&self) -> ConflictClause {
        ConflictClause::new(self.free_inputs.clone(), self.trusted_outputs.clone())
    }

    /// Whether the certificate still refutes on this window.
    pub fn is_conflict(&self, theory: &TheorySolver) -> Result<bool> {
        theory.conflicts(&self.suspected_inputs(), &self.trusted_outputs)
    }

    pub fn elements(&self) -> Vec<CertElement> {
        self.free_inputs
            .iter()
            .map(CertElement::Input)
            .chain(self.trusted_outputs.iter().map(CertElement::Output))
            .collect()
    }

    pub fn from_elements(elems: &[CertElement], m: usize, p: usize) -> Result<Self> {
        let mut ins = Vec::new();
        let mut outs = Vec::new();
        for e in elems {
            match *e {
                CertElement::Input(j) => ins.push(j),
                CertElement::Output(i) => outs.push(i),
            }
        }
        Ok(Self::new(IndexSet::from_unsorted(ins, m)?, IndexSet::from_unsorted(outs, p)?))
    }
}

/// One literal of a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CertElement {
    Input(usize),
    Output(usize),
}

/// Every unattacked input and every trusted output of the hypothesis.
pub fn naive_certificate(attacked_inputs: &IndexSet, trusted_outputs: &IndexSet) -> Certificate {
    Certificate::new(attacked_inputs.complement(), trusted_outputs.clone())
}

fn normalized(raw: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        0.0
    } else {
        raw / scale
    }
}

fn by_value_then_index(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0))
}

/// Normalized input slacks for the inputs outside `gamma_u`: how much of the
/// residual the columns of each extra input could absorb.
pub fn input_slacks(theory: &TheorySolver, gamma_u: &IndexSet, gamma_y: &IndexSet, failed: &ConsistencyResult) -> Result<Vec<(usize, f64)>> {
    let pol = theory.policy();
    gamma_u
        .complement()
        .iter()
        .map(|j| {
            let block = theory.inv_block(j, gamma_y);
            let proj = numerics::project_onto_colspace(&block, &failed.residual_vector, pol)?;
            Ok((j, normalized(proj.norm(), numerics::spectral_norm(&block))))
        })
        .collect()
}

/// Inputs outside `gamma_u`, ascending by normalized slack, ties by index.
pub fn slack_inputs(theory: &TheorySolver, gamma_u: &IndexSet, gamma_y: &IndexSet, failed: &ConsistencyResult) -> Result<Vec<usize>> {
    let mut slacks = input_slacks(theory, gamma_u, gamma_y, failed)?;
    slacks.sort_by(by_value_then_index);
    Ok(slacks.into_iter().map(|(j, _)| j).collect())
}

/// Per-output share of the residual for outputs in `gamma_y`, raw and
/// normalized by the output's observability block.
pub fn output_slacks(theory: &TheorySolver, gamma_y: &IndexSet, failed: &ConsistencyResult) -> Vec<(usize, f64, f64)> {
    let py = gamma_y.len();
    let tau = theory.tau();
    gamma_y
        .iter()
        .enumerate()
        .map(|(k, i)| {
            let part = Vector::from_iterator(tau, (0..tau).map(|t| failed.residual_vector[t * py + k]));
            let raw = part.norm();
            (i, raw, normalized(raw, numerics::spectral_norm(&theory.obs_block(i))))
        })
        .collect()
}

/// Trusted outputs ordered for shrinking: the largest normalized slack first,
/// then the rest by ascending kernel dimension of their own observability
/// block, ties by index.
pub fn slack_outputs(theory: &TheorySolver, gamma_y: &IndexSet, failed: &ConsistencyResult) -> Result<Vec<usize>> {
    let slacks = output_slacks(theory, gamma_y, failed);
    let Some(&(top, _, _)) = slacks
        .iter()
        .max_by(|a, b| a.2.partial_cmp(&b.2).unwrap_or(Ordering::Equal).then(b.0.cmp(&a.0)))
    else {
        return Ok(Vec::new());
    };
    let n = theory.n();
    let mut rest: Vec<(usize, usize)> = Vec::with_capacity(slacks.len() - 1);
    for &(i, _, _) in slacks.iter().filter(|s| s.0 != top) {
        let kernel = n - numerics::rank(&theory.obs_block(i), theory.policy())?;
        rest.push((i, kernel));
    }
    rest.sort_by_key(|&(i, k)| (k, i));
    Ok(std::iter::once(top).chain(rest.into_iter().map(|(i, _)| i)).collect())
}

/// Grows the suspected inputs along `order` while the test still fails and
/// fewer than `cap` inputs are suspected.
fn grow_inputs(theory: &TheorySolver, start: &IndexSet, trusted: &IndexSet, order: &[usize], cap: usize) -> Result<IndexSet> {
    let mut current = start.clone();
    for &j in order {
        if current.len() >= cap {
            break;
        }
        let candidate = current.with(j);
        if theory.conflicts(&candidate, trusted)? {
            current = candidate;
        } else {
            break;
        }
    }
    Ok(current)
}

/// Picks a failing trusted-output set of size `keep` or `keep + 1` from
/// `order`; falls back to `fallback` if neither exists.
fn shrink_outputs(theory: &TheorySolver, suspected: &IndexSet, order: &[usize], keep: usize, fallback: &IndexSet) -> Result<IndexSet> {
    let p = theory.p();
    let keep = keep.min(order.len());
    let base = IndexSet::from_unsorted(order[..keep].to_vec(), p)?;
    if theory.conflicts(suspected, &base)? {
        return Ok(base);
    }
    for &i in &order[keep..] {
        let candidate = base.with(i);
        if theory.conflicts(suspected, &candidate)? {
            return Ok(candidate);
        }
    }
    Ok(fallback.clone())
}

/// Slack-guided certificates for a refuted hypothesis.
///
/// The first grows the suspected inputs (up to `2r`) and then keeps only
/// `p - 2s` or `p - 2s + 1` trusted outputs; the second shrinks the outputs
/// first and grows the inputs afterwards. Duplicates are dropped.
pub fn certificate_method1(
    theory: &TheorySolver,
    gamma_u: &IndexSet,
    gamma_y: &IndexSet,
    r: usize,
    s: usize,
    failed: &ConsistencyResult,
) -> Result<Vec<Certificate>> {
    if failed.is_sat() {
        return Err(Error::InvalidInput("certificates are only defined for refuted hypotheses".into()));
    }
    let p = theory.p();
    let input_order = slack_inputs(theory, gamma_u, gamma_y, failed)?;
    let output_order = slack_outputs(theory, gamma_y, failed)?;
    let keep = p.saturating_sub(2 * s);
    let cap = 2 * r;

    let grown = grow_inputs(theory, gamma_u, gamma_y, &input_order, cap)?;
    let first = Certificate::new(grown.complement(), shrink_outputs(theory, &grown, &output_order, keep, gamma_y)?);

    let shrunk = shrink_outputs(theory, gamma_u, &output_order, keep, gamma_y)?;
    let regrown = grow_inputs(theory, gamma_u, &shrunk, &input_order, cap)?;
    let second = Certificate::new(regrown.complement(), shrunk);

    let mut out = vec![first];
    if out[0] != second {
        out.push(second);
    }
    Ok(out)
}
