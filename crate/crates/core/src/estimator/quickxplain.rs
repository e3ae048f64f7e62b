//! Irreducible certificates by divide-and-conquer conflict extraction.
//!
//! A set of elements `Δ` stands for the hypothesis whose suspected inputs are
//! all inputs not listed in `Δ` and whose trusted outputs are exactly the
//! outputs listed in `Δ`. Adding an element of either kind only tightens the
//! hypothesis, so conflicts are upward closed.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lti::IndexSet;

use super::certificate::{naive_certificate, CertElement, Certificate};
use super::theory::TheorySolver;

/// Enumeration of the naive certificate's elements fed to the extractor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementOrder {
    InputsFirst,
    OutputsFirst,
    Alternating,
}

impl ElementOrder {
    pub const ALL: [ElementOrder; 3] = [ElementOrder::InputsFirst, ElementOrder::OutputsFirst, ElementOrder::Alternating];

    pub fn arrange(self, free_inputs: &IndexSet, trusted_outputs: &IndexSet) -> Vec<CertElement> {
        let ins: Vec<CertElement> = free_inputs.iter().map(CertElement::Input).collect();
        let outs: Vec<CertElement> = trusted_outputs.iter().map(CertElement::Output).collect();
        match self {
            ElementOrder::InputsFirst => ins.into_iter().chain(outs).collect(),
            ElementOrder::OutputsFirst => outs.into_iter().chain(ins).collect(),
            ElementOrder::Alternating => {
                let mut out = Vec::with_capacity(ins.len() + outs.len());
                let (mut a, mut b) = (ins.into_iter(), outs.into_iter());
                loop {
                    match (a.next(), b.next()) {
                        (None, None) => break,
                        (x, y) => out.extend(x.into_iter().chain(y)),
                    }
                }
                out
            }
        }
    }
}

struct Extractor<'a> {
    theory: &'a TheorySolver,
}

impl Extractor<'_> {
    fn conflicts(&self, elems: &[CertElement]) -> Result<bool> {
        let cert = Certificate::from_elements(elems, self.theory.m(), self.theory.p())?;
        cert.is_conflict(self.theory)
    }

    /// Returns a subset `X` of `delta` such that `background ∪ X` conflicts
    /// and no element of `X` can be dropped; assumes `background ∪ delta`
    /// conflicts.
    fn extract(&self, background: &[CertElement], delta: &[CertElement]) -> Result<Vec<CertElement>> {
        if delta.is_empty() || self.conflicts(background)? {
            return Ok(Vec::new());
        }
        // Conflicts are upward closed, so the first prefix of `delta` that
        // completes one can be found by bisection.
        let prefix_conflicts = |len: usize| -> Result<bool> {
            let mut set = background.to_vec();
            set.extend_from_slice(&delta[..len]);
            self.conflicts(&set)
        };
        let (mut lo, mut hi) = (1, delta.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            if prefix_conflicts(mid)? {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        if !prefix_conflicts(lo)? {
            return Err(Error::InvalidInput("element set does not contain a conflict".into()));
        }
        let i = lo - 1;
        // With 1-based position i + 1, the lower half holds the first
        // floor((i + 1) / 2) elements and the upper half the rest before e_i.
        let split = (i + 1) / 2;
        let (lower, upper) = (&delta[..split], &delta[split..i]);
        let pivot = delta[i];

        let mut bg_upper = background.to_vec();
        bg_upper.extend_from_slice(lower);
        bg_upper.push(pivot);
        let from_upper = self.extract(&bg_upper, upper)?;

        let mut bg_lower = background.to_vec();
        bg_lower.push(pivot);
        bg_lower.extend_from_slice(&from_upper);
        let from_lower = self.extract(&bg_lower, lower)?;

        let mut found = vec![pivot];
        found.extend(from_upper);
        found.extend(from_lower);
        Ok(found)
    }
}

/// Irreducible sub-certificate of `naive` under one element order.
///
/// Falls back to `naive` itself if the extracted set unexpectedly fails to
/// re-check as a conflict.
pub fn quickxplain(theory: &TheorySolver, naive: &Certificate, order: ElementOrder) -> Result<Certificate> {
    let elems = order.arrange(&naive.free_inputs, &naive.trusted_outputs);
    let ex = Extractor { theory };
    let found = ex.extract(&[], &elems)?;
    let cert = Certificate::from_elements(&found, theory.m(), theory.p())?;
    if cert.is_conflict(theory)? {
        Ok(cert)
    } else {
        Ok(naive.clone())
    }
}

/// Irreducible certificates for a refuted hypothesis, one per requested
/// order, with duplicates dropped. Orders run concurrently.
pub fn certificate_method2(theory: &TheorySolver, gamma_u: &IndexSet, gamma_y: &IndexSet, orders: &[ElementOrder]) -> Result<Vec<Certificate>> {
    let naive = naive_certificate(gamma_u, gamma_y);
    if !naive.is_conflict(theory)? {
        return Err(Error::InvalidInput("certificates are only defined for refuted hypotheses".into()));
    }
    let certs: Vec<Certificate> = orders
        .par_iter()
        .map(|&o| quickxplain(theory, &naive, o))
        .collect::<Result<_>>()?;
    let mut out: Vec<Certificate> = Vec::with_capacity(certs.len());
    for c in certs {
        if !out.contains(&c) {
            out.push(c);
        }
    }
    Ok(out)
}
