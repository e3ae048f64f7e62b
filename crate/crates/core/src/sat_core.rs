//! Pseudo-Boolean core over attack-hypothesis bits.
//!
//! Variables are the `m` input flags followed by the `p` output flags. The
//! constraint set is two cardinality caps (`Σ b ≤ r`, `Σ c ≤ s`) plus a growing
//! list of at-least-one clauses. Models are produced in nondecreasing order of
//! total cardinality and lexicographically (as sorted index lists) within a
//! level, so the sparsest explanations come first.
//!
//! Enumeration keeps a cursor that only moves forward. That is sound because
//! clauses are only ever added: anything skipped before a clause arrived was
//! either emitted already or violated an earlier constraint.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lti::IndexSet;

/// Truth values for the input and output attack flags.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BoolAssignment {
    pub b: Vec<bool>,
    pub c: Vec<bool>,
}

impl BoolAssignment {
    pub fn attacked_inputs(&self) -> IndexSet {
        IndexSet::from_mask(&self.b)
    }

    pub fn attacked_outputs(&self) -> IndexSet {
        IndexSet::from_mask(&self.c)
    }

    /// Number of flags set.
    pub fn cardinality(&self) -> usize {
        self.b.iter().chain(&self.c).filter(|&&x| x).count()
    }
}

/// The clause `Σ_{j ∈ inputs} b_j + Σ_{i ∈ outputs} c_i ≥ 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConflictClause {
    pub input_lits: IndexSet,
    pub output_lits: IndexSet,
}

impl ConflictClause {
    pub fn new(input_lits: IndexSet, output_lits: IndexSet) -> Self {
        Self { input_lits, output_lits }
    }

    pub fn is_empty(&self) -> bool {
        self.input_lits.is_empty() && self.output_lits.is_empty()
    }

    pub fn len(&self) -> usize {
        self.input_lits.len() + self.output_lits.len()
    }

    pub fn is_satisfied_by(&self, asg: &BoolAssignment) -> bool {
        self.input_lits.iter().any(|j| asg.b[j]) || self.output_lits.iter().any(|i| asg.c[i])
    }
}

/// Clause stored as sorted variable indices (inputs first, then outputs).
#[derive(Debug, Clone)]
struct StoredClause {
    vars: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SatCore {
    m: usize,
    p: usize,
    r: usize,
    s: usize,
    clauses: Vec<ConflictClause>,
    stored: Vec<StoredClause>,
    seen: HashSet<Vec<usize>>,
    /// `by_max[v]` lists clauses whose largest variable is `v`.
    by_max: Vec<Vec<usize>>,
    /// Next candidate: the first model at or after this combination.
    cursor: Option<Vec<usize>>,
    exhausted: bool,
    emitted: Vec<BoolAssignment>,
}

impl SatCore {
    pub fn new(m: usize, p: usize, r: usize, s: usize) -> Result<Self> {
        if r > m {
            return Err(Error::InvalidInput(format!("input cap r = {r} exceeds m = {m}")));
        }
        if s > p {
            return Err(Error::InvalidInput(format!("output cap s = {s} exceeds p = {p}")));
        }
        Ok(Self {
            m,
            p,
            r,
            s,
            clauses: Vec::new(),
            stored: Vec::new(),
            seen: HashSet::new(),
            by_max: vec![Vec::new(); m + p],
            cursor: Some(Vec::new()),
            exhausted: false,
            emitted: Vec::new(),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn clauses(&self) -> &[ConflictClause] {
        &self.clauses
    }

    /// Assignments returned so far, in emission order.
    pub fn emitted(&self) -> &[BoolAssignment] {
        &self.emitted
    }

    /// Number of assignments satisfying the two caps alone.
    pub fn cardinality_model_count(&self) -> u128 {
        let bounded = |n: usize, k: usize| (0..=k).map(|i| binomial(n, i)).sum::<u128>();
        bounded(self.m, self.r) * bounded(self.p, self.s)
    }

    /// Adds a clause. Returns `false` if an identical clause was already present.
    /// An empty clause makes the instance permanently unsatisfiable.
    pub fn add_clause(&mut self, cl: ConflictClause) -> Result<bool> {
        if cl.input_lits.universe() != self.m || cl.output_lits.universe() != self.p {
            return Err(Error::InvalidInput(format!(
                "clause over ({}, {}) channels added to a core over ({}, {})",
                cl.input_lits.universe(),
                cl.output_lits.universe(),
                self.m,
                self.p
            )));
        }
        let vars: Vec<usize> = cl.input_lits.iter().chain(cl.output_lits.iter().map(|i| self.m + i)).collect();
        if !self.seen.insert(vars.clone()) {
            return Ok(false);
        }
        match vars.last() {
            None => self.exhausted = true,
            Some(&top) => self.by_max[top].push(self.stored.len()),
        }
        self.stored.push(StoredClause { vars });
        self.clauses.push(cl);
        Ok(true)
    }

    /// Next model of the caps and all clauses, or `None` once none remain.
    pub fn next_assignment(&mut self) -> Option<BoolAssignment> {
        if self.exhausted {
            return None;
        }
        let n = self.m + self.p;
        let max_level = (self.r + self.s).min(n);
        let mut lower = self.cursor.take()?;
        loop {
            let k = lower.len();
            if k > max_level {
                self.exhausted = true;
                return None;
            }
            let mut search = LevelSearch {
                core: self,
                k,
                lower: &lower,
                chosen: vec![false; n],
                picked: Vec::with_capacity(k),
            };
            if let Some(found) = search.run() {
                self.cursor = next_combination(&found, n);
                let asg = self.assignment_from(&found);
                self.emitted.push(asg.clone());
                return Some(asg);
            }
            if k == max_level {
                self.exhausted = true;
                return None;
            }
            lower = (0..k + 1).collect();
        }
    }

    fn assignment_from(&self, vars: &[usize]) -> BoolAssignment {
        let mut b = vec![false; self.m];
        let mut c = vec![false; self.p];
        for &v in vars {
            if v < self.m {
                b[v] = true;
            } else {
                c[v - self.m] = true;
            }
        }
        BoolAssignment { b, c }
    }

    /// Whether `asg` satisfies the caps and every clause.
    pub fn satisfies(&self, asg: &BoolAssignment) -> bool {
        asg.b.len() == self.m
            && asg.c.len() == self.p
            && asg.b.iter().filter(|&&x| x).count() <= self.r
            && asg.c.iter().filter(|&&x| x).count() <= self.s
            && self.clauses.iter().all(|cl| cl.is_satisfied_by(asg))
    }

    /// Pseudo-Boolean competition text for the current constraint set.
    pub fn export_opb(&self) -> String {
        let n = self.m + self.p;
        let mut out = String::new();
        let _ = writeln!(out, "* #variable= {} #constraint= {}", n, 2 + self.clauses.len());
        let terms = |range: std::ops::Range<usize>| range.map(|v| format!("+1 x{}", v + 1)).collect::<Vec<_>>().join(" ");
        let _ = writeln!(out, "{} <= {} ;", terms(0..self.m), self.r);
        let _ = writeln!(out, "{} <= {} ;", terms(self.m..n), self.s);
        for cl in &self.stored {
            let lits: Vec<String> = cl.vars.iter().map(|v| format!("+1 x{}", v + 1)).collect();
            if lits.is_empty() {
                // No terms: 0 >= 1 is the canonical contradiction.
                let _ = writeln!(out, ">= 1 ;");
            } else {
                let _ = writeln!(out, "{} >= 1 ;", lits.join(" "));
            }
        }
        out
    }
}

/// Depth-first search for the lexicographically first feasible
/// `k`-combination that is not before `lower`.
struct LevelSearch<'a> {
    core: &'a SatCore,
    k: usize,
    lower: &'a [usize],
    chosen: Vec<bool>,
    picked: Vec<usize>,
}

impl LevelSearch<'_> {
    fn run(&mut self) -> Option<Vec<usize>> {
        if self.descend(0, true, 0, 0) {
            Some(self.picked.clone())
        } else {
            None
        }
    }

    /// Whether every clause whose largest variable is `v` has a literal in
    /// the current pick. Called when the search moves past `v` unpicked.
    fn bucket_ok(&self, v: usize) -> bool {
        self.core.by_max[v]
            .iter()
            .all(|&ci| self.core.stored[ci].vars.iter().any(|&x| self.chosen[x]))
    }

    fn descend(&mut self, start: usize, tight: bool, n_in: usize, n_out: usize) -> bool {
        let (m, p, r, s) = (self.core.m, self.core.p, self.core.r, self.core.s);
        let n = m + p;
        let pos = self.picked.len();
        if pos == self.k {
            return (start..n).all(|v| self.bucket_ok(v));
        }
        let from = if tight { self.lower[pos].max(start) } else { start };
        for v in start..from {
            if !self.bucket_ok(v) {
                return false;
            }
        }
        let remaining = self.k - pos - 1;
        for v in from..n {
            if v > from && !self.bucket_ok(v - 1) {
                return false;
            }
            let (ni, no) = if v < m { (n_in + 1, n_out) } else { (n_in, n_out + 1) };
            if ni > r || no > s {
                continue;
            }
            let in_left = m.saturating_sub(v + 1).min(r - ni);
            let out_left = (n - (v + 1)).min(p).min(s - no);
            if in_left + out_left < remaining {
                if v >= m {
                    return false;
                }
                continue;
            }
            self.chosen[v] = true;
            self.picked.push(v);
            if self.descend(v + 1, tight && v == self.lower[pos], ni, no) {
                return true;
            }
            self.picked.pop();
            self.chosen[v] = false;
        }
        false
    }
}

/// Lexicographic successor among `k`-combinations of `0..n`, moving to the
/// first `(k+1)`-combination after the last one.
fn next_combination(comb: &[usize], n: usize) -> Option<Vec<usize>> {
    let k = comb.len();
    let mut next = comb.to_vec();
    for i in (0..k).rev() {
        if next[i] < n - k + i {
            next[i] += 1;
            for j in i + 1..k {
                next[j] = next[j - 1] + 1;
            }
            return Some(next);
        }
    }
    if k < n {
        Some((0..k + 1).collect())
    } else {
        None
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}
