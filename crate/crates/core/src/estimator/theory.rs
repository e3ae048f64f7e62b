//! Consistency test: can some initial state and some input on the suspected
//! channels explain the trusted outputs of the window?

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use crate::attack_sim::ObservationWindow;
use crate::error::{Error, Result};
use crate::lti::{batch_matrices, BatchMatrices, IndexSet, StateSpace};
use crate::numerics::{lstsq_min_norm, residual_norm, Matrix, TolerancePolicy, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Sat,
    Unsat,
}

/// Full outcome of one consistency test.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyResult {
    pub status: Status,
    /// State part of the minimum-norm minimizer.
    pub x_hat: Vector,
    /// Input part of the minimizer, stacked time-major over the suspected inputs.
    pub u_hat: Vector,
    pub residual: f64,
    pub epsilon_used: f64,
    /// `Y|Γy - O x̂ - N Û`, stacked time-major over the trusted outputs.
    pub residual_vector: Vector,
}

impl ConsistencyResult {
    pub fn is_sat(&self) -> bool {
        self.status == Status::Sat
    }
}

/// Status and residual only, as stored in the cache.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub status: Status,
    pub residual: f64,
    pub epsilon: f64,
}

impl Verdict {
    pub fn is_sat(&self) -> bool {
        self.status == Status::Sat
    }
}

/// Consistency tests against one window, sharing a precomputed full batch
/// and a verdict cache. Safe to query from several threads.
#[derive(Debug)]
pub struct TheorySolver {
    n: usize,
    m: usize,
    p: usize,
    tau: usize,
    full: BatchMatrices,
    y: Vector,
    pol: TolerancePolicy,
    cache: Mutex<HashMap<(IndexSet, IndexSet), Verdict>>,
    solves: AtomicU64,
    cache_hits: AtomicU64,
}

impl TheorySolver {
    /// `win` must already have the controller contribution removed.
    pub fn new(sys: &impl StateSpace, win: &ObservationWindow, pol: &TolerancePolicy) -> Result<Self> {
        if win.p() != sys.p() || win.m() != sys.m() {
            return Err(Error::InvalidInput(format!(
                "window carries ({}, {}) channels for a system with ({}, {})",
                win.m(),
                win.p(),
                sys.m(),
                sys.p()
            )));
        }
        let full = batch_matrices(sys, &IndexSet::full(sys.m()), &IndexSet::full(sys.p()), win.tau)?;
        Ok(Self {
            n: sys.n(),
            m: sys.m(),
            p: sys.p(),
            tau: win.tau,
            full,
            y: win.y.clone(),
            pol: pol.clone(),
            cache: Mutex::new(HashMap::new()),
            solves: AtomicU64::new(0),
            cache_hits: AtomicU64::new(0),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn policy(&self) -> &TolerancePolicy {
        &self.pol
    }

    /// Least-squares solves performed so far.
    pub fn solves(&self) -> u64 {
        self.solves.load(Ordering::Relaxed)
    }

    pub fn cache_hits(&self) -> u64 {
        self.cache_hits.load(Ordering::Relaxed)
    }

    /// Observability rows of output `i` (`tau x n`).
    pub(crate) fn obs_block(&self, i: usize) -> Matrix {
        let rows: Vec<usize> = (0..self.tau).map(|t| t * self.p + i).collect();
        self.full.obs.select_rows(&rows)
    }

    /// Columns of input `j` restricted to the rows of `gamma_y`.
    pub(crate) fn inv_block(&self, j: usize, gamma_y: &IndexSet) -> Matrix {
        let rows = BatchMatrices::output_rows(self.tau, self.p, gamma_y);
        let cols: Vec<usize> = (0..self.tau).map(|t| t * self.m + j).collect();
        Matrix::from_fn(rows.len(), cols.len(), |r, c| self.full.inv[(rows[r], cols[c])])
    }

    fn check_sets(&self, gamma_u: &IndexSet, gamma_y: &IndexSet) -> Result<()> {
        if gamma_u.universe() != self.m || gamma_y.universe() != self.p {
            return Err(Error::InvalidInput(format!(
                "hypothesis over ({}, {}) channels for a system with ({}, {})",
                gamma_u.universe(),
                gamma_y.universe(),
                self.m,
                self.p
            )));
        }
        if gamma_y.is_empty() {
            return Err(Error::InvalidInput("consistency test needs at least one trusted output".into()));
        }
        Ok(())
    }

    /// `[O_Γy | N_Γu→Γy]` and `Y|Γy`.
    fn system_for(&self, gamma_u: &IndexSet, gamma_y: &IndexSet) -> (Matrix, Vector) {
        let rows = BatchMatrices::output_rows(self.tau, self.p, gamma_y);
        let cols = BatchMatrices::input_cols(self.tau, self.m, gamma_u);
        let n = self.n;
        let joint = Matrix::from_fn(rows.len(), n + cols.len(), |r, c| {
            if c < n {
                self.full.obs[(rows[r], c)]
            } else {
                self.full.inv[(rows[r], cols[c - n])]
            }
        });
        (joint, self.y.select_rows(&rows))
    }

    fn remember(&self, gamma_u: &IndexSet, gamma_y: &IndexSet, verdict: Verdict) {
        self.cache.lock().expect("cache lock").insert((gamma_u.clone(), gamma_y.clone()), verdict);
    }

    fn verdict(&self, residual: f64, rhs_norm: f64) -> Verdict {
        let epsilon = self.pol.epsilon(rhs_norm);
        let status = if residual <= epsilon { Status::Sat } else { Status::Unsat };
        Verdict { status, residual, epsilon }
    }

    /// Solves the joint least squares over `(x̂, Û)` for suspected inputs
    /// `gamma_u` and trusted outputs `gamma_y`. Always performs a solve.
    pub fn solve(&self, gamma_u: &IndexSet, gamma_y: &IndexSet) -> Result<ConsistencyResult> {
        self.check_sets(gamma_u, gamma_y)?;
        let (joint, y_sub) = self.system_for(gamma_u, gamma_y);
        let (z, _) = lstsq_min_norm(&joint, &y_sub, &self.pol)?;
        self.solves.fetch_add(1, Ordering::Relaxed);
        let residual_vector = &y_sub - &joint * &z;
        let v = self.verdict(residual_vector.norm(), y_sub.norm());
        self.remember(gamma_u, gamma_y, v);
        let n = self.n;
        Ok(ConsistencyResult {
            status: v.status,
            x_hat: z.rows(0, n).into_owned(),
            u_hat: z.rows(n, z.len() - n).into_owned(),
            residual: v.residual,
            epsilon_used: v.epsilon,
            residual_vector,
        })
    }

    /// Status of the test, from the cache when possible. A miss computes
    /// only the residual, through a pivoted QR instead of the SVD.
    pub fn check(&self, gamma_u: &IndexSet, gamma_y: &IndexSet) -> Result<Verdict> {
        if let Some(v) = self.cache.lock().expect("cache lock").get(&(gamma_u.clone(), gamma_y.clone())) {
            self.cache_hits.fetch_add(1, Ordering::Relaxed);
            return Ok(*v);
        }
        self.check_sets(gamma_u, gamma_y)?;
        let (joint, y_sub) = self.system_for(gamma_u, gamma_y);
        let (_, residual) = residual_norm(&joint, &y_sub, &self.pol)?;
        self.solves.fetch_add(1, Ordering::Relaxed);
        let v = self.verdict(residual, y_sub.norm());
        self.remember(gamma_u, gamma_y, v);
        Ok(v)
    }

    /// Whether the hypothesis is refuted. No trusted outputs means no
    /// equations, which nothing can contradict.
    pub fn conflicts(&self, gamma_u: &IndexSet, gamma_y: &IndexSet) -> Result<bool> {
        if gamma_y.is_empty() {
            return Ok(false);
        }
        Ok(!self.check(gamma_u, gamma_y)?.is_sat())
    }
}

/// One-shot consistency test on a window with the controller input removed.
pub fn test_consistency(
    sys: &impl StateSpace,
    win: &ObservationWindow,
    gamma_u: &IndexSet,
    gamma_y: &IndexSet,
    pol: &TolerancePolicy,
) -> Result<ConsistencyResult> {
    TheorySolver::new(sys, win, pol)?.solve(gamma_u, gamma_y)
}
