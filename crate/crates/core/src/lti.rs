//! Discrete-time LTI models, channel index sets, trajectory simulation and
//! the stacked observability / invertibility matrices over a window.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, ensure_finite, Matrix, TolerancePolicy, Vector};

/// A sorted set of 0-based channel indices drawn from `0..universe`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexSet {
    indices: Vec<usize>,
    universe: usize,
}

impl IndexSet {
    /// Builds a set from strictly increasing indices.
    pub fn new(indices: Vec<usize>, universe: usize) -> Result<Self> {
        if let Some(w) = indices.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(format!(
                "index set must be strictly increasing, found {} before {}",
                w[0], w[1]
            )));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= universe) {
            return Err(Error::IndexOutOfRange { index: bad, universe });
        }
        Ok(Self { indices, universe })
    }

    /// Sorts and deduplicates before validating the range.
    pub fn from_unsorted(mut indices: Vec<usize>, universe: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        Self::new(indices, universe)
    }

    /// Converts 1-based human-facing indices.
    pub fn from_one_based(indices: &[usize], universe: usize) -> Result<Self> {
        if indices.contains(&0) {
            return Err(Error::InvalidInput("1-based index list contains 0".into()));
        }
        Self::from_unsorted(indices.iter().map(|i| i - 1).collect(), universe)
    }

    pub fn full(universe: usize) -> Self {
        Self {
            indices: (0..universe).collect(),
            universe,
        }
    }

    pub fn empty(universe: usize) -> Self {
        Self {
            indices: Vec::new(),
            universe,
        }
    }

    pub(crate) fn from_mask(mask: &[bool]) -> Self {
        Self {
            indices: mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect(),
            universe: mask.len(),
        }
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn complement(&self) -> Self {
        let mut mask = vec![true; self.universe];
        for &i in &self.indices {
            mask[i] = false;
        }
        Self::from_mask(&mask)
    }

    pub fn union(&self, other: &Self) -> Self {
        debug_assert_eq!(self.universe, other.universe);
        let mut v: Vec<usize> = self.indices.iter().chain(&other.indices).copied().collect();
        v.sort_unstable();
        v.dedup();
        Self {
            indices: v,
            universe: self.universe,
        }
    }

    pub fn with(&self, i: usize) -> Self {
        let mut v = self.indices.clone();
        if let Err(pos) = v.binary_search(&i) {
            v.insert(pos, i);
        }
        Self {
            indices: v,
            universe: self.universe,
        }
    }

    pub fn without(&self, i: usize) -> Self {
        Self {
            indices: self.indices.iter().copied().filter(|&j| j != i).collect(),
            universe: self.universe,
        }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.indices.iter().all(|&i| other.contains(i))
    }

    pub fn to_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.universe];
        for &i in &self.indices {
            mask[i] = true;
        }
        mask
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.indices.iter().map(|i| i + 1).collect()
    }

    /// All subsets of `0..universe` of exactly `k` elements, in lexicographic order.
    pub fn combinations(universe: usize, k: usize) -> impl Iterator<Item = IndexSet> {
        use itertools::Itertools;
        (0..universe)
            .combinations(k)
            .map(move |indices| IndexSet { indices, universe })
    }
}

/// Displays the set with 1-based indices, e.g. `{1, 3}`.
impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.indices.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}")
    }
}

/// Anything with `(A, B, C, D)` matrices of consistent shape.
pub trait StateSpace {
    fn a(&self) -> &Matrix;
    fn b(&self) -> &Matrix;
    fn c(&self) -> &Matrix;
    fn d(&self) -> &Matrix;

    fn n(&self) -> usize {
        self.a().nrows()
    }
    fn m(&self) -> usize {
        self.b().ncols()
    }
    fn p(&self) -> usize {
        self.c().nrows()
    }
}

fn check_shapes(a: &Matrix, b: &Matrix, c: &Matrix, d: &Matrix) -> Result<()> {
    let n = a.nrows();
    let checks: [(&'static str, usize, usize); 6] = [
        ("A columns", n, a.ncols()),
        ("B rows", n, b.nrows()),
        ("C columns", n, c.ncols()),
        ("D rows", c.nrows(), d.nrows()),
        ("D columns", b.ncols(), d.ncols()),
        ("state dimension", n.max(1), n),
    ];
    for (context, expected, actual) in checks {
        if expected != actual {
            return Err(Error::DimensionMismatch {
                context,
                expected,
                actual,
            });
        }
    }
    for (m, name) in [(a, "A"), (b, "B"), (c, "C"), (d, "D")] {
        ensure_finite(m, name)?;
    }
    Ok(())
}

/// A validated LTI system `x(t+1) = A x + B u`, `y = C x + D u` whose stacked
/// `[B; D]` has full column rank.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem {
    a: Matrix,
    b: Matrix,
    c: Matrix,
    d: Matrix,
}

impl LtiSystem {
    pub fn new(a: Matrix, b: Matrix, c: Matrix, d: Matrix) -> Result<Self> {
        Self::with_policy(a, b, c, d, &TolerancePolicy::default())
    }

    pub fn with_policy(a: Matrix, b: Matrix, c: Matrix, d: Matrix, pol: &TolerancePolicy) -> Result<Self> {
        check_shapes(&a, &b, &c, &d)?;
        let m = b.ncols();
        if m > 0 {
            let stacked = Matrix::from_fn(a.nrows() + c.nrows(), m, |i, j| {
                if i < a.nrows() {
                    b[(i, j)]
                } else {
                    d[(i - a.nrows(), j)]
                }
            });
            let rank = numerics::rank(&stacked, pol)?;
            if rank < m {
                return Err(Error::ModelAssumption(format!(
                    "[B; D] must have full column rank {m}, has rank {rank}"
                )));
            }
        }
        Ok(Self { a, b, c, d })
    }

    /// Restriction to the inputs `gamma_u` and outputs `gamma_y`. The result is
    /// not required to satisfy the `[B; D]` rank assumption.
    pub fn subsystem(&self, gamma_u: &IndexSet, gamma_y: &IndexSet) -> Result<Subsystem> {
        self.as_subsystem().restrict(gamma_u, gamma_y)
    }

    pub fn as_subsystem(&self) -> Subsystem {
        Subsystem {
            a: self.a.clone(),
            b: self.b.clone(),
            c: self.c.clone(),
            d: self.d.clone(),
        }
    }
}

impl StateSpace for LtiSystem {
    fn a(&self) -> &Matrix {
        &self.a
    }
    fn b(&self) -> &Matrix {
        &self.b
    }
    fn c(&self) -> &Matrix {
        &self.c
    }
    fn d(&self) -> &Matrix {
        &self.d
    }
}

/// An unvalidated `(A, B, C, D)` quadruple, typically a restriction of an
/// [`LtiSystem`] to a subset of its channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Subsystem {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub d: Matrix,
}

impl Subsystem {
    pub fn new(a: Matrix, b: Matrix, c: Matrix, d: Matrix) -> Result<Self> {
        check_shapes(&a, &b, &c, &d)?;
        Ok(Self { a, b, c, d })
    }

    pub fn restrict(&self, gamma_u: &IndexSet, gamma_y: &IndexSet) -> Result<Subsystem> {
        check_universe(gamma_u, self.m(), "input set universe")?;
        check_universe(gamma_y, self.p(), "output set universe")?;
        Ok(Subsystem {
            a: self.a.clone(),
            b: self.b.select_columns(gamma_u.indices()),
            c: self.c.select_rows(gamma_y.indices()),
            d: self.d.select_rows(gamma_y.indices()).select_columns(gamma_u.indices()),
        })
    }
}

impl StateSpace for Subsystem {
    fn a(&self) -> &Matrix {
        &self.a
    }
    fn b(&self) -> &Matrix {
        &self.b
    }
    fn c(&self) -> &Matrix {
        &self.c
    }
    fn d(&self) -> &Matrix {
        &self.d
    }
}

fn check_universe(set: &IndexSet, expected: usize, context: &'static str) -> Result<()> {
    if set.universe() != expected {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            actual: set.universe(),
        });
    }
    Ok(())
}

/// State and output sequences `x(0..T)`, `y(0..T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub x: Vec<Vector>,
    pub y: Vec<Vector>,
}

/// Simulates `steps` samples from `x0` under the input sequence `u_seq`.
pub fn simulate(sys: &impl StateSpace, x0: &Vector, u_seq: &[Vector], steps: usize) -> Result<Trajectory> {
    if x0.len() != sys.n() {
        return Err(Error::DimensionMismatch {
            context: "initial state",
            expected: sys.n(),
            actual: x0.len(),
        });
    }
    if u_seq.len() < steps {
        return Err(Error::DimensionMismatch {
            context: "input sequence length",
            expected: steps,
            actual: u_seq.len(),
        });
    }
    let mut x = x0.clone();
    let mut traj = Trajectory {
        x: Vec::with_capacity(steps),
        y: Vec::with_capacity(steps),
    };
    for u in &u_seq[..steps] {
        if u.len() != sys.m() {
            return Err(Error::DimensionMismatch {
                context: "input vector",
                expected: sys.m(),
                actual: u.len(),
            });
        }
        traj.y.push(sys.c() * &x + sys.d() * u);
        let next = sys.a() * &x + sys.b() * u;
        traj.x.push(std::mem::replace(&mut x, next));
    }
    Ok(traj)
}

/// Stacked matrices over a window of `tau` samples relating
/// `Y|gamma_y = obs * x(t - tau + 1) + inv * U|gamma_u`, both batches time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchMatrices {
    pub obs: Matrix,
    pub inv: Matrix,
    pub tau: usize,
    pub gamma_u: IndexSet,
    pub gamma_y: IndexSet,
}

impl BatchMatrices {
    /// `[obs | inv]`.
    pub fn joint(&self) -> Matrix {
        let rows = self.obs.nrows();
        let mut j = Matrix::zeros(rows, self.obs.ncols() + self.inv.ncols());
        j.view_mut((0, 0), self.obs.shape()).copy_from(&self.obs);
        j.view_mut((0, self.obs.ncols()), self.inv.shape()).copy_from(&self.inv);
        j
    }

    /// Row indices of output channel `i` (position within `gamma_y`) for every sample.
    fn rows_for(&self, positions: &[usize]) -> Vec<usize> {
        let py = self.gamma_y.len();
        (0..self.tau)
            .flat_map(|t| positions.iter().map(move |&k| t * py + k))
            .collect()
    }

    fn cols_for(&self, positions: &[usize]) -> Vec<usize> {
        let mu = self.gamma_u.len();
        (0..self.tau)
            .flat_map(|t| positions.iter().map(move |&k| t * mu + k))
            .collect()
    }

    /// Selects the sub-batch for channel subsets of this batch's own sets.
    pub fn restrict(&self, gamma_u: &IndexSet, gamma_y: &IndexSet) -> Result<BatchMatrices> {
        let pos_u = positions_within(gamma_u, &self.gamma_u)?;
        let pos_y = positions_within(gamma_y, &self.gamma_y)?;
        let rows = self.rows_for(&pos_y);
        let cols = self.cols_for(&pos_u);
        Ok(BatchMatrices {
            obs: self.obs.select_rows(&rows),
            inv: self.inv.select_rows(&rows).select_columns(&cols),
            tau: self.tau,
            gamma_u: gamma_u.clone(),
            gamma_y: gamma_y.clone(),
        })
    }

    /// Row indices, in the full-output batch layout, of the outputs in `gamma_y`.
    pub fn output_rows(tau: usize, p: usize, gamma_y: &IndexSet) -> Vec<usize> {
        (0..tau).flat_map(|t| gamma_y.iter().map(move |i| t * p + i)).collect()
    }

    pub fn input_cols(tau: usize, m: usize, gamma_u: &IndexSet) -> Vec<usize> {
        (0..tau).flat_map(|t| gamma_u.iter().map(move |j| t * m + j)).collect()
    }
}

fn positions_within(sub: &IndexSet, sup: &IndexSet) -> Result<Vec<usize>> {
    sub.iter()
        .map(|i| {
            sup.indices()
                .binary_search(&i)
                .map_err(|_| Error::IndexOutOfRange {
                    index: i,
                    universe: sup.universe(),
                })
        })
        .collect()
}

/// Observability and invertibility matrices of the restriction to
/// `(gamma_u, gamma_y)` over `tau` samples, `1 <= tau <= n`.
pub fn batch_matrices(sys: &impl StateSpace, gamma_u: &IndexSet, gamma_y: &IndexSet, tau: usize) -> Result<BatchMatrices> {
    let n = sys.n();
    if tau == 0 || tau > n {
        return Err(Error::InvalidInput(format!("window length {tau} must lie in 1..={n}")));
    }
    check_universe(gamma_u, sys.m(), "input set universe")?;
    check_universe(gamma_y, sys.p(), "output set universe")?;
    let c_y = sys.c().select_rows(gamma_y.indices());
    let b_u = sys.b().select_columns(gamma_u.indices());
    let d_yu = sys.d().select_rows(gamma_y.indices()).select_columns(gamma_u.indices());
    let (py, mu) = (gamma_y.len(), gamma_u.len());

    // blocks[k] = C|y A^k
    let mut blocks = Vec::with_capacity(tau);
    let mut cur = c_y;
    for _ in 0..tau {
        let next = &cur * sys.a();
        blocks.push(std::mem::replace(&mut cur, next));
    }
    let mut obs = Matrix::zeros(tau * py, n);
    for (k, blk) in blocks.iter().enumerate() {
        obs.view_mut((k * py, 0), (py, n)).copy_from(blk);
    }
    // markov[k] = C|y A^k B|u
    let markov: Vec<Matrix> = blocks.iter().take(tau.saturating_sub(1)).map(|blk| blk * &b_u).collect();
    let mut inv = Matrix::zeros(tau * py, tau * mu);
    if py > 0 && mu > 0 {
        for i in 0..tau {
            inv.view_mut((i * py, i * mu), (py, mu)).copy_from(&d_yu);
            for j in 0..i {
                inv.view_mut((i * py, j * mu), (py, mu)).copy_from(&markov[i - j - 1]);
            }
        }
    }
    Ok(BatchMatrices {
        obs,
        inv,
        tau,
        gamma_u: gamma_u.clone(),
        gamma_y: gamma_y.clone(),
    })
}

/// Zero-order-hold discretization `A = e^{Ac dt}`, `B = (int_0^dt e^{Ac s} ds) Bc`,
/// via the exponential of the augmented matrix `[[Ac, Bc], [0, 0]] * dt`.
pub fn discretize_zoh(ac: &Matrix, bc: &Matrix, dt: f64) -> Result<(Matrix, Matrix)> {
    if !ac.is_square() {
        return Err(Error::InvalidInput("continuous-time A must be square".into()));
    }
    if bc.nrows() != ac.nrows() {
        return Err(Error::DimensionMismatch {
            context: "continuous-time B rows",
            expected: ac.nrows(),
            actual: bc.nrows(),
        });
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    let (n, m) = (ac.nrows(), bc.ncols());
    let mut aug = Matrix::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(&(ac * dt));
    aug.view_mut((0, n), (n, m)).copy_from(&(bc * dt));
    let e = numerics::matrix_exp(&aug)?;
    Ok((e.view((0, 0), (n, n)).into_owned(), e.view((0, n), (n, m)).into_owned()))
}

/// On-disk system description: row-major nested arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct SystemFile {
    pub A: Vec<Vec<f64>>,
    pub B: Vec<Vec<f64>>,
    pub C: Vec<Vec<f64>>,
    pub D: Vec<Vec<f64>>,
}

fn rows_to_matrix(rows: &[Vec<f64>], name: &str, cols_hint: usize) -> Result<Matrix> {
    if rows.is_empty() {
        return Ok(Matrix::zeros(0, cols_hint));
    }
    let cols = rows[0].len();
    if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
        return Err(Error::InvalidInput(format!(
            "matrix {name} is ragged: rows of length {cols} and {}",
            bad.len()
        )));
    }
    Ok(Matrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn matrix_to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl SystemFile {
    pub fn from_system(sys: &impl StateSpace) -> Self {
        Self {
            A: matrix_to_rows(sys.a()),
            B: matrix_to_rows(sys.b()),
            C: matrix_to_rows(sys.c()),
            D: matrix_to_rows(sys.d()),
        }
    }

    /// Builds the validated system. Empty `B`/`D` row lists are allowed for
    /// input-free systems.
    pub fn to_system(&self) -> Result<LtiSystem> {
        let a = rows_to_matrix(&self.A, "A", 0)?;
        let n = a.nrows();
        let m = self.B.first().map(Vec::len).or_else(|| self.D.first().map(Vec::len)).unwrap_or(0);
        let b = if self.B.is_empty() { Matrix::zeros(n, m) } else { rows_to_matrix(&self.B, "B", m)? };
        let c = rows_to_matrix(&self.C, "C", n)?;
        let d = if self.D.is_empty() {
            Matrix::zeros(c.nrows(), m)
        } else {
            rows_to_matrix(&self.D, "D", m)?
        };
        LtiSystem::new(a, b, c, d)
    }
}
