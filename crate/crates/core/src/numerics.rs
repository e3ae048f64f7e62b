//! Dense linear-algebra kernels and the tolerance policy shared by the
//! structural checks and the consistency test.
//!
//! Every factorization here goes through a QR-preconditioned singular value
//! decomposition: a Householder QR reduces the matrix to a square triangle
//! of side `min(rows, cols)` and the SVD is taken of that triangle. The
//! singular values are those of the original matrix, so rank decisions are
//! the same as with a direct SVD, at a fraction of the cost for the tall
//! block matrices the estimator produces.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Numerical thresholds for rank decisions and the consistency tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TolerancePolicy {
    /// Singular values at or below `rank_rel_tol * sigma_max` count as zero.
    pub rank_rel_tol: f64,
    pub residual_abs_floor: f64,
    pub residual_rel_factor: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self {
            rank_rel_tol: 1e-9,
            residual_abs_floor: 1e-7,
            residual_rel_factor: 1e-8,
        }
    }
}

impl TolerancePolicy {
    pub fn new(rank_rel_tol: f64, residual_abs_floor: f64, residual_rel_factor: f64) -> Result<Self> {
        for (name, v) in [
            ("rank_rel_tol", rank_rel_tol),
            ("residual_abs_floor", residual_abs_floor),
            ("residual_rel_factor", residual_rel_factor),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(Self {
            rank_rel_tol,
            residual_abs_floor,
            residual_rel_factor,
        })
    }

    /// Consistency tolerance for a right-hand side of the given Euclidean norm.
    pub fn epsilon(&self, rhs_norm: f64) -> f64 {
        self.residual_abs_floor.max(self.residual_rel_factor * rhs_norm)
    }
}

pub(crate) fn ensure_finite(m: &Matrix, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub(crate) fn ensure_finite_vec(v: &Vector, what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Thin SVD `M = U diag(sigma) V^T` with `k = min(rows, cols)` columns in `U`
/// and `V`, singular values sorted in decreasing order.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: Matrix,
    pub singular_values: Vector,
    pub v: Matrix,
}

impl ThinSvd {
    pub fn compute(m: &Matrix) -> Self {
        let (rows, cols) = m.shape();
        let k = rows.min(cols);
        if k == 0 {
            return Self {
                u: Matrix::zeros(rows, 0),
                singular_values: Vector::zeros(0),
                v: Matrix::zeros(cols, 0),
            };
        }
        if rows >= cols {
            // M = Q R, R = Ur S Vr^T  =>  U = Q Ur, V = Vr.
            let qr = m.clone().qr();
            let r = qr.r();
            let svd = r.svd(true, true);
            let u = qr.q() * svd.u.expect("u requested");
            let v = svd.v_t.expect("v requested").transpose();
            Self {
                u,
                singular_values: svd.singular_values,
                v,
            }
        } else {
            // M^T = Q R  =>  M = R^T Q^T, R^T = Ur S Wr^T  =>  U = Ur, V = Q Wr.
            let qr = m.transpose().qr();
            let rt = qr.r().transpose();
            let svd = rt.svd(true, true);
            let u = svd.u.expect("u requested");
            let v = qr.q() * svd.v_t.expect("v requested").transpose();
            Self {
                u,
                singular_values: svd.singular_values,
                v,
            }
        }
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular_values.iter().copied().fold(0.0, f64::max)
    }

    /// Number of singular values strictly above `rel_tol * sigma_max`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let smax = self.sigma_max();
        if smax == 0.0 {
            return 0;
        }
        let cut = rel_tol * smax;
        self.singular_values.iter().filter(|&&s| s > cut).count()
    }

    /// Minimum-norm least-squares solution `V S^+ U^T v` with the given cutoff.
    pub fn solve_min_norm(&self, v: &Vector, rel_tol: f64) -> Vector {
        let rank = self.rank(rel_tol);
        let mut z = Vector::zeros(self.v.nrows());
        for i in 0..rank {
            let coef = self.u.column(i).dot(v) / self.singular_values[i];
            z.axpy(coef, &self.v.column(i), 1.0);
        }
        z
    }
}

/// Numerical rank: count of singular values above `rank_rel_tol * sigma_max`.
pub fn rank(m: &Matrix, pol: &TolerancePolicy) -> Result<usize> {
    ensure_finite(m, "rank operand")?;
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0);
    }
    Ok(ThinSvd::compute(m).rank(pol.rank_rel_tol))
}

/// Spectral norm (largest singular value); zero for empty matrices.
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

/// Minimum-norm minimizer of `||v - M z||_2` and the achieved residual norm.
pub fn lstsq_min_norm(m: &Matrix, v: &Vector, pol: &TolerancePolicy) -> Result<(Vector, f64)> {
    if m.nrows() != v.len() {
        return Err(Error::DimensionMismatch {
            context: "lstsq_min_norm right-hand side",
            expected: m.nrows(),
            actual: v.len(),
        });
    }
    ensure_finite(m, "least-squares matrix")?;
    ensure_finite_vec(v, "least-squares right-hand side")?;
    let z = ThinSvd::compute(m).solve_min_norm(v, pol.rank_rel_tol);
    let residual = (v - m * &z).norm();
    Ok((z, residual))
}

/// Orthogonal projection of `v` onto the column space of `basis`.
pub fn project_onto_colspace(basis: &Matrix, v: &Vector, pol: &TolerancePolicy) -> Result<Vector> {
    let (z, _) = lstsq_min_norm(basis, v, pol)?;
    Ok(basis * z)
}

/// Numerical rank and least-squares residual norm `min_z ||v - M z||` by
/// Householder QR with column-norm pivoting.
///
/// Cheaper than [`lstsq_min_norm`] when only the residual is needed. Columns
/// are dropped once the largest remaining column norm falls to
/// `rank_rel_tol` times the first pivot.
pub fn residual_norm(m: &Matrix, v: &Vector, pol: &TolerancePolicy) -> Result<(usize, f64)> {
    let (rows, cols) = m.shape();
    if rows != v.len() {
        return Err(Error::DimensionMismatch {
            context: "residual_norm right-hand side",
            expected: rows,
            actual: v.len(),
        });
    }
    ensure_finite(m, "least-squares matrix")?;
    ensure_finite_vec(v, "least-squares right-hand side")?;
    let mut a = m.clone();
    let mut y = v.clone();
    let data = a.as_mut_slice();
    let y = y.as_mut_slice();
    let col = |j: usize| j * rows..(j + 1) * rows;
    let steps = rows.min(cols);
    let mut first_pivot = 0.0;
    let mut rank = 0;
    for k in 0..steps {
        let (best, best_sq) = (k..cols)
            .map(|j| (j, data[col(j)][k..].iter().map(|x| x * x).sum::<f64>()))
            .fold((k, -1.0), |acc, c| if c.1 > acc.1 { c } else { acc });
        let norm = best_sq.sqrt();
        if k == 0 {
            first_pivot = norm;
        }
        if norm == 0.0 || norm <= pol.rank_rel_tol * first_pivot {
            break;
        }
        if best != k {
            for i in 0..rows {
                data.swap(k * rows + i, best * rows + i);
            }
        }
        // Reflector v = x + sign(x0) ||x|| e0, applied as I - 2 v v^T / (v^T v).
        let head = data[k * rows + k];
        let alpha = if head >= 0.0 { -norm } else { norm };
        let mut hv: Vec<f64> = data[col(k)][k..].to_vec();
        hv[0] -= alpha;
        let vtv: f64 = hv.iter().map(|x| x * x).sum();
        if vtv > 0.0 {
            let apply = |target: &mut [f64]| {
                let dot: f64 = hv.iter().zip(target.iter()).map(|(a, b)| a * b).sum();
                let f = 2.0 * dot / vtv;
                target.iter_mut().zip(&hv).for_each(|(t, h)| *t -= f * h);
            };
            for j in k + 1..cols {
                apply(&mut data[j * rows + k..(j + 1) * rows]);
            }
            apply(&mut y[k..]);
        }
        data[k * rows + k] = alpha;
        rank = k + 1;
    }
    let residual = y[rank..].iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok((rank, residual))
}

/// Orthonormal basis (as columns) of the numerical null space of `m`.
pub fn null_space(m: &Matrix, pol: &TolerancePolicy) -> Result<Matrix> {
    ensure_finite(m, "null-space operand")?;
    let (rows, cols) = m.shape();
    if cols == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    if rows == 0 {
        return Ok(Matrix::identity(cols, cols));
    }
    // Pad with zero rows so the thin factorization yields a full V.
    let padded = if rows < cols {
        let mut p = Matrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = ThinSvd::compute(&padded);
    let rank = svd.rank(pol.rank_rel_tol);
    Ok(svd.v.columns(rank, cols - rank).into_owned())
}

/// Spectral radius via the eigenvalues of the real Schur form.
pub fn spectral_radius(m: &Matrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::InvalidInput("spectral radius of a non-square matrix".into()));
    }
    ensure_finite(m, "spectral radius operand")?;
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    Ok(m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Matrix exponential by scaling and squaring around a [6/6] Padé core.
pub fn matrix_exp(m: &Matrix) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::InvalidInput(format!(
            "matrix exponential needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    ensure_finite(m, "matrix exponential operand")?;
    let n = m.nrows();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let norm1 = m.column_iter().map(|c| c.lp_norm(1)).fold(0.0, f64::max);
    let squarings = if norm1 > 0.5 {
        (norm1 / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = m / 2f64.powi(squarings);

    // Padé [6/6] coefficients c_k = (2q-k)! q! / ((2q)! k! (q-k)!).
    const Q: usize = 6;
    let mut coef = [0.0f64; Q + 1];
    coef[0] = 1.0;
    for k in 1..=Q {
        coef[k] = coef[k - 1] * (Q - k + 1) as f64 / (k * (2 * Q - k + 1)) as f64;
    }
    let ident = Matrix::identity(n, n);
    let mut num = ident.clone() * coef[0];
    let mut den = ident.clone() * coef[0];
    let mut power = ident;
    for (k, &c) in coef.iter().enumerate().skip(1) {
        power = &power * &scaled;
        num += &power * c;
        if k % 2 == 0 {
            den += &power * c;
        } else {
            den -= &power * c;
        }
    }
    let mut result = den
        .lu()
        .solve(&num)
        .ok_or_else(|| Error::InvalidInput("Padé denominator is singular".into()))?;
    for _ in 0..squarings {
        result = &result * &result;
    }
    ensure_finite(&result, "matrix exponential result")?;
    Ok(result)
}
