//! Small dense linear-algebra helpers shared by the solvers.

use nalgebra::{DMatrix, DVector, LU};
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// `(A + Aᵀ)/2`.
pub fn sym_part<T: Real>(a: &DMatrix<T>) -> DMatrix<T> {
    (a + a.transpose()) * T::lit(0.5)
}

// Spectral decompositions run through faer in f64: nalgebra's SVD returns
// inaccurate factors for some rank-deficient inputs.

fn to_faer<T: Real>(a: &DMatrix<T>) -> faer::Mat<f64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)].to_f64_lossy())
}

fn from_faer<T: Real>(a: faer::MatRef<'_, f64>) -> DMatrix<T> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| T::lit(a[(i, j)]))
}

/// Full singular value decomposition `A = U·diag(s)·Vᵀ` with square `U`, `V`.
#[derive(Clone, Debug)]
pub struct FullSvd<T: Real> {
    pub u: DMatrix<T>,
    /// Nonincreasing, `min(m, n)` entries.
    pub s: Vec<T>,
    pub v: DMatrix<T>,
}

type Factors = (faer::Mat<f64>, Vec<f64>, faer::Mat<f64>);

fn svd_defect(a: &faer::Mat<f64>, (u, s, v): &Factors) -> f64 {
    let av = a * v;
    let mut defect = 0f64;
    for j in 0..a.ncols() {
        let sj = s.get(j).copied().unwrap_or(0.0);
        for i in 0..a.nrows() {
            let us = if j < s.len() { u[(i, j)] * sj } else { 0.0 };
            defect = defect.max((av[(i, j)] - us).abs());
        }
    }
    defect
}

fn direct_svd(a: &faer::Mat<f64>) -> Option<Factors> {
    let svd = a.svd().ok()?;
    let d = svd.S().column_vector();
    let s = (0..d.nrows()).map(|i| d[i]).collect();
    Some((svd.U().to_owned(), s, svd.V().to_owned()))
}

// A = Q·R first, then the SVD of the square factor R. Avoids the cases where
// faer's bidiagonal solver loses accuracy on clustered singular values.
fn qr_svd(a: &faer::Mat<f64>) -> Option<Factors> {
    let (m, n) = (a.nrows(), a.ncols());
    if m < n {
        let (v, s, u) = qr_svd(&a.transpose().to_owned())?;
        return Some((u, s, v));
    }
    let qr = a.qr();
    let q = qr.compute_Q();
    let r = qr.thin_R().to_owned();
    let (ur, s, v) = direct_svd(&r)?;
    let mut lift = faer::Mat::<f64>::identity(m, m);
    for j in 0..n {
        for i in 0..n {
            lift[(i, j)] = ur[(i, j)];
        }
    }
    Some((&q * &lift, s, v))
}

/// Verified against `|AV − UΣ| ≤ 1e-10·‖A‖`; a failed check is an internal error.
pub fn full_svd<T: Real>(a: &DMatrix<T>) -> Result<FullSvd<T>> {
    let fa = to_faer(a);
    let mut worst = 0f64;
    for attempt in [direct_svd as fn(&faer::Mat<f64>) -> Option<Factors>, qr_svd] {
        let Some(f) = attempt(&fa) else { continue };
        let defect = svd_defect(&fa, &f);
        let scale = f.1.first().copied().unwrap_or(0.0);
        if defect == 0.0 || defect <= 1e-10 * scale.max(f64::MIN_POSITIVE) {
            let (u, s, v) = f;
            return Ok(FullSvd { u: from_faer(u.as_ref()), s: s.into_iter().map(T::lit).collect(), v: from_faer(v.as_ref()) });
        }
        worst = worst.max(defect);
    }
    Err(Error::Internal(format!("inaccurate SVD (residual {worst:e})")))
}

/// Singular values in nonincreasing order.
pub fn singular_values<T: Real>(a: &DMatrix<T>) -> Vec<T> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let vals = to_faer(a).singular_values().expect("singular values converge");
    vals.into_iter().map(T::lit).collect()
}

/// Eigenvalues (nondecreasing) and orthonormal eigenvectors of the symmetric part.
pub fn sym_eigen<T: Real>(a: &DMatrix<T>) -> (Vec<T>, DMatrix<T>) {
    let eig = to_faer(&sym_part(a))
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("symmetric eigensolver converges");
    let s = eig.S().column_vector();
    ((0..s.nrows()).map(|i| T::lit(s[i])).collect(), from_faer(eig.U()))
}

/// Smallest eigenvalue of the symmetric part (`+∞` for an empty matrix).
pub fn lambda_min_sym<T: Real>(a: &DMatrix<T>) -> T {
    if a.nrows() == 0 {
        return T::max_value().unwrap_or_else(T::one);
    }
    let vals = to_faer(&sym_part(a))
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .expect("symmetric eigensolver converges");
    T::lit(vals.into_iter().fold(f64::INFINITY, f64::min))
}

/// Largest singular value.
pub fn spectral_norm<T: Real>(a: &DMatrix<T>) -> T {
    singular_values(a).first().copied().unwrap_or_else(T::zero)
}

/// Smallest singular value of a matrix with at least as many rows as columns.
pub fn sigma_min<T: Real>(a: &DMatrix<T>) -> T {
    if a.ncols() == 0 {
        return T::max_value().unwrap_or_else(T::one);
    }
    singular_values(a).last().copied().unwrap_or_else(T::zero)
}

/// Rejects matrices that are not symmetric positive semidefinite within `tol`
/// (relative to the spectral norm).
pub fn check_symmetric_psd<T: Real>(name: &str, a: &DMatrix<T>, tol: T) -> Result<()> {
    if !a.is_square() {
        return Err(Error::Model(format!("{name} is not square")));
    }
    let scale = spectral_norm(a).max(T::one());
    let asym = (a - a.transpose()).amax();
    if asym > tol * scale {
        return Err(Error::Model(format!("{name} is not symmetric (defect {asym:e})")));
    }
    let lmin = lambda_min_sym(a);
    if lmin < -tol * scale {
        return Err(Error::Model(format!("{name} has negative eigenvalue {lmin:e}")));
    }
    Ok(())
}

/// LU factorization computed once and reused for many right-hand sides.
#[derive(Clone, Debug)]
pub struct DenseSolver<T: Real> {
    lu: LU<T, nalgebra::Dyn, nalgebra::Dyn>,
    dim: usize,
}

impl<T: Real> DenseSolver<T> {
    pub fn new(matrix: DMatrix<T>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Dimension("step matrix must be square".into()));
        }
        let dim = matrix.nrows();
        let lu = LU::new(matrix);
        if !lu.is_invertible() {
            return Err(Error::Internal("step matrix is singular".into()));
        }
        Ok(Self { lu, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve(&self, b: &DVector<T>) -> Result<DVector<T>> {
        self.lu
            .solve(b)
            .ok_or_else(|| Error::Internal("step matrix is singular".into()))
    }
}

/// Uniform entries in `[-1, 1]`.
pub fn random_vector<T: Real, R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DVector<T> {
    DVector::from_fn(dim, |_, _| T::lit(rng.gen_range(-1.0..=1.0)))
}

/// [`random_vector`] from a fixed ChaCha8 stream.
pub fn seeded_vector<T: Real>(seed: u64, dim: usize) -> DVector<T> {
    use rand::SeedableRng;
    random_vector(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed), dim)
}

pub fn random_matrix<T: Real, R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<T> {
    DMatrix::from_fn(rows, cols, |_, _| T::lit(rng.gen_range(-1.0..=1.0)))
}
