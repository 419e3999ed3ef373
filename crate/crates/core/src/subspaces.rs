//! Subspace algebra on finite-dimensional state spaces.
//!
//! Every [`Subspace`] carries an orthonormal basis. Kernels and ranges are
//! decided by a relative singular-value threshold `tol·‖A‖`; intersections by an
//! absolute threshold on the sines of principal angles. Subspaces are compared
//! through principal angles only, never through their bases.

use nalgebra::{DMatrix, DVector};

use crate::error::{dim_check, Error, Result};
use crate::linalg::{check_symmetric_psd, full_svd, spectral_norm};
use crate::scalar::Real;

/// Default relative rank threshold.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;
/// Default principal-angle threshold used by [`intersect`].
pub const DEFAULT_ANGLE_TOL: f64 = 1e-8;

/// Linear subspace of `R^d` given by an orthonormal basis (`d × r`).
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace<T: Real> {
    basis: DMatrix<T>,
}

impl<T: Real> Subspace<T> {
    /// Wraps a basis after checking orthonormality.
    pub fn from_orthonormal(basis: DMatrix<T>) -> Result<Self> {
        let r = basis.ncols();
        let defect = (basis.transpose() * &basis - DMatrix::<T>::identity(r, r)).amax();
        if defect > T::eps() * T::lit(1e4) {
            return Err(Error::Argument(format!("basis is not orthonormal (defect {defect:e})")));
        }
        Ok(Self { basis })
    }

    pub(crate) fn from_basis_unchecked(basis: DMatrix<T>) -> Self {
        Self { basis }
    }

    pub fn zero(ambient_dim: usize) -> Self {
        Self { basis: DMatrix::zeros(ambient_dim, 0) }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self { basis: DMatrix::identity(ambient_dim, ambient_dim) }
    }

    /// Span of the listed coordinate axes.
    pub fn coordinates(ambient_dim: usize, axes: &[usize]) -> Self {
        let mut basis = DMatrix::zeros(ambient_dim, axes.len());
        for (j, &i) in axes.iter().enumerate() {
            basis[(i, j)] = T::one();
        }
        Self { basis }
    }

    /// Span of arbitrary columns at the given relative tolerance.
    pub fn span(vectors: &DMatrix<T>, tol: T) -> Result<Self> {
        if vectors.ncols() == 0 {
            return Ok(Self::zero(vectors.nrows()));
        }
        range(vectors, tol)
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<T> {
        &self.basis
    }

    /// Orthogonal projector `B·Bᵀ` as a dense matrix.
    pub fn projector(&self) -> DMatrix<T> {
        &self.basis * self.basis.transpose()
    }

    /// Coordinates `Bᵀx`.
    pub fn coords(&self, x: &DVector<T>) -> Result<DVector<T>> {
        dim_check("vector length", self.ambient_dim(), x.len())?;
        Ok(self.basis.tr_mul(x))
    }

    /// Embedding `B·c`.
    pub fn lift(&self, c: &DVector<T>) -> Result<DVector<T>> {
        dim_check("coordinate length", self.dim(), c.len())?;
        Ok(&self.basis * c)
    }

    /// Orthogonal direct sum of mutually orthogonal subspaces.
    pub fn direct_sum(parts: &[&Subspace<T>]) -> Result<Self> {
        let d = parts.first().map(|p| p.ambient_dim()).unwrap_or(0);
        let mut cols = Vec::new();
        for p in parts {
            dim_check("ambient dimension", d, p.ambient_dim())?;
            cols.extend(p.basis.column_iter().map(|c| c.clone_owned()));
        }
        if cols.is_empty() {
            return Ok(Self::zero(d));
        }
        Self::span(&DMatrix::from_columns(&cols), T::lit(DEFAULT_RANK_TOL))
    }

    /// Largest deviation of `BᵀB` from the identity.
    pub fn orthonormality_defect(&self) -> T {
        let r = self.dim();
        (self.basis.transpose() * &self.basis - DMatrix::<T>::identity(r, r)).amax()
    }
}

fn check_nonempty<T: Real>(a: &DMatrix<T>) -> Result<()> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::Argument(format!("empty {}x{} matrix", a.nrows(), a.ncols())));
    }
    Ok(())
}

/// Kernel with an absolute singular-value threshold.
fn kernel_abs<T: Real>(a: &DMatrix<T>, threshold: T) -> Result<Subspace<T>> {
    let d = a.ncols();
    if d == 0 {
        return Ok(Subspace::zero(0));
    }
    if a.nrows() == 0 {
        return Ok(Subspace::full(d));
    }
    let svd = full_svd(a)?;
    // singular values beyond min(m, n) are zero
    let cols: Vec<DVector<T>> = (0..d)
        .filter(|&i| svd.s.get(i).map_or(true, |s| *s <= threshold))
        .map(|i| svd.v.column(i).clone_owned())
        .collect();
    if cols.is_empty() {
        Ok(Subspace::zero(d))
    } else {
        Ok(Subspace::from_basis_unchecked(DMatrix::from_columns(&cols)))
    }
}

/// Numerical null space `{x : |Ax| ≤ tol·‖A‖·|x|}`.
pub fn kernel<T: Real>(a: &DMatrix<T>, tol: T) -> Result<Subspace<T>> {
    check_nonempty(a)?;
    let norm = spectral_norm(a);
    kernel_abs(a, tol * norm)
}

/// Column space at relative tolerance `tol`.
pub fn range<T: Real>(a: &DMatrix<T>, tol: T) -> Result<Subspace<T>> {
    check_nonempty(a)?;
    let svd = full_svd(a)?;
    let smax = svd.s.first().copied().unwrap_or_else(T::zero);
    if smax == T::zero() {
        return Ok(Subspace::zero(a.nrows()));
    }
    let cols: Vec<DVector<T>> = (0..svd.s.len())
        .filter(|&i| svd.s[i] > tol * smax)
        .map(|i| svd.u.column(i).clone_owned())
        .collect();
    Ok(Subspace::from_basis_unchecked(DMatrix::from_columns(&cols)))
}

/// `U ∩ V` with the default principal-angle threshold.
pub fn intersect<T: Real>(u: &Subspace<T>, v: &Subspace<T>) -> Result<Subspace<T>> {
    intersect_with_tol(u, v, T::lit(DEFAULT_ANGLE_TOL))
}

/// `U ∩ V`: directions of `U` whose distance to `V` is at most `tol`.
pub fn intersect_with_tol<T: Real>(u: &Subspace<T>, v: &Subspace<T>, tol: T) -> Result<Subspace<T>> {
    dim_check("ambient dimension", u.ambient_dim(), v.ambient_dim())?;
    if u.dim() == 0 || v.dim() == 0 {
        return Ok(Subspace::zero(u.ambient_dim()));
    }
    // residual of U after projecting onto V; its singular values are sines of principal angles
    let resid = &u.basis - &v.basis * v.basis.tr_mul(&u.basis);
    let k = kernel_abs(&resid, tol)?;
    Ok(Subspace::from_basis_unchecked(&u.basis * k.basis))
}

/// Orthogonal complement in the ambient space.
pub fn complement<T: Real>(u: &Subspace<T>) -> Result<Subspace<T>> {
    if u.dim() == 0 {
        return Ok(Subspace::full(u.ambient_dim()));
    }
    kernel_abs(&u.basis.transpose(), T::lit(0.5))
}

/// Orthogonal projection `B·(Bᵀx)`.
pub fn project<T: Real>(u: &Subspace<T>, x: &DVector<T>) -> Result<DVector<T>> {
    let c = u.coords(x)?;
    u.lift(&c)
}

/// `U ⊖ W`: the part of `U` orthogonal to `W`.
pub fn orthogonal_difference<T: Real>(u: &Subspace<T>, w: &Subspace<T>) -> Result<Subspace<T>> {
    intersect(u, &complement(w)?)
}

/// Sine of the largest principal angle between `U` and `V`; `1` if the dimensions differ.
pub fn distance<T: Real>(u: &Subspace<T>, v: &Subspace<T>) -> Result<T> {
    dim_check("ambient dimension", u.ambient_dim(), v.ambient_dim())?;
    if u.dim() != v.dim() {
        return Ok(T::one());
    }
    if u.dim() == 0 {
        return Ok(T::zero());
    }
    let a = &u.basis - &v.basis * v.basis.tr_mul(&u.basis);
    let b = &v.basis - &u.basis * u.basis.tr_mul(&v.basis);
    Ok(spectral_norm(&a).max(spectral_norm(&b)))
}

/// Largest `|<u_i|v_j>|` over basis vectors of two subspaces.
pub fn overlap<T: Real>(u: &Subspace<T>, v: &Subspace<T>) -> Result<T> {
    dim_check("ambient dimension", u.ambient_dim(), v.ambient_dim())?;
    if u.dim() == 0 || v.dim() == 0 {
        return Ok(T::zero());
    }
    Ok(u.basis.tr_mul(&v.basis).amax())
}

/// Ordered orthogonal decomposition of a subspace.
#[derive(Clone, Debug)]
pub struct DecompositionReport<T: Real> {
    /// The decomposed space.
    pub whole: Subspace<T>,
    pub parts: Vec<Subspace<T>>,
    /// Off-diagonal: max basis overlap of parts i and j. Diagonal: orthonormality defect of part i.
    pub pairwise_overlaps: DMatrix<T>,
    /// `max |Σ P_i − P_whole|`.
    pub reconstruction_defect: T,
}

impl<T: Real> DecompositionReport<T> {
    pub fn new(whole: Subspace<T>, parts: Vec<Subspace<T>>) -> Result<Self> {
        let k = parts.len();
        let mut overlaps = DMatrix::zeros(k, k);
        let mut sum = DMatrix::zeros(whole.ambient_dim(), whole.ambient_dim());
        for i in 0..k {
            overlaps[(i, i)] = parts[i].orthonormality_defect();
            sum += parts[i].projector();
            for j in 0..k {
                if i != j {
                    overlaps[(i, j)] = overlap(&parts[i], &parts[j])?;
                }
            }
        }
        let reconstruction_defect = (sum - whole.projector()).amax();
        Ok(Self { whole, parts, pairwise_overlaps: overlaps, reconstruction_defect })
    }

    pub fn dims(&self) -> Vec<usize> {
        self.parts.iter().map(Subspace::dim).collect()
    }

    pub fn max_offdiagonal_overlap(&self) -> T {
        let k = self.parts.len();
        let mut m = T::zero();
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    m = m.max(self.pairwise_overlaps[(i, j)]);
                }
            }
        }
        m
    }

    pub fn dims_add_up(&self) -> bool {
        self.dims().iter().sum::<usize>() == self.whole.dim()
    }

    pub fn is_orthogonal(&self, tol: T) -> bool {
        self.max_offdiagonal_overlap() <= tol && self.dims_add_up() && self.reconstruction_defect <= tol
    }
}

/// The reduced state space `H₀ = (N(η) ∩ N(C))^⊥`.
pub fn reduced_state_space<T: Real>(c: &DMatrix<T>, eta: &DMatrix<T>, tol: T) -> Result<Subspace<T>> {
    dim_check("columns of C vs size of eta", eta.ncols(), c.ncols())?;
    let n_eta = kernel(eta, tol)?;
    let n_c = kernel(c, tol)?;
    complement(&intersect(&n_eta, &n_c)?)
}

/// `H₀ = R(Cᵀ) ⊕ (N(C) ∩ R(η)) ⊕ ((N(C) ∩ H₀) ⊖ (N(C) ∩ R(η)))`.
///
/// Parts are returned in that order.
pub fn three_way_decompose<T: Real>(c: &DMatrix<T>, eta: &DMatrix<T>, tol: T) -> Result<DecompositionReport<T>> {
    check_nonempty(c)?;
    check_nonempty(eta)?;
    check_symmetric_psd("eta", eta, tol)?;
    let h0 = reduced_state_space(c, eta, tol)?;
    let range_ct = range(&c.transpose(), tol)?;
    let n_c = kernel(c, tol)?;
    let h1 = intersect(&n_c, &range(eta, tol)?)?;
    let nc_h0 = intersect(&n_c, &h0)?;
    let h2 = orthogonal_difference(&nc_h0, &h1)?;
    DecompositionReport::new(h0, vec![range_ct, h1, h2])
}
