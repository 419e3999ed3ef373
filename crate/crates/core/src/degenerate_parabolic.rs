//! Degenerate parabolic systems `(d0·η + CᵀC) U = F`.
//!
//! `η` may vanish on part of the state space. The problem is reduced to
//! `H0 = (N(η) ∩ N(C))^⊥` with `η0 = ιᵀηι`, `C0 = Cι`, where `ι` is the
//! orthonormal basis of `H0`. Reduced signals are stored in `H0` coordinates.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{dim_check, Error, Result};
use crate::evo_core::{EvoProblem, EvoSolver};
use crate::linalg::{check_symmetric_psd, lambda_min_sym, random_vector, spectral_norm, DenseSolver};
use crate::scalar::Real;
use crate::subspaces::{intersect, kernel, three_way_decompose, DecompositionReport, Subspace};
use crate::weighted_time::{d0, d0_inverse, weighted_norm, weighted_quadratic, weighted_sum, TimeSignal, WeightedTimeGrid};

/// Relative defect allowed when admitting data as `H0`-valued.
pub const H0_ADMISSION_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct DegenerateProblem<T: Real> {
    eta: DMatrix<T>,
    c: DMatrix<T>,
    h0: Subspace<T>,
    eta0: DMatrix<T>,
    c0: DMatrix<T>,
    c0tc0: DMatrix<T>,
    c1: T,
    decomposition: DecompositionReport<T>,
}

impl<T: Real> DegenerateProblem<T> {
    /// Reduces to `H0`, decomposes it and certifies `c1 = λ_min(η0 + C0ᵀC0)`.
    pub fn build(eta: DMatrix<T>, c: DMatrix<T>, tol: T) -> Result<Self> {
        dim_check("columns of C vs size of eta", eta.ncols(), c.ncols())?;
        check_symmetric_psd("eta", &eta, tol)?;
        let decomposition = three_way_decompose(&c, &eta, tol)?;
        let h0 = decomposition.whole.clone();
        if h0.dim() == 0 {
            return Err(Error::Model("reduced state space is trivial: eta and C vanish identically".into()));
        }
        let iota = h0.basis();
        let eta0 = iota.transpose() * &eta * iota;
        let eta0 = (&eta0 + eta0.transpose()) * T::lit(0.5);
        let c0 = &c * iota;
        let c0tc0 = c0.transpose() * &c0;
        let form = &eta0 + &c0tc0;
        let c1 = lambda_min_sym(&form);
        if !(c1 > tol * spectral_norm(&form).max(T::one())) {
            return Err(Error::NotPositive(format!(
                "degenerate beyond the H0 reduction: lambda_min(eta0 + C0'C0) = {c1:e}"
            )));
        }
        Ok(Self { eta, c, h0, eta0, c0, c0tc0, c1, decomposition })
    }

    pub fn eta(&self) -> &DMatrix<T> {
        &self.eta
    }

    pub fn c(&self) -> &DMatrix<T> {
        &self.c
    }

    pub fn h0(&self) -> &Subspace<T> {
        &self.h0
    }

    pub fn eta0(&self) -> &DMatrix<T> {
        &self.eta0
    }

    pub fn c0(&self) -> &DMatrix<T> {
        &self.c0
    }

    pub fn c0tc0(&self) -> &DMatrix<T> {
        &self.c0tc0
    }

    pub fn c1(&self) -> T {
        self.c1
    }

    /// Parts `R(Cᵀ)`, `H1 = N(C) ∩ R(η)`, `H2`, all in ambient coordinates.
    pub fn decomposition(&self) -> &DecompositionReport<T> {
        &self.decomposition
    }

    pub fn ambient_dim(&self) -> usize {
        self.eta.nrows()
    }

    pub fn reduced_dim(&self) -> usize {
        self.h0.dim()
    }

    /// Diagnostic: does `η` map `R(Cᵀ)` into itself?
    pub fn eta_preserves_range_ct(&self, tol: T) -> bool {
        let r = &self.decomposition.parts[0];
        if r.dim() == 0 {
            return true;
        }
        let image = &self.eta * r.basis();
        let outside = &image - r.projector() * &image;
        outside.amax() <= tol * self.eta.amax().max(T::one())
    }

    /// Largest relative deviation of `η0`, `C0ᵀC0` from the ambient forms on random pairs.
    pub fn reduction_consistency<R: Rng + ?Sized>(&self, rng: &mut R, trials: usize) -> T {
        let iota = self.h0.basis();
        let mut worst = T::zero();
        for _ in 0..trials {
            let phi: DVector<T> = random_vector(rng, self.reduced_dim());
            let psi: DVector<T> = random_vector(rng, self.reduced_dim());
            let (x, y) = (iota * &phi, iota * &psi);
            let cx = &self.c * &x;
            let cy = &self.c * &y;
            let d1 = (phi.dot(&(&self.c0tc0 * &psi)) - cx.dot(&cy)).abs() / (cx.norm() * cy.norm()).max(T::one());
            let ex = &self.eta * &y;
            let d2 = (phi.dot(&(&self.eta0 * &psi)) - x.dot(&ex)).abs() / (x.norm() * ex.norm()).max(T::one());
            worst = worst.max(d1).max(d2);
        }
        worst
    }

    /// Coordinates of an ambient signal, rejecting data with a relative
    /// component outside `H0` above `tol`.
    pub fn to_coords(&self, f: &TimeSignal<T>, tol: T) -> Result<TimeSignal<T>> {
        dim_check("signal dimension", self.ambient_dim(), f.dim())?;
        let coords = self.h0.basis().tr_mul(f.values());
        let back = self.h0.basis() * &coords;
        let defect = (f.values() - back).amax();
        let scale = f.values().amax();
        if defect > tol * scale {
            return Err(Error::Argument(format!(
                "data is not H0-valued: relative defect {:e}",
                defect / scale
            )));
        }
        TimeSignal::from_values(*f.grid(), coords)
    }

    /// Ambient signal `ι·U`.
    pub fn lift(&self, u: &TimeSignal<T>) -> Result<TimeSignal<T>> {
        u.map_space(self.h0.basis())
    }

    /// Projects ambient data onto `H0` (the caller acknowledges the change).
    pub fn project_signal(&self, f: &TimeSignal<T>) -> Result<TimeSignal<T>> {
        f.map_space(&self.h0.projector())
    }
}

/// Reduced backward-Euler solver for `(d0·η0 + C0ᵀC0) U = F`.
#[derive(Clone, Debug)]
pub struct ReducedSolver<T: Real> {
    inner: EvoSolver<T>,
}

impl<T: Real> ReducedSolver<T> {
    /// Certified with `c0 = min{ρ, 1}·c1`, valid because
    /// `ρη0 + C0ᵀC0 ⪰ min{ρ,1}(η0 + C0ᵀC0)`.
    pub fn new(p: &DegenerateProblem<T>, grid: WeightedTimeGrid<T>) -> Result<Self> {
        let r = p.reduced_dim();
        let rho = grid.rho();
        let evo = EvoProblem::new(p.eta0.clone(), DMatrix::zeros(r, r), p.c0tc0.clone(), rho)?
            .with_certified_c0(rho.min(T::one()) * p.c1)?;
        Ok(Self { inner: EvoSolver::new(&evo, grid)? })
    }

    pub fn c0(&self) -> T {
        self.inner.c0()
    }

    pub fn grid(&self) -> &WeightedTimeGrid<T> {
        self.inner.grid()
    }

    /// `F` and the result are in `H0` coordinates.
    pub fn solve_coords(&self, f: &TimeSignal<T>) -> Result<TimeSignal<T>> {
        self.inner.solve(f)
    }
}

/// Solves the reduced system for ambient `H0`-valued data; returns `H0` coordinates.
pub fn solve_reduced<T: Real>(p: &DegenerateProblem<T>, f: &TimeSignal<T>) -> Result<TimeSignal<T>> {
    let fc = p.to_coords(f, T::lit(H0_ADMISSION_TOL))?;
    ReducedSolver::new(p, *f.grid())?.solve_coords(&fc)
}

/// First-order pair and the residuals of `d0 V + C U = 0`, `ηU − CᵀV − d0⁻¹F = 0`.
#[derive(Clone, Debug)]
pub struct RecoveredPair<T: Real> {
    pub v: TimeSignal<T>,
    /// `|d0 V + C U|_{ρ,0,0}` relative to `|C U|_{ρ,0,0}`.
    pub flux_residual: T,
    /// `|ηU − CᵀV − d0⁻¹F|_{ρ,0,0}` relative to `|d0⁻¹F|_{ρ,0,0}`.
    pub balance_residual: T,
}

fn relative<T: Real>(num: T, den: T) -> T {
    if den > T::zero() {
        num / den
    } else {
        num
    }
}

/// `V = −C·d0⁻¹(ιU)` for `U` in `H0` coordinates and ambient `F`.
pub fn recover_pair<T: Real>(p: &DegenerateProblem<T>, u: &TimeSignal<T>, f: &TimeSignal<T>) -> Result<RecoveredPair<T>> {
    let x = p.lift(u)?;
    let cx = x.map_space(&p.c)?;
    let v = d0_inverse(&cx).scaled(-T::one());
    let flux = d0(&v).axpy(T::one(), &cx)?;
    let fi = d0_inverse(f);
    let balance = x.map_space(&p.eta)?.sub(&v.map_space(&p.c.transpose())?)?.sub(&fi)?;
    Ok(RecoveredPair {
        flux_residual: relative(weighted_norm(&flux, 0)?, weighted_norm(&cx, 0)?),
        balance_residual: relative(weighted_norm(&balance, 0)?, weighted_norm(&fi, 0)?),
        v,
    })
}

fn node_index<T: Real>(grid: &WeightedTimeGrid<T>, t: T) -> Result<usize> {
    let x = (t / grid.dt()).to_f64_lossy();
    let n = x.round();
    if !(n >= 0.0) || (x - n).abs() > 1e-9 || n as usize >= grid.nodes() {
        return Err(Error::Argument(format!("time {t:e} is not a grid node")));
    }
    Ok(n as usize)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyBalance<T> {
    /// `½<U|ηU>(t1) + dt·Σ_{(t0,t1]} |CU_n|²`.
    pub lhs: T,
    /// `½<U|ηU>(t0)`.
    pub rhs: T,
    /// Numerical dissipation `½Σ_{(t0,t1]} <δU|η δU>`; `lhs + defect = rhs` exactly.
    pub dissipation_defect: T,
}

/// Energy balance on a source-free window `(t0, t1]`; `U`, `F` in `H0` coordinates.
pub fn energy_balance<T: Real>(
    p: &DegenerateProblem<T>,
    u: &TimeSignal<T>,
    f: &TimeSignal<T>,
    t0: T,
    t1: T,
) -> Result<EnergyBalance<T>> {
    u.compatible(f)?;
    dim_check("reduced dimension", p.reduced_dim(), u.dim())?;
    let grid = u.grid();
    let (n0, n1) = (node_index(grid, t0)?, node_index(grid, t1)?);
    if n0 >= n1 {
        return Err(Error::Argument("energy window needs t0 < t1".into()));
    }
    if (n0 + 1..=n1).any(|n| f.at(n).iter().any(|v| *v != T::zero())) {
        return Err(Error::Precondition("source does not vanish on the energy window".into()));
    }
    let half = T::lit(0.5);
    let energy = |n: usize| u.at(n).dot(&(&p.eta0 * u.at(n))) * half;
    let mut flux = T::zero();
    let mut defect = T::zero();
    for n in n0 + 1..=n1 {
        let cu = &p.c0 * u.at(n);
        flux += cu.norm_squared();
        let du = u.at(n) - u.at(n - 1);
        defect += du.dot(&(&p.eta0 * &du)) * half;
    }
    Ok(EnergyBalance { lhs: energy(n1) + flux * grid.dt(), rhs: energy(n0), dissipation_defect: defect })
}

/// Largest relative residual of the per-step identity
/// `½<Un|ηUn> − ½<Un−1|ηUn−1> + ½<δU|ηδU> + dt|CUn|² = dt<Fn|Un>`.
pub fn energy_step_identity_defect<T: Real>(p: &DegenerateProblem<T>, u: &TimeSignal<T>, f: &TimeSignal<T>) -> Result<T> {
    u.compatible(f)?;
    let dt = u.grid().dt();
    let half = T::lit(0.5);
    let mut prev = DVector::zeros(u.dim());
    let mut worst = T::zero();
    for n in 0..u.nodes() {
        let un = u.at(n).clone_owned();
        let du = &un - &prev;
        let terms = [
            un.dot(&(&p.eta0 * &un)) * half,
            -prev.dot(&(&p.eta0 * &prev)) * half,
            du.dot(&(&p.eta0 * &du)) * half,
            (&p.c0 * &un).norm_squared() * dt,
            -f.at(n).dot(&un) * dt,
        ];
        let sum = terms.iter().fold(T::zero(), |a, b| a + *b);
        let scale = terms.iter().fold(T::zero(), |a, b| a.max(b.abs()));
        worst = worst.max(relative(sum.abs(), scale));
        prev = un;
    }
    Ok(worst)
}

/// Regularity estimate `|U|_{graph} ≤ (1/c̃1)|F|_{−1}` in the weighted norms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegularityCheck<T> {
    /// `(|U|² + |C0U|²)^{1/2}` in `ρ,0,0`.
    pub lhs: T,
    /// `|F|_{−1} / c̃1`, with `|F|²_{−1} = dt·Σ w_n <F_n|(1 + C0ᵀC0)⁻¹F_n>`.
    pub rhs: T,
    /// `½·min{1, c1}·min{1, 2ρ}`.
    pub c1_tilde: T,
    /// `|d0⁻¹F|_{ρ,0,0}`, the temporal surrogate, reported for comparison only.
    pub temporal_surrogate: T,
    pub pass: bool,
}

/// `U`, `F` in `H0` coordinates.
pub fn regularity_bound_check<T: Real>(p: &DegenerateProblem<T>, u: &TimeSignal<T>, f: &TimeSignal<T>) -> Result<RegularityCheck<T>> {
    u.compatible(f)?;
    dim_check("reduced dimension", p.reduced_dim(), u.dim())?;
    let grid = u.grid();
    let r = p.reduced_dim();
    let graph = DMatrix::identity(r, r) + &p.c0tc0;
    let lhs = weighted_quadratic(u, &graph)?.max(T::zero()).sqrt();
    let solver = DenseSolver::new(graph)?;
    let mut sols = DMatrix::zeros(r, f.nodes());
    for n in 0..f.nodes() {
        sols.set_column(n, &solver.solve(&f.at(n).clone_owned())?);
    }
    let dual = weighted_sum(grid, |n| f.at(n).dot(&sols.column(n))).max(T::zero()).sqrt();
    let c1_tilde = T::lit(0.5) * p.c1.min(T::one()) * (grid.rho() * T::lit(2.0)).min(T::one());
    let rhs = dual / c1_tilde;
    let slack = T::one() + T::lit(10.0) * grid.dt() * grid.rho();
    Ok(RegularityCheck {
        lhs,
        rhs,
        c1_tilde,
        temporal_surrogate: weighted_norm(f, -1)?,
        pass: lhs <= rhs * slack,
    })
}

/// Equivalence of the space-time positivity condition and the pointwise one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpacetimeReport<T> {
    /// `min <x|(η0 + C0ᵀC0)x> / (c1|x|²)` over random `x`.
    pub pointwise_min_ratio: T,
    /// `min <U|(d0η0 + C0ᵀC0)U>_ρ / (c0|U|²_ρ)` over random signals, `c0 = min{ρ,1}·c1`.
    pub temporal_min_ratio: T,
    /// Same quotient for `U(t) = e^{ρt}x` on `[0,1]`, measured against `c1/max{ρ,1}`.
    pub ramp_ratio: T,
    pub c0_temporal: T,
    pub trials: usize,
    pub pass: bool,
}

fn temporal_quotient<T: Real>(p: &DegenerateProblem<T>, u: &TimeSignal<T>) -> Result<T> {
    let du = d0(u);
    let eu = u.map_space(&p.eta0)?;
    let num = weighted_sum(u.grid(), |n| du.at(n).dot(&eu.at(n))) + weighted_quadratic(u, &p.c0tc0)?;
    Ok(num / weighted_norm(u, 0)?.powi(2))
}

pub fn check_spacetime_equivalence<T: Real, R: Rng + ?Sized>(
    p: &DegenerateProblem<T>,
    grid: WeightedTimeGrid<T>,
    trials: usize,
    rng: &mut R,
) -> Result<SpacetimeReport<T>> {
    let rho = grid.rho();
    let r = p.reduced_dim();
    let form = &p.eta0 + &p.c0tc0;
    let c0t = rho.min(T::one()) * p.c1;
    let mut pointwise = T::max_value().unwrap_or_else(T::one);
    let mut temporal = pointwise;
    for _ in 0..trials {
        let x: DVector<T> = random_vector(rng, r);
        pointwise = pointwise.min(x.dot(&(&form * &x)) / (p.c1 * x.norm_squared()));
        let vals = DMatrix::from_fn(r, grid.nodes(), |_, _| T::lit(rng.gen_range(-1.0..=1.0)));
        let u = TimeSignal::from_values(grid, vals)?;
        temporal = temporal.min(temporal_quotient(p, &u)? / c0t);
    }
    let x: DVector<T> = random_vector(rng, r);
    let ramp = TimeSignal::from_fn(grid, r, |_, t| if t <= T::one() { &x * (rho * t).exp() } else { DVector::zeros(r) })?;
    let ramp_ratio = temporal_quotient(p, &ramp)? / (p.c1 / rho.max(T::one()));
    let floor = T::one() - T::lit(10.0) * grid.dt();
    let pass = trials == 0 || (pointwise >= T::one() - T::lit(1e-10) && temporal >= floor);
    Ok(SpacetimeReport {
        pointwise_min_ratio: pointwise,
        temporal_min_ratio: temporal,
        ramp_ratio,
        c0_temporal: c0t,
        trials,
        pass: pass && ramp_ratio >= floor,
    })
}

/// The two-potential bidomain model on a cell-centred grid of `(0,1)` or `(0,1)²`.
#[derive(Clone, Debug)]
pub struct Bidomain<T: Real> {
    pub problem: DegenerateProblem<T>,
    /// Cell-centred gradient without boundary condition (interior faces only).
    pub grad: DMatrix<T>,
    pub cells: usize,
    pub sigma: (T, T),
    /// `min{σ1,σ2}·λ_min(gradᵀgrad)` on mean-zero functions.
    pub poincare_c2: T,
}

/// Gradient on interior faces of an `m` or `m×m` cell grid with spacing `1/m`.
pub fn cell_gradient<T: Real>(shape: &[usize]) -> Result<DMatrix<T>> {
    let (mx, my) = match shape {
        [m] => (*m, 1),
        [mx, my] => (*mx, *my),
        _ => return Err(Error::Argument("bidomain grid must be 1-D or 2-D".into())),
    };
    if mx < 2 || (shape.len() == 2 && my < 2) {
        return Err(Error::Argument("bidomain grid needs at least 2 cells per axis".into()));
    }
    let inv_h = T::lit(mx as f64);
    let cells = mx * my;
    let idx = |i: usize, j: usize| j * mx + i;
    let mut rows: Vec<(usize, usize)> = Vec::new();
    for j in 0..my {
        for i in 0..mx - 1 {
            rows.push((idx(i, j), idx(i + 1, j)));
        }
    }
    if shape.len() == 2 {
        for j in 0..my - 1 {
            for i in 0..mx {
                rows.push((idx(i, j), idx(i, j + 1)));
            }
        }
    }
    let mut g = DMatrix::zeros(rows.len(), cells);
    for (r, (a, b)) in rows.into_iter().enumerate() {
        g[(r, a)] = -inv_h;
        g[(r, b)] = inv_h;
    }
    Ok(g)
}

impl<T: Real> Bidomain<T> {
    pub fn new(shape: &[usize], sigma1: T, sigma2: T) -> Result<Self> {
        if !(sigma1 > T::zero() && sigma2 > T::zero()) {
            return Err(Error::Argument("conductivities must be positive".into()));
        }
        let grad = cell_gradient::<T>(shape)?;
        let (faces, cells) = grad.shape();
        let mut eta = DMatrix::zeros(2 * cells, 2 * cells);
        for i in 0..cells {
            for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                eta[(a * cells + i, b * cells + i)] = T::one();
            }
        }
        let mut c = DMatrix::zeros(2 * faces, 2 * cells);
        c.view_mut((0, 0), (faces, cells)).copy_from(&(&grad * sigma1.sqrt()));
        c.view_mut((faces, cells), (faces, cells)).copy_from(&(&grad * sigma2.sqrt()));
        let problem = DegenerateProblem::build(eta, c, T::lit(1e-10))?;
        let mean_zero = crate::subspaces::complement(&Subspace::span(&DMatrix::from_element(cells, 1, T::one()), T::lit(1e-10))?)?;
        let b = mean_zero.basis();
        let lap = b.transpose() * grad.transpose() * &grad * b;
        let poincare_c2 = sigma1.min(sigma2) * lambda_min_sym(&lap);
        Ok(Self { problem, grad, cells, sigma: (sigma1, sigma2), poincare_c2 })
    }

    /// `(χ, −χ)/|·|`.
    pub fn expected_null_space(&self) -> Subspace<T> {
        let n = self.cells;
        let s = T::one() / T::lit((2 * n) as f64).sqrt();
        let v = DMatrix::from_fn(2 * n, 1, |i, _| if i < n { s } else { -s });
        Subspace::from_basis_unchecked(v)
    }

    /// `N(η) ∩ N(C)` as computed from the operators.
    pub fn null_space(&self, tol: T) -> Result<Subspace<T>> {
        intersect(&kernel(self.problem.eta(), tol)?, &kernel(self.problem.c(), tol)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_matrix;
    use crate::subspaces::{distance, DEFAULT_RANK_TOL};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = DEFAULT_RANK_TOL;

    fn scalar_heat(lambda: f64) -> DegenerateProblem<f64> {
        DegenerateProblem::build(DMatrix::from_element(1, 1, 1.0), DMatrix::from_element(1, 1, lambda.sqrt()), TOL).unwrap()
    }

    fn pulse(t: f64) -> f64 {
        if t < 1.0 {
            (std::f64::consts::PI * t).sin().powi(2)
        } else {
            0.0
        }
    }

    #[test]
    fn identity_eta_gives_c1_at_least_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = random_matrix::<f64, _>(&mut rng, 3, 5);
        let p = DegenerateProblem::build(DMatrix::identity(5, 5), c, TOL).unwrap();
        assert!(p.c1() >= 1.0 - 1e-12);
        assert_eq!(p.reduced_dim(), 5);
    }

    #[test]
    fn zero_eta_injective_c() {
        let c = DMatrix::from_row_slice(3, 2, &[2.0, 0.0, 0.0, 0.5, 0.0, 0.0]);
        let p = DegenerateProblem::build(DMatrix::zeros(2, 2), c.clone(), TOL).unwrap();
        assert!((p.c1() - 0.25).abs() < 1e-12);
        let r = crate::subspaces::range(&c.transpose(), TOL).unwrap();
        assert!(distance(p.h0(), &r).unwrap() < 1e-12);
    }

    #[test]
    fn fully_degenerate_rejected() {
        assert!(DegenerateProblem::build(DMatrix::<f64>::zeros(2, 2), DMatrix::zeros(1, 2), TOL).is_err());
    }

    #[test]
    fn scalar_step_response() {
        let lambda = 2.0;
        let p = scalar_heat(lambda);
        let g = WeightedTimeGrid::new(4.0, 4000, 1.0).unwrap();
        let f = TimeSignal::separable(g, &DVector::from_element(1, 1.0), |_| 1.0).unwrap();
        let u = solve_reduced(&p, &f).unwrap();
        // H0 basis is ±1; compare the lifted value
        let x = p.lift(&u).unwrap();
        let err = (0..g.nodes())
            .map(|n| (x.at(n)[0] - (1.0 - (-lambda * g.time(n)).exp()) / lambda).abs())
            .fold(0.0, f64::max);
        assert!(err < 2.0 * g.dt(), "{err}");
    }

    #[test]
    fn zero_source_and_admission() {
        let c = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
        let eta = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0, 0.0]));
        let p = DegenerateProblem::build(eta, c, TOL).unwrap();
        assert_eq!(p.reduced_dim(), 2);
        let g = WeightedTimeGrid::new(1.0, 10, 1.0).unwrap();
        assert!(solve_reduced(&p, &TimeSignal::zeros(g, 3)).unwrap().is_zero());
        let bad = TimeSignal::separable(g, &DVector::from_vec(vec![0.0, 0.0, 1.0]), |_| 1.0).unwrap();
        assert!(matches!(solve_reduced(&p, &bad), Err(Error::Argument(_))));
        let pair = recover_pair(&p, &TimeSignal::zeros(g, 2), &TimeSignal::zeros(g, 3)).unwrap();
        assert!(pair.v.is_zero());
        assert_eq!((pair.flux_residual, pair.balance_residual), (0.0, 0.0));
    }

    /// Full block system on the space-time grid, solved in one dense shot.
    #[test]
    fn matches_spacetime_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let b = random_matrix::<f64, _>(&mut rng, 4, 2);
        let eta = &b * b.transpose();
        let c = random_matrix::<f64, _>(&mut rng, 3, 4);
        let p = DegenerateProblem::build(eta.clone(), c.clone(), TOL).unwrap();
        assert_eq!(p.reduced_dim(), 4);
        let g = WeightedTimeGrid::new(1.0, 8, 1.0).unwrap();
        let f = TimeSignal::from_values(g, random_matrix(&mut rng, 4, 9)).unwrap();
        let u = p.lift(&solve_reduced(&p, &f).unwrap()).unwrap();
        let (d, nn) = (4, 9);
        let mut big = DMatrix::zeros(d * nn, d * nn);
        let step = &eta / g.dt() + c.transpose() * &c;
        for n in 0..nn {
            big.view_mut((n * d, n * d), (d, d)).copy_from(&step);
            if n > 0 {
                big.view_mut((n * d, (n - 1) * d), (d, d)).copy_from(&(-&eta / g.dt()));
            }
        }
        let rhs = DVector::from_column_slice(f.values().as_slice());
        let oracle = big.lu().solve(&rhs).unwrap();
        let got = DVector::from_column_slice(u.values().as_slice());
        assert!((got - &oracle).amax() <= 1e-9 * oracle.amax());
    }

    #[test]
    fn recover_pair_residuals() {
        let p = scalar_heat(3.0);
        let g = WeightedTimeGrid::new(2.0, 200, 1.0).unwrap();
        let f = TimeSignal::separable(g, &DVector::from_element(1, 1.0), pulse).unwrap();
        let u = solve_reduced(&p, &f).unwrap();
        let pair = recover_pair(&p, &u, &f).unwrap();
        assert!(pair.flux_residual <= 1e-10 && pair.balance_residual <= 1e-10, "{pair:?}");
    }

    #[test]
    fn energy_identity_and_window() {
        let p = scalar_heat(1.0);
        let g = WeightedTimeGrid::new(3.0, 300, 1.0).unwrap();
        let f = TimeSignal::separable(g, &DVector::from_element(1, 1.0), pulse).unwrap();
        let fc = p.to_coords(&f, 1e-12).unwrap();
        let u = solve_reduced(&p, &f).unwrap();
        assert!(energy_step_identity_defect(&p, &u, &fc).unwrap() <= 1e-12);
        let e = energy_balance(&p, &u, &fc, 1.0, 3.0).unwrap();
        assert!(e.dissipation_defect >= 0.0);
        assert!((e.lhs + e.dissipation_defect - e.rhs).abs() <= 1e-12 * e.rhs);
        assert!(matches!(energy_balance(&p, &u, &fc, 0.5, 3.0), Err(Error::Precondition(_))));
        assert!(energy_balance(&p, &u, &fc, 1.005, 3.0).is_err());
        let z = TimeSignal::zeros(g, 1);
        let e0 = energy_balance(&p, &z, &z, 0.0, 3.0).unwrap();
        assert_eq!((e0.lhs, e0.rhs, e0.dissipation_defect), (0.0, 0.0, 0.0));
    }

    #[test]
    fn window_defect_first_order() {
        let p = scalar_heat(1.0);
        let defects: Vec<f64> = (4..=8)
            .map(|k| {
                let g = WeightedTimeGrid::new(3.0, 3 << k, 1.0).unwrap();
                let f = TimeSignal::separable(g, &DVector::from_element(1, 1.0), pulse).unwrap();
                let u = solve_reduced(&p, &f).unwrap();
                let fc = p.to_coords(&f, 1e-12).unwrap();
                let e = energy_balance(&p, &u, &fc, 1.0, 3.0).unwrap();
                e.rhs - e.lhs
            })
            .collect();
        for w in defects.windows(2) {
            assert!((w[0] / w[1]).log2() >= 0.9, "{defects:?}");
        }
    }

    #[test]
    fn regularity_scalar_and_zero() {
        let p = scalar_heat(1.0);
        let g = WeightedTimeGrid::new(3.0, 300, 1.0).unwrap();
        let f = TimeSignal::separable(g, &DVector::from_element(1, 1.0), pulse).unwrap();
        let u = solve_reduced(&p, &f).unwrap();
        let fc = p.to_coords(&f, 1e-12).unwrap();
        assert!(regularity_bound_check(&p, &u, &fc).unwrap().pass);
        let z = TimeSignal::zeros(g, 1);
        let r = regularity_bound_check(&p, &z, &z).unwrap();
        assert!(r.pass && r.lhs == 0.0);
    }

    #[test]
    fn spacetime_equivalence_scalar_and_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let g = WeightedTimeGrid::new(2.0, 100, 1.0).unwrap();
        let rep = check_spacetime_equivalence(&scalar_heat(0.5), g, 100, &mut rng).unwrap();
        assert!(rep.pass, "{rep:?}");
        let b = random_matrix::<f64, _>(&mut rng, 5, 2);
        let p = DegenerateProblem::build(&b * b.transpose(), random_matrix(&mut rng, 2, 5), TOL).unwrap();
        for rho in [0.5, 1.0, 3.0] {
            let g = WeightedTimeGrid::new(2.0, 200, rho).unwrap();
            let rep = check_spacetime_equivalence(&p, g, 100, &mut rng).unwrap();
            assert!(rep.pass, "rho {rho}: {rep:?}");
        }
    }

    #[test]
    fn bidomain_structure() {
        for shape in [vec![8usize], vec![4, 3]] {
            let bd = Bidomain::<f64>::new(&shape, 0.7, 2.0).unwrap();
            let p = &bd.problem;
            assert_eq!(p.decomposition().dims()[2], 0);
            assert!(p.decomposition().is_orthogonal(1e-10));
            let ns = bd.null_space(TOL).unwrap();
            assert!(distance(&ns, &bd.expected_null_space()).unwrap() < 1e-10);
            assert!(p.c1() >= bd.poincare_c2.min(1.0) * (1.0 - 1e-10));
            // H0 = {(W1, W2) : sum W1 = sum W2}
            let n = bd.cells;
            let functional = DVector::from_fn(2 * n, |i, _| if i < n { 1.0 } else { -1.0 });
            assert!((functional.transpose() * p.h0().basis()).amax() < 1e-12);
            assert_eq!(p.reduced_dim(), 2 * n - 1);
            assert!(p.eta_preserves_range_ct(1e-10));
        }
        assert!(Bidomain::<f64>::new(&[1], 1.0, 1.0).is_err());
        assert!(Bidomain::<f64>::new(&[4], -1.0, 1.0).is_err());
    }

    #[test]
    fn bidomain_regularity_sweep() {
        let bd = Bidomain::<f64>::new(&[6, 6], 1.0, 0.3).unwrap();
        let p = &bd.problem;
        let g = WeightedTimeGrid::new(1.0, 50, 1.0).unwrap();
        let solver = ReducedSolver::new(p, g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..50 {
            let f = TimeSignal::from_values(g, random_matrix(&mut rng, p.reduced_dim(), g.nodes())).unwrap();
            let u = solver.solve_coords(&f).unwrap();
            let r = regularity_bound_check(p, &u, &f).unwrap();
            assert!(r.pass, "{r:?}");
        }
        assert!(p.reduction_consistency(&mut rng, 20) < 1e-12);
    }
}
