//! Degenerate eddy-current problem on the staggered complex.
//!
//! Unknowns live on interior edges (E) and faces (H). The conductivity acts on
//! conducting edges only, `σ = ι σ̃ ιᵀ`, and `C = R⁻¹·curl0` with `μ = R Rᵀ`,
//! so that `CᵀC = curl0ᵀ μ⁻¹ curl0` without a matrix square root.
//!
//! The reduced unknown is `u` with `(d0 σ + curl0ᵀμ⁻¹curl0) u = f` and
//! `E = d0 u`, `H = μ⁻¹(d0⁻¹K − curl0 u)`.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::degenerate_parabolic::{DegenerateProblem, ReducedSolver, H0_ADMISSION_TOL};
use crate::discrete_complex::{build_diamond_grad, check_kernel_localization, restricted_kernel, ComplexOperators, DiamondGrad, LocalizationReport, StaggeredMesh};
use crate::error::{dim_check, Error, Result};
use crate::linalg::{lambda_min_sym, random_vector, sigma_min, singular_values, DenseSolver};
use crate::scalar::Real;
use crate::subspaces::{distance, intersect, Subspace, DEFAULT_RANK_TOL};
use crate::weighted_time::{d0, d0_inverse, weighted_norm, TimeSignal, WeightedTimeGrid};

/// Relative defect allowed when admitting `J` as `H0`-valued.
pub const J_ADMISSION_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct EddyProblem<T: Real> {
    mesh: StaggeredMesh,
    ops: ComplexOperators<T>,
    sigma_tilde: DMatrix<T>,
    mu: DMatrix<T>,
    sigma: DMatrix<T>,
    curl0: DMatrix<T>,
    mu_inv_curl: DMatrix<T>,
    problem: DegenerateProblem<T>,
    localization: LocalizationReport,
}

fn check_spd<T: Real>(name: &str, a: &DMatrix<T>) -> Result<T> {
    if !a.is_square() {
        return Err(Error::Dimension(format!("{name} must be square")));
    }
    let asym = (a - a.transpose()).amax();
    if asym > T::lit(1e-12) * a.amax().max(T::one()) {
        return Err(Error::Model(format!("{name} is not symmetric (defect {asym:e})")));
    }
    let lmin = lambda_min_sym(a);
    if a.nrows() > 0 && !(lmin > T::zero()) {
        return Err(Error::NotPositive(format!("{name} is not positive definite: lambda_min = {lmin:e}")));
    }
    Ok(lmin)
}

impl<T: Real> EddyProblem<T> {
    /// `sigma_tilde` acts on the conducting edges in increasing order, `mu` on faces.
    pub fn assemble(mesh: StaggeredMesh, sigma_tilde: DMatrix<T>, mu: DMatrix<T>) -> Result<Self> {
        let ops = ComplexOperators::<T>::new(&mesh);
        let cond = mesh.conducting_edges().to_vec();
        dim_check("sigma_tilde size vs conducting edges", cond.len(), sigma_tilde.nrows())?;
        dim_check("mu size vs faces", mesh.num_faces(), mu.nrows())?;
        check_spd("sigma_tilde", &sigma_tilde)?;
        check_spd("mu", &mu)?;
        let localization = check_kernel_localization(&mesh, &ops)?;
        if !localization.pass {
            return Err(Error::Hypothesis(format!(
                "curl kernels do not localize to the conductor and its exterior on this mesh/mask: {localization:?}"
            )));
        }
        let ne = mesh.num_interior_edges();
        let mut sigma = DMatrix::zeros(ne, ne);
        for (a, &i) in cond.iter().enumerate() {
            for (b, &j) in cond.iter().enumerate() {
                sigma[(i, j)] = sigma_tilde[(a, b)];
            }
        }
        let curl0 = ops.curl0_dense();
        let chol = Cholesky::new(mu.clone()).ok_or_else(|| Error::NotPositive("mu has no Cholesky factor".into()))?;
        let c = chol.l().solve_lower_triangular(&curl0).ok_or_else(|| Error::Internal("Cholesky factor of mu is singular".into()))?;
        let mu_inv_curl = chol.solve(&curl0);
        let problem = DegenerateProblem::build(sigma.clone(), c, T::lit(DEFAULT_RANK_TOL))?;
        Ok(Self { mesh, ops, sigma_tilde, mu, sigma, curl0, mu_inv_curl, problem, localization })
    }

    /// Scalar materials `σ̃ = s·I`, `μ = m·I`.
    pub fn with_scalar_materials(mesh: StaggeredMesh, sigma: T, mu: T) -> Result<Self> {
        let mc = mesh.conducting_edges().len();
        let nf = mesh.num_faces();
        Self::assemble(mesh, DMatrix::identity(mc, mc) * sigma, DMatrix::identity(nf, nf) * mu)
    }

    pub fn mesh(&self) -> &StaggeredMesh {
        &self.mesh
    }

    pub fn ops(&self) -> &ComplexOperators<T> {
        &self.ops
    }

    pub fn sigma(&self) -> &DMatrix<T> {
        &self.sigma
    }

    pub fn sigma_tilde(&self) -> &DMatrix<T> {
        &self.sigma_tilde
    }

    pub fn mu(&self) -> &DMatrix<T> {
        &self.mu
    }

    pub fn curl0(&self) -> &DMatrix<T> {
        &self.curl0
    }

    /// `μ⁻¹·curl0`.
    pub fn mu_inv_curl(&self) -> &DMatrix<T> {
        &self.mu_inv_curl
    }

    pub fn problem(&self) -> &DegenerateProblem<T> {
        &self.problem
    }

    pub fn localization(&self) -> &LocalizationReport {
        &self.localization
    }

    pub fn h0(&self) -> &Subspace<T> {
        self.problem.h0()
    }

    pub fn h1(&self) -> &Subspace<T> {
        &self.problem.decomposition().parts[1]
    }

    pub fn h2(&self) -> &Subspace<T> {
        &self.problem.decomposition().parts[2]
    }

    pub fn range_curl_t(&self) -> &Subspace<T> {
        &self.problem.decomposition().parts[0]
    }

    pub fn mu_is_identity(&self) -> bool {
        self.mu == DMatrix::identity(self.mu.nrows(), self.mu.ncols())
    }

    /// `χ_c x`: zero outside conducting edges.
    pub fn chi_c(&self, x: &DVector<T>) -> DVector<T> {
        let mut out = DVector::zeros(x.len());
        for &e in self.mesh.conducting_edges() {
            out[e] = x[e];
        }
        out
    }

    /// Compares the decomposition against its geometric descriptions.
    pub fn decomposition_identities(&self) -> Result<DecompositionIdentities> {
        let tol = T::lit(DEFAULT_RANK_TOL);
        let ne = self.mesh.num_interior_edges();
        let cond = self.mesh.conducting_edges().to_vec();
        let outside = self.mesh.nonconducting_edges();
        let h0_perp = crate::subspaces::complement(self.h0())?;
        let h0_perp_defect = distance(&h0_perp, &restricted_kernel(&self.curl0, &outside, tol)?)?.to_f64_lossy();
        let h1_defect = distance(self.h1(), &restricted_kernel(&self.curl0, &cond, tol)?)?.to_f64_lossy();
        let conductor = Subspace::coordinates(ne, &cond);
        let shared = intersect(&conductor, self.h0())?;
        let conductor_in_h0_defect = distance(&shared, &conductor)?.to_f64_lossy();
        let h2_curl_defect = if self.h2().dim() == 0 {
            0.0
        } else {
            (&self.curl0 * self.h2().basis()).amax().to_f64_lossy() / self.curl0.amax().to_f64_lossy()
        };
        let g = build_diamond_grad(&self.mesh, &self.ops)?;
        let diamond_defect = distance(&h0_perp, &Subspace::span(&g.g, tol)?)?.to_f64_lossy();
        let pass = [h0_perp_defect, h1_defect, conductor_in_h0_defect, h2_curl_defect, diamond_defect]
            .iter()
            .all(|d| *d <= 1e-10);
        Ok(DecompositionIdentities {
            h0_perp_defect,
            h1_defect,
            conductor_in_h0_defect,
            h2_curl_defect,
            diamond_defect,
            dims: self.problem.decomposition().dims(),
            pass,
        })
    }

    /// An edge field in `H0` realizing a spatial profile.
    pub fn spatial_field(&self, profile: &SpatialProfile) -> Result<DVector<T>> {
        let ne = self.mesh.num_interior_edges();
        let x = match *profile {
            SpatialProfile::Zero => DVector::zeros(ne),
            SpatialProfile::RandomInH0 { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let c: DVector<T> = random_vector(&mut rng, self.h0().dim());
                self.h0().lift(&c)?
            }
            SpatialProfile::CurlRange { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let g: DVector<T> = random_vector(&mut rng, self.mesh.num_faces());
                self.curl0.tr_mul(&g) * self.ops.h
            }
            SpatialProfile::Monomial { powers, direction } => {
                if direction > 2 {
                    return Err(Error::Argument(format!("direction must be 0, 1 or 2, got {direction}")));
                }
                let raw = DVector::from_fn(ne, |e, _| {
                    if self.mesh.interior_edge(e).dir != direction {
                        return T::zero();
                    }
                    let p = self.mesh.edge_midpoint(e);
                    T::lit((0..3).map(|a| p[a].powi(powers[a] as i32)).product())
                });
                crate::subspaces::project(self.h0(), &raw)?
            }
        };
        Ok(x)
    }
}

/// Spatial part of a source term on edges.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpatialProfile {
    /// Random coordinates in an orthonormal basis of `H0`.
    RandomInH0 { seed: u64 },
    /// `curl0ᵀ g` for random face values `g`.
    CurlRange { seed: u64 },
    /// `x^a y^b z^c` on edges of one direction, projected onto `H0`.
    Monomial { powers: [u32; 3], direction: usize },
    Zero,
}

/// Principal-angle defects of the decomposition against geometric descriptions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecompositionIdentities {
    /// `H0^⊥` vs curl-free fields supported off the conductor.
    pub h0_perp_defect: f64,
    /// `H1` vs curl-free fields supported on the conductor.
    pub h1_defect: f64,
    /// All conducting-edge fields lie in `H0`.
    pub conductor_in_h0_defect: f64,
    /// `H2 ⊆ N(curl0)`, relative.
    pub h2_curl_defect: f64,
    /// `H0^⊥` vs the range of the multiplier gradient.
    pub diamond_defect: f64,
    pub dims: Vec<usize>,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EddyConstants {
    /// `|U| ≤ k0 |curl0 U|` on `R(curl0ᵀ)`.
    pub k0: f64,
    /// `|U| ≤ k1 |χ_c U|` on `H2`; zero when `H2 = {0}`.
    pub k1: f64,
    pub c_star: f64,
    pub sigma_tilde_min: f64,
    /// `c_star·min{1, λ_min(σ̃)}`.
    pub c0_formula: f64,
    /// `λ_min(σ + curl0ᵀcurl0)` on `H0`.
    pub c0_direct: f64,
    pub c1: f64,
    pub h2_dim: usize,
    pub pass: bool,
}

pub fn c_star_formula(k0: f64, k1: f64) -> f64 {
    let m = 1f64.max(k1 * k1);
    1.0 / [2.0, 2.0 * k1 * k1, k0 * k0 * (1.0 + 2.0 * m)].into_iter().fold(f64::MIN, f64::max)
}

/// Constants of the coercivity chase, always for the unweighted curl (`μ = I`).
pub fn constants<T: Real>(p: &EddyProblem<T>) -> Result<EddyConstants> {
    let sv = singular_values(&p.curl0);
    let smax = sv.first().copied().unwrap_or_else(T::zero);
    let s_min_pos = sv.iter().copied().filter(|s| *s > T::lit(DEFAULT_RANK_TOL) * smax).fold(smax, |a, b| a.min(b));
    let k0 = (T::one() / s_min_pos).to_f64_lossy();
    let h2 = p.h2();
    let k1 = if h2.dim() == 0 {
        0.0
    } else {
        let cond = p.mesh.conducting_edges();
        let z = h2.basis().select_rows(cond);
        let s = if z.nrows() < z.ncols() { T::zero() } else { sigma_min(&z) };
        if !(s > T::lit(DEFAULT_RANK_TOL)) {
            return Err(Error::Hypothesis(format!(
                "restriction to the conductor is not injective on H2 (sigma_min = {s:e})"
            )));
        }
        (T::one() / s).to_f64_lossy()
    };
    let c_star = c_star_formula(k0, k1);
    let sigma_tilde_min = if p.sigma_tilde.nrows() == 0 { 1.0 } else { lambda_min_sym(&p.sigma_tilde).to_f64_lossy() };
    let c0_formula = c_star.min(1.0) * sigma_tilde_min.min(1.0);
    let iota = p.h0().basis();
    let form = iota.transpose() * (&p.sigma + p.curl0.transpose() * &p.curl0) * iota;
    let c0_direct = lambda_min_sym(&form).to_f64_lossy();
    Ok(EddyConstants {
        k0,
        k1,
        c_star,
        sigma_tilde_min,
        c0_formula,
        c0_direct,
        c1: p.problem.c1().to_f64_lossy(),
        h2_dim: h2.dim(),
        pass: c0_direct >= c0_formula * (1.0 - 1e-10),
    })
}

/// Sampled checks of the estimates behind the constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConstantSampling {
    pub samples: usize,
    /// `max(|U| − k0|curl0 U|)/|U|` over `U ∈ R(curl0ᵀ)`.
    pub k0_violation: f64,
    /// `max(|U| − k1|χ_c U|)/|U|` over `U ∈ H2`.
    pub k1_violation: f64,
    /// `max |(|χ(U1+U2)|² − |U1|² − |χU2|²)|` for unit-scale `U1 ∈ H1`, `U2 ∈ H2`.
    pub norm_identity_defect: f64,
    /// `max(c0|U|² − <σU,U> − |curl0 U|²)/|U|²` over `U ∈ H0`.
    pub coercivity_violation: f64,
    pub pass: bool,
}

pub fn sample_constants<T: Real, R: Rng + ?Sized>(p: &EddyProblem<T>, k: &EddyConstants, rng: &mut R, samples: usize) -> Result<ConstantSampling> {
    let sample_in = |s: &Subspace<T>, rng: &mut R| -> Result<DVector<T>> {
        let c: DVector<T> = random_vector(rng, s.dim());
        s.lift(&c)
    };
    let (mut v0, mut v1, mut vid, mut vc) = (0f64, 0f64, 0f64, 0f64);
    for _ in 0..samples {
        let u = sample_in(p.range_curl_t(), rng)?;
        if u.norm() > T::zero() {
            let d = u.norm().to_f64_lossy() - k.k0 * (&p.curl0 * &u).norm().to_f64_lossy();
            v0 = v0.max(d / u.norm().to_f64_lossy());
        }
        let u2 = sample_in(p.h2(), rng)?;
        if u2.norm() > T::zero() {
            let d = u2.norm().to_f64_lossy() - k.k1 * p.chi_c(&u2).norm().to_f64_lossy();
            v1 = v1.max(d / u2.norm().to_f64_lossy());
        }
        let u1 = sample_in(p.h1(), rng)?;
        let lhs = p.chi_c(&(&u1 + &u2)).norm_squared();
        let rhs = u1.norm_squared() + p.chi_c(&u2).norm_squared();
        vid = vid.max((lhs - rhs).abs().to_f64_lossy());
        let u = sample_in(p.h0(), rng)?;
        let energy = u.dot(&(&p.sigma * &u)) + (&p.curl0 * &u).norm_squared();
        let n2 = u.norm_squared().to_f64_lossy();
        if n2 > 0.0 {
            vc = vc.max((k.c0_formula * n2 - energy.to_f64_lossy()) / n2);
        }
    }
    let tol = 1e-10;
    Ok(ConstantSampling {
        samples,
        k0_violation: v0,
        k1_violation: v1,
        norm_identity_defect: vid,
        coercivity_violation: vc,
        pass: v0 <= tol && v1 <= tol && vid <= tol && vc <= tol,
    })
}

#[derive(Clone, Debug)]
pub struct EddySolution<T: Real> {
    /// Reduced unknown in `H0` coordinates.
    pub u: TimeSignal<T>,
    pub e: TimeSignal<T>,
    pub h: TimeSignal<T>,
    /// Right-hand side `f = −J + curl0ᵀμ⁻¹d0⁻¹K` on edges.
    pub f: TimeSignal<T>,
    /// `|σE − curl0ᵀH + J|` relative.
    pub ampere_residual: T,
    /// `|d0(μH) + curl0 E − K|` relative.
    pub faraday_residual: T,
}

fn rel<T: Real>(num: T, scale: T) -> T {
    if scale > T::zero() {
        num / scale
    } else {
        num
    }
}

/// Reduced solver bound to one grid, reusable across sources.
#[derive(Clone, Debug)]
pub struct EddySolver<'a, T: Real> {
    p: &'a EddyProblem<T>,
    reduced: ReducedSolver<T>,
}

impl<'a, T: Real> EddySolver<'a, T> {
    pub fn new(p: &'a EddyProblem<T>, grid: WeightedTimeGrid<T>) -> Result<Self> {
        Ok(Self { p, reduced: ReducedSolver::new(&p.problem, grid)? })
    }

    pub fn grid(&self) -> &WeightedTimeGrid<T> {
        self.reduced.grid()
    }

    /// Solves the reduced equation for `H0`-valued `f`; returns `H0` coordinates.
    pub fn solve_f(&self, f: &TimeSignal<T>) -> Result<TimeSignal<T>> {
        let fc = self.p.problem.to_coords(f, T::lit(H0_ADMISSION_TOL))?;
        self.reduced.solve_coords(&fc)
    }

    /// `J` on interior edges, `K` on faces.
    pub fn solve(&self, j: &TimeSignal<T>, k: &TimeSignal<T>) -> Result<EddySolution<T>> {
        let p = self.p;
        dim_check("J dimension", p.mesh.num_interior_edges(), j.dim())?;
        dim_check("K dimension", p.mesh.num_faces(), k.dim())?;
        // admission of J
        let jp = p.problem.project_signal(j)?;
        let defect = j.sub(&jp)?.max_abs();
        if defect > T::lit(J_ADMISSION_TOL) * j.max_abs() {
            return Err(Error::Argument(format!(
                "J is not H0-valued: relative defect {:e}",
                defect / j.max_abs()
            )));
        }
        let ki = d0_inverse(k);
        let f = ki.map_space(&p.mu_inv_curl.transpose())?.sub(j)?;
        let fc = p.problem.h0().basis().tr_mul(f.values());
        let u = self.reduced.solve_coords(&TimeSignal::from_values(*f.grid(), fc)?)?;
        let x = p.problem.lift(&u)?;
        let e = d0(&x);
        let mu_inv_ki = {
            let chol = Cholesky::new(p.mu.clone()).ok_or_else(|| Error::NotPositive("mu has no Cholesky factor".into()))?;
            TimeSignal::from_values(*k.grid(), chol.solve(ki.values()))?
        };
        let h = mu_inv_ki.sub(&x.map_space(&p.mu_inv_curl)?)?;
        let sigma_e = e.map_space(&p.sigma)?;
        let curl_h = h.map_space(&p.curl0.transpose())?;
        let ampere = sigma_e.sub(&curl_h)?.axpy(T::one(), j)?;
        let scale1 = weighted_norm(&sigma_e, 0)?.max(weighted_norm(&curl_h, 0)?).max(weighted_norm(j, 0)?);
        let mu_h = h.map_space(&p.mu)?;
        let curl_e = e.map_space(&p.curl0)?;
        let faraday = d0(&mu_h).axpy(T::one(), &curl_e)?.sub(k)?;
        let scale2 = weighted_norm(&curl_e, 0)?.max(weighted_norm(k, 0)?).max(weighted_norm(&d0(&mu_h), 0)?);
        Ok(EddySolution {
            ampere_residual: rel(weighted_norm(&ampere, 0)?, scale1),
            faraday_residual: rel(weighted_norm(&faraday, 0)?, scale2),
            u,
            e,
            h,
            f,
        })
    }
}

pub fn solve<T: Real>(p: &EddyProblem<T>, j: &TimeSignal<T>, k: &TimeSignal<T>) -> Result<EddySolution<T>> {
    EddySolver::new(p, *j.grid())?.solve(j, k)
}

/// Per-step block system `[[σ/Δt + curl0ᵀμ⁻¹curl0, G],[Gᵀ, 0]]`.
#[derive(Clone, Debug)]
pub struct SaddleSystem<T: Real> {
    pub grad: DiamondGrad<T>,
    solver: DenseSolver<T>,
    sigma: DMatrix<T>,
    grid: WeightedTimeGrid<T>,
    /// Relative residual of the certification solve.
    pub certification_residual: T,
}

impl<T: Real> SaddleSystem<T> {
    pub fn new(p: &EddyProblem<T>, grid: WeightedTimeGrid<T>) -> Result<Self> {
        let grad = build_diamond_grad(&p.mesh, &p.ops)?;
        let ne = p.mesh.num_interior_edges();
        let m = grad.dim();
        let top = &p.sigma / grid.dt() + p.curl0.transpose() * &p.mu_inv_curl;
        let mut block = DMatrix::zeros(ne + m, ne + m);
        block.view_mut((0, 0), (ne, ne)).copy_from(&top);
        block.view_mut((0, ne), (ne, m)).copy_from(&grad.g);
        block.view_mut((ne, 0), (m, ne)).copy_from(&grad.g.transpose());
        let mut rng = ChaCha8Rng::seed_from_u64(0x5add1e);
        let b: DVector<T> = random_vector(&mut rng, ne + m);
        let solver = DenseSolver::new(block.clone())?;
        let x = solver.solve(&b)?;
        let certification_residual = (&block * &x - &b).norm() / b.norm();
        if !(certification_residual <= T::lit(1e-10)) {
            return Err(Error::Internal(format!(
                "saddle block is numerically singular (residual {certification_residual:e})"
            )));
        }
        Ok(Self { grad, solver, sigma: p.sigma.clone(), grid, certification_residual })
    }

    pub fn grid(&self) -> &WeightedTimeGrid<T> {
        &self.grid
    }

    pub fn solve(&self, f: &TimeSignal<T>) -> Result<SaddleSolution<T>> {
        let ne = self.sigma.nrows();
        let m = self.grad.dim();
        dim_check("f dimension", ne, f.dim())?;
        if f.grid() != &self.grid {
            return Err(Error::Dimension("source lives on a different time grid".into()));
        }
        let inv_dt = T::one() / self.grid.dt();
        let mut e = DMatrix::zeros(ne, f.nodes());
        let mut pm = DMatrix::zeros(m, f.nodes());
        let mut prev = DVector::zeros(ne);
        let mut rhs = DVector::zeros(ne + m);
        for n in 0..f.nodes() {
            let hist = &self.sigma * &prev * inv_dt;
            rhs.rows_mut(0, ne).copy_from(&(f.at(n) + hist));
            let x = self.solver.solve(&rhs)?;
            let en = x.rows(0, ne).clone_owned();
            e.set_column(n, &en);
            pm.set_column(n, &x.rows(ne, m));
            prev = en;
        }
        let e = TimeSignal::from_values(self.grid, e)?;
        let p_mult = TimeSignal::from_values(self.grid, pm)?;
        let constraint = e.map_space(&self.grad.g.transpose())?;
        let scale = weighted_norm(&e, 0)?;
        Ok(SaddleSolution {
            constraint_residual: rel(weighted_norm(&constraint, 0)?, scale) / self.grad.g.amax(),
            p_norm: weighted_norm(&p_mult, 0)?,
            f_norm: weighted_norm(f, 0)?,
            e,
            p_mult,
        })
    }
}

#[derive(Clone, Debug)]
pub struct SaddleSolution<T: Real> {
    pub e: TimeSignal<T>,
    pub p_mult: TimeSignal<T>,
    /// `|GᵀE|/(|G|_max |E|)`.
    pub constraint_residual: T,
    pub p_norm: T,
    pub f_norm: T,
}

pub fn saddle_solve<T: Real>(p: &EddyProblem<T>, f: &TimeSignal<T>) -> Result<SaddleSolution<T>> {
    SaddleSystem::new(p, *f.grid())?.solve(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete_complex::CellBox;
    use crate::sources::TimeProfile;

    fn center6() -> EddyProblem<f64> {
        let mesh = StaggeredMesh::new(6, &[CellBox::centered(6, 2)]).unwrap();
        EddyProblem::with_scalar_materials(mesh, 1.0, 1.0).unwrap()
    }

    #[test]
    fn empty_conductor_reduces_to_range_of_curl() {
        let mesh = StaggeredMesh::new(4, &[]).unwrap();
        let p = EddyProblem::with_scalar_materials(mesh, 1.0, 1.0).unwrap();
        let dims = p.problem().decomposition().dims();
        assert_eq!((dims[1], dims[2]), (0, 0));
        assert_eq!(dims[0], p.h0().dim());
        let k = constants(&p).unwrap();
        assert_eq!(k.k1, 0.0);
        assert!((k.c_star - 1.0 / (3.0 * k.k0 * k.k0).max(2.0)).abs() < 1e-15);
        assert!((k.c1 - 1.0 / (k.k0 * k.k0)).abs() < 1e-9 * k.c1);
        assert!(k.pass);
        assert_eq!(c_star_formula(1.0, 0.0), 1.0 / 3.0);
    }

    #[test]
    fn central_box_identities_and_constants() {
        let p = center6();
        let ids = p.decomposition_identities().unwrap();
        assert!(ids.pass, "{ids:?}");
        let k = constants(&p).unwrap();
        assert!(k.pass, "{k:?}");
        assert!(k.h2_dim > 0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = sample_constants(&p, &k, &mut rng, 100).unwrap();
        assert!(s.pass, "{s:?}");
    }

    #[test]
    fn sigma_scaling_leaves_k_unchanged() {
        let mesh = StaggeredMesh::new(5, &[CellBox::new([1, 1, 1], [3, 3, 3])]).unwrap();
        let a = constants(&EddyProblem::with_scalar_materials(mesh.clone(), 1.0, 1.0).unwrap()).unwrap();
        let b = constants(&EddyProblem::with_scalar_materials(mesh, 4.0, 1.0).unwrap()).unwrap();
        assert!((a.k0 - b.k0).abs() < 1e-10 * a.k0);
        assert!((a.k1 - b.k1).abs() < 1e-10 * a.k1.max(1.0));
        assert!(b.c0_direct > a.c0_direct);
    }

    #[test]
    fn solve_residuals_and_causality() {
        let p = center6();
        let grid = WeightedTimeGrid::new(1.0, 20, 1.0).unwrap();
        let shape = p.spatial_field(&SpatialProfile::CurlRange { seed: 3 }).unwrap();
        let ramp = TimeProfile::SmoothRamp { start: 0.5, width: 0.25 };
        let j = TimeSignal::separable(grid, &shape, |t| ramp.at(t)).unwrap();
        let kshape = DVector::from_fn(p.mesh().num_faces(), |i, _| ((i % 7) as f64) - 3.0);
        let k = TimeSignal::separable(grid, &kshape, |t| TimeProfile::Step { start: 0.5 }.at(t)).unwrap();
        let sol = solve(&p, &j, &k).unwrap();
        assert!(sol.ampere_residual <= 1e-8 && sol.faraday_residual <= 1e-8, "{} {}", sol.ampere_residual, sol.faraday_residual);
        assert_eq!(sol.e.max_abs_before(0.49), 0.0);
        assert_eq!(sol.h.max_abs_before(0.49), 0.0);
        assert!(sol.e.max_abs() > 0.0);
        let zero = solve(&p, &j.scaled(0.0), &k.scaled(0.0)).unwrap();
        assert!(zero.e.is_zero() && zero.h.is_zero());
    }

    #[test]
    fn non_h0_current_rejected() {
        let p = center6();
        let grid = WeightedTimeGrid::new(1.0, 4, 1.0).unwrap();
        let g = build_diamond_grad(p.mesh(), p.ops()).unwrap();
        let shape = g.g.column(0).clone_owned();
        let j = TimeSignal::separable(grid, &shape, |_| 1.0).unwrap();
        let k = TimeSignal::zeros(grid, p.mesh().num_faces());
        assert!(matches!(solve(&p, &j, &k), Err(Error::Argument(_))));
    }

    #[test]
    fn saddle_matches_reduced_and_absorbs_complement() {
        let p = center6();
        let grid = WeightedTimeGrid::new(1.0, 10, 1.0).unwrap();
        let shape = p.spatial_field(&SpatialProfile::RandomInH0 { seed: 11 }).unwrap();
        let f = TimeSignal::separable(grid, &shape, |t| TimeProfile::Bump { start: 0.0, width: 0.8 }.at(t)).unwrap();
        let sys = SaddleSystem::new(&p, grid).unwrap();
        let sad = sys.solve(&f).unwrap();
        let red = p.problem().lift(&EddySolver::new(&p, grid).unwrap().solve_f(&f).unwrap()).unwrap();
        let fnorm = weighted_norm(&f, 0).unwrap();
        assert!(weighted_norm(&sad.e.sub(&red).unwrap(), 0).unwrap() <= 1e-8 * fnorm);
        assert!(sad.p_norm <= 1e-8 * fnorm);
        assert!(sad.constraint_residual <= 1e-10);
        // add a gradient component
        let extra = sys.grad.g.column(3).clone_owned();
        let fp = f.axpy(1.0, &TimeSignal::separable(grid, &extra, |_| 1.0).unwrap()).unwrap();
        let sad2 = sys.solve(&fp).unwrap();
        assert!(weighted_norm(&sad2.e.sub(&sad.e).unwrap(), 0).unwrap() <= 1e-8 * fnorm);
        assert!(sad2.p_norm > 0.1);
        let zero = sys.solve(&f.scaled(0.0)).unwrap();
        assert!(zero.e.is_zero() && zero.p_mult.is_zero());
    }
}
