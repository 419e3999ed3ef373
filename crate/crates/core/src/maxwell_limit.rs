//! Full Maxwell system with displacement current and the limit `ε → 0`.
//!
//! Backward Euler on
//! `d0(εE) + σE − curl0ᵀH = −J`, `d0(μH) + curl0 E = K`
//! with zero history. The eddy-current solution is the `ε = 0` member of the
//! same family, so the difference of the two discrete solutions satisfies
//! `E_ε − E_0 = −ε·S_ε(d0 E_0)` exactly.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::eddy_current::{EddyProblem, EddySolver};
use crate::error::{dim_check, Error, Result};
use crate::linalg::DenseSolver;
use crate::scalar::Real;
use crate::weighted_time::{d0, d0_inverse, weighted_norm, TimeSignal, WeightedTimeGrid};

#[derive(Clone, Debug)]
pub struct MaxwellProblem<'a, T: Real> {
    eddy: &'a EddyProblem<T>,
    epsilon: T,
    grid: WeightedTimeGrid<T>,
    solver: DenseSolver<T>,
}

#[derive(Clone, Debug)]
pub struct MaxwellSolution<T: Real> {
    pub e: TimeSignal<T>,
    pub h: TimeSignal<T>,
    pub ampere_residual: T,
    pub faraday_residual: T,
}

fn rel<T: Real>(num: T, scale: T) -> T {
    if scale > T::zero() {
        num / scale
    } else {
        num
    }
}

impl<'a, T: Real> MaxwellProblem<'a, T> {
    pub fn new(eddy: &'a EddyProblem<T>, epsilon: T, grid: WeightedTimeGrid<T>) -> Result<Self> {
        if !(epsilon > T::zero()) {
            return Err(Error::Argument(format!(
                "epsilon must be positive, got {epsilon:e}; use the eddy-current solver for epsilon = 0"
            )));
        }
        let ne = eddy.sigma().nrows();
        let nf = eddy.mu().nrows();
        let inv_dt = T::one() / grid.dt();
        let mut block = DMatrix::zeros(ne + nf, ne + nf);
        let mut tl = eddy.sigma().clone();
        for i in 0..ne {
            tl[(i, i)] += epsilon * inv_dt;
        }
        block.view_mut((0, 0), (ne, ne)).copy_from(&tl);
        block.view_mut((0, ne), (ne, nf)).copy_from(&(-eddy.curl0().transpose()));
        block.view_mut((ne, 0), (nf, ne)).copy_from(eddy.curl0());
        block.view_mut((ne, ne), (nf, nf)).copy_from(&(eddy.mu() * inv_dt));
        Ok(Self { eddy, epsilon, grid, solver: DenseSolver::new(block)? })
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn grid(&self) -> &WeightedTimeGrid<T> {
        &self.grid
    }

    pub fn solve(&self, j: &TimeSignal<T>, k: &TimeSignal<T>) -> Result<MaxwellSolution<T>> {
        let p = self.eddy;
        let (ne, nf) = (p.sigma().nrows(), p.mu().nrows());
        dim_check("J dimension", ne, j.dim())?;
        dim_check("K dimension", nf, k.dim())?;
        if j.grid() != &self.grid || k.grid() != &self.grid {
            return Err(Error::Dimension("sources live on a different time grid".into()));
        }
        let inv_dt = T::one() / self.grid.dt();
        let nodes = self.grid.nodes();
        let mut e = DMatrix::zeros(ne, nodes);
        let mut h = DMatrix::zeros(nf, nodes);
        let mut e_prev = DVector::zeros(ne);
        let mut h_prev = DVector::zeros(nf);
        let mut rhs = DVector::zeros(ne + nf);
        for n in 0..nodes {
            rhs.rows_mut(0, ne).copy_from(&(&e_prev * (self.epsilon * inv_dt) - j.at(n)));
            rhs.rows_mut(ne, nf).copy_from(&(p.mu() * &h_prev * inv_dt + k.at(n)));
            let x = self.solver.solve(&rhs)?;
            e_prev = x.rows(0, ne).clone_owned();
            h_prev = x.rows(ne, nf).clone_owned();
            e.set_column(n, &e_prev);
            h.set_column(n, &h_prev);
        }
        let e = TimeSignal::from_values(self.grid, e)?;
        let h = TimeSignal::from_values(self.grid, h)?;
        let de = d0(&e).scaled(self.epsilon);
        let se = e.map_space(p.sigma())?;
        let ch = h.map_space(&p.curl0().transpose())?;
        let ampere = de.axpy(T::one(), &se)?.sub(&ch)?.axpy(T::one(), j)?;
        let s1 = [weighted_norm(&de, 0)?, weighted_norm(&se, 0)?, weighted_norm(&ch, 0)?, weighted_norm(j, 0)?]
            .into_iter()
            .fold(T::zero(), |a, b| a.max(b));
        let dmh = d0(&h.map_space(p.mu())?);
        let ce = e.map_space(p.curl0())?;
        let faraday = dmh.axpy(T::one(), &ce)?.sub(k)?;
        let s2 = [weighted_norm(&dmh, 0)?, weighted_norm(&ce, 0)?, weighted_norm(k, 0)?]
            .into_iter()
            .fold(T::zero(), |a, b| a.max(b));
        Ok(MaxwellSolution {
            ampere_residual: rel(weighted_norm(&ampere, 0)?, s1),
            faraday_residual: rel(weighted_norm(&faraday, 0)?, s2),
            e,
            h,
        })
    }

    /// `½(ε|E_n|² + <H_n|μH_n>)` at every node.
    pub fn energy(&self, sol: &MaxwellSolution<T>) -> Vec<T> {
        let mh = self.eddy.mu() * sol.h.values();
        (0..sol.e.nodes())
            .map(|n| {
                T::lit(0.5) * (self.epsilon * sol.e.at(n).norm_squared() + sol.h.at(n).dot(&mh.column(n)))
            })
            .collect()
    }
}

/// `d0^k f` for any integer `k`.
pub fn apply_shift<T: Real>(f: &TimeSignal<T>, k: i32) -> TimeSignal<T> {
    let mut out = f.clone();
    for _ in 0..k.unsigned_abs() {
        out = if k > 0 { d0(&out) } else { d0_inverse(&out) };
    }
    out
}

/// `|d0^k f|_{ρ,0,0}` for any integer `k`.
pub fn shifted_norm<T: Real>(f: &TimeSignal<T>, k: i32) -> Result<T> {
    weighted_norm(&apply_shift(f, k), 0)
}

/// Norm indices accepted by [`limit_study`].
pub const LIMIT_STUDY_K: [i32; 3] = [-1, 0, 1];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitStudyReport {
    pub epsilon_values: Vec<f64>,
    pub errors: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Relative size of `E_ε − E_0 + ε·S_ε(d0 E_0)`.
    pub telescoping_defects: Vec<f64>,
    /// Slope of `log e` against `log ε`; `None` with fewer than two positive errors.
    pub fitted_order: Option<f64>,
    pub max_ratio: f64,
    pub median_ratio: f64,
    /// `B = (1 + 10Δtρ)² / (min{ρ,ρ²}·min{ρ,1}·c1²)`.
    pub bound_constant: f64,
    /// `|d0 f|_{ρ,k+1,0}`.
    pub source_norm: f64,
    pub dt: f64,
    pub steps: usize,
    pub n: usize,
    pub rho: f64,
    pub k: i32,
    pub order_pass: bool,
    pub ratio_pass: bool,
    pub bound_pass: bool,
    pub telescoping_pass: bool,
}

impl LimitStudyReport {
    pub fn pass(&self) -> bool {
        self.order_pass && self.ratio_pass && self.bound_pass && self.telescoping_pass
    }
}

/// Least-squares slope of `log y` on `log x` over points with `y > 0`.
pub fn fit_order(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(_, y)| **y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / m, a.1 + p.1 / m));
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    if s.is_empty() {
        return f64::NAN;
    }
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

/// Compares `S_ε f` against `S_0 f` for each `ε` with `J = −f`, `K = 0`.
///
/// `ε` points run concurrently on a pool of `threads` workers; results are
/// assembled in list order.
pub fn limit_study<T: Real + Send + Sync>(
    p: &EddyProblem<T>,
    f: &TimeSignal<T>,
    epsilons: &[f64],
    k: i32,
    threads: usize,
) -> Result<LimitStudyReport> {
    if !LIMIT_STUDY_K.contains(&k) {
        return Err(Error::Argument(format!("norm index k = {k} is outside {LIMIT_STUDY_K:?}")));
    }
    if epsilons.is_empty() || epsilons.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Argument("epsilon list must be nonempty and positive".into()));
    }
    if epsilons.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Argument("epsilon list must be strictly decreasing".into()));
    }
    let grid = *f.grid();
    let eddy = EddySolver::new(p, grid)?;
    let u0 = eddy.solve_f(f)?;
    let e0 = d0(&p.problem().lift(&u0)?);
    let j = f.scaled(-T::one());
    let kz = TimeSignal::zeros(grid, p.mu().nrows());
    let j_tel = d0(&e0).scaled(-T::one());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    let per_eps: Vec<Result<(f64, f64)>> = pool.install(|| {
        epsilons
            .par_iter()
            .map(|&eps| {
                let m = MaxwellProblem::new(p, T::lit(eps), grid)?;
                let diff = m.solve(&j, &kz)?.e.sub(&e0)?;
                let err = shifted_norm(&diff, k - 2)?;
                let tel = m.solve(&j_tel, &kz)?.e;
                let defect = shifted_norm(&diff.axpy(T::lit(eps), &tel)?, k - 2)?;
                Ok((err.to_f64_lossy(), rel(defect, err).to_f64_lossy()))
            })
            .collect()
    });
    let mut errors = Vec::new();
    let mut telescoping_defects = Vec::new();
    for r in per_eps {
        let (e, d) = r?;
        errors.push(e);
        telescoping_defects.push(d);
    }
    let ratios: Vec<f64> = errors.iter().zip(epsilons).map(|(e, eps)| e / eps).collect();
    let fitted_order = fit_order(epsilons, &errors);
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let median_ratio = median(&ratios);
    let rho = grid.rho().to_f64_lossy();
    let dt = grid.dt().to_f64_lossy();
    let c1 = p.problem().c1().to_f64_lossy();
    let slack = 1.0 + 10.0 * dt * rho;
    let bound_constant = slack * slack / (rho.min(rho * rho) * rho.min(1.0) * c1 * c1);
    let source_norm = shifted_norm(&d0(f), k + 1)?.to_f64_lossy();
    let bound_pass = errors.iter().zip(epsilons).all(|(e, eps)| *e <= eps * bound_constant * source_norm);
    let all_zero = errors.iter().all(|e| *e == 0.0);
    Ok(LimitStudyReport {
        order_pass: all_zero || fitted_order.map_or(epsilons.len() == 1, |o| o >= 0.9),
        ratio_pass: all_zero || max_ratio <= 10.0 * median_ratio,
        telescoping_pass: telescoping_defects.iter().all(|d| *d <= 1e-8),
        bound_pass,
        epsilon_values: epsilons.to_vec(),
        errors,
        ratios,
        telescoping_defects,
        fitted_order,
        max_ratio,
        median_ratio,
        bound_constant,
        source_norm,
        dt,
        steps: grid.steps(),
        n: p.mesh().n(),
        rho,
        k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete_complex::{CellBox, StaggeredMesh};
    use crate::eddy_current::SpatialProfile;
    use crate::sources::TimeProfile;

    fn small() -> EddyProblem<f64> {
        let mesh = StaggeredMesh::new(4, &[CellBox::new([1, 1, 1], [3, 3, 3])]).unwrap();
        EddyProblem::with_scalar_materials(mesh, 1.0, 1.0).unwrap()
    }

    #[test]
    fn zero_sources_and_bad_epsilon() {
        let p = small();
        let grid = WeightedTimeGrid::new(1.0, 10, 1.0).unwrap();
        assert!(MaxwellProblem::new(&p, 0.0, grid).is_err());
        let m = MaxwellProblem::new(&p, 0.1, grid).unwrap();
        let j = TimeSignal::zeros(grid, p.sigma().nrows());
        let k = TimeSignal::zeros(grid, p.mu().nrows());
        let s = m.solve(&j, &k).unwrap();
        assert!(s.e.is_zero() && s.h.is_zero());
    }

    #[test]
    fn residuals_causality_and_dissipation() {
        let mesh = StaggeredMesh::new(4, &[]).unwrap();
        let p = EddyProblem::with_scalar_materials(mesh, 1.0, 1.0).unwrap();
        let grid = WeightedTimeGrid::new(2.0, 40, 1.0).unwrap();
        let m = MaxwellProblem::new(&p, 0.5, grid).unwrap();
        let j = TimeSignal::zeros(grid, p.sigma().nrows());
        let kshape = DVector::from_fn(p.mu().nrows(), |i, _| ((i * 7 % 11) as f64) - 5.0);
        let kick = TimeProfile::Bump { start: 1.0, width: 0.2 };
        let k = TimeSignal::separable(grid, &kshape, |t| kick.at(t)).unwrap();
        let s = m.solve(&j, &k).unwrap();
        assert!(s.ampere_residual <= 1e-10 && s.faraday_residual <= 1e-10);
        assert_eq!(s.e.max_abs_before(0.99), 0.0);
        assert_eq!(s.h.max_abs_before(0.99), 0.0);
        let energy = m.energy(&s);
        let after = grid.last_index_at_or_before(1.2) + 1;
        for n in after + 1..energy.len() {
            assert!(energy[n] <= energy[n - 1] * (1.0 + 1e-12));
        }
        assert!(energy[after] > 0.0);
    }

    #[test]
    fn fit_order_cases() {
        let x = [1e-1, 1e-2, 1e-3];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v * v).collect();
        assert!((fit_order(&x, &y).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(fit_order(&[0.1], &[1.0]), None);
        assert_eq!(fit_order(&x, &[0.0; 3]), None);
    }

    #[test]
    fn small_limit_study() {
        // conductivity well above the largest epsilon keeps the list asymptotic
        let mesh = StaggeredMesh::new(4, &[CellBox::new([1, 1, 1], [3, 3, 3])]).unwrap();
        let p = EddyProblem::with_scalar_materials(mesh, 10.0, 1.0).unwrap();
        let grid = WeightedTimeGrid::new(2.0, 100, 1.0).unwrap();
        let shape = p.spatial_field(&SpatialProfile::RandomInH0 { seed: 5 }).unwrap();
        let ramp = TimeProfile::SmoothRamp { start: 0.0, width: 1.0 };
        let f = TimeSignal::separable(grid, &shape, |t| ramp.at(t)).unwrap();
        let eps = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
        let r = limit_study(&p, &f, &eps, 0, 2).unwrap();
        assert!(r.pass(), "{r:?}");
        let single = limit_study(&p, &f, &[1e-2], 0, 1).unwrap();
        assert_eq!(single.fitted_order, None);
        let zero = limit_study(&p, &f.scaled(0.0), &eps, 0, 1).unwrap();
        assert!(zero.errors.iter().all(|e| *e == 0.0) && zero.fitted_order.is_none());
        assert!(limit_study(&p, &f, &[1e-3, 1e-2], 0, 1).is_err());
    }
}
