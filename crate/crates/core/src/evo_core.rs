//! Evo-systems `(d0·M0 + M1 + A) U = F` with a certified positivity constant.
//!
//! In finite dimensions the adjoint positivity condition is the same inequality
//! as the primal one, because `sym(Xᵀ) = sym(X)`; only the primal one is computed.

use nalgebra::{DMatrix, DVector};

use crate::error::{dim_check, Error, Result};
use crate::linalg::{check_symmetric_psd, lambda_min_sym, spectral_norm, DenseSolver};
use crate::scalar::Real;
use crate::weighted_time::{truncate, weighted_norm, TimeSignal, WeightedTimeGrid};

#[derive(Clone, Debug)]
pub struct EvoProblem<T: Real> {
    m0: DMatrix<T>,
    m1: DMatrix<T>,
    a: DMatrix<T>,
    rho: T,
    c0: Option<T>,
}

impl<T: Real> EvoProblem<T> {
    pub fn new(m0: DMatrix<T>, m1: DMatrix<T>, a: DMatrix<T>, rho: T) -> Result<Self> {
        let d = m0.nrows();
        for (name, m) in [("M0", &m0), ("M1", &m1), ("A", &a)] {
            dim_check(&format!("{name} rows"), d, m.nrows())?;
            dim_check(&format!("{name} columns"), d, m.ncols())?;
        }
        if !(rho > T::zero()) || !rho.is_finite() {
            return Err(Error::Argument("rho must be positive".into()));
        }
        check_symmetric_psd("M0", &m0, T::lit(1e-12))?;
        Ok(Self { m0, m1, a, rho, c0: None })
    }

    pub fn dim(&self) -> usize {
        self.m0.nrows()
    }

    pub fn m0(&self) -> &DMatrix<T> {
        &self.m0
    }

    pub fn m1(&self) -> &DMatrix<T> {
        &self.m1
    }

    pub fn a(&self) -> &DMatrix<T> {
        &self.a
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn c0(&self) -> Option<T> {
        self.c0
    }

    /// `ρ·M0 + M1 + A`.
    pub fn positivity_operator(&self) -> DMatrix<T> {
        &self.m0 * self.rho + &self.m1 + &self.a
    }

    /// Records an externally certified constant after checking it against the
    /// operator (used when a sharper structural bound is known).
    pub fn with_certified_c0(mut self, c0: T) -> Result<Self> {
        let lmin = lambda_min_sym(&self.positivity_operator());
        if !(c0 > T::zero()) || lmin < c0 * (T::one() - T::lit(1e-10)) {
            return Err(Error::NotPositive(format!("claimed c0 = {c0:e} but lambda_min = {lmin:e}")));
        }
        self.c0 = Some(c0);
        Ok(self)
    }
}

/// Result of [`certify_positivity`].
#[derive(Clone, Debug, PartialEq)]
pub struct PositivityReport<T> {
    pub c0: T,
    /// Always true in finite dimensions.
    pub adjoint_condition_equivalent: bool,
}

/// Computes `c0 = λ_min(sym(ρM0 + M1 + A))`, stores it, and fails if `c0 ≤ 0`.
pub fn certify_positivity<T: Real>(p: &mut EvoProblem<T>) -> Result<PositivityReport<T>> {
    let op = p.positivity_operator();
    let c0 = lambda_min_sym(&op);
    let scale = spectral_norm(&op).max(T::one());
    if !(c0 > T::eps() * T::lit(100.0) * scale) {
        return Err(Error::NotPositive(format!(
            "lambda_min(sym(rho M0 + M1 + A)) = {c0:e}; well-posedness hypotheses fail"
        )));
    }
    p.c0 = Some(c0);
    Ok(PositivityReport { c0, adjoint_condition_equivalent: true })
}

/// Backward-Euler stepper with the step matrix `M0/dt + M1 + A` factored once.
#[derive(Clone, Debug)]
pub struct EvoSolver<T: Real> {
    grid: WeightedTimeGrid<T>,
    m0_dt: DMatrix<T>,
    step: DenseSolver<T>,
    c0: T,
}

impl<T: Real> EvoSolver<T> {
    pub fn new(p: &EvoProblem<T>, grid: WeightedTimeGrid<T>) -> Result<Self> {
        let c0 = p
            .c0
            .ok_or_else(|| Error::Precondition("positivity not certified; call certify_positivity first".into()))?;
        if grid.dt() * p.rho > T::one() + T::lit(1e-12) {
            return Err(Error::Argument("time step exceeds 1/rho".into()));
        }
        let m0_dt = &p.m0 / grid.dt();
        let step = DenseSolver::new(&m0_dt + &p.m1 + &p.a)
            .map_err(|_| Error::Internal("certified step matrix is singular".into()))?;
        Ok(Self { grid, m0_dt, step, c0 })
    }

    pub fn grid(&self) -> &WeightedTimeGrid<T> {
        &self.grid
    }

    pub fn c0(&self) -> T {
        self.c0
    }

    pub fn dim(&self) -> usize {
        self.step.dim()
    }

    /// Solves with zero history; the output at `n` only reads `F_0..F_n`.
    pub fn solve(&self, f: &TimeSignal<T>) -> Result<TimeSignal<T>> {
        if *f.grid() != self.grid {
            return Err(Error::Dimension("source lives on a different time grid".into()));
        }
        dim_check("source dimension", self.dim(), f.dim())?;
        let d = self.dim();
        let mut values = DMatrix::zeros(d, f.nodes());
        let mut prev = DVector::zeros(d);
        for n in 0..f.nodes() {
            let rhs = f.at(n) + &self.m0_dt * &prev;
            let u = self.step.solve(&rhs)?;
            values.set_column(n, &u);
            prev = u;
        }
        TimeSignal::from_values(self.grid, values)
    }
}

/// One-shot convenience: certify (if needed), factor, solve.
pub fn solve<T: Real>(p: &mut EvoProblem<T>, f: &TimeSignal<T>) -> Result<TimeSignal<T>> {
    if p.c0.is_none() {
        certify_positivity(p)?;
    }
    EvoSolver::new(p, *f.grid())?.solve(f)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundCheck<T> {
    pub lhs: T,
    pub rhs: T,
    pub pass: bool,
}

/// `|χ_a U| ≤ (1/c0)(1 + 10·dt·ρ)|χ_a F|` for an already computed `U`.
pub fn causal_bound_from<T: Real>(c0: T, u: &TimeSignal<T>, f: &TimeSignal<T>, a: T) -> Result<BoundCheck<T>> {
    let lhs = weighted_norm(&truncate(u, a), 0)?;
    let rhs = weighted_norm(&truncate(f, a), 0)? / c0;
    let g = u.grid();
    let slack = T::one() + T::lit(10.0) * g.dt() * g.rho();
    Ok(BoundCheck { lhs, rhs, pass: lhs <= rhs * slack })
}

/// Solves and checks the causal a-priori estimate at cut point `a`.
pub fn causal_bound_check<T: Real>(solver: &EvoSolver<T>, f: &TimeSignal<T>, a: T) -> Result<BoundCheck<T>> {
    let u = solver.solve(f)?;
    causal_bound_from(solver.c0, &u, f, a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_matrix;
    use crate::weighted_time::truncate;
    use nalgebra::SymmetricEigen;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar(m0: f64, m1: f64, a: f64, rho: f64) -> EvoProblem<f64> {
        let s = |x| DMatrix::from_element(1, 1, x);
        EvoProblem::new(s(m0), s(m1), s(a), rho).unwrap()
    }

    fn random_certified(seed: u64, d: usize) -> EvoProblem<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = random_matrix::<f64, _>(&mut rng, d, d);
        let m0 = &b * b.transpose();
        let s = random_matrix::<f64, _>(&mut rng, d, d);
        let skew = &s - s.transpose();
        let m1 = DMatrix::identity(d, d) * 0.5;
        let mut p = EvoProblem::new(m0, m1, skew, 1.0).unwrap();
        certify_positivity(&mut p).unwrap();
        p
    }

    #[test]
    fn scalar_c0() {
        let mut p = scalar(1.0, 0.0, 0.0, 2.0);
        assert!((certify_positivity(&mut p).unwrap().c0 - 2.0).abs() < 1e-14);
    }

    #[test]
    fn skew_generator_c0() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 3.0, -3.0, 0.0]);
        let mut p = EvoProblem::new(DMatrix::zeros(2, 2), DMatrix::identity(2, 2), a, 1.0).unwrap();
        let rep = certify_positivity(&mut p).unwrap();
        assert!((rep.c0 - 1.0f64).abs() < 1e-14);
        assert!(rep.adjoint_condition_equivalent);
    }

    #[test]
    fn c0_matches_eigen_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let b = random_matrix::<f64, _>(&mut rng, 20, 20);
        let m0 = &b * b.transpose();
        let m1 = random_matrix::<f64, _>(&mut rng, 20, 20) + DMatrix::identity(20, 20) * 10.0;
        let a = random_matrix::<f64, _>(&mut rng, 20, 20);
        let mut p = EvoProblem::new(m0.clone(), m1.clone(), a.clone(), 1.5).unwrap();
        let c0 = certify_positivity(&mut p).unwrap().c0;
        let op = &m0 * 1.5 + m1 + a;
        let oracle = SymmetricEigen::new((&op + op.transpose()) * 0.5).eigenvalues.min();
        assert!((c0 - oracle).abs() <= 1e-9 * oracle.abs());
    }

    #[test]
    fn rejects_nonpositive_and_bad_m0() {
        let mut p = scalar(0.0, 0.0, 0.0, 1.0);
        assert!(matches!(certify_positivity(&mut p), Err(Error::NotPositive(_))));
        let m0 = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(EvoProblem::new(m0, DMatrix::zeros(2, 2), DMatrix::zeros(2, 2), 1.0).is_err());
        let p = scalar(1.0, 0.0, 1.0, 1.0);
        let g = WeightedTimeGrid::new(1.0, 10, 1.0).unwrap();
        assert!(matches!(EvoSolver::new(&p, g), Err(Error::Precondition(_))));
    }

    fn step_error(steps: usize) -> f64 {
        let mut p = scalar(1.0, 0.0, 1.0, 1.0);
        let g = WeightedTimeGrid::new(5.0, steps, 1.0).unwrap();
        let f = TimeSignal::separable(g, &DVector::from_element(1, 1.0), |_| 1.0).unwrap();
        let u = solve(&mut p, &f).unwrap();
        (0..g.nodes()).map(|n| (u.at(n)[0] - (1.0 - (-g.time(n)).exp())).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn scalar_ode_first_order() {
        let errs: Vec<f64> = (4..=8).map(|k| step_error(5 * (1 << k))).collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 0.9, "{errs:?}");
        }
        assert!(errs[4] < 5.0 / 256.0);
    }

    #[test]
    fn zero_source_zero_solution() {
        let p = random_certified(1, 5);
        let g = WeightedTimeGrid::new(2.0, 40, 1.0).unwrap();
        let s = EvoSolver::new(&p, g).unwrap();
        assert!(s.solve(&TimeSignal::zeros(g, 5)).unwrap().is_zero());
        let b = causal_bound_check(&s, &TimeSignal::zeros(g, 5), 2.0).unwrap();
        assert_eq!((b.lhs, b.rhs, b.pass), (0.0, 0.0, true));
    }

    #[test]
    fn late_source_gives_exact_zero_before_onset() {
        let p = random_certified(2, 6);
        let g = WeightedTimeGrid::new(2.0, 40, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let shape = crate::linalg::random_vector::<f64, _>(&mut rng, 6);
        let f = TimeSignal::separable(g, &shape, |t| if t >= 1.0 { 1.0 } else { 0.0 }).unwrap();
        let u = EvoSolver::new(&p, g).unwrap().solve(&f).unwrap();
        assert_eq!(u.max_abs_before(1.0), 0.0);
        assert!(u.max_abs() > 0.0);
    }

    #[test]
    fn scalar_bound_passes() {
        let mut p = scalar(1.0, 0.0, 1.0, 1.0);
        certify_positivity(&mut p).unwrap();
        let g = WeightedTimeGrid::new(5.0, 100, 1.0).unwrap();
        let f = TimeSignal::separable(g, &DVector::from_element(1, 1.0), |_| 1.0).unwrap();
        let s = EvoSolver::new(&p, g).unwrap();
        assert!(causal_bound_check(&s, &f, 5.0).unwrap().pass);
    }

    #[test]
    fn grid_mismatch_rejected() {
        let p = random_certified(3, 2);
        let g = WeightedTimeGrid::new(2.0, 40, 1.0).unwrap();
        let s = EvoSolver::new(&p, g).unwrap();
        let other = WeightedTimeGrid::new(2.0, 41, 1.0).unwrap();
        assert!(s.solve(&TimeSignal::zeros(other, 2)).is_err());
        assert!(s.solve(&TimeSignal::zeros(g, 3)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn causal_estimate_and_causality(seed in 0u64..10_000) {
            let p = random_certified(seed, 4);
            let g = WeightedTimeGrid::new(3.0, 60, 1.0).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
            let f = TimeSignal::from_values(g, random_matrix(&mut rng, 4, g.nodes())).unwrap();
            let s = EvoSolver::new(&p, g).unwrap();
            let u = s.solve(&f).unwrap();
            for a in [0.3, 1.0, 1.7, 2.5, 3.0] {
                prop_assert!(causal_bound_from(s.c0(), &u, &f, a).unwrap().pass);
                let ut = s.solve(&truncate(&f, a)).unwrap();
                prop_assert_eq!(truncate(&ut, a), truncate(&u, a));
            }
        }

        #[test]
        fn linearity(seed in 0u64..10_000) {
            let p = random_certified(seed, 3);
            let g = WeightedTimeGrid::new(1.0, 20, 1.0).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = TimeSignal::from_values(g, random_matrix(&mut rng, 3, g.nodes())).unwrap();
            let h = TimeSignal::from_values(g, random_matrix(&mut rng, 3, g.nodes())).unwrap();
            let s = EvoSolver::new(&p, g).unwrap();
            let combo = s.solve(&f.scaled(2.0).axpy(-0.5, &h).unwrap()).unwrap();
            let sep = s.solve(&f).unwrap().scaled(2.0).axpy(-0.5, &s.solve(&h).unwrap()).unwrap();
            let diff = combo.sub(&sep).unwrap().max_abs();
            prop_assert!(diff <= 1e-10 * combo.max_abs().max(1.0));
        }
    }
}
