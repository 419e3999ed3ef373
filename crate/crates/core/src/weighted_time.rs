//! Exponentially weighted time calculus on a uniform grid.
//!
//! A [`TimeSignal`] holds one state vector per grid node `t_n = n·dt`, `n = 0..=N`,
//! with an implicit zero history for `t < 0`. The weighted inner product is the
//! left-endpoint rectangle rule
//!
//! ```text
//! <f|g>_{rho,k} = dt · Σ_n <(d0^k f)_n | (d0^k g)_n> · exp(-2 rho t_n)
//! ```
//!
//! where negative `k` applies [`d0_inverse`] `|k|` times. The causal derivative
//! [`d0`] is the backward difference with zero history, so `d0` and `d0_inverse`
//! are exact inverses of each other.

use nalgebra::{DMatrix, DVector, DVectorView};

use crate::error::{dim_check, Error, Result};
use crate::scalar::Real;

/// Uniform grid on `[0, T]` carrying the exponential weight `rho`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedTimeGrid<T> {
    horizon: T,
    steps: usize,
    dt: T,
    rho: T,
}

impl<T: Real> WeightedTimeGrid<T> {
    /// Builds the grid. Requires `dt = T/N ≤ 1/rho`, which keeps the discrete
    /// derivative accretive in the weighted product.
    pub fn new(horizon: T, steps: usize, rho: T) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Argument("time grid needs at least one step".into()));
        }
        if !(horizon > T::zero()) || !horizon.is_finite() {
            return Err(Error::Argument("time horizon must be positive and finite".into()));
        }
        if !(rho > T::zero()) || !rho.is_finite() {
            return Err(Error::Argument("weight rho must be positive and finite".into()));
        }
        let dt = horizon / T::lit(steps as f64);
        if dt * rho > T::one() + T::lit(1e-12) {
            return Err(Error::Argument(format!(
                "dt = {:e} exceeds 1/rho = {:e}",
                dt,
                T::one() / rho
            )));
        }
        Ok(Self { horizon, steps, dt, rho })
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of nodes, `N + 1`.
    pub fn nodes(&self) -> usize {
        self.steps + 1
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn time(&self, n: usize) -> T {
        T::lit(n as f64) * self.dt
    }

    pub fn weight(&self, n: usize) -> T {
        (-(T::lit(2.0)) * self.rho * self.time(n)).exp()
    }

    /// Index of the last node with `t_n ≤ a` (clamped to the grid).
    pub fn last_index_at_or_before(&self, a: T) -> usize {
        if a < T::zero() {
            return 0;
        }
        let x = (a / self.dt + T::lit(1e-9)).floor().to_f64_lossy();
        (x.max(0.0) as usize).min(self.steps)
    }

    /// Same grid with a different weight (the step constraint is re-checked).
    pub fn with_rho(&self, rho: T) -> Result<Self> {
        Self::new(self.horizon, self.steps, rho)
    }
}

/// Time-indexed sequence of state vectors, stored column-wise (`dim × nodes`).
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSignal<T: Real> {
    grid: WeightedTimeGrid<T>,
    values: DMatrix<T>,
}

impl<T: Real> TimeSignal<T> {
    pub fn zeros(grid: WeightedTimeGrid<T>, dim: usize) -> Self {
        Self { grid, values: DMatrix::zeros(dim, grid.nodes()) }
    }

    /// Wraps a `dim × nodes` matrix; rejects wrong shapes and non-finite entries.
    pub fn from_values(grid: WeightedTimeGrid<T>, values: DMatrix<T>) -> Result<Self> {
        dim_check("signal node count", grid.nodes(), values.ncols())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("signal contains non-finite values".into()));
        }
        Ok(Self { grid, values })
    }

    /// Builds a signal node by node from `f(n, t_n)`.
    pub fn from_fn(
        grid: WeightedTimeGrid<T>,
        dim: usize,
        mut f: impl FnMut(usize, T) -> DVector<T>,
    ) -> Result<Self> {
        let mut values = DMatrix::zeros(dim, grid.nodes());
        for n in 0..grid.nodes() {
            let v = f(n, grid.time(n));
            dim_check("signal value dimension", dim, v.len())?;
            values.set_column(n, &v);
        }
        Self::from_values(grid, values)
    }

    /// Separable signal `profile(t) · shape`.
    pub fn separable(grid: WeightedTimeGrid<T>, shape: &DVector<T>, profile: impl Fn(T) -> T) -> Result<Self> {
        Self::from_fn(grid, shape.len(), |_, t| shape * profile(t))
    }

    pub fn grid(&self) -> &WeightedTimeGrid<T> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn nodes(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<T> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<T> {
        self.values
    }

    pub fn at(&self, n: usize) -> DVectorView<'_, T> {
        self.values.column(n)
    }

    /// Applies a spatial operator at every node.
    pub fn map_space(&self, op: &DMatrix<T>) -> Result<Self> {
        dim_check("spatial operator columns", self.dim(), op.ncols())?;
        Ok(Self { grid: self.grid, values: op * &self.values })
    }

    pub fn scaled(&self, a: T) -> Self {
        Self { grid: self.grid, values: &self.values * a }
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: T, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        Ok(Self { grid: self.grid, values: &self.values + &other.values * a })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(-T::one(), other)
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == T::zero())
    }

    /// Largest `|value|` over nodes with `t_n < a`.
    pub fn max_abs_before(&self, a: T) -> T {
        let mut m = T::zero();
        for n in 0..self.nodes() {
            if self.grid.time(n) < a {
                m = m.max(self.values.column(n).amax());
            }
        }
        m
    }

    pub(crate) fn compatible(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Dimension("signals live on different time grids".into()));
        }
        dim_check("signal dimension", self.dim(), other.dim())
    }
}

/// Backward difference `(u_n − u_{n−1})/dt` with `u_{−1} = 0`.
pub fn d0<T: Real>(f: &TimeSignal<T>) -> TimeSignal<T> {
    let inv_dt = T::one() / f.grid.dt;
    let mut out = f.values.clone();
    for n in (1..f.nodes()).rev() {
        let prev = f.values.column(n - 1);
        let mut col = out.column_mut(n);
        col -= prev;
    }
    out *= inv_dt;
    TimeSignal { grid: f.grid, values: out }
}

/// Causal cumulative sum `u_n = dt · Σ_{k ≤ n} f_k`.
pub fn d0_inverse<T: Real>(f: &TimeSignal<T>) -> TimeSignal<T> {
    let mut out = &f.values * f.grid.dt;
    for n in 1..f.nodes() {
        let prev = out.column(n - 1).clone_owned();
        let mut col = out.column_mut(n);
        col += prev;
    }
    TimeSignal { grid: f.grid, values: out }
}

/// Zeroes every node with `t_n > a`.
pub fn truncate<T: Real>(f: &TimeSignal<T>, a: T) -> TimeSignal<T> {
    let mut out = f.values.clone();
    for n in 0..f.nodes() {
        if f.grid.time(n) > a + f.grid.dt * T::lit(1e-9) {
            out.column_mut(n).fill(T::zero());
        }
    }
    TimeSignal { grid: f.grid, values: out }
}

/// Supported derivative shifts of the weighted norm.
pub const SUPPORTED_SHIFTS: [i32; 4] = [-2, -1, 0, 1];

/// Applies `d0^k` (negative `k` uses [`d0_inverse`]).
pub fn shift<T: Real>(f: &TimeSignal<T>, k: i32) -> Result<TimeSignal<T>> {
    match k {
        1 => Ok(d0(f)),
        0 => Ok(f.clone()),
        -1 => Ok(d0_inverse(f)),
        -2 => Ok(d0_inverse(&d0_inverse(f))),
        _ => Err(Error::Argument(format!("unsupported derivative shift k = {k}"))),
    }
}

/// Weighted quadrature `dt · Σ_n w_n · h(n)`.
pub(crate) fn weighted_sum<T: Real>(grid: &WeightedTimeGrid<T>, mut h: impl FnMut(usize) -> T) -> T {
    let mut acc = T::zero();
    for n in 0..grid.nodes() {
        acc += grid.weight(n) * h(n);
    }
    acc * grid.dt()
}

/// `<d0^k f | d0^k g>_{rho,0,0}`.
pub fn weighted_inner<T: Real>(f: &TimeSignal<T>, g: &TimeSignal<T>, k: i32) -> Result<T> {
    f.compatible(g)?;
    let fs = shift(f, k)?;
    let gs = shift(g, k)?;
    Ok(weighted_sum(&f.grid, |n| fs.values.column(n).dot(&gs.values.column(n))))
}

/// `|f|_{rho,k,0}`.
pub fn weighted_norm<T: Real>(f: &TimeSignal<T>, k: i32) -> Result<T> {
    Ok(weighted_inner(f, f, k)?.max(T::zero()).sqrt())
}

/// `dt · Σ_n w_n <f_n | M f_n>` for a symmetric spatial metric `M`.
pub fn weighted_quadratic<T: Real>(f: &TimeSignal<T>, metric: &DMatrix<T>) -> Result<T> {
    dim_check("metric size", f.dim(), metric.ncols())?;
    let mf = metric * &f.values;
    Ok(weighted_sum(&f.grid, |n| f.values.column(n).dot(&mf.column(n))))
}
