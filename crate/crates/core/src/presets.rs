//! Desk-scale instances shared by the acceptance suite and the CLI fixtures.

use nalgebra::DMatrix;

use crate::degenerate_parabolic::{Bidomain, DegenerateProblem};
use crate::discrete_complex::{CellBox, StaggeredMesh};
use crate::eddy_current::{EddyProblem, SpatialProfile};
use crate::error::Result;
use crate::sources::TimeProfile;
use crate::subspaces::DEFAULT_RANK_TOL;
use crate::weighted_time::WeightedTimeGrid;

/// ε values of the singular-limit study.
pub const LIMIT_EPSILONS: [f64; 5] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];

/// `n = 6` mesh with a central 2³ conducting box.
pub fn center_box_mesh() -> Result<StaggeredMesh> {
    StaggeredMesh::new(6, &[CellBox::centered(6, 2)])
}

/// Central-box eddy problem with `σ̃ = sigma·I`, `μ = I`.
pub fn center_box_eddy(sigma: f64) -> Result<EddyProblem<f64>> {
    EddyProblem::with_scalar_materials(center_box_mesh()?, sigma, 1.0)
}

/// `n = 6` mesh with a central 3³ box. Its conducting edges contain loops, so
/// the eddy problem has decaying modes; the 2³ box only has a star of edges.
pub fn wide_box_eddy(sigma: f64) -> Result<EddyProblem<f64>> {
    EddyProblem::with_scalar_materials(StaggeredMesh::new(6, &[CellBox::centered(6, 3)])?, sigma, 1.0)
}

/// Two conducting boxes separated by a one-cell gap on an `n = 7` mesh.
pub fn two_box_mesh() -> Result<StaggeredMesh> {
    StaggeredMesh::new(7, &[CellBox::new([1, 1, 1], [3, 3, 3]), CellBox::new([4, 1, 1], [6, 3, 3])])
}

/// Bidomain model on a 6×6 cell grid with `σ1 = 1`, `σ2 = 1/2`.
pub fn bidomain() -> Result<Bidomain<f64>> {
    Bidomain::new(&[6, 6], 1.0, 0.5)
}

/// `(d0 + 1)u = f` in one dimension.
pub fn scalar_heat() -> Result<DegenerateProblem<f64>> {
    DegenerateProblem::build(DMatrix::from_element(1, 1, 1.0), DMatrix::from_element(1, 1, 1.0), DEFAULT_RANK_TOL)
}

/// Grid of the limit study: `T = 2`, 200 steps, `ρ = 1`.
pub fn limit_study_grid() -> Result<WeightedTimeGrid<f64>> {
    WeightedTimeGrid::new(2.0, 200, 1.0)
}

/// Source of the limit study: random `H0` field times a unit `sin²` ramp.
pub fn limit_study_source() -> (SpatialProfile, TimeProfile) {
    (SpatialProfile::RandomInH0 { seed: 5 }, TimeProfile::SmoothRamp { start: 0.0, width: 1.0 })
}

/// Pulse on `[0, 1]` used for the energy window `(1, 3]`.
pub fn energy_pulse() -> TimeProfile {
    TimeProfile::Bump { start: 0.0, width: 1.0 }
}
