//! Public-API checks against closed-form answers.

use nalgebra::{DMatrix, DVector};

use evosys::degenerate_parabolic::{solve_reduced, Bidomain, DegenerateProblem};
use evosys::discrete_complex::{exactness, ComplexOperators, StaggeredMesh};
use evosys::eddy_current::{EddyProblem, EddySolver, SpatialProfile};
use evosys::maxwell_limit::fit_order;
use evosys::subspaces::DEFAULT_RANK_TOL;
use evosys::weighted_time::{d0, d0_inverse, TimeSignal, WeightedTimeGrid};

#[test]
fn backward_euler_scalar_recursion() {
    // (d0 + λ)u = 1 gives u_n = (u_{n-1} + dt)/(1 + λ dt), u_{-1} = 0
    let lambda: f64 = 3.0;
    let p = DegenerateProblem::build(DMatrix::from_element(1, 1, 1.0), DMatrix::from_element(1, 1, lambda.sqrt()), DEFAULT_RANK_TOL)
        .unwrap();
    let grid = WeightedTimeGrid::new(1.0, 10, 1.0).unwrap();
    let f = TimeSignal::separable(grid, &DVector::from_element(1, 1.0), |_| 1.0).unwrap();
    let u = p.lift(&solve_reduced(&p, &f).unwrap()).unwrap();
    let dt = grid.dt();
    let mut want = 0.0;
    for n in 0..grid.nodes() {
        want = (want + dt) / (1.0 + lambda * dt);
        assert!((u.at(n)[0] - want).abs() < 1e-14, "node {n}");
    }
}

#[test]
fn difference_and_sum_by_hand() {
    let grid = WeightedTimeGrid::<f64>::new(1.0, 3, 1.0).unwrap();
    let f = TimeSignal::from_values(grid, DMatrix::from_row_slice(1, 4, &[1.0, 3.0, 6.0, 10.0])).unwrap();
    let df = d0(&f);
    assert_eq!(df.values().as_slice(), &[3.0, 6.0, 9.0, 12.0]);
    let s = d0_inverse(&df);
    for (a, b) in s.values().iter().zip(f.values().iter()) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn small_mesh_counts() {
    for n in [3usize, 4, 5] {
        let mesh = StaggeredMesh::new(n, &[]).unwrap();
        let r = exactness(&mesh);
        assert_eq!(r.interior_nodes, (n - 1).pow(3));
        assert_eq!(r.interior_edges, 3 * n * (n - 1) * (n - 1));
        assert_eq!(r.rank_grad, (n - 1).pow(3));
        assert_eq!(r.rank_curl, r.interior_edges - r.interior_nodes);
        assert!(r.exact());
        assert_eq!(mesh.num_faces(), 3 * n * n * (n + 1));
    }
}

#[test]
fn neumann_poincare_constant_in_one_dimension() {
    // mean-zero eigenvalue of the m-cell Neumann Laplacian with spacing 1/m
    let m = 8;
    let b = Bidomain::<f64>::new(&[m], 2.0, 0.5).unwrap();
    let h_inv = m as f64;
    let lam = 4.0 * h_inv * h_inv * (std::f64::consts::PI / (2.0 * m as f64)).sin().powi(2);
    assert!((b.poincare_c2 - 0.5 * lam).abs() < 1e-10 * lam);
    assert_eq!(b.problem.decomposition().dims()[2], 0);
}

#[test]
fn no_conductor_is_quasi_static() {
    // σ = 0: curl0ᵀcurl0 u_n = f_n at every node, E = d0 u
    let mesh = StaggeredMesh::new(4, &[]).unwrap();
    let p = EddyProblem::with_scalar_materials(mesh, 1.0, 1.0).unwrap();
    let shape = p.spatial_field(&SpatialProfile::CurlRange { seed: 1 }).unwrap();
    let grid = WeightedTimeGrid::new(1.0, 8, 1.0).unwrap();
    let f = TimeSignal::separable(grid, &shape, |t| t * t).unwrap();
    let x = p.problem().lift(&EddySolver::new(&p, grid).unwrap().solve_f(&f).unwrap()).unwrap();
    let ops = ComplexOperators::<f64>::new(p.mesh());
    let curl = ops.curl0_dense();
    let ctc = curl.transpose() * &curl;
    for n in 0..grid.nodes() {
        let r = &ctc * x.at(n) - f.at(n);
        assert!(r.amax() < 1e-10 * (1.0 + f.at(n).amax()), "node {n}");
    }
}

#[test]
fn fitted_order_of_exact_power_law() {
    let x = [1e-1, 1e-2, 1e-3];
    let y: Vec<f64> = x.iter().map(|v: &f64| 5.0 * v.powf(1.5)).collect();
    assert!((fit_order(&x, &y).unwrap() - 1.5).abs() < 1e-12);
    assert_eq!(fit_order(&x[..1], &y[..1]), None);
}
