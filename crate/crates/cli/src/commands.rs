//! The six subcommands. Each writes its files into the output directory and
//! returns whether every certification passed.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use evosys::degenerate_parabolic::{energy_balance, energy_step_identity_defect, Bidomain, ReducedSolver};
use evosys::discrete_complex::{check_kernel_localization, exactness, ComplexOperators, ExactnessReport, LocalizationReport};
use evosys::eddy_current::{
    constants, sample_constants, ConstantSampling, DecompositionIdentities, EddyConstants, EddyProblem, EddySolver, SaddleSystem,
};
use evosys::linalg::seeded_vector;
use evosys::maxwell_limit::limit_study;
use evosys::subspaces::{distance, DEFAULT_RANK_TOL};
use evosys::weighted_time::{weighted_norm, TimeSignal, WeightedTimeGrid};

use crate::config::Config;
use crate::report::{fmt_f64, CliError, HistoryCsv, Hypothesis, OutDir};

/// Relative residual bound for solver outputs.
const RESIDUAL_TOL: f64 = 1e-8;
const IDENTITY_TOL: f64 = 1e-10;

fn rel(num: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        num / scale
    } else {
        num
    }
}

/// `J` from `[source]` and `K` from `[magnetic_source]` (zero when absent).
fn sources(cfg: &Config, p: &EddyProblem<f64>, grid: WeightedTimeGrid<f64>, command: &str) -> Result<(TimeSignal<f64>, TimeSignal<f64>, f64), CliError> {
    let src = cfg.source(command)?;
    let shape = p.spatial_field(&src.space)?;
    let j = TimeSignal::separable(grid, &shape, |t| src.time.at(t))?;
    let mut start = if shape.amax() > 0.0 { src.time.support_start() } else { f64::INFINITY };
    let k = match cfg.magnetic_source {
        Some(ks) => {
            let g: DVector<f64> = seeded_vector(ks.seed, p.mesh().num_faces());
            start = start.min(ks.time.support_start());
            TimeSignal::separable(grid, &g, |t| ks.time.at(t))?
        }
        None => TimeSignal::zeros(grid, p.mesh().num_faces()),
    };
    Ok((j, k, start))
}

#[derive(Serialize, Default)]
struct CheckReport {
    hypotheses: Vec<Hypothesis>,
    c1: Option<f64>,
    k0: Option<f64>,
    k1: Option<f64>,
    c_star: Option<f64>,
    c0_formula: Option<f64>,
    c0_direct: Option<f64>,
    exactness: Option<ExactnessReport>,
    localization: Option<LocalizationReport>,
    constants: Option<EddyConstants>,
    sampling: Option<ConstantSampling>,
    decomposition: Option<DecompositionIdentities>,
    pass: bool,
}

impl CheckReport {
    /// Certification failures become a failed hypothesis; anything else aborts.
    fn stage<T>(&mut self, name: &str, r: Result<T, CliError>) -> Result<Option<T>, CliError> {
        match r {
            Ok(v) => Ok(Some(v)),
            Err(CliError::Certification(m)) => {
                self.hypotheses.push(Hypothesis::new(name, false, m));
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }

    fn record(&mut self, name: &str, pass: bool, detail: String) -> bool {
        self.hypotheses.push(Hypothesis::new(name, pass, detail));
        pass
    }

    fn run(&mut self, cfg: &Config) -> Result<(), CliError> {
        let Some(mesh) = self.stage("conductor closure strictly inside the domain", cfg.mesh("check"))? else {
            return Ok(());
        };
        self.record(
            "conductor closure strictly inside the domain",
            true,
            format!("{} conducting edges", mesh.conducting_edges().len()),
        );
        let ex = exactness(&mesh);
        let exact = self.record(
            "discrete complex exactness",
            ex.exact(),
            format!("rank grad0={} dim N(curl0)={}", ex.rank_grad, ex.dim_kernel_curl),
        );
        self.exactness = Some(ex);
        if !exact {
            return Ok(());
        }
        let ops = ComplexOperators::<f64>::new(&mesh);
        let Some(loc) = self.stage("curl kernels localize to the conductor and its exterior", check_kernel_localization(&mesh, &ops).map_err(Into::into))? else {
            return Ok(());
        };
        let localized = self.record(
            "curl kernels localize to the conductor and its exterior",
            loc.pass,
            format!("outside defect {:.1e}, inside defect {:.1e}", loc.outside_defect, loc.inside_defect),
        );
        self.localization = Some(loc);
        if !localized {
            return Ok(());
        }
        let Some(p) = self.stage("reduced operator uniformly positive", cfg.eddy("check"))? else {
            return Ok(());
        };
        let c1 = p.problem().c1();
        self.c1 = Some(c1);
        self.record("reduced operator uniformly positive", c1 > 0.0, format!("c1 = {c1:e}"));
        if let Some(ids) = self.stage("decomposition matches its geometric description", p.decomposition_identities().map_err(Into::into))? {
            self.record(
                "decomposition matches its geometric description",
                ids.pass,
                format!("dims {:?}, largest defect {:.1e}", ids.dims, ids.h0_perp_defect.max(ids.h1_defect).max(ids.diamond_defect)),
            );
            self.decomposition = Some(ids);
        }
        let Some(k) = self.stage("conductor restriction injective on H2", constants(&p).map_err(Into::into))? else {
            return Ok(());
        };
        self.record("conductor restriction injective on H2", true, format!("k1 = {:e}, dim H2 = {}", k.k1, k.h2_dim));
        self.record(
            "coercivity constant dominates its closed form",
            k.pass,
            format!("c0_direct {:e} >= c0_formula {:e}", k.c0_direct, k.c0_formula),
        );
        (self.k0, self.k1, self.c_star, self.c0_formula, self.c0_direct) =
            (Some(k.k0), Some(k.k1), Some(k.c_star), Some(k.c0_formula), Some(k.c0_direct));
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        if let Some(s) = self.stage("sampled constant estimates", sample_constants(&p, &k, &mut rng, cfg.check.samples).map_err(Into::into))? {
            self.record(
                "sampled constant estimates",
                s.pass,
                format!("{} samples, worst violation {:.1e}", s.samples, s.k0_violation.max(s.k1_violation).max(s.coercivity_violation)),
            );
            self.sampling = Some(s);
        }
        self.constants = Some(k);
        Ok(())
    }
}

pub fn check(cfg: &Config, out: &OutDir) -> Result<bool, CliError> {
    let mut report = CheckReport::default();
    report.run(cfg)?;
    report.pass = !report.hypotheses.is_empty() && report.hypotheses.iter().all(|h| h.pass);
    out.write_json("check.json", &report)?;
    Ok(report.pass)
}

pub fn solve_eddy(cfg: &Config, out: &OutDir) -> Result<bool, CliError> {
    let p = cfg.eddy("solve-eddy")?;
    let grid = cfg.grid("solve-eddy")?;
    let (j, k, start) = sources(cfg, &p, grid, "solve-eddy")?;
    let sol = EddySolver::new(&p, grid)?.solve(&j, &k)?;
    let before = sol.e.max_abs_before(start).max(sol.h.max_abs_before(start));
    let residual_pass = sol.ampere_residual <= RESIDUAL_TOL && sol.faraday_residual <= RESIDUAL_TOL;
    let pass = residual_pass && before == 0.0;
    let mut csv = HistoryCsv::new();
    csv.push("E", &sol.e);
    csv.push("H", &sol.h);
    out.write("eddy.csv", &csv.finish())?;
    out.write_json(
        "eddy.json",
        &json!({
            "ampere_residual": sol.ampere_residual,
            "faraday_residual": sol.faraday_residual,
            "residual_pass": residual_pass,
            "source_start": if start.is_finite() { Some(start) } else { None },
            "max_field_before_source": before,
            "causal": before == 0.0,
            "e_norm": weighted_norm(&sol.e, 0)?,
            "h_norm": weighted_norm(&sol.h, 0)?,
            "dt": grid.dt(),
            "steps": grid.steps(),
            "pass": pass,
        }),
    )?;
    Ok(pass)
}

pub fn saddle(cfg: &Config, out: &OutDir) -> Result<bool, CliError> {
    let p = cfg.eddy("saddle")?;
    let grid = cfg.grid("saddle")?;
    let (j, _, start) = sources(cfg, &p, grid, "saddle")?;
    let sys = SaddleSystem::new(&p, grid)?;
    let mut f = j.scaled(-1.0);
    let perturbation = cfg.saddle.perturbation;
    if perturbation > 0.0 {
        let r: DVector<f64> = seeded_vector(cfg.seed ^ 0x9e37_79b9, sys.grad.dim());
        let shape = &sys.grad.g * r;
        let src = cfg.source("saddle")?;
        f = f.axpy(perturbation, &TimeSignal::separable(grid, &shape, |t| src.time.at(t))?)?;
    }
    let sol = sys.solve(&f)?;
    let pf = p.problem().project_signal(&f)?;
    let reduced = p.problem().lift(&EddySolver::new(&p, grid)?.solve_f(&pf)?)?;
    let f_norm = sol.f_norm;
    let diff = rel(weighted_norm(&sol.e.sub(&reduced)?, 0)?, f_norm);
    let p_rel = rel(sol.p_norm, f_norm);
    let gp = sol.p_mult.map_space(&sys.grad.g)?;
    let capture = rel(weighted_norm(&gp.sub(&f.sub(&pf)?)?, 0)?, f_norm);
    let before = sol.e.max_abs_before(start);
    let pass = diff <= RESIDUAL_TOL
        && sol.constraint_residual <= RESIDUAL_TOL
        && capture <= RESIDUAL_TOL
        && before == 0.0
        && (perturbation > 0.0 || p_rel <= RESIDUAL_TOL);
    let mut csv = HistoryCsv::new();
    csv.push("E", &sol.e);
    csv.push("p", &sol.p_mult);
    out.write("saddle.csv", &csv.finish())?;
    out.write_json(
        "saddle.json",
        &json!({
            "multiplier_dim": sys.grad.dim(),
            "certification_residual": sys.certification_residual,
            "perturbation": perturbation,
            "f_norm": f_norm,
            "p_norm": sol.p_norm,
            "p_relative": p_rel,
            "complement_capture_defect": capture,
            "difference_to_reduced": diff,
            "constraint_residual": sol.constraint_residual,
            "max_field_before_source": before,
            "pass": pass,
        }),
    )?;
    Ok(pass)
}

pub fn limit(cfg: &Config, out: &OutDir, threads: usize) -> Result<bool, CliError> {
    let p = cfg.eddy("limit-study")?;
    let grid = cfg.grid("limit-study")?;
    let lc = cfg.limit("limit-study")?;
    let src = cfg.source("limit-study")?;
    let f = TimeSignal::separable(grid, &p.spatial_field(&src.space)?, |t| src.time.at(t))?;
    let r = limit_study(&p, &f, &lc.epsilons, lc.k, threads)?;
    let mut csv = String::from("epsilon,error,ratio,dt,n,rho,k\n");
    for i in 0..r.epsilon_values.len() {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_f64(r.epsilon_values[i]),
            fmt_f64(r.errors[i]),
            fmt_f64(r.ratios[i]),
            fmt_f64(r.dt),
            r.n,
            fmt_f64(r.rho),
            r.k
        ));
    }
    out.write("limit.csv", &csv)?;
    let pass = r.pass();
    let mut summary = serde_json::to_value(&r).map_err(|e| CliError::Io(e.to_string()))?;
    summary["pass"] = json!(pass);
    out.write_json("limit.json", &summary)?;
    Ok(pass)
}

pub fn bidomain(cfg: &Config, out: &OutDir) -> Result<bool, CliError> {
    let bc = cfg.bidomain("bidomain")?;
    let grid = cfg.grid("bidomain")?;
    let b = Bidomain::<f64>::new(&bc.shape, bc.sigma1, bc.sigma2)?;
    let prob = &b.problem;
    let c1 = prob.c1();
    let poincare_floor = b.poincare_c2.min(1.0);
    let h2_dim = prob.decomposition().dims()[2];
    let null_angle = distance(&b.null_space(DEFAULT_RANK_TOL)?, &b.expected_null_space())?;
    let shape = prob.h0().lift(&seeded_vector(cfg.seed, prob.reduced_dim()))?;
    let f = TimeSignal::separable(grid, &shape, |t| bc.pulse.at(t))?;
    let fc = prob.to_coords(&f, 1e-12)?;
    let u = ReducedSolver::new(prob, grid)?.solve_coords(&fc)?;
    let step_defect = energy_step_identity_defect(prob, &u, &fc)?;
    let window = energy_balance(prob, &u, &fc, bc.window[0], bc.window[1])?;
    let balance_defect = rel((window.lhs + window.dissipation_defect - window.rhs).abs(), window.rhs);
    let energy_pass = step_defect <= 1e-12 && balance_defect <= IDENTITY_TOL && window.lhs <= window.rhs * (1.0 + 1e-12);
    let pass = c1 >= poincare_floor * (1.0 - 1e-10) && h2_dim == 0 && null_angle <= IDENTITY_TOL && energy_pass;
    let mut csv = String::from("step,t,energy,flux\n");
    for n in 0..u.nodes() {
        let un = u.at(n);
        let energy = 0.5 * un.dot(&(prob.eta0() * un));
        let flux = (prob.c0() * un).norm_squared();
        csv.push_str(&format!("{n},{},{},{}\n", fmt_f64(grid.time(n)), fmt_f64(energy), fmt_f64(flux)));
    }
    out.write("bidomain.csv", &csv)?;
    out.write_json(
        "bidomain.json",
        &json!({
            "cells": b.cells,
            "c1": c1,
            "poincare_c2": b.poincare_c2,
            "min_one_c2": poincare_floor,
            "h2_dim": h2_dim,
            "dims": prob.decomposition().dims(),
            "null_space_angle": null_angle,
            "step_identity_defect": step_defect,
            "window": bc.window,
            "window_energy_start": window.rhs,
            "window_lhs": window.lhs,
            "window_dissipation": window.dissipation_defect,
            "window_balance_defect": balance_defect,
            "energy_pass": energy_pass,
            "pass": pass,
        }),
    )?;
    Ok(pass)
}

pub fn decompose(cfg: &Config, out: &OutDir) -> Result<bool, CliError> {
    let p = cfg.eddy("decompose")?;
    let rep = p.problem().decomposition();
    let ids = p.decomposition_identities()?;
    let names = ["range_ct", "h1", "h2"];
    let k = rep.parts.len();
    let mut csv = String::from("row,col,overlap\n");
    for i in 0..k {
        for j in 0..k {
            csv.push_str(&format!("{},{},{}\n", names[i], names[j], fmt_f64(rep.pairwise_overlaps[(i, j)])));
        }
    }
    out.write("overlaps.csv", &csv)?;
    let overlaps: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| rep.pairwise_overlaps[(i, j)]).collect()).collect();
    let max_off = rep.max_offdiagonal_overlap();
    let pass = max_off <= IDENTITY_TOL && rep.reconstruction_defect <= IDENTITY_TOL && rep.dims_add_up() && ids.pass;
    out.write_json(
        "decompose.json",
        &json!({
            "edges": p.mesh().num_interior_edges(),
            "h0_dim": rep.whole.dim(),
            "parts": names,
            "dims": rep.dims(),
            "pairwise_overlaps": overlaps,
            "max_offdiagonal_overlap": max_off,
            "reconstruction_defect": rep.reconstruction_defect,
            "identities": ids,
            "pass": pass,
        }),
    )?;
    Ok(pass)
}
