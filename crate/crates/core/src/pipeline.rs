//! Command implementations behind the CLI: lattice reporting, geometry
//! synthesis, the continuation solve, and full residual verification.
//! Every report echoes the physical conventions in force, and all
//! artifacts are written atomically with fixed field order so identical
//! configs produce bit-identical output.

use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::chern::hym_residual;
use crate::config::{GeometryConfig, ManufacturedConfig, RunConfig};
use crate::error::PipelineError;
use crate::fibered::{structure_residuals, AnsatzData, StructureReport};
use crate::fieldio;
use crate::forms::{omega_b, BaseForm};
use crate::grid::{PeriodicGrid, ScalarField};
use crate::lattice::{
    classify_seifert5, classify_t2_total, cormain_pair, format_rat, intersect,
    integrability_check, nakai_positive, orbifold_euler, parse_rat, traceless_divisor,
    BlowupLattice, CormainPair, IntegrabilityReport, OrbifoldSurface, TracelessPair,
};
use crate::solver::{continuity_solve, residual, EquationData, SolverState, StepTrace};
use crate::synth::{synthesize, GeometrySynthesis};

/// Physical conventions echoed into every report.
#[derive(Debug, Clone, Serialize)]
pub struct Conventions {
    pub period: String,
    pub class_scaling: String,
    pub rho_definition: String,
    pub sign_rho: f64,
    pub normalization: String,
}

impl Conventions {
    fn new(sign_rho: f64) -> Self {
        Conventions {
            period: "2*pi per axis".to_string(),
            class_scaling: "omega_i = 2*pi*(integral harmonic ASD representative)".to_string(),
            rho_definition: "rho = -(i/2) tr(dbar A ^ d A* . G_B^{-1})".to_string(),
            sign_rho,
            normalization: "constant shift of u fixed by int e^u vol = a_norm".to_string(),
        }
    }
}

fn grid_of(n: usize) -> Result<PeriodicGrid, PipelineError> {
    PeriodicGrid::new(n).map_err(|e| PipelineError::Config(e.to_string()))
}

fn need<'a, T>(section: &'a Option<T>, name: &str) -> Result<&'a T, PipelineError> {
    section
        .as_ref()
        .ok_or_else(|| PipelineError::Config(format!("config is missing the `{name}` section")))
}

// ---------------------------------------------------------------- lattice

#[derive(Debug, Clone, Serialize)]
pub struct DivisorPairSummary {
    pub classes: Vec<String>,
    pub omega: String,
    pub n: i64,
    pub m: i64,
    pub trace_checks: Vec<String>,
    pub nakai_positive: bool,
}

fn traceless_summary(lat: &BlowupLattice, p: &TracelessPair) -> Result<DivisorPairSummary, PipelineError> {
    Ok(DivisorPairSummary {
        classes: vec![p.d.pretty()],
        omega: p.omega.pretty(),
        n: p.n,
        m: p.m,
        trace_checks: vec![format_rat(&intersect(&p.d, &p.omega, lat).map_err(PipelineError::Lattice)?)],
        nakai_positive: nakai_positive(&p.omega, lat).map_err(PipelineError::Lattice)?,
    })
}

fn cormain_summary(lat: &BlowupLattice, p: &CormainPair) -> Result<DivisorPairSummary, PipelineError> {
    Ok(DivisorPairSummary {
        classes: vec![p.d1.pretty(), p.d2.pretty()],
        omega: p.omega.pretty(),
        n: p.n,
        m: p.m,
        trace_checks: vec![
            format_rat(&intersect(&p.d1, &p.omega, lat).map_err(PipelineError::Lattice)?),
            format_rat(&intersect(&p.d2, &p.omega, lat).map_err(PipelineError::Lattice)?),
        ],
        nakai_positive: nakai_positive(&p.omega, lat).map_err(PipelineError::Lattice)?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LatticeReport {
    pub name: String,
    pub h_self: String,
    pub num_a1: u32,
    pub b2_orb: u32,
    pub euler: i64,
    pub k_blown: u32,
    /// b2 after blowing up 0, 1, ..., num_a1 of the A1 points.
    pub b2_chain: Vec<u32>,
    /// Range of connected-sum counts k for the Seifert 5-manifolds.
    pub k_range: [u32; 2],
    /// Range of counts r for the simply-connected 6-manifolds.
    pub r_range: [u32; 2],
    /// Classification labels at the endpoints of k_range.
    pub k_labels: [String; 2],
    /// Classification labels at the endpoints of r_range.
    pub r_labels: [String; 2],
    pub traceless: Option<DivisorPairSummary>,
    pub cormain: Option<DivisorPairSummary>,
    /// Integrability check per requested alpha' value.
    pub budget: Vec<IntegrabilityReport>,
}

pub fn lattice_report(cfg: &RunConfig) -> Result<LatticeReport, PipelineError> {
    let lc = need(&cfg.lattice, "lattice")?;
    let h_self = lc.resolve_h_self()?;
    let base = OrbifoldSurface::new(lc.name.clone(), lc.num_a1, h_self)
        .map_err(PipelineError::Lattice)?;
    let b2_orb = base.b2_orb;
    let euler = orbifold_euler(lc.num_a1).map_err(PipelineError::Lattice)?;
    let lat = BlowupLattice::new(base, lc.k_blown).map_err(PipelineError::Lattice)?;

    let b2_chain: Vec<u32> = (0..=lc.num_a1).map(|j| b2_orb + j).collect();
    let k_range = [b2_orb, 22];
    let r_range = [b2_orb + 1, 22];
    // k counts copies of S2xS3 = b2 - 1, so the label at count k needs b2 = k + 1
    let k_labels = [
        classify_seifert5(k_range[0] + 1).map_err(PipelineError::Lattice)?,
        classify_seifert5(k_range[1] + 1).map_err(PipelineError::Lattice)?,
    ];
    let r_labels = [
        classify_t2_total(r_range[0] + 2).map_err(PipelineError::Lattice)?,
        classify_t2_total(r_range[1] + 2).map_err(PipelineError::Lattice)?,
    ];

    let traceless = if lc.k_blown >= 1 {
        let p = traceless_divisor(&lat).map_err(PipelineError::Lattice)?;
        Some(traceless_summary(&lat, &p)?)
    } else {
        None
    };
    let cormain = if lc.k_blown >= 2 {
        let p = cormain_pair(&lat).map_err(PipelineError::Lattice)?;
        Some(cormain_summary(&lat, &p)?)
    } else {
        None
    };

    let mut budget = Vec::new();
    if let (Some(bundle), Some(q1), Some(q2)) = (&lc.bundle, &lc.q1, &lc.q2) {
        let q1 = parse_rat(q1).map_err(PipelineError::Lattice)?;
        let q2 = parse_rat(q2).map_err(PipelineError::Lattice)?;
        for a in &lc.alpha_grid {
            let alpha = parse_rat(a).map_err(PipelineError::Lattice)?;
            budget.push(
                integrability_check(alpha, euler, bundle, q1, q2)
                    .map_err(PipelineError::Lattice)?,
            );
        }
    }

    Ok(LatticeReport {
        name: lc.name.clone(),
        h_self: format_rat(&h_self),
        num_a1: lc.num_a1,
        b2_orb,
        euler,
        k_blown: lc.k_blown,
        b2_chain,
        k_range,
        r_range,
        k_labels,
        r_labels,
        traceless,
        cormain,
        budget,
    })
}

pub fn cmd_lattice(cfg: &RunConfig, out: &Path) -> Result<(), PipelineError> {
    let report = lattice_report(cfg)?;
    std::fs::create_dir_all(out)?;
    fieldio::write_json(&out.join("lattice_report.json"), &report)
}

// ------------------------------------------------------------- synthesize

#[derive(Debug, Clone, Serialize)]
pub struct SynthesisReport {
    pub n: usize,
    pub omega1: [i64; 3],
    pub omega2: [i64; 3],
    pub charges: Vec<[i64; 3]>,
    pub alpha_prime: String,
    pub sign_rho: f64,
    /// `int mu vol` before centering; zero iff the budget balances.
    pub analytic_integral: f64,
    pub integrability: IntegrabilityReport,
    /// Structural identities of the ansatz at u = 0.
    pub structure: StructureReport,
    pub conventions: Conventions,
}

fn synthesize_from(gc: &GeometryConfig) -> Result<GeometrySynthesis, PipelineError> {
    let grid = grid_of(gc.n)?;
    synthesize(grid, gc.omega1, gc.omega2, &gc.charges, gc.alpha_rat()?)
}

pub fn cmd_synthesize(cfg: &RunConfig, out: &Path) -> Result<(), PipelineError> {
    let gc = need(&cfg.geometry, "geometry")?;
    let grid = grid_of(gc.n)?;
    let s = synthesize_from(gc)?;
    std::fs::create_dir_all(out)?;
    fieldio::write_form(&out.join("w.field"), &s.w)?;
    fieldio::write_form(&out.join("rho.field"), &s.rho)?;
    fieldio::write_scalar(&out.join("mu.field"), &s.mu)?;
    let report = SynthesisReport {
        n: gc.n,
        omega1: gc.omega1,
        omega2: gc.omega2,
        charges: gc.charges.clone(),
        alpha_prime: gc.alpha_prime.clone(),
        sign_rho: gc.sign_rho,
        analytic_integral: s.analytic_integral,
        integrability: s.integrability.clone(),
        structure: structure_residuals(&ScalarField::zero(grid), &s.ansatz),
        conventions: Conventions::new(gc.sign_rho),
    };
    fieldio::write_json(&out.join("synthesis_report.json"), &report)
}

// ------------------------------------------------------------------ solve

fn manufactured_target(mc: &ManufacturedConfig) -> Result<(ScalarField, BaseForm), PipelineError> {
    let grid = grid_of(mc.n)?;
    let u_star = ScalarField::from_fn(grid, |x1, x2, x3, x4| {
        let x = [x1, x2, x3, x4];
        let v: f64 = mc
            .u_modes
            .iter()
            .map(|m| {
                let phase: f64 = m.k.iter().zip(&x).map(|(&k, &xi)| k as f64 * xi).sum();
                m.amp * phase.cos()
            })
            .sum();
        Complex64::new(v, 0.0)
    });
    let mut rho = omega_b(grid).scale(Complex64::new(mc.rho_omega, 0.0));
    let etas = crate::synth::eta_basis(grid);
    for (a, eta) in etas.iter().enumerate() {
        if mc.rho_eta[a] != 0.0 {
            rho = rho.add(&eta.scale(Complex64::new(mc.rho_eta[a], 0.0)));
        }
    }
    Ok((u_star, rho))
}

/// Build the solver input from whichever data section is present, together
/// with the a_norm matching that instance's intended solution.
fn equation_from_config(cfg: &RunConfig) -> Result<(EquationData, f64, f64), PipelineError> {
    match (&cfg.geometry, &cfg.manufactured) {
        (Some(gc), None) => {
            let s = synthesize_from(gc)?;
            let data = s.equation_data(gc.sign_rho)?;
            Ok((data, cfg.solver.a_norm, gc.sign_rho))
        }
        (None, Some(mc)) => {
            let (u_star, rho) = manufactured_target(mc)?;
            let data = crate::solver::manufacture(&u_star, &rho, mc.alpha_prime)
                .map_err(PipelineError::Solver)?;
            let a_norm = u_star.exp().mean().re * u_star.grid().volume();
            Ok((data, a_norm, crate::solver::SIGN_RHO_DEFAULT))
        }
        (Some(_), Some(_)) => Err(PipelineError::Config(
            "provide either `geometry` or `manufactured`, not both".to_string(),
        )),
        (None, None) => Err(PipelineError::Config(
            "solve needs a `geometry` or `manufactured` section".to_string(),
        )),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub n: usize,
    pub t: f64,
    pub residual_norm: f64,
    pub newton_iterations_final: usize,
    pub newton_iterations_total: usize,
    pub t_steps: usize,
    pub in_upsilon: bool,
    pub omega_positive: bool,
    pub a_norm: f64,
    pub alpha_prime: f64,
    pub conventions: Conventions,
}

fn write_trace_csv(path: &Path, trace: &[StepTrace]) -> Result<(), PipelineError> {
    let mut text = String::from("t,residual_norm,newton_iterations\n");
    for s in trace {
        text.push_str(&format!("{:.12e},{:.12e},{}\n", s.t, s.residual_norm, s.newton_iterations));
    }
    fieldio::atomic_write(path, text.as_bytes())
}

pub fn run_solve(cfg: &RunConfig) -> Result<(SolverState, Vec<StepTrace>, EquationData, f64), PipelineError> {
    let (data, a_norm, sign_rho) = equation_from_config(cfg)?;
    let mut params = cfg.solver.clone();
    params.a_norm = a_norm;
    let (state, trace) = continuity_solve(&data, &params).map_err(PipelineError::Solver)?;
    Ok((state, trace, data, sign_rho))
}

pub fn cmd_solve(cfg: &RunConfig, out: &Path) -> Result<(), PipelineError> {
    let (state, trace, data, sign_rho) = run_solve(cfg)?;
    std::fs::create_dir_all(out)?;
    fieldio::write_scalar(&out.join("u.field"), &state.u)?;
    write_trace_csv(&out.join("trace.csv"), &trace)?;
    let summary = SolveSummary {
        n: data.grid().n(),
        t: state.t,
        residual_norm: state.residual_norm,
        newton_iterations_final: state.newton_iterations,
        newton_iterations_total: trace.iter().map(|s| s.newton_iterations).sum(),
        t_steps: trace.len(),
        in_upsilon: state.in_upsilon,
        omega_positive: state.omega_positive,
        a_norm: state.u.exp().mean().re * data.grid().volume(),
        alpha_prime: data.alpha(),
        conventions: Conventions::new(sign_rho),
    };
    fieldio::write_json(&out.join("solve_summary.json"), &summary)
}

// ----------------------------------------------------------------- verify

pub const ANOMALY_TOL: f64 = 1e-6;
pub const BALANCED_TOL: f64 = 1e-8;
pub const HYM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct HymSection {
    pub trace_residual: f64,
    pub antiholomorphic_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub n: usize,
    /// Hermitian-Yang-Mills residuals of the bundle curvature, or a note
    /// when the instance carries no bundle.
    pub hym: Option<HymSection>,
    pub hym_status: String,
    /// Max-norm of the scalar anomaly-equation residual at the solved u.
    pub anomaly_residual: f64,
    pub anomaly_tolerance: f64,
    pub anomaly_pass: bool,
    /// Torsion-structure identities including the conformally balanced one.
    pub structure: StructureReport,
    pub integrability: Option<IntegrabilityReport>,
    pub pass: bool,
    pub conventions: Conventions,
}

/// Evaluate the full residual set at a solved `u`.
pub fn verification_report(cfg: &RunConfig, u: &ScalarField) -> Result<VerificationReport, PipelineError> {
    let (hym, hym_status, ansatz, data, integrability, sign_rho) =
        match (&cfg.geometry, &cfg.manufactured) {
            (Some(gc), None) => {
                let s = synthesize_from(gc)?;
                let (tr, anti) = hym_residual(&s.f_matrix);
                let hym = HymSection {
                    trace_residual: tr,
                    antiholomorphic_residual: anti,
                    tolerance: HYM_TOL,
                    pass: tr <= HYM_TOL && anti <= HYM_TOL,
                };
                let data = s.equation_data(gc.sign_rho)?;
                (
                    Some(hym),
                    "checked".to_string(),
                    s.ansatz,
                    data,
                    Some(s.integrability.clone()),
                    gc.sign_rho,
                )
            }
            (None, Some(mc)) => {
                let (u_star, rho) = manufactured_target(mc)?;
                let data = crate::solver::manufacture(&u_star, &rho, mc.alpha_prime)
                    .map_err(PipelineError::Solver)?;
                let grid = u_star.grid();
                let ansatz = AnsatzData::new(BaseForm::zero(grid, 1, 1))
                    .map_err(PipelineError::Field)?;
                (
                    None,
                    "synthetic data - skipped".to_string(),
                    ansatz,
                    data,
                    None,
                    crate::solver::SIGN_RHO_DEFAULT,
                )
            }
            _ => {
                return Err(PipelineError::Config(
                    "verify needs exactly one of `geometry` or `manufactured`".to_string(),
                ))
            }
        };

    if u.grid() != data.grid() {
        return Err(PipelineError::Config(format!(
            "solution resolution {} does not match configured n = {}",
            u.grid().n(),
            data.grid().n()
        )));
    }
    // residual on the resolved band; Nyquist content is a discretization
    // artifact outside the solver's control
    let anomaly_residual = residual(u, &data, 1.0).dealias().max_abs();
    let structure = structure_residuals(u, &ansatz);
    let anomaly_pass = anomaly_residual <= ANOMALY_TOL;
    let hym_pass = hym.as_ref().map(|h| h.pass).unwrap_or(true);
    let integrability_pass = integrability.as_ref().map(|i| i.satisfied).unwrap_or(true);
    let pass = anomaly_pass && structure.pass && hym_pass && integrability_pass;

    Ok(VerificationReport {
        n: u.grid().n(),
        hym,
        hym_status,
        anomaly_residual,
        anomaly_tolerance: ANOMALY_TOL,
        anomaly_pass,
        structure,
        integrability,
        pass,
        conventions: Conventions::new(sign_rho),
    })
}

pub fn cmd_verify(cfg: &RunConfig, out: &Path) -> Result<(), PipelineError> {
    let u = fieldio::read_scalar(&out.join("u.field"))?;
    let report = verification_report(cfg, &u)?;
    fieldio::write_json(&out.join("verification_report.json"), &report)?;
    if !report.pass {
        let mut failing = Vec::new();
        if !report.anomaly_pass {
            failing.push(format!("anomaly residual {:.3e}", report.anomaly_residual));
        }
        if !report.structure.pass {
            failing.push(format!(
                "structure residuals (conformally balanced {:.3e})",
                report.structure.conformally_balanced
            ));
        }
        if let Some(h) = &report.hym {
            if !h.pass {
                failing.push(format!(
                    "HYM residuals {:.3e} / {:.3e}",
                    h.trace_residual, h.antiholomorphic_residual
                ));
            }
        }
        if let Some(i) = &report.integrability {
            if !i.satisfied {
                failing.push(format!("integrability residual {}", i.residual));
            }
        }
        return Err(PipelineError::VerificationFailed(failing.join("; ")));
    }
    Ok(())
}
