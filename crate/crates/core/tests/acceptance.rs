//! Acceptance suite: one criterion per test, each printing a single
//! PASS/FAIL line (run with `--nocapture` to see them). Tolerances and
//! runtime budgets are pinned here.

use std::time::{Duration, Instant};

use num::rational::Rational64;
use num::Zero;
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use strominger::chern::{rr_identity_residual, MatrixField, PotentialMatrix};
use strominger::config::RunConfig;
use strominger::fibered::{structure_residuals, AnsatzData};
use strominger::forms::{omega_b, BaseForm};
use strominger::grid::{PeriodicGrid, ScalarField};
use strominger::lattice::{
    cormain_pair, intersect, nakai_positive, traceless_divisor, BlowupLattice, OrbifoldSurface,
};
use strominger::solver::{
    continuity_solve, linear_oracle_alpha_zero, manufacture, solve_at_t, upsilon_check,
    EquationData, SolverParams, SIGN_RHO_DEFAULT,
};
use strominger::synth::{asd_combination, synthesize};

type Rat = Rational64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Run a criterion, print exactly one PASS/FAIL line, enforce the runtime
/// budget, and panic on failure.
fn criterion(name: &str, budget: Duration, body: impl FnOnce() -> Result<String, String>) {
    let t0 = Instant::now();
    let outcome = body();
    let dt = t0.elapsed();
    match outcome {
        Ok(detail) if dt <= budget => {
            println!("ACCEPTANCE {name}: PASS [{dt:.2?}] {detail}");
        }
        Ok(detail) => {
            println!("ACCEPTANCE {name}: FAIL [{dt:.2?} over budget {budget:?}] {detail}");
            panic!("{name} exceeded its runtime budget: {dt:?} > {budget:?}");
        }
        Err(detail) => {
            println!("ACCEPTANCE {name}: FAIL [{dt:.2?}] {detail}");
            panic!("{name} failed: {detail}");
        }
    }
}

/// Solver calibration used by the analytic criteria: the admissible-set
/// margins are opened up so the manufactured targets (u up to ~0.15 in
/// amplitude) sit comfortably inside Upsilon.
fn loose_params(a_norm: f64) -> SolverParams {
    SolverParams {
        delta: 2.0,
        tau: 0.1,
        a_norm,
        ..SolverParams::default()
    }
}

fn cos_mode(g: PeriodicGrid, k: [f64; 4], amp: f64) -> ScalarField {
    ScalarField::from_fn(g, |x1, x2, x3, x4| {
        c(amp * (k[0] * x1 + k[1] * x2 + k[2] * x3 + k[3] * x4).cos(), 0.0)
    })
}

/// A non-trivial determinant-1 Hermitian positive-definite fiber metric.
fn sample_gb(g: PeriodicGrid) -> MatrixField {
    let f = ScalarField::from_fn(g, |x1, x2, _, _| c(0.1 * (x1 + x2).cos(), 0.0));
    let h = ScalarField::from_fn(g, |_, _, x3, _| c(0.05 * x3.sin(), 0.02 * x3.cos()));
    let ef = f.exp();
    let emf = f.neg().exp();
    let d = ScalarField::constant(g, c(1.0, 0.0))
        .add(&h.mul(&h.conj()))
        .mul(&emf);
    MatrixField::from_entries(g, 2, vec![ef, h.clone(), h.conj(), d])
}

// ---------------------------------------------------------------------
// 1. Worked-example arithmetic: weighted complete intersection of two
//    degree-6 hypersurfaces in weights (2,2,2,3,3) with 9 A1 points.

#[test]
fn criterion_1_worked_example_arithmetic() {
    criterion("1 worked-example arithmetic", Duration::from_secs(1), || {
        let cfg: RunConfig = serde_json::from_str(
            r#"{ "lattice": { "name": "wci-6-6", "weights": [2,2,2,3,3], "degrees": [6,6],
                 "num_A1": 9, "k_blown": 2 } }"#,
        )
        .map_err(|e| e.to_string())?;
        let r = strominger::pipeline::lattice_report(&cfg).map_err(|e| e.to_string())?;
        let checks = [
            (r.h_self == "1/2", "h_self"),
            (r.b2_orb == 13, "b2_orb"),
            (r.euler == 15, "euler"),
            (r.k_range == [13, 22], "k_range"),
            (r.r_range == [14, 22], "r_range"),
            (r.k_labels == ["#_13(S2xS3)".to_string(), "#_22(S2xS3)".to_string()], "k_labels"),
            (
                r.r_labels
                    == ["#_14(S2xS4)#_15(S3xS3)".to_string(), "#_22(S2xS4)#_23(S3xS3)".to_string()],
                "r_labels",
            ),
        ];
        for (ok, what) in checks {
            if !ok {
                return Err(format!("{what} mismatch"));
            }
        }
        Ok("h_self=1/2 b2=13 e=15 k:[13,22] r:[14,22]".to_string())
    });
}

// ---------------------------------------------------------------------
// 2. Divisor constructions on 100 randomized lattices: exact trace-zero
//    pairings and Nakai positivity, zero tolerance.

#[test]
fn criterion_2_randomized_divisor_constructions() {
    criterion("2 randomized divisor constructions", Duration::from_secs(1), || {
        let mut rng = ChaCha8Rng::seed_from_u64(20260823);
        let h_choices = [Rat::new(1, 2), Rat::new(1, 1), Rat::new(2, 1), Rat::new(4, 1)];
        for i in 0..100 {
            let h_self = h_choices[rng.gen_range(0..h_choices.len())];
            let k_blown = rng.gen_range(2..=10u32);
            let num_a1 = rng.gen_range(k_blown..=12u32);
            let base = OrbifoldSurface::new(format!("rand-{i}"), num_a1, h_self)
                .map_err(|e| e.to_string())?;
            let lat = BlowupLattice::new(base, k_blown).map_err(|e| e.to_string())?;

            let t = traceless_divisor(&lat).map_err(|e| e.to_string())?;
            let z = intersect(&t.d, &t.omega, &lat).map_err(|e| e.to_string())?;
            if !z.is_zero() || !nakai_positive(&t.omega, &lat).map_err(|e| e.to_string())? {
                return Err(format!("traceless failed on lattice {i}"));
            }

            let p = cormain_pair(&lat).map_err(|e| e.to_string())?;
            let z1 = intersect(&p.d1, &p.omega, &lat).map_err(|e| e.to_string())?;
            let z2 = intersect(&p.d2, &p.omega, &lat).map_err(|e| e.to_string())?;
            if !z1.is_zero() || !z2.is_zero()
                || !nakai_positive(&p.omega, &lat).map_err(|e| e.to_string())?
            {
                return Err(format!("cormain failed on lattice {i}"));
            }
        }
        Ok("100 lattices, all pairings exactly 0, omega Nakai-positive".to_string())
    });
}

// ---------------------------------------------------------------------
// 3. Curvature trace identity: residual convergence under refinement for
//    a non-trivial det-1 base metric, u = 0.1 cos x1, constant dbar A.

#[test]
fn criterion_3_curvature_trace_identity_convergence() {
    criterion("3 curvature trace identity", Duration::from_secs(120), || {
        let dbar_const = [[c(0.3, 0.1), c(-0.2, 0.0)], [c(0.0, 0.25), c(0.1, -0.1)]];
        let res_at = |n: usize| -> Result<f64, String> {
            let g = PeriodicGrid::new(n).map_err(|e| e.to_string())?;
            let u = cos_mode(g, [1.0, 0.0, 0.0, 0.0], 0.1);
            let a = PotentialMatrix::from_constant_dbar(g, dbar_const);
            rr_identity_residual(&u, &sample_gb(g), &a).map_err(|e| e.to_string())
        };
        let (r16, r24, r32) = (res_at(16)?, res_at(24)?, res_at(32)?);
        if r24 > 1e-6 {
            return Err(format!("residual at N=24 is {r24:.3e} > 1e-6"));
        }
        if r16 < 100.0 * r32 {
            return Err(format!("insufficient decay: N16 {r16:.3e} vs N32 {r32:.3e}"));
        }
        Ok(format!("residuals N16 {r16:.3e} / N24 {r24:.3e} / N32 {r32:.3e}"))
    });
}

// ---------------------------------------------------------------------
// 4. Conformally balanced identity at N = 16 with a valid ASD class.

#[test]
fn criterion_4_conformally_balanced() {
    criterion("4 conformally balanced identity", Duration::from_secs(30), || {
        let g = PeriodicGrid::new(16).map_err(|e| e.to_string())?;
        let w = asd_combination(g, [1, 0, 0])
            .add(&asd_combination(g, [0, 1, 0]).scale(c(0.0, 1.0)))
            .scale(c(1.0 / strominger::grid::TAU, 0.0));
        let ansatz = AnsatzData::new(w).map_err(|e| e.to_string())?;
        let u = cos_mode(g, [1.0, 0.0, 0.0, 0.0], 0.1);
        let report = structure_residuals(&u, &ansatz);
        if report.conformally_balanced > 1e-8 || !report.pass {
            return Err(format!(
                "conformally balanced residual {:.3e} > 1e-8",
                report.conformally_balanced
            ));
        }
        Ok(format!("d(||psi|| omega_u^2) max-norm {:.3e}", report.conformally_balanced))
    });
}

// ---------------------------------------------------------------------
// 5. Manufactured-solution recovery through the full continuation.

#[test]
fn criterion_5_manufactured_recovery() {
    criterion("5 manufactured recovery", Duration::from_secs(300), || {
        let g = PeriodicGrid::new(16).map_err(|e| e.to_string())?;
        let u_star = cos_mode(g, [1.0, 0.0, 0.0, 0.0], 0.1)
            .add(&cos_mode(g, [0.0, 0.0, 1.0, 0.0], 0.05));
        let rho = asd_combination(g, [1, 0, 0]).scale(c(0.4, 0.0))
            .add(&asd_combination(g, [0, 1, 0]).scale(c(0.3, 0.0)));
        let a_norm = u_star.exp().mean().re * g.volume();
        // the iteration budget (20 over 10 steps) prices Newton at two
        // quadratic steps per continuation increment; a convergence tolerance
        // at the 1e-10 floor would spend a third step per increment, so the
        // per-step tolerance sits two decades under the 1e-6 error target
        let params = SolverParams {
            newton_tol: 2e-8,
            ..loose_params(a_norm)
        };
        let mut details = Vec::new();
        for alpha in [-0.2, 0.2] {
            let data = manufacture(&u_star, &rho, alpha).map_err(|e| e.to_string())?;
            let (state, trace) =
                continuity_solve(&data, &params).map_err(|e| e.to_string())?;
            let err = state.u.max_diff(&u_star);
            let iters: usize = trace.iter().map(|s| s.newton_iterations).sum();
            if err > 1e-6 {
                return Err(format!("alpha'={alpha}: max-error {err:.3e} > 1e-6"));
            }
            if iters > 20 {
                return Err(format!("alpha'={alpha}: {iters} Newton iterations > 20"));
            }
            details.push(format!("alpha'={alpha}: err {err:.2e}, {iters} iters"));
        }
        Ok(details.join("; "))
    });
}

// ---------------------------------------------------------------------
// 6. alpha' = 0 oracle: the nonlinear solve matches the direct linear
//    solve for e^u on random mean-zero mu.

#[test]
fn criterion_6_alpha_zero_oracle() {
    criterion("6 alpha'=0 linear oracle", Duration::from_secs(60), || {
        let g = PeriodicGrid::new(8).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        // random real band-limited mean-zero mu
        let mut modes = Vec::new();
        for k1 in 0..=2i64 {
            for k3 in -2..=2i64 {
                if (k1, k3) == (0, 0) {
                    continue;
                }
                let a = c(rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05));
                modes.push(([k1, 0, k3, 0], a));
                modes.push(([-k1, 0, -k3, 0], a.conj()));
            }
        }
        let mu = ScalarField::from_modes(g, &modes);
        let mu = mu.add_scalar(-mu.mean()).real_part();
        let data = EquationData::new(BaseForm::zero(g, 1, 1), mu, 0.0, SIGN_RHO_DEFAULT)
            .map_err(|e| e.to_string())?;
        let params = loose_params(16.0 * g.volume());
        let state = solve_at_t(&ScalarField::zero(g), &data, 1.0, &params)
            .map_err(|e| e.to_string())?;
        let oracle = linear_oracle_alpha_zero(&data, 1.0, params.a_norm)
            .map_err(|e| e.to_string())?;
        // compare e^u on the resolved band; beyond-band content is
        // truncation the band-confined iteration cannot represent
        let diff = state.u.exp().dealias().max_diff(&oracle.exp().dealias());
        if diff > 1e-8 {
            return Err(format!("e^u mismatch {diff:.3e} > 1e-8"));
        }
        Ok(format!("e^u agreement {diff:.3e}"))
    });
}

// ---------------------------------------------------------------------
// 7. Integrability cross-check: exact lattice budget vs analytic integral,
//    and a single-charge perturbation moves both sides identically.

#[test]
fn criterion_7_integrability_cross_check() {
    criterion("7 integrability cross-check", Duration::from_secs(60), || {
        let g = PeriodicGrid::new(8).map_err(|e| e.to_string())?;
        let alpha = Rat::new(-1, 1);
        let charges = [[1i64, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]];
        // synthesize() itself asserts |int mu - (-2 pi^2 (lhs - rhs))| <= 1e-8 rel
        let s = synthesize(g, [1, 0, 0], [0, 1, 0], &charges, alpha)
            .map_err(|e| e.to_string())?;
        if !s.integrability.satisfied || s.analytic_integral.abs() > 1e-9 {
            return Err(format!(
                "balanced instance: satisfied={} integral={:.3e}",
                s.integrability.satisfied, s.analytic_integral
            ));
        }
        // perturb one charge: residual shifts by -alpha * Delta(sum |m|^2) = -2
        let bumped = [[1i64, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [1, 1, 0], [-1, -1, 0]];
        let (analytic, lattice) =
            match synthesize(g, [1, 0, 0], [0, 1, 0], &bumped, alpha) {
                Err(strominger::error::PipelineError::IntegrabilityViolated { analytic, lattice }) => {
                    (analytic, lattice)
                }
                other => return Err(format!("expected integrability violation, got {other:?}")),
            };
        if lattice != "4" {
            return Err(format!("lattice residual {lattice} != 4"));
        }
        let expected = -2.0 * std::f64::consts::PI.powi(2) * 4.0;
        let rel = (analytic - expected).abs() / expected.abs();
        if rel > 1e-8 {
            return Err(format!("analytic shift off by {rel:.3e} relative"));
        }
        Ok(format!("balanced exact; perturbation: lattice 4, analytic rel err {rel:.1e}"))
    });
}

// ---------------------------------------------------------------------
// 8. Negative controls: bad inputs are caught, not silently absorbed.

#[test]
fn criterion_8_negative_controls() {
    criterion("8 negative controls", Duration::from_secs(120), || {
        // (a) a non-primitive W is rejected by the ansatz validation
        let g = PeriodicGrid::new(8).map_err(|e| e.to_string())?;
        if AnsatzData::new(omega_b(g)).is_ok() {
            return Err("non-primitive W accepted".to_string());
        }

        // (b) unbalanced charges abort synthesis with exit code 2 via the CLI
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let cfg = dir.path().join("config.json");
        std::fs::write(
            &cfg,
            r#"{ "geometry": { "n": 8, "omega1": [1,0,0], "omega2": [0,1,0],
                 "charges": [[1,0,0],[-1,0,0]], "alpha_prime": "-1/1" } }"#,
        )
        .map_err(|e| e.to_string())?;
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_strominger"))
            .args(["synthesize", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path().join("out"))
            .status()
            .map_err(|e| e.to_string())?;
        if status.code() != Some(2) {
            return Err(format!("unbalanced synthesis exited with {:?}, want 2", status.code()));
        }

        // (c) scaling alpha' by 100 kicks the target out of Upsilon
        let u_star = cos_mode(g, [1.0, 0.0, 0.0, 0.0], 0.1);
        let rho = asd_combination(g, [1, 0, 0]).scale(c(0.4, 0.0));
        let alpha = -0.2 * 100.0;
        let a_norm = u_star.exp().mean().re * g.volume();
        let params = loose_params(a_norm);
        let (_, hessian_ok) = upsilon_check(&u_star, alpha, &params);
        if hessian_ok {
            return Err("Upsilon check missed the 100x alpha' violation".to_string());
        }
        let data = manufacture(&u_star, &rho, alpha).map_err(|e| e.to_string())?;
        if continuity_solve(&data, &params).is_ok() {
            return Err("continuation ran to completion outside Upsilon".to_string());
        }
        Ok("non-primitive W rejected; CLI exit 2; Upsilon breach detected".to_string())
    });
}
