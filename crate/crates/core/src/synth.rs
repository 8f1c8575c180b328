//! Synthesis of analytic field data on the flat base from integer lattice
//! charges: the anti-self-dual 2-form basis, the bundle curvature, rho, and
//! the source density mu, together with the exact-rational integrability
//! cross-check.
//!
//! Normalization bridge (echoed in reports): every integral anti-self-dual
//! class is represented by `eta_a / 4 pi^2` (self-intersection -2), the
//! fibration curvature forms are `w_i = 2 pi * (integral representative)
//! = (1/2 pi) sum_a c_{ia} eta_a`, and line-bundle curvatures are
//! `F_j = (i/2 pi) sum_a m_{ja} eta_a`. With these choices
//! `int ||w_i||^2 vol = -4 pi^2 Q_i` and
//! `int mu vol = -2 pi^2 (lattice lhs - lattice rhs)`.

use num_complex::Complex64;
use num::rational::Rational64;

use crate::chern::{rho_from_potential, FormMatrix, MatrixField, PotentialMatrix};
use crate::error::PipelineError;
use crate::fibered::AnsatzData;
use crate::forms::BaseForm;
use crate::grid::{PeriodicGrid, ScalarField};
use crate::lattice::{integrability_check, BundleTopologyData, IntegrabilityReport};
use crate::solver::EquationData;

type Rat = Rational64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// The constant anti-self-dual (1,1)-forms
/// `eta_1 = dx12 - dx34`, `eta_2 = dx13 + dx24`, `eta_3 = dx23 - dx14`,
/// satisfying `eta_a ^ eta_b = -2 delta_ab vol`.
pub fn eta_basis(grid: PeriodicGrid) -> [BaseForm; 3] {
    [
        BaseForm::constant(grid, 1, 1, &[c(0.0, 0.5), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -0.5)]),
        BaseForm::constant(grid, 1, 1, &[c(0.0, 0.0), c(0.5, 0.0), c(-0.5, 0.0), c(0.0, 0.0)]),
        BaseForm::constant(grid, 1, 1, &[c(0.0, 0.0), c(0.0, -0.5), c(0.0, -0.5), c(0.0, 0.0)]),
    ]
}

/// Integer combination `sum_a coeffs[a] eta_a`.
pub fn asd_combination(grid: PeriodicGrid, coeffs: [i64; 3]) -> BaseForm {
    let etas = eta_basis(grid);
    let mut acc = BaseForm::zero(grid, 1, 1);
    for (a, eta) in etas.iter().enumerate() {
        if coeffs[a] != 0 {
            acc = acc.add(&eta.scale(c(coeffs[a] as f64, 0.0)));
        }
    }
    acc
}

/// Lattice self-intersection of an integer anti-self-dual class:
/// `Q = -2 sum_a c_a^2`.
pub fn asd_self_intersection(coeffs: [i64; 3]) -> Rat {
    let s: i64 = coeffs.iter().map(|&x| x * x).sum();
    Rat::from_integer(-2 * s)
}

/// Topology of the direct sum of line bundles with diagonal charges
/// `m_j` in the anti-self-dual basis: `c1(E) = sum_j m_j` (self-intersection
/// -2 per basis vector), and `c2 - c1^2/2 = sum_j |m_j|^2`.
pub fn bundle_topology(charges: &[[i64; 3]]) -> BundleTopologyData {
    let mut c1 = [0i64; 3];
    let mut sum_sq = 0i64;
    for m in charges {
        for a in 0..3 {
            c1[a] += m[a];
        }
        sum_sq += m.iter().map(|&x| x * x).sum::<i64>();
    }
    let c1_sq = Rat::from_integer(-2 * c1.iter().map(|&x| x * x).sum::<i64>());
    let c2 = Rat::from_integer(sum_sq) + c1_sq / Rat::from_integer(2);
    BundleTopologyData {
        rank: charges.len() as u32,
        c1_sq,
        c2,
        degree_zero: c1 == [0, 0, 0],
        stable: true,
    }
}

/// All analytic data synthesized from integer charges, plus the exact
/// lattice-side cross-check.
#[derive(Debug)]
pub struct GeometrySynthesis {
    /// Complex fibration curvature `W = w_1 + i w_2`.
    pub w: BaseForm,
    pub ansatz: AnsatzData,
    pub potential: PotentialMatrix,
    /// The rho form entering the reduced equation (half the curvature-trace
    /// identity's rho).
    pub rho: BaseForm,
    /// Mean-centered source density for the solver.
    pub mu: ScalarField,
    /// Diagonal bundle curvature as a matrix of (1,1)-forms.
    pub f_matrix: FormMatrix,
    /// `int mu vol` before centering.
    pub analytic_integral: f64,
    pub integrability: IntegrabilityReport,
}

/// Build the analytic data of one geometric instance and check the anomaly
/// integrability budget on both sides.
///
/// `mu omega_B^2/2 = (1/2) ||W||^2 omega_B^2/2
///   - (alpha'/4)(tr R_B ^ R_B - tr F ^ F)` with `R_B = 0` on the flat base.
pub fn synthesize(
    grid: PeriodicGrid,
    omega1: [i64; 3],
    omega2: [i64; 3],
    charges: &[[i64; 3]],
    alpha_prime: Rat,
) -> Result<GeometrySynthesis, PipelineError> {
    let alpha_f = *alpha_prime.numer() as f64 / *alpha_prime.denom() as f64;
    let inv_2pi = c(1.0 / crate::grid::TAU, 0.0);

    let w1 = asd_combination(grid, omega1).scale(inv_2pi);
    let w2 = asd_combination(grid, omega2).scale(inv_2pi);
    let w = w1.add(&w2.scale(c(0.0, 1.0)));
    let ansatz = AnsatzData::new(w.clone()).map_err(PipelineError::Field)?;

    let potential = PotentialMatrix::for_target_w(&w).map_err(PipelineError::Field)?;
    let identity = MatrixField::identity(grid, 2);
    let rho = rho_from_potential(&potential, &identity)
        .map_err(PipelineError::Field)?
        .scale(c(0.5, 0.0));

    // diagonal bundle curvature F_j = (i/2 pi) sum_a m_{ja} eta_a
    let r = charges.len().max(1);
    let mut f_matrix = FormMatrix::zero(grid, r, r);
    for (j, m) in charges.iter().enumerate() {
        *f_matrix.entry_mut(j, j) = crate::forms::MixedForm::from_base(
            asd_combination(grid, *m).scale(c(0.0, 1.0 / crate::grid::TAU)),
        );
    }

    // tr F ^ F as a density against vol
    let mut trff = ScalarField::zero(grid);
    for i in 0..r {
        let fi = f_matrix.entry(i, i);
        trff = trff.add(&fi.wedge(fi).top_density());
    }
    // mu = (1/2)||W||^2 + (alpha'/4) tr F ^ F  (R_B = 0)
    let mu_raw = w
        .inner(&w)
        .scale(c(0.5, 0.0))
        .add(&trff.scale(c(alpha_f / 4.0, 0.0)))
        .real_part();
    let analytic_integral = mu_raw.mean().re * grid.volume();

    // exact lattice side: euler = 0 on the 4-torus
    let q1 = asd_self_intersection(omega1);
    let q2 = asd_self_intersection(omega2);
    let bundle = bundle_topology(charges);
    let integrability =
        integrability_check(alpha_prime, 0, &bundle, q1, q2).map_err(PipelineError::Lattice)?;

    // cross-check: int mu vol = -2 pi^2 (lhs - rhs)
    let lhs_minus_rhs = crate::lattice::parse_rat(&integrability.residual)
        .map(|r| *r.numer() as f64 / *r.denom() as f64)
        .unwrap_or(f64::NAN);
    let expected = -2.0 * std::f64::consts::PI.powi(2) * lhs_minus_rhs;
    let scale = analytic_integral.abs().max(expected.abs()).max(1.0);
    assert!(
        (analytic_integral - expected).abs() <= 1e-8 * scale,
        "normalization bridge broken: analytic {analytic_integral:.6e} vs lattice {expected:.6e}"
    );

    if !integrability.satisfied {
        return Err(PipelineError::IntegrabilityViolated {
            analytic: analytic_integral,
            lattice: integrability.residual.clone(),
        });
    }

    // center the (tiny, rounding-level) mean so the solver's convention holds
    let mu = mu_raw.add_scalar(-mu_raw.mean());

    Ok(GeometrySynthesis {
        w,
        ansatz,
        potential,
        rho,
        mu,
        f_matrix,
        analytic_integral,
        integrability,
    })
}

impl GeometrySynthesis {
    /// Package the synthesized fields for the solver.
    pub fn equation_data(&self, sign_rho: f64) -> Result<EquationData, PipelineError> {
        EquationData::new(self.rho.clone(), self.mu.clone(), self.alpha_f(), sign_rho)
            .map_err(PipelineError::Solver)
    }

    pub fn alpha_f(&self) -> f64 {
        crate::lattice::parse_rat(&self.integrability.alpha_prime)
            .map(|r| *r.numer() as f64 / *r.denom() as f64)
            .unwrap_or(f64::NAN)
    }
}
