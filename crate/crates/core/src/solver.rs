//! Continuity-method Newton solver for the reduced scalar anomaly equation
//! on the flat base:
//!
//! ```text
//! i del delbar e^u ^ omega_B  +  sign_rho t alpha i del delbar(e^{-u} rho)
//!   - (alpha/2) del delbar u ^ del delbar u  +  t mu omega_B^2/2  =  0
//! ```
//!
//! The unknown u is a real scalar on the base grid; each Newton step solves
//! the linearized equation with GMRES preconditioned by the inverse of the
//! constant-coefficient symbol, then shifts u by a constant so that
//! `integrate(e^u vol) = A_norm` (the volume normalization that removes the
//! constant kernel direction).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FieldError, SolverError};
use crate::forms::{omega_b, BaseForm};
use crate::grid::{PeriodicGrid, ScalarField};

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Data of one reduced equation: the rho form, the source density mu
/// (measured against omega_B^2/2), the slope alpha, and the sign convention
/// for the rho term.
#[derive(Debug, Clone)]
pub struct EquationData {
    rho: BaseForm,
    mu: ScalarField,
    alpha: f64,
    sign_rho: f64,
}

/// Default sign of the rho term, chosen so that data assembled from bundle
/// geometry satisfies the anomaly equation (see the conventions report).
pub const SIGN_RHO_DEFAULT: f64 = -1.0;

impl EquationData {
    pub fn new(
        rho: BaseForm,
        mu: ScalarField,
        alpha: f64,
        sign_rho: f64,
    ) -> Result<Self, SolverError> {
        rho.expect_bidegree(1, 1).map_err(SolverError::Field)?;
        assert!(sign_rho == 1.0 || sign_rho == -1.0, "sign_rho must be +-1");
        let dev = rho.conj().max_diff(&rho);
        if dev > 1e-10 * rho.max_norm().max(1.0) {
            return Err(SolverError::Field(FieldError::NotReal(dev)));
        }
        mu.ensure_real().map_err(SolverError::Field)?;
        let rel_mean = mu.mean().norm() / mu.max_abs().max(1e-300);
        if mu.max_abs() > 0.0 && rel_mean > 1e-10 {
            return Err(SolverError::NonzeroMean(rel_mean));
        }
        Ok(EquationData { rho, mu, alpha, sign_rho })
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.mu.grid()
    }

    pub fn rho(&self) -> &BaseForm {
        &self.rho
    }

    pub fn mu(&self) -> &ScalarField {
        &self.mu
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sign_rho(&self) -> f64 {
        self.sign_rho
    }
}

/// Solver controls. `tau` also answers to the alias `gamma`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    pub delta: f64,
    #[serde(alias = "gamma")]
    pub tau: f64,
    pub a_norm: f64,
    pub t_steps: usize,
    pub newton_tol: f64,
    pub max_newton: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            delta: 1e-2,
            tau: 1e-2,
            // large enough that the constant initial u clears delta = 1e-2
            a_norm: 16.0 * crate::grid::TAU.powi(4),
            t_steps: 10,
            newton_tol: 1e-10,
            max_newton: 25,
        }
    }
}

/// State of one converged (or monitored) solve.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub u: ScalarField,
    pub t: f64,
    pub residual_norm: f64,
    pub in_upsilon: bool,
    pub omega_positive: bool,
    pub newton_iterations: usize,
}

/// One continuation step of the trace.
#[derive(Debug, Clone, Serialize)]
pub struct StepTrace {
    pub t: f64,
    pub residual_norm: f64,
    pub newton_iterations: usize,
}

/// `del delbar u` as a (1,1)-form (so `i del delbar u` is `I` times this).
fn ddbar(u: &ScalarField) -> BaseForm {
    BaseForm::scalar(u.clone())
        .delbar()
        .expect("scalar delbar")
        .del()
        .expect("(0,1) del")
}

/// `i del delbar` of a (1,1)-form, landing in top degree.
fn i_ddbar_form(f: &BaseForm) -> BaseForm {
    f.delbar()
        .expect("(1,1) delbar")
        .del()
        .expect("(1,2) del")
        .scale(I)
}

/// The residual density r with `r omega_B^2/2` equal to the equation's left
/// side; mean-zero for any u by the divergence structure.
pub fn residual(u: &ScalarField, data: &EquationData, t: f64) -> ScalarField {
    let grid = u.grid();
    let om = omega_b(grid);
    let eu = u.exp();
    // i del delbar e^u ^ omega_B
    let lead = ddbar(&eu).scale(I).wedge(&om).expect("top").top_density();
    // sign_rho t alpha i del delbar(e^{-u} rho)
    let emu = u.neg().exp();
    let rho_term = i_ddbar_form(&data.rho.scale_field(&emu))
        .scale(re(data.sign_rho * t * data.alpha))
        .top_density();
    // -(alpha/2) del delbar u ^ del delbar u
    let h = ddbar(u);
    let hess = h
        .wedge(&h)
        .expect("top")
        .scale(re(-data.alpha / 2.0))
        .top_density();
    lead.add(&rho_term).add(&hess).add(&data.mu.scale(re(t)))
}

/// Back-compute mu so that the equation is satisfied exactly by `u_star`
/// at t = 1 (with the default rho sign); errors if the computed mu fails
/// the mean-zero structure.
pub fn manufacture(
    u_star: &ScalarField,
    rho: &BaseForm,
    alpha: f64,
) -> Result<EquationData, SolverError> {
    let zero_mu = EquationData {
        rho: rho.clone(),
        mu: ScalarField::zero(u_star.grid()),
        alpha,
        sign_rho: SIGN_RHO_DEFAULT,
    };
    let mu = residual(u_star, &zero_mu, 1.0).neg().real_part();
    let rel_mean = mu.mean().norm() / mu.max_abs().max(1e-300);
    if mu.max_abs() > 0.0 && rel_mean > 1e-8 {
        return Err(SolverError::NonzeroMean(rel_mean));
    }
    EquationData::new(rho.clone(), mu, alpha, SIGN_RHO_DEFAULT)
}

/// The linearization of [`residual`] at `u0`: an applicable map
/// `v -> d/de residual(u0 + e v)|_{e=0}`.
pub struct LinearizedOperator {
    grid: PeriodicGrid,
    eu0: ScalarField,
    /// e^{-u0} rho
    rho0: BaseForm,
    ddbar_u0: BaseForm,
    alpha: f64,
    sign_rho: f64,
    t: f64,
}

pub fn linearize(u0: &ScalarField, data: &EquationData, t: f64) -> LinearizedOperator {
    LinearizedOperator {
        grid: u0.grid(),
        eu0: u0.exp(),
        rho0: data.rho.scale_field(&u0.neg().exp()),
        ddbar_u0: ddbar(u0),
        alpha: data.alpha,
        sign_rho: data.sign_rho,
        t,
    }
}

impl LinearizedOperator {
    pub fn apply(&self, v: &ScalarField) -> ScalarField {
        let om = omega_b(self.grid);
        // i del delbar(v e^{u0}) ^ omega_B
        let lead = ddbar(&v.mul(&self.eu0))
            .scale(I)
            .wedge(&om)
            .expect("top")
            .top_density();
        // -sign_rho t alpha i del delbar(v e^{-u0} rho)
        let rho_term = i_ddbar_form(&self.rho0.scale_field(v))
            .scale(re(-self.sign_rho * self.t * self.alpha))
            .top_density();
        // -alpha del delbar v ^ del delbar u0
        let hess = ddbar(v)
            .wedge(&self.ddbar_u0)
            .expect("top")
            .scale(re(-self.alpha))
            .top_density();
        lead.add(&rho_term).add(&hess)
    }
}

/// Admissibility monitors: (max e^{-2u} < delta,
/// pointwise |alpha| ||i del delbar u|| < e^u tau).
pub fn upsilon_check(u: &ScalarField, alpha: f64, params: &SolverParams) -> (bool, bool) {
    let flag1 = u.scale(re(-2.0)).exp().max_abs() < params.delta;
    let h = ddbar(u);
    // pointwise metric norm of the complex Hessian form
    let norm2 = h.inner(&h);
    let eu = u.exp();
    let flag2 = norm2
        .data()
        .iter()
        .zip(eu.data())
        .all(|(n2, e)| alpha.abs() * n2.re.max(0.0).sqrt() < e.re * params.tau);
    (flag1, flag2)
}

/// Positivity of the base part of the comparison form
/// `e^u omega_B + sign_rho t alpha e^{-u} rho + alpha i del delbar u`
/// via its Hermitian coefficient matrix.
pub fn comparison_form_positive(u: &ScalarField, data: &EquationData, t: f64) -> bool {
    let grid = u.grid();
    let form = omega_b(grid)
        .scale_field(&u.exp())
        .add(
            &data
                .rho
                .scale_field(&u.neg().exp())
                .scale(re(data.sign_rho * t * data.alpha)),
        )
        .add(&ddbar(u).scale(I).scale(re(data.alpha)));
    // omega = i sum H_{jk} dz_j ^ dzbar_k, H Hermitian for a real form
    let mut entries = Vec::with_capacity(4);
    for j in 0..2u8 {
        for k in 0..2u8 {
            entries.push(form.component(1 << j, 1 << k).scale(-I));
        }
    }
    crate::chern::MatrixField::from_entries(grid, 2, entries)
        .check_positive_definite()
        .is_ok()
}

/// Shift u by the constant making `integrate(e^u vol) = a_norm`.
fn normalize(u: &ScalarField, a_norm: f64) -> ScalarField {
    let total = u.exp().mean().re * u.grid().volume();
    u.add_scalar(re((a_norm / total).ln()))
}

/// Right-preconditioned GMRES on mean-zero fields. The preconditioner is
/// the exact inverse of the constant-coefficient symbol of the leading
/// term, `v -> e^{mean u0} (Delta/2) v`, applied spectrally.
fn gmres_solve(
    op: &LinearizedOperator,
    rhs: &ScalarField,
    eu_mean: f64,
    tol: f64,
    max_iter: usize,
) -> Result<ScalarField, SolverError> {
    let grid = rhs.grid();
    let precond = |f: &ScalarField| -> ScalarField {
        // leading symbol: i ddbar(v e^{u}) ^ omega_B ~ e^{mean u} Delta v / 2
        // and the complex Laplacian solver inverts Delta/4
        f.scale(re(0.5 / eu_mean)).solve_complex_laplacian().dealias()
    };
    let dot = |a: &ScalarField, b: &ScalarField| -> Complex64 {
        a.data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| x.conj() * y)
            .sum()
    };
    let norm = |a: &ScalarField| -> f64 { dot(a, a).re.sqrt() };

    let b_norm = norm(rhs);
    if b_norm == 0.0 {
        return Ok(ScalarField::zero(grid));
    }
    let mut basis: Vec<ScalarField> = vec![rhs.scale(re(1.0 / b_norm))];
    let m = max_iter;
    let mut h = vec![vec![Complex64::ZERO; m]; m + 1];
    // Givens-rotated residual vector
    let mut g = vec![Complex64::ZERO; m + 1];
    g[0] = re(b_norm);
    let mut cs = vec![Complex64::ZERO; m];
    let mut sn = vec![Complex64::ZERO; m];
    let mut iters = 0;
    for j in 0..m {
        iters = j + 1;
        let mut w = op.apply(&precond(&basis[j]));
        // stay in the mean-zero subspace (rounding drift only)
        let wm = w.mean();
        w = w.add_scalar(-wm);
        for (i, q) in basis.iter().enumerate() {
            h[i][j] = dot(q, &w);
            w = w.sub(&q.scale(h[i][j]));
        }
        let hb = norm(&w);
        h[j + 1][j] = re(hb);
        // apply accumulated rotations to the new column
        for i in 0..j {
            let tmp = cs[i].conj() * h[i][j] + sn[i].conj() * h[i + 1][j];
            h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
            h[i][j] = tmp;
        }
        let r = (h[j][j].norm_sqr() + h[j + 1][j].norm_sqr()).sqrt();
        if r > 0.0 {
            cs[j] = h[j][j] / r;
            sn[j] = h[j + 1][j] / r;
            h[j][j] = re(r);
            h[j + 1][j] = Complex64::ZERO;
            let tmp = cs[j].conj() * g[j];
            g[j + 1] = -sn[j] * g[j];
            g[j] = tmp;
        }
        let res = g[j + 1].norm() / b_norm;
        if res <= tol || hb == 0.0 {
            break;
        }
        if j + 1 < m {
            basis.push(w.scale(re(1.0 / hb)));
        }
    }
    let k = iters;
    let final_res = g[k].norm() / b_norm;
    if final_res > 0.5 {
        return Err(SolverError::LinearStalled(final_res, k));
    }
    // back-substitute the triangular system
    let mut y = vec![Complex64::ZERO; k];
    for i in (0..k).rev() {
        let mut s = g[i];
        for l in i + 1..k {
            s -= h[i][l] * y[l];
        }
        y[i] = s / h[i][i];
    }
    let mut z = ScalarField::zero(grid);
    for (i, q) in basis.iter().take(k).enumerate() {
        z = z.add(&q.scale(y[i]));
    }
    Ok(precond(&z))
}

fn upsilon_failure(flags: (bool, bool)) -> Option<String> {
    match flags {
        (true, true) => None,
        (false, _) => Some("e^{-2u} < delta violated".to_string()),
        (_, false) => Some("|alpha| ||i del delbar u|| < e^u tau violated".to_string()),
    }
}

/// One Newton solve at fixed t, with monitors.
pub fn solve_at_t(
    u_init: &ScalarField,
    data: &EquationData,
    t: f64,
    params: &SolverParams,
) -> Result<SolverState, SolverError> {
    let mut u = normalize(&u_init.real_part().dealias(), params.a_norm);
    let mut iterations = 0;
    loop {
        let flags = upsilon_check(&u, data.alpha, params);
        if let Some(which) = upsilon_failure(flags) {
            return Err(SolverError::LeftUpsilon { t, which });
        }
        if !comparison_form_positive(&u, data, t) {
            return Err(SolverError::ComparisonNotPositive { t });
        }
        // Galerkin convergence measure: the resolved-band residual. Mixed
        // second derivatives leak Nyquist-band content of e^u into the raw
        // residual; no resolved u can control it, and it vanishes spectrally
        // with the grid size.
        let r = residual(&u, data, t).dealias();
        let rn = r.max_abs();
        if rn <= params.newton_tol {
            return Ok(SolverState {
                u,
                t,
                residual_norm: rn,
                in_upsilon: true,
                omega_positive: true,
                newton_iterations: iterations,
            });
        }
        if iterations >= params.max_newton {
            return Err(SolverError::NewtonStalled {
                max: params.max_newton,
                residual: rn,
                t,
            });
        }
        let op = linearize(&u, data, t);
        let rhs = r.neg();
        let rhs = rhs.add_scalar(-rhs.mean()); // exact mean-zero projection
        let eu_mean = u.exp().mean().re;
        let v = gmres_solve(&op, &rhs, eu_mean, 1e-10, 60)?;
        u = normalize(&u.add(&v).real_part(), params.a_norm);
        iterations += 1;
    }
}

/// March t over a uniform grid from 0 to 1, reusing each converged u, with
/// one halving retry per step; returns the t = 1 state and the trace.
pub fn continuity_solve(
    data: &EquationData,
    params: &SolverParams,
) -> Result<(SolverState, Vec<StepTrace>), SolverError> {
    let grid = data.grid();
    let mut u = normalize(&ScalarField::zero(grid), params.a_norm);
    let flags = upsilon_check(&u, data.alpha, params);
    if let Some(which) = upsilon_failure(flags) {
        return Err(SolverError::BadInitialSet(which));
    }
    let mut trace = Vec::new();
    let mut state = solve_at_t(&u, data, 0.0, params)?;
    trace.push(StepTrace {
        t: 0.0,
        residual_norm: state.residual_norm,
        newton_iterations: state.newton_iterations,
    });
    u = state.u.clone();
    let mut u_prev: Option<ScalarField> = None;
    let mut t = 0.0;
    for k in 1..=params.t_steps {
        let t_next = k as f64 / params.t_steps as f64;
        // secant predictor: extrapolate along the continuation path so
        // Newton starts within its quadratic basin
        let guess = match &u_prev {
            Some(p) => u.add(&u.sub(p)),
            None => u.clone(),
        };
        state = match solve_at_t(&guess, data, t_next, params) {
            Ok(s) => s,
            Err(_) => {
                // one retry through the midpoint of the failing increment
                let t_mid = 0.5 * (t + t_next);
                let mid = solve_at_t(&u, data, t_mid, params)?;
                trace.push(StepTrace {
                    t: t_mid,
                    residual_norm: mid.residual_norm,
                    newton_iterations: mid.newton_iterations,
                });
                solve_at_t(&mid.u, data, t_next, params)?
            }
        };
        trace.push(StepTrace {
            t: t_next,
            residual_norm: state.residual_norm,
            newton_iterations: state.newton_iterations,
        });
        u_prev = Some(u);
        u = state.u.clone();
        t = t_next;
    }
    Ok((state, trace))
}

/// Direct oracle at alpha = 0: the equation is linear in e^u
/// (`Delta e^u / 2 = -t mu`), solved spectrally with the additive constant
/// fixed by the volume normalization.
pub fn linear_oracle_alpha_zero(
    data: &EquationData,
    t: f64,
    a_norm: f64,
) -> Result<ScalarField, SolverError> {
    assert_eq!(data.alpha, 0.0, "oracle requires alpha = 0");
    let grid = data.grid();
    // lap_c w = Delta w / 4 = -t mu / 2
    let w = data.mu.scale(re(-t / 2.0)).solve_complex_laplacian();
    let c = a_norm / grid.volume() - w.mean().re;
    let eu = w.add_scalar(re(c)).real_part();
    if eu.data().iter().any(|v| v.re <= 0.0) {
        return Err(SolverError::BadInitialSet(
            "linear oracle produced a non-positive conformal factor".to_string(),
        ));
    }
    Ok(eu.map(|v| re(v.re.ln())))
}
