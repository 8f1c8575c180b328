//! Forms on the total space of the T^2-bundle over the torus base.
//!
//! The fiber coframe {theta, thetabar} never exists globally; only
//! `d theta = W` (a closed, primitive, anti-self-dual basic (1,1)-form) is
//! global data. A [`FiberedForm`] therefore stores base-form coefficients of
//! the fiber monomials 1, theta, thetabar, theta^thetabar, and `d` acts by
//! the substitution `d theta -> W`, `d thetabar -> conj(W)`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::FieldError;
use crate::forms::{omega_b, psi_b, BaseForm, MixedForm};
use crate::grid::{PeriodicGrid, ScalarField};

/// `F = a + b^theta + c^thetabar + e^theta^thetabar`, base coefficients on
/// the left of the fiber monomials.
#[derive(Debug, Clone)]
pub struct FiberedForm {
    pub a: MixedForm,
    pub b: MixedForm,
    pub c: MixedForm,
    pub e: MixedForm,
}

impl FiberedForm {
    pub fn zero(grid: PeriodicGrid) -> Self {
        FiberedForm {
            a: MixedForm::zero(grid),
            b: MixedForm::zero(grid),
            c: MixedForm::zero(grid),
            e: MixedForm::zero(grid),
        }
    }

    pub fn from_base(a: MixedForm) -> Self {
        let mut f = FiberedForm::zero(a.grid());
        f.a = a;
        f
    }

    /// `b ^ theta`.
    pub fn theta_times(b: MixedForm) -> Self {
        let mut f = FiberedForm::zero(b.grid());
        f.b = b;
        f
    }

    /// The fiber area form `chi = (i/2) theta ^ thetabar`.
    pub fn chi(grid: PeriodicGrid) -> Self {
        let mut f = FiberedForm::zero(grid);
        f.e = MixedForm::from_base(BaseForm::scalar(ScalarField::constant(
            grid,
            Complex64::new(0.0, 0.5),
        )));
        f
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.a.grid()
    }

    pub fn add(&self, other: &Self) -> Self {
        FiberedForm {
            a: self.a.add(&other.a),
            b: self.b.add(&other.b),
            c: self.c.add(&other.c),
            e: self.e.add(&other.e),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, k: Complex64) -> Self {
        FiberedForm {
            a: self.a.scale(k),
            b: self.b.scale(k),
            c: self.c.scale(k),
            e: self.e.scale(k),
        }
    }

    pub fn scale_field(&self, f: &ScalarField) -> Self {
        FiberedForm {
            a: self.a.scale_field(f),
            b: self.b.scale_field(f),
            c: self.c.scale_field(f),
            e: self.e.scale_field(f),
        }
    }

    /// Conjugation swaps the theta and thetabar slots; conj(theta^thetabar)
    /// = -theta^thetabar.
    pub fn conj(&self) -> Self {
        FiberedForm {
            a: self.a.conj(),
            b: self.c.conj(),
            c: self.b.conj(),
            e: self.e.conj().scale(Complex64::new(-1.0, 0.0)),
        }
    }

    /// Exterior derivative with the substitution `d theta = W`,
    /// `d thetabar = conj(W)`; base coefficients pick up graded signs when
    /// the substituted 2-form crosses them:
    ///   d(b^theta)          = db^theta + (-1)^|b| b^W
    ///   d(c^thetabar)       = dc^thetabar + (-1)^|c| c^Wbar
    ///   d(e^theta^thetabar) = de^theta^thetabar
    ///                         + (-1)^|e| e^W^thetabar - (-1)^|e| e^Wbar^theta
    pub fn d_total(&self, w: &BaseForm) -> Self {
        let wm = MixedForm::from_base(w.clone());
        let wbar = MixedForm::from_base(w.conj());
        let mut out = FiberedForm::zero(self.grid());
        out.a = self
            .a
            .d()
            .add(&self.b.alternate_sign().wedge(&wm))
            .add(&self.c.alternate_sign().wedge(&wbar));
        out.b = self.b.d().sub(&self.e.alternate_sign().wedge(&wbar));
        out.c = self.c.d().add(&self.e.alternate_sign().wedge(&wm));
        out.e = self.e.d();
        out
    }

    /// Wedge product; fiber monomials square to zero, and moving theta or
    /// thetabar across a base form costs (-1)^{degree}.
    pub fn wedge(&self, other: &Self) -> Self {
        let (f, g) = (self, other);
        let ga_alt = g.a.alternate_sign();
        let mut out = FiberedForm::zero(self.grid());
        out.a = f.a.wedge(&g.a);
        out.b = f.a.wedge(&g.b).add(&f.b.wedge(&ga_alt));
        out.c = f.a.wedge(&g.c).add(&f.c.wedge(&ga_alt));
        // theta^thetabar crosses g.a twice: no net sign on e1 ^ a2.
        out.e = f
            .a
            .wedge(&g.e)
            .add(&f.e.wedge(&g.a))
            .add(&f.b.wedge(&g.c.alternate_sign()))
            .sub(&f.c.wedge(&g.b.alternate_sign()));
        out
    }

    pub fn max_norm(&self) -> f64 {
        [&self.a, &self.b, &self.c, &self.e]
            .iter()
            .map(|m| m.max_norm())
            .fold(0.0, f64::max)
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        self.sub(other).max_norm()
    }
}

/// Validated geometric data of the ansatz: the flat base plus a prescribed
/// `d theta = W` that is closed, primitive, and anti-self-dual.
#[derive(Debug, Clone)]
pub struct AnsatzData {
    grid: PeriodicGrid,
    w: BaseForm,
}

pub const STRUCT_TOL: f64 = 1e-10;

impl AnsatzData {
    pub fn new(w: BaseForm) -> Result<Self, FieldError> {
        w.expect_bidegree(1, 1)?;
        let grid = w.grid();
        let wm = MixedForm::from_base(w.clone());
        let dw = wm.d().max_norm();
        let scale = w.max_norm().max(1.0);
        if dw > STRUCT_TOL * scale {
            return Err(FieldError::NotClosed(dw, STRUCT_TOL * scale));
        }
        let re = w.add(&w.conj()).scale(Complex64::new(0.5, 0.0));
        let im = w.sub(&w.conj()).scale(Complex64::new(0.0, -0.5));
        for part in [&re, &im] {
            let tr = part.trace_against().max_abs();
            if tr > STRUCT_TOL * scale {
                return Err(FieldError::NotPrimitive(tr, STRUCT_TOL * scale));
            }
            let asd = part.star().add(part).max_norm();
            if asd > STRUCT_TOL * scale {
                return Err(FieldError::NotAntiSelfDual(asd, STRUCT_TOL * scale));
            }
        }
        Ok(AnsatzData { grid, w })
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    pub fn w(&self) -> &BaseForm {
        &self.w
    }

    /// Real part `omega_1` of `W = omega_1 + i omega_2`.
    pub fn w_re(&self) -> BaseForm {
        self.w.add(&self.w.conj()).scale(Complex64::new(0.5, 0.0))
    }

    pub fn w_im(&self) -> BaseForm {
        self.w.sub(&self.w.conj()).scale(Complex64::new(0.0, -0.5))
    }
}

/// `omega_u = e^u omega_B + chi` with `chi = (i/2) theta ^ thetabar`.
pub fn build_omega_u(u: &ScalarField) -> FiberedForm {
    let grid = u.grid();
    let eu = u.exp();
    let base = MixedForm::from_base(omega_b(grid).scale_field(&eu));
    FiberedForm::from_base(base).add(&FiberedForm::chi(grid))
}

/// The holomorphic 3-form `psi = psi_B ^ theta`, unit norm at u = 0.
pub fn psi_total(grid: PeriodicGrid) -> FiberedForm {
    FiberedForm::theta_times(MixedForm::from_base(psi_b(grid)))
}

/// Squared norm of psi in the metric omega_u, computed from first
/// principles as `psi ^ conj(psi) / (-i omega_u^3 / 6)` and asserted to
/// match `e^{-2u}` to 1e-9 relative.
pub fn psi_norm(u: &ScalarField) -> ScalarField {
    let grid = u.grid();
    let psi = psi_total(grid);
    let num = psi.wedge(&psi.conj()).e.top_density();
    let omega = build_omega_u(u);
    let den = omega
        .wedge(&omega)
        .wedge(&omega)
        .e
        .top_density()
        .scale(Complex64::new(0.0, -1.0) / 6.0);
    let ratio = num.zip(&den, |a, b| a / b);
    let closed_form = u.scale(Complex64::new(-2.0, 0.0)).exp();
    let rel = ratio.max_diff(&closed_form) / closed_form.max_abs();
    assert!(
        rel < 1e-9,
        "first-principles psi norm deviates from e^(-2u) by {rel:.3e}"
    );
    ratio
}

/// Named structural residuals of the ansatz; all vanish (to discretization
/// accuracy) exactly when the data is admissible.
#[derive(Debug, Clone, Serialize)]
pub struct StructureReport {
    pub n: usize,
    /// |d omega_B| (identically zero for the constant flat form).
    pub d_omega_b: f64,
    /// |omega_B ^ W| - primitivity of the bundle curvature class.
    pub primitivity: f64,
    /// |d(omega_0^2)| at u = 0 - the balanced condition.
    pub balanced: f64,
    /// |d(||psi|| omega_u^2)| with conformal factor sqrt(psi_norm) = e^{-u}.
    pub conformally_balanced: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn structure_residuals(u: &ScalarField, data: &AnsatzData) -> StructureReport {
    let grid = data.grid();
    let d_omega_b = MixedForm::from_base(omega_b(grid)).d().max_norm();
    let primitivity = data
        .w()
        .wedge(&omega_b(grid))
        .map(|f| f.max_norm())
        .unwrap_or(0.0);

    let zero_u = ScalarField::zero(grid);
    let omega0 = build_omega_u(&zero_u);
    let balanced = omega0.wedge(&omega0).d_total(data.w()).max_norm();

    let omega_u = build_omega_u(u);
    let factor = psi_norm(u).map(|v| v.sqrt());
    let conf = omega_u
        .wedge(&omega_u)
        .scale_field(&factor)
        .d_total(data.w())
        .max_norm();

    let tolerance = 1e-8;
    StructureReport {
        n: grid.n(),
        d_omega_b,
        primitivity,
        balanced,
        conformally_balanced: conf,
        tolerance,
        pass: d_omega_b <= tolerance
            && primitivity <= tolerance
            && balanced <= tolerance
            && conf <= tolerance,
    }
}
