//! Differential forms on the torus base with spectral scalar coefficients.
//!
//! [`BaseForm`] is homogeneous of bidegree (p,q); [`MixedForm`] collects
//! several bidegrees (needed because `d` and conjugation mix them).

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::FieldError;
use crate::exterior::{self, star_matrix, wedge_monomial, TOP_TO_VOL};
use crate::grid::{PeriodicGrid, ScalarField};

#[derive(Debug, Clone)]
pub struct BaseForm {
    p: u8,
    q: u8,
    grid: PeriodicGrid,
    /// One coefficient field per monomial of `exterior::monomials(p, q)`.
    comps: Vec<ScalarField>,
}

impl BaseForm {
    pub fn zero(grid: PeriodicGrid, p: u8, q: u8) -> Self {
        assert!(p <= 2 && q <= 2, "bidegree out of range");
        let comps = (0..exterior::dim(p, q))
            .map(|_| ScalarField::zero(grid))
            .collect();
        BaseForm { p, q, grid, comps }
    }

    pub fn from_components(
        grid: PeriodicGrid,
        p: u8,
        q: u8,
        comps: Vec<ScalarField>,
    ) -> Self {
        assert_eq!(comps.len(), exterior::dim(p, q));
        for c in &comps {
            assert_eq!(c.grid(), grid, "component grid mismatch");
        }
        BaseForm { p, q, grid, comps }
    }

    /// Constant form from monomial coefficients.
    pub fn constant(grid: PeriodicGrid, p: u8, q: u8, coeffs: &[Complex64]) -> Self {
        assert_eq!(coeffs.len(), exterior::dim(p, q));
        BaseForm {
            p,
            q,
            grid,
            comps: coeffs
                .iter()
                .map(|&c| ScalarField::constant(grid, c))
                .collect(),
        }
    }

    /// A scalar function viewed as a (0,0)-form.
    pub fn scalar(f: ScalarField) -> Self {
        BaseForm {
            p: 0,
            q: 0,
            grid: f.grid(),
            comps: vec![f],
        }
    }

    pub fn bidegree(&self) -> (u8, u8) {
        (self.p, self.q)
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.comps
    }

    /// Coefficient of the monomial `(s, t)`.
    pub fn component(&self, s: u8, t: u8) -> &ScalarField {
        let idx = exterior::monomials(self.p, self.q)
            .iter()
            .position(|&m| m == (s, t))
            .expect("monomial not in this bidegree");
        &self.comps[idx]
    }

    pub fn expect_bidegree(&self, p: u8, q: u8) -> Result<(), FieldError> {
        if (self.p, self.q) == (p, q) {
            Ok(())
        } else {
            Err(FieldError::WrongBidegree(p, q, self.p, self.q))
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.p, self.q), (other.p, other.q), "bidegree mismatch");
        BaseForm {
            p: self.p,
            q: self.q,
            grid: self.grid,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        BaseForm {
            p: self.p,
            q: self.q,
            grid: self.grid,
            comps: self.comps.iter().map(|f| f.scale(c)).collect(),
        }
    }

    /// Multiply every coefficient by a scalar field.
    pub fn scale_field(&self, f: &ScalarField) -> Self {
        BaseForm {
            p: self.p,
            q: self.q,
            grid: self.grid,
            comps: self.comps.iter().map(|g| g.mul(f)).collect(),
        }
    }

    /// Complex conjugate, a (q,p)-form; the factor block swap contributes
    /// (-1)^{pq}.
    pub fn conj(&self) -> Self {
        let sign = if (self.p * self.q) % 2 == 1 { -1.0 } else { 1.0 };
        let src = exterior::monomials(self.p, self.q);
        let mut out = BaseForm::zero(self.grid, self.q, self.p);
        let tgt = exterior::monomials(self.q, self.p);
        for (i, &(s, t)) in src.iter().enumerate() {
            let j = tgt.iter().position(|&m| m == (t, s)).unwrap();
            out.comps[j] = self.comps[i].conj().scale(Complex64::new(sign, 0.0));
        }
        out
    }

    /// Holomorphic exterior derivative; errors on bidegree overflow (the
    /// zero form of a clamped degree is never silently returned).
    pub fn del(&self) -> Result<Self, FieldError> {
        self.del_opt().ok_or(FieldError::DegreeOverflow {
            op: "del",
            p: self.p,
            q: self.q,
        })
    }

    /// Anti-holomorphic exterior derivative; errors on bidegree overflow.
    pub fn delbar(&self) -> Result<Self, FieldError> {
        self.delbar_opt().ok_or(FieldError::DegreeOverflow {
            op: "delbar",
            p: self.p,
            q: self.q,
        })
    }

    /// `del`, with `None` when p = 2 (the result is identically zero);
    /// used by [`MixedForm::d`] which may legitimately drop such terms.
    pub fn del_opt(&self) -> Option<Self> {
        if self.p == 2 {
            return None;
        }
        let mut out = BaseForm::zero(self.grid, self.p + 1, self.q);
        let tgt = exterior::monomials(self.p + 1, self.q);
        for (i, &(s, t)) in exterior::monomials(self.p, self.q).iter().enumerate() {
            for zj in 1..=2usize {
                let jm = 1u8 << (zj - 1);
                if let Some(((ns, nt), sign)) = wedge_monomial(jm, 0, s, t) {
                    let k = tgt.iter().position(|&m| m == (ns, nt)).unwrap();
                    let term = self.comps[i].dz(zj).scale(Complex64::new(sign, 0.0));
                    out.comps[k] = out.comps[k].add(&term);
                }
            }
        }
        Some(out)
    }

    pub fn delbar_opt(&self) -> Option<Self> {
        if self.q == 2 {
            return None;
        }
        let mut out = BaseForm::zero(self.grid, self.p, self.q + 1);
        let tgt = exterior::monomials(self.p, self.q + 1);
        for (i, &(s, t)) in exterior::monomials(self.p, self.q).iter().enumerate() {
            for zj in 1..=2usize {
                let jm = 1u8 << (zj - 1);
                if let Some(((ns, nt), sign)) = wedge_monomial(0, jm, s, t) {
                    let k = tgt.iter().position(|&m| m == (ns, nt)).unwrap();
                    let term = self.comps[i].dzbar(zj).scale(Complex64::new(sign, 0.0));
                    out.comps[k] = out.comps[k].add(&term);
                }
            }
        }
        Some(out)
    }

    /// Wedge product; `None` when the result degree exceeds the base.
    pub fn wedge(&self, other: &Self) -> Option<Self> {
        if self.p + other.p > 2 || self.q + other.q > 2 {
            return None;
        }
        let mut out = BaseForm::zero(self.grid, self.p + other.p, self.q + other.q);
        let tgt = exterior::monomials(out.p, out.q);
        for (i, &(s1, t1)) in exterior::monomials(self.p, self.q).iter().enumerate() {
            for (j, &(s2, t2)) in exterior::monomials(other.p, other.q).iter().enumerate() {
                if let Some(((s, t), sign)) = wedge_monomial(s1, t1, s2, t2) {
                    let k = tgt.iter().position(|&m| m == (s, t)).unwrap();
                    let term = self.comps[i]
                        .mul(&other.comps[j])
                        .scale(Complex64::new(sign, 0.0));
                    out.comps[k] = out.comps[k].add(&term);
                }
            }
        }
        Some(out)
    }

    /// Pointwise Hodge star of the Euclidean base metric.
    pub fn star(&self) -> Self {
        let mat = star_matrix(self.p, self.q);
        let (tp, tq) = (2 - self.q, 2 - self.p);
        let mut out = BaseForm::zero(self.grid, tp, tq);
        for (i, row) in mat.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if c.norm() == 0.0 {
                    continue;
                }
                out.comps[i] = out.comps[i].add(&self.comps[j].scale(c));
            }
        }
        out
    }

    /// Density of a (2,2)-form relative to the Euclidean volume form.
    pub fn top_density(&self) -> ScalarField {
        assert_eq!((self.p, self.q), (2, 2), "not a top form");
        self.comps[0].scale(Complex64::new(TOP_TO_VOL, 0.0))
    }

    /// Integral over the torus (only meaningful for (2,2)-forms).
    pub fn integrate(&self) -> Complex64 {
        self.top_density().mean() * self.grid.volume()
    }

    /// Pointwise Hermitian inner product `<self, other>` against the flat
    /// base metric: the density of `self ^ *conj(other)`.
    pub fn inner(&self, other: &Self) -> ScalarField {
        assert_eq!((self.p, self.q), (other.p, other.q), "bidegree mismatch");
        self.wedge(&other.conj().star())
            .expect("inner pairing lands in top degree")
            .top_density()
    }

    /// Metric trace of a (1,1)-form: `f ^ omega_B = (trace) omega_B^2/2`.
    pub fn trace_against(&self) -> ScalarField {
        assert_eq!((self.p, self.q), (1, 1), "trace needs a (1,1)-form");
        // omega_B^2/2 is the volume form, so the trace is the top density.
        self.wedge(&omega_b(self.grid)).unwrap().top_density()
    }

    pub fn max_norm(&self) -> f64 {
        self.comps.iter().map(|f| f.max_abs()).fold(0.0, f64::max)
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.p, self.q), (other.p, other.q));
        self.comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.max_diff(b))
            .fold(0.0, f64::max)
    }
}

/// The flat Kaehler form `omega_B = (i/2)(dz1^dzbar1 + dz2^dzbar2)
/// = dx12 + dx34`.
pub fn omega_b(grid: PeriodicGrid) -> BaseForm {
    let i2 = Complex64::new(0.0, 0.5);
    let z = Complex64::ZERO;
    BaseForm::constant(grid, 1, 1, &[i2, z, z, i2])
}

/// The base volume form `omega_B^2/2 = dx1^dx2^dx3^dx4` as a (2,2)-form.
pub fn vol_form(grid: PeriodicGrid) -> BaseForm {
    BaseForm::constant(grid, 2, 2, &[Complex64::new(1.0 / TOP_TO_VOL, 0.0)])
}

/// Holomorphic (2,0)-form of the base, normalized so the total-space
/// holomorphic 3-form `psi = psi_B ^ theta` has unit norm at u = 0:
/// `psi_B = dz1^dz2 / (2 sqrt 2)` (`||dz1^dz2|| = 2`, `||theta|| = sqrt 2`).
pub fn psi_b(grid: PeriodicGrid) -> BaseForm {
    let c = 1.0 / (2.0 * std::f64::consts::SQRT_2);
    BaseForm::constant(grid, 2, 0, &[Complex64::new(c, 0.0)])
}

/// Inhomogeneous form: sum of homogeneous pieces keyed by bidegree.
#[derive(Debug, Clone)]
pub struct MixedForm {
    grid: PeriodicGrid,
    parts: BTreeMap<(u8, u8), BaseForm>,
}

impl MixedForm {
    pub fn zero(grid: PeriodicGrid) -> Self {
        MixedForm {
            grid,
            parts: BTreeMap::new(),
        }
    }

    pub fn from_base(f: BaseForm) -> Self {
        let mut m = MixedForm::zero(f.grid());
        m.add_part(f);
        m
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    pub fn parts(&self) -> impl Iterator<Item = &BaseForm> {
        self.parts.values()
    }

    pub fn part(&self, p: u8, q: u8) -> Option<&BaseForm> {
        self.parts.get(&(p, q))
    }

    /// The (p,q) piece, materializing zero if absent.
    pub fn part_or_zero(&self, p: u8, q: u8) -> BaseForm {
        self.parts
            .get(&(p, q))
            .cloned()
            .unwrap_or_else(|| BaseForm::zero(self.grid, p, q))
    }

    pub fn add_part(&mut self, f: BaseForm) {
        assert_eq!(f.grid(), self.grid, "grid mismatch");
        let key = f.bidegree();
        match self.parts.remove(&key) {
            Some(existing) => {
                self.parts.insert(key, existing.add(&f));
            }
            None => {
                self.parts.insert(key, f);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for f in other.parts.values() {
            out.add_part(f.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        MixedForm {
            grid: self.grid,
            parts: self
                .parts
                .iter()
                .map(|(&k, f)| (k, f.scale(c)))
                .collect(),
        }
    }

    pub fn scale_field(&self, f: &ScalarField) -> Self {
        MixedForm {
            grid: self.grid,
            parts: self
                .parts
                .iter()
                .map(|(&k, g)| (k, g.scale_field(f)))
                .collect(),
        }
    }

    pub fn conj(&self) -> Self {
        let mut out = MixedForm::zero(self.grid);
        for f in self.parts.values() {
            out.add_part(f.conj());
        }
        out
    }

    /// Scale each homogeneous piece by (-1)^{degree}; the graded sign that
    /// appears when a derivative or fiber factor moves across this form.
    pub fn alternate_sign(&self) -> Self {
        MixedForm {
            grid: self.grid,
            parts: self
                .parts
                .iter()
                .map(|(&(p, q), f)| {
                    let s = if (p + q) % 2 == 1 { -1.0 } else { 1.0 };
                    ((p, q), f.scale(Complex64::new(s, 0.0)))
                })
                .collect(),
        }
    }

    pub fn del(&self) -> Self {
        let mut out = MixedForm::zero(self.grid);
        for f in self.parts.values() {
            if let Some(d) = f.del_opt() {
                out.add_part(d);
            }
        }
        out
    }

    pub fn delbar(&self) -> Self {
        let mut out = MixedForm::zero(self.grid);
        for f in self.parts.values() {
            if let Some(d) = f.delbar_opt() {
                out.add_part(d);
            }
        }
        out
    }

    pub fn d(&self) -> Self {
        self.del().add(&self.delbar())
    }

    pub fn wedge(&self, other: &Self) -> Self {
        let mut out = MixedForm::zero(self.grid);
        for a in self.parts.values() {
            for b in other.parts.values() {
                if let Some(w) = a.wedge(b) {
                    out.add_part(w);
                }
            }
        }
        out
    }

    /// Sum of total integrals (only the (2,2) piece contributes).
    pub fn integrate(&self) -> Complex64 {
        self.parts
            .get(&(2, 2))
            .map(|f| f.integrate())
            .unwrap_or(Complex64::ZERO)
    }

    pub fn top_density(&self) -> ScalarField {
        self.part_or_zero(2, 2).top_density()
    }

    pub fn max_norm(&self) -> f64 {
        self.parts.values().map(|f| f.max_norm()).fold(0.0, f64::max)
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        self.sub(other).max_norm()
    }
}
