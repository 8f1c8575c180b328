//! Exact intersection arithmetic on the Picard lattice of a K3 orbifold
//! blown up at A1 points.
//!
//! The lattice is generated by the ample class `H` (self-intersection
//! `h_self`, possibly fractional for weighted hypersurfaces) and the
//! exceptional (-2)-curves `E_1..E_k` of the blown-up points, so the Gram
//! matrix is `diag(h_self, -2, ..., -2)`. Everything in this module is
//! exact rational arithmetic; no floating point.

use num::rational::Rational64;
use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::LatticeError;

pub type Rat = Rational64;

/// Parse a rational from `"p/q"` or a plain integer string.
pub fn parse_rat(s: &str) -> Result<Rat, LatticeError> {
    let s = s.trim();
    let bad = || LatticeError::BadRational(s.to_string());
    match s.split_once('/') {
        Some((p, q)) => {
            let p: i64 = p.trim().parse().map_err(|_| bad())?;
            let q: i64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0 {
                return Err(bad());
            }
            Ok(Rat::new(p, q))
        }
        None => {
            let p: i64 = s.parse().map_err(|_| bad())?;
            Ok(Rat::from_integer(p))
        }
    }
}

/// Render a rational as `"p/q"` (or `"p"` when integral).
pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Serde bridge: rationals cross JSON as `"p/q"` strings.
pub mod rat_serde {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    use super::{format_rat, parse_rat, Rat};

    pub fn serialize<S: Serializer>(r: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rat(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        let s = String::deserialize(d)?;
        parse_rat(&s).map_err(D::Error::custom)
    }
}

/// Same bridge for vectors of rationals.
pub mod rat_vec_serde {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    use super::{format_rat, parse_rat, Rat};

    pub fn serialize<S: Serializer>(v: &[Rat], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(format_rat))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rat>, D::Error> {
        let strs = Vec::<String>::deserialize(d)?;
        strs.iter().map(|s| parse_rat(s).map_err(D::Error::custom)).collect()
    }
}

/// A compact 2-orbifold with isolated A1 singularities and ample class `H`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbifoldSurface {
    pub name: String,
    /// Rank of `H^2(X, Q)`; equals `22 - num_a1` for K3 orbifolds with only
    /// A1 points.
    pub b2_orb: u32,
    pub num_a1: u32,
    /// Self-intersection `H.H` of the ample divisor.
    #[serde(with = "rat_serde")]
    pub h_self: Rat,
}

impl OrbifoldSurface {
    pub fn new(name: impl Into<String>, num_a1: u32, h_self: Rat) -> Result<Self, LatticeError> {
        if num_a1 > 22 {
            return Err(LatticeError::TooManySingularPoints(num_a1));
        }
        if h_self <= Rat::zero() {
            return Err(LatticeError::NonPositiveSelfIntersection(format_rat(&h_self)));
        }
        Ok(OrbifoldSurface {
            name: name.into(),
            b2_orb: 22 - num_a1,
            num_a1,
            h_self,
        })
    }
}

/// The Picard lattice of the blow-up of `base` at `k_blown` of its A1 points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlowupLattice {
    pub base: OrbifoldSurface,
    pub k_blown: u32,
}

impl BlowupLattice {
    pub fn new(base: OrbifoldSurface, k_blown: u32) -> Result<Self, LatticeError> {
        if k_blown > base.num_a1 {
            return Err(LatticeError::BlowupCount {
                k_blown,
                num_a1: base.num_a1,
            });
        }
        Ok(BlowupLattice { base, k_blown })
    }

    /// Rank of the lattice: `H` plus one exceptional curve per blown-up point.
    pub fn dim(&self) -> usize {
        1 + self.k_blown as usize
    }

    pub fn h_self(&self) -> Rat {
        self.base.h_self
    }
}

/// A divisor class with exact rational coefficients over `{H, E_1, .., E_k}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DivisorClass {
    #[serde(with = "rat_vec_serde")]
    pub coeffs: Vec<Rat>,
}

impl DivisorClass {
    pub fn new(coeffs: Vec<Rat>) -> Self {
        DivisorClass { coeffs }
    }

    /// `H` in a lattice of the given dimension.
    pub fn h(dim: usize) -> Self {
        let mut coeffs = vec![Rat::zero(); dim];
        coeffs[0] = Rat::one();
        DivisorClass { coeffs }
    }

    /// `E_i` (1-based) in a lattice of the given dimension.
    pub fn e(i: usize, dim: usize) -> Self {
        assert!(i >= 1 && i < dim, "exceptional index out of range");
        let mut coeffs = vec![Rat::zero(); dim];
        coeffs[i] = Rat::one();
        DivisorClass { coeffs }
    }

    pub fn scaled(&self, c: Rat) -> Self {
        DivisorClass {
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.coeffs.len(), other.coeffs.len());
        DivisorClass {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn pretty(&self) -> String {
        let mut out = String::new();
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let name = if i == 0 {
                "H".to_string()
            } else {
                format!("E{}", i)
            };
            let mag = c.abs();
            let term = if mag.is_one() {
                name
            } else {
                format!("{}{}", format_rat(&mag), name)
            };
            if out.is_empty() {
                if c.is_negative() {
                    out.push('-');
                }
            } else if c.is_negative() {
                out.push_str(" - ");
            } else {
                out.push_str(" + ");
            }
            out.push_str(&term);
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }
}

/// Intersection product `D1 . D2` against the Gram matrix
/// `diag(h_self, -2, ..., -2)`.
pub fn intersect(d1: &DivisorClass, d2: &DivisorClass, lat: &BlowupLattice) -> Result<Rat, LatticeError> {
    let dim = lat.dim();
    if d1.coeffs.len() != dim || d2.coeffs.len() != dim {
        return Err(LatticeError::DimensionMismatch {
            lattice: dim,
            d1: d1.coeffs.len(),
            d2: d2.coeffs.len(),
        });
    }
    let minus_two = Rat::from_integer(-2);
    let mut acc = d1.coeffs[0] * d2.coeffs[0] * lat.h_self();
    for i in 1..dim {
        acc += d1.coeffs[i] * d2.coeffs[i] * minus_two;
    }
    Ok(acc)
}

/// Self-intersection of the hyperplane class of a quasi-smooth complete
/// intersection of the given degrees in weighted projective space:
/// product of degrees over product of weights.
pub fn weighted_ci_h_self(weights: &[i64], degrees: &[i64]) -> Result<Rat, LatticeError> {
    if weights.is_empty() || degrees.is_empty() {
        return Err(LatticeError::EmptyWeightData);
    }
    if weights.iter().any(|&w| w <= 0) || degrees.iter().any(|&d| d <= 0) {
        return Err(LatticeError::NonPositiveWeightData);
    }
    let num: i64 = degrees.iter().product();
    let den: i64 = weights.iter().product();
    Ok(Rat::new(num, den))
}

/// Positivity test for classes of the shape `nH - sum a_i E_i`.
///
/// Every curve on the blow-up is either pulled back from the base (handled
/// by ampleness of `H`, hence the structural constraints `n > 0`, `a_i > 0`)
/// or lies in an exceptional divisor, so it suffices to test the pairing
/// against each `E_i` together with the self-intersection.
pub fn nakai_positive(lc: &DivisorClass, lat: &BlowupLattice) -> Result<bool, LatticeError> {
    let dim = lat.dim();
    if lc.coeffs.len() != dim {
        return Err(LatticeError::DimensionMismatch {
            lattice: dim,
            d1: lc.coeffs.len(),
            d2: dim,
        });
    }
    if !lc.coeffs[0].is_positive() {
        return Ok(false);
    }
    // nH - sum a_i E_i with every a_i > 0.
    if lc.coeffs[1..].iter().any(|c| !c.is_negative()) {
        return Ok(false);
    }
    if !intersect(lc, lc, lat)?.is_positive() {
        return Ok(false);
    }
    for i in 1..dim {
        let ei = DivisorClass::e(i, dim);
        if !intersect(lc, &ei, lat)?.is_positive() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A traceless divisor paired with a positive class on the blow-up.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TracelessPair {
    pub d: DivisorClass,
    pub omega: DivisorClass,
    pub n: i64,
    pub m: i64,
}

/// Construct `omega = nH - E_1 - .. - E_k` and `D = H - m E_1` with
/// `D . omega = 0` exactly and `omega` Nakai-positive, choosing the smallest
/// positive integers `(n, m)` (ties broken by smaller `n`).
///
/// `D . omega = n h_self - 2m`, so `n h_self = 2m`.
pub fn traceless_divisor(lat: &BlowupLattice) -> Result<TracelessPair, LatticeError> {
    if lat.k_blown < 1 {
        return Err(LatticeError::NeedsBlowups { need: 1, have: lat.k_blown });
    }
    let dim = lat.dim();
    for m in 1i64.. {
        // n = 2m / h_self must be a positive integer.
        let n_rat = Rat::from_integer(2 * m) / lat.h_self();
        if !n_rat.denom().is_one() {
            continue;
        }
        let n = *n_rat.numer();
        if n <= 0 {
            continue;
        }
        let omega = omega_class(n, dim);
        if nakai_positive(&omega, lat)? {
            let mut d = DivisorClass::h(dim);
            d.coeffs[1] = Rat::from_integer(-m);
            debug_assert!(intersect(&d, &omega, lat)?.is_zero());
            return Ok(TracelessPair { d, omega, n, m });
        }
    }
    unreachable!("n h_self = 2m always has positive solutions for rational h_self > 0")
}

/// The divisor pair of the simply-connected construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CormainPair {
    pub d1: DivisorClass,
    pub d2: DivisorClass,
    pub omega: DivisorClass,
    pub n: i64,
    pub m: i64,
}

/// Construct `D1 = H - mE_1 - E_2`, `D2 = H - E_1 - mE_2` and
/// `omega = nH - sum E_i` with both pairings zero (`n h_self = 2m + 2`),
/// `omega` Nakai-positive and `D1, D2` independent over Q (`m >= 2`).
pub fn cormain_pair(lat: &BlowupLattice) -> Result<CormainPair, LatticeError> {
    if lat.k_blown < 2 {
        return Err(LatticeError::NeedsBlowups { need: 2, have: lat.k_blown });
    }
    let dim = lat.dim();
    for m in 2i64.. {
        let n_rat = Rat::from_integer(2 * m + 2) / lat.h_self();
        if !n_rat.denom().is_one() {
            continue;
        }
        let n = *n_rat.numer();
        if n <= 0 {
            continue;
        }
        let omega = omega_class(n, dim);
        if nakai_positive(&omega, lat)? {
            let mut d1 = DivisorClass::h(dim);
            d1.coeffs[1] = Rat::from_integer(-m);
            d1.coeffs[2] = Rat::from_integer(-1);
            let mut d2 = DivisorClass::h(dim);
            d2.coeffs[1] = Rat::from_integer(-1);
            d2.coeffs[2] = Rat::from_integer(-m);
            debug_assert!(intersect(&d1, &omega, lat)?.is_zero());
            debug_assert!(intersect(&d2, &omega, lat)?.is_zero());
            return Ok(CormainPair { d1, d2, omega, n, m });
        }
    }
    unreachable!("n h_self = 2m + 2 always has positive solutions for rational h_self > 0")
}

fn omega_class(n: i64, dim: usize) -> DivisorClass {
    let mut coeffs = vec![Rat::from_integer(-1); dim];
    coeffs[0] = Rat::from_integer(n);
    DivisorClass { coeffs }
}

/// Orbifold Euler number of a K3 orbifold with `num_a1` isolated A1 points.
pub fn orbifold_euler(num_a1: u32) -> Result<i64, LatticeError> {
    if num_a1 > 24 {
        return Err(LatticeError::TooManySingularPoints(num_a1));
    }
    Ok(24 - num_a1 as i64)
}

/// Diffeomorphism label of the Seifert 5-manifold over the surface:
/// a connected sum of `b2 - 1` copies of `S^2 x S^3`.
pub fn classify_seifert5(b2_orb: u32) -> Result<String, LatticeError> {
    if b2_orb < 2 {
        return Err(LatticeError::RankTooSmall { b2_orb, min: 2 });
    }
    Ok(format!("#_{}(S2xS3)", b2_orb - 1))
}

/// Diffeomorphism label of the simply-connected T^2-bundle total space:
/// `#_r(S^2 x S^4) #_{r+1}(S^3 x S^3)` with `r = b2 - 2`.
pub fn classify_t2_total(b2_orb: u32) -> Result<String, LatticeError> {
    if b2_orb < 3 {
        return Err(LatticeError::RankTooSmall { b2_orb, min: 3 });
    }
    let r = b2_orb - 2;
    Ok(format!("#_{}(S2xS4)#_{}(S3xS3)", r, r + 1))
}

/// Topological data of the gauge bundle entering the integrability budget.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleTopologyData {
    pub rank: u32,
    #[serde(with = "rat_serde")]
    pub c1_sq: Rat,
    #[serde(with = "rat_serde")]
    pub c2: Rat,
    #[serde(default = "default_true")]
    pub degree_zero: bool,
    #[serde(default = "default_true")]
    pub stable: bool,
}

fn default_true() -> bool {
    true
}

/// Exact-rational form of the anomaly integrability condition.
///
/// Both curvature 2-forms are taken as harmonic representatives of
/// `2 pi` times integral anti-self-dual classes, so the norm integrals
/// reduce to intersection numbers: `int ||w_i||^2 vol = -4 pi^2 Q_i` and
/// the `1/4 pi^2` prefactor cancels, leaving `lhs = -(Q1 + Q2)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegrabilityReport {
    pub alpha_prime: String,
    pub euler: i64,
    pub lhs: String,
    pub rhs: String,
    pub satisfied: bool,
    pub residual: String,
    /// Convention marker echoed into every report.
    pub normalization: String,
}

pub fn integrability_check(
    alpha_prime: Rat,
    euler: i64,
    bundle: &BundleTopologyData,
    q1: Rat,
    q2: Rat,
) -> Result<IntegrabilityReport, LatticeError> {
    if !bundle.degree_zero {
        return Err(LatticeError::DegreeZeroRequired);
    }
    if q1.is_positive() || q2.is_positive() {
        return Err(LatticeError::PositiveAsdSelfIntersection(format!(
            "Q1 = {}, Q2 = {}",
            format_rat(&q1),
            format_rat(&q2)
        )));
    }
    let lhs = alpha_prime * (Rat::from_integer(euler) - (bundle.c2 - bundle.c1_sq / Rat::from_integer(2)));
    let rhs = -(q1 + q2);
    let residual = lhs - rhs;
    Ok(IntegrabilityReport {
        alpha_prime: format_rat(&alpha_prime),
        euler,
        lhs: format_rat(&lhs),
        rhs: format_rat(&rhs),
        satisfied: residual.is_zero(),
        residual: format_rat(&residual),
        normalization: "omega_i = 2*pi*(integral harmonic ASD representative); rhs = -(Q1+Q2)".to_string(),
    })
}


#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_rat() -> impl Strategy<Value = Rat> {
        (-20i64..=20, 1i64..=6).prop_map(|(p, q)| Rat::new(p, q))
    }

    fn arb_class(dim: usize) -> impl Strategy<Value = DivisorClass> {
        proptest::collection::vec(arb_rat(), dim).prop_map(DivisorClass::new)
    }

    fn test_lat() -> BlowupLattice {
        let base = OrbifoldSurface::new("prop", 6, Rat::new(1, 2)).unwrap();
        BlowupLattice::new(base, 4).unwrap()
    }

    proptest! {
        #[test]
        fn intersect_is_bilinear_and_symmetric(
            d1 in arb_class(5), d2 in arb_class(5), d3 in arb_class(5),
            a in arb_rat(), b in arb_rat(),
        ) {
            let lat = test_lat();
            let lin = d1.scaled(a).add(&d2.scaled(b));
            let lhs = intersect(&lin, &d3, &lat).unwrap();
            let rhs = a * intersect(&d1, &d3, &lat).unwrap()
                + b * intersect(&d2, &d3, &lat).unwrap();
            prop_assert_eq!(lhs, rhs);
            prop_assert_eq!(
                intersect(&d1, &d2, &lat).unwrap(),
                intersect(&d2, &d1, &lat).unwrap()
            );
        }

        #[test]
        fn classes_without_h_component_have_nonpositive_square(
            mut d in arb_class(5),
        ) {
            // the Gram form has exactly one positive direction (H)
            d.coeffs[0] = Rat::from_integer(0);
            let lat = test_lat();
            prop_assert!(intersect(&d, &d, &lat).unwrap() <= Rat::from_integer(0));
        }

        #[test]
        fn integrability_is_scale_invariant(
            alpha in arb_rat(), lambda in (1i64..=10, 1i64..=4).prop_map(|(p, q)| Rat::new(p, q)),
            c2 in arb_rat(), q1 in (-10i64..=0).prop_map(Rat::from_integer),
            q2 in (-10i64..=0).prop_map(Rat::from_integer),
        ) {
            let bundle = BundleTopologyData {
                rank: 2, c1_sq: Rat::from_integer(0), c2,
                degree_zero: true, stable: true,
            };
            let base = integrability_check(alpha, 15, &bundle, q1, q2).unwrap();
            let scaled = integrability_check(alpha * lambda, 15, &bundle,
                q1 * lambda, q2 * lambda).unwrap();
            prop_assert_eq!(base.satisfied, scaled.satisfied);
        }
    }
}
