//! Constant exterior algebra over the cotangent frame `dx1..dx4`.
//!
//! Real monomials are bitmasks (bit i = dx_{i+1}); complex monomials are
//! pairs of 2-bit masks `(s, t)` for `dz_s ^ dzbar_t` with `dz1 = dx1 + i dx2`
//! and `dz2 = dx3 + i dx4`. All Hodge-star matrices are derived from the
//! Euclidean star on the real frame rather than hand-coded, so the sign
//! conventions cannot drift between bidegrees.

use std::collections::HashMap;

use num_complex::Complex64;
use once_cell::sync::Lazy;

/// Coefficients over the 16 real monomials dx_I, I a bitmask.
pub type Multivector = [Complex64; 16];

pub const MV_ZERO: Multivector = [Complex64::ZERO; 16];

/// The (2,2) monomial dz1^dz2^dzbar1^dzbar2 equals 4 dx1^dx2^dx3^dx4.
pub const TOP_TO_VOL: f64 = 4.0;

/// Sign of sorting the concatenation of two disjoint index sets, or `None`
/// if they overlap.
pub fn merge_sign(a: u16, b: u16) -> Option<f64> {
    if a & b != 0 {
        return None;
    }
    let mut inversions = 0u32;
    for j in 0..15u32 {
        if b & (1 << j) != 0 {
            inversions += (u32::from(a) >> (j + 1)).count_ones();
        }
    }
    Some(if inversions % 2 == 0 { 1.0 } else { -1.0 })
}

pub fn mv_wedge(a: &Multivector, b: &Multivector) -> Multivector {
    let mut out = MV_ZERO;
    for (ma, &ca) in a.iter().enumerate() {
        if ca == Complex64::ZERO {
            continue;
        }
        for (mb, &cb) in b.iter().enumerate() {
            if cb == Complex64::ZERO {
                continue;
            }
            if let Some(s) = merge_sign(ma as u16, mb as u16) {
                out[ma | mb] += s * ca * cb;
            }
        }
    }
    out
}

/// Euclidean Hodge star on the orthonormal real frame.
pub fn mv_star(a: &Multivector) -> Multivector {
    let mut out = MV_ZERO;
    for (m, &c) in a.iter().enumerate() {
        if c == Complex64::ZERO {
            continue;
        }
        let comp = 0b1111 ^ m;
        // dx_I ^ dx_{I^c} = eps vol and |dx_I| = 1, so *dx_I = eps dx_{I^c}.
        let eps = merge_sign(m as u16, comp as u16).unwrap();
        out[comp] = eps * c;
    }
    out
}

/// Subsets of {z1, z2} with `p` elements, in the fixed component order.
pub fn z_masks(p: u8) -> &'static [u8] {
    match p {
        0 => &[0b00],
        1 => &[0b01, 0b10],
        2 => &[0b11],
        _ => &[],
    }
}

/// Component basis of (p,q)-forms: (s,t) pairs in lex order.
pub fn monomials(p: u8, q: u8) -> Vec<(u8, u8)> {
    let mut v = Vec::new();
    for &s in z_masks(p) {
        for &t in z_masks(q) {
            v.push((s, t));
        }
    }
    v
}

pub fn dim(p: u8, q: u8) -> usize {
    z_masks(p).len() * z_masks(q).len()
}

fn one_form_real(conjugated: bool, which: u8) -> Multivector {
    let (xa, xb) = if which == 0 { (0usize, 1usize) } else { (2, 3) };
    let mut mv = MV_ZERO;
    mv[1 << xa] = Complex64::new(1.0, 0.0);
    mv[1 << xb] = if conjugated {
        -Complex64::i()
    } else {
        Complex64::i()
    };
    mv
}

/// Real-frame expansion of dz_s ^ dzbar_t.
pub fn complex_monomial_real(s: u8, t: u8) -> Multivector {
    let mut acc = MV_ZERO;
    acc[0] = Complex64::new(1.0, 0.0);
    for which in 0..2u8 {
        if s & (1 << which) != 0 {
            acc = mv_wedge(&acc, &one_form_real(false, which));
        }
    }
    for which in 0..2u8 {
        if t & (1 << which) != 0 {
            acc = mv_wedge(&acc, &one_form_real(true, which));
        }
    }
    acc
}

/// Wedge of two complex monomials: target monomial and sign, or `None` if
/// a factor repeats.
pub fn wedge_monomial(s1: u8, t1: u8, s2: u8, t2: u8) -> Option<((u8, u8), f64)> {
    let ss = merge_sign(s1 as u16, s2 as u16)?;
    let ts = merge_sign(t1 as u16, t2 as u16)?;
    // moving the dz_{s2} block past the dzbar_{t1} block
    let cross = if (t1.count_ones() * s2.count_ones()) % 2 == 1 {
        -1.0
    } else {
        1.0
    };
    Some(((s1 | s2, t1 | t2), ss * ts * cross))
}

type Mat = Vec<Vec<Complex64>>;

/// Gauss-Jordan inverse with partial pivoting; panics on singular input
/// (the change-of-basis matrices here are always invertible).
fn invert(mat: &Mat) -> Mat {
    let n = mat.len();
    let mut a: Vec<Vec<Complex64>> = mat.iter().map(|r| {
        assert_eq!(r.len(), n);
        r.clone()
    }).collect();
    let mut inv: Mat = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { Complex64::new(1.0, 0.0) } else { Complex64::ZERO })
                .collect()
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))
            .unwrap();
        assert!(a[pivot][col].norm() > 1e-14, "singular change of basis");
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let d = a[col][col];
        for j in 0..n {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = a[i][col];
            if f == Complex64::ZERO {
                continue;
            }
            for j in 0..n {
                let (acj, icj) = (a[col][j], inv[col][j]);
                a[i][j] -= f * acj;
                inv[i][j] -= f * icj;
            }
        }
    }
    inv
}

/// For total degree d: ordered real masks, ordered complex monomials with
/// their bidegrees, and the real->complex change of basis.
struct DegreeBasis {
    real_masks: Vec<usize>,
    complex_monos: Vec<(u8, u8, u8, u8)>, // (p, q, s, t)
    real_to_complex: Mat,
}

fn degree_basis(d: u8) -> DegreeBasis {
    let real_masks: Vec<usize> = (0..16).filter(|m: &usize| m.count_ones() == d as u32).collect();
    let mut complex_monos = Vec::new();
    for p in 0..=2u8 {
        for q in 0..=2u8 {
            if p + q == d {
                for (s, t) in monomials(p, q) {
                    complex_monos.push((p, q, s, t));
                }
            }
        }
    }
    assert_eq!(real_masks.len(), complex_monos.len());
    let n = real_masks.len();
    // columns: real expansion of each complex monomial
    let mut c_to_r: Mat = vec![vec![Complex64::ZERO; n]; n];
    for (j, &(_, _, s, t)) in complex_monos.iter().enumerate() {
        let mv = complex_monomial_real(s, t);
        for (i, &m) in real_masks.iter().enumerate() {
            c_to_r[i][j] = mv[m];
        }
    }
    DegreeBasis {
        real_masks,
        complex_monos,
        real_to_complex: invert(&c_to_r),
    }
}

/// star_mats[(p,q)][i][j]: coefficient of the i-th (2-q,2-p) monomial in the
/// star of the j-th (p,q) monomial (C-linear star).
static STAR_MATS: Lazy<HashMap<(u8, u8), Mat>> = Lazy::new(|| {
    let bases: Vec<DegreeBasis> = (0..=4u8).map(degree_basis).collect();
    let mut out = HashMap::new();
    for p in 0..=2u8 {
        for q in 0..=2u8 {
            let d = p + q;
            let (tp, tq) = (2 - q, 2 - p);
            let src = monomials(p, q);
            let tgt = monomials(tp, tq);
            let basis = &bases[(4 - d) as usize];
            let mut mat: Mat = vec![vec![Complex64::ZERO; src.len()]; tgt.len()];
            for (j, &(s, t)) in src.iter().enumerate() {
                let starred = mv_star(&complex_monomial_real(s, t));
                let rhs: Vec<Complex64> =
                    basis.real_masks.iter().map(|&m| starred[m]).collect();
                for (row, coeffs) in basis.real_to_complex.iter().enumerate() {
                    let c: Complex64 = coeffs
                        .iter()
                        .zip(&rhs)
                        .map(|(a, b)| a * b)
                        .sum();
                    let (bp, bq, bs, bt) = basis.complex_monos[row];
                    if c.norm() < 1e-13 {
                        continue;
                    }
                    assert_eq!(
                        (bp, bq),
                        (tp, tq),
                        "star left the expected bidegree"
                    );
                    let i = tgt.iter().position(|&m| m == (bs, bt)).unwrap();
                    mat[i][j] = c;
                }
            }
            out.insert((p, q), mat);
        }
    }
    out
});

pub fn star_matrix(p: u8, q: u8) -> &'static Vec<Vec<Complex64>> {
    STAR_MATS.get(&(p, q)).expect("bidegree out of range")
}
