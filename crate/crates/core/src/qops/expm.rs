//! Dense matrix exponential by scaling and squaring with Padé approximants
//! (Higham 2005 degree selection).

use ndarray::{Array2, Zip};
use num_complex::Complex64 as C64;

use crate::{Error, Result};

const THETA: [(usize, f64); 4] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_230e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068e0),
];
const THETA_13: f64 = 5.371_920_351_148_152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1_512.0,
    56.0,
    1.0,
];
const B9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3_960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

pub(crate) fn norm1(a: &Array2<C64>) -> f64 {
    a.columns()
        .into_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn eye(n: usize) -> Array2<C64> {
    Array2::from_diag_elem(n, C64::new(1.0, 0.0))
}

/// `sum_k coeffs[k] * powers[k]`, skipping absent powers.
fn lincomb(n: usize, terms: &[(f64, &Array2<C64>)]) -> Array2<C64> {
    let mut out = Array2::zeros((n, n));
    for &(c, m) in terms {
        out.scaled_add(C64::new(c, 0.0), m);
    }
    out
}

/// Exponential of a dense square matrix.
pub(crate) fn expm_dense(a: &Array2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numeric(
            "matrix exponential of non-finite input".into(),
        ));
    }
    if n == 0 {
        return Ok(Array2::zeros((0, 0)));
    }
    let norm = norm1(a);
    let id = eye(n);
    let a2 = a.dot(a);

    for &(m, theta) in THETA.iter() {
        if norm <= theta {
            let (u, v) = match m {
                3 => odd_even(a, &id, &[&a2], &B3),
                5 => {
                    let a4 = a2.dot(&a2);
                    odd_even(a, &id, &[&a2, &a4], &B5)
                }
                7 => {
                    let a4 = a2.dot(&a2);
                    let a6 = a4.dot(&a2);
                    odd_even(a, &id, &[&a2, &a4, &a6], &B7)
                }
                _ => {
                    let a4 = a2.dot(&a2);
                    let a6 = a4.dot(&a2);
                    let a8 = a6.dot(&a2);
                    odd_even(a, &id, &[&a2, &a4, &a6, &a8], &B9)
                }
            };
            return pade_quotient(&u, &v);
        }
    }

    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scale = C64::new(2f64.powi(-s), 0.0);
    let a1 = a.mapv(|z| z * scale);
    let a2 = a1.dot(&a1);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);
    let b = &B13;
    let inner_u = lincomb(n, &[(b[13], &a6), (b[11], &a4), (b[9], &a2)]);
    let u_arg =
        a6.dot(&inner_u) + lincomb(n, &[(b[7], &a6), (b[5], &a4), (b[3], &a2), (b[1], &id)]);
    let u = a1.dot(&u_arg);
    let inner_v = lincomb(n, &[(b[12], &a6), (b[10], &a4), (b[8], &a2)]);
    let v = a6.dot(&inner_v) + lincomb(n, &[(b[6], &a6), (b[4], &a4), (b[2], &a2), (b[0], &id)]);
    let mut r = pade_quotient(&u, &v)?;
    for _ in 0..s {
        r = r.dot(&r);
    }
    if r.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numeric("matrix exponential overflowed".into()));
    }
    Ok(r)
}

/// U and V for the low-degree approximants; `even` holds A², A⁴, ...
fn odd_even(
    a: &Array2<C64>,
    id: &Array2<C64>,
    even: &[&Array2<C64>],
    b: &[f64],
) -> (Array2<C64>, Array2<C64>) {
    let n = a.nrows();
    let mut u_terms: Vec<(f64, &Array2<C64>)> = vec![(b[1], id)];
    let mut v_terms: Vec<(f64, &Array2<C64>)> = vec![(b[0], id)];
    for (k, p) in even.iter().enumerate() {
        u_terms.push((b[2 * k + 3], p));
        v_terms.push((b[2 * k + 2], p));
    }
    let u = a.dot(&lincomb(n, &u_terms));
    let v = lincomb(n, &v_terms);
    (u, v)
}

fn pade_quotient(u: &Array2<C64>, v: &Array2<C64>) -> Result<Array2<C64>> {
    let p = v + u;
    let q = v - u;
    lu_solve(q, p)
}

/// Solves `A X = B` by Gaussian elimination with partial pivoting.
pub(crate) fn lu_solve(mut a: Array2<C64>, mut b: Array2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    for k in 0..n {
        let (piv, pmax) = (k..n)
            .map(|i| (i, a[[i, k]].norm()))
            .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if pmax == 0.0 || !pmax.is_finite() {
            return Err(Error::Numeric("singular matrix in Padé denominator".into()));
        }
        if piv != k {
            for j in 0..n {
                a.swap([k, j], [piv, j]);
            }
            for j in 0..b.ncols() {
                b.swap([k, j], [piv, j]);
            }
        }
        let inv = C64::new(1.0, 0.0) / a[[k, k]];
        for i in (k + 1)..n {
            let f = a[[i, k]] * inv;
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            a[[i, k]] = f;
            for j in (k + 1)..n {
                let akj = a[[k, j]];
                a[[i, j]] -= f * akj;
            }
            for j in 0..b.ncols() {
                let bkj = b[[k, j]];
                b[[i, j]] -= f * bkj;
            }
        }
    }
    for k in (0..n).rev() {
        let inv = C64::new(1.0, 0.0) / a[[k, k]];
        for j in 0..b.ncols() {
            let mut acc = b[[k, j]];
            for i in (k + 1)..n {
                acc -= a[[k, i]] * b[[i, j]];
            }
            b[[k, j]] = acc * inv;
        }
    }
    Ok(b)
}

/// Elementwise maximum absolute difference.
pub(crate) fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    let mut m = 0.0f64;
    Zip::from(a)
        .and(b)
        .for_each(|x, y| m = m.max((x - y).norm()));
    m
}
