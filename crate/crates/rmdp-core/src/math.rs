//! Float helpers and a small dense linear solver.
//!
//! The crate is `no_std`, so transcendental functions go through `libm`.

use alloc::vec;
use alloc::vec::Vec;

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn cbrt(x: f64) -> f64 {
    libm::cbrt(x)
}

/// Standard normal CDF.
#[inline]
pub fn normal_cdf(x: f64, mean: f64, sd: f64) -> f64 {
    0.5 * (1.0 + libm::erf((x - mean) / (sd * core::f64::consts::SQRT_2)))
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

/// Kahan-compensated dot product. Used on residual paths where the
/// plain accumulation error would be of the same order as the tolerance.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut sum = 0.0;
    let mut c = 0.0;
    for (x, y) in a.iter().zip(b) {
        let term = x * y - c;
        let t = sum + term;
        c = (t - sum) - term;
        sum = t;
    }
    sum
}

pub fn sum(a: &[f64]) -> f64 {
    let mut s = 0.0;
    let mut c = 0.0;
    for &x in a {
        let term = x - c;
        let t = s + term;
        c = (t - s) - term;
        s = t;
    }
    s
}

pub fn sup_norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| abs(x - y))
        .fold(0.0, f64::max)
}

pub fn mean(a: &[f64]) -> f64 {
    if a.is_empty() {
        0.0
    } else {
        sum(a) / a.len() as f64
    }
}

/// Median with the even-length averaging rule.
pub fn median(a: &[f64]) -> f64 {
    assert!(!a.is_empty());
    let mut v: Vec<f64> = a.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting followed
/// by iterative refinement. Returns `None` for a (numerically) singular A.
///
/// `a` is row-major `n x n` and is left unmodified.
pub fn solve_dense(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    let lu = lu_factor(a, n)?;
    let mut x = lu_solve(&lu, b, n);
    // Refinement drives the residual toward one ulp of the row scale.
    for _ in 0..3 {
        let r = residual(a, &x, b, n);
        let dx = lu_solve(&lu, &r, n);
        for i in 0..n {
            x[i] += dx[i];
        }
    }
    Some(x)
}

struct Lu {
    mat: Vec<f64>,
    perm: Vec<usize>,
}

fn lu_factor(a: &[f64], n: usize) -> Option<Lu> {
    let mut m = a.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let mut piv = col;
        let mut best = abs(m[perm[col] * n + col]);
        for row in col + 1..n {
            let v = abs(m[perm[row] * n + col]);
            if v > best {
                best = v;
                piv = row;
            }
        }
        if best < 1e-300 {
            return None;
        }
        perm.swap(col, piv);
        let prow = perm[col];
        let diag = m[prow * n + col];
        for row in col + 1..n {
            let r = perm[row];
            let factor = m[r * n + col] / diag;
            m[r * n + col] = factor;
            for k in col + 1..n {
                m[r * n + k] -= factor * m[prow * n + k];
            }
        }
    }
    Some(Lu { mat: m, perm })
}

fn lu_solve(lu: &Lu, b: &[f64], n: usize) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for i in 0..n {
        let r = lu.perm[i];
        let mut s = b[r];
        for k in 0..i {
            s -= lu.mat[r * n + k] * y[k];
        }
        y[i] = s;
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let r = lu.perm[i];
        let mut s = y[i];
        for k in i + 1..n {
            s -= lu.mat[r * n + k] * x[k];
        }
        x[i] = s / lu.mat[r * n + i];
    }
    x
}

/// `b - A x` with compensated accumulation.
fn residual(a: &[f64], x: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut r = vec![0.0; n];
    for i in 0..n {
        r[i] = b[i] - dot(&a[i * n..(i + 1) * n], x);
    }
    r
}
