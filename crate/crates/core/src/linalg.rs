//! 2x2 real matrix helpers.

use num_complex::Complex64;

/// Row-major 2x2 matrix.
pub type Mat2 = [[f64; 2]; 2];

pub const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

pub fn det(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn trace(m: &Mat2) -> f64 {
    m[0][0] + m[1][1]
}

pub fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn mul_vec(a: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [
        a[0][0] * v[0] + a[0][1] * v[1],
        a[1][0] * v[0] + a[1][1] * v[1],
    ]
}

/// Solves `a x = rhs` by Cramer's rule. `None` when `|det a| < min_det`.
pub fn solve(a: &Mat2, rhs: [f64; 2], min_det: f64) -> Option<[f64; 2]> {
    let d = det(a);
    if !(d.abs() >= min_det) {
        return None;
    }
    Some([
        (rhs[0] * a[1][1] - a[0][1] * rhs[1]) / d,
        (a[0][0] * rhs[1] - a[1][0] * rhs[0]) / d,
    ])
}

/// Eigenvalues from the characteristic polynomial, larger modulus first.
pub fn eigenvalues(m: &Mat2) -> [Complex64; 2] {
    let half_tr = 0.5 * trace(m);
    let disc = half_tr * half_tr - det(m);
    let (a, b) = if disc >= 0.0 {
        // avoid cancellation in the smaller root
        let s = disc.sqrt();
        let big = if half_tr >= 0.0 { half_tr + s } else { half_tr - s };
        let small = if big != 0.0 { det(m) / big } else { 0.0 };
        (Complex64::new(big, 0.0), Complex64::new(small, 0.0))
    } else {
        let s = (-disc).sqrt();
        (Complex64::new(half_tr, s), Complex64::new(half_tr, -s))
    };
    if a.norm() >= b.norm() {
        [a, b]
    } else {
        [b, a]
    }
}

pub fn max_abs_diff(a: &Mat2, b: &Mat2) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            m = m.max((a[i][j] - b[i][j]).abs());
        }
    }
    m
}
