#![allow(dead_code)]

use aicert::linalg::Matrix;
use aicert::sgraph::{Sign, SignMatrix};
use nalgebra::DMatrix;
use rand::Rng;

/// `10^U(lo, hi)`.
pub fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.random_range(lo..hi))
}

/// Random Metzler matrix, roughly half of them Hurwitz. Off-diagonal
/// entries are zero with probability `sparsity`, otherwise log-uniform in
/// `[1e-2, 1e2]`. The diagonal is minus the column sum scaled by a
/// log-uniform factor around one.
pub fn random_metzler(rng: &mut impl Rng, d: usize, sparsity: f64) -> Matrix<f64> {
    let mut a = Matrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            if i != j && !rng.random_bool(sparsity) {
                a[(i, j)] = log_uniform(rng, -2.0, 2.0);
            }
        }
    }
    for j in 0..d {
        let col: f64 = (0..d).filter(|&i| i != j).map(|i| a[(i, j)]).sum();
        let base = if col > 0.0 { col } else { log_uniform(rng, -2.0, 2.0) };
        a[(j, j)] = -base * log_uniform(rng, -0.3, 0.3);
    }
    a
}

/// Sign pattern magnitudes drawn log-uniformly in `[1e-2, 1e2]`.
pub fn sample_pattern(rng: &mut impl Rng, s: &SignMatrix) -> Matrix<f64> {
    Matrix::from_fn(s.rows(), s.cols(), |i, j| match s[(i, j)] {
        Sign::Zero => 0.0,
        Sign::Plus => log_uniform(rng, -2.0, 2.0),
        Sign::Minus => -log_uniform(rng, -2.0, 2.0),
    })
}

/// Largest real part of the spectrum, from nalgebra's Schur form.
pub fn spectral_abscissa(a: &Matrix<f64>) -> f64 {
    let m = DMatrix::from_row_slice(a.rows(), a.cols(), a.as_slice());
    m.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Transitive closure by Floyd-Warshall; `reach[i][j]` means a path of length >= 1.
pub fn closure(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut r = vec![vec![false; n]; n];
    for &(a, b) in edges {
        r[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if r[i][k] && r[k][j] {
                    r[i][j] = true;
                }
            }
        }
    }
    r
}

/// Every Metzler sign pattern of size `d`; `diag` lists the allowed diagonal signs.
pub fn all_metzler_patterns(d: usize, diag: &[Sign]) -> Vec<SignMatrix> {
    let off: Vec<(usize, usize)> = (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).filter(|(i, j)| i != j).collect();
    let mut out = Vec::new();
    let diag_count = diag.len().pow(d as u32);
    for dcode in 0..diag_count {
        for mask in 0u64..(1 << off.len()) {
            let mut s = Matrix::from_fn(d, d, |_, _| Sign::Zero);
            let mut c = dcode;
            for i in 0..d {
                s[(i, i)] = diag[c % diag.len()];
                c /= diag.len();
            }
            for (bit, &(i, j)) in off.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    s[(i, j)] = Sign::Plus;
                }
            }
            out.push(s);
        }
    }
    out
}

/// `A^+ = A^- + E` with `E >= 0`, each entry of `E` nonzero with probability `p`.
pub fn widen(rng: &mut impl Rng, a_minus: &Matrix<f64>, p: f64, scale: f64) -> Matrix<f64> {
    Matrix::from_fn(a_minus.rows(), a_minus.cols(), |i, j| {
        let base = a_minus[(i, j)];
        if rng.random_bool(p) {
            base + scale * rng.random::<f64>() * base.abs().max(0.1)
        } else {
            base
        }
    })
}
