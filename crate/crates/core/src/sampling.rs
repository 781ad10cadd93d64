//! Seeded random matrices.
//!
//! All generators draw from [`ChaCha8Rng`], whose output stream is fixed for
//! a given 64-bit seed on every platform. Entries are drawn in row-major
//! order so a seed pins down the exact matrix.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::symmat::SymMat;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `rows × cols` matrix of independent standard normals, row-major draw order.
pub fn gaussian_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = rng.sample(StandardNormal);
        }
    }
    m
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// columns of `Q` sign-fixed so that `diag(R) > 0`.
pub fn random_orthogonal<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let qr = gaussian_matrix(n, n, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Symmetric matrix with standard normal upper triangle.
pub fn random_symmetric<R: Rng>(n: usize, rng: &mut R) -> SymMat {
    SymMat::from_upper_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Random PSD matrix with eigenvalues log-uniform in `[1/cond, 1]`, plus
/// one exact zero eigenvalue when `n > 2`.
pub fn random_psd<R: Rng>(n: usize, cond: f64, rng: &mut R) -> SymMat {
    let q = random_orthogonal(n, rng);
    let lmin = cond.recip().ln();
    let mut kappa: Vec<f64> = (0..n)
        .map(|_| (lmin * rng.random::<f64>()).exp())
        .collect();
    if n > 2 {
        kappa[n - 1] = 0.0;
    }
    SymMat::from_spectrum(&q, &kappa).expect("matching sizes")
}

/// Random point of the unit box `O ⪯ X ⪯ I`. About a fifth of the
/// eigenvalues are placed exactly on the boundary (0 or 1).
pub fn random_feasible<R: Rng>(n: usize, rng: &mut R) -> SymMat {
    let q = random_orthogonal(n, rng);
    let kappa: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            match rng.random_range(0..10u8) {
                0 => 0.0,
                1 => 1.0,
                _ => u,
            }
        })
        .collect();
    SymMat::from_spectrum(&q, &kappa).expect("matching sizes")
}

/// Random point whose eigenvalues lie in `[margin, 1 - margin]`.
pub fn random_interior<R: Rng>(n: usize, margin: f64, rng: &mut R) -> SymMat {
    let q = random_orthogonal(n, rng);
    let kappa: Vec<f64> = (0..n)
        .map(|_| margin + (1.0 - 2.0 * margin) * rng.random::<f64>())
        .collect();
    SymMat::from_spectrum(&q, &kappa).expect("matching sizes")
}
