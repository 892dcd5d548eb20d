//! Seeded random matrix ensembles for property tests and sweeps.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{cr, CMat, HermitianOperator, RMat, C64};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Complex Gaussian matrix with independent standard normal real and imaginary parts.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    DMatrix::from_fn(rows, cols, |_, _| C64::new(normal(rng), normal(rng)))
}

pub fn real_ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> RMat {
    DMatrix::from_fn(rows, cols, |_, _| normal(rng))
}

/// Gaussian unitary ensemble sample.
pub fn gue<R: Rng + ?Sized>(n: usize, rng: &mut R) -> HermitianOperator {
    let g = ginibre(n, n, rng);
    HermitianOperator::from_matrix_unchecked(g)
}

/// Gaussian orthogonal ensemble sample (real symmetric).
pub fn goe<R: Rng + ?Sized>(n: usize, rng: &mut R) -> HermitianOperator {
    let g = real_ginibre(n, n, rng);
    HermitianOperator::from_matrix_unchecked(g.map(cr))
}

/// Hilbert–Schmidt distributed faithful density matrix `GG†/tr(GG†)`.
pub fn density<R: Rng + ?Sized>(n: usize, rng: &mut R) -> HermitianOperator {
    let g = ginibre(n, n, rng);
    normalize(&g * g.adjoint())
}

/// Real Hilbert–Schmidt density matrix, invariant under complex conjugation.
pub fn real_density<R: Rng + ?Sized>(n: usize, rng: &mut R) -> HermitianOperator {
    let g = real_ginibre(n, n, rng);
    normalize((&g * g.transpose()).map(cr))
}

/// Density matrix of rank `k`.
pub fn density_of_rank<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> HermitianOperator {
    let g = ginibre(n, k, rng);
    normalize(&g * g.adjoint())
}

fn normalize(m: CMat) -> HermitianOperator {
    let tr: f64 = m.diagonal().iter().map(|z| z.re).sum();
    HermitianOperator::from_matrix_unchecked(m / cr(tr))
}

/// Haar unitary via QR of a Ginibre matrix with the phase correction.
pub fn unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let g = ginibre(n, n, rng);
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { cr(1.0) };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// Orthogonal projection onto the span of `k` random vectors.
pub fn projection<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> HermitianOperator {
    let u = unitary(n, rng);
    let cols = u.columns(0, k).into_owned();
    HermitianOperator::from_matrix_unchecked(&cols * cols.adjoint())
}
