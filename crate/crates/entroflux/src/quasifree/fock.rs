use crate::error::{Error, Result};
use crate::numerics::{CMat, C64};

/// Largest one-particle dimension accepted by the Fock-space routines.
pub const MAX_FOCK_DIM: usize = 10;

fn guard(d: usize) -> Result<()> {
    if d > MAX_FOCK_DIM {
        Err(Error::DimensionTooLarge(d))
    } else {
        Ok(())
    }
}

/// Creation operators `a*_0, …, a*_{d-1}` on `Γ(ℂ^d)`.
///
/// Basis vector `n` has bit `i` set iff mode `i` is occupied and stands for
/// `a*_{i_1} ⋯ a*_{i_k} Ω` with `i_1 < ⋯ < i_k`.
pub fn creation_operators(d: usize) -> Result<Vec<CMat>> {
    guard(d)?;
    let dim = 1usize << d;
    Ok((0..d)
        .map(|i| {
            let mut a = CMat::zeros(dim, dim);
            for n in 0..dim {
                if n & (1 << i) == 0 {
                    let below = (n & ((1 << i) - 1)).count_ones();
                    let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
                    a[(n | (1 << i), n)] = C64::new(sign, 0.0);
                }
            }
            a
        })
        .collect())
}

/// `a*(φ) = Σ φ_i a*_i`.
pub fn creation(phi: &[C64], ops: &[CMat]) -> CMat {
    let dim = ops[0].nrows();
    ops.iter()
        .zip(phi)
        .fold(CMat::zeros(dim, dim), |acc, (a, c)| acc + a * *c)
}

/// `a(ψ) = a*(ψ)†`.
pub fn annihilation(psi: &[C64], ops: &[CMat]) -> CMat {
    creation(psi, ops).adjoint()
}

/// Second quantization `dΓ(A) = Σ A_ij a*_i a_j`.
pub fn second_quantize(a: &CMat) -> Result<CMat> {
    let d = a.nrows();
    guard(d)?;
    let dim = 1usize << d;
    let mut out = CMat::zeros(dim, dim);
    for n in 0..dim {
        for j in (0..d).filter(|j| n & (1 << j) != 0) {
            let m = n & !(1 << j);
            let sj = parity(m & ((1 << j) - 1));
            for i in 0..d {
                if m & (1 << i) != 0 || a[(i, j)] == C64::new(0.0, 0.0) {
                    continue;
                }
                let si = parity(m & ((1 << i) - 1));
                out[(m | (1 << i), n)] += a[(i, j)] * (si * sj);
            }
        }
    }
    Ok(out)
}

fn parity(bits: usize) -> f64 {
    if bits.count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `Γ(A)`, the multiplicative lift: `⟨m|Γ(A)|n⟩` is the minor of `A` on rows `m`, columns `n`.
pub fn gamma(a: &CMat) -> Result<CMat> {
    let d = a.nrows();
    guard(d)?;
    let dim = 1usize << d;
    let mut by_count: Vec<Vec<usize>> = vec![Vec::new(); d + 1];
    for n in 0..dim {
        by_count[n.count_ones() as usize].push(n);
    }
    let modes = |n: usize| (0..d).filter(|i| n & (1 << i) != 0).collect::<Vec<_>>();
    let mut out = CMat::zeros(dim, dim);
    for group in &by_count {
        for &n in group {
            let cols = modes(n);
            for &m in group {
                let rows = modes(m);
                let minor = CMat::from_fn(rows.len(), cols.len(), |r, c| a[(rows[r], cols[c])]);
                out[(m, n)] = if rows.is_empty() {
                    C64::new(1.0, 0.0)
                } else {
                    minor.determinant()
                };
            }
        }
    }
    Ok(out)
}

/// `(Γ(A), dΓ(A))`.
pub fn fock_oracle(a: &CMat) -> Result<(CMat, CMat)> {
    Ok((gamma(a)?, second_quantize(a)?))
}
