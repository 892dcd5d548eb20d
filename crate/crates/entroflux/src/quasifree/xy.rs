use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::quad::gauss_adaptive;
use crate::numerics::{cr, tensor_embed, CMat, HermitianOperator, C64};
use crate::states::DensityMatrix;

use super::fock::MAX_FOCK_DIM;
use super::scattering::{ebb_eplus, Dispersion, LeadSpec, PhaseConvention, ScatteringData};
use super::OnePartModel;

/// Jordan–Wigner image of the XY chain on `n` sites: `h = (J/2)Δ + (J-λ)1`,
/// with the infinite-temperature density `T = 1/2`.
pub fn xy_map(n: usize, j: f64, lambda: f64) -> Result<OnePartModel> {
    if n == 0 {
        return Err(Error::InvalidModel("empty chain".into()));
    }
    let h = CMat::from_fn(n, n, |a, b| {
        if a == b {
            cr(-lambda)
        } else if a.abs_diff(b) == 1 {
            cr(j / 2.0)
        } else {
            cr(0.0)
        }
    });
    OnePartModel::new(
        HermitianOperator::from_matrix_unchecked(h),
        HermitianOperator::identity(n).scale(0.5),
    )
}

fn pauli() -> [CMat; 3] {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    [
        CMat::from_row_slice(2, 2, &[z, o, o, z]),
        CMat::from_row_slice(2, 2, &[z, -i, i, z]),
        CMat::from_row_slice(2, 2, &[o, z, z, -o]),
    ]
}

/// `H = -(1/4)Σ J(σ¹_xσ¹_{x+1} + σ²_xσ²_{x+1}) - (1/2)Σ λσ³_x` on `(ℂ²)^{⊗n}`.
pub fn xy_spin_hamiltonian(n: usize, j: f64, lambda: f64) -> Result<CMat> {
    if n > MAX_FOCK_DIM {
        return Err(Error::DimensionTooLarge(n));
    }
    let dims = vec![2; n];
    let s = pauli();
    let dim = 1 << n;
    let mut h = CMat::zeros(dim, dim);
    for x in 0..n {
        h += tensor_embed(&[(&s[2], x)], &dims)? * cr(-lambda / 2.0);
        if x + 1 < n {
            for a in &s[..2] {
                h += tensor_embed(&[(a, x), (a, x + 1)], &dims)? * cr(-j / 4.0);
            }
        }
    }
    Ok(h)
}

/// `m_Λ = (1/|Λ|) Σ_ξ tanh(β(λ - J cos ξ)/2)` over `ξ = kπ/(|Λ|+1)`.
pub fn xy_magnetization(n: usize, beta: f64, j: f64, lambda: f64) -> f64 {
    (1..=n)
        .map(|k| {
            let xi = k as f64 * PI / (n as f64 + 1.0);
            (beta * (lambda - j * xi.cos()) / 2.0).tanh()
        })
        .sum::<f64>()
        / n as f64
}

/// `(2 sinh(βλ/2)/π) ∫₀^π dξ / (cosh(βλ/2) + cosh(β(J cos ξ - λ/2)))`.
pub fn xy_magnetization_limit(beta: f64, j: f64, lambda: f64) -> Result<f64> {
    let c = (beta * lambda / 2.0).cosh();
    let v = gauss_adaptive(
        |xi| 1.0 / (c + (beta * (j * xi.cos() - lambda / 2.0)).cosh()),
        0.0,
        PI,
        1e-12,
        1e-15,
    )?;
    Ok(2.0 * (beta * lambda / 2.0).sinh() / PI * v)
}

/// Mean magnetization per spin from the spin-side Gibbs state.
pub fn xy_magnetization_oracle(n: usize, beta: f64, j: f64, lambda: f64) -> Result<f64> {
    let h = HermitianOperator::from_matrix_unchecked(xy_spin_hamiltonian(n, j, lambda)?);
    let state = DensityMatrix::gibbs(&h, beta);
    let dims = vec![2; n];
    let z = &pauli()[2];
    let mut m = 0.0;
    for x in 0..n {
        m += state.expectation(&tensor_embed(&[(z, x)], &dims)?).re;
    }
    Ok(m / n as f64)
}

/// Scattering matrix `e^{±2iNξ}[[0,1],[1,0]]` of the open XY chain on `[-N, N]`.
pub fn xy_scattering(half_width: usize, j: f64, lambda: f64, convention: PhaseConvention) -> ScatteringData {
    let sign = match convention {
        PhaseConvention::OppositeToCoupling => -j.signum(),
        PhaseConvention::SameAsCoupling => j.signum(),
    };
    ScatteringData::from_fn(2, Dispersion::Xy { j, lambda }, move |xi| {
        let ph = C64::new(0.0, sign * 2.0 * half_width as f64 * xi).exp();
        CMat::from_row_slice(2, 2, &[C64::new(0.0, 0.0), ph, ph, C64::new(0.0, 0.0)])
    })
}

fn nonzero_coupling(j: f64) -> Result<()> {
    if j == 0.0 || !j.is_finite() {
        return Err(Error::DomainError(j));
    }
    Ok(())
}

/// `e_{p,+}(α)` of the open XY chain, evaluated through its scattering data.
pub fn xy_eplus(beta_l: f64, beta_r: f64, j: f64, lambda: f64, alpha: f64, p: f64) -> Result<f64> {
    nonzero_coupling(j)?;
    let leads = [LeadSpec::new(beta_l, 0.0)?, LeadSpec::new(beta_r, 0.0)?];
    ebb_eplus(
        &leads,
        &xy_scattering(0, j, lambda, PhaseConvention::OppositeToCoupling),
        alpha,
        p,
    )
}

fn u_integral(j: f64, lambda: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
    let (lo, hi) = ((lambda - j) / 2.0, (lambda + j) / 2.0);
    Ok(gauss_adaptive(f, lo, hi, 1e-12, 1e-15)? / (j * PI))
}

/// `(1/Jπ) ∫_{u₋}^{u₊} log(1 - sinh(u ΔY) sinh(u(ΔX - ΔY)) / (cosh(u(β-X_L)) cosh(u(β-X_R)))) du`.
pub fn xy_eplus_generalized(beta: f64, x: [f64; 2], y: [f64; 2], j: f64, lambda: f64) -> Result<f64> {
    nonzero_coupling(j)?;
    let (dx, dy) = (x[1] - x[0], y[1] - y[0]);
    let (bl, br) = (beta - x[0], beta - x[1]);
    let bad = std::cell::Cell::new(false);
    let v = u_integral(j, lambda, |u| {
        let arg = 1.0 - (u * dy).sinh() * (u * (dx - dy)).sinh() / ((u * bl).cosh() * (u * br).cosh());
        if !(arg > 0.0) {
            bad.set(true);
            return 0.0;
        }
        arg.ln()
    })?;
    if bad.get() {
        return Err(Error::DomainError(dy));
    }
    Ok(v)
}

/// Closed form `(1/Jπ) ∫ log(1 - sinh(αuΔβ) sinh((1-α)uΔβ) / (cosh(uβ_L) cosh(uβ_R))) du`, `Δβ = β_R - β_L`.
pub fn xy_eplus_closed(beta_l: f64, beta_r: f64, j: f64, lambda: f64, alpha: f64) -> Result<f64> {
    nonzero_coupling(j)?;
    let db = beta_r - beta_l;
    let bad = std::cell::Cell::new(false);
    let v = u_integral(j, lambda, |u| {
        let arg = 1.0
            - (alpha * u * db).sinh() * ((1.0 - alpha) * u * db).sinh() / ((u * beta_l).cosh() * (u * beta_r).cosh());
        if !(arg > 0.0) {
            bad.set(true);
            return 0.0;
        }
        arg.ln()
    })?;
    if bad.get() {
        return Err(Error::DomainError(alpha));
    }
    Ok(v)
}

/// Steady heat current out of the left reservoir, `(1/Jπ) ∫ u(tanh β_R u - tanh β_L u) du`.
pub fn xy_heat_current(beta_l: f64, beta_r: f64, j: f64, lambda: f64) -> Result<f64> {
    nonzero_coupling(j)?;
    u_integral(j, lambda, |u| u * ((beta_r * u).tanh() - (beta_l * u).tanh()))
}
