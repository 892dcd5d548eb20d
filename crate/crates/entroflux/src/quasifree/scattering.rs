use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::quad::gauss_adaptive;
use crate::numerics::{cr, CMat, HermitianOperator, C64};

use super::{fermi_of_generator, log_det_one_plus};

const RTOL: f64 = 1e-8;
const ATOL: f64 = 1e-13;
const UNITARITY_TOL: f64 = 1e-8;

/// Temperature and chemical potential of a lead.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeadSpec {
    pub beta: f64,
    pub mu: f64,
}

impl LeadSpec {
    pub fn new(beta: f64, mu: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::InvalidModel(format!(
                "inverse temperature {beta} must be positive"
            )));
        }
        Ok(LeadSpec { beta, mu })
    }
}

/// Energy of the lead mode with quasi-momentum `ξ ∈ ]0, π[`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Dispersion {
    /// `ε(ξ) = 1 - cos ξ`, the Dirichlet tight-binding lead `-Δ/2`.
    TightBinding,
    /// `ε(ξ) = J cos ξ - λ`, the Jordan–Wigner image of an XY lead.
    Xy { j: f64, lambda: f64 },
}

impl Dispersion {
    pub fn energy(&self, xi: f64) -> f64 {
        match *self {
            Dispersion::TightBinding => 1.0 - xi.cos(),
            Dispersion::Xy { j, lambda } => j * xi.cos() - lambda,
        }
    }
}

/// Sign of the phase `e^{±2iNξ}` in the XY scattering matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhaseConvention {
    OppositeToCoupling,
    SameAsCoupling,
}

type SMatrixFn = dyn Fn(f64) -> CMat + Send + Sync;

/// On-shell scattering matrix `s(ξ)` between `n` leads.
#[derive(Clone)]
pub struct ScatteringData {
    pub n: usize,
    pub dispersion: Dispersion,
    s: Arc<SMatrixFn>,
}

impl std::fmt::Debug for ScatteringData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScatteringData")
            .field("n", &self.n)
            .field("dispersion", &self.dispersion)
            .finish()
    }
}

impl ScatteringData {
    pub fn from_fn(n: usize, dispersion: Dispersion, s: impl Fn(f64) -> CMat + Send + Sync + 'static) -> Self {
        ScatteringData {
            n,
            dispersion,
            s: Arc::new(s),
        }
    }

    /// Two Dirichlet leads joined through a chain of `2l+1` sites: `s(ξ) = e^{2ilξ}[[0,1],[1,0]]`.
    pub fn dirichlet_chain(l: usize) -> Self {
        Self::from_fn(2, Dispersion::TightBinding, move |xi| {
            let ph = C64::new(0.0, 2.0 * l as f64 * xi).exp();
            CMat::from_row_slice(2, 2, &[C64::new(0.0, 0.0), ph, ph, C64::new(0.0, 0.0)])
        })
    }

    /// Fisher–Lee scattering matrix of a sample `h_S` coupled by `λ(|χ_j⟩⟨δ_0^{(j)}| + h.c.)`
    /// to semi-infinite Dirichlet tight-binding leads.
    pub fn fisher_lee(h_s: &HermitianOperator, chis: &[DVector<C64>], lambda: f64) -> Self {
        let h = h_s.matrix().clone();
        let chis = chis.to_vec();
        let n = chis.len();
        Self::from_fn(n, Dispersion::TightBinding, move |xi| {
            let e = 1.0 - xi.cos();
            let g = C64::new(0.0, xi).exp() * -2.0;
            let d = h.nrows();
            let mut m = CMat::identity(d, d) * cr(e) - &h;
            for c in &chis {
                m -= c * c.adjoint() * (g * lambda * lambda);
            }
            let green = m
                .try_inverse()
                .unwrap_or_else(|| CMat::from_element(d, d, C64::new(f64::NAN, 0.0)));
            let gamma = 4.0 * lambda * lambda * xi.sin();
            CMat::from_fn(n, n, |j, k| {
                let amp = chis[j].dotc(&(&green * &chis[k]));
                let delta = if j == k { 1.0 } else { 0.0 };
                C64::new(delta, 0.0) - C64::new(0.0, gamma) * amp
            })
        })
    }

    pub fn at(&self, xi: f64) -> CMat {
        (self.s)(xi)
    }

    pub fn unitarity_defect(&self, xi: f64) -> f64 {
        let s = self.at(xi);
        crate::numerics::max_abs(&(s.adjoint() * &s - CMat::identity(self.n, self.n)))
    }

    /// Transmission probabilities `t_{jk}(ξ) = |s_{jk}(ξ) - δ_{jk}|²`.
    pub fn transmission(&self, xi: f64) -> Vec<Vec<f64>> {
        let s = self.at(xi);
        (0..self.n)
            .map(|j| {
                (0..self.n)
                    .map(|k| (s[(j, k)] - if j == k { cr(1.0) } else { cr(0.0) }).norm_sqr())
                    .collect()
            })
            .collect()
    }

    fn checked(&self, xi: f64) -> Result<CMat> {
        let s = self.at(xi);
        let defect = crate::numerics::max_abs(&(s.adjoint() * &s - CMat::identity(self.n, self.n)));
        if !(defect <= UNITARITY_TOL) {
            return Err(Error::InvalidModel(format!(
                "s(ξ) not unitary at ξ={xi} (defect {defect:e})"
            )));
        }
        Ok(s)
    }
}

fn check_leads(leads: &[LeadSpec], s: &ScatteringData) -> Result<()> {
    if leads.len() != s.n {
        return Err(Error::DimensionMismatch(format!(
            "{} leads, s is {}×{}",
            leads.len(),
            s.n,
            s.n
        )));
    }
    Ok(())
}

/// `k_j(ξ) = -β_j(ε(ξ) - μ_j)`.
fn generators(leads: &[LeadSpec], e: f64) -> Vec<f64> {
    leads.iter().map(|l| -l.beta * (e - l.mu)).collect()
}

fn diag(v: &[f64], f: impl Fn(f64) -> f64) -> CMat {
    CMat::from_diagonal(&DVector::from_iterator(v.len(), v.iter().map(|&x| cr(f(x)))))
}

/// `∫₀^π f(ξ) dε(ξ)/2π` with `dε = sin ξ dξ`, never evaluating the endpoints.
fn spectral_integral(f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let failure = std::cell::Cell::new(None);
    let v = gauss_adaptive(
        |xi| match f(xi) {
            Ok(v) => v * xi.sin() / (2.0 * PI),
            Err(e) => {
                failure.set(Some(e));
                0.0
            }
        },
        0.0,
        PI,
        RTOL,
        ATOL,
    )?;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// Large-time entropic pressure `e_{p,+}(α)`:
/// `∫ log det[1 + T(e^{-k}(e^{k(1-α)/p} s e^{2αk/p} s† e^{k(1-α)/p})^{p/2} - 1)] dε/2π`,
/// with `e^{(1-α)k + α s k s†}` in place of the power for `p = ∞`.
pub fn ebb_eplus(leads: &[LeadSpec], s: &ScatteringData, alpha: f64, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::BadExponent(p));
    }
    check_leads(leads, s)?;
    spectral_integral(|xi| {
        let k = generators(leads, s.dispersion.energy(xi));
        let sm = s.checked(xi)?;
        let t = diag(&k, fermi_of_generator);
        let x = if p.is_infinite() {
            let mix = HermitianOperator::from_matrix_unchecked(
                diag(&k, |x| (1.0 - alpha) * x) + &sm * diag(&k, |x| alpha * x) * sm.adjoint(),
            );
            diag(&k, |x| (-x).exp()) * mix.map(f64::exp).into_matrix()
        } else if p == 2.0 {
            diag(&k, |x| (-alpha * x).exp()) * &sm * diag(&k, |x| (alpha * x).exp()) * sm.adjoint()
        } else {
            let outer = diag(&k, |x| ((1.0 - alpha) * x / p).exp());
            let inner = &sm * diag(&k, |x| (2.0 * alpha * x / p).exp()) * sm.adjoint();
            let sandwich = HermitianOperator::from_matrix_unchecked(&outer * inner * &outer);
            diag(&k, |x| (-x).exp()) * sandwich.map(|l| l.max(0.0).powf(p / 2.0)).into_matrix()
        };
        log_det_one_plus(&t, &x, alpha)
    })
}

/// `e_{2,+}(α) = ∫₀^π log det(1 + T(ξ)(e^{-αk(ξ)} s(ξ) e^{αk(ξ)} s(ξ)† - 1)) dε(ξ)/2π`.
pub fn ebb_e2plus(leads: &[LeadSpec], s: &ScatteringData, alpha: f64) -> Result<f64> {
    ebb_eplus(leads, s, alpha, 2.0)
}

fn multi_generator(leads: &[LeadSpec], e: f64, alpha: &[f64]) -> Vec<f64> {
    let n = leads.len();
    leads
        .iter()
        .enumerate()
        .map(|(j, l)| -l.beta * (alpha[j] * e - alpha[n + j] * l.mu))
        .collect()
}

/// Multi-parameter version with `k(𝛂, ξ) = -Σ β_j(α_j ε - α_{n+j} μ_j) 1_j`.
pub fn ebb_e2plus_multi(leads: &[LeadSpec], s: &ScatteringData, alpha: &[f64]) -> Result<f64> {
    check_leads(leads, s)?;
    if alpha.len() != 2 * leads.len() {
        return Err(Error::DimensionMismatch(format!(
            "need {} parameters, got {}",
            2 * leads.len(),
            alpha.len()
        )));
    }
    spectral_integral(|xi| {
        let e = s.dispersion.energy(xi);
        let t = diag(&generators(leads, e), fermi_of_generator);
        let ka = multi_generator(leads, e, alpha);
        let sm = s.checked(xi)?;
        let x = diag(&ka, |x| (-x).exp()) * &sm * diag(&ka, f64::exp) * sm.adjoint();
        log_det_one_plus(&t, &x, alpha[0])
    })
}

/// Large-time naive generating function `∫ log det(1 + T(e^{s†k(𝛂)s - k(𝛂)} - 1)) dε/2π`.
pub fn ebb_naive_plus(leads: &[LeadSpec], s: &ScatteringData, alpha: &[f64]) -> Result<f64> {
    check_leads(leads, s)?;
    if alpha.len() != 2 * leads.len() {
        return Err(Error::DimensionMismatch(format!(
            "need {} parameters, got {}",
            2 * leads.len(),
            alpha.len()
        )));
    }
    spectral_integral(|xi| {
        let e = s.dispersion.energy(xi);
        let t = diag(&generators(leads, e), fermi_of_generator);
        let ka = diag(&multi_generator(leads, e, alpha), |x| x);
        let sm = s.checked(xi)?;
        let diff = HermitianOperator::from_matrix_unchecked(sm.adjoint() * &ka * &sm - ka);
        log_det_one_plus(&t, &diff.map(f64::exp).into_matrix(), alpha[0])
    })
}

/// Closed form for two Dirichlet leads joined by a perfectly transmitting chain,
/// `(1/2π)∫₀² log(1 - sinh(αΔ/2) sinh((1-α)Δ/2) / (cosh(β_L(ε-μ_L)/2) cosh(β_R(ε-μ_R)/2))) dε`
/// with `Δ = β_R(ε-μ_R) - β_L(ε-μ_L)`. The value does not depend on `p`.
pub fn ebb_two_lead_closed(beta_l: f64, beta_r: f64, mu_l: f64, mu_r: f64, alpha: f64, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::BadExponent(p));
    }
    let bad = std::cell::Cell::new(false);
    let v = gauss_adaptive(
        |e| {
            let (xl, xr) = (beta_l * (e - mu_l), beta_r * (e - mu_r));
            let d = xr - xl;
            let arg = 1.0
                - (alpha * d / 2.0).sinh() * ((1.0 - alpha) * d / 2.0).sinh() / ((xl / 2.0).cosh() * (xr / 2.0).cosh());
            if !(arg > 0.0) {
                bad.set(true);
                return 0.0;
            }
            arg.ln() / (2.0 * PI)
        },
        0.0,
        2.0,
        RTOL,
        ATOL,
    )?;
    if bad.get() {
        return Err(Error::DomainError(alpha));
    }
    Ok(v)
}

/// Steady energy and charge flux out of a lead.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeadFlux {
    pub energy: f64,
    pub charge: f64,
}

/// Landauer–Büttiker: `ω₊(Φ_j) = Σ_k ∫ t_{jk}(ρ_j - ρ_k) ε dε/2π`, and the charge flux without `ε`.
pub fn landauer_buttiker(leads: &[LeadSpec], s: &ScatteringData) -> Result<Vec<LeadFlux>> {
    check_leads(leads, s)?;
    let n = leads.len();
    let kernel = |j: usize, with_energy: bool| {
        move |xi: f64| -> Result<f64> {
            s.checked(xi)?;
            let e = s.dispersion.energy(xi);
            let rho: Vec<f64> = generators(leads, e).into_iter().map(fermi_of_generator).collect();
            let t = s.transmission(xi);
            let sum: f64 = (0..n).map(|k| t[j][k] * (rho[j] - rho[k])).sum();
            Ok(if with_energy { sum * e } else { sum })
        }
    };
    (0..n)
        .map(|j| {
            Ok(LeadFlux {
                energy: spectral_integral(kernel(j, true))?,
                charge: spectral_integral(kernel(j, false))?,
            })
        })
        .collect()
}

/// Levitov–Lesovik charge generating function
/// `∫₀^π log det(1 + T(s† s^𝛎 - 1)) dε/2π` with `s^𝛎_{jk} = s_{jk} e^{ν_k - ν_j}`.
pub fn levitov_lesovik_rate(leads: &[LeadSpec], s: &ScatteringData, nu: &[f64]) -> Result<f64> {
    check_leads(leads, s)?;
    if nu.len() != leads.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} leads, {} counting parameters",
            leads.len(),
            nu.len()
        )));
    }
    spectral_integral(|xi| {
        let t = diag(&generators(leads, s.dispersion.energy(xi)), fermi_of_generator);
        let sm = s.checked(xi)?;
        let snu = CMat::from_fn(s.n, s.n, |j, k| sm[(j, k)] * (nu[k] - nu[j]).exp());
        log_det_one_plus(&t, &(sm.adjoint() * snu), nu.first().copied().unwrap_or(0.0))
    })
}
