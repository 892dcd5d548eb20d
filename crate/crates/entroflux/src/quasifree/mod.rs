//! Quasi-free fermions: determinant formulas, the electronic black box and the XY chain.
//!
//! Everything here is driven by one-particle data. A quasi-free state is fixed by its
//! density `0 ≤ T ≤ 1` on the one-particle space; when `0 < T < 1` it is the Gibbs
//! state of `dΓ(k)` with `k = log(T(1-T)^{-1})`.

mod ebb;
mod fock;
mod model;
mod scattering;
mod xy;

pub use ebb::{ebb_build, EbbModel, EbbSpec, EntropyBalanceEbb};
pub use fock::{annihilation, creation, creation_operators, fock_oracle, gamma, second_quantize, MAX_FOCK_DIM};
pub use model::{LeadDocument, ModelDocument, SampleDocument};
pub use scattering::{
    ebb_e2plus, ebb_e2plus_multi, ebb_eplus, ebb_naive_plus, ebb_two_lead_closed, landauer_buttiker,
    levitov_lesovik_rate, Dispersion, LeadFlux, LeadSpec, PhaseConvention, ScatteringData,
};
pub use xy::{
    xy_eplus, xy_eplus_closed, xy_eplus_generalized, xy_heat_current, xy_magnetization, xy_magnetization_limit,
    xy_magnetization_oracle, xy_map, xy_scattering, xy_spin_hamiltonian,
};

use std::ops::Range;

use nalgebra::DVector;

use crate::dynsys::QuantumDynamicalSystem;
use crate::error::{Error, Result};
use crate::numerics::{cr, max_abs, propagator, CMat, HermitianOperator, C64};
use crate::states::DensityMatrix;

/// Margin by which a one-particle density must stay inside `[0, 1]`.
pub const KTOL: f64 = 1e-12;

/// One-particle description of a quasi-free system.
#[derive(Clone, Debug)]
pub struct OnePartModel {
    pub h: HermitianOperator,
    pub t: HermitianOperator,
    k: Option<HermitianOperator>,
    pub leads: Vec<Range<usize>>,
    pub charges: Option<Vec<HermitianOperator>>,
}

impl OnePartModel {
    pub fn new(h: HermitianOperator, t: HermitianOperator) -> Result<Self> {
        if h.dim() != t.dim() {
            return Err(Error::DimensionMismatch(format!("h is {}, T is {}", h.dim(), t.dim())));
        }
        let ev = t.eigenvalues();
        let (lo, hi) = (ev[0], ev[ev.len() - 1]);
        if lo < -KTOL || hi > 1.0 + KTOL {
            return Err(Error::NotDensity(format!("spectrum of T spans [{lo}, {hi}]")));
        }
        let k = (lo > KTOL && hi < 1.0 - KTOL).then(|| t.map(|x| (x / (1.0 - x)).ln()));
        Ok(OnePartModel {
            h,
            t,
            k,
            leads: Vec::new(),
            charges: None,
        })
    }

    /// Model with `T = (1 + e^{-k})^{-1}`.
    pub fn from_generator(h: HermitianOperator, k: HermitianOperator) -> Result<Self> {
        if h.dim() != k.dim() {
            return Err(Error::DimensionMismatch(format!("h is {}, k is {}", h.dim(), k.dim())));
        }
        let t = k.map(fermi_of_generator);
        Ok(OnePartModel {
            h,
            t,
            k: Some(k),
            leads: Vec::new(),
            charges: None,
        })
    }

    /// Fermi–Dirac density `(1 + e^{β(h-μ)})^{-1}`.
    pub fn thermal(h: HermitianOperator, beta: f64, mu: f64) -> Result<Self> {
        let k = h.map(|e| -beta * (e - mu));
        Self::from_generator(h, k)
    }

    pub fn with_leads(mut self, leads: Vec<Range<usize>>) -> Self {
        self.leads = leads;
        self
    }

    /// Attach commuting one-particle charges `c_j` with `Σ c_j = k`.
    pub fn with_charges(mut self, charges: Vec<HermitianOperator>) -> Result<Self> {
        let k = self.generator()?;
        let n = k.dim();
        let sum = charges.iter().fold(CMat::zeros(n, n), |acc, c| acc + c.matrix());
        let defect = max_abs(&(sum - k.matrix()));
        if defect > 1e-9 * k.norm().max(1.0) {
            return Err(Error::InvalidModel(format!(
                "charges do not sum to k (defect {defect:e})"
            )));
        }
        for a in &charges {
            for b in &charges {
                let c = crate::numerics::commutator(a.matrix(), b.matrix());
                if max_abs(&c) > 1e-9 {
                    return Err(Error::NonCommutingFamily(max_abs(&c)));
                }
            }
        }
        self.charges = Some(charges);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn is_faithful(&self) -> bool {
        self.k.is_some()
    }

    /// `k = log(T(1-T)^{-1})`.
    pub fn generator(&self) -> Result<&HermitianOperator> {
        self.k.as_ref().ok_or(Error::NonFaithfulDensity)
    }

    pub fn lead_projection(&self, j: usize) -> HermitianOperator {
        let d: Vec<f64> = (0..self.dim())
            .map(|i| if self.leads[j].contains(&i) { 1.0 } else { 0.0 })
            .collect();
        HermitianOperator::from_diagonal(&d)
    }

    /// `T_t = e^{-ith} T e^{ith}`.
    pub fn density_at(&self, t: f64) -> HermitianOperator {
        let u = propagator(&self.h, cr(-t));
        HermitianOperator::from_matrix_unchecked(&u * self.t.matrix() * u.adjoint())
    }

    /// `ω_T(dΓ(A)) = tr(TA)`.
    pub fn expectation_dgamma(&self, a: &CMat) -> C64 {
        (self.t.matrix() * a).trace()
    }
}

pub(crate) fn fermi_of_generator(k: f64) -> f64 {
    if k >= 0.0 {
        1.0 / (1.0 + (-k).exp())
    } else {
        let e = k.exp();
        e / (1.0 + e)
    }
}

fn exp_scaled(k: &HermitianOperator, x: f64) -> CMat {
    k.map(|l| (x * l).exp()).into_matrix()
}

/// Complex `log det M` through an LU factorisation.
pub fn log_det(m: &CMat) -> C64 {
    let lu = m.clone().lu();
    let u = lu.u();
    let mut s: C64 = (0..u.nrows()).map(|i| u[(i, i)].ln()).sum();
    if lu.p().determinant::<f64>() < 0.0 {
        s += C64::new(0.0, std::f64::consts::PI);
    }
    s
}

/// `log det(1 + T(X - 1))`, which must be a positive real number.
pub(crate) fn log_det_one_plus(t: &CMat, x: &CMat, alpha: f64) -> Result<f64> {
    let n = t.nrows();
    let id = CMat::identity(n, n);
    let m = &id + t * (x - &id);
    let l = log_det(&m);
    let phase = C64::new(0.0, l.im).exp();
    if phase.re <= 0.0 || phase.im.abs() > 1e-6 || !l.re.is_finite() {
        return Err(Error::DomainError(alpha));
    }
    Ok(l.re)
}

/// Quasi-free entropic pressure
/// `log det[1 + T(e^{-k}(e^{k(1-α)/p} e^{k_t 2α/p} e^{k(1-α)/p})^{p/2} - 1)]`
/// and its `p = ∞` counterpart `log det(1 + T(e^{-k} e^{(1-α)k + α k_t} - 1))`.
pub fn qf_e_pt(model: &OnePartModel, t: f64, alpha: f64, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::BadExponent(p));
    }
    let k = model.generator()?;
    let u = propagator(&model.h, cr(-t));
    let x = if p.is_infinite() {
        let kt = &u * k.matrix() * u.adjoint();
        let mix = HermitianOperator::from_matrix_unchecked(k.matrix() * cr(1.0 - alpha) + kt * cr(alpha));
        exp_scaled(k, -1.0) * mix.map(f64::exp).into_matrix()
    } else if p == 2.0 {
        exp_scaled(k, -alpha) * &u * exp_scaled(k, alpha) * u.adjoint()
    } else {
        let outer = exp_scaled(k, (1.0 - alpha) / p);
        let inner = &u * exp_scaled(k, 2.0 * alpha / p) * u.adjoint();
        let sandwich = HermitianOperator::from_matrix_unchecked(&outer * inner * &outer);
        exp_scaled(k, -1.0) * sandwich.map(|l| l.max(0.0).powf(p / 2.0)).into_matrix()
    };
    log_det_one_plus(model.t.matrix(), &x, alpha)
}

fn charge_generator(model: &OnePartModel, alpha: &[f64]) -> Result<HermitianOperator> {
    let charges = model
        .charges
        .as_ref()
        .ok_or_else(|| Error::InvalidModel("model has no charge decomposition".into()))?;
    if charges.len() != alpha.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} charges, {} parameters",
            charges.len(),
            alpha.len()
        )));
    }
    let n = model.dim();
    let k = charges
        .iter()
        .zip(alpha)
        .fold(CMat::zeros(n, n), |acc, (c, a)| acc + c.matrix() * cr(*a));
    Ok(HermitianOperator::from_matrix_unchecked(k))
}

/// `log det(1 + T(e^{-k(𝛂)} e^{k_t(𝛂)} - 1))` with `k(𝛂) = Σ α_j c_j`.
pub fn qf_e2_multi(model: &OnePartModel, t: f64, alpha: &[f64]) -> Result<f64> {
    let ka = charge_generator(model, alpha)?;
    let u = propagator(&model.h, cr(-t));
    let x = exp_scaled(&ka, -1.0) * &u * exp_scaled(&ka, 1.0) * u.adjoint();
    log_det_one_plus(model.t.matrix(), &x, alpha.first().copied().unwrap_or(0.0))
}

/// Naive generating function `log det(1 + T(e^{k_{-t}(𝛂) - k(𝛂)} - 1))`.
pub fn qf_naive(model: &OnePartModel, t: f64, alpha: &[f64]) -> Result<f64> {
    let ka = charge_generator(model, alpha)?;
    let u = propagator(&model.h, cr(-t));
    let diff = HermitianOperator::from_matrix_unchecked(u.adjoint() * ka.matrix() * &u - ka.matrix());
    let x = diff.map(f64::exp).into_matrix();
    log_det_one_plus(model.t.matrix(), &x, alpha.first().copied().unwrap_or(0.0))
}

fn faithful_generator(t: &HermitianOperator) -> Result<HermitianOperator> {
    let ev = t.eigenvalues();
    if ev[0] <= KTOL || ev[ev.len() - 1] >= 1.0 - KTOL {
        return Err(Error::NonFaithfulDensity);
    }
    Ok(t.map(|x| (x / (1.0 - x)).ln()))
}

/// Relative Hamiltonian `log ω_{T₁} - log ω_T = c + dΓ(k_{T₁} - k_T)`, returned as
/// `(c, k_{T₁} - k_T)` with `c = log det((1-T₁)(1-T)^{-1})`.
pub fn qf_relative_hamiltonian(t1: &HermitianOperator, t: &HermitianOperator) -> Result<(f64, HermitianOperator)> {
    if t1.dim() != t.dim() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", t1.dim(), t.dim())));
    }
    let (k1, k) = (faithful_generator(t1)?, faithful_generator(t)?);
    let logdet = |x: &HermitianOperator| x.eigenvalues().iter().map(|e| (1.0 - e).ln()).sum::<f64>();
    Ok((logdet(t1) - logdet(t), k1.sub(&k)))
}

/// `S(ω_{T₁}|ω_{T₂}) = tr(T₁(log T₂ - log T₁) + (1-T₁)(log(1-T₂) - log(1-T₁)))`.
pub fn qf_relative_entropy(t1: &HermitianOperator, t2: &HermitianOperator) -> Result<f64> {
    if t1.dim() != t2.dim() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", t1.dim(), t2.dim())));
    }
    faithful_generator(t2)?;
    let n = t1.dim();
    let id = CMat::identity(n, n);
    let log2 = t2.map(f64::ln);
    let log2c = t2.map(|x| (1.0 - x).ln());
    let cross = (t1.matrix() * log2.matrix()).trace().re + ((&id - t1.matrix()) * log2c.matrix()).trace().re;
    let xlogx = |x: f64| if x <= 0.0 { 0.0 } else { x * x.ln() };
    let own: f64 = t1
        .eigenvalues()
        .iter()
        .map(|&x| xlogx(x.clamp(0.0, 1.0)) + xlogx((1.0 - x).clamp(0.0, 1.0)))
        .sum();
    Ok((cross - own).min(0.0))
}

/// `ω_T(a*(φ_n) ⋯ a*(φ_1) a(ψ_1) ⋯ a(ψ_m)) = δ_{nm} det[⟨ψ_i|T φ_j⟩]`.
pub fn quasifree_expectation(t: &CMat, phis: &[DVector<C64>], psis: &[DVector<C64>]) -> C64 {
    if phis.len() != psis.len() {
        return C64::new(0.0, 0.0);
    }
    if phis.is_empty() {
        return C64::new(1.0, 0.0);
    }
    let n = phis.len();
    let m = CMat::from_fn(n, n, |i, j| psis[i].dotc(&(t * &phis[j])));
    m.determinant()
}

/// The quasi-free state `ω_T = Γ(T(1-T)^{-1}) det(1-T)` on the Fock space.
pub fn fock_state(t: &HermitianOperator) -> Result<DensityMatrix> {
    let ev = t.eigenvalues();
    if ev[ev.len() - 1] >= 1.0 - KTOL || ev[0] < -KTOL {
        return Err(Error::NonFaithfulDensity);
    }
    let ratio = t.map(|x| x.max(0.0) / (1.0 - x));
    let norm: f64 = ev.iter().map(|x| 1.0 - x).product();
    DensityMatrix::from_matrix(gamma(ratio.matrix())? * cr(norm))
}

/// Many-body system `(dΓ(h), ω_T)` on the Fock space, with charges `dΓ(c_j)` when present.
pub fn fock_system(model: &OnePartModel) -> Result<QuantumDynamicalSystem> {
    let k = model.generator()?;
    let h = HermitianOperator::from_matrix_unchecked(second_quantize(model.h.matrix())?);
    let omega = DensityMatrix::from_log(&HermitianOperator::from_matrix_unchecked(second_quantize(k.matrix())?));
    let sys = QuantumDynamicalSystem::new(h, omega)?;
    match &model.charges {
        None => Ok(sys),
        Some(cs) => {
            let log_norm: f64 = model.t.eigenvalues().iter().map(|x| (1.0 - x).ln()).sum();
            let mut qs = Vec::with_capacity(cs.len());
            for (j, c) in cs.iter().enumerate() {
                let mut q = second_quantize(c.matrix())?;
                if j == 0 {
                    let dim = q.nrows();
                    q += CMat::identity(dim, dim) * cr(log_norm);
                }
                qs.push(HermitianOperator::from_matrix_unchecked(q));
            }
            sys.with_charges(qs)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynsys::{e_pt, e_pt_multi};
    use crate::numerics::random::{density, gue, rng};
    use crate::states::relative_entropy;
    use approx::assert_abs_diff_eq;

    fn random_model(d: usize, seed: u64) -> OnePartModel {
        let mut r = rng(seed);
        let h = gue(d, &mut r);
        let k = gue(d, &mut r);
        OnePartModel::from_generator(h, k).unwrap()
    }

    fn random_density(d: usize, seed: u64) -> HermitianOperator {
        let mut r = rng(seed);
        let k = gue(d, &mut r);
        k.map(fermi_of_generator)
    }

    #[test]
    fn pressure_endpoints() {
        let m = random_model(4, 1);
        for p in [1.0, 2.0, 4.0, f64::INFINITY] {
            assert_abs_diff_eq!(qf_e_pt(&m, 1.3, 0.0, p).unwrap(), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(qf_e_pt(&m, 1.3, 1.0, p).unwrap(), 0.0, epsilon = 1e-10);
        }
        assert!(matches!(qf_e_pt(&m, 1.0, 0.5, 0.5), Err(Error::BadExponent(_))));
    }

    #[test]
    fn non_faithful_density_is_rejected() {
        let h = HermitianOperator::from_diagonal(&[0.0, 1.0]);
        let t = HermitianOperator::from_diagonal(&[0.0, 0.5]);
        let m = OnePartModel::new(h, t.clone()).unwrap();
        assert!(matches!(qf_e_pt(&m, 1.0, 0.3, 2.0), Err(Error::NonFaithfulDensity)));
        assert!(matches!(
            qf_relative_hamiltonian(&t, &t),
            Err(Error::NonFaithfulDensity)
        ));
    }

    #[test]
    fn many_body_equivalence() {
        for (d, seed) in [(2, 3), (3, 4), (4, 5)] {
            let m = random_model(d, seed);
            let sys = fock_system(&m).unwrap();
            for p in [1.0, 2.0, 4.0, f64::INFINITY] {
                for alpha in [-0.3, 0.25, 0.7, 1.4] {
                    let one = qf_e_pt(&m, 0.9, alpha, p).unwrap();
                    let many = e_pt(&sys, 0.9, alpha, p).unwrap();
                    assert!((one - many).abs() < 1e-9, "d={d} p={p} α={alpha}: {one} vs {many}");
                }
            }
        }
    }

    #[test]
    fn multi_parameter_many_body_equivalence() {
        let mut r = rng(9);
        let h = gue(3, &mut r);
        let k = HermitianOperator::from_diagonal(&[0.4, -0.7, 1.1]);
        let c1 = HermitianOperator::from_diagonal(&[0.4, 0.0, 0.0]);
        let c2 = HermitianOperator::from_diagonal(&[0.0, -0.7, 1.1]);
        let m = OnePartModel::from_generator(h, k)
            .unwrap()
            .with_charges(vec![c1, c2])
            .unwrap();
        let sys = fock_system(&m).unwrap();
        for a in [[0.3, 0.6], [-0.2, 0.9], [1.0, 1.0]] {
            let one = qf_e2_multi(&m, 1.1, &a).unwrap();
            let many = e_pt_multi(&sys, 1.1, &a, 2.0).unwrap();
            assert!((one - many).abs() < 1e-9);
        }
        assert_abs_diff_eq!(qf_naive(&m, 1.1, &[0.0, 0.0]).unwrap(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn p_two_matches_rewritten_form() {
        let m = random_model(3, 6);
        let k = m.generator().unwrap();
        let u = propagator(&m.h, cr(-0.8));
        let alpha = 0.35;
        let x = exp_scaled(k, -alpha) * &u * exp_scaled(k, alpha) * u.adjoint();
        let direct = log_det(&(CMat::identity(3, 3) + m.t.matrix() * (x - CMat::identity(3, 3)))).re;
        assert_abs_diff_eq!(qf_e_pt(&m, 0.8, alpha, 2.0).unwrap(), direct, epsilon = 1e-12);
    }

    #[test]
    fn two_point_function() {
        let mut r = rng(21);
        let d = 4;
        let t = density(d, &mut r).scale(0.9);
        let ops = creation_operators(d).unwrap();
        let state = fock_state(&t).unwrap();
        let vec = |seed: u64| {
            let g = crate::numerics::random::ginibre(d, 1, &mut rng(seed));
            DVector::from_column_slice(g.as_slice())
        };
        let (phi, psi) = (vec(1), vec(2));
        let lhs = quasifree_expectation(t.matrix(), &[phi.clone()], &[psi.clone()]);
        assert!((lhs - psi.dotc(&(t.matrix() * &phi))).norm() < 1e-14);
        let op = creation(phi.as_slice(), &ops) * annihilation(psi.as_slice(), &ops);
        assert!((state.expectation(&op) - lhs).norm() < 1e-10);

        let (phi2, psi2) = (vec(3), vec(4));
        let lhs2 = quasifree_expectation(t.matrix(), &[phi.clone(), phi2.clone()], &[psi.clone(), psi2.clone()]);
        let op2 = creation(phi2.as_slice(), &ops)
            * creation(phi.as_slice(), &ops)
            * annihilation(psi.as_slice(), &ops)
            * annihilation(psi2.as_slice(), &ops);
        assert!((state.expectation(&op2) - lhs2).norm() < 1e-10);
        assert_eq!(quasifree_expectation(t.matrix(), &[phi], &[]), C64::new(0.0, 0.0));
    }

    #[test]
    fn relative_hamiltonian_against_fock() {
        let (t1, t) = (random_density(3, 31), random_density(3, 32));
        let (c, k) = qf_relative_hamiltonian(&t1, &t).unwrap();
        let (w1, w) = (fock_state(&t1).unwrap(), fock_state(&t).unwrap());
        let lhs = w1.log().unwrap().sub(&w.log().unwrap());
        let rhs = second_quantize(k.matrix()).unwrap() + CMat::identity(8, 8) * cr(c);
        assert!(max_abs(&(lhs.matrix() - rhs)) < 1e-9);

        let (c0, k0) = qf_relative_hamiltonian(&t, &t).unwrap();
        assert_abs_diff_eq!(c0, 0.0, epsilon = 1e-14);
        assert!(k0.norm() < 1e-12);

        let a = HermitianOperator::from_diagonal(&[0.2, 0.7]);
        let b = HermitianOperator::from_diagonal(&[0.4, 0.1]);
        let (c, _) = qf_relative_hamiltonian(&a, &b).unwrap();
        assert_abs_diff_eq!(c, (0.8f64 / 0.6).ln() + (0.3f64 / 0.9).ln(), epsilon = 1e-14);
    }

    #[test]
    fn relative_entropy_against_fock() {
        for d in 2..=5 {
            let (t1, t2) = (random_density(d, 40 + d as u64), random_density(d, 50 + d as u64));
            let one = qf_relative_entropy(&t1, &t2).unwrap();
            let many = relative_entropy(&fock_state(&t1).unwrap(), &fock_state(&t2).unwrap())
                .unwrap()
                .unwrap();
            assert!((one - many).abs() < 1e-9, "d={d}: {one} vs {many}");
        }
    }
}
