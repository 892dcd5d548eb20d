//! Finite quantum dynamical systems and their entropic functionals.

mod open;
mod response;

pub use open::{build_open_system, OpenSystem, OpenSystemSpec, ReservoirSpec, SampleSpec};
pub use response::{
    e_gen, e_gen_exact, finite_time_transport, finite_time_transport_with, interaction_propagator, kubo_mari,
    kubo_mari_quadrature, time_average, FluxFamily, ForceFamily, GreenKuboOptions, LinearResponseFamily,
    TransportMatrix,
};

use crate::error::{Error, Result};
use crate::numerics::quad::{deriv1, deriv2};
use crate::numerics::{cr, evolve, joint_eigenbasis, max_abs, propagator, CMat, HermitianOperator, I};
use crate::states::{relative_entropy, DensityMatrix};

/// Tolerance for the structural invariants of a system.
pub const STRUCT_TOL: f64 = 1e-10;

/// Antiunitary time reversal `Θ(A) = U Ā U†`.
#[derive(Clone, Debug)]
pub struct TimeReversal {
    pub unitary: Option<CMat>,
}

impl TimeReversal {
    /// Plain complex conjugation in the computational basis.
    pub fn conjugation() -> Self {
        TimeReversal { unitary: None }
    }

    pub fn apply(&self, a: &CMat) -> CMat {
        let c = a.map(|z| z.conj());
        match &self.unitary {
            Some(u) => u * c * u.adjoint(),
            None => c,
        }
    }
}

/// `(H, ω)` with optional time reversal and commuting decomposition `log ω = Σ Q_j`.
#[derive(Clone, Debug)]
pub struct QuantumDynamicalSystem {
    pub h: HermitianOperator,
    pub omega: DensityMatrix,
    pub theta: Option<TimeReversal>,
    pub charges: Option<Vec<HermitianOperator>>,
}

impl QuantumDynamicalSystem {
    pub fn new(h: HermitianOperator, omega: DensityMatrix) -> Result<Self> {
        if h.dim() != omega.dim() {
            return Err(Error::DimensionMismatch(format!(
                "H is {}, ω is {}",
                h.dim(),
                omega.dim()
            )));
        }
        if !omega.is_faithful() {
            return Err(Error::NotFaithful);
        }
        Ok(QuantumDynamicalSystem {
            h,
            omega,
            theta: None,
            charges: None,
        })
    }

    /// Attaches a time reversal after checking `Θ(H) = H` and `Θ(ω) = ω`.
    pub fn with_time_reversal(mut self, theta: TimeReversal) -> Result<Self> {
        let dh = max_abs(&(theta.apply(self.h.matrix()) - self.h.matrix()));
        let dw = max_abs(&(theta.apply(self.omega.matrix()) - self.omega.matrix()));
        if dh > STRUCT_TOL * (1.0 + self.h.norm()) || dw > STRUCT_TOL {
            return Err(Error::InvalidModel(format!(
                "not time-reversal invariant ({dh:e}, {dw:e})"
            )));
        }
        self.theta = Some(theta);
        Ok(self)
    }

    /// Attaches a commuting family with `Σ Q_j = log ω`.
    pub fn with_charges(mut self, charges: Vec<HermitianOperator>) -> Result<Self> {
        let refs: Vec<&HermitianOperator> = charges.iter().collect();
        joint_eigenbasis(&refs, STRUCT_TOL)?;
        let sum = charges
            .iter()
            .fold(CMat::zeros(self.dim(), self.dim()), |acc, q| acc + q.matrix());
        let log = self.log_omega();
        let d = max_abs(&(sum - log.matrix()));
        if d > 1e-9 * (1.0 + log.norm()) {
            return Err(Error::InvalidModel(format!(
                "charges do not add up to log ω (defect {d:e})"
            )));
        }
        self.charges = Some(charges);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn log_omega(&self) -> HermitianOperator {
        self.omega.log().expect("faithful by construction")
    }

    /// `ω_t = e^{-itH} ω e^{itH}`.
    pub fn omega_t(&self, t: f64) -> DensityMatrix {
        self.omega.evolve(&self.h, t)
    }

    /// Heisenberg evolution `τ^t(A)`.
    pub fn tau(&self, a: &CMat, t: f64) -> CMat {
        evolve(a, &self.h, cr(t)).expect("dimension checked")
    }

    pub fn is_tri(&self) -> bool {
        self.theta.is_some()
    }

    /// Same dynamics with another reference state.
    pub fn with_state(&self, omega: DensityMatrix) -> Result<Self> {
        QuantumDynamicalSystem::new(self.h.clone(), omega)
    }
}

/// Entropy production observable `σ = i[log ω, H]`.
pub fn entropy_production(sys: &QuantumDynamicalSystem) -> HermitianOperator {
    let l = sys.log_omega();
    let c = l.matrix() * sys.h.matrix() - sys.h.matrix() * l.matrix();
    HermitianOperator::from_matrix_unchecked(c * I)
}

/// Relative Hamiltonian `ℓ_{ω_t|ω} = log ω_t - log ω`.
pub fn relative_hamiltonian(sys: &QuantumDynamicalSystem, t: f64) -> HermitianOperator {
    let l = sys.log_omega();
    let lt = sys.tau(l.matrix(), -t);
    HermitianOperator::from_matrix_unchecked(lt - l.matrix())
}

/// Mean entropy production `ω(Σ^t) = (1/t)(ω(log ω) - ω_t(log ω))`.
pub fn mean_entropy_production(sys: &QuantumDynamicalSystem, t: f64) -> f64 {
    let l = sys.log_omega();
    (sys.omega.expectation(l.matrix()).re - sys.omega_t(t).expectation(l.matrix()).re) / t
}

/// Data shared by all evaluations of `e_{p,t}` at fixed `t`: the spectrum of `ω`
/// and the matrix of `e^{-itH}` in the eigenbasis of `ω`.
struct PressureKernel {
    log_b: Vec<f64>,
    w: CMat,
    log_omega: HermitianOperator,
    log_omega_t: CMat,
}

impl PressureKernel {
    fn new(sys: &QuantumDynamicalSystem, t: f64) -> Self {
        let sd = sys.omega.op().spectral();
        let u = &sd.eigenvectors;
        let w = u.adjoint() * propagator(&sys.h, cr(-t)) * u;
        let log_omega = sys.log_omega();
        let log_omega_t = sys.tau(log_omega.matrix(), -t);
        PressureKernel {
            log_b: sd.eigenvalues.iter().map(|b| b.ln()).collect(),
            w,
            log_omega,
            log_omega_t,
        }
    }

    fn diag_scale(&self, m: &CMat, x: f64) -> CMat {
        let mut out = m.clone();
        for i in 0..m.nrows() {
            let fi = (x * self.log_b[i]).exp();
            for j in 0..m.ncols() {
                out[(i, j)] *= fi;
            }
        }
        out
    }

    fn eval(&self, alpha: f64, p: f64) -> f64 {
        if p.is_infinite() {
            let k = self.log_omega.matrix() * cr(1.0 - alpha) + &self.log_omega_t * cr(alpha);
            return log_trace_exp(&HermitianOperator::from_matrix_unchecked(k));
        }
        // X = CC† with C = ω^{(1-α)/p} ω_t^{α/p}, so tr X^{p/2} = Σ σ_i(C)^p
        let wt = self.diag_scale(&self.w.adjoint(), alpha / p);
        let c = self.diag_scale(&(&self.w * wt), (1.0 - alpha) / p);
        let s: f64 = c.singular_values().iter().map(|&l| l.powf(p)).sum();
        s.ln()
    }
}

/// `log tr e^K` evaluated stably.
pub fn log_trace_exp(k: &HermitianOperator) -> f64 {
    let ev = k.eigenvalues();
    let top = ev.last().copied().unwrap_or(0.0);
    ev.iter().map(|l| (l - top).exp()).sum::<f64>().ln() + top
}

/// Entropic pressure
/// `e_{p,t}(α) = log tr[(ω^{(1-α)/p} ω_t^{2α/p} ω^{(1-α)/p})^{p/2}]`,
/// and `log tr e^{log ω + α ℓ_{ω_t|ω}}` for `p = ∞`.
pub fn e_pt(sys: &QuantumDynamicalSystem, t: f64, alpha: f64, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::BadExponent(p));
    }
    Ok(PressureKernel::new(sys, t).eval(alpha, p))
}

/// `e_{p,t}` on a grid of `α`, sharing the time evolution.
pub fn e_pt_curve(sys: &QuantumDynamicalSystem, t: f64, alphas: &[f64], p: f64) -> Result<Vec<f64>> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::BadExponent(p));
    }
    let k = PressureKernel::new(sys, t);
    Ok(alphas.iter().map(|&a| k.eval(a, p)).collect())
}

/// Finite-difference derivatives of `α ↦ e_{p,t}(α)` next to their closed-form values.
#[derive(Clone, Copy, Debug)]
pub struct PressureDerivatives {
    pub d_at_0: f64,
    pub d_at_1: f64,
    pub d2_at_0: f64,
    /// `S(ω|ω_t) = ω(ℓ_{ω_t|ω})`.
    pub expected_d_at_0: f64,
    /// `-S(ω_t|ω)`.
    pub expected_d_at_1: f64,
    /// `ω(ℓ²) - ω(ℓ)²`, the second derivative for `p = 2`.
    pub variance: f64,
    /// `⟨ℓ|ℓ⟩_ω - ω(ℓ)²`, the second derivative for `p = ∞`.
    pub kubo_mari_variance: f64,
}

pub fn e_pt_derivatives(sys: &QuantumDynamicalSystem, t: f64, p: f64) -> Result<PressureDerivatives> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::BadExponent(p));
    }
    let k = PressureKernel::new(sys, t);
    let f = |a: f64| k.eval(a, p);
    let h = 1e-3;
    let ell = relative_hamiltonian(sys, t);
    let mean = sys.omega.expectation(ell.matrix()).re;
    let sq = sys.omega.expectation(&(ell.matrix() * ell.matrix())).re;
    let km = kubo_mari(&sys.omega, ell.matrix(), ell.matrix())?.re;
    let wt = sys.omega_t(t);
    Ok(PressureDerivatives {
        d_at_0: deriv1(f, 0.0, h),
        d_at_1: deriv1(f, 1.0, h),
        d2_at_0: deriv2(f, 0.0, h),
        expected_d_at_0: relative_entropy(&sys.omega, &wt)?.unwrap(),
        expected_d_at_1: -relative_entropy(&wt, &sys.omega)?.unwrap(),
        variance: sq - mean * mean,
        kubo_mari_variance: km - mean * mean,
    })
}

/// Multi-parameter entropic pressure built from the charge decomposition `log ω = Σ Q_j`.
pub fn e_pt_multi(sys: &QuantumDynamicalSystem, t: f64, alpha: &[f64], p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::BadExponent(p));
    }
    let charges = sys
        .charges
        .as_ref()
        .ok_or_else(|| Error::InvalidModel("system has no charge decomposition".into()))?;
    if charges.len() != alpha.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} charges, {} parameters",
            charges.len(),
            alpha.len()
        )));
    }
    if p.is_infinite() {
        let mut k = sys.log_omega().matrix().clone();
        for (q, a) in charges.iter().zip(alpha) {
            let ell = sys.tau(q.matrix(), -t) - q.matrix();
            k += ell * cr(*a);
        }
        return Ok(log_trace_exp(&HermitianOperator::from_matrix_unchecked(k)));
    }
    let refs: Vec<&HermitianOperator> = charges.iter().collect();
    let (v, tuples) = joint_eigenbasis(&refs, STRUCT_TOL)?;
    let w = v.adjoint() * propagator(&sys.h, cr(-t)) * &v;
    let exponent = |coef: &dyn Fn(usize) -> f64, i: usize| -> f64 {
        tuples[i]
            .iter()
            .enumerate()
            .map(|(j, q)| coef(j) * q)
            .sum::<f64>()
            .exp()
    };
    let outer = |j: usize| (1.0 - alpha[j]) / p;
    let inner = |j: usize| 2.0 * alpha[j] / p;
    let n = sys.dim();
    let mut mid = w.adjoint();
    for i in 0..n {
        let f = exponent(&inner, i);
        for j in 0..n {
            mid[(i, j)] *= f;
        }
    }
    let mut x = &w * mid;
    for i in 0..n {
        let fi = exponent(&outer, i);
        for j in 0..n {
            let fj = exponent(&outer, j);
            x[(i, j)] *= fi * fj;
        }
    }
    let x = HermitianOperator::from_matrix_unchecked(x);
    let s: f64 = x.eigenvalues().iter().map(|&l| l.max(0.0).powf(p / 2.0)).sum();
    Ok(s.ln())
}

/// `e_{∞,t}` computed with an arbitrary reference state `ρ` in place of `ω`.
pub fn e_infty_with_reference(sys: &QuantumDynamicalSystem, rho: &DensityMatrix, t: f64, alpha: f64) -> Result<f64> {
    e_pt(&sys.with_state(rho.clone())?, t, alpha, f64::INFINITY)
}

/// `ω(e^{-tΣ^t})`, which is at least one by Golden–Thompson.
pub fn es_failure_functional(sys: &QuantumDynamicalSystem, t: f64) -> f64 {
    let l = sys.log_omega();
    let k = sys.tau(l.matrix(), t) - l.matrix();
    let e = HermitianOperator::from_matrix_unchecked(k).map(f64::exp);
    sys.omega.expectation(e.matrix()).re
}

/// Seeded random time-reversal invariant system: real `H` and real faithful `ω`.
pub fn random_tri_system(n: usize, seed: u64) -> QuantumDynamicalSystem {
    let mut rng = crate::numerics::random::rng(seed);
    let h = crate::numerics::random::goe(n, &mut rng);
    let w = DensityMatrix::new(crate::numerics::random::real_density(n, &mut rng)).expect("faithful sample");
    QuantumDynamicalSystem::new(h, w)
        .and_then(|s| s.with_time_reversal(TimeReversal::conjugation()))
        .expect("real data commute with conjugation")
}

/// Seeded random system with complex `H` and faithful `ω`.
pub fn random_system(n: usize, seed: u64) -> QuantumDynamicalSystem {
    let mut rng = crate::numerics::random::rng(seed);
    let h = crate::numerics::random::gue(n, &mut rng);
    let w = DensityMatrix::new(crate::numerics::random::density(n, &mut rng)).expect("faithful sample");
    QuantumDynamicalSystem::new(h, w).expect("valid sample")
}
