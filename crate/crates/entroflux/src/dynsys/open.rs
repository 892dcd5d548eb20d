use super::{entropy_production, QuantumDynamicalSystem, TimeReversal, STRUCT_TOL};
use crate::error::{Error, Result};
use crate::numerics::quad::{simpson, simpson_adaptive};
use crate::numerics::{commutator, cr, max_abs, tensor_embed, trace, CMat, HermitianOperator, RMat, I};
use crate::states::DensityMatrix;

/// A reservoir in equilibrium at `(β, μ)` with Hamiltonian `H` and conserved charge `N`.
#[derive(Clone, Debug)]
pub struct ReservoirSpec {
    pub h: HermitianOperator,
    pub n: HermitianOperator,
    pub beta: f64,
    pub mu: f64,
}

#[derive(Clone, Debug)]
pub struct SampleSpec {
    pub h: HermitianOperator,
    pub n: HermitianOperator,
    pub omega: DensityMatrix,
}

/// Sample coupled to reservoirs. Couplings act on the full space, ordered `[S, R_1, ..., R_n]`.
#[derive(Clone, Debug)]
pub struct OpenSystemSpec {
    pub sample: SampleSpec,
    pub reservoirs: Vec<ReservoirSpec>,
    pub couplings: Vec<HermitianOperator>,
    pub lambda: f64,
}

impl OpenSystemSpec {
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.sample.h.dim())
            .chain(self.reservoirs.iter().map(|r| r.h.dim()))
            .collect()
    }

    /// Qubit sample hopping onto the first site of two-qubit reservoirs.
    /// All matrices are real, so complex conjugation is a time reversal.
    pub fn qubit_toy(betas: &[f64], mus: &[f64], lambda: f64) -> Result<Self> {
        if betas.len() != mus.len() || betas.is_empty() {
            return Err(Error::InvalidModel("need one (β, μ) pair per reservoir".into()));
        }
        let n_res = betas.len();
        let mut dims = vec![2];
        dims.extend(std::iter::repeat(4).take(n_res));
        let lower = real_mat(2, &[0.0, 1.0, 0.0, 0.0]);
        let occ = real_mat(2, &[0.0, 0.0, 0.0, 1.0]);
        let lower1 = lower.kronecker(&CMat::identity(2, 2));
        let lower2 = CMat::identity(2, 2).kronecker(&lower);
        let n1 = occ.kronecker(&CMat::identity(2, 2));
        let n2 = CMat::identity(2, 2).kronecker(&occ);
        let h_s = HermitianOperator::from_matrix_unchecked(&occ * cr(1.0));
        let sample = SampleSpec {
            omega: DensityMatrix::gibbs(&h_s, 1.0),
            n: HermitianOperator::from_matrix_unchecked(occ.clone()),
            h: h_s,
        };
        let mut reservoirs = Vec::with_capacity(n_res);
        let mut couplings = Vec::with_capacity(n_res);
        for j in 0..n_res {
            let (e1, e2, g) = (0.8 + 0.3 * j as f64, 1.1 + 0.2 * j as f64, 0.35 + 0.1 * j as f64);
            let hop = lower1.adjoint() * &lower2;
            let h = &n1 * cr(e1) + &n2 * cr(e2) + (&hop + hop.adjoint()) * cr(g);
            reservoirs.push(ReservoirSpec {
                h: HermitianOperator::from_matrix_unchecked(h),
                n: HermitianOperator::from_matrix_unchecked(&n1 + &n2),
                beta: betas[j],
                mu: mus[j],
            });
            let up_s = lower.adjoint();
            let t = tensor_embed(&[(&up_s, 0), (&lower1, j + 1)], &dims)?;
            couplings.push(HermitianOperator::from_matrix_unchecked(&t + t.adjoint()));
        }
        Ok(OpenSystemSpec {
            sample,
            reservoirs,
            couplings,
            lambda,
        })
    }
}

fn real_mat(n: usize, entries: &[f64]) -> CMat {
    CMat::from_row_iterator(n, n, entries.iter().map(|&x| cr(x)))
}

/// An assembled open system with its energy and charge fluxes.
#[derive(Clone, Debug)]
pub struct OpenSystem {
    pub dims: Vec<usize>,
    pub system: QuantumDynamicalSystem,
    pub h_sample: HermitianOperator,
    pub n_sample: HermitianOperator,
    pub h_res: Vec<HermitianOperator>,
    pub n_res: Vec<HermitianOperator>,
    pub energy_fluxes: Vec<HermitianOperator>,
    pub charge_fluxes: Vec<HermitianOperator>,
    pub sigma_sample: HermitianOperator,
    /// `Q = -log ω_S`, embedded.
    pub q: HermitianOperator,
    pub betas: Vec<f64>,
    pub mus: Vec<f64>,
}

/// Builds `H_V = H_S + Σ H_j + λ Σ V_j` and `ω = ω_S ⊗ ω_1 ⊗ ... ⊗ ω_n`.
pub fn build_open_system(spec: &OpenSystemSpec) -> Result<OpenSystem> {
    let dims = spec.dims();
    let total: usize = dims.iter().product();
    if spec.couplings.len() != spec.reservoirs.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} couplings for {} reservoirs",
            spec.couplings.len(),
            spec.reservoirs.len()
        )));
    }
    if spec.sample.n.dim() != dims[0] || spec.sample.omega.dim() != dims[0] {
        return Err(Error::DimensionMismatch("sample operators".into()));
    }
    let embed = |m: &CMat, slot: usize| tensor_embed(&[(m, slot)], &dims).map(HermitianOperator::from_matrix_unchecked);
    let gauge = |a: &CMat, b: &CMat| max_abs(&commutator(a, b)) / (1.0 + max_abs(a) * max_abs(b));

    let d = gauge(spec.sample.h.matrix(), spec.sample.n.matrix());
    if d > STRUCT_TOL {
        return Err(Error::GaugeViolation(d));
    }
    let h_sample = embed(spec.sample.h.matrix(), 0)?;
    let n_sample = embed(spec.sample.n.matrix(), 0)?;
    let mut h_res = Vec::new();
    let mut n_res = Vec::new();
    let mut log_omega = embed(spec.sample.omega.log()?.matrix(), 0)?;
    let mut charges = vec![log_omega.clone()];
    for (j, r) in spec.reservoirs.iter().enumerate() {
        if r.n.dim() != r.h.dim() {
            return Err(Error::DimensionMismatch(format!("reservoir {j}")));
        }
        let d = gauge(r.h.matrix(), r.n.matrix());
        if d > STRUCT_TOL {
            return Err(Error::GaugeViolation(d));
        }
        let k = r.h.sub(&r.n.scale(r.mu)).scale(-r.beta);
        let wj = DensityMatrix::from_log(&k);
        let lj = embed(wj.log()?.matrix(), j + 1)?;
        log_omega = log_omega.add(&lj);
        charges.push(lj);
        h_res.push(embed(r.h.matrix(), j + 1)?);
        n_res.push(embed(r.n.matrix(), j + 1)?);
    }
    let mut h_v = h_sample.matrix().clone();
    for (j, v) in spec.couplings.iter().enumerate() {
        if v.dim() != total {
            return Err(Error::DimensionMismatch(format!(
                "coupling {j} has dimension {}",
                v.dim()
            )));
        }
        let d = gauge(&(n_res[j].matrix() + n_sample.matrix()), v.matrix());
        if d > STRUCT_TOL {
            return Err(Error::GaugeViolation(d));
        }
        h_v += h_res[j].matrix() + v.matrix() * cr(spec.lambda);
    }
    let h_v = HermitianOperator::from_matrix_unchecked(h_v);
    let omega = DensityMatrix::from_log(&log_omega);
    let mut system = QuantumDynamicalSystem::new(h_v.clone(), omega)?.with_charges(charges)?;
    if is_real(h_v.matrix()) && is_real(system.omega.matrix()) {
        system = system.with_time_reversal(TimeReversal::conjugation())?;
    }
    let flux =
        |a: &HermitianOperator| HermitianOperator::from_matrix_unchecked(commutator(h_v.matrix(), a.matrix()) * (-I));
    let energy_fluxes = h_res.iter().map(flux).collect();
    let charge_fluxes = n_res.iter().map(flux).collect();
    let q = system.charges.as_ref().expect("set above")[0].scale(-1.0);
    let sigma_sample = HermitianOperator::from_matrix_unchecked(commutator(h_v.matrix(), q.matrix()) * I);
    Ok(OpenSystem {
        dims,
        system,
        h_sample,
        n_sample,
        h_res,
        n_res,
        energy_fluxes,
        charge_fluxes,
        sigma_sample,
        q,
        betas: spec.reservoirs.iter().map(|r| r.beta).collect(),
        mus: spec.reservoirs.iter().map(|r| r.mu).collect(),
    })
}

pub(crate) fn is_real(m: &CMat) -> bool {
    m.iter().all(|z| z.im.abs() <= 1e-14 * (1.0 + z.re.abs()))
}

/// Entropy balance for a state `ρ`: `ρ_t(Q) - ρ(Q)` against the reservoir entropy fluxes.
#[derive(Clone, Copy, Debug)]
pub struct EntropyBalance {
    pub sample_change: f64,
    pub flux_integral: f64,
    pub reservoir_change: f64,
}

impl OpenSystem {
    pub fn n_reservoirs(&self) -> usize {
        self.h_res.len()
    }

    pub fn total_charge(&self) -> HermitianOperator {
        self.n_res.iter().fold(self.n_sample.clone(), |acc, n| acc.add(n))
    }

    /// `‖σ - (σ_S - Σ β_j(Φ_j - μ_j J_j))‖_max`.
    pub fn sigma_decomposition_defect(&self) -> f64 {
        let sigma = entropy_production(&self.system);
        let mut rhs = self.sigma_sample.matrix().clone();
        for j in 0..self.n_reservoirs() {
            let ent = self.energy_fluxes[j].matrix() - self.charge_fluxes[j].matrix() * cr(self.mus[j]);
            rhs -= ent * cr(self.betas[j]);
        }
        max_abs(&(sigma.matrix() - rhs))
    }

    /// `‖H_{jt} - H_j + ∫_0^t Φ_{js} ds‖_max`, with the integral done by quadrature.
    pub fn flux_integral_defect(&self, j: usize, t: f64) -> Result<f64> {
        let phi = self.energy_fluxes[j].matrix();
        let integral = simpson_adaptive(|s| self.system.tau(phi, s), 0.0, t, 1e-11)?;
        let h = self.h_res[j].matrix();
        Ok(max_abs(&(self.system.tau(h, t) - h + integral)))
    }

    pub fn entropy_balance(&self, rho: &DensityMatrix, t: f64) -> Result<EntropyBalance> {
        let ev = |a: &CMat, s: f64| rho.expectation(&self.system.tau(a, s)).re;
        let sample_change = ev(self.q.matrix(), t) - ev(self.q.matrix(), 0.0);
        let mut reservoir_change = 0.0;
        for j in 0..self.n_reservoirs() {
            let (h, n) = (self.h_res[j].matrix(), self.n_res[j].matrix());
            reservoir_change += self.betas[j] * ((ev(h, 0.0) - ev(h, t)) - self.mus[j] * (ev(n, 0.0) - ev(n, t)));
        }
        let ent: CMat = (0..self.n_reservoirs())
            .map(|j| {
                (self.energy_fluxes[j].matrix() - self.charge_fluxes[j].matrix() * cr(self.mus[j])) * cr(self.betas[j])
            })
            .fold(CMat::zeros(self.system.dim(), self.system.dim()), |a, b| a + b);
        let flux_integral = simpson_adaptive(|s| ev(&ent, s), 0.0, t, 1e-11)?;
        Ok(EntropyBalance {
            sample_change,
            flux_integral,
            reservoir_change,
        })
    }

    /// Counting observables `(Q, β_j H_j, -β_j μ_j N_j)`.
    pub fn fcs_observables(&self) -> Vec<HermitianOperator> {
        let mut out = vec![self.q.clone()];
        out.extend(self.h_res.iter().zip(&self.betas).map(|(h, b)| h.scale(*b)));
        out.extend(
            self.n_res
                .iter()
                .zip(self.betas.iter().zip(&self.mus))
                .map(|(n, (b, m))| n.scale(-b * m)),
        );
        out
    }

    /// Coefficients and fluxes of the reservoir counting variables `(ε_1..ε_n, ν_1..ν_n)`.
    fn counting_fluxes(&self) -> Vec<(f64, &HermitianOperator)> {
        let n = self.n_reservoirs();
        (0..n)
            .map(|j| (self.betas[j], &self.energy_fluxes[j]))
            .chain((0..n).map(|j| (-self.betas[j] * self.mus[j], &self.charge_fluxes[j])))
            .collect()
    }

    /// `𝔼_t(ε_j) = -(β_j/t) ∫_0^t ω_s(Φ_j) ds` and `𝔼_t(ν_j) = (β_j μ_j/t) ∫_0^t ω_s(J_j) ds`.
    pub fn fcs_means(&self, t: f64) -> Result<Vec<f64>> {
        if t == 0.0 {
            return Err(Error::ZeroTime);
        }
        let w = &self.system.omega;
        self.counting_fluxes()
            .into_iter()
            .map(|(c, f)| {
                let i = simpson_adaptive(|s| w.expectation(&self.system.tau(f.matrix(), s)).re, 0.0, t, 1e-12)?;
                Ok(-c * i / t)
            })
            .collect()
    }

    /// Covariance of `(ε, ν)` from the exact increments `τ^t(O) - O`.
    pub fn fcs_covariance(&self, t: f64) -> Result<RMat> {
        if t == 0.0 {
            return Err(Error::ZeroTime);
        }
        let obs = self.fcs_observables();
        let incs: Vec<CMat> = obs[1..]
            .iter()
            .map(|o| self.system.tau(o.matrix(), t) - o.matrix())
            .collect();
        Ok(self.covariance_of(&incs, t))
    }

    /// Same covariance from the double time integral of flux correlations, by composite
    /// Simpson with `intervals` subintervals per axis.
    pub fn fcs_covariance_quadrature(&self, t: f64, intervals: usize) -> Result<RMat> {
        if t == 0.0 {
            return Err(Error::ZeroTime);
        }
        let incs: Vec<CMat> = self
            .counting_fluxes()
            .into_iter()
            .map(|(c, f)| simpson(|s| self.system.tau(f.matrix(), s), 0.0, t, intervals) * cr(-c))
            .collect();
        Ok(self.covariance_of(&incs, t))
    }

    fn covariance_of(&self, incs: &[CMat], t: f64) -> RMat {
        let w = self.system.omega.matrix();
        let means: Vec<f64> = incs.iter().map(|d| trace(&(w * d)).re).collect();
        RMat::from_fn(incs.len(), incs.len(), |a, b| {
            (trace(&(w * &incs[a] * &incs[b])).re - means[a] * means[b]) / (t * t)
        })
    }
}
