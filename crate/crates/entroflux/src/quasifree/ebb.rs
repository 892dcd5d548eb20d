use std::sync::OnceLock;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::numerics::quad::gauss_adaptive;
use crate::numerics::{cr, CMat, HermitianOperator, C64};

use super::scattering::{LeadFlux, LeadSpec, ScatteringData};
use super::{faithful_generator, fermi_of_generator, qf_relative_entropy, OnePartModel};

/// Finite electronic black box: a sample coupled to `n` Dirichlet tight-binding leads of `sites` sites.
#[derive(Clone, Debug)]
pub struct EbbSpec {
    pub sample_h: HermitianOperator,
    pub sample_t: HermitianOperator,
    pub leads: Vec<LeadSpec>,
    pub sites: usize,
    pub chis: Vec<DVector<C64>>,
    pub lambda: f64,
}

impl EbbSpec {
    /// Homogeneous chain: a sample `-Δ/2` on `2l+1` sites joined to two leads with hopping `-1/2`.
    pub fn chain(l: usize, sites: usize, left: LeadSpec, right: LeadSpec, occupation: f64) -> Self {
        let d = 2 * l + 1;
        let h = tight_binding(d);
        let unit = |i: usize| {
            let mut v = DVector::zeros(d);
            v[i] = cr(1.0);
            v
        };
        EbbSpec {
            sample_h: HermitianOperator::from_matrix_unchecked(h),
            sample_t: HermitianOperator::identity(d).scale(occupation),
            leads: vec![left, right],
            sites,
            chis: vec![unit(0), unit(d - 1)],
            lambda: -0.5,
        }
    }

    /// Scattering matrix of the same sample with semi-infinite leads.
    pub fn scattering(&self) -> ScatteringData {
        ScatteringData::fisher_lee(&self.sample_h, &self.chis, self.lambda)
    }
}

/// `-Δ/2` with Dirichlet boundary conditions on `n` sites.
pub(crate) fn tight_binding(n: usize) -> CMat {
    CMat::from_fn(n, n, |i, j| {
        if i == j {
            cr(1.0)
        } else if i.abs_diff(j) == 1 {
            cr(-0.5)
        } else {
            cr(0.0)
        }
    })
}

#[derive(Debug)]
pub struct EbbModel {
    pub model: OnePartModel,
    pub h0: HermitianOperator,
    pub leads: Vec<LeadSpec>,
    pub sites: usize,
    pub sample_dim: usize,
    pub lambda: f64,
    chis: Vec<DVector<C64>>,
    k_sample: HermitianOperator,
    rotated_t: OnceLock<CMat>,
}

/// Terms of the entropy balance `S(ω_t|ω_0) = sample + fluxes`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyBalanceEbb {
    pub relative_entropy: f64,
    pub sample_term: f64,
    pub flux_term: f64,
}

pub fn ebb_build(spec: &EbbSpec) -> Result<EbbModel> {
    if spec.sites == 0 {
        return Err(Error::InvalidModel("leads need at least one site".into()));
    }
    if spec.chis.len() != spec.leads.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} leads, {} couplings",
            spec.leads.len(),
            spec.chis.len()
        )));
    }
    let ds = spec.sample_h.dim();
    if spec.sample_t.dim() != ds || spec.chis.iter().any(|c| c.len() != ds) {
        return Err(Error::DimensionMismatch(
            "sample data have inconsistent dimensions".into(),
        ));
    }
    let (m, n) = (spec.sites, spec.leads.len());
    let d = ds + n * m;
    let k_s = faithful_generator(&spec.sample_t)?;

    let lead = HermitianOperator::from_matrix_unchecked(tight_binding(m));
    let mut h0 = CMat::zeros(d, d);
    let mut k0 = CMat::zeros(d, d);
    h0.view_mut((0, 0), (ds, ds)).copy_from(spec.sample_h.matrix());
    k0.view_mut((0, 0), (ds, ds)).copy_from(k_s.matrix());
    let mut charges = Vec::with_capacity(2 * n + 1);
    let mut ks_full = CMat::zeros(d, d);
    ks_full.view_mut((0, 0), (ds, ds)).copy_from(k_s.matrix());
    charges.push(HermitianOperator::from_matrix_unchecked(ks_full.clone()));
    let mut energy = Vec::with_capacity(n);
    let mut number = Vec::with_capacity(n);
    for (j, l) in spec.leads.iter().enumerate() {
        let off = ds + j * m;
        h0.view_mut((off, off), (m, m)).copy_from(lead.matrix());
        let kj = lead.map(|e| -l.beta * (e - l.mu));
        k0.view_mut((off, off), (m, m)).copy_from(kj.matrix());
        let mut e = CMat::zeros(d, d);
        e.view_mut((off, off), (m, m)).copy_from(&(lead.matrix() * cr(-l.beta)));
        energy.push(HermitianOperator::from_matrix_unchecked(e));
        let mut c = CMat::zeros(d, d);
        for i in off..off + m {
            c[(i, i)] = cr(l.beta * l.mu);
        }
        number.push(HermitianOperator::from_matrix_unchecked(c));
    }
    charges.extend(energy);
    charges.extend(number);

    let mut chis = Vec::with_capacity(n);
    let mut h = h0.clone();
    for j in 0..n {
        let mut chi = DVector::zeros(d);
        chi.rows_mut(0, ds).copy_from(&spec.chis[j]);
        let site = ds + j * m;
        for i in 0..ds {
            h[(i, site)] += chi[i] * spec.lambda;
            h[(site, i)] += chi[i].conj() * spec.lambda;
        }
        chis.push(chi);
    }

    let k0 = HermitianOperator::from_matrix_unchecked(k0);
    let t0 = block_fermi(&k_s, &lead, &spec.leads, ds, m);
    let mut model = OnePartModel::new(HermitianOperator::from_matrix_unchecked(h), t0)?;
    model.k = Some(k0);
    model.leads = (0..n).map(|j| ds + j * m..ds + (j + 1) * m).collect();
    model.charges = Some(charges);
    Ok(EbbModel {
        model,
        h0: HermitianOperator::from_matrix_unchecked(h0),
        leads: spec.leads.clone(),
        sites: m,
        sample_dim: ds,
        lambda: spec.lambda,
        chis,
        k_sample: HermitianOperator::from_matrix_unchecked(ks_full),
        rotated_t: OnceLock::new(),
    })
}

fn block_fermi(
    k_s: &HermitianOperator,
    lead: &HermitianOperator,
    leads: &[LeadSpec],
    ds: usize,
    m: usize,
) -> HermitianOperator {
    let d = ds + leads.len() * m;
    let mut t = CMat::zeros(d, d);
    t.view_mut((0, 0), (ds, ds))
        .copy_from(k_s.map(fermi_of_generator).matrix());
    for (j, l) in leads.iter().enumerate() {
        let off = ds + j * m;
        let tj = lead.map(|e| fermi_of_generator(-l.beta * (e - l.mu)));
        t.view_mut((off, off), (m, m)).copy_from(tj.matrix());
    }
    HermitianOperator::from_matrix_unchecked(t)
}

impl EbbModel {
    pub fn n_leads(&self) -> usize {
        self.leads.len()
    }

    fn lead_offset(&self, j: usize) -> usize {
        self.sample_dim + j * self.sites
    }

    /// `δ_0^{(j)}`, the lead site touching the sample.
    pub fn contact(&self, j: usize) -> DVector<C64> {
        let mut v = DVector::zeros(self.model.dim());
        v[self.lead_offset(j)] = cr(1.0);
        v
    }

    /// `h_j δ_0^{(j)}`.
    fn lead_h_contact(&self, j: usize) -> DVector<C64> {
        let mut v = DVector::zeros(self.model.dim());
        let off = self.lead_offset(j);
        v[off] = cr(1.0);
        if self.sites > 1 {
            v[off + 1] = cr(-0.5);
        }
        v
    }

    /// `h_j` embedded in the full one-particle space.
    pub fn lead_hamiltonian(&self, j: usize) -> HermitianOperator {
        let d = self.model.dim();
        let off = self.lead_offset(j);
        let mut h = CMat::zeros(d, d);
        h.view_mut((off, off), (self.sites, self.sites))
            .copy_from(&tight_binding(self.sites));
        HermitianOperator::from_matrix_unchecked(h)
    }

    fn evolved(&self, v: &DVector<C64>, t: f64) -> DVector<C64> {
        let sd = self.model.h.spectral();
        let u = &sd.eigenvectors;
        let mut c = u.adjoint() * v;
        for (ci, l) in c.iter_mut().zip(&sd.eigenvalues) {
            *ci *= C64::new(0.0, t * l).exp();
        }
        u * c
    }

    fn flux_with(&self, a: &DVector<C64>, j: usize, t: f64) -> f64 {
        let ua = self.evolved(a, t);
        let uc = self.evolved(&self.chis[j], t);
        2.0 * self.lambda * ua.dotc(&(self.model.t.matrix() * uc)).im
    }

    /// `ω_0(τ^t(Φ_j)) = 2λ Im⟨e^{ith}h_jδ_0|T_0 e^{ith}χ_j⟩`.
    pub fn energy_flux(&self, j: usize, t: f64) -> f64 {
        self.flux_with(&self.lead_h_contact(j), j, t)
    }

    /// `ω_0(τ^t(J_j)) = 2λ Im⟨e^{ith}δ_0|T_0 e^{ith}χ_j⟩`.
    pub fn charge_flux(&self, j: usize, t: f64) -> f64 {
        self.flux_with(&self.contact(j), j, t)
    }

    fn rotated_density(&self) -> &CMat {
        self.rotated_t.get_or_init(|| {
            let u = &self.model.h.spectral().eigenvectors;
            u.adjoint() * self.model.t.matrix() * u
        })
    }

    fn integrated_with(&self, a: &DVector<C64>, j: usize, t: f64) -> f64 {
        let sd = self.model.h.spectral();
        let u = &sd.eigenvectors;
        let (ra, rc) = (u.adjoint() * a, u.adjoint() * &self.chis[j]);
        let tt = self.rotated_density();
        let ev = &sd.eigenvalues;
        let mut z = C64::new(0.0, 0.0);
        for m in 0..ev.len() {
            let am = ra[m].conj();
            if am == C64::new(0.0, 0.0) {
                continue;
            }
            for n in 0..ev.len() {
                let w = ev[n] - ev[m];
                let kernel = if (w * t).abs() < 1e-8 {
                    C64::new(t, 0.5 * w * t * t)
                } else {
                    (C64::new(0.0, w * t).exp() - 1.0) / C64::new(0.0, w)
                };
                z += am * tt[(m, n)] * rc[n] * kernel;
            }
        }
        2.0 * self.lambda * z.im
    }

    /// Time averages `(1/t)∫₀^t ω_s(Φ_j) ds` and `(1/t)∫₀^t ω_s(J_j) ds`, integrated in the eigenbasis of `h`.
    pub fn average_flux(&self, j: usize, t: f64) -> Result<LeadFlux> {
        if t == 0.0 {
            return Err(Error::ZeroTime);
        }
        Ok(LeadFlux {
            energy: self.integrated_with(&self.lead_h_contact(j), j, t) / t,
            charge: self.integrated_with(&self.contact(j), j, t) / t,
        })
    }

    /// Both sides of `S(ω_t|ω_0) = ω_0(τ^t(Q_S) - Q_S) + Σ β_j ∫₀^t ω_s(Φ_j - μ_j J_j) ds`,
    /// the flux integral by quadrature.
    pub fn entropy_balance(&self, t: f64) -> Result<EntropyBalanceEbb> {
        let tt = self.model.density_at(t);
        let relative_entropy = qf_relative_entropy(&tt, &self.model.t)?;
        let dt = tt.matrix() - self.model.t.matrix();
        let sample_term = (dt * self.k_sample.matrix()).trace().re;
        let rate = |s: f64| -> f64 {
            (0..self.n_leads())
                .map(|j| {
                    let l = &self.leads[j];
                    l.beta * (self.energy_flux(j, s) - l.mu * self.charge_flux(j, s))
                })
                .sum()
        };
        let flux_term = gauss_adaptive(rate, 0.0, t, 1e-11, 1e-12)?;
        Ok(EntropyBalanceEbb {
            relative_entropy,
            sample_term,
            flux_term,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::fock::second_quantize;
    use super::super::{fock_system, qf_e2_multi, qf_naive};
    use super::*;
    use crate::numerics::quad::{deriv1, deriv2};
    use crate::numerics::{commutator, I};
    use approx::assert_abs_diff_eq;

    fn spec(lambda: f64, sites: usize) -> EbbSpec {
        let h =
            HermitianOperator::from_matrix_unchecked(CMat::from_row_slice(2, 2, &[cr(0.9), cr(0.3), cr(0.3), cr(1.4)]));
        let t = HermitianOperator::from_diagonal(&[0.35, 0.6]);
        let chi = |a: f64, b: f64| DVector::from_vec(vec![cr(a), cr(b)]);
        EbbSpec {
            sample_h: h,
            sample_t: t,
            leads: vec![LeadSpec::new(0.7, 0.8).unwrap(), LeadSpec::new(1.9, 1.1).unwrap()],
            sites,
            chis: vec![chi(1.0, 0.2), chi(0.1, 0.9)],
            lambda,
        }
    }

    #[test]
    fn decoupled_fluxes_vanish() {
        let m = ebb_build(&spec(0.0, 4)).unwrap();
        for t in [0.0, 0.7, 3.0] {
            for j in 0..2 {
                assert_eq!(m.energy_flux(j, t), 0.0);
                assert_eq!(m.charge_flux(j, t), 0.0);
            }
        }
    }

    #[test]
    fn fluxes_match_many_body() {
        let m = ebb_build(&spec(0.4, 2)).unwrap();
        let sys = fock_system(&m.model).unwrap();
        let big_h = sys.h.matrix().clone();
        for j in 0..2 {
            let hj = second_quantize(m.lead_hamiltonian(j).matrix()).unwrap();
            let nj = second_quantize(m.model.lead_projection(j).matrix()).unwrap();
            let phi = commutator(&big_h, &hj) * -I;
            let cur = commutator(&big_h, &nj) * -I;
            for t in [0.0, 0.8, 2.5] {
                let e = sys.omega.expectation(&sys.tau(&phi, t)).re;
                let c = sys.omega.expectation(&sys.tau(&cur, t)).re;
                assert_abs_diff_eq!(m.energy_flux(j, t), e, epsilon = 1e-10);
                assert_abs_diff_eq!(m.charge_flux(j, t), c, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn average_flux_matches_quadrature() {
        let m = ebb_build(&spec(0.5, 6)).unwrap();
        let t = 3.7;
        for j in 0..2 {
            let exact = m.average_flux(j, t).unwrap();
            let quad = gauss_adaptive(|s| m.energy_flux(j, s), 0.0, t, 1e-12, 1e-14).unwrap() / t;
            assert_abs_diff_eq!(exact.energy, quad, epsilon = 1e-10);
            let quad = gauss_adaptive(|s| m.charge_flux(j, s), 0.0, t, 1e-12, 1e-14).unwrap() / t;
            assert_abs_diff_eq!(exact.charge, quad, epsilon = 1e-10);
        }
    }

    #[test]
    fn entropy_balance_holds() {
        let m = ebb_build(&spec(0.6, 8)).unwrap();
        for t in [0.5, 2.0, 6.0] {
            let b = m.entropy_balance(t).unwrap();
            assert!(b.relative_entropy <= 0.0);
            assert_abs_diff_eq!(b.relative_entropy, b.sample_term + b.flux_term, epsilon = 1e-7);
        }
    }

    #[test]
    fn multi_parameter_symmetry_and_cumulants() {
        let m = ebb_build(&spec(0.5, 5)).unwrap();
        let t = 2.0;
        let a = [0.3, 0.8, -0.4, 0.1, 0.6];
        let b: Vec<f64> = a.iter().map(|x| 1.0 - x).collect();
        assert_abs_diff_eq!(
            qf_e2_multi(&m.model, t, &a).unwrap(),
            qf_e2_multi(&m.model, t, &b).unwrap(),
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(qf_e2_multi(&m.model, t, &[0.0; 5]).unwrap(), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(qf_naive(&m.model, t, &[0.0; 5]).unwrap(), 0.0, epsilon = 1e-13);

        let dir = [0.0, 1.0, 0.0, 0.0, 0.0];
        let along = |f: &dyn Fn(&[f64]) -> f64, x: f64| f(&dir.map(|v| v * x));
        let fcs = |a: &[f64]| qf_e2_multi(&m.model, t, a).unwrap();
        let naive = |a: &[f64]| qf_naive(&m.model, t, a).unwrap();
        let d1 = |f: &dyn Fn(&[f64]) -> f64| deriv1(|x| along(f, x), 0.0, 1e-3);
        let d2 = |f: &dyn Fn(&[f64]) -> f64| deriv2(|x| along(f, x), 0.0, 1e-3);
        let d3 = |f: &dyn Fn(&[f64]) -> f64| {
            let hh = 0.1;
            (along(f, 2.0 * hh) - 2.0 * along(f, hh) + 2.0 * along(f, -hh) - along(f, -2.0 * hh)) / (2.0 * hh.powi(3))
        };
        assert_abs_diff_eq!(d1(&fcs), d1(&naive), epsilon = 1e-6);
        assert_abs_diff_eq!(d2(&fcs), d2(&naive), epsilon = 1e-6);
        assert!((d3(&fcs) - d3(&naive)).abs() > 1e-8);
    }
}
