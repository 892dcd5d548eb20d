//! Relative modular spectra, Araki–Masuda norms and full counting statistics.
//!
//! Probability measures produced here are finite sums of point masses, kept in an
//! [`AtomicMeasure`] whose nearby atoms are merged on construction.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dynsys::{e_pt, QuantumDynamicalSystem, STRUCT_TOL};
use crate::error::{Error, Result};
use crate::numerics::{cr, joint_eigenbasis, propagator, schatten_norm, CMat, HermitianOperator, RMat};
use crate::states::{joint_spectrum, DensityMatrix};

/// Relative binning tolerance.
pub const BTOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: Vec<f64>,
    pub weight: f64,
}

/// A finite positive measure on `ℝ^m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
    btol: f64,
}

impl AtomicMeasure {
    /// Merges atoms closer than `1e-9 · max(1, max |location|)` and drops atoms whose weight
    /// vanishes to rounding.
    pub fn new(raw: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        let m = raw.first().map(|a| a.0.len()).unwrap_or(0);
        if raw.iter().any(|a| a.0.len() != m) {
            return Err(Error::DimensionMismatch("atoms of different dimension".into()));
        }
        if let Some(a) = raw.iter().find(|a| a.1 < -1e-12 || !a.1.is_finite()) {
            return Err(Error::BadProbability(a.1));
        }
        let scale = raw.iter().flat_map(|a| a.0.iter()).fold(1.0f64, |s, x| s.max(x.abs()));
        let btol = BTOL * scale;
        Ok(AtomicMeasure {
            atoms: merge(raw, btol),
            btol,
        })
    }

    pub fn point_mass(location: Vec<f64>) -> Self {
        AtomicMeasure {
            atoms: vec![Atom { location, weight: 1.0 }],
            btol: BTOL,
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn btol(&self) -> f64 {
        self.btol
    }

    pub fn dim(&self) -> usize {
        self.atoms.first().map(|a| a.location.len()).unwrap_or(0)
    }

    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// Weight of the atom within `btol` of `location`, zero if there is none.
    pub fn weight_at(&self, location: &[f64]) -> f64 {
        self.atoms
            .iter()
            .filter(|a| close(&a.location, location, self.btol))
            .map(|a| a.weight)
            .sum()
    }

    pub fn mean(&self) -> Vec<f64> {
        let mass = self.mass();
        let mut out = vec![0.0; self.dim()];
        for a in &self.atoms {
            for (o, x) in out.iter_mut().zip(&a.location) {
                *o += a.weight * x / mass;
            }
        }
        out
    }

    pub fn covariance(&self) -> RMat {
        let mu = self.mean();
        let mass = self.mass();
        let m = self.dim();
        let mut c = RMat::zeros(m, m);
        for a in &self.atoms {
            for j in 0..m {
                for k in 0..m {
                    c[(j, k)] += a.weight * (a.location[j] - mu[j]) * (a.location[k] - mu[k]) / mass;
                }
            }
        }
        c
    }

    /// `∫ e^{λ·s} dμ(s)`.
    pub fn laplace(&self, lambda: &[f64]) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.weight * dot(lambda, &a.location).exp())
            .sum()
    }

    /// Image under `s ↦ -s`.
    pub fn reflected(&self) -> Self {
        AtomicMeasure {
            atoms: self
                .atoms
                .iter()
                .rev()
                .map(|a| Atom {
                    location: a.location.iter().map(|x| -x).collect(),
                    weight: a.weight,
                })
                .collect(),
            btol: self.btol,
        }
    }

    /// Marginal on coordinate `k`.
    pub fn marginal(&self, k: usize) -> Result<Self> {
        if k >= self.dim() {
            return Err(Error::DimensionMismatch(format!("coordinate {k} of {}", self.dim())));
        }
        AtomicMeasure::new(self.atoms.iter().map(|a| (vec![a.location[k]], a.weight)).collect())
    }

    /// `½ Σ |μ(x) - ν(x)|` over the union of atoms.
    pub fn total_variation(&self, other: &AtomicMeasure) -> f64 {
        let btol = self.btol.max(other.btol);
        let mut diff: Vec<(Vec<f64>, f64)> = self.atoms.iter().map(|a| (a.location.clone(), a.weight)).collect();
        for b in &other.atoms {
            match diff.iter_mut().find(|d| close(&d.0, &b.location, btol)) {
                Some(d) => d.1 -= b.weight,
                None => diff.push((b.location.clone(), -b.weight)),
            }
        }
        0.5 * diff.iter().map(|d| d.1.abs()).sum::<f64>()
    }

    /// `max_s |μ(-s) - e^{-t 𝟏·s} μ(s)|`, the defect of the fluctuation relation.
    pub fn fluctuation_relation_defect(&self, t: f64) -> f64 {
        self.atoms
            .iter()
            .map(|a| {
                let minus: Vec<f64> = a.location.iter().map(|x| -x).collect();
                let s: f64 = a.location.iter().sum();
                (self.weight_at(&minus) - (-t * s).exp() * a.weight).abs()
            })
            .fold(0.0, f64::max)
    }

    /// CSV with columns `loc_1, ..., loc_m, weight`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header: Vec<String> = (1..=self.dim())
            .map(|k| format!("loc_{k}"))
            .chain(std::iter::once("weight".to_string()))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for a in &self.atoms {
            let row: Vec<String> = a
                .location
                .iter()
                .chain(std::iter::once(&a.weight))
                .map(|x| format!("{x:.16e}"))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

fn merge(mut raw: Vec<(Vec<f64>, f64)>, btol: f64) -> Vec<Atom> {
    let total: f64 = raw.iter().map(|a| a.1.max(0.0)).sum();
    raw.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite locations"));
    let mut out: Vec<(Vec<f64>, f64, f64)> = Vec::new();
    for (loc, w) in raw {
        let w = w.max(0.0);
        let start = out.partition_point(|c| c.0[0] < loc[0] - btol);
        match out[start..].iter_mut().find(|c| close(&c.0, &loc, btol)) {
            Some(c) => {
                c.1 += w;
                c.2 += 1.0;
            }
            None => out.push((loc, w, 1.0)),
        }
    }
    out.into_iter()
        .filter(|c| c.1 > 1e-15 * total)
        .map(|(location, weight, _)| Atom { location, weight })
        .collect()
}

/// A pair of eigenvalues `(a_i, b_j)` of `(ρ, ν)` with overlap weight `b_j |⟨u_i|v_j⟩|²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModularPair {
    pub a: f64,
    pub b: f64,
    pub w: f64,
}

impl ModularPair {
    /// Eigenvalue `a/b` of the relative modular operator.
    pub fn ratio(&self) -> f64 {
        self.a / self.b
    }
}

/// Spectral data of `Δ_{ρ|ν}` in the vector state `ν^{1/2}`.
#[derive(Clone, Debug)]
pub struct RelativeModularSpectrum {
    pub pairs: Vec<ModularPair>,
}

impl RelativeModularSpectrum {
    pub fn mass(&self) -> f64 {
        self.pairs.iter().map(|p| p.w).sum()
    }

    /// `(ν^{1/2}|Δ^α ν^{1/2}) = Σ (a/b)^α w`, with the kernel sector excluded.
    pub fn moment(&self, alpha: f64) -> f64 {
        self.pairs
            .iter()
            .filter(|p| p.a > 0.0)
            .map(|p| (alpha * (p.a.ln() - p.b.ln())).exp() * p.w)
            .sum()
    }

    /// `log Σ (a/b)^α w = S_α(ρ|ν)`.
    pub fn renyi(&self, alpha: f64) -> f64 {
        self.moment(alpha).ln()
    }
}

/// Relative modular spectrum of `(ρ, ν)` restricted to the support of `ν`.
pub fn relative_modular_spectrum(rho: &DensityMatrix, nu: &DensityMatrix) -> Result<RelativeModularSpectrum> {
    if rho.dim() != nu.dim() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", rho.dim(), nu.dim())));
    }
    let js = joint_spectrum(rho, nu);
    let mut pairs = Vec::new();
    for (i, &a) in js.a.iter().enumerate() {
        for (j, &b) in js.b.iter().enumerate() {
            if b > 0.0 {
                let w = b * js.overlap[i][j];
                if w > 0.0 {
                    pairs.push(ModularPair { a, b, w });
                }
            }
        }
    }
    Ok(RelativeModularSpectrum { pairs })
}

/// The spectral measure `Q^t` of `-(1/t) log Δ_{ω_t|ω}` in `ω^{1/2}`; a point mass at `t = 0`.
pub fn fcs_spectral_measure(sys: &QuantumDynamicalSystem, t: f64) -> Result<AtomicMeasure> {
    if t == 0.0 {
        return Ok(AtomicMeasure::point_mass(vec![0.0]));
    }
    let spec = relative_modular_spectrum(&sys.omega_t(t), &sys.omega)?;
    AtomicMeasure::new(
        spec.pairs
            .iter()
            .map(|p| (vec![-(p.a.ln() - p.b.ln()) / t], p.w))
            .collect(),
    )
}

/// Distribution of `(s' - s)/t` for two joint measurements of a commuting family separated
/// by the evolution `e^{-itH}`. The first measurement leaves `P_s ω P_s`.
pub fn two_time_distribution(
    omega: &DensityMatrix,
    h: &HermitianOperator,
    t: f64,
    observables: &[&HermitianOperator],
) -> Result<AtomicMeasure> {
    if observables.is_empty() {
        return Err(Error::DimensionMismatch("empty observable family".into()));
    }
    if observables.iter().any(|o| o.dim() != omega.dim()) || h.dim() != omega.dim() {
        return Err(Error::DimensionMismatch("observable dimensions".into()));
    }
    let (v, tuples) = joint_eigenbasis(observables, STRUCT_TOL)?;
    if t == 0.0 {
        return Ok(AtomicMeasure::point_mass(vec![0.0; observables.len()]));
    }
    let blocks = spectral_blocks(&tuples);
    let w = v.adjoint() * omega.matrix() * &v;
    let u = v.adjoint() * propagator(h, cr(-t)) * &v;
    let mut raw = Vec::new();
    for (s, bs) in &blocks {
        let us = u.select_columns(bs.iter());
        let ws = CMat::from_fn(bs.len(), bs.len(), |i, j| w[(bs[i], bs[j])]);
        let evolved = &us * ws * us.adjoint();
        for (s2, bs2) in &blocks {
            let p: f64 = bs2.iter().map(|&k| evolved[(k, k)].re).sum();
            let loc: Vec<f64> = s2.iter().zip(s).map(|(b, a)| (b - a) / t).collect();
            raw.push((loc, p.max(0.0)));
        }
    }
    AtomicMeasure::new(raw)
}

/// Groups basis indices by their joint eigenvalue tuple.
fn spectral_blocks(tuples: &[Vec<f64>]) -> Vec<(Vec<f64>, Vec<usize>)> {
    let scale = tuples.iter().flatten().fold(1.0f64, |s, x| s.max(x.abs()));
    let tol = 1e-9 * scale;
    let mut blocks: Vec<(Vec<f64>, Vec<usize>)> = Vec::new();
    for (i, q) in tuples.iter().enumerate() {
        match blocks.iter_mut().find(|b| close(&b.0, q, tol)) {
            Some(b) => b.1.push(i),
            None => blocks.push((q.clone(), vec![i])),
        }
    }
    blocks
}

/// Araki–Masuda norm `‖ξ‖_{ω,p} = ‖ξ ω^{1/p - 1/2}‖_p`.
pub fn araki_masuda_norm(xi: &CMat, omega: &DensityMatrix, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::BadExponent(p));
    }
    if !omega.is_faithful() {
        return Err(Error::NotFaithful);
    }
    let x = if p.is_infinite() { -0.5 } else { 1.0 / p - 0.5 };
    schatten_norm(&(xi * omega.power(x).matrix()), p)
}

#[derive(Clone, Copy, Debug)]
pub struct TransferCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// Compares `e_{p,t}(α)` with `p log ‖ω_t^{α/p} ω^{1/2-α/p}‖_{ω,p}`.
pub fn transfer_functional_check(sys: &QuantumDynamicalSystem, t: f64, alpha: f64, p: f64) -> Result<TransferCheck> {
    if p.is_nan() || p < 1.0 || p.is_infinite() {
        return Err(Error::BadExponent(p));
    }
    let lhs = e_pt(sys, t, alpha, p)?;
    let xi = sys.omega_t(t).power(alpha / p).matrix() * sys.omega.power(0.5 - alpha / p).matrix();
    let rhs = p * araki_masuda_norm(&xi, &sys.omega, p)?.ln();
    Ok(TransferCheck {
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
    })
}

/// Joint spectral measure `ℙ_t` of `-(1/t) log Δ_{ω_{jt}|ω_j}` for the charges `log ω = Σ Q_j`.
pub fn multi_fcs(sys: &QuantumDynamicalSystem, t: f64) -> Result<AtomicMeasure> {
    let charges = sys
        .charges
        .as_ref()
        .ok_or_else(|| Error::InvalidModel("system has no charge decomposition".into()))?;
    let refs: Vec<&HermitianOperator> = charges.iter().collect();
    let (v, q) = joint_eigenbasis(&refs, STRUCT_TOL)?;
    if t == 0.0 {
        return Ok(AtomicMeasure::point_mass(vec![0.0; charges.len()]));
    }
    let overlap = v.adjoint() * propagator(&sys.h, cr(-t)) * &v;
    let n = sys.dim();
    let mut raw = Vec::with_capacity(n * n);
    for j in 0..n {
        let bj: f64 = q[j].iter().sum::<f64>().exp();
        for i in 0..n {
            let w = bj * overlap[(i, j)].norm_sqr();
            let loc = q[i].iter().zip(&q[j]).map(|(qi, qj)| -(qi - qj) / t).collect();
            raw.push((loc, w));
        }
    }
    AtomicMeasure::new(raw)
}
