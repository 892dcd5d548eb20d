//! Dense Hermitian spectral toolkit.
//!
//! Every matrix function in the crate is evaluated through [`eig_hermitian`]:
//! exponentials, logarithms, fractional powers and complex-time propagators all
//! share the same decomposition and tolerance budget.

pub mod quad;
pub mod random;

use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type RMat = DMatrix<f64>;

/// Default Hermiticity tolerance, relative to the largest entry.
pub const HTOL: f64 = 1e-12;
/// Relative threshold below which eigenvalues of a positive matrix are kernel.
pub const KTOL: f64 = 1e-12;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn cr(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// A real number extended by the two infinities.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Extended {
    NegInfinity,
    Finite(f64),
    PosInfinity,
}

impl Extended {
    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(x) => Some(x),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    /// Value as an IEEE float, mapping the sentinels to the float infinities.
    pub fn to_f64(self) -> f64 {
        match self {
            Extended::NegInfinity => f64::NEG_INFINITY,
            Extended::Finite(x) => x,
            Extended::PosInfinity => f64::INFINITY,
        }
    }

    /// Panics on a sentinel. Meant for tests and callers that checked the domain.
    pub fn unwrap(self) -> f64 {
        self.finite()
            .unwrap_or_else(|| panic!("expected a finite value, got {self:?}"))
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::NegInfinity => write!(f, "-inf"),
            Extended::Finite(x) => write!(f, "{x}"),
            Extended::PosInfinity => write!(f, "inf"),
        }
    }
}

/// Eigenvalues in ascending order and the matching orthonormal eigenvectors.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMat,
}

impl SpectralDecomposition {
    /// `Σ f(λ) P_λ` for a complex valued `f`.
    pub fn apply_complex(&self, f: impl Fn(f64) -> C64) -> CMat {
        let vals: Vec<C64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        self.from_values(&vals)
    }

    /// `Σ v_k P_k` for values listed in eigenvalue order.
    pub fn from_values(&self, vals: &[C64]) -> CMat {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (k, v) in vals.iter().enumerate() {
            for r in 0..u.nrows() {
                scaled[(r, k)] *= v;
            }
        }
        &scaled * u.adjoint()
    }

    /// `Σ f(λ) P_λ` for a real valued `f`; the result is exactly Hermitian.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> HermitianOperator {
        let m = self.apply_complex(|x| cr(f(x)));
        HermitianOperator::from_matrix_unchecked(m)
    }

    pub fn unitarity_defect(&self) -> f64 {
        let u = &self.eigenvectors;
        let g = u.adjoint() * u - CMat::identity(u.ncols(), u.ncols());
        max_abs(&g)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Dense Hermitian matrix carrying a lazily computed spectral decomposition.
#[derive(Clone)]
pub struct HermitianOperator {
    entries: CMat,
    defect: f64,
    spectral: OnceLock<SpectralDecomposition>,
}

impl fmt::Debug for HermitianOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HermitianOperator")
            .field("dim", &self.dim())
            .field("hermiticity_defect", &self.defect)
            .field("entries", &self.entries)
            .finish()
    }
}

impl HermitianOperator {
    /// Checks Hermiticity with the default tolerance.
    pub fn new(m: CMat) -> Result<Self> {
        Self::with_tolerance(m, HTOL)
    }

    pub fn with_tolerance(m: CMat, htol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} is not square",
                m.nrows(),
                m.ncols()
            )));
        }
        let defect = hermiticity_defect(&m);
        let scale = max_abs(&m).max(f64::MIN_POSITIVE);
        if defect > htol * scale.max(1.0) {
            return Err(Error::NonHermitian(defect));
        }
        let mut op = Self::from_matrix_unchecked(m);
        op.defect = defect;
        Ok(op)
    }

    /// Takes the Hermitian part of `m` without checking how far `m` was from it.
    pub fn from_matrix_unchecked(m: CMat) -> Self {
        let h = (&m + m.adjoint()) * cr(0.5);
        HermitianOperator {
            entries: h,
            defect: 0.0,
            spectral: OnceLock::new(),
        }
    }

    pub fn from_real(m: &RMat) -> Result<Self> {
        Self::new(m.map(cr))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let m = CMat::from_fn(n, n, |i, j| if i == j { cr(d[i]) } else { C64::new(0.0, 0.0) });
        Self::from_matrix_unchecked(m)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_matrix_unchecked(CMat::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_matrix_unchecked(CMat::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.entries
    }

    pub fn into_matrix(self) -> CMat {
        self.entries
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.defect
    }

    pub fn spectral(&self) -> &SpectralDecomposition {
        self.spectral.get_or_init(|| decompose(&self.entries))
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.spectral().eigenvalues
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> HermitianOperator {
        self.spectral().apply(f)
    }

    pub fn trace(&self) -> f64 {
        trace(&self.entries).re
    }

    pub fn scale(&self, a: f64) -> HermitianOperator {
        Self::from_matrix_unchecked(&self.entries * cr(a))
    }

    pub fn add(&self, other: &HermitianOperator) -> HermitianOperator {
        Self::from_matrix_unchecked(&self.entries + &other.entries)
    }

    pub fn sub(&self, other: &HermitianOperator) -> HermitianOperator {
        Self::from_matrix_unchecked(&self.entries - &other.entries)
    }

    /// Operator norm.
    pub fn norm(&self) -> f64 {
        let ev = self.eigenvalues();
        ev.first()
            .map_or(0.0, |a| a.abs())
            .max(ev.last().map_or(0.0, |b| b.abs()))
    }

    /// Conjugation `U A U†` by a unitary.
    pub fn conjugate_by(&self, u: &CMat) -> HermitianOperator {
        Self::from_matrix_unchecked(u * &self.entries * u.adjoint())
    }

    /// Entrywise complex conjugate, i.e. the image under the canonical time reversal.
    pub fn conj(&self) -> HermitianOperator {
        Self::from_matrix_unchecked(self.entries.map(|z| z.conj()))
    }
}

fn decompose(m: &CMat) -> SpectralDecomposition {
    let n = m.nrows();
    if n == 0 {
        return SpectralDecomposition {
            eigenvalues: vec![],
            eigenvectors: CMat::zeros(0, 0),
        };
    }
    let se = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let mut u = CMat::zeros(n, n);
    for (c, &k) in order.iter().enumerate() {
        let col = se.eigenvectors.column(k);
        let mut best = 0;
        let mut best_abs = -1.0;
        for r in 0..n {
            let a = col[r].norm();
            if a > best_abs * (1.0 + 1e-12) {
                best_abs = a;
                best = r;
            }
        }
        let z = col[best];
        let phase = if z.norm() > 0.0 { z.conj() / z.norm() } else { cr(1.0) };
        let norm = col.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        for r in 0..n {
            u[(r, c)] = col[r] * phase / norm;
        }
    }
    SpectralDecomposition {
        eigenvalues,
        eigenvectors: u,
    }
}

/// Spectral decomposition with ascending eigenvalues and phase-fixed eigenvectors.
pub fn eig_hermitian(a: &HermitianOperator) -> SpectralDecomposition {
    a.spectral().clone()
}

/// What to do with eigenvalues outside the domain of an [`OperatorFunction`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FloorPolicy {
    Error,
    Clamp(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Domain {
    Real,
    Positive,
    NonNegative,
}

/// A real function together with its domain and out-of-domain policy.
#[derive(Clone)]
pub struct OperatorFunction {
    pub label: String,
    pub domain: Domain,
    pub policy: FloorPolicy,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for OperatorFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "OperatorFunction({}, {:?}, {:?})",
            self.label, self.domain, self.policy
        )
    }
}

impl OperatorFunction {
    pub fn new(
        label: impl Into<String>,
        domain: Domain,
        policy: FloorPolicy,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        OperatorFunction {
            label: label.into(),
            domain,
            policy,
            f: Arc::new(f),
        }
    }

    pub fn exp() -> Self {
        Self::new("exp", Domain::Real, FloorPolicy::Error, f64::exp)
    }

    pub fn log(policy: FloorPolicy) -> Self {
        Self::new("log", Domain::Positive, policy, f64::ln)
    }

    pub fn power(x: f64, policy: FloorPolicy) -> Self {
        let domain = if x > 0.0 { Domain::NonNegative } else { Domain::Positive };
        Self::new(format!("pow({x})"), domain, policy, move |l| l.powf(x))
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }
}

/// Functional calculus `f(A) = Σ f(λ) P_λ`.
pub fn matfun(a: &HermitianOperator, f: &OperatorFunction) -> Result<HermitianOperator> {
    let sd = a.spectral();
    let scale = sd.eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut vals = Vec::with_capacity(sd.dim());
    for &l in &sd.eigenvalues {
        let arg = match f.domain {
            Domain::Real => l,
            Domain::NonNegative if l >= 0.0 => l,
            Domain::NonNegative if l >= -KTOL * scale => 0.0,
            Domain::Positive if l > 0.0 => l,
            _ => match f.policy {
                FloorPolicy::Error => return Err(Error::DomainError(l)),
                FloorPolicy::Clamp(eps) => l.max(eps),
            },
        };
        let arg = match (f.domain, f.policy) {
            (Domain::Positive, FloorPolicy::Clamp(eps)) => arg.max(eps),
            _ => arg,
        };
        vals.push(f.eval(arg));
    }
    let vals: Vec<C64> = vals.into_iter().map(cr).collect();
    Ok(HermitianOperator::from_matrix_unchecked(sd.from_values(&vals)))
}

/// Complex valued functional calculus.
pub fn matfun_complex(a: &HermitianOperator, f: impl Fn(f64) -> C64) -> CMat {
    a.spectral().apply_complex(f)
}

/// Schatten p-norm from singular values; `p = f64::INFINITY` gives the operator norm.
pub fn schatten_norm(a: &CMat, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::BadExponent(p));
    }
    let s = a.clone().singular_values();
    let smax = s.iter().fold(0.0f64, |m, &x| m.max(x));
    if p.is_infinite() || smax == 0.0 {
        return Ok(smax);
    }
    let sum: f64 = s.iter().map(|&x| (x / smax).powf(p)).sum();
    Ok(smax * sum.powf(1.0 / p))
}

/// `e^{izH}` for complex `z`.
pub fn propagator(h: &HermitianOperator, z: C64) -> CMat {
    h.spectral().apply_complex(|l| (I * z * l).exp())
}

/// Heisenberg evolution `τ^z(A) = e^{izH} A e^{-izH}`, `z` possibly complex.
pub fn evolve(a: &CMat, h: &HermitianOperator, z: C64) -> Result<CMat> {
    if a.nrows() != h.dim() || a.ncols() != h.dim() {
        return Err(Error::DimensionMismatch(format!(
            "operator {}x{} vs Hamiltonian {}",
            a.nrows(),
            a.ncols(),
            h.dim()
        )));
    }
    let sd = h.spectral();
    let u = &sd.eigenvectors;
    let mut b = u.adjoint() * a * u;
    for i in 0..b.nrows() {
        for j in 0..b.ncols() {
            b[(i, j)] *= (I * z * (sd.eigenvalues[i] - sd.eigenvalues[j])).exp();
        }
    }
    Ok(u * b * u.adjoint())
}

/// Real-time Heisenberg evolution of a Hermitian observable.
pub fn evolve_hermitian(a: &HermitianOperator, h: &HermitianOperator, t: f64) -> HermitianOperator {
    let m = evolve(a.matrix(), h, cr(t)).expect("dimensions checked by caller");
    HermitianOperator::from_matrix_unchecked(m)
}

/// Kronecker embedding of operators acting on distinct tensor slots.
pub fn tensor_embed(ops: &[(&CMat, usize)], dims: &[usize]) -> Result<CMat> {
    let mut factors: Vec<Option<&CMat>> = vec![None; dims.len()];
    for &(op, slot) in ops {
        if slot >= dims.len() {
            return Err(Error::DimensionMismatch(format!("slot {slot} out of range")));
        }
        if factors[slot].is_some() {
            return Err(Error::DimensionMismatch(format!("slot {slot} used twice")));
        }
        if op.nrows() != dims[slot] || op.ncols() != dims[slot] {
            return Err(Error::DimensionMismatch(format!(
                "operator of size {} in slot of dimension {}",
                op.nrows(),
                dims[slot]
            )));
        }
        factors[slot] = Some(op);
    }
    let mut out = CMat::identity(1, 1);
    for (slot, f) in factors.iter().enumerate() {
        out = match f {
            Some(m) => out.kronecker(m),
            None => out.kronecker(&CMat::identity(dims[slot], dims[slot])),
        };
    }
    Ok(out)
}

/// Partial trace over the factors not listed in `keep`.
pub fn partial_trace(a: &HermitianOperator, dims: &[usize], keep: &[usize]) -> Result<HermitianOperator> {
    partial_trace_matrix(a.matrix(), dims, keep).map(HermitianOperator::from_matrix_unchecked)
}

pub fn partial_trace_matrix(a: &CMat, dims: &[usize], keep: &[usize]) -> Result<CMat> {
    let total: usize = dims.iter().product();
    if total != a.nrows() || a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "dims multiply to {total}, operator has size {}",
            a.nrows()
        )));
    }
    let mut kept = vec![false; dims.len()];
    for &k in keep {
        if k >= dims.len() || kept[k] {
            return Err(Error::DimensionMismatch(format!("bad kept slot {k}")));
        }
        kept[k] = true;
    }
    let kdims: Vec<usize> = (0..dims.len()).filter(|&s| kept[s]).map(|s| dims[s]).collect();
    let tdims: Vec<usize> = (0..dims.len()).filter(|&s| !kept[s]).map(|s| dims[s]).collect();
    let dk: usize = kdims.iter().product();
    let dt: usize = tdims.iter().product();
    let compose = |ik: usize, it: usize| -> usize {
        let mut dk_rest = ik;
        let mut dt_rest = it;
        let mut digits = vec![0usize; dims.len()];
        for s in (0..dims.len()).rev() {
            if kept[s] {
                digits[s] = dk_rest % dims[s];
                dk_rest /= dims[s];
            } else {
                digits[s] = dt_rest % dims[s];
                dt_rest /= dims[s];
            }
        }
        digits.iter().zip(dims).fold(0, |acc, (d, n)| acc * n + d)
    };
    let mut out = CMat::zeros(dk, dk);
    for i in 0..dk {
        for j in 0..dk {
            let mut s = C64::new(0.0, 0.0);
            for t in 0..dt {
                s += a[(compose(i, t), compose(j, t))];
            }
            out[(i, j)] = s;
        }
    }
    Ok(out)
}

pub fn trace(a: &CMat) -> C64 {
    a.diagonal().iter().sum()
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

pub fn max_abs_real(a: &RMat) -> f64 {
    a.iter().fold(0.0f64, |m, z| m.max(z.abs()))
}

pub fn hermiticity_defect(a: &CMat) -> f64 {
    max_abs(&(a - a.adjoint()))
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// `tr(A B)` without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> C64 {
    let n = a.nrows();
    let mut s = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..a.ncols() {
            s += a[(i, k)] * b[(k, i)];
        }
    }
    s
}

/// Hilbert–Schmidt inner product `tr(A† B)`.
pub fn hs_inner(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Common eigenbasis of a commuting family: columns of the returned unitary, and for each
/// column the tuple of eigenvalues of the family members.
///
/// Each member is diagonalized inside the eigenspaces of the previous ones, so accidental
/// degeneracies never mix joint eigenvectors.
pub fn joint_eigenbasis(ops: &[&HermitianOperator], ctol: f64) -> Result<(CMat, Vec<Vec<f64>>)> {
    let n = ops.first().map(|o| o.dim()).unwrap_or(0);
    let mut worst = 0.0f64;
    for (i, a) in ops.iter().enumerate() {
        if a.dim() != n {
            return Err(Error::DimensionMismatch("family members of different size".into()));
        }
        for b in &ops[i + 1..] {
            let scale = 1.0f64.max(a.norm() * b.norm());
            worst = worst.max(max_abs(&commutator(a.matrix(), b.matrix())) / scale);
        }
    }
    if worst > ctol {
        return Err(Error::NonCommutingFamily(worst));
    }
    let mut clusters: Vec<(CMat, Vec<f64>)> = vec![(CMat::identity(n, n), vec![])];
    for op in ops {
        let scale = 1.0 + op.norm();
        let mut next = Vec::new();
        for (basis, tuple) in clusters {
            let block = HermitianOperator::from_matrix_unchecked(basis.adjoint() * op.matrix() * &basis);
            let sd = block.spectral();
            let vecs = &basis * &sd.eigenvectors;
            let mut start = 0;
            let ev = &sd.eigenvalues;
            for k in 1..=ev.len() {
                if k == ev.len() || ev[k] - ev[k - 1] > 1e-9 * scale {
                    let mean = ev[start..k].iter().sum::<f64>() / (k - start) as f64;
                    let mut t = tuple.clone();
                    t.push(mean);
                    next.push((vecs.columns(start, k - start).into_owned(), t));
                    start = k;
                }
            }
        }
        clusters = next;
    }
    let mut u = CMat::zeros(n, n);
    let mut tuples = Vec::with_capacity(n);
    let mut c = 0;
    for (basis, tuple) in clusters {
        for k in 0..basis.ncols() {
            u.set_column(c, &basis.column(k));
            tuples.push(tuple.clone());
            c += 1;
        }
    }
    Ok((u, tuples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pauli() -> [CMat; 3] {
        let z = cr(0.0);
        let o = cr(1.0);
        [
            CMat::from_row_slice(2, 2, &[z, o, o, z]),
            CMat::from_row_slice(2, 2, &[z, -I, I, z]),
            CMat::from_row_slice(2, 2, &[o, z, z, -o]),
        ]
    }

    #[test]
    fn pauli_spectra() {
        for s in pauli() {
            let h = HermitianOperator::new(s).unwrap();
            assert_abs_diff_eq!(h.eigenvalues()[0], -1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(h.eigenvalues()[1], 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMat::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(0.0), cr(0.0)]);
        assert!(matches!(HermitianOperator::new(m), Err(Error::NonHermitian(_))));
    }

    #[test]
    fn gue_reconstruction() {
        let mut rng = random::rng(7);
        let h = random::gue(8, &mut rng);
        let sd = eig_hermitian(&h);
        let rebuilt = sd.apply_complex(cr);
        assert!(max_abs(&(rebuilt - h.matrix())) < 1e-10 * h.norm());
        assert!(sd.unitarity_defect() < 1e-10);
        assert!(sd.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn phase_convention() {
        let mut rng = random::rng(8);
        let h = random::gue(6, &mut rng);
        let u = &h.spectral().eigenvectors;
        for c in 0..6 {
            let col = u.column(c);
            let big = col
                .iter()
                .fold(cr(0.0), |m, z| if z.norm() > m.norm() + 1e-12 { *z } else { m });
            assert!(big.im.abs() < 1e-14 && big.re > 0.0);
        }
    }

    #[test]
    fn functional_calculus_examples() {
        let a = HermitianOperator::from_diagonal(&[0.0, 2f64.ln()]);
        let e = matfun(&a, &OperatorFunction::exp()).unwrap();
        assert_abs_diff_eq!(e.matrix()[(1, 1)].re, 2.0, epsilon = 1e-14);
        let b = HermitianOperator::from_diagonal(&[4.0, 9.0]);
        let r = matfun(&b, &OperatorFunction::power(0.5, FloorPolicy::Error)).unwrap();
        assert_abs_diff_eq!(r.matrix()[(0, 0)].re, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.matrix()[(1, 1)].re, 3.0, epsilon = 1e-14);
    }

    #[test]
    fn log_domain_policy() {
        let a = HermitianOperator::from_diagonal(&[0.0, 1.0]);
        assert!(matches!(
            matfun(&a, &OperatorFunction::log(FloorPolicy::Error)),
            Err(Error::DomainError(_))
        ));
        let l = matfun(&a, &OperatorFunction::log(FloorPolicy::Clamp(1e-300))).unwrap();
        assert!(l.matrix()[(0, 0)].re < -690.0);
    }

    #[test]
    fn log_exp_round_trip() {
        let mut rng = random::rng(3);
        let rho = random::density(4, &mut rng);
        let l = matfun(&rho, &OperatorFunction::log(FloorPolicy::Error)).unwrap();
        let back = matfun(&l, &OperatorFunction::exp()).unwrap();
        assert!(max_abs(&(back.matrix() - rho.matrix())) < 1e-10);
    }

    #[test]
    fn schatten_examples() {
        let a = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![cr(3.0), cr(-4.0)]));
        assert_abs_diff_eq!(schatten_norm(&a, 1.0).unwrap(), 7.0, epsilon = 1e-13);
        assert_abs_diff_eq!(schatten_norm(&a, f64::INFINITY).unwrap(), 4.0, epsilon = 1e-13);
        assert_abs_diff_eq!(schatten_norm(&a, 2.0).unwrap(), 5.0, epsilon = 1e-13);
        assert!(matches!(schatten_norm(&a, 0.5), Err(Error::BadExponent(_))));
        let mut rng = random::rng(11);
        let g = random::ginibre(5, 5, &mut rng);
        let ps = [1.0, 1.5, 2.0, 4.0, f64::INFINITY];
        let norms: Vec<f64> = ps.iter().map(|&p| schatten_norm(&g, p).unwrap()).collect();
        assert!(norms.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn evolution_examples() {
        let [sx, _, sz] = pauli();
        let h = HermitianOperator::new(sz).unwrap();
        let out = evolve(&sx, &h, cr(std::f64::consts::PI)).unwrap();
        assert!(max_abs(&(out - &sx)) < 1e-14);
        let out0 = evolve(&sx, &h, cr(0.0)).unwrap();
        assert!(max_abs(&(out0 - &sx)) < 1e-15);
    }

    #[test]
    fn evolution_group_law() {
        let mut rng = random::rng(5);
        let h = random::gue(5, &mut rng);
        let a = random::ginibre(5, 5, &mut rng);
        let (s, t) = (0.37, -1.9);
        let lhs = evolve(&evolve(&a, &h, cr(s)).unwrap(), &h, cr(t)).unwrap();
        let rhs = evolve(&a, &h, cr(s + t)).unwrap();
        assert!(max_abs(&(lhs - rhs)) < 1e-10);
    }

    #[test]
    fn embedding() {
        let [sx, sy, sz] = pauli();
        let a = tensor_embed(&[(&sz, 0)], &[2, 2]).unwrap();
        let b = tensor_embed(&[(&sz, 1)], &[2, 2]).unwrap();
        assert!(max_abs(&commutator(&a, &b)) < 1e-15);
        let x = sx + &sz * cr(0.3);
        let y = &sy * cr(2.0) + CMat::identity(2, 2);
        let ex = tensor_embed(&[(&x, 0)], &[2, 2]).unwrap();
        let ey = tensor_embed(&[(&y, 1)], &[2, 2]).unwrap();
        let lhs = trace(&(ex * ey));
        let rhs = trace(&x) * trace(&y);
        assert!((lhs - rhs).norm() < 1e-14);
        let swapped = tensor_embed(&[(&y, 1), (&x, 0)], &[2, 2]).unwrap();
        assert!(max_abs(&(swapped - x.kronecker(&y))) < 1e-15);
    }

    #[test]
    fn embedding_spectrum() {
        let mut rng = random::rng(9);
        let a = random::gue(3, &mut rng);
        let e = tensor_embed(&[(a.matrix(), 1)], &[2, 3]).unwrap();
        let ev = HermitianOperator::new(e).unwrap().eigenvalues().to_vec();
        for (k, &l) in a.eigenvalues().iter().enumerate() {
            assert_abs_diff_eq!(ev[2 * k], l, epsilon = 1e-12);
            assert_abs_diff_eq!(ev[2 * k + 1], l, epsilon = 1e-12);
        }
    }

    #[test]
    fn joint_basis_of_commuting_family() {
        let mut rng = random::rng(12);
        let u = random::unitary(6, &mut rng);
        let a = HermitianOperator::from_diagonal(&[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]).conjugate_by(&u);
        let b = HermitianOperator::from_diagonal(&[0.0, 5.0, 0.0, 5.0, 0.0, 5.0]).conjugate_by(&u);
        let (v, tuples) = joint_eigenbasis(&[&a, &b], 1e-10).unwrap();
        for (k, t) in tuples.iter().enumerate() {
            let col = v.column(k).into_owned();
            let av = a.matrix() * &col - &col * cr(t[0]);
            let bv = b.matrix() * &col - &col * cr(t[1]);
            assert!(av.norm() < 1e-10 && bv.norm() < 1e-10);
        }
        let c = random::gue(6, &mut rng);
        assert!(matches!(
            joint_eigenbasis(&[&a, &c], 1e-10),
            Err(Error::NonCommutingFamily(_))
        ));
    }

    #[test]
    fn partial_traces() {
        let mut rng = random::rng(4);
        let a = random::gue(2, &mut rng);
        let b = random::density(3, &mut rng);
        let ab = HermitianOperator::new(a.matrix().kronecker(b.matrix())).unwrap();
        let t2 = partial_trace(&ab, &[2, 3], &[0]).unwrap();
        assert!(max_abs(&(t2.matrix() - a.matrix() * cr(b.trace()))) < 1e-13);
        let t1 = partial_trace(&ab, &[2, 3], &[1]).unwrap();
        assert!(max_abs(&(t1.matrix() - b.matrix() * cr(a.trace()))) < 1e-13);
        let rho = random::density(12, &mut rng);
        let r = partial_trace(&rho, &[3, 2, 2], &[0, 2]).unwrap();
        assert_abs_diff_eq!(r.trace(), 1.0, epsilon = 1e-12);
        let x = random::gue(6, &mut rng);
        let xe = {
            // embed x on slots (0,2) of (3,2,2) by permuting the middle factor
            let mut out = CMat::zeros(12, 12);
            for i0 in 0..3 {
                for i1 in 0..2 {
                    for i2 in 0..2 {
                        for j0 in 0..3 {
                            for j2 in 0..2 {
                                out[(i0 * 4 + i1 * 2 + i2, j0 * 4 + i1 * 2 + j2)] =
                                    x.matrix()[(i0 * 2 + i2, j0 * 2 + j2)];
                            }
                        }
                    }
                }
            }
            out
        };
        let lhs = trace(&(r.matrix() * x.matrix()));
        let rhs = trace(&(xe * rho.matrix()));
        assert!((lhs - rhs).norm() < 1e-12);
    }
}
