//! States, entropies, hypothesis testing and trace-inequality oracles.

use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::quad::{gauss_adaptive, golden_min};
use crate::numerics::{
    cr, hs_inner, max_abs, schatten_norm, trace, trace_product, CMat, Extended, HermitianOperator, C64, KTOL,
};

/// Tolerance on the trace of a density matrix.
pub const TRACE_TOL: f64 = 1e-12;

/// Positive unit-trace operator.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    op: HermitianOperator,
    support_rank: usize,
    faithful: bool,
}

impl DensityMatrix {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let ev = op.eigenvalues();
        let lmax = ev.last().copied().unwrap_or(0.0);
        if lmax <= 0.0 {
            return Err(Error::NotDensity("no positive eigenvalue".into()));
        }
        let floor = KTOL * lmax;
        if ev[0] < -floor.max(1e-14) {
            return Err(Error::NotDensity(format!("negative eigenvalue {}", ev[0])));
        }
        let tr = op.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::NotDensity(format!("trace {tr}")));
        }
        let support_rank = ev.iter().filter(|&&l| l > floor).count();
        let op = if ev[0] < 0.0 {
            op.map(|l| if l > floor { l } else { 0.0 })
        } else {
            op
        };
        Ok(DensityMatrix {
            faithful: support_rank == op.dim(),
            op,
            support_rank,
        })
    }

    pub fn from_matrix(m: CMat) -> Result<Self> {
        Self::new(HermitianOperator::new(m)?)
    }

    /// Normalizes a positive operator.
    pub fn normalized(op: &HermitianOperator) -> Result<Self> {
        Self::new(op.scale(1.0 / op.trace()))
    }

    pub fn chaotic(n: usize) -> Self {
        Self::new(HermitianOperator::identity(n).scale(1.0 / n as f64)).expect("valid state")
    }

    pub fn pure(psi: &DVector<C64>) -> Self {
        let nrm = psi.norm();
        let v = psi / cr(nrm);
        Self::new(HermitianOperator::from_matrix_unchecked(&v * v.adjoint())).expect("valid state")
    }

    /// `e^{K} / tr e^{K}`, computed with a shifted exponent.
    pub fn from_log(k: &HermitianOperator) -> Self {
        let top = k.eigenvalues().last().copied().unwrap_or(0.0);
        let e = k.map(|l| (l - top).exp());
        Self::normalized(&e).expect("exponential is positive")
    }

    /// Gibbs state `e^{-βH}/Z`.
    pub fn gibbs(h: &HermitianOperator, beta: f64) -> Self {
        Self::from_log(&h.scale(-beta))
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn matrix(&self) -> &CMat {
        self.op.matrix()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn support_rank(&self) -> usize {
        self.support_rank
    }

    pub fn is_faithful(&self) -> bool {
        self.faithful
    }

    pub fn eigenvalues(&self) -> &[f64] {
        self.op.eigenvalues()
    }

    fn kernel_floor(&self) -> f64 {
        KTOL * self.eigenvalues().last().copied().unwrap_or(0.0)
    }

    /// Eigenvalues with the kernel set to exactly zero.
    pub fn clean_eigenvalues(&self) -> Vec<f64> {
        let f = self.kernel_floor();
        self.eigenvalues()
            .iter()
            .map(|&l| if l > f { l } else { 0.0 })
            .collect()
    }

    pub fn support_projection(&self) -> HermitianOperator {
        let f = self.kernel_floor();
        self.op.map(|l| if l > f { 1.0 } else { 0.0 })
    }

    /// `ρ^x` on the support of `ρ` (zero on the kernel), for any real `x`.
    pub fn power(&self, x: f64) -> HermitianOperator {
        let f = self.kernel_floor();
        self.op.map(|l| if l > f { l.powf(x) } else { 0.0 })
    }

    /// `log ρ`; requires faithfulness.
    pub fn log(&self) -> Result<HermitianOperator> {
        if !self.faithful {
            return Err(Error::NotFaithful);
        }
        Ok(self.op.map(f64::ln))
    }

    pub fn expectation(&self, a: &CMat) -> C64 {
        trace_product(self.matrix(), a)
    }

    /// Schrödinger picture evolution `e^{-itH} ρ e^{itH}`.
    pub fn evolve(&self, h: &HermitianOperator, t: f64) -> DensityMatrix {
        let u = crate::numerics::propagator(h, cr(-t));
        DensityMatrix {
            op: self.op.conjugate_by(&u),
            support_rank: self.support_rank,
            faithful: self.faithful,
        }
    }

    /// Image under the canonical antiunitary time reversal (complex conjugation).
    pub fn conj(&self) -> DensityMatrix {
        DensityMatrix {
            op: self.op.conj(),
            support_rank: self.support_rank,
            faithful: self.faithful,
        }
    }

    /// `U ρ U†`.
    pub fn conjugate_by(&self, u: &CMat) -> DensityMatrix {
        DensityMatrix {
            op: self.op.conjugate_by(u),
            support_rank: self.support_rank,
            faithful: self.faithful,
        }
    }

    /// Convex combination `λρ + (1-λ)ν`.
    pub fn mix(&self, other: &DensityMatrix, lambda: f64) -> DensityMatrix {
        let m = self.matrix() * cr(lambda) + other.matrix() * cr(1.0 - lambda);
        DensityMatrix::from_matrix(m).expect("convex combination of states")
    }
}

/// Pairs of nonzero eigenvalues of two states together with the overlaps
/// `|⟨u_i|v_j⟩|²` of their eigenvectors.
pub(crate) struct JointSpectrum {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub overlap: Vec<Vec<f64>>,
}

pub(crate) fn joint_spectrum(rho: &DensityMatrix, nu: &DensityMatrix) -> JointSpectrum {
    let u = &rho.op().spectral().eigenvectors;
    let v = &nu.op().spectral().eigenvectors;
    let w = u.adjoint() * v;
    JointSpectrum {
        a: rho.clean_eigenvalues(),
        b: nu.clean_eigenvalues(),
        overlap: (0..w.nrows())
            .map(|i| (0..w.ncols()).map(|j| w[(i, j)].norm_sqr()).collect())
            .collect(),
    }
}

fn check_dims(rho: &DensityMatrix, nu: &DensityMatrix) -> Result<()> {
    if rho.dim() != nu.dim() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", rho.dim(), nu.dim())));
    }
    Ok(())
}

fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Von Neumann entropy `S(ρ) = -tr ρ log ρ`.
pub fn vn_entropy(rho: &DensityMatrix) -> f64 {
    -rho.clean_eigenvalues().into_iter().map(xlogx).sum::<f64>()
}

/// Does `Ran ρ ⊆ Ran ν` hold, up to the kernel tolerance?
pub fn support_contained(rho: &DensityMatrix, nu: &DensityMatrix) -> bool {
    let js = joint_spectrum(rho, nu);
    let mut leak = 0.0;
    for (i, &a) in js.a.iter().enumerate() {
        for (j, &b) in js.b.iter().enumerate() {
            if b == 0.0 {
                leak += a * js.overlap[i][j];
            }
        }
    }
    leak <= KTOL
}

/// Relative entropy `S(ρ|ν) = tr ρ(log ν - log ρ)`, `-∞` unless `Ran ρ ⊆ Ran ν`.
pub fn relative_entropy(rho: &DensityMatrix, nu: &DensityMatrix) -> Result<Extended> {
    check_dims(rho, nu)?;
    if !support_contained(rho, nu) {
        return Ok(Extended::NegInfinity);
    }
    let js = joint_spectrum(rho, nu);
    let mut s = 0.0;
    for (i, &a) in js.a.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        for (j, &b) in js.b.iter().enumerate() {
            if b > 0.0 {
                s += a * b.ln() * js.overlap[i][j];
            }
        }
        s -= a * a.ln();
    }
    Ok(Extended::Finite(s.min(0.0)))
}

/// Rényi relative entropy `S_α(ρ|ν) = log Σ λ^α μ^{1-α} tr(P_λ(ρ) P_μ(ν))`.
pub fn renyi_relative_entropy(rho: &DensityMatrix, nu: &DensityMatrix, alpha: f64) -> Result<Extended> {
    check_dims(rho, nu)?;
    let js = joint_spectrum(rho, nu);
    let mut s = 0.0;
    let mut overlap_mass = 0.0;
    for (i, &a) in js.a.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        for (j, &b) in js.b.iter().enumerate() {
            if b == 0.0 {
                continue;
            }
            let w = js.overlap[i][j];
            overlap_mass += w;
            s += (alpha * a.ln() + (1.0 - alpha) * b.ln()).exp() * w;
        }
    }
    if overlap_mass <= KTOL {
        return Ok(Extended::NegInfinity);
    }
    Ok(Extended::Finite(s.ln()))
}

/// The error probability `D_p(ρ,ν,P) = p ρ(1-P) + (1-p) ν(P)` of the test `P`.
pub fn test_error(rho: &DensityMatrix, nu: &DensityMatrix, p: f64, proj: &CMat) -> f64 {
    let n = proj.nrows();
    let comp = CMat::identity(n, n) - proj;
    p * rho.expectation(&comp).re + (1.0 - p) * nu.expectation(proj).re
}

/// Optimal test and minimal error probability (quantum Neyman–Pearson).
#[derive(Clone, Debug)]
pub struct HypothesisTest {
    pub min_error: f64,
    pub projection: HermitianOperator,
}

/// Minimal error `½(1 - ‖(1-p)ν - pρ‖₁)` together with the projection attaining it.
///
/// The optimal test selects hypothesis `ν` (outcome `P`) exactly where
/// `pρ - (1-p)ν` is positive.
pub fn hypothesis_min_error(rho: &DensityMatrix, nu: &DensityMatrix, p: f64) -> Result<HypothesisTest> {
    check_dims(rho, nu)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::BadProbability(p));
    }
    let a = HermitianOperator::from_matrix_unchecked(nu.matrix() * cr(1.0 - p) - rho.matrix() * cr(p));
    let tn = schatten_norm(a.matrix(), 1.0)?;
    let scale = a.norm().max(1.0);
    let projection = a.map(|l| if l < -1e-14 * scale { 1.0 } else { 0.0 });
    Ok(HypothesisTest {
        min_error: 0.5 * (1.0 - tn),
        projection,
    })
}

/// Quantum Chernoff distance `-min_{α∈[0,1]} S_α(ρ|ν)`; `+∞` for mutually singular states.
pub fn chernoff_distance(rho: &DensityMatrix, nu: &DensityMatrix) -> Result<Extended> {
    check_dims(rho, nu)?;
    if renyi_relative_entropy(rho, nu, 0.5)? == Extended::NegInfinity {
        return Ok(Extended::PosInfinity);
    }
    let f = |a: f64| {
        renyi_relative_entropy(rho, nu, a)
            .map(|e| e.to_f64())
            .unwrap_or(f64::NEG_INFINITY)
    };
    let (x, fx) = golden_min(f, 0.0, 1.0, 1e-10);
    let v = [(x, fx), (0.0, f(0.0)), (1.0, f(1.0))]
        .into_iter()
        .fold(fx, |m, (_, y)| m.min(y));
    Ok(Extended::Finite(-v))
}

/// Minimizer of `α ↦ S_α(ρ|ν)` on `[0,1]`.
pub fn chernoff_argmin(rho: &DensityMatrix, nu: &DensityMatrix) -> f64 {
    let f = |a: f64| {
        renyi_relative_entropy(rho, nu, a)
            .map(|e| e.to_f64())
            .unwrap_or(f64::NEG_INFINITY)
    };
    golden_min(f, 0.0, 1.0, 1e-10).0
}

/// Quadrature settings for the Kosaki integral.
#[derive(Clone, Copy, Debug)]
pub struct KosakiQuadrature {
    pub rtol: f64,
}

impl Default for KosakiQuadrature {
    fn default() -> Self {
        KosakiQuadrature { rtol: 1e-10 }
    }
}

/// Kosaki's functional
/// `(sin πα/π) ∫₀^∞ t^{α-1} ((1/t) ρ(A(t)A(t)*) + ν((1-A(t))*(1-A(t)))) dt`
/// for a user supplied path `A`.
pub fn kosaki_functional(
    rho: &DensityMatrix,
    nu: &DensityMatrix,
    alpha: f64,
    path: impl Fn(f64) -> CMat,
    quad: KosakiQuadrature,
) -> Result<f64> {
    check_dims(rho, nu)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::DomainError(alpha));
    }
    let n = rho.dim();
    let id = CMat::identity(n, n);
    let g = |t: f64| -> f64 {
        let a = path(t);
        let c = &id - &a;
        let first = trace(&(rho.matrix() * &a * a.adjoint())).re / t;
        let second = trace(&(nu.matrix() * c.adjoint() * c)).re;
        first + second
    };
    kosaki_outer(g, alpha, quad)
}

/// `∫₀^∞ t^{α-1} g(t) dt` split at `t = 1` with the substitutions `t = w^{1/α}` and
/// `t = r^{-1/(1-α)}`, each integrated by adaptive Gauss–Legendre.
fn kosaki_outer(g: impl Fn(f64) -> f64, alpha: f64, quad: KosakiQuadrature) -> Result<f64> {
    let lower = gauss_adaptive(|w: f64| g(w.powf(1.0 / alpha)), 0.0, 1.0, quad.rtol, 0.0)? / alpha;
    let upper = gauss_adaptive(
        |r: f64| {
            let t = r.powf(-1.0 / (1.0 - alpha));
            if t.is_finite() {
                t * g(t)
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        quad.rtol,
        0.0,
    )? / (1.0 - alpha);
    Ok((std::f64::consts::PI * alpha).sin() / std::f64::consts::PI * (lower + upper))
}

/// The minimizing path `A(t) = t ∫₀^∞ e^{-sρ} ν e^{-stν} ds`, in closed form.
pub fn kosaki_optimal_path(rho: &DensityMatrix, nu: &DensityMatrix, t: f64) -> CMat {
    let sr = rho.op().spectral();
    let sn = nu.op().spectral();
    let a = rho.clean_eigenvalues();
    let b = nu.clean_eigenvalues();
    let mut w = sr.eigenvectors.adjoint() * &sn.eigenvectors;
    for i in 0..w.nrows() {
        for j in 0..w.ncols() {
            let den = a[i] + t * b[j];
            let c = if den > 0.0 { t * b[j] / den } else { 0.0 };
            w[(i, j)] *= c;
        }
    }
    &sr.eigenvectors * w * sn.eigenvectors.adjoint()
}

/// Kosaki's integral evaluated at the optimal path; equals `exp S_α(ρ|ν)`.
pub fn kosaki_value(rho: &DensityMatrix, nu: &DensityMatrix, alpha: f64, quad: KosakiQuadrature) -> Result<f64> {
    if !rho.is_faithful() && !nu.is_faithful() {
        return Err(Error::NotFaithful);
    }
    kosaki_functional(rho, nu, alpha, |t| kosaki_optimal_path(rho, nu, t), quad)
}

/// Gaps of the Peierls–Bogoliubov, Klein and Golden–Thompson inequalities.
/// Each gap is nonnegative when the inequality holds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceGaps {
    pub peierls_bogoliubov: f64,
    pub klein: Option<f64>,
    pub golden_thompson: f64,
}

pub fn trace_inequality_gaps(a: &HermitianOperator, b: &HermitianOperator) -> TraceGaps {
    let shift_a = a.eigenvalues().last().copied().unwrap_or(0.0);
    let shift_b = b.eigenvalues().last().copied().unwrap_or(0.0);
    let ea = a.map(|l| (l - shift_a).exp());
    let eb = b.map(|l| (l - shift_b).exp());
    let tr_eb = eb.trace();
    let tr_eaeb = trace_product(ea.matrix(), eb.matrix()).re;
    let pb_lhs = (tr_eaeb / tr_eb).ln() + shift_a;
    let pb_rhs = trace_product(a.matrix(), eb.matrix()).re / tr_eb;

    let sum = a.add(b);
    let shift = shift_a + shift_b;
    let tr_sum = sum.eigenvalues().iter().map(|l| (l - shift).exp()).sum::<f64>();
    let gt = (tr_eaeb - tr_sum) * shift.exp();

    let positive = |x: &HermitianOperator| x.eigenvalues()[0] >= 0.0;
    let klein = if positive(a) && positive(b) {
        Some(klein_gap(a, b))
    } else {
        None
    };
    TraceGaps {
        peierls_bogoliubov: pb_lhs - pb_rhs,
        klein,
        golden_thompson: gt,
    }
}

/// `tr(A log A - A log B) - tr(A - B)` for positive `A`, `B`; `+∞` if `Ker B ⊄ Ker A`.
pub fn klein_gap(a: &HermitianOperator, b: &HermitianOperator) -> f64 {
    let sa = a.spectral();
    let sb = b.spectral();
    let w = sa.eigenvectors.adjoint() * &sb.eigenvectors;
    let fa = KTOL * sa.eigenvalues.last().copied().unwrap_or(0.0);
    let fb = KTOL * sb.eigenvalues.last().copied().unwrap_or(0.0);
    let mut s = 0.0;
    for (i, &la) in sa.eigenvalues.iter().enumerate() {
        if la <= fa {
            continue;
        }
        s += la * la.ln();
        for (j, &lb) in sb.eigenvalues.iter().enumerate() {
            let p = w[(i, j)].norm_sqr();
            if lb <= fb {
                if p > KTOL {
                    return f64::INFINITY;
                }
                continue;
            }
            s -= la * lb.ln() * p;
        }
    }
    s - (a.trace() - b.trace())
}

/// Outcome of the Gibbs variational principle check.
#[derive(Clone, Copy, Debug)]
pub struct GibbsCheck {
    /// Smallest `log tr e^A - ρ(A) - S(ρ)` over the random states (should be ≥ 0).
    pub min_gap: f64,
    /// The same quantity at `ρ = e^A/tr e^A` (should vanish).
    pub maximizer_gap: f64,
}

pub fn gibbs_variational_check(a: &HermitianOperator, trials: usize, seed: u64) -> GibbsCheck {
    let shift = a.eigenvalues().last().copied().unwrap_or(0.0);
    let log_z = a.eigenvalues().iter().map(|l| (l - shift).exp()).sum::<f64>().ln() + shift;
    let gap = |rho: &DensityMatrix| log_z - rho.expectation(a.matrix()).re - vn_entropy(rho);
    let mut rng = crate::numerics::random::rng(seed);
    let mut min_gap = f64::INFINITY;
    for _ in 0..trials {
        let rank = rng.random_range(1..=a.dim());
        let rho = DensityMatrix::new(crate::numerics::random::density_of_rank(a.dim(), rank, &mut rng))
            .expect("sampled state");
        min_gap = min_gap.min(gap(&rho));
    }
    GibbsCheck {
        min_gap,
        maximizer_gap: gap(&DensityMatrix::from_log(a)).abs(),
    }
}

/// Completely positive map in Kraus form `ρ ↦ Σ V_k ρ V_k†`.
#[derive(Clone, Debug)]
pub struct QuantumChannel {
    pub kraus: Vec<CMat>,
    pub trace_preserving: bool,
    pub unital: bool,
}

impl QuantumChannel {
    pub fn new(kraus: Vec<CMat>) -> Result<Self> {
        let n = kraus
            .first()
            .map(|k| k.ncols())
            .ok_or_else(|| Error::DimensionMismatch("empty Kraus family".into()))?;
        let m = kraus[0].nrows();
        if kraus.iter().any(|k| k.ncols() != n || k.nrows() != m) {
            return Err(Error::DimensionMismatch("Kraus operators of different shapes".into()));
        }
        let tp: CMat = kraus.iter().map(|k| k.adjoint() * k).sum();
        let un: CMat = kraus.iter().map(|k| k * k.adjoint()).sum();
        Ok(QuantumChannel {
            trace_preserving: max_abs(&(tp - CMat::identity(n, n))) <= 1e-10,
            unital: m == n && max_abs(&(un - CMat::identity(m, m))) <= 1e-10,
            kraus,
        })
    }

    /// Random mixture of unitary conjugations.
    pub fn mixed_unitary(weights: &[f64], unitaries: &[CMat]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        Self::new(
            weights
                .iter()
                .zip(unitaries)
                .map(|(w, u)| u * cr((w / total).sqrt()))
                .collect(),
        )
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let m: CMat = self.kraus.iter().map(|k| k * rho.matrix() * k.adjoint()).sum();
        DensityMatrix::from_matrix(m)
    }

    /// Heisenberg picture `X ↦ Σ V_k† X V_k`.
    pub fn dual(&self, x: &CMat) -> CMat {
        self.kraus.iter().map(|k| k.adjoint() * x * k).sum()
    }
}

/// `(ξ|η) = tr(ξ† η)`, exposed for duality checks.
pub fn hs_pairing(xi: &CMat, eta: &CMat) -> C64 {
    hs_inner(xi, eta)
}
