use super::open::{is_real, OpenSystem};
use super::{entropy_production, log_trace_exp, QuantumDynamicalSystem, TimeReversal, STRUCT_TOL};
use crate::error::{Error, Result};
use crate::numerics::quad::{deriv1_checked, simpson, simpson_adaptive};
use crate::numerics::{cr, max_abs, propagator, trace, CMat, HermitianOperator, RMat, C64, I};
use crate::states::DensityMatrix;

/// Flux observables `Φ_X^{(j)}` attached to forces `X_j`.
#[derive(Clone, Debug)]
pub struct FluxFamily {
    pub fluxes: Vec<HermitianOperator>,
}

impl FluxFamily {
    /// `‖σ_X - Σ X_j Φ_X^{(j)}‖_max`.
    pub fn relation_defect(&self, sys: &QuantumDynamicalSystem, x: &[f64]) -> f64 {
        let sigma = entropy_production(sys);
        let sum = self
            .fluxes
            .iter()
            .zip(x)
            .fold(CMat::zeros(sys.dim(), sys.dim()), |acc, (f, xj)| {
                acc + f.matrix() * cr(*xj)
            });
        max_abs(&(sigma.matrix() - sum))
    }
}

/// A family `X ↦ (H_X, ω_X, Φ_X)` with `σ_X = X·Φ_X`.
pub trait ForceFamily: Sync {
    fn n_forces(&self) -> usize;
    fn system(&self, x: &[f64]) -> Result<QuantumDynamicalSystem>;
    fn fluxes(&self, x: &[f64]) -> Result<FluxFamily>;
}

fn checked_member<F: ForceFamily + ?Sized>(family: &F, x: &[f64]) -> Result<(QuantumDynamicalSystem, FluxFamily)> {
    if x.len() != family.n_forces() {
        return Err(Error::DimensionMismatch(format!(
            "{} forces expected, got {}",
            family.n_forces(),
            x.len()
        )));
    }
    let sys = family.system(x)?;
    let fl = family.fluxes(x)?;
    if fl.fluxes.len() != x.len() {
        return Err(Error::DimensionMismatch("flux count".into()));
    }
    let scale = 1.0 + fl.fluxes.iter().map(|f| f.norm()).fold(0.0, f64::max) * x.iter().map(|v| v.abs()).sum::<f64>();
    let d = fl.relation_defect(&sys, x);
    if d > STRUCT_TOL * scale {
        return Err(Error::InvalidModel(format!("flux relation defect {d:e}")));
    }
    Ok((sys, fl))
}

/// `∫_0^t e^{iws} ds`.
fn phase_integral(w: f64, t: f64) -> C64 {
    let x = w * t;
    if x.abs() < 1e-4 {
        cr(t) * (cr(1.0) + I * x / 2.0 - cr(x * x / 6.0) - I * x * x * x / 24.0)
    } else {
        ((I * x).exp() - 1.0) / (I * w)
    }
}

/// `∫_0^t τ^s(A) ds`, exactly, in the eigenbasis of `H`.
pub fn heisenberg_integral(a: &CMat, h: &HermitianOperator, t: f64) -> CMat {
    let sd = h.spectral();
    let u = &sd.eigenvectors;
    let mut b = u.adjoint() * a * u;
    for i in 0..b.nrows() {
        for j in 0..b.ncols() {
            b[(i, j)] *= phase_integral(sd.eigenvalues[i] - sd.eigenvalues[j], t);
        }
    }
    u * b * u.adjoint()
}

/// `(1/t) ∫_0^t ω(τ^s(A)) ds`, and `ω(A)` at `t = 0`.
pub fn time_average(omega: &DensityMatrix, h: &HermitianOperator, a: &CMat, t: f64) -> f64 {
    if t == 0.0 {
        return omega.expectation(a).re;
    }
    omega.expectation(&heisenberg_integral(a, h, t)).re / t
}

/// Generalized entropic pressure `e_t(X,Y) = log tr exp(log ω_X + Y·∫_0^t Φ_{X(-s)} ds)`,
/// with the time integral done by doubling Simpson.
pub fn e_gen<F: ForceFamily + ?Sized>(family: &F, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    let (sys, fl) = checked_member(family, x)?;
    if y.len() != x.len() {
        return Err(Error::DimensionMismatch("Y and X lengths differ".into()));
    }
    let combo = fl
        .fluxes
        .iter()
        .zip(y)
        .fold(CMat::zeros(sys.dim(), sys.dim()), |acc, (f, yj)| {
            acc + f.matrix() * cr(*yj)
        });
    let integral = simpson_adaptive(|s| sys.tau(&combo, -s), 0.0, t, 1e-9)?;
    let k = HermitianOperator::from_matrix_unchecked(sys.log_omega().matrix() + integral);
    Ok(log_trace_exp(&k))
}

/// `e_t(X,Y)` with the flux integral evaluated in closed form.
pub fn e_gen_exact<F: ForceFamily + ?Sized>(family: &F, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    let (sys, fl) = checked_member(family, x)?;
    let combo = fl
        .fluxes
        .iter()
        .zip(y)
        .fold(CMat::zeros(sys.dim(), sys.dim()), |acc, (f, yj)| {
            acc + f.matrix() * cr(*yj)
        });
    let integral = -heisenberg_integral(&combo, &sys.h, -t);
    let k = HermitianOperator::from_matrix_unchecked(sys.log_omega().matrix() + integral);
    Ok(log_trace_exp(&k))
}

/// Logarithmic mean, the divided difference of `exp` at `(log a, log b)`.
fn log_mean(a: f64, b: f64) -> f64 {
    let (la, lb) = (a.ln(), b.ln());
    let d = lb - la;
    if d.abs() < 1e-6 {
        a * (1.0 + d / 2.0 + d * d / 6.0)
    } else {
        (b - a) / d
    }
}

/// Kubo–Mari inner product `⟨A|B⟩_ρ = ∫_0^1 tr(ρ^{1-s} A* ρ^s B) ds`.
pub fn kubo_mari(rho: &DensityMatrix, a: &CMat, b: &CMat) -> Result<C64> {
    if !rho.is_faithful() {
        return Err(Error::NotFaithful);
    }
    if a.shape() != (rho.dim(), rho.dim()) || b.shape() != a.shape() {
        return Err(Error::DimensionMismatch("Kubo–Mari operands".into()));
    }
    let sd = rho.op().spectral();
    let u = &sd.eigenvectors;
    let p = &sd.eigenvalues;
    let ar = u.adjoint() * a * u;
    let br = u.adjoint() * b * u;
    let mut s = cr(0.0);
    for j in 0..p.len() {
        for k in 0..p.len() {
            s += ar[(k, j)].conj() * br[(k, j)] * log_mean(p[j], p[k]);
        }
    }
    Ok(s)
}

/// Kubo–Mari product by composite Simpson over `s ∈ [0, 1]`.
pub fn kubo_mari_quadrature(rho: &DensityMatrix, a: &CMat, b: &CMat, intervals: usize) -> C64 {
    let ad = a.adjoint();
    let re = simpson(
        |s| {
            let m = rho.power(1.0 - s).matrix() * &ad * rho.power(s).matrix() * b;
            trace(&m).re
        },
        0.0,
        1.0,
        intervals,
    );
    let im = simpson(
        |s| {
            let m = rho.power(1.0 - s).matrix() * &ad * rho.power(s).matrix() * b;
            trace(&m).im
        },
        0.0,
        1.0,
        intervals,
    );
    C64::new(re, im)
}

/// Interaction propagator `E_V(z) = e^{iz(H+V)} e^{-izH}`.
pub fn interaction_propagator(h: &HermitianOperator, v: &HermitianOperator, z: C64) -> Result<CMat> {
    if h.dim() != v.dim() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", h.dim(), v.dim())));
    }
    Ok(propagator(&h.add(v), z) * propagator(h, -z))
}

#[derive(Clone, Copy, Debug)]
pub struct GreenKuboOptions {
    pub fd_step: f64,
    pub fd_tol: f64,
    pub quad_atol: f64,
}

impl Default for GreenKuboOptions {
    fn default() -> Self {
        GreenKuboOptions {
            fd_step: 1e-3,
            fd_tol: 1e-8,
            quad_atol: 1e-10,
        }
    }
}

/// Finite-time Onsager matrix computed two ways.
#[derive(Clone, Debug)]
pub struct TransportMatrix {
    /// `∂_{X_k} ⟨Φ_X^{(j)}⟩_t` at `X = 0`.
    pub numeric: RMat,
    /// `½ ∫_{-t}^t ⟨Φ^{(k)}|τ^s(Φ^{(j)})⟩_ω (1 - |s|/t) ds`.
    pub green_kubo: RMat,
}

impl TransportMatrix {
    pub fn max_gap(&self) -> f64 {
        (&self.numeric - &self.green_kubo).abs().max()
    }

    pub fn asymmetry(&self) -> f64 {
        (&self.numeric - self.numeric.transpose()).abs().max()
    }
}

pub fn finite_time_transport<F: ForceFamily + ?Sized>(family: &F, t: f64) -> Result<TransportMatrix> {
    finite_time_transport_with(family, t, GreenKuboOptions::default())
}

pub fn finite_time_transport_with<F: ForceFamily + ?Sized>(
    family: &F,
    t: f64,
    opts: GreenKuboOptions,
) -> Result<TransportMatrix> {
    if t == 0.0 {
        return Err(Error::ZeroTime);
    }
    let n = family.n_forces();
    let zero = vec![0.0; n];
    let mut numeric = RMat::zeros(n, n);
    for k in 0..n {
        for j in 0..n {
            let avg = |h: f64| {
                let mut x = zero.clone();
                x[k] = h;
                let sys = family.system(&x).expect("family member");
                let fl = family.fluxes(&x).expect("family fluxes");
                time_average(&sys.omega, &sys.h, fl.fluxes[j].matrix(), t)
            };
            numeric[(j, k)] = deriv1_checked(avg, 0.0, opts.fd_step, opts.fd_tol)?;
        }
    }
    let (sys, fl) = checked_member(family, &zero)?;
    let phis: Vec<&CMat> = fl.fluxes.iter().map(|f| f.matrix()).collect();
    let integrand = |s: f64| -> Vec<f64> {
        let weight = 0.5 * (1.0 - s.abs() / t.abs());
        let mut out = vec![0.0; n * n];
        for j in 0..n {
            let pj = sys.tau(phis[j], s);
            for k in 0..n {
                out[j * n + k] = weight * kubo_mari(&sys.omega, phis[k], &pj).expect("faithful").re;
            }
        }
        out
    };
    let mut gk = simpson_adaptive(integrand, -t.abs(), 0.0, opts.quad_atol)?;
    let right = simpson_adaptive(integrand, 0.0, t.abs(), opts.quad_atol)?;
    for (g, r) in gk.iter_mut().zip(right) {
        *g += r;
    }
    Ok(TransportMatrix {
        numeric,
        green_kubo: RMat::from_fn(n, n, |j, k| gk[j * n + k]),
    })
}

/// Open-system family with forces `X_j = β_eq - β_j`, `X_{n+j} = -β_eq μ_eq + β_j μ_j` and
/// `ω_X ∝ exp(-β_eq(H_V - μ_eq N) + Σ X_j H_j + X_{n+j} N_j)`.
#[derive(Clone, Debug)]
pub struct LinearResponseFamily {
    pub h_v: HermitianOperator,
    pub h_res: Vec<HermitianOperator>,
    pub n_res: Vec<HermitianOperator>,
    pub n_total: HermitianOperator,
    pub beta_eq: f64,
    pub mu_eq: f64,
    fluxes: FluxFamily,
    tri: bool,
}

impl LinearResponseFamily {
    pub fn new(open: &OpenSystem, beta_eq: f64, mu_eq: f64) -> Self {
        let mut fluxes = open.energy_fluxes.clone();
        fluxes.extend(open.charge_fluxes.iter().cloned());
        let h_v = open.system.h.clone();
        let tri = is_real(h_v.matrix()) && open.h_res.iter().chain(&open.n_res).all(|a| is_real(a.matrix()));
        LinearResponseFamily {
            h_v,
            h_res: open.h_res.clone(),
            n_res: open.n_res.clone(),
            n_total: open.total_charge(),
            beta_eq,
            mu_eq,
            fluxes: FluxFamily { fluxes },
            tri,
        }
    }

    pub fn n_reservoirs(&self) -> usize {
        self.h_res.len()
    }

    /// Forces for reservoir parameters `(β_j, μ_j)`.
    pub fn forces(&self, betas: &[f64], mus: &[f64]) -> Vec<f64> {
        let mut x: Vec<f64> = betas.iter().map(|b| self.beta_eq - b).collect();
        x.extend(betas.iter().zip(mus).map(|(b, m)| -self.beta_eq * self.mu_eq + b * m));
        x
    }

    fn log_state(&self, x: &[f64]) -> HermitianOperator {
        let n = self.n_reservoirs();
        let mut k = self.h_v.sub(&self.n_total.scale(self.mu_eq)).scale(-self.beta_eq);
        for j in 0..n {
            k = k.add(&self.h_res[j].scale(x[j])).add(&self.n_res[j].scale(x[n + j]));
        }
        k
    }

    pub fn equilibrium(&self) -> DensityMatrix {
        DensityMatrix::from_log(&self.log_state(&vec![0.0; 2 * self.n_reservoirs()]))
    }

    /// `∂_{X_k} ω_X(A_t)` at `X = 0`, by finite differences.
    pub fn response_numeric(&self, a: &CMat, t: f64, k: usize) -> Result<f64> {
        let f = |h: f64| {
            let mut x = vec![0.0; 2 * self.n_reservoirs()];
            x[k] = h;
            let w = DensityMatrix::from_log(&self.log_state(&x));
            w.expectation(&crate::numerics::evolve(a, &self.h_v, cr(t)).expect("dims"))
                .re
        };
        deriv1_checked(f, 0.0, 1e-3, 1e-8)
    }

    /// `⟨G_k|A - ω_eq(A)⟩_eq + ∫_0^t ⟨F_k|A_s⟩_eq ds` with `G_k ∈ {H_k, N_k}` and `F_k ∈ {Φ_k, J_k}`.
    pub fn response_formula(&self, a: &CMat, t: f64, k: usize) -> Result<f64> {
        let n = self.n_reservoirs();
        let eq = self.equilibrium();
        let g = if k < n { &self.h_res[k] } else { &self.n_res[k - n] };
        let f = self.fluxes.fluxes[k].matrix();
        let centered = a - CMat::identity(a.nrows(), a.ncols()) * eq.expectation(a);
        let static_part = kubo_mari(&eq, g.matrix(), &centered)?.re;
        let dynamic = simpson_adaptive(
            |s| {
                let a_s = crate::numerics::evolve(a, &self.h_v, cr(s)).expect("dims");
                kubo_mari(&eq, f, &a_s).expect("faithful").re
            },
            0.0,
            t,
            1e-10,
        )?;
        Ok(static_part + dynamic)
    }
}

impl ForceFamily for LinearResponseFamily {
    fn n_forces(&self) -> usize {
        2 * self.n_reservoirs()
    }

    fn system(&self, x: &[f64]) -> Result<QuantumDynamicalSystem> {
        let w = DensityMatrix::from_log(&self.log_state(x));
        let sys = QuantumDynamicalSystem::new(self.h_v.clone(), w)?;
        if self.tri {
            sys.with_time_reversal(TimeReversal::conjugation())
        } else {
            Ok(sys)
        }
    }

    fn fluxes(&self, _x: &[f64]) -> Result<FluxFamily> {
        Ok(self.fluxes.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::super::{build_open_system, e_pt, OpenSystemSpec};
    use super::*;
    use crate::numerics::random;
    use approx::assert_abs_diff_eq;

    fn family(lambda: f64) -> LinearResponseFamily {
        let spec = OpenSystemSpec::qubit_toy(&[1.0, 1.0], &[0.0, 0.0], lambda).unwrap();
        LinearResponseFamily::new(&build_open_system(&spec).unwrap(), 1.0, 0.1)
    }

    #[test]
    fn kubo_mari_properties() {
        let mut rng = random::rng(21);
        let rho = DensityMatrix::new(random::density(4, &mut rng)).unwrap();
        let one = CMat::identity(4, 4);
        assert_abs_diff_eq!(kubo_mari(&rho, &one, &one).unwrap().re, 1.0, epsilon = 1e-12);
        let a = random::ginibre(4, 4, &mut rng);
        let b = random::ginibre(4, 4, &mut rng);
        let closed = kubo_mari(&rho, &a, &b).unwrap();
        let quad = kubo_mari_quadrature(&rho, &a, &b, 200);
        assert!((closed - quad).norm() < 1e-9);
        assert!(kubo_mari(&rho, &a, &a).unwrap().re >= 0.0);
        let ch = DensityMatrix::chaotic(4);
        let direct = trace(&(a.adjoint() * &b)) / 4.0;
        assert!((kubo_mari(&ch, &a, &b).unwrap() - direct).norm() < 1e-12);
    }

    #[test]
    fn heisenberg_integral_matches_quadrature() {
        let mut rng = random::rng(22);
        let h = random::gue(4, &mut rng);
        let a = random::ginibre(4, 4, &mut rng);
        let exact = heisenberg_integral(&a, &h, 1.7);
        let q = simpson_adaptive(|s| crate::numerics::evolve(&a, &h, cr(s)).unwrap(), 0.0, 1.7, 1e-12).unwrap();
        assert!(max_abs(&(exact - q)) < 1e-10);
    }

    #[test]
    fn flux_relation_holds() {
        let f = family(0.4);
        let x = [0.1, -0.2, 0.05, 0.3];
        let sys = f.system(&x).unwrap();
        assert!(f.fluxes(&x).unwrap().relation_defect(&sys, &x) < 1e-10);
    }

    #[test]
    fn generalized_pressure() {
        let f = family(0.4);
        let x = [0.2, -0.1, 0.1, 0.05];
        let t = 1.1;
        assert!(e_gen(&f, t, &x, &[0.0; 4]).unwrap().abs() < 1e-12);
        let alpha = 0.3;
        let y: Vec<f64> = x.iter().map(|v| alpha * v).collect();
        let sys = f.system(&x).unwrap();
        let reference = e_pt(&sys, t, alpha, f64::INFINITY).unwrap();
        assert_abs_diff_eq!(e_gen(&f, t, &x, &y).unwrap(), reference, epsilon = 1e-8);
        let y = [0.3, 0.1, -0.2, 0.4];
        let xy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let ges = e_gen(&f, t, &x, &y).unwrap() - e_gen(&f, t, &x, &xy).unwrap();
        assert!(ges.abs() < 1e-8);
        let rev = e_gen(&f, -t, &x, &y).unwrap() - e_gen(&f, t, &x, &xy).unwrap();
        assert!(rev.abs() < 1e-8);
        assert_abs_diff_eq!(
            e_gen(&f, t, &x, &y).unwrap(),
            e_gen_exact(&f, t, &x, &y).unwrap(),
            epsilon = 1e-8
        );
    }

    #[test]
    fn onsager_matrix() {
        let f = family(0.4);
        let l = finite_time_transport(&f, 1.0).unwrap();
        assert!(l.max_gap() < 1e-5, "{}", l.max_gap());
        assert!(l.asymmetry() < 1e-5);
        let sym = (&l.green_kubo + l.green_kubo.transpose()) * 0.5;
        let ev = sym.symmetric_eigenvalues();
        assert!(ev.iter().all(|&e| e > -1e-10));
        let dec = finite_time_transport(&family(0.0), 1.0).unwrap();
        assert!(dec.numeric.abs().max() < 1e-8 && dec.green_kubo.abs().max() < 1e-12);
    }

    #[test]
    fn general_linear_response() {
        let f = family(0.5);
        let mut rng = random::rng(23);
        let a = random::gue(32, &mut rng);
        for k in [0, 3] {
            let fd = f.response_numeric(a.matrix(), 0.8, k).unwrap();
            let formula = f.response_formula(a.matrix(), 0.8, k).unwrap();
            assert_abs_diff_eq!(fd, formula, epsilon = 1e-5);
        }
    }

    #[test]
    fn canonical_correlation_via_imaginary_time() {
        let f = family(0.5);
        let eq = f.equilibrium();
        let k = f.h_v.sub(&f.n_total.scale(f.mu_eq));
        let mut rng = random::rng(24);
        let a = random::gue(32, &mut rng);
        let b = random::gue(32, &mut rng);
        let q = simpson(
            |s| {
                let bs = crate::numerics::evolve(b.matrix(), &k, C64::new(0.0, f.beta_eq * s)).unwrap();
                eq.expectation(&(a.matrix() * bs)).re
            },
            0.0,
            1.0,
            400,
        );
        assert_abs_diff_eq!(q, kubo_mari(&eq, a.matrix(), b.matrix()).unwrap().re, epsilon = 1e-8);
    }

    #[test]
    fn propagator_cocycle_and_kms() {
        let mut rng = random::rng(25);
        let h = random::gue(4, &mut rng);
        let v = random::gue(4, &mut rng).scale(0.3);
        let (t, s) = (0.6, 1.1);
        let lhs = interaction_propagator(&h, &v, cr(t + s)).unwrap();
        let e_t = interaction_propagator(&h, &v, cr(t)).unwrap();
        let rhs = interaction_propagator(&h, &v, cr(s)).unwrap() * crate::numerics::evolve(&e_t, &h, cr(s)).unwrap();
        assert!(max_abs(&(lhs - rhs)) < 1e-10);
        let z = interaction_propagator(&h, &HermitianOperator::zeros(4), C64::new(0.3, 0.7)).unwrap();
        assert!(max_abs(&(z - CMat::identity(4, 4))) < 1e-12);
        let beta = 0.8;
        let rb = DensityMatrix::gibbs(&h, beta);
        let e = interaction_propagator(&h, &v, C64::new(0.0, beta)).unwrap();
        let a = random::ginibre(4, 4, &mut rng);
        let formula = rb.expectation(&(&a * &e)) / rb.expectation(&e);
        let direct = DensityMatrix::gibbs(&h.add(&v), beta).expectation(&a);
        assert!((formula - direct).norm() < 1e-10);
        let bound = (beta * v.norm()).exp() - 1.0;
        assert!((rb.expectation(&e) - 1.0).norm() <= bound);
    }
}
