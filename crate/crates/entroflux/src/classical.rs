//! The harmonic chain `[-N, N]` coupled at both ends to harmonic reservoirs `[-M, -N-1]`
//! and `[N+1, M]`.
//!
//! Phase-space vectors are ordered `(p, q)` with sites `x = -M..=M` at index `x + M`.
//! Time evolution is carried out in the normal-mode basis of `1 - Δ`, where `e^{tL}`
//! is a direct sum of `2 × 2` rotations, so each evaluation of `e^{tL*} A e^{tL}` costs
//! `O(n²)` once the mode transform of `A` is known.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{Cholesky, Matrix2, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Extended, RMat, C64};

/// `(√5 − 1)/2π`, the heat conductance of the chain.
pub fn kappa() -> f64 {
    (5f64.sqrt() - 1.0) / (2.0 * PI)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub beta: f64,
    pub beta_l: f64,
    pub beta_r: f64,
}

impl ChainConfig {
    pub fn new(n: usize, m: usize, beta: f64, beta_l: f64, beta_r: f64) -> Result<Self> {
        if m <= n {
            return Err(Error::InvalidModel(format!("need M > N, got M = {m}, N = {n}")));
        }
        for b in [beta, beta_l, beta_r] {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::DomainError(b));
            }
        }
        Ok(ChainConfig {
            n,
            m,
            beta,
            beta_l,
            beta_r,
        })
    }

    /// Configuration with `β_{L/R} = β − X_{L/R}`.
    pub fn from_forces(n: usize, m: usize, beta: f64, x: [f64; 2]) -> Result<Self> {
        Self::new(n, m, beta, beta - x[0], beta - x[1])
    }

    pub fn forces(&self) -> [f64; 2] {
        [self.beta - self.beta_l, self.beta - self.beta_r]
    }

    pub fn temperatures(&self) -> [f64; 2] {
        [1.0 / self.beta_l, 1.0 / self.beta_r]
    }

    pub fn with_m(&self, m: usize) -> Result<Self> {
        Self::new(self.n, m, self.beta, self.beta_l, self.beta_r)
    }

    pub fn sites(&self) -> usize {
        2 * self.m + 1
    }
}

/// Mode-basis `pp` and `qq` blocks of a block-diagonal quadratic form.
#[derive(Clone, Debug)]
struct ModeForm {
    pp: RMat,
    qq: RMat,
}

impl ModeForm {
    fn combine(a: f64, x: &ModeForm, b: f64, y: &ModeForm) -> ModeForm {
        ModeForm {
            pp: &x.pp * a + &y.pp * b,
            qq: &x.qq * a + &y.qq * b,
        }
    }

    fn to_full(&self) -> RMat {
        let n = self.pp.nrows();
        let mut out = RMat::zeros(2 * n, 2 * n);
        out.view_mut((0, 0), (n, n)).copy_from(&self.pp);
        out.view_mut((n, n), (n, n)).copy_from(&self.qq);
        out
    }
}

/// Phase-space operators of a finite chain configuration.
#[derive(Debug)]
pub struct PhaseSpaceOperators {
    pub cfg: ChainConfig,
    pub h: RMat,
    pub h0: RMat,
    pub h_l: RMat,
    pub h_r: RMat,
    /// Orthogonal eigenvectors of `1 − Δ` on `[-M, M]`.
    modes: RMat,
    /// Mode frequencies `ω = √(eigenvalue of 1 − Δ)`.
    freqs: Vec<f64>,
    k_l: ModeForm,
    k_r: ModeForm,
    covariance: OnceLock<RMat>,
    logdet_precision: OnceLock<f64>,
}

/// `1 − Δ` on `[lo, hi]` with Dirichlet boundary, written into the `qq` block.
fn add_dirichlet_block(target: &mut RMat, offset: usize, lo: usize, hi: usize) {
    for i in lo..=hi {
        target[(offset + i, offset + i)] += 3.0;
        if i < hi {
            target[(offset + i, offset + i + 1)] -= 1.0;
            target[(offset + i + 1, offset + i)] -= 1.0;
        }
    }
}

fn subsystem_form(sites: usize, lo: usize, hi: usize) -> RMat {
    let mut out = RMat::zeros(2 * sites, 2 * sites);
    for i in lo..=hi {
        out[(i, i)] = 1.0;
    }
    add_dirichlet_block(&mut out, sites, lo, hi);
    out
}

/// Builds `h`, `h₀`, `h_L`, `h_R` and the normal-mode data of `1 − Δ`.
pub fn chain_build(cfg: ChainConfig) -> Result<PhaseSpaceOperators> {
    let cfg = ChainConfig::new(cfg.n, cfg.m, cfg.beta, cfg.beta_l, cfg.beta_r)?;
    let n = cfg.sites();
    let (m, s) = (cfg.m, cfg.n);
    let h_l = subsystem_form(n, 0, m - s - 1);
    let h_c = subsystem_form(n, m - s, m + s);
    let h_r = subsystem_form(n, m + s + 1, n - 1);
    let h0 = &h_l + &h_c + &h_r;
    let h = subsystem_form(n, 0, n - 1);

    let eig = SymmetricEigen::new(h.view((n, n), (n, n)).into_owned());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let modes = RMat::from_fn(n, n, |i, k| eig.eigenvectors[(i, order[k])]);
    let freqs = order.iter().map(|&k| eig.eigenvalues[k].sqrt()).collect();

    let to_modes = |full: &RMat| ModeForm {
        pp: modes.transpose() * full.view((0, 0), (n, n)) * &modes,
        qq: modes.transpose() * full.view((n, n), (n, n)) * &modes,
    };
    let k_l = to_modes(&h_l);
    let k_r = to_modes(&h_r);
    Ok(PhaseSpaceOperators {
        cfg,
        h,
        h0,
        h_l,
        h_r,
        modes,
        freqs,
        k_l,
        k_r,
        covariance: OnceLock::new(),
        logdet_precision: OnceLock::new(),
    })
}

/// The symplectic matrix `j = [[0, −1], [1, 0]]`.
pub fn symplectic_form(sites: usize) -> RMat {
    let n = sites;
    let mut j = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = -1.0;
        j[(n + i, i)] = 1.0;
    }
    j
}

fn logdet_pd(a: RMat) -> Option<f64> {
    let c = Cholesky::new(a)?;
    let l = c.l_dirty();
    let mut s = 0.0;
    for i in 0..l.nrows() {
        s += l[(i, i)].ln();
    }
    Some(2.0 * s)
}

impl PhaseSpaceOperators {
    pub fn sites(&self) -> usize {
        self.cfg.sites()
    }

    /// Phase-space dimension `2(2M + 1)`.
    pub fn dim(&self) -> usize {
        2 * self.sites()
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.freqs
    }

    pub fn k(&self, x: [f64; 2]) -> RMat {
        &self.h_l * x[0] + &self.h_r * x[1]
    }

    /// `L = jh`.
    pub fn generator(&self) -> RMat {
        symplectic_form(self.sites()) * &self.h
    }

    /// `L₀ = jh₀`.
    pub fn generator0(&self) -> RMat {
        symplectic_form(self.sites()) * &self.h0
    }

    /// `e^{tL}` in the site basis.
    pub fn propagator(&self, t: f64) -> RMat {
        let n = self.sites();
        let v = &self.modes;
        let diag = |f: &dyn Fn(f64) -> f64| {
            let mut scaled = v.clone();
            for (k, &w) in self.freqs.iter().enumerate() {
                let c = f(w);
                scaled.column_mut(k).scale_mut(c);
            }
            &scaled * v.transpose()
        };
        let cos = diag(&|w| (w * t).cos());
        let msin = diag(&|w| -w * (w * t).sin());
        let sinw = diag(&|w| (w * t).sin() / w);
        let mut e = RMat::zeros(2 * n, 2 * n);
        e.view_mut((0, 0), (n, n)).copy_from(&cos);
        e.view_mut((0, n), (n, n)).copy_from(&msin);
        e.view_mut((n, 0), (n, n)).copy_from(&sinw);
        e.view_mut((n, n), (n, n)).copy_from(&cos);
        e
    }

    fn k_modes(&self, y: [f64; 2]) -> ModeForm {
        ModeForm::combine(y[0], &self.k_l, y[1], &self.k_r)
    }

    /// Mode-basis `e^{tL*} A e^{tL}` for a block-diagonal form `A`.
    fn evolve_modes(&self, a: &ModeForm, t: f64) -> RMat {
        let n = self.sites();
        let mut ca = Vec::with_capacity(n);
        let mut cb = Vec::with_capacity(n);
        let mut cc = Vec::with_capacity(n);
        for &w in &self.freqs {
            let (s, c) = (w * t).sin_cos();
            ca.push(c);
            cb.push(-w * s);
            cc.push(s / w);
        }
        let (p, r) = (&a.pp, &a.qq);
        RMat::from_fn(2 * n, 2 * n, |i, j| {
            let (bi, bj) = (i / n, j / n);
            let (i, j) = (i % n, j % n);
            let (ui, vi) = if bi == 0 { (ca[i], cc[i]) } else { (cb[i], ca[i]) };
            let (uj, vj) = if bj == 0 { (ca[j], cc[j]) } else { (cb[j], ca[j]) };
            ui * p[(i, j)] * uj + vi * r[(i, j)] * vj
        })
    }

    /// Mode-basis `e^{tL*} k(Y) e^{tL} − k(Y)`.
    fn flux_form(&self, t: f64, y: [f64; 2]) -> RMat {
        let k = self.k_modes(y);
        self.evolve_modes(&k, t) - k.to_full()
    }

    /// Mode-basis `βh − k(X)`.
    fn precision_modes(&self, x: [f64; 2]) -> RMat {
        let n = self.sites();
        let mut out = -self.k_modes(x).to_full();
        for (i, &w) in self.freqs.iter().enumerate() {
            out[(i, i)] += self.cfg.beta;
            out[(n + i, n + i)] += self.cfg.beta * w * w;
        }
        out
    }

    fn own_precision_logdet(&self) -> Result<f64> {
        if let Some(&v) = self.logdet_precision.get() {
            return Ok(v);
        }
        let v = logdet_pd(self.precision_modes(self.cfg.forces())).ok_or(Error::NotFaithful)?;
        Ok(*self.logdet_precision.get_or_init(|| v))
    }

    fn covariance_modes(&self) -> Result<&RMat> {
        if let Some(d) = self.covariance.get() {
            return Ok(d);
        }
        let c = Cholesky::new(self.precision_modes(self.cfg.forces())).ok_or(Error::NotFaithful)?;
        Ok(self.covariance.get_or_init(|| c.inverse()))
    }

    /// `D_X = (βh − k(X))^{-1}` in the site basis.
    pub fn covariance(&self) -> Result<RMat> {
        let d = self.covariance_modes()?;
        let n = self.sites();
        let mut r = RMat::zeros(2 * n, 2 * n);
        r.view_mut((0, 0), (n, n)).copy_from(&self.modes);
        r.view_mut((n, n), (n, n)).copy_from(&self.modes);
        Ok(&r * d * r.transpose())
    }

    fn gaussian_cgf(&self, base: RMat, base_logdet: f64, b: RMat) -> Extended {
        match logdet_pd(base - b) {
            Some(l) => Extended::Finite(-0.5 * (l - base_logdet)),
            None => Extended::PosInfinity,
        }
    }
}

/// `g_t(X, Y) = −½ log det(1 − D_X(e^{tL*}k(Y)e^{tL} − k(Y)))`, with `β` taken from the
/// configuration. Returns `+∞` when the Gaussian integral diverges.
pub fn chain_gt(ops: &PhaseSpaceOperators, t: f64, x: [f64; 2], y: [f64; 2]) -> Result<Extended> {
    let (base, l0) = if x == ops.cfg.forces() {
        (ops.precision_modes(x), ops.own_precision_logdet()?)
    } else {
        let base = ops.precision_modes(x);
        let l0 = logdet_pd(base.clone()).ok_or(Error::NotFaithful)?;
        (base, l0)
    };
    Ok(ops.gaussian_cgf(base, l0, ops.flux_form(t, y)))
}

/// `e_t(α) = g_t(X, αX)` for the configuration's own forces.
pub fn chain_et(ops: &PhaseSpaceOperators, t: f64, alpha: f64) -> Result<Extended> {
    if alpha == 0.0 || alpha == 1.0 {
        return Ok(Extended::Finite(0.0));
    }
    let x = ops.cfg.forces();
    chain_gt(ops, t, x, [alpha * x[0], alpha * x[1]])
}

/// `e_t(α)` on a grid of `α`, evaluated in parallel; output order follows `alphas`.
pub fn chain_et_curve(ops: &PhaseSpaceOperators, t: f64, alphas: &[f64]) -> Result<Vec<Extended>> {
    alphas.par_iter().map(|&a| chain_et(ops, t, a)).collect()
}

/// `ω_X(Σ^t)` on a grid of times, evaluated in parallel.
pub fn chain_mean_ep_curve(ops: &PhaseSpaceOperators, times: &[f64]) -> Result<Vec<f64>> {
    ops.covariance_modes()?;
    times.par_iter().map(|&t| chain_mean_ep(ops, t)).collect()
}

/// Mean entropy production `ω_X(Σ^t) = (1/2t) tr(D_X(k(X) − e^{tL*}k(X)e^{tL}))`.
pub fn chain_mean_ep(ops: &PhaseSpaceOperators, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let d = ops.covariance_modes()?;
    let b = ops.flux_form(t, ops.cfg.forces());
    Ok(-d.component_mul(&b).sum() / (2.0 * t))
}

/// `g_{+,t}(X, Y)` with the steady covariance replaced by `D_{X,t*}`, the covariance of
/// `ω_X` evolved up to time `t*`.
pub fn chain_gc_gplus_t(ops: &PhaseSpaceOperators, t: f64, x: [f64; 2], y: [f64; 2], t_star: f64) -> Result<Extended> {
    let kx = ops.k_modes(x);
    let mut base = ops.evolve_modes(&kx, -t_star);
    base.neg_mut();
    for (i, &w) in ops.freqs.iter().enumerate() {
        let n = ops.sites();
        base[(i, i)] += ops.cfg.beta;
        base[(n + i, n + i)] += ops.cfg.beta * w * w;
    }
    let l0 = logdet_pd(base.clone()).ok_or(Error::NotFaithful)?;
    Ok(ops.gaussian_cgf(base, l0, ops.flux_form(t, y)))
}

/// Large-time generating function
/// `g(X, Y) = −κ log(1 + (Y_R − Y_L)((X_R − X_L) − (Y_R − Y_L)) / ((β − X_R)(β − X_L)))`.
pub fn chain_g_closed(beta: f64, x: [f64; 2], y: [f64; 2]) -> Extended {
    let d = y[1] - y[0];
    let arg = 1.0 + d * ((x[1] - x[0]) - d) / ((beta - x[1]) * (beta - x[0]));
    if arg > 0.0 {
        Extended::Finite(-kappa() * arg.ln())
    } else {
        Extended::PosInfinity
    }
}

/// `e(α) = −κ log(1 + ((T_L − T_R)²/T_L T_R) α(1 − α))`.
pub fn chain_e_closed(t_l: f64, t_r: f64, alpha: f64) -> Extended {
    let arg = 1.0 + (t_l - t_r).powi(2) / (t_l * t_r) * alpha * (1.0 - alpha);
    if arg > 0.0 {
        Extended::Finite(-kappa() * arg.ln())
    } else {
        Extended::PosInfinity
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    /// `ω_{X,+}(Φ_L) = −ω_{X,+}(Φ_R)`.
    pub flux: f64,
    pub entropy_production: f64,
    /// Covariance of the limiting current fluctuations `(δΦ_L, δΦ_R)`.
    pub clt_covariance: [[f64; 2]; 2],
}

pub fn chain_steady(beta_l: f64, beta_r: f64) -> SteadyState {
    let (tl, tr) = (1.0 / beta_l, 1.0 / beta_r);
    let k = kappa();
    let d = k * (tl * tl + tr * tr);
    SteadyState {
        flux: k * (tl - tr),
        entropy_production: k * (tl - tr).powi(2) / (tl * tr),
        clt_covariance: [[d, -d], [-d, d]],
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub s_l: f64,
    pub s_r: f64,
    pub rate: f64,
}

/// Point `θ` of the parametrized rate function on the anti-diagonal `s_L = −s_R`.
pub fn chain_rate(beta: f64, x: [f64; 2], theta: f64) -> RatePoint {
    let b0 = beta - 0.5 * (x[0] + x[1]);
    let delta = 0.5 * (x[0] - x[1]);
    let k = kappa();
    let s = k / b0 * theta.sinh();
    let half = 0.5 * theta;
    let rate = k
        * (2.0 * half.sinh().powi(2)
            - delta / b0 * theta.sinh()
            - ((1.0 - (delta / b0).powi(2)) * half.cosh().powi(2)).ln());
    RatePoint { s_l: s, s_r: -s, rate }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Positive,
    Negative,
}

/// On-shell scattering matrix `S_±(k) = e^{±2ikN} [[0, 1], [1, 0]]`.
pub fn chain_onshell_s(k: f64, n: usize, branch: Branch) -> Result<Matrix2<C64>> {
    if !(k > 0.0 && k < PI) {
        return Err(Error::DomainError(k));
    }
    let sign = match branch {
        Branch::Positive => 1.0,
        Branch::Negative => -1.0,
    };
    let phase = C64::from_polar(1.0, sign * 2.0 * k * n as f64);
    let zero = C64::new(0.0, 0.0);
    Ok(Matrix2::new(zero, phase, phase, zero))
}

/// Dispersion `ε(k) = √(3 − 2 cos k)`.
pub fn chain_dispersion(k: f64) -> f64 {
    (3.0 - 2.0 * k.cos()).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearResponse {
    /// `L_jk = −∂_{X_k}∂_{Y_j} g(X, Y)` at `X = Y = 0`.
    pub onsager: [[f64; 2]; 2],
    /// `½∂_{Y_k}∂_{Y_j} g(0, Y)` at `Y = 0`.
    pub half_hessian: [[f64; 2]; 2],
    /// Half the CLT covariance at equilibrium.
    pub half_covariance: [[f64; 2]; 2],
}

/// Finite-difference linear response of the closed-form generating function at inverse
/// temperature `β`.
pub fn chain_linear_response(beta: f64, step: f64) -> LinearResponse {
    let g = |x: [f64; 2], y: [f64; 2]| chain_g_closed(beta, x, y).unwrap();
    let unit = |j: usize, a: f64| if j == 0 { [a, 0.0] } else { [0.0, a] };
    let add = |u: [f64; 2], v: [f64; 2]| [u[0] + v[0], u[1] + v[1]];
    let h = step;
    let mut onsager = [[0.0; 2]; 2];
    let mut half_hessian = [[0.0; 2]; 2];
    for j in 0..2 {
        for k in 0..2 {
            let mixed = |sx: f64, sy: f64| g(unit(k, sx * h), unit(j, sy * h));
            let dxy = (mixed(1.0, 1.0) - mixed(1.0, -1.0) - mixed(-1.0, 1.0) + mixed(-1.0, -1.0)) / (4.0 * h * h);
            onsager[j][k] = -dxy;
            let yy = |a: f64, b: f64| g([0.0, 0.0], add(unit(j, a * h), unit(k, b * h)));
            let dyy = (yy(1.0, 1.0) - yy(1.0, -1.0) - yy(-1.0, 1.0) + yy(-1.0, -1.0)) / (4.0 * h * h);
            half_hessian[j][k] = 0.5 * dyy;
        }
    }
    let d = chain_steady(beta, beta).clt_covariance;
    LinearResponse {
        onsager,
        half_hessian,
        half_covariance: [[0.5 * d[0][0], 0.5 * d[0][1]], [0.5 * d[1][0], 0.5 * d[1][1]]],
    }
}

/// Doubles `M` from `cfg.m` until `observable` changes by less than `tol`.
/// Returns the last value and the `M` it was computed at.
pub fn converge_in_m(
    cfg: ChainConfig,
    tol: f64,
    max_m: usize,
    observable: impl Fn(&PhaseSpaceOperators) -> Result<f64>,
) -> Result<(f64, usize)> {
    let mut m = cfg.m;
    let mut last = observable(&chain_build(cfg)?)?;
    let mut change = f64::INFINITY;
    while 2 * m <= max_m {
        m *= 2;
        let next = observable(&chain_build(cfg.with_m(m)?)?)?;
        change = (next - last).abs();
        last = next;
        if change < tol {
            return Ok((last, m));
        }
    }
    Err(Error::NoConvergence(change))
}
