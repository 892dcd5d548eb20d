//! Fenchel–Legendre transforms and one-dimensional large-deviation checks.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modular::AtomicMeasure;
use crate::numerics::quad::{deriv1, golden_min};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A convex function on `[a, b]`, extended by `+∞` outside.
#[derive(Clone)]
pub struct ConvexFn {
    f: RealFn,
    derivative: Option<RealFn>,
    pub a: f64,
    pub b: f64,
}

impl std::fmt::Debug for ConvexFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConvexFn")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("analytic_derivative", &self.derivative.is_some())
            .finish()
    }
}

impl ConvexFn {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static, a: f64, b: f64) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidModel(format!("bad interval [{a}, {b}]")));
        }
        Ok(ConvexFn {
            f: Arc::new(f),
            derivative: None,
            a,
            b,
        })
    }

    pub fn with_derivative(mut self, df: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.derivative = Some(Arc::new(df));
        self
    }

    pub fn eval(&self, s: f64) -> f64 {
        if s < self.a || s > self.b {
            f64::INFINITY
        } else {
            (self.f)(s)
        }
    }

    /// Derivative at an interior point; analytic when supplied.
    pub fn derivative(&self, s: f64) -> f64 {
        match &self.derivative {
            Some(df) => df(s),
            None => {
                let h = 1e-4 * (self.b - self.a);
                let h = h.min(0.45 * (s - self.a)).min(0.45 * (self.b - s));
                deriv1(|x| (self.f)(x), s, h)
            }
        }
    }

    /// Largest violation of midpoint convexity on `n + 1` equally spaced points.
    pub fn convexity_defect(&self, n: usize) -> f64 {
        let x: Vec<f64> = (0..=n)
            .map(|i| self.a + (self.b - self.a) * i as f64 / n as f64)
            .collect();
        let v: Vec<f64> = x.iter().map(|&s| self.eval(s)).collect();
        let mut worst: f64 = 0.0;
        for i in 1..n {
            worst = worst.max(v[i] - 0.5 * (v[i - 1] + v[i + 1]));
        }
        worst
    }

    pub fn check_convex(&self, n: usize, slack: f64) -> Result<()> {
        let d = self.convexity_defect(n);
        if d > slack {
            Err(Error::DomainError(d))
        } else {
            Ok(())
        }
    }
}

/// `sup_{s∈[a,b]} (θs − f(s))` for a convex `f` finite on `[a, b]`.
fn sup_affine_minus(f: impl Fn(f64) -> f64, a: f64, b: f64, theta: f64) -> f64 {
    let obj = |s: f64| theta * s - f(s);
    let tol = 1e-12 * (b - a).max(1.0);
    let (s0, neg) = golden_min(|s| -obj(s), a, b, tol);
    let mut best = -neg;
    let h = 1e-4 * (b - a);
    if s0 - h > a && s0 + h < b {
        let (fm, f0, fp) = (obj(s0 - h), obj(s0), obj(s0 + h));
        let curv = fp - 2.0 * f0 + fm;
        if curv < 0.0 {
            let shift = 0.5 * h * (fm - fp) / curv;
            if shift.abs() < h {
                best = best.max(obj(s0 + shift));
            }
        }
    }
    best.max(obj(a)).max(obj(b))
}

/// The Fenchel–Legendre transform `φ(θ) = sup_{s∈[a,b]} (θs − e(s))`.
pub fn legendre(e: &ConvexFn, theta: f64) -> f64 {
    sup_affine_minus(|s| e.eval(s), e.a, e.b, theta)
}

/// `sup_{θ∈[θ₀,θ₁]} (θs − φ(θ))`, which recovers `e(s)` at interior points once the range
/// contains `∂e(s)`.
pub fn biconjugate(e: &ConvexFn, s: f64, theta_range: (f64, f64)) -> f64 {
    sup_affine_minus(|th| legendre(e, th), theta_range.0, theta_range.1, s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateVariable {
    /// Columns `(theta, phi)`.
    Theta,
    /// Columns `(s, I)`.
    S,
}

/// A rate function tabulated on an explicit grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFn {
    pub variable: RateVariable,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub provenance: String,
}

impl RateFn {
    /// `φ` on `grid`.
    pub fn legendre(e: &ConvexFn, grid: &[f64], provenance: &str) -> Self {
        RateFn {
            variable: RateVariable::Theta,
            grid: grid.to_vec(),
            values: grid.iter().map(|&th| legendre(e, th)).collect(),
            provenance: provenance.to_string(),
        }
    }

    /// `I(s) = φ(−s)`, the rate of `Σ^t` when `e(α) = lim t⁻¹ log ω(e^{−αtΣ^t})`.
    pub fn entropic(e: &ConvexFn, grid: &[f64], provenance: &str) -> Self {
        RateFn {
            variable: RateVariable::S,
            grid: grid.to_vec(),
            values: grid.iter().map(|&s| legendre(e, -s)).collect(),
            provenance: provenance.to_string(),
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest violation of discrete convexity on a uniform grid.
    pub fn convexity_defect(&self) -> f64 {
        self.values
            .windows(3)
            .map(|w| w[1] - 0.5 * (w[0] + w[2]))
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header = match self.variable {
            RateVariable::Theta => "theta,phi",
            RateVariable::S => "s,I",
        };
        writeln!(w, "{header}")?;
        for (x, v) in self.grid.iter().zip(&self.values) {
            writeln!(w, "{x:.16e},{v:.16e}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    /// `max |e(s) − e(1 − s)|` on a sample of the domain.
    pub cgf_defect: f64,
    /// `max |I(−s) − s − I(s)|` over the rate grid.
    pub rate_gap: f64,
}

/// Checks that the Evans–Searles symmetry `e(s) = e(1 − s)` carries over to
/// `I(−s) = s + I(s)`.
pub fn rate_symmetry_check(e: &ConvexFn, grid: &[f64]) -> Result<SymmetryReport> {
    if ((e.a + e.b) - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidModel("domain is not symmetric about 1/2".into()));
    }
    let n = 200;
    let cgf_defect = (0..=n)
        .map(|i| e.a + (e.b - e.a) * i as f64 / n as f64)
        .map(|s| (e.eval(s) - e.eval(1.0 - s)).abs())
        .fold(0.0, f64::max);
    let rate = |s: f64| legendre(e, -s);
    let rate_gap = grid.iter().map(|&s| (rate(-s) - s - rate(s)).abs()).fold(0.0, f64::max);
    Ok(SymmetryReport { cgf_defect, rate_gap })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CumulantRow {
    pub t: f64,
    /// `κ_k(t) = ∂_s^k e_t(0)` for `k = 1..4`.
    pub cumulants: [f64; 4],
    /// `κ_k(t)/t`.
    pub rates: [f64; 4],
    /// `κ_k(t)/t^{k/2}`, the cumulants of the `t^{-1/2}`-scaled variable.
    pub scaled: [f64; 4],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CumulantReport {
    pub rows: Vec<CumulantRow>,
}

impl CumulantReport {
    /// Mean and variance rates at the largest time.
    pub fn limits(&self) -> [f64; 2] {
        let last = self.rows.last().expect("nonempty ladder");
        [last.rates[0], last.rates[1]]
    }

    /// Whether the scaled third and fourth cumulants shrink along the ladder.
    pub fn gaussian_trend(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| (2..4).all(|k| w[1].scaled[k].abs() <= w[0].scaled[k].abs() + 1e-12))
    }
}

fn stencil(f: &impl Fn(f64) -> f64, h: f64) -> [f64; 4] {
    let (m2, m1, z, p1, p2) = (f(-2.0 * h), f(-h), f(0.0), f(h), f(2.0 * h));
    [
        (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h),
        (-m2 + 16.0 * m1 - 30.0 * z + 16.0 * p1 - p2) / (12.0 * h * h),
        (p2 - 2.0 * p1 + 2.0 * m1 - m2) / (2.0 * h.powi(3)),
        (p2 - 4.0 * p1 + 6.0 * z - 4.0 * m1 + m2) / h.powi(4),
    ]
}

/// Cumulants of orders 1 to 4 of the family `s ↦ e_t(s)` at `s = 0` on the ladder of times,
/// by central differences with step `h` and a Richardson step at `h/2`.
pub fn cumulants_from_cgf(
    family: impl Fn(f64, f64) -> f64,
    ladder: &[f64],
    h: f64,
    rtol: f64,
) -> Result<CumulantReport> {
    let mut rows = Vec::with_capacity(ladder.len());
    for &t in ladder {
        if t <= 0.0 {
            return Err(Error::ZeroTime);
        }
        let f = |s: f64| family(t, s);
        let coarse = stencil(&f, h);
        let fine = stencil(&f, 0.5 * h);
        let mut cumulants = [0.0; 4];
        let scale = coarse.iter().chain(&fine).fold(1.0f64, |m, x| m.max(x.abs()));
        for k in 0..4 {
            let order = if k < 2 { 16.0 } else { 4.0 };
            if (fine[k] - coarse[k]).abs() > rtol * scale {
                return Err(Error::StepSelectionFailure);
            }
            cumulants[k] = (order * fine[k] - coarse[k]) / (order - 1.0);
        }
        let rates = cumulants.map(|c| c / t);
        let mut scaled = [0.0; 4];
        for k in 0..4 {
            scaled[k] = cumulants[k] / t.powf(0.5 * (k + 1) as f64);
        }
        rows.push(CumulantRow {
            t,
            cumulants,
            rates,
            scaled,
        });
    }
    Ok(CumulantReport { rows })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub t: f64,
    /// `t⁻¹ log P_t([θ, ∞))`, `−∞` when the tail is empty.
    pub log_tail_rate: f64,
    /// `log_tail_rate − bound`.
    pub excess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub theta: f64,
    /// `−φ(θ)` when `θ ≥ D⁺e(0)`, `e(0)` otherwise.
    pub bound: f64,
    pub rows: Vec<TailRow>,
    /// Positive parts of the excesses are nonincreasing along the ladder.
    pub holds: bool,
}

/// Upper large-deviation bound for the right tail of `t⁻¹X_t`; `sampler(t)` returns the
/// distribution of `t⁻¹X_t`, normalized to mass one before use.
pub fn ge_tail_bound_check(
    e: &ConvexFn,
    sampler: impl Fn(f64) -> Result<AtomicMeasure>,
    theta: f64,
    ladder: &[f64],
) -> Result<TailReport> {
    if !(e.a <= 0.0 && 0.0 < e.b) {
        return Err(Error::InvalidModel("0 must lie in [a, b[".into()));
    }
    let h = 1e-5 * (e.b - e.a);
    let slope = if e.a < 0.0 {
        e.derivative(0.0)
    } else {
        (-3.0 * e.eval(0.0) + 4.0 * e.eval(h) - e.eval(2.0 * h)) / (2.0 * h)
    };
    let bound = if theta >= slope {
        -legendre(e, theta)
    } else {
        e.eval(0.0)
    };
    let mut rows = Vec::with_capacity(ladder.len());
    for &t in ladder {
        let p = sampler(t)?;
        if p.dim() != 1 {
            return Err(Error::DimensionMismatch("tail check needs a scalar measure".into()));
        }
        let mass = p.mass();
        let tail: f64 = p
            .atoms()
            .iter()
            .filter(|a| a.location[0] >= theta - p.btol())
            .map(|a| a.weight)
            .sum::<f64>()
            / mass;
        let log_tail_rate = if tail > 0.0 { tail.ln() / t } else { f64::NEG_INFINITY };
        rows.push(TailRow {
            t,
            log_tail_rate,
            excess: log_tail_rate - bound,
        });
    }
    let holds = rows
        .windows(2)
        .all(|w| w[1].excess.max(0.0) <= w[0].excess.max(0.0) + 1e-12);
    Ok(TailReport {
        theta,
        bound,
        rows,
        holds,
    })
}

/// `(distance, |f'|)` at the given distances inside a domain boundary; `inward` is `±1`.
pub fn steepness_profile(f: impl Fn(f64) -> f64, boundary: f64, inward: f64, distances: &[f64]) -> Vec<(f64, f64)> {
    distances
        .iter()
        .map(|&d| {
            let x = boundary + inward * d;
            let h = 0.1 * d;
            (d, deriv1(&f, x, h).abs())
        })
        .collect()
}
