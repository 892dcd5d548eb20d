//! Quadrature, finite differences and one-dimensional minimization.

use std::sync::OnceLock;

use super::CMat;
use crate::error::{Error, Result};

/// Values that can be integrated: a real vector space with a distance.
pub trait Quadrable: Clone {
    fn axpy(&mut self, a: f64, x: &Self);
    fn scaled(&self, a: f64) -> Self;
    fn distance(&self, other: &Self) -> f64;
    fn magnitude(&self) -> f64;
}

impl Quadrable for f64 {
    fn axpy(&mut self, a: f64, x: &Self) {
        *self += a * x;
    }
    fn scaled(&self, a: f64) -> Self {
        a * self
    }
    fn distance(&self, other: &Self) -> f64 {
        (self - other).abs()
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Quadrable for Vec<f64> {
    fn axpy(&mut self, a: f64, x: &Self) {
        for (s, v) in self.iter_mut().zip(x) {
            *s += a * v;
        }
    }
    fn scaled(&self, a: f64) -> Self {
        self.iter().map(|v| a * v).collect()
    }
    fn distance(&self, other: &Self) -> f64 {
        self.iter().zip(other).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
    fn magnitude(&self) -> f64 {
        self.iter().fold(0.0f64, |m, a| m.max(a.abs()))
    }
}

impl Quadrable for CMat {
    fn axpy(&mut self, a: f64, x: &Self) {
        *self += x * super::cr(a);
    }
    fn scaled(&self, a: f64) -> Self {
        self * super::cr(a)
    }
    fn distance(&self, other: &Self) -> f64 {
        super::max_abs(&(self - other))
    }
    fn magnitude(&self) -> f64 {
        super::max_abs(self)
    }
}

/// Default node cap for the doubling Simpson rule.
pub const MAX_SIMPSON_INTERVALS: usize = 1 << 16;

/// Composite Simpson rule with interval doubling until successive estimates
/// differ by at most `atol`.
pub fn simpson_adaptive<T: Quadrable>(f: impl Fn(f64) -> T, a: f64, b: f64, atol: f64) -> Result<T> {
    simpson_adaptive_capped(f, a, b, atol, MAX_SIMPSON_INTERVALS)
}

pub fn simpson_adaptive_capped<T: Quadrable>(
    f: impl Fn(f64) -> T,
    a: f64,
    b: f64,
    atol: f64,
    max_intervals: usize,
) -> Result<T> {
    let mut ends = f(a);
    ends.axpy(1.0, &f(b));
    let mut n = 2usize;
    let mut h = (b - a) / 2.0;
    let mut odd = f(a + h);
    let mut even = odd.scaled(0.0);
    let estimate = |ends: &T, odd: &T, even: &T, h: f64| {
        let mut s = ends.clone();
        s.axpy(4.0, odd);
        s.axpy(2.0, even);
        s.scaled(h / 3.0)
    };
    let mut prev = estimate(&ends, &odd, &even, h);
    let mut agreed = 0;
    loop {
        even.axpy(1.0, &odd);
        n *= 2;
        h /= 2.0;
        let mut new_odd = odd.scaled(0.0);
        for k in 0..n / 2 {
            new_odd.axpy(1.0, &f(a + (2 * k + 1) as f64 * h));
        }
        odd = new_odd;
        let cur = estimate(&ends, &odd, &even, h);
        let err = cur.distance(&prev);
        if err <= atol && n >= 16 {
            agreed += 1;
            if agreed >= 2 {
                return Ok(cur);
            }
        } else {
            agreed = 0;
        }
        if n >= max_intervals {
            return Err(Error::QuadratureFailure(err));
        }
        prev = cur;
    }
}

/// Composite Simpson rule on `n` (even) intervals.
pub fn simpson<T: Quadrable>(f: impl Fn(f64) -> T, a: f64, b: f64, n: usize) -> T {
    let n = if n % 2 == 1 { n + 1 } else { n.max(2) };
    let h = (b - a) / n as f64;
    let mut s = f(a);
    s.axpy(1.0, &f(b));
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s.axpy(w, &f(a + k as f64 * h));
    }
    s.scaled(h / 3.0)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 1.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j - 1) as f64 * z * p2 - (j - 1) as f64 * p3) / j as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static R: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    R.get_or_init(|| gauss_legendre(16))
}

/// Composite Gauss–Legendre rule, 16 nodes per panel. Endpoints are never evaluated.
pub fn gauss_composite<T: Quadrable>(f: &impl Fn(f64) -> T, a: f64, b: f64, panels: usize) -> T {
    let (x, w) = gl16();
    let h = (b - a) / panels as f64;
    let mut acc: Option<T> = None;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(w) {
            let v = f(lo + 0.5 * h * (xi + 1.0));
            match acc.as_mut() {
                Some(s) => s.axpy(0.5 * h * wi, &v),
                None => acc = Some(v.scaled(0.5 * h * wi)),
            }
        }
    }
    acc.expect("at least one panel")
}

/// Composite Gauss–Legendre with panel doubling until the relative change is below `rtol`
/// (or the absolute change below `atol`).
pub fn gauss_adaptive<T: Quadrable>(f: impl Fn(f64) -> T, a: f64, b: f64, rtol: f64, atol: f64) -> Result<T> {
    let mut panels = 2;
    let mut prev = gauss_composite(&f, a, b, panels);
    loop {
        panels *= 2;
        let cur = gauss_composite(&f, a, b, panels);
        let err = cur.distance(&prev);
        if err <= atol.max(rtol * cur.magnitude()) {
            return Ok(cur);
        }
        if panels >= 4096 {
            return Err(Error::QuadratureFailure(err));
        }
        prev = cur;
    }
}

/// Five-point central first derivative.
pub fn deriv1(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

/// Five-point central second derivative.
pub fn deriv2(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x - 2.0 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h * h)
}

/// First derivative with one Richardson check: the estimates at `h` and `h/2` must agree
/// to `tol`, otherwise the step is halved up to four times.
pub fn deriv1_checked(f: impl Fn(f64) -> f64, x: f64, h: f64, tol: f64) -> Result<f64> {
    let mut h = h;
    let mut d = deriv1(&f, x, h);
    for _ in 0..4 {
        let d2 = deriv1(&f, x, h / 2.0);
        if (d2 - d).abs() <= tol.max(1e-12 * d2.abs()) {
            return Ok((16.0 * d2 - d) / 15.0);
        }
        h /= 2.0;
        d = d2;
    }
    Err(Error::StepSelectionFailure)
}

/// Golden-section search for the minimum of a unimodal function on `[a, b]`.
pub fn golden_min(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a, b);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    [(x, fx), (c, fc), (d, fd)]
        .into_iter()
        .fold((x, fx), |m, p| if p.1 < m.1 { p } else { m })
}
