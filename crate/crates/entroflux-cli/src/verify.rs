//! Property suite behind `qsys-verify`. Every check reports its worst observed value.

use rand::Rng;
use serde::Serialize;

use entroflux::dynsys::{
    build_open_system, e_pt, e_pt_derivatives, finite_time_transport, random_system, random_tri_system,
    LinearResponseFamily, OpenSystemSpec,
};
use entroflux::modular::{fcs_spectral_measure, transfer_functional_check, two_time_distribution};
use entroflux::numerics::random;
use entroflux::quasifree::{fock_system, qf_e_pt, OnePartModel};
use entroflux::states::{hypothesis_min_error, test_error, trace_inequality_gaps, DensityMatrix};

use crate::output::CliError;

pub const SCHEMA: &str = "entroflux.verify/1";

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// `value <= tolerance` for upper bounds; `value >= tolerance` when `lower` is set.
    pub tolerance: f64,
    pub lower: bool,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub instances: usize,
    pub passed: bool,
    pub checks: Vec<Check>,
}

fn upper(name: &str, value: f64, tolerance: f64) -> Check {
    Check {
        name: name.into(),
        value,
        tolerance,
        lower: false,
        passed: value <= tolerance,
    }
}

fn lower(name: &str, value: f64, tolerance: f64) -> Check {
    Check {
        name: name.into(),
        value,
        tolerance,
        lower: true,
        passed: value >= tolerance,
    }
}

const PS: [f64; 4] = [1.0, 2.0, 4.0, f64::INFINITY];
const TIMES: [f64; 3] = [0.5, 2.0, 10.0];

pub fn run_suite(seed: u64, instances: usize) -> Result<Report, CliError> {
    let dim = |i: usize| 2 + i % 7;
    let seed_of = |i: usize| seed.wrapping_mul(1000).wrapping_add(i as u64);
    let mut checks = Vec::new();

    let (mut sym, mut ends, mut mono) = (0.0f64, 0.0f64, f64::NEG_INFINITY);
    for i in 0..instances {
        let s = random_tri_system(dim(i), seed_of(i));
        for t in TIMES {
            let mut prev: Option<f64> = None;
            for p in PS {
                for k in 0..=10 {
                    let a = 0.1 * k as f64;
                    sym = sym.max((e_pt(&s, t, a, p)? - e_pt(&s, t, 1.0 - a, p)?).abs());
                }
                ends = ends.max(e_pt(&s, t, 0.0, p)?.abs()).max(e_pt(&s, t, 1.0, p)?.abs());
                let v = e_pt(&s, t, 0.3, p)?;
                if let Some(q) = prev {
                    mono = mono.max(v - q);
                }
                prev = Some(v);
            }
        }
    }
    checks.push(upper("evans_searles_symmetry", sym, 1e-10));
    checks.push(upper("pressure_endpoints", ends, 1e-12));
    checks.push(upper("pressure_nonincreasing_in_p", mono, 1e-10));

    let (mut tv, mut fr, mut mean_gap, mut var_gap, mut transfer, mut deriv) =
        (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..instances {
        let t = 0.7 + 0.3 * i as f64;
        let g = random_system(dim(i), seed_of(i) ^ 0x5a5a);
        let entropy = g.log_omega().scale(-1.0);
        let p = two_time_distribution(&g.omega, &g.h, t, &[&entropy])?;
        tv = tv.max(p.total_variation(&fcs_spectral_measure(&g, -t)?.reflected()));
        let s = random_tri_system(dim(i), seed_of(i) ^ 0xa5a5);
        let q = fcs_spectral_measure(&s, t)?;
        fr = fr.max(q.fluctuation_relation_defect(t));
        let d = e_pt_derivatives(&s, t, 2.0)?;
        mean_gap = mean_gap.max((q.mean()[0] + d.expected_d_at_0 / t).abs());
        var_gap = var_gap.max((q.covariance()[(0, 0)] - d.variance / (t * t)).abs());
        deriv = deriv
            .max((d.d_at_0 - d.expected_d_at_0).abs())
            .max((d.d_at_1 - d.expected_d_at_1).abs());
        for p in [2.0, 4.0] {
            transfer = transfer.max(transfer_functional_check(&s, t, 0.35, p)?.gap);
        }
    }
    checks.push(upper("two_time_measure_total_variation", tv, 1e-10));
    checks.push(upper("fluctuation_relation", fr, 1e-10));
    checks.push(upper("fcs_mean_vs_pressure_derivative", mean_gap, 1e-6));
    checks.push(upper("fcs_variance_vs_pressure_curvature", var_gap, 1e-6));
    checks.push(upper("pressure_derivatives_at_endpoints", deriv, 1e-6));
    checks.push(upper("transfer_operator_identity", transfer, 1e-9));

    let open = build_open_system(&OpenSystemSpec::qubit_toy(&[0.5, 2.0], &[0.1, -0.2], 0.4)?)?;
    checks.push(upper("sigma_decomposition", open.sigma_decomposition_defect(), 1e-10));
    checks.push(upper("flux_integral", open.flux_integral_defect(0, 1.3)?, 1e-9));
    let b = open.entropy_balance(&open.system.omega, 1.2)?;
    checks.push(upper(
        "entropy_balance",
        (b.flux_integral - b.reservoir_change).abs(),
        1e-8,
    ));
    let toy = build_open_system(&OpenSystemSpec::qubit_toy(&[1.0, 1.0], &[0.0, 0.0], 0.4)?)?;
    let l = finite_time_transport(&LinearResponseFamily::new(&toy, 1.0, 0.1), 1.0)?;
    checks.push(upper("green_kubo_vs_derivative", l.max_gap(), 1e-5));
    checks.push(upper("onsager_symmetry", l.asymmetry(), 1e-6));

    let mut rng = random::rng(seed ^ 0x7e57);
    let (mut pb, mut gt, mut klein) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut np = f64::INFINITY;
    for i in 0..10 * instances {
        let n = dim(i);
        let (a, c) = (random::gue(n, &mut rng), random::gue(n, &mut rng));
        let gaps = trace_inequality_gaps(&a, &c);
        pb = pb.min(gaps.peierls_bogoliubov);
        gt = gt.min(gaps.golden_thompson);
        let (x, y) = (random::density(n, &mut rng), random::density(n, &mut rng));
        if let Some(k) = trace_inequality_gaps(&x, &y).klein {
            klein = klein.min(k);
        }
        let (rho, nu) = (DensityMatrix::new(x)?, DensityMatrix::new(y)?);
        let prior = rng.random_range(0.05..0.95);
        let opt = hypothesis_min_error(&rho, &nu, prior)?;
        for _ in 0..20 {
            let k = rng.random_range(0..=n);
            let proj = random::projection(n, k, &mut rng);
            np = np.min(test_error(&rho, &nu, prior, proj.matrix()) - opt.min_error);
        }
    }
    checks.push(lower("peierls_bogoliubov", pb, -1e-11));
    checks.push(lower("golden_thompson", gt, -1e-11));
    checks.push(lower("klein", klein, -1e-11));
    checks.push(lower("neyman_pearson_optimality", np, -1e-12));

    let mut qf = 0.0f64;
    for i in 0..instances.min(6) {
        let d = 2 + i % 3;
        let mut r = random::rng(seed_of(i) ^ 0xf0f0);
        let model = OnePartModel::from_generator(random::gue(d, &mut r), random::gue(d, &mut r))?;
        let sys = fock_system(&model)?;
        for p in PS {
            for a in [-0.3, 0.25, 0.7, 1.4] {
                qf = qf.max((qf_e_pt(&model, 0.9, a, p)? - e_pt(&sys, 0.9, a, p)?).abs());
            }
        }
    }
    checks.push(upper("quasifree_vs_fock", qf, 1e-9));

    Ok(Report {
        schema: SCHEMA,
        version: env!("CARGO_PKG_VERSION"),
        seed,
        instances,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}
