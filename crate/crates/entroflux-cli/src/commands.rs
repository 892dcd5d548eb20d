use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use entroflux::classical::{
    chain_build, chain_e_closed, chain_et, chain_mean_ep_curve, chain_rate, chain_steady, kappa, ChainConfig,
};
use entroflux::dynsys::{build_open_system, OpenSystemSpec};
use entroflux::modular::{fcs_spectral_measure, AtomicMeasure};
use entroflux::quasifree::{
    ebb_build, ebb_e2plus, fock_system, xy_eplus, LeadSpec, ModelDocument, ScatteringData, MAX_FOCK_DIM,
};
use entroflux::{Error, Extended};

use crate::manifest::{OutputEntry, RunManifest, SCHEMA};
use crate::output::{ext, num, usage, CliError, Table};
use crate::verify;

#[derive(Debug, Parser)]
#[command(
    name = "entroflux",
    version,
    about = "Entropic fluctuations: figure data and verification suites"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct GlobalArgs {
    /// Built-in model; each command accepts a subset.
    #[arg(long, global = true, value_enum)]
    pub model: Option<Model>,
    /// JSON model document describing a custom EBB instance.
    #[arg(long, global = true, conflicts_with = "model")]
    pub model_file: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Manifest path; defaults to `<out>.manifest.json` when `--out` is given.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    /// Seed for randomized suites.
    #[arg(long, global = true, default_value_t = 2024)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Chain,
    Ebb2,
    Xy,
    QubitToy,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mean entropy production ω_X(Σ^t) of the finite harmonic chain.
    ChainSigma(ChainSigmaArgs),
    /// t⁻¹ e_t(α) of the finite chain for several times, with the limiting e(α).
    ChainEofalpha(ChainEofalphaArgs),
    /// Rate function I_X(s, −s) of the chain with its unforced reference.
    ChainRate(ChainRateArgs),
    /// Property suite for finite quantum systems; JSON report.
    QsysVerify(QsysVerifyArgs),
    /// e_{2,+}(α) of an electronic black box.
    EbbE2plus(AlphaGridArgs),
    /// e_{p,+}(α) of the open XY chain.
    XyEplus(XyArgs),
    /// Full counting statistics as an atomic measure.
    Fcs(FcsArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ChainArgs {
    /// Half width N of the sample.
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    /// Half width M of the whole chain.
    #[arg(long, default_value_t = 300)]
    pub m: usize,
    #[arg(long, default_value_t = 0.5)]
    pub beta_l: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta_r: f64,
}

impl ChainArgs {
    /// The sample starts at the left reservoir's temperature.
    fn config(&self) -> Result<ChainConfig, CliError> {
        usage(self.beta_l > 0.0 && self.beta_r > 0.0, || {
            "inverse temperatures must be positive".into()
        })?;
        usage(self.n >= 1 && self.m > self.n, || {
            format!("need 1 <= N < M, got N = {}, M = {}", self.n, self.m)
        })?;
        usage(self.m <= 2000, || {
            format!("M = {} exceeds the supported maximum 2000", self.m)
        })?;
        ChainConfig::new(self.n, self.m, self.beta_l, self.beta_l, self.beta_r)
            .map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ChainSigmaArgs {
    #[command(flatten)]
    pub chain: ChainArgs,
    #[arg(long, default_value_t = 400.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 2.0)]
    pub dt: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ChainEofalphaArgs {
    #[command(flatten)]
    pub chain: ChainArgs,
    /// Comma-separated list of times.
    #[arg(long, value_delimiter = ',', default_value = "10,30,60")]
    pub times: Vec<f64>,
    #[command(flatten)]
    pub grid: Grid,
}

#[derive(Debug, Args, Serialize)]
pub struct Grid {
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub alpha_min: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub alpha_max: f64,
    #[arg(long, default_value_t = 21)]
    pub points: usize,
}

impl Grid {
    fn values(&self) -> Result<Vec<f64>, CliError> {
        linspace(self.alpha_min, self.alpha_max, self.points)
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Result<Vec<f64>, CliError> {
    usage(a.is_finite() && b.is_finite() && a < b, || {
        format!("empty grid [{a}, {b}]")
    })?;
    usage((2..=100_000).contains(&n), || {
        format!("grid needs between 2 and 100000 points, got {n}")
    })?;
    let step = (b - a) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| if i == n - 1 { b } else { a + step * i as f64 })
        .collect())
}

#[derive(Debug, Args, Serialize)]
pub struct ChainRateArgs {
    #[arg(long, default_value_t = 0.5)]
    pub beta_l: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta_r: f64,
    #[arg(long, default_value_t = -0.6, allow_hyphen_values = true)]
    pub s_min: f64,
    #[arg(long, default_value_t = 0.6, allow_hyphen_values = true)]
    pub s_max: f64,
    #[arg(long, default_value_t = 241)]
    pub points: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct QsysVerifyArgs {
    /// Number of random systems per randomized check.
    #[arg(long, default_value_t = 12)]
    pub instances: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct AlphaGridArgs {
    #[arg(long, default_value_t = -0.5, allow_hyphen_values = true)]
    pub alpha_min: f64,
    #[arg(long, default_value_t = 1.5, allow_hyphen_values = true)]
    pub alpha_max: f64,
    #[arg(long, default_value_t = 201)]
    pub points: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct XyArgs {
    #[command(flatten)]
    pub grid: AlphaGridArgs,
    #[arg(long, default_value_t = 1.0)]
    pub beta_l: f64,
    #[arg(long, default_value_t = 3.0)]
    pub beta_r: f64,
    /// Coupling J.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub j: f64,
    /// Transverse field λ.
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub lambda: f64,
    /// Exponent p ≥ 1; `inf` for p = ∞.
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct FcsArgs {
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub t: f64,
    /// Reservoir inverse temperatures of the qubit toy.
    #[arg(long, value_delimiter = ',', default_value = "0.5,2")]
    pub betas: Vec<f64>,
    /// Reservoir chemical potentials of the qubit toy.
    #[arg(long, value_delimiter = ',', default_value = "0,0")]
    pub mus: Vec<f64>,
    /// Sample–reservoir coupling of the qubit toy.
    #[arg(long, default_value_t = 0.4, allow_hyphen_values = true)]
    pub lambda: f64,
}

struct Produced {
    bytes: Vec<u8>,
    params: serde_json::Value,
    seed: Option<u64>,
    failure: Option<String>,
}

fn params<T: Serialize>(g: &GlobalArgs, a: &T) -> serde_json::Value {
    serde_json::json!({ "global": g, "command": a })
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let start = Instant::now();
    let g = &cli.global;
    let (name, produced) = match &cli.command {
        Command::ChainSigma(a) => ("chain-sigma", chain_sigma(g, a)?),
        Command::ChainEofalpha(a) => ("chain-eofalpha", chain_eofalpha(g, a)?),
        Command::ChainRate(a) => ("chain-rate", chain_rate_cmd(g, a)?),
        Command::QsysVerify(a) => ("qsys-verify", qsys_verify(g, a)?),
        Command::EbbE2plus(a) => ("ebb-e2plus", ebb_e2plus_cmd(g, a)?),
        Command::XyEplus(a) => ("xy-eplus", xy_eplus_cmd(g, a)?),
        Command::Fcs(a) => ("fcs", fcs(g, a)?),
    };
    let out_path = g.out.clone().unwrap_or_else(|| PathBuf::from("-"));
    write_bytes(g.out.as_deref(), &produced.bytes)?;
    let manifest_path = g.manifest.clone().or_else(|| {
        g.out.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    });
    if let Some(mp) = manifest_path {
        let manifest = RunManifest {
            schema: SCHEMA,
            command: name.into(),
            params: produced.params,
            seed: produced.seed,
            version: env!("CARGO_PKG_VERSION"),
            wall_time_s: start.elapsed().as_secs_f64(),
            outputs: vec![OutputEntry::new(&out_path, &produced.bytes)],
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        write_bytes(Some(&mp), text.as_bytes())?;
    }
    match produced.failure {
        Some(f) => Err(CliError::Failed(f)),
        None => Ok(()),
    }
}

fn write_bytes(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    use std::io::Write;
    match path {
        None => std::io::stdout()
            .lock()
            .write_all(bytes)
            .map_err(|e| CliError::Numeric(format!("writing standard output: {e}"))),
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display()))),
    }
}

fn expect_model(g: &GlobalArgs, allowed: &[Model], default: Model, file_ok: bool) -> Result<Model, CliError> {
    if g.model_file.is_some() && !file_ok {
        return Err(CliError::Usage("this command does not accept --model-file".into()));
    }
    let m = g.model.unwrap_or(default);
    usage(allowed.contains(&m), || {
        let name = m
            .to_possible_value()
            .map(|v| v.get_name().to_string())
            .unwrap_or_default();
        format!("model {name} is not supported by this command")
    })?;
    Ok(m)
}

fn load_document(path: &Path) -> Result<ModelDocument, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    ModelDocument::from_json(&text).map_err(|e| CliError::Usage(e.to_string()))
}

fn chain_sigma(g: &GlobalArgs, a: &ChainSigmaArgs) -> Result<Produced, CliError> {
    expect_model(g, &[Model::Chain], Model::Chain, false)?;
    let cfg = a.chain.config()?;
    usage(a.dt > 0.0 && a.t_max > 0.0 && a.t_max.is_finite(), || {
        "need dt > 0 and t-max > 0".into()
    })?;
    let steps = (a.t_max / a.dt).round();
    usage(steps <= 1e6, || "too many time steps".into())?;
    let times: Vec<f64> = (0..=steps as usize)
        .map(|i| i as f64 * a.dt)
        .filter(|&t| t <= a.t_max + 1e-9 * a.dt)
        .collect();
    let ops = chain_build(cfg)?;
    let ep = chain_mean_ep_curve(&ops, &times)?;
    let steady = chain_steady(cfg.beta_l, cfg.beta_r).entropy_production;
    let mut table = Table::new(&["t", "mean_ep", "steady_ref"]);
    for (t, e) in times.iter().zip(ep) {
        table.row([num(*t), num(e), num(steady)]);
    }
    Ok(Produced {
        bytes: table.into_bytes(),
        params: params(g, a),
        seed: None,
        failure: None,
    })
}

fn chain_eofalpha(g: &GlobalArgs, a: &ChainEofalphaArgs) -> Result<Produced, CliError> {
    expect_model(g, &[Model::Chain], Model::Chain, false)?;
    let cfg = a.chain.config()?;
    usage(
        !a.times.is_empty() && a.times.iter().all(|&t| t > 0.0 && t.is_finite()),
        || "times must be positive".into(),
    )?;
    let alphas = a.grid.values()?;
    let ops = chain_build(cfg)?;
    let jobs: Vec<(f64, f64)> = alphas
        .iter()
        .flat_map(|&al| a.times.iter().map(move |&t| (al, t)))
        .collect();
    let values: Vec<Extended> = jobs
        .par_iter()
        .map(|&(al, t)| chain_et(&ops, t, al).map(|e| scale_ext(e, 1.0 / t)))
        .collect::<entroflux::Result<_>>()?;
    let [tl, tr] = cfg.temperatures();
    let mut header = vec!["alpha".to_string()];
    header.extend(a.times.iter().map(|t| format!("e_t/t@{t}")));
    header.push("e_closed".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = Table::new(&header);
    for (i, &al) in alphas.iter().enumerate() {
        let row = values[i * a.times.len()..(i + 1) * a.times.len()]
            .iter()
            .map(|v| ext(*v));
        table.row(
            std::iter::once(num(al))
                .chain(row)
                .chain(std::iter::once(ext(chain_e_closed(tl, tr, al)))),
        );
    }
    Ok(Produced {
        bytes: table.into_bytes(),
        params: params(g, a),
        seed: None,
        failure: None,
    })
}

fn scale_ext(e: Extended, c: f64) -> Extended {
    match e {
        Extended::Finite(x) => Extended::Finite(x * c),
        other => other,
    }
}

/// `I_X(s, −s)` through the `θ` parametrization, `s = κ sinh θ / β₀`.
fn chain_rate_cmd(g: &GlobalArgs, a: &ChainRateArgs) -> Result<Produced, CliError> {
    expect_model(g, &[Model::Chain], Model::Chain, false)?;
    usage(a.beta_l > 0.0 && a.beta_r > 0.0, || {
        "inverse temperatures must be positive".into()
    })?;
    let s_grid = linspace(a.s_min, a.s_max, a.points)?;
    let beta = a.beta_l;
    let forced = [0.0, beta - a.beta_r];
    let rate_at = |x: [f64; 2], s: f64| {
        let b0 = beta - 0.5 * (x[0] + x[1]);
        chain_rate(beta, x, (s * b0 / kappa()).asinh()).rate
    };
    let mut table = Table::new(&["s", "rate", "rate_eq"]);
    for s in s_grid {
        table.row([num(s), num(rate_at(forced, s)), num(rate_at([0.0, 0.0], s))]);
    }
    Ok(Produced {
        bytes: table.into_bytes(),
        params: params(g, a),
        seed: None,
        failure: None,
    })
}

fn qsys_verify(g: &GlobalArgs, a: &QsysVerifyArgs) -> Result<Produced, CliError> {
    expect_model(g, &[Model::QubitToy], Model::QubitToy, false)?;
    usage((1..=200).contains(&a.instances), || {
        "instances must be in 1..=200".into()
    })?;
    let report = verify::run_suite(g.seed, a.instances)?;
    let failed: Vec<&str> = report
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.as_str())
        .collect();
    let failure = (!failed.is_empty()).then(|| failed.join(", "));
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    Ok(Produced {
        bytes: text.into_bytes(),
        params: params(g, a),
        seed: Some(g.seed),
        failure,
    })
}

/// The built-in two-lead instance: one site between leads at equal temperature and bias 2.
fn ebb2_document() -> ModelDocument {
    ModelDocument::from_json(
        r#"{"sample": {"sites": 1, "occupation": 0.5},
            "leads": [{"beta": 1.0, "mu": 0.0, "M": 300}, {"beta": 1.0, "mu": 2.0, "M": 300}]}"#,
    )
    .expect("built-in document")
}

fn alpha_curve(grid: &AlphaGridArgs, f: impl Fn(f64) -> entroflux::Result<f64> + Sync) -> Result<Vec<u8>, CliError> {
    let alphas = linspace(grid.alpha_min, grid.alpha_max, grid.points)?;
    let values: Vec<Option<f64>> = alphas
        .par_iter()
        .map(|&al| match f(al) {
            Ok(v) => Ok(Some(v)),
            Err(Error::DomainError(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<entroflux::Result<_>>()?;
    let mut table = Table::new(&["alpha", "value", "in_domain"]);
    for (al, v) in alphas.iter().zip(values) {
        match v {
            Some(v) => table.row([num(*al), num(v), "1".into()]),
            None => table.row([num(*al), num(f64::INFINITY), "0".into()]),
        }
    }
    Ok(table.into_bytes())
}

fn ebb_e2plus_cmd(g: &GlobalArgs, a: &AlphaGridArgs) -> Result<Produced, CliError> {
    expect_model(g, &[Model::Ebb2], Model::Ebb2, true)?;
    let doc = match &g.model_file {
        Some(p) => load_document(p)?,
        None => ebb2_document(),
    };
    let spec = doc.ebb_spec().map_err(|e| CliError::Usage(e.to_string()))?;
    let leads: Vec<LeadSpec> = spec.leads.clone();
    let s: ScatteringData = spec.scattering();
    let bytes = alpha_curve(a, |al| ebb_e2plus(&leads, &s, al))?;
    Ok(Produced {
        bytes,
        params: serde_json::json!({ "global": g, "command": a, "document": doc }),
        seed: None,
        failure: None,
    })
}

fn xy_eplus_cmd(g: &GlobalArgs, a: &XyArgs) -> Result<Produced, CliError> {
    expect_model(g, &[Model::Xy], Model::Xy, false)?;
    usage(a.beta_l > 0.0 && a.beta_r > 0.0, || {
        "inverse temperatures must be positive".into()
    })?;
    usage(a.j != 0.0 && a.j.is_finite() && a.lambda.is_finite(), || {
        "need a finite nonzero J".into()
    })?;
    usage(a.p >= 1.0, || format!("need p >= 1, got {}", a.p))?;
    let bytes = alpha_curve(&a.grid, |al| xy_eplus(a.beta_l, a.beta_r, a.j, a.lambda, al, a.p))?;
    Ok(Produced {
        bytes,
        params: params(g, a),
        seed: None,
        failure: None,
    })
}

fn fcs(g: &GlobalArgs, a: &FcsArgs) -> Result<Produced, CliError> {
    let model = expect_model(g, &[Model::QubitToy, Model::Ebb2], Model::QubitToy, true)?;
    usage(a.t.is_finite(), || "time must be finite".into())?;
    let measure: AtomicMeasure = if model == Model::QubitToy && g.model_file.is_none() {
        usage(!a.betas.is_empty() && a.betas.len() == a.mus.len(), || {
            "need one --mus entry per --betas entry".into()
        })?;
        usage(a.betas.len() <= 3, || "at most three reservoirs".into())?;
        usage(a.betas.iter().all(|&b| b > 0.0), || {
            "inverse temperatures must be positive".into()
        })?;
        let spec = OpenSystemSpec::qubit_toy(&a.betas, &a.mus, a.lambda)?;
        let open = build_open_system(&spec)?;
        fcs_spectral_measure(&open.system, a.t)?
    } else {
        let doc = match &g.model_file {
            Some(p) => load_document(p)?,
            None => {
                return Err(CliError::Usage(
                    "the ebb2 reservoirs are too large for many-body counting; pass --model-file".into(),
                ))
            }
        };
        let spec = doc.ebb_spec().map_err(|e| CliError::Usage(e.to_string()))?;
        let dim = spec.sample_h.dim() + spec.leads.len() * spec.sites;
        usage(dim <= MAX_FOCK_DIM, || {
            format!("one-particle dimension {dim} exceeds {MAX_FOCK_DIM}")
        })?;
        let m = ebb_build(&spec)?;
        fcs_spectral_measure(&fock_system(&m.model)?, a.t)?
    };
    let mut bytes = Vec::new();
    measure.write_csv(&mut bytes).expect("in-memory write");
    Ok(Produced {
        bytes,
        params: params(g, a),
        seed: None,
        failure: None,
    })
}
