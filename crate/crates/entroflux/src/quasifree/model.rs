use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{cr, CMat, HermitianOperator};

use super::ebb::{tight_binding, EbbSpec};
use super::scattering::LeadSpec;

/// JSON description of a quasi-free model.
///
/// ```json
/// {
///   "sample": {"sites": 3, "occupation": 0.5},
///   "leads": [{"beta": 1.0, "mu": 0.2, "M": 300}, {"beta": 2.0, "mu": 0.0, "M": 300}],
///   "lambda": -0.5
/// }
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub sample: SampleDocument,
    #[serde(default)]
    pub leads: Vec<LeadDocument>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(rename = "J", default, skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<f64>,
}

fn default_lambda() -> f64 {
    -0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleDocument {
    pub sites: usize,
    #[serde(default = "half")]
    pub occupation: f64,
    /// Real symmetric one-particle Hamiltonian; `-Δ/2` with Dirichlet boundary when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<Vec<Vec<f64>>>,
}

fn half() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeadDocument {
    pub beta: f64,
    #[serde(default)]
    pub mu: f64,
    #[serde(rename = "M")]
    pub m: usize,
    /// Sample site the lead is attached to; the first lead defaults to the first site,
    /// all others to the last.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site: Option<usize>,
}

impl ModelDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidModel(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model documents serialize")
    }

    pub fn lead_specs(&self) -> Result<Vec<LeadSpec>> {
        self.leads.iter().map(|l| LeadSpec::new(l.beta, l.mu)).collect()
    }

    /// The finite EBB instance. All leads must have the same length.
    pub fn ebb_spec(&self) -> Result<EbbSpec> {
        let d = self.sample.sites;
        if d == 0 {
            return Err(Error::InvalidModel("sample needs at least one site".into()));
        }
        if self.leads.is_empty() {
            return Err(Error::InvalidModel("an EBB model needs at least one lead".into()));
        }
        let m = self.leads[0].m;
        if self.leads.iter().any(|l| l.m != m) {
            return Err(Error::InvalidModel(
                "all leads must have the same number of sites".into(),
            ));
        }
        let occ = self.sample.occupation;
        if !(occ > 0.0 && occ < 1.0) {
            return Err(Error::NonFaithfulDensity);
        }
        let h = match &self.sample.hamiltonian {
            None => tight_binding(d),
            Some(rows) => {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(Error::DimensionMismatch(format!("sample Hamiltonian must be {d}×{d}")));
                }
                CMat::from_fn(d, d, |i, j| cr(rows[i][j]))
            }
        };
        let chis = self
            .leads
            .iter()
            .enumerate()
            .map(|(j, l)| {
                let site = l.site.unwrap_or(if j == 0 { 0 } else { d - 1 });
                if site >= d {
                    return Err(Error::InvalidModel(format!("lead {j} attached to missing site {site}")));
                }
                let mut v = DVector::zeros(d);
                v[site] = cr(1.0);
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EbbSpec {
            sample_h: HermitianOperator::new(h)?,
            sample_t: HermitianOperator::identity(d).scale(occ),
            leads: self.lead_specs()?,
            sites: m,
            chis,
            lambda: self.lambda,
        })
    }
}
