//! The versioned root report and its JSON / CSV encodings.
//!
//! JSON numbers use the shortest representation that parses back to the
//! same `f64`, so a report survives a JSON round trip bit for bit. The CSV
//! encoding carries the same root set with the fixed column order in
//! [`CSV_HEADER`].

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use stargraph::rootfinder::{ComplexRoot, Method, RootFlag};
use stargraph::{SpectralPoint, StarModel};

use crate::{CliError, Result};

pub const SCHEMA_VERSION: &str = "1";

pub const CSV_HEADER: [&str; 11] = [
    "q",
    "beta_re",
    "beta_im",
    "subset",
    "M",
    "n",
    "kappa_re",
    "kappa_im",
    "residual_g",
    "residual_oracle",
    "method",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    Real,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootMethod {
    /// The β-independent lattice `κ = nπ/2`.
    Lattice,
    Contour,
    Branch,
    SpecialP0,
}

impl RootMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            RootMethod::Lattice => "lattice",
            RootMethod::Contour => "contour",
            RootMethod::Branch => "branch",
            RootMethod::SpecialP0 => "special_p0",
        }
    }
}

impl From<Method> for RootMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Contour => RootMethod::Contour,
            Method::Branch => RootMethod::Branch,
            Method::SpecialP0 => RootMethod::SpecialP0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelInfo {
    pub q: usize,
    #[serde(rename = "L")]
    pub length: f64,
    pub alpha_re: f64,
    pub alpha_im: f64,
}

impl ModelInfo {
    pub fn of(model: &StarModel) -> Self {
        Self {
            q: model.q(),
            length: model.length(),
            alpha_re: model.alpha().re,
            alpha_im: model.alpha().im,
        }
    }

    pub fn to_model(&self) -> Result<StarModel> {
        Ok(StarModel::new(
            self.q,
            self.length,
            Complex64::new(self.alpha_re, self.alpha_im),
        )?)
    }

    pub fn beta(&self) -> Complex64 {
        Complex64::new(self.alpha_re, self.alpha_im) * self.length
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RootEntry {
    pub subset: Subset,
    #[serde(rename = "M")]
    pub m: Option<u64>,
    pub n: Option<u64>,
    pub kappa_re: f64,
    pub kappa_im: f64,
    pub energy_re: f64,
    pub energy_im: f64,
    /// Absent for the real lattice, which is not a zero of the reduced function.
    pub residual_g: Option<f64>,
    pub residual_oracle: f64,
    pub method: RootMethod,
    #[serde(default)]
    pub flags: Vec<RootFlag>,
}

impl RootEntry {
    pub fn real(n: u64, point: SpectralPoint, residual_oracle: f64) -> Self {
        Self {
            subset: Subset::Real,
            m: None,
            n: Some(n),
            kappa_re: point.kappa.re,
            kappa_im: point.kappa.im,
            energy_re: point.energy.re,
            energy_im: point.energy.im,
            residual_g: None,
            residual_oracle,
            method: RootMethod::Lattice,
            flags: Vec::new(),
        }
    }

    pub fn complex(model: &StarModel, root: &ComplexRoot) -> Self {
        let energy = model.kappa_to_energy(root.kappa);
        Self {
            subset: Subset::Complex,
            m: root.m,
            n: root.n.map(|n| n as u64),
            kappa_re: root.kappa.re,
            kappa_im: root.kappa.im,
            energy_re: energy.re,
            energy_im: energy.im,
            residual_g: Some(root.residual_g),
            residual_oracle: root.residual_oracle,
            method: root.method.into(),
            flags: root.flags.clone(),
        }
    }

    pub fn kappa(&self) -> Complex64 {
        Complex64::new(self.kappa_re, self.kappa_im)
    }

    fn cmp_key(&self, other: &Self) -> Ordering {
        self.kappa_re
            .total_cmp(&other.kappa_re)
            .then(self.kappa_im.total_cmp(&other.kappa_im))
            .then((self.subset as u8).cmp(&(other.subset as u8)))
            .then(self.m.cmp(&other.m))
            .then(self.n.cmp(&other.n))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RootReport {
    pub schema_version: String,
    pub model: ModelInfo,
    pub roots: Vec<RootEntry>,
    pub diagnostics: Vec<String>,
    pub settings: BTreeMap<String, serde_json::Value>,
}

impl RootReport {
    /// Builds a report with roots in canonical `(Re κ, Im κ)` order.
    pub fn new(
        model: &StarModel,
        mut roots: Vec<RootEntry>,
        diagnostics: Vec<String>,
        settings: BTreeMap<String, serde_json::Value>,
    ) -> Self {
        roots.sort_by(RootEntry::cmp_key);
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            model: ModelInfo::of(model),
            roots,
            diagnostics,
            settings,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Parses and validates a report; rejects unknown schema versions.
    pub fn from_json(text: &str) -> Result<Self> {
        let report: RootReport = serde_json::from_str(text)
            .map_err(|e| CliError::Usage(format!("not a root report: {e}")))?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(CliError::Usage(format!(
                "unsupported schema_version `{}` (expected `{SCHEMA_VERSION}`)",
                report.schema_version
            )));
        }
        Ok(report)
    }

    pub fn to_csv(&self) -> Result<String> {
        let beta = self.model.beta();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).map_err(csv_err)?;
        for r in &self.roots {
            w.write_record([
                self.model.q.to_string(),
                number(beta.re),
                number(beta.im),
                match r.subset {
                    Subset::Real => "real".to_string(),
                    Subset::Complex => "complex".to_string(),
                },
                r.m.map(|m| m.to_string()).unwrap_or_default(),
                r.n.map(|n| n.to_string()).unwrap_or_default(),
                number(r.kappa_re),
                number(r.kappa_im),
                r.residual_g.map(number).unwrap_or_default(),
                number(r.residual_oracle),
                r.method.as_str().to_string(),
            ])
            .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
    }

    pub fn all_certified(&self, oracle_bound: f64, g_bound: f64) -> bool {
        self.roots.iter().all(|r| {
            r.residual_oracle < oracle_bound && r.residual_g.is_none_or(|g| g < g_bound)
        })
    }
}

/// Shortest round-trip decimal form of `x`, the same text JSON output uses.
pub fn number(x: f64) -> String {
    serde_json::to_string(&x).unwrap_or_else(|_| "null".into())
}

pub(crate) fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e.to_string()))
}
