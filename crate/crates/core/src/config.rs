//! Serialisable experiment descriptions. Coefficients are exact rational
//! strings and are converted to `f64` once, when the system is built.

use crate::error::{Error, Result};
use crate::monodromy::MonodromySettings;
use crate::poly::BiPoly;
use crate::ratmat::{parse_rational, to_f64};
use crate::resonance::{Chart, ResonantSystem};
use crate::roots::ParameterPath;
use crate::spectrum::{CellLoop, LatticeConfig};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// One term `coeff * pi1^pi1 * J^j` of `Rt`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TermSpec {
    #[serde(default)]
    pub pi1: u32,
    #[serde(default)]
    pub j: u32,
    pub coeff: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SystemSpec {
    pub m: u32,
    pub n: u32,
    #[serde(default)]
    pub n_prime: u32,
    #[serde(default)]
    pub m_prime: u32,
    #[serde(default)]
    pub tilde_r: Vec<TermSpec>,
    /// Selects the 1:-2 form `R = eps (pi1^2 - J^2)`; `tildeR` must then be empty.
    #[serde(default)]
    pub epsilon: Option<String>,
    #[serde(default)]
    pub small_coefficient: bool,
}

impl SystemSpec {
    pub fn build(&self) -> Result<ResonantSystem> {
        if let Some(e) = &self.epsilon {
            if !self.tilde_r.is_empty() {
                return Err(Error::InvalidInput("system.epsilon and system.tildeR are exclusive".into()));
            }
            if (self.m, self.n) != (1, 2) {
                return Err(Error::InvalidInput("system.epsilon requires m = 1, n = 2".into()));
            }
            let eps = to_f64(parse_rational(e)?);
            let mut s = ResonantSystem::legacy_one_two(eps);
            s.small_coefficient = true;
            return Ok(s);
        }
        let mut terms = Vec::with_capacity(self.tilde_r.len());
        for t in &self.tilde_r {
            terms.push((t.pi1, t.j, to_f64(parse_rational(&t.coeff)?)));
        }
        let mut s = ResonantSystem::new(self.m, self.n, self.n_prime, self.m_prime, BiPoly { terms });
        s.small_coefficient = self.small_coefficient;
        Ok(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ValidateBlock {
    /// `(h, j)` points at which the real oval endpoints are checked to be simple roots.
    #[serde(default)]
    pub samples: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DiscriminantBlock {
    pub j_values: Vec<f64>,
}

impl Default for DiscriminantBlock {
    fn default() -> Self {
        DiscriminantBlock { j_values: (1..=10).flat_map(|k| [-0.05 * k as f64, 0.05 * k as f64]).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RootsTrackBlock {
    pub path: ParameterPath,
    /// Defaults to the chart natural for the sign of `j` at the path start.
    #[serde(default)]
    pub chart: Option<Chart>,
    /// Rows kept in the trajectory table.
    #[serde(default = "default_max_rows")]
    pub max_samples: usize,
}

fn default_max_rows() -> usize {
    400
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PeriodScanBlock {
    pub h_values: Vec<f64>,
    pub j_values: Vec<f64>,
    #[serde(default)]
    pub bezout_k: i64,
    /// Use the full rotation angle instead of its singular part.
    #[serde(default)]
    pub full_theta: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ResidueBlock {
    /// `(h0, j0)` points with `j0 < 0`.
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TransportBlock {
    pub j0: f64,
    pub h0: f64,
    /// Number of counterclockwise half-turns around `h = 0`.
    pub semicircles: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SpectrumBlock {
    pub lattice: LatticeConfig,
    #[serde(rename = "loop")]
    pub cell_loop: CellLoop,
    /// Defaults to `m n`.
    #[serde(default)]
    pub cell_multiplier: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    #[serde(default)]
    pub name: Option<String>,
    pub system: SystemSpec,
    #[serde(default)]
    pub validate: Option<ValidateBlock>,
    #[serde(default)]
    pub discriminant: Option<DiscriminantBlock>,
    #[serde(default)]
    pub roots_track: Option<RootsTrackBlock>,
    #[serde(default)]
    pub period_scan: Option<PeriodScanBlock>,
    #[serde(default)]
    pub residue: Option<ResidueBlock>,
    #[serde(default)]
    pub monodromy: Option<MonodromySettings>,
    #[serde(default)]
    pub transport: Option<TransportBlock>,
    #[serde(default)]
    pub spectrum: Option<SpectrumBlock>,
    /// Output directory; the command line takes precedence.
    #[serde(default)]
    pub output: Option<String>,
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

impl ExperimentConfig {
    pub fn check_version(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!(
                "schemaVersion {} is not supported (expected {})",
                self.schema_version, SCHEMA_VERSION
            )));
        }
        Ok(())
    }

    /// Experiment block by field name, or an error naming the missing block.
    pub fn require<'a, T>(block: &'a Option<T>, name: &str) -> Result<&'a T> {
        block.as_ref().ok_or_else(|| Error::InvalidInput(format!("config has no `{name}` block")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(terms: &[(u32, u32, &str)]) -> SystemSpec {
        SystemSpec {
            m: 1,
            n: 3,
            n_prime: 4,
            m_prime: 1,
            tilde_r: terms.iter().map(|&(a, b, c)| TermSpec { pi1: a, j: b, coeff: c.into() }).collect(),
            epsilon: None,
            small_coefficient: false,
        }
    }

    #[test]
    fn builds_the_one_three_example() {
        assert_eq!(spec(&[(0, 0, "-1")]).build().unwrap(), ResonantSystem::one_three());
    }

    #[test]
    fn rational_coefficients_are_exact_before_conversion() {
        let s = spec(&[(1, 0, "1/3"), (0, 2, "-0.25")]).build().unwrap();
        assert_eq!(s.r.tilde_r.terms, vec![(1, 0, 1.0 / 3.0), (0, 2, -0.25)]);
        assert!(spec(&[(0, 0, "1/0")]).build().is_err());
        assert!(spec(&[(0, 0, "x")]).build().is_err());
    }

    #[test]
    fn legacy_form() {
        let mut s = spec(&[]);
        s.n = 2;
        s.epsilon = Some("1/20".into());
        assert_eq!(s.build().unwrap(), ResonantSystem::legacy_one_two(0.05));
        s.tilde_r = vec![TermSpec { pi1: 0, j: 0, coeff: "1".into() }];
        assert!(s.build().is_err());
    }
}
