//! Run configuration: the differential, the phase, integration and chart
//! parameters, an optional local system and the requested outputs.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use specnet::groupoid::GroupoidChart;
use specnet::nonabelianize::LocalSystemCochain;
use specnet::qdiff::RationalQd;
use specnet::trajectory::IntegrationParams;

use crate::exit::{CliError, Exit};

/// Full run configuration.  Unknown keys are rejected everywhere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub phi: PhiSpec,
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub integration: IntegrationParams<f64>,
    #[serde(default)]
    pub groupoid: GroupoidSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_system: Option<LocalSystemSpec>,
    #[serde(default)]
    pub requests: Requests,
    #[serde(default)]
    pub outputs: Outputs,
}

/// `φ = P(z)/Q(z) dz²`, coefficients in ascending degree as `[re, im]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiSpec {
    pub numerator: Vec<[f64; 2]>,
    #[serde(default = "unit_polynomial")]
    pub denominator: Vec<[f64; 2]>,
}

fn unit_polynomial() -> Vec<[f64; 2]> {
    vec![[1.0, 0.0]]
}

/// Chart parameters: truncation length `T` and vertical offset `eta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GroupoidSpec {
    #[serde(rename = "T")]
    pub truncation: f64,
    pub eta: f64,
}

impl Default for GroupoidSpec {
    fn default() -> Self {
        GroupoidSpec { truncation: 0.5, eta: 0.05 }
    }
}

/// Local system: a named preset or explicit values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LocalSystemSpec {
    Preset(PresetSpec),
    Values(LocalSystemCochain<Complex64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// All values one except a −1 on one connector lift per zero.
    Trivial,
    /// Seeded random values made almost-flat.
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetSpec {
    pub preset: Preset,
    #[serde(default)]
    pub seed: u64,
}

impl LocalSystemSpec {
    pub fn realize(&self, chart: &GroupoidChart<f64>) -> LocalSystemCochain<Complex64> {
        match self {
            LocalSystemSpec::Preset(PresetSpec { preset: Preset::Trivial, .. }) => LocalSystemCochain::trivial_with_sign(chart),
            LocalSystemSpec::Preset(PresetSpec { preset: Preset::Random, seed }) => {
                LocalSystemCochain::random(chart, &mut ChaCha8Rng::seed_from_u64(*seed))
            }
            LocalSystemSpec::Values(v) => v.clone(),
        }
    }
}

/// Words of arc ids for which transports and monodromies are reported.  A
/// trailing `~` reverses an arc; `@hex<z>` expands to the hexagon around
/// zero `z` and `@outer` to the loop around all zeros.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Requests {
    pub transports: Vec<Vec<String>>,
    pub monodromies: Vec<Vec<String>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Outputs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub json_path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svg_path: Option<PathBuf>,
}

impl RunConfig {
    /// A configuration for `φ = P(z) dz²` with all defaults.
    pub fn polynomial(numerator: &[[f64; 2]]) -> Self {
        RunConfig {
            phi: PhiSpec { numerator: numerator.to_vec(), denominator: unit_polynomial() },
            theta: 0.0,
            integration: IntegrationParams::default(),
            groupoid: GroupoidSpec::default(),
            local_system: None,
            requests: Requests::default(),
            outputs: Outputs::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::new(Exit::Parse, format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::new(Exit::Io, format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn differential(&self) -> Result<RationalQd<f64>, CliError> {
        Ok(RationalQd::from_pairs(&self.phi.numerator, &self.phi.denominator)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::parse(r#"{"phi": {"numerator": [[0, 0], [1, 0]]}}"#).unwrap();
        assert_eq!(c.phi.denominator, vec![[1.0, 0.0]]);
        assert_eq!(c.groupoid, GroupoidSpec { truncation: 0.5, eta: 0.05 });
        assert_eq!(c.integration.rel_tol, 1e-9);
        assert_eq!(c.integration.seed_offset, 1e-3);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse(r#"{"phi": {"numerator": [[1, 0]]}, "colour": 1}"#).is_err());
        assert!(RunConfig::parse(r#"{"phi": {"numerator": [[1, 0]]}, "groupoid": {"T": 1, "tau": 2}}"#).is_err());
        assert!(RunConfig::parse(r#"{"phi": {"numerator": [[1, 0]]}, "local_system": {"preset": "random", "sed": 2}}"#).is_err());
    }

    #[test]
    fn local_system_forms() {
        let c = RunConfig::parse(r#"{"phi": {"numerator": [[1, 0]]}, "local_system": {"preset": "random", "seed": 4}}"#).unwrap();
        assert_eq!(c.local_system, Some(LocalSystemSpec::Preset(PresetSpec { preset: Preset::Random, seed: 4 })));
        let c = RunConfig::parse(r#"{"phi": {"numerator": [[1, 0]]}, "local_system": {"values": {"v0:+": [1, 0]}}}"#).unwrap();
        assert!(matches!(c.local_system, Some(LocalSystemSpec::Values(_))));
    }
}
