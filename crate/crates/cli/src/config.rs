//! TOML experiment configuration. Every section is optional and every key has
//! a default; unknown keys are rejected.

use hypspec::covering::CoverRegion;
use hypspec::heat::CurvatureParams;
use hypspec::sensor::SensorSet;
use hypspec::spectral::TruncatedCusp;
use hypspec::thickness::ProfileRegion;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub threads: Option<usize>,
    #[serde(default)]
    pub thickness: ThicknessConfig,
    #[serde(default)]
    pub cover: CoverConfig,
    #[serde(default)]
    pub spectral: SpectralConfig,
    #[serde(default)]
    pub extension: ExtensionConfig,
    #[serde(default)]
    pub heat: HeatConfig,
    #[serde(default)]
    pub observability: ObservabilityConfig,
    #[serde(default)]
    pub gaussian: GaussianConfig,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Resolved config as TOML; the hash is taken over this text.
    pub fn resolved(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn hash(&self) -> Result<String, CliError> {
        let digest = Sha256::digest(self.resolved()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub a: f64,
    pub y_top: f64,
    pub n: usize,
    pub k_max: usize,
}

impl DomainConfig {
    pub fn build(&self) -> hypspec::Result<TruncatedCusp> {
        TruncatedCusp::new(self.a, self.y_top, self.n, self.k_max)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThicknessConfig {
    pub sensor: SensorSet,
    pub region: ProfileRegion,
    pub radius: f64,
    pub center_samples: usize,
    pub rel_tol: f64,
    pub adversarial: bool,
}

impl Default for ThicknessConfig {
    fn default() -> Self {
        Self {
            sensor: SensorSet::full(),
            region: ProfileRegion::Cusp { length: 1.0, y_max: hypspec::thickness::DEFAULT_Y_MAX },
            radius: 1.0,
            center_samples: 4096,
            rel_tol: 1e-6,
            adversarial: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoverConfig {
    pub region: CoverRegion,
    pub radius: f64,
    /// Candidate count; 200 per ball volume when absent.
    pub sample_count: Option<usize>,
    pub probes: usize,
}

impl Default for CoverConfig {
    fn default() -> Self {
        Self { region: CoverRegion::Funnel { length: 1.0, d_max: 3.0 }, radius: 1.0, sample_count: None, probes: 10_000 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralConfig {
    pub domain: DomainConfig,
    pub modes: usize,
    pub sensor: SensorSet,
    /// Explicit Λ grid; otherwise `cap_count` evenly spaced caps up to the top mode.
    pub caps: Option<Vec<f64>>,
    pub cap_count: usize,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            domain: DomainConfig { a: 1.0, y_top: 8.0, n: 800, k_max: 8 },
            modes: 30,
            sensor: SensorSet::theta_strip(0.0, 0.5).expect("valid strip"),
            caps: None,
            cap_count: 8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtensionConfig {
    pub domain: DomainConfig,
    pub modes: usize,
    pub cap: f64,
    pub t_max: f64,
    pub t_points: usize,
    pub n_theta: usize,
    pub theta_c: f64,
    pub y_c: f64,
    pub radius: f64,
    pub eta: f64,
    pub trials: usize,
    pub e_radius: Option<f64>,
    pub sensor: SensorSet,
}

impl Default for ExtensionConfig {
    fn default() -> Self {
        Self {
            domain: DomainConfig { a: 1.0, y_top: 8.0, n: 400, k_max: 4 },
            modes: 30,
            cap: 5.0,
            t_max: 1.0,
            t_points: 21,
            n_theta: 32,
            theta_c: 0.0,
            y_c: 2.5,
            radius: 0.5,
            eta: 0.1,
            trials: 20,
            e_radius: None,
            sensor: SensorSet::full(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeatConfig {
    pub curvature: CurvatureParams,
    /// Replace `c1`, `c2` by an envelope fit of the exact ℍ² kernel.
    pub fit_envelope: bool,
    /// Confirm that the full space is `(R, δ)`-thick on ℍ² centres.
    pub certify: bool,
    pub center_samples: usize,
}

impl Default for HeatConfig {
    fn default() -> Self {
        Self { curvature: CurvatureParams::hyperbolic_plane(), fit_envelope: false, certify: true, center_samples: 256 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObservabilityConfig {
    pub domain: DomainConfig,
    pub modes: usize,
    pub sensor: SensorSet,
    pub times: Vec<f64>,
    pub caps: Option<Vec<f64>>,
    pub cap_count: usize,
}

impl Default for ObservabilityConfig {
    fn default() -> Self {
        Self {
            domain: DomainConfig { a: 1.0, y_top: 8.0, n: 400, k_max: 4 },
            modes: 30,
            sensor: SensorSet::theta_strip(0.0, 0.5).expect("valid strip"),
            times: vec![0.1, 1.0],
            caps: None,
            cap_count: 4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaussianConfig {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub c_d: f64,
}

impl Default for GaussianConfig {
    fn default() -> Self {
        let grid = vec![0.25, 0.5, 1.0, 2.0, 4.0];
        Self { alphas: grid.clone(), betas: grid, c_d: hypspec::heat::H2_DOUBLING }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = ExperimentConfig::default();
        let text = c.resolved().unwrap();
        let back = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(back.resolved().unwrap(), text);
        assert_eq!(c.hash().unwrap().len(), 64);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::parse("[thickness]\nradius = 1.0\nbogus = 2\n").is_err());
        assert!(ExperimentConfig::parse("colour = 1\n").is_err());
    }

    #[test]
    fn nested_sensor_parses() {
        let text = r#"
[thickness]
radius = 0.5
sensor = { node = "union", children = [{ node = "theta_strip", lo = 0.0, hi = 0.25 }, { node = "disk", cx = 0.0, cy = 2.0, r = 0.5 }] }
region = { kind = "funnel", length = 1.0, d_max = 3.0 }
"#;
        let c = ExperimentConfig::parse(text).unwrap();
        assert!(c.thickness.sensor.contains(0.1, 5.0));
        assert_eq!(c.thickness.region, ProfileRegion::Funnel { length: 1.0, d_max: 3.0 });
    }
}
