//! Run configuration: strict JSON with unit-suffixed keys.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use thzqs_core::instrument::{GainCurve, NoiseModel, ScanConfig};
use thzqs_core::multimode::{ApertureModel, QuadratureSpec, SampleObject};
use thzqs_core::phasematch::{Conversion, Crystal, CrystalParams, Direction};
use thzqs_core::DispersionModel;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    #[serde(rename = "idler_min_THz")]
    pub idler_min_thz: f64,
    #[serde(rename = "idler_max_THz")]
    pub idler_max_thz: f64,
    pub idler_points: usize,
    /// Signal angles span `[−theta_s_max_rad, theta_s_max_rad]`.
    pub theta_s_max_rad: f64,
    /// Odd, so that the collinear row is on the grid.
    pub theta_s_points: usize,
    pub directions: Vec<Direction>,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            idler_min_thz: 0.2,
            idler_max_thz: 2.0,
            idler_points: 361,
            theta_s_max_rad: 2e-3,
            theta_s_points: 101,
            directions: vec![Direction::Forward],
        }
    }
}

impl SpectrumConfig {
    fn validate(&self) -> Result<(), CliError> {
        if !(self.idler_min_thz > 0.0 && self.idler_max_thz > self.idler_min_thz) {
            return Err(invalid("spectrum: need 0 < idler_min_THz < idler_max_THz"));
        }
        if self.idler_points < 2 || self.theta_s_points.is_multiple_of(2) || self.theta_s_points < 3 {
            return Err(invalid("spectrum: idler_points ≥ 2 and odd theta_s_points ≥ 3 required"));
        }
        if !(self.theta_s_max_rad > 0.0) || self.directions.is_empty() {
            return Err(invalid("spectrum: theta_s_max_rad must be positive and directions non-empty"));
        }
        Ok(())
    }

    pub fn idler_hz(&self) -> Vec<f64> {
        let n = self.idler_points;
        (0..n)
            .map(|k| 1e12 * (self.idler_min_thz + (self.idler_max_thz - self.idler_min_thz) * k as f64 / (n - 1) as f64))
            .collect()
    }

    pub fn theta_s(&self) -> Vec<f64> {
        let half = (self.theta_s_points / 2) as i64;
        (-half..=half).map(|k| self.theta_s_max_rad * k as f64 / half as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub crystal: CrystalParams,
    /// Dispersion table; the bundled MgO:LiNbO₃ table when absent.
    pub dispersion_file: Option<PathBuf>,
    pub branches: Vec<Conversion>,
    pub aperture: ApertureModel,
    pub quadrature: QuadratureSpec,
    pub scan: ScanConfig,
    pub noise: NoiseModel,
    pub object: Option<SampleObject>,
    pub spectrum: SpectrumConfig,
    pub gain: GainCurve,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            crystal: CrystalParams::default(),
            dispersion_file: None,
            branches: vec![Conversion::Stokes, Conversion::AntiStokes],
            aperture: ApertureModel::default(),
            quadrature: QuadratureSpec::default(),
            scan: ScanConfig::default(),
            noise: NoiseModel::default(),
            object: None,
            spectrum: SpectrumConfig::default(),
            gain: GainCurve::default(),
            seed: 0,
        }
    }
}

fn invalid(msg: &str) -> CliError {
    CliError::Validation(msg.to_string())
}

impl RunConfig {
    /// Parses and reports the key path of the first offending entry.
    pub fn parse(text: &str, source_name: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            CliError::Validation(format!(
                "{source_name}: line {}, column {}: at `{path}`: {inner}",
                inner.line(),
                inner.column()
            ))
        })
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?;
                Self::parse(&text, &p.display().to_string())
            }
        }
    }

    /// Checks every section and builds the crystal.
    pub fn validate(&self) -> Result<Crystal, CliError> {
        let dispersion = match &self.dispersion_file {
            Some(p) => DispersionModel::load(p).map_err(|e| CliError::Validation(format!("dispersion_file: {e}")))?,
            None => DispersionModel::mgo_lithium_niobate(),
        };
        let crystal = Crystal::new(self.crystal, dispersion).map_err(|e| CliError::Validation(format!("crystal: {e}")))?;
        if self.branches.is_empty() {
            return Err(invalid("branches must not be empty"));
        }
        self.aperture.validate()?;
        self.quadrature.validate()?;
        self.scan.validate()?;
        self.noise.validate()?;
        if let Some(o) = &self.object {
            o.validate()?;
        }
        self.spectrum.validate()?;
        self.gain.validate()?;
        Ok(crystal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_default() {
        assert_eq!(RunConfig::parse("{}", "t").unwrap(), RunConfig::default());
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn unknown_key_reports_path() {
        let err = RunConfig::parse(r#"{"scan": {"step": 1e-5}}"#, "t").unwrap_err();
        match err {
            CliError::Validation(m) => assert!(m.contains("scan"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unit_suffixed_keys_accepted() {
        let c = RunConfig::parse(
            r#"{"crystal": {"temperature_K": 77.0}, "noise": {"background_counts_per_s": 100.0},
                "spectrum": {"idler_max_THz": 1.5}, "object": {"refractive_index": 1.42, "thickness_m": 0.005}}"#,
            "t",
        )
        .unwrap();
        assert_eq!(c.crystal.temperature_k, 77.0);
        assert_eq!(c.noise.background_rate, 100.0);
        c.validate().unwrap();
    }

    #[test]
    fn seed_only_at_top_level() {
        assert!(RunConfig::parse(r#"{"noise": {"seed": 3}}"#, "t").is_err());
    }

    #[test]
    fn empty_power_list_invalid() {
        let c = RunConfig::parse(r#"{"gain": {"powers_w": []}}"#, "t").unwrap();
        assert!(matches!(c.validate(), Err(CliError::Validation(_))));
    }

    #[test]
    fn theta_grid_contains_zero() {
        let s = SpectrumConfig::default();
        assert_eq!(s.theta_s()[s.theta_s_points / 2], 0.0);
    }
}
