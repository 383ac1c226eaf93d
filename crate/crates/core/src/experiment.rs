//! Reference and sample scans for one conversion branch, from crystal to
//! labelled interferograms.
//!
//! Model rates are divided by the branch pedestal before the camera
//! calibration is applied, so one calibration scalar serves both branches.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::Result;
use crate::instrument::{acquire_scan, blocked_idler_scan, stream_tag, NoiseModel, RawCounts, ScanConfig};
use crate::interferogram::Interferogram;
use crate::multimode::{ApertureModel, InterferogramModel, QuadratureSpec, SampleObject};
use crate::phasematch::{Conversion, Crystal};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scans {
    pub reference: Interferogram,
    pub reference_raw: RawCounts,
    pub sample: Option<Interferogram>,
    pub sample_raw: Option<RawCounts>,
}

/// Builds the multimode model of one branch, converged on the scan grid.
pub fn branch_model(
    crystal: &Crystal,
    conversion: Conversion,
    aperture: &ApertureModel,
    quadrature: &QuadratureSpec,
    scan: &ScanConfig,
    object: Option<&SampleObject>,
) -> Result<InterferogramModel> {
    let mut probes: Vec<f64> = scan.positions().iter().map(|&x| scan.delta_l(x)).collect();
    if let Some(o) = object {
        let shifted: Vec<f64> = probes.iter().map(|l| l + o.path_offset()).collect();
        probes.extend(shifted);
    }
    InterferogramModel::build(crystal, conversion, aperture, quadrature, &probes)
}

#[allow(clippy::too_many_arguments)]
fn metadata(
    conversion: Conversion,
    role: &str,
    crystal: &Crystal,
    model: &InterferogramModel,
    aperture: &ApertureModel,
    object: Option<&SampleObject>,
    blocked: bool,
    scan_meta: &Value,
) -> Value {
    json!({
        "label": conversion,
        "role": role,
        "blocked": blocked,
        "crystal": crystal.params(),
        "aperture": aperture,
        "quadrature": model.quadrature,
        "quadrature_achieved": model.achieved_tolerance,
        "object": object,
        "scan": scan_meta["scan"],
        "noise": scan_meta["noise"],
        "stream_tag": scan_meta["stream_tag"],
    })
}

/// Reference scan and, with an object, a sample scan. With `blocked` both
/// carry only the pedestal.
pub fn simulate_branch(
    crystal: &Crystal,
    model: &InterferogramModel,
    aperture: &ApertureModel,
    scan: &ScanConfig,
    noise: &NoiseModel,
    object: Option<&SampleObject>,
    blocked: bool,
) -> Result<Scans> {
    let conversion = model.conversion;
    let pedestal = model.pedestal();
    let norm = if pedestal > 0.0 { 1.0 / pedestal } else { 0.0 };
    let run = |role: &str, obj: Option<&SampleObject>| -> Result<(Interferogram, RawCounts)> {
        let tag = stream_tag(&format!("{conversion}/{role}"));
        let (ig, raw) = if blocked {
            blocked_idler_scan(if pedestal > 0.0 { 1.0 } else { 0.0 }, scan, noise, tag)?
        } else {
            acquire_scan(|l| norm * model.rate(l, obj), scan, noise, tag)?
        };
        let meta = metadata(conversion, role, crystal, model, aperture, obj, blocked, &ig.metadata);
        Ok((ig.with_metadata(meta), raw))
    };
    let (reference, reference_raw) = run("reference", None)?;
    let (sample, sample_raw) = match object {
        Some(o) => {
            let (s, r) = run("sample", Some(o))?;
            (Some(s), Some(r))
        }
        None => (None, None),
    };
    Ok(Scans {
        reference,
        reference_raw,
        sample,
        sample_raw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_and_noiseless_normalization() {
        let c = Crystal::mgo_lithium_niobate();
        let scan = ScanConfig { repeats: 1, ..Default::default() };
        let ap = ApertureModel::default();
        let m = branch_model(&c, Conversion::Stokes, &ap, &QuadratureSpec::default(), &scan, None).unwrap();
        let nz = NoiseModel::noiseless();
        let s = simulate_branch(&c, &m, &ap, &scan, &nz, None, false).unwrap();
        assert_eq!(s.reference.label(), "stokes");
        assert!(s.sample.is_none());
        let gain = nz.calibration * nz.quantum_efficiency;
        let far = s.reference.rate.last().unwrap() / gain;
        assert!((far - 1.0).abs() < 1e-3, "{far}");
        let b = simulate_branch(&c, &m, &ap, &scan, &nz, None, true).unwrap();
        assert!(b.reference.rate.iter().all(|&r| (r - gain).abs() < 1e-12));
    }
}
