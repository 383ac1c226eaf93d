use thzqs_core::analysis::fft_significance_at;
use thzqs_core::experiment::{branch_model, simulate_branch};
use thzqs_core::{
    fit_envelope, sense_pipeline, thickness_from_shift, ApertureModel, Conversion, Crystal, Error, FitOverrides,
    Interferogram, NoiseModel, ProcessBranch, QuadratureSpec, SampleObject, ScanConfig, Window,
};

const PLATE: SampleObject = SampleObject {
    refractive_index: 1.42,
    thickness_m: 5e-3,
    fresnel_loss: false,
};

fn simulate(conversion: Conversion, noise: &NoiseModel, object: Option<&SampleObject>, blocked: bool) -> (Interferogram, Option<Interferogram>) {
    let crystal = Crystal::mgo_lithium_niobate();
    let aperture = ApertureModel::default();
    let scan = ScanConfig::default();
    let model = branch_model(&crystal, conversion, &aperture, &QuadratureSpec::default(), &scan, object).unwrap();
    let scans = simulate_branch(&crystal, &model, &aperture, &scan, noise, object, blocked).unwrap();
    (scans.reference, scans.sample)
}

#[test]
fn written_scan_reads_back_identically() {
    let (ig, _) = simulate(Conversion::Stokes, &NoiseModel::default(), None, false);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.csv");
    ig.write(&path).unwrap();
    let back = Interferogram::read(&path).unwrap();
    assert_eq!(back.position_m, ig.position_m);
    assert_eq!(back.delta_l_m, ig.delta_l_m);
    assert_eq!(back.rate, ig.rate);
    assert_eq!(back.rate_sigma, ig.rate_sigma);
    assert_eq!(back.label(), "stokes");
}

#[test]
fn noiseless_shift_matches_plate_path() {
    for conversion in [Conversion::Stokes, Conversion::AntiStokes] {
        let (reference, sample) = simulate(conversion, &NoiseModel::noiseless(), Some(&PLATE), false);
        let r = fit_envelope(&reference, &FitOverrides::default()).unwrap();
        let s = fit_envelope(&sample.unwrap(), &FitOverrides::default()).unwrap();
        let est = thickness_from_shift(&r, &s, PLATE.refractive_index, 0.0).unwrap();
        assert!((est.shift_m - 0.42 * 5e-3).abs() < 0.01 * 0.42 * 5e-3, "{conversion}: shift {}", est.shift_m);
        assert!((est.thickness_m - 5e-3).abs() < 0.01 * 5e-3, "{conversion}: d {}", est.thickness_m);
    }
}

#[test]
fn blocked_arm_has_no_fringe() {
    let crystal = Crystal::mgo_lithium_niobate();
    let root = crystal.collinear_frequency(ProcessBranch::STOKES_FORWARD).unwrap();
    let (open, _) = simulate(Conversion::Stokes, &NoiseModel::default(), None, false);
    let (blocked, _) = simulate(Conversion::Stokes, &NoiseModel::default(), None, true);
    assert!(fft_significance_at(&open, Window::Hann, root).unwrap() > 10.0);
    assert!(fft_significance_at(&blocked, Window::Hann, root).unwrap() < 3.0);
}

#[test]
fn pipeline_combines_both_branches() {
    let noise = NoiseModel { seed: 5, ..NoiseModel::default() };
    let (rs, ss) = simulate(Conversion::Stokes, &noise, Some(&PLATE), false);
    let (ra, sa) = simulate(Conversion::AntiStokes, &noise, Some(&PLATE), false);
    let report = sense_pipeline(&[rs, ra], &[sa.unwrap(), ss.unwrap()], 1.42, 0.0).unwrap();
    assert_eq!(report.branches.len(), 2);
    assert_eq!(report.inputs.len(), 4);
    let c = report.combined.unwrap();
    let worst = report.branches.iter().map(|b| b.thickness.sigma_m).fold(0.0, f64::max);
    assert!(c.sigma_m <= worst);
    assert!((c.thickness_m - 5e-3).abs() < 5.0 * c.sigma_m, "{} ± {}", c.thickness_m, c.sigma_m);
}

#[test]
fn pipeline_rejects_unmatched_branch() {
    let (rs, _) = simulate(Conversion::Stokes, &NoiseModel::default(), None, false);
    let (ra, _) = simulate(Conversion::AntiStokes, &NoiseModel::default(), None, false);
    let err = sense_pipeline(&[rs], &[ra], 1.42, 0.0).unwrap_err();
    assert!(matches!(err, Error::Stage { .. } | Error::BranchMismatch { .. }), "{err}");
}
