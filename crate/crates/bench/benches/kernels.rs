use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use thzqs_core::experiment::{branch_model, simulate_branch};
use thzqs_core::{
    fft_peak, fit_envelope, ApertureModel, Conversion, Crystal, FitOverrides, NoiseModel, ProcessBranch, QuadratureSpec,
    SampleObject, ScanConfig, Window,
};

fn plate() -> SampleObject {
    SampleObject {
        refractive_index: 1.42,
        thickness_m: 5e-3,
        fresnel_loss: false,
    }
}

fn kernels(c: &mut Criterion) {
    let crystal = Crystal::mgo_lithium_niobate();
    let aperture = ApertureModel::default();
    let quad = QuadratureSpec::default();
    let scan = ScanConfig::default();
    let noise = NoiseModel::default();
    let object = plate();

    c.bench_function("collinear_root", |b| {
        b.iter(|| crystal.collinear_frequency(black_box(ProcessBranch::STOKES_FORWARD)).unwrap())
    });

    let idler: Vec<f64> = (0..181).map(|k| 0.2e12 + 1e10 * k as f64).collect();
    let theta: Vec<f64> = (-25..=25).map(|k| 4e-5 * k as f64).collect();
    c.bench_function("spectrum_map_181x51", |b| {
        b.iter(|| crystal.spectrum_map(&[ProcessBranch::STOKES_FORWARD], black_box(&idler), &theta).unwrap())
    });

    c.bench_function("interferogram_model_build", |b| {
        b.iter(|| branch_model(&crystal, Conversion::Stokes, &aperture, &quad, &scan, Some(&object)).unwrap())
    });

    let model = branch_model(&crystal, Conversion::Stokes, &aperture, &quad, &scan, Some(&object)).unwrap();
    c.bench_function("simulate_branch_30_repeats", |b| {
        b.iter(|| simulate_branch(&crystal, &model, &aperture, &scan, &noise, Some(&object), false).unwrap())
    });

    let scans = simulate_branch(&crystal, &model, &aperture, &scan, &noise, Some(&object), false).unwrap();
    c.bench_function("fft_peak_hann", |b| b.iter(|| fft_peak(black_box(&scans.reference), Window::Hann).unwrap()));
    c.bench_function("fit_envelope", |b| {
        b.iter(|| fit_envelope(black_box(&scans.reference), &FitOverrides::default()).unwrap())
    });
}

criterion_group!(benches, kernels);
criterion_main!(benches);
