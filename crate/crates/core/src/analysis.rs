//! Measurement analysis: FFT peak, Gaussian-envelope sinusoid fit and the
//! thickness inversion from the envelope shift.
//!
//! Fits work in stage coordinates. The model is
//! `f(x) = y₀ + A sin(v x + φ) exp(−(x − x_c)²/2ω²)` with the parameter
//! order `[y₀, A, v, φ, x_c, ω]`. Internally the phase is referred to the
//! scan midpoint, which keeps `v` and `φ` nearly uncorrelated.

use nalgebra::DMatrix;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::constants::SPEED_OF_LIGHT;
use crate::error::{Error, Result};
use crate::interferogram::Interferogram;
use crate::lm::{self, Problem};

use std::f64::consts::{PI, TAU};

pub const Y0: usize = 0;
pub const AMPLITUDE: usize = 1;
pub const FREQUENCY: usize = 2;
pub const PHASE: usize = 3;
pub const CENTER: usize = 4;
pub const WIDTH: usize = 5;
pub const PARAM_NAMES: [&str; 6] = ["y0", "A", "v", "phi", "x_c", "omega"];

/// Minimum trace length for spectral analysis.
pub const MIN_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    None,
    #[default]
    Hann,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FftPeak {
    /// Fringe frequency in cycles per meter of idler path.
    pub cycles_per_m: f64,
    /// Equivalent idler frequency `c × cycles_per_m` (Hz).
    pub frequency_hz: f64,
    pub amplitude: f64,
    /// Median spectral magnitude.
    pub floor: f64,
    pub significance: f64,
}

struct Spectrum {
    magnitude: Vec<f64>,
    /// Cycles per meter per bin.
    resolution: f64,
    floor: f64,
}

fn spectrum(ig: &Interferogram, window: Window) -> Result<Spectrum> {
    let n = ig.len();
    if n < MIN_POINTS {
        return Err(Error::TooShort { len: n, min: MIN_POINTS });
    }
    let dl = Interferogram::uniform_step(&ig.delta_l_m)?.abs();
    let mean = ig.rate.iter().sum::<f64>() / n as f64;
    let nfft = 4 * n.next_power_of_two();
    let mut buf: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); nfft];
    for (k, &y) in ig.rate.iter().enumerate() {
        let w = match window {
            Window::None => 1.0,
            Window::Hann => 0.5 - 0.5 * (TAU * k as f64 / (n - 1) as f64).cos(),
        };
        buf[k] = Complex::new((y - mean) * w, 0.0);
    }
    FftPlanner::new().plan_fft_forward(nfft).process(&mut buf);
    let magnitude: Vec<f64> = buf[..=nfft / 2].iter().map(|c| c.norm()).collect();
    let mut sorted = magnitude[1..].to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Spectrum {
        magnitude,
        resolution: 1.0 / (nfft as f64 * dl),
        floor: median_sorted(&sorted),
    })
}

fn ratio(amplitude: f64, floor: f64) -> f64 {
    if floor > 0.0 {
        amplitude / floor
    } else if amplitude == 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

/// Dominant fringe frequency of a trace sampled on a uniform `Δl_i` grid,
/// refined by a parabola through the three bins around the maximum.
pub fn fft_peak(ig: &Interferogram, window: Window) -> Result<FftPeak> {
    let s = spectrum(ig, window)?;
    let m = &s.magnitude;
    let k = (1..m.len() - 1).max_by(|&a, &b| m[a].total_cmp(&m[b])).unwrap_or(1);
    let (a, b, c) = (m[k - 1], m[k], m[k + 1]);
    let denom = a - 2.0 * b + c;
    let delta = if denom != 0.0 { (0.5 * (a - c) / denom).clamp(-0.5, 0.5) } else { 0.0 };
    let amplitude = b - 0.25 * (a - c) * delta;
    let cycles = (k as f64 + delta) * s.resolution;
    Ok(FftPeak {
        cycles_per_m: cycles,
        frequency_hz: cycles * SPEED_OF_LIGHT,
        amplitude,
        floor: s.floor,
        significance: ratio(amplitude, s.floor),
    })
}

/// Spectral magnitude over the floor at a given equivalent idler frequency,
/// taking the largest bin within one resolution cell.
pub fn fft_significance_at(ig: &Interferogram, window: Window, frequency_hz: f64) -> Result<f64> {
    let s = spectrum(ig, window)?;
    let centre = frequency_hz / SPEED_OF_LIGHT / s.resolution;
    let lo = (centre.floor() as usize).saturating_sub(1).max(1);
    let hi = ((centre.ceil() as usize) + 1).min(s.magnitude.len() - 1);
    let amp = s.magnitude[lo..=hi].iter().cloned().fold(0.0, f64::max);
    Ok(ratio(amp, s.floor))
}

/// Model value at stage position `x`.
pub fn model(p: &[f64; 6], x: f64) -> f64 {
    let u = x - p[CENTER];
    p[Y0] + p[AMPLITUDE] * (p[FREQUENCY] * x + p[PHASE]).sin() * (-u * u / (2.0 * p[WIDTH] * p[WIDTH])).exp()
}

/// Analytic gradient of [`model`] with respect to the parameters.
pub fn model_gradient(p: &[f64; 6], x: f64) -> [f64; 6] {
    let u = x - p[CENTER];
    let w = p[WIDTH];
    let g = (-u * u / (2.0 * w * w)).exp();
    let arg = p[FREQUENCY] * x + p[PHASE];
    let (s, c) = arg.sin_cos();
    let a = p[AMPLITUDE];
    [1.0, s * g, a * c * x * g, a * c * g, a * s * g * u / (w * w), a * s * g * u * u / (w * w * w)]
}

/// Initial values and hold flags for the fit. Unset values come from
/// [`initialize_fit`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FitOverrides {
    pub initial: [Option<f64>; 6],
    pub hold: [bool; 6],
}

impl FitOverrides {
    /// Holds the given parameters at the given values.
    pub fn held(values: &[(usize, f64)]) -> Self {
        let mut o = Self::default();
        for &(k, v) in values {
            o.initial[k] = Some(v);
            o.hold[k] = true;
        }
        o
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialGuess {
    pub params: [f64; 6],
    pub fft: FftPeak,
    /// FFT significance below 3.
    pub low_visibility: bool,
}

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    median_sorted(&s)
}

fn quantile(v: &[f64], q: f64) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let pos = q * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    s[lo] + (s[hi] - s[lo]) * (pos - lo as f64)
}

fn moving_average(v: &[f64], width: usize) -> Vec<f64> {
    let half = width / 2;
    let mut prefix = vec![0.0; v.len() + 1];
    for (k, &x) in v.iter().enumerate() {
        prefix[k + 1] = prefix[k] + x;
    }
    (0..v.len())
        .map(|k| {
            let lo = k.saturating_sub(half);
            let hi = (k + half + 1).min(v.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

fn wrap_phase(phi: f64) -> f64 {
    phi.rem_euclid(TAU)
}

/// Fringe-frequency, envelope and phase starting values from the data.
pub fn initialize_fit(ig: &Interferogram) -> Result<InitialGuess> {
    let fft = fft_peak(ig, Window::Hann)?;
    let x = &ig.position_m;
    let dx = Interferogram::uniform_step(x)?;
    let y0 = median(&ig.rate);
    let v = TAU * ig.path_per_stage()?.abs() * fft.cycles_per_m;

    let period = ((TAU / v / dx.abs()).round() as usize).max(1);
    let squared: Vec<f64> = ig.rate.iter().map(|y| (y - y0).powi(2)).collect();
    let smooth = moving_average(&squared, period);
    let floor = quantile(&smooth, 0.1);
    let profile: Vec<f64> = smooth.iter().map(|s| (s - floor).max(0.0)).collect();
    let mass: f64 = profile.iter().sum();
    let (xc, width, amplitude) = if mass > 0.0 {
        let xc = profile.iter().zip(x).map(|(p, x)| p * x).sum::<f64>() / mass;
        let var = profile.iter().zip(x).map(|(p, x)| p * (x - xc).powi(2)).sum::<f64>() / mass;
        let peak = profile.iter().cloned().fold(0.0, f64::max);
        // The squared envelope has rms width ω/√2; sin² averages to ½.
        (xc, (2.0 * var).sqrt().max(dx.abs()), (2.0 * peak).sqrt())
    } else {
        let mid = 0.5 * (x[0] + x[x.len() - 1]);
        (mid, 0.25 * (x[x.len() - 1] - x[0]).abs(), 0.0)
    };

    let mut params = [y0, amplitude, v, 0.0, xc, width];
    let cost = |p: &[f64; 6]| -> f64 { x.iter().zip(&ig.rate).map(|(&x, &y)| (model(p, x) - y).powi(2)).sum() };
    let mut best = f64::INFINITY;
    for k in 0..72 {
        let phi = k as f64 * TAU / 72.0;
        let trial = [y0, amplitude, v, phi, xc, width];
        let c = cost(&trial);
        if c < best {
            best = c;
            params[PHASE] = phi;
        }
    }
    Ok(InitialGuess {
        params,
        low_visibility: fft.significance < 3.0,
        fft,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub label: String,
    /// `[y₀, A, v, φ, x_c, ω]`.
    pub params: [f64; 6],
    pub sigma: [f64; 6],
    pub covariance: [[f64; 6]; 6],
    pub residual_norm: f64,
    pub chi2_reduced: f64,
    pub iterations: usize,
    pub cost_trace: Vec<f64>,
    pub converged: bool,
    pub low_visibility: bool,
    pub held: [bool; 6],
}

impl FitResult {
    pub fn y0(&self) -> f64 {
        self.params[Y0]
    }
    pub fn amplitude(&self) -> f64 {
        self.params[AMPLITUDE]
    }
    pub fn center(&self) -> f64 {
        self.params[CENTER]
    }
    pub fn center_sigma(&self) -> f64 {
        self.sigma[CENTER]
    }
    pub fn width(&self) -> f64 {
        self.params[WIDTH]
    }
    pub fn visibility(&self) -> f64 {
        self.params[AMPLITUDE] / self.params[Y0]
    }
    pub fn evaluate(&self, x: f64) -> f64 {
        model(&self.params, x)
    }
}

/// Weighted residuals in midpoint-referred parameters
/// `[y₀, A, v, φ', x_c, ω]` with `φ' = φ + v x_m`.
struct EnvelopeProblem<'a> {
    x: &'a [f64],
    y: &'a [f64],
    weight: Vec<f64>,
    mid: f64,
}

impl EnvelopeProblem<'_> {
    fn to_internal(&self, p: &[f64; 6]) -> [f64; 6] {
        let mut q = *p;
        q[PHASE] = p[PHASE] + p[FREQUENCY] * self.mid;
        q
    }

    fn to_external(&self, q: &[f64]) -> [f64; 6] {
        let mut p = [0.0; 6];
        p.copy_from_slice(q);
        p[PHASE] = q[PHASE] - q[FREQUENCY] * self.mid;
        p
    }
}

impl Problem for EnvelopeProblem<'_> {
    fn residual_count(&self) -> usize {
        self.x.len()
    }

    fn evaluate(&self, q: &[f64], r: &mut [f64], jac: Option<&mut DMatrix<f64>>) {
        let w2 = q[WIDTH] * q[WIDTH];
        let mut jac = jac;
        for (i, (&x, &y)) in self.x.iter().zip(self.y).enumerate() {
            let t = x - self.mid;
            let u = x - q[CENTER];
            let g = (-u * u / (2.0 * w2)).exp();
            let (s, c) = (q[FREQUENCY] * t + q[PHASE]).sin_cos();
            let a = q[AMPLITUDE];
            let wt = self.weight[i];
            r[i] = wt * (q[Y0] + a * s * g - y);
            if let Some(j) = jac.as_deref_mut() {
                j[(i, Y0)] = wt;
                j[(i, AMPLITUDE)] = wt * s * g;
                j[(i, FREQUENCY)] = wt * a * c * t * g;
                j[(i, PHASE)] = wt * a * c * g;
                j[(i, CENTER)] = wt * a * s * g * u / w2;
                j[(i, WIDTH)] = wt * a * s * g * u * u / (w2 * q[WIDTH]);
            }
        }
    }
}

/// Weighted least-squares fit of the envelope model.
///
/// Weights are `1/σ` when every point carries a positive uncertainty and
/// uniform otherwise. The covariance is `(JᵀJ)⁻¹` of the weighted Jacobian
/// scaled by the reduced χ², with zeros for held parameters.
pub fn fit_envelope(ig: &Interferogram, overrides: &FitOverrides) -> Result<FitResult> {
    let n = ig.len();
    if n < MIN_POINTS {
        return Err(Error::TooShort { len: n, min: MIN_POINTS });
    }
    if overrides.initial[CENTER].is_none() {
        let med = median(&ig.rate);
        let k = (0..n)
            .max_by(|&a, &b| (ig.rate[a] - med).abs().total_cmp(&(ig.rate[b] - med).abs()))
            .unwrap_or(0);
        if k == 0 || k == n - 1 {
            return Err(Error::EnvelopeAtEdge { index: k, len: n });
        }
    }
    let guess = initialize_fit(ig)?;
    let mut start = guess.params;
    for (slot, v) in start.iter_mut().zip(overrides.initial) {
        if let Some(v) = v {
            *slot = v;
        }
    }
    if overrides.initial[PHASE].is_none() && overrides.initial.iter().any(Option::is_some) {
        // Re-run the phase search with the overridden values.
        let cost = |p: &[f64; 6]| -> f64 {
            ig.position_m.iter().zip(&ig.rate).map(|(&x, &y)| (model(p, x) - y).powi(2)).sum()
        };
        let mut best = f64::INFINITY;
        let base = start;
        for k in 0..72 {
            let mut trial = base;
            trial[PHASE] = k as f64 * TAU / 72.0;
            let c = cost(&trial);
            if c < best {
                best = c;
                start[PHASE] = trial[PHASE];
            }
        }
    }

    let weighted = ig.rate_sigma.iter().all(|&s| s > 0.0);
    let weight = if weighted {
        ig.rate_sigma.iter().map(|s| 1.0 / s).collect()
    } else {
        vec![1.0; n]
    };
    let mid = 0.5 * (ig.position_m[0] + ig.position_m[n - 1]);
    let problem = EnvelopeProblem {
        x: &ig.position_m,
        y: &ig.rate,
        weight,
        mid,
    };
    let q0 = problem.to_internal(&start);
    let sol = lm::minimize(&problem, &q0, &overrides.hold, &lm::Options::default())?;

    let free: Vec<usize> = (0..6).filter(|&k| !overrides.hold[k]).collect();
    let dof = (n as f64 - free.len() as f64).max(1.0);
    let chi2_reduced = 2.0 * sol.cost / dof;
    let mut cov_internal = DMatrix::<f64>::zeros(6, 6);
    if !free.is_empty() {
        let sub = DMatrix::from_fn(free.len(), free.len(), |i, j| sol.normal_matrix[(free[i], free[j])]);
        let inv = sub
            .clone()
            .cholesky()
            .map(|c| c.inverse())
            .or_else(|| sub.pseudo_inverse(1e-14).ok())
            .ok_or_else(|| Error::Domain("singular normal matrix".into()))?;
        for (i, &a) in free.iter().enumerate() {
            for (j, &b) in free.iter().enumerate() {
                cov_internal[(a, b)] = inv[(i, j)] * chi2_reduced;
            }
        }
    }

    // External parameters: φ = φ' − v x_m, then sign normalization.
    let mut p = problem.to_external(&sol.params);
    let mut t = DMatrix::<f64>::identity(6, 6);
    t[(PHASE, FREQUENCY)] = -mid;
    let mut sign = [1.0; 6];
    if p[FREQUENCY] < 0.0 {
        p[FREQUENCY] = -p[FREQUENCY];
        p[PHASE] = PI - p[PHASE];
        sign[FREQUENCY] = -1.0;
        sign[PHASE] = -1.0;
    }
    if p[AMPLITUDE] < 0.0 {
        p[AMPLITUDE] = -p[AMPLITUDE];
        p[PHASE] += PI;
        sign[AMPLITUDE] = -1.0;
    }
    if p[WIDTH] < 0.0 {
        p[WIDTH] = -p[WIDTH];
        sign[WIDTH] = -1.0;
    }
    p[PHASE] = wrap_phase(p[PHASE]);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&sign));
    let cov = &d * &t * cov_internal * t.transpose() * &d;

    let mut covariance = [[0.0; 6]; 6];
    let mut sigma = [0.0; 6];
    for i in 0..6 {
        for j in 0..6 {
            covariance[i][j] = 0.5 * (cov[(i, j)] + cov[(j, i)]);
        }
        sigma[i] = covariance[i][i].max(0.0).sqrt();
    }
    let residual_norm = sol.residuals.iter().map(|r| r * r).sum::<f64>().sqrt();
    Ok(FitResult {
        label: ig.label().to_string(),
        params: p,
        sigma,
        covariance,
        residual_norm,
        chi2_reduced,
        iterations: sol.iterations,
        cost_trace: sol.cost_trace,
        converged: true,
        low_visibility: guess.low_visibility,
        held: overrides.hold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThicknessEstimate {
    pub label: String,
    pub thickness_m: f64,
    pub sigma_m: f64,
    pub index: f64,
    pub index_sigma: f64,
    /// Stage-coordinate envelope shift, sample minus reference.
    pub shift_m: f64,
    pub shift_sigma_m: f64,
    pub negative: bool,
}

/// `d = Δx_c/(n − 1)`, with the shift and index uncertainties added in
/// quadrature.
pub fn thickness_from_shift(reference: &FitResult, sample: &FitResult, index: f64, index_sigma: f64) -> Result<ThicknessEstimate> {
    if !reference.label.is_empty() && !sample.label.is_empty() && reference.label != sample.label {
        return Err(Error::BranchMismatch {
            reference: reference.label.clone(),
            sample: sample.label.clone(),
        });
    }
    if !(index > 1.0) || !(index_sigma >= 0.0) {
        return Err(Error::Domain(format!(
            "refractive index must exceed 1 with non-negative uncertainty, got {index} ± {index_sigma}"
        )));
    }
    let shift = sample.center() - reference.center();
    let shift_sigma = reference.center_sigma().hypot(sample.center_sigma());
    let k = index - 1.0;
    let d = shift / k;
    Ok(ThicknessEstimate {
        label: if reference.label.is_empty() { sample.label.clone() } else { reference.label.clone() },
        thickness_m: d,
        sigma_m: (shift_sigma / k).hypot(shift * index_sigma / (k * k)),
        index,
        index_sigma,
        shift_m: shift,
        shift_sigma_m: shift_sigma,
        negative: d < 0.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchReport {
    pub label: String,
    pub fft_reference: FftPeak,
    pub fft_sample: FftPeak,
    pub fit_reference: FitResult,
    pub fit_sample: FitResult,
    pub thickness: ThicknessEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub role: String,
    pub label: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SenseReport {
    pub branches: Vec<BranchReport>,
    /// Inverse-variance weighted over branches.
    pub combined: Option<ThicknessEstimate>,
    pub inputs: Vec<InputDigest>,
}

fn digest(ig: &Interferogram) -> String {
    let hash = Sha256::digest(ig.to_csv().as_bytes());
    hash.iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs FFT, fits and thickness inversion for every branch present in the
/// reference set. Errors are tagged with branch and stage.
pub fn sense_pipeline(reference: &[Interferogram], sample: &[Interferogram], index: f64, index_sigma: f64) -> Result<SenseReport> {
    let mut branches = Vec::new();
    let mut inputs = Vec::new();
    for r in reference {
        let label = r.label().to_string();
        let stage = |stage: &str| {
            let label = label.clone();
            let stage = stage.to_string();
            move |e: Error| Error::Stage {
                branch: if label.is_empty() { "unlabelled trace".into() } else { label },
                stage,
                source: Box::new(e),
            }
        };
        let s = sample.iter().find(|s| s.label() == label).ok_or_else(|| Error::BranchMismatch {
            reference: label.clone(),
            sample: sample.iter().map(|s| s.label()).collect::<Vec<_>>().join(","),
        })?;
        inputs.push(InputDigest { role: "reference".into(), label: label.clone(), sha256: digest(r) });
        inputs.push(InputDigest { role: "sample".into(), label: label.clone(), sha256: digest(s) });
        let fft_reference = fft_peak(r, Window::Hann).map_err(stage("fft reference"))?;
        let fft_sample = fft_peak(s, Window::Hann).map_err(stage("fft sample"))?;
        let fit_reference = fit_envelope(r, &FitOverrides::default()).map_err(stage("fit reference"))?;
        let fit_sample = fit_envelope(s, &FitOverrides::default()).map_err(stage("fit sample"))?;
        let thickness = thickness_from_shift(&fit_reference, &fit_sample, index, index_sigma).map_err(stage("thickness"))?;
        branches.push(BranchReport {
            label,
            fft_reference,
            fft_sample,
            fit_reference,
            fit_sample,
            thickness,
        });
    }
    let combined = combine(&branches, index, index_sigma);
    Ok(SenseReport { branches, combined, inputs })
}

fn combine(branches: &[BranchReport], index: f64, index_sigma: f64) -> Option<ThicknessEstimate> {
    if branches.is_empty() {
        return None;
    }
    let est: Vec<&ThicknessEstimate> = branches.iter().map(|b| &b.thickness).collect();
    let weighted = est.iter().all(|e| e.sigma_m > 0.0);
    let weights: Vec<f64> = est.iter().map(|e| if weighted { e.sigma_m.powi(-2) } else { 1.0 }).collect();
    let total: f64 = weights.iter().sum();
    let mean = |f: &dyn Fn(&ThicknessEstimate) -> f64| est.iter().zip(&weights).map(|(e, w)| w * f(e)).sum::<f64>() / total;
    let d = mean(&|e| e.thickness_m);
    let sigma = if weighted { total.sqrt().recip() } else { 0.0 };
    Some(ThicknessEstimate {
        label: "combined".into(),
        thickness_m: d,
        sigma_m: sigma,
        index,
        index_sigma,
        shift_m: mean(&|e| e.shift_m),
        shift_sigma_m: if weighted { sigma * (index - 1.0) } else { 0.0 },
        negative: d < 0.0,
    })
}

pub const THICKNESS_TABLE_HEADER: &str = "caliper_d_m,stokes_d_m,stokes_sigma_m,antistokes_d_m,antistokes_sigma_m";

/// Table of measured against caliper thickness, one row per plate.
pub fn thickness_table_csv(rows: &[(f64, &SenseReport)]) -> String {
    let mut out = String::from(THICKNESS_TABLE_HEADER);
    out.push('\n');
    for (caliper, report) in rows {
        let cell = |label: &str| {
            report
                .branches
                .iter()
                .find(|b| b.label == label)
                .map(|b| format!("{:e},{:e}", b.thickness.thickness_m, b.thickness.sigma_m))
                .unwrap_or_else(|| ",".into())
        };
        out.push_str(&format!("{caliper:e},{},{}\n", cell("stokes"), cell("antistokes")));
    }
    out
}
