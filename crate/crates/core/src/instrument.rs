//! Synthetic measurements: piezo scan, camera noise, background subtraction
//! and the pump-power linearity check.
//!
//! The idler mirror moves toward the crystal as the stage position `x`
//! grows, so the idler path difference is `Δl_i = 2(x₀ − x)` with `x₀` the
//! stage position of equal arms. A plate in the idler arm therefore moves
//! the envelope to larger `x`.
//!
//! Each repeat draws from its own ChaCha stream derived from the seed, a
//! per-scan tag and the repeat index, so results do not depend on
//! scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::gaussian::{compose_chain, GainParams, ObjectModel, PhaseConfig};
use crate::interferogram::Interferogram;

/// Idler path change for a stage displacement (double pass).
pub fn stage_to_path(x: f64) -> f64 {
    2.0 * x
}

pub fn path_to_stage(delta_l: f64) -> f64 {
    0.5 * delta_l
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    pub step_m: f64,
    pub span_m: f64,
    /// Stage position at which both idler arms are equal.
    pub zero_path_position_m: f64,
    pub exposure_s: f64,
    pub repeats: usize,
    /// Signal ROI size in pixels; the background ROI has the same size.
    pub roi_px: [usize; 2],
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            step_m: 10e-6,
            span_m: 6.4e-3,
            zero_path_position_m: 2.0e-3,
            exposure_s: 0.5,
            repeats: 30,
            roi_px: [25, 10],
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_m > 0.0 && self.span_m > 0.0) {
            return Err(Error::Config("scan: step_m and span_m must be positive".into()));
        }
        let ratio = self.span_m / self.step_m;
        if (ratio - ratio.round()).abs() > 1e-6 * ratio {
            return Err(Error::Config(format!(
                "scan: span_m / step_m = {ratio} is not an integer"
            )));
        }
        if self.repeats == 0 {
            return Err(Error::Config("scan: repeats must be at least 1".into()));
        }
        if !(self.exposure_s > 0.0) || self.roi_px.contains(&0) {
            return Err(Error::Config("scan: exposure_s and roi_px must be positive".into()));
        }
        Ok(())
    }

    pub fn point_count(&self) -> usize {
        (self.span_m / self.step_m).round() as usize + 1
    }

    pub fn roi_pixels(&self) -> usize {
        self.roi_px[0] * self.roi_px[1]
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.point_count()).map(|k| k as f64 * self.step_m).collect()
    }

    pub fn delta_l(&self, x: f64) -> f64 {
        stage_to_path(self.zero_path_position_m - x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    /// Total background in the dark part of the image, dark counts
    /// included (counts/s/pixel).
    #[serde(rename = "background_counts_per_s")]
    pub background_rate: f64,
    /// Dark count part of `background_rate` (counts/s/pixel).
    #[serde(rename = "dark_counts_per_s")]
    pub dark_rate: f64,
    /// Readout noise (electrons rms per pixel and frame).
    pub readout_e: f64,
    /// Relative rms of the pump power, one draw per frame.
    pub laser_rms: f64,
    pub quantum_efficiency: f64,
    /// Signal photons/s/pixel for a unit model rate.
    #[serde(rename = "calibration_photons_per_s")]
    pub calibration: f64,
    /// Poisson statistics of the signal photons themselves.
    pub shot_noise: bool,
    /// Set from the run seed; written to sidecars but not read from config.
    #[serde(skip_deserializing)]
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            background_rate: 160.0,
            dark_rate: 20.0,
            readout_e: 1.0,
            laser_rms: 0.01,
            quantum_efficiency: 0.55,
            calibration: 20.0,
            shot_noise: true,
            seed: 0,
        }
    }
}

impl NoiseModel {
    /// Expected values only.
    pub fn noiseless() -> Self {
        Self {
            background_rate: 0.0,
            dark_rate: 0.0,
            readout_e: 0.0,
            laser_rms: 0.0,
            shot_noise: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("background_counts_per_s", self.background_rate),
            ("dark_counts_per_s", self.dark_rate),
            ("readout_e", self.readout_e),
            ("laser_rms", self.laser_rms),
            ("calibration_photons_per_s", self.calibration),
        ];
        for (name, v) in fields {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("noise.{name} must be non-negative, got {v}")));
            }
        }
        if self.dark_rate > self.background_rate {
            return Err(Error::Config("noise.dark_counts_per_s exceeds noise.background_counts_per_s".into()));
        }
        if !(self.quantum_efficiency > 0.0 && self.quantum_efficiency <= 1.0) {
            return Err(Error::Config("noise.quantum_efficiency must lie in (0, 1]".into()));
        }
        Ok(())
    }

    fn is_noiseless(&self) -> bool {
        !self.shot_noise && self.background_rate == 0.0 && self.readout_e == 0.0 && self.laser_rms == 0.0
    }

    fn rng(&self, tag: u64, stream: u64) -> ChaCha8Rng {
        const SALT: u64 = 0x7468_7a71_735f_7363;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ SALT ^ tag.rotate_left(17));
        rng.set_stream(stream);
        rng
    }
}

/// Stable 64-bit tag for a scan name (FNV-1a), used to decorrelate streams.
pub fn stream_tag(name: &str) -> u64 {
    name.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// One camera frame of an ROI: Poisson photo- and dark electrons, Gaussian
/// readout, rounded and clamped to a non-negative count.
struct Camera {
    noise: NoiseModel,
    pixels: usize,
    exposure: f64,
}

impl Camera {
    /// Expected signal electrons per pixel for a model rate.
    fn signal_mean(&self, rate: f64) -> f64 {
        rate * self.noise.calibration * self.noise.quantum_efficiency * self.exposure
    }

    fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> f64 {
        if mean <= 0.0 {
            0.0
        } else {
            Poisson::new(mean).expect("finite positive mean").sample(rng)
        }
    }

    /// Summed ROI count. Independent per-pixel Poisson terms add up to one
    /// Poisson draw with the summed mean, and per-pixel readout to one
    /// Gaussian with `√pixels` times the width.
    fn frame(&self, rng: &mut ChaCha8Rng, signal_per_px: f64) -> u64 {
        let n = self.pixels as f64;
        let stray = (self.noise.background_rate - self.noise.dark_rate) * self.exposure;
        let dark = self.noise.dark_rate * self.exposure;
        let photo = if self.noise.shot_noise {
            Self::poisson(rng, n * (signal_per_px + stray))
        } else {
            n * signal_per_px + Self::poisson(rng, n * stray)
        };
        let thermal = Self::poisson(rng, n * dark);
        let readout = if self.noise.readout_e > 0.0 {
            Normal::new(0.0, self.noise.readout_e * n.sqrt()).expect("positive width").sample(rng)
        } else {
            0.0
        };
        (photo + thermal + readout).round().max(0.0) as u64
    }

    /// Background-subtracted rate in counts/s/pixel.
    fn per_second(&self, signal: u64, background: u64) -> f64 {
        (signal as f64 - background as f64) / (self.exposure * self.pixels as f64)
    }
}

/// Raw ROI counts per repeat and position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawCounts {
    pub signal: Vec<Vec<u64>>,
    pub background: Vec<Vec<u64>>,
}

impl RawCounts {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("repeat,index,signal_counts,background_counts\n");
        for (r, (s, b)) in self.signal.iter().zip(&self.background).enumerate() {
            for (k, (sv, bv)) in s.iter().zip(b).enumerate() {
                out.push_str(&format!("{r},{k},{sv},{bv}\n"));
            }
        }
        out
    }
}

/// Simulated scan of `source`, a model rate as a function of `Δl_i`.
///
/// Returns the repeat-averaged, background-subtracted rate in counts/s/pixel
/// with its standard error over repeats. For a single repeat the error is
/// the expected shot and readout width of that point.
pub fn acquire_scan<F>(source: F, scan: &ScanConfig, noise: &NoiseModel, tag: u64) -> Result<(Interferogram, RawCounts)>
where
    F: Fn(f64) -> f64 + Sync,
{
    scan.validate()?;
    noise.validate()?;
    let positions = scan.positions();
    let delta_l: Vec<f64> = positions.iter().map(|&x| scan.delta_l(x)).collect();
    let model: Vec<f64> = delta_l.iter().map(|&l| source(l)).collect();
    let camera = Camera {
        noise: *noise,
        pixels: scan.roi_pixels(),
        exposure: scan.exposure_s,
    };

    let (rate, rate_sigma, raw) = if noise.is_noiseless() {
        let rate: Vec<f64> = model.iter().map(|&m| camera.signal_mean(m) / scan.exposure_s).collect();
        let raw = RawCounts {
            signal: vec![model.iter().map(|&m| (camera.signal_mean(m) * camera.pixels as f64).round() as u64).collect()],
            background: vec![vec![0; model.len()]],
        };
        (rate, vec![0.0; model.len()], raw)
    } else {
        let frames: Vec<(Vec<u64>, Vec<u64>)> = (0..scan.repeats)
            .into_par_iter()
            .map(|r| {
                let mut rng = noise.rng(tag, r as u64);
                let laser = Normal::new(1.0, noise.laser_rms.max(f64::MIN_POSITIVE)).expect("positive width");
                let mut s = Vec::with_capacity(model.len());
                let mut b = Vec::with_capacity(model.len());
                for &m in &model {
                    let factor = if noise.laser_rms > 0.0 { laser.sample(&mut rng).max(0.0) } else { 1.0 };
                    s.push(camera.frame(&mut rng, camera.signal_mean(m * factor)));
                    b.push(camera.frame(&mut rng, 0.0));
                }
                (s, b)
            })
            .collect();
        let reps = scan.repeats as f64;
        let mut rate = vec![0.0; model.len()];
        let mut sigma = vec![0.0; model.len()];
        for k in 0..model.len() {
            let values: Vec<f64> = frames.iter().map(|(s, b)| camera.per_second(s[k], b[k])).collect();
            let mean = values.iter().sum::<f64>() / reps;
            rate[k] = mean;
            sigma[k] = if scan.repeats > 1 {
                let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1.0);
                (var / reps).sqrt()
            } else {
                analytic_sigma(&camera, model[k])
            };
        }
        let (signal, background) = frames.into_iter().unzip();
        (rate, sigma, RawCounts { signal, background })
    };

    let ig = Interferogram::new(positions, delta_l, rate, rate_sigma)?.with_metadata(json!({
        "scan": scan,
        "noise": noise,
        "stream_tag": tag,
    }));
    Ok((ig, raw))
}

/// Single-frame standard deviation of the subtracted rate.
fn analytic_sigma(camera: &Camera, model_rate: f64) -> f64 {
    let n = camera.pixels as f64;
    let nz = &camera.noise;
    let signal = if nz.shot_noise { camera.signal_mean(model_rate) } else { 0.0 };
    let laser = camera.signal_mean(model_rate) * nz.laser_rms;
    let bg = nz.background_rate * camera.exposure;
    let var = n * (signal + 2.0 * bg + 2.0 * nz.readout_e * nz.readout_e) + (n * laser).powi(2);
    var.sqrt() / (camera.exposure * n)
}

/// Same protocol with the idler blocked: only the fringe-free pedestal
/// reaches the camera.
pub fn blocked_idler_scan(pedestal: f64, scan: &ScanConfig, noise: &NoiseModel, tag: u64) -> Result<(Interferogram, RawCounts)> {
    acquire_scan(|_| pedestal, scan, noise, tag)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GainCurve {
    pub powers_w: Vec<f64>,
    /// Single-pass gain `V₀` per watt of pump.
    pub gain_per_w: f64,
    /// Idler path difference of the fixed stage position (m).
    pub delta_l_m: f64,
    /// Single measurements per power and configuration.
    pub measurements: usize,
}

impl Default for GainCurve {
    fn default() -> Self {
        Self {
            powers_w: vec![0.2, 0.4, 0.6, 0.8, 1.0],
            gain_per_w: 5e-3,
            delta_l_m: 8.2e-3,
            measurements: 500,
        }
    }
}

impl GainCurve {
    pub fn validate(&self) -> Result<()> {
        if self.powers_w.is_empty() {
            return Err(Error::Config("gain.powers_w must not be empty".into()));
        }
        if self.powers_w.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return Err(Error::Config("gain.powers_w must be non-negative".into()));
        }
        if !(self.gain_per_w > 0.0) || self.measurements == 0 {
            return Err(Error::Config("gain.gain_per_w and gain.measurements must be positive".into()));
        }
        if self.v0(self.max_power()) > 1e-2 {
            return Err(Error::Config("gain: V0 at the highest power exceeds 1e-2".into()));
        }
        Ok(())
    }

    pub fn max_power(&self) -> f64 {
        self.powers_w.iter().cloned().fold(0.0, f64::max)
    }

    pub fn v0(&self, power_w: f64) -> f64 {
        self.gain_per_w * power_w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainRow {
    pub power_w: f64,
    pub unblocked_rate: f64,
    pub unblocked_sigma: f64,
    pub blocked_rate: f64,
    pub blocked_sigma: f64,
    /// Unblocked over blocked mean rate.
    pub ratio: f64,
    pub ratio_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainTable {
    pub rows: Vec<GainRow>,
    /// Linear fit of the unblocked rate against power.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl GainTable {
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("power_w,unblocked_rate,unblocked_sigma,blocked_rate,blocked_sigma,ratio,ratio_sigma\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e}\n",
                r.power_w, r.unblocked_rate, r.unblocked_sigma, r.blocked_rate, r.blocked_sigma, r.ratio, r.ratio_sigma
            ));
        }
        out
    }
}

/// Phase-averaged single-mode rate at gain `v0` and idler transmission.
/// Far outside the envelope the fringe term averages out, leaving
/// `(N+1)·2V₀(1 + V₀/2 + V₀T/2)`.
fn averaged_rate(v0: f64, transmission: f64, n_th: f64) -> Result<f64> {
    if v0 == 0.0 {
        return Ok(0.0);
    }
    let gains = GainParams::equal(v0)?;
    let object = ObjectModel::from_transmission(transmission, 0.0)?;
    let chain = |phi: f64| compose_chain(&gains, &object, &PhaseConfig { signal: phi, idler: 0.0 });
    let quarter = [0.0, 0.5, 1.0, 1.5].map(|q| q * std::f64::consts::PI);
    let mut sum = 0.0;
    for phi in quarter {
        sum += chain(phi)?.signal_rate(n_th)?;
    }
    Ok(sum / 4.0)
}

/// Pump-power sweep at a fixed stage position with the idler open and
/// blocked. Rates are calibrated so the unblocked rate at the highest power
/// is one model unit.
pub fn gain_linearity_sweep(curve: &GainCurve, n_th: f64, exposure_s: f64, roi_px: [usize; 2], noise: &NoiseModel) -> Result<GainTable> {
    curve.validate()?;
    noise.validate()?;
    let reference = averaged_rate(curve.v0(curve.max_power()), 1.0, n_th)?;
    let scan = ScanConfig {
        step_m: 1.0,
        span_m: (curve.measurements - 1) as f64,
        zero_path_position_m: 0.0,
        exposure_s,
        repeats: 1,
        roi_px,
    };
    let stats = |values: &[f64]| {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        (mean, (var / n).sqrt())
    };
    let mut rows = Vec::with_capacity(curve.powers_w.len());
    for (k, &p) in curve.powers_w.iter().enumerate() {
        let v0 = curve.v0(p);
        let measure = |transmission: f64, label: &str| -> Result<(f64, f64)> {
            let level = averaged_rate(v0, transmission, n_th)? / reference;
            let tag = stream_tag(&format!("gain/{label}/{k}"));
            let (ig, _) = acquire_scan(|_| level, &scan, noise, tag)?;
            Ok(stats(&ig.rate))
        };
        let (u, su) = measure(1.0, "open")?;
        let (b, sb) = measure(0.0, "blocked")?;
        let ratio = if b != 0.0 { u / b } else { f64::NAN };
        let ratio_sigma = if b != 0.0 {
            ratio.abs() * ((su / u).powi(2) + (sb / b).powi(2)).sqrt()
        } else {
            f64::NAN
        };
        rows.push(GainRow {
            power_w: p,
            unblocked_rate: u,
            unblocked_sigma: su,
            blocked_rate: b,
            blocked_sigma: sb,
            ratio,
            ratio_sigma,
        });
    }
    let (slope, intercept, r_squared) = linear_fit(
        &rows.iter().map(|r| r.power_w).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.unblocked_rate).collect::<Vec<_>>(),
    );
    Ok(GainTable {
        rows,
        slope,
        intercept,
        r_squared,
    })
}

/// Ordinary least-squares line with coefficient of determination.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (slope, intercept, r2)
}
