//! Multimode interferogram of the collinear signal spot.
//!
//! With the signal fixed on axis, the detected rate is a double integral over
//! idler frequency and internal idler angle of the pump-waist Gaussian times
//! `sinc²(Δk_z L/2)`, with a fringe term `cos(φ₀ + ω_i Δl_i / c)` that only
//! idler modes inside the aperture (`θ_i < θ_max`) carry. The angular
//! integral uses the paraxial solid-angle element `θ_i dθ_i` and stops at the
//! total-internal-reflection cap.
//!
//! Since nothing but the fringe phase depends on the idler path, the double
//! integral collapses once into per-frequency pedestal and fringe weights;
//! the interferogram at any path difference is then a single sum.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::SPEED_OF_LIGHT;
use crate::dispersion::{thermal_occupation, Band};
use crate::error::{Error, Result};
use crate::phasematch::{Conversion, Crystal, Direction, ProcessBranch, PARAXIAL_LIMIT};
use crate::quadrature::CompositeRule;
use crate::special::{bessel_i0e, sinc};

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ApertureModel {
    /// Largest internal idler angle aligned into the second pass (rad).
    pub theta_max_rad: f64,
    /// Total-internal-reflection limit on internal idler angles (rad).
    pub tir_cap_rad: f64,
}

impl Default for ApertureModel {
    fn default() -> Self {
        Self {
            theta_max_rad: 5f64.to_radians(),
            tir_cap_rad: 11f64.to_radians(),
        }
    }
}

impl ApertureModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.tir_cap_rad > 0.0 && self.tir_cap_rad < PARAXIAL_LIMIT) {
            return Err(Error::Config(format!(
                "aperture.tir_cap_rad must lie in (0, {PARAXIAL_LIMIT}), got {}",
                self.tir_cap_rad
            )));
        }
        if !(self.theta_max_rad >= 0.0 && self.theta_max_rad <= self.tir_cap_rad) {
            return Err(Error::Config(format!(
                "aperture.theta_max_rad must lie in [0, tir_cap_rad], got {}",
                self.theta_max_rad
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    /// Gauss–Legendre nodes along idler frequency.
    pub frequency_nodes: usize,
    /// Gauss–Legendre nodes along idler angle.
    pub angle_nodes: usize,
    /// Gauss–Legendre order per panel.
    pub order: usize,
    /// Half-width of the frequency window in sinc² lobes.
    pub window_lobes: f64,
    /// Relative pointwise change tolerated when doubling the node counts.
    pub tolerance: f64,
    pub max_doublings: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            frequency_nodes: 256,
            angle_nodes: 32,
            order: 8,
            window_lobes: 4.0,
            tolerance: 1e-4,
            max_doublings: 4,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.order == 0 || self.frequency_nodes < self.order || self.angle_nodes < 2 * self.order {
            return Err(Error::Config(
                "quadrature: need frequency_nodes ≥ order and angle_nodes ≥ 2·order".into(),
            ));
        }
        if !(self.window_lobes > 0.0 && self.tolerance > 0.0) {
            return Err(Error::Config("quadrature: window_lobes and tolerance must be positive".into()));
        }
        Ok(())
    }

    fn doubled(&self) -> Self {
        Self {
            frequency_nodes: 2 * self.frequency_nodes,
            angle_nodes: 2 * self.angle_nodes,
            ..*self
        }
    }
}

/// Plate inserted in the idler arm, passed twice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleObject {
    pub refractive_index: f64,
    pub thickness_m: f64,
    /// Scale the fringe by the amplitude transmission of four uncoated
    /// surfaces.
    #[serde(default)]
    pub fresnel_loss: bool,
}

impl SampleObject {
    pub fn validate(&self) -> Result<()> {
        if !(self.refractive_index > 1.0) {
            return Err(Error::Config(format!(
                "object.refractive_index must exceed 1, got {}",
                self.refractive_index
            )));
        }
        if !(self.thickness_m >= 0.0) {
            return Err(Error::Config(format!(
                "object.thickness_m must be non-negative, got {}",
                self.thickness_m
            )));
        }
        Ok(())
    }

    /// Extra idler path `2(n − 1)d`.
    pub fn path_offset(&self) -> f64 {
        2.0 * (self.refractive_index - 1.0) * self.thickness_m
    }

    /// Fringe amplitude factor: the round-trip power transmission through
    /// four surfaces is `T_F⁴` with `T_F = 4n/(n+1)²`, and the fringe scales
    /// with its square root.
    pub fn fringe_factor(&self) -> f64 {
        if !self.fresnel_loss {
            return 1.0;
        }
        let n = self.refractive_index;
        let per_surface = 4.0 * n / ((n + 1.0) * (n + 1.0));
        per_surface * per_surface
    }
}

/// Biphoton amplitude `exp(−w²/4 |k_s⊥ + k_i⊥|²) sinc(Δk_z L / 2)` with the
/// signal frequency eliminated by energy conservation.
#[derive(Debug, Clone)]
pub struct BiphotonAmplitude<'a> {
    crystal: &'a Crystal,
    branch: ProcessBranch,
}

impl<'a> BiphotonAmplitude<'a> {
    pub fn new(crystal: &'a Crystal, branch: ProcessBranch) -> Self {
        Self { crystal, branch }
    }

    /// Amplitude for polar angles `θ_s, θ_i` and azimuths `φ_s, φ_i`, with
    /// the idler azimuth measured such that `φ_s − φ_i = π` is transverse
    /// matching.
    pub fn evaluate(&self, idler_hz: f64, theta_s: f64, phi_s: f64, theta_i: f64, phi_i: f64) -> Result<f64> {
        let (ks, ki) = self.crystal.wavenumbers(self.branch, idler_hz)?;
        let w = self.crystal.params().pump_waist_m;
        let a = ks * theta_s;
        let b = ki * theta_i;
        let perp2 = a * a + b * b + 2.0 * a * b * (phi_s - phi_i).cos();
        let dk = self.crystal.delta_kz_from(self.branch, ks, ki, theta_s, theta_i);
        Ok((-0.25 * w * w * perp2).exp() * sinc(0.5 * dk * self.crystal.params().length_m))
    }
}

/// Azimuth-integrated rate density (per unit idler solid angle, constant
/// prefactors dropped):
///
/// `exp(−w²/2 [(k_sθ_s)² + (k_iθ_i)²]) I₀(w² k_sθ_s k_iθ_i) sinc²(Δk_z L/2)
///  · [1 + t cos φ_i]`.
///
/// The Gaussian and the Bessel factor are fused as
/// `exp(−w²/2 (a − b)²) · e^{−x} I₀(x)` so that no intermediate overflows.
pub fn rate_density(
    crystal: &Crystal,
    branch: ProcessBranch,
    theta_s: f64,
    idler_hz: f64,
    theta_i: f64,
    transmission: f64,
    idler_phase: f64,
) -> Result<f64> {
    let (ks, ki) = crystal.wavenumbers(branch, idler_hz)?;
    Ok(density_from(crystal, branch, ks, ki, theta_s, theta_i) * (1.0 + transmission * idler_phase.cos()))
}

fn density_from(crystal: &Crystal, branch: ProcessBranch, ks: f64, ki: f64, theta_s: f64, theta_i: f64) -> f64 {
    let w2 = crystal.params().pump_waist_m.powi(2);
    let a = ks * theta_s;
    let b = ki * theta_i;
    let gauss = (-0.5 * w2 * (a - b) * (a - b)).exp() * bessel_i0e(w2 * a * b);
    let s = sinc(0.5 * crystal.delta_kz_from(branch, ks, ki, theta_s, theta_i) * crystal.params().length_m);
    gauss * s * s
}

/// Forward-generated branch for a conversion type.
fn forward(conversion: Conversion) -> ProcessBranch {
    ProcessBranch::new(conversion, Direction::Forward)
}

/// Thermal weight `N_th + 1` (Stokes) or `N_th` (anti-Stokes).
fn thermal_weight(conversion: Conversion, idler_hz: f64, temperature_k: f64) -> Result<f64> {
    let n = thermal_occupation(idler_hz, temperature_k)?;
    Ok(match conversion {
        Conversion::Stokes => n + 1.0,
        Conversion::AntiStokes => n,
    })
}

/// Idler-frequency integration window centred on the collinear root.
pub fn frequency_window(crystal: &Crystal, conversion: Conversion, lobes: f64) -> Result<(f64, f64)> {
    let branch = forward(conversion);
    let root = crystal.collinear_frequency_with_tolerance(branch, 1e6)?;
    let slope = crystal.mismatch_slope(branch, root)?;
    let lobe = 2.0 * PI / (crystal.params().length_m * slope);
    let (lo, hi) = crystal.dispersion().valid_range(Band::Terahertz);
    Ok(((root - lobes * lobe).max(lo), (root + lobes * lobe).min(hi)))
}

/// Idler angular density Γ(θ_i) at collinear signal, normalized to peak 1.
pub fn idler_angular_density(
    crystal: &Crystal,
    conversion: Conversion,
    theta_i: &[f64],
    quad: &QuadratureSpec,
) -> Result<Vec<f64>> {
    quad.validate()?;
    let branch = forward(conversion);
    let (lo, hi) = frequency_window(crystal, conversion, quad.window_lobes)?;
    let eval = |q: &QuadratureSpec| -> Result<Vec<f64>> {
        let rule = CompositeRule::new(lo, hi, q.frequency_nodes.div_ceil(q.order), q.order);
        let ks_ki: Vec<(f64, f64)> = rule
            .nodes
            .iter()
            .map(|&nu| crystal.wavenumbers(branch, nu))
            .collect::<Result<_>>()?;
        let mut out = Vec::with_capacity(theta_i.len());
        for &th in theta_i {
            if !(th.abs() < PARAXIAL_LIMIT) {
                return Err(Error::Domain(format!("idler angle {th} rad outside paraxial regime")));
            }
            out.push(
                ks_ki
                    .iter()
                    .zip(&rule.weights)
                    .map(|(&(ks, ki), &w)| w * density_from(crystal, branch, ks, ki, 0.0, th))
                    .sum(),
            );
        }
        Ok(out)
    };
    let coarse = eval(quad)?;
    let fine = eval(&quad.doubled())?;
    let peak = fine.iter().cloned().fold(0.0, f64::max);
    let achieved = coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| (c - f).abs() / peak)
        .fold(0.0, f64::max);
    if achieved > quad.tolerance {
        return Err(Error::QuadratureNotConverged {
            achieved,
            tolerance: quad.tolerance,
            nodes: quad.frequency_nodes,
        });
    }
    Ok(fine.iter().map(|v| v / peak).collect())
}

/// One quadrature node in idler frequency with its angle-integrated weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralNode {
    pub idler_hz: f64,
    /// All idler angles up to the cap.
    pub pedestal: f64,
    /// Idler angles inside the aperture only.
    pub fringe: f64,
}

/// Interferogram model for one conversion branch, reduced to spectral
/// weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferogramModel {
    pub conversion: Conversion,
    pub nodes: Vec<SpectralNode>,
    pub phi0: f64,
    pub quadrature: QuadratureSpec,
    pub achieved_tolerance: f64,
}

/// Path-independent part of the model for one quadrature resolution.
fn spectral_nodes(
    crystal: &Crystal,
    conversion: Conversion,
    aperture: &ApertureModel,
    quad: &QuadratureSpec,
) -> Result<Vec<SpectralNode>> {
    let branch = forward(conversion);
    let (lo, hi) = frequency_window(crystal, conversion, quad.window_lobes)?;
    let freq = CompositeRule::new(lo, hi, quad.frequency_nodes.div_ceil(quad.order), quad.order);

    // Split the angular range at the aperture so the step is resolved exactly.
    let cap = aperture.tir_cap_rad;
    let cut = aperture.theta_max_rad;
    let panels = quad.angle_nodes.div_ceil(quad.order);
    let inner_panels = (((panels as f64) * cut / cap).round() as usize).clamp(1, panels - 1);
    let inner = if cut > 0.0 {
        CompositeRule::new(0.0, cut, inner_panels, quad.order)
    } else {
        CompositeRule { nodes: vec![], weights: vec![] }
    };
    let n_inner = inner.len();
    let angle = inner.join(CompositeRule::new(cut, cap, panels - inner_panels.min(panels - 1), quad.order));

    let temperature = crystal.temperature();
    freq.nodes
        .par_iter()
        .zip(freq.weights.par_iter())
        .map(|(&nu, &wnu)| {
            let (ks, ki) = crystal.wavenumbers(branch, nu)?;
            let weight = wnu * thermal_weight(conversion, nu, temperature)?;
            let mut pedestal = 0.0;
            let mut fringe = 0.0;
            for (k, (&th, &wth)) in angle.nodes.iter().zip(&angle.weights).enumerate() {
                // Paraxial solid angle θ dθ (azimuth already integrated).
                let v = wth * th * density_from(crystal, branch, ks, ki, 0.0, th);
                pedestal += v;
                if k < n_inner {
                    fringe += v;
                }
            }
            Ok(SpectralNode {
                idler_hz: nu,
                pedestal: weight * pedestal,
                fringe: weight * fringe,
            })
        })
        .collect()
}

impl InterferogramModel {
    /// Builds the model and refines the quadrature until doubling both node
    /// counts changes the rate by less than the tolerance at every probe
    /// path difference.
    pub fn build(
        crystal: &Crystal,
        conversion: Conversion,
        aperture: &ApertureModel,
        quad: &QuadratureSpec,
        probe_delta_l: &[f64],
    ) -> Result<Self> {
        aperture.validate()?;
        quad.validate()?;
        let mut q = *quad;
        let mut current = Self {
            conversion,
            nodes: spectral_nodes(crystal, conversion, aperture, &q)?,
            phi0: 0.0,
            quadrature: q,
            achieved_tolerance: f64::INFINITY,
        };
        for _ in 0..=quad.max_doublings {
            let qf = q.doubled();
            let finer = Self {
                conversion,
                nodes: spectral_nodes(crystal, conversion, aperture, &qf)?,
                phi0: 0.0,
                quadrature: qf,
                achieved_tolerance: f64::INFINITY,
            };
            let scale = finer.pedestal().abs().max(f64::MIN_POSITIVE);
            let achieved = probe_delta_l
                .iter()
                .map(|&dl| (current.rate(dl, None) - finer.rate(dl, None)).abs() / scale)
                .fold(0.0, f64::max);
            if achieved <= quad.tolerance || scale == f64::MIN_POSITIVE {
                current.achieved_tolerance = achieved;
                return Ok(current);
            }
            current = finer;
            q = qf;
        }
        Err(Error::QuadratureNotConverged {
            achieved: current.achieved_tolerance,
            tolerance: quad.tolerance,
            nodes: q.frequency_nodes * q.angle_nodes,
        })
    }

    pub fn with_phi0(mut self, phi0: f64) -> Self {
        self.phi0 = phi0;
        self
    }

    /// Path-independent background, the rate far outside the envelope.
    pub fn pedestal(&self) -> f64 {
        self.nodes.iter().map(|n| n.pedestal).sum()
    }

    /// Total aperture-limited fringe weight.
    pub fn fringe_weight(&self) -> f64 {
        self.nodes.iter().map(|n| n.fringe).sum()
    }

    /// Rate at idler path difference `delta_l` (m), with an optional plate.
    pub fn rate(&self, delta_l: f64, object: Option<&SampleObject>) -> f64 {
        let (offset, factor) = object.map_or((0.0, 1.0), |o| (o.path_offset(), o.fringe_factor()));
        let k = 2.0 * PI / SPEED_OF_LIGHT * (delta_l + offset);
        self.nodes
            .iter()
            .map(|n| n.pedestal + factor * n.fringe * (self.phi0 + k * n.idler_hz).cos())
            .sum()
    }

    /// Rate with the idler arm blocked: pedestal only.
    pub fn blocked_rate(&self) -> f64 {
        self.pedestal()
    }

    /// Rates over a path grid.
    pub fn rates(&self, delta_l: &[f64], object: Option<&SampleObject>) -> Vec<f64> {
        delta_l.par_iter().map(|&dl| self.rate(dl, object)).collect()
    }

    /// Rates normalized to unit pedestal; all zeros if the pedestal vanishes.
    pub fn normalized_rates(&self, delta_l: &[f64], object: Option<&SampleObject>) -> Vec<f64> {
        let p = self.pedestal();
        if p == 0.0 {
            return vec![0.0; delta_l.len()];
        }
        self.rates(delta_l, object).into_iter().map(|r| r / p).collect()
    }
}

/// Fringe visibility `(max − min)/(max + min)` of a sampled trace.
pub fn visibility(trace: &[f64]) -> f64 {
    let max = trace.iter().cloned().fold(f64::MIN, f64::max);
    let min = trace.iter().cloned().fold(f64::MAX, f64::min);
    if max + min == 0.0 {
        0.0
    } else {
        (max - min) / (max + min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::TERAHERTZ;
    use crate::phasematch::CrystalParams;

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
    }

    fn probes() -> Vec<f64> {
        grid(-6e-3, 6e-3, 61)
    }

    #[test]
    fn on_axis_density_is_gaussian_times_sinc() {
        let c = Crystal::mgo_lithium_niobate();
        let b = ProcessBranch::STOKES_FORWARD;
        let nu = 1.3 * TERAHERTZ;
        let th = 0.05;
        let (_, ki) = c.wavenumbers(b, nu).unwrap();
        let w = c.params().pump_waist_m;
        let dk = c.delta_kz(b, nu, 0.0, th).unwrap();
        let s = sinc(0.5 * dk * c.params().length_m);
        let expected = (-0.5 * w * w * (ki * th).powi(2)).exp() * s * s;
        let got = rate_density(&c, b, 0.0, nu, th, 0.0, 0.0).unwrap();
        assert!((got - expected).abs() < 1e-14 * expected.max(1e-300));
    }

    #[test]
    fn azimuthal_reduction_matches_direct_integration() {
        // ∫ |Φ|² dφ_i over the idler azimuth equals 2π × rate_density.
        let c = Crystal::mgo_lithium_niobate();
        let b = ProcessBranch::STOKES_FORWARD;
        let amp = BiphotonAmplitude::new(&c, b);
        let nu = 1.25 * TERAHERTZ;
        for &(ths, thi) in &[(1e-4, 0.02), (4e-4, 0.06), (1e-3, 0.1)] {
            let n = 2000;
            let h = 2.0 * PI / n as f64;
            let direct: f64 = (0..n)
                .map(|j| amp.evaluate(nu, ths, 0.0, thi, j as f64 * h).unwrap().powi(2) * h)
                .sum();
            let reduced = 2.0 * PI * rate_density(&c, b, ths, nu, thi, 0.0, 0.0).unwrap();
            assert!((direct - reduced).abs() < 1e-10 * reduced.max(1e-300), "{direct} vs {reduced}");
        }
    }

    #[test]
    fn density_peaks_on_axis_at_collinear_root() {
        let c = Crystal::mgo_lithium_niobate();
        let b = ProcessBranch::STOKES_FORWARD;
        let root = c.collinear_frequency(b).unwrap();
        let d0 = rate_density(&c, b, 0.0, root, 0.0, 0.0, 0.0).unwrap();
        for th in grid(1e-4, 0.3, 300) {
            assert!(rate_density(&c, b, 0.0, root, th, 0.0, 0.0).unwrap() < d0);
        }
    }

    #[test]
    fn zero_transmission_density_ignores_phase() {
        let c = Crystal::mgo_lithium_niobate();
        let b = ProcessBranch::STOKES_FORWARD;
        let a = rate_density(&c, b, 0.0, 1.2e12, 0.03, 0.0, 0.0).unwrap();
        let z = rate_density(&c, b, 0.0, 1.2e12, 0.03, 0.0, 2.1).unwrap();
        assert_eq!(a, z);
    }

    #[test]
    fn angular_density_shape() {
        let c = Crystal::mgo_lithium_niobate();
        let th = grid(0.0, 0.3, 61);
        let g = idler_angular_density(&c, Conversion::Stokes, &th, &QuadratureSpec::default()).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-12);
        assert!(g[1] < g[0]);
        assert!(g[1..].iter().all(|&v| v > 0.0));
    }

    fn half_width(g: &[f64], th: &[f64]) -> f64 {
        let k = g.iter().position(|&v| v < 0.5).unwrap();
        th[k]
    }

    #[test]
    fn wider_pump_narrows_angular_density() {
        let c = Crystal::mgo_lithium_niobate();
        let th = grid(0.0, 0.34, 341);
        let mut last = f64::INFINITY;
        for w in [30e-6, 60e-6, 120e-6] {
            let cc = c
                .with_params(CrystalParams {
                    pump_waist_m: w,
                    ..*c.params()
                })
                .unwrap();
            let g = idler_angular_density(&cc, Conversion::Stokes, &th, &QuadratureSpec::default()).unwrap();
            let hw = half_width(&g, &th);
            assert!(hw < last, "w={w}: {hw}");
            last = hw;
        }
    }

    fn model(c: &Crystal, conv: Conversion, ap: ApertureModel) -> InterferogramModel {
        InterferogramModel::build(c, conv, &ap, &QuadratureSpec::default(), &probes()).unwrap()
    }

    #[test]
    fn quadrature_converged_under_doubling() {
        let c = Crystal::mgo_lithium_niobate();
        let m = model(&c, Conversion::Stokes, ApertureModel::default());
        assert!(m.achieved_tolerance < 1e-4);
        let q = QuadratureSpec {
            frequency_nodes: m.quadrature.frequency_nodes * 2,
            angle_nodes: m.quadrature.angle_nodes * 2,
            ..m.quadrature
        };
        let finer = InterferogramModel {
            nodes: spectral_nodes(&c, Conversion::Stokes, &ApertureModel::default(), &q).unwrap(),
            ..m.clone()
        };
        for dl in probes() {
            let a = m.rate(dl, None);
            let b = finer.rate(dl, None);
            assert!((a - b).abs() / b < 1e-4);
        }
    }

    #[test]
    fn closed_aperture_kills_fringe() {
        let c = Crystal::mgo_lithium_niobate();
        let ap = ApertureModel {
            theta_max_rad: 0.0,
            ..ApertureModel::default()
        };
        let m = model(&c, Conversion::Stokes, ap);
        let trace = m.rates(&grid(-3e-3, 3e-3, 301), None);
        assert!(visibility(&trace) < 1e-12);
    }

    #[test]
    fn plate_shifts_path_axis() {
        let c = Crystal::mgo_lithium_niobate();
        let m = model(&c, Conversion::Stokes, ApertureModel::default());
        let plate = SampleObject {
            refractive_index: 1.42,
            thickness_m: 5e-3,
            fresnel_loss: false,
        };
        let zero = SampleObject { thickness_m: 0.0, ..plate };
        for dl in grid(-8e-3, 2e-3, 101) {
            assert_eq!(m.rate(dl, Some(&zero)), m.rate(dl, None));
            let shifted = m.rate(dl + 4.2e-3, None);
            assert!((m.rate(dl, Some(&plate)) - shifted).abs() < 1e-6 * shifted);
        }
    }

    #[test]
    fn fresnel_loss_lowers_visibility() {
        let c = Crystal::mgo_lithium_niobate();
        let m = model(&c, Conversion::Stokes, ApertureModel::default());
        let plate = SampleObject {
            refractive_index: 1.42,
            thickness_m: 1e-3,
            fresnel_loss: false,
        };
        let lossy = SampleObject {
            fresnel_loss: true,
            ..plate
        };
        let dl = grid(-4e-3, 1e-3, 501);
        assert!(visibility(&m.rates(&dl, Some(&lossy))) < visibility(&m.rates(&dl, Some(&plate))));
    }

    #[test]
    fn anti_stokes_vanishes_at_zero_temperature_stokes_persists() {
        let c = Crystal::mgo_lithium_niobate();
        let warm_as = model(&c, Conversion::AntiStokes, ApertureModel::default());
        let mut last = warm_as.fringe_weight();
        assert!(last > 0.0);
        for t in [100.0, 20.0, 2.0] {
            let cc = c
                .with_params(CrystalParams {
                    temperature_k: t,
                    ..*c.params()
                })
                .unwrap();
            let a = InterferogramModel::build(&cc, Conversion::AntiStokes, &ApertureModel::default(), &QuadratureSpec::default(), &probes()).unwrap();
            assert!(a.fringe_weight() < last);
            last = a.fringe_weight();
        }
        let cold = c
            .with_params(CrystalParams {
                temperature_k: 0.0,
                ..*c.params()
            })
            .unwrap();
        let a0 = InterferogramModel::build(&cold, Conversion::AntiStokes, &ApertureModel::default(), &QuadratureSpec::default(), &probes()).unwrap();
        assert_eq!(a0.fringe_weight(), 0.0);
        let s0 = model(&cold, Conversion::Stokes, ApertureModel::default());
        assert!(s0.fringe_weight() > 0.0);
    }
}
