//! Quasi-phase matching in the periodically poled crystal.
//!
//! The longitudinal mismatch uses the paraxial expansion of the signal and
//! idler wave vectors. For each branch the signal frequency follows from
//! energy conservation (`ω_s = ω_p ∓ ω_i`), and the sign with which the idler
//! and the grating vector enter is fixed by the conversion type and the idler
//! direction:
//!
//! | branch              | mismatch                                   |
//! |---------------------|--------------------------------------------|
//! | Stokes, forward     | `k_p − k_s − k_i + K`                      |
//! | Stokes, backward    | `k_p − k_s + k_i − K`                      |
//! | anti-Stokes, forward| `k_p − k_s + k_i − K`                      |
//! | anti-Stokes, backward| `k_p − k_s − k_i + K`                     |
//!
//! with `k_{s,i}` carrying the paraxial factor `(1 − θ²/2)` and `K = 2π/Λ`.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{SPEED_OF_LIGHT, TERAHERTZ};
use crate::dispersion::{thermal_occupation, Band, DispersionModel};
use crate::error::{Error, Result};
use crate::special::sinc;

/// Largest angle (rad) accepted by the paraxial mismatch.
pub const PARAXIAL_LIMIT: f64 = 0.35;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Conversion {
    Stokes,
    #[serde(rename = "antistokes")]
    AntiStokes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProcessBranch {
    pub conversion: Conversion,
    pub direction: Direction,
}

impl ProcessBranch {
    pub const STOKES_FORWARD: Self = Self::new(Conversion::Stokes, Direction::Forward);
    pub const STOKES_BACKWARD: Self = Self::new(Conversion::Stokes, Direction::Backward);
    pub const ANTI_STOKES_FORWARD: Self = Self::new(Conversion::AntiStokes, Direction::Forward);
    pub const ANTI_STOKES_BACKWARD: Self = Self::new(Conversion::AntiStokes, Direction::Backward);
    pub const ALL: [Self; 4] = [
        Self::STOKES_FORWARD,
        Self::STOKES_BACKWARD,
        Self::ANTI_STOKES_FORWARD,
        Self::ANTI_STOKES_BACKWARD,
    ];

    pub const fn new(conversion: Conversion, direction: Direction) -> Self {
        Self {
            conversion,
            direction,
        }
    }

    /// Signal frequency from energy conservation.
    pub fn signal_frequency(&self, pump_hz: f64, idler_hz: f64) -> f64 {
        match self.conversion {
            Conversion::Stokes => pump_hz - idler_hz,
            Conversion::AntiStokes => pump_hz + idler_hz,
        }
    }

    /// +1 when the idler and grating enter as `−k_i + K`, −1 for `+k_i − K`.
    fn idler_sign(&self) -> f64 {
        match (self.conversion, self.direction) {
            (Conversion::Stokes, Direction::Forward) | (Conversion::AntiStokes, Direction::Backward) => 1.0,
            _ => -1.0,
        }
    }
}

impl fmt::Display for Conversion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Conversion::Stokes => f.write_str("stokes"),
            Conversion::AntiStokes => f.write_str("antistokes"),
        }
    }
}

impl fmt::Display for ProcessBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dir = match self.direction {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        };
        write!(f, "{} {}", self.conversion, dir)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrystalParams {
    pub length_m: f64,
    pub poling_period_m: f64,
    pub pump_wavelength_m: f64,
    pub pump_waist_m: f64,
    #[serde(rename = "temperature_K")]
    pub temperature_k: f64,
}

impl Default for CrystalParams {
    /// 1 mm PPLN, 90 µm period, 659.58 nm pump with 60 µm waist, 293 K.
    fn default() -> Self {
        Self {
            length_m: 1e-3,
            poling_period_m: 90e-6,
            pump_wavelength_m: 659.58e-9,
            pump_waist_m: 60e-6,
            temperature_k: 293.0,
        }
    }
}

impl CrystalParams {
    pub fn validate(&self, dispersion: &DispersionModel) -> Result<()> {
        let fields = [
            ("length_m", self.length_m),
            ("poling_period_m", self.poling_period_m),
            ("pump_wavelength_m", self.pump_wavelength_m),
            ("pump_waist_m", self.pump_waist_m),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("crystal.{name} must be positive, got {v}")));
            }
        }
        if !(self.temperature_k >= 0.0 && self.temperature_k.is_finite()) {
            return Err(Error::Config(format!(
                "crystal.temperature_K must be non-negative, got {}",
                self.temperature_k
            )));
        }
        dispersion.n_e(Band::Visible, self.pump_frequency(), self.temperature_k)?;
        Ok(())
    }

    pub fn pump_frequency(&self) -> f64 {
        SPEED_OF_LIGHT / self.pump_wavelength_m
    }

    pub fn grating_wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.poling_period_m
    }
}

/// Crystal parameters bound to a dispersion model.
#[derive(Debug, Clone)]
pub struct Crystal {
    params: CrystalParams,
    dispersion: DispersionModel,
    pump_k: f64,
}

impl Crystal {
    pub fn new(params: CrystalParams, dispersion: DispersionModel) -> Result<Self> {
        params.validate(&dispersion)?;
        let pump_k = dispersion.wavenumber(Band::Visible, params.pump_frequency(), params.temperature_k)?;
        Ok(Self {
            params,
            dispersion,
            pump_k,
        })
    }

    /// Default crystal with the shipped dispersion data.
    pub fn mgo_lithium_niobate() -> Self {
        Self::new(CrystalParams::default(), DispersionModel::mgo_lithium_niobate())
            .expect("default crystal is valid")
    }

    pub fn params(&self) -> &CrystalParams {
        &self.params
    }

    pub fn dispersion(&self) -> &DispersionModel {
        &self.dispersion
    }

    /// Same dispersion, different parameters.
    pub fn with_params(&self, params: CrystalParams) -> Result<Self> {
        Self::new(params, self.dispersion.clone())
    }

    pub fn temperature(&self) -> f64 {
        self.params.temperature_k
    }

    /// Signal and idler wavenumbers (1/m) for an idler frequency.
    pub fn wavenumbers(&self, branch: ProcessBranch, idler_hz: f64) -> Result<(f64, f64)> {
        let t = self.params.temperature_k;
        let ki = self.dispersion.wavenumber(Band::Terahertz, idler_hz, t)?;
        let nu_s = branch.signal_frequency(self.params.pump_frequency(), idler_hz);
        let ks = self.dispersion.wavenumber(Band::Visible, nu_s, t)?;
        Ok((ks, ki))
    }

    /// Mismatch from precomputed wavenumbers.
    pub fn delta_kz_from(&self, branch: ProcessBranch, ks: f64, ki: f64, theta_s: f64, theta_i: f64) -> f64 {
        let s = branch.idler_sign();
        self.pump_k - ks * (1.0 - 0.5 * theta_s * theta_s)
            - s * (ki * (1.0 - 0.5 * theta_i * theta_i) - self.params.grating_wavenumber())
    }

    /// Longitudinal phase mismatch Δk_z in 1/m.
    pub fn delta_kz(&self, branch: ProcessBranch, idler_hz: f64, theta_s: f64, theta_i: f64) -> Result<f64> {
        for (name, th) in [("theta_s", theta_s), ("theta_i", theta_i)] {
            if !(th.abs() < PARAXIAL_LIMIT) {
                return Err(Error::Domain(format!("{name} = {th} rad outside paraxial regime")));
            }
        }
        let (ks, ki) = self.wavenumbers(branch, idler_hz)?;
        Ok(self.delta_kz_from(branch, ks, ki, theta_s, theta_i))
    }

    /// Collinear phase-matched idler frequency, bisection to 10⁻⁴ THz.
    pub fn collinear_frequency(&self, branch: ProcessBranch) -> Result<f64> {
        self.collinear_frequency_with_tolerance(branch, 1e-4 * TERAHERTZ)
    }

    /// Collinear root with an explicit bracket width tolerance (Hz).
    ///
    /// Scans the full terahertz validity window for the first sign change of
    /// Δk_z(ν; 0, 0), then bisects.
    pub fn collinear_frequency_with_tolerance(&self, branch: ProcessBranch, tolerance_hz: f64) -> Result<f64> {
        let (lo, hi) = self.dispersion.valid_range(Band::Terahertz);
        let f = |nu: f64| self.delta_kz(branch, nu, 0.0, 0.0);
        let steps = 400;
        let mut a = lo;
        let mut fa = f(a)?;
        for k in 1..=steps {
            let b = lo + (hi - lo) * k as f64 / steps as f64;
            let fb = f(b)?;
            if fa == 0.0 {
                return Ok(a);
            }
            if fa.signum() != fb.signum() {
                let (mut a, mut b, mut fa) = (a, b, fa);
                while b - a > tolerance_hz {
                    let m = 0.5 * (a + b);
                    let fm = f(m)?;
                    if fm == 0.0 {
                        return Ok(m);
                    }
                    if fm.signum() == fa.signum() {
                        a = m;
                        fa = fm;
                    } else {
                        b = m;
                    }
                }
                return Ok(0.5 * (a + b));
            }
            a = b;
            fa = fb;
        }
        Err(Error::NoRoot {
            branch,
            lo_thz: lo / TERAHERTZ,
            hi_thz: hi / TERAHERTZ,
        })
    }

    /// Numerical `|∂Δk_z/∂ν|` at θ = 0, in (1/m)/Hz.
    pub fn mismatch_slope(&self, branch: ProcessBranch, idler_hz: f64) -> Result<f64> {
        let h = 1e-5 * idler_hz;
        let up = self.delta_kz(branch, idler_hz + h, 0.0, 0.0)?;
        let dn = self.delta_kz(branch, idler_hz - h, 0.0, 0.0)?;
        Ok(((up - dn) / (2.0 * h)).abs())
    }

    /// Frequency-angular spectrum over an idler-frequency grid and a grid of
    /// internal signal angles.
    ///
    /// Each branch contributes `w · sinc²(Δk_z L / 2)` with the idler angle
    /// fixed by transverse momentum conservation, `k_s θ_s = k_i θ_i`, and
    /// `w = N_th + 1` (Stokes) or `N_th` (anti-Stokes). Cells whose matched
    /// idler angle leaves the paraxial regime contribute zero.
    pub fn spectrum_map(
        &self,
        branches: &[ProcessBranch],
        idler_hz: &[f64],
        theta_s: &[f64],
    ) -> Result<SpectrumMap> {
        let (lo, hi) = self.dispersion.valid_range(Band::Terahertz);
        if let Some(&bad) = idler_hz.iter().find(|&&nu| !(nu >= lo && nu <= hi)) {
            return Err(Error::OutOfRange {
                band: Band::Terahertz,
                frequency_hz: bad,
                min_hz: lo,
                max_hz: hi,
            });
        }
        if let Some(&bad) = theta_s.iter().find(|&&t| !(t.abs() < PARAXIAL_LIMIT)) {
            return Err(Error::Domain(format!("signal angle {bad} rad outside paraxial regime")));
        }
        let t = self.params.temperature_k;
        let half_l = 0.5 * self.params.length_m;

        // Per-branch, per-frequency constants.
        let mut columns = Vec::with_capacity(branches.len());
        for &b in branches {
            let mut col = Vec::with_capacity(idler_hz.len());
            for &nu in idler_hz {
                let (ks, ki) = self.wavenumbers(b, nu)?;
                let nth = thermal_occupation(nu, t)?;
                let w = match b.conversion {
                    Conversion::Stokes => nth + 1.0,
                    Conversion::AntiStokes => nth,
                };
                col.push((ks, ki, w));
            }
            columns.push((b, col));
        }

        let rows: Vec<(Vec<f64>, Vec<f64>)> = theta_s
            .par_iter()
            .map(|&ths| {
                let mut stokes = vec![0.0; idler_hz.len()];
                let mut anti = vec![0.0; idler_hz.len()];
                for (b, col) in &columns {
                    let target = match b.conversion {
                        Conversion::Stokes => &mut stokes,
                        Conversion::AntiStokes => &mut anti,
                    };
                    for (j, &(ks, ki, w)) in col.iter().enumerate() {
                        let thi = ks * ths / ki;
                        if thi.abs() >= PARAXIAL_LIMIT || w == 0.0 {
                            continue;
                        }
                        let dk = self.delta_kz_from(*b, ks, ki, ths, thi);
                        let s = sinc(dk * half_l);
                        target[j] += w * s * s;
                    }
                }
                (stokes, anti)
            })
            .collect();

        let (stokes, anti_stokes) = rows.into_iter().unzip();
        Ok(SpectrumMap {
            idler_hz: idler_hz.to_vec(),
            theta_s: theta_s.to_vec(),
            branches: branches.to_vec(),
            stokes,
            anti_stokes,
        })
    }
}

/// Frequency-angular spectrum, rows indexed by signal angle and columns by
/// idler frequency; Stokes and anti-Stokes sheets kept separate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMap {
    pub idler_hz: Vec<f64>,
    pub theta_s: Vec<f64>,
    pub branches: Vec<ProcessBranch>,
    pub stokes: Vec<Vec<f64>>,
    pub anti_stokes: Vec<Vec<f64>>,
}

impl SpectrumMap {
    pub fn integrated(&self, conversion: Conversion) -> f64 {
        let sheet = match conversion {
            Conversion::Stokes => &self.stokes,
            Conversion::AntiStokes => &self.anti_stokes,
        };
        sheet.iter().flatten().sum()
    }

    /// Signed signal frequency shift axis `ν_s − ν_p` (Hz): Stokes columns
    /// (negative, ascending) followed by anti-Stokes columns.
    pub fn signed_shift_axis(&self) -> Vec<f64> {
        let mut axis: Vec<f64> = self.idler_hz.iter().rev().map(|nu| -nu).collect();
        axis.extend(self.idler_hz.iter().copied());
        axis
    }

    /// Rows on the signed shift axis.
    pub fn signed_rows(&self) -> Vec<Vec<f64>> {
        self.stokes
            .iter()
            .zip(&self.anti_stokes)
            .map(|(s, a)| s.iter().rev().chain(a.iter()).copied().collect())
            .collect()
    }

    /// Delimited matrix; one row per signal angle.
    pub fn to_matrix_text(&self) -> String {
        let mut out = String::new();
        for row in self.signed_rows() {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const THZ: f64 = TERAHERTZ;

    #[test]
    fn root_has_zero_mismatch() {
        let c = Crystal::mgo_lithium_niobate();
        let nu = c
            .collinear_frequency_with_tolerance(ProcessBranch::STOKES_FORWARD, 1.0)
            .unwrap();
        let dk = c.delta_kz(ProcessBranch::STOKES_FORWARD, nu, 0.0, 0.0).unwrap();
        let slope = c.mismatch_slope(ProcessBranch::STOKES_FORWARD, nu).unwrap();
        assert!(dk.abs() <= slope * 1.0, "{dk}");
    }

    #[test]
    fn anchors_lie_inside_central_lobe() {
        let c = Crystal::mgo_lithium_niobate();
        let lim = std::f64::consts::PI / c.params().length_m;
        let f = c.delta_kz(ProcessBranch::STOKES_FORWARD, 1.26 * THZ, 0.0, 0.0).unwrap();
        let b = c.delta_kz(ProcessBranch::STOKES_BACKWARD, 0.47 * THZ, 0.0, 0.0).unwrap();
        assert!(f.abs() < lim, "{f}");
        assert!(b.abs() < lim, "{b}");
    }

    #[test]
    fn collinear_roots_match_anchors() {
        let c = Crystal::mgo_lithium_niobate();
        let f = c.collinear_frequency(ProcessBranch::STOKES_FORWARD).unwrap() / THZ;
        let b = c.collinear_frequency(ProcessBranch::STOKES_BACKWARD).unwrap() / THZ;
        assert!((f - 1.26).abs() < 0.05, "{f}");
        assert!((b - 0.47).abs() < 0.05, "{b}");
        // Anti-Stokes shares the forward/backward roots to within dispersion of
        // the visible band.
        let af = c.collinear_frequency(ProcessBranch::ANTI_STOKES_FORWARD).unwrap() / THZ;
        assert!((af - f).abs() < 0.01);
    }

    #[test]
    fn root_stable_under_tolerance_halving() {
        let c = Crystal::mgo_lithium_niobate();
        for b in [ProcessBranch::STOKES_FORWARD, ProcessBranch::STOKES_BACKWARD] {
            let r1 = c.collinear_frequency_with_tolerance(b, 1e-4 * THZ).unwrap();
            let r2 = c.collinear_frequency_with_tolerance(b, 0.5e-4 * THZ).unwrap();
            assert!((r1 - r2).abs() < 1e-3 * THZ);
        }
    }

    // Brute-force oracle: locate the sign change of Δk_z on a fine grid.
    fn brute_root(c: &Crystal) -> f64 {
        let mut prev = None;
        for k in 0..20_000 {
            let nu = (0.5 + 1.5 * k as f64 / 20_000.0) * THZ;
            let dk = c.delta_kz(ProcessBranch::STOKES_FORWARD, nu, 0.0, 0.0).unwrap();
            if let Some((p, pd)) = prev {
                if f64::signum(pd) != f64::signum(dk) {
                    return 0.5 * (p + nu);
                }
            }
            prev = Some((nu, dk));
        }
        panic!("no root");
    }

    #[test]
    fn longer_period_lowers_forward_root() {
        let c = Crystal::mgo_lithium_niobate();
        let mut last = f64::INFINITY;
        for period in [88e-6, 90e-6, 92e-6, 95e-6] {
            let p = CrystalParams {
                poling_period_m: period,
                ..*c.params()
            };
            let cc = c.with_params(p).unwrap();
            let brute = brute_root(&cc);
            let root = cc.collinear_frequency(ProcessBranch::STOKES_FORWARD).unwrap();
            assert!((brute - root).abs() < 1e-4 * THZ);
            assert!(root < last);
            last = root;
        }
    }

    #[test]
    fn mismatch_monotone_around_roots() {
        let c = Crystal::mgo_lithium_niobate();
        for b in [ProcessBranch::STOKES_FORWARD, ProcessBranch::STOKES_BACKWARD] {
            let mut prev: Option<f64> = None;
            let mut sign = 0.0;
            for k in 0..2000 {
                let nu = (0.2 + 1e-3 * k as f64) * THZ;
                let dk = c.delta_kz(b, nu, 0.0, 0.0).unwrap();
                if let Some(p) = prev {
                    let s = (dk - p).signum();
                    if sign == 0.0 {
                        sign = s;
                    }
                    assert_eq!(s, sign, "{b} not monotone at {nu}");
                }
                prev = Some(dk);
            }
        }
    }

    #[test]
    fn no_root_reports_window() {
        let c = Crystal::mgo_lithium_niobate();
        let p = CrystalParams {
            poling_period_m: 5e-6,
            ..*c.params()
        };
        let err = c.with_params(p).unwrap().collinear_frequency(ProcessBranch::STOKES_FORWARD);
        assert!(matches!(err, Err(Error::NoRoot { .. })));
    }

    #[test]
    fn non_paraxial_angle_rejected() {
        let c = Crystal::mgo_lithium_niobate();
        assert!(c.delta_kz(ProcessBranch::STOKES_FORWARD, 1e12, 0.0, 0.5).is_err());
    }

    #[test]
    fn energy_bookkeeping() {
        let c = Crystal::mgo_lithium_niobate();
        let p = c.params().pump_frequency();
        for nu in [0.3e12, 1.26e12, 2.0e12] {
            let s = ProcessBranch::STOKES_FORWARD.signal_frequency(p, nu);
            let a = ProcessBranch::ANTI_STOKES_FORWARD.signal_frequency(p, nu);
            assert_eq!(s + nu, p);
            assert_eq!(a - nu, p);
        }
    }

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn map_peak_on_axis_at_forward_root() {
        let c = Crystal::mgo_lithium_niobate();
        let nus = grid(0.8 * THZ, 1.8 * THZ, 201);
        let step = nus[1] - nus[0];
        let m = c
            .spectrum_map(&[ProcessBranch::STOKES_FORWARD], &nus, &[0.0, 1e-4])
            .unwrap();
        let row = &m.stokes[0];
        let (jmax, _) = row
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (j, &v)| if v > acc.1 { (j, v) } else { acc });
        assert!((nus[jmax] - 1.26 * THZ).abs() <= step, "{}", nus[jmax]);
    }

    #[test]
    fn stokes_outweighs_anti_stokes_and_zero_temperature_kills_anti_stokes() {
        let c = Crystal::mgo_lithium_niobate();
        let nus = grid(0.2 * THZ, 2.0 * THZ, 121);
        let ths = grid(-2e-3, 2e-3, 41);
        let m = c.spectrum_map(&ProcessBranch::ALL, &nus, &ths).unwrap();
        assert!(m.integrated(Conversion::Stokes) > m.integrated(Conversion::AntiStokes));
        assert!(m.integrated(Conversion::AntiStokes) > 0.0);

        let cold = c
            .with_params(CrystalParams {
                temperature_k: 0.0,
                ..*c.params()
            })
            .unwrap();
        let m0 = cold.spectrum_map(&ProcessBranch::ALL, &nus, &ths).unwrap();
        assert!(m0.anti_stokes.iter().flatten().all(|&v| v == 0.0));
        assert!(m0.integrated(Conversion::Stokes) > 0.0);
    }

    #[test]
    fn map_rejects_out_of_range_grid() {
        let c = Crystal::mgo_lithium_niobate();
        assert!(matches!(
            c.spectrum_map(&ProcessBranch::ALL, &[0.01 * THZ], &[0.0]),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn signed_axis_layout() {
        let c = Crystal::mgo_lithium_niobate();
        let m = c
            .spectrum_map(&ProcessBranch::ALL, &[0.5 * THZ, 1.0 * THZ], &[0.0])
            .unwrap();
        assert_eq!(m.signed_shift_axis(), vec![-THZ, -0.5 * THZ, 0.5 * THZ, 1.0 * THZ]);
        assert_eq!(m.signed_rows()[0].len(), 4);
    }
}
