//! Single-mode model of the two-pass interferometer.
//!
//! Three modes take part: signal `s`, idler `i` and the auxiliary port `3`
//! of the beam splitter representing the object. Every element of the
//! chain is a linear map on the stacked operator vector
//! `(a_s, a_i, a_3, a_s†, a_i†, a_3†)`; composing them gives the output
//! signal operator as `a'_s2 = Σ_j A_j a_j + B_j a_j†` over the inputs, and
//! for diagonal (vacuum / thermal) input states
//! `⟨a'†a'⟩ = Σ_j |A_j|² N_j + |B_j|² (N_j + 1)` exactly.
//!
//! This transfer-matrix expectation is the reference; the printed
//! equal-gain formula [`signal_rate_closed_form`] is checked against it.

use nalgebra::Matrix6;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::SPEED_OF_LIGHT;
use crate::error::{Error, Result};

const UNITARITY_TOL: f64 = 1e-12;

const S: usize = 0;
const I: usize = 1;
const AUX: usize = 2;

/// Conversion coefficients of one crystal pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassCoefficients {
    pub u: Complex64,
    pub v: Complex64,
}

impl PassCoefficients {
    /// `U = |u|²`.
    pub fn big_u(&self) -> f64 {
        self.u.norm_sqr()
    }

    /// `V = |v|²`.
    pub fn big_v(&self) -> f64 {
        self.v.norm_sqr()
    }
}

/// Parametric gain of both passes (down-conversion, `|u|² − |v|² = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainParams {
    pub pass1: PassCoefficients,
    pub pass2: PassCoefficients,
}

impl GainParams {
    /// Equal real gains `u = √(1 + V₀)`, `v = √V₀`.
    pub fn equal(v0: f64) -> Result<Self> {
        if !(v0 >= 0.0 && v0.is_finite()) {
            return Err(Error::Domain(format!("V0 must be non-negative, got {v0}")));
        }
        let p = PassCoefficients {
            u: Complex64::new((1.0 + v0).sqrt(), 0.0),
            v: Complex64::new(v0.sqrt(), 0.0),
        };
        Ok(Self { pass1: p, pass2: p })
    }

    /// Gains with arbitrary phases on `u` and `v` of each pass.
    pub fn with_phases(v1: f64, v2: f64, phases: [f64; 4]) -> Result<Self> {
        if !(v1 >= 0.0 && v2 >= 0.0) {
            return Err(Error::Domain("conversion strengths must be non-negative".into()));
        }
        let mk = |v: f64, pu: f64, pv: f64| PassCoefficients {
            u: Complex64::from_polar((1.0 + v).sqrt(), pu),
            v: Complex64::from_polar(v.sqrt(), pv),
        };
        Ok(Self {
            pass1: mk(v1, phases[0], phases[1]),
            pass2: mk(v2, phases[2], phases[3]),
        })
    }

    pub fn validate(&self) -> Result<()> {
        for (j, p) in [(1, &self.pass1), (2, &self.pass2)] {
            let defect = p.big_u() - p.big_v() - 1.0;
            if defect.abs() > UNITARITY_TOL {
                return Err(Error::NonUnitary(format!(
                    "pass {j}: |u|² − |v|² − 1 = {defect:.3e}"
                )));
            }
        }
        Ok(())
    }
}

/// Conversion coefficients for sum-frequency (anti-Stokes) passes:
/// particle-conserving, `|u|² + |v|² = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpconversionParams {
    pub pass1: PassCoefficients,
    pub pass2: PassCoefficients,
}

impl UpconversionParams {
    /// Equal real coupling with conversion probability `p = |v|²`.
    pub fn equal(probability: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&probability) {
            return Err(Error::Domain(format!(
                "conversion probability must lie in [0, 1], got {probability}"
            )));
        }
        let p = PassCoefficients {
            u: Complex64::new((1.0 - probability).sqrt(), 0.0),
            v: Complex64::new(probability.sqrt(), 0.0),
        };
        Ok(Self { pass1: p, pass2: p })
    }

    pub fn validate(&self) -> Result<()> {
        for (j, p) in [(1, &self.pass1), (2, &self.pass2)] {
            let defect = p.big_u() + p.big_v() - 1.0;
            if defect.abs() > UNITARITY_TOL {
                return Err(Error::NonUnitary(format!(
                    "pass {j}: |u|² + |v|² − 1 = {defect:.3e}"
                )));
            }
        }
        Ok(())
    }
}

/// Lossless beam splitter standing in for the object in the idler arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectModel {
    pub t: Complex64,
    pub r: Complex64,
}

impl ObjectModel {
    pub fn transparent() -> Self {
        Self {
            t: Complex64::new(1.0, 0.0),
            r: Complex64::new(0.0, 0.0),
        }
    }

    /// Idler path blocked: everything reaching the second pass comes from port 3.
    pub fn blocked() -> Self {
        Self {
            t: Complex64::new(0.0, 0.0),
            r: Complex64::new(1.0, 0.0),
        }
    }

    /// Power transmission `T` with a phase on `t`.
    pub fn from_transmission(transmission: f64, phase: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&transmission) {
            return Err(Error::Domain(format!(
                "transmission must lie in [0, 1], got {transmission}"
            )));
        }
        Ok(Self {
            t: Complex64::from_polar(transmission.sqrt(), phase),
            r: Complex64::new((1.0 - transmission).sqrt(), 0.0),
        })
    }

    pub fn transmission(&self) -> f64 {
        self.t.norm_sqr()
    }

    pub fn validate(&self) -> Result<()> {
        let defect = self.t.norm_sqr() + self.r.norm_sqr() - 1.0;
        if defect.abs() > UNITARITY_TOL {
            return Err(Error::NonUnitary(format!("|t|² + |r|² − 1 = {defect:.3e}")));
        }
        Ok(())
    }
}

/// Propagation phases between the passes (rad).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseConfig {
    pub signal: f64,
    pub idler: f64,
}

/// Composed linear map on the stacked operator vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeChain {
    matrix: Matrix6<Complex64>,
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Embeds a map `b = A a + B a†` on the annihilation part into the stacked
/// 6×6 form `[[A, B], [B*, A*]]`.
fn stacked(a: [[Complex64; 3]; 3], b: [[Complex64; 3]; 3]) -> Matrix6<Complex64> {
    let mut m = Matrix6::from_element(zero());
    for r in 0..3 {
        for c in 0..3 {
            m[(r, c)] = a[r][c];
            m[(r, c + 3)] = b[r][c];
            m[(r + 3, c)] = b[r][c].conj();
            m[(r + 3, c + 3)] = a[r][c].conj();
        }
    }
    m
}

fn identity3() -> [[Complex64; 3]; 3] {
    let mut a = [[zero(); 3]; 3];
    for (k, row) in a.iter_mut().enumerate() {
        row[k] = Complex64::new(1.0, 0.0);
    }
    a
}

/// Two-mode squeezing between signal and idler:
/// `a_s' = u a_s + v a_i†`, `a_i' = u a_i + v a_s†`.
fn squeezing_step(p: &PassCoefficients) -> Matrix6<Complex64> {
    let mut a = identity3();
    let mut b = [[zero(); 3]; 3];
    a[S][S] = p.u;
    a[I][I] = p.u;
    b[S][I] = p.v;
    b[I][S] = p.v;
    stacked(a, b)
}

/// Frequency conversion between signal and idler:
/// `a_s' = u a_s + v a_i`, `a_i' = −v* a_s + u* a_i`.
fn conversion_step(p: &PassCoefficients) -> Matrix6<Complex64> {
    let mut a = identity3();
    a[S][S] = p.u;
    a[S][I] = p.v;
    a[I][S] = -p.v.conj();
    a[I][I] = p.u.conj();
    stacked(a, [[zero(); 3]; 3])
}

/// Object: `a_i'' = t a_i + r a_3`, `a_3' = −r* a_i + t* a_3`; then the
/// propagation phases on signal and idler.
fn object_and_phase_step(object: &ObjectModel, phases: &PhaseConfig) -> Matrix6<Complex64> {
    let es = Complex64::from_polar(1.0, phases.signal);
    let ei = Complex64::from_polar(1.0, phases.idler);
    let mut a = identity3();
    a[S][S] = es;
    a[I][I] = ei * object.t;
    a[I][AUX] = ei * object.r;
    a[AUX][I] = -object.r.conj();
    a[AUX][AUX] = object.t.conj();
    stacked(a, [[zero(); 3]; 3])
}

/// Pass 1 → (object splitter and φ_i on the idler, φ_s on the signal) → pass 2.
pub fn compose_chain(gains: &GainParams, object: &ObjectModel, phases: &PhaseConfig) -> Result<ModeChain> {
    gains.validate()?;
    object.validate()?;
    let m = squeezing_step(&gains.pass2)
        * object_and_phase_step(object, phases)
        * squeezing_step(&gains.pass1);
    Ok(ModeChain { matrix: m })
}

/// Same ordering as [`compose_chain`] with particle-conserving passes.
pub fn compose_upconversion_chain(
    coupling: &UpconversionParams,
    object: &ObjectModel,
    phases: &PhaseConfig,
) -> Result<ModeChain> {
    coupling.validate()?;
    object.validate()?;
    let m = conversion_step(&coupling.pass2)
        * object_and_phase_step(object, phases)
        * conversion_step(&coupling.pass1);
    Ok(ModeChain { matrix: m })
}

impl ModeChain {
    pub fn matrix(&self) -> &Matrix6<Complex64> {
        &self.matrix
    }

    /// Coefficients `(A_j, B_j)` of the output signal operator.
    pub fn signal_coefficients(&self) -> ([Complex64; 3], [Complex64; 3]) {
        let row = self.matrix.row(S);
        ([row[0], row[1], row[2]], [row[3], row[4], row[5]])
    }

    /// `max |M K M† − K|` with `K = diag(1, 1, 1, −1, −1, −1)`; zero for a
    /// map that preserves the canonical commutators.
    pub fn symplectic_defect(&self) -> f64 {
        let mut k = Matrix6::from_element(zero());
        for j in 0..6 {
            k[(j, j)] = Complex64::new(if j < 3 { 1.0 } else { -1.0 }, 0.0);
        }
        let d = self.matrix * k * self.matrix.adjoint() - k;
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Mean output signal photon number with vacuum in the signal input and
    /// thermal occupation `n_th` in the idler input and port 3.
    pub fn signal_rate(&self, n_th: f64) -> Result<f64> {
        if !(n_th >= 0.0) {
            return Err(Error::Domain(format!("thermal occupation must be non-negative, got {n_th}")));
        }
        let occ = [0.0, n_th, n_th];
        let (a, b) = self.signal_coefficients();
        Ok((0..3)
            .map(|j| a[j].norm_sqr() * occ[j] + b[j].norm_sqr() * (occ[j] + 1.0))
            .sum())
    }
}

/// Exact down-conversion signal rate from the composed chain.
pub fn signal_rate_exact(chain: &ModeChain, n_th: f64) -> Result<f64> {
    chain.signal_rate(n_th)
}

/// Exact up-conversion signal rate; vanishes with `n_th`.
pub fn upconversion_rate_exact(chain: &ModeChain, n_th: f64) -> Result<f64> {
    chain.signal_rate(n_th)
}

/// Aggregate phase `φ` such that the exact chain equals the closed form with
/// `cos(2φ)`: `2φ = φ_s + φ_i + arg t + arg u₁ + arg u₂ + arg v₁ − arg v₂`.
pub fn closed_form_phase(gains: &GainParams, object: &ObjectModel, phases: &PhaseConfig) -> f64 {
    0.5 * (phases.signal
        + phases.idler
        + object.t.arg()
        + gains.pass1.u.arg()
        + gains.pass2.u.arg()
        + gains.pass1.v.arg()
        - gains.pass2.v.arg())
}

/// Equal-gain down-conversion rate
/// `(N_th + 1) 2V₀ [1 + V₀T/2 + V₀/2 + √(T(1 + 2V₀ + V₀²)) cos 2φ]`.
pub fn signal_rate_closed_form(v0: f64, transmission: f64, n_th: f64, phi: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&transmission) {
        return Err(Error::Domain(format!(
            "object transmission must lie in [0, 1], got {transmission}"
        )));
    }
    if !(v0 >= 0.0) {
        return Err(Error::Domain(format!("V0 must be non-negative, got {v0}")));
    }
    let fringe = (transmission * (1.0 + 2.0 * v0 + v0 * v0)).sqrt() * (2.0 * phi).cos();
    Ok((n_th + 1.0) * 2.0 * v0 * (1.0 + 0.5 * v0 * transmission + 0.5 * v0 + fringe))
}

/// Low-gain sensing rate with a transparent plate of index `n` and
/// thickness `d` in the idler arm and the idler mirror displaced by `x`:
/// `(N_th + 1) 2V₀ [1 + cos(φ₀ + ω_i/c · (2x + 2(n − 1)d))]`.
pub fn sensing_rate(
    v0: f64,
    n_th: f64,
    phi0: f64,
    idler_hz: f64,
    displacement_m: f64,
    index: f64,
    thickness_m: f64,
) -> f64 {
    let omega = 2.0 * std::f64::consts::PI * idler_hz;
    let path = 2.0 * displacement_m + 2.0 * (index - 1.0) * thickness_m;
    (n_th + 1.0) * 2.0 * v0 * (1.0 + (phi0 + omega / SPEED_OF_LIGHT * path).cos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn rate(v0: f64, t: f64, nth: f64, phases: PhaseConfig) -> f64 {
        let g = GainParams::equal(v0).unwrap();
        let o = ObjectModel::from_transmission(t, 0.0).unwrap();
        compose_chain(&g, &o, &phases).unwrap().signal_rate(nth).unwrap()
    }

    #[test]
    fn identity_gains_give_pure_phase_map() {
        let g = GainParams::equal(0.0).unwrap();
        let ph = PhaseConfig { signal: 0.7, idler: -1.1 };
        let chain = compose_chain(&g, &ObjectModel::transparent(), &ph).unwrap();
        let m = chain.matrix();
        for r in 0..6 {
            for c in 0..6 {
                if r != c {
                    assert!(m[(r, c)].norm() < 1e-15);
                } else {
                    assert!((m[(r, c)].norm() - 1.0).abs() < 1e-15);
                }
            }
        }
        assert_eq!(chain.signal_rate(5.0).unwrap(), 0.0);
    }

    #[test]
    fn blocked_object_has_no_phase_dependence() {
        let g = GainParams::equal(0.05).unwrap();
        let base = compose_chain(&g, &ObjectModel::blocked(), &PhaseConfig::default())
            .unwrap()
            .signal_rate(4.36)
            .unwrap();
        for k in 0..32 {
            let ph = PhaseConfig {
                signal: 0.3 * k as f64,
                idler: -0.17 * k as f64,
            };
            let r = compose_chain(&g, &ObjectModel::blocked(), &ph).unwrap().signal_rate(4.36).unwrap();
            assert!((r - base).abs() < 1e-15 * base.max(1.0));
        }
    }

    #[test]
    fn default_chain_is_symplectic() {
        let g = GainParams::with_phases(1e-3, 1e-3, [0.1, 0.2, 0.3, 0.4]).unwrap();
        let o = ObjectModel::from_transmission(0.8, 0.5).unwrap();
        let ph = PhaseConfig { signal: 1.0, idler: 2.0 };
        assert!(compose_chain(&g, &o, &ph).unwrap().symplectic_defect() < 1e-10);
        let up = UpconversionParams::equal(0.3).unwrap();
        assert!(compose_upconversion_chain(&up, &o, &ph).unwrap().symplectic_defect() < 1e-10);
    }

    #[test]
    fn non_unitary_inputs_rejected() {
        let mut g = GainParams::equal(0.1).unwrap();
        g.pass2.v = Complex64::new(0.5, 0.0);
        assert!(matches!(
            compose_chain(&g, &ObjectModel::transparent(), &PhaseConfig::default()),
            Err(Error::NonUnitary(_))
        ));
        let o = ObjectModel {
            t: Complex64::new(0.9, 0.0),
            r: Complex64::new(0.1, 0.0),
        };
        assert!(matches!(
            compose_chain(&GainParams::equal(0.1).unwrap(), &o, &PhaseConfig::default()),
            Err(Error::NonUnitary(_))
        ));
    }

    #[test]
    fn no_conversion_no_signal() {
        assert_eq!(rate(0.0, 1.0, 4.0, PhaseConfig::default()), 0.0);
        assert_eq!(signal_rate_closed_form(0.0, 1.0, 4.0, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn closed_form_plug_in_value() {
        let r = signal_rate_closed_form(1e-3, 1.0, 4.36, 0.0).unwrap();
        let expected = 5.36 * 2e-3 * (2.0 + 2e-3);
        assert!((r - expected).abs() < 1e-15, "{r} vs {expected}");
        let exact = rate(1e-3, 1.0, 4.36, PhaseConfig::default());
        assert!((exact - r).abs() < 1e-12 * r);
    }

    #[test]
    fn closed_form_blocked_is_phase_independent() {
        let a = signal_rate_closed_form(0.2, 0.0, 3.0, 0.0).unwrap();
        let b = signal_rate_closed_form(0.2, 0.0, 3.0, 1.234).unwrap();
        assert_eq!(a, b);
        assert!(signal_rate_closed_form(0.2, 1.5, 3.0, 0.0).is_err());
    }

    fn visibility(f: impl Fn(f64) -> f64) -> f64 {
        let vals: Vec<f64> = (0..720).map(|k| f(PI * k as f64 / 720.0)).collect();
        let max = vals.iter().cloned().fold(f64::MIN, f64::max);
        let min = vals.iter().cloned().fold(f64::MAX, f64::min);
        (max - min) / (max + min)
    }

    #[test]
    fn unit_visibility_in_low_gain_vacuum_limit() {
        let v = visibility(|phi| signal_rate_closed_form(1e-6, 1.0, 0.0, phi).unwrap());
        assert!((v - 1.0).abs() < 1e-6);
        let v_exact = visibility(|phi| {
            rate(1e-6, 1.0, 0.0, PhaseConfig { signal: 2.0 * phi, idler: 0.0 })
        });
        assert!((v_exact - 1.0).abs() < 1e-6);
    }

    #[test]
    fn vacuum_inputs_give_pure_spdc_interference() {
        // N_th = 0, t = 1: rate = 2V0(1 + cos 2φ) + O(V0²).
        let v0 = 1e-6;
        for k in 0..8 {
            let phi = 0.4 * k as f64;
            let r = rate(v0, 1.0, 0.0, PhaseConfig { signal: 2.0 * phi, idler: 0.0 });
            let lead = 2.0 * v0 * (1.0 + (2.0 * phi).cos());
            assert!((r - lead).abs() < 5.0 * v0 * v0, "{r} vs {lead}");
        }
    }

    #[test]
    fn closed_form_matches_exact_on_random_tuples() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2020);
        for _ in 0..10_000 {
            let v0 = rng.random_range(0.0..0.3);
            let t = rng.random_range(0.0..=1.0);
            let nth = rng.random_range(0.0..20.0);
            let ph = PhaseConfig {
                signal: rng.random_range(-PI..PI),
                idler: rng.random_range(-PI..PI),
            };
            let obj = ObjectModel::from_transmission(t, rng.random_range(-PI..PI)).unwrap();
            let g = GainParams::with_phases(
                v0,
                v0,
                [
                    rng.random_range(-PI..PI),
                    rng.random_range(-PI..PI),
                    rng.random_range(-PI..PI),
                    rng.random_range(-PI..PI),
                ],
            )
            .unwrap();
            let exact = signal_rate_exact(&compose_chain(&g, &obj, &ph).unwrap(), nth).unwrap();
            let phi = closed_form_phase(&g, &obj, &ph);
            let closed = signal_rate_closed_form(v0, t, nth, phi).unwrap();
            let scale = signal_rate_closed_form(v0, t, nth, 0.0).unwrap().max(closed).max(exact);
            assert!((exact - closed).abs() <= 1e-9 * scale, "{exact} vs {closed}");
        }
    }

    #[test]
    fn fringe_extrema_do_not_move_with_gain() {
        let argmax = |v0: f64| {
            (0..1000)
                .map(|k| PI * k as f64 / 1000.0)
                .map(|phi| (phi, signal_rate_closed_form(v0, 0.7, 2.0, phi).unwrap()))
                .fold((0.0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a })
                .0
        };
        assert_eq!(argmax(1e-4), argmax(0.2));
    }

    #[test]
    fn upconversion_needs_thermal_photons() {
        let up = UpconversionParams::equal(1e-3).unwrap();
        let chain = compose_upconversion_chain(&up, &ObjectModel::transparent(), &PhaseConfig::default()).unwrap();
        assert_eq!(upconversion_rate_exact(&chain, 0.0).unwrap(), 0.0);
        let r1 = upconversion_rate_exact(&chain, 1.0).unwrap();
        let r2 = upconversion_rate_exact(&chain, 2.0).unwrap();
        assert!(r1 > 0.0);
        assert!((r2 - 2.0 * r1).abs() < 1e-15);
    }

    #[test]
    fn upconversion_shows_fringe() {
        let up = UpconversionParams::equal(1e-3).unwrap();
        let v = visibility(|phi| {
            let ph = PhaseConfig { signal: 2.0 * phi, idler: 0.0 };
            let c = compose_upconversion_chain(&up, &ObjectModel::transparent(), &ph).unwrap();
            upconversion_rate_exact(&c, 4.36).unwrap()
        });
        assert!(v > 0.99, "{v}");
    }

    #[test]
    fn sensing_fringe_period_and_plate_shift() {
        let nu = 1.26e12;
        let period = SPEED_OF_LIGHT / (2.0 * nu);
        assert!((period - 118.97e-6).abs() < 0.01e-6);
        let r = |x: f64, d: f64| sensing_rate(1e-3, 4.36, 0.3, nu, x, 1.42, d);
        for k in 0..10 {
            let x = 1e-5 * k as f64;
            assert!((r(x, 0.0) - r(x + period, 0.0)).abs() < 1e-12);
            // The plate acts as a stage offset of (n − 1)d = 2.10 mm.
            assert!((r(x, 5e-3) - r(x + 2.10e-3, 0.0)).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn rates_nonnegative(v0 in 0.0f64..0.3, t in 0.0f64..=1.0, nth in 0.0f64..20.0, ps in -PI..PI, pi in -PI..PI) {
            let r = rate(v0, t, nth, PhaseConfig { signal: ps, idler: pi });
            prop_assert!(r >= -1e-15);
            prop_assert!(signal_rate_closed_form(v0, t, nth, 0.5 * (ps + pi)).unwrap() >= -1e-12);
        }

        #[test]
        fn blocking_removes_phase_derivative(v0 in 0.0f64..0.3, nth in 0.0f64..20.0, phi in -PI..PI) {
            let h = 1e-6;
            let f = |p: f64| rate(v0, 0.0, nth, PhaseConfig { signal: p, idler: 0.0 });
            prop_assert!(((f(phi + h) - f(phi - h)) / (2.0 * h)).abs() < 1e-8);
        }
    }
}
