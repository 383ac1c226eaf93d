//! Simulation and analysis toolkit for a single-crystal terahertz nonlinear
//! interferometer.
//!
//! Visible signal photons generated by parametric down- and up-conversion in
//! a periodically poled MgO:LiNbO₃ crystal interfere when the terahertz idler
//! path is folded back through the crystal. This crate models that
//! interferometer from dispersion and phase matching up to the multimode
//! interferogram, synthesizes noisy camera scans, and recovers the thickness
//! of a plate inserted in the idler arm from the envelope shift.
//!
//! Module map:
//!
//! * [`dispersion`]: refractive indices and thermal occupation
//! * [`phasematch`]: quasi-phase-matching mismatch, collinear roots, spectrum maps
//! * [`gaussian`]: exact single-mode Bogoliubov chain and closed-form rates
//! * [`multimode`]: aperture-limited multimode interferogram
//! * [`instrument`]: piezo scan and camera noise synthesis
//! * [`experiment`]: labelled reference and sample scans per branch
//! * [`analysis`]: FFT peak, envelope fit, thickness extraction

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod constants;
pub mod dispersion;
pub mod error;
pub mod experiment;
pub mod gaussian;
pub mod instrument;
pub mod interferogram;
pub mod lm;
pub mod multimode;
pub mod phasematch;
pub mod quadrature;
pub mod special;

pub use analysis::{
    fft_peak, fit_envelope, initialize_fit, sense_pipeline, thickness_from_shift, FftPeak,
    FitOverrides, FitResult, SenseReport, ThicknessEstimate, Window,
};
pub use dispersion::{thermal_occupation, Band, DispersionModel, ThermalField};
pub use error::{Error, Result};
pub use gaussian::{GainParams, ModeChain, ObjectModel, PhaseConfig};
pub use instrument::{GainCurve, NoiseModel, ScanConfig};
pub use interferogram::Interferogram;
pub use multimode::{ApertureModel, InterferogramModel, QuadratureSpec, SampleObject};
pub use phasematch::{Conversion, Crystal, CrystalParams, Direction, ProcessBranch, SpectrumMap};
