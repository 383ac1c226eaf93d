//! Extraordinary refractive index of MgO:LiNbO₃ and thermal photon occupation.
//!
//! The index model is loaded from a data file: a `#`-prefixed JSON header
//! carrying the visible-band Sellmeier coefficients and provenance, followed
//! by a `frequency_THz,n_e` table for the terahertz band. The terahertz table
//! is interpolated with a natural cubic spline. Evaluation outside the
//! declared validity of a band is an error.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constants::{BOLTZMANN, PLANCK, SPEED_OF_LIGHT, TERAHERTZ};
use crate::error::{Error, Result};

const DEFAULT_DATA: &str = include_str!("../data/mgo_ln_extraordinary.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Visible,
    Terahertz,
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Band::Visible => f.write_str("visible"),
            Band::Terahertz => f.write_str("terahertz"),
        }
    }
}

/// Temperature-dependent Sellmeier equation
///
/// `n² = a1 + b1 f + (a2 + b2 f)/(λ² − (a3 + b3 f)²) + (a4 + b4 f)/(λ² − a5²) − a6 λ²`
///
/// with `λ` in µm and `f = (T − T_ref)(T + T_off)`, `T` in °C.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VisibleSellmeier {
    pub model: String,
    pub a: [f64; 6],
    pub b: [f64; 4],
    #[serde(rename = "temperature_reference_C")]
    pub temperature_reference_c: f64,
    #[serde(rename = "temperature_offset_C")]
    pub temperature_offset_c: f64,
    pub valid_wavelength_um: [f64; 2],
}

impl VisibleSellmeier {
    fn index(&self, wavelength_um: f64, temperature_k: f64) -> f64 {
        let t = temperature_k - 273.15;
        let f = (t - self.temperature_reference_c) * (t + self.temperature_offset_c);
        let [a1, a2, a3, a4, a5, a6] = self.a;
        let [b1, b2, b3, b4] = self.b;
        let l2 = wavelength_um * wavelength_um;
        let pole = a3 + b3 * f;
        let n2 = a1 + b1 * f + (a2 + b2 * f) / (l2 - pole * pole) + (a4 + b4 * f) / (l2 - a5 * a5)
            - a6 * l2;
        n2.sqrt()
    }

    /// Valid frequency interval in Hz.
    fn frequency_range(&self) -> (f64, f64) {
        let [lmin, lmax] = self.valid_wavelength_um;
        (SPEED_OF_LIGHT / (lmax * 1e-6), SPEED_OF_LIGHT / (lmin * 1e-6))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerahertzHeader {
    pub source: String,
    #[serde(rename = "temperature_K")]
    pub temperature_k: f64,
    #[serde(rename = "valid_frequency_THz")]
    pub valid_frequency_thz: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionHeader {
    pub material: String,
    pub visible: VisibleSellmeier,
    pub terahertz: TerahertzHeader,
}

/// Natural cubic spline through tabulated points.
#[derive(Debug, Clone)]
struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            // Tridiagonal system for the second derivatives (Thomas algorithm).
            let mut c = vec![0.0; n];
            let mut d = vec![0.0; n];
            for i in 1..n - 1 {
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                let rhs = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
                let diag = 2.0 * (h0 + h1) - h0 * c[i - 1];
                c[i] = h1 / diag;
                d[i] = (rhs - h0 * d[i - 1]) / diag;
            }
            for i in (1..n - 1).rev() {
                m[i] = d[i] - c[i] * m[i + 1];
            }
        }
        Self { x, y, m }
    }

    fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let k = match self.x.partition_point(|&xi| xi <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let h = self.x[k + 1] - self.x[k];
        let a = (self.x[k + 1] - t) / h;
        let b = (t - self.x[k]) / h;
        a * self.y[k]
            + b * self.y[k + 1]
            + ((a * a * a - a) * self.m[k] + (b * b * b - b) * self.m[k + 1]) * h * h / 6.0
    }
}

/// Extraordinary-axis index model for the visible and terahertz bands.
///
/// Immutable after construction; `Send + Sync`.
#[derive(Debug, Clone)]
pub struct DispersionModel {
    header: DispersionHeader,
    terahertz: CubicSpline,
}

impl DispersionModel {
    /// The shipped 5 mol.% MgO:LiNbO₃ data set.
    pub fn mgo_lithium_niobate() -> Self {
        Self::parse(DEFAULT_DATA, "built-in dispersion data").expect("built-in data parses")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let parse_err = |line: usize, column: usize, message: String| Error::Parse {
            source_name: source_name.to_string(),
            line,
            column,
            message,
        };

        let mut json = String::new();
        let mut lines = text.lines().enumerate().peekable();
        while let Some((_, l)) = lines.peek() {
            match l.strip_prefix('#') {
                Some(rest) => {
                    json.push_str(rest);
                    json.push('\n');
                    lines.next();
                }
                None => break,
            }
        }
        if json.trim().is_empty() {
            return Err(parse_err(1, 1, "missing JSON header block".into()));
        }
        let header: DispersionHeader = serde_json::from_str(&json)
            .map_err(|e| parse_err(e.line(), e.column(), format!("header: {e}")))?;

        let (col_line, columns) = lines
            .by_ref()
            .find(|(_, l)| !l.trim().is_empty())
            .ok_or_else(|| parse_err(0, 1, "missing column header".into()))?;
        let names: Vec<&str> = columns.split(',').map(str::trim).collect();
        if names != ["frequency_THz", "n_e"] {
            return Err(parse_err(
                col_line + 1,
                1,
                format!("expected columns `frequency_THz,n_e`, found `{columns}`"),
            ));
        }

        let mut freq = Vec::new();
        let mut index = Vec::new();
        for (i, l) in lines {
            if l.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = l.split(',').collect();
            if fields.len() != 2 {
                return Err(parse_err(i + 1, 1, format!("expected 2 fields, found {}", fields.len())));
            }
            let mut vals = [0.0; 2];
            let mut col = 1;
            for (k, f) in fields.iter().enumerate() {
                vals[k] = f
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| parse_err(i + 1, col, format!("`{}`: {e}", f.trim())))?;
                col += f.len() + 1;
            }
            if let Some(&last) = freq.last() {
                if vals[0] <= last {
                    return Err(parse_err(i + 1, 1, "frequencies must increase strictly".into()));
                }
            }
            if vals[1] < 1.0 {
                return Err(parse_err(i + 1, fields[0].len() + 2, "index below 1".into()));
            }
            freq.push(vals[0]);
            index.push(vals[1]);
        }
        if freq.len() < 4 {
            return Err(parse_err(0, 1, "terahertz table needs at least 4 rows".into()));
        }
        let [lo, hi] = header.terahertz.valid_frequency_thz;
        if lo < freq[0] || hi > freq[freq.len() - 1] || lo >= hi {
            return Err(parse_err(
                0,
                1,
                format!("declared terahertz validity [{lo}, {hi}] THz exceeds tabulated range"),
            ));
        }
        Ok(Self {
            header,
            terahertz: CubicSpline::new(freq, index),
        })
    }

    pub fn header(&self) -> &DispersionHeader {
        &self.header
    }

    /// Valid frequency interval of a band in Hz.
    pub fn valid_range(&self, band: Band) -> (f64, f64) {
        match band {
            Band::Visible => self.header.visible.frequency_range(),
            Band::Terahertz => {
                let [lo, hi] = self.header.terahertz.valid_frequency_thz;
                (lo * TERAHERTZ, hi * TERAHERTZ)
            }
        }
    }

    /// Extraordinary refractive index.
    ///
    /// The terahertz table is tabulated at a single temperature (see the
    /// header); `temperature_k` only enters the visible-band formula.
    pub fn n_e(&self, band: Band, frequency_hz: f64, temperature_k: f64) -> Result<f64> {
        let (min_hz, max_hz) = self.valid_range(band);
        if !(frequency_hz >= min_hz && frequency_hz <= max_hz) {
            return Err(Error::OutOfRange {
                band,
                frequency_hz,
                min_hz,
                max_hz,
            });
        }
        Ok(match band {
            Band::Visible => self
                .header
                .visible
                .index(SPEED_OF_LIGHT / frequency_hz * 1e6, temperature_k),
            Band::Terahertz => self.terahertz.eval(frequency_hz / TERAHERTZ),
        })
    }

    /// Wavenumber `n_e(ν) · 2πν / c` in 1/m.
    pub fn wavenumber(&self, band: Band, frequency_hz: f64, temperature_k: f64) -> Result<f64> {
        let n = self.n_e(band, frequency_hz, temperature_k)?;
        Ok(2.0 * std::f64::consts::PI * frequency_hz * n / SPEED_OF_LIGHT)
    }
}

/// Planck mean photon number `1 / (exp(hν / k_B T) − 1)`; zero at `T = 0`.
pub fn thermal_occupation(frequency_hz: f64, temperature_k: f64) -> Result<f64> {
    if !(frequency_hz > 0.0) {
        return Err(Error::Domain(format!("frequency must be positive, got {frequency_hz}")));
    }
    if !(temperature_k >= 0.0) {
        return Err(Error::Domain(format!("temperature must be non-negative, got {temperature_k}")));
    }
    if temperature_k == 0.0 {
        return Ok(0.0);
    }
    let x = PLANCK * frequency_hz / (BOLTZMANN * temperature_k);
    Ok(1.0 / x.exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalField {
    pub frequency_hz: f64,
    pub temperature_k: f64,
    pub occupation: f64,
}

impl ThermalField {
    pub fn new(frequency_hz: f64, temperature_k: f64) -> Result<Self> {
        Ok(Self {
            frequency_hz,
            temperature_k,
            occupation: thermal_occupation(frequency_hz, temperature_k)?,
        })
    }
}
