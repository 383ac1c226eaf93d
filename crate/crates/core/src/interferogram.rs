//! Sampled interferogram with per-point uncertainty and its file format.
//!
//! On disk an interferogram is a comma-separated table with the header
//! `position_m,delta_l_m,rate,rate_sigma` plus a JSON sidecar next to it
//! (same stem, `.json`) carrying free-form metadata and the row count.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "position_m,delta_l_m,rate,rate_sigma";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interferogram {
    /// Stage position (m).
    pub position_m: Vec<f64>,
    /// Idler path difference (m).
    pub delta_l_m: Vec<f64>,
    pub rate: Vec<f64>,
    /// Standard error of `rate`; zero for noiseless traces.
    pub rate_sigma: Vec<f64>,
    /// Sidecar metadata. The `label` key names the conversion branch.
    pub metadata: Value,
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    points: usize,
    metadata: Value,
}

impl Interferogram {
    pub fn new(position_m: Vec<f64>, delta_l_m: Vec<f64>, rate: Vec<f64>, rate_sigma: Vec<f64>) -> Result<Self> {
        let n = position_m.len();
        if delta_l_m.len() != n || rate.len() != n || rate_sigma.len() != n {
            return Err(Error::Domain("interferogram columns differ in length".into()));
        }
        Ok(Self {
            position_m,
            delta_l_m,
            rate,
            rate_sigma,
            metadata: Value::Object(Default::default()),
        })
    }

    pub fn with_metadata(mut self, metadata: Value) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn len(&self) -> usize {
        self.rate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rate.is_empty()
    }

    /// Branch label from the metadata, empty if absent.
    pub fn label(&self) -> &str {
        self.metadata.get("label").and_then(Value::as_str).unwrap_or("")
    }

    /// Uniform sample spacing of `axis`, checked to relative 1e-6.
    pub fn uniform_step(axis: &[f64]) -> Result<f64> {
        if axis.len() < 2 {
            return Err(Error::TooShort { len: axis.len(), min: 2 });
        }
        let step = (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64;
        if step == 0.0 {
            return Err(Error::NonUniformGrid { index: 1 });
        }
        for (k, w) in axis.windows(2).enumerate() {
            if ((w[1] - w[0]) - step).abs() > 1e-6 * step.abs() {
                return Err(Error::NonUniformGrid { index: k + 1 });
            }
        }
        Ok(step)
    }

    /// Path difference per unit stage travel.
    pub fn path_per_stage(&self) -> Result<f64> {
        let dx = Self::uniform_step(&self.position_m)?;
        let dl = Self::uniform_step(&self.delta_l_m)?;
        Ok(dl / dx)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for k in 0..self.len() {
            out.push_str(&format!(
                "{:e},{:e},{:e},{:e}\n",
                self.position_m[k], self.delta_l_m[k], self.rate[k], self.rate_sigma[k]
            ));
        }
        out
    }

    /// Parses the table part; `source_name` is used in error messages.
    pub fn parse_csv(text: &str, source_name: &str) -> Result<Self> {
        let err = |line: usize, column: usize, message: String| Error::Parse {
            source_name: source_name.to_string(),
            line,
            column,
            message,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim_end() == CSV_HEADER => {}
            Some((_, h)) => return Err(err(1, 1, format!("expected header `{CSV_HEADER}`, found `{h}`"))),
            None => return Err(err(1, 1, "empty file".into())),
        }
        let mut cols: [Vec<f64>; 4] = Default::default();
        for (idx, line) in lines {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut column = 1;
            let mut count = 0;
            for field in line.split(',') {
                if count == 4 {
                    return Err(err(line_no, column, "more than 4 fields".into()));
                }
                let value: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| err(line_no, column, format!("invalid number `{field}`")))?;
                cols[count].push(value);
                count += 1;
                column += field.chars().count() + 1;
            }
            if count < 4 {
                return Err(err(line_no, column, format!("expected 4 fields, found {count}")));
            }
        }
        let [p, d, r, s] = cols;
        Self::new(p, d, r, s)
    }

    pub fn sidecar_path(csv_path: &Path) -> PathBuf {
        csv_path.with_extension("json")
    }

    /// Writes the table and its sidecar.
    pub fn write(&self, csv_path: impl AsRef<Path>) -> Result<()> {
        let csv_path = csv_path.as_ref();
        fs::write(csv_path, self.to_csv())?;
        let sidecar = Sidecar {
            points: self.len(),
            metadata: self.metadata.clone(),
        };
        fs::write(Self::sidecar_path(csv_path), serde_json::to_string_pretty(&sidecar)? + "\n")?;
        Ok(())
    }

    /// Reads a table and, if present, its sidecar. A sidecar row count that
    /// disagrees with the table is reported as a parse error at the first
    /// missing or extra line.
    pub fn read(csv_path: impl AsRef<Path>) -> Result<Self> {
        let csv_path = csv_path.as_ref();
        let name = csv_path.display().to_string();
        let text = fs::read_to_string(csv_path)?;
        let mut ig = Self::parse_csv(&text, &name)?;
        let side = Self::sidecar_path(csv_path);
        if side.exists() {
            let side_text = fs::read_to_string(&side)?;
            let sidecar: Sidecar = serde_json::from_str(&side_text).map_err(|e| Error::Parse {
                source_name: side.display().to_string(),
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
            if sidecar.points != ig.len() {
                return Err(Error::Parse {
                    source_name: name,
                    line: ig.len().min(sidecar.points) + 2,
                    column: 1,
                    message: format!("expected {} data rows, found {}", sidecar.points, ig.len()),
                });
            }
            ig.metadata = sidecar.metadata;
        }
        Ok(ig)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn sample() -> Interferogram {
        let x: Vec<f64> = (0..5).map(|k| k as f64 * 1e-5).collect();
        let l: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let r = vec![1.0, 1.5, 0.25, 1.0 / 3.0, 2.0];
        let s = vec![0.1; 5];
        Interferogram::new(x, l, r, s).unwrap().with_metadata(json!({"label": "stokes"}))
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let ig = sample();
        let back = Interferogram::parse_csv(&ig.to_csv(), "mem").unwrap();
        assert_eq!(back.rate, ig.rate);
        assert_eq!(back.position_m, ig.position_m);
    }

    #[test]
    fn file_round_trip_keeps_metadata() {
        let dir = std::env::temp_dir().join(format!("thzqs-ig-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join("scan.csv");
        sample().write(&p).unwrap();
        let back = Interferogram::read(&p).unwrap();
        assert_eq!(back, sample());
        assert_eq!(back.label(), "stokes");
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn bad_number_names_line_and_column() {
        let text = format!("{CSV_HEADER}\n0,0,1,0\n1e-5,2e-5,1.x,0\n");
        match Interferogram::parse_csv(&text, "t.csv") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (3, 11)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn truncated_row_is_rejected() {
        let text = format!("{CSV_HEADER}\n0,0,1,0\n1e-5,2e-");
        match Interferogram::parse_csv(&text, "t.csv") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn truncation_at_row_boundary_caught_by_sidecar() {
        let dir = std::env::temp_dir().join(format!("thzqs-trunc-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join("scan.csv");
        sample().write(&p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        let cut: Vec<&str> = text.lines().take(4).collect();
        fs::write(&p, cut.join("\n") + "\n").unwrap();
        assert!(matches!(Interferogram::read(&p), Err(Error::Parse { line: 5, .. })));
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn wrong_header_rejected() {
        assert!(matches!(
            Interferogram::parse_csv("x,y\n", "t"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn uniform_step_detects_gap() {
        assert!((Interferogram::uniform_step(&[0.0, 1.0, 2.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            Interferogram::uniform_step(&[0.0, 1.0, 2.5, 3.0]),
            Err(Error::NonUniformGrid { index: 2 })
        ));
    }
}
