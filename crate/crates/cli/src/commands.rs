//! Subcommand implementations. Every command computes all results before
//! writing any file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use thzqs_core::analysis::{thickness_table_csv, sense_pipeline, SenseReport};
use thzqs_core::experiment::{branch_model, simulate_branch};
use thzqs_core::instrument::{gain_linearity_sweep, NoiseModel};
use thzqs_core::interferogram::Interferogram;
use thzqs_core::phasematch::{Conversion, CrystalParams, ProcessBranch};
use thzqs_core::thermal_occupation;

use crate::config::RunConfig;
use crate::plot::{heat_map, line_plot, Series, Style};
use crate::{BranchArg, CliError, Format};

/// Files to write, kept in memory until the command has succeeded.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(PathBuf, String)>,
}

impl Outputs {
    fn add(&mut self, name: impl Into<PathBuf>, content: String) {
        self.files.push((name.into(), content));
    }

    fn add_json<T: Serialize>(&mut self, name: impl Into<PathBuf>, value: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.into()))?;
        self.add(name, text + "\n");
        Ok(())
    }

    pub fn write(self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Runtime(e.into()))?;
        let mut written = Vec::new();
        for (name, content) in self.files {
            let path = dir.join(name);
            fs::write(&path, content).map_err(|e| CliError::Runtime(e.into()))?;
            written.push(path);
        }
        Ok(written)
    }
}

fn selected(config: &RunConfig, branch: Option<BranchArg>) -> Vec<Conversion> {
    match branch {
        None => config.branches.clone(),
        Some(BranchArg::All) => vec![Conversion::Stokes, Conversion::AntiStokes],
        Some(BranchArg::Stokes) => vec![Conversion::Stokes],
        Some(BranchArg::Antistokes) => vec![Conversion::AntiStokes],
    }
}

pub fn spectrum(config: &RunConfig, branch: Option<BranchArg>, format: Format) -> Result<Outputs, CliError> {
    let crystal = config.validate()?;
    let sp = &config.spectrum;
    let branches: Vec<ProcessBranch> = selected(config, branch)
        .into_iter()
        .flat_map(|c| sp.directions.iter().map(move |&d| ProcessBranch::new(c, d)))
        .collect();
    let map = crystal.spectrum_map(&branches, &sp.idler_hz(), &sp.theta_s())?;
    let mut out = Outputs::default();
    match format {
        Format::Json => out.add_json("spectrum.json", &map)?,
        Format::Csv => {
            out.add("spectrum.csv", map.to_matrix_text());
            out.add_json(
                "spectrum_axes.json",
                &json!({
                    "rows": "theta_s_rad",
                    "columns": "signal_shift_hz",
                    "theta_s_rad": map.theta_s,
                    "signal_shift_hz": map.signed_shift_axis(),
                    "branches": map.branches,
                    "crystal": crystal.params(),
                }),
            )?;
        }
    }
    let shift_thz: Vec<f64> = map.signed_shift_axis().iter().map(|v| v * 1e-12).collect();
    let theta_mrad: Vec<f64> = map.theta_s.iter().map(|v| v * 1e3).collect();
    out.add(
        "spectrum.svg",
        heat_map(
            "Frequency-angular spectrum",
            "signal frequency shift (THz)",
            "signal angle (mrad)",
            &shift_thz,
            &theta_mrad,
            &map.signed_rows(),
        ),
    );
    Ok(out)
}

pub struct SimulateOptions {
    pub branch: Option<BranchArg>,
    pub blocked: bool,
    pub noiseless: bool,
    pub repeats: Option<usize>,
    pub format: Format,
}

fn noise_for(config: &RunConfig, noiseless: bool) -> NoiseModel {
    let base = if noiseless {
        NoiseModel {
            quantum_efficiency: config.noise.quantum_efficiency,
            calibration: config.noise.calibration,
            ..NoiseModel::noiseless()
        }
    } else {
        config.noise
    };
    NoiseModel { seed: config.seed, ..base }
}

fn interferogram_plot(title: &str, traces: &[(&str, &Interferogram, &str)], fits: &[(&str, Vec<f64>, Vec<f64>, &str)]) -> String {
    let xs: Vec<Vec<f64>> = traces.iter().map(|(_, ig, _)| ig.position_m.iter().map(|x| x * 1e3).collect()).collect();
    let fit_xs: Vec<Vec<f64>> = fits.iter().map(|(_, x, _, _)| x.iter().map(|x| x * 1e3).collect()).collect();
    let mut series: Vec<Series> = traces
        .iter()
        .zip(&xs)
        .map(|((name, ig, color), x)| Series {
            name,
            x,
            y: &ig.rate,
            error: Some(&ig.rate_sigma),
            color,
            style: Style::Points,
        })
        .collect();
    for ((name, _, y, color), x) in fits.iter().zip(&fit_xs) {
        series.push(Series {
            name,
            x,
            y,
            error: None,
            color,
            style: Style::Line,
        });
    }
    line_plot(title, "stage position (mm)", "rate (counts/s/pixel)", &series)
}

fn add_interferogram(out: &mut Outputs, name: &str, ig: &Interferogram, format: Format) -> Result<(), CliError> {
    match format {
        Format::Json => out.add_json(format!("{name}.json"), ig),
        Format::Csv => {
            out.add(format!("{name}.csv"), ig.to_csv());
            out.add_json(
                format!("{name}.json"),
                &json!({ "points": ig.len(), "metadata": ig.metadata }),
            )
        }
    }
}

pub fn simulate(config: &RunConfig, opts: &SimulateOptions) -> Result<Outputs, CliError> {
    let mut config = config.clone();
    if let Some(r) = opts.repeats {
        config.scan.repeats = r;
    }
    let crystal = config.validate()?;
    let noise = noise_for(&config, opts.noiseless);
    let mut out = Outputs::default();
    for conversion in selected(&config, opts.branch) {
        let model = branch_model(&crystal, conversion, &config.aperture, &config.quadrature, &config.scan, config.object.as_ref())?;
        let scans = simulate_branch(&crystal, &model, &config.aperture, &config.scan, &noise, config.object.as_ref(), opts.blocked)?;
        let label = conversion.to_string();
        let mut traces = Vec::new();
        let mut with_seed = |mut ig: Interferogram| {
            ig.metadata["seed"] = json!(config.seed);
            ig
        };
        let reference = with_seed(scans.reference);
        add_interferogram(&mut out, &format!("{label}_reference"), &reference, opts.format)?;
        out.add(format!("{label}_reference_raw.csv"), scans.reference_raw.to_csv());
        let sample = scans.sample.map(&mut with_seed);
        if let (Some(s), Some(raw)) = (&sample, &scans.sample_raw) {
            add_interferogram(&mut out, &format!("{label}_sample"), s, opts.format)?;
            out.add(format!("{label}_sample_raw.csv"), raw.to_csv());
        }
        traces.push(("reference", &reference, "#1f4e9c"));
        if let Some(s) = &sample {
            traces.push(("sample", s, "#b5301f"));
        }
        out.add(format!("{label}.svg"), interferogram_plot(&format!("{label} interferogram"), &traces, &[]));
    }
    Ok(out)
}

fn read_interferogram(path: &Path) -> Result<Interferogram, CliError> {
    if path.extension().is_some_and(|e| e == "json") {
        let text = fs::read_to_string(path).map_err(|e| CliError::Runtime(e.into()))?;
        serde_json::from_str(&text).map_err(|e| {
            CliError::Runtime(thzqs_core::Error::Parse {
                source_name: path.display().to_string(),
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })
        })
    } else {
        Ok(Interferogram::read(path)?)
    }
}

pub struct AnalyzeOptions<'a> {
    pub reference: &'a [PathBuf],
    pub sample: &'a [PathBuf],
    pub index: f64,
    pub index_sigma: f64,
    pub caliper_m: Option<f64>,
}

pub fn analyze(opts: &AnalyzeOptions) -> Result<Outputs, CliError> {
    if opts.reference.is_empty() || opts.reference.len() != opts.sample.len() {
        return Err(CliError::Validation("analyze: give the same non-zero number of reference and sample files".into()));
    }
    if !(opts.index > 1.0) || !(opts.index_sigma >= 0.0) {
        return Err(CliError::Validation("analyze: --n must exceed 1 and --sigma-n be non-negative".into()));
    }
    let refs = opts.reference.iter().map(|p| read_interferogram(p)).collect::<Result<Vec<_>, _>>()?;
    let samples = opts.sample.iter().map(|p| read_interferogram(p)).collect::<Result<Vec<_>, _>>()?;
    let report: SenseReport = sense_pipeline(&refs, &samples, opts.index, opts.index_sigma)?;

    let mut out = Outputs::default();
    let caliper = opts.caliper_m.unwrap_or(f64::NAN);
    out.add_json(
        "report.json",
        &json!({
            "report": report,
            "inputs": {
                "reference": opts.reference,
                "sample": opts.sample,
                "refractive_index": opts.index,
                "refractive_index_sigma": opts.index_sigma,
                "caliper_m": opts.caliper_m,
            },
        }),
    )?;
    out.add("thickness.csv", thickness_table_csv(&[(caliper, &report)]));
    for b in &report.branches {
        let r = refs.iter().find(|i| i.label() == b.label).expect("matched by the pipeline");
        let s = samples.iter().find(|i| i.label() == b.label).expect("matched by the pipeline");
        let fit_r: Vec<f64> = r.position_m.iter().map(|&x| b.fit_reference.evaluate(x)).collect();
        let fit_s: Vec<f64> = s.position_m.iter().map(|&x| b.fit_sample.evaluate(x)).collect();
        let name = if b.label.is_empty() { "branch".to_string() } else { b.label.clone() };
        out.add(
            format!("fit_{name}.svg"),
            interferogram_plot(
                &format!("{name}: d = {:.4} ± {:.4} mm", b.thickness.thickness_m * 1e3, b.thickness.sigma_m * 1e3),
                &[("reference", r, "#1f4e9c"), ("sample", s, "#b5301f")],
                &[
                    ("reference fit", r.position_m.clone(), fit_r, "#1f4e9c"),
                    ("sample fit", s.position_m.clone(), fit_s, "#b5301f"),
                ],
            ),
        );
    }
    Ok(out)
}

pub fn check_gain(config: &RunConfig, noiseless: bool, format: Format) -> Result<Outputs, CliError> {
    let crystal = config.validate()?;
    let noise = noise_for(config, noiseless);
    let root = crystal.collinear_frequency(ProcessBranch::STOKES_FORWARD)?;
    let params: &CrystalParams = crystal.params();
    let n_th = thermal_occupation(root, params.temperature_k)?;
    let table = gain_linearity_sweep(&config.gain, n_th, config.scan.exposure_s, config.scan.roi_px, &noise)?;
    let mut out = Outputs::default();
    match format {
        Format::Json => out.add_json("gain.json", &table)?,
        Format::Csv => {
            out.add("gain.csv", table.to_csv());
            out.add_json(
                "gain_fit.json",
                &json!({
                    "slope_per_w": table.slope,
                    "intercept": table.intercept,
                    "r_squared": table.r_squared,
                    "idler_hz": root,
                    "n_th": n_th,
                    "gain": config.gain,
                    "seed": config.seed,
                }),
            )?;
        }
    }
    let p: Vec<f64> = table.rows.iter().map(|r| r.power_w).collect();
    let ratio: Vec<f64> = table.rows.iter().map(|r| r.ratio).collect();
    let ratio_sigma: Vec<f64> = table.rows.iter().map(|r| r.ratio_sigma).collect();
    let ones = vec![1.0; p.len()];
    out.add(
        "gain.svg",
        line_plot(
            &format!("Unblocked / blocked rate, R² = {:.5}", table.r_squared),
            "pump power (W)",
            "ratio",
            &[
                Series { name: "ratio", x: &p, y: &ratio, error: Some(&ratio_sigma), color: "#1f4e9c", style: Style::Points },
                Series { name: "1.00", x: &p, y: &ones, error: None, color: "#888888", style: Style::Line },
            ],
        ),
    );
    Ok(out)
}
