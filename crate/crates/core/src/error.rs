use thiserror::Error;

use crate::dispersion::Band;
use crate::phasematch::ProcessBranch;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{band} index requested at {frequency_hz:.6e} Hz, outside [{min_hz:.6e}, {max_hz:.6e}] Hz")]
    OutOfRange {
        band: Band,
        frequency_hz: f64,
        min_hz: f64,
        max_hz: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no collinear phase-matching root for {branch} in [{lo_thz:.4}, {hi_thz:.4}] THz")]
    NoRoot {
        branch: ProcessBranch,
        lo_thz: f64,
        hi_thz: f64,
    },

    #[error("non-unitary transformation: {0}")]
    NonUnitary(String),

    #[error("quadrature not converged: relative change {achieved:.3e} exceeds {tolerance:.3e} at {nodes} nodes")]
    QuadratureNotConverged {
        achieved: f64,
        tolerance: f64,
        nodes: usize,
    },

    #[error("least-squares fit not converged after {iterations} iterations (final cost {final_cost:.6e})")]
    NotConverged {
        iterations: usize,
        final_cost: f64,
        cost_trace: Vec<f64>,
    },

    #[error("envelope maximum at sample {index} of {len} touches the scan edge")]
    EnvelopeAtEdge { index: usize, len: usize },

    #[error("grid is not uniform at sample {index}")]
    NonUniformGrid { index: usize },

    #[error("trace has {len} points, at least {min} required")]
    TooShort { len: usize, min: usize },

    #[error("branch mismatch: reference is {reference}, sample is {sample}")]
    BranchMismatch { reference: String, sample: String },

    #[error("{branch}: {stage}: {source}")]
    Stage {
        branch: String,
        stage: String,
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{source_name}: line {line}, column {column}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
