use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("invalid distance {0} m: must be positive")]
    InvalidDistance(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("BD infeasible for group {group}: N = {n_antennas} <= rank of complement channels ({rank})")]
    BdInfeasible {
        group: usize,
        n_antennas: usize,
        rank: usize,
    },

    #[error("RCs linearly dependent: Gram condition number {condition:.3e}")]
    RcsDependent { condition: f64 },

    #[error("SDR solver did not converge: {0}")]
    SdrNotConverged(crate::sdr::SolverDiagnostics),

    #[error("cannot de-rotate: auxiliary element of the lifted vector is zero")]
    ZeroAuxiliary,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
