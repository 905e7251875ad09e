use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid value for {key}: {reason}")]
    Invalid { key: &'static str, reason: String },
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("at snr {snr} dB, e {e}, speed {speed} km/h, trial {trial}: {source}")]
    Trial {
        snr: f64,
        e: f64,
        speed: f64,
        trial: usize,
        source: otfs_isac::Error,
    },
    #[error(transparent)]
    Core(#[from] otfs_isac::Error),
    #[error("no results to write")]
    NoResults,
    #[error("cannot write {path}: {message}")]
    Output { path: String, message: String },
}

pub type SimResult<T> = Result<T, SimError>;
