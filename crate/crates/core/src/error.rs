use std::path::PathBuf;

use thiserror::Error;

/// Broad error class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Config,
    Domain,
    Verification,
    Io,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Config => "config",
            Category::Domain => "domain",
            Category::Verification => "verification",
            Category::Io => "io",
        }
    }

    /// Process exit status for the CLI.
    pub fn exit_code(self) -> i32 {
        match self {
            Category::Io => 1,
            Category::Config => 2,
            Category::Domain => 3,
            Category::Verification => 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("wavelength {wavelength_um:.6} um outside valid range [{min_um}, {max_um}] um")]
    OutOfRange {
        wavelength_um: f64,
        min_um: f64,
        max_um: f64,
    },
    #[error("invalid dispersion model: {0}")]
    InvalidModel(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("k-vector combination {value:e} 1/m is not positive; no poling period exists")]
    NonPositiveDenominator { value: f64 },
    #[error("forward interaction is group-velocity matched (|1/v_s - 1/v_i| = {0:e} s/m); linear gain linewidth undefined")]
    DegenerateForward(f64),
    #[error("cluster-spacing quadratics have no positive root (discriminants {disc_plus:e}, {disc_minus:e})")]
    NoPositiveRoot { disc_plus: f64, disc_minus: f64 },
    #[error("total cavity decay rate is zero; spectra are undefined")]
    ZeroDecay,
    #[error("no pump calibration: provide a rate-per-watt constant or an explicit kappa1")]
    MissingCalibration,
    #[error("sources were normalized to different pump powers ({0} W vs {1} W)")]
    IncompatibleNormalization(f64, f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid duration {0} s")]
    InvalidDuration(f64),
    #[error("event stream contains no coincidences to histogram")]
    EmptyStream,
    #[error("oracle run did not reach steady state (relative drift {drift:e})")]
    NotConverged { drift: f64 },
    #[error("shooting solve diverged: {0}")]
    ShootingDiverged(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn category(&self) -> Category {
        match self {
            Error::Config(_) | Error::Unsupported(_) | Error::MissingCalibration => {
                Category::Config
            }
            Error::InvalidModel(_) => Category::Config,
            Error::Verification(_) => Category::Verification,
            Error::Io { .. } => Category::Io,
            _ => Category::Domain,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
