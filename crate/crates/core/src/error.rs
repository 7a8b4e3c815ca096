use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its physical domain.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Inputs are individually valid but violate the protocol ordering or
    /// the perturbative regime the model relies on.
    #[error("regime violation: {0}")]
    Regime(String),

    #[error("grid under-resolves comb teeth: {classes_per_fwhm:.2} classes per FWHM (< {required})")]
    UnderResolved { classes_per_fwhm: f64, required: f64 },

    #[error("revivals overlap: detections {first} and {second} are {separation:.3e} s apart (< {min_separation:.3e} s)")]
    OverlappingRevivals {
        first: usize,
        second: usize,
        separation: f64,
        min_separation: f64,
    },

    #[error("heralding is unreachable: {0} is zero")]
    Unreachable(&'static str),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Process exit code used by the command-line frontend.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Regime(_) | Error::OverlappingRevivals { .. } | Error::Unreachable(_) => 3,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}

pub(crate) fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and > 0, got {v}")))
    }
}

pub(crate) fn check_non_negative(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and >= 0, got {v}")))
    }
}

pub(crate) fn check_unit_interval(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must lie in [0, 1], got {v}")))
    }
}
