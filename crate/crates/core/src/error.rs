use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("wavelength {wavelength_um} µm is outside the valid range [{min_um}, {max_um}] µm of {model}")]
    OutOfRange {
        model: String,
        wavelength_um: f64,
        min_um: f64,
        max_um: f64,
    },

    #[error("fundamental mode is not guided at {wavelength_um} µm (effective index {n_eff} at or below cladding {n_clad})")]
    ModeCutoff {
        wavelength_um: f64,
        n_eff: f64,
        n_clad: f64,
    },

    #[error("grid too coarse: only {samples:.1} samples across the narrower marginal FWHM (need at least {required})")]
    GridTooCoarse { samples: f64, required: f64 },

    #[error("profile does not fall below half maximum on the {side} side")]
    NoCrossing { side: &'static str },

    #[error("joint spectral amplitude is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("factorization failed: {0}")]
    ConvergenceFailure(String),

    #[error("grating denominator k_p - s_s k_s - s_i k_i = {value} rad/µm is not positive")]
    NonPositiveDenominator { value: f64 },

    #[error("no phasematched signal wavelength in [{lo_nm}, {hi_nm}] nm for pump at {pump_nm} nm")]
    NoPhasematch { pump_nm: f64, lo_nm: f64, hi_nm: f64 },

    #[error("energy is not conserved: 1/{pump_nm} != 1/{signal_nm} + 1/{idler_nm} (relative error {relative_error:e})")]
    EnergyMismatch {
        pump_nm: f64,
        signal_nm: f64,
        idler_nm: f64,
        relative_error: f64,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("unknown material `{0}`")]
    UnknownMaterial(String),

    #[error("malformed Sellmeier data: {0}")]
    SellmeierData(String),
}

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}
