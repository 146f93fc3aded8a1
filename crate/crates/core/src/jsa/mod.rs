//! Joint spectral amplitude of counterpropagating downconversion.
//!
//! `f(ω_s, ω_i) = α(ω_s + ω_i) · φ(ω_s, ω_i)` with a Gaussian pump envelope
//! `α` and the phasematching function
//! `φ = sinc(L Δk / 2) · exp(−i L Δk / 2)`, where for a forward signal and a
//! backward idler `Δk = k_p − k_s + k_i − 2π/Λ`.

mod grid;
mod spectrum;

pub use grid::{auto_grid, FrequencyGrid, GridSettings};
pub use spectrum::{fwhm, fwhm_crossings, marginal_spectra, Spectrum};

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dispersion::{DispersionModel, Material, Medium, SellmeierLibrary};
use crate::error::{Error, Result};
use crate::numeric::{bisect, pairwise_sum};
use crate::units::{omega_from_nm, omega_width_from_nm};
use crate::waveguide::{GuidedMedium, WaveguideGeometry};

/// Fit constant of `sinc(x) ≈ exp(−γ x²)`.
pub const DEFAULT_GAUSSIAN_GAMMA: f64 = 0.193;

/// Half-width of the signal window searched for the phasematched point.
pub const PHASEMATCH_WINDOW_NM: f64 = 100.0;

/// Minimum samples across the narrower marginal FWHM accepted by [`build_jsa`].
pub const MIN_SAMPLES_PER_FWHM: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    /// +1 for a photon copropagating with the pump, −1 otherwise.
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhasematchingShape {
    SincExact,
    GaussianApprox,
}

/// How `Δk` is evaluated away from the phasematched point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MismatchModel {
    /// Full guided dispersion at every grid point.
    Exact,
    /// First-order Taylor expansion about the phasematched point.
    Linearized,
}

/// Full description of one downconversion process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessConfig {
    pub material: Material,
    pub geometry: WaveguideGeometry,
    pub pump_center_nm: f64,
    /// FWHM of the pump intensity spectrum, in wavelength.
    pub pump_fwhm_nm: f64,
    pub grating_period_um: f64,
    pub signal_direction: Direction,
    pub idler_direction: Direction,
    pub phasematching_shape: PhasematchingShape,
    pub gaussian_gamma: f64,
    pub mismatch: MismatchModel,
}

impl Default for ProcessConfig {
    /// PPLN, 775 nm pump of 0.58 nm FWHM, 0.35 µm grating, 4 × 4 µm × 5 mm guide.
    fn default() -> Self {
        ProcessConfig {
            material: Material::LnE,
            geometry: WaveguideGeometry::default(),
            pump_center_nm: 775.0,
            pump_fwhm_nm: 0.58,
            grating_period_um: 0.35,
            signal_direction: Direction::Forward,
            idler_direction: Direction::Backward,
            phasematching_shape: PhasematchingShape::SincExact,
            gaussian_gamma: DEFAULT_GAUSSIAN_GAMMA,
            mismatch: MismatchModel::Exact,
        }
    }
}

impl ProcessConfig {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && !v.is_nan() {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be positive, got {v}")))
            }
        };
        positive("pump_center_nm", self.pump_center_nm)?;
        positive("pump_fwhm_nm", self.pump_fwhm_nm)?;
        // An infinite period switches the grating off.
        positive("grating_period", self.grating_period_um)?;
        positive("gaussian_gamma", self.gaussian_gamma)?;
        if !self.pump_center_nm.is_finite() || !self.pump_fwhm_nm.is_finite() {
            return Err(Error::invalid("pump", "values must be finite"));
        }
        Ok(())
    }
}

/// `σ` of the pump amplitude `exp(−Δ²/2σ²)` from the intensity FWHM in wavelength.
pub fn pump_sigma(config: &ProcessConfig) -> f64 {
    sigma_from_fwhm_nm(config.pump_fwhm_nm, config.pump_center_nm)
}

pub fn sigma_from_fwhm_nm(fwhm_nm: f64, center_nm: f64) -> f64 {
    let fwhm_omega = omega_width_from_nm(fwhm_nm, center_nm);
    fwhm_omega / (2.0 * std::f64::consts::LN_2.sqrt())
}

/// Inverse of [`sigma_from_fwhm_nm`].
pub fn fwhm_nm_from_sigma(sigma: f64, center_nm: f64) -> f64 {
    let fwhm_omega = sigma * 2.0 * std::f64::consts::LN_2.sqrt();
    fwhm_omega / omega_width_from_nm(1.0, center_nm)
}

/// `φ` as a function of `x = L Δk / 2`.
pub fn phasematching_from_x(x: f64, shape: PhasematchingShape, gamma: f64) -> Complex64 {
    let magnitude = match shape {
        PhasematchingShape::SincExact => {
            if x == 0.0 {
                1.0
            } else {
                x.sin() / x
            }
        }
        PhasematchingShape::GaussianApprox => (-gamma * x * x).exp(),
    };
    Complex64::from_polar(1.0, -x) * magnitude
}

/// Inverse group velocities `dk/dω` (s/µm) of the three fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupDelays {
    pub pump: f64,
    pub signal: f64,
    pub idler: f64,
}

/// First-order expansion of `Δk` about `(signal_omega0, idler_omega0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearMismatch {
    pub signal_omega0: f64,
    pub idler_omega0: f64,
    pub delta_k0: f64,
    pub delays: GroupDelays,
}

/// A process bound to its medium; all JSA ingredients are evaluated here.
#[derive(Clone)]
pub struct Process {
    config: ProcessConfig,
    medium: Arc<dyn Medium>,
    linear: Option<LinearMismatch>,
}

impl std::fmt::Debug for Process {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Process")
            .field("config", &self.config)
            .field("medium", &self.medium.label())
            .field("linear", &self.linear)
            .finish()
    }
}

impl Process {
    /// Process in the configured waveguide using the built-in Sellmeier data.
    pub fn new(config: ProcessConfig) -> Result<Self> {
        Self::with_library(config, &SellmeierLibrary::builtin())
    }

    pub fn with_library(config: ProcessConfig, library: &SellmeierLibrary) -> Result<Self> {
        let model = library.model(config.material)?;
        Self::with_model(config, model)
    }

    pub fn with_model(config: ProcessConfig, model: DispersionModel) -> Result<Self> {
        let medium = GuidedMedium::new(config.geometry, model);
        Self::with_medium(config, Arc::new(medium))
    }

    /// Process over an arbitrary medium. `config.material` is then only a label.
    pub fn with_medium(config: ProcessConfig, medium: Arc<dyn Medium>) -> Result<Self> {
        config.validate()?;
        let mut process = Process {
            config,
            medium,
            linear: None,
        };
        if process.config.mismatch == MismatchModel::Linearized {
            let (ws, wi) = process.phasematched_point()?;
            process.linear = Some(LinearMismatch {
                signal_omega0: ws,
                idler_omega0: wi,
                delta_k0: process.delta_k(ws, wi)?,
                delays: process.group_delays(ws, wi)?,
            });
        }
        Ok(process)
    }

    /// Replace the mismatch by a prescribed linear model (synthetic studies).
    pub fn with_linear_mismatch(mut self, linear: LinearMismatch) -> Self {
        self.config.mismatch = MismatchModel::Linearized;
        self.linear = Some(linear);
        self
    }

    /// Same process with a different pump width.
    pub fn with_pump_fwhm(&self, pump_fwhm_nm: f64) -> Result<Self> {
        let mut next = self.clone();
        next.config.pump_fwhm_nm = pump_fwhm_nm;
        next.config.validate()?;
        Ok(next)
    }

    pub fn config(&self) -> &ProcessConfig {
        &self.config
    }

    pub fn medium(&self) -> &dyn Medium {
        self.medium.as_ref()
    }

    pub fn linear_mismatch(&self) -> Option<&LinearMismatch> {
        self.linear.as_ref()
    }

    pub fn length_um(&self) -> f64 {
        self.config.geometry.length_um()
    }

    pub fn pump_omega(&self) -> f64 {
        omega_from_nm(self.config.pump_center_nm)
    }

    pub fn sigma(&self) -> f64 {
        pump_sigma(&self.config)
    }

    pub fn grating_wavevector(&self) -> f64 {
        2.0 * PI / self.config.grating_period_um
    }

    /// Real Gaussian pump amplitude, 1 at `ω_s + ω_i = ω_p`.
    pub fn pump_envelope(&self, signal_omega: f64, idler_omega: f64) -> f64 {
        let detuning = signal_omega + idler_omega - self.pump_omega();
        let sigma = self.sigma();
        (-detuning * detuning / (2.0 * sigma * sigma)).exp()
    }

    fn combine(&self, k_pump: f64, k_signal: f64, k_idler: f64) -> f64 {
        k_pump - self.config.signal_direction.sign() * k_signal
            - self.config.idler_direction.sign() * k_idler
            - self.grating_wavevector()
    }

    /// Wavevector mismatch in rad/µm.
    pub fn delta_k(&self, signal_omega: f64, idler_omega: f64) -> Result<f64> {
        if let Some(lin) = &self.linear {
            return Ok(self.linear_delta_k(lin, signal_omega, idler_omega));
        }
        let kp = self.medium.wavevector(signal_omega + idler_omega)?;
        let ks = self.medium.wavevector(signal_omega)?;
        let ki = self.medium.wavevector(idler_omega)?;
        Ok(self.combine(kp, ks, ki))
    }

    fn linear_delta_k(&self, lin: &LinearMismatch, signal_omega: f64, idler_omega: f64) -> f64 {
        let (ds, di) = self.slopes_from(&lin.delays);
        lin.delta_k0 + ds * (signal_omega - lin.signal_omega0) + di * (idler_omega - lin.idler_omega0)
    }

    pub fn phasematching(&self, signal_omega: f64, idler_omega: f64) -> Result<Complex64> {
        let dk = self.delta_k(signal_omega, idler_omega)?;
        Ok(self.phasematching_from_delta_k(dk))
    }

    fn phasematching_from_delta_k(&self, delta_k: f64) -> Complex64 {
        let x = 0.5 * self.length_um() * delta_k;
        phasematching_from_x(x, self.config.phasematching_shape, self.config.gaussian_gamma)
    }

    /// Unnormalized `α · φ`.
    pub fn amplitude(&self, signal_omega: f64, idler_omega: f64) -> Result<Complex64> {
        Ok(self.phasematching(signal_omega, idler_omega)?
            * self.pump_envelope(signal_omega, idler_omega))
    }

    /// Group delays at the pump (`ω_s + ω_i`), signal and idler frequencies.
    pub fn group_delays(&self, signal_omega: f64, idler_omega: f64) -> Result<GroupDelays> {
        if let Some(lin) = &self.linear {
            return Ok(lin.delays);
        }
        Ok(GroupDelays {
            pump: self.medium.group_delay(signal_omega + idler_omega)?,
            signal: self.medium.group_delay(signal_omega)?,
            idler: self.medium.group_delay(idler_omega)?,
        })
    }

    fn slopes_from(&self, d: &GroupDelays) -> (f64, f64) {
        (
            d.pump - self.config.signal_direction.sign() * d.signal,
            d.pump - self.config.idler_direction.sign() * d.idler,
        )
    }

    /// `(∂Δk/∂ω_s, ∂Δk/∂ω_i)`; for the default directions
    /// `(k'_p − k'_s, k'_p + k'_i)`.
    pub fn mismatch_slopes(&self, signal_omega: f64, idler_omega: f64) -> Result<(f64, f64)> {
        let d = self.group_delays(signal_omega, idler_omega)?;
        Ok(self.slopes_from(&d))
    }

    /// Signal and idler frequencies on the energy-conservation line through
    /// the pump center where `Δk = 0`, searched within ±100 nm of degeneracy.
    pub fn phasematched_point(&self) -> Result<(f64, f64)> {
        let wp = self.pump_omega();
        let center = 2.0 * self.config.pump_center_nm;
        let (lo, hi) = (center - PHASEMATCH_WINDOW_NM, center + PHASEMATCH_WINDOW_NM);
        let mismatch = |signal_nm: f64| {
            let ws = omega_from_nm(signal_nm);
            self.delta_k(ws, wp - ws)
        };
        let root = bisect(mismatch, lo, hi, 1e-10)?.ok_or(Error::NoPhasematch {
            pump_nm: self.config.pump_center_nm,
            lo_nm: lo,
            hi_nm: hi,
        })?;
        let ws = omega_from_nm(root);
        Ok((ws, wp - ws))
    }

    /// Angle of the phasematching ridge against the signal axis, in degrees:
    /// `θ = −atan[(k'_p − k'_s)/(k'_p + k'_i)]` for the default directions.
    pub fn phasematching_angle(&self, signal_omega: f64, idler_omega: f64) -> Result<f64> {
        let (ds, di) = self.mismatch_slopes(signal_omega, idler_omega)?;
        Ok(-(ds / di).atan().to_degrees())
    }
}

/// Discretized, unit-normalized joint spectral amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpectralAmplitude {
    pub grid: FrequencyGrid,
    /// Rows follow the signal axis, columns the idler axis.
    pub amplitude: Array2<Complex64>,
}

impl JointSpectralAmplitude {
    /// Normalize `amplitude` so that `Σ |f|² Δω_s Δω_i = 1`.
    pub fn from_amplitude(grid: FrequencyGrid, mut amplitude: Array2<Complex64>) -> Result<Self> {
        if amplitude.dim() != (grid.signal.len(), grid.idler.len()) {
            return Err(Error::invalid(
                "amplitude",
                format!(
                    "shape {:?} does not match grid {}x{}",
                    amplitude.dim(),
                    grid.signal.len(),
                    grid.idler.len()
                ),
            ));
        }
        if amplitude.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("amplitude", "contains non-finite values"));
        }
        let norm = norm_squared(&amplitude, grid.cell_area()).sqrt();
        if !(norm > 0.0) {
            return Err(Error::NotNormalized { norm });
        }
        amplitude.mapv_inplace(|z| z / norm);
        Ok(JointSpectralAmplitude { grid, amplitude })
    }

    pub fn from_fn(
        grid: FrequencyGrid,
        mut f: impl FnMut(f64, f64) -> Complex64,
    ) -> Result<Self> {
        let amplitude = Array2::from_shape_fn((grid.signal.len(), grid.idler.len()), |(i, j)| {
            f(grid.signal[i], grid.idler[j])
        });
        Self::from_amplitude(grid, amplitude)
    }

    /// `Σ |f|² Δω_s Δω_i`.
    pub fn norm_squared(&self) -> f64 {
        norm_squared(&self.amplitude, self.grid.cell_area())
    }

    pub fn shape(&self) -> (usize, usize) {
        self.amplitude.dim()
    }
}

fn norm_squared(amplitude: &Array2<Complex64>, cell_area: f64) -> f64 {
    let sq: Vec<f64> = amplitude.iter().map(|z| z.norm_sqr()).collect();
    pairwise_sum(&sq) * cell_area
}

/// Evaluate `α · φ` on `grid` and normalize. Fails with
/// [`Error::GridTooCoarse`] when either marginal has fewer than
/// [`MIN_SAMPLES_PER_FWHM`] samples across its FWHM.
pub fn build_jsa(grid: &FrequencyGrid, process: &Process) -> Result<JointSpectralAmplitude> {
    let jsa = build_jsa_unchecked(grid, process)?;
    check_sampling(&jsa, MIN_SAMPLES_PER_FWHM)?;
    Ok(jsa)
}

/// [`build_jsa`] without the undersampling check.
pub fn build_jsa_unchecked(grid: &FrequencyGrid, process: &Process) -> Result<JointSpectralAmplitude> {
    let (ns, ni) = (grid.signal.len(), grid.idler.len());
    let mut amplitude = Array2::<Complex64>::zeros((ns, ni));
    if process.linear.is_some() {
        for (i, &ws) in grid.signal.iter().enumerate() {
            for (j, &wi) in grid.idler.iter().enumerate() {
                amplitude[(i, j)] = process.amplitude(ws, wi)?;
            }
        }
    } else {
        let medium = process.medium();
        let ks = grid
            .signal
            .iter()
            .map(|&w| medium.wavevector(w))
            .collect::<Result<Vec<_>>>()?;
        let ki = grid
            .idler
            .iter()
            .map(|&w| medium.wavevector(w))
            .collect::<Result<Vec<_>>>()?;
        for (i, &ws) in grid.signal.iter().enumerate() {
            for (j, &wi) in grid.idler.iter().enumerate() {
                let kp = medium.wavevector(ws + wi)?;
                let dk = process.combine(kp, ks[i], ki[j]);
                amplitude[(i, j)] =
                    process.phasematching_from_delta_k(dk) * process.pump_envelope(ws, wi);
            }
        }
    }
    JointSpectralAmplitude::from_amplitude(grid.clone(), amplitude)
}

fn check_sampling(jsa: &JointSpectralAmplitude, required: f64) -> Result<()> {
    let (signal, idler) = marginal_spectra(jsa);
    let mut samples = f64::INFINITY;
    if let Ok(w) = signal.fwhm() {
        samples = samples.min(w / jsa.grid.signal_step());
    }
    if let Ok(w) = idler.fwhm() {
        samples = samples.min(w / jsa.grid.idler_step());
    }
    if samples < required {
        return Err(Error::GridTooCoarse { samples, required });
    }
    Ok(())
}
