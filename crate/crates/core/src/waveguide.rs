//! Guided-mode dispersion of a buried rectangular channel waveguide.
//!
//! The fundamental mode is treated with a separable (Marcatili-style)
//! effective-index approximation: each transverse axis is solved as a
//! symmetric step-index slab and the two transverse wavenumbers are combined,
//!
//! `n_eff² = N_x² + N_y² − n_core²`,
//!
//! where `N_x`, `N_y` are the fundamental slab indices for the width and the
//! height. The cladding surrounds the core on all four sides with index
//! `n_core − Δn`, and `Δn` does not depend on wavelength.

use serde::{Deserialize, Serialize};

use crate::dispersion::{DispersionModel, Medium};
use crate::error::{Error, Result};
use crate::numeric::bisect;
use crate::units::{um_from_omega, C_UM_PER_S};

use std::f64::consts::FRAC_PI_2;

/// Bracket tolerance on the normalized transverse parameter `u`.
pub const SLAB_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaveguideGeometry {
    pub width_um: f64,
    pub height_um: f64,
    pub length_mm: f64,
    /// Core minus cladding refractive index.
    pub index_step: f64,
}

impl Default for WaveguideGeometry {
    fn default() -> Self {
        WaveguideGeometry {
            width_um: 4.0,
            height_um: 4.0,
            length_mm: 5.0,
            index_step: 0.01,
        }
    }
}

impl WaveguideGeometry {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("width_um", self.width_um),
            ("height_um", self.height_um),
            ("length_mm", self.length_mm),
            ("index_step", self.index_step),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(name, format!("must be positive, got {value}")));
            }
        }
        Ok(())
    }

    pub fn length_um(&self) -> f64 {
        self.length_mm * 1e3
    }
}

/// Fundamental even-mode solution `u` of the symmetric slab,
/// `u tan u = √(V² − u²)`, for normalized frequency `v`.
///
/// The fundamental mode of a symmetric slab has no cutoff, so a root always
/// exists in `(0, min(V, π/2))`.
pub fn slab_fundamental_u(v: f64) -> f64 {
    if v <= 0.0 {
        return 0.0;
    }
    let hi = v.min(FRAC_PI_2);
    // u sin u − w cos u is increasing on the bracket and avoids the tan pole.
    let f = |u: f64| -> Result<f64, ()> {
        let w = (v * v - u * u).max(0.0).sqrt();
        Ok(u * u.sin() - w * u.cos())
    };
    bisect(f, 0.0, hi, SLAB_TOLERANCE)
        .ok()
        .flatten()
        .unwrap_or(hi)
}

/// Fundamental-mode index of a symmetric slab of `thickness_um`.
pub fn slab_index(thickness_um: f64, n_core: f64, n_clad: f64, wavelength_um: f64) -> f64 {
    let k0 = 2.0 * std::f64::consts::PI / wavelength_um;
    let half = 0.5 * thickness_um * k0;
    let v = half * (n_core * n_core - n_clad * n_clad).sqrt();
    let u = slab_fundamental_u(v);
    (n_core * n_core - (u / half).powi(2)).sqrt()
}

/// Effective index of the fundamental channel mode at `wavelength_um`.
pub fn effective_index(
    geometry: &WaveguideGeometry,
    model: &DispersionModel,
    wavelength_um: f64,
) -> Result<f64> {
    let n_core = model.refractive_index(wavelength_um)?;
    let n_clad = n_core - geometry.index_step;
    let nx = slab_index(geometry.width_um, n_core, n_clad, wavelength_um);
    let ny = if geometry.height_um == geometry.width_um {
        nx
    } else {
        slab_index(geometry.height_um, n_core, n_clad, wavelength_um)
    };
    let n_eff_sq = nx * nx + ny * ny - n_core * n_core;
    if n_eff_sq <= n_clad * n_clad {
        return Err(Error::ModeCutoff {
            wavelength_um,
            n_eff: n_eff_sq.max(0.0).sqrt(),
            n_clad,
        });
    }
    let n_eff = n_eff_sq.sqrt();
    debug_assert!(n_eff < n_core && n_eff > n_clad);
    Ok(n_eff)
}

/// Guided wavevector `n_eff(λ) ω / c` in rad/µm.
pub fn corrected_wavevector(
    geometry: &WaveguideGeometry,
    model: &DispersionModel,
    omega: f64,
) -> Result<f64> {
    let n_eff = effective_index(geometry, model, um_from_omega(omega))?;
    Ok(n_eff * omega / C_UM_PER_S)
}

/// A crystal seen through the fundamental mode of a channel waveguide.
#[derive(Debug, Clone, PartialEq)]
pub struct GuidedMedium {
    pub geometry: WaveguideGeometry,
    pub model: DispersionModel,
}

impl GuidedMedium {
    pub fn new(geometry: WaveguideGeometry, model: DispersionModel) -> Self {
        GuidedMedium { geometry, model }
    }

    pub fn effective_index(&self, wavelength_um: f64) -> Result<f64> {
        effective_index(&self.geometry, &self.model, wavelength_um)
    }
}

impl Medium for GuidedMedium {
    fn label(&self) -> String {
        format!(
            "{} in {}x{} µm guide (Δn = {})",
            self.model.label(),
            self.geometry.width_um,
            self.geometry.height_um,
            self.geometry.index_step
        )
    }

    fn wavevector(&self, omega: f64) -> Result<f64> {
        corrected_wavevector(&self.geometry, &self.model, omega)
    }
}
