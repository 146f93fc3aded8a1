//! Unit conversions between vacuum wavelength and angular frequency.

use std::f64::consts::PI;

/// Speed of light in vacuum, µm/s.
pub const C_UM_PER_S: f64 = 299_792_458.0e6;

pub fn omega_from_um(wavelength_um: f64) -> f64 {
    2.0 * PI * C_UM_PER_S / wavelength_um
}

pub fn um_from_omega(omega: f64) -> f64 {
    2.0 * PI * C_UM_PER_S / omega
}

pub fn omega_from_nm(wavelength_nm: f64) -> f64 {
    omega_from_um(wavelength_nm * 1e-3)
}

pub fn nm_from_omega(omega: f64) -> f64 {
    um_from_omega(omega) * 1e3
}

/// Angular-frequency width corresponding to a small wavelength width at `center_nm`.
pub fn omega_width_from_nm(width_nm: f64, center_nm: f64) -> f64 {
    let center_um = center_nm * 1e-3;
    2.0 * PI * C_UM_PER_S * (width_nm * 1e-3) / (center_um * center_um)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let w = omega_from_nm(1550.0);
        assert!((nm_from_omega(w) - 1550.0).abs() < 1e-10);
        assert!((w - 1.215_259e15).abs() / w < 1e-6);
    }
}
