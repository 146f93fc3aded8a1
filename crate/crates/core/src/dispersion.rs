//! Bulk refractive index, wavevector and group velocity from Sellmeier fits.
//!
//! Coefficient sets live in a TOML data file (`data/sellmeier.toml` is
//! compiled in; alternates can be loaded from disk). Models are evaluated at
//! a fixed room temperature.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{omega_width_from_nm, um_from_omega, C_UM_PER_S};

const BUILTIN_SELLMEIER: &str = include_str!("../data/sellmeier.toml");

/// Default finite-difference step for `dk/dω`, expressed as a wavelength step.
pub const GROUP_DELAY_STEP_NM: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Material {
    /// Congruent lithium niobate, extraordinary polarization.
    #[serde(rename = "LN_e")]
    LnE,
    /// Potassium titanyl phosphate, z polarization.
    #[serde(rename = "KTP_z")]
    KtpZ,
}

impl Material {
    pub const ALL: [Material; 2] = [Material::LnE, Material::KtpZ];

    pub fn id(self) -> &'static str {
        match self {
            Material::LnE => "LN_e",
            Material::KtpZ => "KTP_z",
        }
    }
}

impl fmt::Display for Material {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Material {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "LN_e" => Ok(Material::LnE),
            "KTP_z" => Ok(Material::KtpZ),
            other => Err(Error::UnknownMaterial(other.to_string())),
        }
    }
}

/// `b λ² / (λ² − c)` term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resonance {
    pub b: f64,
    pub c: f64,
}

/// `d / (λ² − e)` term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pole {
    pub d: f64,
    pub e: f64,
}

/// Named Sellmeier coefficients:
/// `n² = a + Σ b λ²/(λ² − c) + Σ d/(λ² − e) − ir λ²`, λ in µm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SellmeierCoefficients {
    pub a: f64,
    #[serde(default)]
    pub ir: f64,
    #[serde(default)]
    pub resonances: Vec<Resonance>,
    #[serde(default)]
    pub poles: Vec<Pole>,
}

impl SellmeierCoefficients {
    fn index_squared(&self, wavelength_um: f64) -> f64 {
        let l2 = wavelength_um * wavelength_um;
        let mut n2 = self.a - self.ir * l2;
        for r in &self.resonances {
            n2 += r.b * l2 / (l2 - r.c);
        }
        for p in &self.poles {
            n2 += p.d / (l2 - p.e);
        }
        n2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelRecord {
    material: Material,
    name: String,
    citation: String,
    valid_range_um: [f64; 2],
    a: f64,
    #[serde(default)]
    ir: f64,
    #[serde(default)]
    resonances: Vec<Resonance>,
    #[serde(default)]
    poles: Vec<Pole>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    model: Vec<ModelRecord>,
}

/// Refractive-index model for one material and polarization.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionModel {
    /// `None` for synthetic models such as [`DispersionModel::constant`].
    pub material: Option<Material>,
    pub name: String,
    pub coefficients: SellmeierCoefficients,
    pub valid_range_um: (f64, f64),
    pub source_note: String,
}

impl DispersionModel {
    /// Dispersionless medium with `n(λ) = index`, valid over 0.1–10 µm.
    pub fn constant(index: f64) -> Self {
        DispersionModel {
            material: None,
            name: format!("constant n = {index}"),
            coefficients: SellmeierCoefficients {
                a: index * index,
                ir: 0.0,
                resonances: Vec::new(),
                poles: Vec::new(),
            },
            valid_range_um: (0.1, 10.0),
            source_note: "synthetic".to_string(),
        }
    }

    /// Built-in model for `material`.
    pub fn builtin(material: Material) -> Self {
        SellmeierLibrary::builtin()
            .get(material)
            .cloned()
            .expect("built-in Sellmeier data covers every material")
    }

    pub fn label(&self) -> &str {
        self.material.map(Material::id).unwrap_or(&self.name)
    }

    pub fn contains(&self, wavelength_um: f64) -> bool {
        let (lo, hi) = self.valid_range_um;
        wavelength_um >= lo && wavelength_um <= hi
    }

    pub fn check_range(&self, wavelength_um: f64) -> Result<()> {
        if self.contains(wavelength_um) {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                model: self.label().to_string(),
                wavelength_um,
                min_um: self.valid_range_um.0,
                max_um: self.valid_range_um.1,
            })
        }
    }

    pub fn refractive_index(&self, wavelength_um: f64) -> Result<f64> {
        self.check_range(wavelength_um)?;
        Ok(self.coefficients.index_squared(wavelength_um).sqrt())
    }

    /// Bulk wavevector `k = n ω / c` in rad/µm.
    pub fn wavevector(&self, omega: f64) -> Result<f64> {
        let n = self.refractive_index(um_from_omega(omega))?;
        Ok(n * omega / C_UM_PER_S)
    }

    pub fn group_delay(&self, omega: f64) -> Result<f64> {
        Medium::group_delay(self, omega)
    }

    pub fn group_velocity(&self, omega: f64) -> Result<f64> {
        Medium::group_velocity(self, omega)
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.valid_range_um;
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::SellmeierData(format!(
                "{}: invalid valid_range_um [{lo}, {hi}]",
                self.label()
            )));
        }
        // Poles inside the range would make n(λ) blow up or go imaginary.
        for i in 0..=400 {
            let l = lo + (hi - lo) * f64::from(i) / 400.0;
            let n2 = self.coefficients.index_squared(l);
            if !n2.is_finite() || n2 <= 1.0 {
                return Err(Error::SellmeierData(format!(
                    "{}: n^2 = {n2} at {l} µm",
                    self.label()
                )));
            }
        }
        Ok(())
    }
}

/// Anything with a wavevector `k(ω)`: bulk crystals and guided modes.
pub trait Medium: Send + Sync {
    fn label(&self) -> String;

    /// Wavevector in rad/µm at angular frequency `omega` (rad/s).
    fn wavevector(&self, omega: f64) -> Result<f64>;

    /// Inverse group velocity `k' = dk/dω` in s/µm, by central difference
    /// with a step equivalent to [`GROUP_DELAY_STEP_NM`].
    fn group_delay(&self, omega: f64) -> Result<f64> {
        let step = omega_width_from_nm(GROUP_DELAY_STEP_NM, um_from_omega(omega) * 1e3);
        central_difference(self, omega, step)
    }

    /// Group velocity in µm/s.
    fn group_velocity(&self, omega: f64) -> Result<f64> {
        Ok(1.0 / self.group_delay(omega)?)
    }
}

impl Medium for DispersionModel {
    fn label(&self) -> String {
        DispersionModel::label(self).to_string()
    }

    fn wavevector(&self, omega: f64) -> Result<f64> {
        DispersionModel::wavevector(self, omega)
    }
}

/// `(k(ω + h) − k(ω − h)) / 2h`.
pub fn central_difference<M: Medium + ?Sized>(medium: &M, omega: f64, step: f64) -> Result<f64> {
    let plus = medium.wavevector(omega + step)?;
    let minus = medium.wavevector(omega - step)?;
    Ok((plus - minus) / (2.0 * step))
}

/// A set of dispersion models keyed by material.
#[derive(Debug, Clone)]
pub struct SellmeierLibrary {
    models: Vec<DispersionModel>,
}

impl SellmeierLibrary {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_SELLMEIER).expect("built-in Sellmeier data parses")
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::SellmeierData(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: ModelFile =
            toml::from_str(text).map_err(|e| Error::SellmeierData(e.to_string()))?;
        let models = file
            .model
            .into_iter()
            .map(|r| DispersionModel {
                material: Some(r.material),
                name: r.name,
                coefficients: SellmeierCoefficients {
                    a: r.a,
                    ir: r.ir,
                    resonances: r.resonances,
                    poles: r.poles,
                },
                valid_range_um: (r.valid_range_um[0], r.valid_range_um[1]),
                source_note: r.citation,
            })
            .collect::<Vec<_>>();
        for m in &models {
            m.validate()?;
        }
        Ok(SellmeierLibrary { models })
    }

    pub fn get(&self, material: Material) -> Option<&DispersionModel> {
        self.models.iter().find(|m| m.material == Some(material))
    }

    pub fn model(&self, material: Material) -> Result<DispersionModel> {
        self.get(material)
            .cloned()
            .ok_or_else(|| Error::UnknownMaterial(material.id().to_string()))
    }

    pub fn models(&self) -> &[DispersionModel] {
        &self.models
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::omega_from_um;
    use std::f64::consts::PI;

    #[test]
    fn ln_index_at_telecom_matches_published_tables() {
        // Published congruent LN extraordinary index at 1550 nm: 2.138.
        let ln = DispersionModel::builtin(Material::LnE);
        let n = ln.refractive_index(1.550).unwrap();
        assert!((n - 2.138).abs() <= 1e-3, "n = {n}");
    }

    #[test]
    fn continuity_probe() {
        let ln = DispersionModel::builtin(Material::LnE);
        let a = ln.refractive_index(1.2).unwrap();
        let b = ln.refractive_index(1.2 + 1e-9).unwrap();
        assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn ktp_normal_dispersion() {
        let ktp = DispersionModel::builtin(Material::KtpZ);
        assert!(ktp.refractive_index(0.775).unwrap() > ktp.refractive_index(1.550).unwrap());
    }

    #[test]
    fn out_of_range_is_reported() {
        let ln = DispersionModel::builtin(Material::LnE);
        match ln.refractive_index(0.3) {
            Err(Error::OutOfRange { min_um, .. }) => assert_eq!(min_um, 0.35),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn constant_stub_wavevector() {
        let stub = DispersionModel::constant(2.0);
        let w = omega_from_um(1.0);
        let k = stub.wavevector(w).unwrap();
        assert!((k - 4.0 * PI).abs() < 1e-12);
        let k2 = stub.wavevector(2.0 * w).unwrap();
        assert!((k2 - 2.0 * k).abs() < 1e-12);
    }

    #[test]
    fn constant_stub_group_velocity_is_c_over_n() {
        let stub = DispersionModel::constant(2.0);
        let v = stub.group_velocity(omega_from_um(1.0)).unwrap();
        assert!((v - C_UM_PER_S / 2.0).abs() / v < 1e-9);
    }

    #[test]
    fn ln_wavevector_at_pump() {
        let ln = DispersionModel::builtin(Material::LnE);
        let n = ln.refractive_index(0.775).unwrap();
        let k = ln.wavevector(omega_from_um(0.775)).unwrap();
        assert!((k - 2.0 * PI * n / 0.775).abs() < 1e-9);
    }

    #[test]
    fn group_delay_step_convergence() {
        let ln = DispersionModel::builtin(Material::LnE);
        let w = omega_from_um(1.55);
        let h = omega_width_from_nm(GROUP_DELAY_STEP_NM, 1550.0);
        let full = central_difference(&ln, w, h).unwrap();
        let half = central_difference(&ln, w, h / 2.0).unwrap();
        assert!(((full - half) / half).abs() < 1e-8);
    }

    #[test]
    fn stencil_leaving_range_is_out_of_range() {
        let ln = DispersionModel::builtin(Material::LnE);
        assert!(matches!(
            ln.group_delay(omega_from_um(0.35)),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn malformed_data_is_rejected() {
        let bad = r#"
[[model]]
material = "LN_e"
name = "x"
citation = "x"
valid_range_um = [0.35, 5.0]
a = 1.0
bogus = 3
"#;
        assert!(matches!(
            SellmeierLibrary::parse(bad),
            Err(Error::SellmeierData(_))
        ));
        let pole_inside = r#"
[[model]]
material = "LN_e"
name = "x"
citation = "x"
valid_range_um = [0.35, 5.0]
a = 1.0
resonances = [ { b = 1.0, c = 1.0 } ]
"#;
        assert!(SellmeierLibrary::parse(pole_inside).is_err());
    }
}
