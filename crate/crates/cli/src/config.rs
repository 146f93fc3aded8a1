//! Run configuration: one TOML file with a section per concern, plus
//! `--set key=value` overrides applied before deserialization.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use counterpdc::design::{degenerate_config, OptimizerSettings, DEGENERATE_BOUNDS_NM, TUNING_BOUNDS_NM};
use counterpdc::dispersion::{Material, SellmeierLibrary};
use counterpdc::jsa::{
    Direction, GridSettings, MismatchModel, PhasematchingShape, ProcessConfig, DEFAULT_GAUSSIAN_GAMMA,
};
use counterpdc::schmidt::DEFAULT_MAX_MODES;
use counterpdc::waveguide::WaveguideGeometry;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub material: MaterialSection,
    pub waveguide: WaveguideGeometry,
    pub pump: PumpSection,
    pub grating: GratingSection,
    pub phasematching: PhasematchingSection,
    pub grid: GridSettings,
    pub command: CommandSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialSection {
    pub name: Material,
    /// Replacement Sellmeier table; the built-in one is used when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sellmeier_file: Option<PathBuf>,
}

impl Default for MaterialSection {
    fn default() -> Self {
        MaterialSection {
            name: Material::LnE,
            sellmeier_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PumpSection {
    pub center_nm: f64,
    pub fwhm_nm: f64,
}

impl Default for PumpSection {
    fn default() -> Self {
        PumpSection {
            center_nm: 775.0,
            fwhm_nm: 0.58,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GratingSection {
    /// Poling period; solved for degenerate emission when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period_um: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhasematchingSection {
    pub shape: PhasematchingShape,
    pub gaussian_gamma: f64,
    pub mismatch: MismatchModel,
    pub signal_direction: Direction,
    pub idler_direction: Direction,
}

impl Default for PhasematchingSection {
    fn default() -> Self {
        PhasematchingSection {
            shape: PhasematchingShape::SincExact,
            gaussian_gamma: DEFAULT_GAUSSIAN_GAMMA,
            mismatch: MismatchModel::Exact,
            signal_direction: Direction::Forward,
            idler_direction: Direction::Backward,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CommandSection {
    pub schmidt: SchmidtSection,
    pub grating: GratingCommand,
    pub optimize_pump: OptimizeSection,
    pub sweep_degenerate: DegenerateSweepSection,
    pub sweep_tuning: TuningSweepSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchmidtSection {
    pub max_modes: usize,
}

impl Default for SchmidtSection {
    fn default() -> Self {
        SchmidtSection {
            max_modes: DEFAULT_MAX_MODES,
        }
    }
}

/// Target wavelengths for `grating`; degenerate at twice the pump when absent.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GratingCommand {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signal_nm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub idler_nm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeSection {
    pub bounds_nm: [f64; 2],
    pub tolerance_nm: f64,
    pub spot_checks: usize,
}

impl Default for OptimizeSection {
    fn default() -> Self {
        OptimizeSection {
            bounds_nm: [DEGENERATE_BOUNDS_NM.0, DEGENERATE_BOUNDS_NM.1],
            tolerance_nm: 1e-3,
            spot_checks: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DegenerateSweepSection {
    /// Degeneracy (signal = idler) wavelengths; the pump sits at half.
    pub start_nm: f64,
    pub stop_nm: f64,
    pub step_nm: f64,
    pub bounds_nm: [f64; 2],
}

impl Default for DegenerateSweepSection {
    fn default() -> Self {
        DegenerateSweepSection {
            start_nm: 800.0,
            stop_nm: 1600.0,
            step_nm: 50.0,
            bounds_nm: [DEGENERATE_BOUNDS_NM.0, DEGENERATE_BOUNDS_NM.1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TuningSweepSection {
    /// Pump wavelength whose degenerate grating is held fixed.
    pub reference_pump_nm: f64,
    pub start_nm: f64,
    pub stop_nm: f64,
    pub step_nm: f64,
    pub bounds_nm: [f64; 2],
}

impl Default for TuningSweepSection {
    fn default() -> Self {
        TuningSweepSection {
            reference_pump_nm: 775.0,
            start_nm: 765.0,
            stop_nm: 785.0,
            step_nm: 5.0,
            bounds_nm: [TUNING_BOUNDS_NM.0, TUNING_BOUNDS_NM.1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub format: Format,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
            format: Format::Csv,
        }
    }
}

/// Invalid configuration; the message names the offending key.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn fail<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// Read `path` (or start from defaults), apply overrides, deserialize.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| ConfigError(format!("cannot read config {}: {e}", p.display())))?;
            text.parse::<toml::Table>()
                .map_err(|e| ConfigError(format!("{}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    for item in overrides {
        apply_override(&mut table, item)?;
    }
    let text = toml::to_string(&table).map_err(|e| ConfigError(e.to_string()))?;
    toml::from_str(&text).map_err(|e: toml::de::Error| ConfigError(describe(&e)))
}

fn describe(e: &toml::de::Error) -> String {
    e.message().trim().to_string()
}

/// `a.b.c=value`; `value` is read as a TOML literal, or as a bare string
/// when it does not parse as one.
pub fn apply_override(table: &mut toml::Table, item: &str) -> Result<(), ConfigError> {
    let Some((key, raw)) = item.split_once('=') else {
        return fail(format!("override `{item}` is not of the form key=value"));
    };
    let key = key.trim();
    let raw = raw.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if key.is_empty() || parts.iter().any(|p| p.is_empty()) {
        return fail(format!("override key `{key}` is malformed"));
    }
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));

    let mut node = table;
    for part in &parts[..parts.len() - 1] {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = match entry {
            toml::Value::Table(t) => t,
            _ => return fail(format!("override `{key}`: `{part}` is not a section")),
        };
    }
    node.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl RunConfig {
    pub fn library(&self) -> Result<SellmeierLibrary, ConfigError> {
        match &self.material.sellmeier_file {
            Some(p) => SellmeierLibrary::from_path(p)
                .map_err(|e| ConfigError(format!("material.sellmeier_file: {e}"))),
            None => Ok(SellmeierLibrary::builtin()),
        }
    }

    /// Process description with the grating as configured (infinite if unset).
    fn raw_process(&self) -> ProcessConfig {
        ProcessConfig {
            material: self.material.name,
            geometry: self.waveguide,
            pump_center_nm: self.pump.center_nm,
            pump_fwhm_nm: self.pump.fwhm_nm,
            grating_period_um: self.grating.period_um.unwrap_or(f64::INFINITY),
            signal_direction: self.phasematching.signal_direction,
            idler_direction: self.phasematching.idler_direction,
            phasematching_shape: self.phasematching.shape,
            gaussian_gamma: self.phasematching.gaussian_gamma,
            mismatch: self.phasematching.mismatch,
        }
    }

    /// Process description with the grating resolved; this is numerical work
    /// when the period has to be solved.
    pub fn process(&self, library: &SellmeierLibrary) -> counterpdc::Result<ProcessConfig> {
        let cfg = self.raw_process();
        match self.grating.period_um {
            Some(_) => Ok(cfg),
            None => degenerate_config(&cfg, library),
        }
    }

    pub fn optimizer(&self) -> OptimizerSettings {
        OptimizerSettings {
            tolerance_nm: self.command.optimize_pump.tolerance_nm,
            spot_checks: self.command.optimize_pump.spot_checks,
            max_modes: self.command.schmidt.max_modes,
            grid: self.grid,
        }
    }

    /// Every check that can be made without running the numerics.
    pub fn validate(&self) -> Result<SellmeierLibrary, ConfigError> {
        let library = self.library()?;
        let key = |name: &str| -> &str {
            match name {
                "width_um" | "height_um" | "length_mm" | "index_step" => "waveguide",
                "pump_center_nm" => "pump.center_nm",
                "pump_fwhm_nm" | "pump" => "pump.fwhm_nm",
                "grating_period" => "grating.period_um",
                "gaussian_gamma" => "phasematching.gaussian_gamma",
                _ => "",
            }
        };
        if let Err(e) = self.raw_process().validate() {
            let name = match &e {
                counterpdc::Error::InvalidParameter { name, .. } => key(name),
                _ => "",
            };
            return fail(if name.is_empty() { e.to_string() } else { format!("{name}: {e}") });
        }
        if let Some(p) = self.grating.period_um {
            if !(p > 0.0 && p.is_finite()) {
                return fail(format!("grating.period_um: invalid parameter `grating_period`: must be positive, got {p}"));
            }
        }

        let model = library
            .model(self.material.name)
            .map_err(|e| ConfigError(format!("material.name: {e}")))?;
        let pump_um = self.pump.center_nm * 1e-3;
        model
            .check_range(pump_um)
            .map_err(|e| ConfigError(format!("pump.center_nm: {e}")))?;
        model
            .check_range(2.0 * pump_um)
            .map_err(|e| ConfigError(format!("pump.center_nm: downconverted light at {} nm: {e}", 2.0 * self.pump.center_nm)))?;

        let g = &self.grid;
        if g.n_signal < 2 || g.n_idler < 2 {
            return fail("grid: n_signal and n_idler must be at least 2");
        }
        if !(g.span_factor > 0.0 && g.span_factor.is_finite()) {
            return fail(format!("grid.span_factor: must be positive, got {}", g.span_factor));
        }
        let modes = self.command.schmidt.max_modes;
        if modes == 0 || modes > g.n_signal.min(g.n_idler) {
            return fail(format!(
                "command.schmidt.max_modes: must lie in 1..={}, got {modes}",
                g.n_signal.min(g.n_idler)
            ));
        }
        let opt = &self.command.optimize_pump;
        check_bounds("command.optimize_pump.bounds_nm", opt.bounds_nm)?;
        if !(opt.tolerance_nm > 0.0) {
            return fail("command.optimize_pump.tolerance_nm: must be positive");
        }
        let d = &self.command.sweep_degenerate;
        check_bounds("command.sweep_degenerate.bounds_nm", d.bounds_nm)?;
        check_range("command.sweep_degenerate", d.start_nm, d.stop_nm, d.step_nm)?;
        for l in [d.start_nm, d.stop_nm] {
            model
                .check_range(0.5e-3 * l)
                .and_then(|_| model.check_range(1e-3 * l))
                .map_err(|e| ConfigError(format!("command.sweep_degenerate: {e}")))?;
        }
        let t = &self.command.sweep_tuning;
        check_bounds("command.sweep_tuning.bounds_nm", t.bounds_nm)?;
        check_range("command.sweep_tuning", t.start_nm, t.stop_nm, t.step_nm)?;
        if !(t.reference_pump_nm > 0.0) {
            return fail("command.sweep_tuning.reference_pump_nm: must be positive");
        }
        Ok(library)
    }
}

fn check_bounds(key: &str, [lo, hi]: [f64; 2]) -> Result<(), ConfigError> {
    if lo > 0.0 && hi > lo && hi.is_finite() {
        Ok(())
    } else {
        fail(format!("{key}: need 0 < min < max, got [{lo}, {hi}]"))
    }
}

fn check_range(key: &str, start: f64, stop: f64, step: f64) -> Result<(), ConfigError> {
    if start > 0.0 && stop >= start && step > 0.0 && stop.is_finite() {
        Ok(())
    } else {
        fail(format!("{key}: need 0 < start_nm <= stop_nm and step_nm > 0"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn overrides_are_typed() {
        let cfg = load(None, &["pump.fwhm_nm=0.3".into(), "material.name=KTP_z".into()]).unwrap();
        assert_eq!(cfg.pump.fwhm_nm, 0.3);
        assert_eq!(cfg.material.name, Material::KtpZ);
        let cfg = load(None, &["command.optimize_pump.bounds_nm=[0.1, 0.2]".into()]).unwrap();
        assert_eq!(cfg.command.optimize_pump.bounds_nm, [0.1, 0.2]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = load(None, &["pump.colour=1".into()]).unwrap_err();
        assert!(e.0.contains("colour"), "{e}");
        let e = load(None, &["nonsense=1".into()]).unwrap_err();
        assert!(e.0.contains("nonsense"), "{e}");
    }

    #[test]
    fn validation_names_the_key() {
        let cfg = load(None, &["grating.period_um=0".into()]).unwrap();
        let e = cfg.validate().unwrap_err();
        assert!(e.0.contains("grating_period"), "{e}");
        let cfg = load(None, &["pump.center_nm=300".into()]).unwrap();
        let e = cfg.validate().unwrap_err();
        assert!(e.0.contains("pump.center_nm") && e.0.contains("valid range"), "{e}");
        let cfg = load(None, &["waveguide.width_um=-4".into()]).unwrap();
        assert!(cfg.validate().unwrap_err().0.contains("width_um"));
    }

    #[test]
    fn malformed_override() {
        assert!(load(None, &["novalue".into()]).is_err());
        assert!(load(None, &["pump..x=1".into()]).is_err());
    }
}
