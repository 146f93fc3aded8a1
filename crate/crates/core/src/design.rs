//! Grating design, the analytic separability condition, pump-width
//! optimization and the degenerate / tuning sweeps.

use serde::{Deserialize, Serialize};

use crate::dispersion::{Material, SellmeierLibrary};
use crate::error::{Error, Result};
use crate::jsa::{
    auto_grid, build_jsa, fwhm_nm_from_sigma, sigma_from_fwhm_nm, GridSettings, Process,
    ProcessConfig,
};
use crate::schmidt::{self, SchmidtResult, DEFAULT_MAX_MODES};
use crate::units::{nm_from_omega, omega_from_nm};

/// Relative tolerance on `1/λ_p = 1/λ_s + 1/λ_i`.
pub const ENERGY_TOLERANCE: f64 = 1e-9;

/// Pump-width bounds used for the degenerate configurations, nm.
pub const DEGENERATE_BOUNDS_NM: (f64, f64) = (0.02, 0.35);

/// Pump-width bounds used while tuning the pump at a fixed grating, nm.
pub const TUNING_BOUNDS_NM: (f64, f64) = (0.22, 0.34);

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Grating period in µm that phasematches the given wavelengths in the
/// process medium, `Λ = 2π / (k_p ∓ k_s ∓ k_i)` with the signs set by the
/// propagation directions. The process's own grating is ignored.
pub fn grating_period(process: &Process, pump_nm: f64, signal_nm: f64, idler_nm: f64) -> Result<f64> {
    let relative_error = (1.0 / pump_nm - 1.0 / signal_nm - 1.0 / idler_nm).abs() * pump_nm;
    if !(relative_error <= ENERGY_TOLERANCE) {
        return Err(Error::EnergyMismatch {
            pump_nm,
            signal_nm,
            idler_nm,
            relative_error,
        });
    }
    let m = process.medium();
    let cfg = process.config();
    let denominator = m.wavevector(omega_from_nm(pump_nm))?
        - cfg.signal_direction.sign() * m.wavevector(omega_from_nm(signal_nm))?
        - cfg.idler_direction.sign() * m.wavevector(omega_from_nm(idler_nm))?;
    if !(denominator > 0.0) {
        return Err(Error::NonPositiveDenominator { value: denominator });
    }
    Ok(2.0 * std::f64::consts::PI / denominator)
}

/// Copy of `config` whose grating phasematches degenerate emission at
/// twice the pump wavelength.
pub fn degenerate_config(config: &ProcessConfig, library: &SellmeierLibrary) -> Result<ProcessConfig> {
    let probe = Process::with_library(
        ProcessConfig {
            grating_period_um: f64::INFINITY,
            mismatch: crate::jsa::MismatchModel::Exact,
            ..config.clone()
        },
        library,
    )?;
    let lp = config.pump_center_nm;
    let grating = grating_period(&probe, lp, 2.0 * lp, 2.0 * lp)?;
    Ok(ProcessConfig {
        grating_period_um: grating,
        ..config.clone()
    })
}

/// Analytic separability diagnostic for a Gaussian pump and Gaussian
/// phasematching.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeparabilityCheck {
    /// `1 + (γ L² σ² / 2) (∂Δk/∂ω_s)(∂Δk/∂ω_i)`; zero at perfect separability.
    pub residual: f64,
    /// `(∂Δk/∂ω_s)(∂Δk/∂ω_i)` in s²/µm².
    pub slope_product: f64,
    /// `v_s < v_p`, the signal slower than the pump.
    pub signal_slower_than_pump: bool,
    /// Pump `σ` in rad/s at which the residual vanishes, when one exists.
    pub root_sigma: Option<f64>,
    /// The same root as an intensity FWHM in nm.
    pub root_fwhm_nm: Option<f64>,
}

/// Evaluate the separability residual at pump width `sigma` (rad/s), with the
/// slopes taken at `(signal_omega, idler_omega)`.
pub fn separability_residual(
    process: &Process,
    signal_omega: f64,
    idler_omega: f64,
    sigma: f64,
) -> Result<SeparabilityCheck> {
    let (a, b) = process.mismatch_slopes(signal_omega, idler_omega)?;
    let delays = process.group_delays(signal_omega, idler_omega)?;
    let cfg = process.config();
    let scale = cfg.gaussian_gamma * process.length_um().powi(2);
    let product = a * b;
    let root_sigma = (product < 0.0).then(|| (-2.0 / (scale * product)).sqrt());
    Ok(SeparabilityCheck {
        residual: 1.0 + 0.5 * scale * sigma * sigma * product,
        slope_product: product,
        signal_slower_than_pump: delays.signal > delays.pump,
        root_sigma,
        root_fwhm_nm: root_sigma.map(|s| fwhm_nm_from_sigma(s, cfg.pump_center_nm)),
    })
}

/// Golden-section maximization of `f` on `[lo, hi]` to bracket width `tol`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoldenSearch {
    pub argmax: f64,
    pub max: f64,
    /// Every `(x, f(x))` evaluated, in order.
    pub evaluations: Vec<(f64, f64)>,
    /// Successive brackets `(lo, hi)`.
    pub brackets: Vec<(f64, f64)>,
}

pub fn golden_section_max<E>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<GoldenSearch, E> {
    let (mut a, mut b) = (lo, hi);
    let mut evaluations = Vec::new();
    let mut brackets = vec![(a, b)];
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    evaluations.push((c, fc));
    evaluations.push((d, fd));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
            evaluations.push((c, fc));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
            evaluations.push((d, fd));
        }
        brackets.push((a, b));
    }
    let (argmax, max) = if fc >= fd { (c, fc) } else { (d, fd) };
    Ok(GoldenSearch {
        argmax,
        max,
        evaluations,
        brackets,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerFlag {
    /// The optimum sits within tolerance of a bound.
    BoundaryOptimum,
    /// An interior spot check beat the golden-section result.
    NonUnimodal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSettings {
    pub tolerance_nm: f64,
    pub spot_checks: usize,
    pub max_modes: usize,
    pub grid: GridSettings,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            tolerance_nm: 1e-3,
            spot_checks: 16,
            max_modes: DEFAULT_MAX_MODES,
            grid: GridSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PumpOptimum {
    pub pump_fwhm_nm: f64,
    pub lambda0: f64,
    pub schmidt: SchmidtResult,
    pub search: GoldenSearch,
    /// `(Δλ_p, λ_0)` at the bounds and at the interior spot checks.
    pub spot_checks: Vec<(f64, f64)>,
    pub flags: Vec<OptimizerFlag>,
}

/// Leading Schmidt weight of `process` at pump width `pump_fwhm_nm`.
pub fn lambda0_at(process: &Process, pump_fwhm_nm: f64, grid: &GridSettings) -> Result<f64> {
    let p = process.with_pump_fwhm(pump_fwhm_nm)?;
    let jsa = build_jsa(&auto_grid(&p, grid)?, &p)?;
    Ok(schmidt::coefficients(&jsa)?[0])
}

/// Full decomposition of `process` at pump width `pump_fwhm_nm`.
pub fn decompose_at(
    process: &Process,
    pump_fwhm_nm: f64,
    grid: &GridSettings,
    max_modes: usize,
) -> Result<SchmidtResult> {
    let p = process.with_pump_fwhm(pump_fwhm_nm)?;
    let jsa = build_jsa(&auto_grid(&p, grid)?, &p)?;
    let (ns, ni) = jsa.shape();
    schmidt::decompose(&jsa, max_modes.min(ns).min(ni))
}

/// Pump FWHM in `bounds_nm` maximizing `λ_0`.
pub fn optimize_pump_width(
    process: &Process,
    bounds_nm: (f64, f64),
    settings: &OptimizerSettings,
) -> Result<PumpOptimum> {
    optimize_with(|w| lambda0_at(process, w, &settings.grid), bounds_nm, settings)
        .and_then(|(best, search, spot_checks, flags)| {
            let schmidt = decompose_at(process, best, &settings.grid, settings.max_modes)?;
            Ok(PumpOptimum {
                pump_fwhm_nm: best,
                lambda0: schmidt.lambda0(),
                schmidt,
                search,
                spot_checks,
                flags,
            })
        })
}

type Optimized = (f64, GoldenSearch, Vec<(f64, f64)>, Vec<OptimizerFlag>);

/// Golden-section search plus bound and spot-check certificates. The returned
/// argument is the best point seen anywhere.
pub fn optimize_with(
    mut objective: impl FnMut(f64) -> Result<f64>,
    (lo, hi): (f64, f64),
    settings: &OptimizerSettings,
) -> Result<Optimized> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::invalid(
            "bounds",
            format!("need 0 < min < max, got [{lo}, {hi}]"),
        ));
    }
    let tol = settings.tolerance_nm;
    let search = golden_section_max(&mut objective, lo, hi, tol)?;

    let n = settings.spot_checks;
    let mut spots = vec![(lo, objective(lo)?), (hi, objective(hi)?)];
    for k in 1..=n {
        let x = lo + (hi - lo) * k as f64 / (n + 1) as f64;
        spots.push((x, objective(x)?));
    }

    let mut flags = Vec::new();
    let (mut best, mut best_value) = (search.argmax, search.max);
    for (k, &(x, v)) in spots.iter().enumerate() {
        if v > best_value {
            if k >= 2 {
                flags.push(OptimizerFlag::NonUnimodal);
            }
            best = x;
            best_value = v;
        }
    }
    flags.dedup();
    if best - lo <= tol || hi - best <= tol {
        flags.push(OptimizerFlag::BoundaryOptimum);
    }
    Ok((best, search, spots, flags))
}

/// One line of a parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub material: Material,
    pub pump_nm: f64,
    pub signal_nm: f64,
    pub idler_nm: f64,
    pub grating_um: f64,
    pub pump_fwhm_opt_nm: f64,
    pub lambda0: f64,
    pub purity: f64,
    pub theta_deg: f64,
    pub eq4_residual: f64,
    pub flags: Vec<OptimizerFlag>,
    /// Error message when the row could not be computed.
    pub error: Option<String>,
}

impl SweepRow {
    fn failed(material: Material, pump_nm: f64, grating_um: f64, error: Error) -> Self {
        SweepRow {
            material,
            pump_nm,
            signal_nm: f64::NAN,
            idler_nm: f64::NAN,
            grating_um,
            pump_fwhm_opt_nm: f64::NAN,
            lambda0: f64::NAN,
            purity: f64::NAN,
            theta_deg: f64::NAN,
            eq4_residual: f64::NAN,
            flags: Vec::new(),
            error: Some(error.to_string()),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    /// `ok`, `failed`, or the optimizer flags joined by `+`.
    pub fn status(&self) -> String {
        if self.error.is_some() {
            return "failed".into();
        }
        if self.flags.is_empty() {
            return "ok".into();
        }
        self.flags
            .iter()
            .map(|f| match f {
                OptimizerFlag::BoundaryOptimum => "boundary_optimum",
                OptimizerFlag::NonUnimodal => "non_unimodal",
            })
            .collect::<Vec<_>>()
            .join("+")
    }
}

/// Evaluate one configuration: phasematched point, optimized pump, angle and
/// separability residual.
pub fn evaluate_row(
    process: &Process,
    bounds_nm: (f64, f64),
    settings: &OptimizerSettings,
) -> Result<SweepRow> {
    let cfg = process.config();
    let (ws, wi) = process.phasematched_point()?;
    let opt = optimize_pump_width(process, bounds_nm, settings)?;
    let sigma = sigma_from_fwhm_nm(opt.pump_fwhm_nm, cfg.pump_center_nm);
    Ok(SweepRow {
        material: cfg.material,
        pump_nm: cfg.pump_center_nm,
        signal_nm: nm_from_omega(ws),
        idler_nm: nm_from_omega(wi),
        grating_um: cfg.grating_period_um,
        pump_fwhm_opt_nm: opt.pump_fwhm_nm,
        lambda0: opt.lambda0,
        purity: opt.schmidt.purity(),
        theta_deg: process.phasematching_angle(ws, wi)?,
        eq4_residual: separability_residual(process, ws, wi, sigma)?.residual,
        flags: opt.flags,
        error: None,
    })
}

/// Degeneracy wavelengths `start, start + step, …` up to `stop` inclusive.
pub fn wavelength_steps(start_nm: f64, stop_nm: f64, step_nm: f64) -> Result<Vec<f64>> {
    if !(step_nm > 0.0 && stop_nm >= start_nm && start_nm > 0.0) {
        return Err(Error::invalid(
            "sweep",
            format!("need 0 < start <= stop and step > 0, got {start_nm}..{stop_nm} by {step_nm}"),
        ));
    }
    let n = ((stop_nm - start_nm) / step_nm + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| start_nm + step_nm * k as f64).collect())
}

/// For each degeneracy wavelength `λ`: pump at `λ/2`, grating solved for
/// degenerate emission, pump width optimized within `bounds_nm`.
pub fn sweep_degenerate(
    base: &ProcessConfig,
    library: &SellmeierLibrary,
    degenerate_nm: &[f64],
    bounds_nm: (f64, f64),
    settings: &OptimizerSettings,
) -> Vec<SweepRow> {
    degenerate_nm
        .iter()
        .map(|&l| {
            let pump_nm = 0.5 * l;
            let cfg = ProcessConfig {
                pump_center_nm: pump_nm,
                ..base.clone()
            };
            match degenerate_config(&cfg, library) {
                Err(e) => SweepRow::failed(base.material, pump_nm, f64::NAN, e),
                Ok(cfg) => {
                    let grating = cfg.grating_period_um;
                    Process::with_library(cfg, library)
                        .and_then(|p| evaluate_row(&p, bounds_nm, settings))
                        .unwrap_or_else(|e| SweepRow::failed(base.material, pump_nm, grating, e))
                }
            }
        })
        .collect()
}

/// Grating fixed at the degenerate solution for `reference_pump_nm`; the pump
/// is then tuned across `pump_nm` with the width optimized in `bounds_nm`.
pub fn sweep_tuning(
    base: &ProcessConfig,
    library: &SellmeierLibrary,
    reference_pump_nm: f64,
    pump_nm: &[f64],
    bounds_nm: (f64, f64),
    settings: &OptimizerSettings,
) -> Result<Vec<SweepRow>> {
    let reference = degenerate_config(
        &ProcessConfig {
            pump_center_nm: reference_pump_nm,
            ..base.clone()
        },
        library,
    )?;
    let grating = reference.grating_period_um;
    Ok(pump_nm
        .iter()
        .map(|&lp| {
            let cfg = ProcessConfig {
                pump_center_nm: lp,
                grating_period_um: grating,
                ..base.clone()
            };
            Process::with_library(cfg, library)
                .and_then(|p| evaluate_row(&p, bounds_nm, settings))
                .unwrap_or_else(|e| SweepRow::failed(base.material, lp, grating, e))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::DispersionModel;
    use crate::jsa::{GroupDelays, LinearMismatch};
    use crate::units::C_UM_PER_S;
    use std::sync::Arc;

    fn stub(n: f64) -> Process {
        Process::with_medium(ProcessConfig::default(), Arc::new(DispersionModel::constant(n))).unwrap()
    }

    #[test]
    fn constant_index_grating_is_pump_wavelength_over_index() {
        // k_s = k_i = k_p / 2 so the denominator is k_p.
        let g = grating_period(&stub(2.0), 775.0, 1550.0, 1550.0).unwrap();
        assert!((g - 0.775 / 2.0).abs() < 1e-12);
    }

    #[test]
    fn telecom_grating_period() {
        let lib = SellmeierLibrary::builtin();
        let cfg = degenerate_config(&ProcessConfig::default(), &lib).unwrap();
        assert!((cfg.grating_period_um - 0.35).abs() < 0.02, "{}", cfg.grating_period_um);
        let p = Process::new(cfg).unwrap();
        let ws = omega_from_nm(1550.0);
        let wi = p.pump_omega() - ws;
        assert!(p.delta_k(ws, wi).unwrap().abs() < 1e-9);
    }

    #[test]
    fn energy_mismatch_rejected() {
        assert!(matches!(
            grating_period(&stub(2.0), 775.0, 1550.0, 1551.0),
            Err(Error::EnergyMismatch { .. })
        ));
    }

    struct SquareRootMedium;

    impl crate::dispersion::Medium for SquareRootMedium {
        fn label(&self) -> String {
            "k = √ω".into()
        }

        fn wavevector(&self, omega: f64) -> Result<f64> {
            Ok(omega.sqrt())
        }
    }

    #[test]
    fn non_positive_denominator_rejected() {
        // All forward with k ∝ √ω: k_p − k_s − k_i = (√2 − 2) √ω_s < 0.
        let cfg = ProcessConfig {
            idler_direction: crate::jsa::Direction::Forward,
            ..Default::default()
        };
        let p = Process::with_medium(cfg, Arc::new(SquareRootMedium)).unwrap();
        assert!(matches!(
            grating_period(&p, 775.0, 1550.0, 1550.0),
            Err(Error::NonPositiveDenominator { .. })
        ));
    }

    fn linear(pump: f64, signal: f64, idler: f64) -> Process {
        let c = 1.0 / C_UM_PER_S;
        let wp = omega_from_nm(775.0);
        stub(2.0).with_linear_mismatch(LinearMismatch {
            signal_omega0: wp / 2.0,
            idler_omega0: wp / 2.0,
            delta_k0: 0.0,
            delays: GroupDelays {
                pump: pump * c,
                signal: signal * c,
                idler: idler * c,
            },
        })
    }

    #[test]
    fn residual_without_product_term_is_one() {
        let p = linear(2.2, 2.2, 2.1);
        let w = p.pump_omega() / 2.0;
        let r = separability_residual(&p, w, w, 1e12).unwrap();
        assert_eq!(r.residual, 1.0);
        assert!(r.root_sigma.is_none());
    }

    #[test]
    fn residual_vanishes_at_constructed_root() {
        // v_s < v_p: k'_s > k'_p gives a negative slope product.
        let p = linear(2.2, 2.3, 2.2);
        let w = p.pump_omega() / 2.0;
        let probe = separability_residual(&p, w, w, 1.0).unwrap();
        assert!(probe.signal_slower_than_pump);
        let sigma = probe.root_sigma.unwrap();
        let r = separability_residual(&p, w, w, sigma).unwrap();
        assert!(r.residual.abs() < 1e-12);
        // hand value: σ² = −2 / (γ L² a b)
        let c = 1.0 / C_UM_PER_S;
        let (a, b) = (-0.1 * c, 4.4 * c);
        let l = 5000.0;
        let expected = (-2.0 / (0.193 * l * l * a * b)).sqrt();
        assert!((sigma - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn lithium_niobate_velocity_ordering() {
        // With this dispersion model LiNbO3 has the pump slightly slower than
        // the 1550 nm signal, so the analytic root does not exist.
        let lib = SellmeierLibrary::builtin();
        let p = Process::new(degenerate_config(&ProcessConfig::default(), &lib).unwrap()).unwrap();
        let (ws, wi) = p.phasematched_point().unwrap();
        let r = separability_residual(&p, ws, wi, p.sigma()).unwrap();
        assert!(!r.signal_slower_than_pump);
        assert!(r.residual > 1.0);
    }

    #[test]
    fn golden_section_finds_quadratic_peak() {
        let peak = 0.1734;
        let search = golden_section_max(
            |x: f64| Ok::<_, ()>(1.0 - (x - peak).powi(2)),
            0.02,
            0.35,
            1e-3,
        )
        .unwrap();
        assert!((search.argmax - peak).abs() < 1e-3);
        let (a, b) = *search.brackets.last().unwrap();
        assert!(b - a <= 1e-3);
        assert!(search.brackets.windows(2).all(|w| w[1].1 - w[1].0 < w[0].1 - w[0].0));
    }

    #[test]
    fn optimizer_flags() {
        let settings = OptimizerSettings::default();
        let (best, _, spots, flags) =
            optimize_with(|x| Ok(1.0 - (x - 0.2).powi(2)), (0.02, 0.35), &settings).unwrap();
        assert!((best - 0.2).abs() < 1e-3);
        assert!(flags.is_empty());
        assert_eq!(spots.len(), 18);

        let (best, _, _, flags) = optimize_with(Ok, (0.02, 0.35), &settings).unwrap();
        assert_eq!(best, 0.35);
        assert_eq!(flags, vec![OptimizerFlag::BoundaryOptimum]);

        // Narrow spike missed by the golden search but hit by a spot check.
        let spike = 0.02 + 0.33 * 3.0 / 17.0;
        let (best, _, _, flags) = optimize_with(
            |x| Ok(0.5 - 0.1 * (x - 0.3).abs() + if (x - spike).abs() < 1e-6 { 1.0 } else { 0.0 }),
            (0.02, 0.35),
            &settings,
        )
        .unwrap();
        assert_eq!(best, spike);
        assert!(flags.contains(&OptimizerFlag::NonUnimodal));
    }

    #[test]
    fn invalid_bounds() {
        let s = OptimizerSettings::default();
        assert!(optimize_with(Ok, (0.3, 0.2), &s).is_err());
        assert!(optimize_with(Ok, (0.0, 0.2), &s).is_err());
    }

    #[test]
    fn default_sweep_has_seventeen_rows() {
        let steps = wavelength_steps(800.0, 1600.0, 50.0).unwrap();
        assert_eq!(steps.len(), 17);
        assert_eq!(steps[16], 1600.0);
    }

    #[test]
    fn failed_rows_keep_their_place() {
        let lib = SellmeierLibrary::builtin();
        let settings = OptimizerSettings {
            grid: GridSettings {
                n_signal: 64,
                n_idler: 64,
                span_factor: 6.0,
            },
            spot_checks: 0,
            tolerance_nm: 0.05,
            ..Default::default()
        };
        // 600 nm degeneracy puts the pump below the Sellmeier range.
        let rows = sweep_degenerate(
            &ProcessConfig::default(),
            &lib,
            &[600.0, 1550.0],
            DEGENERATE_BOUNDS_NM,
            &settings,
        );
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].status(), "failed");
        assert!(rows[1].is_ok(), "{:?}", rows[1].error);
        let r = &rows[1];
        let energy = (1.0 / r.pump_nm - 1.0 / r.signal_nm - 1.0 / r.idler_nm).abs() * r.pump_nm;
        assert!(energy < ENERGY_TOLERANCE);
        assert!(r.lambda0 > 0.0 && r.lambda0 <= 1.0);
    }
}
