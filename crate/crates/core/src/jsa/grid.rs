use serde::{Deserialize, Serialize};

use super::Process;
use crate::error::{Error, Result};

/// Uniform rectangular grid over `(ω_s, ω_i)` in rad/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub signal: Vec<f64>,
    pub idler: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(signal: Vec<f64>, idler: Vec<f64>) -> Result<Self> {
        check_axis("signal", &signal)?;
        check_axis("idler", &idler)?;
        Ok(FrequencyGrid { signal, idler })
    }

    /// `n_s × n_i` points spanning `span_s × span_i` around the given centers.
    pub fn uniform(
        (signal_center, signal_span, n_signal): (f64, f64, usize),
        (idler_center, idler_span, n_idler): (f64, f64, usize),
    ) -> Result<Self> {
        Self::new(
            axis(signal_center, signal_span, n_signal)?,
            axis(idler_center, idler_span, n_idler)?,
        )
    }

    pub fn signal_step(&self) -> f64 {
        step(&self.signal)
    }

    pub fn idler_step(&self) -> f64 {
        step(&self.idler)
    }

    /// `Δω_s Δω_i`, the measure of one grid cell.
    pub fn cell_area(&self) -> f64 {
        self.signal_step() * self.idler_step()
    }

    /// Same spans and centers with the point counts multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let spec = |ax: &[f64]| {
            let (lo, hi) = (ax[0], ax[ax.len() - 1]);
            (0.5 * (lo + hi), hi - lo, (ax.len() - 1) * factor + 1)
        };
        Self::uniform(spec(&self.signal), spec(&self.idler))
    }
}

fn step(ax: &[f64]) -> f64 {
    (ax[ax.len() - 1] - ax[0]) / (ax.len() - 1) as f64
}

fn axis(center: f64, span: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::invalid("grid", format!("need at least 2 points per axis, got {n}")));
    }
    if !(span > 0.0 && span.is_finite()) {
        return Err(Error::invalid("grid", format!("span must be positive, got {span}")));
    }
    let start = center - 0.5 * span;
    let h = span / (n - 1) as f64;
    Ok((0..n).map(|k| start + h * k as f64).collect())
}

fn check_axis(name: &str, ax: &[f64]) -> Result<()> {
    if ax.len() < 2 {
        return Err(Error::invalid(name, "axis needs at least 2 points"));
    }
    if ax.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid(name, "axis must be strictly increasing"));
    }
    let h = step(ax);
    if ax
        .windows(2)
        .any(|w| ((w[1] - w[0]) - h).abs() > 1e-6 * h)
    {
        return Err(Error::invalid(name, "axis must be uniform"));
    }
    Ok(())
}

/// Grid resolution and auto-ranging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSettings {
    pub n_signal: usize,
    pub n_idler: usize,
    /// Axis span as a multiple of the estimated marginal FWHM.
    pub span_factor: f64,
}

impl Default for GridSettings {
    fn default() -> Self {
        GridSettings {
            n_signal: 512,
            n_idler: 512,
            span_factor: 6.0,
        }
    }
}

/// Grid centered on the phasematched point with per-axis spans.
///
/// The spans come from the marginal widths of the Gaussian-approximated,
/// linearized JSA: with `a = ∂Δk/∂ω_s`, `b = ∂Δk/∂ω_i` and `G = γL²/4`,
/// `|f|² ∝ exp(−xᵀMx)` where
/// `M = 1/σ² [[1, 1], [1, 1]] + 2G [[a², ab], [ab, b²]]`, so each marginal
/// standard deviation follows from `(2M)⁻¹`. The backward photon is an order
/// of magnitude narrower than the forward one, hence the separate spans.
pub fn auto_grid(process: &Process, settings: &GridSettings) -> Result<FrequencyGrid> {
    let (ws, wi) = process.phasematched_point()?;
    let (a, b) = process.mismatch_slopes(ws, wi)?;
    let sigma = process.sigma();
    let length = process.length_um();
    let g = process.config().gaussian_gamma * length * length / 4.0;
    let p = 1.0 / (sigma * sigma);
    let (m11, m12, m22) = (p + 2.0 * g * a * a, p + 2.0 * g * a * b, p + 2.0 * g * b * b);
    let det = m11 * m22 - m12 * m12;
    if !(det > 0.0) {
        return Err(Error::invalid(
            "process",
            "phasematching runs parallel to the pump envelope; the JSA is unbounded",
        ));
    }
    // diag((2M)⁻¹)
    let var_s = m22 / (2.0 * det);
    let var_i = m11 / (2.0 * det);
    let fwhm_per_std = 2.0 * (2.0 * std::f64::consts::LN_2).sqrt();
    let span_s = settings.span_factor * fwhm_per_std * var_s.sqrt();
    let span_i = settings.span_factor * fwhm_per_std * var_i.sqrt();
    FrequencyGrid::uniform(
        (ws, span_s, settings.n_signal),
        (wi, span_i, settings.n_idler),
    )
}
