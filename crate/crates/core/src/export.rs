//! CSV and JSON serialization of spectra, decompositions and sweeps.
//!
//! CSV files use `, ` as the separator and a single header line. Floats are
//! written with Rust's shortest round-trip formatting so that identical
//! inputs produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::design::SweepRow;
use crate::jsa::{JointSpectralAmplitude, Spectrum};
use crate::schmidt::{SchmidtResult, SchmidtSummary};

pub const JSA_HEADER: &str = "omega_s_rad_s, omega_i_rad_s, re, im";
pub const MARGINAL_HEADER: &str = "wavelength_nm, intensity";
pub const SCHMIDT_HEADER: &str = "n, lambda_n";
pub const SWEEP_HEADER: &str =
    "lambda_p_nm, lambda_s_nm, lambda_i_nm, grating_um, pump_fwhm_opt_nm, lambda0, purity, theta_deg, eq4_residual, status";

/// Write `contents` to a temporary sibling of `path` and rename it into
/// place, so readers see either the old file, the complete new file, or none.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidInput, "path has no file name"))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

/// Rows in signal-major order: one line per grid point.
pub fn jsa_csv(jsa: &JointSpectralAmplitude) -> String {
    let mut out = String::with_capacity(64 * jsa.amplitude.len());
    out.push_str(JSA_HEADER);
    out.push('\n');
    for (i, &ws) in jsa.grid.signal.iter().enumerate() {
        for (j, &wi) in jsa.grid.idler.iter().enumerate() {
            let z = jsa.amplitude[(i, j)];
            let _ = writeln!(out, "{ws}, {wi}, {}, {}", z.re, z.im);
        }
    }
    out
}

/// Grid description written next to a JSA table.
#[derive(Debug, Clone, Serialize)]
pub struct JsaMeta {
    pub n_signal: usize,
    pub n_idler: usize,
    pub signal_step_rad_s: f64,
    pub idler_step_rad_s: f64,
    pub normalization: &'static str,
    pub row_order: &'static str,
}

impl JsaMeta {
    pub fn of(jsa: &JointSpectralAmplitude) -> Self {
        let (n_signal, n_idler) = jsa.shape();
        JsaMeta {
            n_signal,
            n_idler,
            signal_step_rad_s: jsa.grid.signal_step(),
            idler_step_rad_s: jsa.grid.idler_step(),
            normalization: "sum |f|^2 * d_omega_s * d_omega_i = 1",
            row_order: "signal-major",
        }
    }
}

#[derive(Serialize)]
struct JsaPoint {
    omega_s_rad_s: f64,
    omega_i_rad_s: f64,
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct JsaJson {
    meta: JsaMeta,
    points: Vec<JsaPoint>,
}

pub fn jsa_json(jsa: &JointSpectralAmplitude) -> String {
    let mut points = Vec::with_capacity(jsa.amplitude.len());
    for (i, &ws) in jsa.grid.signal.iter().enumerate() {
        for (j, &wi) in jsa.grid.idler.iter().enumerate() {
            let z = jsa.amplitude[(i, j)];
            points.push(JsaPoint {
                omega_s_rad_s: ws,
                omega_i_rad_s: wi,
                re: z.re,
                im: z.im,
            });
        }
    }
    to_json(&JsaJson {
        meta: JsaMeta::of(jsa),
        points,
    })
}

/// Marginal intensity (per rad/s) against wavelength, in ascending frequency order.
pub fn marginal_csv(spectrum: &Spectrum) -> String {
    let mut out = String::from(MARGINAL_HEADER);
    out.push('\n');
    for (l, i) in spectrum.wavelengths_nm().iter().zip(&spectrum.intensity) {
        let _ = writeln!(out, "{l}, {i}");
    }
    out
}

#[derive(Serialize)]
struct MarginalPoint {
    wavelength_nm: f64,
    intensity: f64,
}

pub fn marginal_json(spectrum: &Spectrum) -> String {
    let points: Vec<MarginalPoint> = spectrum
        .wavelengths_nm()
        .into_iter()
        .zip(&spectrum.intensity)
        .map(|(wavelength_nm, &intensity)| MarginalPoint {
            wavelength_nm,
            intensity,
        })
        .collect();
    to_json(&points)
}

pub fn schmidt_csv(result: &SchmidtResult) -> String {
    let mut out = String::from(SCHMIDT_HEADER);
    out.push('\n');
    for (n, l) in result.coefficients.iter().enumerate() {
        let _ = writeln!(out, "{n}, {l}");
    }
    out
}

#[derive(Serialize)]
struct SchmidtJson<'a> {
    summary: SchmidtSummary,
    lambda_n: &'a [f64],
}

pub fn schmidt_json(result: &SchmidtResult) -> String {
    to_json(&SchmidtJson {
        summary: result.summary(),
        lambda_n: &result.coefficients,
    })
}

pub fn schmidt_summary_json(result: &SchmidtResult) -> String {
    to_json(&result.summary())
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{}, {}, {}, {}, {}, {}, {}, {}, {}, {}",
            r.pump_nm,
            r.signal_nm,
            r.idler_nm,
            r.grating_um,
            r.pump_fwhm_opt_nm,
            r.lambda0,
            r.purity,
            r.theta_deg,
            r.eq4_residual,
            r.status()
        );
    }
    out
}

#[derive(Serialize)]
struct SweepJsonRow<'a> {
    #[serde(flatten)]
    row: &'a SweepRow,
    status: String,
}

pub fn sweep_json(rows: &[SweepRow]) -> String {
    let rows: Vec<SweepJsonRow> = rows
        .iter()
        .map(|row| SweepJsonRow {
            row,
            status: row.status(),
        })
        .collect();
    to_json(&rows)
}

/// Pretty JSON with a trailing newline. Non-finite floats become `null`.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}
