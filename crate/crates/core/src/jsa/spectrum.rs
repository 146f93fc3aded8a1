use super::JointSpectralAmplitude;
use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;
use crate::units::nm_from_omega;

/// One-photon intensity spectrum, a density over angular frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub omega: Vec<f64>,
    pub intensity: Vec<f64>,
}

impl Spectrum {
    fn step(&self) -> f64 {
        (self.omega[self.omega.len() - 1] - self.omega[0]) / (self.omega.len() - 1) as f64
    }

    /// `Σ I Δω`.
    pub fn integral(&self) -> f64 {
        pairwise_sum(&self.intensity) * self.step()
    }

    /// FWHM in rad/s.
    pub fn fwhm(&self) -> Result<f64> {
        fwhm(&self.omega, &self.intensity)
    }

    /// FWHM in nm, converting both half-maximum crossings to wavelength.
    pub fn fwhm_nm(&self) -> Result<f64> {
        let (lo, hi) = fwhm_crossings(&self.omega, &self.intensity)?;
        Ok((nm_from_omega(lo) - nm_from_omega(hi)).abs())
    }

    /// Midpoint of the half-maximum crossings, rad/s.
    pub fn center(&self) -> Result<f64> {
        let (lo, hi) = fwhm_crossings(&self.omega, &self.intensity)?;
        Ok(0.5 * (lo + hi))
    }

    pub fn center_nm(&self) -> Result<f64> {
        Ok(nm_from_omega(self.center()?))
    }

    pub fn wavelengths_nm(&self) -> Vec<f64> {
        self.omega.iter().map(|&w| nm_from_omega(w)).collect()
    }
}

/// Signal and idler marginals: `|f|²` integrated over the other axis.
pub fn marginal_spectra(jsa: &JointSpectralAmplitude) -> (Spectrum, Spectrum) {
    let (ns, ni) = jsa.shape();
    let ds = jsa.grid.signal_step();
    let di = jsa.grid.idler_step();
    let mut buf = Vec::with_capacity(ns.max(ni));

    let signal = (0..ns)
        .map(|i| {
            buf.clear();
            buf.extend(jsa.amplitude.row(i).iter().map(|z| z.norm_sqr()));
            pairwise_sum(&buf) * di
        })
        .collect();
    let idler = (0..ni)
        .map(|j| {
            buf.clear();
            buf.extend(jsa.amplitude.column(j).iter().map(|z| z.norm_sqr()));
            pairwise_sum(&buf) * ds
        })
        .collect();

    (
        Spectrum {
            omega: jsa.grid.signal.clone(),
            intensity: signal,
        },
        Spectrum {
            omega: jsa.grid.idler.clone(),
            intensity: idler,
        },
    )
}

/// Linearly interpolated positions where `intensity` crosses half of its
/// global maximum, walking outward from the peak.
pub fn fwhm_crossings(axis: &[f64], intensity: &[f64]) -> Result<(f64, f64)> {
    assert_eq!(axis.len(), intensity.len(), "axis and profile lengths differ");
    let peak = intensity
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > intensity[best] { i } else { best });
    let half = 0.5 * intensity[peak];
    let interp = |a: usize, b: usize| {
        // a inside (>= half), b outside (< half)
        let t = (intensity[a] - half) / (intensity[a] - intensity[b]);
        axis[a] + t * (axis[b] - axis[a])
    };

    let left = (1..=peak)
        .rev()
        .find(|&i| intensity[i - 1] < half)
        .map(|i| interp(i, i - 1))
        .ok_or(Error::NoCrossing { side: "left" })?;
    let right = (peak..intensity.len() - 1)
        .find(|&i| intensity[i + 1] < half)
        .map(|i| interp(i, i + 1))
        .ok_or(Error::NoCrossing { side: "right" })?;
    Ok((left, right))
}

/// Full width at half maximum in the units of `axis`.
pub fn fwhm(axis: &[f64], intensity: &[f64]) -> Result<f64> {
    let (lo, hi) = fwhm_crossings(axis, intensity)?;
    Ok(hi - lo)
}
