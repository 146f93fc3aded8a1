//! Schmidt decomposition of a discretized joint spectral amplitude.
//!
//! The amplitude matrix is scaled by `√(Δω_s Δω_i)` before the singular value
//! factorization so that the weights approximate the continuum decomposition
//! `f(ω_s, ω_i) = Σ √λ_n ψ_s^n(ω_s) ψ_i^n(ω_i)` independently of the grid.

use faer::complex_native::c64;
use faer::Mat;
use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jsa::JointSpectralAmplitude;
use crate::numeric::pairwise_sum;

pub const DEFAULT_MAX_MODES: usize = 64;

/// Largest accepted deviation of `Σ |f|² Δω_s Δω_i` from 1.
pub const NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtResult {
    /// Descending weights `λ_n` of the retained modes.
    pub coefficients: Vec<f64>,
    /// Row `n` is `ψ_s^n` on the signal axis, normalized under `Σ |ψ|² Δω_s = 1`.
    pub signal_modes: Array2<Complex64>,
    /// Row `n` is `ψ_i^n` on the idler axis.
    pub idler_modes: Array2<Complex64>,
    /// `1 − Σ λ_n` over the retained modes.
    pub tail_mass: f64,
    signal_step: f64,
    idler_step: f64,
}

/// Scalar record of a decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchmidtSummary {
    pub lambda0: f64,
    pub purity: f64,
    pub schmidt_number: f64,
    pub tail_mass: f64,
    pub retained_modes: usize,
}

impl SchmidtResult {
    pub fn lambda0(&self) -> f64 {
        self.coefficients[0]
    }

    /// `Σ λ_n²` over the retained modes.
    pub fn purity(&self) -> f64 {
        purity(&self.coefficients)
    }

    /// `K = 1 / Σ λ_n²`.
    pub fn schmidt_number(&self) -> f64 {
        1.0 / self.purity()
    }

    pub fn summary(&self) -> SchmidtSummary {
        SchmidtSummary {
            lambda0: self.lambda0(),
            purity: self.purity(),
            schmidt_number: self.schmidt_number(),
            tail_mass: self.tail_mass,
            retained_modes: self.coefficients.len(),
        }
    }

    /// `Σ √λ_n ψ_s^n ψ_i^n` on the original grid.
    pub fn reconstruct(&self) -> Array2<Complex64> {
        let ns = self.signal_modes.ncols();
        let ni = self.idler_modes.ncols();
        let mut out = Array2::<Complex64>::zeros((ns, ni));
        for (n, &lambda) in self.coefficients.iter().enumerate() {
            let w = lambda.sqrt();
            let s = self.signal_modes.row(n);
            let i = self.idler_modes.row(n);
            for a in 0..ns {
                let sa = s[a] * w;
                for b in 0..ni {
                    out[(a, b)] += sa * i[b];
                }
            }
        }
        out
    }

    /// Gram matrices `⟨ψ^m, ψ^n⟩` of the signal and idler mode sets.
    pub fn overlaps(&self) -> (Array2<Complex64>, Array2<Complex64>) {
        (
            gram(&self.signal_modes, self.signal_step),
            gram(&self.idler_modes, self.idler_step),
        )
    }
}

/// `Σ λ²`.
pub fn purity(coefficients: &[f64]) -> f64 {
    let sq: Vec<f64> = coefficients.iter().map(|l| l * l).collect();
    pairwise_sum(&sq)
}

fn gram(modes: &Array2<Complex64>, step: f64) -> Array2<Complex64> {
    let n = modes.nrows();
    Array2::from_shape_fn((n, n), |(a, b)| {
        modes
            .row(a)
            .iter()
            .zip(modes.row(b))
            .map(|(x, y)| x.conj() * y)
            .sum::<Complex64>()
            * step
    })
}

fn check_norm(jsa: &JointSpectralAmplitude) -> Result<()> {
    let norm = jsa.norm_squared();
    if !((norm - 1.0).abs() <= NORM_TOLERANCE) {
        return Err(Error::NotNormalized { norm });
    }
    Ok(())
}

fn scaled_matrix(jsa: &JointSpectralAmplitude) -> Mat<c64> {
    let scale = jsa.grid.cell_area().sqrt();
    let (ns, ni) = jsa.shape();
    Mat::from_fn(ns, ni, |i, j| {
        let z = jsa.amplitude[(i, j)] * scale;
        c64::new(z.re, z.im)
    })
}

/// Normalized squared singular values, descending.
fn weights(mut singular: Vec<f64>) -> Result<Vec<f64>> {
    if singular.iter().any(|s| !s.is_finite()) {
        return Err(Error::ConvergenceFailure(
            "singular value factorization returned non-finite values".into(),
        ));
    }
    singular.sort_by(|a, b| b.total_cmp(a));
    let sq: Vec<f64> = singular.iter().map(|s| s * s).collect();
    let total = pairwise_sum(&sq);
    if !(total > 0.0) {
        return Err(Error::ConvergenceFailure("all singular values vanish".into()));
    }
    Ok(sq.into_iter().map(|s| s / total).collect())
}

fn check_max_modes(jsa: &JointSpectralAmplitude, max_modes: usize) -> Result<usize> {
    let (ns, ni) = jsa.shape();
    let rank = ns.min(ni);
    if max_modes == 0 || max_modes > rank {
        return Err(Error::invalid(
            "max_modes",
            format!("must lie in 1..={rank} for a {ns}x{ni} grid, got {max_modes}"),
        ));
    }
    Ok(max_modes)
}

/// All Schmidt weights without the mode functions; cheaper than [`decompose`].
pub fn coefficients(jsa: &JointSpectralAmplitude) -> Result<Vec<f64>> {
    check_norm(jsa)?;
    weights(scaled_matrix(jsa).singular_values())
}

/// Schmidt decomposition keeping the `max_modes` strongest pairs.
///
/// Each signal mode is rotated so that its largest-magnitude sample is real
/// and positive; the idler mode absorbs the conjugate phase so the product is
/// unchanged.
pub fn decompose(jsa: &JointSpectralAmplitude, max_modes: usize) -> Result<SchmidtResult> {
    check_norm(jsa)?;
    let keep = check_max_modes(jsa, max_modes)?;
    let (ns, ni) = jsa.shape();
    let svd = scaled_matrix(jsa).thin_svd();
    let (u, s, v) = (svd.u(), svd.s_diagonal(), svd.v());

    let rank = ns.min(ni);
    let mut order: Vec<usize> = (0..rank).collect();
    let singular: Vec<f64> = (0..rank).map(|k| s.read(k).re).collect();
    order.sort_by(|&a, &b| singular[b].total_cmp(&singular[a]));
    let lambdas = weights(singular.clone())?;

    let ds = jsa.grid.signal_step();
    let di = jsa.grid.idler_step();
    let mut signal_modes = Array2::<Complex64>::zeros((keep, ns));
    let mut idler_modes = Array2::<Complex64>::zeros((keep, ni));
    for (n, &k) in order.iter().take(keep).enumerate() {
        for a in 0..ns {
            let z = u.read(a, k);
            signal_modes[(n, a)] = Complex64::new(z.re, z.im) / ds.sqrt();
        }
        for b in 0..ni {
            let z = v.read(b, k);
            idler_modes[(n, b)] = Complex64::new(z.re, -z.im) / di.sqrt();
        }
        let peak = signal_modes
            .row(n)
            .iter()
            .copied()
            .fold(Complex64::new(0.0, 0.0), |best, z| {
                if z.norm_sqr() > best.norm_sqr() {
                    z
                } else {
                    best
                }
            });
        if peak.norm() > 0.0 {
            let phase = peak / peak.norm();
            signal_modes.row_mut(n).mapv_inplace(|z| z * phase.conj());
            idler_modes.row_mut(n).mapv_inplace(|z| z * phase);
        }
    }
    if signal_modes.iter().chain(idler_modes.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::ConvergenceFailure("non-finite Schmidt modes".into()));
    }

    let coefficients = lambdas[..keep].to_vec();
    let tail_mass = (1.0 - pairwise_sum(&coefficients)).max(0.0);
    Ok(SchmidtResult {
        coefficients,
        signal_modes,
        idler_modes,
        tail_mass,
        signal_step: ds,
        idler_step: di,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jsa::FrequencyGrid;

    fn gauss(x: f64, c: f64, w: f64) -> f64 {
        (-(x - c).powi(2) / (2.0 * w * w)).exp()
    }

    fn hermite1(x: f64, c: f64, w: f64) -> f64 {
        (x - c) / w * gauss(x, c, w)
    }

    fn grid(n: usize) -> FrequencyGrid {
        FrequencyGrid::uniform((0.0, 24.0, n), (0.0, 24.0, n + 7)).unwrap()
    }

    fn lambda_of(jsa: &JointSpectralAmplitude) -> Vec<f64> {
        decompose(jsa, 8).unwrap().coefficients
    }

    #[test]
    fn product_state_has_single_mode() {
        let jsa = JointSpectralAmplitude::from_fn(grid(96), |x, y| {
            Complex64::new(gauss(x, 0.5, 1.3) * gauss(y, -1.0, 2.0), 0.0)
        })
        .unwrap();
        let r = decompose(&jsa, DEFAULT_MAX_MODES).unwrap();
        assert!((r.lambda0() - 1.0).abs() < 1e-10);
        assert!((r.purity() - 1.0).abs() < 1e-10);
        assert!((r.schmidt_number() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn constructed_two_mode_spectrum() {
        // g1 ⟂ g2 and h1 ⟂ h2 on a symmetric grid; equal norms.
        let jsa = JointSpectralAmplitude::from_fn(grid(96), |x, y| {
            let a = 0.75f64.sqrt() * gauss(x, 0.0, 1.5) * gauss(y, 0.0, 1.0);
            let b = 0.25f64.sqrt() * hermite1(x, 0.0, 1.5) * hermite1(y, 0.0, 1.0) * 2.0;
            Complex64::new(a + b, 0.0)
        })
        .unwrap();
        let r = decompose(&jsa, 4).unwrap();
        assert!((r.coefficients[0] - 0.75).abs() < 1e-10, "{:?}", r.coefficients);
        assert!((r.coefficients[1] - 0.25).abs() < 1e-10);
        assert!((r.purity() - 0.625).abs() < 1e-9);
    }

    #[test]
    fn double_gaussian_matches_geometric_spectrum() {
        // f ∝ exp(−(x+y)²/2a²) exp(−(x−y)²/2b²) has λ_n = (1 − μ²) μ^{2n},
        // μ = (a − b)/(a + b).
        let (a, b) = (3.0, 1.0);
        let g = FrequencyGrid::uniform((0.0, 30.0, 181), (0.0, 30.0, 181)).unwrap();
        let jsa = JointSpectralAmplitude::from_fn(g, |x, y| {
            let s = x + y;
            let d = x - y;
            Complex64::new((-s * s / (2.0 * a * a) - d * d / (2.0 * b * b)).exp(), 0.0)
        })
        .unwrap();
        let r = decompose(&jsa, 12).unwrap();
        let mu: f64 = (a - b) / (a + b);
        for (n, &l) in r.coefficients.iter().enumerate() {
            let expected = (1.0 - mu * mu) * mu.powi(2 * n as i32);
            assert!((l - expected).abs() < 1e-6, "n = {n}: {l} vs {expected}");
        }
        let k = (a / b + b / a) / 2.0;
        let all = coefficients(&jsa).unwrap();
        assert!((1.0 / purity(&all) - k).abs() < 1e-6);
    }

    #[test]
    fn weights_sum_to_one_and_descend() {
        let jsa = JointSpectralAmplitude::from_fn(grid(64), |x, y| {
            Complex64::new(gauss(x + 0.7 * y, 0.0, 1.0) * gauss(y, 0.0, 3.0), 0.2 * x)
                * gauss(x, 0.0, 4.0)
        })
        .unwrap();
        let all = coefficients(&jsa).unwrap();
        assert!((pairwise_sum(&all) - 1.0).abs() < 1e-10);
        assert!(all.windows(2).all(|w| w[0] >= w[1]));
        assert!(all.iter().all(|&l| l >= 0.0));
    }

    #[test]
    fn phase_invariance() {
        let base = |x: f64, y: f64| gauss(x - 0.4 * y, 0.0, 1.0) * gauss(y, 0.0, 2.5);
        let g = grid(80);
        let plain = JointSpectralAmplitude::from_fn(g.clone(), |x, y| Complex64::new(base(x, y), 0.0))
            .unwrap();
        let global =
            JointSpectralAmplitude::from_fn(g.clone(), |x, y| Complex64::from_polar(base(x, y), 1.234))
                .unwrap();
        let separable = JointSpectralAmplitude::from_fn(g, |x, y| {
            let phase = 0.3 * x * x - 1.1 * (0.5 * y).sin() + 0.05 * y.powi(3);
            Complex64::from_polar(base(x, y), phase)
        })
        .unwrap();
        let l0 = lambda_of(&plain);
        for (a, b) in l0.iter().zip(lambda_of(&global)) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in l0.iter().zip(lambda_of(&separable)) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn modes_are_orthonormal_and_reconstruct() {
        let g = FrequencyGrid::uniform((0.0, 20.0, 40), (1.0, 10.0, 33)).unwrap();
        let jsa = JointSpectralAmplitude::from_fn(g, |x, y| {
            Complex64::from_polar(gauss(x + y, 1.0, 2.0) * gauss(x - y, 0.0, 4.0), 0.1 * x * y)
        })
        .unwrap();
        let r = decompose(&jsa, 33).unwrap();
        assert!(r.tail_mass < 1e-12);
        let (gs, gi) = r.overlaps();
        for ((a, b), z) in gs.indexed_iter().chain(gi.indexed_iter()) {
            let target = if a == b { 1.0 } else { 0.0 };
            assert!((z - target).norm() < 1e-8);
        }
        let rec = r.reconstruct();
        let err: f64 = rec
            .iter()
            .zip(jsa.amplitude.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            * jsa.grid.cell_area();
        assert!(err.sqrt() < 1e-8, "{err}");
    }

    #[test]
    fn gauge_makes_signal_peak_real_positive() {
        let g = grid(48);
        let jsa = JointSpectralAmplitude::from_fn(g, |x, y| {
            Complex64::from_polar(gauss(x - 0.5 * y, 0.0, 1.0) * gauss(y, 0.0, 2.0), -2.0)
        })
        .unwrap();
        let r = decompose(&jsa, 3).unwrap();
        for row in r.signal_modes.rows() {
            let peak = row.iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
            assert!(peak.re > 0.0 && peak.im.abs() < 1e-12 * peak.re);
        }
        assert_eq!(decompose(&jsa, 3).unwrap(), r);
    }

    #[test]
    fn purity_examples() {
        assert_eq!(purity(&[1.0]), 1.0);
        assert_eq!(purity(&[0.5, 0.5]), 0.5);
    }

    #[test]
    fn rejects_unnormalized_input_and_bad_mode_count() {
        let g = grid(16);
        let mut jsa =
            JointSpectralAmplitude::from_fn(g, |x, y| Complex64::new(gauss(x, 0.0, 2.0) * gauss(y, 0.0, 2.0), 0.0))
                .unwrap();
        assert!(decompose(&jsa, 17).is_err());
        assert!(decompose(&jsa, 0).is_err());
        jsa.amplitude.mapv_inplace(|z| z * 1.01);
        assert!(matches!(decompose(&jsa, 4), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn default_mode_budget() {
        assert_eq!(DEFAULT_MAX_MODES, 64);
    }
}
