//! Spectral filter implementing the fractional-derivative scaling
//! `diag[2π·max(|k|,1)^(−ε)]` with periodic boundaries.
//!
//! The filter acts on a real field (here: the gradient magnitude), so the
//! inverse transform's imaginary part is pure round-off and is discarded; its
//! norm is reported so callers can assert it stays negligible.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::image::Image;

/// Per-frequency factors m_k = 2π·max(|k|,1)^(−ε) over the discrete grid.
///
/// Frequencies follow FFT index order: k_i = i for i < ⌈n/2⌉, else i − n, so
/// k ranges over [−⌊n/2⌋, ⌈n/2⌉−1] on each axis. Clamping |k| at 1 keeps the
/// zero mode finite and recovers a uniform 2π scaling at ε = 0.
#[derive(Debug, Clone)]
pub struct SpectralMultiplier {
    epsilon: f64,
    width: usize,
    height: usize,
    factors: Vec<f64>,
}

impl SpectralMultiplier {
    pub fn new(width: usize, height: usize, epsilon: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::Parameter(format!(
                "fractional order must lie in [0, 1), got {epsilon}"
            )));
        }
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut factors = Vec::with_capacity(width * height);
        for ky in 0..height {
            let k2 = signed_frequency(ky, height);
            for kx in 0..width {
                let k1 = signed_frequency(kx, width);
                let norm = (k1 * k1 + k2 * k2).sqrt().max(1.0);
                factors.push(two_pi * norm.powf(-epsilon));
            }
        }
        Ok(SpectralMultiplier {
            epsilon,
            width,
            height,
            factors,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn factors(&self) -> &[f64] {
        &self.factors
    }

    pub fn factor_at(&self, kx: usize, ky: usize) -> f64 {
        self.factors[ky * self.width + kx]
    }
}

fn signed_frequency(index: usize, n: usize) -> f64 {
    if index < n.div_ceil(2) {
        index as f64
    } else {
        index as f64 - n as f64
    }
}

fn transpose(buf: &[Complex64], width: usize, height: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); buf.len()];
    for y in 0..height {
        for x in 0..width {
            out[x * height + y] = buf[y * width + x];
        }
    }
    out
}

fn fft_2d(buf: &mut Vec<Complex64>, width: usize, height: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let row_fft = if inverse {
        planner.plan_fft_inverse(width)
    } else {
        planner.plan_fft_forward(width)
    };
    row_fft.process(buf);
    let mut cols = transpose(buf, width, height);
    let col_fft = if inverse {
        planner.plan_fft_inverse(height)
    } else {
        planner.plan_fft_forward(height)
    };
    col_fft.process(&mut cols);
    *buf = transpose(&cols, height, width);
}

/// Applies the fractional filter to a real field on its own M×N grid.
///
/// Returns the filtered field (real part, scaled by 1/MN) and the L2 norm of
/// the discarded imaginary component.
pub fn apply_fractional_filter(field: &Image, epsilon: f64) -> Result<(Image, f64)> {
    let width = field.width();
    let height = field.height();
    let multiplier = SpectralMultiplier::new(width, height, epsilon)?;
    let mut buf: Vec<Complex64> = field
        .data()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    fft_2d(&mut buf, width, height, false);
    for (c, &m) in buf.iter_mut().zip(multiplier.factors()) {
        *c *= m;
    }
    fft_2d(&mut buf, width, height, true);
    let scale = 1.0 / (width * height) as f64;
    let mut real = Vec::with_capacity(buf.len());
    let mut imag_sq = 0.0;
    for c in &buf {
        real.push(c.re * scale);
        let im = c.im * scale;
        imag_sq += im * im;
    }
    Ok((Image::new(width, height, real), imag_sq.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

    #[test]
    fn frequency_grid_matches_fft_ordering() {
        assert_eq!(signed_frequency(0, 4), 0.0);
        assert_eq!(signed_frequency(1, 4), 1.0);
        assert_eq!(signed_frequency(2, 4), -2.0);
        assert_eq!(signed_frequency(3, 4), -1.0);
        assert_eq!(signed_frequency(2, 5), 2.0);
        assert_eq!(signed_frequency(3, 5), -2.0);
    }

    #[test]
    fn multiplier_is_symmetric_and_positive() {
        let m = SpectralMultiplier::new(8, 6, 0.3).unwrap();
        for ky in 0..6 {
            for kx in 0..8 {
                let v = m.factor_at(kx, ky);
                assert!(v > 0.0);
                // k ↔ −k symmetry: negated index is (n − i) mod n
                let nx = (8 - kx) % 8;
                let ny = (6 - ky) % 6;
                assert_eq!(v, m.factor_at(nx, ny));
            }
        }
    }

    #[test]
    fn zero_mode_keeps_dc_scale() {
        let m = SpectralMultiplier::new(5, 5, 0.7).unwrap();
        assert_relative_eq!(m.factor_at(0, 0), TWO_PI);
    }

    #[test]
    fn epsilon_zero_is_uniform_two_pi() {
        let m = SpectralMultiplier::new(6, 4, 0.0).unwrap();
        for &v in m.factors() {
            assert_relative_eq!(v, TWO_PI);
        }
    }

    #[test]
    fn epsilon_out_of_range_rejected() {
        assert!(SpectralMultiplier::new(4, 4, 1.0).is_err());
        assert!(SpectralMultiplier::new(4, 4, -0.1).is_err());
    }

    #[test]
    fn filter_of_zero_field_is_zero() {
        let field = Image::filled(6, 5, 0.0);
        let (out, imag) = apply_fractional_filter(&field, 0.4).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
        assert_eq!(imag, 0.0);
    }

    #[test]
    fn epsilon_zero_filter_scales_by_two_pi() {
        let field = Image::new(4, 3, (0..12).map(|i| (i as f64) / 11.0).collect());
        let (out, _) = apply_fractional_filter(&field, 0.0).unwrap();
        for (o, v) in out.data().iter().zip(field.data()) {
            assert_relative_eq!(*o, TWO_PI * v, epsilon = 1e-12);
        }
    }

    #[test]
    fn filter_is_linear_in_the_field() {
        let field = Image::new(
            5,
            4,
            (0..20).map(|i| ((i * 7 + 3) % 13) as f64 / 13.0).collect(),
        );
        let doubled = Image::new(5, 4, field.data().iter().map(|&v| 2.0 * v).collect());
        let (a, _) = apply_fractional_filter(&field, 0.35).unwrap();
        let (b, _) = apply_fractional_filter(&doubled, 0.35).unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            assert_relative_eq!(2.0 * x, *y, epsilon = 1e-11, max_relative = 1e-9);
        }
    }
}
