use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use super::{clamp_intensity, Image};
use crate::error::{Error, Result};

/// Additive white Gaussian noise parameters.
///
/// Samples come from a ChaCha20 stream seeded with `seed` (via
/// `SeedableRng::seed_from_u64`) and are shaped by `rand_distr::Normal`,
/// one draw per pixel in row-major order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise sigma must be finite and >= 0, got {sigma}"
            )));
        }
        Ok(Self { sigma, seed })
    }
}

/// `clamp(img + n, 0, 255)` with `n ~ N(0, sigma^2)` i.i.d. per pixel.
pub fn add_gaussian_noise(img: &Image, spec: NoiseSpec) -> Result<Image> {
    let spec = NoiseSpec::new(spec.sigma, spec.seed)?;
    if spec.sigma == 0.0 {
        return Ok(img.clamped());
    }
    let normal = Normal::new(0.0, spec.sigma)
        .map_err(|e| Error::InvalidParameter(format!("noise sigma: {e}")))?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let pixels = img
        .pixels()
        .iter()
        .map(|&v| clamp_intensity(v + normal.sample(&mut rng)))
        .collect();
    Image::new(img.width(), img.height(), pixels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat() -> Image {
        Image::filled(256, 256, 128.0).unwrap()
    }

    #[test]
    fn zero_sigma_is_identity() {
        let img = Image::from_fn(9, 4, |x, y| (x * 20 + y) as f64).unwrap();
        let out = add_gaussian_noise(&img, NoiseSpec { sigma: 0.0, seed: 5 }).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn sample_std_matches_sigma() {
        let img = flat();
        let out = add_gaussian_noise(&img, NoiseSpec { sigma: 20.0, seed: 1 }).unwrap();
        let diffs: Vec<f64> = out
            .pixels()
            .iter()
            .zip(img.pixels())
            .map(|(a, b)| a - b)
            .collect();
        let n = diffs.len() as f64;
        let mean = diffs.iter().sum::<f64>() / n;
        let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var.sqrt() - 20.0).abs() < 0.5, "std {}", var.sqrt());
        assert!(mean.abs() < 0.5);
    }

    #[test]
    fn seeds_are_deterministic() {
        let img = Image::filled(32, 32, 100.0).unwrap();
        let a = add_gaussian_noise(&img, NoiseSpec { sigma: 10.0, seed: 7 }).unwrap();
        let b = add_gaussian_noise(&img, NoiseSpec { sigma: 10.0, seed: 7 }).unwrap();
        let c = add_gaussian_noise(&img, NoiseSpec { sigma: 10.0, seed: 8 }).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn output_is_clamped() {
        let img = Image::filled(64, 64, 250.0).unwrap();
        let out = add_gaussian_noise(&img, NoiseSpec { sigma: 50.0, seed: 3 }).unwrap();
        assert!(out.pixels().iter().all(|&v| (0.0..=255.0).contains(&v)));
    }

    #[test]
    fn negative_sigma_rejected() {
        let img = flat();
        assert!(add_gaussian_noise(&img, NoiseSpec { sigma: -1.0, seed: 0 }).is_err());
    }
}
