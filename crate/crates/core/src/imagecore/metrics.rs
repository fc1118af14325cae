use super::{Image, PEAK};
use crate::error::{Error, Result};

fn check_sizes(a: &Image, b: &Image) -> Result<()> {
    if a.same_size(b) {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )))
    }
}

/// Mean squared error over all pixels.
pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    check_sizes(a, b)?;
    let sum: f64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.pixels().len() as f64)
}

/// Peak signal-to-noise ratio in dB, `10 log10(255^2 / mse)`.
///
/// Identical images give `f64::INFINITY`.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    let err = mse(a, b)?;
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (PEAK * PEAK / err).log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn constant(v: f64) -> Image {
        Image::filled(7, 5, v).unwrap()
    }

    #[test]
    fn identical_images() {
        let a = constant(42.0);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
    }

    #[test]
    fn constant_offset_of_five() {
        let a = constant(100.0);
        let b = constant(105.0);
        assert_eq!(mse(&a, &b).unwrap(), 25.0);
        assert!((psnr(&a, &b).unwrap() - 34.1514).abs() < 1e-4);
    }

    #[test]
    fn size_mismatch_is_an_error() {
        let a = constant(0.0);
        let b = Image::filled(5, 7, 0.0).unwrap();
        assert!(matches!(mse(&a, &b), Err(Error::DimensionMismatch(_))));
        assert!(psnr(&a, &b).is_err());
    }

    #[test]
    fn mse_matches_double_loop() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let a = Image::from_fn(33, 17, |_, _| rng.random_range(0.0..255.0)).unwrap();
        let b = Image::from_fn(33, 17, |_, _| rng.random_range(0.0..255.0)).unwrap();
        // column-major accumulation order, independent of the library's
        let mut acc = 0.0;
        for x in 0..33 {
            for y in 0..17 {
                let d = a.get(x, y) - b.get(x, y);
                acc += d * d;
            }
        }
        let oracle = acc / (33.0 * 17.0);
        let got = mse(&a, &b).unwrap();
        assert!((got - oracle).abs() <= 1e-9 * oracle);
    }

    proptest! {
        #[test]
        fn mse_is_symmetric_and_nonnegative(
            a in proptest::collection::vec(0.0f64..255.0, 12),
            b in proptest::collection::vec(0.0f64..255.0, 12),
        ) {
            let a = Image::new(4, 3, a).unwrap();
            let b = Image::new(4, 3, b).unwrap();
            let ab = mse(&a, &b).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(ab, mse(&b, &a).unwrap());
            prop_assert_eq!(ab == 0.0, a == b);
        }

        #[test]
        fn psnr_decreases_with_error(d1 in 0.1f64..50.0, extra in 0.1f64..50.0) {
            let base = constant(100.0);
            let p1 = psnr(&base, &constant(100.0 + d1)).unwrap();
            let p2 = psnr(&base, &constant(100.0 + d1 + extra)).unwrap();
            prop_assert!(p2 < p1);
        }
    }
}
