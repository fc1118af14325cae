//! Log-Gabor filter bank sampled on the patch's discrete Fourier grid.
//!
//! Each filter is a log-Gaussian in radial frequency times a Gaussian in
//! orientation:
//!
//! ```text
//! G(f, theta) = exp(-(ln(f / f0))^2 / (2 ln(sigma_on_f)^2))
//!             * exp(-(theta - theta0)^2 / (2 sigma_theta^2)),   G(0) = 0
//! ```
//!
//! The filter is one-sided in orientation, so its inverse transform is a
//! complex quadrature pair: an even real part and an odd imaginary part.
//! Phase `phi` selects `Re(exp(i phi) h)`. The transform is evaluated about
//! the patch centre `(n - 1) / 2`, which makes the real part exactly even.

use std::f64::consts::PI;

use super::{normalize_columns, Dictionary};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LogGaborParams {
    pub patch_side: usize,
    pub scales: usize,
    pub orientations: usize,
    /// Phase samples over the half cycle `[0, pi)`.
    pub phases: usize,
    /// Wavelength of the finest scale, in pixels.
    pub min_wavelength: f64,
    /// Wavelength multiplier between consecutive scales.
    pub scale_factor: f64,
    /// Ratio of the log-Gaussian's standard deviation to the centre frequency.
    pub sigma_on_f: f64,
    /// Angular standard deviation as a fraction of the orientation spacing.
    pub angular_spread: f64,
    /// Split each signed kernel into its positive and negative parts so all
    /// atoms are nonnegative. Doubles the bank.
    pub rectify: bool,
}

impl Default for LogGaborParams {
    fn default() -> Self {
        Self {
            patch_side: 8,
            scales: 4,
            orientations: 8,
            phases: 8,
            min_wavelength: 3.0,
            scale_factor: 1.6,
            sigma_on_f: 0.65,
            angular_spread: 0.5,
            rectify: true,
        }
    }
}

impl LogGaborParams {
    /// Number of atoms the bank can produce.
    pub fn bank_size(&self) -> usize {
        let signed = self.scales * self.orientations * self.phases;
        if self.rectify {
            2 * signed
        } else {
            signed
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.patch_side == 0 || self.scales == 0 || self.orientations == 0 || self.phases == 0 {
            return bad("patch side, scales, orientations and phases must be positive".into());
        }
        if !(self.sigma_on_f > 0.0 && self.sigma_on_f < 1.0) {
            return bad(format!("sigma_on_f must lie in (0, 1), got {}", self.sigma_on_f));
        }
        if !(self.scale_factor > 1.0) {
            return bad(format!("scale_factor must exceed 1, got {}", self.scale_factor));
        }
        if !(self.min_wavelength > 0.0) {
            return bad(format!("min_wavelength must be positive, got {}", self.min_wavelength));
        }
        if !(self.angular_spread > 0.0) {
            return bad(format!("angular_spread must be positive, got {}", self.angular_spread));
        }
        Ok(())
    }

    fn center_frequency(&self, scale: usize) -> f64 {
        1.0 / (self.min_wavelength * self.scale_factor.powi(scale as i32))
    }

    fn orientation_angle(&self, orientation: usize) -> f64 {
        orientation as f64 * PI / self.orientations as f64
    }
}

/// Signed DFT frequency of bin `u` on an `n`-point grid, in cycles/pixel.
fn bin_frequency(u: usize, n: usize) -> f64 {
    let u = u as f64;
    let n_f = n as f64;
    if u < n_f / 2.0 {
        u / n_f
    } else {
        (u - n_f) / n_f
    }
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Transfer function of one filter on the `n x n` DFT grid, row-major with
/// `[v * n + u]` holding vertical bin `v` and horizontal bin `u`. The DC bin
/// is exactly zero.
pub fn log_gabor_transfer(params: &LogGaborParams, scale: usize, orientation: usize) -> Result<Vec<f64>> {
    params.validate()?;
    if scale >= params.scales || orientation >= params.orientations {
        return Err(Error::InvalidParameter(format!(
            "filter ({scale}, {orientation}) outside a {}x{} bank",
            params.scales, params.orientations
        )));
    }
    Ok(transfer(params, scale, orientation))
}

fn transfer(params: &LogGaborParams, scale: usize, orientation: usize) -> Vec<f64> {
    let n = params.patch_side;
    let f0 = params.center_frequency(scale);
    let theta0 = params.orientation_angle(orientation);
    let sigma_theta = params.angular_spread * PI / params.orientations as f64;
    let log_sigma = params.sigma_on_f.ln();
    let mut g = vec![0.0; n * n];
    for v in 0..n {
        let fy = bin_frequency(v, n);
        for u in 0..n {
            let fx = bin_frequency(u, n);
            let f = (fx * fx + fy * fy).sqrt();
            if f == 0.0 {
                continue;
            }
            let radial = (-(f / f0).ln().powi(2) / (2.0 * log_sigma * log_sigma)).exp();
            let d_theta = wrap_angle(fy.atan2(fx) - theta0);
            let angular = (-(d_theta * d_theta) / (2.0 * sigma_theta * sigma_theta)).exp();
            g[v * n + u] = radial * angular;
        }
    }
    g
}

/// Complex spatial response (real, imaginary) of a transfer function,
/// centred on the patch.
fn spatial_pair(g: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let c = (n as f64 - 1.0) / 2.0;
    let mut re = vec![0.0; n * n];
    let mut im = vec![0.0; n * n];
    for y in 0..n {
        for x in 0..n {
            let (mut sr, mut si) = (0.0, 0.0);
            for v in 0..n {
                let fy = bin_frequency(v, n);
                for u in 0..n {
                    let w = g[v * n + u];
                    if w == 0.0 {
                        continue;
                    }
                    let fx = bin_frequency(u, n);
                    let arg = 2.0 * PI * (fx * (x as f64 - c) + fy * (y as f64 - c));
                    sr += w * arg.cos();
                    si += w * arg.sin();
                }
            }
            re[y * n + x] = sr;
            im[y * n + x] = si;
        }
    }
    (re, im)
}

/// Generate the first `k` atoms of a log-Gabor bank.
///
/// Atoms are ordered scale-major, then orientation, then phase; in the
/// rectified variant each signed kernel contributes its positive part
/// followed by its negative part.
pub fn log_gabor_dictionary(params: &LogGaborParams, k: usize) -> Result<Dictionary> {
    params.validate()?;
    let m = params.patch_side * params.patch_side;
    if k > params.bank_size() {
        return Err(Error::InvalidParameter(format!(
            "requested {k} atoms from a bank of {}",
            params.bank_size()
        )));
    }
    if k <= m {
        return Err(Error::InvalidParameter(format!(
            "dictionary must be over-complete: {k} atoms of length {m}"
        )));
    }

    let mut atoms: Vec<Vec<f64>> = Vec::with_capacity(k);
    'bank: for scale in 0..params.scales {
        for orientation in 0..params.orientations {
            let g = transfer(params, scale, orientation);
            let (re, im) = spatial_pair(&g, params.patch_side);
            for p in 0..params.phases {
                let phi = p as f64 * PI / params.phases as f64;
                let (cp, sp) = (phi.cos(), phi.sin());
                let kernel: Vec<f64> = re.iter().zip(&im).map(|(r, i)| cp * r - sp * i).collect();
                if params.rectify {
                    atoms.push(kernel.iter().map(|&v| v.max(0.0)).collect());
                    if atoms.len() == k {
                        break 'bank;
                    }
                    atoms.push(kernel.iter().map(|&v| (-v).max(0.0)).collect());
                } else {
                    atoms.push(kernel);
                }
                if atoms.len() == k {
                    break 'bank;
                }
            }
        }
    }

    let mut data = Vec::with_capacity(m * k);
    for a in &atoms {
        data.extend_from_slice(a);
    }
    normalize_columns(&Dictionary::new(m, k, data)?)
}
