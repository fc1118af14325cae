//! End-to-end denoising: patch the noisy image, learn a dictionary on its
//! own patches by alternating sparse coding and dictionary updates, then
//! re-code and average the patch estimates back into an image.

use std::time::Instant;

use log::debug;

use crate::coding::{encode_matrix, Coder, CodingConfig, SparseCode};
use crate::dictionary::{log_gabor_dictionary, overcomplete_dct_dictionary, Dictionary, LogGaborParams};
use crate::error::{Error, Result};
use crate::imagecore::{add_gaussian_noise, psnr, Image, NoiseSpec};
use crate::patching::{extract_patches, reconstruct_from_patches};
use crate::update::{
    ksvd_update_dictionary, nmf_update_dictionary, reconstruct_patches, replace_dead_atoms,
    FactorizationState, Updater,
};

/// Smallest residual-energy goal used when `sigma` is zero.
pub const EPSILON_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DictKind {
    LogGabor,
    Dct,
}

impl std::str::FromStr for DictKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "log-gabor" | "loggabor" | "lg" => Ok(DictKind::LogGabor),
            "dct" => Ok(DictKind::Dct),
            other => Err(Error::Config(format!(
                "unknown dictionary kind `{other}` (log-gabor|dct)"
            ))),
        }
    }
}

impl std::fmt::Display for DictKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DictKind::LogGabor => "log-gabor",
            DictKind::Dct => "dct",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseConfig {
    pub patch_side: usize,
    pub stride: usize,
    pub dict_kind: DictKind,
    pub dict_k: usize,
    pub coder: Coder,
    pub updater: Updater,
    /// Upper bound on coding/update rounds.
    pub outer_iters: usize,
    /// Assumed noise standard deviation.
    pub sigma: f64,
    /// Residual goal per patch is `(epsilon_factor * sigma * patch_side)^2`.
    pub epsilon_factor: f64,
    /// Explicit residual-energy goal, overriding the sigma-derived one.
    pub epsilon: Option<f64>,
    pub nn_threshold: f64,
    pub max_atoms: usize,
    /// Multiplicative steps per NMF dictionary update.
    pub nmf_inner_iters: usize,
    /// Atoms used by fewer columns than this are replaced after each update.
    pub usage_min: usize,
    /// Atoms more coherent than this with an earlier atom are replaced.
    pub coherence_max: f64,
    /// Keep log-Gabor kernels signed instead of splitting them into
    /// nonnegative halves.
    pub signed_dictionary: bool,
    /// Make atom 0 of a log-Gabor dictionary the constant patch, followed by
    /// the first `dict_k - 1` bank atoms.
    pub dc_atom: bool,
    /// Log-Gabor bank shape. `phases = None` picks 8 for a signed bank and 4
    /// for a rectified one, so either holds 256 atoms.
    pub lg_scales: usize,
    pub lg_orientations: usize,
    pub lg_phases: Option<usize>,
    pub lg_min_wavelength: f64,
    pub lg_scale_factor: f64,
    pub lg_sigma_on_f: f64,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        let lg = LogGaborParams::default();
        Self {
            patch_side: 8,
            stride: 1,
            dict_kind: DictKind::LogGabor,
            dict_k: 256,
            coder: Coder::Amp,
            updater: Updater::Nnmf,
            outer_iters: 10,
            sigma: 20.0,
            epsilon_factor: 1.15,
            epsilon: None,
            nn_threshold: 0.9,
            max_atoms: 16,
            nmf_inner_iters: 5,
            usage_min: 1,
            coherence_max: 0.99,
            signed_dictionary: false,
            dc_atom: true,
            lg_scales: lg.scales,
            lg_orientations: lg.orientations,
            lg_phases: None,
            lg_min_wavelength: lg.min_wavelength,
            lg_scale_factor: lg.scale_factor,
            lg_sigma_on_f: lg.sigma_on_f,
        }
    }
}

impl DenoiseConfig {
    /// Whether dictionary and codes are constrained to be nonnegative.
    pub fn nonnegative(&self) -> bool {
        self.updater == Updater::Nnmf
    }

    fn dictionary_is_nonnegative(&self) -> bool {
        self.dict_kind == DictKind::LogGabor && !self.signed_dictionary
    }

    pub fn log_gabor_params(&self) -> LogGaborParams {
        let rectify = !self.signed_dictionary;
        LogGaborParams {
            patch_side: self.patch_side,
            scales: self.lg_scales,
            orientations: self.lg_orientations,
            phases: self.lg_phases.unwrap_or(if rectify { 4 } else { 8 }),
            min_wavelength: self.lg_min_wavelength,
            scale_factor: self.lg_scale_factor,
            sigma_on_f: self.lg_sigma_on_f,
            angular_spread: 0.5,
            rectify,
        }
    }

    /// Per-patch residual-energy goal.
    pub fn effective_epsilon(&self) -> f64 {
        self.epsilon.unwrap_or_else(|| {
            let e = self.epsilon_factor * self.sigma * self.patch_side as f64;
            (e * e).max(EPSILON_FLOOR)
        })
    }

    pub fn coding_config(&self) -> CodingConfig {
        CodingConfig {
            epsilon: self.effective_epsilon(),
            max_atoms: self.max_atoms,
            nn_threshold: self.nn_threshold,
            nonnegative_coefficients: self.nonnegative(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.patch_side == 0 || self.stride == 0 {
            return bad("patch_side and stride must be positive".into());
        }
        if self.outer_iters == 0 || self.nmf_inner_iters == 0 {
            return bad("outer_iters and nmf_inner_iters must be positive".into());
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be finite and >= 0, got {}", self.sigma));
        }
        if !(self.epsilon_factor > 0.0) {
            return bad(format!("epsilon_factor must be positive, got {}", self.epsilon_factor));
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0) {
                return bad(format!("epsilon must be positive, got {e}"));
            }
        }
        if !(self.coherence_max > 0.0 && self.coherence_max < 1.0) {
            return bad(format!("coherence_max must lie in (0, 1), got {}", self.coherence_max));
        }
        if self.updater == Updater::Nnmf && !self.dictionary_is_nonnegative() {
            let kind = match self.dict_kind {
                DictKind::LogGabor => "signed log-gabor",
                DictKind::Dct => "dct",
            };
            return bad(format!(
                "the nnmf updater needs a nonnegative dictionary, but the {kind} dictionary is signed"
            ));
        }
        self.coding_config()
            .validate(self.patch_side * self.patch_side)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn initial_dictionary(&self) -> Result<Dictionary> {
        match self.dict_kind {
            DictKind::LogGabor if self.dc_atom => {
                let m = self.patch_side * self.patch_side;
                let k = self.dict_k.checked_sub(1).ok_or_else(|| {
                    Error::Config("dict_k must be positive".into())
                })?;
                let bank = log_gabor_dictionary(&self.log_gabor_params(), k)?;
                let mut atoms = vec![1.0 / (m as f64).sqrt(); m];
                atoms.extend_from_slice(bank.as_slice());
                Dictionary::new(m, self.dict_k, atoms)
            }
            DictKind::LogGabor => log_gabor_dictionary(&self.log_gabor_params(), self.dict_k),
            DictKind::Dct => {
                let per_axis = (self.dict_k as f64).sqrt().round() as usize;
                if per_axis * per_axis != self.dict_k {
                    return Err(Error::Config(format!(
                        "a DCT dictionary needs a square atom count, got {}",
                        self.dict_k
                    )));
                }
                overcomplete_dct_dictionary(self.patch_side, per_axis)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseReport {
    /// Set only when a clean reference is available.
    pub psnr_in: Option<f64>,
    pub psnr_out: Option<f64>,
    /// `||Y - DS||_F` after each dictionary update.
    pub outer_iteration_errors: Vec<f64>,
    /// Error trace of every multiplicative step, per outer round (NMF only).
    pub nmf_error_traces: Vec<Vec<f64>>,
    pub atoms_replaced: usize,
    pub wall_time: f64,
    pub inner_product_count: u64,
    /// Coding passes that were followed by an update.
    pub outer_iterations_run: usize,
    /// Training stopped because the mean residual met the goal.
    pub early_exit: bool,
    pub epsilon: f64,
    /// Mean `||y_j - D s_j||^2` of the final codes.
    pub final_mean_residual: f64,
    /// Final codes' (error goal, max atoms, stalled) terminations.
    pub terminations: (usize, usize, usize),
}

fn mean_residual(s: &SparseCode) -> f64 {
    s.columns().iter().map(|c| c.residual_energy).sum::<f64>() / s.n() as f64
}

/// Denoise `noisy` with the dictionary learned on its own patches.
pub fn denoise(noisy: &Image, cfg: &DenoiseConfig) -> Result<(Image, DenoiseReport)> {
    cfg.validate()?;
    let start = Instant::now();
    let y = extract_patches(noisy, cfg.patch_side, cfg.stride)?;
    let mut d = cfg.initial_dictionary()?;
    let coding = cfg.coding_config();
    let nonneg = cfg.nonnegative();

    let mut report = DenoiseReport {
        psnr_in: None,
        psnr_out: None,
        outer_iteration_errors: Vec::new(),
        nmf_error_traces: Vec::new(),
        atoms_replaced: 0,
        wall_time: 0.0,
        inner_product_count: 0,
        outer_iterations_run: 0,
        early_exit: false,
        epsilon: coding.epsilon,
        final_mean_residual: 0.0,
        terminations: (0, 0, 0),
    };

    let mut final_code = None;
    if cfg.updater != Updater::None {
        for round in 0..cfg.outer_iters {
            let s = encode_matrix(&d, &y, &coding, cfg.coder)?;
            report.inner_product_count += s.total_inner_products();
            let mean = mean_residual(&s);
            let (_, capped, stalled) = s.termination_counts();
            if capped + stalled == 0 && mean <= coding.epsilon {
                debug!("round {round}: every column meets goal {:.3}", coding.epsilon);
                report.early_exit = true;
                final_code = Some(s);
                break;
            }
            let state = FactorizationState::new(&y, d, s)?;
            let state = match cfg.updater {
                Updater::Nnmf => {
                    let up = nmf_update_dictionary(&y, state, cfg.nmf_inner_iters)?;
                    report.nmf_error_traces.push(up.error_trace);
                    up.state
                }
                Updater::Ksvd => ksvd_update_dictionary(&y, state)?.state,
                Updater::None => unreachable!(),
            };
            report.outer_iteration_errors.push(state.frobenius_error);
            let (state, replaced) =
                replace_dead_atoms(&y, state, cfg.usage_min, cfg.coherence_max, nonneg)?;
            report.atoms_replaced += replaced.len();
            report.outer_iterations_run += 1;
            debug!(
                "round {round}: mean residual {mean:.3}, ||Y-DS|| {:.3}, replaced {}",
                state.frobenius_error,
                replaced.len()
            );
            d = state.d;
        }
    }

    let s = match final_code {
        Some(s) => s,
        None => {
            let s = encode_matrix(&d, &y, &coding, cfg.coder)?;
            report.inner_product_count += s.total_inner_products();
            s
        }
    };
    report.final_mean_residual = mean_residual(&s);
    report.terminations = s.termination_counts();
    let estimates = reconstruct_patches(&y, &d, &s)?;
    let out = reconstruct_from_patches(&estimates, Some(noisy))?;
    report.wall_time = start.elapsed().as_secs_f64();
    Ok((out, report))
}

/// Add noise to `clean`, denoise, and score both images against `clean`.
pub fn denoise_with_reference(
    clean: &Image,
    cfg: &DenoiseConfig,
    noise: NoiseSpec,
) -> Result<(Image, DenoiseReport)> {
    if noise.sigma != cfg.sigma {
        return Err(Error::Config(format!(
            "noise sigma {} differs from the configured sigma {}",
            noise.sigma, cfg.sigma
        )));
    }
    let noisy = add_gaussian_noise(clean, noise)?;
    let (out, mut report) = denoise(&noisy, cfg)?;
    report.psnr_in = Some(psnr(clean, &noisy)?);
    report.psnr_out = Some(psnr(clean, &out)?);
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nnmf_with_signed_dictionary_is_rejected() {
        let cfg = DenoiseConfig { dict_kind: DictKind::Dct, ..Default::default() };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let cfg = DenoiseConfig { signed_dictionary: true, ..Default::default() };
        assert!(cfg.validate().is_err());
        assert!(DenoiseConfig::default().validate().is_ok());
    }

    #[test]
    fn epsilon_scales_with_sigma() {
        let cfg = DenoiseConfig { sigma: 20.0, ..Default::default() };
        assert!((cfg.effective_epsilon() - (1.15f64 * 20.0 * 8.0).powi(2)).abs() < 1e-9);
        let cfg = DenoiseConfig { sigma: 0.0, ..Default::default() };
        assert_eq!(cfg.effective_epsilon(), EPSILON_FLOOR);
    }

    #[test]
    fn default_banks_hold_256_atoms() {
        let cfg = DenoiseConfig::default();
        assert_eq!(cfg.log_gabor_params().bank_size(), 256);
        let signed = DenoiseConfig { signed_dictionary: true, updater: Updater::Ksvd, ..cfg };
        assert_eq!(signed.log_gabor_params().bank_size(), 256);
    }

    #[test]
    fn non_square_dct_count_is_rejected() {
        let cfg = DenoiseConfig {
            dict_kind: DictKind::Dct,
            updater: Updater::None,
            dict_k: 200,
            ..Default::default()
        };
        assert!(cfg.initial_dictionary().is_err());
    }

    #[test]
    fn sigma_mismatch_is_rejected() {
        let img = Image::filled(16, 16, 100.0).unwrap();
        let cfg = DenoiseConfig { sigma: 10.0, ..Default::default() };
        let noise = NoiseSpec { sigma: 20.0, seed: 1 };
        assert!(denoise_with_reference(&img, &cfg, noise).is_err());
    }
}
