//! C ABI over the sparse-denoise library.
//!
//! Images and dictionaries cross the boundary as opaque handles that must be
//! released with their `*_free` function. Every fallible call returns an
//! [`SdStatus`]; on failure, [`sd_last_error_message`] describes the error
//! for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use sparse_denoise::dictionary::{read_dictionary, write_dictionary};
use sparse_denoise::imagecore::{add_gaussian_noise, load_image, mse, psnr, save_image};
use sparse_denoise::{
    denoise, denoise_with_reference, Coder, DenoiseConfig, DenoiseReport, Dictionary, DictKind,
    Error, Image, NoiseSpec, Updater,
};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    DimensionMismatch = 5,
    Numerical = 6,
    Panic = 7,
}

pub const SD_DICT_LOG_GABOR: u32 = 0;
pub const SD_DICT_DCT: u32 = 1;

pub const SD_CODER_OMP: u32 = 0;
pub const SD_CODER_AMP: u32 = 1;

pub const SD_UPDATER_NNMF: u32 = 0;
pub const SD_UPDATER_KSVD: u32 = 1;
pub const SD_UPDATER_NONE: u32 = 2;

/// Opaque grayscale image.
pub struct SdImage(Image);

/// Opaque dictionary (atoms stored column by column).
pub struct SdDictionary(Dictionary);

/// Denoising settings. Fill with [`sd_config_default`] and adjust.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SdDenoiseConfig {
    pub patch_side: usize,
    pub stride: usize,
    /// `SD_DICT_*`.
    pub dict_kind: u32,
    pub dict_k: usize,
    /// `SD_CODER_*`.
    pub coder: u32,
    /// `SD_UPDATER_*`.
    pub updater: u32,
    pub outer_iters: usize,
    pub sigma: f64,
    pub epsilon_factor: f64,
    /// Explicit residual energy goal; zero or negative derives it from sigma.
    pub epsilon: f64,
    pub nn_threshold: f64,
    pub max_atoms: usize,
    pub nmf_inner_iters: usize,
    pub usage_min: usize,
    pub coherence_max: f64,
    pub signed_dictionary: bool,
    pub dc_atom: bool,
    pub lg_scales: usize,
    pub lg_orientations: usize,
    /// Zero picks the default for the bank's sign mode.
    pub lg_phases: usize,
    pub lg_min_wavelength: f64,
    pub lg_scale_factor: f64,
    pub lg_sigma_on_f: f64,
}

/// Summary of one denoising run. PSNR fields are NaN without a reference.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SdDenoiseReport {
    pub psnr_in: f64,
    pub psnr_out: f64,
    pub atoms_replaced: usize,
    pub wall_time: f64,
    pub inner_product_count: u64,
    pub outer_iterations_run: usize,
    pub early_exit: bool,
    pub epsilon: f64,
    pub final_mean_residual: f64,
    pub columns_converged: usize,
    pub columns_max_atoms: usize,
    pub columns_stalled: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> SdStatus {
    match e {
        Error::Io { .. } => SdStatus::Io,
        Error::UnsupportedFormat(_) | Error::UnsupportedBitDepth(_) | Error::Malformed(_) => {
            SdStatus::Format
        }
        Error::DimensionMismatch(_) => SdStatus::DimensionMismatch,
        Error::ZeroColumn(_) | Error::NegativeEntry(_) => SdStatus::Numerical,
        Error::Column { source, .. } => status_of(source),
        _ => SdStatus::InvalidArgument,
    }
}

struct Failure(SdStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SdStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SdStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            SdStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(SdStatus::InvalidArgument, "path is not valid UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn invalid(msg: String) -> Failure {
    Failure(SdStatus::InvalidArgument, msg)
}

impl SdDenoiseConfig {
    fn to_config(self) -> Result<DenoiseConfig, Failure> {
        let dict_kind = match self.dict_kind {
            SD_DICT_LOG_GABOR => DictKind::LogGabor,
            SD_DICT_DCT => DictKind::Dct,
            v => return Err(invalid(format!("unknown dict_kind {v}"))),
        };
        let coder = match self.coder {
            SD_CODER_OMP => Coder::Omp,
            SD_CODER_AMP => Coder::Amp,
            v => return Err(invalid(format!("unknown coder {v}"))),
        };
        let updater = match self.updater {
            SD_UPDATER_NNMF => Updater::Nnmf,
            SD_UPDATER_KSVD => Updater::Ksvd,
            SD_UPDATER_NONE => Updater::None,
            v => return Err(invalid(format!("unknown updater {v}"))),
        };
        Ok(DenoiseConfig {
            patch_side: self.patch_side,
            stride: self.stride,
            dict_kind,
            dict_k: self.dict_k,
            coder,
            updater,
            outer_iters: self.outer_iters,
            sigma: self.sigma,
            epsilon_factor: self.epsilon_factor,
            epsilon: (self.epsilon > 0.0).then_some(self.epsilon),
            nn_threshold: self.nn_threshold,
            max_atoms: self.max_atoms,
            nmf_inner_iters: self.nmf_inner_iters,
            usage_min: self.usage_min,
            coherence_max: self.coherence_max,
            signed_dictionary: self.signed_dictionary,
            dc_atom: self.dc_atom,
            lg_scales: self.lg_scales,
            lg_orientations: self.lg_orientations,
            lg_phases: (self.lg_phases > 0).then_some(self.lg_phases),
            lg_min_wavelength: self.lg_min_wavelength,
            lg_scale_factor: self.lg_scale_factor,
            lg_sigma_on_f: self.lg_sigma_on_f,
        })
    }
}

impl From<&DenoiseConfig> for SdDenoiseConfig {
    fn from(c: &DenoiseConfig) -> Self {
        SdDenoiseConfig {
            patch_side: c.patch_side,
            stride: c.stride,
            dict_kind: match c.dict_kind {
                DictKind::LogGabor => SD_DICT_LOG_GABOR,
                DictKind::Dct => SD_DICT_DCT,
            },
            dict_k: c.dict_k,
            coder: match c.coder {
                Coder::Omp => SD_CODER_OMP,
                Coder::Amp => SD_CODER_AMP,
            },
            updater: match c.updater {
                Updater::Nnmf => SD_UPDATER_NNMF,
                Updater::Ksvd => SD_UPDATER_KSVD,
                Updater::None => SD_UPDATER_NONE,
            },
            outer_iters: c.outer_iters,
            sigma: c.sigma,
            epsilon_factor: c.epsilon_factor,
            epsilon: c.epsilon.unwrap_or(0.0),
            nn_threshold: c.nn_threshold,
            max_atoms: c.max_atoms,
            nmf_inner_iters: c.nmf_inner_iters,
            usage_min: c.usage_min,
            coherence_max: c.coherence_max,
            signed_dictionary: c.signed_dictionary,
            dc_atom: c.dc_atom,
            lg_scales: c.lg_scales,
            lg_orientations: c.lg_orientations,
            lg_phases: c.lg_phases.unwrap_or(0),
            lg_min_wavelength: c.lg_min_wavelength,
            lg_scale_factor: c.lg_scale_factor,
            lg_sigma_on_f: c.lg_sigma_on_f,
        }
    }
}

impl From<&DenoiseReport> for SdDenoiseReport {
    fn from(r: &DenoiseReport) -> Self {
        let (converged, capped, stalled) = r.terminations;
        SdDenoiseReport {
            psnr_in: r.psnr_in.unwrap_or(f64::NAN),
            psnr_out: r.psnr_out.unwrap_or(f64::NAN),
            atoms_replaced: r.atoms_replaced,
            wall_time: r.wall_time,
            inner_product_count: r.inner_product_count,
            outer_iterations_run: r.outer_iterations_run,
            early_exit: r.early_exit,
            epsilon: r.epsilon,
            final_mean_residual: r.final_mean_residual,
            columns_converged: converged,
            columns_max_atoms: capped,
            columns_stalled: stalled,
        }
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL if the last call
/// succeeded. Valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn sd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Create an image from `width * height` row-major intensities, or a black
/// image when `pixels` is NULL.
///
/// # Safety
/// `pixels` must be NULL or point to `width * height` readable doubles;
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sd_image_new(
    width: usize,
    height: usize,
    pixels: *const f64,
    out: *mut *mut SdImage,
) -> SdStatus {
    guard(|| {
        let n = width
            .checked_mul(height)
            .ok_or_else(|| invalid("image size overflows".into()))?;
        let data = if pixels.is_null() {
            vec![0.0; n]
        } else {
            std::slice::from_raw_parts(pixels, n).to_vec()
        };
        emit(out, SdImage(Image::new(width, height, data)?))
    })
}

/// Read a binary PGM or 8-bit grayscale PNG.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sd_image_load(path: *const c_char, out: *mut *mut SdImage) -> SdStatus {
    guard(|| {
        let path = path_arg(path)?;
        emit(out, SdImage(load_image(path)?))
    })
}

/// Write an image as binary PGM (clamped and rounded to 8 bits).
///
/// # Safety
/// `image` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sd_image_save(image: *const SdImage, path: *const c_char) -> SdStatus {
    guard(|| {
        let image = borrow(image, "image")?;
        let path = path_arg(path)?;
        save_image(&image.0, path)?;
        Ok(())
    })
}

/// # Safety
/// `image` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sd_image_free(image: *mut SdImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

/// # Safety
/// `image` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sd_image_width(image: *const SdImage) -> usize {
    image.as_ref().map_or(0, |i| i.0.width())
}

/// # Safety
/// `image` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sd_image_height(image: *const SdImage) -> usize {
    image.as_ref().map_or(0, |i| i.0.height())
}

/// Row-major pixel buffer of `width * height` doubles, owned by the handle.
///
/// # Safety
/// `image` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sd_image_pixels(image: *const SdImage) -> *const f64 {
    image.as_ref().map_or(ptr::null(), |i| i.0.pixels().as_ptr())
}

/// Add clamped Gaussian noise with the given seed.
///
/// # Safety
/// `image` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sd_add_noise(
    image: *const SdImage,
    sigma: f64,
    seed: u64,
    out: *mut *mut SdImage,
) -> SdStatus {
    guard(|| {
        let image = borrow(image, "image")?;
        let noisy = add_gaussian_noise(&image.0, NoiseSpec::new(sigma, seed)?)?;
        emit(out, SdImage(noisy))
    })
}

/// # Safety
/// `a` and `b` must be live handles; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sd_mse(a: *const SdImage, b: *const SdImage, out: *mut f64) -> SdStatus {
    guard(|| {
        let v = mse(&borrow(a, "a")?.0, &borrow(b, "b")?.0)?;
        *out.as_mut().ok_or_else(|| null("output pointer"))? = v;
        Ok(())
    })
}

/// PSNR in dB; identical images give positive infinity.
///
/// # Safety
/// `a` and `b` must be live handles; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sd_psnr(a: *const SdImage, b: *const SdImage, out: *mut f64) -> SdStatus {
    guard(|| {
        let v = psnr(&borrow(a, "a")?.0, &borrow(b, "b")?.0)?;
        *out.as_mut().ok_or_else(|| null("output pointer"))? = v;
        Ok(())
    })
}

/// Fill `out` with the library defaults.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sd_config_default(out: *mut SdDenoiseConfig) -> SdStatus {
    guard(|| {
        *out.as_mut().ok_or_else(|| null("output pointer"))? = (&DenoiseConfig::default()).into();
        Ok(())
    })
}

/// Denoise `noisy`. `report` may be NULL.
///
/// # Safety
/// `noisy` must be a live handle, `config` and `out` valid pointers, and
/// `report` NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn sd_denoise(
    noisy: *const SdImage,
    config: *const SdDenoiseConfig,
    out: *mut *mut SdImage,
    report: *mut SdDenoiseReport,
) -> SdStatus {
    guard(|| {
        let noisy = borrow(noisy, "noisy image")?;
        let cfg = borrow(config, "config")?.to_config()?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let (image, r) = denoise(&noisy.0, &cfg)?;
        if let Some(rep) = report.as_mut() {
            *rep = (&r).into();
        }
        emit(out, SdImage(image))
    })
}

/// Add noise of `config->sigma` with `seed` to `clean`, denoise, and score
/// both images against `clean`. `out` and `report` may be NULL.
///
/// # Safety
/// `clean` must be a live handle, `config` valid, `out` and `report` NULL or
/// valid.
#[no_mangle]
pub unsafe extern "C" fn sd_denoise_with_reference(
    clean: *const SdImage,
    config: *const SdDenoiseConfig,
    seed: u64,
    out: *mut *mut SdImage,
    report: *mut SdDenoiseReport,
) -> SdStatus {
    guard(|| {
        let clean = borrow(clean, "clean image")?;
        let cfg = borrow(config, "config")?.to_config()?;
        let noise = NoiseSpec::new(cfg.sigma, seed)?;
        let (image, r) = denoise_with_reference(&clean.0, &cfg, noise)?;
        if let Some(rep) = report.as_mut() {
            *rep = (&r).into();
        }
        if !out.is_null() {
            emit(out, SdImage(image))?;
        }
        Ok(())
    })
}

/// The initial dictionary `config` would start from.
///
/// # Safety
/// `config` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sd_dictionary_initial(
    config: *const SdDenoiseConfig,
    out: *mut *mut SdDictionary,
) -> SdStatus {
    guard(|| {
        let cfg = borrow(config, "config")?.to_config()?;
        emit(out, SdDictionary(cfg.initial_dictionary()?))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sd_dictionary_load(
    path: *const c_char,
    out: *mut *mut SdDictionary,
) -> SdStatus {
    guard(|| {
        let path = path_arg(path)?;
        emit(out, SdDictionary(read_dictionary(path)?))
    })
}

/// # Safety
/// `dict` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sd_dictionary_save(
    dict: *const SdDictionary,
    path: *const c_char,
) -> SdStatus {
    guard(|| {
        let dict = borrow(dict, "dictionary")?;
        let path = path_arg(path)?;
        write_dictionary(&dict.0, path)?;
        Ok(())
    })
}

/// Atom length.
///
/// # Safety
/// `dict` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sd_dictionary_rows(dict: *const SdDictionary) -> usize {
    dict.as_ref().map_or(0, |d| d.0.m())
}

/// Atom count.
///
/// # Safety
/// `dict` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sd_dictionary_atoms(dict: *const SdDictionary) -> usize {
    dict.as_ref().map_or(0, |d| d.0.k())
}

/// Column-major atom data (`rows * atoms` doubles), owned by the handle.
///
/// # Safety
/// `dict` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sd_dictionary_data(dict: *const SdDictionary) -> *const f64 {
    dict.as_ref().map_or(ptr::null(), |d| d.0.as_slice().as_ptr())
}

/// # Safety
/// `dict` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sd_dictionary_free(dict: *mut SdDictionary) {
    if !dict.is_null() {
        drop(Box::from_raw(dict));
    }
}
