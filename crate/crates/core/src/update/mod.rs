//! Dictionary updates with the codes held fixed.

mod hygiene;
mod ksvd;
mod nmf;

pub use hygiene::replace_dead_atoms;
pub use ksvd::{dominant_singular_triplet, ksvd_update_dictionary, KsvdUpdate, SingularTriplet};
pub use nmf::{nmf_update_dictionary, NmfUpdate, NMF_DENOMINATOR_GUARD};

use rayon::prelude::*;

use crate::coding::SparseCode;
use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::patching::PatchMatrix;

/// Which rule refreshes the dictionary between coding passes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Updater {
    /// Lee-Seung multiplicative update of the nonnegative dictionary.
    Nnmf,
    /// Per-atom rank-1 refit.
    Ksvd,
    /// Fixed dictionary.
    None,
}

impl std::str::FromStr for Updater {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nnmf" | "nmf" => Ok(Updater::Nnmf),
            "ksvd" | "k-svd" => Ok(Updater::Ksvd),
            "none" | "fixed" => Ok(Updater::None),
            other => Err(Error::Config(format!(
                "unknown updater `{other}` (nnmf|ksvd|none)"
            ))),
        }
    }
}

impl std::fmt::Display for Updater {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Updater::Nnmf => "nnmf",
            Updater::Ksvd => "ksvd",
            Updater::None => "none",
        })
    }
}

/// Dictionary, codes and the Frobenius error `||Y - DS||_F` they achieve.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationState {
    pub d: Dictionary,
    pub s: SparseCode,
    pub frobenius_error: f64,
}

impl FactorizationState {
    pub fn new(y: &PatchMatrix, d: Dictionary, s: SparseCode) -> Result<Self> {
        check_conformable(y, &d, &s)?;
        let frobenius_error = frobenius_error(y, &d, &s);
        Ok(Self {
            d,
            s,
            frobenius_error,
        })
    }

    pub(crate) fn refresh_error(&mut self, y: &PatchMatrix) {
        self.frobenius_error = frobenius_error(y, &self.d, &self.s);
    }
}

pub(crate) fn check_conformable(y: &PatchMatrix, d: &Dictionary, s: &SparseCode) -> Result<()> {
    if y.rows() != d.m() || s.k() != d.k() || s.n() != y.cols() {
        return Err(Error::DimensionMismatch(format!(
            "Y is {}x{}, D is {}x{}, S is {}x{}",
            y.rows(),
            y.cols(),
            d.m(),
            d.k(),
            s.k(),
            s.n()
        )));
    }
    Ok(())
}

/// `||y_j - D s_j||^2` for every column.
pub fn column_residual_energies(y: &PatchMatrix, d: &Dictionary, s: &SparseCode) -> Vec<f64> {
    (0..y.cols())
        .into_par_iter()
        .map(|j| {
            let mut r = vec![0.0; d.m()];
            s.column(j).reconstruct_into(d, &mut r);
            y.column(j)
                .iter()
                .zip(&r)
                .map(|(a, b)| (a - b) * (a - b))
                .sum()
        })
        .collect()
}

/// `||Y - DS||_F`, summed in column order.
pub fn frobenius_error(y: &PatchMatrix, d: &Dictionary, s: &SparseCode) -> f64 {
    column_residual_energies(y, d, s).iter().sum::<f64>().sqrt()
}

/// Dense `D S` as a patch matrix on `y`'s grid.
pub fn reconstruct_patches(y: &PatchMatrix, d: &Dictionary, s: &SparseCode) -> Result<PatchMatrix> {
    check_conformable(y, d, s)?;
    let m = d.m();
    let mut data = vec![0.0; m * y.cols()];
    data.par_chunks_mut(m)
        .enumerate()
        .for_each(|(j, out)| s.column(j).reconstruct_into(d, out));
    y.with_data(data)
}
