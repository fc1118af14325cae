//! Over-complete dictionaries: storage, normalization and the two
//! generators (log-Gabor bank, separable over-complete DCT).

mod dct;
mod io;
mod log_gabor;

pub use dct::overcomplete_dct_dictionary;
pub use io::{decode_dictionary, encode_dictionary, read_dictionary, write_dictionary, write_mosaic, atom_mosaic};
pub use log_gabor::{log_gabor_dictionary, log_gabor_transfer, LogGaborParams};

use crate::error::{Error, Result};

/// `M x K` matrix of atoms, stored column-major so each atom is a contiguous
/// slice of length `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    m: usize,
    k: usize,
    atoms: Vec<f64>,
}

impl Dictionary {
    /// Wrap raw column-major data. No normalization is applied.
    pub fn new(m: usize, k: usize, atoms: Vec<f64>) -> Result<Self> {
        if m == 0 || k == 0 {
            return Err(Error::DimensionMismatch(format!(
                "dictionary dimensions must be positive, got {m}x{k}"
            )));
        }
        if atoms.len() != m * k {
            return Err(Error::DimensionMismatch(format!(
                "{m}x{k} dictionary needs {} entries, got {}",
                m * k,
                atoms.len()
            )));
        }
        Ok(Self { m, k, atoms })
    }

    /// Build from a list of atoms, each normalized to unit length.
    pub fn from_atoms(m: usize, atoms: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(m * atoms.len());
        for a in atoms {
            if a.len() != m {
                return Err(Error::DimensionMismatch(format!(
                    "atom of length {} in a dictionary of length-{m} atoms",
                    a.len()
                )));
            }
            data.extend_from_slice(a);
        }
        normalize_columns(&Dictionary::new(m, atoms.len(), data)?)
    }

    /// Atom length.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Atom count.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.atoms[i * self.m..(i + 1) * self.m]
    }

    pub fn atom_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.atoms[i * self.m..(i + 1) * self.m]
    }

    pub fn atoms(&self) -> std::slice::ChunksExact<'_, f64> {
        self.atoms.chunks_exact(self.m)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.atoms
    }

    pub fn is_overcomplete(&self) -> bool {
        self.k > self.m
    }

    pub fn is_nonnegative(&self) -> bool {
        self.atoms.iter().all(|&v| v >= 0.0)
    }

    /// Largest deviation of any atom norm from 1.
    pub fn max_norm_deviation(&self) -> f64 {
        self.atoms()
            .map(|a| (norm(a) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `K x K` Gram matrix `D^T D`, row-major.
    pub fn gram(&self) -> Vec<f64> {
        let k = self.k;
        let mut g = vec![0.0; k * k];
        for i in 0..k {
            for j in i..k {
                let v = dot(self.atom(i), self.atom(j));
                g[i * k + j] = v;
                g[j * k + i] = v;
            }
        }
        g
    }

    /// Largest `|d_i . d_j|` over distinct atoms.
    pub fn mutual_coherence(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.k {
            for j in i + 1..self.k {
                best = best.max(dot(self.atom(i), self.atom(j)).abs());
            }
        }
        best
    }
}

/// Scale every atom to unit Euclidean norm.
pub fn normalize_columns(d: &Dictionary) -> Result<Dictionary> {
    let mut out = d.clone();
    for i in 0..out.k {
        let a = out.atom_mut(i);
        let n = norm(a);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroColumn(i));
        }
        a.iter_mut().for_each(|v| *v /= n);
    }
    Ok(out)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // four accumulators let the compiler vectorize without reassociation
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
