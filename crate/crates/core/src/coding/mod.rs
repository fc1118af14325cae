//! Per-column sparse approximation: orthogonal matching pursuit and its
//! near-neighbour accelerated variant, with optional nonnegative codes.

pub mod lsq;
mod pursuit;

use rayon::prelude::*;

pub use pursuit::{amp_encode, encode_column, omp_encode, trace_encode};

use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::patching::PatchMatrix;

/// Stopping rules and variants for the greedy coders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodingConfig {
    /// Residual energy goal, in squared-norm units (`||y - Ds||^2 <= epsilon`).
    pub epsilon: f64,
    /// Upper bound on atom selections per column.
    pub max_atoms: usize,
    /// Near-neighbour acceptance ratio for the approximate coder, in `(0, 1]`.
    pub nn_threshold: f64,
    pub nonnegative_coefficients: bool,
}

impl Default for CodingConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            max_atoms: 16,
            nn_threshold: 0.9,
            nonnegative_coefficients: false,
        }
    }
}

impl CodingConfig {
    pub fn validate(&self, m: usize) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.max_atoms == 0 || self.max_atoms > m {
            return Err(Error::InvalidParameter(format!(
                "max_atoms must be in 1..={m}, got {}",
                self.max_atoms
            )));
        }
        if !(self.nn_threshold > 0.0 && self.nn_threshold <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "nn_threshold must be in (0, 1], got {}",
                self.nn_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Coder {
    Omp,
    Amp,
}

impl std::str::FromStr for Coder {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "omp" => Ok(Coder::Omp),
            "amp" => Ok(Coder::Amp),
            other => Err(Error::Config(format!("unknown coder `{other}` (omp|amp)"))),
        }
    }
}

impl std::fmt::Display for Coder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Coder::Omp => "omp",
            Coder::Amp => "amp",
        })
    }
}

/// Why a column's pursuit stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Residual energy reached the goal.
    ErrorGoal,
    /// Selection budget exhausted.
    MaxAtoms,
    /// The exact best atom no longer reduces the residual.
    Stalled,
}

/// Sparse code of a single signal.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnCode {
    /// Selected atom indices, in selection order.
    pub support: Vec<usize>,
    /// Coefficients aligned with `support`.
    pub coefficients: Vec<f64>,
    /// `||y - D s||^2` at exit.
    pub residual_energy: f64,
    pub termination: Termination,
    /// Atom/residual inner products evaluated during selection.
    pub inner_products: u64,
}

impl ColumnCode {
    pub(crate) fn empty(residual_energy: f64) -> Self {
        Self {
            support: Vec::new(),
            coefficients: Vec::new(),
            residual_energy,
            termination: Termination::ErrorGoal,
            inner_products: 0,
        }
    }

    pub fn get(&self, atom: usize) -> f64 {
        self.support
            .iter()
            .position(|&i| i == atom)
            .map_or(0.0, |p| self.coefficients[p])
    }

    /// `D s` written into `out`.
    pub fn reconstruct_into(&self, d: &Dictionary, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (&i, &c) in self.support.iter().zip(&self.coefficients) {
            for (o, a) in out.iter_mut().zip(d.atom(i)) {
                *o += c * a;
            }
        }
    }
}

/// `K x N` sparse coefficient matrix, one [`ColumnCode`] per data column.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCode {
    k: usize,
    columns: Vec<ColumnCode>,
}

impl SparseCode {
    pub fn new(k: usize, columns: Vec<ColumnCode>) -> Result<Self> {
        for (j, c) in columns.iter().enumerate() {
            if c.support.len() != c.coefficients.len() || c.support.iter().any(|&i| i >= k) {
                return Err(Error::DimensionMismatch(format!(
                    "column {j} has an invalid support for {k} atoms"
                )));
            }
        }
        Ok(Self { k, columns })
    }

    /// Build from a dense row-major `K x N` matrix, keeping nonzeros.
    pub fn from_dense(k: usize, n: usize, dense: &[f64]) -> Result<Self> {
        if dense.len() != k * n {
            return Err(Error::DimensionMismatch(format!(
                "{k}x{n} code needs {} entries, got {}",
                k * n,
                dense.len()
            )));
        }
        let columns = (0..n)
            .map(|j| {
                let mut c = ColumnCode::empty(f64::NAN);
                for i in 0..k {
                    let v = dense[i * n + j];
                    if v != 0.0 {
                        c.support.push(i);
                        c.coefficients.push(v);
                    }
                }
                c
            })
            .collect();
        Ok(Self { k, columns })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &ColumnCode {
        &self.columns[j]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut ColumnCode {
        &mut self.columns[j]
    }

    pub fn columns(&self) -> &[ColumnCode] {
        &self.columns
    }

    pub fn get(&self, atom: usize, j: usize) -> f64 {
        self.columns[j].get(atom)
    }

    /// Dense row-major `K x N` copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; self.k * n];
        for (j, c) in self.columns.iter().enumerate() {
            for (&i, &v) in c.support.iter().zip(&c.coefficients) {
                out[i * n + j] += v;
            }
        }
        out
    }

    /// Number of columns with a nonzero coefficient for each atom.
    pub fn usage(&self) -> Vec<usize> {
        let mut u = vec![0; self.k];
        for c in &self.columns {
            for (&i, &v) in c.support.iter().zip(&c.coefficients) {
                if v != 0.0 {
                    u[i] += 1;
                }
            }
        }
        u
    }

    /// For each atom, the `(column, position in support)` pairs that use it.
    pub fn row_index(&self) -> Vec<Vec<(usize, usize)>> {
        let mut rows = vec![Vec::new(); self.k];
        for (j, c) in self.columns.iter().enumerate() {
            for (p, &i) in c.support.iter().enumerate() {
                rows[i].push((j, p));
            }
        }
        rows
    }

    /// Multiply row `i` of the code by `factors[i]`.
    pub fn scale_rows(&mut self, factors: &[f64]) {
        for c in &mut self.columns {
            for (&i, v) in c.support.iter().zip(c.coefficients.iter_mut()) {
                *v *= factors[i];
            }
        }
    }

    /// Zero row `i` and drop it from every support.
    pub fn clear_row(&mut self, atom: usize) {
        for c in &mut self.columns {
            if let Some(p) = c.support.iter().position(|&i| i == atom) {
                c.support.remove(p);
                c.coefficients.remove(p);
            }
        }
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(|c| c.support.len()).sum()
    }

    pub fn total_inner_products(&self) -> u64 {
        self.columns.iter().map(|c| c.inner_products).sum()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.columns
            .iter()
            .all(|c| c.coefficients.iter().all(|&v| v >= 0.0))
    }

    /// Counts of (error goal, max atoms, stalled) terminations.
    pub fn termination_counts(&self) -> (usize, usize, usize) {
        let mut t = (0, 0, 0);
        for c in &self.columns {
            match c.termination {
                Termination::ErrorGoal => t.0 += 1,
                Termination::MaxAtoms => t.1 += 1,
                Termination::Stalled => t.2 += 1,
            }
        }
        t
    }
}

/// Code every column of `y` independently.
pub fn encode_matrix(
    d: &Dictionary,
    y: &PatchMatrix,
    cfg: &CodingConfig,
    coder: Coder,
) -> Result<SparseCode> {
    if y.rows() != d.m() {
        return Err(Error::DimensionMismatch(format!(
            "patches have {} rows, dictionary atoms have {}",
            y.rows(),
            d.m()
        )));
    }
    cfg.validate(d.m())?;
    let columns: Vec<ColumnCode> = (0..y.cols())
        .into_par_iter()
        .map(|j| {
            encode_column(d, y.column(j), cfg, coder).map_err(|e| Error::Column {
                column: j,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    SparseCode::new(d.k(), columns)
}
