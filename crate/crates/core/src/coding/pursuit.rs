use super::lsq::{cholesky_solve, nnls_gram};
use super::{Coder, CodingConfig, ColumnCode, Termination};
use crate::dictionary::{dot, Dictionary};
use crate::error::{Error, Result};

/// Relative energy decrease below which a selection counts as a stall.
const STALL_TOLERANCE: f64 = 1e-12;

/// Orthogonal matching pursuit: always pick the atom most correlated with
/// the residual, then re-fit all selected coefficients.
pub fn omp_encode(d: &Dictionary, y: &[f64], cfg: &CodingConfig) -> Result<ColumnCode> {
    encode_column(d, y, cfg, Coder::Omp)
}

/// Approximate matching pursuit: accept the first atom (ascending index)
/// whose normalized correlation is within `nn_threshold` of the best seen,
/// falling back to the exact argmax when the scan finds none.
pub fn amp_encode(d: &Dictionary, y: &[f64], cfg: &CodingConfig) -> Result<ColumnCode> {
    encode_column(d, y, cfg, Coder::Amp)
}

pub fn encode_column(
    d: &Dictionary,
    y: &[f64],
    cfg: &CodingConfig,
    coder: Coder,
) -> Result<ColumnCode> {
    Pursuit::new(d, y, cfg, coder)?.run(None)
}

/// Like [`encode_column`], also returning the residual energy after every
/// accepted selection (first entry is `||y||^2`).
pub fn trace_encode(
    d: &Dictionary,
    y: &[f64],
    cfg: &CodingConfig,
    coder: Coder,
) -> Result<(ColumnCode, Vec<f64>)> {
    let mut trace = Vec::new();
    let code = Pursuit::new(d, y, cfg, coder)?.run(Some(&mut trace))?;
    Ok((code, trace))
}

struct Pursuit<'a> {
    d: &'a Dictionary,
    y: &'a [f64],
    cfg: &'a CodingConfig,
    coder: Coder,
    in_support: Vec<bool>,
    /// Running estimate of the best normalized correlation (approximate coder).
    bound: Option<f64>,
    inner_products: u64,
}

/// Selected atoms with their cached Gram entries and `d_i . y`.
#[derive(Clone, Default)]
struct Active {
    atoms: Vec<usize>,
    gram: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    coefficients: Vec<f64>,
}

impl Active {
    fn push(&mut self, d: &Dictionary, y: &[f64], i: usize) {
        let row: Vec<f64> = self
            .atoms
            .iter()
            .map(|&j| dot(d.atom(i), d.atom(j)))
            .collect();
        for (r, &v) in self.gram.iter_mut().zip(&row) {
            r.push(v);
        }
        let mut row = row;
        row.push(dot(d.atom(i), d.atom(i)));
        self.gram.push(row);
        self.rhs.push(dot(d.atom(i), y));
        self.atoms.push(i);
        self.coefficients.push(0.0);
    }

    fn remove(&mut self, p: usize) {
        self.atoms.remove(p);
        self.rhs.remove(p);
        self.coefficients.remove(p);
        self.gram.remove(p);
        for r in &mut self.gram {
            r.remove(p);
        }
    }

    fn flat_gram(&self) -> Vec<f64> {
        self.gram.iter().flatten().copied().collect()
    }
}

impl<'a> Pursuit<'a> {
    fn new(d: &'a Dictionary, y: &'a [f64], cfg: &'a CodingConfig, coder: Coder) -> Result<Self> {
        if y.len() != d.m() {
            return Err(Error::DimensionMismatch(format!(
                "signal of length {} for atoms of length {}",
                y.len(),
                d.m()
            )));
        }
        cfg.validate(d.m())?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("signal has a non-finite entry".into()));
        }
        Ok(Self {
            d,
            y,
            cfg,
            coder,
            in_support: vec![false; d.k()],
            bound: None,
            inner_products: 0,
        })
    }

    #[inline]
    fn score(&self, c: f64) -> f64 {
        if self.cfg.nonnegative_coefficients {
            c
        } else {
            c.abs()
        }
    }

    fn select_exact(&mut self, r: &[f64]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.d.k() {
            if self.in_support[i] {
                continue;
            }
            let s = self.score(dot(self.d.atom(i), r));
            self.inner_products += 1;
            if s > 0.0 && best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
        best
    }

    fn select_approximate(&mut self, r: &[f64], r_norm: f64) -> Option<usize> {
        let tau = self.cfg.nn_threshold;
        // Only the exact maximum satisfies tau = 1, and no early stop can
        // certify it.
        if tau >= 1.0 || self.bound.is_none() {
            let best = self.select_exact(r);
            self.bound = best.map(|(_, s)| s / r_norm);
            return best.map(|(i, _)| i);
        }
        let prior = self.bound.unwrap_or(0.0);
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.d.k() {
            if self.in_support[i] {
                continue;
            }
            let s = self.score(dot(self.d.atom(i), r)) / r_norm;
            self.inner_products += 1;
            if s > 0.0 && best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
            let running = prior.max(best.map_or(0.0, |(_, b)| b));
            if s > 0.0 && s >= tau * running {
                self.bound = Some(running);
                return Some(i);
            }
        }
        // full scan without acceptance: exact argmax, and the bound drops to it
        self.bound = best.map(|(_, s)| s);
        best.map(|(i, _)| i)
    }

    fn solve(&self, active: &mut Active) -> bool {
        let g = active.flat_gram();
        if self.cfg.nonnegative_coefficients {
            active.coefficients = nnls_gram(&g, &active.rhs);
            // zero coefficients leave the support
            let mut p = 0;
            while p < active.atoms.len() {
                if active.coefficients[p] <= 0.0 {
                    active.remove(p);
                } else {
                    p += 1;
                }
            }
            !active.atoms.is_empty()
        } else {
            match cholesky_solve(&g, &active.rhs) {
                Some(x) => {
                    active.coefficients = x;
                    true
                }
                None => false,
            }
        }
    }

    fn residual(&self, active: &Active, r: &mut [f64]) -> f64 {
        r.copy_from_slice(self.y);
        for (&i, &c) in active.atoms.iter().zip(&active.coefficients) {
            for (v, a) in r.iter_mut().zip(self.d.atom(i)) {
                *v -= c * a;
            }
        }
        dot(r, r)
    }

    fn run(mut self, mut trace: Option<&mut Vec<f64>>) -> Result<ColumnCode> {
        let eps = self.cfg.epsilon;
        let mut r = self.y.to_vec();
        let mut err = dot(&r, &r);
        if let Some(t) = trace.as_deref_mut() {
            t.push(err);
        }
        let mut active = Active::default();
        let mut candidate_r = vec![0.0; r.len()];
        let mut selections = 0;
        let mut stalled = false;

        while err > eps && selections < self.cfg.max_atoms {
            selections += 1;
            let pick = match self.coder {
                Coder::Omp => self.select_exact(&r).map(|(i, _)| i),
                Coder::Amp => self.select_approximate(&r, err.sqrt()),
            };
            let Some(i) = pick else {
                stalled = true;
                break;
            };

            let mut next = active.clone();
            next.push(self.d, self.y, i);
            if !self.solve(&mut next) {
                stalled = true;
                break;
            }
            let next_err = self.residual(&next, &mut candidate_r);
            if !(next_err < err * (1.0 - STALL_TOLERANCE)) {
                stalled = true;
                break;
            }
            for &j in &active.atoms {
                self.in_support[j] = false;
            }
            for &j in &next.atoms {
                self.in_support[j] = true;
            }
            active = next;
            err = next_err;
            std::mem::swap(&mut r, &mut candidate_r);
            if let Some(t) = trace.as_deref_mut() {
                t.push(err);
            }
        }

        let termination = if err <= eps {
            Termination::ErrorGoal
        } else if stalled {
            Termination::Stalled
        } else {
            Termination::MaxAtoms
        };
        Ok(ColumnCode {
            support: active.atoms,
            coefficients: active.coefficients,
            residual_energy: err,
            termination,
            inner_products: self.inner_products,
        })
    }
}
