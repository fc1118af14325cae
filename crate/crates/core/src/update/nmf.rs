use super::{check_conformable, frobenius_error, FactorizationState};
use crate::coding::SparseCode;
use crate::error::{Error, Result};
use crate::patching::PatchMatrix;

/// Added to every multiplicative-update denominator.
pub const NMF_DENOMINATOR_GUARD: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct NmfUpdate {
    pub state: FactorizationState,
    /// `||Y - DS||_F` before the first and after every multiplicative step.
    pub error_trace: Vec<f64>,
    /// Atoms left untouched because their whole denominator column vanished
    /// (no data column uses them).
    pub skipped_atoms: Vec<usize>,
}

/// `Y S^T`, column-major `M x K`.
fn data_times_codes_t(y: &PatchMatrix, s: &SparseCode, m: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * s.k()];
    for (j, c) in s.columns().iter().enumerate() {
        let yj = y.column(j);
        for (&i, &v) in c.support.iter().zip(&c.coefficients) {
            for (o, &yv) in out[i * m..(i + 1) * m].iter_mut().zip(yj) {
                *o += v * yv;
            }
        }
    }
    out
}

/// `S S^T`, row-major `K x K`.
fn code_gram(s: &SparseCode) -> Vec<f64> {
    let k = s.k();
    let mut g = vec![0.0; k * k];
    for c in s.columns() {
        for (&a, &va) in c.support.iter().zip(&c.coefficients) {
            for (&b, &vb) in c.support.iter().zip(&c.coefficients) {
                g[a * k + b] += va * vb;
            }
        }
    }
    g
}

/// `inner_iters` Lee-Seung steps on the dictionary,
/// `D <- D * (Y S^T) / (D S S^T + delta)`, followed by rescaling every atom
/// to unit norm with the inverse factor pushed into the matching code row.
pub fn nmf_update_dictionary(
    y: &PatchMatrix,
    state: FactorizationState,
    inner_iters: usize,
) -> Result<NmfUpdate> {
    let FactorizationState { mut d, mut s, .. } = state;
    check_conformable(y, &d, &s)?;
    if inner_iters == 0 {
        return Err(Error::InvalidParameter("inner_iters must be positive".into()));
    }
    if y.as_slice().iter().any(|&v| v < 0.0) {
        return Err(Error::NegativeEntry("data matrix"));
    }
    if !d.is_nonnegative() {
        return Err(Error::NegativeEntry("dictionary"));
    }
    if !s.is_nonnegative() {
        return Err(Error::NegativeEntry("sparse code"));
    }

    let (m, k) = (d.m(), d.k());
    let numer = data_times_codes_t(y, &s, m);
    let sst = code_gram(&s);
    let mut error_trace = vec![frobenius_error(y, &d, &s)];
    let mut skipped = vec![false; k];
    let mut denom = vec![0.0; m * k];

    for _ in 0..inner_iters {
        // D S S^T, column i = sum_l d_l * sst[l, i]
        denom.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..k {
            let col = &mut denom[i * m..(i + 1) * m];
            for l in 0..k {
                let w = sst[l * k + i];
                if w != 0.0 {
                    for (c, &a) in col.iter_mut().zip(d.atom(l)) {
                        *c += w * a;
                    }
                }
            }
        }
        let mut next = d.clone();
        for i in 0..k {
            let den = &denom[i * m..(i + 1) * m];
            if den.iter().all(|&v| v <= NMF_DENOMINATOR_GUARD) {
                skipped[i] = true;
                continue;
            }
            let num = &numer[i * m..(i + 1) * m];
            for ((a, &nu), &de) in next.atom_mut(i).iter_mut().zip(num).zip(den) {
                *a *= nu / (de + NMF_DENOMINATOR_GUARD);
            }
        }
        d = next;
        error_trace.push(frobenius_error(y, &d, &s));
    }

    let mut factors = vec![1.0; k];
    for i in 0..k {
        let atom = d.atom_mut(i);
        let n = atom.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 0.0 && n.is_finite() {
            atom.iter_mut().for_each(|v| *v /= n);
            factors[i] = n;
        } else {
            // only reachable when every column using the atom is zero
            return Err(Error::ZeroColumn(i));
        }
    }
    s.scale_rows(&factors);
    let frobenius_error = frobenius_error(y, &d, &s);

    Ok(NmfUpdate {
        state: FactorizationState { d, s, frobenius_error },
        error_trace,
        skipped_atoms: (0..k).filter(|&i| skipped[i]).collect(),
    })
}
