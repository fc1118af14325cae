use super::{check_conformable, column_residual_energies, FactorizationState};
use crate::dictionary::{dot, norm};
use crate::error::Result;
use crate::patching::PatchMatrix;

const POWER_TOLERANCE: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 1000;

/// Leading singular value with its left (`u`, length M) and right (`v`,
/// length n) singular vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularTriplet {
    pub sigma: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub iterations: usize,
}

/// Power iteration on a column-major `m x n` matrix, started from its
/// normalized first nonzero column. Stops when `u` moves by less than 1e-10
/// or after 1000 iterations.
pub fn dominant_singular_triplet(e: &[f64], m: usize, n: usize) -> SingularTriplet {
    debug_assert_eq!(e.len(), m * n);
    let col = |j: usize| &e[j * m..(j + 1) * m];
    let zero = || SingularTriplet {
        sigma: 0.0,
        u: vec![0.0; m],
        v: vec![0.0; n],
        iterations: 0,
    };
    let Some(start) = (0..n).find(|&j| norm(col(j)) > 0.0) else {
        return zero();
    };
    let mut u: Vec<f64> = col(start).to_vec();
    let n0 = norm(&u);
    u.iter_mut().for_each(|x| *x /= n0);

    let mut v = vec![0.0; n];
    let mut iterations = 0;
    for it in 1..=POWER_MAX_ITERS {
        iterations = it;
        for (j, vj) in v.iter_mut().enumerate() {
            *vj = dot(col(j), &u);
        }
        let nv = norm(&v);
        if nv == 0.0 {
            return zero();
        }
        v.iter_mut().for_each(|x| *x /= nv);
        let mut next = vec![0.0; m];
        for (j, &vj) in v.iter().enumerate() {
            for (o, &a) in next.iter_mut().zip(col(j)) {
                *o += vj * a;
            }
        }
        let nu = norm(&next);
        next.iter_mut().for_each(|x| *x /= nu);
        let moved = next
            .iter()
            .zip(&u)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        u = next;
        if moved < POWER_TOLERANCE {
            break;
        }
    }
    // the optimal right factor for the final u
    for (j, vj) in v.iter_mut().enumerate() {
        *vj = dot(col(j), &u);
    }
    let sigma = norm(&v);
    if sigma > 0.0 {
        v.iter_mut().for_each(|x| *x /= sigma);
    }
    SingularTriplet {
        sigma,
        u,
        v,
        iterations,
    }
}

#[derive(Debug, Clone)]
pub struct KsvdUpdate {
    pub state: FactorizationState,
    /// Unused atoms that were replaced by a poorly represented data column.
    pub replaced_atoms: Vec<usize>,
    /// `||Y - DS||_F` before the sweep and after each atom.
    pub error_trace: Vec<f64>,
}

/// One K-SVD sweep: each atom in index order is refit, together with its
/// code row on the columns that use it, as the best rank-1 approximation of
/// the residual with that atom's contribution added back.
pub fn ksvd_update_dictionary(y: &PatchMatrix, state: FactorizationState) -> Result<KsvdUpdate> {
    let FactorizationState { mut d, mut s, .. } = state;
    check_conformable(y, &d, &s)?;
    let m = d.m();
    let n = y.cols();

    // residual matrix, column-major
    let mut resid = vec![0.0; m * n];
    for j in 0..n {
        let r = &mut resid[j * m..(j + 1) * m];
        s.column(j).reconstruct_into(&d, r);
        for (v, &yv) in r.iter_mut().zip(y.column(j)) {
            *v = yv - *v;
        }
    }
    let mut col_energy: Vec<f64> = (0..n)
        .map(|j| dot(&resid[j * m..(j + 1) * m], &resid[j * m..(j + 1) * m]))
        .collect();
    let mut total: f64 = col_energy.iter().sum();
    let mut error_trace = vec![total.sqrt()];

    // candidates for replacing unused atoms, worst represented first
    let mut worst: Vec<usize> = (0..n).filter(|&j| norm(y.column(j)) > 0.0).collect();
    worst.sort_by(|&a, &b| col_energy[b].total_cmp(&col_energy[a]).then(a.cmp(&b)));
    let mut worst = worst.into_iter();

    let rows = s.row_index();
    let mut replaced = Vec::new();
    for (k, users) in rows.iter().enumerate() {
        if users.is_empty() {
            if let Some(j) = worst.next() {
                let yj = y.column(j);
                let nj = norm(yj);
                for (a, &v) in d.atom_mut(k).iter_mut().zip(yj) {
                    *a = v / nj;
                }
                replaced.push(k);
            }
            error_trace.push(total.sqrt());
            continue;
        }

        // E_k restricted to the users: residual plus this atom's share
        let mut e = Vec::with_capacity(m * users.len());
        for &(j, p) in users {
            let c = s.column(j).coefficients[p];
            let r = &resid[j * m..(j + 1) * m];
            e.extend(r.iter().zip(d.atom(k)).map(|(rv, a)| rv + c * a));
        }
        let old: f64 = users.iter().map(|&(j, _)| col_energy[j]).sum();
        let t = dominant_singular_triplet(&e, m, users.len());

        let mut new_energy = Vec::with_capacity(users.len());
        for (q, _) in users.iter().enumerate() {
            let ec = &e[q * m..(q + 1) * m];
            let c = t.sigma * t.v[q];
            new_energy.push(
                ec.iter()
                    .zip(&t.u)
                    .map(|(ev, uv)| (ev - c * uv) * (ev - c * uv))
                    .sum::<f64>(),
            );
        }
        let new: f64 = new_energy.iter().sum();
        if t.sigma > 0.0 && new <= old {
            d.atom_mut(k).copy_from_slice(&t.u);
            for (q, &(j, p)) in users.iter().enumerate() {
                let c = t.sigma * t.v[q];
                s.column_mut(j).coefficients[p] = c;
                let ec = &e[q * m..(q + 1) * m];
                for ((rv, &ev), &uv) in resid[j * m..(j + 1) * m].iter_mut().zip(ec).zip(&t.u) {
                    *rv = ev - c * uv;
                }
                col_energy[j] = new_energy[q];
            }
            total += new - old;
        }
        error_trace.push(total.max(0.0).sqrt());
    }

    let mut state = FactorizationState {
        d,
        s,
        frobenius_error: 0.0,
    };
    state.frobenius_error = column_residual_energies(y, &state.d, &state.s)
        .iter()
        .sum::<f64>()
        .sqrt();
    Ok(KsvdUpdate {
        state,
        replaced_atoms: replaced,
        error_trace,
    })
}
