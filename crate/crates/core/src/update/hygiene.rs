use super::{check_conformable, column_residual_energies, FactorizationState};
use crate::dictionary::{dot, norm};
use crate::error::{Error, Result};
use crate::patching::PatchMatrix;

/// Replace atoms used by fewer than `usage_min` columns, or whose
/// `|d_i . d_j|` exceeds `coherence_max` against an earlier atom, with the
/// worst-represented data columns (normalized; rectified when `nonnegative`).
/// Replaced atoms have their code rows cleared. Returns the new state and
/// the replaced atom indices.
pub fn replace_dead_atoms(
    y: &PatchMatrix,
    state: FactorizationState,
    usage_min: usize,
    coherence_max: f64,
    nonnegative: bool,
) -> Result<(FactorizationState, Vec<usize>)> {
    let FactorizationState { mut d, mut s, frobenius_error } = state;
    check_conformable(y, &d, &s)?;
    if !(coherence_max > 0.0 && coherence_max < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "coherence_max must lie in (0, 1), got {coherence_max}"
        )));
    }
    let usage = s.usage();
    let k = d.k();
    let m = d.m();

    let mut order: Option<std::vec::IntoIter<usize>> = None;
    let mut replaced = Vec::new();
    for i in 0..k {
        let unused = usage[i] < usage_min;
        let coherent = (0..i).any(|j| dot(d.atom(i), d.atom(j)).abs() > coherence_max);
        if !unused && !coherent {
            continue;
        }
        let candidates = order.get_or_insert_with(|| {
            let energy = column_residual_energies(y, &d, &s);
            let mut idx: Vec<usize> = (0..y.cols()).collect();
            idx.sort_by(|&a, &b| energy[b].total_cmp(&energy[a]).then(a.cmp(&b)));
            idx.into_iter()
        });
        // next candidate that is nonzero and not coherent with the other atoms
        let mut chosen = None;
        for j in candidates.by_ref() {
            let mut atom: Vec<f64> = y.column(j).to_vec();
            if nonnegative {
                atom.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            let n = norm(&atom);
            if n == 0.0 {
                continue;
            }
            atom.iter_mut().for_each(|v| *v /= n);
            let clashes = (0..k)
                .filter(|&l| l != i)
                .any(|l| dot(&atom, d.atom(l)).abs() > coherence_max);
            if !clashes {
                chosen = Some(atom);
                break;
            }
        }
        let Some(atom) = chosen else { break };
        debug_assert_eq!(atom.len(), m);
        d.atom_mut(i).copy_from_slice(&atom);
        s.clear_row(i);
        replaced.push(i);
    }

    let mut state = FactorizationState { d, s, frobenius_error };
    if !replaced.is_empty() {
        state.refresh_error(y);
    }
    Ok((state, replaced))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::SparseCode;
    use crate::dictionary::{normalize_columns, Dictionary};
    use crate::patching::PatchGrid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(k: usize, used: &[usize], seed: u64) -> (PatchMatrix, FactorizationState) {
        let (m, n) = (16, 40);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d0: Vec<f64> = (0..m * k).map(|_| rng.random_range(0.0..1.0)).collect();
        let d = normalize_columns(&Dictionary::new(m, k, d0).unwrap()).unwrap();
        let mut dense = vec![0.0; k * n];
        for j in 0..n {
            dense[used[j % used.len()] * n + j] = rng.random_range(1.0..2.0);
        }
        let s = SparseCode::from_dense(k, n, &dense).unwrap();
        let y: Vec<f64> = (0..m * n).map(|_| rng.random_range(0.0..255.0)).collect();
        let y = PatchMatrix::from_columns(PatchGrid::new(3 + n, 4, 4, 1).unwrap(), y).unwrap();
        let state = FactorizationState::new(&y, d, s).unwrap();
        (y, state)
    }

    #[test]
    fn healthy_dictionary_untouched() {
        let (y, state) = setup(6, &[0, 1, 2, 3, 4, 5], 1);
        let before = state.clone();
        let (after, replaced) = replace_dead_atoms(&y, state, 1, 0.999, true).unwrap();
        assert!(replaced.is_empty());
        assert_eq!(after.d, before.d);
        assert_eq!(after.s.to_dense(), before.s.to_dense());
        assert_eq!(after.frobenius_error, before.frobenius_error);
    }

    #[test]
    fn duplicate_pair_loses_exactly_one() {
        let (y, mut state) = setup(6, &[0, 1, 2, 3, 4, 5], 2);
        let copy = state.d.atom(1).to_vec();
        state.d.atom_mut(4).copy_from_slice(&copy);
        state.refresh_error(&y);
        let (after, replaced) = replace_dead_atoms(&y, state, 1, 0.999, true).unwrap();
        assert_eq!(replaced, vec![4]);
        assert_eq!(after.d.atom(1), &copy[..]);
    }

    #[test]
    fn three_unused_atoms_replaced() {
        let (y, state) = setup(8, &[0, 2, 3, 5, 7], 3);
        let (after, replaced) = replace_dead_atoms(&y, state, 1, 0.999, true).unwrap();
        assert_eq!(replaced, vec![1, 4, 6]);
        assert!(after.d.max_norm_deviation() < 1e-12);
        assert!(after.d.is_nonnegative());
        let recomputed = super::super::frobenius_error(&y, &after.d, &after.s);
        assert!((after.frobenius_error - recomputed).abs() <= 1e-9 * recomputed);
    }
}
