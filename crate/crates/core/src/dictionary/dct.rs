use std::f64::consts::PI;

use super::{normalize_columns, Dictionary};
use crate::error::{Error, Result};

/// Separable over-complete DCT dictionary with `atoms_per_axis^2` atoms.
///
/// The 1-D basis is `C[i, j] = cos(pi * j * (i + 0.5) / atoms_per_axis)`
/// with every non-constant column made zero-mean. Atom `a * atoms_per_axis + b`
/// is the outer product of vertical frequency `a` and horizontal frequency
/// `b`, vectorized row-major.
pub fn overcomplete_dct_dictionary(patch_side: usize, atoms_per_axis: usize) -> Result<Dictionary> {
    if patch_side == 0 {
        return Err(Error::InvalidParameter("patch side must be positive".into()));
    }
    if atoms_per_axis < patch_side {
        return Err(Error::InvalidParameter(format!(
            "atoms_per_axis ({atoms_per_axis}) must be at least the patch side ({patch_side})"
        )));
    }
    let p = patch_side;
    let a = atoms_per_axis;
    let mut basis: Vec<Vec<f64>> = (0..a)
        .map(|j| {
            (0..p)
                .map(|i| (PI * j as f64 * (i as f64 + 0.5) / a as f64).cos())
                .collect()
        })
        .collect();
    for col in basis.iter_mut().skip(1) {
        let mean = col.iter().sum::<f64>() / p as f64;
        col.iter_mut().for_each(|v| *v -= mean);
    }
    for col in basis.iter_mut() {
        let n = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        col.iter_mut().for_each(|v| *v /= n);
    }

    let mut data = Vec::with_capacity(p * p * a * a);
    for vert in &basis {
        for horiz in &basis {
            for r in 0..p {
                for c in 0..p {
                    data.push(vert[r] * horiz[c]);
                }
            }
        }
    }
    normalize_columns(&Dictionary::new(p * p, a * a, data)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_shape_and_norms() {
        let d = overcomplete_dct_dictionary(8, 16).unwrap();
        assert_eq!((d.m(), d.k()), (64, 256));
        assert!(d.max_norm_deviation() < 1e-9);
        assert!(d.is_overcomplete());
    }

    #[test]
    fn first_atom_is_constant() {
        let d = overcomplete_dct_dictionary(8, 16).unwrap();
        assert!(d.atom(0).iter().all(|&v| (v - 0.125).abs() < 1e-12));
    }

    #[test]
    fn non_dc_atoms_are_zero_mean() {
        let d = overcomplete_dct_dictionary(8, 11).unwrap();
        for (i, a) in d.atoms().enumerate().skip(1) {
            // only atoms with a zero-frequency factor in one axis have nonzero
            // mean in that axis, but the 2-D mean vanishes for every i > 0
            assert!(a.iter().sum::<f64>().abs() < 1e-9, "atom {i}");
        }
    }

    #[test]
    fn coherence_below_one_by_pair_scan() {
        let d = overcomplete_dct_dictionary(8, 16).unwrap();
        let mut worst = 0.0f64;
        for i in 0..d.k() {
            for j in 0..d.k() {
                if i != j {
                    let ip: f64 = d.atom(i).iter().zip(d.atom(j)).map(|(a, b)| a * b).sum();
                    worst = worst.max(ip.abs());
                }
            }
        }
        assert!(worst < 1.0 - 1e-6, "coherence {worst}");
    }

    #[test]
    fn too_few_atoms_rejected() {
        assert!(overcomplete_dct_dictionary(8, 7).is_err());
    }
}
