use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use sparse_denoise::coding::lsq::{cholesky_solve, nnls_gram};
use sparse_denoise::coding::{encode_column, encode_matrix, trace_encode, CodingConfig};
use sparse_denoise::dictionary::normalize_columns;
use sparse_denoise::patching::{PatchGrid, PatchMatrix};
use sparse_denoise::{Coder, Dictionary, Error};

fn random_dictionary(rng: &mut ChaCha8Rng, m: usize, k: usize, nonneg: bool) -> Dictionary {
    let raw: Vec<f64> = (0..m * k)
        .map(|_| {
            let v: f64 = rng.sample(StandardNormal);
            if nonneg { v.abs() } else { v }
        })
        .collect();
    normalize_columns(&Dictionary::new(m, k, raw).unwrap()).unwrap()
}

fn random_signal(rng: &mut ChaCha8Rng, m: usize, nonneg: bool) -> Vec<f64> {
    (0..m)
        .map(|_| {
            let v: f64 = rng.sample(StandardNormal);
            if nonneg { 5.0 * v.abs() } else { 5.0 * v }
        })
        .collect()
}

fn residual(d: &Dictionary, y: &[f64], support: &[usize], coefs: &[f64]) -> Vec<f64> {
    let mut r = y.to_vec();
    for (&i, &c) in support.iter().zip(coefs) {
        for (v, a) in r.iter_mut().zip(d.atom(i)) {
            *v -= c * a;
        }
    }
    r
}

#[test]
fn omp_coefficients_solve_the_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for coder in [Coder::Omp, Coder::Amp] {
        for _ in 0..30 {
            let d = random_dictionary(&mut rng, 24, 80, false);
            let y = random_signal(&mut rng, 24, false);
            let cfg = CodingConfig { epsilon: 10.0, max_atoms: 8, ..Default::default() };
            let code = encode_column(&d, &y, &cfg, coder).unwrap();
            let ds = DMatrix::from_fn(24, code.support.len(), |r, c| d.atom(code.support[c])[r]);
            let yv = DVector::from_column_slice(&y);
            let oracle = (ds.transpose() * &ds).cholesky().unwrap().solve(&(ds.transpose() * &yv));
            for (c, o) in code.coefficients.iter().zip(oracle.iter()) {
                assert_relative_eq!(*c, *o, epsilon = 1e-9, max_relative = 1e-9);
            }
            let r = residual(&d, &y, &code.support, &code.coefficients);
            let energy: f64 = r.iter().map(|v| v * v).sum();
            assert_relative_eq!(code.residual_energy, energy, epsilon = 1e-9, max_relative = 1e-9);
            for &i in &code.support {
                let g: f64 = d.atom(i).iter().zip(&r).map(|(a, b)| a * b).sum();
                assert!(g.abs() < 1e-8, "residual not orthogonal to atom {i}: {g}");
            }
        }
    }
}

#[test]
fn nonnegative_codes_satisfy_kkt_on_their_support() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for coder in [Coder::Omp, Coder::Amp] {
        for _ in 0..30 {
            let d = random_dictionary(&mut rng, 16, 48, true);
            let y = random_signal(&mut rng, 16, true);
            let cfg = CodingConfig {
                epsilon: 1.0,
                max_atoms: 10,
                nonnegative_coefficients: true,
                ..Default::default()
            };
            let code = encode_column(&d, &y, &cfg, coder).unwrap();
            assert!(code.coefficients.iter().all(|&c| c > 0.0));
            let r = residual(&d, &y, &code.support, &code.coefficients);
            for &i in &code.support {
                let g: f64 = d.atom(i).iter().zip(&r).map(|(a, b)| a * b).sum();
                assert!(g.abs() < 1e-7, "gradient {g} on active atom {i}");
            }
        }
    }
}

/// Exhaustive nonnegative least squares over every active set.
fn brute_force_nnls(g: &DMatrix<f64>, b: &DVector<f64>) -> (Vec<f64>, f64) {
    let n = b.len();
    let objective = |x: &DVector<f64>| 0.5 * x.dot(&(g * x)) - b.dot(x);
    let mut best = (vec![0.0; n], 0.0);
    for mask in 1u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let gs = DMatrix::from_fn(idx.len(), idx.len(), |r, c| g[(idx[r], idx[c])]);
        let bs = DVector::from_fn(idx.len(), |r, _| b[idx[r]]);
        let Some(xs) = gs.cholesky().map(|c| c.solve(&bs)) else { continue };
        if xs.iter().any(|&v| v < 0.0) {
            continue;
        }
        let mut x = DVector::zeros(n);
        for (k, &i) in idx.iter().enumerate() {
            x[i] = xs[k];
        }
        let f = objective(&x);
        if f < best.1 {
            best = (x.iter().copied().collect(), f);
        }
    }
    best
}

#[test]
fn nnls_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let n = rng.random_range(1..=6);
        let a = DMatrix::<f64>::from_fn(10, n, |_, _| rng.sample(StandardNormal));
        let y = DVector::<f64>::from_fn(10, |_, _| rng.sample(StandardNormal));
        let g = a.transpose() * &a;
        let b = a.transpose() * &y;
        let x = nnls_gram(g.as_slice(), b.as_slice());
        let (want, f_want) = brute_force_nnls(&g, &b);
        let xv = DVector::from_column_slice(&x);
        let f = 0.5 * xv.dot(&(&g * &xv)) - b.dot(&xv);
        assert!(x.iter().all(|&v| v >= 0.0));
        assert!(f <= f_want + 1e-9 * f_want.abs().max(1.0), "{f} vs {f_want}");
        for (p, q) in x.iter().zip(&want) {
            assert!((p - q).abs() < 1e-7, "{x:?} vs {want:?}");
        }
    }
}

#[test]
fn cholesky_matches_reference_solver() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for n in 1..=8 {
        let a = DMatrix::<f64>::from_fn(n + 3, n, |_, _| rng.sample(StandardNormal));
        let g = a.transpose() * &a;
        let b = DVector::<f64>::from_fn(n, |_, _| rng.sample(StandardNormal));
        let ours = cholesky_solve(g.as_slice(), b.as_slice()).unwrap();
        let theirs = g.clone().lu().solve(&b).unwrap();
        for (p, q) in ours.iter().zip(theirs.iter()) {
            assert_relative_eq!(*p, *q, epsilon = 1e-9, max_relative = 1e-8);
        }
    }
    // rank deficient: duplicate column
    assert!(cholesky_solve(&[1.0, 1.0, 1.0, 1.0], &[1.0, 1.0]).is_none());
}

#[test]
fn matrix_coding_is_columnwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let d = random_dictionary(&mut rng, 16, 40, false);
    let data: Vec<f64> = (0..16 * 30).map(|_| rng.sample::<f64, _>(StandardNormal) * 9.0).collect();
    let y = PatchMatrix::from_columns(PatchGrid::new(33, 4, 4, 1).unwrap(), data).unwrap();
    let cfg = CodingConfig { epsilon: 20.0, max_atoms: 6, ..Default::default() };
    let s = encode_matrix(&d, &y, &cfg, Coder::Amp).unwrap();
    assert_eq!(s.n(), 30);
    for j in 0..30 {
        assert_eq!(s.column(j), &encode_column(&d, y.column(j), &cfg, Coder::Amp).unwrap());
    }
    let total: u64 = s.columns().iter().map(|c| c.inner_products).sum();
    assert_eq!(s.total_inner_products(), total);

    let wrong = Dictionary::new(9, 12, vec![1.0 / 3.0; 108]).unwrap();
    assert!(matches!(encode_matrix(&wrong, &y, &cfg, Coder::Omp), Err(Error::DimensionMismatch(_))));
    let bad = CodingConfig { max_atoms: 0, ..cfg };
    assert!(encode_matrix(&d, &y, &bad, Coder::Omp).is_err());
}

#[test]
fn bad_column_is_reported_by_index() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let d = random_dictionary(&mut rng, 4, 10, true);
    let mut data = vec![1.0; 4 * 5];
    data[4 * 3 + 2] = f64::NAN;
    let y = PatchMatrix::from_columns(PatchGrid::new(6, 2, 2, 1).unwrap(), data).unwrap();
    let cfg = CodingConfig { max_atoms: 4, nonnegative_coefficients: true, ..Default::default() };
    match encode_matrix(&d, &y, &cfg, Coder::Omp) {
        Err(Error::Column { column, .. }) => assert_eq!(column, 3),
        other => panic!("expected a column error, got {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn residual_trace_never_increases(seed in 0u64..10_000, nonneg in any::<bool>(), amp in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_dictionary(&mut rng, 12, 30, nonneg);
        let y = random_signal(&mut rng, 12, nonneg);
        let cfg = CodingConfig {
            epsilon: 1e-3,
            max_atoms: 12,
            nn_threshold: 0.8,
            nonnegative_coefficients: nonneg,
        };
        let coder = if amp { Coder::Amp } else { Coder::Omp };
        let (code, trace) = trace_encode(&d, &y, &cfg, coder).unwrap();
        for w in trace.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
        prop_assert!(code.support.len() <= cfg.max_atoms);
        prop_assert!((trace.last().unwrap() - code.residual_energy).abs() <= 1e-9 * trace[0].max(1.0));
    }
}
