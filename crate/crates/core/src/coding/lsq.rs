//! Small dense solvers on Gram systems `G x = b` (row-major `G`).

/// Solve an SPD system by Cholesky factorization. Returns `None` when `G` is
/// numerically singular.
pub fn cholesky_solve(g: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    debug_assert_eq!(g.len(), n * n);
    let scale = (0..n).map(|i| g[i * n + i].abs()).fold(0.0, f64::max);
    let tiny = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = g[i * n + j];
            for p in 0..j {
                s -= l[i * n + p] * l[j * n + p];
            }
            if i == j {
                if s <= tiny {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    // forward then back substitution
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for p in 0..i {
            s -= l[i * n + p] * y[p];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for p in i + 1..n {
            s -= l[p * n + i] * x[p];
        }
        x[i] = s / l[i * n + i];
    }
    Some(x)
}

fn restricted_solve(g: &[f64], b: &[f64], idx: &[usize]) -> Option<Vec<f64>> {
    let n = b.len();
    let p = idx.len();
    let mut gs = Vec::with_capacity(p * p);
    for &i in idx {
        for &j in idx {
            gs.push(g[i * n + j]);
        }
    }
    let bs: Vec<f64> = idx.iter().map(|&i| b[i]).collect();
    cholesky_solve(&gs, &bs)
}

/// Nonnegative least squares `min 1/2 x'Gx - b'x, x >= 0` by the
/// Lawson-Hanson active-set method.
///
/// If an entering column is numerically dependent on the passive set the
/// solver stops at the optimum found so far.
pub fn nnls_gram(g: &[f64], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut passive = vec![false; n];
    let bscale = b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tol = 1e-12 * bscale.max(f64::MIN_POSITIVE);

    for _ in 0..3 * n + 3 {
        // gradient of the negative objective
        let w: Vec<f64> = (0..n)
            .map(|i| b[i] - (0..n).map(|j| g[i * n + j] * x[j]).sum::<f64>())
            .collect();
        let mut enter = None;
        let mut best = tol;
        for i in 0..n {
            if !passive[i] && w[i] > best {
                best = w[i];
                enter = Some(i);
            }
        }
        let Some(j) = enter else { break };
        passive[j] = true;

        let mut first = true;
        loop {
            let idx: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
            let z = match restricted_solve(g, b, &idx) {
                Some(z) => z,
                None => {
                    // dependent column: keep the optimum over the previous set
                    return x;
                }
            };
            if z.iter().all(|&v| v > 0.0) {
                x.iter_mut().for_each(|v| *v = 0.0);
                for (&i, &v) in idx.iter().zip(&z) {
                    x[i] = v;
                }
                break;
            }
            let pos_j = idx.iter().position(|&i| i == j);
            if first && pos_j.is_some_and(|p| z[p] <= 0.0) {
                // the entering variable cannot move: optimal to working precision
                return x;
            }
            first = false;
            let mut alpha = f64::INFINITY;
            for (&i, &zi) in idx.iter().zip(&z) {
                if zi <= 0.0 {
                    let denom = x[i] - zi;
                    if denom > 0.0 {
                        alpha = alpha.min(x[i] / denom);
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            for (&i, &zi) in idx.iter().zip(&z) {
                x[i] += alpha * (zi - x[i]);
            }
            for &i in &idx {
                if x[i] <= tol.max(1e-300) {
                    x[i] = 0.0;
                    passive[i] = false;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    x
}
