//! Householder QR least squares.

#![allow(clippy::needless_range_loop)]

/// Relative size below which a diagonal of R marks a column as lying in
/// the span of the columns before it.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub(crate) struct LeastSquares {
    pub coef: Vec<f64>,
    pub residuals: Vec<f64>,
    /// diag((R^T R)^-1), the unscaled coefficient variances.
    pub cov_diag: Vec<f64>,
}

/// Columns that make the design rank deficient: each dependent column
/// followed by the earlier columns it is a combination of.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Dependent(pub Vec<usize>);

/// Solves `min ||A x - b||` for an `m x p` matrix given as columns.
pub(crate) fn lstsq(columns: &[Vec<f64>], b: &[f64]) -> Result<LeastSquares, Dependent> {
    let p = columns.len();
    let m = b.len();
    debug_assert!(columns.iter().all(|c| c.len() == m));

    let norms: Vec<f64> = columns.iter().map(|c| norm(c)).collect();
    let mut a: Vec<Vec<f64>> = columns.to_vec();
    let mut qtb = b.to_vec();
    let mut diag = vec![0.0; p];

    for k in 0..p.min(m) {
        let alpha_norm = norm(&a[k][k..]);
        if alpha_norm == 0.0 {
            diag[k] = 0.0;
            continue;
        }
        let alpha = if a[k][k] > 0.0 { -alpha_norm } else { alpha_norm };
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        diag[k] = alpha;
        a[k][k] = alpha;
        for x in &mut a[k][k + 1..] {
            *x = 0.0;
        }
        if vv == 0.0 {
            continue;
        }
        for col in a.iter_mut().skip(k + 1) {
            reflect(&mut col[k..], &v, vv);
        }
        reflect(&mut qtb[k..], &v, vv);
    }

    let deficient: Vec<usize> = (0..p)
        .filter(|&k| k >= m || norms[k] == 0.0 || diag[k].abs() <= RANK_TOL * norms[k])
        .collect();
    if !deficient.is_empty() {
        return Err(dependency_report(&a, &norms, &deficient));
    }

    // back substitution on R x = Q^T b
    let r = |i: usize, j: usize| a[j][i];
    let mut coef = vec![0.0; p];
    for i in (0..p).rev() {
        let mut s = qtb[i];
        for j in i + 1..p {
            s -= r(i, j) * coef[j];
        }
        coef[i] = s / r(i, i);
    }

    let residuals: Vec<f64> = (0..m)
        .map(|row| b[row] - (0..p).map(|j| columns[j][row] * coef[j]).sum::<f64>())
        .collect();

    // R^-1 by columns; (R^T R)^-1 diagonal is the squared row norms of R^-1
    let mut rinv = vec![vec![0.0; p]; p]; // rinv[col][row]
    for c in 0..p {
        for i in (0..=c).rev() {
            let mut s = if i == c { 1.0 } else { 0.0 };
            for j in i + 1..=c {
                s -= r(i, j) * rinv[c][j];
            }
            rinv[c][i] = s / r(i, i);
        }
    }
    let cov_diag = (0..p)
        .map(|i| (0..p).map(|c| rinv[c][i] * rinv[c][i]).sum())
        .collect();

    Ok(LeastSquares {
        coef,
        residuals,
        cov_diag,
    })
}

fn norm(x: &[f64]) -> f64 {
    // scaled to avoid overflow on large energies
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * x.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt()
}

fn reflect(x: &mut [f64], v: &[f64], vv: f64) {
    let dot: f64 = x.iter().zip(v).map(|(a, b)| a * b).sum();
    let f = 2.0 * dot / vv;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= f * vi;
    }
}

fn dependency_report(a: &[Vec<f64>], norms: &[f64], deficient: &[usize]) -> Dependent {
    let mut out: Vec<usize> = Vec::new();
    for &k in deficient {
        if !out.contains(&k) {
            out.push(k);
        }
        let basis: Vec<usize> = (0..k.min(a[0].len())).filter(|j| !deficient.contains(j)).collect();
        // solve R[basis, basis] c = R[basis, k]
        let mut c = vec![0.0; basis.len()];
        for bi in (0..basis.len()).rev() {
            let i = basis[bi];
            let mut s = a[k][i];
            for bj in bi + 1..basis.len() {
                s -= a[basis[bj]][i] * c[bj];
            }
            c[bi] = s / a[i][i];
        }
        for (bi, &j) in basis.iter().enumerate() {
            if (c[bi] * norms[j]).abs() > 1e-6 * norms[k].max(f64::MIN_POSITIVE) && !out.contains(&j) {
                out.push(j);
            }
        }
    }
    Dependent(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_square_system() {
        // [2 1; 1 3] x = [3; 5] -> x = [0.8, 1.4]
        let cols = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let ls = lstsq(&cols, &[3.0, 5.0]).unwrap();
        assert!((ls.coef[0] - 0.8).abs() < 1e-14);
        assert!((ls.coef[1] - 1.4).abs() < 1e-14);
        assert!(ls.residuals.iter().all(|r| r.abs() < 1e-14));
    }

    #[test]
    fn overdetermined_line_fit() {
        // y = 2x through origin with symmetric perturbation
        let x = vec![1.0, 2.0, 3.0, 4.0];
        let y = vec![2.1, 3.9, 6.1, 7.9];
        let ls = lstsq(std::slice::from_ref(&x), &y).unwrap();
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let sxx: f64 = x.iter().map(|a| a * a).sum();
        assert!((ls.coef[0] - sxy / sxx).abs() < 1e-14);
        assert!((ls.cov_diag[0] - 1.0 / sxx).abs() < 1e-15);
    }

    #[test]
    fn collinear_columns_are_named() {
        let a = vec![1.0, 2.0, 3.0, 4.0];
        let b = vec![0.0, 1.0, 0.0, 1.0];
        let c: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 2.0 * x - y).collect();
        let err = lstsq(&[a, b, c], &[1.0, 2.0, 3.0, 4.0]).unwrap_err();
        assert_eq!(err, Dependent(vec![2, 0, 1]));
    }

    #[test]
    fn zero_column() {
        let err = lstsq(&[vec![1.0, 1.0], vec![0.0, 0.0]], &[1.0, 1.0]).unwrap_err();
        assert_eq!(err.0, vec![1]);
    }
}
