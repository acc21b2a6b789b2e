//! Comparator reconstructions and recovery metrics.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};
use crate::matrix::{dist2, norm2};
use crate::signal::SensingEnsemble;

/// Minimum-norm solution `theta^T (theta theta^T)^{-1} y`.
///
/// Computed from a QR factorization of `theta^T`, which avoids forming the
/// Gram matrix. Requires `m <= n` and full row rank.
pub fn pseudo_inverse_solve(ens: &SensingEnsemble, y: &[f64]) -> Result<Vec<f64>> {
    min_norm_solve(&ens.theta.to_nalgebra(), y)
}

pub(crate) fn min_norm_solve(theta: &DMatrix<f64>, y: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = theta.shape();
    check_len(m, y.len())?;
    if m > n {
        return Err(Error::InvalidArgument(format!(
            "minimum-norm solve needs m <= n (m={m}, n={n})"
        )));
    }
    let sv = theta.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(smin > smax * (n as f64) * f64::EPSILON) {
        return Err(Error::RankDeficient { condition });
    }
    // theta^T = Q R  =>  theta = R^T Q^T,  s = Q R^{-T} y
    let qr = theta.transpose().qr();
    let r = qr.r();
    let z = r
        .transpose()
        .solve_lower_triangular(&DVector::from_column_slice(y))
        .ok_or(Error::RankDeficient { condition })?;
    Ok((qr.q() * z).iter().copied().collect())
}

/// Least-squares coefficients on `columns` and the residual norm.
fn fit_support(theta: &DMatrix<f64>, y: &DVector<f64>, columns: &[usize]) -> Option<(Vec<f64>, f64)> {
    let sub = theta.select_columns(columns);
    let svd = sub.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > smax * 1e-12) {
        return None;
    }
    let z = svd.solve(y, 0.0).ok()?;
    let residual = (&sub * &z - y).norm();
    Some((z.iter().copied().collect(), residual))
}

/// Calls `visit` on every `k`-subset of `0..n` in lexicographic order.
fn for_each_subset(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        let Some(pos) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return;
        };
        idx[pos] += 1;
        for j in pos + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

pub const L0_MAX_N: usize = 16;
pub const L0_MAX_K: usize = 3;

/// Sparsest exact solution of `theta s = y` by exhaustive support search.
///
/// Supports are tried by increasing size; the first size with any support
/// whose least-squares residual is at most `1e-8 |y|` wins. Within that
/// size the lowest residual is chosen, then the lexicographically smallest
/// support. Limited to `n <= 16` and `k_max <= 3`.
pub fn l0_oracle(ens: &SensingEnsemble, y: &[f64], k_max: usize) -> Result<Vec<f64>> {
    let n = ens.n;
    check_len(ens.m, y.len())?;
    if n > L0_MAX_N || k_max > L0_MAX_K {
        return Err(Error::InvalidArgument(format!(
            "exhaustive search limited to n <= {L0_MAX_N}, k <= {L0_MAX_K} (n={n}, k={k_max})"
        )));
    }
    let y_norm = norm2(y);
    if y_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let bound = 1e-8 * y_norm;
    let theta = ens.theta.to_nalgebra();
    let yv = DVector::from_column_slice(y);
    for k in 1..=k_max.min(ens.m) {
        let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
        for_each_subset(n, k, |cols| {
            if let Some((z, residual)) = fit_support(&theta, &yv, cols) {
                if residual <= bound && best.as_ref().is_none_or(|b| residual < b.0) {
                    best = Some((residual, cols.to_vec(), z));
                }
            }
        });
        if let Some((_, cols, z)) = best {
            let mut s = vec![0.0; n];
            for (&j, v) in cols.iter().zip(z) {
                s[j] = v;
            }
            return Ok(s);
        }
    }
    Err(Error::InfeasibleAtK { k_max })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconReport {
    /// `|s_hat - s_star| / |s_star|`, or the absolute error when `s_star` is zero.
    pub rel_l2_error: f64,
    /// False when `s_star` is all zero and `rel_l2_error` holds the absolute error.
    pub relative: bool,
    pub support_precision: f64,
    pub support_recall: f64,
    /// `max_i |theta_i . s_hat - y_i|`.
    pub residual_inf: f64,
    /// Seconds; filled in by the caller that timed the reconstruction.
    pub wall_time: f64,
}

/// Indices with `|s_i| > eps * max |s|`.
pub fn thresholded_support(s: &[f64], eps: f64) -> Vec<usize> {
    let peak = s.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    s.iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > eps * peak)
        .map(|(i, _)| i)
        .collect()
}

/// Recovery metrics of `s_hat` against the planted `s_star`.
///
/// The recovered support is thresholded at `support_eps * max |s_hat|`;
/// the planted support is the exact set of nonzeros of `s_star`.
pub fn evaluate(
    s_hat: &[f64],
    s_star: &[f64],
    ens: &SensingEnsemble,
    y: &[f64],
    support_eps: f64,
) -> Result<ReconReport> {
    check_len(s_star.len(), s_hat.len())?;
    check_len(ens.n, s_hat.len())?;
    check_len(ens.m, y.len())?;

    let err = dist2(s_hat, s_star);
    let truth_norm = norm2(s_star);
    let (rel_l2_error, relative) = if truth_norm > 0.0 { (err / truth_norm, true) } else { (err, false) };

    let found = thresholded_support(s_hat, support_eps);
    let planted: Vec<usize> = (0..s_star.len()).filter(|&i| s_star[i] != 0.0).collect();
    let hits = found.iter().filter(|i| s_star[**i] != 0.0).count();
    let support_precision = if found.is_empty() { 1.0 } else { hits as f64 / found.len() as f64 };
    let support_recall = if planted.is_empty() { 1.0 } else { hits as f64 / planted.len() as f64 };

    let fitted = ens.theta.matvec(s_hat)?;
    let residual_inf = fitted.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    Ok(ReconReport { rel_l2_error, relative, support_precision, support_recall, residual_inf, wall_time: 0.0 })
}
