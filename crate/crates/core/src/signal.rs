//! Test signals, the orthonormal DCT pair and Gaussian sensing ensembles.
//!
//! Coefficients `s` and samples `x` are related by `x = psi s`, where the
//! columns of `psi` are the orthonormal DCT-II basis vectors. Measurements
//! are `y = phi x = theta s` with `theta = phi psi`.

use std::f64::consts::PI;

use crate::error::{check_len, Error, Result};
use crate::matrix::Matrix;
use crate::rng::SeededRng;

/// `cos(pi m / (2n))` with `m` reduced modulo `4n` before the float conversion.
fn dct_cos(m: usize, n: usize) -> f64 {
    let m = m % (4 * n);
    (PI * m as f64 / (2 * n) as f64).cos()
}

fn dct_scale(k: usize, n: usize) -> f64 {
    if k == 0 {
        (1.0 / n as f64).sqrt()
    } else {
        (2.0 / n as f64).sqrt()
    }
}

/// The `n x n` orthonormal DCT-II analysis matrix `C`, with `s = C x`.
/// The synthesis matrix `psi` is its transpose.
pub fn dct_matrix(n: usize) -> Matrix {
    let mut c = Matrix::zeros(n, n);
    for k in 0..n {
        let a = dct_scale(k, n);
        for i in 0..n {
            c.set(k, i, a * dct_cos((2 * i + 1) * k, n));
        }
    }
    c
}

/// Orthonormal DCT-II.
pub fn dct_forward(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let sum: f64 = x.iter().enumerate().map(|(i, &v)| v * dct_cos((2 * i + 1) * k, n)).sum();
            dct_scale(k, n) * sum
        })
        .collect()
}

/// Orthonormal DCT-III, the inverse of [`dct_forward`].
pub fn dct_inverse(s: &[f64]) -> Vec<f64> {
    let n = s.len();
    (0..n)
        .map(|i| {
            s.iter()
                .enumerate()
                .map(|(k, &v)| v * dct_scale(k, n) * dct_cos((2 * i + 1) * k, n))
                .sum()
        })
        .collect()
}

/// Cusp waveform `sqrt(|t - 0.37|)` at `t = (i + 0.5) / n`, made exactly
/// `target_sparsity`-sparse in the DCT domain by keeping its largest
/// coefficients. Returns `(x, s)` with `x = dct_inverse(s)`.
pub fn make_cusp(n: usize, target_sparsity: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    make_cusp_scaled(n, target_sparsity, 1.0)
}

/// [`make_cusp`] with the waveform multiplied by `amplitude`.
pub fn make_cusp_scaled(n: usize, target_sparsity: usize, amplitude: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 || target_sparsity == 0 || target_sparsity > n {
        return Err(Error::InvalidArgument(format!(
            "cusp sparsity must be in 1..={n}, got {target_sparsity}"
        )));
    }
    let raw: Vec<f64> = (0..n)
        .map(|i| {
            let t = (i as f64 + 0.5) / n as f64;
            amplitude * (t - 0.37).abs().sqrt()
        })
        .collect();
    let full = dct_forward(&raw);
    let mut order: Vec<usize> = (0..n).collect();
    // stable on ties: equal magnitudes keep ascending index order
    order.sort_by(|&a, &b| full[b].abs().total_cmp(&full[a].abs()).then(a.cmp(&b)));
    let mut s = vec![0.0; n];
    for &k in &order[..target_sparsity] {
        s[k] = full[k];
    }
    let x = dct_inverse(&s);
    Ok((x, s))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseSignalSpec {
    pub n: usize,
    pub sparsity: usize,
    /// Magnitude range `(lo, hi)` with `0 < lo <= hi`; signs are drawn separately.
    pub amplitude_range: (f64, f64),
    pub seed: u64,
}

impl SparseSignalSpec {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.amplitude_range;
        if self.sparsity == 0 || self.sparsity > self.n {
            return Err(Error::InvalidArgument(format!(
                "sparsity must be in 1..={}, got {}",
                self.n, self.sparsity
            )));
        }
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidArgument(format!("invalid amplitude range ({lo}, {hi})")));
        }
        Ok(())
    }
}

/// Exactly `sparsity` nonzeros at distinct seeded positions, magnitudes
/// uniform in the amplitude range and independent random signs.
pub fn make_random_sparse(spec: &SparseSignalSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut rng = SeededRng::new(spec.seed);
    let (lo, hi) = spec.amplitude_range;
    let mut s = vec![0.0; spec.n];
    for idx in rng.distinct_indices(spec.n, spec.sparsity) {
        let sign = rng.sign();
        s[idx] = sign * rng.uniform_in(lo, hi);
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Transform {
    Identity,
    Dct,
}

impl Transform {
    pub fn name(self) -> &'static str {
        match self {
            Transform::Identity => "identity",
            Transform::Dct => "dct",
        }
    }

    /// The synthesis matrix `psi` (`x = psi s`).
    pub fn synthesis_matrix(self, n: usize) -> Matrix {
        match self {
            Transform::Identity => Matrix::identity(n),
            Transform::Dct => dct_matrix(n).transpose(),
        }
    }

    /// `x = psi s`.
    pub fn synthesize(self, s: &[f64]) -> Vec<f64> {
        match self {
            Transform::Identity => s.to_vec(),
            Transform::Dct => dct_inverse(s),
        }
    }

    pub fn analyze(self, x: &[f64]) -> Vec<f64> {
        match self {
            Transform::Identity => x.to_vec(),
            Transform::Dct => dct_forward(x),
        }
    }
}

impl std::str::FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Transform::Identity),
            "dct" => Ok(Transform::Dct),
            other => Err(Error::InvalidArgument(format!("unknown transform '{other}'"))),
        }
    }
}

/// Measurement matrix, transform and their product.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingEnsemble {
    pub phi: Matrix,
    pub psi: Matrix,
    pub theta: Matrix,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub transform: Transform,
}

impl SensingEnsemble {
    /// Assembles an ensemble from given matrices, forming `theta = phi psi`.
    pub fn from_parts(phi: Matrix, psi: Matrix, seed: u64, transform: Transform) -> Result<Self> {
        check_len(psi.nrows(), psi.ncols())?;
        check_len(phi.ncols(), psi.nrows())?;
        let theta = phi.matmul(&psi)?;
        Ok(SensingEnsemble { n: phi.ncols(), m: phi.nrows(), phi, psi, theta, seed, transform })
    }

    /// True when there are fewer measurements than unknowns.
    pub fn is_compressive(&self) -> bool {
        self.m < self.n
    }
}

/// `phi` has iid `N(0, 1/m)` entries drawn row by row from the seeded stream.
pub fn make_gaussian_ensemble(n: usize, m: usize, seed: u64, transform: Transform) -> Result<SensingEnsemble> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument(format!("ensemble needs n, m >= 1 (n={n}, m={m})")));
    }
    let mut rng = SeededRng::new(seed);
    let scale = 1.0 / (m as f64).sqrt();
    let data: Vec<f64> = (0..n * m).map(|_| scale * rng.standard_normal()).collect();
    let phi = Matrix::from_row_major(m, n, data)?;
    SensingEnsemble::from_parts(phi, transform.synthesis_matrix(n), seed, transform)
}

/// `y = theta s`.
pub fn measure(ens: &SensingEnsemble, s: &[f64]) -> Result<Vec<f64>> {
    ens.theta.matvec(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::norm2;
    use approx::assert_abs_diff_eq;

    fn random_vec(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = SeededRng::new(seed);
        (0..n).map(|_| rng.standard_normal()).collect()
    }

    #[test]
    fn dc_only_for_constant_signal() {
        let s = dct_forward(&[1.0; 8]);
        assert_abs_diff_eq!(s[0], 8f64.sqrt(), epsilon = 1e-14);
        for v in &s[1..] {
            assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-14);
        }
        let mut delta = vec![0.0; 4];
        delta[0] = 1.0;
        for v in dct_inverse(&delta) {
            assert_abs_diff_eq!(v, 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn round_trip_and_parseval() {
        let x = random_vec(1024, 1);
        let s = dct_forward(&x);
        assert!((norm2(&s) / norm2(&x) - 1.0).abs() <= 1e-12);
        let back = dct_inverse(&s);
        for (a, b) in back.iter().zip(&x) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
    }

    #[test]
    fn inverse_is_linear() {
        let s1 = random_vec(64, 2);
        let s2 = random_vec(64, 3);
        let (a, b) = (1.7, -0.4);
        let combo: Vec<f64> = s1.iter().zip(&s2).map(|(p, q)| a * p + b * q).collect();
        let lhs = dct_inverse(&combo);
        let (x1, x2) = (dct_inverse(&s1), dct_inverse(&s2));
        for i in 0..64 {
            assert_abs_diff_eq!(lhs[i], a * x1[i] + b * x2[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn dct_matrix_is_orthonormal() {
        for n in [4, 8, 128, 1024] {
            let c = dct_matrix(n);
            let gram = c.matmul(&c.transpose()).unwrap();
            assert!(gram.max_abs_diff(&Matrix::identity(n)) <= 1e-10, "n={n}");
        }
    }

    #[test]
    fn matrix_agrees_with_fast_path() {
        let x = random_vec(32, 4);
        let via_matrix = dct_matrix(32).matvec(&x).unwrap();
        for (a, b) in via_matrix.iter().zip(dct_forward(&x)) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-13);
        }
    }

    #[test]
    fn cusp_is_exactly_sparse_with_cusp_near_037() {
        let (x, s) = make_cusp(1024, 72).unwrap();
        assert_eq!(s.iter().filter(|v| **v != 0.0).count(), 72);
        let argmin = x
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap();
        assert!((argmin as i64 - 379).abs() <= 8, "argmin {argmin}");
    }

    #[test]
    fn cusp_without_thresholding_is_full_dct() {
        let n = 64;
        let (_, s) = make_cusp(n, n).unwrap();
        let raw: Vec<f64> = (0..n).map(|i| ((i as f64 + 0.5) / n as f64 - 0.37).abs().sqrt()).collect();
        assert_eq!(s, dct_forward(&raw));
        assert!(make_cusp(8, 9).is_err());
    }

    #[test]
    fn random_sparse_counts_and_determinism() {
        let spec = SparseSignalSpec { n: 128, sparsity: 4, amplitude_range: (1.0, 2.0), seed: 5 };
        let s = make_random_sparse(&spec).unwrap();
        assert_eq!(s.iter().filter(|v| **v != 0.0).count(), 4);
        assert!(s.iter().all(|v| *v == 0.0 || (1.0..2.0).contains(&v.abs())));
        assert_eq!(s, make_random_sparse(&spec).unwrap());

        let dense = SparseSignalSpec { sparsity: 128, ..spec.clone() };
        assert!(make_random_sparse(&dense).unwrap().iter().all(|v| *v != 0.0));
        assert!(make_random_sparse(&SparseSignalSpec { sparsity: 0, ..spec.clone() }).is_err());
        assert!(make_random_sparse(&SparseSignalSpec { amplitude_range: (0.0, 1.0), ..spec }).is_err());
    }

    #[test]
    fn identity_ensemble_shape() {
        let ens = make_gaussian_ensemble(128, 40, 9, Transform::Identity).unwrap();
        assert_eq!((ens.theta.nrows(), ens.theta.ncols()), (40, 128));
        assert_eq!(ens.theta, ens.phi);
        assert!(ens.is_compressive());
        assert_eq!(ens, make_gaussian_ensemble(128, 40, 9, Transform::Identity).unwrap());
    }

    #[test]
    fn column_norms_concentrate() {
        let mut total = 0.0;
        let seeds = 20;
        for seed in 0..seeds {
            let ens = make_gaussian_ensemble(128, 40, seed, Transform::Identity).unwrap();
            total += (0..128).map(|j| norm2(&ens.phi.column(j)).powi(2)).sum::<f64>() / 128.0;
        }
        let mean = total / seeds as f64;
        assert!((mean - 1.0).abs() <= 0.2, "mean squared column norm {mean}");
    }

    #[test]
    fn dct_theta_matches_product_and_measure_is_associative() {
        let ens = make_gaussian_ensemble(64, 20, 1, Transform::Dct).unwrap();
        let psi = dct_matrix(64).transpose();
        let explicit = ens.phi.matmul(&psi).unwrap();
        assert!(ens.theta.max_abs_diff(&explicit) <= 1e-10);
        for i in 0..20 {
            let via_rows = dct_forward(ens.phi.row(i));
            for (a, b) in via_rows.iter().zip(ens.theta.row(i)) {
                assert_abs_diff_eq!(*a, *b, epsilon = 1e-10);
            }
        }
        let s = random_vec(64, 8);
        let y = measure(&ens, &s).unwrap();
        let y2 = ens.phi.matvec(&dct_inverse(&s)).unwrap();
        for (a, b) in y.iter().zip(&y2) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-10);
        }
        assert!(measure(&ens, &[0.0; 64]).unwrap().iter().all(|v| *v == 0.0));
        assert!(measure(&ens, &[0.0; 63]).is_err());
    }

    #[test]
    fn cusp_measurement_shapes() {
        let (_, s) = make_cusp(1024, 72).unwrap();
        let ens = make_gaussian_ensemble(1024, 720, 0, Transform::Dct).unwrap();
        assert_eq!(measure(&ens, &s).unwrap().len(), 720);
    }
}
