use bregman_cs::baselines::thresholded_support;
use bregman_cs::rng::SeededRng;
use bregman_cs::{
    evaluate, l0_oracle, make_gaussian_ensemble, make_random_sparse, measure, pseudo_inverse_solve, Matrix,
    SensingEnsemble, SparseSignalSpec, Transform,
};
use nalgebra::DMatrix;

fn planted(n: usize, m: usize, k: usize, seed: u64) -> (SensingEnsemble, Vec<f64>, Vec<f64>) {
    let s = make_random_sparse(&SparseSignalSpec { n, sparsity: k, amplitude_range: (0.5, 2.0), seed }).unwrap();
    let ens = make_gaussian_ensemble(n, m, seed ^ 0xabcd, Transform::Identity).unwrap();
    let y = measure(&ens, &s).unwrap();
    (ens, s, y)
}

fn support(s: &[f64]) -> Vec<usize> {
    (0..s.len()).filter(|&i| s[i] != 0.0).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn square_system_is_inverted() {
    let mut rng = SeededRng::new(1);
    let phi = Matrix::from_row_major(6, 6, (0..36).map(|_| rng.standard_normal()).collect()).unwrap();
    let ens = SensingEnsemble::from_parts(phi.clone(), Matrix::identity(6), 0, Transform::Identity).unwrap();
    let x: Vec<f64> = (0..6).map(|i| i as f64 - 2.5).collect();
    let y = phi.matvec(&x).unwrap();
    let s = pseudo_inverse_solve(&ens, &y).unwrap();
    for (a, b) in s.iter().zip(&x) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn pseudo_inverse_is_the_shortest_feasible_point() {
    let (ens, _, y) = planted(30, 10, 3, 5);
    let s_hat = pseudo_inverse_solve(&ens, &y).unwrap();
    let theta = DMatrix::from_row_slice(ens.m, ens.n, ens.theta.as_slice());
    // null-space basis from the full SVD of theta^T theta
    let svd = (theta.transpose() * &theta).svd(true, false);
    let u = svd.u.unwrap();
    let null: Vec<usize> = (0..ens.n).filter(|&j| svd.singular_values[j] < 1e-10).collect();
    assert_eq!(null.len(), ens.n - ens.m);

    let mut rng = SeededRng::new(9);
    for _ in 0..100 {
        let mut z = s_hat.clone();
        for &j in &null {
            let c = 3.0 * rng.standard_normal();
            for (i, zi) in z.iter_mut().enumerate() {
                *zi += c * u[(i, j)];
            }
        }
        let r = ens.theta.matvec(&z).unwrap();
        assert!(r.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-9));
        assert!(norm(&s_hat) <= norm(&z) + 1e-12);
    }
}

#[test]
fn oracle_recovers_planted_supports() {
    for k in [1, 2] {
        for seed in 0..20 {
            let (ens, s, y) = planted(12, 8, k, seed);
            let hat = l0_oracle(&ens, &y, 3).unwrap();
            assert_eq!(support(&hat), support(&s), "k={k} seed={seed}");
        }
    }
}

#[test]
fn oracle_support_ignores_positive_row_scaling() {
    for seed in 0..10 {
        let (ens, _, y) = planted(10, 6, 2, seed);
        let base = l0_oracle(&ens, &y, 3).unwrap();
        for c in [1e-3, 0.5, 7.0, 1e4] {
            let phi = ens.phi.scaled(c);
            let scaled = SensingEnsemble::from_parts(phi, ens.psi.clone(), ens.seed, ens.transform).unwrap();
            let y_c: Vec<f64> = y.iter().map(|v| v * c).collect();
            let hat = l0_oracle(&scaled, &y_c, 3).unwrap();
            assert_eq!(support(&hat), support(&base), "seed {seed} c {c}");
        }
    }
}

#[test]
fn metrics_are_invariant_under_joint_permutation() {
    let (ens, s, y) = planted(16, 8, 3, 21);
    let mut rng = SeededRng::new(4);
    let s_hat: Vec<f64> = s.iter().map(|v| v + 0.01 * rng.standard_normal()).collect();
    let base = evaluate(&s_hat, &s, &ens, &y, 1e-3).unwrap();

    let mut perm: Vec<usize> = (0..16).collect();
    for i in (1..16).rev() {
        perm.swap(i, rng.below(i + 1));
    }
    let phi_p = ens.phi.select_columns(&perm);
    let ens_p = SensingEnsemble::from_parts(phi_p, Matrix::identity(16), 0, Transform::Identity).unwrap();
    let s_p: Vec<f64> = perm.iter().map(|&j| s[j]).collect();
    let hat_p: Vec<f64> = perm.iter().map(|&j| s_hat[j]).collect();
    let permuted = evaluate(&hat_p, &s_p, &ens_p, &y, 1e-3).unwrap();

    assert!((base.rel_l2_error - permuted.rel_l2_error).abs() <= 1e-15);
    assert_eq!(base.support_precision, permuted.support_precision);
    assert_eq!(base.support_recall, permuted.support_recall);
    assert!((base.residual_inf - permuted.residual_inf).abs() <= 1e-12);
}

#[test]
fn metrics_stay_in_range() {
    let mut rng = SeededRng::new(8);
    for seed in 0..30 {
        let (ens, s, y) = planted(20, 10, 1 + seed as usize % 4, seed);
        let s_hat: Vec<f64> = (0..20).map(|_| rng.standard_normal()).collect();
        let r = evaluate(&s_hat, &s, &ens, &y, 1e-3).unwrap();
        assert!(r.rel_l2_error.is_finite() && r.rel_l2_error >= 0.0);
        assert!(r.residual_inf.is_finite() && r.residual_inf >= 0.0);
        assert!((0.0..=1.0).contains(&r.support_precision));
        assert!((0.0..=1.0).contains(&r.support_recall));
    }
    assert_eq!(thresholded_support(&[0.0, -1.0, 1e-4, 2e-3], 1e-3), vec![1, 3]);
}
