use mrof_core::oracle::{scalar_kkt_residual, scalar_objective};
use mrof_core::taut_string_1d;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Coordinate descent on the box-constrained dual
/// `min 1/2 |f - D^T p|^2, |p_j| <= mu`, `(D^T p)_i = p_{i-1} - p_i`,
/// with `u = f - D^T p`. Each coordinate has a closed-form clipped update.
fn dual_coordinate_descent(f: &[f64], mu: f64) -> Vec<f64> {
    let n = f.len();
    let mut p = vec![0.0; n - 1];
    for _ in 0..200_000 {
        let mut change = 0.0f64;
        for j in 0..n - 1 {
            let a = f[j] - if j > 0 { p[j - 1] } else { 0.0 };
            let b = f[j + 1] + if j + 2 < n { p[j + 1] } else { 0.0 };
            let next = (0.5 * (b - a)).clamp(-mu, mu);
            change = change.max((next - p[j]).abs());
            p[j] = next;
        }
        if change < 1e-15 {
            break;
        }
    }
    (0..n)
        .map(|i| {
            let left = if i > 0 { p[i - 1] } else { 0.0 };
            let right = if i + 1 < n { p[i] } else { 0.0 };
            f[i] - left + right
        })
        .collect()
}

#[test]
fn taut_string_matches_dual_coordinate_descent_on_twelve_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..50 {
        let f: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lambda = rng.random_range(0.5..40.0);
        let dx = 1.0 / 11.0;
        let exact = taut_string_1d(&f, lambda, dx).unwrap();
        let cd = dual_coordinate_descent(&f, 1.0 / (lambda * dx));
        let gap = exact.values.iter().zip(&cd).map(|(a, b)| (a.coords[0] - b).abs()).fold(0.0, f64::max);
        assert!(gap < 1e-8, "gap {gap} at lambda {lambda}");
        let u: Vec<f64> = exact.values.iter().map(|p| p.coords[0]).collect();
        assert!(scalar_objective(&f, &u, lambda, dx) <= scalar_objective(&f, &cd, lambda, dx) + 1e-12);
    }
}

#[test]
fn taut_string_satisfies_kkt_for_large_and_small_lambda() {
    let f = [0.0, 3.0, -1.0, 2.0, 2.0, 5.0, -4.0, 1.0];
    for lambda in [1e-3, 0.1, 1.0, 10.0, 1e4] {
        let u = taut_string_1d(&f, lambda, 0.5).unwrap().field().to_scalars();
        assert!(scalar_kkt_residual(&f, &u, lambda, 0.5) < 1e-9);
    }
    // tiny lambda: the mean
    let u = taut_string_1d(&f, 1e-6, 0.5).unwrap().field().to_scalars();
    let mean = f.iter().sum::<f64>() / f.len() as f64;
    assert!(u.iter().all(|x| (x - mean).abs() < 1e-9));
}
