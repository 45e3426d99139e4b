//! Chart-level coefficient field of the regularized system and numerical
//! checks of its structural inequalities (growth, ellipticity, monotonicity,
//! coercivity, Lipschitz dependence on `x` and `xi`).
//!
//! In an isothermal chart with conformal factor `rho` the flux is
//! `a(x, xi) = (b(x, xi) + sigma) xi` with `b = rho / sqrt(|xi|^2 + eps^2 rho^2)`.
//! `xi` is the flattened `2 x N` Jacobian; only Frobenius quantities are used,
//! so the layout does not matter.

use serde::Serialize;

use crate::manifold::{Manifold, Point};
use crate::scalar::{dot, norm, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct Coefficients<T> {
    pub b: T,
    pub a: Vec<T>,
}

pub fn coefficients<T: Real>(rho: T, xi: &[T], eps: T, sigma: T) -> Coefficients<T> {
    let b = rho / (dot(xi, xi) + eps * eps * rho * rho).sqrt();
    let a = xi.iter().map(|&x| (b + sigma) * x).collect();
    Coefficients { b, a }
}

/// `sum A_ij^ab(x, xi) eta_i^a eta_j^b` for `A = d a / d xi`:
/// `(b + sigma)|eta|^2 - b (xi . eta)^2 / (|xi|^2 + eps^2 rho^2)`.
pub fn quadratic_form<T: Real>(rho: T, xi: &[T], eta: &[T], eps: T, sigma: T) -> T {
    let den = dot(xi, xi) + eps * eps * rho * rho;
    let b = rho / den.sqrt();
    let xe = dot(xi, eta);
    (b + sigma) * dot(eta, eta) - b * xe * xe / den
}

/// Bounds of the conformal factor over the chart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RhoBounds<T> {
    pub min: T,
    pub max: T,
    pub lipschitz: T,
}

/// One probe point `(x, y, xi, eta)` with `rho` evaluated at `x` and `y`.
#[derive(Clone, Debug)]
pub struct HypothesisSample<T> {
    pub x: [T; 2],
    pub y: [T; 2],
    pub rho_x: T,
    pub rho_y: T,
    pub xi: Vec<T>,
    pub eta: Vec<T>,
}

/// Worst relative slack and violation count per hypothesis.
#[derive(Clone, Debug, Serialize)]
pub struct HypothesisReport {
    pub samples: usize,
    pub threshold: f64,
    /// `(label, min slack, violations)` for H1..H6.
    pub entries: Vec<(String, f64, usize)>,
}

impl HypothesisReport {
    pub fn violations(&self) -> usize {
        self.entries.iter().map(|e| e.2).sum()
    }

    pub fn passed(&self) -> bool {
        self.violations() == 0
    }
}

/// `(lhs - rhs) / max(1, |lhs|, |rhs|)` for an inequality `lhs >= rhs`.
fn rel_slack<T: Real>(lhs: T, rhs: T) -> f64 {
    ((lhs - rhs) / T::one().max(lhs.abs()).max(rhs.abs())).f64()
}

fn diff<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

/// Evaluates H1-H6 on every sample. Slacks are relative to the magnitude of
/// the two sides; a violation is a slack below `-1e-12`.
///
/// Constants: H1 uses `C = max(1, max rho)` so that `|a| <= (C/eps + sigma)|xi|`;
/// H5 uses the Lipschitz constant of `rho` (`|d a / d rho| <= 1`); H6 uses
/// `C = min rho / eps`, i.e. the bound `(1/eps + sigma)|xi - eta|`.
pub fn check_hypotheses<T: Real>(
    samples: &[HypothesisSample<T>],
    eps: T,
    sigma: T,
    rho: RhoBounds<T>,
) -> HypothesisReport {
    let threshold = -1e-12;
    let labels =
        ["H1 growth", "H2 ellipticity", "H3 monotonicity", "H4 coercivity", "H5 lipschitz-x", "H6 lipschitz-xi"];
    let mut worst = [f64::INFINITY; 6];
    let mut bad = [0usize; 6];
    let c1 = T::one().max(rho.max);
    for s in samples {
        let ax = coefficients(s.rho_x, &s.xi, eps, sigma);
        let ae = coefficients(s.rho_x, &s.eta, eps, sigma);
        let ay = coefficients(s.rho_y, &s.xi, eps, sigma);
        let dxe = diff(&s.xi, &s.eta);
        let da = diff(&ax.a, &ae.a);
        let dx = ((s.x[0] - s.y[0]).powi(2) + (s.x[1] - s.y[1]).powi(2)).sqrt();
        let slacks = [
            rel_slack((c1 / eps + sigma) * norm(&s.xi), norm(&ax.a)),
            rel_slack(quadratic_form(s.rho_x, &s.xi, &s.eta, eps, sigma), sigma * dot(&s.eta, &s.eta)),
            rel_slack(dot(&da, &dxe), sigma * dot(&dxe, &dxe)),
            rel_slack(dot(&ax.a, &s.xi), sigma * dot(&s.xi, &s.xi)),
            rel_slack(rho.lipschitz * dx, norm(&diff(&ax.a, &ay.a))),
            rel_slack((T::one() / eps + sigma) * norm(&dxe), norm(&da)),
        ];
        for (k, &sl) in slacks.iter().enumerate() {
            worst[k] = worst[k].min(sl);
            if sl < threshold || sl.is_nan() {
                bad[k] += 1;
            }
        }
    }
    HypothesisReport {
        samples: samples.len(),
        threshold,
        entries: labels.iter().zip(worst).zip(bad).map(|((l, w), b)| (l.to_string(), w, b)).collect(),
    }
}

/// In-ball growth bound of the fidelity force `t = -lambda rho^2 log_p f`:
/// returns the slack of `|t| <= lambda rho^2 * 2R` for `p, f` in `B(center, R)`.
pub fn fidelity_force_slack<T: Real>(
    m: &Manifold<T>,
    rho: T,
    lambda: T,
    p: &Point<T>,
    f: &Point<T>,
    radius: T,
) -> Option<T> {
    let l = m.log(p, f).ok()?;
    let t = lambda * rho * rho * m.tangent_norm(p, &l);
    Some(lambda * rho * rho * (radius + radius) - t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_coefficients() {
        let c = coefficients(1.0, &[0.0; 6], 0.25, 0.3);
        assert_eq!(c.b, 4.0);
        assert!(c.a.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn large_gradient_limit() {
        let xi = [1e8f64, -2e8, 0.0, 3e8];
        let c = coefficients(1.0, &xi, 0.1, 0.5);
        assert!(c.b < 1e-8);
        let ratio = norm(&c.a) / (0.5 * norm(&xi));
        assert!((ratio - 1.0).abs() < 1e-7);
    }

    #[test]
    fn quadratic_form_matches_finite_difference_jacobian() {
        let (rho, eps, sigma) = (1.3, 0.2, 0.4);
        let xi = [0.3, -0.7, 1.1, 0.2];
        let eta = [0.5, 0.1, -0.4, 0.9];
        let h = 1e-6;
        let plus: Vec<f64> = xi.iter().zip(&eta).map(|(a, b)| a + h * b).collect();
        let minus: Vec<f64> = xi.iter().zip(&eta).map(|(a, b)| a - h * b).collect();
        let (ap, am) = (coefficients(rho, &plus, eps, sigma).a, coefficients(rho, &minus, eps, sigma).a);
        let fd: f64 = ap.iter().zip(&am).zip(&eta).map(|((p, m), e)| (p - m) / (2.0 * h) * e).sum();
        assert!((fd - quadratic_form(rho, &xi, &eta, eps, sigma)).abs() < 1e-7);
    }

    #[test]
    fn orthogonal_eta_gives_full_diffusivity() {
        let (rho, eps, sigma) = (1.0f64, 0.3, 0.2);
        let xi = [1.0, 0.0, 0.0, 0.0];
        let eta = [0.0, 0.4, -0.2, 0.1];
        let b = coefficients(rho, &xi, eps, sigma).b;
        let q = quadratic_form(rho, &xi, &eta, eps, sigma);
        assert!((q - (b + sigma) * dot(&eta, &eta)).abs() < 1e-15);
    }

    #[test]
    fn equal_arguments_give_zero_monotonicity_slack() {
        let s = HypothesisSample {
            x: [0.1, 0.2],
            y: [0.1, 0.2],
            rho_x: 1.0,
            rho_y: 1.0,
            xi: vec![0.5, 0.2],
            eta: vec![0.5, 0.2],
        };
        let r = check_hypotheses(&[s], 0.1, 0.3, RhoBounds { min: 1.0, max: 1.0, lipschitz: 0.0 });
        assert_eq!(r.entries[2].1, 0.0);
        assert!(r.passed());
    }

    #[test]
    fn growth_bound_needs_unit_constant_for_small_rho() {
        // for rho < 1 and xi -> 0, b -> 1/eps, so C must be at least 1
        let c = coefficients(0.5f64, &[1e-9, 0.0], 0.1, 0.0);
        assert!((c.b - 10.0).abs() < 1e-6);
        assert!(norm(&c.a) > (0.5 / 0.1) * 1e-9);
    }
}
