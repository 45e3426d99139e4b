use crate::error::{Error, Result};
use crate::scalar::Real;

/// Curvature comparison functions at a given `(kappa, t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Comparison<T> {
    /// Generalized sine `s_kappa(t)`.
    pub s: T,
    /// `c_kappa = s_kappa'`.
    pub c: T,
    /// `s / c`.
    pub ta: T,
    /// `c / s`; `+inf` at `t = 0`.
    pub co: T,
}

/// Evaluates `s_kappa, c_kappa, ta_kappa, co_kappa` at `t >= 0`.
///
/// For `kappa > 0` the argument must stay below the first zero `pi/sqrt(kappa)`
/// of `s_kappa`, where `co_kappa` has its pole.
pub fn comparison<T: Real>(kappa: T, t: T) -> Result<Comparison<T>> {
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(Error::Domain(format!("comparison argument t = {t} must be finite and >= 0")));
    }
    let (s, c) = if kappa > T::zero() {
        let k = kappa.sqrt();
        if k * t >= T::PI() {
            return Err(Error::Domain(format!("co_kappa pole: t = {t} >= pi/sqrt(kappa) = {}", T::PI() / k)));
        }
        ((k * t).sin() / k, (k * t).cos())
    } else if kappa < T::zero() {
        let k = (-kappa).sqrt();
        ((k * t).sinh() / k, (k * t).cosh())
    } else {
        (t, T::one())
    };
    let co = if s == T::zero() { T::infinity() } else { c / s };
    Ok(Comparison { s, c, ta: s / c, co })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn flat_branch() {
        let r = comparison(0.0f64, 0.7).unwrap();
        assert_eq!(r.s, 0.7);
        assert_eq!(r.c, 1.0);
        assert_eq!(r.ta, 0.7);
        assert!((r.co - 1.0 / 0.7).abs() < 1e-15);
    }

    #[test]
    fn spherical_quarter() {
        let r = comparison(1.0, PI / 2.0).unwrap();
        assert!((r.s - 1.0).abs() < 1e-15);
        assert!(r.c.abs() < 1e-15);
    }

    #[test]
    fn hyperbolic_unit() {
        let r = comparison(-1.0, 1.0).unwrap();
        assert!((r.s - 1f64.sinh()).abs() < 1e-15);
        assert!((r.c - 1f64.cosh()).abs() < 1e-15);
    }

    #[test]
    fn continuity_in_kappa() {
        let t = 0.9;
        for k in [1e-10f64, -1e-10] {
            let r = comparison::<f64>(k, t).unwrap();
            assert!((r.s - t).abs() < 1e-9);
            assert!((r.co - 1.0 / t).abs() < 1e-8);
        }
    }

    #[test]
    fn derivative_relation() {
        for &k in &[1.0f64, -0.5, 0.0, 4.0] {
            let t = 0.4;
            let h = 1e-6;
            let fd = (comparison(k, t + h).unwrap().s - comparison(k, t - h).unwrap().s) / (2.0 * h);
            assert!((fd - comparison(k, t).unwrap().c).abs() < 1e-9);
        }
    }

    #[test]
    fn pole_is_an_error() {
        assert!(comparison(1.0, PI).is_err());
        assert!(comparison(4.0, 2.0).is_err());
        assert!(comparison(1.0, -0.1).is_err());
        assert_eq!(comparison(1.0, 0.0).unwrap().co, f64::INFINITY);
    }
}
