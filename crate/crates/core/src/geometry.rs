//! Composite geometric operations built on exp/log: Karcher barycenters,
//! domain mollification of fields, the reflecting ball retraction, and
//! pointwise geodesic homotopies.

use std::str::FromStr;

use rayon::prelude::*;

use crate::domain::{check_len, lipschitz_constant, Field, Grid};
use crate::error::{Error, Result};
use crate::manifold::{Manifold, Point};
use crate::scalar::Real;

/// Nonempty weighted point cloud with weights summing to one.
#[derive(Clone, Debug)]
pub struct WeightedPoints<T> {
    points: Vec<Point<T>>,
    weights: Vec<T>,
}

impl<T: Real> WeightedPoints<T> {
    /// Normalizes nonnegative weights to sum one.
    pub fn new(points: Vec<Point<T>>, weights: Vec<T>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::InvalidParameter("weighted points must be nonempty and matched".into()));
        }
        if weights.iter().any(|w| !(*w >= T::zero()) || !w.is_finite()) {
            return Err(Error::InvalidParameter("weights must be finite and nonnegative".into()));
        }
        let total: T = weights.iter().copied().sum();
        if !(total > T::zero()) {
            return Err(Error::InvalidParameter("weights sum to zero".into()));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { points, weights })
    }

    pub fn uniform(points: Vec<Point<T>>) -> Result<Self> {
        let n = points.len();
        Self::new(points, vec![T::one(); n])
    }

    pub fn points(&self) -> &[Point<T>] {
        &self.points
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }
}

/// `sum_i w_i log_q(p_i)`: minus the gradient of the Karcher functional.
fn karcher_direction<T: Real>(m: &Manifold<T>, wp: &WeightedPoints<T>, q: &Point<T>) -> Result<Vec<T>> {
    let mut g = vec![T::zero(); m.ambient_dim()];
    for (p, &w) in wp.points.iter().zip(&wp.weights) {
        if w == T::zero() {
            continue;
        }
        let v = m.log(q, p)?;
        g.iter_mut().zip(&v).for_each(|(gi, &vi)| *gi = *gi + w * vi);
    }
    Ok(g)
}

fn karcher_value<T: Real>(m: &Manifold<T>, wp: &WeightedPoints<T>, q: &Point<T>) -> T {
    let half = T::lit(0.5);
    wp.points
        .iter()
        .zip(&wp.weights)
        .map(|(p, &w)| {
            let d = m.dist(q, p);
            half * w * d * d
        })
        .sum()
}

/// Weighted Karcher mean: minimizer of `q -> 1/2 sum w_i d^2(p_i, q)`.
///
/// Fixed-point iteration `q <- exp_q(sum w_i log_q p_i)` with step halving
/// whenever the functional would increase. Returns once the first-order
/// residual `|sum w_i log_q p_i|` is at most `tol`.
pub fn barycenter<T: Real>(m: &Manifold<T>, wp: &WeightedPoints<T>, tol: T, max_iter: usize) -> Result<Point<T>> {
    if !(tol > T::zero()) {
        return Err(Error::InvalidParameter("barycenter tolerance must be positive".into()));
    }
    // start from the heaviest point; all inputs must sit in a convex ball around it
    let start = wp.weights.iter().enumerate().fold(0, |best, (i, &w)| if w > wp.weights[best] { i } else { best });
    let mut q = wp.points[start].clone();
    let spread = wp.points.iter().map(|p| m.dist(&q, p)).fold(T::zero(), T::max);
    if spread >= m.convexity_radius() {
        return Err(Error::RangeViolation(format!(
            "barycenter inputs spread {spread} exceeds convexity radius {}",
            m.convexity_radius()
        )));
    }
    let mut value = karcher_value(m, wp, &q);
    let round_off = T::lit(8.0) * T::epsilon();
    let mut g = karcher_direction(m, wp, &q)?;
    let mut gn = m.tangent_norm(&q, &g);
    for _ in 0..max_iter {
        if gn <= tol {
            return Ok(q);
        }
        let mut step = T::one();
        loop {
            let v: Vec<T> = g.iter().map(|&x| x * step).collect();
            let cand = m.exp_unchecked(&q, &v);
            let cv = karcher_value(m, wp, &cand);
            let cg = karcher_direction(m, wp, &cand)?;
            let cgn = m.tangent_norm(&cand, &cg);
            // below value resolution the residual decides
            let level = cv <= value + round_off * value && cgn < gn;
            if cv < value || level || step < T::lit(1e-10) {
                q = cand;
                value = cv;
                g = cg;
                gn = cgn;
                break;
            }
            step = step * T::lit(0.5);
        }
    }
    let residual = m.tangent_norm(&q, &karcher_direction(m, wp, &q)?);
    if residual <= tol {
        Ok(q)
    } else {
        Err(Error::NoConvergence { iterations: max_iter, residual: residual.f64() })
    }
}

/// Radial profile `psi(s)` of the mollifier, supported on `s < 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kernel {
    /// `exp(1 - 1/(1 - s^2))`.
    Bump,
    /// `1 - s`.
    Tent,
}

impl Kernel {
    pub fn eval<T: Real>(self, s: T) -> T {
        if !(s < T::one()) {
            return T::zero();
        }
        match self {
            Kernel::Bump => (T::one() - T::one() / (T::one() - s * s)).exp(),
            Kernel::Tent => T::one() - s,
        }
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bump" => Ok(Kernel::Bump),
            "tent" => Ok(Kernel::Tent),
            other => Err(Error::Parse(format!("unknown kernel '{other}'"))),
        }
    }
}

/// Mollified field plus the observed Lipschitz amplification.
#[derive(Clone, Debug)]
pub struct Mollified<T> {
    pub field: Field<T>,
    /// `Lip(f_delta) / Lip(f)` (0 when `f` is constant).
    pub lipschitz_ratio: T,
}

/// Domain mollification: `f_delta(x)` is the Karcher mean of the values
/// `f(y)` over nodes with `d(x, y) < delta`, weighted by `psi(d(x, y)/delta)`.
pub fn mollify<T: Real>(
    m: &Manifold<T>,
    grid: &Grid<T>,
    f: &Field<T>,
    delta: T,
    kernel: Kernel,
) -> Result<Mollified<T>> {
    check_len(f, grid)?;
    if !(delta >= T::zero()) {
        return Err(Error::InvalidParameter("mollification radius must be >= 0".into()));
    }
    let n = grid.len();
    let values: Vec<Result<Point<T>>> = (0..n)
        .into_par_iter()
        .map(|x| {
            if delta == T::zero() {
                return Ok(f.values[x].clone());
            }
            let mut pts = Vec::new();
            let mut ws = Vec::new();
            for y in 0..n {
                let w = kernel.eval(grid.domain_distance(x, y) / delta);
                if w > T::zero() {
                    pts.push(f.values[y].clone());
                    ws.push(w);
                }
            }
            if pts.len() == 1 {
                return Ok(pts.pop().unwrap());
            }
            let wp = WeightedPoints::new(pts, ws)?;
            barycenter(m, &wp, T::lit(1e-12), 200)
        })
        .collect();
    let field = Field::new(values.into_iter().collect::<Result<Vec<_>>>()?);
    let lf = lipschitz_constant(m, grid, f)?;
    let lipschitz_ratio = if lf > T::zero() { lipschitz_constant(m, grid, &field)? / lf } else { T::zero() };
    Ok(Mollified { field, lipschitz_ratio })
}

/// Reflecting retraction onto the closed ball `B(p, radius)`.
///
/// Points inside stay put, points at distance `r` in `[R, 2R)` are reflected
/// to radius `2R - r` along their radial geodesic, everything else maps to `p`.
pub fn retract_into_ball<T: Real>(m: &Manifold<T>, p: &Point<T>, radius: T, q: &Point<T>) -> Result<Point<T>> {
    if !(radius > T::zero() && radius < m.convexity_radius()) {
        return Err(Error::InvalidParameter(format!(
            "retraction radius {radius} must lie in (0, {})",
            m.convexity_radius()
        )));
    }
    let r = m.dist(p, q);
    if r < radius {
        return Ok(q.clone());
    }
    if r >= radius + radius {
        return Ok(p.clone());
    }
    let v = m.log(p, q)?;
    let s = (radius + radius - r) / r;
    let v: Vec<T> = v.into_iter().map(|x| x * s).collect();
    Ok(m.exp_unchecked(p, &v))
}

/// Applies [`retract_into_ball`] nodewise.
pub fn retract_field<T: Real>(m: &Manifold<T>, p: &Point<T>, radius: T, u: &Field<T>) -> Result<Field<T>> {
    let values = u.values.iter().map(|q| retract_into_ball(m, p, radius, q)).collect::<Result<Vec<_>>>()?;
    Ok(Field::new(values))
}

/// Pointwise geodesic homotopy `U(t)(x) = exp_{u(x)}(t log_{u(x)} v(x))`.
pub fn geodesic_homotopy<T: Real>(m: &Manifold<T>, u: &Field<T>, v: &Field<T>, t: T) -> Result<Field<T>> {
    if u.len() != v.len() {
        return Err(Error::GridMismatch(format!("homotopy endpoints have {} and {} nodes", u.len(), v.len())));
    }
    let values = u
        .values
        .iter()
        .zip(&v.values)
        .map(|(a, b)| {
            if t == T::zero() {
                return Ok(a.clone());
            }
            let w = m.log(a, b)?;
            let w: Vec<T> = w.into_iter().map(|x| x * t).collect();
            Ok(m.exp_unchecked(a, &w))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Field::new(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_point_barycenter() {
        let m = Manifold::<f64>::sphere(2);
        let p = Point::new(vec![0.0, 0.6, 0.8]);
        let wp = WeightedPoints::uniform(vec![p.clone()]).unwrap();
        assert_eq!(barycenter(&m, &wp, 1e-10, 100).unwrap(), p);
    }

    #[test]
    fn euclidean_barycenter_is_weighted_mean() {
        let m = Manifold::<f64>::euclidean(2);
        let pts = vec![Point::new(vec![0.0, 0.0]), Point::new(vec![3.0, 1.0]), Point::new(vec![-1.0, 2.0])];
        let wp = WeightedPoints::new(pts, vec![1.0, 2.0, 1.0]).unwrap();
        let q = barycenter(&m, &wp, 1e-12, 100).unwrap();
        assert!((q.coords[0] - 1.25).abs() < 1e-14);
        assert!((q.coords[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sphere_midpoint_matches_golden_section() {
        let m = Manifold::<f64>::sphere(2);
        let p = Point::new(vec![1.0, 0.0, 0.0]);
        let q = Point::new(vec![0.2, 0.9, 0.1]);
        let q = Point::new(q.coords.iter().map(|x| x / (0.86f64).sqrt()).collect());
        let wp = WeightedPoints::uniform(vec![p.clone(), q.clone()]).unwrap();
        let b = barycenter(&m, &wp, 1e-12, 100).unwrap();
        // golden-section on the 1-D Karcher functional along the geodesic p -> q
        let v = m.log(&p, &q).unwrap();
        let along = |s: f64| m.exp(&p, &v.iter().map(|x| x * s).collect::<Vec<_>>()).unwrap();
        let phi = |s: f64| {
            let c = along(s);
            0.5 * (m.dist(&c, &p).powi(2) + m.dist(&c, &q).powi(2))
        };
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut bb) = (0.0, 1.0);
        for _ in 0..200 {
            let x1 = bb - g * (bb - a);
            let x2 = a + g * (bb - a);
            if phi(x1) < phi(x2) {
                bb = x2;
            } else {
                a = x1;
            }
        }
        let golden = along(0.5 * (a + bb));
        assert!(m.dist(&golden, &b) < 1e-7);
        assert!((m.dist(&b, &p) - m.dist(&b, &q)).abs() < 1e-8);
    }

    #[test]
    fn barycenter_rejects_wide_spread() {
        let m = Manifold::<f64>::sphere(2);
        let pts = vec![Point::new(vec![1.0, 0.0, 0.0]), Point::new(vec![-0.6, 0.8, 0.0])];
        let wp = WeightedPoints::uniform(pts).unwrap();
        assert!(matches!(barycenter(&m, &wp, 1e-10, 100), Err(Error::RangeViolation(_))));
    }

    #[test]
    fn mollify_constant_and_small_delta() {
        let m = Manifold::<f64>::sphere(2);
        let g = Grid::interval(9).unwrap();
        let p = Point::new(vec![0.0, 0.6, 0.8]);
        let f = Field::constant(&p, 9);
        let out = mollify(&m, &g, &f, 0.3, Kernel::Bump).unwrap();
        assert_eq!(out.field, f);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let noisy = Field::new((0..9).map(|_| m.random_point_in_ball(&p, 0.3, &mut rng)).collect());
        let same = mollify(&m, &g, &noisy, 0.9 * g.spacing(), Kernel::Bump).unwrap();
        assert_eq!(same.field, noisy);
    }

    #[test]
    fn mollify_euclidean_is_convolution() {
        let m = Manifold::<f64>::euclidean(1);
        let g = Grid::interval(21).unwrap();
        let f: Vec<f64> = (0..21).map(|i| ((i * i) as f64 * 0.37).sin()).collect();
        let delta = 0.17;
        for kernel in [Kernel::Bump, Kernel::Tent] {
            let out = mollify(&m, &g, &Field::from_scalars(&f), delta, kernel).unwrap();
            for x in 0..21 {
                let (mut num, mut den) = (0.0, 0.0);
                for y in 0..21 {
                    let w = kernel.eval(g.domain_distance(x, y) / delta);
                    num += w * f[y];
                    den += w;
                }
                assert!((out.field.values[x].coords[0] - num / den).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn retraction_branches() {
        let m = Manifold::<f64>::sphere(2);
        let p = m.origin();
        let r = 0.4;
        assert_eq!(retract_into_ball(&m, &p, r, &p).unwrap(), p);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let q = m.random_point_at_distance(&p, 1.5 * r, &mut rng);
        let pq = retract_into_ball(&m, &p, r, &q).unwrap();
        assert!((m.dist(&p, &pq) - 0.5 * r).abs() < 1e-12);
        // same radial geodesic: direction of log is preserved
        let (a, b) = (m.log(&p, &q).unwrap(), m.log(&p, &pq).unwrap());
        let cos = m.inner(&p, &a, &b) / (m.tangent_norm(&p, &a) * m.tangent_norm(&p, &b));
        assert!((cos - 1.0).abs() < 1e-12);
        let far = m.random_point_at_distance(&p, 2.0 * r + 0.1, &mut rng);
        assert_eq!(retract_into_ball(&m, &p, r, &far).unwrap(), p);
        assert!(retract_into_ball(&m, &p, 2.0, &far).is_err());
    }

    #[test]
    fn homotopy_endpoints_and_midpoint() {
        let m = Manifold::<f64>::sphere(2);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let c = m.origin();
        let u = Field::new((0..6).map(|_| m.random_point_in_ball(&c, 0.7, &mut rng)).collect());
        let v = Field::new((0..6).map(|_| m.random_point_in_ball(&c, 0.7, &mut rng)).collect());
        assert_eq!(geodesic_homotopy(&m, &u, &v, 0.0).unwrap(), u);
        let one = geodesic_homotopy(&m, &u, &v, 1.0).unwrap();
        let mid = geodesic_homotopy(&m, &u, &v, 0.5).unwrap();
        for i in 0..6 {
            assert!(m.dist(&one.values[i], &v.values[i]) < 1e-10);
            let (a, b) = (m.dist(&u.values[i], &mid.values[i]), m.dist(&mid.values[i], &v.values[i]));
            assert!((a - b).abs() < 1e-10);
        }
    }
}
