//! Riemannian target spaces in a fixed ambient representation.
//!
//! Four model families are supported: flat space, round spheres of any
//! radius, hyperbolic space in the hyperboloid model, and symmetric positive
//! definite matrices with the affine-invariant metric. Points and tangent
//! vectors are plain ambient coordinate vectors.

mod comparison;

pub use comparison::{comparison, Comparison};

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{dot, norm, Real};

/// A point on the target, stored by its ambient coordinates.
///
/// SPD points store the `n x n` matrix row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point<T> {
    pub coords: Vec<T>,
}

impl<T: Real> Point<T> {
    pub fn new(coords: Vec<T>) -> Self {
        Self { coords }
    }
}

impl<T> From<Vec<T>> for Point<T> {
    fn from(coords: Vec<T>) -> Self {
        Self { coords }
    }
}

/// A tangent vector together with its base point.
#[derive(Clone, Debug, PartialEq)]
pub struct Tangent<T> {
    pub base: Point<T>,
    pub vec: Vec<T>,
}

impl<T: Real> Tangent<T> {
    pub fn new(base: Point<T>, vec: Vec<T>) -> Self {
        Self { base, vec }
    }

    pub fn zero(base: Point<T>) -> Self {
        let vec = vec![T::zero(); base.coords.len()];
        Self { base, vec }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ManifoldKind<T> {
    Euclidean { dim: usize },
    Sphere { dim: usize, radius: T },
    Hyperbolic { dim: usize },
    Spd { n: usize },
}

/// Target manifold together with its curvature bounds and injectivity radius.
#[derive(Clone, Debug, PartialEq)]
pub struct Manifold<T> {
    kind: ManifoldKind<T>,
    kappa_lo: T,
    kappa_hi: T,
    inj: T,
}

#[inline]
fn minkowski<T: Real>(a: &[T], b: &[T]) -> T {
    -a[0] * b[0] + dot(&a[1..], &b[1..])
}

/// `sinh(x) / x` without cancellation near zero.
#[inline]
fn sinhc<T: Real>(x: T) -> T {
    if x.abs() < T::lit(1e-4) {
        T::one() + x * x / T::lit(6.0)
    } else {
        x.sinh() / x
    }
}

/// `sin(x) / x` without cancellation near zero.
#[inline]
fn sinc<T: Real>(x: T) -> T {
    if x.abs() < T::lit(1e-4) {
        T::one() - x * x / T::lit(6.0)
    } else {
        x.sin() / x
    }
}

impl<T: Real> Manifold<T> {
    pub fn euclidean(dim: usize) -> Self {
        assert!(dim >= 1, "euclidean dimension must be positive");
        Self { kind: ManifoldKind::Euclidean { dim }, kappa_lo: T::zero(), kappa_hi: T::zero(), inj: T::infinity() }
    }

    /// Unit sphere `S^dim` embedded in `R^(dim+1)`.
    pub fn sphere(dim: usize) -> Self {
        Self::sphere_with_radius(dim, T::one())
    }

    pub fn sphere_with_radius(dim: usize, radius: T) -> Self {
        assert!(dim >= 1 && radius > T::zero());
        let kappa = T::one() / (radius * radius);
        Self { kind: ManifoldKind::Sphere { dim, radius }, kappa_lo: kappa, kappa_hi: kappa, inj: T::PI() * radius }
    }

    /// Hyperbolic space `H^dim` in the hyperboloid model of `R^(dim+1)`.
    pub fn hyperbolic(dim: usize) -> Self {
        assert!(dim >= 1);
        Self { kind: ManifoldKind::Hyperbolic { dim }, kappa_lo: -T::one(), kappa_hi: -T::one(), inj: T::infinity() }
    }

    /// `n x n` SPD matrices with the affine-invariant metric, `n` in {2, 3}.
    pub fn spd(n: usize) -> Result<Self> {
        if !(2..=3).contains(&n) {
            return Err(Error::InvalidParameter(format!("spd size {n} not in {{2,3}}")));
        }
        Ok(Self { kind: ManifoldKind::Spd { n }, kappa_lo: T::lit(-0.5), kappa_hi: T::zero(), inj: T::infinity() })
    }

    pub fn kind(&self) -> ManifoldKind<T> {
        self.kind
    }

    pub fn kappa_lo(&self) -> T {
        self.kappa_lo
    }

    pub fn kappa_hi(&self) -> T {
        self.kappa_hi
    }

    /// Injectivity radius (`+inf` on Cartan-Hadamard models).
    pub fn inj(&self) -> T {
        self.inj
    }

    /// Non-positively curved target.
    pub fn is_npc(&self) -> bool {
        self.kappa_hi <= T::zero()
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            ManifoldKind::Euclidean { dim } => dim,
            ManifoldKind::Sphere { dim, .. } => dim,
            ManifoldKind::Hyperbolic { dim } => dim,
            ManifoldKind::Spd { n } => n * (n + 1) / 2,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self.kind {
            ManifoldKind::Euclidean { dim } => dim,
            ManifoldKind::Sphere { dim, .. } => dim + 1,
            ManifoldKind::Hyperbolic { dim } => dim + 1,
            ManifoldKind::Spd { n } => n * n,
        }
    }

    /// Canonical base point: origin, north pole, hyperboloid apex or identity.
    pub fn origin(&self) -> Point<T> {
        let mut c = vec![T::zero(); self.ambient_dim()];
        match self.kind {
            ManifoldKind::Euclidean { .. } => {}
            ManifoldKind::Sphere { radius, .. } => c[0] = radius,
            ManifoldKind::Hyperbolic { .. } => c[0] = T::one(),
            ManifoldKind::Spd { n } => {
                for i in 0..n {
                    c[i * n + i] = T::one();
                }
            }
        }
        Point::new(c)
    }

    /// Convexity radius `R_kappa`: half of `min(inj, pi/sqrt(kappa))` when
    /// `kappa = kappa_hi > 0`, else `inj / 2`.
    pub fn convexity_radius(&self) -> T {
        let half = T::lit(0.5);
        if self.kappa_hi > T::zero() {
            half * self.inj.min(T::PI() / self.kappa_hi.sqrt())
        } else {
            half * self.inj
        }
    }

    /// Stronger radius `R*_kappa = min(inj/2, pi/(4 sqrt(kappa)))` for
    /// `kappa > 0`, `inj / 2` otherwise.
    pub fn strong_radius(&self) -> T {
        let half_inj = T::lit(0.5) * self.inj;
        if self.kappa_hi > T::zero() {
            half_inj.min(T::PI() / (T::lit(4.0) * self.kappa_hi.sqrt()))
        } else {
            half_inj
        }
    }

    fn check_len(&self, v: &[T], what: &str) -> Result<()> {
        if v.len() != self.ambient_dim() {
            return Err(Error::Domain(format!("{what} has {} coordinates, expected {}", v.len(), self.ambient_dim())));
        }
        Ok(())
    }

    /// Defining-constraint violation of `p` (0 for an exact point).
    pub fn point_residual(&self, p: &Point<T>) -> T {
        let x = &p.coords;
        if x.len() != self.ambient_dim() || x.iter().any(|v| !v.is_finite()) {
            return T::infinity();
        }
        match self.kind {
            ManifoldKind::Euclidean { .. } => T::zero(),
            ManifoldKind::Sphere { radius, .. } => (norm(x) - radius).abs() / radius,
            ManifoldKind::Hyperbolic { .. } => {
                if x[0] <= T::zero() {
                    return T::infinity();
                }
                (minkowski(x, x) + T::one()).abs() / dot(x, x).max(T::one())
            }
            ManifoldKind::Spd { n } => {
                let scale = x.iter().fold(T::zero(), |m, v| m.max(v.abs()));
                let mut asym = T::zero();
                for i in 0..n {
                    for j in (i + 1)..n {
                        asym = asym.max((x[i * n + j] - x[j * n + i]).abs());
                    }
                }
                let (vals, _) = linalg::sym_eigen(x, n);
                if vals.iter().any(|&l| l <= T::zero()) {
                    return T::infinity();
                }
                asym / scale
            }
        }
    }

    /// Distance of the ambient vector `v` from the tangent space at `p`.
    pub fn tangent_residual(&self, p: &Point<T>, v: &[T]) -> T {
        if v.len() != self.ambient_dim() {
            return T::infinity();
        }
        let scale = norm(&p.coords).max(T::one()) * norm(v).max(T::one());
        match self.kind {
            ManifoldKind::Euclidean { .. } => T::zero(),
            ManifoldKind::Sphere { .. } => dot(&p.coords, v).abs() / scale,
            ManifoldKind::Hyperbolic { .. } => minkowski(&p.coords, v).abs() / scale,
            ManifoldKind::Spd { n } => {
                let mut asym = T::zero();
                for i in 0..n {
                    for j in (i + 1)..n {
                        asym = asym.max((v[i * n + j] - v[j * n + i]).abs());
                    }
                }
                asym / norm(v).max(T::one())
            }
        }
    }

    pub fn check_point(&self, p: &Point<T>) -> Result<()> {
        let r = self.point_residual(p);
        if r <= T::domain_tol() {
            Ok(())
        } else {
            Err(Error::Domain(format!("point off manifold (residual {r})")))
        }
    }

    fn check_tangent(&self, p: &Point<T>, v: &[T]) -> Result<()> {
        self.check_len(v, "tangent")?;
        let r = self.tangent_residual(p, v);
        if r <= T::domain_tol() {
            Ok(())
        } else {
            Err(Error::Domain(format!("vector not tangent (residual {r})")))
        }
    }

    /// Pulls a point back onto the constraint set after rounding drift.
    pub fn renormalize(&self, p: &mut Point<T>) {
        let x = &mut p.coords;
        match self.kind {
            ManifoldKind::Euclidean { .. } => {}
            ManifoldKind::Sphere { radius, .. } => {
                let s = radius / norm(x);
                x.iter_mut().for_each(|v| *v = *v * s);
            }
            ManifoldKind::Hyperbolic { .. } => {
                x[0] = (T::one() + dot(&x[1..], &x[1..])).sqrt();
            }
            ManifoldKind::Spd { n } => linalg::symmetrize(x, n),
        }
    }

    /// Geodesic exponential `exp_p(v)`.
    pub fn exp(&self, p: &Point<T>, v: &[T]) -> Result<Point<T>> {
        self.check_len(&p.coords, "point")?;
        self.check_tangent(p, v)?;
        Ok(self.exp_unchecked(p, v))
    }

    pub(crate) fn exp_unchecked(&self, p: &Point<T>, v: &[T]) -> Point<T> {
        let x = &p.coords;
        let mut q = match self.kind {
            ManifoldKind::Euclidean { .. } => Point::new(x.iter().zip(v).map(|(&a, &b)| a + b).collect()),
            ManifoldKind::Sphere { radius, .. } => {
                let nv = norm(v);
                if nv == T::zero() {
                    return p.clone();
                }
                let th = nv / radius;
                let (c, s) = (th.cos(), sinc(th));
                Point::new(x.iter().zip(v).map(|(&a, &b)| c * a + s * b).collect())
            }
            ManifoldKind::Hyperbolic { .. } => {
                let nv = minkowski(v, v).max(T::zero()).sqrt();
                if nv == T::zero() {
                    return p.clone();
                }
                let (c, s) = (nv.cosh(), sinhc(nv));
                Point::new(x.iter().zip(v).map(|(&a, &b)| c * a + s * b).collect())
            }
            ManifoldKind::Spd { n } => {
                let sq = linalg::sym_fn(x, n, |l| l.sqrt());
                let isq = linalg::sym_fn(x, n, |l| T::one() / l.sqrt());
                let w = linalg::sandwich(&isq, v, n);
                let e = linalg::sym_fn(&w, n, |l| l.exp());
                Point::new(linalg::sandwich(&sq, &e, n))
            }
        };
        self.renormalize(&mut q);
        q
    }

    /// Geodesic logarithm `exp_p^{-1}(q)`, defined strictly inside the cut locus.
    pub fn log(&self, p: &Point<T>, q: &Point<T>) -> Result<Vec<T>> {
        self.check_len(&p.coords, "point")?;
        self.check_len(&q.coords, "point")?;
        let (x, y) = (&p.coords, &q.coords);
        let v = match self.kind {
            ManifoldKind::Euclidean { .. } => y.iter().zip(x).map(|(&b, &a)| b - a).collect(),
            ManifoldKind::Sphere { radius, .. } => {
                let d = self.dist(p, q);
                let cut_tol = T::domain_tol() * self.inj;
                if d >= self.inj - cut_tol {
                    return Err(Error::CutLocusReached { dist: d.f64(), inj: self.inj.f64() });
                }
                let c = dot(x, y) / (radius * radius);
                let w: Vec<T> = y.iter().zip(x).map(|(&b, &a)| b - c * a).collect();
                let nw = norm(&w);
                if nw == T::zero() {
                    return Ok(vec![T::zero(); x.len()]);
                }
                let s = d / nw;
                let mut v: Vec<T> = w.into_iter().map(|t| t * s).collect();
                self.project_in_place(p, &mut v);
                v
            }
            ManifoldKind::Hyperbolic { .. } => {
                let delta: Vec<T> = y.iter().zip(x).map(|(&b, &a)| b - a).collect();
                let m = minkowski(&delta, &delta).max(T::zero());
                let d = T::lit(2.0) * (m.sqrt() * T::lit(0.5)).asinh();
                if d == T::zero() {
                    return Ok(vec![T::zero(); x.len()]);
                }
                let half_m = m * T::lit(0.5);
                let s = T::one() / sinhc(d);
                let mut v: Vec<T> = delta.iter().zip(x).map(|(&dl, &a)| s * (dl - half_m * a)).collect();
                self.project_in_place(p, &mut v);
                v
            }
            ManifoldKind::Spd { n } => {
                let sq = linalg::sym_fn(x, n, |l| l.sqrt());
                let isq = linalg::sym_fn(x, n, |l| T::one() / l.sqrt());
                let w = linalg::sandwich(&isq, y, n);
                let l = linalg::sym_fn(&w, n, |e| e.ln());
                linalg::sandwich(&sq, &l, n)
            }
        };
        Ok(v)
    }

    /// Geodesic distance.
    pub fn dist(&self, p: &Point<T>, q: &Point<T>) -> T {
        let (x, y) = (&p.coords, &q.coords);
        match self.kind {
            ManifoldKind::Euclidean { .. } => x.iter().zip(y).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt(),
            ManifoldKind::Sphere { radius, .. } => {
                let a = x.iter().zip(y).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt();
                let b = x.iter().zip(y).map(|(&a, &b)| (a + b) * (a + b)).sum::<T>().sqrt();
                radius * T::lit(2.0) * a.atan2(b)
            }
            ManifoldKind::Hyperbolic { .. } => {
                let delta: Vec<T> = y.iter().zip(x).map(|(&b, &a)| b - a).collect();
                let m = minkowski(&delta, &delta).max(T::zero());
                T::lit(2.0) * (m.sqrt() * T::lit(0.5)).asinh()
            }
            ManifoldKind::Spd { n } => {
                let isq = linalg::sym_fn(x, n, |l| T::one() / l.sqrt());
                let w = linalg::sandwich(&isq, y, n);
                let (vals, _) = linalg::sym_eigen(&w, n);
                vals.iter().map(|&l| l.ln() * l.ln()).sum::<T>().sqrt()
            }
        }
    }

    /// Riemannian metric `h_p(v, w)`.
    pub fn inner(&self, p: &Point<T>, v: &[T], w: &[T]) -> T {
        match self.kind {
            ManifoldKind::Euclidean { .. } | ManifoldKind::Sphere { .. } => dot(v, w),
            ManifoldKind::Hyperbolic { .. } => minkowski(v, w),
            ManifoldKind::Spd { .. } => dot(&self.lower(p, v), w),
        }
    }

    /// Inner product of two based tangents; they must share a base point.
    pub fn inner_tangents(&self, a: &Tangent<T>, b: &Tangent<T>) -> Result<T> {
        if a.base != b.base {
            return Err(Error::Domain("tangent vectors at different base points".into()));
        }
        Ok(self.inner(&a.base, &a.vec, &b.vec))
    }

    pub fn tangent_norm(&self, p: &Point<T>, v: &[T]) -> T {
        self.inner(p, v, v).max(T::zero()).sqrt()
    }

    /// Ambient covector `c` with `c . w = h_p(v, w)` for tangent `w`.
    pub fn lower(&self, p: &Point<T>, v: &[T]) -> Vec<T> {
        match self.kind {
            ManifoldKind::Euclidean { .. } | ManifoldKind::Sphere { .. } => v.to_vec(),
            ManifoldKind::Hyperbolic { .. } => {
                let mut c = v.to_vec();
                c[0] = -c[0];
                c
            }
            ManifoldKind::Spd { n } => {
                let inv = linalg::sym_fn(&p.coords, n, |l| T::one() / l);
                linalg::sandwich(&inv, v, n)
            }
        }
    }

    /// Metric-orthogonal projection of an ambient vector onto `T_p`.
    pub fn project_tangent(&self, p: &Point<T>, x: &[T]) -> Vec<T> {
        let mut v = x.to_vec();
        self.project_in_place(p, &mut v);
        v
    }

    /// Metric-orthonormal basis of `T_p` (Gram-Schmidt on projected ambient axes).
    pub fn tangent_basis(&self, p: &Point<T>) -> Vec<Vec<T>> {
        let mut basis: Vec<Vec<T>> = Vec::with_capacity(self.dim());
        for k in 0..self.ambient_dim() {
            let mut e = vec![T::zero(); self.ambient_dim()];
            e[k] = T::one();
            let mut v = self.project_tangent(p, &e);
            // two passes keep the basis orthonormal to rounding
            for _ in 0..2 {
                for b in &basis {
                    let c = self.inner(p, &v, b);
                    v.iter_mut().zip(b).for_each(|(x, &y)| *x = *x - c * y);
                }
            }
            let nv = self.tangent_norm(p, &v);
            if nv > T::lit(1e-6) {
                basis.push(v.into_iter().map(|x| x / nv).collect());
            }
            if basis.len() == self.dim() {
                break;
            }
        }
        basis
    }

    pub(crate) fn project_in_place(&self, p: &Point<T>, v: &mut [T]) {
        let x = &p.coords;
        match self.kind {
            ManifoldKind::Euclidean { .. } => {}
            ManifoldKind::Sphere { radius, .. } => {
                let c = dot(x, v) / (radius * radius);
                v.iter_mut().zip(x).for_each(|(t, &a)| *t = *t - c * a);
            }
            ManifoldKind::Hyperbolic { .. } => {
                let c = minkowski(x, v);
                v.iter_mut().zip(x).for_each(|(t, &a)| *t = *t + c * a);
            }
            ManifoldKind::Spd { n } => linalg::symmetrize(v, n),
        }
    }

    /// Random tangent at `p` with unit metric norm.
    pub fn random_unit_tangent<R: Rng + ?Sized>(&self, p: &Point<T>, rng: &mut R) -> Vec<T> {
        loop {
            let x: Vec<T> = (0..self.ambient_dim()).map(|_| T::lit(rng.sample::<f64, _>(StandardNormal))).collect();
            let v = self.project_tangent(p, &x);
            let nv = self.tangent_norm(p, &v);
            if nv > T::lit(1e-6) {
                return v.into_iter().map(|t| t / nv).collect();
            }
        }
    }

    /// Random point at geodesic distance `radius * U` from `center`, `U ~ U(0,1)`.
    pub fn random_point_in_ball<R: Rng + ?Sized>(&self, center: &Point<T>, radius: T, rng: &mut R) -> Point<T> {
        let r = radius * T::lit(rng.random::<f64>());
        self.random_point_at_distance(center, r, rng)
    }

    pub fn random_point_at_distance<R: Rng + ?Sized>(&self, center: &Point<T>, r: T, rng: &mut R) -> Point<T> {
        let u = self.random_unit_tangent(center, rng);
        let v: Vec<T> = u.into_iter().map(|t| t * r).collect();
        self.exp_unchecked(center, &v)
    }
}

impl<T: Real> fmt::Display for Manifold<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ManifoldKind::Euclidean { dim } => write!(f, "euclidean:{dim}"),
            ManifoldKind::Sphere { dim, radius } if radius == T::one() => write!(f, "sphere:{dim}"),
            ManifoldKind::Sphere { dim, radius } => write!(f, "sphere:{dim}:r={radius}"),
            ManifoldKind::Hyperbolic { dim } => write!(f, "hyperbolic:{dim}"),
            ManifoldKind::Spd { n } => write!(f, "spd:{n}"),
        }
    }
}

impl<T: Real> FromStr for Manifold<T> {
    type Err = Error;

    /// Parses `euclidean:3`, `sphere:2`, `sphere:2:r=2`, `hyperbolic:2`, `spd:2`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("invalid manifold spec '{s}'"));
        let mut parts = s.trim().split(':');
        let name = parts.next().ok_or_else(bad)?;
        let dim: usize = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        if dim == 0 {
            return Err(bad());
        }
        let extra = parts.next();
        if parts.next().is_some() {
            return Err(bad());
        }
        let m = match (name, extra) {
            ("euclidean", None) => Self::euclidean(dim),
            ("sphere", None) => Self::sphere(dim),
            ("sphere", Some(opt)) => {
                let r: f64 = opt.strip_prefix("r=").ok_or_else(bad)?.parse().map_err(|_| bad())?;
                if !(r > 0.0 && r.is_finite()) {
                    return Err(bad());
                }
                Self::sphere_with_radius(dim, T::lit(r))
            }
            ("hyperbolic", None) => Self::hyperbolic(dim),
            ("spd", None) => Self::spd(dim).map_err(|_| bad())?,
            _ => return Err(bad()),
        };
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn sphere_quarter_circle() {
        let m = Manifold::<f64>::sphere(2);
        let p = Point::new(vec![1.0, 0.0, 0.0]);
        let q = m.exp(&p, &[0.0, PI / 2.0, 0.0]).unwrap();
        assert!(close(&q.coords, &[0.0, 1.0, 0.0], 1e-15));
        let v = m.log(&p, &q).unwrap();
        assert!(close(&v, &[0.0, PI / 2.0, 0.0], 1e-14));
        assert!((m.dist(&p, &q) - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_tangent_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for m in all_models() {
            let p = m.random_point_in_ball(&m.origin(), 1.0, &mut rng);
            let q = m.exp(&p, &vec![0.0; m.ambient_dim()]).unwrap();
            assert!(close(&q.coords, &p.coords, 1e-14), "{m}");
            let v = m.log(&p, &p).unwrap();
            assert!(v.iter().all(|t| t.abs() < 1e-14), "{m}");
        }
    }

    #[test]
    fn spd_exp_at_identity_is_matrix_exponential() {
        let m = Manifold::<f64>::spd(2).unwrap();
        let (a, b) = (0.3, -1.2);
        let q = m.exp(&m.origin(), &[a, 0.0, 0.0, b]).unwrap();
        assert!(close(&q.coords, &[a.exp(), 0.0, 0.0, b.exp()], 1e-14));
        // power-series cross-check on a non-diagonal tangent
        let v = [0.2, 0.5, 0.5, -0.4];
        let q = m.exp(&m.origin(), &v).unwrap();
        let mut term = vec![1.0, 0.0, 0.0, 1.0];
        let mut sum = term.clone();
        for k in 1..40 {
            term = linalg::matmul(&term, &v, 2).iter().map(|t| t / k as f64).collect();
            for (s, t) in sum.iter_mut().zip(&term) {
                *s += t;
            }
        }
        assert!(close(&q.coords, &sum, 1e-13));
    }

    #[test]
    fn sphere_antipode_is_cut_locus() {
        let m = Manifold::<f64>::sphere(2);
        let p = Point::new(vec![1.0, 0.0, 0.0]);
        let q = Point::new(vec![-1.0, 0.0, 0.0]);
        assert!(matches!(m.log(&p, &q), Err(Error::CutLocusReached { .. })));
    }

    #[test]
    fn exp_rejects_normal_vector() {
        let m = Manifold::<f64>::sphere(2);
        let p = Point::new(vec![1.0, 0.0, 0.0]);
        assert!(matches!(m.exp(&p, &[0.5, 0.0, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn hyperbolic_distance_matches_arccosh_and_curve_length() {
        let m = Manifold::<f64>::hyperbolic(2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let p = m.random_point_in_ball(&m.origin(), 2.0, &mut rng);
            let q = m.random_point_in_ball(&m.origin(), 2.0, &mut rng);
            let d = m.dist(&p, &q);
            let ac = (-minkowski(&p.coords, &q.coords)).acosh();
            assert!((d - ac).abs() < 1e-7 * (1.0 + d));
            // integrate the Minkowski speed of the geodesic t -> exp_p(t log_p q)
            let v = m.log(&p, &q).unwrap();
            let steps = 4000;
            let mut len = 0.0;
            let mut prev = p.clone();
            for k in 1..=steps {
                let t = k as f64 / steps as f64;
                let cur = m.exp(&p, &v.iter().map(|x| x * t).collect::<Vec<_>>()).unwrap();
                let dlt: Vec<f64> = cur.coords.iter().zip(&prev.coords).map(|(a, b)| a - b).collect();
                len += minkowski(&dlt, &dlt).max(0.0).sqrt();
                prev = cur;
            }
            assert!((len - d).abs() < 1e-6 * (1.0 + d), "len {len} vs {d}");
        }
    }

    #[test]
    fn spd_inner_is_symmetric() {
        let m = Manifold::<f64>::spd(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let p = m.random_point_in_ball(&m.origin(), 1.5, &mut rng);
            let v = m.random_unit_tangent(&p, &mut rng);
            let w = m.random_unit_tangent(&p, &mut rng);
            assert!((m.inner(&p, &v, &w) - m.inner(&p, &w, &v)).abs() < 1e-12);
            assert!(m.inner(&p, &v, &v) > 0.0);
        }
    }

    #[test]
    fn projection_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for m in all_models() {
            let p = m.random_point_in_ball(&m.origin(), 1.0, &mut rng);
            let x: Vec<f64> = (0..m.ambient_dim()).map(|i| (i as f64 * 1.3).sin() + 0.2).collect();
            let once = m.project_tangent(&p, &x);
            let twice = m.project_tangent(&p, &once);
            assert!(close(&once, &twice, 1e-14), "{m}");
            assert!(m.tangent_residual(&p, &once) < 1e-12, "{m}");
        }
        let s = Manifold::<f64>::sphere(2);
        let p = s.origin();
        let v = s.project_tangent(&p, &[3.0, 0.0, 0.0]);
        assert!(v.iter().all(|t| t.abs() < 1e-15));
        let e = Manifold::<f64>::euclidean(3);
        assert_eq!(e.project_tangent(&e.origin(), &[1.0, 2.0, 3.0]), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn radii_closed_forms() {
        let s = Manifold::<f64>::sphere(2);
        assert_eq!(s.convexity_radius(), PI / 2.0);
        assert_eq!(s.strong_radius(), PI / 4.0);
        let s2 = Manifold::<f64>::sphere_with_radius(2, 2.0);
        assert_eq!(s2.convexity_radius(), PI);
        assert_eq!(s2.strong_radius(), PI / 2.0);
        for m in [Manifold::<f64>::hyperbolic(2), Manifold::euclidean(3), Manifold::spd(2).unwrap()] {
            assert_eq!(m.convexity_radius(), f64::INFINITY);
            assert_eq!(m.strong_radius(), f64::INFINITY);
        }
    }

    #[test]
    fn parse_roundtrip() {
        for s in ["euclidean:3", "sphere:2", "sphere:2:r=2", "hyperbolic:2", "spd:2", "spd:3"] {
            let m: Manifold<f64> = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
        }
        for s in ["", "sphere", "sphere:0", "spd:4", "torus:2", "sphere:2:r=-1", "euclidean:2:x"] {
            assert!(s.parse::<Manifold<f64>>().is_err(), "{s}");
        }
    }

    #[test]
    fn works_in_single_precision() {
        let m = Manifold::<f32>::sphere(2);
        let p = m.origin();
        let q = m.exp(&p, &[0.0, 0.3, 0.4]).unwrap();
        assert!((m.dist(&p, &q) - 0.5).abs() < 1e-6);
    }

    pub(crate) fn all_models() -> Vec<Manifold<f64>> {
        vec![
            Manifold::euclidean(3),
            Manifold::sphere(2),
            Manifold::sphere_with_radius(2, 2.0),
            Manifold::hyperbolic(2),
            Manifold::spd(2).unwrap(),
            Manifold::spd(3).unwrap(),
        ]
    }
}
