//! Discrete ROF-type energies for grid maps into a target manifold.
//!
//! For a field `u` with data `f` the regularized energy is
//!
//! ```text
//! E(u) = sum_i w_i sqrt(|du|_i^2 + eps^2)          (tv)
//!      + lambda/2 sum_i w_i d^2(u_i, f_i)           (fidelity)
//!      + sigma/2  sum_i w_i |du|_i^2                (dirichlet)
//! ```
//!
//! where `w_i` is the node quadrature weight and `|du|_i^2` sums
//! `(d(u_i, u_j) / len(e))^2` over the forward edges `e = (i, j)` owned by
//! node `i`. Boundary nodes simply own fewer edges, which is the discrete
//! Neumann condition. At `eps = sigma = 0` this is the plain ROF energy.

mod ellipticity;

pub use ellipticity::{
    check_hypotheses, coefficients, fidelity_force_slack, quadratic_form, Coefficients, HypothesisReport,
    HypothesisSample, RhoBounds,
};

use serde::{Deserialize, Serialize};

use crate::domain::{check_len, Field, Grid};
use crate::error::{Error, Result};
use crate::manifold::{Manifold, Tangent};
use crate::scalar::Real;

/// Weights of the energy terms and the mollification radius of the data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams<T> {
    pub lambda: T,
    pub sigma: T,
    pub eps: T,
    /// Domain radius used to mollify `f` (0 disables mollification).
    #[serde(default)]
    pub delta: T,
}

impl<T: Real> EnergyParams<T> {
    pub fn new(lambda: T, sigma: T, eps: T) -> Self {
        Self { lambda, sigma, eps, delta: T::zero() }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda", self.lambda), ("sigma", self.sigma), ("eps", self.eps), ("delta", self.delta)] {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

/// The three energy terms and their sum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown<T> {
    pub tv: T,
    pub fidelity: T,
    pub dirichlet: T,
    pub total: T,
}

/// Edge distances and node densities shared by energy and gradient.
struct Densities<T> {
    edge_dist: Vec<T>,
    node_density: Vec<T>,
    fid_dist: Vec<T>,
}

fn densities<T: Real>(m: &Manifold<T>, grid: &Grid<T>, u: &Field<T>, f: &Field<T>) -> Result<Densities<T>> {
    check_len(u, grid)?;
    check_len(f, grid)?;
    let inj = m.inj();
    let guard = |d: T| -> Result<T> {
        if inj.is_finite() && d >= inj * (T::one() - T::domain_tol()) {
            Err(Error::CutLocusReached { dist: d.f64(), inj: inj.f64() })
        } else {
            Ok(d)
        }
    };
    let mut node_density = vec![T::zero(); grid.len()];
    let mut edge_dist = Vec::with_capacity(grid.edges().len());
    for e in grid.edges() {
        let d = guard(m.dist(&u.values[e.a], &u.values[e.b]))?;
        let r = d / e.length;
        node_density[e.a] = node_density[e.a] + r * r;
        edge_dist.push(d);
    }
    let fid_dist = u.values.iter().zip(&f.values).map(|(a, b)| guard(m.dist(a, b))).collect::<Result<Vec<_>>>()?;
    Ok(Densities { edge_dist, node_density, fid_dist })
}

fn breakdown<T: Real>(grid: &Grid<T>, dens: &Densities<T>, params: &EnergyParams<T>) -> EnergyBreakdown<T> {
    let half = T::lit(0.5);
    let eps2 = params.eps * params.eps;
    let (mut tv, mut fid, mut dir) = (T::zero(), T::zero(), T::zero());
    for (i, &w) in grid.area_weights().iter().enumerate() {
        let s = dens.node_density[i];
        tv = tv + w * (s + eps2).sqrt();
        fid = fid + w * dens.fid_dist[i] * dens.fid_dist[i];
        dir = dir + w * s;
    }
    let fidelity = half * params.lambda * fid;
    let dirichlet = half * params.sigma * dir;
    EnergyBreakdown { tv, fidelity, dirichlet, total: tv + fidelity + dirichlet }
}

/// Evaluates the regularized energy. Accepts `eps = 0`.
pub fn energy<T: Real>(
    m: &Manifold<T>,
    grid: &Grid<T>,
    u: &Field<T>,
    f: &Field<T>,
    params: &EnergyParams<T>,
) -> Result<EnergyBreakdown<T>> {
    params.validate()?;
    let dens = densities(m, grid, u, f)?;
    Ok(breakdown(grid, &dens, params))
}

/// Energy, gradient and per-edge diffusivities at one configuration.
#[derive(Clone, Debug)]
pub(crate) struct Assembly<T> {
    pub energy: EnergyBreakdown<T>,
    /// Riemannian gradient per node (ambient coordinates).
    pub grad: Vec<Vec<T>>,
    /// `w_a / len^2 * (1/sqrt(|du|_a^2 + eps^2) + sigma)` per edge.
    pub edge_coeff: Vec<T>,
    /// `sqrt(|du|_i^2 + eps^2)` per node.
    pub node_psi: Vec<T>,
    /// `log_{u_a} u_b` per edge.
    pub edge_log: Vec<Vec<T>>,
}

pub(crate) fn assemble<T: Real>(
    m: &Manifold<T>,
    grid: &Grid<T>,
    u: &Field<T>,
    f: &Field<T>,
    params: &EnergyParams<T>,
) -> Result<Assembly<T>> {
    params.validate()?;
    if !(params.eps > T::zero()) {
        return Err(Error::RequiresPositiveEps);
    }
    let dens = densities(m, grid, u, f)?;
    let energy = breakdown(grid, &dens, params);
    let eps2 = params.eps * params.eps;
    let weights = grid.area_weights();
    let mut grad = vec![vec![T::zero(); m.ambient_dim()]; grid.len()];
    let node_psi: Vec<T> = dens.node_density.iter().map(|&s| (s + eps2).sqrt()).collect();
    let mut edge_coeff = Vec::with_capacity(grid.edges().len());
    let mut edge_log = Vec::with_capacity(grid.edges().len());
    for (k, e) in grid.edges().iter().enumerate() {
        let z = T::one() / node_psi[e.a] + params.sigma;
        let c = weights[e.a] / (e.length * e.length) * z;
        edge_coeff.push(c);
        if dens.edge_dist[k] == T::zero() {
            edge_log.push(vec![T::zero(); m.ambient_dim()]);
            continue;
        }
        let (ua, ub) = (&u.values[e.a], &u.values[e.b]);
        let lab = m.log(ua, ub)?;
        let lba = m.log(ub, ua)?;
        grad[e.a].iter_mut().zip(&lab).for_each(|(g, &v)| *g = *g - c * v);
        grad[e.b].iter_mut().zip(&lba).for_each(|(g, &v)| *g = *g - c * v);
        edge_log.push(lab);
    }
    if params.lambda > T::zero() {
        for (i, g) in grad.iter_mut().enumerate() {
            if dens.fid_dist[i] == T::zero() {
                continue;
            }
            let c = params.lambda * weights[i];
            let l = m.log(&u.values[i], &f.values[i])?;
            g.iter_mut().zip(&l).for_each(|(gi, &v)| *gi = *gi - c * v);
        }
    }
    Ok(Assembly { energy, grad, edge_coeff, node_psi, edge_log })
}

/// Riemannian gradient of the energy with respect to every node (`eps > 0`).
pub fn riemannian_gradient<T: Real>(
    m: &Manifold<T>,
    grid: &Grid<T>,
    u: &Field<T>,
    f: &Field<T>,
    params: &EnergyParams<T>,
) -> Result<Vec<Tangent<T>>> {
    let asm = assemble(m, grid, u, f, params)?;
    Ok(u.values.iter().cloned().zip(asm.grad).map(|(p, g)| Tangent::new(p, g)).collect())
}

/// Discrete Euler-Lagrange residual `div(Z(du)) + lambda log_u f` per node,
/// i.e. minus the gradient divided by the node weight, and its max norm.
pub fn el_residual<T: Real>(
    m: &Manifold<T>,
    grid: &Grid<T>,
    u: &Field<T>,
    f: &Field<T>,
    params: &EnergyParams<T>,
) -> Result<(Vec<Tangent<T>>, T)> {
    let asm = assemble(m, grid, u, f, params)?;
    Ok(residual_from_gradient(m, grid, u, &asm.grad))
}

pub(crate) fn residual_from_gradient<T: Real>(
    m: &Manifold<T>,
    grid: &Grid<T>,
    u: &Field<T>,
    grad: &[Vec<T>],
) -> (Vec<Tangent<T>>, T) {
    let mut worst = T::zero();
    let res = u
        .values
        .iter()
        .zip(grad)
        .zip(grid.area_weights())
        .map(|((p, g), &w)| {
            let r: Vec<T> = g.iter().map(|&x| -x / w).collect();
            worst = worst.max(m.tangent_norm(p, &r));
            Tangent::new(p.clone(), r)
        })
        .collect();
    (res, worst)
}

/// Max nodewise metric norm of a gradient field.
pub(crate) fn max_norm<T: Real>(m: &Manifold<T>, u: &Field<T>, grad: &[Vec<T>]) -> T {
    u.values.iter().zip(grad).fold(T::zero(), |acc, (p, g)| acc.max(m.tangent_norm(p, g)))
}
