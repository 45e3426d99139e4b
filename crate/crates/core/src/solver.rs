//! Riemannian descent for the regularized energy and the `eps / sigma / delta`
//! continuation.
//!
//! Search directions are preconditioned by the lagged-diffusivity matrix
//! `H = sum_e c_e (e_a - e_b)(e_a - e_b)^T + diag(lambda w)`, assembled from
//! the current edge coefficients and solved per ambient component with a
//! banded Cholesky factor. `-H^{-1}` applied to the lowered gradient and
//! projected back to the tangent spaces is always a descent direction; steps
//! are taken along `exp` with Armijo backtracking.

use serde::{Deserialize, Serialize};

use crate::domain::{check_len, lipschitz_constant, Field, Grid};
use crate::energy::{assemble, max_norm, residual_from_gradient, Assembly, EnergyBreakdown, EnergyParams};
use crate::error::{Error, Result};
use crate::geometry::{barycenter, mollify, retract_field, Kernel, WeightedPoints};
use crate::linalg::BandedSpd;
use crate::manifold::{Manifold, Point};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct SolveConfig<T> {
    pub max_iter: usize,
    /// Stop once the max nodewise Riemannian gradient norm is below this.
    pub grad_tol: T,
    pub armijo_c: T,
    pub step_init: T,
    pub step_shrink: T,
    pub seed: u64,
    /// Center for range tracking; the barycenter of `f` when absent.
    pub center: Option<Point<T>>,
    /// Mollifier kernel used when `delta > 0`.
    pub kernel: Kernel,
}

impl<T: Real> Default for SolveConfig<T> {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            grad_tol: T::lit(1e-9),
            armijo_c: T::lit(1e-4),
            step_init: T::one(),
            step_shrink: T::lit(0.5),
            seed: 0,
            center: None,
            kernel: Kernel::Bump,
        }
    }
}

impl<T: Real> SolveConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: T| v > T::zero() && v < T::one();
        if !unit(self.armijo_c) {
            return Err(Error::InvalidParameter(format!("armijo_c = {} must lie in (0, 1)", self.armijo_c)));
        }
        if !unit(self.step_shrink) {
            return Err(Error::InvalidParameter(format!("step_shrink = {} must lie in (0, 1)", self.step_shrink)));
        }
        if !(self.grad_tol > T::zero()) {
            return Err(Error::InvalidParameter("grad_tol must be > 0".into()));
        }
        if !(self.step_init > T::zero()) || !self.step_init.is_finite() {
            return Err(Error::InvalidParameter("step_init must be finite and > 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveFlags {
    pub converged: bool,
    pub max_iter: bool,
    pub cut_locus_guard_triggered: bool,
    /// Line search could not decrease the energy further before `grad_tol`.
    pub stalled: bool,
    /// Data radius lies in `[strong_radius, convexity_radius)`.
    pub outside_strong_radius: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport<T> {
    pub iterations: usize,
    /// Energy at the start and after every accepted step.
    pub energy_trace: Vec<EnergyBreakdown<T>>,
    pub final_grad_norm: T,
    pub final_residual_norm: T,
    /// Radius of the smallest ball around the center holding the data.
    pub data_radius: T,
    /// Max over iterates and nodes of `dist(center, u)`.
    pub range_max_dist: T,
    pub lipschitz_of_u: T,
    /// `Lip(f_delta) / Lip(f)` for the stage data (1 without mollification).
    pub mollifier_lipschitz_ratio: T,
    pub flags: SolveFlags,
}

impl<T: Real> SolveReport<T> {
    pub fn final_energy(&self) -> EnergyBreakdown<T> {
        *self.energy_trace.last().expect("trace holds the initial energy")
    }
}

/// One continuation stage.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage<T> {
    pub eps: T,
    #[serde(default)]
    pub sigma: T,
    #[serde(default)]
    pub delta: T,
}

/// Geometric schedule `eps_k = eps_0 * factor^k`; `sigma_k = eps_k` when
/// `tie_sigma`, else 0; `delta_0 = delta0` and 0 afterwards.
pub fn geometric_schedule<T: Real>(eps0: T, factor: T, stages: usize, tie_sigma: bool, delta0: T) -> Vec<Stage<T>> {
    (0..stages)
        .map(|k| {
            let eps = eps0 * factor.powi(k as i32);
            Stage {
                eps,
                sigma: if tie_sigma { eps } else { T::zero() },
                delta: if k == 0 { delta0 } else { T::zero() },
            }
        })
        .collect()
}

/// Six stages with `eps` from `1e-1` to `1e-4` (factor `10^{-3/5}`, about ¼),
/// `delta_0` equal to two grid spacings.
pub fn default_schedule<T: Real>(grid: &Grid<T>, tie_sigma: bool) -> Vec<Stage<T>> {
    let factor = T::lit(10f64.powf(-0.6));
    let mut s = geometric_schedule(T::lit(0.1), factor, 6, tie_sigma, T::lit(2.0) * grid.spacing());
    // pin the endpoint exactly
    let last = s.len() - 1;
    s[last].eps = T::lit(1e-4);
    if tie_sigma {
        s[last].sigma = s[last].eps;
    }
    s
}

pub fn validate_schedule<T: Real>(schedule: &[Stage<T>]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::InvalidParameter("empty continuation schedule".into()));
    }
    for (k, s) in schedule.iter().enumerate() {
        if !(s.eps > T::zero()) || !s.eps.is_finite() {
            return Err(Error::RequiresPositiveEps);
        }
        if !(s.sigma >= T::zero() && s.delta >= T::zero()) || !s.sigma.is_finite() || !s.delta.is_finite() {
            return Err(Error::InvalidParameter(format!("stage {k}: sigma and delta must be finite and >= 0")));
        }
        if k > 0 {
            let p = &schedule[k - 1];
            if s.eps > p.eps || s.sigma > p.sigma || s.delta > p.delta {
                return Err(Error::InvalidParameter(format!("schedule must be nonincreasing (stage {k})")));
            }
        }
    }
    Ok(())
}

/// Center and data radius; fails when the data does not fit in a convex ball.
fn range_ball<T: Real>(m: &Manifold<T>, f: &Field<T>, center: Option<&Point<T>>) -> Result<(Point<T>, T)> {
    let c = match center {
        Some(c) => {
            m.check_point(c)?;
            c.clone()
        }
        None => barycenter(m, &WeightedPoints::uniform(f.values.clone())?, T::lit(1e-10), 1000)?,
    };
    let r = f.values.iter().map(|q| m.dist(&c, q)).fold(T::zero(), T::max);
    if m.convexity_radius().is_finite() && r >= m.convexity_radius() {
        return Err(Error::RangeViolation(format!(
            "data radius {} not below convexity radius {}",
            r,
            m.convexity_radius()
        )));
    }
    Ok((c, r))
}

/// Node ordering, its inverse and the edges owned by each node.
struct Layout {
    order: Vec<usize>,
    pos: Vec<usize>,
    bw: usize,
    owned: Vec<Vec<usize>>,
}

impl Layout {
    fn new<T: Real>(grid: &Grid<T>) -> Self {
        let (order, bw) = grid.banded_order();
        let mut pos = vec![0usize; order.len()];
        for (slot, &node) in order.iter().enumerate() {
            pos[node] = slot;
        }
        let mut owned = vec![Vec::new(); grid.len()];
        for (k, e) in grid.edges().iter().enumerate() {
            owned[e.a].push(k);
        }
        Self { order, pos, bw, owned }
    }
}

/// Lagged-diffusivity direction `P(-H^{-1} lower(G))`, solved per ambient
/// component with the scalar weighted graph Laplacian `H`.
fn lagged_direction<T: Real>(
    m: &Manifold<T>,
    grid: &Grid<T>,
    u: &Field<T>,
    asm: &Assembly<T>,
    lambda: T,
    lay: &Layout,
) -> Result<Vec<Vec<T>>> {
    let n = grid.len();
    let pos = &lay.pos;
    let mut h = BandedSpd::zeros(n, lay.bw);
    let mut diag_sum = T::zero();
    for (e, &c) in grid.edges().iter().zip(&asm.edge_coeff) {
        let (a, b) = (pos[e.a], pos[e.b]);
        h.add(a, a, c);
        h.add(b, b, c);
        h.add(a, b, -c);
        diag_sum = diag_sum + c + c;
    }
    for (i, &w) in grid.area_weights().iter().enumerate() {
        let d = lambda * w;
        h.add(pos[i], pos[i], d);
        diag_sum = diag_sum + d;
    }
    // tiny shift keeps lambda = 0 (constant null space) factorable
    let shift = T::lit(1e-10) * diag_sum / T::lit(n as f64) + T::min_positive_value();
    for k in 0..n {
        h.add(k, k, shift);
    }
    h.factor()?;
    let dim = m.ambient_dim();
    let lowered: Vec<Vec<T>> = u.values.iter().zip(&asm.grad).map(|(p, g)| m.lower(p, g)).collect();
    let mut out = vec![vec![T::zero(); dim]; n];
    let mut rhs = vec![T::zero(); n];
    for k in 0..dim {
        for (slot, &node) in lay.order.iter().enumerate() {
            rhs[slot] = -lowered[node][k];
        }
        h.solve_in_place(&mut rhs);
        for (slot, &node) in lay.order.iter().enumerate() {
            out[node][k] = rhs[slot];
        }
    }
    for (p, d) in u.values.iter().zip(out.iter_mut()) {
        m.project_in_place(p, d);
    }
    Ok(out)
}

/// Gauss-Newton direction in orthonormal tangent frames.
///
/// Node `a` contributes `w_a phi(S_a)` with `S_a = sum_e |delta_e|^2 / len_e^2`
/// over its forward edges, where `delta_e = T_e xi_b - xi_a + log_{u_a} u_b`
/// and `T_e` maps the frame at `u_b` into the frame at `u_a` by projection.
/// The model Hessian is
/// `sum_e c_e L_e^T L_e - (w_a / psi_a^3) r r^T + lambda w I`
/// with `r = sum_e L_e^T log_e / len_e^2`; it is positive semidefinite by
/// Cauchy-Schwarz. Curvature terms of `d^2` are dropped.
fn newton_direction<T: Real>(
    m: &Manifold<T>,
    grid: &Grid<T>,
    u: &Field<T>,
    asm: &Assembly<T>,
    lambda: T,
    lay: &Layout,
) -> Result<Vec<Vec<T>>> {
    let n = grid.len();
    let d = m.dim();
    let bases: Vec<Vec<Vec<T>>> = u.values.iter().map(|p| m.tangent_basis(p)).collect();
    if bases.iter().any(|b| b.len() != d) {
        return Err(Error::Domain("degenerate tangent frame".into()));
    }
    let idx = |node: usize, k: usize| lay.pos[node] * d + k;
    let mut h = BandedSpd::zeros(n * d, (lay.bw + 1) * d - 1);
    let mut diag_sum = T::zero();
    let weights = grid.area_weights();
    let edges = grid.edges();
    for a in 0..n {
        let pa = &u.values[a];
        // (node, d-vector) entries of r
        let mut r: Vec<(usize, Vec<T>)> = vec![(a, vec![T::zero(); d])];
        for &ei in &lay.owned[a] {
            let e = &edges[ei];
            let b = e.b;
            let c = asm.edge_coeff[ei];
            let t: Vec<Vec<T>> =
                (0..d).map(|k| (0..d).map(|l| m.inner(pa, &bases[a][k], &bases[b][l])).collect()).collect();
            // c L^T L with L = [-I, T]
            for k in 0..d {
                h.add(idx(a, k), idx(a, k), c);
                diag_sum = diag_sum + c;
                for l in 0..d {
                    h.add(idx(a, k), idx(b, l), -c * t[k][l]);
                }
            }
            for l in 0..d {
                for l2 in l..d {
                    let v: T = (0..d).map(|k| t[k][l] * t[k][l2]).sum();
                    h.add(idx(b, l), idx(b, l2), c * v);
                    if l == l2 {
                        diag_sum = diag_sum + c * v;
                    }
                }
            }
            let coords: Vec<T> = (0..d).map(|k| m.inner(pa, &bases[a][k], &asm.edge_log[ei])).collect();
            let inv_len2 = T::one() / (e.length * e.length);
            for k in 0..d {
                r[0].1[k] = r[0].1[k] - coords[k] * inv_len2;
            }
            let rb: Vec<T> = (0..d).map(|l| (0..d).map(|k| t[k][l] * coords[k]).sum::<T>() * inv_len2).collect();
            r.push((b, rb));
        }
        let psi = asm.node_psi[a];
        let rank = weights[a] / (psi * psi * psi);
        let flat: Vec<(usize, T)> =
            r.iter().flat_map(|(node, v)| v.iter().enumerate().map(move |(k, &x)| (idx(*node, k), x))).collect();
        for (i, &(x, rx)) in flat.iter().enumerate() {
            for &(y, ry) in &flat[i..] {
                h.add(x, y, -rank * rx * ry);
            }
        }
        let fid = lambda * weights[a];
        for k in 0..d {
            h.add(idx(a, k), idx(a, k), fid);
        }
        diag_sum = diag_sum + fid * T::lit(d as f64);
    }
    let shift = T::lit(1e-10) * diag_sum / T::lit((n * d) as f64) + T::min_positive_value();
    for k in 0..n * d {
        h.add(k, k, shift);
    }
    h.factor()?;
    let mut rhs = vec![T::zero(); n * d];
    for a in 0..n {
        for k in 0..d {
            rhs[idx(a, k)] = -m.inner(&u.values[a], &bases[a][k], &asm.grad[a]);
        }
    }
    h.solve_in_place(&mut rhs);
    let out = (0..n)
        .map(|a| {
            let mut v = vec![T::zero(); m.ambient_dim()];
            for k in 0..d {
                let x = rhs[idx(a, k)];
                v.iter_mut().zip(&bases[a][k]).for_each(|(o, &bk)| *o = *o + x * bk);
            }
            m.project_in_place(&u.values[a], &mut v);
            v
        })
        .collect();
    Ok(out)
}

/// Minimizes the regularized energy starting from `u0` (or `f`).
///
/// When `params.delta > 0` the fidelity target is the mollified data
/// `f_delta`. Steps satisfy the Armijo condition; once energy differences
/// drop below `8 eps |E|` a step is also accepted if it lowers the max
/// gradient norm, so the trace is monotone up to that round-off level.
/// Reaching `max_iter` is reported through the flags, not as an error.
pub fn minimize<T: Real>(
    m: &Manifold<T>,
    grid: &Grid<T>,
    f: &Field<T>,
    params: &EnergyParams<T>,
    cfg: &SolveConfig<T>,
    u0: Option<&Field<T>>,
) -> Result<(Field<T>, SolveReport<T>)> {
    params.validate()?;
    cfg.validate()?;
    if !(params.eps > T::zero()) {
        return Err(Error::RequiresPositiveEps);
    }
    f.validate(m, grid)?;
    let (center, data_radius) = range_ball(m, f, cfg.center.as_ref())?;
    let mut flags = SolveFlags { outside_strong_radius: data_radius >= m.strong_radius(), ..Default::default() };

    let (data, moll_ratio) = if params.delta > T::zero() {
        let mo = mollify(m, grid, f, params.delta, cfg.kernel)?;
        (mo.field, mo.lipschitz_ratio)
    } else {
        (f.clone(), T::one())
    };
    let mut u = match u0 {
        Some(u0) => {
            u0.validate(m, grid)?;
            u0.clone()
        }
        None => data.clone(),
    };
    check_len(&u, grid)?;

    let lay = Layout::new(grid);
    let range_of = |u: &Field<T>| u.values.iter().map(|q| m.dist(&center, q)).fold(T::zero(), T::max);
    let inj = m.inj();
    let guard_radius = T::lit(0.9) * inj;
    let round_off = T::lit(8.0) * T::epsilon();

    let mut asm = assemble(m, grid, &u, &data, params)?;
    let mut trace = vec![asm.energy];
    let mut range_max = range_of(&u);
    let mut grad_norm = max_norm(m, &u, &asm.grad);
    let mut iterations = 0;
    let mut lagged_step = cfg.step_init;
    while iterations < cfg.max_iter {
        if grad_norm <= cfg.grad_tol {
            flags.converged = true;
            break;
        }
        let mut accepted = None;
        for newton in [true, false] {
            let dir = if newton {
                match newton_direction(m, grid, &u, &asm, params.lambda, &lay) {
                    Ok(d) => d,
                    Err(_) => continue,
                }
            } else {
                lagged_direction(m, grid, &u, &asm, params.lambda, &lay)?
            };
            let slope: T = u.values.iter().zip(&asm.grad).zip(&dir).map(|((p, g), d)| m.inner(p, g, d)).sum();
            if !(slope < T::zero()) {
                continue;
            }
            let e0 = asm.energy.total;
            let mut alpha = if newton { cfg.step_init } else { lagged_step };
            let max_tries = if newton { 30 } else { 60 };
            for tries in 1..=max_tries {
                let trial: Vec<Point<T>> = u
                    .values
                    .iter()
                    .zip(&dir)
                    .map(|(p, d)| {
                        let v: Vec<T> = d.iter().map(|&x| alpha * x).collect();
                        m.exp_unchecked(p, &v)
                    })
                    .collect();
                if inj.is_finite() && trial.iter().zip(&data.values).any(|(q, a)| m.dist(q, a) > guard_radius) {
                    flags.cut_locus_guard_triggered = true;
                    alpha = alpha * cfg.step_shrink;
                    continue;
                }
                let trial = Field::new(trial);
                match assemble(m, grid, &trial, &data, params) {
                    Ok(next) => {
                        let e1 = next.energy.total;
                        let armijo = e1 < e0 && e1 <= e0 + cfg.armijo_c * alpha * slope;
                        // below energy resolution: accept steps that shrink the gradient
                        let level = e1 - e0 <= round_off * e0.abs() && max_norm(m, &trial, &next.grad) < grad_norm;
                        if armijo || level {
                            if !newton {
                                // reuse the accepted length, growing it back after a first-try success
                                lagged_step =
                                    if tries == 1 { (alpha / cfg.step_shrink).min(cfg.step_init) } else { alpha };
                            }
                            accepted = Some((trial, next));
                            break;
                        }
                    }
                    Err(Error::CutLocusReached { .. }) => flags.cut_locus_guard_triggered = true,
                    Err(e) => return Err(e),
                }
                alpha = alpha * cfg.step_shrink;
            }
            if accepted.is_some() {
                break;
            }
        }
        let Some((mut next_u, mut next_asm)) = accepted else {
            flags.stalled = true;
            break;
        };
        // fold overshooting nodes back into the data ball when that does not cost energy
        if data_radius > T::zero() && range_of(&next_u) > data_radius {
            let folded = retract_field(m, &center, data_radius, &next_u)?;
            let folded_asm = assemble(m, grid, &folded, &data, params)?;
            if folded_asm.energy.total <= next_asm.energy.total {
                next_u = folded;
                next_asm = folded_asm;
            }
        }
        u = next_u;
        asm = next_asm;
        iterations += 1;
        trace.push(asm.energy);
        range_max = range_max.max(range_of(&u));
        grad_norm = max_norm(m, &u, &asm.grad);
    }
    if !flags.converged && grad_norm <= cfg.grad_tol {
        flags.converged = true;
        flags.stalled = false;
    }
    if !flags.converged && !flags.stalled {
        flags.max_iter = true;
    }
    let (_, residual) = residual_from_gradient(m, grid, &u, &asm.grad);
    let lipschitz_of_u = lipschitz_constant(m, grid, &u)?;
    let report = SolveReport {
        iterations,
        energy_trace: trace,
        final_grad_norm: grad_norm,
        final_residual_norm: residual,
        data_radius,
        range_max_dist: range_max,
        lipschitz_of_u,
        mollifier_lipschitz_ratio: moll_ratio,
        flags,
    };
    Ok((u, report))
}

/// Warm-started solves over a nonincreasing schedule, starting from `f`.
///
/// The range center is fixed across stages (from `cfg.center` or the
/// barycenter of `f`).
pub fn continuation<T: Real>(
    m: &Manifold<T>,
    grid: &Grid<T>,
    f: &Field<T>,
    lambda: T,
    schedule: &[Stage<T>],
    cfg: &SolveConfig<T>,
) -> Result<(Field<T>, Vec<SolveReport<T>>)> {
    validate_schedule(schedule)?;
    f.validate(m, grid)?;
    let (center, _) = range_ball(m, f, cfg.center.as_ref())?;
    let cfg = SolveConfig { center: Some(center), ..cfg.clone() };
    let mut u: Option<Field<T>> = None;
    let mut reports = Vec::with_capacity(schedule.len());
    for s in schedule {
        let params = EnergyParams { lambda, sigma: s.sigma, eps: s.eps, delta: s.delta };
        let (next, rep) = minimize(m, grid, f, &params, &cfg, u.as_ref())?;
        u = Some(next);
        reports.push(rep);
    }
    Ok((u.expect("schedule is nonempty"), reports))
}

/// Whether every stage's `lipschitz_of_u` is at most `bound` (up to `1e-9` relative).
pub fn lipschitz_bounded<T: Real>(reports: &[SolveReport<T>], bound: T) -> bool {
    let cap = bound * (T::one() + T::lit(1e-9));
    reports.iter().all(|r| r.lipschitz_of_u <= cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::energy;
    use crate::oracle::taut_string_1d;

    #[test]
    fn constant_data_converges_immediately() {
        let m = Manifold::<f64>::sphere(2);
        let g = Grid::circle(12).unwrap();
        let f = Field::constant(&Point::new(vec![0.0, 0.6, 0.8]), 12);
        let (u, rep) = minimize(&m, &g, &f, &EnergyParams::new(2.0, 0.0, 0.1), &SolveConfig::default(), None).unwrap();
        assert_eq!(u, f);
        assert_eq!(rep.iterations, 0);
        assert!(rep.flags.converged);
    }

    #[test]
    fn eps_zero_is_rejected() {
        let m = Manifold::<f64>::euclidean(1);
        let g = Grid::interval(4).unwrap();
        let f = Field::from_scalars(&[0.0, 1.0, 0.0, 1.0]);
        assert!(matches!(
            minimize(&m, &g, &f, &EnergyParams::new(1.0, 0.0, 0.0), &SolveConfig::default(), None),
            Err(Error::RequiresPositiveEps)
        ));
    }

    #[test]
    fn trace_strictly_decreases() {
        let m = Manifold::<f64>::hyperbolic(2);
        let g = Grid::interval(20).unwrap();
        let f = Field::new(
            (0..20)
                .map(|i| {
                    let x = (i as f64 * 0.7).sin() * 0.5;
                    let y = if i % 3 == 0 { 0.3 } else { -0.2 };
                    Point::new(vec![(1.0 + x * x + y * y).sqrt(), x, y])
                })
                .collect(),
        );
        let (_, rep) = minimize(&m, &g, &f, &EnergyParams::new(5.0, 0.0, 0.05), &SolveConfig::default(), None).unwrap();
        assert!(rep.flags.converged, "{:?}", rep.flags);
        for w in rep.energy_trace.windows(2) {
            assert!(w[1].total <= w[0].total * (1.0 + 8.0 * f64::EPSILON));
        }
        assert!(rep.range_max_dist <= rep.data_radius + 1e-8);
    }

    #[test]
    fn step_signal_matches_taut_string() {
        let n = 64;
        let fs: Vec<f64> =
            (0..n).map(|i| if i < n / 2 { 0.0 } else { 1.0 } + 0.1 * ((i * 7 % 5) as f64 - 2.0) / 2.0).collect();
        let m = Manifold::euclidean(1);
        let g = Grid::interval(n).unwrap();
        let f = Field::from_scalars(&fs);
        let schedule = geometric_schedule(0.1, 0.25, 6, false, 0.0);
        let (u, reps) = continuation(&m, &g, &f, 8.0, &schedule, &SolveConfig::default()).unwrap();
        let exact = taut_string_1d(&fs, 8.0, g.spacing()).unwrap();
        let gap = u.to_scalars().iter().zip(&exact.values).map(|(a, b)| (a - b.coords[0]).abs()).fold(0.0, f64::max);
        assert!(gap < 1e-3, "gap {gap}, iters {:?}", reps.iter().map(|r| r.iterations).collect::<Vec<_>>());
        let e = energy(&m, &g, &u, &f, &EnergyParams::new(8.0, 0.0, 0.0)).unwrap();
        assert!(e.total >= exact.objective - 1e-12);
    }

    #[test]
    fn one_stage_continuation_equals_minimize() {
        let m = Manifold::<f64>::sphere(2);
        let g = Grid::circle(10).unwrap();
        let f = Field::new(
            (0..10)
                .map(|i| {
                    let t = 0.3 * (i as f64 * 0.9).sin();
                    Point::new(vec![t.cos(), t.sin(), 0.0])
                })
                .collect(),
        );
        let stage = Stage { eps: 0.05, sigma: 0.01, delta: 0.0 };
        let (a, ra) = continuation(&m, &g, &f, 3.0, &[stage], &SolveConfig::default()).unwrap();
        let params = EnergyParams { lambda: 3.0, sigma: 0.01, eps: 0.05, delta: 0.0 };
        let (b, rb) = minimize(&m, &g, &f, &params, &SolveConfig::default(), None).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra[0], rb);
    }

    #[test]
    fn schedule_validation() {
        let bad = [Stage { eps: 0.1, sigma: 0.0, delta: 0.0 }, Stage { eps: 0.2, sigma: 0.0, delta: 0.0 }];
        assert!(validate_schedule(&bad).is_err());
        assert!(matches!(
            validate_schedule(&[Stage { eps: 0.0f64, sigma: 0.0, delta: 0.0 }]),
            Err(Error::RequiresPositiveEps)
        ));
        let g = Grid::<f64>::interval(11).unwrap();
        let d = default_schedule(&g, true);
        assert_eq!(d.len(), 6);
        assert_eq!(d[5].eps, 1e-4);
        assert_eq!(d[0].delta, 0.2);
        validate_schedule(&d).unwrap();
    }
}
