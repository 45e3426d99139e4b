//! Independent ground truth for the descent solver.
//!
//! * [`taut_string_1d`]: exact minimizer of the scalar 1-D problem
//!   `sum |u_{i+1} - u_i| + (lambda dx / 2) sum (u_i - f_i)^2`, which is the
//!   interval energy at `eps = sigma = 0` with node weights `dx`.
//! * [`brute_force_small`]: exhaustive search over a geodesic net for grids
//!   with at most four nodes.

use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{check_len, Field, Grid};
use crate::energy::{energy, EnergyParams};
use crate::error::{Error, Result};
use crate::geometry::{barycenter, WeightedPoints};
use crate::manifold::{comparison, Manifold, Point};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleResult<T> {
    pub values: Vec<Point<T>>,
    pub objective: T,
    pub method: &'static str,
    /// Geodesic covering radius of the search net (0 for exact methods).
    pub resolution: T,
    /// Upper bound on how far `objective` can sit above the net-restricted
    /// optimum's true continuous counterpart (0 for exact methods).
    pub energy_slack: T,
}

impl<T: Real> OracleResult<T> {
    pub fn field(&self) -> Field<T> {
        Field::new(self.values.clone())
    }
}

/// Scalar discrete ROF objective with the interval conventions.
pub fn scalar_objective<T: Real>(f: &[T], u: &[T], lambda: T, dx: T) -> T {
    let tv: T = u.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    let fid: T = u.iter().zip(f).map(|(&a, &b)| (a - b) * (a - b)).sum();
    tv + T::lit(0.5) * lambda * dx * fid
}

/// Exact 1-D TV-L2 minimizer via the direct taut-string scheme.
///
/// Works on the equivalent problem `1/2 |u - f|^2 + mu sum |u_{i+1} - u_i|`
/// with `mu = 1 / (lambda dx)`: the string is tightened segment by segment,
/// tracking the lower/upper tube values and the partial sums of the dual
/// variable, and a segment is emitted whenever the dual leaves `[-mu, mu]`.
pub fn taut_string_1d<T: Real>(f: &[T], lambda: T, dx: T) -> Result<OracleResult<T>> {
    let n = f.len();
    if n == 0 {
        return Err(Error::InvalidParameter("taut string needs at least one sample".into()));
    }
    if !(lambda > T::zero() && dx > T::zero()) {
        return Err(Error::InvalidParameter("taut string needs lambda > 0 and dx > 0".into()));
    }
    let mu = T::one() / (lambda * dx);
    let two_mu = mu + mu;
    let mut out = vec![T::zero(); n];
    let (mut k, mut k0, mut kplus, mut kminus) = (0usize, 0usize, 0usize, 0usize);
    let (mut umin, mut umax) = (mu, -mu);
    let (mut vmin, mut vmax) = (f[0] - mu, f[0] + mu);
    'outer: loop {
        while k == n - 1 {
            if umin < T::zero() {
                loop {
                    out[k0] = vmin;
                    k0 += 1;
                    if k0 > kminus {
                        break;
                    }
                }
                k = k0;
                kminus = k0;
                vmin = f[k0];
                umin = mu;
                umax = vmin + umin - vmax;
            } else if umax > T::zero() {
                loop {
                    out[k0] = vmax;
                    k0 += 1;
                    if k0 > kplus {
                        break;
                    }
                }
                k = k0;
                kplus = k0;
                vmax = f[k0];
                umax = -mu;
                umin = vmax + umax - vmin;
            } else {
                vmin = vmin + umin / T::lit((k - k0 + 1) as f64);
                while k0 <= k {
                    out[k0] = vmin;
                    k0 += 1;
                }
                break 'outer;
            }
        }
        umin = umin + f[k + 1] - vmin;
        if umin < -mu {
            loop {
                out[k0] = vmin;
                k0 += 1;
                if k0 > kminus {
                    break;
                }
            }
            k = k0;
            kplus = k0;
            kminus = k0;
            vmin = f[k0];
            vmax = vmin + two_mu;
            umin = mu;
            umax = -mu;
            continue;
        }
        umax = umax + f[k + 1] - vmax;
        if umax > mu {
            loop {
                out[k0] = vmax;
                k0 += 1;
                if k0 > kplus {
                    break;
                }
            }
            k = k0;
            kplus = k0;
            kminus = k0;
            vmax = f[k0];
            vmin = vmax - two_mu;
            umin = mu;
            umax = -mu;
            continue;
        }
        k += 1;
        if umin >= mu {
            kminus = k;
            vmin = vmin + (umin - mu) / T::lit((kminus - k0 + 1) as f64);
            umin = mu;
        }
        if umax <= -mu {
            kplus = k;
            vmax = vmax + (umax + mu) / T::lit((kplus - k0 + 1) as f64);
            umax = -mu;
        }
    }
    let objective = scalar_objective(f, &out, lambda, dx);
    Ok(OracleResult {
        values: out.into_iter().map(|v| Point::new(vec![v])).collect(),
        objective,
        method: "taut-string",
        resolution: T::zero(),
        energy_slack: T::zero(),
    })
}

/// Worst violation of the optimality conditions of the scalar problem.
///
/// With `c = lambda dx` the dual `s_i = sum_{k<=i} c (u_k - f_k)` must satisfy
/// `|s_i| <= 1`, `s_i = sign(u_{i+1} - u_i)` on jumps, and `s_{n-1} = 0`.
pub fn scalar_kkt_residual<T: Real>(f: &[T], u: &[T], lambda: T, dx: T) -> T {
    let c = lambda * dx;
    let n = f.len();
    let jump_tol = T::lit(1e-9);
    let mut s = T::zero();
    let mut worst = T::zero();
    for i in 0..n {
        s = s + c * (u[i] - f[i]);
        if i + 1 == n {
            worst = worst.max(s.abs());
            break;
        }
        worst = worst.max(s.abs() - T::one());
        let jump = u[i + 1] - u[i];
        if jump > jump_tol {
            worst = worst.max((s - T::one()).abs());
        } else if jump < -jump_tol {
            worst = worst.max((s + T::one()).abs());
        }
    }
    worst
}

/// Exhaustive minimization over a geodesic net of the ball `B(p, R)` that
/// contains the data, for grids with at most four nodes.
///
/// The net is a cubic lattice with `quantization` points per axis in normal
/// coordinates at the barycenter `p` of `f`, clipped to the ball enlarged by
/// the lattice covering radius. Ties are broken by the lexicographically
/// smallest candidate index.
pub fn brute_force_small<T: Real>(
    m: &Manifold<T>,
    grid: &Grid<T>,
    f: &Field<T>,
    params: &EnergyParams<T>,
    quantization: usize,
) -> Result<OracleResult<T>> {
    check_len(f, grid)?;
    params.validate()?;
    let nodes = grid.len();
    if nodes > 4 {
        return Err(Error::BudgetExceeded(format!("brute force limited to 4 nodes, got {nodes}")));
    }
    if quantization < 2 {
        return Err(Error::InvalidParameter("quantization must be >= 2".into()));
    }
    let dim = m.dim();
    let budget = (quantization as f64).powi((dim * nodes) as i32);
    if budget > 1e8 {
        return Err(Error::BudgetExceeded(format!("{quantization}^({dim}*{nodes}) = {budget:e} > 1e8")));
    }
    let center = barycenter(m, &WeightedPoints::uniform(f.values.clone())?, T::lit(1e-12), 500)?;
    let radius = f.values.iter().map(|q| m.dist(&center, q)).fold(T::zero(), T::max);
    let basis = m.tangent_basis(&center);

    let h = if radius > T::zero() { (radius + radius) / T::lit((quantization - 1) as f64) } else { T::zero() };
    let cover = h * T::lit(dim as f64).sqrt() * T::lit(0.5);
    let mut candidates: Vec<Point<T>> = Vec::new();
    let mut idx = vec![0usize; dim];
    loop {
        let coords: Vec<T> = idx.iter().map(|&i| -radius + h * T::lit(i as f64)).collect();
        let r2: T = coords.iter().map(|&c| c * c).sum();
        if r2.sqrt() <= radius + cover {
            let mut v = vec![T::zero(); m.ambient_dim()];
            for (c, b) in coords.iter().zip(&basis) {
                v.iter_mut().zip(b).for_each(|(x, &y)| *x = *x + *c * y);
            }
            candidates.push(m.exp_unchecked(&center, &v));
        }
        if radius == T::zero() {
            break;
        }
        let mut d = 0;
        while d < dim {
            idx[d] += 1;
            if idx[d] < quantization {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
        if d == dim {
            break;
        }
    }
    // include the data values themselves so the net always contains f
    for q in &f.values {
        candidates.push(q.clone());
    }
    let kc = candidates.len();

    // precomputed distance tables
    let pair: Vec<T> =
        (0..kc * kc).into_par_iter().map(|ij| m.dist(&candidates[ij / kc], &candidates[ij % kc])).collect();
    let fid: Vec<Vec<T>> = f.values.iter().map(|q| candidates.iter().map(|c| m.dist(c, q)).collect()).collect();
    let weights = grid.area_weights().to_vec();
    let edges = grid.edges().to_vec();
    let inj = m.inj();
    let eps2 = params.eps * params.eps;
    let half = T::lit(0.5);

    let eval = |choice: &[usize]| -> T {
        let mut s = [T::zero(); 4];
        for e in &edges {
            let d = pair[choice[e.a] * kc + choice[e.b]];
            if inj.is_finite() && d >= inj * (T::one() - T::domain_tol()) {
                return T::infinity();
            }
            let r = d / e.length;
            s[e.a] = s[e.a] + r * r;
        }
        let mut total = T::zero();
        for i in 0..nodes {
            let d = fid[i][choice[i]];
            total =
                total + weights[i] * ((s[i] + eps2).sqrt() + half * params.lambda * d * d + half * params.sigma * s[i]);
        }
        total
    };

    let total_combos = kc.pow((nodes - 1) as u32);
    let best = (0..kc)
        .into_par_iter()
        .map(|first| {
            let mut choice = vec![0usize; nodes];
            choice[0] = first;
            let mut best = (T::infinity(), usize::MAX);
            for rest in 0..total_combos {
                let mut r = rest;
                for slot in choice.iter_mut().skip(1).rev() {
                    *slot = r % kc;
                    r /= kc;
                }
                let e = eval(&choice);
                if e < best.0 {
                    best = (e, first * total_combos + rest);
                }
            }
            best
        })
        .reduce(|| (T::infinity(), usize::MAX), |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
    if best.1 == usize::MAX {
        return Err(Error::Domain("brute force found no admissible configuration".into()));
    }
    let mut code = best.1;
    let mut choice = vec![0usize; nodes];
    for slot in choice.iter_mut().rev() {
        *slot = code % kc;
        code /= kc;
    }
    let values: Vec<Point<T>> = choice.iter().map(|&c| candidates[c].clone()).collect();
    let objective = energy(m, grid, &Field::new(values.clone()), f, params)?.total;

    // exp at the center expands lattice gaps by at most s_k(r)/r for negative curvature
    let reach = radius + cover;
    let stretch = if m.kappa_lo() < T::zero() && reach > T::zero() {
        comparison(m.kappa_lo(), reach)?.s / reach
    } else {
        T::one()
    };
    let resolution = cover * stretch;
    let energy_slack = energy_perturbation_bound(grid, params, resolution, reach + reach);
    Ok(OracleResult { values, objective, method: "brute-force-net", resolution, energy_slack })
}

/// Bound on `|E(u') - E(u)|` when every node moves by at most `r` and all
/// pairwise distances stay below `diam`.
fn energy_perturbation_bound<T: Real>(grid: &Grid<T>, params: &EnergyParams<T>, r: T, diam: T) -> T {
    let two = T::lit(2.0);
    let mut inv_len2 = vec![T::zero(); grid.len()];
    for e in grid.edges() {
        inv_len2[e.a] = inv_len2[e.a] + T::one() / (e.length * e.length);
    }
    grid.area_weights()
        .iter()
        .zip(&inv_len2)
        .map(|(&w, &il)| {
            let dg = two * r * il.sqrt();
            let g = diam * il.sqrt();
            let tv = dg;
            let dir = T::lit(0.5) * params.sigma * (two * g * dg + dg * dg);
            let fid = T::lit(0.5) * params.lambda * (two * diam * r + r * r);
            w * (tv + dir + fid)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_input_is_fixed() {
        let f = [0.7f64; 9];
        let r = taut_string_1d(&f, 3.0, 0.125).unwrap();
        assert!(r.values.iter().all(|p| (p.coords[0] - 0.7).abs() < 1e-14));
        assert!(r.objective < 1e-26);
    }

    #[test]
    fn two_sample_closed_form() {
        // E(t) = (1 - 2t) + lambda t^2 for u = (t, 1 - t), minimized at t = min(1/2, 1/lambda)
        for &lambda in &[0.5, 1.0, 2.0, 3.0, 8.0] {
            let r = taut_string_1d(&[0.0, 1.0], lambda, 1.0).unwrap();
            let t = (1.0f64 / lambda).min(0.5);
            assert!((r.values[0].coords[0] - t).abs() < 1e-14, "lambda {lambda}");
            assert!((r.values[1].coords[0] - (1.0 - t)).abs() < 1e-14);
            // grid search confirmation
            let mut best = (f64::INFINITY, 0.0);
            for k in 0..=100_000 {
                let s = 0.5 * k as f64 / 100_000.0;
                let e = scalar_objective(&[0.0, 1.0], &[s, 1.0 - s], lambda, 1.0);
                if e < best.0 {
                    best = (e, s);
                }
            }
            assert!((best.1 - t).abs() < 1e-5);
        }
    }

    #[test]
    fn kkt_holds_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let n = rng.random_range(1..40);
            let f: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let lambda = rng.random_range(0.2..50.0);
            let dx = 1.0 / (n.max(2) - 1) as f64;
            let r = taut_string_1d(&f, lambda, dx).unwrap();
            let u: Vec<f64> = r.values.iter().map(|p| p.coords[0]).collect();
            assert!(scalar_kkt_residual(&f, &u, lambda, dx) <= 1e-10);
        }
    }

    #[test]
    fn brute_force_constant_data() {
        let m = Manifold::<f64>::sphere(2);
        let g = Grid::circle(3).unwrap();
        let f = Field::constant(&Point::new(vec![0.0, 0.6, 0.8]), 3);
        let r = brute_force_small(&m, &g, &f, &EnergyParams::new(1.0, 0.0, 0.0), 5).unwrap();
        assert_eq!(r.values, f.values);
        assert!(r.objective < 1e-26);
    }

    #[test]
    fn brute_force_matches_taut_string_on_two_nodes() {
        let m = Manifold::<f64>::euclidean(1);
        let g = Grid::interval(2).unwrap();
        let f = [0.0, 1.0];
        let lambda = 3.0;
        let exact = taut_string_1d(&f, lambda, 1.0).unwrap();
        let bf =
            brute_force_small(&m, &g, &Field::from_scalars(&f), &EnergyParams::new(lambda, 0.0, 0.0), 401).unwrap();
        assert!(bf.objective >= exact.objective - 1e-14);
        assert!(bf.objective <= exact.objective + bf.energy_slack);
        for (a, b) in bf.values.iter().zip(&exact.values) {
            assert!((a.coords[0] - b.coords[0]).abs() <= bf.resolution + 1e-12);
        }
    }

    #[test]
    fn brute_force_budget() {
        let m = Manifold::<f64>::sphere(2);
        let g = Grid::interval(4).unwrap();
        let f = Field::constant(&m.origin(), 4);
        assert!(matches!(
            brute_force_small(&m, &g, &f, &EnergyParams::new(1.0, 0.0, 0.0), 11),
            Err(Error::BudgetExceeded(_))
        ));
        let g5 = Grid::interval(5).unwrap();
        let f5 = Field::constant(&m.origin(), 5);
        assert!(brute_force_small(&m, &g5, &f5, &EnergyParams::new(1.0, 0.0, 0.0), 2).is_err());
    }
}
