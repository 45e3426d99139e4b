//! Executable checks of the structural properties of the model.
//!
//! Every study returns a [`StudyReport`] of per-case margins. A case passes
//! when its margin is at least its threshold; a study passes when every case
//! does, except for report-only studies, which always pass and only record
//! what they found. Cases run in parallel with one RNG stream per case and
//! are merged in case order, so reports are deterministic for a given seed.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{lipschitz_constant, Field, Grid, RhoPreset};
use crate::energy::{
    check_hypotheses, energy, fidelity_force_slack, riemannian_gradient, EnergyParams, HypothesisSample, RhoBounds,
};
use crate::error::{Error, Result};
use crate::geometry::{geodesic_homotopy, mollify, retract_field, retract_into_ball, Kernel};
use crate::manifold::{Manifold, Point};
use crate::oracle::{brute_force_small, taut_string_1d};
use crate::scalar::Real;
use crate::solver::{continuation, default_schedule, geometric_schedule, minimize, SolveConfig, Stage};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseMargin {
    pub case: String,
    pub margin: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub study: String,
    pub passed: bool,
    pub report_only: bool,
    pub parameters: BTreeMap<String, String>,
    pub cases: Vec<CaseMargin>,
    pub summary: BTreeMap<String, f64>,
}

impl StudyReport {
    pub fn new(study: &str) -> Self {
        Self {
            study: study.to_string(),
            passed: true,
            report_only: false,
            parameters: BTreeMap::new(),
            cases: Vec::new(),
            summary: BTreeMap::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    /// Records a case; NaN margins fail.
    pub fn push(&mut self, case: impl Into<String>, margin: f64, threshold: f64) {
        let pass = margin >= threshold;
        if !pass && !self.report_only {
            self.passed = false;
        }
        self.cases.push(CaseMargin { case: case.into(), margin, threshold, pass });
    }

    pub fn violations(&self) -> usize {
        self.cases.iter().filter(|c| !c.pass).count()
    }

    pub fn min_margin(&self) -> f64 {
        self.cases.iter().map(|c| c.margin - c.threshold).fold(f64::INFINITY, f64::min)
    }

    fn finish(mut self) -> Self {
        let v = self.violations() as f64;
        self.summary.insert("cases".into(), self.cases.len() as f64);
        self.summary.insert("violations".into(), v);
        if !self.cases.is_empty() {
            self.summary.insert("min_slack".into(), self.min_margin());
        }
        self
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("case,margin,threshold,pass\n");
        for c in &self.cases {
            let _ = writeln!(out, "{},{},{},{}", c.case.replace(',', ";"), c.margin, c.threshold, c.pass);
        }
        out
    }
}

fn case_rng(seed: u64, case: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(case as u64);
    rng
}

fn random_field<T: Real>(m: &Manifold<T>, n: usize, center: &Point<T>, radius: T, rng: &mut ChaCha8Rng) -> Field<T> {
    Field::new((0..n).map(|_| m.random_point_in_ball(center, radius, rng)).collect())
}

/// Radius for random data: half the convexity radius, capped at 0.5.
fn sample_radius<T: Real>(m: &Manifold<T>) -> T {
    (T::lit(0.5) * m.convexity_radius()).min(T::lit(0.5))
}

// ---------------------------------------------------------------- geometry

/// `exp_p(log_p q) = q` on random pairs with `d(p, q) < 0.9 inj` (distance
/// capped at 3 on non-compact models), plus constraint residuals.
pub fn roundtrip_study<T: Real>(m: &Manifold<T>, trials: usize, seed: u64) -> StudyReport {
    let dmax = (T::lit(0.9) * m.inj()).min(T::lit(3.0));
    let rows: Vec<[f64; 3]> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(seed, i);
            let p = m.random_point_in_ball(&m.origin(), T::lit(1.5).min(dmax), &mut rng);
            let q = m.random_point_at_distance(&p, dmax * T::lit(rng.random::<f64>()), &mut rng);
            match m.log(&p, &q) {
                Ok(v) => {
                    let back = m.exp_unchecked(&p, &v);
                    let err = back.coords.iter().zip(&q.coords).map(|(a, b)| (*a - *b).abs()).fold(T::zero(), T::max);
                    [
                        err.f64(),
                        m.point_residual(&back).max(m.point_residual(&q)).f64(),
                        m.tangent_residual(&p, &v).f64(),
                    ]
                }
                Err(_) => [f64::INFINITY; 3],
            }
        })
        .collect();
    let mut r = StudyReport::new("roundtrip").param("manifold", m).param("trials", trials).param("seed", seed);
    let worst = |k: usize| rows.iter().map(|x| x[k]).fold(0.0, f64::max);
    r.push("exp(log) coordinate error", 1e-10 - worst(0), 0.0);
    r.push("point residual", 1e-12 - worst(1), 0.0);
    r.push("tangent residual", 1e-12 - worst(2), 0.0);
    r.summary.insert("max_roundtrip_error".into(), worst(0));
    r.finish()
}

/// Hand-substituted radii for the reference models; exact equality.
pub fn radii_study() -> StudyReport {
    use std::f64::consts::PI;
    let mut r = StudyReport::new("radii");
    let cases: Vec<(String, Manifold<f64>, f64, f64)> = vec![
        ("sphere:2".into(), Manifold::sphere(2), PI / 2.0, PI / 4.0),
        ("sphere:2:r=2".into(), Manifold::sphere_with_radius(2, 2.0), PI, PI / 2.0),
        ("sphere:2:r=0.5".into(), Manifold::sphere_with_radius(2, 0.5), PI / 4.0, PI / 8.0),
        ("hyperbolic:2".into(), Manifold::hyperbolic(2), f64::INFINITY, f64::INFINITY),
        ("euclidean:3".into(), Manifold::euclidean(3), f64::INFINITY, f64::INFINITY),
    ];
    for (name, m, conv, strong) in cases {
        let exact = |a: f64, b: f64| if a == b { 0.0 } else { -1.0 };
        r.push(format!("{name} convexity radius"), exact(m.convexity_radius(), conv), 0.0);
        r.push(format!("{name} strong radius"), exact(m.strong_radius(), strong), 0.0);
    }
    r.finish()
}

// ---------------------------------------------------------------- retraction

/// Length decrease of the ball retraction on random pairs, and energy
/// monotonicity `E(pi o u) <= E(u)` with `dist(p, pi o u) <= R` on random
/// fields whose values reach out to `2R`.
pub fn retraction_study<T: Real>(
    m: &Manifold<T>,
    grid: &Grid<T>,
    pairs: usize,
    fields: usize,
    radius: T,
    params: &EnergyParams<T>,
    seed: u64,
) -> Result<StudyReport> {
    let p = m.origin();
    let two_r = radius + radius;
    let pair_slack: Vec<f64> = (0..pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(seed, i);
            let a = m.random_point_in_ball(&p, two_r, &mut rng);
            let b = m.random_point_in_ball(&p, two_r, &mut rng);
            let pa = retract_into_ball(m, &p, radius, &a)?;
            let pb = retract_into_ball(m, &p, radius, &b)?;
            Ok((m.dist(&a, &b) - m.dist(&pa, &pb)).f64())
        })
        .collect::<Result<Vec<_>>>()?;
    let field_rows: Vec<(f64, f64)> = (0..fields)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(seed, pairs + i);
            let f = random_field(m, grid.len(), &p, radius, &mut rng);
            let u = random_field(m, grid.len(), &p, two_r, &mut rng);
            let pu = retract_field(m, &p, radius, &u)?;
            let e_u = energy(m, grid, &u, &f, params)?.total;
            let e_pu = energy(m, grid, &pu, &f, params)?.total;
            let reach = pu.values.iter().map(|q| m.dist(&p, q)).fold(T::zero(), T::max);
            Ok(((e_u - e_pu).f64(), (radius - reach).f64()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut r = StudyReport::new("retraction")
        .param("manifold", m)
        .param("grid", grid)
        .param("radius", radius)
        .param("seed", seed);
    r.push("pair length decrease", pair_slack.iter().copied().fold(f64::INFINITY, f64::min), -1e-12);
    r.push("field energy decrease", field_rows.iter().map(|x| x.0).fold(f64::INFINITY, f64::min), -1e-12);
    r.push("field range", field_rows.iter().map(|x| x.1).fold(f64::INFINITY, f64::min), -1e-12);
    r.summary.insert("pairs".into(), pairs as f64);
    r.summary.insert("fields".into(), fields as f64);
    Ok(r.finish())
}

// ---------------------------------------------------------------- convexity

fn tv_params<T: Real>(eps: T) -> EnergyParams<T> {
    EnergyParams::new(T::zero(), T::zero(), eps)
}

fn fidelity_energy<T: Real>(m: &Manifold<T>, grid: &Grid<T>, u: &Field<T>, f: &Field<T>, lambda: T) -> Result<T> {
    Ok(energy(m, grid, u, f, &EnergyParams::new(lambda, T::zero(), T::zero()))?.fidelity)
}

/// Convexity gaps `(1-t) E(u) + t E(v) - E(U(t))` of the TV part, the full
/// energy and the fidelity along the geodesic homotopy, in that order.
fn convexity_gaps<T: Real>(
    m: &Manifold<T>,
    grid: &Grid<T>,
    u: &Field<T>,
    v: &Field<T>,
    f: &Field<T>,
    params: &EnergyParams<T>,
    t: T,
) -> Result<[f64; 3]> {
    let ut = geodesic_homotopy(m, u, v, t)?;
    let s = T::one() - t;
    let tv = |w: &Field<T>| energy(m, grid, w, f, &tv_params(params.eps)).map(|e| e.tv);
    let full = |w: &Field<T>| energy(m, grid, w, f, params).map(|e| e.total);
    let fid = |w: &Field<T>| fidelity_energy(m, grid, w, f, params.lambda);
    Ok([
        (s * tv(u)? + t * tv(v)? - tv(&ut)?).f64(),
        (s * full(u)? + t * full(v)? - full(&ut)?).f64(),
        (s * fid(u)? + t * fid(v)? - fid(&ut)?).f64(),
    ])
}

fn require_npc<T: Real>(m: &Manifold<T>) -> Result<()> {
    if m.kappa_hi() > T::zero() {
        return Err(Error::InvalidParameter(format!("{m} is not non-positively curved")));
    }
    Ok(())
}

/// Geodesic convexity of the TV part, the full energy and the fidelity along
/// the homotopy from `u` to `v`, plus the `u <-> v, t <-> 1-t` symmetry.
pub fn check_convexity<T: Real>(
    m: &Manifold<T>,
    grid: &Grid<T>,
    u: &Field<T>,
    v: &Field<T>,
    f: &Field<T>,
    params: &EnergyParams<T>,
    t_grid: &[T],
) -> Result<StudyReport> {
    require_npc(m)?;
    for w in [u, v, f] {
        w.validate(m, grid)?;
    }
    let mut r = StudyReport::new("convexity").param("manifold", m).param("grid", grid);
    for &t in t_grid {
        let g = convexity_gaps(m, grid, u, v, f, params, t)?;
        let back = convexity_gaps(m, grid, v, u, f, params, T::one() - t)?;
        for (k, name) in ["tv", "energy", "fidelity"].iter().enumerate() {
            r.push(format!("{name} t={}", t.f64()), g[k], -1e-10);
        }
        let asym = (0..3).map(|k| (g[k] - back[k]).abs()).fold(0.0, f64::max);
        r.push(format!("symmetry t={}", t.f64()), -asym, -1e-12);
    }
    Ok(r.finish())
}

/// `(E(U(t0+h)) - 2 E(U(t0)) + E(U(t0-h))) / h^2` along the homotopy.
#[allow(clippy::too_many_arguments)]
pub fn second_variation_probe<T: Real>(
    m: &Manifold<T>,
    grid: &Grid<T>,
    u: &Field<T>,
    v: &Field<T>,
    f: &Field<T>,
    params: &EnergyParams<T>,
    t0: T,
    h: T,
) -> Result<T> {
    let e = |t: T| -> Result<T> { Ok(energy(m, grid, &geodesic_homotopy(m, u, v, t)?, f, params)?.total) };
    Ok((e(t0 + h)? - T::lit(2.0) * e(t0)? + e(t0 - h)?) / (h * h))
}

/// Random pairs in a ball around the origin: per pair, the worst convexity
/// gap over the eleven times `0, 0.1, .., 1` for each energy, the symmetry
/// defect and the smallest second-variation probe at `t0 = 0.25, 0.5, 0.75`.
pub fn convexity_sweep<T: Real>(
    m: &Manifold<T>,
    grid: &Grid<T>,
    trials: usize,
    params: &EnergyParams<T>,
    seed: u64,
) -> Result<StudyReport> {
    require_npc(m)?;
    let radius = sample_radius(m);
    let ts: Vec<T> = (0..=10).map(|k| T::lit(k as f64 / 10.0)).collect();
    let rows: Vec<[f64; 5]> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(seed, i);
            let c = m.origin();
            let f = random_field(m, grid.len(), &c, radius, &mut rng);
            let u = random_field(m, grid.len(), &c, radius, &mut rng);
            let v = random_field(m, grid.len(), &c, radius, &mut rng);
            let mut row = [f64::INFINITY; 5];
            for &t in &ts {
                let g = convexity_gaps(m, grid, &u, &v, &f, params, t)?;
                let b = convexity_gaps(m, grid, &v, &u, &f, params, T::one() - t)?;
                for k in 0..3 {
                    row[k] = row[k].min(g[k]);
                }
                let asym = (0..3).map(|k| (g[k] - b[k]).abs()).fold(0.0, f64::max);
                row[3] = row[3].min(-asym);
            }
            for t0 in [0.25, 0.5, 0.75] {
                let sv = second_variation_probe(m, grid, &u, &v, &f, params, T::lit(t0), T::lit(1e-3))?;
                row[4] = row[4].min(sv.f64());
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut r = StudyReport::new("convexity")
        .param("manifold", m)
        .param("grid", grid)
        .param("trials", trials)
        .param("seed", seed)
        .param("lambda", params.lambda)
        .param("sigma", params.sigma)
        .param("eps", params.eps);
    for (i, row) in rows.iter().enumerate() {
        r.push(format!("pair {i} tv"), row[0], -1e-10);
        r.push(format!("pair {i} energy"), row[1], -1e-10);
        r.push(format!("pair {i} fidelity"), row[2], -1e-10);
        r.push(format!("pair {i} symmetry"), row[3], -1e-12);
        r.push(format!("pair {i} second variation"), row[4], -1e-6);
    }
    Ok(r.finish())
}

/// Random search for `TV(U(1/2)) > (TV(u) + TV(v)) / 2 + 1e-6` on the unit
/// sphere. Report-only: the best violation is recorded whether or not it
/// clears the threshold.
///
/// Half of the trials perturb the latitude family: `u` on an equatorial arc
/// and `v` on the parallel at latitude `phi` over the same longitudes,
/// randomly rotated. Along meridians the separation of neighbours shrinks
/// like `cos(latitude)`, which is concave. The other half are random fields
/// in a ball of radius `pi/4`.
pub fn counterexample_search_s2(grid: &Grid<f64>, trials: usize, seed: u64) -> Result<StudyReport> {
    let m = Manifold::<f64>::sphere(2);
    let n = grid.len();
    let rows: Vec<(f64, usize)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(seed, i);
            let (u, v) = if i % 2 == 0 {
                let spread: f64 = rng.random_range(0.05..1.2);
                let phi: f64 = rng.random_range(0.1..1.3);
                let rot = random_rotation(&mut rng);
                let jitter: f64 = rng.random_range(0.0..0.02);
                let mut mk = |lat: f64| -> Field<f64> {
                    Field::new(
                        (0..n)
                            .map(|k| {
                                // closed loop on the circle grid: longitudes go out and back
                                let s = (2.0 * std::f64::consts::PI * k as f64 / n as f64).sin();
                                let lon = spread * s + jitter * rng.random_range(-1.0..1.0);
                                let la = lat + jitter * rng.random_range(-1.0..1.0);
                                let x = [la.cos() * lon.cos(), la.cos() * lon.sin(), la.sin()];
                                Point::new(apply(&rot, &x).to_vec())
                            })
                            .collect(),
                    )
                };
                (mk(0.0), mk(phi))
            } else {
                let c = m.random_point_in_ball(&m.origin(), std::f64::consts::PI, &mut rng);
                let r = std::f64::consts::FRAC_PI_4;
                (random_field(&m, n, &c, r, &mut rng), random_field(&m, n, &c, r, &mut rng))
            };
            let tv = |w: &Field<f64>| energy(&m, grid, w, w, &tv_params(0.0)).map(|e| e.tv);
            let mid = geodesic_homotopy(&m, &u, &v, 0.5)?;
            Ok((tv(&mid)? - 0.5 * (tv(&u)? + tv(&v)?), i))
        })
        .collect::<Result<Vec<_>>>()?;
    let best = rows.iter().copied().fold((f64::NEG_INFINITY, 0), |a, b| if b.0 > a.0 { b } else { a });
    let found = rows.iter().filter(|x| x.0 > 1e-6).count();
    let mut r = StudyReport::new("s2-counterexample").param("grid", grid).param("trials", trials).param("seed", seed);
    r.report_only = true;
    r.push(format!("best violation (trial {})", best.1), best.0, 1e-6);
    r.summary.insert("best_violation".into(), best.0);
    r.summary.insert("best_trial".into(), best.1 as f64);
    r.summary.insert("violating_trials".into(), found as f64);
    Ok(r.finish())
}

fn random_rotation(rng: &mut ChaCha8Rng) -> [[f64; 3]; 3] {
    // Gram-Schmidt on three Gaussian vectors
    let mut cols: Vec<[f64; 3]> = Vec::new();
    while cols.len() < 3 {
        let mut v = [0.0; 3];
        for x in v.iter_mut() {
            *x = rng.sample(rand_distr::StandardNormal);
        }
        for c in &cols {
            let d: f64 = (0..3).map(|k| v[k] * c[k]).sum();
            (0..3).for_each(|k| v[k] -= d * c[k]);
        }
        let nv = (v.iter().map(|x| x * x).sum::<f64>()).sqrt();
        if nv > 1e-3 {
            cols.push([v[0] / nv, v[1] / nv, v[2] / nv]);
        }
    }
    [cols[0], cols[1], cols[2]]
}

fn apply(r: &[[f64; 3]; 3], x: &[f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (c, &xc) in r.iter().zip(x) {
        (0..3).for_each(|k| out[k] += c[k] * xc);
    }
    out
}

// ---------------------------------------------------------------- gradient

/// Central finite differences of `t -> E(exp_u(t V))` against `<grad E, V>`
/// on random configurations. The error is taken relative to
/// `sum_i |grad_i| |V_i|`, the Cauchy-Schwarz scale of the pairing.
pub fn gradient_study(trials: usize, seed: u64) -> Result<StudyReport> {
    let models =
        ["euclidean:1", "euclidean:3", "sphere:2", "sphere:2:r=2", "hyperbolic:2", "hyperbolic:3", "spd:2", "spd:3"];
    let grids = ["interval:9", "circle:8", "rect2d:4x3:rho=flat", "rect2d:4x4:rho=sphere_patch"];
    let rows: Vec<(String, f64)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(seed, i);
            let m: Manifold<f64> = models[i % models.len()].parse()?;
            let g: Grid<f64> = grids[(i / models.len()) % grids.len()].parse()?;
            let params = EnergyParams::new(
                rng.random_range(0.1..10.0),
                rng.random_range(0.01..2.0),
                rng.random_range(0.05..1.0),
            );
            let c = m.random_point_in_ball(&m.origin(), 0.5, &mut rng);
            let radius = sample_radius(&m);
            let u = random_field(&m, g.len(), &c, radius, &mut rng);
            let f = random_field(&m, g.len(), &c, radius, &mut rng);
            let dir: Vec<Vec<f64>> = u
                .values
                .iter()
                .map(|p| {
                    let s: f64 = rng.random_range(0.2..1.0);
                    m.random_unit_tangent(p, &mut rng).into_iter().map(|x| x * s).collect()
                })
                .collect();
            let grad = riemannian_gradient(&m, &g, &u, &f, &params)?;
            let analytic: f64 = grad.iter().zip(&dir).map(|(gt, d)| m.inner(&gt.base, &gt.vec, d)).sum();
            let scale: f64 = grad
                .iter()
                .zip(&dir)
                .map(|(gt, d)| m.tangent_norm(&gt.base, &gt.vec) * m.tangent_norm(&gt.base, d))
                .sum();
            let h = 1e-5;
            let moved = |t: f64| -> Result<f64> {
                let w = Field::new(
                    u.values
                        .iter()
                        .zip(&dir)
                        .map(|(p, d)| m.exp(p, &d.iter().map(|x| x * t).collect::<Vec<_>>()))
                        .collect::<Result<Vec<_>>>()?,
                );
                Ok(energy(&m, &g, &w, &f, &params)?.total)
            };
            let fd = (moved(h)? - moved(-h)?) / (2.0 * h);
            let rel = (fd - analytic).abs() / scale.max(f64::MIN_POSITIVE);
            Ok((format!("{} {} #{i}", m, g), rel))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut r = StudyReport::new("gradient").param("trials", trials).param("seed", seed);
    for (name, rel) in rows {
        r.push(name, 1e-5 - rel, 0.0);
    }
    Ok(r.finish())
}

// ---------------------------------------------------------------- ellipticity

/// Monte-Carlo sweep of the structural inequalities H1-H6 over random
/// points of the unit square, log-uniform gradient magnitudes and a range
/// of `eps`, plus the in-ball fidelity force bound H7 on `target`.
pub fn ellipticity_sweep<T: Real>(
    target: &Manifold<T>,
    preset: RhoPreset,
    samples: usize,
    sigma: T,
    seed: u64,
) -> StudyReport {
    let eps_values = [1.0, 0.1, 1e-2, 1e-3];
    let rho = |x: f64, y: f64| match preset {
        RhoPreset::Flat => 1.0,
        RhoPreset::SpherePatch => 2.0 / (1.0 + x * x + y * y),
    };
    let bounds = RhoBounds { min: T::lit(rho(1.0, 1.0)), max: T::lit(rho(0.0, 0.0)), lipschitz: preset.lipschitz() };
    let ncomp = 2 * target.ambient_dim().max(1);
    let chunks: Vec<Vec<HypothesisSample<T>>> = (0..eps_values.len())
        .map(|k| {
            let mut rng = case_rng(seed, k);
            (0..samples / eps_values.len())
                .map(|_| {
                    let x = [rng.random::<f64>(), rng.random::<f64>()];
                    let y = [rng.random::<f64>(), rng.random::<f64>()];
                    let vec_rand = |rng: &mut ChaCha8Rng| -> Vec<T> {
                        let mag = 10f64.powf(rng.random_range(-3.0..3.0));
                        (0..ncomp).map(|_| T::lit(mag * rng.sample::<f64, _>(rand_distr::StandardNormal))).collect()
                    };
                    let xi = vec_rand(&mut rng);
                    let eta = vec_rand(&mut rng);
                    HypothesisSample {
                        x: [T::lit(x[0]), T::lit(x[1])],
                        y: [T::lit(y[0]), T::lit(y[1])],
                        rho_x: T::lit(rho(x[0], x[1])),
                        rho_y: T::lit(rho(y[0], y[1])),
                        xi,
                        eta,
                    }
                })
                .collect()
        })
        .collect();
    let mut r = StudyReport::new("ellipticity")
        .param("manifold", target)
        .param("samples", samples)
        .param("sigma", sigma)
        .param("seed", seed);
    for (k, chunk) in chunks.iter().enumerate() {
        let eps = T::lit(eps_values[k]);
        let rep = check_hypotheses(chunk, eps, sigma, bounds);
        for (label, slack, _) in &rep.entries {
            r.push(format!("{label} eps={}", eps_values[k]), *slack, rep.threshold);
        }
    }
    // H7 on random in-ball pairs
    let radius = sample_radius(target);
    let mut rng = case_rng(seed, eps_values.len());
    let c = target.origin();
    let mut h7 = f64::INFINITY;
    for _ in 0..samples.min(1000) {
        let p = target.random_point_in_ball(&c, radius, &mut rng);
        let q = target.random_point_in_ball(&c, radius, &mut rng);
        let rho_v = T::lit(rho(rng.random::<f64>(), rng.random::<f64>()));
        if let Some(s) = fidelity_force_slack(target, rho_v, T::lit(3.0), &p, &q, radius) {
            h7 = h7.min(s.f64());
        }
    }
    r.push("H7 fidelity force", h7, -1e-12);
    r.finish()
}

// ---------------------------------------------------------------- Lipschitz scaling

/// Continuum signal `[0, 1] -> M` interpolating knots geodesically at
/// equally spaced parameters.
#[derive(Clone, Debug)]
pub struct PiecewiseGeodesic<T> {
    pub knots: Vec<Point<T>>,
}

impl<T: Real> PiecewiseGeodesic<T> {
    /// Sawtooth between `a` and `b` with `teeth` rising and falling ramps.
    pub fn sawtooth(a: Point<T>, b: Point<T>, teeth: usize) -> Self {
        let knots = (0..=2 * teeth).map(|k| if k % 2 == 0 { a.clone() } else { b.clone() }).collect();
        Self { knots }
    }

    pub fn sample(&self, m: &Manifold<T>, n: usize) -> Result<Field<T>> {
        let segs = self.knots.len() - 1;
        let values = (0..n)
            .map(|i| {
                let s = T::lit(i as f64 / (n - 1) as f64) * T::lit(segs as f64);
                let k = s.floor().to_usize().unwrap_or(0).min(segs - 1);
                let t = s - T::lit(k as f64);
                let (a, b) = (&self.knots[k], &self.knots[k + 1]);
                let v: Vec<T> = m.log(a, b)?.into_iter().map(|x| x * t).collect();
                Ok(m.exp_unchecked(a, &v))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Field::new(values))
    }

    /// Lipschitz constant of the continuum signal on `[0, 1]`.
    pub fn lipschitz(&self, m: &Manifold<T>) -> T {
        let segs = T::lit((self.knots.len() - 1) as f64);
        self.knots.windows(2).map(|w| m.dist(&w[0], &w[1]) * segs).fold(T::zero(), T::max)
    }
}

/// Runs continuation on `interval:n` for every size and compares
/// `Lip(u_n) / Lip(f)` with `C = 1.10 x` the ratio at the coarsest size.
/// The quadratic ratio `Lip(u_n) / Lip(f)^2` is recorded alongside. On flat
/// scalar targets each size is also solved by the taut string, which must
/// satisfy `Lip(u) <= Lip(f_n)`. Non-NPC targets give a report-only study.
pub fn lipschitz_scaling_study<T: Real>(
    m: &Manifold<T>,
    signal: &PiecewiseGeodesic<T>,
    sizes: &[usize],
    lambda: T,
    schedule: Option<&[Stage<T>]>,
    cfg: &SolveConfig<T>,
) -> Result<StudyReport> {
    if sizes.is_empty() {
        return Err(Error::InvalidParameter("no grid sizes".into()));
    }
    let lip_f = signal.lipschitz(m);
    let rows: Vec<(f64, f64, f64, Option<f64>)> = sizes
        .par_iter()
        .map(|&n| {
            let grid = Grid::interval(n)?;
            let f = signal.sample(m, n)?;
            let sched = match schedule {
                Some(s) => s.to_vec(),
                None => default_schedule(&grid, true),
            };
            let (_, reps) = continuation(m, &grid, &f, lambda, &sched, cfg)?;
            let lip_u = reps.last().expect("nonempty schedule").lipschitz_of_u;
            let stage_max = reps.iter().map(|r| r.lipschitz_of_u.f64()).fold(0.0, f64::max);
            let oracle = if m.dim() == 1 && m.kappa_hi() == T::zero() && m.kappa_lo() == T::zero() {
                let fs = f.to_scalars();
                let exact = taut_string_1d(&fs, lambda, grid.spacing())?;
                let lip_exact = lipschitz_constant(m, &grid, &exact.field())?;
                Some((lipschitz_constant(m, &grid, &f)? - lip_exact).f64())
            } else {
                None
            };
            Ok((lip_u.f64(), stage_max, lipschitz_constant(m, &grid, &f)?.f64(), oracle))
        })
        .collect::<Result<Vec<_>>>()?;
    let lf = lip_f.f64();
    let mut r = StudyReport::new("lipschitz-scaling")
        .param("manifold", m)
        .param("sizes", format!("{sizes:?}"))
        .param("lambda", lambda)
        .param("lip_f", lf);
    r.report_only = !m.is_npc();
    let ratio = |x: f64| if lf > 0.0 { x / lf } else { 0.0 };
    let c_study = 1.10 * ratio(rows[0].0);
    r.summary.insert("c_study".into(), c_study);
    for (&n, row) in sizes.iter().zip(&rows) {
        let q = if lf > 0.0 { row.0 / (lf * lf) } else { 0.0 };
        r.summary.insert(format!("ratio n={n}"), ratio(row.0));
        r.summary.insert(format!("quadratic ratio n={n}"), q);
        r.summary.insert(format!("max stage ratio n={n}"), ratio(row.1));
        r.push(format!("n={n} ratio bound"), c_study - ratio(row.0), -1e-12);
        if let Some(slack) = row.3 {
            r.push(format!("n={n} taut string Lip(u) <= Lip(f)"), slack, -1e-12);
        }
    }
    Ok(r.finish())
}

// ---------------------------------------------------------------- oracles

/// Solver with continuation against the taut string on random Lipschitz
/// scalar signals (random walks with steps in `[-0.1, 0.1]`), plus the
/// brute-force comparisons: two-node flat instance against the taut string
/// and a three-node sphere circle against the main solver.
pub fn oracle_study(n: usize, lambda: f64, trials: usize, seed: u64) -> Result<StudyReport> {
    let m = Manifold::<f64>::euclidean(1);
    let grid = Grid::interval(n)?;
    let schedule = geometric_schedule(0.1, 0.25, 6, false, 0.0);
    let cfg = SolveConfig { grad_tol: 1e-10, ..SolveConfig::default() };
    let gaps: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(seed, i);
            let mut x = 0.0;
            let fs: Vec<f64> = (0..n)
                .map(|_| {
                    x += rng.random_range(-0.1..0.1);
                    x
                })
                .collect();
            let (u, _) = continuation(&m, &grid, &Field::from_scalars(&fs), lambda, &schedule, &cfg)?;
            let exact = taut_string_1d(&fs, lambda, grid.spacing())?;
            Ok(u.to_scalars().iter().zip(&exact.values).map(|(a, b)| (a - b.coords[0]).abs()).fold(0.0, f64::max))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut r = StudyReport::new("oracle")
        .param("grid", &grid)
        .param("lambda", lambda)
        .param("trials", trials)
        .param("seed", seed);
    for (i, g) in gaps.iter().enumerate() {
        r.push(format!("taut string gap #{i}"), 1e-3 - g, 0.0);
    }
    r.summary.insert("max_gap".into(), gaps.iter().copied().fold(0.0, f64::max));

    // two flat nodes: brute force vs taut string
    let g2 = Grid::interval(2)?;
    let f2 = [0.0, 1.0];
    let exact = taut_string_1d(&f2, 3.0, 1.0)?;
    let bf = brute_force_small(&m, &g2, &Field::from_scalars(&f2), &EnergyParams::new(3.0, 0.0, 0.0), 401)?;
    let dev = bf.values.iter().zip(&exact.values).map(|(a, b)| (a.coords[0] - b.coords[0]).abs()).fold(0.0, f64::max);
    r.push("brute force 2 nodes vs taut string", bf.resolution - dev, -1e-12);

    // three sphere nodes: converged solver energy <= brute force + slack
    let s2 = Manifold::<f64>::sphere(2);
    let g3 = Grid::circle(3)?;
    let mut rng = case_rng(seed, trials);
    let c = s2.random_point_in_ball(&s2.origin(), 1.0, &mut rng);
    let f3 = random_field(&s2, 3, &c, 0.7, &mut rng);
    let params = EnergyParams::new(2.0, 0.0, 0.05);
    let bf3 = brute_force_small(&s2, &g3, &f3, &params, 13)?;
    let (u3, rep3) = minimize(&s2, &g3, &f3, &params, &cfg, None)?;
    let e3 = energy(&s2, &g3, &u3, &f3, &params)?.total;
    r.push("sphere 3 nodes solver <= brute force + slack", bf3.objective + bf3.energy_slack - e3, 0.0);
    r.summary.insert("sphere_solver_converged".into(), if rep3.flags.converged { 1.0 } else { 0.0 });
    r.summary.insert("sphere_net_resolution".into(), bf3.resolution);
    Ok(r.finish())
}

// ---------------------------------------------------------------- range invariance

/// Solves from `u0 = f` on random data inside `B(p, R)` and checks, for
/// every converged run, that all iterates stay in `B(p, R + 1e-8)`, that the
/// ball retraction does not lower the final energy, and the fidelity
/// control `(lambda/2) sum w d(u, f)^2 <= E(f)`.
pub fn range_study<T: Real>(
    m: &Manifold<T>,
    grid: &Grid<T>,
    trials: usize,
    lambda: T,
    seed: u64,
) -> Result<StudyReport> {
    let radius = sample_radius(m);
    let cfg = SolveConfig::default();
    let rows: Vec<Option<[f64; 3]>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(seed, i);
            let p = m.origin();
            let f = random_field(m, grid.len(), &p, radius, &mut rng);
            let params =
                EnergyParams::new(lambda, T::lit(rng.random_range(0.0..0.5)), T::lit(rng.random_range(0.01..0.3)));
            let cfg = SolveConfig { center: Some(p.clone()), ..cfg.clone() };
            let (u, rep) = minimize(m, grid, &f, &params, &cfg, None)?;
            if !rep.flags.converged {
                return Ok(None);
            }
            let range = (rep.data_radius + T::lit(1e-8) - rep.range_max_dist).f64();
            let e_u = energy(m, grid, &u, &f, &params)?;
            let retract_r = rep.data_radius.max(T::lit(1e-3)).min(m.convexity_radius() * T::lit(0.999));
            let pu = retract_field(m, &p, retract_r, &u)?;
            let e_pu = energy(m, grid, &pu, &f, &params)?.total;
            let e_f = energy(m, grid, &f, &f, &params)?.total;
            Ok(Some([range, (e_u.total - e_pu).f64(), (e_f - e_u.fidelity).f64()]))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut r =
        StudyReport::new("range").param("manifold", m).param("grid", grid).param("trials", trials).param("seed", seed);
    let mut converged = 0;
    for (i, row) in rows.iter().enumerate() {
        if let Some(row) = row {
            converged += 1;
            r.push(format!("run {i} range"), row[0], 0.0);
            r.push(format!("run {i} retraction"), row[1], -1e-12);
            r.push(format!("run {i} fidelity control"), row[2], 0.0);
        }
    }
    r.summary.insert("converged_runs".into(), converged as f64);
    Ok(r.finish())
}

// ---------------------------------------------------------------- mollifier

/// Constant fields are fixed exactly; on flat targets the mollifier equals
/// the normalized discrete convolution to `1e-12`; and the Lipschitz
/// amplification `C(delta) = Lip(f_delta) / Lip(f)` of a smooth field
/// `x -> exp_c(x1 v1 + x2 v2)` satisfies `C <= 2` with `max C / min C <= 1.5`
/// across the radii.
pub fn mollifier_study<T: Real>(
    m: &Manifold<T>,
    grid: &Grid<T>,
    deltas: &[T],
    kernel: Kernel,
    seed: u64,
) -> Result<StudyReport> {
    let mut rng = case_rng(seed, 0);
    let c = m.origin();
    let mut r = StudyReport::new("mollifier")
        .param("manifold", m)
        .param("grid", grid)
        .param("seed", seed)
        .param("deltas", format!("{:?}", deltas.iter().map(|d| d.f64()).collect::<Vec<_>>()));
    let q = m.random_point_in_ball(&c, sample_radius(m), &mut rng);
    let constant = Field::constant(&q, grid.len());
    let scale = sample_radius(m);
    let v1: Vec<T> = m.random_unit_tangent(&c, &mut rng).into_iter().map(|x| x * scale).collect();
    let v2: Vec<T> = m.random_unit_tangent(&c, &mut rng).into_iter().map(|x| x * scale).collect();
    let f = Field::new(
        (0..grid.len())
            .map(|i| {
                let [x1, x2] = grid.position(i);
                let v: Vec<T> = v1.iter().zip(&v2).map(|(&a, &b)| x1 * a + x2 * b).collect();
                m.exp(&c, &v)
            })
            .collect::<Result<Vec<_>>>()?,
    );
    let mut ratios = Vec::new();
    for &delta in deltas {
        let fixed = mollify(m, grid, &constant, delta, kernel)?;
        let exact = if fixed.field == constant { 0.0 } else { -1.0 };
        r.push(format!("constant fixed point delta={}", delta.f64()), exact, 0.0);
        let mo = mollify(m, grid, &f, delta, kernel)?;
        ratios.push(mo.lipschitz_ratio.f64());
        if m.kappa_lo() == T::zero() && m.kappa_hi() == T::zero() {
            let conv = convolution(grid, &f, delta, kernel);
            let err = mo
                .field
                .values
                .iter()
                .zip(&conv)
                .flat_map(|(a, b)| a.coords.iter().zip(b).map(|(x, y)| (*x - *y).abs().f64()))
                .fold(0.0, f64::max);
            r.push(format!("convolution agreement delta={}", delta.f64()), 1e-12 - err, 0.0);
        }
    }
    let cmax = ratios.iter().copied().fold(0.0, f64::max);
    let cmin = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    for (d, c) in deltas.iter().zip(&ratios) {
        r.summary.insert(format!("C delta={}", d.f64()), *c);
    }
    r.push("C <= 2", 2.0 - cmax, 0.0);
    r.push("C stable across delta", 1.5 - cmax / cmin.max(f64::MIN_POSITIVE), 0.0);
    Ok(r.finish())
}

/// Kernel-weighted average of flat values: `sum_y psi(|x-y|/delta) f(y) / sum_y psi`.
fn convolution<T: Real>(grid: &Grid<T>, f: &Field<T>, delta: T, kernel: Kernel) -> Vec<Vec<T>> {
    (0..grid.len())
        .map(|x| {
            let dim = f.values[x].coords.len();
            let mut acc = vec![T::zero(); dim];
            let mut total = T::zero();
            for y in 0..grid.len() {
                let w = if delta == T::zero() {
                    if x == y {
                        T::one()
                    } else {
                        T::zero()
                    }
                } else {
                    kernel.eval(grid.domain_distance(x, y) / delta)
                };
                total = total + w;
                acc.iter_mut().zip(&f.values[y].coords).for_each(|(a, &v)| *a = *a + w * v);
            }
            acc.into_iter().map(|a| a / total).collect()
        })
        .collect()
}
