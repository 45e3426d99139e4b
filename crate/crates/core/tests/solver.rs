use mrof_core::solver::{geometric_schedule, lipschitz_bounded};
use mrof_core::verify::PiecewiseGeodesic;
use mrof_core::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sawtooth_on(m: &Manifold64, n: usize, seed: u64) -> (Grid64, Field64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let end = m.random_point_at_distance(&m.origin(), 1.0f64.min(0.4 * m.convexity_radius()), &mut rng);
    let s = PiecewiseGeodesic::sawtooth(m.origin(), end, 2);
    (Grid::interval(n).unwrap(), s.sample(m, n).unwrap())
}

#[test]
fn continuation_lipschitz_stays_below_data() {
    for spec in ["hyperbolic:2", "spd:2", "euclidean:1"] {
        let m: Manifold64 = spec.parse().unwrap();
        for lambda in [10.0, 50.0, 200.0] {
            let (g, f) = sawtooth_on(&m, 96, 1);
            let lf = lipschitz_constant(&m, &g, &f).unwrap();
            let (_, reps) =
                continuation(&m, &g, &f, lambda, &default_schedule(&g, true), &SolveConfig::default()).unwrap();
            assert!(lipschitz_bounded(&reps, lf), "{spec} lambda {lambda}");
        }
    }
}

#[test]
fn smoothed_first_stage_understates_later_lipschitz_constants() {
    // stage 0 carries the largest eps, sigma and delta, so its minimizer is the flattest
    let m = Manifold64::hyperbolic(2);
    let (g, f) = sawtooth_on(&m, 128, 1);
    let (_, reps) = continuation(&m, &g, &f, 50.0, &default_schedule(&g, true), &SolveConfig::default()).unwrap();
    let lips: Vec<f64> = reps.iter().map(|r| r.lipschitz_of_u).collect();
    assert!(lips.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{lips:?}");
    assert!(!lipschitz_bounded(&reps, 1.05 * lips[0]));
}

#[test]
fn converged_runs_stay_in_data_ball_with_monotone_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for spec in ["hyperbolic:2", "spd:2", "sphere:2", "spd:3"] {
        let m: Manifold64 = spec.parse().unwrap();
        let g: Grid64 = "rect2d:6x5:rho=sphere_patch".parse().unwrap();
        let c = m.origin();
        let f = Field::new((0..g.len()).map(|_| m.random_point_in_ball(&c, 0.5, &mut rng)).collect());
        let cfg = SolveConfig { center: Some(c.clone()), ..SolveConfig::default() };
        let (u, rep) = minimize(&m, &g, &f, &EnergyParams::new(4.0, 0.1, 0.05), &cfg, None).unwrap();
        assert!(rep.flags.converged || rep.flags.stalled, "{spec} {:?}", rep.flags);
        assert!(rep.range_max_dist <= rep.data_radius + 1e-8, "{spec}");
        assert!(u.values.iter().all(|q| m.dist(&c, q) <= rep.data_radius + 1e-8));
        for w in rep.energy_trace.windows(2) {
            assert!(w[1].total <= w[0].total * (1.0 + 1e-14), "{spec}");
        }
        let grad = riemannian_gradient(&m, &g, &u, &f, &EnergyParams::new(4.0, 0.1, 0.05)).unwrap();
        let gmax = grad.iter().map(|t| m.tangent_norm(&t.base, &t.vec)).fold(0.0, f64::max);
        assert!((gmax - rep.final_grad_norm).abs() <= 1e-12 + 1e-9 * gmax);
    }
}

#[test]
fn sphere_continuation_from_noise_reaches_small_gradient() {
    let m = Manifold64::sphere(2);
    let g: Grid64 = "circle:48".parse().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let c = m.origin();
    let f = Field::new((0..48).map(|_| m.random_point_in_ball(&c, 0.4, &mut rng)).collect());
    let sched = geometric_schedule(0.1, 0.25, 4, false, 0.0);
    let (_, reps) = continuation(&m, &g, &f, 8.0, &sched, &SolveConfig::default()).unwrap();
    let last = reps.last().unwrap();
    assert!(last.flags.converged, "{:?}", last.flags);
    assert!(!last.flags.outside_strong_radius);
    // warm starts: each stage starts where the previous one stopped
    for w in reps.windows(2) {
        assert!(w[1].energy_trace[0].total <= w[0].final_energy().total + 1e-12);
    }
}

#[test]
fn out_of_range_data_on_sphere_is_rejected() {
    let m = Manifold64::sphere(2);
    let g = Grid64::interval(3).unwrap();
    let f = Field::new(vec![
        Point::new(vec![0.0, 0.0, 1.0]),
        Point::new(vec![1.0, 0.0, 0.0]),
        Point::new(vec![0.0, 0.0, -1.0]),
    ]);
    let r = minimize(&m, &g, &f, &EnergyParams::new(1.0, 0.0, 0.1), &SolveConfig::default(), None);
    assert!(r.is_err());
}
