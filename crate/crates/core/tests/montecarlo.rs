use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shockdetect_core::model::{self, ModelParams};
use shockdetect_core::montecarlo::{
    drive_path, estimate_bayes_risk, run_path, sample_disorder, simulate_detection, simulate_pi_path,
    DetectionSummary, PathEvent, PathRng,
};
use shockdetect_core::{MCEstimate, SimConfig};

fn logistic(l: f64) -> f64 {
    1.0 / (1.0 + (-l).exp())
}

fn small(n_paths: usize) -> SimConfig {
    SimConfig {
        n_paths,
        ..SimConfig::default()
    }
}

#[test]
fn jumps_follow_the_jump_map() {
    let params = ModelParams::figure1().with_prior(0.1);
    let config = small(200);
    let mut jumps = 0;
    for i in 0..config.n_paths {
        let mut rng = PathRng::new(&config, i);
        let d = sample_disorder(&params, 5.0, &mut rng.events);
        drive_path(&params, config.dt, 5.0, &d, &mut rng, |ev| {
            if let PathEvent::Jump { log_phi_before, log_phi_after, .. } = ev {
                let (a, b) = (logistic(log_phi_before), logistic(log_phi_after));
                assert!((b - a - params.p * (1.0 - a)).abs() <= 1e-12);
                jumps += 1;
            }
            true
        });
    }
    assert!(jumps > 1000);
}

#[test]
fn first_jump_from_zero_lands_at_p() {
    let params = ModelParams::figure1();
    let config = small(20);
    for i in 0..config.n_paths {
        let mut rng = PathRng::new(&config, i);
        let d = sample_disorder(&params, 5.0, &mut rng.events);
        let mut first = None;
        drive_path(&params, config.dt, 5.0, &d, &mut rng, |ev| {
            if let PathEvent::Jump { log_phi_after, .. } = ev {
                first = Some(logistic(log_phi_after));
                return false;
            }
            true
        });
        if let Some(pi) = first {
            assert!((pi - params.p).abs() < 1e-15);
        }
    }
}

#[test]
fn posterior_matches_the_explicit_likelihood_ratio() {
    let params = ModelParams::new(1.3, 1.5, 0.4, 0.5, 0.2).unwrap();
    let config = small(50);
    let mut pick = ChaCha8Rng::seed_from_u64(11);
    let phi0 = params.pi0 / (1.0 - params.pi0);
    let ln_l = |x: f64, t: f64| params.mu * x - 0.5 * params.mu * params.mu * t;
    for i in 0..config.n_paths {
        let mut rng = PathRng::new(&config, i);
        let d = sample_disorder(&params, 4.0, &mut rng.events);
        let targets: Vec<u64> = (0..10).map(|_| pick.random_range(1..4000u64)).collect();
        // ln L at each arrival.
        let mut at_jumps: Vec<f64> = Vec::new();
        let mut checked = 0;
        drive_path(&params, config.dt, 4.0, &d, &mut rng, |ev| {
            match ev {
                PathEvent::Jump { t, x, .. } => at_jumps.push(ln_l(x, t)),
                PathEvent::Step { t, x, n, log_phi, grid_index } => {
                    if grid_index.is_some_and(|k| targets.contains(&k)) {
                        let l = ln_l(x, t);
                        let mut phi = phi0 * l.exp();
                        for (k, lj) in at_jumps.iter().enumerate() {
                            phi += params.p * (1.0 - params.p).powi(k as i32) * (l - lj).exp();
                        }
                        phi /= (1.0 - params.p).powi(n as i32);
                        let exact = phi / (1.0 + phi);
                        assert!((exact - logistic(log_phi)).abs() <= 1e-10, "t = {t}");
                        checked += 1;
                    }
                }
            }
            true
        });
        assert!(checked >= 10);
    }
}

#[test]
fn posterior_stays_in_unit_interval_and_tends_to_one() {
    let params = ModelParams::figure1();
    let config = small(30);
    for i in 0..config.n_paths {
        let path = simulate_pi_path(&params, &config, 60.0, i).unwrap();
        // Far out the posterior rounds to one in double precision.
        for (t, pi) in path.t.iter().zip(&path.pi) {
            assert!((0.0..=1.0).contains(pi));
            assert!(*t > 5.0 || *pi < 1.0);
        }
        assert!(*path.pi.last().unwrap() > 0.99);
        assert_eq!(path.t.len(), path.pi.len());
    }
    assert!(simulate_pi_path(&params.with_prior(1.0), &config, 1.0, 0).is_err());
}

#[test]
fn posterior_is_a_submartingale() {
    let params = ModelParams::figure1().with_prior(0.05);
    let config = small(4000);
    let times = [250u64, 500, 1000, 2000];
    let mut sums = [0.0; 4];
    for i in 0..config.n_paths {
        let mut rng = PathRng::new(&config, i);
        let d = sample_disorder(&params, 2.0, &mut rng.events);
        drive_path(&params, config.dt, 2.0, &d, &mut rng, |ev| {
            if let PathEvent::Step { log_phi, grid_index: Some(k), .. } = ev {
                if let Some(j) = times.iter().position(|&m| m == k) {
                    sums[j] += logistic(log_phi);
                }
            }
            true
        });
    }
    assert!(sums.windows(2).all(|w| w[1] > w[0]), "{sums:?}");
}

#[test]
fn disorder_prior() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sure = ModelParams::figure1().with_prior(1.0);
    let d = sample_disorder(&sure, 3.0, &mut rng);
    assert_eq!((d.zeta, d.theta), (0, 0.0));
    let first = ModelParams::new(1.0, 2.0, 1.0, 0.5, 0.0).unwrap();
    for _ in 0..100 {
        let d = sample_disorder(&first, 3.0, &mut rng);
        assert_eq!(d.zeta, 1);
        assert_eq!(d.theta, d.arrivals[0]);
    }
    let params = ModelParams::figure1();
    let est = MCEstimate::from_samples((0..40_000).map(|_| sample_disorder(&params, 1.0, &mut rng).theta));
    assert!(est.agrees_with(1.0 / (params.lambda * params.p), 4.0, 0.0), "{est:?}");
}

#[test]
fn seeded_runs_are_reproducible() {
    let params = ModelParams::figure1();
    let config = small(500);
    let a = simulate_detection(0.7, &params, &config).unwrap();
    let b = simulate_detection(0.7, &params, &config).unwrap();
    assert_eq!(a, b);
    assert_eq!(a[17], run_path(0.7, &params, &config, 17));
    let other = SimConfig { seed: 1, ..config };
    assert_ne!(a, simulate_detection(0.7, &params, &other).unwrap());
}

#[test]
fn trivial_rules() {
    let config = small(200);
    let sure = ModelParams::figure1().with_prior(1.0);
    let est = estimate_bayes_risk(0.5, &sure, &config).unwrap();
    assert_eq!(est.mean, 0.0);
    let above = ModelParams::figure1().with_prior(0.8);
    for rec in simulate_detection(0.5, &above, &config).unwrap() {
        assert_eq!(rec.tau, 0.0);
        assert_eq!(rec.delay, 0.0);
        assert_eq!(rec.alarm_before_theta, rec.theta > 0.0);
    }
}

#[test]
fn alarm_time_bound_and_censoring() {
    let params = ModelParams::figure1();
    let config = small(20_000);
    for r in [0.3, 0.7, 0.9] {
        let recs = simulate_detection(r, &params, &config).unwrap();
        let s = DetectionSummary::from_records(&recs, params.c, false);
        let bound = 1.0 / (params.lambda * params.p * (1.0 - r)) + 2.0 * config.dt;
        assert!(s.alarm_time.mean <= bound, "r = {r}");
        assert!(s.censor_fraction < 1e-4);
    }
}

#[test]
fn antithetic_pairs_share_noise() {
    let params = ModelParams::figure1();
    let config = SimConfig { antithetic: true, ..small(4) };
    let mut a = PathRng::new(&config, 2);
    let mut b = PathRng::new(&config, 3);
    let za: f64 = a.noise.random();
    let zb: f64 = b.noise.random();
    assert_eq!(za, zb);
    assert_eq!((a.sign, b.sign), (1.0, -1.0));
    assert!(SimConfig { antithetic: true, ..small(3) }.validate().is_err());
    let recs = simulate_detection(0.7, &params, &config).unwrap();
    assert_eq!(recs.len(), 4);
}

#[test]
fn exit_before_first_arrival() {
    // Under P the innovation is a Brownian motion independent of N, so the
    // chance of reaching r before T_1 is psi(pi0) / psi(r).
    let params = ModelParams::figure1().with_prior(0.3);
    let r = 0.6;
    let roots = params.roots();
    let expected = model::psi(0.3, &roots).unwrap() / model::psi(r, &roots).unwrap();
    let config = small(20_000);
    let level = (r / (1.0 - r)).ln();
    let hits = (0..config.n_paths).map(|i| {
        let mut rng = PathRng::new(&config, i);
        let d = sample_disorder(&params, 50.0, &mut rng.events);
        let mut hit = false;
        drive_path(&params, config.dt, 50.0, &d, &mut rng, |ev| match ev {
            PathEvent::Step { log_phi, .. } => {
                hit = log_phi >= level;
                !hit
            }
            PathEvent::Jump { .. } => false,
        });
        f64::from(u8::from(hit))
    });
    let est = MCEstimate::from_samples(hits);
    // Discrete monitoring misses some crossings.
    assert!(est.agrees_with(expected, 4.0, 0.01), "{est:?} vs {expected}");
}
