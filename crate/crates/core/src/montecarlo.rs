//! Exact path simulation of the observations and the posterior process.
//!
//! Paths are built under the physical measure: the disorder index `zeta`,
//! the arrival times and `Theta = T_zeta` are drawn first, then `X` is
//! advanced by exact Gaussian increments on the `dt` mesh merged with the
//! arrival times, with drift `mu` after `Theta`. The posterior is carried as
//! `l = ln Phi`, `Pi = Phi / (1 + Phi)`:
//!
//! * between arrivals `dl = mu dX - mu^2 dt / 2`,
//! * at an arrival `Phi -> (Phi + p) / (1 - p)`, i.e. `Pi` jumps by
//!   `p (1 - Pi-)`.
//!
//! Every path owns two ChaCha8 streams derived from `(seed, path index)`:
//! one for the disorder and arrivals and one for the Gaussian increments.
//! With antithetic pairing, paths `2k` and `2k + 1` share the Gaussian
//! stream with opposite signs while their disorder draws stay independent.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::error::{Error, Result};
use crate::math;
use crate::model::ModelParams;

/// Simulation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    /// Hard cap on the alarm time; `None` selects `50 / (lambda p (1 - r))`.
    pub horizon: Option<f64>,
    pub n_paths: usize,
    pub seed: u64,
    pub antithetic: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            horizon: None,
            n_paths: 100_000,
            seed: 0x5eed_2024,
            antithetic: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "dt",
                value: self.dt,
                reason: "must be positive",
            });
        }
        if let Some(h) = self.horizon {
            if h.is_nan() || h <= 0.0 {
                return Err(Error::InvalidParameter {
                    name: "horizon",
                    value: h,
                    reason: "must be positive",
                });
            }
        }
        if self.n_paths == 0 {
            return Err(Error::InvalidParameter {
                name: "n_paths",
                value: 0.0,
                reason: "need at least one path",
            });
        }
        if self.antithetic && self.n_paths % 2 == 1 {
            return Err(Error::InvalidParameter {
                name: "n_paths",
                value: self.n_paths as f64,
                reason: "antithetic pairing needs an even number of paths",
            });
        }
        Ok(())
    }

    /// Horizon used for threshold `r`.
    pub fn horizon_for(&self, r: f64, params: &ModelParams) -> f64 {
        self.horizon
            .unwrap_or_else(|| default_horizon(r, params))
    }
}

/// `50 / (lambda p (1 - r))`, fifty times the bound on the mean alarm time.
pub fn default_horizon(r: f64, params: &ModelParams) -> f64 {
    50.0 / (params.lambda * params.p * (1.0 - r.min(1.0 - 1e-9)))
}

/// The two random streams of one path.
#[derive(Debug, Clone)]
pub struct PathRng {
    pub events: ChaCha8Rng,
    pub noise: ChaCha8Rng,
    /// `-1` for the second path of an antithetic pair.
    pub sign: f64,
}

impl PathRng {
    pub fn new(config: &SimConfig, index: usize) -> Self {
        let i = index as u64;
        let mut events = ChaCha8Rng::seed_from_u64(config.seed);
        events.set_stream(2 * i);
        let (noise_index, sign) = if config.antithetic {
            (i - i % 2, if i % 2 == 1 { -1.0 } else { 1.0 })
        } else {
            (i, 1.0)
        };
        let mut noise = ChaCha8Rng::seed_from_u64(config.seed);
        noise.set_stream(2 * noise_index + 1);
        Self { events, noise, sign }
    }

    #[inline]
    fn gaussian(&mut self) -> f64 {
        let z: f64 = StandardNormal.sample(&mut self.noise);
        self.sign * z
    }
}

/// Disorder index, arrival times and disorder time of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct Disorder {
    pub zeta: u64,
    /// All arrivals up to the horizon, extended if needed up to the
    /// `zeta`-th.
    pub arrivals: Vec<f64>,
    /// `T_zeta`, or `0` when `zeta = 0`.
    pub theta: f64,
}

/// Draws `zeta` from the zero-modified geometric prior, the arrivals of the
/// rate-`lambda` Poisson process on `[0, horizon]` and `Theta = T_zeta`.
pub fn sample_disorder<R: Rng + ?Sized>(params: &ModelParams, horizon: f64, rng: &mut R) -> Disorder {
    let zeta = if rng.random::<f64>() < params.pi0 {
        0
    } else if params.p >= 1.0 {
        1
    } else {
        // Trials up to and including the first success.
        let u: f64 = 1.0 - rng.random::<f64>();
        1 + (math::ln(u) / math::ln(1.0 - params.p)) as u64
    };
    let exp = Exp::new(params.lambda).expect("lambda validated positive");
    let mut arrivals = Vec::new();
    let mut t = 0.0;
    loop {
        t += exp.sample(rng);
        if t > horizon && arrivals.len() as u64 >= zeta {
            break;
        }
        arrivals.push(t);
    }
    let theta = if zeta == 0 { 0.0 } else { arrivals[zeta as usize - 1] };
    Disorder {
        zeta,
        arrivals,
        theta,
    }
}

/// What the path driver reports to its observer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathEvent {
    /// End of a diffusion step. `grid_index` is set when `t` is a point of
    /// the `dt` mesh.
    Step {
        t: f64,
        x: f64,
        n: u32,
        log_phi: f64,
        grid_index: Option<u64>,
    },
    /// An arrival at `t`; `n` counts it.
    Jump {
        t: f64,
        x: f64,
        n: u32,
        log_phi_before: f64,
        log_phi_after: f64,
    },
}

/// Advances one path on `[0, horizon]`, calling `observe` after every step
/// and every jump until it returns `false`. The initial state is not
/// reported. Returns the time reached.
pub fn drive_path(
    params: &ModelParams,
    dt: f64,
    horizon: f64,
    disorder: &Disorder,
    rng: &mut PathRng,
    mut observe: impl FnMut(PathEvent) -> bool,
) -> f64 {
    let mu = params.mu;
    let half_mu2 = 0.5 * mu * mu;
    let ln_p = math::ln(params.p);
    let ln_1mp = if params.p < 1.0 { math::ln(1.0 - params.p) } else { f64::NEG_INFINITY };
    let mut log_phi = initial_log_phi(params.pi0);
    let mut t = 0.0;
    let mut x = 0.0;
    let mut n: u32 = 0;
    let mut k: u64 = 0;
    let mut next_arrival = disorder.arrivals.first().copied().unwrap_or(f64::INFINITY);
    loop {
        let next_grid = ((k + 1) as f64 * dt).min(horizon);
        let (t_next, arrival) = if next_arrival <= next_grid {
            (next_arrival, true)
        } else {
            (next_grid, false)
        };
        let h = t_next - t;
        if h > 0.0 {
            // Theta is the zeta-th arrival, so the drift is on once n reaches zeta.
            let drift = if n as u64 >= disorder.zeta { mu * h } else { 0.0 };
            let dx = math::sqrt(h) * rng.gaussian() + drift;
            x += dx;
            log_phi += mu * dx - half_mu2 * h;
        }
        t = t_next;
        let on_grid = !arrival || next_arrival == next_grid;
        if on_grid {
            k += 1;
        }
        let grid_index = on_grid.then_some(k);
        if !observe(PathEvent::Step {
            t,
            x,
            n,
            log_phi,
            grid_index,
        }) {
            return t;
        }
        if arrival {
            let before = log_phi;
            log_phi = if params.p >= 1.0 {
                f64::INFINITY
            } else {
                math::log_add_exp(log_phi, ln_p) - ln_1mp
            };
            n += 1;
            next_arrival = disorder.arrivals.get(n as usize).copied().unwrap_or(f64::INFINITY);
            if !observe(PathEvent::Jump {
                t,
                x,
                n,
                log_phi_before: before,
                log_phi_after: log_phi,
            }) {
                return t;
            }
        }
        if t >= horizon {
            return t;
        }
    }
}

fn initial_log_phi(pi0: f64) -> f64 {
    if pi0 <= 0.0 {
        f64::NEG_INFINITY
    } else if pi0 >= 1.0 {
        f64::INFINITY
    } else {
        math::ln(pi0) - math::ln(1.0 - pi0)
    }
}

/// One simulated detection episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathRecord {
    pub theta: f64,
    pub zeta: u64,
    pub tau: f64,
    pub alarm_before_theta: bool,
    /// `(tau - theta)^+`.
    pub delay: f64,
    /// The horizon was reached without an alarm; then `tau` is the horizon.
    pub censored: bool,
}

impl PathRecord {
    fn new(theta: f64, zeta: u64, tau: f64, censored: bool) -> Self {
        Self {
            theta,
            zeta,
            tau,
            alarm_before_theta: tau < theta,
            delay: (tau - theta).max(0.0),
            censored,
        }
    }

    /// `1{tau < Theta} + c (tau - Theta)^+`.
    pub fn bayes_loss(&self, c: f64) -> f64 {
        f64::from(u8::from(self.alarm_before_theta)) + c * self.delay
    }
}

/// First time `Pi >= r` on the merged grid, checking both sides of every
/// jump.
pub fn run_detection(r: f64, params: &ModelParams, config: &SimConfig, rng: &mut PathRng) -> PathRecord {
    let horizon = config.horizon_for(r, params);
    let disorder = sample_disorder(params, horizon, &mut rng.events);
    if params.pi0 >= r {
        return PathRecord::new(disorder.theta, disorder.zeta, 0.0, false);
    }
    let level = math::ln(r) - math::ln(1.0 - r);
    let mut tau = None;
    let reached = drive_path(params, config.dt, horizon, &disorder, rng, |ev| {
        let (t, l) = match ev {
            PathEvent::Step { t, log_phi, .. } => (t, log_phi),
            PathEvent::Jump { t, log_phi_after, .. } => (t, log_phi_after),
        };
        if l >= level {
            tau = Some(t);
            false
        } else {
            true
        }
    });
    match tau {
        Some(t) => PathRecord::new(disorder.theta, disorder.zeta, t, false),
        None => PathRecord::new(disorder.theta, disorder.zeta, reached, true),
    }
}

/// [`run_detection`] for path `index` of `config`.
pub fn run_path(r: f64, params: &ModelParams, config: &SimConfig, index: usize) -> PathRecord {
    let mut rng = PathRng::new(config, index);
    run_detection(r, params, config, &mut rng)
}

/// A sampled trajectory of `(t, X_t, N_t, Pi_t)`. Each arrival contributes
/// two rows at the same time, before and after the jump.
#[derive(Debug, Clone, PartialEq)]
pub struct PiPath {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub n: Vec<u32>,
    pub pi: Vec<f64>,
    pub disorder: Disorder,
}

impl PiPath {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Simulates path `index` of `config` on `[0, horizon]` without stopping.
pub fn simulate_pi_path(params: &ModelParams, config: &SimConfig, horizon: f64, index: usize) -> Result<PiPath> {
    config.validate()?;
    if params.pi0 >= 1.0 {
        return Err(Error::InvalidParameter {
            name: "pi0",
            value: params.pi0,
            reason: "a certain disorder has a constant posterior",
        });
    }
    let mut rng = PathRng::new(config, index);
    let disorder = sample_disorder(params, horizon, &mut rng.events);
    let mut path = PiPath {
        t: alloc::vec![0.0],
        x: alloc::vec![0.0],
        n: alloc::vec![0],
        pi: alloc::vec![params.pi0],
        disorder: Disorder {
            zeta: 0,
            arrivals: Vec::new(),
            theta: 0.0,
        },
    };
    drive_path(params, config.dt, horizon, &disorder, &mut rng, |ev| {
        let (t, x, n, l) = match ev {
            PathEvent::Step { t, x, n, log_phi, .. } => (t, x, n, log_phi),
            PathEvent::Jump { t, x, n, log_phi_after, .. } => (t, x, n, log_phi_after),
        };
        path.t.push(t);
        path.x.push(x);
        path.n.push(n);
        path.pi.push(math::logistic(l));
        true
    });
    path.disorder = disorder;
    Ok(path)
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
    pub censor_fraction: f64,
}

impl MCEstimate {
    /// Mean and standard error of iid samples.
    pub fn from_samples(samples: impl IntoIterator<Item = f64>) -> Self {
        let mut n = 0usize;
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for s in samples {
            n += 1;
            let d = s - mean;
            mean += d / n as f64;
            m2 += d * (s - mean);
        }
        let stderr = if n > 1 { math::sqrt(m2 / ((n - 1) as f64) / n as f64) } else { 0.0 };
        Self {
            mean,
            stderr,
            n,
            censor_fraction: 0.0,
        }
    }

    /// Like [`Self::from_samples`]; with antithetic pairing the standard
    /// error is taken over pair means, which are independent.
    pub fn from_paired(samples: &[f64], antithetic: bool) -> Self {
        if !antithetic {
            return Self::from_samples(samples.iter().copied());
        }
        let pairs = MCEstimate::from_samples(samples.chunks(2).map(|c| c.iter().sum::<f64>() / c.len() as f64));
        Self {
            mean: pairs.mean,
            stderr: pairs.stderr,
            n: samples.len(),
            censor_fraction: 0.0,
        }
    }

    /// `|mean - target| <= k stderr + slack`.
    pub fn agrees_with(&self, target: f64, k: f64, slack: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr + slack
    }
}

/// Estimates of one threshold rule from a batch of paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionSummary {
    pub bayes_risk: MCEstimate,
    pub false_alarm: MCEstimate,
    pub delay: MCEstimate,
    pub alarm_time: MCEstimate,
    pub censor_fraction: f64,
}

impl DetectionSummary {
    /// Aggregates records in path order. `c` weights the delay in the Bayes
    /// risk.
    pub fn from_records(records: &[PathRecord], c: f64, antithetic: bool) -> Self {
        let censored = records.iter().filter(|r| r.censored).count();
        let censor_fraction = if records.is_empty() { 0.0 } else { censored as f64 / records.len() as f64 };
        let est = |f: &dyn Fn(&PathRecord) -> f64| {
            let v: Vec<f64> = records.iter().map(f).collect();
            MCEstimate {
                censor_fraction,
                ..MCEstimate::from_paired(&v, antithetic)
            }
        };
        Self {
            bayes_risk: est(&|r| r.bayes_loss(c)),
            false_alarm: est(&|r| f64::from(u8::from(r.alarm_before_theta))),
            delay: est(&|r| r.delay),
            alarm_time: est(&|r| r.tau),
            censor_fraction,
        }
    }
}

/// Runs all paths of `config` in order on the calling thread.
pub fn simulate_detection(r: f64, params: &ModelParams, config: &SimConfig) -> Result<Vec<PathRecord>> {
    params.validate()?;
    config.validate()?;
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidParameter {
            name: "r",
            value: r,
            reason: "threshold must lie in (0, 1)",
        });
    }
    Ok((0..config.n_paths).map(|i| run_path(r, params, config, i)).collect())
}

/// Bayes risk `P(tau < Theta) + c E(tau - Theta)^+` of the `r`-threshold rule.
pub fn estimate_bayes_risk(r: f64, params: &ModelParams, config: &SimConfig) -> Result<MCEstimate> {
    let recs = simulate_detection(r, params, config)?;
    Ok(DetectionSummary::from_records(&recs, params.c, config.antithetic).bayes_risk)
}

/// False-alarm probability `P(tau < Theta)` of the `r`-threshold rule.
pub fn estimate_false_alarm(r: f64, params: &ModelParams, config: &SimConfig) -> Result<MCEstimate> {
    let recs = simulate_detection(r, params, config)?;
    Ok(DetectionSummary::from_records(&recs, params.c, config.antithetic).false_alarm)
}

/// Expected delay `E(tau - Theta)^+` of the `r`-threshold rule.
pub fn estimate_delay(r: f64, params: &ModelParams, config: &SimConfig) -> Result<MCEstimate> {
    let recs = simulate_detection(r, params, config)?;
    Ok(DetectionSummary::from_records(&recs, params.c, config.antithetic).delay)
}

/// Window starts of the independence check; each window has length one.
pub const INDEPENDENCE_WINDOWS: [f64; 4] = [0.0, 0.5, 1.0, 2.0];
const INDEPENDENCE_HORIZON: f64 = 3.0;

/// Increments of the innovation process `W^ = X - mu int Pi ds` and of `N`
/// over the windows `[s, s + 1]`, `s` in [`INDEPENDENCE_WINDOWS`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndependenceSample {
    pub dw: [f64; 4],
    pub dn: [f64; 4],
}

/// Simulates path `index` without stopping and records the window
/// increments. `int Pi ds` uses the trapezoid rule on the merged grid.
pub fn independence_sample(params: &ModelParams, config: &SimConfig, index: usize) -> IndependenceSample {
    let mut rng = PathRng::new(config, index);
    let disorder = sample_disorder(params, INDEPENDENCE_HORIZON, &mut rng.events);
    let marks: [u64; 6] = [0.0, 0.5, 1.0, 1.5, 2.0, 3.0].map(|s: f64| math::round(s / config.dt) as u64);
    let mut w_at = [0.0; 6];
    let mut n_at = [0u32; 6];
    let mut integral = 0.0;
    let mut t_prev = 0.0;
    let mut pi_prev = params.pi0;
    drive_path(params, config.dt, INDEPENDENCE_HORIZON, &disorder, &mut rng, |ev| {
        match ev {
            PathEvent::Step {
                t,
                x,
                n,
                log_phi,
                grid_index,
            } => {
                let pi = math::logistic(log_phi);
                integral += 0.5 * (pi + pi_prev) * (t - t_prev);
                t_prev = t;
                pi_prev = pi;
                if let Some(k) = grid_index {
                    for (j, &m) in marks.iter().enumerate() {
                        if m == k {
                            w_at[j] = x - params.mu * integral;
                            n_at[j] = n;
                        }
                    }
                }
            }
            PathEvent::Jump { log_phi_after, .. } => {
                pi_prev = math::logistic(log_phi_after);
            }
        }
        true
    });
    // Window [s, s + 1] runs from mark a to mark b.
    let spans = [(0, 2), (1, 3), (2, 4), (4, 5)];
    let mut out = IndependenceSample {
        dw: [0.0; 4],
        dn: [0.0; 4],
    };
    for (j, &(a, b)) in spans.iter().enumerate() {
        out.dw[j] = w_at[b] - w_at[a];
        out.dn[j] = f64::from(n_at[b] - n_at[a]);
    }
    out
}

/// Sample correlation of `W^` and `N` increments over one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowCorrelation {
    pub start: f64,
    pub corr: f64,
    /// `3 / sqrt(n)`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndependenceReport {
    pub n_paths: usize,
    pub windows: Vec<WindowCorrelation>,
    /// Sample variance of `W^_1 - W^_0` with its standard error.
    pub var_w: MCEstimate,
    /// Mean of `N_1 - N_0`.
    pub mean_n: MCEstimate,
    pub lambda: f64,
}

impl IndependenceReport {
    pub fn from_samples(samples: &[IndependenceSample], lambda: f64) -> Self {
        let n = samples.len();
        let nf = n as f64;
        let windows = (0..4)
            .map(|j| {
                let (mut sw, mut sn) = (0.0, 0.0);
                for s in samples {
                    sw += s.dw[j];
                    sn += s.dn[j];
                }
                let (mw, mn) = (sw / nf, sn / nf);
                let (mut cww, mut cnn, mut cwn) = (0.0, 0.0, 0.0);
                for s in samples {
                    let (a, b) = (s.dw[j] - mw, s.dn[j] - mn);
                    cww += a * a;
                    cnn += b * b;
                    cwn += a * b;
                }
                WindowCorrelation {
                    start: INDEPENDENCE_WINDOWS[j],
                    corr: cwn / math::sqrt(cww * cnn),
                    bound: 3.0 / math::sqrt(nf),
                }
            })
            .collect();
        let mean_w = samples.iter().map(|s| s.dw[0]).sum::<f64>() / nf;
        let var_w = MCEstimate::from_samples(samples.iter().map(|s| {
            let d = s.dw[0] - mean_w;
            d * d
        }));
        let mean_n = MCEstimate::from_samples(samples.iter().map(|s| s.dn[0]));
        Self {
            n_paths: n,
            windows,
            var_w,
            mean_n,
            lambda,
        }
    }

    pub fn correlations_ok(&self) -> bool {
        self.windows.iter().all(|w| w.corr.abs() <= w.bound)
    }

    pub fn variance_ok(&self) -> bool {
        self.var_w.agrees_with(1.0, 3.0, 0.0)
    }

    pub fn arrivals_ok(&self) -> bool {
        self.mean_n.agrees_with(self.lambda, 3.0, 0.0)
    }

    pub fn passed(&self) -> bool {
        self.correlations_ok() && self.variance_ok() && self.arrivals_ok()
    }
}

/// Sequential independence check over all paths of `config`.
pub fn check_independence(params: &ModelParams, config: &SimConfig) -> Result<IndependenceReport> {
    params.validate()?;
    config.validate()?;
    let samples: Vec<_> = (0..config.n_paths)
        .map(|i| independence_sample(params, config, i))
        .collect();
    Ok(IndependenceReport::from_samples(&samples, params.lambda))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize) -> SimConfig {
        SimConfig {
            n_paths: n,
            ..SimConfig::default()
        }
    }

    #[test]
    fn degenerate_priors() {
        let c = cfg(1);
        let mut rng = PathRng::new(&c, 0);
        let sure = ModelParams::figure1().with_prior(1.0);
        for _ in 0..100 {
            let d = sample_disorder(&sure, 10.0, &mut rng.events);
            assert_eq!((d.zeta, d.theta), (0, 0.0));
        }
        let first = ModelParams::new(1.0, 2.0, 1.0, 0.5, 0.0).unwrap();
        for _ in 0..100 {
            let d = sample_disorder(&first, 10.0, &mut rng.events);
            assert_eq!(d.zeta, 1);
            assert_eq!(d.theta, d.arrivals[0]);
        }
    }

    #[test]
    fn alarm_at_time_zero_when_prior_exceeds_threshold() {
        let params = ModelParams::figure1().with_prior(0.6);
        let rec = run_path(0.5, &params, &cfg(1), 3);
        assert_eq!(rec.tau, 0.0);
        assert_eq!(rec.delay, 0.0);
        assert_eq!(rec.alarm_before_theta, rec.theta > 0.0);
        let sure = ModelParams::figure1().with_prior(1.0);
        let recs = simulate_detection(0.5, &sure, &cfg(50)).unwrap();
        assert!(recs.iter().all(|r| r.bayes_loss(0.5) == 0.0));
    }

    #[test]
    fn posterior_waits_for_the_first_arrival() {
        let params = ModelParams::figure1();
        let path = simulate_pi_path(&params, &cfg(1), 5.0, 7).unwrap();
        let t1 = path.disorder.arrivals[0];
        for i in 0..path.len() {
            if path.t[i] < t1 || (path.t[i] == t1 && path.n[i] == 0) {
                assert_eq!(path.pi[i], 0.0);
            }
            if path.t[i] == t1 && path.n[i] == 1 {
                assert!((path.pi[i] - 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let params = ModelParams::figure1();
        let c = cfg(4);
        let a = simulate_detection(0.7, &params, &c).unwrap();
        let b = simulate_detection(0.7, &params, &c).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
    }

    #[test]
    fn estimates_of_constant_samples() {
        let e = MCEstimate::from_samples([2.0; 10]);
        assert_eq!((e.mean, e.stderr, e.n), (2.0, 0.0, 10));
        let e = MCEstimate::from_samples([0.0, 1.0]);
        assert!((e.stderr - 0.5).abs() < 1e-15);
        let e = MCEstimate::from_paired(&[1.0, -1.0, 3.0, -3.0], true);
        assert_eq!((e.mean, e.stderr), (0.0, 0.0));
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig { dt: 0.0, ..cfg(1) }.validate().is_err());
        assert!(SimConfig { antithetic: true, ..cfg(3) }.validate().is_err());
        assert!(SimConfig { horizon: Some(-1.0), ..cfg(3) }.validate().is_err());
        assert!(cfg(0).validate().is_err());
    }
}
