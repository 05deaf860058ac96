//! Closed-form primitives of the model: parameters, the roots of the
//! characteristic quadratic, the eigenfunctions `psi`/`eta` of the pre-jump
//! diffusion, the jump map and the running/terminal costs.
//!
//! Between arrivals the posterior probability follows
//! `dY = mu Y (1 - Y) dW`, whose generator is
//! `A f = mu^2 pi^2 (1 - pi)^2 f'' / 2`. The functions
//! `psi(pi) = pi^m1 (1 - pi)^(1 - m1)` and `eta(pi) = pi^m2 (1 - pi)^(1 - m2)`
//! solve `A f = lambda f`, where `m1 > 1 > 0 > m2` are the roots of
//! `m (m - 1) = 2 lambda / mu^2`.

use crate::error::{Error, Result};
use crate::math;

/// Smallest distance from `{0, 1}` at which the public eigenfunction helpers
/// evaluate; arguments closer to an endpoint are clamped.
pub const EIGEN_CLAMP: f64 = 1e-12;

/// One instance of the detection problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Post-disorder drift of the observed Wiener process.
    pub mu: f64,
    /// Arrival rate of the Poisson process.
    pub lambda: f64,
    /// Probability that a given arrival carries the disorder.
    pub p: f64,
    /// Cost per unit of detection delay. Zero is admitted only for the
    /// false-alarm operator.
    pub c: f64,
    /// Prior probability that the disorder is already present at time zero.
    pub pi0: f64,
}

impl ModelParams {
    pub fn new(mu: f64, lambda: f64, p: f64, c: f64, pi0: f64) -> Result<Self> {
        let params = Self {
            mu,
            lambda,
            p,
            c,
            pi0,
        };
        params.validate()?;
        Ok(params)
    }

    /// Parameters of the worked example used throughout the tests:
    /// `mu = 1, lambda = 2, p = 0.5, c = 0.5, pi = 0`.
    pub fn figure1() -> Self {
        Self {
            mu: 1.0,
            lambda: 2.0,
            p: 0.5,
            c: 0.5,
            pi0: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn bad(name: &'static str, value: f64, reason: &'static str) -> Result<()> {
            Err(Error::InvalidParameter {
                name,
                value,
                reason,
            })
        }
        if !self.mu.is_finite() || self.mu == 0.0 {
            return bad("mu", self.mu, "must be finite and nonzero");
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return bad("lambda", self.lambda, "must be positive");
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return bad("p", self.p, "must lie in (0, 1]");
        }
        if !(self.c.is_finite() && self.c >= 0.0) {
            return bad("c", self.c, "must be nonnegative");
        }
        if !(0.0..=1.0).contains(&self.pi0) {
            return bad("pi0", self.pi0, "must lie in [0, 1]");
        }
        Ok(())
    }

    /// True when the parameters describe the false-alarm operator (`c = 0`),
    /// which has no delay cost and therefore no Bayes-optimal threshold.
    pub fn is_false_alarm_only(&self) -> bool {
        self.c == 0.0
    }

    pub fn with_cost(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn with_prior(mut self, pi0: f64) -> Self {
        self.pi0 = pi0;
        self
    }

    /// Squared volatility `mu^2 pi^2 (1 - pi)^2` of the pre-jump diffusion.
    #[inline]
    pub fn sigma2(&self, pi: f64) -> f64 {
        let s = self.mu * pi * (1.0 - pi);
        s * s
    }

    pub fn roots(&self) -> Roots {
        Roots::from_rates(self.mu, self.lambda)
    }
}

/// Roots `m1 > 1` and `m2 < 0` of `m (m - 1) = 2 lambda / mu^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Roots {
    pub m1: f64,
    pub m2: f64,
}

impl Roots {
    pub fn from_rates(mu: f64, lambda: f64) -> Self {
        let disc = math::sqrt(1.0 + 8.0 * lambda / (mu * mu));
        let m1 = 0.5 * (1.0 + disc);
        // 1 - m1 is exact enough here and keeps m1 + m2 = 1 to the last bit.
        let m2 = 1.0 - m1;
        Self { m1, m2 }
    }

    /// `m1 - m2`, the Wronskian of `psi` and `eta`.
    #[inline]
    pub fn wronskian(&self) -> f64 {
        self.m1 - self.m2
    }

    /// `ln psi(pi)` for `pi` in `(0, 1)`, without clamping.
    #[inline]
    pub fn ln_psi(&self, pi: f64) -> f64 {
        self.m1 * math::ln(pi) + (1.0 - self.m1) * math::ln(1.0 - pi)
    }

    /// `ln eta(pi)` for `pi` in `(0, 1)`, without clamping.
    #[inline]
    pub fn ln_eta(&self, pi: f64) -> f64 {
        self.m2 * math::ln(pi) + (1.0 - self.m2) * math::ln(1.0 - pi)
    }

    /// `psi'(pi) / psi(pi) = (m1 - pi) / (pi (1 - pi))`.
    #[inline]
    pub fn psi_log_slope(&self, pi: f64) -> f64 {
        (self.m1 - pi) / (pi * (1.0 - pi))
    }

    /// `eta'(pi) / eta(pi) = (m2 - pi) / (pi (1 - pi))`.
    #[inline]
    pub fn eta_log_slope(&self, pi: f64) -> f64 {
        (self.m2 - pi) / (pi * (1.0 - pi))
    }
}

/// Convenience wrapper for [`ModelParams::roots`].
pub fn compute_roots(params: &ModelParams) -> Result<Roots> {
    params.validate()?;
    Ok(params.roots())
}

fn open_unit(pi: f64) -> Result<f64> {
    if pi > 0.0 && pi < 1.0 {
        Ok(pi.clamp(EIGEN_CLAMP, 1.0 - EIGEN_CLAMP))
    } else {
        Err(Error::Domain {
            value: pi,
            domain: "(0, 1)",
        })
    }
}

/// Increasing eigenfunction `psi(pi) = pi^m1 (1 - pi)^(1 - m1)`.
pub fn psi(pi: f64, roots: &Roots) -> Result<f64> {
    let pi = open_unit(pi)?;
    Ok(math::exp(roots.ln_psi(pi)))
}

/// Decreasing eigenfunction `eta(pi) = pi^m2 (1 - pi)^(1 - m2)`.
pub fn eta(pi: f64, roots: &Roots) -> Result<f64> {
    let pi = open_unit(pi)?;
    Ok(math::exp(roots.ln_eta(pi)))
}

pub fn psi_prime(pi: f64, roots: &Roots) -> Result<f64> {
    let pi = open_unit(pi)?;
    Ok(math::exp(roots.ln_psi(pi)) * roots.psi_log_slope(pi))
}

pub fn eta_prime(pi: f64, roots: &Roots) -> Result<f64> {
    let pi = open_unit(pi)?;
    Ok(math::exp(roots.ln_eta(pi)) * roots.eta_log_slope(pi))
}

/// Jump map applied to the posterior at an arrival: `pi + p (1 - pi)`.
#[inline]
pub fn jump_map(pi: f64, p: f64) -> f64 {
    pi + p * (1.0 - pi)
}

/// Running cost `g(pi) = c pi`.
#[inline]
pub fn cost_g(pi: f64, c: f64) -> f64 {
    c * pi
}

/// Terminal cost `h(pi) = 1 - pi`.
#[inline]
pub fn cost_h(pi: f64) -> f64 {
    1.0 - pi
}

/// Closed-form threshold for `w = 0`: `m1 / ((m1 - 1) c / lambda + m1)`.
/// Upper end of the bracket containing every threshold.
pub fn threshold_upper(params: &ModelParams, roots: &Roots) -> f64 {
    let m1 = roots.m1;
    m1 / ((m1 - 1.0) * params.c / params.lambda + m1)
}

/// Closed-form threshold for `w = h`: `m1 p / ((m1 - 1) c / lambda + m1 p)`.
/// Lower end of the bracket containing every threshold.
pub fn threshold_lower(params: &ModelParams, roots: &Roots) -> f64 {
    let m1p = roots.m1 * params.p;
    m1p / ((roots.m1 - 1.0) * params.c / params.lambda + m1p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> (ModelParams, Roots) {
        let params = ModelParams::figure1();
        (params, params.roots())
    }

    #[test]
    fn roots_match_quadratic_formula() {
        let (_, roots) = fig1();
        // m (m - 1) = 4
        assert!((roots.m1 - 2.561_552_812_808_830_3).abs() < 1e-14);
        assert!((roots.m2 + 1.561_552_812_808_830_3).abs() < 1e-14);

        let golden = Roots::from_rates(2.0, 2.0);
        assert!((golden.m1 - 1.618_033_988_749_895).abs() < 1e-14);
        assert!((golden.m2 + 0.618_033_988_749_895).abs() < 1e-14);
        assert_eq!(golden.m1 + golden.m2, 1.0);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(ModelParams::new(0.0, 2.0, 0.5, 0.5, 0.0).is_err());
        assert!(ModelParams::new(1.0, 0.0, 0.5, 0.5, 0.0).is_err());
        assert!(ModelParams::new(1.0, 2.0, 0.0, 0.5, 0.0).is_err());
        assert!(ModelParams::new(1.0, 2.0, 1.5, 0.5, 0.0).is_err());
        assert!(ModelParams::new(1.0, 2.0, 0.5, -0.1, 0.0).is_err());
        assert!(ModelParams::new(1.0, 2.0, 0.5, 0.5, 1.1).is_err());
        assert!(ModelParams::new(1.0, 2.0, 1.0, 0.0, 1.0).is_ok());
        assert!(compute_roots(&ModelParams { mu: f64::NAN, ..ModelParams::figure1() }).is_err());
    }

    #[test]
    fn psi_at_half_is_half() {
        for (mu, lambda) in [(1.0, 2.0), (0.3, 7.0), (4.0, 0.2)] {
            let roots = Roots::from_rates(mu, lambda);
            assert!((psi(0.5, &roots).unwrap() - 0.5).abs() < 1e-15);
            assert!((psi_prime(0.5, &roots).unwrap() - (2.0 * roots.m1 - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn psi_matches_direct_power_at_point_nine() {
        let (_, roots) = fig1();
        let direct = libm::pow(0.9, roots.m1) * libm::pow(0.1, 1.0 - roots.m1);
        let got = psi(0.9, &roots).unwrap();
        assert!((got - direct).abs() <= 1e-13 * direct);
        // Extended-precision value of 0.9^m1 * 0.1^(1-m1).
        assert!((got - 27.819_068_517_392_33).abs() < 1e-10);
    }

    #[test]
    fn boundary_behaviour() {
        let (_, roots) = fig1();
        assert!(psi(1e-9, &roots).unwrap() < 1e-20);
        assert!(eta(1.0 - 1e-9, &roots).unwrap() < 1e-20);
        assert!(psi_prime(1e-9, &roots).unwrap() < 1e-12);
        assert!(psi(1.0 - 1e-12, &roots).unwrap().is_finite());
        assert!(eta(1e-12, &roots).unwrap().is_finite());
        assert!(psi(0.0, &roots).is_err());
        assert!(eta(1.0, &roots).is_err());
        assert!(psi_prime(-0.1, &roots).is_err());
    }

    #[test]
    fn wronskian_at_sample_points() {
        let (_, roots) = fig1();
        for pi in [0.3, 0.5, 0.7] {
            let w = psi_prime(pi, &roots).unwrap() * eta(pi, &roots).unwrap()
                - psi(pi, &roots).unwrap() * eta_prime(pi, &roots).unwrap();
            assert!((w - roots.wronskian()).abs() < 1e-12);
        }
    }

    #[test]
    fn jump_map_and_costs() {
        assert_eq!(jump_map(0.0, 0.3), 0.3);
        assert_eq!(jump_map(1.0, 0.3), 1.0);
        assert_eq!(jump_map(0.5, 0.5), 0.75);
        assert_eq!(cost_h(1.0), 0.0);
        assert_eq!(cost_g(0.0, 0.5), 0.0);
        assert!((cost_g(0.6, 0.5) - 0.3).abs() < 1e-15);
        assert!((cost_h(0.6) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn closed_form_thresholds_for_figure1() {
        let (params, roots) = fig1();
        assert!((threshold_upper(&params, &roots) - 0.867_752_031_261_878).abs() < 1e-14);
        assert!((threshold_lower(&params, &roots) - 0.766_397_516_463_622_6).abs() < 1e-14);
    }
}
