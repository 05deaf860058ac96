//! False-alarm probabilities of threshold rules and the false-alarm
//! constrained detection problem.
//!
//! `F_r(pi)` is the probability that the first entrance of the posterior
//! process into `[r, 1]` precedes the disorder. It is the fixed point of the
//! zero-cost exit operator, `u_0 = h`, `u_{n+1} = H_r[u_n]` with `c = 0`, and
//! `u_n - F_r <= (1 - p)^n (1 - pi)`.
//!
//! [`solve_variational`] finds the rule with the least expected delay among
//! those with false-alarm probability at most `alpha` by matching
//! `F_{r*}(pi0) = alpha` and then inverting the decreasing map
//! `c -> pi_inf(c)`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::model::ModelParams;
use crate::value::{required_iterations, value_of, Operator, SolverOptions};

/// `F_r(pi0)` with its certified iteration error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FalseAlarmSolve {
    pub r: f64,
    pub pi0: f64,
    pub value: f64,
    pub n_iterations: usize,
    /// `(1 - p)^n_iterations`.
    pub error_bound: f64,
}

/// The zero-cost exit operator on a fixed grid.
#[derive(Debug, Clone)]
pub struct FalseAlarm {
    op: Operator,
}

impl FalseAlarm {
    pub fn new(params: ModelParams, options: SolverOptions) -> Result<Self> {
        Ok(Self {
            op: Operator::new(params.with_cost(0.0), options)?,
        })
    }

    /// Reuses the weight tables of an existing operator.
    pub fn from_operator(op: &Operator) -> Result<Self> {
        Ok(Self {
            op: op.with_cost(0.0)?,
        })
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    fn check_r(r: f64) -> Result<()> {
        if r > 0.0 && r < 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                name: "r",
                value: r,
                reason: "threshold must lie in (0, 1)",
            })
        }
    }

    /// `u_{0,r}, ..., u_{n,r}`.
    pub fn iterates(&self, r: f64, n: usize) -> Result<Vec<GridFunction>> {
        Self::check_r(r)?;
        let mut out = Vec::with_capacity(n + 1);
        out.push(GridFunction::terminal_cost(self.op.grid()));
        for k in 1..=n {
            let mut next = self.op.apply_h(&out[k - 1], r)?;
            next.derived_from_iteration = Some(k);
            out.push(next);
        }
        Ok(out)
    }

    /// Runs `ceil(ln eps / ln(1 - p))` steps and returns the last iterate with
    /// `F_r(pi0)`. The value at `pi0` is one exact application of the
    /// operator to the previous iterate, free of interpolation error.
    pub fn iterate(&self, r: f64, pi0: f64, epsilon: f64) -> Result<(GridFunction, FalseAlarmSolve)> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                value: epsilon,
                reason: "must lie in (0, 1)",
            });
        }
        if !(0.0..=1.0).contains(&pi0) {
            return Err(Error::Domain {
                value: pi0,
                domain: "[0, 1]",
            });
        }
        let n = required_iterations(self.op.params().p, epsilon);
        let mut us = self.iterates(r, n)?;
        let value = self.op.exit_value(&us[n - 1], r)?.eval(pi0);
        let last = us.pop().expect("n >= 1");
        let solve = FalseAlarmSolve {
            r,
            pi0,
            value,
            n_iterations: n,
            error_bound: crate::math::powi(1.0 - self.op.params().p, n as i32),
        };
        Ok((last, solve))
    }

    /// `F_r(pi0)` to within `epsilon`.
    pub fn value(&self, r: f64, pi0: f64, epsilon: f64) -> Result<f64> {
        Ok(self.iterate(r, pi0, epsilon)?.1.value)
    }
}

/// [`FalseAlarm::iterate`] on a fresh operator at `params.pi0`.
pub fn false_alarm_iterate(
    r: f64,
    params: ModelParams,
    options: SolverOptions,
    epsilon: f64,
) -> Result<(GridFunction, FalseAlarmSolve)> {
    FalseAlarm::new(params, options)?.iterate(r, params.pi0, epsilon)
}

/// Comparison of `F_r(pi0)` near both ends of the threshold range with its
/// limits `1 - pi0` (or `1 - p` at `pi0 = 0`) as `r -> 0` and `0` as `r -> 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FalseAlarmLimits {
    pub pi0: f64,
    pub r_low: f64,
    pub value_low: f64,
    pub limit_low: f64,
    pub r_high: f64,
    pub value_high: f64,
    pub tolerance: f64,
}

impl FalseAlarmLimits {
    pub fn low_ok(&self) -> bool {
        (self.value_low - self.limit_low).abs() <= self.tolerance
    }

    pub fn high_ok(&self) -> bool {
        self.value_high <= self.tolerance
    }

    pub fn passed(&self) -> bool {
        self.low_ok() && self.high_ok()
    }
}

/// Evaluates `F_r(params.pi0)` at `r = 1e-3` and `r = 0.999`.
pub fn false_alarm_limits_check(params: ModelParams, options: SolverOptions) -> Result<FalseAlarmLimits> {
    const R_LOW: f64 = 1e-3;
    const R_HIGH: f64 = 0.999;
    let fa = FalseAlarm::new(params, options)?;
    let pi0 = params.pi0;
    let limit_low = if pi0 > 0.0 { 1.0 - pi0 } else { 1.0 - params.p };
    Ok(FalseAlarmLimits {
        pi0,
        r_low: R_LOW,
        value_low: fa.value(R_LOW, pi0, 1e-8)?,
        limit_low,
        r_high: R_HIGH,
        value_high: fa.value(R_HIGH, pi0, 1e-8)?,
        tolerance: 0.01,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionKind {
    /// `tau = 0` already meets the budget.
    ImmediateStop,
    /// Alarm at the first arrival, whose false-alarm probability is `1 - p`.
    StopAtFirstArrival,
    /// Alarm when the posterior first reaches `r_star`.
    ThresholdRule,
}

impl SolutionKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::ImmediateStop => "immediate_stop",
            Self::StopAtFirstArrival => "stop_at_first_arrival",
            Self::ThresholdRule => "threshold_rule",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationalSolution {
    pub alpha: f64,
    pub pi0: f64,
    pub kind: SolutionKind,
    /// Threshold with `F_{r*}(pi0) = alpha` (threshold rule only).
    pub r_star: Option<f64>,
    /// Delay cost whose Bayes-optimal threshold is `r_star` (threshold rule only).
    pub c_star: Option<f64>,
    /// `pi_inf(c_star)`, the threshold actually reproduced by the cost search.
    pub pi_inf_at_c_star: Option<f64>,
    /// False-alarm probability of the returned rule.
    pub achieved_alpha: f64,
    /// `E(tau - Theta)^+` of the returned rule.
    pub expected_delay: f64,
    /// `V_{c*}(pi0)`, the Bayes risk at the matched cost.
    pub bayes_risk: Option<f64>,
}

/// Tolerances and search ranges of [`solve_variational`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationalOptions {
    pub alpha_tol: f64,
    pub threshold_tol: f64,
    pub scan_points: usize,
    pub r_max: f64,
    pub c_min: f64,
    pub c_max: f64,
    /// Accuracy of each `F_r` and value-iteration evaluation.
    pub epsilon: f64,
    pub max_bisect_iter: usize,
}

impl Default for VariationalOptions {
    fn default() -> Self {
        Self {
            alpha_tol: 1e-4,
            threshold_tol: 1e-6,
            scan_points: 16,
            r_max: 0.999,
            c_min: 1e-4,
            c_max: 1e4,
            epsilon: 1e-10,
            max_bisect_iter: 200,
        }
    }
}

/// Solves the false-alarm constrained problem for `params.pi0` and budget
/// `alpha`. `params.c` is ignored.
pub fn solve_variational(
    alpha: f64,
    params: ModelParams,
    options: SolverOptions,
    vopts: VariationalOptions,
) -> Result<VariationalSolution> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            reason: "must lie in (0, 1)",
        });
    }
    let pi0 = params.pi0;
    if !(0.0..1.0).contains(&pi0) {
        return Err(Error::InvalidParameter {
            name: "pi0",
            value: pi0,
            reason: "must lie in [0, 1)",
        });
    }
    let trivial = |kind, achieved| VariationalSolution {
        alpha,
        pi0,
        kind,
        r_star: None,
        c_star: None,
        pi_inf_at_c_star: None,
        achieved_alpha: achieved,
        expected_delay: 0.0,
        bayes_risk: None,
    };
    if pi0 > 0.0 && alpha >= 1.0 - pi0 {
        return Ok(trivial(SolutionKind::ImmediateStop, 1.0 - pi0));
    }
    if pi0 == 0.0 && alpha >= 1.0 - params.p {
        return Ok(trivial(SolutionKind::StopAtFirstArrival, 1.0 - params.p));
    }

    let base = params.with_cost(if params.c > 0.0 { params.c } else { 1.0 });
    let op = Operator::new(base, options)?;
    let fa = FalseAlarm::from_operator(&op)?;

    let (r_star, achieved_alpha) = match_false_alarm(&fa, alpha, pi0, &vopts)?;
    let (c_star, pi_inf, v) = match_threshold(&op, r_star, pi0, &vopts)?;
    let expected_delay = ((v - achieved_alpha) / c_star).max(0.0);
    Ok(VariationalSolution {
        alpha,
        pi0,
        kind: SolutionKind::ThresholdRule,
        r_star: Some(r_star),
        c_star: Some(c_star),
        pi_inf_at_c_star: Some(pi_inf),
        achieved_alpha,
        expected_delay,
        bayes_risk: Some(v),
    })
}

/// Brackets `F_r(pi0) = alpha` on `r in (pi0, r_max]` by a scan, then
/// bisects. No monotonicity in `r` is assumed: the first sign change found
/// on the scan is refined, and a finer scan is tried if the coarse one
/// finds none.
fn match_false_alarm(fa: &FalseAlarm, alpha: f64, pi0: f64, vopts: &VariationalOptions) -> Result<(f64, f64)> {
    let f = |r: f64| fa.value(r, pi0, vopts.epsilon);
    // F just above pi0 tends to 1 - pi0 (or 1 - p), both above alpha here.
    let start = if pi0 > 0.0 { 1.0 - pi0 } else { 1.0 - fa.operator().params().p };
    let mut bracket = None;
    let mut last_scan = Vec::new();
    for points in [vopts.scan_points, 8 * vopts.scan_points] {
        let (mut lo, mut f_lo) = (pi0, start);
        last_scan.clear();
        for k in 1..=points {
            let r = pi0 + (vopts.r_max - pi0) * k as f64 / points as f64;
            let fr = f(r)?;
            last_scan.push((r, fr));
            if f_lo > alpha && fr <= alpha {
                bracket = Some((lo, r, fr));
                break;
            }
            lo = r;
            f_lo = fr;
        }
        if bracket.is_some() {
            break;
        }
    }
    let Some((mut lo, mut hi, f_hi)) = bracket else {
        return Err(Error::SearchFailed(format!(
            "F_r({pi0}) never crosses alpha = {alpha} on ({pi0}, {}]; scan: {last_scan:?}",
            vopts.r_max
        )));
    };
    if (f_hi - alpha).abs() <= 0.01 * vopts.alpha_tol {
        return Ok((hi, f_hi));
    }
    let mut best = (hi, f_hi);
    for _ in 0..vopts.max_bisect_iter {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if (fm - alpha).abs() < (best.1 - alpha).abs() {
            best = (mid, fm);
        }
        if (fm - alpha).abs() <= 0.01 * vopts.alpha_tol || hi - lo <= 1e-14 {
            break;
        }
        if fm > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (best.1 - alpha).abs() > vopts.alpha_tol {
        return Err(Error::SearchFailed(format!(
            "false-alarm bisection ended at r = {}, F = {}, target {alpha}",
            best.0, best.1
        )));
    }
    Ok(best)
}

/// Bisects `log c` until `|pi_inf(c) - r_star| <= threshold_tol`. Returns
/// `c*`, `pi_inf(c*)` and `V_{c*}(pi0)`.
fn match_threshold(op: &Operator, r_star: f64, pi0: f64, vopts: &VariationalOptions) -> Result<(f64, f64, f64)> {
    let solve = |c: f64| -> Result<(f64, f64)> {
        let opc = op.with_cost(c)?;
        let vi = opc.value_iterate(vopts.epsilon)?;
        let v = opc.apply_j_at(vi.final_iterate(), pi0)?;
        Ok((vi.threshold(), v))
    };
    let (mut lo, mut hi) = (crate::math::ln(vopts.c_min), crate::math::ln(vopts.c_max));
    let (t_lo, _) = solve(vopts.c_min)?;
    let (t_hi, _) = solve(vopts.c_max)?;
    if !(t_lo >= r_star && r_star >= t_hi) {
        return Err(Error::SearchFailed(format!(
            "target threshold {r_star} outside [pi_inf(c_max), pi_inf(c_min)] = [{t_hi}, {t_lo}]"
        )));
    }
    let mut best = (f64::NAN, f64::NAN, f64::NAN);
    let mut best_gap = f64::INFINITY;
    for _ in 0..vopts.max_bisect_iter {
        let mid = 0.5 * (lo + hi);
        let c = crate::math::exp(mid);
        let (t, v) = solve(c)?;
        let gap = (t - r_star).abs();
        if gap < best_gap {
            best_gap = gap;
            best = (c, t, v);
        }
        if gap <= vopts.threshold_tol {
            break;
        }
        // pi_inf decreases in c.
        if t > r_star {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if best_gap > vopts.threshold_tol {
        return Err(Error::SearchFailed(format!(
            "cost bisection reached pi_inf = {} at c = {}, target {r_star}",
            best.1, best.0
        )));
    }
    Ok(best)
}

/// `u` evaluated at `pi` with the threshold `r` as an extra node.
pub fn evaluate_with_threshold(u: &GridFunction, r: f64, pi: f64) -> f64 {
    value_of(u, r, pi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model;

    fn options(n: usize) -> SolverOptions {
        SolverOptions {
            grid_size: n,
            ..SolverOptions::default()
        }
    }

    #[test]
    fn zero_forcing_gives_the_laplace_transform_of_the_exit_time() {
        let params = ModelParams::figure1().with_cost(0.0);
        let op = Operator::new(params, options(401)).unwrap();
        let zero = GridFunction::zero(op.grid());
        let r = 0.6;
        let ev = op.exit_value(&zero, r).unwrap();
        let roots = params.roots();
        for pi in [1e-3, 0.2, 0.5, 0.59] {
            let exact = (1.0 - r) * (model::psi(pi, &roots).unwrap() / model::psi(r, &roots).unwrap());
            assert!((ev.eval(pi) - exact).abs() < 1e-12, "{pi}");
        }
    }

    #[test]
    fn iterates_decrease_and_stick_to_h_above_r() {
        let fa = FalseAlarm::new(ModelParams::figure1(), options(401)).unwrap();
        let r = 0.6;
        let us = fa.iterates(r, 8).unwrap();
        for k in 1..us.len() {
            let (prev, cur) = (&us[k - 1], &us[k]);
            for ((&x, &a), &b) in cur.abscissae().iter().zip(cur.ordinates()).zip(prev.ordinates()) {
                assert!(a <= b + 1e-12);
                assert!(a >= -1e-12);
                if x >= r {
                    assert_eq!(a, 1.0 - x);
                }
            }
            // u_{n+1}(0) = u_n(p)
            assert!((cur.ordinates()[0] - prev.eval(0.5)).abs() < 1e-15);
        }
    }

    #[test]
    fn trivial_variational_cases() {
        let o = options(101);
        let v = VariationalOptions::default();
        let s = solve_variational(0.6, ModelParams::figure1().with_prior(0.5), o, v).unwrap();
        assert_eq!(s.kind, SolutionKind::ImmediateStop);
        assert_eq!(s.expected_delay, 0.0);
        let s = solve_variational(0.6, ModelParams::figure1(), o, v).unwrap();
        assert_eq!(s.kind, SolutionKind::StopAtFirstArrival);
        assert_eq!(s.achieved_alpha, 0.5);
        assert!(solve_variational(0.0, ModelParams::figure1(), o, v).is_err());
        assert!(solve_variational(0.1, ModelParams::figure1().with_prior(1.0), o, v).is_err());
    }

    #[test]
    fn limits_near_the_ends_of_the_threshold_range() {
        let rep = false_alarm_limits_check(ModelParams::figure1().with_prior(0.3), options(2001)).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert_eq!(rep.value_low, 0.7);
        let rep = false_alarm_limits_check(ModelParams::figure1(), options(2001)).unwrap();
        assert!(rep.passed(), "{rep:?}");
    }
}
