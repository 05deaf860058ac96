//! The dynamic-programming engine.
//!
//! For a grid function `w` the operator
//!
//! ```text
//! J[w](pi) = inf_tau E^pi [ int_0^tau e^{-lambda t} (g(Y_t) + lambda w(S(Y_t))) dt
//!                           + e^{-lambda tau} h(Y_tau) ]
//! ```
//!
//! is attained by the first passage of the pre-jump diffusion `Y` above a
//! threshold `r[w]`, the unique root of the smooth-fit function `B[w]`.
//! [`Operator::apply_h`] evaluates the exit-time expectation `H_r[w]` in
//! closed form up to two cumulative integrals, and
//! [`Operator::value_iterate`] runs `v_0 = h`, `v_{n+1} = J[v_n]`, which
//! decreases to the value function with `v_n - V <= (1 - p)^n (1 - pi)`.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::math;
use crate::model::{self, ModelParams, Roots};
use crate::quadrature::{Cumulative, KernelTables};

/// Numerical settings shared by the value and false-alarm solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Number of knots of the cosine grid.
    pub grid_size: usize,
    /// Relative truncation tolerance for the singular endpoint tails of the
    /// cumulative integrals.
    pub quadrature_tol: f64,
    /// Absolute bracket width at which threshold bisection stops.
    pub bisect_tol: f64,
    pub max_bisect_iter: usize,
    /// Concavity defects (value below the neighbours' chord) up to this size
    /// are accepted as rounding.
    pub concavity_tol: f64,
    /// Defects above `concavity_tol` but below this are repaired by taking
    /// the concave majorant; larger ones abort with an inconsistency error.
    pub repair_limit: f64,
    /// Hard cap on value-iteration steps.
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            grid_size: 2001,
            quadrature_tol: 1e-10,
            bisect_tol: 1e-12,
            max_bisect_iter: 200,
            concavity_tol: 1e-8,
            repair_limit: 1e-5,
            max_iterations: 10_000,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.grid_size < 3 {
            return Err(Error::InvalidParameter {
                name: "grid_size",
                value: self.grid_size as f64,
                reason: "need at least 3 knots",
            });
        }
        if !(self.quadrature_tol > 0.0 && self.quadrature_tol <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "quadrature_tol",
                value: self.quadrature_tol,
                reason: "must lie in (0, 1]",
            });
        }
        if !(self.bisect_tol > 0.0 && self.bisect_tol < 1.0) {
            return Err(Error::InvalidParameter {
                name: "bisect_tol",
                value: self.bisect_tol,
                reason: "must lie in (0, 1)",
            });
        }
        Ok(())
    }
}

/// Root `r[w]` of the smooth-fit function together with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSolve {
    pub r: f64,
    /// Root of `-g - lambda w(S(.)) + lambda h`; `B[w]` peaks there.
    pub d: f64,
    /// Closed-form threshold for `w = h`.
    pub bracket_lo: f64,
    /// Closed-form threshold for `w = 0`.
    pub bracket_hi: f64,
    /// `|B[w](r)|` at termination.
    pub residual: f64,
    pub iterations: usize,
}

/// Selects one of the two exit-time integrands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrand {
    /// `u1 = 2 (g + lambda w(S)) eta / ((m1 - m2) sigma^2)`
    U1,
    /// `u2 = 2 (g + lambda w(S)) psi / ((m1 - m2) sigma^2)`
    U2,
}

/// A concavity repair applied during value iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcavityRepair {
    pub iteration: usize,
    pub violation: f64,
}

/// Number of iterations `ceil(ln eps / ln(1 - p))` after which the iterate
/// is within `eps` of the fixed point; at least one.
pub fn required_iterations(p: f64, epsilon: f64) -> usize {
    if p >= 1.0 {
        return 1;
    }
    let n = math::ceil(math::ln(epsilon) / math::ln(1.0 - p));
    // Guard against ln-ratio rounding just above an integer.
    let n = if math::powi(1.0 - p, n as i32 - 1) <= epsilon { n - 1.0 } else { n };
    (n as usize).max(1)
}

/// The operators `H_r`, `B` and `J` for one model instance on one grid.
///
/// Weight tables depend on `(mu, lambda, p)` and the grid only; operators
/// for other costs share them through [`Operator::with_cost`].
#[derive(Debug, Clone)]
pub struct Operator {
    params: ModelParams,
    roots: Roots,
    options: SolverOptions,
    tables: Arc<KernelTables>,
}

impl Operator {
    pub fn new(params: ModelParams, options: SolverOptions) -> Result<Self> {
        params.validate()?;
        options.validate()?;
        let grid = Grid::cosine(options.grid_size)?;
        Ok(Self::with_grid(params, options, grid))
    }

    /// Builds an operator on an explicit grid; `options.grid_size` is ignored.
    pub fn with_grid(params: ModelParams, options: SolverOptions, grid: Grid) -> Self {
        let tables = KernelTables::new(&params, grid, options.quadrature_tol);
        Self {
            params,
            roots: params.roots(),
            options,
            tables: Arc::new(tables),
        }
    }

    /// Same model and tables with a different delay cost.
    pub fn with_cost(&self, c: f64) -> Result<Self> {
        let params = self.params.with_cost(c);
        params.validate()?;
        Ok(Self {
            params,
            ..self.clone()
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn roots(&self) -> &Roots {
        &self.roots
    }

    pub fn options(&self) -> &SolverOptions {
        &self.options
    }

    pub fn grid(&self) -> &Grid {
        self.tables.grid()
    }

    /// `[r[h], r[0]]`, the closed-form bracket of every threshold.
    pub fn threshold_bracket(&self) -> (f64, f64) {
        (
            model::threshold_lower(&self.params, &self.roots),
            model::threshold_upper(&self.params, &self.roots),
        )
    }

    fn check_grid(&self, w: &GridFunction) -> Result<()> {
        if w.abscissae() != self.grid().knots() {
            return Err(Error::InvalidParameter {
                name: "w",
                value: w.abscissae().len() as f64,
                reason: "grid function lives on a different grid",
            });
        }
        Ok(())
    }

    fn check_open(x: f64) -> Result<()> {
        if x > 0.0 && x < 1.0 {
            Ok(())
        } else {
            Err(Error::Domain {
                value: x,
                domain: "(0, 1)",
            })
        }
    }

    /// Pointwise value of one of the exit-time integrands at `y` in `(0, 1)`.
    pub fn integrand_u(&self, w: &GridFunction, y: f64, which: Integrand) -> Result<f64> {
        Self::check_open(y)?;
        let f = self.tables.forcing(w, self.params.c, y);
        let ln_eigen = match which {
            Integrand::U1 => self.roots.ln_eta(y),
            Integrand::U2 => self.roots.ln_psi(y),
        };
        Ok(2.0 * f * math::exp(ln_eigen) / (self.roots.wronskian() * self.params.sigma2(y)))
    }

    fn cumulative(&self, w: &GridFunction) -> Result<Cumulative> {
        self.check_grid(w)?;
        let cum = self.tables.cumulative(w, self.params.c);
        let bad = cum
            .q
            .iter()
            .skip(1)
            .chain(cum.p.iter().skip(1).take(cum.p.len().saturating_sub(2)))
            .position(|v| !v.is_finite());
        if let Some(j) = bad {
            let at = self.tables.mesh()[(j + 1).min(self.tables.mesh().len() - 1)];
            return Err(Error::Quadrature { at, estimate: f64::NAN });
        }
        Ok(cum)
    }

    /// `eta(r) B[w](r) = m1 (1 - r) - (m1 - m2) Q(r)`; same sign as `B`, `O(1)`.
    fn scaled_b(&self, cum: &Cumulative, w: &GridFunction, r: f64) -> f64 {
        let q = self.tables.q_at(cum, w, self.params.c, r);
        self.roots.m1 * (1.0 - r) - self.roots.wronskian() * q
    }

    /// Smooth-fit function
    /// `B[w](r) = int_0^r (2 psi / sigma^2) (-g - lambda w(S(y)) + lambda h) dy`.
    pub fn compute_b(&self, w: &GridFunction, r: f64) -> Result<f64> {
        Self::check_open(r)?;
        let cum = self.cumulative(w)?;
        let b = self.scaled_b(&cum, w, r) * math::exp(-self.roots.ln_eta(r));
        if !b.is_finite() {
            return Err(Error::Quadrature { at: r, estimate: b });
        }
        Ok(b)
    }

    /// Root of the convex function `-g(pi) - lambda w(S(pi)) + lambda h(pi)`.
    pub fn peak_of_b(&self, w: &GridFunction) -> Result<f64> {
        self.check_grid(w)?;
        let lambda = self.params.lambda;
        let c = self.params.c;
        let k = |y: f64| -c * y - lambda * w.eval(model::jump_map(y, self.params.p)) + lambda * (1.0 - y);
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        if k(lo) <= 0.0 || k(hi) >= 0.0 {
            return Err(Error::Inconsistent(format!(
                "no sign change of -g - lambda w(S) + lambda h on [0, 1]: k(0) = {}, k(1) = {}",
                k(lo),
                k(hi)
            )));
        }
        while hi - lo > 1e-15 {
            let mid = 0.5 * (lo + hi);
            if k(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    fn threshold_from(&self, cum: &Cumulative, w: &GridFunction) -> Result<ThresholdSolve> {
        if self.params.c.is_nan() || self.params.c <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "c",
                value: self.params.c,
                reason: "the optimal threshold needs a positive delay cost",
            });
        }
        const SIGN_TOL: f64 = 1e-10;
        let (lo0, hi0) = self.threshold_bracket();
        let b_lo = self.scaled_b(cum, w, lo0);
        let b_hi = self.scaled_b(cum, w, hi0);
        if b_lo < -SIGN_TOL || b_hi > SIGN_TOL {
            return Err(Error::Inconsistent(format!(
                "smooth-fit function has no sign change on [{lo0}, {hi0}]: \
                 eta B = {b_lo} at the lower end, {b_hi} at the upper end (is w concave?)"
            )));
        }

        let mut iterations = 0;
        let r = if b_lo <= 0.0 {
            lo0
        } else if b_hi >= 0.0 {
            hi0
        } else {
            // Narrow to one mesh cell using the tabulated values.
            let mesh = self.tables.mesh();
            let (mut lo, mut hi) = (lo0, hi0);
            let first = mesh.partition_point(|&m| m <= lo0);
            for (j, &m) in mesh.iter().enumerate().skip(first) {
                if m >= hi0 {
                    break;
                }
                let b = self.roots.m1 * (1.0 - m) - self.roots.wronskian() * cum.q[j];
                if b > 0.0 {
                    lo = m;
                } else {
                    hi = m;
                    break;
                }
            }
            while hi - lo > self.options.bisect_tol && iterations < self.options.max_bisect_iter {
                let mid = 0.5 * (lo + hi);
                if self.scaled_b(cum, w, mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                iterations += 1;
            }
            0.5 * (lo + hi)
        };
        let residual = (self.scaled_b(cum, w, r) * math::exp(-self.roots.ln_eta(r))).abs();
        let d = self.peak_of_b(w)?;
        if d > r + self.options.bisect_tol {
            return Err(Error::Inconsistent(format!(
                "peak of B at {d} lies beyond its root {r}"
            )));
        }
        Ok(ThresholdSolve {
            r,
            d,
            bracket_lo: lo0,
            bracket_hi: hi0,
            residual,
            iterations,
        })
    }

    /// Unique root `r[w]` of `B[w]` inside `[r[h], r[0]]`. Requires a concave
    /// `w` with `0 <= w <= h` and `c > 0`.
    pub fn solve_threshold(&self, w: &GridFunction) -> Result<ThresholdSolve> {
        let cum = self.cumulative(w)?;
        self.threshold_from(&cum, w)
    }

    /// Exit-time expectation `H_r[w]` as a function of the starting point.
    pub fn exit_value<'a>(&'a self, w: &'a GridFunction, r: f64) -> Result<ExitValue<'a>> {
        Self::check_open(r)?;
        let cum = self.cumulative(w)?;
        Ok(self.exit_value_from(cum, w, r))
    }

    fn exit_value_from<'a>(&'a self, cum: Cumulative, w: &'a GridFunction, r: f64) -> ExitValue<'a> {
        let c = self.params.c;
        let q_r = self.tables.q_at(&cum, w, c, r);
        let p_r = self.tables.p_at(&cum, w, c, r);
        ExitValue {
            op: self,
            w,
            r,
            ln_psi_r: self.roots.ln_psi(r),
            boundary: model::cost_h(r) - q_r - p_r,
            at_zero: w.eval(self.params.p),
            cum,
        }
    }

    /// `H_r[w]` tabulated on the grid.
    pub fn apply_h(&self, w: &GridFunction, r: f64) -> Result<GridFunction> {
        self.exit_value(w, r)?.tabulate()
    }

    /// `J[w] = H_{r[w]}[w]` and its threshold.
    pub fn apply_j(&self, w: &GridFunction) -> Result<(GridFunction, ThresholdSolve)> {
        let cum = self.cumulative(w)?;
        let solve = self.threshold_from(&cum, w)?;
        let mut next = self.exit_value_from(cum, w, solve.r).tabulate()?;
        next.is_concave_expected = true;
        Ok((next, solve))
    }

    /// `J[w](pi)` evaluated directly at one point rather than on the grid.
    pub fn apply_j_at(&self, w: &GridFunction, pi: f64) -> Result<f64> {
        let cum = self.cumulative(w)?;
        let solve = self.threshold_from(&cum, w)?;
        Ok(self.exit_value_from(cum, w, solve.r).eval(pi))
    }

    /// Checks an iterate against `0 <= v <= h` and concavity, repairing
    /// small concavity defects in place.
    fn admit_iterate(&self, v: &mut GridFunction, n: usize) -> Result<Option<ConcavityRepair>> {
        const BOUND_TOL: f64 = 1e-9;
        for (&x, &y) in v.abscissae().iter().zip(v.ordinates()) {
            if y < -BOUND_TOL || y > 1.0 - x + BOUND_TOL {
                return Err(Error::Inconsistent(format!(
                    "iterate {n} leaves [0, h] at pi = {x}: value {y}"
                )));
            }
        }
        let violation = v.concavity_violation();
        if violation > self.options.repair_limit {
            return Err(Error::Inconsistent(format!(
                "iterate {n} is not concave: defect {violation}"
            )));
        }
        if violation > self.options.concavity_tol {
            v.make_concave();
            return Ok(Some(ConcavityRepair {
                iteration: n,
                violation,
            }));
        }
        Ok(None)
    }

    fn iterate_while(&self, mut keep_going: impl FnMut(usize, f64) -> bool) -> Result<ValueIteration> {
        if self.params.c.is_nan() || self.params.c <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "c",
                value: self.params.c,
                reason: "value iteration needs a positive delay cost",
            });
        }
        let grid = self.grid();
        let mut iterates = alloc::vec![(GridFunction::terminal_cost(grid), 0.0)];
        let mut solves = Vec::new();
        let mut repairs = Vec::new();
        let mut n = 0;
        loop {
            let current = &iterates[n].0;
            let (mut next, solve) = self.apply_j(current)?;
            n += 1;
            next.derived_from_iteration = Some(n);
            if let Some(rep) = self.admit_iterate(&mut next, n)? {
                repairs.push(rep);
            }
            let step = next.sup_distance(current);
            iterates.push((next, solve.r));
            solves.push(solve);
            if !keep_going(n, step) || n >= self.options.max_iterations {
                break;
            }
        }
        let last = &iterates[n].0;
        let (image, _) = self.apply_j(last)?;
        let fixed_point_residual = image.sup_distance(last);
        Ok(ValueIteration {
            params: self.params,
            iterates,
            solves,
            n_final: n,
            sup_error_bound: math::powi(1.0 - self.params.p, n as i32),
            fixed_point_residual,
            repairs,
        })
    }

    /// Value iteration for at least `ceil(ln eps / ln(1 - p))` steps and until
    /// successive iterates differ by at most `eps / 2`.
    pub fn value_iterate(&self, epsilon: f64) -> Result<ValueIteration> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                value: epsilon,
                reason: "must lie in (0, 1)",
            });
        }
        let floor = required_iterations(self.params.p, epsilon);
        self.iterate_while(|n, step| n < floor || step > 0.5 * epsilon)
    }

    /// Exactly `n` steps of value iteration.
    pub fn iterate_n(&self, n: usize) -> Result<ValueIteration> {
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                value: 0.0,
                reason: "need at least one iteration",
            });
        }
        self.iterate_while(|k, _| k < n)
    }
}

/// `H_r[w]` evaluated through the scaled cumulative integrals:
/// `H(pi) = Q(pi) + P(pi) + (psi(pi) / psi(r)) (h(r) - Q(r) - P(r))` on
/// `(0, r)`, `h` on `[r, 1]` and `w(p)` at zero.
pub struct ExitValue<'a> {
    op: &'a Operator,
    w: &'a GridFunction,
    cum: Cumulative,
    r: f64,
    ln_psi_r: f64,
    boundary: f64,
    at_zero: f64,
}

impl ExitValue<'_> {
    pub fn threshold(&self) -> f64 {
        self.r
    }

    fn combine(&self, x: f64, q: f64, p: f64) -> f64 {
        let ratio = math::exp(self.op.roots.ln_psi(x) - self.ln_psi_r);
        q + p + ratio * self.boundary
    }

    pub fn eval(&self, pi: f64) -> f64 {
        if pi >= self.r {
            return model::cost_h(pi);
        }
        if pi <= 0.0 {
            return self.at_zero;
        }
        let c = self.op.params.c;
        let tables = &self.op.tables;
        let q = tables.q_at(&self.cum, self.w, c, pi);
        let p = tables.p_at(&self.cum, self.w, c, pi);
        self.combine(pi, q, p)
    }

    pub fn tabulate(&self) -> Result<GridFunction> {
        let grid = self.op.grid();
        let tables = &self.op.tables;
        let mut out = Vec::with_capacity(grid.len());
        for (i, &x) in grid.knots().iter().enumerate() {
            let v = if x >= self.r {
                model::cost_h(x)
            } else if i == 0 {
                self.at_zero
            } else {
                let j = tables.knot_index(i);
                self.combine(x, self.cum.q[j], self.cum.p[j])
            };
            if !v.is_finite() {
                return Err(Error::Quadrature { at: x, estimate: v });
            }
            out.push(v);
        }
        Ok(GridFunction::new(grid.clone(), out))
    }
}

/// Iterates `v_0 = h, v_{n+1} = J[v_n]` with their thresholds `pi_n`.
#[derive(Debug, Clone)]
pub struct ValueIteration {
    pub params: ModelParams,
    /// `(v_n, pi_n)` for `n = 0..=n_final`; `pi_0 = 0` since `v_0 = h`.
    pub iterates: Vec<(GridFunction, f64)>,
    /// Threshold diagnostics for `n = 1..=n_final`.
    pub solves: Vec<ThresholdSolve>,
    pub n_final: usize,
    /// `(1 - p)^n_final`, the certified bound on `v_n_final - V`.
    pub sup_error_bound: f64,
    /// `sup |J[v_N] - v_N|`.
    pub fixed_point_residual: f64,
    pub repairs: Vec<ConcavityRepair>,
}

impl ValueIteration {
    pub fn final_iterate(&self) -> &GridFunction {
        &self.iterates[self.n_final].0
    }

    /// Threshold `pi_N` of the last iterate, the approximation of the optimal
    /// alarm level `pi_inf`. `pi_N <= pi_inf`.
    pub fn threshold(&self) -> f64 {
        self.iterates[self.n_final].1
    }

    pub fn thresholds(&self) -> impl Iterator<Item = f64> + '_ {
        self.iterates.iter().map(|(_, r)| *r)
    }

    /// Value of the last iterate at `pi`: `1 - pi` at and above the threshold,
    /// linear interpolation below it, using the threshold itself as a node.
    pub fn value_at(&self, pi: f64) -> f64 {
        value_of(self.final_iterate(), self.threshold(), pi)
    }

    /// Value of iterate `n` at `pi`, in the same sense as [`Self::value_at`].
    pub fn iterate_value_at(&self, n: usize, pi: f64) -> Option<f64> {
        self.iterates.get(n).map(|(v, r)| value_of(v, *r, pi))
    }

    /// Left difference quotient of the last iterate at its threshold,
    /// `(h(r) - v(x_k)) / (r - x_k)` for the last knot `x_k` at least a
    /// quarter cell below `r`, together with the grid spacing there.
    /// Smooth fit makes the quotient `-1 + O(spacing)`.
    pub fn smooth_fit_slope(&self) -> (f64, f64) {
        let r = self.threshold();
        let v = self.final_iterate();
        let knots = v.abscissae();
        let spacing = v.grid().spacing_at(r);
        let k = knots
            .iter()
            .rposition(|&x| x <= r - 0.25 * spacing)
            .unwrap_or(0);
        let slope = (model::cost_h(r) - v.ordinates()[k]) / (r - knots[k]);
        (slope, spacing)
    }

    /// Smallest `n >= ln eps / ln(1 - p)` and its threshold `pi_n`; entering
    /// `[pi_n, 1]` is an `eps`-optimal alarm rule.
    pub fn epsilon_optimal_rule(&self, epsilon: f64) -> Result<(usize, f64)> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                value: epsilon,
                reason: "must lie in (0, 1)",
            });
        }
        let n = required_iterations(self.params.p, epsilon);
        match self.iterates.get(n) {
            Some((_, r)) => Ok((n, *r)),
            None => Err(Error::InsufficientIterates {
                needed: n + 1,
                available: self.iterates.len(),
            }),
        }
    }
}

pub(crate) fn value_of(v: &GridFunction, r: f64, pi: f64) -> f64 {
    let pi = pi.clamp(0.0, 1.0);
    if pi >= r && r > 0.0 {
        return model::cost_h(pi);
    }
    let (i, t) = v.grid().locate(pi);
    let knots = v.abscissae();
    if knots[i + 1] > r && r > 0.0 {
        let x0 = knots[i];
        let y0 = v.ordinates()[i];
        let s = (pi - x0) / (r - x0);
        return y0 + s * (model::cost_h(r) - y0);
    }
    v.interpolate(i, t)
}

/// [`Operator::value_iterate`] on a fresh operator.
pub fn value_iterate(params: ModelParams, options: SolverOptions, epsilon: f64) -> Result<ValueIteration> {
    Operator::new(params, options)?.value_iterate(epsilon)
}
