//! Closed-form oracle suite behind `shockdetect selftest`.

use serde::Serialize;
use shockdetect_core::model::{self, ModelParams, Roots};
use shockdetect_core::variational::false_alarm_limits_check;
use shockdetect_core::{GridFunction, Operator, Result as CoreResult, SimConfig, SolverOptions};

use crate::config::RunConfig;
use crate::parallel;
use crate::Result;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }

    fn from_result(name: &str, r: CoreResult<(bool, String)>) -> Self {
        match r {
            Ok((passed, detail)) => Self::new(name, passed, detail),
            Err(e) => Self::new(name, false, format!("error: {e}")),
        }
    }
}

/// `B[0](r)` in closed form.
pub fn closed_form_b_zero(r: f64, params: &ModelParams, roots: &Roots) -> f64 {
    closed_form_b(r, params, roots, roots.m1)
}

/// `B[h](r)` in closed form.
pub fn closed_form_b_h(r: f64, params: &ModelParams, roots: &Roots) -> f64 {
    closed_form_b(r, params, roots, roots.m1 * params.p)
}

fn closed_form_b(r: f64, params: &ModelParams, roots: &Roots, k: f64) -> f64 {
    let psi = model::psi(r, roots).expect("r in (0, 1)");
    psi / (r * (1.0 - r)) * (-r * ((roots.m1 - 1.0) * params.c / params.lambda + k) + k)
}

fn roots_check(params: &ModelParams) -> Check {
    let roots = params.roots();
    let target = 2.0 * params.lambda / (params.mu * params.mu);
    let err = [roots.m1, roots.m2]
        .iter()
        .map(|m| ((m * (m - 1.0) - target) / target).abs())
        .fold(0.0, f64::max);
    Check::new(
        "roots solve m(m-1) = 2 lambda / mu^2",
        err <= 1e-12 && roots.m1 > 1.0 && roots.m2 < 0.0,
        format!("m1 = {}, m2 = {}, rel. error {err:.2e}", roots.m1, roots.m2),
    )
}

fn wronskian_check(params: &ModelParams) -> Check {
    let roots = params.roots();
    let r = (|| -> CoreResult<(bool, String)> {
        let mut worst: f64 = 0.0;
        for pi in [0.3, 0.5, 0.7] {
            let w = model::psi_prime(pi, &roots)? * model::eta(pi, &roots)?
                - model::psi(pi, &roots)? * model::eta_prime(pi, &roots)?;
            worst = worst.max((w / roots.wronskian() - 1.0).abs());
        }
        Ok((worst <= 1e-10, format!("max rel. deviation {worst:.2e}")))
    })();
    Check::from_result("Wronskian equals m1 - m2", r)
}

fn b_checks(params: &ModelParams, options: SolverOptions, label: &str) -> Vec<Check> {
    let op = match Operator::new(*params, options) {
        Ok(op) => op,
        Err(e) => return vec![Check::new(format!("operator ({label})"), false, e.to_string())],
    };
    let roots = params.roots();
    let zero = GridFunction::zero(op.grid());
    let h = GridFunction::terminal_cost(op.grid());
    let rs = [0.05, 0.2, 0.35, 0.5, 0.65, 0.8, 0.95];
    let mut out = Vec::new();
    for (name, w, oracle) in [
        ("B[0]", &zero, closed_form_b_zero as fn(f64, &ModelParams, &Roots) -> f64),
        ("B[h]", &h, closed_form_b_h),
    ] {
        let r = (|| -> CoreResult<(bool, String)> {
            let mut worst: f64 = 0.0;
            for &r in &rs {
                worst = worst.max((op.compute_b(w, r)? - oracle(r, params, &roots)).abs());
            }
            Ok((worst <= 1e-8, format!("max abs. error {worst:.2e}")))
        })();
        out.push(Check::from_result(&format!("{name} matches closed form ({label})"), r));
    }
    let (lo, hi) = (model::threshold_lower(params, &roots), model::threshold_upper(params, &roots));
    let r = (|| -> CoreResult<(bool, String)> {
        let e0 = (op.solve_threshold(&zero)?.r - hi).abs();
        let eh = (op.solve_threshold(&h)?.r - lo).abs();
        Ok((
            e0 <= 1e-8 && eh <= 1e-8,
            format!("r[0] = {hi:.10} (err {e0:.1e}), r[h] = {lo:.10} (err {eh:.1e})"),
        ))
    })();
    out.push(Check::from_result(&format!("thresholds r[0], r[h] ({label})"), r));
    out
}

fn value_checks(params: &ModelParams, options: SolverOptions, epsilon: f64) -> Vec<Check> {
    let vi = match Operator::new(*params, options).and_then(|op| op.value_iterate(epsilon)) {
        Ok(vi) => vi,
        Err(e) => return vec![Check::new("value iteration", false, e.to_string())],
    };
    let (slope, spacing) = vi.smooth_fit_slope();
    let v0 = vi.value_at(0.0);
    let vp = vi.value_at(params.p);
    let bound = vi.sup_error_bound + 1e-6;
    let concavity = vi.iterates.iter().map(|(v, _)| v.concavity_violation()).fold(f64::MIN, f64::max);
    vec![
        Check::new(
            "smooth fit at pi_inf",
            (slope + 1.0).abs() <= 10.0 * spacing,
            format!("left slope {slope:.6} at pi_inf = {:.8}, spacing {spacing:.2e}", vi.threshold()),
        ),
        Check::new(
            "V(0) = V(p)",
            (v0 - vp).abs() <= 1e-6,
            format!("V(0) = {v0:.10}, V(p) = {vp:.10}"),
        ),
        Check::new(
            "fixed point residual",
            vi.fixed_point_residual <= bound,
            format!("{:.2e} after {} iterations (bound {bound:.2e})", vi.fixed_point_residual, vi.n_final),
        ),
        Check::new(
            "iterates concave",
            concavity <= 1e-8,
            format!("largest chord defect {concavity:.2e}"),
        ),
    ]
}

fn limit_checks(params: &ModelParams, options: SolverOptions) -> Vec<Check> {
    [0.3, 0.0]
        .into_iter()
        .map(|pi0| {
            let name = format!("false-alarm limits at pi0 = {pi0}");
            match false_alarm_limits_check(params.with_prior(pi0), options) {
                Ok(rep) => Check::new(
                    name,
                    rep.passed(),
                    format!(
                        "F at r = {}: {:.6} (limit {:.6}); F at r = {}: {:.6}",
                        rep.r_low, rep.value_low, rep.limit_low, rep.r_high, rep.value_high
                    ),
                ),
                Err(e) => Check::new(name, false, e.to_string()),
            }
        })
        .collect()
}

fn independence_check(params: &ModelParams, sim: &SimConfig) -> Check {
    match parallel::check_independence(&params.with_prior(0.0), sim) {
        Ok(rep) => {
            let corr = rep.windows.iter().map(|w| w.corr.abs()).fold(0.0, f64::max);
            Check::new(
                "innovation independent of arrivals",
                rep.passed(),
                format!(
                    "max |corr| {corr:.4} (bound {:.4}), Var = {:.4} +- {:.4}, mean dN = {:.4} +- {:.4}",
                    rep.windows[0].bound, rep.var_w.mean, rep.var_w.stderr, rep.mean_n.mean, rep.mean_n.stderr
                ),
            )
        }
        Err(e) => Check::new("innovation independent of arrivals", false, e.to_string()),
    }
}

/// Runs every check for the configured model.
pub fn run(cfg: &RunConfig) -> Result<Vec<Check>> {
    cfg.validate()?;
    let params = cfg.model_params()?;
    let options = cfg.solver_options()?;
    let sim = cfg.sim_config()?;
    // Kernel exponent m1 - 2 close to -1: most mass sits in the endpoint tail.
    let singular = ModelParams::new(3.0, 0.05, params.p, params.c, 0.0)?;

    let mut checks = vec![roots_check(&params), wronskian_check(&params)];
    checks.extend(b_checks(&params, options, "configured model"));
    checks.extend(b_checks(&singular, options, "mu = 3, lambda = 0.05"));
    checks.extend(value_checks(&params, options, cfg.epsilon()?));
    checks.extend(limit_checks(&params, options));
    checks.push(independence_check(&params, &sim));
    Ok(checks)
}

/// Fixed-width pass/fail table.
pub fn render(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for c in checks {
        let mark = if c.passed { "PASS" } else { "FAIL" };
        out.push_str(&format!("{mark}  {:width$}  {}\n", c.name, c.detail));
    }
    out
}
