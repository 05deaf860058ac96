//! The `solve`, `variational`, `simulate` and `figure1` subcommands. Each
//! writes its files under the output directory and returns the summary
//! printed on standard output.

use serde::Serialize;
use serde_json::{json, Value};
use shockdetect_core::montecarlo::{simulate_pi_path, MCEstimate};
use shockdetect_core::value::required_iterations;
use shockdetect_core::variational::{solve_variational, VariationalOptions};
use shockdetect_core::{Operator, ValueIteration};

use crate::config::RunConfig;
use crate::output::OutDir;
use crate::parallel;
use crate::{CliError, Result};

#[derive(Debug, Serialize)]
struct Estimate {
    mean: f64,
    stderr: f64,
}

impl From<MCEstimate> for Estimate {
    fn from(e: MCEstimate) -> Self {
        Self {
            mean: e.mean,
            stderr: e.stderr,
        }
    }
}

fn operator(cfg: &RunConfig) -> Result<Operator> {
    cfg.validate()?;
    Ok(Operator::new(cfg.model_params()?, cfg.solver_options()?)?)
}

fn iterate_column(vi: &ValueIteration, n: usize) -> Result<&[f64]> {
    vi.iterates
        .get(n)
        .map(|(v, _)| v.ordinates())
        .ok_or_else(|| {
            CliError::Config(format!(
                "iterate {n} requested but value iteration stopped at {}",
                vi.n_final
            ))
        })
}

/// Value iteration to accuracy `epsilon`; writes `value_function.csv`
/// and `solve.json`.
pub fn solve(cfg: &RunConfig, out: &OutDir) -> Result<Value> {
    let op = operator(cfg)?;
    let eps = cfg.epsilon()?;
    let vi = op.value_iterate(eps)?;

    let mut header = vec!["pi".to_owned()];
    let mut columns = Vec::new();
    for &n in &cfg.iterates {
        header.push(format!("v_{n}"));
        columns.push(iterate_column(&vi, n)?);
    }
    header.push("v_final".to_owned());
    columns.push(vi.final_iterate().ordinates());
    let knots = op.grid().knots();
    let rows = (0..knots.len()).map(|i| {
        let mut row = Vec::with_capacity(columns.len() + 1);
        row.push(knots[i]);
        row.extend(columns.iter().map(|c| c[i]));
        row
    });
    out.write_csv("value_function.csv", &header, rows)?;

    let (r_h, r_0) = op.threshold_bracket();
    let (rule_n, rule_pi) = vi.epsilon_optimal_rule(eps)?;
    let pi0 = op.params().pi0;
    let summary = json!({
        "pi_inf": vi.threshold(),
        "n_iterations": vi.n_final,
        "sup_error_bound": vi.sup_error_bound,
        "fixed_point_residual": vi.fixed_point_residual,
        "bracket": [r_h, r_0],
        "epsilon": eps,
        "epsilon_rule": { "n": rule_n, "pi_n": rule_pi },
        "pi0": pi0,
        "value_at_pi0": vi.value_at(pi0),
        "thresholds": vi.thresholds().collect::<Vec<_>>(),
        "concavity_repairs": vi.repairs.len(),
    });
    out.write_json("solve.json", &summary)?;
    Ok(summary)
}

/// False-alarm constrained problem at `alpha`; writes `variational.json`.
pub fn variational(cfg: &RunConfig, out: &OutDir) -> Result<Value> {
    cfg.validate()?;
    let alpha = cfg
        .alpha
        .ok_or_else(|| CliError::Config("variational needs alpha (--alpha or \"alpha\")".into()))?;
    let params = cfg.model_params()?;
    let s = solve_variational(alpha, params, cfg.solver_options()?, VariationalOptions::default())?;
    let summary = json!({
        "kind": s.kind.as_str(),
        "alpha": s.alpha,
        "pi0": s.pi0,
        "r_star": s.r_star,
        "c_star": s.c_star,
        "pi_inf_at_c_star": s.pi_inf_at_c_star,
        "achieved_alpha": s.achieved_alpha,
        "expected_delay": s.expected_delay,
        "bayes_risk_at_c_star": s.bayes_risk,
    });
    out.write_json("variational.json", &summary)?;
    Ok(summary)
}

/// Monte Carlo estimates of the threshold rule at `r` (or at the optimal
/// threshold); writes `simulate.json` and optional path dumps.
pub fn simulate(cfg: &RunConfig, out: &OutDir) -> Result<Value> {
    cfg.validate()?;
    let params = cfg.model_params()?;
    let sim = cfg.sim_config()?;
    let (r, source) = match cfg.r {
        Some(r) => (r, "config"),
        None => (operator(cfg)?.value_iterate(cfg.epsilon()?)?.threshold(), "optimal"),
    };
    let s = parallel::estimate_detection(r, &params, &sim)?;

    if cfg.sim.dump_paths > 0 && params.pi0 < 1.0 {
        let horizon = sim.horizon_for(r, &params);
        let header = ["t", "X", "N", "Pi"].map(String::from);
        for i in 0..cfg.sim.dump_paths.min(sim.n_paths) {
            let path = simulate_pi_path(&params, &sim, horizon, i)?;
            let rows = (0..path.len()).map(|k| [path.t[k], path.x[k], f64::from(path.n[k]), path.pi[k]]);
            out.write_csv(&format!("paths/path_{i:05}.csv"), &header, rows)?;
        }
    }

    let summary = json!({
        "r": r,
        "r_source": source,
        "bayes_risk": Estimate::from(s.bayes_risk),
        "false_alarm": Estimate::from(s.false_alarm),
        "delay": Estimate::from(s.delay),
        "alarm_time": Estimate::from(s.alarm_time),
        "censor_fraction": s.censor_fraction,
        "n_paths": sim.n_paths,
        "seed": sim.seed,
        "dt": sim.dt,
        "horizon": sim.horizon_for(r, &params),
        "antithetic": sim.antithetic,
    });
    out.write_json("simulate.json", &summary)?;
    Ok(summary)
}

/// Iterates `v_0..v_10` on the grid; writes `figure1.csv` and
/// `figure1_thresholds.json`. Twenty iterations are run so that `v_20`
/// can stand in for the limit.
pub fn figure1(cfg: &RunConfig, out: &OutDir) -> Result<Value> {
    const SHOWN: usize = 10;
    const PROXY: usize = 20;
    let op = operator(cfg)?;
    let vi = op.iterate_n(PROXY)?;
    let knots = op.grid().knots();
    let mut header = vec!["pi".to_owned()];
    header.extend((0..=SHOWN).map(|n| format!("v_{n}")));
    let rows = (0..knots.len()).map(|i| {
        let mut row = vec![knots[i]];
        row.extend((0..=SHOWN).map(|n| vi.iterates[n].0.ordinates()[i]));
        row
    });
    out.write_csv("figure1.csv", &header, rows)?;

    let p = op.params().p;
    let gap = vi.iterates[SHOWN].0.sup_distance(&vi.iterates[PROXY].0);
    let summary = json!({
        "thresholds": (1..=SHOWN).map(|n| vi.iterates[n].1).collect::<Vec<_>>(),
        "sup_v10_minus_v20": gap,
        "certified_bound": (1.0 - p).powi(SHOWN as i32),
        "iterations_for_1e-3": required_iterations(p, 1e-3),
    });
    out.write_json("figure1_thresholds.json", &summary)?;
    Ok(summary)
}
