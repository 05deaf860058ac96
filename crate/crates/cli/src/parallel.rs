//! Path-parallel Monte Carlo. Each path draws from its own streams, records
//! are collected in path order and reduced sequentially, so results do not
//! depend on the number of threads.

use rayon::prelude::*;
use shockdetect_core::montecarlo::{
    independence_sample, run_path, DetectionSummary, IndependenceReport, IndependenceSample,
};
use shockdetect_core::{Error, ModelParams, PathRecord, Result, SimConfig};

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
    Ok((0..config.n_paths)
        .into_par_iter()
        .map(|i| run_path(r, params, config, i))
        .collect())
}

/// Bayes risk, false alarm, delay and alarm time of the `r`-threshold rule.
pub fn estimate_detection(r: f64, params: &ModelParams, config: &SimConfig) -> Result<DetectionSummary> {
    let records = simulate_detection(r, params, config)?;
    Ok(DetectionSummary::from_records(&records, params.c, config.antithetic))
}

pub fn check_independence(params: &ModelParams, config: &SimConfig) -> Result<IndependenceReport> {
    params.validate()?;
    config.validate()?;
    let samples: Vec<IndependenceSample> = (0..config.n_paths)
        .into_par_iter()
        .map(|i| independence_sample(params, config, i))
        .collect();
    Ok(IndependenceReport::from_samples(&samples, params.lambda))
}
