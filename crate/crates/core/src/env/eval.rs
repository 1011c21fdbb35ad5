//! Batch evaluation of a policy over a split.

use std::collections::BTreeMap;

use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Episode, EpisodeConfig, NamedPolicy, SuiteContext};
use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::sim::EpisodeState;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub scenario_id: String,
    pub kind: String,
    pub success: bool,
    /// `None` on success.
    pub failure_reason: Option<String>,
    pub steps: i64,
    #[serde(rename = "return")]
    pub episode_return: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub split: String,
    pub scheme: String,
    pub policy: String,
    pub n_scenarios: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub failures: BTreeMap<String, usize>,
    pub mean_return: f64,
    pub mean_length: f64,
    pub episodes: Vec<EpisodeSummary>,
}

/// Runs one scenario to completion under `policy`.
pub fn run_episode(
    ctx: &SuiteContext,
    config: &EpisodeConfig,
    policy: NamedPolicy,
    scenario: &Scenario,
) -> Result<EpisodeSummary> {
    let mut episode = Episode::new(ctx, config.clone())?;
    episode.reset(Some(&scenario.scenario_id))?;
    let mut last = None;
    while !episode.is_done() {
        let world = episode.current_world().expect("episode is active");
        let action = policy.act(scenario, world, &ctx.physics);
        last = Some(episode.step(action)?);
    }
    let last = last.ok_or_else(|| Error::Protocol("episode ended at reset".into()))?;
    let status = last.info.termination;
    debug!(
        "{}: {:?} {:?} after {} steps",
        scenario.scenario_id, status.state, status.failure_reason, last.info.step_index
    );
    Ok(EpisodeSummary {
        scenario_id: scenario.scenario_id.clone(),
        kind: scenario.maneuver.kind().to_string(),
        success: status.state == EpisodeState::Success,
        failure_reason: status.failure_reason.map(|r| r.as_str().to_string()),
        steps: last.info.step_index,
        episode_return: last.info.episode_return,
    })
}

/// Evaluates every scenario of `config.split` on `workers` threads.
///
/// Episodes are independent and results are collected in suite order, so the
/// report does not depend on the worker count.
pub fn evaluate(ctx: &SuiteContext, config: &EpisodeConfig, policy: NamedPolicy, workers: usize) -> Result<EvalReport> {
    let scenarios = ctx.scenarios(config.split.0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    info!(
        "evaluating {policy} on {} scenarios of split {} with {} workers",
        scenarios.len(),
        config.split,
        workers.max(1)
    );
    let episodes: Vec<EpisodeSummary> = pool.install(|| {
        scenarios
            .par_iter()
            .map(|s| run_episode(ctx, config, policy, s))
            .collect::<Result<Vec<_>>>()
    })?;

    let n = episodes.len();
    let successes = episodes.iter().filter(|e| e.success).count();
    let mut failures = BTreeMap::new();
    for reason in episodes.iter().filter_map(|e| e.failure_reason.as_ref()) {
        *failures.entry(reason.clone()).or_insert(0) += 1;
    }
    let mean = |f: &dyn Fn(&EpisodeSummary) -> f64| {
        if n == 0 {
            0.0
        } else {
            episodes.iter().map(f).sum::<f64>() / n as f64
        }
    };
    let mean_return = mean(&|e| e.episode_return);
    let mean_length = mean(&|e| e.steps as f64);
    Ok(EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        split: config.split.to_string(),
        scheme: config.scheme.to_string(),
        policy: policy.to_string(),
        n_scenarios: n,
        successes,
        success_rate: if n == 0 { 0.0 } else { successes as f64 / n as f64 },
        failures,
        mean_return,
        mean_length,
        episodes,
    })
}
