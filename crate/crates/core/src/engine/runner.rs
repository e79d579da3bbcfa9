//! Replicates of a scenario, run sequentially or on a rayon pool.

use serde::{Deserialize, Serialize};

use super::EconomyState;
use crate::accounting::ConsistencyReport;
use crate::analysis::{aggregate, compute_metrics, AggregateRow, MetricRow, TimeSeriesFrame};
use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::labour_market::EventLog;

/// One consistency residual of one step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualRecord {
    pub step: u32,
    pub check: String,
    pub residual: f64,
    pub relative: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub seed: u64,
    pub frame: TimeSeriesFrame,
    pub events: EventLog,
    /// Largest relative residual over all checks, per step.
    pub worst_residual: Vec<f64>,
    /// Steps with at least one flagged residual.
    pub flagged_steps: u32,
    /// Every residual of every step, when requested.
    pub residuals: Vec<ResidualRecord>,
    /// Why the run stopped early, if it did.
    pub error: Option<String>,
    /// The same abort as a structured value, kept for exit-code decisions.
    #[serde(skip)]
    pub consistency_abort: Option<(u32, String, f64)>,
}

impl ReplicateResult {
    pub fn is_complete(&self) -> bool {
        self.error.is_none()
    }
}

fn record(report: &ConsistencyReport, step: u32, out: &mut Vec<ResidualRecord>) {
    out.extend(report.residuals.iter().map(|r| ResidualRecord {
        step,
        check: r.check.to_string(),
        residual: r.residual,
        relative: r.relative(),
    }));
}

/// Runs replicate `r` of `cfg` to the end or to the first error. With
/// `keep_residuals` every consistency residual is retained.
pub fn run_replicate_with(cfg: &ScenarioConfig, r: usize, keep_residuals: bool) -> ReplicateResult {
    let seed = cfg.replicate_seed(r);
    let mut frame = TimeSeriesFrame::new(&cfg.name, r);
    let mut out = ReplicateResult {
        replicate: r,
        seed,
        frame: TimeSeriesFrame::new(&cfg.name, r),
        events: EventLog::new(),
        worst_residual: Vec::new(),
        flagged_steps: 0,
        residuals: Vec::new(),
        error: None,
        consistency_abort: None,
    };
    let mut state = match EconomyState::new(cfg, seed) {
        Ok(s) => s,
        Err(e) => {
            out.error = Some(e.to_string());
            return out;
        }
    };
    for _ in 0..cfg.steps {
        match state.step(cfg) {
            Ok(report) => {
                let events: Vec<_> = state.events.at_step(state.step).copied().collect();
                let row: MetricRow = compute_metrics(&state.snapshot(), &events);
                frame.rows.push(row);
                out.worst_residual.push(report.worst().map_or(0.0, |w| w.relative()));
                if !report.is_consistent() {
                    out.flagged_steps += 1;
                }
                if keep_residuals {
                    record(&report, state.step, &mut out.residuals);
                }
            }
            Err(e) => {
                if let crate::error::Error::Consistency { step, label, residual } = &e {
                    out.consistency_abort = Some((*step, label.clone(), *residual));
                }
                out.error = Some(e.to_string());
                break;
            }
        }
    }
    out.frame = frame;
    out.events = state.events;
    out
}

pub fn run_replicate(cfg: &ScenarioConfig, r: usize) -> ReplicateResult {
    run_replicate_with(cfg, r, false)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub config: ScenarioConfig,
    /// In replicate order.
    pub replicates: Vec<ReplicateResult>,
}

impl ScenarioResult {
    /// Some replicate stopped before the last step.
    pub fn is_partial(&self) -> bool {
        self.replicates.iter().any(|r| !r.is_complete())
    }

    pub fn frames(&self) -> Vec<&TimeSeriesFrame> {
        self.replicates.iter().map(|r| &r.frame).collect()
    }

    pub fn aggregate(&self) -> Result<Vec<AggregateRow>> {
        let frames: Vec<TimeSeriesFrame> = self.replicates.iter().map(|r| r.frame.clone()).collect();
        aggregate(&frames, self.config.burn_in, self.config.hp_lambda)
    }
}

pub fn run_scenario_sequential(cfg: &ScenarioConfig, keep_residuals: bool) -> ScenarioResult {
    let replicates = (0..cfg.replicates)
        .map(|r| run_replicate_with(cfg, r, keep_residuals))
        .collect();
    ScenarioResult {
        config: cfg.clone(),
        replicates,
    }
}

/// Replicates on a rayon pool with `jobs` threads (the global pool when
/// `None`). Results come back in replicate order whatever the scheduling.
#[cfg(feature = "parallel")]
pub fn run_scenario_parallel(cfg: &ScenarioConfig, jobs: Option<usize>, keep_residuals: bool) -> Result<ScenarioResult> {
    use rayon::prelude::*;
    let run = || -> Vec<ReplicateResult> {
        (0..cfg.replicates)
            .into_par_iter()
            .map(|r| run_replicate_with(cfg, r, keep_residuals))
            .collect()
    };
    let replicates = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| crate::error::Error::Config(format!("cannot start {n} worker threads: {e}")))?
            .install(run),
        None => run(),
    };
    Ok(ScenarioResult {
        config: cfg.clone(),
        replicates,
    })
}

/// Parallel when the `parallel` feature is on, sequential otherwise.
pub fn run_scenario(cfg: &ScenarioConfig, jobs: Option<usize>, keep_residuals: bool) -> Result<ScenarioResult> {
    #[cfg(feature = "parallel")]
    {
        run_scenario_parallel(cfg, jobs, keep_residuals)
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
        Ok(run_scenario_sequential(cfg, keep_residuals))
    }
}
