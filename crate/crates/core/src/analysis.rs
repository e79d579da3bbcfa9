//! Per-step metrics, Hodrick-Prescott detrending and cross-replicate
//! aggregation.

use serde::{Deserialize, Serialize};

use crate::behavior::{ManagementStrategy, ValueType};
use crate::error::{Error, Result};
use crate::labour_market::{normalized_mean_spell, MatchEvent, MatchKind};

/// Metric names in frame column order.
pub const METRICS: [&str; 29] = [
    "unemployment_rate",
    "unemployment_spell",
    "employment_spell",
    "turnover",
    "retention",
    "hires",
    "signal_hires",
    "fires",
    "quits",
    "satisfaction",
    "satisfaction_o",
    "satisfaction_c",
    "satisfaction_se",
    "satisfaction_st",
    "match_quality",
    "match_quality_o",
    "match_quality_c",
    "match_quality_se",
    "match_quality_st",
    "monitoring",
    "reward_mix",
    "bonus_rate",
    "real_gdp",
    "real_consumption",
    "labour_demand",
    "price",
    "median_wage",
    "bills",
    "deposits",
];

pub fn metric_index(name: &str) -> Option<usize> {
    METRICS.iter().position(|m| *m == name)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HouseholdSnapshot {
    pub value_type: ValueType,
    pub employed: bool,
    pub unemployment_spell: u32,
    pub employment_spell: u32,
    pub satisfaction: f64,
    pub base_satisfaction: f64,
}

/// State of the economy at the end of one step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSnapshot {
    pub step: u32,
    pub households: Vec<HouseholdSnapshot>,
    pub strategies: Vec<ManagementStrategy>,
    pub employed_at_start: usize,
    pub real_output: f64,
    pub real_consumption: f64,
    pub labour_demand: usize,
    pub mean_price: f64,
    pub median_wage: f64,
    pub bills: f64,
    pub deposits: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub step: u32,
    /// Aligned with [`METRICS`]. NaN where a metric is undefined, e.g. the
    /// satisfaction of a value type with nobody employed.
    pub values: Vec<f64>,
}

impl MetricRow {
    pub fn get(&self, name: &str) -> Option<f64> {
        metric_index(name).map(|i| self.values[i])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesFrame {
    pub scenario: String,
    pub replicate: usize,
    pub rows: Vec<MetricRow>,
}

impl TimeSeriesFrame {
    pub fn new(scenario: &str, replicate: usize) -> Self {
        Self {
            scenario: scenario.to_string(),
            replicate,
            rows: Vec::new(),
        }
    }

    /// (step, value) pairs of one metric.
    pub fn series(&self, name: &str) -> Option<Vec<(u32, f64)>> {
        let i = metric_index(name)?;
        Some(self.rows.iter().map(|r| (r.step, r.values[i])).collect())
    }

    pub fn value(&self, step: u32, name: &str) -> Option<f64> {
        let i = metric_index(name)?;
        self.rows.iter().find(|r| r.step == step).map(|r| r.values[i])
    }

    /// Mean of a metric over steps after `burn_in`, skipping NaN.
    pub fn mean_after(&self, name: &str, burn_in: u32) -> f64 {
        let Some(i) = metric_index(name) else {
            return f64::NAN;
        };
        let vals: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.step > burn_in)
            .map(|r| r.values[i])
            .filter(|v| v.is_finite())
            .collect();
        if vals.is_empty() {
            f64::NAN
        } else {
            vals.iter().sum::<f64>() / vals.len() as f64
        }
    }
}

fn mean_or_nan(sum: f64, n: usize) -> f64 {
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// One row of metrics from the end-of-step snapshot and that step's events.
pub fn compute_metrics(snap: &StepSnapshot, events: &[MatchEvent]) -> MetricRow {
    let n_hh = snap.households.len();
    let employed: Vec<&HouseholdSnapshot> = snap.households.iter().filter(|h| h.employed).collect();
    let unemployed_spells: Vec<u32> = snap
        .households
        .iter()
        .filter(|h| !h.employed)
        .map(|h| h.unemployment_spell)
        .collect();
    let employed_spells: Vec<u32> = employed.iter().map(|h| h.employment_spell).collect();

    let count = |k: MatchKind| events.iter().filter(|e| e.kind == k).count();
    let (hires, signal_hires, fires, quits) = (
        count(MatchKind::Hire),
        count(MatchKind::SignalHire),
        count(MatchKind::Fire),
        count(MatchKind::Quit),
    );
    let turnover = if snap.employed_at_start == 0 {
        0.0
    } else {
        (fires + quits) as f64 / snap.employed_at_start as f64
    };

    let mut sat = [(0.0, 0usize); 4];
    let mut fit = [(0.0, 0usize); 4];
    for h in &employed {
        let k = h.value_type.index();
        sat[k].0 += h.satisfaction;
        sat[k].1 += 1;
        fit[k].0 += h.base_satisfaction;
        fit[k].1 += 1;
    }
    let sat_all = mean_or_nan(sat.iter().map(|s| s.0).sum(), employed.len());
    let fit_all = mean_or_nan(fit.iter().map(|s| s.0).sum(), employed.len());
    let n_f = snap.strategies.len().max(1) as f64;
    let lever = |g: fn(&ManagementStrategy) -> f64| snap.strategies.iter().map(g).sum::<f64>() / n_f;

    let values = vec![
        if n_hh == 0 {
            0.0
        } else {
            1.0 - employed.len() as f64 / n_hh as f64
        },
        normalized_mean_spell(&unemployed_spells, snap.step),
        normalized_mean_spell(&employed_spells, snap.step),
        turnover,
        1.0 - turnover,
        hires as f64,
        signal_hires as f64,
        fires as f64,
        quits as f64,
        sat_all,
        mean_or_nan(sat[0].0, sat[0].1),
        mean_or_nan(sat[1].0, sat[1].1),
        mean_or_nan(sat[2].0, sat[2].1),
        mean_or_nan(sat[3].0, sat[3].1),
        fit_all,
        mean_or_nan(fit[0].0, fit[0].1),
        mean_or_nan(fit[1].0, fit[1].1),
        mean_or_nan(fit[2].0, fit[2].1),
        mean_or_nan(fit[3].0, fit[3].1),
        lever(|s| s.monitoring),
        lever(|s| s.reward_mix),
        lever(|s| s.bonus_rate),
        snap.real_output,
        snap.real_consumption,
        snap.labour_demand as f64,
        snap.mean_price,
        snap.median_wage,
        snap.bills,
        snap.deposits,
    ];
    debug_assert_eq!(values.len(), METRICS.len());
    MetricRow {
        step: snap.step,
        values,
    }
}

/// Solves (I + λK'K)τ = y, K the second-difference operator, by a banded
/// LDLᵀ factorisation. Returns (trend, cycle).
///
/// The system is solved for the cycle, (I + λK'K)c = λK'Ky, and the trend
/// taken as y − c: second differences of a smooth series are small, so the
/// right-hand side carries little rounding error.
pub fn hp_filter(series: &[f64], lambda: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = series.len();
    if n < 4 {
        return Err(Error::InvalidInput(format!(
            "HP filter needs at least 4 observations, got {n}"
        )));
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidInput(format!("HP smoothing must be positive, got {lambda}")));
    }
    // Bands of the symmetric system: main, first and second off-diagonal.
    let mut a0 = vec![1.0 + 6.0 * lambda; n];
    a0[0] = 1.0 + lambda;
    a0[n - 1] = 1.0 + lambda;
    a0[1] = 1.0 + 5.0 * lambda;
    a0[n - 2] = 1.0 + 5.0 * lambda;
    let mut a1 = vec![-4.0 * lambda; n - 1];
    a1[0] = -2.0 * lambda;
    a1[n - 2] = -2.0 * lambda;
    let a2 = lambda;

    // L has unit diagonal and sub-diagonals l1, l2.
    let mut d = vec![0.0; n];
    let mut l1 = vec![0.0; n];
    let mut l2 = vec![0.0; n];
    for i in 0..n {
        let mut di = a0[i];
        if i >= 1 {
            di -= l1[i] * l1[i] * d[i - 1];
        }
        if i >= 2 {
            di -= l2[i] * l2[i] * d[i - 2];
        }
        d[i] = di;
        if i + 2 < n {
            l2[i + 2] = a2 / di;
        }
        if i + 1 < n {
            let mut v = a1[i];
            if i >= 1 {
                v -= l2[i + 1] * l1[i] * d[i - 1];
            }
            l1[i + 1] = v / di;
        }
    }

    let mut z = vec![0.0; n];
    for i in 0..n - 2 {
        let d2 = lambda * (series[i] - 2.0 * series[i + 1] + series[i + 2]);
        z[i] += d2;
        z[i + 1] -= 2.0 * d2;
        z[i + 2] += d2;
    }
    for i in 0..n {
        if i >= 1 {
            z[i] -= l1[i] * z[i - 1];
        }
        if i >= 2 {
            z[i] -= l2[i] * z[i - 2];
        }
    }
    for i in 0..n {
        z[i] /= d[i];
    }
    for i in (0..n).rev() {
        if i + 1 < n {
            z[i] -= l1[i + 1] * z[i + 1];
        }
        if i + 2 < n {
            z[i] -= l2[i + 2] * z[i + 2];
        }
    }
    let trend = series.iter().zip(&z).map(|(y, c)| y - c).collect();
    Ok((trend, z))
}

/// Linear-interpolation percentile of an ascending sample.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub step: u32,
    pub metric: String,
    pub mean: f64,
    pub p10: f64,
    pub p90: f64,
    pub trend: f64,
    pub cycle: f64,
}

/// Cross-replicate mean and 10th/90th percentiles of every metric at every
/// step after `burn_in`, with the HP trend and cycle of the mean path.
/// NaN values are skipped; rows are ordered by metric, then step.
pub fn aggregate(frames: &[TimeSeriesFrame], burn_in: u32, hp_lambda: f64) -> Result<Vec<AggregateRow>> {
    if frames.is_empty() {
        return Err(Error::InvalidInput("nothing to aggregate".into()));
    }
    let mut steps: Vec<u32> = frames
        .iter()
        .flat_map(|f| f.rows.iter().map(|r| r.step))
        .filter(|&s| s > burn_in)
        .collect();
    steps.sort_unstable();
    steps.dedup();

    let mut out = Vec::with_capacity(steps.len() * METRICS.len());
    for (m, name) in METRICS.iter().enumerate() {
        let mut rows = Vec::with_capacity(steps.len());
        for &step in &steps {
            let mut vals: Vec<f64> = frames
                .iter()
                .filter_map(|f| {
                    // Rows normally start at step 1; fall back to a search.
                    let row = (step as usize)
                        .checked_sub(1)
                        .and_then(|i| f.rows.get(i))
                        .filter(|r| r.step == step)
                        .or_else(|| f.rows.iter().find(|r| r.step == step))?;
                    Some(row.values[m])
                })
                .filter(|v| v.is_finite())
                .collect();
            vals.sort_by(f64::total_cmp);
            let mean = if vals.is_empty() {
                f64::NAN
            } else {
                vals.iter().sum::<f64>() / vals.len() as f64
            };
            rows.push(AggregateRow {
                step,
                metric: (*name).to_string(),
                mean,
                p10: percentile(&vals, 0.1),
                p90: percentile(&vals, 0.9),
                trend: f64::NAN,
                cycle: f64::NAN,
            });
        }
        let path: Vec<f64> = rows.iter().map(|r| r.mean).collect();
        if path.len() >= 4 && path.iter().all(|v| v.is_finite()) {
            let (trend, cycle) = hp_filter(&path, hp_lambda)?;
            for (r, (t, c)) in rows.iter_mut().zip(trend.into_iter().zip(cycle)) {
                r.trend = t;
                r.cycle = c;
            }
        }
        out.extend(rows);
    }
    Ok(out)
}
