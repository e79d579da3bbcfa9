//! Worker-level kernel: value profiles, time allocation, output, rewards,
//! satisfaction, warnings, the friendship network and within-firm interaction
//! intensity, plus the firms' hill-climbing management strategy.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Higher-order personal value of a worker.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ValueType {
    /// Openness to change: wants autonomy.
    Openness,
    /// Conservation: accepts close supervision.
    Conservation,
    /// Self-enhancement: wants individual rewards.
    SelfEnhancement,
    /// Self-transcendence: prefers pooled rewards.
    SelfTranscendence,
}

impl ValueType {
    pub const ALL: [ValueType; 4] = [
        ValueType::Openness,
        ValueType::Conservation,
        ValueType::SelfEnhancement,
        ValueType::SelfTranscendence,
    ];

    pub fn code(self) -> &'static str {
        match self {
            ValueType::Openness => "O",
            ValueType::Conservation => "C",
            ValueType::SelfEnhancement => "SE",
            ValueType::SelfTranscendence => "ST",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for ValueType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ValueType::ALL
            .into_iter()
            .find(|v| v.code().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown value type `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueProfile {
    pub value_type: ValueType,
    /// 1 = wants full autonomy (no monitoring), 0 = wants close supervision.
    pub autonomy_preference: f64,
    /// 1 = wants purely individual pay, 0 = wants purely pooled pay.
    pub reward_individualism: f64,
}

impl ValueProfile {
    /// O/C pin the autonomy axis, SE/ST pin the reward axis; the other
    /// coordinate is uniform on [0, 1].
    pub fn draw<R: Rng + ?Sized>(value_type: ValueType, rng: &mut R) -> Self {
        let free: f64 = rng.random();
        let (autonomy_preference, reward_individualism) = match value_type {
            ValueType::Openness => (1.0, free),
            ValueType::Conservation => (0.0, free),
            ValueType::SelfEnhancement => (free, 1.0),
            ValueType::SelfTranscendence => (free, 0.0),
        };
        Self {
            value_type,
            autonomy_preference,
            reward_individualism,
        }
    }
}

/// Working-time shares; they always sum to one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeShares {
    pub personal: f64,
    pub cooperative: f64,
    pub shirk: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManagementStrategy {
    /// Probability that excess shirking is detected (m).
    pub monitoring: f64,
    /// Weight of team output in the bonus (λ); 1 is fully cooperative pay.
    pub reward_mix: f64,
    /// Bonus per unit of output (μ).
    pub bonus_rate: f64,
    pub base_wage: f64,
    /// Task interdependence κ.
    pub interdependence: f64,
}

/// Parameters of the behavioural kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub shirk_min: f64,
    pub shirk_max: f64,
    pub shirk_tolerance: f64,
    pub warning_penalty: f64,
    /// Per-step relaxation of satisfaction toward base satisfaction (ρ_S).
    pub satisfaction_rate: f64,
    /// Per-step relaxation of pairwise interaction intensity (ρ_e).
    pub intensity_rate: f64,
    /// Weight of the autonomy fit in base satisfaction; the reward fit gets the rest.
    pub autonomy_weight: f64,
    /// Weight of the pay mix λ (versus the firm's cooperation norm) in the
    /// cooperative share of productive time.
    pub cooperation_pay_weight: f64,
    /// How strongly monitoring suppresses shirking: the shirk curve in
    /// (1 − S) gets exponent 1 + deterrence·m.
    pub deterrence: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        Self {
            shirk_min: 0.0,
            shirk_max: 0.5,
            shirk_tolerance: 0.2,
            warning_penalty: 0.2,
            satisfaction_rate: 0.1,
            intensity_rate: 0.1,
            autonomy_weight: 0.5,
            cooperation_pay_weight: 0.5,
            deterrence: 4.0,
        }
    }
}

/// Mutable per-worker state. Wage and finance data live on the household.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WorkerState {
    pub satisfaction: f64,
    pub base_satisfaction: f64,
    pub productivity: f64,
    pub time: TimeShares,
    /// Output O of the current step.
    pub output: f64,
    /// Steps at which a written warning was received. Append-only.
    pub warnings: Vec<u32>,
    pub employer: Option<usize>,
    /// Step of the current (or last) hire.
    pub hired_at: u32,
    pub last_employer: Option<usize>,
    pub separated_at: Option<u32>,
    pub unemployment_spell: u32,
    pub employment_spell: u32,
}

impl WorkerState {
    /// Warnings received during the current contract.
    pub fn contract_warnings(&self) -> usize {
        let since = self.hired_at;
        self.warnings.iter().rev().take_while(|&&w| w >= since).count()
    }

    pub fn last_warning(&self) -> Option<u32> {
        self.warnings.last().copied()
    }

    pub fn is_employed(&self) -> bool {
        self.employer.is_some()
    }
}

/// Shirking falls with satisfaction, and faster under tighter monitoring;
/// the rest of the time splits between personal and cooperative work by the
/// pay mix and the firm norm.
pub fn allocate_time(
    satisfaction: f64,
    strategy: &ManagementStrategy,
    cooperation_norm: f64,
    params: &KernelParams,
) -> TimeShares {
    let s = satisfaction.clamp(0.0, 1.0);
    let exponent = 1.0 + params.deterrence * strategy.monitoring.clamp(0.0, 1.0);
    let shirk = params.shirk_min + (params.shirk_max - params.shirk_min) * (1.0 - s).powf(exponent);
    let w = params.cooperation_pay_weight;
    let coop_fraction =
        (w * strategy.reward_mix + (1.0 - w) * cooperation_norm.clamp(0.0, 1.0)).clamp(0.0, 1.0);
    let productive = 1.0 - shirk;
    let cooperative = productive * coop_fraction;
    TimeShares {
        personal: productive - cooperative,
        cooperative,
        shirk,
    }
}

/// O = π · p^(1−κ) · c̄^κ.
pub fn individual_output(
    productivity: f64,
    personal: f64,
    team_cooperation: f64,
    interdependence: f64,
) -> f64 {
    let k = interdependence;
    productivity * personal.powf(1.0 - k) * team_cooperation.powf(k)
}

/// R = ω_b + μ · [(1 − λ) O_i + λ · mean(O_team)].
pub fn reward(own_output: f64, team_mean_output: f64, strategy: &ManagementStrategy) -> f64 {
    let lambda = strategy.reward_mix;
    let bonus = (1.0 - lambda) * own_output + lambda * team_mean_output;
    strategy.base_wage + strategy.bonus_rate * bonus
}

/// Person-organisation fit between a worker's values and a strategy.
pub fn base_satisfaction(
    profile: &ValueProfile,
    strategy: &ManagementStrategy,
    params: &KernelParams,
) -> f64 {
    let wa = params.autonomy_weight;
    let autonomy_gap = (profile.autonomy_preference - (1.0 - strategy.monitoring)).abs();
    let reward_gap = (profile.reward_individualism - (1.0 - strategy.reward_mix)).abs();
    (1.0 - wa * autonomy_gap - (1.0 - wa) * reward_gap).clamp(0.0, 1.0)
}

pub fn apply_warning(satisfaction: f64, params: &KernelParams) -> f64 {
    (satisfaction - params.warning_penalty).max(0.0)
}

/// One step of satisfaction dynamics. Returns (S_t, π_t).
pub fn update_satisfaction(
    satisfaction: f64,
    base: f64,
    warned: bool,
    productivity_max: f64,
    params: &KernelParams,
) -> (f64, f64) {
    let mut s = satisfaction + params.satisfaction_rate * (base - satisfaction);
    if warned {
        s = apply_warning(s, params);
    }
    let s = s.clamp(0.0, 1.0);
    (s, productivity_max * s)
}

/// Indices (into `shirk`) of workers caught shirking above tolerance. Each
/// offender is caught with probability `monitoring`; one draw per offender in
/// slice order.
pub fn monitor_and_warn<R: Rng + ?Sized>(
    shirk: &[f64],
    monitoring: f64,
    tolerance: f64,
    rng: &mut R,
) -> Vec<usize> {
    shirk
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > tolerance)
        .filter(|_| rng.random::<f64>() < monitoring)
        .map(|(i, _)| i)
        .collect()
}

/// Pair-formation weights between value types.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomophilyMatrix(pub [[f64; 4]; 4]);

impl Default for HomophilyMatrix {
    /// SE and C avoid their own type, O and ST seek it.
    fn default() -> Self {
        let mut w = [[1.0; 4]; 4];
        w[ValueType::Openness.index()][ValueType::Openness.index()] = 1.5;
        w[ValueType::Conservation.index()][ValueType::Conservation.index()] = 0.5;
        w[ValueType::SelfEnhancement.index()][ValueType::SelfEnhancement.index()] = 0.5;
        w[ValueType::SelfTranscendence.index()][ValueType::SelfTranscendence.index()] = 1.5;
        Self(w)
    }
}

impl HomophilyMatrix {
    pub fn uniform() -> Self {
        Self([[1.0; 4]; 4])
    }

    fn weight(&self, a: ValueType, b: ValueType) -> f64 {
        0.5 * (self.0[a.index()][b.index()] + self.0[b.index()][a.index()])
    }
}

/// Undirected friendship graph, fixed for the whole run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FriendshipNetwork {
    adjacency: Vec<Vec<usize>>,
}

impl FriendshipNetwork {
    pub fn empty(n: usize) -> Self {
        Self {
            adjacency: vec![Vec::new(); n],
        }
    }

    /// Builds a network from an edge list; duplicates and self-loops are dropped.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a != b {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Self { adjacency }
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    /// Sorted friend ids.
    pub fn friends(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn are_friends(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn mean_degree(&self) -> f64 {
        if self.adjacency.is_empty() {
            return 0.0;
        }
        2.0 * self.edge_count() as f64 / self.adjacency.len() as f64
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }
}

/// Each pair links independently with probability proportional to the
/// homophily weight of their types, scaled so the expected mean degree is
/// `mean_degree`.
pub fn build_friendship_network<R: Rng + ?Sized>(
    types: &[ValueType],
    homophily: &HomophilyMatrix,
    mean_degree: f64,
    rng: &mut R,
) -> Result<FriendshipNetwork> {
    let n = types.len();
    if !(mean_degree >= 0.0) || mean_degree >= n as f64 {
        return Err(Error::Config(format!(
            "mean_degree must lie in [0, n_households) = [0, {n}), got {mean_degree}"
        )));
    }
    if homophily.0.iter().flatten().any(|w| !(*w >= 0.0)) {
        return Err(Error::Config("homophily weights must be non-negative".into()));
    }
    if mean_degree == 0.0 {
        return Ok(FriendshipNetwork::empty(n));
    }

    let mut counts = [0usize; 4];
    for t in types {
        counts[t.index()] += 1;
    }
    let mut total_weight = 0.0;
    for a in ValueType::ALL {
        for b in ValueType::ALL {
            let (na, nb) = (counts[a.index()] as f64, counts[b.index()] as f64);
            if a == b {
                total_weight += na * (na - 1.0) / 2.0 * homophily.weight(a, a);
            } else if a < b {
                total_weight += na * nb * homophily.weight(a, b);
            }
        }
    }
    if total_weight <= 0.0 {
        return Ok(FriendshipNetwork::empty(n));
    }
    let scale = n as f64 * mean_degree / 2.0 / total_weight;

    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = (scale * homophily.weight(types[i], types[j])).min(1.0);
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Ok(FriendshipNetwork::from_edges(n, &edges))
}

/// Symmetric pairwise interaction intensity e_ij, stored as a packed upper
/// triangle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionMatrix {
    n: usize,
    values: Vec<f64>,
}

impl InteractionMatrix {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            values: vec![0.0; n * n.saturating_sub(1) / 2],
        }
    }

    fn offset(&self, i: usize, j: usize) -> usize {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        a * (2 * self.n - a - 1) / 2 + (b - a - 1)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            self.values[self.offset(i, j)]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert_ne!(i, j, "interaction intensity is irreflexive");
        let k = self.offset(i, j);
        self.values[k] = value;
    }

    /// e ← (1−ρ)e + ρ·min(c_i, c_j) for co-workers; every other pair decays.
    pub fn update(&mut self, rosters: &[Vec<usize>], cooperation: &[f64], rate: f64) {
        let keep = 1.0 - rate;
        for v in &mut self.values {
            *v *= keep;
        }
        for roster in rosters {
            for (a, &i) in roster.iter().enumerate() {
                for &j in &roster[a + 1..] {
                    let k = self.offset(i, j);
                    self.values[k] += rate * cooperation[i].min(cooperation[j]);
                }
            }
        }
    }

    /// ē_i: mean intensity with the other members of `roster`; 0 when alone.
    pub fn embeddedness(&self, i: usize, roster: &[usize]) -> f64 {
        let (sum, count) = roster
            .iter()
            .filter(|&&j| j != i)
            .fold((0.0, 0usize), |(s, c), &j| (s + self.get(i, j), c + 1));
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Lever {
    Monitoring,
    RewardMix,
    BonusRate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyMove {
    pub lever: Lever,
    pub up: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyParams {
    pub initial_monitoring: f64,
    pub initial_reward_mix: f64,
    pub initial_bonus_rate: f64,
    pub base_wage: f64,
    pub interdependence: f64,
    pub review_period: u32,
    /// Step size for m and λ.
    pub step: f64,
    pub bonus_step: f64,
    pub bonus_max: f64,
}

impl Default for StrategyParams {
    fn default() -> Self {
        Self {
            initial_monitoring: 0.5,
            initial_reward_mix: 0.5,
            initial_bonus_rate: 0.0,
            base_wage: 8.0,
            interdependence: 0.5,
            review_period: 20,
            step: 0.05,
            bonus_step: 0.1,
            bonus_max: 2.0,
        }
    }
}

impl StrategyParams {
    pub fn initial_strategy(&self) -> ManagementStrategy {
        ManagementStrategy {
            monitoring: self.initial_monitoring,
            reward_mix: self.initial_reward_mix,
            bonus_rate: self.initial_bonus_rate,
            base_wage: self.base_wage,
            interdependence: self.interdependence,
        }
    }
}

pub fn apply_move(
    strategy: &ManagementStrategy,
    mv: StrategyMove,
    params: &StrategyParams,
) -> ManagementStrategy {
    let sign = if mv.up { 1.0 } else { -1.0 };
    let mut next = *strategy;
    match mv.lever {
        Lever::Monitoring => {
            next.monitoring = (next.monitoring + sign * params.step).clamp(0.0, 1.0);
        }
        Lever::RewardMix => {
            next.reward_mix = (next.reward_mix + sign * params.step).clamp(0.0, 1.0);
        }
        Lever::BonusRate => {
            next.bonus_rate = (next.bonus_rate + sign * params.bonus_step).clamp(0.0, params.bonus_max);
        }
    }
    next
}

/// Hill-climber over (m, λ, μ). Each review scores the window by mean output
/// per worker. A trial move that beat the window before it is repeated; one
/// that did not is undone, and the strategy is kept for a fresh reference
/// window before the next trial.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StrategyAdapter {
    pub last_move: Option<StrategyMove>,
    pub previous_score: Option<f64>,
    window_sum: f64,
    window_len: u32,
}

impl StrategyAdapter {
    pub fn observe(&mut self, output_per_worker: f64) {
        self.window_sum += output_per_worker;
        self.window_len += 1;
    }

    pub fn window_len(&self) -> u32 {
        self.window_len
    }

    /// Closes the review window and returns the next strategy.
    pub fn adapt_strategy<R: Rng + ?Sized>(
        &mut self,
        strategy: &ManagementStrategy,
        params: &StrategyParams,
        rng: &mut R,
    ) -> ManagementStrategy {
        let score = if self.window_len == 0 {
            0.0
        } else {
            self.window_sum / self.window_len as f64
        };
        self.window_sum = 0.0;
        self.window_len = 0;

        match (self.last_move, self.previous_score) {
            (Some(mv), Some(prev)) if score > prev => {
                let next = apply_move(strategy, mv, params);
                if next == *strategy {
                    // Clipped at a bound; nothing to undo later.
                    self.last_move = None;
                    self.previous_score = None;
                } else {
                    self.previous_score = Some(score);
                }
                next
            }
            (Some(mv), _) => {
                // Rejected: step back and re-measure before the next trial.
                self.last_move = None;
                self.previous_score = None;
                apply_move(strategy, StrategyMove { up: !mv.up, ..mv }, params)
            }
            (None, _) => {
                let lever = match rng.random_range(0..3) {
                    0 => Lever::Monitoring,
                    1 => Lever::RewardMix,
                    _ => Lever::BonusRate,
                };
                let mv = StrategyMove {
                    lever,
                    up: rng.random_bool(0.5),
                };
                let next = apply_move(strategy, mv, params);
                if next != *strategy {
                    self.previous_score = Some(score);
                    self.last_move = Some(mv);
                }
                next
            }
        }
    }
}
