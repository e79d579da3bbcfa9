//! Referral hiring, signalling hires, warning/embeddedness-based firing,
//! social-comparison quitting and the unemployment-benefit schedule.
//!
//! The matching rules work on a [`LabourAgent`] snapshot per household so they
//! can be checked in isolation against small fixtures.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::behavior::FriendshipNetwork;
use crate::error::{Error, Result};

/// Poverty-line dole as a share of the median wage.
pub const POVERTY_RATE: f64 = 0.60;

/// Warnings that mark a worker as non-performing.
pub const WARNING_LIMIT: usize = 3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExpiryMode {
    /// Elevated benefits are paid while the simulation step is below ε.
    #[default]
    Calendar,
    /// Elevated benefits are paid while the household's own spell is below ε.
    Spell,
}

impl ExpiryMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Calendar => "calendar",
            Self::Spell => "spell",
        }
    }
}

impl std::str::FromStr for ExpiryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "calendar" => Ok(Self::Calendar),
            "spell" => Ok(Self::Spell),
            _ => Err(Error::Config(format!(
                "unknown expiry mode `{s}` (expected calendar|spell)"
            ))),
        }
    }
}

/// How the two firing conditions (three warnings, warned last step) combine.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum FiringRule {
    /// Either condition marks a worker as non-performing.
    #[default]
    Either,
    /// Both conditions are required.
    Both,
}

impl FiringRule {
    pub fn name(self) -> &'static str {
        match self {
            Self::Either => "either",
            Self::Both => "both",
        }
    }
}

impl std::str::FromStr for FiringRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "either" | "or" => Ok(Self::Either),
            "both" | "and" | "strict" => Ok(Self::Both),
            _ => Err(Error::Config(format!(
                "unknown firing rule `{s}` (expected either|both)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenefitScheme {
    /// δ_g.
    pub replacement_rate: f64,
    /// δ_p.
    pub poverty_rate: f64,
    /// ε in steps.
    pub duration: u32,
    pub mode: ExpiryMode,
}

impl BenefitScheme {
    pub fn new(replacement_rate: f64, duration: u32, mode: ExpiryMode) -> Result<Self> {
        if !(replacement_rate > 0.0 && replacement_rate < 1.0) {
            return Err(Error::Config(format!(
                "replacement rate must lie in (0, 1), got {replacement_rate}"
            )));
        }
        if duration == 0 {
            return Err(Error::Config("benefit duration must be positive".into()));
        }
        Ok(Self {
            replacement_rate,
            poverty_rate: POVERTY_RATE,
            duration,
            mode,
        })
    }

    /// Whether elevated benefits have run out at `step` for a household whose
    /// current unemployment spell is `spell` steps.
    pub fn is_expired(&self, step: u32, spell: u32) -> bool {
        let clock = match self.mode {
            ExpiryMode::Calendar => step,
            ExpiryMode::Spell => spell,
        };
        clock >= self.duration
    }

    /// UB = max(δ_g·W_last, δ_p·W̃) before expiry, δ_p·W̃ after. Households
    /// that never held a job get the poverty dole.
    pub fn benefits(&self, last_wage: Option<f64>, median_wage: f64, step: u32, spell: u32) -> f64 {
        let floor = self.poverty_rate * median_wage.max(0.0);
        match last_wage {
            Some(w) if !self.is_expired(step, spell) => (self.replacement_rate * w).max(floor),
            _ => floor,
        }
    }
}

/// Median of a sample; 0 for an empty one.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// What the matching rules need to know about one household.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LabourAgent {
    pub employer: Option<usize>,
    pub hired_at: u32,
    pub last_employer: Option<usize>,
    pub separated_at: Option<u32>,
    pub contract_warnings: usize,
    pub last_warning: Option<u32>,
    pub unemployment_spell: u32,
    /// ē: mean interaction intensity with current co-workers.
    pub embeddedness: f64,
    pub wage: f64,
    pub prev_wage: f64,
    pub satisfaction: f64,
}

impl LabourAgent {
    /// Employed by `firm` at some point during step `step − 1` or later.
    fn recently_at(&self, firm: usize, step: u32) -> bool {
        self.employer == Some(firm)
            || (self.last_employer == Some(firm)
                && self.separated_at.is_some_and(|s| s + 1 >= step))
    }

    fn warned_at(&self, step: u32) -> bool {
        step > 0 && self.last_warning == Some(step - 1)
    }
}

/// Whether `referrer` vouches for candidates at step `step`: no warning in the
/// previous step, or fewer than three warnings on the current contract.
pub fn is_good_referrer(referrer: &LabourAgent, step: u32) -> bool {
    !referrer.warned_at(step) || referrer.contract_warnings < WARNING_LIMIT
}

fn by_spell_then_id(agents: &[LabourAgent]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    |&a, &b| {
        agents[b]
            .unemployment_spell
            .cmp(&agents[a].unemployment_spell)
            .then(a.cmp(&b))
    }
}

/// Pool members the firm may hire by referral, in hiring priority order.
pub fn referral_candidates(
    firm: usize,
    pool: &[usize],
    agents: &[LabourAgent],
    network: &FriendshipNetwork,
    step: u32,
) -> Vec<usize> {
    let mut out: Vec<usize> = pool
        .iter()
        .copied()
        .filter(|&i| agents[i].employer.is_none() && !agents[i].recently_at(firm, step))
        .filter(|&i| {
            network
                .friends(i)
                .iter()
                .any(|&b| agents[b].employer == Some(firm) && is_good_referrer(&agents[b], step))
        })
        .collect();
    out.sort_by(by_spell_then_id(agents));
    out
}

/// Referral hiring: at most `n` eligible candidates, longest spell first.
pub fn hire(
    firm: usize,
    n: usize,
    pool: &[usize],
    agents: &[LabourAgent],
    network: &FriendshipNetwork,
    step: u32,
) -> Vec<usize> {
    let mut hired = referral_candidates(firm, pool, agents, network, step);
    hired.truncate(n);
    hired
}

/// Fills vacancies from unemployed households whose benefits have expired,
/// longest spell first, without a referral.
pub fn hire_signalling(n_vacant: usize, signallers: &[usize], agents: &[LabourAgent]) -> Vec<usize> {
    let mut out: Vec<usize> = signallers
        .iter()
        .copied()
        .filter(|&i| agents[i].employer.is_none())
        .collect();
    out.sort_by(by_spell_then_id(agents));
    out.truncate(n_vacant);
    out
}

/// Mean ē over a roster; 0 for an empty roster.
pub fn mean_embeddedness(roster: &[usize], agents: &[LabourAgent]) -> f64 {
    if roster.is_empty() {
        return 0.0;
    }
    roster.iter().map(|&i| agents[i].embeddedness).sum::<f64>() / roster.len() as f64
}

pub fn is_non_performing(agent: &LabourAgent, step: u32, rule: FiringRule) -> bool {
    let many = agent.contract_warnings >= WARNING_LIMIT;
    let recent = agent.warned_at(step);
    match rule {
        FiringRule::Either => many || recent,
        FiringRule::Both => many && recent,
    }
}

/// Workers on the roster who are both non-performing and less embedded than
/// the roster mean, most warnings first.
pub fn firing_candidates(roster: &[usize], agents: &[LabourAgent], step: u32, rule: FiringRule) -> Vec<usize> {
    let mean = mean_embeddedness(roster, agents);
    let mut out: Vec<usize> = roster
        .iter()
        .copied()
        .filter(|&i| is_non_performing(&agents[i], step, rule) && agents[i].embeddedness < mean)
        .collect();
    out.sort_by(|&a, &b| {
        agents[b]
            .contract_warnings
            .cmp(&agents[a].contract_warnings)
            .then(agents[a].embeddedness.total_cmp(&agents[b].embeddedness))
            .then(a.cmp(&b))
    });
    out
}

pub fn fire(n: usize, roster: &[usize], agents: &[LabourAgent], step: u32, rule: FiringRule) -> Vec<usize> {
    let mut fired = firing_candidates(roster, agents, step, rule);
    fired.truncate(n);
    fired
}

/// Households that quit at `step`. `rosters[f]` lists firm f's employees.
pub fn quit(
    rosters: &[Vec<usize>],
    agents: &[LabourAgent],
    network: &FriendshipNetwork,
    step: u32,
) -> Vec<usize> {
    let mut out = Vec::new();
    for roster in rosters {
        let firm_mean = mean_embeddedness(roster, agents);
        for &i in roster {
            if wants_to_quit(i, firm_mean, agents, network, step) {
                out.push(i);
            }
        }
    }
    out.sort_unstable();
    out
}

fn wants_to_quit(
    i: usize,
    firm_mean_embeddedness: f64,
    agents: &[LabourAgent],
    network: &FriendshipNetwork,
    step: u32,
) -> bool {
    let me = &agents[i];
    // Urgent leavers only: on this roster in the previous step too.
    if me.employer.is_none() || me.hired_at >= step {
        return false;
    }
    if !(me.wage < me.prev_wage) || !(me.embeddedness < firm_mean_embeddedness) {
        return false;
    }
    let (mut n, mut wage_sum, mut sat_sum) = (0usize, 0.0, 0.0);
    for &k in network.friends(i) {
        if agents[k].employer.is_some() {
            n += 1;
            wage_sum += agents[k].wage;
            sat_sum += agents[k].satisfaction;
        }
    }
    if n == 0 {
        return false;
    }
    let n = n as f64;
    me.wage < wage_sum / n || me.satisfaction < sat_sum / n
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MatchKind {
    Hire,
    Fire,
    Quit,
    SignalHire,
}

impl MatchKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Hire => "hire",
            Self::Fire => "fire",
            Self::Quit => "quit",
            Self::SignalHire => "signal-hire",
        }
    }

    pub fn is_separation(self) -> bool {
        matches!(self, Self::Fire | Self::Quit)
    }
}

impl std::str::FromStr for MatchKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hire" => Ok(Self::Hire),
            "fire" => Ok(Self::Fire),
            "quit" => Ok(Self::Quit),
            "signal-hire" => Ok(Self::SignalHire),
            _ => Err(Error::InvalidInput(format!("unknown match kind `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchEvent {
    pub step: u32,
    pub kind: MatchKind,
    pub household: usize,
    pub firm: usize,
}

/// Append-only record of every hire and separation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    events: Vec<MatchEvent>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, event: MatchEvent) {
        self.events.push(event);
    }

    pub fn events(&self) -> &[MatchEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn at_step(&self, step: u32) -> impl Iterator<Item = &MatchEvent> {
        // Events are appended in step order.
        let start = self.events.partition_point(|e| e.step < step);
        self.events[start..].iter().take_while(move |e| e.step == step)
    }

    /// Counts of (hires incl. signalling, fires, quits) per step.
    pub fn counts_by_step(&self) -> BTreeMap<u32, (usize, usize, usize)> {
        let mut out: BTreeMap<u32, (usize, usize, usize)> = BTreeMap::new();
        for e in &self.events {
            let c = out.entry(e.step).or_default();
            match e.kind {
                MatchKind::Hire | MatchKind::SignalHire => c.0 += 1,
                MatchKind::Fire => c.1 += 1,
                MatchKind::Quit => c.2 += 1,
            }
        }
        out
    }

    /// Applies every event to the initial rosters. Fails on an event that
    /// contradicts the roster it is applied to.
    pub fn replay(&self, initial: &[Vec<usize>]) -> Result<Vec<Vec<usize>>> {
        let mut rosters: Vec<Vec<usize>> = initial.to_vec();
        for e in &self.events {
            let roster = rosters
                .get_mut(e.firm)
                .ok_or_else(|| Error::InvalidInput(format!("event names unknown firm {}", e.firm)))?;
            match e.kind {
                MatchKind::Hire | MatchKind::SignalHire => {
                    if roster.contains(&e.household) {
                        return Err(Error::InvalidInput(format!("{e:?}: already on roster")));
                    }
                    roster.push(e.household);
                }
                MatchKind::Fire | MatchKind::Quit => {
                    let pos = roster
                        .iter()
                        .position(|&h| h == e.household)
                        .ok_or_else(|| Error::InvalidInput(format!("{e:?}: not on roster")))?;
                    roster.remove(pos);
                }
            }
        }
        for r in &mut rosters {
            r.sort_unstable();
        }
        Ok(rosters)
    }
}

/// End-of-step spell counters: the running spell grows by one, the other resets.
pub fn account_spell(employed: bool, unemployment_spell: &mut u32, employment_spell: &mut u32) {
    if employed {
        *employment_spell += 1;
        *unemployment_spell = 0;
    } else {
        *unemployment_spell += 1;
        *employment_spell = 0;
    }
}

/// Mean of `spells` divided by the elapsed steps; 0 when there are no spells.
pub fn normalized_mean_spell(spells: &[u32], elapsed: u32) -> f64 {
    if spells.is_empty() || elapsed == 0 {
        return 0.0;
    }
    let mean = spells.iter().map(|&s| s as f64).sum::<f64>() / spells.len() as f64;
    mean / elapsed as f64
}
