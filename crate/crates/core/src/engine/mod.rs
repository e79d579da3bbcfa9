//! Economy state, stationary initialization, the per-step scheduler and the
//! replicate runner.

mod runner;
mod stationary;
mod step;

pub use runner::{
    run_replicate, run_replicate_with, run_scenario, run_scenario_sequential, ReplicateResult, ResidualRecord,
    ScenarioResult,
};
#[cfg(feature = "parallel")]
pub use runner::run_scenario_parallel;
pub use stationary::{solve_stationary, Deviation, StationaryState, REFERENCE, SOLVER_TOLERANCE};
pub use step::StepStats;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::accounting::{BalanceSheet, FlowMatrix};
use crate::aggregates::{BankState, CentralBankState, FinanceParams, GovernmentState, HouseholdFinance};
use crate::analysis::{HouseholdSnapshot, StepSnapshot};
use crate::behavior::{
    allocate_time, base_satisfaction, build_friendship_network, individual_output, FriendshipNetwork,
    InteractionMatrix, ManagementStrategy, StrategyAdapter, ValueProfile, ValueType, WorkerState,
};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::firms::FirmState;
use crate::labour_market::{median, BenefitScheme, EventLog, LabourAgent};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Household {
    pub profile: ValueProfile,
    pub worker: WorkerState,
    /// Wage earned this step; 0 when unemployed.
    pub wage: f64,
    pub prev_wage: f64,
    /// Wage of the last job held.
    pub last_wage: Option<f64>,
    pub benefits: f64,
    pub finance: HouseholdFinance,
    /// ē: mean interaction intensity with current co-workers.
    pub embeddedness: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Firm {
    pub state: FirmState,
    pub strategy: ManagementStrategy,
    pub adapter: StrategyAdapter,
    /// Employee ids, sorted.
    pub roster: Vec<usize>,
    /// Mean cooperative time share of the roster in the last step.
    pub cooperation_norm: f64,
    /// Ō: mean individual output of the roster in the last step.
    pub mean_output: f64,
}

/// Sector stocks not held by an individual agent, and the net worths
/// accumulated from each sector's current-account balance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NetWorth {
    pub firms: f64,
    pub households: f64,
    pub bank: f64,
    pub government_debt: f64,
    pub central_bank: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EconomyState {
    pub step: u32,
    pub households: Vec<Household>,
    pub firms: Vec<Firm>,
    pub network: FriendshipNetwork,
    pub intensity: InteractionMatrix,
    pub government: GovernmentState,
    pub bank: BankState,
    pub central_bank: CentralBankState,
    pub net_worth: NetWorth,
    /// π_max.
    pub productivity_max: f64,
    pub finance: FinanceParams,
    pub scheme: BenefitScheme,
    pub events: EventLog,
    pub initial_rosters: Vec<Vec<usize>>,
    pub flows: FlowMatrix,
    pub balance: BalanceSheet,
    pub stats: StepStats,
    pub rng: ChaCha8Rng,
}

/// Value types in the configured shares, shuffled.
fn draw_types(n: usize, shares: &[f64; 4], rng: &mut ChaCha8Rng) -> Vec<ValueType> {
    let mut counts: Vec<usize> = shares.iter().map(|s| (s * n as f64).floor() as usize).collect();
    // Hand out the remainder by largest fractional part, lowest index first.
    let mut rest = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| {
        let fa = shares[a] * n as f64 - counts[a] as f64;
        let fb = shares[b] * n as f64 - counts[b] as f64;
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &k in order.iter().cycle() {
        if rest == 0 {
            break;
        }
        counts[k] += 1;
        rest -= 1;
    }
    let mut types: Vec<ValueType> = ValueType::ALL
        .iter()
        .zip(&counts)
        .flat_map(|(&t, &c)| std::iter::repeat_n(t, c))
        .collect();
    types.shuffle(rng);
    types
}

/// Norm c̄ such that the roster's mean cooperative share under c̄ is c̄.
fn cooperation_fixed_point(
    satisfactions: &[f64],
    strategy: &ManagementStrategy,
    cfg: &ScenarioConfig,
) -> f64 {
    if satisfactions.is_empty() {
        return 0.0;
    }
    let mut norm = strategy.reward_mix;
    for _ in 0..10_000 {
        let next = satisfactions
            .iter()
            .map(|&s| allocate_time(s, strategy, norm, &cfg.kernel).cooperative)
            .sum::<f64>()
            / satisfactions.len() as f64;
        let done = (next - norm).abs() < 1e-15;
        norm = next;
        if done {
            break;
        }
    }
    norm
}

impl EconomyState {
    /// Full-employment stationary state for one replicate.
    pub fn new(cfg: &ScenarioConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let ss = solve_stationary(cfg)?;
        let finance = ss.finance(&cfg.finance);
        let scheme = cfg.benefit_scheme()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let n_hh = cfg.households;
        let n_f = cfg.firms;
        let types = draw_types(n_hh, &cfg.type_shares, &mut rng);
        let profiles: Vec<ValueProfile> = types.iter().map(|&t| ValueProfile::draw(t, &mut rng)).collect();
        let network = build_friendship_network(&types, &cfg.homophily, cfg.mean_degree, &mut rng)?;

        // Contiguous blocks of households per firm.
        let rosters: Vec<Vec<usize>> = (0..n_f)
            .map(|k| ((k * n_hh / n_f)..((k + 1) * n_hh / n_f)).collect())
            .collect();
        let strategy = cfg.strategy.initial_strategy();

        let mut workers: Vec<WorkerState> = profiles
            .iter()
            .map(|p| {
                let s0 = base_satisfaction(p, &strategy, &cfg.kernel);
                WorkerState {
                    satisfaction: s0,
                    base_satisfaction: s0,
                    ..Default::default()
                }
            })
            .collect();

        let mut norms = vec![0.0; n_f];
        let mut shape = vec![0.0; n_hh];
        for (k, roster) in rosters.iter().enumerate() {
            let sats: Vec<f64> = roster.iter().map(|&i| workers[i].satisfaction).collect();
            norms[k] = cooperation_fixed_point(&sats, &strategy, cfg);
            for &i in roster {
                let w = &mut workers[i];
                w.employer = Some(k);
                w.time = allocate_time(w.satisfaction, &strategy, norms[k], &cfg.kernel);
                // Output per unit of π_max.
                shape[i] = w.satisfaction * individual_output(1.0, w.time.personal, norms[k], strategy.interdependence);
            }
        }

        let total_shape: f64 = shape.iter().sum();
        if !(total_shape > 0.0) {
            return Err(Error::Initialization("initial workforce produces nothing".into()));
        }
        let productivity_max = ss.output * (1.0 + cfg.capacity_headroom) / total_shape;
        let per_firm = |x: f64| x / n_f as f64;

        let mut firms = Vec::with_capacity(n_f);
        for (k, roster) in rosters.iter().enumerate() {
            let mut potential = 0.0;
            for &i in roster {
                let w = &mut workers[i];
                w.productivity = productivity_max * w.satisfaction;
                w.output = productivity_max * shape[i];
                potential += w.output;
            }
            let y = per_firm(ss.output);
            if potential < y * (1.0 - 1e-12) {
                return Err(Error::Initialization(format!(
                    "firm {k} cannot produce its stationary output: potential {potential:.4} < {y:.4}"
                )));
            }
            let n = roster.len() as f64;
            let wage_bill = ss.wage * n;
            firms.push(Firm {
                state: FirmState {
                    price: ss.price,
                    unit_cost: ss.unit_cost,
                    wage: ss.wage,
                    wage_bill,
                    sales: y,
                    expected_sales: y,
                    inventory: per_firm(ss.inventory),
                    inventory_target: per_firm(ss.inventory),
                    expected_inventory: per_firm(ss.inventory),
                    nominal_inventory: per_firm(ss.nominal_inventory),
                    loans: per_firm(ss.loans),
                    profits: per_firm(ss.firm_profits),
                    output: y,
                    potential_output: potential,
                    planned_output: y,
                    labour_demand: roster.len(),
                },
                strategy,
                adapter: StrategyAdapter::default(),
                roster: roster.clone(),
                cooperation_norm: norms[k],
                mean_output: potential / n,
            });
        }

        let mut intensity = InteractionMatrix::new(n_hh);
        for roster in &rosters {
            for (a, &i) in roster.iter().enumerate() {
                for &j in &roster[a + 1..] {
                    intensity.set(i, j, workers[i].time.cooperative.min(workers[j].time.cooperative));
                }
            }
        }

        let per_hh = |x: f64| x / n_hh as f64;
        let households: Vec<Household> = profiles
            .into_iter()
            .zip(workers)
            .enumerate()
            .map(|(i, (profile, worker))| {
                let k = worker.employer.expect("everyone starts employed");
                Household {
                    profile,
                    embeddedness: intensity.embeddedness(i, &rosters[k]),
                    worker,
                    wage: ss.wage,
                    prev_wage: ss.wage,
                    last_wage: Some(ss.wage),
                    benefits: 0.0,
                    finance: HouseholdFinance {
                        disposable_income: per_hh(ss.disposable_income),
                        deposits: per_hh(ss.deposits),
                        consumption: per_hh(ss.consumption),
                        real_consumption: per_hh(ss.real_consumption),
                        tax: per_hh(ss.taxes),
                    },
                }
            })
            .collect();

        let government = GovernmentState {
            spending: ss.government_spending,
            taxes: ss.taxes,
            benefits: 0.0,
            bills: ss.bills,
        };
        let bank = BankState {
            deposits: ss.deposits,
            loans: ss.loans,
            reserves: ss.reserves,
            bills: ss.bank_bills,
            advances: ss.advances,
            profits: ss.bank_profits,
        };
        let central_bank = CentralBankState {
            bills: ss.central_bank_bills,
            profits: ss.central_bank_profits,
        };
        let net_worth = NetWorth {
            firms: ss.nominal_inventory - ss.loans,
            households: ss.deposits,
            bank: ss.loans + ss.bank_bills + ss.reserves - ss.deposits - ss.advances,
            government_debt: ss.bills,
            central_bank: ss.central_bank_bills + ss.advances - ss.reserves,
        };

        let mut state = Self {
            step: 0,
            households,
            firms,
            network,
            intensity,
            government,
            bank,
            central_bank,
            net_worth,
            productivity_max,
            finance,
            scheme,
            events: EventLog::new(),
            initial_rosters: rosters,
            flows: FlowMatrix::new(),
            balance: BalanceSheet::default(),
            stats: StepStats::default(),
            rng,
        };
        state.balance = state.balance_sheet();
        state.stats = StepStats {
            employed_at_start: n_hh,
            employed: n_hh,
            real_output: ss.output,
            real_consumption: ss.real_consumption,
            labour_demand: n_hh,
            median_wage: ss.wage,
            ..Default::default()
        };
        Ok(state)
    }

    pub fn rosters(&self) -> Vec<Vec<usize>> {
        self.firms.iter().map(|f| f.roster.clone()).collect()
    }

    pub fn employed(&self) -> usize {
        self.firms.iter().map(|f| f.roster.len()).sum()
    }

    pub fn unemployment_rate(&self) -> f64 {
        1.0 - self.employed() as f64 / self.households.len() as f64
    }

    pub fn median_wage(&self) -> f64 {
        let wages: Vec<f64> = self
            .households
            .iter()
            .filter(|h| h.worker.is_employed())
            .map(|h| h.wage)
            .collect();
        median(&wages)
    }

    /// Matching-rule view of every household.
    pub fn labour_agents(&self) -> Vec<LabourAgent> {
        self.households
            .iter()
            .map(|h| LabourAgent {
                employer: h.worker.employer,
                hired_at: h.worker.hired_at,
                last_employer: h.worker.last_employer,
                separated_at: h.worker.separated_at,
                contract_warnings: h.worker.contract_warnings(),
                last_warning: h.worker.last_warning(),
                unemployment_spell: h.worker.unemployment_spell,
                embeddedness: h.embeddedness,
                wage: h.wage,
                prev_wage: h.prev_wage,
                satisfaction: h.worker.satisfaction,
            })
            .collect()
    }

    /// Stocks from each sector's own ledger.
    pub fn balance_sheet(&self) -> BalanceSheet {
        BalanceSheet {
            inventories: self.firms.iter().map(|f| f.state.nominal_inventory).sum(),
            firm_loans: self.firms.iter().map(|f| f.state.loans).sum(),
            bank_loans: self.bank.loans,
            household_deposits: self.households.iter().map(|h| h.finance.deposits).sum(),
            bank_deposits: self.bank.deposits,
            government_bills: self.government.bills,
            bank_bills: self.bank.bills,
            central_bank_bills: self.central_bank.bills,
            reserves: self.bank.reserves,
            advances: self.bank.advances,
            firm_net_worth: self.net_worth.firms,
            household_net_worth: self.net_worth.households,
            bank_net_worth: self.net_worth.bank,
            government_debt: self.net_worth.government_debt,
            central_bank_net_worth: self.net_worth.central_bank,
        }
    }

    /// Everything the metrics need from the current step.
    pub fn snapshot(&self) -> StepSnapshot {
        let households = self
            .households
            .iter()
            .map(|h| HouseholdSnapshot {
                value_type: h.profile.value_type,
                employed: h.worker.is_employed(),
                unemployment_spell: h.worker.unemployment_spell,
                employment_spell: h.worker.employment_spell,
                satisfaction: h.worker.satisfaction,
                base_satisfaction: h.worker.base_satisfaction,
            })
            .collect();
        StepSnapshot {
            step: self.step,
            households,
            strategies: self.firms.iter().map(|f| f.strategy).collect(),
            employed_at_start: self.stats.employed_at_start,
            real_output: self.stats.real_output,
            real_consumption: self.stats.real_consumption,
            labour_demand: self.stats.labour_demand,
            mean_price: self.firms.iter().map(|f| f.state.price).sum::<f64>() / self.firms.len() as f64,
            median_wage: self.stats.median_wage,
            bills: self.government.bills,
            deposits: self.bank.deposits,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accounting::check_consistency;

    fn small() -> ScenarioConfig {
        ScenarioConfig {
            households: 100,
            firms: 5,
            initial_output: 558.787517 / 5.0,
            ..Default::default()
        }
    }

    #[test]
    fn initial_state_is_consistent() {
        let s = EconomyState::new(&ScenarioConfig::default(), 1).unwrap();
        let report = check_consistency(&s.balance, &s.flows, 1e-9);
        assert!(report.is_consistent(), "{:?}", report.violations().collect::<Vec<_>>());
        assert_eq!(s.employed(), 500);
        assert!(s.firms.iter().all(|f| f.roster.len() == 100));
        assert!(s.households.iter().all(|h| h.wage == 8.0));
    }

    #[test]
    fn value_type_shares_are_exact() {
        let s = EconomyState::new(&ScenarioConfig::default(), 3).unwrap();
        for t in ValueType::ALL {
            let n = s.households.iter().filter(|h| h.profile.value_type == t).count();
            assert_eq!(n, 125);
        }
    }

    #[test]
    fn potential_output_has_headroom() {
        let cfg = small();
        let s = EconomyState::new(&cfg, 9).unwrap();
        let y: f64 = s.firms.iter().map(|f| f.state.potential_output).sum();
        assert!((y - cfg.initial_output * 1.1).abs() < 1e-9);
    }

    #[test]
    fn cooperation_norm_is_a_fixed_point() {
        let s = EconomyState::new(&small(), 4).unwrap();
        for f in &s.firms {
            let mean_c = f
                .roster
                .iter()
                .map(|&i| s.households[i].worker.time.cooperative)
                .sum::<f64>()
                / f.roster.len() as f64;
            assert!((mean_c - f.cooperation_norm).abs() < 1e-12);
        }
    }
}
