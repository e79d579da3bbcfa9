//! One period: pricing and planning, labour matching, production, goods
//! market, credit, bills, quitting; then spells and the consistency check.

use serde::{Deserialize, Serialize};

use super::EconomyState;
use crate::accounting::{check_consistency, Account, ConsistencyReport, Flow, FlowMatrix};
use crate::aggregates::{
    bank_step, central_bank_bills, central_bank_profits, consumption_demand, government_bills,
    household_finance_step, household_tax, spending_cap, CentralBankState, GovernmentState,
};
use crate::behavior::{allocate_time, base_satisfaction, individual_output, monitor_and_warn, update_satisfaction};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::firms::{
    assign_sellers,
    expected_sales, labour_demand, plan_output, produce_and_pay, rationing_factor, set_price, settle, unit_cost,
    SettleInputs,
};
use crate::labour_market::{account_spell, fire, hire, hire_signalling, quit, LabourAgent, MatchEvent, MatchKind};

/// Per-step counters used by the metrics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub employed_at_start: usize,
    pub employed: usize,
    pub hires: usize,
    pub signal_hires: usize,
    pub fires: usize,
    pub quits: usize,
    pub warnings: usize,
    pub real_output: f64,
    pub real_consumption: f64,
    pub labour_demand: usize,
    pub median_wage: f64,
    pub rationed_firms: usize,
}

/// Stock values at the start of a step, needed for lags and Δ rows.
struct Lagged {
    bills: f64,
    bank_bills: f64,
    cb_bills: f64,
    reserves: f64,
    advances: f64,
    bank_loans: f64,
    bank_deposits: f64,
    firm_loans: Vec<f64>,
    deposits: Vec<f64>,
}

impl EconomyState {
    fn separate(&mut self, i: usize, k: usize, kind: MatchKind) {
        let t = self.step;
        let h = &mut self.households[i];
        h.worker.employer = None;
        h.worker.last_employer = Some(k);
        h.worker.separated_at = Some(t);
        // The wage of the last full period in the job.
        h.last_wage = Some(if kind == MatchKind::Quit { h.wage } else { h.prev_wage });
        h.embeddedness = 0.0;
        let roster = &mut self.firms[k].roster;
        if let Ok(pos) = roster.binary_search(&i) {
            roster.remove(pos);
        }
        self.events.push(MatchEvent { step: t, kind, household: i, firm: k });
    }

    fn employ(&mut self, i: usize, k: usize, kind: MatchKind, cfg: &ScenarioConfig) {
        let t = self.step;
        let strategy = self.firms[k].strategy;
        let h = &mut self.households[i];
        h.worker.employer = Some(k);
        h.worker.hired_at = t;
        let s0 = base_satisfaction(&h.profile, &strategy, &cfg.kernel);
        h.worker.base_satisfaction = s0;
        h.worker.satisfaction = s0;
        h.worker.productivity = self.productivity_max * s0;
        h.embeddedness = 0.0;
        let roster = &mut self.firms[k].roster;
        let pos = roster.binary_search(&i).unwrap_err();
        roster.insert(pos, i);
        self.events.push(MatchEvent { step: t, kind, household: i, firm: k });
    }

    /// Advances the economy by one period and returns its consistency report.
    pub fn step(&mut self, cfg: &ScenarioConfig) -> Result<ConsistencyReport> {
        self.step += 1;
        let t = self.step;
        let f = self.finance;
        let n_hh = self.households.len();
        let n_f = self.firms.len();
        let lag = Lagged {
            bills: self.government.bills,
            bank_bills: self.bank.bills,
            cb_bills: self.central_bank.bills,
            reserves: self.bank.reserves,
            advances: self.bank.advances,
            bank_loans: self.bank.loans,
            bank_deposits: self.bank.deposits,
            firm_loans: self.firms.iter().map(|x| x.state.loans).collect(),
            deposits: self.households.iter().map(|h| h.finance.deposits).collect(),
        };
        let prev_firms: Vec<_> = self.firms.iter().map(|x| x.state.clone()).collect();
        let prev_finance: Vec<_> = self.households.iter().map(|h| h.finance).collect();
        for h in &mut self.households {
            h.prev_wage = h.wage;
            h.wage = 0.0;
            h.benefits = 0.0;
        }
        let mut stats = StepStats {
            employed_at_start: self.employed(),
            ..Default::default()
        };

        // 1. Prices, expected sales, planned output, labour demand.
        let global_mean_output = {
            let (sum, n) = self
                .firms
                .iter()
                .filter(|x| !x.roster.is_empty())
                .fold((0.0, 0usize), |(s, n), x| (s + x.mean_output * x.roster.len() as f64, n + x.roster.len()));
            if n > 0 {
                sum / n as f64
            } else {
                0.0
            }
        };
        for (k, firm) in self.firms.iter_mut().enumerate() {
            let prev = &prev_firms[k];
            let st = &mut firm.state;
            st.price = set_price(prev.unit_cost, cfg.markup).map_err(|e| Error::Structural {
                step: t,
                message: format!("firm {k}: {e}"),
            })?;
            st.expected_sales =
                expected_sales(prev.sales, prev.expected_sales, cfg.expectation_weight, cfg.expectation_mode).max(0.0);
            let plan = plan_output(
                st.expected_sales,
                prev.inventory,
                cfg.inventory_ratio,
                cfg.inventory_adjustment,
                f64::INFINITY,
            );
            st.inventory_target = plan.inventory_target;
            st.expected_inventory = plan.expected_inventory;
            st.planned_output = plan.output;
            st.labour_demand = labour_demand(plan.output, firm.mean_output, global_mean_output, firm.roster.len());
        }
        stats.labour_demand = self.firms.iter().map(|x| x.state.labour_demand).sum();

        // 2. Firing, referral hiring, signalling hires.
        let mut agents = self.labour_agents();
        let mut pool: Vec<usize> = (0..n_hh).filter(|&i| agents[i].employer.is_none()).collect();
        for k in 0..n_f {
            let demand = self.firms[k].state.labour_demand;
            let n = self.firms[k].roster.len();
            if demand < n {
                let fired = fire(n - demand, &self.firms[k].roster, &agents, t, cfg.firing_rule);
                for &i in &fired {
                    self.separate(i, k, MatchKind::Fire);
                    agents[i].employer = None;
                }
                stats.fires += fired.len();
            } else if demand > n {
                let hired = hire(k, demand - n, &pool, &agents, &self.network, t);
                for &i in &hired {
                    self.employ(i, k, MatchKind::Hire, cfg);
                    agents[i].employer = Some(k);
                }
                stats.hires += hired.len();
                pool.retain(|i| agents[*i].employer.is_none());
                let vacancies = demand - n - hired.len();
                if vacancies > 0 {
                    let signallers: Vec<usize> = pool
                        .iter()
                        .copied()
                        .filter(|&i| self.scheme.is_expired(t, agents[i].unemployment_spell))
                        .collect();
                    let hired = hire_signalling(vacancies, &signallers, &agents);
                    for &i in &hired {
                        self.employ(i, k, MatchKind::SignalHire, cfg);
                        agents[i].employer = Some(k);
                    }
                    stats.signal_hires += hired.len();
                    pool.retain(|i| agents[*i].employer.is_none());
                }
            }
        }
        drop(agents);

        // 3. Time allocation, production, pay, monitoring, satisfaction.
        let mut cooperation = vec![0.0; n_hh];
        for k in 0..n_f {
            let firm = &self.firms[k];
            let strategy = firm.strategy;
            let norm = firm.cooperation_norm;
            let roster = firm.roster.clone();
            let prev_uc = prev_firms[k].unit_cost;
            if roster.is_empty() {
                let st = &mut self.firms[k].state;
                st.potential_output = 0.0;
                st.output = 0.0;
                st.wage = 0.0;
                st.wage_bill = 0.0;
                st.unit_cost = unit_cost(0.0, 0.0, prev_uc);
                continue;
            }
            let mut team_coop = 0.0;
            for &i in &roster {
                let w = &mut self.households[i].worker;
                w.time = allocate_time(w.satisfaction, &strategy, norm, &cfg.kernel);
                team_coop += w.time.cooperative;
            }
            team_coop /= roster.len() as f64;
            let outputs: Vec<f64> = roster
                .iter()
                .map(|&i| {
                    let w = &mut self.households[i].worker;
                    w.output = individual_output(w.productivity, w.time.personal, team_coop, strategy.interdependence);
                    cooperation[i] = w.time.cooperative;
                    w.output
                })
                .collect();
            let pay = produce_and_pay(&outputs, &strategy);
            for (&i, &r) in roster.iter().zip(&pay.rewards) {
                self.households[i].wage = r;
            }
            let st = &mut self.firms[k].state;
            let plan = plan_output(
                st.expected_sales,
                prev_firms[k].inventory,
                cfg.inventory_ratio,
                cfg.inventory_adjustment,
                pay.potential_output,
            );
            st.potential_output = pay.potential_output;
            st.output = plan.output;
            st.wage = pay.wage;
            st.wage_bill = pay.wage_bill;
            st.unit_cost = unit_cost(pay.wage_bill, plan.output, prev_uc);

            let warned: Vec<bool> = if cfg.monitoring {
                let shirk: Vec<f64> = roster.iter().map(|&i| self.households[i].worker.time.shirk).collect();
                let caught = monitor_and_warn(&shirk, strategy.monitoring, cfg.kernel.shirk_tolerance, &mut self.rng);
                let mut flags = vec![false; roster.len()];
                for c in caught {
                    flags[c] = true;
                }
                flags
            } else {
                vec![false; roster.len()]
            };
            for (&i, &w) in roster.iter().zip(&warned) {
                let worker = &mut self.households[i].worker;
                if w {
                    worker.warnings.push(t);
                    stats.warnings += 1;
                }
                let (s, pi) = update_satisfaction(
                    worker.satisfaction,
                    worker.base_satisfaction,
                    w,
                    self.productivity_max,
                    &cfg.kernel,
                );
                worker.satisfaction = s;
                worker.productivity = pi;
            }
            let n = roster.len() as f64;
            let firm = &mut self.firms[k];
            firm.cooperation_norm = team_coop;
            firm.mean_output = pay.potential_output / n;
            if cfg.adaptation {
                firm.adapter.observe(firm.mean_output);
                if t % cfg.strategy.review_period == 0 {
                    let next = firm.adapter.adapt_strategy(&firm.strategy, &cfg.strategy, &mut self.rng);
                    if next != firm.strategy {
                        firm.strategy = next;
                        for &i in &roster {
                            let h = &mut self.households[i];
                            h.worker.base_satisfaction = base_satisfaction(&h.profile, &next, &cfg.kernel);
                        }
                    }
                }
            }
        }
        let rosters = self.rosters();
        self.intensity.update(&rosters, &cooperation, cfg.kernel.intensity_rate);
        for roster in &rosters {
            for &i in roster {
                self.households[i].embeddedness = self.intensity.embeddedness(i, roster);
            }
        }

        // 4. Benefits, taxes, consumption with homogeneous rationing.
        stats.median_wage = self.median_wage();
        let prices: Vec<f64> = self.firms.iter().map(|x| x.state.price).collect();
        let mut taxes = vec![0.0; n_hh];
        let seller = assign_sellers(n_hh, n_f, &mut self.rng);
        let mut demand = vec![0.0; n_hh];
        let mut firm_demand = vec![0.0; n_f];
        for i in 0..n_hh {
            let h = &mut self.households[i];
            if !h.worker.is_employed() {
                h.benefits =
                    self.scheme
                        .benefits(h.last_wage, stats.median_wage, t, h.worker.unemployment_spell);
            }
            taxes[i] = household_tax(h.prev_wage, &f);
            let k = seller[i];
            let prev = &prev_finance[i];
            let want = consumption_demand(prev.disposable_income, prev.deposits, prices[k], &f);
            let cap = spending_cap(prev.deposits, h.wage, h.benefits, taxes[i], &f) / prices[k];
            demand[i] = want.min(cap);
            firm_demand[k] += demand[i];
        }
        let mut factor = vec![1.0; n_f];
        let mut gov_real = vec![0.0; n_f];
        for k in 0..n_f {
            let total = firm_demand[k] + f.government_purchases;
            let available = self.firms[k].state.output + prev_firms[k].inventory;
            factor[k] = rationing_factor(total, available);
            if factor[k] < 1.0 {
                stats.rationed_firms += 1;
            }
            gov_real[k] = f.government_purchases * factor[k];
        }
        let mut revenue = vec![0.0; n_f];
        let mut sales = gov_real.clone();
        let mut real_consumption = vec![0.0; n_hh];
        for i in 0..n_hh {
            let k = seller[i];
            real_consumption[i] = demand[i] * factor[k];
            sales[k] += real_consumption[i];
            revenue[k] += real_consumption[i] * prices[k];
        }

        // 5. Inventories, loans, profits; bank profits; household income.
        let mut firm_profits = 0.0;
        let mut delta_inv = vec![0.0; n_f];
        let mut gov_spending = vec![0.0; n_f];
        for k in 0..n_f {
            let prev = &prev_firms[k];
            gov_spending[k] = gov_real[k] * prices[k];
            let st = &mut self.firms[k].state;
            let s = settle(&SettleInputs {
                sales: sales[k],
                output: st.output,
                prev_inventory: prev.inventory,
                unit_cost: st.unit_cost,
                prev_nominal_inventory: prev.nominal_inventory,
                prev_loans: prev.loans,
                consumption: revenue[k],
                government: gov_spending[k],
                wage_bill: st.wage_bill,
                loan_rate: f.loan_rate,
            })
            .map_err(|e| Error::Structural {
                step: t,
                message: format!("firm {k}: {e}"),
            })?;
            st.sales = sales[k];
            st.inventory = s.inventory;
            st.nominal_inventory = s.nominal_inventory;
            st.loans = s.loans;
            st.profits = s.profits;
            delta_inv[k] = s.change_in_inventories;
            firm_profits += s.profits;
        }
        let prev_bank = self.bank;
        let bank_profits = crate::aggregates::bank_profits(&prev_bank, &f);
        let pf_share = firm_profits / n_hh as f64;
        let pb_share = bank_profits / n_hh as f64;
        for i in 0..n_hh {
            let h = &mut self.households[i];
            h.finance = household_finance_step(
                &prev_finance[i],
                real_consumption[i],
                prices[seller[i]],
                h.wage,
                h.benefits,
                pf_share,
                pb_share,
                taxes[i],
                &f,
            );
        }

        // 6. Central bank profits, bills, bank portfolio.
        let cb_profits = central_bank_profits(lag.cb_bills, lag.reserves, lag.advances, f.bill_rate);
        let total_taxes: f64 = taxes.iter().sum();
        let total_benefits: f64 = self.households.iter().map(|h| h.benefits).sum();
        let spending: f64 = gov_spending.iter().sum();
        self.government = GovernmentState {
            spending,
            taxes: total_taxes,
            benefits: total_benefits,
            bills: government_bills(lag.bills, spending, total_benefits, total_taxes, cb_profits, f.bill_rate),
        };
        let deposits: f64 = self.households.iter().map(|h| h.finance.deposits).sum();
        let loans: f64 = lag.bank_loans + delta_inv.iter().sum::<f64>();
        self.bank = bank_step(&prev_bank, deposits, loans, &f);
        self.central_bank = CentralBankState {
            bills: central_bank_bills(self.government.bills, self.bank.bills, t)?,
            profits: cb_profits,
        };

        // 7. Quitting.
        if cfg.quitting {
            let agents: Vec<LabourAgent> = self.labour_agents();
            let quits = quit(&rosters, &agents, &self.network, t);
            for &i in &quits {
                let k = agents[i].employer.expect("quitters are employed");
                self.separate(i, k, MatchKind::Quit);
            }
            stats.quits = quits.len();
        }

        for h in &mut self.households {
            let w = &mut h.worker;
            account_spell(w.employer.is_some(), &mut w.unemployment_spell, &mut w.employment_spell);
        }
        stats.employed = self.employed();
        stats.real_output = self.firms.iter().map(|x| x.state.output).sum();
        stats.real_consumption = real_consumption.iter().sum();

        // Flows, net worths, consistency.
        let mut fm = FlowMatrix::new();
        let rec = |fm: &mut FlowMatrix, flow: Flow, account: Account, v: f64| fm.record(flow, account, v);
        let hh_sum = |g: &dyn Fn(usize) -> f64| (0..n_hh).map(g).sum::<f64>();
        let households = &self.households;
        let total_revenue: f64 = revenue.iter().sum();
        rec(&mut fm, Flow::Consumption, Account::FirmsCurrent, total_revenue)?;
        rec(&mut fm, Flow::Consumption, Account::Households, -hh_sum(&|i| households[i].finance.consumption))?;
        rec(&mut fm, Flow::GovernmentExpenditure, Account::Government, -self.government.spending)?;
        rec(&mut fm, Flow::GovernmentExpenditure, Account::FirmsCurrent, spending)?;
        let d_inv: f64 = delta_inv.iter().sum();
        rec(&mut fm, Flow::ChangeInInventories, Account::FirmsCurrent, d_inv)?;
        rec(&mut fm, Flow::ChangeInInventories, Account::FirmsCapital, -d_inv)?;
        let wage_bill: f64 = self.firms.iter().map(|x| x.state.wage_bill).sum();
        rec(&mut fm, Flow::Wages, Account::FirmsCurrent, -wage_bill)?;
        rec(&mut fm, Flow::Wages, Account::Households, hh_sum(&|i| households[i].wage))?;
        rec(&mut fm, Flow::Taxes, Account::Government, self.government.taxes)?;
        rec(&mut fm, Flow::Taxes, Account::Households, -hh_sum(&|i| households[i].finance.tax))?;
        rec(&mut fm, Flow::UnemploymentBenefits, Account::Government, -self.government.benefits)?;
        rec(&mut fm, Flow::UnemploymentBenefits, Account::Households, hh_sum(&|i| households[i].benefits))?;
        rec(&mut fm, Flow::InterestOnBills, Account::Government, -f.bill_rate * lag.bills)?;
        rec(&mut fm, Flow::InterestOnBills, Account::BankCurrent, f.bill_rate * lag.bank_bills)?;
        rec(&mut fm, Flow::InterestOnBills, Account::CentralBankCurrent, f.bill_rate * lag.cb_bills)?;
        let firm_interest: f64 = lag.firm_loans.iter().map(|l| f.loan_rate * l).sum();
        rec(&mut fm, Flow::InterestOnLoans, Account::FirmsCurrent, -firm_interest)?;
        rec(&mut fm, Flow::InterestOnLoans, Account::BankCurrent, f.loan_rate * lag.bank_loans)?;
        rec(&mut fm, Flow::InterestOnReserves, Account::BankCurrent, f.bill_rate * lag.reserves)?;
        rec(&mut fm, Flow::InterestOnReserves, Account::CentralBankCurrent, -f.bill_rate * lag.reserves)?;
        rec(&mut fm, Flow::InterestOnAdvances, Account::BankCurrent, -f.bill_rate * lag.advances)?;
        rec(&mut fm, Flow::InterestOnAdvances, Account::CentralBankCurrent, f.bill_rate * lag.advances)?;
        rec(
            &mut fm,
            Flow::InterestOnDeposits,
            Account::Households,
            lag.deposits.iter().map(|d| f.deposit_rate * d).sum(),
        )?;
        rec(&mut fm, Flow::InterestOnDeposits, Account::BankCurrent, -f.deposit_rate * lag.bank_deposits)?;
        rec(&mut fm, Flow::FirmProfits, Account::FirmsCurrent, -firm_profits)?;
        rec(&mut fm, Flow::FirmProfits, Account::Households, pf_share * n_hh as f64)?;
        rec(&mut fm, Flow::BankProfits, Account::Households, pb_share * n_hh as f64)?;
        rec(&mut fm, Flow::BankProfits, Account::BankCurrent, -self.bank.profits)?;
        rec(&mut fm, Flow::CentralBankProfits, Account::Government, cb_profits)?;
        rec(&mut fm, Flow::CentralBankProfits, Account::CentralBankCurrent, -cb_profits)?;
        rec(&mut fm, Flow::ChangeInBills, Account::Government, self.government.bills - lag.bills)?;
        rec(&mut fm, Flow::ChangeInBills, Account::BankCapital, -(self.bank.bills - lag.bank_bills))?;
        rec(&mut fm, Flow::ChangeInBills, Account::CentralBankCapital, -(self.central_bank.bills - lag.cb_bills))?;
        let d_firm_loans: f64 = self
            .firms
            .iter()
            .zip(&lag.firm_loans)
            .map(|(x, l)| x.state.loans - l)
            .sum();
        rec(&mut fm, Flow::ChangeInLoans, Account::FirmsCapital, d_firm_loans)?;
        rec(&mut fm, Flow::ChangeInLoans, Account::BankCapital, -(self.bank.loans - lag.bank_loans))?;
        rec(
            &mut fm,
            Flow::ChangeInDeposits,
            Account::Households,
            -hh_sum(&|i| households[i].finance.deposits - lag.deposits[i]),
        )?;
        rec(&mut fm, Flow::ChangeInDeposits, Account::BankCapital, self.bank.deposits - lag.bank_deposits)?;
        rec(&mut fm, Flow::ChangeInReserves, Account::BankCapital, -(self.bank.reserves - lag.reserves))?;
        rec(&mut fm, Flow::ChangeInReserves, Account::CentralBankCapital, self.bank.reserves - lag.reserves)?;
        rec(&mut fm, Flow::ChangeInAdvances, Account::BankCapital, self.bank.advances - lag.advances)?;
        rec(&mut fm, Flow::ChangeInAdvances, Account::CentralBankCapital, -(self.bank.advances - lag.advances))?;

        // Net worths move with each sector's current-account balance.
        let current = |fm: &FlowMatrix, a: Account| {
            Flow::ALL
                .iter()
                .filter(|r| r.is_current())
                .map(|&r| fm.get(r, a))
                .sum::<f64>()
        };
        self.net_worth.households += current(&fm, Account::Households);
        self.net_worth.firms += current(&fm, Account::FirmsCurrent);
        self.net_worth.bank += current(&fm, Account::BankCurrent);
        self.net_worth.government_debt -= current(&fm, Account::Government);
        self.net_worth.central_bank += current(&fm, Account::CentralBankCurrent);

        self.flows = fm;
        self.balance = self.balance_sheet();
        self.stats = stats;
        let report = check_consistency(&self.balance, &self.flows, cfg.sfc_tolerance);
        if cfg.sfc_strict {
            if let Some(worst) = report.violations().max_by(|a, b| a.relative().total_cmp(&b.relative())) {
                return Err(Error::Consistency {
                    step: t,
                    label: worst.check.to_string(),
                    residual: worst.residual,
                });
            }
        }
        Ok(report)
    }
}
