//! Aggregate stationary state under full employment.
//!
//! Output, the wage and the headcount are given. Prices follow from the
//! mark-up, bills from the debt ratio and loans from inventories. The
//! remaining unknowns are deposits D, the tax rate τ and the propensity to
//! consume out of wealth ᾱ₂. They are found by Gauss-Seidel sweeps on
//!
//! * H − Bcb − A = 0 (the central bank's bills equal reserves net of advances),
//! * G + i_b B − T − Pcb = 0 (no new bills),
//! * C − ᾱ₁ Yd − ᾱ₂ D = 0 (households hold deposits constant),
//!
//! starting from the published reference values.

use serde::{Deserialize, Serialize};

use crate::aggregates::{bank_position, central_bank_profits, FinanceParams};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};

/// Published reference values of the initial aggregate state.
pub const REFERENCE: [(&str, f64); 22] = [
    ("y", 558.787517),
    ("W", 8.0),
    ("WB", 4000.0),
    ("UC", 7.158356),
    ("inv", 558.787517),
    ("INV", 4000.0),
    ("p", 10.021698),
    ("G", 1002.16984),
    ("c", 458.787517),
    ("UB", 0.0),
    ("T", 720.0),
    ("C", 4597.830153),
    ("Yd", 4597.830153),
    ("D", 4502.908765),
    ("L", 4000.0),
    ("Pf", 1580.0),
    ("H", 1576.018067),
    ("Bb", 0.0),
    ("A", 1073.109302),
    ("Pb", 8.5029087),
    ("Bcb", 502.9087653),
    ("B", 502.9087653),
];

pub const SOLVER_TOLERANCE: f64 = 1e-8;
const MAX_SWEEPS: usize = 500;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StationaryState {
    pub output: f64,
    pub employed: usize,
    pub wage: f64,
    pub wage_bill: f64,
    pub unit_cost: f64,
    pub price: f64,
    pub inventory: f64,
    pub nominal_inventory: f64,
    pub government_spending: f64,
    pub real_consumption: f64,
    pub consumption: f64,
    pub benefits: f64,
    pub taxes: f64,
    pub tax_rate: f64,
    pub disposable_income: f64,
    pub deposits: f64,
    pub loans: f64,
    pub firm_profits: f64,
    pub reserves: f64,
    pub bank_bills: f64,
    pub advances: f64,
    pub bank_profits: f64,
    pub central_bank_bills: f64,
    pub central_bank_profits: f64,
    pub bills: f64,
    pub propensity_wealth: f64,
    pub sweeps: usize,
    pub residuals: [f64; 3],
}

impl StationaryState {
    pub fn value(&self, symbol: &str) -> Option<f64> {
        Some(match symbol {
            "y" => self.output,
            "W" => self.wage,
            "WB" => self.wage_bill,
            "UC" => self.unit_cost,
            "inv" => self.inventory,
            "INV" => self.nominal_inventory,
            "p" => self.price,
            "G" => self.government_spending,
            "c" => self.real_consumption,
            "UB" => self.benefits,
            "T" => self.taxes,
            "C" => self.consumption,
            "Yd" => self.disposable_income,
            "D" => self.deposits,
            "L" => self.loans,
            "Pf" => self.firm_profits,
            "H" => self.reserves,
            "Bb" => self.bank_bills,
            "A" => self.advances,
            "Pb" => self.bank_profits,
            "Bcb" => self.central_bank_bills,
            "Pcb" => self.central_bank_profits,
            "B" => self.bills,
            _ => return None,
        })
    }

    /// Reference values the solution departs from by more than `tol`
    /// (relative to max(1, |reference|)).
    pub fn deviations(&self, tol: f64) -> Vec<Deviation> {
        REFERENCE
            .iter()
            .filter_map(|&(symbol, reference)| {
                let solved = self.value(symbol)?;
                let gap = solved - reference;
                (gap.abs() > tol * reference.abs().max(1.0)).then_some(Deviation {
                    symbol,
                    reference,
                    solved,
                })
            })
            .collect()
    }

    /// Finance parameters with the solved tax rate and ᾱ₂.
    pub fn finance(&self, base: &FinanceParams) -> FinanceParams {
        FinanceParams {
            tax_rate: self.tax_rate,
            propensity_wealth: self.propensity_wealth,
            ..*base
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub symbol: &'static str,
    pub reference: f64,
    pub solved: f64,
}

impl std::fmt::Display for Deviation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: reference {} solved {:.6} ({:+.6})",
            self.symbol,
            self.reference,
            self.solved,
            self.solved - self.reference
        )
    }
}

fn reference(symbol: &str) -> f64 {
    REFERENCE.iter().find(|r| r.0 == symbol).map(|r| r.1).unwrap_or(0.0)
}

pub fn solve_stationary(cfg: &ScenarioConfig) -> Result<StationaryState> {
    let f = &cfg.finance;
    let employed = cfg.households;
    let n = employed as f64;
    let output = cfg.initial_output;
    let wage = cfg.strategy.base_wage;
    let wage_bill = wage * n;
    let unit_cost = wage_bill / output;
    let price = unit_cost * (1.0 + cfg.markup);
    let government_spending = f.government_purchases * cfg.firms as f64 * price;
    let real_consumption = output - f.government_purchases * cfg.firms as f64;
    if real_consumption <= 0.0 {
        return Err(Error::Initialization(format!(
            "government purchases {} exceed output {output}",
            f.government_purchases * cfg.firms as f64
        )));
    }
    let consumption = real_consumption * price;
    let inventory = cfg.inventory_ratio * output;
    let nominal_inventory = inventory * unit_cost;
    let loans = nominal_inventory;
    let bills = cfg.debt_ratio * price * output;
    let firm_profits = consumption + government_spending - wage_bill - f.loan_rate * loans;

    let mut deposits = reference("D");
    let mut tax_rate = f.tax_rate;
    let mut alpha2 = f.propensity_wealth;
    let mut residuals = [f64::INFINITY; 3];
    let scale = consumption.max(1.0);

    for sweep in 1..=MAX_SWEEPS {
        // Deposits: close H = Bcb + A.
        let pos = bank_position(deposits, loans, f);
        let cb_bills = bills - pos.bills;
        deposits += cb_bills + pos.advances - pos.reserves;

        // Tax rate: no new bills.
        let pos = bank_position(deposits, loans, f);
        let cb_bills = bills - pos.bills;
        let pcb = central_bank_profits(cb_bills, pos.reserves, pos.advances, f.bill_rate);
        tax_rate = (government_spending + f.bill_rate * bills - pcb) / wage_bill;

        // ᾱ₂: households neither save nor dissave.
        let taxes = tax_rate * wage_bill;
        let pb = f.loan_rate * loans + f.bill_rate * (pos.bills + pos.reserves - pos.advances)
            - f.deposit_rate * deposits;
        let yd = wage_bill + firm_profits + pb + f.deposit_rate * deposits - taxes;
        alpha2 = (consumption - f.propensity_income * yd) / deposits;

        residuals = [
            pos.reserves - cb_bills - pos.advances,
            government_spending + f.bill_rate * bills - taxes - pcb,
            consumption - f.propensity_income * yd - alpha2 * deposits,
        ];
        let saving = yd - consumption;
        if residuals.iter().all(|r| r.abs() < SOLVER_TOLERANCE * scale)
            && saving.abs() < SOLVER_TOLERANCE * scale
        {
            return Ok(StationaryState {
                output,
                employed,
                wage,
                wage_bill,
                unit_cost,
                price,
                inventory,
                nominal_inventory,
                government_spending,
                real_consumption,
                consumption,
                benefits: 0.0,
                taxes,
                tax_rate,
                disposable_income: yd,
                deposits,
                loans,
                firm_profits,
                reserves: pos.reserves,
                bank_bills: pos.bills,
                advances: pos.advances,
                bank_profits: pb,
                central_bank_bills: cb_bills,
                central_bank_profits: pcb,
                bills,
                propensity_wealth: alpha2,
                sweeps: sweep,
                residuals,
            });
        }
    }
    Err(Error::Initialization(format!(
        "stationary state did not converge in {MAX_SWEEPS} sweeps; residuals \
         [reserves - bills - advances, budget, household saving] = {residuals:?}, \
         D = {deposits}, tau = {tax_rate}, alpha2 = {alpha2}"
    )))
}
