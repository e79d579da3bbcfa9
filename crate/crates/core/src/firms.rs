//! Per-firm pricing, expectations, inventory planning, production, wage
//! payment, loans and profits.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::behavior::{reward, ManagementStrategy};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FirmState {
    pub price: f64,
    pub unit_cost: f64,
    /// Mean reward paid per worker (W).
    pub wage: f64,
    pub wage_bill: f64,
    pub sales: f64,
    pub expected_sales: f64,
    /// Real inventories.
    pub inventory: f64,
    pub inventory_target: f64,
    pub expected_inventory: f64,
    /// Inventories valued at unit cost (INV).
    pub nominal_inventory: f64,
    pub loans: f64,
    pub profits: f64,
    pub output: f64,
    pub potential_output: f64,
    /// Demand-side output target set before hiring and production.
    pub planned_output: f64,
    pub labour_demand: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExpectationMode {
    /// s^exp = β s + (1−β)(s − s^exp), the literal form.
    AsWritten,
    /// s^exp = s^exp + β(s − s^exp).
    #[default]
    Adaptive,
}

impl std::str::FromStr for ExpectationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adaptive" => Ok(Self::Adaptive),
            "as-written" | "as_written" => Ok(Self::AsWritten),
            _ => Err(Error::Config(format!(
                "unknown expectation mode `{s}` (expected adaptive|as-written)"
            ))),
        }
    }
}

impl ExpectationMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Adaptive => "adaptive",
            Self::AsWritten => "as-written",
        }
    }
}

/// Mark-up on last period's unit cost.
pub fn set_price(prev_unit_cost: f64, markup: f64) -> Result<f64> {
    if !(prev_unit_cost > 0.0) {
        return Err(Error::Initialization(format!(
            "unit cost must be positive to set a price, got {prev_unit_cost}"
        )));
    }
    Ok(prev_unit_cost * (1.0 + markup))
}

pub fn expected_sales(
    prev_sales: f64,
    prev_expected: f64,
    beta: f64,
    mode: ExpectationMode,
) -> f64 {
    match mode {
        ExpectationMode::AsWritten => beta * prev_sales + (1.0 - beta) * (prev_sales - prev_expected),
        ExpectationMode::Adaptive => prev_expected + beta * (prev_sales - prev_expected),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutputPlan {
    pub inventory_target: f64,
    pub expected_inventory: f64,
    pub output: f64,
}

/// Inventory targets and Leontief output, capped by potential output and
/// floored at zero. Pass `f64::INFINITY` for the uncapped demand-side plan.
pub fn plan_output(
    expected_sales: f64,
    prev_inventory: f64,
    inventory_ratio: f64,
    inventory_adjustment: f64,
    potential_output: f64,
) -> OutputPlan {
    let inventory_target = inventory_ratio * expected_sales;
    let expected_inventory = prev_inventory + inventory_adjustment * (inventory_target - prev_inventory);
    let output = (expected_sales + expected_inventory - prev_inventory)
        .min(potential_output)
        .max(0.0);
    OutputPlan {
        inventory_target,
        expected_inventory,
        output,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Payroll {
    pub potential_output: f64,
    /// Reward per roster member, same order as the outputs passed in.
    pub rewards: Vec<f64>,
    pub wage: f64,
    pub wage_bill: f64,
}

/// Potential output is the sum of individual outputs; each worker is paid
/// their reward and the firm wage is the mean reward.
pub fn produce_and_pay(outputs: &[f64], strategy: &ManagementStrategy) -> Payroll {
    if outputs.is_empty() {
        return Payroll {
            potential_output: 0.0,
            rewards: Vec::new(),
            wage: 0.0,
            wage_bill: 0.0,
        };
    }
    let potential_output: f64 = outputs.iter().sum();
    let team_mean = potential_output / outputs.len() as f64;
    let rewards: Vec<f64> = outputs.iter().map(|&o| reward(o, team_mean, strategy)).collect();
    let wage_bill: f64 = rewards.iter().sum();
    Payroll {
        potential_output,
        wage: wage_bill / rewards.len() as f64,
        rewards,
        wage_bill,
    }
}

/// WB / y, carrying the previous unit cost forward when nothing is produced.
pub fn unit_cost(wage_bill: f64, output: f64, prev_unit_cost: f64) -> f64 {
    if output > 0.0 && wage_bill > 0.0 {
        wage_bill / output
    } else {
        prev_unit_cost
    }
}

/// Fraction of demand that can be served from output plus last period's stock.
pub fn rationing_factor(demand: f64, available: f64) -> f64 {
    if demand > available && demand > 0.0 {
        (available / demand).max(0.0)
    } else {
        1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Settlement {
    pub inventory: f64,
    pub nominal_inventory: f64,
    pub change_in_inventories: f64,
    pub loans: f64,
    pub profits: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SettleInputs {
    pub sales: f64,
    pub output: f64,
    pub prev_inventory: f64,
    pub unit_cost: f64,
    pub prev_nominal_inventory: f64,
    pub prev_loans: f64,
    /// Nominal household consumption bought from this firm.
    pub consumption: f64,
    /// Nominal government purchases from this firm.
    pub government: f64,
    pub wage_bill: f64,
    pub loan_rate: f64,
}

/// Inventories, loans financing their change, and profits.
pub fn settle(x: &SettleInputs) -> Result<Settlement> {
    let inventory = x.prev_inventory + x.output - x.sales;
    // Rationing guarantees sales ≤ output + stock; allow rounding noise only.
    if inventory < -1e-9 * (1.0 + x.sales) {
        return Err(Error::InvalidInput(format!(
            "sales {} exceed output {} plus inventory {}",
            x.sales, x.output, x.prev_inventory
        )));
    }
    let inventory = inventory.max(0.0);
    let nominal_inventory = inventory * x.unit_cost;
    let change_in_inventories = nominal_inventory - x.prev_nominal_inventory;
    let loans = x.prev_loans + change_in_inventories;
    let profits = x.consumption + x.government + change_in_inventories
        - x.wage_bill
        - x.loan_rate * x.prev_loans;
    Ok(Settlement {
        inventory,
        nominal_inventory,
        change_in_inventories,
        loans,
        profits,
    })
}

/// n^d = ⌈y / Ō⌉. Falls back to the economy-wide mean output when the roster
/// is empty, and to the current headcount when no mean is available.
pub fn labour_demand(output: f64, roster_mean_output: f64, global_mean_output: f64, current: usize) -> usize {
    if output <= 0.0 {
        return 0;
    }
    let mean = if roster_mean_output > 0.0 {
        roster_mean_output
    } else if global_mean_output > 0.0 {
        global_mean_output
    } else {
        return current;
    };
    // Absorb rounding so an exact integer ratio is not pushed up by one.
    (output / mean - 1e-9).ceil().max(0.0) as usize
}

/// One seller per household for this step. Each household's seller is
/// uniform over firms, and customers are dealt out so that head counts differ
/// by at most one between firms.
pub fn assign_sellers<R: Rng + ?Sized>(n_households: usize, n_firms: usize, rng: &mut R) -> Vec<usize> {
    if n_firms == 0 {
        return Vec::new();
    }
    let mut firms: Vec<usize> = (0..n_firms).collect();
    firms.shuffle(rng);
    let mut out: Vec<usize> = (0..n_households).map(|j| firms[j % n_firms]).collect();
    out.shuffle(rng);
    out
}
