//! Government, bank, central bank and household finance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rates and coefficients of the financial sectors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinanceParams {
    /// ḡ: real purchases per firm.
    pub government_purchases: f64,
    /// τ̄_g.
    pub tax_rate: f64,
    pub bill_rate: f64,
    pub loan_rate: f64,
    pub deposit_rate: f64,
    /// μ̄_cb.
    pub reserve_ratio: f64,
    /// v̄.
    pub liquidity_ratio: f64,
    /// ᾱ₁.
    pub propensity_income: f64,
    /// ᾱ₂.
    pub propensity_wealth: f64,
}

impl Default for FinanceParams {
    fn default() -> Self {
        Self {
            government_purchases: 20.0,
            tax_rate: 0.18,
            bill_rate: 0.004,
            loan_rate: 0.005,
            deposit_rate: 0.003,
            reserve_ratio: 0.35 - 0.2383,
            liquidity_ratio: 0.2383,
            propensity_income: 0.8,
            propensity_wealth: 0.2042,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GovernmentState {
    pub spending: f64,
    pub taxes: f64,
    pub benefits: f64,
    /// Bills outstanding B.
    pub bills: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BankState {
    pub deposits: f64,
    pub loans: f64,
    /// High-powered money H.
    pub reserves: f64,
    pub bills: f64,
    pub advances: f64,
    pub profits: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CentralBankState {
    pub bills: f64,
    pub profits: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HouseholdFinance {
    pub disposable_income: f64,
    pub deposits: f64,
    /// Nominal consumption C.
    pub consumption: f64,
    /// Real consumption c.
    pub real_consumption: f64,
    pub tax: f64,
}

/// G = ḡ · Σ p.
pub fn government_spending(purchases_per_firm: f64, prices: &[f64]) -> f64 {
    purchases_per_firm * prices.iter().sum::<f64>()
}

/// B_t = B_{t−1}(1 + i_b) + G + UB − T − Pcb.
pub fn government_bills(
    prev_bills: f64,
    spending: f64,
    benefits: f64,
    taxes: f64,
    cb_profits: f64,
    bill_rate: f64,
) -> f64 {
    prev_bills * (1.0 + bill_rate) + spending + benefits - taxes - cb_profits
}

pub fn government_step(
    prev: &GovernmentState,
    prices: &[f64],
    taxes: f64,
    benefits: f64,
    cb_profits: f64,
    params: &FinanceParams,
) -> GovernmentState {
    let spending = government_spending(params.government_purchases, prices);
    GovernmentState {
        spending,
        taxes,
        benefits,
        bills: government_bills(prev.bills, spending, benefits, taxes, cb_profits, params.bill_rate),
    }
}

/// Reserves, bills and advances for given deposits and loans.
///
/// H = (μ̄_cb + v̄)D. When D − L − H ≤ 0 the bank holds no bills and borrows
/// A = H + L − D. Otherwise A = v̄D and the bank puts the rest of its funding,
/// D + A − L − H, into bills.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BankPosition {
    pub reserves: f64,
    pub bills: f64,
    pub advances: f64,
}

pub fn bank_position(deposits: f64, loans: f64, params: &FinanceParams) -> BankPosition {
    let reserves = (params.reserve_ratio + params.liquidity_ratio) * deposits;
    let surplus = deposits - loans - reserves;
    if surplus > 0.0 {
        let advances = params.liquidity_ratio * deposits;
        BankPosition {
            reserves,
            bills: deposits + advances - loans - reserves,
            advances,
        }
    } else {
        BankPosition {
            reserves,
            bills: 0.0,
            advances: reserves + loans - deposits,
        }
    }
}

/// Pb_t = i_l L + i_b Bb + i_b H − i_d D − i_b A, all lagged.
pub fn bank_profits(prev: &BankState, params: &FinanceParams) -> f64 {
    params.loan_rate * prev.loans + params.bill_rate * (prev.bills + prev.reserves - prev.advances)
        - params.deposit_rate * prev.deposits
}

pub fn bank_step(prev: &BankState, deposits: f64, loans: f64, params: &FinanceParams) -> BankState {
    let pos = bank_position(deposits, loans, params);
    BankState {
        deposits,
        loans,
        reserves: pos.reserves,
        bills: pos.bills,
        advances: pos.advances,
        profits: bank_profits(prev, params),
    }
}

/// Pcb_t = i_b (Bcb − H + A), all lagged.
pub fn central_bank_profits(prev_bills: f64, prev_reserves: f64, prev_advances: f64, bill_rate: f64) -> f64 {
    bill_rate * (prev_bills - prev_reserves + prev_advances)
}

/// Bcb = B − Bb. A negative holding means the bills market cannot clear.
pub fn central_bank_bills(bills: f64, bank_bills: f64, step: u32) -> Result<f64> {
    let bcb = bills - bank_bills;
    if bcb < -1e-9 * (1.0 + bills.abs()) {
        return Err(Error::Structural {
            step,
            message: format!("central bank bills negative: B = {bills}, Bb = {bank_bills}"),
        });
    }
    Ok(bcb)
}

/// c = (ᾱ₁ Yd_{t−1} + ᾱ₂ Dh_{t−1}) / p*.
pub fn consumption_demand(prev_income: f64, prev_deposits: f64, price: f64, params: &FinanceParams) -> f64 {
    if price <= 0.0 {
        return 0.0;
    }
    let nominal = params.propensity_income * prev_income + params.propensity_wealth * prev_deposits;
    nominal.max(0.0) / price
}

/// tax = τ̄_g · W_{t−1}.
pub fn household_tax(prev_wage: f64, params: &FinanceParams) -> f64 {
    params.tax_rate * prev_wage
}

/// Yd = W + UB + Pf share + Pb share + i_d Dh_{t−1} − tax.
pub fn disposable_income(
    wage: f64,
    benefits: f64,
    firm_profit_share: f64,
    bank_profit_share: f64,
    prev_deposits: f64,
    tax: f64,
    params: &FinanceParams,
) -> f64 {
    wage + benefits + firm_profit_share + bank_profit_share + params.deposit_rate * prev_deposits - tax
}

/// Nominal spending a household can finance without borrowing, counting only
/// income already received this step.
pub fn spending_cap(prev_deposits: f64, wage: f64, benefits: f64, tax: f64, params: &FinanceParams) -> f64 {
    (prev_deposits + wage + benefits + params.deposit_rate * prev_deposits - tax).max(0.0)
}

/// Closes a household's books for the step once its purchases are known.
#[allow(clippy::too_many_arguments)]
pub fn household_finance_step(
    prev: &HouseholdFinance,
    real_consumption: f64,
    price: f64,
    wage: f64,
    benefits: f64,
    firm_profit_share: f64,
    bank_profit_share: f64,
    tax: f64,
    params: &FinanceParams,
) -> HouseholdFinance {
    let consumption = real_consumption * price;
    let disposable_income = disposable_income(
        wage,
        benefits,
        firm_profit_share,
        bank_profit_share,
        prev.deposits,
        tax,
        params,
    );
    HouseholdFinance {
        disposable_income,
        deposits: prev.deposits + disposable_income - consumption,
        consumption,
        real_consumption,
        tax,
    }
}
