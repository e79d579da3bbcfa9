//! Sectoral balance sheet and transaction-flow matrix, with the checks that
//! every row and column closes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative tolerance for identity checks.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

/// Rows of the transaction-flow matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Flow {
    Consumption,
    GovernmentExpenditure,
    ChangeInInventories,
    Wages,
    Taxes,
    UnemploymentBenefits,
    InterestOnBills,
    InterestOnLoans,
    InterestOnReserves,
    InterestOnAdvances,
    InterestOnDeposits,
    FirmProfits,
    BankProfits,
    CentralBankProfits,
    ChangeInBills,
    ChangeInLoans,
    ChangeInDeposits,
    ChangeInReserves,
    ChangeInAdvances,
}

/// Columns of the transaction-flow matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Account {
    Government,
    FirmsCurrent,
    FirmsCapital,
    Households,
    BankCurrent,
    BankCapital,
    CentralBankCurrent,
    CentralBankCapital,
}

impl Flow {
    pub const ALL: [Flow; 19] = [
        Flow::Consumption,
        Flow::GovernmentExpenditure,
        Flow::ChangeInInventories,
        Flow::Wages,
        Flow::Taxes,
        Flow::UnemploymentBenefits,
        Flow::InterestOnBills,
        Flow::InterestOnLoans,
        Flow::InterestOnReserves,
        Flow::InterestOnAdvances,
        Flow::InterestOnDeposits,
        Flow::FirmProfits,
        Flow::BankProfits,
        Flow::CentralBankProfits,
        Flow::ChangeInBills,
        Flow::ChangeInLoans,
        Flow::ChangeInDeposits,
        Flow::ChangeInReserves,
        Flow::ChangeInAdvances,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Flow::Consumption => "consumption",
            Flow::GovernmentExpenditure => "government_expenditure",
            Flow::ChangeInInventories => "change_in_inventories",
            Flow::Wages => "wages",
            Flow::Taxes => "taxes",
            Flow::UnemploymentBenefits => "unemployment_benefits",
            Flow::InterestOnBills => "interest_on_bills",
            Flow::InterestOnLoans => "interest_on_loans",
            Flow::InterestOnReserves => "interest_on_reserves",
            Flow::InterestOnAdvances => "interest_on_advances",
            Flow::InterestOnDeposits => "interest_on_deposits",
            Flow::FirmProfits => "firm_profits",
            Flow::BankProfits => "bank_profits",
            Flow::CentralBankProfits => "central_bank_profits",
            Flow::ChangeInBills => "change_in_bills",
            Flow::ChangeInLoans => "change_in_loans",
            Flow::ChangeInDeposits => "change_in_deposits",
            Flow::ChangeInReserves => "change_in_reserves",
            Flow::ChangeInAdvances => "change_in_advances",
        }
    }

    /// The accounts that carry a non-empty cell in this row.
    pub fn accounts(self) -> &'static [Account] {
        use Account::*;
        match self {
            Flow::Consumption => &[FirmsCurrent, Households],
            Flow::GovernmentExpenditure => &[Government, FirmsCurrent],
            Flow::ChangeInInventories => &[FirmsCurrent, FirmsCapital],
            Flow::Wages => &[FirmsCurrent, Households],
            Flow::Taxes => &[Government, Households],
            Flow::UnemploymentBenefits => &[Government, Households],
            Flow::InterestOnBills => &[Government, BankCurrent, CentralBankCurrent],
            Flow::InterestOnLoans => &[FirmsCurrent, BankCurrent],
            Flow::InterestOnReserves => &[BankCurrent, CentralBankCurrent],
            Flow::InterestOnAdvances => &[BankCurrent, CentralBankCurrent],
            Flow::InterestOnDeposits => &[Households, BankCurrent],
            Flow::FirmProfits => &[FirmsCurrent, Households],
            Flow::BankProfits => &[Households, BankCurrent],
            Flow::CentralBankProfits => &[Government, CentralBankCurrent],
            Flow::ChangeInBills => &[Government, BankCapital, CentralBankCapital],
            Flow::ChangeInLoans => &[FirmsCapital, BankCapital],
            Flow::ChangeInDeposits => &[Households, BankCapital],
            Flow::ChangeInReserves => &[BankCapital, CentralBankCapital],
            Flow::ChangeInAdvances => &[BankCapital, CentralBankCapital],
        }
    }

    /// Income and expenditure rows, as opposed to changes in stocks.
    pub fn is_current(self) -> bool {
        !matches!(
            self,
            Flow::ChangeInBills
                | Flow::ChangeInLoans
                | Flow::ChangeInDeposits
                | Flow::ChangeInReserves
                | Flow::ChangeInAdvances
        )
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl Account {
    pub const ALL: [Account; 8] = [
        Account::Government,
        Account::FirmsCurrent,
        Account::FirmsCapital,
        Account::Households,
        Account::BankCurrent,
        Account::BankCapital,
        Account::CentralBankCurrent,
        Account::CentralBankCapital,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Account::Government => "government",
            Account::FirmsCurrent => "firms_current",
            Account::FirmsCapital => "firms_capital",
            Account::Households => "households",
            Account::BankCurrent => "bank_current",
            Account::BankCapital => "bank_capital",
            Account::CentralBankCurrent => "central_bank_current",
            Account::CentralBankCapital => "central_bank_capital",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for Flow {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Flow::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown flow row `{s}`")))
    }
}

impl FromStr for Account {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Account::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown sector account `{s}`")))
    }
}

/// One period's transaction-flow matrix. Sources are positive, uses negative.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowMatrix {
    cells: [[f64; 8]; 19],
}

impl FlowMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    /// Accumulate `amount` into a cell. The counterpart entry is the caller's job.
    pub fn record(&mut self, flow: Flow, account: Account, amount: f64) -> Result<()> {
        if !flow.accounts().contains(&account) {
            return Err(Error::Config(format!(
                "flow `{}` has no cell in account `{}`",
                flow.name(),
                account.name()
            )));
        }
        self.cells[flow.index()][account.index()] += amount;
        Ok(())
    }

    pub fn record_named(&mut self, flow: &str, account: &str, amount: f64) -> Result<()> {
        self.record(flow.parse()?, account.parse()?, amount)
    }

    pub fn get(&self, flow: Flow, account: Account) -> f64 {
        self.cells[flow.index()][account.index()]
    }

    pub fn row_sum(&self, flow: Flow) -> f64 {
        self.cells[flow.index()].iter().sum()
    }

    pub fn column_sum(&self, account: Account) -> f64 {
        self.cells.iter().map(|row| row[account.index()]).sum()
    }

    fn row_volume(&self, flow: Flow) -> f64 {
        self.cells[flow.index()].iter().map(|v| v.abs()).sum()
    }

    fn column_volume(&self, account: Account) -> f64 {
        self.cells.iter().map(|row| row[account.index()].abs()).sum()
    }
}

/// Sectoral stocks. Instruments held on both sides are stored per side so the
/// row checks compare independently maintained ledgers.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BalanceSheet {
    /// Firms' inventories at unit cost (INV).
    pub inventories: f64,
    pub firm_loans: f64,
    pub bank_loans: f64,
    pub household_deposits: f64,
    pub bank_deposits: f64,
    pub government_bills: f64,
    pub bank_bills: f64,
    pub central_bank_bills: f64,
    /// High-powered money H.
    pub reserves: f64,
    pub advances: f64,
    pub firm_net_worth: f64,
    pub household_net_worth: f64,
    pub bank_net_worth: f64,
    pub government_debt: f64,
    pub central_bank_net_worth: f64,
}

/// Instrument rows of the balance sheet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Instrument {
    Inventories,
    Loans,
    Deposits,
    Bills,
    HighPoweredMoney,
    Advances,
    Balance,
}

/// Sector columns of the balance sheet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sector {
    Firms,
    Households,
    Bank,
    Government,
    CentralBank,
}

impl Instrument {
    pub const ALL: [Instrument; 7] = [
        Instrument::Inventories,
        Instrument::Loans,
        Instrument::Deposits,
        Instrument::Bills,
        Instrument::HighPoweredMoney,
        Instrument::Advances,
        Instrument::Balance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Instrument::Inventories => "inventories",
            Instrument::Loans => "loans",
            Instrument::Deposits => "deposits",
            Instrument::Bills => "bills",
            Instrument::HighPoweredMoney => "high_powered_money",
            Instrument::Advances => "advances",
            Instrument::Balance => "balance",
        }
    }
}

impl Sector {
    pub const ALL: [Sector; 5] = [
        Sector::Firms,
        Sector::Households,
        Sector::Bank,
        Sector::Government,
        Sector::CentralBank,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Sector::Firms => "firms",
            Sector::Households => "households",
            Sector::Bank => "bank",
            Sector::Government => "government",
            Sector::CentralBank => "central_bank",
        }
    }
}

impl BalanceSheet {
    /// Signed entries of one instrument row; the inventories row closes
    /// against +INV, so its entry is netted here.
    fn row_entries(&self, row: Instrument) -> Vec<f64> {
        match row {
            Instrument::Inventories => vec![self.inventories, -self.inventories],
            Instrument::Loans => vec![-self.firm_loans, self.bank_loans],
            Instrument::Deposits => vec![self.household_deposits, -self.bank_deposits],
            Instrument::Bills => vec![
                self.bank_bills,
                -self.government_bills,
                self.central_bank_bills,
            ],
            Instrument::HighPoweredMoney => vec![self.reserves, -self.reserves],
            Instrument::Advances => vec![-self.advances, self.advances],
            Instrument::Balance => vec![
                -self.firm_net_worth,
                -self.household_net_worth,
                -self.bank_net_worth,
                self.government_debt,
                -self.central_bank_net_worth,
                self.inventories,
            ],
        }
    }

    fn column_entries(&self, sector: Sector) -> Vec<f64> {
        match sector {
            Sector::Firms => vec![self.inventories, -self.firm_loans, -self.firm_net_worth],
            Sector::Households => vec![self.household_deposits, -self.household_net_worth],
            Sector::Bank => vec![
                self.bank_loans,
                -self.bank_deposits,
                self.bank_bills,
                self.reserves,
                -self.advances,
                -self.bank_net_worth,
            ],
            Sector::Government => vec![-self.government_bills, self.government_debt],
            Sector::CentralBank => vec![
                self.central_bank_bills,
                -self.reserves,
                self.advances,
                -self.central_bank_net_worth,
            ],
        }
    }
}

/// H − (Bcb + A). Never imposed by the model; it must close on its own.
pub fn redundant_identity(bs: &BalanceSheet) -> f64 {
    bs.reserves - (bs.central_bank_bills + bs.advances)
}

/// Which identity a residual belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Check {
    FlowRow(Flow),
    FlowColumn(Account),
    StockRow(Instrument),
    StockColumn(Sector),
    RedundantIdentity,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Check::FlowRow(r) => write!(f, "flow_row:{}", r.name()),
            Check::FlowColumn(c) => write!(f, "flow_column:{}", c.name()),
            Check::StockRow(r) => write!(f, "stock_row:{}", r.name()),
            Check::StockColumn(c) => write!(f, "stock_column:{}", c.name()),
            Check::RedundantIdentity => f.write_str("redundant_identity"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub check: Check,
    pub residual: f64,
    /// Gross volume the residual is measured against (at least 1).
    pub scale: f64,
    pub flagged: bool,
}

impl Residual {
    pub fn relative(&self) -> f64 {
        self.residual.abs() / self.scale
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub residuals: Vec<Residual>,
}

impl ConsistencyReport {
    pub fn is_consistent(&self) -> bool {
        self.residuals.iter().all(|r| !r.flagged)
    }

    pub fn violations(&self) -> impl Iterator<Item = &Residual> {
        self.residuals.iter().filter(|r| r.flagged)
    }

    /// Largest relative residual over all checks.
    pub fn worst(&self) -> Option<&Residual> {
        self.residuals
            .iter()
            .max_by(|a, b| a.relative().total_cmp(&b.relative()))
    }

    pub fn get(&self, check: Check) -> Option<&Residual> {
        self.residuals.iter().find(|r| r.check == check)
    }
}

fn residual(check: Check, entries: &[f64], tol_rel: f64) -> Residual {
    let sum: f64 = entries.iter().sum();
    let volume: f64 = entries.iter().map(|v| v.abs()).sum();
    make_residual(check, sum, volume, tol_rel)
}

fn make_residual(check: Check, sum: f64, volume: f64, tol_rel: f64) -> Residual {
    let scale = volume.max(1.0);
    Residual {
        check,
        residual: sum,
        scale,
        flagged: sum.abs() > tol_rel * scale,
    }
}

/// Residual of every balance-sheet row and column, every flow-matrix row and
/// column, and the central bank's redundant identity.
pub fn check_consistency(bs: &BalanceSheet, fm: &FlowMatrix, tol_rel: f64) -> ConsistencyReport {
    let mut residuals = Vec::with_capacity(19 + 8 + 7 + 5 + 1);
    for flow in Flow::ALL {
        residuals.push(make_residual(
            Check::FlowRow(flow),
            fm.row_sum(flow),
            fm.row_volume(flow),
            tol_rel,
        ));
    }
    for account in Account::ALL {
        residuals.push(make_residual(
            Check::FlowColumn(account),
            fm.column_sum(account),
            fm.column_volume(account),
            tol_rel,
        ));
    }
    for row in Instrument::ALL {
        residuals.push(residual(Check::StockRow(row), &bs.row_entries(row), tol_rel));
    }
    for sector in Sector::ALL {
        residuals.push(residual(
            Check::StockColumn(sector),
            &bs.column_entries(sector),
            tol_rel,
        ));
    }
    residuals.push(residual(
        Check::RedundantIdentity,
        &[bs.reserves, -bs.central_bank_bills, -bs.advances],
        tol_rel,
    ));
    ConsistencyReport { residuals }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_balance_sheet() -> BalanceSheet {
        let d = 4502.908765;
        BalanceSheet {
            inventories: 4000.0,
            firm_loans: 4000.0,
            bank_loans: 4000.0,
            household_deposits: d,
            bank_deposits: d,
            government_bills: 502.9087653,
            bank_bills: 0.0,
            central_bank_bills: 502.9087653,
            reserves: 1576.018067,
            advances: 1073.109302,
            firm_net_worth: 0.0,
            household_net_worth: d,
            bank_net_worth: 0.0,
            government_debt: 502.9087653,
            central_bank_net_worth: 0.0,
        }
    }

    #[test]
    fn wages_row_closes_with_counterpart() {
        let mut fm = FlowMatrix::new();
        fm.record(Flow::Wages, Account::FirmsCurrent, -4000.0).unwrap();
        fm.record(Flow::Wages, Account::Households, 4000.0).unwrap();
        assert_eq!(fm.row_sum(Flow::Wages), 0.0);
    }

    #[test]
    fn zero_record_changes_nothing() {
        let mut fm = FlowMatrix::new();
        fm.record(Flow::Wages, Account::FirmsCurrent, -10.0).unwrap();
        let before = fm.clone();
        fm.record(Flow::Consumption, Account::FirmsCurrent, 0.0).unwrap();
        assert_eq!(fm, before);
    }

    #[test]
    fn undefined_cell_is_a_config_error() {
        let mut fm = FlowMatrix::new();
        assert!(matches!(
            fm.record(Flow::Wages, Account::Government, 1.0),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            fm.record_named("salaries", "households", 1.0),
            Err(Error::Config(_))
        ));
        assert!(fm.record_named("wages", "households", 1.0).is_ok());
    }

    #[test]
    fn table_stocks_are_consistent() {
        let report = check_consistency(&table_balance_sheet(), &FlowMatrix::new(), 1e-6);
        assert!(report.is_consistent(), "{:?}", report.violations().collect::<Vec<_>>());
    }

    #[test]
    fn unmatched_deposit_is_flagged() {
        let mut bs = table_balance_sheet();
        bs.household_deposits += 1.0;
        let report = check_consistency(&bs, &FlowMatrix::new(), 1e-6);
        let row = report.get(Check::StockRow(Instrument::Deposits)).unwrap();
        assert!((row.residual - 1.0).abs() < 1e-9);
        assert!(row.flagged);
        assert!(!report.is_consistent());
    }

    #[test]
    fn redundant_identity_from_table() {
        let bs = table_balance_sheet();
        assert!(redundant_identity(&bs).abs() < 1e-6);
        assert_eq!(redundant_identity(&BalanceSheet::default()), 0.0);
    }

    #[test]
    fn names_round_trip() {
        for f in Flow::ALL {
            assert_eq!(f.name().parse::<Flow>().unwrap(), f);
        }
        for a in Account::ALL {
            assert_eq!(a.name().parse::<Account>().unwrap(), a);
        }
    }

    #[test]
    fn every_row_has_at_least_two_cells() {
        for f in Flow::ALL {
            assert!(f.accounts().len() >= 2, "{}", f.name());
        }
    }
}
