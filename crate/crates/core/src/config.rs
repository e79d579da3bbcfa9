//! Scenario parameters, the nine benefit-policy presets, and the plain-text
//! `key = value` config format.

use std::fmt::Write as _;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::aggregates::FinanceParams;
use crate::behavior::{HomophilyMatrix, KernelParams, StrategyParams};
use crate::error::{Error, Result};
use crate::firms::ExpectationMode;
use crate::labour_market::{BenefitScheme, ExpiryMode, FiringRule};

/// Named presets as (name, replacement rate, duration in steps).
pub const SCENARIOS: [(&str, f64, u32); 9] = [
    ("baseline", 0.52, 360),
    ("high", 0.69, 360),
    ("low", 0.35, 360),
    ("long", 0.52, 540),
    ("short", 0.52, 180),
    ("high-long", 0.69, 540),
    ("high-short", 0.69, 180),
    ("low-long", 0.35, 540),
    ("low-short", 0.35, 180),
];

pub fn scenario_names() -> Vec<&'static str> {
    SCENARIOS.iter().map(|s| s.0).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub replacement_rate: f64,
    pub benefit_duration: u32,
    pub expiry_mode: ExpiryMode,

    pub households: usize,
    pub firms: usize,
    pub steps: u32,
    pub burn_in: u32,
    pub replicates: usize,
    pub seed: u64,

    /// ρ̄_f.
    pub markup: f64,
    /// β̄_exp.
    pub expectation_weight: f64,
    pub expectation_mode: ExpectationMode,
    /// σ_inv.
    pub inventory_ratio: f64,
    /// λ̄_exp.
    pub inventory_adjustment: f64,
    /// Real output of the initial stationary state.
    pub initial_output: f64,
    /// b̄_y: initial government debt over nominal output.
    pub debt_ratio: f64,
    /// Initial potential output in excess of planned output, as a share.
    pub capacity_headroom: f64,
    pub finance: FinanceParams,

    pub kernel: KernelParams,
    pub strategy: StrategyParams,
    pub homophily: HomophilyMatrix,
    pub mean_degree: f64,
    /// Population shares of the O, C, SE, ST value types.
    pub type_shares: [f64; 4],

    pub adaptation: bool,
    pub monitoring: bool,
    pub quitting: bool,
    pub firing_rule: FiringRule,
    /// Abort on a consistency violation; otherwise only count it.
    pub sfc_strict: bool,
    pub sfc_tolerance: f64,
    pub hp_lambda: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "baseline".into(),
            replacement_rate: 0.52,
            benefit_duration: 360,
            expiry_mode: ExpiryMode::Calendar,
            households: 500,
            firms: 5,
            steps: 1080,
            burn_in: 50,
            replicates: 100,
            seed: 42,
            markup: 0.4,
            expectation_weight: 0.5,
            expectation_mode: ExpectationMode::Adaptive,
            inventory_ratio: 1.0,
            inventory_adjustment: 0.5,
            initial_output: 558.787517,
            debt_ratio: 502.9087653 / 5600.0,
            capacity_headroom: 0.1,
            finance: FinanceParams::default(),
            kernel: KernelParams::default(),
            strategy: StrategyParams::default(),
            homophily: HomophilyMatrix::default(),
            mean_degree: 5.0,
            type_shares: [0.25; 4],
            adaptation: true,
            monitoring: true,
            quitting: true,
            firing_rule: FiringRule::Either,
            sfc_strict: true,
            sfc_tolerance: crate::accounting::DEFAULT_TOLERANCE,
            hp_lambda: 1600.0,
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("{key}: expected a number, got `{value}`")))
}

fn parse_int<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| Error::Config(format!("{key}: expected a non-negative integer, got `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true|false, got `{value}`"))),
    }
}

fn parse_list<const N: usize>(key: &str, value: &str) -> Result<[f64; N]> {
    let items: Vec<f64> = value
        .split(',')
        .map(|s| parse_f64(key, s.trim()))
        .collect::<Result<_>>()?;
    items
        .try_into()
        .map_err(|_| Error::Config(format!("{key}: expected {N} comma-separated numbers")))
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}

impl ScenarioConfig {
    /// One of the nine named presets.
    pub fn preset(name: &str) -> Result<Self> {
        let &(name, rate, duration) = SCENARIOS
            .iter()
            .find(|s| s.0 == name)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown scenario `{name}`; valid scenarios: {}",
                    scenario_names().join(", ")
                ))
            })?;
        Ok(Self {
            name: name.into(),
            replacement_rate: rate,
            benefit_duration: duration,
            ..Self::default()
        })
    }

    pub fn all_presets() -> Vec<Self> {
        SCENARIOS
            .iter()
            .map(|s| Self::preset(s.0).expect("preset table is valid"))
            .collect()
    }

    pub fn benefit_scheme(&self) -> Result<BenefitScheme> {
        BenefitScheme::new(self.replacement_rate, self.benefit_duration, self.expiry_mode)
    }

    /// Seed of replicate `r`: first word of ChaCha stream `r` under the
    /// master seed. Scenarios sharing a master seed share replicate seeds.
    pub fn replicate_seed(&self, r: usize) -> u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(r as u64);
        rng.next_u64()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(self.replacement_rate > 0.0 && self.replacement_rate < 1.0) {
            return fail(format!(
                "replacement_rate must lie in the open interval (0, 1), got {}",
                self.replacement_rate
            ));
        }
        if self.benefit_duration == 0 {
            return fail("benefit_duration must be positive".into());
        }
        if self.firms == 0 || self.households < self.firms {
            return fail(format!(
                "need at least one household per firm ({} households, {} firms)",
                self.households, self.firms
            ));
        }
        if self.steps == 0 {
            return fail("steps must be positive".into());
        }
        if self.replicates == 0 {
            return fail("replicates must be positive".into());
        }
        if !(self.mean_degree >= 0.0) || self.mean_degree >= self.households as f64 {
            return fail(format!(
                "mean_degree must lie in [0, households), got {}",
                self.mean_degree
            ));
        }
        let shares: f64 = self.type_shares.iter().sum();
        if self.type_shares.iter().any(|&s| s < 0.0) || (shares - 1.0).abs() > 1e-9 {
            return fail(format!("type_shares must be non-negative and sum to 1, got {shares}"));
        }
        if self.homophily.0.iter().flatten().any(|&w| !(w >= 0.0)) {
            return fail("homophily weights must be non-negative".into());
        }
        let unit = [
            ("expectation_weight", self.expectation_weight),
            ("inventory_adjustment", self.inventory_adjustment),
            ("kernel.shirk_min", self.kernel.shirk_min),
            ("kernel.shirk_max", self.kernel.shirk_max),
            ("kernel.shirk_tolerance", self.kernel.shirk_tolerance),
            ("kernel.satisfaction_rate", self.kernel.satisfaction_rate),
            ("kernel.intensity_rate", self.kernel.intensity_rate),
            ("kernel.autonomy_weight", self.kernel.autonomy_weight),
            ("kernel.cooperation_pay_weight", self.kernel.cooperation_pay_weight),
            ("strategy.monitoring", self.strategy.initial_monitoring),
            ("strategy.reward_mix", self.strategy.initial_reward_mix),
            ("strategy.interdependence", self.strategy.interdependence),
            ("finance.propensity_income", self.finance.propensity_income),
        ];
        for (key, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return fail(format!("{key} must lie in [0, 1], got {v}"));
            }
        }
        if self.kernel.shirk_min > self.kernel.shirk_max {
            return fail("kernel.shirk_min exceeds kernel.shirk_max".into());
        }
        let non_negative = [
            ("markup", self.markup),
            ("inventory_ratio", self.inventory_ratio),
            ("debt_ratio", self.debt_ratio),
            ("capacity_headroom", self.capacity_headroom),
            ("finance.government_purchases", self.finance.government_purchases),
            ("finance.bill_rate", self.finance.bill_rate),
            ("finance.loan_rate", self.finance.loan_rate),
            ("finance.deposit_rate", self.finance.deposit_rate),
            ("finance.reserve_ratio", self.finance.reserve_ratio),
            ("finance.liquidity_ratio", self.finance.liquidity_ratio),
            ("kernel.warning_penalty", self.kernel.warning_penalty),
            ("kernel.deterrence", self.kernel.deterrence),
            ("strategy.bonus_rate", self.strategy.initial_bonus_rate),
            ("strategy.base_wage", self.strategy.base_wage),
            ("strategy.step", self.strategy.step),
            ("strategy.bonus_step", self.strategy.bonus_step),
            ("strategy.bonus_max", self.strategy.bonus_max),
        ];
        for (key, v) in non_negative {
            if !(v >= 0.0) {
                return fail(format!("{key} must be non-negative, got {v}"));
            }
        }
        if !(self.initial_output > 0.0) {
            return fail(format!("initial_output must be positive, got {}", self.initial_output));
        }
        if self.strategy.base_wage <= 0.0 {
            return fail("strategy.base_wage must be positive".into());
        }
        if self.strategy.review_period == 0 {
            return fail("strategy.review_period must be positive".into());
        }
        if !(self.hp_lambda > 0.0) {
            return fail(format!("hp_lambda must be positive, got {}", self.hp_lambda));
        }
        if !(self.sfc_tolerance > 0.0) {
            return fail("sfc_tolerance must be positive".into());
        }
        Ok(())
    }

    /// Sets one parameter from its config-file key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value;
        match key {
            "scenario" => {
                let preset = Self::preset(v)?;
                self.name = preset.name;
                self.replacement_rate = preset.replacement_rate;
                self.benefit_duration = preset.benefit_duration;
            }
            "name" => self.name = v.to_string(),
            "replacement_rate" => self.replacement_rate = parse_f64(key, v)?,
            "benefit_duration" => self.benefit_duration = parse_int(key, v)?,
            "expiry_mode" => self.expiry_mode = v.parse()?,
            "households" => self.households = parse_int(key, v)?,
            "firms" => self.firms = parse_int(key, v)?,
            "steps" => self.steps = parse_int(key, v)?,
            "burn_in" => self.burn_in = parse_int(key, v)?,
            "replicates" => self.replicates = parse_int(key, v)?,
            "seed" => self.seed = parse_int(key, v)?,
            "markup" => self.markup = parse_f64(key, v)?,
            "expectation_weight" => self.expectation_weight = parse_f64(key, v)?,
            "expectation_mode" => self.expectation_mode = v.parse()?,
            "inventory_ratio" => self.inventory_ratio = parse_f64(key, v)?,
            "inventory_adjustment" => self.inventory_adjustment = parse_f64(key, v)?,
            "initial_output" => self.initial_output = parse_f64(key, v)?,
            "debt_ratio" => self.debt_ratio = parse_f64(key, v)?,
            "capacity_headroom" => self.capacity_headroom = parse_f64(key, v)?,
            "finance.government_purchases" => self.finance.government_purchases = parse_f64(key, v)?,
            "finance.tax_rate" => self.finance.tax_rate = parse_f64(key, v)?,
            "finance.bill_rate" => self.finance.bill_rate = parse_f64(key, v)?,
            "finance.loan_rate" => self.finance.loan_rate = parse_f64(key, v)?,
            "finance.deposit_rate" => self.finance.deposit_rate = parse_f64(key, v)?,
            "finance.reserve_ratio" => self.finance.reserve_ratio = parse_f64(key, v)?,
            "finance.liquidity_ratio" => self.finance.liquidity_ratio = parse_f64(key, v)?,
            "finance.propensity_income" => self.finance.propensity_income = parse_f64(key, v)?,
            "finance.propensity_wealth" => self.finance.propensity_wealth = parse_f64(key, v)?,
            "kernel.shirk_min" => self.kernel.shirk_min = parse_f64(key, v)?,
            "kernel.shirk_max" => self.kernel.shirk_max = parse_f64(key, v)?,
            "kernel.shirk_tolerance" => self.kernel.shirk_tolerance = parse_f64(key, v)?,
            "kernel.warning_penalty" => self.kernel.warning_penalty = parse_f64(key, v)?,
            "kernel.satisfaction_rate" => self.kernel.satisfaction_rate = parse_f64(key, v)?,
            "kernel.intensity_rate" => self.kernel.intensity_rate = parse_f64(key, v)?,
            "kernel.autonomy_weight" => self.kernel.autonomy_weight = parse_f64(key, v)?,
            "kernel.cooperation_pay_weight" => self.kernel.cooperation_pay_weight = parse_f64(key, v)?,
            "kernel.deterrence" => self.kernel.deterrence = parse_f64(key, v)?,
            "strategy.monitoring" => self.strategy.initial_monitoring = parse_f64(key, v)?,
            "strategy.reward_mix" => self.strategy.initial_reward_mix = parse_f64(key, v)?,
            "strategy.bonus_rate" => self.strategy.initial_bonus_rate = parse_f64(key, v)?,
            "strategy.base_wage" => self.strategy.base_wage = parse_f64(key, v)?,
            "strategy.interdependence" => self.strategy.interdependence = parse_f64(key, v)?,
            "strategy.review_period" => self.strategy.review_period = parse_int(key, v)?,
            "strategy.step" => self.strategy.step = parse_f64(key, v)?,
            "strategy.bonus_step" => self.strategy.bonus_step = parse_f64(key, v)?,
            "strategy.bonus_max" => self.strategy.bonus_max = parse_f64(key, v)?,
            "homophily.o" | "homophily.c" | "homophily.se" | "homophily.st" => {
                let row = match key {
                    "homophily.o" => 0,
                    "homophily.c" => 1,
                    "homophily.se" => 2,
                    _ => 3,
                };
                self.homophily.0[row] = parse_list::<4>(key, v)?;
            }
            "mean_degree" => self.mean_degree = parse_f64(key, v)?,
            "type_shares" => self.type_shares = parse_list::<4>(key, v)?,
            "adaptation" => self.adaptation = parse_bool(key, v)?,
            "monitoring" => self.monitoring = parse_bool(key, v)?,
            "quitting" => self.quitting = parse_bool(key, v)?,
            "firing_rule" => self.firing_rule = v.parse()?,
            "sfc_strict" => self.sfc_strict = parse_bool(key, v)?,
            "sfc_tolerance" => self.sfc_tolerance = parse_f64(key, v)?,
            "hp_lambda" => self.hp_lambda = parse_f64(key, v)?,
            _ => return Err(Error::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {}", n + 1, strip_prefix(&e))))?;
        }
        Ok(())
    }

    /// Parses a config file on top of the baseline defaults and validates it.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every parameter as `key = value` lines; `parse(emit())` round-trips.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("name", self.name.clone());
        kv("replacement_rate", self.replacement_rate.to_string());
        kv("benefit_duration", self.benefit_duration.to_string());
        kv("expiry_mode", self.expiry_mode.name().into());
        kv("households", self.households.to_string());
        kv("firms", self.firms.to_string());
        kv("steps", self.steps.to_string());
        kv("burn_in", self.burn_in.to_string());
        kv("replicates", self.replicates.to_string());
        kv("seed", self.seed.to_string());
        kv("markup", self.markup.to_string());
        kv("expectation_weight", self.expectation_weight.to_string());
        kv("expectation_mode", self.expectation_mode.name().into());
        kv("inventory_ratio", self.inventory_ratio.to_string());
        kv("inventory_adjustment", self.inventory_adjustment.to_string());
        kv("initial_output", self.initial_output.to_string());
        kv("debt_ratio", self.debt_ratio.to_string());
        kv("capacity_headroom", self.capacity_headroom.to_string());
        let f = &self.finance;
        kv("finance.government_purchases", f.government_purchases.to_string());
        kv("finance.tax_rate", f.tax_rate.to_string());
        kv("finance.bill_rate", f.bill_rate.to_string());
        kv("finance.loan_rate", f.loan_rate.to_string());
        kv("finance.deposit_rate", f.deposit_rate.to_string());
        kv("finance.reserve_ratio", f.reserve_ratio.to_string());
        kv("finance.liquidity_ratio", f.liquidity_ratio.to_string());
        kv("finance.propensity_income", f.propensity_income.to_string());
        kv("finance.propensity_wealth", f.propensity_wealth.to_string());
        let k = &self.kernel;
        kv("kernel.shirk_min", k.shirk_min.to_string());
        kv("kernel.shirk_max", k.shirk_max.to_string());
        kv("kernel.shirk_tolerance", k.shirk_tolerance.to_string());
        kv("kernel.warning_penalty", k.warning_penalty.to_string());
        kv("kernel.satisfaction_rate", k.satisfaction_rate.to_string());
        kv("kernel.intensity_rate", k.intensity_rate.to_string());
        kv("kernel.autonomy_weight", k.autonomy_weight.to_string());
        kv("kernel.cooperation_pay_weight", k.cooperation_pay_weight.to_string());
        kv("kernel.deterrence", k.deterrence.to_string());
        let st = &self.strategy;
        kv("strategy.monitoring", st.initial_monitoring.to_string());
        kv("strategy.reward_mix", st.initial_reward_mix.to_string());
        kv("strategy.bonus_rate", st.initial_bonus_rate.to_string());
        kv("strategy.base_wage", st.base_wage.to_string());
        kv("strategy.interdependence", st.interdependence.to_string());
        kv("strategy.review_period", st.review_period.to_string());
        kv("strategy.step", st.step.to_string());
        kv("strategy.bonus_step", st.bonus_step.to_string());
        kv("strategy.bonus_max", st.bonus_max.to_string());
        for (row, key) in ["homophily.o", "homophily.c", "homophily.se", "homophily.st"]
            .iter()
            .enumerate()
        {
            kv(key, join(&self.homophily.0[row]));
        }
        kv("mean_degree", self.mean_degree.to_string());
        kv("type_shares", join(&self.type_shares));
        kv("adaptation", self.adaptation.to_string());
        kv("monitoring", self.monitoring.to_string());
        kv("quitting", self.quitting.to_string());
        kv("firing_rule", self.firing_rule.name().into());
        kv("sfc_strict", self.sfc_strict.to_string());
        kv("sfc_tolerance", self.sfc_tolerance.to_string());
        kv("hp_lambda", self.hp_lambda.to_string());
        s
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(m) => m.clone(),
        other => other.to_string(),
    }
}
