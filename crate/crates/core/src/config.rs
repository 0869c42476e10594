//! Exogenous constants, independent-variable settings and their validation.
//!
//! Scenarios are written as flat `key = value` text (TOML syntax, no tables).
//! Every key is optional; missing keys take the defaults listed on
//! [`ModelConstants::default`] and [`Scenario::default`]. Unknown keys are
//! rejected.
//!
//! | key | unit | default |
//! |-----|------|---------|
//! | `n_p`, `n_k`, `n_c` | count | 1000, 3, 12 |
//! | `A_k`, `A_c` | dimensionless | 10, 5 |
//! | `tau_bar` | steps | 5 |
//! | `p_R` | money / unit | 1 |
//! | `psi_k_scale`, `psi_c_scale` | money | 157, 672 |
//! | `z_L_bar`, `z_script_L_bar` | exponent | 0.5, 0.1 |
//! | `w_bar` | money / hour | 10 |
//! | `N_bar` | hours / step | 8 |
//! | `z_R_default`, `z_K_default` | exponent | 0.4, 0.4 |
//! | `k_f` | dimensionless | 4.5 |
//! | `r0`, `rho_mean`, `rho_sd` | fraction | 0.01, 0, 0 |
//! | `eta_c_mean`, `eta_c_sd` | goods units | 3.6, 0 |
//! | `eta_k_multiplier` | ratio | 4 |
//! | `mu_mean`, `mu_sd` | dimensionless | 0.5, 0 |
//! | `homogeneous` | bool | true |
//! | `seed`, `steps` | integer | 42, 1 |
//! | `pricing` | `"markup"` or `"literal"` | `"markup"` |
//! | `k_expectation` | `"sector_mean"` or `"per_firm"` | `"sector_mean"` |
//! | `redraw_rho`, `carry_wealth` | bool | false, false |
//!
//! The seed alone may also be overridden through [`SEED_ENV_VAR`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seeds;

/// Environment variable that overrides the configured seed.
pub const SEED_ENV_VAR: &str = "KEYNES_ABM_SEED";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid scenario: {constraint} ({detail})")]
    Invalid { constraint: &'static str, detail: String },
    #[error("unknown sweep axis `{0}` (expected r0, rho_mean or eta_c_mean)")]
    UnknownAxis(String),
    #[error("bad value list `{0}`")]
    BadValues(String),
    #[error("{SEED_ENV_VAR} is not an unsigned integer: `{0}`")]
    BadSeedOverride(String),
}

/// How a firm turns prime cost into a selling price.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PricingRule {
    /// Price is `(1 + mu) * PC / o`; expected proceeds are `mu * PC` per step.
    #[default]
    Markup,
    /// Price is `PC / o`; expected proceeds are identically zero.
    Literal,
}

/// Source of k-firm sales expectations in heterogeneous runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KExpectation {
    /// `eta_k_multiplier` times the realized mean of the c-firm draws.
    #[default]
    SectorMean,
    /// `eta_k_multiplier` times the k-firm's own draw.
    PerFirm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConstants {
    pub n_p: usize,
    pub n_k: usize,
    pub n_c: usize,
    pub a_k: f64,
    pub a_c: f64,
    pub tau_bar: usize,
    pub p_r: f64,
    pub psi_k_scale: f64,
    pub psi_c_scale: f64,
    pub z_l_bar: f64,
    pub z_script_l_bar: f64,
    pub w_bar: f64,
    pub n_bar: f64,
    pub z_r_default: f64,
    pub z_k_default: f64,
    /// Slope of the money exponent in the expected rate, `z_M = k_f * L2`.
    pub k_f: f64,
}

impl Default for ModelConstants {
    fn default() -> Self {
        Self {
            n_p: 1000,
            n_k: 3,
            n_c: 12,
            a_k: 10.0,
            a_c: 5.0,
            tau_bar: 5,
            p_r: 1.0,
            psi_k_scale: 157.0,
            psi_c_scale: 672.0,
            z_l_bar: 0.5,
            z_script_l_bar: 0.1,
            w_bar: 10.0,
            n_bar: 8.0,
            z_r_default: 0.4,
            z_k_default: 0.4,
            k_f: 4.5,
        }
    }
}

impl ModelConstants {
    pub fn n_firms(&self) -> usize {
        self.n_k + self.n_c
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_p == 0 || self.n_k == 0 || self.n_c == 0 {
            return invalid(
                "counts positive",
                format!("n_p={}, n_k={}, n_c={}", self.n_p, self.n_k, self.n_c),
            );
        }
        if self.n_p <= self.n_firms() {
            return invalid("n_p > n_k + n_c", format!("{} <= {}", self.n_p, self.n_firms()));
        }
        if self.tau_bar == 0 {
            return invalid("tau_bar >= 1", "0".into());
        }
        for (name, v) in [
            ("A_k > 0", self.a_k),
            ("A_c > 0", self.a_c),
            ("p_R > 0", self.p_r),
            ("psi_k_scale > 0", self.psi_k_scale),
            ("psi_c_scale > 0", self.psi_c_scale),
            ("w_bar > 0", self.w_bar),
            ("N_bar > 0", self.n_bar),
            ("z_L_bar > 0", self.z_l_bar),
            ("z_R_default > 0", self.z_r_default),
            ("z_K_default > 0", self.z_k_default),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return invalid(name, format!("{v}"));
            }
        }
        if !(self.z_script_l_bar > 0.0 && self.z_script_l_bar < 1.0) {
            return invalid("z_script_L_bar in (0,1)", format!("{}", self.z_script_l_bar));
        }
        if self.z_l_bar + self.z_r_default >= 1.0 {
            return invalid(
                "z_L_bar + z_R_default < 1 (decreasing returns)",
                format!("{} + {} >= 1", self.z_l_bar, self.z_r_default),
            );
        }
        if self.z_l_bar + self.z_k_default >= 1.0 {
            return invalid(
                "z_L_bar + z_K_default < 1 (decreasing returns)",
                format!("{} + {} >= 1", self.z_l_bar, self.z_k_default),
            );
        }
        if !(self.k_f.is_finite() && self.k_f >= 0.0) {
            return invalid("k_f >= 0", format!("{}", self.k_f));
        }
        Ok(())
    }
}

/// One point of the independent-variable space plus every constant.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub constants: ModelConstants,
    pub r0: f64,
    pub rho_mean: f64,
    pub rho_sd: f64,
    pub eta_c_mean: f64,
    pub eta_c_sd: f64,
    pub eta_k_multiplier: f64,
    pub mu_mean: f64,
    pub mu_sd: f64,
    pub homogeneous: bool,
    pub seed: u64,
    pub steps: usize,
    pub pricing: PricingRule,
    pub k_expectation: KExpectation,
    /// Redraw every person's liquidity-preference offset at each step.
    pub redraw_rho: bool,
    /// Keep money and bond holdings across steps instead of resetting them.
    pub carry_wealth: bool,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            constants: ModelConstants::default(),
            r0: 0.01,
            rho_mean: 0.0,
            rho_sd: 0.0,
            eta_c_mean: 3.6,
            eta_c_sd: 0.0,
            eta_k_multiplier: 4.0,
            mu_mean: 0.5,
            mu_sd: 0.0,
            homogeneous: true,
            seed: 42,
            steps: 1,
            pricing: PricingRule::Markup,
            k_expectation: KExpectation::SectorMean,
            redraw_rho: false,
            carry_wealth: false,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.constants.validate()?;
        if !(self.r0.is_finite() && (0.0..1.0).contains(&self.r0)) {
            return invalid("r0 in [0, 1)", format!("{}", self.r0));
        }
        if !(self.eta_c_mean.is_finite() && self.eta_c_mean > 0.0) {
            return invalid("eta_c_mean > 0", format!("{}", self.eta_c_mean));
        }
        if !(self.eta_k_multiplier.is_finite() && self.eta_k_multiplier > 0.0) {
            return invalid("eta_k_multiplier > 0", format!("{}", self.eta_k_multiplier));
        }
        for (name, v) in [
            ("rho_sd >= 0", self.rho_sd),
            ("eta_c_sd >= 0", self.eta_c_sd),
            ("mu_sd >= 0", self.mu_sd),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return invalid(name, format!("{v}"));
            }
        }
        if !self.rho_mean.is_finite() {
            return invalid("rho_mean finite", format!("{}", self.rho_mean));
        }
        if !(self.mu_mean.is_finite() && self.mu_mean >= 0.0) {
            return invalid("mu_mean >= 0", format!("{}", self.mu_mean));
        }
        if self.steps == 0 {
            return invalid("steps >= 1", "0".into());
        }
        Ok(())
    }

    pub fn effective_rho_sd(&self) -> f64 {
        if self.homogeneous {
            0.0
        } else {
            self.rho_sd
        }
    }

    pub fn effective_eta_c_sd(&self) -> f64 {
        if self.homogeneous {
            0.0
        } else {
            self.eta_c_sd
        }
    }

    pub fn effective_mu_sd(&self) -> f64 {
        if self.homogeneous {
            0.0
        } else {
            self.mu_sd
        }
    }

    /// Expected rate held by an agent with zero offset draw, floored at 0.
    pub fn nominal_l2(&self) -> f64 {
        (self.r0 + self.rho_mean).max(0.0)
    }

    /// Serializes to the flat key-value form accepted by [`load_scenario`].
    pub fn to_config_string(&self) -> String {
        toml::to_string(&RawConfig::from(self)).expect("flat config always serializes")
    }
}

fn invalid<T>(constraint: &'static str, detail: String) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid { constraint, detail })
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    n_p: Option<usize>,
    n_k: Option<usize>,
    n_c: Option<usize>,
    #[serde(rename = "A_k")]
    a_k: Option<f64>,
    #[serde(rename = "A_c")]
    a_c: Option<f64>,
    tau_bar: Option<usize>,
    #[serde(rename = "p_R")]
    p_r: Option<f64>,
    psi_k_scale: Option<f64>,
    psi_c_scale: Option<f64>,
    #[serde(rename = "z_L_bar")]
    z_l_bar: Option<f64>,
    #[serde(rename = "z_script_L_bar")]
    z_script_l_bar: Option<f64>,
    w_bar: Option<f64>,
    #[serde(rename = "N_bar")]
    n_bar: Option<f64>,
    #[serde(rename = "z_R_default")]
    z_r_default: Option<f64>,
    #[serde(rename = "z_K_default")]
    z_k_default: Option<f64>,
    k_f: Option<f64>,
    r0: Option<f64>,
    rho_mean: Option<f64>,
    rho_sd: Option<f64>,
    eta_c_mean: Option<f64>,
    eta_c_sd: Option<f64>,
    eta_k_multiplier: Option<f64>,
    mu_mean: Option<f64>,
    mu_sd: Option<f64>,
    homogeneous: Option<bool>,
    seed: Option<u64>,
    steps: Option<usize>,
    pricing: Option<PricingRule>,
    k_expectation: Option<KExpectation>,
    redraw_rho: Option<bool>,
    carry_wealth: Option<bool>,
}

impl From<&Scenario> for RawConfig {
    fn from(s: &Scenario) -> Self {
        let c = &s.constants;
        Self {
            n_p: Some(c.n_p),
            n_k: Some(c.n_k),
            n_c: Some(c.n_c),
            a_k: Some(c.a_k),
            a_c: Some(c.a_c),
            tau_bar: Some(c.tau_bar),
            p_r: Some(c.p_r),
            psi_k_scale: Some(c.psi_k_scale),
            psi_c_scale: Some(c.psi_c_scale),
            z_l_bar: Some(c.z_l_bar),
            z_script_l_bar: Some(c.z_script_l_bar),
            w_bar: Some(c.w_bar),
            n_bar: Some(c.n_bar),
            z_r_default: Some(c.z_r_default),
            z_k_default: Some(c.z_k_default),
            k_f: Some(c.k_f),
            r0: Some(s.r0),
            rho_mean: Some(s.rho_mean),
            rho_sd: Some(s.rho_sd),
            eta_c_mean: Some(s.eta_c_mean),
            eta_c_sd: Some(s.eta_c_sd),
            eta_k_multiplier: Some(s.eta_k_multiplier),
            mu_mean: Some(s.mu_mean),
            mu_sd: Some(s.mu_sd),
            homogeneous: Some(s.homogeneous),
            seed: Some(s.seed),
            steps: Some(s.steps),
            pricing: Some(s.pricing),
            k_expectation: Some(s.k_expectation),
            redraw_rho: Some(s.redraw_rho),
            carry_wealth: Some(s.carry_wealth),
        }
    }
}

impl RawConfig {
    fn into_scenario(self) -> Scenario {
        let d = Scenario::default();
        let dc = d.constants;
        Scenario {
            constants: ModelConstants {
                n_p: self.n_p.unwrap_or(dc.n_p),
                n_k: self.n_k.unwrap_or(dc.n_k),
                n_c: self.n_c.unwrap_or(dc.n_c),
                a_k: self.a_k.unwrap_or(dc.a_k),
                a_c: self.a_c.unwrap_or(dc.a_c),
                tau_bar: self.tau_bar.unwrap_or(dc.tau_bar),
                p_r: self.p_r.unwrap_or(dc.p_r),
                psi_k_scale: self.psi_k_scale.unwrap_or(dc.psi_k_scale),
                psi_c_scale: self.psi_c_scale.unwrap_or(dc.psi_c_scale),
                z_l_bar: self.z_l_bar.unwrap_or(dc.z_l_bar),
                z_script_l_bar: self.z_script_l_bar.unwrap_or(dc.z_script_l_bar),
                w_bar: self.w_bar.unwrap_or(dc.w_bar),
                n_bar: self.n_bar.unwrap_or(dc.n_bar),
                z_r_default: self.z_r_default.unwrap_or(dc.z_r_default),
                z_k_default: self.z_k_default.unwrap_or(dc.z_k_default),
                k_f: self.k_f.unwrap_or(dc.k_f),
            },
            r0: self.r0.unwrap_or(d.r0),
            rho_mean: self.rho_mean.unwrap_or(d.rho_mean),
            rho_sd: self.rho_sd.unwrap_or(d.rho_sd),
            eta_c_mean: self.eta_c_mean.unwrap_or(d.eta_c_mean),
            eta_c_sd: self.eta_c_sd.unwrap_or(d.eta_c_sd),
            eta_k_multiplier: self.eta_k_multiplier.unwrap_or(d.eta_k_multiplier),
            mu_mean: self.mu_mean.unwrap_or(d.mu_mean),
            mu_sd: self.mu_sd.unwrap_or(d.mu_sd),
            homogeneous: self.homogeneous.unwrap_or(d.homogeneous),
            seed: self.seed.unwrap_or(d.seed),
            steps: self.steps.unwrap_or(d.steps),
            pricing: self.pricing.unwrap_or(d.pricing),
            k_expectation: self.k_expectation.unwrap_or(d.k_expectation),
            redraw_rho: self.redraw_rho.unwrap_or(d.redraw_rho),
            carry_wealth: self.carry_wealth.unwrap_or(d.carry_wealth),
        }
    }
}

/// Parses and validates a scenario from flat key-value text.
pub fn load_scenario(source: &str) -> Result<Scenario, ConfigError> {
    let raw: RawConfig = toml::from_str(source).map_err(|e| ConfigError::Parse(e.message().to_string()))?;
    let scenario = raw.into_scenario();
    scenario.validate()?;
    Ok(scenario)
}

/// Replaces the scenario seed with the value of [`SEED_ENV_VAR`], if set.
pub fn apply_seed_override(scenario: &mut Scenario) -> Result<(), ConfigError> {
    match std::env::var(SEED_ENV_VAR) {
        Ok(v) => {
            scenario.seed = v.trim().parse().map_err(|_| ConfigError::BadSeedOverride(v))?;
            Ok(())
        }
        Err(_) => Ok(()),
    }
}

/// Scenario fields a sweep may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    R0,
    RhoMean,
    EtaCMean,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::R0 => "r0",
            SweepAxis::RhoMean => "rho_mean",
            SweepAxis::EtaCMean => "eta_c_mean",
        }
    }

    fn apply(self, scenario: &mut Scenario, value: f64) {
        match self {
            SweepAxis::R0 => scenario.r0 = value,
            SweepAxis::RhoMean => scenario.rho_mean = value,
            SweepAxis::EtaCMean => scenario.eta_c_mean = value,
        }
    }

    pub fn value_of(self, scenario: &Scenario) -> f64 {
        match self {
            SweepAxis::R0 => scenario.r0,
            SweepAxis::RhoMean => scenario.rho_mean,
            SweepAxis::EtaCMean => scenario.eta_c_mean,
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "r0" => Ok(SweepAxis::R0),
            "rho_mean" => Ok(SweepAxis::RhoMean),
            "eta_c_mean" => Ok(SweepAxis::EtaCMean),
            other => Err(ConfigError::UnknownAxis(other.to_string())),
        }
    }
}

/// One scenario per value, in order; seeds derived from `(base.seed, index)`.
pub fn scenario_grid(base: &Scenario, axis: SweepAxis, values: &[f64]) -> Result<Vec<Scenario>, ConfigError> {
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut s = base.clone();
            axis.apply(&mut s, v);
            s.seed = seeds::grid_seed(base.seed, i as u64);
            s.validate()?;
            Ok(s)
        })
        .collect()
}

/// Inclusive arithmetic range, rounded to 12 decimals to keep grid values clean.
pub fn stepped_range(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, ConfigError> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite() && step > 0.0) {
        return Err(ConfigError::BadValues(format!("{start}:{stop}:{step}")));
    }
    if stop < start {
        return Ok(Vec::new());
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

/// Parses `a,b,c` or an inclusive `start:stop:step` range. Empty input is an empty grid.
pub fn parse_values(text: &str) -> Result<Vec<f64>, ConfigError> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let bad = || ConfigError::BadValues(text.to_string());
    if text.contains(':') {
        let parts: Vec<f64> = text
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        if parts.len() != 3 {
            return Err(bad());
        }
        return stepped_range(parts[0], parts[1], parts[2]);
    }
    text.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect()
}
