//! Sequential agent-based macroeconomic simulator.
//!
//! Persons choose labour, money and consumption from Cobb-Douglas
//! preferences and split their unspent income between speculative money and
//! bonds by comparing an expected rate with the market rate. Entrepreneurs
//! compare the internal rate of return of a new technology with both rates
//! and invest, lend or hoard. Capital-goods firms act first, then
//! consumption-goods firms, then households, each one at a time in random
//! order.
//!
//! Modules, bottom up: [`irr`], [`household`], [`firms`], [`population`],
//! [`config`], [`engine`], [`harness`].

pub mod config;
pub mod engine;
pub mod firms;
pub mod harness;
pub mod household;
pub mod irr;
pub mod population;
pub mod seeds;

pub use config::{load_scenario, scenario_grid, ModelConstants, Scenario, SweepAxis};
pub use engine::{run_scenario, EconomyState, StepReport};
pub use harness::{emit_csv, run_sweep, SweepResult};
