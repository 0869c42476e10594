//! Household decisions: expected rate, labour/money/consumption bundle, and
//! the split of unspent income between speculative money and bonds.
//!
//! Utility is Cobb-Douglas in money, consumption goods and leisure, so the
//! optimal bundle spends fixed shares of earned income. Demand for goods is
//! evaluated at whatever income is actually earned; prices of goods that are
//! not on offer are passed as `None` and the taste weights are renormalized
//! over the rest.

use crate::population::Person;

/// `max(r + rho, 0)`.
pub fn expected_rate(rho: f64, r: f64) -> f64 {
    (r + rho).max(0.0)
}

pub fn liquidity_preference(person: &Person, r: f64) -> f64 {
    expected_rate(person.rho, r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HouseholdChoice {
    pub labour_supply: f64,
    pub leisure: f64,
    pub money_retained: f64,
    pub demands: Vec<f64>,
    pub expected_rate: f64,
}

/// Money and per-good quantities chosen out of `income`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpendingPlan {
    pub money: f64,
    pub demands: Vec<f64>,
}

/// Splits `income` by the money and consumption exponents. With no good on
/// offer the consumption share is held as money.
pub fn spending_plan(z_m: f64, z_c: f64, v: &[f64], prices: &[Option<f64>], income: f64) -> SpendingPlan {
    assert_eq!(v.len(), prices.len(), "one price slot per taste weight");
    let offered: f64 = v.iter().zip(prices).filter(|(_, p)| p.is_some()).map(|(w, _)| w).sum();
    if offered <= 0.0 || income <= 0.0 {
        return SpendingPlan {
            money: income.max(0.0),
            demands: vec![0.0; v.len()],
        };
    }
    let goods_budget = z_c / (z_c + z_m) * income;
    let demands = v
        .iter()
        .zip(prices)
        .map(|(w, p)| match p {
            Some(p) => {
                assert!(*p > 0.0, "offered goods must have a positive price");
                (w / offered) / p * goods_budget
            }
            None => 0.0,
        })
        .collect();
    SpendingPlan {
        money: z_m / (z_c + z_m) * income,
        demands,
    }
}

/// Desired bundle at full labour supply `(z_C + z_M) * N_bar`.
pub fn solve_household(person: &Person, c_prices: &[Option<f64>], w_bar: f64, n_bar: f64) -> HouseholdChoice {
    assert!(w_bar > 0.0);
    let labour_supply = (person.z_c + person.z_m) * n_bar;
    let plan = spending_plan(person.z_m, person.z_c, &person.v, c_prices, w_bar * labour_supply);
    HouseholdChoice {
        labour_supply,
        leisure: n_bar - labour_supply,
        money_retained: plan.money,
        demands: plan.demands,
        expected_rate: person.l2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SavingAllocation {
    pub speculative_money: f64,
    pub bonds: f64,
}

/// All to money when the expected rate exceeds the market rate, all to bonds
/// when below, half each on equality.
pub fn allocate_saving(residual: f64, l2: f64, r: f64) -> SavingAllocation {
    assert!(residual >= 0.0, "negative residual {residual}");
    if l2 > r {
        SavingAllocation {
            speculative_money: residual,
            bonds: 0.0,
        }
    } else if l2 < r {
        SavingAllocation {
            speculative_money: 0.0,
            bonds: residual,
        }
    } else {
        let half = residual / 2.0;
        SavingAllocation {
            speculative_money: half,
            bonds: residual - half,
        }
    }
}
