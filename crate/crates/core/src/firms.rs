//! Firm decisions: cost-minimizing inputs, prime cost, price, expected
//! proceeds, the return on a new technology and the resulting choice between
//! investing, buying bonds and holding money.
//!
//! A k-firm produces `A R^zR L^zL` from natural resources and labour. A c-firm
//! produces `A K^zK L^zL`, where `K = prod_j x_j^v_j` aggregates its purchases
//! of every k-good.

use thiserror::Error;

use crate::config::PricingRule;
use crate::irr::{solve_irr, IrrOutcome, IrrProblem};
use crate::population::{Firm, Sector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Invest,
    Bonds,
    Money,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InputPlan {
    pub labour: f64,
    /// Natural resources (k-firms).
    pub resources: f64,
    /// Units of each k-good (c-firms).
    pub k_demands: Vec<f64>,
    /// Composite capital (c-firms).
    pub capital: f64,
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum FirmError {
    #[error("k-good {0} has no price this step")]
    Unproducible(usize),
    #[error("zero output cannot be priced")]
    NoPrice,
}

/// Cost-minimizing labour and resources for expected output `eq`.
pub fn solve_kfirm_inputs(firm: &Firm, eq: f64, p_r: f64, w_bar: f64) -> InputPlan {
    debug_assert_eq!(firm.sector, Sector::K);
    assert!(eq >= 0.0 && p_r > 0.0 && w_bar > 0.0);
    let (zr, zl) = (firm.z_cap, firm.z_l);
    let s = zr + zl;
    let scale = (eq / firm.a).powf(1.0 / s);
    let labour = p_r.powf(zr / s) * scale * (zl / (w_bar * zr)).powf(zr / s);
    let resources = (1.0 / p_r).powf(zl / s) * scale * (w_bar * zr / zl).powf(zl / s);
    InputPlan {
        labour,
        resources,
        k_demands: Vec::new(),
        capital: 0.0,
    }
}

/// `prod_j (v_j / p_j)^v_j`, units of composite capital per unit of money.
pub fn capital_per_money(v_in: &[f64], k_prices: &[f64]) -> f64 {
    v_in.iter().zip(k_prices).map(|(v, p)| (v / p).powf(*v)).product()
}

/// Cost-minimizing labour and k-good purchases for expected output `eq`.
/// A missing price on any k-good the firm uses makes the plan impossible.
pub fn solve_cfirm_inputs(firm: &Firm, eq: f64, k_prices: &[Option<f64>], w_bar: f64) -> Result<InputPlan, FirmError> {
    let v_in = firm.v_in.as_deref().expect("c-firm carries input weights");
    assert_eq!(v_in.len(), k_prices.len());
    assert!(eq >= 0.0 && w_bar > 0.0);
    let mut prices = Vec::with_capacity(v_in.len());
    for (j, (v, p)) in v_in.iter().zip(k_prices).enumerate() {
        match p {
            Some(p) if *p > 0.0 => prices.push(*p),
            _ if *v == 0.0 => prices.push(1.0),
            _ => return Err(FirmError::Unproducible(j)),
        }
    }
    let (zk, zl) = (firm.z_cap, firm.z_l);
    let s = zk + zl;
    let big_p = capital_per_money(v_in, &prices);
    let xi = big_p.powf(zk);
    let scale = (eq / firm.a).powf(1.0 / s);
    let labour = (1.0 / big_p).powf(zk / s) * scale * (zl / (w_bar * zk)).powf(zk / s);
    let capital = big_p.powf(zl / s) * scale * (w_bar * zk / zl).powf(zl / s);
    let common = (eq / (firm.a * xi)).powf(1.0 / s) * (w_bar * zk / zl).powf(zl / s);
    let k_demands = v_in.iter().zip(&prices).map(|(v, p)| v / p * common).collect();
    Ok(InputPlan {
        labour,
        resources: 0.0,
        k_demands,
        capital,
    })
}

pub fn k_output(firm: &Firm, resources: f64, labour: f64) -> f64 {
    firm.a * resources.powf(firm.z_cap) * labour.powf(firm.z_l)
}

/// Composite capital from the units of each k-good.
pub fn composite_capital(v_in: &[f64], units: &[f64]) -> f64 {
    v_in.iter().zip(units).map(|(v, x)| x.powf(*v)).product()
}

pub fn c_output(firm: &Firm, k_units: &[f64], labour: f64) -> f64 {
    let v_in = firm.v_in.as_deref().expect("c-firm carries input weights");
    firm.a * composite_capital(v_in, k_units).powf(firm.z_cap) * labour.powf(firm.z_l)
}

/// Outlays of one firm for one step, in money units.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CostSheet {
    pub wage_bill: f64,
    /// The entrepreneur's own `(1 + mu) * w_bar`.
    pub remuneration: f64,
    /// `W`, wages plus remuneration.
    pub labour_outlay: f64,
    pub resource_cost: f64,
    pub purchases: f64,
    pub factor_cost: f64,
    pub user_cost: f64,
    pub prime_cost: f64,
}

/// `W = ((1 + mu) + L) * w_bar`; resources are factor cost, k-good purchases user cost.
pub fn cost_sheet(mu: f64, labour: f64, w_bar: f64, resource_cost: f64, purchases: f64) -> CostSheet {
    let wage_bill = labour * w_bar;
    let remuneration = (1.0 + mu) * w_bar;
    let labour_outlay = wage_bill + remuneration;
    let factor_cost = labour_outlay + resource_cost;
    CostSheet {
        wage_bill,
        remuneration,
        labour_outlay,
        resource_cost,
        purchases,
        factor_cost,
        user_cost: purchases,
        prime_cost: factor_cost + purchases,
    }
}

/// Prime cost of a plan. `k_prices` is ignored for k-firms.
pub fn prime_cost(firm: &Firm, plan: &InputPlan, p_r: f64, k_prices: &[Option<f64>], w_bar: f64) -> CostSheet {
    match firm.sector {
        Sector::K => cost_sheet(firm.mu, plan.labour, w_bar, p_r * plan.resources, 0.0),
        Sector::C => {
            let purchases = plan
                .k_demands
                .iter()
                .zip(k_prices)
                .map(|(x, p)| if *x > 0.0 { x * p.expect("priced k-good") } else { 0.0 })
                .sum();
            cost_sheet(firm.mu, plan.labour, w_bar, 0.0, purchases)
        }
    }
}

/// Price `basis / o`.
pub fn set_price(basis: f64, o: f64) -> Result<f64, FirmError> {
    if o > 0.0 {
        Ok(basis / o)
    } else {
        Err(FirmError::NoPrice)
    }
}

/// Amount the price must recover over the whole output.
pub fn price_basis(rule: PricingRule, mu: f64, prime_cost: f64) -> f64 {
    match rule {
        PricingRule::Markup => (1.0 + mu) * prime_cost,
        PricingRule::Literal => prime_cost,
    }
}

/// Constant proceeds `p * eq - pc` over the technology's life.
pub fn proceeds_series(firm: &Firm, price: f64, eq: f64, pc: f64) -> Vec<f64> {
    vec![price * eq - pc; firm.tau]
}

pub fn compute_mek(psi: f64, q: &[f64]) -> IrrOutcome {
    solve_irr(&IrrProblem::new(psi, q.to_vec()))
}

/// Invest if the return is at least both rates, else bonds if the market
/// rate is at least the expected rate, else money. `mek` is `-inf` when undefined.
pub fn investment_decision(mek: f64, l2: f64, r: f64) -> Decision {
    if mek >= l2 && mek >= r {
        Decision::Invest
    } else if r >= l2 {
        Decision::Bonds
    } else {
        Decision::Money
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvestmentAppraisal {
    pub psi: f64,
    pub expected_price: f64,
    pub proceeds: Vec<f64>,
    pub mek: IrrOutcome,
    pub decision: Decision,
}

/// Prices the expected output, builds the proceeds and decides.
pub fn appraise(firm: &Firm, cost: &CostSheet, rule: PricingRule, l2: f64, r: f64) -> InvestmentAppraisal {
    let eq = firm.eta;
    let basis = price_basis(rule, firm.mu, cost.prime_cost);
    let expected_price = set_price(basis, eq).expect("expectations are positive");
    let proceeds = proceeds_series(firm, expected_price, eq, cost.prime_cost);
    let mek = compute_mek(firm.psi, &proceeds);
    InvestmentAppraisal {
        psi: firm.psi,
        expected_price,
        decision: investment_decision(mek.rank_value(), l2, r),
        proceeds,
        mek,
    }
}
