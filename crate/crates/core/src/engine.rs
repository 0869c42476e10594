//! One step of the economy, acted out group by group in a fixed phase order:
//!
//! 1. k-entrepreneurs appraise and decide; investors hire, buy resources,
//!    produce and price their good.
//! 2. c-entrepreneurs appraise at the k-prices just set; investors buy
//!    k-goods, hire, produce and price.
//! 3. Wages and entrepreneur remuneration are paid.
//! 4. Persons buy consumption goods and allocate what is left.
//! 5. Firms book revenue and profit.
//!
//! Inside each group agents act one at a time in a freshly shuffled order.
//! Aggregates are summed in sorted order so that they do not depend on who
//! happened to act first.

use std::collections::VecDeque;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::Scenario;
use crate::firms::{
    appraise, c_output, cost_sheet, investment_decision, k_output, price_basis, prime_cost, set_price,
    solve_cfirm_inputs, solve_kfirm_inputs, Decision,
};
use crate::household::{allocate_saving, expected_rate, spending_plan};
use crate::irr::IrrOutcome;
use crate::population::{
    assign_z_weights, draw_rho, init_population, Firm, FirmAccounts, GoodRegistry, Person, Sector,
};
use crate::seeds::{stream_seed, Stream};

/// Relative tolerance of every accounting identity.
pub const IDENTITY_TOLERANCE: f64 = 1e-9;

/// Aggregate outcome of one step. `_w` fields are in wage units, the rest in
/// money units, hours or persons.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepReport {
    pub r0: f64,
    pub l2: f64,
    pub i_w: f64,
    pub y_w: f64,
    pub c_w: f64,
    pub s_w: f64,
    pub m2: f64,
    pub b: f64,
    pub n: f64,
    pub u_pct: f64,
    pub i: f64,
    pub y: f64,
    pub c: f64,
    pub s: f64,
    pub m1: f64,
    pub n_s: f64,
    pub n_k: f64,
    pub n_c: f64,
    pub u: f64,
    /// Unemployment over persons who are not entrepreneurs.
    pub u_workers_pct: f64,
}

impl StepReport {
    pub const COLUMNS: [&'static str; 20] = [
        "r0",
        "L2",
        "I_w",
        "Y_w",
        "C_w",
        "S_w",
        "M2",
        "B",
        "N",
        "u_pct",
        "I",
        "Y",
        "C",
        "S",
        "M1",
        "N_s",
        "N_k",
        "N_c",
        "U",
        "u_workers_pct",
    ];

    pub fn values(&self) -> [f64; 20] {
        [
            self.r0,
            self.l2,
            self.i_w,
            self.y_w,
            self.c_w,
            self.s_w,
            self.m2,
            self.b,
            self.n,
            self.u_pct,
            self.i,
            self.y,
            self.c,
            self.s,
            self.m1,
            self.n_s,
            self.n_k,
            self.n_c,
            self.u,
            self.u_workers_pct,
        ]
    }

    pub fn from_values(v: &[f64; 20]) -> Self {
        Self {
            r0: v[0],
            l2: v[1],
            i_w: v[2],
            y_w: v[3],
            c_w: v[4],
            s_w: v[5],
            m2: v[6],
            b: v[7],
            n: v[8],
            u_pct: v[9],
            i: v[10],
            y: v[11],
            c: v[12],
            s: v[13],
            m1: v[14],
            n_s: v[15],
            n_k: v[16],
            n_c: v[17],
            u: v[18],
            u_workers_pct: v[19],
        }
    }
}

/// One line of the per-agent audit. Positive amounts flow in, negative out.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerEntry {
    pub step: usize,
    pub agent: String,
    pub account: &'static str,
    pub amount: f64,
}

pub fn write_ledger<W: Write>(entries: &[LedgerEntry], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "agent", "account", "amount"])?;
    for e in entries {
        w.write_record([
            e.step.to_string(),
            e.agent.clone(),
            e.account.to_string(),
            e.amount.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("step {step}: {check} violated (expected {expected}, got {actual})")]
    Conservation {
        step: usize,
        check: &'static str,
        expected: f64,
        actual: f64,
        ledger: Vec<LedgerEntry>,
    },
}

/// Counters for events that are legal but worth knowing about.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Diagnostics {
    pub z_clamps: usize,
    pub labour_shortfalls: usize,
    pub unproducible_c_firms: usize,
    pub rationed_goods: usize,
}

/// Sum that does not depend on the order of its terms: sorted, then
/// compensated.
pub fn ordered_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut v: Vec<f64> = values.into_iter().collect();
    v.sort_by(f64::total_cmp);
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in v {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= IDENTITY_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

/// Workers waiting to be hired, front first.
#[derive(Debug, Clone, Default)]
pub struct LabourPool {
    queue: VecDeque<(usize, f64)>,
}

/// Hours assigned to one firm.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Hiring {
    pub assignments: Vec<(usize, f64)>,
    pub hours: f64,
    pub filled: bool,
}

impl LabourPool {
    pub fn new(offers: Vec<(usize, f64)>) -> Self {
        Self {
            queue: offers.into_iter().filter(|(_, h)| *h > 0.0).collect(),
        }
    }

    pub fn remaining_persons(&self) -> usize {
        self.queue.len()
    }

    /// Takes persons from the front until `demand` hours are covered. The last
    /// one may work part of their offer; everyone taken leaves the pool.
    pub fn hire(&mut self, demand: f64) -> Hiring {
        let mut out = Hiring {
            filled: demand <= 0.0,
            ..Hiring::default()
        };
        if demand <= 0.0 {
            return out;
        }
        let mut remaining = demand;
        while let Some((id, offer)) = self.queue.pop_front() {
            if offer >= remaining {
                out.assignments.push((id, remaining));
                out.hours = demand;
                out.filled = true;
                return out;
            }
            out.assignments.push((id, offer));
            remaining -= offer;
        }
        out.hours = ordered_sum(out.assignments.iter().map(|a| a.1));
        out
    }
}

/// Serves `demands` (per firm) from `offers` (per person), both in shuffled order.
pub fn match_labor(demands: &[f64], offers: &[(usize, f64)], rng: &mut ChaCha8Rng) -> Vec<Hiring> {
    let mut people = offers.to_vec();
    people.shuffle(rng);
    let mut pool = LabourPool::new(people);
    let mut firm_order: Vec<usize> = (0..demands.len()).collect();
    firm_order.shuffle(rng);
    let mut out = vec![Hiring::default(); demands.len()];
    for f in firm_order {
        out[f] = pool.hire(demands[f]);
    }
    out
}

#[derive(Debug, Clone)]
pub struct EconomyState {
    pub scenario: Scenario,
    pub persons: Vec<Person>,
    pub firms: Vec<Firm>,
    pub goods: GoodRegistry,
    pub r: f64,
    pub step: usize,
    pub diagnostics: Diagnostics,
    /// Per-agent entries of every completed step, when auditing is on.
    pub audit: Option<Vec<LedgerEntry>>,
    draw_rng: ChaCha8Rng,
    shuffle_rng: ChaCha8Rng,
}

impl EconomyState {
    pub fn new(scenario: &Scenario) -> Self {
        Self::with_shuffle_seed(scenario, stream_seed(scenario.seed, Stream::Shuffles))
    }

    /// Draws from the scenario seed but orders agents from `shuffle_seed`.
    pub fn with_shuffle_seed(scenario: &Scenario, shuffle_seed: u64) -> Self {
        let mut draw_rng = ChaCha8Rng::seed_from_u64(stream_seed(scenario.seed, Stream::Draws));
        let pop = init_population(scenario, &mut draw_rng);
        Self {
            scenario: scenario.clone(),
            persons: pop.persons,
            firms: pop.firms,
            goods: pop.goods,
            r: scenario.r0,
            step: 0,
            diagnostics: Diagnostics::default(),
            audit: None,
            draw_rng,
            shuffle_rng: ChaCha8Rng::seed_from_u64(shuffle_seed),
        }
    }

    pub fn enable_audit(&mut self) {
        self.audit = Some(Vec::new());
    }

    /// Return outcomes of the firms of one sector that appraised this step.
    pub fn meks(&self, sector: Sector) -> Vec<IrrOutcome> {
        self.firms
            .iter()
            .filter(|f| f.sector == sector)
            .filter_map(|f| f.accounts.mek)
            .collect()
    }

    /// Runs every configured step and returns their reports.
    pub fn run(&mut self) -> Result<Vec<StepReport>, EngineError> {
        (0..self.scenario.steps).map(|_| self.run_step()).collect()
    }

    pub fn run_step(&mut self) -> Result<StepReport, EngineError> {
        self.reset_step();
        let n_k = self.goods.n_k;
        let n_f = self.firms.len();

        let mut offers: Vec<(usize, f64)> = self
            .persons
            .iter()
            .filter(|p| !p.is_entrepreneur)
            .map(|p| (p.id, p.accounts.offered_hours))
            .collect();
        offers.shuffle(&mut self.shuffle_rng);
        let mut pool = LabourPool::new(offers);

        let mut k_sales: Vec<Vec<f64>> = vec![Vec::new(); n_k];
        let mut order: Vec<usize> = (0..n_k).collect();
        order.shuffle(&mut self.shuffle_rng);
        for h in order {
            self.k_firm_step(h, &mut pool);
        }
        let mut order: Vec<usize> = (n_k..n_f).collect();
        order.shuffle(&mut self.shuffle_rng);
        for h in order {
            self.c_firm_step(h, &mut pool, &mut k_sales);
        }

        self.pay_incomes();
        let c_sales = self.households_step();
        self.book_revenue(&k_sales, &c_sales);

        let report = self.aggregate()?;
        if let Some(audit) = self.audit.as_mut() {
            audit.extend(ledger_snapshot(self.step, &self.persons, &self.firms));
        }
        self.step += 1;
        Ok(report)
    }

    fn reset_step(&mut self) {
        let sc = &self.scenario;
        let c = &sc.constants;
        for f in self.firms.iter_mut() {
            f.accounts = FirmAccounts {
                retained: f.accounts.retained,
                ..FirmAccounts::default()
            };
        }
        for g in self.goods.goods.iter_mut() {
            g.price = None;
            g.available = 0.0;
        }
        if sc.redraw_rho && self.step > 0 {
            for p in self.persons.iter_mut() {
                p.rho = draw_rho(sc, &mut self.draw_rng);
            }
        }
        for p in self.persons.iter_mut() {
            let (money_stock, bond_stock) = if sc.carry_wealth {
                (p.accounts.money_stock, p.accounts.bond_stock)
            } else {
                (0.0, 0.0)
            };
            p.accounts = Default::default();
            p.accounts.money_stock = money_stock;
            p.accounts.bond_stock = bond_stock;
            p.l2 = expected_rate(p.rho, self.r);
            let z = assign_z_weights(c.z_script_l_bar, c.k_f, p.l2);
            if z.clamped {
                self.diagnostics.z_clamps += 1;
            }
            p.z_m = z.z_m;
            p.z_c = z.z_c;
            p.z_script_l = z.z_script_l;
            if !p.is_entrepreneur {
                p.accounts.offered_hours = (p.z_c + p.z_m) * c.n_bar;
            }
        }
    }

    fn hire_into(&mut self, h: usize, pool: &mut LabourPool, demand: f64) -> Hiring {
        let hiring = pool.hire(demand);
        for &(pid, hours) in &hiring.assignments {
            self.persons[pid].accounts.hours = hours;
            self.persons[pid].accounts.employer = Some(h);
        }
        if !hiring.filled {
            self.diagnostics.labour_shortfalls += 1;
        }
        let acc = &mut self.firms[h].accounts;
        acc.labour_demand = demand;
        acc.hired_hours = hiring.hours;
        acc.workers = hiring.assignments.len();
        hiring
    }

    /// Records the appraisal and returns whether the firm produces this step.
    fn decide(&mut self, h: usize, cost: &crate::firms::CostSheet) -> bool {
        if self.firms[h].tech_remaining > 0 {
            return true;
        }
        let firm = &self.firms[h];
        let l2 = self.persons[firm.owner_id].l2;
        let a = appraise(firm, cost, self.scenario.pricing, l2, self.r);
        let firm = &mut self.firms[h];
        firm.accounts.expected_price = Some(a.expected_price);
        firm.accounts.proceeds = Some(a.proceeds[0]);
        firm.accounts.mek = Some(a.mek);
        firm.accounts.decision = Some(a.decision);
        if a.decision == Decision::Invest {
            firm.accounts.invested = firm.psi;
            firm.tech_remaining = firm.tau;
            true
        } else {
            false
        }
    }

    fn finish_production(&mut self, h: usize, output: f64, cost: crate::firms::CostSheet) {
        let rule = self.scenario.pricing;
        let firm = &mut self.firms[h];
        let price = set_price(price_basis(rule, firm.mu, cost.prime_cost), output).ok();
        firm.accounts.producing = true;
        firm.accounts.output = output;
        firm.accounts.price = price;
        firm.accounts.cost = Some(cost);
        let good = &mut self.goods.goods[h];
        good.price = price;
        good.available = if price.is_some() { output } else { 0.0 };
    }

    fn k_firm_step(&mut self, h: usize, pool: &mut LabourPool) {
        let c = &self.scenario.constants;
        let (p_r, w) = (c.p_r, c.w_bar);
        let firm = &self.firms[h];
        let plan = solve_kfirm_inputs(firm, firm.eta, p_r, w);
        let planned = prime_cost(firm, &plan, p_r, &[], w);
        self.firms[h].accounts.plan = Some(plan.clone());
        self.firms[h].accounts.planned_cost = Some(planned.clone());
        if !self.decide(h, &planned) {
            return;
        }
        let hiring = self.hire_into(h, pool, plan.labour);
        let firm = &self.firms[h];
        let output = if hiring.filled {
            firm.eta
        } else {
            k_output(firm, plan.resources, hiring.hours)
        };
        let cost = cost_sheet(firm.mu, hiring.hours, w, p_r * plan.resources, 0.0);
        self.finish_production(h, output, cost);
    }

    fn c_firm_step(&mut self, h: usize, pool: &mut LabourPool, k_sales: &mut [Vec<f64>]) {
        let w = self.scenario.constants.w_bar;
        let k_prices: Vec<Option<f64>> = self
            .goods
            .k_goods()
            .iter()
            .map(|g| g.price.filter(|_| g.available > 0.0))
            .collect();
        let firm = &self.firms[h];
        let plan = match solve_cfirm_inputs(firm, firm.eta, &k_prices, w) {
            Ok(plan) => plan,
            Err(_) => {
                self.diagnostics.unproducible_c_firms += 1;
                if firm.tech_remaining == 0 {
                    let l2 = self.persons[firm.owner_id].l2;
                    let acc = &mut self.firms[h].accounts;
                    acc.mek = Some(IrrOutcome::Undefined);
                    acc.decision = Some(investment_decision(f64::NEG_INFINITY, l2, self.r));
                }
                return;
            }
        };
        let planned = prime_cost(firm, &plan, 0.0, &k_prices, w);
        self.firms[h].accounts.plan = Some(plan.clone());
        self.firms[h].accounts.planned_cost = Some(planned.clone());
        if !self.decide(h, &planned) {
            return;
        }

        let mut theta: f64 = 1.0;
        for (j, x) in plan.k_demands.iter().enumerate() {
            if *x > 0.0 {
                theta = theta.min(self.goods.goods[j].available / x);
            }
        }
        if theta <= 0.0 {
            return;
        }
        let mut units = Vec::with_capacity(plan.k_demands.len());
        let mut spend = Vec::with_capacity(plan.k_demands.len());
        for (j, x) in plan.k_demands.iter().enumerate() {
            let q = if theta < 1.0 { theta * x } else { *x };
            if q > 0.0 {
                let g = &mut self.goods.goods[j];
                let p = g.price.expect("priced k-good");
                g.available = (g.available - q).max(0.0);
                self.firms[j].accounts.units_sold += q;
                k_sales[j].push(p * q);
                spend.push(p * q);
            }
            units.push(q);
        }
        let demand = if theta < 1.0 { theta * plan.labour } else { plan.labour };
        let hiring = self.hire_into(h, pool, demand);
        let firm = &self.firms[h];
        let output = if hiring.filled && theta == 1.0 {
            firm.eta
        } else {
            c_output(firm, &units, hiring.hours)
        };
        let cost = cost_sheet(firm.mu, hiring.hours, w, 0.0, ordered_sum(spend));
        self.firms[h].accounts.k_purchases = units;
        self.finish_production(h, output, cost);
    }

    fn pay_incomes(&mut self) {
        let w = self.scenario.constants.w_bar;
        for p in self.persons.iter_mut() {
            p.accounts.wage_income = w * p.accounts.hours;
            if let Some(h) = p.firm_id {
                let f = &self.firms[h];
                if f.accounts.producing {
                    p.accounts.remuneration = f.accounts.cost.as_ref().map_or(0.0, |c| c.remuneration);
                }
            }
            p.accounts.income = p.accounts.wage_income + p.accounts.remuneration;
        }
    }

    /// Consumption purchases; returns per c-good the money paid by each buyer.
    fn households_step(&mut self) -> Vec<Vec<f64>> {
        let n_k = self.goods.n_k;
        let c_goods = self.goods.c_goods();
        let n_c = c_goods.len();
        let prices: Vec<Option<f64>> = c_goods.iter().map(|g| g.price.filter(|_| g.available > 0.0)).collect();
        let available: Vec<f64> = c_goods.iter().map(|g| g.available).collect();

        let mut order: Vec<usize> = (0..self.persons.len()).collect();
        order.shuffle(&mut self.shuffle_rng);

        let plans: Vec<(usize, Vec<f64>)> = order
            .iter()
            .filter(|&&i| self.persons[i].accounts.income > 0.0)
            .map(|&i| {
                let p = &self.persons[i];
                (i, spending_plan(p.z_m, p.z_c, &p.v, &prices, p.accounts.income).demands)
            })
            .collect();
        let ratio: Vec<f64> = (0..n_c)
            .map(|j| {
                let total = ordered_sum(plans.iter().map(|(_, d)| d[j]));
                if total > available[j] {
                    self.diagnostics.rationed_goods += 1;
                    available[j] / total
                } else {
                    1.0
                }
            })
            .collect();

        let r = self.r;
        let carry = self.scenario.carry_wealth;
        let mut sales: Vec<Vec<f64>> = vec![Vec::new(); n_c];
        let mut sold = vec![Vec::new(); n_c];
        for (i, demands) in plans {
            let mut paid = Vec::with_capacity(n_c);
            for j in 0..n_c {
                let q = if ratio[j] < 1.0 {
                    demands[j] * ratio[j]
                } else {
                    demands[j]
                };
                if q > 0.0 {
                    let m = q * prices[j].expect("demand only for offered goods");
                    sales[j].push(m);
                    sold[j].push(q);
                    paid.push(m);
                }
            }
            let p = &mut self.persons[i];
            p.accounts.spend = ordered_sum(paid);
            let residual = p.accounts.income - p.accounts.spend;
            let alloc = allocate_saving(residual, p.l2, r);
            p.accounts.speculative_money = alloc.speculative_money;
            p.accounts.bonds = alloc.bonds;
            if carry {
                p.accounts.money_stock += alloc.speculative_money;
                p.accounts.bond_stock += alloc.bonds;
            }
        }
        for (j, q) in sold.into_iter().enumerate() {
            let units = ordered_sum(q);
            let g = &mut self.goods.goods[n_k + j];
            g.available = (g.available - units).max(0.0);
            self.firms[n_k + j].accounts.units_sold = units;
        }
        sales
    }

    fn book_revenue(&mut self, k_sales: &[Vec<f64>], c_sales: &[Vec<f64>]) {
        let n_k = self.goods.n_k;
        for (h, f) in self.firms.iter_mut().enumerate() {
            let parts = if h < n_k { &k_sales[h] } else { &c_sales[h - n_k] };
            f.accounts.revenue = ordered_sum(parts.iter().copied());
            if let Some(cost) = &f.accounts.cost {
                f.accounts.profit = f.accounts.revenue - cost.prime_cost;
                f.accounts.retained += f.accounts.profit;
            }
            if f.accounts.producing {
                f.tech_remaining = f.tech_remaining.saturating_sub(1);
            }
        }
    }

    fn violation(&self, check: &'static str, expected: f64, actual: f64) -> EngineError {
        EngineError::Conservation {
            step: self.step,
            check,
            expected,
            actual,
            ledger: ledger_snapshot(self.step, &self.persons, &self.firms),
        }
    }

    fn require(&self, check: &'static str, expected: f64, actual: f64) -> Result<(), EngineError> {
        if close(expected, actual) {
            Ok(())
        } else {
            Err(self.violation(check, expected, actual))
        }
    }

    /// Sums agent accounts into a report and checks every identity.
    pub fn aggregate(&self) -> Result<StepReport, EngineError> {
        let sc = &self.scenario;
        let c = &sc.constants;
        let w = c.w_bar;
        let n_k = self.goods.n_k;

        for p in &self.persons {
            let a = &p.accounts;
            for (name, v) in [
                ("non-negative hours", a.hours),
                ("non-negative income", a.income),
                ("non-negative spend", a.spend),
                ("non-negative speculative money", a.speculative_money),
                ("non-negative bonds", a.bonds),
            ] {
                if v.is_nan() || v < 0.0 {
                    return Err(self.violation(name, 0.0, v));
                }
            }
            self.require(
                "person budget: income = spend + money + bonds",
                a.income,
                a.spend + a.speculative_money + a.bonds,
            )?;
        }
        for g in &self.goods.goods {
            if g.available.is_nan() || g.available < 0.0 {
                return Err(self.violation("non-negative availability", 0.0, g.available));
            }
        }
        for f in &self.firms {
            if let Some(cs) = &f.accounts.cost {
                self.require("PC = FC + UC", cs.prime_cost, cs.factor_cost + cs.user_cost)?;
                self.require(
                    "W = wages + remuneration",
                    cs.labour_outlay,
                    cs.wage_bill + cs.remuneration,
                )?;
            }
        }

        let firms_of = |sector: Sector| self.firms.iter().filter(move |f| f.sector == sector);
        let wage_bills = ordered_sum(
            self.firms
                .iter()
                .filter_map(|f| f.accounts.cost.as_ref().map(|c| c.wage_bill)),
        );
        let wages_received = ordered_sum(self.persons.iter().map(|p| p.accounts.wage_income));
        self.require("wages paid = wages received", wage_bills, wages_received)?;
        let rem_paid = ordered_sum(
            self.firms
                .iter()
                .filter_map(|f| f.accounts.cost.as_ref().map(|c| c.remuneration)),
        );
        let rem_received = ordered_sum(self.persons.iter().map(|p| p.accounts.remuneration));
        self.require("remuneration paid = received", rem_paid, rem_received)?;

        let y = ordered_sum(self.persons.iter().map(|p| p.accounts.income));
        let consumption = ordered_sum(self.persons.iter().map(|p| p.accounts.spend));
        let c_revenue = ordered_sum(firms_of(Sector::C).map(|f| f.accounts.revenue));
        self.require("c-goods revenue = household spend", consumption, c_revenue)?;
        let k_revenue = ordered_sum(firms_of(Sector::K).map(|f| f.accounts.revenue));
        let k_spend = ordered_sum(firms_of(Sector::C).filter_map(|f| f.accounts.cost.as_ref().map(|c| c.purchases)));
        self.require("k-goods revenue = c-firm purchases", k_spend, k_revenue)?;

        let m2 = ordered_sum(self.persons.iter().map(|p| p.accounts.speculative_money));
        let b = ordered_sum(self.persons.iter().map(|p| p.accounts.bonds));
        let s = y - consumption;
        self.require("M2 + B = S", s, m2 + b)?;
        let investment = ordered_sum(self.firms.iter().map(|f| f.accounts.invested));

        let mut n_kw = 0usize;
        let mut n_cw = 0usize;
        for p in &self.persons {
            match p.accounts.employer {
                Some(h) if h < n_k => n_kw += 1,
                Some(_) => n_cw += 1,
                None => {}
            }
        }
        let active = self.firms.iter().filter(|f| f.accounts.producing).count();
        let n = n_kw + n_cw + active;
        let n_p = self.persons.len();
        let workers = n_p - self.firms.len();
        let u = n_p - n;
        let n_s = ordered_sum(self.persons.iter().map(|p| p.accounts.offered_hours));

        Ok(StepReport {
            r0: self.r,
            l2: sc.nominal_l2(),
            i_w: investment / w,
            y_w: y / w,
            c_w: consumption / w,
            s_w: s / w,
            m2,
            b,
            n: n as f64,
            u_pct: if n_p > 0 { 100.0 * u as f64 / n_p as f64 } else { 100.0 },
            i: investment,
            y,
            c: consumption,
            s,
            m1: b + consumption,
            n_s,
            n_k: n_kw as f64,
            n_c: n_cw as f64,
            u: u as f64,
            u_workers_pct: if workers > 0 {
                100.0 * (workers - n_kw - n_cw) as f64 / workers as f64
            } else {
                100.0
            },
        })
    }
}

/// Nonzero money flows of every agent.
pub fn ledger_snapshot(step: usize, persons: &[Person], firms: &[Firm]) -> Vec<LedgerEntry> {
    let mut out = Vec::new();
    let mut push = |agent: &str, account: &'static str, amount: f64| {
        if amount != 0.0 {
            out.push(LedgerEntry {
                step,
                agent: agent.to_string(),
                account,
                amount,
            });
        }
    };
    for p in persons {
        let id = format!("person:{}", p.id);
        let a = &p.accounts;
        push(&id, "wage_income", a.wage_income);
        push(&id, "remuneration", a.remuneration);
        push(&id, "consumption", -a.spend);
        push(&id, "speculative_money", -a.speculative_money);
        push(&id, "bonds", -a.bonds);
    }
    for f in firms {
        let id = format!("firm:{}", f.id);
        let a = &f.accounts;
        push(&id, "technology", -a.invested);
        if let Some(c) = &a.cost {
            push(&id, "wages", -c.wage_bill);
            push(&id, "remuneration", -c.remuneration);
            push(&id, "resources", -c.resource_cost);
            push(&id, "k_goods", -c.purchases);
        }
        push(&id, "revenue", a.revenue);
    }
    out
}

/// Builds a fresh economy for `scenario` and returns the last step's report.
pub fn run_scenario(scenario: &Scenario) -> Result<StepReport, EngineError> {
    let mut state = EconomyState::new(scenario);
    let reports = state.run()?;
    Ok(reports.last().cloned().unwrap_or_default())
}
