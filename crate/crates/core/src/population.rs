//! Person and firm rosters, drawn once per run, and the goods they value.
//!
//! Firm `h` produces good `h`. Firms `0..n_k` are the capital-goods sector and
//! `n_k..n_k + n_c` the consumption-goods sector. Person taste vectors are
//! indexed by c-good position (`h - n_k`); c-firm input weights by k-good id.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::{KExpectation, Scenario};
use crate::firms::{CostSheet, Decision, InputPlan};
use crate::irr::IrrOutcome;

/// Lower bound on any drawn sales expectation.
pub const ETA_FLOOR: f64 = 0.01;
/// Margin kept between the money exponent and its bounds.
pub const Z_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sector {
    K,
    C,
}

/// Per-step flows and holdings of a person. All money amounts in money units.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PersonAccounts {
    pub offered_hours: f64,
    pub hours: f64,
    pub employer: Option<usize>,
    pub wage_income: f64,
    pub remuneration: f64,
    pub income: f64,
    pub spend: f64,
    pub speculative_money: f64,
    pub bonds: f64,
    /// Holdings brought forward when wealth carry-over is on.
    pub money_stock: f64,
    pub bond_stock: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Person {
    pub id: usize,
    pub is_entrepreneur: bool,
    pub firm_id: Option<usize>,
    pub z_m: f64,
    pub z_c: f64,
    pub z_script_l: f64,
    pub v: Vec<f64>,
    pub rho: f64,
    pub l2: f64,
    pub accounts: PersonAccounts,
}

impl Person {
    /// A worker with the given taste weights and a zero rate offset.
    pub fn new(id: usize, v: Vec<f64>, z_script_l: f64) -> Self {
        let z_c = 1.0 - z_script_l;
        Self {
            id,
            is_entrepreneur: false,
            firm_id: None,
            z_m: 0.0,
            z_c,
            z_script_l,
            v,
            rho: 0.0,
            l2: 0.0,
            accounts: PersonAccounts::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FirmAccounts {
    pub plan: Option<InputPlan>,
    /// Cost sheet at the planned scale, used for appraisal.
    pub planned_cost: Option<CostSheet>,
    /// Cost sheet of the inputs actually bought and hired.
    pub cost: Option<CostSheet>,
    pub expected_price: Option<f64>,
    pub proceeds: Option<f64>,
    pub mek: Option<IrrOutcome>,
    pub decision: Option<Decision>,
    pub producing: bool,
    pub invested: f64,
    pub labour_demand: f64,
    pub hired_hours: f64,
    pub workers: usize,
    /// Units of each k-good bought (c-firms).
    pub k_purchases: Vec<f64>,
    pub output: f64,
    pub price: Option<f64>,
    pub units_sold: f64,
    pub revenue: f64,
    pub profit: f64,
    /// Realized profit accumulated over the run; never distributed.
    pub retained: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Firm {
    pub id: usize,
    pub sector: Sector,
    pub owner_id: usize,
    pub a: f64,
    pub z_cap: f64,
    pub z_l: f64,
    pub tau: usize,
    pub psi: f64,
    pub eta: f64,
    pub mu: f64,
    pub v_in: Option<Vec<f64>>,
    pub tech_remaining: usize,
    pub accounts: FirmAccounts,
}

impl Firm {
    #[allow(clippy::too_many_arguments)]
    pub fn new_k(
        id: usize,
        owner_id: usize,
        a: f64,
        z_r: f64,
        z_l: f64,
        tau: usize,
        psi: f64,
        eta: f64,
        mu: f64,
    ) -> Self {
        Self {
            id,
            sector: Sector::K,
            owner_id,
            a,
            z_cap: z_r,
            z_l,
            tau,
            psi,
            eta,
            mu,
            v_in: None,
            tech_remaining: 0,
            accounts: FirmAccounts::default(),
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn new_c(
        id: usize,
        owner_id: usize,
        a: f64,
        z_k: f64,
        z_l: f64,
        tau: usize,
        psi: f64,
        eta: f64,
        mu: f64,
        v_in: Vec<f64>,
    ) -> Self {
        Self {
            sector: Sector::C,
            v_in: Some(v_in),
            ..Self::new_k(id, owner_id, a, z_k, z_l, tau, psi, eta, mu)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Good {
    pub id: usize,
    pub sector: Sector,
    pub firm_id: usize,
    /// Sum of the individual weights placed on this good.
    pub value: f64,
    pub price: Option<f64>,
    pub available: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoodRegistry {
    pub goods: Vec<Good>,
    pub n_k: usize,
}

impl GoodRegistry {
    pub fn k_goods(&self) -> &[Good] {
        &self.goods[..self.n_k]
    }

    pub fn c_goods(&self) -> &[Good] {
        &self.goods[self.n_k..]
    }

    /// Value of a good as a fraction of its sector's total value.
    pub fn value_share(&self, id: usize) -> f64 {
        let sector = if id < self.n_k { self.k_goods() } else { self.c_goods() };
        let total: f64 = sector.iter().map(|g| g.value).sum();
        self.goods[id].value / total
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub persons: Vec<Person>,
    pub firms: Vec<Firm>,
    pub goods: GoodRegistry,
}

/// Money, consumption and leisure exponents for one expected rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZWeights {
    pub z_m: f64,
    pub z_c: f64,
    pub z_script_l: f64,
    /// True when `k_f * L2` fell outside the admissible band.
    pub clamped: bool,
}

/// `z_M = clamp(k_f * L2, eps, 1 - z_script_L - eps)`, `z_C` takes the rest.
pub fn assign_z_weights(z_script_l: f64, k_f: f64, l2: f64) -> ZWeights {
    let raw = k_f * l2;
    let hi = 1.0 - z_script_l - Z_EPSILON;
    let z_m = raw.clamp(Z_EPSILON, hi);
    ZWeights {
        z_m,
        z_c: 1.0 - z_m - z_script_l,
        z_script_l,
        clamped: z_m != raw,
    }
}

fn uniform_weights(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// `n` draws from the open unit interval, normalized to sum 1.
fn drawn_weights(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..n)
        .map(|_| loop {
            let u: f64 = rng.random();
            if u > 0.0 {
                break u;
            }
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|u| u / total).collect()
}

fn normal_draw(mean: f64, sd: f64, rng: &mut ChaCha8Rng) -> f64 {
    if sd == 0.0 {
        mean
    } else {
        Normal::new(mean, sd)
            .expect("sd validated finite and non-negative")
            .sample(rng)
    }
}

/// A fresh liquidity-preference offset.
pub fn draw_rho(scenario: &Scenario, rng: &mut ChaCha8Rng) -> f64 {
    normal_draw(scenario.rho_mean, scenario.effective_rho_sd(), rng)
}

/// Builds the rosters. Draw order: owners, tastes, offsets, expectations,
/// optimism, input weights.
pub fn init_population(scenario: &Scenario, rng: &mut ChaCha8Rng) -> Population {
    let c = &scenario.constants;
    let (n_p, n_k, n_c) = (c.n_p, c.n_k, c.n_c);
    let n_f = n_k + n_c;
    let hetero = !scenario.homogeneous;

    let mut order: Vec<usize> = (0..n_p).collect();
    order.shuffle(rng);
    let owners = &order[..n_f.min(n_p)];

    let mut persons: Vec<Person> = (0..n_p)
        .map(|id| {
            let v = if hetero {
                drawn_weights(n_c, rng)
            } else {
                uniform_weights(n_c)
            };
            Person::new(id, v, c.z_script_l_bar)
        })
        .collect();
    for p in persons.iter_mut() {
        p.rho = draw_rho(scenario, rng);
    }
    for (h, &owner) in owners.iter().enumerate() {
        persons[owner].is_entrepreneur = true;
        persons[owner].firm_id = Some(h);
    }

    let eta_sd = scenario.effective_eta_c_sd();
    let eta_draw = |rng: &mut ChaCha8Rng| normal_draw(scenario.eta_c_mean, eta_sd, rng).max(ETA_FLOOR);
    let eta_c: Vec<f64> = (0..n_c).map(|_| eta_draw(rng)).collect();
    let eta_k: Vec<f64> = match scenario.k_expectation {
        KExpectation::SectorMean => {
            let mean = if n_c > 0 {
                eta_c.iter().sum::<f64>() / n_c as f64
            } else {
                scenario.eta_c_mean
            };
            vec![scenario.eta_k_multiplier * mean; n_k]
        }
        KExpectation::PerFirm => (0..n_k).map(|_| scenario.eta_k_multiplier * eta_draw(rng)).collect(),
    };
    let mu_sd = scenario.effective_mu_sd();
    let mu: Vec<f64> = (0..n_f)
        .map(|_| normal_draw(scenario.mu_mean, mu_sd, rng).max(0.0))
        .collect();
    let v_in: Vec<Vec<f64>> = (0..n_c)
        .map(|_| {
            if hetero {
                drawn_weights(n_k, rng)
            } else {
                uniform_weights(n_k)
            }
        })
        .collect();

    let mut goods: Vec<Good> = (0..n_f)
        .map(|h| Good {
            id: h,
            sector: if h < n_k { Sector::K } else { Sector::C },
            firm_id: h,
            value: 0.0,
            price: None,
            available: 0.0,
        })
        .collect();
    for p in &persons {
        for (j, w) in p.v.iter().enumerate() {
            goods[n_k + j].value += w;
        }
    }
    for weights in &v_in {
        for (j, w) in weights.iter().enumerate() {
            goods[j].value += w;
        }
    }
    let registry = GoodRegistry { goods, n_k };

    let mut firms = Vec::with_capacity(n_f);
    for h in 0..n_k {
        let psi = c.psi_k_scale * registry.value_share(h);
        firms.push(Firm::new_k(
            h,
            owners[h],
            c.a_k,
            c.z_r_default,
            c.z_l_bar,
            c.tau_bar,
            psi,
            eta_k[h],
            mu[h],
        ));
    }
    for (j, weights) in v_in.into_iter().enumerate() {
        let h = n_k + j;
        let psi = c.psi_c_scale * registry.value_share(h);
        firms.push(Firm::new_c(
            h,
            owners[h],
            c.a_c,
            c.z_k_default,
            c.z_l_bar,
            c.tau_bar,
            psi,
            eta_c[j],
            mu[h],
            weights,
        ));
    }

    Population {
        persons,
        firms,
        goods: registry,
    }
}

/// Writes one delimited record per agent with its drawn attributes.
pub fn write_roster<W: Write>(pop: &Population, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "kind",
        "id",
        "sector",
        "owner_or_firm",
        "rho",
        "eta",
        "mu",
        "psi",
        "weights",
    ])?;
    let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";");
    for p in &pop.persons {
        w.write_record([
            "person".to_string(),
            p.id.to_string(),
            String::new(),
            p.firm_id.map(|f| f.to_string()).unwrap_or_default(),
            p.rho.to_string(),
            String::new(),
            String::new(),
            String::new(),
            join(&p.v),
        ])?;
    }
    for f in &pop.firms {
        w.write_record([
            "firm".to_string(),
            f.id.to_string(),
            format!("{:?}", f.sector),
            f.owner_id.to_string(),
            String::new(),
            f.eta.to_string(),
            f.mu.to_string(),
            f.psi.to_string(),
            f.v_in.as_deref().map(join).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
