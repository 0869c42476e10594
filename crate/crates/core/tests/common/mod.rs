//! Independent numerical oracles and random instance generators shared by the
//! integration tests. Nothing here calls the closed forms under test.

#![allow(dead_code, clippy::needless_range_loop)]

use keynes_abm::population::{Firm, Person};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Central-difference gradient.
fn gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut y = x.to_vec();
    for i in 0..x.len() {
        y[i] = x[i] + h;
        let fp = f(&y);
        y[i] = x[i] - h;
        let fm = f(&y);
        y[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

fn hessian<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut hm = vec![vec![0.0; n]; n];
    let mut y = x.to_vec();
    for i in 0..n {
        y[i] = x[i] + h;
        let gp = gradient(f, &y, h);
        y[i] = x[i] - h;
        let gm = gradient(f, &y, h);
        y[i] = x[i];
        for j in 0..n {
            hm[i][j] = (gp[j] - gm[j]) / (2.0 * h);
        }
    }
    for i in 0..n {
        for j in 0..i {
            let s = 0.5 * (hm[i][j] + hm[j][i]);
            hm[i][j] = s;
            hm[j][i] = s;
        }
    }
    hm
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Damped Newton minimization with finite-difference derivatives. `f` may
/// return +inf outside its domain; the line search backs off from it.
pub fn minimize<F: Fn(&[f64]) -> f64>(f: F, x0: Vec<f64>) -> Vec<f64> {
    let mut x = x0;
    let mut fx = f(&x);
    assert!(fx.is_finite(), "start must be feasible");
    for _ in 0..500 {
        let g = gradient(&f, &x, 1e-6);
        let h = hessian(&f, &x, 1e-4);
        let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut dir = solve_linear(h, neg_g.clone()).unwrap_or_else(|| neg_g.clone());
        if dir.iter().zip(&g).map(|(d, gi)| d * gi).sum::<f64>() >= 0.0 {
            dir = neg_g;
        }
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-12 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + t * di).collect();
            let ft = f(&trial);
            if ft.is_finite() && ft <= fx {
                let step = dir.iter().map(|d| (t * d).abs()).fold(0.0, f64::max);
                x = trial;
                fx = ft;
                accepted = true;
                if step < 1e-11 {
                    return x;
                }
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return x;
        }
    }
    x
}

/// Household optimum by direct maximization of
/// `z_M ln m + z_C sum_j v_j ln x_j + z_L ln(N_bar - N)` with
/// `w N = sum_j p_j x_j + m`, over `ln x_j` and `ln m`.
/// Returns `(N, m, x)`.
pub fn household_oracle(
    z_m: f64,
    z_c: f64,
    z_l: f64,
    v: &[f64],
    prices: &[f64],
    w: f64,
    n_bar: f64,
) -> (f64, f64, Vec<f64>) {
    let n = v.len();
    let neg_utility = |y: &[f64]| {
        let m = y[n].exp();
        let spend: f64 = (0..n).map(|j| prices[j] * y[j].exp()).sum();
        let leisure = n_bar - (spend + m) / w;
        if leisure <= 0.0 {
            return f64::INFINITY;
        }
        let goods: f64 = (0..n).map(|j| v[j] * y[j]).sum();
        -(z_m * y[n] + z_c * goods + z_l * leisure.ln())
    };
    let budget = 0.25 * w * n_bar;
    let mut y0: Vec<f64> = (0..n).map(|j| (budget / (n as f64 * prices[j])).ln()).collect();
    y0.push(budget.ln());
    let y = minimize(neg_utility, y0);
    let x: Vec<f64> = y[..n].iter().map(|v| v.exp()).collect();
    let m = y[n].exp();
    let spend: f64 = x.iter().zip(prices).map(|(xi, p)| xi * p).sum();
    ((spend + m) / w, m, x)
}

/// k-firm cost minimum of `w L + p_R R` on `A R^zR L^zL = q`, by golden
/// section on `ln L`. Returns `(L, R)`.
pub fn kfirm_oracle(a: f64, z_r: f64, z_l: f64, q: f64, p_r: f64, w: f64) -> (f64, f64) {
    let resources = |ln_l: f64| (q / (a * (z_l * ln_l).exp())).powf(1.0 / z_r);
    let cost = |ln_l: f64| w * ln_l.exp() + p_r * resources(ln_l);
    let (mut lo, mut hi) = (-60.0_f64, 60.0_f64);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - phi * (hi - lo);
    let mut d = lo + phi * (hi - lo);
    let (mut fc, mut fd) = (cost(c), cost(d));
    for _ in 0..400 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = cost(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = cost(d);
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    let ln_l = 0.5 * (lo + hi);
    (ln_l.exp(), resources(ln_l))
}

/// c-firm cost minimum of `w L + sum_j p_j x_j` on
/// `A (prod_j x_j^v_j)^zK L^zL = q`, over `ln x_j`. Returns `(L, x)`.
pub fn cfirm_oracle(a: f64, z_k: f64, z_l: f64, v: &[f64], prices: &[f64], q: f64, w: f64) -> (f64, Vec<f64>) {
    let labour = |y: &[f64]| {
        let ln_k: f64 = v.iter().zip(y).map(|(vj, yj)| vj * yj).sum();
        ((q / a).ln() - z_k * ln_k) / z_l
    };
    let cost = |y: &[f64]| {
        let k: f64 = prices.iter().zip(y).map(|(p, yj)| p * yj.exp()).sum();
        w * labour(y).exp() + k
    };
    let y0: Vec<f64> = vec![0.0; v.len()];
    let y = minimize(cost, y0);
    (labour(&y).exp(), y.iter().map(|v| v.exp()).collect())
}

/// Plain bisection for `psi = sum_s q_s / (1 + m)^s` on `[-0.99, 100]`.
pub fn irr_bisection(psi: f64, q: &[f64]) -> f64 {
    let pv = |m: f64| -> f64 {
        q.iter()
            .enumerate()
            .map(|(s, qs)| qs / (1.0 + m).powi(s as i32 + 1))
            .sum()
    };
    let (mut lo, mut hi) = (-0.99_f64, 100.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if pv(mid) > psi {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Positive weights summing to one.
pub fn random_weights(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

pub fn random_person(n_goods: usize, rng: &mut ChaCha8Rng) -> Person {
    let z_l = rng.random_range(0.05..0.3);
    let z_m = rng.random_range(0.01..(0.9 - z_l));
    let mut p = Person::new(0, random_weights(n_goods, rng), z_l);
    p.z_m = z_m;
    p.z_c = 1.0 - z_m - z_l;
    p
}

pub fn random_kfirm(rng: &mut ChaCha8Rng) -> Firm {
    let z_l = rng.random_range(0.2..0.6);
    let z_r = rng.random_range(0.1..(0.95 - z_l));
    Firm::new_k(0, 0, rng.random_range(1.0..20.0), z_r, z_l, 5, 50.0, 10.0, 0.5)
}

pub fn random_cfirm(n_k: usize, rng: &mut ChaCha8Rng) -> Firm {
    let z_l = rng.random_range(0.2..0.6);
    let z_k = rng.random_range(0.1..(0.95 - z_l));
    Firm::new_c(
        n_k,
        1,
        rng.random_range(1.0..20.0),
        z_k,
        z_l,
        5,
        50.0,
        3.0,
        0.5,
        random_weights(n_k, rng),
    )
}

/// Worst relative disagreement between `solve_household` and the numerical
/// maximizer over `instances` random persons and price vectors.
pub fn household_max_error(instances: usize, seed: u64) -> f64 {
    use keynes_abm::household::solve_household;
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..instances {
        let n_goods = rng.random_range(1..=5);
        let person = random_person(n_goods, &mut rng);
        let prices: Vec<f64> = (0..n_goods).map(|_| rng.random_range(0.2..20.0)).collect();
        let w = rng.random_range(1.0..20.0);
        let n_bar = rng.random_range(4.0..12.0);
        let offered: Vec<Option<f64>> = prices.iter().copied().map(Some).collect();
        let got = solve_household(&person, &offered, w, n_bar);
        let (n, m, x) = household_oracle(person.z_m, person.z_c, person.z_script_l, &person.v, &prices, w, n_bar);
        worst = worst
            .max(rel_err(got.labour_supply, n))
            .max(rel_err(got.money_retained, m));
        for (a, b) in got.demands.iter().zip(&x) {
            worst = worst.max(rel_err(*a, *b));
        }
    }
    worst
}

pub fn kfirm_max_error(instances: usize, seed: u64) -> f64 {
    use keynes_abm::firms::solve_kfirm_inputs;
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..instances {
        let firm = random_kfirm(&mut rng);
        let q = rng.random_range(0.5..200.0);
        let p_r = rng.random_range(0.2..5.0);
        let w = rng.random_range(1.0..20.0);
        let plan = solve_kfirm_inputs(&firm, q, p_r, w);
        let (l, r) = kfirm_oracle(firm.a, firm.z_cap, firm.z_l, q, p_r, w);
        worst = worst.max(rel_err(plan.labour, l)).max(rel_err(plan.resources, r));
    }
    worst
}

pub fn cfirm_max_error(instances: usize, seed: u64) -> f64 {
    use keynes_abm::firms::solve_cfirm_inputs;
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..instances {
        let n_k = rng.random_range(1..=4);
        let firm = random_cfirm(n_k, &mut rng);
        let prices: Vec<f64> = (0..n_k).map(|_| rng.random_range(0.2..10.0)).collect();
        let q = rng.random_range(0.5..100.0);
        let w = rng.random_range(1.0..20.0);
        let offered: Vec<Option<f64>> = prices.iter().copied().map(Some).collect();
        let plan = solve_cfirm_inputs(&firm, q, &offered, w).expect("all k-goods priced");
        let v = firm.v_in.as_deref().unwrap();
        let (l, x) = cfirm_oracle(firm.a, firm.z_cap, firm.z_l, v, &prices, q, w);
        worst = worst.max(rel_err(plan.labour, l));
        for (a, b) in plan.k_demands.iter().zip(&x) {
            worst = worst.max(rel_err(*a, *b));
        }
    }
    worst
}

/// Worst `(round-trip relative residual, |rate - bisection|)` over random
/// positive annuities.
pub fn irr_max_errors(instances: usize, seed: u64) -> (f64, f64) {
    use keynes_abm::irr::{present_value, solve_irr, IrrProblem};
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut round_trip, mut vs_bisection) = (0.0_f64, 0.0_f64);
    for _ in 0..instances {
        let (psi, q, n) = random_annuity(&mut rng);
        let m = solve_irr(&IrrProblem::annuity(psi, q, n))
            .rate()
            .unwrap_or_else(|| panic!("no rate for psi={psi} q={q} n={n}"));
        let flows = vec![q; n];
        round_trip = round_trip.max((present_value(&flows, m) - psi).abs() / psi);
        vs_bisection = vs_bisection.max((m - irr_bisection(psi, &flows)).abs());
    }
    (round_trip, vs_bisection)
}

/// `(psi, q, n)` with a root inside the bisection oracle's bracket.
pub fn random_annuity(rng: &mut ChaCha8Rng) -> (f64, f64, usize) {
    let n = rng.random_range(1..=10);
    let q = rng.random_range(1.0..1000.0);
    // Outlay between 0.05x and 3x the undiscounted sum.
    let psi = q * n as f64 * rng.random_range(0.05..3.0);
    (psi, q, n)
}

fn within(expected: f64, actual: f64) -> bool {
    (expected - actual).abs() <= 1e-9 * expected.abs().max(actual.abs()).max(1.0)
}

/// Recomputes every accounting identity of the last step from agent
/// accounts and compares it with `report`. Returns the first failure.
pub fn check_identities(
    state: &keynes_abm::engine::EconomyState,
    report: &keynes_abm::engine::StepReport,
) -> Result<(), String> {
    let w = state.scenario.constants.w_bar;
    let (mut y, mut c, mut m2, mut b) = (0.0, 0.0, 0.0, 0.0);
    for p in &state.persons {
        let a = &p.accounts;
        if !within(a.wage_income, w * a.hours) {
            return Err(format!(
                "person {}: wage income {} at {} hours",
                p.id, a.wage_income, a.hours
            ));
        }
        if !within(a.income, a.wage_income + a.remuneration) {
            return Err(format!(
                "person {}: income {} is not wages plus remuneration",
                p.id, a.income
            ));
        }
        if !within(a.income, a.spend + a.speculative_money + a.bonds) {
            return Err(format!(
                "person {}: budget {} != {} + {} + {}",
                p.id, a.income, a.spend, a.speculative_money, a.bonds
            ));
        }
        y += a.income;
        c += a.spend;
        m2 += a.speculative_money;
        b += a.bonds;
    }
    for f in &state.firms {
        if let Some(cs) = &f.accounts.cost {
            if !within(cs.prime_cost, cs.factor_cost + cs.user_cost) {
                return Err(format!("firm {}: PC != FC + UC", f.id));
            }
            if !within(cs.labour_outlay, ((1.0 + f.mu) + f.accounts.hired_hours) * w) {
                return Err(format!("firm {}: W != ((1 + mu) + L) w", f.id));
            }
        }
    }
    let checks = [
        ("Y", y, report.y),
        ("C", c, report.c),
        ("M2", m2, report.m2),
        ("B", b, report.b),
        ("S = Y - C", report.y - report.c, report.s),
        ("M1 = B + C", report.b + report.c, report.m1),
        ("M2 + B = S", report.s, report.m2 + report.b),
        ("Y_w", report.y / w, report.y_w),
        ("C_w", report.c / w, report.c_w),
        ("I_w", report.i / w, report.i_w),
    ];
    for (name, expected, actual) in checks {
        if !within(expected, actual) {
            return Err(format!("{name}: expected {expected}, got {actual}"));
        }
    }
    Ok(())
}

/// Runs every step of `scenario`, checking identities after each one.
pub fn run_checked(scenario: &keynes_abm::config::Scenario) -> Result<Vec<keynes_abm::engine::StepReport>, String> {
    let mut state = keynes_abm::engine::EconomyState::new(scenario);
    let mut out = Vec::new();
    for step in 0..scenario.steps {
        let report = state.run_step().map_err(|e| format!("step {step}: {e}"))?;
        check_identities(&state, &report).map_err(|e| format!("step {step}: {e}"))?;
        out.push(report);
    }
    Ok(out)
}
