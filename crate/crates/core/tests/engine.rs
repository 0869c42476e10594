//! Whole-economy behaviour: determinism, order invariance, allocation
//! patterns, identities over multi-step runs and replication stability.

mod common;

use keynes_abm::config::{scenario_grid, stepped_range, KExpectation, Scenario, SweepAxis};
use keynes_abm::engine::{run_scenario, EconomyState, StepReport};
use keynes_abm::harness::run_sweep;

fn bits(r: &StepReport) -> Vec<u64> {
    r.values().iter().map(|v| v.to_bits()).collect()
}

fn heterogeneous() -> Scenario {
    Scenario {
        homogeneous: false,
        eta_c_sd: 7f64.sqrt(),
        rho_sd: 0.005,
        mu_sd: 0.1,
        seed: 7,
        ..Scenario::default()
    }
}

#[test]
fn same_seed_same_report() {
    for s in [Scenario::default(), heterogeneous()] {
        assert_eq!(bits(&run_scenario(&s).unwrap()), bits(&run_scenario(&s).unwrap()));
    }
}

#[test]
fn different_seeds_differ_when_heterogeneous() {
    let a = run_scenario(&heterogeneous()).unwrap();
    let b = run_scenario(&Scenario {
        seed: 8,
        ..heterogeneous()
    })
    .unwrap();
    assert_ne!(bits(&a), bits(&b));
}

#[test]
fn homogeneous_aggregates_ignore_agent_order() {
    for (r0, eta) in [(0.01, 3.6), (0.03, 2.4), (0.05, 5.0), (0.09, 3.6)] {
        let s = Scenario {
            r0,
            eta_c_mean: eta,
            ..Scenario::default()
        };
        let reference = {
            let mut st = EconomyState::with_shuffle_seed(&s, 1);
            st.run_step().unwrap()
        };
        for shuffle in [2, 99, u64::MAX] {
            let mut st = EconomyState::with_shuffle_seed(&s, shuffle);
            assert_eq!(
                bits(&st.run_step().unwrap()),
                bits(&reference),
                "r0={r0} eta={eta} shuffle={shuffle}"
            );
        }
    }
}

fn r0_grid(rho_mean: f64) -> Vec<StepReport> {
    let base = Scenario {
        rho_mean,
        ..Scenario::default()
    };
    let grid = scenario_grid(&base, SweepAxis::R0, &stepped_range(0.005, 0.1, 0.005).unwrap()).unwrap();
    grid.iter().map(|s| run_scenario(s).unwrap()).collect()
}

#[test]
fn allocation_trichotomy() {
    for r in r0_grid(-0.005) {
        assert_eq!(r.m2, 0.0, "r0={}", r.r0);
    }
    for r in r0_grid(0.005) {
        assert_eq!(r.b, 0.0, "r0={}", r.r0);
    }
    for r in r0_grid(0.0) {
        assert_eq!(r.m2, r.b, "r0={}", r.r0);
    }
}

#[test]
fn investment_is_a_step_function_of_the_rate() {
    let rows = r0_grid(0.0);
    let first_zero = rows
        .iter()
        .position(|r| r.i_w == 0.0)
        .expect("some rate stops investment");
    assert!(first_zero > 0);
    for r in &rows[..first_zero] {
        assert!(r.i_w > 0.0);
        assert_eq!(r.i_w, rows[0].i_w);
        assert_eq!(r.y_w, rows[0].y_w);
        assert_eq!(r.n, rows[0].n);
    }
    for r in &rows[first_zero..] {
        assert_eq!((r.i_w, r.y_w, r.n), (0.0, 0.0, 0.0));
    }
}

#[test]
fn animal_spirits_raise_activity() {
    let grid = scenario_grid(
        &Scenario::default(),
        SweepAxis::EtaCMean,
        &stepped_range(2.0, 5.0, 0.2).unwrap(),
    )
    .unwrap();
    let rows: Vec<StepReport> = grid.iter().map(|s| run_scenario(s).unwrap()).collect();
    for pair in rows.windows(2) {
        assert!(pair[1].n >= pair[0].n);
        assert!(pair[1].y_w >= pair[0].y_w);
    }
    assert!(rows.last().unwrap().u_pct < rows[0].u_pct);
}

#[test]
fn identities_hold_on_every_step_of_long_runs() {
    let variants = [
        Scenario {
            steps: 8,
            ..Scenario::default()
        },
        Scenario {
            steps: 8,
            carry_wealth: true,
            redraw_rho: true,
            ..heterogeneous()
        },
        Scenario {
            steps: 6,
            k_expectation: KExpectation::PerFirm,
            r0: 0.002,
            ..heterogeneous()
        },
        Scenario {
            steps: 3,
            eta_c_mean: 40.0,
            ..Scenario::default()
        },
    ];
    for s in variants {
        common::run_checked(&s).unwrap_or_else(|e| panic!("{e}"));
    }
}

#[test]
fn replication_means_are_stable() {
    let grid = scenario_grid(&heterogeneous(), SweepAxis::R0, &[0.005, 0.05]).unwrap();
    let small = run_sweep(&grid, 40, Some(SweepAxis::R0), 7, false).unwrap();
    let large = run_sweep(&grid, 80, Some(SweepAxis::R0), 7, false).unwrap();
    for (a, b) in small.rows.iter().zip(&large.rows) {
        let band = b.sd.values().map(|sd| 3.0 * sd / 40f64.sqrt());
        for (k, ((ma, mb), limit)) in a.mean.values().iter().zip(b.mean.values()).zip(band).enumerate() {
            assert!(
                (ma - mb).abs() <= limit,
                "{}: {ma} vs {mb}, band {limit}",
                StepReport::COLUMNS[k]
            );
        }
    }
}
