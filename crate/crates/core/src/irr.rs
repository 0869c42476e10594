//! Internal rate of return of an outlay against a stream of returns.
//!
//! Solves `psi = sum_{s=1..n} Q_s / (1 + m)^s` for `m`. Bisection on a bracket
//! grown geometrically from `(-1 + eps, 1]` is the workhorse; one Newton step is
//! taken at the end and kept only if it lowers the residual.

/// Default relative tolerance on the present-value residual.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_ITERATIONS: usize = 200;

const LOWER: f64 = -1.0 + 1e-6;
const UPPER_BOUND: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct IrrProblem {
    pub psi: f64,
    pub cashflows: Vec<f64>,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl IrrProblem {
    pub fn new(psi: f64, cashflows: Vec<f64>) -> Self {
        Self {
            psi,
            cashflows,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }

    /// A constant series of `n` payments `q`.
    pub fn annuity(psi: f64, q: f64, n: usize) -> Self {
        Self::new(psi, vec![q; n])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IrrOutcome {
    Rate(f64),
    /// No rate in `(-1, inf)` equates the stream to the outlay.
    Undefined,
    /// The iteration budget ran out; `last` is the best bracket midpoint.
    NotConverged {
        last: f64,
    },
}

impl IrrOutcome {
    pub fn rate(self) -> Option<f64> {
        match self {
            IrrOutcome::Rate(m) => Some(m),
            _ => None,
        }
    }

    /// The rate, with anything else ranking below every finite rate.
    pub fn rank_value(self) -> f64 {
        self.rate().unwrap_or(f64::NEG_INFINITY)
    }
}

/// `sum_s Q_s / (1 + m)^s`, first payment discounted one period.
pub fn present_value(cashflows: &[f64], rate: f64) -> f64 {
    let d = 1.0 / (1.0 + rate);
    let mut factor = 1.0;
    let mut pv = 0.0;
    for q in cashflows {
        factor *= d;
        pv += q * factor;
    }
    pv
}

fn pv_derivative(cashflows: &[f64], rate: f64) -> f64 {
    let d = 1.0 / (1.0 + rate);
    let mut factor = d;
    let mut acc = 0.0;
    for (i, q) in cashflows.iter().enumerate() {
        factor *= d;
        acc -= (i as f64 + 1.0) * q * factor;
    }
    acc
}

/// Present value of a unit annuity of `n` payments at `rate`.
pub fn annuity_factor(rate: f64, n: usize) -> f64 {
    present_value(&vec![1.0; n], rate)
}

pub fn solve_irr(problem: &IrrProblem) -> IrrOutcome {
    let IrrProblem {
        psi,
        ref cashflows,
        tolerance,
        max_iterations,
    } = *problem;
    assert!(psi > 0.0 && psi.is_finite(), "outlay must be positive, got {psi}");
    assert!(!cashflows.is_empty(), "cash-flow series must be nonempty");
    assert!(tolerance > 0.0, "tolerance must be positive");

    let total: f64 = cashflows.iter().sum();
    if cashflows.iter().all(|&q| q >= 0.0) && total <= 0.0 {
        return IrrOutcome::Undefined;
    }

    let f = |m: f64| present_value(cashflows, m) - psi;
    let mut lo = LOWER;
    let mut f_lo = f(lo);
    let mut hi = 1.0;
    let mut f_hi = f(hi);
    while f_hi.signum() == f_lo.signum() && hi < UPPER_BOUND {
        lo = hi;
        f_lo = f_hi;
        hi = (hi * 4.0).min(UPPER_BOUND);
        f_hi = f(hi);
    }
    if f_lo.is_nan() || f_hi.is_nan() {
        return IrrOutcome::Undefined;
    }
    if f_lo == 0.0 {
        return IrrOutcome::Rate(lo);
    }
    if f_hi == 0.0 {
        return IrrOutcome::Rate(hi);
    }
    if f_hi.signum() == f_lo.signum() {
        return IrrOutcome::Undefined;
    }

    let target = tolerance * psi;
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..max_iterations {
        mid = 0.5 * (lo + hi);
        let fm = f(mid);
        let narrow = hi - lo <= 1e-13 * (1.0 + mid.abs());
        if fm == 0.0 || (fm.abs() <= target && narrow) {
            return IrrOutcome::Rate(polish(cashflows, psi, mid, lo, hi));
        }
        if fm.signum() == f_lo.signum() {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
        if narrow {
            // The bracket cannot shrink further in floating point.
            if fm.abs() <= target {
                return IrrOutcome::Rate(polish(cashflows, psi, mid, lo, hi));
            }
            break;
        }
    }
    if f(mid).abs() <= target {
        IrrOutcome::Rate(polish(cashflows, psi, mid, lo, hi))
    } else {
        IrrOutcome::NotConverged { last: mid }
    }
}

fn polish(cashflows: &[f64], psi: f64, m: f64, lo: f64, hi: f64) -> f64 {
    let fm = present_value(cashflows, m) - psi;
    let d = pv_derivative(cashflows, m);
    if d == 0.0 || !d.is_finite() {
        return m;
    }
    let next = m - fm / d;
    if next < lo || next > hi {
        return m;
    }
    let fn_ = present_value(cashflows, next) - psi;
    if fn_.abs() < fm.abs() {
        next
    } else {
        m
    }
}
