//! Sweeps over a scenario grid, Monte Carlo averaging and table output.
//!
//! Replication `k` of grid point `i` runs with seed
//! `replication_seed(grid[i].seed, k)`; grids built by
//! [`crate::config::scenario_grid`] already carry `grid_seed(base, i)`.
//!
//! Two files are written per result: a rounded table, and a
//! full-precision companion (`*.full.csv`) holding means and standard
//! deviations that [`read_full_csv`] parses back exactly.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::config::{Scenario, SweepAxis};
use crate::engine::{ordered_sum, EconomyState, EngineError, LedgerEntry, StepReport};
use crate::seeds::replication_seed;

/// Monte Carlo replications used when none are requested.
pub const HETEROGENEOUS_REPLICATIONS: usize = 200;

pub fn default_replications(scenario: &Scenario) -> usize {
    if scenario.homogeneous {
        1
    } else {
        HETEROGENEOUS_REPLICATIONS
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("run failed at grid point {index}, replication {replication}, seed {seed}: {source}")]
    Run {
        index: usize,
        replication: usize,
        seed: u64,
        source: EngineError,
    },
    #[error("replications must be at least 1")]
    NoReplications,
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: malformed results file: {detail}")]
    Format { path: PathBuf, detail: String },
}

/// One grid point: replication mean and standard deviation of every field.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub key: f64,
    pub seed: u64,
    pub mean: StepReport,
    pub sd: StepReport,
}

/// Per-agent ledger of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditLog {
    pub index: usize,
    pub replication: usize,
    pub entries: Vec<LedgerEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: Option<SweepAxis>,
    pub base_seed: u64,
    pub replications: usize,
    pub rows: Vec<SweepRow>,
    /// Filled only when auditing was requested.
    pub audit: Vec<AuditLog>,
}

/// Runs one scenario with its own seed; returns the last step's report.
pub fn run_one(scenario: &Scenario, audit: bool) -> Result<(StepReport, Option<Vec<LedgerEntry>>), EngineError> {
    let mut state = EconomyState::new(scenario);
    if audit {
        state.enable_audit();
    }
    let reports = state.run()?;
    Ok((reports.last().cloned().unwrap_or_default(), state.audit.take()))
}

/// Field-wise mean and sample standard deviation.
pub fn summarize(reports: &[StepReport]) -> (StepReport, StepReport) {
    let n = reports.len();
    let cols: Vec<[f64; 20]> = reports.iter().map(StepReport::values).collect();
    let mut mean = [0.0; 20];
    let mut sd = [0.0; 20];
    for k in 0..20 {
        let m = ordered_sum(cols.iter().map(|c| c[k])) / n as f64;
        mean[k] = m;
        if n > 1 {
            let ss = ordered_sum(cols.iter().map(|c| (c[k] - m) * (c[k] - m)));
            sd[k] = (ss / (n - 1) as f64).sqrt();
        }
    }
    (StepReport::from_values(&mean), StepReport::from_values(&sd))
}

/// Runs every scenario `replications` times in parallel and folds the reports
/// in grid order.
pub fn run_sweep(
    grid: &[Scenario],
    replications: usize,
    axis: Option<SweepAxis>,
    base_seed: u64,
    audit: bool,
) -> Result<SweepResult, HarnessError> {
    if replications == 0 {
        return Err(HarnessError::NoReplications);
    }
    let tasks: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|i| (0..replications).map(move |k| (i, k)))
        .collect();
    let outcomes: Vec<_> = tasks
        .par_iter()
        .map(|&(i, k)| {
            let mut s = grid[i].clone();
            s.seed = replication_seed(grid[i].seed, k as u64);
            let seed = s.seed;
            run_one(&s, audit).map_err(|source| HarnessError::Run {
                index: i,
                replication: k,
                seed,
                source,
            })
        })
        .collect();

    let mut rows = Vec::with_capacity(grid.len());
    let mut logs = Vec::new();
    let mut iter = outcomes.into_iter();
    for (i, scenario) in grid.iter().enumerate() {
        let mut reports = Vec::with_capacity(replications);
        for k in 0..replications {
            let (report, ledger) = iter.next().expect("one outcome per task")?;
            reports.push(report);
            if let Some(entries) = ledger {
                logs.push(AuditLog {
                    index: i,
                    replication: k,
                    entries,
                });
            }
        }
        let (mean, sd) = summarize(&reports);
        rows.push(SweepRow {
            key: axis.map_or(scenario.r0, |a| a.value_of(scenario)),
            seed: scenario.seed,
            mean,
            sd,
        });
    }
    Ok(SweepResult {
        axis,
        base_seed,
        replications,
        rows,
        audit: logs,
    })
}

/// Which unemployment rate fills the `u%` column of the rounded table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UDenominator {
    /// Unemployed over all persons.
    #[default]
    All,
    /// Unemployed workers over persons who are not entrepreneurs.
    Workers,
}

impl FromStr for UDenominator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(UDenominator::All),
            "workers" => Ok(UDenominator::Workers),
            other => Err(format!("expected `all` or `workers`, got `{other}`")),
        }
    }
}

impl fmt::Display for UDenominator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UDenominator::All => "all",
            UDenominator::Workers => "workers",
        })
    }
}

/// Rounded table: header plus one row of means per grid point. Rates carry
/// three decimals, everything else two. Sweeps over an axis other than `r0`
/// lead with a column holding the swept value.
pub fn write_table<W: Write>(result: &SweepResult, u: UDenominator, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let lead = result.axis.filter(|a| *a != SweepAxis::R0);
    let mut header: Vec<&str> = lead.map(|a| a.name()).into_iter().collect();
    let mut cols: Vec<&str> = StepReport::COLUMNS.to_vec();
    if u == UDenominator::Workers {
        cols.swap(9, 19);
    }
    header.extend(cols);
    w.write_record(&header)?;
    for row in &result.rows {
        let mut v = row.mean.values();
        if u == UDenominator::Workers {
            v.swap(9, 19);
        }
        let mut rec: Vec<String> = lead.map(|_| format!("{:.2}", row.key)).into_iter().collect();
        rec.extend(
            v.iter()
                .enumerate()
                .map(|(k, x)| if k < 2 { format!("{x:.3}") } else { format!("{x:.2}") }),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn metadata_line(result: &SweepResult) -> String {
    format!(
        "# axis={},base_seed={},replications={}\n",
        result.axis.map_or("none", |a| a.name()),
        result.base_seed,
        result.replications
    )
}

/// Lossless companion: metadata comment, then key, seed, means and sds.
pub fn write_full<W: Write>(result: &SweepResult, mut out: W) -> csv::Result<()> {
    out.write_all(metadata_line(result).as_bytes())?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["key".to_string(), "seed".to_string()];
    header.extend(StepReport::COLUMNS.iter().map(|c| format!("mean_{c}")));
    header.extend(StepReport::COLUMNS.iter().map(|c| format!("sd_{c}")));
    w.write_record(&header)?;
    for row in &result.rows {
        let mut rec = vec![row.key.to_string(), row.seed.to_string()];
        rec.extend(row.mean.values().iter().map(f64::to_string));
        rec.extend(row.sd.values().iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Companion path: `table.csv` becomes `table.full.csv`.
pub fn full_path(table: &Path) -> PathBuf {
    let stem = table
        .file_stem()
        .map_or_else(|| "results".into(), |s| s.to_string_lossy().into_owned());
    table.with_file_name(format!("{stem}.full.csv"))
}

/// Writes the rounded table to `destination` and the companion next to it.
pub fn emit_csv(result: &SweepResult, destination: &Path, u: UDenominator) -> Result<(), HarnessError> {
    let create = |path: &Path| {
        File::create(path)
            .map(BufWriter::new)
            .map_err(|source| HarnessError::Io {
                path: path.to_path_buf(),
                source,
            })
    };
    let csv_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| HarnessError::Csv { path, source }
    };
    write_table(result, u, create(destination)?).map_err(csv_err(destination))?;
    let full = full_path(destination);
    write_full(result, create(&full)?).map_err(csv_err(&full))?;
    Ok(())
}

fn parse_full<R: Read>(input: R, path: &Path) -> Result<SweepResult, HarnessError> {
    let bad = |detail: String| HarnessError::Format {
        path: path.to_path_buf(),
        detail,
    };
    let mut reader = BufReader::new(input);
    let mut first = String::new();
    reader.read_line(&mut first).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let meta = first
        .trim()
        .strip_prefix("# ")
        .ok_or_else(|| bad("missing metadata line".into()))?;
    let mut axis = None;
    let mut base_seed = None;
    let mut replications = None;
    for kv in meta.split(',') {
        let (k, v) = kv.split_once('=').ok_or_else(|| bad(format!("bad metadata `{kv}`")))?;
        match k {
            "axis" if v == "none" => {}
            "axis" => axis = Some(v.parse::<SweepAxis>().map_err(|e| bad(e.to_string()))?),
            "base_seed" => base_seed = Some(v.parse::<u64>().map_err(|e| bad(e.to_string()))?),
            "replications" => replications = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
            other => return Err(bad(format!("unknown metadata key `{other}`"))),
        }
    }
    let mut rows = Vec::new();
    let mut rdr = csv::Reader::from_reader(reader);
    for rec in rdr.records() {
        let rec = rec.map_err(|source| HarnessError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        if rec.len() != 42 {
            return Err(bad(format!("expected 42 fields, got {}", rec.len())));
        }
        let num = |i: usize| rec[i].parse::<f64>().map_err(|e| bad(format!("field {i}: {e}")));
        let mut mean = [0.0; 20];
        let mut sd = [0.0; 20];
        for k in 0..20 {
            mean[k] = num(2 + k)?;
            sd[k] = num(22 + k)?;
        }
        rows.push(SweepRow {
            key: num(0)?,
            seed: rec[1].parse().map_err(|e| bad(format!("seed: {e}")))?,
            mean: StepReport::from_values(&mean),
            sd: StepReport::from_values(&sd),
        });
    }
    Ok(SweepResult {
        axis,
        base_seed: base_seed.ok_or_else(|| bad("no base_seed".into()))?,
        replications: replications.ok_or_else(|| bad("no replications".into()))?,
        rows,
        audit: Vec::new(),
    })
}

/// Parses a companion file back into a result (without audit logs).
pub fn read_full_csv(path: &Path) -> Result<SweepResult, HarnessError> {
    let f = File::open(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_full(f, path)
}

/// Parses companion text held in memory.
pub fn parse_full_str(text: &str) -> Result<SweepResult, HarnessError> {
    parse_full(text.as_bytes(), Path::new("<memory>"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{scenario_grid, stepped_range};

    fn table3() -> SweepResult {
        let base = Scenario::default();
        let grid = scenario_grid(&base, SweepAxis::R0, &stepped_range(0.005, 0.1, 0.005).unwrap()).unwrap();
        run_sweep(&grid, 1, Some(SweepAxis::R0), base.seed, false).unwrap()
    }

    #[test]
    fn table3_shape() {
        let res = table3();
        assert_eq!(res.rows.len(), 20);
        let mut buf = Vec::new();
        write_table(&res, UDenominator::All, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 21);
        assert!(text.starts_with("r0,L2,I_w,Y_w,C_w,S_w,M2,B,N,u_pct"));
    }

    #[test]
    fn one_row_two_lines() {
        let s = Scenario::default();
        let res = run_sweep(std::slice::from_ref(&s), 1, None, s.seed, false).unwrap();
        let mut buf = Vec::new();
        write_table(&res, UDenominator::Workers, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().next().unwrap().contains("u_workers_pct,I,"));
    }

    #[test]
    fn repeated_sweeps_identical() {
        assert_eq!(table3(), table3());
    }

    #[test]
    fn full_file_round_trips() {
        let res = table3();
        let mut buf = Vec::new();
        write_full(&res, &mut buf).unwrap();
        let back = parse_full_str(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, res);
    }

    #[test]
    fn emit_writes_both_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t3.csv");
        let res = table3();
        emit_csv(&res, &path, UDenominator::All).unwrap();
        assert!(path.exists());
        assert_eq!(read_full_csv(&full_path(&path)).unwrap(), res);
    }

    #[test]
    fn unwritable_destination_names_path() {
        let res = table3();
        let err = emit_csv(&res, Path::new("/nonexistent-dir/x.csv"), UDenominator::All).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.csv"));
    }

    #[test]
    fn zero_replications_rejected() {
        assert!(matches!(
            run_sweep(&[Scenario::default()], 0, None, 0, false),
            Err(HarnessError::NoReplications)
        ));
    }

    #[test]
    fn summary_statistics() {
        let a = StepReport {
            y: 1.0,
            ..Default::default()
        };
        let b = StepReport {
            y: 3.0,
            ..Default::default()
        };
        let (m, s) = summarize(&[a, b]);
        assert_eq!(m.y, 2.0);
        assert!((s.y - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.n, 0.0);
    }

    #[test]
    fn default_replication_counts() {
        assert_eq!(default_replications(&Scenario::default()), 1);
        let h = Scenario {
            homogeneous: false,
            ..Scenario::default()
        };
        assert_eq!(default_replications(&h), 200);
    }
}
