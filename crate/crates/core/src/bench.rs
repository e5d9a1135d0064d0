//! Timing sweeps over problem size on uniform SOS instances.

use std::io::{self, Write};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::instances::gen_uniform_sos;
use crate::optimizer::{solve, SolveConfig};

pub const BENCH_HEADER: &str = "kind,n,seed,wall_time_s,iterations,best_relative_error,converged,status";

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub seed: u64,
    pub wall_time_s: f64,
    pub iterations: usize,
    pub best_relative_error: f64,
    pub converged: bool,
    /// Solver error, if the run failed.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchAggregate {
    pub n: usize,
    pub runs: usize,
    pub converged: usize,
    pub mean_wall_time_s: f64,
    pub mean_iterations: f64,
    pub mean_best_relative_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub rows: Vec<BenchRow>,
    pub aggregates: Vec<BenchAggregate>,
    /// Least-squares slope of `ln(mean wall time)` against `ln(n)`.
    pub exponent: Option<f64>,
}

fn run_one(n: usize, seed: u64, config: &SolveConfig) -> BenchRow {
    let base = BenchRow {
        n,
        seed,
        wall_time_s: f64::NAN,
        iterations: 0,
        best_relative_error: f64::NAN,
        converged: false,
        error: None,
    };
    let target = match gen_uniform_sos::<f64>(n, seed) {
        Ok(t) => t,
        Err(e) => {
            return BenchRow {
                error: Some(e.to_string()),
                ..base
            }
        }
    };
    let config = SolveConfig {
        seed,
        ..config.clone()
    };
    match solve(&target, &config) {
        Ok(r) => BenchRow {
            wall_time_s: r.wall_time_s,
            iterations: r.best_iteration,
            best_relative_error: r.best_relative_error,
            converged: r.converged,
            ..base
        },
        Err(e) => BenchRow {
            error: Some(e.to_string()),
            ..base
        },
    }
}

/// Solves every `(n, seed)` grid point; rows come back in grid order.
///
/// `threads > 1` runs grid points concurrently, which skews wall times on a
/// loaded machine.
pub fn run_bench(n_list: &[usize], seeds: &[u64], config: &SolveConfig, threads: usize) -> BenchResult {
    let grid: Vec<(usize, u64)> = n_list
        .iter()
        .flat_map(|&n| seeds.iter().map(move |&s| (n, s)))
        .collect();
    let slots: Vec<Mutex<Option<BenchRow>>> = grid.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..threads.max(1) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(n, seed)) = grid.get(i) else { break };
                let row = run_one(n, seed, config);
                *slots[i].lock().expect("slot lock") = Some(row);
            });
        }
    });
    let rows: Vec<BenchRow> = slots
        .into_iter()
        .map(|s| s.into_inner().expect("slot lock").expect("every grid point ran"))
        .collect();
    let aggregates = aggregate(n_list, &rows);
    let exponent = scaling_exponent(&aggregates);
    BenchResult {
        rows,
        aggregates,
        exponent,
    }
}

fn aggregate(n_list: &[usize], rows: &[BenchRow]) -> Vec<BenchAggregate> {
    n_list
        .iter()
        .map(|&n| {
            let ok: Vec<&BenchRow> = rows.iter().filter(|r| r.n == n && r.error.is_none()).collect();
            let mean = |f: &dyn Fn(&BenchRow) -> f64| {
                if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64
                }
            };
            BenchAggregate {
                n,
                runs: rows.iter().filter(|r| r.n == n).count(),
                converged: ok.iter().filter(|r| r.converged).count(),
                mean_wall_time_s: mean(&|r| r.wall_time_s),
                mean_iterations: mean(&|r| r.iterations as f64),
                mean_best_relative_error: mean(&|r| r.best_relative_error),
            }
        })
        .collect()
}

/// Slope of the least-squares line through `(ln n, ln t)`.
pub fn fit_exponent(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(n, t)| *n > 0.0 && *t > 0.0 && t.is_finite())
        .map(|(n, t)| (n.ln(), t.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let len = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / len;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / len;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn scaling_exponent(aggs: &[BenchAggregate]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = aggs.iter().map(|a| (a.n as f64, a.mean_wall_time_s)).collect();
    fit_exponent(&pts)
}

/// One line per run, then one `mean` line per `n`.
pub fn write_bench_csv(out: &mut impl Write, result: &BenchResult) -> io::Result<()> {
    writeln!(out, "{BENCH_HEADER}")?;
    for r in &result.rows {
        writeln!(
            out,
            "run,{},{},{},{},{:e},{},{}",
            r.n,
            r.seed,
            r.wall_time_s,
            r.iterations,
            r.best_relative_error,
            r.converged,
            r.error.as_deref().map_or("ok".into(), |e| format!("\"error: {}\"", e.replace('"', "'"))),
        )?;
    }
    for a in &result.aggregates {
        writeln!(
            out,
            "mean,{},,{},{},{:e},{}/{},ok",
            a.n, a.mean_wall_time_s, a.mean_iterations, a.mean_best_relative_error, a.converged, a.runs
        )?;
    }
    Ok(())
}
