//! Repeated-split benchmark and the training-size sweep. Raw records hold
//! only deterministic fields; wall times go to a separate file so reruns
//! reproduce the records byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tesskern::data::{load_csv, train_test_split};
use tesskern::learner::Method;
use tesskern::{Dataset, SplitSpec};

use crate::commands::{method_config, select_and_fit, synthetic};
use crate::{BenchmarkArgs, CliResult, Failure, ScalingArgs};

/// Seed offset of the fixed test set in the scaling study.
const TEST_SEED_OFFSET: u64 = 1_000_003;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub dataset: String,
    pub m: usize,
    pub n: usize,
    pub method: String,
    pub trial: usize,
    pub seed: u64,
    pub c: Option<f64>,
    pub accuracy: Option<f64>,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub dataset: String,
    pub method: String,
    pub trial: usize,
    pub seconds: f64,
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-method summary row of the report.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodSummary {
    pub dataset: String,
    pub method: String,
    pub m: usize,
    pub n: usize,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub time_mean: f64,
    pub time_std: f64,
    pub completed: usize,
    pub failed: usize,
}

/// Statistics recomputed from raw records.
pub fn summarize(records: &[TrialRecord], timings: &[TimingRecord]) -> Vec<MethodSummary> {
    let mut keys: Vec<(String, String)> = Vec::new();
    for r in records {
        let key = (r.dataset.clone(), r.method.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(dataset, method)| {
            let rows: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| r.dataset == dataset && r.method == method)
                .collect();
            let acc: Vec<f64> = rows.iter().filter_map(|r| r.accuracy).map(|a| 100.0 * a).collect();
            let times: Vec<f64> = timings
                .iter()
                .filter(|t| t.dataset == dataset && t.method == method)
                .map(|t| t.seconds)
                .collect();
            let (accuracy_mean, accuracy_std) = mean_std(&acc);
            let (time_mean, time_std) = mean_std(&times);
            MethodSummary {
                m: rows[0].m,
                n: rows[0].n,
                dataset,
                method,
                accuracy_mean,
                accuracy_std,
                time_mean,
                time_std,
                completed: acc.len(),
                failed: rows.len() - acc.len(),
            }
        })
        .collect()
}

/// Text table with columns Method | Accuracy | Time | Data Features.
pub fn render_table(rows: &[MethodSummary]) -> String {
    let cells: Vec<[String; 4]> = rows
        .iter()
        .map(|r| {
            let mut method = r.method.clone();
            if r.failed > 0 {
                method += &format!(" ({} failed)", r.failed);
            }
            [
                method,
                format!("{:.2} ± {:.2}", r.accuracy_mean, r.accuracy_std),
                format!("{:.3} ± {:.3}", r.time_mean, r.time_std),
                format!("{} (m={}, n={})", r.dataset, r.m, r.n),
            ]
        })
        .collect();
    let header = ["Method", "Accuracy", "Time", "Data Features"];
    let mut width = header.map(|h| h.chars().count());
    for row in &cells {
        for (w, c) in width.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |row: &[String]| {
        let parts: Vec<String> = row
            .iter()
            .zip(width)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        parts.join(" | ").trim_end().to_string()
    };
    let mut out = String::new();
    let _ = writeln!(out, "{}", line(&header.map(String::from)));
    let _ = writeln!(
        out,
        "{}",
        width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-|-")
    );
    for row in &cells {
        let _ = writeln!(out, "{}", line(row));
    }
    out
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> CliResult {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn check_grid(grid: &[f64], folds: usize) -> CliResult {
    if grid.is_empty() {
        return Err(Failure::usage("empty C grid"));
    }
    if grid.iter().any(|&c| !(c > 0.0) || !c.is_finite()) {
        return Err(Failure::usage("C values must be positive"));
    }
    if folds < 2 {
        return Err(Failure::usage("need at least two folds"));
    }
    Ok(())
}

struct TrialOutcome {
    record: TrialRecord,
    seconds: f64,
}

#[allow(clippy::too_many_arguments)]
fn run_trial(
    name: &str,
    data: &Dataset,
    method: Method,
    trial: usize,
    args: &BenchmarkArgs,
) -> TrialOutcome {
    let seed = args.seed.wrapping_add(trial as u64);
    let mut record = TrialRecord {
        dataset: name.to_string(),
        m: data.len(),
        n: data.n_features(),
        method: method.name().to_string(),
        trial,
        seed,
        c: None,
        accuracy: None,
        status: "ok".into(),
    };
    let start = Instant::now();
    let spec = SplitSpec {
        train_fraction: args.train_fraction,
        seed,
        stratified: true,
    };
    let outcome = train_test_split(data, &spec).map_err(Failure::from).and_then(|(train, test)| {
        let base = method_config(method, &args.learner_args, 1.0, seed);
        let (model, summary, _) = select_and_fit(&train, &base, Some(&args.c_grid), args.folds, seed)?;
        let acc = model.accuracy(&test)?;
        Ok((summary.c, acc))
    });
    let seconds = start.elapsed().as_secs_f64();
    match outcome {
        Ok((c, acc)) => {
            record.c = Some(c);
            record.accuracy = Some(acc);
        }
        Err(f) => {
            warn!("{name} / {method} trial {trial} failed: {:#}", f.error);
            record.status = format!("failed: {}", f.error).replace(['\n', '\r'], " ");
        }
    }
    TrialOutcome { record, seconds }
}

pub fn benchmark(args: &BenchmarkArgs) -> CliResult {
    if args.trials == 0 {
        return Err(Failure::usage("trials must be positive"));
    }
    if args.learners.is_empty() {
        return Err(Failure::usage("no learners selected"));
    }
    if !(args.train_fraction > 0.0 && args.train_fraction < 1.0) {
        return Err(Failure::usage("train fraction must lie in (0, 1)"));
    }
    check_grid(&args.c_grid, args.folds)?;
    let mut datasets = Vec::new();
    for path in &args.data {
        let (data, mapping) = load_csv(path, &args.label_column)?;
        info!("{}: {} rows, {} features, labels {mapping}", path.display(), data.len(), data.n_features());
        datasets.push((dataset_name(path), data));
    }
    fs::create_dir_all(&args.out_dir)?;

    let jobs: Vec<(usize, Method, usize)> = (0..datasets.len())
        .flat_map(|d| {
            args.learners
                .iter()
                .flat_map(move |&m| (0..args.trials).map(move |t| (d, m, t)))
        })
        .collect();
    let outcomes: Vec<TrialOutcome> = jobs
        .par_iter()
        .map(|&(d, method, trial)| {
            let (name, data) = &datasets[d];
            run_trial(name, data, method, trial, args)
        })
        .collect();

    let records: Vec<TrialRecord> = outcomes.iter().map(|o| o.record.clone()).collect();
    let timings: Vec<TimingRecord> = outcomes
        .iter()
        .map(|o| TimingRecord {
            dataset: o.record.dataset.clone(),
            method: o.record.method.clone(),
            trial: o.record.trial,
            seconds: o.seconds,
        })
        .collect();
    write_rows(&args.out_dir.join("records.csv"), &records)?;
    write_rows(&args.out_dir.join("timings.csv"), &timings)?;
    let table = render_table(&summarize(&records, &timings));
    fs::write(args.out_dir.join("table.txt"), &table)?;
    print!("{table}");
    let failed = records.iter().filter(|r| r.accuracy.is_none()).count();
    if failed > 0 {
        eprintln!("{failed} of {} trials failed; see records.csv", records.len());
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRecord {
    pub method: String,
    pub m: usize,
    pub c: Option<f64>,
    pub tsa: Option<f64>,
    pub residual: Option<f64>,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingTiming {
    pub method: String,
    pub m: usize,
    pub seconds: f64,
}

pub fn scaling_study(args: &ScalingArgs) -> CliResult {
    if args.sizes.is_empty() || args.sizes.contains(&0) {
        return Err(Failure::usage("sizes must be positive"));
    }
    if args.test_size == 0 {
        return Err(Failure::usage("test size must be positive"));
    }
    if args.c.is_none() {
        check_grid(&args.c_grid, args.folds)?;
    }
    fs::create_dir_all(&args.out_dir)?;
    let test = synthetic(
        args.kind,
        args.test_size,
        args.noise,
        args.turns,
        args.seed.wrapping_add(TEST_SEED_OFFSET),
    )?;
    let mut sizes = args.sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();

    let jobs: Vec<(Method, usize)> = args
        .learners
        .iter()
        .flat_map(|&l| sizes.iter().map(move |&m| (l, m)))
        .collect();
    let rows: Vec<(ScalingRecord, ScalingTiming)> = jobs
        .par_iter()
        .map(|&(method, m)| {
            let start = Instant::now();
            let outcome = synthetic(args.kind, m, args.noise, args.turns, args.seed)
                .map_err(Failure::from)
                .and_then(|train| {
                    let base = method_config(method, &args.learner_args, args.c.unwrap_or(1.0), args.seed);
                    let grid = if args.c.is_some() { None } else { Some(args.c_grid.as_slice()) };
                    let (model, summary, _) = select_and_fit(&train, &base, grid, args.folds, args.seed)?;
                    Ok((summary.c, model.accuracy(&test)?))
                });
            let seconds = start.elapsed().as_secs_f64();
            let record = match outcome {
                Ok((c, tsa)) => ScalingRecord {
                    method: method.name().into(),
                    m,
                    c: Some(c),
                    tsa: Some(tsa),
                    residual: Some(1.0 - tsa),
                    status: "ok".into(),
                },
                Err(f) => {
                    warn!("{method} m={m} failed: {:#}", f.error);
                    ScalingRecord {
                        method: method.name().into(),
                        m,
                        c: None,
                        tsa: None,
                        residual: None,
                        status: format!("failed: {}", f.error).replace(['\n', '\r'], " "),
                    }
                }
            };
            let timing = ScalingTiming {
                method: method.name().into(),
                m,
                seconds,
            };
            (record, timing)
        })
        .collect();
    let (records, timings): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    write_rows(&args.out_dir.join("records.csv"), &records)?;
    write_rows(&args.out_dir.join("timings.csv"), &timings)?;
    println!("method,m,residual,seconds");
    for (r, t) in records.iter().zip(&timings) {
        match r.residual {
            Some(e) => println!("{},{},{e:.6},{:.3}", r.method, r.m, t.seconds),
            None => println!("{},{},failed,{:.3}", r.method, r.m, t.seconds),
        }
    }
    Ok(())
}
