use std::fs;
use std::path::Path;
use std::time::Instant;

use log::info;
use serde_json::json;
use tesskern::data::persist::{load_model, save_model};
use tesskern::data::synth::{generate_circle, generate_spiral};
use tesskern::data::{load_csv, write_csv};
use tesskern::learner::{cross_validate, fit, Method, MethodConfig};
use tesskern::{Dataset, Error, SvmModel};

use crate::{
    CliResult, EvaluateArgs, Failure, GenerateArgs, LearnerArgs, PredictArgs, Shape, TrainArgs,
};

pub fn method_config(method: Method, args: &LearnerArgs, c: f64, seed: u64) -> MethodConfig {
    let mut cfg = MethodConfig::new(method);
    cfg.degree = args.degree;
    cfg.c = c;
    cfg.trace_bound = args.trace_bound;
    cfg.basis_size = args.basis_size;
    cfg.seed = seed;
    cfg.saddle_max_iter = args.max_iter;
    cfg.saddle_average_last = args.average_last;
    cfg.step_t0 = args.step;
    cfg
}

pub fn synthetic(kind: Shape, m: usize, noise: f64, turns: f64, seed: u64) -> Result<Dataset, Error> {
    match kind {
        Shape::Circle => generate_circle(m, noise, seed),
        Shape::Spiral => generate_spiral(m, noise, turns, seed),
    }
}

pub fn generate(args: &GenerateArgs) -> CliResult {
    if args.m == 0 {
        return Err(Failure::usage("number of points must be positive"));
    }
    let ds = synthetic(args.kind, args.m, args.noise, args.turns, args.seed)?;
    write_csv(&ds, &args.out)?;
    println!("wrote {} points to {}", ds.len(), args.out.display());
    Ok(())
}

/// Chooses C (by cross-validation when a grid is given) and fits a model.
pub fn select_and_fit(
    train: &Dataset,
    base: &MethodConfig,
    c_grid: Option<&[f64]>,
    folds: usize,
    seed: u64,
) -> CliResult<(SvmModel, tesskern::learner::FitSummary, Option<tesskern::learner::CvResult>)> {
    let (c, cv) = match c_grid {
        Some(grid) => {
            let cv = cross_validate(train, grid, folds, base, seed)?;
            info!("cross-validation picked C = {} (scores {:?})", cv.best_c, cv.mean_scores);
            (cv.best_c, Some(cv))
        }
        None => (base.c, None),
    };
    let (model, summary) = fit(train, &base.with_c(c))?;
    Ok((model, summary, cv))
}

pub fn train(args: &TrainArgs) -> CliResult {
    let (data, mapping) = load_csv(&args.data, &args.label_column)?;
    info!("loaded {} rows, {} features, labels {mapping}", data.len(), data.n_features());
    if args.c_grid.as_ref().is_some_and(|g| g.is_empty()) {
        return Err(Failure::usage("empty C grid"));
    }
    let base = method_config(args.learner, &args.learner_args, args.c.unwrap_or(1.0), args.seed);
    let start = Instant::now();
    let (model, summary, cv) =
        select_and_fit(&data, &base, args.c_grid.as_deref(), args.folds, args.seed)?;
    let seconds = start.elapsed().as_secs_f64();
    save_model(&model, &args.out)?;

    println!("learner     {}", args.learner);
    println!("C           {}", summary.c);
    println!("objective   {:.6}", summary.objective);
    if let Some(phi) = summary.saddle_value {
        println!("saddle      {phi:.6}");
    }
    println!("iterations  {}", summary.iterations);
    println!("converged   {}", summary.converged);
    println!("supports    {}", summary.support_count);
    println!("time        {seconds:.3}s");

    if let Some(path) = &args.summary {
        let doc = json!({
            "learner": args.learner.name(),
            "c": summary.c,
            "objective": summary.objective,
            "saddle_value": summary.saddle_value,
            "iterations": summary.iterations,
            "converged": summary.converged,
            "support_count": summary.support_count,
            "mkl_weights": summary.mkl_weights,
            "cv_mean_scores": cv.as_ref().map(|c| &c.mean_scores),
            "cv_grid": cv.as_ref().map(|c| &c.c_grid),
            "wall_time_seconds": seconds,
        });
        fs::write(path, serde_json::to_string_pretty(&doc)?)?;
    }
    Ok(())
}

fn load_compatible(model_path: &Path, data_path: &Path, label: &tesskern::LabelColumn) -> CliResult<(SvmModel, Dataset)> {
    let model = load_model(model_path)?;
    let (data, _) = load_csv(data_path, label)?;
    if data.n_features() != model.n_features() {
        return Err(Error::DimensionMismatch {
            expected: model.n_features(),
            got: data.n_features(),
        }
        .into());
    }
    Ok((model, data))
}

pub fn predict(args: &PredictArgs) -> CliResult {
    let (model, data) = load_compatible(&args.model, &args.data, &args.label_column)?;
    let decisions = model.decision_values(&data)?;
    let mut w = csv::Writer::from_path(&args.out)?;
    w.write_record(["decision", "label"])?;
    for f in &decisions {
        let label = tesskern::model::sign(*f);
        w.write_record([format!("{f:.12e}"), format!("{label}")])?;
    }
    w.flush()?;
    println!("wrote {} predictions to {}", decisions.len(), args.out.display());
    Ok(())
}

pub fn evaluate(args: &EvaluateArgs) -> CliResult {
    let (model, data) = load_compatible(&args.model, &args.data, &args.label_column)?;
    let tsa = model.accuracy(&data)?;
    println!("TSA {tsa:.6} ({} points)", data.len());
    Ok(())
}
