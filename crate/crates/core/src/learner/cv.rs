//! Choosing `C` by stratified k-fold cross-validation.

use super::methods::{fit, MethodConfig};
use crate::data::{stratified_folds, Dataset};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CvResult {
    pub best_c: f64,
    pub c_grid: Vec<f64>,
    /// Mean validation accuracy per grid value over the usable folds
    /// (`NaN` when no fold was usable).
    pub mean_scores: Vec<f64>,
    /// `fold_scores[c][f]`; `None` marks a fold whose training or validation
    /// part holds a single class.
    pub fold_scores: Vec<Vec<Option<f64>>>,
    pub folds: Vec<usize>,
}

impl CvResult {
    pub fn flagged_folds(&self) -> Vec<usize> {
        let Some(first) = self.fold_scores.first() else {
            return Vec::new();
        };
        (0..first.len()).filter(|&f| first[f].is_none()).collect()
    }
}

/// Highest mean accuracy wins; ties go to the smaller `C`.
pub fn cross_validate(dataset: &Dataset, c_grid: &[f64], folds: usize, config: &MethodConfig, seed: u64) -> Result<CvResult> {
    if c_grid.is_empty() {
        return Err(Error::InvalidParameter("empty C grid".into()));
    }
    if let Some(c) = c_grid.iter().find(|&&c| !(c > 0.0) || !c.is_finite()) {
        return Err(Error::InvalidParameter(format!("C must be positive, got {c}")));
    }
    if dataset.len() < folds {
        return Err(Error::InvalidParameter(format!(
            "{} points cannot fill {folds} folds",
            dataset.len()
        )));
    }
    let assignment = stratified_folds(dataset.labels(), folds, seed)?;

    let mut splits = Vec::with_capacity(folds);
    for f in 0..folds {
        let train_idx: Vec<usize> = (0..dataset.len()).filter(|&i| assignment[i] != f).collect();
        let val_idx: Vec<usize> = (0..dataset.len()).filter(|&i| assignment[i] == f).collect();
        let train = dataset.subset(&train_idx)?;
        let val = dataset.subset(&val_idx)?;
        let usable = train.has_both_classes() && val.has_both_classes();
        if !usable {
            log::warn!("fold {f} holds a single class and is excluded");
        }
        splits.push((train, val, usable));
    }

    let mut grid: Vec<f64> = c_grid.to_vec();
    grid.sort_by(|a, b| a.total_cmp(b));
    let mut fold_scores = Vec::with_capacity(grid.len());
    let mut mean_scores = Vec::with_capacity(grid.len());
    for &c in &grid {
        let cfg = config.with_c(c);
        let mut scores = Vec::with_capacity(folds);
        for (train, val, usable) in &splits {
            if !usable {
                scores.push(None);
                continue;
            }
            let (model, _) = fit(train, &cfg)?;
            scores.push(Some(model.accuracy(val)?));
        }
        let used: Vec<f64> = scores.iter().flatten().copied().collect();
        mean_scores.push(if used.is_empty() {
            f64::NAN
        } else {
            used.iter().sum::<f64>() / used.len() as f64
        });
        fold_scores.push(scores);
    }

    let mut best = None;
    for (i, &s) in mean_scores.iter().enumerate() {
        if s.is_nan() {
            continue;
        }
        match best {
            Some(b) if mean_scores[b] >= s => {}
            _ => best = Some(i),
        }
    }
    let best = best.ok_or_else(|| Error::InvalidParameter("no usable cross-validation fold".into()))?;
    Ok(CvResult {
        best_c: grid[best],
        c_grid: grid,
        mean_scores,
        fold_scores,
        folds: assignment,
    })
}
