//! Saddle-point kernel learning over `{P >= 0, trace(P) = c}`.
//!
//! For a fixed dual vector the inner minimization over kernels is linear in
//! `P`, so its value is `sum(a) - (c/2) lambda_max(M(a))` with minimizer
//! `c v v^T` (`v` the top eigenvector of `M(a)`). The outer concave
//! maximization is solved by projected supergradient ascent.

use nalgebra::{DMatrix, DVector};

use super::eig::top_eig;
use super::moments::{assemble_m, precompute_moments, MomentTensorCache};
use crate::basis::MonomialBasis;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernel::{BlockPMatrix, SignedGram, TessellatedKernel};
use crate::qp::{project_box_hyperplane, solve_svm_dual_from, DualSolution, QpConfig};
use crate::region::DomainBox;

/// Supergradient step sizes `t_k = t0 / sqrt(k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepSchedule {
    /// Fixed `t0`. `None` starts from `1 / (c * lambda_max(K_I))`, where
    /// `K_I` is the Gram matrix of `P = I` (it bounds the curvature of every
    /// rank-one kernel), and scales it by the pilot multiplier that reaches
    /// the best value within `pilot_iters` iterations.
    pub t0: Option<f64>,
    pub pilot_multipliers: Vec<f64>,
    pub pilot_iters: usize,
}

impl Default for StepSchedule {
    fn default() -> Self {
        StepSchedule {
            t0: None,
            pilot_multipliers: vec![1.0, 4.0, 16.0, 64.0, 256.0, 1024.0],
            pilot_iters: 60,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnerConfig {
    /// Trace bound `c`; `None` means `2 q_half` (so `P = I` is feasible).
    pub trace_bound: Option<f64>,
    pub degree: u32,
    /// SVM box bound `C`.
    pub c: f64,
    pub max_outer_iter: usize,
    pub step: StepSchedule,
    /// Stop once the best value improved by less than
    /// `tol * (1 + |phi_best|)` over `patience` iterations.
    pub tol: f64,
    pub patience: usize,
    /// Average the rank-one minimizers of the last `average_last` improving
    /// iterates.
    pub average_last: usize,
    pub rng_seed: u64,
    pub qp: QpConfig,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            trace_bound: None,
            degree: 1,
            c: 1.0,
            max_outer_iter: 2000,
            step: StepSchedule::default(),
            tol: 1e-6,
            patience: 200,
            average_last: 1,
            rng_seed: 0,
            qp: QpConfig::default(),
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(c) = self.trace_bound {
            if !(c > 0.0) {
                return Err(Error::InvalidParameter(format!("trace bound must be positive, got {c}")));
            }
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.c > 0.0) {
            return Err(Error::InvalidParameter(format!("C must be positive, got {}", self.c)));
        }
        if self.max_outer_iter == 0 || self.average_last == 0 {
            return Err(Error::InvalidParameter(
                "max_outer_iter and average_last must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn trace_bound_for(&self, q_half: usize) -> f64 {
        self.trace_bound.unwrap_or(2.0 * q_half as f64)
    }
}

/// Optimizer state of the supergradient loop.
#[derive(Clone, Debug)]
pub struct SaddleState {
    pub alpha: Vec<f64>,
    pub best_alpha: Vec<f64>,
    pub best_value: f64,
    pub top_eigvec: DVector<f64>,
    pub iteration: usize,
}

#[derive(Clone, Debug)]
pub struct SaddleOutcome {
    pub kernel: TessellatedKernel,
    /// SVM dual re-solved on the learned kernel.
    pub dual: DualSolution,
    /// Best value `phi_best` after each iteration (non-decreasing).
    pub phi_trace: Vec<f64>,
    pub state: SaddleState,
    pub converged: bool,
    pub trace_bound: f64,
    /// Initial step size actually used.
    pub t0: f64,
}

/// `phi(a) = sum(a) - (c/2) lambda_max(M(a))` with the top eigenvector.
pub fn saddle_value(alpha: &[f64], y: &[f64], cache: &MomentTensorCache, trace_bound: f64) -> Result<(f64, DVector<f64>)> {
    let m = assemble_m(alpha, y, cache)?;
    let (lambda, v) = top_eig(&m)?;
    Ok((alpha.iter().sum::<f64>() - 0.5 * trace_bound * lambda, v))
}

/// `c v v^T` as a block matrix.
pub fn rank_one_p(v: &DVector<f64>, trace_bound: f64) -> Result<BlockPMatrix> {
    let full: DMatrix<f64> = v * v.transpose() * trace_bound;
    BlockPMatrix::from_full(&full)
}

fn power_lambda_max(k: &DMatrix<f64>) -> f64 {
    let n = k.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut x = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..200 {
        let y = k * &x;
        let norm = y.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = x.dot(&y);
        x = y / norm;
        if (next - lambda).abs() <= 1e-10 * next.abs() {
            lambda = next;
            break;
        }
        lambda = next;
    }
    // the Rayleigh quotient underestimates; the row-sum bound caps it
    let row_bound = (0..n).map(|i| k.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    (lambda * 1.01).min(row_bound).max(lambda)
}

/// Learns a tessellated kernel on an already scaled training set (all
/// points inside the unit box).
pub fn learn_saddle(train: &Dataset, config: &LearnerConfig) -> Result<SaddleOutcome> {
    config.validate()?;
    train.require_both_classes()?;
    if train.len() < 2 {
        return Err(Error::InvalidParameter("need at least two training points".into()));
    }
    let basis = MonomialBasis::enumerate(train.n_features(), config.degree);
    let domain = DomainBox::unit(train.n_features());
    let cache = precompute_moments(&train.rows(), &basis, &domain)?;
    learn_saddle_cached(&cache, train.labels(), config)
}

/// As [`learn_saddle`] with a precomputed moment cache.
pub fn learn_saddle_cached(cache: &MomentTensorCache, y: &[f64], config: &LearnerConfig) -> Result<SaddleOutcome> {
    config.validate()?;
    crate::qp::check_labels(y)?;
    if y.len() != cache.len() {
        return Err(Error::DimensionMismatch {
            expected: cache.len(),
            got: y.len(),
        });
    }
    if !(y.iter().any(|&v| v > 0.0) && y.iter().any(|&v| v < 0.0)) {
        return Err(Error::SingleClass(y[0]));
    }
    let q = cache.q_half();
    let c = config.trace_bound_for(q);
    let box_c = config.c;

    let t0 = match config.step.t0 {
        Some(t) => t,
        None => {
            let identity = TessellatedKernel::from_p(
                cache.basis().clone(),
                cache.domain().clone(),
                BlockPMatrix::identity(q),
            )?;
            let lmax = power_lambda_max(&cache.gram(&identity)?);
            let base = if lmax > 0.0 { 1.0 / (c * lmax) } else { 1.0 };
            let mut best = (f64::NEG_INFINITY, base);
            for &mult in &config.step.pilot_multipliers {
                let pilot = Ascent {
                    cache,
                    y,
                    trace_bound: c,
                    box_c,
                    t0: base * mult,
                };
                let run = pilot.run(config.step.pilot_iters, usize::MAX, config.tol, 1)?;
                if run.state.best_value > best.0 {
                    best = (run.state.best_value, base * mult);
                }
            }
            best.1
        }
    };

    let ascent = Ascent {
        cache,
        y,
        trace_bound: c,
        box_c,
        t0,
    };
    let AscentRun {
        state,
        candidates,
        phi_trace,
        converged,
    } = ascent.run(config.max_outer_iter, config.patience, config.tol, config.average_last)?;

    // learned kernel: (averaged) rank-one minimizer at the best iterate
    let mut p_full = DMatrix::zeros(2 * q, 2 * q);
    for v in &candidates {
        p_full += v * v.transpose();
    }
    p_full *= c / candidates.len().max(1) as f64;
    crate::linalg::symmetrize(&mut p_full);
    let kernel = TessellatedKernel::from_p(
        cache.basis().clone(),
        cache.domain().clone(),
        BlockPMatrix::from_full(&p_full)?,
    )?;

    let gram = SignedGram::unsigned(cache.gram(&kernel)?);
    let qp = QpConfig {
        c: box_c,
        ..config.qp.clone()
    };
    let dual = solve_svm_dual_from(&gram, y, &qp, Some(&state.best_alpha))?;

    Ok(SaddleOutcome {
        kernel,
        dual,
        phi_trace,
        state,
        converged,
        trace_bound: c,
        t0,
    })
}

struct Ascent<'a> {
    cache: &'a MomentTensorCache,
    y: &'a [f64],
    trace_bound: f64,
    box_c: f64,
    t0: f64,
}

struct AscentRun {
    state: SaddleState,
    /// Top eigenvectors of the last improving iterates.
    candidates: Vec<DVector<f64>>,
    phi_trace: Vec<f64>,
    converged: bool,
}

impl Ascent<'_> {
    fn run(&self, max_iter: usize, patience: usize, tol: f64, keep: usize) -> Result<AscentRun> {
        let (cache, y, c) = (self.cache, self.y, self.trace_bound);
        let m = y.len();
        let mut alpha = vec![0.0; m];
        let mut state = SaddleState {
            alpha: alpha.clone(),
            best_alpha: alpha.clone(),
            best_value: f64::NEG_INFINITY,
            top_eigvec: DVector::zeros(2 * cache.q_half()),
            iteration: 0,
        };
        let mut candidates: Vec<DVector<f64>> = Vec::new();
        let mut phi_trace = Vec::with_capacity(max_iter.min(1 << 16));
        let mut converged = false;

        for k in 1..=max_iter {
            let (phi, v) = saddle_value(&alpha, y, cache, c)?;
            state.iteration = k;
            if phi > state.best_value {
                state.best_value = phi;
                state.best_alpha = alpha.clone();
                state.top_eigvec = v.clone();
                candidates.push(v.clone());
                if candidates.len() > keep {
                    candidates.remove(0);
                }
            }
            phi_trace.push(state.best_value);
            if k > patience {
                let before = phi_trace[k - 1 - patience];
                if state.best_value - before <= tol * (1.0 + state.best_value.abs()) {
                    converged = true;
                    break;
                }
            }

            // supergradient g = 1 - c Y K_v Y a with K_v the Gram of v v^T
            let w: Vec<f64> = alpha.iter().zip(y).map(|(a, b)| a * b).collect();
            let kw = cache.rank_one_gram_times(&v, &w)?;
            let step = self.t0 / (k as f64).sqrt();
            let trial: Vec<f64> = (0..m)
                .map(|i| alpha[i] + step * (1.0 - c * y[i] * kw[i]))
                .collect();
            alpha = project_box_hyperplane(&trial, self.box_c, y)?;
        }
        state.alpha = alpha;
        Ok(AscentRun {
            state,
            candidates,
            phi_trace,
            converged,
        })
    }
}
