//! Soft-margin SVM dual for a fixed kernel:
//!
//! ```text
//! maximize   sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j k(x_i, x_j)
//! subject to 0 <= a_i <= C,  sum_i a_i y_i = 0
//! ```
//!
//! solved by projected gradient ascent with an exact line search along the
//! projected direction. Each projected step is followed by conjugate-gradient
//! steps on the face it lands on (also with exact, bound-truncated line
//! searches), which removes the slow tail of plain gradient projection on
//! ill-conditioned Gram matrices.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::SignedGram;
use crate::linalg;

/// Solver settings. `c` is the box bound (`1 / (m lambda)` in the
/// regularized-risk form).
#[derive(Clone, Debug, PartialEq)]
pub struct QpConfig {
    pub c: f64,
    pub kkt_tol: f64,
    pub max_iter: usize,
    /// Keep the objective value of every iterate in [`DualSolution::history`].
    pub record_history: bool,
}

impl QpConfig {
    pub fn new(c: f64) -> Self {
        QpConfig {
            c,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::InvalidParameter(format!("C must be positive, got {}", self.c)));
        }
        if !(self.kkt_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "kkt_tol must be positive, got {}",
                self.kkt_tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be positive".into()));
        }
        Ok(())
    }

    /// Dual variables at or below this value are not support vectors.
    pub fn support_threshold(&self) -> f64 {
        1e-8 * self.c
    }
}

impl Default for QpConfig {
    fn default() -> Self {
        QpConfig {
            c: 1.0,
            kkt_tol: 1e-7,
            max_iter: 50_000,
            record_history: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub objective: f64,
    pub support_indices: Vec<usize>,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// No dual variable is positive; the bias was set to zero.
    pub degenerate_bias: bool,
    pub history: Vec<f64>,
}

/// Validates a `±1` label vector.
pub fn check_labels(y: &[f64]) -> Result<()> {
    if let Some((i, v)) = y.iter().enumerate().find(|(_, v)| **v != 1.0 && **v != -1.0) {
        return Err(Error::InvalidLabels(format!("label {v} at index {i} is not ±1")));
    }
    Ok(())
}

/// Euclidean projection of `v` onto `{a : 0 <= a <= c, y^T a = 0}`.
///
/// The projection is `clip(v - theta y, 0, c)` where `theta` is the root of
/// the non-increasing piecewise-linear function
/// `h(theta) = sum_i y_i clip(v_i - theta y_i, 0, c)`; the root is located
/// exactly by bisection over the sorted breakpoints.
pub fn project_box_hyperplane(v: &[f64], c: f64, y: &[f64]) -> Result<Vec<f64>> {
    if v.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            got: y.len(),
        });
    }
    if !(c >= 0.0) {
        return Err(Error::InvalidParameter(format!("box bound must be non-negative, got {c}")));
    }
    if v.is_empty() {
        return Ok(Vec::new());
    }
    let h = |theta: f64| -> f64 {
        v.iter()
            .zip(y)
            .map(|(&vi, &yi)| yi * (vi - theta * yi).clamp(0.0, c))
            .sum()
    };
    let mut breaks: Vec<f64> = v
        .iter()
        .zip(y)
        .flat_map(|(&vi, &yi)| [yi * vi, yi * (vi - c)])
        .collect();
    breaks.sort_by(|a, b| a.total_cmp(b));
    breaks.dedup();

    // h(breaks[0]) >= 0 >= h(breaks[last]); find the last breakpoint with h >= 0.
    let (mut lo, mut hi) = (0usize, breaks.len() - 1);
    let h_lo0 = h(breaks[lo]);
    let theta = if h_lo0 <= 0.0 {
        breaks[lo]
    } else if h(breaks[hi]) >= 0.0 {
        breaks[hi]
    } else {
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if h(breaks[mid]) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (h_lo, h_hi) = (h(breaks[lo]), h(breaks[hi]));
        if h_lo == 0.0 {
            breaks[lo]
        } else {
            breaks[lo] + h_lo * (breaks[hi] - breaks[lo]) / (h_lo - h_hi)
        }
    };

    let mut out: Vec<f64> = v
        .iter()
        .zip(y)
        .map(|(&vi, &yi)| (vi - theta * yi).clamp(0.0, c))
        .collect();
    polish_equality(&mut out, c, y);
    Ok(out)
}

/// Removes floating-point residue from `y^T a = 0` using the free variables.
fn polish_equality(a: &mut [f64], c: f64, y: &[f64]) {
    for _ in 0..2 {
        let r: f64 = a.iter().zip(y).map(|(ai, yi)| ai * yi).sum();
        if r == 0.0 {
            return;
        }
        let free: Vec<usize> = (0..a.len()).filter(|&i| a[i] > 0.0 && a[i] < c).collect();
        if free.is_empty() {
            return;
        }
        let shift = r / free.len() as f64;
        for i in free {
            a[i] = (a[i] - shift * y[i]).clamp(0.0, c);
        }
    }
}

/// Conjugate-gradient ascent restricted to the free variables of `alpha`
/// and the hyperplane `y^T d = 0`. Stops at the first bound it hits.
fn face_cg(h: &DMatrix<f64>, alpha: &mut DVector<f64>, h_alpha: &mut DVector<f64>, c: f64, y: &[f64], max_iter: usize) {
    let eps = 1e-12 * c;
    let free: Vec<usize> = (0..alpha.len()).filter(|&i| alpha[i] > eps && alpha[i] < c - eps).collect();
    let nf = free.len();
    if nf < 2 {
        return;
    }
    let project = |g: &[f64]| -> Vec<f64> {
        let mean = free.iter().zip(g).map(|(&i, gi)| y[i] * gi).sum::<f64>() / nf as f64;
        free.iter().zip(g).map(|(&i, gi)| gi - mean * y[i]).collect()
    };
    let mut g: Vec<f64> = free.iter().map(|&i| 1.0 - h_alpha[i]).collect();
    let r = project(&g);
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    let mut p = r;
    let scale = g.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut hp = DVector::zeros(alpha.len());
    for _ in 0..max_iter {
        if rr.sqrt() <= 1e-13 * scale {
            break;
        }
        hp.fill(0.0);
        for (k, &j) in free.iter().enumerate() {
            if p[k] != 0.0 {
                hp.axpy(p[k], &h.column(j), 1.0);
            }
        }
        let curvature: f64 = free.iter().zip(&p).map(|(&i, pk)| pk * hp[i]).sum();
        let slope: f64 = g.iter().zip(&p).map(|(a, b)| a * b).sum();
        if slope <= 0.0 {
            break;
        }
        let mut t_max = f64::INFINITY;
        let mut blocking = None;
        for (k, &i) in free.iter().enumerate() {
            let limit = if p[k] > 0.0 {
                (c - alpha[i]) / p[k]
            } else if p[k] < 0.0 {
                -alpha[i] / p[k]
            } else {
                continue;
            };
            if limit < t_max {
                t_max = limit;
                blocking = Some(k);
            }
        }
        let t_exact = if curvature > 0.0 { slope / curvature } else { f64::INFINITY };
        let t = t_exact.min(t_max);
        if !t.is_finite() {
            break;
        }
        for (k, &i) in free.iter().enumerate() {
            alpha[i] = (alpha[i] + t * p[k]).clamp(0.0, c);
        }
        h_alpha.axpy(t, &hp, 1.0);
        if t_exact >= t_max {
            if let Some(k) = blocking {
                alpha[free[k]] = if p[k] > 0.0 { c } else { 0.0 };
            }
            break;
        }
        for (k, &i) in free.iter().enumerate() {
            g[k] -= t * hp[i];
        }
        let r_new = project(&g);
        let rr_new: f64 = r_new.iter().map(|v| v * v).sum();
        let beta = rr_new / rr;
        for (pk, rk) in p.iter_mut().zip(&r_new) {
            *pk = rk + beta * *pk;
        }
        rr = rr_new;
    }
}

fn dual_objective(alpha: &DVector<f64>, h_alpha: &DVector<f64>) -> f64 {
    alpha.sum() - 0.5 * alpha.dot(h_alpha)
}

/// Projected-gradient residual `max_i |a_i - P(a + grad)_i|`.
pub fn kkt_residual(alpha: &[f64], grad: &[f64], c: f64, y: &[f64]) -> Result<f64> {
    let trial: Vec<f64> = alpha.iter().zip(grad).map(|(a, g)| a + g).collect();
    let p = project_box_hyperplane(&trial, c, y)?;
    Ok(alpha
        .iter()
        .zip(&p)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Solves the SVM dual for a Gram matrix. An unsigned Gram is signed with
/// `y` first. The bias is recovered with [`recover_bias`].
pub fn solve_svm_dual(gram: &SignedGram, y: &[f64], config: &QpConfig) -> Result<DualSolution> {
    solve_svm_dual_from(gram, y, config, None)
}

/// As [`solve_svm_dual`], optionally warm-started from a feasible point
/// (it is projected first).
pub fn solve_svm_dual_from(
    gram: &SignedGram,
    y: &[f64],
    config: &QpConfig,
    initial: Option<&[f64]>,
) -> Result<DualSolution> {
    config.validate()?;
    check_labels(y)?;
    let m = gram.size();
    if y.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: y.len(),
        });
    }
    linalg::check_symmetric(&gram.entries, 1e-10)?;
    let signed = if gram.label_signed {
        gram.clone()
    } else {
        gram.toggle_labels(y)
    };
    let h = &signed.entries;
    let c = config.c;

    let start = match initial {
        Some(a0) => project_box_hyperplane(a0, c, y)?,
        None => vec![0.0; m],
    };
    let mut alpha = DVector::from_vec(start);
    let mut h_alpha = h * &alpha;
    let mut objective = dual_objective(&alpha, &h_alpha);
    let mut history = Vec::new();
    if config.record_history {
        history.push(objective);
    }

    let diag_max = (0..m).map(|i| h[(i, i)]).fold(0.0, f64::max);
    let mut step = if diag_max > 0.0 { 1.0 / diag_max } else { 1.0 };
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iter {
        let grad: DVector<f64> = DVector::from_element(m, 1.0) - &h_alpha;
        residual = kkt_residual(alpha.as_slice(), grad.as_slice(), c, y)?;
        if residual <= config.kkt_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let trial: Vec<f64> = alpha.iter().zip(grad.iter()).map(|(a, g)| a + step * g).collect();
        let target = DVector::from_vec(project_box_hyperplane(&trial, c, y)?);
        let dir = target - &alpha;
        let slope = grad.dot(&dir);
        if slope <= 0.0 {
            // rounding: the projected step is no longer an ascent direction
            if step > 1e-12 {
                step *= 0.1;
                continue;
            }
            break;
        }
        let h_dir = h * &dir;
        let curvature = dir.dot(&h_dir);
        let tau = if curvature > 0.0 {
            (slope / curvature).min(1.0)
        } else {
            1.0
        };
        let delta = &dir * tau;
        let new_alpha = &alpha + &delta;
        let new_h_alpha = &h_alpha + &h_dir * tau;
        let new_objective = dual_objective(&new_alpha, &new_h_alpha);
        if new_objective < objective {
            // exact line search on a concave quadratic cannot decrease the
            // objective beyond rounding; stop rather than accept it
            if objective - new_objective > 1e-12 * (1.0 + objective.abs()) {
                break;
            }
        }
        alpha = new_alpha;
        h_alpha = new_h_alpha;
        objective = new_objective.max(objective);

        let mut refined = alpha.clone();
        let mut refined_h = h_alpha.clone();
        face_cg(h, &mut refined, &mut refined_h, c, y, m.min(200));
        let mut refined_vec: Vec<f64> = refined.iter().copied().collect();
        polish_equality(&mut refined_vec, c, y);
        let refined = DVector::from_vec(refined_vec);
        let refined_h = h * &refined;
        let refined_objective = dual_objective(&refined, &refined_h);
        if refined_objective >= objective {
            alpha = refined;
            h_alpha = refined_h;
            objective = refined_objective;
        }
        if config.record_history {
            history.push(objective);
        }

        // Barzilai-Borwein step for the next projection
        let sq = delta.dot(&delta);
        let curv = tau * tau * curvature;
        step = if curv > 0.0 { (sq / curv).clamp(1e-12, 1e12) } else { step * 2.0 };
    }

    // enforce the box exactly and refresh derived quantities
    let mut alpha_vec: Vec<f64> = alpha.iter().map(|a| a.clamp(0.0, c)).collect();
    polish_equality(&mut alpha_vec, c, y);
    let alpha = DVector::from_vec(alpha_vec);
    let h_alpha = h * &alpha;
    let objective = dual_objective(&alpha, &h_alpha);
    if residual.is_infinite() {
        let grad: DVector<f64> = DVector::from_element(m, 1.0) - &h_alpha;
        residual = kkt_residual(alpha.as_slice(), grad.as_slice(), c, y)?;
    }

    let unsigned = if gram.label_signed {
        gram.toggle_labels(y)
    } else {
        gram.clone()
    };
    let bias = recover_bias(alpha.as_slice(), &unsigned.entries, y, c)?;
    let threshold = config.support_threshold();
    let support_indices = (0..m).filter(|&i| alpha[i] > threshold).collect();

    Ok(DualSolution {
        alpha: alpha.iter().copied().collect(),
        bias: bias.bias,
        objective,
        support_indices,
        kkt_residual: residual,
        iterations,
        converged,
        degenerate_bias: bias.degenerate,
        history,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BiasEstimate {
    pub bias: f64,
    pub degenerate: bool,
}

/// Bias from the KKT conditions: the mean of `y_i - g_i` over margin
/// support vectors (`0 < a_i < C`), where `g_i = sum_j a_j y_j k(x_j, x_i)`.
/// Without margin vectors, the midpoint of the interval of biases
/// consistent with the bound vectors is used.
pub fn recover_bias(alpha: &[f64], gram_unsigned: &DMatrix<f64>, y: &[f64], c: f64) -> Result<BiasEstimate> {
    let m = alpha.len();
    if y.len() != m || gram_unsigned.nrows() != m || gram_unsigned.ncols() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: y.len().min(gram_unsigned.nrows()),
        });
    }
    let threshold = 1e-8 * c;
    if alpha.iter().all(|&a| a <= threshold) {
        return Ok(BiasEstimate {
            bias: 0.0,
            degenerate: true,
        });
    }
    let g: Vec<f64> = (0..m)
        .map(|i| {
            (0..m)
                .filter(|&j| alpha[j] != 0.0)
                .map(|j| alpha[j] * y[j] * gram_unsigned[(j, i)])
                .sum()
        })
        .collect();

    let margin: Vec<usize> = (0..m)
        .filter(|&i| alpha[i] > threshold && alpha[i] < c - threshold)
        .collect();
    if !margin.is_empty() {
        let sum: f64 = margin.iter().map(|&i| y[i] - g[i]).sum();
        return Ok(BiasEstimate {
            bias: sum / margin.len() as f64,
            degenerate: false,
        });
    }

    // y_i (g_i + b) >= 1 at a_i = 0 and <= 1 at a_i = C
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    for i in 0..m {
        let at_upper = alpha[i] >= c - threshold;
        let edge = y[i] - g[i];
        let is_lower = (y[i] > 0.0) != at_upper;
        if is_lower {
            lower = lower.max(edge);
        } else {
            upper = upper.min(edge);
        }
    }
    let bias = match (lower.is_finite(), upper.is_finite()) {
        (true, true) => 0.5 * (lower + upper),
        (true, false) => lower,
        (false, true) => upper,
        (false, false) => 0.0,
    };
    Ok(BiasEstimate {
        bias,
        degenerate: false,
    })
}
