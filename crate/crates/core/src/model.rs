//! Trained SVM: kernel, support vectors, dual weights, bias and the scaling
//! transform of its training data.

use log::warn;

use crate::baseline::ModelKernel;
use crate::data::{Dataset, ScalingTransform};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::qp::DualSolution;

/// Descriptive fields stored alongside a model.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelInfo {
    pub learner: String,
    pub degree: Option<u32>,
    pub c: f64,
    /// Hex digest of the learner configuration.
    pub config_digest: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvmModel {
    pub kernel: ModelKernel,
    /// Support vectors in scaled coordinates.
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub scaling: ScalingTransform,
    pub info: ModelInfo,
}

impl SvmModel {
    /// Keeps the support vectors of `solution`; `train` must be the scaled
    /// training set the solution was computed on.
    pub fn from_solution(
        kernel: ModelKernel,
        train: &Dataset,
        solution: &DualSolution,
        scaling: ScalingTransform,
        info: ModelInfo,
    ) -> Result<Self> {
        if solution.alpha.len() != train.len() {
            return Err(Error::DimensionMismatch {
                expected: train.len(),
                got: solution.alpha.len(),
            });
        }
        let idx = &solution.support_indices;
        Ok(SvmModel {
            kernel,
            points: idx.iter().map(|&i| train.row(i)).collect(),
            labels: idx.iter().map(|&i| train.labels()[i]).collect(),
            alpha: idx.iter().map(|&i| solution.alpha[i]).collect(),
            bias: solution.bias,
            scaling,
            info,
        })
    }

    pub fn n_features(&self) -> usize {
        self.scaling.n_features()
    }

    /// `f(x) = sum_i a_i y_i k(x_i, x) + b` for an already scaled point.
    pub fn decision_scaled(&self, x: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for ((p, &a), &y) in self.points.iter().zip(&self.alpha).zip(&self.labels) {
            total += a * y * self.kernel.eval(p, x)?;
        }
        Ok(total + self.bias)
    }

    /// Scales a raw point (clamping into the unit box) and evaluates the
    /// discriminant.
    pub fn decision_function(&self, x: &[f64]) -> Result<f64> {
        let (f, clamped) = self.decision_counting(x)?;
        if clamped > 0 {
            warn!("{clamped} feature value(s) clamped into the kernel domain");
        }
        Ok(f)
    }

    fn decision_counting(&self, x: &[f64]) -> Result<(f64, usize)> {
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: x.len(),
            });
        }
        let (mut scaled, mut clamped) = self.scaling.apply_point(x);
        if let Some(k) = self.kernel.tessellated() {
            clamped += k.domain().clamp(&mut scaled);
        }
        Ok((self.decision_scaled(&scaled)?, clamped))
    }

    /// `sign(f(x))` with `sign(0) = +1`.
    pub fn classify(&self, x: &[f64]) -> Result<f64> {
        Ok(sign(self.decision_function(x)?))
    }

    /// Decision values for every row of a raw dataset.
    pub fn decision_values(&self, data: &Dataset) -> Result<Vec<f64>> {
        use rayon::prelude::*;
        let out: Vec<(f64, usize)> = (0..data.len())
            .into_par_iter()
            .map(|i| self.decision_counting(&data.row(i)))
            .collect::<Result<_>>()?;
        let rows = out.iter().filter(|(_, c)| *c > 0).count();
        if rows > 0 {
            warn!("{rows} of {} rows had feature values clamped into the kernel domain", data.len());
        }
        Ok(out.into_iter().map(|(f, _)| f).collect())
    }

    /// Fraction of correctly classified rows.
    pub fn accuracy(&self, data: &Dataset) -> Result<f64> {
        let f = self.decision_values(data)?;
        Ok(accuracy(&f, data.labels()))
    }
}

pub fn sign(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Fraction of `sign(f_i) == y_i`.
pub fn accuracy(decisions: &[f64], labels: &[f64]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let hits = decisions
        .iter()
        .zip(labels)
        .filter(|(f, y)| sign(**f) == **y)
        .count();
    hits as f64 / labels.len() as f64
}

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;

    use super::*;
    use crate::basis::MonomialBasis;
    use crate::kernel::TessellatedKernel;
    use crate::qp::{solve_svm_dual, QpConfig};
    use crate::region::DomainBox;

    fn sobolev() -> ModelKernel {
        let one = DMatrix::from_element(1, 1, 1.0);
        let zero = DMatrix::from_element(1, 1, 0.0);
        ModelKernel::Tessellated(
            TessellatedKernel::new(
                MonomialBasis::enumerate(1, 0),
                DomainBox::unit(1),
                one,
                zero.clone(),
                zero.clone(),
                zero,
            )
            .unwrap(),
        )
    }

    fn two_point_model() -> (SvmModel, Dataset) {
        let train = Dataset::from_rows(&[vec![0.2], vec![0.8]], vec![1.0, -1.0]).unwrap();
        let kernel = sobolev();
        let gram = kernel.gram(&train.rows(), None).unwrap();
        let sol = solve_svm_dual(&gram, train.labels(), &QpConfig::new(10.0)).unwrap();
        let scaling = ScalingTransform::identity_like(1);
        let model = SvmModel::from_solution(kernel, &train, &sol, scaling, ModelInfo::default()).unwrap();
        (model, train)
    }

    #[test]
    fn two_point_training_set_classified() {
        let (model, train) = two_point_model();
        assert_eq!(model.classify(&[0.2]).unwrap(), 1.0);
        assert_eq!(model.classify(&[0.8]).unwrap(), -1.0);
        assert_eq!(model.accuracy(&train).unwrap(), 1.0);
        // margin points sit exactly on the margin
        assert!((model.decision_scaled(&[0.2]).unwrap() - 1.0).abs() < 1e-9);
        assert!((model.decision_scaled(&[0.8]).unwrap() + 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_alpha_model_is_constant() {
        let (mut model, _) = two_point_model();
        model.alpha = vec![0.0; model.alpha.len()];
        model.bias = -0.25;
        for x in [0.0, 0.3, 0.99] {
            assert_eq!(model.decision_scaled(&[x]).unwrap(), -0.25);
        }
    }

    #[test]
    fn permutation_invariant() {
        let (model, _) = two_point_model();
        let mut flipped = model.clone();
        flipped.points.reverse();
        flipped.labels.reverse();
        flipped.alpha.reverse();
        for x in [0.1, 0.45, 0.9] {
            let a = model.decision_scaled(&[x]).unwrap();
            let b = flipped.decision_scaled(&[x]).unwrap();
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn out_of_box_point_is_clamped() {
        let (model, _) = two_point_model();
        // identity-like scaling maps 2.0 beyond 1; the value is clamped to 1
        let f = model.decision_function(&[2.0]).unwrap();
        assert!((f - model.decision_scaled(&[1.0]).unwrap()).abs() < 1e-15);
        assert!(model.decision_function(&[0.1, 0.2]).is_err());
    }

    #[test]
    fn tie_breaks_to_positive() {
        assert_eq!(sign(0.0), 1.0);
        assert_eq!(accuracy(&[0.0, 0.0], &[1.0, -1.0]), 0.5);
    }
}
