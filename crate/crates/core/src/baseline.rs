//! Fixed Gaussian and polynomial kernels used as a comparison library, and
//! the kernel description stored in trained models.

use crate::error::{Error, Result};
use crate::kernel::{Kernel, TessellatedKernel};

/// Which features a baseline kernel looks at.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureSubset {
    All,
    Single(usize),
}

impl FeatureSubset {
    fn check(&self, x: &[f64], y: &[f64]) -> Result<()> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        if let FeatureSubset::Single(j) = *self {
            if j >= x.len() {
                return Err(Error::DimensionMismatch {
                    expected: j + 1,
                    got: x.len(),
                });
            }
        }
        Ok(())
    }

    fn sq_dist(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            FeatureSubset::All => x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum(),
            FeatureSubset::Single(j) => (x[j] - y[j]) * (x[j] - y[j]),
        }
    }

    fn dot(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            FeatureSubset::All => x.iter().zip(y).map(|(a, b)| a * b).sum(),
            FeatureSubset::Single(j) => x[j] * y[j],
        }
    }
}

/// Kernel description carried by a trained model.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelKernel {
    Tessellated(TessellatedKernel),
    /// `exp(-|x - y|^2 / (2 bandwidth^2))`.
    Gaussian {
        bandwidth: f64,
        features: FeatureSubset,
    },
    /// `(1 + x.y)^degree`.
    Polynomial { degree: u32, features: FeatureSubset },
    /// Non-negative combination `sum_r w_r k_r`.
    Mixture(Vec<(f64, ModelKernel)>),
}

impl ModelKernel {
    pub fn gaussian(bandwidth: f64, features: FeatureSubset) -> Self {
        ModelKernel::Gaussian {
            bandwidth,
            features,
        }
    }

    pub fn polynomial(degree: u32, features: FeatureSubset) -> Self {
        ModelKernel::Polynomial { degree, features }
    }

    /// The tessellated component, if this kernel has exactly one.
    pub fn tessellated(&self) -> Option<&TessellatedKernel> {
        match self {
            ModelKernel::Tessellated(k) => Some(k),
            ModelKernel::Mixture(parts) => {
                let mut found = parts.iter().filter_map(|(_, k)| k.tessellated());
                let first = found.next();
                if found.next().is_some() {
                    None
                } else {
                    first
                }
            }
            _ => None,
        }
    }
}

impl Kernel for ModelKernel {
    fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self {
            ModelKernel::Tessellated(k) => k.eval(x, y),
            ModelKernel::Gaussian {
                bandwidth,
                features,
            } => {
                features.check(x, y)?;
                let d2 = features.sq_dist(x, y);
                Ok((-d2 / (2.0 * bandwidth * bandwidth)).exp())
            }
            ModelKernel::Polynomial { degree, features } => {
                features.check(x, y)?;
                Ok((1.0 + features.dot(x, y)).powi(*degree as i32))
            }
            ModelKernel::Mixture(parts) => {
                let mut total = 0.0;
                for (w, k) in parts {
                    if *w != 0.0 {
                        total += w * k.eval(x, y)?;
                    }
                }
                Ok(total)
            }
        }
    }
}

/// Gaussian bandwidths and polynomial degrees of the comparison library.
pub const BASELINE_BANDWIDTHS: [f64; 5] = [0.5, 1.0, 2.0, 5.0, 10.0];
pub const BASELINE_DEGREES: [u32; 3] = [1, 2, 3];

/// Gaussian and polynomial kernels on all features and on every single
/// feature: `8 (n + 1)` kernels for `n` features.
pub fn baseline_library(n: usize) -> Vec<ModelKernel> {
    let mut subsets = vec![FeatureSubset::All];
    subsets.extend((0..n).map(FeatureSubset::Single));
    let mut out = Vec::with_capacity(subsets.len() * 8);
    for s in subsets {
        for &b in &BASELINE_BANDWIDTHS {
            out.push(ModelKernel::gaussian(b, s));
        }
        for &d in &BASELINE_DEGREES {
            out.push(ModelKernel::polynomial(d, s));
        }
    }
    out
}
