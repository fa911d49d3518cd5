//! Tessellated kernels: universal piecewise-polynomial kernels parametrized
//! by positive semidefinite matrices, with exact closed-form evaluation, a
//! soft-margin SVM dual solver and two kernel-learning paths (an
//! eigenvalue-based saddle-point learner and simplex-weighted multiple
//! kernel learning over random PSD bases).
//!
//! Modules:
//! - [`basis`], [`region`], [`kernel`]: monomial basis, region moments and
//!   kernel evaluation.
//! - [`qp`], [`model`]: SVM dual solver, bias recovery and trained models.
//! - [`learner`]: saddle-point and MKL kernel learning, cross-validation.
//! - [`data`]: datasets, scaling, splits, synthetic generators, persistence.

pub mod baseline;
pub mod basis;
pub mod data;
pub mod error;
pub mod kernel;
pub mod learner;
pub mod linalg;
pub mod model;
pub mod qp;
pub mod region;

pub use baseline::{FeatureSubset, ModelKernel};
pub use basis::{MonomialBasis, MultiIndex};
pub use data::{Dataset, LabelColumn, LabelMapping, ScalingTransform, SplitSpec};
pub use error::{Error, Result};
pub use kernel::{BlockPMatrix, Kernel, SignedGram, TessellatedKernel};
pub use model::SvmModel;
pub use qp::{DualSolution, QpConfig};
pub use learner::{Method, MethodConfig};
pub use region::DomainBox;
