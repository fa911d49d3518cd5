//! The learners exposed to users: each fits its own scaling on the raw
//! training data and returns a model ready for prediction.

use std::fmt;
use std::str::FromStr;

use super::mkl::{
    generate_random_psd_basis, learn_mkl, CombinedLibrary, GramLibrary, KernelLibrary, MklConfig,
    TessellatedLibrary,
};
use super::moments::precompute_moments;
use super::saddle::{learn_saddle_cached, LearnerConfig, StepSchedule};
use crate::baseline::{baseline_library, ModelKernel};
use crate::basis::MonomialBasis;
use crate::data::persist::config_digest;
use crate::data::{Dataset, ScalingTransform};
use crate::error::{Error, Result};
use crate::kernel::{BlockPMatrix, Kernel, TessellatedKernel};
use crate::model::{ModelInfo, SvmModel};
use crate::qp::{solve_svm_dual, DualSolution, QpConfig};
use crate::region::DomainBox;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    /// Kernel learned by the saddle-point solver.
    TessellatedSaddle,
    /// MKL over random PSD tessellated kernels.
    MklRandomTess,
    /// MKL over the Gaussian/polynomial library.
    MklGaussianPoly,
    /// MKL over both libraries.
    MklCombined,
    /// SVM with the tessellated kernel `P = (c / 2q) I`.
    FixedKernel,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::TessellatedSaddle,
        Method::MklRandomTess,
        Method::MklGaussianPoly,
        Method::MklCombined,
        Method::FixedKernel,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::TessellatedSaddle => "tessellated-saddle",
            Method::MklRandomTess => "mkl-random-tess",
            Method::MklGaussianPoly => "mkl-gaussian-poly",
            Method::MklCombined => "mkl-combined",
            Method::FixedKernel => "fixed-kernel",
        }
    }

    /// Whether the method uses the tessellated basis (and so the degree).
    pub fn is_tessellated(&self) -> bool {
        !matches!(self, Method::MklGaussianPoly)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown learner '{s}'")))
    }
}

/// Everything needed to fit one model for a fixed `C`.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodConfig {
    pub method: Method,
    pub degree: u32,
    pub c: f64,
    pub trace_bound: Option<f64>,
    /// Size of the random PSD basis.
    pub basis_size: usize,
    pub seed: u64,
    pub saddle_max_iter: usize,
    pub saddle_tol: f64,
    pub saddle_patience: usize,
    pub saddle_average_last: usize,
    pub step_t0: Option<f64>,
    pub mkl_max_iter: usize,
    pub mkl_tol: f64,
    pub qp: QpConfig,
}

impl MethodConfig {
    pub fn new(method: Method) -> Self {
        let saddle = LearnerConfig::default();
        let mkl = MklConfig::default();
        MethodConfig {
            method,
            degree: 1,
            c: 1.0,
            trace_bound: None,
            basis_size: 300,
            seed: 0,
            saddle_max_iter: saddle.max_outer_iter,
            saddle_tol: saddle.tol,
            saddle_patience: saddle.patience,
            saddle_average_last: saddle.average_last,
            step_t0: None,
            mkl_max_iter: mkl.max_iter,
            mkl_tol: mkl.tol,
            qp: QpConfig::default(),
        }
    }

    pub fn with_c(&self, c: f64) -> Self {
        MethodConfig { c, ..self.clone() }
    }

    pub fn saddle_config(&self) -> LearnerConfig {
        LearnerConfig {
            trace_bound: self.trace_bound,
            degree: self.degree,
            c: self.c,
            max_outer_iter: self.saddle_max_iter,
            step: StepSchedule {
                t0: self.step_t0,
                ..StepSchedule::default()
            },
            tol: self.saddle_tol,
            patience: self.saddle_patience,
            average_last: self.saddle_average_last,
            rng_seed: self.seed,
            qp: QpConfig {
                c: self.c,
                ..self.qp.clone()
            },
        }
    }

    pub fn mkl_config(&self) -> MklConfig {
        MklConfig {
            c: self.c,
            max_iter: self.mkl_max_iter,
            tol: self.mkl_tol,
            qp: QpConfig {
                c: self.c,
                ..self.qp.clone()
            },
            ..MklConfig::default()
        }
    }
}

/// What the learner reports besides the model.
#[derive(Clone, Debug, PartialEq)]
pub struct FitSummary {
    pub method: Method,
    pub c: f64,
    /// SVM dual objective of the final solve.
    pub objective: f64,
    /// Outer iterations of the kernel learner (QP iterations for a fixed
    /// kernel).
    pub iterations: usize,
    pub converged: bool,
    pub support_count: usize,
    /// Saddle value at the best iterate.
    pub saddle_value: Option<f64>,
    pub mkl_weights: Option<Vec<f64>>,
}

/// Fits a model on raw (unscaled) training data.
pub fn fit(train: &Dataset, config: &MethodConfig) -> Result<(SvmModel, FitSummary)> {
    train.require_both_classes()?;
    if train.len() < 2 {
        return Err(Error::InvalidParameter("need at least two training points".into()));
    }
    let scaling = ScalingTransform::fit(train.features());
    let (scaled_features, _) = scaling.apply(train.features());
    let scaled = train.with_features(scaled_features)?;
    let points = scaled.rows();
    let y = scaled.labels();
    let n = scaled.n_features();
    let basis = MonomialBasis::enumerate(n, config.degree);
    let domain = DomainBox::unit(n);
    let q = basis.len();
    let trace_bound = config.trace_bound.unwrap_or(2.0 * q as f64);

    let (kernel, dual, mut summary): (ModelKernel, DualSolution, FitSummary) = match config.method {
        Method::TessellatedSaddle => {
            let cache = precompute_moments(&points, &basis, &domain)?;
            let out = learn_saddle_cached(&cache, y, &config.saddle_config())?;
            let summary = FitSummary {
                method: config.method,
                c: config.c,
                objective: out.dual.objective,
                iterations: out.state.iteration,
                converged: out.converged,
                support_count: 0,
                saddle_value: Some(out.state.best_value),
                mkl_weights: None,
            };
            (ModelKernel::Tessellated(out.kernel), out.dual, summary)
        }
        Method::FixedKernel => {
            let mut p = BlockPMatrix::identity(q);
            let s = trace_bound / (2 * q) as f64;
            for m in [&mut p.p11, &mut p.p22] {
                *m *= s;
            }
            let kernel = TessellatedKernel::from_p(basis, domain, p)?;
            let gram = kernel.gram(&points, None)?;
            let dual = solve_svm_dual(&gram, y, &QpConfig { c: config.c, ..config.qp.clone() })?;
            let summary = FitSummary {
                method: config.method,
                c: config.c,
                objective: dual.objective,
                iterations: dual.iterations,
                converged: dual.converged,
                support_count: 0,
                saddle_value: None,
                mkl_weights: None,
            };
            (ModelKernel::Tessellated(kernel), dual, summary)
        }
        Method::MklRandomTess | Method::MklGaussianPoly | Method::MklCombined => {
            let mkl = config.mkl_config();
            let cache;
            let random;
            let tess_lib;
            let gp_lib;
            let (result, kernel) = match config.method {
                Method::MklGaussianPoly => {
                    gp_lib = GramLibrary::from_kernels(&baseline_library(n), &points)?;
                    let r = learn_mkl(&gp_lib, y, &mkl)?;
                    let k = gp_lib.model_kernel(&r.weights.mu)?;
                    (r, k)
                }
                _ => {
                    cache = precompute_moments(&points, &basis, &domain)?;
                    random = generate_random_psd_basis(q, config.basis_size, trace_bound, config.seed)?;
                    tess_lib = TessellatedLibrary::new(&cache, &random.matrices)?;
                    if config.method == Method::MklRandomTess {
                        let r = learn_mkl(&tess_lib, y, &mkl)?;
                        let k = tess_lib.model_kernel(&r.weights.mu)?;
                        (r, k)
                    } else {
                        gp_lib = GramLibrary::from_kernels(&baseline_library(n), &points)?;
                        let both = CombinedLibrary {
                            first: &tess_lib,
                            second: &gp_lib,
                        };
                        let r = learn_mkl(&both, y, &mkl)?;
                        let k = both.model_kernel(&r.weights.mu)?;
                        (r, k)
                    }
                }
            };
            let summary = FitSummary {
                method: config.method,
                c: config.c,
                objective: result.dual.objective,
                iterations: result.iterations,
                converged: result.converged,
                support_count: 0,
                saddle_value: None,
                mkl_weights: Some(result.weights.mu.clone()),
            };
            (kernel, result.dual, summary)
        }
    };
    summary.support_count = dual.support_indices.len();

    let info = ModelInfo {
        learner: config.method.name().to_string(),
        degree: config.method.is_tessellated().then_some(config.degree),
        c: config.c,
        config_digest: config_digest(config),
    };
    let model = SvmModel::from_solution(kernel, &scaled, &dual, scaling, info)?;
    Ok((model, summary))
}
