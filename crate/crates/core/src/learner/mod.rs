//! Kernel learning: the saddle-point learner, multiple kernel learning and
//! cross-validation.

pub mod cv;
pub mod eig;
pub mod methods;
pub mod mkl;
pub mod moments;
pub mod saddle;

pub use cv::{cross_validate, CvResult};
pub use eig::top_eig;
pub use methods::{fit, FitSummary, Method, MethodConfig};
pub use mkl::{
    generate_random_psd_basis, learn_mkl, learn_mkl_grams, CombinedLibrary, GramLibrary, KernelLibrary,
    MklConfig, MklResult, MklWeights, RandomPsdBasis, TessellatedLibrary,
};
pub use moments::{assemble_m, precompute_moments, MomentTensorCache};
pub use saddle::{learn_saddle, learn_saddle_cached, saddle_value, LearnerConfig, SaddleOutcome, SaddleState, StepSchedule};
