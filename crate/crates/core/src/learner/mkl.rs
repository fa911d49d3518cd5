//! Multiple kernel learning on the simplex by reduced-gradient descent of
//! `J(mu)`, the optimal SVM dual value of the kernel `sum_r mu_r k_r`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::moments::MomentTensorCache;
use crate::baseline::ModelKernel;
use crate::error::{Error, Result};
use crate::kernel::{BlockPMatrix, SignedGram, TessellatedKernel};
use crate::linalg;
use crate::qp::{solve_svm_dual_from, DualSolution, QpConfig};

/// `R` random PSD matrices `B B^T` (Gaussian `B`), each rescaled to trace `c`.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomPsdBasis {
    pub seed: u64,
    pub matrices: Vec<BlockPMatrix>,
}

pub fn generate_random_psd_basis(q_half: usize, count: usize, trace: f64, seed: u64) -> Result<RandomPsdBasis> {
    if count == 0 {
        return Err(Error::InvalidParameter("basis size must be at least 1".into()));
    }
    if !(trace > 0.0) {
        return Err(Error::InvalidParameter(format!("trace must be positive, got {trace}")));
    }
    let n = 2 * q_half;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut matrices = Vec::with_capacity(count);
    for _ in 0..count {
        let b = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
        let mut p = &b * b.transpose();
        let tr = p.trace();
        p *= trace / tr;
        linalg::symmetrize(&mut p);
        matrices.push(BlockPMatrix::from_full(&p)?);
    }
    Ok(RandomPsdBasis { seed, matrices })
}

/// Weights on the probability simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct MklWeights {
    pub mu: Vec<f64>,
}

impl MklWeights {
    pub fn uniform(r: usize) -> Self {
        MklWeights {
            mu: vec![1.0 / r as f64; r],
        }
    }

    pub fn new(mu: Vec<f64>) -> Result<Self> {
        let sum: f64 = mu.iter().sum();
        if mu.is_empty() || mu.iter().any(|&v| !(v >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter("weights must lie on the simplex".into()));
        }
        Ok(MklWeights { mu })
    }
}

/// A finite family of kernels on a fixed training set.
pub trait KernelLibrary: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unsigned Gram matrix of `sum_r mu_r k_r`.
    fn combined_gram(&self, mu: &[f64]) -> Result<DMatrix<f64>>;

    /// `w^T K_r w` for every kernel.
    fn quadratic_forms(&self, w: &[f64]) -> Result<Vec<f64>>;

    /// Predictive kernel for the weights `mu`.
    fn model_kernel(&self, mu: &[f64]) -> Result<ModelKernel>;
}

/// Explicit Gram matrices. Each one is checked for PSD-ness.
#[derive(Clone, Debug)]
pub struct GramLibrary {
    grams: Vec<DMatrix<f64>>,
    kernels: Option<Vec<ModelKernel>>,
}

impl GramLibrary {
    pub fn new(grams: Vec<DMatrix<f64>>) -> Result<Self> {
        let m = grams.first().map(|g| g.nrows()).unwrap_or(0);
        for g in &grams {
            if g.nrows() != m || g.ncols() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: g.nrows(),
                });
            }
            linalg::check_symmetric(g, 1e-10)?;
            linalg::check_psd(g, linalg::PSD_TOL)?;
        }
        Ok(GramLibrary { grams, kernels: None })
    }

    /// Grams of `kernels` on `points`, each scaled to unit mean diagonal.
    pub fn from_kernels(kernels: &[ModelKernel], points: &[Vec<f64>]) -> Result<Self> {
        use crate::kernel::Kernel;
        let mut grams = Vec::with_capacity(kernels.len());
        let mut scaled = Vec::with_capacity(kernels.len());
        for k in kernels {
            let g = k.gram(points, None)?.entries;
            let s = unit_diagonal_scale(g.trace(), points.len());
            grams.push(g * s);
            scaled.push(ModelKernel::Mixture(vec![(s, k.clone())]));
        }
        let mut lib = GramLibrary::new(grams)?;
        lib.kernels = Some(scaled);
        Ok(lib)
    }

    pub fn grams(&self) -> &[DMatrix<f64>] {
        &self.grams
    }
}

fn unit_diagonal_scale(trace: f64, m: usize) -> f64 {
    if trace > 0.0 {
        m as f64 / trace
    } else {
        1.0
    }
}

impl KernelLibrary for GramLibrary {
    fn len(&self) -> usize {
        self.grams.len()
    }

    fn combined_gram(&self, mu: &[f64]) -> Result<DMatrix<f64>> {
        let m = self.grams.first().map(|g| g.nrows()).unwrap_or(0);
        let mut out = DMatrix::zeros(m, m);
        for (g, &w) in self.grams.iter().zip(mu) {
            if w != 0.0 {
                out += g * w;
            }
        }
        Ok(out)
    }

    fn quadratic_forms(&self, w: &[f64]) -> Result<Vec<f64>> {
        let w = DVector::from_column_slice(w);
        Ok(self.grams.iter().map(|g| linalg::quad_form(g, &w)).collect())
    }

    fn model_kernel(&self, mu: &[f64]) -> Result<ModelKernel> {
        let kernels = self.kernels.as_ref().ok_or_else(|| {
            Error::InvalidParameter("library was built from Gram matrices only".into())
        })?;
        Ok(mixture(kernels, mu))
    }
}

fn mixture(kernels: &[ModelKernel], mu: &[f64]) -> ModelKernel {
    let parts = kernels
        .iter()
        .zip(mu)
        .filter(|(_, &w)| w > 0.0)
        .map(|(k, &w)| match k {
            ModelKernel::Mixture(inner) if inner.len() == 1 => (w * inner[0].0, inner[0].1.clone()),
            other => (w, other.clone()),
        })
        .collect();
    ModelKernel::Mixture(parts)
}

/// Tessellated kernels `k_{P_r}` evaluated through the moment cache. A
/// mixture is again tessellated with `P = sum_r mu_r s_r P_r`, and
/// `w^T K_r w = <P_r, M(w)>`.
#[derive(Clone, Debug)]
pub struct TessellatedLibrary<'a> {
    cache: &'a MomentTensorCache,
    basis: Vec<DMatrix<f64>>,
}

impl<'a> TessellatedLibrary<'a> {
    /// The matrices are rescaled so that each kernel has unit mean diagonal
    /// on the cached points.
    pub fn new(cache: &'a MomentTensorCache, matrices: &[BlockPMatrix]) -> Result<Self> {
        let diag = cache.diagonal_t();
        let mut basis = Vec::with_capacity(matrices.len());
        for p in matrices {
            if p.q_half() != cache.q_half() {
                return Err(Error::DimensionMismatch {
                    expected: cache.q_half(),
                    got: p.q_half(),
                });
            }
            p.validate()?;
            let full = p.to_full();
            let s = unit_diagonal_scale(linalg::frobenius_dot(&full, &diag), cache.len());
            basis.push(full * s);
        }
        Ok(TessellatedLibrary { cache, basis })
    }

    pub fn combined_p(&self, mu: &[f64]) -> Result<BlockPMatrix> {
        let n = 2 * self.cache.q_half();
        let mut p = DMatrix::zeros(n, n);
        for (b, &w) in self.basis.iter().zip(mu) {
            if w != 0.0 {
                p += b * w;
            }
        }
        linalg::symmetrize(&mut p);
        BlockPMatrix::from_full(&p)
    }

    pub fn combined_kernel(&self, mu: &[f64]) -> Result<TessellatedKernel> {
        TessellatedKernel::from_p(
            self.cache.basis().clone(),
            self.cache.domain().clone(),
            self.combined_p(mu)?,
        )
    }
}

impl KernelLibrary for TessellatedLibrary<'_> {
    fn len(&self) -> usize {
        self.basis.len()
    }

    fn combined_gram(&self, mu: &[f64]) -> Result<DMatrix<f64>> {
        self.cache.gram(&self.combined_kernel(mu)?)
    }

    fn quadratic_forms(&self, w: &[f64]) -> Result<Vec<f64>> {
        let m = self.cache.weighted_t(w)?;
        Ok(self.basis.iter().map(|b| linalg::frobenius_dot(b, &m)).collect())
    }

    fn model_kernel(&self, mu: &[f64]) -> Result<ModelKernel> {
        Ok(ModelKernel::Tessellated(self.combined_kernel(mu)?))
    }
}

/// Concatenation of two libraries; weights are split in order.
pub struct CombinedLibrary<'a> {
    pub first: &'a dyn KernelLibrary,
    pub second: &'a dyn KernelLibrary,
}

impl KernelLibrary for CombinedLibrary<'_> {
    fn len(&self) -> usize {
        self.first.len() + self.second.len()
    }

    fn combined_gram(&self, mu: &[f64]) -> Result<DMatrix<f64>> {
        let (a, b) = mu.split_at(self.first.len());
        Ok(self.first.combined_gram(a)? + self.second.combined_gram(b)?)
    }

    fn quadratic_forms(&self, w: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.first.quadratic_forms(w)?;
        out.extend(self.second.quadratic_forms(w)?);
        Ok(out)
    }

    fn model_kernel(&self, mu: &[f64]) -> Result<ModelKernel> {
        let (a, b) = mu.split_at(self.first.len());
        let sa: f64 = a.iter().sum();
        let sb: f64 = b.iter().sum();
        let mut parts = Vec::new();
        if sa > 0.0 {
            let norm: Vec<f64> = a.iter().map(|v| v / sa).collect();
            parts.push((sa, self.first.model_kernel(&norm)?));
        }
        if sb > 0.0 {
            let norm: Vec<f64> = b.iter().map(|v| v / sb).collect();
            parts.push((sb, self.second.model_kernel(&norm)?));
        }
        Ok(ModelKernel::Mixture(parts))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MklConfig {
    pub c: f64,
    pub max_iter: usize,
    /// Stop once the optimality gap is below `tol * max(1, |J|)`.
    pub tol: f64,
    /// Golden-section evaluations per line search.
    pub line_search_steps: usize,
    pub qp: QpConfig,
}

impl Default for MklConfig {
    fn default() -> Self {
        MklConfig {
            c: 1.0,
            max_iter: 100,
            tol: 1e-3,
            line_search_steps: 12,
            qp: QpConfig::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MklResult {
    pub weights: MklWeights,
    pub dual: DualSolution,
    /// `J` after every accepted step, starting with the uniform weights.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub gap: f64,
}

struct Evaluation {
    mu: Vec<f64>,
    dual: DualSolution,
}

fn evaluate(
    library: &dyn KernelLibrary,
    y: &[f64],
    qp: &QpConfig,
    mu: Vec<f64>,
    warm: Option<&[f64]>,
) -> Result<Evaluation> {
    let gram = SignedGram::unsigned(library.combined_gram(&mu)?);
    let dual = solve_svm_dual_from(&gram, y, qp, warm)?;
    Ok(Evaluation { mu, dual })
}

/// `mu + gamma d` renormalized; `zero` is set exactly to 0.
fn step_to(mu: &[f64], d: &[f64], gamma: f64, zero: Option<usize>) -> Vec<f64> {
    let mut next: Vec<f64> = mu.iter().zip(d).map(|(m, d)| (m + gamma * d).max(0.0)).collect();
    if let Some(z) = zero {
        next[z] = 0.0;
    }
    let sum: f64 = next.iter().sum();
    for v in &mut next {
        *v /= sum;
    }
    next
}

/// Descent direction of the reduced gradient with respect to the largest
/// weight; weights at zero with a positive reduced gradient stay put.
fn reduced_direction(mu: &[f64], grad: &[f64]) -> Vec<f64> {
    let r = mu.len();
    let u = (0..r).fold(0, |b, i| if mu[i] > mu[b] { i } else { b });
    let mut d = vec![0.0; r];
    for i in 0..r {
        if i == u {
            continue;
        }
        let rg = grad[i] - grad[u];
        if mu[i] > 0.0 || rg < 0.0 {
            d[i] = -rg;
        }
    }
    d[u] = -d.iter().sum::<f64>();
    d
}

/// Largest step keeping `mu + gamma d >= 0` and the index that hits zero.
fn max_step(mu: &[f64], d: &[f64]) -> Option<(f64, usize)> {
    (0..mu.len())
        .filter(|&i| d[i] < 0.0)
        .map(|i| (-mu[i] / d[i], i))
        .min_by(|a, b| a.0.total_cmp(&b.0))
}

/// Reduced-gradient MKL starting from uniform weights. Each iteration keeps
/// the gradient of its starting point, takes full steps (each dropping one
/// weight to zero) while they decrease `J`, and finishes with a
/// golden-section search on the last segment.
pub fn learn_mkl(library: &dyn KernelLibrary, y: &[f64], config: &MklConfig) -> Result<MklResult> {
    let r = library.len();
    if r == 0 {
        return Err(Error::InvalidParameter("empty kernel library".into()));
    }
    if !(config.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {}", config.tol)));
    }
    let qp = QpConfig {
        c: config.c,
        ..config.qp.clone()
    };
    let mut current = evaluate(library, y, &qp, MklWeights::uniform(r).mu, None)?;
    let mut trace = vec![current.dual.objective];
    let mut converged = false;
    let mut gap = f64::INFINITY;
    let mut iterations = 0;

    while iterations < config.max_iter {
        iterations += 1;
        let w: Vec<f64> = current.dual.alpha.iter().zip(y).map(|(a, b)| a * b).collect();
        // dJ/dmu_r = -w^T K_r w / 2
        let grad: Vec<f64> = library.quadratic_forms(&w)?.iter().map(|q| -0.5 * q).collect();
        let j = current.dual.objective;
        let best_gain = grad.iter().fold(f64::NEG_INFINITY, |a, &g| a.max(-g));
        let mean_gain: f64 = grad.iter().zip(&current.mu).map(|(g, m)| -g * m).sum();
        gap = best_gain - mean_gain;
        if gap <= config.tol * j.abs().max(1.0) {
            converged = true;
            break;
        }

        let start_objective = j;
        loop {
            let d = reduced_direction(&current.mu, &grad);
            if d.iter().all(|&v| v == 0.0) {
                break;
            }
            let Some((gamma_max, zero)) = max_step(&current.mu, &d) else {
                break;
            };
            let warm = current.dual.alpha.clone();
            let full = evaluate(library, y, &qp, step_to(&current.mu, &d, gamma_max, Some(zero)), Some(&warm))?;
            if full.dual.objective < current.dual.objective {
                current = full;
                trace.push(current.dual.objective);
                continue;
            }
            // golden section on [0, gamma_max]
            let phi = 0.5 * (5f64.sqrt() - 1.0);
            let (mut lo, mut hi) = (0.0, gamma_max);
            let mut a = hi - phi * (hi - lo);
            let mut b = lo + phi * (hi - lo);
            let mut fa = evaluate(library, y, &qp, step_to(&current.mu, &d, a, None), Some(&warm))?;
            let mut fb = evaluate(library, y, &qp, step_to(&current.mu, &d, b, None), Some(&warm))?;
            for _ in 0..config.line_search_steps {
                if fa.dual.objective <= fb.dual.objective {
                    hi = b;
                    b = a;
                    fb = fa;
                    a = hi - phi * (hi - lo);
                    fa = evaluate(library, y, &qp, step_to(&current.mu, &d, a, None), Some(&warm))?;
                } else {
                    lo = a;
                    a = b;
                    fa = fb;
                    b = lo + phi * (hi - lo);
                    fb = evaluate(library, y, &qp, step_to(&current.mu, &d, b, None), Some(&warm))?;
                }
            }
            let cand = if fa.dual.objective <= fb.dual.objective { fa } else { fb };
            if cand.dual.objective < current.dual.objective {
                current = cand;
                trace.push(current.dual.objective);
            }
            break;
        }
        if current.dual.objective >= start_objective {
            // no decrease along the reduced gradient
            break;
        }
    }

    Ok(MklResult {
        weights: MklWeights { mu: current.mu },
        dual: current.dual,
        objective_trace: trace,
        iterations,
        converged,
        gap,
    })
}

/// MKL over explicit unsigned Gram matrices.
pub fn learn_mkl_grams(grams: Vec<DMatrix<f64>>, y: &[f64], config: &MklConfig) -> Result<MklResult> {
    let lib = GramLibrary::new(grams)?;
    learn_mkl(&lib, y, config)
}
