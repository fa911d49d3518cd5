mod common;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use tesskern::learner::mkl::{generate_random_psd_basis, GramLibrary, KernelLibrary, TessellatedLibrary};
use tesskern::learner::{learn_mkl, learn_mkl_grams, precompute_moments, MklConfig};
use tesskern::qp::solve_svm_dual;
use tesskern::{DomainBox, Kernel, MonomialBasis, QpConfig, SignedGram};

#[test]
fn single_kernel_is_a_plain_svm() {
    let mut rng = common::rng(2);
    for trial in 0..10 {
        let m = 12;
        let k = common::random_psd(&mut rng, m, 4 + trial % 5);
        let y = common::random_labels(&mut rng, m);
        for c in [0.1, 1.0, 10.0] {
            let cfg = MklConfig { c, ..MklConfig::default() };
            let res = learn_mkl_grams(vec![k.clone()], &y, &cfg).unwrap();
            let plain = solve_svm_dual(&SignedGram::unsigned(k.clone()), &y, &QpConfig::new(c)).unwrap();
            assert_eq!(res.weights.mu, vec![1.0]);
            assert!((res.dual.objective - plain.objective).abs() <= 1e-9 * (1.0 + plain.objective.abs()));
        }
    }
}

#[test]
fn weight_concentrates_on_the_informative_kernel() {
    for seed in 0..5 {
        let (k1, k2, y) = common::informative_and_noise(seed, 24);
        let c = 1.0;
        let res = learn_mkl_grams(vec![k1.clone(), k2.clone()], &y, &MklConfig { c, ..MklConfig::default() }).unwrap();
        let (mu_grid, j_grid) = common::grid_oracle(&k1, &k2, &y, c);
        let mu = res.weights.mu[0];
        assert!(mu >= 0.9, "seed {seed}: mu = {mu}");
        assert!((mu - mu_grid).abs() <= 0.01 + 1e-9, "seed {seed}: mu = {mu}, grid {mu_grid}");
        assert!(res.dual.objective <= j_grid + 1e-6 * (1.0 + j_grid));
    }
}

#[test]
fn objective_never_increases() {
    let mut rng = common::rng(17);
    let m = 20;
    let grams: Vec<DMatrix<f64>> = (0..6).map(|r| common::unit_mean_diagonal(common::random_psd(&mut rng, m, 2 + r))).collect();
    let y = common::random_labels(&mut rng, m);
    let res = learn_mkl_grams(grams, &y, &MklConfig { c: 10.0, ..MklConfig::default() }).unwrap();
    assert!(res.objective_trace.windows(2).all(|w| w[1] <= w[0]));
    let sum: f64 = res.weights.mu.iter().sum();
    assert!((sum - 1.0).abs() < 1e-12);
    assert!(res.weights.mu.iter().all(|&v| v >= 0.0));
}

#[test]
fn tessellated_library_matches_explicit_grams() {
    let mut rng = common::rng(5);
    let basis = MonomialBasis::enumerate(2, 1);
    let dom = DomainBox::unit(2);
    let pts = common::random_points(&mut rng, 14, 2);
    let y = common::random_labels(&mut rng, 14);
    let cache = precompute_moments(&pts, &basis, &dom).unwrap();
    let rb = generate_random_psd_basis(basis.len(), 5, 2.0 * basis.len() as f64, 3).unwrap();
    let lib = TessellatedLibrary::new(&cache, &rb.matrices).unwrap();

    // each member, evaluated directly and normalized to unit mean diagonal
    let explicit: Vec<DMatrix<f64>> = rb
        .matrices
        .iter()
        .map(|p| {
            let k = tesskern::TessellatedKernel::from_p(basis.clone(), dom.clone(), p.clone()).unwrap();
            common::unit_mean_diagonal(k.gram(&pts, None).unwrap().entries)
        })
        .collect();
    let w: Vec<f64> = (0..14).map(|_| rng.random_range(-1.0..1.0)).collect();
    let wv = DVector::from_column_slice(&w);
    let forms = lib.quadratic_forms(&w).unwrap();
    for (g, f) in explicit.iter().zip(&forms) {
        let want = (wv.transpose() * g * &wv)[(0, 0)];
        assert!((f - want).abs() <= 1e-10 * (1.0 + want.abs()));
    }
    let mu = [0.1, 0.4, 0.2, 0.0, 0.3];
    let combined = lib.combined_gram(&mu).unwrap();
    let want = explicit.iter().zip(&mu).fold(DMatrix::zeros(14, 14), |acc, (g, m)| acc + g * *m);
    assert!((combined - &want).amax() <= 1e-10 * (1.0 + want.amax()));

    // the combined kernel behaves like the explicit mixture
    let explicit_lib = GramLibrary::new(explicit).unwrap();
    let cfg = MklConfig { c: 5.0, ..MklConfig::default() };
    let a = learn_mkl(&lib, &y, &cfg).unwrap();
    let b = learn_mkl(&explicit_lib, &y, &cfg).unwrap();
    assert!((a.dual.objective - b.dual.objective).abs() <= 1e-6 * (1.0 + b.dual.objective.abs()));
}
