mod common;

use nalgebra::DVector;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tesskern::learner::eig::top_eig;
use tesskern::learner::moments::p_dot;
use tesskern::learner::{assemble_m, learn_saddle, precompute_moments, saddle_value, LearnerConfig};
use tesskern::qp::project_box_hyperplane;
use tesskern::{Dataset, DomainBox, Kernel, MonomialBasis, TessellatedKernel};

fn feasible_alpha(rng: &mut ChaCha8Rng, y: &[f64], c: f64) -> Vec<f64> {
    let raw: Vec<f64> = y.iter().map(|_| rng.random_range(0.0..c)).collect();
    project_box_hyperplane(&raw, c, y).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn trace_of_p_times_m_is_the_signed_quadratic_form(n in 1usize..=2, d in 0u32..=2, seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let m = 8;
        let basis = MonomialBasis::enumerate(n, d);
        let dom = DomainBox::unit(n);
        let pts = common::random_points(&mut rng, m, n);
        let y = common::random_labels(&mut rng, m);
        let cache = precompute_moments(&pts, &basis, &dom).unwrap();
        let p = common::random_block_p(&mut rng, basis.len());
        let alpha = feasible_alpha(&mut rng, &y, 2.0);
        let lhs = p_dot(&p, &assemble_m(&alpha, &y, &cache).unwrap());
        // right side from pointwise evaluation of the quadrant form
        let mut rhs = 0.0;
        for i in 0..m {
            for j in 0..m {
                let k = p.eval(&basis, &dom, &pts[i], &pts[j]).unwrap();
                rhs += alpha[i] * alpha[j] * y[i] * y[j] * k;
            }
        }
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1e-12), "{lhs} vs {rhs}");
    }

    #[test]
    fn m_is_positive_semidefinite(n in 1usize..=3, d in 0u32..=1, seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let basis = MonomialBasis::enumerate(n, d);
        let pts = common::random_points(&mut rng, 10, n);
        let y = common::random_labels(&mut rng, 10);
        let cache = precompute_moments(&pts, &basis, &DomainBox::unit(n)).unwrap();
        let mm = assemble_m(&feasible_alpha(&mut rng, &y, 1.0), &y, &cache).unwrap();
        let min = mm.clone().symmetric_eigen().eigenvalues.min();
        prop_assert!(min >= -1e-10 * mm.trace().abs().max(1e-12));
    }

    #[test]
    fn top_eigenpair_matches_dense_solver(size in 1usize..=12, seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let rank = rng.random_range(1..=size);
        let a = common::random_psd(&mut rng, size, rank);
        let (lambda, v) = top_eig(&a).unwrap();
        let dense = a.clone().symmetric_eigen();
        let want = dense.eigenvalues.max();
        prop_assert!((lambda - want).abs() <= 1e-10 * want.abs().max(1.0));
        prop_assert!((v.norm() - 1.0).abs() < 1e-10);
        let resid = (&a * &v - &v * lambda).norm();
        prop_assert!(resid <= 1e-8 * want.abs().max(1.0));
    }

    #[test]
    fn saddle_objective_is_concave(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let basis = MonomialBasis::enumerate(2, 1);
        let pts = common::random_points(&mut rng, 10, 2);
        let y = common::random_labels(&mut rng, 10);
        let cache = precompute_moments(&pts, &basis, &DomainBox::unit(2)).unwrap();
        let c = 2.0 * basis.len() as f64;
        let a = feasible_alpha(&mut rng, &y, 1.0);
        let b = feasible_alpha(&mut rng, &y, 1.0);
        let t: f64 = rng.random();
        let mid: Vec<f64> = a.iter().zip(&b).map(|(u, v)| t * u + (1.0 - t) * v).collect();
        let (fa, _) = saddle_value(&a, &y, &cache, c).unwrap();
        let (fb, _) = saddle_value(&b, &y, &cache, c).unwrap();
        let (fm, _) = saddle_value(&mid, &y, &cache, c).unwrap();
        prop_assert!(fm >= t * fa + (1.0 - t) * fb - 1e-9 * (1.0 + fa.abs() + fb.abs()));
    }
}

#[test]
fn saddle_value_bounds_every_feasible_kernel() {
    // phi(a) = sum a - (c/2) max_P <P, M(a)> over PSD P with trace c, so
    // it never exceeds sum a - a^T Y K_P Y a / 2 for any such P
    let mut rng = common::rng(4);
    let basis = MonomialBasis::enumerate(1, 1);
    let pts = common::random_points(&mut rng, 12, 1);
    let y = common::random_labels(&mut rng, 12);
    let cache = precompute_moments(&pts, &basis, &DomainBox::unit(1)).unwrap();
    let c = 2.0 * basis.len() as f64;
    for _ in 0..20 {
        let a = feasible_alpha(&mut rng, &y, 1.0);
        let (phi, v) = saddle_value(&a, &y, &cache, c).unwrap();
        let mm = assemble_m(&a, &y, &cache).unwrap();
        let sum: f64 = a.iter().sum();
        let mut p = common::random_psd(&mut rng, 2 * basis.len(), 3);
        p *= c / p.trace();
        assert!(phi <= sum - 0.5 * p.component_mul(&mm).sum() + 1e-9);
        // the top eigenvector attains the bound
        let best = &v * v.transpose() * c;
        assert!((phi - (sum - 0.5 * best.component_mul(&mm).sum())).abs() < 1e-9 * (1.0 + phi.abs()));
    }
}

#[test]
fn four_alternating_points_are_separated() {
    let rows = vec![vec![0.1], vec![0.35], vec![0.6], vec![0.85]];
    let train = Dataset::from_rows(&rows, vec![1.0, -1.0, 1.0, -1.0]).unwrap();
    let cfg = LearnerConfig {
        degree: 0,
        c: 10.0,
        ..LearnerConfig::default()
    };
    let out = learn_saddle(&train, &cfg).unwrap();
    // d = 0, one feature: P is 2 x 2, so four decision variables
    assert_eq!(out.kernel.to_p().to_full().len(), 4);
    let k = &out.kernel;
    for (i, x) in rows.iter().enumerate() {
        let mut f = out.dual.bias;
        for (j, xj) in rows.iter().enumerate() {
            f += out.dual.alpha[j] * train.labels()[j] * k.eval(xj, x).unwrap();
        }
        assert!(f * train.labels()[i] > 0.0, "point {i}: f = {f}");
    }
}

#[test]
fn learned_objective_dominates_the_saddle_value() {
    let mut rng = common::rng(8);
    let pts = common::random_points(&mut rng, 30, 2);
    let labels: Vec<f64> = pts
        .iter()
        .map(|p| if (p[0] - 0.5).powi(2) + (p[1] - 0.5).powi(2) < 0.1 { 1.0 } else { -1.0 })
        .collect();
    let train = Dataset::from_rows(&pts, labels).unwrap();
    let cfg = LearnerConfig {
        c: 10.0,
        max_outer_iter: 400,
        ..LearnerConfig::default()
    };
    let out = learn_saddle(&train, &cfg).unwrap();
    let phi_best = out.state.best_value;
    // weak duality: the SVM optimum on any feasible kernel is at least phi
    assert!(out.dual.objective >= phi_best - 1e-6 * (1.0 + phi_best.abs()));
    // the best value never decreases along the trace
    let mut running = f64::NEG_INFINITY;
    for v in &out.phi_trace {
        running = running.max(*v);
    }
    assert!((running - phi_best).abs() <= 1e-12 * (1.0 + phi_best.abs()));
    // and the re-solved kernel has the requested trace
    assert!((out.kernel.to_p().trace() - out.trace_bound).abs() < 1e-9 * out.trace_bound);

    // deterministic
    let again = learn_saddle(&train, &cfg).unwrap();
    assert_eq!(again.dual.alpha, out.dual.alpha);
    assert_eq!(again.phi_trace, out.phi_trace);
}

#[test]
fn single_class_training_set_is_rejected() {
    let train = Dataset::from_rows(&[vec![0.1], vec![0.5]], vec![1.0, 1.0]).unwrap();
    assert!(learn_saddle(&train, &LearnerConfig::default()).is_err());
}

#[test]
fn cached_gram_matches_direct_evaluation() {
    let mut rng = common::rng(13);
    let basis = MonomialBasis::enumerate(2, 2);
    let dom = DomainBox::unit(2);
    let pts = common::random_points(&mut rng, 15, 2);
    let cache = precompute_moments(&pts, &basis, &dom).unwrap();
    let p = common::random_block_p(&mut rng, basis.len());
    let k = TessellatedKernel::from_p(basis, dom, p).unwrap();
    let a = cache.gram(&k).unwrap();
    let b = k.gram(&pts, None).unwrap().entries;
    assert!((&a - &b).amax() <= 1e-12 * (1.0 + b.amax()));
    let w: Vec<f64> = (0..15).map(|i| (i as f64).sin()).collect();
    let prod = cache.gram_times(&k, &w).unwrap();
    let want: DVector<f64> = &b * DVector::from_column_slice(&w);
    assert!((prod - want).amax() <= 1e-11 * (1.0 + b.amax()));
}
