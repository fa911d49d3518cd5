//! Independent reference computations used by the integration tests and the
//! acceptance runner. Nothing here calls into the moment or kernel code paths
//! it is used to check.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use tesskern::qp::solve_svm_dual;
use tesskern::{BlockPMatrix, MonomialBasis, QpConfig, SignedGram};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Adaptive Simpson with Richardson correction.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 40)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // stop at the tolerance or once the difference is rounding noise
    if depth == 0 || delta.abs() <= 15.0 * tol || delta.abs() <= 64.0 * f64::EPSILON * (left.abs() + right.abs()) {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Piecewise adaptive Simpson over `[a, b]` split at `breaks`.
pub fn simpson_pieces(f: &dyn Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64], tol: f64) -> f64 {
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&v| v > a && v < b).collect();
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.windows(2).map(|w| simpson(f, w[0], w[1], tol)).sum()
}

fn monomial(z: &[f64], gamma: &[u32]) -> f64 {
    z.iter().zip(gamma).map(|(v, &e)| v.powi(e as i32)).product()
}

/// `∫ z^gamma` over `{z in [lower, upper] : z >= t}` by nested adaptive
/// quadrature over the whole box with an indicator (one or two dimensions).
pub fn quad_moment(lower: &[f64], upper: &[f64], t: &[f64], gamma: &[u32]) -> f64 {
    quad_region(lower, upper, t, &|z| monomial(z, gamma))
}

/// As [`quad_moment`] for `|z^gamma|`, the error scale when the integrand
/// changes sign.
pub fn quad_moment_abs(lower: &[f64], upper: &[f64], t: &[f64], gamma: &[u32]) -> f64 {
    quad_region(lower, upper, t, &|z| monomial(z, gamma).abs())
}

fn quad_region(lower: &[f64], upper: &[f64], t: &[f64], g: &dyn Fn(&[f64]) -> f64) -> f64 {
    let tol = 1e-15;
    let ind = |z: f64, i: usize| if z >= t[i] { 1.0 } else { 0.0 };
    match lower.len() {
        1 => {
            let f = |z: f64| ind(z, 0) * g(&[z]);
            simpson_pieces(&f, lower[0], upper[0], &[t[0], 0.0], tol)
        }
        2 => {
            let outer = |z0: f64| {
                if ind(z0, 0) == 0.0 {
                    return 0.0;
                }
                let inner = |z1: f64| ind(z1, 1) * g(&[z0, z1]);
                simpson_pieces(&inner, lower[1], upper[1], &[t[1], 0.0], tol)
            };
            simpson_pieces(&outer, lower[0], upper[0], &[t[0], 0.0], tol)
        }
        n => panic!("quadrature oracle supports one or two dimensions, got {n}"),
    }
}

/// Monte-Carlo estimate of `∫ z^gamma` over `{z in box : z >= t}`, sampling
/// uniformly in the region. Also returns the estimate of `∫ |z^gamma|`,
/// the natural scale of the error when the integrand changes sign.
pub fn mc_moment(rng: &mut ChaCha8Rng, lower: &[f64], upper: &[f64], t: &[f64], gamma: &[u32], samples: usize) -> (f64, f64) {
    let lo: Vec<f64> = lower.iter().zip(t).map(|(l, t)| l.max(*t)).collect();
    if lo.iter().zip(upper).any(|(l, u)| l >= u) {
        return (0.0, 0.0);
    }
    let vol: f64 = lo.iter().zip(upper).map(|(l, u)| u - l).product();
    let mut z = vec![0.0; lo.len()];
    let (mut sum, mut abs) = (0.0, 0.0);
    for _ in 0..samples {
        for i in 0..z.len() {
            z[i] = rng.random_range(lo[i]..upper[i]);
        }
        let v = monomial(&z, gamma);
        sum += v;
        abs += v.abs();
    }
    (vol * sum / samples as f64, vol * abs / samples as f64)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// `B B^T` with a Gaussian `n x rank` factor.
pub fn random_psd(rng: &mut ChaCha8Rng, n: usize, rank: usize) -> DMatrix<f64> {
    let b = gaussian_matrix(rng, n, rank);
    &b * b.transpose()
}

pub fn random_block_p(rng: &mut ChaCha8Rng, q_half: usize) -> BlockPMatrix {
    let rank = rng.random_range(1..=2 * q_half);
    BlockPMatrix::from_full(&random_psd(rng, 2 * q_half, rank)).unwrap()
}

pub fn random_points(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Vec<Vec<f64>> {
    (0..m).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect()
}

/// `N(z, x)^T P N(z, y)` straight from the definition, with
/// `N(z, x) = [Z(z,x) I(z >= x); Z(z,x) I(z !>= x)]`.
pub fn integrand(p: &DMatrix<f64>, basis: &MonomialBasis, z: &[f64], x: &[f64], y: &[f64]) -> f64 {
    let q = basis.len();
    let feature = |x: &[f64]| {
        let above = z.iter().zip(x).all(|(a, b)| a >= b);
        let offset = if above { 0 } else { q };
        let values: Vec<f64> = basis
            .elements()
            .iter()
            .map(|e| monomial(z, e.z_exp.exponents()) * monomial(x, e.x_exp.exponents()))
            .collect();
        (offset, values)
    };
    let (ox, vx) = feature(x);
    let (oy, vy) = feature(y);
    let mut total = 0.0;
    for k in 0..q {
        for l in 0..q {
            total += vx[k] * p[(ox + k, oy + l)] * vy[l];
        }
    }
    total
}

/// Kernel value by nested quadrature of the defining integral over the unit
/// box (one or two features).
pub fn direct_kernel(p: &BlockPMatrix, basis: &MonomialBasis, x: &[f64], y: &[f64]) -> f64 {
    let full = p.to_full();
    let tol = 1e-12;
    match x.len() {
        1 => {
            let f = |z: f64| integrand(&full, basis, &[z], x, y);
            simpson_pieces(&f, 0.0, 1.0, &[x[0], y[0]], tol)
        }
        2 => {
            let outer = |z0: f64| {
                let inner = |z1: f64| integrand(&full, basis, &[z0, z1], x, y);
                simpson_pieces(&inner, 0.0, 1.0, &[x[1], y[1]], tol)
            };
            simpson_pieces(&outer, 0.0, 1.0, &[x[0], y[0]], tol)
        }
        n => panic!("direct kernel oracle supports one or two features, got {n}"),
    }
}

/// Exhaustive active-set solution of
/// `max 1^T a - a^T H a / 2` s.t. `0 <= a <= c`, `y^T a = 0`:
/// every variable is at 0, at `c`, or free; the free block solves the KKT
/// system with the equality multiplier. Returns the best feasible objective
/// and its point.
pub fn active_set_qp(h: &DMatrix<f64>, y: &[f64], c: f64) -> (f64, Vec<f64>) {
    let m = y.len();
    let mut best = (f64::NEG_INFINITY, vec![0.0; m]);
    let patterns = 3usize.pow(m as u32);
    for code in 0..patterns {
        let mut state = vec![0u8; m];
        let mut rest = code;
        for s in state.iter_mut() {
            *s = (rest % 3) as u8;
            rest /= 3;
        }
        let free: Vec<usize> = (0..m).filter(|&i| state[i] == 2).collect();
        let mut alpha: Vec<f64> = state.iter().map(|&s| if s == 1 { c } else { 0.0 }).collect();
        let bound_eq: f64 = (0..m).filter(|&i| state[i] == 1).map(|i| y[i] * c).sum();
        if free.is_empty() {
            if bound_eq.abs() > 1e-12 * (1.0 + c) {
                continue;
            }
        } else {
            let f = free.len();
            let mut a = DMatrix::zeros(f + 1, f + 1);
            let mut rhs = DVector::zeros(f + 1);
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    a[(r, s)] = h[(i, j)];
                }
                a[(r, f)] = y[i];
                a[(f, r)] = y[i];
                rhs[r] = 1.0 - (0..m).map(|j| h[(i, j)] * alpha[j]).sum::<f64>();
            }
            rhs[f] = -bound_eq;
            let svd = a.clone().svd(true, true);
            let Ok(sol) = svd.solve(&rhs, 1e-12) else { continue };
            if (&a * &sol - &rhs).amax() > 1e-9 * (1.0 + rhs.amax()) {
                continue;
            }
            let tol = 1e-10 * (1.0 + c);
            if free.iter().enumerate().any(|(r, _)| sol[r] < -tol || sol[r] > c + tol) {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = sol[r].clamp(0.0, c);
            }
        }
        let a = DVector::from_column_slice(&alpha);
        let obj = a.sum() - 0.5 * (a.transpose() * h * &a)[(0, 0)];
        if obj > best.0 {
            best = (obj, alpha);
        }
    }
    best
}

/// `H_ij = y_i y_j K_ij`.
pub fn signed(k: &DMatrix<f64>, y: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(k.nrows(), k.ncols(), |i, j| y[i] * y[j] * k[(i, j)])
}

/// Random `±1` labels containing both classes.
pub fn random_labels(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    loop {
        let y: Vec<f64> = (0..m).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
        if y.contains(&1.0) && y.contains(&-1.0) {
            return y;
        }
    }
}

/// Ramp `(k(a, x) - k(a + h, x)) / h` of the one-feature Sobolev kernel
/// `k(x, y) = 1 - max(x, y)`: equal to 1 for `x <= a`, 0 for `x >= a + h`,
/// so it converges pointwise to the step `I(x <= a)` as `h -> 0`.
pub fn sobolev_step(k: &dyn Fn(f64, f64) -> f64, a: f64, h: f64, x: f64) -> f64 {
    (k(a, x) - k(a + h, x)) / h
}

pub fn unit_mean_diagonal(k: DMatrix<f64>) -> DMatrix<f64> {
    let s = k.nrows() as f64 / k.trace();
    k * s
}

/// A separable instance: an informative kernel built from the labels with
/// jittered magnitudes, and a kernel of pure noise features.
pub fn informative_and_noise(seed: u64, m: usize) -> (DMatrix<f64>, DMatrix<f64>, Vec<f64>) {
    let mut rng = rng(seed);
    let y: Vec<f64> = (0..m).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let signal: Vec<f64> = y.iter().map(|&v| v * (1.0 + 0.2 * rng.random::<f64>())).collect();
    let informative = DMatrix::from_fn(m, m, |i, j| signal[i] * signal[j]);
    let noise_features = gaussian_matrix(&mut rng, m, 5);
    let noise = &noise_features * noise_features.transpose();
    (unit_mean_diagonal(informative), unit_mean_diagonal(noise), y)
}

/// `argmin_mu J(mu)` over `mu in {0, 0.01, ..., 1}` for `mu K1 + (1 - mu) K2`.
/// `J` comes from the SVM solver, which is itself checked against
/// [`active_set_qp`].
pub fn grid_oracle(k1: &DMatrix<f64>, k2: &DMatrix<f64>, y: &[f64], c: f64) -> (f64, f64) {
    let mut best = (f64::NAN, f64::INFINITY);
    for i in 0..=100 {
        let mu = i as f64 / 100.0;
        let k = k1 * mu + k2 * (1.0 - mu);
        let j = solve_svm_dual(&SignedGram::unsigned(k), y, &QpConfig::new(c)).unwrap().objective;
        if j < best.1 {
            best = (mu, j);
        }
    }
    best
}
