//! Seeded synthetic benchmarks. Point `i` consumes a fixed number of draws
//! in order, so a dataset of size `m` is a prefix of any larger dataset
//! generated with the same seed and parameters.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Dataset;
use crate::error::{Error, Result};

pub const CIRCLE_RADIUS: f64 = 0.75;

/// Uniform points in `[-1, 1]^2`, `+1` inside the circle of radius
/// `radius` (decided before noise is added).
pub fn generate_circle_with_radius(m: usize, noise: f64, radius: f64, seed: u64) -> Result<Dataset> {
    check_size(m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(m);
    let mut labels = Vec::with_capacity(m);
    for _ in 0..m {
        let x: f64 = rng.random_range(-1.0..=1.0);
        let y: f64 = rng.random_range(-1.0..=1.0);
        let label = if x.hypot(y) <= radius { 1.0 } else { -1.0 };
        let (ex, ey) = noise_pair(&mut rng, noise);
        rows.push(vec![x + ex, y + ey]);
        labels.push(label);
    }
    Ok(Dataset::from_rows(&rows, labels)?.with_feature_names(vec!["x".into(), "y".into()]))
}

pub fn generate_circle(m: usize, noise: f64, seed: u64) -> Result<Dataset> {
    generate_circle_with_radius(m, noise, CIRCLE_RADIUS, seed)
}

/// Two interleaved Archimedean arms `(a t cos t, a t sin t)` and its point
/// reflection, `t` uniform in `[pi/2, pi/2 + 2 pi turns]`. Even indices
/// lie on the `+1` arm. `a` is chosen so the outermost radius is 1.
pub fn generate_spiral(m: usize, noise: f64, turns: f64, seed: u64) -> Result<Dataset> {
    check_size(m)?;
    if !(turns > 0.0) {
        return Err(Error::InvalidParameter(format!("turns must be positive, got {turns}")));
    }
    let t_lo = PI / 2.0;
    let t_hi = t_lo + 2.0 * PI * turns;
    let a = 1.0 / t_hi;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(m);
    let mut labels = Vec::with_capacity(m);
    for i in 0..m {
        let t: f64 = rng.random_range(t_lo..=t_hi);
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let (ex, ey) = noise_pair(&mut rng, noise);
        rows.push(vec![sign * a * t * t.cos() + ex, sign * a * t * t.sin() + ey]);
        labels.push(sign);
    }
    Ok(Dataset::from_rows(&rows, labels)?.with_feature_names(vec!["x".into(), "y".into()]))
}

/// Default number of turns: `t` spans `[pi/2, 3 pi]`.
pub const SPIRAL_TURNS: f64 = 1.25;

fn noise_pair(rng: &mut ChaCha8Rng, sigma: f64) -> (f64, f64) {
    let a: f64 = StandardNormal.sample(rng);
    let b: f64 = StandardNormal.sample(rng);
    (sigma * a, sigma * b)
}

fn check_size(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 points, got {m}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_circle_labels_follow_radius() {
        let ds = generate_circle(200, 0.0, 4).unwrap();
        for i in 0..ds.len() {
            let r = ds.row(i);
            let inside = r[0].hypot(r[1]) <= CIRCLE_RADIUS;
            assert_eq!(ds.labels()[i] > 0.0, inside);
        }
        assert!(ds.has_both_classes());
    }

    #[test]
    fn spiral_arms_disjoint() {
        let ds = generate_spiral(150, 0.0, SPIRAL_TURNS, 2).unwrap();
        assert_eq!(ds.class_counts(), (75, 75));
        let rows = ds.rows();
        for i in 0..rows.len() {
            for j in 0..rows.len() {
                if ds.labels()[i] != ds.labels()[j] {
                    assert_ne!(rows[i], rows[j]);
                }
            }
        }
        assert!(rows.iter().all(|r| r[0].hypot(r[1]) <= 1.0 + 1e-12));
    }

    #[test]
    fn seeded_and_prefix_stable() {
        let a = generate_spiral(40, 0.05, SPIRAL_TURNS, 9).unwrap();
        let b = generate_spiral(80, 0.05, SPIRAL_TURNS, 9).unwrap();
        assert_eq!(a, generate_spiral(40, 0.05, SPIRAL_TURNS, 9).unwrap());
        assert_eq!(a.rows(), b.rows()[..40].to_vec());
        assert_ne!(a, generate_spiral(40, 0.05, SPIRAL_TURNS, 10).unwrap());
        let c = generate_circle(30, 0.1, 1).unwrap();
        assert_eq!(c, generate_circle(30, 0.1, 1).unwrap());
    }

    #[test]
    fn too_small_rejected() {
        assert!(generate_circle(1, 0.0, 0).is_err());
        assert!(generate_spiral(0, 0.0, 1.0, 0).is_err());
    }
}
