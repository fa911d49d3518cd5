//! Integration domain and closed-form monomial moments over the orthant
//! regions that make up a tessellated kernel.
//!
//! For a pair of points `(x, y)` in the box, `z` ranges over four regions:
//!
//! * `z >= p*` where `p*_i = max(x_i, y_i)`,
//! * `z >= x`,
//! * `z >= y`,
//! * the whole box.
//!
//! The quadrant sets `X_11 .. X_22` (indexed by whether `z >= x` and
//! `z >= y` hold) follow by inclusion-exclusion from these four.

use serde::{Deserialize, Serialize};

use crate::basis::{MonomialBasis, MultiIndex};
use crate::error::{Error, Result};

/// Axis-aligned integration box `[lower, upper]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl DomainBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(Error::InvalidParameter("box must have at least one dimension".into()));
        }
        for (index, (&l, &u)) in lower.iter().zip(&upper).enumerate() {
            if !(l < u) || !l.is_finite() || !u.is_finite() {
                return Err(Error::InvalidBox {
                    index,
                    lower: l,
                    upper: u,
                });
            }
        }
        Ok(DomainBox { lower, upper })
    }

    /// `[0, 1]^n`.
    pub fn unit(n: usize) -> Self {
        DomainBox {
            lower: vec![0.0; n],
            upper: vec![1.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).product()
    }

    /// True when every monomial is non-negative on the box.
    pub fn in_nonnegative_orthant(&self) -> bool {
        self.lower.iter().all(|&l| l >= 0.0)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&l, &u))| v >= l && v <= u)
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        for (index, (&v, (&l, &u))) in x.iter().zip(self.lower.iter().zip(&self.upper)).enumerate() {
            if !(v >= l && v <= u) {
                return Err(Error::OutsideBox {
                    index,
                    value: v,
                    lower: l,
                    upper: u,
                });
            }
        }
        Ok(())
    }

    /// Clamps `x` into the box, returning the number of clamped components.
    pub fn clamp(&self, x: &mut [f64]) -> usize {
        let mut count = 0;
        for (v, (&l, &u)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            if *v < l {
                *v = l;
                count += 1;
            } else if *v > u {
                *v = u;
                count += 1;
            }
        }
        count
    }
}

/// `∫ z^gamma dz` over `{z in box : z_i >= t_i}`.
pub fn box_moment(domain: &DomainBox, t: &[f64], gamma: &MultiIndex) -> Result<f64> {
    if t.len() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: domain.dim(),
            got: t.len(),
        });
    }
    if gamma.len() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: domain.dim(),
            got: gamma.len(),
        });
    }
    Ok(box_moment_unchecked(domain, t, gamma.exponents()))
}

pub(crate) fn box_moment_unchecked(domain: &DomainBox, t: &[f64], gamma: &[u32]) -> f64 {
    let mut acc = 1.0;
    for i in 0..gamma.len() {
        let u = domain.upper[i];
        let c = t[i].clamp(domain.lower[i], u);
        if c >= u {
            return 0.0;
        }
        let p = gamma[i] as i32 + 1;
        acc *= (u.powi(p) - c.powi(p)) / p as f64;
    }
    acc
}

/// Moments of every distinct z-exponent over `z >= t` (one entry per gamma).
pub(crate) fn moments_above(domain: &DomainBox, basis: &MonomialBasis, t: &[f64]) -> Vec<f64> {
    basis
        .gammas()
        .iter()
        .map(|g| box_moment_unchecked(domain, t, g.exponents()))
        .collect()
}

/// Whole-box moments of every distinct z-exponent.
pub(crate) fn moments_whole(domain: &DomainBox, basis: &MonomialBasis) -> Vec<f64> {
    moments_above(domain, basis, domain.lower())
}

/// Region moments for one point pair, stored per distinct z-exponent
/// (see [`MonomialBasis::gammas`]).
#[derive(Clone, Debug, PartialEq)]
pub struct RegionMoments {
    /// `∫_{z >= max(x, y)} z^gamma`.
    pub p_star: Vec<f64>,
    /// `∫_{z >= x} z^gamma`.
    pub above_x: Vec<f64>,
    /// `∫_{z >= y} z^gamma`.
    pub above_y: Vec<f64>,
    /// `∫_box z^gamma`.
    pub whole: Vec<f64>,
    clamp_negative: bool,
}

/// Moments over the four quadrant sets `X_11, X_12, X_21, X_22`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadrantMoments {
    pub x11: f64,
    pub x12: f64,
    pub x21: f64,
    pub x22: f64,
}

impl RegionMoments {
    pub(crate) fn from_parts(
        p_star: Vec<f64>,
        above_x: Vec<f64>,
        above_y: Vec<f64>,
        whole: Vec<f64>,
        clamp_negative: bool,
    ) -> Self {
        RegionMoments {
            p_star,
            above_x,
            above_y,
            whole,
            clamp_negative,
        }
    }

    /// The four region moments `(p*, x, y, box)` for basis pair `(k, l)`.
    pub fn pair(&self, basis: &MonomialBasis, k: usize, l: usize) -> [f64; 4] {
        let g = basis.gamma_index(k, l);
        [self.p_star[g], self.above_x[g], self.above_y[g], self.whole[g]]
    }

    /// Quadrant moments for gamma index `g` by inclusion-exclusion.
    pub fn quadrants(&self, g: usize) -> QuadrantMoments {
        quadrants_from(
            self.p_star[g],
            self.above_x[g],
            self.above_y[g],
            self.whole[g],
            self.clamp_negative,
        )
    }

    /// Swaps the roles of `x` and `y`.
    pub fn swapped(&self) -> RegionMoments {
        RegionMoments {
            p_star: self.p_star.clone(),
            above_x: self.above_y.clone(),
            above_y: self.above_x.clone(),
            whole: self.whole.clone(),
            clamp_negative: self.clamp_negative,
        }
    }
}

#[inline]
pub(crate) fn quadrants_from(mp: f64, mx: f64, my: f64, mb: f64, clamp: bool) -> QuadrantMoments {
    let fix = |v: f64| if clamp && v < 0.0 { 0.0 } else { v };
    QuadrantMoments {
        x11: fix(mp),
        x12: fix(mx - mp),
        x21: fix(my - mp),
        x22: fix(mb - mx - my + mp),
    }
}

/// Computes the four region moments of every distinct z-exponent for `(x, y)`.
pub fn region_moment_terms(
    basis: &MonomialBasis,
    domain: &DomainBox,
    x: &[f64],
    y: &[f64],
) -> Result<RegionMoments> {
    check_compatible(basis, domain)?;
    domain.check_point(x)?;
    domain.check_point(y)?;
    let p: Vec<f64> = x.iter().zip(y).map(|(a, b)| a.max(*b)).collect();
    Ok(RegionMoments::from_parts(
        moments_above(domain, basis, &p),
        moments_above(domain, basis, x),
        moments_above(domain, basis, y),
        moments_whole(domain, basis),
        domain.in_nonnegative_orthant(),
    ))
}

pub(crate) fn check_compatible(basis: &MonomialBasis, domain: &DomainBox) -> Result<()> {
    if basis.n() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.n(),
            got: domain.dim(),
        });
    }
    Ok(())
}

/// Indicator `I_{S_1}(z, x)`: `z >= x` componentwise.
pub fn dominates(z: &[f64], x: &[f64]) -> bool {
    z.iter().zip(x).all(|(a, b)| a >= b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    #[test]
    fn moment_examples() {
        let unit1 = DomainBox::unit(1);
        let unit2 = DomainBox::unit(2);
        assert_eq!(box_moment(&unit1, &[0.5], &mi(&[0])).unwrap(), 0.5);
        assert_eq!(box_moment(&unit2, &[0.0, 0.0], &mi(&[1, 1])).unwrap(), 0.25);
        // (1 - 0.125) / 3
        let v = box_moment(&unit1, &[0.5], &mi(&[2])).unwrap();
        assert!((v - 0.291_666_666_666_666_6).abs() < 1e-15);
        assert_eq!(box_moment(&unit1, &[1.5], &mi(&[0])).unwrap(), 0.0);
        // threshold below the box integrates the whole side
        assert_eq!(box_moment(&unit1, &[-3.0], &mi(&[0])).unwrap(), 1.0);
    }

    #[test]
    fn moment_dimension_mismatch() {
        let unit2 = DomainBox::unit(2);
        assert!(matches!(
            box_moment(&unit2, &[0.5], &mi(&[0, 0])),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(box_moment(&unit2, &[0.5, 0.5], &mi(&[0])).is_err());
    }

    #[test]
    fn invalid_box_rejected() {
        assert!(DomainBox::new(vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(DomainBox::new(vec![0.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn interval_lengths_one_feature() {
        let basis = MonomialBasis::enumerate(1, 0);
        let r = region_moment_terms(&basis, &DomainBox::unit(1), &[0.2], &[0.6]).unwrap();
        let [mp, mx, my, mb] = r.pair(&basis, 0, 0);
        assert!((mp - 0.4).abs() < 1e-15);
        assert!((mx - 0.8).abs() < 1e-15);
        assert!((my - 0.4).abs() < 1e-15);
        assert_eq!(mb, 1.0);
    }

    #[test]
    fn equal_points_share_tensors() {
        let basis = MonomialBasis::enumerate(2, 2);
        let x = [0.3, 0.7];
        let r = region_moment_terms(&basis, &DomainBox::unit(2), &x, &x).unwrap();
        assert_eq!(r.p_star, r.above_x);
        assert_eq!(r.above_x, r.above_y);
    }

    #[test]
    fn outside_point_rejected() {
        let basis = MonomialBasis::enumerate(1, 1);
        let err = region_moment_terms(&basis, &DomainBox::unit(1), &[1.2], &[0.5]).unwrap_err();
        assert!(matches!(err, Error::OutsideBox { .. }));
    }

    #[test]
    fn swap_exchanges_x_and_y() {
        let basis = MonomialBasis::enumerate(2, 1);
        let d = DomainBox::unit(2);
        let a = [0.1, 0.8];
        let b = [0.6, 0.3];
        let ab = region_moment_terms(&basis, &d, &a, &b).unwrap();
        let ba = region_moment_terms(&basis, &d, &b, &a).unwrap();
        assert_eq!(ab.swapped(), ba);
    }

    #[test]
    fn quadrants_nonnegative_and_sum_to_box() {
        let basis = MonomialBasis::enumerate(2, 2);
        let d = DomainBox::unit(2);
        let r = region_moment_terms(&basis, &d, &[0.1, 0.9], &[0.5, 0.4]).unwrap();
        for g in 0..basis.gammas().len() {
            let q = r.quadrants(g);
            assert!(q.x11 >= 0.0 && q.x12 >= 0.0 && q.x21 >= 0.0 && q.x22 >= 0.0);
            let total = q.x11 + q.x12 + q.x21 + q.x22;
            assert!((total - r.whole[g]).abs() < 1e-14);
        }
    }
}
