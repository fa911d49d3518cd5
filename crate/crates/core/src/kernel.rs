//! Tessellated kernels `k(x, y) = ∫ N(z,x)^T P N(z,y) dz` with
//! `N(z, x) = [Z_d(z,x) I(z >= x); Z_d(z,x) I(z !>= x)]`.
//!
//! Kernels are stored in the four-region form
//!
//! ```text
//! k(x,y) = sum_kl x^a_k y^a_l [ Q1_kl m_{z>=p*} + Q2_kl m_{z>=x} + Q3_kl m_{z>=y} + Q4_kl m_box ]
//! ```
//!
//! where `m_R` is the moment of `z^(b_k + b_l)` over region `R`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::basis::MonomialBasis;
use crate::error::{Error, Result};
use crate::linalg::{self, PSD_TOL};
use crate::region::{self, DomainBox, RegionMoments};

/// Anything that can be evaluated on a pair of points in scaled feature space.
pub trait Kernel: Send + Sync {
    fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64>;

    /// Unsigned or label-signed Gram matrix. The default evaluates every
    /// entry of the upper triangle independently.
    fn gram(&self, points: &[Vec<f64>], labels: Option<&[f64]>) -> Result<SignedGram> {
        if let Some(y) = labels {
            if y.len() != points.len() {
                return Err(Error::DimensionMismatch {
                    expected: points.len(),
                    got: y.len(),
                });
            }
        }
        let m = points.len();
        let rows: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|i| {
                (i..m)
                    .map(|j| self.eval(&points[i], &points[j]))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        Ok(SignedGram::from_upper_rows(m, &rows, labels))
    }
}

/// Symmetric Gram matrix, optionally carrying the `y_i y_j` factor.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedGram {
    pub entries: DMatrix<f64>,
    pub label_signed: bool,
}

impl SignedGram {
    pub(crate) fn from_upper_rows(m: usize, rows: &[Vec<f64>], labels: Option<&[f64]>) -> Self {
        let mut entries = DMatrix::zeros(m, m);
        for (i, row) in rows.iter().enumerate() {
            for (offset, &v) in row.iter().enumerate() {
                let j = i + offset;
                let v = match labels {
                    Some(y) => v * y[i] * y[j],
                    None => v,
                };
                entries[(i, j)] = v;
                entries[(j, i)] = v;
            }
        }
        SignedGram {
            entries,
            label_signed: labels.is_some(),
        }
    }

    pub fn unsigned(entries: DMatrix<f64>) -> Self {
        SignedGram {
            entries,
            label_signed: false,
        }
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    /// Applies (or removes; the operation is an involution) the `y_i y_j` factor.
    pub fn toggle_labels(&self, y: &[f64]) -> SignedGram {
        let m = self.size();
        let entries = DMatrix::from_fn(m, m, |i, j| self.entries[(i, j)] * y[i] * y[j]);
        SignedGram {
            entries,
            label_signed: !self.label_signed,
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.entries)
    }
}

/// The stacked PSD matrix `P = [P11 P12; P21 P22]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockPMatrix {
    pub p11: DMatrix<f64>,
    pub p12: DMatrix<f64>,
    pub p21: DMatrix<f64>,
    pub p22: DMatrix<f64>,
}

impl BlockPMatrix {
    /// Splits a `2q x 2q` matrix into blocks without validation.
    pub fn from_full(p: &DMatrix<f64>) -> Result<Self> {
        linalg::check_square(p)?;
        if p.nrows() % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "block matrix must have even size, got {}",
                p.nrows()
            )));
        }
        let q = p.nrows() / 2;
        Ok(BlockPMatrix {
            p11: p.view((0, 0), (q, q)).into_owned(),
            p12: p.view((0, q), (q, q)).into_owned(),
            p21: p.view((q, 0), (q, q)).into_owned(),
            p22: p.view((q, q), (q, q)).into_owned(),
        })
    }

    pub fn zeros(q_half: usize) -> Self {
        let z = DMatrix::zeros(q_half, q_half);
        BlockPMatrix {
            p11: z.clone(),
            p12: z.clone(),
            p21: z.clone(),
            p22: z,
        }
    }

    pub fn identity(q_half: usize) -> Self {
        let mut p = Self::zeros(q_half);
        p.p11 = DMatrix::identity(q_half, q_half);
        p.p22 = DMatrix::identity(q_half, q_half);
        p
    }

    pub fn q_half(&self) -> usize {
        self.p11.nrows()
    }

    pub fn to_full(&self) -> DMatrix<f64> {
        let q = self.q_half();
        let mut p = DMatrix::zeros(2 * q, 2 * q);
        p.view_mut((0, 0), (q, q)).copy_from(&self.p11);
        p.view_mut((0, q), (q, q)).copy_from(&self.p12);
        p.view_mut((q, 0), (q, q)).copy_from(&self.p21);
        p.view_mut((q, q), (q, q)).copy_from(&self.p22);
        p
    }

    pub fn trace(&self) -> f64 {
        self.p11.trace() + self.p22.trace()
    }

    /// Symmetry and positive-semidefiniteness within [`PSD_TOL`].
    pub fn validate(&self) -> Result<()> {
        let q = self.q_half();
        for b in [&self.p12, &self.p21, &self.p22] {
            if b.nrows() != q || b.ncols() != q {
                return Err(Error::DimensionMismatch {
                    expected: q,
                    got: b.nrows(),
                });
            }
        }
        linalg::check_psd(&self.to_full(), PSD_TOL)
    }

    /// Evaluates the kernel directly from the four quadrant sets:
    /// `sum_ij ∫_{X_ij} Z_d(z,x)^T P_ij Z_d(z,y) dz`.
    pub fn eval(
        &self,
        basis: &MonomialBasis,
        domain: &DomainBox,
        x: &[f64],
        y: &[f64],
    ) -> Result<f64> {
        self.check_basis(basis)?;
        let moments = region::region_moment_terms(basis, domain, x, y)?;
        let xm = basis.x_monomials(x);
        let ym = basis.x_monomials(y);
        let q = basis.len();
        let mut total = 0.0;
        for k in 0..q {
            for l in 0..q {
                let quad = moments.quadrants(basis.gamma_index(k, l));
                let s = self.p11[(k, l)] * quad.x11
                    + self.p12[(k, l)] * quad.x12
                    + self.p21[(k, l)] * quad.x21
                    + self.p22[(k, l)] * quad.x22;
                total += xm[k] * ym[l] * s;
            }
        }
        Ok(total)
    }

    fn check_basis(&self, basis: &MonomialBasis) -> Result<()> {
        if self.q_half() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                got: self.q_half(),
            });
        }
        Ok(())
    }
}

/// Evaluates the kernel from `P` blocks and quadrant moments.
pub fn kernel_eval_pform(
    p: &BlockPMatrix,
    basis: &MonomialBasis,
    domain: &DomainBox,
    x: &[f64],
    y: &[f64],
) -> Result<f64> {
    p.eval(basis, domain, x, y)
}

/// A tessellated kernel in region form.
#[derive(Clone, Debug, PartialEq)]
pub struct TessellatedKernel {
    basis: MonomialBasis,
    domain: DomainBox,
    q1: DMatrix<f64>,
    q2: DMatrix<f64>,
    q3: DMatrix<f64>,
    q4: DMatrix<f64>,
    psd_certificate: Option<BlockPMatrix>,
    whole: Vec<f64>,
}

impl TessellatedKernel {
    /// Builds a kernel from region-form coefficients.
    ///
    /// `q1` and `q4` must be symmetric and `q3` must equal `q2^T`.
    pub fn new(
        basis: MonomialBasis,
        domain: DomainBox,
        q1: DMatrix<f64>,
        q2: DMatrix<f64>,
        q3: DMatrix<f64>,
        q4: DMatrix<f64>,
    ) -> Result<Self> {
        region::check_compatible(&basis, &domain)?;
        let q = basis.len();
        for m in [&q1, &q2, &q3, &q4] {
            if m.nrows() != q || m.ncols() != q {
                return Err(Error::DimensionMismatch {
                    expected: q,
                    got: m.nrows(),
                });
            }
        }
        linalg::check_symmetric(&q1, 1e-12)?;
        linalg::check_symmetric(&q4, 1e-12)?;
        let scale = 1.0 + q2.amax();
        let asym = (&q3 - q2.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(Error::NotSymmetric(asym));
        }
        let whole = region::moments_whole(&domain, &basis);
        Ok(TessellatedKernel {
            basis,
            domain,
            q1,
            q2,
            q3,
            q4,
            psd_certificate: None,
            whole,
        })
    }

    /// Maps a PSD block matrix to region form:
    /// `Q1 = P11 - P12 - P21 + P22`, `Q2 = P12 - P22`, `Q3 = P21 - P22`, `Q4 = P22`.
    pub fn from_p(basis: MonomialBasis, domain: DomainBox, p: BlockPMatrix) -> Result<Self> {
        p.check_basis(&basis)?;
        p.validate()?;
        let q1 = &p.p11 - &p.p12 - &p.p21 + &p.p22;
        let q2 = &p.p12 - &p.p22;
        let q3 = &p.p21 - &p.p22;
        let q4 = p.p22.clone();
        let mut kernel = Self::new(basis, domain, q1, q2, q3, q4)?;
        kernel.psd_certificate = Some(p);
        Ok(kernel)
    }

    /// Inverse of the region-form map. A kernel built by [`from_p`](Self::from_p)
    /// returns its `P` unchanged; otherwise the blocks are recovered
    /// arithmetically from the region form.
    pub fn to_p(&self) -> BlockPMatrix {
        if let Some(p) = &self.psd_certificate {
            return p.clone();
        }
        self.to_p_arithmetic()
    }

    /// `P11 = Q1 + Q2 + Q3 + Q4`, `P12 = Q2 + Q4`, `P21 = Q3 + Q4`, `P22 = Q4`.
    pub fn to_p_arithmetic(&self) -> BlockPMatrix {
        let p22 = self.q4.clone();
        let p12 = &self.q2 + &self.q4;
        let p21 = &self.q3 + &self.q4;
        let p11 = &self.q1 + &self.q2 + &self.q3 + &self.q4;
        BlockPMatrix { p11, p12, p21, p22 }
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn q(&self) -> [&DMatrix<f64>; 4] {
        [&self.q1, &self.q2, &self.q3, &self.q4]
    }

    pub fn psd_certificate(&self) -> Option<&BlockPMatrix> {
        self.psd_certificate.as_ref()
    }

    /// Attaches a certificate without recomputing the region form; the
    /// caller guarantees `self` is the image of `p`.
    pub(crate) fn with_certificate(mut self, p: BlockPMatrix) -> Self {
        self.psd_certificate = Some(p);
        self
    }

    pub fn eval_moments(&self, xm: &[f64], ym: &[f64], moments: &RegionMoments) -> f64 {
        self.combine(xm, ym, &moments.p_star, &moments.above_x, &moments.above_y)
    }

    /// Core region-form sum given x/y monomials and per-gamma moments.
    #[inline]
    pub(crate) fn combine(&self, xm: &[f64], ym: &[f64], mp: &[f64], mx: &[f64], my: &[f64]) -> f64 {
        let q = self.basis.len();
        let mb = &self.whole;
        let mut total = 0.0;
        for k in 0..q {
            let mut row = 0.0;
            for l in 0..q {
                let g = self.basis.gamma_index(k, l);
                row += ym[l]
                    * (self.q1[(k, l)] * mp[g]
                        + self.q2[(k, l)] * mx[g]
                        + self.q3[(k, l)] * my[g]
                        + self.q4[(k, l)] * mb[g]);
            }
            total += xm[k] * row;
        }
        total
    }

    /// Per-point data reused across many evaluations.
    pub(crate) fn point_data(&self, x: &[f64]) -> PointData {
        PointData {
            monomials: self.basis.x_monomials(x),
            above: region::moments_above(&self.domain, &self.basis, x),
        }
    }

    pub(crate) fn eval_with(&self, a: &PointData, xa: &[f64], b: &PointData, xb: &[f64]) -> f64 {
        let p: Vec<f64> = xa.iter().zip(xb).map(|(u, v)| u.max(*v)).collect();
        let mp = region::moments_above(&self.domain, &self.basis, &p);
        self.combine(&a.monomials, &b.monomials, &mp, &a.above, &b.above)
    }
}

pub(crate) struct PointData {
    pub monomials: Vec<f64>,
    pub above: Vec<f64>,
}

impl Kernel for TessellatedKernel {
    fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let moments = region::region_moment_terms(&self.basis, &self.domain, x, y)?;
        let xm = self.basis.x_monomials(x);
        let ym = self.basis.x_monomials(y);
        Ok(self.eval_moments(&xm, &ym, &moments))
    }

    fn gram(&self, points: &[Vec<f64>], labels: Option<&[f64]>) -> Result<SignedGram> {
        if let Some(y) = labels {
            if y.len() != points.len() {
                return Err(Error::DimensionMismatch {
                    expected: points.len(),
                    got: y.len(),
                });
            }
        }
        for p in points {
            self.domain.check_point(p)?;
        }
        let data: Vec<PointData> = points.iter().map(|p| self.point_data(p)).collect();
        let m = points.len();
        let rows: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|i| {
                (i..m)
                    .map(|j| self.eval_with(&data[i], &points[i], &data[j], &points[j]))
                    .collect()
            })
            .collect();
        Ok(SignedGram::from_upper_rows(m, &rows, labels))
    }
}

/// Evaluates `k(x, y)` in region form.
pub fn kernel_eval(kernel: &TessellatedKernel, x: &[f64], y: &[f64]) -> Result<f64> {
    kernel.eval(x, y)
}
