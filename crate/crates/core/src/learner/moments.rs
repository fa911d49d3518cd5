//! Precomputed region moments for every training pair and the assembly of
//! the P-coefficient matrix `M(a) = sum_ij a_i a_j y_i y_j T(x_i, x_j)`.
//!
//! `T(x, y)` is the `2q x 2q` matrix with `<P, T(x, y)> = k_P(x, y)`: block
//! `(s, t)` holds `x^a_k y^a_l` times the moment of `z^(b_k + b_l)` over the
//! quadrant set `X_st`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::basis::MonomialBasis;
use crate::error::{Error, Result};
use crate::kernel::{BlockPMatrix, TessellatedKernel};
use crate::region::{self, DomainBox, RegionMoments};

/// Region moments for all point pairs. Only the `z >= max(x_i, x_j)`
/// moments depend on the pair; the `z >= x_i` moments are stored per point
/// and the whole-box moments once.
#[derive(Clone, Debug)]
pub struct MomentTensorCache {
    basis: MonomialBasis,
    domain: DomainBox,
    points: Vec<Vec<f64>>,
    monomials: Vec<Vec<f64>>,
    above: Vec<Vec<f64>>,
    whole: Vec<f64>,
    /// Row `i` holds pairs `(i, j)` for `j >= i`, each a block of `G` moments.
    pair_rows: Vec<Vec<f64>>,
    clamp_negative: bool,
    groups: ZGroups,
}

/// Basis elements grouped by their `z` exponent: the `p*` moment of a pair
/// `(k, l)` depends on the groups of `k` and `l` only.
#[derive(Clone, Debug)]
struct ZGroups {
    /// Group of every basis element.
    of: Vec<usize>,
    count: usize,
    /// `gamma index` for group pairs, row-major `count x count`.
    gamma: Vec<usize>,
    /// `gamma index` for (group, element) pairs, row-major `count x q`.
    gamma_col: Vec<usize>,
}

impl ZGroups {
    fn new(basis: &MonomialBasis) -> Self {
        let q = basis.len();
        let mut reps: Vec<usize> = Vec::new();
        let mut of = Vec::with_capacity(q);
        for (k, e) in basis.elements().iter().enumerate() {
            match reps.iter().position(|&r| basis.elements()[r].z_exp == e.z_exp) {
                Some(g) => of.push(g),
                None => {
                    of.push(reps.len());
                    reps.push(k);
                }
            }
        }
        let count = reps.len();
        let gamma = (0..count * count)
            .map(|i| basis.gamma_index(reps[i / count], reps[i % count]))
            .collect();
        let gamma_col = (0..count * q)
            .map(|i| basis.gamma_index(reps[i / q], i % q))
            .collect();
        ZGroups {
            of,
            count,
            gamma,
            gamma_col,
        }
    }
}

impl MomentTensorCache {
    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn q_half(&self) -> usize {
        self.basis.len()
    }

    fn n_gamma(&self) -> usize {
        self.whole.len()
    }

    #[inline]
    fn p_star(&self, i: usize, j: usize) -> &[f64] {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        let g = self.n_gamma();
        &self.pair_rows[a][(b - a) * g..(b - a + 1) * g]
    }

    /// The four region moments for pair `(i, j)`.
    pub fn entry(&self, i: usize, j: usize) -> RegionMoments {
        RegionMoments::from_parts(
            self.p_star(i, j).to_vec(),
            self.above[i].clone(),
            self.above[j].clone(),
            self.whole.clone(),
            self.clamp_negative,
        )
    }

    /// `T(x_i, x_j)` as a dense `2q x 2q` matrix.
    pub fn t_matrix(&self, i: usize, j: usize) -> DMatrix<f64> {
        let q = self.q_half();
        let moments = self.entry(i, j);
        let mut t = DMatrix::zeros(2 * q, 2 * q);
        for k in 0..q {
            for l in 0..q {
                let quad = moments.quadrants(self.basis.gamma_index(k, l));
                let s = self.monomials[i][k] * self.monomials[j][l];
                t[(k, l)] = s * quad.x11;
                t[(k, q + l)] = s * quad.x12;
                t[(q + k, l)] = s * quad.x21;
                t[(q + k, q + l)] = s * quad.x22;
            }
        }
        t
    }

    /// Unsigned Gram matrix of a tessellated kernel on the cached points.
    pub fn gram(&self, kernel: &TessellatedKernel) -> Result<DMatrix<f64>> {
        self.check_kernel(kernel)?;
        let m = self.len();
        let rows: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|i| {
                (i..m)
                    .map(|j| {
                        kernel.combine(
                            &self.monomials[i],
                            &self.monomials[j],
                            self.p_star(i, j),
                            &self.above[i],
                            &self.above[j],
                        )
                    })
                    .collect()
            })
            .collect();
        let mut g = DMatrix::zeros(m, m);
        for (i, row) in rows.iter().enumerate() {
            for (o, &v) in row.iter().enumerate() {
                g[(i, i + o)] = v;
                g[(i + o, i)] = v;
            }
        }
        Ok(g)
    }

    /// `K w` for a tessellated kernel, touching only columns with `w_j != 0`.
    pub fn gram_times(&self, kernel: &TessellatedKernel, w: &[f64]) -> Result<DVector<f64>> {
        self.check_kernel(kernel)?;
        let m = self.len();
        if w.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: w.len(),
            });
        }
        let active: Vec<usize> = (0..m).filter(|&j| w[j] != 0.0).collect();
        let out: Vec<f64> = (0..m)
            .into_par_iter()
            .map(|i| {
                active
                    .iter()
                    .map(|&j| {
                        w[j] * kernel.combine(
                            &self.monomials[i],
                            &self.monomials[j],
                            self.p_star(i, j),
                            &self.above[i],
                            &self.above[j],
                        )
                    })
                    .sum()
            })
            .collect();
        Ok(DVector::from_vec(out))
    }

    /// `K w` for the kernel of the rank-one matrix `P = v v^T`. With
    /// `u = v_1 - v_2` the region form has `Q1 = u u^T`, `Q2 = u v_2^T`,
    /// `Q3 = v_2 u^T`, `Q4 = v_2 v_2^T`, so only the `p*` term needs work per
    /// pair, and that over z-exponent groups.
    pub fn rank_one_gram_times(&self, v: &DVector<f64>, w: &[f64]) -> Result<DVector<f64>> {
        let m = self.len();
        let q = self.q_half();
        if w.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: w.len(),
            });
        }
        if v.len() != 2 * q {
            return Err(Error::DimensionMismatch {
                expected: 2 * q,
                got: v.len(),
            });
        }
        let zg = &self.groups;
        let u: Vec<f64> = (0..q).map(|k| v[k] - v[q + k]).collect();
        let v2: Vec<f64> = (0..q).map(|k| v[q + k]).collect();

        let mut grouped = vec![0.0; m * zg.count];
        let mut bvec = vec![0.0; m * q];
        let mut cvec = vec![0.0; m * q];
        let mut evec = vec![0.0; m * q];
        for i in 0..m {
            let mono = &self.monomials[i];
            let above = &self.above[i];
            for k in 0..q {
                grouped[i * zg.count + zg.of[k]] += mono[k] * u[k];
                bvec[i * q + k] = mono[k] * v2[k];
            }
            for l in 0..q {
                let (mut c, mut e) = (0.0, 0.0);
                for k in 0..q {
                    let g = self.basis.gamma_index(k, l);
                    c += mono[k] * u[k] * above[g];
                    e += bvec[i * q + k] * self.whole[g];
                }
                cvec[i * q + l] = c;
                evec[i * q + l] = e;
            }
        }
        let mut wb = vec![0.0; q];
        let mut wc = vec![0.0; q];
        let active: Vec<usize> = (0..m).filter(|&j| w[j] != 0.0).collect();
        for &j in &active {
            for l in 0..q {
                wb[l] += w[j] * bvec[j * q + l];
                wc[l] += w[j] * cvec[j * q + l];
            }
        }
        let nz = zg.count;
        let out: Vec<f64> = (0..m)
            .into_par_iter()
            .map(|i| {
                let ai = &grouped[i * nz..(i + 1) * nz];
                let mut total = 0.0;
                for &j in &active {
                    let aj = &grouped[j * nz..(j + 1) * nz];
                    let mp = self.p_star(i, j);
                    let mut s = 0.0;
                    for g in 0..nz {
                        let gam = &zg.gamma[g * nz..(g + 1) * nz];
                        let mut row = 0.0;
                        for h in 0..nz {
                            row += aj[h] * mp[gam[h]];
                        }
                        s += ai[g] * row;
                    }
                    total += w[j] * s;
                }
                let bi = &bvec[i * q..(i + 1) * q];
                let ci = &cvec[i * q..(i + 1) * q];
                let ei = &evec[i * q..(i + 1) * q];
                for l in 0..q {
                    total += (ci[l] + ei[l]) * wb[l] + bi[l] * wc[l];
                }
                total
            })
            .collect();
        Ok(DVector::from_vec(out))
    }

    fn check_kernel(&self, kernel: &TessellatedKernel) -> Result<()> {
        if kernel.basis() != &self.basis || kernel.domain() != &self.domain {
            return Err(Error::InvalidParameter(
                "kernel basis or domain differs from the moment cache".into(),
            ));
        }
        Ok(())
    }

    /// `sum_ij w_i w_j T(x_i, x_j)` for arbitrary weights `w`.
    pub fn weighted_t(&self, w: &[f64]) -> Result<DMatrix<f64>> {
        let m = self.len();
        if w.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: w.len(),
            });
        }
        let q = self.q_half();
        let active: Vec<usize> = (0..m).filter(|&j| w[j] != 0.0).collect();

        // s_l = sum_b w_b x_b^a_l
        let mut s = vec![0.0; q];
        for &b in &active {
            for l in 0..q {
                s[l] += w[b] * self.monomials[b][l];
            }
        }
        // bx_kl = sum_a w_a x_a^a_k m_{z>=x_a}[g(k,l)]
        let mut bx = DMatrix::<f64>::zeros(q, q);
        for &a in &active {
            for k in 0..q {
                let wa = w[a] * self.monomials[a][k];
                if wa == 0.0 {
                    continue;
                }
                for l in 0..q {
                    bx[(k, l)] += wa * self.above[a][self.basis.gamma_index(k, l)];
                }
            }
        }
        // a_kl = sum_ab w_a w_b x_a^a_k x_b^a_l m_{z>=p*(a,b)}[g(k,l)], summed
        // over b per z-group of k
        let zg = &self.groups;
        let mut pa = DMatrix::<f64>::zeros(q, q);
        let mut scratch = vec![0.0; zg.count * q];
        let mut wx = vec![0.0; q];
        for &a in &active {
            scratch.fill(0.0);
            for &b in &active {
                let mp = self.p_star(a, b);
                for l in 0..q {
                    wx[l] = w[b] * self.monomials[b][l];
                }
                for grp in 0..zg.count {
                    let row = &mut scratch[grp * q..(grp + 1) * q];
                    let gam = &zg.gamma_col[grp * q..(grp + 1) * q];
                    for l in 0..q {
                        row[l] += wx[l] * mp[gam[l]];
                    }
                }
            }
            for k in 0..q {
                let wa = w[a] * self.monomials[a][k];
                let row = &scratch[zg.of[k] * q..(zg.of[k] + 1) * q];
                for l in 0..q {
                    pa[(k, l)] += wa * row[l];
                }
            }
        }

        let mut out = DMatrix::zeros(2 * q, 2 * q);
        for k in 0..q {
            for l in 0..q {
                let g = self.basis.gamma_index(k, l);
                let bxk = bx[(k, l)] * s[l];
                let byk = s[k] * bx[(l, k)];
                let box_term = self.whole[g] * s[k] * s[l];
                out[(k, l)] = pa[(k, l)];
                out[(k, q + l)] = bxk - pa[(k, l)];
                out[(q + k, l)] = byk - pa[(k, l)];
                out[(q + k, q + l)] = box_term - bxk - byk + pa[(k, l)];
            }
        }
        crate::linalg::symmetrize(&mut out);
        Ok(out)
    }

    /// `sum_i T(x_i, x_i)`; `<P, .>` of it is the Gram trace of `k_P`.
    pub fn diagonal_t(&self) -> DMatrix<f64> {
        let q = self.q_half();
        let mut out = DMatrix::zeros(2 * q, 2 * q);
        for i in 0..self.len() {
            out += self.t_matrix(i, i);
        }
        out
    }
}

/// Fills the cache for all `i <= j`.
pub fn precompute_moments(points: &[Vec<f64>], basis: &MonomialBasis, domain: &DomainBox) -> Result<MomentTensorCache> {
    region::check_compatible(basis, domain)?;
    for p in points {
        domain.check_point(p)?;
    }
    let m = points.len();
    let monomials: Vec<Vec<f64>> = points.iter().map(|p| basis.x_monomials(p)).collect();
    let above: Vec<Vec<f64>> = points
        .par_iter()
        .map(|p| region::moments_above(domain, basis, p))
        .collect();
    let pair_rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::with_capacity((m - i) * basis.gammas().len());
            let mut pstar = vec![0.0; basis.n()];
            for j in i..m {
                for (t, (a, b)) in pstar.iter_mut().zip(points[i].iter().zip(&points[j])) {
                    *t = a.max(*b);
                }
                row.extend(region::moments_above(domain, basis, &pstar));
            }
            row
        })
        .collect();
    Ok(MomentTensorCache {
        basis: basis.clone(),
        domain: domain.clone(),
        points: points.to_vec(),
        monomials,
        above,
        whole: region::moments_whole(domain, basis),
        pair_rows,
        clamp_negative: domain.in_nonnegative_orthant(),
        groups: ZGroups::new(basis),
    })
}

/// `M(a) = sum_ij a_i a_j y_i y_j T(x_i, x_j)`. `alpha` must be feasible
/// for some box bound: non-negative with `y^T a = 0`.
pub fn assemble_m(alpha: &[f64], y: &[f64], cache: &MomentTensorCache) -> Result<DMatrix<f64>> {
    if alpha.len() != cache.len() || y.len() != cache.len() {
        return Err(Error::DimensionMismatch {
            expected: cache.len(),
            got: alpha.len().min(y.len()),
        });
    }
    crate::qp::check_labels(y)?;
    let scale = alpha.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(1.0);
    let eq: f64 = alpha.iter().zip(y).map(|(a, b)| a * b).sum();
    if alpha.iter().any(|&a| a < 0.0) || eq.abs() > 1e-8 * scale * alpha.len() as f64 {
        return Err(Error::InvalidParameter(format!(
            "infeasible dual vector (min {:.3e}, y^T a = {eq:.3e})",
            alpha.iter().copied().fold(f64::INFINITY, f64::min)
        )));
    }
    let w: Vec<f64> = alpha.iter().zip(y).map(|(a, b)| a * b).collect();
    cache.weighted_t(&w)
}

/// `<P, M>` for a block matrix.
pub fn p_dot(p: &BlockPMatrix, m: &DMatrix<f64>) -> f64 {
    crate::linalg::frobenius_dot(&p.to_full(), m)
}
