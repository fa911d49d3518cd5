//! Monomial basis `Z_d(z, x)`: all monomials of total degree `<= d` in the
//! `2n` variables `(z, x)`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Exponent vector of a monomial.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zeros(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Entrywise sum of two exponent vectors (product of the monomials).
    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.len(), other.len());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Evaluates `x^self`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(self.len(), x.len());
        self.0
            .iter()
            .zip(x)
            .filter(|(e, _)| **e > 0)
            .map(|(&e, &v)| v.powi(e as i32))
            .product()
    }
}

/// One basis element `z^z_exp * x^x_exp`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisElement {
    pub z_exp: MultiIndex,
    pub x_exp: MultiIndex,
}

impl BasisElement {
    pub fn degree(&self) -> u32 {
        self.z_exp.degree() + self.x_exp.degree()
    }
}

/// Ordered monomial basis in `(z, x)` with independent exponent pairs.
///
/// Elements are sorted by total degree, then lexicographically on the
/// concatenated exponent vector `(z_exp, x_exp)` in descending order, so
/// for `n = 1, d = 1` the order is `1, z, x`.
#[derive(Clone, Debug, PartialEq)]
pub struct MonomialBasis {
    n: usize,
    degree: u32,
    elements: Vec<BasisElement>,
    /// Distinct z-exponents `z_exp[k] + z_exp[l]` over all pairs.
    gammas: Vec<MultiIndex>,
    /// Row-major `q x q` table mapping `(k, l)` to an index into `gammas`.
    gamma_of_pair: Vec<usize>,
}

impl MonomialBasis {
    /// Enumerates all monomials of degree `<= d` in `2n` variables.
    pub fn enumerate(n: usize, d: u32) -> Self {
        assert!(n >= 1, "basis needs at least one feature");
        let mut tuples = Vec::new();
        let mut current = vec![0u32; 2 * n];
        collect_tuples(&mut current, 0, d, &mut tuples);
        tuples.sort_by(|a, b| {
            let da: u32 = a.iter().sum();
            let db: u32 = b.iter().sum();
            da.cmp(&db).then_with(|| b.cmp(a))
        });
        let elements: Vec<BasisElement> = tuples
            .into_iter()
            .map(|t| BasisElement {
                z_exp: MultiIndex(t[..n].to_vec()),
                x_exp: MultiIndex(t[n..].to_vec()),
            })
            .collect();

        let q = elements.len();
        let mut gammas = Vec::new();
        let mut lookup: HashMap<MultiIndex, usize> = HashMap::new();
        let mut gamma_of_pair = vec![0; q * q];
        for k in 0..q {
            for l in 0..q {
                let g = elements[k].z_exp.add(&elements[l].z_exp);
                let idx = *lookup.entry(g.clone()).or_insert_with(|| {
                    gammas.push(g);
                    gammas.len() - 1
                });
                gamma_of_pair[k * q + l] = idx;
            }
        }

        MonomialBasis {
            n,
            degree: d,
            elements,
            gammas,
            gamma_of_pair,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Number of basis elements (`q_half`).
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[BasisElement] {
        &self.elements
    }

    /// Distinct z-exponent sums appearing in products of basis elements.
    pub fn gammas(&self) -> &[MultiIndex] {
        &self.gammas
    }

    /// Index into [`gammas`](Self::gammas) of `z_exp[k] + z_exp[l]`.
    #[inline]
    pub fn gamma_index(&self, k: usize, l: usize) -> usize {
        self.gamma_of_pair[k * self.elements.len() + l]
    }

    /// Values `x^{x_exp[k]}` for every basis element.
    pub fn x_monomials(&self, x: &[f64]) -> Vec<f64> {
        self.elements.iter().map(|e| e.x_exp.eval(x)).collect()
    }

    /// Full vector `Z_d(z, x)`.
    pub fn eval(&self, z: &[f64], x: &[f64]) -> Vec<f64> {
        self.elements
            .iter()
            .map(|e| e.z_exp.eval(z) * e.x_exp.eval(x))
            .collect()
    }
}

fn collect_tuples(current: &mut Vec<u32>, pos: usize, remaining: u32, out: &mut Vec<Vec<u32>>) {
    if pos == current.len() {
        out.push(current.clone());
        return;
    }
    for e in 0..=remaining {
        current[pos] = e;
        collect_tuples(current, pos + 1, remaining - e, out);
    }
    current[pos] = 0;
}

/// `C(a, b)`; used to cross-check basis sizes.
pub fn binomial(a: u64, b: u64) -> u64 {
    if b > a {
        return 0;
    }
    let b = b.min(a - b);
    (0..b).fold(1, |acc, i| acc * (a - i) / (i + 1))
}
