//! Dense quartic forms and quadratics, point evaluation, and the brute-force
//! expansion routines used to check the network kernel.

use thiserror::Error;

use crate::matrix::Matrix;
use crate::monomials::{monomial_count, pair_count, pairs, product_index, MonomialError, Monomial4};
use crate::scalar::{norm_sq, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuarticError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coefficient {index} is not finite")]
    NonFinite { index: usize },
    #[error("matrix is {rows}x{cols}; expected a square matrix of side C(n+1,2)")]
    BadGramShape { rows: usize, cols: usize },
    #[error(transparent)]
    Monomial(#[from] MonomialError),
}

fn check_finite<T: Scalar>(coeffs: &[T]) -> Result<(), QuarticError> {
    match coeffs.iter().position(|c| !c.is_finite()) {
        Some(index) => Err(QuarticError::NonFinite { index }),
        None => Ok(()),
    }
}

/// Homogeneous quartic in `n` variables, one coefficient per monomial in
/// canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarticForm<T> {
    n: usize,
    coeffs: Vec<T>,
}

impl<T: Scalar> QuarticForm<T> {
    pub fn new(n: usize, coeffs: Vec<T>) -> Result<Self, QuarticError> {
        let expected = monomial_count(n);
        if coeffs.len() != expected {
            return Err(QuarticError::DimensionMismatch {
                expected,
                got: coeffs.len(),
            });
        }
        check_finite(&coeffs)?;
        Ok(QuarticForm { n, coeffs })
    }

    pub fn zeros(n: usize) -> Self {
        QuarticForm {
            n,
            coeffs: vec![T::zero(); monomial_count(n)],
        }
    }

    /// Builds a form from `(monomial, coefficient)` terms; repeated monomials add up.
    pub fn from_terms(
        n: usize,
        terms: impl IntoIterator<Item = ([usize; 4], T)>,
    ) -> Result<Self, QuarticError> {
        let mut p = Self::zeros(n);
        for (vars, c) in terms {
            let m = Monomial4::from_unsorted(vars, n)?;
            p[m] += c;
        }
        check_finite(&p.coeffs)?;
        Ok(p)
    }

    pub(crate) fn from_vec_unchecked(n: usize, coeffs: Vec<T>) -> Self {
        debug_assert_eq!(coeffs.len(), monomial_count(n));
        QuarticForm { n, coeffs }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    pub fn coeff(&self, m: &Monomial4) -> T {
        self[*m]
    }

    pub fn norm(&self) -> T {
        norm_sq(&self.coeffs).sqrt()
    }

    pub fn scaled(&self, s: T) -> Self {
        QuarticForm {
            n: self.n,
            coeffs: self.coeffs.iter().map(|&c| c * s).collect(),
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, QuarticError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, QuarticError> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self, QuarticError> {
        same_n(self.n, other.n)?;
        Ok(QuarticForm {
            n: self.n,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// Value of the form at `x`.
    pub fn evaluate(&self, x: &[T]) -> Result<T, QuarticError> {
        same_n(self.n, x.len())?;
        let n = self.n;
        let mut acc = T::zero();
        let mut idx = 0;
        for i in 0..n {
            for j in i..n {
                let xij = x[i] * x[j];
                for k in j..n {
                    let xijk = xij * x[k];
                    for l in k..n {
                        acc += self.coeffs[idx] * xijk * x[l];
                        idx += 1;
                    }
                }
            }
        }
        Ok(acc)
    }

    /// Widening copy for formats and digests.
    pub fn to_f64(&self) -> QuarticForm<f64> {
        QuarticForm {
            n: self.n,
            coeffs: self.coeffs.iter().map(|c| c.as_f64()).collect(),
        }
    }
}

impl<T> std::ops::Index<Monomial4> for QuarticForm<T> {
    type Output = T;

    fn index(&self, m: Monomial4) -> &T {
        &self.coeffs[crate::monomials::rank_sorted(m.vars(), self.n)]
    }
}

impl<T> std::ops::IndexMut<Monomial4> for QuarticForm<T> {
    fn index_mut(&mut self, m: Monomial4) -> &mut T {
        &mut self.coeffs[crate::monomials::rank_sorted(m.vars(), self.n)]
    }
}

fn same_n(expected: usize, got: usize) -> Result<(), QuarticError> {
    if expected == got {
        Ok(())
    } else {
        Err(QuarticError::DimensionMismatch { expected, got })
    }
}

/// Homogeneous quadratic over the sorted-pair basis `x_i x_j`, `i <= j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic<T> {
    n: usize,
    coeffs: Vec<T>,
}

impl<T: Scalar> Quadratic<T> {
    pub fn new(n: usize, coeffs: Vec<T>) -> Result<Self, QuarticError> {
        let expected = pair_count(n);
        if coeffs.len() != expected {
            return Err(QuarticError::DimensionMismatch {
                expected,
                got: coeffs.len(),
            });
        }
        check_finite(&coeffs)?;
        Ok(Quadratic { n, coeffs })
    }

    pub fn zeros(n: usize) -> Self {
        Quadratic {
            n,
            coeffs: vec![T::zero(); pair_count(n)],
        }
    }

    pub fn from_terms(
        n: usize,
        terms: impl IntoIterator<Item = ((usize, usize), T)>,
    ) -> Result<Self, QuarticError> {
        let mut q = Self::zeros(n);
        for ((i, j), c) in terms {
            let (i, j) = if i <= j { (i, j) } else { (j, i) };
            same_n(n, n.max(j + 1))?;
            q.coeffs[crate::monomials::pair_index(i, j, n)] += c;
        }
        check_finite(&q.coeffs)?;
        Ok(q)
    }

    pub(crate) fn from_vec_unchecked(n: usize, coeffs: Vec<T>) -> Self {
        Quadratic { n, coeffs }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn scaled(&self, s: T) -> Self {
        Quadratic {
            n: self.n,
            coeffs: self.coeffs.iter().map(|&c| c * s).collect(),
        }
    }

    pub fn evaluate(&self, x: &[T]) -> Result<T, QuarticError> {
        same_n(self.n, x.len())?;
        Ok(pairs(self.n)
            .zip(&self.coeffs)
            .map(|((i, j), &c)| c * x[i] * x[j])
            .sum())
    }
}

/// `table[a * p + b]` is the canonical index of the product of pair `a` and pair `b`.
fn product_table(n: usize) -> Vec<usize> {
    let ps: Vec<_> = pairs(n).collect();
    let mut table = Vec::with_capacity(ps.len() * ps.len());
    for &a in &ps {
        for &b in &ps {
            table.push(product_index(a, b, n));
        }
    }
    table
}

/// Expands `Σ_r q_r²` coefficient by coefficient.
///
/// Every ordered pair of basis monomials is multiplied and collected; no
/// symmetry is exploited, so this shares nothing with the network kernel.
pub fn square_and_sum<T: Scalar>(n: usize, qs: &[Quadratic<T>]) -> Result<QuarticForm<T>, QuarticError> {
    for q in qs {
        same_n(n, q.n)?;
    }
    let p = pair_count(n);
    let table = product_table(n);
    let mut out = vec![T::zero(); monomial_count(n)];
    for q in qs {
        for (a, &qa) in q.coeffs.iter().enumerate() {
            if qa == T::zero() {
                continue;
            }
            let row = &table[a * p..(a + 1) * p];
            for (&target, &qb) in row.iter().zip(&q.coeffs) {
                out[target] += qa * qb;
            }
        }
    }
    Ok(QuarticForm::from_vec_unchecked(n, out))
}

/// `m₂ G m₂ᵀ` in coefficient space, reading the upper triangle of `gram`.
pub fn gram_to_quartic<T: Scalar>(gram: &Matrix<T>) -> Result<QuarticForm<T>, QuarticError> {
    let (rows, cols) = (gram.rows(), gram.cols());
    let n = variables_for_pair_count(rows).filter(|_| rows == cols);
    let Some(n) = n else {
        return Err(QuarticError::BadGramShape { rows, cols });
    };
    let ps: Vec<_> = pairs(n).collect();
    let mut out = vec![T::zero(); monomial_count(n)];
    for a in 0..ps.len() {
        out[product_index(ps[a], ps[a], n)] += gram[(a, a)];
        for b in a + 1..ps.len() {
            out[product_index(ps[a], ps[b], n)] += T::two() * gram[(a, b)];
        }
    }
    Ok(QuarticForm::from_vec_unchecked(n, out))
}

fn variables_for_pair_count(p: usize) -> Option<usize> {
    (0..=p).find(|&n| pair_count(n) >= p).filter(|&n| pair_count(n) == p)
}

/// Squared coefficient distance and its relative form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoeffMetrics<T> {
    pub squared_error: T,
    /// `‖p − q‖ / ‖q‖`; `None` when the target `q` is zero.
    pub relative_error: Option<T>,
}

/// Compares a fit `p` with the target `q`.
pub fn coeff_metrics<T: Scalar>(p: &QuarticForm<T>, q: &QuarticForm<T>) -> Result<CoeffMetrics<T>, QuarticError> {
    same_n(q.n, p.n)?;
    let mut sq = T::zero();
    for (&a, &b) in p.coeffs.iter().zip(&q.coeffs) {
        let d = a - b;
        sq += d * d;
    }
    let qn = q.norm();
    let relative_error = (qn > T::zero()).then(|| sq.sqrt() / qn);
    Ok(CoeffMetrics {
        squared_error: sq,
        relative_error,
    })
}
