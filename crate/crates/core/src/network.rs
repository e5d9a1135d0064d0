//! The two-layer polynomial network `x ↦ ‖B·Z(x)·A·x‖²`.
//!
//! `A` is `m×n`; `Z(x)` maps `v = A x` to `(x_0 v, …, x_{n-1} v)`; `B` is
//! `k × (n·m)` and splits into `n` column blocks `B⁽ⁱ⁾` of size `k×m`. The
//! network output `f = B Z A x` is a vector of `k` quadratics, and its second
//! derivatives are constant:
//!
//! ```text
//! g_ij = ∂²f/∂x_i∂x_j = B⁽ⁱ⁾ a_j + B⁽ʲ⁾ a_i        (a_j = column j of A)
//! ```
//!
//! Every quartic coefficient of `‖f‖²` is a short sum of inner products of
//! these `g` vectors:
//!
//! ```text
//! c(x_i⁴)       = ¼⟨g_ii, g_ii⟩
//! c(x_i³x_j)    = ⟨g_ii, g_ij⟩
//! c(x_i²x_j²)   = ⟨g_ij, g_ij⟩ + ½⟨g_ii, g_jj⟩
//! c(x_i²x_jx_k) = ⟨g_ii, g_jk⟩ + 2⟨g_ij, g_ik⟩
//! c(x_ix_jx_kx_l) = 2(⟨g_ij, g_kl⟩ + ⟨g_ik, g_jl⟩ + ⟨g_il, g_jk⟩)
//! ```
//!
//! [`loss_and_gradient`] runs the adjoint of this map by hand: residuals are
//! pushed back onto the `g` vectors, then onto `A` and `B` through the
//! block-times-column products.

use thiserror::Error;

use crate::matrix::Matrix;
use crate::monomials::{classify, monomial_count, pair_count, pair_index, sym_pair_index, MonomialClass};
use crate::quartic::{QuarticError, QuarticForm};
use crate::scalar::{axpy, dot, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("first layer must have at least n = {n} rows, got m = {m}")]
    NarrowFirstLayer { n: usize, m: usize },
    #[error("B needs at least one row")]
    NoSquares,
    #[error("B has {got} columns, expected n*m = {expected}")]
    BadSecondLayer { expected: usize, got: usize },
    #[error("identity first layer requires A = I (n×n)")]
    NotIdentity,
    #[error("network weights contain a non-finite value")]
    NonFinite,
    #[error(transparent)]
    Quartic(#[from] QuarticError),
}

/// How the first layer is treated during fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AMode {
    /// `A` is fixed to the `n×n` identity and never updated.
    Identity,
    /// `A` is a trainable `m×n` matrix.
    #[default]
    General,
}

/// Network weights.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams<T> {
    a_mode: AMode,
    a: Matrix<T>,
    b: Matrix<T>,
}

impl<T: Scalar> NetworkParams<T> {
    pub fn new(a: Matrix<T>, b: Matrix<T>, a_mode: AMode) -> Result<Self, NetworkError> {
        let (m, n) = (a.rows(), a.cols());
        if m < n {
            return Err(NetworkError::NarrowFirstLayer { n, m });
        }
        if b.rows() == 0 {
            return Err(NetworkError::NoSquares);
        }
        if b.cols() != n * m {
            return Err(NetworkError::BadSecondLayer {
                expected: n * m,
                got: b.cols(),
            });
        }
        if a_mode == AMode::Identity && a != Matrix::identity(n) {
            return Err(NetworkError::NotIdentity);
        }
        let p = NetworkParams { a_mode, a, b };
        if !p.is_finite() {
            return Err(NetworkError::NonFinite);
        }
        Ok(p)
    }

    /// Identity first layer with the given second layer (`k × n²`).
    pub fn with_identity(n: usize, b: Matrix<T>) -> Result<Self, NetworkError> {
        Self::new(Matrix::identity(n), b, AMode::Identity)
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn k(&self) -> usize {
        self.b.rows()
    }

    pub fn a_mode(&self) -> AMode {
        self.a_mode
    }

    pub fn a(&self) -> &Matrix<T> {
        &self.a
    }

    pub fn b(&self) -> &Matrix<T> {
        &self.b
    }

    /// Mutable access to `A`; in identity mode callers must keep `A = I`.
    pub fn a_mut(&mut self) -> &mut Matrix<T> {
        &mut self.a
    }

    pub fn b_mut(&mut self) -> &mut Matrix<T> {
        &mut self.b
    }

    pub fn is_finite(&self) -> bool {
        self.a.as_slice().iter().chain(self.b.as_slice()).all(|v| v.is_finite())
    }

    /// Multiplies `B` by `s`, which scales the expanded quartic by `s²`.
    pub fn scale_b(&mut self, s: T) {
        let (k, c) = (self.b.rows(), self.b.cols());
        for r in 0..k {
            for j in 0..c {
                self.b[(r, j)] *= s;
            }
        }
    }

    /// Network output `B·Z(x)·A·x`, one entry per square.
    pub fn output(&self, x: &[T]) -> Result<Vec<T>, NetworkError> {
        let (n, m, k) = (self.n(), self.m(), self.k());
        if x.len() != n {
            return Err(QuarticError::DimensionMismatch { expected: n, got: x.len() }.into());
        }
        let v: Vec<T> = (0..m).map(|r| dot(self.a.row(r), x)).collect();
        let zv: Vec<T> = (0..n).flat_map(|i| v.iter().map(move |&vc| x[i] * vc)).collect();
        Ok((0..k).map(|r| dot(self.b.row(r), &zv)).collect())
    }

    /// `‖B·Z(x)·A·x‖²` evaluated directly, without expanding coefficients.
    pub fn evaluate(&self, x: &[T]) -> Result<T, NetworkError> {
        Ok(self.output(x)?.iter().map(|&f| f * f).sum())
    }

    /// `P[i][j] = B⁽ⁱ⁾ a_j`, stored as `n·n` contiguous vectors of length `k`.
    fn block_column_products(&self) -> Vec<T> {
        let (n, m, k) = (self.n(), self.m(), self.k());
        let at = self.a.transpose();
        let mut p = vec![T::zero(); n * n * k];
        for r in 0..k {
            let brow = self.b.row(r);
            for i in 0..n {
                let block = &brow[i * m..(i + 1) * m];
                for j in 0..n {
                    p[(i * n + j) * k + r] = dot(block, at.row(j));
                }
            }
        }
        p
    }
}

/// The vectors `g_ij = ∂²f/∂x_i∂x_j` for `i <= j`, in pair-rank order.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondDerivTable<T> {
    n: usize,
    k: usize,
    g: Vec<T>,
}

impl<T: Scalar> SecondDerivTable<T> {
    fn zeros(n: usize, k: usize) -> Self {
        SecondDerivTable {
            n,
            k,
            g: vec![T::zero(); pair_count(n) * k],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `g_ij`; the order of `i` and `j` does not matter.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &[T] {
        self.by_rank(sym_pair_index(i, j, self.n))
    }

    #[inline]
    pub fn by_rank(&self, rank: usize) -> &[T] {
        &self.g[rank * self.k..(rank + 1) * self.k]
    }

    #[inline]
    fn by_rank_mut(&mut self, rank: usize) -> &mut [T] {
        &mut self.g[rank * self.k..(rank + 1) * self.k]
    }
}

/// Computes every `g_ij = B⁽ⁱ⁾a_j + B⁽ʲ⁾a_i`.
pub fn second_derivs<T: Scalar>(params: &NetworkParams<T>) -> SecondDerivTable<T> {
    let (n, k) = (params.n(), params.k());
    let p = params.block_column_products();
    let mut table = SecondDerivTable::zeros(n, k);
    for i in 0..n {
        for j in i..n {
            let r = pair_index(i, j, n);
            let dst = &mut table.g[r * k..(r + 1) * k];
            let pij = &p[(i * n + j) * k..(i * n + j + 1) * k];
            let pji = &p[(j * n + i) * k..(j * n + i + 1) * k];
            for ((d, &x), &y) in dst.iter_mut().zip(pij).zip(pji) {
                *d = x + y;
            }
        }
    }
    table
}

/// One inner-product term `weight · ⟨g_a, g_b⟩` of a coefficient formula.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Term {
    a: u32,
    b: u32,
    weight: f64,
}

/// The coefficient formulas for one monomial class, as pair-rank terms.
fn formula_terms(class: MonomialClass, n: usize, out: &mut Vec<Term>) {
    let mut push = |i, j, k, l, weight| {
        out.push(Term {
            a: sym_pair_index(i, j, n) as u32,
            b: sym_pair_index(k, l, n) as u32,
            weight,
        })
    };
    match class {
        MonomialClass::Fourth { i } => push(i, i, i, i, 0.25),
        MonomialClass::CubeLinear { i, j } => push(i, i, i, j, 1.0),
        MonomialClass::TwoSquares { i, j } => {
            push(i, j, i, j, 1.0);
            push(i, i, j, j, 0.5);
        }
        MonomialClass::SquareTwoLinear { i, j, k } => {
            push(i, i, j, k, 1.0);
            push(i, j, i, k, 2.0);
        }
        MonomialClass::Distinct { i, j, k, l } => {
            push(i, j, k, l, 2.0);
            push(i, k, j, l, 2.0);
            push(i, l, j, k, 2.0);
        }
    }
}

/// The coefficient formulas of every monomial in `n` variables, flattened.
///
/// Monomial `idx` owns `terms[offsets[idx]..offsets[idx + 1]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionPlan {
    n: usize,
    terms: Vec<Term>,
    offsets: Vec<u32>,
}

impl ExpansionPlan {
    pub fn new(n: usize) -> Self {
        let total = monomial_count(n);
        let mut terms = Vec::with_capacity(2 * total);
        let mut offsets = Vec::with_capacity(total + 1);
        offsets.push(0);
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    for l in k..n {
                        formula_terms(classify([i, j, k, l]), n, &mut terms);
                        offsets.push(terms.len() as u32);
                    }
                }
            }
        }
        ExpansionPlan { n, terms, offsets }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn terms_of(&self, idx: usize) -> &[Term] {
        &self.terms[self.offsets[idx] as usize..self.offsets[idx + 1] as usize]
    }

    /// Quartic coefficients from a precomputed table.
    pub fn expand<T: Scalar>(&self, table: &SecondDerivTable<T>) -> QuarticForm<T> {
        assert_eq!(table.n, self.n, "plan and table disagree on n");
        let coeffs = (0..self.offsets.len() - 1)
            .map(|idx| {
                self.terms_of(idx)
                    .iter()
                    .map(|t| T::of(t.weight) * dot(table.by_rank(t.a as usize), table.by_rank(t.b as usize)))
                    .sum()
            })
            .collect();
        QuarticForm::from_vec_unchecked(self.n, coeffs)
    }

    /// Loss `Σ (c − target)²` and its adjoint with respect to every `g` vector.
    fn loss_and_adjoint<T: Scalar>(
        &self,
        table: &SecondDerivTable<T>,
        target: &[T],
    ) -> (T, SecondDerivTable<T>) {
        let k = table.k;
        let mut adj = SecondDerivTable::zeros(self.n, k);
        let mut loss = T::zero();
        for (idx, &want) in target.iter().enumerate() {
            let terms = self.terms_of(idx);
            let mut c = T::zero();
            for t in terms {
                c += T::of(t.weight) * dot(table.by_rank(t.a as usize), table.by_rank(t.b as usize));
            }
            let r = c - want;
            loss += r * r;
            if r == T::zero() {
                continue;
            }
            // ∂/∂g_a of w⟨g_a, g_b⟩ is w·g_b, and 2w·g_a when a == b
            for t in terms {
                let w = T::two() * r * T::of(t.weight);
                let (a, b) = (t.a as usize, t.b as usize);
                if a == b {
                    axpy(T::two() * w, table.by_rank(a), adj.by_rank_mut(a));
                } else {
                    axpy(w, table.by_rank(b), adj.by_rank_mut(a));
                    axpy(w, table.by_rank(a), adj.by_rank_mut(b));
                }
            }
        }
        (loss, adj)
    }
}

/// Quartic coefficients from a precomputed table.
pub fn expand_table<T: Scalar>(table: &SecondDerivTable<T>) -> QuarticForm<T> {
    ExpansionPlan::new(table.n).expand(table)
}

/// Exact coefficient vector of `‖B·Z(x)·A·x‖²`.
pub fn expand<T: Scalar>(params: &NetworkParams<T>) -> QuarticForm<T> {
    expand_table(&second_derivs(params))
}

fn check_target<T: Scalar>(params: &NetworkParams<T>, target: &QuarticForm<T>) -> Result<(), NetworkError> {
    if target.n() != params.n() {
        return Err(QuarticError::DimensionMismatch {
            expected: params.n(),
            got: target.n(),
        }
        .into());
    }
    Ok(())
}

/// Squared coefficient distance between the network's quartic and `target`.
pub fn loss<T: Scalar>(params: &NetworkParams<T>, target: &QuarticForm<T>) -> Result<T, NetworkError> {
    check_target(params, target)?;
    let p = expand(params);
    Ok(p
        .coeffs()
        .iter()
        .zip(target.coeffs())
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum())
}

/// Gradient of the loss with respect to the weights.
///
/// `a` is all zeros when the first layer is frozen.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGradient<T> {
    pub a: Matrix<T>,
    pub b: Matrix<T>,
}

impl<T: Scalar> NetworkGradient<T> {
    /// Frobenius inner product with a direction of the same shape.
    pub fn dot(&self, other: &NetworkGradient<T>) -> T {
        dot(self.a.as_slice(), other.a.as_slice()) + dot(self.b.as_slice(), other.b.as_slice())
    }

    pub fn max_abs(&self) -> T {
        self.a
            .as_slice()
            .iter()
            .chain(self.b.as_slice())
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }
}

/// Loss and its exact gradient with respect to `A` and `B`.
pub fn loss_and_gradient<T: Scalar>(
    params: &NetworkParams<T>,
    target: &QuarticForm<T>,
) -> Result<(T, NetworkGradient<T>), NetworkError> {
    loss_and_gradient_with(&ExpansionPlan::new(params.n()), params, target)
}

/// [`loss_and_gradient`] reusing a plan built for the same `n`.
pub fn loss_and_gradient_with<T: Scalar>(
    plan: &ExpansionPlan,
    params: &NetworkParams<T>,
    target: &QuarticForm<T>,
) -> Result<(T, NetworkGradient<T>), NetworkError> {
    check_target(params, target)?;
    assert_eq!(plan.n(), params.n(), "plan built for a different n");
    let (n, m, k) = (params.n(), params.m(), params.k());
    let table = second_derivs(params);
    let (loss, adj) = plan.loss_and_adjoint(&table, target.coeffs());

    // g_ij = P_ij + P_ji with P_ij = B⁽ⁱ⁾a_j, so ∂L/∂P_ij is the pair adjoint,
    // counted twice on the diagonal where both terms coincide.
    let at = params.a().transpose();
    let b = params.b();
    let train_a = params.a_mode() == AMode::General;
    let mut gb = Matrix::zeros(k, n * m);
    let mut ga_t = Matrix::zeros(n, m);
    for i in 0..n {
        for j in 0..n {
            let s = if i == j { T::two() } else { T::one() };
            let w = adj.get(i, j);
            let aj = at.row(j);
            for (r, &wr) in w.iter().enumerate() {
                if wr == T::zero() {
                    continue;
                }
                let wr = s * wr;
                let cols = i * m..(i + 1) * m;
                axpy(wr, aj, &mut gb.as_mut_slice()[r * n * m..][cols.clone()]);
                if train_a {
                    axpy(wr, &b.row(r)[cols], &mut ga_t.as_mut_slice()[j * m..(j + 1) * m]);
                }
            }
        }
    }

    Ok((loss, NetworkGradient { a: ga_t.transpose(), b: gb }))
}
