//! Explicit sum-of-squares certificates.
//!
//! A certificate lists `k` quadratics whose squares are claimed to sum to a
//! target quartic, bound to that target by a digest. [`verify`] re-expands
//! the squares with [`square_and_sum`] only; it never touches the network
//! kernel that produced them.

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::matrix::Matrix;
use crate::monomials::{pair_count, pairs};
use crate::network::{second_derivs, NetworkParams};
use crate::quartic::{coeff_metrics, square_and_sum, Quadratic, QuarticError, QuarticForm};
use crate::scalar::{dot, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertificateError {
    #[error("certificate is bound to target {expected}, but the given target hashes to {got}")]
    WrongTarget { expected: String, got: String },
    #[error("certificate has no quadratics")]
    Empty,
    #[error(transparent)]
    Quartic(#[from] QuarticError),
}

/// SHA-256 of the canonical byte encoding of a target, lowercase hex.
///
/// The encoding is `n` as a little-endian `u64` followed by every
/// coefficient, in canonical monomial order, as a little-endian `f64`.
pub fn target_digest<T: Scalar>(target: &QuarticForm<T>) -> String {
    let mut h = Sha256::new();
    h.update((target.n() as u64).to_le_bytes());
    for c in target.coeffs() {
        h.update(c.as_f64().to_le_bytes());
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate<T> {
    n: usize,
    quadratics: Vec<Quadratic<T>>,
    target_digest: String,
    /// Relative coefficient error claimed by whoever produced the certificate.
    pub residual: f64,
}

impl<T: Scalar> Certificate<T> {
    /// Binds `quadratics` to `target`.
    pub fn new(quadratics: Vec<Quadratic<T>>, target: &QuarticForm<T>, residual: f64) -> Result<Self, CertificateError> {
        Self::with_digest(target.n(), quadratics, target_digest(target), residual)
    }

    pub fn with_digest(
        n: usize,
        quadratics: Vec<Quadratic<T>>,
        target_digest: String,
        residual: f64,
    ) -> Result<Self, CertificateError> {
        if quadratics.is_empty() {
            return Err(CertificateError::Empty);
        }
        for q in &quadratics {
            if q.n() != n {
                return Err(QuarticError::DimensionMismatch { expected: n, got: q.n() }.into());
            }
        }
        Ok(Certificate {
            n,
            quadratics,
            target_digest,
            residual: residual.max(0.0),
        })
    }

    /// Certificate for the quadratics realized by `params`.
    pub fn from_params(params: &NetworkParams<T>, target: &QuarticForm<T>, residual: f64) -> Result<Self, CertificateError> {
        Self::new(extract(params), target, residual)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.quadratics.len()
    }

    pub fn quadratics(&self) -> &[Quadratic<T>] {
        &self.quadratics
    }

    pub fn quadratics_mut(&mut self) -> &mut [Quadratic<T>] {
        &mut self.quadratics
    }

    pub fn target_digest(&self) -> &str {
        &self.target_digest
    }

    /// `Σ q_r²`, expanded by brute force.
    pub fn expand(&self) -> QuarticForm<T> {
        square_and_sum(self.n, &self.quadratics).expect("quadratics share n")
    }
}

/// The quadratics `f_r` of the network output `f = B·Z(x)·A·x`.
///
/// `f_r = Σ_{i,j} (B⁽ⁱ⁾a_j)_r x_i x_j`, so the coefficient of `x_i x_j`
/// (`i < j`) is `(g_ij)_r` and that of `x_i²` is `½(g_ii)_r`.
pub fn extract<T: Scalar>(params: &NetworkParams<T>) -> Vec<Quadratic<T>> {
    let n = params.n();
    let table = second_derivs(params);
    (0..params.k())
        .map(|r| {
            let coeffs = pairs(n)
                .map(|(i, j)| {
                    let g = table.get(i, j)[r];
                    if i == j {
                        T::half() * g
                    } else {
                        g
                    }
                })
                .collect();
            Quadratic::from_vec_unchecked(n, coeffs)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    Certified { residual: f64 },
    Rejected { residual: f64 },
}

impl Verdict {
    pub fn is_certified(&self) -> bool {
        matches!(self, Verdict::Certified { .. })
    }

    pub fn residual(&self) -> f64 {
        match *self {
            Verdict::Certified { residual } | Verdict::Rejected { residual } => residual,
        }
    }
}

/// Re-expands the certificate and compares it with `target`.
///
/// Certified iff the relative coefficient error is at most `tol`. A zero
/// target is certified only by a certificate that expands to exactly zero.
pub fn verify<T: Scalar>(cert: &Certificate<T>, target: &QuarticForm<T>, tol: f64) -> Result<Verdict, CertificateError> {
    let got = target_digest(target);
    if got != cert.target_digest {
        return Err(CertificateError::WrongTarget {
            expected: cert.target_digest.clone(),
            got,
        });
    }
    if target.n() != cert.n {
        return Err(QuarticError::DimensionMismatch {
            expected: cert.n,
            got: target.n(),
        }
        .into());
    }
    let metrics = coeff_metrics(&cert.expand(), target)?;
    let residual = match metrics.relative_error {
        Some(r) => r.as_f64(),
        None if metrics.squared_error == T::zero() => 0.0,
        None => f64::INFINITY,
    };
    Ok(if residual <= tol {
        Verdict::Certified { residual }
    } else {
        Verdict::Rejected { residual }
    })
}

/// `G = Σ_r v_r v_rᵀ` over the coefficient vectors of the quadratics.
pub fn gram_matrix<T: Scalar>(cert: &Certificate<T>) -> Matrix<T> {
    let p = pair_count(cert.n);
    let mut g = Matrix::zeros(p, p);
    for a in 0..p {
        for b in a..p {
            let col_a: Vec<T> = cert.quadratics.iter().map(|q| q.coeffs()[a]).collect();
            let col_b: Vec<T> = cert.quadratics.iter().map(|q| q.coeffs()[b]).collect();
            let v = dot(&col_a, &col_b);
            g[(a, b)] = v;
            g[(b, a)] = v;
        }
    }
    g
}
