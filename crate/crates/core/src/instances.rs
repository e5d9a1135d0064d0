//! Reproducible test polynomials.
//!
//! Each family draws from its own ChaCha8 stream (see [`crate::rng`]), so a
//! `(family, n, seed, parameters)` tuple always yields the same coefficients.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;
use crate::monomials::{binomial, pair_count, Monomial4};
use crate::quartic::{gram_to_quartic, QuarticForm};
use crate::rng::{self, below, uniform};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("instances need at least 2 variables, got {0}")]
    TooFewVariables(usize),
    #[error("invalid family parameter: {0}")]
    BadParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    UniformSos,
    Spiked,
    PerturbedDiag,
    FineStructure,
    NonSosControl,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::UniformSos,
        Family::Spiked,
        Family::PerturbedDiag,
        Family::FineStructure,
        Family::NonSosControl,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Family::UniformSos => "uniform-sos",
            Family::Spiked => "spiked",
            Family::PerturbedDiag => "perturbed-diag",
            Family::FineStructure => "fine-structure",
            Family::NonSosControl => "non-sos-control",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.name() == s)
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// What is known about an instance's membership in the SOS cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SosStatus {
    SosByConstruction,
    NotSos,
    Unknown,
}

/// A full description of a generated instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub family: Family,
    pub n: usize,
    pub seed: u64,
    /// Spiked: value written into the chosen `x_i⁴` coefficient.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spike: Option<f64>,
    /// Perturbed-diag: increments are uniform on `[lo, hi]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturb_range: Option<(f64, f64)>,
    /// Fine-structure: scale of `(Σ x_i²)²`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<f64>,
    /// Fine-structure: noise is uniform on `[-noise, noise]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
}

pub const DEFAULT_SPIKE: f64 = 1e4;
pub const DEFAULT_PERTURB_RANGE: (f64, f64) = (0.0, 1e4);
pub const DEFAULT_BASE: f64 = 10.0;
pub const DEFAULT_NOISE: f64 = 0.01;

impl InstanceSpec {
    /// Spec with the family's default parameters filled in.
    pub fn new(family: Family, n: usize, seed: u64) -> Self {
        let mut s = InstanceSpec {
            family,
            n,
            seed,
            spike: None,
            perturb_range: None,
            base: None,
            noise: None,
        };
        match family {
            Family::Spiked => s.spike = Some(DEFAULT_SPIKE),
            Family::PerturbedDiag => s.perturb_range = Some(DEFAULT_PERTURB_RANGE),
            Family::FineStructure => {
                s.base = Some(DEFAULT_BASE);
                s.noise = Some(DEFAULT_NOISE);
            }
            Family::UniformSos | Family::NonSosControl => {}
        }
        s
    }

    pub fn generate<T: Scalar>(&self) -> Result<(QuarticForm<T>, SosStatus), InstanceError> {
        let (n, seed) = (self.n, self.seed);
        match self.family {
            Family::UniformSos => Ok((gen_uniform_sos(n, seed)?, SosStatus::SosByConstruction)),
            Family::Spiked => Ok((
                gen_spiked(n, seed, self.spike.unwrap_or(DEFAULT_SPIKE))?,
                SosStatus::SosByConstruction,
            )),
            Family::PerturbedDiag => Ok((
                gen_perturbed_diag(n, seed, self.perturb_range.unwrap_or(DEFAULT_PERTURB_RANGE))?,
                SosStatus::SosByConstruction,
            )),
            Family::FineStructure => gen_fine_structure(
                n,
                seed,
                self.base.unwrap_or(DEFAULT_BASE),
                self.noise.unwrap_or(DEFAULT_NOISE),
            ),
            Family::NonSosControl => Ok((gen_non_sos_control(n)?, SosStatus::NotSos)),
        }
    }
}

fn check_n(n: usize) -> Result<(), InstanceError> {
    if n < 2 {
        Err(InstanceError::TooFewVariables(n))
    } else {
        Ok(())
    }
}

fn uniform_sos_from<T: Scalar>(n: usize, rng: &mut impl rand_core::RngCore) -> QuarticForm<T> {
    let p = pair_count(n);
    let b = Matrix::from_fn(p, p, |_, _| uniform(rng, -1.0, 1.0));
    let q = gram_to_quartic(&b.gram_rows()).expect("square Gram matrix of side C(n+1,2)");
    let coeffs = q.coeffs().iter().map(|&c| T::of(c)).collect();
    QuarticForm::from_vec_unchecked(n, coeffs)
}

/// `m₂ (B Bᵀ) m₂ᵀ` with `B` square of side `C(n+1,2)` and entries uniform on `[-1, 1]`.
///
/// The Gram matrix is formed in `f64` whatever `T` is.
pub fn gen_uniform_sos<T: Scalar>(n: usize, seed: u64) -> Result<QuarticForm<T>, InstanceError> {
    check_n(n)?;
    Ok(uniform_sos_from(n, &mut rng::stream(seed, rng::STREAM_UNIFORM_SOS)))
}

/// A uniform instance with one random `x_i⁴` coefficient overwritten by `spike`.
///
/// Overwriting keeps the form SOS only if `spike` is at least the original
/// coefficient; otherwise the base polynomial is redrawn from the same stream.
pub fn gen_spiked<T: Scalar>(n: usize, seed: u64, spike: f64) -> Result<QuarticForm<T>, InstanceError> {
    check_n(n)?;
    if !spike.is_finite() || spike < 0.0 {
        return Err(InstanceError::BadParameter(format!("spike must be finite and >= 0, got {spike}")));
    }
    let mut rng = rng::stream(seed, rng::STREAM_SPIKED);
    for _ in 0..1000 {
        let mut q: QuarticForm<T> = uniform_sos_from(n, &mut rng);
        let i = below(&mut rng, n as u64) as usize;
        let m = Monomial4::new_unchecked([i; 4]);
        if T::of(spike) >= q[m] {
            q[m] = T::of(spike);
            return Ok(q);
        }
    }
    Err(InstanceError::BadParameter(format!(
        "spike {spike} is below every drawn x_i^4 coefficient"
    )))
}

/// A uniform instance with independent increments on every `x_i⁴` and `x_i²x_j²` coefficient.
pub fn gen_perturbed_diag<T: Scalar>(
    n: usize,
    seed: u64,
    range: (f64, f64),
) -> Result<QuarticForm<T>, InstanceError> {
    check_n(n)?;
    let (lo, hi) = range;
    if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
        return Err(InstanceError::BadParameter(format!(
            "perturbation range must satisfy 0 <= lo <= hi, got [{lo}, {hi}]"
        )));
    }
    let mut rng = rng::stream(seed, rng::STREAM_PERTURBED);
    let mut q: QuarticForm<T> = uniform_sos_from(n, &mut rng);
    for i in 0..n {
        for j in i..n {
            let m = Monomial4::new_unchecked([i, i, j, j]);
            q[m] += T::of(uniform(&mut rng, lo, hi));
        }
    }
    Ok(q)
}

/// `base·(Σ x_i²)² + r` with every coefficient of `r` uniform on `[-noise, noise]`.
pub fn gen_fine_structure<T: Scalar>(
    n: usize,
    seed: u64,
    base: f64,
    noise: f64,
) -> Result<(QuarticForm<T>, SosStatus), InstanceError> {
    check_n(n)?;
    if !(noise.is_finite() && noise >= 0.0 && base.is_finite()) {
        return Err(InstanceError::BadParameter(format!(
            "need finite base and noise >= 0, got base {base}, noise {noise}"
        )));
    }
    let mut q = QuarticForm::<T>::from_vec_unchecked(n, vec![T::zero(); binomial(n + 3, 4)]);
    for i in 0..n {
        q[Monomial4::new_unchecked([i; 4])] = T::of(base);
        for j in i + 1..n {
            q[Monomial4::new_unchecked([i, i, j, j])] = T::of(2.0 * base);
        }
    }
    let mut rng = rng::stream(seed, rng::STREAM_FINE);
    let coeffs = q
        .coeffs()
        .iter()
        .map(|&c| c + T::of(uniform(&mut rng, -noise, noise)))
        .collect();
    Ok((QuarticForm::from_vec_unchecked(n, coeffs), SosStatus::Unknown))
}

/// `-(Σ x_i²)²`: negative away from the origin, so not a sum of squares.
pub fn gen_non_sos_control<T: Scalar>(n: usize) -> Result<QuarticForm<T>, InstanceError> {
    check_n(n)?;
    let (q, _) = gen_fine_structure::<T>(n, 0, -1.0, 0.0)?;
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monomials::{monomial_class, ClassKind, MonomialIndex};

    fn random_points(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut r = rng::stream(seed, 99);
        (0..count)
            .map(|_| (0..n).map(|_| uniform(&mut r, -1.0, 1.0)).collect())
            .collect()
    }

    #[test]
    fn uniform_sos_basics() {
        let q = gen_uniform_sos::<f64>(10, 0).unwrap();
        assert_eq!(q.len(), 715);
        assert_eq!(q, gen_uniform_sos::<f64>(10, 0).unwrap());
        assert_ne!(q, gen_uniform_sos::<f64>(10, 1).unwrap());
        for x in random_points(10, 100, 1) {
            assert!(q.evaluate(&x).unwrap() >= 0.0);
        }
        assert_eq!(gen_uniform_sos::<f64>(1, 0), Err(InstanceError::TooFewVariables(1)));
    }

    #[test]
    fn spiked_changes_one_fourth_power() {
        let n = 6;
        let spiked = gen_spiked::<f64>(n, 3, DEFAULT_SPIKE).unwrap();
        // the spiked stream redraws its own base; reconstruct it
        let mut r = rng::stream(3, rng::STREAM_SPIKED);
        let base: QuarticForm<f64> = uniform_sos_from(n, &mut r);
        let idx = MonomialIndex::new(n);
        let mut changed = Vec::new();
        for m in idx.iter() {
            if spiked.coeff(&m) != base.coeff(&m) {
                changed.push(m);
            }
        }
        assert_eq!(changed.len(), 1);
        assert_eq!(monomial_class(&changed[0]).kind(), ClassKind::Fourth);
        assert_eq!(spiked.coeff(&changed[0]), 10_000.0);
    }

    #[test]
    fn perturbed_touches_only_diagonal_classes() {
        let n = 5;
        let q = gen_perturbed_diag::<f64>(n, 2, DEFAULT_PERTURB_RANGE).unwrap();
        let mut r = rng::stream(2, rng::STREAM_PERTURBED);
        let base: QuarticForm<f64> = uniform_sos_from(n, &mut r);
        for m in MonomialIndex::new(n).iter() {
            let d = q.coeff(&m) - base.coeff(&m);
            match monomial_class(&m).kind() {
                ClassKind::Fourth | ClassKind::TwoSquares => assert!(d >= 0.0),
                _ => assert_eq!(d, 0.0),
            }
        }
        assert!(gen_perturbed_diag::<f64>(n, 2, (5.0, 1.0)).is_err());
    }

    #[test]
    fn fine_structure_without_noise() {
        let (q, status) = gen_fine_structure::<f64>(4, 0, 10.0, 0.0).unwrap();
        assert_eq!(status, SosStatus::Unknown);
        for m in MonomialIndex::new(4).iter() {
            let want = match monomial_class(&m).kind() {
                ClassKind::Fourth => 10.0,
                ClassKind::TwoSquares => 20.0,
                _ => 0.0,
            };
            assert_eq!(q.coeff(&m), want);
        }
    }

    #[test]
    fn fine_structure_noise_statistics() {
        let n = 20;
        let (noisy, _) = gen_fine_structure::<f64>(n, 5, 10.0, 0.01).unwrap();
        let (clean, _) = gen_fine_structure::<f64>(n, 5, 10.0, 0.0).unwrap();
        let diffs: Vec<f64> = noisy.coeffs().iter().zip(clean.coeffs()).map(|(a, b)| a - b).collect();
        assert!(diffs.iter().all(|d| d.abs() <= 0.01));
        let mean_abs = diffs.iter().map(|d| d.abs()).sum::<f64>() / diffs.len() as f64;
        assert!((mean_abs - 0.005).abs() < 2e-4, "{mean_abs}");
    }

    #[test]
    fn non_sos_control_is_negative() {
        let q = gen_non_sos_control::<f64>(5).unwrap();
        for i in 0..5 {
            assert_eq!(q.coeff(&Monomial4::new_unchecked([i; 4])), -1.0);
        }
        for x in random_points(5, 50, 4) {
            assert!(q.evaluate(&x).unwrap() < 0.0);
        }
    }

    #[test]
    fn every_family_has_full_length() {
        for f in Family::ALL {
            for n in [2, 3, 7] {
                let (q, _) = InstanceSpec::new(f, n, 1).generate::<f64>().unwrap();
                assert_eq!(q.len(), binomial(n + 3, 4));
                let (again, _) = InstanceSpec::new(f, n, 1).generate::<f64>().unwrap();
                assert_eq!(q, again);
            }
            assert_eq!(Family::parse(f.name()), Some(f));
        }
    }
}
