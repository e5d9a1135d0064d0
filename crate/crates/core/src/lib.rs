//! Numerical sum-of-squares certification for dense quartic forms.
//!
//! A target quartic is fitted by the network `‖B·Z(x)·A·x‖²`, whose output
//! is a sum of `k` squared quadratics by construction. A good fit is turned
//! into an explicit [`Certificate`] that [`certificate::verify`] re-checks
//! with code independent of the fitting kernel.

pub mod bench;
pub mod certificate;
pub mod format;
pub mod instances;
pub mod matrix;
pub mod monomials;
pub mod network;
pub mod optimizer;
pub mod quartic;
pub mod rng;
pub mod scalar;

pub use certificate::{Certificate, Verdict};
pub use matrix::Matrix;
pub use monomials::{Monomial4, MonomialClass, MonomialIndex};
pub use network::{AMode, ExpansionPlan, NetworkParams, SecondDerivTable};
pub use optimizer::{SolveConfig, SolveReport};
pub use quartic::{Quadratic, QuarticForm};
pub use scalar::Scalar;

pub type QuarticF64 = QuarticForm<f64>;
pub type QuarticF32 = QuarticForm<f32>;
pub type QuadraticF64 = Quadratic<f64>;
pub type ParamsF64 = NetworkParams<f64>;
pub type ParamsF32 = NetworkParams<f32>;
pub type CertificateF64 = Certificate<f64>;
pub type ReportF64 = SolveReport<f64>;
