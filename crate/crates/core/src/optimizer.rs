//! Adam fitting of the network to a target quartic.

use std::time::Instant;

use rand_core::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;
use crate::monomials::pair_count;
use crate::network::{expand, loss_and_gradient_with, AMode, ExpansionPlan, NetworkGradient, NetworkParams};
use crate::quartic::QuarticForm;
use crate::rng::{self, uniform};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum SolveError<T: Scalar> {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("target polynomial is identically zero")]
    ZeroTarget,
    #[error("target has {target} variables but the configuration is for {expected}")]
    DimensionMismatch { expected: usize, target: usize },
    #[error("optimization diverged at iteration {iteration}")]
    Diverged {
        iteration: usize,
        /// Last parameters with a finite loss, in the target's scale.
        last_params: Box<NetworkParams<T>>,
    },
}

/// Adam hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// How the target is rescaled before fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetScaling {
    /// Divide by the coefficient norm.
    #[default]
    UnitNorm,
    /// Divide by the root-mean-square coefficient.
    UnitRms,
    /// Fit the target as given.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub scaling: TargetScaling,
    /// Rescale the random initial `B` so the starting quartic has the scaled target's norm.
    pub match_init_scale: bool,
    /// Number of squares; `C(n+1, 2)` when unset.
    pub rank_k: Option<usize>,
    /// Rows of `A`; `n` when unset. Ignored (forced to `n`) in identity mode.
    pub a_rows: Option<usize>,
    pub a_mode: AMode,
    pub adam: AdamConfig,
    pub max_iters: usize,
    /// Relative coefficient error at which the fit counts as converged.
    pub tol: f64,
    pub seed: u64,
    /// Record a trace point every this many iterations.
    pub trace_stride: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            scaling: TargetScaling::UnitNorm,
            match_init_scale: true,
            rank_k: None,
            a_rows: None,
            a_mode: AMode::General,
            adam: AdamConfig::default(),
            max_iters: 50_000,
            tol: 1e-8,
            seed: 0,
            trace_stride: 10,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<(), String> {
        let a = &self.adam;
        if !(a.learning_rate > 0.0 && a.learning_rate.is_finite()) {
            return Err(format!("learning rate must be positive, got {}", a.learning_rate));
        }
        if !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) {
            return Err("beta1 and beta2 must lie in [0, 1)".into());
        }
        if !(a.epsilon >= 0.0) {
            return Err("epsilon must be non-negative".into());
        }
        if !(self.tol > 0.0) {
            return Err(format!("tolerance must be positive, got {}", self.tol));
        }
        if self.rank_k == Some(0) {
            return Err("rank k must be at least 1".into());
        }
        if self.trace_stride == 0 {
            return Err("trace stride must be at least 1".into());
        }
        Ok(())
    }

    pub fn k_for(&self, n: usize) -> usize {
        self.rank_k.unwrap_or_else(|| pair_count(n))
    }

    pub fn m_for(&self, n: usize) -> usize {
        match self.a_mode {
            AMode::Identity => n,
            AMode::General => self.a_rows.unwrap_or(n),
        }
    }
}

/// Random starting point for the given shape.
///
/// General `A` has entries uniform on `[-1, 1]`; `B` has entries uniform on
/// `[-1, 1]` divided by `√(k·m)`. Draws `A` row-major first, then `B`.
pub fn init_params<T: Scalar>(n: usize, config: &SolveConfig, rng: &mut impl RngCore) -> NetworkParams<T> {
    let k = config.k_for(n);
    let m = config.m_for(n).max(n);
    let a = match config.a_mode {
        AMode::Identity => Matrix::identity(n),
        AMode::General => Matrix::from_fn(m, n, |_, _| T::of(uniform(rng, -1.0, 1.0))),
    };
    let scale = 1.0 / ((k * m) as f64).sqrt();
    let b = Matrix::from_fn(k, n * m, |_, _| T::of(scale * uniform(rng, -1.0, 1.0)));
    NetworkParams::new(a, b, config.a_mode).expect("shapes are consistent by construction")
}

/// Generator used by [`solve`] for its initial guess.
pub fn init_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    rng::stream(seed, rng::STREAM_INIT)
}

/// First and second moment estimates for every trainable weight.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub step: u64,
    m_a: Vec<T>,
    v_a: Vec<T>,
    m_b: Vec<T>,
    v_b: Vec<T>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &NetworkParams<T>) -> Self {
        let na = params.a().as_slice().len();
        let nb = params.b().as_slice().len();
        AdamState {
            step: 0,
            m_a: vec![T::zero(); na],
            v_a: vec![T::zero(); na],
            m_b: vec![T::zero(); nb],
            v_b: vec![T::zero(); nb],
        }
    }
}

/// Bias-corrected Adam update of `x` in place; `step` is the 1-based step number.
pub fn adam_update<T: Scalar>(x: &mut [T], grad: &[T], m: &mut [T], v: &mut [T], step: u64, cfg: &AdamConfig) {
    let (b1, b2) = (T::of(cfg.beta1), T::of(cfg.beta2));
    let one = T::one();
    let c1 = one - T::of(cfg.beta1.powi(step as i32));
    let c2 = one - T::of(cfg.beta2.powi(step as i32));
    let lr = T::of(cfg.learning_rate);
    let eps = T::of(cfg.epsilon);
    for i in 0..x.len() {
        let g = grad[i];
        m[i] = b1 * m[i] + (one - b1) * g;
        v[i] = b2 * v[i] + (one - b2) * g * g;
        let mhat = m[i] / c1;
        let vhat = v[i] / c2;
        x[i] -= lr * mhat / (vhat.sqrt() + eps);
    }
}

/// One Adam step on all trainable weights; `A` is left alone in identity mode.
pub fn adam_step<T: Scalar>(
    params: &mut NetworkParams<T>,
    grads: &NetworkGradient<T>,
    state: &mut AdamState<T>,
    cfg: &AdamConfig,
) {
    state.step += 1;
    let t = state.step;
    if params.a_mode() == AMode::General {
        let a = params.a_mut().as_mut_slice();
        adam_update(a, grads.a.as_slice(), &mut state.m_a, &mut state.v_a, t, cfg);
    }
    let b = params.b_mut().as_mut_slice();
    adam_update(b, grads.b.as_slice(), &mut state.m_b, &mut state.v_b, t, cfg);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    /// Squared coefficient error in the target's own scale.
    pub squared_error: f64,
    pub relative_error: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport<T> {
    /// Best iterate, rescaled so that it expands to the unnormalized target.
    pub best_params: NetworkParams<T>,
    pub best_relative_error: f64,
    pub best_squared_error: f64,
    pub best_iteration: usize,
    /// Number of optimizer steps taken.
    pub iterations: usize,
    pub trace: Vec<TracePoint>,
    pub converged: bool,
    pub wall_time_s: f64,
    /// Coefficient norm the target was divided by internally.
    pub target_norm: f64,
}

/// Fits the network to `target` with Adam and keeps the best iterate.
///
/// The target is divided by its coefficient norm before fitting, and the
/// random initial `B` is rescaled so the starting quartic has unit norm too.
/// Iteration `t` is the loss at the parameters after `t` steps; the loop
/// stops at the first iterate within `tol` or after `max_iters` steps.
pub fn solve<T: Scalar>(target: &QuarticForm<T>, config: &SolveConfig) -> Result<SolveReport<T>, SolveError<T>> {
    config.validate().map_err(SolveError::InvalidConfig)?;
    let n = target.n();
    if config.m_for(n) < n {
        return Err(SolveError::InvalidConfig(format!(
            "A needs at least n = {n} rows, got {}",
            config.m_for(n)
        )));
    }
    let norm = target.norm();
    if !(norm > T::zero()) {
        return Err(SolveError::ZeroTarget);
    }
    let divisor = match config.scaling {
        TargetScaling::UnitNorm => norm,
        TargetScaling::UnitRms => norm / T::of((target.len() as f64).sqrt()),
        TargetScaling::None => T::one(),
    };
    let scale = divisor.as_f64();
    let unit_target = target.scaled(T::one() / divisor);
    let unit_norm = unit_target.norm();

    let mut params = init_params::<T>(n, config, &mut init_rng(config.seed));
    let start_norm = expand(&params).norm();
    if config.match_init_scale && start_norm > T::zero() {
        params.scale_b((unit_norm / start_norm).sqrt());
    }
    let denormalize = |mut p: NetworkParams<T>| {
        p.scale_b(divisor.sqrt());
        p
    };

    let plan = ExpansionPlan::new(n);
    let start = Instant::now();
    let mut state = AdamState::new(&params);
    let mut trace = Vec::new();
    let mut best: Option<(TracePoint, NetworkParams<T>)> = None;
    let mut last_good = params.clone();
    let mut initial_loss = None;
    let mut iteration = 0;
    loop {
        let (loss, grads) =
            loss_and_gradient_with(&plan, &params, &unit_target).expect("dimensions checked above");
        let loss = loss.as_f64();
        let blown_up = initial_loss.is_some_and(|l0: f64| loss > 1e6 * l0.max(f64::MIN_POSITIVE));
        if !loss.is_finite() || blown_up {
            return Err(SolveError::Diverged {
                iteration,
                last_params: Box::new(denormalize(last_good)),
            });
        }
        initial_loss.get_or_insert(loss);
        let point = TracePoint {
            iteration,
            squared_error: loss * scale * scale,
            relative_error: loss.sqrt() / unit_norm.as_f64(),
            wall_time_s: start.elapsed().as_secs_f64(),
        };
        if best.as_ref().is_none_or(|(b, _)| point.relative_error < b.relative_error) {
            best = Some((point, params.clone()));
        }
        let done = point.relative_error <= config.tol || iteration >= config.max_iters;
        if iteration % config.trace_stride == 0 || done {
            trace.push(point);
        }
        if done {
            break;
        }
        last_good.clone_from(&params);
        adam_step(&mut params, &grads, &mut state, &config.adam);
        iteration += 1;
    }
    let (best_point, best_params) = best.expect("at least one iterate is evaluated");
    if !trace.iter().any(|p| p.iteration == best_point.iteration) {
        let at = trace.partition_point(|p| p.iteration < best_point.iteration);
        trace.insert(at, best_point);
    }
    Ok(SolveReport {
        best_params: denormalize(best_params),
        best_relative_error: best_point.relative_error,
        best_squared_error: best_point.squared_error,
        best_iteration: best_point.iteration,
        iterations: iteration,
        trace,
        converged: best_point.relative_error <= config.tol,
        wall_time_s: start.elapsed().as_secs_f64(),
        target_norm: scale,
    })
}
