//! Gradient descent and Adam over the flat parameter vector, plus the
//! training loop that ties the loss to an optimizer.

use std::collections::VecDeque;
use std::fmt;
use std::time::Instant;

use crate::approximators::{FamilySpec, ParamVector};
use crate::boundary::BoundaryExponents;
use crate::error::{Error, Result};
use crate::loss::{sample_grid, GridMode, LossEvaluator, Problem, SampleGrid};
use crate::scalar::Scalar;

/// Loss change below which early stopping triggers, measured over
/// [`EARLY_STOP_WINDOW`] steps.
pub const EARLY_STOP_TOLERANCE: f64 = 1e-12;
pub const EARLY_STOP_WINDOW: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Algorithm {
    Sgd,
    #[default]
    Adam,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Sgd => "sgd",
            Algorithm::Adam => "adam",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(Algorithm::Sgd),
            "adam" => Ok(Algorithm::Adam),
            other => Err(Error::InvalidArgument(format!(
                "unknown algorithm `{other}` (expected sgd or adam)"
            ))),
        }
    }
}

/// Sampling of the quadrature grid during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GridSampling {
    /// Fixed midpoint grid.
    #[default]
    Midpoint,
    /// Fresh uniform draws every step, seeded from the run seed and step.
    Resample,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    pub learning_rate: f64,
    pub steps: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub grid_n: usize,
    pub grid_sampling: GridSampling,
    pub seed: u64,
    pub record_every: usize,
    /// Train the boundary exponents; when false they stay at 1.
    pub train_exponents: bool,
    /// Lower bound on the trained boundary exponents, enforced by projection
    /// after every step; `0` disables it. Below 1/2 a boundary layer can
    /// hide between the endpoint and the first grid point, where the
    /// quadrature never sees its derivative, so the loss can drop below the
    /// true minimum of the functional.
    pub min_exponent: f64,
    pub early_stop: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Adam,
            learning_rate: 0.01,
            steps: 20_000,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            grid_n: 1000,
            grid_sampling: GridSampling::Midpoint,
            seed: 42,
            record_every: 10,
            train_exponents: true,
            min_exponent: 0.5,
            early_stop: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if !(self.adam_beta1 > 0.0 && self.adam_beta1 < 1.0) {
            return bad(format!("adam beta1 must lie in (0, 1), got {}", self.adam_beta1));
        }
        if !(self.adam_beta2 > 0.0 && self.adam_beta2 < 1.0) {
            return bad(format!("adam beta2 must lie in (0, 1), got {}", self.adam_beta2));
        }
        if !(self.adam_eps > 0.0) {
            return bad(format!("adam eps must be positive, got {}", self.adam_eps));
        }
        if self.grid_n == 0 {
            return bad("grid size must be positive".into());
        }
        if !(self.min_exponent >= 0.0 && self.min_exponent <= 1.0) {
            return bad(format!("min_exponent must lie in [0, 1], got {}", self.min_exponent));
        }
        if self.record_every == 0 {
            return bad("record_every must be positive".into());
        }
        Ok(())
    }
}

/// Plain descent step `w <- w - lr * grad`.
pub fn sgd_step<T: Scalar>(params: &mut [T], grad: &[T], lr: T) {
    assert_eq!(params.len(), grad.len(), "parameter/gradient length mismatch");
    for (w, &g) in params.iter_mut().zip(grad) {
        *w -= lr * g;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig<T> {
    pub learning_rate: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
}

impl<T: Scalar> AdamConfig<T> {
    pub fn new(learning_rate: T) -> Self {
        Self {
            learning_rate,
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            eps: T::lit(1e-8),
        }
    }
}

/// First and second moment accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub t: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![T::zero(); len],
            v: vec![T::zero(); len],
            t: 0,
        }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step<T: Scalar>(state: &mut AdamState<T>, params: &mut [T], grad: &[T], cfg: &AdamConfig<T>) {
    assert_eq!(params.len(), grad.len(), "parameter/gradient length mismatch");
    assert_eq!(state.m.len(), params.len(), "optimizer state length mismatch");
    state.t += 1;
    let one = T::one();
    let t = i32::try_from(state.t).unwrap_or(i32::MAX);
    let c1 = one - cfg.beta1.powi(t);
    let c2 = one - cfg.beta2.powi(t);
    for i in 0..params.len() {
        let g = grad[i];
        state.m[i] = cfg.beta1 * state.m[i] + (one - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (one - cfg.beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.eps);
    }
}

enum Stepper<T> {
    Sgd(T),
    Adam(AdamState<T>, AdamConfig<T>),
}

impl<T: Scalar> Stepper<T> {
    fn new(cfg: &TrainConfig, len: usize) -> Self {
        let lr = T::lit(cfg.learning_rate);
        match cfg.algorithm {
            Algorithm::Sgd => Stepper::Sgd(lr),
            Algorithm::Adam => Stepper::Adam(
                AdamState::new(len),
                AdamConfig {
                    learning_rate: lr,
                    beta1: T::lit(cfg.adam_beta1),
                    beta2: T::lit(cfg.adam_beta2),
                    eps: T::lit(cfg.adam_eps),
                },
            ),
        }
    }

    fn step(&mut self, params: &mut [T], grad: &[T]) {
        match self {
            Stepper::Sgd(lr) => sgd_step(params, grad, *lr),
            Stepper::Adam(state, cfg) => adam_step(state, params, grad, cfg),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainStatus {
    Converged,
    MaxSteps,
    Failed(String),
}

impl TrainStatus {
    pub fn is_failed(&self) -> bool {
        matches!(self, TrainStatus::Failed(_))
    }
}

impl fmt::Display for TrainStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainStatus::Converged => f.write_str("converged"),
            TrainStatus::MaxSteps => f.write_str("max_steps"),
            TrainStatus::Failed(reason) => write!(f, "failed: {reason}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport<T> {
    pub structure: FamilySpec,
    /// `(step, loss)` pairs, steps strictly increasing.
    pub loss_history: Vec<(usize, T)>,
    pub final_params: ParamVector<T>,
    pub final_exponents: BoundaryExponents<T>,
    /// Loss at `final_params`; NaN when the very first evaluation failed.
    pub final_loss: T,
    /// Estimate of the functional at the trained solution. Equal to
    /// `final_loss` because loss and quadrature share one weight convention.
    pub j_final: T,
    pub steps_run: usize,
    pub wall_time_ms: f64,
    pub status: TrainStatus,
}

/// Trains `spec` on `problem`. Failures are reported through
/// [`TrainReport::status`]; only invalid configurations return `Err`.
pub fn train<T: Scalar>(problem: &Problem<T>, spec: &FamilySpec, cfg: &TrainConfig) -> Result<TrainReport<T>> {
    cfg.validate()?;
    let start = Instant::now();
    let bc = &problem.bc;
    let mut params = spec.init_params(cfg.seed, bc.x_a, bc.x_b);
    let mut exps = BoundaryExponents::unit();
    let n_family = spec.param_count();

    let mut eval = LossEvaluator::new(problem, spec);
    let mut flat: Vec<T> = params.iter().copied().chain([exps.rho_a, exps.rho_b]).collect();
    let mut grad = vec![T::zero(); flat.len()];
    let mut stepper = Stepper::new(cfg, flat.len());

    let fixed_grid = sample_grid(bc, cfg.grid_n, GridMode::Midpoint)?;
    let mut history = Vec::new();
    let mut window: VecDeque<T> = VecDeque::with_capacity(EARLY_STOP_WINDOW + 1);
    let mut last_loss = T::nan();
    let mut status = TrainStatus::MaxSteps;
    let mut steps_run = 0;
    let mut good_exps = exps;
    let rho_floor = T::lit(cfg.min_exponent.ln());

    for step in 0..=cfg.steps {
        let resampled;
        let grid: &SampleGrid<T> = match cfg.grid_sampling {
            GridSampling::Midpoint => &fixed_grid,
            GridSampling::Resample => {
                let seed = cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(step as u64);
                resampled = sample_grid(bc, cfg.grid_n, GridMode::Random { seed })?;
                &resampled
            }
        };
        let loss = match eval.loss_and_grad(&flat[..n_family], &exps, grid, &mut grad) {
            Ok(loss) => loss,
            Err(e) => {
                status = TrainStatus::Failed(format!("step {step}: {e}"));
                break;
            }
        };
        last_loss = loss;
        params.0.copy_from_slice(&flat[..n_family]);
        good_exps = exps;
        steps_run = step;

        let last = step == cfg.steps;
        let mut converged = false;
        if cfg.early_stop {
            window.push_back(loss);
            if window.len() > EARLY_STOP_WINDOW {
                let old = window.pop_front().expect("nonempty window");
                converged = (loss - old).abs() < T::lit(EARLY_STOP_TOLERANCE);
            }
        }
        if step % cfg.record_every == 0 || last || converged {
            history.push((step, loss));
        }
        if converged {
            status = TrainStatus::Converged;
            break;
        }
        if last {
            break;
        }

        if !cfg.train_exponents {
            grad[n_family] = T::zero();
            grad[n_family + 1] = T::zero();
        }
        stepper.step(&mut flat, &grad);
        for rho in &mut flat[n_family..] {
            *rho = rho.max(rho_floor);
        }
        exps = BoundaryExponents {
            rho_a: flat[n_family],
            rho_b: flat[n_family + 1],
        };
    }

    Ok(TrainReport {
        structure: spec.clone(),
        loss_history: history,
        final_params: params,
        final_exponents: good_exps,
        final_loss: last_loss,
        j_final: last_loss,
        steps_run,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        status,
    })
}
