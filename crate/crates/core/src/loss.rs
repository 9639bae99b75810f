//! Discretized functional and its exact parameter gradient.
//!
//! `loss = (x_b - x_a)/N * sum_i F(x_i, y(x_i), y'(x_i))` and
//! `d loss / d theta_k = (x_b - x_a)/N * sum_i [F_y dy/dtheta_k + F_dy dy'/dtheta_k]`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::approximators::{FamilySpec, Jet};
use crate::boundary::{compose_final_into, BoundaryCondition, BoundaryExponents};
use crate::error::{Error, Result};
use crate::integrand::IntegrandExpr;
use crate::scalar::Scalar;

/// Closed form `x -> (y(x), y'(x))`.
pub type SolutionFn<T> = Arc<dyn Fn(T) -> (T, T) + Send + Sync>;

#[derive(Clone)]
pub struct ExactSolution<T> {
    pub solution: SolutionFn<T>,
    /// Analytic value of the functional at the solution.
    pub j_exact: T,
}

impl<T: fmt::Debug> fmt::Debug for ExactSolution<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExactSolution")
            .field("j_exact", &self.j_exact)
            .finish_non_exhaustive()
    }
}

/// A fixed-endpoint variational problem.
#[derive(Debug, Clone)]
pub struct Problem<T> {
    pub name: String,
    pub integrand: IntegrandExpr,
    pub bc: BoundaryCondition<T>,
    pub exact: Option<ExactSolution<T>>,
}

impl<T: Scalar> Problem<T> {
    pub fn new(name: impl Into<String>, integrand: IntegrandExpr, bc: BoundaryCondition<T>) -> Self {
        Self {
            name: name.into(),
            integrand,
            bc,
            exact: None,
        }
    }

    pub fn with_exact(mut self, solution: SolutionFn<T>, j_exact: T) -> Self {
        self.exact = Some(ExactSolution { solution, j_exact });
        self
    }

    pub fn j_exact(&self) -> Option<T> {
        self.exact.as_ref().map(|e| e.j_exact)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GridMode {
    #[default]
    Midpoint,
    Random {
        seed: u64,
    },
}

/// Sample points strictly inside the interval with a common quadrature weight.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleGrid<T> {
    pub points: Vec<T>,
    pub weight: T,
}

/// Builds an `n`-point grid: cell midpoints, or sorted i.i.d. uniform draws.
pub fn sample_grid<T: Scalar>(bc: &BoundaryCondition<T>, n: usize, mode: GridMode) -> Result<SampleGrid<T>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample grid needs at least one point".into()));
    }
    let width = bc.width();
    let cell = width / T::from_usize_lossy(n);
    let points = match mode {
        GridMode::Midpoint => (0..n)
            .map(|i| bc.x_a + (T::from_usize_lossy(i) + T::lit(0.5)) * cell)
            .collect(),
        GridMode::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut points = Vec::with_capacity(n);
            while points.len() < n {
                let x = bc.x_a + T::lit(rng.random::<f64>()) * width;
                if bc.contains_open(x) {
                    points.push(x);
                }
            }
            points.sort_by(|a: &T, b: &T| a.partial_cmp(b).expect("finite samples"));
            points
        }
    };
    Ok(SampleGrid { points, weight: cell })
}

/// Loss and gradient with buffers reused across calls.
///
/// The gradient is laid out as the family parameters followed by
/// `rho_a, rho_b`.
pub struct LossEvaluator<'a, T> {
    problem: &'a Problem<T>,
    spec: &'a FamilySpec,
    net: Jet<T>,
    composed: Jet<T>,
}

impl<'a, T: Scalar> LossEvaluator<'a, T> {
    pub fn new(problem: &'a Problem<T>, spec: &'a FamilySpec) -> Self {
        let n = spec.param_count();
        Self {
            problem,
            spec,
            net: Jet::zeros(n),
            composed: Jet::zeros(n + 2),
        }
    }

    pub fn param_count(&self) -> usize {
        self.spec.param_count() + 2
    }

    /// Serial evaluation with a fixed summation order.
    pub fn loss_and_grad(
        &mut self,
        params: &[T],
        exps: &BoundaryExponents<T>,
        grid: &SampleGrid<T>,
        grad: &mut [T],
    ) -> Result<T> {
        grad.iter_mut().for_each(|g| *g = T::zero());
        let mut total = T::zero();
        for &x in &grid.points {
            total += self.accumulate(params, exps, x, grad)?;
        }
        finish(total, grid.weight, grad)
    }

    fn accumulate(&mut self, params: &[T], exps: &BoundaryExponents<T>, x: T, grad: &mut [T]) -> Result<T> {
        let p = self.problem;
        compose_final_into(self.spec, params, exps, &p.bc, x, &mut self.net, &mut self.composed)?;
        let jet = &self.composed;
        let f = p
            .integrand
            .eval(x, jet.y, jet.dy_dx)
            .map_err(|e| e.at(x.as_f64()))?;
        for ((g, &gy), &gdy) in grad.iter_mut().zip(&jet.grad_y).zip(&jet.grad_dy_dx) {
            *g += f.df_dy * gy + f.df_ddy * gdy;
        }
        Ok(f.value)
    }
}

fn finish<T: Scalar>(total: T, weight: T, grad: &mut [T]) -> Result<T> {
    grad.iter_mut().for_each(|g| *g *= weight);
    let loss = total * weight;
    if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::overflow("loss accumulation"));
    }
    Ok(loss)
}

/// Loss and gradient over `grid`; see [`LossEvaluator`].
pub fn loss_and_grad<T: Scalar>(
    problem: &Problem<T>,
    spec: &FamilySpec,
    params: &[T],
    exps: &BoundaryExponents<T>,
    grid: &SampleGrid<T>,
) -> Result<(T, Vec<T>)> {
    let mut eval = LossEvaluator::new(problem, spec);
    let mut grad = vec![T::zero(); eval.param_count()];
    let loss = eval.loss_and_grad(params, exps, grid, &mut grad)?;
    Ok((loss, grad))
}

/// Points per parallel work unit. Partial sums are combined in chunk order,
/// so the result does not depend on the thread count.
const PARALLEL_CHUNK: usize = 64;

/// Rayon-parallel variant of [`loss_and_grad`]. Agrees with the serial sum up
/// to rounding.
pub fn loss_and_grad_parallel<T: Scalar>(
    problem: &Problem<T>,
    spec: &FamilySpec,
    params: &[T],
    exps: &BoundaryExponents<T>,
    grid: &SampleGrid<T>,
) -> Result<(T, Vec<T>)> {
    let len = spec.param_count() + 2;
    let partials: Vec<(T, Vec<T>)> = grid
        .points
        .par_chunks(PARALLEL_CHUNK)
        .map(|chunk| {
            let mut eval = LossEvaluator::new(problem, spec);
            let mut grad = vec![T::zero(); len];
            let mut total = T::zero();
            for &x in chunk {
                total += eval.accumulate(params, exps, x, &mut grad)?;
            }
            Ok((total, grad))
        })
        .collect::<Result<_>>()?;
    let mut grad = vec![T::zero(); len];
    let mut total = T::zero();
    for (t, g) in partials {
        total += t;
        grad.iter_mut().zip(&g).for_each(|(a, b)| *a += *b);
    }
    let loss = finish(total, grid.weight, &mut grad)?;
    Ok((loss, grad))
}

/// Midpoint-rule value of the functional on an arbitrary function given as
/// `x -> (y, y')`.
pub fn functional_value<T: Scalar>(problem: &Problem<T>, y: impl Fn(T) -> (T, T), n: usize) -> Result<T> {
    let grid = sample_grid(&problem.bc, n, GridMode::Midpoint)?;
    let mut total = T::zero();
    for &x in &grid.points {
        let (v, d) = y(x);
        total += problem
            .integrand
            .eval(x, v, d)
            .map_err(|e| e.at(x.as_f64()))?
            .value;
    }
    Ok(total * grid.weight)
}
