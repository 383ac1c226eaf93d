//! Levenberg–Marquardt least squares with held parameters and an iterate
//! trace.
//!
//! Minimizes `½‖r(p)‖²` for a residual vector with analytic Jacobian. The
//! damping acts on the Jacobi-scaled normal equations, and only steps that
//! lower the cost are accepted, so the recorded cost trace is monotone.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Residual model: fills `residuals` and, if given, the Jacobian
/// (`rows × params`, row-major per residual).
pub trait Problem {
    fn residual_count(&self) -> usize;
    fn evaluate(&self, params: &[f64], residuals: &mut [f64], jacobian: Option<&mut DMatrix<f64>>);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    pub max_iterations: usize,
    /// Converged when the relative cost change of an accepted step is below
    /// this.
    pub cost_tolerance: f64,
    /// Converged when the scaled step norm is below this.
    pub step_tolerance: f64,
    pub initial_damping: f64,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            cost_tolerance: 1e-10,
            step_tolerance: 1e-12,
            initial_damping: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub params: Vec<f64>,
    /// `½‖r‖²` at the solution.
    pub cost: f64,
    /// Cost after every accepted step, starting with the initial cost.
    pub cost_trace: Vec<f64>,
    pub iterate_trace: Vec<Vec<f64>>,
    pub iterations: usize,
    /// `JᵀJ` over all parameters at the solution.
    pub normal_matrix: DMatrix<f64>,
    pub residuals: Vec<f64>,
}

fn cost_of(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

/// Runs the solver from `start`; parameters with `hold[k]` stay fixed.
pub fn minimize(problem: &impl Problem, start: &[f64], hold: &[bool], options: &Options) -> Result<Solution> {
    let np = start.len();
    let m = problem.residual_count();
    let free: Vec<usize> = (0..np).filter(|&k| !hold.get(k).copied().unwrap_or(false)).collect();
    let mut p = start.to_vec();
    let mut r = vec![0.0; m];
    let mut jac = DMatrix::zeros(m, np);
    problem.evaluate(&p, &mut r, Some(&mut jac));
    let mut cost = cost_of(&r);
    if !cost.is_finite() {
        return Err(Error::Domain("non-finite residuals at the starting point".into()));
    }
    let mut cost_trace = vec![cost];
    let mut iterate_trace = vec![p.clone()];
    let mut lambda = options.initial_damping;
    let mut trial_r = vec![0.0; m];
    let nf = free.len();

    let finish = |p: Vec<f64>, cost, cost_trace, iterate_trace, iterations, jac: &DMatrix<f64>, r: Vec<f64>| Solution {
        params: p,
        cost,
        cost_trace,
        iterate_trace,
        iterations,
        normal_matrix: jac.transpose() * jac,
        residuals: r,
    };
    if nf == 0 {
        return Ok(finish(p, cost, cost_trace, iterate_trace, 0, &jac, r));
    }

    for iter in 1..=options.max_iterations {
        let jf = DMatrix::from_fn(m, nf, |i, j| jac[(i, free[j])]);
        let rv = DVector::from_column_slice(&r);
        let jtj = jf.transpose() * &jf;
        let g = jf.transpose() * rv;
        let scale: Vec<f64> = (0..nf).map(|j| jtj[(j, j)].sqrt().max(1e-300)).collect();
        let a = DMatrix::from_fn(nf, nf, |i, j| jtj[(i, j)] / (scale[i] * scale[j]));
        let gs = DVector::from_fn(nf, |i, _| g[i] / scale[i]);

        let mut accepted = false;
        while lambda < 1e16 {
            let mut damped = a.clone();
            for j in 0..nf {
                damped[(j, j)] += lambda * (1.0 + a[(j, j)]);
            }
            let Some(step) = damped.cholesky().map(|c| c.solve(&(-&gs))) else {
                lambda *= 10.0;
                continue;
            };
            let step_norm = step.norm();
            let mut trial = p.clone();
            for (j, &k) in free.iter().enumerate() {
                trial[k] += step[j] / scale[j];
            }
            problem.evaluate(&trial, &mut trial_r, None);
            let trial_cost = cost_of(&trial_r);
            if trial_cost.is_finite() && trial_cost <= cost {
                let rel = (cost - trial_cost) / cost.max(f64::MIN_POSITIVE);
                p = trial;
                std::mem::swap(&mut r, &mut trial_r);
                problem.evaluate(&p, &mut r, Some(&mut jac));
                cost = trial_cost;
                cost_trace.push(cost);
                iterate_trace.push(p.clone());
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                if rel < options.cost_tolerance || step_norm < options.step_tolerance || cost == 0.0 {
                    return Ok(finish(p, cost, cost_trace, iterate_trace, iter, &jac, r));
                }
                break;
            }
            if step_norm < options.step_tolerance {
                // No descent left at machine resolution.
                return Ok(finish(p, cost, cost_trace, iterate_trace, iter, &jac, r));
            }
            lambda *= 4.0;
        }
        if !accepted {
            return Ok(finish(p, cost, cost_trace, iterate_trace, iter, &jac, r));
        }
    }
    Err(Error::NotConverged {
        iterations: options.max_iterations,
        final_cost: cost,
        cost_trace,
    })
}
