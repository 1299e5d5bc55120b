//! Small dense Levenberg-Marquardt least-squares solver.
//!
//! Minimizes `½‖r(p)‖²` for a residual vector `r` with an analytic or
//! forward-difference Jacobian. Sized for the handful of parameters used by
//! the peak and surface fits.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A least-squares problem.
pub trait Problem {
    fn params(&self) -> usize;

    fn observations(&self) -> usize;

    /// Writes `r(p)` into `out` (length [`Problem::observations`]).
    fn residuals(&self, p: &[f64], out: &mut [f64]);

    /// Magnitude against which the step in parameter `j` is judged for
    /// convergence. Defaults to `|pⱼ|`; location parameters should return a
    /// width instead.
    fn scale(&self, p: &[f64], j: usize) -> f64 {
        p[j].abs()
    }

    /// Writes the Jacobian `∂rᵢ/∂pⱼ`. Defaults to forward differences.
    fn jacobian(&self, p: &[f64], jac: &mut DMatrix<f64>) {
        let m = self.observations();
        let mut r0 = vec![0.0; m];
        let mut r1 = vec![0.0; m];
        self.residuals(p, &mut r0);
        let mut q = p.to_vec();
        for j in 0..p.len() {
            let h = 1e-7 * p[j].abs().max(1e-7);
            q[j] = p[j] + h;
            self.residuals(&q, &mut r1);
            q[j] = p[j];
            for i in 0..m {
                jac[(i, j)] = (r1[i] - r0[i]) / h;
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LevenbergMarquardt {
    pub max_iterations: usize,
    /// Converged when an accepted step satisfies `|δⱼ| ≤ tol·(scaleⱼ + tol)`
    /// for every parameter.
    pub step_tolerance: f64,
    pub initial_lambda: f64,
}

impl Default for LevenbergMarquardt {
    fn default() -> Self {
        Self { max_iterations: 200, step_tolerance: 1e-9, initial_lambda: 1e-3 }
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub params: Vec<f64>,
    /// `s²(JᵀJ)⁻¹` with `s² = SSR/(m − n)`; `None` if `JᵀJ` is singular.
    pub covariance: Option<DMatrix<f64>>,
    pub ssr: f64,
    pub iterations: usize,
}

impl Solution {
    /// One-sigma standard error of parameter `j` (0 when unavailable).
    pub fn sigma(&self, j: usize) -> f64 {
        self.covariance.as_ref().map(|c| c[(j, j)].max(0.0).sqrt()).unwrap_or(0.0)
    }
}

fn ssr(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

impl LevenbergMarquardt {
    pub fn solve<P: Problem>(&self, problem: &P, initial: &[f64]) -> Result<Solution> {
        let n = problem.params();
        let m = problem.observations();
        if initial.len() != n {
            return Err(Error::Domain(format!("expected {n} initial parameters, got {}", initial.len())));
        }
        if m < n {
            return Err(Error::InsufficientData(format!("{m} observations for {n} parameters")));
        }
        let mut p = initial.to_vec();
        let mut r = vec![0.0; m];
        problem.residuals(&p, &mut r);
        let mut cost = ssr(&r);
        if !cost.is_finite() {
            return Err(Error::Degenerate("residuals are not finite at the initial point".into()));
        }
        let mut jac = DMatrix::zeros(m, n);
        let mut lambda = self.initial_lambda;
        let mut trial = vec![0.0; n];
        let mut r_trial = vec![0.0; m];
        let mut converged = cost == 0.0;
        let mut iterations = 0;

        while !converged && iterations < self.max_iterations {
            iterations += 1;
            problem.jacobian(&p, &mut jac);
            let jt = jac.transpose();
            let jtj = &jt * &jac;
            let g = &jt * DVector::from_column_slice(&r);
            if g.amax() == 0.0 {
                converged = true;
                break;
            }
            let mut accepted = false;
            while lambda < 1e20 {
                let mut a = jtj.clone();
                for j in 0..n {
                    a[(j, j)] += lambda * jtj[(j, j)].max(1e-300);
                }
                let delta = match a.cholesky() {
                    Some(ch) => ch.solve(&(-&g)),
                    None => {
                        lambda *= 10.0;
                        continue;
                    }
                };
                for j in 0..n {
                    trial[j] = p[j] + delta[j];
                }
                problem.residuals(&trial, &mut r_trial);
                let new_cost = ssr(&r_trial);
                if new_cost.is_finite() && new_cost <= cost {
                    let small = (0..n)
                        .all(|j| delta[j].abs() <= self.step_tolerance * (problem.scale(&p, j) + self.step_tolerance));
                    p.copy_from_slice(&trial);
                    std::mem::swap(&mut r, &mut r_trial);
                    let stalled = cost - new_cost <= 1e-15 * cost;
                    cost = new_cost;
                    lambda = (lambda * 0.3).max(1e-12);
                    accepted = true;
                    if small || cost == 0.0 || stalled {
                        converged = true;
                    }
                    break;
                }
                lambda *= 10.0;
            }
            if !accepted {
                // no downhill step at any damping: stationary to working precision
                converged = true;
            }
        }
        if !converged {
            return Err(Error::NotConverged { iterations, residual: cost });
        }

        problem.jacobian(&p, &mut jac);
        let jtj = jac.transpose() * &jac;
        let dof = (m - n).max(1) as f64;
        let covariance = jtj.try_inverse().map(|inv| inv * (cost / dof));
        Ok(Solution { params: p, covariance, ssr: cost, iterations })
    }
}
