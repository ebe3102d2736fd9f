//! Small projected Levenberg-Marquardt solver for box-bounded least squares
//! in two parameters, with central-difference Jacobians.

/// Residual vector with up to three active components.
#[derive(Debug, Clone, Copy)]
pub struct Residuals {
    pub vals: [f64; 3],
    pub m: usize,
}

impl Residuals {
    pub fn cost(&self) -> f64 {
        self.vals[..self.m].iter().map(|r| r * r).sum()
    }
}

/// Stopping and iteration controls.
#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: u32,
    /// Converged when the projected step falls below this (inf-norm).
    pub step_tolerance: f64,
    /// Converged when the sum of squared residuals falls below this.
    pub residual_tolerance: f64,
}

/// Outcome of one minimization run.
#[derive(Debug, Clone, Copy)]
pub struct LmOutcome {
    pub x: [f64; 2],
    pub cost: f64,
    pub iterations: u32,
    pub converged: bool,
}

fn clamp2(x: [f64; 2], lo: [f64; 2], hi: [f64; 2]) -> [f64; 2] {
    [x[0].clamp(lo[0], hi[0]), x[1].clamp(lo[1], hi[1])]
}

/// Minimizes `sum_k f(x)_k^2` over the box `[lo, hi]`.
///
/// Steps solve the damped normal equations `(J^T J + lambda D) d = -J^T r`
/// with `D = diag(J^T J)` and are projected onto the box. Damping follows
/// Nielsen's schedule: strong deflation after good steps, escalating
/// inflation after rejections, so a transiently large lambda cannot freeze
/// the iteration away from a minimum. A step below the tolerance only
/// counts as convergence once no larger step can decrease the cost.
pub fn minimize<F>(f: &F, x0: [f64; 2], lo: [f64; 2], hi: [f64; 2], opts: &LmOptions) -> LmOutcome
where
    F: Fn(&[f64; 2]) -> Residuals,
{
    let mut x = clamp2(x0, lo, hi);
    let mut res = f(&x);
    let mut cost = res.cost();
    let mut lambda = 1e-3;
    let mut reject_factor = 2.0;
    let mut converged = false;
    let mut iterations = 0;

    // finite-difference steps scaled to the box extent
    let h = [
        1e-7 * (hi[0] - lo[0]).max(1e-6),
        1e-7 * (hi[1] - lo[1]).max(1e-6),
    ];

    'outer: for iter in 1..=opts.max_iterations {
        iterations = iter;
        if cost < opts.residual_tolerance {
            converged = true;
            break;
        }

        // central-difference Jacobian, m x 2
        let mut jac = [[0.0f64; 2]; 3];
        for p in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[p] += h[p];
            xm[p] -= h[p];
            let rp = f(&xp);
            let rm = f(&xm);
            for k in 0..res.m {
                jac[k][p] = (rp.vals[k] - rm.vals[k]) / (2.0 * h[p]);
            }
        }
        let mut jtj = [[0.0f64; 2]; 2];
        let mut jtr = [0.0f64; 2];
        for k in 0..res.m {
            for p in 0..2 {
                jtr[p] += jac[k][p] * res.vals[k];
                for q in 0..2 {
                    jtj[p][q] += jac[k][p] * jac[k][q];
                }
            }
        }
        if jtr[0].abs().max(jtr[1].abs()) < 1e-300 {
            converged = true;
            break;
        }

        let d0 = jtj[0][0].max(1e-300);
        let d1 = jtj[1][1].max(1e-300);
        loop {
            let m00 = jtj[0][0] + lambda * d0;
            let m11 = jtj[1][1] + lambda * d1;
            let m01 = jtj[0][1];
            let det = m00 * m11 - m01 * m01;
            if det.abs() < 1e-300 {
                lambda *= reject_factor;
                reject_factor *= 2.0;
                if lambda > 1e15 {
                    converged = true;
                    break 'outer;
                }
                continue;
            }
            let dx = [
                (-jtr[0] * m11 + jtr[1] * m01) / det,
                (-jtr[1] * m00 + jtr[0] * m01) / det,
            ];
            let x_new = clamp2([x[0] + dx[0], x[1] + dx[1]], lo, hi);
            let step = [x_new[0] - x[0], x_new[1] - x[1]];
            let step_norm = step[0].abs().max(step[1].abs());
            let res_new = f(&x_new);
            let cost_new = res_new.cost();
            if cost_new < cost {
                // gain ratio against the model's predicted reduction
                let predicted = 0.5
                    * (lambda * (d0 * step[0] * step[0] + d1 * step[1] * step[1])
                        - (step[0] * jtr[0] + step[1] * jtr[1]));
                let rho = if predicted > 0.0 {
                    (cost - cost_new) / predicted
                } else {
                    1.0
                };
                lambda = (lambda * (1.0f64 / 3.0).max(1.0 - (2.0 * rho - 1.0).powi(3))).max(1e-12);
                reject_factor = 2.0;
                x = x_new;
                res = res_new;
                cost = cost_new;
                if step_norm < opts.step_tolerance {
                    converged = true;
                    break 'outer;
                }
                break;
            }
            // rejected: a vanishing trial step that still cannot decrease
            // the cost means the iterate is numerically stationary
            if step_norm < opts.step_tolerance {
                converged = true;
                break 'outer;
            }
            lambda *= reject_factor;
            reject_factor *= 2.0;
            if lambda > 1e15 {
                converged = true;
                break 'outer;
            }
        }
    }

    LmOutcome {
        x,
        cost,
        iterations,
        converged,
    }
}
