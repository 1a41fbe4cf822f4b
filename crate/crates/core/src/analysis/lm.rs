//! Damped least squares for the 4-parameter focal-scan model: normal
//! equations with adaptive Levenberg damping, central-difference Jacobian,
//! relative-step and relative-cost stop criteria.

// Fixed-size matrix algebra reads better with explicit indices.
#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};

pub const N_PARAMS: usize = 4;

/// Human-readable parameter names, in fit order.
pub const PARAM_NAMES: [&str; N_PARAMS] = ["scale", "w0", "z0", "theta"];

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    pub cost_rtol: f64,
    pub step_rtol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self { max_iterations: 500, cost_rtol: 1e-10, step_rtol: 1e-10 }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub params: [f64; N_PARAMS],
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// J^T W J at the solution (undamped).
    pub normal_matrix: [[f64; N_PARAMS]; N_PARAMS],
    /// Cost after each accepted step (non-increasing by construction);
    /// consumed by the invariant tests.
    #[allow(dead_code)]
    pub cost_history: Vec<f64>,
}

/// Minimize sum_i w_i (y_i - f(params, z_i))^2 over the four parameters.
///
/// `scales` sets the characteristic magnitude of each parameter for the
/// finite-difference steps and the relative-step stop criterion. Steps that
/// produce non-finite costs (e.g. a trial w0 <= 0) are rejected like any
/// uphill step.
pub fn levenberg_marquardt<F>(
    model: &F,
    zs: &[f64],
    ys: &[f64],
    weights: &[f64],
    x0: [f64; N_PARAMS],
    scales: [f64; N_PARAMS],
    opts: &LmOptions,
) -> Result<LmOutcome>
where
    F: Fn(&[f64; N_PARAMS], f64) -> f64,
{
    let n = zs.len();
    assert_eq!(n, ys.len());
    assert_eq!(n, weights.len());

    let mut x = x0;
    let mut cost = cost_of(model, zs, ys, weights, &x);
    if !cost.is_finite() {
        return Err(Error::DegenerateData("initial parameters give a non-finite cost".into()));
    }

    let mut mu = 1e-3;
    let mut jtj = [[0.0; N_PARAMS]; N_PARAMS];
    let mut converged = false;
    let mut iterations = 0;
    let mut cost_history = vec![cost];

    while iterations < opts.max_iterations {
        iterations += 1;

        let (a, g) = normal_equations(model, zs, ys, weights, &x, &scales)?;
        jtj = a;

        // Inner damping loop: retry with stronger damping until a downhill
        // step is found or the damping saturates.
        let mut stepped = false;
        while mu < 1e14 {
            let mut damped = a;
            for (j, row) in damped.iter_mut().enumerate() {
                row[j] += mu * a[j][j];
            }
            let delta = match solve4(damped, g) {
                Some(d) => d,
                None => {
                    mu *= 4.0;
                    continue;
                }
            };
            let mut trial = x;
            for j in 0..N_PARAMS {
                trial[j] += delta[j];
            }
            let trial_cost = cost_of(model, zs, ys, weights, &trial);
            if trial_cost.is_finite() && trial_cost <= cost {
                let cost_drop = cost - trial_cost;
                let max_rel_step = (0..N_PARAMS)
                    .map(|j| delta[j].abs() / x[j].abs().max(scales[j]))
                    .fold(0.0_f64, f64::max);
                x = trial;
                cost = trial_cost;
                cost_history.push(cost);
                mu = (mu / 3.0).max(1e-14);
                stepped = true;
                if cost_drop <= opts.cost_rtol * cost.max(f64::MIN_POSITIVE)
                    || max_rel_step <= opts.step_rtol
                {
                    converged = true;
                }
                break;
            }
            mu *= 4.0;
        }
        if converged || !stepped {
            // A saturated damping search means no downhill direction is
            // resolvable at floating-point precision: treat as converged if
            // the cost is already tiny relative to the data scale.
            if !stepped {
                let data_scale: f64 = ys
                    .iter()
                    .zip(weights)
                    .map(|(y, w)| w * y * y)
                    .sum::<f64>()
                    .max(f64::MIN_POSITIVE);
                converged = converged || cost <= 1e-18 * data_scale || cost == 0.0;
            }
            break;
        }
    }

    Ok(LmOutcome { params: x, cost, iterations, converged, normal_matrix: jtj, cost_history })
}

fn cost_of<F>(model: &F, zs: &[f64], ys: &[f64], weights: &[f64], x: &[f64; N_PARAMS]) -> f64
where
    F: Fn(&[f64; N_PARAMS], f64) -> f64,
{
    let mut c = 0.0;
    for i in 0..zs.len() {
        let r = ys[i] - model(x, zs[i]);
        c += weights[i] * r * r;
    }
    c
}

/// Build J^T W J and J^T W r with a central-difference Jacobian.
#[allow(clippy::type_complexity)]
fn normal_equations<F>(
    model: &F,
    zs: &[f64],
    ys: &[f64],
    weights: &[f64],
    x: &[f64; N_PARAMS],
    scales: &[f64; N_PARAMS],
) -> Result<([[f64; N_PARAMS]; N_PARAMS], [f64; N_PARAMS])>
where
    F: Fn(&[f64; N_PARAMS], f64) -> f64,
{
    let n = zs.len();
    let mut jac = vec![[0.0; N_PARAMS]; n];
    for j in 0..N_PARAMS {
        let h = 1e-6 * x[j].abs().max(scales[j]);
        let mut xp = *x;
        let mut xm = *x;
        xp[j] += h;
        xm[j] -= h;
        for i in 0..n {
            jac[i][j] = (model(&xp, zs[i]) - model(&xm, zs[i])) / (2.0 * h);
        }
    }

    let mut a = [[0.0; N_PARAMS]; N_PARAMS];
    let mut g = [0.0; N_PARAMS];
    for i in 0..n {
        let r = ys[i] - model(x, zs[i]);
        let w = weights[i];
        for j in 0..N_PARAMS {
            g[j] += w * jac[i][j] * r;
            for l in j..N_PARAMS {
                a[j][l] += w * jac[i][j] * jac[i][l];
            }
        }
    }
    for j in 0..N_PARAMS {
        for l in 0..j {
            a[j][l] = a[l][j];
        }
    }
    for j in 0..N_PARAMS {
        if a[j][j] == 0.0 {
            return Err(Error::RankDeficientJacobian { parameter: PARAM_NAMES[j] });
        }
    }
    Ok((a, g))
}

/// Solve a 4x4 system by Gauss elimination with partial pivoting. Returns
/// None when a pivot underflows to zero.
pub fn solve4(
    mut a: [[f64; N_PARAMS]; N_PARAMS],
    mut b: [f64; N_PARAMS],
) -> Option<[f64; N_PARAMS]> {
    for col in 0..N_PARAMS {
        let pivot_row = (col..N_PARAMS)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[pivot_row][col] == 0.0 {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in (col + 1)..N_PARAMS {
            let f = a[row][col] / a[col][col];
            for k in col..N_PARAMS {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; N_PARAMS];
    for row in (0..N_PARAMS).rev() {
        let mut s = b[row];
        for k in (row + 1)..N_PARAMS {
            s -= a[row][k] * x[k];
        }
        if a[row][row] == 0.0 {
            return None;
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

/// Invert a symmetric positive-definite 4x4 matrix via Gauss-Jordan with
/// partial pivoting. None when singular.
pub fn invert4(a: [[f64; N_PARAMS]; N_PARAMS]) -> Option<[[f64; N_PARAMS]; N_PARAMS]> {
    let mut aug = [[0.0; 2 * N_PARAMS]; N_PARAMS];
    for (i, row) in a.iter().enumerate() {
        aug[i][..N_PARAMS].copy_from_slice(row);
        aug[i][N_PARAMS + i] = 1.0;
    }
    for col in 0..N_PARAMS {
        let pivot_row = (col..N_PARAMS)
            .max_by(|&i, &j| aug[i][col].abs().partial_cmp(&aug[j][col].abs()).unwrap())?;
        if aug[pivot_row][col] == 0.0 {
            return None;
        }
        aug.swap(col, pivot_row);
        let p = aug[col][col];
        for v in aug[col].iter_mut() {
            *v /= p;
        }
        for row in 0..N_PARAMS {
            if row == col {
                continue;
            }
            let f = aug[row][col];
            if f == 0.0 {
                continue;
            }
            for k in 0..2 * N_PARAMS {
                aug[row][k] -= f * aug[col][k];
            }
        }
    }
    let mut inv = [[0.0; N_PARAMS]; N_PARAMS];
    for i in 0..N_PARAMS {
        inv[i].copy_from_slice(&aug[i][N_PARAMS..]);
    }
    Some(inv)
}
