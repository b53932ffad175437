//! Deterministic first-order descent with backtracking.
//!
//! Trial steps come from the Barzilai–Borwein rule and are halved until the
//! Armijo condition holds. Once the objective is flat to working precision
//! the Armijo test can no longer tell steps apart; a step is then accepted
//! if it does not raise the value by more than rounding and it shrinks the
//! gradient (the approximate-Armijo rule of Hager and Zhang).

use crate::error::Result;

#[derive(Clone, Debug)]
pub struct DescentOptions {
    pub max_iter: usize,
    /// Stop once the (projected) gradient ∞-norm falls below this.
    pub grad_tol: f64,
    pub armijo_c: f64,
    pub max_halvings: usize,
    /// Optional box `[-bound, bound]` on every coordinate.
    pub bound: Option<f64>,
    /// Diagonal preconditioner; the search direction is `-P g`.
    pub preconditioner: Option<Vec<f64>>,
}

impl Default for DescentOptions {
    fn default() -> Self {
        DescentOptions {
            max_iter: 100_000,
            grad_tol: 1e-8,
            armijo_c: 1e-4,
            max_halvings: 60,
            bound: None,
            preconditioner: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DescentStatus {
    Converged,
    /// No step along the descent direction lowers the objective any more.
    Stalled,
    IterationCap,
}

#[derive(Clone, Debug)]
pub struct DescentResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad: Vec<f64>,
    pub grad_norm: f64,
    pub iterations: usize,
    pub status: DescentStatus,
    /// Objective value after each accepted step, starting with the initial one.
    pub trace: Vec<f64>,
}

fn projected_norm(x: &[f64], g: &[f64], bound: Option<f64>) -> f64 {
    x.iter()
        .zip(g)
        .map(|(&xi, &gi)| match bound {
            Some(b) if (xi >= b && gi < 0.0) || (xi <= -b && gi > 0.0) => 0.0,
            _ => gi.abs(),
        })
        .fold(0.0, f64::max)
}

/// Minimize `objective`, which returns the value and writes the gradient
/// into its second argument. `on_iter(k, x)` runs after every accepted step.
pub fn minimize<F, C>(
    mut objective: F,
    x0: Vec<f64>,
    opts: &DescentOptions,
    mut on_iter: C,
) -> Result<DescentResult>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<f64>,
    C: FnMut(usize, &[f64]),
{
    let n = x0.len();
    let precond = opts.preconditioner.clone().unwrap_or_else(|| vec![1.0; n]);
    let clamp = |v: f64| match opts.bound {
        Some(b) => v.clamp(-b, b),
        None => v,
    };

    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut f = objective(&x, &mut g)?;
    let mut trace = vec![f];
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut step = 1.0;

    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut iterations = 0;
    let mut status = DescentStatus::IterationCap;

    while iterations < opts.max_iter {
        let gnorm = projected_norm(&x, &g, opts.bound);
        if gnorm < opts.grad_tol {
            status = DescentStatus::Converged;
            break;
        }

        let dir: Vec<f64> = g.iter().zip(&precond).map(|(gi, pi)| pi * gi).collect();
        step = match &prev {
            Some((x_old, g_old)) => {
                let mut ss = 0.0;
                let mut sy = 0.0;
                for k in 0..n {
                    let s = x[k] - x_old[k];
                    ss += s * s / precond[k];
                    sy += s * (g[k] - g_old[k]);
                }
                if sy > 0.0 && ss > 0.0 {
                    (ss / sy).clamp(1e-20, 1e20)
                } else {
                    (step * 2.0).min(1e20)
                }
            }
            None => {
                let dmax = dir.iter().fold(0.0f64, |a, d| a.max(d.abs()));
                (1.0 / dmax).min(1.0)
            }
        };

        let g_sq = g.iter().zip(&dir).map(|(a, b)| a * b).sum::<f64>();
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            for k in 0..n {
                x_new[k] = clamp(x[k] - step * dir[k]);
            }
            let actual: f64 = g
                .iter()
                .zip(x_new.iter().zip(&x))
                .map(|(gk, (xn, xo))| gk * (xn - xo))
                .sum();
            match objective(&x_new, &mut g_new) {
                Ok(f_new) if f_new.is_finite() => {
                    let armijo = f_new <= f + opts.armijo_c * actual.min(-0.0);
                    let flat = f_new <= f + 4.0 * f64::EPSILON * f.abs()
                        && projected_norm(&x_new, &g_new, opts.bound) < gnorm;
                    if (armijo && actual < 0.0) || flat {
                        accepted = Some(f_new);
                        break;
                    }
                }
                // overflow along an overly long trial step: shorten it
                Ok(_) | Err(crate::Error::Overflow { .. }) => {}
                Err(e) => return Err(e),
            }
            step *= 0.5;
        }
        let Some(f_new) = accepted.filter(|_| g_sq != 0.0) else {
            status = DescentStatus::Stalled;
            break;
        };

        prev = Some((std::mem::replace(&mut x, x_new.clone()), g.clone()));
        g.copy_from_slice(&g_new);
        f = f_new;
        trace.push(f);
        iterations += 1;
        on_iter(iterations, &x);
    }

    let grad_norm = projected_norm(&x, &g, opts.bound);
    if status == DescentStatus::IterationCap && grad_norm < opts.grad_tol {
        status = DescentStatus::Converged;
    }
    Ok(DescentResult {
        x,
        value: f,
        grad: g,
        grad_norm,
        iterations,
        status,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(scales: &[f64]) -> impl FnMut(&[f64], &mut [f64]) -> Result<f64> + '_ {
        move |x, g| {
            let mut f = 0.0;
            for k in 0..x.len() {
                let c = (k + 1) as f64;
                f += 0.5 * scales[k] * (x[k] - c).powi(2);
                g[k] = scales[k] * (x[k] - c);
            }
            Ok(f)
        }
    }

    #[test]
    fn converges_on_ill_conditioned_quadratic() {
        let scales = [1.0, 1e3, 1e-2];
        let r = minimize(quadratic(&scales), vec![0.0; 3], &DescentOptions::default(), |_, _| {})
            .unwrap();
        assert_eq!(r.status, DescentStatus::Converged);
        for (k, v) in r.x.iter().enumerate() {
            assert!((v - (k + 1) as f64).abs() < 1e-6, "{:?}", r.x);
        }
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0] + 1e-15 * w[0].abs()));
    }

    #[test]
    fn box_constraint_stops_at_the_bound() {
        // minimum of e^{-x} + e^{-y} is at +infinity in both coordinates
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = -(-x[0]).exp();
            g[1] = -(-x[1]).exp();
            Ok((-x[0]).exp() + (-x[1]).exp())
        };
        let opts = DescentOptions {
            bound: Some(5.0),
            grad_tol: 1e-10,
            ..Default::default()
        };
        let r = minimize(f, vec![0.0, 1.0], &opts, |_, _| {}).unwrap();
        assert_eq!(r.status, DescentStatus::Converged);
        assert_eq!(r.x, vec![5.0, 5.0]);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let scales = [1.0, 1e6];
        let opts = DescentOptions {
            max_iter: 2,
            ..Default::default()
        };
        let mut seen = Vec::new();
        let r = minimize(quadratic(&scales), vec![0.0; 2], &opts, |k, _| seen.push(k)).unwrap();
        assert_eq!(r.status, DescentStatus::IterationCap);
        assert_eq!(seen, vec![1, 2]);
        assert_eq!(r.trace.len(), 3);
    }
}
