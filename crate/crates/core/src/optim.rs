//! Limited-memory BFGS for smooth unconstrained minimization.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy)]
pub struct LbfgsOptions {
    pub max_iters: usize,
    pub memory: usize,
    /// Stop when the gradient's max-norm drops below this.
    pub grad_tol: f64,
    /// Stop when the objective improves by less than `f_tol · (1 + |f|)`
    /// over an iteration.
    pub f_tol: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            memory: 8,
            grad_tol: 1e-6,
            f_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimize `f` starting from `x0`. `f` returns the value and gradient; a
/// non-finite value is treated as outside the domain and backtracked from.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &LbfgsOptions) -> Option<LbfgsResult>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut fx, mut g) = f(&x);
    let mut evals = 1;
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut iters = 0;

    while iters < opts.max_iters {
        if g.iter().fold(0.0f64, |m, v| m.max(v.abs())) < opts.grad_tol {
            break;
        }
        // Two-loop recursion for the search direction.
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &q);
            for i in 0..n {
                q[i] -= a * y[i];
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = history.back() {
            let gamma = dot(s, y) / dot(y, y);
            for v in q.iter_mut() {
                *v *= gamma;
            }
        } else {
            // First step: keep the initial move modest.
            let gnorm = dot(&g, &g).sqrt();
            let scale = (1.0 / gnorm).min(1.0);
            for v in q.iter_mut() {
                *v *= scale;
            }
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            for i in 0..n {
                q[i] += s[i] * (a - b);
            }
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&dir, &g);
        if !(slope < 0.0) {
            // Not a descent direction; restart from steepest descent.
            history.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }

        // Backtracking line search with the Armijo condition.
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
            let (ft, gt) = f(&trial);
            evals += 1;
            if ft.is_finite() && gt.iter().all(|v| v.is_finite()) && ft <= fx + 1e-4 * step * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            break;
        };
        iters += 1;
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        let improvement = fx - f_new;
        x = x_new;
        fx = f_new;
        g = g_new;
        if improvement < opts.f_tol * (1.0 + fx.abs()) {
            break;
        }
    }
    Some(LbfgsResult {
        x,
        value: fx,
        iterations: iters,
        evaluations: evals,
    })
}
