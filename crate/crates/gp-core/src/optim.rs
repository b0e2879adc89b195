use nalgebra::{DMatrix, DVector};

/// Outcome of a quasi-Newton run.
pub(crate) struct OptimOutcome {
    pub x: DVector<f64>,
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Maximizes `f` with BFGS and Armijo backtracking.
///
/// `f` returns `None` where it cannot be evaluated (e.g. an ill-conditioned
/// kernel); such points are treated as rejected line-search trials. The best
/// iterate seen is always returned, so a diverging run degrades gracefully.
pub(crate) fn bfgs_maximize<F>(
    f: F,
    x0: DVector<f64>,
    max_iterations: usize,
    gradient_tolerance: f64,
) -> OptimOutcome
where
    F: Fn(&DVector<f64>) -> Option<(f64, DVector<f64>)>,
{
    let dim = x0.len();
    let Some((v0, g0)) = f(&x0) else {
        return OptimOutcome {
            x: x0,
            value: f64::NEG_INFINITY,
            converged: false,
            iterations: 0,
        };
    };

    // Work in minimization form.
    let mut x = x0;
    let mut fx = -v0;
    let mut gx = -g0;
    let mut best_x = x.clone();
    let mut best_f = fx;
    let mut h_inv = DMatrix::<f64>::identity(dim, dim);
    let mut iterations = 0;
    let mut converged = gx.norm() < gradient_tolerance;

    while !converged && iterations < max_iterations {
        iterations += 1;
        let mut dir = -(&h_inv * &gx);
        let mut slope = gx.dot(&dir);
        if !slope.is_finite() || slope >= 0.0 {
            h_inv = DMatrix::identity(dim, dim);
            dir = -gx.clone();
            slope = gx.dot(&dir);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let x_new = &x + &dir * step;
            if let Some((v, g)) = f(&x_new) {
                let f_new = -v;
                if f_new.is_finite() && f_new <= fx + 1e-4 * step * slope {
                    accepted = Some((x_new, f_new, -g));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            break; // Line search failed; keep the best point found so far.
        };

        let s = &x_new - &x;
        let y = &g_new - &gx;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            // Standard inverse-Hessian BFGS update.
            let rho = 1.0 / sy;
            let hy = &h_inv * &y;
            let yhy = y.dot(&hy);
            h_inv.ger(rho * rho * yhy + rho, &s, &s, 1.0);
            h_inv.ger(-rho, &hy, &s, 1.0);
            h_inv.ger(-rho, &s, &hy, 1.0);
        }

        x = x_new;
        fx = f_new;
        gx = g_new;
        if fx < best_f {
            best_f = fx;
            best_x = x.clone();
        }
        converged = gx.norm() < gradient_tolerance;
    }

    if fx < best_f {
        best_f = fx;
        best_x = x;
    }
    OptimOutcome {
        x: best_x,
        value: -best_f,
        converged,
        iterations,
    }
}
