//! Nelder-Mead simplex search with dimension-adaptive coefficients and restarts.

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    /// Stop once every vertex is within this sup-norm distance of the best one.
    pub diameter_tol: f64,
    pub max_evals: usize,
    /// Fresh simplices built around the incumbent after convergence.
    pub max_restarts: usize,
}

impl SimplexOptions {
    pub fn for_dim(n: usize) -> Self {
        SimplexOptions {
            diameter_tol: 1e-8,
            max_evals: 50_000 + 5_000 * n * n,
            max_restarts: 20,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evals: usize,
    pub iterations: usize,
    pub converged: bool,
}

fn initial_simplex(x0: &[f64], scale: f64) -> Vec<Vec<f64>> {
    let mut simplex = vec![x0.to_vec()];
    for i in 0..x0.len() {
        let mut v = x0.to_vec();
        let step = if x0[i].abs() > 1e-8 {
            0.05 * x0[i].abs()
        } else {
            2.5e-4
        };
        v[i] += step * scale;
        simplex.push(v);
    }
    simplex
}

fn diameter(simplex: &[Vec<f64>]) -> f64 {
    simplex[1..]
        .iter()
        .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max)
}

/// Minimises `f` from `x0`. Returns the best vertex seen, which never has a larger value than `f(x0)`.
pub fn nelder_mead<F>(f: F, x0: &[f64], opts: &SimplexOptions) -> SimplexResult
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = if n > 2 {
        (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };

    let mut evals = 0usize;
    let eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut best = x0.to_vec();
    let mut best_f = eval(x0, &mut evals);
    let mut iterations = 0usize;
    let mut converged = false;
    let mut scale = 1.0;

    for _restart in 0..=opts.max_restarts {
        let mut simplex = initial_simplex(&best, scale);
        let mut fv: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evals)).collect();
        let mut local_converged = false;

        while evals < opts.max_evals {
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| fv[a].total_cmp(&fv[b]));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            fv = order.iter().map(|&i| fv[i]).collect();

            if diameter(&simplex) < opts.diameter_tol {
                local_converged = true;
                break;
            }
            iterations += 1;

            let mut centroid = vec![0.0; n];
            for v in &simplex[..n] {
                for (c, x) in centroid.iter_mut().zip(v) {
                    *c += x / nf;
                }
            }
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[n])
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };

            let xr = along(alpha);
            let fr = eval(&xr, &mut evals);
            if fr < fv[0] {
                let xe = along(alpha * gamma);
                let fe = eval(&xe, &mut evals);
                if fe < fr {
                    simplex[n] = xe;
                    fv[n] = fe;
                } else {
                    simplex[n] = xr;
                    fv[n] = fr;
                }
                continue;
            }
            if fr < fv[n - 1] {
                simplex[n] = xr;
                fv[n] = fr;
                continue;
            }
            let (xc, fc, accept) = if fr < fv[n] {
                let xc = along(alpha * rho);
                let fc = eval(&xc, &mut evals);
                (xc, fc, fc <= fr)
            } else {
                let xc = along(-rho);
                let fc = eval(&xc, &mut evals);
                (xc, fc, fc < fv[n])
            };
            if accept {
                simplex[n] = xc;
                fv[n] = fc;
                continue;
            }
            for i in 1..=n {
                let shrunk: Vec<f64> = simplex[0]
                    .iter()
                    .zip(&simplex[i])
                    .map(|(b, v)| b + sigma * (v - b))
                    .collect();
                fv[i] = eval(&shrunk, &mut evals);
                simplex[i] = shrunk;
            }
        }

        let (imin, &fmin) = fv
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        let improved = fmin < best_f;
        let gain = best_f - fmin;
        if improved {
            best = simplex[imin].clone();
            best_f = fmin;
        }
        if !local_converged {
            break;
        }
        // A restart that finds no further decrease confirms the optimum.
        if !improved || gain <= 1e-15 * best_f.abs().max(1e-300) {
            converged = true;
            break;
        }
        scale = (scale * 0.5).max(1e-3);
    }

    SimplexResult {
        x: best,
        fx: best_f,
        evals,
        iterations,
        converged,
    }
}
