//! Bounded Nelder-Mead simplex minimization.
//!
//! Candidate points are clamped into the box before evaluation, which
//! keeps the simplex feasible without penalty terms. The objective may
//! return `f64::INFINITY` as a rejection sentinel; those vertices get
//! contracted away like any other bad vertex.

#[derive(Debug, Clone)]
pub struct NmSettings {
    pub max_evals: usize,
    /// Convergence tolerance on the simplex objective spread.
    pub tol: f64,
    /// Initial simplex step along each coordinate.
    pub init_step: f64,
}

impl Default for NmSettings {
    fn default() -> Self {
        Self {
            max_evals: 4000,
            tol: 1e-6,
            init_step: 0.2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evals: usize,
    pub converged: bool,
}

fn clamp(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lo[i], hi[i]);
    }
}

/// Minimize `f` inside the box `[lo, hi]` starting from `x0`.
pub fn minimize(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    settings: &NmSettings,
) -> NmResult {
    let n = x0.len();
    assert!(n > 0 && lo.len() == n && hi.len() == n);
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    // Initial simplex: x0 plus a step along each coordinate (flipped when
    // the step would leave the box).
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let mut start = x0.to_vec();
    clamp(&mut start, lo, hi);
    let f0 = eval(&start, &mut evals);
    simplex.push((start.clone(), f0));
    for i in 0..n {
        let mut v = start.clone();
        let step = settings.init_step * (hi[i] - lo[i]).clamp(1e-3, 1.0);
        v[i] = if v[i] + step <= hi[i] {
            v[i] + step
        } else {
            v[i] - step
        };
        clamp(&mut v, lo, hi);
        let fv = eval(&v, &mut evals);
        simplex.push((v, fv));
    }

    let order = |s: &mut Vec<(Vec<f64>, f64)>| {
        s.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("no NaN objective"));
    };
    order(&mut simplex);

    let mut converged = false;
    while evals < settings.max_evals {
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if worst.is_finite() && (worst - best).abs() <= settings.tol * (1.0 + best.abs()) {
            converged = true;
            break;
        }

        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; n];
        for (v, _) in &simplex[..n] {
            for i in 0..n {
                centroid[i] += v[i] / n as f64;
            }
        }

        let point = |coef: f64, through: &[f64]| -> Vec<f64> {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(through)
                .map(|(c, w)| c + coef * (c - w))
                .collect();
            clamp(&mut p, lo, hi);
            p
        };

        let reflected = point(alpha, &simplex[n].0);
        let f_r = eval(&reflected, &mut evals);

        if f_r < simplex[0].1 {
            let expanded = point(gamma, &simplex[n].0);
            let f_e = eval(&expanded, &mut evals);
            simplex[n] = if f_e < f_r {
                (expanded, f_e)
            } else {
                (reflected, f_r)
            };
        } else if f_r < simplex[n - 1].1 {
            simplex[n] = (reflected, f_r);
        } else {
            let contracted = if f_r < simplex[n].1 {
                point(rho, &reflected)
            } else {
                point(-rho, &simplex[n].0)
            };
            let f_c = eval(&contracted, &mut evals);
            if f_c < simplex[n].1.min(f_r) {
                simplex[n] = (contracted, f_c);
            } else {
                // Shrink toward the best vertex.
                let best_point = simplex[0].0.clone();
                for (v, fv) in simplex.iter_mut().skip(1) {
                    for i in 0..n {
                        v[i] = best_point[i] + sigma * (v[i] - best_point[i]);
                    }
                    clamp(v, lo, hi);
                    *fv = eval(v, &mut evals);
                }
            }
        }
        order(&mut simplex);
    }

    order(&mut simplex);
    NmResult {
        x: simplex[0].0.clone(),
        fx: simplex[0].1,
        evals,
        converged,
    }
}
