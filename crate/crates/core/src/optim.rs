//! Minimal Nelder-Mead simplex minimizer for the low-dimensional local
//! refinements used by the bound checkers.

/// Result of a simplex run.
#[derive(Debug, Clone)]
pub struct MinResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
}

/// Standard Nelder-Mead with reflection 1, expansion 2, contraction 1/2 and
/// shrink 1/2. Stops when the simplex function spread or diameter falls
/// under tight absolute/relative thresholds, or after `max_iter` steps.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    step: f64,
    max_iter: usize,
) -> MinResult {
    let n = x0.len();
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let fx = eval(&x, &mut evals);
        simplex.push((x, fx));
    }

    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let spread = worst - best;
        let diam = simplex[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread <= 1e-14 * (1.0 + best.abs()) && diam <= 1e-10 * (1.0 + step.abs()) {
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|i| simplex[..n].iter().map(|(x, _)| x[i]).sum::<f64>() / n as f64)
            .collect();
        let dir: Vec<f64> = (0..n).map(|i| centroid[i] - simplex[n].0[i]).collect();
        let at = |t: f64| -> Vec<f64> { (0..n).map(|i| centroid[i] + t * dir[i]).collect() };

        let xr = at(1.0);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = at(2.0);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = at(0.5);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = at(-0.5);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                // shrink toward the best vertex
                let best_x = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    for i in 0..n {
                        v.0[i] = best_x[i] + 0.5 * (v.0[i] - best_x[i]);
                    }
                    v.1 = eval(&v.0, &mut evals);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    MinResult {
        x: simplex[0].0.clone(),
        f: simplex[0].1,
        evals,
    }
}

/// Two-stage run: a full pass followed by a restart from the best point with
/// a smaller initial simplex, which polishes flat valleys.
pub fn nelder_mead_polished<F: FnMut(&[f64]) -> f64 + Copy>(
    f: F,
    x0: &[f64],
    step: f64,
    max_iter: usize,
) -> MinResult {
    let first = nelder_mead(f, x0, step, max_iter);
    let second = nelder_mead(f, &first.x, step * 1e-3, max_iter / 2);
    if second.f <= first.f {
        MinResult {
            evals: first.evals + second.evals,
            ..second
        }
    } else {
        MinResult {
            evals: first.evals + second.evals,
            ..first
        }
    }
}
