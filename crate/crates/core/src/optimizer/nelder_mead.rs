//! Nelder–Mead simplex minimization with dimension-adaptive coefficients.

/// Outcome of one [`minimize`] call.
#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct Settings {
    /// Edge length of the initial simplex.
    pub step: f64,
    pub max_iterations: usize,
    /// Stop once every vertex lies within this distance (max-norm) of the best one.
    pub x_tol: f64,
    /// Stop once the spread of simplex values drops below this.
    pub f_tol: f64,
}

/// Minimizes `f` from `x0`. When the simplex collapses before the iteration
/// budget runs out, a fresh simplex is built around the best point; the
/// search ends when such a rebuild no longer improves the value.
///
/// `observe` is called once per iteration with the best value so far.
pub fn minimize(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    settings: Settings,
    mut observe: impl FnMut(usize, f64),
) -> Minimum {
    let mut best = Minimum { x: x0.to_vec(), value: f(x0), iterations: 0 };
    let mut step = settings.step;
    while best.iterations < settings.max_iterations {
        let budget = settings.max_iterations - best.iterations;
        let run = simplex_run(&mut f, &best.x, step, budget, settings, |i, v| {
            observe(best.iterations + i, v.min(best.value))
        });
        let improved = best.value - run.value > settings.f_tol;
        best.iterations += run.iterations;
        if run.value < best.value {
            best.x = run.x;
            best.value = run.value;
        }
        if !improved || run.iterations == 0 {
            break;
        }
        step = (step * 0.5).max(100.0 * settings.x_tol);
    }
    best
}

fn simplex_run(
    f: &mut impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    max_iterations: usize,
    settings: Settings,
    mut observe: impl FnMut(usize, f64),
) -> Minimum {
    let d = x0.len();
    let df = d as f64;
    let (alpha, beta, gamma, delta) = if d >= 2 {
        (1.0, 1.0 + 2.0 / df, 0.75 - 0.5 / df, 1.0 - 1.0 / df)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };

    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    pts.push(x0.to_vec());
    for i in 0..d {
        let mut p = x0.to_vec();
        p[i] += step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();
    let mut order: Vec<usize> = (0..=d).collect();
    let mut iterations = 0;

    let mut centroid = vec![0.0; d];
    let trial = |base: &[f64], dir: &[f64], t: f64| -> Vec<f64> {
        base.iter().zip(dir).map(|(b, c)| c + t * (b - c)).collect()
    };

    while iterations < max_iterations {
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let (lo, hi, second) = (order[0], order[d], order[d - 1]);
        let size = pts
            .iter()
            .flat_map(|p| p.iter().zip(&pts[lo]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if size <= settings.x_tol || vals[hi] - vals[lo] <= settings.f_tol {
            break;
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &k in &order[..d] {
            for (c, x) in centroid.iter_mut().zip(&pts[k]) {
                *c += x / df;
            }
        }

        // Reflection is x_c + alpha (x_c − x_hi); `trial(hi, c, −alpha)` computes it.
        let xr = trial(&pts[hi], &centroid, -alpha);
        let fr = f(&xr);
        if fr < vals[lo] {
            let xe = trial(&pts[hi], &centroid, -alpha * beta);
            let fe = f(&xe);
            if fe < fr {
                pts[hi] = xe;
                vals[hi] = fe;
            } else {
                pts[hi] = xr;
                vals[hi] = fr;
            }
        } else if fr < vals[second] {
            pts[hi] = xr;
            vals[hi] = fr;
        } else {
            let outside = fr < vals[hi];
            let xc = if outside {
                trial(&pts[hi], &centroid, -alpha * gamma)
            } else {
                trial(&pts[hi], &centroid, gamma)
            };
            let fc = f(&xc);
            if (outside && fc <= fr) || (!outside && fc < vals[hi]) {
                pts[hi] = xc;
                vals[hi] = fc;
            } else {
                let best = pts[lo].clone();
                for k in 0..=d {
                    if k == lo {
                        continue;
                    }
                    pts[k] = trial(&pts[k], &best, delta);
                    vals[k] = f(&pts[k]);
                }
            }
        }
        let current = vals.iter().copied().fold(f64::INFINITY, f64::min);
        observe(iterations, current);
    }

    let lo = (0..=d).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    Minimum { x: pts[lo].clone(), value: vals[lo], iterations }
}
