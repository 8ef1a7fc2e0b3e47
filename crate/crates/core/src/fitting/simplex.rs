//! Nelder–Mead downhill simplex.

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Converged once every vertex is within this distance of the best, relative
    /// to the best coordinate (absolute below 1).
    pub x_rtol: f64,
    /// ... and the objective spread is below `f_rtol·|f_best| + f_atol`.
    pub f_rtol: f64,
    pub f_atol: f64,
    pub max_evals: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            x_rtol: 1e-8,
            f_rtol: 1e-10,
            f_atol: 1e-300,
            max_evals: 20_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexOutcome {
    pub x: Vec<f64>,
    pub fx: f64,
    pub converged: bool,
    pub evals: usize,
}

/// Minimizes `f` starting from `x0` with initial edge lengths `step`.
/// Non-finite objective values are treated as +∞.
pub fn minimize(f: impl Fn(&[f64]) -> f64, x0: &[f64], step: &[f64], opts: &SimplexOptions) -> SimplexOutcome {
    let n = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step[i];
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| eval(p)).collect();
    let mut evals = n + 1;
    let mut converged = false;

    while evals < opts.max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let best = &pts[0];
        let x_spread = pts[1..]
            .iter()
            .flat_map(|p| p.iter().zip(best).map(|(a, b)| (a - b).abs() / b.abs().max(1.0)))
            .fold(0.0, f64::max);
        let f_spread = vals[n] - vals[0];
        if x_spread <= opts.x_rtol && f_spread <= opts.f_rtol * vals[0].abs() + opts.f_atol {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&pts[n])
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };

        let xr = along(-1.0);
        let fr = eval(&xr);
        evals += 1;
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = eval(&xe);
            evals += 1;
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[n] {
            let xc = along(-0.5);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = eval(&xc);
            (xc, fc)
        };
        evals += 1;
        if fc < vals[n].min(fr) {
            pts[n] = xc;
            vals[n] = fc;
            continue;
        }
        // shrink toward the best vertex
        for i in 1..=n {
            let p: Vec<f64> = pts[0].iter().zip(&pts[i]).map(|(b, x)| b + 0.5 * (x - b)).collect();
            vals[i] = eval(&p);
            pts[i] = p;
        }
        evals += n;
    }

    let i = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
    SimplexOutcome {
        x: pts[i].clone(),
        fx: vals[i],
        converged,
        evals,
    }
}
