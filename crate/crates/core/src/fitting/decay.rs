//! Per-field extraction of `(L3, N0, T)` from a decay curve.
//!
//! The number data alone fix only `β ∝ L3/T³`, so the measured temperatures
//! enter χ² as well: each sample contributes a number residual weighted by
//! `σ_N` and a temperature residual `T_i − T` weighted by the same
//! fractional error, `σ_T = T_i·σ_N/N_i`.

use super::simplex::{self, SimplexOptions};
use super::{hessian, sigmas_from_hessian, FitParameter, FitResult};
use crate::dynamics::{closed_form, DecaySeries};
use crate::error::{Error, Result};
use crate::trap::{density_squared_per_atom2, TrapConfig};
use crate::units::{m6_to_cm6, PhysicalConstants};

/// Rate at which `δL3/L3` follows `δν̄/ν̄` at fixed N and T (`L3 ∝ ν̄⁻⁶`).
const L3_FREQUENCY_EXPONENT: f64 = 6.0;

#[derive(Debug, Clone, Copy)]
pub struct DecayFitOptions {
    pub simplex: SimplexOptions,
    /// Fresh simplex restarts from the incumbent after the first run.
    pub restarts: usize,
}

impl Default for DecayFitOptions {
    fn default() -> Self {
        Self {
            simplex: SimplexOptions::default(),
            restarts: 3,
        }
    }
}

struct Problem<'a> {
    series: &'a DecaySeries,
    gamma: f64,
    per2_at_tscale: f64,
    sigma_n: Vec<f64>,
    sigma_t: Vec<f64>,
    scale: [f64; 3],
}

impl Problem<'_> {
    /// Physical `(L3, N0, T)` from scaled coordinates; L3 is projected onto ≥ 0.
    fn unscale(&self, x: &[f64]) -> [f64; 3] {
        [x[0].max(0.0) * self.scale[0], x[1] * self.scale[1], x[2] * self.scale[2]]
    }

    fn chi2(&self, x: &[f64]) -> f64 {
        let [l3, n0, t] = self.unscale(x);
        if !(n0 > 0.0 && t > 0.0) {
            return f64::INFINITY;
        }
        let beta = l3 * self.per2_at_tscale * (self.scale[2] / t).powi(3);
        self.series
            .samples()
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let rn = (s.atoms - closed_form(self.gamma, beta, n0, s.t)) / self.sigma_n[i];
                let rt = (s.temperature - t) / self.sigma_t[i];
                rn * rn + rt * rt
            })
            .sum()
    }
}

/// Fits the constant-temperature closed form to `series` with Γ fixed.
///
/// Returned parameters: `L3_cm6_per_s`, `N0`, `T_K`. The uncertainty on
/// `L3` adds the trap's mean-frequency uncertainty in quadrature.
pub fn fit_decay(
    series: &DecaySeries,
    trap: &TrapConfig,
    field_gauss: f64,
    gamma: f64,
    consts: &PhysicalConstants,
    opts: &DecayFitOptions,
) -> Result<FitResult> {
    if series.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "decay fit needs at least 4 samples, got {}",
            series.len()
        )));
    }
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::domain(format!("Gamma must be >= 0, got {gamma}")));
    }
    let nu_bar = trap.mean_frequency(field_gauss)?;
    let samples = series.samples();

    // Linearized start: N⁻²e^{−2Γt} = N0⁻² + β·g(t), g(t) = (1 − e^{−2Γt})/Γ.
    let growth = |t: f64| closed_form_growth(gamma, t);
    let xs: Vec<f64> = samples.iter().map(|s| growth(s.t)).collect();
    let ys: Vec<f64> = samples
        .iter()
        .map(|s| (-2.0 * gamma * s.t).exp() / (s.atoms * s.atoms))
        .collect();
    let (intercept, slope) = linear_fit(&xs, &ys);
    let n0_guess = if intercept > 0.0 {
        intercept.sqrt().recip()
    } else {
        samples[0].atoms
    };
    let t_guess = samples.iter().map(|s| s.temperature).sum::<f64>() / samples.len() as f64;
    let per2 = density_squared_per_atom2(t_guess, nu_bar, consts)?;
    let l3_guess = slope.max(0.0) / per2;
    let t_span = samples[samples.len() - 1].t - samples[0].t;
    // L3 giving a 1% three-body effect over the record; sets the scale when
    // the data show none.
    let l3_floor = 0.01 / (n0_guess * n0_guess * t_span.max(f64::MIN_POSITIVE) * per2);
    let scale = [l3_guess.max(l3_floor), n0_guess, t_guess];

    let sigma_n: Vec<f64> = samples.iter().map(|s| s.sigma_atoms.unwrap_or(1.0)).collect();
    let sigma_t: Vec<f64> = samples
        .iter()
        .zip(&sigma_n)
        .map(|(s, sn)| s.temperature * sn / s.atoms)
        .collect();
    let problem = Problem {
        series,
        gamma,
        per2_at_tscale: per2,
        sigma_n,
        sigma_t,
        scale,
    };
    let objective = |x: &[f64]| problem.chi2(x);

    let mut sopts = opts.simplex;
    sopts.f_atol = sopts.f_atol.max(1e-20 * samples.len() as f64);
    let mut x = vec![l3_guess / scale[0], 1.0, 1.0];
    let mut step = vec![0.1, 0.01, 0.01];
    let mut run = simplex::minimize(objective, &x, &step, &sopts);
    for _ in 0..opts.restarts {
        let prev = run.fx;
        x = run.x.clone();
        step = x.iter().map(|v| 1e-3 * v.abs().max(1e-2)).collect();
        run = simplex::minimize(objective, &x, &step, &sopts);
        if run.converged && (prev - run.fx).abs() <= sopts.f_rtol * run.fx.abs() + sopts.f_atol {
            break;
        }
    }
    let mut best = run.x.clone();
    best[0] = best[0].max(0.0);
    let chi2 = problem.chi2(&best);

    let h: Vec<f64> = best.iter().map(|v| 1e-4 * v.abs().max(1e-2)).collect();
    let at_bound = [best[0] <= h[0], false, false];
    let hm = hessian(&objective, &best, &h, &at_bound);
    let stat = sigmas_from_hessian(&hm);

    let [l3, n0, t] = problem.unscale(&best);
    let l3_stat = stat[0] * scale[0];
    let l3_sys = L3_FREQUENCY_EXPONENT * trap.mean_frequency_frac_sigma() * l3;
    let l3_sigma = l3_stat.hypot(l3_sys);

    Ok(FitResult {
        params: vec![
            FitParameter {
                name: "L3_cm6_per_s",
                value: m6_to_cm6(l3),
                sigma: m6_to_cm6(l3_sigma),
                sigma_stat: m6_to_cm6(l3_stat),
            },
            FitParameter {
                name: "N0",
                value: n0,
                sigma: stat[1] * scale[1],
                sigma_stat: stat[1] * scale[1],
            },
            FitParameter {
                name: "T_K",
                value: t,
                sigma: stat[2] * scale[2],
                sigma_stat: stat[2] * scale[2],
            },
        ],
        chi2,
        dof: 2 * samples.len() - 3,
        converged: run.converged,
    })
}

fn closed_form_growth(gamma: f64, t: f64) -> f64 {
    if gamma > 0.0 {
        -(-2.0 * gamma * t).exp_m1() / gamma
    } else {
        2.0 * t
    }
}

/// Ordinary least squares `y = a + b·x`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - b * mx, b)
}
