//! Global fit of the three-body parameters to `L3(B)`.
//!
//! The residuals are taken in `ln L3` because the rate varies over orders of
//! magnitude across the field range. The model is the effective-`a`
//! heuristic of [`crate::recombination`].
//!
//! The resonance term depends on κ* only through `s0·ln(D|a|κ*)`, so κ* and
//! `κ*·e^{π/s0}` predict identical rates. The search is confined to the
//! period in which the n = 0 trimer is the lowest state bound more weakly
//! than the van der Waals energy, `κ* ∈ (1/(λℓ_vdW), 1/ℓ_vdW]` with
//! `λ = e^{π/s0}`, and the best point is folded back into that window.

use std::f64::consts::PI;
use std::io::Read;

use super::simplex::{self, SimplexOptions};
use super::{hessian, sigmas_from_hessian, FitParameter, FitResult};
use crate::efimov::UniversalConstants;
use crate::error::{Error, Result};
use crate::recombination::{default_saturation, effective_a};
use crate::scattering::ScatteringTable;
use crate::units::{cm6_to_m6, PhysicalConstants, BOHR_RADIUS};

pub const L3_POINTS_HEADER: [&str; 3] = ["B_gauss", "L3_cm6_per_s", "sigma_L3"];

/// One measured rate constant, SI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L3Point {
    pub field_gauss: f64,
    /// m⁶/s.
    pub l3: f64,
    /// m⁶/s.
    pub sigma: f64,
}

impl L3Point {
    pub fn from_cm6(field_gauss: f64, l3_cm6: f64, sigma_cm6: f64) -> Result<Self> {
        if !(l3_cm6.is_finite() && l3_cm6 > 0.0) {
            return Err(Error::domain(format!("L3 must be positive, got {l3_cm6}")));
        }
        if !(sigma_cm6.is_finite() && sigma_cm6 > 0.0) {
            return Err(Error::domain(format!("sigma_L3 must be positive, got {sigma_cm6}")));
        }
        Ok(Self {
            field_gauss,
            l3: cm6_to_m6(l3_cm6),
            sigma: cm6_to_m6(sigma_cm6),
        })
    }
}

/// Reads `B_gauss,L3_cm6_per_s,sigma_L3` CSV (`#` comments allowed).
pub fn read_l3_points<R: Read>(source: R) -> Result<Vec<L3Point>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(source);
    let header = reader.headers().map_err(|e| Error::Parse {
        line: 1,
        msg: e.to_string(),
    })?;
    if header.iter().collect::<Vec<_>>() != L3_POINTS_HEADER {
        return Err(Error::Parse {
            line: header.position().map_or(1, |p| p.line() as usize),
            msg: format!("expected header {}", L3_POINTS_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let mut v = [0.0; 3];
        for (i, slot) in v.iter_mut().enumerate() {
            let raw = record.get(i).unwrap_or("");
            *slot = raw.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("{}: cannot parse {raw:?}", L3_POINTS_HEADER[i]),
            })?;
        }
        out.push(L3Point::from_cm6(v[0], v[1], v[2]).map_err(|e| Error::Parse {
            line,
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct EfimovFitOptions {
    /// Compare against the unitarized rate with `L3sat = l3_max(T)/3`.
    pub unitarized: bool,
    /// van der Waals length fixing the κ* window, m.
    pub lvdw: f64,
    pub kappa_starts: usize,
    pub eta_starts: Vec<f64>,
    /// Number of best grid points refined by the simplex.
    pub refine: usize,
    pub simplex: SimplexOptions,
}

impl Default for EfimovFitOptions {
    fn default() -> Self {
        Self {
            unitarized: false,
            lvdw: 62.5 * BOHR_RADIUS,
            kappa_starts: 24,
            eta_starts: vec![3e-3, 3e-2, 0.3],
            refine: 6,
            simplex: SimplexOptions::default(),
        }
    }
}

impl EfimovFitOptions {
    /// `(κ_lo, κ_hi]` in m⁻¹.
    pub fn kappa_window(&self, u: &UniversalConstants) -> (f64, f64) {
        let hi = 1.0 / self.lvdw;
        (hi / u.length_ratio(), hi)
    }
}

struct Problem {
    /// ln(ħa⁴/m) per point.
    ln_envelope: Vec<f64>,
    /// ln(D|a|) per point.
    ln_da: Vec<f64>,
    ln_data: Vec<f64>,
    /// σ of ln L3 per point.
    sigma_ln: Vec<f64>,
    saturation: Option<f64>,
    u: UniversalConstants,
}

impl Problem {
    fn chi2(&self, kappa: f64, eta: f64) -> f64 {
        if !(kappa > 0.0 && eta > 0.0) {
            return f64::INFINITY;
        }
        let (lnk, s0) = (kappa.ln(), self.u.s0);
        let num = (16.0 * PI * PI * self.u.c * (2.0 * eta).sinh()).ln();
        let sinh2 = eta.sinh().powi(2);
        (0..self.ln_data.len())
            .map(|i| {
                let phase = s0 * (self.ln_da[i] + lnk);
                let mut ln_model = num - (phase.sin().powi(2) + sinh2).ln() + self.ln_envelope[i];
                if let Some(sat) = self.saturation {
                    let l = ln_model.exp();
                    ln_model = (l * sat / (l + sat)).ln();
                }
                ((self.ln_data[i] - ln_model) / self.sigma_ln[i]).powi(2)
            })
            .sum()
    }
}

/// Fits `(κ*, η*)` to `points`. `temperature` (K) only matters for the
/// unitarized variant. Returns `kappa_star_inv_a0` and `eta_star`.
pub fn fit_efimov(
    points: &[L3Point],
    table: &ScatteringTable,
    temperature: f64,
    u: &UniversalConstants,
    consts: &PhysicalConstants,
    opts: &EfimovFitOptions,
) -> Result<FitResult> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "Efimov fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().all(|p| p.field_gauss == points[0].field_gauss) {
        return Err(Error::InsufficientData(
            "all points are at the same field".into(),
        ));
    }
    let mut ln_envelope = Vec::with_capacity(points.len());
    let mut ln_da = Vec::with_capacity(points.len());
    for p in points {
        let a = (|| effective_a(&table.at(p.field_gauss)?))().map_err(|e| e.at_field(p.field_gauss))?;
        let a = a.abs() * consts.a0;
        ln_envelope.push((consts.hbar * a.powi(4) / consts.mass).ln());
        ln_da.push((u.d * a).ln());
    }
    let saturation = if opts.unitarized {
        Some(default_saturation(temperature, consts)?.m6_per_s())
    } else {
        None
    };
    let problem = Problem {
        ln_envelope,
        ln_da,
        ln_data: points.iter().map(|p| p.l3.ln()).collect(),
        sigma_ln: points.iter().map(|p| p.sigma / p.l3).collect(),
        saturation,
        u: *u,
    };
    let objective = |x: &[f64]| problem.chi2(x[0].exp(), x[1].exp());

    let (k_lo, k_hi) = opts.kappa_window(u);
    let period = u.length_ratio().ln();
    let nk = opts.kappa_starts.max(1);
    let mut starts: Vec<(f64, usize, [f64; 2])> = Vec::new();
    for j in 0..nk {
        let lnk = k_lo.ln() + period * (j as f64 + 0.5) / nk as f64;
        for &eta in &opts.eta_starts {
            let x = [lnk, eta.ln()];
            starts.push((objective(&x), starts.len(), x));
        }
    }
    starts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let step = [period / nk as f64, 0.5];
    let mut sopts = opts.simplex;
    sopts.f_atol = sopts.f_atol.max(1e-20 * points.len() as f64);
    let mut best: Option<(f64, usize, Vec<f64>, bool)> = None;
    for (_, idx, x0) in starts.iter().take(opts.refine.max(1)) {
        let first = simplex::minimize(objective, x0, &step, &sopts);
        let polish_step: Vec<f64> = vec![1e-3, 1e-2];
        let run = simplex::minimize(objective, &first.x, &polish_step, &sopts);
        let better = match &best {
            None => true,
            Some((f, i, _, _)) => run.fx < *f || (run.fx == *f && idx < i),
        };
        if better {
            best = Some((run.fx, *idx, run.x, run.converged));
        }
    }
    let (_, _, x, converged) = best.expect("at least one start");

    let mut kappa = x[0].exp();
    while kappa > k_hi {
        kappa /= u.length_ratio();
    }
    while kappa <= k_lo {
        kappa *= u.length_ratio();
    }
    let eta = x[1].exp();
    let chi2 = problem.chi2(kappa, eta);

    let phys = |p: &[f64]| problem.chi2(p[0], p[1]);
    let h = [1e-5 * kappa, 1e-4 * eta];
    let hm = hessian(&phys, &[kappa, eta], &h, &[false, false]);
    let sig = sigmas_from_hessian(&hm);

    Ok(FitResult {
        params: vec![
            FitParameter {
                name: "kappa_star_inv_a0",
                value: kappa * consts.a0,
                sigma: sig[0] * consts.a0,
                sigma_stat: sig[0] * consts.a0,
            },
            FitParameter {
                name: "eta_star",
                value: eta,
                sigma: sig[1],
                sigma_stat: sig[1],
            },
        ],
        chi2,
        dof: points.len() - 2,
        converged,
    })
}
