//! Least-squares fits: `L3` from a single decay curve, and the three-body
//! parameters `(κ*, η*)` from `L3` measured across many fields.

mod decay;
mod efimov;
pub mod simplex;

use std::io::Write;

pub use decay::{fit_decay, DecayFitOptions};
pub use efimov::{fit_efimov, read_l3_points, EfimovFitOptions, L3Point, L3_POINTS_HEADER};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FitParameter {
    pub name: &'static str,
    pub value: f64,
    /// Total one-sigma uncertainty, including any systematic contribution.
    pub sigma: f64,
    /// Statistical part from the curvature of χ² alone.
    pub sigma_stat: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: Vec<FitParameter>,
    pub chi2: f64,
    pub dof: usize,
    pub converged: bool,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<&FitParameter> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn value(&self, name: &str) -> f64 {
        self.get(name).map_or(f64::NAN, |p| p.value)
    }

    pub fn sigma(&self, name: &str) -> f64 {
        self.get(name).map_or(f64::NAN, |p| p.sigma)
    }

    pub fn reduced_chi2(&self) -> f64 {
        reduced_chi_squared(self.chi2, self.dof)
    }

    /// `parameter,value,sigma` CSV followed by `chi2`, `dof` and
    /// `converged` rows with an empty sigma column.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "parameter,value,sigma")?;
        for p in &self.params {
            writeln!(out, "{},{:e},{:e}", p.name, p.value, p.sigma)?;
        }
        writeln!(out, "chi2,{:e},", self.chi2)?;
        writeln!(out, "dof,{},", self.dof)?;
        writeln!(out, "converged,{},", self.converged)?;
        Ok(())
    }
}

/// `Σ(r_i/σ_i)²`.
pub fn chi_squared(residuals: &[f64], sigmas: &[f64]) -> Result<f64> {
    if residuals.len() != sigmas.len() {
        return Err(Error::domain(format!(
            "{} residuals but {} sigmas",
            residuals.len(),
            sigmas.len()
        )));
    }
    if let Some(s) = sigmas.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
        return Err(Error::domain(format!("sigma must be positive, got {s}")));
    }
    Ok(residuals.iter().zip(sigmas).map(|(r, s)| (r / s).powi(2)).sum())
}

pub fn reduced_chi_squared(chi2: f64, dof: usize) -> f64 {
    chi2 / dof as f64
}

/// Central-difference Hessian of `f` at `x` with per-coordinate steps `h`.
/// Coordinates flagged in `one_sided` use forward differences.
pub(crate) fn hessian(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: &[f64], one_sided: &[bool]) -> Vec<Vec<f64>> {
    let n = x.len();
    let at = |d: &[(usize, f64)]| {
        let mut p = x.to_vec();
        for &(i, s) in d {
            p[i] += s;
        }
        f(&p)
    };
    // Offsets for coordinate i: symmetric (−h, +h) or forward (+h, +2h).
    let off = |i: usize| if one_sided[i] { (h[i], 2.0 * h[i]) } else { (-h[i], h[i]) };
    let f0 = f(x);
    let mut hm = vec![vec![0.0; n]; n];
    for i in 0..n {
        let (a, b) = off(i);
        hm[i][i] = if one_sided[i] {
            (at(&[(i, b)]) - 2.0 * at(&[(i, a)]) + f0) / (h[i] * h[i])
        } else {
            (at(&[(i, b)]) - 2.0 * f0 + at(&[(i, a)])) / (h[i] * h[i])
        };
        for j in 0..i {
            let v = if one_sided[i] || one_sided[j] {
                let (si, sj) = (h[i], h[j]);
                (at(&[(i, si), (j, sj)]) - at(&[(i, si)]) - at(&[(j, sj)]) + f0) / (si * sj)
            } else {
                (at(&[(i, h[i]), (j, h[j])]) - at(&[(i, h[i]), (j, -h[j])])
                    - at(&[(i, -h[i]), (j, h[j])])
                    + at(&[(i, -h[i]), (j, -h[j])]))
                    / (4.0 * h[i] * h[j])
            };
            hm[i][j] = v;
            hm[j][i] = v;
        }
    }
    hm
}

/// Gauss–Jordan inverse with partial pivoting; `None` if singular.
pub(crate) fn invert(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[pivot][col] == 0.0 || !a[pivot][col].is_finite() {
            return None;
        }
        a.swap(col, pivot);
        let p = a[col][col];
        for v in a[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let factor = a[r][col];
                if factor != 0.0 {
                    let pivot_row = a[col].clone();
                    for (v, p) in a[r].iter_mut().zip(&pivot_row) {
                        *v -= factor * p;
                    }
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// One-sigma errors `√diag(2·H⁻¹)` from the Hessian of χ². Non-identifiable
/// directions come back as `+∞`.
pub(crate) fn sigmas_from_hessian(h: &[Vec<f64>]) -> Vec<f64> {
    match invert(h) {
        Some(inv) => (0..h.len())
            .map(|i| {
                let v = 2.0 * inv[i][i];
                if v.is_finite() && v >= 0.0 {
                    v.sqrt()
                } else {
                    f64::INFINITY
                }
            })
            .collect(),
        None => vec![f64::INFINITY; h.len()],
    }
}
