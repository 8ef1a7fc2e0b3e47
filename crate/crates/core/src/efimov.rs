//! Universal Efimov trimer spectrum for a given three-body parameter.
//!
//! Binding energies are returned as positive magnitudes: a trimer with
//! binding energy `E` sits at `-E` below the three-atom threshold.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::units::PhysicalConstants;

/// Universal numbers of the zero-range three-body problem with three
/// distinguishable, equal-mass particles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniversalConstants {
    /// Efimov scaling exponent.
    pub s0: f64,
    /// Prefactor of the recombination resonance formula.
    pub c: f64,
    /// Scale factor linking κ* to the threshold scattering lengths.
    pub d: f64,
    /// One-sigma uncertainty on `c` (metadata only).
    pub c_sigma: f64,
    /// One-sigma uncertainty on `d` (metadata only).
    pub d_sigma: f64,
}

impl Default for UniversalConstants {
    fn default() -> Self {
        Self {
            s0: 1.006_24,
            c: 29.62,
            d: 0.6642,
            c_sigma: 0.01,
            d_sigma: 0.0002,
        }
    }
}

impl UniversalConstants {
    /// Length scaling factor between neighbouring trimers, `e^{π/s0}`.
    pub fn length_ratio(&self) -> f64 {
        (PI / self.s0).exp()
    }

    /// Energy scaling factor between neighbouring trimers, `e^{2π/s0}`.
    pub fn energy_ratio(&self) -> f64 {
        (2.0 * PI / self.s0).exp()
    }
}

/// Returns `(e^{π/s0}, e^{2π/s0})`.
pub fn scaling_factors(u: &UniversalConstants) -> (f64, f64) {
    (u.length_ratio(), u.energy_ratio())
}

/// Complex three-body parameter `κ*·exp(iη*/s0)`, split into its modulus
/// (stored in m⁻¹) and the inelasticity `η*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfimovParams {
    pub kappa_star: f64,
    pub eta_star: f64,
}

impl EfimovParams {
    pub fn new(kappa_star: f64, eta_star: f64) -> Result<Self> {
        if !(kappa_star.is_finite() && kappa_star > 0.0) {
            return Err(Error::domain(format!("kappa* must be positive, got {kappa_star}")));
        }
        if !(eta_star.is_finite() && eta_star >= 0.0) {
            return Err(Error::domain(format!("eta* must be non-negative, got {eta_star}")));
        }
        Ok(Self {
            kappa_star,
            eta_star,
        })
    }

    /// κ* given in a0⁻¹.
    pub fn from_inv_a0(kappa_inv_a0: f64, eta_star: f64, consts: &PhysicalConstants) -> Result<Self> {
        Self::new(kappa_inv_a0 / consts.a0, eta_star)
    }

    pub fn kappa_inv_a0(&self, consts: &PhysicalConstants) -> f64 {
        self.kappa_star * consts.a0
    }
}

fn check_level(n: i32) -> Result<()> {
    if n < 0 {
        return Err(Error::domain(format!("trimer index must be >= 0, got {n}")));
    }
    Ok(())
}

/// `|E_n| = e^{-2πn/s0}·ħ²κ*²/m` in J, the n-th trimer at infinite `|a|`.
pub fn binding_energy_at_unitarity(
    p: &EfimovParams,
    u: &UniversalConstants,
    n: i32,
    consts: &PhysicalConstants,
) -> Result<f64> {
    check_level(n)?;
    let scale = consts.hbar2_over_m() * p.kappa_star * p.kappa_star;
    Ok((-2.0 * PI * f64::from(n) / u.s0).exp() * scale)
}

/// Scattering length `a_n⁻ = −e^{πn/s0}/(D·κ*)` in m at which the n-th
/// trimer meets the three-atom threshold.
pub fn resonance_scattering_length(p: &EfimovParams, u: &UniversalConstants, n: i32) -> Result<f64> {
    check_level(n)?;
    Ok(-(PI * f64::from(n) / u.s0).exp() / (u.d * p.kappa_star))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrimerWidth {
    /// Decay rate as an angular frequency, rad/s.
    pub gamma: f64,
    /// `1/γ` in s; infinite when `η* = 0`.
    pub lifetime: f64,
}

/// Decay width of a trimer bound by `binding_energy` (J).
///
/// Uses `ħγ = (4η*/s0)·E`, the deep-dimer decay width of a shallow Efimov
/// state to leading order in η*.
pub fn trimer_width(
    binding_energy: f64,
    p: &EfimovParams,
    u: &UniversalConstants,
    consts: &PhysicalConstants,
) -> Result<TrimerWidth> {
    if !(binding_energy.is_finite() && binding_energy > 0.0) {
        return Err(Error::domain(format!(
            "binding energy must be positive, got {binding_energy}"
        )));
    }
    let gamma = 4.0 * p.eta_star / u.s0 * binding_energy / consts.hbar;
    let lifetime = if gamma > 0.0 { 1.0 / gamma } else { f64::INFINITY };
    Ok(TrimerWidth { gamma, lifetime })
}

/// One row of the spectrum table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumLevel {
    pub n: i32,
    /// Binding energy, J.
    pub binding_energy: f64,
    /// Threshold crossing, m.
    pub a_minus: f64,
    pub width: TrimerWidth,
}

/// Levels `0..=n_max` of the spectrum at unitarity.
pub fn spectrum(
    p: &EfimovParams,
    u: &UniversalConstants,
    n_max: u32,
    consts: &PhysicalConstants,
) -> Result<Vec<SpectrumLevel>> {
    let n_max = i32::try_from(n_max).map_err(|_| Error::domain("n_max too large"))?;
    (0..=n_max)
        .map(|n| {
            let e = binding_energy_at_unitarity(p, u, n, consts)?;
            Ok(SpectrumLevel {
                n,
                binding_energy: e,
                a_minus: resonance_scattering_length(p, u, n)?,
                width: trimer_width(e, p, u, consts)?,
            })
        })
        .collect()
}
