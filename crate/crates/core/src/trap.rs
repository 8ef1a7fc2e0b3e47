//! Harmonic traps with field-dependent frequencies and the thermal-gas and
//! Fermi-gas quantities derived from them.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::units::PhysicalConstants;

/// How one axis frequency depends on the bias field `B` (G).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxisLaw {
    /// Field independent, Hz.
    Constant(f64),
    /// `coef·√B` Hz.
    SqrtField { coef: f64 },
    /// `base·√(1 + slope·(B − reference))` Hz.
    SqrtLinear { base: f64, slope: f64, reference: f64 },
}

impl AxisLaw {
    fn eval(self, b: f64) -> f64 {
        match self {
            AxisLaw::Constant(nu) => nu,
            AxisLaw::SqrtField { coef } => coef * b.sqrt(),
            AxisLaw::SqrtLinear {
                base,
                slope,
                reference,
            } => base * (1.0 + slope * (b - reference)).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub law: AxisLaw,
    /// One-sigma fractional uncertainty of the frequency.
    pub frac_sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrapKind {
    A,
    B,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapConfig {
    pub kind: TrapKind,
    pub axes: [Axis; 3],
    /// Lowest field (G) at which the frequency laws hold.
    pub min_field_gauss: f64,
}

impl TrapConfig {
    /// Large-volume hybrid trap used for the ~30 nK clouds.
    pub fn trap_a() -> Self {
        Self {
            kind: TrapKind::A,
            axes: [
                Axis {
                    law: AxisLaw::Constant(15.0),
                    frac_sigma: 2.0 / 15.0,
                },
                Axis {
                    law: AxisLaw::SqrtField { coef: 0.242 },
                    frac_sigma: 0.01,
                },
                Axis {
                    law: AxisLaw::Constant(12.0),
                    frac_sigma: 1.0 / 12.0,
                },
            ],
            min_field_gauss: 0.0,
        }
    }

    /// Tighter hybrid trap used for the ~180 nK clouds; valid from 842 G.
    pub fn trap_b() -> Self {
        Self {
            kind: TrapKind::B,
            axes: [
                Axis {
                    law: AxisLaw::SqrtLinear {
                        base: 33.0,
                        slope: 1.4e-3,
                        reference: 842.0,
                    },
                    frac_sigma: 0.03,
                },
                Axis {
                    law: AxisLaw::SqrtLinear {
                        base: 21.0,
                        slope: 3.6e-3,
                        reference: 842.0,
                    },
                    frac_sigma: 0.03,
                },
                Axis {
                    law: AxisLaw::Constant(94.0),
                    frac_sigma: 2.0 / 94.0,
                },
            ],
            min_field_gauss: 842.0,
        }
    }

    /// Fixed frequencies (Hz) with no uncertainty.
    pub fn custom(nu_x: f64, nu_y: f64, nu_z: f64) -> Result<Self> {
        for nu in [nu_x, nu_y, nu_z] {
            if !(nu.is_finite() && nu > 0.0) {
                return Err(Error::domain(format!("trap frequency must be positive, got {nu} Hz")));
            }
        }
        let axis = |nu| Axis {
            law: AxisLaw::Constant(nu),
            frac_sigma: 0.0,
        };
        Ok(Self {
            kind: TrapKind::Custom,
            axes: [axis(nu_x), axis(nu_y), axis(nu_z)],
            min_field_gauss: f64::NEG_INFINITY,
        })
    }

    pub fn frequencies(&self, field_gauss: f64) -> Result<[f64; 3]> {
        trap_frequencies(self, field_gauss)
    }

    /// Geometric-mean frequency at `field_gauss`, Hz.
    pub fn mean_frequency(&self, field_gauss: f64) -> Result<f64> {
        mean_frequency(self.frequencies(field_gauss)?)
    }

    /// Fractional one-sigma uncertainty of the mean frequency, axes
    /// independent: `(1/3)·√Σ(δν_i/ν_i)²`.
    pub fn mean_frequency_frac_sigma(&self) -> f64 {
        self.axes
            .iter()
            .map(|a| a.frac_sigma * a.frac_sigma)
            .sum::<f64>()
            .sqrt()
            / 3.0
    }
}

/// Axis frequencies `(νx, νy, νz)` in Hz.
pub fn trap_frequencies(cfg: &TrapConfig, field_gauss: f64) -> Result<[f64; 3]> {
    if !(field_gauss.is_finite() || cfg.kind == TrapKind::Custom) || field_gauss < cfg.min_field_gauss {
        return Err(Error::range(format!(
            "trap {:?} frequencies undefined at B = {field_gauss} G (valid from {} G)",
            cfg.kind, cfg.min_field_gauss
        )));
    }
    let nu = cfg.axes.map(|a| a.law.eval(field_gauss));
    if nu.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::range(format!(
            "trap {:?} has a non-positive frequency at B = {field_gauss} G",
            cfg.kind
        )));
    }
    Ok(nu)
}

/// Geometric mean `(νx·νy·νz)^{1/3}`.
pub fn mean_frequency(nu: [f64; 3]) -> Result<f64> {
    if nu.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::domain(format!("frequencies must be positive, got {nu:?}")));
    }
    Ok((nu[0] * nu[1] * nu[2]).cbrt())
}

/// Atoms per spin state at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasState {
    pub atoms: f64,
    /// K.
    pub temperature: f64,
    pub field_gauss: f64,
}

impl GasState {
    pub fn new(atoms: f64, temperature: f64, field_gauss: f64) -> Result<Self> {
        if !(atoms.is_finite() && atoms >= 0.0) {
            return Err(Error::domain(format!("atom number must be >= 0, got {atoms}")));
        }
        check_temperature(temperature)?;
        Ok(Self {
            atoms,
            temperature,
            field_gauss,
        })
    }
}

fn check_temperature(t: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::domain(format!("temperature must be positive, got {t} K")));
    }
    Ok(())
}

/// `2π·m·ν̄²/(k_B T)`, the inverse squared thermal radius, m⁻².
fn inverse_thermal_area(temperature: f64, nu_bar: f64, consts: &PhysicalConstants) -> f64 {
    2.0 * PI * consts.mass * nu_bar * nu_bar / (consts.k_b * temperature)
}

/// Central density per spin state of a thermal cloud, m⁻³.
pub fn peak_density(s: &GasState, nu_bar: f64, consts: &PhysicalConstants) -> Result<f64> {
    check_temperature(s.temperature)?;
    Ok(s.atoms * inverse_thermal_area(s.temperature, nu_bar, consts).powf(1.5))
}

/// `⟨n²⟩ = n0²/√27`, m⁻⁶.
pub fn density_squared_average(s: &GasState, nu_bar: f64, consts: &PhysicalConstants) -> Result<f64> {
    let n0 = peak_density(s, nu_bar, consts)?;
    Ok(n0 * n0 / 27f64.sqrt())
}

/// `⟨n²⟩/N²` for a thermal cloud, m⁻⁶. Multiplying by `L3` gives the
/// three-body loss coefficient of `dN/dt = −L3·(⟨n²⟩/N²)·N³`.
pub fn density_squared_per_atom2(temperature: f64, nu_bar: f64, consts: &PhysicalConstants) -> Result<f64> {
    check_temperature(temperature)?;
    Ok(inverse_thermal_area(temperature, nu_bar, consts).powi(3) / 27f64.sqrt())
}

/// `k_B T_F = h·ν̄·(6N)^{1/3}`, K.
pub fn fermi_temperature(atoms: f64, nu_bar: f64, consts: &PhysicalConstants) -> Result<f64> {
    if !(atoms.is_finite() && atoms >= 1.0) {
        return Err(Error::domain(format!("need at least one atom, got {atoms}")));
    }
    if !(nu_bar.is_finite() && nu_bar > 0.0) {
        return Err(Error::domain(format!("mean frequency must be positive, got {nu_bar}")));
    }
    Ok(consts.h() * nu_bar * (6.0 * atoms).cbrt() / consts.k_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::per_m3_to_per_cm3;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn trap_a_axial_frequency() {
        let nu = TrapConfig::trap_a().frequencies(900.0).unwrap();
        assert!(rel(nu[1], 7.26) < 1e-14);
        assert_eq!((nu[0], nu[2]), (15.0, 12.0));
    }

    #[test]
    fn trap_b_frequencies() {
        let t = TrapConfig::trap_b();
        assert_eq!(t.frequencies(842.0).unwrap(), [33.0, 21.0, 94.0]);
        let nu = t.frequencies(1500.0).unwrap();
        assert!(rel(nu[0], 45.740_428_506_956_51) < 1e-12);
        assert!(rel(nu[1], 38.544_011_207_968_48) < 1e-12);
        assert!((nu[0] - 45.7).abs() < 0.05 && (nu[1] - 38.5).abs() < 0.05);
        assert!(matches!(t.frequencies(841.0), Err(Error::Range(_))));
        assert!(rel(t.mean_frequency(1500.0).unwrap(), 54.928_153_169_705_45) < 1e-12);
    }

    #[test]
    fn mean_frequency_cases() {
        assert!(rel(mean_frequency([8.0, 8.0, 8.0]).unwrap(), 8.0) < 1e-15);
        assert!(rel(mean_frequency([1.0, 8.0, 64.0]).unwrap(), 8.0) < 1e-15);
        assert!(mean_frequency([1.0, 0.0, 2.0]).is_err());
    }

    #[test]
    fn density_identities() {
        let c = PhysicalConstants::default();
        let s = GasState::new(1e5, 100e-9, 900.0).unwrap();
        let nu = 20.0;
        let n0 = peak_density(&s, nu, &c).unwrap();
        let n2 = density_squared_average(&s, nu, &c).unwrap();
        assert!(rel(n2 * 27f64.sqrt(), n0 * n0) < 1e-14);
        let per = density_squared_per_atom2(s.temperature, nu, &c).unwrap();
        assert!(rel(per * s.atoms * s.atoms, n2) < 1e-14);
        let s2 = GasState::new(2e5, 100e-9, 900.0).unwrap();
        assert!(rel(peak_density(&s2, nu, &c).unwrap(), 2.0 * n0) < 1e-15);
        assert!(rel(density_squared_average(&s2, nu, &c).unwrap(), 4.0 * n2) < 1e-14);
        let empty = GasState::new(0.0, 100e-9, 900.0).unwrap();
        assert_eq!(density_squared_average(&empty, nu, &c).unwrap(), 0.0);
        assert!(GasState::new(1.0, 0.0, 900.0).is_err());
    }

    #[test]
    fn trap_a_density_band() {
        // N is not quoted alongside n0 ≃ 5e9 cm⁻³, so only check that a
        // realistic atom number lands in the right decade.
        let c = PhysicalConstants::default();
        let nu = TrapConfig::trap_a().mean_frequency(900.0).unwrap();
        let s = GasState::new(6e4, 30e-9, 900.0).unwrap();
        let n0 = per_m3_to_per_cm3(peak_density(&s, nu, &c).unwrap());
        assert!(n0 > 5e9 / 3.0 && n0 < 5e9 * 3.0, "{n0}");
    }

    #[test]
    fn degenerate_gas() {
        let c = PhysicalConstants::default();
        let nu = TrapConfig::trap_b().mean_frequency(1500.0).unwrap();
        let tf = fermi_temperature(6e4, nu, &c).unwrap();
        assert!(rel(tf, 1.875_290_602_196_504e-7) < 1e-10);
        assert!((160e-9..=200e-9).contains(&tf));
        let ratio = 50e-9 / tf;
        assert!((0.25..=0.31).contains(&ratio));
        assert!(rel(fermi_temperature(8.0 * 6e4, nu, &c).unwrap(), 2.0 * tf) < 1e-14);
        assert!(fermi_temperature(0.5, nu, &c).is_err());
    }

    #[test]
    fn custom_trap() {
        let t = TrapConfig::custom(10.0, 20.0, 40.0).unwrap();
        assert_eq!(t.frequencies(-5.0).unwrap(), [10.0, 20.0, 40.0]);
        assert_eq!(t.mean_frequency_frac_sigma(), 0.0);
        assert!(TrapConfig::custom(10.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn frequency_uncertainty() {
        let f = TrapConfig::trap_b().mean_frequency_frac_sigma();
        let expect = (0.03f64.powi(2) * 2.0 + (2.0f64 / 94.0).powi(2)).sqrt() / 3.0;
        assert!(rel(f, expect) < 1e-15);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn mean_frequency_symmetric_homogeneous(
                a in 0.1f64..1e3, b in 0.1f64..1e3, c in 0.1f64..1e3, k in 0.1f64..10.0,
            ) {
                let m = mean_frequency([a, b, c]).unwrap();
                for perm in [[b, a, c], [c, b, a], [a, c, b], [b, c, a]] {
                    prop_assert!((mean_frequency(perm).unwrap() / m - 1.0).abs() < 1e-14);
                }
                prop_assert!((mean_frequency([k * a, k * b, k * c]).unwrap() / (k * m) - 1.0).abs() < 1e-14);
            }

            #[test]
            fn density_temperature_slope(t in 1e-9f64..1e-5, f in 1.5f64..10.0, nu in 1.0f64..500.0) {
                let c = PhysicalConstants::default();
                let n1 = peak_density(&GasState::new(1e5, t, 0.0).unwrap(), nu, &c).unwrap();
                let n2 = peak_density(&GasState::new(1e5, t * f, 0.0).unwrap(), nu, &c).unwrap();
                prop_assert!(((n2 / n1).ln() / f.ln() + 1.5).abs() < 1e-9);
            }

            #[test]
            fn fermi_temperature_linear_in_frequency(n in 1.0f64..1e7, nu in 1.0f64..500.0, k in 0.1f64..10.0) {
                let c = PhysicalConstants::default();
                let a = fermi_temperature(n, nu, &c).unwrap();
                let b = fermi_temperature(n, k * nu, &c).unwrap();
                prop_assert!((b / (k * a) - 1.0).abs() < 1e-14);
            }
        }
    }
}
