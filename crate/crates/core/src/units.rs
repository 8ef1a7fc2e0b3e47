//! Physical constants and the small set of units this crate needs.
//!
//! Everything inside the crate is computed in SI. The presentation units
//! used by lab notebooks (Bohr radii, Gauss, nK, kHz, cm⁶/s) appear only at
//! the boundaries: file formats, CLI flags and printed results.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant, J·s (CODATA 2018, exact).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K (exact).
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Bohr radius, m (CODATA 2018).
pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;
/// Unified atomic mass unit, kg (CODATA 2018).
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Mass of a ⁶Li atom in atomic mass units.
pub const LITHIUM6_MASS_U: f64 = 6.015_122_8;

/// Fundamental constants and the atomic mass used by every model.
///
/// `h` is not stored: it is always `2π·hbar`, so the two can never drift
/// apart when `hbar` is overridden.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub k_b: f64,
    /// Mass of one atom, kg.
    pub mass: f64,
    /// Bohr radius used to interpret model inputs given in a₀, m.
    pub a0: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            hbar: HBAR,
            k_b: BOLTZMANN,
            mass: LITHIUM6_MASS_U * ATOMIC_MASS_UNIT,
            a0: BOHR_RADIUS,
        }
    }
}

/// Optional overrides for [`PhysicalConstants`], keyed in SI.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantOverrides {
    #[serde(rename = "hbar_J_s")]
    pub hbar: Option<f64>,
    #[serde(rename = "kB_J_per_K")]
    pub k_b: Option<f64>,
    #[serde(rename = "m_kg")]
    pub mass: Option<f64>,
    #[serde(rename = "a0_m")]
    pub a0: Option<f64>,
}

impl PhysicalConstants {
    pub fn new(hbar: f64, k_b: f64, mass: f64, a0: f64) -> Result<Self> {
        for (name, v) in [("hbar", hbar), ("kB", k_b), ("m", mass), ("a0", a0)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!(
                    "constant {name} must be finite and positive, got {v}"
                )));
            }
        }
        Ok(Self {
            hbar,
            k_b,
            mass,
            a0,
        })
    }

    pub fn with_overrides(self, o: &ConstantOverrides) -> Result<Self> {
        Self::new(
            o.hbar.unwrap_or(self.hbar),
            o.k_b.unwrap_or(self.k_b),
            o.mass.unwrap_or(self.mass),
            o.a0.unwrap_or(self.a0),
        )
    }

    /// Parses a flat `key = value` TOML document of overrides.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let o: ConstantOverrides =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        Self::default().with_overrides(&o)
    }

    /// Planck constant, J·s.
    pub fn h(&self) -> f64 {
        2.0 * PI * self.hbar
    }

    /// ħ²/m, the natural energy·length² scale of the atom, J·m².
    pub fn hbar2_over_m(&self) -> f64 {
        self.hbar * self.hbar / self.mass
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimension {
    Length,
    Time,
    Energy,
    Temperature,
    Frequency,
    MagneticField,
    RateConstantL3,
    InverseLength,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unit {
    Meter,
    Centimeter,
    BohrRadius,
    Second,
    Millisecond,
    Microsecond,
    Nanosecond,
    Joule,
    Kelvin,
    Microkelvin,
    Nanokelvin,
    Hertz,
    Kilohertz,
    Megahertz,
    Tesla,
    Gauss,
    MeterSixPerSecond,
    CentimeterSixPerSecond,
    PerMeter,
    PerBohrRadius,
}

impl Unit {
    pub fn dimension(self) -> Dimension {
        use Unit::*;
        match self {
            Meter | Centimeter | BohrRadius => Dimension::Length,
            Second | Millisecond | Microsecond | Nanosecond => Dimension::Time,
            Joule => Dimension::Energy,
            Kelvin | Microkelvin | Nanokelvin => Dimension::Temperature,
            Hertz | Kilohertz | Megahertz => Dimension::Frequency,
            Tesla | Gauss => Dimension::MagneticField,
            MeterSixPerSecond | CentimeterSixPerSecond => Dimension::RateConstantL3,
            PerMeter | PerBohrRadius => Dimension::InverseLength,
        }
    }

    /// Size of one of this unit in the SI unit of its dimension.
    pub fn si_factor(self) -> f64 {
        use Unit::*;
        match self {
            Meter | Second | Joule | Kelvin | Hertz | Tesla | MeterSixPerSecond | PerMeter => 1.0,
            Centimeter => 1e-2,
            BohrRadius => BOHR_RADIUS,
            Millisecond => 1e-3,
            Microsecond => 1e-6,
            Nanosecond => 1e-9,
            Microkelvin => 1e-6,
            Nanokelvin => 1e-9,
            Kilohertz => 1e3,
            Megahertz => 1e6,
            Gauss => 1e-4,
            CentimeterSixPerSecond => 1e-12,
            PerBohrRadius => 1.0 / BOHR_RADIUS,
        }
    }

    pub fn symbol(self) -> &'static str {
        use Unit::*;
        match self {
            Meter => "m",
            Centimeter => "cm",
            BohrRadius => "a0",
            Second => "s",
            Millisecond => "ms",
            Microsecond => "us",
            Nanosecond => "ns",
            Joule => "J",
            Kelvin => "K",
            Microkelvin => "uK",
            Nanokelvin => "nK",
            Hertz => "Hz",
            Kilohertz => "kHz",
            Megahertz => "MHz",
            Tesla => "T",
            Gauss => "G",
            MeterSixPerSecond => "m6/s",
            CentimeterSixPerSecond => "cm6/s",
            PerMeter => "1/m",
            PerBohrRadius => "1/a0",
        }
    }
}

/// A value tagged with its unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity {
    pub value: f64,
    pub unit: Unit,
}

impl Quantity {
    pub fn new(value: f64, unit: Unit) -> Self {
        Self { value, unit }
    }

    pub fn dimension(&self) -> Dimension {
        self.unit.dimension()
    }

    /// Value expressed in the SI unit of its dimension.
    pub fn si(&self) -> f64 {
        self.value * self.unit.si_factor()
    }

    pub fn convert(self, target: Unit) -> Result<Quantity> {
        convert(self, target)
    }

    pub fn try_add(self, other: Quantity) -> Result<Quantity> {
        let other = convert(other, self.unit)?;
        Ok(Quantity::new(self.value + other.value, self.unit))
    }

    pub fn try_sub(self, other: Quantity) -> Result<Quantity> {
        let other = convert(other, self.unit)?;
        Ok(Quantity::new(self.value - other.value, self.unit))
    }

    pub fn scale(self, factor: f64) -> Quantity {
        Quantity::new(self.value * factor, self.unit)
    }
}

impl std::fmt::Display for Quantity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}", self.value, self.unit.symbol())
    }
}

/// Re-expresses `q` in `target`. Fails if the dimensions differ.
pub fn convert(q: Quantity, target: Unit) -> Result<Quantity> {
    if q.dimension() != target.dimension() {
        return Err(Error::Unit {
            from: q.dimension(),
            to: target.dimension(),
        });
    }
    if q.unit == target {
        return Ok(q);
    }
    Ok(Quantity::new(
        q.value * (q.unit.si_factor() / target.si_factor()),
        target,
    ))
}

/// m⁶/s → cm⁶/s.
pub fn m6_to_cm6(x: f64) -> f64 {
    x * 1e12
}

/// cm⁶/s → m⁶/s.
pub fn cm6_to_m6(x: f64) -> f64 {
    x * 1e-12
}

/// m⁻³ → cm⁻³.
pub fn per_m3_to_per_cm3(x: f64) -> f64 {
    x * 1e-6
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn meter_to_bohr() {
        let q = convert(Quantity::new(1.0, Unit::Meter), Unit::BohrRadius).unwrap();
        assert!(rel(q.value, 1.0 / 5.291_772_109_03e-11) < 1e-15);
        assert!(rel(q.value, 1.8897e10) < 1e-4);
    }

    #[test]
    fn rate_constant_power_of_ten() {
        let q = convert(
            Quantity::new(1.0, Unit::MeterSixPerSecond),
            Unit::CentimeterSixPerSecond,
        )
        .unwrap();
        assert!(rel(q.value, 1e12) < 1e-15);
    }

    #[test]
    fn vdw_length_in_meters() {
        // 62.5 × 5.29177210903e-11 = 3.30735756814375e-9, by hand
        let q = Quantity::new(62.5, Unit::BohrRadius)
            .convert(Unit::Meter)
            .unwrap();
        assert!(rel(q.value, 3.307_357_568_143_75e-9) < 1e-14);
    }

    #[test]
    fn mismatched_dimensions_rejected() {
        let err = convert(Quantity::new(1.0, Unit::Gauss), Unit::Kelvin).unwrap_err();
        assert!(matches!(err, Error::Unit { .. }));
        let sum = Quantity::new(1.0, Unit::Meter).try_add(Quantity::new(1.0, Unit::Second));
        assert!(sum.is_err());
    }

    #[test]
    fn mixed_unit_addition() {
        let q = Quantity::new(1.0, Unit::Tesla)
            .try_add(Quantity::new(5000.0, Unit::Gauss))
            .unwrap();
        assert_eq!(q.unit, Unit::Tesla);
        assert!(rel(q.value, 1.5) < 1e-15);
        let d = Quantity::new(30.0, Unit::Nanokelvin)
            .try_sub(Quantity::new(0.01, Unit::Microkelvin))
            .unwrap();
        assert!(rel(d.value, 20.0) < 1e-14);
    }

    #[test]
    fn h_is_two_pi_hbar() {
        let c = PhysicalConstants::default();
        assert_eq!(c.h(), 2.0 * PI * c.hbar);
        assert!(rel(c.h(), 6.626_070_15e-34) < 1e-9);
        assert!(rel(c.mass, 9.98834e-27) < 1e-6);
    }

    #[test]
    fn overrides_and_validation() {
        let c = PhysicalConstants::from_toml_str("m_kg = 1.0e-26\n").unwrap();
        assert_eq!(c.mass, 1.0e-26);
        assert_eq!(c.hbar, HBAR);
        assert!(PhysicalConstants::from_toml_str("mass = 1.0").is_err());
        assert!(PhysicalConstants::from_toml_str("hbar_J_s = -1.0").is_err());
        assert!(PhysicalConstants::new(HBAR, BOLTZMANN, f64::NAN, BOHR_RADIUS).is_err());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        const UNITS: [Unit; 20] = [
            Unit::Meter,
            Unit::Centimeter,
            Unit::BohrRadius,
            Unit::Second,
            Unit::Millisecond,
            Unit::Microsecond,
            Unit::Nanosecond,
            Unit::Joule,
            Unit::Kelvin,
            Unit::Microkelvin,
            Unit::Nanokelvin,
            Unit::Hertz,
            Unit::Kilohertz,
            Unit::Megahertz,
            Unit::Tesla,
            Unit::Gauss,
            Unit::MeterSixPerSecond,
            Unit::CentimeterSixPerSecond,
            Unit::PerMeter,
            Unit::PerBohrRadius,
        ];

        proptest! {
            #[test]
            fn roundtrip(value in -1e30f64..1e30, i in 0usize..20, j in 0usize..20) {
                let (from, to) = (UNITS[i], UNITS[j]);
                let q = Quantity::new(value, from);
                match q.convert(to) {
                    Ok(mid) => {
                        let back = mid.convert(from).unwrap();
                        prop_assert_eq!(back.unit, from);
                        let tol = 1e-14 * value.abs().max(f64::MIN_POSITIVE);
                        prop_assert!((back.value - value).abs() <= tol);
                    }
                    Err(_) => prop_assert_ne!(from.dimension(), to.dimension()),
                }
            }
        }
    }
}
