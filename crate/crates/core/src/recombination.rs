//! Three-body recombination rate constants.
//!
//! The zero-range rate for three equal negative scattering lengths is
//!
//! ```text
//! L3 = 16π²C·sinh(2η*) / (sin²[s0·ln(D|a|κ*)] + sinh²η*) · ħa⁴/m
//! ```
//!
//! which peaks whenever `|a| = e^{πn/s0}/(Dκ*)`, the threshold crossings of
//! [`crate::efimov::resonance_scattering_length`].
//!
//! For unequal scattering lengths the exact rate requires solving the
//! three-body integral equations, which this crate does not do. Instead
//! [`effective_a`] reduces a triple to the geometric mean of its magnitudes
//! and feeds that into the equal-`a` formula. This keeps the resonance
//! positions and the `a⁴` envelope qualitatively right and nothing more.

use std::f64::consts::PI;

use crate::efimov::{EfimovParams, UniversalConstants};
use crate::error::{Error, Result};
use crate::scattering::{ScatteringTable, ScatteringTriple};
use crate::units::{cm6_to_m6, m6_to_cm6, PhysicalConstants};

/// Barrier height of the lowest three-body adiabatic potential for large
/// negative `a`, in units of `ħ²/(m a²)`.
pub const BARRIER_HEIGHT: f64 = 0.158;

/// Ratio between the unitarity limit and the saturation value of a thermal gas.
pub const SATURATION_FRACTION: f64 = 1.0 / 3.0;

/// Field resolution of [`scan_resonance_fields`], G.
pub const SCAN_TOLERANCE_GAUSS: f64 = 0.01;

/// Recombination rate constant, stored in m⁶/s.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RateConstant(f64);

impl RateConstant {
    pub fn new(m6_per_s: f64) -> Result<Self> {
        if !(m6_per_s.is_finite() && m6_per_s >= 0.0) {
            return Err(Error::domain(format!(
                "rate constant must be finite and >= 0, got {m6_per_s} m6/s"
            )));
        }
        Ok(Self(m6_per_s))
    }

    pub fn from_cm6_per_s(v: f64) -> Result<Self> {
        Self::new(cm6_to_m6(v))
    }

    pub const fn zero() -> Self {
        Self(0.0)
    }

    pub fn m6_per_s(self) -> f64 {
        self.0
    }

    pub fn cm6_per_s(self) -> f64 {
        m6_to_cm6(self.0)
    }
}

/// Phase `s0·ln(D|a|κ*)` of the resonance term; `a` in m.
pub fn resonance_phase(a: f64, p: &EfimovParams, u: &UniversalConstants) -> f64 {
    u.s0 * (u.d * a.abs() * p.kappa_star).ln()
}

/// Equal-scattering-length recombination rate; `a` in m, must be negative.
pub fn l3_equal_a(
    a: f64,
    p: &EfimovParams,
    u: &UniversalConstants,
    consts: &PhysicalConstants,
) -> Result<RateConstant> {
    if !(a.is_finite() && a < 0.0) {
        return Err(Error::domain(format!(
            "equal-negative-a formula only, got a = {a} m"
        )));
    }
    let sin2 = resonance_phase(a, p, u).sin().powi(2);
    let sinh_eta = p.eta_star.sinh();
    let denom = sin2 + sinh_eta * sinh_eta;
    if denom == 0.0 {
        return Err(Error::Singular(format!(
            "eta* = 0 exactly on a threshold crossing (a = {a} m)"
        )));
    }
    let a2 = a * a;
    let prefactor = 16.0 * PI * PI * u.c * (2.0 * p.eta_star).sinh() / denom;
    RateConstant::new(prefactor * consts.hbar * a2 * a2 / consts.mass)
}

/// Upper bound of the equal-`a` rate, reached on a threshold crossing.
pub fn l3_equal_a_peak(
    a: f64,
    p: &EfimovParams,
    u: &UniversalConstants,
    consts: &PhysicalConstants,
) -> f64 {
    let a2 = a * a;
    16.0 * PI * PI * u.c * (2.0 * p.eta_star).sinh() / p.eta_star.sinh().powi(2) * consts.hbar * a2
        * a2
        / consts.mass
}

/// Unitarity limit `√108·π²ħ⁵/(m³(k_B T)²)` of three distinguishable
/// equal-mass fermions at temperature `t` (K).
pub fn l3_max(t: f64, consts: &PhysicalConstants) -> Result<RateConstant> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::domain(format!("temperature must be positive, got {t} K")));
    }
    let alpha = 108f64.sqrt() * PI * PI * consts.hbar.powi(5) / consts.mass.powi(3);
    let kt = consts.k_b * t;
    RateConstant::new(alpha / (kt * kt))
}

/// Saturation rate `l3_max(T)/3`.
pub fn default_saturation(t: f64, consts: &PhysicalConstants) -> Result<RateConstant> {
    Ok(RateConstant(l3_max(t, consts)?.0 * SATURATION_FRACTION))
}

/// `(1/L3 + 1/L3sat)⁻¹`.
pub fn l3_unitarized(l3: RateConstant, l3_sat: RateConstant) -> Result<RateConstant> {
    if l3.0 <= 0.0 || l3_sat.0 <= 0.0 {
        return Err(Error::domain(format!(
            "unitarized rate needs positive inputs, got {} and {} m6/s",
            l3.0, l3_sat.0
        )));
    }
    RateConstant::new(l3.0 * l3_sat.0 / (l3.0 + l3_sat.0))
}

/// Temperature with `k_B T` equal to the three-body barrier at `|a|` (m).
pub fn threshold_temperature(a: f64, consts: &PhysicalConstants) -> Result<f64> {
    if !(a.is_finite() && a != 0.0) {
        return Err(Error::domain(format!("scattering length must be finite and nonzero, got {a}")));
    }
    Ok(BARRIER_HEIGHT * consts.hbar2_over_m() / (a * a * consts.k_b))
}

/// Geometric-mean scattering length `−(|a12||a23||a13|)^{1/3}`, in the
/// triple's units (a0). Defined only when all three are negative.
pub fn effective_a(triple: &ScatteringTriple) -> Result<f64> {
    let [a12, a23, a13] = triple.lengths();
    if !(a12 < 0.0 && a23 < 0.0 && a13 < 0.0) {
        return Err(Error::domain(format!(
            "effective a needs three negative scattering lengths, got ({a12}, {a23}, {a13}) a0"
        )));
    }
    Ok(-(a12.abs() * a23.abs() * a13.abs()).cbrt())
}

/// Heuristic zero-temperature rate for a triple given in a0.
pub fn l3_heuristic(
    triple: &ScatteringTriple,
    p: &EfimovParams,
    u: &UniversalConstants,
    consts: &PhysicalConstants,
) -> Result<RateConstant> {
    l3_equal_a(effective_a(triple)? * consts.a0, p, u, consts)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub field_gauss: f64,
    pub zero_t: RateConstant,
    pub unitarized: RateConstant,
}

/// Zero-temperature and unitarized rate on a field grid.
///
/// `l3_sat` defaults to `l3_max(t)/3`. A zero-temperature rate of exactly
/// zero stays zero after unitarization.
pub fn l3_model_curve(
    table: &ScatteringTable,
    p: &EfimovParams,
    u: &UniversalConstants,
    t: f64,
    grid_gauss: &[f64],
    l3_sat: Option<RateConstant>,
    consts: &PhysicalConstants,
) -> Result<Vec<CurvePoint>> {
    let sat = match l3_sat {
        Some(s) => s,
        None => default_saturation(t, consts)?,
    };
    grid_gauss
        .iter()
        .map(|&b| {
            let point = || -> Result<CurvePoint> {
                let zero_t = l3_heuristic(&table.at(b)?, p, u, consts)?;
                let unitarized = if zero_t.0 == 0.0 {
                    zero_t
                } else {
                    l3_unitarized(zero_t, sat)?
                };
                Ok(CurvePoint {
                    field_gauss: b,
                    zero_t,
                    unitarized,
                })
            };
            point().map_err(|e| e.at_field(b))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceCrossing {
    pub field_gauss: f64,
    /// Index n of the trimer crossing threshold.
    pub branch: i32,
}

/// Fields where `D|a_eff(B)|κ*` passes `e^{πn/s0}` for some integer n, i.e.
/// where the resonance phase crosses `nπ`.
///
/// Each table interval is subdivided so that no crossing is missed while
/// the phase stays monotone inside a sub-step, then each bracketed crossing
/// is bisected down to [`SCAN_TOLERANCE_GAUSS`]. Intervals touching a triple
/// that is not all-negative are skipped.
pub fn scan_resonance_fields(
    table: &ScatteringTable,
    p: &EfimovParams,
    u: &UniversalConstants,
    consts: &PhysicalConstants,
) -> Vec<ResonanceCrossing> {
    const SUBSTEPS: usize = 32;
    let phase = |b: f64| -> Option<f64> {
        let a = effective_a(&table.at(b).ok()?).ok()?;
        Some(resonance_phase(a * consts.a0, p, u) / PI)
    };

    let mut out: Vec<ResonanceCrossing> = Vec::new();
    for w in table.rows().windows(2) {
        let (b0, b1) = (w[0].field_gauss, w[1].field_gauss);
        let step = (b1 - b0) / SUBSTEPS as f64;
        for k in 0..SUBSTEPS {
            let lo = b0 + step * k as f64;
            let hi = if k + 1 == SUBSTEPS { b1 } else { lo + step };
            let (Some(x_lo), Some(x_hi)) = (phase(lo), phase(hi)) else {
                continue;
            };
            let (n_lo, n_hi) = (x_lo.floor(), x_hi.floor());
            if n_lo == n_hi {
                continue;
            }
            // Every integer strictly passed between the two ends.
            let (first, last) = if n_hi > n_lo {
                (n_lo + 1.0, n_hi)
            } else {
                (n_hi + 1.0, n_lo)
            };
            let mut n = first;
            while n <= last {
                let target = n;
                let f = |b: f64| phase(b).map(|x| x - target);
                if let Some(field) = bisect(f, lo, hi, SCAN_TOLERANCE_GAUSS) {
                    let dup = out.last().is_some_and(|c: &ResonanceCrossing| {
                        c.branch == target as i32
                            && (c.field_gauss - field).abs() <= 2.0 * SCAN_TOLERANCE_GAUSS
                    });
                    if !dup {
                        out.push(ResonanceCrossing {
                            field_gauss: field,
                            branch: target as i32,
                        });
                    }
                }
                n += 1.0;
            }
        }
    }
    out
}

fn bisect(f: impl Fn(f64) -> Option<f64>, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64> {
    let mut f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Some(lo);
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return None;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Some(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efimov::resonance_scattering_length;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn setup() -> (EfimovParams, UniversalConstants, PhysicalConstants) {
        let c = PhysicalConstants::default();
        (
            EfimovParams::from_inv_a0(6.9e-3, 0.016, &c).unwrap(),
            UniversalConstants::default(),
            c,
        )
    }

    #[test]
    fn peak_at_first_excited_crossing() {
        let (p, u, c) = setup();
        let a1 = resonance_scattering_length(&p, &u, 1).unwrap();
        let l3 = l3_equal_a(a1, &p, &u, &c).unwrap();
        // mpmath, 40 digits, at a1 = −4951.84998629663 a0.
        assert!(rel(l3.cm6_per_s(), 2.910_776_553_377_316e-17) < 1e-6);
    }

    #[test]
    fn zero_eta_off_resonance_is_zero() {
        let (p, u, c) = setup();
        let p0 = EfimovParams::new(p.kappa_star, 0.0).unwrap();
        let l3 = l3_equal_a(-3000.0 * c.a0, &p0, &u, &c).unwrap();
        assert_eq!(l3.m6_per_s(), 0.0);
    }

    #[test]
    fn domain_errors() {
        let (p, u, c) = setup();
        assert!(matches!(l3_equal_a(0.0, &p, &u, &c), Err(Error::Domain(_))));
        assert!(matches!(l3_equal_a(1e-7, &p, &u, &c), Err(Error::Domain(_))));
        // Exactly on resonance with η* = 0: D|a|κ* = 1 gives ln(1) = 0.
        let p0 = EfimovParams::new(1.0 / (u.d * 1e-7), 0.0).unwrap();
        assert!(matches!(l3_equal_a(-1e-7, &p0, &u, &c), Err(Error::Singular(_))));
    }

    #[test]
    fn log_periodic_step() {
        let (p, u, c) = setup();
        let a = -3000.0 * c.a0;
        let l1 = l3_equal_a(a, &p, &u, &c).unwrap().m6_per_s();
        let l2 = l3_equal_a(a * u.length_ratio(), &p, &u, &c).unwrap().m6_per_s();
        assert!(rel(l2 / l1, (4.0 * PI / u.s0).exp()) < 1e-10);
    }

    #[test]
    fn unitarity_limits() {
        let c = PhysicalConstants::default();
        let l30 = l3_max(30e-9, &c).unwrap().cm6_per_s();
        let l180 = l3_max(180e-9, &c).unwrap().cm6_per_s();
        assert!(rel(l30, 7.825_328_286_750_885e-18) < 1e-10);
        assert!(rel(l180, 2.173_702_301_875_246e-19) < 1e-10);
        assert!(rel(l30, 8e-18) < 0.15 && rel(l180, 2e-19) < 0.15);
        let l60 = l3_max(60e-9, &c).unwrap().cm6_per_s();
        assert!(rel(l60, l30 / 4.0) < 1e-14);
        assert!(l3_max(0.0, &c).is_err());
        assert!(l3_max(-1e-9, &c).is_err());
    }

    #[test]
    fn unitarized_cases() {
        let a = RateConstant::from_cm6_per_s(2e-20).unwrap();
        assert!(rel(l3_unitarized(a, a).unwrap().m6_per_s(), a.m6_per_s() / 2.0) < 1e-15);
        let small = RateConstant::from_cm6_per_s(1e-22).unwrap();
        let big = RateConstant::from_cm6_per_s(1e-18).unwrap();
        let r = l3_unitarized(small, big).unwrap().cm6_per_s();
        assert!(rel(r, 1.0 / (1e22 + 1e18)) < 1e-12);
        assert!(rel(r, 9.999e-23) < 1e-4);
        assert!(l3_unitarized(RateConstant::zero(), big).is_err());
        let c = PhysicalConstants::default();
        let sat = default_saturation(30e-9, &c).unwrap();
        assert!(rel(sat.m6_per_s() * 3.0, l3_max(30e-9, &c).unwrap().m6_per_s()) < 1e-15);
    }

    #[test]
    fn threshold_temperatures() {
        let c = PhysicalConstants::default();
        let t1 = threshold_temperature(12_250.0 * c.a0, &c).unwrap();
        let t2 = threshold_temperature(-5_000.0 * c.a0, &c).unwrap();
        assert!(rel(t1, 3.032_201_701_615_185e-8) < 1e-10);
        assert!(rel(t2, 1.820_079_071_394_514_6e-7) < 1e-10);
        let t3 = threshold_temperature(24_500.0 * c.a0, &c).unwrap();
        assert!(rel(t3, t1 / 4.0) < 1e-14);
        assert!(threshold_temperature(0.0, &c).is_err());
    }

    #[test]
    fn effective_a_cases() {
        let tr = ScatteringTriple::new(895.0, -8584.0, -5702.0, -2893.0).unwrap();
        // cube root of 8584·5702·2893, 40 digits
        assert!(rel(effective_a(&tr).unwrap(), -5_212.208_560_658_954) < 1e-12);
        let eq = ScatteringTriple::new(900.0, -3000.0, -3000.0, -3000.0).unwrap();
        assert!(rel(effective_a(&eq).unwrap(), -3000.0) < 1e-15);
        let perm = ScatteringTriple::new(895.0, -2893.0, -8584.0, -5702.0).unwrap();
        assert!(rel(effective_a(&perm).unwrap(), effective_a(&tr).unwrap()) < 1e-15);
        let pos = ScatteringTriple::new(600.0, -3000.0, 100.0, -3000.0).unwrap();
        assert!(effective_a(&pos).is_err());
    }

    #[test]
    fn model_curve_at_895() {
        let (p, u, c) = setup();
        let table = ScatteringTable::sample();
        let t = 30e-9;
        let curve = l3_model_curve(&table, &p, &u, t, &[895.0], None, &c).unwrap();
        let sat = default_saturation(t, &c).unwrap();
        assert!(curve[0].zero_t.m6_per_s() > 0.0);
        assert!(curve[0].unitarized <= sat);
        assert!(curve[0].unitarized <= curve[0].zero_t);
    }

    #[test]
    fn model_curve_zero_eta() {
        let (p, u, c) = setup();
        let p0 = EfimovParams::new(p.kappa_star, 0.0).unwrap();
        let grid: Vec<f64> = (0..10).map(|i| 1000.0 + 50.0 * i as f64).collect();
        let curve = l3_model_curve(&ScatteringTable::sample(), &p0, &u, 180e-9, &grid, None, &c).unwrap();
        assert!(curve.iter().all(|pt| pt.zero_t.m6_per_s() == 0.0 && pt.unitarized.m6_per_s() == 0.0));
    }

    #[test]
    fn model_curve_hits_peak_where_effective_a_is_a1() {
        let (p, u, c) = setup();
        let a1 = resonance_scattering_length(&p, &u, 1).unwrap() / c.a0;
        let table = ScatteringTable::new(vec![
            ScatteringTriple::new(900.0, a1, a1, a1).unwrap(),
            ScatteringTriple::new(1000.0, -3000.0, -3000.0, -3000.0).unwrap(),
        ])
        .unwrap();
        let curve = l3_model_curve(&table, &p, &u, 30e-9, &[900.0], None, &c).unwrap();
        assert!(rel(curve[0].zero_t.cm6_per_s(), 2.910_776_553_377_316e-17) < 1e-6);
    }

    #[test]
    fn model_curve_error_names_field() {
        let (p, u, c) = setup();
        let err = l3_model_curve(&ScatteringTable::sample(), &p, &u, 30e-9, &[2000.0], None, &c)
            .unwrap_err();
        assert!(err.to_string().contains("B = 2000 G"));
    }

    #[test]
    fn scan_finds_895_resonance() {
        let (p, u, c) = setup();
        let hits = scan_resonance_fields(&ScatteringTable::sample(), &p, &u, &c);
        assert_eq!(hits.len(), 1, "{hits:?}");
        assert_eq!(hits[0].branch, 1);
        assert!((hits[0].field_gauss - 895.0).abs() < 10.0);
    }

    #[test]
    fn scan_shifted_kappa() {
        let (p, u, c) = setup();
        let line = |a_lo: f64, a_hi: f64| {
            ScatteringTable::new(vec![
                ScatteringTriple::new(100.0, a_lo, a_lo, a_lo).unwrap(),
                ScatteringTriple::new(200.0, a_hi, a_hi, a_hi).unwrap(),
            ])
            .unwrap()
        };
        let a_at = |t: &ScatteringTable, b: f64| effective_a(&t.at(b).unwrap()).unwrap().abs();

        let near = line(-6000.0, -4000.0);
        let hits = scan_resonance_fields(&near, &p, &u, &c);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].branch, 1);
        let hits_near_field = hits[0].field_gauss;
        let a_orig = a_at(&near, hits_near_field);
        assert!(rel(a_orig, 4951.85) < 1e-3);

        let scaled = EfimovParams::new(p.kappa_star / u.length_ratio(), p.eta_star).unwrap();
        let far = line(-1.2e5, -1.0e5);
        let hits = scan_resonance_fields(&far, &scaled, &u, &c);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].branch, 1);
        let a_scaled = a_at(&far, hits[0].field_gauss);
        // bisection to 0.01 G on a 2e4 a0 / 100 G slope: 2 a0 resolution
        assert!((a_scaled / a_orig - u.length_ratio()).abs() < 1e-3);

        // same field, one branch lower
        let relabeled = scan_resonance_fields(&near, &scaled, &u, &c);
        assert_eq!(relabeled.len(), 1);
        assert_eq!(relabeled[0].branch, 0);
        assert!((relabeled[0].field_gauss - hits_near_field).abs() < 0.05);
    }

    #[test]
    fn scan_empty_below_ground_crossing() {
        let (p, u, c) = setup();
        let table = ScatteringTable::new(vec![
            ScatteringTriple::new(500.0, -150.0, -150.0, -150.0).unwrap(),
            ScatteringTriple::new(600.0, -100.0, -100.0, -100.0).unwrap(),
        ])
        .unwrap();
        assert!(scan_resonance_fields(&table, &p, &u, &c).is_empty());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn equal_a_log_periodic(a_a0 in 100.0f64..1e5, k in 1e-4f64..5e-2, eta in 1e-3f64..1.0) {
                let c = PhysicalConstants::default();
                let u = UniversalConstants::default();
                let p = EfimovParams::from_inv_a0(k, eta, &c).unwrap();
                let a = -a_a0 * c.a0;
                let l1 = l3_equal_a(a, &p, &u, &c).unwrap().m6_per_s();
                let l2 = l3_equal_a(a * u.length_ratio(), &p, &u, &c).unwrap().m6_per_s();
                prop_assert!(((l2 / l1) / (4.0 * PI / u.s0).exp() - 1.0).abs() < 1e-10);
                prop_assert!(l1 <= l3_equal_a_peak(a, &p, &u, &c) * (1.0 + 1e-12));
            }

            #[test]
            fn unitarized_symmetric_and_below(x in 1e-30f64..1e-20, y in 1e-30f64..1e-20) {
                let (a, b) = (RateConstant::new(x).unwrap(), RateConstant::new(y).unwrap());
                let ab = l3_unitarized(a, b).unwrap();
                let ba = l3_unitarized(b, a).unwrap();
                prop_assert!((ab.m6_per_s() - ba.m6_per_s()).abs() <= 1e-15 * ab.m6_per_s());
                prop_assert!(ab <= a && ab <= b);
            }

            #[test]
            fn power_law_slopes(x in 1e-9f64..1e-6, f in 1.5f64..10.0) {
                let c = PhysicalConstants::default();
                let slope_t = (l3_max(x * f, &c).unwrap().m6_per_s() / l3_max(x, &c).unwrap().m6_per_s()).ln() / f.ln();
                prop_assert!((slope_t + 2.0).abs() < 1e-9);
                let a = x * 1e-2;
                let slope_a = (threshold_temperature(a * f, &c).unwrap() / threshold_temperature(a, &c).unwrap()).ln() / f.ln();
                prop_assert!((slope_a + 2.0).abs() < 1e-9);
            }
        }
    }
}
