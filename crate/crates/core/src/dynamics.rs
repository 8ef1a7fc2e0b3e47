//! Atom-number evolution under one-body loss and three-body recombination.
//!
//! For a thermal cloud at temperature `T` in a harmonic trap each spin state
//! obeys
//!
//! ```text
//! dN/dt = −Γ·N − β(T)·N³,   β(T) = (L3/√27)·(2π m ν̄²/(k_B T))³
//! ```
//!
//! At constant temperature this has the closed form used by the fitter.
//! [`evolve_numeric`] integrates the same equation and optionally lets the
//! temperature rise through anti-evaporation, `dT/dt = (T/3)·L3⟨n²⟩`: each
//! recombination event removes atoms from the dense, cold centre of the
//! cloud, leaving the survivors with more energy per particle.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::ode::{self, Tolerances};
use crate::recombination::RateConstant;
use crate::trap::{density_squared_per_atom2, TrapConfig};
use crate::units::PhysicalConstants;

/// Relative tolerance of [`evolve_numeric`].
pub const RTOL: f64 = 1e-10;
/// Absolute tolerance on N, atoms.
pub const ATOL_ATOMS: f64 = 1e-6;

pub const SERIES_HEADER: [&str; 4] = ["t_s", "N", "T_K", "sigma_N"];

#[derive(Debug, Clone, PartialEq)]
pub struct DecayModel {
    /// One-body loss rate, s⁻¹.
    pub gamma: f64,
    pub l3: RateConstant,
    pub trap: TrapConfig,
    pub field_gauss: f64,
    pub anti_evaporation: bool,
    pub consts: PhysicalConstants,
}

impl DecayModel {
    pub fn new(
        gamma: f64,
        l3: RateConstant,
        trap: TrapConfig,
        field_gauss: f64,
        anti_evaporation: bool,
        consts: PhysicalConstants,
    ) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::domain(format!("Gamma must be >= 0, got {gamma} 1/s")));
        }
        trap.frequencies(field_gauss)?;
        Ok(Self {
            gamma,
            l3,
            trap,
            field_gauss,
            anti_evaporation,
            consts,
        })
    }

    pub fn mean_frequency(&self) -> Result<f64> {
        self.trap.mean_frequency(self.field_gauss)
    }

    /// Three-body coefficient β(T) in s⁻¹ per atom².
    pub fn beta(&self, temperature: f64) -> Result<f64> {
        Ok(self.l3.m6_per_s()
            * density_squared_per_atom2(temperature, self.mean_frequency()?, &self.consts)?)
    }
}

/// Closed-form `N(t)` at constant temperature.
///
/// `N0·e^{−Γt}·[1 + (βN0²/Γ)(1 − e^{−2Γt})]^{−1/2}`, with the `Γ → 0`
/// limit `N0·(1 + 2βN0²t)^{−1/2}`.
pub fn number_analytic(m: &DecayModel, n0: f64, temperature: f64, t: f64) -> Result<f64> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::domain(format!("time must be >= 0, got {t} s")));
    }
    if m.anti_evaporation {
        return Err(Error::domain(
            "closed form holds only at constant temperature (anti_evaporation = false)",
        ));
    }
    Ok(closed_form(m.gamma, m.beta(temperature)?, n0, t))
}

/// `N(t)` for given Γ and β. `(1 − e^{−2Γt})/Γ` goes smoothly to `2t`.
pub(crate) fn closed_form(gamma: f64, beta: f64, n0: f64, t: f64) -> f64 {
    let growth = if gamma > 0.0 {
        -(-2.0 * gamma * t).exp_m1() / gamma
    } else {
        2.0 * t
    };
    n0 * (-gamma * t).exp() / (1.0 + beta * n0 * n0 * growth).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecaySample {
    /// s.
    pub t: f64,
    pub atoms: f64,
    /// K.
    pub temperature: f64,
    pub sigma_atoms: Option<f64>,
}

/// Integrates the loss equation on `t_grid` (s, increasing from 0).
pub fn evolve_numeric(m: &DecayModel, n0: f64, t0: f64, t_grid: &[f64]) -> Result<Vec<DecaySample>> {
    if t_grid.is_empty() {
        return Ok(Vec::new());
    }
    if t_grid[0] != 0.0 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("time grid must start at 0 and increase strictly"));
    }
    if !(n0.is_finite() && n0 >= 0.0) {
        return Err(Error::domain(format!("N0 must be >= 0, got {n0}")));
    }
    let nu_bar = m.mean_frequency()?;
    density_squared_per_atom2(t0, nu_bar, &m.consts)?;
    let l3 = m.l3.m6_per_s();
    let gamma = m.gamma;
    let consts = m.consts;
    let anti = m.anti_evaporation;

    let rhs = move |_t: f64, y: &[f64; 2]| -> [f64; 2] {
        let (n, temp) = (y[0], y[1]);
        let per = density_squared_per_atom2(temp, nu_bar, &consts).unwrap_or(f64::NAN);
        // L3⟨n²⟩: the per-atom three-body loss rate
        let three_body = l3 * per * n * n;
        let dn = -gamma * n - three_body * n;
        let dt = if anti { temp / 3.0 * three_body } else { 0.0 };
        [dn, dt]
    };
    let tol = Tolerances {
        rtol: RTOL,
        atol: [ATOL_ATOMS, t0 * 1e-14],
        max_steps: 1_000_000,
    };
    let states = ode::integrate(rhs, [n0, t0], t_grid, &tol)?;
    Ok(t_grid
        .iter()
        .zip(states)
        .map(|(&t, y)| DecaySample {
            t,
            atoms: y[0],
            temperature: y[1],
            sigma_atoms: None,
        })
        .collect())
}

/// Measured or synthetic decay curve at one field.
#[derive(Debug, Clone, PartialEq)]
pub struct DecaySeries {
    samples: Vec<DecaySample>,
}

impl DecaySeries {
    pub fn new(samples: Vec<DecaySample>) -> Result<Self> {
        for (i, s) in samples.iter().enumerate() {
            if !(s.t.is_finite() && s.atoms.is_finite() && s.atoms > 0.0) {
                return Err(Error::domain(format!("sample {i}: N must be positive, got {}", s.atoms)));
            }
            if !(s.temperature.is_finite() && s.temperature > 0.0) {
                return Err(Error::domain(format!(
                    "sample {i}: T must be positive, got {}",
                    s.temperature
                )));
            }
            if let Some(sig) = s.sigma_atoms {
                if !(sig.is_finite() && sig > 0.0) {
                    return Err(Error::domain(format!("sample {i}: sigma_N must be positive")));
                }
            }
        }
        if let Some(i) = samples.windows(2).position(|w| w[1].t <= w[0].t) {
            return Err(Error::domain(format!("sample {}: times must increase strictly", i + 1)));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[DecaySample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Reads `t_s,N,T_K,sigma_N` CSV; `sigma_N` may be empty. Rows are
    /// sorted by time before validation.
    pub fn read_csv<R: Read>(source: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(source);
        let header = reader.headers().map_err(|e| Error::Parse {
            line: 1,
            msg: e.to_string(),
        })?;
        if header.iter().collect::<Vec<_>>() != SERIES_HEADER {
            return Err(Error::Parse {
                line: header.position().map_or(1, |p| p.line() as usize),
                msg: format!("expected header {}", SERIES_HEADER.join(",")),
            });
        }
        let mut samples = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Parse {
                line: e.position().map_or(0, |p| p.line() as usize),
                msg: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let num = |i: usize| -> Result<f64> {
                let raw = record.get(i).unwrap_or("");
                raw.parse().map_err(|_| Error::Parse {
                    line,
                    msg: format!("{}: cannot parse {raw:?}", SERIES_HEADER[i]),
                })
            };
            if record.len() != 4 {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected 4 fields, got {}", record.len()),
                });
            }
            let sigma = match record.get(3) {
                Some("") | None => None,
                Some(_) => Some(num(3)?),
            };
            samples.push(DecaySample {
                t: num(0)?,
                atoms: num(1)?,
                temperature: num(2)?,
                sigma_atoms: sigma,
            });
        }
        samples.sort_by(|a, b| a.t.total_cmp(&b.t));
        Self::new(samples)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", SERIES_HEADER.join(","))?;
        for s in &self.samples {
            let sigma = s.sigma_atoms.map(|v| format!("{v:e}")).unwrap_or_default();
            writeln!(out, "{:e},{:e},{:e},{}", s.t, s.atoms, s.temperature, sigma)?;
        }
        Ok(())
    }
}

/// Samples the forward model on `t_grid` with multiplicative Gaussian
/// number noise of fractional width `noise`.
///
/// Constant-temperature models use the closed form; anti-evaporation uses
/// the integrator. Draws with `1 + noise·z ≤ 0` are rejected and redrawn so
/// every sample stays positive. `sigma_N` is recorded only when `noise > 0`.
pub fn synthesize(
    m: &DecayModel,
    n0: f64,
    t0: f64,
    t_grid: &[f64],
    noise: f64,
    seed: u64,
) -> Result<DecaySeries> {
    if !(noise.is_finite() && noise >= 0.0) {
        return Err(Error::domain(format!("noise must be >= 0, got {noise}")));
    }
    let clean: Vec<DecaySample> = if m.anti_evaporation {
        evolve_numeric(m, n0, t0, t_grid)?
    } else {
        t_grid
            .iter()
            .map(|&t| {
                Ok(DecaySample {
                    t,
                    atoms: number_analytic(m, n0, t0, t)?,
                    temperature: t0,
                    sigma_atoms: None,
                })
            })
            .collect::<Result<_>>()?
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = clean
        .into_iter()
        .map(|s| {
            if noise == 0.0 {
                return s;
            }
            let factor = loop {
                let z: f64 = StandardNormal.sample(&mut rng);
                let f = 1.0 + noise * z;
                if f > 0.0 {
                    break f;
                }
            };
            DecaySample {
                atoms: s.atoms * factor,
                sigma_atoms: Some(noise * s.atoms),
                ..s
            }
        })
        .collect();
    DecaySeries::new(samples)
}

/// `n` evenly spaced times from 0 to `t_max` inclusive.
pub fn uniform_grid(t_max: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 || !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::domain(format!(
            "grid needs t_max > 0 and at least 2 points, got t_max = {t_max}, n = {n}"
        )));
    }
    Ok((0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect())
}
