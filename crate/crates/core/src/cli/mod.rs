//! Command-line front end.
//!
//! Every numeric flag carries its unit in its name. Results are CSV on
//! stdout (or `-o FILE`), preceded by `# key = value` lines recording the
//! resolved inputs. Exit codes: 0 success, 2 usage, 3 invalid data or
//! configuration, 4 numerical failure.

mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::RunConfig;

use crate::dynamics::{synthesize, uniform_grid, DecayModel, DecaySeries};
use crate::efimov::{spectrum, EfimovParams, UniversalConstants};
use crate::error::Error;
use crate::fitting::{fit_decay, fit_efimov, read_l3_points, DecayFitOptions, EfimovFitOptions};
use crate::recombination::{l3_model_curve, scan_resonance_fields, RateConstant};
use crate::scattering::{load_table, ScatteringTable};
use crate::trap::{fermi_temperature, TrapConfig};
use crate::units::PhysicalConstants;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

const DEFAULT_GAMMA_PER_S: f64 = 1.0 / 2.8;

#[derive(Debug, Parser)]
#[command(name = "efimov", version, about = "Efimov spectrum, three-body loss and decay fits for three-state ⁶Li")]
struct Cli {
    /// Flat TOML file with default values for any flag (keys use `_` for `-`)
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Write the result here instead of stdout
    #[arg(short = 'o', long, global = true, value_name = "FILE")]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Trimer energies, threshold scattering lengths and widths at unitarity
    #[command(allow_negative_numbers = true)]
    Spectrum {
        #[command(flatten)]
        efimov: EfimovArgs,
        /// Highest trimer index listed
        #[arg(long = "n-max")]
        n_max: Option<u32>,
    },
    /// Zero-temperature and unitarized L3 across a field range
    #[command(allow_negative_numbers = true)]
    L3Curve {
        #[command(flatten)]
        efimov: EfimovArgs,
        #[command(flatten)]
        temp: TempArgs,
        #[command(flatten)]
        table: TableArgs,
        /// Start of the field grid, G [default: first table row]
        #[arg(long = "B-min-G")]
        b_min: Option<f64>,
        /// End of the field grid, G [default: last table row]
        #[arg(long = "B-max-G")]
        b_max: Option<f64>,
        /// Field step, G [default: 5]
        #[arg(long = "B-step-G")]
        b_step: Option<f64>,
        /// Saturation rate, cm^6/s [default: one third of the unitarity limit]
        #[arg(long = "L3sat-cm6-per-s")]
        l3_sat: Option<f64>,
    },
    /// Fields where a trimer crosses the three-atom threshold
    #[command(allow_negative_numbers = true)]
    ScanResonances {
        #[command(flatten)]
        efimov: EfimovArgs,
        #[command(flatten)]
        table: TableArgs,
    },
    /// Synthetic atom-number decay curve
    #[command(allow_negative_numbers = true)]
    Simulate {
        #[command(flatten)]
        trap: TrapArgs,
        /// One-body loss rate, 1/s [default: 1/2.8]
        #[arg(long = "Gamma-per-s")]
        gamma: Option<f64>,
        /// Three-body rate constant, cm^6/s
        #[arg(long = "L3-cm6-per-s")]
        l3: Option<f64>,
        /// Initial atoms per spin state [default: 60000]
        #[arg(long = "N0")]
        n0: Option<f64>,
        /// Initial temperature, nK [default: 30]
        #[arg(long = "T0-nK")]
        t0_nk: Option<f64>,
        /// Duration, s [default: 10]
        #[arg(long = "t-max-s")]
        t_max: Option<f64>,
        /// Number of samples including t = 0 [default: 50]
        #[arg(long = "n-points")]
        n_points: Option<usize>,
        /// Fractional Gaussian noise on N [default: 0]
        #[arg(long = "noise-frac")]
        noise: Option<f64>,
        /// RNG seed [default: 0]
        #[arg(long)]
        seed: Option<u64>,
        /// Let the cloud heat as recombination removes the densest atoms
        #[arg(long = "anti-evaporation")]
        anti_evaporation: bool,
    },
    /// Fit L3, N0 and T to a decay curve (t_s,N,T_K,sigma_N)
    #[command(allow_negative_numbers = true)]
    FitDecay {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        trap: TrapArgs,
        /// One-body loss rate held fixed, 1/s [default: 1/2.8]
        #[arg(long = "Gamma-per-s")]
        gamma: Option<f64>,
    },
    /// Fit κ* and η* to L3 measured across fields (B_gauss,L3_cm6_per_s,sigma_L3)
    #[command(allow_negative_numbers = true)]
    FitEfimov {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        table: TableArgs,
        #[command(flatten)]
        temp: TempArgs,
        /// Compare against the unitarized rate (needs a temperature)
        #[arg(long)]
        unitarized: bool,
        /// van der Waals length fixing the κ* search window, a0 [default: 62.5]
        #[arg(long = "lvdw-a0")]
        lvdw: Option<f64>,
    },
    /// Fermi temperature and degeneracy of a trapped cloud
    #[command(allow_negative_numbers = true)]
    Degeneracy {
        #[command(flatten)]
        trap: TrapArgs,
        #[command(flatten)]
        temp: TempArgs,
        /// Atoms per spin state
        #[arg(long = "N")]
        atoms: Option<f64>,
    },
}

#[derive(Debug, Args)]
struct EfimovArgs {
    /// Three-body parameter κ*, 1/a0
    #[arg(long = "kappa-star-inv-a0", alias = "kappa-star")]
    kappa: Option<f64>,
    /// Inelasticity parameter η* (dimensionless)
    #[arg(long = "eta-star")]
    eta: Option<f64>,
}

#[derive(Debug, Args)]
struct TempArgs {
    /// Temperature, nK
    #[arg(long = "T-nK", conflicts_with = "t_k")]
    t_nk: Option<f64>,
    /// Temperature, K
    #[arg(long = "T-K", alias = "T")]
    t_k: Option<f64>,
}

#[derive(Debug, Args)]
struct TableArgs {
    /// Scattering-length table (B_gauss,a12_a0,a23_a0,a13_a0) [default: built-in sample]
    #[arg(long, value_name = "FILE")]
    table: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Input CSV file
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TrapChoice {
    A,
    B,
    Custom,
}

#[derive(Debug, Args)]
struct TrapArgs {
    /// Trap geometry [default: A]
    #[arg(long, value_enum, ignore_case = true)]
    trap: Option<TrapChoice>,
    /// Bias field, G
    #[arg(long = "B-G", alias = "B")]
    field: Option<f64>,
    /// Custom trap x frequency, Hz
    #[arg(long = "nu-x-Hz")]
    nu_x: Option<f64>,
    /// Custom trap y frequency, Hz
    #[arg(long = "nu-y-Hz")]
    nu_y: Option<f64>,
    /// Custom trap z frequency, Hz
    #[arg(long = "nu-z-Hz")]
    nu_z: Option<f64>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Lib(Error::Io(e))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Formatting of resolved inputs in the output header.
trait HeaderValue {
    fn render(&self) -> String;
}

impl HeaderValue for f64 {
    fn render(&self) -> String {
        let a = self.abs();
        if a == 0.0 || (1e-3..1e6).contains(&a) {
            self.to_string()
        } else {
            format!("{self:e}")
        }
    }
}

macro_rules! display_header_value {
    ($($t:ty),*) => {$(
        impl HeaderValue for $t {
            fn render(&self) -> String {
                self.to_string()
            }
        }
    )*};
}
display_header_value!(u32, u64, usize, bool, &str, String, std::path::Display<'_>);

/// Resolves values from flag, then config, then default, and records each
/// resolved value for the output header.
struct Resolver {
    cfg: RunConfig,
    header: Vec<(&'static str, String)>,
}

impl Resolver {
    fn note(&mut self, key: &'static str, value: impl HeaderValue) {
        self.header.push((key, value.render()));
    }

    fn get<T: HeaderValue + Copy>(&mut self, key: &'static str, flag: Option<T>, cfg: Option<T>, default: Option<T>) -> CliResult<T> {
        let v = flag.or(cfg).or(default).ok_or_else(|| {
            CliError::Usage(format!("missing --{} (or `{key}` in the config file)", key.replace('_', "-")))
        })?;
        self.note(key, v);
        Ok(v)
    }

    fn opt<T: HeaderValue + Copy>(&mut self, key: &'static str, flag: Option<T>, cfg: Option<T>) -> Option<T> {
        let v = flag.or(cfg);
        if let Some(v) = v {
            self.note(key, v);
        }
        v
    }

    fn flag(&mut self, key: &'static str, flag: bool, cfg: Option<bool>) -> bool {
        let v = flag || cfg.unwrap_or(false);
        self.note(key, v);
        v
    }

    fn efimov(&mut self, a: &EfimovArgs, consts: &PhysicalConstants) -> CliResult<EfimovParams> {
        let k = self.get("kappa_star_inv_a0", a.kappa, self.cfg.kappa_star_inv_a0, None)?;
        let eta = self.get("eta_star", a.eta, self.cfg.eta_star, None)?;
        Ok(EfimovParams::from_inv_a0(k, eta, consts)?)
    }

    /// Temperature in K.
    fn temperature(&mut self, a: &TempArgs) -> CliResult<Option<f64>> {
        let from_nk = |v: Option<f64>| v.map(|x| x / 1e9);
        let t = match (a.t_k, a.t_nk) {
            (Some(k), _) => Some(k),
            (None, Some(nk)) => from_nk(Some(nk)),
            (None, None) => self.cfg.T_K.or(from_nk(self.cfg.T_nK)),
        };
        if let Some(t) = t {
            self.note("T_K", t);
        }
        Ok(t)
    }

    fn table(&mut self, a: &TableArgs) -> CliResult<ScatteringTable> {
        match a.table.clone().or(self.cfg.table.clone()) {
            Some(path) => {
                self.note("table", path.display());
                Ok(load_table(open(&path)?)?)
            }
            None => {
                self.note("table", "built-in sample");
                Ok(ScatteringTable::sample())
            }
        }
    }

    fn input(&mut self, a: &InputArgs) -> CliResult<File> {
        let path = a
            .input
            .clone()
            .or(self.cfg.input.clone())
            .ok_or_else(|| CliError::Usage("missing --input (or `input` in the config file)".into()))?;
        self.note("input", path.display());
        open(&path)
    }

    fn trap(&mut self, a: &TrapArgs, default: TrapChoice) -> CliResult<(TrapConfig, f64)> {
        let choice = match (a.trap, self.cfg.trap.as_deref()) {
            (Some(c), _) => c,
            (None, Some(s)) => TrapChoice::from_str(s, true)
                .map_err(|_| CliError::Lib(Error::Config(format!("unknown trap {s:?}, expected A, B or custom"))))?,
            (None, None) => default,
        };
        self.note("trap", format!("{choice:?}"));
        let cfg = match choice {
            TrapChoice::A => TrapConfig::trap_a(),
            TrapChoice::B => TrapConfig::trap_b(),
            TrapChoice::Custom => {
                let x = self.get("nu_x_Hz", a.nu_x, self.cfg.nu_x_Hz, None)?;
                let y = self.get("nu_y_Hz", a.nu_y, self.cfg.nu_y_Hz, None)?;
                let z = self.get("nu_z_Hz", a.nu_z, self.cfg.nu_z_Hz, None)?;
                TrapConfig::custom(x, y, z)?
            }
        };
        let field = self.get("B_G", a.field, self.cfg.B_G, None)?;
        Ok((cfg, field))
    }

    fn header_text(&self, command: &str) -> String {
        let mut s = format!("# command = {command}\n");
        for (k, v) in &self.header {
            let _ = writeln!(s, "# {k} = {v}");
        }
        s
    }
}

fn open(path: &Path) -> CliResult<File> {
    File::open(path).map_err(|e| CliError::Lib(Error::Config(format!("{}: {e}", path.display()))))
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> crate::error::Result<()>) -> CliResult<String> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(String::from_utf8(buf).expect("CSV writers emit UTF-8"))
}

fn execute(cli: Cli) -> CliResult<String> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let consts = cfg.constants()?;
    let u = UniversalConstants::default();
    let mut r = Resolver { cfg, header: Vec::new() };

    let (name, body) = match &cli.command {
        Command::Spectrum { efimov, n_max } => {
            let p = r.efimov(efimov, &consts)?;
            let n_max = r.get("n_max", *n_max, r.cfg.n_max, Some(2))?;
            let mut s = String::from("n,E_over_h_Hz,a_n_minus_a0,gamma_rad_per_s,lifetime_s\n");
            for lvl in spectrum(&p, &u, n_max, &consts)? {
                let _ = writeln!(
                    s,
                    "{},{:e},{:e},{:e},{:e}",
                    lvl.n,
                    lvl.binding_energy / consts.h(),
                    lvl.a_minus / consts.a0,
                    lvl.width.gamma,
                    lvl.width.lifetime
                );
            }
            ("spectrum", s)
        }
        Command::L3Curve {
            efimov,
            temp,
            table,
            b_min,
            b_max,
            b_step,
            l3_sat,
        } => {
            let p = r.efimov(efimov, &consts)?;
            let t = r.temperature(temp)?;
            let table = r.table(table)?;
            let (lo, hi) = table.field_range();
            let b_min = r.get("B_min_G", *b_min, r.cfg.B_min_G, Some(lo))?;
            let b_max = r.get("B_max_G", *b_max, r.cfg.B_max_G, Some(hi))?;
            let step = r.get("B_step_G", *b_step, r.cfg.B_step_G, Some(5.0))?;
            let sat = r.opt("L3sat_cm6_per_s", *l3_sat, r.cfg.L3sat_cm6_per_s);
            let sat = sat.map(RateConstant::from_cm6_per_s).transpose()?;
            let t = match (t, sat) {
                (Some(t), _) => t,
                (None, Some(_)) => f64::NAN,
                (None, None) => return Err(CliError::Usage("missing --T-nK or --T-K (needed for the saturation rate)".into())),
            };
            let grid = field_grid(b_min, b_max, step)?;
            let mut s = String::from("B_gauss,L3_zeroT_cm6_per_s,L3_unitarized_cm6_per_s\n");
            for pt in l3_model_curve(&table, &p, &u, t, &grid, sat, &consts)? {
                let _ = writeln!(s, "{},{:e},{:e}", pt.field_gauss, pt.zero_t.cm6_per_s(), pt.unitarized.cm6_per_s());
            }
            ("l3-curve", s)
        }
        Command::ScanResonances { efimov, table } => {
            let p = r.efimov(efimov, &consts)?;
            let table = r.table(table)?;
            let mut s = String::from("B_gauss,n_branch\n");
            for c in scan_resonance_fields(&table, &p, &u, &consts) {
                let _ = writeln!(s, "{:.2},{}", c.field_gauss, c.branch);
            }
            ("scan-resonances", s)
        }
        Command::Simulate {
            trap,
            gamma,
            l3,
            n0,
            t0_nk,
            t_max,
            n_points,
            noise,
            seed,
            anti_evaporation,
        } => {
            let (trap, field) = r.trap(trap, TrapChoice::A)?;
            let gamma = r.get("Gamma_per_s", *gamma, r.cfg.Gamma_per_s, Some(DEFAULT_GAMMA_PER_S))?;
            let l3 = r.get("L3_cm6_per_s", *l3, r.cfg.L3_cm6_per_s, None)?;
            let n0 = r.get("N0", *n0, r.cfg.N0, Some(6e4))?;
            let t0 = r.get("T0_nK", *t0_nk, r.cfg.T0_nK, Some(30.0))? / 1e9;
            let t_max = r.get("t_max_s", *t_max, r.cfg.t_max_s, Some(10.0))?;
            let n_points = r.get("n_points", *n_points, r.cfg.n_points, Some(50))?;
            let noise = r.get("noise_frac", *noise, r.cfg.noise_frac, Some(0.0))?;
            let seed = r.get("seed", *seed, r.cfg.seed, Some(0))?;
            let anti = r.flag("anti_evaporation", *anti_evaporation, r.cfg.anti_evaporation);
            let model = DecayModel::new(gamma, RateConstant::from_cm6_per_s(l3)?, trap, field, anti, consts)?;
            let grid = uniform_grid(t_max, n_points)?;
            let series = synthesize(&model, n0, t0, &grid, noise, seed)?;
            ("simulate", csv_bytes(|b| series.write_csv(b))?)
        }
        Command::FitDecay { input, trap, gamma } => {
            let file = r.input(input)?;
            let (trap, field) = r.trap(trap, TrapChoice::A)?;
            let gamma = r.get("Gamma_per_s", *gamma, r.cfg.Gamma_per_s, Some(DEFAULT_GAMMA_PER_S))?;
            let series = DecaySeries::read_csv(file)?;
            let fit = fit_decay(&series, &trap, field, gamma, &consts, &DecayFitOptions::default())?;
            ("fit-decay", csv_bytes(|b| fit.write_csv(b))?)
        }
        Command::FitEfimov {
            input,
            table,
            temp,
            unitarized,
            lvdw,
        } => {
            let file = r.input(input)?;
            let table = r.table(table)?;
            let unitarized = r.flag("unitarized", *unitarized, r.cfg.unitarized);
            let t = r.temperature(temp)?;
            let lvdw = r.get("lvdw_a0", *lvdw, r.cfg.lvdw_a0, Some(62.5))?;
            let t = match (t, unitarized) {
                (Some(t), _) => t,
                (None, false) => f64::NAN,
                (None, true) => return Err(CliError::Usage("--unitarized needs --T-nK or --T-K".into())),
            };
            let points = read_l3_points(file)?;
            let opts = EfimovFitOptions {
                unitarized,
                lvdw: lvdw * consts.a0,
                ..Default::default()
            };
            let fit = fit_efimov(&points, &table, t, &u, &consts, &opts)?;
            ("fit-efimov", csv_bytes(|b| fit.write_csv(b))?)
        }
        Command::Degeneracy { trap, temp, atoms } => {
            let (trap, field) = r.trap(trap, TrapChoice::B)?;
            let t = r
                .temperature(temp)?
                .ok_or_else(|| CliError::Usage("missing --T-K or --T-nK".into()))?;
            let n = r.get("N", *atoms, r.cfg.N, None)?;
            let nu_bar = trap.mean_frequency(field)?;
            let tf = fermi_temperature(n, nu_bar, &consts)?;
            let s = format!("N,nu_bar_Hz,T_F_K,T_over_T_F\n{n},{nu_bar:e},{tf:e},{:e}\n", t / tf);
            ("degeneracy", s)
        }
    };
    Ok(r.header_text(name) + &body)
}

fn field_grid(b_min: f64, b_max: f64, step: f64) -> CliResult<Vec<f64>> {
    if !(step.is_finite() && step > 0.0) || !(b_min.is_finite() && b_max.is_finite()) || b_max < b_min {
        return Err(CliError::Lib(Error::Domain(format!(
            "field grid needs B_min <= B_max and a positive step, got {b_min}..{b_max} G step {step} G"
        ))));
    }
    let n = ((b_max - b_min) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| b_min + step * i as f64).collect())
}

/// Runs the CLI on `args` (including the program name), writing results to
/// stdout and errors to stderr. Returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let rendered = e.to_string();
            let line = rendered.lines().find(|l| !l.trim().is_empty()).unwrap_or("usage error");
            eprintln!("efimov: {}", line.trim_start_matches("error: "));
            return EXIT_USAGE;
        }
    };
    let output = cli.output.clone();
    match execute(cli) {
        Ok(text) => {
            let written = match output {
                Some(path) => std::fs::write(&path, text.as_bytes())
                    .map_err(|e| format!("{}: {e}", path.display())),
                None => std::io::stdout().lock().write_all(text.as_bytes()).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => 0,
                Err(msg) => {
                    eprintln!("efimov: io error: {msg}");
                    EXIT_DATA
                }
            }
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("efimov: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Lib(e)) => {
            eprintln!("efimov: {}", e.to_string().replace('\n', " "));
            exit_code(&e)
        }
    }
}

/// Exit code for a library error: numerical failures 4, everything else 3.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_DATA
    }
}

pub fn run() -> i32 {
    run_from(std::env::args_os())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn grid_includes_end() {
        let g = field_grid(840.0, 860.0, 5.0).unwrap();
        assert_eq!(g, vec![840.0, 845.0, 850.0, 855.0, 860.0]);
        assert!(field_grid(860.0, 840.0, 5.0).is_err());
        assert!(field_grid(840.0, 860.0, 0.0).is_err());
    }

    #[test]
    fn library_error_codes() {
        assert_eq!(exit_code(&Error::Singular("x".into())), EXIT_NUMERICAL);
        let nested = Error::Integration { t: 1.0, msg: "x".into() }.at_field(900.0);
        assert_eq!(exit_code(&nested), EXIT_NUMERICAL);
        assert_eq!(exit_code(&Error::Domain("x".into()).at_field(900.0)), EXIT_DATA);
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_DATA);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run_from(["efimov", "spectrum", "--bogus"]), EXIT_USAGE);
        assert_eq!(run_from(["efimov", "spectrum", "--eta-star", "0.016"]), EXIT_USAGE);
        assert_eq!(
            run_from(["efimov", "spectrum", "--kappa-star", "-1", "--eta-star", "0.016"]),
            EXIT_DATA
        );
    }
}
