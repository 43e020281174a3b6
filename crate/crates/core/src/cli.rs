//! Command-line front end: `verify`, `evolve`, `scan` and `coeffs`.
//!
//! A run is configured by an optional TOML file with the sections
//! `[model]`, `[verify]`, `[evolve]`, `[scan]` and `[coeffs]`; unknown keys
//! are rejected. Flags override the file. Every artifact starts with the
//! fully resolved configuration.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::coefficients::extract_coefficients;
use crate::decoupling::{build_v, conjugate_frame, TransformParams};
use crate::dynamics::{format_float, parity_experiment_on, ParityDetector};
use crate::hilbert::make_space;
use crate::models::{build_quadratic_hamiltonian, ModelParams, ModelSection};
use crate::verify::{decoupling_residual, run_suites, Suite, SuiteConfig};
use crate::{par, Error, C64};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exit status for a run whose anchored checks all passed.
pub const EXIT_OK: i32 = 0;
/// Exit status when an anchored check failed.
pub const EXIT_CHECK_FAILED: i32 = 1;
/// Exit status for usage, configuration and runtime errors.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "cqed",
    version,
    about = "Exact bimodal two-photon cavity simulator and verifier"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run verification suites and emit a JSON-lines report.
    Verify(CommonArgs),
    /// Evolve |n0, 0, −⟩ and write the trajectory as CSV.
    Evolve(CommonArgs),
    /// Sweep one parameter and tabulate a scalar observable.
    Scan(CommonArgs),
    /// Print the coefficient table of V†HV for the configured mode map.
    Coeffs(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for random draws.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Photon-number cutoff.
    #[arg(long, allow_hyphen_values = true)]
    pub n_max: Option<i64>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("io: {0}")]
    Io(#[from] io::Error),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Absent: the documented parity defaults.
    pub model: Option<ModelSection>,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub evolve: EvolveSection,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub coeffs: CoeffsSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub suites: Vec<Suite>,
    pub seed: u64,
    pub map_draws: usize,
    pub v_draws: usize,
    pub v_n_max: usize,
    pub coefficient_draws: usize,
    pub n_max: usize,
    pub frame_times: usize,
    pub reduced_max_n2: usize,
    pub parity_n0: Vec<usize>,
    pub parity_t_max: f64,
    pub parity_n_steps: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        let c = SuiteConfig::default();
        VerifySection {
            suites: Suite::ALL.to_vec(),
            seed: c.seed,
            map_draws: c.map_draws,
            v_draws: c.v_draws,
            v_n_max: c.v_n_max,
            coefficient_draws: c.coefficient_draws,
            n_max: c.n_max,
            frame_times: c.frame_times,
            reduced_max_n2: c.reduced_max_n2,
            parity_n0: c.parity_n0,
            parity_t_max: c.parity_t_max,
            parity_n_steps: c.parity_n_steps,
        }
    }
}

impl VerifySection {
    fn suite_config(&self) -> SuiteConfig {
        SuiteConfig {
            seed: self.seed,
            map_draws: self.map_draws,
            v_draws: self.v_draws,
            v_n_max: self.v_n_max,
            coefficient_draws: self.coefficient_draws,
            n_max: self.n_max,
            frame_times: self.frame_times,
            reduced_max_n2: self.reduced_max_n2,
            parity_n0: self.parity_n0.clone(),
            parity_t_max: self.parity_t_max,
            parity_n_steps: self.parity_n_steps,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveSection {
    pub n0: usize,
    pub t_max: f64,
    pub n_steps: usize,
    /// Defaults to n0, the smallest exact truncation.
    pub n_max: Option<usize>,
}

impl Default for EvolveSection {
    fn default() -> Self {
        EvolveSection {
            n0: 4,
            t_max: 100.0,
            n_steps: 1000,
            n_max: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanAxis {
    /// Initial Fock population of mode 1.
    N0,
    /// Offset added to λ₂ (real).
    Lambda2Detuning,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extractor {
    Classification,
    PlateauTime,
    EventTime,
    DecouplingResidual,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    pub axis: ScanAxis,
    pub values: Vec<f64>,
    pub extractor: Extractor,
    /// Cutoff for `decoupling_residual`.
    pub n_max: usize,
}

impl Default for ScanSection {
    fn default() -> Self {
        ScanSection {
            axis: ScanAxis::N0,
            values: (1..=8).map(f64::from).collect(),
            extractor: Extractor::Classification,
            n_max: 6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoeffsSection {
    /// Mode-map angle.
    pub theta: f64,
    pub eta: f64,
    pub n_max: usize,
}

impl Default for CoeffsSection {
    fn default() -> Self {
        CoeffsSection {
            theta: std::f64::consts::FRAC_PI_4,
            eta: std::f64::consts::PI,
            n_max: 6,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn model_params(&self) -> ModelParams {
        self.model
            .clone()
            .map_or_else(ModelParams::parity_default, ModelParams::from)
    }

    /// Config with the flag overrides applied and every field made explicit.
    fn resolve(mut self, command: &str, args: &CommonArgs) -> Result<Self, CliError> {
        if self.model.is_none() {
            self.model = Some(ModelParams::parity_default().into());
        }
        if let Some(seed) = args.seed {
            self.verify.seed = seed;
        }
        if let Some(n) = args.n_max {
            let n = make_space(n)?.n_max();
            self.verify.n_max = n;
            self.evolve.n_max = Some(n);
            self.scan.n_max = n;
            self.coeffs.n_max = n;
        }
        self.model_params().validate()?;
        match command {
            "verify" if self.verify.suites.is_empty() => {
                return Err(CliError::Config("no suites selected".into()));
            }
            "evolve" => {
                let e = &self.evolve;
                if e.n0 == 0 {
                    return Err(CliError::Config("evolve.n0 must be at least 1".into()));
                }
                let n_max = *self.evolve.n_max.get_or_insert(e.n0);
                if n_max < self.evolve.n0 {
                    return Err(Error::InsufficientCutoff {
                        n_max,
                        required: self.evolve.n0,
                    }
                    .into());
                }
            }
            "scan" if self.scan.axis == ScanAxis::N0 => {
                if let Some(bad) = self.scan.values.iter().find(|v| v.fract() != 0.0 || **v < 1.0) {
                    return Err(CliError::Config(format!(
                        "scan.values: n0 axis needs positive integers, got {bad}"
                    )));
                }
            }
            _ => {}
        }
        Ok(self)
    }

    /// `# key = value` header lines.
    fn header(&self, command: &str) -> Vec<(String, String)> {
        let mut h = vec![
            ("cqed".to_string(), VERSION.to_string()),
            ("command".to_string(), command.to_string()),
        ];
        let model = self.model.clone().unwrap_or_default();
        h.extend(model.pairs().into_iter().map(|(k, v)| (format!("model.{k}"), v)));
        let section = match command {
            "evolve" => serde_json::to_value(&self.evolve),
            "scan" => serde_json::to_value(json!({ "scan": self.scan, "evolve": self.evolve })),
            _ => serde_json::to_value(&self.coeffs),
        }
        .expect("plain data");
        flatten("", &section, &mut h);
        let d = ParityDetector::default();
        h.push(("detector.band".into(), d.band.to_string()));
        h.push(("detector.event_fraction".into(), d.event_fraction.to_string()));
        h.push(("detector.plateau_fraction".into(), d.plateau_fraction.to_string()));
        h
    }
}

fn flatten(prefix: &str, v: &serde_json::Value, out: &mut Vec<(String, String)>) {
    match v {
        serde_json::Value::Object(map) => {
            for (k, x) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, x, out);
            }
        }
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn load(args: &CommonArgs) -> Result<RunConfig, CliError> {
    match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            RunConfig::parse(&text).map_err(|e| match e {
                CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
                other => other,
            })
        }
        None => Ok(RunConfig::default()),
    }
}

fn sink(args: &CommonArgs) -> Result<Box<dyn Write>, CliError> {
    Ok(match &args.out {
        Some(path) => Box::new(io::BufWriter::new(fs::File::create(path)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn cmd_verify(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    let p = cfg.model_params();
    let header = json!({ "kind": "header", "cqed": VERSION, "command": "verify", "config": cfg });
    writeln!(out, "{header}")?;
    let checks = run_suites(&cfg.verify.suites, &p, &cfg.verify.suite_config());
    for c in &checks {
        writeln!(out, "{}", serde_json::to_string(c).expect("plain data"))?;
    }
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| c.is_anchored_failure())
        .map(|c| c.check_id.as_str())
        .collect();
    eprintln!("{} checks, {} anchored failures", checks.len(), failed.len());
    for id in &failed {
        eprintln!("FAIL {id}");
    }
    Ok(if failed.is_empty() { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn cmd_evolve(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    let p = cfg.model_params();
    let e = &cfg.evolve;
    let space = make_space(e.n_max.unwrap_or(e.n0) as i64)?;
    let (rec, sig) = parity_experiment_on(&space, &p, e.n0, e.t_max, e.n_steps)?;
    rec.write_csv(&mut *out, &cfg.header("evolve"))?;
    eprintln!("signature {}", serde_json::to_string(&sig).expect("plain data"));
    Ok(EXIT_OK)
}

fn scan_point(cfg: &RunConfig, value: f64) -> Result<String, Error> {
    let mut p = cfg.model_params();
    let mut n0 = cfg.evolve.n0;
    match cfg.scan.axis {
        ScanAxis::N0 => n0 = value as usize,
        ScanAxis::Lambda2Detuning => p.lambda2 += C64::from(value),
    }
    let parity = || {
        let space = make_space(cfg.evolve.n_max.unwrap_or(n0).max(n0) as i64)?;
        parity_experiment_on(&space, &p, n0, cfg.evolve.t_max, cfg.evolve.n_steps).map(|(_, s)| s)
    };
    let opt = |x: Option<f64>| x.map_or_else(String::new, format_float);
    Ok(match cfg.scan.extractor {
        Extractor::Classification => parity()?.classification.to_string(),
        Extractor::PlateauTime => format_float(parity()?.plateau_duration),
        Extractor::EventTime => opt(parity()?.event_time),
        Extractor::DecouplingResidual => format_float(decoupling_residual(&make_space(cfg.scan.n_max as i64)?, &p)?),
    })
}

fn cmd_scan(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    let rows = par::map(&cfg.scan.values, |&v| scan_point(cfg, v));
    for (k, v) in cfg.header("scan") {
        writeln!(out, "# {k} = {v}")?;
    }
    let axis = serde_json::to_value(cfg.scan.axis).expect("plain data");
    let extractor = serde_json::to_value(cfg.scan.extractor).expect("plain data");
    writeln!(
        out,
        "{},{}",
        axis.as_str().unwrap_or_default(),
        extractor.as_str().unwrap_or_default()
    )?;
    for (v, row) in cfg.scan.values.iter().zip(rows) {
        let v = match cfg.scan.axis {
            ScanAxis::N0 => (*v as usize).to_string(),
            ScanAxis::Lambda2Detuning => format_float(*v),
        };
        writeln!(out, "{v},{}", row?)?;
    }
    Ok(EXIT_OK)
}

fn cmd_coeffs(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    let p = cfg.model_params();
    let c = &cfg.coeffs;
    let space = make_space(c.n_max as i64)?;
    let tp = TransformParams::for_mode_map(c.theta, c.eta);
    let v = build_v(&space, &tp)?;
    let h = build_quadratic_hamiltonian(&space, &p)?;
    let table = extract_coefficients(&space, &conjugate_frame(&v, &h)?)?;
    let m = tp.mode_map().0;
    let doc = json!({
        "cqed": VERSION,
        "command": "coeffs",
        "config": cfg,
        "transform": tp,
        "mode_map": [
            [[m[(0, 0)].re, m[(0, 0)].im], [m[(0, 1)].re, m[(0, 1)].im]],
            [[m[(1, 0)].re, m[(1, 0)].im], [m[(1, 1)].re, m[(1, 1)].im]],
        ],
        "forbidden_residual": table.forbidden_residual(),
        "reconstruction_residual": table.residual,
        "coefficients": table,
    });
    writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("plain data"))?;
    Ok(EXIT_OK)
}

/// Runs one parsed command and returns its exit status.
pub fn run(cli: Cli) -> Result<i32, CliError> {
    let (name, args) = match &cli.command {
        Command::Verify(a) => ("verify", a),
        Command::Evolve(a) => ("evolve", a),
        Command::Scan(a) => ("scan", a),
        Command::Coeffs(a) => ("coeffs", a),
    };
    let cfg = load(args)?.resolve(name, args)?;
    let mut out = sink(args)?;
    let code = match cli.command {
        Command::Verify(_) => cmd_verify(&cfg, &mut *out)?,
        Command::Evolve(_) => cmd_evolve(&cfg, &mut *out)?,
        Command::Scan(_) => cmd_scan(&cfg, &mut *out)?,
        Command::Coeffs(_) => cmd_coeffs(&cfg, &mut *out)?,
    };
    out.flush()?;
    Ok(code)
}

/// Parses `argv`, runs, and maps every outcome to an exit status.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(CliError::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}
