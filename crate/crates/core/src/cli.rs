//! The `lattc` command line.
//!
//! Exit codes: 0 on success, 1 when `etacheck` finds the two forms
//! inconsistent, 2 on argument errors (usage on standard error), 3 on numeric
//! failure (a JSON diagnostic on standard output).

use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::eta::{
    casimir_delta_with, compare_product_series, dedekind_eta, eta_limit_experiment, log_eta_product_parts,
    log_eta_series_parts, DeltaScheme, EtaParams,
};
use crate::lattice::{Lattice, NamedLattice};
use crate::llog::{exp_sequence, log_lattice, log_sequence_scaled, pair_energy, LogArgument, PairMode, PairPotential};
use crate::optimize::{
    maximize_2d, maximize_2d_multistart, optimize_sequence_1d, scan_2d, ModularPoint, Objective, OptimizationReport,
    OptimizeOptions, Partner, DEFAULT_SEED, DEFAULT_Y_MAX,
};
use crate::sequence::PeriodicSequence;
use crate::special::{epstein_zeta, theta};
use crate::sums::SumResult;

/// Environment variable overriding the default seed.
pub const SEED_ENV: &str = "LATTC_SEED";

#[derive(Debug, Parser)]
#[command(name = "lattc", version, about = "Lattice theta, zeta, logarithm and deformed-eta computations")]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    /// Worker threads (default: available cores).
    #[arg(long, global = true, value_parser = parse_threads)]
    pub threads: Option<usize>,
    /// Seed of randomized searches (default: $LATTC_SEED, else 42).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Plain,
}

/// `zd:<d>`, `square`, `triangular`, `e8` or `file:<path>`.
#[derive(Clone, Debug, PartialEq)]
pub enum LatticeSpec {
    Named(NamedLattice),
    File(PathBuf),
}

impl FromStr for LatticeSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(LatticeSpec::File(PathBuf::from(path)));
        }
        NamedLattice::from_str(s).map(LatticeSpec::Named).map_err(|e| {
            format!("{e}; expected one of {}, file:<path>", NamedLattice::NAMES.join(", "))
        })
    }
}

/// Builds the lattice named by `spec`, rescaled to `covolume` when given.
pub fn load_lattice(spec: &LatticeSpec, covolume: Option<f64>) -> Result<Lattice> {
    let l = match spec {
        LatticeSpec::Named(n) => Lattice::named(n, 1.0)?,
        LatticeSpec::File(p) => Lattice::read_json(p)?,
    };
    match covolume {
        Some(v) => l.rescale_to_covolume(v),
        None => Ok(l),
    }
}

#[derive(Debug, Args)]
pub struct LatticeArgs {
    /// Lattice: zd:<d>, square, triangular, e8 or file:<path>.
    #[arg(long)]
    pub lattice: LatticeSpec,
    /// Rescale to this covolume.
    #[arg(long, allow_negative_numbers = true, value_parser = parse_positive)]
    pub covolume: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SequenceArgs {
    /// Points t_1 <= ... <= t_N of one period, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "equidistant", required_unless_present = "equidistant")]
    pub points: Vec<f64>,
    /// Use t_n = n + shift with this period instead of --points.
    #[arg(long)]
    pub equidistant: Option<usize>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub shift: f64,
}

impl SequenceArgs {
    fn sequence(&self) -> Result<PeriodicSequence> {
        match self.equidistant {
            Some(0) => Err(Error::InvalidInput("--equidistant needs a period of at least 1".into())),
            Some(n) => Ok(PeriodicSequence::equidistant(n, self.shift)),
            None => PeriodicSequence::new(self.points.iter().map(|t| t + self.shift).collect()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveName {
    Theta,
    NegTheta,
    Llog,
    PairLlog,
    LogEta,
}

#[derive(Debug, Args)]
pub struct ObjectiveArgs {
    #[arg(long, value_enum)]
    pub objective: ObjectiveName,
    /// Theta parameter.
    #[arg(long, allow_negative_numbers = true, value_parser = parse_positive)]
    pub alpha: Option<f64>,
    /// Lattice-logarithm argument in (0, 1).
    #[arg(long, allow_negative_numbers = true, value_parser = parse_unit)]
    pub x: Option<f64>,
    #[arg(long, allow_negative_numbers = true, value_parser = parse_positive)]
    pub m: Option<f64>,
    #[arg(long, allow_negative_numbers = true, value_parser = parse_positive)]
    pub t: Option<f64>,
    /// f(r) = intercept + slope * r for pair_llog.
    #[arg(long, allow_negative_numbers = true, value_parser = parse_positive, default_value_t = std::f64::consts::PI)]
    pub intercept: f64,
    #[arg(long, allow_negative_numbers = true, value_parser = parse_positive, default_value_t = std::f64::consts::PI)]
    pub slope: f64,
    /// Partner lattice L of two-lattice objectives, or `tied`.
    #[arg(long, default_value = "tied")]
    pub partner: String,
    /// Covolume of the optimized lattices.
    #[arg(long, allow_negative_numbers = true, value_parser = parse_positive, default_value_t = 1.0)]
    pub covolume: f64,
}

impl ObjectiveArgs {
    fn objective(&self) -> Result<Objective> {
        let need = |v: Option<f64>, flag: &str| {
            v.ok_or_else(|| Error::InvalidInput(format!("objective {:?} needs --{flag}", self.objective)))
        };
        let partner = || -> Result<Partner> {
            if self.partner == "tied" {
                return Ok(Partner::Tied);
            }
            let spec = LatticeSpec::from_str(&self.partner).map_err(Error::InvalidInput)?;
            let l = load_lattice(&spec, None)?;
            if l.dim() != 2 {
                return Err(Error::InvalidInput("the partner lattice must be two-dimensional".into()));
            }
            Ok(Partner::Fixed(l.rescale_to_covolume(self.covolume)?))
        };
        Ok(match self.objective {
            ObjectiveName::Theta => Objective::Theta { alpha: need(self.alpha, "alpha")? },
            ObjectiveName::NegTheta => Objective::NegTheta { alpha: need(self.alpha, "alpha")? },
            ObjectiveName::Llog => Objective::LatticeLog { x: need(self.x, "x")? },
            ObjectiveName::PairLlog => Objective::PairLog {
                partner: partner()?,
                intercept: self.intercept,
                slope: self.slope,
            },
            ObjectiveName::LogEta => Objective::LogEta {
                m: need(self.m, "m")?,
                t: need(self.t, "t")?,
                partner: partner()?,
            },
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EtaForm {
    Product,
    Series,
}

#[derive(Debug, Args)]
pub struct EtaArgs {
    /// The lattice L (carries Delta_m).
    #[arg(long)]
    pub lattice: LatticeSpec,
    /// The lattice Lambda (primitive vectors); defaults to --lattice.
    #[arg(long)]
    pub partner: Option<LatticeSpec>,
    #[arg(long, allow_negative_numbers = true, value_parser = parse_positive)]
    pub covolume: Option<f64>,
    #[arg(long, allow_negative_numbers = true, value_parser = parse_positive)]
    pub m: f64,
    #[arg(long, allow_negative_numbers = true, value_parser = parse_positive)]
    pub t: f64,
    #[arg(long, allow_negative_numbers = true, value_parser = parse_positive, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, allow_negative_numbers = true, value_parser = parse_positive, default_value_t = 1e-8)]
    pub quad_tol: f64,
    /// Multiplier on the lattice-logarithm term of the series form.
    #[arg(long, allow_negative_numbers = true, value_parser = parse_positive, default_value_t = 0.5)]
    pub series_factor: f64,
}

impl EtaArgs {
    fn resolve(&self) -> Result<(Lattice, Lattice, EtaParams)> {
        let l = load_lattice(&self.lattice, self.covolume)?;
        let lam = match &self.partner {
            Some(p) => load_lattice(p, self.covolume)?,
            None => l.clone(),
        };
        let params = EtaParams::new(self.m, self.t)?
            .with_tol(self.tol, self.quad_tol)
            .with_series_factor(self.series_factor);
        Ok((l, lam, params))
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Theta function sum_{p in L} exp(-pi alpha |p|^2).
    Theta {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long, allow_negative_numbers = true, value_parser = parse_positive)]
        alpha: f64,
        #[arg(long, allow_negative_numbers = true, value_parser = parse_positive, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Epstein zeta function sum_{p != 0} |p|^-s for s > d.
    Zeta {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long, allow_negative_numbers = true, value_parser = parse_positive)]
        s: f64,
        #[arg(long, allow_negative_numbers = true, value_parser = parse_positive, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Lattice-logarithm log_L(x).
    Llog {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long, allow_negative_numbers = true, value_parser = parse_unit)]
        x: f64,
        #[arg(long, allow_negative_numbers = true, value_parser = parse_positive, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Sequence-logarithm of a periodic configuration.
    Seqlog {
        #[command(flatten)]
        sequence: SequenceArgs,
        #[arg(long, allow_negative_numbers = true, value_parser = parse_unit)]
        x: f64,
        /// Multiplier on the defining double sum.
        #[arg(long, allow_negative_numbers = true, value_parser = parse_positive, default_value_t = 1.0)]
        multiplier: f64,
        #[arg(long, allow_negative_numbers = true, value_parser = parse_positive, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Sequence-exponential of a periodic configuration.
    Seqexp {
        #[command(flatten)]
        sequence: SequenceArgs,
        #[arg(long, allow_negative_numbers = true, value_parser = parse_positive)]
        x: f64,
        #[arg(long, allow_negative_numbers = true, value_parser = parse_positive, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Two-lattice energy sum_{q in Lambda} log_L(1 - exp(-f(|q|^2))) for affine f.
    Pair {
        #[command(flatten)]
        lattice: LatticeArgs,
        /// The lattice Lambda; defaults to --lattice.
        #[arg(long)]
        partner: Option<LatticeSpec>,
        #[arg(long, allow_negative_numbers = true, value_parser = parse_positive, default_value_t = std::f64::consts::PI)]
        intercept: f64,
        #[arg(long, allow_negative_numbers = true, value_parser = parse_positive, default_value_t = std::f64::consts::PI)]
        slope: f64,
        #[arg(long, value_enum, default_value_t = ModeArg::Swapped)]
        mode: ModeArg,
        #[arg(long, allow_negative_numbers = true, value_parser = parse_positive, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Casimir-type integral Delta_m(L).
    Delta {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long, allow_negative_numbers = true, value_parser = parse_positive)]
        m: f64,
        #[arg(long, allow_negative_numbers = true, value_parser = parse_positive, default_value_t = 1e-8)]
        quad_tol: f64,
        #[arg(long, value_enum, default_value_t = SchemeArg::Adaptive)]
        scheme: SchemeArg,
    },
    /// ln E_{L,Lambda}^{(m)}(it) in product or series form.
    Eta {
        #[command(flatten)]
        args: EtaArgs,
        #[arg(long, value_enum, default_value_t = EtaForm::Product)]
        form: EtaForm,
    },
    /// Classical Dedekind eta(it).
    Dedekind {
        #[arg(long, allow_negative_numbers = true, value_parser = parse_positive)]
        t: f64,
        #[arg(long, allow_negative_numbers = true, value_parser = parse_positive, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Product against series form of ln E; exit 1 when they disagree.
    Etacheck {
        #[command(flatten)]
        args: EtaArgs,
    },
    /// (2 pi m t)^(-1/2) E_{Z,Z}^{(m)}(it) against eta(it) for several m.
    Etalimit {
        #[arg(long, allow_negative_numbers = true, value_parser = parse_positive, default_value_t = 1.0)]
        t: f64,
        #[arg(long, value_delimiter = ',', value_parser = parse_positive, default_value = "0.5,0.2,0.1,0.05")]
        m: Vec<f64>,
        #[arg(long, allow_negative_numbers = true, value_parser = parse_positive, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, allow_negative_numbers = true, value_parser = parse_positive, default_value_t = 1e-8)]
        quad_tol: f64,
    },
    /// Objective on a grid over the fundamental domain.
    Scan2d {
        #[command(flatten)]
        objective: ObjectiveArgs,
        #[arg(long, default_value_t = 40, value_parser = clap::value_parser!(u64).range(2..=2000))]
        grid: u64,
        #[arg(long, allow_negative_numbers = true, value_parser = parse_positive, default_value_t = DEFAULT_Y_MAX)]
        y_max: f64,
        #[arg(long, allow_negative_numbers = true, value_parser = parse_positive, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Local extremization over lattice shapes.
    Opt2d {
        #[command(flatten)]
        objective: ObjectiveArgs,
        #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
        start_x: f64,
        #[arg(long, allow_negative_numbers = true, value_parser = parse_positive, default_value_t = 1.3)]
        start_y: f64,
        /// Random starts from the fundamental domain instead of --start-x/--start-y.
        #[arg(long)]
        starts: Option<usize>,
        #[arg(long, allow_negative_numbers = true, value_parser = parse_positive, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, allow_negative_numbers = true, value_parser = parse_positive, default_value_t = 1e-14)]
        sum_tol: f64,
        #[arg(long, default_value_t = 5000)]
        max_iter: usize,
    },
    /// Maximizes the sequence-logarithm over N-periodic configurations.
    Opt1d {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=64))]
        n: u64,
        #[arg(long, allow_negative_numbers = true, value_parser = parse_unit)]
        x: f64,
        #[arg(long, default_value_t = 10)]
        restarts: usize,
        #[arg(long, allow_negative_numbers = true, value_parser = parse_positive, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Named lattices with their dimension, covolume and minimal norm.
    Lattices {
        /// Describe one lattice in detail.
        #[arg(long)]
        lattice: Option<LatticeSpec>,
        #[arg(long, allow_negative_numbers = true, value_parser = parse_positive)]
        covolume: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Direct,
    Swapped,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Adaptive,
    FixedPanels,
}

fn parse_positive(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("must be positive and finite, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_unit(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v < 1.0 => Ok(v),
        Ok(v) => Err(format!("must lie in (0, 1), got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_threads(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

/// One rendered command result: a JSON document and an equivalent flat table.
struct Output {
    json: serde_json::Value,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    /// Render as `key: value` lines in plain format.
    single: bool,
    exit: i32,
}

impl Output {
    fn new<J: Serialize, R: Serialize>(json: &J, rows: &[R]) -> Result<Self> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r).map_err(|e| Error::InvalidInput(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
        let mut reader = csv::Reader::from_reader(bytes.as_slice());
        let header = reader
            .headers()
            .map_err(|e| Error::InvalidInput(e.to_string()))?
            .iter()
            .map(String::from)
            .collect();
        let rows = reader
            .records()
            .map(|r| r.map(|rec| rec.iter().map(String::from).collect()))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(Output {
            json: serde_json::to_value(json)?,
            header,
            rows,
            single: false,
            exit: 0,
        })
    }

    fn record<R: Serialize>(row: &R) -> Result<Self> {
        let mut o = Output::new(row, std::slice::from_ref(row))?;
        o.single = true;
        Ok(o)
    }

    fn render(&self, format: Format) -> Result<String> {
        Ok(match format {
            Format::Json => serde_json::to_string_pretty(&self.json)? + "\n",
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let err = |e: csv::Error| Error::InvalidInput(e.to_string());
                w.write_record(&self.header).map_err(err)?;
                for r in &self.rows {
                    w.write_record(r).map_err(err)?;
                }
                String::from_utf8(w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?)
                    .map_err(|e| Error::InvalidInput(e.to_string()))?
            }
            Format::Plain if self.single && self.rows.len() == 1 => {
                let width = self.header.iter().map(String::len).max().unwrap_or(0);
                self.header
                    .iter()
                    .zip(&self.rows[0])
                    .map(|(k, v)| format!("{k:<width$}  {v}\n"))
                    .collect()
            }
            Format::Plain => {
                let mut widths: Vec<usize> = self.header.iter().map(String::len).collect();
                for r in &self.rows {
                    for (w, c) in widths.iter_mut().zip(r) {
                        *w = (*w).max(c.len());
                    }
                }
                let line = |cells: &[String]| {
                    let parts: Vec<String> = cells
                        .iter()
                        .zip(&widths)
                        .map(|(c, w)| format!("{c:>w$}"))
                        .collect();
                    parts.join("  ").trim_end().to_string() + "\n"
                };
                let mut s = line(&self.header);
                for r in &self.rows {
                    s += &line(r);
                }
                s
            }
        })
    }
}

#[derive(Serialize)]
struct EtaRow {
    value: f64,
    tail_bound: f64,
    prefactor: f64,
    lattice_part: f64,
}

#[derive(Serialize)]
struct ModularRow {
    x: f64,
    y: f64,
    value: f64,
    iterations: usize,
    evaluations: usize,
    converged: bool,
    starts: usize,
}

impl ModularRow {
    fn of(r: &OptimizationReport) -> Self {
        let p = r.modular_point().expect("two-dimensional report");
        ModularRow {
            x: p.x,
            y: p.y,
            value: r.value,
            iterations: r.iterations,
            evaluations: r.evaluations,
            converged: r.converged,
            starts: r.starts,
        }
    }
}

#[derive(Serialize)]
struct SequenceRow {
    points: String,
    value: f64,
    iterations: usize,
    evaluations: usize,
    converged: bool,
    starts: usize,
}

#[derive(Serialize)]
struct LatticeRow {
    name: String,
    dim: usize,
    covolume: f64,
    min_norm_sq: f64,
    kissing_number: usize,
}

fn describe(name: String, l: &Lattice) -> Result<LatticeRow> {
    let min = crate::shells::shortest_norm_sq(l);
    let first = crate::shells::enumerate_shells(l, min.sqrt() * (1.0 + 1e-9))?;
    Ok(LatticeRow {
        name,
        dim: l.dim(),
        covolume: l.covolume(),
        min_norm_sq: min,
        kissing_number: first.shells.first().map_or(0, |s| s.multiplicity),
    })
}

#[derive(Serialize)]
struct Diagnostic<'a> {
    error: &'a str,
    message: String,
}

/// Parses `argv` (including the program name), runs the command, and writes
/// results to `out` and usage errors to `err`. Returns the process exit code.
pub fn run<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let rendered = e.render().to_string();
                    let _ = write!(err, "{rendered}");
                    if !rendered.contains("Usage:") {
                        let _ = writeln!(err, "\n{}", Cli::usage());
                    }
                    2
                }
            };
        }
    };
    let seed = cli
        .seed
        .or_else(|| std::env::var(SEED_ENV).ok().and_then(|s| s.trim().parse().ok()))
        .unwrap_or(DEFAULT_SEED);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: cannot start {} worker threads: {e}", cli.threads.unwrap_or(0));
            return 2;
        }
    };
    let result = pool.install(|| execute(&cli.command, seed));
    match result.and_then(|o| Ok((o.render(cli.format)?, o.exit))) {
        Ok((text, code)) => {
            if out.write_all(text.as_bytes()).is_err() {
                return 3;
            }
            code
        }
        Err(e) if e.is_numeric() => {
            let diag = Diagnostic {
                error: e.kind(),
                message: e.to_string(),
            };
            let _ = writeln!(out, "{}", serde_json::to_string(&diag).unwrap_or_default());
            3
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}\n\n{}", Cli::usage());
            2
        }
    }
}

impl Cli {
    fn usage() -> String {
        use clap::CommandFactory;
        Cli::command().render_usage().to_string()
    }
}

fn execute(command: &Command, seed: u64) -> Result<Output> {
    match command {
        Command::Theta { lattice, alpha, tol } => {
            let l = load_lattice(&lattice.lattice, lattice.covolume)?;
            Output::record(&theta(&l, *alpha, *tol)?)
        }
        Command::Zeta { lattice, s, tol } => {
            let l = load_lattice(&lattice.lattice, lattice.covolume)?;
            Output::record(&epstein_zeta(&l, *s, *tol)?)
        }
        Command::Llog { lattice, x, tol } => {
            let l = load_lattice(&lattice.lattice, lattice.covolume)?;
            Output::record(&log_lattice(&l, LogArgument::new(*x)?, *tol)?)
        }
        Command::Seqlog {
            sequence,
            x,
            multiplier,
            tol,
        } => {
            let seq = sequence.sequence()?;
            Output::record(&log_sequence_scaled(&seq, LogArgument::new(*x)?, *tol, *multiplier)?)
        }
        Command::Seqexp { sequence, x, tol } => Output::record(&exp_sequence(&sequence.sequence()?, *x, *tol)?),
        Command::Pair {
            lattice,
            partner,
            intercept,
            slope,
            mode,
            tol,
        } => {
            let l = load_lattice(&lattice.lattice, lattice.covolume)?;
            let lam = match partner {
                Some(p) => load_lattice(p, lattice.covolume)?,
                None => l.clone(),
            };
            let f = PairPotential::affine(*intercept, *slope)?;
            let mode = match mode {
                ModeArg::Direct => PairMode::Direct,
                ModeArg::Swapped => PairMode::Swapped,
            };
            Output::record(&pair_energy(&l, &lam, &f, mode, *tol)?)
        }
        Command::Delta {
            lattice,
            m,
            quad_tol,
            scheme,
        } => {
            let l = load_lattice(&lattice.lattice, lattice.covolume)?;
            let scheme = match scheme {
                SchemeArg::Adaptive => DeltaScheme::Adaptive,
                SchemeArg::FixedPanels => DeltaScheme::FixedPanels,
            };
            Output::record(&casimir_delta_with(&l, *m, *quad_tol, scheme)?)
        }
        Command::Eta { args, form } => {
            let (l, lam, params) = args.resolve()?;
            let parts = match form {
                EtaForm::Product => log_eta_product_parts(&l, &lam, &params)?,
                EtaForm::Series => log_eta_series_parts(&l, &lam, &params)?,
            };
            let total: SumResult = parts.total();
            Output::record(&EtaRow {
                value: total.value,
                tail_bound: total.tail_bound,
                prefactor: parts.prefactor.value,
                lattice_part: parts.lattice_part.value,
            })
        }
        Command::Dedekind { t, tol } => Output::record(&dedekind_eta(*t, *tol)?),
        Command::Etacheck { args } => {
            let (l, lam, params) = args.resolve()?;
            let c = compare_product_series(&l, &lam, &params)?;
            let mut o = Output::record(&c)?;
            o.exit = if c.consistent { 0 } else { 1 };
            Ok(o)
        }
        Command::Etalimit { t, m, tol, quad_tol } => {
            let report = eta_limit_experiment(*t, m, *tol, *quad_tol)?;
            Output::new(&report, &report.rows)
        }
        Command::Scan2d {
            objective,
            grid,
            y_max,
            tol,
        } => {
            let obj = objective.objective()?;
            let scan = scan_2d(&obj, *grid as usize, objective.covolume, *y_max, *tol)?;
            #[derive(Serialize)]
            struct ScanJson<'a> {
                objective: String,
                sense: crate::optimize::Sense,
                n: usize,
                best_index: (usize, usize),
                best: crate::optimize::ScanCell,
                cells: &'a [crate::optimize::ScanCell],
            }
            let json = ScanJson {
                objective: obj.name(),
                sense: scan.sense,
                n: scan.n,
                best_index: scan.best_index,
                best: scan.best,
                cells: &scan.cells,
            };
            Output::new(&json, &scan.cells)
        }
        Command::Opt2d {
            objective,
            start_x,
            start_y,
            starts,
            tol,
            sum_tol,
            max_iter,
        } => {
            let obj = objective.objective()?;
            let opts = OptimizeOptions {
                tol: *tol,
                sum_tol: *sum_tol,
                max_iterations: *max_iter,
                ..OptimizeOptions::default()
            };
            let report = match starts {
                Some(k) => {
                    let reports = maximize_2d_multistart(&obj, (*k).max(1), objective.covolume, DEFAULT_Y_MAX, seed, opts)?;
                    let sign = match obj.sense() {
                        crate::optimize::Sense::Maximize => 1.0,
                        crate::optimize::Sense::Minimize => -1.0,
                    };
                    let mut best = reports[0].clone();
                    for r in &reports[1..] {
                        if sign * r.value > sign * best.value {
                            best = r.clone();
                        }
                    }
                    best.starts = reports.len();
                    best.iterations = reports.iter().map(|r| r.iterations).sum();
                    best.evaluations = reports.iter().map(|r| r.evaluations).sum();
                    best
                }
                None => maximize_2d(&obj, ModularPoint::new(*start_x, *start_y)?, objective.covolume, opts)?,
            };
            let row = ModularRow::of(&report);
            let mut o = Output::new(&report, std::slice::from_ref(&row))?;
            o.single = true;
            Ok(o)
        }
        Command::Opt1d { n, x, restarts, tol } => {
            let report = optimize_sequence_1d(*n as usize, LogArgument::new(*x)?, *restarts, *tol, seed)?;
            let points = report.sequence().expect("sequence report").points();
            let row = SequenceRow {
                points: points.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(";"),
                value: report.value,
                iterations: report.iterations,
                evaluations: report.evaluations,
                converged: report.converged,
                starts: report.starts,
            };
            let mut o = Output::new(&report, std::slice::from_ref(&row))?;
            o.single = true;
            Ok(o)
        }
        Command::Lattices { lattice, covolume } => match lattice {
            Some(spec) => {
                let l = load_lattice(spec, *covolume)?;
                let name = match spec {
                    LatticeSpec::Named(n) => n.to_string(),
                    LatticeSpec::File(p) => format!("file:{}", p.display()),
                };
                #[derive(Serialize)]
                struct Detail {
                    #[serde(flatten)]
                    row: LatticeRow,
                    basis: Vec<Vec<f64>>,
                }
                let detail = Detail {
                    row: describe(name, &l)?,
                    basis: l.rows(),
                };
                let mut o = Output::new(&detail, std::slice::from_ref(&detail.row))?;
                o.single = true;
                Ok(o)
            }
            None => {
                let v = covolume.unwrap_or(1.0);
                let named = [
                    NamedLattice::Integer(1),
                    NamedLattice::Integer(2),
                    NamedLattice::Square,
                    NamedLattice::Triangular,
                    NamedLattice::Integer(3),
                    NamedLattice::E8,
                ];
                let rows = named
                    .iter()
                    .map(|n| describe(n.to_string(), &Lattice::named(n, 1.0)?.rescale_to_covolume(v)?))
                    .collect::<Result<Vec<_>>>()?;
                Output::new(&rows, &rows)
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("lattc").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn lattice_specs() {
        assert_eq!(
            LatticeSpec::from_str("zd:2").unwrap(),
            LatticeSpec::Named(NamedLattice::Integer(2))
        );
        assert!(matches!(LatticeSpec::from_str("file:x.json").unwrap(), LatticeSpec::File(_)));
        assert!(LatticeSpec::from_str("d4").is_err());
    }

    #[test]
    fn argument_errors_exit_two() {
        let (code, _, err) = run_str(&["theta", "--lattice", "square", "--alpha", "-1"]);
        assert_eq!(code, 2);
        assert!(err.contains("Usage"));
        assert_eq!(run_str(&["theta", "--lattice", "square", "--alpha", "1", "--bogus"]).0, 2);
        assert_eq!(run_str(&["frobnicate"]).0, 2);
    }

    #[test]
    fn plain_output_is_key_value() {
        let (code, out, _) = run_str(&["llog", "--lattice", "zd:1", "--x", "0.5", "--format", "plain"]);
        assert_eq!(code, 0);
        assert!(out.lines().next().unwrap().starts_with("value"));
    }
}
