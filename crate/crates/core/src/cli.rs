//! Command-line front end behind the `wconc` binary.
//!
//! Settings come from an optional JSON config file and from flags; a flag
//! always wins over the file. Exit codes: 0 success, 1 verification
//! mismatch, 2 invalid input.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analytic::{p_step_ppc, p_total_cpc, ProbabilityTable};
use crate::montecarlo::estimate;
use crate::protocol::{run, select_pivot, step_order, GateKind};
use crate::qstate::WCoefficients;
use crate::verify::{run_suite, ClosedForm, StepFormula, SuiteConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

/// Header of every sweep table.
pub const SWEEP_HEADER: &str = "k,m,p_step,p_step_cumsum,p_total_cumprod";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    #[default]
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pivot {
    /// The photon with the smallest `|alpha|`.
    #[default]
    Auto,
    Index(usize),
}

impl FromStr for Pivot {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Pivot::Auto);
        }
        s.parse()
            .map(Pivot::Index)
            .map_err(|_| format!("pivot must be `auto` or a photon index, got `{s}`"))
    }
}

impl fmt::Display for Pivot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pivot::Auto => f.write_str("auto"),
            Pivot::Index(i) => write!(f, "{i}"),
        }
    }
}

impl Serialize for Pivot {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Pivot::Auto => s.serialize_str("auto"),
            Pivot::Index(i) => s.serialize_u64(*i as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Pivot {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Index(usize),
            Name(String),
        }
        match Repr::deserialize(d)? {
            Repr::Index(i) => Ok(Pivot::Index(i)),
            Repr::Name(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// A coefficient in a config file: a plain real or an `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Alpha {
    Real(f64),
    Complex([f64; 2]),
}

impl From<Alpha> for Complex64 {
    fn from(a: Alpha) -> Self {
        match a {
            Alpha::Real(x) => Complex64::new(x, 0.0),
            Alpha::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

/// Contents of a `--config` file. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: Option<usize>,
    #[serde(alias = "coeffs")]
    pub alphas: Option<Vec<Alpha>>,
    pub gate: Option<GateKind>,
    pub max_m: Option<usize>,
    pub pivot: Option<Pivot>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    /// Rescale the coefficients to unit norm instead of rejecting them.
    pub normalize: Option<bool>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
            .map_err(|e| CliError::Invalid(format!("config {}: {e}", path.display())))
    }

    /// Fields set in `flags` replace those in `self`.
    pub fn overridden_by(self, flags: RunConfig) -> RunConfig {
        RunConfig {
            n: flags.n.or(self.n),
            alphas: flags.alphas.or(self.alphas),
            gate: flags.gate.or(self.gate),
            max_m: flags.max_m.or(self.max_m),
            pivot: flags.pivot.or(self.pivot),
            trials: flags.trials.or(self.trials),
            seed: flags.seed.or(self.seed),
            format: flags.format.or(self.format),
            out: flags.out.or(self.out),
            normalize: flags.normalize.or(self.normalize),
        }
    }

    /// Checks every field and fills in defaults.
    pub fn resolve(self) -> Result<Resolved, CliError> {
        let alphas: Vec<Complex64> = self
            .alphas
            .ok_or_else(|| {
                CliError::Invalid("no coefficients given (use --alphas or a config)".into())
            })?
            .into_iter()
            .map(Complex64::from)
            .collect();
        if let Some(n) = self.n {
            if n != alphas.len() {
                return Err(CliError::Invalid(format!(
                    "n = {n} but {} coefficients were given",
                    alphas.len()
                )));
            }
        }
        let coeffs = if self.normalize.unwrap_or(false) {
            WCoefficients::normalized(alphas)
        } else {
            WCoefficients::new(alphas)
        }
        .map_err(|e| CliError::Invalid(e.to_string()))?;
        let gate = self.gate.unwrap_or(GateKind::Ppc);
        let max_m = self.max_m.unwrap_or(1);
        if max_m == 0 {
            return Err(CliError::Invalid("max_m must be at least 1".into()));
        }
        let pivot = match self.pivot.unwrap_or_default() {
            Pivot::Auto => select_pivot(&coeffs),
            Pivot::Index(p) if (1..=coeffs.n()).contains(&p) => p,
            Pivot::Index(p) => {
                return Err(CliError::Invalid(format!(
                    "pivot {p} is outside 1..={}",
                    coeffs.n()
                )))
            }
        };
        Ok(Resolved {
            coeffs,
            gate,
            max_m,
            pivot,
            trials: self.trials.unwrap_or(100_000),
            seed: self.seed.unwrap_or(0),
            format: self.format.unwrap_or_default(),
            out: self.out,
        })
    }
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub coeffs: WCoefficients,
    pub gate: GateKind,
    pub max_m: usize,
    pub pivot: usize,
    pub trials: u64,
    pub seed: u64,
    pub format: Format,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Invalid(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(msg) => write!(f, "invalid input: {msg}"),
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

/// The value of `--alphas`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaList(pub Vec<Alpha>);

fn parse_alphas(s: &str) -> Result<AlphaList, String> {
    s.split(',')
        .map(|item| {
            let item = item.trim();
            let z = Complex64::from_str(item)
                .map_err(|_| format!("cannot parse coefficient `{item}`"))?;
            Ok(if z.im == 0.0 {
                Alpha::Real(z.re)
            } else {
                Alpha::Complex([z.re, z.im])
            })
        })
        .collect::<Result<_, _>>()
        .map(AlphaList)
}

#[derive(Debug, Parser)]
#[command(
    name = "wconc",
    version,
    about = "W-state entanglement concentration calculator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exhaustive simulation of one protocol run.
    Run(ConfigArgs),
    /// Per-step and total probabilities for attempts 1..=m-max.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Largest attempt number; defaults to --max-m.
        #[arg(long)]
        m_max: Option<usize>,
    },
    /// Randomized comparison of the closed forms with the simulator.
    Verify(VerifyArgs),
    /// Monte Carlo estimate of the total success probability.
    Estimate(ConfigArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// JSON file with any of the fields below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated coefficients, e.g. `0.5,0.5,0.5,0.3,0.4` or `0.6+0.1i,...`.
    #[arg(long, value_parser = parse_alphas, allow_hyphen_values = true)]
    pub alphas: Option<AlphaList>,
    #[arg(long, value_parser = GateKind::from_str)]
    pub gate: Option<GateKind>,
    #[arg(long)]
    pub max_m: Option<usize>,
    /// `auto` or a photon index.
    #[arg(long, value_parser = Pivot::from_str)]
    pub pivot: Option<Pivot>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Rescale the coefficients to unit norm.
    #[arg(long)]
    pub normalize: bool,
}

impl ConfigArgs {
    pub fn to_config(&self) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let flags = RunConfig {
            n: None,
            alphas: self.alphas.clone().map(|a| a.0),
            gate: self.gate,
            max_m: self.max_m,
            pivot: self.pivot,
            trials: self.trials,
            seed: self.seed,
            format: self.format,
            out: self.out.clone(),
            normalize: self.normalize.then_some(true),
        };
        Ok(file.overridden_by(flags))
    }
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 6)]
    pub n_max: usize,
    /// Instances per photon number and coefficient kind.
    #[arg(long, default_value_t = 100)]
    pub instances: usize,
    #[arg(long, default_value_t = 4)]
    pub max_m: usize,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Formats `x` with six significant figures.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exponent = x.abs().log10().floor() as i32;
    if !(-6..=6).contains(&exponent) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Per-attempt probability table for the analytic sweep. PPC has a single
/// attempt per photon.
pub fn sweep_table(
    coeffs: &WCoefficients,
    gate: GateKind,
    m_max: usize,
    pivot: usize,
) -> crate::Result<ProbabilityTable> {
    let a2 = coeffs.moduli_sqr();
    match gate {
        GateKind::Cpc => p_total_cpc(&a2, m_max, pivot),
        GateKind::Ppc => {
            let rows = step_order(coeffs.n(), pivot)?
                .into_iter()
                .map(|k| Ok((k, vec![p_step_ppc(&a2, k, pivot)?])))
                .collect::<crate::Result<Vec<_>>>()?;
            Ok(ProbabilityTable::from_rows(rows))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub m: usize,
    pub p_step: f64,
    pub p_step_cumsum: f64,
    pub p_total_cumprod: f64,
}

/// Rows in execution order of `k`, then increasing `m`. `p_total_cumprod`
/// multiplies the cumulative sums at the same `m` over all photons so far.
pub fn sweep_rows(table: &ProbabilityTable) -> Vec<SweepRow> {
    let m_max = table.max_m();
    let mut out = Vec::new();
    let mut prod = vec![1.0; m_max];
    for row in table.rows() {
        let mut cumsum = 0.0;
        for m in 1..=m_max {
            let p = row.per_m.get(m - 1).copied().unwrap_or(0.0);
            cumsum += p;
            prod[m - 1] *= cumsum;
            out.push(SweepRow {
                k: row.k,
                m,
                p_step: p,
                p_step_cumsum: cumsum,
                p_total_cumprod: prod[m - 1],
            });
        }
    }
    out
}

/// Floats use the shortest representation that parses back to the same
/// value, so identical inputs give identical bytes.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{},{},{:?},{:?},{:?}\n",
            r.k, r.m, r.p_step, r.p_step_cumsum, r.p_total_cumprod
        ));
    }
    s
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialization cannot fail");
    s.push('\n');
    s
}

/// Sends `document` to the output path, or to `out` when there is none.
/// Returns the sink for the human-readable summary.
fn emit<'a>(
    document: &str,
    path: Option<&Path>,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
) -> Result<&'a mut dyn Write, CliError> {
    match path {
        Some(p) => {
            std::fs::write(p, document)
                .map_err(|e| CliError::Invalid(format!("cannot write {}: {e}", p.display())))?;
            Ok(out)
        }
        None => {
            out.write_all(document.as_bytes()).ok();
            Ok(err)
        }
    }
}

pub fn cmd_run(cfg: &Resolved, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let report = run(&cfg.coeffs, cfg.gate, cfg.max_m, cfg.pivot)?;
    let document = match cfg.format {
        Format::Json => json(&report),
        Format::Csv => sweep_csv(&sweep_rows(&report.table)),
    };
    let log = emit(&document, cfg.out.as_deref(), out, err)?;
    writeln!(
        log,
        "gate {} max_m {} pivot {} (exhaustive simulation)",
        report.gate, report.max_m, report.pivot
    )
    .ok();
    for row in report.table.rows() {
        let per_m: Vec<String> = row.per_m.iter().map(|&p| sig6(p)).collect();
        writeln!(
            log,
            "  photon {}: {} over all attempts, per attempt [{}]",
            row.k,
            sig6(row.sum),
            per_m.join(", ")
        )
        .ok();
    }
    writeln!(
        log,
        "total {} (rounded {:.5})",
        sig6(report.total_p),
        report.total_p
    )
    .ok();
    writeln!(log, "final fidelity {}", sig6(report.final_fidelity)).ok();
    Ok(EXIT_OK)
}

pub fn cmd_sweep(
    cfg: &Resolved,
    m_max: usize,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    if m_max == 0 {
        return Err(CliError::Invalid(
            "m range must be nonempty (m_max >= 1)".into(),
        ));
    }
    let rows = sweep_rows(&sweep_table(&cfg.coeffs, cfg.gate, m_max, cfg.pivot)?);
    let document = match cfg.format {
        Format::Csv => sweep_csv(&rows),
        Format::Json => json(&rows),
    };
    let log = emit(&document, cfg.out.as_deref(), out, err)?;
    if let Some(last) = rows.last() {
        writeln!(
            log,
            "total at m = {}: {} (rounded {:.5})",
            last.m,
            sig6(last.p_total_cumprod),
            last.p_total_cumprod
        )
        .ok();
    }
    Ok(EXIT_OK)
}

pub fn cmd_estimate(
    cfg: &Resolved,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    let est = estimate(
        &cfg.coeffs,
        cfg.gate,
        cfg.max_m,
        cfg.pivot,
        cfg.trials,
        cfg.seed,
    )?;
    let exact = run(&cfg.coeffs, cfg.gate, cfg.max_m, cfg.pivot)?.total_p;
    let document = match cfg.format {
        Format::Json => json(&est),
        Format::Csv => format!(
            "p_hat,stderr,trials,seed,successes\n{:?},{:?},{},{},{}\n",
            est.p_hat, est.stderr, est.trials, est.seed, est.successes
        ),
    };
    let log = emit(&document, cfg.out.as_deref(), out, err)?;
    writeln!(
        log,
        "p_hat {} +/- {} over {} trials; exhaustive total {} (rounded {:.5})",
        sig6(est.p_hat),
        sig6(est.stderr),
        est.trials,
        sig6(exact),
        exact
    )
    .ok();
    Ok(EXIT_OK)
}

/// Runs the verification suite against `formula`. Exit code 1 on any
/// mismatch, with the offending instance written as JSON for replay.
pub fn cmd_verify(
    args: &VerifyArgs,
    formula: &dyn StepFormula,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    if !(2..=8).contains(&args.n_max) {
        return Err(CliError::Invalid(format!(
            "n_max must be in 2..=8, got {}",
            args.n_max
        )));
    }
    if args.instances == 0 || args.max_m == 0 {
        return Err(CliError::Invalid(
            "instances and max_m must be at least 1".into(),
        ));
    }
    let config = SuiteConfig {
        n_max: args.n_max,
        instances: args.instances,
        max_m: args.max_m,
        seed: args.seed,
        ..SuiteConfig::default()
    };
    let report = run_suite(&config, formula)?;
    if let Some(path) = &args.out {
        let document = match args.format.unwrap_or_default() {
            Format::Json => report.to_json(),
            Format::Csv => {
                let mut s = String::from("check,passed,failed,max_err\n");
                for (role, t) in &report.matrix {
                    s.push_str(&format!(
                        "{role},{},{},{:?}\n",
                        t.passed, t.failed, t.max_err
                    ));
                }
                s
            }
        };
        std::fs::write(path, document)
            .map_err(|e| CliError::Invalid(format!("cannot write {}: {e}", path.display())))?;
    }
    writeln!(out, "{report}").ok();
    if report.passed() {
        return Ok(EXIT_OK);
    }
    if let Some(m) = &report.first_mismatch {
        writeln!(
            err,
            "replay with: wconc run --config <file> --gate cpc, where <file> holds"
        )
        .ok();
        writeln!(
            err,
            "{}",
            serde_json::to_string(&m.instance).expect("instance serializes")
        )
        .ok();
    }
    Ok(EXIT_MISMATCH)
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    match &cli.command {
        Command::Run(args) => cmd_run(&args.to_config()?.resolve()?, out, err),
        Command::Sweep { config, m_max } => {
            let cfg = config.to_config()?.resolve()?;
            cmd_sweep(&cfg, m_max.unwrap_or(cfg.max_m), out, err)
        }
        Command::Verify(args) => cmd_verify(args, &ClosedForm, out, err),
        Command::Estimate(args) => cmd_estimate(&args.to_config()?.resolve()?, out, err),
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            let text = e.render().to_string();
            if code == EXIT_OK {
                write!(out, "{text}").ok();
            } else {
                write!(err, "{text}").ok();
            }
            return code;
        }
    };
    match dispatch(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            writeln!(err, "{e}").ok();
            EXIT_INVALID
        }
    }
}
