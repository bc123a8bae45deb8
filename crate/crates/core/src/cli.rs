//! Command-line front end: `estimate`, `oracle`, `gen` and `sweep`.
//!
//! Exit codes are 0 on success, 1 for parse, configuration and invariant
//! errors, and 2 when the inputs do not commute. Reports are `key = value`
//! lines followed by one `machine: {json}` line.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::densop::{read_matrix, trace_distance, write_matrix, DensityOperator};
use crate::error::{Error, Result};
use crate::lmr::{exact_evolution, lmr_evolve, LmrConfig};
use crate::oracle::{fidelity_commuting, fidelity_uhlmann, trace_sqrt, OraclePair};
use crate::pipeline::{
    estimate_fidelity, generate_commuting_pair, generate_snapped_pair, resource_report,
    EstimationReport, Mode, PairKind, PipelineConfig,
};

/// Environment variable capping the worker threads of `sweep`.
pub const THREADS_ENV: &str = "FIDEST_THREADS";

/// Header of the `sweep` CSV output.
pub const SWEEP_HEADER: &str = "parameter,value,error,oracle,estimate,copies";

#[derive(Parser, Debug)]
#[command(
    name = "fidest",
    version,
    about = "Fidelity estimation for commuting density matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the estimator on two matrix files.
    Estimate {
        rho1: PathBuf,
        rho2: PathBuf,
        #[command(flatten)]
        flags: PipelineFlags,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Brute-force reference values for two matrix files.
    Oracle {
        rho1: PathBuf,
        rho2: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a seeded commuting pair as `rho1.txt` and `rho2.txt`.
    Gen {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = KindArg::RandomSpectra)]
        kind: KindArg,
        /// Round eigenvalues to multiples of 1/SNAP.
        #[arg(long)]
        snap: Option<usize>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Vary one parameter over a list of values and emit CSV.
    Sweep {
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Comma-separated ascending values.
        #[arg(
            long,
            value_delimiter = ',',
            required = true,
            allow_hyphen_values = true
        )]
        values: Vec<f64>,
        #[arg(long, value_enum, default_value_t = KindArg::RandomSpectra)]
        kind: KindArg,
        /// Evolution time of the `n` sweep.
        #[arg(long, default_value_t = 1.0)]
        time: f64,
        #[command(flatten)]
        flags: PipelineFlags,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
struct PipelineFlags {
    /// Phase-estimation register size (power of two).
    #[arg(long = "T", default_value_t = 512)]
    registers: usize,
    #[arg(long, default_value_t = 0.01, allow_hyphen_values = true)]
    tau: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    mode: ModeArg,
    /// Precision target for the resource formulas.
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Swap-trick steps per evolution in lmr mode.
    #[arg(long = "lmr-steps", default_value_t = 64)]
    lmr_steps: usize,
    /// Matrix dimension: checked against the inputs of `estimate`, used for
    /// the generated pair of `sweep` (default 2).
    #[arg(long = "dim")]
    dim: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ModeArg {
    Exact,
    Truncated,
    Lmr,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum KindArg {
    RandomSpectra,
    Dephased,
    Thermal,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SweepParam {
    N,
    #[value(name = "T")]
    T,
    Tau,
}

impl From<KindArg> for PairKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::RandomSpectra => PairKind::RandomSpectra,
            KindArg::Dephased => PairKind::Dephased,
            KindArg::Thermal => PairKind::ThermalSameHamiltonian,
        }
    }
}

impl PipelineFlags {
    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            registers: self.registers,
            tau: self.tau,
            mode: match self.mode {
                ModeArg::Exact => Mode::Exact,
                ModeArg::Truncated => Mode::Truncated,
                ModeArg::Lmr => Mode::Lmr,
            },
            lmr_steps: self.lmr_steps,
            seed: self.seed,
            ..Default::default()
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Exit code for an error: 2 for non-commuting inputs, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonCommuting { .. } => 2,
        _ => 1,
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::Estimate {
            rho1,
            rho2,
            flags,
            out,
        } => cmd_estimate(&rho1, &rho2, &flags, out.as_deref(), stdout),
        Command::Oracle { rho1, rho2, out } => cmd_oracle(&rho1, &rho2, out.as_deref(), stdout),
        Command::Gen {
            dim,
            seed,
            kind,
            snap,
            out,
        } => cmd_gen(dim, seed, kind.into(), snap, &out, stdout),
        Command::Sweep {
            param,
            values,
            kind,
            time,
            flags,
            out,
        } => cmd_sweep(
            param,
            &values,
            kind.into(),
            time,
            &flags,
            out.as_deref(),
            stdout,
        ),
    }
}

fn load_state(path: &Path) -> Result<DensityOperator> {
    let m = read_matrix(path).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        Error::Io(msg) => Error::Io(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    DensityOperator::new(m)
}

fn emit(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn qubits_of(dim: usize) -> Result<usize> {
    if !dim.is_power_of_two() || !(2..=8).contains(&dim) {
        return Err(Error::InvalidConfig(format!(
            "--dim {dim} must be 2, 4 or 8"
        )));
    }
    Ok(dim.trailing_zeros() as usize)
}

fn spectrum_text(s: &[(f64, f64)]) -> String {
    s.iter()
        .map(|(x, w)| format!("{x}:{w}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Renders a report as `key = value` lines plus the machine block.
pub fn render_report(r: &EstimationReport) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    kv("fidelity_estimate", r.fidelity_estimate.to_string());
    kv("oracle_fidelity", r.oracle_fidelity.to_string());
    kv("abs_error", r.error().to_string());
    kv("lambda1", r.lambda1.to_string());
    kv("lambda2", r.lambda2.to_string());
    kv("visibility", r.visibility.to_string());
    kv("alpha_re", r.alpha.re.to_string());
    kv("alpha_im", r.alpha.im.to_string());
    kv("success_probability1", r.success_probability1.to_string());
    kv("success_probability2", r.success_probability2.to_string());
    kv("commutator_norm", format!("{:e}", r.commutator_norm));
    kv("mode", r.mode.name().to_string());
    kv("T", r.registers.to_string());
    kv("tau", r.tau.to_string());
    kv("seed", r.seed.to_string());
    kv("phase_spectrum1", spectrum_text(&r.phase_spectrum1));
    kv("phase_spectrum2", spectrum_text(&r.phase_spectrum2));
    let l = &r.ledger;
    kv("ledger.copies_rho1", l.copies_rho1.to_string());
    kv("ledger.copies_rho2", l.copies_rho2.to_string());
    kv("ledger.copies_auxiliary", l.copies_auxiliary.to_string());
    kv("ledger.lmr_steps", l.lmr_steps.to_string());
    kv(
        "ledger.iqpe_register_bits",
        l.iqpe_register_bits.to_string(),
    );
    kv(
        "ledger.postselect_expected_repetitions",
        l.postselect_expected_repetitions.to_string(),
    );
    for (name, value) in &l.formula_values {
        kv(&format!("ledger.formula.{name}"), value.to_string());
    }
    let machine = json!({
        "fidelity_estimate": r.fidelity_estimate,
        "oracle_fidelity": r.oracle_fidelity,
        "lambda1": r.lambda1,
        "lambda2": r.lambda2,
        "visibility": r.visibility,
        "alpha": [r.alpha.re, r.alpha.im],
        "success_probability": [r.success_probability1, r.success_probability2],
        "commutator_norm": r.commutator_norm,
        "mode": r.mode,
        "T": r.registers,
        "tau": r.tau,
        "seed": r.seed,
        "phase_spectrum1": r.phase_spectrum1,
        "phase_spectrum2": r.phase_spectrum2,
        "ledger": l,
    });
    let _ = writeln!(s, "machine: {machine}");
    s
}

fn cmd_estimate(
    rho1: &Path,
    rho2: &Path,
    flags: &PipelineFlags,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<()> {
    let a = load_state(rho1)?;
    let b = load_state(rho2)?;
    if let Some(dim) = flags.dim {
        if a.dim() != dim || b.dim() != dim {
            return Err(Error::DimensionMismatch(format!(
                "--dim {dim} but inputs have dimensions {} and {}",
                a.dim(),
                b.dim()
            )));
        }
    }
    let cfg = flags.config();
    let mut report = estimate_fidelity(&a, &b, &cfg)?;
    let planned = resource_report(&cfg, a.qubits(), flags.epsilon, true)?;
    report.ledger.formula_values.extend(planned.formula_values);
    let text = render_report(&report);
    emit(&text, out, stdout)?;
    if let Some(path) = out {
        writeln!(
            stdout,
            "fidelity_estimate = {} (oracle {}), report written to {}",
            report.fidelity_estimate,
            report.oracle_fidelity,
            path.display()
        )?;
    }
    Ok(())
}

fn cmd_oracle(rho1: &Path, rho2: &Path, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    let pair = OraclePair::new(load_state(rho1)?, load_state(rho2)?)?;
    let uhlmann = fidelity_uhlmann(&pair.rho1, &pair.rho2)?;
    let commuting = fidelity_commuting(
        &pair.rho1,
        &pair.rho2,
        crate::oracle::DEFAULT_COMMUTATOR_TOL,
    )
    .ok();
    let mut s = String::new();
    let _ = writeln!(s, "fidelity_uhlmann = {uhlmann}");
    match commuting {
        Some(f) => {
            let _ = writeln!(s, "fidelity_commuting = {f}");
        }
        None => {
            let _ = writeln!(s, "fidelity_commuting = n/a");
        }
    }
    let _ = writeln!(s, "commutator_norm = {:e}", pair.commutator_norm);
    let _ = writeln!(s, "trace_sqrt1 = {}", trace_sqrt(&pair.rho1));
    let _ = writeln!(s, "trace_sqrt2 = {}", trace_sqrt(&pair.rho2));
    let machine = json!({
        "fidelity_uhlmann": uhlmann,
        "fidelity_commuting": commuting,
        "commutator_norm": pair.commutator_norm,
        "trace_sqrt": [trace_sqrt(&pair.rho1), trace_sqrt(&pair.rho2)],
    });
    let _ = writeln!(s, "machine: {machine}");
    emit(&s, out, stdout)
}

fn cmd_gen(
    dim: usize,
    seed: u64,
    kind: PairKind,
    snap: Option<usize>,
    out: &Path,
    stdout: &mut dyn Write,
) -> Result<()> {
    let qubits = qubits_of(dim)?;
    let pair = match snap {
        Some(levels) => generate_snapped_pair(seed, qubits, kind, levels)?,
        None => generate_commuting_pair(seed, qubits, kind)?,
    };
    std::fs::create_dir_all(out)?;
    for (name, state) in [("rho1.txt", &pair.rho1), ("rho2.txt", &pair.rho2)] {
        let path = out.join(name);
        write_matrix(&path, state.matrix())?;
        writeln!(stdout, "{}", path.display())?;
    }
    Ok(())
}

struct SweepRow {
    value: f64,
    error: f64,
    oracle: f64,
    estimate: f64,
    copies: usize,
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            Error::InvalidConfig(format!("{THREADS_ENV}={raw:?} is not a positive integer"))
        })?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
}

fn cmd_sweep(
    param: SweepParam,
    values: &[f64],
    kind: PairKind,
    time: f64,
    flags: &PipelineFlags,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<()> {
    use rayon::prelude::*;

    if values.is_empty() {
        return Err(Error::InvalidConfig("empty sweep range".into()));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig(
            "sweep values must be strictly ascending".into(),
        ));
    }
    if matches!(param, SweepParam::N | SweepParam::T)
        && values.iter().any(|v| v.fract() != 0.0 || *v < 1.0)
    {
        return Err(Error::InvalidConfig(
            "n and T values must be positive integers".into(),
        ));
    }
    let qubits = qubits_of(flags.dim.unwrap_or(2))?;
    let pair = generate_commuting_pair(flags.seed, qubits, kind)?;
    let base = flags.config();

    let point = |value: f64| -> Result<SweepRow> {
        match param {
            SweepParam::N => {
                let mut cfg = LmrConfig::new(time, value as usize)?;
                let (approx, copies) = lmr_evolve(&pair.rho1, &pair.rho2, &mut cfg)?;
                let exact = exact_evolution(&pair.rho1, &pair.rho2, time)?;
                Ok(SweepRow {
                    value,
                    error: trace_distance(&approx, &exact)?,
                    oracle: fidelity_uhlmann(&pair.rho1, &exact)?,
                    estimate: fidelity_uhlmann(&pair.rho1, &approx)?,
                    copies,
                })
            }
            SweepParam::T | SweepParam::Tau => {
                let mut cfg = base.clone();
                if param == SweepParam::T {
                    cfg.registers = value as usize;
                } else {
                    cfg.tau = value;
                }
                let r = estimate_fidelity(&pair.rho1, &pair.rho2, &cfg)?;
                Ok(SweepRow {
                    value,
                    error: r.error(),
                    oracle: r.oracle_fidelity,
                    estimate: r.fidelity_estimate,
                    copies: r.ledger.lmr_steps,
                })
            }
        }
    };

    let pool = thread_pool()?;
    let rows: Vec<SweepRow> =
        pool.install(|| values.par_iter().map(|&v| point(v)).collect::<Result<_>>())?;

    let name = match param {
        SweepParam::N => "n",
        SweepParam::T => "T",
        SweepParam::Tau => "tau",
    };
    let mut csv = format!("{SWEEP_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            csv,
            "{name},{},{},{},{},{}",
            r.value, r.error, r.oracle, r.estimate, r.copies
        );
    }
    emit(&csv, out, stdout)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("fidest").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn parse_errors_exit_with_one() {
        assert_eq!(run_capture(&["estimate"]).0, 1);
        assert_eq!(run_capture(&["frobnicate"]).0, 1);
        assert_eq!(
            run_capture(&["sweep", "--param", "n", "--values", "x"]).0,
            1
        );
        let (code, out, _) = run_capture(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("estimate"));
    }

    #[test]
    fn sweep_validation() {
        assert_eq!(
            run_capture(&["sweep", "--param", "n", "--values", "8,4"]).0,
            1
        );
        assert_eq!(
            run_capture(&["sweep", "--param", "T", "--values", "2.5"]).0,
            1
        );
        let (code, out, _) = run_capture(&["sweep", "--param", "n", "--values", "4"]);
        assert_eq!(code, 0);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], SWEEP_HEADER);
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with("n,4,"));
    }

    #[test]
    fn missing_files_exit_with_one() {
        let (code, _, err) = run_capture(&["oracle", "/nonexistent/a.txt", "/nonexistent/b.txt"]);
        assert_eq!(code, 1);
        assert!(err.contains("a.txt"));
    }

    #[test]
    fn gen_rejects_bad_dims() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().to_str().unwrap();
        assert_eq!(run_capture(&["gen", "--dim", "3", "--out", path]).0, 1);
        assert_eq!(run_capture(&["gen", "--dim", "16", "--out", path]).0, 1);
    }
}
