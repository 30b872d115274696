//! The `matmoment` command line tool.
//!
//! Exit codes: 0 success, 1 usage/parse/parameter error, 2 mathematical
//! negative (unsolvable problem or failed verification).

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::error::Error;
use crate::extensions::CanonicalParameter;
use crate::io;
use crate::linalg::HermMatrix;
use crate::moments::{gen_random_measure, moments_of, MomentSequence};
use crate::solutions::{self, VerificationReport};
use crate::solvability::{self, ProblemCase, SolvabilityReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NEGATIVE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "matmoment",
    version,
    about = "Truncated matricial moment problems on [a, b]"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide solvability and print every condition.
    Check { problem: PathBuf },
    /// Construct a solution measure for a solvable problem.
    Solve {
        problem: PathBuf,
        /// Matrix K (0 ⪯ K ⪯ I) on the defect support, as a JSON matrix file.
        #[arg(long, conflicts_with = "scalar_k")]
        param_k: Option<PathBuf>,
        /// K = t·I; default 0.5.
        #[arg(long)]
        scalar_k: Option<f64>,
        /// Matrix T (0 ⪯ T ⪯ I) choosing the next moment, odd number of moments only.
        #[arg(long, conflicts_with = "scalar_t")]
        param_t: Option<PathBuf>,
        /// T = t·I; default 0.5.
        #[arg(long)]
        scalar_t: Option<f64>,
        /// Measure output file; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Tolerance of the verification printed after solving.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Compare the moments of a measure with a problem.
    Verify {
        measure: PathBuf,
        problem: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Write the moments of a seeded random measure.
    #[command(allow_negative_numbers = true)]
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "N", default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        atoms: usize,
        #[arg(long, default_value_t = 0.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        /// Index of the last moment written.
        #[arg(long, default_value_t = 2)]
        l: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        measure_out: Option<PathBuf>,
    },
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

fn matrix(m: &HermMatrix) -> String {
    io::to_json_string(&io::matrix_to_rows(m.as_matrix()))
        .map(|s| s.trim_end().to_string())
        .unwrap_or_default()
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Unsolvable { .. } | Error::Internal(_) | Error::IllDefinedOperator { .. } => {
            EXIT_NEGATIVE
        }
        _ => EXIT_USAGE,
    }
}

/// Runs the tool on `args` (including the program name) and returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Check { problem } => cmd_check(&problem, out),
        Command::Solve {
            problem,
            param_k,
            scalar_k,
            param_t,
            scalar_t,
            out: out_path,
            tol,
        } => cmd_solve(
            &problem,
            parameter(param_k, scalar_k),
            parameter(param_t, scalar_t),
            out_path,
            tol,
            out,
        ),
        Command::Verify {
            measure,
            problem,
            tol,
        } => cmd_verify(&measure, &problem, tol, out),
        Command::Gen {
            seed,
            n,
            atoms,
            a,
            b,
            l,
            out: out_path,
            measure_out,
        } => cmd_gen(seed, n, atoms, a, b, l, &out_path, measure_out, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

enum ParamSource {
    File(PathBuf),
    Scalar(f64),
}

fn parameter(file: Option<PathBuf>, scalar: Option<f64>) -> ParamSource {
    match (file, scalar) {
        (Some(p), _) => ParamSource::File(p),
        (None, Some(t)) => ParamSource::Scalar(t),
        (None, None) => ParamSource::Scalar(0.5),
    }
}

fn load_parameter(src: ParamSource) -> crate::Result<CanonicalParameter> {
    match src {
        ParamSource::File(p) => Ok(CanonicalParameter::Matrix(io::read_parameter(&p)?)),
        ParamSource::Scalar(t) => {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidParameter(format!(
                    "scalar parameter {t} outside [0, 1]"
                )));
            }
            Ok(CanonicalParameter::Scaled(t))
        }
    }
}

fn print_report(
    seq: &MomentSequence,
    report: &SolvabilityReport,
    out: &mut dyn Write,
) -> std::io::Result<()> {
    writeln!(
        out,
        "case: {} (l = {}, N = {}, interval [{}, {}])",
        report.case,
        seq.l(),
        seq.block_size(),
        sci(seq.a()),
        sci(seq.b())
    )?;
    for c in &report.conditions {
        let flag = if c.passed { "PASS" } else { "FAIL" };
        writeln!(out, "[{flag}] {:<22} {} {}", c.name, c.label, sci(c.value))?;
    }
    if let Some(v) = report.cdfk_solvable {
        writeln!(
            out,
            "block Hankel positivity: {} (agreement: {})",
            if v { "holds" } else { "fails" },
            if report.criteria_agreement { "yes" } else { "NO" }
        )?;
    }
    if let Some(data) = &report.even_case_data {
        writeln!(out, "S_min = {}", matrix(&data.s_min))?;
        writeln!(out, "S_max = {}", matrix(&data.s_max))?;
    }
    Ok(())
}

fn cmd_check(problem: &std::path::Path, out: &mut dyn Write) -> crate::Result<i32> {
    let seq = io::read_problem(problem)?;
    let report = solvability::check(&seq)?;
    print_report(&seq, &report, out)?;
    if report.solvable && report.case == ProblemCase::Odd {
        let interval = solutions::odd_interval(&seq)?;
        writeln!(
            out,
            "defect dimension: {} ({})",
            interval.support_dim(),
            if interval.determinate() {
                "determinate"
            } else {
                "indeterminate"
            }
        )?;
    }
    if report.solvable {
        writeln!(out, "verdict: solvable")?;
        Ok(EXIT_OK)
    } else {
        writeln!(out, "verdict: unsolvable ({})", report.failed_conditions.join(", "))?;
        Ok(EXIT_NEGATIVE)
    }
}

fn print_verification(report: &VerificationReport, tol: f64, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "{:>4}  {:>24}  {:>24}  result", "n", "max deviation", "allowed")?;
    for r in &report.residuals {
        writeln!(
            out,
            "{:>4}  {:>24}  {:>24}  {}",
            r.n,
            sci(r.max_deviation),
            sci(r.allowed),
            if r.passed() { "PASS" } else { "FAIL" }
        )?;
    }
    writeln!(out, "support in [a, b]: {}", if report.support_ok { "PASS" } else { "FAIL" })?;
    writeln!(out, "weights PSD: {}", if report.weights_psd { "PASS" } else { "FAIL" })?;
    writeln!(
        out,
        "verification (tol {}): {}",
        sci(tol),
        if report.passed { "PASS" } else { "FAIL" }
    )
}

fn cmd_solve(
    problem: &std::path::Path,
    k: ParamSource,
    t: ParamSource,
    out_path: Option<PathBuf>,
    tol: f64,
    out: &mut dyn Write,
) -> crate::Result<i32> {
    let seq = io::read_problem(problem)?;
    let k = load_parameter(k)?;
    let t = load_parameter(t)?;
    let report = solvability::check(&seq)?;
    if !report.solvable {
        print_report(&seq, &report, out)?;
        return Err(Error::Unsolvable {
            failed: report.failed_conditions,
        });
    }
    let measure = solutions::solve(&seq, &k, &t)?;
    match &out_path {
        Some(p) => io::write_measure(p, &measure)?,
        None => write!(out, "{}", io::to_json_string(&io::MeasureFile::from_measure(&measure))?)?,
    }
    let verification = solutions::verify(&measure, &seq, tol)?;
    writeln!(out, "atoms: {}", measure.len())?;
    print_verification(&verification, tol, out)?;
    Ok(if verification.passed {
        EXIT_OK
    } else {
        EXIT_NEGATIVE
    })
}

fn cmd_verify(
    measure: &std::path::Path,
    problem: &std::path::Path,
    tol: f64,
    out: &mut dyn Write,
) -> crate::Result<i32> {
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {tol} must be >= 0")));
    }
    let measure = io::read_measure(measure)?;
    let seq = io::read_problem(problem)?;
    let report = solutions::verify(&measure, &seq, tol)?;
    print_verification(&report, tol, out)?;
    Ok(if report.passed { EXIT_OK } else { EXIT_NEGATIVE })
}

#[allow(clippy::too_many_arguments)]
fn cmd_gen(
    seed: u64,
    n: usize,
    atoms: usize,
    a: f64,
    b: f64,
    l: usize,
    out_path: &std::path::Path,
    measure_out: Option<PathBuf>,
    out: &mut dyn Write,
) -> crate::Result<i32> {
    let measure = gen_random_measure(seed, n, atoms, a, b)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let seq = moments_of(&measure, l);
    io::write_problem(out_path, &seq)?;
    if let Some(p) = measure_out {
        io::write_measure(&p, &measure)?;
    }
    writeln!(
        out,
        "wrote S_0..S_{l} of a {atoms}-atom {n}x{n} measure on [{}, {}]",
        sci(a),
        sci(b)
    )?;
    Ok(EXIT_OK)
}
