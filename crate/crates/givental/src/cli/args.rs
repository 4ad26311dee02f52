//! Flag parsing and dispatch for the `givental` binary.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::compute::cmd_compute;
use super::radius::cmd_estimate_radius;
use super::verify::cmd_verify;
use super::{CliError, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "givental", version, about = "Higher-genus ancestor and descendant potentials of semisimple Frobenius manifolds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write ancestor/descendant tables, the R-matrix snapshot and a manifest.
    Compute(Flags),
    /// Run invariant suites and print one PASS/FAIL line per invariant.
    Verify(Flags),
    /// Fit (ε, C) coefficient bounds per genus.
    EstimateRadius(Flags),
}

/// Shared flags. Set GIVENTAL_THREADS to bound the worker pool.
#[derive(Debug, Clone, Args)]
pub struct Flags {
    /// Shipped spec name (point, p1, p2, a2), a JSON path, or `all` for verify.
    #[arg(long, default_value = "point")]
    pub spec: String,
    #[arg(long, default_value_t = 1)]
    pub genus: u32,
    #[arg(long, default_value_t = 3)]
    pub insertions: usize,
    /// Largest descendant ψ-power per slot.
    #[arg(long = "psi-order", default_value_t = 2)]
    pub psi_order: u32,
    /// Largest kept weight in the Novikov and base-point variables.
    #[arg(long, default_value_t = 4)]
    pub degree: u32,
    /// R-matrix z-order (raised to what the genus and insertion bounds need).
    #[arg(long = "z-order")]
    pub z_order: Option<usize>,
    /// `spec`, `small`, or `t<k>=[scale*]name,...`.
    #[arg(long = "base-point", default_value = "spec")]
    pub base_point: String,
    /// csv or txt.
    #[arg(long, default_value = "txt")]
    pub format: String,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// unitarity, composition, point, genus0, descendants, rationality, specialization, product or all.
    #[arg(long, default_value = "all")]
    pub suite: String,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// R-matrix snapshot to check (verify --suite unitarity).
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
    /// Table from an earlier compute (estimate-radius).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// ancestor, descendant or both.
    #[arg(long, default_value = "both")]
    pub potential: String,
}

impl Flags {
    pub fn to_config(&self) -> Result<RunConfig, CliError> {
        Ok(RunConfig {
            spec: self.spec.clone(),
            genus: self.genus,
            insertions: self.insertions,
            psi_order: self.psi_order,
            degree: self.degree,
            z_order: self.z_order,
            base_point: self.base_point.parse()?,
            format: self.format.parse()?,
            out: self.out.clone(),
            suite: self.suite.parse()?,
            seed: self.seed,
            snapshot: self.snapshot.clone(),
            input: self.input.clone(),
            potential: self.potential.parse()?,
        })
    }
}

fn dispatch(cli: &Cli, stdout: &mut impl Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Compute(flags) => {
            let artifacts = cmd_compute(&flags.to_config()?)?;
            for f in &artifacts.files {
                writeln!(stdout, "wrote {}", f.display())?;
            }
            Ok(())
        }
        Command::Verify(flags) => {
            let report = cmd_verify(&flags.to_config()?)?;
            write!(stdout, "{}", report.render())?;
            match report.failures().first() {
                None => Ok(()),
                Some(first) => Err(CliError::VerificationFailed(first.invariant.clone())),
            }
        }
        Command::EstimateRadius(flags) => {
            let config = flags.to_config()?;
            for fit in cmd_estimate_radius(&config)? {
                writeln!(
                    stdout,
                    "genus={} samples={} log_epsilon={:.6} log_c={:.6} max_residual={:.6} divergent={}",
                    fit.genus, fit.samples, fit.log_epsilon, fit.log_c, fit.max_residual, fit.divergent
                )?;
            }
            Ok(())
        }
    }
}

/// Parses `argv`, runs the command and returns the process exit status.
pub fn run<I, T>(argv: I, stdout: &mut impl Write, stderr: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = write!(if code == 0 { stdout as &mut dyn Write } else { stderr as &mut dyn Write }, "{e}");
            return code;
        }
    };
    match dispatch(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error[{}]: {e}", e.exit_code());
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("givental").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn bad_spec_path_exits_with_two() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        let (code, _, err) = run_args(&["compute", "--spec", "/no/such/spec.json", "--out", out]);
        assert_eq!(code, 2);
        assert!(err.contains("parse error"), "{err}");
    }

    #[test]
    fn unknown_flag_and_suite_exit_with_two() {
        assert_eq!(run_args(&["verify", "--bogus"]).0, 2);
        assert_eq!(run_args(&["verify", "--suite", "nope"]).0, 2);
    }

    #[test]
    fn verify_prints_machine_readable_lines() {
        let (code, out, _) = run_args(&["verify", "--suite", "point", "--degree", "2"]);
        assert_eq!(code, 0);
        assert!(out.lines().all(|l| l.starts_with("PASS point ")), "{out}");
        assert_eq!(out.lines().count(), 3);
    }

    #[test]
    fn zero_insertions_is_an_input_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        assert_eq!(run_args(&["compute", "--insertions", "0", "--out", out]).0, 2);
    }

    #[test]
    fn too_little_data_exits_with_three() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        let (code, _, err) = run_args(&["estimate-radius", "--genus", "0", "--out", out, "--potential", "ancestor"]);
        assert_eq!(code, 3, "{err}");
        assert!(err.contains("convergence"), "{err}");
    }
}
