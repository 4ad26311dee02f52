//! Command-line front end: run configuration, the `compute`, `verify` and `estimate-radius`
//! commands, correlator tables and the exit-code contract.
//!
//! Exit codes: 0 success, 1 verification failure, 2 input error, 3 budget exceeded.

pub mod args;
pub mod compute;
pub mod radius;
pub mod records;
pub mod verify;

use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::convergence::ConvergenceError;
use crate::fock::FockError;
use crate::frobenius::{BasePointEntry, FrobeniusError, FrobeniusSpec};
use crate::potentials::PotentialsError;
use crate::rmatrix::RMatrixError;
use crate::series::cyclotomic::parse_rational;
use crate::series::{Rational, SeriesError};

pub use args::{run, Cli, Command};
pub use compute::{cmd_compute, ComputeArtifacts};
pub use radius::cmd_estimate_radius;
pub use records::{emit_store, load_store, Format};
pub use verify::{cmd_verify, Check, Suite, VerifyReport};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input.parse: {0}")]
    Input(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("frobenius: {0}")]
    Frobenius(#[from] FrobeniusError),
    #[error("rmatrix: {0}")]
    RMatrix(#[from] RMatrixError),
    #[error("fock: {0}")]
    Fock(#[from] FockError),
    #[error("potentials: {0}")]
    Potentials(#[from] PotentialsError),
    #[error("convergence: {0}")]
    Convergence(#[from] ConvergenceError),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
}

fn series_code(e: &SeriesError) -> i32 {
    match e {
        SeriesError::Parse(_) | SeriesError::InvalidRing(_) => 2,
        SeriesError::ValuationLoss(_) | SeriesError::ExtensionTooSmall(_) => 3,
        _ => 1,
    }
}

fn frobenius_code(e: &FrobeniusError) -> i32 {
    match e {
        FrobeniusError::Inconclusive(_) | FrobeniusError::InsufficientOrder | FrobeniusError::ConvergenceStall => 3,
        FrobeniusError::Series(s) => series_code(s),
        _ => 2,
    }
}

fn rmatrix_code(e: &RMatrixError) -> i32 {
    match e {
        RMatrixError::Parse(_) | RMatrixError::NotSemisimple(..) => 2,
        RMatrixError::OrderBudgetExceeded(_) => 3,
        RMatrixError::Series(s) => series_code(s),
    }
}

fn fock_code(e: &FockError) -> i32 {
    match e {
        FockError::Parse(_) => 2,
        FockError::BoundsExceeded(_) | FockError::WindowTooSmall(_) => 3,
        FockError::Series(s) => series_code(s),
        _ => 1,
    }
}

fn potentials_code(e: &PotentialsError) -> i32 {
    match e {
        PotentialsError::InsufficientOrder(_) | PotentialsError::BoundsExceeded(_) | PotentialsError::TruncationTooCoarse(_) => 3,
        PotentialsError::InvalidShift(_) => 2,
        PotentialsError::Frobenius(f) => frobenius_code(f),
        PotentialsError::RMatrix(r) => rmatrix_code(r),
        PotentialsError::Fock(f) => fock_code(f),
        PotentialsError::Series(s) => series_code(s),
        PotentialsError::ShiftMismatch | PotentialsError::NonIntegrable(_) => 1,
    }
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::VerificationFailed(_) => 1,
            CliError::Frobenius(e) => frobenius_code(e),
            CliError::RMatrix(e) => rmatrix_code(e),
            CliError::Fock(e) => fock_code(e),
            CliError::Potentials(e) => potentials_code(e),
            CliError::Convergence(ConvergenceError::InsufficientData(_)) => 3,
            CliError::Convergence(ConvergenceError::CounterexampleFound(_)) => 1,
        }
    }
}

/// Which formal base point the pipeline expands around.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BasePoint {
    /// The base point recorded in the Frobenius manifold file.
    FromSpec,
    /// t = 0 apart from the Novikov variables.
    Small,
    Formal(Vec<BasePointEntry>),
}

impl FromStr for BasePoint {
    type Err = CliError;

    /// `spec`, `small`, or comma-separated `t<k>=[<scale>*]<parameter>` items.
    fn from_str(s: &str) -> Result<Self, CliError> {
        let s = s.trim();
        match s {
            "spec" => return Ok(BasePoint::FromSpec),
            "small" | "0" => return Ok(BasePoint::Small),
            _ => {}
        }
        let bad = |item: &str| CliError::Input(format!("base-point item '{item}' is not of the form t<k>=[scale*]name"));
        let mut entries = Vec::new();
        for item in s.split(',') {
            let (lhs, rhs) = item.split_once('=').ok_or_else(|| bad(item))?;
            let coordinate: usize = lhs.trim().strip_prefix('t').ok_or_else(|| bad(item))?.parse().map_err(|_| bad(item))?;
            let (scale, parameter) = match rhs.split_once('*') {
                Some((c, p)) => (parse_rational(c).map_err(|_| bad(item))?, p.trim()),
                None => (Rational::from_integer(1.into()), rhs.trim()),
            };
            if parameter.is_empty() || !parameter.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(bad(item));
            }
            entries.push(BasePointEntry { coordinate, scale, parameter: parameter.to_string() });
        }
        Ok(BasePoint::Formal(entries))
    }
}

impl BasePoint {
    /// The FrobeniusSpec with this base point substituted; the result is revalidated.
    pub fn apply(&self, spec: &FrobeniusSpec) -> Result<FrobeniusSpec, CliError> {
        let mut out = spec.clone();
        match self {
            BasePoint::FromSpec => return Ok(out),
            BasePoint::Small => out.base_point.clear(),
            BasePoint::Formal(entries) => out.base_point = entries.clone(),
        }
        out.small_locus = out.base_point.is_empty();
        out.validate()?;
        Ok(out)
    }
}

/// Everything a command needs; identical configs give byte-identical outputs.
#[derive(Clone, Debug)]
pub struct RunConfig {
    /// Shipped spec name or path to a JSON document.
    pub spec: String,
    pub genus: u32,
    pub insertions: usize,
    /// Largest descendant ψ-power per slot.
    pub psi_order: u32,
    /// Terms of ring weight ≤ degree are kept.
    pub degree: u32,
    /// Requested R-matrix z-order; raised to what quantization needs.
    pub z_order: Option<usize>,
    pub base_point: BasePoint,
    pub format: Format,
    pub out: PathBuf,
    pub suite: Suite,
    pub seed: u64,
    /// R-matrix snapshot to check instead of a freshly solved one.
    pub snapshot: Option<PathBuf>,
    /// Correlator table produced by an earlier `compute`.
    pub input: Option<PathBuf>,
    pub potential: PotentialKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PotentialKind {
    Ancestor,
    Descendant,
    Both,
}

impl FromStr for PotentialKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "ancestor" => Ok(PotentialKind::Ancestor),
            "descendant" => Ok(PotentialKind::Descendant),
            "both" => Ok(PotentialKind::Both),
            other => Err(CliError::Input(format!("unknown potential '{other}'"))),
        }
    }
}

impl PotentialKind {
    pub fn ancestors(self) -> bool {
        self != PotentialKind::Descendant
    }

    pub fn descendants(self) -> bool {
        self != PotentialKind::Ancestor
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            spec: "point".into(),
            genus: 1,
            insertions: 3,
            psi_order: 2,
            degree: 4,
            z_order: None,
            base_point: BasePoint::FromSpec,
            format: Format::Txt,
            out: PathBuf::from("out"),
            suite: Suite::All,
            seed: 7,
            snapshot: None,
            input: None,
            potential: PotentialKind::Both,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.insertions == 0 {
            return Err(CliError::Input("--insertions must be positive".into()));
        }
        if self.z_order == Some(0) {
            return Err(CliError::Input("--z-order must be positive".into()));
        }
        Ok(())
    }

    /// Ring precision: terms of weight below degree + 1 are exact.
    pub fn precision(&self) -> Rational {
        Rational::from_integer((self.degree as i64 + 1).into())
    }

    /// The FrobeniusSpec with the configured base point applied.
    pub fn load_spec(&self) -> Result<FrobeniusSpec, CliError> {
        self.base_point.apply(&FrobeniusSpec::resolve(&self.spec)?)
    }
}
