//! Batch driver for the qbaxter verification suites.
//!
//! Each subcommand resolves a [`config::RunConfig`], runs one suite from [`checks`] and
//! produces a [`report::Report`].

pub mod checks;
pub mod config;
pub mod report;

use config::RunConfig;
use report::Report;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Check {
    EvalS2,
    VerifyS2,
    VerifyKernelIdentity,
    VerifyTheorem2,
    VerifyLemmasQ,
    VerifyResidueSeries,
    VerifyQCommutativity,
    VerifyMqCommutation,
    VerifyEigenfunctionN2,
    All,
}

/// Runs one check on a validated configuration.
pub fn run(check: Check, cfg: &RunConfig) -> Report {
    match check {
        Check::EvalS2 => checks::eval_s2(cfg),
        Check::VerifyS2 => checks::verify_s2(cfg),
        Check::VerifyKernelIdentity => checks::verify_kernel_identity(cfg),
        Check::VerifyTheorem2 => checks::verify_theorem2_check(cfg),
        Check::VerifyLemmasQ => checks::verify_lemmas_q(cfg),
        Check::VerifyResidueSeries => checks::verify_residue_series(cfg),
        Check::VerifyQCommutativity => checks::verify_q_commutativity(cfg),
        Check::VerifyMqCommutation => checks::verify_mq(cfg),
        Check::VerifyEigenfunctionN2 => checks::verify_eigenfunction(cfg),
        Check::All => checks::all(cfg),
    }
}

/// Writes `contents` through a temporary file in the target directory and renames it into place.
pub fn write_atomic(path: &std::path::Path, contents: &str) -> std::io::Result<()> {
    use std::io::Write;
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => std::path::Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
