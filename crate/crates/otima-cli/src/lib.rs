//! Command-line front-end for the `otima` interferometry library.
//!
//! The binary reads a line-oriented `key = value` configuration file,
//! resolves the particle species against a material database, runs one scan
//! (interferometer delay, pulse photon number, or detector position) over a
//! single independent axis, and writes a deterministic CSV whose header
//! echoes the complete parameter set. A `verify` subcommand cross-checks the
//! library's closed forms against brute-force quadrature and Monte Carlo
//! references and reports any disagreement through the exit code.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical
//! non-convergence or a degenerate operating point, 4 verification mismatch.

// Validation deliberately writes `!(x > 0.0)` instead of `x <= 0.0`: the
// negated form also rejects NaN. Reference values are written with every
// published decimal digit even where f64 cannot hold them all.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::excessive_precision)]

pub mod config;
pub mod report;
pub mod scan;

use otima::verify::VerifyReport;
use otima::Error;

/// Exit code for a failed run: configuration problems (unreadable or
/// malformed config, out-of-domain parameters) are 2; numerical trouble
/// (non-convergence, singular operating points, degenerate scans with no
/// signal) is 3.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Parse { .. } | Error::Domain(_) | Error::Io(_) => 2,
        Error::Precision(_) | Error::Singular(_) | Error::Degenerate(_) => 3,
    }
}

/// Exit code for a verification report: 0 when every check passed, 4 when
/// any check found a mismatch, 3 when the only failures are checks that did
/// not converge (or were inconclusive) — those are reported distinctly from
/// a genuine disagreement.
pub fn verify_exit_code(report: &VerifyReport) -> i32 {
    if report.passed() {
        0
    } else if report.has_mismatch() {
        4
    } else {
        3
    }
}
