//! Machine-readable verification records.
//!
//! Every property check reduces to "measured against bound": inequality
//! checks carry the theoretical bound plus a relative slack for quadrature
//! noise, identity checks carry their residual threshold directly. The
//! uniform pass rule is `measured ≤ bound · (1 + tolerance)`.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerificationRecord {
    /// stable identifier of the property instance, e.g.
    /// `bounds.l1-vs-c2[t=0.10][etap=0.30]`
    pub property: String,
    pub measured: f64,
    pub bound: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub est_error: f64,
    pub runtime_ms: f64,
}

impl VerificationRecord {
    /// An inequality `measured ≤ bound` with relative slack for numerics.
    pub fn inequality(
        property: impl Into<String>,
        measured: f64,
        bound: f64,
        rel_slack: f64,
        est_error: f64,
    ) -> Self {
        let pass = measured.is_finite() && measured <= bound * (1.0 + rel_slack);
        VerificationRecord {
            property: property.into(),
            measured,
            bound,
            tolerance: rel_slack,
            pass,
            est_error,
            runtime_ms: 0.0,
        }
    }

    /// A residual that must stay below an absolute threshold.
    pub fn residual(
        property: impl Into<String>,
        measured: f64,
        threshold: f64,
        est_error: f64,
    ) -> Self {
        let pass = measured.is_finite() && measured <= threshold;
        VerificationRecord {
            property: property.into(),
            measured,
            bound: threshold,
            tolerance: 0.0,
            pass,
            est_error,
            runtime_ms: 0.0,
        }
    }

    /// A check that could not be evaluated; recorded as failure, not a crash.
    pub fn error(property: impl Into<String>, message: &str) -> Self {
        VerificationRecord {
            property: format!("{} [error: {message}]", property.into()),
            measured: f64::NAN,
            bound: 0.0,
            tolerance: 0.0,
            pass: false,
            est_error: f64::NAN,
            runtime_ms: 0.0,
        }
    }
}

pub fn all_pass(records: &[VerificationRecord]) -> bool {
    records.iter().all(|r| r.pass)
}

/// One human-readable line per record.
pub fn summarize(records: &[VerificationRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&format!(
            "[{}] {:<58} measured {:>13.6e}  bound {:>13.6e}\n",
            if r.pass { "PASS" } else { "FAIL" },
            r.property,
            r.measured,
            r.bound,
        ));
    }
    let failed = records.iter().filter(|r| !r.pass).count();
    out.push_str(&format!("{} checks, {} failed\n", records.len(), failed));
    out
}
