//! Report types shared by the verification entry points and the CLI.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::verify::BracketSample;

/// One named check against a numeric target.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub target: f64,
    pub estimate: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Pass when |estimate − target| ≤ tolerance.
    pub fn absolute(name: impl Into<String>, target: f64, estimate: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            target,
            estimate,
            tolerance,
            pass: (estimate - target).abs() <= tolerance,
        }
    }

    /// Pass when estimate ≥ target (e.g. agreement fractions).
    pub fn at_least(name: impl Into<String>, target: f64, estimate: f64) -> Self {
        Check {
            name: name.into(),
            target,
            estimate,
            tolerance: 0.0,
            pass: estimate >= target,
        }
    }

    /// Pass when estimate ≤ target (e.g. residual bounds).
    pub fn at_most(name: impl Into<String>, target: f64, estimate: f64) -> Self {
        Check {
            name: name.into(),
            target,
            estimate,
            tolerance: 0.0,
            pass: estimate <= target,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct CheckReport {
    pub checks: Vec<Check>,
}

impl CheckReport {
    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> crate::error::Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// CSV of bracket estimates over time: `t,plain[,extended]`.
pub fn write_bracket_series_csv<W: Write>(
    w: &mut W,
    series: &[BracketSample],
) -> std::io::Result<()> {
    let has_extended = series.iter().any(|s| s.extended.is_some());
    if has_extended {
        writeln!(w, "t,plain,extended")?;
        for s in series {
            writeln!(w, "{},{},{}", s.t, s.plain, s.extended.unwrap_or(f64::NAN))?;
        }
    } else {
        writeln!(w, "t,plain")?;
        for s in series {
            writeln!(w, "{},{}", s.t, s.plain)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_constructors_set_pass() {
        assert!(Check::absolute("a", 1.0, 1.0005, 1e-3).pass);
        assert!(!Check::absolute("a", 1.0, 1.01, 1e-3).pass);
        assert!(Check::at_least("b", 0.95, 0.97).pass);
        assert!(Check::at_most("c", 1e-10, 1e-12).pass);
        let mut report = CheckReport::default();
        report.push(Check::absolute("a", 0.0, 0.0, 0.0));
        assert!(report.all_pass());
        let json = report.to_json().unwrap();
        assert!(json.contains("\"pass\": true"));
    }
}
