//! Report assembly and the two output formats. Reports are deterministic:
//! given the same model, suite, seed and tolerances, the emitted bytes are
//! identical. Timing therefore never enters the report; the driver prints it
//! to stderr.

use std::fmt::Write as _;

/// Check outcome, ordered so that merging keeps the worst verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Verdict {
    Pass,
    Warning,
    Skipped,
    Indeterminate,
    Fail,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Warning => "warning",
            Verdict::Skipped => "skipped",
            Verdict::Indeterminate => "indeterminate",
            Verdict::Fail => "fail",
        }
    }
}

#[derive(Clone, Debug)]
pub struct CheckRecord {
    pub name: &'static str,
    pub verdict: Verdict,
    pub max: Option<f64>,
    pub mean: Option<f64>,
    pub note: String,
    /// Witness point with both values, present on sampled disagreement.
    pub witness: Option<(Vec<f64>, f64, f64)>,
}

impl CheckRecord {
    pub fn new(name: &str) -> Self {
        CheckRecord {
            name: intern(name),
            verdict: Verdict::Pass,
            max: None,
            mean: None,
            note: String::new(),
            witness: None,
        }
    }

    pub fn skipped(name: &str, why: &str) -> Self {
        let mut r = CheckRecord::new(name);
        r.verdict = Verdict::Skipped;
        r.note = why.to_string();
        r
    }
}

// check names come from the static catalog; map borrowed names back to it
fn intern(name: &str) -> &'static str {
    crate::checks::CATALOG
        .iter()
        .find(|&&c| c == name)
        .copied()
        .unwrap_or("unknown")
}

pub struct Report {
    pub records: Vec<CheckRecord>,
    pub seed: u64,
    pub tol: f64,
    pub samples: usize,
}

impl Report {
    /// Exit status: 0 all pass, 1 any fail, 3 indeterminate but no fail.
    pub fn exit_code(&self) -> i32 {
        let any = |v: Verdict| self.records.iter().any(|r| r.verdict == v);
        if any(Verdict::Fail) {
            1
        } else if any(Verdict::Indeterminate) {
            3
        } else {
            0
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Table => self.render_table(),
            Format::Records => self.render_records(),
        }
    }

    fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<20} {:<13} {:>12} {:>12}  note",
            "check", "verdict", "max", "mean"
        );
        let _ = writeln!(out, "{}", "-".repeat(96));
        for r in &self.records {
            let max = r.max.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "-".into());
            let mean = r
                .mean
                .map(|v| format!("{v:.3e}"))
                .unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "{:<20} {:<13} {:>12} {:>12}  {}",
                r.name,
                r.verdict.label(),
                max,
                mean,
                r.note
            );
            if let Some((point, lhs, rhs)) = &r.witness {
                let coords: Vec<String> = point.iter().map(|x| format!("{x:.6}")).collect();
                let _ = writeln!(
                    out,
                    "{:<20} witness at ({}) lhs {:.6e} rhs {:.6e}",
                    "",
                    coords.join(", "),
                    lhs,
                    rhs
                );
            }
        }
        let _ = writeln!(
            out,
            "seed {} tol {:e} samples {}",
            self.seed, self.tol, self.samples
        );
        out
    }

    fn render_records(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let _ = write!(out, "check={} verdict={}", r.name, r.verdict.label());
            if let Some(v) = r.max {
                let _ = write!(out, " max={v:e}");
            }
            if let Some(v) = r.mean {
                let _ = write!(out, " mean={v:e}");
            }
            let _ = write!(out, " seed={} tol={:e} samples={}", self.seed, self.tol, self.samples);
            if let Some((point, lhs, rhs)) = &r.witness {
                let coords: Vec<String> = point.iter().map(|x| format!("{x:e}")).collect();
                let _ = write!(out, " witness=({}) lhs={lhs:e} rhs={rhs:e}", coords.join(","));
            }
            if !r.note.is_empty() {
                let _ = write!(out, " note=\"{}\"", r.note);
            }
            let _ = writeln!(out);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Records,
}
