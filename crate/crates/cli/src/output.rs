//! CSV and JSON emission. Numbers use the shortest decimal string that
//! parses back to the same `f64`, so reruns are byte-identical and tables
//! reload losslessly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

/// Documented CSV headers. Headers containing `<i>` expand to one column per
/// sender, `i = 1..=n`.
pub mod schema {
    pub const CONDITIONS: &[&str] = &["condition", "holds", "margin", "checked", "violations"];
    pub const WITNESSES: &[&str] = &["condition", "sender", "context", "lhs", "rhs"];
    pub const PROFILE: &[&str] = &["state", "revealed", "realization", "sender", "rate"];
    pub const PAYOFFS: &[&str] = &["party", "expected_visits", "payoff"];
    pub const PRICES: &[&str] = &["sender", "price", "attention_payment"];
    pub const GAUSSIAN_RATES: &[&str] = &[
        "sender",
        "precision",
        "rate",
        "expected_visits",
        "discrete_feasible",
    ];
    pub const GAUSSIAN_SUMMARY: &[&str] = &["quantity", "value"];
    pub const REPLICATIONS: &[&str] = &[
        "replication",
        "rounds",
        "visits_<i>",
        "utility",
        "cost",
        "payoff",
    ];
    pub const SUMMARY: &[&str] = &["quantity", "theory", "mean", "standard_error", "z_score"];
    pub const STOPPING_TIMES: &[&str] = &["rounds", "count"];
    pub const LARGE_N: &[&str] = &["n", "decision_value", "attention_cost", "receiver_payoff"];
    pub const ALPHA: &[&str] = &["pc", "alpha", "payoff", "threshold"];
    pub const SYMMETRY: &[&str] = &["p_<i>", "payoff", "symmetric"];
    pub const BRIDGE: &[&str] = &[
        "time",
        "analytic_variance",
        "empirical_mse",
        "standard_error",
    ];
    pub const LARGE_MARKET: &[&str] = &[
        "n",
        "residual_value",
        "residual_se",
        "scaled_residual",
        "decision_error",
        "decision_error_se",
        "exact",
    ];

    /// Expands `<i>` columns for `n` senders.
    pub fn expand(header: &[&str], n: usize) -> Vec<String> {
        let mut out = Vec::new();
        for col in header {
            if col.contains("<i>") {
                out.extend((1..=n).map(|i| col.replace("<i>", &i.to_string())));
            } else {
                out.push(col.to_string());
            }
        }
        out
    }
}

pub fn num(x: f64) -> String {
    x.to_string()
}

/// An output directory that remembers what was written to it.
#[derive(Debug)]
pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<OutDir, CliError> {
        fs::create_dir_all(root).map_err(|source| CliError::Io {
            path: root.to_path_buf(),
            source,
        })?;
        Ok(OutDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// File names written so far, in order.
    pub fn written(&self) -> &[String] {
        &self.written
    }

    pub fn csv(
        &mut self,
        name: &str,
        header: &[String],
        rows: &[Vec<String>],
    ) -> Result<(), CliError> {
        let path = self.root.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush().map_err(|source| CliError::Io { path, source })?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let path = self.root.join(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).map_err(|source| CliError::Io { path, source })?;
        self.written.push(name.to_string());
        Ok(())
    }
}

/// Left-aligned plain-text table for the terminal.
pub fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (k, cell) in row.iter().enumerate() {
            width[k] = width[k].max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(k, c)| format!("{c:<w$}", w = width[k]))
            .collect();
        padded.join("  ").trim_end().to_string()
    };
    let mut out = line(header.to_vec());
    out.push('\n');
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}
